from pathlib import Path
from datetime import datetime
import csv

COLUMNS = ['Timestamp', 'Method', 'Round', 'Alpha', 'Skipped', 'Epochs', 'FinalLoss', 'Seconds']


class RoundLogger:
    """Append-only CSV log with one row per boosting round, baseline member or snapshot."""

    def __init__(self, filepath=None, log_dir="logs"):
        if filepath is None:
            timestamp = datetime.now().strftime("%Y%m%d_%H%M%S")
            filepath = Path(log_dir) / f"rounds_{timestamp}.csv"
        self.filepath = Path(filepath)
        self.filepath.parent.mkdir(parents=True, exist_ok=True)

        with open(self.filepath, 'w', newline='') as f:
            writer = csv.writer(f)
            writer.writerow(COLUMNS)

    def log_round(self, method: str, record):
        final_loss = record.final_loss
        with open(self.filepath, 'a', newline='') as f:
            writer = csv.writer(f)
            writer.writerow([
                datetime.now().isoformat(),
                method,
                record.round,
                repr(float(record.alpha)),
                int(record.skipped),
                record.epochs,
                '' if final_loss is None else repr(float(final_loss)),
                f"{record.seconds:.3f}",
            ])
