"""Report writers. Tables go through pandas; documents are JSON."""

import json
import logging
from pathlib import Path
from typing import Iterable, List, Optional, Sequence

import numpy as np
import pandas as pd

from src.models.ensemble import Ensemble
from src.models.metrics import DiversityReport

logger = logging.getLogger(__name__)

SUMMARY_COLUMNS = ['method', 'members', 'total_epochs', 'ensemble_accuracy', 'average_accuracy',
                   'increased_accuracy', 'div_h', 'bias', 'variance']
COMPARE_COLUMNS = ['method', 'status', 'total_epochs', 'ensemble_accuracy', 'average_accuracy',
                   'div_h', 'bias', 'variance', 'error']
TRAJECTORY_COLUMNS = ['method', 'members', 'cumulative_epochs', 'ensemble_accuracy']
BETA_TRACE_COLUMNS = ['beta', 'acc_seen', 'acc_unseen', 'gap']
SWEEP_COLUMNS = ['gamma', 'ensemble_accuracy', 'average_accuracy', 'increased_accuracy', 'div_h']


def write_json(path, document) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(document, f, indent=2)
        f.write('\n')
    logger.info(f"Wrote {path}")
    return path


def write_table(path, rows: Sequence[dict], columns: Sequence[str]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame(list(rows), columns=list(columns)).to_csv(path, index=False)
    logger.info(f"Wrote {path}")
    return path


def write_rows(directory, stem: str, rows: Sequence[dict], columns: Sequence[str],
               formats: Iterable[str] = ('json', 'csv')) -> List[Path]:
    """`<stem>.csv` and/or `<stem>.json` holding the same rows."""
    directory = Path(directory)
    written = []
    if 'csv' in formats:
        written.append(write_table(directory / f"{stem}.csv", rows, columns))
    if 'json' in formats:
        written.append(write_json(directory / f"{stem}.json", [{c: row.get(c) for c in columns} for row in rows]))
    return written


def summary_row(ens: Ensemble, report: DiversityReport, bias: Optional[float],
                variance: Optional[float]) -> dict:
    return {
        'method': ens.method,
        'members': len(ens.members),
        'total_epochs': ens.total_epochs,
        'ensemble_accuracy': report.ensemble_accuracy,
        'average_accuracy': report.average_accuracy,
        'increased_accuracy': report.increased_accuracy,
        'div_h': report.div_h,
        'bias': bias,
        'variance': variance,
    }


def member_rows(ens: Ensemble, report: DiversityReport) -> List[dict]:
    return [
        {'model': model_id, 'round': m.round, 'alpha': m.alpha, 'accuracy': acc}
        for model_id, m, acc in zip(report.model_ids, ens.members, report.member_accuracies)
    ]


def write_metrics(directory, ens: Ensemble, report: DiversityReport, bias=None, variance=None) -> Path:
    directory = Path(directory)
    write_table(directory / 'members.csv', member_rows(ens, report), ['model', 'round', 'alpha', 'accuracy'])
    return write_table(directory / 'metrics.csv', [summary_row(ens, report, bias, variance)], SUMMARY_COLUMNS)


def write_similarity(directory, report: DiversityReport) -> List[Path]:
    """T x T matrix with a header of model ids, plus a long (model_a, model_b, similarity) table."""
    directory = Path(directory)
    ids = report.model_ids
    matrix_path = write_table(directory / 'similarity.csv',
                              [dict(zip(ids, row)) for row in np.asarray(report.pairwise).tolist()], ids)
    long_rows = [{'model_a': a, 'model_b': b, 'similarity': float(report.pairwise[i, j])}
                 for i, a in enumerate(ids) for j, b in enumerate(ids)]
    long_path = write_table(directory / 'similarity_long.csv', long_rows, ['model_a', 'model_b', 'similarity'])
    return [matrix_path, long_path]


def run_report(config: dict, ens: Ensemble, report: DiversityReport, bias, variance,
               seed: int, version: str) -> dict:
    """Everything needed to reproduce and audit a training run (no wall-clock values)."""
    return {
        'software_version': version,
        'seed': seed,
        'config': config,
        'method': ens.method,
        'gamma': ens.gamma,
        'beta': ens.beta,
        'skipped_rounds': list(ens.skipped_rounds),
        'notes': list(ens.notes),
        'rounds': [r.to_dict() for r in ens.rounds],
        'beta_trace': list(ens.beta_trace),
        'test_metrics': dict(report.to_dict(), bias=bias, variance=variance),
    }
