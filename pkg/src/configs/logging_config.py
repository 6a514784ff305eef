import logging
from pathlib import Path

LOG_FORMAT = '%(asctime)s %(levelname)s %(name)s: %(message)s'


def configure_logging(level='INFO', log_file=None):
    '''
    Route log records to stderr and, optionally, to a log file (appending).
    :param level: Level name or number
    :param log_file: Optional path of the run log
    '''
    if isinstance(level, str):
        numeric = logging.getLevelName(level.upper())
        if not isinstance(numeric, int):
            raise ValueError(f"Unknown log level {level!r}")
        level = numeric
    handlers = [logging.StreamHandler()]
    if log_file is not None:
        Path(log_file).parent.mkdir(parents=True, exist_ok=True)
        handlers.append(logging.FileHandler(filename=log_file, mode='a', encoding='utf-8'))
    # Remove handlers installed by an earlier run in the same process
    for handler in logging.root.handlers[:]:
        logging.root.removeHandler(handler)
        handler.close()
    logging.basicConfig(level=level, handlers=handlers, format=LOG_FORMAT)
