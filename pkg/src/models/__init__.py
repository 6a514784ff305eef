"""Networks, losses, ensemble trainers, metrics and data handling."""

from .boosting import EddeConfig, train_edde
from .baselines import BaselineConfig, train_baseline
from .ensemble import Ensemble, ensemble_predict

__all__ = ['EddeConfig', 'train_edde', 'BaselineConfig', 'train_baseline', 'Ensemble', 'ensemble_predict']
