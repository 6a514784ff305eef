import logging
from dataclasses import asdict, dataclass, replace
from enum import Enum
from pathlib import Path
from typing import List, Optional, Tuple

from src import __version__
from src.configs.loader import RunConfig
from src.models.baselines import BaselineConfig, train_baseline
from src.models.boosting import EddeConfig, train_edde
from src.models.data_logger import RoundLogger
from src.models.datasets import Dataset, load_csv, load_idx, make_blobs, normalize, split_dataset, write_csv
from src.models.ensemble import Ensemble
from src.models.errors import EddeError, ValidationError
from src.models.metrics import (DiversityReport, PredictionMatrix, accuracy_summary,
                                bias_variance_report, prefix_accuracies)
from src.models.persistence import load_ensemble, save_ensemble
from src.models.training import predict_proba
from src.models.transfer import BetaSearchResult, beta_search
from src.views import reports

logger = logging.getLogger(__name__)

ENSEMBLE_DIR = "ensemble"
TEST_FILE = "test.csv"


@dataclass
class DataSplit:
    train: Dataset
    test: Dataset
    raw_test: Dataset


@dataclass
class Evaluation:
    report: DiversityReport
    bias: Optional[float] = None
    variance: Optional[float] = None


def _echo(value):
    """Plain JSON-ready copy of a (nested) config dataclass."""
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, dict):
        return {k: _echo(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_echo(v) for v in value]
    return value


def describe_config(cfg) -> dict:
    return _echo(asdict(cfg))


def evaluate_ensemble(ens: Ensemble, test: Dataset) -> Evaluation:
    ens.check_non_empty()
    preds = [PredictionMatrix(predict_proba(m.net, test), f"h{m.round}") for m in ens.members]
    report = accuracy_summary(preds, ens.alphas, test.labels)
    if len(preds) < 2:
        return Evaluation(report)
    bias, variance = bias_variance_report(preds, test.labels)
    return Evaluation(report, bias, variance)


def load_saved(ensemble_dir, data_path, label_column: str = "label"):
    """Saved ensemble plus the evaluation data, normalized with the saved training statistics."""
    saved = load_ensemble(ensemble_dir)
    test = load_csv(data_path, label_column, label_names=saved.label_names or None)
    if saved.feature_means is not None:
        test = normalize(test, replace(test, feature_means=saved.feature_means, feature_stds=saved.feature_stds))
    return saved, test


class RunController:
    """One method per command; every command writes into the configured output directory."""

    def __init__(self, config: RunConfig, output_dir=None):
        self.config = config
        self.output_dir = Path(output_dir) if output_dir is not None else config.output_dir

    def load_data(self) -> DataSplit:
        data, seed = self.config['data'], self.config.seed
        test = None
        if data['source'] == 'blobs':
            full = make_blobs(data['n_per_class'], data['k'], data['d'], data['spread'], seed)
        elif data['source'] == 'csv':
            full = load_csv(data['train_path'], data['label_column'])
            if data['test_path']:
                test = load_csv(data['test_path'], data['label_column'], label_names=full.label_names)
        else:
            full = load_idx(data['images_path'], data['labels_path'], data['limit'])
            if data['test_images_path'] and data['test_labels_path']:
                test = load_idx(data['test_images_path'], data['test_labels_path'], data['limit'], k=full.k)
                test = replace(test, label_names=full.label_names)
        if test is None:
            train, test = split_dataset(full, data['test_fraction'], seed)
        else:
            train = full
        raw_test = test
        if data['normalize']:
            train = normalize(train, train)
            test = normalize(test, train)
        logger.info(f"Training on {train.n_samples} samples, testing on {test.n_samples}")
        return DataSplit(train, test, raw_test)

    def fit(self, method_cfg, train: Dataset, out_dir: Path) -> Ensemble:
        round_logger = RoundLogger(Path(out_dir) / 'timings.csv')
        if isinstance(method_cfg, EddeConfig):
            return train_edde(train, method_cfg, round_logger)
        if isinstance(method_cfg, BaselineConfig):
            return train_baseline(train, method_cfg, round_logger)
        raise ValidationError(f"Unsupported method config {type(method_cfg).__name__}")

    def _persist(self, ens: Ensemble, split: DataSplit, out_dir: Path) -> None:
        train = split.train
        save_ensemble(ens, out_dir / ENSEMBLE_DIR, train.label_names, train.feature_means, train.feature_stds)

    def train(self) -> Tuple[Ensemble, Evaluation]:
        split = self.load_data()
        arch = self.config.architecture(split.train.n_features, split.train.k)
        method_cfg = self.config.method_config(arch)
        ens = self.fit(method_cfg, split.train, self.output_dir)
        evaluation = evaluate_ensemble(ens, split.test)
        self._persist(ens, split, self.output_dir)
        write_csv(split.raw_test, self.output_dir / TEST_FILE, self.config['data']['label_column'])
        self._write_run_outputs(self.output_dir, ens, evaluation, describe_config(method_cfg))
        return ens, evaluation

    def _write_run_outputs(self, out_dir: Path, ens: Ensemble, evaluation: Evaluation, method_echo: dict):
        formats = self.config.report_formats
        if 'json' in formats:
            document = reports.run_report(self.config.to_dict(), ens, evaluation.report, evaluation.bias,
                                          evaluation.variance, self.config.seed, __version__)
            document['method_config'] = method_echo
            reports.write_json(out_dir / 'report.json', document)
        if 'csv' in formats:
            reports.write_metrics(out_dir, ens, evaluation.report, evaluation.bias, evaluation.variance)

    def beta_search(self) -> BetaSearchResult:
        split = self.load_data()
        arch = self.config.architecture(split.train.n_features, split.train.k)
        result = beta_search(split.train, arch, self.config.beta_search_config,
                             self.config.train_settings, self.config.seed)
        reports.write_table(self.output_dir / 'beta_trace.csv', [p.to_dict() for p in result.trace],
                            reports.BETA_TRACE_COLUMNS)
        return result

    def evaluate(self, ensemble_dir, data_path, label_column: str = "label") -> Tuple[Ensemble, Evaluation]:
        saved, test = load_saved(ensemble_dir, data_path, label_column)
        evaluation = evaluate_ensemble(saved.ensemble, test)
        reports.write_metrics(self.output_dir, saved.ensemble, evaluation.report,
                              evaluation.bias, evaluation.variance)
        return saved.ensemble, evaluation

    def diversity(self, ensemble_dir, data_path, label_column: str = "label") -> DiversityReport:
        saved, test = load_saved(ensemble_dir, data_path, label_column)
        report = evaluate_ensemble(saved.ensemble, test).report
        reports.write_similarity(self.output_dir, report)
        reports.write_json(self.output_dir / 'diversity.json', {
            'model_ids': report.model_ids,
            'div_h': report.div_h if report.div_h is not None else 'n/a',
            'pairwise_similarity': report.pairwise.tolist(),
        })
        return report

    def compare(self) -> Tuple[List[dict], int]:
        """Train every configured method under the shared epoch budget; returns (rows, failures)."""
        self.config.validate_compare()
        split = self.load_data()
        arch = self.config.architecture(split.train.n_features, split.train.k)
        rows, trajectory, failures = [], [], 0
        for method in self.config.compare_methods:
            sub_dir = self.output_dir / method
            try:
                method_cfg = self.config.compare_config(arch, method)
                ens = self.fit(method_cfg, split.train, sub_dir)
                ens.method = method
                evaluation = evaluate_ensemble(ens, split.test)
                self._persist(ens, split, sub_dir)
                self._write_run_outputs(sub_dir, ens, evaluation, describe_config(method_cfg))
            except EddeError as e:
                failures += 1
                logger.error(f"{method} failed: {e}")
                rows.append({'method': method, 'status': 'failed', 'error': str(e)})
                continue
            report = evaluation.report
            rows.append({
                'method': method, 'status': 'ok', 'total_epochs': ens.total_epochs,
                'gamma': ens.gamma, 'beta': ens.beta,
                'ensemble_accuracy': report.ensemble_accuracy, 'average_accuracy': report.average_accuracy,
                'div_h': report.div_h, 'bias': evaluation.bias, 'variance': evaluation.variance, 'error': '',
            })
            trajectory.extend(self._trajectory(method, ens, split.test))
        columns = reports.COMPARE_COLUMNS[:3] + ['gamma', 'beta'] + reports.COMPARE_COLUMNS[3:]
        reports.write_rows(self.output_dir, 'comparison', rows, columns, self.config.report_formats)
        reports.write_table(self.output_dir / 'trajectory.csv', trajectory, reports.TRAJECTORY_COLUMNS)
        return rows, failures

    @staticmethod
    def _trajectory(method: str, ens: Ensemble, test: Dataset) -> List[dict]:
        preds = [predict_proba(m.net, test) for m in ens.members]
        accuracies = prefix_accuracies(preds, ens.alphas, test.labels)
        return [{
            'method': method,
            'members': t + 1,
            'cumulative_epochs': sum(r.epochs for r in ens.rounds if r.round <= m.round),
            'ensemble_accuracy': acc,
        } for t, (m, acc) in enumerate(zip(ens.members, accuracies))]

    def sweep_gamma(self) -> List[dict]:
        split = self.load_data()
        arch = self.config.architecture(split.train.n_features, split.train.k)
        rows = []
        for gamma in self.config.gammas:
            method_cfg = self.config.edde_config(arch, gamma=gamma)
            ens = self.fit(method_cfg, split.train, self.output_dir / f"gamma_{gamma:g}")
            report = evaluate_ensemble(ens, split.test).report
            logger.info(f"gamma={gamma:g}: ensemble accuracy {report.ensemble_accuracy:.4f}")
            rows.append({
                'gamma': gamma,
                'ensemble_accuracy': report.ensemble_accuracy,
                'average_accuracy': report.average_accuracy,
                'increased_accuracy': report.increased_accuracy,
                'div_h': report.div_h,
            })
        reports.write_rows(self.output_dir, 'gamma_sweep', rows, reports.SWEEP_COLUMNS, ('csv', 'json'))
        return rows
