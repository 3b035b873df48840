"""Repeated train/test protocol comparing classical and quantum-kernel SVC."""

from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .config import C_POLICY, ExperimentConfig
from .dataset import LabeledDataset, balance, kfold, load_csv, stratified_split
from .features import fit_pipeline
from .metrics import roc_auc
from .qkernel import FeatureMapSpec, gram_matrix
from .svm import KernelSpec, decision_function, fit_svc, grid_search

__all__ = ["roc_auc", "ExperimentSummary", "run_experiment", "load_dataset"]

log = logging.getLogger(__name__)

QSVC_DEFAULT_C = 1.0


class LeakageError(RuntimeError):
    pass


@dataclass
class ExperimentSummary:
    target: str
    selector: str
    n_features: int
    branch: str
    mode: str
    shots: int
    fingerprint: str
    aucs: list = field(default_factory=list)  # per repeat; None marks a failed repeat
    wall_times: list = field(default_factory=list)
    failures: list = field(default_factory=list)  # (repeat, message)
    chosen: list = field(default_factory=list)  # per repeat hyperparameters

    @property
    def c_policy(self) -> str:
        return C_POLICY[self.branch]

    @property
    def completed(self) -> list[float]:
        return [a for a in self.aucs if a is not None]

    @property
    def n_repeats(self) -> int:
        return len(self.completed)

    @property
    def mean(self) -> float:
        vals = self.completed
        return math.fsum(vals) / len(vals) if vals else float("nan")

    @property
    def std(self) -> float:
        """Sample standard deviation (n - 1 denominator)."""
        vals = self.completed
        if len(vals) < 2:
            return float("nan")
        m = self.mean
        return math.sqrt(math.fsum((v - m) ** 2 for v in vals) / (len(vals) - 1))

    @property
    def flagged(self) -> bool:
        return bool(self.failures)

    def row(self) -> dict:
        return {
            "target": self.target,
            "selector": self.selector,
            "n_features": self.n_features,
            "branch": self.branch,
            "C_policy": self.c_policy,
            "mode": self.mode,
            "shots": self.shots,
            "mean_auc": self.mean,
            "std_auc": self.std,
            "n_repeats": self.n_repeats,
        }

    def to_dict(self) -> dict:
        d = self.row()
        d.update(
            fingerprint=self.fingerprint,
            aucs=self.aucs,
            wall_times=self.wall_times,
            failures=[list(f) for f in self.failures],
            chosen=self.chosen,
        )
        return d


RESULT_COLUMNS = ("target", "selector", "n_features", "branch", "C_policy", "mode", "shots",
                  "mean_auc", "std_auc", "n_repeats")


def load_dataset(config: ExperimentConfig) -> LabeledDataset:
    return load_csv(
        config.dataset,
        label_column=config.label_column,
        feature_columns=config.feature_columns,
        label_map=config.label_map,
        smiles_column=config.smiles_column,
        id_column=config.id_column,
    )


def _splits(ds: LabeledDataset, config: ExperimentConfig, seed: int):
    """Yield (fold index, train, test) for one repeat."""
    bal = config.balance
    base = balance(ds, bal.policy(seed)) if bal.stage == "before_split" else ds
    if config.protocol == "kfold":
        pairs = kfold(base, config.cv_folds, seed)
        parts = [(f, base.subset(tr), base.subset(te)) for f, (tr, te) in enumerate(pairs)]
    else:
        train, test = stratified_split(base, config.train_fraction, seed)
        parts = [(0, train, test)]
    if bal.stage == "per_split":
        parts = [(f, balance(tr, bal.policy(seed)), balance(te, bal.policy(seed + 1))) for f, tr, te in parts]
    return parts


def _run_cell(config, train, test, selector, n, seed):
    """All requested branches for one split and one (selector, n) cell.

    Returns {branch: (auc, chosen-hyperparameters)}.
    """
    pipe = fit_pipeline(train.features, train.labels, selector, n, ids=train.ids, angle_range=config.angle_range)
    if set(pipe.fit_ids) & set(test.ids):
        raise LeakageError("feature pipeline was fitted on test rows")
    ytr, yte = train.labels, test.labels
    out = {}
    need_grid = "csvc" in config.branches or "qsvc_tuned_c" in config.branches
    if need_grid:
        Rtr, Rte = pipe.reduce(train.features), pipe.reduce(test.features)
        best = grid_search(Rtr, ytr, config.grid.to_grid(), config.grid.folds, seed)
        if "csvc" in config.branches:
            model = fit_svc(best.kernel.matrix(Rtr, Rtr), ytr, best.C, best.kernel, Rtr, box=config.box)
            scores = decision_function(model, best.kernel.matrix(Rte, Rtr))
            out["csvc"] = (roc_auc(yte, scores), {"kernel": best.kernel.label(), "C": best.C, "cv_auc": best.mean_auc})
    if "qsvc_default_c" in config.branches or "qsvc_tuned_c" in config.branches:
        Atr, Ate = pipe.transform(train.features), pipe.transform(test.features)
        spec = FeatureMapSpec(n, config.depth)
        shots = config.shots if config.kernel_mode == "sampled" else None
        Ktr = gram_matrix(Atr, None, spec, config.kernel_mode, shots, 2 * seed, config.psd_repair)
        Kte = gram_matrix(Ate, Atr, spec, config.kernel_mode, shots, 2 * seed + 1)
        qspec = KernelSpec("precomputed")
        for branch, C in (("qsvc_default_c", QSVC_DEFAULT_C), ("qsvc_tuned_c", best.C if need_grid else None)):
            if branch not in config.branches:
                continue
            model = fit_svc(Ktr.values, ytr, C, qspec, Atr, box=config.box, quantum_depth=config.depth)
            scores = decision_function(model, Kte.values)
            out[branch] = (roc_auc(yte, scores), {"C": C, "psd_jitter": Ktr.jitter})
    return out


def run_experiment(
    config: ExperimentConfig, dataset: LabeledDataset | None = None, threads: int = 1
) -> list[ExperimentSummary]:
    """Run every (selector, feature count, branch) cell over all repeats.

    Repeat ``r`` (1-based) uses seed ``config.seed + r`` for balancing,
    splitting and cross-validation.  A failing repeat is recorded in the
    summary's ``failures`` and excluded from the statistics.
    """
    ds = dataset if dataset is not None else load_dataset(config)
    config.check_feature_counts(ds.features.shape[1])
    fingerprint = config.fingerprint()
    shots = config.shots if config.kernel_mode == "sampled" else 0
    cells = [(s, n) for s in config.selectors for n in config.feature_counts]
    summaries = {
        (s, n, b): ExperimentSummary(config.name, s, n, b, config.kernel_mode, shots, fingerprint)
        for s, n in cells
        for b in config.branches
    }

    def one_repeat(r: int):
        seed = config.seed + r
        records = {}
        try:
            parts = _splits(ds, config, seed)
        except Exception as exc:  # noqa: BLE001 - recorded and flagged
            return {key: [(f"{r}", None, 0.0, f"{type(exc).__name__}: {exc}", None)] for key in summaries}
        for s, n in cells:
            for fold, train, test in parts:
                tag = f"{r}" if config.protocol == "holdout" else f"{r}.{fold}"
                t0 = time.perf_counter()
                try:
                    res = _run_cell(config, train, test, s, n, seed)
                    err = None
                except Exception as exc:  # noqa: BLE001
                    res, err = {}, f"{type(exc).__name__}: {exc}"
                    log.warning("repeat %s %s/%d failed: %s", tag, s, n, err)
                dt = time.perf_counter() - t0
                for b in config.branches:
                    auc, chosen = res.get(b, (None, None))
                    records.setdefault((s, n, b), []).append((tag, auc, dt, err, chosen))
        return records

    repeats = range(1, config.repeats + 1)
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            results = list(pool.map(one_repeat, repeats))
    else:
        results = [one_repeat(r) for r in repeats]
    for records in results:  # ordered by repeat index
        for key, entries in records.items():
            summ = summaries[key]
            for tag, auc, dt, err, chosen in entries:
                summ.aucs.append(auc)
                summ.wall_times.append(dt)
                summ.chosen.append(chosen)
                if err is not None or auc is None:
                    summ.failures.append((tag, err or "branch produced no score"))
    return [summaries[(s, n, b)] for s, n in cells for b in config.branches]
