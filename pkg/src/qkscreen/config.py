"""Declarative experiment configuration (one JSON document)."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

from .dataset import BalancePolicy, DatasetError
from .svm import DEFAULT_C, DEFAULT_KERNELS, Grid, SvmError

SELECTORS = ("pca", "anova")
BRANCHES = ("csvc", "qsvc_default_c", "qsvc_tuned_c")
C_POLICY = {"csvc": "grid", "qsvc_default_c": "default", "qsvc_tuned_c": "csvc_tuned"}


class ConfigError(ValueError):
    """Schema violation; ``path`` names the offending field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass(frozen=True)
class GridConfig:
    C: tuple[float, ...] = DEFAULT_C
    gamma: tuple[float, ...] | None = None
    kernels: tuple[str, ...] = DEFAULT_KERNELS
    poly_offset: float = 1.0
    folds: int = 5

    def to_grid(self) -> Grid:
        return Grid(self.C, self.gamma, self.kernels, self.poly_offset)


@dataclass(frozen=True)
class BalanceConfig:
    mode: str = "auto"
    active_threshold: int = 30
    padding_ratio: int = 6
    stage: str = "before_split"  # or "per_split"

    def policy(self, seed: int) -> BalancePolicy:
        return BalancePolicy(self.mode, self.active_threshold, self.padding_ratio, seed)


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: str
    label_column: str = "label"
    target: str = ""
    label_map: dict = field(default_factory=lambda: {"1": 1, "0": -1})
    smiles_column: str | None = None
    id_column: str | None = "id"
    feature_columns: tuple[str, ...] | str = "all"
    selectors: tuple[str, ...] = SELECTORS
    feature_counts: tuple[int, ...] = (2, 4, 8)
    branches: tuple[str, ...] = BRANCHES
    kernel_mode: str = "exact"
    shots: int | None = None
    psd_repair: bool = True
    depth: int = 2
    angle_range: float = 1.0
    repeats: int = 10
    seed: int = 0
    train_fraction: float = 0.8
    protocol: str = "holdout"  # or "kfold"
    cv_folds: int = 10
    box: str = "standard"
    grid: GridConfig = GridConfig()
    balance: BalanceConfig = BalanceConfig()
    output_dir: str = "results"

    @property
    def name(self) -> str:
        return self.target or Path(self.dataset).stem

    def to_dict(self) -> dict:
        d = asdict(self)
        for key, value in d.items():
            if isinstance(value, tuple):
                d[key] = list(value)
        d["grid"] = {k: list(v) if isinstance(v, tuple) else v for k, v in d["grid"].items()}
        return d

    def fingerprint(self) -> str:
        d = self.to_dict()
        d.pop("output_dir")
        blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:12]

    def with_seed(self, seed: int) -> "ExperimentConfig":
        return replace(self, seed=seed)

    def check_feature_counts(self, available: int) -> None:
        for i, n in enumerate(self.feature_counts):
            if n > available:
                raise ConfigError(
                    f"feature_counts[{i}]", f"requests {n} features but the dataset has {available} columns"
                )


def _expect(cond: bool, path: str, message: str):
    if not cond:
        raise ConfigError(path, message)


def _int(d: dict, key: str, path: str, minimum: int | None = None):
    value = d[key]
    _expect(isinstance(value, int) and not isinstance(value, bool), f"{path}{key}", "must be an integer")
    if minimum is not None:
        _expect(value >= minimum, f"{path}{key}", f"must be >= {minimum}")
    return value


def _number_list(value, path: str, positive: bool = True) -> tuple[float, ...]:
    _expect(isinstance(value, list) and value, path, "must be a non-empty list")
    out = []
    for i, v in enumerate(value):
        _expect(isinstance(v, (int, float)) and not isinstance(v, bool), f"{path}[{i}]", "must be a number")
        if positive:
            _expect(v > 0, f"{path}[{i}]", "must be > 0")
        out.append(float(v))
    return tuple(out)


_TOP_KEYS = {f for f in ExperimentConfig.__dataclass_fields__}


def parse_config(data: dict, base_dir: str | Path | None = None) -> ExperimentConfig:
    """Validate a config mapping; relative dataset paths resolve against ``base_dir``."""
    _expect(isinstance(data, dict), "$", "config must be a JSON object")
    unknown = sorted(set(data) - _TOP_KEYS)
    _expect(not unknown, unknown[0] if unknown else "$", "unknown field")
    _expect("dataset" in data, "dataset", "required field missing")
    _expect(isinstance(data["dataset"], str) and data["dataset"], "dataset", "must be a path string")
    kw: dict = {}
    path = Path(data["dataset"])
    if base_dir is not None and not path.is_absolute():
        path = Path(base_dir) / path
    kw["dataset"] = str(path)

    for key in ("label_column", "target", "output_dir"):
        if key in data:
            _expect(isinstance(data[key], str), key, "must be a string")
            kw[key] = data[key]
    for key in ("smiles_column", "id_column"):
        if key in data:
            _expect(data[key] is None or isinstance(data[key], str), key, "must be a string or null")
            kw[key] = data[key]
    if "label_map" in data:
        lm = data["label_map"]
        _expect(isinstance(lm, dict) and lm, "label_map", "must be a non-empty object")
        for k, v in lm.items():
            _expect(v in (1, -1), f"label_map.{k}", "must map to 1 or -1")
        _expect(set(lm.values()) == {1, -1}, "label_map", "must map onto both 1 and -1")
        kw["label_map"] = {str(k): int(v) for k, v in lm.items()}
    if "feature_columns" in data:
        fc = data["feature_columns"]
        ok = fc == "all" or (isinstance(fc, list) and fc and all(isinstance(c, str) for c in fc))
        _expect(ok, "feature_columns", 'must be "all" or a list of column names')
        kw["feature_columns"] = fc if fc == "all" else tuple(fc)
    if "selectors" in data:
        sel = data["selectors"]
        _expect(isinstance(sel, list) and sel, "selectors", "must be a non-empty list")
        for i, s in enumerate(sel):
            _expect(s in SELECTORS, f"selectors[{i}]", f"must be one of {list(SELECTORS)}")
        kw["selectors"] = tuple(sel)
    if "feature_counts" in data:
        fc = data["feature_counts"]
        _expect(isinstance(fc, list) and fc, "feature_counts", "must be a non-empty list")
        for i, n in enumerate(fc):
            _expect(isinstance(n, int) and not isinstance(n, bool) and 1 <= n <= 24,
                    f"feature_counts[{i}]", "must be an integer in 1..24")
        kw["feature_counts"] = tuple(fc)
    if "branches" in data:
        br = data["branches"]
        _expect(isinstance(br, list) and br, "branches", "must be a non-empty list")
        for i, b in enumerate(br):
            _expect(b in BRANCHES, f"branches[{i}]", f"must be one of {list(BRANCHES)}")
        kw["branches"] = tuple(br)
    if "kernel_mode" in data:
        _expect(data["kernel_mode"] in ("exact", "sampled"), "kernel_mode", 'must be "exact" or "sampled"')
        kw["kernel_mode"] = data["kernel_mode"]
    if data.get("shots") is not None:
        kw["shots"] = _int(data, "shots", "", 1)
    mode = kw.get("kernel_mode", "exact")
    if mode == "sampled":
        _expect(kw.get("shots") is not None, "shots", "required when kernel_mode is sampled")
    else:
        _expect(kw.get("shots") is None, "shots", "only allowed when kernel_mode is sampled")
    if "psd_repair" in data:
        _expect(isinstance(data["psd_repair"], bool), "psd_repair", "must be true or false")
        kw["psd_repair"] = data["psd_repair"]
    for key, minimum in (("depth", 1), ("repeats", 1), ("cv_folds", 2)):
        if key in data:
            kw[key] = _int(data, key, "", minimum)
    if "seed" in data:
        kw["seed"] = _int(data, "seed", "", 0)
    if "train_fraction" in data:
        tf = data["train_fraction"]
        _expect(isinstance(tf, (int, float)) and 0 < tf < 1, "train_fraction", "must lie in (0, 1)")
        kw["train_fraction"] = float(tf)
    if "angle_range" in data:
        ar = data["angle_range"]
        _expect(isinstance(ar, (int, float)) and not isinstance(ar, bool) and 0 < ar <= 6.3,
                "angle_range", "must lie in (0, 2*pi]")
        kw["angle_range"] = float(ar)
    if "protocol" in data:
        _expect(data["protocol"] in ("holdout", "kfold"), "protocol", 'must be "holdout" or "kfold"')
        kw["protocol"] = data["protocol"]
    if "box" in data:
        _expect(data["box"] in ("standard", "scaled"), "box", 'must be "standard" or "scaled"')
        kw["box"] = data["box"]
    if "grid" in data:
        kw["grid"] = _parse_grid(data["grid"])
    if "balance" in data:
        kw["balance"] = _parse_balance(data["balance"])
    return ExperimentConfig(**kw)


def _parse_grid(g) -> GridConfig:
    _expect(isinstance(g, dict), "grid", "must be an object")
    unknown = sorted(set(g) - set(GridConfig.__dataclass_fields__))
    _expect(not unknown, f"grid.{unknown[0]}" if unknown else "grid", "unknown field")
    kw: dict = {}
    if "C" in g:
        kw["C"] = _number_list(g["C"], "grid.C")
    if g.get("gamma") is not None:
        kw["gamma"] = _number_list(g["gamma"], "grid.gamma")
    if "kernels" in g:
        ks = g["kernels"]
        _expect(isinstance(ks, list) and ks, "grid.kernels", "must be a non-empty list")
        for i, k in enumerate(ks):
            ok = k in ("linear", "rbf") or (isinstance(k, str) and k.startswith("poly") and k[4:].isdigit() and int(k[4:]) >= 1)
            _expect(ok, f"grid.kernels[{i}]", 'must be "linear", "rbf" or "poly<d>"')
        kw["kernels"] = tuple(ks)
    if "poly_offset" in g:
        _expect(isinstance(g["poly_offset"], (int, float)), "grid.poly_offset", "must be a number")
        kw["poly_offset"] = float(g["poly_offset"])
    if "folds" in g:
        kw["folds"] = _int(g, "folds", "grid.", 2)
    try:
        cfg = GridConfig(**kw)
        cfg.to_grid()
    except SvmError as exc:
        raise ConfigError("grid", str(exc)) from None
    return cfg


def _parse_balance(b) -> BalanceConfig:
    _expect(isinstance(b, dict), "balance", "must be an object")
    unknown = sorted(set(b) - set(BalanceConfig.__dataclass_fields__))
    _expect(not unknown, f"balance.{unknown[0]}" if unknown else "balance", "unknown field")
    kw: dict = {}
    if "mode" in b:
        kw["mode"] = b["mode"]
    for key in ("active_threshold", "padding_ratio"):
        if key in b:
            kw[key] = _int(b, key, "balance.", 1)
    if "stage" in b:
        _expect(b["stage"] in ("before_split", "per_split"), "balance.stage", 'must be "before_split" or "per_split"')
        kw["stage"] = b["stage"]
    cfg = BalanceConfig(**kw)
    try:
        cfg.policy(0)
    except DatasetError as exc:
        raise ConfigError("balance.mode", str(exc)) from None
    return cfg


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError("$", f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError("$", f"invalid JSON: {exc}") from None
    return parse_config(data, base_dir=path.parent)
