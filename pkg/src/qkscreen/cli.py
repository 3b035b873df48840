"""Command-line front end: ``descriptors``, ``run``, ``plotdata`` and ``kernel``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import platform
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, load_config
from .dataset import DatasetError
from .evaluation import RESULT_COLUMNS, load_dataset, run_experiment
from .features import angle_apply, angle_fit
from .qkernel import FeatureMapSpec, gram_matrix, write_kernel_csv, write_qkm
from .smiles import DESCRIPTOR_NAMES, SmilesError, smiles_descriptors

log = logging.getLogger("qkscreen")

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2


def atomic_write(path: str | Path, text: str) -> None:
    """Write via a sibling temp file and rename, so readers never see partial output."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


# -- descriptors -------------------------------------------------------------


def cmd_descriptors(args) -> int:
    src = Path(args.input)
    if not src.exists():
        log.error("missing input file: %s", src)
        return EXIT_INVALID
    text = src.read_text(encoding="utf-8")
    rejects_path = Path(args.rejects) if args.rejects else Path(args.output).with_suffix(".rejects.csv")
    if not text.strip():
        atomic_write(args.output, "")
        atomic_write(rejects_path, _csv_text(["row", "smiles", "position", "reason"], []))
        return EXIT_OK

    if args.lines:
        header = [args.smiles_column]
        rows = [[line.strip()] for line in text.splitlines() if line.strip()]
    else:
        reader = csv.reader(io.StringIO(text))
        header = next(reader)
        rows = [r for r in reader if r]
        if args.smiles_column not in header:
            log.error("missing column: %s", args.smiles_column)
            return EXIT_INVALID
    col = header.index(args.smiles_column)

    out_rows, rejects = [], []
    for n, row in enumerate(rows, start=1):
        smi = row[col] if col < len(row) else ""
        try:
            desc = smiles_descriptors(smi)
        except SmilesError as exc:
            rejects.append([n, smi, exc.position, exc.reason])
            continue
        out_rows.append(row + [desc[k] for k in DESCRIPTOR_NAMES])
    atomic_write(args.output, _csv_text(header + list(DESCRIPTOR_NAMES), out_rows))
    atomic_write(rejects_path, _csv_text(["row", "smiles", "position", "reason"], rejects))
    log.info("%d molecules written, %d rejected", len(out_rows), len(rejects))
    return EXIT_OK


# -- run ---------------------------------------------------------------------


def cmd_run(args) -> int:
    try:
        config = load_config(args.config)
        if args.seed is not None:
            config = config.with_seed(args.seed)
        dataset = load_dataset(config)
        config.check_feature_counts(dataset.features.shape[1])
    except (ConfigError, DatasetError) as exc:
        log.error("invalid configuration: %s", exc)
        return EXIT_INVALID

    base = Path(args.out) if args.out else Path(config.output_dir)
    if not base.is_absolute() and not args.out:
        base = Path(args.config).parent / base
    outdir = base / config.fingerprint()
    outdir.mkdir(parents=True, exist_ok=True)

    atomic_write(
        outdir / "rejects.csv",
        _csv_text(["row", "id", "reason"], [[r.row, r.record_id, r.reason] for r in dataset.rejects]),
    )
    manifest = {
        "config_hash": config.fingerprint(),
        "library_version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "master_seed": config.seed,
        "repeat_seeds": [config.seed + r for r in range(1, config.repeats + 1)],
        "dataset": config.dataset,
        "rows_loaded": len(dataset),
        "rows_rejected": dataset.n_dropped,
        "config": config.to_dict(),
    }
    atomic_write(outdir / "manifest.json", json.dumps(manifest, indent=2, sort_keys=True))

    try:
        summaries = run_experiment(config, dataset, threads=args.threads)
    except Exception as exc:  # noqa: BLE001
        log.error("run failed: %s", exc)
        return EXIT_RUNTIME

    rows = [[s.row()[c] for c in RESULT_COLUMNS] for s in summaries]
    atomic_write(outdir / "results.csv", _csv_text(RESULT_COLUMNS, rows))
    atomic_write(outdir / "results.json", json.dumps([s.to_dict() for s in summaries], indent=2))
    if not args.no_figures:
        from .plotting import plot_auc_curves

        for selector in config.selectors:
            tidy = tidy_rows([s.row() for s in summaries], config.name, selector)
            plot_auc_curves(tidy, outdir / f"auc_{selector}.png", title=f"{config.name} ({selector.upper()})")
    flagged = [s for s in summaries if s.flagged]
    for s in flagged:
        log.warning("%s/%d/%s: %d failed repeat(s)", s.selector, s.n_features, s.branch, len(s.failures))
    print(outdir)
    return EXIT_RUNTIME if flagged else EXIT_OK


# -- plotdata ----------------------------------------------------------------


def tidy_rows(results, target: str, selector: str) -> list[dict]:
    """Long-format (n_features, branch, mean, std) rows for one target and selector."""
    out = []
    for r in results:
        if str(r["target"]) == target and str(r["selector"]) == selector:
            out.append({"n_features": int(r["n_features"]), "branch": r["branch"],
                        "mean": r["mean_auc"], "std": r["std_auc"]})
    out.sort(key=lambda d: (d["branch"], d["n_features"]))
    return out


def cmd_plotdata(args) -> int:
    path = Path(args.results)
    if not path.exists():
        log.error("missing results file: %s", path)
        return EXIT_INVALID
    with path.open(newline="", encoding="utf-8") as fh:
        results = list(csv.DictReader(fh))
    tidy = tidy_rows(results, args.target, args.selector)
    if not tidy:
        log.error("no rows for target=%s selector=%s", args.target, args.selector)
        return EXIT_INVALID
    text = _csv_text(["n_features", "branch", "mean", "std"],
                     [[d["n_features"], d["branch"], d["mean"], d["std"]] for d in tidy])
    if args.out:
        atomic_write(args.out, text)
    else:
        sys.stdout.write(text)
    if args.figure:
        from .plotting import plot_auc_curves

        plot_auc_curves(tidy, args.figure, title=f"{args.target} ({args.selector.upper()})")
    return EXIT_OK


# -- kernel ------------------------------------------------------------------


def cmd_kernel(args) -> int:
    try:
        with open(args.data, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            rows = [r for r in reader if r]
        cols = args.columns.split(",") if args.columns else [h for h in header if h not in (args.exclude or [])]
        idx = [header.index(c) for c in cols]
        X = np.array([[float(r[i]) for i in idx] for r in rows], dtype=float)
        A = X if args.angles else angle_apply(angle_fit(X, args.angle_range), X)
        spec = FeatureMapSpec(A.shape[1], args.depth)
        mode = "sampled" if args.shots else "exact"
        km = gram_matrix(A, None, spec, mode, args.shots, args.seed or 0, args.psd_repair)
    except (OSError, StopIteration, ValueError) as exc:  # includes Kernel/Feature errors
        log.error("kernel: %s", exc)
        return EXIT_INVALID
    write_qkm(args.out, km)
    if args.csv:
        write_kernel_csv(args.csv, km)
    log.info("wrote %dx%d %s kernel to %s", *km.shape, km.mode, args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qkscreen", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("descriptors", help="append native SMILES descriptors to a table")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--smiles-column", default="smiles")
    p.add_argument("--lines", action="store_true", help="input is one SMILES per line, no header")
    p.add_argument("--rejects", help="rejects CSV (default: <output>.rejects.csv)")
    p.set_defaults(func=cmd_descriptors)

    p = sub.add_parser("run", help="run the experiment matrix described by a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", help="output base directory (overrides config output_dir)")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--seed", type=int, help="override the config master seed")
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("plotdata", help="tidy curve table (and figure) from results.csv")
    p.add_argument("results")
    p.add_argument("--target", required=True)
    p.add_argument("--selector", required=True, choices=["pca", "anova"])
    p.add_argument("--out", help="tidy CSV path (default: stdout)")
    p.add_argument("--figure", help="also render a PNG/PDF figure here")
    p.set_defaults(func=cmd_plotdata)

    p = sub.add_parser("kernel", help="dump a quantum Gram matrix in QKM1 format")
    p.add_argument("data", help="CSV of numeric feature columns")
    p.add_argument("--out", required=True, help="QKM1 output path")
    p.add_argument("--csv", help="also write the matrix as CSV")
    p.add_argument("--columns", help="comma-separated feature columns (default: all)")
    p.add_argument("--exclude", nargs="*", default=["id", "label"])
    p.add_argument("--angles", action="store_true", help="columns are already angles; skip scaling")
    p.add_argument("--angle-range", type=float, default=np.pi)
    p.add_argument("--depth", type=int, default=2)
    p.add_argument("--shots", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--psd-repair", action="store_true")
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=cmd_kernel)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
