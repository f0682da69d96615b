"""Grid execution over model variants and report assembly.

``run_grid`` trains every requested (architecture, ansatz, encoding)
combination on one dataset, evaluates each trained model on the train
split, the held-out test split and any number of external evaluation
sets, and writes one CSV per architecture plus a best-per-architecture
summary with relative improvement over fixed baseline reference values
(user-overridable; the defaults are the published reference model's
train/test/nbs/pdbind RMSE numbers 2.43 / 2.14 / 1.66 / 2.45).

A variant that fails is recorded in its report row (status/error
columns) and never aborts the remaining variants.  Variants may run in
worker processes; each variant is seeded independently of scheduling
order, so the worker count cannot change any result.
"""
from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .circuits import ANSATZ_IDS, encoding_from_name
from .data import SampleSet, apply_normalization, load_samples, minmax_normalize, rmse, split_train_test
from .errors import ConfigurationError, QnnError
from .models import ARCHITECTURES, build_model, forward, init_parameters
from .training import TrainConfig, train

DEFAULT_BASELINE = (2.43, 2.14, 1.66, 2.45)  # train, test, then eval sets in order


@dataclass
class ExperimentConfig:
    data_path: str
    eval_sets: list[tuple[str, str]] = field(default_factory=list)  # (name, path)
    architectures: tuple[str, ...] = ARCHITECTURES
    ansatze: tuple[str, ...] = ANSATZ_IDS
    encodings: tuple[str, ...] = ("angle", "amplitude")
    train_cfg: TrainConfig = field(default_factory=TrainConfig)
    out_dir: str = "out"
    repetitions: int = 1
    workers: int = 1
    baseline: tuple[float, ...] = DEFAULT_BASELINE
    dry_run: bool = False  # build + count parameters only, no training

    def validate(self) -> None:
        if self.repetitions < 1:
            raise ConfigurationError(f"repetitions must be >= 1, got {self.repetitions}")
        if self.workers < 1:
            raise ConfigurationError(f"workers must be >= 1, got {self.workers}")
        for a in self.architectures:
            if a not in ARCHITECTURES:
                raise ConfigurationError(f"unknown architecture {a!r}")
        for a in self.ansatze:
            if a not in ANSATZ_IDS:
                raise ConfigurationError(f"unknown ansatz {a!r}")
        for e in self.encodings:
            encoding_from_name(e)
        if self.dry_run:
            return  # no data touched
        if not Path(self.data_path).exists():
            raise ConfigurationError(f"dataset not found: {self.data_path}")
        for name, p in self.eval_sets:
            if not Path(p).exists():
                raise ConfigurationError(f"evaluation set {name!r} not found: {p}")


@dataclass
class GridRow:
    architecture: str
    ansatz: str
    encoding: str
    rep: int
    seed: int
    status: str = "ok"
    train_rmse: float = float("nan")
    test_rmse: float = float("nan")
    eval_rmse: dict[str, float] = field(default_factory=dict)
    parameters: int = 0
    train_seconds: float = 0.0
    error: str = ""


def _prepare_data(cfg: ExperimentConfig):
    raw = load_samples(cfg.data_path)
    train_set, test_set = split_train_test(raw, cfg.train_cfg.test_fraction, cfg.train_cfg.seed)
    train_norm, mins, maxs = minmax_normalize(train_set)
    test_norm = apply_normalization(test_set, mins, maxs)
    evals = []
    for name, p in cfg.eval_sets:
        evals.append((name, apply_normalization(load_samples(p), mins, maxs)))
    return train_norm, test_norm, evals


def _run_variant(args) -> GridRow:
    (arch, ansatz, enc_kind, rep, seed, cfg_fields, dry,
     train_arrays, test_arrays, eval_arrays) = args
    row = GridRow(arch, ansatz, enc_kind, rep, seed)
    try:
        model = build_model(arch, ansatz, encoding_from_name(enc_kind))
        row.parameters = model.n_params
        if dry:
            row.status = "dry"
            return row
        tcfg = TrainConfig(**cfg_fields)
        train_set = SampleSet(*train_arrays)
        test_set = SampleSet(*test_arrays)
        init_parameters(model, seed)
        t0 = time.perf_counter()
        # per-variant seed also drives the ensemble subset partition
        model, _ = train(model, train_set, test_set,
                         TrainConfig(**{**cfg_fields, "seed": seed}))
        row.train_seconds = time.perf_counter() - t0
        row.train_rmse = rmse(forward(model, train_set.features), train_set.targets)
        row.test_rmse = rmse(forward(model, test_set.features), test_set.targets)
        for name, arrays in eval_arrays:
            es = SampleSet(*arrays)
            row.eval_rmse[name] = rmse(forward(model, es.features), es.targets)
    except QnnError as exc:
        row.status = "failed"
        row.error = str(exc)
    return row


def run_grid(cfg: ExperimentConfig) -> list[GridRow]:
    cfg.validate()
    if cfg.dry_run:
        train_arrays = test_arrays = None
        eval_arrays = []
        eval_names = [n for n, _ in cfg.eval_sets]
    else:
        train_set, test_set, evals = _prepare_data(cfg)
        train_arrays = (train_set.features, train_set.targets, train_set.ids)
        test_arrays = (test_set.features, test_set.targets, test_set.ids)
        eval_arrays = [(n, (s.features, s.targets, s.ids)) for n, s in evals]
        eval_names = [n for n, _ in evals]

    tfields = {k: getattr(cfg.train_cfg, k) for k in
               ("epochs", "lr_init", "scheduler_patience", "scheduler_factor",
                "lr_min", "seed", "test_fraction")}
    jobs = []
    for arch in cfg.architectures:
        for ansatz in cfg.ansatze:
            for enc in cfg.encodings:
                for rep in range(cfg.repetitions):
                    seed = cfg.train_cfg.seed + rep
                    jobs.append((arch, ansatz, enc, rep, seed, tfields, cfg.dry_run,
                                 train_arrays, test_arrays, eval_arrays))
    if cfg.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            rows = list(pool.map(_run_variant, jobs))
    else:
        rows = [_run_variant(j) for j in jobs]

    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for arch in cfg.architectures:
        write_grid_csv(out / f"grid_{arch}.csv", [r for r in rows if r.architecture == arch],
                       eval_names)
    if not cfg.dry_run:
        write_summary_csv(out / "summary.csv", rows, eval_names, cfg.baseline)
    return rows


def _fmt(x: float) -> str:
    return "" if isinstance(x, float) and np.isnan(x) else repr(float(x))


def write_grid_csv(path, rows: list[GridRow], eval_names: list[str]) -> None:
    cols = ["architecture", "ansatz", "encoding", "rep", "seed", "status",
            "train_rmse", "test_rmse"] + [f"{n}_rmse" for n in eval_names] + \
           ["parameters", "train_seconds", "error"]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(cols) + "\n")
        for r in rows:
            cells = [r.architecture, r.ansatz, r.encoding, str(r.rep), str(r.seed), r.status,
                     _fmt(r.train_rmse), _fmt(r.test_rmse)]
            cells += [_fmt(r.eval_rmse.get(n, float("nan"))) for n in eval_names]
            cells += [str(r.parameters), f"{r.train_seconds:.3f}", r.error.replace(",", ";")]
            fh.write(",".join(cells) + "\n")


def select_best(rows: list[GridRow], eval_names: list[str]) -> dict[str, GridRow]:
    """Best variant per architecture, by the last evaluation set's RMSE
    (the comparison set of interest), falling back to test RMSE."""
    metric = (lambda r: r.eval_rmse[eval_names[-1]]) if eval_names else (lambda r: r.test_rmse)
    best: dict[str, GridRow] = {}
    for r in rows:
        if r.status != "ok":
            continue
        if r.architecture not in best or metric(r) < metric(best[r.architecture]):
            best[r.architecture] = r
    return best


def write_summary_csv(path, rows: list[GridRow], eval_names: list[str],
                      baseline: tuple[float, ...]) -> None:
    metrics = ["train_rmse", "test_rmse"] + [f"{n}_rmse" for n in eval_names]
    cols = ["model"] + metrics + [f"improvement_{m}_pct" for m in metrics]
    base = {m: (baseline[i] if i < len(baseline) else float("nan"))
            for i, m in enumerate(metrics)}

    def metric_value(r: GridRow, m: str) -> float:
        if m == "train_rmse":
            return r.train_rmse
        if m == "test_rmse":
            return r.test_rmse
        return r.eval_rmse.get(m[:-len("_rmse")], float("nan"))

    best = select_best(rows, eval_names)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(cols) + "\n")
        fh.write(",".join(["baseline"] + [_fmt(base[m]) for m in metrics]
                          + [""] * len(metrics)) + "\n")
        for arch in sorted(best):
            r = best[arch]
            name = f"{arch} ({r.ansatz} w/ {r.encoding})"
            vals = [metric_value(r, m) for m in metrics]
            imps = []
            for m, v in zip(metrics, vals):
                b = base[m]
                imps.append("" if (np.isnan(v) or np.isnan(b) or b == 0)
                            else f"{(b - v) / b * 100.0:.1f}")
            fh.write(",".join([name] + [_fmt(v) for v in vals] + imps) + "\n")
