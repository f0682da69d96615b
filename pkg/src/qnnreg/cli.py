"""Command-line harness.

Subcommands: ``generate``, ``train``, ``grid``, ``inspect-circuit``,
``gradcheck``.  Every option can also be supplied through a config file
(``--config``, INI-style with one section per command); command-line
flags win over file values, file values win over built-in defaults.

Exit codes: 0 success, 1 validation/config error, 2 numerical failure,
3 conformance-check failure (``inspect-circuit --check-table1`` and
``gradcheck``).
"""
from __future__ import annotations

import argparse
import configparser
import sys
from pathlib import Path

import numpy as np

from .circuits import (
    ANSATZ_IDS,
    ARTIFACT_PARAMS,
    REFERENCE_COMPLEXITY,
    build_ansatz,
    circuit_lines,
    complexity_metrics,
    encoding_from_name,
)
from .data import generate_synthetic, load_samples, minmax_normalize, apply_normalization, rmse, save_samples, split_train_test
from .errors import ConfigurationError, NumericalError, QnnError
from .experiment import DEFAULT_BASELINE, ExperimentConfig, run_grid
from .gradients import finite_difference_check
from .models import ARCHITECTURES, build_model, init_parameters, save_checkpoint
from .training import TrainConfig, train

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_CONFORMANCE = 0, 1, 2, 3


def _load_config_section(path, section) -> dict:
    if path is None:
        return {}
    if not Path(path).exists():
        raise ConfigurationError(f"config file not found: {path}")
    parser = configparser.ConfigParser()
    parser.read(path, encoding="utf-8")
    if not parser.has_section(section):
        return {}
    return dict(parser.items(section))


def _resolve(args, key, cfg, default, cast=str):
    """Flag > config file > default."""
    flag = getattr(args, key.replace("-", "_"), None)
    if flag is not None:
        return flag
    if key in cfg:
        raw = cfg[key]
        if cast is bool:
            return raw.strip().lower() in ("1", "true", "yes", "on")
        return cast(raw)
    return default


def _csv_list(raw) -> tuple[str, ...]:
    if isinstance(raw, (tuple, list)):
        return tuple(raw)
    return tuple(s.strip() for s in str(raw).split(",") if s.strip())


def _train_config(args, cfg) -> TrainConfig:
    return TrainConfig(
        epochs=_resolve(args, "epochs", cfg, 300, int),
        lr_init=_resolve(args, "lr", cfg, 0.01, float),
        scheduler_patience=_resolve(args, "patience", cfg, 20, int),
        scheduler_factor=_resolve(args, "factor", cfg, 0.5, float),
        lr_min=_resolve(args, "lr-min", cfg, 1e-5, float),
        seed=_resolve(args, "seed", cfg, 0, int),
        test_fraction=_resolve(args, "test-fraction", cfg, 0.2, float),
    )


def cmd_generate(args) -> int:
    cfg = _load_config_section(args.config, "generate")
    n = _resolve(args, "samples", cfg, 200, int)
    seed = _resolve(args, "seed", cfg, 0, int)
    path = _resolve(args, "path", cfg, None)
    if path is None:
        raise ConfigurationError("generate needs --path")
    samples = generate_synthetic(n, seed)
    save_samples(samples, path)
    print(f"wrote {len(samples)} samples to {path} (seed {seed})")
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = _load_config_section(args.config, "train")
    data = _resolve(args, "data", cfg, None)
    if data is None:
        raise ConfigurationError("train needs --data")
    arch = _resolve(args, "architecture", cfg, "sequential")
    ansatz = _resolve(args, "ansatz", cfg, "A1")
    enc = encoding_from_name(_resolve(args, "encoding", cfg, "amplitude"))
    out_dir = Path(_resolve(args, "out", cfg, "out"))
    tcfg = _train_config(args, cfg)

    raw = load_samples(data)
    train_set, test_set = split_train_test(raw, tcfg.test_fraction, tcfg.seed)
    train_norm, mins, maxs = minmax_normalize(train_set)
    test_norm = apply_normalization(test_set, mins, maxs)

    model = build_model(arch, ansatz, enc)
    init_parameters(model, tcfg.seed)
    model, history = train(model, train_norm, test_norm, tcfg)

    out_dir.mkdir(parents=True, exist_ok=True)
    history.write_csv(out_dir / "history.csv")
    save_checkpoint(model, out_dir / "checkpoint.txt", seed=tcfg.seed)
    print(f"{arch} {ansatz} {enc.kind}: params={model.n_params} "
          f"train_rmse={history.train_rmse[-1]:.4f} test_rmse={history.test_rmse[-1]:.4f}")
    print(f"artifacts in {out_dir}")
    return EXIT_OK


def _parse_eval_specs(raw_list) -> list[tuple[str, str]]:
    out = []
    for item in raw_list:
        if "=" in item:
            name, _, path = item.partition("=")
        else:
            name, path = Path(item).stem, item
        out.append((name.strip(), path.strip()))
    return out


def cmd_grid(args) -> int:
    cfg = _load_config_section(args.config, "grid")
    data = _resolve(args, "data", cfg, None)
    dry = args.dry_run or cfg.get("dry-run", "").strip().lower() in ("1", "true", "yes", "on")
    if data is None and not dry:
        raise ConfigurationError("grid needs --data (or --dry-run)")
    evals = _parse_eval_specs(args.eval if args.eval else _csv_list(cfg.get("eval", "")))
    baseline = tuple(float(x) for x in _csv_list(
        _resolve(args, "baseline", cfg, ",".join(str(b) for b in DEFAULT_BASELINE))))
    ecfg = ExperimentConfig(
        data_path=data or "",
        eval_sets=evals,
        architectures=_csv_list(_resolve(args, "architectures", cfg, ",".join(ARCHITECTURES))),
        ansatze=_csv_list(_resolve(args, "ansatze", cfg, ",".join(ANSATZ_IDS))),
        encodings=_csv_list(_resolve(args, "encodings", cfg, "angle,amplitude")),
        train_cfg=_train_config(args, cfg),
        out_dir=_resolve(args, "out", cfg, "out"),
        repetitions=_resolve(args, "reps", cfg, 1, int),
        workers=_resolve(args, "workers", cfg, 1, int),
        baseline=baseline,
        dry_run=dry,
    )
    rows = run_grid(ecfg)
    n_fail = sum(1 for r in rows if r.status == "failed")
    for r in rows:
        extra = f" error={r.error}" if r.status == "failed" else ""
        print(f"{r.architecture} {r.ansatz} {r.encoding} rep={r.rep} "
              f"params={r.parameters} status={r.status}{extra}")
    print(f"grid complete: {len(rows)} rows, {n_fail} failed; reports in {ecfg.out_dir}")
    return EXIT_OK if n_fail == 0 else EXIT_NUMERICAL


def _inspect_one(ansatz, enc_kind, layers, check) -> tuple[bool, list[str]]:
    """Returns (hard_ok, lines).  Depth differences are flagged, never failed."""
    circuit = build_ansatz(ansatz, encoding_from_name(enc_kind), layers)
    m = complexity_metrics(circuit, layers)
    lines = []
    hard_ok = True
    if check:
        depth_ref, two_q_ref, gates_ref, params_ref = REFERENCE_COMPLEXITY[(ansatz, enc_kind)]
        expect_params = ARTIFACT_PARAMS[ansatz]
        parts = [f"{ansatz} {enc_kind}"]
        for label, got, ref in (("gates", m.total_gates, gates_ref),
                                ("two_qubit", m.two_qubit_gates, two_q_ref)):
            ok = got == ref
            hard_ok &= ok
            parts.append(f"{label}={got}/{ref}{'' if ok else ' MISMATCH'}")
        if m.trainable_params == params_ref:
            parts.append(f"params={m.trainable_params}/{params_ref}")
        elif m.trainable_params == expect_params:
            parts.append(f"params={m.trainable_params}/{params_ref} KNOWN-DEVIATION")
        else:
            parts.append(f"params={m.trainable_params}/{params_ref} MISMATCH")
            hard_ok = False
        flag = "" if m.depth == depth_ref else " FLAGGED"
        parts.append(f"depth={m.depth}/{depth_ref}{flag} depth_serial={m.total_gates}")
        lines.append(" ".join(parts))
    else:
        lines.append(f"ansatz={ansatz} encoding={enc_kind} layers={layers} qubits={circuit.n_qubits}")
        lines.extend(circuit_lines(circuit))
        lines.append(f"gates={m.total_gates} two_qubit={m.two_qubit_gates} "
                     f"params={m.trainable_params} depth={m.depth} depth_serial={m.total_gates}")
    return hard_ok, lines


def cmd_inspect(args) -> int:
    cfg = _load_config_section(args.config, "inspect-circuit")
    layers = _resolve(args, "layers", cfg, 2, int)
    if args.check_table1:
        all_ok = True
        for ansatz in ANSATZ_IDS:
            for enc_kind in ("angle", "amplitude"):
                # the embedded reference metrics are defined at 2 layers
                ok, lines = _inspect_one(ansatz, enc_kind, 2, check=True)
                all_ok &= ok
                print("\n".join(lines))
        print("conformance:", "PASS" if all_ok else "FAIL")
        return EXIT_OK if all_ok else EXIT_CONFORMANCE
    ansatz = _resolve(args, "ansatz", cfg, None)
    enc_kind = _resolve(args, "encoding", cfg, None)
    if ansatz is None or enc_kind is None:
        raise ConfigurationError("inspect-circuit needs --ansatz and --encoding "
                                 "(or --check-table1)")
    _, lines = _inspect_one(ansatz, enc_kind, layers, check=False)
    print("\n".join(lines))
    return EXIT_OK


def cmd_gradcheck(args) -> int:
    cfg = _load_config_section(args.config, "gradcheck")
    tol = _resolve(args, "tolerance", cfg, 1e-5, float)
    n_seeds = _resolve(args, "seeds", cfg, 10, int)
    seed0 = _resolve(args, "seed", cfg, 0, int)
    if tol < 0:
        raise ConfigurationError(f"tolerance must be >= 0, got {tol}")
    all_ok = True
    for arch in ARCHITECTURES:
        for ansatz in ANSATZ_IDS:
            for enc_kind in ("angle", "amplitude"):
                worst = 0.0
                for s in range(n_seeds):
                    rng = np.random.default_rng(seed0 + s)
                    model = build_model(arch, ansatz, encoding_from_name(enc_kind))
                    init_parameters(model, seed0 + s)
                    feats = rng.uniform(0.05, 1.0, 16)
                    target = rng.uniform(-18.0, -2.0)
                    worst = max(worst, finite_difference_check(model, feats, target))
                ok = worst <= tol
                all_ok &= ok
                print(f"{arch} {ansatz} {enc_kind} max_dev={worst:.3e} "
                      f"{'PASS' if ok else 'FAIL'}")
    return EXIT_OK if all_ok else EXIT_CONFORMANCE


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors are config errors (exit 1, not 2)
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="qnnreg",
                description="hybrid quantum-classical regression experiments")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--config", help="INI config file; flags override it")
        sp.add_argument("--seed", type=int, help="base RNG seed")
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--workers", type=int, help="parallel variant workers (grid)")

    g = sub.add_parser("generate", help="write a synthetic dataset CSV")
    common(g)
    g.add_argument("--samples", type=int, help="number of samples (default 200)")
    g.add_argument("--path", help="output CSV path")
    g.set_defaults(func=cmd_generate)

    t = sub.add_parser("train", help="train one model variant")
    common(t)
    t.add_argument("--data", help="training dataset CSV")
    t.add_argument("--architecture", choices=ARCHITECTURES)
    t.add_argument("--ansatz", choices=ANSATZ_IDS)
    t.add_argument("--encoding", choices=("angle", "amplitude"))
    t.add_argument("--epochs", type=int)
    t.add_argument("--lr", type=float)
    t.add_argument("--patience", type=int)
    t.add_argument("--factor", type=float)
    t.add_argument("--lr-min", type=float, dest="lr_min")
    t.add_argument("--test-fraction", type=float, dest="test_fraction")
    t.set_defaults(func=cmd_train)

    gr = sub.add_parser("grid", help="train every requested variant and emit reports")
    common(gr)
    gr.add_argument("--data")
    gr.add_argument("--eval", action="append", default=None,
                    help="evaluation set as name=path; repeatable")
    gr.add_argument("--architectures")
    gr.add_argument("--ansatze")
    gr.add_argument("--encodings")
    gr.add_argument("--reps", type=int)
    gr.add_argument("--baseline", help="comma list of baseline RMSEs (train,test,evals...)")
    gr.add_argument("--dry-run", action="store_true",
                    help="construct models and report parameter counts only")
    gr.add_argument("--epochs", type=int)
    gr.add_argument("--lr", type=float)
    gr.add_argument("--patience", type=int)
    gr.add_argument("--factor", type=float)
    gr.add_argument("--lr-min", type=float, dest="lr_min")
    gr.add_argument("--test-fraction", type=float, dest="test_fraction")
    gr.set_defaults(func=cmd_grid)

    ic = sub.add_parser("inspect-circuit", help="print a circuit listing and its metrics")
    common(ic)
    ic.add_argument("--ansatz", choices=ANSATZ_IDS)
    ic.add_argument("--encoding", choices=("angle", "amplitude"))
    ic.add_argument("--layers", type=int)
    ic.add_argument("--check-table1", action="store_true", dest="check_table1",
                    help="compare all ten circuits against the embedded reference metrics")
    ic.set_defaults(func=cmd_inspect)

    gc = sub.add_parser("gradcheck", help="finite-difference check on all 30 variants")
    common(gc)
    gc.add_argument("--tolerance", type=float)
    gc.add_argument("--seeds", type=int, help="seeds per variant (default 10)")
    gc.set_defaults(func=cmd_gradcheck)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (QnnError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
