"""Variant-grid reports from the library API.

Runs a deliberately small grid (two ansaetze, one architecture, short
training) and prints the per-architecture report plus the
best-vs-baseline summary it writes.  The CLI equivalent is:

    qnnreg grid --data train.csv --eval nbs=nbs.csv --eval pdbind=pdbind.csv
"""
import tempfile
from pathlib import Path

from qnnreg.data import generate_synthetic, save_samples
from qnnreg.experiment import ExperimentConfig, run_grid
from qnnreg.training import TrainConfig

with tempfile.TemporaryDirectory() as tmp:
    tmp = Path(tmp)
    save_samples(generate_synthetic(81, seed=1), tmp / "train.csv")
    save_samples(generate_synthetic(38, seed=2), tmp / "nbs.csv")
    save_samples(generate_synthetic(50, seed=3), tmp / "pdbind.csv")

    cfg = ExperimentConfig(
        data_path=str(tmp / "train.csv"),
        eval_sets=[("nbs", str(tmp / "nbs.csv")), ("pdbind", str(tmp / "pdbind.csv"))],
        architectures=("sequential",),
        ansatze=("A1", "A3"),
        encodings=("amplitude",),
        train_cfg=TrainConfig(epochs=30, seed=5),
        out_dir=str(tmp / "reports"),
    )
    rows = run_grid(cfg)
    for row in rows:
        print(f"{row.architecture} {row.ansatz} {row.encoding}: "
              f"train {row.train_rmse:.3f} test {row.test_rmse:.3f} "
              f"pdbind {row.eval_rmse['pdbind']:.3f} "
              f"params {row.parameters} ({row.train_seconds:.1f}s)")

    print("\nsummary.csv:")
    print((tmp / "reports" / "summary.csv").read_text())
