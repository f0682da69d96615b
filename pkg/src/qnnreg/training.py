"""Full-batch gradient-descent training with a plateau LR scheduler.

Each epoch computes the exact gradient of L = 1/2 * mean squared error
over the whole training batch, steps ``params -= lr * grad`` and then
records train/test RMSE.  When train RMSE fails to improve by at least
``improve_threshold`` for ``scheduler_patience`` consecutive epochs the
learning rate is multiplied by ``scheduler_factor`` (never below
``lr_min``) and the patience counter restarts.

The data sets are tiny (tens of samples), which is what makes plain
full-batch descent the appropriate reading of "gradient-based"; the
batch size is therefore not configurable.

Ensembles train their members in lockstep, one epoch at a time, each
member on its own disjoint subset with its own scheduler state; the
history rows record the ensemble-level (mean prediction) RMSE and the
largest member learning rate, so the lr column stays non-increasing.

Everything is deterministic: given (seed, config, data) two runs
produce bit-identical RMSE sequences.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .data import SampleSet, partition_ensemble_subsets, rmse
from .errors import ConfigurationError, NumericalError
from .gradients import model_gradient
from .models import HybridModel, forward

IMPROVE_THRESHOLD = 1e-4  # minimum train-RMSE drop that counts as progress


@dataclass
class TrainConfig:
    epochs: int = 300
    lr_init: float = 0.01
    scheduler_patience: int = 20
    scheduler_factor: float = 0.5
    lr_min: float = 1e-5
    seed: int = 0
    test_fraction: float = 0.2

    def __post_init__(self):
        if not self.lr_init > self.lr_min > 0:
            raise ConfigurationError(
                f"need lr_init > lr_min > 0, got {self.lr_init} / {self.lr_min}")
        if not 0.0 < self.scheduler_factor < 1.0:
            raise ConfigurationError(
                f"scheduler_factor must be in (0, 1), got {self.scheduler_factor}")
        if self.epochs < 1:
            raise ConfigurationError(f"epochs must be >= 1, got {self.epochs}")
        if not 0.0 < self.test_fraction < 1.0:
            raise ConfigurationError(
                f"test_fraction must be in (0, 1), got {self.test_fraction}")


@dataclass
class TrainHistory:
    """Per-epoch records; epochs are numbered from 0."""

    epochs: list[int] = field(default_factory=list)
    train_rmse: list[float] = field(default_factory=list)
    test_rmse: list[float] = field(default_factory=list)
    lr: list[float] = field(default_factory=list)
    elapsed_s: list[float] = field(default_factory=list)

    def append(self, epoch, train, test, lr, elapsed):
        self.epochs.append(epoch)
        self.train_rmse.append(train)
        self.test_rmse.append(test)
        self.lr.append(lr)
        self.elapsed_s.append(elapsed)

    def rows(self):
        return zip(self.epochs, self.train_rmse, self.test_rmse, self.lr, self.elapsed_s)

    def write_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("epoch,train_rmse,test_rmse,lr,elapsed_s\n")
            for e, tr, te, lr, el in self.rows():
                fh.write(f"{e},{repr(tr)},{repr(te)},{repr(lr)},{el:.6f}\n")


class _PlateauScheduler:
    def __init__(self, cfg: TrainConfig):
        self.cfg = cfg
        self.lr = cfg.lr_init
        self.best = np.inf
        self.stale = 0

    def step(self, train_rmse: float) -> None:
        if self.best - train_rmse >= IMPROVE_THRESHOLD:
            self.best = train_rmse
            self.stale = 0
            return
        self.stale += 1
        if self.stale >= self.cfg.scheduler_patience:
            self.lr = max(self.lr * self.cfg.scheduler_factor, self.cfg.lr_min)
            self.stale = 0


def _epoch_step(model, subset, lr, epoch):
    try:
        _, _, grads = model_gradient(model, subset.features, subset.targets)
    except NumericalError as exc:
        raise NumericalError(f"{exc} (epoch {epoch})") from None
    model.params -= lr * grads


def train(model: HybridModel, train_set: SampleSet, test_set: SampleSet,
          cfg: TrainConfig) -> tuple[HybridModel, TrainHistory]:
    """Train in place; returns the model and its per-epoch history."""
    history = TrainHistory()
    is_ensemble = model.architecture == "ensemble"
    if is_ensemble:
        subsets = partition_ensemble_subsets(train_set, model.members, cfg.seed)
        schedulers = [_PlateauScheduler(cfg) for _ in range(model.members)]
        member_rmse = [np.inf] * model.members
    else:
        scheduler = _PlateauScheduler(cfg)

    for epoch in range(cfg.epochs):
        t0 = time.perf_counter()
        if is_ensemble:
            lr_used = max(s.lr for s in schedulers)
            for m in range(model.members):
                sub = subsets[m]
                member = _member_view(model, m)
                _epoch_step(member, sub, schedulers[m].lr, epoch)
                member_rmse[m] = rmse(forward(member, sub.features), sub.targets)
        else:
            lr_used = scheduler.lr
            _epoch_step(model, train_set, scheduler.lr, epoch)

        train_pred = forward(model, train_set.features)
        test_pred = forward(model, test_set.features)
        if not (np.all(np.isfinite(train_pred)) and np.all(np.isfinite(test_pred))):
            raise NumericalError(f"non-finite prediction (epoch {epoch})")
        tr = rmse(train_pred, train_set.targets)
        te = rmse(test_pred, test_set.targets)
        history.append(epoch, tr, te, lr_used, time.perf_counter() - t0)

        if is_ensemble:
            for m in range(model.members):
                schedulers[m].step(member_rmse[m])
        else:
            scheduler.step(tr)
    return model, history


def _member_view(model: HybridModel, m: int) -> HybridModel:
    """A sequential-model facade over ensemble member m's parameter rows.

    Shares the member's slice of the flat store, so stepping the view
    updates the ensemble in place.
    """
    base = model.groups[f"m{m}.quantum"].start
    groups = {
        "quantum": model.groups[f"m{m}.quantum"],
        "out.weight": model.groups[f"m{m}.out.weight"],
        "out.bias": model.groups[f"m{m}.out.bias"],
    }
    view = HybridModel("sequential", model.ansatz, model.encoding, model.layers, 1,
                       model.circuit_compiled,
                       {k: slice(s.start - base, s.stop - base) for k, s in groups.items()},
                       model.params[groups["quantum"].start:groups["out.bias"].stop])
    return view
