"""Training loop: descent behaviour, scheduler, determinism, ensembles."""
import numpy as np
import pytest

from qnnreg.circuits import AMPLITUDE, ANGLE
from qnnreg.data import SampleSet, generate_synthetic, minmax_normalize, partition_ensemble_subsets, rmse, split_train_test
from qnnreg.errors import ConfigurationError, NumericalError
from qnnreg.gradients import model_gradient
from qnnreg.models import build_ensemble, build_sequential, init_parameters
from qnnreg.training import TrainConfig, _PlateauScheduler, train


def _tiny_sets(n=24, seed=0):
    raw = generate_synthetic(n, seed=seed)
    train_set, test_set = split_train_test(raw, 0.25, seed=seed)
    normed, mins, maxs = minmax_normalize(train_set)
    from qnnreg.data import apply_normalization
    return normed, apply_normalization(test_set, mins, maxs)


class TestTrainBasics:
    def test_lr_zero_leaves_parameters_unchanged(self):
        train_set, test_set = _tiny_sets()
        model = build_sequential("A1", AMPLITUDE)
        init_parameters(model, 1)
        before = model.params.copy()
        # lr_min must stay below lr_init; use the smallest legal pair
        cfg = TrainConfig(epochs=3, lr_init=1e-300, lr_min=1e-301, seed=1)
        train(model, train_set, test_set, cfg)
        np.testing.assert_allclose(model.params, before, atol=1e-295)

    def test_zero_gradient_fixed_point(self):
        # constant-target data met exactly by the bias leaves params still
        feats = np.random.default_rng(0).uniform(0.2, 1, (12, 16))
        sset = SampleSet(feats, np.full(12, -6.5), [f"s{i}" for i in range(12)])
        model = build_sequential("A1", AMPLITUDE)
        model.params[model.groups["out.bias"]] = -6.5  # prediction == target
        before = model.params.copy()
        train(model, sset, sset, TrainConfig(epochs=2, seed=0))
        np.testing.assert_allclose(model.params, before, atol=1e-12)

    def test_history_row_per_epoch(self):
        train_set, test_set = _tiny_sets()
        model = build_sequential("A1", AMPLITUDE)
        init_parameters(model, 2)
        _, hist = train(model, train_set, test_set, TrainConfig(epochs=7, seed=2))
        assert hist.epochs == list(range(7))
        assert len(hist.train_rmse) == len(hist.test_rmse) == len(hist.lr) == 7

    def test_bit_identical_reruns(self):
        train_set, test_set = _tiny_sets()
        runs = []
        for _ in range(2):
            model = build_sequential("A3", ANGLE)
            init_parameters(model, 5)
            _, hist = train(model, train_set, test_set, TrainConfig(epochs=12, seed=5))
            runs.append((hist.train_rmse, hist.test_rmse))
        assert runs[0][0] == runs[1][0]
        assert runs[0][1] == runs[1][1]

    @pytest.mark.filterwarnings("ignore:overflow:RuntimeWarning")
    @pytest.mark.filterwarnings("ignore:invalid value:RuntimeWarning")
    def test_divergence_aborts_naming_epoch(self):
        train_set, test_set = _tiny_sets()
        model = build_sequential("A1", AMPLITUDE)
        init_parameters(model, 3)
        cfg = TrainConfig(epochs=500, lr_init=1e6, seed=3)
        with pytest.raises(NumericalError, match=r"epoch \d+"):
            train(model, train_set, test_set, cfg)


class TestScheduler:
    def test_lr_never_increases_and_respects_floor(self):
        cfg = TrainConfig(epochs=1, lr_init=0.01, scheduler_patience=2,
                          scheduler_factor=0.5, lr_min=0.004)
        sched = _PlateauScheduler(cfg)
        seen = []
        for _ in range(10):  # never-improving sequence
            sched.step(1.0)
            seen.append(sched.lr)
        assert all(a >= b for a, b in zip(seen, seen[1:]))
        assert seen[-1] == 0.004  # clamped at lr_min

    def test_patience_counts_consecutive_non_improving_epochs(self):
        cfg = TrainConfig(epochs=1, lr_init=0.01, scheduler_patience=3,
                          scheduler_factor=0.5, lr_min=1e-5)
        sched = _PlateauScheduler(cfg)
        sched.step(1.0)       # improvement (from inf)
        sched.step(0.999999)  # below the 1e-4 threshold: stale 1
        sched.step(0.99999)   # stale 2
        assert sched.lr == 0.01
        sched.step(0.99998)   # stale 3 -> decay
        assert sched.lr == 0.005

    def test_real_run_lr_monotonic(self):
        train_set, test_set = _tiny_sets()
        model = build_sequential("A1", AMPLITUDE)
        init_parameters(model, 4)
        cfg = TrainConfig(epochs=60, scheduler_patience=5, seed=4)
        _, hist = train(model, train_set, test_set, cfg)
        assert all(a >= b for a, b in zip(hist.lr, hist.lr[1:]))
        assert min(hist.lr) >= cfg.lr_min

    def test_invalid_configs_rejected(self):
        with pytest.raises(ConfigurationError):
            TrainConfig(lr_init=1e-6, lr_min=1e-5)
        with pytest.raises(ConfigurationError):
            TrainConfig(scheduler_factor=1.5)
        with pytest.raises(ConfigurationError):
            TrainConfig(epochs=0)


class TestDescentProperties:
    def test_small_step_does_not_increase_loss_for_most_inits(self):
        # single descent step at lr 1e-4 on a fixed batch
        train_set, _ = _tiny_sets(30, seed=7)
        ok = 0
        n_seeds = 40
        for seed in range(n_seeds):
            model = build_sequential("A2", AMPLITUDE)
            init_parameters(model, seed)
            loss0, _, grads = model_gradient(model, train_set.features, train_set.targets)
            model.params -= 1e-4 * grads
            loss1, _, _ = model_gradient(model, train_set.features, train_set.targets)
            ok += loss1 <= loss0
        assert ok >= 0.95 * n_seeds

    def test_linear_target_converges_to_half_initial_rmse(self):
        # y = sum(c_i x_i) on 200 samples; the documented convergence gate
        rng = np.random.default_rng(11)
        feats = rng.uniform(0, 1, (200, 16))
        coef = rng.uniform(0, 1, 16)
        targets = feats @ coef
        sset = SampleSet(feats, targets, [str(i) for i in range(200)])
        train_set, test_set = split_train_test(sset, 0.2, seed=11)
        model = build_sequential("A1", AMPLITUDE)
        init_parameters(model, 11)
        _, hist = train(model, train_set, test_set, TrainConfig(epochs=200, seed=11))
        assert hist.train_rmse[-1] <= 0.5 * hist.train_rmse[0]


class TestEnsembleTraining:
    def test_members_train_on_disjoint_subsets(self):
        train_set, test_set = _tiny_sets(27, seed=9)
        subsets = partition_ensemble_subsets(train_set, 9, seed=9)
        assert sum(len(s) for s in subsets) == len(train_set)

    def test_member_isolation(self):
        # perturbing subset j != i leaves member i's trained params unchanged
        raw = generate_synthetic(36, seed=10)
        normed, _, _ = minmax_normalize(raw)
        cfg = TrainConfig(epochs=4, seed=10)

        def run(data):
            model = build_ensemble("A1", AMPLITUDE)
            init_parameters(model, 10)
            train(model, data, data, cfg)
            return model

        m1 = run(normed)
        # rebuild the same partition, then perturb the targets of subset 3 only
        subsets = partition_ensemble_subsets(normed, 9, seed=10)
        poisoned_ids = set(subsets[3].ids)
        feats = normed.features.copy()
        targs = normed.targets.copy()
        for i, sid in enumerate(normed.ids):
            if sid in poisoned_ids:
                targs[i] += 2.5
        m2 = run(SampleSet(feats, targs, list(normed.ids)))
        for m in range(9):
            q1 = m1.params[m1.groups[f"m{m}.quantum"]]
            q2 = m2.params[m2.groups[f"m{m}.quantum"]]
            if m == 3:
                assert not np.array_equal(q1, q2)
            else:
                assert np.array_equal(q1, q2)

    def test_ensemble_history_and_lr_monotone(self):
        train_set, test_set = _tiny_sets(27, seed=12)
        model = build_ensemble("A1", AMPLITUDE)
        init_parameters(model, 12)
        _, hist = train(model, train_set, test_set,
                        TrainConfig(epochs=10, scheduler_patience=2, seed=12))
        assert len(hist.train_rmse) == 10
        assert all(a >= b for a, b in zip(hist.lr, hist.lr[1:]))


def test_history_csv_format(tmp_path):
    train_set, test_set = _tiny_sets()
    model = build_sequential("A1", AMPLITUDE)
    init_parameters(model, 0)
    _, hist = train(model, train_set, test_set, TrainConfig(epochs=3, seed=0))
    path = tmp_path / "history.csv"
    hist.write_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "epoch,train_rmse,test_rmse,lr,elapsed_s"
    assert len(lines) == 4
    assert lines[1].startswith("0,")
