"""Parameter-shift and adjoint gradients against analytic values and
finite differences."""
import numpy as np
import pytest

from qnnreg.circuits import ANSATZ_IDS, AMPLITUDE, ANGLE, build_ansatz, encoding_from_name
from qnnreg.gradients import (
    adjoint_circuit_gradients,
    amplitude_input_gradients,
    circuit_fd_check,
    circuit_param_gradients,
    finite_difference_check,
    model_backward,
    model_gradient,
    quantum_param_gradient,
)
from qnnreg.ir import CircuitSpec, GateOp, Trainable
from qnnreg.models import build_model, forward, init_parameters
from qnnreg.simulator import compile_circuit, resolve_angles

ALL_PAIRS = [(a, e) for a in ANSATZ_IDS for e in ("angle", "amplitude")]
ALL_VARIANTS = [(arch, a, e) for arch in ("sequential", "parallel", "ensemble")
                for a, e in ALL_PAIRS]


def _single_ry_circuit():
    return CircuitSpec(1, (GateOp("RY", (0,), (Trainable(0),)),))


class TestShiftRuleAnalytic:
    def test_ry_gradient_at_zero_is_zero(self):
        # <Z> = cos(theta); d/dtheta at 0 is 0
        g = quantum_param_gradient(_single_ry_circuit(), None, [0.0], wire=0)
        assert g[0] == pytest.approx(0.0, abs=1e-15)

    def test_ry_gradient_at_half_pi_is_minus_one(self):
        g = quantum_param_gradient(_single_ry_circuit(), None, [np.pi / 2], wire=0)
        assert g[0] == pytest.approx(-1.0, abs=1e-12)

    @pytest.mark.parametrize("theta", np.linspace(-3, 3, 7))
    def test_ry_gradient_is_minus_sin(self, theta):
        g = quantum_param_gradient(_single_ry_circuit(), None, [theta], wire=0)
        assert g[0] == pytest.approx(-np.sin(theta), abs=1e-12)


class TestCircuitFiniteDifference:
    def test_a1_amplitude_24_partials(self, rng):
        circuit = build_ansatz("A1", AMPLITUDE, 2)
        feats = rng.uniform(0.05, 1, 16)
        params = rng.uniform(0, 2 * np.pi, 24)
        assert circuit_fd_check(circuit, feats, params, h=1e-4) < 1e-5

    @pytest.mark.parametrize("ansatz,encoding", ALL_PAIRS)
    def test_all_circuits_many_draws(self, ansatz, encoding, rng):
        # reference-path gradients vs central differences, many random draws
        circuit = build_ansatz(ansatz, encoding_from_name(encoding), 2)
        compiled = compile_circuit(circuit)
        for _ in range(100):
            feats = rng.uniform(0.05, 1, 16)
            params = rng.uniform(0, 2 * np.pi, circuit.trainable_slots)
            assert circuit_fd_check(compiled, feats, params, h=1e-4) < 1e-5

    def test_deviation_shrinks_with_h(self, rng):
        circuit = build_ansatz("A2", AMPLITUDE, 2)
        feats = rng.uniform(0.05, 1, 16)
        params = rng.uniform(0, 2 * np.pi, circuit.trainable_slots)
        dev_coarse = circuit_fd_check(circuit, feats, params, h=1e-2)
        dev_fine = circuit_fd_check(circuit, feats, params, h=1e-4)
        assert dev_fine <= dev_coarse


class TestAdjointMatchesShift:
    @pytest.mark.parametrize("ansatz,encoding", ALL_PAIRS)
    def test_engines_agree(self, ansatz, encoding, rng):
        circuit = build_ansatz(ansatz, encoding_from_name(encoding), 2)
        feats = rng.uniform(0.05, 1, 16)
        params = rng.uniform(0, 2 * np.pi, circuit.trainable_slots)
        gs = circuit_param_gradients(circuit, feats, params, method="shift")
        ga = circuit_param_gradients(circuit, feats, params, method="adjoint")
        np.testing.assert_allclose(ga, gs, atol=1e-12)

    def test_feature_gradients_agree(self, rng):
        # angle-encoded feature partials: adjoint vs shift-on-features
        from qnnreg.gradients import feature_shift_terms, shifted_slot_gradients
        circuit = build_ansatz("A4", ANGLE, 2)
        compiled = compile_circuit(circuit)
        feats = rng.uniform(0.05, 1, 16)
        params = rng.uniform(0, 2 * np.pi, circuit.trainable_slots)
        base = resolve_angles(compiled, feats, params)
        shift = shifted_slot_gradients(compiled, base, feature_shift_terms(compiled))
        _, _, adj = adjoint_circuit_gradients(compiled, base, want_features=True)
        np.testing.assert_allclose(adj, shift, atol=1e-12)


class TestStructuralZeros:
    def test_a4_final_tail_rotations_cannot_reach_other_wires(self, rng):
        # A4's last layer ends with an RY column; an RY on wire j != w has
        # no gate after it touching w, so d<Z_w>/d(that slot) is exactly 0
        circuit = build_ansatz("A4", AMPLITUDE, 2)
        feats = rng.uniform(0.05, 1, 16)
        params = rng.uniform(0, 2 * np.pi, 32)
        grads = circuit_param_gradients(circuit, feats, params)
        tail = {op.bindings[0].slot: op.wires[0]
                for op in circuit.ops[-4:]}  # final RY column, slots 28..31
        assert sorted(tail) == [28, 29, 30, 31]
        for slot, wire in tail.items():
            for w in range(4):
                if w != wire:
                    assert abs(grads[slot, w]) < 1e-14
            # sanity: the rotation does move its own wire generically
            assert abs(grads[slot, wire]) > 1e-6

    def test_a4_forward_only_wiring_never_targets_wire_zero(self):
        circuit = build_ansatz("A4", AMPLITUDE, 2)
        targets = [op.wires[1] for op in circuit.ops if op.kind in ("CNOT", "CRX", "CRY", "CRZ")]
        assert 0 not in targets


class TestModelBackward:
    def test_zero_output_weights_zero_quantum_gradient(self, rng):
        model = build_model("sequential", "A2", AMPLITUDE)
        init_parameters(model, 0)
        model.params[model.groups["out.weight"]] = 0.0
        grads = model_backward(model, rng.uniform(0.1, 1, 16), -7.0)
        np.testing.assert_allclose(grads[model.groups["quantum"]], 0.0, atol=1e-15)

    def test_prediction_equals_target_gives_zero_gradient(self, rng):
        model = build_model("sequential", "A1", AMPLITUDE)
        init_parameters(model, 3)
        feats = rng.uniform(0.1, 1, 16)
        target = float(forward(model, feats)[0])
        np.testing.assert_allclose(model_backward(model, feats, target), 0.0, atol=1e-15)

    def test_gradients_are_deterministic(self, rng):
        model = build_model("parallel", "A3", ANGLE)
        init_parameters(model, 9)
        feats = rng.uniform(0.1, 1, 16)
        g1 = model_backward(model, feats, -5.0)
        g2 = model_backward(model, feats, -5.0)
        assert np.array_equal(g1, g2)

    def test_parallel_angle_full_gradient_vs_fd(self, rng):
        model = build_model("parallel", "A2", ANGLE)
        assert model.n_params == 665
        init_parameters(model, 11)
        dev = finite_difference_check(model, rng.uniform(0.1, 1, 16), -9.0, h=1e-4)
        assert dev < 1e-4

    @pytest.mark.parametrize("arch,ansatz,encoding", [
        ("sequential", "A1", "amplitude"),
        ("sequential", "A3", "angle"),
        ("parallel", "A1", "amplitude"),
        ("parallel", "A5", "angle"),
        ("ensemble", "A2", "amplitude"),
        ("ensemble", "A4", "angle"),
    ])
    def test_hybrid_fd_sample(self, arch, ansatz, encoding, rng):
        model = build_model(arch, ansatz, encoding_from_name(encoding))
        init_parameters(model, 21)
        dev = finite_difference_check(model, rng.uniform(0.1, 1, 16),
                                      float(rng.uniform(-18, -2)))
        assert dev < 1e-4

    def test_linear_only_path_is_near_exact(self, rng):
        # quantum output fixed (zero out-weights leave only affine algebra):
        # central differences on a quadratic loss are exact to rounding
        model = build_model("sequential", "A1", AMPLITUDE)
        init_parameters(model, 2)
        feats = rng.uniform(0.1, 1, 16)
        analytic = model_backward(model, feats, -4.0)
        sl = model.groups["out.weight"]
        h = 1e-3  # loss is quadratic in the affine params
        for k in range(sl.start, sl.stop):
            up = model.params.copy()
            dn = model.params.copy()
            up[k] += h
            dn[k] -= h
            mu = build_model("sequential", "A1", AMPLITUDE)
            mu.params[:] = up
            md = build_model("sequential", "A1", AMPLITUDE)
            md.params[:] = dn
            lu = 0.5 * (forward(mu, feats)[0] + 4.0) ** 2
            ld = 0.5 * (forward(md, feats)[0] + 4.0) ** 2
            assert analytic[k] == pytest.approx((lu - ld) / (2 * h), abs=1e-8)

    def test_model_gradient_methods_agree_all_variants(self, rng):
        for arch, ansatz, encoding in ALL_VARIANTS:
            model = build_model(arch, ansatz, encoding_from_name(encoding))
            init_parameters(model, 4)
            X = rng.uniform(0.05, 1, (3, 16))
            T = rng.uniform(-18, -2, 3)
            l1, p1, g1 = model_gradient(model, X, T, method="shift")
            l2, p2, g2 = model_gradient(model, X, T, method="adjoint")
            assert l1 == pytest.approx(l2, rel=1e-12)
            np.testing.assert_allclose(g1, g2, atol=1e-11)


class TestAmplitudeInputGradients:
    def test_against_finite_differences(self, rng):
        circuit = build_ansatz("A3", AMPLITUDE, 2)
        compiled = compile_circuit(circuit)
        params = rng.uniform(0, 2 * np.pi, circuit.trainable_slots)
        v = rng.uniform(0.2, 1.0, 16)
        analytic = amplitude_input_gradients(compiled, v, params)[0]  # (16, 4)
        from qnnreg.simulator import evaluate_expectations
        h = 1e-6
        for i in range(16):
            up, dn = v.copy(), v.copy()
            up[i] += h
            dn[i] -= h
            fd = (evaluate_expectations(compiled, up, params)[0]
                  - evaluate_expectations(compiled, dn, params)[0]) / (2 * h)
            np.testing.assert_allclose(analytic[i], fd, atol=1e-8)


def test_finite_difference_check_rejects_bad_step(rng):
    model = build_model("sequential", "A1", AMPLITUDE)
    init_parameters(model, 0)
    with pytest.raises(ValueError):
        finite_difference_check(model, rng.uniform(0.1, 1, 16), -5.0, h=1e-8)
