"""Gradients for hybrid models.

Two quantum gradient engines are provided:

* parameter shift -- the reference path.  Single-qubit rotations
  (RX/RY/RZ and each Rot3 angle) use the exact two-term rule

      dE/dt = [E(t + pi/2) - E(t - pi/2)] / 2.

  Controlled rotations have a three-eigenvalue generator (0, +-1/2),
  so the two-term rule does not apply to them; they use the exact
  four-term rule

      dE/dt = a [E(t+pi/2) - E(t-pi/2)] - b [E(t+3pi/2) - E(t-3pi/2)],
      a = (sqrt(2)+1) / (4 sqrt(2)),  b = (sqrt(2)-1) / (4 sqrt(2)).

  A slot bound to several gates (weight sharing, re-uploaded features)
  accumulates one shifted-evaluation set per occurrence, in circuit
  order, which keeps results deterministic.

* adjoint -- a reverse sweep over the gate list computing every
  partial in O(gates) simulator work instead of O(params) circuit
  evaluations.  Training uses it by default; it is pinned to the
  reference path by tests (the two agree to ~1e-12) and both are
  checked against central finite differences.

Classical layers are differentiated analytically, as is the
amplitude-encoding input map v -> v/||v|| (its Jacobian composed with
the linearity of state preparation), so the parallel model's input
layer never needs numeric differentiation.
"""
from __future__ import annotations

import numpy as np

from .errors import NumericalError
from .models import _HIDDEN, HybridModel, forward_param_rows
from .simulator import (
    CompiledCircuit,
    all_z_expectations,
    apply_ctrl_pauli_projected,
    apply_pauli,
    compile_circuit,
    resolve_angles,
    run_adjoint,
    run_compiled,
    run_from_states,
    z_signs,
    _ROT_MATS,
    _X_FLIP,
    _kernel_1q,
    _kernel_ctrl,
)

_SQ2 = np.sqrt(2.0)
_FOUR_A = (_SQ2 + 1.0) / (4.0 * _SQ2)
_FOUR_B = (_SQ2 - 1.0) / (4.0 * _SQ2)

_MAX_ROWS = 16384  # chunk bound for batched shifted evaluations

_PAULI_OF = {"RX": "X", "RY": "Y", "RZ": "Z", "CRX": "X", "CRY": "Y", "CRZ": "Z"}


# ---------------------------------------------------------------------------
# parameter-shift engine


def _shift_terms(compiled: CompiledCircuit, slot_of: np.ndarray, n_slots: int,
                 scale_of=None):
    """Flat (slot, angle_pos, shift, coeff) table for every occurrence."""
    slots, pos, shifts, coeffs = [], [], [], []
    for p in range(compiled.n_angles):
        s = slot_of[p]
        if s < 0 or not compiled.shiftable[p]:
            continue
        scale = 1.0 if scale_of is None else scale_of[p]
        if compiled.four_term[p]:
            table = ((np.pi / 2, _FOUR_A), (-np.pi / 2, -_FOUR_A),
                     (3 * np.pi / 2, -_FOUR_B), (-3 * np.pi / 2, _FOUR_B))
        else:
            table = ((np.pi / 2, 0.5), (-np.pi / 2, -0.5))
        for sh, c in table:
            slots.append(s)
            pos.append(p)
            shifts.append(sh)
            coeffs.append(c * scale)
    return (np.asarray(slots, dtype=np.intp), np.asarray(pos, dtype=np.intp),
            np.asarray(shifts), np.asarray(coeffs), n_slots)


def trainable_shift_terms(compiled: CompiledCircuit):
    return _shift_terms(compiled, compiled.train_slot, compiled.spec.trainable_slots)


def feature_shift_terms(compiled: CompiledCircuit):
    # d(angle)/d(feature) = the binding's scale factor; folded into coeffs
    return _shift_terms(compiled, compiled.feat_slot, compiled.spec.feature_slots,
                        scale_of=compiled.feat_scale)


def shifted_slot_gradients(compiled: CompiledCircuit, base_angles: np.ndarray, terms):
    """Per-slot gradients of every <Z_w> for every angle row.

    base_angles (B, A) -> (B, n_slots, n_wires).
    """
    slots, pos, shifts, coeffs, n_slots = terms
    B, A = base_angles.shape
    W = compiled.spec.n_qubits
    grads = np.zeros((B, n_slots, W))
    if len(pos) == 0:
        return grads
    step = max(1, _MAX_ROWS // max(B, 1))
    for lo in range(0, len(pos), step):
        hi = min(lo + step, len(pos))
        t = hi - lo
        big = np.repeat(base_angles[None, :, :], t, axis=0)  # (t, B, A)
        big[np.arange(t), :, pos[lo:hi]] += shifts[lo:hi, None]
        states = run_compiled(compiled, big.reshape(t * B, A))
        e = all_z_expectations(states, W).reshape(t, B, W)
        contrib = e * coeffs[lo:hi, None, None]
        # slots repeat across occurrences/shift terms; add.at accumulates
        np.add.at(grads, (slice(None), slots[lo:hi]), contrib.transpose(1, 0, 2))
    return grads


# ---------------------------------------------------------------------------
# adjoint engine


def adjoint_circuit_gradients(compiled: CompiledCircuit, base_angles: np.ndarray,
                              want_features: bool = False):
    """One reverse sweep: (expectations (B, W), d<Z>/dslot (B, P, W),
    d<Z>/dfeature (B, F, W) or None).

    Feature gradients cover angle-encoded rotations only; amplitude
    preparation inputs are handled by :func:`amplitude_input_gradients`.
    """
    B = base_angles.shape[0]
    n = compiled.spec.n_qubits
    psi = run_compiled(compiled, base_angles)
    e = all_z_expectations(psi, n)
    mu = (psi[:, None, :] * z_signs(n)[None, :, :]).reshape(B * n, 2**n)
    gtrain = np.zeros((B, compiled.spec.trainable_slots, n))
    gfeat = np.zeros((B, compiled.spec.feature_slots, n)) if want_features else None

    for kind, a, b, pos in reversed(compiled.steps):
        if kind == "PREP":
            continue  # always first; nothing differentiable precedes it
        if kind == "CNOT":
            _kernel_ctrl(psi, _X_FLIP, a, b, n)
            _kernel_ctrl(mu, _X_FLIP, a, b, n)
            continue
        controlled = kind[0] == "C"
        tslot = compiled.train_slot[pos]
        fslot = compiled.feat_slot[pos] if want_features else -1
        if tslot >= 0 or fslot >= 0:
            # dG psi_before = (-i/2) sigma~ psi_after; 2 Re<mu|dG psi> = Im<mu|sigma~ psi>
            if controlled:
                d = apply_ctrl_pauli_projected(psi, _PAULI_OF[kind], a, b, n)
            else:
                d = apply_pauli(psi, _PAULI_OF[kind], a, n)
            g = np.einsum("bwd,bd->bw", mu.conj().reshape(B, n, 2**n), d).imag
            if tslot >= 0:
                gtrain[:, tslot, :] += g
            else:
                gfeat[:, fslot, :] += g * compiled.feat_scale[pos]
        inv = _ROT_MATS[kind[1:] if controlled else kind](-base_angles[:, pos])
        if controlled:
            _kernel_ctrl(psi, inv, a, b, n)
            _kernel_ctrl(mu, np.repeat(inv, n, axis=0), a, b, n)
        else:
            _kernel_1q(psi, inv, a, n)
            _kernel_1q(mu, np.repeat(inv, n, axis=0), a, n)
    if not np.all(np.isfinite(gtrain)):
        raise NumericalError("non-finite adjoint gradient")
    return e, gtrain, gfeat


# ---------------------------------------------------------------------------
# circuit-level public ops


def circuit_param_gradients(circuit_or_compiled, features, params,
                            method: str = "shift") -> np.ndarray:
    """d<Z_w>/d(trainable slot) for one sample: (n_slots, n_wires)."""
    compiled = (circuit_or_compiled if isinstance(circuit_or_compiled, CompiledCircuit)
                else compile_circuit(circuit_or_compiled))
    base = resolve_angles(compiled, features, params)
    if method == "adjoint":
        _, g, _ = adjoint_circuit_gradients(compiled, base)
    else:
        g = shifted_slot_gradients(compiled, base, trainable_shift_terms(compiled))
    if not np.all(np.isfinite(g)):
        raise NumericalError("non-finite parameter-shift gradient")
    return g[0]


def quantum_param_gradient(circuit, features, params, wire: int) -> np.ndarray:
    """Partial derivatives of <Z_wire> w.r.t. each trainable slot
    (parameter-shift reference path)."""
    return circuit_param_gradients(circuit, features, params)[:, wire]


def amplitude_input_gradients(compiled: CompiledCircuit, values: np.ndarray,
                              params) -> np.ndarray:
    """d<Z_w>/d(raw amplitude inputs) for the normalized-prep circuit.

    For E_w(v) = <v|U' Z_w U|v> / <v|v> with U the post-prep unitary,
    the gradient in real v is 2 (Re(U' Z_w U v) - E_w v) / ||v||^2.
    Returns (B, n_values, n_wires).
    """
    values = np.asarray(values, dtype=np.float64)
    if values.ndim == 1:
        values = values[None, :]
    B, F = values.shape
    n = compiled.spec.n_qubits
    angles = resolve_angles(compiled, values, params)
    norms2 = (values ** 2).sum(axis=1)
    if np.any(norms2 == 0.0):
        from .errors import DegenerateInputError
        raise DegenerateInputError("amplitude input row is all zeros; norm undefined")
    uv = run_from_states(compiled, angles, values.astype(np.complex128))  # U v, linear
    signs = z_signs(n)
    # <Z_w> of the normalized state; uv is unnormalized, so divide by <v|v>
    e = ((np.abs(uv) ** 2) @ signs.T) / norms2[:, None]
    out = np.empty((B, F, n))
    for w in range(n):
        av = run_adjoint(compiled, angles, uv * signs[w])  # U^dag Z_w U v
        out[:, :, w] = 2.0 * (av.real - e[:, w:w + 1] * values) / norms2[:, None]
    return out


# ---------------------------------------------------------------------------
# full-model gradients


def _circuit_pass(compiled, feats, qparams, want_feat_grads, method):
    """(z expectations (N, W), train grads (N, P, W), feature grads or None).

    Feature grads here cover angle-encoded gates; amplitude inputs are
    the caller's business (analytic path).
    """
    base = resolve_angles(compiled, feats, qparams)
    if method == "adjoint":
        return adjoint_circuit_gradients(compiled, base, want_features=want_feat_grads)
    z = all_z_expectations(run_compiled(compiled, base), compiled.spec.n_qubits)
    gtrain = shifted_slot_gradients(compiled, base, trainable_shift_terms(compiled))
    gfeat = (shifted_slot_gradients(compiled, base, feature_shift_terms(compiled))
             if want_feat_grads else None)
    return z, gtrain, gfeat


def model_gradient(model: HybridModel, features, targets, method: str = "adjoint"):
    """Full-batch gradient of L = (1/2N) sum (pred - target)^2.

    Returns (loss, predictions, grad) with grad aligned to the flat
    parameter store.  ``method`` selects the quantum engine: "adjoint"
    (fast, default) or "shift" (parameter-shift reference).
    """
    x = np.asarray(features, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    t = np.asarray(targets, dtype=np.float64).reshape(-1)
    N = x.shape[0]
    g = model.groups
    p = model.params
    grads = np.zeros_like(p)
    compiled = model.circuit_compiled
    W = compiled.spec.n_qubits

    if model.architecture == "sequential":
        q = p[g["quantum"]]
        w = p[g["out.weight"]]
        z, qg, _ = _circuit_pass(compiled, x, q, False, method)
        pred = z @ w + p[g["out.bias"]][0]
        delta = (pred - t) / N
        dz = delta[:, None] * w[None, :]
        grads[g["quantum"]] = np.einsum("nw,nkw->k", dz, qg)
        grads[g["out.weight"]] = np.einsum("n,nw->w", delta, z)
        grads[g["out.bias"]] = delta.sum()

    elif model.architecture == "parallel":
        w1 = p[g["in.weight"]].reshape(_HIDDEN, 16)
        y = x @ w1.T + p[g["in.bias"]]
        halves = (y[:, :16], y[:, 16:])
        qkeys = ("branch0.quantum", "branch1.quantum")
        angle_enc = model.encoding.kind == "angle"
        zs, qgs, fgs = [], [], []
        for h, k in zip(halves, qkeys):
            z_b, qg_b, fg_b = _circuit_pass(compiled, h, p[g[k]], angle_enc, method)
            if not angle_enc:
                fg_b = amplitude_input_gradients(compiled, h, p[g[k]])
            zs.append(z_b)
            qgs.append(qg_b)
            fgs.append(fg_b)
        z = np.concatenate(zs, axis=1)
        w2 = p[g["out.weight"]]
        pred = z @ w2 + p[g["out.bias"]][0]
        delta = (pred - t) / N
        dz = delta[:, None] * w2[None, :]  # (N, 8)
        dy = np.empty_like(y)
        for b, k in enumerate(qkeys):
            dzb = dz[:, b * W:(b + 1) * W]
            grads[g[k]] = np.einsum("nw,nkw->k", dzb, qgs[b])
            dy[:, b * 16:(b + 1) * 16] = np.einsum("nw,nfw->nf", dzb, fgs[b])
        grads[g["out.weight"]] = np.einsum("n,nw->w", delta, z)
        grads[g["out.bias"]] = delta.sum()
        grads[g["in.weight"]] = np.einsum("no,ni->oi", dy, x).reshape(-1)
        grads[g["in.bias"]] = dy.sum(axis=0)

    else:  # ensemble: prediction = mean of members
        member_slices = [(g[f"m{m}.quantum"], g[f"m{m}.out.weight"], g[f"m{m}.out.bias"])
                         for m in range(model.members)]
        # predictions first (delta needs all of them), then member chains
        zs, qgs = [], []
        parts = np.zeros((N, model.members))
        for m, (qs, ws, bs) in enumerate(member_slices):
            zm, qgm, _ = _circuit_pass(compiled, x, p[qs], False, method)
            zs.append(zm)
            qgs.append(qgm)
            parts[:, m] = zm @ p[ws] + p[bs][0]
        pred = parts.mean(axis=1)
        delta = (pred - t) / N
        dmember = delta / model.members  # d pred / d member pred = 1/members
        for m, (qs, ws, bs) in enumerate(member_slices):
            dz = dmember[:, None] * p[ws][None, :]
            grads[qs] = np.einsum("nw,nkw->k", dz, qgs[m])
            grads[ws] = np.einsum("n,nw->w", dmember, zs[m])
            grads[bs] = dmember.sum()

    loss = 0.5 * np.mean((pred - t) ** 2)
    if not (np.isfinite(loss) and np.all(np.isfinite(grads))):
        raise NumericalError("non-finite loss or gradient")
    return loss, pred, grads


def model_backward(model: HybridModel, features, target) -> np.ndarray:
    """Gradient of the single-sample squared-error loss 1/2 (pred - target)^2,
    quantum parts via the parameter-shift reference path."""
    _, _, grads = model_gradient(model, np.asarray(features)[None, :], [float(target)],
                                 method="shift")
    return grads


def finite_difference_check(model: HybridModel, features, target,
                            h: float = 1e-4) -> float:
    """Max relative deviation between analytic and central-difference
    gradients over all trainable parameters.

    Deviation metric: |analytic - numeric| / max(1, |analytic|).
    """
    if not 1e-7 < h < 1e-2:
        raise ValueError(f"finite-difference step must be in (1e-7, 1e-2), got {h}")
    analytic = model_backward(model, features, target)
    P = model.n_params
    rows = np.repeat(model.params[None, :], 2 * P, axis=0)
    rows[np.arange(P), np.arange(P)] += h
    rows[P + np.arange(P), np.arange(P)] -= h
    preds = forward_param_rows(model, features, rows)
    losses = 0.5 * (preds - float(target)) ** 2
    numeric = (losses[:P] - losses[P:]) / (2.0 * h)
    dev = np.abs(analytic - numeric) / np.maximum(1.0, np.abs(analytic))
    return float(dev.max())


def circuit_fd_check(circuit_or_compiled, features, params, h: float = 1e-4,
                     method: str = "shift") -> float:
    """Finite-difference check of the bare circuit gradients, over every
    trainable slot and every measured wire."""
    compiled = (circuit_or_compiled if isinstance(circuit_or_compiled, CompiledCircuit)
                else compile_circuit(circuit_or_compiled))
    params = np.asarray(params, dtype=np.float64)
    analytic = circuit_param_gradients(compiled, features, params, method=method)
    P = params.size
    rows = np.repeat(params[None, :], 2 * P, axis=0)
    rows[np.arange(P), np.arange(P)] += h
    rows[P + np.arange(P), np.arange(P)] -= h
    feats = np.asarray(features, dtype=np.float64)
    if feats.ndim == 1:
        feats = feats[None, :]
    e = all_z_expectations(
        run_compiled(compiled, resolve_angles(compiled, feats, rows)),
        compiled.spec.n_qubits)
    numeric = (e[:P] - e[P:]) / (2.0 * h)
    dev = np.abs(analytic - numeric) / np.maximum(1.0, np.abs(analytic))
    return float(dev.max())
