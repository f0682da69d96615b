"""Exact complex statevector simulation.

Conventions (fixed, relied on by every other module):

* Amplitudes are a flat contiguous complex128 array indexed by basis
  state, wire 0 being the most significant bit.  Reshaping to
  ``(2,)*n`` therefore puts wire k on axis k.
* ``RX(t) = exp(-i t X / 2)``, RY and RZ analogous.
  ``Rot3(a, b, c) = RZ(c) @ RY(b) @ RZ(a)`` (RZ(a) acts first).
* Controlled rotations apply the rotation on the target when the
  control is |1>; the control wire is listed first.
* ``AmplitudePrep`` overwrites the register with its L2-normalized
  value list.  It is only legal as the first op of a circuit.
* Global phase is never tracked; comparisons use
  :func:`fix_global_phase` or probabilities.

The execution engine is batched: a circuit compiled once runs on ``B``
independent angle rows at a time (shape ``(B, n_angles)``), which is
what makes full-batch training, parameter-shift sweeps and
finite-difference checks cheap.  Compilation expands every Rot3 into
its RZ/RY/RZ factors, so executed steps carry at most one angle each;
the circuit IR (and all gate counts) keep Rot3 as a single gate.

The public ``StateVector`` helpers wrap the same kernels for a single
state.  The dense-matrix oracle at the bottom is an intentionally
separate code path used to cross-check the fast engine.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    ConfigurationError,
    DegenerateInputError,
    InputError,
    NumericalError,
    SizeLimitError,
)
from .ir import CONTROLLED_ROTATIONS, CircuitSpec, Constant, Feature, GateOp, Trainable

# ---------------------------------------------------------------------------
# batched 2x2 rotation matrices; theta may be any shape, result gets (2, 2)
# appended


def _mat_rx(theta):
    theta = np.asarray(theta, dtype=np.float64)
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    m = np.empty(theta.shape + (2, 2), dtype=np.complex128)
    m[..., 0, 0] = c
    m[..., 0, 1] = -1j * s
    m[..., 1, 0] = -1j * s
    m[..., 1, 1] = c
    return m


def _mat_ry(theta):
    theta = np.asarray(theta, dtype=np.float64)
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    m = np.empty(theta.shape + (2, 2), dtype=np.complex128)
    m[..., 0, 0] = c
    m[..., 0, 1] = -s
    m[..., 1, 0] = s
    m[..., 1, 1] = c
    return m


def _mat_rz(theta):
    theta = np.asarray(theta, dtype=np.float64)
    m = np.zeros(theta.shape + (2, 2), dtype=np.complex128)
    m[..., 0, 0] = np.exp(-0.5j * theta)
    m[..., 1, 1] = np.exp(0.5j * theta)
    return m


def _mat_rot3(a, b, c):
    """Rot3(a, b, c) = RZ(c) @ RY(b) @ RZ(a), batched over leading dims."""
    a, b, c = (np.asarray(x, dtype=np.float64) for x in (a, b, c))
    cb, sb = np.cos(b / 2), np.sin(b / 2)
    m = np.empty(np.broadcast(a, b, c).shape + (2, 2), dtype=np.complex128)
    m[..., 0, 0] = np.exp(-0.5j * (a + c)) * cb
    m[..., 0, 1] = -np.exp(0.5j * (a - c)) * sb
    m[..., 1, 0] = np.exp(-0.5j * (a - c)) * sb
    m[..., 1, 1] = np.exp(0.5j * (a + c)) * cb
    return m


_ROT_MATS = {"RX": _mat_rx, "RY": _mat_ry, "RZ": _mat_rz}

_X_FLIP = np.array([[0, 1], [1, 0]], dtype=np.complex128)


# ---------------------------------------------------------------------------
# batched kernels on flat (B, 2**n) arrays, mutated in place


def _target_view(psi, wire, n):
    """View of psi exposing the wire as a length-2 axis (axis 2)."""
    B = psi.shape[0]
    return psi.reshape(B, 1 << wire, 2, 1 << (n - 1 - wire))


def _apply_2x2(view, mat, axis):
    """view[..., {0,1} at axis, ...] <- mat @ same; mat (B, 2, 2) or (2, 2)."""
    sl0 = [slice(None)] * view.ndim
    sl1 = [slice(None)] * view.ndim
    sl0[axis] = 0
    sl1[axis] = 1
    sl0, sl1 = tuple(sl0), tuple(sl1)
    a, b = view[sl0], view[sl1]
    if mat.ndim == 2:
        u00, u01, u10, u11 = mat[0, 0], mat[0, 1], mat[1, 0], mat[1, 1]
    else:
        shape = (mat.shape[0],) + (1,) * (a.ndim - 1)
        u00 = mat[:, 0, 0].reshape(shape)
        u01 = mat[:, 0, 1].reshape(shape)
        u10 = mat[:, 1, 0].reshape(shape)
        u11 = mat[:, 1, 1].reshape(shape)
    na = u00 * a + u01 * b
    nb = u10 * a + u11 * b
    view[sl0] = na
    view[sl1] = nb


def _kernel_1q(psi, mat, wire, n):
    _apply_2x2(_target_view(psi, wire, n), mat, 2)


def _ctrl_view_axis(psi, control, target, n):
    """(view of the control=|1> block, axis index of the target bit)."""
    B = psi.shape[0]
    if target > control:
        v = psi.reshape(B, 1 << control, 2, 1 << (target - control - 1), 2,
                        1 << (n - 1 - target))
        return v[:, :, 1], 3
    v = psi.reshape(B, 1 << target, 2, 1 << (control - target - 1), 2,
                    1 << (n - 1 - control))
    return v[:, :, :, :, 1], 2


def _kernel_ctrl(psi, mat, control, target, n):
    view, axis = _ctrl_view_axis(psi, control, target, n)
    _apply_2x2(view, mat, axis)


def _kernel_prep(psi, values):
    """Overwrite psi with values / ||values|| row-wise; values (B, 2**n)."""
    norms = np.linalg.norm(values, axis=1)
    if np.any(norms == 0.0):
        row = int(np.argmax(norms == 0.0))
        raise DegenerateInputError(f"amplitude input row {row} is all zeros; norm undefined")
    psi[...] = values / norms[:, None]


def _pauli_on_view(view, pauli, axis):
    """Return sigma applied along ``axis`` of ``view`` (new array)."""
    sl0 = [slice(None)] * view.ndim
    sl1 = [slice(None)] * view.ndim
    sl0[axis] = 0
    sl1[axis] = 1
    sl0, sl1 = tuple(sl0), tuple(sl1)
    out = np.empty_like(view)
    if pauli == "X":
        out[sl0] = view[sl1]
        out[sl1] = view[sl0]
    elif pauli == "Y":
        out[sl0] = -1j * view[sl1]
        out[sl1] = 1j * view[sl0]
    else:
        out[sl0] = view[sl0]
        out[sl1] = -view[sl1]
    return out


def apply_pauli(psi, pauli, wire, n):
    """sigma_wire |psi> for flat (B, 2**n) states (new array)."""
    view = _target_view(psi, wire, n)
    return _pauli_on_view(view, pauli, 2).reshape(psi.shape)


def apply_ctrl_pauli_projected(psi, pauli, control, target, n):
    """(|1><1|_c x sigma_t) |psi>: control=0 block zeroed (new array)."""
    out = np.zeros_like(psi)
    src, axis = _ctrl_view_axis(psi, control, target, n)
    dst, _ = _ctrl_view_axis(out, control, target, n)
    dst[...] = _pauli_on_view(src, pauli, axis)
    return out


# ---------------------------------------------------------------------------
# public single-state API


@dataclass
class StateVector:
    """2**n complex amplitudes with unit norm; wire 0 is the MSB."""

    n_qubits: int
    amplitudes: np.ndarray

    @classmethod
    def zero(cls, n_qubits: int) -> "StateVector":
        if not 1 <= n_qubits <= 20:
            raise ConfigurationError(f"n_qubits must be in 1..20, got {n_qubits}")
        amps = np.zeros(2**n_qubits, dtype=np.complex128)
        amps[0] = 1.0
        return cls(n_qubits, amps)

    def copy(self) -> "StateVector":
        return StateVector(self.n_qubits, self.amplitudes.copy())

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


def prepare_amplitude_state(values) -> StateVector:
    """Normalize ``values`` (length 2**n, not all zero) into a state."""
    values = np.asarray(values, dtype=np.float64)
    n = int(round(np.log2(values.size)))
    if 2**n != values.size:
        raise ConfigurationError(f"amplitude list length {values.size} is not a power of two")
    norm = np.linalg.norm(values)
    if norm == 0.0:
        raise DegenerateInputError("amplitude input is all zeros; norm undefined")
    return StateVector(n, (values / norm).astype(np.complex128))


def apply_gate(state: StateVector, gate: GateOp, angles=()) -> StateVector:
    """Apply one gate with fully resolved angles; returns a new state."""
    n = state.n_qubits
    for w in gate.wires:
        if not 0 <= w < n:
            raise ConfigurationError(f"wire {w} out of range for {n} qubits")
    angles = np.asarray(angles, dtype=np.float64)
    psi = state.amplitudes.copy().reshape(1, -1)
    if gate.kind == "AmplitudePrep":
        _kernel_prep(psi, angles.reshape(1, -1).astype(np.complex128))
    elif gate.kind == "CNOT":
        _kernel_ctrl(psi, _X_FLIP, gate.wires[0], gate.wires[1], n)
    elif gate.kind == "Rot3":
        _kernel_1q(psi, _mat_rot3(angles[0], angles[1], angles[2]), gate.wires[0], n)
    elif gate.kind in CONTROLLED_ROTATIONS:
        _kernel_ctrl(psi, _ROT_MATS[gate.kind[1:]](angles[0]), gate.wires[0], gate.wires[1], n)
    elif gate.kind in _ROT_MATS:
        _kernel_1q(psi, _ROT_MATS[gate.kind](angles[0]), gate.wires[0], n)
    else:
        raise ConfigurationError(f"unknown gate kind {gate.kind!r}")
    return StateVector(n, psi.reshape(-1))


def expectation_z(state: StateVector, wire: int) -> float:
    """<psi| Z_wire |psi> = P(bit=0) - P(bit=1)."""
    if not 0 <= wire < state.n_qubits:
        raise ConfigurationError(f"wire {wire} out of range for {state.n_qubits} qubits")
    p = np.abs(state.amplitudes.reshape((2,) * state.n_qubits)) ** 2
    p0 = np.take(p, 0, axis=wire).sum()
    p1 = np.take(p, 1, axis=wire).sum()
    # rounding can push |p0 - p1| past 1 by ~1e-16; the contract is [-1, 1]
    return float(min(1.0, max(-1.0, p0 - p1)))


def fix_global_phase(amplitudes: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Rotate so the first amplitude with |a| > tol is real positive."""
    idx = np.argmax(np.abs(amplitudes) > tol)
    a = amplitudes[idx]
    if abs(a) <= tol:
        return amplitudes.copy()
    return amplitudes * (np.conj(a) / abs(a))


# ---------------------------------------------------------------------------
# compiled batched execution
#
# steps: ("PREP", 0, 0, offset) | ("CNOT", c, t, -1)
#        | ("RX"/"RY"/"RZ", wire, -1, angle_pos)
#        | ("CRX"/"CRY"/"CRZ", c, t, angle_pos)


@dataclass
class CompiledCircuit:
    """Binding-resolution tables plus a flat step list for batched runs."""

    spec: CircuitSpec
    n_angles: int
    const_vals: np.ndarray   # (A,) baseline values (constants; 0 elsewhere)
    feat_slot: np.ndarray    # (A,) feature slot per angle or -1
    feat_scale: np.ndarray   # (A,)
    train_slot: np.ndarray   # (A,) trainable slot per angle or -1
    steps: list
    shiftable: np.ndarray    # (A,) True where the angle sits on a rotation gate
    four_term: np.ndarray    # (A,) True where the gate is a controlled rotation


def compile_circuit(circuit: CircuitSpec) -> CompiledCircuit:
    consts, fslot, fscale, tslot, shift4, shiftable = [], [], [], [], [], []
    steps = []
    offset = 0
    for op in circuit.ops:
        if op.kind == "AmplitudePrep":
            steps.append(("PREP", 0, 0, offset))
        elif op.kind == "CNOT":
            steps.append(("CNOT", op.wires[0], op.wires[1], -1))
        elif op.kind == "Rot3":
            # RZ(a), RY(b), RZ(c) applied in that order
            steps.append(("RZ", op.wires[0], -1, offset))
            steps.append(("RY", op.wires[0], -1, offset + 1))
            steps.append(("RZ", op.wires[0], -1, offset + 2))
        elif op.kind in CONTROLLED_ROTATIONS:
            steps.append((op.kind, op.wires[0], op.wires[1], offset))
        else:
            steps.append((op.kind, op.wires[0], -1, offset))
        is_rot = op.kind not in ("AmplitudePrep", "CNOT")
        for b in op.bindings:
            if isinstance(b, Constant):
                consts.append(b.value)
                fslot.append(-1)
                fscale.append(0.0)
                tslot.append(-1)
            elif isinstance(b, Feature):
                consts.append(0.0)
                fslot.append(b.slot)
                fscale.append(b.scale)
                tslot.append(-1)
            elif isinstance(b, Trainable):
                consts.append(0.0)
                fslot.append(-1)
                fscale.append(0.0)
                tslot.append(b.slot)
            else:
                raise ConfigurationError(f"unknown binding {b!r}")
            shiftable.append(is_rot)
            shift4.append(op.kind in CONTROLLED_ROTATIONS)
        offset += len(op.bindings)
    return CompiledCircuit(
        spec=circuit,
        n_angles=offset,
        const_vals=np.asarray(consts, dtype=np.float64),
        feat_slot=np.asarray(fslot, dtype=np.intp),
        feat_scale=np.asarray(fscale, dtype=np.float64),
        train_slot=np.asarray(tslot, dtype=np.intp),
        steps=steps,
        shiftable=np.asarray(shiftable, dtype=bool),
        four_term=np.asarray(shift4, dtype=bool),
    )


def resolve_angles(compiled: CompiledCircuit, features=None, params=None) -> np.ndarray:
    """Resolve bindings to a (B, n_angles) array.

    ``features`` (B, F) or (F,) and ``params`` (B, P) or (P,) broadcast
    against each other; either may be omitted when the circuit has no
    bindings of that kind.
    """
    def as2d(x):
        if x is None:
            return None
        x = np.asarray(x, dtype=np.float64)
        return x[None, :] if x.ndim == 1 else x

    feats, pars = as2d(features), as2d(params)
    rows = 1
    for x in (feats, pars):
        if x is not None:
            rows = max(rows, x.shape[0])
    angles = np.broadcast_to(compiled.const_vals, (rows, compiled.n_angles)).copy()
    fmask = compiled.feat_slot >= 0
    if fmask.any():
        if feats is None:
            raise RuntimeError("circuit binds features but none were supplied")
        if not np.all(np.isfinite(feats)):
            raise InputError("non-finite feature value")
        angles[:, fmask] = feats[:, compiled.feat_slot[fmask]] * compiled.feat_scale[fmask]
    tmask = compiled.train_slot >= 0
    if tmask.any():
        if pars is None:
            raise RuntimeError("circuit binds trainable slots but none were supplied")
        angles[:, tmask] = pars[:, compiled.train_slot[tmask]]
    return angles


def _run_steps(psi, compiled, angles, inverse=False, skip_prep=False):
    """Walk the step list over flat states psi (B, 2**n), in place."""
    n = compiled.spec.n_qubits
    sign = -1.0 if inverse else 1.0
    steps = reversed(compiled.steps) if inverse else compiled.steps
    for kind, a, b, pos in steps:
        if kind == "PREP":
            if skip_prep:
                continue
            _kernel_prep(psi, angles[:, pos:pos + 2**n].astype(np.complex128))
        elif kind == "CNOT":
            _kernel_ctrl(psi, _X_FLIP, a, b, n)
        elif kind[0] == "C":
            _kernel_ctrl(psi, _ROT_MATS[kind[1:]](sign * angles[:, pos]), a, b, n)
        else:
            _kernel_1q(psi, _ROT_MATS[kind](sign * angles[:, pos]), a, n)
    return psi


def run_compiled(compiled: CompiledCircuit, angles: np.ndarray) -> np.ndarray:
    """Run the circuit from |0...0> on every angle row -> states (B, 2**n)."""
    angles = np.asarray(angles, dtype=np.float64)
    if angles.ndim == 1:
        angles = angles[None, :]
    psi = np.zeros((angles.shape[0], 2**compiled.spec.n_qubits), dtype=np.complex128)
    psi[:, 0] = 1.0
    return _run_steps(psi, compiled, angles)


def run_from_states(compiled: CompiledCircuit, angles: np.ndarray,
                    states: np.ndarray) -> np.ndarray:
    """Apply the post-prep gates to caller-supplied states (linear map)."""
    angles = np.asarray(angles, dtype=np.float64)
    if angles.ndim == 1:
        angles = angles[None, :]
    psi = states.astype(np.complex128, copy=True)
    return _run_steps(psi, compiled, angles, skip_prep=True)


def run_adjoint(compiled: CompiledCircuit, angles: np.ndarray,
                states: np.ndarray) -> np.ndarray:
    """Apply the inverse of the post-prep gates to ``states``."""
    angles = np.asarray(angles, dtype=np.float64)
    if angles.ndim == 1:
        angles = angles[None, :]
    psi = states.astype(np.complex128, copy=True)
    return _run_steps(psi, compiled, angles, inverse=True, skip_prep=True)


def all_z_expectations(states: np.ndarray, n_qubits: int) -> np.ndarray:
    """<Z_w> for every wire; states (B, 2**n) -> (B, n_qubits)."""
    B = states.shape[0]
    p = (np.abs(states) ** 2).reshape((B,) + (2,) * n_qubits)
    out = np.empty((B, n_qubits), dtype=np.float64)
    for w in range(n_qubits):
        axes = tuple(a for a in range(1, n_qubits + 1) if a != 1 + w)
        marg = p.sum(axis=axes)
        out[:, w] = marg[:, 0] - marg[:, 1]
    if not np.all(np.isfinite(out)):
        raise NumericalError("non-finite expectation value")
    np.clip(out, -1.0, 1.0, out=out)
    return out


def z_signs(n_qubits: int) -> np.ndarray:
    """(n, 2**n) matrix of +-1: row w holds the Z_w eigenvalue per basis state."""
    idx = np.arange(2**n_qubits)
    return np.stack([np.where((idx >> (n_qubits - 1 - w)) & 1, -1.0, 1.0)
                     for w in range(n_qubits)])


def evaluate_expectations(compiled: CompiledCircuit, features=None, params=None) -> np.ndarray:
    """Resolve, run and measure <Z> on all wires: (B, n_qubits)."""
    angles = resolve_angles(compiled, features, params)
    states = run_compiled(compiled, angles)
    return all_z_expectations(states, compiled.spec.n_qubits)


# ---------------------------------------------------------------------------
# dense-matrix brute-force oracle
#
# Independent of the fast path on purpose: gate matrices are written out
# inline and lifted to the full register with explicit Kronecker
# products.  Exponential in memory; capped at 6 qubits.


def _oracle_1q_matrix(kind: str, angles) -> np.ndarray:
    if kind == "RX":
        t = angles[0]
        return np.array([[np.cos(t / 2), -1j * np.sin(t / 2)],
                         [-1j * np.sin(t / 2), np.cos(t / 2)]])
    if kind == "RY":
        t = angles[0]
        return np.array([[np.cos(t / 2), -np.sin(t / 2)],
                         [np.sin(t / 2), np.cos(t / 2)]])
    if kind == "RZ":
        t = angles[0]
        return np.array([[np.exp(-1j * t / 2), 0], [0, np.exp(1j * t / 2)]])
    if kind == "Rot3":
        a, b, c = angles
        return (_oracle_1q_matrix("RZ", [c])
                @ _oracle_1q_matrix("RY", [b])
                @ _oracle_1q_matrix("RZ", [a]))
    raise ConfigurationError(f"oracle has no single-qubit matrix for {kind}")


def _kron_chain(factors) -> np.ndarray:
    out = factors[0]
    for f in factors[1:]:
        out = np.kron(out, f)
    return out


def gate_unitary(op: GateOp, angles, n_qubits: int) -> np.ndarray:
    """Full 2**n x 2**n unitary of one gate (wire 0 = leftmost kron factor)."""
    eye = np.eye(2, dtype=np.complex128)
    if op.kind == "CNOT" or op.kind in CONTROLLED_ROTATIONS:
        control, target = op.wires
        if op.kind == "CNOT":
            u = np.array([[0, 1], [1, 0]], dtype=np.complex128)
        else:
            u = _oracle_1q_matrix(op.kind[1:], angles)
        p0 = np.diag([1.0, 0.0]).astype(complex)
        p1 = np.diag([0.0, 1.0]).astype(complex)
        f0 = [eye] * n_qubits
        f0[control] = p0
        f1 = [eye] * n_qubits
        f1[control] = p1
        f1[target] = u
        return _kron_chain(f0) + _kron_chain(f1)
    if op.kind == "AmplitudePrep":
        raise ConfigurationError("AmplitudePrep is a state overwrite, not a unitary; "
                                 "prepare the state separately before applying the oracle matrix")
    factors = [eye] * n_qubits
    factors[op.wires[0]] = _oracle_1q_matrix(op.kind, angles)
    return _kron_chain(factors)


def dense_unitary_oracle(circuit: CircuitSpec, angles) -> np.ndarray:
    """Explicit matrix product of all gate unitaries, in circuit order.

    ``angles`` is the flat resolved angle vector in op order (same layout
    as :func:`resolve_angles` produces).  Applying the result to a column
    vector reproduces the circuit: U = U_last @ ... @ U_first.
    """
    if circuit.n_qubits > 6:
        raise SizeLimitError(f"oracle capped at 6 qubits, got {circuit.n_qubits}")
    angles = np.asarray(angles, dtype=np.float64).reshape(-1)
    u = np.eye(2**circuit.n_qubits, dtype=np.complex128)
    off = 0
    for op in circuit.ops:
        k = len(op.bindings)
        u = gate_unitary(op, angles[off:off + k], circuit.n_qubits) @ u
        off += k
    return u
