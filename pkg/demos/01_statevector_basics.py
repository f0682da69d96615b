"""A tour of the statevector engine.

Build small states, apply gates, measure Z expectations, and cross-check
the fast simulator against the dense-matrix oracle.
"""
import numpy as np

from qnnreg import (
    CircuitSpec,
    Constant,
    GateOp,
    StateVector,
    apply_gate,
    dense_unitary_oracle,
    expectation_z,
    prepare_amplitude_state,
)
from qnnreg.simulator import compile_circuit, resolve_angles, run_compiled

# --- single-qubit rotations -------------------------------------------------
# |0> rotated by RY(theta) has <Z> = cos(theta)
state = StateVector.zero(1)
for theta in (0.0, np.pi / 3, np.pi / 2, np.pi):
    rotated = apply_gate(state, GateOp("RY", (0,), (Constant(0.0),)), [theta])
    print(f"RY({theta:5.3f})|0>  <Z> = {expectation_z(rotated, 0):+.6f}"
          f"   cos(theta) = {np.cos(theta):+.6f}")

# --- entanglement -------------------------------------------------------------
# wire 0 is the most significant bit: |10> sits at index 2
plus = StateVector(2, np.array([1, 0, 1, 0], dtype=complex) / np.sqrt(2))
bell = apply_gate(plus, GateOp("CNOT", (0, 1)), [])
print("\nBell state amplitudes:", np.round(bell.amplitudes, 6))
print("per-wire <Z>:", expectation_z(bell, 0), expectation_z(bell, 1))

# --- amplitude preparation ----------------------------------------------------
prepped = prepare_amplitude_state([3.0, 4.0, 0.0, 0.0])
print("\nprepare([3,4,0,0]) ->", prepped.amplitudes.real)

# --- fast path vs dense oracle -------------------------------------------------
rng = np.random.default_rng(0)
ops = []
for _ in range(12):
    kind = ("RX", "RY", "RZ", "CNOT")[rng.integers(4)]
    if kind == "CNOT":
        c, t = rng.choice(3, 2, replace=False)
        ops.append(GateOp("CNOT", (int(c), int(t))))
    else:
        ops.append(GateOp(kind, (int(rng.integers(3)),),
                          (Constant(float(rng.uniform(-np.pi, np.pi))),)))
circuit = CircuitSpec(3, tuple(ops))
compiled = compile_circuit(circuit)
angles = resolve_angles(compiled)
fast = run_compiled(compiled, angles)[0]
e0 = np.zeros(8, dtype=complex)
e0[0] = 1.0
brute = dense_unitary_oracle(circuit, angles[0]) @ e0
print(f"\nrandom 3-qubit circuit: max |fast - oracle| = {np.abs(fast - brute).max():.2e}")
