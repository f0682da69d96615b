import numpy as np
import pytest

from qnnreg.ir import CircuitSpec, Constant, GateOp

RNG_GATE_POOL = ("RX", "RY", "RZ", "Rot3", "CNOT", "CRX", "CRY", "CRZ")


def random_circuit(rng: np.random.Generator, n_qubits: int, n_gates: int) -> CircuitSpec:
    """Random circuit with constant-bound angles (no prep); oracle fodder."""
    pool = RNG_GATE_POOL if n_qubits > 1 else RNG_GATE_POOL[:4]
    ops = []
    for _ in range(n_gates):
        kind = pool[rng.integers(len(pool))]
        if kind in ("CNOT", "CRX", "CRY", "CRZ"):
            c, t = rng.choice(n_qubits, size=2, replace=False)
            n_angles = 0 if kind == "CNOT" else 1
            wires = (int(c), int(t))
        else:
            wires = (int(rng.integers(n_qubits)),)
            n_angles = 3 if kind == "Rot3" else 1
        binds = tuple(Constant(float(a)) for a in rng.uniform(-2 * np.pi, 2 * np.pi, n_angles))
        ops.append(GateOp(kind, wires, binds))
    return CircuitSpec(n_qubits, tuple(ops))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
