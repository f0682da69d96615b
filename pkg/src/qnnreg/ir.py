"""Circuit intermediate representation.

A circuit is an ordered list of gate operations on a fixed number of
wires.  Every gate angle is a *binding*: a constant, a feature slot
(classical input, optionally scaled), or a trainable slot (weight).
The same trainable slot may be bound to several gates (weight sharing);
the same feature slot is re-bound once per layer by the re-uploading
encoding.

Wire convention: wire 0 is the most significant bit of the basis-state
index, so on 2 qubits basis index 2 is |10> (wire 0 in state 1).
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ConfigurationError

# gate kind -> number of bound angles (AmplitudePrep binds one value per
# basis state and is special-cased wherever arity is consumed)
GATE_ARITY = {
    "RX": 1,
    "RY": 1,
    "RZ": 1,
    "Rot3": 3,
    "CNOT": 0,
    "CRX": 1,
    "CRY": 1,
    "CRZ": 1,
    "AmplitudePrep": None,
}

TWO_QUBIT_KINDS = frozenset({"CNOT", "CRX", "CRY", "CRZ"})
CONTROLLED_ROTATIONS = frozenset({"CRX", "CRY", "CRZ"})


@dataclass(frozen=True)
class Constant:
    value: float


@dataclass(frozen=True)
class Feature:
    slot: int
    scale: float = 1.0


@dataclass(frozen=True)
class Trainable:
    slot: int


Binding = Constant | Feature | Trainable


@dataclass(frozen=True)
class GateOp:
    kind: str
    wires: tuple[int, ...]
    bindings: tuple[Binding, ...] = ()

    def __post_init__(self):
        if self.kind not in GATE_ARITY:
            raise ConfigurationError(f"unknown gate kind {self.kind!r}")
        arity = GATE_ARITY[self.kind]
        if arity is not None and len(self.bindings) != arity:
            raise ConfigurationError(
                f"{self.kind} takes {arity} bound angles, got {len(self.bindings)}"
            )
        if len(set(self.wires)) != len(self.wires):
            raise ConfigurationError(f"{self.kind} wires must be distinct: {self.wires}")
        n_wires = 2 if self.kind in TWO_QUBIT_KINDS else len(self.wires)
        if self.kind in TWO_QUBIT_KINDS and len(self.wires) != 2:
            raise ConfigurationError(f"{self.kind} needs (control, target), got {self.wires}")


@dataclass(frozen=True)
class CircuitSpec:
    """Validated, immutable circuit description."""

    n_qubits: int
    ops: tuple[GateOp, ...]
    feature_slots: int = field(init=False, default=0)
    trainable_slots: int = field(init=False, default=0)

    def __post_init__(self):
        if not 1 <= self.n_qubits <= 20:
            raise ConfigurationError(f"n_qubits must be in 1..20, got {self.n_qubits}")
        feat, train = set(), set()
        for i, op in enumerate(self.ops):
            for w in op.wires:
                if not 0 <= w < self.n_qubits:
                    raise ConfigurationError(
                        f"op {i} ({op.kind}) touches wire {w}, circuit has {self.n_qubits} qubits"
                    )
            if op.kind == "AmplitudePrep":
                if i != 0:
                    raise ConfigurationError("AmplitudePrep must be the first op")
                if len(op.bindings) != 2**self.n_qubits:
                    raise ConfigurationError(
                        f"AmplitudePrep needs {2**self.n_qubits} values, got {len(op.bindings)}"
                    )
            for b in op.bindings:
                if isinstance(b, Feature):
                    feat.add(b.slot)
                elif isinstance(b, Trainable):
                    train.add(b.slot)
        for name, slots in (("feature", feat), ("trainable", train)):
            if slots and slots != set(range(len(slots))):
                raise ConfigurationError(f"{name} slots must be contiguous from 0, got {sorted(slots)}")
        object.__setattr__(self, "feature_slots", len(feat))
        object.__setattr__(self, "trainable_slots", len(train))

    @property
    def has_prep(self) -> bool:
        return bool(self.ops) and self.ops[0].kind == "AmplitudePrep"
