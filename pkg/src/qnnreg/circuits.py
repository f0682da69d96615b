"""Circuit construction: encodings, the five-ansatz library, metrics.

Both encodings consume 16 features on 4 qubits:

* amplitude: one ``AmplitudePrep`` op whose 16 values are the feature
  vector, L2-normalized at bind time;
* angle: per layer, four re-upload blocks of four single-qubit RY
  feature rotations (angle = pi * feature), each block followed by the
  ansatz's entangling/rotation core; feature slot ``4b + i`` lands on
  wire ``i`` of block ``b``, so every slot is bound exactly once per
  layer.

Each ansatz layer is a *core* plus a *tail* column.  For angle
encoding the core repeats after every re-upload block with its
trainable slots shared across the four blocks; the tail appears once
per layer with fresh slots.  Layer layouts (4 qubits):

=====  ====================================================  ==========
id     core                                                  tail
=====  ====================================================  ==========
A1     CNOT ring 0>1,1>2,2>3,3>0                             Rot3 x4 (leads)
A2     RX x4, RZ x4, CRX all-to-all (12), RX x4              RZ x4
A3     ring + chain entanglers (7); the first is a           Rot3 x3 + RY (leads)
       trainable CRZ on even-indexed layers, CNOT otherwise
A4     RY x4, CRX cascade (0>1,1>2,2>3,0>3) twice            RY x4
A5     RY x4, CRX ring fwd, then ring reversed               RY x4
=====  ====================================================  ==========

A4 and A5 differ only in the wiring of the entangler columns: A4 is
forward-only (a nearest-neighbour chain closed head-to-tail, so no
gate ever targets wire 0), A5 closes the ring cyclically.

With two layers these layouts reproduce the reference complexity
metrics for all ten (ansatz, encoding) pairs, except that A3 carries
21 trainable parameters (the reference table prints 24, but the three
per-architecture parameter tables are consistent only with 21; the
conformance check reports this known deviation).  21 is odd, which no
stack of identical rotation columns can produce; hence A3's
even-layer-only trainable entangler.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ConfigurationError
from .ir import TWO_QUBIT_KINDS, Binding, CircuitSpec, Constant, Feature, GateOp, Trainable

ANSATZ_IDS = ("A1", "A2", "A3", "A4", "A5")

N_FEATURES = 16
N_QUBITS = 4
ANGLE_SCALE = math.pi  # feature in [0,1] -> rotation angle in [0, pi]

_RING = ((0, 1), (1, 2), (2, 3), (3, 0))
_RING_REV = ((1, 0), (2, 1), (3, 2), (0, 3))
_CHAIN = ((0, 1), (1, 2), (2, 3))
_CASCADE = ((0, 1), (1, 2), (2, 3), (0, 3))
_ALL_TO_ALL = tuple((c, t) for c in range(4) for t in range(4) if t != c)


@dataclass(frozen=True)
class EncodingSpec:
    """How 16 classical features become quantum state content."""

    kind: str  # "angle" | "amplitude"
    n_features: int = N_FEATURES
    block_size: int = 4
    n_blocks: int = 4

    def __post_init__(self):
        if self.kind not in ("angle", "amplitude"):
            raise ConfigurationError(f"unknown encoding {self.kind!r}")
        if self.kind == "angle" and self.block_size * self.n_blocks != self.n_features:
            raise ConfigurationError("block_size * n_blocks must equal n_features")

    @property
    def n_qubits(self) -> int:
        if self.kind == "angle":
            return self.block_size
        return int(math.ceil(math.log2(self.n_features)))


ANGLE = EncodingSpec("angle")
AMPLITUDE = EncodingSpec("amplitude")


def encoding_from_name(name: str) -> EncodingSpec:
    if name == "angle":
        return ANGLE
    if name == "amplitude":
        return AMPLITUDE
    raise ConfigurationError(f"unknown encoding {name!r}")


@dataclass(frozen=True)
class ComplexityReport:
    layers: int
    depth: int
    two_qubit_gates: int
    total_gates: int
    trainable_params: int


# template entries: (kind, wires, n_trainable_angles)


def _core_template(ansatz: str, layer_index: int):
    if ansatz == "A1":
        return [("CNOT", w, 0) for w in _RING]
    if ansatz == "A2":
        t = [("RX", (q,), 1) for q in range(4)]
        t += [("RZ", (q,), 1) for q in range(4)]
        t += [("CRX", w, 1) for w in _ALL_TO_ALL]
        t += [("RX", (q,), 1) for q in range(4)]
        return t
    if ansatz == "A3":
        first = ("CRZ", (0, 1), 1) if layer_index % 2 == 0 else ("CNOT", (0, 1), 0)
        return [first] + [("CNOT", w, 0) for w in _RING[1:]] + [("CNOT", w, 0) for w in _CHAIN]
    if ansatz == "A4":
        t = [("RY", (q,), 1) for q in range(4)]
        t += [("CRX", w, 1) for w in _CASCADE]
        t += [("CRX", w, 1) for w in _CASCADE]
        return t
    if ansatz == "A5":
        t = [("RY", (q,), 1) for q in range(4)]
        t += [("CRX", w, 1) for w in _RING]
        t += [("CRX", w, 1) for w in _RING_REV]
        return t
    raise ConfigurationError(f"unknown ansatz {ansatz!r}")


def _tail_template(ansatz: str):
    if ansatz == "A1":
        return [("Rot3", (q,), 3) for q in range(4)]
    if ansatz == "A2":
        return [("RZ", (q,), 1) for q in range(4)]
    if ansatz == "A3":
        return [("Rot3", (q,), 3) for q in range(3)] + [("RY", (3,), 1)]
    if ansatz in ("A4", "A5"):
        return [("RY", (q,), 1) for q in range(4)]
    raise ConfigurationError(f"unknown ansatz {ansatz!r}")


_TAIL_LEADS = {"A1": True, "A2": False, "A3": True, "A4": False, "A5": False}


def _instantiate(template, slots) -> list[GateOp]:
    """Turn a template into ops, consuming pre-allocated slot ids in order."""
    ops, i = [], 0
    for kind, wires, n_par in template:
        binds: tuple[Binding, ...] = tuple(Trainable(s) for s in slots[i:i + n_par])
        ops.append(GateOp(kind, wires, binds))
        i += n_par
    assert i == len(slots)
    return ops


def _template_slots(template, start):
    n = sum(n_par for _, _, n_par in template)
    return list(range(start, start + n)), start + n


def build_amplitude_encoding(n_features: int = N_FEATURES) -> GateOp:
    """One AmplitudePrep op binding feature slots 0..n_features.

    Normalization happens at bind time (each value divided by the L2
    norm of the bound vector).
    """
    if n_features < 2 or n_features & (n_features - 1):
        raise ConfigurationError(
            f"amplitude encoding needs a power-of-two feature count, got {n_features}"
        )
    n_qubits = n_features.bit_length() - 1
    wires = tuple(range(n_qubits))
    return GateOp("AmplitudePrep", wires, tuple(Feature(s) for s in range(n_features)))


def _angle_layer_ops(ansatz: str, layer_index: int, slot_start: int,
                     encoding: EncodingSpec = ANGLE):
    """One re-uploading layer; returns (ops, next_slot)."""
    core = _core_template(ansatz, layer_index)
    core_slots, nxt = _template_slots(core, slot_start)
    tail = _tail_template(ansatz)
    tail_slots, nxt = _template_slots(tail, nxt)
    blocks = []
    for b in range(encoding.n_blocks):
        for i in range(encoding.block_size):
            blocks.append(GateOp("RY", (i,), (Feature(b * encoding.block_size + i, ANGLE_SCALE),)))
        blocks.extend(_instantiate(core, core_slots))  # slots shared across blocks
    tail_ops = _instantiate(tail, tail_slots)
    ops = tail_ops + blocks if _TAIL_LEADS[ansatz] else blocks + tail_ops
    return ops, nxt


def _amplitude_layer_ops(ansatz: str, layer_index: int, slot_start: int):
    core = _core_template(ansatz, layer_index)
    core_slots, nxt = _template_slots(core, slot_start)
    tail = _tail_template(ansatz)
    tail_slots, nxt = _template_slots(tail, nxt)
    core_ops = _instantiate(core, core_slots)
    tail_ops = _instantiate(tail, tail_slots)
    ops = tail_ops + core_ops if _TAIL_LEADS[ansatz] else core_ops + tail_ops
    return ops, nxt


def build_angle_reupload_layer(ansatz: str, layer_index: int = 0) -> CircuitSpec:
    """A single re-uploading layer as a standalone circuit fragment."""
    _check_ansatz(ansatz)
    ops, _ = _angle_layer_ops(ansatz, layer_index, 0)
    return CircuitSpec(N_QUBITS, tuple(ops))


def _check_ansatz(ansatz: str):
    if ansatz not in ANSATZ_IDS:
        raise ConfigurationError(f"unknown ansatz {ansatz!r}; expected one of {ANSATZ_IDS}")


def build_ansatz(ansatz: str, encoding: EncodingSpec, layers: int = 2) -> CircuitSpec:
    """Full circuit for one (ansatz, encoding) pair.

    Trainable slots are fresh per layer (for A3 the repeating unit is a
    pair of layers; see the module docstring).  Feature slots are
    re-bound every layer under angle encoding and bound once by the
    preparation op under amplitude encoding.
    """
    _check_ansatz(ansatz)
    if layers < 1:
        raise ConfigurationError(f"layers must be >= 1, got {layers}")
    ops: list[GateOp] = []
    slot = 0
    if encoding.kind == "amplitude":
        ops.append(build_amplitude_encoding(encoding.n_features))
        for k in range(layers):
            layer_ops, slot = _amplitude_layer_ops(ansatz, k, slot)
            ops.extend(layer_ops)
    else:
        for k in range(layers):
            layer_ops, slot = _angle_layer_ops(ansatz, k, slot, encoding)
            ops.extend(layer_ops)
    return CircuitSpec(N_QUBITS, tuple(ops))


def circuit_depth(circuit: CircuitSpec) -> int:
    """Greedy wire-conflict layering; AmplitudePrep spans all wires."""
    busy_until = [0] * circuit.n_qubits
    depth = 0
    for op in circuit.ops:
        wires = range(circuit.n_qubits) if op.kind == "AmplitudePrep" else op.wires
        t = 1 + max(busy_until[w] for w in wires)
        for w in wires:
            busy_until[w] = t
        depth = max(depth, t)
    return depth


def complexity_metrics(circuit: CircuitSpec, layers: int = 0) -> ComplexityReport:
    total = len(circuit.ops)
    two_q = sum(1 for op in circuit.ops if op.kind in TWO_QUBIT_KINDS)
    return ComplexityReport(
        layers=layers,
        depth=circuit_depth(circuit),
        two_qubit_gates=two_q,
        total_gates=total,
        trainable_params=circuit.trainable_slots,
    )


# Reference complexity table (two layers), as printed in the source the
# ansatz layouts were reconstructed from: depth, 2-qubit gates, total
# gates, trainable params.  The artifact's A3 deviates on params (21,
# corroborated by all three architecture parameter tables, vs 24 here);
# conformance checks treat that single cell as a known deviation.
REFERENCE_COMPLEXITY = {
    ("A1", "angle"): (72, 32, 72, 24),
    ("A1", "amplitude"): (15, 8, 17, 24),
    ("A2", "angle"): (128, 96, 232, 56),
    ("A2", "amplitude"): (30, 24, 57, 56),
    ("A3", "angle"): (72, 56, 96, 24),
    ("A3", "amplitude"): (17, 14, 23, 24),
    ("A4", "angle"): (80, 64, 136, 32),
    ("A4", "amplitude"): (18, 16, 33, 32),
    ("A5", "angle"): (80, 64, 136, 32),
    ("A5", "amplitude"): (18, 16, 33, 32),
}

# trainable params the artifact actually builds (two layers)
ARTIFACT_PARAMS = {"A1": 24, "A2": 56, "A3": 21, "A4": 32, "A5": 32}


def _binding_str(b: Binding) -> str:
    if isinstance(b, Constant):
        return repr(b.value)
    if isinstance(b, Feature):
        return f"feature[{b.slot}]" + (f"*{b.scale:.6g}" if b.scale != 1.0 else "")
    return f"train[{b.slot}]"


def circuit_lines(circuit: CircuitSpec) -> list[str]:
    """Plain-text listing, one gate per line, for inspection/golden files."""
    lines = []
    for op in circuit.ops:
        wires = ",".join(f"q{w}" for w in op.wires)
        if op.kind == "AmplitudePrep":
            slots = [b.slot for b in op.bindings if isinstance(b, Feature)]
            binds = f"feature[{min(slots)}..{max(slots)}] normalized" if slots else "constants"
        else:
            binds = ",".join(_binding_str(b) for b in op.bindings) or "-"
        lines.append(f"{op.kind} {wires} {binds}")
    return lines
