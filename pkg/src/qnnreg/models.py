"""Hybrid model architectures: sequential, parallel, ensemble.

Every model owns one flat float64 parameter store plus a table of named
groups (offset, length) into it.  Forward passes are batched over
samples.  Gradients live in :mod:`qnnreg.gradients`.

Architectures (all on 4-qubit, 2-layer circuits):

* sequential: circuit -> <Z> on all 4 wires -> affine 4->1.
  Parameters: quantum + 5.
* parallel: affine 16->32 -> two 16-value halves -> one independent
  circuit per half (own weights) -> 8 measured values -> affine 8->1.
  Parameters: 544 + 2*quantum + 9.  The halves feed 4-qubit branches;
  this is the only decomposition consistent with the per-architecture
  parameter tables (544 + 2q + 9 for every ansatz), and is documented
  prominently because a 16-qubit-per-branch reading exists elsewhere.
* ensemble: 9 independent sequential models; prediction is the exact
  arithmetic mean of member predictions.  Parameters: 9 x sequential.

There is no activation between measurement and the output layer; the
output is a plain weighted sum (a predicted binding energy, kcal/mol).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .circuits import ARTIFACT_PARAMS, EncodingSpec, build_ansatz, encoding_from_name
from .errors import ConfigurationError, InputError, ParseError
from .simulator import CompiledCircuit, compile_circuit, evaluate_expectations

N_WIRES = 4
ENSEMBLE_MEMBERS = 9
_HIDDEN = 32  # parallel model's expanded width


@dataclass(frozen=True)
class AffineLayer:
    """Dense layer shape; weights/bias live in the model's flat store."""

    in_dim: int
    out_dim: int

    @property
    def n_params(self) -> int:
        return self.out_dim * (self.in_dim + 1)


@dataclass
class HybridModel:
    architecture: str  # "sequential" | "parallel" | "ensemble"
    ansatz: str
    encoding: EncodingSpec
    layers: int
    members: int
    circuit_compiled: CompiledCircuit
    groups: dict[str, slice]
    params: np.ndarray = field(repr=False)

    @property
    def n_params(self) -> int:
        return self.params.size

    def group(self, name: str) -> np.ndarray:
        return self.params[self.groups[name]]


def _group_table(sizes: list[tuple[str, int]]) -> tuple[dict[str, slice], int]:
    table, off = {}, 0
    for name, n in sizes:
        table[name] = slice(off, off + n)
        off += n
    return table, off


def build_sequential(ansatz: str, encoding: EncodingSpec, layers: int = 2) -> HybridModel:
    circuit = build_ansatz(ansatz, encoding, layers)
    q = circuit.trainable_slots
    groups, total = _group_table([("quantum", q), ("out.weight", N_WIRES), ("out.bias", 1)])
    return HybridModel("sequential", ansatz, encoding, layers, 1,
                       compile_circuit(circuit), groups, np.zeros(total))


def build_parallel(ansatz: str, encoding: EncodingSpec, layers: int = 2) -> HybridModel:
    circuit = build_ansatz(ansatz, encoding, layers)
    q = circuit.trainable_slots
    groups, total = _group_table([
        ("in.weight", _HIDDEN * 16), ("in.bias", _HIDDEN),
        ("branch0.quantum", q), ("branch1.quantum", q),
        ("out.weight", 2 * N_WIRES), ("out.bias", 1),
    ])
    return HybridModel("parallel", ansatz, encoding, layers, 1,
                       compile_circuit(circuit), groups, np.zeros(total))


def build_ensemble(ansatz: str, encoding: EncodingSpec, layers: int = 2,
                   members: int = ENSEMBLE_MEMBERS) -> HybridModel:
    if members < 1:
        raise ConfigurationError(f"ensemble needs >= 1 members, got {members}")
    circuit = build_ansatz(ansatz, encoding, layers)
    q = circuit.trainable_slots
    sizes = []
    for m in range(members):
        sizes += [(f"m{m}.quantum", q), (f"m{m}.out.weight", N_WIRES), (f"m{m}.out.bias", 1)]
    groups, total = _group_table(sizes)
    return HybridModel("ensemble", ansatz, encoding, layers, members,
                       compile_circuit(circuit), groups, np.zeros(total))


_BUILDERS = {"sequential": build_sequential, "parallel": build_parallel,
             "ensemble": build_ensemble}
ARCHITECTURES = tuple(_BUILDERS)


def build_model(architecture: str, ansatz: str, encoding: EncodingSpec,
                layers: int = 2) -> HybridModel:
    if architecture not in _BUILDERS:
        raise ConfigurationError(
            f"unknown architecture {architecture!r}; expected one of {ARCHITECTURES}")
    return _BUILDERS[architecture](ansatz, encoding, layers)


def expected_param_count(architecture: str, ansatz: str) -> int:
    """Closed-form parameter totals (2 quantum layers)."""
    q = ARTIFACT_PARAMS[ansatz]
    if architecture == "sequential":
        return q + N_WIRES + 1
    if architecture == "parallel":
        return _HIDDEN * 16 + _HIDDEN + 2 * q + 2 * N_WIRES + 1
    if architecture == "ensemble":
        return ENSEMBLE_MEMBERS * (q + N_WIRES + 1)
    raise ConfigurationError(f"unknown architecture {architecture!r}")


def init_parameters(model: HybridModel, seed: int) -> np.ndarray:
    """Seed-deterministic init: quantum angles ~ U(0, 2pi), affine
    weights ~ U(-1/sqrt(in_dim), 1/sqrt(in_dim)), biases 0.

    Groups are filled in declaration order so the stream of random
    draws, and therefore the store, is fully determined by the seed.
    """
    rng = np.random.default_rng(seed)
    for name, sl in model.groups.items():
        n = sl.stop - sl.start
        if name.endswith("quantum"):
            model.params[sl] = rng.uniform(0.0, 2.0 * np.pi, n)
        elif name.endswith("weight"):
            in_dim = 16 if name == "in.weight" else n  # out_dim is 1 except for in.weight
            bound = 1.0 / np.sqrt(in_dim)
            model.params[sl] = rng.uniform(-bound, bound, n)
        else:
            model.params[sl] = 0.0
    return model.params


def _check_features(features) -> np.ndarray:
    features = np.asarray(features, dtype=np.float64)
    if features.ndim == 1:
        features = features[None, :]
    if features.shape[1] != 16:
        raise InputError(f"expected 16 features per sample, got {features.shape[1]}")
    if not np.all(np.isfinite(features)):
        raise InputError("non-finite feature value")
    return features


def _member_forward(model, features, quantum, w, b):
    z = evaluate_expectations(model.circuit_compiled, features, quantum)
    return z @ w + b


def forward(model: HybridModel, features) -> np.ndarray:
    """Predict binding energies for a (B, 16) feature batch -> (B,)."""
    x = _check_features(features)
    p = model.params
    if model.architecture == "sequential":
        return _member_forward(model, x, p[model.groups["quantum"]],
                               p[model.groups["out.weight"]],
                               p[model.groups["out.bias"]][0])
    if model.architecture == "parallel":
        w1 = p[model.groups["in.weight"]].reshape(_HIDDEN, 16)
        y = x @ w1.T + p[model.groups["in.bias"]]
        z0 = evaluate_expectations(model.circuit_compiled, y[:, :16],
                                   p[model.groups["branch0.quantum"]])
        z1 = evaluate_expectations(model.circuit_compiled, y[:, 16:],
                                   p[model.groups["branch1.quantum"]])
        z = np.concatenate([z0, z1], axis=1)
        return z @ p[model.groups["out.weight"]] + p[model.groups["out.bias"]][0]
    # ensemble: exact mean over members
    acc = np.zeros(x.shape[0])
    for m in range(model.members):
        acc += _member_forward(model, x, p[model.groups[f"m{m}.quantum"]],
                               p[model.groups[f"m{m}.out.weight"]],
                               p[model.groups[f"m{m}.out.bias"]][0])
    return acc / model.members


def forward_param_rows(model: HybridModel, features, param_rows: np.ndarray) -> np.ndarray:
    """Forward one sample under R different parameter vectors -> (R,).

    The workhorse of finite-difference checking: all R evaluations run
    as a single batched simulation.
    """
    x = _check_features(features)[0]
    rows = np.asarray(param_rows, dtype=np.float64)
    if rows.ndim == 1:
        rows = rows[None, :]
    g = model.groups
    if model.architecture == "sequential":
        z = evaluate_expectations(model.circuit_compiled, x[None, :], rows[:, g["quantum"]])
        return (z * rows[:, g["out.weight"]]).sum(axis=1) + rows[:, g["out.bias"]][:, 0]
    if model.architecture == "parallel":
        w1 = rows[:, g["in.weight"]].reshape(-1, _HIDDEN, 16)
        y = np.einsum("roi,i->ro", w1, x) + rows[:, g["in.bias"]]
        z0 = evaluate_expectations(model.circuit_compiled, y[:, :16], rows[:, g["branch0.quantum"]])
        z1 = evaluate_expectations(model.circuit_compiled, y[:, 16:], rows[:, g["branch1.quantum"]])
        z = np.concatenate([z0, z1], axis=1)
        return (z * rows[:, g["out.weight"]]).sum(axis=1) + rows[:, g["out.bias"]][:, 0]
    acc = np.zeros(rows.shape[0])
    for m in range(model.members):
        z = evaluate_expectations(model.circuit_compiled, x[None, :], rows[:, g[f"m{m}.quantum"]])
        acc += (z * rows[:, g[f"m{m}.out.weight"]]).sum(axis=1) + rows[:, g[f"m{m}.out.bias"]][:, 0]
    return acc / model.members


# ---------------------------------------------------------------------------
# checkpoint io: plain text, one "group <name> <n> <hex floats...>" line
# per parameter group.  float.hex round-trips bit-exactly.

_CKPT_MAGIC = "qnnreg-checkpoint v1"


def save_checkpoint(model: HybridModel, path, seed=None) -> None:
    lines = [_CKPT_MAGIC,
             f"architecture={model.architecture}",
             f"ansatz={model.ansatz}",
             f"encoding={model.encoding.kind}",
             f"layers={model.layers}",
             f"members={model.members}",
             f"seed={'' if seed is None else int(seed)}"]
    for name, sl in model.groups.items():
        vals = " ".join(float(v).hex() for v in model.params[sl])
        lines.append(f"group {name} {sl.stop - sl.start} {vals}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_checkpoint(path) -> tuple[HybridModel, int | None]:
    with open(path, encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    if not lines or lines[0] != _CKPT_MAGIC:
        raise ParseError(f"{path}: not a {_CKPT_MAGIC!r} file")
    header = {}
    body = []
    for ln in lines[1:]:
        if ln.startswith("group "):
            body.append(ln)
        elif ln:
            k, _, v = ln.partition("=")
            header[k] = v
    model = build_model(header["architecture"], header["ansatz"],
                        encoding_from_name(header["encoding"]), int(header["layers"]))
    if model.members != int(header["members"]):
        raise ParseError(f"{path}: member count {header['members']} does not match architecture")
    for ln in body:
        _, name, n, *vals = ln.split(" ")
        if name not in model.groups:
            raise ParseError(f"{path}: unknown parameter group {name!r}")
        sl = model.groups[name]
        if int(n) != sl.stop - sl.start or len(vals) != int(n):
            raise ParseError(f"{path}: group {name!r} expects {sl.stop - sl.start} values")
        model.params[sl] = [float.fromhex(v) for v in vals]
    seed = int(header["seed"]) if header.get("seed") else None
    return model, seed
