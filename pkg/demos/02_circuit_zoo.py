"""The five-ansatz library under both feature encodings.

Prints the complexity metrics table for all ten circuits (two quantum
layers each) and a full gate listing for the smallest one.
"""
from qnnreg import build_ansatz, complexity_metrics
from qnnreg.circuits import ANSATZ_IDS, circuit_lines, encoding_from_name

print(f"{'ansatz':8s} {'encoding':10s} {'gates':>6s} {'2-qubit':>8s} "
      f"{'params':>7s} {'depth':>6s}")
for ansatz in ANSATZ_IDS:
    for enc_name in ("angle", "amplitude"):
        circuit = build_ansatz(ansatz, encoding_from_name(enc_name), layers=2)
        m = complexity_metrics(circuit, layers=2)
        print(f"{ansatz:8s} {enc_name:10s} {m.total_gates:6d} {m.two_qubit_gates:8d} "
              f"{m.trainable_params:7d} {m.depth:6d}")

print("\nA1 with amplitude encoding, gate by gate:")
for line in circuit_lines(build_ansatz("A1", encoding_from_name("amplitude"), 2)):
    print(" ", line)

# re-uploading in action: each of the 16 feature slots is bound once per
# layer under angle encoding, so a 2-layer circuit touches each twice
from qnnreg.ir import Feature

circuit = build_ansatz("A3", encoding_from_name("angle"), 2)
counts = {}
for op in circuit.ops:
    for b in op.bindings:
        if isinstance(b, Feature):
            counts[b.slot] = counts.get(b.slot, 0) + 1
print("\nA3-angle feature slot binding multiplicities:", sorted(set(counts.values())))
