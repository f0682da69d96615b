"""Three routes to the same gradient.

Parameter-shift (the reference), the adjoint sweep (what training uses),
and central finite differences (the oracle) on one circuit and one full
hybrid model.
"""
import numpy as np

from qnnreg import build_ansatz, build_model, finite_difference_check, init_parameters
from qnnreg.circuits import encoding_from_name
from qnnreg.gradients import circuit_fd_check, circuit_param_gradients

rng = np.random.default_rng(7)

circuit = build_ansatz("A4", encoding_from_name("amplitude"), 2)
feats = rng.uniform(0.1, 1.0, 16)
params = rng.uniform(0, 2 * np.pi, circuit.trainable_slots)

g_shift = circuit_param_gradients(circuit, feats, params, method="shift")
g_adjoint = circuit_param_gradients(circuit, feats, params, method="adjoint")
print("A4-amplitude, d<Z_w>/d(theta_k):")
print("  shift vs adjoint, max |diff|:", np.abs(g_shift - g_adjoint).max())
print("  shift vs finite differences, worst relative:",
      circuit_fd_check(circuit, feats, params))

# structural zeros: A4's wiring is forward-only, so the last rotation
# column cannot influence any other wire's measurement
print("  final tail rotations, off-wire gradient magnitudes:")
for slot in (29, 30, 31):
    print(f"    slot {slot}: |d<Z_0>/d| = {abs(g_shift[slot, 0]):.1e}")

# the full 665-parameter parallel model against finite differences
model = build_model("parallel", "A2", encoding_from_name("angle"))
init_parameters(model, 1)
dev = finite_difference_check(model, rng.uniform(0.1, 1, 16), -8.0)
print(f"\nparallel A2-angle ({model.n_params} params): worst relative deviation {dev:.2e}")
