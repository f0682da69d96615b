"""qnnreg: hybrid quantum-classical neural network regression.

Small parameterized quantum circuits, simulated exactly on a batched
complex statevector engine, composed with classical affine layers into
three trainable architectures for binding-energy prediction.
"""

from .circuits import (
    AMPLITUDE,
    ANGLE,
    ANSATZ_IDS,
    ComplexityReport,
    EncodingSpec,
    build_amplitude_encoding,
    build_angle_reupload_layer,
    build_ansatz,
    complexity_metrics,
)
from .data import (
    SampleSet,
    generate_synthetic,
    load_samples,
    minmax_normalize,
    partition_ensemble_subsets,
    rmse,
    save_samples,
    split_train_test,
)
from .gradients import (
    finite_difference_check,
    model_backward,
    model_gradient,
    quantum_param_gradient,
)
from .ir import CircuitSpec, Constant, Feature, GateOp, Trainable
from .models import (
    ARCHITECTURES,
    HybridModel,
    build_ensemble,
    build_model,
    build_parallel,
    build_sequential,
    forward,
    init_parameters,
    load_checkpoint,
    save_checkpoint,
)
from .simulator import (
    StateVector,
    apply_gate,
    dense_unitary_oracle,
    expectation_z,
    fix_global_phase,
    prepare_amplitude_state,
)
from .training import TrainConfig, TrainHistory, train

__version__ = "0.1.0"
