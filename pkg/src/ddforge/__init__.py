"""ddforge: empirical dynamical-decoupling strategy search.

Genetic search over multi-qubit Pauli pulse-sequence strategies, scored by
executing DD-dressed circuits on a built-in noisy trajectory simulator, with
BV / GHZ / Grover / mirror-RB workload generators and canonical-sequence
baselines for comparison.
"""

__version__ = "0.1.0"

from .pauli import (
    PauliFrame,
    PulseLabel,
    completion_frame,
    frame_product,
    labels_for_frame,
    pulse_unitary,
    pulses_from_group_path,
)
from .strategy import (
    ColorAssignment,
    ColoringOverflow,
    DDSequence,
    DDStrategy,
    InvalidPopulationSize,
    Population,
    TimingMode,
    UnsupportedBaseline,
    canonical_strategies,
    color_graph,
    equivalence_class_count,
    strategy_space_size,
    uniform_initial_population,
)
from .scheduler import (
    GateTimingModel,
    IdleGap,
    Instruction,
    InvalidEdge,
    ScheduledCircuit,
    find_idle_gaps,
    insert_dd,
    schedule_asap,
)
from .sim import (
    CountsDistribution,
    NoiseModel,
    NondeterministicOutcome,
    TooManyQubits,
    desk_device_noise,
    simulate_counts,
    simulate_ideal,
    target_bitstring,
)
from .metrics import (
    DecayPoint,
    FitFailure,
    UtilityValue,
    fit_epl,
    mrb_training_utility,
    one_norm_utility,
    polarization,
    success_probability,
)
from .ga import (
    GAConfig,
    NoInsertableGaps,
    TrainingResult,
    crossover,
    mutate,
    next_generation,
    run_gadd,
    selection_weights,
    simulate_exploration,
    strategy_crossover,
    update_mutation_prob,
)
from .workloads import (
    MRBSpec,
    bv_circuit,
    cliffordize,
    edge_grab_sample,
    ghz_circuit,
    grover_circuit,
    mirror_circuit,
    mrb_circuit,
    mrb_training_set,
)
from .topology import Topology
from .backend import (
    ExecutionBackend,
    HardwareBackendStub,
    LocalSimulatorBackend,
    UnsupportedBackend,
)
