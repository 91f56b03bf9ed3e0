"""Three-party XOR secret sharing over a reusable entangled carrier.

Pure-state simulation of the carrier and transit qubits, two session
variants (alternating and coin-flip), channel attack strategies, a
closed-form identity corpus, and a Monte Carlo / exact-enumeration
harness with a CLI front end.
"""

from .qsim import (
    ATOL,
    MAX_QUBITS,
    MeasurementRecord,
    PureState,
    apply_cnot,
    apply_h,
    basis_state,
    deviation_up_to_sign,
    discard,
    equal_up_to_sign,
    ghz_carrier,
    measure,
    prepare_pair_qbar,
    probability_of_one,
    reorder,
    state_from_terms,
    tensor,
)
from .protocol import (
    CARRIER,
    CarrierTracker,
    EntangledPair,
    ProductPair,
    Rngs,
    RoundPlan,
    RoundTranscript,
    SinglePair,
    check_phase,
    chi_state,
    g_state,
    hadamard_layer,
    original_even_round,
    original_odd_round,
    original_round,
    revised_round,
    transcripts_to_jsonl,
)
from .attacks import (
    A1Attack,
    A2Attack,
    A2ProbeAttack,
    ChannelAttack,
    DishonestBobAttack,
    STRATEGIES,
    build_attack,
    eve_reconstruct,
)
from .corpus import IDENTITY_IDS, verify_equation_corpus
from .harness import (
    Branch,
    COMPATIBLE,
    Scenario,
    SimConfig,
    SimReport,
    enumerate_branches,
    original_plans,
    revised_plans,
    run_grid,
    run_simulation,
)

__version__ = "0.1.0"

__all__ = [
    "ATOL",
    "MAX_QUBITS",
    "MeasurementRecord",
    "PureState",
    "apply_cnot",
    "apply_h",
    "basis_state",
    "deviation_up_to_sign",
    "discard",
    "equal_up_to_sign",
    "ghz_carrier",
    "measure",
    "prepare_pair_qbar",
    "probability_of_one",
    "reorder",
    "state_from_terms",
    "tensor",
    "CARRIER",
    "CarrierTracker",
    "EntangledPair",
    "ProductPair",
    "Rngs",
    "RoundPlan",
    "RoundTranscript",
    "SinglePair",
    "check_phase",
    "chi_state",
    "g_state",
    "hadamard_layer",
    "original_even_round",
    "original_odd_round",
    "original_round",
    "revised_round",
    "transcripts_to_jsonl",
    "A1Attack",
    "A2Attack",
    "A2ProbeAttack",
    "ChannelAttack",
    "DishonestBobAttack",
    "STRATEGIES",
    "build_attack",
    "eve_reconstruct",
    "IDENTITY_IDS",
    "verify_equation_corpus",
    "Branch",
    "COMPATIBLE",
    "Scenario",
    "SimConfig",
    "SimReport",
    "enumerate_branches",
    "original_plans",
    "revised_plans",
    "run_grid",
    "run_simulation",
]
