"""Solver for randomized remote-attestation strategies.

Models the interaction between a defender who commits to per-device
attestation probabilities and an attacker who then picks which devices to
compromise, computes both sides' optimal play in closed form, verifies the
closed forms against exhaustive oracles, and links checksum memory coverage
to the attestation method's detection rate and cost.
"""

from .checksum import (
    IDENTITY_CALIBRATION,
    CoverageCalibration,
    MemoryLayout,
    calibrate,
    checksum_detection_probability,
    load_measurements_csv,
    method_from_coverage,
    simulate_attestation,
)
from .errors import (
    AttestGameError,
    CalibrationError,
    ConfigError,
    EnumerationCapError,
    UndeterrableError,
    UnsupportedCaseError,
    ValidationError,
)
from .model import (
    AttackerStrategy,
    AttestationMethod,
    DefenderStrategy,
    Device,
    DeviceClass,
    Environment,
    Violation,
    all_ones_attack,
    all_zero_attack,
    attacker_total_cost,
    attacker_utility,
    defender_total_cost,
    defender_utility,
    detection_probability,
    require_valid,
    validate_environment,
)
from .response import (
    BestResponseResult,
    ClassResponse,
    best_response,
    brute_force_best_response,
    conditional_class_attack,
    threshold_with_class_cost,
    threshold_without_class_cost,
)
from .scenario import (
    ScenarioConfig,
    generate,
    load_attacker_strategy,
    load_defender_strategy,
    load_environment,
    save_attacker_strategy,
    save_defender_strategy,
    save_environment,
)
from .solve import (
    ClassCandidate,
    DefenderSolution,
    DeterrenceResult,
    baseline_always,
    baseline_never,
    baseline_optimal_uniform,
    batch_defender_utilities,
    deterrence_strategy,
    non_deter_strategy,
    optimal_single_device,
    optimal_strategy,
    randomized_search_check,
    uniform_strategy,
)

__version__ = "0.1.0"
