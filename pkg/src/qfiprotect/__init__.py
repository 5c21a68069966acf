"""Quantum Fisher information under noise: preservation conditions, immune schemes and dephased GHZ sensing."""

__version__ = "0.1.0"

from .analytic import (
    UnidentifiableError,
    block_coefficients,
    crb,
    ghz_qfi_exact,
    logical_ghz_qfi_exact,
    two_level_qfi,
)
from .conditions import (
    HermitianExtensionError,
    check_preservation_known_channel,
    check_testable_conditions,
    check_testable_unitary,
    error_set_channel,
    hermitian_extension,
    knill_laflamme_check,
    random_kraus_recombination,
)
from .core import KrausChannel, ParametricFamily, evolve
from .fisher import Povm, classical_fisher, family_qfi, ozawa_error, qfi, qfi_loss, sld
from .montecarlo import crb_attainment_report, mle_estimate, sample_outcomes
from .noise import DephasingScenario
from .pauli import PauliOperator, StabilizerCode, immune_error_set, parse_pauli, phase_flip_code

__all__ = [
    "DephasingScenario",
    "HermitianExtensionError",
    "KrausChannel",
    "ParametricFamily",
    "PauliOperator",
    "Povm",
    "StabilizerCode",
    "UnidentifiableError",
    "block_coefficients",
    "check_preservation_known_channel",
    "check_testable_conditions",
    "check_testable_unitary",
    "classical_fisher",
    "crb",
    "crb_attainment_report",
    "error_set_channel",
    "evolve",
    "family_qfi",
    "ghz_qfi_exact",
    "hermitian_extension",
    "immune_error_set",
    "knill_laflamme_check",
    "logical_ghz_qfi_exact",
    "mle_estimate",
    "ozawa_error",
    "parse_pauli",
    "phase_flip_code",
    "qfi",
    "qfi_loss",
    "random_kraus_recombination",
    "sample_outcomes",
    "sld",
    "two_level_qfi",
]
