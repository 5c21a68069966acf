"""Ready-made probes, generators and noise for the immune (phase-flip) schemes."""

from __future__ import annotations

import itertools
import math

import numpy as np

from .core import ParametricFamily, check_register_size, tensor_product, unitary_mixture
from .fisher import Povm
from .pauli import PauliOperator, immune_error_set, phase_flip_code, phase_flip_errors

_PLUS = np.array([1, 1], dtype=complex) / math.sqrt(2)


def plus_state(n: int) -> np.ndarray:
    check_register_size(n)
    return tensor_product(*[_PLUS] * n)


def immune_scheme(n: int, t: float = 1.0) -> ParametricFamily:
    """Probe ``|+>^n`` with generator ``t Z_I`` (Z on every qubit)."""
    if n < 1 or n % 2 == 0:
        raise ValueError(f"scheme needs an odd qubit count, got {n}")
    g = t * PauliOperator.z_type(range(n), n).to_matrix()
    return ParametricFamily(plus_state(n), g)


def single_qubit_scheme(t: float = 1.0) -> ParametricFamily:
    """``|+>`` rotated by ``t Z / 2``."""
    return ParametricFamily(_PLUS, t * np.diag([0.5, -0.5]).astype(complex))


def immune_errors(n: int) -> list[PauliOperator]:
    """``{Z_alpha} u {Z_alpha X_I}`` with ``|alpha| <= (n-1)/2`` for the n-qubit phase-flip code."""
    code = phase_flip_code(n)
    return immune_error_set(code, phase_flip_errors(n, (n - 1) // 2), code.logical_x)


def pauli_mixture(errors, weights) -> "object":
    """``rho -> sum_j w_j P_j rho P_j^dag``."""
    return unitary_mixture([e.to_matrix() for e in errors], weights)


def x_basis_povm(n: int) -> Povm:
    """Product measurement of every ``X_j``; outcome index bits are the X eigenvalue signs."""
    check_register_size(n)
    minus = np.array([1, -1], dtype=complex) / math.sqrt(2)
    cols = [tensor_product(*[minus if b else _PLUS for b in bits]) for bits in itertools.product((0, 1), repeat=n)]
    return Povm.from_basis(np.column_stack(cols))
