"""Closed-form QFI of the (logical-)GHZ frequency scheme under X and Z dephasing.

The noisy GHZ state splits into orthogonal two-dimensional sectors labelled
by the bit-flip pattern; sector ``k`` (``k`` flips, or ``N-k`` flips composed
with a logical X) has weight ``C(N,k) a_k`` and Bloch contrasts ``x_k, y_k``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .noise import DephasingScenario, logical_error_probabilities

EXACT_BINOMIAL_MAX_N = 40
#: Sectors whose ``(1-x^2)(1-y^2)`` falls below this lose no information.
DEGENERATE_SECTOR_TOL = 1e-14


class UnidentifiableError(ValueError):
    pass


@dataclass(frozen=True)
class BlockCoefficients:
    k: int
    a_k: float
    x_k: float
    y_k: float


def _check_odd(n: int) -> None:
    if n < 1 or n % 2 == 0:
        raise ValueError(f"closed form needs an odd qubit count, got {n}")


def binomial(n: int, k: int) -> float:
    if n <= EXACT_BINOMIAL_MAX_N:
        return float(math.comb(n, k))
    return math.exp(math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1))


def block_coefficients(n: int, k: int, p_x: float, p_z: float) -> BlockCoefficients:
    _check_odd(n)
    if not 0 <= k <= (n - 1) // 2:
        raise ValueError(f"sector index {k} outside [0, {(n - 1) // 2}]")
    for p in (p_x, p_z):
        if not 0 <= p <= 0.5:
            raise ValueError(f"flip probability {p} outside [0, 1/2]")
    a_k = p_x**k * (1 - p_x) ** (n - k) + p_x ** (n - k) * (1 - p_x) ** k
    x_k = (1 - 2 * p_z) ** n
    # ratio form of ((1-p)^M - p^M) / ((1-p)^M + p^M), safe against underflow
    r = (p_x / (1 - p_x)) ** (n - 2 * k)
    y_k = x_k * (1 - r) / (1 + r)
    return BlockCoefficients(k, a_k, x_k, y_k)


def two_level_qfi(rho: np.ndarray, drho: np.ndarray, det_tol: float = 1e-12) -> float:
    """QFI of a qubit family from ``tr[drho^2 + (1-rho) drho (1-rho) drho / det rho]``.

    Pure states (``det rho`` below ``det_tol``) use ``2 tr(drho^2)``.
    """
    rho = np.asarray(rho, dtype=complex)
    drho = np.asarray(drho, dtype=complex)
    if rho.shape != (2, 2) or drho.shape != (2, 2):
        raise ValueError("two_level_qfi needs 2x2 matrices")
    det = np.linalg.det(rho).real
    if det <= det_tol:
        w, v = np.linalg.eigh(rho)
        kernel = v[:, 0]
        if abs(np.vdot(kernel, drho @ kernel)) > 1e-9:
            raise ValueError("derivative leaves the support of a pure state")
        return float(2 * np.trace(drho @ drho).real)
    comp = np.eye(2) - rho
    value = np.trace(drho @ drho + comp @ drho @ comp @ drho / det).real
    return float(value)


def _sector_loss(c: BlockCoefficients, n: int, t: float, omega: float) -> float:
    """Fraction of ``N^2 t^2`` lost inside one sector, as written in the subtraction form."""
    num = (1 - c.x_k**2) * (1 - c.y_k**2)
    if num < DEGENERATE_SECTOR_TOL:
        return 0.0
    den = 2 - c.x_k**2 - c.y_k**2 + (c.y_k**2 - c.x_k**2) * math.cos(2 * n * omega * t)
    return 2 * num / den


def _sector_retained(c: BlockCoefficients, n: int, t: float, omega: float) -> float:
    """``1 - sector loss`` rearranged into nonnegative terms (no cancellation)."""
    ux, uy = 1 - c.x_k**2, 1 - c.y_k**2
    if ux * uy < DEGENERATE_SECTOR_TOL:
        return 1.0
    phi = n * omega * t
    cc, ss = math.cos(phi) ** 2, math.sin(phi) ** 2
    return (c.x_k**2 * ss * uy + c.y_k**2 * cc * ux) / (cc * ux + ss * uy)


def ghz_qfi_exact(n: int, t: float, omega: float, p_x: float, p_z: float) -> float:
    """QFI about ``omega`` of the dephased N-qubit GHZ scheme (N odd)."""
    _check_odd(n)
    full = n**2 * t**2
    total = 0.0
    for k in range((n - 1) // 2 + 1):
        c = block_coefficients(n, k, p_x, p_z)
        if c.a_k == 0.0:
            continue
        total += binomial(n, k) * c.a_k * _sector_retained(c, n, t, omega)
    return min(full * total, full)


def ghz_qfi_subtraction_form(n: int, t: float, omega: float, p_x: float, p_z: float) -> float:
    """``N^2 t^2 - N^2 t^2 sum_k C(N,k) 2 a_k (1-x^2)(1-y^2) / den_k``, evaluated literally."""
    _check_odd(n)
    full = n**2 * t**2
    loss = sum(
        binomial(n, c.k) * c.a_k * _sector_loss(c, n, t, omega)
        for c in (block_coefficients(n, k, p_x, p_z) for k in range((n - 1) // 2 + 1))
    )
    return full - full * loss


def ghz_qfi_sector_assembly(n: int, t: float, omega: float, p_x: float, p_z: float) -> float:
    """Same quantity assembled as ``sum_k C(N,k) a_k F_k`` with ``F_k`` from the 2x2 formula."""
    _check_odd(n)
    total = 0.0
    for k in range((n - 1) // 2 + 1):
        c = block_coefficients(n, k, p_x, p_z)
        if c.a_k == 0.0:
            continue
        total += binomial(n, k) * c.a_k * two_level_qfi(*sector_state(n, t, omega, c))
    return total


def sector_state(n: int, t: float, omega: float, c: BlockCoefficients) -> tuple[np.ndarray, np.ndarray]:
    """Normalized 2x2 sector state and its omega-derivative, in the ``{|0..0>, |1..1>}`` basis."""
    phi = n * omega * t
    bx, by = c.x_k * math.cos(phi), c.y_k * math.sin(phi)
    dbx, dby = -n * t * c.x_k * math.sin(phi), n * t * c.y_k * math.cos(phi)
    sx = np.array([[0, 1], [1, 0]], dtype=complex)
    sy = np.array([[0, -1j], [1j, 0]], dtype=complex)
    rho = (np.eye(2) + bx * sx + by * sy) / 2
    return rho, (dbx * sx + dby * sy) / 2


def logical_ghz_qfi_exact(scenario: DephasingScenario) -> float:
    """Logical scheme via the raw formula with ``(p_bar_x, p_bar_z, N // n)``."""
    m = scenario.n_blocks
    if m % 2 == 0:
        raise ValueError(f"formula derived for odd block count, got m = {m}")
    p_bar_x, p_bar_z = logical_error_probabilities(scenario.p_x, scenario.p_z, scenario.block_size)
    return ghz_qfi_exact(m, scenario.time, scenario.omega, p_bar_x, p_bar_z)


def raw_ghz_qfi_exact(scenario: DephasingScenario) -> float:
    return ghz_qfi_exact(scenario.n_total, scenario.time, scenario.omega, scenario.p_x, scenario.p_z)


def crb(fisher: float, nu: int = 1) -> float:
    """Cramer-Rao bound ``1 / sqrt(nu F)``."""
    if nu < 1:
        raise ValueError(f"repetition count must be positive, got {nu}")
    if not fisher > 0:
        raise UnidentifiableError(f"unidentifiable: Fisher information {fisher} is not positive")
    return 1 / math.sqrt(nu * fisher)
