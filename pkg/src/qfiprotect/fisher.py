"""Symmetric logarithmic derivatives, quantum and classical Fisher information."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ParametricFamily, evolve, kraus_ops_of, psd_sqrt

#: Eigenvalue pairs with ``p_i + p_j`` below this fraction of the trace are
#: treated as outside the support.
SLD_CUTOFF = 1e-12
P_FLOOR = 1e-14
DP_TOL = 1e-9


class NotDifferentiableError(ValueError):
    """The derivative has weight between two kernel directions of the state."""


class SingularOutcomeError(ValueError):
    """A zero-probability outcome has a non-vanishing derivative."""


@dataclass(frozen=True)
class SldResult:
    sld: np.ndarray
    support_dimension: int
    eigen_cutoff_used: float
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


@dataclass(frozen=True)
class Povm:
    """Positive operators summing to the identity."""

    elements: tuple

    def __post_init__(self):
        elements = tuple(np.array(m, dtype=complex) for m in self.elements)
        if not elements:
            raise ValueError("empty POVM")
        dim = elements[0].shape[0]
        for m in elements:
            if m.shape != (dim, dim) or np.max(np.abs(m - m.conj().T)) > 1e-10:
                raise ValueError("POVM elements must be Hermitian and equally sized")
            if np.linalg.eigvalsh(m)[0] < -1e-10:
                raise ValueError("POVM element is not positive")
        if np.max(np.abs(sum(elements) - np.eye(dim))) > 1e-10:
            raise ValueError("POVM elements do not sum to the identity")
        object.__setattr__(self, "elements", elements)

    @classmethod
    def from_basis(cls, basis: np.ndarray) -> "Povm":
        """Projective measurement onto the columns of a unitary."""
        return cls(tuple(np.outer(basis[:, k], basis[:, k].conj()) for k in range(basis.shape[1])))

    def __len__(self):
        return len(self.elements)

    def probabilities(self, rho: np.ndarray) -> np.ndarray:
        return np.array([np.real(np.vdot(m, rho)) for m in self.elements])


def state_derivative(family: ParametricFamily, theta: float, channel=None) -> np.ndarray:
    """``d rho_theta / d theta = -i [G, rho_theta]``, pushed through ``channel`` if given."""
    rho = evolve(family, theta)
    g = family.generator
    drho = -1j * (g @ rho - rho @ g)
    drho = (drho + drho.conj().T) / 2
    if channel is not None:
        drho = channel(drho)
    return drho


def noisy_state(family: ParametricFamily, theta: float, channel=None) -> np.ndarray:
    rho = evolve(family, theta)
    return rho if channel is None else channel(rho)


def sld(rho: np.ndarray, drho: np.ndarray, cutoff: float = SLD_CUTOFF) -> SldResult:
    """Solve ``drho = (L rho + rho L) / 2`` on the support of ``rho``.

    Matrix elements between eigenvectors with ``p_i + p_j`` below
    ``cutoff * tr(rho)`` are set to zero.  Raises
    :class:`NotDifferentiableError` if ``drho`` has weight inside the kernel.
    """
    rho = np.asarray(rho, dtype=complex)
    drho = np.asarray(drho, dtype=complex)
    p, v = np.linalg.eigh((rho + rho.conj().T) / 2)
    p = np.clip(p, 0.0, None)
    threshold = cutoff * float(np.sum(p))
    d = v.conj().T @ drho @ v
    denom = p[:, None] + p[None, :]
    support = denom > threshold
    kernel_block = np.abs(d[~support])
    if kernel_block.size and kernel_block.max() > 1e-9 * max(1.0, float(np.abs(d).max())):
        raise NotDifferentiableError("derivative connects two kernel directions of the state")
    l_eig = np.zeros_like(d)
    l_eig[support] = 2 * d[support] / denom[support]
    l_eig = (l_eig + l_eig.conj().T) / 2
    L = v @ l_eig @ v.conj().T
    return SldResult(
        sld=(L + L.conj().T) / 2,
        support_dimension=int(np.count_nonzero(p > threshold / 2)),
        eigen_cutoff_used=threshold,
        eigenvalues=p,
        eigenvectors=v,
    )


def qfi(rho: np.ndarray, drho: np.ndarray) -> float:
    """Quantum Fisher information ``tr(rho L^2)``."""
    res = sld(rho, drho)
    l_eig = res.eigenvectors.conj().T @ res.sld @ res.eigenvectors
    value = float(np.sum(res.eigenvalues[:, None] * np.abs(l_eig) ** 2))
    return max(value, 0.0)


def family_qfi(family: ParametricFamily, theta: float, channel=None) -> float:
    return qfi(noisy_state(family, theta, channel), state_derivative(family, theta, channel))


def qfi_pure(family: ParametricFamily, theta: float) -> float:
    """``4 Var(G)`` for a pure probe."""
    psi = family.state_vector(theta)
    g_psi = family.generator @ psi
    mean = np.vdot(psi, g_psi).real
    return max(4 * (np.vdot(g_psi, g_psi).real - mean**2), 0.0)


def covariant_derivative(family: ParametricFamily, theta: float) -> np.ndarray:
    """Component of ``d|psi_theta>/d theta`` orthogonal to ``|psi_theta>``."""
    psi = family.state_vector(theta)
    dpsi = -1j * (family.generator @ psi)
    return dpsi - psi * np.vdot(psi, dpsi)


def classical_fisher_from_state(
    povm: Povm, rho: np.ndarray, drho: np.ndarray, p_floor: float = P_FLOOR, dp_tol: float = DP_TOL
) -> float:
    p = povm.probabilities(rho)
    dp = povm.probabilities(drho)
    total = 0.0
    for px, dpx in zip(p, dp):
        if px <= p_floor:
            if abs(dpx) > dp_tol:
                raise SingularOutcomeError(f"outcome with probability {px:.3g} has derivative {dpx:.3g}")
            continue
        total += dpx**2 / px
    return total


def classical_fisher(povm: Povm, family: ParametricFamily, theta: float, channel=None) -> float:
    """Fisher information of the outcome distribution ``p(x) = tr(M_x rho_theta)``."""
    return classical_fisher_from_state(
        povm, noisy_state(family, theta, channel), state_derivative(family, theta, channel)
    )


def sld_measurement(rho: np.ndarray, drho: np.ndarray) -> Povm:
    """Projective measurement onto the eigenbasis of the SLD."""
    _, basis = np.linalg.eigh(sld(rho, drho).sld)
    return Povm.from_basis(basis)


@dataclass(frozen=True)
class QfiLoss:
    """Both sides of the QFI-loss identity."""

    difference: float
    kraus_sum: float
    qfi_before: float
    qfi_after: float
    residuals: tuple

    @property
    def value(self) -> float:
        return self.kraus_sum


def _kraus_error_terms(family: ParametricFamily, theta: float, ops, q: np.ndarray):
    rho = evolve(family, theta)
    drho = state_derivative(family, theta)
    L = sld(rho, drho).sld
    root = psd_sqrt(rho)
    l_root = L @ root
    return [float(np.linalg.norm(q @ e @ root - e @ l_root) ** 2) for e in ops]


def qfi_loss(family: ParametricFamily, theta: float, channel) -> QfiLoss:
    """QFI loss as ``F(rho) - F(N(rho))`` and as ``sum_j ||(LL E_j - E_j L) sqrt(rho)||^2``."""
    rho = evolve(family, theta)
    drho = state_derivative(family, theta)
    before = qfi(rho, drho)
    out, dout = channel(rho), channel(drho)
    noisy_sld = sld(out, dout).sld
    after = qfi(out, dout)
    terms = _kraus_error_terms(family, theta, kraus_ops_of(channel), noisy_sld)
    return QfiLoss(
        difference=before - after,
        kraus_sum=float(sum(terms)),
        qfi_before=before,
        qfi_after=after,
        residuals=tuple(terms),
    )


def ozawa_error(family: ParametricFamily, theta: float, channel, q: np.ndarray) -> float:
    """Squared measurement error of ``q`` after the channel relative to ``L_theta`` before it."""
    ops = kraus_ops_of(channel)
    q = np.asarray(q, dtype=complex)
    if q.shape != (ops[0].shape[0],) * 2:
        raise ValueError(f"observable shape {q.shape} does not match channel output {ops[0].shape[0]}")
    return float(sum(_kraus_error_terms(family, theta, ops, q)))
