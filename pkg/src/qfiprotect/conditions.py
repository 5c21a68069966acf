"""Decision procedures for QFI preservation under noise.

* channel-level check: ``LL E_j sqrt(rho) = E_j L sqrt(rho)`` for every Kraus operator;
* testable conditions on a raw error set (no noisy SLD needed);
* the constructive Hermitian extension ``Q |s_j> = |d_j>``;
* Knill-Laflamme correctability for comparison.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import unitary_group

from .core import KrausChannel, ParametricFamily, evolve, kraus_ops_of, psd_sqrt
from .fisher import qfi, sld, state_derivative

PRESERVATION_TOL = 1e-8
COND_I_TOL = 1e-9
COND_II_TOL = 1e-8
RANK_TOL = 1e-10
KL_TOL = 1e-9


class HermitianExtensionError(ValueError):
    """No Hermitian ``Q`` maps the s-vectors to the d-vectors."""

    def __init__(self, condition: str, residual: float):
        self.condition = condition
        self.residual = residual
        super().__init__(f"condition {condition} violated (residual {residual:.3g})")


@dataclass(frozen=True)
class PreservationReport:
    preserved: bool
    max_residual: float
    residuals: tuple = ()


@dataclass(frozen=True)
class TestableReport:
    __test__ = False

    cond_i: bool
    cond_ii: bool
    cond_i_residual: float
    cond_ii_residual: float
    details: dict = field(default_factory=dict)

    @property
    def preserved(self) -> bool:
        return self.cond_i and self.cond_ii


@dataclass(frozen=True)
class KnillLaflammeReport:
    correctable: bool
    max_residual: float
    c_matrix: np.ndarray


def check_preservation_known_channel(
    family: ParametricFamily, theta: float, channel, tol: float = PRESERVATION_TOL
) -> PreservationReport:
    """Compare ``LL E_j sqrt(rho)`` with ``E_j L sqrt(rho)`` operator by operator.

    Residuals are relative to ``||E_j L sqrt(rho)||``; operators that kill the
    derivative are measured against ``1e-6 sqrt(F)`` instead.
    """
    rho = evolve(family, theta)
    drho = state_derivative(family, theta)
    L = sld(rho, drho).sld
    noisy_L = sld(channel(rho), channel(drho)).sld
    root = psd_sqrt(rho)
    scale_floor = 1e-6 * np.sqrt(qfi(rho, drho))
    residuals = []
    for e in kraus_ops_of(channel):
        target = e @ L @ root
        diff = np.linalg.norm(noisy_L @ e @ root - target)
        scale = max(np.linalg.norm(target), scale_floor)
        residuals.append(0.0 if diff == 0 else float(diff / scale) if scale > 0 else np.inf)
    worst = max(residuals)
    return PreservationReport(preserved=worst <= tol, max_residual=worst, residuals=tuple(residuals))


def _columns(vectors) -> np.ndarray:
    return np.column_stack([np.asarray(v, dtype=complex).reshape(-1) for v in vectors])


def _null_space(s: np.ndarray) -> np.ndarray:
    """Orthonormal basis of ``{alpha : S alpha = 0}`` (relative singular-value threshold)."""
    _, sv, vh = np.linalg.svd(s)
    top = sv[0] if sv.size else 0.0
    rank = int(np.count_nonzero(sv > RANK_TOL * top)) if top > 0 else 0
    return vh[rank:].conj().T


def condition_residuals(s: np.ndarray, d: np.ndarray) -> tuple[float, float]:
    """``(max |<s_j|d_k> - <d_j|s_k>|, ||D N|| / max(1, ||D||))`` for column matrices S, D."""
    g = s.conj().T @ d
    cond_i = float(np.max(np.abs(g - g.conj().T), initial=0.0))
    null = _null_space(s)
    if null.shape[1] == 0:
        return cond_i, 0.0
    d_norm = np.linalg.norm(d, 2) if d.size else 0.0
    cond_ii = float(np.linalg.norm(d @ null, 2) / max(1.0, d_norm))
    return cond_i, cond_ii


def _range_vectors(family: ParametricFamily, theta: float):
    """Eigenvectors of ``rho_theta`` with nonzero weight and the SLD."""
    rho = evolve(family, theta)
    res = sld(rho, state_derivative(family, theta))
    if family.is_pure:
        return [family.state_vector(theta)], res.sld
    keep = res.eigenvalues > res.eigen_cutoff_used
    return list(res.eigenvectors[:, keep].T), res.sld


def check_testable_conditions(family: ParametricFamily, theta: float, errors) -> TestableReport:
    """Testable conditions on the error set, for pure or mixed families.

    Mixed families use the composite index ``(j, l)`` over errors and the
    eigenvectors spanning the range of ``rho_theta``.
    """
    vecs, L = _range_vectors(family, theta)
    errors = [np.asarray(e, dtype=complex) for e in errors]
    s = _columns([e @ v for v in vecs for e in errors])
    d = _columns([e @ (L @ v) for v in vecs for e in errors])
    res_i, res_ii = condition_residuals(s, d)
    return TestableReport(
        cond_i=res_i <= COND_I_TOL,
        cond_ii=res_ii <= COND_II_TOL,
        cond_i_residual=res_i,
        cond_ii_residual=res_ii,
        details={"n_vectors": s.shape[1], "rank": s.shape[1] - _null_space(s).shape[1]},
    )


def check_testable_unitary(probe: np.ndarray, h: np.ndarray, errors, theta: float = 0.0) -> TestableReport:
    """Testable conditions for ``exp(-i theta H)|psi>`` in anticommutator form.

    (i) ``<psi|{E_j^dag E_k, dH}|psi> = 0`` with ``dH = H - <H>``;
    (ii) null space of ``[E_j psi]`` inside that of ``[E_j H psi]``.
    """
    family = ParametricFamily(probe, h)
    psi = family.state_vector(theta)
    h = family.generator
    mean = np.vdot(psi, h @ psi).real
    dh_psi = h @ psi - mean * psi
    errors = [np.asarray(e, dtype=complex) for e in errors]
    a = _columns([e @ psi for e in errors])
    b = _columns([e @ dh_psi for e in errors])
    anti = a.conj().T @ b + b.conj().T @ a
    res_i = float(np.max(np.abs(anti), initial=0.0))
    d = _columns([e @ (h @ psi) for e in errors])
    _, res_ii = condition_residuals(a, d)
    return TestableReport(
        cond_i=res_i <= COND_I_TOL,
        cond_ii=res_ii <= COND_II_TOL,
        cond_i_residual=res_i,
        cond_ii_residual=res_ii,
    )


def _independent_subset(s: np.ndarray, tol: float = RANK_TOL) -> list[int]:
    """Greedy Gram-Schmidt selection of a maximal linearly independent set of columns."""
    basis: list[np.ndarray] = []
    chosen = []
    scale = max(float(np.max(np.linalg.norm(s, axis=0), initial=0.0)), 1e-300)
    for j in range(s.shape[1]):
        v = s[:, j].copy()
        for _ in range(2):
            for b in basis:
                v -= b * np.vdot(b, v)
        nv = np.linalg.norm(v)
        if nv > tol * scale:
            basis.append(v / nv)
            chosen.append(j)
    return chosen


def hermitian_extension(s_vectors, d_vectors, zero_tol: float = 1e-12) -> np.ndarray:
    """Hermitian ``Q`` with ``Q|s_j> = |d_j>`` for all j.

    Built from a maximal independent subset of the s-vectors: diagonalize
    ``g_jk = <s_j|d_k>``, then ``Q = sum_{c!=0} |d~><d~|/c + sum_{c=0} (|d~><s~perp| + h.c.)``
    with ``s~perp`` the dual basis of the rotated s-vectors.  Raises
    :class:`HermitianExtensionError` naming the first violated condition.
    """
    s_vectors, d_vectors = list(s_vectors), list(d_vectors)
    if len(s_vectors) != len(d_vectors) or not s_vectors:
        raise ValueError("need equally many (and at least one) s- and d-vectors")
    s, d = _columns(s_vectors), _columns(d_vectors)
    if s.shape != d.shape:
        raise ValueError("s- and d-vectors must share a dimension")
    res_i, res_ii = condition_residuals(s, d)
    if res_i > COND_I_TOL:
        raise HermitianExtensionError("i", res_i)
    if res_ii > COND_II_TOL:
        raise HermitianExtensionError("ii", res_ii)

    dim = s.shape[0]
    keep = _independent_subset(s)
    if not keep:
        return np.zeros((dim, dim), dtype=complex)
    s_j, d_j = s[:, keep], d[:, keep]
    g = s_j.conj().T @ d_j
    c, w = np.linalg.eigh((g + g.conj().T) / 2)
    s_rot, d_rot = s_j @ w, d_j @ w
    # dual vectors: <s~perp_j|s~_k> = delta_jk
    s_dual = s_rot @ np.linalg.inv(s_rot.conj().T @ s_rot)
    zero = np.abs(c) <= zero_tol * max(1.0, float(np.max(np.abs(c))))
    q = np.zeros((dim, dim), dtype=complex)
    for j in range(len(c)):
        dj = d_rot[:, j]
        if zero[j]:
            q += np.outer(dj, s_dual[:, j].conj()) + np.outer(s_dual[:, j], dj.conj())
        else:
            q += np.outer(dj, dj.conj()) / c[j]
    return (q + q.conj().T) / 2


def knill_laflamme_check(code_basis, errors, tol: float = KL_TOL) -> KnillLaflammeReport:
    """``<phi_a|E_j^dag E_k|phi_b> = delta_ab c_jk`` over an orthonormal code basis."""
    basis = _columns(code_basis)
    gram = basis.conj().T @ basis
    if np.max(np.abs(gram - np.eye(gram.shape[0]))) > 1e-10:
        raise ValueError("code basis is not orthonormal")
    errors = [np.asarray(e, dtype=complex) for e in errors]
    images = [e @ basis for e in errors]
    n_err, k = len(errors), basis.shape[1]
    c = np.zeros((n_err, n_err), dtype=complex)
    worst = 0.0
    for j in range(n_err):
        for l in range(n_err):
            block = images[j].conj().T @ images[l]
            c[j, l] = np.trace(block) / k
            worst = max(worst, float(np.max(np.abs(block - c[j, l] * np.eye(k)))))
    return KnillLaflammeReport(correctable=worst <= tol, max_residual=worst, c_matrix=c)


def random_kraus_recombination(channel, seed) -> KrausChannel:
    """Kraus operators ``K_i = sum_j u_ij E_j`` for a seeded Haar-random unitary ``u``."""
    ops = kraus_ops_of(channel)
    u = unitary_group.rvs(len(ops), random_state=seed) if len(ops) > 1 else np.array([[np.exp(2j * np.pi * np.random.default_rng(seed).random())]])
    return recombine(ops, u)


def recombine(ops, u: np.ndarray) -> KrausChannel:
    stacked = np.stack([np.asarray(e, dtype=complex) for e in ops])
    return KrausChannel(tuple(np.tensordot(np.asarray(u), stacked, axes=(1, 0))))


def error_set_channel(errors) -> KrausChannel:
    """Trace-preserving channel built from a raw error set.

    Operators are scaled by ``1/sqrt(sum_j ||E_j^dag E_j||)``; if the scaled
    set is trace-decreasing, ``sqrt(1 - sum E^dag E)`` is appended.
    """
    errors = [np.asarray(e, dtype=complex) for e in errors]
    total = sum(np.linalg.norm(e.conj().T @ e, 2) for e in errors)
    if total == 0:
        raise ValueError("error set is identically zero")
    ops = [e / np.sqrt(total) for e in errors]
    dim = ops[0].shape[1]
    gap = np.eye(dim) - sum(e.conj().T @ e for e in ops)
    gap = (gap + gap.conj().T) / 2
    if np.max(np.abs(gap)) > 1e-12:
        ops.append(psd_sqrt(gap))
    return KrausChannel(tuple(ops))
