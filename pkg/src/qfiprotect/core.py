"""Dense complex-matrix substrate for small qubit registers.

States are plain numpy arrays: a 1-d array of length ``2**n`` is a pure
state, a ``(2**n, 2**n)`` array is a density matrix.  The validators in
this module check the usual invariants and return normalized copies.

Channels are represented by :class:`KrausChannel` (optionally acting on a
subset of qubits, which keeps brute-force evaluation of product noise cheap)
and :class:`ChannelSequence`.  Both are callables ``rho -> rho'`` and can be
mixed with any other linear map on matrices, e.g. the generator maps built
by :func:`commutator_map`.
"""

from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

#: Largest register handled with dense matrices unless overridden.
MAX_DENSE_QUBITS = 12

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_TOL = 1e-10
TP_TOL = 1e-10

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI_MATRICES = {"I": I2, "X": X, "Y": Y, "Z": Z}

#: ``(X - iY)/2 = |1><0|``; with this convention ``|1>`` is the ground state.
SIGMA_MINUS = (X - 1j * Y) / 2

Superoperator = Callable[[np.ndarray], np.ndarray]


class DimensionError(ValueError):
    pass


def n_qubits_of(dim: int) -> int:
    n = int(dim).bit_length() - 1
    if n < 0 or 2**n != dim:
        raise DimensionError(f"dimension {dim} is not a power of two")
    return n


def check_register_size(n: int, cap: int | None = None) -> None:
    cap = MAX_DENSE_QUBITS if cap is None else cap
    if n < 1:
        raise DimensionError(f"need at least one qubit, got {n}")
    if n > cap:
        raise DimensionError(f"{n} qubits exceeds the dense cap of {cap}")


def is_hermitian(a: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    a = np.asarray(a)
    return a.ndim == 2 and a.shape[0] == a.shape[1] and bool(np.max(np.abs(a - a.conj().T), initial=0.0) <= tol)


def as_pure_state(amplitudes, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Validate a state vector (unit norm, power-of-two length)."""
    psi = np.asarray(amplitudes, dtype=complex).reshape(-1)
    n_qubits_of(psi.size)
    norm = np.linalg.norm(psi)
    if abs(norm - 1) > tol:
        raise ValueError(f"state vector has norm {norm}, expected 1")
    return psi / norm


def as_density_matrix(entries, tol: float = TRACE_TOL) -> np.ndarray:
    """Validate a density matrix: Hermitian, unit trace, PSD."""
    rho = np.array(entries, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise DimensionError(f"density matrix must be square, got shape {rho.shape}")
    n_qubits_of(rho.shape[0])
    if not is_hermitian(rho, tol):
        raise ValueError("density matrix is not Hermitian")
    tr = np.trace(rho).real
    if abs(tr - 1) > tol:
        raise ValueError(f"density matrix has trace {tr}")
    if np.linalg.eigvalsh(rho)[0] < -PSD_TOL:
        raise ValueError("density matrix has a negative eigenvalue")
    return rho


def as_hermitian(entries, tol: float = HERMITIAN_TOL) -> np.ndarray:
    h = np.array(entries, dtype=complex)
    if not is_hermitian(h, tol):
        raise ValueError("operator is not Hermitian")
    return h


def projector(psi: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    return np.outer(psi, psi.conj())


def tensor_product(*ops: np.ndarray) -> np.ndarray:
    """Kronecker product of any number of vectors or matrices."""
    return functools.reduce(np.kron, ops)


def embed_pauli(label: str, site: int, n: int) -> np.ndarray:
    """Dense ``2**n`` matrix acting as Pauli ``label`` on ``site`` (qubit 0 is leftmost)."""
    if label not in ("X", "Y", "Z", "I"):
        raise ValueError(f"unknown Pauli label {label!r}")
    if not 0 <= site < n:
        raise IndexError(f"site {site} out of range for {n} qubits")
    return embed_operator(PAULI_MATRICES[label], [site], n)


def embed_operator(op: np.ndarray, sites: Sequence[int], n: int) -> np.ndarray:
    """Dense embedding of a ``2**k`` operator acting on ``sites`` of an n-qubit register."""
    sites = list(sites)
    k = len(sites)
    op = np.asarray(op, dtype=complex)
    if op.shape != (2**k, 2**k):
        raise DimensionError(f"operator shape {op.shape} does not match {k} sites")
    if sorted(sites) == list(range(sites[0], sites[0] + k)) and sites == sorted(sites):
        return tensor_product(np.eye(2 ** sites[0]), op, np.eye(2 ** (n - sites[0] - k)))
    return _apply_left(op, np.eye(2**n, dtype=complex).reshape((2,) * (2 * n)), sites, n).reshape(2**n, 2**n)


def pure_states_equal(a: np.ndarray, b: np.ndarray, tol: float = 1e-10) -> bool:
    """Equality of state vectors up to global phase."""
    return abs(abs(np.vdot(a, b)) - 1) <= tol


def trace_distance(rho: np.ndarray, sigma: np.ndarray) -> float:
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(rho - sigma))))


def psd_sqrt(rho: np.ndarray, rel_floor: float = 1e-12) -> np.ndarray:
    """Square root of a PSD matrix; eigenvalues below ``rel_floor * max`` count as zero.

    Without the floor, roundoff eigenvalues of order 1e-17 would contribute
    ``sqrt(1e-17) ~ 3e-9`` to the root.
    """
    w, v = np.linalg.eigh((rho + rho.conj().T) / 2)
    w = np.where(w > rel_floor * max(float(w.max()), 0.0), w, 0.0)
    return (v * np.sqrt(w)) @ v.conj().T


def hs_norm(a: np.ndarray) -> float:
    return float(np.linalg.norm(a))


# --------------------------------------------------------------------------
# parametric families


@dataclass(frozen=True)
class ParametricFamily:
    """Family ``rho_theta = exp(-i theta G) rho exp(i theta G)``.

    ``probe`` may be a state vector or a density matrix.  For frequency
    schemes pass ``G = t * H`` so that the parameter is the frequency.
    """

    probe: np.ndarray
    generator: np.ndarray

    def __post_init__(self):
        probe = np.asarray(self.probe, dtype=complex)
        probe = as_pure_state(probe) if probe.ndim == 1 else as_density_matrix(probe)
        gen = as_hermitian(self.generator)
        if gen.shape[0] != probe.shape[0]:
            raise DimensionError(f"probe dimension {probe.shape[0]} != generator dimension {gen.shape[0]}")
        object.__setattr__(self, "probe", probe)
        object.__setattr__(self, "generator", gen)

    @property
    def dim(self) -> int:
        return self.generator.shape[0]

    @property
    def is_pure(self) -> bool:
        return self.probe.ndim == 1

    @functools.cached_property
    def _spectrum(self):
        g = self.generator
        if np.count_nonzero(g - np.diag(np.diagonal(g))) == 0:
            return np.diagonal(g).real.copy(), None
        return np.linalg.eigh(g)

    def unitary(self, theta: float) -> np.ndarray:
        w, v = self._spectrum
        phases = np.exp(-1j * theta * w)
        if v is None:
            return np.diag(phases)
        return (v * phases) @ v.conj().T

    def _apply_unitary(self, theta: float, state: np.ndarray) -> np.ndarray:
        w, v = self._spectrum
        phases = np.exp(-1j * theta * w)
        if v is None:
            if state.ndim == 1:
                return phases * state
            return phases[:, None] * state * phases.conj()[None, :]
        u = (v * phases) @ v.conj().T
        return u @ state if state.ndim == 1 else u @ state @ u.conj().T

    def state_vector(self, theta: float) -> np.ndarray:
        if not self.is_pure:
            raise ValueError("family has a mixed probe")
        return self._apply_unitary(theta, self.probe)

    def shifted(self, theta: float) -> "ParametricFamily":
        """The same family re-based at ``theta``: its probe is ``rho_theta``."""
        probe = self.state_vector(theta) if self.is_pure else self._apply_unitary(theta, self.probe)
        return ParametricFamily(probe, self.generator)


def evolve(family: ParametricFamily, theta: float) -> np.ndarray:
    """Density matrix ``exp(-i theta G) rho exp(i theta G)``."""
    if family.is_pure:
        return projector(family.state_vector(theta))
    out = family._apply_unitary(theta, family.probe)
    return (out + out.conj().T) / 2


# --------------------------------------------------------------------------
# channels


def _apply_left(op: np.ndarray, tensor: np.ndarray, sites: Sequence[int], n: int) -> np.ndarray:
    """Contract a ``2**k`` operator into the leading-n axes of a ``(2,)*2n`` tensor."""
    k = len(sites)
    op_t = op.reshape((2,) * (2 * k))
    out = np.tensordot(op_t, tensor, axes=(list(range(k, 2 * k)), list(sites)))
    return np.moveaxis(out, list(range(k)), list(sites))


@dataclass(frozen=True)
class KrausChannel:
    """Channel ``rho -> sum_j E_j rho E_j^dagger``.

    With ``sites`` set, the operators are ``2**k x 2**k`` and act on those
    qubits of an ``n_qubits`` register; :meth:`dense_ops` returns the full
    embeddings.
    """

    kraus_ops: tuple
    sites: tuple | None = None
    n_qubits: int | None = None
    trace_preserving: bool = True

    def __post_init__(self):
        ops = tuple(np.array(e, dtype=complex) for e in self.kraus_ops)
        if not ops:
            raise ValueError("channel needs at least one Kraus operator")
        shape = ops[0].shape
        if any(e.shape != shape for e in ops):
            raise DimensionError("Kraus operators have differing shapes")
        object.__setattr__(self, "kraus_ops", ops)
        if self.sites is not None:
            sites = tuple(int(s) for s in self.sites)
            if self.n_qubits is None:
                raise ValueError("local channel needs n_qubits")
            if shape != (2 ** len(sites),) * 2 or any(not 0 <= s < self.n_qubits for s in sites):
                raise DimensionError("Kraus operators do not match the target sites")
            object.__setattr__(self, "sites", sites)
        if self.trace_preserving:
            total = sum(e.conj().T @ e for e in ops)
            if np.max(np.abs(total - np.eye(shape[1]))) > TP_TOL:
                raise ValueError("Kraus operators are not trace preserving")

    @property
    def dim(self) -> int:
        if self.sites is not None:
            return 2**self.n_qubits
        return self.kraus_ops[0].shape[1]

    def dense_ops(self) -> list[np.ndarray]:
        if self.sites is None:
            return list(self.kraus_ops)
        return [embed_operator(e, self.sites, self.n_qubits) for e in self.kraus_ops]

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        rho = np.asarray(rho, dtype=complex)
        if rho.shape != (self.dim, self.dim):
            raise DimensionError(f"channel acts on dimension {self.dim}, got {rho.shape}")
        if self.sites is None:
            return sum(e @ rho @ e.conj().T for e in self.kraus_ops)
        n = self.n_qubits
        t = rho.reshape((2,) * (2 * n))
        cols = [n + s for s in self.sites]
        out = 0
        for e in self.kraus_ops:
            left = _apply_left(e, t, self.sites, n)
            out = out + _apply_left(e.conj(), left, cols, 2 * n)
        return out.reshape(rho.shape)


@dataclass(frozen=True)
class ChannelSequence:
    """Composition of channels applied left to right."""

    stages: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "stages", tuple(self.stages))

    @property
    def dim(self) -> int:
        return self.stages[0].dim

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        for stage in self.stages:
            rho = stage(rho)
        return rho

    def dense_ops(self) -> list[np.ndarray]:
        ops = [np.eye(self.dim, dtype=complex)]
        for stage in self.stages:
            ops = [e @ k for e in stage.dense_ops() for k in ops]
        return ops

    def to_kraus(self) -> KrausChannel:
        return KrausChannel(tuple(self.dense_ops()))


def kraus_ops_of(channel) -> list[np.ndarray]:
    """Full-register Kraus operators of a channel object or a plain list."""
    if hasattr(channel, "dense_ops"):
        return channel.dense_ops()
    return [np.asarray(e, dtype=complex) for e in channel]


def apply_channel(channel, state: np.ndarray) -> np.ndarray:
    return channel(state)


def identity_channel(dim: int) -> KrausChannel:
    return KrausChannel((np.eye(dim, dtype=complex),))


def unitary_mixture(unitaries: Sequence[np.ndarray], weights: Sequence[float]) -> KrausChannel:
    """``rho -> sum_j w_j U_j rho U_j^dagger``."""
    weights = np.asarray(weights, dtype=float)
    if np.any(weights < 0) or abs(weights.sum() - 1) > TP_TOL:
        raise ValueError("mixture weights must be a probability vector")
    return KrausChannel(tuple(np.sqrt(w) * np.asarray(u, dtype=complex) for w, u in zip(weights, unitaries)))


def commutator_map(h: np.ndarray) -> Superoperator:
    """The generator ``rho -> -i [H, rho]``."""
    h = np.asarray(h, dtype=complex)

    def generator(rho):
        return -1j * (h @ rho - rho @ h)

    generator.dim = h.shape[0]
    return generator


def lindblad_dissipator(jumps: Sequence[np.ndarray], rates: Sequence[float] | None = None) -> Superoperator:
    """``rho -> sum_k g_k (A rho A^dag - {A^dag A, rho}/2)``."""
    jumps = [np.asarray(a, dtype=complex) for a in jumps]
    rates = [1.0] * len(jumps) if rates is None else list(rates)

    def generator(rho):
        out = 0
        for g, a in zip(rates, jumps):
            ada = a.conj().T @ a
            out = out + g * (a @ rho @ a.conj().T - 0.5 * (ada @ rho + rho @ ada))
        return out

    generator.dim = jumps[0].shape[0]
    return generator


def superoperators_commute(a: Superoperator, b: Superoperator, dim: int | None = None, tol: float = 1e-10) -> bool:
    """Whether ``a(b(E)) == b(a(E))`` for every matrix unit ``E = |i><j|``."""
    if dim is None:
        dim = getattr(a, "dim", None) or getattr(b, "dim", None)
    if dim is None:
        raise ValueError("cannot infer dimension; pass dim")
    for i, j in itertools.product(range(dim), repeat=2):
        unit = np.zeros((dim, dim), dtype=complex)
        unit[i, j] = 1
        if np.max(np.abs(a(b(unit)) - b(a(unit)))) > tol:
            return False
    return True


def random_pure_state(dim: int, rng: np.random.Generator) -> np.ndarray:
    psi = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return psi / np.linalg.norm(psi)


def random_density_matrix(dim: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Hilbert-Schmidt (Ginibre) random state of the given rank."""
    rank = dim if rank is None else rank
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_hermitian(dim: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return scale * (a + a.conj().T) / 2


def random_channel(dim: int, n_kraus: int, rng: np.random.Generator) -> KrausChannel:
    """Kraus operators cut from a Haar-ish random isometry ``dim -> n_kraus*dim``."""
    g = rng.normal(size=(n_kraus * dim, dim)) + 1j * rng.normal(size=(n_kraus * dim, dim))
    q, r = np.linalg.qr(g)
    q = q * (np.diagonal(r) / np.abs(np.diagonal(r)))
    return KrausChannel(tuple(q[k * dim:(k + 1) * dim] for k in range(n_kraus)))
