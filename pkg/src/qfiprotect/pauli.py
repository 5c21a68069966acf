"""Symplectic Pauli algebra and stabilizer codes.

A Pauli operator on ``n`` qubits is stored as ``i**phase * prod_q X_q^x_q Z_q^z_q``
with ``x`` and ``z`` held as integer bitmasks (bit ``q`` is qubit ``q``,
qubit 0 being the leftmost tensor factor).  With this convention
``Y = i X Z`` has ``x = z = 1`` and ``phase = 1``.

Text format: an optional phase prefix out of ``+ - +i -i`` followed by one
of ``IXYZ`` per qubit, e.g. ``-iYXX``.
"""

from __future__ import annotations

import functools
import itertools
import re
from dataclasses import dataclass

import numpy as np

from .core import PAULI_MATRICES, check_register_size, tensor_product
from .fisher import Povm

_PHASE_TEXT = {0: "", 1: "+i", 2: "-", 3: "-i"}
_PAULI_RE = re.compile(r"^\s*(?P<phase>[+\-−]?i?)(?P<body>[IXYZ]+)\s*$")

#: Dense checks are restricted to this many qubits.
MAX_DENSE_CHECK_QUBITS = 5


class PauliParseError(ValueError):
    def __init__(self, message: str, column: int):
        super().__init__(f"column {column}: {message}")
        self.message = message
        self.column = column


def _popcount(v: int) -> int:
    return bin(v).count("1")


@dataclass(frozen=True)
class PauliOperator:
    n: int
    x: int = 0
    z: int = 0
    phase: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("Pauli operator needs at least one qubit")
        mask = (1 << self.n) - 1
        if self.x & ~mask or self.z & ~mask:
            raise ValueError("bit vectors wider than the register")
        object.__setattr__(self, "phase", self.phase % 4)

    # construction -----------------------------------------------------
    @classmethod
    def identity(cls, n: int) -> "PauliOperator":
        return cls(n)

    @classmethod
    def single(cls, label: str, site: int, n: int) -> "PauliOperator":
        if not 0 <= site < n:
            raise IndexError(f"site {site} out of range for {n} qubits")
        return cls.from_string("I" * site + label + "I" * (n - site - 1))

    @classmethod
    def x_type(cls, support, n: int) -> "PauliOperator":
        return cls(n, x=_mask(support))

    @classmethod
    def z_type(cls, support, n: int) -> "PauliOperator":
        return cls(n, z=_mask(support))

    @classmethod
    def from_string(cls, text: str) -> "PauliOperator":
        return parse_pauli(text)

    # views ------------------------------------------------------------
    @property
    def x_bits(self) -> np.ndarray:
        return np.array([(self.x >> q) & 1 for q in range(self.n)], dtype=np.uint8)

    @property
    def z_bits(self) -> np.ndarray:
        return np.array([(self.z >> q) & 1 for q in range(self.n)], dtype=np.uint8)

    @property
    def weight(self) -> int:
        return _popcount(self.x | self.z)

    @property
    def is_hermitian(self) -> bool:
        # (i^k X^x Z^z)^dag = i^-k (-1)^{x.z} X^x Z^z
        return (2 * self.phase + 2 * _popcount(self.x & self.z)) % 4 == 0

    def label(self) -> str:
        chars = []
        n_y = 0
        for q in range(self.n):
            xb, zb = (self.x >> q) & 1, (self.z >> q) & 1
            if xb and zb:
                chars.append("Y")
                n_y += 1
            else:
                chars.append("X" if xb else ("Z" if zb else "I"))
        return _PHASE_TEXT[(self.phase - n_y) % 4] + "".join(chars)

    def __str__(self) -> str:
        return self.label()

    def to_matrix(self) -> np.ndarray:
        factors = []
        for q in range(self.n):
            m = np.eye(2, dtype=complex)
            if (self.x >> q) & 1:
                m = m @ PAULI_MATRICES["X"]
            if (self.z >> q) & 1:
                m = m @ PAULI_MATRICES["Z"]
            factors.append(m)
        return (1j**self.phase) * tensor_product(*factors)

    # algebra ----------------------------------------------------------
    def __mul__(self, other: "PauliOperator") -> "PauliOperator":
        return pauli_multiply(self, other)

    def commutes_with(self, other: "PauliOperator") -> bool:
        return pauli_commutes(self, other)

    def symplectic(self) -> int:
        return (self.x << self.n) | self.z


def _mask(support) -> int:
    m = 0
    for q in support:
        m |= 1 << int(q)
    return m


def parse_pauli(text: str) -> PauliOperator:
    m = _PAULI_RE.match(text)
    if m is None:
        stripped = text.strip()
        offset = len(text) - len(text.lstrip())
        i = 0
        if stripped and stripped[0] in "+-−":
            i = 1
        if stripped[i:i + 1] == "i":
            i += 1
        for j, ch in enumerate(stripped[i:], start=i):
            if ch not in "IXYZ":
                raise PauliParseError(f"unexpected character {ch!r} in Pauli string {text!r}", offset + j + 1)
        raise PauliParseError(f"empty Pauli string {text!r}", offset + i + 1)
    prefix = m.group("phase").replace("−", "-")
    phase = {"": 0, "+": 0, "-": 2, "i": 1, "+i": 1, "-i": 3}[prefix]
    body = m.group("body")
    x = z = 0
    for q, ch in enumerate(body):
        if ch in "XY":
            x |= 1 << q
        if ch in "ZY":
            z |= 1 << q
        if ch == "Y":
            phase += 1
    return PauliOperator(len(body), x, z, phase)


def pauli_multiply(a: PauliOperator, b: PauliOperator) -> PauliOperator:
    """Group product ``a b`` with exact phase."""
    if a.n != b.n:
        raise ValueError(f"size mismatch: {a.n} vs {b.n} qubits")
    # X^x1 Z^z1 X^x2 Z^z2 = (-1)^{z1.x2} X^{x1+x2} Z^{z1+z2}
    phase = a.phase + b.phase + 2 * _popcount(a.z & b.x)
    return PauliOperator(a.n, a.x ^ b.x, a.z ^ b.z, phase)


def pauli_commutes(a: PauliOperator, b: PauliOperator) -> bool:
    if a.n != b.n:
        raise ValueError(f"size mismatch: {a.n} vs {b.n} qubits")
    return (_popcount(a.x & b.z) + _popcount(a.z & b.x)) % 2 == 0


def gf2_rank(vectors) -> int:
    """Rank over GF(2) of integers read as bit vectors."""
    basis: dict[int, int] = {}
    for v in vectors:
        while v:
            top = v.bit_length() - 1
            if top not in basis:
                basis[top] = v
                break
            v ^= basis[top]
    return len(basis)


@dataclass(frozen=True)
class StabilizerCode:
    generators: tuple
    logical_x: PauliOperator
    logical_z: PauliOperator
    n: int

    def __post_init__(self):
        gens = tuple(self.generators)
        object.__setattr__(self, "generators", gens)
        for g in gens + (self.logical_x, self.logical_z):
            if g.n != self.n:
                raise ValueError("all operators must act on the code's qubits")
        for g in gens:
            if not g.is_hermitian:
                raise ValueError(f"generator {g} is not Hermitian")
        for g, h in itertools.combinations(gens, 2):
            if not pauli_commutes(g, h):
                raise ValueError(f"generators {g} and {h} do not commute")
        if gf2_rank(g.symplectic() for g in gens) != len(gens):
            raise ValueError("generators are not independent")
        for g in gens:
            if not (pauli_commutes(g, self.logical_x) and pauli_commutes(g, self.logical_z)):
                raise ValueError(f"logical operators must commute with generator {g}")
        if pauli_commutes(self.logical_x, self.logical_z):
            raise ValueError("logical X and Z must anticommute")

    @property
    def k(self) -> int:
        return self.n - len(self.generators)

    def projector(self) -> np.ndarray:
        check_register_size(self.n)
        dim = 2**self.n
        p = np.eye(dim, dtype=complex)
        for g in self.generators:
            p = p @ (np.eye(dim) + g.to_matrix()) / 2
        return p

    @functools.cached_property
    def _codewords(self):
        if self.k != 1:
            raise ValueError("codewords are only built for one logical qubit")
        p = self.projector()
        w, v = np.linalg.eigh(p)
        span = v[:, w > 0.5]
        zbar = span.conj().T @ self.logical_z.to_matrix() @ span
        zw, zv = np.linalg.eigh((zbar + zbar.conj().T) / 2)
        zero = span @ zv[:, np.argmax(zw)]
        k = np.argmax(np.abs(zero))
        zero = zero * (abs(zero[k]) / zero[k])
        one = self.logical_x.to_matrix() @ zero
        return zero, one

    def codewords(self) -> tuple[np.ndarray, np.ndarray]:
        """Logical basis ``(|0bar>, |1bar>)`` with ``|1bar> = Xbar |0bar>``."""
        zero, one = self._codewords
        return zero.copy(), one.copy()


def phase_flip_code(n: int) -> StabilizerCode:
    """The n-qubit phase-flip code (n odd): generators ``X_j X_{j+1}``."""
    if n < 1 or n % 2 == 0:
        raise ValueError(f"phase-flip code needs an odd positive qubit count, got {n}")
    gens = tuple(PauliOperator.x_type((j, j + 1), n) for j in range(n - 1))
    return StabilizerCode(gens, PauliOperator.x_type(range(n), n), PauliOperator.z_type(range(n), n), n)


def is_detectable(error: PauliOperator, code: StabilizerCode) -> bool:
    return any(not pauli_commutes(error, g) for g in code.generators)


def phase_flip_errors(n: int, t: int) -> list[PauliOperator]:
    """All ``Z_alpha`` with ``|alpha| <= t``, identity first."""
    return [PauliOperator.z_type(alpha, n) for w in range(t + 1) for alpha in itertools.combinations(range(n), w)]


def anticommutes_with_effective_generator(
    code: StabilizerCode, x_bar: PauliOperator, generator: np.ndarray, probe: np.ndarray, tol: float = 1e-10
) -> bool:
    """Dense check that ``x_bar`` anticommutes with ``P H P - <psi|H|psi>``."""
    if code.n > MAX_DENSE_CHECK_QUBITS:
        raise ValueError(f"dense check limited to {MAX_DENSE_CHECK_QUBITS} qubits")
    p = code.projector()
    mean = np.vdot(probe, generator @ probe).real
    h_eff = p @ generator @ p - mean * np.eye(p.shape[0])
    xm = x_bar.to_matrix()
    return bool(np.max(np.abs(xm @ h_eff + h_eff @ xm)) <= tol)


def immune_error_set(
    code: StabilizerCode,
    correctable,
    x_bar: PauliOperator,
    generator: np.ndarray | None = None,
    probe: np.ndarray | None = None,
) -> list[PauliOperator]:
    """Correctable errors together with their products ``E_j x_bar``.

    If ``generator`` and ``probe`` are given, the anticommutation of
    ``x_bar`` with the effective generator is checked densely as well.
    """
    if any(not pauli_commutes(x_bar, g) for g in code.generators):
        raise ValueError(f"{x_bar} does not commute with the stabilizer")
    if generator is not None and probe is not None:
        if not anticommutes_with_effective_generator(code, x_bar, generator, probe):
            raise ValueError(f"{x_bar} does not anticommute with the effective generator")
    correctable = list(correctable)
    return correctable + [pauli_multiply(e, x_bar) for e in correctable]


def optimal_measurement_povm(code: StabilizerCode, x_bar: PauliOperator) -> Povm:
    """Projectors onto the joint eigenspaces of the generators and ``x_bar``."""
    if code.k != 1:
        raise ValueError("optimal joint measurement needs a two-dimensional code space")
    if not x_bar.is_hermitian:
        raise ValueError(f"{x_bar} is not an observable")
    check_register_size(code.n)
    dim = 2**code.n
    observables = [g.to_matrix() for g in code.generators] + [x_bar.to_matrix()]
    eye = np.eye(dim)
    elements = []
    for signs in itertools.product((1, -1), repeat=len(observables)):
        p = eye.astype(complex)
        for s, o in zip(signs, observables):
            p = p @ (eye + s * o) / 2
        if np.trace(p).real > 0.5:
            elements.append(p)
    return Povm(tuple(elements))


def all_paulis(n: int):
    """Every Hermitian n-qubit Pauli (phase chosen so the operator is Hermitian)."""
    for x in range(2**n):
        for z in range(2**n):
            yield PauliOperator(n, x, z, _popcount(x & z))
