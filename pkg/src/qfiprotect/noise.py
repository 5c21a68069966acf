"""Noise channels and probe/generator builders for the (logical-)GHZ schemes."""

from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass

import numpy as np

from .core import (
    I2,
    SIGMA_MINUS,
    ChannelSequence,
    KrausChannel,
    X,
    Z,
    check_register_size,
    lindblad_dissipator,
    tensor_product,
)
from .pauli import PauliOperator, phase_flip_code

#: Register size up to which all 2**n Kraus products of a dephasing map are built.
MAX_KRAUS_PRODUCT_QUBITS = 9


@dataclass(frozen=True)
class DephasingScenario:
    """Parameters of the dephased frequency-estimation example.

    ``n_total`` qubits split into ``m = n_total // block_size`` blocks; any
    remainder qubits stay idle.  Rates and ``omega`` are per unit time.
    """

    n_total: int
    block_size: int = 1
    gamma_x: float = 0.0
    gamma_z: float = 0.0
    omega: float = 0.0
    time: float = 1.0

    def __post_init__(self):
        if self.block_size < 1 or self.block_size % 2 == 0:
            raise ValueError(f"block size must be odd and positive, got {self.block_size}")
        if self.n_total // self.block_size < 1:
            raise ValueError(f"{self.n_total} qubits cannot hold a block of {self.block_size}")
        for name in ("gamma_x", "gamma_z", "time"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")

    @property
    def n_blocks(self) -> int:
        return self.n_total // self.block_size

    @property
    def p_x(self) -> float:
        return flip_probability(self.gamma_x, self.time)

    @property
    def p_z(self) -> float:
        return flip_probability(self.gamma_z, self.time)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_mapping(cls, values) -> "DephasingScenario":
        kinds = {"n_total": int, "block_size": int, "gamma_x": float, "gamma_z": float, "omega": float, "time": float}
        unknown = set(values) - set(kinds)
        if unknown:
            raise ValueError(f"unknown scenario keys: {', '.join(sorted(unknown))}")
        return cls(**{k: kinds[k](v) for k, v in values.items()})


def flip_probability(gamma: float, t: float) -> float:
    """``(1 - exp(-gamma t)) / 2``."""
    if gamma < 0 or t < 0:
        raise ValueError("rate and time must be nonnegative")
    return -math.expm1(-gamma * t) / 2


def _pauli_for(axis: str) -> np.ndarray:
    axis = axis.upper()
    if axis not in ("X", "Z"):
        raise ValueError(f"dephasing axis must be X or Z, got {axis!r}")
    return X if axis == "X" else Z


def single_qubit_mixing(axis: str, p: float, site: int, n: int) -> KrausChannel:
    """``rho -> (1-p) rho + p P_site rho P_site`` as a local channel."""
    if not 0 <= p <= 1:
        raise ValueError(f"probability {p} outside [0, 1]")
    pauli = _pauli_for(axis)
    return KrausChannel((math.sqrt(1 - p) * I2, math.sqrt(p) * pauli), sites=(site,), n_qubits=n)


def dephasing_sequence(axis: str, p: float, n: int, sites=None) -> ChannelSequence:
    """Product of single-qubit mixing maps, applied factor by factor."""
    check_register_size(n)
    sites = range(n) if sites is None else sites
    return ChannelSequence(tuple(single_qubit_mixing(axis, p, s, n) for s in sites))


def dephasing_channel(axis: str, p: float, n: int) -> KrausChannel:
    """Product dephasing map with its ``2**n`` Kraus operators materialized."""
    if n > MAX_KRAUS_PRODUCT_QUBITS:
        raise ValueError(f"{n} qubits exceeds the Kraus-product cap of {MAX_KRAUS_PRODUCT_QUBITS}")
    check_register_size(n)
    if not 0 <= p <= 1:
        raise ValueError(f"probability {p} outside [0, 1]")
    pauli = _pauli_for(axis)
    ops = []
    for pattern in itertools.product((0, 1), repeat=n):
        k = sum(pattern)
        weight = math.sqrt((1 - p) ** (n - k) * p**k)
        ops.append(weight * tensor_product(*[pauli if b else I2 for b in pattern]))
    return KrausChannel(tuple(ops))


def spontaneous_emission_channel(gamma: float, t: float) -> KrausChannel:
    """Amplitude damping written with ``eta = exp(-gamma t)``."""
    if gamma < 0 or t < 0:
        raise ValueError("rate and time must be nonnegative")
    eta = math.exp(-gamma * t)
    e1 = (math.sqrt(eta) + 1) / 2 * I2 + (math.sqrt(eta) - 1) / 2 * Z
    e2 = math.sqrt(1 - eta) * SIGMA_MINUS
    return KrausChannel((e1, e2))


def spontaneous_emission_generator(gamma: float):
    """The dissipator ``gamma (s rho s^dag - {s^dag s, rho}/2)`` with ``s = sigma_-``."""
    return lindblad_dissipator([SIGMA_MINUS], [gamma])


def ghz_probe(n: int) -> np.ndarray:
    check_register_size(n)
    psi = np.zeros(2**n, dtype=complex)
    psi[0] = psi[-1] = 1 / math.sqrt(2)
    return psi


def logical_ghz_probe(m: int, n: int) -> np.ndarray:
    """``(|0bar>^m + |1bar>^m)/sqrt(2)`` over m blocks of the n-qubit phase-flip code."""
    check_register_size(m * n)
    zero, one = phase_flip_code(n).codewords()
    psi = tensor_product(*[zero] * m) + tensor_product(*[one] * m)
    return psi / np.linalg.norm(psi)


def block_sites(block: int, n: int) -> list[int]:
    return list(range(block * n, (block + 1) * n))


def logical_z_operator(block: int, n: int, m: int) -> PauliOperator:
    return PauliOperator.z_type(block_sites(block, n), m * n)


def sensing_generator(kind: str, scenario: DephasingScenario) -> np.ndarray:
    """``G = t H`` with ``H = sum_i Zbar_i / 2`` (raw: ``Zbar_i = Z_i``).

    The raw scheme uses all ``n_total`` qubits; the logical scheme uses the
    ``m * block_size`` qubits inside complete blocks.
    """
    if kind == "raw":
        m, n = scenario.n_total, 1
    elif kind == "logical":
        m, n = scenario.n_blocks, scenario.block_size
    else:
        raise ValueError(f"generator kind must be 'raw' or 'logical', got {kind!r}")
    check_register_size(m * n)
    diag = np.zeros(2 ** (m * n))
    for b in range(m):
        diag += np.real(np.diagonal(logical_z_operator(b, n, m).to_matrix()))
    return np.diag(scenario.time * diag / 2).astype(complex)


def scheme_probe(kind: str, scenario: DephasingScenario) -> np.ndarray:
    if kind == "raw":
        return ghz_probe(scenario.n_total)
    if kind == "logical":
        return logical_ghz_probe(scenario.n_blocks, scenario.block_size)
    raise ValueError(f"scheme kind must be 'raw' or 'logical', got {kind!r}")


def logical_error_probabilities(p_x: float, p_z: float, n: int) -> tuple[float, float]:
    """Logical ``(p_bar_x, p_bar_z)`` of one n-qubit phase-flip block.

    Phase flips on at most ``(n-1)/2`` qubits are corrected; any odd number
    of bit flips acts as one logical bit flip.
    """
    if n < 1 or n % 2 == 0:
        raise ValueError(f"block size must be odd, got {n}")
    p_bar_z = sum(math.comb(n, k) * p_z ** (n - k) * (1 - p_z) ** k for k in range((n - 1) // 2 + 1))
    p_bar_x = (1 - (1 - 2 * p_x) ** n) / 2
    return p_bar_x, p_bar_z


def scenario_logical_error_probabilities(scenario: DephasingScenario) -> dict:
    p_bar_x, p_bar_z = logical_error_probabilities(scenario.p_x, scenario.p_z, scenario.block_size)
    return {"p_bar_x": p_bar_x, "p_bar_z": p_bar_z}


def trotter_validity(scenario: DephasingScenario, threshold: float = 0.01) -> dict:
    """Dimensionless short-time numbers ``N gamma_x^2 t^2`` and ``N omega^2 t^2``."""
    n, t = scenario.n_total, scenario.time
    a = n * scenario.gamma_x**2 * t**2
    b = n * scenario.omega**2 * t**2
    return {"valid": a < threshold and b < threshold, "n_gx2t2": a, "n_w2t2": b}


def phase_flip_recovery(block: int, n: int, m: int) -> KrausChannel:
    """Syndrome measurement plus minimum-weight Z correction on one block.

    Returned as a local channel on the block's qubits of an ``m*n`` register.
    """
    code = phase_flip_code(n)
    t = (n - 1) // 2
    dim = 2**n
    gens = [g.to_matrix() for g in code.generators]
    ops = []
    for w in range(t + 1):
        for alpha in itertools.combinations(range(n), w):
            err = PauliOperator.z_type(alpha, n)
            proj = np.eye(dim, dtype=complex)
            for g, gm in zip(code.generators, gens):
                sign = 1 if err.commutes_with(g) else -1
                proj = proj @ (np.eye(dim) + sign * gm) / 2
            ops.append(err.to_matrix() @ proj)
    return KrausChannel(tuple(ops), sites=tuple(block_sites(block, n)), n_qubits=m * n)
