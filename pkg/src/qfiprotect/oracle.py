"""Brute-force QFI of the dephased (logical-)GHZ schemes on dense density matrices.

Independent of :mod:`qfiprotect.analytic`: the noisy state is built qubit by
qubit and its QFI comes from the generic SLD route.
"""

from __future__ import annotations

import numpy as np

from .core import ChannelSequence, ParametricFamily, evolve
from .fisher import family_qfi
from .noise import (
    DephasingScenario,
    dephasing_sequence,
    ghz_probe,
    logical_ghz_probe,
    phase_flip_recovery,
    sensing_generator,
)

#: Largest register the oracle will build.
ORACLE_MAX_QUBITS = 9


class OracleCapError(ValueError):
    pass


def _noise(n_qubits: int, p_x: float, p_z: float) -> ChannelSequence:
    stages = dephasing_sequence("X", p_x, n_qubits).stages + dephasing_sequence("Z", p_z, n_qubits).stages
    return ChannelSequence(stages)


def brute_force_ghz_qfi(n: int, t: float, omega: float, p_x: float, p_z: float) -> float:
    if n > ORACLE_MAX_QUBITS:
        raise OracleCapError(f"oracle limited to {ORACLE_MAX_QUBITS} qubits, got {n}")
    scenario = DephasingScenario(n_total=n, time=t, omega=omega)
    family = ParametricFamily(ghz_probe(n), sensing_generator("raw", scenario))
    return family_qfi(family, omega, _noise(n, p_x, p_z))


def brute_force_logical_qfi(scenario: DephasingScenario, recover: bool = True) -> float:
    """Physical dephasing on every qubit, then (optionally) block-wise phase-flip recovery."""
    m, n = scenario.n_blocks, scenario.block_size
    if m * n > ORACLE_MAX_QUBITS:
        raise OracleCapError(f"oracle limited to {ORACLE_MAX_QUBITS} qubits, got {m * n}")
    family = ParametricFamily(logical_ghz_probe(m, n), sensing_generator("logical", scenario))
    channel = _noise(m * n, scenario.p_x, scenario.p_z)
    if recover and n > 1:
        channel = ChannelSequence(channel.stages + tuple(phase_flip_recovery(b, n, m) for b in range(m)))
    return family_qfi(family, scenario.omega, channel)


def brute_force_scenario_qfi(kind: str, scenario: DephasingScenario) -> float:
    if kind == "raw":
        return brute_force_ghz_qfi(scenario.n_total, scenario.time, scenario.omega, scenario.p_x, scenario.p_z)
    return brute_force_logical_qfi(scenario)


def noisy_ghz_state(n: int, t: float, omega: float, p_x: float, p_z: float) -> np.ndarray:
    scenario = DephasingScenario(n_total=n, time=t, omega=omega)
    family = ParametricFamily(ghz_probe(n), sensing_generator("raw", scenario))

    return _noise(n, p_x, p_z)(evolve(family, omega))
