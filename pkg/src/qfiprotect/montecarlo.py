"""Simulated measurement records and maximum-likelihood estimation.

Each trial draws from its own PCG64 stream, seeded by ``(seed, trial)``,
so results do not depend on worker count or scheduling.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np

from .analytic import UnidentifiableError
from .core import ParametricFamily
from .fisher import Povm, classical_fisher, noisy_state

RNG_ALGORITHM = "numpy.random.PCG64"
GRID_POINTS = 200
GOLDEN_TOL = 1e-8
FLAT_TOL = 1e-12
_INV_PHI = (math.sqrt(5) - 1) / 2


def trial_rng(seed: int, trial: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(trial,))))


def sample_outcomes(povm: Povm, state: np.ndarray, nu: int, seed=None) -> np.ndarray:
    """``nu`` i.i.d. outcome indices drawn from ``tr(M_x rho)``.

    ``seed`` may be an integer or an existing :class:`numpy.random.Generator`.
    """
    if nu < 0:
        raise ValueError(f"sample count must be nonnegative, got {nu}")
    rng = seed if isinstance(seed, np.random.Generator) else trial_rng(0 if seed is None else seed)
    p = np.clip(povm.probabilities(state), 0.0, None)
    return rng.choice(len(p), size=nu, p=p / p.sum())


def povm_model(povm: Povm, family: ParametricFamily, channel=None) -> Callable[[float], np.ndarray]:
    """``theta -> [tr(M_x N(rho_theta))]_x``."""

    def model(theta: float) -> np.ndarray:
        return povm.probabilities(noisy_state(family, theta, channel))

    return model


def _log_likelihood(counts: np.ndarray, probs: np.ndarray) -> float:
    seen = counts > 0
    p = probs[seen]
    if np.any(p <= 0):
        return -math.inf
    return float(np.dot(counts[seen], np.log(p)))


def mle_estimate(outcomes, model: Callable[[float], np.ndarray], search_interval: tuple[float, float]) -> float:
    """Maximum-likelihood estimate on ``search_interval``.

    A 200-point grid scan locates the best cell (ties go to the point nearest
    the interval midpoint), then golden-section search refines it to a
    bracket of width 1e-8.  Raises :class:`UnidentifiableError` when the
    grid log-likelihood is flat to within 1e-12.
    """
    lo, hi = map(float, search_interval)
    if not hi > lo:
        raise ValueError(f"empty search interval ({lo}, {hi})")
    outcomes = np.asarray(outcomes, dtype=int)
    n_out = len(model(lo))
    counts = np.bincount(outcomes, minlength=n_out).astype(float)

    def ll(theta):
        return _log_likelihood(counts, np.asarray(model(theta)))

    grid = np.linspace(lo, hi, GRID_POINTS)
    values = np.array([ll(t) for t in grid])
    finite = values[np.isfinite(values)]
    if finite.size == 0 or finite.max() - finite.min() <= FLAT_TOL:
        raise UnidentifiableError("unidentifiable sample: likelihood is flat on the search interval")
    best = values.max()
    ties = np.flatnonzero(values >= best - FLAT_TOL * max(1.0, abs(best)))
    i = int(ties[np.argmin(np.abs(grid[ties] - (lo + hi) / 2))])
    a, b = grid[max(i - 1, 0)], grid[min(i + 1, GRID_POINTS - 1)]

    c, d = b - _INV_PHI * (b - a), a + _INV_PHI * (b - a)
    fc, fd = ll(c), ll(d)
    while b - a > GOLDEN_TOL:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = ll(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = ll(d)
    return (a + b) / 2


def default_interval(family: ParametricFamily, theta_true: float) -> tuple[float, float]:
    """``theta_true +- pi / (2 * spread(G))``, one fringe period around the truth."""
    spread = float(np.ptp(family._spectrum[0]))
    if spread <= 0:
        raise UnidentifiableError("generator has a single eigenvalue; no phase is imprinted")
    half = math.pi / (2 * spread)
    return theta_true - half, theta_true + half


@dataclass(frozen=True)
class AttainmentReport:
    scenario: str
    nu: int
    trials: int
    seed: int
    theta_true: float
    empirical_mean: float
    empirical_std: float
    crb: float
    ratio: float
    rng: str = RNG_ALGORITHM

    def to_dict(self) -> dict:
        return asdict(self)


def _run_trials(model, state, povm, nu, trials, seed, interval, workers) -> np.ndarray:
    def one(trial: int) -> float:
        outcomes = sample_outcomes(povm, state, nu, trial_rng(seed, trial))
        return mle_estimate(outcomes, model, interval)

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return np.array(list(pool.map(one, range(trials))))
    return np.array([one(k) for k in range(trials)])


def crb_attainment_report(
    family: ParametricFamily,
    povm: Povm,
    theta_true: float,
    nu: int,
    trials: int,
    seed: int,
    channel=None,
    search_interval: tuple[float, float] | None = None,
    scenario: str = "custom",
    workers: int = 1,
) -> AttainmentReport:
    """Repeat ``trials`` MLE experiments of ``nu`` shots and compare their spread to ``1/sqrt(nu F_c)``."""
    if nu < 1:
        raise ValueError(f"nu must be positive, got {nu}")
    if trials < 2:
        raise ValueError(f"need at least two trials for a standard deviation, got {trials}")
    fisher = classical_fisher(povm, family, theta_true, channel)
    if not fisher > 0:
        raise UnidentifiableError(f"classical Fisher information {fisher} is not positive at the true value")
    interval = search_interval or default_interval(family, theta_true)
    model = povm_model(povm, family, channel)
    state = noisy_state(family, theta_true, channel)
    estimates = _run_trials(model, state, povm, nu, trials, seed, interval, workers)
    std = float(np.std(estimates, ddof=1))
    bound = 1 / math.sqrt(nu * fisher)
    return AttainmentReport(
        scenario=scenario,
        nu=nu,
        trials=trials,
        seed=seed,
        theta_true=theta_true,
        empirical_mean=float(np.mean(estimates)),
        empirical_std=std,
        crb=bound,
        ratio=std / bound,
    )


def estimator_slope(
    family: ParametricFamily,
    povm: Povm,
    theta_true: float,
    nu: int,
    trials: int,
    seed: int,
    delta: float = 1e-3,
    channel=None,
    search_interval: tuple[float, float] | None = None,
) -> float:
    """Finite-difference estimate of ``d<theta_hat>/d theta`` from trials at ``theta +- delta``.

    Both sides reuse the same trial streams (common random numbers).
    """
    interval = search_interval or default_interval(family, theta_true)
    model = povm_model(povm, family, channel)
    means = []
    for theta in (theta_true - delta, theta_true + delta):
        state = noisy_state(family, theta, channel)
        means.append(np.mean(_run_trials(model, state, povm, nu, trials, seed, interval, 1)))
    return float((means[1] - means[0]) / (2 * delta))
