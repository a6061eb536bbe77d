"""Numerical propagation of the level-plus-Coulomb-band Schrodinger system.

Amplitudes obey

    i db0/dtau  = beta tau b0 + sum_j g_j a_j
    i da_j/dtau = (k_j / tau) a_j + g_j b0

on tau > 0. Integration starts at a small ``tau0`` from the convergent
Frobenius series of the solution regular at tau = 0, so no singular point is
ever stepped across. Asymptotic formulas elsewhere in the package use the
time t = tau**2 / 2; helpers here convert between the two.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import _dopri
from .errors import (ConfigError, InvalidStart, NormDriftError, NotConverged,
                     StepLimitExceeded)

START_GAUGE = 1e-4       # default max|g| * tau0
START_LIMIT = 1e-3       # largest max|g| * tau0 accepted
SERIES_TERMS = 16
PHASE_CAP = 0.5          # radians per step
# beta * t at the end of the averaging window; the dressed populations carry a
# bias that decays like 1/t and is ~1e-3 relative here
AVERAGE_HORIZON = 1e4


def t_from_tau(tau):
    return 0.5 * tau * tau


def tau_from_t(t):
    return np.sqrt(2.0 * np.asarray(t, dtype=float))


@dataclass(frozen=True)
class AmplitudeState:
    """Amplitudes (b0, a_1..a_N) at time ``tau``; ``a`` is read-only."""

    tau: float
    b0: complex
    a: np.ndarray

    @classmethod
    def from_vector(cls, tau, y):
        a = np.array(y[1:], dtype=complex)
        a.flags.writeable = False
        return cls(float(tau), complex(y[0]), a)

    @property
    def vector(self):
        return np.concatenate([[self.b0], self.a])

    @property
    def norm(self):
        return abs(self.b0) ** 2 + float(np.sum(np.abs(self.a) ** 2))

    @property
    def populations(self):
        """Bare populations |b0|^2, |a_1|^2, ..., |a_N|^2."""
        return np.abs(self.vector) ** 2


@dataclass(frozen=True)
class IntegratorConfig:
    rel_tol: float = 1e-12
    abs_tol: float = 1e-14
    tau0: float | None = None
    tau_max: float = 40.0
    max_steps: int = 20_000_000
    norm_tol: float = 1e-8

    def __post_init__(self):
        for name in ("rel_tol", "abs_tol"):
            val = getattr(self, name)
            if not (0.0 < val <= 1e-2):
                raise ConfigError(f"{name} must lie in (0, 1e-2], got {val!r}")
        if self.tau0 is not None and not (0.0 < self.tau0 < self.tau_max):
            raise ConfigError("need 0 < tau0 < tau_max")
        if self.tau_max <= 0.0:
            raise ConfigError("tau_max must be positive")
        if self.max_steps < 1:
            raise ConfigError("max_steps must be >= 1")

    def start_time(self, params):
        if self.tau0 is not None:
            return self.tau0
        return default_tau0(params)


def default_tau0(params):
    gmax = float(np.max(np.abs(params.g)))
    if gmax == 0.0:
        return 1e-4
    return START_GAUGE / gmax


def _check_start(params, tau0):
    gmax = float(np.max(np.abs(params.g)))
    if not tau0 > 0.0 or gmax * tau0 >= START_LIMIT:
        raise InvalidStart(
            f"tau0={tau0!r} too large: need max|g| * tau0 < {START_LIMIT:g}")


def series_coefficients(params, q=None, n_terms=SERIES_TERMS):
    """Frobenius coefficients of the solution regular at tau = 0.

    The solution is tau**s * sum_n (B_n, A_n) tau**n with s = 0 for level-0
    start (B_0 = 1) and s = -i k_q for band start (A_{q,0} = 1); ``q`` here
    is a 0-based position.
    """
    k, g, beta = params.k, params.g, params.beta
    n_levels = params.n_levels
    s = 0.0 if q is None else -1j * k[q]
    B = np.zeros(n_terms, dtype=complex)
    A = np.zeros((n_terms, n_levels), dtype=complex)
    if q is None:
        B[0] = 1.0
    else:
        A[0, q] = 1.0
    for n in range(1, n_terms):
        nu = n + s
        A[n] = g * B[n - 1] / (1j * nu - k)
        prev = B[n - 2] if n >= 2 else 0.0
        B[n] = (beta * prev + g @ A[n - 1]) / (1j * nu)
    return s, B, A


def _series_state(params, tau0, q):
    _check_start(params, tau0)
    s, B, A = series_coefficients(params, q)
    powers = tau0 ** np.arange(B.size)
    phase = np.exp(s * math.log(tau0))
    y = phase * np.concatenate([[B @ powers], powers @ A])
    y /= np.linalg.norm(y)
    return AmplitudeState.from_vector(tau0, y)


def init_level0(params, tau0=None):
    """State at ``tau0`` that evolves from b0(0) = 1, a(0) = 0."""
    return _series_state(params, default_tau0(params) if tau0 is None else tau0, None)


def init_band(params, q, tau0=None):
    """State at ``tau0`` that evolves from unit population in band level ``q``.

    Band levels are numbered 1..N in ascending k. Their amplitudes carry the
    phase tau**(-i k_q), which has no limit at tau -> 0; only moduli are
    meaningful.
    """
    if not 1 <= q <= params.n_levels:
        raise ConfigError(f"band level q={q} outside 1..{params.n_levels}")
    return _series_state(params, default_tau0(params) if tau0 is None else tau0, q - 1)


@dataclass(frozen=True)
class RunStats:
    accepted: int
    rejected: int
    norm_drift: float


def propagate_many(state, params, taus, config=IntegratorConfig(), conjugate=False):
    """States at each of the monotone times ``taus``; also returns :class:`RunStats`.

    With ``conjugate=True`` the system i dy/dtau = -H y is integrated, whose
    solution from conj(y0) is conj(y(tau)) for the real symmetric H.
    """
    taus = np.atleast_1d(np.asarray(taus, dtype=float))
    out, accepted, rejected, drift, status, reached = _dopri.integrate(
        state.vector.astype(np.complex128), float(state.tau), taus,
        params.beta, np.ascontiguousarray(params.k), np.ascontiguousarray(params.g),
        -1.0 if conjugate else 1.0, config.rel_tol, config.abs_tol, PHASE_CAP,
        int(config.max_steps))
    if status == _dopri.STATUS_STEP_LIMIT:
        raise StepLimitExceeded(
            f"max_steps={config.max_steps} reached at tau={reached:g} (target {taus[-1]:g})")
    if status == _dopri.STATUS_STEP_UNDERFLOW:
        raise StepLimitExceeded(f"step size underflow at tau={reached:g}")
    if drift > 10.0 * config.norm_tol:
        raise NormDriftError(f"norm drift {drift:.3e} exceeds 10 * norm_tol")
    states = [AmplitudeState.from_vector(t, y) for t, y in zip(taus, out)]
    return states, RunStats(int(accepted), int(rejected), float(drift))


def propagate(state, params, config=IntegratorConfig(), conjugate=False):
    """Propagate ``state`` to ``config.tau_max``."""
    states, _ = propagate_many(state, params, [config.tau_max], config, conjugate)
    return states[0]


def dressed_populations(state, params):
    """Populations of the freely evolving parts of each amplitude.

    Far past the crossings each amplitude is a free wave plus a small forced
    response to the others, detuned by beta tau - k_j / tau. Removing the
    first-order forced part leaves populations whose limits are the
    transition probabilities, with residual oscillation O((beta tau)**-2)
    instead of O((beta tau)**-1).
    """
    tau = state.tau
    detuning = params.beta * tau - params.k / tau
    b0 = state.b0 + np.sum(params.g * state.a / detuning)
    a = state.a - params.g * state.b0 / detuning
    return np.abs(np.concatenate([[b0], a])) ** 2


def default_horizon(params):
    """A tau beyond every crossing where the coupling is weak relative to detuning."""
    beta = params.beta
    kpos = float(np.max(np.maximum(params.k, 0.0)))
    gmax = float(np.max(np.abs(params.g)))
    crossing = math.sqrt(kpos / beta)
    return max(3.0 * crossing, 12.0 * gmax / beta, 12.0 / math.sqrt(beta))


@dataclass(frozen=True)
class Estimate:
    value: float
    error: float
    horizons: tuple = ()
    samples: tuple = ()


def converged_p00(params, config=None, tol=1e-4, max_doublings=6):
    """Extrapolated survival probability |b0(t -> inf)|^2 with an error bar.

    Dressed populations are sampled at horizons T, 2T, 4T (in tau), where the
    residual decays like tau**-2; two Richardson estimates are formed and
    their spread is the error bar. While the spread exceeds ``tol`` the run
    continues to 8T, 16T, ... (at most ``max_doublings`` more horizons),
    always using the last three samples.
    """
    if config is None:
        config = IntegratorConfig(tau_max=4.0 * default_horizon(params))
    state = init_level0(params, config.tau0)
    T = config.tau_max / 4.0
    horizons = [T, 2.0 * T, 4.0 * T]
    p = []
    todo = list(horizons)
    spreads = []
    while True:
        states, _ = propagate_many(state, params, todo, with_horizon(config, todo[-1]))
        state = states[-1]
        p += [float(dressed_populations(s, params)[0]) for s in states]
        est1 = (4.0 * p[-2] - p[-3]) / 3.0
        est2 = (4.0 * p[-1] - p[-2]) / 3.0
        spread = abs(est2 - est1)
        spreads.append(spread)
        if spread <= tol:
            break
        if len(horizons) - 3 >= max_doublings:
            raise NotConverged("survival probability did not settle",
                               {"horizons": tuple(horizons), "samples": p,
                                "spreads": spreads})
        horizons.append(2.0 * horizons[-1])
        todo = [horizons[-1]]
    return Estimate(value=est2, error=max(spread, abs(est2 - p[-1]) / 10.0),
                    horizons=tuple(horizons[-3:]), samples=tuple(p[-3:]))


def time_averaged_population(params, q_init, target_level, config=None, t_end=None,
                             n_samples=64, dressed=True, drift_tol=None):
    """Mean population of ``target_level`` over the last decade of a geometric grid in t.

    ``q_init`` is None for level-0 start or a band level 1..N;
    ``target_level`` is 0 for level 0 and j for band level j.
    The grid runs over t in [t_end / 10, t_end] with t = tau**2 / 2.
    ``drift_tol`` bounds the difference between the means of the two halves
    of the window; NotConverged is raised when it is exceeded.
    """
    if t_end is None:
        t_end = max(AVERAGE_HORIZON / params.beta, t_from_tau(default_horizon(params)))
    if config is None:
        config = IntegratorConfig(tau_max=float(tau_from_t(t_end)))
    start = (init_level0(params, config.tau0) if q_init is None
             else init_band(params, q_init, config.tau0))
    t_grid = np.geomspace(t_end / 10.0, t_end, n_samples)
    states, _ = propagate_many(start, params, tau_from_t(t_grid), config)
    if dressed:
        values = np.array([dressed_populations(s, params)[target_level] for s in states])
    else:
        values = np.array([s.populations[target_level] for s in states])
    half = n_samples // 2
    drift = abs(values[half:].mean() - values[:half].mean())
    if drift_tol is not None and drift > drift_tol:
        raise NotConverged("running average still drifting",
                           {"drift": drift, "t_end": t_end})
    return Estimate(value=float(values.mean()), error=float(values.std(ddof=1)),
                    horizons=(t_end / 10.0, t_end), samples=tuple(values))


def with_horizon(config, tau_max):
    return replace(config, tau_max=tau_max)
