"""Reservoir-driven stochastic dissipative dynamics and canonical sampling.

The reservoir acts on momentum only. One step composes a half reservoir kick,
a full adiabatic velocity-Verlet step, and another half reservoir kick; the
full-step reservoir update is p <- p*(1 - a) + R with drag a = sigma^2/(2 m kB T)
and R Gaussian with zero mean and variance sigma^2 per component (a half kick
uses drag a/2 and variance sigma^2/2). Randomness comes from
numpy.random.Generator (PCG64) seeded explicitly; normal deviates use
numpy's standard_normal, so equal seeds give bit-identical chains.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import (
    PhaseSpacePoint,
    PhysicalConstants,
    PotentialSpec,
    evaluate_potential,
    grad_potential,
    hamiltonian_value,
)
from .classical import verlet_step
from .errors import ConfigurationError, InsufficientSamplesError

MIN_RETAINED = 1000
KS_THIN_STEPS = 500  # steps between samples entering the KS statistic


@dataclass(frozen=True)
class ThermostatParams:
    """Reservoir coupling: per-step random-force variance, step size, temperature."""

    sigma2: float
    tau: float
    temperature: float

    def __post_init__(self):
        if self.sigma2 <= 0 or self.tau <= 0 or self.temperature <= 0:
            raise ConfigurationError("sigma2, tau, temperature must be positive")

    def drag_per_step(self, consts: PhysicalConstants) -> float:
        a = self.sigma2 / (2.0 * consts.mass * consts.kB * self.temperature)
        if not (0.0 < a < 1.0):
            raise ConfigurationError(f"per-step drag a = {a:.3g} outside (0, 1)")
        return a


class EffectiveEntropy:
    """Reservoir entropy -H/T with an optional multiplicative log-correction.

    The correction hook accepts an object exposing value(x), grad_p(x) and
    laplacian_p(x); with the default (None, the classical regime) the entropy
    is exactly -H(q,p)/T.
    """

    def __init__(self, consts: PhysicalConstants, spec: PotentialSpec, temperature: float, log_correction=None):
        if temperature <= 0:
            raise ConfigurationError("temperature must be positive")
        self.consts = consts
        self.spec = spec
        self.temperature = temperature
        self.log_correction = log_correction

    def value(self, x: PhaseSpacePoint) -> float:
        s = -hamiltonian_value(self.consts, self.spec, x) / self.temperature
        if self.log_correction is not None:
            s += self.consts.kB * self.log_correction.value(x)
        return s

    def grad_p(self, x: PhaseSpacePoint) -> np.ndarray:
        g = -x.p / (self.consts.mass * self.temperature)
        if self.log_correction is not None:
            g = g + self.consts.kB * self.log_correction.grad_p(x)
        return g

    def laplacian_p(self, x: PhaseSpacePoint) -> float:
        lap = -x.d / (self.consts.mass * self.temperature)
        if self.log_correction is not None:
            lap += self.consts.kB * self.log_correction.laplacian_p(x)
        return lap


def dissipative_force(
    x: PhaseSpacePoint,
    params: ThermostatParams,
    consts: PhysicalConstants,
    spec: PotentialSpec,
    log_correction=None,
) -> np.ndarray:
    """u(q,p) = sigma^2/(2 |tau| kB) * grad_p S_eff.

    With the default entropy this is the drag form -sigma^2/(2 m |tau| kB T) p:
    linear in p, independent of q.
    """
    params.drag_per_step(consts)  # validates stability
    entropy = EffectiveEntropy(consts, spec, params.temperature, log_correction)
    return params.sigma2 / (2.0 * params.tau * consts.kB) * entropy.grad_p(x)


def reservoir_half_kick(p: np.ndarray, params: ThermostatParams, consts: PhysicalConstants, rng: np.random.Generator):
    a = params.drag_per_step(consts)
    return (1.0 - 0.5 * a) * p + math.sqrt(0.5 * params.sigma2) * rng.standard_normal(p.shape)


def stochastic_step(
    x: PhaseSpacePoint,
    params: ThermostatParams,
    consts: PhysicalConstants,
    spec: PotentialSpec,
    rng: np.random.Generator,
) -> PhaseSpacePoint:
    """Half reservoir kick, adiabatic Verlet step of size tau, half reservoir kick.

    The reservoir touches momentum only; position changes only through the
    adiabatic part.
    """
    p = reservoir_half_kick(x.p, params, consts, rng)
    mid = verlet_step(PhaseSpacePoint(x.q, p), spec, consts, params.tau)
    p = reservoir_half_kick(mid.p, params, consts, rng)
    return PhaseSpacePoint(mid.q, p)


@dataclass
class EnsembleStats:
    """Long-run statistics of a stochastic chain."""

    n_samples: int
    p_second_moment: float
    q_second_moment: float
    q_histogram_edges: np.ndarray
    q_histogram_mass: np.ndarray
    ks_statistic: float
    ks_n: int
    ks_variable: str  # "q" (confining harmonic) or "p"


def _gauss_cdf(xs, var):
    s = math.sqrt(2.0 * var)
    return np.array([0.5 * (1.0 + math.erf(v / s)) for v in xs])


def _ks_against_gaussian(samples: np.ndarray, var: float) -> float:
    xs = np.sort(samples)
    n = len(xs)
    F = _gauss_cdf(xs, var)
    d_plus = np.max(np.arange(1, n + 1) / n - F)
    d_minus = np.max(F - np.arange(0, n) / n)
    return float(max(d_plus, d_minus))


def _force_scalar(spec: PotentialSpec):
    kind, par = spec.kind, spec.params
    if kind == "free":
        return lambda q: 0.0
    if kind == "harmonic":
        k = par["k"]
        return lambda q: -k * q
    if kind == "quartic":
        a4 = 4.0 * par["a"]
        return lambda q: -a4 * q * q * q
    if kind == "double_well":
        a4, b2 = 4.0 * par["a"], 2.0 * par["b"]
        return lambda q: -a4 * q * q * q + b2 * q
    kappa, amp = par["wavenumber"], par["amplitude"]
    return lambda q: amp * kappa * math.sin(kappa * q)


def _chain_1d(spec, consts, params, n_steps, burn_in, stride, seed, q0, p0, collect):
    """Scalar fast path; draw-for-draw identical to repeated stochastic_step."""
    a = params.drag_per_step(consts)
    c = 1.0 - 0.5 * a
    s = math.sqrt(0.5 * params.sigma2)
    tau = params.tau
    half_tau = 0.5 * tau
    inv_m = 1.0 / consts.mass
    force = _force_scalar(spec)
    rng = np.random.default_rng(seed)
    q, p = float(q0), float(p0)
    chunk = 1 << 16
    noise = rng.standard_normal(2 * chunk)
    ni = 0
    for i in range(1, n_steps + 1):
        if ni >= noise.size:
            noise = rng.standard_normal(2 * chunk)
            ni = 0
        p = c * p + s * noise[ni]
        ni += 1
        p += half_tau * force(q)
        q += tau * p * inv_m
        p += half_tau * force(q)
        p = c * p + s * noise[ni]
        ni += 1
        if i > burn_in and (i - burn_in) % stride == 0:
            collect(i, q, p)


def sample_canonical(
    spec: PotentialSpec,
    consts: PhysicalConstants,
    params: ThermostatParams,
    n_steps: int,
    burn_in: int,
    stride: int,
    seed: int,
    x0: Optional[PhaseSpacePoint] = None,
) -> EnsembleStats:
    """Run one chain and compare its statistics against the canonical ensemble.

    The KS statistic uses a thinned subsample (one sample every KS_THIN_STEPS
    steps) so the null distribution of the test applies; it is computed on q
    against the analytic Gaussian for the harmonic potential, otherwise on p
    against the Maxwell distribution N(0, m kB T).
    """
    if burn_in >= n_steps:
        raise ConfigurationError("burn_in must be smaller than n_steps")
    if stride < 1:
        raise ConfigurationError("stride must be >= 1")
    x0 = x0 if x0 is not None else PhaseSpacePoint([0.0], [0.0])
    retained = (n_steps - burn_in) // stride
    if retained < MIN_RETAINED:
        raise InsufficientSamplesError(f"only {retained} retained samples (< {MIN_RETAINED})")

    if x0.d == 1:
        qs = np.empty(retained)
        ps = np.empty(retained)
        idx = [0]

        def collect(i, q, p):
            qs[idx[0]] = q
            ps[idx[0]] = p
            idx[0] += 1

        _chain_1d(spec, consts, params, burn_in + retained * stride, burn_in, stride, seed, x0.q[0], x0.p[0], collect)
    else:
        rng = np.random.default_rng(seed)
        x = x0.copy()
        qs = np.empty((retained, x0.d))
        ps = np.empty((retained, x0.d))
        j = 0
        for i in range(1, burn_in + retained * stride + 1):
            x = stochastic_step(x, params, consts, spec, rng)
            if i > burn_in and (i - burn_in) % stride == 0:
                qs[j] = x.q
                ps[j] = x.p
                j += 1

    p_flat = np.ravel(ps)
    q_flat = np.ravel(qs)
    counts, edges = np.histogram(q_flat, bins=64)
    mass = counts / counts.sum()

    thin = max(1, int(round(KS_THIN_STEPS / stride)))
    kBT = consts.kB * params.temperature
    if spec.kind == "harmonic":
        ks_var = "q"
        ks_samples = q_flat[::thin]
        D = _ks_against_gaussian(ks_samples, kBT / spec.params["k"])
    else:
        ks_var = "p"
        ks_samples = p_flat[::thin]
        D = _ks_against_gaussian(ks_samples, consts.mass * kBT)

    return EnsembleStats(
        n_samples=retained,
        p_second_moment=float(np.mean(p_flat**2)),
        q_second_moment=float(np.mean(q_flat**2)),
        q_histogram_edges=edges,
        q_histogram_mass=mass,
        ks_statistic=D,
        ks_n=len(ks_samples),
        ks_variable=ks_var,
    )


def stationary_p2_free(params: ThermostatParams, consts: PhysicalConstants) -> float:
    """Exact stationary <p^2> of the free chain under the half-kick composition.

    The per-step recursion p' = c^2 p + c R1 + R2 with c = 1 - a/2 and
    Var(R_i) = sigma^2/2 has stationary variance sigma^2 / (2a - a^2/2),
    i.e. m kB T / (1 - a/4).
    """
    a = params.drag_per_step(consts)
    return consts.mass * consts.kB * params.temperature / (1.0 - 0.25 * a)


@dataclass
class StationarityResidual:
    """Monte-Carlo stationarity defect of one reservoir update."""

    residual: float
    exponential_mean: float  # <exp(dS_eff/kB)> - 1
    remainder: float  # |tau| div_p u  (== sigma^2/(2 kB) lap_p S_eff)
    n_draws: int


def stationarity_expansion_check(
    spec: PotentialSpec,
    consts: PhysicalConstants,
    params: ThermostatParams,
    x: PhaseSpacePoint,
    n_draws: int,
    seed: int = 0,
    draws: Optional[np.ndarray] = None,
) -> StationarityResidual:
    """Second-order stationarity balance of the reservoir update at one point.

    Draws p'' = p - |tau| u + R (antithetic +-Z pairs), averages
    exp[(S_eff(q, p'') - S_eff(q, p))/kB], and subtracts the analytic
    compressibility remainder |tau| div_p u. With the drag closure the
    gradient terms cancel, so the residual vanishes as O(tau^2) (holding
    sigma^2/tau fixed) plus the O(n_draws^{-1/2}) sampling error. Passing
    `draws` reuses a fixed standard-normal block for common-random-number
    comparisons across parameter values.
    """
    if n_draws < 10_000:
        raise ConfigurationError("n_draws must be >= 10000")
    entropy = EffectiveEntropy(consts, spec, params.temperature)
    grad = entropy.grad_p(x)
    ubar = params.sigma2 / (2.0 * params.tau * consts.kB) * grad
    drift = -params.tau * ubar
    if draws is None:
        draws = np.random.default_rng(seed).standard_normal((n_draws // 2, x.d))
    z = draws[: n_draws // 2]
    sig = math.sqrt(params.sigma2)
    s0 = entropy.value(x)
    kB = consts.kB
    u_q = evaluate_potential(spec, x.q)
    t_inv = 1.0 / params.temperature

    def exp_mean(signed):
        pp = x.p + drift + signed * sig * z
        h = np.sum(pp * pp, axis=1) / (2.0 * consts.mass) + u_q
        return np.exp((-h * t_inv - s0) / kB)

    vals = 0.5 * (exp_mean(+1.0) + exp_mean(-1.0))
    X = float(np.mean(vals)) - 1.0
    remainder = params.sigma2 / (2.0 * kB) * entropy.laplacian_p(x)
    return StationarityResidual(
        residual=X - remainder,
        exponential_mean=X,
        remainder=remainder,
        n_draws=2 * len(z),
    )


def compressibility_remainder(params: ThermostatParams, consts: PhysicalConstants, spec: PotentialSpec, x: PhaseSpacePoint) -> float:
    """|tau| div_p u computed from the dissipative force itself (identity check)."""
    # u is linear in p with slope -sigma^2/(2 m |tau| kB T) per component
    slope = -params.sigma2 / (2.0 * consts.mass * params.tau * consts.kB * params.temperature)
    return params.tau * slope * x.d
