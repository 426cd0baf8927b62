"""Symplectic integration of Hamilton's equations and diagnostics.

Velocity Verlet (kick-drift-kick) is the canonical scheme; explicit Euler is
kept only as the contrast case for the energy-drift comparison.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import PhaseSpacePoint, PhysicalConstants, PotentialSpec, grad_potential, hamiltonian_value


@dataclass
class Trajectory:
    times: np.ndarray
    q: np.ndarray  # shape (n_records, d)
    p: np.ndarray  # shape (n_records, d)
    energies: np.ndarray

    def __post_init__(self):
        n = len(self.times)
        if not (len(self.q) == len(self.p) == len(self.energies) == n):
            raise ValueError("trajectory arrays must have equal length")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")

    def state(self, i: int) -> PhaseSpacePoint:
        return PhaseSpacePoint(self.q[i], self.p[i])


def verlet_step(x: PhaseSpacePoint, spec: PotentialSpec, consts: PhysicalConstants, tau: float) -> PhaseSpacePoint:
    """One velocity-Verlet update: half-kick, drift, half-kick."""
    if tau == 0.0:
        raise ValueError("tau must be nonzero")
    p = x.p - 0.5 * tau * grad_potential(spec, x.q)
    q = x.q + tau * p / consts.mass
    p = p - 0.5 * tau * grad_potential(spec, q)
    return PhaseSpacePoint(q, p)


def euler_step(x: PhaseSpacePoint, spec: PotentialSpec, consts: PhysicalConstants, tau: float) -> PhaseSpacePoint:
    """Explicit Euler update (non-symplectic, diagnostic only)."""
    q = x.q + tau * x.p / consts.mass
    p = x.p - tau * grad_potential(spec, x.q)
    return PhaseSpacePoint(q, p)


def integrate_trajectory(
    x0: PhaseSpacePoint,
    spec: PotentialSpec,
    consts: PhysicalConstants,
    tau: float,
    n_steps: int,
    recorder_stride: int = 1,
) -> Trajectory:
    """Repeated verlet_step with energies recorded every recorder_stride steps."""
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    if recorder_stride < 1:
        raise ValueError("recorder_stride must be >= 1")
    x = x0.copy()
    times = [0.0]
    qs = [x.q.copy()]
    ps = [x.p.copy()]
    es = [hamiltonian_value(consts, spec, x)]
    for i in range(1, n_steps + 1):
        x = verlet_step(x, spec, consts, tau)
        if i % recorder_stride == 0 or i == n_steps:
            times.append(i * tau)
            qs.append(x.q.copy())
            ps.append(x.p.copy())
            es.append(hamiltonian_value(consts, spec, x))
    return Trajectory(np.array(times), np.array(qs), np.array(ps), np.array(es))


@dataclass
class EnergyDriftReport:
    """Relative energy drift of Euler vs Verlet over the same run."""

    drift_euler: float
    drift_verlet: float
    euler_monotone: bool

    @property
    def ratio(self) -> float:
        if self.drift_euler < 1e-14 and self.drift_verlet < 1e-14:
            return 1.0  # both exact (free particle)
        return self.drift_euler / max(self.drift_verlet, 1e-300)


def euler_comparison(
    x0: PhaseSpacePoint,
    spec: PotentialSpec,
    consts: PhysicalConstants,
    tau: float,
    n_steps: int,
) -> EnergyDriftReport:
    """Integrate with Euler and Verlet; report max relative |E - E0| of each."""
    e0 = hamiltonian_value(consts, spec, x0)
    scale = max(abs(e0), 1e-300)
    xe = x0.copy()
    xv = x0.copy()
    drift_e = 0.0
    drift_v = 0.0
    monotone = True
    prev_e = e0
    for _ in range(n_steps):
        xe = euler_step(xe, spec, consts, tau)
        xv = verlet_step(xv, spec, consts, tau)
        ee = hamiltonian_value(consts, spec, xe)
        ev = hamiltonian_value(consts, spec, xv)
        if ee < prev_e - 1e-12 * scale:
            monotone = False
        prev_e = ee
        drift_e = max(drift_e, abs(ee - e0) / scale)
        drift_v = max(drift_v, abs(ev - e0) / scale)
    return EnergyDriftReport(drift_e, drift_v, monotone)


def step_jacobian(x: PhaseSpacePoint, spec: PotentialSpec, consts: PhysicalConstants, tau: float, h: float = 1e-3):
    """Central finite-difference Jacobian of the one-step Verlet map."""
    d = x.d
    J = np.zeros((2 * d, 2 * d))
    base = np.concatenate([x.q, x.p])
    for j in range(2 * d):
        plus = base.copy()
        minus = base.copy()
        plus[j] += h
        minus[j] -= h
        xp = verlet_step(PhaseSpacePoint(plus[:d], plus[d:]), spec, consts, tau)
        xm = verlet_step(PhaseSpacePoint(minus[:d], minus[d:]), spec, consts, tau)
        J[:, j] = (np.concatenate([xp.q, xp.p]) - np.concatenate([xm.q, xm.p])) / (2 * h)
    return J
