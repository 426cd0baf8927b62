"""Grid-based wave-function propagation and expectation-value dynamics.

Strang (second-order) splitting with kinetic half-steps applied in the
momentum representation through the FFT. Position expectations use the
box-centered coordinates; momentum expectations and variances are computed in
the momentum representation, which is exact on the lattice.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .classical import integrate_trajectory
from .core import (
    PhaseSpacePoint,
    PhysicalConstants,
    PotentialSpec,
    SpatialGrid,
    assert_grid_compatible,
    potential_gradient_values,
    potential_values,
)
from .errors import ConfigurationError, StabilityError

STABILITY_LIMIT = 0.5  # |tau| * max|U| <= STABILITY_LIMIT * hbar


@dataclass
class WaveFunction:
    """Complex amplitudes on a periodic grid, unit-normalized."""

    grid: SpatialGrid
    amplitudes: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.shape != (self.grid.n_points,):
            raise ConfigurationError("amplitude vector length must equal grid.n_points")

    def norm(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2) * self.grid.spacing)

    def copy(self) -> "WaveFunction":
        return WaveFunction(self.grid, self.amplitudes.copy())


def init_gaussian_packet(grid: SpatialGrid, q0: float, p0: float, width: float) -> WaveFunction:
    """Normalized Gaussian envelope of position std `width` with plane-wave factor.

    width must satisfy 4*spacing <= width <= box_length/8 so the packet is both
    resolved and negligible at the periodic boundary.
    """
    if width < 4.0 * grid.spacing or width > grid.box_length / 8.0:
        raise ConfigurationError(
            f"width {width} outside [4*spacing, box_length/8] = "
            f"[{4*grid.spacing}, {grid.box_length/8}]"
        )
    if not (-grid.box_length / 2 <= q0 < grid.box_length / 2):
        raise ConfigurationError("q0 must lie inside the box")
    x = grid.positions()
    psi = np.exp(-((x - q0) ** 2) / (4.0 * width * width) + 1j * p0 * x / grid.hbar)
    psi /= np.sqrt(np.sum(np.abs(psi) ** 2) * grid.spacing)
    return WaveFunction(grid, psi)


def init_momentum_eigenstate(grid: SpatialGrid, n: int) -> WaveFunction:
    """Plane wave with momentum n * momentum_spacing, normalized over the box."""
    M = grid.n_points
    if not (-M // 2 <= n < M // 2):
        raise ConfigurationError(f"mode index {n} outside [-{M//2}, {M//2})")
    x = grid.positions()
    p = n * grid.momentum_spacing
    psi = np.exp(1j * p * x / grid.hbar) / np.sqrt(grid.box_length)
    return WaveFunction(grid, psi)


def _kinetic_phase(grid: SpatialGrid, consts: PhysicalConstants, dt: float) -> np.ndarray:
    p = grid.momenta()
    return np.exp(-1j * p * p / (2.0 * consts.mass) * dt / grid.hbar)


def _check_stability(grid: SpatialGrid, spec: PotentialSpec, tau: float):
    umax = float(np.max(np.abs(potential_values(spec, grid.positions()))))
    product = abs(tau) * umax
    if product > STABILITY_LIMIT * grid.hbar:
        raise StabilityError(product, STABILITY_LIMIT * grid.hbar)


def split_step_propagate(
    psi: WaveFunction,
    spec: PotentialSpec,
    consts: PhysicalConstants,
    tau: float,
    n_steps: int = 1,
) -> WaveFunction:
    """Strang-split evolution: kinetic half-step, potential kick, kinetic half-step.

    Negative tau propagates backward; the scheme is symmetric, so propagating
    by -tau applies the exact adjoint of the +tau propagator.
    """
    if tau == 0.0:
        raise ConfigurationError("tau must be nonzero")
    if n_steps < 1:
        raise ConfigurationError("n_steps must be >= 1")
    assert_grid_compatible(spec, psi.grid)
    _check_stability(psi.grid, spec, tau)
    grid = psi.grid
    kin_half = _kinetic_phase(grid, consts, 0.5 * tau)
    kin_full = kin_half * kin_half
    pot_full = np.exp(-1j * potential_values(spec, grid.positions()) * tau / grid.hbar)
    amp = np.fft.ifft(kin_half * np.fft.fft(psi.amplitudes))
    for step in range(n_steps):
        amp = pot_full * amp
        if step < n_steps - 1:
            amp = np.fft.ifft(kin_full * np.fft.fft(amp))
    amp = np.fft.ifft(kin_half * np.fft.fft(amp))
    return WaveFunction(grid, amp)


def expectation_position(psi: WaveFunction) -> float:
    rho = np.abs(psi.amplitudes) ** 2 * psi.grid.spacing
    return float(np.sum(psi.grid.positions() * rho))


def position_variance(psi: WaveFunction) -> float:
    rho = np.abs(psi.amplitudes) ** 2 * psi.grid.spacing
    x = psi.grid.positions()
    mean = float(np.sum(x * rho))
    return float(np.sum((x - mean) ** 2 * rho))


def _momentum_weights(psi: WaveFunction) -> np.ndarray:
    ft = np.fft.fft(psi.amplitudes)
    w = np.abs(ft) ** 2
    return w / w.sum()


def expectation_momentum(psi: WaveFunction) -> float:
    return float(np.sum(psi.grid.momenta() * _momentum_weights(psi)))


def momentum_variance(psi: WaveFunction) -> float:
    p = psi.grid.momenta()
    w = _momentum_weights(psi)
    mean = float(np.sum(p * w))
    return float(np.sum((p - mean) ** 2 * w))


def expectation_kinetic(psi: WaveFunction, consts: PhysicalConstants) -> float:
    p = psi.grid.momenta()
    return float(np.sum(p * p / (2.0 * consts.mass) * _momentum_weights(psi)))


def expectation_potential(psi: WaveFunction, spec: PotentialSpec) -> float:
    rho = np.abs(psi.amplitudes) ** 2 * psi.grid.spacing
    return float(np.sum(potential_values(spec, psi.grid.positions()) * rho))


def expectation_energy(psi: WaveFunction, spec: PotentialSpec, consts: PhysicalConstants) -> float:
    return expectation_kinetic(psi, consts) + expectation_potential(psi, spec)


def mean_force(psi: WaveFunction, spec: PotentialSpec) -> float:
    """<-grad U> over the current density."""
    rho = np.abs(psi.amplitudes) ** 2 * psi.grid.spacing
    return float(np.sum(-potential_gradient_values(spec, psi.grid.positions()) * rho))


def fidelity(a: WaveFunction, b: WaveFunction) -> float:
    """|<a|b>| with the grid measure."""
    return float(abs(np.vdot(a.amplitudes, b.amplitudes) * a.grid.spacing))


@dataclass
class ExpectationRecord:
    """Expectation values of one propagation snapshot."""

    time: float
    q_mean: float
    p_mean: float
    energy_mean: float
    q_var: float
    p_var: float
    force_mean: float  # <-grad U>, accumulated during propagation


def record_expectations(psi: WaveFunction, spec: PotentialSpec, consts: PhysicalConstants, time: float) -> ExpectationRecord:
    return ExpectationRecord(
        time=time,
        q_mean=expectation_position(psi),
        p_mean=expectation_momentum(psi),
        energy_mean=expectation_energy(psi, spec, consts),
        q_var=position_variance(psi),
        p_var=momentum_variance(psi),
        force_mean=mean_force(psi, spec),
    )


def propagate_with_records(
    psi: WaveFunction,
    spec: PotentialSpec,
    consts: PhysicalConstants,
    tau: float,
    n_steps: int,
    record_stride: int,
):
    """Propagate n_steps and record expectations every record_stride steps.

    Records land on full-step boundaries (between the kinetic half-steps of
    adjacent blocks), where the mean force is sampled. Returns
    (final wave function, list of ExpectationRecord).
    """
    if n_steps % record_stride != 0:
        raise ConfigurationError("n_steps must be a multiple of record_stride")
    records = [record_expectations(psi, spec, consts, 0.0)]
    out = psi
    for b in range(n_steps // record_stride):
        out = split_step_propagate(out, spec, consts, tau, record_stride)
        records.append(record_expectations(out, spec, consts, (b + 1) * record_stride * tau))
    return out, records


def ehrenfest_residuals(records, spec: PotentialSpec, consts: PhysicalConstants):
    """Centered-difference defects of the expectation-value equations of motion.

    r_q(t) = d<q>/dt - <p>/m and r_p(t) = d<p>/dt - <-grad U>, evaluated at
    every interior record. The records must be uniformly spaced in time.
    """
    if len(records) < 3:
        raise ConfigurationError("need at least 3 records")
    t = np.array([r.time for r in records])
    dt = np.diff(t)
    if np.any(np.abs(dt - dt[0]) > 1e-9 * abs(dt[0])):
        raise ConfigurationError("records must be uniformly spaced in time")
    h = dt[0]
    q = np.array([r.q_mean for r in records])
    p = np.array([r.p_mean for r in records])
    f = np.array([r.force_mean for r in records])
    r_q = (q[2:] - q[:-2]) / (2.0 * h) - p[1:-1] / consts.mass
    r_p = (p[2:] - p[:-2]) / (2.0 * h) - f[1:-1]
    return t[1:-1], r_q, r_p


@dataclass
class SuperpositionReport:
    """Expectation trajectory of a momentum-state superposition vs the
    candidate classical branch trajectories."""

    times: np.ndarray
    q_mean: np.ndarray
    p_mean: np.ndarray
    branch_q: list  # one (n_records,) array per branch
    branch_p: list
    momentum_deviations: np.ndarray  # max_t |<p> - p_branch(t)| per branch
    min_max_deviation: float
    threshold: float  # 5 momentum-lattice spacings
    non_classical: bool


def superposition_demo(
    grid: SpatialGrid,
    spec: PotentialSpec,
    consts: PhysicalConstants,
    n1: int,
    n2: Optional[int],
    horizon: float,
    tau: float,
    record_stride: int = 10,
) -> SuperpositionReport:
    """Evolve (zeta_n1 + zeta_n2)/sqrt(2) and compare against both classical
    branches started from the measured (<q>0, p_i).

    The NON-CLASSICAL flag is raised when the expectation trajectory deviates
    from *every* branch by more than five momentum-lattice spacings (the
    momentum lattice is the collapse basis; a plane wave carries a sharp
    momentum but no meaningful position). Passing n2=None runs a single
    eigenstate against its single branch; n1 == n2 is rejected.
    """
    if n2 is not None and n1 == n2:
        raise ConfigurationError("superposition requires two distinct momentum modes")
    psi1 = init_momentum_eigenstate(grid, n1)
    if n2 is None:
        psi = psi1
        branch_modes = [n1]
    else:
        psi2 = init_momentum_eigenstate(grid, n2)
        amp = (psi1.amplitudes + psi2.amplitudes) / np.sqrt(2.0)
        amp /= np.sqrt(np.sum(np.abs(amp) ** 2) * grid.spacing)
        psi = WaveFunction(grid, amp)
        branch_modes = [n1, n2]
    n_steps = max(record_stride, int(round(horizon / tau)))
    n_steps -= n_steps % record_stride
    _, records = propagate_with_records(psi, spec, consts, tau, n_steps, record_stride)
    times = np.array([r.time for r in records])
    q_mean = np.array([r.q_mean for r in records])
    p_mean = np.array([r.p_mean for r in records])

    q_bar = q_mean[0]
    branch_q, branch_p, devs = [], [], []
    for mode in branch_modes:
        x0 = PhaseSpacePoint([q_bar], [mode * grid.momentum_spacing])
        traj = integrate_trajectory(x0, spec, consts, tau, n_steps, record_stride)
        branch_q.append(traj.q[:, 0])
        branch_p.append(traj.p[:, 0])
        devs.append(float(np.max(np.abs(p_mean - traj.p[:, 0]))))
    devs = np.array(devs)
    threshold = 5.0 * grid.momentum_spacing
    min_dev = float(np.min(devs))
    return SuperpositionReport(
        times=times,
        q_mean=q_mean,
        p_mean=p_mean,
        branch_q=branch_q,
        branch_p=branch_p,
        momentum_deviations=devs,
        min_max_deviation=min_dev,
        threshold=threshold,
        non_classical=bool(min_dev > threshold),
    )
