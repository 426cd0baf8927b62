"""Physical constants, model potentials, phase-space state, and the shared grid.

Everything here is pure and deterministic; values are freely shareable.
Natural units hbar = m = kB = 1 are the defaults and every constant is
overridable. Multi-dimensional configuration vectors are treated separably:
U(q) = sum_i u(q_i) with u the one-dimensional form of the potential.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError

POTENTIAL_KINDS = ("free", "harmonic", "quartic", "double_well", "cosine")


@dataclass(frozen=True)
class PhysicalConstants:
    """Planck constant (over 2*pi), particle mass, and Boltzmann constant."""

    hbar: float = 1.0
    mass: float = 1.0
    kB: float = 1.0

    def __post_init__(self):
        for name in ("hbar", "mass", "kB"):
            if not np.isfinite(getattr(self, name)) or getattr(self, name) <= 0:
                raise ConfigurationError(f"{name} must be strictly positive")


@dataclass
class PhaseSpacePoint:
    """Classical state {q, p} of a d-degree-of-freedom system."""

    q: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        self.q = np.atleast_1d(np.asarray(self.q, dtype=float))
        self.p = np.atleast_1d(np.asarray(self.p, dtype=float))
        if self.q.shape != self.p.shape or self.q.ndim != 1 or self.q.size < 1:
            raise ConfigurationError("q and p must be 1-d vectors of equal length >= 1")
        if not (np.all(np.isfinite(self.q)) and np.all(np.isfinite(self.p))):
            raise ConfigurationError("phase-space components must be finite")

    @property
    def d(self) -> int:
        return self.q.size

    def copy(self) -> "PhaseSpacePoint":
        return PhaseSpacePoint(self.q.copy(), self.p.copy())


@dataclass(frozen=True)
class PotentialSpec:
    """One of the fixed potential family: free, harmonic(k), quartic(a),
    double_well(a, b), cosine(amplitude, wavenumber)."""

    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in POTENTIAL_KINDS:
            raise ConfigurationError(f"unknown potential kind {self.kind!r}")
        required = {
            "free": (),
            "harmonic": ("k",),
            "quartic": ("a",),
            "double_well": ("a", "b"),
            "cosine": ("amplitude", "wavenumber"),
        }[self.kind]
        missing = [name for name in required if name not in self.params]
        if missing:
            raise ConfigurationError(f"{self.kind} potential missing parameters {missing}")
        for name in required:
            value = float(self.params[name])
            if not np.isfinite(value):
                raise ConfigurationError(f"{self.kind} parameter {name} must be finite")
        object.__setattr__(self, "params", {k: float(v) for k, v in self.params.items()})

    @classmethod
    def free(cls):
        return cls("free")

    @classmethod
    def harmonic(cls, k=1.0):
        return cls("harmonic", {"k": k})

    @classmethod
    def quartic(cls, a=1.0):
        return cls("quartic", {"a": a})

    @classmethod
    def double_well(cls, a=1.0, b=1.0):
        return cls("double_well", {"a": a, "b": b})

    @classmethod
    def cosine(cls, amplitude=1.0, wavenumber=1.0):
        return cls("cosine", {"amplitude": amplitude, "wavenumber": wavenumber})


def potential_values(spec: PotentialSpec, q):
    """Elementwise u(q) for an array of 1-d sample positions (grid usage)."""
    q = np.asarray(q, dtype=float)
    if spec.kind == "free":
        return np.zeros_like(q)
    if spec.kind == "harmonic":
        return 0.5 * spec.params["k"] * q * q
    if spec.kind == "quartic":
        return spec.params["a"] * q**4
    if spec.kind == "double_well":
        return spec.params["a"] * q**4 - spec.params["b"] * q * q
    if spec.kind == "cosine":
        return spec.params["amplitude"] * np.cos(spec.params["wavenumber"] * q)
    raise ConfigurationError(spec.kind)


def potential_gradient_values(spec: PotentialSpec, q):
    """Elementwise u'(q) for an array of 1-d sample positions."""
    q = np.asarray(q, dtype=float)
    if spec.kind == "free":
        return np.zeros_like(q)
    if spec.kind == "harmonic":
        return spec.params["k"] * q
    if spec.kind == "quartic":
        return 4.0 * spec.params["a"] * q**3
    if spec.kind == "double_well":
        return 4.0 * spec.params["a"] * q**3 - 2.0 * spec.params["b"] * q
    if spec.kind == "cosine":
        kappa = spec.params["wavenumber"]
        return -spec.params["amplitude"] * kappa * np.sin(kappa * q)
    raise ConfigurationError(spec.kind)


def evaluate_potential(spec: PotentialSpec, q) -> float:
    """U(q) for a d-dimensional configuration point (separable sum)."""
    return float(np.sum(potential_values(spec, q)))


def grad_potential(spec: PotentialSpec, q) -> np.ndarray:
    """grad U(q), the force-conjugate vector, for a d-dimensional point."""
    return np.atleast_1d(potential_gradient_values(spec, q))


def hamiltonian_value(consts: PhysicalConstants, spec: PotentialSpec, x: PhaseSpacePoint) -> float:
    """H(q, p) = p.p/2m + U(q)."""
    return float(np.dot(x.p, x.p) / (2.0 * consts.mass) + evaluate_potential(spec, x.q))


def hamiltonian_gradients(consts: PhysicalConstants, spec: PotentialSpec, x: PhaseSpacePoint):
    """(grad_q H, grad_p H) = (grad U(q), p/m)."""
    return grad_potential(spec, x.q), x.p / consts.mass


@dataclass(frozen=True)
class SpatialGrid:
    """Periodic spatial grid with the conjugate momentum lattice.

    Positions are box-centered, q_j = -L/2 + j*dx for j = 0..M-1. Momenta are
    quantized as p = n * momentum_spacing with momentum_spacing = 2*pi*hbar/L
    and integer n in [-M/2, M/2).
    """

    box_length: float
    n_points: int
    hbar: float = 1.0

    def __post_init__(self):
        M = self.n_points
        if M < 8 or (M & (M - 1)) != 0:
            raise ConfigurationError("n_points must be a power of two >= 8")
        if not np.isfinite(self.box_length) or self.box_length <= 0:
            raise ConfigurationError("box_length must be positive")

    @property
    def spacing(self) -> float:
        return self.box_length / self.n_points

    @property
    def momentum_spacing(self) -> float:
        return 2.0 * np.pi * self.hbar / self.box_length

    def positions(self) -> np.ndarray:
        return -0.5 * self.box_length + self.spacing * np.arange(self.n_points)

    def momentum_modes(self) -> np.ndarray:
        """Integer mode numbers in FFT order: [0, 1, .., M/2-1, -M/2, .., -1]."""
        return np.fft.fftfreq(self.n_points, d=1.0 / self.n_points).astype(int)

    def momenta(self) -> np.ndarray:
        """Momentum lattice in FFT order, p = n * momentum_spacing."""
        return self.momentum_modes() * self.momentum_spacing


def assert_grid_compatible(spec: PotentialSpec, grid: SpatialGrid):
    """Reject cosine potentials that are not periodic over the box."""
    if spec.kind == "cosine":
        cycles = spec.params["wavenumber"] * grid.box_length / (2.0 * np.pi)
        if abs(cycles - round(cycles)) > 1e-9 or round(cycles) == 0:
            raise ConfigurationError(
                "cosine wavenumber must be a nonzero integer multiple of 2*pi/box_length"
            )
