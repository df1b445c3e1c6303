"""Driven polynomial potentials and their local quadratic expansions.

The static potential is

    V(x) = (m*omega^2/2) x^2 + sum_k c_k x^k - b x,       3 <= k <= 8,

and the drive enters the full potential as -A sin(Omega t) x.  Expanding V
around a shift point lambda to second order produces a driven harmonic
model with effective frequency squared

    omega_eff_sq(lambda) = omega^2 + V_anh''(lambda)/m

and inhomogeneity g(lambda, t) = -d(lambda) + A sin(Omega t), where
d(lambda) is the static gradient at lambda.  Everything here is exact for
polynomials: no truncation is involved, the discarded terms are cubic and
higher in the displacement.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

MAX_DEGREE = 8


class Branch(enum.Enum):
    """Sign class of the effective frequency squared."""

    OSCILLATORY = "oscillatory"
    HYPERBOLIC = "hyperbolic"
    DEGENERATE = "degenerate"


@dataclass(frozen=True)
class PolynomialPotential:
    """Static polynomial potential plus a sinusoidal linear drive.

    Attributes:
        mass: particle mass m > 0.
        harmonic_freq: harmonic frequency omega (the quadratic term is
            m*omega^2/2 * x^2).
        coeffs: anharmonic coefficients, degree k (3..8) -> c_k.
        linear_bias: b, entering the potential as -b*x.
        drive_amp: A, drive entering as -A sin(Omega t) * x.
        drive_freq: Omega.
    """

    mass: float
    harmonic_freq: float
    coeffs: Mapping[int, float] = field(default_factory=dict)
    linear_bias: float = 0.0
    drive_amp: float = 0.0
    drive_freq: float = 0.0

    def __post_init__(self) -> None:
        if not self.mass > 0.0:
            raise ValueError(f"mass must be positive, got {self.mass}")
        for k in self.coeffs:
            if not isinstance(k, int) or k < 3 or k > MAX_DEGREE:
                raise ValueError(
                    f"anharmonic degree {k} outside supported range 3..{MAX_DEGREE}"
                )
        object.__setattr__(self, "coeffs", dict(self.coeffs))


@dataclass(frozen=True)
class LocalQuadraticModel:
    """Quadratic expansion of a driven potential at a shift point.

    The displacement u = x - shift obeys the forced oscillator equation
    m*u'' + m*omega_eff_sq*u = g(t) with g(t) = -bias + drive_amp*sin(drive_freq*t).
    """

    shift: float
    omega_eff_sq: float
    bias: float
    drive_amp: float = 0.0
    drive_freq: float = 0.0
    branch: Branch = Branch.OSCILLATORY

    @classmethod
    def of(
        cls,
        shift: float,
        omega_eff_sq: float,
        bias: float,
        drive_amp: float = 0.0,
        drive_freq: float = 0.0,
        branch_tol: float | None = None,
    ) -> "LocalQuadraticModel":
        """Build a model, classifying the branch from omega_eff_sq."""
        if branch_tol is None:
            branch_tol = 1e-12 * max(1.0, abs(omega_eff_sq))
        return cls(
            shift=shift,
            omega_eff_sq=omega_eff_sq,
            bias=bias,
            drive_amp=drive_amp,
            drive_freq=drive_freq,
            branch=classify_branch(omega_eff_sq, branch_tol),
        )

    def g(self, t: float) -> float:
        """Inhomogeneity g(t) = -bias + drive_amp * sin(drive_freq * t)."""
        return -self.bias + self.drive_amp * math.sin(self.drive_freq * t)

    @property
    def freq_scale(self) -> float:
        """sqrt(|omega_eff_sq|): omega_eff on the oscillatory branch, the
        hyperbolic rate kappa on the hyperbolic branch."""
        return math.sqrt(abs(self.omega_eff_sq))


def classify_branch(omega_eff_sq: float, tol: float) -> Branch:
    if abs(omega_eff_sq) <= tol:
        return Branch.DEGENERATE
    return Branch.OSCILLATORY if omega_eff_sq > 0.0 else Branch.HYPERBOLIC


def eval_potential(pot: PolynomialPotential, x: float, t: float = 0.0) -> float:
    """Full potential V(x, t), drive included."""
    v = 0.5 * pot.mass * pot.harmonic_freq**2 * x * x - pot.linear_bias * x
    for k, c in pot.coeffs.items():
        v += c * x**k
    if pot.drive_amp != 0.0:
        v -= pot.drive_amp * math.sin(pot.drive_freq * t) * x
    return v


def eval_gradient(pot: PolynomialPotential, x: float, t: float = 0.0) -> float:
    """dV/dx at (x, t), drive included."""
    return static_gradient(pot, x) - pot.drive_amp * math.sin(pot.drive_freq * t)


def eval_hessian(pot: PolynomialPotential, x: float) -> float:
    """d2V/dx2 at x.  The drive is linear in x, so this is static."""
    h = pot.mass * pot.harmonic_freq**2
    for k, c in pot.coeffs.items():
        h += k * (k - 1) * c * x ** (k - 2)
    return h


def static_gradient(pot: PolynomialPotential, x: float) -> float:
    """Gradient of the static part: d(x) = m*omega^2*x + sum k c_k x^(k-1) - b."""
    d = pot.mass * pot.harmonic_freq**2 * x - pot.linear_bias
    for k, c in pot.coeffs.items():
        d += k * c * x ** (k - 1)
    return d


def local_expand(pot: PolynomialPotential, lam: float) -> LocalQuadraticModel:
    """Quadratic expansion of the driven potential at the shift point lam.

    Returns the forced-oscillator model with
    omega_eff_sq = eval_hessian(pot, lam)/m and bias = static_gradient(pot, lam).
    Total function: hyperbolic and degenerate branches are represented, not
    rejected; downstream closed forms continue analytically.
    """
    omega_eff_sq = eval_hessian(pot, lam) / pot.mass
    branch_tol = 1e-12 * max(1.0, pot.harmonic_freq**2)
    return LocalQuadraticModel(
        shift=lam,
        omega_eff_sq=omega_eff_sq,
        bias=static_gradient(pot, lam),
        drive_amp=pot.drive_amp,
        drive_freq=pot.drive_freq,
        branch=classify_branch(omega_eff_sq, branch_tol),
    )


@dataclass(frozen=True)
class VectorPotentialModel:
    """n-dimensional potential given through its evaluators.

    gradient_fn and hessian_fn are evaluated at a shift point and a time;
    the Hessian must be symmetric.  For the 1-d polynomial case use
    vector_model_from_potential.
    """

    dim: int
    value_fn: Callable[[np.ndarray, float], float]
    gradient_fn: Callable[[np.ndarray, float], np.ndarray]
    hessian_fn: Callable[[np.ndarray, float], np.ndarray]
    mass: float = 1.0

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise ValueError("dim must be >= 1")


def vector_model_from_potential(pot: PolynomialPotential) -> VectorPotentialModel:
    """Wrap a 1-d polynomial potential as a VectorPotentialModel."""

    def value(x: np.ndarray, t: float) -> float:
        return eval_potential(pot, float(x[0]), t)

    def gradient(x: np.ndarray, t: float) -> np.ndarray:
        return np.array([eval_gradient(pot, float(x[0]), t)])

    def hessian(x: np.ndarray, t: float) -> np.ndarray:
        return np.array([[eval_hessian(pot, float(x[0]))]])

    return VectorPotentialModel(
        dim=1, value_fn=value, gradient_fn=gradient, hessian_fn=hessian, mass=pot.mass
    )
