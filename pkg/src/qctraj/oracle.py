"""Independent ground-truth engines.

Nothing in this module shares code with the closed-form solvers it checks:
adaptive Simpson quadrature, a tridiagonal determinant by forward
elimination, a fixed-step RK4 classical integrator, and a split-step
spectral Schrodinger propagator with an hbar-analog parameter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import (
    AmplitudeDenominatorSmall,
    DomainTooSmall,
    SingularMatrix,
    ToleranceNotMet,
    Unstable,
)
from .model import PolynomialPotential, eval_gradient

# ---------------------------------------------------------------------------
# quadrature and determinants


def quad_adaptive(
    f: Callable[[float], float], a: float, b: float, tol: float = 1e-12
) -> float:
    """Adaptive Simpson integral of f over [a, b] to absolute tolerance tol."""
    if a == b:
        return 0.0
    if b < a:
        return -quad_adaptive(f, b, a, tol)

    def simpson(x0: float, x2: float, f0: float, f1: float, f2: float) -> float:
        return (x2 - x0) / 6.0 * (f0 + 4.0 * f1 + f2)

    def recurse(
        x0: float,
        x2: float,
        f0: float,
        f1: float,
        f2: float,
        whole: float,
        eps: float,
        depth: int,
    ) -> float:
        xm = 0.5 * (x0 + x2)
        xl = 0.5 * (x0 + xm)
        xr = 0.5 * (xm + x2)
        fl = f(xl)
        fr = f(xr)
        left = simpson(x0, xm, f0, fl, f1)
        right = simpson(xm, x2, f1, fr, f2)
        delta = left + right - whole
        # second test: refinement has hit the roundoff floor of the summands
        if abs(delta) <= 15.0 * eps or abs(delta) <= 1e-15 * (
            abs(left) + abs(right)
        ):
            return left + right + delta / 15.0
        if depth <= 0:
            raise ToleranceNotMet(
                f"adaptive Simpson depth exhausted on [{x0}, {x2}]"
            )
        return recurse(x0, xm, f0, fl, f1, left, 0.5 * eps, depth - 1) + recurse(
            xm, x2, f1, fr, f2, right, 0.5 * eps, depth - 1
        )

    fa, fm, fb = f(a), f(0.5 * (a + b)), f(b)
    whole = simpson(a, b, fa, fm, fb)
    return recurse(a, b, fa, fm, fb, whole, tol, 30)


def dense_prefactor(diag: Sequence[float], off: Sequence[float]) -> float:
    """Determinant of a symmetric tridiagonal matrix by forward elimination.

    diag has length n, off length n-1.  Pivot signs are tracked through the
    running product; a vanishing pivot raises SingularMatrix.
    """
    d = np.asarray(diag, dtype=float)
    e = np.asarray(off, dtype=float)
    if d.size == 0:
        return 1.0
    if e.size != d.size - 1:
        raise ValueError("off-diagonal length must be len(diag) - 1")
    det = 1.0
    pivot = d[0]
    for k in range(1, d.size):
        if pivot == 0.0:
            raise SingularMatrix(f"zero pivot at row {k - 1}")
        det *= pivot
        pivot = d[k] - e[k - 1] ** 2 / pivot
    return det * pivot


# ---------------------------------------------------------------------------
# classical oracle


def ehrenfest(
    pot: PolynomialPotential,
    x0: float,
    v0: float,
    t_grid: Sequence[float],
    dt: float = 1e-3,
) -> np.ndarray:
    """Classical trajectory m*x'' = -dV/dx (drive included) sampled on t_grid.

    Fixed-step RK4 from (x0, v0) at t = 0; each grid interval is split into
    an integer number of substeps no longer than dt.
    """
    m = pot.mass

    def accel(x: float, t: float) -> float:
        return -eval_gradient(pot, x, t) / m

    times = np.asarray(t_grid, dtype=float)
    out = np.empty_like(times)
    x, v, t = x0, v0, 0.0
    for i, t_target in enumerate(times):
        span = t_target - t
        if span < 0:
            raise ValueError("t_grid must be non-decreasing and non-negative")
        n = max(1, math.ceil(span / dt)) if span > 0 else 0
        h = span / n if n else 0.0
        for _ in range(n):
            k1x = v
            k1v = accel(x, t)
            k2x = v + 0.5 * h * k1v
            k2v = accel(x + 0.5 * h * k1x, t + 0.5 * h)
            k3x = v + 0.5 * h * k2v
            k3v = accel(x + 0.5 * h * k2x, t + 0.5 * h)
            k4x = v + h * k3v
            k4v = accel(x + h * k3x, t + h)
            x += h / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x)
            v += h / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v)
            t += h
        t = t_target
        out[i] = x
    return out


# ---------------------------------------------------------------------------
# split-step spectral Schrodinger oracle


@dataclass(frozen=True)
class SpatialGrid:
    """Uniform periodic grid on [-half_width, half_width) with 2^k points."""

    half_width: float
    points: int

    def __post_init__(self) -> None:
        if self.points & (self.points - 1) or self.points < 2:
            raise ValueError("points must be a power of two")
        if self.half_width <= 0:
            raise ValueError("half_width must be positive")

    @property
    def dx(self) -> float:
        return 2.0 * self.half_width / self.points

    @property
    def x(self) -> np.ndarray:
        return -self.half_width + self.dx * np.arange(self.points)

    @property
    def k(self) -> np.ndarray:
        return 2.0 * np.pi * np.fft.fftfreq(self.points, d=self.dx)


@dataclass
class WaveState:
    """Complex wavefunction on a spatial grid with an hbar-analog parameter."""

    grid: SpatialGrid
    psi: np.ndarray
    hbar: float
    mass: float = 1.0
    time: float = 0.0
    absorbed: float = 0.0  # cumulative |psi|^2 removed by the soft mask

    def norm_sq(self) -> float:
        return float(self.grid.dx * np.sum(np.abs(self.psi) ** 2))

    def density_average(self) -> float:
        w = np.abs(self.psi) ** 2
        return float(np.sum(self.grid.x * w) / np.sum(w))

    def amplitude_average(self) -> complex:
        """Amplitude-weighted position int(x psi)/int(psi) on the finite window.

        Raises AmplitudeDenominatorSmall when |int psi| < 1e-8 * int |psi|.
        """
        denom = np.sum(self.psi)
        scale = np.sum(np.abs(self.psi))
        if abs(denom) < 1e-8 * scale:
            raise AmplitudeDenominatorSmall(
                f"|int psi| = {abs(denom):.3e} below 1e-8 of int |psi|"
            )
        return complex(np.sum(self.grid.x * self.psi) / denom)

    def position_variance(self) -> float:
        w = np.abs(self.psi) ** 2
        w /= np.sum(w)
        mean = np.sum(self.grid.x * w)
        return float(np.sum((self.grid.x - mean) ** 2 * w))


def init_gaussian(
    x0: float,
    eta: float,
    hbar: float,
    grid: SpatialGrid,
    mass: float = 1.0,
) -> WaveState:
    """Localized packet psi(x) ~ exp(-eta (x - x0)^2 / hbar), unit L2 norm.

    The position density has variance hbar/(4 eta).  Raises DomainTooSmall
    when the packet does not decay to 1e-8 of its peak within the inner 95%
    of the grid.
    """
    if eta <= 0 or hbar <= 0:
        raise ValueError("eta and hbar must be positive")
    margin = 0.95 * grid.half_width - abs(x0)
    if margin <= 0 or math.exp(-eta * margin**2 / hbar) > 1e-8:
        raise DomainTooSmall(
            f"Gaussian at x0={x0} (eta={eta}, hbar={hbar}) leaks past 95% of the grid"
        )
    psi = np.exp(-eta * (grid.x - x0) ** 2 / hbar).astype(complex)
    psi /= math.sqrt(grid.dx * float(np.sum(np.abs(psi) ** 2)))
    return WaveState(grid=grid, psi=psi, hbar=hbar, mass=mass)


def _absorbing_mask(grid: SpatialGrid) -> np.ndarray:
    """cos^2 ramp to zero over the outer 5% of the grid on each side."""
    x = grid.x
    w = 0.05 * 2.0 * grid.half_width
    edge_lo = -grid.half_width + w
    edge_hi = grid.half_width - w
    mask = np.ones_like(x)
    lo = x < edge_lo
    hi = x > edge_hi
    mask[lo] = np.cos(0.5 * np.pi * (edge_lo - x[lo]) / w) ** 2
    mask[hi] = np.cos(0.5 * np.pi * (x[hi] - edge_hi) / w) ** 2
    return mask


def propagate(
    state: WaveState,
    pot: PolynomialPotential,
    dt: float,
    steps: int,
    absorb: bool = False,
) -> WaveState:
    """Strang-split propagation: half potential, spectral kinetic, half potential.

    Second order in dt; the drive makes V time dependent, so the potential
    phase is sampled at the interval midpoint.  With absorb=True a soft cos^2
    mask over the outer 5% of the grid removes escaping density; the removed
    norm is tracked so the stability check uses the pre-mask norm.

    Raises Unstable if the (mask-corrected) norm drifts by more than 1e-5,
    and ValueError when dt * max|V| / hbar >= 0.5, with the bound taken
    over the region the packet can plausibly reach (twice its mean-plus-
    five-sigma extent, padded); choose a smaller dt for wilder dynamics.
    """
    grid = state.grid
    x = grid.x
    hbar = state.hbar
    m = pot.mass

    v_static = (
        0.5 * m * pot.harmonic_freq**2 * x**2 - pot.linear_bias * x
    )
    for deg, c in pot.coeffs.items():
        v_static = v_static + c * x**deg

    mean = state.density_average()
    sigma = math.sqrt(max(state.position_variance(), 0.0))
    reach = 2.0 * (abs(mean) + 5.0 * sigma) + 0.5
    inside = np.abs(x) <= min(reach, grid.half_width)
    v_bound = float(
        np.max(np.abs(v_static[inside]) + abs(pot.drive_amp) * np.abs(x[inside]))
    )
    if dt * v_bound / hbar >= 0.5:
        raise ValueError(
            f"dt too large: dt*max|V|/hbar = {dt * v_bound / hbar:.3f} >= 0.5"
        )

    kinetic = np.exp(-1j * hbar * grid.k**2 * dt / (2.0 * m))
    static_half = np.exp(-1j * v_static * dt / (2.0 * hbar))
    mask = _absorbing_mask(grid) if absorb else None

    psi = state.psi.copy()
    norm0 = grid.dx * float(np.sum(np.abs(psi) ** 2))
    absorbed = state.absorbed
    t = state.time
    for _ in range(steps):
        if pot.drive_amp != 0.0:
            drive = -pot.drive_amp * math.sin(pot.drive_freq * (t + 0.5 * dt)) * x
            half = static_half * np.exp(-1j * drive * dt / (2.0 * hbar))
        else:
            half = static_half
        psi = half * np.fft.ifft(kinetic * np.fft.fft(half * psi))
        if mask is not None:
            before = grid.dx * float(np.sum(np.abs(psi) ** 2))
            psi *= mask
            absorbed += before - grid.dx * float(np.sum(np.abs(psi) ** 2))
        t += dt

    norm1 = grid.dx * float(np.sum(np.abs(psi) ** 2)) + (absorbed - state.absorbed)
    if abs(norm1 - norm0) > 1e-5 * norm0:
        raise Unstable(
            f"norm drifted from {norm0:.12f} to {norm1:.12f} over {steps} steps"
        )
    return WaveState(
        grid=grid, psi=psi, hbar=hbar, mass=m, time=t, absorbed=absorbed
    )


@dataclass
class AverageSeries:
    """Quantum position averages sampled along a propagation run."""

    times: np.ndarray
    amp_avg: np.ndarray  # complex; nan+nan*1j where flagged
    dens_avg: np.ndarray
    amp_flagged: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        if self.amp_flagged is None:
            self.amp_flagged = np.zeros(len(self.times), dtype=bool)


def quantum_averages(states: Sequence[WaveState]) -> AverageSeries:
    """Amplitude and density averages for a sequence of wave states.

    Ill-conditioned amplitude samples (tiny denominator) are flagged and set
    to nan instead of raising.
    """
    n = len(states)
    times = np.array([s.time for s in states])
    amp = np.empty(n, dtype=complex)
    dens = np.empty(n)
    flagged = np.zeros(n, dtype=bool)
    for i, s in enumerate(states):
        dens[i] = s.density_average()
        try:
            amp[i] = s.amplitude_average()
        except AmplitudeDenominatorSmall:
            amp[i] = complex(float("nan"), float("nan"))
            flagged[i] = True
    return AverageSeries(times=times, amp_avg=amp, dens_avg=dens, amp_flagged=flagged)


def propagate_series(
    state: WaveState,
    pot: PolynomialPotential,
    dt: float,
    t_grid: Sequence[float],
    absorb: bool = False,
) -> AverageSeries:
    """Propagate from state.time through t_grid, collecting averages.

    Each interval is split into an integer number of steps no longer than dt,
    so the samples land exactly on the grid times.
    """
    states = []
    current = state
    for t_target in np.asarray(t_grid, dtype=float):
        span = t_target - current.time
        if span < -1e-12:
            raise ValueError("t_grid must be non-decreasing from state.time")
        if span > 1e-12:
            n = max(1, math.ceil(span / dt))
            current = propagate(current, pot, span / n, n, absorb=absorb)
        states.append(current)
    return quantum_averages(states)
