"""Master-equation residuals, root finding, and trajectory continuation.

For a potential expanded at shift lambda the two averaging variants give
transcendental equations in lambda whose root lambda*(T) is the
quasiclassical trajectory at time T:

    amplitude:  lambda + I_s(lambda, T) / (m w(lambda)) = 0
    density:    I_r(lambda, T) / (m w(lambda)) - (lambda - x0) cos(w T) = 0

with I_s, I_r the response integrals from the oscillator module and
w(lambda) the effective frequency.  The density form generalizes the
centered derivation to initial center x0 by the requirement that its
harmonic limit reproduce the classical trajectory started at rest from x0;
for x0 = 0 it is the centered equation unchanged.  A third variant defers
to the general boundary-value pipeline in the framework module.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .errors import (
    ConjugatePoint,
    DegenerateFrequency,
    NoConvergence,
    Resonance,
    SingularHorizon,
)
from .model import (
    Branch,
    LocalQuadraticModel,
    PolynomialPotential,
    local_expand,
    vector_model_from_potential,
)
from .oscillator import response_retarded, response_sin

# below this |cos(w T)| the critical-point reduction is unreliable and the
# sample is flagged instead of solved
SINGULAR_COS_THRESHOLD = 1e-3


class Variant(enum.Enum):
    AMPLITUDE = "amplitude"
    DENSITY = "density"
    GENERAL_BVP = "general_bvp"


class SampleStatus(enum.Enum):
    OK = "ok"
    NEAR_SINGULAR = "near_singular"
    RESONANT = "resonant"
    NO_ROOT = "no_root"
    MULTI_ROOT = "multi_root"


@dataclass(frozen=True)
class SolverSettings:
    """Bracket scan and bisection controls for the lambda root search.

    The scan expands geometrically around the seed in doubling rings, from
    bracket_half_width / 2^scan_levels out to bracket_half_width, with
    scan_subdivisions probe points per ring side.  Expansion stops one ring
    after the first sign change, so distant roots are only visited when no
    nearby one exists.
    """

    bracket_half_width: float = 64.0
    tolerance: float = 1e-10
    max_iterations: int = 200
    scan_levels: int = 14
    scan_subdivisions: int = 8

    def __post_init__(self) -> None:
        if self.bracket_half_width <= 0 or self.tolerance <= 0:
            raise ValueError("bracket_half_width and tolerance must be positive")


@dataclass(frozen=True)
class MasterResidualSpec:
    """Which master-equation variant to solve, for which potential."""

    variant: Variant
    pot: PolynomialPotential
    x0: float = 0.0
    solver: SolverSettings = field(default_factory=SolverSettings)

    def __post_init__(self) -> None:
        if self.variant is Variant.AMPLITUDE and self.x0 != 0.0:
            raise ValueError("the amplitude variant is derived for x0 = 0 only")


@dataclass(frozen=True)
class TrajectorySample:
    T: float
    lam: float
    omega_eff: float  # signed: sqrt(w2) oscillatory, -sqrt(-w2) hyperbolic
    residual: float
    status: SampleStatus


@dataclass(frozen=True)
class Trajectory:
    samples: tuple[TrajectorySample, ...]

    def times(self) -> list[float]:
        return [s.T for s in self.samples]

    def lambdas(self) -> list[float]:
        return [s.lam for s in self.samples]

    def ok_fraction(self) -> float:
        if not self.samples:
            return 0.0
        n_ok = sum(1 for s in self.samples if s.status is SampleStatus.OK)
        return n_ok / len(self.samples)

    def status_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for s in self.samples:
            counts[s.status.value] = counts.get(s.status.value, 0) + 1
        return counts


@dataclass(frozen=True)
class RootResult:
    lam: float
    residual: float
    status: SampleStatus
    brackets: tuple[tuple[float, float], ...] = ()  # all sign-change intervals


def _signed_freq(model: LocalQuadraticModel) -> float:
    w = model.freq_scale
    return -w if model.branch is Branch.HYPERBOLIC else w


def residual_amplitude(spec: MasterResidualSpec, lam: float, T: float) -> float:
    """lambda + I_s / (m w) with I_s the sin-kernel response at shift lambda."""
    model = local_expand(spec.pot, lam)
    return lam + response_sin(model, T) / (spec.pot.mass * model.freq_scale)


def residual_density(spec: MasterResidualSpec, lam: float, T: float) -> float:
    """I_r / (m w) - (lambda - x0) cos(w T), cosh on the hyperbolic branch."""
    model = local_expand(spec.pot, lam)
    w = model.freq_scale
    if model.branch is Branch.HYPERBOLIC:
        c = math.cosh(w * T)
    else:
        c = math.cos(w * T)
    return response_retarded(model, T) / (spec.pot.mass * w) - (lam - spec.x0) * c


def residual_general(spec: MasterResidualSpec, lam: float, T: float) -> float:
    """Center condition of the general boundary-value pipeline (n = 1)."""
    from . import framework  # deferred: framework is a heavier import

    import numpy as np

    model = vector_model_from_potential(spec.pot)
    x_cr = framework.critical_center(
        model, np.array([lam]), np.array([spec.x0]), T
    )
    return float(x_cr[0])


def residual_for(spec: MasterResidualSpec) -> Callable[[float, float], float]:
    if spec.variant is Variant.AMPLITUDE:
        return lambda lam, T: residual_amplitude(spec, lam, T)
    if spec.variant is Variant.DENSITY:
        return lambda lam, T: residual_density(spec, lam, T)
    return lambda lam, T: residual_general(spec, lam, T)


def _near_singular(spec: MasterResidualSpec, lam: float, T: float) -> bool:
    """The critical-point reduction divides by cos(w T); flag its zeros."""
    model = local_expand(spec.pot, lam)
    if model.branch is not Branch.OSCILLATORY:
        return model.branch is Branch.DEGENERATE
    return abs(math.cos(model.freq_scale * T)) < SINGULAR_COS_THRESHOLD


def _scan_expanding(
    evaluate: Callable[[float], float | None],
    seed: float,
    settings: SolverSettings,
) -> tuple[list[tuple[float, float]], int, int]:
    """Sign-change brackets from a doubling ring scan around the seed.

    Returns (brackets, resonant_count, singular_count, probe_count).
    Expansion stops one full ring after the first sign change so that a
    nearby root shadows distant ones.
    """
    brackets: list[tuple[float, float]] = []
    n_resonant = 0
    n_singular = 0
    n_probe = 0

    def probe(lam: float) -> float | None:
        nonlocal n_resonant, n_singular, n_probe
        n_probe += 1
        try:
            v = evaluate(lam)
        except Resonance:
            n_resonant += 1
            return None
        except (DegenerateFrequency, SingularHorizon, ConjugatePoint, NoConvergence):
            n_singular += 1
            return None
        return v if v is not None and math.isfinite(v) else None

    v_seed = probe(seed)
    if v_seed == 0.0:
        return [(seed, seed)], n_resonant, n_singular, n_probe

    last = {+1: (seed, v_seed), -1: (seed, v_seed)}
    width = settings.bracket_half_width
    radius = width / 2.0**settings.scan_levels
    prev_radius = 0.0
    for _ in range(settings.scan_levels + 1):
        for side in (-1, +1):
            step = (radius - prev_radius) / settings.scan_subdivisions
            for j in range(1, settings.scan_subdivisions + 1):
                lam = seed + side * (prev_radius + j * step)
                v = probe(lam)
                lam_prev, v_prev = last[side]
                if v is not None and v_prev is not None:
                    if v == 0.0:
                        brackets.append((lam, lam))
                    elif v * v_prev < 0.0:
                        brackets.append(
                            (min(lam_prev, lam), max(lam_prev, lam))
                        )
                last[side] = (lam, v)
        if brackets:
            break
        prev_radius = radius
        radius *= 2.0
    return brackets, n_resonant, n_singular, n_probe


def solve_lambda(spec: MasterResidualSpec, T: float, seed: float) -> RootResult:
    """Root of the master residual near seed at horizon T.

    Expanding bracket scan around the seed (up to the solver bracket
    half-width), then bisection on the sign-change interval nearest the
    seed, certified by |residual| <= tolerance.  Singular-set conditions
    become statuses, never exceptions.
    """
    if T <= 0:
        raise ValueError("T must be positive")
    residual = residual_for(spec)

    try:
        if _near_singular(spec, seed, T):
            return RootResult(seed, float("nan"), SampleStatus.NEAR_SINGULAR)
    except (Resonance, DegenerateFrequency):
        pass  # classified below through the scan

    settings = spec.solver
    brackets, n_resonant, n_singular, n_probe = _scan_expanding(
        lambda lam: residual(lam, T), seed, settings
    )

    if not brackets:
        if 2 * n_resonant > n_probe:
            return RootResult(seed, float("nan"), SampleStatus.RESONANT)
        if 2 * n_singular > n_probe:
            return RootResult(seed, float("nan"), SampleStatus.NEAR_SINGULAR)
        try:
            res_seed = residual(seed, T)
        except (Resonance, DegenerateFrequency, SingularHorizon, ConjugatePoint, NoConvergence):
            res_seed = float("nan")
        return RootResult(seed, res_seed, SampleStatus.NO_ROOT)

    # refine the bracket nearest the seed
    lo, hi = min(brackets, key=lambda br: abs(0.5 * (br[0] + br[1]) - seed))
    if lo == hi:
        root, f_root = lo, 0.0
    else:
        f_lo = residual(lo, T)
        root, f_root = lo, f_lo
        for _ in range(settings.max_iterations):
            mid = 0.5 * (lo + hi)
            f_mid = residual(mid, T)
            root, f_root = mid, f_mid
            if abs(f_mid) <= settings.tolerance or (hi - lo) < 1e-15 * (
                1.0 + abs(mid)
            ):
                break
            if f_lo * f_mid <= 0.0:
                hi = mid
            else:
                lo, f_lo = mid, f_mid

    if abs(f_root) > settings.tolerance:
        return RootResult(root, f_root, SampleStatus.NO_ROOT, tuple(brackets))
    if _near_singular(spec, root, T):
        return RootResult(root, f_root, SampleStatus.NEAR_SINGULAR, tuple(brackets))
    status = SampleStatus.OK if len(brackets) == 1 else SampleStatus.MULTI_ROOT
    return RootResult(root, f_root, status, tuple(brackets))


def continue_trajectory(
    spec: MasterResidualSpec, t_grid: Sequence[float], seed0: float
) -> Trajectory:
    """solve_lambda over an increasing T grid, seeding each step with the
    previous root.  Failed samples keep the running seed so the continuation
    can step over singular horizons."""
    times = list(t_grid)
    if not times:
        raise ValueError("t_grid must be non-empty")
    if any(b <= a for a, b in zip(times, times[1:])):
        raise ValueError("t_grid must be strictly increasing")

    samples = []
    seed = seed0
    for T in times:
        result = solve_lambda(spec, T, seed)
        model = local_expand(spec.pot, result.lam)
        samples.append(
            TrajectorySample(
                T=T,
                lam=result.lam,
                omega_eff=_signed_freq(model),
                residual=result.residual,
                status=result.status,
            )
        )
        if result.status in (SampleStatus.OK, SampleStatus.MULTI_ROOT):
            seed = result.lam
    return Trajectory(samples=tuple(samples))


def harmonic_amplitude_root(pot: PolynomialPotential, T: float) -> float:
    """Closed-form amplitude root (b/m w^2)(1 - 1/cos(w T)) for a = 0, A = 0."""
    w = pot.harmonic_freq
    return pot.linear_bias / (pot.mass * w * w) * (1.0 - 1.0 / math.cos(w * T))


def harmonic_density_root(pot: PolynomialPotential, T: float, x0: float = 0.0) -> float:
    """Closed-form density root for a = 0: the driven-oscillator trajectory
    from rest at x0,
    x0 cos(wT) + (b/m w^2)(1 - cos(wT)) + A (w sin(Om T) - Om sin(wT)) / (m w (w^2 - Om^2))."""
    m, w = pot.mass, pot.harmonic_freq
    b, amp, om = pot.linear_bias, pot.drive_amp, pot.drive_freq
    val = x0 * math.cos(w * T) + b / (m * w * w) * (1.0 - math.cos(w * T))
    if amp != 0.0:
        val += amp * (w * math.sin(om * T) - om * math.sin(w * T)) / (
            m * w * (w * w - om * om)
        )
    return val
