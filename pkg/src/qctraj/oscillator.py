"""Closed-form machinery for the forced (master) harmonic oscillator.

The displacement around the expansion point obeys

    m u'' + m w2 u = g(t),   g(t) = -d + A sin(Omega t),   w2 = omega_eff_sq,

with boundary data u(0) = y, u(T) = x.  This module provides the
boundary-value solution, the two driving response integrals, and the
boundary action together with its endpoint derivatives, all in closed form.

Hyperbolic continuation: for w2 < 0 every formula is evaluated at the
complex frequency i*kappa (kappa = sqrt(-w2)), which turns the sin/cos
modes into sinh/cosh.  The continued results are real; response integrals
then refer to the sinh kernels, e.g. response_sin returns
int_0^T g(t) sinh(kappa t) dt.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

from .errors import DegenerateFrequency, Resonance, SingularHorizon
from .model import Branch, LocalQuadraticModel

RESONANCE_RTOL = 1e-6
DEGENERACY_RTOL = 1e-12
HORIZON_ATOL = 1e-9


@dataclass(frozen=True)
class BoundaryProblem:
    """Boundary data for the forced oscillator over a finite horizon."""

    model: LocalQuadraticModel
    horizon: float
    left: float  # u(0)
    right: float  # u(T)
    mass: float = 1.0

    def __post_init__(self) -> None:
        if not self.horizon > 0.0:
            raise ValueError("horizon must be positive")
        if not self.mass > 0.0:
            raise ValueError("mass must be positive")


@dataclass(frozen=True)
class OscillatorSolution:
    """u(t) = c1*S(t) + c2*C(t) + part_sin*sin(Omega t) + part_const.

    S, C are sin/cos of omega_eff*t on the oscillatory branch and
    sinh/cosh of kappa*t on the hyperbolic branch.
    """

    c1: float
    c2: float
    part_const: float
    part_sin: float
    model: LocalQuadraticModel
    horizon: float

    def _modes(self, t: float) -> tuple[float, float]:
        w = self.model.freq_scale
        if self.model.branch is Branch.HYPERBOLIC:
            return math.sinh(w * t), math.cosh(w * t)
        return math.sin(w * t), math.cos(w * t)

    def u(self, t: float) -> float:
        s, c = self._modes(t)
        m = self.model
        return self.c1 * s + self.c2 * c + self.part_sin * math.sin(m.drive_freq * t) + self.part_const

    def du(self, t: float) -> float:
        s, c = self._modes(t)
        w = self.model.freq_scale
        m = self.model
        sign = 1.0 if self.model.branch is Branch.HYPERBOLIC else -1.0
        return (
            self.c1 * w * c
            + self.c2 * w * s * sign
            + self.part_sin * m.drive_freq * math.cos(m.drive_freq * t)
        )

    def ddu(self, t: float) -> float:
        # u'' from the mode functions directly; equals (g - m*w2*u)/mass on
        # the exact solution.
        s, c = self._modes(t)
        w = self.model.freq_scale
        m = self.model
        sign = 1.0 if self.model.branch is Branch.HYPERBOLIC else -1.0
        return (
            sign * (self.c1 * w * w * s + self.c2 * w * w * c)
            - self.part_sin * m.drive_freq**2 * math.sin(m.drive_freq * t)
        )


@dataclass(frozen=True)
class MasterAction:
    """Boundary action of the forced oscillator and its endpoint derivatives."""

    value: float
    d_dright: float
    d_dleft: float


def _guard(model: LocalQuadraticModel) -> complex:
    """Validate the singular set and return the complex frequency.

    Returns sqrt(omega_eff_sq) as a complex number: real on the oscillatory
    branch, i*kappa on the hyperbolic branch.
    """
    s = model.omega_eff_sq
    if model.branch is Branch.DEGENERATE:
        raise DegenerateFrequency(f"omega_eff_sq = {s} within degeneracy tolerance")
    w = cmath.sqrt(complex(s, 0.0))
    if model.branch is Branch.OSCILLATORY and model.drive_amp != 0.0:
        gap = abs(w.real - abs(model.drive_freq))
        if gap < RESONANCE_RTOL * max(w.real, abs(model.drive_freq), 1.0):
            raise Resonance(
                f"omega_eff = {w.real} within tolerance of drive_freq = {model.drive_freq}"
            )
    return w


def _project(value: complex, branch: Branch) -> float:
    """Real value of an analytically continued expression.

    On the oscillatory branch the expression is real; on the hyperbolic
    branch (frequency i*kappa) the continued integrals carry a factor i.
    """
    return value.imag if branch is Branch.HYPERBOLIC else value.real


def _response_sin_c(d: float, amp: float, om: float, w: complex, t_end: float) -> complex:
    """int_0^T g(t) sin(w t) dt at complex frequency w."""
    val = d * (cmath.cos(w * t_end) - 1.0) / w
    if amp != 0.0:
        val += 0.5 * amp * (
            _sinc_integral(w - om, t_end) - _sinc_integral(w + om, t_end)
        )
    return val


def _sinc_integral(mu: complex, t_end: float) -> complex:
    """sin(mu T)/mu, with the mu -> 0 limit handled by series."""
    z = mu * t_end
    if abs(z) < 1e-4:
        # sin(z)/z = 1 - z^2/6 + z^4/120
        return t_end * (1.0 - z * z / 6.0 + z**4 / 120.0)
    return cmath.sin(z) / mu


def _response_retarded_c(
    d: float, amp: float, om: float, w: complex, t_end: float
) -> complex:
    """int_0^T g(t) sin(w (T - t)) dt at complex frequency w."""
    val = d * (cmath.cos(w * t_end) - 1.0) / w
    if amp != 0.0:
        val += amp * (
            w * math.sin(om * t_end) - om * cmath.sin(w * t_end)
        ) / (w * w - om * om)
    return val


def response_sin(model: LocalQuadraticModel, horizon: float, at_resonance: bool = False) -> float:
    """Response integral int_0^T g(t) sin(omega_eff t) dt in closed form.

    Equals d*(cos(wT) - 1)/w + (A/2)*(sin((w-Om)T)/(w-Om) - sin((w+Om)T)/(w+Om)).
    With at_resonance=True the drive term is replaced by its w -> Om limit
    (A/2)*(T - sin(2wT)/(2w)) instead of raising Resonance.
    """
    if at_resonance:
        w = _resonant_freq(model)
        d = model.bias
        val = d * (math.cos(w * horizon) - 1.0) / w
        val += 0.5 * model.drive_amp * (
            horizon - math.sin(2.0 * w * horizon) / (2.0 * w)
        )
        return val
    w = _guard(model)
    return _project(
        _response_sin_c(model.bias, model.drive_amp, model.drive_freq, w, horizon),
        model.branch,
    )


def response_retarded(
    model: LocalQuadraticModel, horizon: float, at_resonance: bool = False
) -> float:
    """Response integral int_0^T g(t) sin(omega_eff (T - t)) dt in closed form.

    Equals d*(cos(wT) - 1)/w + A*(w sin(Om T) - Om sin(wT))/(w^2 - Om^2); the
    drive coefficient is A, fixed against quadrature.  With at_resonance=True
    the drive term is replaced by its limit A*(sin(wT) - wT cos(wT))/(2w).
    """
    if at_resonance:
        w = _resonant_freq(model)
        d = model.bias
        val = d * (math.cos(w * horizon) - 1.0) / w
        val += model.drive_amp * (
            math.sin(w * horizon) - w * horizon * math.cos(w * horizon)
        ) / (2.0 * w)
        return val
    w = _guard(model)
    return _project(
        _response_retarded_c(model.bias, model.drive_amp, model.drive_freq, w, horizon),
        model.branch,
    )


def _resonant_freq(model: LocalQuadraticModel) -> float:
    if model.branch is not Branch.OSCILLATORY:
        raise DegenerateFrequency("resonant limit requires the oscillatory branch")
    return math.sqrt(model.omega_eff_sq)


def solve_boundary(bp: BoundaryProblem) -> OscillatorSolution:
    """Solve m u'' + m w2 u = g(t), u(0) = left, u(T) = right.

    Raises SingularHorizon when |sin(omega_eff T)| < 1e-9 on the oscillatory
    branch; the hyperbolic branch (sinh kernels) is never singular.
    """
    model = bp.model
    mass = bp.mass
    _guard(model)
    s2 = model.omega_eff_sq
    part_const = -model.bias / (mass * s2)
    if model.drive_amp != 0.0:
        part_sin = model.drive_amp / ((s2 - model.drive_freq**2) * mass)
    else:
        part_sin = 0.0
    w = model.freq_scale
    if model.branch is Branch.HYPERBOLIC:
        sT, cT = math.sinh(w * bp.horizon), math.cosh(w * bp.horizon)
    else:
        sT, cT = math.sin(w * bp.horizon), math.cos(w * bp.horizon)
    if abs(sT) < HORIZON_ATOL:
        raise SingularHorizon(f"sin(omega_eff * T) = {sT:.3e} at T = {bp.horizon}")
    c2 = bp.left - part_const
    c1 = (
        bp.right
        - part_const
        - part_sin * math.sin(model.drive_freq * bp.horizon)
        - c2 * cT
    ) / sT
    return OscillatorSolution(
        c1=c1,
        c2=c2,
        part_const=part_const,
        part_sin=part_sin,
        model=model,
        horizon=bp.horizon,
    )


def master_action(bp: BoundaryProblem) -> MasterAction:
    """Boundary action of the forced oscillator in closed form.

    value = (m w / 2 sin wT) * [cos(wT)(y^2 + x^2) - 2 x y
            + (2x/mw) I_s + (2y/mw) I_r - (2/m^2 w^2) I_dd]

    where I_s, I_r are the response integrals and I_dd the iterated double
    response.  It equals the time integral of
    (m/2) u'^2 - (m w2 / 2) u^2 + g u along the boundary solution.  The
    endpoint derivatives come from the same quadratic form.
    """
    model = bp.model
    mass = bp.mass
    w = _guard(model)
    d, amp, om = model.bias, model.drive_amp, model.drive_freq
    t_end = bp.horizon
    sT = cmath.sin(w * t_end)
    if abs(sT) < HORIZON_ATOL:
        raise SingularHorizon(f"sin(omega_eff * T) = {abs(sT):.3e} at T = {t_end}")
    cT = cmath.cos(w * t_end)
    y, x = bp.left, bp.right
    i_s = _response_sin_c(d, amp, om, w, t_end)
    i_r = _response_retarded_c(d, amp, om, w, t_end)
    i_dd = _double_response_c(d, amp, om, w, t_end)
    bracket = (
        cT * (y * y + x * x)
        - 2.0 * x * y
        + (2.0 * x / (mass * w)) * i_s
        + (2.0 * y / (mass * w)) * i_r
        - (2.0 / (mass * mass * w * w)) * i_dd
    )
    value = (mass * w / (2.0 * sT)) * bracket
    d_right = (mass * w / sT) * (x * cT - y + i_s / (mass * w))
    d_left = (mass * w / sT) * (y * cT - x + i_r / (mass * w))
    return MasterAction(
        value=value.real, d_dright=d_right.real, d_dleft=d_left.real
    )


# ---------------------------------------------------------------------------
# exact integration of exponential-polynomial sums
#
# The double response integral mixes rates n1*w + n2*Omega with small
# integers n1, n2; rates can vanish legitimately (for instance w = 2 Omega),
# so each term falls back to a Taylor series in the rate when |rate * T| is
# small.  Terms are (coef, power, rate) meaning coef * t^power * exp(rate*t).

_SERIES_CUTOFF = 0.5
_SERIES_TOL = 1e-18


def _term_integral_value(coef: complex, p: int, mu: complex, t_end: float) -> complex:
    """int_0^T coef * t^p * exp(mu t) dt."""
    z = mu * t_end
    if abs(z) < _SERIES_CUTOFF:
        total = 0.0 + 0.0j
        zj = 1.0 + 0.0j  # mu^j * T^j / j!
        j = 0
        while True:
            total += zj * t_end ** (p + 1) / (p + j + 1)
            j += 1
            zj *= z / j
            if abs(zj) < _SERIES_TOL:
                break
        return coef * total
    val = 0.0 + 0.0j
    # by parts: int t^p e^(mu t) = e^(mu T) sum_j (-1)^j p!/(p-j)! T^(p-j)/mu^(j+1)
    #           - (-1)^p p!/mu^(p+1)
    fac = 1.0
    for j in range(p + 1):
        val += (-1.0) ** j * fac * t_end ** (p - j) / mu ** (j + 1)
        fac *= p - j
    val = cmath.exp(z) * val - (-1.0) ** p * math.factorial(p) / mu ** (p + 1)
    return coef * val


def _term_antiderivative(
    coef: complex, p: int, mu: complex, t_max: float
) -> list[tuple[complex, int, complex]]:
    """Terms of F(t) = int_0^t coef * s^p * exp(mu s) ds."""
    if abs(mu * t_max) < _SERIES_CUTOFF:
        # polynomial truncation of the entire-function antiderivative
        out = []
        cj = coef  # coef * mu^j / j!
        j = 0
        while True:
            out.append((cj / (p + j + 1), p + j + 1, 0.0 + 0.0j))
            j += 1
            cj *= mu / j
            if abs(cj) * t_max ** (p + j) < _SERIES_TOL * max(1.0, abs(coef)):
                break
        return out
    out = []
    fac = 1.0
    for j in range(p + 1):
        out.append((coef * (-1.0) ** j * fac / mu ** (j + 1), p - j, mu))
        fac *= p - j
    out.append((-coef * (-1.0) ** p * math.factorial(p) / mu ** (p + 1), 0, 0.0 + 0.0j))
    return out


def _exp_mul(
    a: list[tuple[complex, int, complex]], b: list[tuple[complex, int, complex]]
) -> list[tuple[complex, int, complex]]:
    return [(ca * cb, pa + pb, ra + rb) for ca, pa, ra in a for cb, pb, rb in b]


def _double_response_c(
    d: float, amp: float, om: float, w: complex, t_end: float
) -> complex:
    """I_dd = int_0^T dt int_0^t ds g(t) g(s) sin(w(T-t)) sin(w s), exactly."""
    iw = 1j * w
    iom = 1j * om
    half_i = -0.5j  # 1/(2i)
    # g as exponential sum
    g_terms = [(-d + 0.0j, 0, 0.0 + 0.0j)]
    if amp != 0.0:
        g_terms += [(amp * half_i, 0, iom), (-amp * half_i, 0, -iom)]
    sin_ws = [(half_i, 0, iw), (-half_i, 0, -iw)]
    e_pwT = cmath.exp(iw * t_end)
    sin_w_ret = [(half_i * e_pwT, 0, -iw), (-half_i / e_pwT, 0, iw)]

    inner = []
    for coef, p, mu in _exp_mul(g_terms, sin_ws):
        inner.extend(_term_antiderivative(coef, p, mu, t_end))
    outer = _exp_mul(_exp_mul(g_terms, sin_w_ret), inner)
    total = 0.0 + 0.0j
    for coef, p, mu in outer:
        total += _term_integral_value(coef, p, mu, t_end)
    return total
