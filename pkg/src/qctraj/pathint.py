"""Discrete-action saddle points and Gaussian fluctuation prefactors.

First-order driven dynamics x' = F(x, t) has the time-discretized weight

    S_N(x_0..x_N) = sum_{n=0}^{N-1} (dt/4) [ (x_{n+1} - x_n)/dt - F(x_n, t_n) ]^2.

Critical paths come in two kinds: the forward flow (every bracket zero) and
pinned paths with x_N held fixed, which satisfy the continuum equation
x'' = F_t + F F_x to O(dt^2).  Around a pinned critical path the Gaussian
integral over the interior nodes is controlled by the tridiagonal Hessian
of S_N; its determinant is advanced by a three-term recurrence derived
from that tridiagonal structure (the discrete Jacobi field), normalized so
that Q_N = dt * det(2 dt H) and the free particle gives Q_n = n dt.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import NoConvergence, SingularHessian
from .model import PolynomialPotential


@dataclass(frozen=True)
class FlowField:
    """Drift field F(x, t) with its x- and t-derivatives.

    Evaluators must accept numpy arrays in x and broadcast.
    """

    f: Callable[[np.ndarray, np.ndarray], np.ndarray]
    fx: Callable[[np.ndarray, np.ndarray], np.ndarray]
    fxx: Callable[[np.ndarray, np.ndarray], np.ndarray]
    ft: Callable[[np.ndarray, np.ndarray], np.ndarray]


def polynomial_flow(
    poly: Sequence[float], drive_amp: float = 0.0, drive_freq: float = 0.0
) -> FlowField:
    """F(x, t) = sum_j poly[j] x^j + drive_amp sin(drive_freq t)."""
    c = np.asarray(poly, dtype=float)
    c1 = np.polynomial.polynomial.polyder(c) if c.size > 1 else np.zeros(1)
    c2 = np.polynomial.polynomial.polyder(c1) if c1.size > 1 else np.zeros(1)
    pv = np.polynomial.polynomial.polyval

    def f(x, t):
        val = pv(x, c)
        if drive_amp != 0.0:
            val = val + drive_amp * np.sin(drive_freq * np.asarray(t))
        return val

    def ft(x, t):
        if drive_amp == 0.0:
            return np.zeros_like(np.asarray(x, dtype=float))
        return drive_amp * drive_freq * np.cos(drive_freq * np.asarray(t)) * np.ones_like(
            np.asarray(x, dtype=float)
        )

    return FlowField(
        f=f,
        fx=lambda x, t: pv(x, c1) * np.ones_like(np.asarray(x, dtype=float)),
        fxx=lambda x, t: pv(x, c2) * np.ones_like(np.asarray(x, dtype=float)),
        ft=ft,
    )


def flow_from_potential(pot: PolynomialPotential) -> FlowField:
    """F = -V'(x) + A sin(Omega t) for the static part of a polynomial potential."""
    # -V' as a polynomial in x: -(m w^2 x + sum k c_k x^(k-1) - b)
    deg = max([2] + list(pot.coeffs), default=2)
    minus_grad = np.zeros(deg)
    minus_grad[0] = pot.linear_bias
    minus_grad[1] = -pot.mass * pot.harmonic_freq**2
    for k, ck in pot.coeffs.items():
        minus_grad[k - 1] -= k * ck
    return polynomial_flow(minus_grad, pot.drive_amp, pot.drive_freq)


@dataclass(frozen=True)
class DiscretePath:
    """Uniformly sampled path: nodes[n] at times[n] = t0 + n * step."""

    step: float
    start: float
    nodes: np.ndarray
    times: np.ndarray

    def __post_init__(self) -> None:
        if self.nodes.shape != self.times.shape or self.nodes.ndim != 1:
            raise ValueError("nodes and times must be matching 1-d arrays")
        if abs(self.nodes[0] - self.start) > 1e-12 * (1.0 + abs(self.start)):
            raise ValueError("nodes[0] must equal start")

    @property
    def n_steps(self) -> int:
        return self.nodes.size - 1


@dataclass(frozen=True)
class PrefactorState:
    """Fluctuation sequence Q_1..Q_N; Q_N normalizes the Gaussian prefactor
    as 1/sqrt(4 pi eps Q_N)."""

    q: np.ndarray


def _residuals(field: FlowField, path: DiscretePath) -> np.ndarray:
    """r_n = (x_{n+1} - x_n)/dt - F(x_n, t_n) for n = 0..N-1."""
    x, t = path.nodes, path.times
    return (x[1:] - x[:-1]) / path.step - field.f(x[:-1], t[:-1])


def discrete_action(field: FlowField, path: DiscretePath) -> float:
    """S_N = sum (dt/4) r_n^2."""
    r = _residuals(field, path)
    return float(0.25 * path.step * np.sum(r * r))


def momentum_and_weight(
    field: FlowField, path: DiscretePath
) -> tuple[np.ndarray, float]:
    """Discrete momenta p_n = r_n / 2 and their weight sum p^2 dt.

    The weight equals discrete_action exactly, for every path.
    """
    p = 0.5 * _residuals(field, path)
    return p, float(path.step * np.sum(p * p))


def critical_path_free(
    field: FlowField, x0: float, t0: float, horizon: float, n_steps: int
) -> DiscretePath:
    """RK4 integration of the forward flow x' = F(x, t) on the grid."""
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    h = horizon / n_steps
    nodes = np.empty(n_steps + 1)
    nodes[0] = x0
    x = x0
    for i in range(n_steps):
        t = t0 + i * h
        k1 = float(field.f(x, t))
        k2 = float(field.f(x + 0.5 * h * k1, t + 0.5 * h))
        k3 = float(field.f(x + 0.5 * h * k2, t + 0.5 * h))
        k4 = float(field.f(x + h * k3, t + h))
        x += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        nodes[i + 1] = x
    return DiscretePath(
        step=h, start=x0, nodes=nodes, times=t0 + h * np.arange(n_steps + 1)
    )


def action_gradient(field: FlowField, path: DiscretePath) -> np.ndarray:
    """dS_N/dx_n for the interior nodes n = 1..N-1."""
    x, t = path.nodes, path.times
    dt = path.step
    r = _residuals(field, path)
    fx = field.fx(x[1:-1], t[1:-1])
    return 0.5 * (r[:-1] - r[1:] * (1.0 + dt * fx))


def action_hessian(
    field: FlowField, path: DiscretePath
) -> tuple[np.ndarray, np.ndarray]:
    """(diag, off) of the tridiagonal interior Hessian d2 S_N / dx_n dx_m."""
    x, t = path.nodes, path.times
    dt = path.step
    r = _residuals(field, path)
    fx = field.fx(x[1:-1], t[1:-1])
    fxx = field.fxx(x[1:-1], t[1:-1])
    one = 1.0 + dt * fx
    diag = (1.0 + one * one) / (2.0 * dt) - 0.5 * dt * r[1:] * fxx
    off = -one[:-1] / (2.0 * dt)
    return diag, off


def critical_path_pinned(
    field: FlowField,
    x0: float,
    x_f: float,
    t0: float,
    horizon: float,
    n_steps: int,
    initial: np.ndarray | None = None,
    max_iter: int = 60,
) -> DiscretePath:
    """Newton solution of dS_N/dx_n = 0 with both endpoints pinned.

    Starts from the straight line (or an explicit initial guess) and solves
    the tridiagonal Newton system; steps are halved while the gradient norm
    grows.  If the cold start stalls, a homotopy walks the endpoint from the
    forward-flow endpoint to x_f, warm-starting each stage.  At convergence
    max |dS/dx_n| <= 1e-13 / dt.
    """
    if n_steps < 2:
        raise ValueError("n_steps must be >= 2")
    h = horizon / n_steps
    if initial is None:
        initial = np.linspace(x0, x_f, n_steps + 1)
    try:
        return _pinned_newton(field, x0, x_f, t0, horizon, n_steps, initial, max_iter)
    except NoConvergence:
        pass
    # homotopy in the endpoint, starting from the easy flow-endpoint problem
    flow = critical_path_free(field, x0, t0, horizon, n_steps)
    nodes = flow.nodes.copy()
    for stage in range(1, 17):
        target = flow.nodes[-1] + (x_f - flow.nodes[-1]) * stage / 16.0
        guess = nodes.copy()
        guess[-1] = target
        path = _pinned_newton(field, x0, target, t0, horizon, n_steps, guess, max_iter)
        nodes = path.nodes
    return path


def _pinned_newton(
    field: FlowField,
    x0: float,
    x_f: float,
    t0: float,
    horizon: float,
    n_steps: int,
    initial: np.ndarray,
    max_iter: int,
) -> DiscretePath:
    h = horizon / n_steps
    times = t0 + h * np.arange(n_steps + 1)
    nodes = np.array(initial, dtype=float)
    nodes[0], nodes[-1] = x0, x_f
    path = DiscretePath(step=h, start=x0, nodes=nodes, times=times)
    tol = 1e-13 / h

    g = action_gradient(field, path)
    for _ in range(max_iter):
        norm = float(np.max(np.abs(g)))
        if norm <= tol:
            return path
        diag, off = action_hessian(field, path)
        step = _solve_tridiagonal(diag, off, -g)
        factor = 1.0
        for _ in range(20):
            trial = path.nodes.copy()
            trial[1:-1] += factor * step
            trial_path = DiscretePath(step=h, start=x0, nodes=trial, times=times)
            g_new = action_gradient(field, trial_path)
            if float(np.max(np.abs(g_new))) < norm:
                break
            factor *= 0.5
        else:
            raise NoConvergence("pinned-path Newton: damping exhausted")
        path, g = trial_path, g_new
    if float(np.max(np.abs(g))) <= tol:
        return path
    raise NoConvergence(
        f"pinned-path Newton: gradient {float(np.max(np.abs(g))):.3e} > {tol:.1e}"
    )


def _solve_tridiagonal(
    diag: np.ndarray, off: np.ndarray, rhs: np.ndarray
) -> np.ndarray:
    """Thomas algorithm for a symmetric tridiagonal system."""
    n = diag.size
    c = np.empty(n)
    d = np.empty(n)
    c[0] = diag[0]
    d[0] = rhs[0]
    for i in range(1, n):
        if c[i - 1] == 0.0:
            raise SingularHessian("zero pivot in tridiagonal Newton solve")
        w = off[i - 1] / c[i - 1]
        c[i] = diag[i] - w * off[i - 1]
        d[i] = rhs[i] - w * d[i - 1]
    if c[-1] == 0.0:
        raise SingularHessian("zero pivot in tridiagonal Newton solve")
    x = np.empty(n)
    x[-1] = d[-1] / c[-1]
    for i in range(n - 2, -1, -1):
        x[i] = (d[i] - off[i] * x[i + 1]) / c[i]
    return x


def prefactor_recursion(field: FlowField, path: DiscretePath) -> PrefactorState:
    """Q_1..Q_N by the discrete Jacobi recurrence of the interior Hessian.

    With b_n = 1 + (1 + dt F'_n)^2 - dt^2 r_n F''_n and c_n = 1 + dt F'_n,

        Q_{n+1} = b_n Q_n - c_{n-1}^2 Q_{n-1},   Q_0 = 0, Q_1 = dt,

    which makes Q_{n+1} = dt * det(2 dt H_n) for the leading n x n interior
    Hessian block.  A Q_n crossing zero is a discrete conjugate point and
    raises SingularHessian.
    """
    x, t = path.nodes, path.times
    dt = path.step
    n_steps = path.n_steps
    r = _residuals(field, path)
    fx = field.fx(x, t)
    fxx = field.fxx(x, t)

    q = np.empty(n_steps)
    q_prev2 = 0.0
    q_prev = dt
    q[0] = q_prev
    for n in range(1, n_steps):
        one = 1.0 + dt * fx[n]
        b = 1.0 + one * one - dt * dt * r[n] * fxx[n]
        c_prev = 1.0 + dt * fx[n - 1]
        q_next = b * q_prev - c_prev * c_prev * q_prev2
        if q_next <= 0.0:
            raise SingularHessian(
                f"fluctuation determinant crossed zero at node {n + 1}"
            )
        q[n] = q_next
        q_prev2, q_prev = q_prev, q_next
    return PrefactorState(q=q)


def saddle_point_average(
    field: FlowField,
    x0: float,
    horizon: float,
    n_steps: int,
    eps: float | complex,
    x_f_window: tuple[float, float] | None = None,
    scan_points: int = 65,
    endpoint_integrated: bool = False,
) -> complex:
    """Stationary-endpoint sum sum_k x_k^2 exp(i S_k / eps) / sqrt(4 pi eps Q_k).

    Endpoints are stationary where the terminal momentum of the pinned path
    vanishes; they are located by a deterministic warm-started scan over x_f
    followed by bisection.  eps may carry a small negative imaginary part
    (damping rotation) to compare against absolutely convergent brute-force
    sums.

    With endpoint_integrated=True the weight 1/sqrt(4 pi eps Q_k) is
    replaced by 1/sqrt(2 Q_k S''_k), S'' the curvature of the optimized
    action in the endpoint.  That is the stationary-phase composition of
    the pinned Gaussian with the final endpoint integral (the Schur
    complement of the interior Hessian block: det(2 dt H_full) = 2 Q S''),
    and is the form that brute-force endpoint-integrated averages converge
    to; the default form keeps the pinned prefactor only.
    """
    t0 = 0.0
    flow_end = float(critical_path_free(field, x0, t0, horizon, n_steps).nodes[-1])
    if x_f_window is None:
        scale = max(1.0, abs(x0), abs(flow_end))
        x_f_window = (
            min(x0, flow_end) - 3.0 * scale,
            max(x0, flow_end) + 3.0 * scale,
        )

    warm: dict[str, np.ndarray] = {}

    def terminal_momentum(x_f: float, side: str = "") -> float:
        path = critical_path_pinned(
            field, x0, x_f, t0, horizon, n_steps, initial=warm.get(side)
        )
        if side:
            warm[side] = path.nodes
        r_last = (path.nodes[-1] - path.nodes[-2]) / path.step - float(
            field.f(path.nodes[-2], path.times[-2])
        )
        return 0.5 * r_last

    # walk outward from the flow endpoint on both sides, warm-starting each
    # pinned solve with its neighbor
    grid = np.linspace(x_f_window[0], x_f_window[1], scan_points)
    order = np.argsort(np.abs(grid - flow_end))
    phi = np.empty(scan_points)
    for idx in order:
        side = "lo" if grid[idx] <= flow_end else "hi"
        phi[idx] = terminal_momentum(float(grid[idx]), side)

    roots: list[float] = []
    for i in range(scan_points - 1):
        if phi[i] == 0.0:
            roots.append(float(grid[i]))
        elif phi[i] * phi[i + 1] < 0.0:
            lo, hi = float(grid[i]), float(grid[i + 1])
            f_lo = phi[i]
            for _ in range(80):
                mid = 0.5 * (lo + hi)
                f_mid = terminal_momentum(mid)
                if f_mid == 0.0 or (hi - lo) < 1e-14 * (1.0 + abs(mid)):
                    break
                if f_lo * f_mid < 0.0:
                    hi = mid
                else:
                    lo, f_lo = mid, f_mid
            roots.append(0.5 * (lo + hi))
    if phi[-1] == 0.0:
        roots.append(float(grid[-1]))

    deduped: list[float] = []
    for root in roots:
        if all(abs(root - r) > 1e-7 * (1.0 + abs(root)) for r in deduped):
            deduped.append(root)

    total = 0.0 + 0.0j
    for x_f in deduped:
        path = critical_path_pinned(field, x0, x_f, t0, horizon, n_steps)
        action = discrete_action(field, path)
        q_n = prefactor_recursion(field, path).q[-1]
        if endpoint_integrated:
            h = 1e-5 * (1.0 + abs(x_f))
            curvature = (terminal_momentum(x_f + h) - terminal_momentum(x_f - h)) / (
                2.0 * h
            )
            weight = cmath.sqrt(2.0 * q_n * curvature)
        else:
            weight = cmath.sqrt(4.0 * math.pi * eps * q_n)
        total += x_f**2 * cmath.exp(1j * action / eps) / weight
    return total
