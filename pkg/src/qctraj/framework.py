"""General n-dimensional boundary-value pipeline for the master equation.

The displacement u(tau) from the shift point obeys the linear problem

    m u'' + Hess[V](shift, tau) u + V'(shift, tau) = 0,
    u(0) = left,  u(T) = right,

whose n = 1 instance is the forced-oscillator equation of the oscillator
module (boundary data are displacements from the shift point).  The action
of the solution is integrated by Simpson quadrature of

    L = (m/2) |u'|^2 - [V'(shift, tau) . u + (1/2) u . Hess u],

and the critical points in the boundary data are located by damped Newton
on finite-difference gradients.  Solving

    y_cr(T, shift, x_cr) + shift - x0 = 0

for the right-endpoint displacement x_cr reproduces, in one dimension, the
density-variant master residual in closed form; the pair of pipelines
cross-checks both.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConjugatePoint, NoConvergence
from .model import VectorPotentialModel

DEFAULT_STEPS = 512
GRADIENT_TOL = 1e-7


@dataclass(frozen=True)
class LinearBVP:
    """Linear boundary problem for the displacement around a shift point."""

    model: VectorPotentialModel
    shift: tuple[float, ...]
    horizon: float
    left: tuple[float, ...]
    right: tuple[float, ...]
    mass: float

    def __post_init__(self) -> None:
        n = self.model.dim
        if not (len(self.shift) == len(self.left) == len(self.right) == n):
            raise ValueError("shift, left, right must all have the model dimension")
        if self.horizon <= 0:
            raise ValueError("horizon must be positive")
        if self.mass <= 0:
            raise ValueError("mass must be positive")


def make_bvp(
    model: VectorPotentialModel,
    shift: np.ndarray,
    horizon: float,
    left: np.ndarray,
    right: np.ndarray,
    mass: float | None = None,
) -> LinearBVP:
    """LinearBVP from array-like data; mass defaults to the model's."""
    return LinearBVP(
        model=model,
        shift=tuple(float(v) for v in np.atleast_1d(shift)),
        horizon=float(horizon),
        left=tuple(float(v) for v in np.atleast_1d(left)),
        right=tuple(float(v) for v in np.atleast_1d(right)),
        mass=model.mass if mass is None else float(mass),
    )


@dataclass
class BVPSolution:
    """Sampled boundary-value solution: nodes, values u, derivatives u'."""

    nodes: np.ndarray  # (N+1,)
    values: np.ndarray  # (N+1, n)
    derivative_values: np.ndarray  # (N+1, n)


# cache of fundamental-solution integrations keyed by problem geometry;
# boundary data enter only through a cheap linear solve afterwards
_BASIS_CACHE: dict[tuple, tuple] = {}
_BASIS_CACHE_MAX = 128


def _basis(
    model: VectorPotentialModel,
    shift: tuple[float, ...],
    horizon: float,
    mass: float,
    n_steps: int,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Integrate the fundamental solution set with fixed-step RK4.

    Returns (nodes, U, V, grad_nodes, hess_nodes) where U, V have shape
    (N+1, n, 2n+1): columns 0..n-1 are velocity responses (u = 0, u' = e_i),
    columns n..2n-1 position responses (u = e_i, u' = 0), and column 2n the
    zero-data particular solution, the only one that feels V'.
    """
    key = (id(model), shift, horizon, mass, n_steps)
    hit = _BASIS_CACHE.get(key)
    if hit is not None:
        return hit

    n = model.dim
    lam = np.array(shift)
    h = horizon / n_steps
    nodes = h * np.arange(n_steps + 1)

    inhom = np.zeros(2 * n + 1)
    inhom[2 * n] = 1.0

    def rhs(tau: float, u: np.ndarray, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        hess = model.hessian_fn(lam, tau)
        grad = model.gradient_fn(lam, tau)
        return v, -(hess @ u + np.outer(grad, inhom)) / mass

    u = np.zeros((n, 2 * n + 1))
    v = np.zeros((n, 2 * n + 1))
    v[:, :n] = np.eye(n)
    u[:, n : 2 * n] = np.eye(n)

    big_u = np.empty((n_steps + 1, n, 2 * n + 1))
    big_v = np.empty((n_steps + 1, n, 2 * n + 1))
    big_u[0] = u
    big_v[0] = v
    for i in range(n_steps):
        tau = nodes[i]
        k1u, k1v = rhs(tau, u, v)
        k2u, k2v = rhs(tau + 0.5 * h, u + 0.5 * h * k1u, v + 0.5 * h * k1v)
        k3u, k3v = rhs(tau + 0.5 * h, u + 0.5 * h * k2u, v + 0.5 * h * k2v)
        k4u, k4v = rhs(tau + h, u + h * k3u, v + h * k3v)
        u = u + h / 6.0 * (k1u + 2 * k2u + 2 * k3u + k4u)
        v = v + h / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v)
        big_u[i + 1] = u
        big_v[i + 1] = v

    grad_nodes = np.array([model.gradient_fn(lam, t) for t in nodes])
    hess_nodes = np.array([model.hessian_fn(lam, t) for t in nodes])

    out = (nodes, big_u, big_v, grad_nodes, hess_nodes)
    if len(_BASIS_CACHE) >= _BASIS_CACHE_MAX:
        _BASIS_CACHE.pop(next(iter(_BASIS_CACHE)))
    _BASIS_CACHE[key] = out
    return out


def shooting_matrix(bvp: LinearBVP, n_steps: int = DEFAULT_STEPS) -> np.ndarray:
    """Endpoint values of the homogeneous fundamental solutions (columns)."""
    _, big_u, _, _, _ = _basis(bvp.model, bvp.shift, bvp.horizon, bvp.mass, n_steps)
    n = bvp.model.dim
    return big_u[-1][:, :n].copy()


def solve_bvp(bvp: LinearBVP, n_steps: int = DEFAULT_STEPS) -> BVPSolution:
    """Linear shooting solution of the boundary problem.

    The left boundary value rides on the position-response columns and the
    inhomogeneity on the particular column; the n x n system for the initial
    velocities uses the velocity-response columns.  Raises ConjugatePoint
    when the shooting matrix is singular.
    """
    n = bvp.model.dim
    nodes, big_u, big_v, _, _ = _basis(
        bvp.model, bvp.shift, bvp.horizon, bvp.mass, n_steps
    )
    left = np.array(bvp.left)
    right = np.array(bvp.right)

    u_part = big_u[:, :, 2 * n] + np.einsum("tij,j->ti", big_u[:, :, n : 2 * n], left)
    v_part = big_v[:, :, 2 * n] + np.einsum("tij,j->ti", big_v[:, :, n : 2 * n], left)

    m_shoot = big_u[-1][:, :n]
    # scale each velocity-response column by its running magnitude so that a
    # focal point shows up as a genuinely small determinant
    col_scale = np.maximum(np.max(np.abs(big_u[:, :, :n]), axis=(0, 1)), 1e-300)
    det = float(np.linalg.det(m_shoot / col_scale))
    if abs(det) < 1e-10:
        raise ConjugatePoint(
            f"shooting matrix singular at T = {bvp.horizon} (scaled det = {det:.3e})"
        )
    c = np.linalg.solve(m_shoot, right - u_part[-1])

    values = u_part + np.einsum("tij,j->ti", big_u[:, :, :n], c)
    derivs = v_part + np.einsum("tij,j->ti", big_v[:, :, :n], c)
    return BVPSolution(nodes=nodes, values=values, derivative_values=derivs)


def master_action_numeric(bvp: LinearBVP, n_steps: int = DEFAULT_STEPS) -> float:
    """Simpson quadrature of the expansion Lagrangian along the BVP solution."""
    sol = solve_bvp(bvp, n_steps)
    _, _, _, grad_nodes, hess_nodes = _basis(
        bvp.model, bvp.shift, bvp.horizon, bvp.mass, n_steps
    )
    u = sol.values
    v = sol.derivative_values
    kinetic = 0.5 * bvp.mass * np.einsum("ti,ti->t", v, v)
    linear = np.einsum("ti,ti->t", grad_nodes, u)
    quadratic = 0.5 * np.einsum("ti,tij,tj->t", u, hess_nodes, u)
    lagr = kinetic - (linear + quadratic)

    h = bvp.horizon / n_steps
    weights = np.ones(n_steps + 1)
    weights[1:-1:2] = 4.0
    weights[2:-1:2] = 2.0
    return float(h / 3.0 * np.dot(weights, lagr))


def boundary_gradients(bvp: LinearBVP, n_steps: int = DEFAULT_STEPS) -> tuple[np.ndarray, np.ndarray]:
    """(dS/d right, dS/d left) from the endpoint momenta m u'(T), -m u'(0)."""
    sol = solve_bvp(bvp, n_steps)
    return bvp.mass * sol.derivative_values[-1], -bvp.mass * sol.derivative_values[0]


def _newton(
    func: Callable[[np.ndarray], np.ndarray],
    start: np.ndarray,
    tol: float,
    fd_step: float,
    max_iter: int = 30,
    max_halvings: int = 20,
) -> np.ndarray:
    """Damped Newton with central finite-difference Jacobians."""
    z = np.array(start, dtype=float)
    f = func(z)
    for _ in range(max_iter):
        norm = float(np.max(np.abs(f)))
        if norm <= tol:
            return z
        n = z.size
        jac = np.empty((n, n))
        for j in range(n):
            dz = np.zeros(n)
            dz[j] = fd_step * (1.0 + abs(z[j]))
            jac[:, j] = (func(z + dz) - func(z - dz)) / (2.0 * dz[j])
        try:
            step = np.linalg.solve(jac, -f)
        except np.linalg.LinAlgError as exc:
            raise NoConvergence(f"singular Newton Jacobian: {exc}") from exc
        # halve the step while the residual grows
        factor = 1.0
        for _ in range(max_halvings):
            z_new = z + factor * step
            f_new = func(z_new)
            if float(np.max(np.abs(f_new))) < norm:
                break
            factor *= 0.5
        else:
            raise NoConvergence("Newton step damping exhausted")
        z, f = z_new, f_new
    if float(np.max(np.abs(f))) <= tol:
        return z
    raise NoConvergence(
        f"Newton failed: residual {float(np.max(np.abs(f))):.3e} > tol {tol:.1e}"
    )


def critical_left(
    model: VectorPotentialModel,
    shift: np.ndarray,
    right: np.ndarray,
    horizon: float,
    n_steps: int = DEFAULT_STEPS,
    mass: float | None = None,
) -> np.ndarray:
    """Left boundary displacement where dS/d left = 0.

    Damped Newton on central-difference gradients of the numeric action;
    the returned point has gradient norm <= 1e-7.
    """
    m = model.mass if mass is None else mass
    shift = np.atleast_1d(np.asarray(shift, dtype=float))
    right = np.atleast_1d(np.asarray(right, dtype=float))

    def grad(y: np.ndarray) -> np.ndarray:
        n = y.size
        g = np.empty(n)
        for j in range(n):
            dy = np.zeros(n)
            dy[j] = 1e-3 * (1.0 + abs(y[j]))
            s_plus = master_action_numeric(
                make_bvp(model, shift, horizon, y + dy, right, m), n_steps
            )
            s_minus = master_action_numeric(
                make_bvp(model, shift, horizon, y - dy, right, m), n_steps
            )
            g[j] = (s_plus - s_minus) / (2.0 * dy[j])
        return g

    return _newton(grad, np.zeros_like(right), GRADIENT_TOL, 1e-3)


def critical_center(
    model: VectorPotentialModel,
    shift: np.ndarray,
    x0: np.ndarray,
    horizon: float,
    n_steps: int = DEFAULT_STEPS,
    mass: float | None = None,
) -> np.ndarray:
    """Right displacement x_cr solving y_cr(T, shift, x_cr) + shift - x0 = 0.

    The returned x_cr is the general-pipeline master residual: its zero in
    shift marks the quasiclassical trajectory.
    """
    shift = np.atleast_1d(np.asarray(shift, dtype=float))
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))

    def center_residual(x: np.ndarray) -> np.ndarray:
        y_cr = critical_left(model, shift, x, horizon, n_steps, mass)
        return y_cr + shift - x0

    tol = 1e-9 * (1.0 + float(np.max(np.abs(x0))) + float(np.max(np.abs(shift))))
    return _newton(center_residual, np.zeros_like(shift), tol, 1e-3)
