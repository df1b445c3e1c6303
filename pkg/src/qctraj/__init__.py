"""Quasiclassical quantum trajectories of driven polynomial oscillators.

The central objects are transcendental master equations in a shift
parameter lambda: their root lambda*(T) approximates the quantum position
average at time T.  Subpackages:

    model       potentials and local quadratic expansions
    oscillator  closed forms for the forced harmonic oscillator
    master      master-equation residuals, root finding, continuation
    framework   the n-dimensional boundary-value pipeline
    pathint     discrete-action saddle points and fluctuation prefactors
    oracle      split-step Schrodinger, classical RK4, quadrature oracles
    cli         scenario files, example catalog, command line front end
"""

from .model import (
    Branch,
    LocalQuadraticModel,
    PolynomialPotential,
    VectorPotentialModel,
    eval_gradient,
    eval_hessian,
    eval_potential,
    local_expand,
    static_gradient,
    vector_model_from_potential,
)
from .oscillator import (
    BoundaryProblem,
    MasterAction,
    OscillatorSolution,
    master_action,
    response_retarded,
    response_sin,
    solve_boundary,
)

__all__ = [
    "Branch",
    "LocalQuadraticModel",
    "PolynomialPotential",
    "VectorPotentialModel",
    "eval_gradient",
    "eval_hessian",
    "eval_potential",
    "local_expand",
    "static_gradient",
    "vector_model_from_potential",
    "BoundaryProblem",
    "MasterAction",
    "OscillatorSolution",
    "master_action",
    "response_retarded",
    "response_sin",
    "solve_boundary",
]

__version__ = "0.1.0"
