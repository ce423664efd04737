"""Riemannian conjugate gradient with Armijo backtracking.

The solver works on any manifold from :mod:`ocds.manifolds`. Search
directions live in the tangent space at the current iterate; the previous
direction and gradient are carried to the new iterate by projection
transport. Step acceptance uses the Armijo sufficient-decrease test, so
the objective trace is non-increasing by construction.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DegenerateStepError, NumericError
from .manifolds import (
    Manifold,
    tree_all_finite,
    tree_axpy,
    tree_copy,
    tree_dot,
    tree_leaves,
    tree_scale,
)

__all__ = ["Objective", "SolverConfig", "SolveReport", "minimize", "fd_gradient_check"]

# A line search that halves 60 times from step 1.0 reaches ~8.7e-19; below
# that no float64 objective can register a decrease, so we report a stall.
_MAX_HALVINGS = 60


@dataclass
class Objective:
    """Cost and ambient (Euclidean) gradient callables over manifold points."""

    cost: Callable
    egrad: Callable


@dataclass
class SolverConfig:
    max_iters: int = 500
    grad_tol: float = 1e-6
    armijo_c: float = 1e-4
    backtrack_factor: float = 0.5
    initial_step: float = 1.0
    beta_rule: str = "pr+"  # "pr+" (nonnegative Polak-Ribiere) or "fr"
    restart_period: int | None = None  # default: ambient dimension of the manifold

    def __post_init__(self):
        if not (0.0 < self.armijo_c < 1.0):
            raise ValueError(f"armijo_c must be in (0, 1), got {self.armijo_c}")
        if not (0.0 < self.backtrack_factor < 1.0):
            raise ValueError(
                f"backtrack_factor must be in (0, 1), got {self.backtrack_factor}"
            )
        if self.initial_step <= 0.0:
            raise ValueError(f"initial_step must be positive, got {self.initial_step}")
        if self.max_iters < 0:
            raise ValueError(f"max_iters must be >= 0, got {self.max_iters}")
        rule = self.beta_rule.lower()
        if rule not in ("pr+", "fr"):
            raise ValueError(f"beta_rule must be 'pr+' or 'fr', got {self.beta_rule!r}")
        self.beta_rule = rule
        if self.restart_period is not None and self.restart_period < 1:
            raise ValueError("restart_period must be >= 1 when given")


@dataclass
class SolveReport:
    iterations: int
    objective_trace: list[float] = field(default_factory=list)
    grad_norm_trace: list[float] = field(default_factory=list)
    converged: bool = False
    wall_time: float = 0.0


def _line_search(obj, manifold, point, direction, f0, slope, cfg):
    """Backtracking Armijo search along a tangent direction.

    Returns (new_point, new_cost) or None when 60 halvings fail to find
    sufficient decrease. Degenerate retractions and non-finite trial costs
    count as rejections, not errors.
    """
    step = cfg.initial_step
    for _ in range(_MAX_HALVINGS):
        try:
            candidate = manifold.retract(point, tree_scale(direction, step))
        except DegenerateStepError:
            step *= cfg.backtrack_factor
            continue
        fc = float(obj.cost(candidate))
        if np.isfinite(fc) and fc <= f0 + cfg.armijo_c * step * slope:
            return candidate, fc
        step *= cfg.backtrack_factor
    return None


def minimize(obj: Objective, manifold: Manifold, init, cfg: SolverConfig | None = None):
    """Minimize obj over the manifold starting from init.

    Returns (point, SolveReport). A stalled line search is a reported
    condition, not an exception: the best iterate found so far comes back
    with converged=False. Non-finite cost or gradient values at an accepted
    iterate raise NumericError naming the iterate.
    """
    cfg = cfg or SolverConfig()
    start = time.perf_counter()
    restart_every = cfg.restart_period or manifold.ambient_dimension

    point = init
    f = float(obj.cost(point))
    if not np.isfinite(f):
        raise NumericError("objective is not finite at the initial point (iterate 0)")
    egrad = obj.egrad(point)
    if not tree_all_finite(egrad):
        raise NumericError("gradient is not finite at the initial point (iterate 0)")
    grad = manifold.egrad_to_rgrad(point, egrad)
    gnorm = manifold.norm(point, grad)

    trace = [f]
    gtrace = [gnorm]
    iterations = 0
    converged = gnorm <= cfg.grad_tol

    direction = tree_scale(grad, -1.0)
    steepest = True  # direction currently equals -grad

    while not converged and iterations < cfg.max_iters:
        # True slope of cost(retract(point, s*direction)) at s = 0: the
        # retraction curve leaves with velocity `direction`, so the chain
        # rule pairs the ambient gradient with the direction. On manifolds
        # whose gradient is the tangent projection this equals
        # inner(direction, grad) exactly.
        slope = tree_dot(egrad, direction)
        if slope >= 0.0:
            # Conjugacy went bad; fall back to steepest descent.
            direction = tree_scale(grad, -1.0)
            steepest = True
            slope = tree_dot(egrad, direction)
            if slope >= 0.0:
                break  # no descent available at this point

        hit = _line_search(obj, manifold, point, direction, f, slope, cfg)
        if hit is None and not steepest:
            direction = tree_scale(grad, -1.0)
            steepest = True
            slope = tree_dot(egrad, direction)
            if slope >= 0.0:
                break
            hit = _line_search(obj, manifold, point, direction, f, slope, cfg)
        if hit is None:
            break  # stall: report what we have

        prev_point, prev_grad, prev_gnorm = point, grad, gnorm
        point, f = hit
        iterations += 1

        egrad = obj.egrad(point)
        if not tree_all_finite(egrad):
            raise NumericError(f"gradient is not finite at iterate {iterations}")
        grad = manifold.egrad_to_rgrad(point, egrad)
        gnorm = manifold.norm(point, grad)
        trace.append(f)
        gtrace.append(gnorm)

        if gnorm <= cfg.grad_tol:
            converged = True
            break

        if iterations % restart_every == 0:
            direction = tree_scale(grad, -1.0)
            steepest = True
            continue

        denom = prev_gnorm * prev_gnorm
        if denom <= 0.0:
            direction = tree_scale(grad, -1.0)
            steepest = True
            continue
        if cfg.beta_rule == "fr":
            beta = (gnorm * gnorm) / denom
        else:
            carried_grad = manifold.transport(prev_point, point, prev_grad)
            diff = tree_axpy(grad, -1.0, carried_grad)
            beta = max(0.0, manifold.inner(point, grad, diff) / denom)
        carried_dir = manifold.transport(prev_point, point, direction)
        direction = tree_axpy(tree_scale(grad, -1.0), beta, carried_dir)
        steepest = False

    report = SolveReport(
        iterations=iterations,
        objective_trace=trace,
        grad_norm_trace=gtrace,
        converged=converged,
        wall_time=time.perf_counter() - start,
    )
    return point, report


def fd_gradient_check(obj: Objective, point, h: float = 1e-6) -> float:
    """Relative error between the analytic ambient gradient and a central
    finite difference of the cost, over every coordinate of the point.

    Returns ||egrad - fd||_F / max(1, ||egrad||_F) with Frobenius norms
    taken over all factors jointly.
    """
    analytic = tree_leaves(obj.egrad(point))
    work = tree_copy(point)
    leaves = tree_leaves(work)

    fd: list[np.ndarray] = []
    for leaf in leaves:
        g = np.zeros_like(leaf)
        flat_leaf = leaf.ravel()
        flat_g = g.ravel()
        for j in range(flat_leaf.size):
            orig = flat_leaf[j]
            flat_leaf[j] = orig + h
            f_plus = float(obj.cost(work))
            flat_leaf[j] = orig - h
            f_minus = float(obj.cost(work))
            flat_leaf[j] = orig
            flat_g[j] = (f_plus - f_minus) / (2.0 * h)
        fd.append(g)

    num = 0.0
    den = 0.0
    for a, b in zip(analytic, fd):
        num += float(np.sum((a - b) ** 2))
        den += float(np.sum(a * a))
    return float(np.sqrt(num) / max(1.0, np.sqrt(den)))
