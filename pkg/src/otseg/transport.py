r"""Temporally regularized, optionally unbalanced entropic transport of frames
onto prototypes.

The problem solved for a T x K cost ``C`` is

.. math::

    \min_{P \ge 0,\ P\mathbf 1 = \mathbf 1/T}\ \langle C, P\rangle
      + \alpha \sum_{i} \sum_{k \ne l} P_{i,k} P_{i+1,l}
      + \varepsilon \sum P(\log P - 1)
      + \lambda\, \mathrm{KL}(P^\top \mathbf 1 \,\|\, \mathbf 1/K)

with ``lambda_ub == 0`` meaning the columns are pinned to ``1/K`` instead of
penalized. The quadratic transition term is handled by linearizing it around
the current plan, solving the resulting entropic problem with log-domain
Sinkhorn scaling, and moving toward that solution with a line search on the
full objective, so the objective never increases between outer steps.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import brentq
from scipy.special import logsumexp, xlogy

from .errors import DomainError
from .featio import TensorFile, atomic_write_text, write_tensor


@dataclass
class TransportProblem:
    cost: np.ndarray
    alpha: float = 0.3
    eps: float = 0.07
    lambda_ub: float = 0.05
    max_outer: int = 25
    max_inner: int = 100
    tol: float = 1e-5

    def __post_init__(self):
        self.cost = np.asarray(self.cost, dtype=np.float64)
        if self.cost.ndim != 2 or min(self.cost.shape) < 1:
            raise DomainError(f"cost must be a non-empty T x K matrix, got shape {self.cost.shape}")
        if not np.isfinite(self.cost).all():
            raise DomainError("cost matrix contains NaN or Inf")
        if not self.eps > 0:
            raise DomainError(f"eps must be > 0, got {self.eps}")
        if self.alpha < 0 or self.lambda_ub < 0:
            raise DomainError("alpha and lambda_ub must be >= 0")
        if not self.tol > 0:
            raise DomainError(f"tol must be > 0, got {self.tol}")

    @classmethod
    def from_config(cls, cost, config) -> "TransportProblem":
        return cls(cost, alpha=config.alpha, eps=config.eps, lambda_ub=config.lambda_ub,
                   max_outer=config.max_outer, max_inner=config.max_inner, tol=config.tol)


@dataclass
class TransportPlan:
    plan: np.ndarray
    converged: bool
    outer_iters: int
    objective: float
    history: list[float] = field(default_factory=list)

    @property
    def labels(self) -> np.ndarray:
        return decode_labels(self)


def transition_mass(plan: np.ndarray) -> float:
    """Mass moved between different prototypes on consecutive frames."""
    if plan.shape[0] < 2:
        return 0.0
    rows = plan.sum(axis=1)
    same = np.einsum("ik,ik->", plan[:-1], plan[1:])
    return float(rows[:-1] @ rows[1:] - same)


def structure_gradient(plan: np.ndarray, alpha: float) -> np.ndarray:
    """Gradient of ``alpha * transition_mass(plan)`` with respect to the plan.

    ``G[i, k] = alpha * ((m[i+1] - P[i+1, k]) + (m[i-1] - P[i-1, k]))`` where
    ``m`` are row masses; boundary rows drop the missing neighbour.
    """
    plan = np.asarray(plan, dtype=np.float64)
    G = np.zeros_like(plan)
    if alpha == 0 or plan.shape[0] < 2:
        return G
    rows = plan.sum(axis=1, keepdims=True)
    nxt = rows[1:] - plan[1:]
    G[:-1] += nxt
    G[1:] += rows[:-1] - plan[:-1]
    return alpha * G


def _kl_to_uniform(colsums: np.ndarray) -> float:
    K = colsums.shape[0]
    target = 1.0 / K
    return float(np.sum(xlogy(colsums, colsums / target) - colsums + target))


def objective(plan: np.ndarray, problem: TransportProblem) -> float:
    """Full objective including entropy; used for line search and diagnostics."""
    plan = np.asarray(getattr(plan, "plan", plan), dtype=np.float64)
    val = float(np.sum(problem.cost * plan))
    if problem.alpha:
        val += problem.alpha * transition_mass(plan)
    val += problem.eps * float(np.sum(xlogy(plan, plan) - plan))
    if problem.lambda_ub:
        val += problem.lambda_ub * _kl_to_uniform(plan.sum(axis=0))
    return val


def discrete_objective(plan: np.ndarray, cost: np.ndarray, alpha: float, lambda_ub: float) -> float:
    """Objective without the entropy term (what the exhaustive oracle scores)."""
    val = float(np.sum(cost * plan)) + alpha * transition_mass(plan)
    if lambda_ub:
        val += lambda_ub * _kl_to_uniform(plan.sum(axis=0))
    return val


def _sinkhorn_log(C: np.ndarray, eps: float, lambda_ub: float, f: np.ndarray, g: np.ndarray,
                  max_inner: int, tol: float):
    """Log-domain scaling with exact rows and KL-relaxed (or exact) columns.

    Returns the plan together with updated dual potentials; the last update
    is always a row update so row marginals hold to machine precision.
    """
    T, K = C.shape
    log_a = -np.log(T)
    log_b = -np.log(K)
    phi = 1.0 if lambda_ub == 0 else lambda_ub / (lambda_ub + eps)
    M = -C / eps
    for _ in range(max_inner):
        f = eps * (log_a - logsumexp(M + g[None, :] / eps, axis=1))
        g_new = phi * eps * (log_b - logsumexp(M + f[:, None] / eps, axis=0))
        delta = np.max(np.abs(g_new - g)) / eps
        g = g_new
        if delta < tol:
            break
    f = eps * (log_a - logsumexp(M + g[None, :] / eps, axis=1))
    plan = np.exp(M + (f[:, None] + g[None, :]) / eps)
    return plan, f, g


def _slope(plan: np.ndarray, direction: np.ndarray, problem: TransportProblem, gamma: float) -> float:
    """Derivative of the objective along ``plan + gamma * direction``."""
    P = plan + gamma * direction
    d = direction
    val = float(np.sum(problem.cost * d))
    if problem.alpha:
        rows_d = d.sum(axis=1)
        curv = float(rows_d[:-1] @ rows_d[1:] - np.einsum("ik,ik->", d[:-1], d[1:]))
        val += float(np.sum(structure_gradient(plan, problem.alpha) * d)) + 2 * gamma * problem.alpha * curv
    val += problem.eps * float(np.sum(xlogy(d, np.where(d != 0, P, 1.0))))
    if problem.lambda_ub:
        cols, cols_d = P.sum(axis=0), d.sum(axis=0)
        val += problem.lambda_ub * float(np.sum(xlogy(cols_d, cols * cols.shape[0])))
    return val


def _line_search(plan: np.ndarray, direction: np.ndarray, problem: TransportProblem) -> float:
    """Step in [0, 1] that does not increase the objective.

    The step is a root of the directional derivative rather than a minimizer
    found by comparing objective values: close to convergence the objective
    is flat to rounding level along the segment, while its slope is not.
    """
    if problem.alpha == 0:
        # convex sub-problem solved exactly; the full step is its minimizer
        return 1.0
    if _slope(plan, direction, problem, 0.0) >= 0:
        return 0.0
    if _slope(plan, direction, problem, 1.0) <= 0:
        gamma = 1.0
    else:
        gamma = brentq(lambda g: _slope(plan, direction, problem, g), 0.0, 1.0, xtol=1e-14)
    f0 = objective(plan, problem)
    # the slope may have several roots when the transition term dominates
    candidates = [(objective(plan + g * direction, problem), g) for g in (gamma, 1.0)]
    best_val, best_gamma = min(candidates)
    return best_gamma if best_val <= f0 else 0.0


def solve(problem: TransportProblem, init: np.ndarray | None = None) -> TransportPlan:
    """Solve the transport problem starting from the uniform plan (or ``init``)."""
    if not isinstance(problem, TransportProblem):
        raise TypeError("solve expects a TransportProblem")
    C = problem.cost - problem.cost.min()
    # the shift leaves the argmin unchanged (total mass is fixed to one)
    work = TransportProblem(C, problem.alpha, problem.eps, problem.lambda_ub,
                            problem.max_outer, problem.max_inner, problem.tol)
    T, K = C.shape
    plan = np.full((T, K), 1.0 / (T * K)) if init is None else np.asarray(init, dtype=np.float64).copy()
    f = np.zeros(T)
    g = np.zeros(K)
    history = [objective(plan, work)]
    converged = False
    it = 0
    for it in range(1, problem.max_outer + 1):
        C_lin = C + structure_gradient(plan, problem.alpha)
        target, f, g = _sinkhorn_log(C_lin, problem.eps, problem.lambda_ub, f, g,
                                     problem.max_inner, problem.tol)
        direction = target - plan
        gamma = _line_search(plan, direction, work) if np.any(direction) else 0.0
        new = np.maximum(plan + gamma * direction, 0.0)
        change = float(np.max(np.abs(new - plan)))
        plan = new
        history.append(objective(plan, work))
        if change < problem.tol:
            converged = True
            break
    # re-impose the row marginal exactly (the clip above can shave rounding noise)
    plan *= (1.0 / T) / plan.sum(axis=1, keepdims=True)
    if not np.isfinite(plan).all():
        raise DomainError("transport plan became non-finite")
    shift = problem.cost.min()
    return TransportPlan(plan, converged, it, objective(plan, problem),
                         [h + shift for h in history])


def decode_labels(plan) -> np.ndarray:
    """Per-frame argmax; ties resolve to the smaller prototype index."""
    P = np.asarray(getattr(plan, "plan", plan))
    return np.argmax(P, axis=1)


def save_plan(result: TransportPlan, path) -> None:
    """Dump the plan as a tensor file plus ``<path>.json`` diagnostics."""
    path = Path(path)
    write_tensor(TensorFile(result.plan, "plan"), path)
    meta = {"converged": bool(result.converged), "outer_iters": int(result.outer_iters),
            "objective": float(result.objective)}
    atomic_write_text(path.with_name(path.name + ".json"), json.dumps(meta))
