"""Brute-force evaluators and tiny-instance global solvers used as ground truth.

Everything here is deliberately simple: sort-based objective evaluation,
full assignment enumeration, coordinate-descent grid search.  These do not
compete with the conic machinery; they validate it.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ordloc.model import NIWeights, OrderedMedianInstance, SAWeights

BRUTE_FORCE_CAP = 2 ** 16  # p^n limit for assignment enumeration


@dataclass
class Evaluation:
    objective: float
    sorted_values: np.ndarray          # theta (SA) or (n, p) sorted lists (NI)
    assignment: Optional[np.ndarray]   # SA only, in 0..p-1
    permutation: np.ndarray            # sorting permutation(s) used
    x: Optional[np.ndarray] = None


def _as_x(x, instance) -> np.ndarray:
    x = np.asarray(x, dtype=float).reshape(instance.p, instance.d)
    return x


def eval_ni(x, instance: OrderedMedianInstance) -> Evaluation:
    """Non-interchangeable objective: per-facility sorted weighted distances
    plus the inter-facility penalty term."""
    if not isinstance(instance.weights, NIWeights):
        raise ValueError("eval_ni needs an NI instance")
    x = _as_x(x, instance)
    w = instance.weights
    pts = instance.demand.points
    n, p = instance.n, instance.p
    lists = np.empty((n, p))
    perms = np.empty((n, p), dtype=int)
    for j in range(p):
        dj = np.array([instance.norm.norm(x[j] - a) for a in pts])
        lj = w.omega * dj
        order = np.argsort(-lj, kind="stable")
        perms[:, j] = order
        lists[:, j] = lj[order]
    obj = float(np.sum(w.lam * lists))
    for j in range(p - 1):
        for jp in range(j + 1, p):
            obj += w.mu[j, jp] * instance.norm.norm(x[j] - x[jp])
    return Evaluation(obj, lists, None, perms, x=x)


def eval_sa(x, instance: OrderedMedianInstance) -> Evaluation:
    """Single-allocation objective: ordered weights on sorted min-distances.

    Ties in the nearest-facility argmin and in the sort break to the lowest
    index, so the output is deterministic.
    """
    if not isinstance(instance.weights, SAWeights):
        raise ValueError("eval_sa needs an SA instance")
    x = _as_x(x, instance)
    pts = instance.demand.points
    dmat = np.array([[instance.norm.norm(xj - a) for xj in x] for a in pts])
    assignment = np.argmin(dmat, axis=1)
    t = dmat[np.arange(instance.n), assignment]
    order = np.argsort(-t, kind="stable")
    theta = t[order]
    obj = float(instance.weights.lam @ theta)
    return Evaluation(obj, theta, assignment, order, x=x)


def ordered_sum_dual_check(u, lam, settings=None) -> tuple:
    """Sorted weighted sum vs the assignment-dual LP value.

    The LP  min sum v_i + sum w_l  s.t.  v_i + w_l >= lam_l * u_i  equals
    sum_l lam_l u_(l) by total unimodularity; both numbers are returned.
    """
    from ordloc.cone_ir import GE, ConicProgram
    from ordloc.conic_solver import Settings, solve_program

    u = np.asarray(u, dtype=float)
    lam = np.asarray(lam, dtype=float)
    nn = len(u)
    sorted_value = float(lam @ np.sort(u)[::-1])

    prog = ConicProgram()
    v = prog.add_vars([f"v[{i}]" for i in range(nn)])
    w = prog.add_vars([f"w[{l}]" for l in range(nn)])
    for i in range(nn):
        for l in range(nn):
            prog.add_row({v[i]: 1.0, w[l]: 1.0}, GE, lam[l] * u[i], "dual")
    prog.set_objective({idx: 1.0 for idx in v + w})
    sol = solve_program(prog, settings or Settings(tol=1e-10))
    return sorted_value, sol.objective


def _grid_descent_sa(instance, assignment, h0, refinements, rng=None):
    """Block coordinate descent of eval_sa over successively finer grids."""
    pts = instance.demand.points
    p, d = instance.p, instance.d
    x = np.empty((p, d))
    for j in range(p):
        mine = pts[assignment == j]
        x[j] = mine.mean(axis=0) if len(mine) else pts.mean(axis=0)
    best = eval_sa(x, instance)
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    span = max(float((hi - lo).max()), h0)
    h = h0
    half = span / 2.0
    for _ in range(refinements + 1):
        improved = True
        sweeps = 0
        while improved and sweeps < 4:
            improved = False
            sweeps += 1
            for j in range(p):
                center = x[j].copy()
                axes = [np.arange(center[k] - half, center[k] + half + h / 2, h)
                        for k in range(d)]
                for cand in itertools.product(*axes):
                    x[j] = cand
                    ev = eval_sa(x, instance)
                    if ev.objective < best.objective - 1e-12:
                        best = ev
                        center = np.array(cand)
                    x[j] = center
        h /= 5.0
        half = max(2.5 * h * 5, 3 * h)
    return best


def brute_force_sa(instance: OrderedMedianInstance, refinements: int = 2) -> Evaluation:
    """Global solve of tiny SA instances by assignment enumeration.

    Enumerates assignments up to facility relabeling (the objective is
    facility-symmetric) and refines each with a grid coordinate descent;
    fixing an assignment does not fix the sorting, so candidates are always
    scored with the exact eval_sa.
    """
    n, p = instance.n, instance.p
    if p ** n > BRUTE_FORCE_CAP:
        raise ValueError(f"instance too large for brute force: p^n = {p}^{n}")
    h0 = max(instance.M, 1e-9) / 50.0
    best = None
    for asg in _canonical_assignments(n, p):
        ev = _grid_descent_sa(instance, np.array(asg), h0, refinements)
        if best is None or ev.objective < best.objective:
            best = ev
    return best


def _canonical_assignments(n, p):
    """Assignments as restricted-growth strings (one per relabeling orbit)."""
    def rec(prefix, used):
        if len(prefix) == n:
            yield tuple(prefix)
            return
        for j in range(min(used + 1, p)):
            prefix.append(j)
            yield from rec(prefix, max(used, j + 1))
            prefix.pop()
    yield from rec([], 0)


def weber_value_grid(points, norm, weights=None, h_rel=1.0 / 50, refinements=2):
    """Single-facility weighted sum-of-distances minimum via refined grids."""
    pts = np.asarray(points, dtype=float)
    wts = np.ones(len(pts)) if weights is None else np.asarray(weights, float)
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    span = max(float((hi - lo).max()), 1e-9)

    def f(x):
        return float(sum(w * norm.norm(x - a) for w, a in zip(wts, pts)))

    center = pts.mean(axis=0)
    h = span * h_rel
    half = span / 2.0
    best_x, best = center, f(center)
    for _ in range(refinements + 1):
        axes = [np.arange(best_x[k] - half, best_x[k] + half + h / 2, h)
                for k in range(pts.shape[1])]
        for cand in itertools.product(*axes):
            val = f(np.array(cand))
            if val < best:
                best, best_x = val, np.array(cand)
        half = 3 * h
        h /= 5.0
    return best, best_x
