"""Lagrangian node bounds for the allocation branch-and-bound.

Fixing any doubly-stochastic pairing of the ordered weights to demand
points (row weights c with c = P'lambda) lower-bounds the sorted objective
by sum_i c_i t_i; relaxing the one-facility-per-point rows with
multipliers eta >= 0 then decomposes the problem into one potential
minimization per facility:

    V_j = min_{x in box}  sum_{i assigned to j} c_i d_i(x)
          + sum_{i free} min(0, c_i d_i(x) - eta_i)

and  bound = sum_{i free} eta_i + sum_j V_j  is a valid lower bound at any
node of the assignment tree.  The inner 2-D minimizations are certified by
adaptive cell refinement with a Lipschitz constant, so the bound is true.
"""

from __future__ import annotations

import math
from typing import Optional

import numpy as np

from ordloc.model import NormExponent, OrderedMedianInstance


def _dist_matrix(points: np.ndarray, centers: np.ndarray, norm: NormExponent):
    """(ncenters, npoints) matrix of l_tau distances."""
    diff = np.abs(centers[:, None, :] - points[None, :, :])
    if norm.r == norm.s:
        return diff.sum(axis=2)
    t = norm.tau
    return (diff ** t).sum(axis=2) ** (1.0 / t)


class FacilityPotential:
    """Certified global minimization of a facility potential over a box."""

    def __init__(self, points: np.ndarray, norm: NormExponent,
                 lo: np.ndarray, hi: np.ndarray):
        self.points = points
        self.norm = norm
        self.lo = lo.astype(float)
        self.hi = hi.astype(float)
        d = points.shape[1]
        # l2 -> l_tau comparison constant for the cell-radius Lipschitz term
        self.ctau = d ** max(0.0, 1.0 / norm.tau - 0.5)
        self.sqd = math.sqrt(d)
        self._offs = np.array(np.meshgrid(*[[-0.5, 0.5]] * d)).T.reshape(-1, d)

    def _values(self, centers, w_pts, w, free_pts, fc, feta):
        out = np.zeros(len(centers))
        if len(w_pts):
            D = _dist_matrix(w_pts, centers, self.norm)
            out += D @ w
        if len(free_pts):
            D = _dist_matrix(free_pts, centers, self.norm)
            out += np.minimum(0.0, D * fc[None, :] - feta[None, :]).sum(axis=1)
        return out

    def minimize(self, w_pts, w, free_pts, fc, feta, eps=5e-2,
                 stop_above: Optional[float] = None, max_levels: int = 14,
                 max_cells: int = 6000):
        """Certified (lower bound, incumbent value, argmin) triple."""
        L = (float(np.sum(w)) + float(np.sum(fc))) * self.ctau
        center = 0.5 * (self.lo + self.hi)
        h = 0.5 * float(np.max(self.hi - self.lo))
        cells = center[None, :]
        hw = np.array([h])
        vals = self._values(cells, w_pts, w, free_pts, fc, feta)
        ub = float(vals.min())
        arg = cells[0]
        dropped = math.inf  # min LB among cells dropped without proof
        for _ in range(max_levels):
            lb_cells = vals - L * hw * self.sqd
            lb = min(float(lb_cells.min()), ub)
            if ub - lb <= eps or (stop_above is not None
                                  and min(lb, dropped) >= stop_above):
                return min(lb, dropped), ub, arg
            cut = ub - 1e-12 if stop_above is None else min(ub, stop_above) - 1e-12
            keep = np.flatnonzero(lb_cells < cut)
            if keep.size == 0:
                return min(float(lb_cells.min()), dropped), ub, arg
            if keep.size > max_cells:
                order = np.argsort(lb_cells[keep], kind="stable")
                lost = keep[order[max_cells:]]
                dropped = min(dropped, float(lb_cells[lost].min()))
                keep = keep[order[:max_cells]]
            cells = cells[keep]
            nh = hw[keep] * 0.5
            cells = (cells[:, None, :] + self._offs[None, :, :] * (2 * nh)[:, None, None])
            cells = cells.reshape(-1, cells.shape[-1])
            hw = np.repeat(nh, len(self._offs))
            np.clip(cells, self.lo, self.hi, out=cells)
            vals = self._values(cells, w_pts, w, free_pts, fc, feta)
            k = int(np.argmin(vals))
            if vals[k] < ub:
                ub = float(vals[k])
                arg = cells[k].copy()
        lb_cells = vals - L * hw * self.sqd
        return min(float(lb_cells.min()), dropped), ub, arg


class LagrangianBounder:
    """Per-instance state: pairing weights c, multipliers eta, geometry."""

    def __init__(self, instance: OrderedMedianInstance, c, eta):
        self.instance = instance
        self.c = np.asarray(c, dtype=float)
        self.eta = np.asarray(eta, dtype=float)
        pts = instance.demand.points
        self.pot = FacilityPotential(pts, instance.norm,
                                     pts.min(axis=0), pts.max(axis=0))
        self.root_value = -math.inf

    def bound(self, asg, eps=0.1, stop_above: Optional[float] = None,
              with_args: bool = False):
        """Valid lower bound for a node; optionally the facility argmins."""
        inst = self.instance
        pts = inst.demand.points
        p = inst.p
        asg = np.asarray(asg)
        free = asg < 0
        total = float(self.eta[free].sum())
        fpts = pts[free]
        fc = self.c[free]
        feta = self.eta[free]
        per_eps = eps / max(p, 1)
        args = []
        for j in range(p):
            mine = asg == j
            sa = None
            if stop_above is not None:
                # enough if this facility pushes the running total past stop
                sa = stop_above - total - _remaining_trivial(self, asg, j)
            lb, _, arg = self.pot.minimize(pts[mine], self.c[mine], fpts, fc,
                                           feta, eps=per_eps, stop_above=sa)
            total += lb
            args.append(arg)
        if with_args:
            return total, args
        return total


def _remaining_trivial(bnd, asg, j):
    """Cheap valid lower bound on the not-yet-processed facility terms:
    the free-point min(0, .) terms can only subtract, assigned terms >= 0."""
    inst = bnd.instance
    free = np.asarray(asg) < 0
    rem = 0.0
    for jp in range(j + 1, inst.p):
        rem += -float(bnd.eta[free].sum())
    return rem


def _pairing_candidates(instance: OrderedMedianInstance, incumbent_eval):
    """Doubly-stochastic pairings c = P'lambda worth trying.

    Includes the incumbent's sorting permutation, the uniform mixture, and
    block-uniform mixtures spreading the top-m weights over the m points
    ranked farthest by the incumbent."""
    lam = instance.weights.lam
    n = instance.n
    cands = []
    c = np.empty(n)
    c[incumbent_eval.permutation] = lam
    cands.append(c.copy())
    cands.append(np.full(n, lam.mean()))
    ranks = incumbent_eval.permutation
    for m in (2, 3, 5, max(2, n // 4), max(3, n // 2)):
        if m >= n:
            continue
        cm = np.empty(n)
        cm[ranks[:m]] = lam[:m].mean()
        cm[ranks[m:]] = lam[m:].mean()
        cands.append(cm)
    # dedupe
    uniq = []
    for c in cands:
        if not any(np.allclose(c, u) for u in uniq):
            uniq.append(c)
    return uniq


def tune_multipliers(instance: OrderedMedianInstance, incumbent_eval,
                     rounds: int = 25, eps: float = 0.15,
                     time_limit: Optional[float] = None) -> LagrangianBounder:
    """Projected supergradient ascent on eta per candidate pairing; returns
    the bounder achieving the best certified root bound."""
    import time as _time
    t0 = _time.perf_counter()
    pts = instance.demand.points
    n, p = instance.n, instance.p
    root = tuple([-1] * n)
    ub_ref = float(incumbent_eval.objective)
    t_inc = np.array([min(instance.norm.norm(x - a) for x in incumbent_eval.x)
                      for a in pts])
    best_bnd = None
    for c in _pairing_candidates(instance, incumbent_eval):
        eta = c * t_inc
        bnd = LagrangianBounder(instance, c, eta.copy())
        val, args = bnd.bound(root, eps=eps, with_args=True)
        best_here, best_eta = val, eta.copy()
        theta = 1.0
        for _ in range(rounds):
            g = _eta_supergradient(bnd, root, args)
            gn = float(g @ g)
            if gn < 1e-12:
                break
            step = theta * max(ub_ref - val, 1e-3) / gn
            eta = np.maximum(0.0, eta + step * g)
            bnd.eta = eta
            val, args = bnd.bound(root, eps=eps, with_args=True)
            if val > best_here + 1e-9:
                best_here, best_eta = val, eta.copy()
            else:
                theta *= 0.6
            if time_limit is not None and _time.perf_counter() - t0 > time_limit:
                break
        if best_bnd is None or best_here > best_bnd.root_value:
            best_bnd = LagrangianBounder(instance, c, best_eta)
            best_bnd.root_value = best_here
        if time_limit is not None and _time.perf_counter() - t0 > time_limit:
            break
    return best_bnd


def _eta_supergradient(bnd: LagrangianBounder, asg, args):
    """1 - (times point i's free term is active at the facility argmins)."""
    inst = bnd.instance
    pts = inst.demand.points
    asg = np.asarray(asg)
    free = asg < 0
    g = np.zeros(inst.n)
    g[free] = 1.0
    fidx = np.flatnonzero(free)
    fpts = pts[free]
    for xj in args:
        dj = _dist_matrix(fpts, np.asarray(xj)[None, :], inst.norm)[0]
        active = bnd.c[free] * dj - bnd.eta[free] < 0
        g[fidx[active]] -= 1.0
    return g


def dispersion_bound(instance: OrderedMedianInstance) -> float:
    """Combinatorial packing bound on the ordered objective.

    A subset S with min pairwise distance D admits at most one point per
    facility within radius D/2, so at least |S| - p of its points have
    t_i >= D/2 and  objective >= (sum of the first m ordered weights) * D/2
    with m = |S| - p.  Subsets come from a farthest-point greedy sweep;
    exhaustive pair/triple search sharpens the m = 1 term for p = 2."""
    lam = instance.weights.lam
    pts = instance.demand.points
    n, p = instance.n, instance.p
    D = np.array([[instance.norm.norm(a - b) for b in pts] for a in pts])
    lam_cum = np.cumsum(lam)
    best = 0.0
    # greedy dispersion sweep: D_q for q = p+1 .. n
    chosen = [int(np.argmax(D.sum(axis=1)))]
    mind = D[chosen[0]].copy()
    qval = {}
    for q in range(2, n + 1):
        nxt = int(np.argmax(mind))
        chosen.append(nxt)
        mind = np.minimum(mind, D[nxt])
        if q >= p + 1:
            sub = D[np.ix_(chosen, chosen)]
            qval[q] = sub[np.triu_indices(q, 1)].min()
    for q, dq in qval.items():
        m = min(q - p, n)
        best = max(best, lam_cum[m - 1] * dq / 2.0)
    if p == 2 and n <= 80 and lam[0] > 0:
        # exact max-min-distance triple for the m = 1 term
        for i in range(n):
            for j in range(i + 1, n):
                if lam[0] * D[i, j] / 2.0 <= best:
                    continue
                k = int(np.argmax(np.minimum(D[i], D[j])))
                if k in (i, j):
                    continue
                m3 = min(D[i, j], D[i, k], D[j, k])
                best = max(best, lam[0] * m3 / 2.0)
    return best
