"""Exact solver for the single-allocation mixed-binary conic programs.

Best-first branch-and-bound over the allocation binaries with continuous
conic relaxations as node bounds, a nearest-facility repair heuristic, and
an alternating location-allocation multistart for the root incumbent.

For non-increasing ordered weights the sorting machinery is replaced by the
assignment-dual identity in cumulative-top-k form (exact, binary-free), so
branching is over the z family only; facility relabeling symmetry is pruned
by orbital branching.  Arbitrary nonnegative weights fall back to a generic
dichotomy branch-and-bound over the literal program binaries.
"""

from __future__ import annotations

import heapq
import itertools
import math
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ordloc import conic_solver as cs
from ordloc.cone_ir import (EQ, GE, LE, ConicProgram, add_abs_value,
                            add_rational_power, to_standard_form)
from ordloc.model import OrderedMedianInstance, SAWeights, compute_UB
from ordloc.oracle import Evaluation, eval_sa


@dataclass
class Incumbent:
    x: np.ndarray
    assignment: np.ndarray
    permutation: np.ndarray
    objective: float
    evaluation: Evaluation


@dataclass
class Node:
    id: int
    parent: int
    depth: int
    asg: tuple          # length n, -1 = free
    bound: float
    zsol: Optional[np.ndarray] = None
    xsol: Optional[np.ndarray] = None


@dataclass
class BBStats:
    nodes: int = 0
    best_bound: float = -math.inf
    gap: float = math.inf
    wall_time: float = 0.0
    status: str = "unknown"
    lag_prunes: int = 0
    log: list = field(default_factory=list)
    bound_paths: list = field(default_factory=list)  # (parent_bound, child_bound)

    def log_line(self, nodes, bound, incumbent, gap, t):
        line = (f"nodes={nodes} bound={bound:.6f} incumbent={incumbent:.6f} "
                f"gap={gap:.3e} time={t:.2f}s")
        self.log.append(line)
        return line


def _lambda_blocks(lam: np.ndarray):
    """Cumulative top-k representation of a non-increasing weight vector.

    Returns [(k, delta)] with sum_l lam_l t_(l) = sum delta * T_k(t)."""
    blocks = []
    n = len(lam)
    for ell in range(n):
        nxt = lam[ell + 1] if ell + 1 < n else 0.0
        delta = lam[ell] - nxt
        if delta > 1e-15:
            blocks.append((ell + 1, float(delta)))
    return blocks


def _box(points: np.ndarray):
    return points.min(axis=0), points.max(axis=0)


def _box_ub(points: np.ndarray, norm) -> np.ndarray:
    lo, hi = _box(points)
    out = np.empty(len(points))
    for i, a in enumerate(points):
        far = np.maximum(np.abs(lo - a), np.abs(hi - a))
        out[i] = norm.norm(far)
    return out


def _add_dist_epigraph(prog, xvars, a, u, r, s, name):
    """Rows/cones enforcing u >= ||x - a||_{r/s}."""
    d = len(xvars)
    if r == s:
        ys = [add_abs_value(prog, {xvars[k]: 1.0}, a[k], name=f"{name}.y{k}",
                            family="dist") for k in range(d)]
        prog.add_row({**{y: 1.0 for y in ys}, u: -1.0}, LE, 0.0, "dist-agg")
    elif (r, s) == (2, 1):
        dvars = [prog.add_var(f"{name}.d{k}") for k in range(d)]
        for k in range(d):
            prog.add_row({dvars[k]: 1.0, xvars[k]: -1.0}, EQ, -a[k], "dist-shift")
        prog.add_cone("soc", (u, *dvars))
    else:
        zetas = []
        for k in range(d):
            y = add_abs_value(prog, {xvars[k]: 1.0}, a[k], name=f"{name}.y{k}",
                              family="dist")
            zk = prog.add_var(f"{name}.z{k}", nonneg=True)
            add_rational_power(prog, y, zk, u, r, s, name=f"{name}.pw{k}")
            zetas.append(zk)
        prog.add_row({**{zk: 1.0 for zk in zetas}, u: -1.0}, LE, 0.0, "dist-agg")


def _select_pairs(points, norm, neighbors=6):
    """Nearest-neighbor pair list used for the triangle-inequality rows."""
    n = len(points)
    if n < 3:
        return []
    D = np.array([[norm.norm(points[i] - points[j]) for j in range(n)]
                  for i in range(n)])
    pairs = set()
    q = min(neighbors, n - 1)
    for i in range(n):
        order = np.argsort(D[i], kind="stable")
        for j in order[1:q + 1]:
            pairs.add((min(i, int(j)), max(i, int(j))))
    return [(i, j, D[i, j]) for (i, j) in sorted(pairs)]


class _SAForm:
    """Node-relaxation machinery for the monotone-lambda solver form.

    One master conic program carries every allocation variable plus
    per-binary bound rows; a node only rewrites right-hand sides, so the
    KKT factorization and equilibration are shared across the whole tree
    and nodes warm-start from the previously solved one.
    """

    def __init__(self, instance: OrderedMedianInstance, pair_rows: bool = True):
        self.inst = instance
        self.blocks = _lambda_blocks(instance.weights.lam)
        self.lo, self.hi = _box(instance.demand.points)
        self.UB = _box_ub(instance.demand.points, instance.norm)
        self.pairs = _select_pairs(instance.demand.points, instance.norm) if pair_rows else []
        self.cache: dict = {}
        self._build_master()
        self._work = None
        self._warm = None

    def _build_master(self):
        inst = self.inst
        n, p, d = inst.n, inst.p, inst.d
        r, s = inst.norm.r, inst.norm.s
        pts = inst.demand.points
        prog = ConicProgram()
        xv = [[prog.add_var(f"x[{j},{k}]") for k in range(d)] for j in range(p)]
        tv = [prog.add_var(f"t[{i}]", nonneg=True) for i in range(n)]
        for j in range(p):
            for k in range(d):
                prog.add_row({xv[j][k]: 1.0}, GE, self.lo[k], "box")
                prog.add_row({xv[j][k]: 1.0}, LE, self.hi[k], "box")
        zvars = {}
        zlo_rows = {}
        zhi_rows = {}
        for i in range(n):
            row = {}
            for j in range(p):
                u = prog.add_var(f"u[{i},{j}]", nonneg=True)
                _add_dist_epigraph(prog, xv[j], pts[i], u, r, s, f"D[{i},{j}]")
                z = prog.add_var(f"z[{i},{j}]", nonneg=True)
                zvars[(i, j)] = z
                prog.add_row({tv[i]: 1.0, u: -1.0, z: -self.UB[i]}, GE,
                             -self.UB[i], "t-bigM")
                zlo_rows[(i, j)] = prog.add_row({z: 1.0}, GE, 0.0, "z-lo")
                zhi_rows[(i, j)] = prog.add_row({z: 1.0}, LE, 1.0, "z-hi")
                row[z] = 1.0
            prog.add_row(row, EQ, 1.0, "z-assign")
        # triangle rows: t_i + t_i' >= D (z_ij + z_i'j - 1)
        for (i, ip, dist) in self.pairs:
            for j in range(p):
                prog.add_row({tv[i]: 1.0, tv[ip]: 1.0,
                              zvars[(i, j)]: -dist, zvars[(ip, j)]: -dist},
                             GE, -dist, "pair")
        obj: dict = {}
        for (k, delta) in self.blocks:
            if k == n:
                for i in range(n):
                    obj[tv[i]] = obj.get(tv[i], 0.0) + delta
                continue
            rho = prog.add_var(f"rho[{k}]", nonneg=True)
            obj[rho] = obj.get(rho, 0.0) + delta * k
            for i in range(n):
                sv = prog.add_var(f"s[{i},{k}]", nonneg=True)
                prog.add_row({sv: 1.0, tv[i]: -1.0, rho: 1.0}, GE, 0.0, "ksum")
                obj[sv] = delta
        prog.set_objective(obj)
        self.prog = prog
        self.sf = to_standard_form(prog)
        self.xidx = np.array([[xv[j][k] for k in range(d)] for j in range(p)])
        self.tidx = np.array(tv)
        self.zvars = zvars
        self.zlo_rows = zlo_rows
        self.zhi_rows = zhi_rows

    def _bind(self, asg):
        n, p = self.inst.n, self.inst.p
        sf = self.sf
        for i in range(n):
            for j in range(p):
                if asg[i] < 0:
                    lo, hi = 0.0, 1.0
                else:
                    lo = hi = (1.0 if asg[i] == j else 0.0)
                sf.set_rhs(self.zlo_rows[(i, j)], lo)
                sf.set_rhs(self.zhi_rows[(i, j)], hi)

    def solve_node(self, asg, tol, time_limit=None, max_iter=40000):
        sf = self.sf
        self._bind(asg)
        settings = cs.Settings(tol=tol, time_limit=time_limit, max_iter=max_iter)
        if self._work is None:
            self._work = cs._Work(sf.A, sf.b, sf.c, sf.cones, settings)
        else:
            self._work.rebind(sf.b, sf.c)
        sol = cs.solve(sf.A, sf.b, sf.c, sf.cones, settings,
                       warm=self._warm, work=self._work)
        if sol.status in (cs.OPTIMAL, cs.MAX_ITER):
            self._warm = (sol.x, sol.y, sol.s)
        x = sol.x[self.xidx]
        z = np.zeros((self.inst.n, self.inst.p))
        for (i, j), idx in self.zvars.items():
            z[i, j] = sol.x[idx]
        for i in range(self.inst.n):
            if asg[i] >= 0:
                z[i] = 0.0
                z[i, asg[i]] = 1.0
        # residual-aware conservative margin on the relaxation bound
        ny = 1.0 + float(np.linalg.norm(sol.y)) if len(sol.y) else 1.0
        nx = 1.0 + float(np.linalg.norm(sol.x))
        safety = 2.0 * (sol.pres * ny + sol.dres * nx
                        + sol.gap * (1.0 + abs(sol.objective)))
        return sol, x, z, sol.objective - safety

    def solve_cached(self, asg, tol, time_limit=None):
        hit = self.cache.get(asg)
        if hit is not None:
            return hit
        _, x, z, bound = self.solve_node(asg, tol, time_limit=time_limit)
        out = (x, z, bound)
        self.cache[asg] = out
        return out


def repair_heuristic(x, instance: OrderedMedianInstance) -> Incumbent:
    """Feasible incumbent from any facility coordinates: exact allocation
    by nearest facility, sorting by the oracle."""
    ev = eval_sa(x, instance)
    return Incumbent(np.asarray(x, float).reshape(instance.p, instance.d),
                     ev.assignment, ev.permutation, ev.objective, ev)


def _restricted_solve(instance: OrderedMedianInstance, asg, tol=1e-6):
    """Continuous location step: all points assigned, no allocation vars.

    Small dedicated program (distance epigraphs for assigned pairs plus the
    cumulative-top-k objective); much faster than binding the master."""
    n, p, d = instance.n, instance.p, instance.d
    r, s = instance.norm.r, instance.norm.s
    pts = instance.demand.points
    lo, hi = _box(pts)
    prog = ConicProgram()
    xv = [[prog.add_var(f"x[{j},{k}]") for k in range(d)] for j in range(p)]
    tv = [prog.add_var(f"t[{i}]", nonneg=True) for i in range(n)]
    for j in range(p):
        for k in range(d):
            prog.add_row({xv[j][k]: 1.0}, GE, lo[k], "box")
            prog.add_row({xv[j][k]: 1.0}, LE, hi[k], "box")
    for i in range(n):
        j = int(asg[i])
        u = prog.add_var(f"u[{i}]", nonneg=True)
        _add_dist_epigraph(prog, xv[j], pts[i], u, r, s, f"D[{i}]")
        prog.add_row({tv[i]: 1.0, u: -1.0}, GE, 0.0, "t-fix")
    obj: dict = {}
    for (k, delta) in _lambda_blocks(instance.weights.lam):
        if k == n:
            for i in range(n):
                obj[tv[i]] = obj.get(tv[i], 0.0) + delta
            continue
        rho = prog.add_var(f"rho[{k}]", nonneg=True)
        obj[rho] = obj.get(rho, 0.0) + delta * k
        for i in range(n):
            sv = prog.add_var(f"s[{i},{k}]", nonneg=True)
            prog.add_row({sv: 1.0, tv[i]: -1.0, rho: 1.0}, GE, 0.0, "ksum")
            obj[sv] = delta
    prog.set_objective(obj)
    sol = cs.solve_program(prog, cs.Settings(tol=tol, max_iter=60000))
    xidx = np.array([[xv[j][k] for k in range(d)] for j in range(p)])
    return sol.x[xidx], sol


def alternate_location_allocation(instance: OrderedMedianInstance,
                                  starts: int = 10, seed: int = 0,
                                  tol: float = 1e-6) -> Incumbent:
    """Multistart alternation: nearest-facility allocation / continuous
    location restriction, iterated to a fixpoint; best incumbent returned."""
    rng = np.random.default_rng(seed)
    pts = instance.demand.points
    n, p = instance.n, instance.p
    best: Optional[Incumbent] = None

    def slab_seed(axis):
        order = np.argsort(pts[:, axis], kind="stable")
        groups = np.array_split(order, p)
        return np.array([pts[g].mean(axis=0) for g in groups])

    det_seeds = []
    # farthest-point spread
    idx = [0]
    while len(idx) < p:
        dmin = np.array([min(np.linalg.norm(pts[i] - pts[j]) for j in idx)
                         for i in range(n)])
        idx.append(int(np.argmax(dmin)))
    det_seeds.append(pts[idx].astype(float).copy())
    det_seeds.append(slab_seed(0))
    if instance.d > 1:
        det_seeds.append(slab_seed(1))

    for trial in range(starts):
        if trial < len(det_seeds):
            x = det_seeds[trial].copy()
        else:
            x = pts[rng.choice(n, size=p, replace=n < p)].astype(float).copy()
            x += rng.normal(scale=1e-3, size=x.shape)
        prev = math.inf
        seen = set()
        for _ in range(12):
            inc = repair_heuristic(x, instance)
            key = tuple(inc.assignment)
            if inc.objective >= prev - 1e-9 or key in seen:
                break
            seen.add(key)
            prev = inc.objective
            x, _ = _restricted_solve(instance, inc.assignment, tol)
        inc = repair_heuristic(x, instance)
        if best is None or inc.objective < best.objective:
            best = inc
    return best


@dataclass
class BBResult:
    incumbent: Incumbent
    gap: float
    stats: BBStats


def solve_misocp(program, instance: OrderedMedianInstance,
                 gap_tol: float = 1e-4, time_limit: Optional[float] = None,
                 node_tol: Optional[float] = None, alt_starts: int = 10,
                 pair_rows: bool = True, seed: int = 0,
                 verbose: bool = False) -> BBResult:
    """Branch-and-bound to the requested relative gap.

    ``program`` is the literal mixed-binary program (interface contract and
    fallback path); for non-increasing lambda the nodes solve the reduced
    binary-free-sorting form built from ``instance``.
    """
    if not isinstance(instance.weights, SAWeights):
        raise ValueError("solve_misocp expects a single-allocation instance")
    if not instance.weights.is_nonincreasing:
        return _generic_misocp(program, instance, gap_tol, time_limit,
                               node_tol or 1e-6, verbose)

    t0 = time.perf_counter()
    n, p = instance.n, instance.p
    if node_tol is None:
        node_tol = max(1e-6, min(1e-4, 0.1 * gap_tol))
    stats = BBStats()
    form = _SAForm(instance, pair_rows=pair_rows)

    incumbent = alternate_location_allocation(instance, starts=alt_starts, seed=seed)

    def time_left():
        return None if time_limit is None else max(0.1, time_limit - (time.perf_counter() - t0))

    def out_of_time():
        return time_limit is not None and time.perf_counter() - t0 > time_limit

    def prune_cut():
        return incumbent.objective - 0.25 * gap_tol * max(1.0, abs(incumbent.objective))

    def rel_gap(inc, bnd):
        return (inc - bnd) / max(1.0, abs(inc))

    # static and Lagrangian lower bounds shared by every node
    from ordloc.lagrangian import dispersion_bound, tune_multipliers
    static_lb = dispersion_bound(instance)
    lag = None
    lag_eps = 0.1 * gap_tol * max(1.0, abs(incumbent.objective))
    if n * p >= 40:
        budget = None if time_limit is None else 0.25 * time_limit
        lag = tune_multipliers(instance, incumbent.evaluation,
                               rounds=40, eps=max(lag_eps, 1e-3),
                               time_limit=budget)
        static_lb = max(static_lb, lag.root_value)
    if static_lb >= incumbent.objective - gap_tol * max(1.0, abs(incumbent.objective)):
        stats.nodes = 0
        stats.best_bound = static_lb
        stats.gap = max(0.0, rel_gap(incumbent.objective, static_lb))
        stats.wall_time = time.perf_counter() - t0
        stats.status = "optimal"
        stats.log_line(0, static_lb, incumbent.objective, stats.gap, stats.wall_time)
        return BBResult(incumbent, stats.gap, stats)

    def lag_prune(asg, ref_bound):
        """True when the Lagrangian bound alone already prunes the node."""
        if lag is None:
            return False, ref_bound
        lb = lag.bound(asg, eps=max(lag_eps, 1e-3), stop_above=prune_cut())
        lb = max(lb, static_lb, ref_bound)
        return lb >= prune_cut(), lb

    root_asg = tuple([-1] * n)
    x, z, bound = form.solve_cached(root_asg, node_tol, time_limit=time_left())
    bound = max(bound, static_lb)
    cand = repair_heuristic(x, instance)
    if cand.objective < incumbent.objective:
        incumbent = cand
    root = Node(0, -1, 0, root_asg, bound, z, x)

    heap = [(bound, 0, root)]
    next_id = 1
    best_bound = bound
    pops = 0

    def branch_candidates(node):
        free = [i for i in range(n) if node.asg[i] < 0]
        if not free:
            return None
        scores = [(1.0 - node.zsol[i].max(), -node.zsol[i].max(), i) for i in free]
        scores.sort(reverse=True)
        return scores[0][2]

    def allowed_facilities(asg):
        used = sorted({j for j in asg if j >= 0})
        if len(used) < p:
            nxt = min(set(range(p)) - set(used))
            return used + [nxt]
        return used

    def expand(node):
        nonlocal next_id, incumbent
        i_star = branch_candidates(node)
        if i_star is None:
            return []
        kids = []
        for j in allowed_facilities(node.asg):
            asg = list(node.asg)
            asg[i_star] = j
            asg = tuple(asg)
            pruned, lb0 = lag_prune(asg, node.bound)
            if pruned:
                stats.bound_paths.append((node.bound, lb0))
                stats.lag_prunes += 1
                continue
            xj, zj, bj = form.solve_cached(asg, node_tol, time_limit=time_left())
            bj = max(bj, lb0)  # bounds are monotone along paths
            stats.bound_paths.append((node.bound, bj))
            cand = repair_heuristic(xj, instance)
            if cand.objective < incumbent.objective:
                incumbent = cand
            if bj < prune_cut():
                kids.append(Node(next_id, node.id, node.depth + 1, asg, bj, zj, xj))
                next_id += 1
            if out_of_time():
                break
        return kids

    status = "optimal"
    while heap:
        best_bound = heap[0][0]
        g = rel_gap(incumbent.objective, best_bound)
        if g <= gap_tol:
            break
        if out_of_time():
            status = "time_limit"
            break
        _, _, node = heapq.heappop(heap)
        pops += 1
        if node.bound >= prune_cut():
            continue
        kids = expand(node)
        for kid in kids:
            heapq.heappush(heap, (kid.bound, kid.id, kid))
        if pops % 10 == 0 and kids:
            # depth-first plunge from the most promising child
            cur = min(kids, key=lambda nd: nd.bound)
            while True:
                i_star = branch_candidates(cur)
                if i_star is None or out_of_time():
                    break
                j = int(np.argmax(cur.zsol[i_star]))
                asg = list(cur.asg)
                asg[i_star] = j
                asg = tuple(asg)
                xd, zd, bd = form.solve_cached(asg, node_tol, time_limit=time_left())
                cand = repair_heuristic(xd, instance)
                if cand.objective < incumbent.objective:
                    incumbent = cand
                if bd >= prune_cut():
                    break
                cur = Node(-1, cur.id, cur.depth + 1, asg, max(bd, cur.bound), zd, xd)
        stats.nodes = len(form.cache)
        line = stats.log_line(stats.nodes, best_bound, incumbent.objective, g,
                              time.perf_counter() - t0)
        if verbose and pops % 5 == 0:
            print(line)
    stats.nodes = len(form.cache)

    if not heap:
        best_bound = incumbent.objective
    stats.best_bound = best_bound
    stats.gap = max(0.0, rel_gap(incumbent.objective, best_bound))
    stats.wall_time = time.perf_counter() - t0
    stats.status = status if stats.gap > gap_tol else "optimal"
    # certify the incumbent against the oracle
    check = eval_sa(incumbent.x, instance)
    if abs(check.objective - incumbent.objective) > 1e-6 * max(1.0, abs(check.objective)):
        raise RuntimeError("incumbent fails oracle re-certification")
    stats.log_line(stats.nodes, best_bound, incumbent.objective, stats.gap,
                   stats.wall_time)
    return BBResult(incumbent, stats.gap, stats)


# -- generic dichotomy path (arbitrary nonnegative lambda) -------------------


def _generic_misocp(program, instance, gap_tol, time_limit, node_tol, verbose):
    """Dichotomy branch-and-bound over the literal program's binaries.

    Branches w variables before z (most fractional within the family); node
    relaxations add bound-fixing rows to the base program.
    """
    t0 = time.perf_counter()
    stats = BBStats()
    binaries = sorted(program.binaries)
    wvars = [i for i in binaries if program.names[i].startswith("w[")]
    zvars = [i for i in binaries if program.names[i].startswith("z[")]

    incumbent = alternate_location_allocation(instance, starts=6)

    base_rows = len(program.rows)

    def solve_with(fixed: dict):
        del program.rows[base_rows:]
        for idx, val in fixed.items():
            program.add_row({idx: 1.0}, EQ, float(val), "bb-fix")
        sol = cs.solve_program(program, cs.Settings(tol=node_tol))
        del program.rows[base_rows:]
        return sol

    def x_of(sol):
        names = {nm: i for i, nm in enumerate(program.names)}
        return np.array([[sol.x[names[f"x[{j},{k}]"]] for k in range(instance.d)]
                         for j in range(instance.p)])

    def frac_score(sol, fixed):
        best = None
        for fam in (wvars, zvars):
            for idx in fam:
                if idx in fixed:
                    continue
                f = abs(sol.x[idx] - round(sol.x[idx]))
                if f > 1e-6 and (best is None or f > best[0]):
                    best = (f, idx)
            if best is not None:
                return best[1]
        return None

    sol = solve_with({})
    stats.nodes += 1
    cand = repair_heuristic(x_of(sol), instance)
    if cand.objective < incumbent.objective:
        incumbent = cand
    heap = [(sol.objective, 0, {}, sol)]
    next_id = 1
    best_bound = sol.objective
    status = "optimal"
    while heap:
        best_bound = heap[0][0]
        if (incumbent.objective - best_bound) / max(1.0, abs(incumbent.objective)) <= gap_tol:
            break
        if time_limit is not None and time.perf_counter() - t0 > time_limit:
            status = "time_limit"
            break
        bnd, _, fixed, sol = heapq.heappop(heap)
        idx = frac_score(sol, fixed)
        if idx is None:
            if sol.objective < incumbent.objective:
                cand = repair_heuristic(x_of(sol), instance)
                if cand.objective < incumbent.objective:
                    incumbent = cand
            continue
        for val in (1, 0):
            child = dict(fixed)
            child[idx] = val
            _propagate_assignment(program, child, idx, val, instance)
            s = solve_with(child)
            stats.nodes += 1
            if s.status == cs.PRIMAL_INFEASIBLE:
                continue
            b = max(s.objective, bnd)
            stats.bound_paths.append((bnd, b))
            cand = repair_heuristic(x_of(s), instance)
            if cand.objective < incumbent.objective:
                incumbent = cand
            if b < incumbent.objective - 0.25 * gap_tol:
                heapq.heappush(heap, (b, next_id, child, s))
                next_id += 1
    if not heap:
        best_bound = incumbent.objective
    stats.best_bound = best_bound
    stats.gap = max(0.0, (incumbent.objective - best_bound) / max(1.0, abs(incumbent.objective)))
    stats.wall_time = time.perf_counter() - t0
    stats.status = status if stats.gap > gap_tol else "optimal"
    return BBResult(incumbent, stats.gap, stats)


def _propagate_assignment(program, fixed, idx, val, instance):
    """Fixing w[i,l]=1 zeroes row i and column l of w; z rows likewise."""
    if val != 1:
        return
    name = program.names[idx]
    if not (name.startswith("w[") or name.startswith("z[")):
        return
    fam = name[0]
    i, l = map(int, name[2:-1].split(","))
    for other in sorted(program.binaries):
        onm = program.names[other]
        if other == idx or not onm.startswith(fam + "["):
            continue
        oi, ol = map(int, onm[2:-1].split(","))
        if oi == i or (fam == "w" and ol == l):
            fixed.setdefault(other, 0)
