"""Compile instances into conic programs.

``build_ni`` emits the continuous SOCP of the non-interchangeable model
(sorting handled by the assignment-dual rows, norms by absolute-value /
power-tower / aggregation blocks).  ``build_sa`` emits the mixed-binary
program of the single-allocation model with big-M sorting and allocation
machinery.  Both return a :class:`FormulationReport` mapping constraint
families to emitted row indices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ordloc.cone_ir import (EQ, GE, LE, ConicProgram, add_abs_value,
                            add_norm_epigraph, add_rational_power)
from ordloc.model import (NIWeights, OrderedMedianInstance, SAWeights,
                          compute_UB, validate)


class InvalidInstanceError(ValueError):
    pass


class WitnessError(RuntimeError):
    """The Slater witness failed strict feasibility: builder bug."""


@dataclass
class FormulationReport:
    n: int
    p: int
    d: int
    r: int
    s: int
    num_vars: int = 0
    num_linear_rows: int = 0
    num_cone_blocks: int = 0
    num_binaries: int = 0
    families: dict = field(default_factory=dict)
    tower_blocks: int = 0
    tower_blocks_raw: int = 0
    # NI record keeping
    thm32_linear_formula: Optional[int] = None
    thm32_linear_count: Optional[int] = None
    # SA record keeping
    nc1_formula: Optional[int] = None
    nc1_count: Optional[int] = None

    def finalize(self, prog: ConicProgram):
        self.num_vars = prog.num_vars
        self.num_linear_rows = len(prog.rows)
        self.num_cone_blocks = sum(1 for c in prog.cones if c.kind != "nonneg")
        self.num_binaries = len(prog.binaries)
        fams: dict = {}
        for i, row in enumerate(prog.rows):
            fams.setdefault(row.family, []).append(i)
        self.families = fams

    def audit_text(self) -> str:
        """Plain-text audit mapping constraint families to row ranges."""
        lines = [f"variables={self.num_vars} rows={self.num_linear_rows} "
                 f"cones={self.num_cone_blocks} binaries={self.num_binaries}"]
        for fam in sorted(self.families):
            rows = self.families[fam]
            lines.append(f"{fam or '(untagged)'}: {len(rows)} rows "
                         f"[{rows[0]}..{rows[-1]}]")
        if self.thm32_linear_formula is not None:
            lines.append(f"thm32 linear formula (np+p^2)(2d+1)+p^2 = "
                         f"{self.thm32_linear_formula}, counted = {self.thm32_linear_count}")
        if self.nc1_formula is not None:
            lines.append(f"nc1 formula n^2+4n+np(3d+2)-1 = {self.nc1_formula}, "
                         f"counted = {self.nc1_count}")
        return "\n".join(lines)


def _require_valid(instance):
    issues = validate(instance)
    if issues:
        raise InvalidInstanceError("; ".join(issues))


# -- non-interchangeable (Thm 3.2) ------------------------------------------


def build_ni(instance: OrderedMedianInstance, canonical: bool = False):
    """Continuous conic program for the non-interchangeable model.

    ``canonical=True`` emits the facility-pair machinery for all p^2 ordered
    pairs including the diagonal (the row set whose linear-inequality count
    matches the closed formula (np+p^2)(2d+1)+p^2); the default emits only
    j < j', which has the same optimum.
    """
    _require_valid(instance)
    if not isinstance(instance.weights, NIWeights):
        raise InvalidInstanceError("build_ni needs an NI instance")
    n, p, d = instance.n, instance.p, instance.d
    r, s = instance.norm.r, instance.norm.s
    wts = instance.weights
    pts = instance.demand.points
    prog = ConicProgram()
    rep = FormulationReport(n=n, p=p, d=d, r=r, s=s)

    x = [[prog.add_var(f"x[{j},{k}]") for k in range(d)] for j in range(p)]
    u = [[prog.add_var(f"u[{i},{j}]", nonneg=True) for j in range(p)] for i in range(n)]
    v = [[prog.add_var(f"v[{i},{j}]") for j in range(p)] for i in range(n)]
    w = [[prog.add_var(f"w[{l},{j}]") for j in range(p)] for l in range(n)]

    # sorting rows (eq:n1-1): v_ij + w_lj >= lambda_lj u_ij
    for j in range(p):
        for i in range(n):
            for l in range(n):
                prog.add_row({v[i][j]: 1.0, w[l][j]: 1.0, u[i][j]: -wts.lam[l, j]},
                             GE, 0.0, "eq:n1-1")

    towers = {"cones": 0, "raw": 0}
    # demand-facility norm machinery (eq:n1-2..5, eq:n1-10)
    for i in range(n):
        for j in range(p):
            zetas = []
            for k in range(d):
                y = add_abs_value(prog, {x[j][k]: 1.0}, pts[i, k],
                                  name=f"y[{i},{j},{k}]", family="eq:n1-2/3")
                zk = prog.add_var(f"sig[{i},{j},{k}]", nonneg=True)
                tc = add_rational_power(prog, y, zk, u[i][j], r, s,
                                        name=f"pw[{i},{j},{k}]")
                towers["cones"] += tc["cones"]
                towers["raw"] += tc["raw"]
                zetas.append(zk)
            coeffs = {zk: wts.omega[i] ** (r / s) for zk in zetas}
            coeffs[u[i][j]] = coeffs.get(u[i][j], 0.0) - 1.0
            prog.add_row(coeffs, LE, 0.0, "eq:n1-5")

    # facility-pair machinery (eq:n1-6..9, eq:n1-11) and t >= 0 rows
    pairs = ([(j, jp) for j in range(p) for jp in range(p)] if canonical
             else [(j, jp) for j in range(p) for jp in range(j + 1, p)])
    t = {}
    for (j, jp) in pairs:
        tv = prog.add_var(f"t[{j},{jp}]")
        t[(j, jp)] = tv
        prog.add_row({tv: 1.0}, GE, 0.0, "t-domain")
        mu = wts.mu[j, jp] if jp > j else (wts.mu[jp, j] if jp < j else 0.0)
        for k in range(d):
            z = add_abs_value(prog, {x[j][k]: 1.0, x[jp][k]: -1.0}, 0.0,
                              name=f"z[{j},{jp},{k}]", family="eq:n1-6/7")
            xi = prog.add_var(f"xi[{j},{jp},{k}]", nonneg=True)
            tc = add_rational_power(prog, z, xi, tv, r, s, name=f"pwq[{j},{jp},{k}]")
            towers["cones"] += tc["cones"]
            towers["raw"] += tc["raw"]
            if k == 0:
                xis = []
            xis.append(xi)
        coeffs = {xk: mu ** (r / s) for xk in xis}
        coeffs[tv] = coeffs.get(tv, 0.0) - 1.0
        prog.add_row(coeffs, LE, 0.0, "eq:n1-9")

    obj = {}
    for i in range(n):
        for j in range(p):
            obj[v[i][j]] = 1.0
    for l in range(n):
        for j in range(p):
            obj[w[l][j]] = 1.0
    for j in range(p):
        for jp in range(j + 1, p):
            if (j, jp) in t:
                obj[t[(j, jp)]] = 1.0
    prog.set_objective(obj)

    rep.tower_blocks = towers["cones"]
    rep.tower_blocks_raw = towers["raw"]
    rep.finalize(prog)
    rep.thm32_linear_formula = (n * p + p * p) * (2 * d + 1) + p * p
    counted = sum(len(rep.families.get(f, [])) for f in
                  ("eq:n1-2/3+", "eq:n1-2/3-", "eq:n1-5",
                   "eq:n1-6/7+", "eq:n1-6/7-", "eq:n1-9", "t-domain"))
    rep.thm32_linear_count = counted
    return prog, rep


# -- single allocation (MFOMP) ----------------------------------------------


def build_sa(instance: OrderedMedianInstance, symmetry_breaking: bool = True):
    """Mixed-binary conic program of the single-allocation model.

    Binaries are exactly the w (sorting permutation, n^2) and z (allocation,
    n*p) families; K is the tau-norm ball of radius M encoded through a norm
    epigraph; UB-deactivated big-M rows carry the sorting and allocation
    logic.
    """
    _require_valid(instance)
    if not isinstance(instance.weights, SAWeights):
        raise InvalidInstanceError("build_sa needs an SA instance")
    n, p, d = instance.n, instance.p, instance.d
    r, s = instance.norm.r, instance.norm.s
    pts = instance.demand.points
    lam = instance.weights.lam
    UB = instance.UB if instance.UB is not None else compute_UB(instance)
    M = float(instance.M)
    prog = ConicProgram()
    rep = FormulationReport(n=n, p=p, d=d, r=r, s=s)

    x = [[prog.add_var(f"x[{j},{k}]") for k in range(d)] for j in range(p)]
    theta = [prog.add_var(f"theta[{l}]", nonneg=True) for l in range(n)]
    t = [prog.add_var(f"t[{i}]", nonneg=True) for i in range(n)]
    u = [[prog.add_var(f"u[{i},{j}]", nonneg=True) for j in range(p)] for i in range(n)]
    z = [[prog.add_var(f"z[{i},{j}]", nonneg=True) for j in range(p)] for i in range(n)]
    w = [[prog.add_var(f"w[{i},{l}]", nonneg=True) for l in range(n)] for i in range(n)]
    for row in z:
        for idx in row:
            prog.mark_binary(idx)
    for row in w:
        for idx in row:
            prog.mark_binary(idx)

    # h1: t_i <= theta_l + UB_i (1 - w_il)
    for i in range(n):
        for l in range(n):
            prog.add_row({t[i]: 1.0, theta[l]: -1.0, w[i][l]: UB[i]}, LE, UB[i], "c:ti2")
    # h2: theta_l >= theta_{l+1}
    for l in range(n - 1):
        prog.add_row({theta[l]: 1.0, theta[l + 1]: -1.0}, GE, 0.0, "c:theta1")
    # h3: u_ij <= t_i + UB_i (1 - z_ij)
    for i in range(n):
        for j in range(p):
            prog.add_row({u[i][j]: 1.0, t[i]: -1.0, z[i][j]: UB[i]}, LE, UB[i], "c:ti1")
    # h4..h7: norm machinery per (i, j)
    towers = {"cones": 0, "raw": 0}
    for i in range(n):
        for j in range(p):
            zetas = []
            for k in range(d):
                vv = add_abs_value(prog, {x[j][k]: 1.0}, pts[i, k],
                                   name=f"v[{i},{j},{k}]", family="c:n1-1/2")
                zk = prog.add_var(f"zeta[{i},{j},{k}]", nonneg=True)
                tc = add_rational_power(prog, vv, zk, u[i][j], r, s,
                                        name=f"pw[{i},{j},{k}]")
                towers["cones"] += tc["cones"]
                towers["raw"] += tc["raw"]
                zetas.append(zk)
            coeffs = {zk: 1.0 for zk in zetas}
            coeffs[u[i][j]] = -1.0
            prog.add_row(coeffs, LE, 0.0, "c:n1-4")
    # h8/h9/h10: allocation and permutation structure
    for i in range(n):
        prog.add_row({z[i][j]: 1.0 for j in range(p)}, EQ, 1.0, "c:n1-5")
    for l in range(n):
        prog.add_row({w[i][l]: 1.0 for i in range(n)}, EQ, 1.0, "c:n1-6")
    for i in range(n):
        prog.add_row({w[i][l]: 1.0 for l in range(n)}, EQ, 1.0, "c:n1-7")
    # binary boxes for the continuous relaxation (skip singletons pinned by h8)
    if p > 1:
        for i in range(n):
            for j in range(p):
                prog.add_row({z[i][j]: 1.0}, LE, 1.0, "binary-box")
    if n > 1:
        for i in range(n):
            for l in range(n):
                prog.add_row({w[i][l]: 1.0}, LE, 1.0, "binary-box")
    # K membership: ||x_j||_tau <= M per facility
    for j in range(p):
        uk = add_norm_epigraph(prog, [{x[j][k]: 1.0} for k in range(d)],
                               [0.0] * d, 1.0, r, s, name=f"K[{j}]",
                               family="c:domain-x")
        prog.add_row({uk: 1.0}, LE, M, "c:domain-x-ball")
    if symmetry_breaking and p > 1:
        for j in range(p - 1):
            prog.add_row({x[j][0]: 1.0, x[j + 1][0]: -1.0}, LE, 0.0, "symbreak")

    prog.set_objective({theta[l]: lam[l] for l in range(n)})

    rep.tower_blocks = towers["cones"]
    rep.tower_blocks_raw = towers["raw"]
    rep.finalize(prog)
    rep.nc1_formula = n * n + 4 * n + n * p * (3 * d + 2) - 1
    counted = sum(len(rep.families.get(f, [])) for f in
                  ("c:ti2", "c:theta1", "c:ti1", "c:n1-1/2+", "c:n1-1/2-",
                   "c:n1-4", "c:n1-5", "c:n1-6", "c:n1-7"))
    # the tower rows h6 are cones except for tau=1 where they are linear
    if r == s:
        counted += sum(len(prog.rows_in_family(f)) for f in ("power-linear",))
    else:
        counted += n * p * d  # one tower per (i,j,k) counted as a constraint
    rep.nc1_count = counted
    return prog, rep


# -- Slater witnesses --------------------------------------------------------


def _strict_margins(prog: ConicProgram, vals: np.ndarray):
    """Minimum slack over inequality rows and cone memberships."""
    worst = math.inf
    worst_what = ""
    for i, row in enumerate(prog.rows):
        lhs = sum(c * vals[j] for j, c in row.coeffs.items())
        if row.sense == LE:
            m = row.rhs - lhs
        elif row.sense == GE:
            m = lhs - row.rhs
        else:
            m = math.inf if abs(lhs - row.rhs) < 1e-9 else -abs(lhs - row.rhs)
        if m < worst:
            worst, worst_what = m, f"row {i} [{row.family}]"
    for blk in prog.cones:
        sc = blk.scaled()
        vv = np.array([sc[k] * vals[j] for k, j in enumerate(blk.indices)])
        if blk.kind == "nonneg":
            m = vv.min()
        elif blk.kind == "soc":
            m = vv[0] - np.linalg.norm(vv[1:])
        elif blk.kind == "rsoc":
            m = min(2 * vv[0] * vv[1] - float(vv[2:] @ vv[2:]), vv[0], vv[1])
        else:
            continue
        if m < worst:
            worst, worst_what = m, f"cone {blk.kind}"
    return worst, worst_what


def _fill_towers(prog: ConicProgram, vals: np.ndarray):
    """Assign interior values to power-tower internal nodes, bottom-up."""
    for blk in prog.cones:
        if blk.kind != "rsoc":
            continue
        a, b, wv = blk.indices
        prod = vals[a] * vals[b]
        if prod <= 0:
            continue
        cur = 0.999 * math.sqrt(prod)
        if vals[wv] == 0.0 or vals[wv] > cur:
            vals[wv] = cur


def slater_witness(instance: OrderedMedianInstance, variant: Optional[str] = None):
    """Strictly feasible point of the continuous relaxation.

    Follows the paper-style explicit construction (with a corrected sorting
    row multiplier, see the audit notes); raises WitnessError when any
    inequality row or cone has slack below 1e-6, which signals a builder bug.
    """
    variant = variant or instance.variant
    n, p, d = instance.n, instance.p, instance.d
    r, s = instance.norm.r, instance.norm.s
    tau = instance.norm.tau
    M = max(float(instance.M), 2.0 * d, 1.0)
    pts = instance.demand.points
    eps = min(1e-3, M / (10.0 * max(p, 1)))

    if variant == "ni":
        prog, _ = build_ni(instance)
        wts = instance.weights
        maxom = float(wts.omega.max(initial=0.0))
        vals = np.zeros(prog.num_vars)
        name_to = {nm: i for i, nm in enumerate(prog.names)}
        xval = np.zeros((p, d))
        for j in range(p):
            xval[j, 0] = eps * j
            for k in range(d):
                vals[name_to[f"x[{j},{k}]"]] = xval[j, k]
        for i in range(n):
            for j in range(p):
                uv = 1.5 * M * wts.omega[i] + 2.0 + wts.omega[i] * d
                vals[name_to[f"u[{i},{j}]"]] = uv
                vals[name_to[f"v[{i},{j}]"]] = 1.0
                for k in range(d):
                    yv = abs(xval[j, k] - pts[i, k]) + 1.0
                    vals[name_to[f"y[{i},{j},{k}]"]] = yv
                    vals[name_to[f"sig[{i},{j},{k}]"]] = (
                        yv ** tau * uv ** (-(r - s) / s) * 1.05 + 0.01)
        for l in range(n):
            for j in range(p):
                # corrected multiplier: the paper's 1.5*M*lam*maxom fails for lam >= 1/2
                vals[name_to[f"w[{l},{j}]"]] = (
                    wts.lam[l, j] * (1.5 * M * maxom + 3.0 + maxom * d) + 1.0)
        for j in range(p):
            for jp in range(j + 1, p):
                tv = 2.0 * M * wts.mu[j, jp] + 1.0 + wts.mu[j, jp] * d
                vals[name_to[f"t[{j},{jp}]"]] = tv
                for k in range(d):
                    zv = abs(xval[j, k] - xval[jp, k]) + 1.0
                    vals[name_to[f"z[{j},{jp},{k}]"]] = zv
                    vals[name_to[f"xi[{j},{jp},{k}]"]] = (
                        zv ** tau * tv ** (-(r - s) / s) * 1.05 + 0.01)
        _fill_towers(prog, vals)
    else:
        prog, _ = build_sa(instance)
        UB = instance.UB if instance.UB is not None else compute_UB(instance)
        vals = np.zeros(prog.num_vars)
        name_to = {nm: i for i, nm in enumerate(prog.names)}
        xval = np.zeros((p, d))
        for j in range(p):
            xval[j, 0] = eps * (j + 1)
            for k in range(d):
                vals[name_to[f"x[{j},{k}]"]] = xval[j, k]
        for l in range(n):
            vals[name_to[f"theta[{l}]"]] = 4.0 * M + 1.0 / (l + 1.0)
        for i in range(n):
            vals[name_to[f"t[{i}]"]] = 3.0 * M
            for l in range(n):
                vals[name_to[f"w[{i},{l}]"]] = 1.0 / n
            for j in range(p):
                uv = 2.0 * M + d
                vals[name_to[f"u[{i},{j}]"]] = uv
                vals[name_to[f"z[{i},{j}]"]] = 1.0 / p
                for k in range(d):
                    vv = abs(xval[j, k] - pts[i, k]) + 1.0
                    vals[name_to[f"v[{i},{j},{k}]"]] = vv
                    vals[name_to[f"zeta[{i},{j},{k}]"]] = (
                        vv ** tau * uv ** (-(r - s) / s) * 1.05 + 0.01)
        for j in range(p):
            # K epigraph: interior value between ||x_j|| and M
            vals[name_to[f"K[{j}].u"]] = 0.5 * M + instance.norm.norm(xval[j]) + 0.1
            for k in range(d):
                vals[name_to[f"K[{j}].y{k}"]] = abs(xval[j, k]) + 0.05
                vals[name_to[f"K[{j}].z{k}"]] = (
                    (abs(xval[j, k]) + 0.05) ** tau
                    * vals[name_to[f"K[{j}].u"]] ** (-(r - s) / s) * 1.05 + 0.01)
        _fill_towers(prog, vals)

    margin, what = _strict_margins(prog, vals)
    if margin < 1e-6:
        raise WitnessError(f"witness not strictly feasible: slack {margin:.3g} at {what}")
    return vals, margin
