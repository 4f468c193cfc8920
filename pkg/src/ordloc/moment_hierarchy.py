"""Moment relaxations of the single-allocation problem.

Symbolic construction of dense and correlatively-sparse moment/localizing
matrix blocks over the lifted variable set (x, z, u, v, zeta, w, t, theta),
toy-scale solving through the embedded conic solver's PSD path, flatness
(rank) diagnostics, and the running-intersection check for the sparse
block family.

Monomials are tuples of (variable, exponent) pairs sorted by variable;
moment-variable ids are interned canonical hashes shared across blocks, so
overlapping sparse blocks couple automatically through shared y ids.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations_with_replacement
from typing import Callable, Optional

import numpy as np

from ordloc.model import OrderedMedianInstance, SAWeights, compute_UB

# -- polynomial scaffolding ---------------------------------------------------

MONO_ONE: tuple = ()


def mono_mul(a: tuple, b: tuple) -> tuple:
    if not a:
        return b
    if not b:
        return a
    out = dict(a)
    for v, e in b:
        out[v] = out.get(v, 0) + e
    return tuple(sorted(out.items()))


def mono_deg(m: tuple) -> int:
    return sum(e for _, e in m)


def poly(*terms) -> dict:
    """Polynomial from (coef, monomial) terms."""
    out: dict = {}
    for c, m in terms:
        if c:
            out[m] = out.get(m, 0.0) + c
    return {m: c for m, c in out.items() if c != 0.0}


def poly_mul_mono(p: dict, m: tuple) -> dict:
    return {mono_mul(mm, m): c for mm, c in p.items()}


def poly_deg(p: dict) -> int:
    return max((mono_deg(m) for m in p), default=0)


def var_mono(v: int, e: int = 1) -> tuple:
    return ((v, e),)


def monomial_basis(variables, deg: int) -> list:
    """Monomials of degree <= deg over the given variables, graded lex."""
    out = [MONO_ONE]
    for dd in range(1, deg + 1):
        for combo in combinations_with_replacement(sorted(variables), dd):
            m: dict = {}
            for v in combo:
                m[v] = m.get(v, 0) + 1
            out.append(tuple(sorted(m.items())))
    return out


class MomentIndexer:
    """Interns monomials to moment-variable ids (id 0 is y_0 = 1).

    An optional canonicalizer maps each monomial to its orbit representative
    before interning, which is how symmetry reduction glues variables."""

    def __init__(self, canonicalize: Optional[Callable] = None):
        self.canonicalize = canonicalize
        self.ids: dict = {MONO_ONE: 0}
        self.monos: list = [MONO_ONE]

    def id(self, mono: tuple) -> int:
        if self.canonicalize is not None:
            mono = self.canonicalize(mono)
        got = self.ids.get(mono)
        if got is None:
            got = len(self.monos)
            self.ids[mono] = got
            self.monos.append(mono)
        return got

    def __len__(self):
        return len(self.monos)


# -- variable table for the lifted formulation --------------------------------


@dataclass
class POPVariables:
    n: int
    p: int
    d: int
    names: list
    index: dict                   # ('x', (j,k)) -> variable id
    order: list                   # family layout [('x', keys), ...]
    fixed: dict = field(default_factory=dict)   # presolved var -> constant

    @property
    def nv1(self) -> int:
        return len(self.names)

    def var(self, fam: str, key) -> Optional[int]:
        return self.index.get((fam, key))

    def term(self, fam: str, key, e: int = 1):
        """Monomial (or constant) respecting presolved substitutions."""
        idx = self.index.get((fam, key))
        if idx is None:
            return float(self.fixed[(fam, key)]) ** e
        return var_mono(idx, e)

    def family_vars(self, fam: str) -> list:
        return [v for (f, _), v in sorted(self.index.items(),
                                          key=lambda kv: kv[1]) if f == fam]


def mfomp_variables(n: int, p: int, d: int, presolve: bool = True) -> POPVariables:
    """Lifted variable set of the single-allocation program.

    ``presolve`` pins binaries forced by their assignment rows (z when p=1,
    w when n=1) to 1 and removes them from the variable list."""
    names: list = []
    index: dict = {}
    fixed: dict = {}
    order = []

    def add(fam, keys, skip=None):
        ks = []
        for key in keys:
            if skip is not None and skip(key):
                fixed[(fam, key)] = 1.0
                continue
            index[(fam, key)] = len(names)
            names.append(f"{fam}{list(key) if isinstance(key, tuple) else [key]}")
            ks.append(key)
        order.append((fam, ks))

    add("x", [(j, k) for j in range(p) for k in range(d)])
    add("z", [(i, j) for i in range(n) for j in range(p)],
        skip=(lambda key: True) if (presolve and p == 1) else None)
    add("u", [(i, j) for i in range(n) for j in range(p)])
    add("v", [(i, j, k) for i in range(n) for j in range(p) for k in range(d)])
    add("zeta", [(i, j, k) for i in range(n) for j in range(p) for k in range(d)])
    add("w", [(i, l) for i in range(n) for l in range(n)],
        skip=(lambda key: True) if (presolve and n == 1) else None)
    add("t", list(range(n)))
    add("theta", list(range(n)))
    return POPVariables(n=n, p=p, d=d, names=names, index=index, order=order,
                        fixed=fixed)


# -- blocks and relaxations ----------------------------------------------------


@dataclass
class MomentMatrixBlock:
    basis: list                   # monomials indexing rows/columns
    entries: dict                 # (r, c) -> tuple of (coef, y_id)
    g: dict                       # generating polynomial ({(): 1.0} for moment)
    tag: str = ""

    @property
    def side(self) -> int:
        return len(self.basis)

    def numeric(self, y: np.ndarray) -> np.ndarray:
        M = np.zeros((self.side, self.side))
        for (r, c), terms in self.entries.items():
            val = sum(coef * y[idx] for coef, idx in terms)
            M[r, c] = val
            M[c, r] = val
        return M


@dataclass
class MomentRelaxation:
    indexer: MomentIndexer
    blocks: list                  # MomentMatrixBlock (PSD)
    equalities: list              # (tuple of (coef, y_id), rhs)
    objective: tuple              # tuple of (coef, y_id)
    r: int
    meta: dict = field(default_factory=dict)

    @property
    def num_y(self) -> int:
        return len(self.indexer)

    def orphan_ids(self) -> set:
        seen = {0}
        for blk in self.blocks:
            for terms in blk.entries.values():
                seen.update(idx for _, idx in terms)
        for terms, _ in self.equalities:
            seen.update(idx for _, idx in terms)
        seen.update(idx for _, idx in self.objective)
        return set(range(self.num_y)) - seen


def _lin(indexer: MomentIndexer, p: dict) -> tuple:
    """L_y(p) as ((coef, y_id), ...) with like ids combined."""
    acc: dict = {}
    for m, c in p.items():
        idx = indexer.id(m)
        acc[idx] = acc.get(idx, 0.0) + c
    return tuple(sorted((idx, c) for idx, c in acc.items() if c != 0.0))


def _entries_for(g: dict, basis, indexer) -> dict:
    out = {}
    for rr in range(len(basis)):
        for cc in range(rr, len(basis)):
            prod = mono_mul(basis[rr], basis[cc])
            acc: dict = {}
            for m, c in g.items():
                idx = indexer.id(mono_mul(m, prod))
                acc[idx] = acc.get(idx, 0.0) + c
            out[(rr, cc)] = tuple((c, idx) for idx, c in sorted(acc.items()))
    return out


def moment_matrix(variables, r: int, indexer: Optional[MomentIndexer] = None,
                  tag: str = "moment") -> MomentMatrixBlock:
    """Plain moment block of order r: side C(v + r, r), entry = y_{a+b}."""
    indexer = indexer or MomentIndexer()
    basis = monomial_basis(variables, r)
    return MomentMatrixBlock(basis=basis,
                             entries=_entries_for({MONO_ONE: 1.0}, basis, indexer),
                             g={MONO_ONE: 1.0}, tag=tag)


def localizing_matrix(g: dict, variables, r: int,
                      indexer: Optional[MomentIndexer] = None,
                      tag: str = "localizing") -> MomentMatrixBlock:
    """Localizing block of g at relaxation order r (block order r - ceil(deg g / 2))."""
    indexer = indexer or MomentIndexer()
    nu = (poly_deg(g) + 1) // 2
    if poly_deg(g) > 2 * r:
        raise ValueError(f"deg g = {poly_deg(g)} exceeds 2r = {2 * r}")
    basis = monomial_basis(variables, r - nu)
    return MomentMatrixBlock(basis=basis, entries=_entries_for(g, basis, indexer),
                             g=dict(g), tag=tag)


# -- the lifted constraint system ---------------------------------------------


def _mfomp_polynomials(instance: OrderedMedianInstance, vt: POPVariables):
    """(inequalities g >= 0, equalities q = 0, objective) over the lifted vars.

    Inequalities include the paper's h-list, the K-membership rows (demand
    box plus a Euclidean ball), and variable box rows keeping the lifted
    feasible set compact."""
    n, p, d = vt.n, vt.p, vt.d
    r, s = instance.norm.r, instance.norm.s
    pts = instance.demand.points
    UB = instance.UB if instance.UB is not None else compute_UB(instance)
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    M2 = math.sqrt(d) * float(instance.M)
    ubmax = float(np.max(UB))

    def T(fam, key, e=1):
        return vt.term(fam, key, e)

    def terms(*pairs):
        # pairs of (coef, mono-or-const)
        pp: dict = {}
        for c, m in pairs:
            if isinstance(m, float) or isinstance(m, int):
                pp[MONO_ONE] = pp.get(MONO_ONE, 0.0) + c * float(m)
            else:
                pp[m] = pp.get(m, 0.0) + c
        return {m: c for m, c in pp.items() if c != 0.0}

    ineqs: list = []
    eqs: list = []

    def mono_pow(fam, key, e):
        t = vt.term(fam, key, e)
        return t

    # h1: theta_l + UB_i (1 - w_il) - t_i >= 0
    for i in range(n):
        for l in range(n):
            w = T("w", (i, l))
            base = terms((1.0, T("theta", l)), (UB[i], 1.0), (-1.0, T("t", i)))
            if isinstance(w, float):
                base = terms((1.0, T("theta", l)), (UB[i] * (1 - w), 1.0),
                             (-1.0, T("t", i)))
            else:
                base[w] = base.get(w, 0.0) - UB[i]
            ineqs.append((f"h1[{i},{l}]", base))
    # h2: theta_l - theta_{l+1} >= 0
    for l in range(n - 1):
        ineqs.append((f"h2[{l}]", terms((1.0, T("theta", l)),
                                        (-1.0, T("theta", l + 1)))))
    # h3: t_i + UB_i (1 - z_ij) - u_ij >= 0
    for i in range(n):
        for j in range(p):
            z = T("z", (i, j))
            base = terms((1.0, T("t", i)), (UB[i], 1.0), (-1.0, T("u", (i, j))))
            if isinstance(z, float):
                base = terms((1.0, T("t", i)), (UB[i] * (1 - z), 1.0),
                             (-1.0, T("u", (i, j))))
            else:
                base[z] = base.get(z, 0.0) - UB[i]
            ineqs.append((f"h3[{i},{j}]", base))
    # h4/h5: v_ijk -+ (x_jk - a_ik) >= 0
    for i in range(n):
        for j in range(p):
            for k in range(d):
                v = T("v", (i, j, k))
                x = T("x", (j, k))
                ineqs.append((f"h4[{i},{j},{k}]",
                              terms((1.0, v), (-1.0, x), (pts[i, k], 1.0))))
                ineqs.append((f"h5[{i},{j},{k}]",
                              terms((1.0, v), (1.0, x), (-pts[i, k], 1.0))))
    # h6: zeta^s u^(r-s) - v^r >= 0   (degree r)
    for i in range(n):
        for j in range(p):
            for k in range(d):
                lead = mono_mul(_as_mono(vt.term("zeta", (i, j, k), s)),
                                _as_mono(vt.term("u", (i, j), r - s))
                                if r > s else MONO_ONE)
                pol = {lead: 1.0}
                vr = _as_mono(vt.term("v", (i, j, k), r))
                pol[vr] = pol.get(vr, 0.0) - 1.0
                ineqs.append((f"h6[{i},{j},{k}]", pol))
    # h7: u_ij - sum_k zeta_ijk >= 0
    for i in range(n):
        for j in range(p):
            pol = terms((1.0, T("u", (i, j))))
            for k in range(d):
                zt = T("zeta", (i, j, k))
                pol[zt] = pol.get(zt, 0.0) - 1.0
            ineqs.append((f"h7[{i},{j}]", pol))
    # h8..h10: assignment and permutation equalities
    for i in range(n):
        pol = terms((-1.0, 1.0))
        live = False
        for j in range(p):
            z = T("z", (i, j))
            if isinstance(z, float):
                pol[MONO_ONE] = pol.get(MONO_ONE, 0.0) + z
            else:
                pol[z] = pol.get(z, 0.0) + 1.0
                live = True
        if live:
            eqs.append((f"h8[{i}]", {m: c for m, c in pol.items() if c != 0.0}))
    for l in range(n):
        pol = terms((-1.0, 1.0))
        live = False
        for i in range(n):
            w = T("w", (i, l))
            if isinstance(w, float):
                pol[MONO_ONE] = pol.get(MONO_ONE, 0.0) + w
            else:
                pol[w] = pol.get(w, 0.0) + 1.0
                live = True
        if live:
            eqs.append((f"h9[{l}]", {m: c for m, c in pol.items() if c != 0.0}))
    for i in range(n):
        pol = terms((-1.0, 1.0))
        live = False
        for l in range(n):
            w = T("w", (i, l))
            if isinstance(w, float):
                pol[MONO_ONE] = pol.get(MONO_ONE, 0.0) + w
            else:
                pol[w] = pol.get(w, 0.0) + 1.0
                live = True
        if live:
            eqs.append((f"h10[{i}]", {m: c for m, c in pol.items() if c != 0.0}))
    # binary domains as polynomial equalities
    for (fam, key), idx in vt.index.items():
        if fam in ("w", "z"):
            eqs.append((f"bin-{fam}{key}", {var_mono(idx, 2): 1.0,
                                            var_mono(idx): -1.0}))
    # K membership: demand box and Euclidean ball per facility
    for j in range(p):
        ball = {MONO_ONE: M2 * M2}
        for k in range(d):
            x = _as_mono(vt.term("x", (j, k)))
            ineqs.append((f"K-lo[{j},{k}]", {x: 1.0, MONO_ONE: -lo[k]}))
            ineqs.append((f"K-hi[{j},{k}]", {x: -1.0, MONO_ONE: hi[k]}))
            x2 = _as_mono(vt.term("x", (j, k), 2))
            ball[x2] = ball.get(x2, 0.0) - 1.0
        ineqs.append((f"K-ball[{j}]", ball))
    # compactness boxes on the lifted variables
    for (fam, key), idx in sorted(vt.index.items(), key=lambda kv: kv[1]):
        if fam in ("w", "z"):
            continue
        if fam == "x":
            continue
        m = var_mono(idx)
        ineqs.append((f"lo-{fam}{key}", {m: 1.0}))
        cap = ubmax
        if fam == "u":
            cap = float(UB[key[0]])
        elif fam in ("v", "zeta"):
            cap = float(UB[key[0]])
        ineqs.append((f"hi-{fam}{key}", {m: -1.0, MONO_ONE: cap}))
    # objective sum_l lambda_l theta_l
    obj: dict = {}
    lam = instance.weights.lam
    for l in range(n):
        th = _as_mono(vt.term("theta", l))
        obj[th] = obj.get(th, 0.0) + float(lam[l])
    return ineqs, eqs, obj


def _as_mono(t):
    if isinstance(t, (float, int)):
        raise ValueError("expected a live variable, got a presolved constant")
    return t


def relaxation_order_floor(instance: OrderedMedianInstance) -> int:
    """r0 = max ceil(deg/2) over objective, K polynomials and the h-list."""
    r = instance.norm.r
    return max(1, (r + 1) // 2)


def build_dense(instance: OrderedMedianInstance, r: int,
                presolve: bool = True) -> MomentRelaxation:
    """Dense relaxation: one moment block over all lifted variables, one
    localizing block per inequality, and equality constraints lifted by
    monomial multipliers up to the matching order."""
    if not isinstance(instance.weights, SAWeights):
        raise ValueError("hierarchy builders need a single-allocation instance")
    r0 = relaxation_order_floor(instance)
    if r < r0:
        raise ValueError(f"relaxation order {r} below r0 = {r0}")
    vt = mfomp_variables(instance.n, instance.p, instance.d, presolve=presolve)
    ineqs, eqs, obj = _mfomp_polynomials(instance, vt)
    indexer = MomentIndexer()
    allv = list(range(vt.nv1))
    blocks = [moment_matrix(allv, r, indexer, tag="moment")]
    for tag, g in ineqs:
        blocks.append(localizing_matrix(g, allv, r, indexer, tag=tag))
    equalities = [((  (1.0, 0),), 1.0)]  # y_0 = 1
    for tag, q in eqs:
        nu = (poly_deg(q) + 1) // 2
        for m in monomial_basis(allv, 2 * (r - nu)):
            row = _lin(indexer, poly_mul_mono(q, m))
            if row:
                equalities.append((tuple((c, idx) for idx, c in row), 0.0))
    objective = tuple((c, idx) for idx, c in _lin(indexer, obj))
    return MomentRelaxation(indexer=indexer, blocks=blocks,
                            equalities=_dedupe_eqs(equalities),
                            objective=objective, r=r,
                            meta={"kind": "dense", "vars": vt})


def _dedupe_eqs(eqs):
    seen = set()
    out = []
    for terms, rhs in eqs:
        key = (terms, round(rhs, 12))
        if key not in seen:
            seen.add(key)
            out.append((terms, rhs))
    return out


# -- correlative sparsity ------------------------------------------------------


def sparse_groups(vt: POPVariables):
    """The variable-index family I~(0..p+n) of the sparse hierarchy."""
    n, p = vt.n, vt.p
    xs = vt.family_vars("x")
    ts = vt.family_vars("t")
    thetas = vt.family_vars("theta")
    groups = []
    groups.append(sorted(set(xs) | set(thetas) | set(ts)))
    for j in range(p):
        g = set(v for (f, k), v in vt.index.items()
                if (f == "x" and k[0] == j) or
                   (f in ("z", "u") and k[1] == j) or
                   (f in ("v", "zeta") and k[1] == j))
        g |= set(ts)
        groups.append(sorted(g))
    for l in range(n):
        g = set(v for (f, k), v in vt.index.items() if f == "w" and k[1] == l)
        th = [vt.var("theta", l)]
        if l + 1 < n:
            th.append(vt.var("theta", l + 1))
        g |= set(v for v in th if v is not None)
        groups.append(sorted(g))
    return groups


def verify_rip(blocks, core) -> tuple:
    """Chain condition I(j+1) cap union_{j'<=j} I(j') subseteq core."""
    core = set(core)
    seen = set(blocks[0]) if blocks else set()
    for j in range(1, len(blocks)):
        inter = set(blocks[j]) & seen
        if not inter <= core:
            return False, j
        seen |= set(blocks[j])
    return True, None


def build_sparse(instance: OrderedMedianInstance, r: int,
                 presolve: bool = True) -> MomentRelaxation:
    """Correlatively sparse relaxation: one moment block per group I~(.),
    localizing blocks over the group owning each constraint's variables,
    plain linear equality rows for assignment/permutation/binary domains."""
    if not isinstance(instance.weights, SAWeights):
        raise ValueError("hierarchy builders need a single-allocation instance")
    r0 = relaxation_order_floor(instance)
    if r < r0:
        raise ValueError(f"relaxation order {r} below r0 = {r0}")
    vt = mfomp_variables(instance.n, instance.p, instance.d, presolve=presolve)
    n, p = vt.n, vt.p
    ineqs, eqs, obj = _mfomp_polynomials(instance, vt)
    groups = sparse_groups(vt)
    indexer = MomentIndexer()
    blocks = []
    for gi, grp in enumerate(groups):
        blocks.append(moment_matrix(grp, r, indexer, tag=f"moment-I({gi})"))

    def owner(g: dict) -> list:
        used = set(v for m in g for v, _ in m)
        for gi, grp in enumerate(groups):
            if used <= set(grp):
                return grp
        # h1-style rows mention t outside I~(p+l); fall back to the w-group
        best, cover = groups[0], -1
        for gi, grp in enumerate(groups):
            c = len(used & set(grp))
            if c > cover:
                best, cover = grp, c
        return best

    for tag, g in ineqs:
        blocks.append(localizing_matrix(g, owner(g), r, indexer, tag=tag))
    equalities = [(((1.0, 0),), 0.0)]
    equalities = [(((1.0, 0),), 1.0)]
    for tag, q in eqs:
        row = _lin(indexer, q)
        if row:
            equalities.append((tuple((c, idx) for idx, c in row), 0.0))
    objective = tuple((c, idx) for idx, c in _lin(indexer, obj))
    return MomentRelaxation(indexer=indexer, blocks=blocks,
                            equalities=_dedupe_eqs(equalities),
                            objective=objective, r=r,
                            meta={"kind": "sparse", "vars": vt,
                                  "groups": groups})


# -- solving and diagnostics ----------------------------------------------------


def to_conic(relax: MomentRelaxation):
    """Lower a relaxation to the embedded solver's cone IR: variables are
    the y's, PSD blocks become affine-slack cones (no auxiliaries)."""
    from ordloc.cone_ir import EQ, ConicProgram

    prog = ConicProgram()
    yvars = [prog.add_var(f"y[{i}]") for i in range(relax.num_y)]
    sq2 = math.sqrt(2.0)
    for bi, blk in enumerate(relax.blocks):
        side = blk.side
        entries = []
        for rr in range(side):
            for cc in range(rr, side):
                scale = 1.0 if rr == cc else sq2
                coeffs = {}
                for coef, idx in blk.entries.get((rr, cc), ()):
                    # slack = const - coeffs.x must equal scale*M(y)_{rc}
                    coeffs[yvars[idx]] = coeffs.get(yvars[idx], 0.0) - scale * coef
                entries.append((coeffs, 0.0))
        if side == 1:
            (cf, cv) = entries[0]
            prog.add_affine_cone("nonneg", [(cf, cv)])
        else:
            prog.add_affine_cone("psd", entries)
    for terms, rhs in relax.equalities:
        prog.add_row({yvars[idx]: c for c, idx in terms}, EQ, rhs, "eq")
    prog.set_objective({yvars[idx]: c for c, idx in relax.objective})
    return prog


def solve_relaxation(relax: MomentRelaxation, tol: float = 1e-8,
                     max_iter: int = 100000):
    """Toy-scale solve; returns (value, certified_value, y, Solution).

    ``certified_value`` subtracts a residual-based margin, giving a number
    that is a lower bound on the exact relaxation value up to first-order
    solver guarantees (used when a one-sided comparison matters)."""
    from ordloc import conic_solver as cs

    prog = to_conic(relax)
    sol = cs.solve_program(prog, cs.Settings(tol=tol, max_iter=max_iter))
    y = sol.x[:relax.num_y]
    value = float(sum(c * y[idx] for c, idx in relax.objective))
    ny = 1.0 + float(np.linalg.norm(sol.y)) if len(sol.y) else 1.0
    nx = 1.0 + float(np.linalg.norm(sol.x))
    safety = 2.0 * (sol.pres * ny + sol.dres * nx + sol.gap * (1.0 + abs(value)))
    return value, value - safety, y, sol


@dataclass
class FlatnessReport:
    rank_r: int
    rank_low: int
    flat: bool
    phi: Optional[int]
    singular_values: np.ndarray


def check_rank_condition(relax_or_block, y: np.ndarray, r: int, r0: int,
                         rank_tol: float = 1e-6) -> FlatnessReport:
    """Numerical flatness check rank M_r = rank M_{r-r0} on the (first)
    moment block; extraction itself is out of scope."""
    blk = relax_or_block
    if isinstance(relax_or_block, MomentRelaxation):
        blk = relax_or_block.blocks[0]
    M = blk.numeric(np.asarray(y))
    degs = [mono_deg(m) for m in blk.basis]
    low = sum(1 for dd in degs if dd <= r - r0)
    sv_full = np.linalg.svd(M, compute_uv=False)
    sv_low = np.linalg.svd(M[:low, :low], compute_uv=False)

    def numrank(sv):
        if len(sv) == 0 or sv[0] <= 0:
            return 0
        return int(np.sum(sv >= rank_tol * sv[0]))

    r_full = numrank(sv_full)
    r_low = numrank(sv_low)
    return FlatnessReport(rank_r=r_full, rank_low=r_low, flat=r_full == r_low,
                          phi=r_full if r_full == r_low else None,
                          singular_values=sv_full)
