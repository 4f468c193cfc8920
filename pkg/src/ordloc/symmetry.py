"""Symmetric-group machinery for facility-relabeling reduction.

Partitions with dominance, generalized semistandard tableaux, Specht
polynomials spanning the irreducible pieces of monomial orbit spaces,
symmetry-adapted bases for the facility-indexed variable blocks, the
orbit-canonicalizing moment functional, block moment relaxations, and the
closed-form size counts with their consistency flags.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from ordloc.model import OrderedMedianInstance
from ordloc.moment_hierarchy import (MONO_ONE, MomentIndexer, MomentMatrixBlock,
                                     MomentRelaxation, _dedupe_eqs, _lin,
                                     build_dense, mfomp_variables, mono_deg,
                                     mono_mul, monomial_basis, poly_deg,
                                     var_mono)

# -- partitions ----------------------------------------------------------------


def partitions(p: int) -> list:
    """All partitions of p as non-increasing tuples, reverse-lex order."""
    out = []

    def rec(rest, maxpart, prefix):
        if rest == 0:
            out.append(tuple(prefix))
            return
        for part in range(min(rest, maxpart), 0, -1):
            rec(rest - part, part, prefix + [part])

    rec(p, p, [])
    return out


def dominates(lam: tuple, mu: tuple) -> bool:
    """lam dominates mu: prefix sums of lam majorize those of mu."""
    if sum(lam) != sum(mu):
        return False
    a = b = 0
    for i in range(max(len(lam), len(mu))):
        a += lam[i] if i < len(lam) else 0
        b += mu[i] if i < len(mu) else 0
        if a < b:
            return False
    return True


def specht_dimension(shape: tuple) -> int:
    """Number of standard Young tableaux (hook length formula)."""
    cells = [(r, c) for r, ln in enumerate(shape) for c in range(ln)]
    cols = [sum(1 for ln in shape if ln > c) for c in range(shape[0])]
    hooks = 1
    for (r, c) in cells:
        hooks *= (shape[r] - c) + (cols[c] - r) - 1
    return math.factorial(sum(shape)) // hooks


# -- contents and tableaux -------------------------------------------------------


def content_of(beta) -> tuple:
    """Distinct exponent values ordered by multiplicity (desc, ties by first
    occurrence) and the multiplicity partition mu."""
    beta = tuple(int(b) for b in beta)
    first: dict = {}
    count: dict = {}
    for pos, b in enumerate(beta):
        count[b] = count.get(b, 0) + 1
        first.setdefault(b, pos)
    vals = sorted(count, key=lambda b: (-count[b], first[b]))
    b_vec = tuple(vals)
    mu = tuple(count[b] for b in vals)
    return b_vec, mu


def semistandard_tableaux(shape: tuple, content: tuple,
                          convention: str = "classic") -> list:
    """Generalized semistandard tableaux of the given shape and content.

    ``classic``: rows weakly increasing (matches the worked example listing
    [1 2]); ``paper``: rows weakly decreasing, per the literal definition.
    Columns strictly increase under both.  Lexicographic output order.
    """
    if sum(shape) != sum(content):
        return []
    ncell = sum(shape)
    entries: list = []
    for val, mult in enumerate(content, start=1):
        entries.extend([val] * mult)
    rows_nondecreasing = convention == "classic"
    out = []
    shape_cols = [sum(1 for ln in shape if ln > c) for c in range(shape[0])]
    tab = [[0] * ln for ln in shape]
    remaining = sorted(set(entries))
    counts = {v: entries.count(v) for v in remaining}

    cells = [(r, c) for r, ln in enumerate(shape) for c in range(ln)]

    def ok(r, c, val):
        if c > 0:
            left = tab[r][c - 1]
            if rows_nondecreasing and val < left:
                return False
            if not rows_nondecreasing and val > left:
                return False
        if r > 0 and val <= tab[r - 1][c]:
            return False
        return True

    def rec(idx):
        if idx == ncell:
            out.append(tuple(tuple(row) for row in tab))
            return
        r, c = cells[idx]
        for val in sorted(counts):
            if counts[val] == 0 or not ok(r, c, val):
                continue
            tab[r][c] = val
            counts[val] -= 1
            rec(idx + 1)
            counts[val] += 1
            tab[r][c] = 0

    rec(0)
    return out


# -- Specht polynomials ----------------------------------------------------------


def _standard_filling(shape: tuple):
    """Column-major standard tableau (rows and columns increasing)."""
    tab = [[0] * ln for ln in shape]
    nxt = 1
    for c in range(shape[0]):
        for r in range(len(shape)):
            if c < shape[r]:
                tab[r][c] = nxt
                nxt += 1
    return tab


def _row_class(T: tuple):
    """Row-equivalence class: distinct rearrangements within each row."""
    per_row = []
    for row in T:
        per_row.append(sorted(set(itertools.permutations(row))))
    for combo in itertools.product(*per_row):
        yield combo


@dataclass
class SpechtPolynomial:
    shape: tuple
    tableau: tuple
    beta: tuple
    coeffs: dict     # monomial (over Y_1..Y_p variable ids 0..p-1) -> coef

    @property
    def degree(self) -> int:
        return max((mono_deg(m) for m in self.coeffs), default=0)


def specht_polynomial(shape: tuple, T: tuple, beta,
                      var_ids: Optional[list] = None) -> SpechtPolynomial:
    """Sum over the row-equivalence class of products of column Vandermonde
    determinants with exponents from the content values of beta."""
    b_vec, mu = content_of(beta)
    p = len(beta)
    if var_ids is None:
        var_ids = list(range(p))
    t_std = _standard_filling(shape)
    ncols = shape[0]
    total: dict = {}
    for S in _row_class(tuple(tuple(r) for r in T)):
        prod: dict = {MONO_ONE: 1.0}
        for c in range(ncols):
            col_vars = [t_std[r][c] for r in range(len(shape)) if c < shape[r]]
            col_exps = [b_vec[S[r][c] - 1] for r in range(len(shape)) if c < shape[r]]
            q = len(col_vars)
            det: dict = {}
            for perm in itertools.permutations(range(q)):
                sign = 1.0
                # permutation parity
                inv = sum(1 for a in range(q) for b in range(a + 1, q)
                          if perm[a] > perm[b])
                sign = -1.0 if inv % 2 else 1.0
                m: dict = {}
                for pos in range(q):
                    e = col_exps[perm[pos]]
                    if e:
                        vid = var_ids[col_vars[pos] - 1]
                        m[vid] = m.get(vid, 0) + e
                mono = tuple(sorted(m.items()))
                det[mono] = det.get(mono, 0.0) + sign
            prod = _poly_mul(prod, det)
        for m, cc in prod.items():
            total[m] = total.get(m, 0.0) + cc
    total = {m: c for m, c in total.items() if abs(c) > 1e-12}
    return SpechtPolynomial(shape=shape, tableau=tuple(tuple(r) for r in T),
                            beta=tuple(int(b) for b in beta), coeffs=total)


def _poly_mul(a: dict, b: dict) -> dict:
    out: dict = {}
    for ma, ca in a.items():
        for mb, cb in b.items():
            m = mono_mul(ma, mb)
            out[m] = out.get(m, 0.0) + ca * cb
    return out


# -- symmetry-adapted bases --------------------------------------------------------


def _orbit_reps(p: int, degree: int):
    """Non-increasing exponent vectors of each total degree <= degree."""
    for s in range(degree + 1):
        for beta in _partitions_into(s, p):
            yield beta


def _partitions_into(total: int, parts: int):
    """Non-increasing nonnegative integer vectors of given length and sum."""
    def rec(rest, k, maxv, prefix):
        if k == 0:
            if rest == 0:
                yield tuple(prefix)
            return
        for v in range(min(rest, maxv), -1, -1):
            yield from rec(rest - v, k - 1, v, prefix + [v])
    yield from rec(total, parts, total, [])


def sym_adapted_basis_1block(p: int, k: int, convention: str = "classic",
                             var_ids: Optional[list] = None) -> dict:
    """Symmetry-adapted basis of R[Y_1..Y_p] up to degree k.

    Returns {shape: [SpechtPolynomial, ...]}: one representative per
    irreducible copy (per orbit, dominating shape and semistandard tableau),
    deduplicated."""
    out: dict = {}
    seen = set()
    for beta in _orbit_reps(p, k):
        b_vec, mu = content_of(beta)
        for lam in partitions(p):
            if not dominates(lam, mu):
                continue
            for T in semistandard_tableaux(lam, mu, convention=convention):
                sp = specht_polynomial(lam, T, beta, var_ids=var_ids)
                if not sp.coeffs or sp.degree > k:
                    continue
                key = (lam, tuple(sorted(sp.coeffs.items())))
                if key in seen:
                    continue
                seen.add(key)
                out.setdefault(lam, []).append(sp)
    return out


@dataclass
class SymBasisElement:
    factors: dict          # block index -> (shape, SpechtPolynomial)
    plain: tuple           # monomial over the non-symmetric variables
    degree: int


@dataclass
class SymBasisReport:
    standard_total: int            # C(nv1 + k, k) over all variables
    standard_symmetric: int        # count over the facility-indexed variables
    per_shape: dict                # shape -> copies (1-block construction)
    orbit_count: int               # monomial orbits of degree <= k (Burnside)
    isotypic_dims: Optional[dict] = None   # p = 2: parity -> dimension
    elements: Optional[list] = None


def facility_blocks(vt) -> list:
    """Facility-symmetric variable blocks x(.,k), z(i,.), u(i,.), v(i,.,k),
    zeta(i,.,k): each a list of p variable ids ordered by facility."""
    n, p, d = vt.n, vt.p, vt.d
    blocks = []
    for k in range(d):
        blocks.append([vt.var("x", (j, k)) for j in range(p)])
    for i in range(n):
        blk = [vt.var("z", (i, j)) for j in range(p)]
        if all(b is not None for b in blk):
            blocks.append(blk)
    for i in range(n):
        blocks.append([vt.var("u", (i, j)) for j in range(p)])
    for i in range(n):
        for k in range(d):
            blocks.append([vt.var("v", (i, j, k)) for j in range(p)])
    for i in range(n):
        for k in range(d):
            blocks.append([vt.var("zeta", (i, j, k)) for j in range(p)])
    return blocks


def facility_permutation_maps(vt) -> list:
    """One variable-relabeling array per sigma in S_p (the action phi_Y)."""
    p = vt.p
    maps = []
    for sigma in itertools.permutations(range(p)):
        mp = np.arange(vt.nv1)
        for (fam, key), idx in vt.index.items():
            if fam == "x":
                j, k = key
                mp[idx] = vt.index[(fam, (sigma[j], k))]
            elif fam in ("z", "u"):
                i, j = key
                mp[idx] = vt.index[(fam, (i, sigma[j]))]
            elif fam in ("v", "zeta"):
                i, j, k = key
                mp[idx] = vt.index[(fam, (i, sigma[j], k))]
        maps.append(mp)
    return maps


def L_sym(mono: tuple, perm_maps) -> tuple:
    """Canonical (lexicographically least) representative of the monomial's
    orbit under the facility-permutation action."""
    if not mono:
        return mono
    best = None
    for mp in perm_maps:
        cand = tuple(sorted((int(mp[v]), e) for v, e in mono))
        if best is None or cand < best:
            best = cand
    return best


def orbit_count(vt, k: int) -> int:
    """Number of monomial orbits of degree <= k under the facility action
    (Burnside over S_p using cycle-type fixed-monomial counts)."""
    p = vt.p
    perm_maps = facility_permutation_maps(vt)
    total = 0
    nv = vt.nv1
    for mp in perm_maps:
        # monomials fixed by the permutation = monomials over its orbits
        seen = set()
        cycles = 0
        for v in range(nv):
            if v in seen:
                continue
            cur = v
            while cur not in seen:
                seen.add(cur)
                cur = int(mp[cur])
            cycles += 1
        # fixed monomials of degree <= k over `cycles` orbit-variables, where
        # a cycle of length L contributes degree L per power
        lens = []
        seen = set()
        for v in range(nv):
            if v in seen:
                continue
            cur, ln = v, 0
            while cur not in seen:
                seen.add(cur)
                cur = int(mp[cur])
                ln += 1
            lens.append(ln)
        total += _count_bounded(lens, k)
    return total // len(perm_maps)


def _count_bounded(weights, k: int) -> int:
    """Number of multisets with item weights summing to <= k."""
    dp = np.zeros(k + 1, dtype=object)
    dp[0] = 1
    for w in weights:
        for s in range(w, k + 1):
            dp[s] += dp[s - w]
    return int(sum(dp))


def sym_adapted_basis_full(instance: OrderedMedianInstance, k: int,
                           convention: str = "classic",
                           list_elements: bool = False) -> SymBasisReport:
    """Products of per-block adapted elements with plain monomials over
    (w, t, theta), filtered to degree <= k, with size bookkeeping."""
    vt = mfomp_variables(instance.n, instance.p, instance.d, presolve=False)
    n, p, d = vt.n, vt.p, vt.d
    blocks = facility_blocks(vt)
    plain_vars = [v for (f, _), v in sorted(vt.index.items(), key=lambda kv: kv[1])
                  if f in ("w", "t", "theta")]
    nsym = len(blocks) * p
    standard_symmetric = math.comb(nsym + k, k)
    standard_total = math.comb(vt.nv1 + k, k)

    per_block_basis = sym_adapted_basis_1block(p, k, convention=convention)
    per_shape: dict = {}
    for shape, elems in per_block_basis.items():
        per_shape[shape] = len(elems)

    elements = None
    iso = None
    if list_elements or p <= 2:
        # enumerate degree-feasible products (count only unless asked)
        block_elems = []
        for b, ids in enumerate(blocks):
            cur = []
            for shape, elems in sym_adapted_basis_1block(p, k, convention,
                                                         var_ids=ids).items():
                for sp in elems:
                    cur.append((shape, sp))
            block_elems.append(cur)
        count_by_parity = {0: 0, 1: 0}
        elements = [] if list_elements else None

        def parity(shape):
            # for S_2: (2) trivial, (1,1) sign
            return 0 if shape == (p,) or p == 1 else 1

        plain_monos = monomial_basis(plain_vars, k)

        def rec(bi, deg, factors, par):
            if deg > k:
                return
            if bi == len(block_elems):
                for m in plain_monos:
                    if deg + mono_deg(m) <= k:
                        count_by_parity[par] += 1
                        if elements is not None:
                            elements.append(SymBasisElement(dict(factors), m,
                                                            deg + mono_deg(m)))
                return
            rec(bi + 1, deg, factors, par)
            for shape, sp in block_elems[bi]:
                if sp.degree == 0:
                    continue
                if deg + sp.degree > k:
                    continue
                factors[bi] = (shape, sp)
                rec(bi + 1, deg + sp.degree, factors, (par + parity(shape)) % 2)
                del factors[bi]

        if p <= 2:
            rec(0, 0, {}, 0)
            iso = dict(count_by_parity)
    return SymBasisReport(standard_total=standard_total,
                          standard_symmetric=standard_symmetric,
                          per_shape=per_shape,
                          orbit_count=orbit_count(vt, k),
                          isotypic_dims=iso,
                          elements=elements)


# -- symmetry-reduced relaxation -----------------------------------------------


def build_sym_relaxation(instance: OrderedMedianInstance, r: int,
                         presolve: bool = True) -> MomentRelaxation:
    """Moment relaxation with orbit-glued moment variables; for p <= 2 the
    moment block is conjugated into parity-isotypic blocks, and localizing
    blocks keep one representative per constraint orbit.

    The optimal value equals the dense relaxation's at every order (the
    problem is invariant, so averaging any optimal y over the group is
    feasible, and the glued program is exactly the invariant restriction)."""
    from ordloc.moment_hierarchy import _mfomp_polynomials, localizing_matrix

    vt = mfomp_variables(instance.n, instance.p, instance.d, presolve=presolve)
    p = vt.p
    perm_maps = facility_permutation_maps(vt)
    canon = lambda m: L_sym(m, perm_maps)
    indexer = MomentIndexer(canonicalize=canon)
    ineqs, eqs, obj = _mfomp_polynomials(instance, vt)
    allv = list(range(vt.nv1))

    blocks = []
    basis = monomial_basis(allv, r)
    if p == 2:
        swap = perm_maps[1]
        orbit: dict = {}
        for m in basis:
            key = L_sym(m, perm_maps)
            orbit.setdefault(key, []).append(m)
        triv, sign = [], []
        for key, members in sorted(orbit.items()):
            if len(members) == 1:
                triv.append(((1.0, members[0]),))
            else:
                a, b = members
                triv.append(((1.0, a), (1.0, b)))
                sign.append(((1.0, a), (-1.0, b)))
        for tag, combos in (("moment-sym-trivial", triv), ("moment-sym-sign", sign)):
            side = len(combos)
            entries = {}
            for rr in range(side):
                for cc in range(rr, side):
                    acc: dict = {}
                    for ca, ma in combos[rr]:
                        for cb, mb in combos[cc]:
                            idx = indexer.id(mono_mul(ma, mb))
                            acc[idx] = acc.get(idx, 0.0) + ca * cb
                    entries[(rr, cc)] = tuple((c, i) for i, c in sorted(acc.items())
                                              if c != 0.0)
            blocks.append(MomentMatrixBlock(basis=list(range(side)),
                                            entries=entries,
                                            g={MONO_ONE: 1.0}, tag=tag))
    else:
        from ordloc.moment_hierarchy import moment_matrix
        blocks.append(moment_matrix(allv, r, indexer, tag="moment-sym"))

    # localizing blocks: one representative per constraint orbit
    def poly_key(g: dict) -> tuple:
        return tuple(sorted((m, round(c, 10)) for m, c in g.items()))

    def orbit_key(g: dict) -> tuple:
        best = None
        for mp in perm_maps:
            moved = {}
            for m, c in g.items():
                mm = tuple(sorted((int(mp[v]), e) for v, e in m))
                moved[mm] = moved.get(mm, 0.0) + c
            key = poly_key(moved)
            if best is None or key < best:
                best = key
        return best

    seen = set()
    for tag, g in ineqs:
        key = orbit_key(g)
        if key in seen:
            continue
        seen.add(key)
        blocks.append(localizing_matrix(g, allv, r, indexer, tag=tag))

    equalities = [(((1.0, 0),), 1.0)]
    seen_eq = set()
    for tag, q in eqs:
        key = orbit_key(q)
        if key in seen_eq:
            continue
        seen_eq.add(key)
        nu = (poly_deg(q) + 1) // 2
        for m in monomial_basis(allv, 2 * (r - nu)):
            from ordloc.moment_hierarchy import poly_mul_mono
            row = _lin(indexer, poly_mul_mono(q, m))
            if row:
                equalities.append((tuple((c, idx) for idx, c in row), 0.0))
    objective = tuple((c, idx) for idx, c in _lin(indexer, obj))
    return MomentRelaxation(indexer=indexer, blocks=blocks,
                            equalities=_dedupe_eqs(equalities),
                            objective=objective, r=r,
                            meta={"kind": "sym", "vars": vt})


# -- counting formulas -----------------------------------------------------------


@dataclass
class CountReport:
    n: int
    sym_formula: Fraction
    std_formula: Fraction
    diff_formula: int
    quartic_difference: Fraction
    formulas_consistent: bool
    sym_formula_integral: bool
    enumerated_orbits: Optional[int] = None
    enumerated_standard: Optional[int] = None


def count_formulas(n: int, enumerate_upto: int = 6) -> CountReport:
    """The closed-form basis counts printed for 2-median planar problems,
    their stated difference, internal-consistency flags, and (small n) the
    enumerated counts of the actual construction."""
    nn = Fraction(n)
    sym = (nn ** 4 + 16 * nn ** 3 + 71 * nn ** 2 + 43 * nn + 68) / 2
    std = (nn ** 4 + 28 * nn ** 3 + 207 * nn ** 2 + 154 * nn + 30) / 2
    diff = 6 * n ** 3 + 68 * n ** 2 + 43 * n + 7
    qdiff = std - sym
    enum_orb = enum_std = None
    if 1 <= n <= enumerate_upto:
        vt = mfomp_variables(n, 2, 2, presolve=False)
        enum_std = math.comb(vt.nv1 + 2, 2)
        enum_orb = orbit_count(vt, 2)
    return CountReport(n=n, sym_formula=sym, std_formula=std, diff_formula=diff,
                       quartic_difference=qdiff,
                       formulas_consistent=(qdiff == diff),
                       sym_formula_integral=(sym.denominator == 1),
                       enumerated_orbits=enum_orb,
                       enumerated_standard=enum_std)
