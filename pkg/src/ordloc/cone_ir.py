"""Conic-program IR and the rational-power second-order-cone decomposition.

A :class:`ConicProgram` holds variables, a linear objective (minimize),
linear rows with sense, cone blocks over variable index tuples, and a set
of binary-marked variables.  ``to_standard_form`` lowers everything to

    min c'x  s.t.  Ax + s = b,  s in K = Zero x Nonneg x SOC x ... x PSD

with rotated cones pre-rotated into plain second-order cones.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np
import scipy.sparse as sp

# row senses
LE, GE, EQ = "<=", ">=", "=="


@dataclass(frozen=True)
class ConeBlock:
    """Cone membership of a scaled variable subvector.

    kind "nonneg":  x_I >= 0 componentwise.
    kind "soc":     v_1 >= ||v_2..k||_2          where v = scale * x_I.
    kind "rsoc":    2 v_1 v_2 >= ||v_3..k||_2^2, v_1, v_2 >= 0.
    kind "psd":     svec entries of a PSD matrix (off-diagonals carry sqrt(2)).
    """

    kind: str
    indices: tuple
    scale: Optional[tuple] = None

    def scaled(self) -> np.ndarray:
        if self.scale is None:
            return np.ones(len(self.indices))
        return np.asarray(self.scale, dtype=float)


@dataclass
class Row:
    coeffs: dict
    sense: str
    rhs: float
    family: str = ""


@dataclass(frozen=True)
class VarHandle:
    index: int
    name: str


class ConicProgram:
    def __init__(self):
        self.names: list[str] = []
        self.objective: dict[int, float] = {}
        self.obj_offset: float = 0.0
        self.rows: list[Row] = []
        self.cones: list[ConeBlock] = []
        self.affine_cones: list = []   # (kind, [(coeffs, const)]); slack = const - coeffs.x in cone
        self.binaries: set[int] = set()

    # -- construction -----------------------------------------------------

    @property
    def num_vars(self) -> int:
        return len(self.names)

    def add_var(self, name: str, nonneg: bool = False) -> int:
        idx = len(self.names)
        self.names.append(name)
        if nonneg:
            self.cones.append(ConeBlock("nonneg", (idx,)))
        return idx

    def add_vars(self, names: Iterable[str], nonneg: bool = False) -> list[int]:
        idxs = [self.add_var(nm) for nm in names]
        if nonneg and idxs:
            self.cones.append(ConeBlock("nonneg", tuple(idxs)))
        return idxs

    def add_row(self, coeffs: dict, sense: str, rhs: float, family: str = "") -> int:
        assert sense in (LE, GE, EQ)
        self.rows.append(Row(dict(coeffs), sense, float(rhs), family))
        return len(self.rows) - 1

    def add_cone(self, kind: str, indices: Sequence[int], scale=None) -> ConeBlock:
        blk = ConeBlock(kind, tuple(indices), None if scale is None else tuple(scale))
        self.cones.append(blk)
        return blk

    def add_affine_cone(self, kind: str, entries):
        """Cone membership of an affine image: (const_k - coeffs_k . x)_k in K.

        ``entries`` is a list of (coeffs dict, const); for "psd" the entries
        are svec coordinates (upper triangle, off-diagonals times sqrt 2)."""
        self.affine_cones.append((kind, [(dict(cf), float(cv)) for cf, cv in entries]))

    def set_objective(self, coeffs: dict, offset: float = 0.0):
        self.objective = dict(coeffs)
        self.obj_offset = float(offset)

    def add_objective_term(self, idx: int, coef: float):
        self.objective[idx] = self.objective.get(idx, 0.0) + coef

    def mark_binary(self, idx: int):
        self.binaries.add(idx)

    # -- reporting ---------------------------------------------------------

    def rows_in_family(self, family: str) -> list[int]:
        return [i for i, r in enumerate(self.rows) if r.family == family]

    def dump(self) -> str:
        """Human-readable listing of rows and cones with name tags."""
        out = [f"vars: {self.num_vars}  rows: {len(self.rows)}  cones: {len(self.cones)}"
               f"  binaries: {len(self.binaries)}"]
        obj = " + ".join(f"{c:g}*{self.names[i]}" for i, c in sorted(self.objective.items()))
        out.append(f"min {obj}")
        for i, r in enumerate(self.rows):
            lhs = " + ".join(f"{c:g}*{self.names[j]}" for j, c in sorted(r.coeffs.items()))
            tag = f"  [{r.family}]" if r.family else ""
            out.append(f"r{i}: {lhs} {r.sense} {r.rhs:g}{tag}")
        for blk in self.cones:
            vs = ",".join(self.names[j] for j in blk.indices[:8])
            if len(blk.indices) > 8:
                vs += ",..."
            out.append(f"cone {blk.kind}({len(blk.indices)}): {vs}")
        return "\n".join(out)


# -- modeling helpers -------------------------------------------------------


def add_abs_value(prog: ConicProgram, x_expr: dict, a_const: float = 0.0,
                  name: str = "y", family: str = "abs") -> int:
    """Add y with rows y - (x_expr - a) >= 0 and y + (x_expr - a) >= 0.

    At any feasible point y >= |x_expr - a|; minimization drives equality.
    """
    y = prog.add_var(name)
    lo = {y: 1.0}
    hi = {y: 1.0}
    for j, c in x_expr.items():
        lo[j] = lo.get(j, 0.0) - c
        hi[j] = hi.get(j, 0.0) + c
    prog.add_row(lo, GE, -a_const, family + "+")
    prog.add_row(hi, GE, a_const, family + "-")
    return y


def add_rational_power(prog: ConicProgram, y: int, zeta: int, u: int,
                       r: int, s: int, name: str = "pw") -> dict:
    """Encode y^r <= zeta^s * u^(r-s) on the nonnegative orthant.

    Balanced binary tree over 2^ceil(log2 r) leaves (zeta repeated s times,
    u repeated r-s times, y filling the rest); each internal node w carries
    w^2 <= a*b as a rotated cone, adjacent equal leaves collapse to a plain
    reuse of the variable.  Returns counts {"cones": k, "raw": 2^l - 1}.
    """
    if r < s:
        raise ValueError(f"require r >= s, got {r} < {s}")
    if math.gcd(r, s) != 1:
        raise ValueError(f"require gcd(r, s) = 1, got ({r}, {s})")
    if r == s:
        prog.add_row({y: 1.0, zeta: -1.0}, LE, 0.0, "power-linear")
        return {"cones": 0, "raw": 0}

    lvl = max(1, math.ceil(math.log2(r)))
    width = 1 << lvl
    layer = [zeta] * s + [u] * (r - s) + [y] * (width - r)
    raw = width - 1
    cones = 0
    depth = 0
    while len(layer) > 2:
        depth += 1
        nxt = []
        for a, b in zip(layer[0::2], layer[1::2]):
            if a == b:
                nxt.append(a)  # w^2 <= a*a collapses to w = a
            else:
                w = prog.add_var(f"{name}.{depth}.{len(nxt)}", nonneg=True)
                # w^2 <= a*b  via  2*a*(b) >= (sqrt(2) w)^2
                prog.add_cone("rsoc", (a, b, w), scale=(1.0, 1.0, math.sqrt(2.0)))
                cones += 1
                nxt.append(w)
        layer = nxt
    a, b = layer
    if a == b:
        prog.add_row({y: 1.0, a: -1.0}, LE, 0.0, "power-root-linear")
    else:
        prog.add_cone("rsoc", (a, b, y), scale=(1.0, 1.0, math.sqrt(2.0)))
        cones += 1
    return {"cones": cones, "raw": raw}


def add_norm_epigraph(prog: ConicProgram, exprs: Sequence[dict], consts: Sequence[float],
                      omega: float, r: int, s: int, name: str = "nrm",
                      family: str = "norm") -> int:
    """Add u with omega * ||(expr_k - const_k)_k||_{r/s} <= u at optimality.

    Follows the absolute-value / power-tower / aggregated-row scheme: one
    y_k = |expr_k - const_k| per coordinate, a tower y_k^r <= zeta_k^s
    u^(r-s), and the row omega^(r/s) * sum_k zeta_k <= u.
    """
    u = prog.add_var(f"{name}.u", nonneg=True)
    zetas = []
    for k, (ex, cst) in enumerate(zip(exprs, consts)):
        y = add_abs_value(prog, ex, cst, name=f"{name}.y{k}", family=family + "-abs")
        z = prog.add_var(f"{name}.z{k}", nonneg=True)
        add_rational_power(prog, y, z, u, r, s, name=f"{name}.pw{k}")
        zetas.append(z)
    coeffs = {z: omega ** (r / s) for z in zetas}
    coeffs[u] = coeffs.get(u, 0.0) - 1.0
    prog.add_row(coeffs, LE, 0.0, family + "-agg")
    return u


# -- standard form -----------------------------------------------------------


@dataclass
class StandardForm:
    A: sp.csc_matrix
    b: np.ndarray
    c: np.ndarray
    cones: list          # [(kind, dim)]; psd dim is the matrix side
    binaries: set
    obj_offset: float
    num_orig_vars: int
    row_slack: np.ndarray = None   # program row index -> standard-form row
    row_sign: np.ndarray = None    # +1 for <=/==, -1 for >= (rhs scaling)

    def set_rhs(self, program_row: int, rhs: float):
        """Update one program row's right-hand side in place (A unchanged)."""
        self.b[self.row_slack[program_row]] = self.row_sign[program_row] * rhs


_SQRT2 = math.sqrt(2.0)


def to_standard_form(prog: ConicProgram) -> StandardForm:
    """Lower to slack form min c'x, Ax + s = b, s in Zero x Nonneg x SOC x PSD.

    Equality rows come first (zero cone), then inequality rows and nonneg
    blocks, then one SOC per soc/rsoc block (rsoc rotated by the orthogonal
    45-degree map), then PSD blocks.
    """
    n = prog.num_vars
    ar, ac, av = [], [], []
    b = []
    cones: list = []
    row = 0

    def put(i, j, v):
        ar.append(i)
        ac.append(j)
        av.append(v)

    eq_idx = [i for i, r in enumerate(prog.rows) if r.sense == EQ]
    ineq_idx = [i for i, r in enumerate(prog.rows) if r.sense != EQ]
    row_slack = np.zeros(len(prog.rows), dtype=int)
    row_sign = np.ones(len(prog.rows))

    for i in eq_idx:
        r = prog.rows[i]
        for j, c in r.coeffs.items():
            put(row, j, c)
        b.append(r.rhs)
        row_slack[i] = row
        row += 1
    if eq_idx:
        cones.append(("zero", len(eq_idx)))

    nonneg_count = 0
    for i in ineq_idx:
        r = prog.rows[i]
        sgn = 1.0 if r.sense == LE else -1.0
        for j, c in r.coeffs.items():
            put(row, j, sgn * c)
        b.append(sgn * r.rhs)
        row_slack[i] = row
        row_sign[i] = sgn
        row += 1
        nonneg_count += 1
    for blk in prog.cones:
        if blk.kind != "nonneg":
            continue
        sc = blk.scaled()
        for k, j in enumerate(blk.indices):
            put(row, j, -sc[k])
            b.append(0.0)
            row += 1
            nonneg_count += 1
    if nonneg_count:
        cones.append(("nonneg", nonneg_count))

    for blk in prog.cones:
        if blk.kind == "soc":
            sc = blk.scaled()
            for k, j in enumerate(blk.indices):
                put(row, j, -sc[k])
                b.append(0.0)
                row += 1
            cones.append(("soc", len(blk.indices)))
        elif blk.kind == "rsoc":
            sc = blk.scaled()
            idx = blk.indices
            if len(idx) < 3:
                raise ValueError("rsoc block needs at least 3 entries")
            # (v1+v2)/sqrt2 >= || ((v1-v2)/sqrt2, v3..) ||
            put(row, idx[0], -sc[0] / _SQRT2)
            put(row, idx[1], -sc[1] / _SQRT2)
            b.append(0.0)
            row += 1
            put(row, idx[0], -sc[0] / _SQRT2)
            put(row, idx[1], sc[1] / _SQRT2)
            b.append(0.0)
            row += 1
            for k in range(2, len(idx)):
                put(row, idx[k], -sc[k])
                b.append(0.0)
                row += 1
            cones.append(("soc", len(idx)))

    for kind, entries in prog.affine_cones:
        if kind == "psd":
            continue
        for cf, cv in entries:
            for j, c in cf.items():
                put(row, j, c)
            b.append(cv)
            row += 1
        cones.append((kind, len(entries)))

    for blk in prog.cones:
        if blk.kind != "psd":
            continue
        m = int(round((math.isqrt(8 * len(blk.indices) + 1) - 1) / 2))
        if m * (m + 1) // 2 != len(blk.indices):
            raise ValueError("psd block length is not triangular")
        sc = blk.scaled()
        for k, j in enumerate(blk.indices):
            put(row, j, -sc[k])
            b.append(0.0)
            row += 1
        cones.append(("psd", m))

    for kind, entries in prog.affine_cones:
        if kind != "psd":
            continue
        m = int(round((math.isqrt(8 * len(entries) + 1) - 1) / 2))
        if m * (m + 1) // 2 != len(entries):
            raise ValueError("psd affine cone length is not triangular")
        for cf, cv in entries:
            for j, c in cf.items():
                put(row, j, c)
            b.append(cv)
            row += 1
        cones.append(("psd", m))

    A = sp.csc_matrix((av, (ar, ac)), shape=(row, n))
    c = np.zeros(n)
    for j, v in prog.objective.items():
        c[j] = v
    return StandardForm(A=A, b=np.asarray(b, dtype=float), c=c, cones=cones,
                        binaries=set(prog.binaries), obj_offset=prog.obj_offset,
                        num_orig_vars=n, row_slack=row_slack, row_sign=row_sign)
