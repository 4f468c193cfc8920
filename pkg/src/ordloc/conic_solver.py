"""Embedded operator-splitting solver for continuous conic programs.

Solves   min c'x  s.t.  Ax + s = b,  s in K
with K a product of zero, nonnegative, second-order, and dense PSD cones,
by ADMM on the homogeneous self-dual embedding (one sparse factorization
per solve, diagonal Ruiz equilibration, over-relaxation, stall restarts).
Infeasibility is certified through the embedding's ray.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

OPTIMAL = "optimal"
PRIMAL_INFEASIBLE = "primal_infeasible"
DUAL_INFEASIBLE = "dual_infeasible"
MAX_ITER = "max_iter"
NUMERICAL_FAILURE = "numerical_failure"

PSD_SIDE_CAP = 512  # dense eigendecompositions beyond this are rejected


@dataclass
class Settings:
    tol: float = 1e-7
    max_iter: int = 200_000
    check_every: int = 25
    alpha: float = 1.7          # over-relaxation
    ruiz_passes: int = 10
    restart_every: int = 1000   # iterations without progress before a restart
    time_limit: Optional[float] = None
    verbose: bool = False


@dataclass
class Solution:
    status: str
    x: np.ndarray
    y: np.ndarray
    s: np.ndarray
    objective: float
    pres: float
    dres: float
    gap: float
    iterations: int
    solve_time: float
    certificate: Optional[np.ndarray] = None


def _tri_side(length: int) -> int:
    m = int(round((math.isqrt(8 * length + 1) - 1) / 2))
    assert m * (m + 1) // 2 == length
    return m


_SQRT2 = math.sqrt(2.0)


def _svec_to_mat(v: np.ndarray, m: int) -> np.ndarray:
    M = np.zeros((m, m))
    iu = np.triu_indices(m)
    M[iu] = v
    M.T[iu] = v
    off = iu[0] != iu[1]
    M[iu[0][off], iu[1][off]] /= _SQRT2
    M[iu[1][off], iu[0][off]] /= _SQRT2
    return M


def _mat_to_svec(M: np.ndarray) -> np.ndarray:
    m = M.shape[0]
    iu = np.triu_indices(m)
    v = M[iu].copy()
    off = iu[0] != iu[1]
    v[off] *= _SQRT2
    return v


def project_cone(v: np.ndarray, cone) -> np.ndarray:
    """Euclidean projection onto a single cone (kind, dim)."""
    kind, dim = cone
    v = np.asarray(v, dtype=float)
    if kind == "zero":
        return np.zeros_like(v)
    if kind == "free":
        return v.copy()
    if kind == "nonneg":
        return np.maximum(v, 0.0)
    if kind == "soc":
        t, z = v[0], v[1:]
        nz = np.linalg.norm(z)
        if nz <= t:
            return v.copy()
        if nz <= -t:
            return np.zeros_like(v)
        a = 0.5 * (t + nz)
        out = np.empty_like(v)
        out[0] = a
        out[1:] = (a / nz) * z
        return out
    if kind == "psd":
        m = dim
        if m > PSD_SIDE_CAP:
            raise ValueError(
                f"PSD block side {m} exceeds cap {PSD_SIDE_CAP}; "
                "use the SDPA export path for large blocks")
        M = _svec_to_mat(v, m)
        w, Q = np.linalg.eigh(M)
        w = np.maximum(w, 0.0)
        return _mat_to_svec((Q * w) @ Q.T)
    raise ValueError(f"unknown cone kind {kind}")


def _dual_kind(kind: str) -> str:
    # zero* = free; the others are self-dual
    return "free" if kind == "zero" else kind


class _Projector:
    """Vectorized projection onto a cone product; equal-size SOC blocks
    are batched into a single set of array operations."""

    def __init__(self, cones):
        self.plan = []
        pos = 0
        i = 0
        while i < len(cones):
            kind, dim = cones[i]
            if kind == "soc":
                j = i
                while j < len(cones) and cones[j] == ("soc", dim):
                    j += 1
                cnt = j - i
                self.plan.append(("soc_batch", pos, cnt, dim))
                pos += cnt * dim
                i = j
                continue
            ln = dim * (dim + 1) // 2 if kind == "psd" else dim
            self.plan.append((kind, pos, 1, dim))
            pos += ln
            i += 1
        self.length = pos

    def project(self, v: np.ndarray, dual: bool, out=None) -> np.ndarray:
        if out is None:
            out = np.empty_like(v)
        for kind, pos, cnt, dim in self.plan:
            if kind == "soc_batch":
                ln = cnt * dim
                V = v[pos:pos + ln].reshape(cnt, dim)
                t = V[:, 0]
                z = V[:, 1:]
                nz = np.sqrt(np.einsum("ij,ij->i", z, z))
                inside = nz <= t
                zero = nz <= -t
                a = 0.5 * (t + nz)
                scale = np.where(nz > 0, a / np.where(nz > 0, nz, 1.0), 0.0)
                R = np.empty_like(V)
                R[:, 0] = a
                R[:, 1:] = z * scale[:, None]
                R[inside] = V[inside]
                R[zero] = 0.0
                out[pos:pos + ln] = R.ravel()
            elif kind == "zero":
                if dual:
                    out[pos:pos + dim] = v[pos:pos + dim]
                else:
                    out[pos:pos + dim] = 0.0
            elif kind == "nonneg":
                np.maximum(v[pos:pos + dim], 0.0, out=out[pos:pos + dim])
            else:
                ln = dim * (dim + 1) // 2 if kind == "psd" else dim
                kd = _dual_kind(kind) if dual else kind
                out[pos:pos + ln] = project_cone(v[pos:pos + ln], (kd, dim))
        return out


def _project_product(v: np.ndarray, cones, dual: bool) -> np.ndarray:
    return _Projector(cones).project(v, dual)


def _cone_row_groups(cones):
    """Row index ranges that must share one equilibration factor."""
    groups = []
    pos = 0
    for kind, dim in cones:
        ln = dim * (dim + 1) // 2 if kind == "psd" else dim
        if kind in ("zero", "nonneg"):
            for i in range(pos, pos + ln):
                groups.append((i, i + 1))
        else:
            groups.append((pos, pos + ln))
        pos += ln
    return groups


def _ruiz(A: sp.csc_matrix, cones, passes: int):
    """Diagonal equilibration; rows of one cone block share a scale."""
    m, n = A.shape
    d_row = np.ones(m)
    d_col = np.ones(n)
    Aw = A.copy()
    groups = _cone_row_groups(cones)
    for _ in range(passes):
        Aa = sp.csr_matrix(abs(Aw))
        rmax = np.asarray(Aa.max(axis=1).todense()).ravel()
        for lo, hi in groups:
            g = rmax[lo:hi].max() if hi > lo else 1.0
            rmax[lo:hi] = g
        rmax[rmax == 0] = 1.0
        dr = 1.0 / np.sqrt(rmax)
        cmax = np.asarray(abs(Aw).max(axis=0).todense()).ravel()
        cmax[cmax == 0] = 1.0
        dc = 1.0 / np.sqrt(cmax)
        Aw = sp.csc_matrix(sp.diags(dr) @ Aw @ sp.diags(dc))
        d_row *= dr
        d_col *= dc
    return Aw, d_row, d_col


class _Work:
    """Scaled problem data plus the cached KKT factorization.

    The A-dependent pieces (equilibration, factorization) can be reused
    across solves that change only b (and optionally c): see ``rebind``.
    """

    def __init__(self, A, b, c, cones, settings: Settings):
        self.cones = cones
        m, n = A.shape
        self.m, self.n = m, n
        if settings.ruiz_passes > 0 and A.nnz > 0:
            As, dr, dc = _ruiz(A, cones, settings.ruiz_passes)
        else:
            As, dr, dc = sp.csc_matrix(A), np.ones(m), np.ones(n)
        self.A = As
        self.d_row = dr
        self.d_col = dc
        self.projector = _Projector(cones)
        K = sp.bmat([[sp.identity(n), As.T], [As, -sp.identity(m)]], format="csc")
        self.kkt = spla.splu(K)
        self.rebind(b, c)

    def rebind(self, b, c):
        """Refresh the b/c-dependent data (cheap: one KKT solve)."""
        bs = b * self.d_row
        cs = c * self.d_col
        # scalar normalization keeps b and c comparable in size
        self.sigma_b = 1.0 / max(np.linalg.norm(bs), 1e-10)
        self.sigma_c = 1.0 / max(np.linalg.norm(cs), 1e-10)
        self.b = bs * self.sigma_b
        self.c = cs * self.sigma_c
        self.h = np.concatenate([self.c, self.b])
        self.g = self.solve_kkt(self.c, self.b)
        denom = 1.0 + float(self.h @ self.g)
        if abs(denom) < 1e-14:
            denom = 1e-14
        self.g_denom = denom

    def solve_kkt(self, r1: np.ndarray, r2: np.ndarray) -> np.ndarray:
        # [[I, A'], [A, -I]] (zx, zy) = (r1, -r2)  solves
        # zx + A' zy = r1 ;  zy = r2 + A zx
        return self.kkt.solve(np.concatenate([r1, -r2]))

    def solve_iq(self, w: np.ndarray) -> np.ndarray:
        """Apply (I + Q)^{-1} with Q the HSDE skew matrix."""
        n, m = self.n, self.m
        wx, wy, wt = w[:n], w[n:n + m], w[-1]
        q = self.solve_kkt(wx, wy)
        zt = (wt + self.h @ q) / self.g_denom
        z = q - zt * self.g
        return np.concatenate([z, [zt]])

    # -- unscaling ---------------------------------------------------------
    # scaled problem: (Dr A Dc) xs + ss = sigma_b Dr b, cost sigma_c Dc c,
    # so x = Dc xs / sigma_b, y = Dr ys / sigma_c, s = ss / (Dr sigma_b).

    def unscale_x(self, x):
        return x * self.d_col / self.sigma_b

    def unscale_y(self, y):
        return y * self.d_row / self.sigma_c

    def unscale_s(self, s):
        return s / (self.d_row * self.sigma_b)


def residuals(A, b, c, x, y, s, dtype=float):
    """Primal/dual residuals and relative gap, recomputed from scratch."""
    Ax = A @ x.astype(dtype)
    pres = np.linalg.norm(Ax + s.astype(dtype) - b) / (1.0 + np.linalg.norm(b))
    dres = np.linalg.norm(A.T @ y.astype(dtype) + c) / (1.0 + np.linalg.norm(c))
    px = float(c @ x)
    dy = float(b @ y)
    gap = abs(px + dy) / (1.0 + abs(px) + abs(dy))
    return float(pres), float(dres), float(gap)


def certify(solution: Solution, A, b, c) -> tuple:
    """Recompute the residual triple in extended precision accumulation."""
    return residuals(A.astype(np.longdouble), b.astype(np.longdouble),
                     c.astype(np.longdouble), solution.x, solution.y,
                     solution.s, dtype=np.longdouble)


def solve(A, b, c, cones, settings: Optional[Settings] = None,
          warm: Optional[tuple] = None, work: Optional[_Work] = None) -> Solution:
    """ADMM homogeneous-self-dual solve of min c'x, Ax + s = b, s in K.

    Pass a ``work`` from a previous solve with the same A and cones (and a
    new b/c already rebound) to skip equilibration and factorization.
    """
    st = settings or Settings()
    t0 = time.perf_counter()
    A = sp.csc_matrix(A)
    b = np.asarray(b, dtype=float)
    c = np.asarray(c, dtype=float)
    m, n = A.shape

    if m == 0:
        # unconstrained: optimal iff c == 0
        status = OPTIMAL if np.all(c == 0) else DUAL_INFEASIBLE
        return Solution(status, np.zeros(n), np.zeros(0), np.zeros(0),
                        0.0, 0.0, 0.0, 0.0, 0, time.perf_counter() - t0)

    wk = work if work is not None else _Work(A, b, c, cones, st)

    u = np.zeros(n + m + 1)
    v = np.zeros(n + m + 1)
    u[-1] = 1.0
    v[-1] = 1.0
    if warm is not None:
        x0, y0, s0 = warm
        u[:n] = x0 * wk.sigma_b / wk.d_col
        u[n:n + m] = y0 * wk.sigma_c / wk.d_row
        v[n:n + m] = s0 * wk.d_row * wk.sigma_b

    best = math.inf
    last_improve = 0
    alpha = st.alpha
    status = MAX_ITER
    x = np.zeros(n)
    y = np.zeros(m)
    s = np.zeros(m)
    pres = dres = gap = math.inf
    it = 0

    for it in range(1, st.max_iter + 1):
        ut = wk.solve_iq(u + v)
        ut_rel = alpha * ut + (1.0 - alpha) * u
        w = ut_rel - v
        un = np.empty_like(u)
        un[:n] = w[:n]
        wk.projector.project(w[n:n + m], dual=True, out=un[n:n + m])
        un[-1] = max(w[-1], 0.0)
        v = v - ut_rel + un
        u = un

        if not np.all(np.isfinite(u)):
            status = NUMERICAL_FAILURE
            break

        if it % st.check_every == 0 or it == st.max_iter:
            tau = u[-1]
            kappa = v[-1]
            if tau > 1e-9 * max(1.0, kappa):
                xs = u[:n] / tau
                ys = u[n:n + m] / tau
                ss = v[n:n + m] / tau
                x = wk.unscale_x(xs)
                y = wk.unscale_y(ys)
                s = wk.unscale_s(ss)
                pres, dres, gap = residuals(A, b, c, x, y, s)
                err = max(pres, dres, gap)
                if err < best * 0.5:
                    best = min(best, err)
                    last_improve = it
                if err <= st.tol:
                    status = OPTIMAL
                    break
            else:
                # tau ~ 0: inspect the ray for an infeasibility certificate
                uy = u[n:n + m]
                ux = u[:n]
                by = float(wk.b @ uy)
                sv = v[n:n + m]
                if by < -1e-9:
                    aty = np.linalg.norm(wk.A.T @ uy)
                    if aty <= 1e-6 * max(1.0, np.linalg.norm(uy)) * abs(by) / max(abs(by), 1e-12):
                        status = PRIMAL_INFEASIBLE
                        cert = wk.unscale_y(uy)
                        return Solution(status, x, y, s, math.nan, pres, dres, gap,
                                        it, time.perf_counter() - t0, certificate=cert)
                cx = float(wk.c @ ux)
                if cx < -1e-9:
                    axs = np.linalg.norm(wk.A @ ux + sv)
                    if axs <= 1e-6 * max(1.0, np.linalg.norm(ux)) * abs(cx) / max(abs(cx), 1e-12):
                        status = DUAL_INFEASIBLE
                        cert = wk.unscale_x(ux)
                        return Solution(status, x, y, s, -math.inf, pres, dres, gap,
                                        it, time.perf_counter() - t0, certificate=cert)

            if st.time_limit is not None and time.perf_counter() - t0 > st.time_limit:
                break
            if it - last_improve >= st.restart_every:
                # stall: damp over-relaxation and renormalize the embedding
                alpha = max(1.0, 0.5 * (alpha + 1.0))
                tau = u[-1]
                if tau > 1e-9:
                    u /= tau
                    v /= tau
                last_improve = it

    obj = float(c @ x) + 0.0
    return Solution(status, x, y, s, obj, pres, dres, gap, it,
                    time.perf_counter() - t0)


def solve_program(prog, settings: Optional[Settings] = None,
                  warm: Optional[tuple] = None) -> Solution:
    """Convenience wrapper: lower a ConicProgram and solve its relaxation."""
    from ordloc.cone_ir import to_standard_form

    sf = to_standard_form(prog)
    sol = solve(sf.A, sf.b, sf.c, sf.cones, settings, warm=warm)
    if sol.status in (OPTIMAL, MAX_ITER):
        sol.objective = float(sf.c @ sol.x) + sf.obj_offset
    return sol
