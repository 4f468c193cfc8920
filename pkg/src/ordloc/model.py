"""Problem data model: demand sets, weight systems, norm exponents, instances.

All containers are immutable after construction and safe to share across
threads.  Validation is data, not exceptions: ``validate`` returns the list
of violated invariants (empty list = valid instance).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence, Union

import numpy as np

_RATIONAL_DENOM_CAP = 64
_RATIONAL_ABS_TOL = 1e-12


@dataclass(frozen=True)
class NormExponent:
    """Exponent tau = r/s >= 1 of an l_tau norm, kept in lowest terms.

    Construction canonicalizes by gcd, so 14/10 and 7/5 produce the same
    object.
    """

    r: int
    s: int

    def __post_init__(self):
        r, s = int(self.r), int(self.s)
        if r <= 0 or s <= 0:
            raise ValueError(f"norm exponent must be positive, got {r}/{s}")
        g = math.gcd(r, s)
        r, s = r // g, s // g
        if r < s:
            raise ValueError(f"norm exponent must satisfy tau >= 1, got {r}/{s}")
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "s", s)

    @classmethod
    def from_value(cls, value: Union[str, float, int, "NormExponent"]) -> "NormExponent":
        """Parse "r/s" strings exactly; decimals via continued fractions.

        Decimal input must match a rational with denominator <= 64 to within
        1e-12, otherwise it is rejected.
        """
        if isinstance(value, NormExponent):
            return value
        if isinstance(value, str):
            if "/" in value:
                num, den = value.split("/")
                return cls(int(num.strip()), int(den.strip()))
            value = float(value)
        if isinstance(value, int):
            return cls(value, 1)
        frac = Fraction(value).limit_denominator(_RATIONAL_DENOM_CAP)
        if abs(float(frac) - value) > _RATIONAL_ABS_TOL:
            raise ValueError(
                f"tau={value!r} is not a rational with denominator <= "
                f"{_RATIONAL_DENOM_CAP} (within {_RATIONAL_ABS_TOL})"
            )
        return cls(frac.numerator, frac.denominator)

    @property
    def tau(self) -> float:
        return self.r / self.s

    def norm(self, v) -> float:
        """l_{r/s} norm of a vector."""
        v = np.abs(np.asarray(v, dtype=float))
        if self.r == self.s:
            return float(v.sum())
        t = self.tau
        m = v.max(initial=0.0)
        if m == 0.0:
            return 0.0
        # factor out the max to avoid overflow for large exponents
        return float(m * (((v / m) ** t).sum()) ** (1.0 / t))

    def __str__(self):
        return f"{self.r}/{self.s}" if self.s != 1 else str(self.r)


@dataclass(frozen=True)
class DemandSet:
    """Fixed demand points a_1..a_n in R^d."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        if pts.ndim != 2 or pts.shape[0] < 1 or pts.shape[1] < 1:
            raise ValueError("demand set needs an (n, d) array with n, d >= 1")
        pts = pts.copy()
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]


@dataclass(frozen=True)
class NIWeights:
    """Weights of the non-interchangeable model.

    ``lam`` is the (n, p) matrix of ordered weights, one column per facility,
    each column non-increasing.  ``mu`` is the strictly-upper-triangular
    (p, p) matrix of inter-facility penalties.
    """

    omega: np.ndarray
    lam: np.ndarray
    mu: np.ndarray

    def __post_init__(self):
        omega = np.asarray(self.omega, dtype=float).copy()
        lam = np.atleast_2d(np.asarray(self.lam, dtype=float)).copy()
        mu = np.atleast_2d(np.asarray(self.mu, dtype=float)).copy()
        for a in (omega, lam, mu):
            a.setflags(write=False)
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "mu", mu)

    @property
    def p(self) -> int:
        return self.lam.shape[1]


@dataclass(frozen=True)
class SAWeights:
    """Ordered weights of the single-allocation model.

    ``lam[0]`` multiplies the largest minimum distance.  Only nonnegativity
    is required; monotonicity is not assumed by the model.
    """

    lam: np.ndarray

    def __post_init__(self):
        lam = np.asarray(self.lam, dtype=float).copy()
        lam.setflags(write=False)
        object.__setattr__(self, "lam", lam)

    @property
    def is_nonincreasing(self) -> bool:
        return bool(np.all(np.diff(self.lam) <= 1e-15))


@dataclass(frozen=True)
class OrderedMedianInstance:
    demand: DemandSet
    norm: NormExponent
    p: int
    weights: Union[NIWeights, SAWeights]
    M: float = field(default=None)  # type: ignore[assignment]
    UB: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.M is None:
            object.__setattr__(self, "M", bound_M(self.demand, self.norm))
        ub = self.UB
        if ub is None and isinstance(self.weights, SAWeights):
            ub = _ub_vector(self.demand, self.norm, float(self.M))
        if ub is not None:
            ub = np.asarray(ub, dtype=float).copy()
            ub.setflags(write=False)
        object.__setattr__(self, "UB", ub)

    @property
    def variant(self) -> str:
        return "ni" if isinstance(self.weights, NIWeights) else "sa"

    @property
    def n(self) -> int:
        return self.demand.n

    @property
    def d(self) -> int:
        return self.demand.d


def bound_M(demand: DemandSet, norm: NormExponent) -> float:
    """Radius bound 2 * max_i ||a_i||_tau on optimal facility locations."""
    return 2.0 * max(norm.norm(a) for a in demand.points)


def _ub_vector(demand: DemandSet, norm: NormExponent, M: float) -> np.ndarray:
    # triangle inequality over the ball ||x||_tau <= M
    return np.array([norm.norm(a) + M for a in demand.points])


def compute_UB(instance: OrderedMedianInstance) -> np.ndarray:
    """Per-demand big-M deactivation bounds UB_i = ||a_i||_tau + M."""
    return _ub_vector(instance.demand, instance.norm, float(instance.M))


def lambda_preset(kind: str, n: int, k: Optional[int] = None) -> SAWeights:
    """Classical ordered weight vectors: median, center, k-centrum.

    ``kind`` may be "median", "center", "kcentrum" (requires ``k``) or the
    inline form "kcentrum:K".
    """
    kind = kind.lower().replace("-", "").replace("_", "")
    if ":" in kind:
        kind, _, ks = kind.partition(":")
        k = int(ks)
    lam = np.zeros(n)
    if kind == "median":
        lam[:] = 1.0
    elif kind == "center":
        lam[0] = 1.0
    elif kind == "kcentrum":
        if k is None or not (1 <= k <= n):
            raise ValueError(f"k-centrum requires 1 <= k <= {n}, got {k}")
        lam[:k] = 1.0
    else:
        raise ValueError(f"unknown lambda preset {kind!r}")
    return SAWeights(lam)


def validate(instance: OrderedMedianInstance) -> list[str]:
    """Return every violated invariant (with indices); empty list iff valid."""
    out: list[str] = []
    dem, w = instance.demand, instance.weights
    n, p = dem.n, instance.p
    if p < 1:
        out.append(f"p={p} must be >= 1")
    if instance.norm.r < instance.norm.s:
        out.append("tau < 1")
    all_origin = bool(np.all(dem.points == 0.0))
    if instance.M <= 0 and not all_origin:
        out.append(f"M={instance.M} must be positive")
    if isinstance(w, NIWeights):
        if w.omega.shape != (n,):
            out.append(f"omega has shape {w.omega.shape}, expected ({n},)")
        else:
            for i in np.flatnonzero(w.omega < 0):
                out.append(f"omega[{i}] negative")
        if w.lam.shape != (n, p):
            out.append(f"lambda has shape {w.lam.shape}, expected ({n}, {p})")
        else:
            for j in range(p):
                col = w.lam[:, j]
                if np.any(col < 0):
                    out.append(f"lambda column {j} has negative entries")
                if np.any(np.diff(col) > 1e-15):
                    out.append(f"lambda column {j} not non-increasing")
        if w.mu.shape != (p, p):
            out.append(f"mu has shape {w.mu.shape}, expected ({p}, {p})")
        else:
            if np.any(np.tril(w.mu) != 0):
                out.append("mu not strictly upper triangular")
            if np.any(w.mu < 0):
                out.append("mu has negative entries")
    elif isinstance(w, SAWeights):
        if w.lam.shape != (n,):
            out.append(f"lambda has shape {w.lam.shape}, expected ({n},)")
        else:
            for ell in np.flatnonzero(w.lam < 0):
                out.append(f"lambda[{ell}] negative")
        if instance.UB is not None:
            if instance.UB.shape != (n,):
                out.append(f"UB has shape {instance.UB.shape}, expected ({n},)")
    else:
        out.append(f"unknown weight type {type(w).__name__}")
    return out


def make_instance(
    points: Sequence[Sequence[float]],
    tau: Union[str, float, NormExponent],
    p: int,
    weights: Union[NIWeights, SAWeights],
    M: Optional[float] = None,
    UB: Optional[Sequence[float]] = None,
) -> OrderedMedianInstance:
    """Convenience constructor used by tests and the CLI."""
    demand = DemandSet(np.asarray(points, dtype=float))
    norm = NormExponent.from_value(tau)
    return OrderedMedianInstance(demand=demand, norm=norm, p=p, weights=weights,
                                 M=M, UB=None if UB is None else np.asarray(UB, float))
