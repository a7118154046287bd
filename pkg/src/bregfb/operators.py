"""Single-valued monotone maps B and set-valued maximally monotone maps A.

``MonotoneMap`` subclasses evaluate B and optionally carry a potential psi
with B = grad psi.  ``SetValuedMap`` subclasses expose a membership test, a
distance from a dual point to A(x), a canonical selection, and enough
structure for the resolvent dispatcher (a ``form`` tag and, when separable,
one ``ScalarRelation`` per coordinate).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .core import ContractError, DomainViolation, as_array

__all__ = [
    "MonotoneMap",
    "ZeroMap",
    "LinearMap",
    "PowerGradient",
    "GradientMap",
    "ScalarRelation",
    "SetValuedMap",
    "ZeroOperator",
    "LinearOperator",
    "L1Subdifferential",
    "NormalConeBox",
    "NormalConeSimplex",
    "NormalConeHalfspace",
    "SeparableOperator",
    "rotation",
]

_INF = math.inf


def _check_monotone_matrix(M, what):
    sym = 0.5 * (M + M.T)
    lmin = float(np.linalg.eigvalsh(sym)[0]) if M.size else 0.0
    if lmin < -1e-12 * max(1.0, float(np.abs(M).max())):
        raise ContractError(f"{what}: symmetric part is not positive semidefinite")


# --------------------------------------------------------------------------
# single-valued B


class MonotoneMap:
    """Single-valued monotone B on int dom B."""

    kind = "abstract"
    lipschitz: Optional[float] = None

    def __init__(self, dim: int):
        self.dim = int(dim)

    def __call__(self, x):
        return self.eval(x)

    def eval(self, x) -> np.ndarray:
        raise NotImplementedError

    def in_dom_interior(self, x) -> bool:
        return True

    @property
    def has_potential(self) -> bool:
        return False

    def potential(self, x) -> float:
        raise ContractError(f"{self.kind} map carries no potential")

    def eval_batch(self, X) -> np.ndarray:
        return np.array([self.eval(x) for x in X])

    def potential_divergence(self, x, y) -> float:
        """D_psi(x, y) for the potential psi of B."""
        x = as_array(x, self.dim)
        y = as_array(y, self.dim)
        return self.potential(x) - self.potential(y) - float(np.dot(self.eval(y), x - y))

    def potential_divergence_batch(self, X, Y) -> np.ndarray:
        return np.array([self.potential_divergence(x, y) for x, y in zip(X, Y)])

    def spec(self) -> dict:
        return {"kind": self.kind, "dim": self.dim}


class ZeroMap(MonotoneMap):
    kind = "zero"
    lipschitz = 0.0

    def eval(self, x):
        return np.zeros(as_array(x, self.dim).size)

    @property
    def has_potential(self):
        return True

    def potential(self, x):
        as_array(x, self.dim)
        return 0.0

    def eval_batch(self, X):
        return np.zeros_like(np.asarray(X, float))

    def potential_divergence_batch(self, X, Y):
        return np.zeros(len(X))


class LinearMap(MonotoneMap):
    """x -> Mx + c with M + M^T positive semidefinite.

    The potential <x, Mx>/2 + <c, x> exists when M is symmetric.
    """

    kind = "linear"

    def __init__(self, M, c=None):
        M = np.atleast_2d(np.array(M, dtype=float))
        if M.shape[0] != M.shape[1]:
            raise ContractError("linear map needs a square matrix")
        super().__init__(M.shape[0])
        _check_monotone_matrix(M, "linear map")
        c = np.zeros(self.dim) if c is None else as_array(c, self.dim, "c").copy()
        M.setflags(write=False)
        c.setflags(write=False)
        self.M, self.c = M, c
        self.symmetric = bool(np.array_equal(M, M.T))
        self.lipschitz = float(np.linalg.norm(M, 2))

    def eval(self, x):
        return self.M @ as_array(x, self.dim) + self.c

    @property
    def has_potential(self):
        return self.symmetric

    def potential(self, x):
        if not self.symmetric:
            return super().potential(x)
        x = as_array(x, self.dim)
        return 0.5 * float(x @ (self.M @ x)) + float(self.c @ x)

    def eval_batch(self, X):
        return np.asarray(X, float) @ self.M.T + self.c

    def potential_divergence(self, x, y):
        if not self.symmetric:
            return super().potential(x)
        d = as_array(x, self.dim) - as_array(y, self.dim)
        return 0.5 * float(d @ (self.M @ d))

    def potential_divergence_batch(self, X, Y):
        if not self.symmetric:
            return super().potential(X[0])
        D = np.asarray(X, float) - np.asarray(Y, float)
        return 0.5 * np.einsum("ij,ij->i", D, D @ self.M.T)

    def spec(self):
        return {"kind": "linear", "M": self.M.tolist(), "c": self.c.tolist()}


def rotation(angle: float = math.pi / 2) -> LinearMap:
    """Planar rotation; monotone only for |angle| <= pi/2."""
    c, s = math.cos(angle), math.sin(angle)
    return LinearMap([[c, -s], [s, c]])


class PowerGradient(MonotoneMap):
    """Gradient of psi(x) = sum_k w_k |x_k|^p, with p > 1 and w_k >= 0."""

    kind = "power"

    def __init__(self, p: float, weights, dim: Optional[int] = None):
        p = float(p)
        if not p > 1.0:
            raise ContractError("power potential needs p > 1")
        w = np.atleast_1d(np.array(weights, dtype=float))
        if dim is not None and w.size == 1:
            w = np.full(int(dim), float(w[0]))
        if np.any(w < 0):
            raise ContractError("power potential weights must be nonnegative")
        super().__init__(w.size)
        w.setflags(write=False)
        self.p, self.w = p, w
        self.lipschitz = float(2.0 * w.max()) if p == 2.0 else None

    def eval(self, x):
        x = as_array(x, self.dim)
        return self.w * self.p * np.sign(x) * np.abs(x) ** (self.p - 1.0)

    @property
    def has_potential(self):
        return True

    def potential(self, x):
        x = as_array(x, self.dim)
        return float(np.sum(self.w * np.abs(x) ** self.p))

    def eval_batch(self, X):
        X = np.asarray(X, float)
        return self.w * self.p * np.sign(X) * np.abs(X) ** (self.p - 1.0)

    def potential_divergence(self, x, y):
        return float(self.potential_divergence_batch(as_array(x, self.dim)[None, :],
                                                     as_array(y, self.dim)[None, :])[0])

    def potential_divergence_batch(self, X, Y):
        X = np.asarray(X, float)
        Y = np.asarray(Y, float)
        p = self.p
        ay = np.abs(Y)
        terms = np.abs(X) ** p + (p - 1.0) * ay**p - p * X * np.sign(Y) * ay ** (p - 1.0)
        return (self.w * terms).sum(axis=1)

    def spec(self):
        return {"kind": "power", "p": self.p, "weights": self.w.tolist()}


class GradientMap(MonotoneMap):
    """B = grad psi from user callables (monotonicity is not verified)."""

    kind = "gradient"

    def __init__(self, dim, grad: Callable, psi: Optional[Callable] = None,
                 in_dom: Optional[Callable] = None, lipschitz=None):
        super().__init__(dim)
        self._grad, self._psi = grad, psi
        self._in_dom = in_dom or (lambda x: True)
        self.lipschitz = lipschitz

    def eval(self, x):
        x = as_array(x, self.dim)
        if not self._in_dom(x):
            raise DomainViolation("B evaluated outside int dom B")
        return np.asarray(self._grad(x), dtype=float)

    def in_dom_interior(self, x):
        return bool(self._in_dom(as_array(x, self.dim)))

    @property
    def has_potential(self):
        return self._psi is not None

    def potential(self, x):
        if self._psi is None:
            return super().potential(x)
        return float(self._psi(as_array(x, self.dim)))


# --------------------------------------------------------------------------
# scalar maximally monotone relations


@dataclass(frozen=True)
class ScalarRelation:
    """A maximally monotone relation on R built from simple terms.

    R(t) = sum_j s_j Sgn(t - c_j) + m t + c0 + w (1 - r / t) + N_[lo, hi](t)

    where Sgn is the set-valued sign, the inverse term is present only when
    ``w > 0`` (and then restricts the domain to t > 0), and N is the normal
    cone of the interval [lo, hi].
    """

    signs: tuple = ()
    slope_m: float = 0.0
    offset: float = 0.0
    inv_w: float = 0.0
    inv_r: float = 0.0
    lo: float = -_INF
    hi: float = _INF

    def __post_init__(self):
        for s, _ in self.signs:
            if s < 0:
                raise ContractError("sign term scale must be nonnegative")
        if self.slope_m < 0 or self.inv_w < 0 or self.inv_r < 0:
            raise ContractError("relation terms must be nondecreasing")
        if not self.lo <= self.hi:
            raise ContractError("empty interval in relation")

    @property
    def is_zero(self):
        return (not self.signs and self.slope_m == 0.0 and self.offset == 0.0
                and self.inv_w == 0.0 and self.lo == -_INF and self.hi == _INF)

    @property
    def has_inverse(self):
        return self.inv_w > 0.0

    def domain(self):
        """(lo, hi, lo_closed, hi_closed) of dom R."""
        lo, lo_closed = self.lo, math.isfinite(self.lo)
        if self.has_inverse and lo <= 0.0:
            lo, lo_closed = 0.0, False
        return lo, self.hi, lo_closed, math.isfinite(self.hi)

    def contains(self, t):
        lo, hi, lc, hc = self.domain()
        above = t >= lo if lc else t > lo
        below = t <= hi if hc else t < hi
        return above and below

    def breakpoints(self):
        pts = {c for _, c in self.signs}
        if math.isfinite(self.lo):
            pts.add(self.lo)
        if math.isfinite(self.hi):
            pts.add(self.hi)
        return sorted(pts)

    def smooth(self, t):
        """Single-valued part at t (signs evaluated off their centers)."""
        v = self.slope_m * t + self.offset
        if self.has_inverse:
            v += self.inv_w * (1.0 - self.inv_r / t) if t > 0 else -_INF
        for s, c in self.signs:
            if t > c:
                v += s
            elif t < c:
                v -= s
        return v

    def bounds(self, t):
        """(low, high) with R(t) = [low, high]; None outside the domain."""
        if not self.contains(t):
            return None
        base = self.slope_m * t + self.offset
        if self.has_inverse:
            base += self.inv_w * (1.0 - self.inv_r / t)
        low = high = base
        for s, c in self.signs:
            if t > c:
                low += s
                high += s
            elif t < c:
                low -= s
                high -= s
            else:
                low -= s
                high += s
        if t == self.lo:
            low = -_INF
        if t == self.hi:
            high = _INF
        return low, high

    def slope(self, t):
        d = self.slope_m
        if self.has_inverse and t > 0:
            tt = t * t
            d += self.inv_w * self.inv_r / tt if tt > 0 else _INF
        return d

    def potential(self, t):
        if not self.contains(t):
            return _INF
        v = 0.5 * self.slope_m * t * t + self.offset * t
        if self.has_inverse:
            v += self.inv_w * (t - self.inv_r * math.log(t))
        for s, c in self.signs:
            v += s * abs(t - c)
        return v

    def spec(self):
        return {
            "signs": [list(sc) for sc in self.signs],
            "slope": self.slope_m,
            "offset": self.offset,
            "inv_w": self.inv_w,
            "inv_r": self.inv_r,
            "lo": self.lo,
            "hi": self.hi,
        }

    @classmethod
    def from_spec(cls, d):
        return cls(
            signs=tuple((float(s), float(c)) for s, c in d.get("signs", [])),
            slope_m=float(d.get("slope", 0.0)),
            offset=float(d.get("offset", 0.0)),
            inv_w=float(d.get("inv_w", 0.0)),
            inv_r=float(d.get("inv_r", 0.0)),
            lo=float(d.get("lo", -_INF)),
            hi=float(d.get("hi", _INF)),
        )


_ZERO_REL = ScalarRelation()


def _interval_distance(v, low, high):
    if v < low:
        return low - v
    if v > high:
        return v - high
    return 0.0


# --------------------------------------------------------------------------
# set-valued A


class SetValuedMap:
    """Maximally monotone A: R^d -> 2^(R^d).

    ``kind`` is one of zero, linear, subdifferential, separable, normal_cone;
    ``form`` refines it for the closed-form registry.
    """

    kind = "abstract"
    form = ""

    def __init__(self, dim: int):
        self.dim = int(dim)

    def in_domain(self, x, tol: float = 1e-9) -> bool:
        return True

    def distance(self, x, xstar) -> float:
        """Euclidean distance from x* to A(x); +inf when x is outside dom A."""
        raise NotImplementedError

    def member(self, x, xstar, tol: float = 1e-9) -> bool:
        return self.distance(x, xstar) <= tol

    def selection(self, x) -> np.ndarray:
        """The minimal-norm element of A(x)."""
        raise NotImplementedError

    @property
    def is_subdifferential(self) -> bool:
        return True

    def potential(self, x) -> float:
        """phi with A = the subdifferential of phi (+inf outside dom phi)."""
        raise ContractError(f"{self.kind} operator is not a subdifferential")

    def scalar_relations(self):
        return None

    @property
    def separable(self) -> bool:
        return self.scalar_relations() is not None

    def spec(self) -> dict:
        return {"kind": self.kind, "dim": self.dim}

    def __repr__(self):
        return f"{type(self).__name__}({self.spec()})"


class SeparableOperator(SetValuedMap):
    """A(x) = R_1(x_1) x ... x R_d(x_d) for scalar relations R_k."""

    kind = "separable"
    form = "separable"

    def __init__(self, relations: Sequence[ScalarRelation]):
        relations = tuple(relations)
        if not relations:
            raise ContractError("separable operator needs at least one relation")
        super().__init__(len(relations))
        self.relations = relations

    def in_domain(self, x, tol=1e-9):
        x = as_array(x, self.dim)
        return all(r.contains(t) for r, t in zip(self.relations, x))

    def distance(self, x, xstar):
        x = as_array(x, self.dim)
        xs = as_array(xstar, self.dim, "xstar")
        acc = 0.0
        for r, t, v in zip(self.relations, x, xs):
            b = r.bounds(float(t))
            if b is None:
                return _INF
            acc += _interval_distance(float(v), *b) ** 2
        return math.sqrt(acc)

    def selection(self, x):
        x = as_array(x, self.dim)
        out = np.empty(self.dim)
        for k, (r, t) in enumerate(zip(self.relations, x)):
            b = r.bounds(float(t))
            if b is None:
                raise DomainViolation("selection requested outside dom A")
            out[k] = min(max(0.0, b[0]), b[1])
        return out

    def potential(self, x):
        x = as_array(x, self.dim)
        return math.fsum(r.potential(float(t)) for r, t in zip(self.relations, x))

    def scalar_relations(self):
        return list(self.relations)

    def spec(self):
        return {"kind": "separable", "relations": [r.spec() for r in self.relations]}


class ZeroOperator(SeparableOperator):
    kind = "zero"
    form = "zero"

    def __init__(self, dim: int):
        super().__init__([_ZERO_REL] * int(dim))

    def distance(self, x, xstar):
        as_array(x, self.dim)
        return float(np.linalg.norm(as_array(xstar, self.dim, "xstar")))

    def selection(self, x):
        return np.zeros(as_array(x, self.dim).size)

    def potential(self, x):
        as_array(x, self.dim)
        return 0.0

    def spec(self):
        return {"kind": "zero", "dim": self.dim}


class LinearOperator(SetValuedMap):
    """A(x) = {Mx + c}; a constant map when M = 0."""

    kind = "linear"

    def __init__(self, M, c=None):
        M = np.atleast_2d(np.array(M, dtype=float))
        if M.shape[0] != M.shape[1]:
            raise ContractError("linear operator needs a square matrix")
        super().__init__(M.shape[0])
        _check_monotone_matrix(M, "linear operator")
        c = np.zeros(self.dim) if c is None else as_array(c, self.dim, "c").copy()
        M.setflags(write=False)
        c.setflags(write=False)
        self.M, self.c = M, c
        self.is_constant = not np.any(M)
        self.is_diagonal = bool(np.count_nonzero(M - np.diag(np.diag(M))) == 0)
        self.form = "constant" if self.is_constant else "affine"

    def value(self, x):
        return self.M @ as_array(x, self.dim) + self.c

    def distance(self, x, xstar):
        return float(np.linalg.norm(as_array(xstar, self.dim, "xstar") - self.value(x)))

    def selection(self, x):
        return self.value(x)

    @property
    def is_subdifferential(self):
        return bool(np.array_equal(self.M, self.M.T))

    def potential(self, x):
        if not self.is_subdifferential:
            return super().potential(x)
        x = as_array(x, self.dim)
        return 0.5 * float(x @ (self.M @ x)) + float(self.c @ x)

    def scalar_relations(self):
        if not self.is_diagonal:
            return None
        return [ScalarRelation(slope_m=float(m), offset=float(c)) for m, c in zip(np.diag(self.M), self.c)]

    def spec(self):
        return {"kind": "linear", "M": self.M.tolist(), "c": self.c.tolist()}


class L1Subdifferential(SeparableOperator):
    """Subdifferential of x -> sum_k lam_k |x_k|."""

    kind = "subdifferential"
    form = "l1"

    def __init__(self, lam, dim: Optional[int] = None):
        lam = np.atleast_1d(np.array(lam, dtype=float))
        if dim is not None and lam.size == 1:
            lam = np.full(int(dim), float(lam[0]))
        if np.any(lam < 0):
            raise ContractError("l1 weights must be nonnegative")
        lam.setflags(write=False)
        self.lam = lam
        super().__init__([ScalarRelation(signs=((float(l), 0.0),)) for l in lam])

    def potential(self, x):
        return float(np.sum(self.lam * np.abs(as_array(x, self.dim))))

    def spec(self):
        return {"kind": "subdifferential", "phi": "l1", "lam": self.lam.tolist()}


class NormalConeBox(SeparableOperator):
    """Normal cone of the box [lo, hi]; [0, inf) is box(0, inf)."""

    kind = "normal_cone"
    form = "box"

    def __init__(self, lo, hi, dim: Optional[int] = None):
        lo = np.atleast_1d(np.array(lo, dtype=float))
        hi = np.atleast_1d(np.array(hi, dtype=float))
        n = max(lo.size, hi.size, dim or 1)
        lo = np.broadcast_to(lo, (n,)).copy()
        hi = np.broadcast_to(hi, (n,)).copy()
        if np.any(lo > hi):
            raise ContractError("box has lo > hi")
        lo.setflags(write=False)
        hi.setflags(write=False)
        self.lo, self.hi = lo, hi
        super().__init__([ScalarRelation(lo=float(a), hi=float(b)) for a, b in zip(lo, hi)])

    def in_domain(self, x, tol=1e-9):
        x = as_array(x, self.dim)
        return bool(np.all(x >= self.lo - tol) and np.all(x <= self.hi + tol))

    def potential(self, x):
        return 0.0 if self.in_domain(x, tol=0.0) else _INF

    def spec(self):
        return {"kind": "normal_cone", "set": "box", "lo": self.lo.tolist(), "hi": self.hi.tolist()}


class NormalConeSimplex(SetValuedMap):
    """Normal cone of the unit simplex {x >= 0, sum x = 1}.

    ``allow_projection`` enables the Euclidean (quadratic-kernel) resolvent,
    which is a projection and is off by default.
    """

    kind = "normal_cone"
    form = "simplex"

    def __init__(self, dim: int, allow_projection: bool = False):
        super().__init__(dim)
        self.allow_projection = bool(allow_projection)

    def in_domain(self, x, tol=1e-9):
        x = as_array(x, self.dim)
        return bool(np.all(x >= -tol) and abs(math.fsum(x) - 1.0) <= tol)

    def distance(self, x, xstar):
        x = as_array(x, self.dim)
        xs = as_array(xstar, self.dim, "xstar")
        if not self.in_domain(x):
            return _INF
        # N(x) = {lam 1 - nu : nu >= 0, nu_k = 0 on the support}
        supp = x > 0
        if not np.any(supp):
            return _INF
        # minimize over lam: sum_supp (x*_k - lam)^2 + sum_off (x*_k - lam)_+^2
        lam = float(np.mean(xs[supp]))
        for _ in range(self.dim + 1):
            act = supp | (xs > lam)
            nxt = float(np.mean(xs[act]))
            if nxt == lam:
                break
            lam = nxt
        d_supp = xs[supp] - lam
        d_off = np.maximum(xs[~supp] - lam, 0.0)
        return float(math.sqrt(np.dot(d_supp, d_supp) + np.dot(d_off, d_off)))

    def selection(self, x):
        x = as_array(x, self.dim)
        if not self.in_domain(x):
            raise DomainViolation("selection requested outside the simplex")
        return np.zeros(self.dim)

    def potential(self, x):
        return 0.0 if self.in_domain(x) else _INF

    def spec(self):
        return {"kind": "normal_cone", "set": "simplex", "dim": self.dim,
                "allow_projection": self.allow_projection}


class NormalConeHalfspace(SetValuedMap):
    """Normal cone of {x : <a, x> <= b}."""

    kind = "normal_cone"
    form = "halfspace"

    def __init__(self, a, b: float):
        a = as_array(a, name="a").copy()
        if not np.any(a):
            raise ContractError("halfspace normal must be nonzero")
        super().__init__(a.size)
        a.setflags(write=False)
        self.a, self.b = a, float(b)

    def in_domain(self, x, tol=1e-9):
        return float(self.a @ as_array(x, self.dim)) <= self.b + tol * max(1.0, abs(self.b))

    def distance(self, x, xstar):
        x = as_array(x, self.dim)
        xs = as_array(xstar, self.dim, "xstar")
        if not self.in_domain(x):
            return _INF
        if float(self.a @ x) < self.b - 1e-12 * max(1.0, abs(self.b)):
            return float(np.linalg.norm(xs))
        t = max(0.0, float(self.a @ xs) / float(self.a @ self.a))
        return float(np.linalg.norm(xs - t * self.a))

    def selection(self, x):
        if not self.in_domain(x):
            raise DomainViolation("selection requested outside the halfspace")
        return np.zeros(self.dim)

    def potential(self, x):
        return 0.0 if self.in_domain(x) else _INF

    def spec(self):
        return {"kind": "normal_cone", "set": "halfspace", "a": self.a.tolist(), "b": self.b}
