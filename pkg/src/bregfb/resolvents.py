"""The backward step x = (grad f + gamma A)^{-1}(u*).

Dispatch order:

1. a registered closed form for the (kernel kind, operator form) pair;
2. the separable path, which solves one scalar monotone inclusion
   g'(t) + gamma R(t) containing u_k per coordinate by safeguarded
   Newton/bisection in the dual coordinate s = g'(t);
3. otherwise ``UnsupportedPair``.

The dual selection is always reported as a* = (u* - grad f(x)) / gamma, so
the inclusion a* in A(x) can be tested independently of how x was found.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import optimize, special

from .core import (
    ContractError,
    ConvergenceFailure,
    DomainViolation,
    DualVector,
    RangeFailure,
    UnsupportedPair,
    Vector,
    as_array,
)
from .kernels import LegendreKernel, ScalarPart
from .operators import ScalarRelation, SetValuedMap

__all__ = [
    "ResolventQuery",
    "ResolventResult",
    "solve",
    "prox",
    "residual",
    "solve_scalar",
    "closed_form_pairs",
]

_MAX_DOUBLINGS = 60


@dataclass(frozen=True)
class ResolventQuery:
    kernel: LegendreKernel
    gamma: float
    map: SetValuedMap
    target: np.ndarray

    def __post_init__(self):
        if not (self.gamma > 0 and math.isfinite(self.gamma)):
            raise ContractError("gamma must be positive and finite")
        t = as_array(self.target, self.kernel.dim, "target")
        if not np.all(np.isfinite(t)):
            raise ContractError("resolvent target must be finite")
        if self.map.dim != self.kernel.dim:
            raise ContractError("kernel and operator dimensions differ")
        object.__setattr__(self, "target", np.array(t, dtype=float))


@dataclass(frozen=True)
class ResolventResult:
    x: Vector
    a_star: DualVector
    residual: float
    inclusion_gap: float
    iterations: int
    path: str


def residual(q: ResolventQuery, x, a_star) -> float:
    """Euclidean norm of grad f(x) + gamma a* - u*."""
    x = as_array(x, q.kernel.dim)
    a = as_array(a_star, q.kernel.dim, "a_star")
    return float(np.linalg.norm(q.kernel.grad(x) + q.gamma * a - q.target))


# --------------------------------------------------------------------------
# closed forms; each returns x or None when the pair is not covered


def _diag_of(kernel):
    return kernel._diag if getattr(kernel, "is_diagonal", False) else None


def _cf_any_zero(kernel, A, gamma, u):
    if A.form != "zero":
        return None
    return kernel.grad_conjugate(u)


def _cf_quadratic_linear(kernel, A, gamma, u):
    if kernel.kind != "quadratic" or A.kind != "linear":
        return None
    return np.linalg.solve(kernel.U + gamma * A.M, u - gamma * A.c)


def _cf_quadratic_l1(kernel, A, gamma, u):
    if kernel.kind != "quadratic" or A.form != "l1":
        return None
    diag = _diag_of(kernel)
    if diag is None:
        raise UnsupportedPair("l1 prox with a non-diagonal metric is not supported")
    thr = gamma * A.lam
    return np.sign(u) * np.maximum(np.abs(u) - thr, 0.0) / diag


def _cf_box(kernel, A, gamma, u):
    # separable kernel + interval normal cone: clamp the unconstrained point
    if A.form != "box" or not kernel.separable:
        return None
    return np.clip(kernel.grad_conjugate(u), A.lo, A.hi)


def _cf_quadratic_halfspace(kernel, A, gamma, u):
    if kernel.kind != "quadratic" or A.form != "halfspace":
        return None
    x0 = kernel.grad_conjugate(u)
    over = float(A.a @ x0) - A.b
    if over <= 0.0:
        return x0
    w = kernel.grad_conjugate(A.a)
    return x0 - (over / float(A.a @ w)) * w


def _cf_entropy_constant(kernel, A, gamma, u):
    if kernel.kind != "entropy" or A.kind != "linear" or not A.is_constant:
        return None
    return np.exp(u - gamma * A.c)


def _cf_entropy_l1(kernel, A, gamma, u):
    # on (0, inf) the l1 subdifferential is the constant lam
    if kernel.kind != "entropy" or A.form != "l1":
        return None
    return np.exp(u - gamma * A.lam)


def _cf_entropy_simplex(kernel, A, gamma, u):
    if kernel.kind != "entropy" or A.form != "simplex":
        return None
    return special.softmax(u)


def _cf_quadratic_simplex(kernel, A, gamma, u):
    if kernel.kind != "quadratic" or A.form != "simplex":
        return None
    if not A.allow_projection:
        raise UnsupportedPair(
            "quadratic kernel with the simplex normal cone needs allow_projection=True"
        )
    diag = _diag_of(kernel)
    if diag is None:
        raise UnsupportedPair("simplex projection with a non-diagonal metric is not supported")

    def excess(m):
        return float(np.sum(np.maximum(u - m, 0.0) / diag)) - 1.0

    lo = float(np.min(u)) - float(diag.max()) - 1.0
    hi = float(np.max(u))
    m = optimize.brentq(excess, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    return np.maximum(u - m, 0.0) / diag


_REGISTRY = (
    ("any", "zero", _cf_any_zero),
    ("quadratic", "linear", _cf_quadratic_linear),
    ("quadratic", "l1", _cf_quadratic_l1),
    ("separable", "box", _cf_box),
    ("quadratic", "halfspace", _cf_quadratic_halfspace),
    ("quadratic", "simplex", _cf_quadratic_simplex),
    ("entropy", "constant", _cf_entropy_constant),
    ("entropy", "l1", _cf_entropy_l1),
    ("entropy", "simplex", _cf_entropy_simplex),
)


def closed_form_pairs():
    """(kernel kind, operator form) pairs with a registered closed form."""
    return [(k, f) for k, f, _ in _REGISTRY]


def _closed_form(kernel, A, gamma, u):
    for _, _, fn in _REGISTRY:
        x = fn(kernel, A, gamma, u)
        if x is not None:
            return x
    return None


# --------------------------------------------------------------------------
# scalar path


def _safe_inv(part: ScalarPart, s):
    try:
        return part.grad_inv(s)
    except OverflowError:
        return math.inf if s > 0 else -math.inf


def solve_scalar(part: ScalarPart, rel: ScalarRelation, gamma: float, u: float,
                 tol: float = 1e-12, max_inner: int = 200, s_init: Optional[float] = None):
    """Solve g'(t) + gamma R(t) containing u for a single coordinate.

    Returns ``(t, iterations)``.  ``s_init`` seeds the Newton iteration in
    the dual coordinate; the answer does not depend on it.
    """
    if rel.is_zero:
        return _safe_inv(part, u), 0

    dlo, dhi, _, _ = rel.domain()
    lo = max(part.lo, dlo)
    hi = min(part.hi, dhi)
    # breakpoints inside the open interior of the kernel's domain
    pts = [b for b in rel.breakpoints() if part.lo < b < part.hi and rel.contains(b)]
    left, right = lo, hi
    for b in pts:
        low, high = rel.bounds(b)
        gb = part.grad(b)
        if gb + gamma * low <= u <= gb + gamma * high:
            return b, 0
        if u < gb + gamma * low:
            right = min(right, b)
            break
        left = max(left, b)
    if not left < right:
        raise RangeFailure("target outside the range of grad f + gamma A")

    def H(s):
        try:
            return _H(s)
        except (OverflowError, ZeroDivisionError):
            return -math.inf if s < u else math.inf

    def _H(s):
        t = _safe_inv(part, s)
        if not left < t < right:
            # rounding pushed t onto a piece boundary; use the one-sided limit
            if t <= left:
                return -math.inf if not math.isfinite(left) else s + gamma * rel.smooth(math.nextafter(left, math.inf)) - u
            return math.inf if not math.isfinite(right) else s + gamma * rel.smooth(math.nextafter(right, -math.inf)) - u
        return s + gamma * rel.smooth(t) - u

    # dual-coordinate bracket
    s_lo = part.grad(left) if math.isfinite(left) and left > part.lo else -math.inf
    s_hi = part.grad(right) if math.isfinite(right) and right < part.hi else math.inf
    s0 = s_init if s_init is not None else u
    s0 = min(max(s0, s_lo), s_hi)
    if not math.isfinite(s0):
        s0 = (s_hi - 1.0) if math.isfinite(s_hi) else (s_lo + 1.0)
    if not math.isfinite(s_lo):
        step = max(1.0, abs(s0))
        a = min(s0, s_hi) - step if math.isfinite(s_hi) else s0
        for _ in range(_MAX_DOUBLINGS):
            if H(a) < 0:
                break
            step *= 2.0
            a = a - step
        else:
            raise RangeFailure("no lower bracket after 60 doublings; target outside range")
        s_lo = a
    if not math.isfinite(s_hi):
        step = max(1.0, abs(s0))
        b = max(s0, s_lo) + step
        for _ in range(_MAX_DOUBLINGS):
            if H(b) > 0:
                break
            step *= 2.0
            b = b + step
        else:
            raise RangeFailure("no upper bracket after 60 doublings; target outside range")
        s_hi = b

    a, b = s_lo, s_hi
    s = min(max(s0, a), b)
    if s <= a or s >= b:
        s = 0.5 * (a + b)
    best_s, best_r = s, math.inf
    widths = []
    prev_h = math.inf
    for it in range(1, max_inner + 1):
        h = H(s)
        if abs(h) < best_r:
            best_s, best_r = s, abs(h)
        if abs(h) <= tol:
            return _safe_inv(part, s), it
        if h < 0:
            a = s
        else:
            b = s
        if b - a <= 2.0 * np.spacing(max(abs(a), abs(b))):
            # bracket collapsed to adjacent floats: accept if rounding explains the residual
            if best_r <= max(tol, 1e-9 * max(1.0, abs(u))):
                return _safe_inv(part, best_s), it
            raise ConvergenceFailure(
                "scalar resolvent bracket collapsed without meeting the tolerance",
                best=_safe_inv(part, best_s), residual=best_r,
            )
        t = _safe_inv(part, s)
        deriv = 1.0
        if t != 0.0 and math.isfinite(t):
            hess = part.hess(t)
            if hess > 0 and math.isfinite(hess):
                deriv = 1.0 + gamma * rel.slope(t) / hess
        nxt = s - h / deriv
        widths.append(b - a)
        # bisect when Newton leaves the bracket, fails to halve |h|, or has
        # not halved the bracket in six steps
        stalled = abs(h) > 0.5 * prev_h or (len(widths) > 6 and widths[-1] > 0.5 * widths[-7])
        if not a < nxt < b or not math.isfinite(nxt) or stalled:
            nxt = 0.5 * (a + b)
            widths.clear()
        prev_h = abs(h)
        s = nxt
    raise ConvergenceFailure(
        f"scalar resolvent did not converge in {max_inner} iterations",
        best=_safe_inv(part, best_s), residual=best_r,
    )


def _separable(kernel, A, gamma, u, tol, max_inner, s_init=None):
    parts = kernel.scalar_parts()
    rels = A.scalar_relations()
    if parts is None or rels is None:
        raise UnsupportedPair(f"no resolvent path for kernel {kernel.kind!r} with operator {A.kind!r}")
    x = np.empty(kernel.dim)
    total = 0
    for k in range(kernel.dim):
        init = None if s_init is None else float(s_init[k])
        t, it = solve_scalar(parts[k], rels[k], gamma, float(u[k]), tol, max_inner, init)
        x[k] = t
        total += it
    return x, total


def solve(q: ResolventQuery, tol: float = 1e-12, max_inner: int = 200, method: str = "auto",
          s_init=None) -> ResolventResult:
    """Evaluate the Bregman resolvent (grad f + gamma A)^{-1}(u*).

    Parameters
    ----------
    q : ResolventQuery
    tol : float
        Absolute residual target for the scalar path.
    max_inner : int
        Iteration budget per scalar solve.
    method : {"auto", "closed_form", "separable"}
        ``auto`` tries the closed-form registry first.
    s_init : array, optional
        Dual-coordinate initialization of the scalar path.

    Raises
    ------
    UnsupportedPair, RangeFailure, ConvergenceFailure, DomainViolation
    """
    kernel, A, gamma, u = q.kernel, q.map, float(q.gamma), q.target
    x = None
    path = "closed_form"
    iterations = 0
    if method in ("auto", "closed_form"):
        x = _closed_form(kernel, A, gamma, u)
        if x is None and method == "closed_form":
            raise UnsupportedPair(f"no closed form for {kernel.kind!r} with {A.form or A.kind!r}")
    elif method != "separable":
        raise ContractError(f"unknown resolvent method {method!r}")
    if x is None:
        path = "separable"
        x, iterations = _separable(kernel, A, gamma, u, tol, max_inner, s_init)

    if not np.all(np.isfinite(x)) or not kernel.in_int_dom(x):
        raise DomainViolation(f"resolvent solution left int dom of the {kernel.kind} kernel")
    if not A.in_domain(x):
        raise DomainViolation("resolvent solution left dom A")
    a_star = (u - kernel.grad(x)) / gamma
    res = float(np.linalg.norm(kernel.grad(x) + gamma * a_star - u))
    gap = gamma * A.distance(x, a_star)
    return ResolventResult(
        x=Vector(x), a_star=DualVector(a_star), residual=res, inclusion_gap=float(gap),
        iterations=iterations, path=path,
    )


def prox(kernel, A, gamma, target, **kw) -> ResolventResult:
    """Shorthand for ``solve(ResolventQuery(kernel, gamma, A, target))``."""
    return solve(ResolventQuery(kernel, float(gamma), A, np.asarray(target, dtype=float)), **kw)
