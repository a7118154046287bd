"""Condition certificates (kappa, delta1, delta2) and sampled falsifiers for
the sufficient conditions behind them.

Every checker draws points, evaluates an inequality ``lhs <= rhs`` in batch,
and returns a ``CheckReport``.  A sample counts as a violation when

    lhs - rhs > rtol * (|lhs| + |rhs|) + atol

The relative part matters: counterexamples to the descent inequality live at
scales near 1e-20, where any absolute slack would hide them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .core import ContractError, SamplingError, as_array
from .kernels import LegendreKernel
from .operators import MonotoneMap, SetValuedMap
from .resolvents import prox

__all__ = [
    "ROUTES",
    "ConditionCertificate",
    "derive_certificate",
    "CheckReport",
    "Samplers",
    "mixed_scale_sampler",
    "domain_sampler",
    "resolvent_graph_sampler",
    "check_descent_pair",
    "check_descent_triple",
    "check_cocoercive",
    "check_renaud_cohen",
    "check_lipschitz",
    "check_strong_monotone",
    "check_uniform_monotone",
    "check_angle_bounded",
    "check_direct",
    "check_strong_convexity",
    "check_condition_main",
    "suggest_kappa",
]

ROUTES = (
    "direct",
    "descent_triple",
    "descent_pair",
    "renaud_cohen",
    "strong_monotone",
    "cocoercive",
    "angle_bounded",
    "lipschitz_potential",
)

DEFAULT_SAMPLES = 10_000


# --------------------------------------------------------------------------
# certificates


@dataclass(frozen=True)
class ConditionCertificate:
    """Constants of the main inclusion condition and the route behind them."""

    kappa: float
    delta1: float
    delta2: float
    route: str = "direct"
    aux: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.route not in ROUTES:
            raise ContractError(f"unknown certificate route {self.route!r}")
        if not (self.kappa >= 0.0):
            raise ContractError(f"kappa must be >= 0, got {self.kappa}")
        if not (0.0 <= self.delta1 < 1.0):
            raise ContractError(f"delta1 must lie in [0, 1), got {self.delta1}")
        if not (0.0 <= self.delta2 <= 1.0):
            raise ContractError(f"delta2 must lie in [0, 1], got {self.delta2}")

    def reconstruct(self) -> "ConditionCertificate":
        """Re-derive the constants from ``aux`` (identity for the direct route)."""
        if self.route == "direct":
            return self
        if self.route in ("descent_pair", "descent_triple"):
            return derive_certificate(self.route, {"kappa": self.kappa, **self.aux})
        return derive_certificate(self.route, self.aux)

    def to_dict(self):
        return {
            "route": self.route,
            "kappa": self.kappa,
            "delta1": self.delta1,
            "delta2": self.delta2,
            "aux": dict(self.aux),
        }

    @classmethod
    def from_dict(cls, d):
        route = d.get("route", "direct")
        aux = dict(d.get("aux", {}))
        if route == "direct":
            return cls(float(d["kappa"]), float(d.get("delta1", 0.0)), float(d.get("delta2", 1.0)),
                       "direct", {})
        if route in ("descent_pair", "descent_triple") and "kappa" in d:
            aux.setdefault("kappa", d["kappa"])
        return derive_certificate(route, aux)


def _need(aux, *names):
    out = []
    for n in names:
        if n not in aux or aux[n] is None:
            raise ContractError(f"certificate route needs aux constant {n!r}")
        v = float(aux[n])
        if not (v > 0.0 and math.isfinite(v)) and n != "kappa":
            raise ContractError(f"aux constant {n} must be positive and finite, got {v}")
        out.append(v)
    return out


def derive_certificate(route: str, aux: Optional[dict] = None, **kw) -> ConditionCertificate:
    """Derive (kappa, delta1, delta2) for a sufficiency route.

    Parameters
    ----------
    route : str
        One of ``ROUTES``.
    aux : dict
        ``alpha``, ``beta``, ``eps`` for cocoercive, renaud_cohen,
        angle_bounded and lipschitz_potential (the latter two also accept
        ``nu``); ``alpha``, ``mu``, ``nu``, ``eps`` for strong_monotone;
        ``kappa`` for descent_pair / descent_triple; ``kappa``, ``delta1``
        and optionally ``delta2`` for direct.

    Raises
    ------
    ContractError
        Missing constants or eps outside its open admissible interval.
    """
    aux = dict(aux or {})
    aux.update(kw)
    if route in ("cocoercive", "renaud_cohen", "angle_bounded", "lipschitz_potential"):
        alpha, beta, eps = _need(aux, "alpha", "beta", "eps")
        if not 0.0 < eps < 2.0 * beta:
            raise ContractError(f"eps must lie in (0, 2*beta) = (0, {2 * beta}), got {eps}")
        gap = 2.0 * beta - eps
        kappa = 1.0 / (alpha * gap)
        d2 = gap / (2.0 * beta)
        d1 = d2 if route == "renaud_cohen" else 0.0
        keep = {"alpha": alpha, "beta": beta, "eps": eps}
        if "nu" in aux:
            keep["nu"] = float(aux["nu"])
        return ConditionCertificate(kappa, d1, d2, route, keep)
    if route == "strong_monotone":
        alpha, mu, nu, eps = _need(aux, "alpha", "mu", "nu", "eps")
        if not 0.0 < eps < 2.0 * mu / nu**2:
            raise ContractError(f"eps must lie in (0, 2*mu/nu^2) = (0, {2 * mu / nu**2}), got {eps}")
        gap = 2.0 * mu - eps * nu**2
        kappa = nu**2 / (alpha * gap)
        d = gap / (2.0 * mu)
        return ConditionCertificate(kappa, d, d, route, {"alpha": alpha, "mu": mu, "nu": nu, "eps": eps})
    if route in ("descent_pair", "descent_triple"):
        if "kappa" not in aux:
            raise ContractError(f"{route} route needs kappa")
        kappa = float(aux.pop("kappa"))
        return ConditionCertificate(kappa, 0.0, 1.0, route, {k: float(v) for k, v in aux.items()})
    if route == "direct":
        if "kappa" not in aux:
            raise ContractError("direct route needs kappa")
        return ConditionCertificate(float(aux["kappa"]), float(aux.get("delta1", 0.0)),
                                    float(aux.get("delta2", 1.0)), "direct", {})
    raise ContractError(f"unknown certificate route {route!r}")


# --------------------------------------------------------------------------
# reports


@dataclass
class CheckReport:
    name: str
    passed: bool
    worst_slack: float
    witness: Optional[dict]
    samples: int
    seed: int
    details: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "name": self.name,
            "pass": self.passed,
            "worst_slack": self.worst_slack,
            "witness": self.witness,
            "samples": self.samples,
            "seed": self.seed,
            "details": self.details,
        }


def _report(name, lhs, rhs, points, samples, seed, rtol, atol, details=None):
    lhs = np.asarray(lhs, float)
    rhs = np.asarray(rhs, float)
    ok = np.isfinite(lhs) & np.isfinite(rhs)
    details = dict(details or {})
    details["skipped"] = int((~ok).sum())
    details["rtol"] = rtol
    details["atol"] = atol
    if not np.any(ok):
        return CheckReport(name, True, -math.inf, None, samples, seed, details)
    diff = lhs - rhs
    scale = np.abs(lhs) + np.abs(rhs)
    norm = np.where(ok, diff / np.where(scale > 0, scale, 1.0), -np.inf)
    bad = ok & (diff > rtol * scale + atol)
    i = int(np.argmax(np.where(bad, norm, -np.inf))) if np.any(bad) else int(np.argmax(norm))
    witness = None
    if np.any(bad):
        witness = {k: np.asarray(v[i]).tolist() for k, v in points.items()}
        witness["lhs"] = float(lhs[i])
        witness["rhs"] = float(rhs[i])
    details["violations"] = int(bad.sum())
    return CheckReport(name, not bool(np.any(bad)), float(norm[i]), witness, samples, seed, details)


# --------------------------------------------------------------------------
# samplers


def mixed_scale_sampler(lo, hi, lo_closed=None, hi_closed=None, log_range=(-16.0, 1.0),
                        radius=10.0, weights=(0.15, 0.1, 0.45, 0.3)):
    """Coordinate-wise sampler over a box mixing four draw types.

    With the given ``weights`` a coordinate is an exact closed endpoint, an
    exact zero, an endpoint offset by a log-uniform magnitude
    10**U(log_range), or uniform on the box clipped to ``radius``.  Draws
    that do not apply (no closed endpoint, zero outside the box) fall back to
    the log-uniform type.

    Returns a callable ``(rng, n) -> array of shape (n, d)``.
    """
    lo = np.atleast_1d(np.array(lo, dtype=float))
    hi = np.atleast_1d(np.array(hi, dtype=float))
    d = max(lo.size, hi.size)
    lo = np.broadcast_to(lo, (d,)).copy()
    hi = np.broadcast_to(hi, (d,)).copy()
    lc = np.isfinite(lo) if lo_closed is None else np.broadcast_to(np.asarray(lo_closed, bool), (d,))
    hc = np.isfinite(hi) if hi_closed is None else np.broadcast_to(np.asarray(hi_closed, bool), (d,))
    w = np.asarray(weights, float)
    w = w / w.sum()
    a, b = log_range

    def draw(rng, n):
        with np.errstate(invalid="ignore"):
            return _draw(rng, n)

    def _draw(rng, n):
        kind = rng.choice(4, size=(n, d), p=w)
        mag = 10.0 ** rng.uniform(a, b, size=(n, d))
        sign = np.where(rng.random((n, d)) < 0.5, -1.0, 1.0)
        ulo = np.maximum(lo, -radius)
        uhi = np.minimum(hi, radius)
        ulo = np.where(ulo > uhi, lo, ulo)
        uhi = np.where(uhi < ulo, hi, uhi)
        uni = ulo + (uhi - ulo) * rng.random((n, d))

        # log-uniform offset from the nearest finite endpoint, or around 0
        from_lo = np.where(np.isfinite(hi), np.minimum(lo + mag, 0.5 * (lo + hi)), lo + mag)
        from_hi = hi - mag
        use_hi = ~np.isfinite(lo) | (np.isfinite(hi) & (rng.random((n, d)) < 0.5))
        offs = np.where(np.isfinite(lo) & ~use_hi, from_lo, np.where(np.isfinite(hi), from_hi, sign * mag))
        offs = np.where(np.isfinite(lo) & np.isfinite(hi) & use_hi, np.maximum(from_hi, 0.5 * (lo + hi)), offs)

        pick_hi = hc & (~lc | (rng.random((n, d)) < 0.5))
        bnd = np.where(pick_hi, hi, lo)
        has_bnd = lc | hc

        zero_ok = ((lo < 0) | ((lo == 0) & lc)) & ((hi > 0) | ((hi == 0) & hc))

        out = offs.copy()
        out = np.where(kind == 0, np.where(has_bnd, bnd, offs), out)
        out = np.where(kind == 1, np.where(zero_ok, 0.0, offs), out)
        out = np.where(kind == 3, uni, out)
        return out

    return draw


def _domain_box(f: LegendreKernel, A: Optional[SetValuedMap]):
    """Per-coordinate box of (int dom f) intersected with dom A, if separable."""
    parts = f.scalar_parts()
    if parts is None:
        return None
    d = f.dim
    lo = np.array([p.lo for p in parts])
    hi = np.array([p.hi for p in parts])
    lc = np.zeros(d, bool)
    hc = np.zeros(d, bool)
    if A is not None:
        rels = A.scalar_relations()
        if rels is None:
            return None
        for k, r in enumerate(rels):
            rlo, rhi, rlc, rhc = r.domain()
            if rlo > lo[k]:
                lo[k], lc[k] = rlo, rlc
            if rhi < hi[k]:
                hi[k], hc[k] = rhi, rhc
    return lo, hi, lc, hc


def domain_sampler(f: LegendreKernel, A: Optional[SetValuedMap] = None, radius=10.0,
                   log_range=(-16.0, 1.0)):
    """Sampler for C = (int dom f) intersected with dom A.

    Separable pairs use ``mixed_scale_sampler`` on the exact box; other
    pairs fall back to the kernel's interior sampler with rejection on dom A.
    """
    box = _domain_box(f, A)
    if box is not None:
        base = mixed_scale_sampler(*box, log_range=log_range, radius=radius)
    else:
        def base(rng, n):
            return np.array([f.sample_interior(rng, radius) for _ in range(n)])

    def draw(rng, n):
        out = np.empty((0, f.dim))
        for _ in range(100):
            X = np.asarray(base(rng, n), float)
            ok = f.in_int_dom_batch(X)
            if A is not None and box is None:
                ok &= np.array([A.in_domain(x) for x in X], dtype=bool)
            out = np.vstack([out, X[ok]])
            if len(out) >= n:
                return out[:n]
        raise SamplingError("could not draw enough points in (int dom f) and dom A")

    return draw


def resolvent_graph_sampler(A: SetValuedMap, f: LegendreKernel, gamma: float = 1.0,
                            B: Optional[MonotoneMap] = None, base=None, noise_scale=3.0):
    """Graph points (y, y*) of A, or of A + B when ``B`` is given.

    A centre c is drawn from ``base`` (default: ``domain_sampler(f, A)``), the
    target u* = grad f(c) + gamma * noise is resolved, and y* is read off as
    (u* - grad f(y)) / gamma.
    """
    base = base or domain_sampler(f, A)

    def draw(rng, n):
        C = base(rng, n)
        G = f.grad_batch(C)
        noise = rng.standard_normal(C.shape) * noise_scale * 10.0 ** rng.uniform(-4, 0, size=(n, 1))
        Y = np.empty_like(C)
        S = np.empty_like(C)
        for i in range(n):
            r = prox(f, A, gamma, G[i] + gamma * noise[i])
            Y[i] = r.x.coords
            S[i] = r.a_star.coords
        if B is not None:
            S = S + B.eval_batch(Y)
        return Y, S

    return draw


@dataclass
class Samplers:
    """Point sources for ``check_condition_main``.

    ``C_sampler`` and ``graph_sampler`` default to ``domain_sampler`` and
    ``resolvent_graph_sampler``; ``S_points`` are known solutions.
    """

    S_points: Sequence
    C_sampler: Optional[Callable] = None
    graph_sampler: Optional[Callable] = None


def _pairs(sampler, rng, n):
    return sampler(rng, n), sampler(rng, n)


def _default_sampler(f, A, dim=None, radius=10.0):
    if f is not None:
        return domain_sampler(f, A, radius=radius)
    return mixed_scale_sampler(np.full(dim, -math.inf), np.full(dim, math.inf), radius=radius,
                               log_range=(-8.0, math.log10(radius)))


def _dot(X, Y):
    return np.einsum("ij,ij->i", X, Y)


def _s_points(S_points, dim):
    S = np.atleast_2d(np.array([as_array(z, dim, "S point") for z in S_points], dtype=float))
    if S.size == 0:
        raise ContractError("S_points must be nonempty")
    return S


# --------------------------------------------------------------------------
# checkers


def check_descent_pair(B: MonotoneMap, f: LegendreKernel, kappa: float, samples: int = DEFAULT_SAMPLES,
                       seed: int = 0, sampler=None, A: Optional[SetValuedMap] = None,
                       rtol: float = 1e-9, atol: float = 0.0) -> CheckReport:
    """Sampled test of D_psi(x, y) <= kappa D_f(x, y) for B = grad psi."""
    if not B.has_potential:
        raise ContractError("descent checks need B with a potential")
    rng = np.random.default_rng(seed)
    sampler = sampler or _default_sampler(f, A)
    X, Y = _pairs(sampler, rng, samples)
    lhs = B.potential_divergence_batch(X, Y)
    Df = f.divergence_batch(X, Y)
    rhs = kappa * Df
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(Df > 0, lhs / Df, 0.0)
    return _report("descent_pair", lhs, rhs, {"x": X, "y": Y}, samples, seed, rtol, atol,
                   {"kappa": kappa, "empirical_sup_ratio": float(np.nanmax(ratio))})


def suggest_kappa(B: MonotoneMap, f: LegendreKernel, samples: int = DEFAULT_SAMPLES, seed: int = 0,
                  sampler=None, A=None) -> float:
    """Empirical sup of D_psi / D_f over samples; a suggestion, not a bound."""
    rep = check_descent_pair(B, f, 0.0, samples, seed, sampler, A)
    return rep.details["empirical_sup_ratio"]


def check_descent_triple(B: MonotoneMap, f: LegendreKernel, kappa: float, S_points,
                         samples: int = DEFAULT_SAMPLES, seed: int = 0, sampler=None,
                         A: Optional[SetValuedMap] = None, rtol: float = 1e-9,
                         atol: float = 0.0) -> CheckReport:
    """Sampled test of D_psi(x,y) <= kappa D_f(x,y) + D_psi(x,z) + D_psi(z,y), z in S."""
    if not B.has_potential:
        raise ContractError("descent checks need B with a potential")
    rng = np.random.default_rng(seed)
    sampler = sampler or _default_sampler(f, A)
    S = _s_points(S_points, f.dim)
    X, Y = _pairs(sampler, rng, samples)
    Z = S[rng.integers(0, len(S), size=samples)]
    lhs = B.potential_divergence_batch(X, Y)
    rhs = (kappa * f.divergence_batch(X, Y) + B.potential_divergence_batch(X, Z)
           + B.potential_divergence_batch(Z, Y))
    return _report("descent_triple", lhs, rhs, {"x": X, "y": Y, "z": Z}, samples, seed, rtol, atol,
                   {"kappa": kappa})


def check_cocoercive(B: MonotoneMap, beta: float, samples: int = DEFAULT_SAMPLES, seed: int = 0,
                     sampler=None, rtol: float = 1e-9, atol: float = 0.0) -> CheckReport:
    """Sampled test of beta ||Bx - By||^2 <= <x - y, Bx - By>."""
    rng = np.random.default_rng(seed)
    sampler = sampler or _default_sampler(None, None, B.dim)
    X, Y = _pairs(sampler, rng, samples)
    dB = B.eval_batch(X) - B.eval_batch(Y)
    lhs = beta * _dot(dB, dB)
    rhs = _dot(X - Y, dB)
    return _report("cocoercive", lhs, rhs, {"x": X, "y": Y}, samples, seed, rtol, atol, {"beta": beta})


def check_lipschitz(B: MonotoneMap, nu: float, samples: int = DEFAULT_SAMPLES, seed: int = 0,
                    sampler=None, rtol: float = 1e-9, atol: float = 0.0) -> CheckReport:
    """Sampled test of ||Bx - By|| <= nu ||x - y||."""
    rng = np.random.default_rng(seed)
    sampler = sampler or _default_sampler(None, None, B.dim)
    X, Y = _pairs(sampler, rng, samples)
    lhs = np.linalg.norm(B.eval_batch(X) - B.eval_batch(Y), axis=1)
    rhs = nu * np.linalg.norm(X - Y, axis=1)
    return _report("lipschitz", lhs, rhs, {"x": X, "y": Y}, samples, seed, rtol, atol, {"nu": nu})


def _graph_pairs(graph_sampler, rng, n):
    X, XS = graph_sampler(rng, n)
    Y, YS = graph_sampler(rng, n)
    return X, XS, Y, YS


def check_strong_monotone(graph_sampler, mu: float, samples: int = DEFAULT_SAMPLES, seed: int = 0,
                          rtol: float = 1e-9, atol: float = 0.0) -> CheckReport:
    """Sampled test of mu ||x - y||^2 <= <x - y, x* - y*> on gra(A + B).

    ``graph_sampler(rng, n)`` must return points and selections of A + B.
    """
    rng = np.random.default_rng(seed)
    X, XS, Y, YS = _graph_pairs(graph_sampler, rng, samples)
    lhs = mu * _dot(X - Y, X - Y)
    rhs = _dot(X - Y, XS - YS)
    return _report("strong_monotone", lhs, rhs, {"x": X, "x_star": XS, "y": Y, "y_star": YS},
                   samples, seed, rtol, atol, {"mu": mu})


def check_uniform_monotone(graph_sampler, modulus: Callable, samples: int = DEFAULT_SAMPLES,
                           seed: int = 0, rtol: float = 1e-9, atol: float = 0.0) -> CheckReport:
    """Sampled test of modulus(||x - y||) <= <x - y, x* - y*> for a declared modulus."""
    rng = np.random.default_rng(seed)
    X, XS, Y, YS = _graph_pairs(graph_sampler, rng, samples)
    lhs = np.array([modulus(t) for t in np.linalg.norm(X - Y, axis=1)], dtype=float)
    rhs = _dot(X - Y, XS - YS)
    return _report("uniform_monotone", lhs, rhs, {"x": X, "y": Y}, samples, seed, rtol, atol)


def check_renaud_cohen(A: SetValuedMap, B: MonotoneMap, beta: float, graph_sampler=None,
                       samples: int = DEFAULT_SAMPLES, seed: int = 0, f: Optional[LegendreKernel] = None,
                       rtol: float = 1e-9, atol: float = 0.0) -> CheckReport:
    """Sampled test of beta ||Bx - By||^2 <= <x - y, x* - y*> on gra(A + B).

    Without ``graph_sampler`` the resolvent of ``f`` (default: the Euclidean
    kernel) generates graph points of A + B.
    """
    if graph_sampler is None:
        if f is None:
            from .kernels import QuadraticKernel

            f = QuadraticKernel(np.eye(A.dim))
        graph_sampler = resolvent_graph_sampler(A, f, 1.0, B=B)
    rng = np.random.default_rng(seed)
    X, XS, Y, YS = _graph_pairs(graph_sampler, rng, samples)
    dB = B.eval_batch(X) - B.eval_batch(Y)
    lhs = beta * _dot(dB, dB)
    rhs = _dot(X - Y, XS - YS)
    return _report("renaud_cohen", lhs, rhs, {"x": X, "x_star": XS, "y": Y, "y_star": YS},
                   samples, seed, rtol, atol, {"beta": beta})


def check_angle_bounded(B: MonotoneMap, beta: float, nu: float, samples: int = DEFAULT_SAMPLES,
                        seed: int = 0, sampler=None, rtol: float = 1e-9,
                        atol: float = 0.0) -> CheckReport:
    """Sampled test of <y - z, Bz - Bx> <= <x - y, Bx - By> / (4 beta nu)."""
    rng = np.random.default_rng(seed)
    sampler = sampler or _default_sampler(None, None, B.dim)
    X, Y = _pairs(sampler, rng, samples)
    Z = sampler(rng, samples)
    BX, BY, BZ = B.eval_batch(X), B.eval_batch(Y), B.eval_batch(Z)
    lhs = _dot(Y - Z, BZ - BX)
    rhs = _dot(X - Y, BX - BY) / (4.0 * beta * nu)
    return _report("angle_bounded", lhs, rhs, {"x": X, "y": Y, "z": Z}, samples, seed, rtol, atol,
                   {"beta": beta, "nu": nu})


def check_direct(B: MonotoneMap, f: LegendreKernel, kappa: float, S_points,
                 samples: int = DEFAULT_SAMPLES, seed: int = 0, sampler=None,
                 A: Optional[SetValuedMap] = None, rtol: float = 1e-9,
                 atol: float = 0.0) -> CheckReport:
    """Sampled test of <z - x, By - Bz> <= kappa D_f(x, y), z in S.

    The empirical sup of the ratio is reported as a suggested kappa; no
    validity is claimed for it.
    """
    rng = np.random.default_rng(seed)
    sampler = sampler or _default_sampler(f, A)
    S = _s_points(S_points, f.dim)
    X, Y = _pairs(sampler, rng, samples)
    Z = S[rng.integers(0, len(S), size=samples)]
    lhs = _dot(Z - X, B.eval_batch(Y) - B.eval_batch(Z))
    Df = f.divergence_batch(X, Y)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(Df > 0, lhs / Df, 0.0)
    return _report("direct", lhs, kappa * Df, {"x": X, "y": Y, "z": Z}, samples, seed, rtol, atol,
                   {"kappa": kappa, "suggested_kappa": float(np.nanmax(ratio))})


def check_strong_convexity(f: LegendreKernel, alpha: float, samples: int = DEFAULT_SAMPLES,
                           seed: int = 0, sampler=None, A: Optional[SetValuedMap] = None,
                           rtol: float = 1e-9, atol: float = 0.0) -> CheckReport:
    """Sampled test of alpha ||x - y||^2 <= <grad f(x) - grad f(y), x - y>."""
    rng = np.random.default_rng(seed)
    sampler = sampler or _default_sampler(f, A)
    X, Y = _pairs(sampler, rng, samples)
    lhs = alpha * _dot(X - Y, X - Y)
    rhs = _dot(f.grad_batch(X) - f.grad_batch(Y), X - Y)
    return _report("strong_convexity", lhs, rhs, {"x": X, "y": Y}, samples, seed, rtol, atol,
                   {"alpha": alpha})


def _route_checks(A, B, f, cert, S_points, samples, seed, C_sampler, graph_sampler):
    aux = cert.aux
    out = []
    if cert.route == "descent_pair":
        out.append(check_descent_pair(B, f, cert.kappa, samples, seed, C_sampler, A))
    elif cert.route == "descent_triple":
        out.append(check_descent_triple(B, f, cert.kappa, S_points, samples, seed, C_sampler, A))
    elif cert.route == "direct":
        if cert.delta2 == 1.0 and cert.kappa > 0:
            out.append(check_direct(B, f, cert.kappa, S_points, samples, seed, C_sampler, A))
    elif cert.route == "cocoercive":
        out.append(check_cocoercive(B, aux["beta"], samples, seed))
    elif cert.route == "renaud_cohen":
        gs = resolvent_graph_sampler(A, f, 1.0, B=B)
        out.append(check_renaud_cohen(A, B, aux["beta"], gs, samples, seed))
    elif cert.route == "strong_monotone":
        gs = resolvent_graph_sampler(A, f, 1.0, B=B)
        out.append(check_strong_monotone(gs, aux["mu"], samples, seed))
        out.append(check_lipschitz(B, aux["nu"], samples, seed))
    elif cert.route == "angle_bounded":
        if "nu" not in aux:
            raise ContractError("angle_bounded route needs nu")
        out.append(check_lipschitz(B, aux["nu"], samples, seed))
        out.append(check_angle_bounded(B, aux["beta"], aux["nu"], samples, seed))
    elif cert.route == "lipschitz_potential":
        if not B.has_potential:
            raise ContractError("lipschitz_potential route needs B with a potential")
        out.append(check_lipschitz(B, 1.0 / aux["beta"], samples, seed))
    if "alpha" in aux and cert.route != "descent_pair":
        out.append(check_strong_convexity(f, aux["alpha"], samples, seed, C_sampler, A))
    return out


def check_condition_main(A: SetValuedMap, B: MonotoneMap, f: LegendreKernel, cert: ConditionCertificate,
                         sampler: Samplers, samples: int = DEFAULT_SAMPLES, seed: int = 0,
                         rtol: float = 1e-9, atol: float = 0.0) -> CheckReport:
    """Sampled test of the main inclusion condition, plus the certificate's route.

    On triples x in C, (y, y*) in gra A, z in S with z* = -Bz:

        <y - x, By - Bz> <= kappa D_f(x, y) + <y - z, delta1 (y* - z*) + delta2 (By - Bz)>

    The report passes only if this inequality and every hypothesis of the
    certificate's route survive sampling; ``details["route_checks"]`` lists
    the latter.
    """
    S = _s_points(sampler.S_points, f.dim)
    C_sampler = sampler.C_sampler or domain_sampler(f, A)
    graph = sampler.graph_sampler or resolvent_graph_sampler(A, f, 1.0)
    rng = np.random.default_rng(seed)
    X = C_sampler(rng, samples)
    Y, YS = graph(rng, samples)
    Z = S[rng.integers(0, len(S), size=samples)]
    BY, BZ = B.eval_batch(Y), B.eval_batch(Z)
    ZS = -BZ
    lhs = _dot(Y - X, BY - BZ)
    rhs = cert.kappa * f.divergence_batch(X, Y) + _dot(Y - Z, cert.delta1 * (YS - ZS) + cert.delta2 * (BY - BZ))
    main = _report("condition_main", lhs, rhs, {"x": X, "y": Y, "y_star": YS, "z": Z},
                   samples, seed, rtol, atol, {"certificate": cert.to_dict()})
    routes = _route_checks(A, B, f, cert, S, samples, seed, C_sampler, graph)
    main.details["inequality_pass"] = main.passed
    main.details["route_checks"] = [r.to_dict() for r in routes]
    failing = [r for r in routes if not r.passed]
    if failing and main.passed:
        main.passed = False
        main.witness = {"route_check": failing[0].name, **(failing[0].witness or {})}
        main.worst_slack = failing[0].worst_slack
    return main
