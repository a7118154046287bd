"""Legendre kernels, their Bregman distances, and iteration-varying kernel
schedules.

Built-in kernels
----------------
``QuadraticKernel``   f(x) = <x, Ux>/2 for a symmetric positive-definite U
``EntropyKernel``     f(x) = sum x_k ln x_k - x_k  on [0, +inf)^d
``PowerNormKernel``   f(z) = chi * sum |z_k|^p / p
``ProductKernel``     block sum of two kernels plus a constant offset

Every built-in is separable except a quadratic kernel with a non-diagonal
matrix.  Separable kernels expose one ``ScalarPart`` per coordinate, which is
what the generic resolvent path works with.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np
from scipy import linalg as sla
from scipy import special

from .core import ContractError, DomainViolation, SamplingError, as_array

__all__ = [
    "Capabilities",
    "ScalarPart",
    "LegendreKernel",
    "QuadraticKernel",
    "EntropyKernel",
    "PowerNormKernel",
    "ProductKernel",
    "CustomKernel",
    "bregman",
    "make_quadratic_metric",
    "make_boltzmann_shannon",
    "make_power_norm",
    "make_product_kernel",
    "finite_difference_gradient",
    "GeometricSequence",
    "ConstantRule",
    "ChiRule",
    "MetricRule",
    "KernelSchedule",
    "make_schedule",
    "ScheduleReport",
    "check_schedule",
    "interior_sampler",
]


@dataclass(frozen=True)
class Capabilities:
    """Analytic properties a kernel carries by construction.

    ``strong_modulus`` is the modulus of strong convexity on ``strong_set``
    (``None`` when the kernel is not strongly convex there).  ``symmetry_ratio``
    is a lower bound on inf D(x, y) / D(y, x) when one is known.
    ``gradient_steps_vanish`` declares that D(y_{n+1}, y_n) -> 0 forces
    grad f(y_{n+1}) - grad f(y_n) -> 0 on bounded sequences; it is declared,
    not verified.
    """

    supercoercive: bool = False
    uniformly_convex: bool = False
    strong_modulus: Optional[float] = None
    strong_set: str = "dom f"
    cofinite: bool = False
    symmetry_ratio: Optional[float] = None
    gradient_steps_vanish: bool = True


@dataclass(frozen=True)
class ScalarPart:
    """One coordinate of a separable kernel.

    ``lo``/``hi`` bound the open interval int dom; ``grad`` maps it onto the
    dual line and ``grad_inv`` is its inverse.
    """

    grad: Callable[[float], float]
    hess: Callable[[float], float]
    grad_inv: Callable[[float], float]
    lo: float = -math.inf
    hi: float = math.inf
    kind: str = ""
    params: tuple = ()


class LegendreKernel:
    """Base class: a Legendre function on R^d.

    Subclasses implement ``value``, ``grad``, ``grad_conjugate``, ``in_dom``
    and ``in_int_dom``.  ``divergence`` may be overridden with a numerically
    stable closed form.
    """

    kind = "abstract"
    capabilities = Capabilities()

    def __init__(self, dim: int):
        if int(dim) < 1:
            raise ContractError("kernel dimension must be >= 1")
        self.dim = int(dim)

    def __call__(self, x) -> float:
        return self.value(x)

    def value(self, x) -> float:
        raise NotImplementedError

    def grad(self, x) -> np.ndarray:
        raise NotImplementedError

    def grad_conjugate(self, u) -> np.ndarray:
        raise NotImplementedError

    def in_dom(self, x) -> bool:
        return True

    def in_int_dom(self, x) -> bool:
        return True

    def in_int_dom_conjugate(self, u) -> bool:
        return bool(self.capabilities.cofinite) or bool(np.all(np.isfinite(u)))

    def divergence(self, x, y) -> float:
        x = as_array(x, self.dim)
        y = as_array(y, self.dim)
        return float(self.value(x) - self.value(y) - np.dot(self.grad(y), x - y))

    def divergence_batch(self, X, Y) -> np.ndarray:
        """Row-wise D_f(X[i], Y[i]) for points already known to be admissible."""
        return np.array([self.divergence(x, y) for x, y in zip(X, Y)])

    def grad_batch(self, X) -> np.ndarray:
        return np.array([self.grad(x) for x in X])

    def in_int_dom_batch(self, X) -> np.ndarray:
        return np.array([self.in_int_dom(x) for x in X], dtype=bool)

    @property
    def separable(self) -> bool:
        return False

    def scalar_parts(self):
        return None

    def sample_interior(self, rng, scale=3.0) -> np.ndarray:
        return rng.uniform(-scale, scale, size=self.dim)

    def spec(self) -> dict:
        return {"kind": self.kind, "dim": self.dim}

    def __repr__(self):
        return f"{type(self).__name__}({self.spec()})"


def bregman(f: LegendreKernel, x, y) -> float:
    """Bregman distance D_f(x, y).

    Returns +inf when ``y`` is not interior to dom f or ``x`` is outside
    dom f; otherwise f(x) - f(y) - <x - y, grad f(y)>.
    """
    x = as_array(x, f.dim)
    y = as_array(y, f.dim)
    if not f.in_int_dom(y) or not f.in_dom(x):
        return math.inf
    return f.divergence(x, y)


# --------------------------------------------------------------------------
# quadratic metric


class QuadraticKernel(LegendreKernel):
    kind = "quadratic"

    def __init__(self, U, alpha0=None, symmetry_atol=1e-12):
        U = np.array(U, dtype=float)
        if U.ndim == 1:
            U = np.diag(U)
        if U.ndim != 2 or U.shape[0] != U.shape[1]:
            raise ContractError("metric must be a square matrix")
        if not np.all(np.isfinite(U)):
            raise ContractError("metric has non-finite entries")
        scale = max(1.0, float(np.abs(U).max()))
        if np.abs(U - U.T).max() > symmetry_atol * scale:
            raise ContractError("metric is not symmetric")
        super().__init__(U.shape[0])
        U = 0.5 * (U + U.T)
        eig = np.linalg.eigvalsh(U)
        lmin, lmax = float(eig[0]), float(eig[-1])
        if lmin <= 0.0:
            raise ContractError(f"metric is not positive definite (smallest eigenvalue {lmin:g})")
        if alpha0 is None:
            alpha0 = lmin
        elif alpha0 > lmin * (1 + 1e-12):
            raise ContractError(f"declared modulus {alpha0} exceeds smallest eigenvalue {lmin}")
        U.setflags(write=False)
        self.U = U
        self.lmin, self.lmax = lmin, lmax
        self.is_diagonal = bool(np.count_nonzero(U - np.diag(np.diag(U))) == 0)
        self._diag = np.diag(U).copy()
        self._chol = None if self.is_diagonal else sla.cho_factor(U)
        self.capabilities = Capabilities(
            supercoercive=True,
            uniformly_convex=True,
            strong_modulus=float(alpha0),
            strong_set="R^d",
            cofinite=True,
            symmetry_ratio=lmin / lmax,
        )

    def value(self, x):
        x = as_array(x, self.dim)
        return 0.5 * float(np.dot(x, self.grad(x)))

    def grad(self, x):
        x = as_array(x, self.dim)
        if self.is_diagonal:
            return self._diag * x
        return self.U @ x

    def grad_conjugate(self, u):
        u = as_array(u, self.dim, "u")
        if self.is_diagonal:
            return u / self._diag
        return sla.cho_solve(self._chol, u)

    def divergence(self, x, y):
        d = as_array(x, self.dim) - as_array(y, self.dim)
        return 0.5 * float(np.dot(d, self.grad(d)))

    def divergence_batch(self, X, Y):
        D = np.asarray(X, float) - np.asarray(Y, float)
        return 0.5 * np.einsum("ij,ij->i", D, self.grad_batch(D))

    def grad_batch(self, X):
        X = np.asarray(X, float)
        return X * self._diag if self.is_diagonal else X @ self.U

    def in_int_dom_batch(self, X):
        return np.ones(len(X), dtype=bool)

    @property
    def separable(self):
        return self.is_diagonal

    def scalar_parts(self):
        if not self.is_diagonal:
            return None
        return [_quadratic_part(float(c)) for c in self._diag]

    def spec(self):
        if self.is_diagonal:
            return {"kind": "quadratic", "diag": self._diag.tolist()}
        return {"kind": "quadratic", "U": self.U.tolist()}


def _quadratic_part(c):
    return ScalarPart(
        grad=lambda t: c * t,
        hess=lambda t: c,
        grad_inv=lambda s: s / c,
        kind="quadratic",
        params=(c,),
    )


def make_quadratic_metric(U, alpha0=None) -> QuadraticKernel:
    """Kernel x -> <x, Ux>/2 for symmetric positive-definite ``U``."""
    return QuadraticKernel(U, alpha0=alpha0)


# --------------------------------------------------------------------------
# Boltzmann-Shannon entropy


def _entropy_div(x, y):
    """Elementwise x ln(x/y) - x + y for x >= 0, y > 0, accurate near x = y."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    t = x / y - 1.0
    out = np.empty_like(t)
    small = np.abs(t) < 1e-3
    ts = t[small]
    # y * sum_{k>=2} (-1)^k t^k / (k (k-1))
    out[small] = y[small] * ts * ts * (
        0.5 - ts * (1.0 / 6.0 - ts * (1.0 / 12.0 - ts * (1.0 / 20.0 - ts / 30.0)))
    )
    big = ~small
    out[big] = special.xlogy(x[big], x[big] / y[big]) - x[big] + y[big]
    return out


_ENTROPY_PART = ScalarPart(
    grad=math.log,
    hess=lambda t: 1.0 / t,
    grad_inv=math.exp,
    lo=0.0,
    kind="entropy",
)


class EntropyKernel(LegendreKernel):
    """Boltzmann-Shannon entropy, with the convention 0 ln 0 = 0."""

    kind = "entropy"
    capabilities = Capabilities(supercoercive=True, cofinite=True)

    def value(self, x):
        x = as_array(x, self.dim)
        if np.any(x < 0):
            return math.inf
        return float(np.sum(special.xlogy(x, x) - x))

    def grad(self, x):
        x = as_array(x, self.dim)
        if np.any(x <= 0):
            raise DomainViolation("entropy gradient requested outside (0, +inf)^d")
        return np.log(x)

    def grad_conjugate(self, u):
        return np.exp(as_array(u, self.dim, "u"))

    def in_dom(self, x):
        return bool(np.all(as_array(x, self.dim) >= 0))

    def in_int_dom(self, x):
        return bool(np.all(as_array(x, self.dim) > 0))

    def divergence(self, x, y):
        return float(np.sum(_entropy_div(as_array(x, self.dim), as_array(y, self.dim))))

    def divergence_batch(self, X, Y):
        return _entropy_div(np.asarray(X, float), np.asarray(Y, float)).sum(axis=1)

    def grad_batch(self, X):
        return np.log(np.asarray(X, float))

    def in_int_dom_batch(self, X):
        return np.all(np.asarray(X, float) > 0, axis=1)

    @property
    def separable(self):
        return True

    def scalar_parts(self):
        return [_ENTROPY_PART] * self.dim

    def sample_interior(self, rng, scale=3.0):
        return np.exp(rng.uniform(-math.log(10 * scale), math.log(scale), size=self.dim))

    def spec(self):
        return {"kind": "entropy", "dim": self.dim}


def make_boltzmann_shannon(d: int) -> EntropyKernel:
    return EntropyKernel(d)


# --------------------------------------------------------------------------
# power norm


def _power_part(p, chi):
    q = 1.0 / (p - 1.0)

    def hess(t):
        if t == 0.0 and p < 2.0:
            return math.inf
        return chi * (p - 1.0) * abs(t) ** (p - 2.0)

    return ScalarPart(
        grad=lambda t: chi * math.copysign(abs(t) ** (p - 1.0), t),
        hess=hess,
        grad_inv=lambda s: math.copysign((abs(s) / chi) ** q, s),
        kind="power_norm",
        params=(p, chi),
    )


class PowerNormKernel(LegendreKernel):
    """Separable power sum f(z) = chi * sum_k |z_k|^p / p, p > 1, chi >= 1."""

    kind = "power_norm"

    def __init__(self, p: float, chi: float = 1.0, dim: int = 1):
        p = float(p)
        chi = float(chi)
        if not p > 1.0 or not math.isfinite(p):
            raise ContractError(f"power-norm exponent must be > 1, got {p}")
        if not chi >= 1.0:
            raise ContractError(f"power-norm weight must be >= 1, got {chi}")
        super().__init__(dim)
        self.p, self.chi = p, chi
        self.capabilities = Capabilities(
            supercoercive=True,
            uniformly_convex=p >= 2.0,
            strong_modulus=chi if p == 2.0 else None,
            strong_set="R^d",
            cofinite=True,
            symmetry_ratio=1.0 if p == 2.0 else None,
        )

    def value(self, x):
        x = as_array(x, self.dim)
        return self.chi * float(np.sum(np.abs(x) ** self.p)) / self.p

    def grad(self, x):
        x = as_array(x, self.dim)
        return self.chi * np.sign(x) * np.abs(x) ** (self.p - 1.0)

    def grad_conjugate(self, u):
        u = as_array(u, self.dim, "u")
        return np.sign(u) * (np.abs(u) / self.chi) ** (1.0 / (self.p - 1.0))

    def divergence(self, x, y):
        x = as_array(x, self.dim)
        y = as_array(y, self.dim)
        p = self.p
        ay = np.abs(y)
        terms = np.abs(x) ** p / p + (p - 1.0) / p * ay**p - x * np.sign(y) * ay ** (p - 1.0)
        return self.chi * float(np.sum(terms))

    def divergence_batch(self, X, Y):
        X = np.asarray(X, float)
        Y = np.asarray(Y, float)
        p = self.p
        ay = np.abs(Y)
        terms = np.abs(X) ** p / p + (p - 1.0) / p * ay**p - X * np.sign(Y) * ay ** (p - 1.0)
        return self.chi * terms.sum(axis=1)

    def grad_batch(self, X):
        X = np.asarray(X, float)
        return self.chi * np.sign(X) * np.abs(X) ** (self.p - 1.0)

    def in_int_dom_batch(self, X):
        return np.ones(len(X), dtype=bool)

    @property
    def separable(self):
        return True

    def scalar_parts(self):
        return [_power_part(self.p, self.chi)] * self.dim

    def spec(self):
        return {"kind": "power_norm", "p": self.p, "chi": self.chi, "dim": self.dim}


def make_power_norm(p: float, chi: float, d: int) -> PowerNormKernel:
    return PowerNormKernel(p, chi, d)


# --------------------------------------------------------------------------
# products


class ProductKernel(LegendreKernel):
    """(z, xi) -> f1(z) + f2(xi) + offset, acting block-wise."""

    kind = "product"

    def __init__(self, z_part: LegendreKernel, xi_part: LegendreKernel, offset: float = 0.0):
        super().__init__(z_part.dim + xi_part.dim)
        self.z_part, self.xi_part = z_part, xi_part
        self.offset = float(offset)
        self._k = z_part.dim
        a, b = z_part.capabilities, xi_part.capabilities
        strong = None
        if a.strong_modulus is not None and b.strong_modulus is not None:
            strong = min(a.strong_modulus, b.strong_modulus)
        ratio = None
        if a.symmetry_ratio is not None and b.symmetry_ratio is not None:
            ratio = min(a.symmetry_ratio, b.symmetry_ratio)
        self.capabilities = Capabilities(
            supercoercive=a.supercoercive and b.supercoercive,
            uniformly_convex=a.uniformly_convex and b.uniformly_convex,
            strong_modulus=strong,
            cofinite=a.cofinite and b.cofinite,
            symmetry_ratio=ratio,
            gradient_steps_vanish=a.gradient_steps_vanish and b.gradient_steps_vanish,
        )

    def _split(self, x):
        x = as_array(x, self.dim)
        return x[: self._k], x[self._k :]

    def value(self, x):
        z, xi = self._split(x)
        return self.z_part.value(z) + self.xi_part.value(xi) + self.offset

    def grad(self, x):
        z, xi = self._split(x)
        return np.concatenate([self.z_part.grad(z), self.xi_part.grad(xi)])

    def grad_conjugate(self, u):
        u = as_array(u, self.dim, "u")
        return np.concatenate(
            [self.z_part.grad_conjugate(u[: self._k]), self.xi_part.grad_conjugate(u[self._k :])]
        )

    def in_dom(self, x):
        z, xi = self._split(x)
        return self.z_part.in_dom(z) and self.xi_part.in_dom(xi)

    def in_int_dom(self, x):
        z, xi = self._split(x)
        return self.z_part.in_int_dom(z) and self.xi_part.in_int_dom(xi)

    def divergence(self, x, y):
        xz, xx = self._split(x)
        yz, yx = self._split(y)
        return self.z_part.divergence(xz, yz) + self.xi_part.divergence(xx, yx)

    def divergence_batch(self, X, Y):
        X = np.asarray(X, float)
        Y = np.asarray(Y, float)
        k = self._k
        return (self.z_part.divergence_batch(X[:, :k], Y[:, :k])
                + self.xi_part.divergence_batch(X[:, k:], Y[:, k:]))

    def grad_batch(self, X):
        X = np.asarray(X, float)
        k = self._k
        return np.hstack([self.z_part.grad_batch(X[:, :k]), self.xi_part.grad_batch(X[:, k:])])

    def in_int_dom_batch(self, X):
        X = np.asarray(X, float)
        k = self._k
        return self.z_part.in_int_dom_batch(X[:, :k]) & self.xi_part.in_int_dom_batch(X[:, k:])

    @property
    def separable(self):
        return self.z_part.separable and self.xi_part.separable

    def scalar_parts(self):
        if not self.separable:
            return None
        return list(self.z_part.scalar_parts()) + list(self.xi_part.scalar_parts())

    def sample_interior(self, rng, scale=3.0):
        return np.concatenate(
            [self.z_part.sample_interior(rng, scale), self.xi_part.sample_interior(rng, scale)]
        )

    def spec(self):
        return {
            "kind": "product",
            "z": self.z_part.spec(),
            "xi": self.xi_part.spec(),
            "offset": self.offset,
        }


def make_product_kernel(z_part, xi_part, offset=0.0) -> ProductKernel:
    return ProductKernel(z_part, xi_part, offset)


class CustomKernel(LegendreKernel):
    """A user-supplied kernel given by callables.

    Nothing about the Legendre property is verified; the sampled checks in
    this module and in :mod:`bregfb.conditions` are the only safeguards.
    """

    kind = "custom"

    def __init__(self, dim, value, grad, grad_conjugate, in_dom=None, in_int_dom=None,
                 capabilities=None):
        super().__init__(dim)
        self._value, self._grad, self._conj = value, grad, grad_conjugate
        self._in_dom = in_dom or (lambda x: True)
        self._in_int = in_int_dom or self._in_dom
        if capabilities is not None:
            self.capabilities = capabilities

    def value(self, x):
        return float(self._value(as_array(x, self.dim)))

    def grad(self, x):
        return np.asarray(self._grad(as_array(x, self.dim)), dtype=float)

    def grad_conjugate(self, u):
        return np.asarray(self._conj(as_array(u, self.dim, "u")), dtype=float)

    def in_dom(self, x):
        return bool(self._in_dom(as_array(x, self.dim)))

    def in_int_dom(self, x):
        return bool(self._in_int(as_array(x, self.dim)))


def finite_difference_gradient(fun, x, h=None):
    """Central differences with step h = 1e-5 (1 + ||x||)."""
    x = as_array(x)
    if h is None:
        h = 1e-5 * (1.0 + float(np.linalg.norm(x)))
    g = np.empty_like(x)
    for k in range(x.size):
        e = np.zeros_like(x)
        e[k] = h
        g[k] = (fun(x + e) - fun(x - e)) / (2.0 * h)
    return g


def interior_sampler(kernel: LegendreKernel, scale: float = 3.0):
    """A callable ``rng -> point`` drawing from int dom of ``kernel``."""

    def draw(rng):
        return kernel.sample_interior(rng, scale)

    return draw


# --------------------------------------------------------------------------
# schedules


@dataclass(frozen=True)
class GeometricSequence:
    """n -> base + amp * ratio**n, with ratio in [0, 1)."""

    base: float = 1.0
    amp: float = 1.0
    ratio: float = 0.5

    def __post_init__(self):
        if not 0.0 <= self.ratio < 1.0:
            raise ContractError("geometric ratio must lie in [0, 1)")

    def __call__(self, n: int) -> float:
        return self.base + self.amp * self.ratio**n

    @property
    def limit(self):
        return self.base

    @property
    def nonincreasing(self):
        return self.amp >= 0.0

    @property
    def total_variation(self):
        return abs(self.amp)

    def spec(self):
        return {"kind": "geometric", "base": self.base, "amp": self.amp, "ratio": self.ratio}


@dataclass(frozen=True)
class ConstantRule:
    """f_n = kernel for all n (defaults to the base kernel)."""

    kernel: Optional[LegendreKernel] = None


@dataclass(frozen=True)
class ChiRule:
    """f_n = build(chi_n).

    ``eta`` overrides the derived eta_n = max(0, chi_{n+1}/chi_n - 1); it is
    taken as declared and only the sampled check can refute it.
    """

    chi: Callable[[int], float]
    build: Callable[[float], LegendreKernel]
    eta: Optional[Callable[[int], float]] = None
    eta_bound: Optional[float] = None
    describe: dict = field(default_factory=dict)


@dataclass(frozen=True)
class MetricRule:
    """f_n(x) = <x, U_n x>/2 for a sequence of SPD matrices.

    ``scale`` is an optional scalar sequence s_n giving U_n = s_n * U0.
    """

    U: Optional[Callable[[int], np.ndarray]] = None
    scale: Optional[Callable[[int], float]] = None
    U0: Optional[np.ndarray] = None
    eta: Optional[Callable[[int], float]] = None
    eta_bound: Optional[float] = None
    describe: dict = field(default_factory=dict)


_ETA_HORIZON = 2000


@dataclass(frozen=True, eq=False)
class KernelSchedule:
    """The family (f_n) of kernels in C_alpha(f) together with (eta_n)."""

    base: LegendreKernel
    alpha: float
    rule: str
    kernel_fn: Callable[[int], LegendreKernel]
    eta_fn: Callable[[int], float]
    eta_bound: float
    limit: Optional[LegendreKernel] = None
    params: dict = field(default_factory=dict)

    def kernel_at(self, n: int) -> LegendreKernel:
        return self.kernel_fn(int(n))

    def eta_at(self, n: int) -> float:
        return float(self.eta_fn(int(n)))

    def spec(self):
        out = {"rule": self.rule, "alpha": self.alpha, "eta_bound": self.eta_bound}
        out.update(self.params)
        return out


def _seq_spec(seq):
    return seq.spec() if hasattr(seq, "spec") else {"kind": "callable"}


def _check_eta(eta_fn, bound, what):
    if bound is None or not math.isfinite(bound) or bound < 0:
        raise ContractError(f"{what}: a finite bound on sum(eta_n) must be declared")
    partial = math.fsum(max(0.0, eta_fn(n)) for n in range(_ETA_HORIZON))
    if partial > bound * (1 + 1e-12) + 1e-15:
        raise ContractError(
            f"{what}: partial sum of eta_n over {_ETA_HORIZON} terms is {partial:g}, "
            f"exceeding the declared bound {bound:g} (not summable as declared)"
        )


def make_schedule(base: LegendreKernel, alpha: float, rule=None) -> KernelSchedule:
    """Build a kernel schedule from a rule.

    Parameters
    ----------
    base : LegendreKernel
        The kernel f of the problem.
    alpha : float
        Constant of the class C_alpha(f); must be positive.
    rule : ConstantRule, ChiRule or MetricRule
        How f_n is produced.  ``None`` means a constant schedule.

    Raises
    ------
    ContractError
        If alpha <= 0 or the eta sequence is not summable within its
        declared bound.
    """
    alpha = float(alpha)
    if not alpha > 0.0:
        raise ContractError("alpha must be positive")
    if rule is None:
        rule = ConstantRule()

    if isinstance(rule, ConstantRule):
        kernel = rule.kernel or base
        return KernelSchedule(
            base=base, alpha=alpha, rule="constant",
            kernel_fn=lambda n: kernel, eta_fn=lambda n: 0.0, eta_bound=0.0,
            limit=kernel, params={"kernel": kernel.spec()},
        )

    if isinstance(rule, ChiRule):
        chi = rule.chi
        build = functools.lru_cache(maxsize=None)(rule.build)
        if rule.eta is not None:
            eta = rule.eta
            bound = rule.eta_bound
        else:
            def eta(n):
                return max(0.0, chi(n + 1) / chi(n) - 1.0)

            if isinstance(chi, GeometricSequence):
                # sum (chi_{n+1}-chi_n)^+ / chi_n <= total variation since chi_n >= 1
                bound = 0.0 if chi.nonincreasing else chi.total_variation
            else:
                bound = rule.eta_bound
        _check_eta(eta, bound, "chi schedule")
        limit = build(chi.limit) if isinstance(chi, GeometricSequence) else None
        params = {"chi": _seq_spec(chi)}
        params.update(rule.describe)
        return KernelSchedule(
            base=base, alpha=alpha, rule="chi",
            kernel_fn=lambda n: build(float(chi(n))), eta_fn=eta, eta_bound=float(bound),
            limit=limit, params=params,
        )

    if isinstance(rule, MetricRule):
        if rule.scale is not None:
            U0 = np.eye(base.dim) if rule.U0 is None else np.asarray(rule.U0, dtype=float)
            scale = rule.scale

            def U_at(n):
                return float(scale(n)) * U0

            if rule.eta is not None:
                eta, bound = rule.eta, rule.eta_bound
            else:
                def eta(n):
                    return max(0.0, scale(n + 1) / scale(n) - 1.0)

                if isinstance(scale, GeometricSequence):
                    bound = 0.0 if scale.nonincreasing else scale.total_variation / max(
                        1e-300, min(scale.base, scale(0)))
                else:
                    bound = rule.eta_bound
            limit = None
            if isinstance(scale, GeometricSequence):
                limit = QuadraticKernel(scale.limit * U0)
            params = {"scale": _seq_spec(scale), "U0": U0.tolist()}
        elif rule.U is not None:
            U_at = rule.U
            if rule.eta is not None:
                eta, bound = rule.eta, rule.eta_bound
            else:
                def eta(n):
                    # largest generalized eigenvalue of (U_{n+1}, U_n)
                    w = sla.eigh(U_at(n + 1), U_at(n), eigvals_only=True)
                    return max(0.0, float(w[-1]) - 1.0)

                bound = rule.eta_bound
            limit = None
            params = {"U": "callable"}
        else:
            raise ContractError("metric rule needs either U or scale")
        _check_eta(eta, bound, "metric schedule")
        params.update(rule.describe)
        kernel_fn = functools.lru_cache(maxsize=4096)(lambda n: QuadraticKernel(U_at(n)))
        return KernelSchedule(
            base=base, alpha=alpha, rule="metric",
            kernel_fn=kernel_fn, eta_fn=eta, eta_bound=float(bound),
            limit=limit, params=params,
        )

    raise ContractError(f"unknown schedule rule {rule!r}")


@dataclass
class ScheduleReport:
    passed: bool
    worst_violation: float
    witness: Optional[dict]
    samples: int
    n_max: int
    seed: int

    def to_dict(self):
        return {
            "pass": self.passed,
            "worst_violation": self.worst_violation,
            "witness": self.witness,
            "samples": self.samples,
            "n_max": self.n_max,
            "seed": self.seed,
        }


def _draw_interior(kernel, sampler, rng, attempts=100):
    for _ in range(attempts):
        x = np.asarray(sampler(rng), dtype=float)
        if kernel.in_int_dom(x):
            return x
    raise SamplingError(f"no interior point of {kernel.kind} kernel after {attempts} draws")


def check_schedule(s: KernelSchedule, n_max: int = 20, samples: int = 200, rng_seed: int = 0,
                   sampler=None, atol: float = 1e-10) -> ScheduleReport:
    """Sampled test of D_{f_{n+1}} <= (1 + eta_n) D_{f_n} and D_{f_n} >= alpha D_f.

    The same ``samples`` interior pairs are reused for every n < n_max.  The
    reported violation is the largest amount by which either inequality
    fails (negative when both hold with room to spare).
    """
    if samples < 1:
        raise ContractError("samples must be >= 1")
    rng = np.random.default_rng(rng_seed)
    if sampler is None:
        sampler = interior_sampler(s.base)
    pairs = []
    for _ in range(samples):
        x = _draw_interior(s.base, sampler, rng)
        y = _draw_interior(s.base, sampler, rng)
        pairs.append((x, y))

    worst = -math.inf
    witness = None
    base_d = [bregman(s.base, x, y) for x, y in pairs]
    current = [bregman(s.kernel_at(0), x, y) for x, y in pairs]
    for n in range(n_max):
        eta = s.eta_at(n)
        nxt = [bregman(s.kernel_at(n + 1), x, y) for x, y in pairs]
        for i, (x, y) in enumerate(pairs):
            v_growth = nxt[i] - (1.0 + eta) * current[i]
            v_class = s.alpha * base_d[i] - current[i]
            for which, v in (("growth", v_growth), ("class", v_class)):
                if v > worst:
                    worst = v
                    witness = {"n": n, "x": x.tolist(), "y": y.tolist(), "inequality": which}
        current = nxt
    return ScheduleReport(
        passed=bool(worst <= atol), worst_violation=float(worst), witness=witness if worst > atol else None,
        samples=samples, n_max=n_max, seed=rng_seed,
    )
