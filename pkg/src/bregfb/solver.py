"""Forward-backward iteration engines, step schedules and validation.

One step reads

    x_{n+1} = (grad f_n + gamma_n A)^{-1}(grad f_n(x_n) - gamma_n B x_n)
    x*_{n+1} = (grad f_n(x_n) - grad f_n(x_{n+1})) / gamma_n - B x_n

so that (x_{n+1}, x*_{n+1}) lies in gra A.  ``run`` iterates the step and
records everything the diagnostics need; ``run_minimization`` additionally
enforces the step bound of the minimization variant.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .conditions import ConditionCertificate
from .core import BregfbError, ContractError, DomainViolation, DualVector, Vector, as_array
from .kernels import KernelSchedule, bregman
from .operators import MonotoneMap, SetValuedMap
from .resolvents import ResolventQuery, solve
from .diagnostics import IterationTrace

__all__ = [
    "StepSchedule",
    "Minimization",
    "Constraint",
    "ProblemSpec",
    "StopRule",
    "ValidationReport",
    "RunAborted",
    "validate",
    "fb_step",
    "run",
    "run_minimization",
    "eps_theta",
    "StepResult",
]

_REL = 1e-12
_HORIZON = 10_000


@dataclass(frozen=True)
class StepSchedule:
    """Step sizes gamma_n.

    kind
        ``constant``: gamma_n = gamma.
        ``list``: cycles through ``values``.
        ``harmonic-like``: gamma_n = gamma (1 + c / (n + 1)), c > -1.
        ``callable``: gamma_n = fn(n), bounds taken over ``horizon`` terms.
    eps
        The eps of the minimization step bound, in (0, 1).
    """

    kind: str = "constant"
    gamma: float = 1.0
    values: tuple = ()
    c: float = 0.0
    eps: Optional[float] = None
    fn: Optional[Callable[[int], float]] = None
    horizon: int = _HORIZON

    def __post_init__(self):
        if self.kind == "constant":
            if not self.gamma > 0:
                raise ContractError("gamma must be positive")
        elif self.kind == "list":
            vals = tuple(float(v) for v in self.values)
            if not vals or min(vals) <= 0:
                raise ContractError("step list must be nonempty and positive")
            object.__setattr__(self, "values", vals)
        elif self.kind == "harmonic-like":
            if not self.gamma > 0 or not self.c > -1:
                raise ContractError("harmonic-like steps need gamma > 0 and c > -1")
        elif self.kind == "callable":
            if self.fn is None:
                raise ContractError("callable steps need fn")
        else:
            raise ContractError(f"unknown step kind {self.kind!r}")
        if self.eps is not None and not 0.0 < self.eps < 1.0:
            raise ContractError("eps must lie in (0, 1)")

    @property
    def eps_min(self) -> Optional[float]:
        return self.eps

    def gamma_at(self, n: int) -> float:
        if self.kind == "constant":
            return float(self.gamma)
        if self.kind == "list":
            return self.values[n % len(self.values)]
        if self.kind == "harmonic-like":
            return self.gamma * (1.0 + self.c / (n + 1.0))
        return float(self.fn(n))

    def _window(self):
        return [self.gamma_at(n) for n in range(self.horizon + 1)]

    @property
    def inf_gamma(self) -> float:
        if self.kind == "constant":
            return float(self.gamma)
        if self.kind == "list":
            return min(self.values)
        if self.kind == "harmonic-like":
            return self.gamma * min(1.0, 1.0 + self.c / 1.0)
        return min(self._window())

    @property
    def sup_gamma(self) -> float:
        if self.kind == "constant":
            return float(self.gamma)
        if self.kind == "list":
            return max(self.values)
        if self.kind == "harmonic-like":
            return self.gamma * max(1.0, 1.0 + self.c)
        return max(self._window())

    @property
    def sup_ratio(self) -> float:
        """sup gamma_{n+1} / gamma_n."""
        if self.kind == "constant":
            return 1.0
        if self.kind == "list":
            v = self.values
            return max(v[(i + 1) % len(v)] / v[i] for i in range(len(v)))
        if self.kind == "harmonic-like":
            # the ratio tends to 1; for c < 0 it peaks at n = 0
            return max(1.0, (1.0 + self.c / 2.0) / (1.0 + self.c))
        w = self._window()
        return max(w[i + 1] / w[i] for i in range(len(w) - 1))

    def to_dict(self):
        out = {"kind": self.kind}
        if self.kind in ("constant", "harmonic-like"):
            out["gamma"] = self.gamma
        if self.kind == "list":
            out["gamma"] = list(self.values)
        if self.kind == "harmonic-like":
            out["c"] = self.c
        if self.eps is not None:
            out["eps"] = self.eps
        return out


@dataclass(frozen=True)
class Minimization:
    """phi + psi structure; defaults read the potentials of A and B.

    ``offset`` is added to the objective, e.g. the constant dropped when
    psi = |x - b|^2 / 2 is represented by the affine map x - b.
    """

    phi: Optional[Callable] = None
    psi: Optional[Callable] = None
    known_min: Optional[float] = None
    offset: float = 0.0


@dataclass(frozen=True)
class Constraint:
    """An extra step inequality ``lhs <= rhs`` (``lhs < rhs`` if strict)."""

    label: str
    lhs: float
    rhs: float
    strict: bool = False

    @property
    def holds(self):
        tol = _REL * max(1.0, abs(self.rhs))
        return self.lhs < self.rhs if self.strict else self.lhs <= self.rhs + tol


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    A: SetValuedMap
    B: MonotoneMap
    schedule: KernelSchedule
    steps: StepSchedule
    cert: ConditionCertificate
    x0: np.ndarray
    known_solution: Optional[np.ndarray] = None
    minimization: Optional[Minimization] = None
    constraints: tuple = ()
    name: str = "custom"
    document: Optional[dict] = None

    def __post_init__(self):
        d = self.schedule.base.dim
        if self.A.dim != d or self.B.dim != d:
            raise ContractError("A, B and the kernel must share one dimension")
        x0 = np.array(as_array(self.x0, d, "x0"), dtype=float)
        x0.setflags(write=False)
        object.__setattr__(self, "x0", x0)
        if self.known_solution is not None:
            z = np.array(as_array(self.known_solution, d, "known_solution"), dtype=float)
            z.setflags(write=False)
            object.__setattr__(self, "known_solution", z)

    @property
    def dim(self):
        return self.x0.size

    def objective(self, x) -> float:
        m = self.minimization
        if m is None:
            raise ContractError("problem has no minimization structure")
        phi = m.phi or self.A.potential
        psi = m.psi or self.B.potential
        return float(phi(x)) + float(psi(x)) + m.offset

    def fingerprint(self) -> str:
        doc = self.document or {
            "name": self.name,
            "kernel": self.schedule.spec(),
            "A": self.A.spec(),
            "B": self.B.spec(),
            "steps": self.steps.to_dict(),
            "cert": self.cert.to_dict(),
            "x0": self.x0.tolist(),
        }
        blob = json.dumps(doc, sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass(frozen=True)
class StopRule:
    max_iter: int = 100_000
    tol_step: float = 1e-14
    tol_residual: Optional[float] = None
    dense_cap: int = 10_000
    thin: int = 10
    resolvent_tol: float = 1e-12
    max_inner: int = 200

    def __post_init__(self):
        if self.max_iter < 1:
            raise ContractError("max_iter must be >= 1")
        if not self.tol_step > 0 or (self.tol_residual is not None and not self.tol_residual > 0):
            raise ContractError("tolerances must be positive")


@dataclass
class ValidationReport:
    passed: bool
    violations: list
    notes: dict

    def to_dict(self):
        return {"pass": self.passed, "violations": list(self.violations), "notes": self.notes}


class RunAborted(BregfbError):
    """A step failed; ``trace`` holds everything recorded before the failure."""

    def __init__(self, message, trace):
        super().__init__(message)
        self.trace = trace


def eps_theta(cert: ConditionCertificate, steps: StepSchedule) -> float:
    """Largest eps with delta1 gamma_{n+1} <= (1 - eps) gamma_n for all n."""
    if cert.delta1 == 0.0:
        return 1.0
    return 1.0 - cert.delta1 * steps.sup_ratio


def _boundedness_routes(f):
    caps = f.capabilities
    routes = []
    if caps.supercoercive:
        routes.append("supercoercive kernel")
    if caps.uniformly_convex:
        routes.append("uniformly convex kernel")
    if caps.cofinite:
        routes.append("finite dimension with open dom f*")
    if caps.symmetry_ratio is not None and caps.symmetry_ratio > 0:
        routes.append(f"symmetry ratio {caps.symmetry_ratio:g}")
    return routes


def validate(spec: ProblemSpec, minimization: bool = False) -> ValidationReport:
    """Check the step and kernel conditions of the iteration against ``spec``.

    Violations are reported by the inequality that fails, e.g.
    ``"sup κγ_n ≤ α"``.  With ``minimization=True`` the bound
    sup gamma_n <= alpha (1 - eps) / kappa is checked as well.
    """
    v = []
    cert, steps, sched = spec.cert, spec.steps, spec.schedule
    alpha = sched.alpha
    inf_g, sup_g = steps.inf_gamma, steps.sup_gamma
    ratio = steps.sup_ratio
    if not inf_g > 0:
        v.append("inf γ_n > 0")
    if cert.kappa * sup_g > alpha * (1.0 + _REL):
        v.append("sup κγ_n ≤ α")
    if not cert.delta1 * ratio < 1.0:
        v.append("sup δ₁γ_{n+1}/γ_n < 1")
    if minimization:
        eps = steps.eps
        if eps is None or not 0.0 < eps < 1.0:
            v.append("ε ∈ ]0,1[ declared for the minimization step bound")
        elif cert.kappa > 0 and sup_g > alpha * (1.0 - eps) / cert.kappa * (1.0 + _REL):
            v.append("sup γ_n ≤ α(1−ε)/κ")
        if spec.minimization is None:
            v.append("minimization structure present")
    if spec.minimization is not None:
        if not spec.A.is_subdifferential:
            v.append("A is a subdifferential")
        if not spec.B.has_potential:
            v.append("B is a gradient")
    for c in spec.constraints:
        if not c.holds:
            v.append(c.label)

    f0 = sched.kernel_at(0)
    if not f0.in_int_dom(spec.x0):
        v.append("x0 ∈ int dom f")
    if not spec.A.in_domain(spec.x0):
        v.append("x0 ∈ dom A")
    if not spec.B.in_dom_interior(spec.x0):
        v.append("x0 ∈ int dom B")

    notes = {
        "known_solution_interior": (None if spec.known_solution is None
                                    else bool(sched.base.in_int_dom(spec.known_solution))),
        "alpha": alpha,
        "kappa": cert.kappa,
        "delta1": cert.delta1,
        "delta2": cert.delta2,
        "route": cert.route,
        "inf_gamma": inf_g,
        "sup_gamma": sup_g,
        "sup_gamma_ratio": ratio,
        "sup_kappa_gamma_over_alpha": cert.kappa * sup_g / alpha,
        "eps_theta": eps_theta(cert, steps),
        "eta_bound": sched.eta_bound,
        "boundedness_routes": _boundedness_routes(sched.base),
        "cluster_route": "[d] finite dimension",
        "limit_kernel": "stored" if sched.limit is not None else "declared, not verified",
        "gradient_steps_vanish": bool(sched.base.capabilities.gradient_steps_vanish),
        "constraints": [{"label": c.label, "lhs": c.lhs, "rhs": c.rhs, "holds": c.holds}
                        for c in spec.constraints],
    }
    return ValidationReport(passed=not v, violations=v, notes=notes)


@dataclass(frozen=True)
class StepResult:
    x_next: Vector
    x_next_star: DualVector
    residual: float
    inclusion_gap: float


def _step(spec, n, x, Bx, tol, max_inner):
    f = spec.schedule.kernel_at(n)
    g = spec.steps.gamma_at(n)
    gx = f.grad(x)
    u = gx - g * Bx
    res = solve(ResolventQuery(f, g, spec.A, u), tol=tol, max_inner=max_inner)
    x1 = res.x.coords
    # the dual update, equal to the resolvent's a* by construction
    xs1 = (gx - f.grad(x1)) / g - Bx
    return f, g, x1, xs1, res


def fb_step(spec: ProblemSpec, n: int, x_n, tol: float = 1e-12, max_inner: int = 200) -> StepResult:
    """One forward-backward step from ``x_n`` at iteration ``n``."""
    x = as_array(x_n, spec.dim, "x_n")
    if not spec.B.in_dom_interior(x):
        raise DomainViolation("B is not defined at x_n")
    _, _, x1, xs1, res = _step(spec, n, x, spec.B.eval(x), tol, max_inner)
    return StepResult(Vector(x1), DualVector(xs1), res.residual, res.inclusion_gap)


def run(spec: ProblemSpec, stop: StopRule = StopRule(), force: bool = False,
        minimization: bool = False) -> IterationTrace:
    """Iterate until the stop rule fires.

    Raises
    ------
    ContractError
        Validation failed and ``force`` is False.
    RunAborted
        A step raised; the partial trace is attached.
    """
    report = validate(spec, minimization=minimization)
    if not report.passed and not force:
        raise ContractError("validation failed: " + "; ".join(report.violations))

    B, A = spec.B, spec.A
    z = spec.known_solution
    cert = spec.cert
    alpha = spec.schedule.alpha
    eps = eps_theta(cert, spec.steps)
    Bz = B.eval(z) if z is not None else None
    has_obj = spec.minimization is not None
    known_min = spec.minimization.known_min if has_obj else None

    tr = IterationTrace.start(
        dim=spec.dim,
        meta={
            "name": spec.name,
            "fingerprint": spec.fingerprint(),
            "validation": report.to_dict(),
            "certified": report.passed,
            "forced": bool(force and not report.passed),
            "mode": "minimization" if minimization else "inclusion",
            "kappa": cert.kappa,
            "delta1": cert.delta1,
            "delta2": cert.delta2,
            "alpha": alpha,
            "eps_theta": eps,
            "has_z": z is not None,
            "z": None if z is None else z.tolist(),
            "has_objective": has_obj,
            "known_min": known_min,
            "stop": {"max_iter": stop.max_iter, "tol_step": stop.tol_step,
                     "tol_residual": stop.tol_residual},
        },
        dense_cap=stop.dense_cap,
        thin=stop.thin,
    )

    x = spec.x0.copy()
    try:
        xs = A.selection(x)
    except BregfbError:
        xs = np.full(spec.dim, np.nan)
    status = "max_iter"
    cause = None

    def point_quantities(n, x, xs, Bx):
        f = spec.schedule.kernel_at(n)
        g = spec.steps.gamma_at(n)
        q = {"residual": float(np.linalg.norm(xs + Bx))}
        if z is not None:
            dz = bregman(f, z, x)
            q["d_to_z"] = dz
            q["delta"] = dz
            if cert.delta1 != 0.0:
                q["delta"] += cert.delta1 * g * float(np.dot(x - z, xs + Bz))
            q["b_pair"] = float(np.dot(x - z, Bx - Bz))
        if has_obj:
            obj = spec.objective(x)
            q["obj"] = obj
            if known_min is not None:
                q["gap"] = obj - known_min
        return q

    n = 0
    pq = {}
    try:
        Bx = B.eval(x)
        pq = point_quantities(0, x, xs, Bx)
        while n < stop.max_iter:
            f, g, x1, xs1, res = _step(spec, n, x, Bx, stop.resolvent_tol, stop.max_inner)
            if not B.in_dom_interior(x1):
                raise DomainViolation("iterate left int dom B")
            Bx1 = B.eval(x1)
            d_fwd = f.divergence(x1, x)
            d_bwd = f.divergence(x, x1)
            row = {
                "gamma": g,
                "eta": spec.schedule.eta_at(n),
                "d_step_fwd": d_fwd,
                "d_step_bwd": d_bwd,
                "item_iii": (1.0 - cert.kappa * g / alpha) * d_fwd,
                "resolvent_gap": res.inclusion_gap,
            }
            row.update(pq)
            if z is not None:
                v_term = float(np.dot(x1 - z, xs1 + Bz))
                row["item_v"] = v_term
                row["item_vi"] = (1.0 - cert.delta2) * pq["b_pair"]
                row["theta_qty"] = row["item_iii"] + eps * g * v_term + g * row["item_vi"]
            tr.append_row(n, x, xs, row)
            pq = point_quantities(n + 1, x1, xs1, Bx1)
            x, xs, Bx = x1, xs1, Bx1
            n += 1
            if d_fwd + d_bwd <= stop.tol_step:
                status = "converged_step_tol"
                break
            if stop.tol_residual is not None and pq["residual"] <= stop.tol_residual:
                status = "converged_residual"
                break
    except BregfbError as exc:
        tr.finish(x, xs, pq, "error", f"{type(exc).__name__}: {exc}")
        raise RunAborted(str(exc), tr) from exc
    except (FloatingPointError, OverflowError, ValueError, np.linalg.LinAlgError) as exc:
        tr.finish(x, xs, pq, "error", f"{type(exc).__name__}: {exc}")
        raise RunAborted(str(exc), tr) from exc
    tr.finish(x, xs, pq, status, cause)
    return tr


def run_minimization(spec: ProblemSpec, stop: StopRule = StopRule(), force: bool = False) -> IterationTrace:
    """``run`` under the minimization step bound, recording objective and gap."""
    if spec.minimization is None:
        raise ContractError("run_minimization needs a minimization structure")
    return run(spec, stop, force=force, minimization=True)
