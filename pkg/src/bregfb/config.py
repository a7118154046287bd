"""JSON configuration documents for problems, presets, checks and sweeps.

A run configuration looks like::

    {
      "name": "lasso",
      "problem": {"kernel": {...}, "schedule": {...}, "steps": {...},
                  "A": {...}, "B": {...}, "certificate": {...},
                  "x0": [...], "known_solution": [...], "minimization": {...}},
      "mode": "minimization",
      "stop": {"max_iter": 500, "tol_step": 1e-14},
      "diagnostics": {"residual_tol": 1e-8},
      "outputs": {"trace_csv": "trace.csv", "report_json": "report.json"},
      "seed": 0
    }

Exactly one of ``problem`` and ``preset`` is present.  A preset entry is
``{"name": ..., <parameters>}`` where map-valued parameters use the same
sub-documents as ``problem``.
"""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass, field, fields
from typing import Optional

import numpy as np

from .conditions import ConditionCertificate
from .core import ContractError
from .kernels import (
    ChiRule,
    ConstantRule,
    GeometricSequence,
    LegendreKernel,
    MetricRule,
    PowerNormKernel,
    ProductKernel,
    make_boltzmann_shannon,
    make_power_norm,
    make_product_kernel,
    make_quadratic_metric,
    make_schedule,
)
from .operators import (
    L1Subdifferential,
    LinearMap,
    LinearOperator,
    MonotoneMap,
    NormalConeBox,
    NormalConeHalfspace,
    NormalConeSimplex,
    PowerGradient,
    ScalarRelation,
    SeparableOperator,
    SetValuedMap,
    ZeroMap,
    ZeroOperator,
)
from .presets import PRESETS
from .solver import Constraint, Minimization, ProblemSpec, StepSchedule, StopRule

__all__ = [
    "RunConfig",
    "load_config",
    "parse_config",
    "parse_kernel",
    "parse_sequence",
    "parse_schedule",
    "parse_steps",
    "parse_A",
    "parse_B",
    "parse_certificate",
    "parse_problem",
    "parse_preset",
    "parse_stop",
]


def _num(v):
    """JSON number, also accepting "inf" / "-inf" strings."""
    if isinstance(v, str):
        return float(v.replace("Infinity", "inf"))
    return float(v)


def _vec(v):
    return np.array([_num(t) for t in np.ravel(np.asarray(v, dtype=object))], dtype=float)


def _need(d, key, where):
    if key not in d:
        raise ContractError(f"{where}: missing field {key!r}")
    return d[key]


def parse_kernel(d: dict) -> LegendreKernel:
    kind = _need(d, "kind", "kernel")
    if kind == "quadratic":
        if "U" in d:
            return make_quadratic_metric(np.asarray(d["U"], float), d.get("alpha0"))
        return make_quadratic_metric(np.eye(int(_need(d, "dim", "kernel"))), d.get("alpha0"))
    if kind == "entropy":
        return make_boltzmann_shannon(int(_need(d, "dim", "kernel")))
    if kind == "power_norm":
        return make_power_norm(float(_need(d, "p", "kernel")), float(d.get("chi", 1.0)),
                               int(_need(d, "dim", "kernel")))
    if kind == "product":
        return make_product_kernel(parse_kernel(_need(d, "z", "kernel")),
                                   parse_kernel(_need(d, "xi", "kernel")),
                                   float(d.get("offset", 0.0)))
    raise ContractError(f"unknown kernel kind {kind!r}")


def parse_sequence(d):
    """Scalar sequences; only the geometric form base + amp * ratio**n."""
    if isinstance(d, (int, float)):
        return GeometricSequence(float(d), 0.0, 0.0)
    kind = d.get("kind", "geometric")
    if kind != "geometric":
        raise ContractError(f"unknown sequence kind {kind!r}")
    return GeometricSequence(float(d.get("base", 1.0)), float(d.get("amp", 1.0)),
                             float(d.get("ratio", 0.5)))


def _chi_builder(kernel: LegendreKernel):
    if isinstance(kernel, PowerNormKernel):
        return lambda c: make_power_norm(kernel.p, c, kernel.dim)
    if isinstance(kernel, ProductKernel) and isinstance(kernel.z_part, PowerNormKernel):
        z = kernel.z_part
        return lambda c: make_product_kernel(make_power_norm(z.p, c, z.dim), kernel.xi_part,
                                             kernel.offset)
    raise ContractError("a chi schedule needs a power-norm kernel or a product with one")


def parse_schedule(d: Optional[dict], kernel: LegendreKernel):
    d = d or {}
    alpha = d.get("alpha")
    if alpha is None:
        alpha = kernel.capabilities.strong_modulus or 1.0
    rule = d.get("rule", "constant")
    if rule == "constant":
        return make_schedule(kernel, alpha, ConstantRule())
    if rule == "chi":
        chi = parse_sequence(_need(d, "chi", "schedule"))
        return make_schedule(kernel, alpha, ChiRule(chi=chi, build=_chi_builder(kernel)))
    if rule == "metric":
        scale = parse_sequence(_need(d, "scale", "schedule"))
        U0 = np.asarray(d["U0"], float) if "U0" in d else None
        return make_schedule(kernel, alpha, MetricRule(scale=scale, U0=U0))
    raise ContractError(f"unknown schedule rule {rule!r}")


def parse_steps(d) -> StepSchedule:
    if isinstance(d, (int, float)):
        return StepSchedule(gamma=float(d))
    kind = d.get("kind", "constant")
    eps = d.get("eps")
    eps = None if eps is None else float(eps)
    if kind == "list":
        return StepSchedule(kind="list", values=tuple(d["gamma"]), eps=eps)
    if kind == "harmonic-like":
        return StepSchedule(kind="harmonic-like", gamma=float(d["gamma"]),
                            c=float(d.get("c", 1.0)), eps=eps)
    if kind == "constant":
        return StepSchedule(gamma=float(d["gamma"]), eps=eps)
    raise ContractError(f"unknown step kind {kind!r}")


def _dim_of(d, *keys):
    for k in keys:
        if k in d:
            return len(np.atleast_1d(d[k]))
    return None


def parse_A(d: dict) -> SetValuedMap:
    kind = _need(d, "kind", "A")
    if kind == "zero":
        return ZeroOperator(int(_need(d, "dim", "A")))
    if kind == "linear":
        M = np.asarray(_need(d, "M", "A"), float)
        return LinearOperator(M, d.get("c"))
    if kind == "constant":
        c = _vec(_need(d, "c", "A"))
        return LinearOperator(np.zeros((c.size, c.size)), c)
    if kind == "subdifferential":
        phi = _need(d, "phi", "A")
        if phi != "l1":
            raise ContractError(f"unknown subdifferential {phi!r}")
        lam = d.get("lam", 1.0)
        return L1Subdifferential(_vec(lam) if np.ndim(lam) else float(lam), d.get("dim"))
    if kind == "normal_cone":
        which = _need(d, "set", "A")
        if which == "box":
            lo, hi = d.get("lo", "-inf"), d.get("hi", "inf")
            lo = _vec(lo) if np.ndim(lo) else _num(lo)
            hi = _vec(hi) if np.ndim(hi) else _num(hi)
            return NormalConeBox(lo, hi, d.get("dim"))
        if which == "simplex":
            return NormalConeSimplex(int(_need(d, "dim", "A")), bool(d.get("allow_projection", False)))
        if which == "halfspace":
            return NormalConeHalfspace(_vec(_need(d, "a", "A")), float(_need(d, "b", "A")))
        raise ContractError(f"unknown normal cone set {which!r}")
    if kind == "separable":
        rels = [ScalarRelation.from_spec(
            {k: (_num(v) if k in ("lo", "hi") else v) for k, v in r.items()})
            for r in _need(d, "relations", "A")]
        return SeparableOperator(rels)
    raise ContractError(f"unknown operator kind {kind!r}")


def parse_B(d: dict) -> MonotoneMap:
    kind = _need(d, "kind", "B")
    if kind == "zero":
        return ZeroMap(int(_need(d, "dim", "B")))
    if kind == "linear":
        return LinearMap(np.asarray(_need(d, "M", "B"), float), d.get("c"))
    if kind == "identity":
        return LinearMap(np.eye(int(_need(d, "dim", "B"))))
    if kind == "least_squares":
        # grad of |x - b|^2 / 2
        b = _vec(_need(d, "b", "B"))
        return LinearMap(np.eye(b.size), -b)
    if kind == "power":
        return PowerGradient(float(_need(d, "p", "B")), _vec(_need(d, "weights", "B")))
    raise ContractError(f"unknown single-valued map kind {kind!r}")


def parse_certificate(d: dict) -> ConditionCertificate:
    return ConditionCertificate.from_dict(d)


def parse_minimization(d: Optional[dict]) -> Optional[Minimization]:
    if d is None:
        return None
    km = d.get("known_min")
    return Minimization(known_min=None if km is None else float(km),
                        offset=float(d.get("offset", 0.0)))


def parse_problem(d: dict, name: str = "custom") -> ProblemSpec:
    kernel = parse_kernel(_need(d, "kernel", "problem"))
    schedule = parse_schedule(d.get("schedule"), kernel)
    A = parse_A(_need(d, "A", "problem"))
    B = parse_B(_need(d, "B", "problem"))
    z = d.get("known_solution")
    cons = tuple(Constraint(c["label"], float(c["lhs"]), float(c["rhs"]), bool(c.get("strict")))
                 for c in d.get("constraints", []))
    return ProblemSpec(
        A=A, B=B, schedule=schedule, steps=parse_steps(_need(d, "steps", "problem")),
        cert=parse_certificate(_need(d, "certificate", "problem")),
        x0=_vec(_need(d, "x0", "problem")), known_solution=None if z is None else _vec(z),
        minimization=parse_minimization(d.get("minimization")), constraints=cons,
        name=name, document=copy.deepcopy(d),
    )


# how each preset parameter is parsed
_PRESET_FIELDS = {
    "A": parse_A, "phi": parse_A, "B": parse_B, "psi": parse_B, "f": parse_kernel,
    "steps": parse_steps, "cert": parse_certificate, "U": parse_sequence, "chi": parse_sequence,
    "x0": _vec, "known_solution": _vec, "minimization": parse_minimization,
}


def parse_preset(d: dict) -> ProblemSpec:
    d = dict(d)
    name = _need(d, "name", "preset")
    if name not in PRESETS:
        raise ContractError(f"unknown preset {name!r}; known: {sorted(PRESETS)}")
    doc = copy.deepcopy(d)
    kw = {}
    for k, v in d.items():
        if k == "name":
            continue
        if k == "schedule":
            continue
        parser = _PRESET_FIELDS.get(k)
        kw[k] = parser(v) if parser is not None and v is not None else v
    if "schedule" in d:
        kw["schedule"] = parse_schedule(d["schedule"], parse_kernel(_need(d, "kernel", "preset")))
        kw.pop("kernel", None)
    spec = PRESETS[name](**kw)
    object.__setattr__(spec, "document", {"preset": doc})
    return spec


def parse_stop(d: Optional[dict]) -> StopRule:
    d = dict(d or {})
    known = {f.name for f in fields(StopRule)}
    extra = set(d) - known
    if extra:
        raise ContractError(f"unknown stop fields {sorted(extra)}")
    return StopRule(**d)


@dataclass
class RunConfig:
    """A parsed configuration document."""

    name: str
    spec: Optional[ProblemSpec]
    stop: StopRule
    mode: str = "inclusion"
    seed: int = 0
    outputs: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)
    grid: Optional[dict] = None
    document: dict = field(default_factory=dict)


def parse_config(doc: dict, build_problem: bool = True) -> RunConfig:
    has_p, has_s = "problem" in doc, "preset" in doc
    if build_problem and has_p == has_s:
        raise ContractError("config needs exactly one of 'problem' and 'preset'")
    name = doc.get("name", "run")
    spec = None
    if build_problem:
        spec = parse_problem(doc["problem"], name) if has_p else parse_preset(doc["preset"])
        object.__setattr__(spec, "name", name)
    mode = doc.get("mode")
    if mode is None:
        mode = "minimization" if spec is not None and spec.minimization is not None else "inclusion"
    if mode not in ("inclusion", "minimization"):
        raise ContractError(f"unknown mode {mode!r}")
    return RunConfig(
        name=name, spec=spec, stop=parse_stop(doc.get("stop")), mode=mode,
        seed=int(doc.get("seed", 0)), outputs=dict(doc.get("outputs", {})),
        diagnostics=dict(doc.get("diagnostics", {})), checks=list(doc.get("checks", [])),
        grid=doc.get("grid"), document=copy.deepcopy(doc),
    )


def load_config(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise ContractError(f"config is not valid JSON: {exc}") from exc
