"""Named special cases of the forward-backward iteration.

Each preset assembles a :class:`ProblemSpec` with the kernel schedule,
certificate and extra step constraints of its special case.  Presets do not
raise on step violations; ``validate`` (and therefore ``run``) reports them.
"""

from __future__ import annotations

import math
from typing import Optional

import numpy as np

from .conditions import ConditionCertificate, derive_certificate
from .core import ContractError, as_array
from .kernels import (
    ChiRule,
    GeometricSequence,
    LegendreKernel,
    MetricRule,
    make_boltzmann_shannon,
    make_power_norm,
    make_product_kernel,
    make_quadratic_metric,
    make_schedule,
)
from .operators import (
    MonotoneMap,
    PowerGradient,
    ScalarRelation,
    SeparableOperator,
    SetValuedMap,
    ZeroMap,
)
from .solver import Constraint, Minimization, ProblemSpec, StepSchedule

__all__ = [
    "PRESETS",
    "preset_proximal_point",
    "preset_classical_fb",
    "preset_variable_metric",
    "preset_renaud_cohen",
    "preset_variational_inequality",
    "preset_example56",
    "example56_relation",
    "preset_strong",
]


def _steps(steps) -> StepSchedule:
    if isinstance(steps, StepSchedule):
        return steps
    return StepSchedule(gamma=float(steps))


def preset_proximal_point(A: SetValuedMap, f: LegendreKernel, steps, x0,
                          known_solution=None, minimization: Optional[Minimization] = None,
                          alpha: Optional[float] = None) -> ProblemSpec:
    """x_{n+1} = (grad f + gamma_n A)^{-1}(grad f(x_n)); B = 0, kappa = 0."""
    alpha = alpha or f.capabilities.strong_modulus or 1.0
    return ProblemSpec(
        A=A, B=ZeroMap(A.dim), schedule=make_schedule(f, alpha), steps=_steps(steps),
        cert=ConditionCertificate(0.0, 0.0, 0.0, "direct"), x0=x0,
        known_solution=known_solution, minimization=minimization, name="proximal_point",
    )


def _metric_constraint(steps, beta, eps, alpha):
    return Constraint("sup γ_n ≤ (2β−ε)α", steps.sup_gamma, (2.0 * beta - eps) * alpha)


def preset_classical_fb(A: SetValuedMap, B: MonotoneMap, beta: float, eps: float, steps, x0,
                        known_solution=None, minimization: Optional[Minimization] = None
                        ) -> ProblemSpec:
    """x_{n+1} = (Id + gamma_n A)^{-1}(x_n - gamma_n B x_n) for beta-cocoercive B."""
    steps = _steps(steps)
    f = make_quadratic_metric(np.eye(A.dim))
    return ProblemSpec(
        A=A, B=B, schedule=make_schedule(f, 1.0), steps=steps,
        cert=derive_certificate("cocoercive", {"alpha": 1.0, "beta": beta, "eps": eps}),
        x0=x0, known_solution=known_solution, minimization=minimization,
        constraints=(_metric_constraint(steps, beta, eps, 1.0),), name="classical_fb",
    )


def preset_variable_metric(A: SetValuedMap, B: MonotoneMap, U, beta: float, eps: float, steps, x0,
                           alpha: float = 1.0, eta=None, eta_bound=None, known_solution=None,
                           minimization: Optional[Minimization] = None) -> ProblemSpec:
    """x_{n+1} = (U_n + gamma_n A)^{-1}(U_n x_n - gamma_n B x_n).

    ``U`` is either a scalar sequence s_n (U_n = s_n Id, e.g. a
    :class:`GeometricSequence`) or a callable n -> matrix.  ``alpha`` is the
    declared lower bound on the spectra of the U_n.
    """
    steps = _steps(steps)
    d = A.dim
    probe = U(0)
    if np.ndim(probe) == 0:
        rule = MetricRule(scale=U, eta=eta, eta_bound=eta_bound)
    else:
        rule = MetricRule(U=U, eta=eta, eta_bound=eta_bound)
    base = make_quadratic_metric(np.eye(d), alpha0=alpha)
    return ProblemSpec(
        A=A, B=B, schedule=make_schedule(base, alpha, rule), steps=steps,
        cert=derive_certificate("cocoercive", {"alpha": alpha, "beta": beta, "eps": eps}),
        x0=x0, known_solution=known_solution, minimization=minimization,
        constraints=(_metric_constraint(steps, beta, eps, alpha),), name="variable_metric",
    )


def preset_renaud_cohen(A: SetValuedMap, B: MonotoneMap, f: LegendreKernel, beta: float,
                        gamma: float, x0, known_solution=None,
                        minimization: Optional[Minimization] = None) -> ProblemSpec:
    """Fixed gamma in (0, 2 beta) with a 1-strongly convex kernel f.

    eps is chosen midway, eps = (2 beta - gamma) / 2, so that
    gamma < 2 beta - eps whenever gamma < 2 beta.
    """
    gamma = float(gamma)
    eps = (2.0 * beta - gamma) / 2.0
    if not 0.0 < eps < 2.0 * beta:
        # outside (0, 2 beta) any admissible eps works for the certificate
        eps = beta
    return ProblemSpec(
        A=A, B=B, schedule=make_schedule(f, 1.0), steps=StepSchedule(gamma=gamma),
        cert=derive_certificate("renaud_cohen", {"alpha": 1.0, "beta": beta, "eps": eps}),
        x0=x0, known_solution=known_solution, minimization=minimization,
        constraints=(Constraint("γ < 2β", gamma, 2.0 * beta, strict=True),),
        name="renaud_cohen",
    )


def preset_variational_inequality(phi: SetValuedMap, B: MonotoneMap, schedule, steps,
                                  cert: ConditionCertificate, x0, known_solution=None
                                  ) -> ProblemSpec:
    """x_{n+1} = prox^{f_n}_{gamma_n phi}(grad f_n(x_n) - gamma_n B x_n)."""
    if not phi.is_subdifferential:
        raise ContractError("the variational-inequality preset needs A = subdifferential of phi")
    return ProblemSpec(
        A=phi, B=B, schedule=schedule, steps=_steps(steps), cert=cert, x0=x0,
        known_solution=known_solution, name="variational_inequality",
    )


def example56_relation() -> ScalarRelation:
    """Default xi-block operator t -> Sgn(t - 1) + 1 - 1/t on (0, inf).

    It is maximally monotone, not a subdifferential of a function on the
    product space together with the z block, and vanishes at t = 1.
    """
    return ScalarRelation(signs=((1.0, 1.0),), inv_w=1.0, inv_r=1.0)


def preset_example56(p: float = 1.5, chi=None, d: int = 50, A: Optional[SetValuedMap] = None,
                     x0=None, gamma: float = 1.0) -> ProblemSpec:
    """Power-norm times entropy product kernels with weights chi_n -> 1.

    f_n(z, xi) = chi_n |z|_p^p / p + 1 - xi + xi ln xi on R^{d-1} x (0, inf),
    B = grad(|z|_p^p / p) and, by default, A = 0 on the z block and
    :func:`example56_relation` on xi.  The certificate is the descent pair
    with kappa = 1, so delta1 = 0 and delta2 = 1.
    """
    if d < 2:
        raise ContractError("example56 needs d >= 2")
    chi = chi if chi is not None else GeometricSequence(1.0, 1.0, 0.5)
    k = d - 1
    xi_part = make_boltzmann_shannon(1)

    def build(c):
        return make_product_kernel(make_power_norm(p, c, k), xi_part, offset=1.0)

    base = make_product_kernel(make_power_norm(p, 1.0, k), xi_part, offset=0.0)
    schedule = make_schedule(base, 1.0, ChiRule(chi=chi, build=build,
                                                describe={"p": p, "d": d}))
    if A is None:
        A = SeparableOperator([ScalarRelation()] * k + [example56_relation()])
        z = np.concatenate([np.zeros(k), [1.0]])
    else:
        z = None
    weights = np.concatenate([np.full(k, 1.0 / p), [0.0]])
    B = PowerGradient(p, weights)
    if x0 is None:
        x0 = np.concatenate([1.0 / np.arange(1, k + 1), [3.0]])
    return ProblemSpec(
        A=A, B=B, schedule=schedule, steps=StepSchedule(gamma=gamma),
        cert=derive_certificate("descent_pair", {"kappa": 1.0}),
        x0=as_array(x0, d, "x0"), known_solution=z, name="example56",
    )


def preset_strong(A: SetValuedMap, psi: MonotoneMap, f: LegendreKernel, kappa: float, steps, x0,
                  known_solution=None, minimization: Optional[Minimization] = None
                  ) -> ProblemSpec:
    """Uniformly monotone A, B = grad psi with D_psi <= kappa D_f, sup gamma_n < 1/kappa."""
    steps = _steps(steps)
    if not kappa > 0:
        raise ContractError("kappa must be positive")
    return ProblemSpec(
        A=A, B=psi, schedule=make_schedule(f, 1.0), steps=steps,
        cert=derive_certificate("descent_pair", {"kappa": kappa}), x0=x0,
        known_solution=known_solution, minimization=minimization,
        constraints=(Constraint("sup γ_n < 1/κ", steps.sup_gamma, 1.0 / kappa, strict=True),),
        name="strong",
    )


PRESETS = {
    "proximal_point": preset_proximal_point,
    "classical_fb": preset_classical_fb,
    "variable_metric": preset_variable_metric,
    "renaud_cohen": preset_renaud_cohen,
    "variational_inequality": preset_variational_inequality,
    "example56": preset_example56,
    "strong": preset_strong,
}
