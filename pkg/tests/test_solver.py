import math

import numpy as np
import pytest

from bregfb.conditions import ConditionCertificate, derive_certificate
from bregfb.core import ContractError
from bregfb.kernels import make_boltzmann_shannon, make_quadratic_metric, make_schedule
from bregfb.operators import (
    GradientMap,
    L1Subdifferential,
    LinearMap,
    NormalConeBox,
    NormalConeSimplex,
    ZeroMap,
    ZeroOperator,
)
from bregfb.solver import (
    Minimization,
    ProblemSpec,
    RunAborted,
    StepSchedule,
    StopRule,
    eps_theta,
    fb_step,
    run,
    run_minimization,
    validate,
)

Q1 = make_quadratic_metric(np.eye(1))


def _spec(A, B, f=Q1, gamma=0.5, cert=None, x0=(1.0,), z=None, alpha=1.0, minimization=None,
          steps=None):
    cert = cert or derive_certificate("descent_pair", {"kappa": 1.0})
    return ProblemSpec(A=A, B=B, schedule=make_schedule(f, alpha),
                       steps=steps or StepSchedule(gamma=gamma), cert=cert, x0=np.array(x0),
                       known_solution=None if z is None else np.array(z),
                       minimization=minimization)


def test_step_schedules():
    s = StepSchedule("list", values=(1.0, 3.0))
    assert [s.gamma_at(n) for n in range(4)] == [1.0, 3.0, 1.0, 3.0]
    assert (s.inf_gamma, s.sup_gamma, s.sup_ratio) == (1.0, 3.0, 3.0)
    h = StepSchedule("harmonic-like", gamma=1.0, c=1.0)
    assert h.gamma_at(0) == 2.0 and h.sup_gamma == 2.0 and h.inf_gamma == 1.0
    c = StepSchedule("callable", fn=lambda n: 1.0 + 0.5 ** n, horizon=50)
    assert c.sup_gamma == 2.0 and c.sup_ratio <= 1.0
    with pytest.raises(ContractError):
        StepSchedule(gamma=0.0)
    with pytest.raises(ContractError):
        StepSchedule(gamma=1.0, eps=1.0)


def test_validate_examples():
    assert validate(_spec(ZeroOperator(1), LinearMap(np.eye(1)), gamma=0.5)).passed
    rep = validate(_spec(ZeroOperator(1), LinearMap(np.eye(1)), gamma=2.0))
    assert rep.violations == ["sup κγ_n ≤ α"]
    cert = ConditionCertificate(0.1, 0.5, 0.5, "direct")
    rep = validate(_spec(ZeroOperator(1), LinearMap(np.eye(1)), cert=cert,
                         steps=StepSchedule("list", values=(1.0, 3.0))))
    assert rep.violations == ["sup δ₁γ_{n+1}/γ_n < 1"]
    assert rep.notes["cluster_route"] == "[d] finite dimension"


def test_validate_domain_and_structure():
    e = make_boltzmann_shannon(1)
    rep = validate(_spec(ZeroOperator(1), ZeroMap(1), f=e, x0=(0.0,)))
    assert "x0 ∈ int dom f" in rep.violations
    rep = validate(_spec(NormalConeBox(0.0, 1.0, 1), ZeroMap(1), x0=(2.0,)))
    assert "x0 ∈ dom A" in rep.violations
    rep = validate(_spec(ZeroOperator(1), ZeroMap(1)), minimization=True)
    assert "ε ∈ ]0,1[ declared for the minimization step bound" in rep.violations
    assert "minimization structure present" in rep.violations


def test_eps_theta():
    steps = StepSchedule("list", values=(1.0, 1.5))
    assert eps_theta(ConditionCertificate(0.0, 0.5, 0.5, "direct"), steps) == 0.25
    assert eps_theta(ConditionCertificate(0.0, 0.0, 0.5, "direct"), steps) == 1.0


def test_fb_step_examples():
    r = fb_step(_spec(ZeroOperator(1), LinearMap(np.eye(1))), 0, [4.0])
    assert r.x_next[0] == 2.0
    e = make_boltzmann_shannon(2)
    x = np.array([0.3, 4.0])
    r = fb_step(_spec(ZeroOperator(2), ZeroMap(2), f=e, x0=x), 0, x)
    assert np.allclose(r.x_next.coords, x, rtol=1e-15)
    e1 = make_boltzmann_shannon(1)
    r = fb_step(_spec(ZeroOperator(1), LinearMap(np.eye(1)), f=e1), 0, [1.0])
    assert abs(r.x_next[0] - math.exp(-0.5)) <= 1e-16
    # the dual update lands in A x_next
    A = L1Subdifferential(1.0, 1)
    r = fb_step(_spec(A, LinearMap(np.eye(1), [-3.0]), gamma=1.0), 0, [0.0])
    assert A.member(r.x_next.coords, r.x_next_star.coords, tol=1e-12)


def test_run_geometric():
    tr = run(_spec(ZeroOperator(1), LinearMap(np.eye(1)), z=(0.0,)), StopRule(tol_step=1e-20))
    assert tr.status == "converged_step_tol" and 32 <= tr.N <= 35
    X = np.vstack([tr.iterates, tr.x_final]).ravel()
    assert np.array_equal(X, 2.0 ** -np.arange(tr.N + 1))


def test_run_half_line():
    spec = _spec(NormalConeBox(0.0, math.inf, 1), LinearMap(np.eye(1), [-1.0]), x0=(2.0,), z=(1.0,))
    tr = run(spec)
    assert tr.status == "converged_step_tol"
    assert abs(tr.x_final[0] - 1.0) <= 1e-7


def test_run_proximal_point_abs():
    cert = ConditionCertificate(0.0, 0.0, 0.0, "direct")
    tr = run(_spec(L1Subdifferential(1.0, 1), ZeroMap(1), gamma=1.0, cert=cert, x0=(10.0,), z=(0.0,)))
    X = np.vstack([tr.iterates, tr.x_final]).ravel()
    assert np.array_equal(X, np.maximum(10.0 - np.arange(tr.N + 1), 0.0))
    assert tr.N == 11
    # Bregman monotonicity toward the solution
    d = tr.series("d_to_z")
    assert np.all(np.diff(d) <= 1e-10)


def test_fixed_point_is_stationary():
    spec = _spec(L1Subdifferential(1.0, 1), LinearMap(np.eye(1), [-3.0]), gamma=0.5, x0=(2.0,),
                 z=(2.0,))
    tr = run(spec, StopRule(max_iter=5))
    assert tr.N == 1 and tr.column("d_step_fwd")[0] <= 1e-12
    assert tr.residual_final <= 1e-12


def test_run_requires_validation_unless_forced():
    spec = _spec(ZeroOperator(1), LinearMap(np.eye(1)), gamma=2.5)
    with pytest.raises(ContractError, match="sup κγ_n ≤ α"):
        run(spec)
    tr = run(spec, StopRule(max_iter=10), force=True)
    assert tr.status == "max_iter" and not tr.certified and tr.meta["forced"]
    assert abs(tr.x_final[0]) == pytest.approx(1.5 ** 10)


def test_domain_violation_aborts_with_partial_trace():
    B = GradientMap(1, lambda x: x, psi=lambda x: 0.5 * float(x @ x), in_dom=lambda x: bool(x[0] > 0.5))
    spec = _spec(ZeroOperator(1), B, gamma=0.9)
    with pytest.raises(RunAborted) as err:
        run(spec)
    tr = err.value.trace
    assert tr.status == "error" and "DomainViolation" in tr.cause
    assert tr.N == 0 and tr.x_final[0] == 1.0


def _least_squares(a):
    a = np.asarray(a, float)
    return LinearMap(np.eye(a.size), -a), 0.5 * float(a @ a)


def test_minimization_one_step():
    B, off = _least_squares([1.5, -2.0])
    Q2 = make_quadratic_metric(np.eye(2))
    spec = _spec(ZeroOperator(2), B, f=Q2, gamma=1.0, x0=(0.0, 0.0),
                 steps=StepSchedule(gamma=1.0, eps=0.5),
                 minimization=Minimization(known_min=0.0, offset=off))
    # unit step sits outside the minimization step bound, so it must be forced
    assert "sup γ_n ≤ α(1−ε)/κ" in validate(spec, minimization=True).violations
    tr = run_minimization(spec, StopRule(max_iter=5), force=True)
    assert np.array_equal(tr.x_at(1), [1.5, -2.0])
    assert tr.series("gap")[1] == 0.0


def test_minimization_entropic_simplex():
    c = np.array([0.0, 1.0])
    spec = _spec(NormalConeSimplex(2), LinearMap(np.zeros((2, 2)), c),
                 f=make_boltzmann_shannon(2), x0=(0.5, 0.5),
                 cert=derive_certificate("descent_pair", {"kappa": 0.0}),
                 steps=StepSchedule(gamma=0.5, eps=0.5), minimization=Minimization(known_min=0.0))
    tr = run_minimization(spec, StopRule(max_iter=200))
    for n in (1, 7, 30):
        w = np.exp(-0.5 * n * c)
        assert np.allclose(tr.x_at(n), w / w.sum(), rtol=1e-12, atol=0)
    gap = tr.series("gap")
    assert np.allclose(gap, [np.dot(c, tr.x_at(n)) for n in range(tr.N + 1)], rtol=1e-12, atol=1e-300)
    assert np.all(np.diff(tr.series("obj")) <= 1e-10)
    assert tr.x_final[0] > 1 - 1e-10


def test_minimization_soft_threshold():
    B, off = _least_squares([3.0, 0.0])
    Q2 = make_quadratic_metric(np.eye(2))
    spec = _spec(L1Subdifferential(1.0, 2), B, f=Q2, x0=(0.0, 5.0),
                 steps=StepSchedule(gamma=0.5, eps=0.5),
                 minimization=Minimization(known_min=2.5, offset=off))
    tr = run_minimization(spec)
    assert np.allclose(tr.x_final, [2.0, 0.0], atol=1e-7)
    obj = tr.series("obj")
    assert np.all(np.diff(obj) <= 1e-10 * (1 + np.abs(obj[:-1])))


def test_run_minimization_needs_structure():
    with pytest.raises(ContractError):
        run_minimization(_spec(ZeroOperator(1), ZeroMap(1)))


def test_dense_cap_thins_iterates():
    tr = run(_spec(ZeroOperator(1), LinearMap(np.eye(1))),
             StopRule(max_iter=50, tol_step=1e-300, dense_cap=10, thin=5))
    assert len(tr.column("gamma")) == tr.N
    assert tr.x_index[:12] == list(range(10)) + [10, 15]
    with pytest.raises(ContractError):
        tr.x_at(11)


def test_fingerprint_stable():
    a = _spec(ZeroOperator(1), LinearMap(np.eye(1)))
    b = _spec(ZeroOperator(1), LinearMap(np.eye(1)))
    c = _spec(ZeroOperator(1), LinearMap(np.eye(1)), gamma=0.25)
    assert a.fingerprint() == b.fingerprint() != c.fingerprint()
