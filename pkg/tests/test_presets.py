import math

import numpy as np
import pytest

from bregfb.core import ContractError
from bregfb.kernels import GeometricSequence, make_boltzmann_shannon, make_quadratic_metric
from bregfb.operators import (
    L1Subdifferential,
    LinearMap,
    LinearOperator,
    NormalConeBox,
    PowerGradient,
    ZeroMap,
    ZeroOperator,
)
from bregfb.presets import (
    PRESETS,
    preset_classical_fb,
    preset_example56,
    preset_proximal_point,
    preset_renaud_cohen,
    preset_strong,
    preset_variable_metric,
    preset_variational_inequality,
)
from bregfb.solver import StepSchedule, StopRule, run, validate

B_LS = LinearMap(np.eye(3), [-2.0, 0.5, -0.2])
A_L1 = L1Subdifferential(0.4, 3)
X0 = np.array([1.0, -1.0, 3.0])


def test_proximal_point():
    f = make_boltzmann_shannon(2)
    spec = preset_proximal_point(ZeroOperator(2), f, StepSchedule("list", values=(0.1, 50.0)),
                                 [1.0, 2.0])
    assert isinstance(spec.B, ZeroMap) and spec.cert.kappa == 0.0
    assert validate(spec).passed
    tr = run(preset_proximal_point(L1Subdifferential(1.0, 1), make_quadratic_metric(np.eye(1)),
                                   1.0, [10.0], known_solution=[0.0]))
    assert tr.N == 11 and tr.x_final[0] == 0.0


def test_variable_metric_identity_matches_classical():
    cl = preset_classical_fb(A_L1, B_LS, 1.0, 0.5, 0.9, X0)
    vm = preset_variable_metric(A_L1, B_LS, lambda n: 1.0, 1.0, 0.5, 0.9, X0, eta=lambda n: 0.0,
                                eta_bound=0.0)
    stop = StopRule(max_iter=40, tol_step=1e-300)
    a, b = run(cl, stop), run(vm, stop)
    assert a.N == b.N
    assert np.max(np.abs(a.iterates - b.iterates)) <= 1e-12
    assert np.array_equal(a.iterates, b.iterates)


def test_variable_metric_decreasing_scale():
    vm = preset_variable_metric(A_L1, B_LS, GeometricSequence(1.0, 1.0, 0.5), 1.0, 0.5, 1.0, X0)
    assert vm.schedule.eta_bound == 0.0
    assert all(vm.schedule.eta_at(n) == 0.0 for n in range(30))
    assert validate(vm).passed
    bad = preset_variable_metric(A_L1, B_LS, GeometricSequence(1.0, 1.0, 0.5), 1.0, 0.5, 1.6, X0)
    assert "sup γ_n ≤ (2β−ε)α" in validate(bad).violations


def test_classical_step_bound():
    assert validate(preset_classical_fb(A_L1, B_LS, 1.0, 0.5, 1.5, X0)).passed
    assert "sup γ_n ≤ (2β−ε)α" in validate(preset_classical_fb(A_L1, B_LS, 1.0, 0.5, 1.6, X0)).violations


def test_renaud_cohen():
    f = make_quadratic_metric(np.eye(3))
    ok = preset_renaud_cohen(A_L1, B_LS, f, 1.0, 1.5, X0)
    assert ok.cert.route == "renaud_cohen" and ok.cert.delta1 == ok.cert.delta2
    assert validate(ok).passed
    assert "γ < 2β" in validate(preset_renaud_cohen(A_L1, B_LS, f, 1.0, 2.0, X0)).violations
    tr = run(ok)
    assert tr.status == "converged_step_tol"
    assert tr.residual_final <= 1e-6


def test_variational_inequality():
    from bregfb.kernels import make_schedule
    from bregfb.conditions import derive_certificate

    f = make_quadratic_metric(np.eye(1))
    spec = preset_variational_inequality(NormalConeBox(0.0, 1.0, 1), LinearMap(np.eye(1), [-2.0]),
                                         make_schedule(f, 1.0), 0.5,
                                         derive_certificate("descent_pair", {"kappa": 1.0}), [0.5],
                                         known_solution=[1.0])
    tr = run(spec)
    assert tr.x_final[0] == pytest.approx(1.0, abs=1e-12)
    # <x - y, B x> + phi(x) <= phi(y) for y in the box
    x = tr.x_final[0]
    assert all((x - y) * (x - 2.0) <= 1e-12 for y in np.linspace(0, 1, 11))
    with pytest.raises(ContractError):
        preset_variational_inequality(LinearOperator([[1.0, 1.0], [-1.0, 1.0]]), ZeroMap(2),
                                      make_schedule(make_quadratic_metric(np.eye(2)), 1.0), 0.5,
                                      derive_certificate("descent_pair", {"kappa": 0.0}), [0, 0])


def test_example56_construction():
    spec = preset_example56(1.5, GeometricSequence(1.0, 1.0, 0.5), 50)
    assert spec.dim == 50
    f3 = spec.schedule.kernel_at(3)
    assert f3.z_part.chi == 1.0 + 2.0 ** -3 and f3.offset == 1.0
    x = np.concatenate([np.full(49, 0.5), [2.0]])
    chi = 1.0 + 2.0 ** -3
    oracle = chi * 49 * 0.5 ** 1.5 / 1.5 + 1.0 - 2.0 + 2.0 * math.log(2.0)
    assert abs(f3.value(x) - oracle) <= 1e-13
    assert isinstance(spec.B, PowerGradient)
    assert np.array_equal(spec.known_solution, np.r_[np.zeros(49), 1.0])
    assert validate(spec).passed


def test_strong():
    A = LinearOperator(np.eye(1))
    f = make_quadratic_metric(np.eye(1))
    psi = LinearMap([[2.0]])
    assert validate(preset_strong(A, psi, f, 2.0, 0.4, [3.0])).passed
    assert "sup γ_n < 1/κ" in validate(preset_strong(A, psi, f, 2.0, 0.5, [3.0])).violations
    tr = run(preset_strong(A, psi, f, 2.0, 0.4, [3.0], known_solution=[0.0]))
    assert abs(tr.x_final[0]) <= 1e-7


def test_registry():
    assert set(PRESETS) == {"proximal_point", "classical_fb", "variable_metric", "renaud_cohen",
                            "variational_inequality", "example56", "strong"}
