"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run directly (``python tests/test_acceptance.py``) or through pytest; the
pytest terminal summary lists every criterion.
"""

import json
import math
import os
import sys
import time

import mpmath
import numpy as np
import pytest
from scipy import optimize

sys.path.insert(0, os.path.dirname(__file__))

from acceptance_registry import criterion  # noqa: E402

import bregfb  # noqa: E402
from bregfb import cli  # noqa: E402
from bregfb.conditions import (  # noqa: E402
    check_descent_pair,
    check_descent_triple,
    derive_certificate,
)
from bregfb.config import load_config, parse_config  # noqa: E402
from bregfb.diagnostics import diagnose  # noqa: E402
from bregfb.kernels import (  # noqa: E402
    GeometricSequence,
    bregman,
    check_schedule,
    finite_difference_gradient,
    make_boltzmann_shannon,
    make_power_norm,
    make_product_kernel,
    make_quadratic_metric,
)
from bregfb.operators import (  # noqa: E402
    L1Subdifferential,
    LinearOperator,
    NormalConeBox,
    NormalConeHalfspace,
    NormalConeSimplex,
    PowerGradient,
    ZeroOperator,
)
from bregfb.resolvents import prox  # noqa: E402
from bregfb.solver import run, run_minimization, validate  # noqa: E402

CONFIGS = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "configs")
mpmath.mp.dps = 40


def _cfg(name):
    return parse_config(load_config(os.path.join(CONFIGS, name)))


def _execute(cfg, force=False):
    if cfg.mode == "minimization":
        return run_minimization(cfg.spec, cfg.stop, force=force)
    return run(cfg.spec, cfg.stop, force=force)


# --------------------------------------------------------------------------
# 1. kernel calculus


def _kernels():
    rng = np.random.default_rng(11)
    Q = rng.standard_normal((4, 4))
    U = Q @ Q.T + 0.5 * np.eye(4)
    out = [
        ("quadratic", make_quadratic_metric(U)),
        ("entropy", make_boltzmann_shannon(4)),
        ("power1.5", make_power_norm(1.5, 1.7, 4)),
        ("power2", make_power_norm(2.0, 1.0, 4)),
        ("power3", make_power_norm(3.0, 2.5, 4)),
        ("product", make_product_kernel(make_power_norm(1.5, 1.25, 3), make_boltzmann_shannon(1), 1.0)),
    ]
    return out


def _interior(name, kernel, rng):
    # power-type blocks keep |z_k| >= 0.1: the central stencil must not straddle
    # the point where |z|^p loses smoothness for p < 2
    if name.startswith("power"):
        return rng.choice([-1.0, 1.0], kernel.dim) * rng.uniform(0.1, 3.0, kernel.dim)
    if name == "product":
        z = rng.choice([-1.0, 1.0], 3) * rng.uniform(0.1, 3.0, 3)
        return np.concatenate([z, rng.uniform(0.05, 5.0, 1)])
    return kernel.sample_interior(rng, 3.0)


def test_criterion_01_kernel_calculus():
    with criterion("1", "kernel calculus: finite differences, conjugate inversion, three-point identity"):
        t0 = time.perf_counter()
        rng = np.random.default_rng(2024)
        for name, f in _kernels():
            for _ in range(200):
                x, y, z = (_interior(name, f, rng) for _ in range(3))
                g = f.grad(x)
                fd = finite_difference_gradient(f.value, x)
                assert np.linalg.norm(g - fd) / (1 + np.linalg.norm(g)) <= 1e-6, name
                back = f.grad_conjugate(g)
                assert np.linalg.norm(back - x) <= 1e-8 * np.linalg.norm(x), name
                lhs = float(np.dot(f.grad(y) - f.grad(x), z - x))
                rhs = bregman(f, z, x) + bregman(f, x, y) - bregman(f, z, y)
                assert abs(lhs - rhs) <= 1e-9, (name, lhs - rhs)
        assert time.perf_counter() - t0 < 5.0


# --------------------------------------------------------------------------
# 2. resolvent oracle equivalence


def _scalar_pairs():
    q = make_quadratic_metric(np.array([[1.7]]))
    e = make_boltzmann_shannon(1)
    p15, p3 = make_power_norm(1.5, 1.3, 1), make_power_norm(3.0, 2.0, 1)

    def lin(rng):
        return LinearOperator([[rng.uniform(0, 3)]], [rng.uniform(-2, 2)])

    def const(rng):
        return LinearOperator([[0.0]], [rng.uniform(-2, 2)])

    def l1(rng):
        return L1Subdifferential(rng.uniform(0.1, 2), 1)

    def box(rng):
        lo = rng.uniform(-2, 1)
        return NormalConeBox(lo, lo + rng.uniform(0.1, 3), 1)

    def pos_box(rng):
        lo = rng.uniform(0.01, 1)
        return NormalConeBox(lo, lo + rng.uniform(0.1, 3), 1)

    return [
        ("any+zero/quadratic", q, lambda r: ZeroOperator(1)),
        ("any+zero/entropy", e, lambda r: ZeroOperator(1)),
        ("any+zero/power1.5", p15, lambda r: ZeroOperator(1)),
        ("any+zero/power3", p3, lambda r: ZeroOperator(1)),
        ("quadratic+linear", q, lin),
        ("quadratic+l1", q, l1),
        ("box/quadratic", q, box),
        ("box/entropy", e, pos_box),
        ("box/power3", p3, box),
        ("entropy+constant", e, const),
        ("entropy+l1", e, l1),
    ]


def _simplex_projection_oracle(u, diag):
    # sort-based projection for the identity metric; diag is a multiple of 1
    v = u / diag[0]
    s = np.sort(v)[::-1]
    css = np.cumsum(s)
    rho = np.nonzero(s * np.arange(1, v.size + 1) > (css - 1))[0][-1]
    theta = (css[rho] - 1) / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


def test_criterion_02_resolvent_oracles():
    with criterion("2", "resolvent closed forms agree with bisection-Newton and oracles"):
        t0 = time.perf_counter()
        rng = np.random.default_rng(7)
        for name, f, make_A in _scalar_pairs():
            for _ in range(500):
                A = make_A(rng)
                gamma = rng.uniform(0.1, 3.0)
                u = np.array([rng.uniform(-5, 5)])
                cf = prox(f, A, gamma, u, method="closed_form")
                sp = prox(f, A, gamma, u, method="separable")
                assert abs(cf.x[0] - sp.x[0]) <= 1e-10, (name, cf.x[0], sp.x[0])
                for r in (cf, sp):
                    assert r.residual <= 1e-12 and r.inclusion_gap <= 1e-12, (name, r)
        # halfspace in one dimension is a half-line, solved by the separable path
        q = make_quadratic_metric(np.array([[1.7]]))
        for _ in range(500):
            a = rng.choice([-1.0, 1.0]) * rng.uniform(0.5, 2)
            b = rng.uniform(-2, 2)
            gamma, u = rng.uniform(0.1, 3.0), np.array([rng.uniform(-5, 5)])
            cf = prox(q, NormalConeHalfspace([a], b), gamma, u)
            lo, hi = (-math.inf, b / a) if a > 0 else (b / a, math.inf)
            sp = prox(q, NormalConeBox(lo, hi, 1), gamma, u, method="separable")
            assert abs(cf.x[0] - sp.x[0]) <= 1e-10
            assert cf.residual <= 1e-12 and cf.inclusion_gap <= 1e-12
        # simplex closed forms have no scalar path: compare with independent oracles
        e3 = make_boltzmann_shannon(3)
        q3 = make_quadratic_metric(np.eye(3))
        for _ in range(500):
            u = rng.uniform(-5, 5, 3)
            gamma = rng.uniform(0.1, 3.0)
            r = prox(e3, NormalConeSimplex(3), gamma, u)
            lse = mpmath.log(mpmath.fsum(mpmath.exp(mpmath.mpf(float(t))) for t in u))
            oracle = np.array([float(mpmath.exp(mpmath.mpf(float(t)) - lse)) for t in u])
            assert np.max(np.abs(r.x.coords - oracle)) <= 1e-10
            assert r.residual <= 1e-12 and r.inclusion_gap <= 1e-12
            r = prox(q3, NormalConeSimplex(3, allow_projection=True), gamma, u)
            assert np.max(np.abs(r.x.coords - _simplex_projection_oracle(u, np.ones(3)))) <= 1e-10
            assert r.residual <= 1e-12 and r.inclusion_gap <= 1e-12
        assert time.perf_counter() - t0 < 5.0


# --------------------------------------------------------------------------
# 3. certificate formulas


def test_criterion_03_certificate_formulas():
    with criterion("3", "certificate formulas and the eps -> 2 beta blow-up"):
        rng = np.random.default_rng(3)
        for _ in range(20):
            alpha, beta, mu, nu = rng.uniform(0.1, 5, 4)
            eps = rng.uniform(0.01, 0.99) * 2 * beta
            A, B, E = (mpmath.mpf(float(t)) for t in (alpha, beta, eps))
            for route in ("cocoercive", "renaud_cohen", "angle_bounded", "lipschitz_potential"):
                c = derive_certificate(route, {"alpha": alpha, "beta": beta, "eps": eps})
                kappa = 1 / (A * (2 * B - E))
                d2 = (2 * B - E) / (2 * B)
                assert c.kappa == 1.0 / (alpha * (2.0 * beta - eps))
                assert abs(c.kappa - float(kappa)) <= 4e-16 * float(kappa)
                assert abs(c.delta2 - float(d2)) <= 4e-16
                assert c.delta1 == (c.delta2 if route == "renaud_cohen" else 0.0)
                assert c.reconstruct() == c
            eps_s = rng.uniform(0.01, 0.99) * 2 * mu / nu**2
            M, N, E = (mpmath.mpf(float(t)) for t in (mu, nu, eps_s))
            c = derive_certificate("strong_monotone", {"alpha": alpha, "mu": mu, "nu": nu, "eps": eps_s})
            kappa = N**2 / (A * (2 * M - E * N**2))
            d = (2 * M - E * N**2) / (2 * M)
            assert abs(c.kappa - float(kappa)) <= 1e-14 * float(kappa)
            assert abs(c.delta1 - float(d)) <= 1e-14 and c.delta1 == c.delta2
            assert c.reconstruct() == c
            c = derive_certificate("descent_pair", {"kappa": float(alpha)})
            assert (c.kappa, c.delta1, c.delta2) == (float(alpha), 0.0, 1.0)
        kappas = [derive_certificate("cocoercive", {"alpha": 1.0, "beta": 1.0,
                                                    "eps": 2.0 * (1 - 10.0**-k)}).kappa
                  for k in range(1, 10)]
        assert all(b > a for a, b in zip(kappas, kappas[1:]))
        assert kappas[-1] > 1e6


# --------------------------------------------------------------------------
# 4. counterexample regressions


def test_criterion_04_counterexample():
    with criterion("4", "descent pair falsified, descent triple holds on the half-line example"):
        t0 = time.perf_counter()
        f = make_quadratic_metric(np.eye(1))
        psi = PowerGradient(1.5, [1.0])
        K = NormalConeBox(0.0, math.inf, 1)
        witnesses = 0
        for seed in range(5):
            rep = check_descent_pair(psi, f, 1e6, samples=10_000, seed=seed, A=K)
            witnesses += rep.witness is not None
        assert witnesses >= 4
        rep = check_descent_triple(psi, f, 1.0, [[0.0]], samples=10_000, seed=0, A=K)
        assert rep.passed, rep.to_dict()
        assert time.perf_counter() - t0 < 2.0


# --------------------------------------------------------------------------
# 5. classical forward-backward on a lasso problem


def _lasso_oracle(b):
    xs, total = [], 0.0
    for bk in b:
        r = optimize.minimize_scalar(lambda t: abs(t) + 0.5 * (t - bk) ** 2,
                                     bounds=(-10, 10), method="bounded",
                                     options={"xatol": 1e-12})
        xs.append(r.x)
    xs = np.array(xs)
    total = float(np.sum(np.abs(xs)) + 0.5 * np.sum((xs - b) ** 2))
    return xs, total


def test_criterion_05_classical_fb_lasso():
    with criterion("5", "classical forward-backward lasso in R^10"):
        t0 = time.perf_counter()
        cfg = _cfg("lasso_classical_fb.json")
        b = -cfg.spec.B.c
        xs, fmin = _lasso_oracle(b)
        assert np.max(np.abs(xs - cfg.spec.known_solution)) <= 1e-6
        assert abs(fmin - cfg.spec.minimization.known_min) <= 1e-9
        tr = _execute(cfg)
        assert tr.status.startswith("converged") and tr.N <= 500
        assert tr.residual_final <= 1e-8
        v = diagnose(tr)
        for name in ("check_monotone_objective", "check_rate_o1n", "check_weighted_step_sum",
                     "check_quasi_fejer", "check_summability"):
            assert v[name].status == "pass", (name, v[name].to_dict())
        assert time.perf_counter() - t0 < 1.0


# --------------------------------------------------------------------------
# 6. entropic mirror descent on the simplex


def test_criterion_06_entropic_mirror_descent():
    with criterion("6", "entropic mirror descent on the simplex"):
        t0 = time.perf_counter()
        cfg = _cfg("entropic_simplex.json")
        assert validate(cfg.spec, minimization=True).passed
        tr = _execute(cfg)
        assert tr.N <= 5000
        assert np.linalg.norm(tr.x_final - np.array([1.0, 0.0, 0.0])) <= 1e-4
        X = np.vstack([tr.iterates, tr.x_final])
        assert np.all(X > 0.0)
        # closed form x_n proportional to x_0 exp(-n gamma c)
        c, g = [0, 1, 2], 0.5
        for n in (1, 5, 20):
            w = [mpmath.exp(-n * g * ck) for ck in c]
            s = mpmath.fsum(w)
            assert np.max(np.abs(tr.x_at(n) - np.array([float(t / s) for t in w]))) <= 1e-12
        v = diagnose(tr)
        for name in ("check_rate_o1n", "check_monotone_objective", "check_weighted_step_sum"):
            assert v[name].status == "pass", (name, v[name].to_dict())
        assert time.perf_counter() - t0 < 1.0


# --------------------------------------------------------------------------
# 7. variable metric


def _x_at_100(cfg):
    stop = bregfb.StopRule(max_iter=100, tol_step=1e-300)
    tr = run(cfg.spec, stop)
    return tr, (tr.x_at(100) if tr.N == 100 else tr.x_final)


def test_criterion_07_variable_metric():
    with criterion("7", "variable metric U_n = (1 + 2^-n) I against classical forward-backward"):
        t0 = time.perf_counter()
        vm = _cfg("variable_metric_lasso.json")
        cl = _cfg("lasso_classical_fb.json")
        tv, xv = _x_at_100(vm)
        tc, xc = _x_at_100(cl)
        assert np.max(np.abs(xv - xc)) <= 1e-3
        assert np.max(np.abs(tv.x_final - tc.x_final)) <= 1e-8
        sched = vm.spec.schedule
        assert all(sched.eta_at(n) == 0.0 for n in range(100))
        assert check_schedule(sched, n_max=20, samples=200, rng_seed=0).passed
        assert time.perf_counter() - t0 < 1.0


# --------------------------------------------------------------------------
# 8. Bregman proximal point


def test_criterion_08_proximal_point():
    with criterion("8", "proximal point telescoping and entropy closed-form orbit"):
        t0 = time.perf_counter()
        tr = _execute(_cfg("proximal_point_abs.json"))
        assert tr.N == 11
        xs = np.vstack([tr.iterates, tr.x_final]).ravel()
        assert np.array_equal(xs[:11], np.maximum(10.0 - np.arange(11), 0.0))
        cfg = _cfg("proximal_point_entropy.json")
        tr = _execute(cfg)
        x0 = cfg.spec.x0
        c = cfg.spec.A.c
        gamma = cfg.spec.steps.gamma_at(0)
        for n in range(tr.N + 1):
            oracle = np.array([float(mpmath.mpf(float(x0[k])) * mpmath.exp(-n * mpmath.mpf(gamma)
                                                                          * mpmath.mpf(float(c[k]))))
                               for k in range(3)])
            assert np.max(np.abs(tr.x_at(n) - oracle)) <= 1e-10
        assert time.perf_counter() - t0 < 1.0


# --------------------------------------------------------------------------
# 9. varying power-entropy kernels


def test_criterion_09_example56():
    with criterion("9", "power-entropy product kernels with chi_n = 1 + 2^-n, d = 50"):
        t0 = time.perf_counter()
        cfg = _cfg("example56.json")
        sched = cfg.spec.schedule
        assert cfg.spec.dim == 50 and isinstance(sched.params, dict)
        assert sched.kernel_at(3).z_part.chi == 1.0 + 2.0**-3
        tr = _execute(cfg)
        assert tr.status == "converged_step_tol" and tr.N <= 10_000
        assert tr.residual_final <= 1e-6
        v = diagnose(tr)
        assert v["check_quasi_fejer"].status == "pass", v["check_quasi_fejer"].to_dict()
        assert v["check_summability"].status == "pass", v["check_summability"].to_dict()
        assert time.perf_counter() - t0 < 5.0


# --------------------------------------------------------------------------
# 10. negative control


def test_criterion_10_negative_control():
    with criterion("10", "forced over-stepped run is falsified by the diagnostics"):
        t0 = time.perf_counter()
        cfg = _cfg("overstep_quadratic.json")
        spec = cfg.spec
        ratio = spec.cert.kappa * spec.steps.sup_gamma / spec.schedule.alpha
        assert abs(ratio - 1.5) <= 1e-12
        assert not validate(spec).passed
        tr = _execute(cfg, force=True)
        assert not tr.certified and tr.meta["forced"]
        v = diagnose(tr)
        assert v["check_monotone_objective"].status == "fail"
        assert v["check_rate_o1n"].status == "fail"
        assert time.perf_counter() - t0 < 1.0


# --------------------------------------------------------------------------
# 11. determinism


DETERMINISM_CONFIGS = ("lasso_classical_fb.json", "entropic_simplex.json",
                       "variable_metric_lasso.json", "proximal_point_abs.json",
                       "proximal_point_entropy.json", "example56.json")


def _report_bytes(path):
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    doc.pop("timestamp", None)
    return json.dumps(doc, sort_keys=True).encode()


def test_criterion_11_determinism(tmp_path):
    with criterion("11", "re-running configs 5-9 reproduces the reports byte for byte"):
        for name in DETERMINISM_CONFIGS:
            outs = []
            for rep in range(2):
                out = tmp_path / f"{name}-{rep}"
                code = cli.main(["run", "--config", os.path.join(CONFIGS, name), "--out", str(out)])
                assert code in (0, 2), (name, code)
                outs.append(out)
            a, b = outs
            assert _report_bytes(a / "report.json") == _report_bytes(b / "report.json"), name
            assert (a / "trace.csv").read_bytes() == (b / "trace.csv").read_bytes(), name


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
