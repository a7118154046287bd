import glob
import json
import os

import numpy as np
import pytest

from bregfb.config import (
    load_config,
    parse_A,
    parse_B,
    parse_certificate,
    parse_config,
    parse_kernel,
    parse_steps,
    parse_stop,
)
from bregfb.core import ContractError
from bregfb.kernels import EntropyKernel, ProductKernel, QuadraticKernel


def _run_configs(config_dir):
    out = []
    for path in sorted(glob.glob(os.path.join(config_dir, "*.json"))):
        doc = load_config(path)
        if "checks" not in doc and "grid" not in doc:
            out.append(path)
    return out


def test_every_run_config_parses(config_dir):
    paths = _run_configs(config_dir)
    assert len(paths) >= 7
    for path in paths:
        cfg = parse_config(load_config(path))
        assert cfg.spec.dim >= 1 and cfg.mode in ("inclusion", "minimization")


def test_kernel_specs():
    assert isinstance(parse_kernel({"kind": "quadratic", "dim": 2}), QuadraticKernel)
    assert isinstance(parse_kernel({"kind": "entropy", "dim": 2}), EntropyKernel)
    k = parse_kernel({"kind": "product", "z": {"kind": "power_norm", "p": 1.5, "dim": 2},
                      "xi": {"kind": "entropy", "dim": 1}, "offset": 1.0})
    assert isinstance(k, ProductKernel) and k.dim == 3
    with pytest.raises(ContractError):
        parse_kernel({"kind": "hyperbolic"})


def test_operator_specs():
    A = parse_A({"kind": "normal_cone", "set": "box", "lo": 0, "hi": "inf", "dim": 1})
    assert A.member([0.0], [-1.0])
    B = parse_B({"kind": "least_squares", "b": [1.0, 2.0]})
    assert np.array_equal(B([1.0, 2.0]), [0.0, 0.0])
    with pytest.raises(ContractError):
        parse_A({"kind": "normal_cone", "set": "ball", "dim": 2})
    with pytest.raises(ContractError):
        parse_B({"kind": "mystery"})


def test_certificate_and_steps():
    c = parse_certificate({"route": "cocoercive", "aux": {"alpha": 1, "beta": 1, "eps": 1}})
    assert c.kappa == 1.0 and c.delta2 == 0.5
    c = parse_certificate({"kappa": 2.0, "delta1": 0.0, "delta2": 1.0})
    assert c.kappa == 2.0
    assert parse_steps(0.5).gamma_at(3) == 0.5
    assert parse_steps({"kind": "list", "gamma": [1, 2]}).gamma_at(1) == 2.0
    with pytest.raises(ContractError):
        parse_stop({"max_iters": 3})


def test_problem_or_preset_exclusive(config_dir):
    doc = load_config(os.path.join(config_dir, "lasso_classical_fb.json"))
    doc["preset"] = {"name": "example56"}
    with pytest.raises(ContractError):
        parse_config(doc)
    with pytest.raises(ContractError):
        parse_config({"preset": {"name": "nonexistent"}})


def test_invalid_json(tmp_path):
    p = tmp_path / "x.json"
    p.write_text("[1,")
    with pytest.raises(ContractError):
        load_config(p)


def test_document_fingerprint_is_stable(config_dir):
    path = os.path.join(config_dir, "example56.json")
    a = parse_config(load_config(path)).spec.fingerprint()
    b = parse_config(json.loads(json.dumps(load_config(path)))).spec.fingerprint()
    assert a == b
