"""Varying power-entropy product kernels f_n with chi_n = 1 + 2^-n.

Runs the preset at several truncation dimensions and exponents and reports
iterations, final residual and the quasi-Fejer / summability verdicts.
"""

import argparse
import json
import time

from bregfb.diagnostics import diagnose
from bregfb.kernels import GeometricSequence
from bregfb.presets import preset_example56
from bregfb.solver import StopRule, run


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--dims", type=int, nargs="+", default=[10, 50, 200])
    p.add_argument("--powers", type=float, nargs="+", default=[1.5, 2.0, 3.0])
    args = p.parse_args(argv)

    chi = GeometricSequence(1.0, 1.0, 0.5)
    out = []
    for d in args.dims:
        for pw in args.powers:
            t0 = time.perf_counter()
            tr = run(preset_example56(pw, chi, d), StopRule(max_iter=10_000, tol_step=1e-14))
            v = diagnose(tr, ["check_quasi_fejer", "check_summability", "check_focusing_residual"], 1e-6)
            out.append({"d": d, "p": pw, "status": tr.status, "iterations": tr.N,
                        "residual": tr.residual_final, "seconds": round(time.perf_counter() - t0, 3),
                        **{k: vv.status for k, vv in v.items()}})
    print(json.dumps(out, indent=2))


if __name__ == "__main__":
    main()
