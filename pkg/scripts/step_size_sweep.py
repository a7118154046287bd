"""Classical forward-backward on the lasso problem over a range of step sizes.

Prints, for each gamma, the validation verdict, the iteration count and the
final inclusion residual.  Steps above 2 beta = 2 are run with ``force`` to
show the divergence the validator guards against.
"""

import argparse
import os

import numpy as np

from bregfb.config import load_config, parse_config
from bregfb.diagnostics import diagnose
from bregfb.presets import preset_classical_fb
from bregfb.solver import RunAborted, StopRule, run, validate

HERE = os.path.dirname(os.path.abspath(__file__))


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--gammas", type=float, nargs="+",
                   default=[0.1, 0.25, 0.5, 0.9, 1.0, 1.5, 1.9, 2.1, 2.5])
    p.add_argument("--max-iter", type=int, default=2000)
    args = p.parse_args(argv)

    cfg = parse_config(load_config(os.path.join(HERE, "..", "configs", "lasso_classical_fb.json")))
    base = cfg.spec
    stop = StopRule(max_iter=args.max_iter, tol_step=1e-24, tol_residual=1e-10)
    print(f"{'gamma':>6} {'valid':>6} {'status':>20} {'iters':>6} {'residual':>10} {'|x-x*|':>10}")
    for g in args.gammas:
        eps = min(1.0, max(1e-3, 2.0 - g))
        spec = preset_classical_fb(base.A, base.B, 1.0, eps, g, base.x0,
                                   known_solution=base.known_solution)
        ok = validate(spec).passed
        try:
            tr = run(spec, stop, force=True)
        except RunAborted as exc:
            tr = exc.trace
        err = float(np.max(np.abs(tr.x_final - base.known_solution)))
        verdicts = diagnose(tr, ["check_focusing_residual"], 1e-8)
        print(f"{g:6.2f} {str(ok):>6} {tr.status:>20} {tr.N:6d} "
              f"{tr.residual_final:10.2e} {err:10.2e}  {verdicts['check_focusing_residual'].status}")


if __name__ == "__main__":
    main()
