"""Descent-lemma counterexample on the half-line.

psi = |x|^{3/2} has no Lipschitz gradient at 0, so D_psi <= kappa D_f fails
for every kappa with f = x^2 / 2, while the three-point variant with z = 0
holds with kappa = 1 on K = [0, inf).
"""

import argparse
import json
import math

import numpy as np

from bregfb.conditions import check_descent_pair, check_descent_triple, suggest_kappa
from bregfb.kernels import make_quadratic_metric
from bregfb.operators import NormalConeBox, PowerGradient


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--samples", type=int, default=10_000)
    p.add_argument("--seeds", type=int, default=5)
    args = p.parse_args(argv)

    f = make_quadratic_metric(np.eye(1))
    psi = PowerGradient(1.5, [1.0])
    K = NormalConeBox(0.0, math.inf, 1)
    rows = []
    for seed in range(args.seeds):
        pair = check_descent_pair(psi, f, 1e6, args.samples, seed, A=K)
        triple = check_descent_triple(psi, f, 1.0, [[0.0]], args.samples, seed, A=K)
        rows.append({
            "seed": seed,
            "pair_kappa_1e6": "pass" if pair.passed else "falsified",
            "pair_witness": pair.witness,
            "triple_kappa_1": "pass" if triple.passed else "falsified",
            "empirical_sup_ratio": suggest_kappa(psi, f, args.samples, seed, A=K),
        })
    print(json.dumps(rows, indent=2))


if __name__ == "__main__":
    main()
