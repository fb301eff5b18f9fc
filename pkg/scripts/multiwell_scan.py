"""Count distinct solutions below tau for the synthetic multi-well nonlinearity
over a log-spaced lambda range and a few well counts."""
import argparse

import numpy as np

from smvar.critical import SolverConfig, multi_start_deflated
from smvar.energy import uniform_params
from smvar.manifold import build_torus
from smvar.nonlinearity import synthetic_multiwell


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=16)
    ap.add_argument("--starts", type=int, default=10)
    args = ap.parse_args()

    M = build_torus(args.n)
    print(f"{'wells':>5} {'lambda':>10} {'distinct':>9} {'below_tau':>9} {'min_energy':>12}")
    for wells in (1, 2, 3, 4):
        nl = synthetic_multiwell(1.0, wells)
        for lam in np.geomspace(1e-4, 1.0, 5):
            p = uniform_params(M, e=lam, lam=lam, mu0=1.0, psi_mode="lambda_alpha_plus_mu0_beta")
            res = multi_start_deflated(M, p, nl, SolverConfig(), args.starts, None, (-3.0, wells + 2.0))
            emin = res.solutions[0].energy.total if res.solutions else float("nan")
            print(f"{wells:>5} {lam:>10.2e} {len(res.solutions):>9} {res.n_below_tau:>9} {emin:>12.5f}")


if __name__ == "__main__":
    main()
