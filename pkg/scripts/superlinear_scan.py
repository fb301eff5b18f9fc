"""Mountain-pass levels for f(s) = |s|^{p-2} s as lambda runs up to the lambda0 estimate."""
import argparse

import numpy as np

from smvar.critical import estimate_embedding_constant, mountain_pass
from smvar.energy import uniform_params, weak_form_residual
from smvar.manifold import build_torus
from smvar.nonlinearity import ar_power, maximize_ar_lambda0


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--p", type=float, default=5.0)
    ap.add_argument("--n", type=int, default=16)
    args = ap.parse_args()

    M = build_torus(args.n)
    nl = ar_power(args.p)
    kappa = estimate_embedding_constant(M, args.p)
    tau, lam0 = maximize_ar_lambda0(nl.ar, kappa)
    print(f"kappa_p = {kappa:.6f}, tau* = {tau:.5f}, lambda0 = {lam0:.6f}")
    print(f"{'lambda':>10} {'class':>14} {'energy':>12} {'grad_norm':>10} {'residual':>10}")
    for frac in np.linspace(0.1, 1.0, 10):
        p = uniform_params(M, lam=frac * lam0, psi_mode="lambda_constant")
        rep = mountain_pass(M, p, nl)
        res = weak_form_residual(M, p, nl, rep.u).worst
        print(f"{frac * lam0:>10.5f} {rep.classification.value:>14} {rep.energy.total:>12.5f} "
              f"{rep.grad_norm:>10.2e} {res:>10.2e}")


if __name__ == "__main__":
    main()
