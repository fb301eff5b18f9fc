"""Print how the threshold gap [1/c_f, 1/c_F] narrows as q -> 0 and as a grows."""
import argparse

from smvar.nonlinearity import compute_cf, compute_cF, piecewise_g


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--variant", default="minus_one", choices=["minus_one", "inv_minus_two"])
    ap.add_argument("--e", type=float, default=1.0)
    args = ap.parse_args()

    nl = piecewise_g(args.variant, 2.0)
    cf, _ = compute_cf(nl)
    print(f"{'q':>8} {'1/c_f':>10} {'1/c_F':>10} {'width':>10}")
    for q in (10.0, 1.0, 0.1, 0.01, 0.001):
        cF, _ = compute_cF(nl, args.e, q)
        print(f"{q:>8g} {1 / cf:>10.5f} {1 / cF:>10.5f} {1 / cF - 1 / cf:>10.5f}")

    print(f"\n{'a':>8} {'c_f':>10} {'c_F_hat':>10} {'diff':>10}")
    for a in (1.5, 2.0, 5.0, 10.0, 100.0, 1000.0):
        g = piecewise_g(args.variant, a)
        c1, c2 = compute_cf(g)[0], compute_cF(g, args.e, 0.0)[0]
        print(f"{a:>8g} {c1:>10.6f} {c2:>10.6f} {c1 - c2:>10.6f}")


if __name__ == "__main__":
    main()
