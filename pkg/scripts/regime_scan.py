"""Dense lambda sweep across both sublinear thresholds; writes the usual CLI outputs.

    python scripts/regime_scan.py --out out/regime --points 12 --workers 4
"""
import argparse

import numpy as np

from smvar.lab.commands import cmd_thresholds
from smvar.lab.config import load


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--config", default="configs/thresholds.toml")
    ap.add_argument("--out", default="out/regime")
    ap.add_argument("--points", type=int, default=12)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()

    cfg = load(args.config)
    # multiples of the trivial bound, reaching well past the multiplicity bound (about 5.9x for the default g)
    cfg.lambda_grid.relative_to = "trivial_bound"
    cfg.lambda_grid.values = [float(v) for v in np.geomspace(0.25, 10.0, args.points)]
    raise SystemExit(cmd_thresholds(cfg, args.out, workers=args.workers))


if __name__ == "__main__":
    main()
