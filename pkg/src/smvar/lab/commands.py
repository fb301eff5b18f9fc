"""File emission for the CLI commands: report.json, scan.csv, energies.csv, plot.gp
and optional field snapshots."""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

from ..energy import CSV_COLUMNS
from ..snapshot import save_field
from . import experiments as ex
from .config import ExperimentConfig

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_IDENTITY = 0, 1, 2, 3


def _jsonable(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if hasattr(obj, "item"):
        return _jsonable(obj.item())
    return obj


def write_json(path: Path, data) -> None:
    path.write_text(json.dumps(_jsonable(data), indent=2, sort_keys=True) + "\n")


def _cell(v):
    # repr round-trips floats exactly, which keeps reruns bitwise comparable
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_csv(path: Path, columns, rows) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_cell(row[c]) for c in columns])


def write_plot(path: Path, columns, series, xlabel="lambda", vlines=(), csv_name="scan.csv",
               png_name="scan.png", logx=False) -> None:
    idx = {c: i + 1 for i, c in enumerate(columns)}
    lines = ['set datafile separator ","', "set terminal pngcairo size 900,600",
             f'set output "{png_name}"', f'set xlabel "{xlabel}"', "set key outside"]
    if logx:
        lines.append("set logscale x")
    for name, x in vlines:
        if math.isfinite(x):
            lines.append(f'set arrow from {x!r}, graph 0 to {x!r}, graph 1 nohead dashtype 2')
            lines.append(f'set label "{name}" at {x!r}, graph 1.02 center')
    x = idx[columns[0]]
    parts = [f'"{csv_name}" using {x}:{idx[s]} skip 1 with linespoints title "{s}"' for s in series]
    lines.append("plot " + ", \\\n     ".join(parts))
    path.write_text("\n".join(lines) + "\n")


def _save_reports(save_dir, M, labelled) -> list[str]:
    if save_dir is None:
        return []
    d = Path(save_dir)
    d.mkdir(parents=True, exist_ok=True)
    names = []
    for label, rep in labelled:
        save_field(d / f"{label}_u.bin", M, rep.u)
        save_field(d / f"{label}_phi.bin", M, rep.phi)
        names += [f"{label}_u.bin", f"{label}_phi.bin"]
    return names


def _prepare(out) -> Path:
    p = Path(out)
    p.mkdir(parents=True, exist_ok=True)
    return p


def cmd_verify(cfg: ExperimentConfig, out, save_fields=None, echo=print) -> int:
    out = _prepare(out)
    suites = ex.run_battery(cfg)
    echo(f"{'suite':<22}{'trials':>8}{'fail':>6}{'worst':>12}{'tol':>10}  status")
    for s in suites:
        echo(f"{s.name:<22}{s.trials:>8}{s.failures:>6}{s.worst:>12.3e}{s.tolerance:>10.0e}  "
             f"{'PASS' if s.passed else 'FAIL'}")
    cols = ("suite", "trials", "failures", "worst", "tolerance", "passed")
    write_csv(out / "scan.csv", cols, [s.row() for s in suites])
    write_plot(out / "plot.gp", cols, ["worst", "tolerance"], xlabel="suite index")
    # failing trials always leave their fields behind, next to the report if no dir is given
    dump_dir = Path(save_fields) if save_fields else out / "failures"
    M = cfg.manifold.build()
    dumped = []
    for s in suites:
        for trial, fields in s.failing:
            dump_dir.mkdir(parents=True, exist_ok=True)
            for key, fld in fields.items():
                name = f"{s.name}_trial{trial:03d}_{key}.bin"
                save_field(dump_dir / name, M, fld)
                dumped.append(str(dump_dir / name))
    ok = all(s.passed for s in suites)
    write_json(out / "report.json", {"command": "verify", "seed": cfg.solver.rng_seed, "passed": ok,
                                     "suites": [s.row() for s in suites], "dumped_fields": dumped,
                                     "config": cfg.to_dict()})
    return EXIT_OK if ok else EXIT_IDENTITY


def cmd_thresholds(cfg: ExperimentConfig, out, save_fields=None, workers=1, echo=print) -> int:
    out = _prepare(out)
    consts, regime, sweeps, erows, labelled = ex.run_thresholds(cfg, workers)
    write_csv(out / "scan.csv", ex.REGIME_COLUMNS, regime.rows)
    write_csv(out / "energies.csv", CSV_COLUMNS, erows)
    write_plot(out / "plot.gp", ex.REGIME_COLUMNS,
               ["n_trivial", "n_negative_min", "n_mountain_pass", "n_distinct_nontrivial", "min_energy"],
               vlines=[("1/(c_f |alpha|_inf)", regime.trivial_bound),
                       ("Vol/(c_F |alpha|_1)", regime.multiplicity_bound)])
    snaps = _save_reports(save_fields, cfg.manifold.build(), labelled)
    write_json(out / "report.json", {"command": "thresholds", "seed": cfg.solver.rng_seed,
                                     "constants": consts.to_dict(),
                                     "gap_interval": [1 / consts.c_f, 1 / consts.c_F],
                                     "trivial_bound": regime.trivial_bound,
                                     "multiplicity_bound": regime.multiplicity_bound,
                                     "rows": regime.rows, "sweeps": sweeps, "snapshots": snaps,
                                     "config": cfg.to_dict()})
    for r in regime.rows:
        echo(f"lambda={r['lambda']:.6g} trivial={r['n_trivial']} negmin={r['n_negative_min']} "
             f"mp={r['n_mountain_pass']} distinct={r['n_distinct_nontrivial']}")
    return EXIT_OK


def cmd_multiwell(cfg: ExperimentConfig, out, save_fields=None, workers=1, echo=print) -> int:
    out = _prepare(out)
    summary, rows, erows, labelled = ex.run_multiwell(cfg, workers)
    write_csv(out / "scan.csv", ex.MULTIWELL_COLUMNS, rows)
    write_csv(out / "energies.csv", CSV_COLUMNS, erows)
    write_plot(out / "plot.gp", ex.MULTIWELL_COLUMNS, ["n_distinct", "n_below_tau", "min_energy"], logx=True)
    snaps = _save_reports(save_fields, cfg.manifold.build(), labelled)
    write_json(out / "report.json", {"command": "multiwell", "seed": cfg.solver.rng_seed, **summary,
                                     "rows": rows, "snapshots": snaps, "config": cfg.to_dict()})
    for r in rows:
        echo(f"lambda={r['lambda']:.6g} distinct={r['n_distinct']} below_tau={r['n_below_tau']} m={r['m']}")
    return EXIT_OK


def cmd_superlinear(cfg: ExperimentConfig, out, save_fields=None, workers=1, echo=print) -> int:
    out = _prepare(out)
    summary, rows, erows, labelled = ex.run_superlinear(cfg, workers)
    write_csv(out / "scan.csv", ex.SUPERLINEAR_COLUMNS, rows)
    write_csv(out / "energies.csv", CSV_COLUMNS, erows)
    write_plot(out / "plot.gp", ex.SUPERLINEAR_COLUMNS, ["zero_grad_norm", "mp_energy"],
               vlines=[("lambda0", summary["lambda0"])])
    snaps = _save_reports(save_fields, cfg.manifold.build(), labelled)
    write_json(out / "report.json", {"command": "superlinear", "seed": cfg.solver.rng_seed, **summary,
                                     "rows": rows, "snapshots": snaps, "config": cfg.to_dict()})
    echo(f"kappa_p={summary['kappa_p']:.6g} tau*={summary['tau_star']:.6g} lambda0={summary['lambda0']:.6g}")
    for r in rows:
        echo(f"lambda={r['lambda']:.6g} local_min={r['local_min_class']} mp={r['mp_class']}")
    return EXIT_OK


def cmd_solve(cfg: ExperimentConfig, out, save_fields=None, workers=1, echo=print) -> int:
    out = _prepare(out)
    labelled, erows = ex.run_solve(cfg)
    cols = CSV_COLUMNS
    write_csv(out / "scan.csv", cols, erows)
    write_plot(out / "plot.gp", cols, ["total", "grad_norm"])
    snaps = _save_reports(save_fields, cfg.manifold.build(), labelled)
    write_json(out / "report.json", {"command": "solve", "seed": cfg.solver.rng_seed,
                                     "reports": {k: r.to_dict() for k, r in labelled},
                                     "snapshots": snaps, "config": cfg.to_dict()})
    for k, r in labelled:
        echo(f"{k}: {r.classification.value} energy={r.energy.total:.10g} grad_norm={r.grad_norm:.3e}")
    return EXIT_OK if all(r.converged for _, r in labelled) else EXIT_SOLVER


COMMANDS = {"verify": cmd_verify, "thresholds": cmd_thresholds, "multiwell": cmd_multiwell,
            "superlinear": cmd_superlinear, "solve": cmd_solve}
