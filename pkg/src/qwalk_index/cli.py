"""Command-line driver: phase diagrams, edge states, verification, Schur probes.

Exit codes: 0 success, 1 verification failure, 2 config error, 3 numerical
escalation failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .config import ANGLE_NAMES, ConfigError, SweepConfig, load_config
from .indices import (
    AmbiguousAttribution,
    BulkData,
    GapClosed,
    analyze_cut,
    bulk_winding,
    cut_edge_states,
)
from .models import DecouplingFailed, model_from_angles
from .schur import SchurConvergenceError, dense_overlap_count, eigendetect, renewal_check, schur_eval, schur_series
from .spectral import ClusterAmbiguity
from .symmetry import GAMMA_SIGMA1
from .verification import (
    config_model,
    random_disc_points,
    random_unitary,
    run_verification,
    schur_context,
)

log = logging.getLogger("qwalk_index")

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3
NA = "NA"

PHASE_COLUMNS_TAIL = ("gap_at_plus", "gap_at_minus", "winding", "si_right", "agree", "half_width", "status")
EIGENFUNCTION_COLUMNS = ("state", "x", "component", "re", "im", "chirality", "eigenvalue_target")


def fmt(v) -> str:
    """Fixed text form of a CSV cell: floats with 17 significant digits."""
    if v is None:
        return NA
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if not math.isfinite(v):
            return NA
        return format(v, ".17g")
    return str(v)


def write_csv(path: Path, header, rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) for v in r])
    path.write_text(buf.getvalue(), encoding="utf-8", newline="")


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return float(format(v, ".17g")) if math.isfinite(v) else None
    return v


def write_json(path: Path, obj) -> None:
    text = json.dumps(_jsonable(obj), indent=2, sort_keys=True, ensure_ascii=False)
    path.write_text(text + "\n", encoding="utf-8", newline="")


def config_summary(cfg: SweepConfig) -> dict:
    return {
        "model": cfg.model,
        "garnish": cfg.garnish,
        "angles": cfg.angles,
        "crossover": cfg.crossover,
        "crossover_width": cfg.crossover_width if cfg.crossover else None,
        "half_width": cfg.half_width,
        "max_doublings": cfg.max_doublings,
        "decoupler": cfg.decoupler,
        "cut": cfg.cut,
    }


# phase diagram -------------------------------------------------------------


def phase_point(cfg: SweepConfig, angles: dict) -> dict:
    """One grid point; failures are recorded in the row."""
    model = model_from_angles(cfg.model, angles, cfg.garnish)
    row = {"gap_at_plus": None, "gap_at_minus": None, "winding": NA, "si_right": NA, "agree": NA, "half_width": NA}
    try:
        bulk = BulkData.of(model)
        row["gap_at_plus"], row["gap_at_minus"] = bulk.gaps[1], bulk.gaps[-1]
        if min(bulk.gaps.values()) <= cfg.tolerances.gap_threshold:
            row["status"] = "gap_closed"
            return row
        w = bulk_winding(model.symbol(), GAMMA_SIGMA1.matrix).winding
        row["winding"] = w
        res = analyze_cut(
            model,
            cfg.cut,
            cfg.decoupler,
            cfg.half_width,
            cfg.max_doublings,
            gap_threshold=cfg.tolerances.gap_threshold,
            with_reference=False,
            bulk=bulk,
        )
        row["si_right"] = int(res.si_right)
        row["half_width"] = res.half_width
        row["agree"] = w == row["si_right"]
        row["status"] = "ok"
    except (GapClosed, AmbiguousAttribution, ClusterAmbiguity, DecouplingFailed) as exc:
        row["status"] = f"error:{type(exc).__name__}"
    return row


def cmd_phase_diagram(cfg: SweepConfig, out: Path, threads: int = 1) -> int:
    points = cfg.grid_points()
    names = ANGLE_NAMES[cfg.model]
    with ThreadPoolExecutor(max_workers=max(threads, 1)) as pool:
        rows = list(pool.map(lambda p: phase_point(cfg, p), points))
    table = [[p[n] for n in names] + [r[c] for c in PHASE_COLUMNS_TAIL] for p, r in zip(points, rows)]
    write_csv(out / cfg.outputs.phase_diagram, list(names) + list(PHASE_COLUMNS_TAIL), table)
    bad = sum(r["status"].startswith("error") for r in rows)
    log.info("%d grid points, %d gap closed, %d errors", len(rows), sum(r["status"] == "gap_closed" for r in rows), bad)
    return EXIT_OK


# edge states ---------------------------------------------------------------


def edge_report(cfg: SweepConfig, kind: str) -> tuple[dict, list]:
    model = config_model(cfg)
    res = analyze_cut(
        model, cfg.cut, kind, cfg.half_width, cfg.max_doublings, gap_threshold=cfg.tolerances.gap_threshold
    )
    states = cut_edge_states(res)
    report = {
        "decoupler": kind,
        "half_width": res.half_width,
        "cut": res.cut,
        "table": res.table.as_dict(),
        "eigenvalues": [[s.eigenvalue.real, s.eigenvalue.imag] for s in states],
        "states": [s.as_dict() for s in states],
    }
    return report, states


def eigenfunction_rows(states) -> list:
    rows = []
    for i, s in enumerate(states):
        st = s.structure
        for j, a in enumerate(s.vector):
            rows.append([i, int(st.cell_of_index[j]), int(st.component_of_index[j]), a.real, a.imag, s.chirality, s.target])
    return rows


def cmd_edge_states(cfg: SweepConfig, out: Path) -> int:
    kinds = [cfg.decoupler] + [k for k in ("gentle", "reflection") if k != cfg.decoupler]
    reports = {}
    dump = None
    for kind in kinds:
        try:
            rep, states = edge_report(cfg, kind)
        except GapClosed as exc:
            write_json(out / cfg.outputs.edge_report, {"config": config_summary(cfg), "error": str(exc)})
            return EXIT_NUMERIC
        except (AmbiguousAttribution, ClusterAmbiguity) as exc:
            reports[kind] = {"decoupler": kind, "error": f"{type(exc).__name__}: {exc}"}
            write_json(out / cfg.outputs.edge_report, {"config": config_summary(cfg), "reports": reports})
            return EXIT_NUMERIC
        reports[kind] = rep
        if dump is None:
            dump = eigenfunction_rows(states)
    g, r = reports["gentle"]["table"], reports["reflection"]["table"]
    comparison = {
        "columns_agree": all(g[k] == r[k] for k in ("si_left", "si_right", "si_total")),
        "entries_differ": any(
            g[k] != r[k] for k in ("si_plus_left", "si_plus_right", "si_minus_left", "si_minus_right")
        ),
    }
    write_json(
        out / cfg.outputs.edge_report,
        {"config": config_summary(cfg), "reports": reports, "comparison": comparison},
    )
    write_csv(out / cfg.outputs.eigenfunctions, EIGENFUNCTION_COLUMNS, dump)
    return EXIT_OK


# verification and schur ----------------------------------------------------


def cmd_verify(cfg: SweepConfig, out: Path, seed: int = 0) -> int:
    results = run_verification(cfg, seed)
    failed = [r.name for r in results if r.status == "fail"]
    write_json(
        out / cfg.outputs.verify,
        {
            "config": config_summary(cfg),
            "seed": seed,
            "results": [r.as_dict() for r in results],
            "all_passed": not failed,
        },
    )
    for r in results:
        print(f"{r.status.upper():8s} {r.name}")
    return EXIT_VERIFY if failed else EXIT_OK


def cmd_schur_probe(cfg: SweepConfig, out: Path, seed: int = 0) -> int:
    rng = np.random.default_rng(seed)
    model = config_model(cfg)
    try:
        ctx = schur_context(cfg, model)
        gamma = model.rep(ctx.W.structure).window_ops["gamma"].matrix
        zs = random_disc_points(rng, cfg.schur.samples, cfg.schur.radius)
        values = []
        for z in zs:
            f = schur_eval(ctx, z)
            f2 = schur_series(ctx, z, 2 * ctx.trunc_N)
            values.append(
                {
                    "z_re": z.real,
                    "z_im": z.imag,
                    "norm": float(np.linalg.norm(f, 2)),
                    "truncation_deviation": float(np.abs(f - f2).max()),
                }
            )
        detect = []
        for target in (1, -1):
            d = eigendetect(ctx, target, gamma=gamma)
            detect.append(
                {
                    "target": target,
                    "dimension": d.dimension,
                    "chirality_trace": d.chirality_trace,
                    "dense_count": dense_overlap_count(ctx, target),
                }
            )
        ren = renewal_check(ctx, random_unitary(rng, ctx.dim), random_disc_points(rng, cfg.schur.samples, cfg.schur.radius))
    except SchurConvergenceError as exc:
        write_json(out / cfg.outputs.schur, {"config": config_summary(cfg), "error": str(exc)})
        return EXIT_NUMERIC
    report = {
        "config": config_summary(cfg),
        "seed": seed,
        "h0_cells": [cfg.cut + x for x in cfg.schur.h0_cells],
        "trunc_N": ctx.trunc_N,
        "samples": values,
        "eigendetect": detect,
        "renewal": {
            "walk": ren.walk,
            "variant": ren.variant,
            "deviation": ren.deviation,
            "all": [{"walk": w, "variant": v, "deviation": d} for (w, v), d in ren.deviations.items()],
        },
    }
    write_json(out / cfg.outputs.schur, report)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qwalk-index", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_ in (
        ("phase-diagram", "sweep the angle grid and compare winding with si_right"),
        ("edge-states", "splitting tables and edge eigenfunctions at a cut"),
        ("verify", "run the invariant checks"),
        ("schur-probe", "Schur function values, eigenvalue detection and renewal"),
    ):
        s = sub.add_parser(name, help=help_)
        s.add_argument("--config", type=Path, default=None, help="INI config file")
        s.add_argument("--out", type=Path, default=Path("."), help="output directory")
        s.add_argument("--threads", type=int, default=1)
        s.add_argument("--seed", type=int, default=0)
        s.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config)
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    args.out.mkdir(parents=True, exist_ok=True)
    if args.command == "phase-diagram":
        return cmd_phase_diagram(cfg, args.out, args.threads)
    if args.command == "edge-states":
        return cmd_edge_states(cfg, args.out)
    if args.command == "verify":
        return cmd_verify(cfg, args.out, args.seed)
    return cmd_schur_probe(cfg, args.out, args.seed)


if __name__ == "__main__":
    sys.exit(main())
