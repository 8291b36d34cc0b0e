"""Named invariant checks run by ``qwalk-index verify``.

Each check returns a :class:`CheckResult` with status ``pass``, ``fail`` or
``skipped``.  Numerical trouble inside a check (ambiguous attribution, a
series that does not converge) is a failure of that check, not a crash.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import ANGLE_NAMES, SweepConfig
from .indices import (
    AmbiguousAttribution,
    BulkData,
    GapClosed,
    analyze_cut,
    bulk_winding,
    compare_gentle_vs_local,
    eigenspace_dims,
    verify_cut_independence,
)
from .lattice import check_unitary
from .models import (
    DecouplingFailed,
    WalkModel,
    build_window,
    bulk_model,
    decoupler,
    decoupler_gentle,
    gentle_path_check,
    model_from_angles,
)
from .schur import SchurContext, SchurConvergenceError, dense_overlap_count, eigendetect, renewal_check
from .spectral import ClusterAmbiguity, essential_gap
from .symmetry import BDI, ETA_CONJ, GAMMA_SIGMA1, TAU_SIGMA1, SymmetryRep, check_admissible

NUMERICAL_ERRORS = (AmbiguousAttribution, GapClosed, DecouplingFailed, SchurConvergenceError, ClusterAmbiguity)
RENEWAL_TOL = 1e-7
ETA_BREAKING = 0.1


@dataclass
class CheckResult:
    name: str
    status: str  # pass | fail | skipped
    detail: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {"name": self.name, "status": self.status, "detail": self.detail}


def _guard(name: str, fn) -> CheckResult:
    try:
        return fn()
    except NUMERICAL_ERRORS as exc:
        return CheckResult(name, "fail", {"error": type(exc).__name__, "message": str(exc)})


def _status(ok: bool) -> str:
    return "pass" if ok else "fail"


def config_model(cfg: SweepConfig) -> WalkModel:
    return model_from_angles(cfg.model, cfg.angles, cfg.garnish, cfg.crossover, cfg.crossover_width)


def random_crossovers(cfg: SweepConfig, rng: np.random.Generator, count: int, min_gap: float = 0.1) -> list[WalkModel]:
    """Gapped crossovers of the configured family with random bulk angles."""
    names = ANGLE_NAMES[cfg.model]
    out = []
    while len(out) < count:
        left = dict(zip(names, rng.uniform(-np.pi, np.pi, len(names))))
        right = dict(zip(names, rng.uniform(-np.pi, np.pi, len(names))))
        m = model_from_angles(cfg.model, left, cfg.garnish, right, float(rng.uniform(0, 6)))
        if min(BulkData.of(m).gaps.values()) >= min_gap:
            out.append(m)
    return out


def eta_defect(W, structure) -> float:
    """Particle-hole defect of a walk against the BDI representation of the zoo."""
    rep = SymmetryRep.uniform(BDI, structure, {"eta": ETA_CONJ, "tau": TAU_SIGMA1, "gamma": GAMMA_SIGMA1})
    return check_admissible(W, rep)[1]["eta"]


def check_admissibility(cfg: SweepConfig, model: WalkModel) -> CheckResult:
    hw = cfg.half_width
    W = build_window(model, cfg.cut - hw, cfg.cut + hw - 1, [decoupler(model.name, cfg.decoupler, cfg.cut)])
    uni_ok, uni = check_unitary(W)
    adm_ok, defects = check_admissible(W, model.rep(W.structure))
    detail = {"unitarity_defect": uni, **{f"{g}_defect": v for g, v in defects.items()}}
    ok = uni_ok and adm_ok
    if model.garnish:
        detail["eta_defect"] = eta_defect(W, W.structure)
        ok = ok and detail["eta_defect"] > ETA_BREAKING
    return CheckResult("admissibility", _status(ok), detail)


def check_gentle_path(cfg: SweepConfig, model: WalkModel) -> CheckResult:
    hw = cfg.half_width
    recipe = decoupler_gentle(model.name, cfg.cut)
    ok = gentle_path_check(model, recipe, cfg.cut - hw, cfg.cut + hw - 1, n_samples=21)
    return CheckResult("gentle_path", _status(ok), {"samples": 21})


def _analyze(cfg: SweepConfig, model: WalkModel, kind: str | None = None, cut: int | None = None, **kw):
    return analyze_cut(
        model,
        cfg.cut if cut is None else cut,
        kind or cfg.decoupler,
        cfg.half_width,
        cfg.max_doublings,
        gap_threshold=cfg.tolerances.gap_threshold,
        **kw,
    )


def check_winding(cfg: SweepConfig, model: WalkModel) -> CheckResult:
    rows = []
    for side in ("left", "right"):
        bulk = bulk_model(model, side)
        w = bulk_winding(bulk.symbol(), GAMMA_SIGMA1.matrix).winding
        si = int(_analyze(cfg, bulk, "gentle", with_reference=False).si_right)
        rows.append({"side": side, "winding": w, "si_right": si})
    return CheckResult("winding_agreement", _status(all(r["winding"] == r["si_right"] for r in rows)), {"bulks": rows})


def check_sum_rule(cfg: SweepConfig, models: list[WalkModel]) -> CheckResult:
    rows = []
    for m in models:
        t = _analyze(cfg, m, "gentle").table
        rows.append({"si_left": int(t.si_left), "si_right": int(t.si_right), "si_total": int(t.si_total_uncut)})
    ok = all(r["si_total"] == r["si_left"] + r["si_right"] for r in rows)
    return CheckResult("sum_rule", _status(ok), {"configurations": rows})


def check_row_sums(cfg: SweepConfig, model: WalkModel) -> CheckResult:
    t = _analyze(cfg, model, "gentle").table
    return CheckResult("row_sums_gentle", _status(t.row_sums_hold()), t.as_dict())


def check_cut_independence(cfg: SweepConfig, model: WalkModel, rng: np.random.Generator) -> CheckResult:
    rows = []
    d = cfg.verify.cut_distance
    for _ in range(cfg.verify.cut_pairs):
        x0 = int(rng.integers(-d // 2, d // 2 + 1))
        c = verify_cut_independence(model, x0, x0 + d, "gentle", cfg.half_width, cfg.max_doublings)
        rows.append(
            {
                "x0": x0,
                "x1": x0 + d,
                "si_right_x0": int(c.si_right_x0),
                "si_right_x1": int(c.si_right_x1),
                "si_middle": int(c.si_middle),
                "holds": c.holds,
            }
        )
    return CheckResult("cut_independence", _status(all(r["holds"] for r in rows)), {"pairs": rows})


def check_gentle_vs_local(cfg: SweepConfig, model: WalkModel) -> CheckResult:
    r = compare_gentle_vs_local(model, cfg.cut, ("gentle", "reflection"), cfg.half_width)
    detail = {
        "gentle": r.gentle.as_dict(),
        "local": r.local.as_dict(),
        "columns_agree": r.columns_agree,
        "entries_differ": r.entries_differ,
    }
    return CheckResult("gentle_vs_local", _status(r.columns_agree and r.gentle.row_sums_hold()), detail)


def check_lower_bound(cfg: SweepConfig, model: WalkModel) -> CheckResult:
    res = _analyze(cfg, model, "gentle")
    t = res.table
    dims = eigenspace_dims(model, cfg.cut, "gentle", min_half_width=res.half_width)
    uncut = sum(dims["reference"])
    at_cut = {part: sum(dims[part]) for part in ("left_block", "right_block")}
    ok = (
        uncut >= abs(int(t.si_total_uncut))
        and at_cut["left_block"] >= abs(int(t.si_left))
        and at_cut["right_block"] >= abs(int(t.si_right))
    )
    detail = {"dim_uncut": uncut, "si_total": int(t.si_total_uncut), **{f"dim_{k}": v for k, v in at_cut.items()}}
    return CheckResult("lower_bound", _status(ok), detail)


def schur_context(cfg: SweepConfig, model: WalkModel) -> SchurContext:
    """Window decoupled at the configured cut with ``H0`` from the config."""
    hw = cfg.half_width
    W = build_window(model, cfg.cut - hw, cfg.cut + hw - 1, [decoupler(model.name, cfg.decoupler, cfg.cut)])
    gaps = None
    if model.profile.constant:
        gaps = essential_gap(model.symbol())
    return SchurContext(
        W,
        [(cfg.cut + x, None) for x in cfg.schur.h0_cells],
        trunc_N=cfg.schur.trunc_n or None,
        tol_series=cfg.schur.tol_series,
        gaps=gaps,
    )


def check_schur(cfg: SweepConfig, model: WalkModel) -> CheckResult:
    ctx = schur_context(cfg, model)
    gamma = model.rep(ctx.W.structure).window_ops["gamma"].matrix
    rows = []
    for target in (1, -1):
        det = eigendetect(ctx, target, gamma=gamma)
        rows.append({"target": target, "eigendetect": det.dimension, "dense": dense_overlap_count(ctx, target)})
    return CheckResult("schur_cross_check", _status(all(r["eigendetect"] == r["dense"] for r in rows)), {"points": rows})


def random_unitary(rng: np.random.Generator, n: int) -> np.ndarray:
    q, r = np.linalg.qr(rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_disc_points(rng: np.random.Generator, n: int, radius: float) -> list[complex]:
    r = radius * np.sqrt(rng.uniform(size=n))
    return list(r * np.exp(2j * np.pi * rng.uniform(size=n)))


def check_renewal(cfg: SweepConfig, model: WalkModel, rng: np.random.Generator) -> CheckResult:
    ctx = schur_context(cfg, model)
    worst = 0.0
    matches = set()
    for _ in range(cfg.verify.renewal_samples):
        V = random_unitary(rng, ctx.dim)
        rep = renewal_check(ctx, V, random_disc_points(rng, 1, cfg.schur.radius))
        worst = max(worst, rep.deviation)
        matches.add(f"{rep.walk}: {rep.variant}")
    detail = {"max_deviation": worst, "matching_variants": sorted(matches)}
    return CheckResult("renewal", _status(worst < RENEWAL_TOL), detail)


def run_verification(cfg: SweepConfig, seed: int = 0) -> list[CheckResult]:
    """All named checks for a configuration, in a fixed order."""
    rng = np.random.default_rng(seed)
    model = config_model(cfg)
    results = [_guard("admissibility", lambda: check_admissibility(cfg, model))]
    results.append(_guard("gentle_path", lambda: check_gentle_path(cfg, model)))
    gaps = BulkData.of(model).gaps
    index_checks = [
        ("winding_agreement", lambda: check_winding(cfg, model)),
        (
            "sum_rule",
            lambda: check_sum_rule(cfg, [model] + random_crossovers(cfg, rng, cfg.verify.crossovers)),
        ),
        ("row_sums_gentle", lambda: check_row_sums(cfg, model)),
        ("cut_independence", lambda: check_cut_independence(cfg, model, rng)),
        ("gentle_vs_local", lambda: check_gentle_vs_local(cfg, model)),
        ("lower_bound", lambda: check_lower_bound(cfg, model)),
        ("schur_cross_check", lambda: check_schur(cfg, model)),
        ("renewal", lambda: check_renewal(cfg, model, rng)),
    ]
    closed = min(gaps.values()) < cfg.tolerances.gap_threshold
    for name, fn in index_checks:
        if closed:
            results.append(CheckResult(name, "skipped", {"reason": "gap closed", "gaps": {"+1": gaps[1], "-1": gaps[-1]}}))
        else:
            results.append(_guard(name, fn))
    return results
