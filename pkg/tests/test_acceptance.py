"""Acceptance criteria, one test per criterion.

Each test records a PASS/FAIL line shown in the terminal summary.
"""

import time
from functools import cache

import numpy as np
import pytest

from qwalk_index.config import SweepConfig
from qwalk_index.indices import (
    BulkData,
    analyze_cut,
    bulk_winding,
    compare_gentle_vs_local,
    cut_edge_states,
    eigenspace_dims,
    verify_cut_independence,
)
from qwalk_index.lattice import check_unitary
from qwalk_index.models import (
    bulk_model,
    build_window,
    crossover,
    decoupler,
    four_step_model,
    split_step_model,
)
from qwalk_index.schur import SchurContext, dense_overlap_count, eigendetect, renewal_check
from qwalk_index.spectral import essential_gap
from qwalk_index.symmetry import GAMMA_SIGMA1, SYMMETRY_TYPES, IndexGroup, check_admissible, rep_index
from qwalk_index.verification import eta_defect, random_crossovers, random_disc_points, random_unitary

from helpers import random_rep

HALF_WIDTH = 60  # windows of 60 + 60 cells
RESIDUAL = 1e-8
FOUR_STEP = (2.0, -0.8, -1.6)
SPLIT = SweepConfig(model="split_step")


def winding(model) -> int:
    return bulk_winding(model.symbol(), GAMMA_SIGMA1.matrix).winding


def lower_bound_row(model, res, cut: int = 0, kind: str = "gentle") -> dict:
    """(dim E_+ + dim E_-, |index|) for the uncut walk and both half-blocks."""
    dims = eigenspace_dims(model, cut, kind, min_half_width=res.half_width)
    t = res.table
    return {
        "uncut": (sum(dims["reference"]), abs(int(t.si_total_uncut))),
        "left_block": (sum(dims["left_block"]), abs(int(t.si_left))),
        "right_block": (sum(dims["right_block"]), abs(int(t.si_right))),
    }


@cache
def criterion1_runs():
    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()
    models = random_crossovers(SPLIT, rng, 50)
    results = [analyze_cut(m, 0, "gentle", HALF_WIDTH, max_doublings=0) for m in models]
    return models, results, time.perf_counter() - t0


@cache
def criterion2_runs():
    rng = np.random.default_rng(7)
    models = random_crossovers(SPLIT, rng, 20)
    out = []
    for m in models:
        x0 = int(rng.integers(-15, 0))
        out.append((m, x0, verify_cut_independence(m, x0, x0 + 20, "gentle", HALF_WIDTH)))
    return out


@cache
def criterion3_grid():
    axis = np.linspace(-np.pi, np.pi, 23)[1:-1]
    t0 = time.perf_counter()
    rows, skipped = [], 0
    for t1 in axis:
        for t2 in axis:
            m = split_step_model(t1, t2)
            bulk = BulkData.of(m)
            if min(bulk.gaps.values()) <= 1e-2:
                skipped += 1
                continue
            res = analyze_cut(m, 0, "gentle", HALF_WIDTH, with_reference=False, bulk=bulk)
            rows.append((t1, t2, winding(m), int(res.si_right), res))
    return rows, skipped, time.perf_counter() - t0


@cache
def criterion4_runs():
    """Ten crossovers between phases of different winding, with short decay lengths."""
    rng = np.random.default_rng(11)
    picked = []
    while len(picked) < 10:
        left = dict(zip("BA", rng.uniform(-np.pi, np.pi, 2)))
        right = dict(zip("BA", rng.uniform(-np.pi, np.pi, 2)))
        m = crossover("split_step", left, right, float(rng.uniform(0, 4)))
        bulk = BulkData.of(m)
        if min(bulk.gaps.values()) < 0.3 or bulk.decay > 3.0:
            continue
        dw = winding(bulk_model(m, "right")) - winding(bulk_model(m, "left"))
        if dw == 0:
            continue
        picked.append((m, dw, analyze_cut(m, 0, "gentle", HALF_WIDTH, max_doublings=0, bulk=bulk)))
    return picked


@cache
def criterion5_run():
    return compare_gentle_vs_local(four_step_model(*FOUR_STEP, garnish=True), 0, ("gentle", "reflection"), HALF_WIDTH)


def test_criterion_1_sum_rule(acceptance):
    _, results, elapsed = criterion1_runs()
    bad = [r.table.as_dict() for r in results if r.table.si_total_uncut != r.table.si_left + r.table.si_right]
    values = sorted({int(r.table.si_total_uncut) for r in results})
    ok = not bad and len(results) == 50 and elapsed < 120
    acceptance(1, ok, f"50 crossovers, {len(bad)} violations, si_total values {values}, {elapsed:.1f} s")
    assert ok, bad


def test_criterion_2_cut_independence(acceptance):
    runs = criterion2_runs()
    bad = [(x0, c) for _, x0, c in runs if not (c.si_middle == 0 and c.si_right_x0 == c.si_right_x1)]
    ok = not bad and len(runs) == 20
    acceptance(2, ok, f"20 configurations, cuts 20 apart, {len(bad)} violations")
    assert ok, bad


@pytest.mark.slow
def test_criterion_3_phase_diagram(acceptance):
    rows, skipped, elapsed = criterion3_grid()
    bad = [(t1, t2, w, si) for t1, t2, w, si, _ in rows if w != si]
    ok = not bad and len(rows) + skipped == 441 and elapsed < 600
    windings = sorted({w for _, _, w, _, _ in rows})
    acceptance(3, ok, f"{len(rows)} gapped points agree, {skipped} gap-closed excluded, windings {windings}, {elapsed:.0f} s")
    assert ok, bad


def test_criterion_4_bulk_edge(acceptance):
    failures = []
    for m, dw, res in criterion4_runs():
        # eigenvectors at +-1 of the uncut crossover, localized at the junction
        dims = sum(eigenspace_dims(m, 0, min_half_width=res.half_width)["reference"])
        if dims < abs(dw):
            failures.append(("dimension", dims, dw))
        # the same states seen from the decoupled half-blocks of the 120-cell window
        exact = [s for s in cut_edge_states(res) if s.residual < RESIDUAL]
        if len(exact) < abs(dw):
            failures.append(("edge states", len(exact), dw))
        for s in exact:
            if s.block_masses[1] >= 1e-4:
                failures.append(("middle mass", s.block, s.block_masses[1]))
    ok = not failures
    dws = sorted({abs(d) for _, d, _ in criterion4_runs()})
    acceptance(4, ok, f"10 crossovers with |dw| in {dws}, window 120 cells, {len(failures)} failures")
    assert ok, failures


def test_criterion_5_gentle_vs_local(acceptance):
    r = criterion5_run()
    g = r.gentle
    ok = (
        winding(four_step_model(*FOUR_STEP, garnish=True)) == 1
        and r.columns_agree
        and r.entries_differ
        and g.row_sums_hold()
    )
    acceptance(5, ok, f"gentle {g.entries()}, reflection {r.local.entries()}, columns ({int(g.si_left)}, {int(g.si_right)}, {int(g.si_total)})")
    assert ok


@pytest.mark.slow
def test_criterion_6_lower_bound(acceptance):
    t0 = time.perf_counter()
    models, results, _ = criterion1_runs()
    rows = [lower_bound_row(m, r) for m, r in zip(models, results)]
    for m, x0, _ in criterion2_runs():
        for cut in (x0, x0 + 20):
            rows.append(lower_bound_row(m, analyze_cut(m, cut, "gentle", HALF_WIDTH), cut))
    for t1, t2, _, _, res in criterion3_grid()[0]:
        rows.append(lower_bound_row(split_step_model(t1, t2), res))
    rows += [lower_bound_row(m, res) for m, _, res in criterion4_runs()]
    four = four_step_model(*FOUR_STEP, garnish=True)
    rows += [lower_bound_row(four, analyze_cut(four, 0, kind, HALF_WIDTH), kind=kind) for kind in ("gentle", "reflection")]
    bad = [r for r in rows if any(d < s for d, s in r.values())]
    ok = not bad
    acceptance(6, ok, f"{len(rows)} configurations from criteria 1-5, {len(bad)} violations, {time.perf_counter() - t0:.0f} s")
    assert ok, bad


def zoo(rng):
    """Walks of every model family: bulk windows, decoupled windows, crossovers."""
    out = []
    for _ in range(10):
        t1, t2 = rng.uniform(-np.pi, np.pi, 2)
        out.append(split_step_model(t1, t2))
        a, b, c = rng.uniform(-np.pi, np.pi, 3)
        out.append(four_step_model(a, b, c))
        out.append(four_step_model(a, b, c, garnish=True))
    out += random_crossovers(SPLIT, rng, 5, min_gap=0.0)
    four = SweepConfig(model="four_step", garnish=True, angles=dict(zip(("theta_a", "theta_b", "theta_c"), FOUR_STEP)))
    out += random_crossovers(four, rng, 5, min_gap=0.0)
    return out


def test_criterion_7_admissibility(acceptance):
    rng = np.random.default_rng(5)
    failures, checked = [], 0
    for m in zoo(rng):
        for kind in (None, "gentle", "reflection"):
            cuts = [] if kind is None else [decoupler(m.name, kind, 0)]
            W = build_window(m, -20, 19, cuts)
            ok, defects = check_admissible(W, m.rep(W.structure), tol=1e-10)
            checked += 1
            if not (ok and check_unitary(W, 1e-10)[0]):
                failures.append((m.name, kind, defects))
    garnished = build_window(four_step_model(*FOUR_STEP, garnish=True), -20, 19)
    eta = eta_defect(garnished, garnished.structure)
    ok = not failures and eta > 0.1
    acceptance(7, ok, f"{checked} windows admissible at 1e-10: {not failures}, garnished eta defect {eta:.3f}")
    assert ok, failures


SCHUR_CONFIGS = [
    ("four_step", four_step_model(*FOUR_STEP, garnish=True)),
    ("four_step", four_step_model(*FOUR_STEP)),
    ("split_step", split_step_model(1.9, 0.7)),
    ("split_step", split_step_model(0.7, 1.9)),
    ("split_step", split_step_model(-2.0, -2.5)),
]


def test_criterion_8_schur(acceptance):
    rng = np.random.default_rng(8)
    mismatches, worst, counts = [], 0.0, []
    for name, m in SCHUR_CONFIGS:
        W = build_window(m, -HALF_WIDTH, HALF_WIDTH - 1, [decoupler(name, "gentle", 0)])
        ctx = SchurContext(W, [(-1, None), (0, None)], gaps=essential_gap(m.symbol()))
        for t in (1, -1):
            d, n = eigendetect(ctx, t).dimension, dense_overlap_count(ctx, t)
            counts.append(d)
            if d != n:
                mismatches.append((name, t, d, n))
        for _ in range(10):
            rep = renewal_check(ctx, random_unitary(rng, ctx.dim), random_disc_points(rng, 1, 0.9))
            worst = max(worst, rep.deviation)
    ok = not mismatches and worst < 1e-7
    acceptance(8, ok, f"eigendetect dimensions {counts} match dense counts: {not mismatches}, renewal deviation {worst:.1e}")
    assert ok, mismatches


def test_criterion_9_rep_index(acceptance):
    rng = np.random.default_rng(9)
    failures = 0
    labels = list(SYMMETRY_TYPES)
    for i in range(1000):
        label = labels[i % len(labels)]
        rep, expected, _ = random_rep(label, rng, int(rng.integers(1, 6)))
        v = rep_index(rep)
        group = rep.type.index_group
        good = v.group is group and v == group.reduce(expected)
        if label == "CII":
            good = good and v.value % 2 == 0
        if label == "DIII":
            good = good and v.value in (0, 2)
        if group is IndexGroup.Z2:
            good = good and v.value in (0, 1)
        failures += not good
    ok = failures == 0
    acceptance(9, ok, f"1000 random representations over {len(labels)} types, {failures} failures")
    assert ok
