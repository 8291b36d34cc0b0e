"""Symmetry indices of decoupled walks and the bulk winding number.

The six numbers of the splitting table are measured on finite windows:
a walk is cut at ``x0`` by a decoupling recipe, the eigenspaces of both
halves at +1 and -1 are computed, and each eigenvector is attributed to the
end of its half where it is localized.  Only the states at the cut belong
to the half-infinite walks; the states at the far ends are artifacts of
the finite window.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .lattice import BandedUnitary, TIWalkSymbol, symbol_on_grid
from .models import (
    WalkModel,
    build_window,
    bulk_model,
    decoupler,
    decoupler_gentle,
    verify_decoupled,
)
from .spectral import (
    EigenspaceReport,
    decay_length,
    eigenspace_near,
    essential_gap,
    unitary_eig,
)
from .symmetry import IndexValue, RepIndexError, SymmetryRep, rep_index

log = logging.getLogger(__name__)

# Sign of the winding so that it equals si_right on the same bulk: the (1, 2)
# entry in the (gamma=+1, gamma=-1) basis, k running from 0 to 2 pi.
WINDING_ORIENTATION = 1
MIN_MODULUS = 1e-6
DEFAULT_HALF_WIDTH = 60
MAX_DOUBLINGS = 3
# a window side must hold this many decay lengths before indices are trusted
DECAY_LENGTHS_PER_SIDE = 4.0
# eigenvalues within this fraction of the bulk gap count as sitting at +-1
CLUSTER_FRACTION = 0.5


class GapClosed(RuntimeError):
    pass


class AmbiguousAttribution(RuntimeError):
    pass


@dataclass(frozen=True)
class WindingResult:
    winding: int
    min_modulus: float
    samples_used: int


def chiral_basis(gamma_cell: np.ndarray) -> np.ndarray:
    """Eigenvectors of a traceless involution, ``+1`` first."""
    gamma_cell = np.asarray(gamma_cell, dtype=complex)
    if gamma_cell.shape != (2, 2):
        raise ValueError("winding needs a two-dimensional coin")
    if not np.allclose(gamma_cell @ gamma_cell, np.eye(2)) or abs(np.trace(gamma_cell)) > 1e-12:
        raise ValueError("gamma must be a traceless involution")
    vals, vecs = np.linalg.eigh(gamma_cell)
    return vecs[:, np.argsort(-vals)]


def off_diagonal_curve(S: TIWalkSymbol, gamma_cell: np.ndarray, ks: np.ndarray) -> np.ndarray:
    U = chiral_basis(gamma_cell)
    Wk = U.conj().T @ symbol_on_grid(S, ks) @ U
    return Wk[:, 0, 1]


def bulk_winding(
    S: TIWalkSymbol,
    gamma_cell: np.ndarray,
    n_initial: int = 64,
    min_modulus_threshold: float = MIN_MODULUS,
    max_samples: int = 1 << 16,
) -> WindingResult:
    """Winding of the chirally off-diagonal symbol entry around the origin.

    The loop ``k in [0, 2 pi]`` is sampled on a grid that is refined
    wherever the phase of consecutive samples moves by ``pi / 2`` or more.
    """
    if S.coin_dim != 2:
        raise ValueError("bulk winding is defined for two-dimensional coins")
    ks = np.linspace(0, 2 * np.pi, n_initial + 1)
    a = off_diagonal_curve(S, gamma_cell, ks)
    while True:
        if np.abs(a).min() < min_modulus_threshold:
            raise GapClosed(f"curve passes within {np.abs(a).min():.2e} of the origin")
        dphi = np.angle(a[1:] / a[:-1])
        bad = np.abs(dphi) >= np.pi / 2
        if not bad.any():
            break
        if ks.size > max_samples:
            raise GapClosed("phase refinement did not converge")
        mids = (ks[:-1][bad] + ks[1:][bad]) / 2
        ks = np.sort(np.concatenate([ks, mids]))
        a = off_diagonal_curve(S, gamma_cell, ks)
    total = dphi.sum() / (2 * np.pi)
    w = int(np.rint(total))
    if abs(total - w) > 1e-6:
        raise GapClosed(f"non-integer winding {total}")
    return WindingResult(WINDING_ORIENTATION * w, float(np.abs(a).min()), int(ks.size))


@dataclass(frozen=True)
class IndexTable:
    """Splitting table: entries ``si_{+-}(W_{L,R})`` with their marginals.

    ``si_plus``/``si_minus`` are measured on the uncut walk; the column
    marginals ``si_left``/``si_right`` are the column sums.  For a gentle
    decoupling the row sums reproduce ``si_plus``/``si_minus``.
    """

    si_plus_left: IndexValue
    si_plus_right: IndexValue
    si_minus_left: IndexValue
    si_minus_right: IndexValue
    si_plus: IndexValue
    si_minus: IndexValue
    decoupling_kind: str

    @property
    def si_left(self) -> IndexValue:
        return self.si_plus_left + self.si_minus_left

    @property
    def si_right(self) -> IndexValue:
        return self.si_plus_right + self.si_minus_right

    @property
    def si_total(self) -> IndexValue:
        return self.si_left + self.si_right

    @property
    def si_total_uncut(self) -> IndexValue:
        return self.si_plus + self.si_minus

    def row_sums_hold(self) -> bool:
        return (self.si_plus_left + self.si_plus_right == self.si_plus) and (
            self.si_minus_left + self.si_minus_right == self.si_minus
        )

    def entries(self) -> tuple[int, int, int, int]:
        return (
            int(self.si_plus_left),
            int(self.si_plus_right),
            int(self.si_minus_left),
            int(self.si_minus_right),
        )

    def as_dict(self) -> dict:
        return {
            "decoupling_kind": self.decoupling_kind,
            "group": self.si_plus.group.value,
            "si_plus_left": int(self.si_plus_left),
            "si_plus_right": int(self.si_plus_right),
            "si_minus_left": int(self.si_minus_left),
            "si_minus_right": int(self.si_minus_right),
            "si_plus": int(self.si_plus),
            "si_minus": int(self.si_minus),
            "si_left": int(self.si_left),
            "si_right": int(self.si_right),
            "si_total": int(self.si_total),
            "row_sums_hold": self.row_sums_hold(),
        }


def si_point(report: EigenspaceReport, rep: SymmetryRep, label: str | None = None) -> IndexValue:
    """Index of the representation on (part of) an eigenspace report."""
    basis = report.basis if label is None else report.select(label)
    try:
        return rep_index(rep, basis, invariance_tol=1e-6)
    except RepIndexError as exc:
        raise AmbiguousAttribution(str(exc)) from exc


@dataclass
class HalfLineResult:
    table: IndexTable
    window: BandedUnitary
    cut: int
    reports: dict = field(repr=False)  # (part, target) -> EigenspaceReport
    half_width: int = 0

    @property
    def si_left(self):
        return self.table.si_left

    @property
    def si_right(self):
        return self.table.si_right

    def dims(self, part: str = "reference") -> tuple[int, int]:
        """Number of attributed states at +1 and -1 in a part.

        The clusters span a fraction of the gap, so this may include pairs
        of opposite chirality split away from +-1; see :func:`eigenspace_dims`.
        """
        want = {"left_block": "right", "right_block": "left", "reference": "middle"}[part]
        return tuple(self.reports[(part, t)].count(want) for t in (1, -1))


def _cluster_tol(gaps: dict | None, target: int, tol_eig: float) -> float:
    if gaps is None:
        return tol_eig
    return CLUSTER_FRACTION * gaps[target]


def _gamma_matrix(rep: SymmetryRep) -> np.ndarray | None:
    if rep.type.chiral and rep.type.label != "DIII":
        return rep.window_ops["gamma"].matrix
    return None


def block_indices(
    W: BandedUnitary,
    rep: SymmetryRep,
    side: str,
    *,
    gaps: dict | None = None,
    tol_eig: float = 1e-8,
) -> dict[int, tuple[IndexValue, EigenspaceReport]]:
    """Index at +1 and -1 of the states localized at one end of a block.

    Every state in the selected clusters must be localized at either end of
    the block, else :class:`AmbiguousAttribution` is raised.
    """
    gamma = _gamma_matrix(rep)
    spectrum = unitary_eig(W.dense)
    out = {}
    for target in (1, -1):
        rpt = eigenspace_near(
            W, target, _cluster_tol(gaps, target, tol_eig), gamma, check_straddle=gaps is None, spectrum=spectrum
        )
        bad = [a for a in rpt.edge_attribution if a not in ("left", "right")]
        if bad:
            raise AmbiguousAttribution(f"{len(bad)} state(s) at {target:+d} are not edge-localized")
        out[target] = (si_point(rpt, rep, side), rpt)
    return out


def half_line_indices(
    window: BandedUnitary,
    rep: SymmetryRep,
    cut: int,
    *,
    reference: BandedUnitary | None = None,
    gaps: dict | None = None,
    tol_eig: float = 1e-8,
    decoupling_kind: str = "gentle",
) -> HalfLineResult:
    """Splitting-table entries of a window decoupled at ``cut``.

    ``window`` must be decoupled at its outer ends and at ``cut``.  States
    of the left block are counted if localized at its right end, states of
    the right block if localized at its left end.  ``reference`` is the
    same window without the interior cut; its states localized in the
    middle third give ``si_plus``/``si_minus``.  Without a reference those
    marginals are taken to be the row sums.

    ``gaps`` (bulk gap at +1 and -1) widens the eigenvalue selection to a
    fraction of the gap, so that edge states split by tunneling across a
    finite block are still collected; otherwise ``tol_eig`` is used.
    """
    if rep.type.label == "DIII":
        raise ValueError("no left/right splitting for DIII walks")
    ok, c = verify_decoupled(window, cut)
    if not ok:
        raise ValueError(f"window is not decoupled at {cut} (crossing {c:.2e})")
    s = window.structure
    blocks = {
        "left_block": (s.x_min, cut - 1, "right"),
        "right_block": (cut, s.x_max, "left"),
    }
    reports = {}
    entries = {}
    for part, (a, b, side) in blocks.items():
        if b - a < 2:
            raise ValueError("cut too close to the window edge")
        for target, (value, rpt) in block_indices(
            window.restrict(a, b), rep.restrict(a, b), side, gaps=gaps, tol_eig=tol_eig
        ).items():
            reports[(part, target)] = rpt
            entries[(part, target)] = value
    if reference is not None:
        if reference.structure != s:
            raise ValueError("reference lives on a different window")
        gamma = _gamma_matrix(rep)
        spectrum = unitary_eig(reference.dense)
        marg = {}
        for target in (1, -1):
            rpt = eigenspace_near(
                reference, target, _cluster_tol(gaps, target, tol_eig), gamma, check_straddle=gaps is None, spectrum=spectrum
            )
            reports[("reference", target)] = rpt
            if rpt.count("ambiguous"):
                raise AmbiguousAttribution(f"uncut window has delocalized states at {target:+d}")
            marg[target] = si_point(rpt, rep, "middle")
        si_plus, si_minus = marg[1], marg[-1]
    else:
        si_plus = entries[("left_block", 1)] + entries[("right_block", 1)]
        si_minus = entries[("left_block", -1)] + entries[("right_block", -1)]
    table = IndexTable(
        si_plus_left=entries[("left_block", 1)],
        si_plus_right=entries[("right_block", 1)],
        si_minus_left=entries[("left_block", -1)],
        si_minus_right=entries[("right_block", -1)],
        si_plus=si_plus,
        si_minus=si_minus,
        decoupling_kind=decoupling_kind,
    )
    return HalfLineResult(table, window, cut, reports, (s.x_max - s.x_min + 1) // 2)


@dataclass(frozen=True)
class BulkData:
    """Gap and decay length of the translation-invariant bulks of a walk."""

    gaps: dict
    decay: float

    @classmethod
    def of(cls, model: WalkModel, n_k: int = 256) -> "BulkData":
        bulks = [bulk_model(model, "left"), bulk_model(model, "right")]
        gaps = {1: np.inf, -1: np.inf}
        decay = 0.0
        for b in bulks:
            S = b.symbol()
            g = essential_gap(S, n_k)
            gaps[1] = min(gaps[1], g.gap_at_plus)
            gaps[-1] = min(gaps[-1], g.gap_at_minus)
            decay = max(decay, decay_length(S, 1), decay_length(S, -1))
        return cls(gaps, decay)


def analyze_cut(
    model: WalkModel,
    cut: int = 0,
    decoupler_kind: str = "gentle",
    half_width: int = DEFAULT_HALF_WIDTH,
    max_doublings: int = MAX_DOUBLINGS,
    gap_threshold: float = 1e-3,
    with_reference: bool = True,
    bulk: BulkData | None = None,
) -> HalfLineResult:
    """Half-line indices of ``model`` cut at ``cut``, enlarging the window as needed.

    The window spans ``half_width`` cells on each side of ``cut``.  It is
    doubled (at most ``max_doublings`` times) while it is shorter than a few
    bulk decay lengths or while some state cannot be attributed to an edge.
    """
    bulk = bulk or BulkData.of(model)
    if min(bulk.gaps.values()) < gap_threshold:
        raise GapClosed(f"bulk gap {min(bulk.gaps.values()):.2e} below {gap_threshold:.1e}")
    last_error: Exception | None = None
    hw = half_width
    for attempt in range(max_doublings + 1):
        if hw >= DECAY_LENGTHS_PER_SIDE * bulk.decay:
            x_min, x_max = cut - hw, cut + hw - 1
            recipe = decoupler(model.name, decoupler_kind, cut)
            try:
                window = build_window(model, x_min, x_max, [recipe])
                reference = build_window(model, x_min, x_max) if with_reference else None
                rep = model.rep(window.structure)
                kind = "gentle" if decoupler_kind == "gentle" else "local"
                res = half_line_indices(
                    window, rep, cut, reference=reference, gaps=bulk.gaps, decoupling_kind=kind
                )
                res.half_width = hw
                return res
            except AmbiguousAttribution as exc:
                last_error = exc
                log.debug("half width %d: %s", hw, exc)
        else:
            last_error = AmbiguousAttribution(f"half width {hw} shorter than {DECAY_LENGTHS_PER_SIDE} x decay length {bulk.decay:.1f}")
        if attempt < max_doublings:
            hw *= 2
    raise AmbiguousAttribution(f"no clean attribution up to half width {hw}: {last_error}")


EXACT_DECAY_LENGTHS = 25.0
EXACT_HALF_WIDTH_CAP = 400
EXACT_TOL = 1e-8


def eigenspace_dims(
    model: WalkModel,
    cut: int = 0,
    decoupler_kind: str = "gentle",
    bulk: BulkData | None = None,
    min_half_width: int = DEFAULT_HALF_WIDTH,
) -> dict[str, tuple[int, int]]:
    """Dimensions of the eigenspaces at +1 and -1 localized at the cut.

    Only eigenvalues at +-1 up to finite-size tunneling count, not the whole
    cluster.  The window is widened to ``EXACT_DECAY_LENGTHS`` decay lengths
    per side (at most ``EXACT_HALF_WIDTH_CAP``) so that edge states at the
    far ends shift the eigenvalue by at most ``10 exp(-hw / decay)``, which
    is the selection radius (not below ``EXACT_TOL``).

    Pass the half width settled on by :func:`analyze_cut` as
    ``min_half_width`` so that states are attributed on the same window.

    Returns counts for ``"left_block"``, ``"right_block"`` (states at the
    cut) and ``"reference"`` (states of the uncut walk in the middle third).
    """
    bulk = bulk or BulkData.of(model)
    hw = int(min(max(min_half_width, np.ceil(EXACT_DECAY_LENGTHS * bulk.decay)), EXACT_HALF_WIDTH_CAP))
    tol = max(EXACT_TOL, 10 * float(np.exp(-hw / bulk.decay))) if bulk.decay > 0 else EXACT_TOL
    x_min, x_max = cut - hw, cut + hw - 1
    window = build_window(model, x_min, x_max, [decoupler(model.name, decoupler_kind, cut)])
    reference = build_window(model, x_min, x_max)
    parts = {
        "left_block": (window.restrict(x_min, cut - 1), "right"),
        "right_block": (window.restrict(cut, x_max), "left"),
        "reference": (reference, "middle"),
    }
    out = {}
    for part, (W, label) in parts.items():
        gamma = _gamma_matrix(model.rep(W.structure))
        spectrum = unitary_eig(W.dense)
        out[part] = tuple(
            eigenspace_near(W, t, tol, gamma, check_straddle=False, spectrum=spectrum).count(label) for t in (1, -1)
        )
    return out


def si_of_block(W: BandedUnitary, rep: SymmetryRep, tol_eig: float = 1e-8) -> IndexValue:
    """Index of a finite block from its whole cluster at +1 and -1."""
    gamma = _gamma_matrix(rep)
    spectrum = unitary_eig(W.dense)
    total = IndexValue.zero(rep.type.index_group)
    for target in (1, -1):
        rpt = eigenspace_near(W, target, tol_eig, gamma, check_straddle=False, spectrum=spectrum)
        total = total + rep_index(rep, rpt.basis)
    return total


@dataclass(frozen=True)
class CutIndependence:
    si_right_x0: IndexValue
    si_right_x1: IndexValue
    si_middle: IndexValue
    si_right_x1_two_cut: IndexValue

    @property
    def holds(self) -> bool:
        return (
            self.si_middle == 0
            and self.si_right_x0 == self.si_right_x1
            and self.si_right_x0 == self.si_middle + self.si_right_x1_two_cut
        )


def verify_cut_independence(
    model: WalkModel,
    x0: int,
    x1: int,
    first_decoupler: str = "gentle",
    half_width: int = DEFAULT_HALF_WIDTH,
    max_doublings: int = MAX_DOUBLINGS,
) -> CutIndependence:
    """Compare ``si_right`` at two cuts and the index of the block between them.

    The window extends ``half_width`` cells beyond both cuts.  The first cut
    may use any decoupler; the second is gentle.
    """
    if x1 <= x0:
        raise ValueError("need x0 < x1")
    bulk = BulkData.of(model)
    r0 = analyze_cut(model, x0, first_decoupler, half_width, max_doublings, with_reference=False, bulk=bulk)
    r1 = analyze_cut(model, x1, "gentle", half_width, max_doublings, with_reference=False, bulk=bulk)
    hw = max(r0.half_width, r1.half_width)
    x_min, x_max = x0 - hw, x1 + hw - 1
    cuts = [decoupler(model.name, first_decoupler, x0), decoupler_gentle(model.name, x1)]
    W = build_window(model, x_min, x_max, cuts)
    rep = model.rep(W.structure)
    tol = CLUSTER_FRACTION * min(bulk.gaps.values())
    si_mid = si_of_block(W.restrict(x0, x1 - 1), rep.restrict(x0, x1 - 1), tol)
    far_right = block_indices(W.restrict(x1, x_max), rep.restrict(x1, x_max), "left", gaps=bulk.gaps)
    si_far = far_right[1][0] + far_right[-1][0]
    return CutIndependence(r0.si_right, r1.si_right, si_mid, si_far)


@dataclass(frozen=True)
class GentleVsLocal:
    gentle: IndexTable
    local: IndexTable

    @property
    def columns_agree(self) -> bool:
        g, l = self.gentle, self.local
        return g.si_left == l.si_left and g.si_right == l.si_right and g.si_total == l.si_total

    @property
    def entries_differ(self) -> bool:
        return self.gentle.entries() != self.local.entries()

    @property
    def row_marginals_differ(self) -> bool:
        g, l = self.gentle, self.local
        return (g.si_plus_left + g.si_plus_right != l.si_plus_left + l.si_plus_right) or (
            g.si_minus_left + g.si_minus_right != l.si_minus_left + l.si_minus_right
        )


def compare_gentle_vs_local(
    model: WalkModel,
    cut: int = 0,
    decouplers: tuple[str, str] = ("gentle", "reflection"),
    half_width: int = DEFAULT_HALF_WIDTH,
) -> GentleVsLocal:
    a = analyze_cut(model, cut, decouplers[0], half_width)
    b = analyze_cut(model, cut, decouplers[1], half_width)
    out = GentleVsLocal(a.table, b.table)
    if not out.columns_agree:
        raise AssertionError(f"column marginals differ: {a.table.as_dict()} vs {b.table.as_dict()}")
    return out


@dataclass(frozen=True)
class EdgeState:
    """An eigenvector of a decoupled half-block localized at the cut."""

    block: str  # "left_block" or "right_block"
    target: int
    eigenvalue: complex
    residual: float
    center: float
    block_masses: tuple[float, float, float]  # left, middle, right third of its block
    chirality: float | None
    vector: np.ndarray = field(repr=False)
    structure: object = field(repr=False)

    def as_dict(self) -> dict:
        return {
            "block": self.block,
            "target": self.target,
            "eigenvalue_re": float(self.eigenvalue.real),
            "eigenvalue_im": float(self.eigenvalue.imag),
            "residual": float(self.residual),
            "center": float(self.center),
            "mass_left_third": float(self.block_masses[0]),
            "mass_middle_third": float(self.block_masses[1]),
            "mass_right_third": float(self.block_masses[2]),
            "chirality": None if self.chirality is None else float(self.chirality),
        }


def cut_edge_states(result: HalfLineResult) -> list[EdgeState]:
    """States at +-1 of both half-blocks that sit at the cut, in a fixed order."""
    out = []
    for part, label in (("left_block", "right"), ("right_block", "left")):
        for target in (1, -1):
            rpt = result.reports[(part, target)]
            for i, a in enumerate(rpt.edge_attribution):
                if a != label:
                    continue
                out.append(
                    EdgeState(
                        block=part,
                        target=target,
                        eigenvalue=complex(rpt.eigenvalues[i]),
                        residual=float(rpt.residuals[i]),
                        center=float(rpt.centers[i]),
                        block_masses=tuple(float(m) for m in rpt.masses[i]),
                        chirality=None if rpt.chiralities is None else float(rpt.chiralities[i]),
                        vector=rpt.basis[:, i],
                        structure=rpt.structure,
                    )
                )
    return out
