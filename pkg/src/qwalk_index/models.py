"""The walk zoo: split-step and four-step walks, decouplings and crossovers.

A walk is a product of sitewise coins and the two conditional shifts
``S_up`` (spin up one cell to the right) and ``S_dn`` (spin down one cell to
the left).  Finite windows are built on a slightly larger ring and then cut
out after decoupling recipes have been applied at both outer boundaries, so
every window is exactly unitary.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .lattice import BandedUnitary, CellStructure, TIWalkSymbol
from .symmetry import (
    AIII,
    BDI,
    ETA_CONJ,
    GAMMA_SIGMA1,
    TAU_SIGMA1,
    SymmetryRep,
    check_admissible,
)

SIGMA1 = np.array([[0, 1], [1, 0]], dtype=complex)
# exact R(pi/2); cos(pi/2) in floating point would leave 6e-17 across the cut
I_SIGMA2 = np.array([[0, -1], [1, 0]], dtype=complex)
GARNISH = np.array([[1j, 1], [-1, -1j]], dtype=complex) / np.sqrt(2)

DECOUPLE_TOL = 1e-12


def rotation(theta: float) -> np.ndarray:
    """Real rotation ``[[cos, -sin], [sin, cos]]``."""
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]], dtype=complex)


AngleFn = Callable[[int], float]


@dataclass(frozen=True)
class CoinProfile:
    """Per-site coin angles plus explicit coin overrides.

    ``angles[label]`` is either a constant or a function of the site.
    ``overrides[(label, x)]`` replaces the coin ``label`` at site ``x``.
    """

    angles: Mapping[str, float | AngleFn]
    overrides: Mapping[tuple[str, int], np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        for key, m in self.overrides.items():
            m = np.asarray(m, dtype=complex)
            if m.shape != (2, 2):
                raise ValueError(f"override {key} is not 2x2")
            if not np.allclose(m.conj().T @ m, np.eye(2), atol=1e-12):
                raise ValueError(f"override {key} is not unitary")

    @property
    def constant(self) -> bool:
        return not self.overrides and all(not callable(a) for a in self.angles.values())

    def angle(self, label: str, x: int) -> float:
        a = self.angles[label]
        return float(a(x)) if callable(a) else float(a)

    def with_overrides(self, extra: Mapping[tuple[str, int], np.ndarray]) -> "CoinProfile":
        merged = dict(self.overrides)
        merged.update(extra)
        return CoinProfile(self.angles, merged)


@dataclass(frozen=True)
class DecouplingRecipe:
    """Coin substitutions near a cut at ``x0`` (cells ``< x0`` vs ``>= x0``).

    ``path(t)`` gives the substituted coins at ``t in [0, 1]`` given the
    original coins; ``path(1)`` must reproduce ``substitutions``.
    """

    cut: int
    substitutions: tuple[tuple[str, int, np.ndarray], ...]
    kind: str
    path: Callable[[float, Mapping[tuple[str, int], np.ndarray]], dict] | None = None

    def __post_init__(self):
        if self.kind not in ("gentle", "local"):
            raise ValueError(f"unknown decoupling kind {self.kind!r}")
        if self.kind == "gentle" and self.path is None:
            raise ValueError("a gentle decoupling needs a path")

    def overrides(self) -> dict[tuple[str, int], np.ndarray]:
        return {(label, x): m for label, x, m in self.substitutions}

    @property
    def determinants(self) -> tuple[complex, ...]:
        return tuple(complex(np.linalg.det(m)) for _, _, m in self.substitutions)


# Factor sequences in operator-product order (rightmost acts first).
SPLIT_STEP = ("B", "Sdn", "A", "Sup", "B")
FOUR_STEP = ("C", "Sup", "B", "Sup", "A", "Sdn", "B", "Sdn", "C")

# Coins that are replaced to cut a walk at x0, as (label, offset from x0).
# Found once by inspecting which blocks cross the cut; verify_decoupled
# re-checks every window that is built.
SUBSTITUTION_SITES = {
    "split_step": (("A", 0),),
    "four_step": (("A", -1), ("B", -1)),
}

INTERACTION_LENGTH = {"split_step": 1, "four_step": 2}


@dataclass(frozen=True)
class WalkModel:
    """A walk of the zoo with a fixed coin profile."""

    name: str
    profile: CoinProfile
    garnish: bool = False

    def __post_init__(self):
        if self.name not in SUBSTITUTION_SITES:
            raise ValueError(f"unknown model {self.name!r}")
        if self.garnish and self.name != "four_step":
            raise ValueError("only the four-step walk is garnished")

    @property
    def factors(self) -> tuple[str, ...]:
        return SPLIT_STEP if self.name == "split_step" else FOUR_STEP

    @property
    def L(self) -> int:
        return INTERACTION_LENGTH[self.name]

    @property
    def symmetry_type(self):
        return AIII if self.garnish else BDI

    def base_coin(self, label: str, x: int) -> np.ndarray:
        override = self.profile.overrides.get((label, x))
        if override is not None:
            return np.asarray(override, dtype=complex)
        theta = self.profile.angle(label, x)
        if self.name == "split_step" and label == "B":
            theta = theta / 2
        return rotation(theta)

    def _factor_coins(self, position: int, label: str, xs: np.ndarray) -> np.ndarray:
        coins = np.array([self.base_coin(label, int(x)) for x in xs])
        if self.garnish and label == "C":
            # left factor C G, right factor G C keeps gamma W gamma = W^dagger
            if position == 0:
                coins = coins @ GARNISH
            else:
                coins = GARNISH @ coins
        return coins

    def rep(self, structure: CellStructure) -> SymmetryRep:
        if self.garnish:
            return SymmetryRep.uniform(AIII, structure, {"gamma": GAMMA_SIGMA1})
        return SymmetryRep.uniform(BDI, structure, {"eta": ETA_CONJ, "tau": TAU_SIGMA1, "gamma": GAMMA_SIGMA1})

    def symbol(self) -> TIWalkSymbol:
        """Quasi-momentum symbol; only for site-independent profiles."""
        if not self.profile.constant:
            raise ValueError("profile is site dependent; no symbol")
        shifts = {
            "Sup": TIWalkSymbol(2, {1: np.diag([1, 0]), 0: np.diag([0, 1])}),
            "Sdn": TIWalkSymbol(2, {0: np.diag([1, 0]), -1: np.diag([0, 1])}),
        }
        out = TIWalkSymbol.onsite(np.eye(2))
        for pos, f in enumerate(self.factors):
            if f in shifts:
                out = out @ shifts[f]
            else:
                out = out @ TIWalkSymbol.onsite(self._factor_coins(pos, f, np.array([0]))[0])
        return out

    def ring_matrix(self, x_lo: int, x_hi: int, overrides: Mapping[tuple[str, int], np.ndarray] = {}) -> np.ndarray:
        """Dense walk on the periodic ring of cells ``x_lo..x_hi``."""
        xs = np.arange(x_lo, x_hi + 1)
        n = xs.size
        if n < 2 * self.L + 2:
            raise ValueError("ring too short for the walk")
        model = self if not overrides else WalkModel(self.name, self.profile.with_overrides(overrides), self.garnish)
        m = np.eye(2 * n, dtype=complex).reshape(n, 2, 2 * n)
        for pos in reversed(range(len(self.factors))):
            f = self.factors[pos]
            if f == "Sup":
                m[:, 0, :] = np.roll(m[:, 0, :], 1, axis=0)
            elif f == "Sdn":
                m[:, 1, :] = np.roll(m[:, 1, :], -1, axis=0)
            else:
                m = np.einsum("xab,xbc->xac", model._factor_coins(pos, f, xs), m)
        return m.reshape(2 * n, 2 * n)


def shift_matrix(direction: str, x_lo: int, x_hi: int) -> np.ndarray:
    """``S_up`` or ``S_dn`` on the periodic ring of cells ``x_lo..x_hi``."""
    n = x_hi - x_lo + 1
    m = np.zeros((2 * n, 2 * n), dtype=complex)
    comp, step = {"up": (0, 1), "dn": (1, -1)}[direction]
    for i in range(n):
        m[2 * i + 1 - comp, 2 * i + 1 - comp] = 1.0
        m[2 * ((i + step) % n) + comp, 2 * i + comp] = 1.0
    return m


def decoupler_gentle(model: str, x0: int) -> DecouplingRecipe:
    """Cut with ``i sigma_2`` coins, connected to the original coins by rotations."""
    sites = tuple((label, x0 + off) for label, off in SUBSTITUTION_SITES[model])

    def path(t: float, original: Mapping[tuple[str, int], np.ndarray]) -> dict:
        out = {}
        for key in sites:
            orig = original[key]
            theta0 = np.arctan2(orig[1, 0].real, orig[0, 0].real)
            out[key] = I_SIGMA2 if t == 1 else rotation((1 - t) * theta0 + t * np.pi / 2)
        return out

    subs = tuple((label, x, I_SIGMA2) for label, x in sites)
    return DecouplingRecipe(x0, subs, "gentle", path)


def decoupler_reflection(model: str, x0: int) -> DecouplingRecipe:
    """Cut with ``sigma_1`` coins (determinant -1: no path through real rotations)."""
    subs = tuple((label, x0 + off, SIGMA1) for label, off in SUBSTITUTION_SITES[model])
    return DecouplingRecipe(x0, subs, "local")


def decoupler(model: str, kind: str, x0: int) -> DecouplingRecipe:
    if kind == "gentle":
        return decoupler_gentle(model, x0)
    if kind == "reflection":
        return decoupler_reflection(model, x0)
    raise ValueError(f"unknown decoupler {kind!r}")


def crossing_elements(W: BandedUnitary | np.ndarray, structure: CellStructure, x0: int) -> float:
    m = W.dense if isinstance(W, BandedUnitary) else W
    left = structure.cell_of_index < x0
    if left.all() or not left.any():
        return 0.0
    return float(max(np.abs(m[np.ix_(left, ~left)]).max(), np.abs(m[np.ix_(~left, left)]).max()))


def verify_decoupled(W: BandedUnitary, x0: int, tol: float = DECOUPLE_TOL) -> tuple[bool, float]:
    """Whether no matrix element connects cells ``< x0`` with cells ``>= x0``."""
    c = crossing_elements(W, W.structure, x0)
    return c <= tol, c


class DecouplingFailed(RuntimeError):
    pass


def build_window(
    model: WalkModel,
    x_min: int,
    x_max: int,
    cuts: Sequence[DecouplingRecipe] = (),
    boundary: str = "gentle",
    t: float = 1.0,
) -> BandedUnitary:
    """The walk on cells ``x_min..x_max`` with decoupled outer boundaries.

    ``cuts`` are applied in addition to the two outer boundary decouplings.
    With ``t < 1`` the interior recipes are taken at that point of their
    paths (used for gentleness checks); then the interior cuts need not
    decouple.
    """
    pad = 2 * model.L + 2
    lo, hi = x_min - pad, x_max + pad
    outer = [decoupler(model.name, boundary, x_min), decoupler(model.name, boundary, x_max + 1)]
    overrides: dict[tuple[str, int], np.ndarray] = {}
    for r in outer:
        overrides.update(r.overrides())
    for r in cuts:
        if t == 1.0:
            overrides.update(r.overrides())
        else:
            if r.path is None:
                raise ValueError("recipe has no path")
            original = {(lab, x): model.base_coin(lab, x) for lab, x, _ in r.substitutions}
            original.update({k: v for k, v in overrides.items() if k in original})
            overrides.update(r.path(t, original))
    ring = model.ring_matrix(lo, hi, overrides)
    ring_structure = CellStructure.uniform(lo, hi, 2)
    sl = ring_structure.index_range(x_min, x_max)
    inside = np.zeros(ring.shape[0], dtype=bool)
    inside[sl] = True
    leak = max(np.abs(ring[np.ix_(inside, ~inside)]).max(), np.abs(ring[np.ix_(~inside, inside)]).max())
    if leak > DECOUPLE_TOL:
        raise DecouplingFailed(f"outer boundary recipes leave crossing element {leak:.2e}")
    structure = CellStructure.uniform(x_min, x_max, 2)
    block = ring[sl, sl]
    if t == 1.0:
        for r in cuts:
            c = crossing_elements(block, structure, r.cut)
            if c > DECOUPLE_TOL:
                raise DecouplingFailed(f"recipe does not decouple at x0={r.cut} (crossing element {c:.2e})")
    return BandedUnitary.from_dense(structure, block, L=model.L, tol=1e-13)


def split_step(profile: CoinProfile, x_min: int, x_max: int, cuts: Sequence[DecouplingRecipe] = ()):
    """``W = B S_dn A S_up B`` with ``A = R(theta2)``, ``B = R(theta1 / 2)``.

    Returns ``(W, rep, symbol)``; ``symbol`` is ``None`` for site-dependent
    profiles.
    """
    if x_max - x_min + 1 < 5:
        raise ValueError("split-step window needs at least 5 cells")
    model = WalkModel("split_step", _split_profile(profile))
    W = build_window(model, x_min, x_max, cuts)
    return W, model.rep(W.structure), model.symbol() if model.profile.constant else None


def four_step(profile: CoinProfile, garnish: bool, x_min: int, x_max: int, cuts: Sequence[DecouplingRecipe] = ()):
    """``W = C S_up B S_up A S_dn B S_dn C`` from real rotations.

    With ``garnish`` the outer coins become ``C G`` (left) and ``G C``
    (right), which keeps the chiral symmetry but breaks ``eta``.
    """
    if x_max - x_min + 1 < 7:
        raise ValueError("four-step window needs at least 7 cells")
    model = WalkModel("four_step", profile, garnish)
    W = build_window(model, x_min, x_max, cuts)
    return W, model.rep(W.structure), model.symbol() if model.profile.constant else None


def _split_profile(profile: CoinProfile) -> CoinProfile:
    """Accept ``theta1``/``theta2`` names and map them to coin labels."""
    a = dict(profile.angles)
    if "theta1" in a or "theta2" in a:
        a = {"B": a.pop("theta1"), "A": a.pop("theta2"), **a}
    return CoinProfile(a, profile.overrides)


def split_step_model(theta1, theta2) -> WalkModel:
    return WalkModel("split_step", CoinProfile({"A": theta2, "B": theta1}))


def four_step_model(theta_a, theta_b, theta_c, garnish: bool = False) -> WalkModel:
    return WalkModel("four_step", CoinProfile({"A": theta_a, "B": theta_b, "C": theta_c}), garnish)


def ramp(left: float, right: float, width: float, center: float = 0.0) -> AngleFn:
    """Angle profile: ``left`` below the ramp, ``right`` above, linear between."""

    def f(x: int) -> float:
        if width <= 0:
            return left if x < center else right
        s = min(max((x - center + width / 2) / width, 0.0), 1.0)
        return (1 - s) * left + s * right

    return f


def crossover(name: str, left: Mapping[str, float], right: Mapping[str, float], width: float, garnish: bool = False) -> WalkModel:
    """Walk equal to the ``left`` bulk far left and the ``right`` bulk far right."""
    if set(left) != set(right):
        raise ValueError("left and right parameter sets differ")
    angles = {k: (left[k] if left[k] == right[k] else ramp(left[k], right[k], width)) for k in left}
    return WalkModel(name, CoinProfile(angles), garnish)


def bulk_model(model: WalkModel, side: str) -> WalkModel:
    """Translation-invariant bulk of a crossover far to one side."""
    far = -10**6 if side == "left" else 10**6
    angles = {k: model.profile.angle(k, far) for k in model.profile.angles}
    return WalkModel(model.name, CoinProfile(angles), model.garnish)


def gentle_path_check(
    model: WalkModel,
    recipe: DecouplingRecipe,
    x_min: int,
    x_max: int,
    n_samples: int = 21,
    tol: float = 1e-10,
) -> bool:
    """Every walk along the recipe's path is unitary and admissible."""
    if recipe.path is None:
        raise ValueError("recipe has no path")
    from .lattice import check_unitary

    for t in np.linspace(0.0, 1.0, n_samples):
        try:
            W = build_window(model, x_min, x_max, [recipe], t=float(t))
        except ValueError:  # a non-unitary intermediate coin
            return False
        if not check_unitary(W, tol)[0]:
            return False
        if not check_admissible(W, model.rep(W.structure), tol)[0]:
            return False
    return True


def linear_path(recipe: DecouplingRecipe) -> DecouplingRecipe:
    """Same substitutions with a straight-line path in matrix space."""
    targets = {(lab, x): m for lab, x, m in recipe.substitutions}

    def path(t, original):
        return {k: (1 - t) * original[k] + t * targets[k] for k in targets}

    return DecouplingRecipe(recipe.cut, recipe.substitutions, "gentle", path)


_COIN_OF_ANGLE = {
    "split_step": {"theta1": "B", "theta2": "A"},
    "four_step": {"theta_a": "A", "theta_b": "B", "theta_c": "C"},
}


def model_from_angles(
    name: str,
    angles: Mapping[str, float],
    garnish: bool = False,
    right: Mapping[str, float] | None = None,
    width: float = 2.0,
) -> WalkModel:
    """Zoo walk from named angles; with ``right`` a crossover at cell 0."""
    table = _COIN_OF_ANGLE[name]
    left = {table[k]: float(v) for k, v in angles.items()}
    if right is None:
        return WalkModel(name, CoinProfile(left), garnish)
    return crossover(name, left, {table[k]: float(v) for k, v in right.items()}, width, garnish)
