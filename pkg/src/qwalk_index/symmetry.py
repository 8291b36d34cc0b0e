"""Symmetry types, per-cell symmetry operators and the representation index.

The five types below are the rows of the classification table: which of the
particle-hole (``eta``), time-reversal (``tau``) and chiral (``gamma``)
symmetries are present, the signs of their squares, and the group in which
the index takes values.  Generators are chosen to commute, so the product of
the three signs is ``+1`` whenever all three are present.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping

import numpy as np

from .lattice import BandedUnitary, CellStructure, StructureMismatch

TRACE_ROUNDING_TOL = 1e-6
INVARIANCE_TOL = 1e-8

GENERATORS = ("eta", "tau", "gamma")


class IndexGroup(enum.Enum):
    Z = "Z"
    Z2 = "Z2"
    TWO_Z = "2Z"
    TWO_Z2 = "2Z2"

    def reduce(self, value: int) -> int:
        if self is IndexGroup.Z2:
            return value % 2
        if self is IndexGroup.TWO_Z2:
            if value % 2:
                raise ValueError(f"{value} is not in 2Z2")
            return value % 4
        if self is IndexGroup.TWO_Z and value % 2:
            raise ValueError(f"{value} is not in 2Z")
        return value


@dataclass(frozen=True, order=False)
class IndexValue:
    """An integer tagged with the group it lives in.

    Arithmetic is done in the group (mod 2 for Z2, mod 4 for 2Z2).  Equality
    against a plain ``int`` compares the reduced values.
    """

    value: int
    group: IndexGroup

    def __post_init__(self):
        object.__setattr__(self, "value", self.group.reduce(int(self.value)))

    def _coerce(self, other) -> int:
        if isinstance(other, IndexValue):
            if other.group is not self.group:
                raise TypeError(f"cannot combine {self.group.value} with {other.group.value}")
            return other.value
        if isinstance(other, (int, np.integer)):
            return int(other)
        return NotImplemented

    def __add__(self, other):
        v = self._coerce(other)
        if v is NotImplemented:
            return v
        return IndexValue(self.value + v, self.group)

    __radd__ = __add__

    def __neg__(self):
        return IndexValue(-self.value, self.group)

    def __sub__(self, other):
        v = self._coerce(other)
        if v is NotImplemented:
            return v
        return IndexValue(self.value - v, self.group)

    def __eq__(self, other):
        if isinstance(other, IndexValue):
            return self.group is other.group and self.value == other.value
        if isinstance(other, (int, np.integer)):
            return self.value == self.group.reduce(int(other))
        return NotImplemented

    def __hash__(self):
        return hash((self.value, self.group))

    def __int__(self):
        return self.value

    def __abs__(self):
        return abs(self.value)

    def __repr__(self):
        return f"{self.value} [{self.group.value}]"

    @classmethod
    def zero(cls, group: IndexGroup) -> "IndexValue":
        return cls(0, group)


@dataclass(frozen=True)
class SymmetryType:
    label: str
    squares: Mapping[str, int]
    index_group: IndexGroup

    def __post_init__(self):
        for g, s in self.squares.items():
            if g not in GENERATORS or s not in (1, -1):
                raise ValueError(f"bad generator square {g}^2={s}")
        if len(self.squares) == 3 and np.prod(list(self.squares.values())) != 1:
            raise ValueError("squares of three commuting generators must multiply to +1")

    @property
    def present(self) -> tuple[str, ...]:
        return tuple(g for g in GENERATORS if g in self.squares)

    @property
    def chiral(self) -> bool:
        return "gamma" in self.squares


D = SymmetryType("D", {"eta": 1}, IndexGroup.Z2)
AIII = SymmetryType("AIII", {"gamma": 1}, IndexGroup.Z)
BDI = SymmetryType("BDI", {"eta": 1, "tau": 1, "gamma": 1}, IndexGroup.Z)
CII = SymmetryType("CII", {"eta": -1, "tau": -1, "gamma": 1}, IndexGroup.TWO_Z)
DIII = SymmetryType("DIII", {"eta": 1, "tau": -1, "gamma": -1}, IndexGroup.TWO_Z2)

SYMMETRY_TYPES = {t.label: t for t in (D, AIII, BDI, CII, DIII)}


@dataclass(frozen=True)
class AntiUnitaryOp:
    """``v -> U conj(v)`` if ``conjugates`` else ``v -> U v``."""

    matrix: np.ndarray
    conjugates: bool

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("symmetry matrix must be square")
        if not np.allclose(m.conj().T @ m, np.eye(m.shape[0]), atol=1e-12):
            raise ValueError("symmetry matrix must be unitary")
        object.__setattr__(self, "matrix", m)

    @classmethod
    def unchecked(cls, matrix: np.ndarray, conjugates: bool) -> "AntiUnitaryOp":
        """Skip the unitarity check (for block sums of checked cell operators)."""
        op = cls.__new__(cls)
        object.__setattr__(op, "matrix", np.asarray(matrix, dtype=complex))
        object.__setattr__(op, "conjugates", conjugates)
        return op

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def __call__(self, v: np.ndarray) -> np.ndarray:
        return self.matrix @ (np.conj(v) if self.conjugates else v)

    def compose(self, other: "AntiUnitaryOp") -> "AntiUnitaryOp":
        """``self o other``."""
        inner = other.matrix.conj() if self.conjugates else other.matrix
        return AntiUnitaryOp(self.matrix @ inner, self.conjugates != other.conjugates)

    def square_sign(self, tol: float = 1e-10) -> int | None:
        """``+1`` or ``-1`` if the operator squares to that multiple of 1."""
        sq = self.compose(self).matrix
        eye = np.eye(self.dim)
        for sign in (1, -1):
            if np.abs(sq - sign * eye).max() <= tol:
                return sign
        return None

    def commutes_with(self, other: "AntiUnitaryOp", tol: float = 1e-10) -> bool:
        a, b = self.compose(other), other.compose(self)
        return a.conjugates == b.conjugates and np.abs(a.matrix - b.matrix).max() <= tol


def antiunitary_sandwich(op: AntiUnitaryOp, W: np.ndarray) -> np.ndarray:
    """Matrix of ``op W op^-1``: ``U conj(W) U^dagger`` or ``U W U^dagger``."""
    W = np.asarray(W)
    if W.shape != (op.dim, op.dim):
        raise StructureMismatch(f"operator of dim {op.dim} cannot act on {W.shape}")
    inner = W.conj() if op.conjugates else W
    return op.matrix @ inner @ op.matrix.conj().T


ETA_CONJ = AntiUnitaryOp(np.eye(2), True)
GAMMA_SIGMA1 = AntiUnitaryOp(np.array([[0, 1], [1, 0]]), False)
TAU_SIGMA1 = AntiUnitaryOp(np.array([[0, 1], [1, 0]]), True)


def _block_diag(mats: list[np.ndarray]) -> np.ndarray:
    n = sum(m.shape[0] for m in mats)
    out = np.zeros((n, n), dtype=complex)
    i = 0
    for m in mats:
        d = m.shape[0]
        out[i : i + d, i : i + d] = m
        i += d
    return out


@dataclass(frozen=True)
class SymmetryRep:
    """A symmetry type realised cell by cell.

    ``per_cell[x][g]`` is the generator ``g`` acting on cell ``x``.
    Squares and pairwise commutation are checked at construction; phases are
    never adjusted automatically.
    """

    type: SymmetryType
    structure: CellStructure
    per_cell: Mapping[int, Mapping[str, AntiUnitaryOp]] = field(repr=False)

    def __post_init__(self):
        want = set(self.type.present)
        for x in self.structure.cells:
            ops = self.per_cell.get(x)
            if ops is None or set(ops) != want:
                raise ValueError(f"cell {x} must carry exactly {sorted(want)}")
            for g, op in ops.items():
                if op.dim != self.structure.dim(x):
                    raise StructureMismatch(f"{g} on cell {x} has wrong dimension")
                if op.conjugates != (g != "gamma"):
                    raise ValueError(f"{g} must be {'unitary' if g == 'gamma' else 'antiunitary'}")
                if op.square_sign() != self.type.squares[g]:
                    raise ValueError(f"{g}^2 on cell {x} is not {self.type.squares[g]:+d}")
            names = list(ops)
            for i, a in enumerate(names):
                for b in names[i + 1 :]:
                    if not ops[a].commutes_with(ops[b]):
                        raise ValueError(f"{a} and {b} do not commute on cell {x}")

    @classmethod
    def uniform(
        cls, type: SymmetryType, structure: CellStructure, ops: Mapping[str, AntiUnitaryOp]
    ) -> "SymmetryRep":
        return cls(type, structure, {x: dict(ops) for x in structure.cells})

    def restrict(self, x_min: int, x_max: int) -> "SymmetryRep":
        sub = self.structure.sub(x_min, x_max)
        return SymmetryRep(self.type, sub, {x: self.per_cell[x] for x in sub.cells})

    @cached_property
    def window_ops(self) -> dict[str, AntiUnitaryOp]:
        """Each generator as one operator on the whole window."""
        out = {}
        for g in self.type.present:
            mats = [self.per_cell[x][g].matrix for x in self.structure.cells]
            out[g] = AntiUnitaryOp.unchecked(_block_diag(mats), g != "gamma")
        return out

    def cell_rep(self, x: int) -> "SymmetryRep":
        return self.restrict(x, x)


def check_admissible(W: BandedUnitary, rep: SymmetryRep, tol: float = 1e-10) -> tuple[bool, dict[str, float]]:
    """Check ``eta W eta^-1 = W``, ``gamma W gamma^-1 = W^dag``, ``tau W tau^-1 = W^dag``.

    Returns the overall verdict and the largest entrywise defect per
    generator.
    """
    if W.structure != rep.structure:
        raise StructureMismatch("walk and representation live on different structures")
    m = W.dense
    defects = {}
    for g, op in rep.window_ops.items():
        target = m if g == "eta" else m.conj().T
        defects[g] = float(np.abs(antiunitary_sandwich(op, m) - target).max())
    return all(d <= tol for d in defects.values()), defects


class RepIndexError(ValueError):
    """The representation index cannot be evaluated on the given subspace."""


def _orthonormal(basis: np.ndarray) -> np.ndarray:
    basis = np.asarray(basis, dtype=complex)
    if basis.ndim == 1:
        basis = basis[:, None]
    return basis


def invariance_defect(op: AntiUnitaryOp, basis: np.ndarray) -> float:
    """Norm of the part of ``op(span)`` leaving the span."""
    if basis.shape[1] == 0:
        return 0.0
    image = op(basis)
    leak = image - basis @ (basis.conj().T @ image)
    return float(np.linalg.norm(leak, 2))


def rep_index(
    rep: SymmetryRep,
    basis: np.ndarray | None = None,
    *,
    invariance_tol: float = INVARIANCE_TOL,
    rounding_tol: float = TRACE_ROUNDING_TOL,
) -> IndexValue:
    """Symmetry index of the representation restricted to ``span(basis)``.

    ``basis`` holds orthonormal columns on the window of ``rep``; ``None``
    means the whole window.  The value is ``d mod 2`` (D), ``tr gamma``
    (AIII, BDI, CII) or ``d mod 4`` (DIII).
    """
    n = rep.structure.total_dim
    if basis is None:
        basis = np.eye(n, dtype=complex)
    basis = _orthonormal(basis)
    if basis.shape[0] != n:
        raise StructureMismatch(f"basis vectors have length {basis.shape[0]}, expected {n}")
    ops = rep.window_ops
    for g, op in ops.items():
        defect = invariance_defect(op, basis)
        if defect > invariance_tol:
            raise RepIndexError(f"subspace is not invariant under {g} (defect {defect:.2e})")
    t = rep.type
    d = basis.shape[1]
    if t.label == "D":
        return IndexValue(d, t.index_group)
    if t.label == "DIII":
        if d % 2:
            raise RepIndexError(f"DIII subspace of odd dimension {d}")
        return IndexValue(d, t.index_group)
    gamma = ops["gamma"].matrix
    tr = np.trace(basis.conj().T @ gamma @ basis)
    value = int(np.rint(tr.real))
    residue = max(abs(tr.real - value), abs(tr.imag))
    if residue > rounding_tol:
        raise RepIndexError(f"chiral trace {tr:.8g} is not an integer (residue {residue:.2e})")
    if t.label == "CII" and value % 2:
        raise RepIndexError(f"odd chiral trace {value} for CII")
    return IndexValue(value, t.index_group)


def check_balanced(rep: SymmetryRep, x: int) -> bool:
    """Whether the representation on cell ``x`` has index zero."""
    return rep_index(rep.cell_rep(x)) == 0
