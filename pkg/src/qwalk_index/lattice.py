"""Cell structures, block-banded unitaries and translation-invariant symbols.

Everything lives on a finite window of cells ``x_min..x_max``.  Each cell
carries a small internal (coin) space; a vector on the window is laid out
cell by cell in increasing ``x``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping

import numpy as np

DEFAULT_TOL = 1e-10


class StructureMismatch(ValueError):
    """Two objects live on different cell structures."""


@dataclass(frozen=True)
class CellStructure:
    """Contiguous range of cells with per-cell dimensions."""

    x_min: int
    x_max: int
    dims: tuple[int, ...]

    def __post_init__(self):
        if self.x_max < self.x_min:
            raise ValueError(f"empty cell range [{self.x_min}, {self.x_max}]")
        if len(self.dims) != self.x_max - self.x_min + 1:
            raise ValueError("need one dimension per cell")
        if any(d < 1 for d in self.dims):
            raise ValueError("cell dimensions must be positive")

    @classmethod
    def uniform(cls, x_min: int, x_max: int, dim: int = 2) -> "CellStructure":
        return cls(x_min, x_max, (dim,) * (x_max - x_min + 1))

    @property
    def cells(self) -> range:
        return range(self.x_min, self.x_max + 1)

    @property
    def n_cells(self) -> int:
        return self.x_max - self.x_min + 1

    @cached_property
    def offsets(self) -> np.ndarray:
        return np.concatenate([[0], np.cumsum(self.dims)])

    @property
    def total_dim(self) -> int:
        return int(self.offsets[-1])

    def dim(self, x: int) -> int:
        return self.dims[x - self.x_min]

    def slice(self, x: int) -> slice:
        i = x - self.x_min
        if not 0 <= i < self.n_cells:
            raise IndexError(f"cell {x} outside [{self.x_min}, {self.x_max}]")
        return slice(int(self.offsets[i]), int(self.offsets[i + 1]))

    @cached_property
    def cell_of_index(self) -> np.ndarray:
        """Cell label of every basis index."""
        return np.repeat(np.arange(self.x_min, self.x_max + 1), self.dims)

    @cached_property
    def component_of_index(self) -> np.ndarray:
        return np.concatenate([np.arange(d) for d in self.dims])

    def sub(self, x_min: int, x_max: int) -> "CellStructure":
        if x_min < self.x_min or x_max > self.x_max:
            raise IndexError("sub-range outside structure")
        lo, hi = x_min - self.x_min, x_max - self.x_min + 1
        return CellStructure(x_min, x_max, self.dims[lo:hi])

    def index_range(self, x_min: int, x_max: int) -> slice:
        """Basis index slice covering cells ``x_min..x_max`` inclusive."""
        return slice(self.slice(x_min).start, self.slice(x_max).stop)


@dataclass(frozen=True)
class StateVector:
    structure: CellStructure
    amplitudes: np.ndarray

    def __post_init__(self):
        amp = np.asarray(self.amplitudes, dtype=complex)
        if amp.shape != (self.structure.total_dim,):
            raise StructureMismatch(
                f"amplitude length {amp.shape} does not match dimension {self.structure.total_dim}"
            )
        object.__setattr__(self, "amplitudes", amp)

    @classmethod
    def basis(cls, structure: CellStructure, x: int, component: int) -> "StateVector":
        amp = np.zeros(structure.total_dim, dtype=complex)
        amp[structure.slice(x).start + component] = 1.0
        return cls(structure, amp)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def cell(self, x: int) -> np.ndarray:
        return self.amplitudes[self.structure.slice(x)]

    def cell_probabilities(self) -> np.ndarray:
        p = np.abs(self.amplitudes) ** 2
        return np.bincount(
            self.structure.cell_of_index - self.structure.x_min,
            weights=p,
            minlength=self.structure.n_cells,
        )


@dataclass(frozen=True)
class BandedUnitary:
    """Block-banded operator on a finite window.

    ``blocks[(x, y)]`` is the ``dims[x] x dims[y]`` matrix element between
    cells ``x`` (row) and ``y`` (column).  Blocks are only stored for
    ``|x - y| <= L``; missing blocks are zero.
    """

    structure: CellStructure
    L: int
    blocks: Mapping[tuple[int, int], np.ndarray] = field(repr=False)

    def __post_init__(self):
        if self.L < 0:
            raise ValueError("interaction length must be non-negative")
        s = self.structure
        for (x, y), b in self.blocks.items():
            if abs(x - y) > self.L:
                raise ValueError(f"block ({x}, {y}) exceeds interaction length {self.L}")
            if b.shape != (s.dim(x), s.dim(y)):
                raise ValueError(f"block ({x}, {y}) has shape {b.shape}")

    @classmethod
    def from_dense(
        cls,
        structure: CellStructure,
        matrix: np.ndarray,
        L: int | None = None,
        tol: float = 0.0,
    ) -> "BandedUnitary":
        """Cut a dense matrix into blocks.

        With ``L=None`` the interaction length is the largest cell distance
        carrying an entry above ``tol``.  With an explicit ``L`` every entry
        beyond it must be below ``tol``.
        """
        m = np.asarray(matrix, dtype=complex)
        n = structure.total_dim
        if m.shape != (n, n):
            raise StructureMismatch(f"matrix shape {m.shape} != ({n}, {n})")
        cells = structure.cell_of_index
        dist = np.abs(cells[:, None] - cells[None, :])
        nz = np.abs(m) > tol
        reach = int(dist[nz].max()) if nz.any() else 0
        if L is None:
            L = reach
        elif reach > L:
            raise ValueError(f"matrix has entries at cell distance {reach} > L={L}")
        blocks = {}
        for x in structure.cells:
            sx = structure.slice(x)
            for y in range(max(structure.x_min, x - L), min(structure.x_max, x + L) + 1):
                b = m[sx, structure.slice(y)]
                if np.any(np.abs(b) > tol):
                    blocks[(x, y)] = b.copy()
        return cls(structure, L, blocks)

    @classmethod
    def identity(cls, structure: CellStructure) -> "BandedUnitary":
        return cls(structure, 0, {(x, x): np.eye(structure.dim(x), dtype=complex) for x in structure.cells})

    @cached_property
    def dense(self) -> np.ndarray:
        s = self.structure
        m = np.zeros((s.total_dim, s.total_dim), dtype=complex)
        for (x, y), b in self.blocks.items():
            m[s.slice(x), s.slice(y)] = b
        m.setflags(write=False)
        return m

    def block(self, x: int, y: int) -> np.ndarray:
        b = self.blocks.get((x, y))
        if b is None:
            return np.zeros((self.structure.dim(x), self.structure.dim(y)), dtype=complex)
        return b

    def restrict(self, x_min: int, x_max: int) -> "BandedUnitary":
        """Compression to a sub-range of cells (unitary only if decoupled there)."""
        sub = self.structure.sub(x_min, x_max)
        blocks = {
            (x, y): b for (x, y), b in self.blocks.items() if x_min <= x <= x_max and x_min <= y <= x_max
        }
        return BandedUnitary(sub, self.L, blocks)

    def dagger(self) -> "BandedUnitary":
        return BandedUnitary(self.structure, self.L, {(y, x): b.conj().T for (x, y), b in self.blocks.items()})


def apply(W: BandedUnitary, psi: StateVector) -> StateVector:
    """Return ``W psi`` computed block by block."""
    if W.structure != psi.structure:
        raise StructureMismatch("walk and state live on different cell structures")
    s = W.structure
    out = np.zeros(s.total_dim, dtype=complex)
    for (x, y), b in W.blocks.items():
        out[s.slice(x)] += b @ psi.amplitudes[s.slice(y)]
    return StateVector(s, out)


def check_unitary(W: BandedUnitary, tol: float = DEFAULT_TOL) -> tuple[bool, float]:
    """Largest entry of ``|W^dagger W - 1|`` and whether it is within ``tol``."""
    m = W.dense
    defect = float(np.abs(m.conj().T @ m - np.eye(m.shape[0])).max())
    return defect <= tol, defect


@dataclass(frozen=True)
class TIWalkSymbol:
    """Translation-invariant walk given by its jump matrices.

    ``jumps[j]`` is the block ``W[x + j, x]``, the amplitude for moving ``j``
    cells.  The symbol is ``W(k) = sum_j exp(i k j) jumps[j]``; with this
    convention the symbol of a product is the product of symbols.
    """

    coin_dim: int
    jumps: Mapping[int, np.ndarray] = field(repr=False)

    def __post_init__(self):
        clean = {}
        for j, m in self.jumps.items():
            m = np.asarray(m, dtype=complex)
            if m.shape != (self.coin_dim, self.coin_dim):
                raise ValueError(f"jump {j} has shape {m.shape}")
            clean[int(j)] = m
        object.__setattr__(self, "jumps", dict(sorted(clean.items())))

    @property
    def L(self) -> int:
        nonzero = [abs(j) for j, m in self.jumps.items() if np.any(m != 0)]
        return max(nonzero, default=0)

    def __matmul__(self, other: "TIWalkSymbol") -> "TIWalkSymbol":
        if self.coin_dim != other.coin_dim:
            raise ValueError("coin dimensions differ")
        out: dict[int, np.ndarray] = {}
        for i, a in self.jumps.items():
            for j, b in other.jumps.items():
                out[i + j] = out.get(i + j, 0) + a @ b
        return TIWalkSymbol(self.coin_dim, out)

    @classmethod
    def onsite(cls, coin: np.ndarray) -> "TIWalkSymbol":
        coin = np.asarray(coin, dtype=complex)
        return cls(coin.shape[0], {0: coin})


def symbol_at(S: TIWalkSymbol, k: float) -> np.ndarray:
    """Evaluate ``W(k)``."""
    out = np.zeros((S.coin_dim, S.coin_dim), dtype=complex)
    for j, m in S.jumps.items():
        out += np.exp(1j * k * j) * m
    return out


def symbol_on_grid(S: TIWalkSymbol, ks: np.ndarray) -> np.ndarray:
    """Vectorised :func:`symbol_at`; returns shape ``(len(ks), d, d)``."""
    ks = np.asarray(ks, dtype=float)
    out = np.zeros((ks.size, S.coin_dim, S.coin_dim), dtype=complex)
    for j, m in S.jumps.items():
        out += np.exp(1j * ks * j)[:, None, None] * m
    return out


def ti_to_banded(S: TIWalkSymbol, x_min: int, x_max: int):
    """Materialise a translation-invariant walk on ``x_min..x_max``.

    Returns ``(W, crossing)`` where ``W`` holds the blocks internal to the
    window and ``crossing`` maps ``(x, y)`` to the blocks connecting the
    window to cells outside it.  ``W`` alone is not unitary; a boundary
    decoupling has to be applied first.
    """
    L = S.L
    if x_max - x_min + 1 <= 2 * L:
        raise ValueError(f"range of {x_max - x_min + 1} cells too short for L={L}")
    structure = CellStructure.uniform(x_min, x_max, S.coin_dim)
    blocks = {}
    crossing = {}
    for y in range(x_min - L, x_max + L + 1):
        for j, m in S.jumps.items():
            if not np.any(m):
                continue
            x = y + j
            inside_x = x_min <= x <= x_max
            inside_y = x_min <= y <= x_max
            if inside_x and inside_y:
                blocks[(x, y)] = m.copy()
            elif inside_x or inside_y:
                crossing[(x, y)] = m.copy()
    return BandedUnitary(structure, L, blocks), crossing
