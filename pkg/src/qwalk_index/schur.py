"""Schur functions of a finite window relative to a few-cell subspace.

For a unitary ``W`` and the isometry ``J`` onto a subspace ``H0`` (``P = J
J^dagger``, ``Q = 1 - P``) the first-return function is

    f(z) = sum_{n >= 1} z^(n-1) J^dagger W (Q W)^(n-1) J
         = J^dagger W (1 - z Q W)^(-1) J.

It is analytic and contractive on the open disc.  For ``z = +-1`` in a gap
of ``W``, eigenvectors of ``W`` at ``z`` with weight on ``H0`` correspond to
fixed vectors of ``z f(z)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
import scipy.linalg as la

from .lattice import BandedUnitary
from .spectral import GapReport, unitary_eig

TOL_SERIES = 1e-10
# eigendetect evaluates just inside the disc, where 1 - z Q W stays invertible
EIGEN_OFFSET = 1e-10


class SchurConvergenceError(RuntimeError):
    """The truncated series tail is above tolerance."""


@dataclass
class SchurContext:
    """A window walk and the subspace ``H0`` spanned by selected cell components.

    ``H0`` is a list of ``(cell, components)``; ``components=None`` takes the
    whole cell.  ``trunc_N`` defaults to four times the number of cells.
    """

    W: BandedUnitary
    H0: Sequence[tuple[int, Sequence[int] | None]]
    trunc_N: int | None = None
    tol_series: float = TOL_SERIES
    gaps: GapReport | None = None
    _J: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        s = self.W.structure
        cols = []
        for x, comps in self.H0:
            sl = s.slice(x)
            comps = range(s.dim(x)) if comps is None else comps
            for c in comps:
                if not 0 <= c < s.dim(x):
                    raise ValueError(f"component {c} outside cell {x}")
                cols.append(sl.start + c)
        if not cols:
            raise ValueError("H0 must have dimension >= 1")
        if len(set(cols)) != len(cols):
            raise ValueError("H0 selects a basis vector twice")
        J = np.zeros((s.total_dim, len(cols)), dtype=complex)
        J[cols, np.arange(len(cols))] = 1.0
        self._J = J
        if self.trunc_N is None:
            self.trunc_N = 4 * s.n_cells
        if self.trunc_N < 3:
            raise ValueError("trunc_N must be at least 3")

    @property
    def J(self) -> np.ndarray:
        return self._J

    @property
    def dim(self) -> int:
        return self._J.shape[1]

    @cached_property
    def QW(self) -> np.ndarray:
        Wd = self.W.dense
        return Wd - self._J @ (self._J.conj().T @ Wd)

    def with_walk(self, W: BandedUnitary) -> "SchurContext":
        return SchurContext(W, self.H0, self.trunc_N, self.tol_series, self.gaps)


def _check_z(ctx: SchurContext, z: complex) -> None:
    r = abs(z)
    if r > 1 + 1e-12:
        raise ValueError(f"|z| = {r} outside the closed disc")
    if r > 1 - 1e-12:
        if ctx.gaps is None:
            raise ValueError("z on the unit circle needs a gap report")
        in_gap = abs(np.angle(z)) < ctx.gaps.gap_at_plus or abs(np.angle(-z)) < ctx.gaps.gap_at_minus
        if not in_gap:
            raise ValueError(f"z = {z} is not in an essential gap")


def schur_series(ctx: SchurContext, z: complex, trunc_N: int | None = None) -> np.ndarray:
    """Truncated first-return series with a three-term tail estimate."""
    N = trunc_N or ctx.trunc_N
    Wd, QW, J = ctx.W.dense, ctx.QW, ctx.J
    Jh = J.conj().T
    v = J.copy()
    total = np.zeros((ctx.dim, ctx.dim), dtype=complex)
    last = []
    zn = 1.0 + 0j
    for _ in range(N):
        term = zn * (Jh @ (Wd @ v))
        total += term
        last = (last + [np.linalg.norm(term, 2)])[-3:]
        v = QW @ v
        zn *= z
    tail = sum(last)
    if tail > ctx.tol_series:
        raise SchurConvergenceError(f"series tail {tail:.2e} above {ctx.tol_series:.1e} at N={N}, |z|={abs(z):.6f}")
    return total


def schur_resolvent(ctx: SchurContext, z: complex) -> np.ndarray:
    """Closed form ``J^dagger W (1 - z Q W)^(-1) J``."""
    n = ctx.QW.shape[0]
    X = la.solve(np.eye(n) - z * ctx.QW, ctx.J)
    return ctx.J.conj().T @ (ctx.W.dense @ X)


def schur_eval(ctx: SchurContext, z: complex, method: str = "auto") -> np.ndarray:
    """Value of the Schur function at ``z`` as a matrix on ``H0``.

    ``method="series"`` sums the first-return series (inside the disc),
    ``"resolvent"`` uses the closed form, ``"auto"`` takes the series for
    ``|z| < 1`` and the closed form on the circle, where the series of a
    finite window does not converge.
    """
    z = complex(z)
    _check_z(ctx, z)
    if method == "auto":
        method = "series" if abs(z) < 1 - 1e-12 else "resolvent"
    if method == "series":
        f = schur_series(ctx, z)
    elif method == "resolvent":
        f = schur_resolvent(ctx, z)
    else:
        raise ValueError(f"unknown method {method!r}")
    norm = np.linalg.norm(f, 2)
    if norm > 1 + max(ctx.tol_series, 1e-8):
        raise SchurConvergenceError(f"|f(z)| = {norm} is not contractive")
    return f


@dataclass(frozen=True)
class EigenDetection:
    target: int
    dimension: int
    basis: np.ndarray  # columns in H0 coordinates
    singular_values: np.ndarray  # of lambda f(lambda) - 1, ascending
    chirality_trace: float | None


def eigendetect(
    ctx: SchurContext,
    target: int,
    tol: float = 1e-4,
    gamma: np.ndarray | None = None,
    offset: float = EIGEN_OFFSET,
) -> EigenDetection:
    """Fixed space of ``target * f(target)``.

    ``f`` is evaluated at ``target * (1 - offset)``; a state of ``W`` at
    ``target`` that is orthogonal to ``H0`` would make the closed form
    singular exactly on the circle.  ``gamma`` is a chiral involution on the
    window; ``H0`` must be invariant under it.
    """
    if target not in (1, -1):
        raise ValueError("target must be +1 or -1")
    if ctx.gaps is not None and ctx.gaps.gap(target) <= 0:
        raise ValueError(f"{target:+d} is not in a gap")
    f = schur_resolvent(ctx, target * (1 - offset))
    M = target * f - np.eye(ctx.dim)
    _, sv, vh = np.linalg.svd(M)
    order = np.argsort(sv)
    sv, vh = sv[order], vh[order]
    k = int(np.sum(sv < tol))
    basis = vh[:k].conj().T
    trace = None
    if gamma is not None:
        g0 = ctx.J.conj().T @ gamma @ ctx.J
        if np.abs(gamma @ ctx.J - ctx.J @ g0).max() > 1e-10:
            raise ValueError("H0 is not invariant under gamma")
        trace = float(np.trace(basis.conj().T @ g0 @ basis).real) if k else 0.0
    return EigenDetection(target, k, basis, sv, trace)


def dense_overlap_count(ctx: SchurContext, target: int, tol_eig: float = 1e-8, rank_tol: float = 1e-3) -> int:
    """Rank of the projection of the ``W`` eigenspace at ``target`` onto ``H0``.

    Eigenvectors with weight on ``H0`` are those in the cyclic space of
    ``H0``; the rank counts them independently of the basis chosen in a
    degenerate eigenspace.
    """
    evals, evecs = unitary_eig(ctx.W.dense)
    E = evecs[:, np.abs(np.angle(evals * target)) <= tol_eig]
    if E.shape[1] == 0:
        return 0
    sv = np.linalg.svd(ctx.J.conj().T @ E, compute_uv=False)
    return int(np.sum(sv > rank_tol))


RENEWAL_VARIANTS = ("f V^dagger", "V^dagger f", "V f", "f V")


def _variant(name: str, f: np.ndarray, V: np.ndarray) -> np.ndarray:
    Vh = V.conj().T
    return {"f V^dagger": f @ Vh, "V^dagger f": Vh @ f, "V f": V @ f, "f V": f @ V}[name]


@dataclass(frozen=True)
class RenewalReport:
    deviations: dict  # (walk, variant) -> max deviation over the samples
    walk: str
    variant: str
    deviation: float


def renewal_check(
    ctx: SchurContext, V: np.ndarray, zs: Sequence[complex], method: str = "auto"
) -> RenewalReport:
    """Compare the Schur function of ``VW`` and ``WV`` with ``f`` and ``V``.

    ``V`` acts on ``H0`` (identity on its complement).  Every product of
    ``f`` with ``V`` or ``V^dagger`` on either side is tried for both
    perturbed walks; the best-matching pair is reported.
    """
    V = np.asarray(V, dtype=complex)
    if V.shape != (ctx.dim, ctx.dim):
        raise ValueError("V must act on H0")
    if np.abs(V.conj().T @ V - np.eye(ctx.dim)).max() > 1e-10:
        raise ValueError("V is not unitary")
    J = ctx.J
    Vfull = np.eye(J.shape[0], dtype=complex) + J @ (V - np.eye(ctx.dim)) @ J.conj().T
    Wd = ctx.W.dense
    s = ctx.W.structure
    walks = {
        "VW": ctx.with_walk(BandedUnitary.from_dense(s, Vfull @ Wd)),
        "WV": ctx.with_walk(BandedUnitary.from_dense(s, Wd @ Vfull)),
    }
    dev = {(w, v): 0.0 for w in walks for v in RENEWAL_VARIANTS}
    for z in zs:
        f = schur_eval(ctx, z, method)
        for w, c in walks.items():
            g = schur_eval(c, z, method)
            for v in RENEWAL_VARIANTS:
                dev[(w, v)] = max(dev[(w, v)], float(np.linalg.norm(g - _variant(v, f, V), 2)))
    walk, variant = min(dev, key=dev.get)
    return RenewalReport(dev, walk, variant, dev[(walk, variant)])
