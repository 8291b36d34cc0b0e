"""Band structures, gaps at +-1, and eigenspaces of finite windows."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as la
from scipy.optimize import minimize_scalar

from .lattice import BandedUnitary, StateVector, TIWalkSymbol, symbol_on_grid

TOL_EIG = 1e-8
GAP_THRESHOLD = 1e-3
EDGE_MASS = 0.9


class ClusterAmbiguity(RuntimeError):
    """Eigenvalues sit too close to the edge of the selection window."""


@dataclass(frozen=True)
class BandStructure:
    k_grid: np.ndarray
    eigenphases: np.ndarray  # (n_k, coin_dim), sorted per row


@dataclass(frozen=True)
class GapReport:
    gap_at_plus: float
    gap_at_minus: float
    closed_plus: bool
    closed_minus: bool
    threshold: float

    @property
    def gapped(self) -> bool:
        return not (self.closed_plus or self.closed_minus)

    def gap(self, target: int) -> float:
        return self.gap_at_plus if target == 1 else self.gap_at_minus


def band_structure(S: TIWalkSymbol, n_k: int = 128) -> BandStructure:
    if n_k < 16:
        raise ValueError("need at least 16 quasi-momenta")
    ks = 2 * np.pi * np.arange(n_k) / n_k
    phases = np.sort(np.angle(np.linalg.eigvals(symbol_on_grid(S, ks))), axis=1)
    return BandStructure(ks, phases)


def _phase_distance(S: TIWalkSymbol, target: int):
    def f(k: float) -> float:
        ev = np.linalg.eigvals(symbol_on_grid(S, np.array([k]))[0])
        return float(np.min(np.abs(np.angle(ev * target))))

    return f


def essential_gap(S: TIWalkSymbol, n_k: int = 256, threshold: float = GAP_THRESHOLD) -> GapReport:
    """Distance of the bands from phase 0 and from phase pi.

    The grid minimum is polished by a bounded scalar minimisation around the
    best grid point so that closures between grid points are not missed.
    """
    bands = band_structure(S, n_k)
    dk = bands.k_grid[1] - bands.k_grid[0]
    gaps = []
    for target in (1, -1):
        dist = np.abs(np.angle(np.exp(1j * bands.eigenphases) * target))
        per_k = dist.min(axis=1)
        i = int(np.argmin(per_k))
        k0 = bands.k_grid[i]
        res = minimize_scalar(
            _phase_distance(S, target), bounds=(k0 - dk, k0 + dk), method="bounded", options={"xatol": 1e-12}
        )
        gaps.append(float(min(per_k[i], res.fun)))
    gp, gm = gaps
    return GapReport(gp, gm, gp < threshold, gm < threshold, threshold)


def decay_length(S: TIWalkSymbol, target: int) -> float:
    """Longest decay length (in cells) of evanescent solutions at ``target``.

    Solves ``det(sum_j z^j W_j - target) = 0`` as a polynomial eigenvalue
    problem in ``z = exp(ik)``; a root with ``|z| != 1`` decays like
    ``|z|^x``.  Returns ``inf`` if a root lies on the unit circle.
    """
    L = max(S.L, 1)
    d = S.coin_dim
    ks = np.linspace(0, 2 * np.pi, 64, endpoint=False)
    on_circle = np.abs(np.linalg.eigvals(symbol_on_grid(S, ks)) - target).min()
    if on_circle < 1e-9:
        # a band touches the target (also covers flat bands, where the pencil is singular)
        return float("inf")
    coeffs = [np.zeros((d, d), dtype=complex) for _ in range(2 * L + 1)]
    for j, m in S.jumps.items():
        coeffs[j + L] = coeffs[j + L] + m
    coeffs[L] = coeffs[L] - target * np.eye(d)
    m = 2 * L
    n = d * m
    A = np.zeros((n, n), dtype=complex)
    B = np.eye(n, dtype=complex)
    A[: n - d, d:] = np.eye(n - d)
    for i in range(m):
        A[n - d :, i * d : (i + 1) * d] = -coeffs[i]
    B[n - d :, n - d :] = coeffs[m]
    roots = la.eigvals(A, B)
    roots = roots[np.isfinite(roots) & (np.abs(roots) > 1e-12) & (np.abs(roots) < 1e12)]
    if roots.size == 0:
        return 0.0
    rates = np.abs(np.log(np.abs(roots)))
    if rates.min() < 1e-9:
        return float("inf")
    return float(1.0 / rates.min())


@dataclass(frozen=True)
class EigenspaceReport:
    eigenvalue_target: int
    basis: np.ndarray  # (dim, k) orthonormal columns
    eigenvalues: np.ndarray  # Rayleigh quotients of the basis vectors
    residuals: np.ndarray
    centers: np.ndarray
    masses: np.ndarray  # (k, 3): left, middle, right thirds
    edge_attribution: tuple[str, ...]
    chiralities: np.ndarray | None
    chirality_trace: float | None
    structure: object

    @property
    def dimension(self) -> int:
        return self.basis.shape[1]

    def select(self, label: str) -> np.ndarray:
        idx = [i for i, a in enumerate(self.edge_attribution) if a == label]
        return self.basis[:, idx]

    def count(self, label: str) -> int:
        return sum(a == label for a in self.edge_attribution)


def localization_profile(v: StateVector) -> tuple[float, float, float, float]:
    """Position expectation and probability in the left, right and middle thirds.

    Returns ``(center, edge_mass_left, edge_mass_right, middle_mass)``.
    """
    s = v.structure
    p = v.cell_probabilities()
    total = p.sum()
    if total > 0:
        p = p / total
    xs = np.arange(s.x_min, s.x_max + 1)
    third = s.n_cells / 3
    rel = xs - s.x_min
    left = float(p[rel < third].sum())
    right = float(p[rel >= s.n_cells - third].sum())
    middle = float(1.0 - left - right)
    return float(p @ xs), left, right, max(middle, 0.0)


def _attribute(left: float, right: float, middle: float, threshold: float = EDGE_MASS) -> str:
    if left > threshold:
        return "left"
    if right > threshold:
        return "right"
    if middle > threshold:
        return "middle"
    return "ambiguous"


def _fix_phase(v: np.ndarray) -> np.ndarray:
    i = np.argmax(np.abs(v))
    return v * (abs(v[i]) / v[i])


def unitary_eig(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues and orthonormal eigenvectors of a unitary matrix."""
    T, Z = la.schur(m, output="complex")
    return np.diag(T).copy(), Z


def eigenspace_near(
    W: BandedUnitary,
    target: int,
    tol_eig: float = TOL_EIG,
    gamma: np.ndarray | None = None,
    check_straddle: bool = True,
    spectrum: tuple[np.ndarray, np.ndarray] | None = None,
) -> EigenspaceReport:
    """Eigenvectors of ``W`` whose eigenvalue is within ``tol_eig`` of ``target``.

    Distances are arclengths on the unit circle.  Inside the selected
    cluster the basis is rotated to be localized: first split by chirality
    when ``gamma`` (a hermitian involution on the window) is given, then
    diagonalize the cell position operator in each part.  The span is not
    changed by this rotation.

    With ``check_straddle`` an eigenvalue at distance between ``tol_eig``
    and ``10 * tol_eig`` raises :class:`ClusterAmbiguity`.
    """
    if target not in (1, -1):
        raise ValueError("target must be +1 or -1")
    evals, evecs = spectrum if spectrum is not None else unitary_eig(W.dense)
    dist = np.abs(np.angle(evals * target))
    if check_straddle:
        straddle = (dist > tol_eig) & (dist <= 10 * tol_eig)
        if straddle.any():
            raise ClusterAmbiguity(
                f"{int(straddle.sum())} eigenvalue(s) within 10x of the {tol_eig:.1e} selection radius"
            )
    Q = evecs[:, dist <= tol_eig]
    s = W.structure
    xs = s.cell_of_index.astype(float)

    parts = []
    if gamma is not None and Q.shape[1]:
        g = Q.conj().T @ gamma @ Q
        g = (g + g.conj().T) / 2
        gv, gw = np.linalg.eigh(g)
        for sign in (1, -1):
            sel = np.abs(gv - sign) < 0.5
            parts.append(Q @ gw[:, sel])
    else:
        parts.append(Q)
    vecs = []
    for P in parts:
        if P.shape[1] == 0:
            continue
        X = P.conj().T @ (xs[:, None] * P)
        _, xw = np.linalg.eigh((X + X.conj().T) / 2)
        vecs.append(P @ xw)
    if vecs:
        basis = np.column_stack(vecs)
        basis = np.column_stack([_fix_phase(basis[:, i]) for i in range(basis.shape[1])])
    else:
        basis = np.zeros((s.total_dim, 0), dtype=complex)

    Wd = W.dense
    Wb = Wd @ basis
    rayleigh = np.einsum("ij,ij->j", basis.conj(), Wb)
    residuals = np.linalg.norm(Wb - target * basis, axis=0)
    centers, masses, attribution = [], [], []
    for i in range(basis.shape[1]):
        c, left, right, middle = localization_profile(StateVector(s, basis[:, i]))
        centers.append(c)
        masses.append((left, middle, right))
        attribution.append(_attribute(left, right, middle))
    if gamma is not None:
        chir = np.einsum("ij,ij->j", basis.conj(), gamma @ basis).real
        trace = float(chir.sum())
    else:
        chir, trace = None, None
    return EigenspaceReport(
        eigenvalue_target=target,
        basis=basis,
        eigenvalues=rayleigh,
        residuals=residuals,
        centers=np.array(centers),
        masses=np.array(masses).reshape(-1, 3),
        edge_attribution=tuple(attribution),
        chiralities=chir,
        chirality_trace=trace,
        structure=s,
    )


def conjugation_symmetry_defect(evals: np.ndarray) -> float:
    """Largest distance from a conjugated eigenvalue to the nearest eigenvalue."""
    if evals.size == 0:
        return 0.0
    d = np.abs(evals.conj()[:, None] - evals[None, :])
    return float(d.min(axis=1).max())
