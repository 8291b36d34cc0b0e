"""Random admissible symmetry representations and small walk fixtures."""

import numpy as np

from qwalk_index.lattice import CellStructure
from qwalk_index.symmetry import SYMMETRY_TYPES, AntiUnitaryOp, SymmetryRep

ISIGMA2 = np.array([[0, 1], [-1, 0]], dtype=complex)


def irreducible_blocks(label: str, sign: int):
    """Generator matrices of one small building block and its index contribution.

    ``sign`` picks the chirality of the block where that matters.
    """
    if label == "D":
        return {"eta": (np.eye(1), True)}, 1, 1
    if label == "AIII":
        return {"gamma": (sign * np.eye(1), False)}, 1, sign
    if label == "BDI":
        return {"eta": (np.eye(1), True), "tau": (sign * np.eye(1), True), "gamma": (sign * np.eye(1), False)}, 1, sign
    if label == "CII":
        # Kramers pair: eta = i sigma_2 K, gamma = +-1, tau = gamma eta
        return (
            {"eta": (ISIGMA2, True), "tau": (sign * ISIGMA2, True), "gamma": (sign * np.eye(2), False)},
            2,
            2 * sign,
        )
    if label == "DIII":
        # eta = K, tau = i sigma_2 K, gamma = eta tau = i sigma_2 (squares to -1)
        return {"eta": (np.eye(2), True), "tau": (ISIGMA2, True), "gamma": (ISIGMA2, False)}, 2, 2
    raise ValueError(label)


def random_unitary(rng, n):
    q, r = np.linalg.qr(rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_rep(label: str, rng, n_blocks: int):
    """Direct sum of random building blocks, rotated by a random unitary.

    Returns the one-cell representation and the index expected from the
    blocks (before reduction to the index group).
    """
    t = SYMMETRY_TYPES[label]
    mats = {g: [] for g in t.present}
    expected = 0
    for _ in range(n_blocks):
        sign = int(rng.choice([-1, 1]))
        ops, d, contrib = irreducible_blocks(label, sign)
        for g, (m, _) in ops.items():
            mats[g].append(np.asarray(m, dtype=complex))
        expected += contrib
    n = sum(m.shape[0] for m in mats[t.present[0]])
    U = random_unitary(rng, n)
    ops = {}
    for g, blocks in mats.items():
        M = np.zeros((n, n), dtype=complex)
        i = 0
        for b in blocks:
            M[i : i + b.shape[0], i : i + b.shape[0]] = b
            i += b.shape[0]
        conj = g != "gamma"
        # v -> U M conj(U^dag v) = (U M U^T) conj(v) for antiunitaries
        ops[g] = AntiUnitaryOp(U @ M @ (U.T if conj else U.conj().T), conj)
    structure = CellStructure(0, 0, (n,))
    return SymmetryRep(t, structure, {0: ops}), expected, U
