"""Standard complex Clifford representations used for operator suspension.

``build_clifford(p)`` returns the irreducible representation of the algebra
generated by p unitaries e_1..e_p with e_i e_j + e_j e_i = -2 delta_ij, on
C^(2^k) with k = floor(p/2), normalized so that

    p = 2k+1:  c(i^(k+1) e_1 ... e_p) = Id
    p = 2k:    c(i^k e_1 ... e_p) = gamma,  gamma^2 = Id,  gamma* = gamma.

The generators are fixed tensor products of Pauli matrices (deterministic,
so downstream sign conventions are reproducible):

    p even: c(e_{2j-1}) = I x..x (i s1) x s3 x..x s3
            c(e_{2j})   = I x..x (i s2) x s3 x..x s3,   gamma = s3 x..x s3
    p odd:  same with (-i s1), (-i s2), and c(e_p) = -i s3 x..x s3.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np

from .errors import DimensionMismatchError, DivflowError

ALG_TOL = 1e-12

_S1 = np.array([[0, 1], [1, 0]], dtype=complex)
_S2 = np.array([[0, -1j], [1j, 0]], dtype=complex)
_S3 = np.array([[1, 0], [0, -1]], dtype=complex)


def _kron_all(mats):
    return reduce(np.kron, mats, np.eye(1, dtype=complex))


@dataclass(frozen=True)
class CliffordRep:
    """Concrete 2^k-dimensional representation of Cl_p.

    grading is the volume-element operator gamma and is present iff p is even.
    """

    p: int
    k: int
    generators: tuple[np.ndarray, ...]
    grading: np.ndarray | None

    @property
    def dim(self) -> int:
        return 2 ** self.k


def build_clifford(p: int) -> CliffordRep:
    """Construct the standard representation of Cl_p for p >= 1."""
    if p < 1:
        raise DivflowError("p must be a positive integer")
    k = p // 2
    sign = 1.0 if p % 2 == 0 else -1.0
    gens = []
    for j in range(1, k + 1):
        pre = [np.eye(2, dtype=complex)] * (j - 1)
        post = [_S3] * (k - j)
        gens.append(_kron_all(pre + [sign * 1j * _S1] + post))
        gens.append(_kron_all(pre + [sign * 1j * _S2] + post))
    if p % 2 == 1:
        gens.append(-1j * _kron_all([_S3] * k))
        grading = None
    else:
        grading = _kron_all([_S3] * k)
    rep = CliffordRep(p=p, k=k, generators=tuple(g for g in gens), grading=grading)
    _validate(rep)
    return rep


def _validate(rep: CliffordRep):
    d = rep.dim
    eye = np.eye(d, dtype=complex)
    for i, gi in enumerate(rep.generators):
        if np.max(np.abs(gi @ gi.conj().T - eye)) > ALG_TOL:
            raise DivflowError(f"generator {i + 1} is not unitary")
        for j, gj in enumerate(rep.generators):
            resid = gi @ gj + gj @ gi + 2.0 * (i == j) * eye
            if np.max(np.abs(resid)) > ALG_TOL:
                raise DivflowError(f"anticommutation fails at ({i + 1},{j + 1})")
    vol = reduce(np.matmul, rep.generators)
    if rep.p % 2 == 1:
        vol = (1j) ** (rep.k + 1) * vol
        if np.max(np.abs(vol - eye)) > ALG_TOL:
            raise DivflowError("odd volume-element normalization fails")
    else:
        vol = (1j) ** rep.k * vol
        g = rep.grading
        if (np.max(np.abs(vol - g)) > ALG_TOL
                or np.max(np.abs(g @ g - eye)) > ALG_TOL
                or np.max(np.abs(g - g.conj().T)) > ALG_TOL):
            raise DivflowError("even grading normalization fails")


def c_of_mu(rep: CliffordRep, mu) -> np.ndarray:
    """Linear Clifford action c(mu) = sum_j mu_j c(e_j); skew-Hermitian."""
    mu = np.asarray(mu, dtype=float)
    if mu.shape != (rep.p,):
        raise DimensionMismatchError(f"mu must have length {rep.p}")
    out = np.zeros((rep.dim, rep.dim), dtype=complex)
    for m, g in zip(mu, rep.generators):
        out += m * g
    return out


def _grading_order(rep: CliffordRep) -> np.ndarray:
    # gamma is diagonal +-1 in the Pauli tensor basis; order +1 block first.
    d = np.real(np.diag(rep.grading))
    return np.concatenate([np.where(d > 0)[0], np.where(d < 0)[0]])


def cplus_of_mu(rep: CliffordRep, mu) -> np.ndarray:
    """Off-diagonal block c+(mu) of c(mu) in the gamma-eigenbasis.

    In the ordered basis (Delta+, Delta-) one has
    c(mu) = [[0, -c+(mu)*], [c+(mu), 0]].  Only defined for p even.
    """
    if rep.p % 2 == 1:
        raise DivflowError("c+ blocks require even p")
    perm = _grading_order(rep)
    c = c_of_mu(rep, mu)[np.ix_(perm, perm)]
    h = rep.dim // 2
    return c[h:, :h]


def assemble_from_cplus(rep: CliffordRep, cplus: np.ndarray) -> np.ndarray:
    """Rebuild c(mu) in the original basis from its c+ block (even p)."""
    if rep.p % 2 == 1:
        raise DivflowError("c+ blocks require even p")
    h = rep.dim // 2
    blk = np.zeros((rep.dim, rep.dim), dtype=complex)
    blk[:h, h:] = -cplus.conj().T
    blk[h:, :h] = cplus
    perm = _grading_order(rep)
    inv = np.argsort(perm)
    return blk[np.ix_(inv, inv)]
