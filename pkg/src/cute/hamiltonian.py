"""Hamiltonian assembly over a symmetric basis, and Hermitian eigensolvers."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Optional, Tuple

import numpy as np
from scipy import io as spio
from scipy import linalg, sparse
from scipy.sparse import linalg as splinalg

from .exceptions import BasisMismatch, MissingOverlap, NonConverged
from .symbasis import CuteBasis, SymmetricState

__all__ = [
    "CavitySpec",
    "HamiltonianMatrix",
    "Eigendecomposition",
    "build",
    "diagonalize",
    "SPARSE_THRESHOLD",
    "DENSE_CAP",
]

#: matrices above this dimension are stored sparse
SPARSE_THRESHOLD = 2000
#: largest dimension handed to the dense eigensolver
DENSE_CAP = 16000


@dataclass(frozen=True)
class CavitySpec:
    omega_c: float

    def __post_init__(self):
        if not self.omega_c > 0:
            raise ValueError("cavity frequency must be positive")


@dataclass
class Eigendecomposition:
    values: np.ndarray
    vectors: np.ndarray

    def __iter__(self):
        return iter((self.values, self.vectors))


@dataclass
class HamiltonianMatrix:
    """A real-symmetric or complex-Hermitian matrix tied to the basis it acts on."""

    matrix: Any
    basis: Any = None
    _eig: Optional[Eigendecomposition] = field(default=None, repr=False)

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    @property
    def is_sparse(self) -> bool:
        return sparse.issparse(self.matrix)

    def dense(self) -> np.ndarray:
        return self.matrix.toarray() if self.is_sparse else np.asarray(self.matrix)

    def max_abs(self) -> float:
        if self.is_sparse:
            return float(abs(self.matrix).max()) if self.matrix.nnz else 0.0
        return float(np.max(np.abs(self.matrix))) if self.matrix.size else 0.0

    def hermiticity_error(self) -> float:
        diff = self.matrix - self.matrix.conj().T
        if sparse.issparse(diff):
            return float(abs(diff).max()) if diff.nnz else 0.0
        return float(np.max(np.abs(diff)))

    def __matmul__(self, other):
        return self.matrix @ other

    def __add__(self, other: "HamiltonianMatrix") -> "HamiltonianMatrix":
        if other.basis is not self.basis:
            raise BasisMismatch("cannot add Hamiltonians on different bases")
        return HamiltonianMatrix(self.matrix + other.matrix, self.basis)

    def eigh(self) -> Eigendecomposition:
        if self._eig is None:
            self._eig = diagonalize(self)
        return self._eig

    def to_matrix_market(self, path) -> None:
        spio.mmwrite(str(path), sparse.coo_matrix(self.matrix), symmetry="general",
                     precision=17)


def _assemble(rows, cols, vals, diag, basis) -> HamiltonianMatrix:
    n = len(diag)
    r = np.concatenate([np.arange(n), rows, cols]).astype(np.int64)
    c = np.concatenate([np.arange(n), cols, rows]).astype(np.int64)
    v = np.concatenate([diag, vals, vals]).astype(float)
    mat = sparse.coo_matrix((v, (r, c)), shape=(n, n)).tocsr()
    mat.sum_duplicates()
    if n <= SPARSE_THRESHOLD:
        mat = mat.toarray()
    return HamiltonianMatrix(mat, basis)


def _phonon_energy(state: SymmetricState, basis: CuteBasis) -> float:
    e = 0.0
    for j, occ in enumerate(state.occupation):
        wg = basis.species[j].vib.omega_g
        for k, count in occ:
            e += count * wg[k]
    return e


def _with_extra(occ, j: int, k: int):
    per = list(occ)
    d = dict(per[j])
    d[k] = d.get(k, 0) + 1
    per[j] = tuple(sorted(d.items()))
    return tuple(per)


def build(basis: CuteBasis, cavity: CavitySpec) -> HamiltonianMatrix:
    """Assemble the truncated Hamiltonian on ``basis``.

    The energy zero is the all-ground configuration (photon number 0, every
    molecule in vibrational level 0).  Photonic state ``{n_k}`` couples to the
    excitonic state of species ``j`` obtained by promoting one ground molecule
    from level ``k`` to the excited level ``l``, with amplitude
    ``g_j * sqrt(n_k) * F_j[l, k]``.  Level-0 counts are macroscopic; in the
    thermodynamic limit their factor is replaced by the collective coupling
    and carrier-creating couplings vanish.
    """
    for sp in basis.species:
        fc = sp.vib.fc
        if fc is None or fc.shape != (sp.vib.m_e, sp.vib.m_g):
            raise MissingOverlap(f"species {sp.label!r} lacks a complete overlap matrix")
    diag = np.empty(len(basis))
    rows, cols, vals = [], [], []
    index_of = basis.index_of
    for i, s in enumerate(basis.states):
        e_ph = _phonon_energy(s, basis)
        if s.is_photonic:
            diag[i] = cavity.omega_c + e_ph
            continue
        j = s.species
        sp = basis.species[j]
        fc = sp.vib.fc
        diag[i] = sp.vib.omega_eg[s.level] + e_ph
        # partner with the promoted molecule taken from level 0
        partner = index_of.get(SymmetricState(None, 0, s.occupation))
        if partner is not None:
            if sp.is_infinite:
                amp = sp.collective_coupling
            else:
                amp = sp.single_coupling * math.sqrt(sp.n_molecules - s.carriers(j))
            if fc[s.level, 0] != 0.0:
                rows.append(partner)
                cols.append(i)
                vals.append(amp * fc[s.level, 0])
        g = sp.single_coupling
        if g == 0.0:
            continue
        counts = dict(s.occupation[j])
        for k in range(1, sp.vib.m_g):
            partner = index_of.get(SymmetricState(None, 0, _with_extra(s.occupation, j, k)))
            if partner is None or fc[s.level, k] == 0.0:
                continue
            rows.append(partner)
            cols.append(i)
            vals.append(g * math.sqrt(counts.get(k, 0) + 1) * fc[s.level, k])
    return _assemble(np.array(rows, dtype=np.int64), np.array(cols, dtype=np.int64),
                     np.array(vals, dtype=float), diag, basis)


def _check_pairs(h: HamiltonianMatrix, values, vectors, tol: float) -> None:
    scale = max(h.max_abs(), float(np.max(np.abs(values))) if values.size else 0.0, 1e-300)
    resid = h.matrix @ vectors - vectors * values
    worst = float(np.max(np.linalg.norm(resid, axis=0))) if values.size else 0.0
    if worst > tol * scale:
        raise NonConverged(f"eigenpair residual {worst:.3e} exceeds {tol:.1e} * {scale:.3e}")
    gram = vectors.conj().T @ vectors
    ortho = float(np.max(np.abs(gram - np.eye(gram.shape[0])))) if values.size else 0.0
    if ortho > 1e-10:
        raise NonConverged(f"eigenvectors not orthonormal (max deviation {ortho:.3e})")


def diagonalize(h: HamiltonianMatrix, k: Optional[int] = None, check: bool = True,
                tol: float = 1e-10) -> Eigendecomposition:
    """Eigenvalues (ascending) and orthonormal eigenvectors of ``h``.

    With ``k`` given, only the ``k`` lowest pairs are computed, using ARPACK
    for sparse matrices.
    """
    n = h.dimension
    if k is None or k >= n - 1 or not h.is_sparse:
        if n > DENSE_CAP:
            raise NonConverged(f"dimension {n} exceeds dense eigensolver cap {DENSE_CAP}")
        try:
            if k is None or k >= n:
                values, vectors = linalg.eigh(h.dense())
            else:
                values, vectors = linalg.eigh(h.dense(), subset_by_index=[0, k - 1])
        except linalg.LinAlgError as exc:
            raise NonConverged(str(exc)) from exc
    else:
        try:
            values, vectors = splinalg.eigsh(h.matrix, k=k, which="SA", tol=0)
        except splinalg.ArpackNoConvergence as exc:
            raise NonConverged(str(exc)) from exc
        order = np.argsort(values)
        values, vectors = values[order], vectors[:, order]
    if check:
        _check_pairs(h, values, vectors, tol)
    return Eigendecomposition(values, vectors)


# the vibronic golden-rule model shares the assembly helpers above
from .vibronic import VibronicBathSpec, build_vibronic_fgr_model  # noqa: E402,F401

__all__ += ["VibronicBathSpec", "build_vibronic_fgr_model"]
