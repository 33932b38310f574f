"""Symmetric quadratic-form machinery.

Fractional matrix powers, positive-definiteness tests, Gram-Schmidt in an
arbitrary positive-definite metric, and the simultaneous diagonalization
of two quadratic forms (the generic operation behind every normal-mode
solve in this package).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

SYMMETRIZE_TOL = 1e-12
DEGENERACY_RTOL = 1e-8
SIGN_TOL = 1e-12


class QuadformError(ValueError):
    """Base class for quadratic-form failures."""


class NegativeEigenvalueNonIntegerPower(QuadformError):
    """Non-integer power requested for a matrix with a negative eigenvalue."""


class SingularNonPositivePower(QuadformError):
    """Non-positive power requested for a singular matrix."""


class DependentInput(QuadformError):
    """Gram-Schmidt received linearly dependent vectors."""


class NotPositiveDefinite(QuadformError):
    """A positive-definite matrix was required."""


class DimensionMismatch(QuadformError):
    """Operand dimensions are inconsistent."""


@dataclass(frozen=True, eq=False)
class SymMatrix:
    """Dense real symmetric matrix.

    The stored array is symmetrized by averaging on construction and made
    read-only; instances are safe to share between threads.
    """

    entries: np.ndarray

    def __post_init__(self):
        a = np.array(self.entries, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise DimensionMismatch(f"expected a square matrix, got shape {a.shape}")
        if a.shape[0] < 1:
            raise DimensionMismatch("dimension must be at least 1")
        a = 0.5 * (a + a.T)
        a.flags.writeable = False
        object.__setattr__(self, "entries", a)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @classmethod
    def identity(cls, n: int) -> "SymMatrix":
        return cls(np.eye(n))

    @classmethod
    def diagonal(cls, values) -> "SymMatrix":
        return cls(np.diag(np.asarray(values, dtype=float)))

    def __array__(self, dtype=None, copy=None):
        if copy:
            return np.array(self.entries, dtype=dtype, copy=True)
        return np.asarray(self.entries, dtype=dtype)


@dataclass(frozen=True, eq=False)
class PairDiagonalization:
    """Result of diagonalizing the pair (g, gtilde).

    beta columns are g-orthonormal and diagonalize gtilde; lambdas are the
    characteristic values in ascending order, grouped into degenerate
    subspaces by `multiplicities`.
    """

    beta: np.ndarray
    lambdas: np.ndarray
    multiplicities: np.ndarray = field(default=None)

    def __post_init__(self):
        beta = np.array(self.beta, dtype=float)
        lambdas = np.array(self.lambdas, dtype=float)
        mult = (
            np.array(self.multiplicities, dtype=int)
            if self.multiplicities is not None
            else np.ones(lambdas.size, dtype=int)
        )
        if np.any(np.diff(lambdas) < -1e-12 * max(1.0, np.abs(lambdas).max())):
            raise QuadformError("lambdas must be ascending")
        if mult.sum() != lambdas.size:
            raise DimensionMismatch("multiplicities do not partition the spectrum")
        for arr in (beta, lambdas, mult):
            arr.flags.writeable = False
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "lambdas", lambdas)
        object.__setattr__(self, "multiplicities", mult)


def matrix_power(a: SymMatrix, gamma: float) -> SymMatrix:
    """Power of a symmetric matrix through its orthonormal eigenbasis.

    Returns beta D**gamma beta^-1.  Negative eigenvalues are only allowed
    for (positive) integer powers, zero eigenvalues only for gamma > 0.
    """
    vals, vecs = np.linalg.eigh(a.entries)
    scale = max(1.0, np.abs(vals).max())
    gamma_is_int = float(gamma).is_integer()
    if vals.min() < -SYMMETRIZE_TOL * scale and not gamma_is_int:
        raise NegativeEigenvalueNonIntegerPower(
            f"eigenvalue {vals.min():.3e} < 0 with gamma = {gamma}"
        )
    if np.any(np.abs(vals) < SYMMETRIZE_TOL * scale) and gamma <= 0:
        raise SingularNonPositivePower(
            f"singular matrix with non-positive gamma = {gamma}"
        )
    if gamma_is_int:
        powered = vals**int(gamma)
    else:
        powered = vals**float(gamma)
    return SymMatrix((vecs * powered) @ vecs.T)


def is_positive_definite(a: SymMatrix) -> bool:
    """Sylvester test: all leading principal minors positive.

    Implemented through an (attempted) Cholesky factorization of the matrix
    shifted down by the tolerance, so that values positive-definite only
    within 1e-12 of singular report False.
    """
    n = a.dim
    scale = max(1.0, np.abs(a.entries).max())
    shifted = a.entries - SYMMETRIZE_TOL * scale * np.eye(n)
    try:
        np.linalg.cholesky(shifted)
    except np.linalg.LinAlgError:
        return False
    return True


def gram_schmidt_metric(vectors, metric: SymMatrix) -> list:
    """Orthonormalize `vectors` in the inner product (u, metric v).

    The span is preserved; the output satisfies v_i^T metric v_j = delta_ij.
    """
    m = metric.entries
    out = []
    for v in vectors:
        v = np.array(v, dtype=float)
        if v.shape != (metric.dim,):
            raise DimensionMismatch(
                f"vector of length {v.size} incompatible with metric dim {metric.dim}"
            )
        original_norm = np.sqrt(v @ m @ v)
        for u in out:
            v = v - (u @ m @ v) * u
        norm = np.sqrt(v @ m @ v)
        if norm < 1e-10 * max(original_norm, 1e-300):
            raise DependentInput("vector lies in the span of its predecessors")
        out.append(v / norm)
    return out


def _group_degenerate(lambdas: np.ndarray) -> list:
    """Partition ascending eigenvalues into near-degenerate groups."""
    tol = DEGENERACY_RTOL * max(np.abs(lambdas).max(), 1e-300)
    groups = [[0]]
    for i in range(1, lambdas.size):
        if lambdas[i] - lambdas[groups[-1][0]] <= tol:
            groups[-1].append(i)
        else:
            groups.append([i])
    return groups


def _fix_column_signs(beta: np.ndarray) -> np.ndarray:
    """First significant entry of every column made positive."""
    beta = beta.copy()
    for j in range(beta.shape[1]):
        col = beta[:, j]
        idx = np.nonzero(np.abs(col) > SIGN_TOL * max(np.abs(col).max(), 1e-300))[0]
        lead = idx[0] if idx.size else 0
        if col[lead] < 0:
            beta[:, j] = -col
    return beta


def simultaneous_diagonalize(g: SymMatrix, gtilde: SymMatrix) -> PairDiagonalization:
    """Simultaneously diagonalize the pair of quadratic forms (g, gtilde).

    g must be positive definite.  The solve goes through the symmetric
    operator W = g^{-1/2} gtilde g^{-1/2} rather than the (generally
    unsymmetric, possibly defective) product g^-1 gtilde.  Returned beta
    satisfies beta^T g beta = 1 and beta^T gtilde beta = diag(lambdas).
    """
    if g.dim != gtilde.dim:
        raise DimensionMismatch(f"dims differ: {g.dim} vs {gtilde.dim}")
    if not is_positive_definite(g):
        raise NotPositiveDefinite("metric g is not positive definite")

    g_inv_half = matrix_power(g, -0.5)
    w = SymMatrix(g_inv_half.entries @ gtilde.entries @ g_inv_half.entries)
    lambdas, eta = np.linalg.eigh(w.entries)
    beta = g_inv_half.entries @ eta

    groups = _group_degenerate(lambdas)
    for grp in groups:
        if len(grp) == 1:
            continue
        # Deterministic order inside a degenerate subspace: by the position
        # of the first significant component, then re-orthonormalize in g.
        cols = [beta[:, i] for i in grp]
        scale = max(np.abs(np.column_stack(cols)).max(), 1e-300)
        cols.sort(key=lambda c: int(np.argmax(np.abs(c) > 1e-8 * scale)))
        cols = gram_schmidt_metric(cols, g)
        for i, c in zip(grp, cols):
            beta[:, i] = c

    beta = _fix_column_signs(beta)
    mult = np.array([len(grp) for grp in groups], dtype=int)
    return PairDiagonalization(beta=beta, lambdas=lambdas, multiplicities=mult)
