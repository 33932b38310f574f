"""GF-problem solver: eigenvalues, L and l matrices, Cartesian mode shapes.

The vibrational secular problem is solved as a simultaneous diagonalization
of the kinetic metric G^-1 and the force-constant form F (never by
eigendecomposing the unsymmetric product GF).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import constants, quadform
from .molecule import BMatrix, MassMatrix, Molecule
from .quadform import DimensionMismatch, NotPositiveDefinite, SymMatrix

LAMBDA_CLAMP = 1e-10
IMAGINARY_REPORT = 1e-6


@dataclass(frozen=True, eq=False)
class ForceField:
    """Harmonic force constants over internal coordinates, optional cubic block.

    Units are aJ/Angstrom^2 for stretch-stretch blocks, aJ/rad^2 for bends
    and aJ/(Angstrom rad) for cross terms.  The cubic tensor is stored for
    downstream consumers but takes no part in the harmonic solve.
    """

    f: SymMatrix
    cubic: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.cubic is not None:
            c = np.array(self.cubic, dtype=float)
            n = self.f.dim
            if c.shape != (n, n, n):
                raise DimensionMismatch(
                    f"cubic block must be {(n, n, n)}, got {c.shape}"
                )
            c.flags.writeable = False
            object.__setattr__(self, "cubic", c)

    @property
    def dim(self) -> int:
        return self.f.dim


@dataclass(frozen=True, eq=False)
class NormalModeResult:
    """Eigenvalues and transformations of one harmonic solve.

    lambdas ascend; S = L Q with L^T G^-1 L = 1; l maps mass-weighted
    Cartesian displacements to normal coordinates and is orthogonal.
    l and cart_displacements are only present when the solve was given the
    B matrix and masses needed for the Cartesian back-transformation.
    """

    lambdas: np.ndarray
    frequencies_cm: np.ndarray
    L: np.ndarray
    l: Optional[np.ndarray] = None
    cart_displacements: Optional[np.ndarray] = None

    @property
    def nmodes(self) -> int:
        return self.lambdas.size


def frequencies_cm(lambdas, unit_mode: str = "spectroscopic") -> np.ndarray:
    """Harmonic frequencies from eigenvalues of the GF problem.

    natural: sqrt(lambda) as-is.  spectroscopic: wavenumbers for lambdas in
    aJ Angstrom^-2 amu^-1.  Eigenvalues below -1e-6 mark a saddle point and
    come back with the negative-wavenumber convention; tiny negatives are
    numerical noise and clamp to zero.
    """
    lam = np.array(lambdas, dtype=float)
    lam[np.abs(lam) < LAMBDA_CLAMP] = 0.0
    if unit_mode == "natural":
        factor = 1.0
    elif unit_mode in ("spectroscopic", "cm"):
        factor = constants.WAVENUMBER_CM
    else:
        raise ValueError(f"unknown unit mode {unit_mode!r}")
    return factor * np.sign(lam) * np.sqrt(np.abs(lam))


def solve(
    g: SymMatrix,
    f: ForceField,
    *,
    b: Optional[BMatrix] = None,
    masses: Optional[MassMatrix] = None,
    unit_mode: str = "spectroscopic",
) -> NormalModeResult:
    """Solve the vibrational problem for kinetic matrix G and force field F.

    Passing the B matrix and masses additionally fills the l matrix and the
    per-mode Cartesian displacement vectors.
    """
    if g.dim != f.dim:
        raise DimensionMismatch(f"G is {g.dim}-dim but F is {f.dim}-dim")
    if not quadform.is_positive_definite(g):
        raise NotPositiveDefinite("G matrix is not positive definite")
    g_inv = quadform.matrix_power(g, -1.0)
    pair = quadform.simultaneous_diagonalize(g_inv, f.f)
    result = NormalModeResult(
        lambdas=pair.lambdas,
        frequencies_cm=frequencies_cm(pair.lambdas, unit_mode),
        L=pair.beta,
    )
    if b is not None and masses is not None:
        l = _l_matrix(result.L, g_inv, b, masses)
        cart = l / np.sqrt(masses.diagonal)[:, None]
        return NormalModeResult(
            lambdas=result.lambdas,
            frequencies_cm=result.frequencies_cm,
            L=result.L,
            l=l,
            cart_displacements=cart,
        )
    return result


def _l_matrix(L, g_inv, b: BMatrix, masses: MassMatrix) -> np.ndarray:
    # l = M^{-1/2} B^T G^{-1} L; orthogonality follows from L^T G^-1 L = 1.
    return (b.rows.T @ g_inv.entries @ L) / np.sqrt(masses.diagonal)[:, None]


def cartesian_displacements(
    res: NormalModeResult, b: BMatrix, masses: MassMatrix
) -> np.ndarray:
    """Per-mode Cartesian displacement vectors (ncart x nmodes).

    Column s is the Cartesian image of the unit normal-coordinate basis
    vector Q_s; applying B to it recovers column s of L.
    """
    if b.count != res.nmodes:
        raise DimensionMismatch(
            f"B has {b.count} rows but result carries {res.nmodes} modes"
        )
    if b.ncart != masses.diagonal.size:
        raise DimensionMismatch("B columns and mass diagonal disagree")
    g = SymMatrix((b.rows / masses.diagonal) @ b.rows.T)
    g_inv = quadform.matrix_power(g, -1.0)
    l = _l_matrix(res.L, g_inv, b, masses)
    return l / np.sqrt(masses.diagonal)[:, None]


def mode_animation(
    mol: Molecule, mode: np.ndarray, amplitude: float, frames: int
) -> list:
    """Geometries sampling one period of a mode at the given amplitude.

    Frame t displaces the equilibrium geometry by
    amplitude * sin(2 pi t / frames) * mode; frame 0 is the equilibrium.
    """
    if frames < 2:
        raise ValueError("at least 2 frames required")
    if not amplitude > 0:
        raise ValueError("amplitude must be positive")
    mode = np.asarray(mode, dtype=float)
    if mode.size != mol.ncart:
        raise DimensionMismatch(
            f"mode vector has {mode.size} entries, expected {mol.ncart}"
        )
    d = mol.dimensionality
    shaped = mode.reshape(mol.natoms, d)
    eq = mol.positions
    out = []
    for t in range(frames):
        geom = eq.copy()
        geom[:, :d] += amplitude * math.sin(2.0 * math.pi * t / frames) * shaped
        out.append(geom)
    return out
