"""Coriolis and Watson-Hamiltonian diagnostics.

Everything here is c-number data attached to a set of mass-weighted
Cartesian mode vectors l (shape 3N x n_vib, orthonormal columns): zeta
constants, inertia-derivative coefficients, the Watson sum rules, the
I0 / I'' / I' / mu tensor family and the U pseudo-potential.

Levi-Civita contractions run over three axes only and are written as
direct loops; the matching test oracles use an independent
permutation-sum implementation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import constants
from .molecule import Molecule, center_of_mass_shift, _inertia_tensor
from .quadform import DimensionMismatch

ORTHONORMAL_TOL = 1e-8
SINGULAR_TOL = 1e-12

# eps[a, b, c] = sign of the permutation (a, b, c)
_EPS = np.zeros((3, 3, 3))
for _a, _b, _c in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
    _EPS[_a, _b, _c] = 1.0
    _EPS[_a, _c, _b] = -1.0


class WatsonError(ValueError):
    pass


def _maxabs(arr: np.ndarray) -> float:
    return float(np.abs(arr).max()) if arr.size else 0.0


class NonOrthonormalL(WatsonError):
    """The supplied l matrix does not have orthonormal columns."""


class SingularInertia(WatsonError):
    """I''(Q) is not invertible at the requested normal coordinates."""


@dataclass(frozen=True, eq=False)
class CoriolisData:
    """Coriolis zeta constants and, optionally, inertia derivatives.

    zeta[alpha, k, l] is antisymmetric in (k, l) by construction;
    a_coeff[k, alpha, beta] is symmetric in (alpha, beta).
    """

    zeta: np.ndarray
    a_coeff: Optional[np.ndarray] = None

    @property
    def n_modes(self) -> int:
        return self.zeta.shape[1]

    def tau(self, q) -> np.ndarray:
        """tau[alpha, s] = sum_k zeta[alpha, k, s] Q_k at normal coordinates q."""
        q = np.asarray(q, dtype=float)
        if q.size != self.n_modes:
            raise DimensionMismatch(f"expected {self.n_modes} normal coordinates")
        return np.einsum("aks,k->as", self.zeta, q)


@dataclass(frozen=True, eq=False)
class InertiaExpansion:
    """Normal-coordinate expansion of the effective inertia tensors.

    i_dprime(Q) = I0 + (1/2) sum_k a_k Q_k is linear in Q;
    i_prime(Q) = I'' (I0)^-1 I'' and mu(Q) = i_prime(Q)^-1.
    """

    i0: np.ndarray
    a_coeff: np.ndarray

    def i_dprime(self, q) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        if q.size != self.a_coeff.shape[0]:
            raise DimensionMismatch(
                f"expected {self.a_coeff.shape[0]} normal coordinates"
            )
        return self.i0 + 0.5 * np.einsum("kab,k->ab", self.a_coeff, q)

    def i_prime(self, q) -> np.ndarray:
        idp = self.i_dprime(q)
        return idp @ np.linalg.solve(self.i0, idp)

    def mu(self, q) -> np.ndarray:
        idp = self.i_dprime(q)
        scale = max(np.abs(idp).max(), 1e-300)
        if abs(np.linalg.det(idp)) <= SINGULAR_TOL * scale**3:
            raise SingularInertia("I''(Q) is singular")
        idp_inv = np.linalg.inv(idp)
        return idp_inv @ self.i0 @ idp_inv


@dataclass(frozen=True)
class SumRuleResiduals:
    """Max-abs deviations of the three Watson sum rules.

    rule3 follows the printed index pattern literally, which is known to be
    ambiguous; it is reported, not certified.
    """

    rule1: float
    rule2: float
    rule3: float


@dataclass(frozen=True, eq=False)
class EckartResiduals:
    """Per-mode deviations from the Eckart frame conditions."""

    translational: np.ndarray  # |sum_i sqrt(m_i) l_ik| per mode
    rotational: np.ndarray     # max over axis pairs per mode

    @property
    def max_translational(self) -> float:
        return float(self.translational.max())

    @property
    def max_rotational(self) -> float:
        return float(self.rotational.max())


def _shaped_l(mol: Molecule, l: np.ndarray) -> np.ndarray:
    l = np.asarray(l, dtype=float)
    if mol.dimensionality != 3:
        raise WatsonError("Watson diagnostics require a 3-dimensional molecule")
    if l.ndim != 2 or l.shape[0] != 3 * mol.natoms:
        raise DimensionMismatch(
            f"l must be (3N, n_vib) with N = {mol.natoms}, got {l.shape}"
        )
    return l.reshape(mol.natoms, 3, l.shape[1])


def coriolis_constants(l: np.ndarray) -> CoriolisData:
    """Zeta constants from an orthonormal l matrix (3N x n_vib).

    zeta[alpha, k, l] = sum_i (l_ik x l_il)_alpha; the diagonal vanishes
    and the (k, l) antisymmetry is exact by construction.
    """
    l = np.asarray(l, dtype=float)
    if l.ndim != 2 or l.shape[0] % 3:
        raise DimensionMismatch("l must be (3N, n_vib)")
    gram = l.T @ l
    if _maxabs(gram - np.eye(l.shape[1])) > ORTHONORMAL_TOL:
        raise NonOrthonormalL("l columns are not orthonormal")
    natoms = l.shape[0] // 3
    n = l.shape[1]
    shaped = l.reshape(natoms, 3, n)
    zeta = np.zeros((3, n, n))
    for k in range(n):
        for m in range(k + 1, n):
            c = np.cross(shaped[:, :, k], shaped[:, :, m]).sum(axis=0)
            zeta[:, k, m] = c
            zeta[:, m, k] = -c
    return CoriolisData(zeta=zeta)


def interaction_coefficients(mol: Molecule, l: np.ndarray) -> np.ndarray:
    """Derivatives a[k, alpha, beta] = (dI_alpha_beta / dQ_k) at equilibrium.

    Geometry is taken relative to the center of mass.  The double
    Levi-Civita contraction of the inertia expansion is evaluated axis by
    axis; the result is symmetric in (alpha, beta).
    """
    shaped = _shaped_l(mol, l)
    pos = mol.positions - mol.center_of_mass()
    sqm = np.sqrt(mol.masses)
    n = shaped.shape[2]
    a = np.zeros((n, 3, 3))
    for alpha in range(3):
        for beta in range(3):
            for gamma in range(3):
                for delta in range(3):
                    for eta in range(3):
                        e = _EPS[alpha, gamma, delta] * _EPS[beta, eta, delta]
                        if e == 0.0:
                            continue
                        # r0_gamma l_eta + r0_eta l_gamma, mass-weighted
                        contrib = sqm[:, None] * (
                            pos[:, gamma, None] * shaped[:, eta, :]
                            + pos[:, eta, None] * shaped[:, gamma, :]
                        )
                        a[:, alpha, beta] += e * contrib.sum(axis=0)
    return a


def coriolis_data(mol: Molecule, l: np.ndarray) -> CoriolisData:
    """CoriolisData with both zeta constants and interaction coefficients."""
    zeta = coriolis_constants(l).zeta
    return CoriolisData(zeta=zeta, a_coeff=interaction_coefficients(mol, l))


def inertia_expansion(mol: Molecule, l: np.ndarray) -> InertiaExpansion:
    """I0 about the COM plus the linear inertia derivatives for the modes."""
    shifted = center_of_mass_shift(mol)
    i0 = _inertia_tensor(shifted.masses, shifted.positions)
    return InertiaExpansion(i0=i0, a_coeff=interaction_coefficients(mol, l))


def watson_u(ie: InertiaExpansion, q, unit_mode: str = "cm") -> float:
    """Watson pseudo-potential U = -(hbar^2 / 8) Tr mu(Q).

    natural: hbar = 1, inertia in amu Angstrom^2 as given.
    cm: wavenumbers for inertia in amu Angstrom^2.
    """
    trace_mu = float(np.trace(ie.mu(q)))
    if unit_mode == "natural":
        return -trace_mu / 8.0
    if unit_mode in ("cm", "spectroscopic"):
        # hbar^2 / (8 h c) = (1/4) h / (8 pi^2 c)
        return -(constants.ROTATIONAL_CM / 4.0) * trace_mu
    raise ValueError(f"unknown unit mode {unit_mode!r}")


def _inertia_pinv(i0: np.ndarray) -> np.ndarray:
    """Inverse of I0 on its nonsingular principal subspace."""
    vals, vecs = np.linalg.eigh(i0)
    keep = vals > SINGULAR_TOL * max(vals.max(), 1e-300)
    inv = np.zeros_like(vals)
    inv[keep] = 1.0 / vals[keep]
    return (vecs * inv) @ vecs.T


def _second_moment(mol_shifted: Molecule) -> np.ndarray:
    pos = mol_shifted.positions
    return np.einsum("i,ia,ib->ab", mol_shifted.masses, pos, pos)


def sum_rule_residuals(
    cd: CoriolisData, mol: Molecule, l: np.ndarray
) -> SumRuleResiduals:
    """Evaluate both sides of the Watson sum rules and report deviations.

    Rules 1 and 2 are exact identities for modes that satisfy the Eckart
    conditions and drop below 1e-8 there.  Rule 3 is evaluated with the
    most literal reading of its (inconsistent) printed indices and can be
    large even on exact inputs.
    """
    shaped = _shaped_l(mol, l)
    if cd.zeta.shape[1] != shaped.shape[2]:
        raise DimensionMismatch("CoriolisData and l disagree on the mode count")
    a = cd.a_coeff if cd.a_coeff is not None else interaction_coefficients(mol, l)
    zeta = cd.zeta
    n = shaped.shape[2]

    shifted = center_of_mass_shift(mol)
    i0 = _inertia_tensor(shifted.masses, shifted.positions)
    i0_inv = _inertia_pinv(i0)
    kmat = _second_moment(shifted)

    # rule 1: sum_n zeta[a,k,n] zeta[b,l,n]
    #         = d_ab d_kl - sum_i l[b,i,k] l[a,i,l] - (1/4) a_k (I0)^-1 a_l
    lhs1 = np.einsum("akn,bln->abkl", zeta, zeta)
    rhs1 = np.einsum("ab,kl->abkl", np.eye(3), np.eye(n))
    rhs1 -= np.einsum("ibk,ial->abkl", shaped, shaped)
    rhs1 -= 0.25 * np.einsum("kag,gd,ldb->abkl", a, i0_inv, a)
    rule1 = _maxabs(lhs1 - rhs1)

    # rule 2: sum_k a[k,ab] a[k,gd] against the pure-geometry expression
    lhs2 = np.einsum("kab,kgd->abgd", a, a)
    masses = shifted.masses
    pos = shifted.positions
    r2 = float(np.einsum("i,ia,ia->", masses, pos, pos))
    eye = np.eye(3)
    direct = (
        4.0 * r2 * np.einsum("ab,gd->abgd", eye, eye)
        - 4.0 * np.einsum("ab,gd->abgd", eye, kmat)
        - 4.0 * np.einsum("gd,ab->abgd", eye, kmat)
        + np.einsum("bd,ag->abgd", eye, kmat)
        + np.einsum("bg,ad->abgd", eye, kmat)
        + np.einsum("ad,bg->abgd", eye, kmat)
        + np.einsum("ag,bd->abgd", eye, kmat)
    )
    # w[ab, p] = sum_g eps[p,g,b] K[g,a] + eps[p,g,a] K[g,b]
    w = np.einsum("pgb,ga->abp", _EPS, kmat) + np.einsum("pga,gb->abp", _EPS, kmat)
    rot = np.einsum("abp,pq,gdq->abgd", w, i0_inv, w)
    rule2 = _maxabs(lhs2 - direct + rot)

    # rule 3, literal reading of the printed indices (reported only)
    lhs3 = np.einsum("akl,lbg->abgk", zeta, a)
    tr_a = np.einsum("kee->k", a)
    rhs3 = 0.5 * np.einsum("abg,k->abgk", _EPS, tr_a)
    rhs3 -= np.einsum("abe,keg->abgk", _EPS, a)
    geom = np.einsum("bde,dg,eg->bg", _EPS, kmat, i0_inv)
    rhs3 -= np.einsum("bg,ka->abgk", geom, np.einsum("kxa->ka", a))
    rule3 = _maxabs(lhs3 - rhs3)
    return SumRuleResiduals(rule1=rule1, rule2=rule2, rule3=rule3)


def eckart_conditions_check(mol: Molecule, l: np.ndarray) -> EckartResiduals:
    """Residuals of the translational and rotational Eckart conditions.

    translational[k] = |sum_i sqrt(m_i) l_ik|;
    rotational[k] = max over axis pairs of
    |sum_i sqrt(m_i) (r0_ia l_bik - r0_ib l_aik)|.
    """
    shaped = _shaped_l(mol, l)
    shifted = center_of_mass_shift(mol)
    pos = shifted.positions
    sqm = np.sqrt(mol.masses)
    trans_vec = np.einsum("i,iak->ak", sqm, shaped)
    translational = np.linalg.norm(trans_vec, axis=0)
    s = np.einsum("i,ia,ibk->abk", sqm, pos, shaped)
    rotational = np.abs(s - s.transpose(1, 0, 2)).max(axis=(0, 1))
    return EckartResiduals(translational=translational, rotational=rotational)
