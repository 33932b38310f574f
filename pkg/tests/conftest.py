from pathlib import Path

import numpy as np
import pytest

from vibrot import molecule as mo
from vibrot import normalmodes as nm
from vibrot.quadform import SymMatrix

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_spd(rng, n, cond=100.0):
    """Random symmetric positive definite matrix with bounded conditioning."""
    q, _ = np.linalg.qr(rng.normal(size=(n, n)))
    vals = np.exp(rng.uniform(0.0, np.log(cond), size=n))
    return SymMatrix((q * vals) @ q.T)


def two_mass_system(m=1.0, k=1.0):
    """The two-mass/three-spring fixture: returns (g, force_field)."""
    g = SymMatrix.diagonal([1.0 / m, 1.0 / m])
    f = nm.ForceField(f=SymMatrix([[2.0 * k, -k], [-k, 2.0 * k]]))
    return g, f


def water_molecule():
    return mo.Molecule.from_lists(
        ["O", "H", "H"],
        [15.999, 1.008, 1.008],
        [
            [0.0, 0.000000, 0.117176],
            [0.0, 0.757200, -0.468706],
            [0.0, -0.757200, -0.468706],
        ],
    )


def water_pipeline():
    """Full GF pipeline on the bent triatomic; returns (mol, b, masses, g, result)."""
    mol = water_molecule()
    ics = mo.InternalCoordinateSet(
        (mo.BondStretch(0, 1), mo.BondStretch(0, 2), mo.AngleBend(1, 0, 2))
    )
    b = mo.build_b_matrix(mol, ics)
    masses = mo.MassMatrix.from_molecule(mol)
    g = mo.build_g_matrix(b, masses)
    f = nm.ForceField(
        f=SymMatrix(
            [[8.45, -0.10, 0.25], [-0.10, 8.45, 0.25], [0.25, 0.25, 0.70]]
        )
    )
    result = nm.solve(g, f, b=b, masses=masses)
    return mol, b, masses, g, result


@pytest.fixture(scope="session")
def water():
    return water_pipeline()
