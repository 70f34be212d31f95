import numpy as np
import pytest

from coupled_ris import (
    ChannelTriple,
    CouplingMatrix,
    DipoleArrayGeometry,
    ReferenceImpedance,
    build_coupling_matrix,
)

Z0 = ReferenceImpedance(50.0)

#: Path gain of the default experiment setup: 4 Z0^2 1e-8.
RHO = 4.0 * 50.0**2 * 1e-8


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


def random_spd(rng, n, scale=50.0):
    """Random SPD matrix with constant diagonal equal to ``scale``."""
    a = rng.standard_normal((n, n))
    m = a @ a.T + n * np.eye(n)
    d = np.sqrt(np.diag(m))
    return scale * (m / np.outer(d, d))


def random_coupling(rng, n, scale=50.0):
    """Random impedance coupling: SPD real part, symmetric imaginary part."""
    im = rng.standard_normal((n, n)) * 0.2 * scale
    return CouplingMatrix(random_spd(rng, n, scale) + 0.5j * (im + im.T))


def random_channels(rng, n, rho=1.0, direct=True):
    scale = np.sqrt(rho / 2.0)
    draw = lambda: scale * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
    z_rt = complex(rng.standard_normal() + 1j * rng.standard_normal()) if direct else 0.0
    return ChannelTriple(z_rt, draw(), draw())


def random_symmetric(rng, n, scale=1.0):
    m = rng.standard_normal((n, n)) * scale
    return 0.5 * (m + m.T)


_DIPOLE_CACHE = {}


def dipole_coupling(n, spacing_wl, n_x=None):
    """Session-cached dipole coupling matrix (default experiment geometry)."""
    key = (n, round(spacing_wl, 9), n_x)
    if key not in _DIPOLE_CACHE:
        geom = DipoleArrayGeometry.upa(n, spacing_wl, n_x=n_x or min(8, n))
        _DIPOLE_CACHE[key] = build_coupling_matrix(geom)
    return _DIPOLE_CACHE[key]
