"""Mutual-impedance synthesis for dipole arrays and SPD matrix utilities.

The array is a uniform planar grid of thin-wire dipoles parallel to the y
axis.  Off-diagonal impedance entries come from the classical induced-EMF
double integral with a sinusoidal current profile, evaluated by tensor
Gauss-Legendre quadrature; diagonal entries are the configured element
self-impedance (the elements are assumed matched, so their self-impedance is
set rather than computed).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .core import Representation
from .errors import (
    GeometryError,
    NotPositiveDefinite,
    PassivityError,
    QuadratureError,
    SingularSystem,
)

SPEED_OF_LIGHT = 299792458.0
#: Free-space wave impedance in ohms, kept to six significant digits.
ETA0 = 376.730

#: Default Gauss-Legendre nodes per integration axis.
DEFAULT_QUAD_NODES = 32

#: Condition number above which complex matrix inversion is refused.
COND_LIMIT = 1e14

#: Relative eigenvalue floor below which a matrix is not treated as SPD.
SPD_EIG_FLOOR = 1e-12

#: Relative tolerance on the smallest eigenvalue for the passivity check.
PASSIVITY_TOL = 1e-9


@dataclass(frozen=True)
class DipoleArrayGeometry:
    """Uniform planar array of y-oriented thin-wire dipoles.

    Element ``n`` sits at ``x = (n mod n_x) * spacing`` and
    ``y = (n // n_x) * spacing`` (row-major, x fastest), so tridiagonal
    chains run along rows and wrap to the next row.

    Parameters
    ----------
    n_x, n_y : int
        Grid dimensions; the array has ``n_x * n_y`` elements.
    spacing : float
        Inter-element distance in meters.
    dipole_length : float
        Wire length in meters.
    wire_radius : float
        Wire radius in meters; must be small against the length.
    frequency : float
        Operating frequency in Hz.
    """

    n_x: int
    n_y: int
    spacing: float
    dipole_length: float
    wire_radius: float
    frequency: float

    def __post_init__(self):
        if self.n_x < 1 or self.n_y < 1:
            raise GeometryError(f"grid dimensions must be >= 1, got {self.n_x} x {self.n_y}")
        if not (self.spacing > 0 and np.isfinite(self.spacing)):
            raise GeometryError(f"spacing must be positive, got {self.spacing!r}")
        if not (self.frequency > 0 and np.isfinite(self.frequency)):
            raise GeometryError(f"frequency must be positive, got {self.frequency!r}")
        if not (0 < self.wire_radius <= self.dipole_length / 10):
            raise GeometryError(
                "wire radius must satisfy 0 < radius <= dipole_length / 10, "
                f"got radius={self.wire_radius!r}, length={self.dipole_length!r}"
            )
        if not (self.dipole_length < self.wavelength):
            raise GeometryError(
                f"dipole length {self.dipole_length!r} must be below one wavelength "
                f"({self.wavelength!r})"
            )

    @classmethod
    def upa(cls, n, spacing_wl, n_x=8, frequency=28e9,
            dipole_length_wl=0.25, wire_radius_wl=0.002):
        """Build an ``n``-element grid from wavelength-relative dimensions.

        ``n_x`` is clipped to ``n`` for small arrays; ``n`` must then be an
        integer multiple of the column count.
        """
        n_x = min(int(n_x), int(n))
        if n % n_x:
            raise GeometryError(f"element count {n} is not divisible by n_x={n_x}")
        wavelength = SPEED_OF_LIGHT / frequency
        return cls(
            n_x=n_x,
            n_y=n // n_x,
            spacing=spacing_wl * wavelength,
            dipole_length=dipole_length_wl * wavelength,
            wire_radius=wire_radius_wl * wavelength,
            frequency=frequency,
        )

    @property
    def n(self) -> int:
        return self.n_x * self.n_y

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.frequency

    @property
    def wavenumber(self) -> float:
        return 2.0 * np.pi / self.wavelength

    def position(self, index):
        """Center (x, y) of element ``index`` in meters."""
        if not 0 <= index < self.n:
            raise GeometryError(f"element index {index} outside 0..{self.n - 1}")
        return (index % self.n_x) * self.spacing, (index // self.n_x) * self.spacing

    @property
    def positions(self) -> np.ndarray:
        idx = np.arange(self.n)
        return np.column_stack([(idx % self.n_x), (idx // self.n_x)]) * self.spacing


def _field_kernel(dx, sep, reg, k0):
    """Near/far-field kernel of the induced-EMF integrand at axial offset sep."""
    d = np.sqrt(dx * dx + sep * sep + reg)
    return (
        (sep * sep) / (d * d) * (3.0 / (d * d) + 3j * k0 / d - k0 * k0)
        - (1j * k0 + 1.0 / d) / d
        + k0 * k0
    ) * np.exp(-1j * k0 * d) / d


def _mutual_impedance_offsets(dx, dy, length, radius, k0, nodes):
    """Induced-EMF integral for two parallel dipoles offset by (dx, dy).

    ``dx`` is the separation across the wire axes, ``dy`` along them.  The
    double integral is evaluated in rotated coordinates: the outer variable is
    the axial separation ``s = v - u`` and the inner integral collects the
    sinusoidal current correlation over the matching strip.  Panels split at
    every derivative kink (the dipole centers and the strip corners), so each
    piece is analytic and Gauss-Legendre converges spectrally.

    For collinear pairs (dx = 0) the kernel distance is regularized with the
    wire radius, the standard thin-wire convention; the kernel then peaks at
    ``s = -dy`` with width of order the radius, which is resolved by panels
    graded geometrically around the peak.  This keeps the integral accurate
    even when the wire segments of neighbouring elements overlap (spacing
    below the dipole length).
    """
    if nodes < 4 or nodes % 2:
        raise ValueError(f"nodes per axis must be an even number >= 4, got {nodes}")
    half_nodes = nodes // 2
    gx, gw = np.polynomial.legendre.leggauss(half_nodes)

    a = 0.5 * length
    reg = radius * radius if dx == 0.0 else 0.0

    bounds = {-2.0 * a, -a, 0.0, a, 2.0 * a}
    if dx == 0.0:
        peak = min(2.0 * a, max(-2.0 * a, -dy))
        bounds.add(peak)
        step = radius
        while step < 4.0 * a:
            for edge in (peak - step, peak + step):
                if -2.0 * a < edge < 2.0 * a:
                    bounds.add(edge)
            step *= 4.0
    bounds = sorted(bounds)

    total = 0.0 + 0.0j
    for lo, hi in zip(bounds, bounds[1:]):
        if hi <= lo:
            continue
        s = 0.5 * (hi + lo) + 0.5 * (hi - lo) * gx
        ws = 0.5 * (hi - lo) * gw

        # current-correlation strip: u in [ulo, uhi], kinks at u = 0 and u = -s
        ulo = np.maximum(-a, -a - s)
        uhi = np.minimum(a, a - s)
        kink_lo = np.clip(np.minimum(-s, 0.0), ulo, uhi)
        kink_hi = np.clip(np.maximum(-s, 0.0), kink_lo, uhi)
        correlation = np.zeros_like(s)
        for plo, phi in ((ulo, kink_lo), (kink_lo, kink_hi), (kink_hi, uhi)):
            mid, span = 0.5 * (phi + plo), 0.5 * (phi - plo)
            u = mid[:, None] + span[:, None] * gx[None, :]
            wu = span[:, None] * gw[None, :]
            correlation += np.sum(
                wu * np.sin(k0 * (a - np.abs(u))) * np.sin(k0 * (a - np.abs(u + s[:, None]))),
                axis=1,
            )
        total += np.sum(ws * correlation * _field_kernel(dx, s + dy, reg, k0))

    amp = 1j * ETA0 / (4.0 * np.pi * k0) / np.sin(k0 * a) ** 2
    return amp * total


def mutual_impedance(geom, p, q, nodes=DEFAULT_QUAD_NODES, rtol=None):
    """Mutual impedance in ohms between grid elements ``p`` and ``q``.

    Parameters
    ----------
    geom : DipoleArrayGeometry
    p, q : int
        Distinct element indices.
    nodes : int
        Gauss-Legendre nodes per axis (even).
    rtol : float, optional
        When given, the integral is recomputed with twice the nodes and a
        relative disagreement above ``rtol`` raises :class:`QuadratureError`
        carrying the refined estimate and the achieved error bound.
    """
    if p == q:
        raise GeometryError(f"mutual impedance needs two distinct elements, got p = q = {p}")
    xp, yp = geom.position(p)
    xq, yq = geom.position(q)
    if xp == xq and yp == yq:
        raise GeometryError(f"elements {p} and {q} share the same center ({xp}, {yp})")

    # the integrand is even in both offsets; canonicalizing them makes
    # reciprocity hold bit-exactly
    args = (abs(xq - xp), abs(yq - yp), geom.dipole_length, geom.wire_radius,
            geom.wavenumber)
    value = _mutual_impedance_offsets(*args, nodes)
    if rtol is not None:
        refined = _mutual_impedance_offsets(*args, 2 * nodes)
        err = abs(refined - value)
        if err > rtol * max(abs(refined), np.finfo(float).tiny):
            raise QuadratureError(
                f"quadrature for elements ({p}, {q}) did not converge: "
                f"|delta| = {err:.3e} at {nodes} -> {2 * nodes} nodes",
                estimate=refined,
                error_bound=err,
            )
    return complex(value)


def build_coupling_matrix(geom, self_impedance=50.0 + 0.0j, nodes=DEFAULT_QUAD_NODES,
                          allow_nonpassive=False):
    """Assemble the array impedance matrix for a dipole grid.

    Off-diagonal entries depend only on the absolute grid offset of the pair,
    so each distinct offset is integrated once and the matrix is filled by
    lookup, which also makes it exactly symmetric.  Diagonal entries are set
    to ``self_impedance``.

    Raises
    ------
    PassivityError
        If the real part has an eigenvalue below ``-PASSIVITY_TOL`` times the
        largest one.  With ``allow_nonpassive=True`` the matrix is returned
        anyway (the error object also carries it for inspection).
    """
    self_impedance = complex(self_impedance)
    if not self_impedance.real > 0:
        raise GeometryError(f"self-impedance must have positive real part, got {self_impedance}")

    table = np.empty((geom.n_x, geom.n_y), dtype=complex)
    table[0, 0] = self_impedance
    for dc in range(geom.n_x):
        for dr in range(geom.n_y):
            if dc == 0 and dr == 0:
                continue
            table[dc, dr] = _mutual_impedance_offsets(
                dc * geom.spacing, dr * geom.spacing,
                geom.dipole_length, geom.wire_radius, geom.wavenumber, nodes,
            )

    idx = np.arange(geom.n)
    cols = idx % geom.n_x
    rows = idx // geom.n_x
    values = table[np.abs(cols[:, None] - cols[None, :]), np.abs(rows[:, None] - rows[None, :])]

    matrix = CouplingMatrix(values, Representation.IMPEDANCE)
    lam = np.linalg.eigvalsh(matrix.re)
    if lam[0] < -PASSIVITY_TOL * max(lam[-1], np.finfo(float).tiny):
        err = PassivityError(
            f"real part of the coupling matrix is not PSD: lambda_min = {lam[0]:.6e}, "
            f"lambda_max = {lam[-1]:.6e} (spacing {geom.spacing:.4e} m)",
            matrix=matrix, lambda_min=float(lam[0]), lambda_max=float(lam[-1]),
        )
        if not allow_nonpassive:
            raise err
    return matrix


def spd_inv_sqrt(m):
    """Inverse square root and inverse of a symmetric positive definite matrix.

    Returns ``(m^{-1/2}, m^{-1}, lambda_min, lambda_max)`` computed through a
    symmetric eigendecomposition; both returned matrices are symmetric.

    Raises :class:`NotPositiveDefinite` when the smallest eigenvalue is not
    safely positive relative to the largest.
    """
    m = np.asarray(m, dtype=float)
    lam, q = np.linalg.eigh(m)
    lam_min, lam_max = float(lam[0]), float(lam[-1])
    if lam_min <= SPD_EIG_FLOOR * max(lam_max, np.finfo(float).tiny):
        raise NotPositiveDefinite(
            f"matrix is not positive definite: lambda_min = {lam_min:.6e}, "
            f"lambda_max = {lam_max:.6e}"
        )
    inv_sqrt = (q / np.sqrt(lam)) @ q.T
    inv = (q / lam) @ q.T
    return 0.5 * (inv_sqrt + inv_sqrt.T), 0.5 * (inv + inv.T), lam_min, lam_max


@dataclass(eq=False)
class CouplingMatrix:
    """Complex symmetric array coupling matrix with cached real-part factors.

    ``values`` holds either an impedance matrix (ohms) or an admittance
    matrix (siemens) according to ``representation``.  Reciprocity demands
    symmetry; construction rejects asymmetry beyond round-off and then stores
    an exactly symmetrized copy.  The eigendecomposition of the real part and
    the derived ``Re^{-1/2}``, ``Re^{1/2}``, ``Re^{-1}`` factors are computed
    lazily, once.
    """

    values: np.ndarray
    representation: Representation = Representation.IMPEDANCE

    #: Relative max-norm tolerance for the reciprocity (symmetry) check.
    SYMMETRY_TOL = 1e-12

    def __post_init__(self):
        values = np.asarray(self.values, dtype=complex)
        if values.ndim != 2 or values.shape[0] != values.shape[1]:
            raise ValueError(f"coupling matrix must be square, got shape {values.shape}")
        if not np.all(np.isfinite(values.view(float))):
            raise ValueError("coupling matrix has non-finite entries")
        scale = np.abs(values).max()
        if scale > 0 and np.abs(values - values.T).max() > self.SYMMETRY_TOL * scale:
            raise ValueError("coupling matrix is not symmetric (reciprocity violated)")
        self.values = 0.5 * (values + values.T)
        self.values.setflags(write=False)

    @classmethod
    def no_coupling(cls, n, self_impedance=50.0, representation=Representation.IMPEDANCE):
        """Scaled identity matrix: equal self-impedances, no mutual terms."""
        return cls(complex(self_impedance) * np.eye(int(n)), representation)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def re(self) -> np.ndarray:
        return self.values.real

    @property
    def im(self) -> np.ndarray:
        return self.values.imag

    @cached_property
    def _re_eig(self):
        lam, q = np.linalg.eigh(self.re)
        return lam, q

    @property
    def lambda_min(self) -> float:
        return float(self._re_eig[0][0])

    @property
    def lambda_max(self) -> float:
        return float(self._re_eig[0][-1])

    @cached_property
    def _re_factors(self):
        lam, q = self._re_eig
        if lam[0] <= SPD_EIG_FLOOR * max(lam[-1], np.finfo(float).tiny):
            raise NotPositiveDefinite(
                f"real part of the {self.representation.value} coupling matrix is not "
                f"positive definite: lambda_min = {lam[0]:.6e}, lambda_max = {lam[-1]:.6e}"
            )
        root = np.sqrt(lam)
        inv_sqrt = (q / root) @ q.T
        sqrt = (q * root) @ q.T
        inv = (q / lam) @ q.T
        return (
            0.5 * (inv_sqrt + inv_sqrt.T),
            0.5 * (sqrt + sqrt.T),
            0.5 * (inv + inv.T),
        )

    @property
    def re_inv_sqrt(self) -> np.ndarray:
        """Re{M}^(-1/2); raises NotPositiveDefinite if Re{M} is not SPD."""
        return self._re_factors[0]

    @property
    def re_sqrt(self) -> np.ndarray:
        return self._re_factors[1]

    @property
    def re_inv(self) -> np.ndarray:
        return self._re_factors[2]

    @cached_property
    def complex_inverse(self) -> np.ndarray:
        """Inverse of the full complex matrix (checked for conditioning)."""
        cond = np.linalg.cond(self.values)
        if not np.isfinite(cond) or cond > COND_LIMIT:
            raise SingularSystem(
                f"{self.representation.value} coupling matrix is numerically singular "
                f"(cond = {cond:.3e})"
            )
        inv = np.linalg.inv(self.values)
        if not np.all(np.isfinite(inv.view(float))):
            raise SingularSystem(
                f"inverting the {self.representation.value} coupling matrix overflowed"
            )
        return 0.5 * (inv + inv.T)

    @cached_property
    def converted(self) -> "CouplingMatrix":
        """The same network in the other representation (matrix inverse)."""
        other = (
            Representation.ADMITTANCE
            if self.representation is Representation.IMPEDANCE
            else Representation.IMPEDANCE
        )
        return CouplingMatrix(self.complex_inverse, other)

    def to_admittance(self) -> "CouplingMatrix":
        if self.representation is Representation.ADMITTANCE:
            return self
        return self.converted
