"""Multiport channel algebra for RIS-aided single-antenna links.

The end-to-end channel of a transmitter / RIS / receiver network is expressed
in impedance parameters as

    h = (z_rt - z_ri (jX + Z_II)^(-1) z_it) / (2 Z0)

and equivalently in admittance parameters as

    h = (-y_rt + y_ri (jB + Y_II)^(-1) y_it) / (2 Y0),

under the unilateral approximation (no feedback transmission terms) and
perfect matching at the two ends.  This module carries both models, the
conversion between them, the coupling-absorbing ("barred") change of
variables, the mapping to scattering quantities, and the Cayley transform
pair that connects real symmetric load matrices to unitary symmetric
scattering matrices.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import LoadKind, ReferenceImpedance, Representation
from .coupling import CouplingMatrix
from .errors import CayleyPole, DimensionError, RepresentationError, SingularSystem

#: Condition number above which a channel solve is refused.
COND_LIMIT = 1e14

#: Max-norm tolerance for unitarity of scattering matrices.
UNITARITY_TOL = 1e-10

#: Max-norm tolerance for symmetry of scattering matrices.
THETA_SYMMETRY_TOL = 1e-12

#: Eigenvalue distance to the pole of the inverse Cayley map.
CAYLEY_POLE_TOL = 1e-10


@dataclass(frozen=True)
class ChannelTriple:
    """The three transmission links of the network in one representation.

    ``direct`` is the transmitter-receiver term (z_rt or y_rt), ``ris_to_rx``
    the length-N RIS-to-receiver row vector and ``tx_to_ris`` the length-N
    transmitter-to-RIS column vector; both are stored as 1-D arrays.
    """

    direct: complex
    ris_to_rx: np.ndarray
    tx_to_ris: np.ndarray
    representation: Representation = Representation.IMPEDANCE

    def __post_init__(self):
        rx = np.atleast_1d(np.asarray(self.ris_to_rx, dtype=complex))
        tx = np.atleast_1d(np.asarray(self.tx_to_ris, dtype=complex))
        if rx.ndim != 1 or tx.ndim != 1:
            raise DimensionError("channel vectors must be one-dimensional")
        if rx.size != tx.size or rx.size < 1:
            raise DimensionError(
                f"channel vectors must share a length >= 1, got {rx.size} and {tx.size}"
            )
        direct = complex(self.direct)
        if not (np.isfinite(direct.real) and np.isfinite(direct.imag)
                and np.all(np.isfinite(rx.view(float))) and np.all(np.isfinite(tx.view(float)))):
            raise ValueError("channel entries must be finite")
        rx.setflags(write=False)
        tx.setflags(write=False)
        object.__setattr__(self, "direct", direct)
        object.__setattr__(self, "ris_to_rx", rx)
        object.__setattr__(self, "tx_to_ris", tx)

    @property
    def n(self) -> int:
        return self.ris_to_rx.size


@dataclass(frozen=True)
class LoadMatrix:
    """Real symmetric reactance (ohms) or susceptance (siemens) matrix.

    Only the upper triangle of the input is used; it is mirrored so the
    stored matrix is exactly symmetric and numerical asymmetry can never
    accumulate.
    """

    kind: LoadKind
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2 or values.shape[0] != values.shape[1]:
            raise DimensionError(f"load matrix must be square, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("load matrix has non-finite entries")
        upper = np.triu(values)
        mirrored = upper + np.triu(values, 1).T
        mirrored.setflags(write=False)
        object.__setattr__(self, "values", mirrored)

    @classmethod
    def zeros(cls, kind, n):
        return cls(kind, np.zeros((int(n), int(n))))

    @classmethod
    def from_diagonal(cls, kind, diag):
        return cls(kind, np.diag(np.asarray(diag, dtype=float)))

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def matches_pattern(self, pattern: str) -> bool:
        """True when all entries outside the named sparsity pattern are zero."""
        if pattern == "full":
            return True
        off = np.abs(np.arange(self.n)[:, None] - np.arange(self.n)[None, :])
        if pattern == "diagonal":
            return not np.any(self.values[off > 0])
        if pattern == "tridiagonal":
            return not np.any(self.values[off > 1])
        raise ValueError(f"unknown sparsity pattern {pattern!r}")


@dataclass(frozen=True)
class ScatteringState:
    """Scattering-domain channels and (optionally) the RIS scattering matrix."""

    s_rt: complex
    s_ri: np.ndarray
    s_it: np.ndarray
    theta: np.ndarray | None = None
    representation: Representation = Representation.IMPEDANCE

    def __post_init__(self):
        s_ri = np.atleast_1d(np.asarray(self.s_ri, dtype=complex))
        s_it = np.atleast_1d(np.asarray(self.s_it, dtype=complex))
        if s_ri.size != s_it.size:
            raise DimensionError("scattering channel vectors must share a length")
        object.__setattr__(self, "s_rt", complex(self.s_rt))
        object.__setattr__(self, "s_ri", s_ri)
        object.__setattr__(self, "s_it", s_it)
        if self.theta is not None:
            theta = np.asarray(self.theta, dtype=complex)
            _check_unitary_symmetric(theta)
            object.__setattr__(self, "theta", theta)

    def with_theta(self, theta) -> "ScatteringState":
        return ScatteringState(self.s_rt, self.s_ri, self.s_it, theta, self.representation)


def _check_unitary_symmetric(theta):
    n = theta.shape[0]
    gram_err = np.abs(theta.conj().T @ theta - np.eye(n)).max()
    if gram_err > UNITARITY_TOL:
        raise ValueError(f"scattering matrix is not unitary: max |T^H T - I| = {gram_err:.3e}")
    sym_err = np.abs(theta - theta.T).max()
    if sym_err > THETA_SYMMETRY_TOL:
        raise ValueError(f"scattering matrix is not symmetric: max |T - T^T| = {sym_err:.3e}")


def _solve_checked(matrix, rhs, name):
    cond = np.linalg.cond(matrix)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise SingularSystem(f"{name} is numerically singular (cond = {cond:.3e})")
    return np.linalg.solve(matrix, rhs)


def _check_dims(chan, load, coupling):
    if not (chan.n == load.n == coupling.n):
        raise DimensionError(
            f"dimension mismatch: channels N={chan.n}, load N={load.n}, coupling N={coupling.n}"
        )


def channel_z(chan, load, coupling, z0=ReferenceImpedance()):
    """End-to-end channel h from impedance-parameter inputs.

    Parameters
    ----------
    chan : ChannelTriple
        Impedance-representation channels (z_rt, z_ri, z_it).
    load : LoadMatrix
        RIS reactance matrix X (Z_I = jX).
    coupling : CouplingMatrix
        Array impedance matrix Z_II.
    z0 : ReferenceImpedance
    """
    if chan.representation is not Representation.IMPEDANCE:
        raise RepresentationError("channel_z needs impedance-representation channels")
    if load.kind is not LoadKind.REACTANCE:
        raise RepresentationError("channel_z needs a reactance load matrix")
    if coupling.representation is not Representation.IMPEDANCE:
        raise RepresentationError("channel_z needs an impedance coupling matrix")
    _check_dims(chan, load, coupling)
    w = _solve_checked(1j * load.values + coupling.values, chan.tx_to_ris, "jX + Z_II")
    return (chan.direct - chan.ris_to_rx @ w) / (2.0 * z0.z0)


def channel_y(chan, load, coupling, z0=ReferenceImpedance()):
    """End-to-end channel h from admittance-parameter inputs (Y_I = jB)."""
    if chan.representation is not Representation.ADMITTANCE:
        raise RepresentationError("channel_y needs admittance-representation channels")
    if load.kind is not LoadKind.SUSCEPTANCE:
        raise RepresentationError("channel_y needs a susceptance load matrix")
    if coupling.representation is not Representation.ADMITTANCE:
        raise RepresentationError("channel_y needs an admittance coupling matrix")
    _check_dims(chan, load, coupling)
    w = _solve_checked(1j * load.values + coupling.values, chan.tx_to_ris, "jB + Y_II")
    return (-chan.direct + chan.ris_to_rx @ w) / (2.0 * z0.y0)


def z_to_y(chan, coupling, z0=ReferenceImpedance()):
    """Convert impedance-parameter channels and coupling to admittance form.

    Implements the unilateral-approximation conversion

        y_ri = -z_ri Z_II^(-1) / Z0,   y_it = -Z_II^(-1) z_it / Z0,
        y_rt = (-z_rt + z_ri Z_II^(-1) z_it) / Z0^2,   Y_II = Z_II^(-1).

    Returns the converted :class:`ChannelTriple` and admittance
    :class:`CouplingMatrix`.
    """
    if chan.representation is not Representation.IMPEDANCE:
        raise RepresentationError("z_to_y expects impedance-representation channels")
    if coupling.representation is not Representation.IMPEDANCE:
        raise RepresentationError("z_to_y expects an impedance coupling matrix")
    if chan.n != coupling.n:
        raise DimensionError(f"channel N={chan.n} does not match coupling N={coupling.n}")
    y_ii = coupling.to_admittance()
    z_inv = y_ii.values
    y_ri = -(chan.ris_to_rx @ z_inv) / z0.z0
    y_it = -(z_inv @ chan.tx_to_ris) / z0.z0
    y_rt = (-chan.direct + chan.ris_to_rx @ z_inv @ chan.tx_to_ris) / z0.z0**2
    converted = ChannelTriple(y_rt, y_ri, y_it, Representation.ADMITTANCE)
    return converted, y_ii


def effective_channels(chan, coupling, z0=ReferenceImpedance()):
    """Absorb the coupling real part into the channels (barred variables).

    In impedance form the result is ``z_ri Re{Z_II}^(-1/2) sqrt(Z0)`` and
    ``sqrt(Z0) Re{Z_II}^(-1/2) z_it``; the admittance form uses Y0 and
    Re{Y_II}.  The direct term is unchanged.
    """
    if chan.representation is not coupling.representation:
        raise RepresentationError(
            f"channel representation {chan.representation.value} does not match "
            f"coupling representation {coupling.representation.value}"
        )
    if chan.n != coupling.n:
        raise DimensionError(f"channel N={chan.n} does not match coupling N={coupling.n}")
    factor = coupling.re_inv_sqrt
    scale = np.sqrt(z0.z0 if chan.representation is Representation.IMPEDANCE else z0.y0)
    return ChannelTriple(
        chan.direct,
        scale * (chan.ris_to_rx @ factor),
        scale * (factor @ chan.tx_to_ris),
        chan.representation,
    )


def to_scattering(chan_eff, z0=ReferenceImpedance()):
    """Map (already barred) channels into scattering-domain quantities.

    The admittance mapping carries leading minus signs so that in both
    representations the channel is exactly ``s_rt + s_ri theta s_it`` with
    ``theta`` the Cayley image of the barred load.
    """
    if chan_eff.representation is Representation.IMPEDANCE:
        c = 2.0 * z0.z0
        s_ri = chan_eff.ris_to_rx / c
        s_it = chan_eff.tx_to_ris / c
        s_rt = (chan_eff.direct - chan_eff.ris_to_rx @ chan_eff.tx_to_ris / c) / c
    else:
        c = 2.0 * z0.y0
        s_ri = -chan_eff.ris_to_rx / c
        s_it = -chan_eff.tx_to_ris / c
        s_rt = -(chan_eff.direct - chan_eff.ris_to_rx @ chan_eff.tx_to_ris / c) / c
    return ScatteringState(s_rt, s_ri, s_it, None, chan_eff.representation)


def scattering_channel(scat, theta):
    """Channel value s_rt + s_ri theta s_it for a given scattering matrix."""
    return scat.s_rt + scat.s_ri @ theta @ scat.s_it


def cayley(load, z0=ReferenceImpedance()):
    """Cayley transform of a real symmetric load into a scattering matrix.

    Reactance form:   theta = (jX + Z0 I)^(-1) (jX - Z0 I)
    Susceptance form: theta = (Y0 I + jB)^(-1) (Y0 I - jB)

    The result is unitary and symmetric for any finite symmetric input; the
    inverted matrix is never singular.
    """
    eye = np.eye(load.n)
    jm = 1j * load.values
    if load.kind is LoadKind.REACTANCE:
        theta = np.linalg.solve(jm + z0.z0 * eye, jm - z0.z0 * eye)
    else:
        theta = np.linalg.solve(z0.y0 * eye + jm, z0.y0 * eye - jm)
    return 0.5 * (theta + theta.T)


def cayley_inv(theta, z0=ReferenceImpedance(), kind=LoadKind.REACTANCE):
    """Invert the Cayley transform back to a real symmetric load matrix.

    The reactance map has its pole where ``theta`` has a +1 eigenvalue
    (X -> infinity); the susceptance map at -1.  An eigenvalue within
    ``CAYLEY_POLE_TOL`` of the pole raises :class:`CayleyPole`; callers
    perturb the alignment phase and re-derive.
    """
    theta = np.asarray(theta, dtype=complex)
    _check_unitary_symmetric(theta)
    eye = np.eye(theta.shape[0])
    eigvals = np.linalg.eigvals(theta)
    if kind is LoadKind.REACTANCE:
        pole_dist = np.abs(eigvals - 1.0).min()
        if pole_dist < CAYLEY_POLE_TOL:
            raise CayleyPole(
                f"scattering matrix has an eigenvalue within {pole_dist:.2e} of +1; "
                "the reactance is unbounded there"
            )
        raw = -1j * z0.z0 * np.linalg.solve(eye - theta, eye + theta)
    else:
        pole_dist = np.abs(eigvals + 1.0).min()
        if pole_dist < CAYLEY_POLE_TOL:
            raise CayleyPole(
                f"scattering matrix has an eigenvalue within {pole_dist:.2e} of -1; "
                "the susceptance is unbounded there"
            )
        raw = -1j * z0.y0 * np.linalg.solve(eye + theta, eye - theta)
    scale = np.abs(raw).max()
    resid = np.abs(raw.imag).max()
    if scale > 0 and resid > 1e-9 * scale:
        raise ValueError(
            f"inverse Cayley produced imaginary residue {resid:.3e} (input not "
            "unitary-symmetric enough)"
        )
    return LoadMatrix(kind, raw.real)


def recover_load(barred, coupling, z0=ReferenceImpedance()):
    """Physical load from its barred (coupling-absorbed) counterpart.

        X = Re{Z_II}^(1/2) Xbar Re{Z_II}^(1/2) / Z0 - Im{Z_II}
        B = Re{Y_II}^(1/2) Bbar Re{Y_II}^(1/2) / Y0 - Im{Y_II}
    """
    _check_load_coupling(barred, coupling)
    if barred.n != coupling.n:
        raise DimensionError(f"load N={barred.n} does not match coupling N={coupling.n}")
    root = coupling.re_sqrt
    scale = z0.z0 if barred.kind is LoadKind.REACTANCE else z0.y0
    values = (root @ barred.values @ root) / scale - coupling.im
    return LoadMatrix(barred.kind, values)


def decouple_load(load, coupling, z0=ReferenceImpedance()):
    """Barred load from the physical one (inverse of :func:`recover_load`)."""
    _check_load_coupling(load, coupling)
    if load.n != coupling.n:
        raise DimensionError(f"load N={load.n} does not match coupling N={coupling.n}")
    factor = coupling.re_inv_sqrt
    scale = z0.z0 if load.kind is LoadKind.REACTANCE else z0.y0
    return LoadMatrix(load.kind, scale * (factor @ (load.values + coupling.im) @ factor))


def _check_load_coupling(load, coupling):
    if load.kind.representation is not coupling.representation:
        raise RepresentationError(
            f"{load.kind.value} load requires a {load.kind.representation.value} "
            f"coupling matrix, got {coupling.representation.value}"
        )
