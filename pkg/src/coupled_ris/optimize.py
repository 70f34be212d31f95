"""Globally optimal tuning of coupled RIS architectures and baselines.

Fully-connected and tree-connected (tridiagonal) reconfigurable impedance
networks admit closed-form globally optimal loads under mutual coupling: the
channel gain is upper bounded by an explicit function of the channels and the
coupling real part, and a load whose Cayley image aligns the scattering
channels attains that bound exactly.  The alignment condition is linear in
the load entries, so both architectures reduce to small real linear systems.

Conventional single-connected (diagonal) RIS baselines are also provided: a
coupling-unaware phase alignment and a coupling-aware per-element coordinate
ascent with the same interface and an O(sweeps * N^3) cost envelope.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .core import LoadKind, ReferenceImpedance, Representation
from .coupling import CouplingMatrix
from .errors import (
    AlignmentInfeasible,
    DegenerateChannel,
    DimensionError,
    RepresentationError,
)
from .network import (
    LoadMatrix,
    cayley,
    channel_y,
    channel_z,
    decouple_load,
    effective_channels,
    recover_load,
    to_scattering,
    z_to_y,
)

#: Default relative residual tolerance of the alignment solvers.
ALIGNMENT_TOL = 1e-8

#: Singular values below this times the largest are treated as zero.
LSTSQ_RCOND = 1e-10

#: Phase perturbation applied when an alignment solve lands on a degenerate
#: configuration; the event has measure zero under continuous channels.
PHASE_NUDGE = 1e-8


class Architecture(Enum):
    FULLY_CONNECTED = "fully_connected"
    TREE_TRIDIAGONAL = "tree_tridiagonal"
    DIAGONAL = "diagonal"


@dataclass
class RisConfiguration:
    """An optimized load together with its achieved and bound gains."""

    architecture: Architecture
    load: LoadMatrix
    achieved_gain: float
    bound_gain: float
    residual: float = float("nan")
    info: dict = field(default_factory=dict)

    def pattern(self) -> str:
        if self.architecture is Architecture.FULLY_CONNECTED:
            return "full"
        if self.architecture is Architecture.TREE_TRIDIAGONAL:
            return "tridiagonal"
        return "diagonal"


@dataclass
class AlignmentSystem:
    """Linear system M alpha = beta whose unknown is a patterned load matrix."""

    alpha: np.ndarray
    beta: np.ndarray
    phase: float
    pattern: str
    kind: LoadKind


def upper_bound_fc(chan, coupling, z0=ReferenceImpedance()):
    """Channel-gain upper bound from impedance-parameter inputs.

    (|z_rt - z_ri Re{Z_II}^(-1) z_it / 2|
     + ||z_ri Re{Z_II}^(-1/2)|| ||Re{Z_II}^(-1/2) z_it|| / 2)^2 / (4 Z0^2)
    """
    if chan.representation is not Representation.IMPEDANCE:
        raise RepresentationError("upper_bound_fc needs impedance-representation channels")
    if coupling.representation is not Representation.IMPEDANCE:
        raise RepresentationError("upper_bound_fc needs an impedance coupling matrix")
    return _bound(chan, coupling) / (4.0 * z0.z0**2)


def upper_bound_tc(chan, coupling, z0=ReferenceImpedance()):
    """Channel-gain upper bound from admittance-parameter inputs."""
    if chan.representation is not Representation.ADMITTANCE:
        raise RepresentationError("upper_bound_tc needs admittance-representation channels")
    if coupling.representation is not Representation.ADMITTANCE:
        raise RepresentationError("upper_bound_tc needs an admittance coupling matrix")
    return _bound(chan, coupling) / (4.0 * z0.y0**2)


def _bound(chan, coupling):
    if chan.n != coupling.n:
        raise DimensionError(f"channel N={chan.n} does not match coupling N={coupling.n}")
    direct = chan.direct - 0.5 * chan.ris_to_rx @ coupling.re_inv @ chan.tx_to_ris
    product = 0.5 * (
        np.linalg.norm(chan.ris_to_rx @ coupling.re_inv_sqrt)
        * np.linalg.norm(coupling.re_inv_sqrt @ chan.tx_to_ris)
    )
    return float((abs(direct) + product) ** 2)


def build_alignment(scat, coupling, z0=ReferenceImpedance(), domain=Representation.IMPEDANCE,
                    phase_offset=0.0):
    """Linear alignment system whose solution attains the gain upper bound.

    The optimal scattering matrix must map the normalized transmit-side
    channel onto the conjugate receive-side one with the direct-term phase:
    ``theta s_it_hat = exp(j phi) s_ri_hat^H``.  Written through the Cayley
    transform this is linear in the load matrix.

    In the impedance domain the unknowns are the entries of the decoupled
    (barred) reactance: ``alpha = j (s_it_hat - e s_ri_hat^H)``,
    ``beta = Z0 (s_it_hat + e s_ri_hat^H)``.  In the admittance domain the
    barred system ``alpha_bar = j (s_it_hat + e s_ri_hat^H)``,
    ``beta_bar = Y0 (s_it_hat - e s_ri_hat^H)`` is pushed through the
    decoupling transform so the unknown is the physical susceptance matrix,
    whose tridiagonal sparsity the tree-connected solver needs.
    """
    norm_ri = np.linalg.norm(scat.s_ri)
    norm_it = np.linalg.norm(scat.s_it)
    if norm_ri == 0.0 or norm_it == 0.0:
        raise DegenerateChannel("a scattering channel vector is zero; any load is optimal")
    phase = float(np.angle(scat.s_rt)) if scat.s_rt != 0 else 0.0
    phase += phase_offset
    rot = np.exp(1j * phase)
    ri_hat = np.conj(scat.s_ri) / norm_ri
    it_hat = scat.s_it / norm_it

    if domain is Representation.IMPEDANCE:
        alpha = 1j * (it_hat - rot * ri_hat)
        beta = z0.z0 * (it_hat + rot * ri_hat)
        return AlignmentSystem(alpha, beta, phase, "full", LoadKind.REACTANCE)

    if coupling.representation is not Representation.ADMITTANCE:
        raise RepresentationError("admittance-domain alignment needs an admittance coupling")
    alpha_bar = 1j * (it_hat + rot * ri_hat)
    beta_bar = z0.y0 * (it_hat - rot * ri_hat)
    factor = coupling.re_inv_sqrt
    alpha = factor @ alpha_bar
    beta = coupling.re_sqrt @ beta_bar / z0.y0 - coupling.im @ (factor @ alpha_bar)
    return AlignmentSystem(alpha, beta, phase, "tridiagonal", LoadKind.SUSCEPTANCE)


def solve_symmetric_alignment(system, tol=ALIGNMENT_TOL):
    """Minimum-norm real symmetric solution of M alpha = beta.

    Stacking real and imaginary parts gives 2N real equations in the N(N+1)/2
    upper-triangle unknowns; the returned matrix minimizes the Frobenius norm
    over the least-squares solution set.  The constraint only touches the
    action of M on the two-dimensional real span of alpha, so the solution
    has the closed form ``M = C Q^T + Q C^T - Q sym(Q^T C) Q^T`` with QR
    factors alpha_stack = Q R and C = beta_stack R^(-1); everything outside
    that span is zero.  This costs O(N^2) instead of the O(N^4) of a dense
    least-squares solve over the stacked system and returns the same point.
    """
    a = np.column_stack([system.alpha.real, system.alpha.imag])
    b = np.column_stack([system.beta.real, system.beta.imag])
    n = a.shape[0]

    q, r = np.linalg.qr(a)
    diag = np.abs(np.diag(r))
    if n == 1:
        # single unknown m with m * [Re a, Im a] = [Re b, Im b]
        denom = float(a[0] @ a[0])
        values = np.array([[float(a[0] @ b[0]) / denom]]) if denom > 0 else np.zeros((1, 1))
    elif diag.min() <= LSTSQ_RCOND * max(diag.max(), np.finfo(float).tiny):
        values = _stacked_lstsq_symmetric(a, b, n)
    else:
        c = np.linalg.solve(r.T, b.T).T
        k = q.T @ c
        sym = 0.5 * (k + k.T)
        values = c @ q.T + q @ c.T - q @ sym @ q.T
    load = LoadMatrix(system.kind, 0.5 * (values + values.T))
    _check_alignment_residual(load.values, system, tol)
    return load


def _stacked_lstsq_symmetric(a, b, n):
    # fallback for rank-deficient alpha: explicit least squares over the
    # upper-triangle unknowns (rare; alpha real/imag parts collinear).  The
    # off-diagonal unknowns carry a sqrt(2) scale so the vector norm being
    # minimized is the Frobenius norm of the matrix, matching the subspace
    # closed form.
    iu, ju = np.triu_indices(n)
    scale = np.where(iu == ju, 1.0, np.sqrt(2.0))
    rows = np.zeros((2 * n, iu.size))
    for col, (i, j) in enumerate(zip(iu, ju)):
        for part, block in ((a[:, 0], 0), (a[:, 1], n)):
            rows[block + i, col] += part[j] / scale[col]
            if i != j:
                rows[block + j, col] += part[i] / scale[col]
    rhs = np.concatenate([b[:, 0], b[:, 1]])
    coef, *_ = np.linalg.lstsq(rows, rhs, rcond=LSTSQ_RCOND)
    values = np.zeros((n, n))
    values[iu, ju] = coef / scale
    return values + np.triu(values, 1).T


def solve_tridiagonal_alignment(system, tol=ALIGNMENT_TOL):
    """Least-squares tridiagonal symmetric solution of M alpha = beta.

    The N complex equations stack into 2N real ones over the 2N - 1 unknowns
    (N diagonal and N - 1 off-diagonal entries); generically the system has
    rank 2N - 1 and exactly one solution.
    """
    alpha, beta = system.alpha, system.beta
    n = alpha.size
    cols = np.zeros((n, 2 * n - 1), dtype=complex)
    cols[np.arange(n), np.arange(n)] = alpha
    if n > 1:
        rows = np.arange(n - 1)
        cols[rows, n + rows] = alpha[rows + 1]
        cols[rows + 1, n + rows] = alpha[rows]
    stacked = np.vstack([cols.real, cols.imag])
    rhs = np.concatenate([beta.real, beta.imag])
    coef, *_ = np.linalg.lstsq(stacked, rhs, rcond=LSTSQ_RCOND)

    values = np.diag(coef[:n])
    if n > 1:
        values[np.arange(n - 1), np.arange(1, n)] = coef[n:]
    load = LoadMatrix(system.kind, values)
    _check_alignment_residual(load.values, system, tol)
    return load


def _check_alignment_residual(values, system, tol):
    scale = np.linalg.norm(system.beta)
    residual = np.linalg.norm(values @ system.alpha - system.beta)
    if residual > tol * max(scale, np.finfo(float).tiny):
        raise AlignmentInfeasible(
            f"alignment system residual {residual:.3e} exceeds {tol:.1e} * ||beta|| "
            f"({scale:.3e})",
            residual=float(residual),
        )


def _theta_alignment_residual(barred, scat, phase, z0):
    theta = cayley(barred, z0)
    target = np.exp(1j * phase) * np.conj(scat.s_ri) / np.linalg.norm(scat.s_ri)
    return float(np.linalg.norm(theta @ (scat.s_it / np.linalg.norm(scat.s_it)) - target))


def optimize_fully_connected(chan, coupling, z0=ReferenceImpedance(), tol=ALIGNMENT_TOL):
    """Globally optimal full symmetric reactance matrix under coupling.

    Pipeline: absorb the coupling real part into the channels, map to
    scattering quantities, solve the impedance-domain alignment for the
    barred reactance, then transform back to the physical load.  The achieved
    gain equals :func:`upper_bound_fc` up to the alignment tolerance.
    """
    if chan.representation is not Representation.IMPEDANCE:
        raise RepresentationError("optimize_fully_connected needs impedance channels")
    bound = upper_bound_fc(chan, coupling, z0)
    eff = effective_channels(chan, coupling, z0)
    scat = to_scattering(eff, z0)

    try:
        barred, system = _solve_with_retry(
            scat, coupling, z0, Representation.IMPEDANCE, solve_symmetric_alignment, tol)
    except DegenerateChannel:
        return _degenerate_configuration(
            Architecture.FULLY_CONNECTED, chan, coupling, z0, bound)

    load = recover_load(barred, coupling, z0)
    gain = abs(channel_z(chan, load, coupling, z0)) ** 2
    residual = _theta_alignment_residual(barred, scat, system.phase, z0)
    return RisConfiguration(
        Architecture.FULLY_CONNECTED, load, float(gain), bound, residual,
        info={"phase": system.phase},
    )


def optimize_tree_connected(chan, coupling, z0=ReferenceImpedance(), tol=ALIGNMENT_TOL):
    """Globally optimal tridiagonal susceptance matrix under coupling.

    Accepts either impedance inputs (converted internally) or admittance
    ones.  The admittance-domain alignment is solved directly for the
    physical tridiagonal susceptance; the achieved gain equals
    :func:`upper_bound_tc` up to the alignment tolerance.
    """
    if chan.representation is Representation.IMPEDANCE:
        chan_y, y_ii = z_to_y(chan, coupling, z0)
    else:
        if coupling.representation is not Representation.ADMITTANCE:
            raise RepresentationError("admittance channels need an admittance coupling")
        chan_y, y_ii = chan, coupling
    bound = upper_bound_tc(chan_y, y_ii, z0)
    eff = effective_channels(chan_y, y_ii, z0)
    scat = to_scattering(eff, z0)

    try:
        load, system = _solve_with_retry(
            scat, y_ii, z0, Representation.ADMITTANCE, solve_tridiagonal_alignment, tol)
    except DegenerateChannel:
        return _degenerate_configuration(
            Architecture.TREE_TRIDIAGONAL, chan_y, y_ii, z0, bound)

    gain = abs(channel_y(chan_y, load, y_ii, z0)) ** 2
    barred = decouple_load(load, y_ii, z0)
    residual = _theta_alignment_residual(barred, scat, system.phase, z0)
    return RisConfiguration(
        Architecture.TREE_TRIDIAGONAL, load, float(gain), bound, residual,
        info={"phase": system.phase},
    )


def _solve_with_retry(scat, coupling, z0, domain, solver, tol):
    """Solve the alignment, nudging the free phase once if it degenerates."""
    last = None
    for offset in (0.0, PHASE_NUDGE):
        system = build_alignment(scat, coupling, z0, domain, phase_offset=offset)
        try:
            return solver(system, tol), system
        except AlignmentInfeasible as err:
            last = err
    raise last


def _degenerate_configuration(architecture, chan, coupling, z0, bound):
    # one of the RIS channel vectors vanished: every load achieves the bound
    kind = (LoadKind.REACTANCE if chan.representation is Representation.IMPEDANCE
            else LoadKind.SUSCEPTANCE)
    load = LoadMatrix.zeros(kind, chan.n)
    evaluate = channel_z if kind is LoadKind.REACTANCE else channel_y
    gain = abs(evaluate(chan, load, coupling, z0)) ** 2
    return RisConfiguration(architecture, load, float(gain), bound, 0.0,
                            info={"degenerate": True})


@dataclass(frozen=True)
class CoordinateAscentOptions:
    """Knobs of the diagonal coupling-aware coordinate ascent."""

    grid_size: int = 256
    max_sweeps: int = 100
    rel_tol: float = 1e-6


def optimize_dris_unaware(chan, z0=ReferenceImpedance()):
    """Diagonal phase alignment that ignores mutual coupling.

    Maps the raw channels to scattering quantities assuming the array
    impedance is Z0 I, sets each reflection phase to align its cascaded term
    with the direct term, and converts the phases to reactances through the
    scalar inverse Cayley map.  Elements whose cascaded product is zero
    contribute nothing; their phase is pinned to the direct-term phase for
    determinism.  Evaluating the returned load under the true coupling is a
    separate step (:func:`evaluate_under`).
    """
    if chan.representation is not Representation.IMPEDANCE:
        raise RepresentationError("optimize_dris_unaware needs impedance channels")
    c = 2.0 * z0.z0
    s_ri = chan.ris_to_rx / c
    s_it = chan.tx_to_ris / c
    s_rt = (chan.direct - chan.ris_to_rx @ chan.tx_to_ris / c) / c

    ref = float(np.angle(s_rt)) if s_rt != 0 else 0.0
    product = s_ri * s_it
    theta = np.where(product != 0, ref - np.angle(product), ref)
    # the scalar inverse Cayley map has a pole at phase 0 (infinite
    # reactance); nudge such elements off it
    spin = np.exp(1j * theta)
    theta = np.where(np.abs(spin - 1.0) < 1e-10, theta + PHASE_NUDGE, theta)
    spin = np.exp(1j * theta)
    reactance = (-1j * z0.z0 * (1.0 + spin) / (1.0 - spin)).real

    load = LoadMatrix.from_diagonal(LoadKind.REACTANCE, reactance)
    assumed = CouplingMatrix.no_coupling(chan.n, z0.z0)
    gain = abs(channel_z(chan, load, assumed, z0)) ** 2
    bound = upper_bound_fc(chan, assumed, z0)
    return RisConfiguration(Architecture.DIAGONAL, load, float(gain), bound,
                            info={"theta": theta, "assumed_no_coupling": True})


def optimize_dris_aware(chan, coupling, z0=ReferenceImpedance(), options=None):
    """Coupling-aware diagonal baseline: cyclic per-element phase sweeps.

    Starting from the coupling-unaware alignment, each element in turn scans
    a fixed grid of reflection phases (mapped to reactances through the
    scalar Cayley map) while all others stay fixed; rank-one updates of the
    cached inverse make a candidate evaluation O(1).  The swept gain sequence
    is non-decreasing, and the loop stops when a full sweep improves the gain
    by less than ``options.rel_tol`` (relative) or after
    ``options.max_sweeps``.
    """
    if chan.representation is not Representation.IMPEDANCE:
        raise RepresentationError("optimize_dris_aware needs impedance channels")
    if chan.n != coupling.n:
        raise DimensionError(f"channel N={chan.n} does not match coupling N={coupling.n}")
    options = options or CoordinateAscentOptions()
    z = z0.z0

    phases = 2.0 * np.pi * (np.arange(options.grid_size) + 0.5) / options.grid_size
    grid = z / np.tan(0.5 * phases)  # scalar Cayley: x = Z0 cot(phase / 2)

    x = np.array(np.diag(optimize_dris_unaware(chan, z0).load.values))
    sweep_gains = []
    for _ in range(options.max_sweeps):
        inverse = np.linalg.inv(1j * np.diag(x) + coupling.values)
        w = chan.ris_to_rx @ inverse
        g = inverse @ chan.tx_to_ris
        h = (chan.direct - chan.ris_to_rx @ g) / (2.0 * z)
        for n in range(chan.n):
            delta = grid - x[n]
            denom = 1.0 + 1j * delta * inverse[n, n]
            candidates = h + 1j * delta * w[n] * g[n] / (2.0 * z * denom)
            best = int(np.argmax(np.abs(candidates) ** 2))
            if abs(candidates[best]) ** 2 <= abs(h) ** 2:
                continue
            step = delta[best]
            scale = 1j * step / denom[best]
            col = inverse[:, n].copy()
            row = inverse[n, :].copy()
            w = w - scale * w[n] * row
            g = g - scale * col * g[n]
            inverse = inverse - scale * np.outer(col, row)
            h = candidates[best]
            x[n] = grid[best]
        gain = float(abs(h) ** 2)
        improved = not sweep_gains or gain > sweep_gains[-1] * (1.0 + options.rel_tol)
        sweep_gains.append(gain)
        if not improved:
            break

    load = LoadMatrix.from_diagonal(LoadKind.REACTANCE, x)
    gain = abs(channel_z(chan, load, coupling, z0)) ** 2
    bound = upper_bound_fc(chan, coupling, z0)
    return RisConfiguration(
        Architecture.DIAGONAL, load, float(gain), bound,
        info={"sweeps": len(sweep_gains), "sweep_gains": sweep_gains},
    )


def evaluate_under(config, chan, coupling, z0=ReferenceImpedance()):
    """Gain |h|^2 of a fixed load when the true coupling matrix applies.

    This is the degradation probe for coupling-unaware configurations: the
    load was chosen under some assumed coupling, the channel is evaluated
    under ``coupling``.
    """
    if config.load.n != chan.n:
        raise DimensionError(
            f"configuration N={config.load.n} does not match channel N={chan.n}"
        )
    if config.load.kind is LoadKind.REACTANCE:
        if chan.representation is not Representation.IMPEDANCE:
            raise RepresentationError("reactance loads evaluate against impedance channels")
        z_ii = (coupling if coupling.representation is Representation.IMPEDANCE
                else coupling.converted)
        return float(abs(channel_z(chan, config.load, z_ii, z0)) ** 2)
    if chan.representation is Representation.IMPEDANCE:
        chan, coupling = z_to_y(chan, coupling, z0)
    elif coupling.representation is not Representation.ADMITTANCE:
        coupling = coupling.converted
    return float(abs(channel_y(chan, config.load, coupling, z0)) ** 2)
