"""Standalone deterministic property suite behind the selftest subcommand.

Each check prints one ``ok``/``FAIL`` line; the suite is seeded and fast
enough to run on every install.  The same properties are covered in more
depth by the pytest suite.
"""

from __future__ import annotations

import numpy as np

from .core import LoadKind, ReferenceImpedance
from .coupling import CouplingMatrix, DipoleArrayGeometry, build_coupling_matrix
from .network import (
    ChannelTriple,
    LoadMatrix,
    cayley,
    cayley_inv,
    channel_y,
    channel_z,
    z_to_y,
)
from .optimize import (
    build_alignment,
    optimize_fully_connected,
    optimize_tree_connected,
    solve_symmetric_alignment,
    solve_tridiagonal_alignment,
)
from .sampling import FadingSpec, sample_channels, trial_rng
from .scaling import lemma_checks

SEED = 20240917


def _random_spd(rng, n, base=50.0):
    a = rng.standard_normal((n, n))
    m = a @ a.T + n * np.eye(n)
    d = np.sqrt(np.diag(m))
    return base * (m / np.outer(d, d))


def _random_coupling(rng, n):
    re = _random_spd(rng, n)
    im = rng.standard_normal((n, n))
    return CouplingMatrix(re + 1j * (im + im.T) / 2)


def _random_channels(rng, n):
    draw = lambda: rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return ChannelTriple(complex(rng.standard_normal() + 1j * rng.standard_normal()),
                         draw(), draw())


def _check_cayley(rng):
    worst_unit = worst_sym = worst_round = 0.0
    z0 = ReferenceImpedance()
    for n in (1, 4, 16):
        for _ in range(10):
            x = rng.standard_normal((n, n)) * 40
            load = LoadMatrix(LoadKind.REACTANCE, (x + x.T) / 2)
            theta = cayley(load, z0)
            worst_unit = max(worst_unit, np.abs(theta.conj().T @ theta - np.eye(n)).max())
            worst_sym = max(worst_sym, np.abs(theta - theta.T).max())
            back = cayley_inv(theta, z0, LoadKind.REACTANCE)
            worst_round = max(worst_round, np.abs(back.values - load.values).max())
    ok = worst_unit <= 1e-10 and worst_sym <= 1e-12 and worst_round <= 1e-9
    return ok, f"unitarity {worst_unit:.1e}, symmetry {worst_sym:.1e}, round-trip {worst_round:.1e}"


def _check_passivity(_rng):
    geom = DipoleArrayGeometry.upa(16, 0.25, n_x=8)
    m = build_coupling_matrix(geom)
    sym = np.abs(m.values - m.values.T).max()
    margin = m.lambda_min / m.lambda_max
    y_margin = m.to_admittance().lambda_min
    ok = sym == 0.0 and margin > -1e-9 and y_margin > -1e-9 * m.to_admittance().lambda_max
    return ok, f"symmetry {sym:.1e}, Re(Z) margin {margin:+.2e}, Re(Y) min {y_margin:+.2e}"


def _check_lemmas(rng):
    margins = []
    for _ in range(5):
        m1, m2 = lemma_checks(_random_spd(rng, 12))
        margins += [m1, m2]
    eye1, eye2 = lemma_checks(50.0 * np.eye(8))
    ok = min(margins) >= -1e-9 and abs(eye1) <= 1e-9 and abs(eye2) <= 1e-12
    return ok, f"min margin {min(margins):.3e}, identity margins ({eye1:.1e}, {eye2:.1e})"


def _check_alignment(rng):
    worst = 0.0
    for n in (4, 12):
        alpha = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        sym = rng.standard_normal((n, n))
        sym = (sym + sym.T) / 2
        from .optimize import AlignmentSystem

        system = AlignmentSystem(alpha, sym @ alpha, 0.0, "full", LoadKind.REACTANCE)
        sol = solve_symmetric_alignment(system)
        worst = max(worst, np.linalg.norm(sol.values @ alpha - system.beta))

        tri = np.diag(rng.standard_normal(n))
        tri[np.arange(n - 1), np.arange(1, n)] = rng.standard_normal(n - 1)
        tri = np.triu(tri) + np.triu(tri, 1).T
        system = AlignmentSystem(alpha, tri @ alpha, 0.0, "tridiagonal", LoadKind.SUSCEPTANCE)
        sol = solve_tridiagonal_alignment(system)
        worst = max(worst, np.abs(sol.values - tri).max())
    return worst <= 1e-10, f"worst recovery error {worst:.2e}"


def _check_equivalence(rng):
    z0 = ReferenceImpedance()
    worst = 0.0
    for _ in range(20):
        n = int(rng.integers(1, 9))
        chan = _random_channels(rng, n)
        coupling = _random_coupling(rng, n)
        x = rng.standard_normal((n, n)) * 30 + 60 * np.eye(n)
        load = LoadMatrix(LoadKind.REACTANCE, (x + x.T) / 2)
        h_z = channel_z(chan, load, coupling, z0)
        chan_y, y_ii = z_to_y(chan, coupling, z0)
        b = -np.linalg.inv(load.values)
        h_y = channel_y(chan_y, LoadMatrix(LoadKind.SUSCEPTANCE, (b + b.T) / 2), y_ii, z0)
        worst = max(worst, abs(h_z - h_y) / max(abs(h_z), 1e-300))
    return worst <= 1e-11, f"worst Z/Y relative gap {worst:.2e}"


def _check_sampler(_rng):
    fading = FadingSpec(1.0, 1.0)
    z = np.concatenate([
        sample_channels(fading, 32, trial_rng(SEED, t)).ris_to_rx for t in range(2000)
    ])
    var = np.mean(np.abs(z) ** 2)
    mean = abs(np.mean(z))
    n = z.size
    ok = abs(var - 1.0) <= 3.0 / np.sqrt(n) and mean <= 3.0 / np.sqrt(2 * n)
    rep = sample_channels(fading, 32, trial_rng(SEED, 0)).ris_to_rx
    again = sample_channels(fading, 32, trial_rng(SEED, 0)).ris_to_rx
    ok = ok and np.array_equal(rep, again)
    return ok, f"per-entry variance {var:.4f}, |mean| {mean:.2e}, repeatable draws"


def _check_optimizers(rng):
    z0 = ReferenceImpedance()
    geom = DipoleArrayGeometry.upa(16, 0.25, n_x=8)
    coupling = build_coupling_matrix(geom)
    fading = FadingSpec(1e-4, 1e-4)
    worst = 0.0
    for t in range(5):
        chan = sample_channels(fading, 16, trial_rng(SEED, 100 + t))
        fc = optimize_fully_connected(chan, coupling, z0)
        tc = optimize_tree_connected(chan, coupling, z0)
        worst = max(worst, abs(fc.achieved_gain / fc.bound_gain - 1.0),
                    abs(tc.achieved_gain / tc.bound_gain - 1.0),
                    abs(fc.achieved_gain - tc.achieved_gain) / fc.achieved_gain)
    return worst <= 1e-8, f"worst bound/equality deviation {worst:.2e}"


CHECKS = (
    ("cayley unitary/symmetric/round-trip", _check_cayley),
    ("dipole coupling reciprocity and passivity", _check_passivity),
    ("trace-inequality margins", _check_lemmas),
    ("alignment forward recovery", _check_alignment),
    ("impedance/admittance channel equivalence", _check_equivalence),
    ("channel sampler moments and determinism", _check_sampler),
    ("global optimizers attain the bound", _check_optimizers),
)


def run_selftest(stream_print=print):
    """Run every property check; returns True when all pass."""
    rng = np.random.default_rng(SEED)
    all_ok = True
    for name, check in CHECKS:
        try:
            ok, detail = check(rng)
        except Exception as exc:  # a crashed check is a failed check
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        all_ok &= ok
        stream_print(f"{'ok  ' if ok else 'FAIL'} {name}: {detail}")
    return all_ok
