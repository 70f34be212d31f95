"""Closed-form scaling laws of the average optimal gain and their estimators.

Under independent Rayleigh links with an obstructed direct path, the mean of
the optimal channel gain has the closed form

    E[gain] = rho_ri rho_it / (16 Z0^2) * (T2 + T1^2 + sqrt(pi T2) T1),

with T1 = Tr(Re{Z_II}^-1) and T2 = Tr(Re{Z_II}^-2).  Without mutual coupling
(Re{Z_II} = z I) the traces collapse and the law becomes

    E[gain] = rho_ri rho_it / (16 Z0^2 z^2) * (N + N^2 + sqrt(pi N) N).

The norm-expectation terms inside these laws use a large-N concentration
(channel hardening) step, so they are flagged as asymptotic in the per-term
report; all other terms are exact.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .core import ReferenceImpedance
from .errors import NonConstantDiagonal, NotPositiveDefinite
from .sampling import sample_channels, trial_rng

#: Relative spread above which a diagonal is rejected as non-constant.
DIAGONAL_TOL = 1e-9


@dataclass(frozen=True)
class TermEstimate:
    """Closed form, Monte Carlo estimate, and standard error of one term."""

    closed_form: float
    estimate: float
    stderr: float
    asymptotic: bool = False

    def within_sigma(self, k=3.0) -> bool:
        return abs(self.estimate - self.closed_form) <= k * self.stderr


@dataclass
class ScalingReport:
    """Scaling law versus Monte Carlo for one coupling matrix."""

    closed_form: float
    monte_carlo_mean: float
    monte_carlo_stderr: float
    per_term: dict
    trials: int
    condition_number: float
    uncorrelatedness: float


def scaling_mc(fading, coupling, z0=ReferenceImpedance()):
    """Average optimal gain with mutual coupling (Rayleigh-derived law)."""
    t1 = float(np.trace(coupling.re_inv))
    t2 = float(np.sum(coupling.re_inv**2))
    return (
        fading.rho_ri * fading.rho_it / (16.0 * z0.z0**2)
        * (t2 + t1 * t1 + np.sqrt(np.pi * t2) * t1)
    )


def scaling_nomc(fading, z_self, n, z0=ReferenceImpedance()):
    """Average optimal gain with no mutual coupling and self-impedance z_self."""
    if z_self <= 0:
        raise ValueError(f"self-impedance real part must be positive, got {z_self}")
    n = int(n)
    return (
        fading.rho_ri * fading.rho_it / (16.0 * z0.z0**2 * z_self**2)
        * (n + n * n + np.sqrt(np.pi * n) * n)
    )


def chi_mean_exact(n):
    """Exact E||z|| / sqrt(rho) for an n-entry CSCG vector: Gamma(n+1/2)/Gamma(n).

    Computed through log-Gamma differences so large n does not overflow; the
    large-n approximation replaces this ratio by sqrt(n).
    """
    return float(np.exp(gammaln(n + 0.5) - gammaln(n)))


def estimate_terms(fading, coupling, z0=ReferenceImpedance(), trials=2000, seed=0):
    """Monte Carlo estimates of every expectation term in the scaling law.

    Returns a :class:`ScalingReport` whose ``per_term`` maps fixed keys to
    :class:`TermEstimate`: the ``coupled_*`` family weights the channels by
    the coupling real-part factors, the ``uncoupled_*`` family uses plain
    norms (whose closed forms depend only on N).  The ``*_norm`` entries rest
    on the hardening approximation and carry ``asymptotic=True``.
    """
    if trials < 100:
        raise ValueError(f"need at least 100 trials for stable estimates, got {trials}")
    n = coupling.n
    re_inv = coupling.re_inv
    re_inv_sqrt = coupling.re_inv_sqrt
    rho_ri, rho_it = fading.rho_ri, fading.rho_it

    samples = {key: np.empty(trials) for key in (
        "coupled_bilinear_sq", "coupled_rx_norm_sq", "coupled_tx_norm_sq",
        "coupled_bilinear_abs", "coupled_rx_norm", "coupled_tx_norm",
        "uncoupled_bilinear_sq", "uncoupled_rx_norm_sq", "uncoupled_tx_norm_sq",
        "uncoupled_bilinear_abs", "uncoupled_rx_norm", "uncoupled_tx_norm",
    )}
    gains = np.empty(trials)

    for t in range(trials):
        chan = sample_channels(fading, n, trial_rng(seed, t))
        z_ri, z_it = chan.ris_to_rx, chan.tx_to_ris
        bil = abs(z_ri @ re_inv @ z_it)
        rxn = np.linalg.norm(z_ri @ re_inv_sqrt)
        txn = np.linalg.norm(re_inv_sqrt @ z_it)
        bil0 = abs(z_ri @ z_it)
        rxn0 = np.linalg.norm(z_ri)
        txn0 = np.linalg.norm(z_it)
        samples["coupled_bilinear_sq"][t] = bil * bil
        samples["coupled_rx_norm_sq"][t] = rxn * rxn
        samples["coupled_tx_norm_sq"][t] = txn * txn
        samples["coupled_bilinear_abs"][t] = bil
        samples["coupled_rx_norm"][t] = rxn
        samples["coupled_tx_norm"][t] = txn
        samples["uncoupled_bilinear_sq"][t] = bil0 * bil0
        samples["uncoupled_rx_norm_sq"][t] = rxn0 * rxn0
        samples["uncoupled_tx_norm_sq"][t] = txn0 * txn0
        samples["uncoupled_bilinear_abs"][t] = bil0
        samples["uncoupled_rx_norm"][t] = rxn0
        samples["uncoupled_tx_norm"][t] = txn0
        gains[t] = (bil + rxn * txn) ** 2 / (16.0 * z0.z0**2)

    t1 = float(np.trace(re_inv))
    t2 = float(np.sum(re_inv**2))
    closed = {
        "coupled_bilinear_sq": (rho_ri * rho_it * t2, False),
        "coupled_rx_norm_sq": (rho_ri * t1, False),
        "coupled_tx_norm_sq": (rho_it * t1, False),
        "coupled_bilinear_abs": (0.5 * np.sqrt(np.pi * rho_ri * rho_it * t2), False),
        "coupled_rx_norm": (np.sqrt(rho_ri * t1), True),
        "coupled_tx_norm": (np.sqrt(rho_it * t1), True),
        "uncoupled_bilinear_sq": (rho_ri * rho_it * n, False),
        "uncoupled_rx_norm_sq": (rho_ri * n, False),
        "uncoupled_tx_norm_sq": (rho_it * n, False),
        "uncoupled_bilinear_abs": (0.5 * np.sqrt(np.pi * rho_ri * rho_it * n), False),
        "uncoupled_rx_norm": (np.sqrt(rho_ri * n), True),
        "uncoupled_tx_norm": (np.sqrt(rho_it * n), True),
    }
    per_term = {}
    root = np.sqrt(trials)
    for key, values in samples.items():
        cf, asymptotic = closed[key]
        per_term[key] = TermEstimate(
            closed_form=float(cf),
            estimate=float(values.mean()),
            stderr=float(values.std(ddof=1) / root),
            asymptotic=asymptotic,
        )

    corr = float(np.corrcoef(samples["coupled_bilinear_abs"], samples["coupled_rx_norm"])[0, 1])
    lam = np.linalg.eigvalsh(re_inv)
    return ScalingReport(
        closed_form=scaling_mc(fading, coupling, z0),
        monte_carlo_mean=float(gains.mean()),
        monte_carlo_stderr=float(gains.std(ddof=1) / root),
        per_term=per_term,
        trials=trials,
        condition_number=float(lam[-1] / lam[0]),
        uncorrelatedness=corr,
    )


def _constant_diagonal(diag):
    ref = float(diag[0])
    spread = np.abs(diag - ref).max()
    if spread > DIAGONAL_TOL * max(abs(ref), np.finfo(float).tiny):
        raise NonConstantDiagonal(
            f"diagonal entries vary by {spread:.3e} around {ref:.6e}; "
            "a constant self-impedance is required"
        )
    return ref


def lemma_checks(matrix):
    """Trace-inequality margins of an SPD matrix with constant diagonal a.

    Returns ``(Tr(m^-1) - N/a, Tr(m^-2) - N/a^2)``; both are analytically
    non-negative, with equality exactly at ``m = a I``.
    """
    m = np.asarray(matrix, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"need a square matrix, got shape {m.shape}")
    a = _constant_diagonal(np.diag(m))
    lam = np.linalg.eigvalsh(0.5 * (m + m.T))
    if lam[0] <= 0:
        raise NotPositiveDefinite(f"matrix is not positive definite: lambda_min = {lam[0]:.3e}")
    n = m.shape[0]
    margin1 = float(np.sum(1.0 / lam) - n / a)
    margin2 = float(np.sum(1.0 / lam**2) - n / a**2)
    return margin1, margin2


def coupling_benefit_margin(fading, coupling, z0=ReferenceImpedance()):
    """Scaling-law gain of keeping mutual coupling versus removing it.

    Compares the coupled law against the no-coupling law with the same
    (constant) self-resistance and element count; analytically non-negative,
    and zero exactly when the coupling matrix has no off-diagonal real part.
    """
    a = _constant_diagonal(np.diag(coupling.re))
    return scaling_mc(fading, coupling, z0) - scaling_nomc(fading, a, coupling.n, z0)
