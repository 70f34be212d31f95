"""Mutual-coupling-aware RIS channel models, optimal tuning, and scaling laws."""

from .core import LoadKind, ReferenceImpedance, Representation
from .coupling import (
    CouplingMatrix,
    DipoleArrayGeometry,
    build_coupling_matrix,
    mutual_impedance,
    spd_inv_sqrt,
)
from .harness import (
    Awareness,
    DipoleGridTemplate,
    ExperimentKind,
    ExperimentSpec,
    TrialRecord,
    emit_outputs,
    run_experiment,
    summarize,
)
from .network import (
    ChannelTriple,
    LoadMatrix,
    ScatteringState,
    cayley,
    cayley_inv,
    channel_y,
    channel_z,
    decouple_load,
    effective_channels,
    recover_load,
    scattering_channel,
    to_scattering,
    z_to_y,
)
from .optimize import (
    AlignmentSystem,
    Architecture,
    CoordinateAscentOptions,
    RisConfiguration,
    build_alignment,
    evaluate_under,
    optimize_dris_aware,
    optimize_dris_unaware,
    optimize_fully_connected,
    optimize_tree_connected,
    solve_symmetric_alignment,
    solve_tridiagonal_alignment,
    upper_bound_fc,
    upper_bound_tc,
)
from .sampling import FadingModel, FadingSpec, sample_channels, trial_rng
from .scaling import (
    ScalingReport,
    TermEstimate,
    chi_mean_exact,
    coupling_benefit_margin,
    estimate_terms,
    lemma_checks,
    scaling_mc,
    scaling_nomc,
)

__all__ = [name for name in dir() if not name.startswith("_")]
