"""Command-line front end.

Subcommands::

    coupled-ris coupling  --config geometry.json      --out DIR
    coupled-ris optimize  --config instance.json      --out DIR
    coupled-ris sweep-n   --config experiment.json    --out DIR --seed S --threads K
    coupled-ris sweep-d   --config experiment.json    --out DIR --seed S --threads K
    coupled-ris scaling   --config experiment.json    --out DIR --seed S
    coupled-ris selftest

Config files are JSON; the recognized keys mirror the experiment spec and are
documented in the README.  Exit codes: 0 success, 2 configuration error,
3 numerical failure threshold exceeded.  The environment variable
``COUPLED_RIS_THREADS`` overrides ``--threads``.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np

from .core import ReferenceImpedance, Representation
from .coupling import CouplingMatrix, build_coupling_matrix
from .errors import ConfigError, CoupledRisError
from .harness import (
    DEFAULT_RHO,
    DEFAULT_SPACING_GRID,
    Awareness,
    DipoleGridTemplate,
    ExperimentKind,
    ExperimentSpec,
    emit_outputs,
    run_experiment,
)
from .network import ChannelTriple
from .optimize import (
    Architecture,
    evaluate_under,
    optimize_dris_aware,
    optimize_dris_unaware,
    optimize_fully_connected,
    optimize_tree_connected,
)
from .sampling import FadingModel, FadingSpec
from .selftest import run_selftest

_ARCHITECTURES = {
    "fc": Architecture.FULLY_CONNECTED,
    "fully_connected": Architecture.FULLY_CONNECTED,
    "tc": Architecture.TREE_TRIDIAGONAL,
    "tree_tridiagonal": Architecture.TREE_TRIDIAGONAL,
    "dris": Architecture.DIAGONAL,
    "diagonal": Architecture.DIAGONAL,
}

_AWARENESS = {
    "aware": Awareness.AWARE,
    "unaware": Awareness.UNAWARE,
    "no_coupling": Awareness.NO_COUPLING,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except CoupledRisError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="coupled-ris",
        description="Mutual-coupling-aware RIS channel experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, handler, help_text, needs_config=True):
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("--config", type=Path, required=needs_config,
                         help="JSON configuration file")
        cmd.add_argument("--out", type=Path, default=Path("."),
                         help="output directory (default: current)")
        cmd.add_argument("--seed", type=int, default=None,
                         help="64-bit experiment seed (overrides the config)")
        cmd.add_argument("--threads", type=int, default=1,
                         help="worker threads for trial loops")
        cmd.set_defaults(handler=handler)
        return cmd

    add("coupling", _cmd_coupling, "emit a dipole coupling matrix as CSV + JSON sidecar")
    add("optimize", _cmd_optimize, "solve one instance and write the load as JSON")
    add("sweep-n", _cmd_sweep_n, "gain versus element count experiment")
    add("sweep-d", _cmd_sweep_d, "gain versus inter-element spacing experiment")
    add("scaling", _cmd_scaling, "scaling-law validation experiment")
    add("selftest", _cmd_selftest, "run the deterministic property suite",
        needs_config=False)
    return parser


def _threads(args) -> int:
    env = os.environ.get("COUPLED_RIS_THREADS")
    if env is not None:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise ConfigError(f"COUPLED_RIS_THREADS must be an integer, got {env!r}") from exc
    return max(1, args.threads)


def _load_config(path) -> dict:
    if path is None:
        raise ConfigError("this subcommand requires --config")
    try:
        with open(path) as fh:
            config = json.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(config, dict):
        raise ConfigError(f"config root must be a JSON object, got {type(config).__name__}")
    return config


def _get(config, key, default=None, required=False):
    if key in config:
        return config[key]
    if required:
        raise ConfigError(f"missing required config key {key!r}")
    return default


def _complex_pair(value, key):
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return complex(value[0], value[1])
    raise ConfigError(f"{key!r} must be a number or a [re, im] pair")


def _geometry_template(config) -> DipoleGridTemplate:
    geo = _get(config, "geometry", {})
    try:
        return DipoleGridTemplate(
            n_x=int(_get(geo, "n_x", 8)),
            frequency=float(_get(geo, "frequency_hz", 28e9)),
            dipole_length_wl=float(_get(geo, "dipole_length_wl", 0.25)),
            wire_radius_wl=float(_get(geo, "wire_radius_wl", 0.002)),
            self_impedance=_complex_pair(_get(geo, "self_impedance_ohm", 50.0),
                                         "self_impedance_ohm"),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad geometry block: {exc}") from exc


def _fading(config) -> FadingSpec:
    model = str(_get(config, "fading", "rayleigh")).lower()
    try:
        return FadingSpec(
            rho_ri=float(_get(config, "rho_ri", DEFAULT_RHO)),
            rho_it=float(_get(config, "rho_it", DEFAULT_RHO)),
            model=FadingModel(model),
            k_factor=float(_get(config, "k_factor", 0.0)),
        )
    except ValueError as exc:
        raise ConfigError(f"bad fading block: {exc}") from exc


def _experiment_spec(args, config, kind, default_spacing) -> ExperimentSpec:
    seed = args.seed if args.seed is not None else int(_get(config, "seed", 0))
    names = [str(a).lower() for a in _get(config, "architectures", ["fc", "tc", "dris"])]
    try:
        archs = tuple(dict.fromkeys(_ARCHITECTURES[a] for a in names))
    except KeyError as exc:
        raise ConfigError(f"unknown architecture {exc.args[0]!r}") from exc
    modes = [str(a).lower() for a in _get(config, "awareness", ["aware", "unaware"])]
    try:
        awareness = tuple(dict.fromkeys(_AWARENESS[a] for a in modes))
    except KeyError as exc:
        raise ConfigError(f"unknown awareness mode {exc.args[0]!r}") from exc
    try:
        return ExperimentSpec(
            kind=kind,
            n_list=tuple(int(n) for n in _get(config, "n_list", [64])),
            spacing_list=tuple(float(s) for s in _get(config, "spacing_wl", default_spacing)),
            fading=_fading(config),
            trials=int(_get(config, "trials", 1000)),
            seed=seed,
            architectures=archs,
            awareness=awareness,
            geometry=_geometry_template(config),
            z0=ReferenceImpedance(float(_get(config, "z0_ohm", 50.0))),
            experiment_id=str(_get(config, "experiment_id", "")) or kind.value,
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def _cmd_coupling(args) -> int:
    config = _load_config(args.config)
    template = _geometry_template(config)
    n = int(_get(config, "n", required=True))
    spacing_wl = float(_get(config, "spacing_wl", required=True))
    try:
        geom = template.materialize(n, spacing_wl)
    except CoupledRisError as exc:
        raise ConfigError(str(exc)) from exc
    matrix = build_coupling_matrix(geom, template.self_impedance,
                                   allow_nonpassive=bool(_get(config, "allow_nonpassive", False)))

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / "coupling.csv"
    with csv_path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["row", "col", "re_ohm", "im_ohm"])
        for i in range(matrix.n):
            for j in range(matrix.n):
                writer.writerow([i, j, format(matrix.values[i, j].real, ".12g"),
                                 format(matrix.values[i, j].imag, ".12g")])
    meta = {
        "n": n,
        "n_x": geom.n_x,
        "n_y": geom.n_y,
        "spacing_wl": spacing_wl,
        "spacing_m": geom.spacing,
        "frequency_hz": geom.frequency,
        "wavelength_m": geom.wavelength,
        "dipole_length_m": geom.dipole_length,
        "wire_radius_m": geom.wire_radius,
        "self_impedance_ohm": [template.self_impedance.real, template.self_impedance.imag],
        "re_lambda_min": matrix.lambda_min,
        "re_lambda_max": matrix.lambda_max,
    }
    with (out / "coupling_meta.json").open("w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"wrote {csv_path} and {out / 'coupling_meta.json'}")
    return 0


def _parse_channels(config) -> ChannelTriple:
    block = _get(config, "channels", required=True)
    rep = str(_get(block, "representation", "impedance")).lower()
    try:
        representation = Representation(rep)
    except ValueError as exc:
        raise ConfigError(f"unknown representation {rep!r}") from exc
    try:
        direct = _complex_pair(_get(block, "direct", 0.0), "direct")
        ris_to_rx = np.asarray(_get(block, "ris_to_rx", required=True), dtype=float)
        tx_to_ris = np.asarray(_get(block, "tx_to_ris", required=True), dtype=float)
        if ris_to_rx.ndim != 2 or ris_to_rx.shape[0] != 2:
            raise ConfigError("channel vectors must be [re_list, im_list] pairs")
        return ChannelTriple(direct, ris_to_rx[0] + 1j * ris_to_rx[1],
                             tx_to_ris[0] + 1j * tx_to_ris[1], representation)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad channels block: {exc}") from exc


def _parse_coupling(config, n, z0) -> CouplingMatrix:
    block = _get(config, "coupling", {})
    if "values_re" in block:
        re = np.asarray(block["values_re"], dtype=float)
        im = np.asarray(_get(block, "values_im", np.zeros_like(re).tolist()), dtype=float)
        try:
            return CouplingMatrix(re + 1j * im)
        except ValueError as exc:
            raise ConfigError(f"bad coupling matrix: {exc}") from exc
    if "geometry" in block or "spacing_wl" in block:
        template = _geometry_template(block)
        spacing_wl = float(_get(block, "spacing_wl", required=True))
        geom = template.materialize(n, spacing_wl)
        return build_coupling_matrix(geom, template.self_impedance)
    return CouplingMatrix.no_coupling(n, z0.z0)


def _cmd_optimize(args) -> int:
    config = _load_config(args.config)
    chan = _parse_channels(config)
    if chan.representation is not Representation.IMPEDANCE:
        raise ConfigError("the optimize subcommand expects impedance-representation channels")
    z0 = ReferenceImpedance(float(_get(config, "z0_ohm", 50.0)))
    coupling = _parse_coupling(config, chan.n, z0)
    name = str(_get(config, "architecture", "fc")).lower()
    if name not in _ARCHITECTURES:
        raise ConfigError(f"unknown architecture {name!r}")
    architecture = _ARCHITECTURES[name]
    aware = bool(_get(config, "aware", True))

    assumed = coupling if aware else CouplingMatrix.no_coupling(chan.n, z0.z0)
    if architecture is Architecture.FULLY_CONNECTED:
        result = optimize_fully_connected(chan, assumed, z0)
    elif architecture is Architecture.TREE_TRIDIAGONAL:
        result = optimize_tree_connected(chan, assumed, z0)
    elif aware:
        result = optimize_dris_aware(chan, coupling, z0)
    else:
        result = optimize_dris_unaware(chan, z0)

    payload = {
        "architecture": architecture.value,
        "aware": aware,
        "load_kind": result.load.kind.value,
        "load": result.load.values.tolist(),
        "achieved_gain": result.achieved_gain,
        "bound_gain": result.bound_gain,
        "residual": None if np.isnan(result.residual) else result.residual,
    }
    if not aware:
        payload["gain_under_true_coupling"] = evaluate_under(result, chan, coupling, z0)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "optimize_result.json"
    with path.open("w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"wrote {path}")
    return 0


def _run_and_emit(args, spec) -> int:
    result = run_experiment(spec, threads=_threads(args))
    written = emit_outputs(result, args.out)
    for path in written:
        print(f"wrote {path}")
    if not result.ok:
        print(
            f"numerical failure threshold exceeded: {result.failure_fraction:.2%} "
            f"of trials failed",
            file=sys.stderr,
        )
        return 3
    return 0


def _cmd_sweep_n(args) -> int:
    config = _load_config(args.config)
    spec = _experiment_spec(args, config, ExperimentKind.SWEEP_N, (0.5, 0.25))
    return _run_and_emit(args, spec)


def _cmd_sweep_d(args) -> int:
    config = _load_config(args.config)
    spec = _experiment_spec(args, config, ExperimentKind.SWEEP_SPACING, DEFAULT_SPACING_GRID)
    return _run_and_emit(args, spec)


def _cmd_scaling(args) -> int:
    config = _load_config(args.config)
    spec = _experiment_spec(args, config, ExperimentKind.SCALING_VALIDATION, (0.25,))
    return _run_and_emit(args, spec)


def _cmd_selftest(args) -> int:
    if args.config is not None:
        _load_config(args.config)  # validated for consistency, but unused
    return 0 if run_selftest() else 3


if __name__ == "__main__":
    sys.exit(main())
