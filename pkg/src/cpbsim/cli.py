"""Command-line front end: subcommand dispatch and persisted run artifacts.

Every subcommand reads an optional JSON config, applies flag overrides,
writes its CSV/JSON payloads into the output directory, and finishes with
a manifest (config echo, tool version, timestamp, seed, sha256 per file).
Payload bytes depend only on config and seed; the timestamp is confined
to the manifest so repeat runs stay byte-identical.

Exit codes: 0 success, 2 validation failure, 3 a physics threshold
(currently the microreversibility tolerance) was exceeded.
"""

from __future__ import annotations

import argparse
import copy
import dataclasses
import hashlib
import json
import math
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig, config_from_mapping
from .drive import FORWARD
from .drive import reverse_protocol
from .experiment import (
    derive_seed,
    microrev_deviation,
    prepare_ensemble,
    run_protocol,
    sample_experiment,
    stochasticity_defect,
)
from .model import charge_labels
from .noise import (
    detector_distinguishability,
    kolmogorov_distance_quadrature,
    ratio_trace,
)
from .propagate import spectrum_trace
from .thermo import (
    EXACT,
    bk_equality,
    bk_ratio_check,
    energy_ladder,
    gibbs_weights,
    sample_work,
    work_distribution_exact,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_THRESHOLD = 3


def _jfloat(value: float) -> str:
    # JSON has no inf/nan literals; non-finite values degrade to null
    if not math.isfinite(value):
        return "null"
    return format(value, ".17g")


def _jdump(obj, indent: int = 0) -> str:
    """Deterministic JSON: insertion order kept, floats at 17 digits."""
    pad = "  " * indent
    inner = "  " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [
            f"{inner}{json.dumps(str(k))}: {_jdump(v, indent + 1)}"
            for k, v in obj.items()
        ]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if len(obj) == 0:
            return "[]"
        items = [f"{inner}{_jdump(v, indent + 1)}" for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _jfloat(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if obj is None:
        return "null"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _cell(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".12g")
    return str(value)


def _csv(rows) -> str:
    return "\n".join(",".join(_cell(c) for c in row) for row in rows) + "\n"


class _OutputSet:
    """Collects payload files and finishes with the checksummed manifest."""

    def __init__(self, outdir: Path) -> None:
        self.outdir = Path(outdir)
        self.outdir.mkdir(parents=True, exist_ok=True)
        self.checksums: dict = {}

    def write(self, name: str, text: str) -> None:
        data = text.encode("utf-8")
        (self.outdir / name).write_bytes(data)
        self.checksums[name] = hashlib.sha256(data).hexdigest()

    def manifest(self, cfg: RunConfig) -> None:
        doc = {
            "tool": "cpbsim",
            "version": __version__,
            "timestamp_utc": datetime.now(timezone.utc).isoformat(),
            "seed": cfg.seed,
            "config": cfg.resolved(),
            "outputs": {k: self.checksums[k] for k in sorted(self.checksums)},
        }
        path = self.outdir / "manifest.json"
        path.write_text(_jdump(doc) + "\n", encoding="utf-8")


def _subspace_labels(cfg: RunConfig) -> tuple:
    if cfg.subspace == "all":
        return tuple(int(n) for n in charge_labels(cfg.device))
    return tuple(cfg.subspace)


def _matrix_rows(matrix: np.ndarray, labels: np.ndarray):
    header = ["label"] + [int(n) for n in labels]
    rows = [header]
    for i, m in enumerate(labels):
        rows.append([int(m)] + list(matrix[i]))
    return rows


def cmd_spectrum(cfg: RunConfig) -> int:
    trace = spectrum_trace(cfg.device, cfg.protocol, cfg.spectrum_samples)
    out = _OutputSet(Path(cfg.output_dir))
    header = ["t_ns"] + [f"e{k:02d}" for k in range(cfg.device.n_charges)]
    rows = [header] + [
        [t] + list(levels) for t, levels in zip(trace.times, trace.energies)
    ]
    out.write("spectrum.csv", _csv(rows))
    out.manifest(cfg)
    return EXIT_OK


def cmd_run(cfg: RunConfig) -> int:
    trans = run_protocol(cfg.device, cfg.protocol, cfg.propagator)
    out = _OutputSet(Path(cfg.output_dir))
    out.write("transition_matrix.csv", _csv(_matrix_rows(trans.matrix, trans.labels)))
    out.write(
        "transition_matrix.json",
        _jdump(
            {
                "direction": trans.direction,
                "labels": [int(n) for n in trans.labels],
                "matrix": [list(row) for row in trans.matrix],
            }
        )
        + "\n",
    )
    subspace = _subspace_labels(cfg)
    leakage = trans.subspace_leakage(subspace)
    report = {
        "direction": trans.direction,
        "stochasticity_defect": stochasticity_defect(trans),
        "subspace": list(subspace),
        "column_leakage": {str(n): float(v) for n, v in zip(subspace, leakage)},
    }
    if cfg.protocol.direction == FORWARD:
        prep = prepare_ensemble(cfg.device, cfg.protocol, cfg.propagator, subspace)
        rows = [["label", "probability"]] + [
            [int(n), p] for n, p in zip(prep.labels, prep.probabilities)
        ]
        out.write("preparation.csv", _csv(rows))
        report["subspace_mass"] = prep.subspace_mass
        if cfg.mode != EXACT:
            sample = sample_experiment(prep, trans, cfg.events, cfg.seed)
            out.write("counts.csv", _csv(_matrix_rows(sample.counts, sample.labels)))
            report["events"] = sample.n_events
    out.write("run_report.json", _jdump(report) + "\n")
    out.manifest(cfg)
    return EXIT_OK


def cmd_microrev(cfg: RunConfig) -> int:
    forward = dataclasses.replace(cfg.protocol, direction=FORWARD)
    backward = reverse_protocol(forward)
    t_fwd = run_protocol(cfg.device, forward, cfg.propagator)
    t_bwd = run_protocol(cfg.device, backward, cfg.propagator)
    subspace = _subspace_labels(cfg)
    rep = microrev_deviation(t_fwd, t_bwd, subspace)
    out = _OutputSet(Path(cfg.output_dir))
    passed = rep.max_abs <= cfg.microrev_tolerance
    out.write(
        "microrev.json",
        _jdump(
            {
                "max_abs": rep.max_abs,
                "mean_abs": rep.mean_abs,
                "max_abs_full": rep.max_abs_full,
                "mean_abs_full": rep.mean_abs_full,
                "subspace": list(rep.subspace),
                "tolerance": cfg.microrev_tolerance,
                "passed": passed,
                "mirror_time": cfg.protocol.mirror_time,
                "invert_flux": cfg.protocol.invert_flux,
            }
        )
        + "\n",
    )
    rows = [["m", "n", "p_forward", "p_backward_transposed", "abs_diff"]]
    for m in subspace:
        for n in subspace:
            pf = float(t_fwd.matrix[t_fwd.index(m), t_fwd.index(n)])
            pb = float(t_bwd.matrix[t_bwd.index(n), t_bwd.index(m)])
            rows.append([int(m), int(n), pf, pb, abs(pf - pb)])
    out.write("microrev_cells.csv", _csv(rows))
    out.manifest(cfg)
    return EXIT_OK if passed else EXIT_THRESHOLD


def cmd_gibbs(cfg: RunConfig) -> int:
    forward = dataclasses.replace(cfg.protocol, direction=FORWARD)
    backward = reverse_protocol(forward)
    ladder = energy_ladder(
        cfg.device, forward, subspace=cfg.subspace, bare=cfg.bare_ladder
    )
    t_fwd = run_protocol(cfg.device, forward, cfg.propagator)
    t_bwd = run_protocol(cfg.device, backward, cfg.propagator)
    out = _OutputSet(Path(cfg.output_dir))
    table = []
    for ti, temperature in enumerate(cfg.temperatures_k):
        weights = gibbs_weights(ladder, temperature)
        if cfg.mode == EXACT:
            dist_f = work_distribution_exact(weights, t_fwd, ladder)
            dist_b = work_distribution_exact(weights, t_bwd, ladder)
            value_header = "probability"
        else:
            dist_f = sample_work(
                weights, t_fwd, ladder, cfg.events, derive_seed(cfg.seed, ti, 0)
            )
            dist_b = sample_work(
                weights, t_bwd, ladder, cfg.events, derive_seed(cfg.seed, ti, 1)
            )
            value_header = "count"
        tag = f"T{temperature:g}K"
        for dist, name in ((dist_f, "forward"), (dist_b, "backward")):
            rows = [["W_rad_per_ns", value_header]] + [
                [w, v] for w, v in zip(dist.values, dist.mass)
            ]
            out.write(f"work_{name}_{tag}.csv", _csv(rows))
        records = bk_ratio_check(dist_f, dist_b, temperature)
        rows = [
            [
                "W_rad_per_ns",
                "log_ratio",
                "reference",
                "forward_mass",
                "backward_mass",
                "matched",
            ]
        ]
        for r in records:
            rows.append(
                [
                    r.work,
                    r.log_ratio,
                    r.reference,
                    r.forward_mass,
                    r.backward_mass,
                    r.matched,
                ]
            )
        out.write(f"bk_ratio_{tag}.csv", _csv(rows))
        eq = bk_equality(dist_f, temperature)
        table.append(
            {
                "temperature_k": temperature,
                "one_minus_mean": 1.0 - eq.mean,
                "mean": eq.mean,
                "stderr": eq.stderr,
                "n_events": eq.n_events,
                "n_discarded": dist_f.n_discarded,
            }
        )
    rows = [["temperature_k", "one_minus_mean", "stderr", "n_events"]]
    for row in table:
        rows.append(
            [row["temperature_k"], row["one_minus_mean"], row["stderr"], row["n_events"]]
        )
    out.write("bk_table.csv", _csv(rows))
    out.write(
        "bk_report.json",
        _jdump(
            {
                "mode": cfg.mode,
                "events": cfg.events,
                "ladder": {
                    "labels": [int(n) for n in ladder.labels],
                    "energies": list(ladder.energies),
                    "bare": ladder.bare,
                },
                "table": table,
            }
        )
        + "\n",
    )
    out.manifest(cfg)
    return EXIT_OK


def cmd_noise(cfg: RunConfig) -> int:
    points = ratio_trace(
        cfg.device, cfg.protocol, cfg.trace_samples, cfg.bath_temperature_k
    )
    out = _OutputSet(Path(cfg.output_dir))
    rows = [["t_ns", "ratio", "t2_over_t1", "beta"]]
    for p in points:
        rows.append([p.time, p.tphi_over_t1, p.t2_over_t1, p.beta])
    out.write("noise_trace.csv", _csv(rows))
    det = detector_distinguishability(cfg.detector)
    quad = kolmogorov_distance_quadrature(cfg.detector)
    out.write(
        "detector.json",
        _jdump(
            {
                "sigma_q_e": det.sigma_q,
                "delta_q_e": det.delta_q,
                "distance": det.distance,
                "distance_quadrature": quad,
                "closed_form_defect": abs(det.distance - quad),
                "p_correct": det.p_correct,
                "bath_temperature_k": cfg.bath_temperature_k,
            }
        )
        + "\n",
    )
    out.manifest(cfg)
    return EXIT_OK


def _read_mapping(path: Path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"config file {path}: {exc}") from None
    if not isinstance(data, dict):
        raise ValueError("config file must contain a JSON object")
    return data


def _nested(mapping: dict, key: str) -> dict:
    section = mapping.setdefault(key, {})
    if not isinstance(section, dict):
        raise ValueError(f"config section {key!r} must be a JSON object")
    return section


def _merge_overrides(mapping: dict, args: argparse.Namespace) -> dict:
    merged = copy.deepcopy(mapping)
    if args.seed is not None:
        merged["seed"] = args.seed
    if args.events is not None:
        merged["events"] = args.events
    if args.dt is not None:
        _nested(merged, "propagator")["time_step"] = args.dt
    if args.duration is not None:
        _nested(merged, "protocol")["duration"] = args.duration
    if args.temperatures is not None:
        tokens = [tok.strip() for tok in args.temperatures.split(",") if tok.strip()]
        if not tokens:
            raise ValueError("--temperatures needs a comma-separated kelvin list")
        try:
            merged["temperatures_k"] = [float(tok) for tok in tokens]
        except ValueError:
            raise ValueError(f"bad --temperatures value: {args.temperatures!r}") from None
    if args.no_flux_inversion:
        _nested(merged, "protocol")["invert_flux"] = False
    if args.no_time_mirror:
        _nested(merged, "protocol")["mirror_time"] = False
    if args.exact:
        merged["mode"] = "exact"
    if args.sampled:
        merged["mode"] = "sampled"
    if args.out is not None:
        merged["output_dir"] = args.out
    return merged


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cpbsim",
        description="Driven Cooper-pair box: reversal symmetry and work statistics",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, default=None, help="JSON config file")
    common.add_argument("--seed", type=int, default=None, help="RNG seed (u64)")
    common.add_argument("--events", type=int, default=None, help="Monte Carlo events")
    common.add_argument("--dt", type=float, default=None, help="propagator step (ns)")
    common.add_argument(
        "--duration", type=float, default=None, help="protocol duration (ns)"
    )
    common.add_argument(
        "--temperatures", default=None, help="comma-separated kelvin list"
    )
    common.add_argument(
        "--no-flux-inversion",
        action="store_true",
        help="negative control: reversed protocol keeps the forward flux sign",
    )
    common.add_argument(
        "--no-time-mirror",
        action="store_true",
        help="negative control: reversed protocol keeps the forward clock",
    )
    common.add_argument("--out", default=None, help="output directory")
    mode = common.add_mutually_exclusive_group()
    mode.add_argument(
        "--exact", action="store_true", help="deterministic distributions"
    )
    mode.add_argument(
        "--sampled", action="store_true", help="Monte Carlo event records"
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, func, text in (
        ("spectrum", cmd_spectrum, "instantaneous eigenenergies along the drive"),
        ("run", cmd_run, "transition matrix and preparation ensemble"),
        ("microrev", cmd_microrev, "forward/backward transition symmetry check"),
        ("gibbs", cmd_gibbs, "work distributions and exponentiated-work table"),
        ("noise", cmd_noise, "decoherence ratio trace and detector fidelity"),
    ):
        p = sub.add_parser(name, parents=[common], help=text)
        p.set_defaults(func=func)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        mapping = {} if args.config is None else _read_mapping(args.config)
        mapping = _merge_overrides(mapping, args)
        cfg = config_from_mapping(mapping)
    except (OSError, ValueError) as exc:
        print(f"cpbsim: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(cfg)
    except (OSError, ValueError) as exc:
        print(f"cpbsim: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    raise SystemExit(main())
