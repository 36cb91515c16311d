"""Command-line front end.

One subcommand per experiment plus a device self-check.  Every sampling
command requires --seed; identical command lines (including the seed)
produce byte-identical outputs regardless of --jobs.  A JSON summary is
always printed on stdout; --output writes the full report.

Exit codes: 0 success, 1 missing/invalid input file, 2 validation failure
(bad arguments or a failed device check).
"""

import argparse
import json
import sys

import numpy as np

from . import __version__, calibration, experiments, noise, tomography
from .chip import PhaseConfig, cnot_success_probs, default_netlist, verify_cnot
from .optics import netlist_from_json, netlist_to_json

SCHEMA = 1


def _noise_from_args(args):
    if getattr(args, "exact", False):
        # probability-level run of the ideal device
        return noise.NoiseModel(
            phase_sigma=0.0, indistinguishability=1.0,
            accidental_fraction=0.0, mean_pairs=args.pairs,
        )
    return noise.NoiseModel(
        phase_sigma=args.phase_sigma,
        indistinguishability=args.visibility,
        accidental_fraction=args.accidental,
        mean_pairs=args.pairs,
    )


def _rng_from_args(args, parser):
    if getattr(args, "exact", False):
        return None
    if args.seed is None:
        parser.error(f"{args.command}: --seed is required for sampled runs (or pass --exact)")
    return np.random.default_rng(args.seed)


def _write_output(args, text):
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)


def _emit(args, report_dict, full_text=None):
    payload = json.dumps(report_dict, sort_keys=True)
    _write_output(args, payload if full_text is None else full_text)
    summary = {k: v for k, v in report_dict.items() if not isinstance(v, (list, dict))}
    summary["schema"] = SCHEMA
    print(json.dumps(summary, sort_keys=True))


def _add_common(sub, sampling=True):
    sub.add_argument("--seed", type=int, default=None, help="master RNG seed")
    sub.add_argument("--jobs", type=int, default=1, help="worker threads (result-invariant)")
    sub.add_argument("--output", default=None, help="write the full report to this path")
    sub.add_argument("--format", choices=("json", "csv"), default="json")
    sub.add_argument("--config", default=None, help="JSON file of default option values")
    if sampling:
        sub.add_argument("--exact", action="store_true",
                         help="probability-level run of the ideal device: no sampling, no noise model")
    sub.add_argument("--phase-sigma", type=float, default=noise.DEFAULT_PHASE_SIGMA)
    sub.add_argument("--visibility", type=float, default=noise.DEFAULT_INDISTINGUISHABILITY)
    sub.add_argument("--accidental", type=float, default=0.0)
    sub.add_argument("--pairs", type=float, default=noise.DEFAULT_MEAN_PAIRS)


def build_parser():
    parser = argparse.ArgumentParser(prog="rechip", description=__doc__)
    parser.add_argument("--version", action="version", version=f"rechip {__version__}")
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("verify-chip", help="postselected-CNOT self check")
    _add_common(p, sampling=False)
    p.add_argument("--netlist", default=None, help="alternative chip layout (netlist JSON)")
    p.add_argument("--threshold", type=float, default=1e-9)

    p = subs.add_parser("benchmark-random", help="random-configuration fidelity benchmark")
    _add_common(p)
    p.add_argument("--n", type=int, default=995)

    p = subs.add_parser("bell-suite", help="prepare and tomograph the four Bell states")
    _add_common(p)
    p.add_argument("--mc-trials", type=int, default=25)

    p = subs.add_parser("chsh-manifold", help="Bell-CHSH sum over the (alpha, beta) grid")
    _add_common(p)
    p.add_argument("--step", type=float, default=experiments.DEFAULT_MANIFOLD_STEP)
    p.add_argument("--mc-trials", type=int, default=0)

    p = subs.add_parser("mixed-suite", help="generate and tomograph mixed qubit-A states")
    _add_common(p)
    p.add_argument("--n", type=int, default=119)
    p.add_argument("--targets", default=None, help="Bloch-target CSV (header rx,ry,rz)")
    p.add_argument("--glyph", action="store_true", help="use the bundled psi-glyph targets")
    p.add_argument("--mc-trials", type=int, default=0)

    p = subs.add_parser("hom-dip", help="two-photon dip against optical delay")
    _add_common(p)
    p.add_argument("--delay-max", type=float, default=1600.0, help="scan half-width, fs")
    p.add_argument("--points", type=int, default=81)

    p = subs.add_parser("fringe-fit", help="fit a heater fringe CSV (voltage,counts)")
    _add_common(p, sampling=False)
    p.add_argument("input", help="fringe CSV file")

    p = subs.add_parser("tomo", help="reconstruct a density matrix from a counts CSV")
    _add_common(p, sampling=False)
    p.add_argument("input", help="counts CSV file (setting,n00,n01,n10,n11)")
    p.add_argument("--qubits", type=int, choices=(1, 2), default=None,
                   help="inferred from the setting labels when omitted")

    return parser


def _apply_config_file(parser, argv):
    # --config supplies defaults; explicit flags win
    probe = argparse.ArgumentParser(add_help=False)
    probe.add_argument("--config", default=None)
    known, _ = probe.parse_known_args(argv)
    if known.config:
        try:
            with open(known.config) as fh:
                defaults = json.load(fh)
        except OSError as exc:
            parser.error(f"cannot read config file: {exc}")
        except json.JSONDecodeError as exc:
            print(f"error: invalid config JSON: {exc}", file=sys.stderr)
            raise SystemExit(1)
        for sub_action in parser._subparsers._group_actions:
            for sub in sub_action.choices.values():
                valid = {a.dest for a in sub._actions}
                sub.set_defaults(**{k: v for k, v in defaults.items() if k in valid})


def cmd_verify_chip(args, parser):
    netlist = None
    if args.netlist:
        try:
            with open(args.netlist) as fh:
                netlist = netlist_from_json(fh.read())
        except OSError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
        except (ValueError, KeyError) as exc:
            print(f"error: {args.netlist}: {exc}", file=sys.stderr)
            return 1
    defect = verify_cnot(netlist)
    successes = cnot_success_probs(netlist)
    report = {
        "schema": SCHEMA,
        "experiment": "verify-chip",
        "defect": defect,
        "success_probabilities": [float(s) for s in successes],
        "success_probability": float(successes.mean()),
        "threshold": args.threshold,
        "passed": bool(defect < args.threshold),
        "netlist": json.loads(
            netlist_to_json(netlist if netlist is not None else default_netlist(PhaseConfig.zeros()))
        ),
    }
    _emit(args, report)
    return 0 if report["passed"] else 2


def cmd_benchmark_random(args, parser):
    rng = _rng_from_args(args, parser)
    report = experiments.random_config_benchmark(
        n=args.n, noise=_noise_from_args(args), rng=rng, exact=args.exact, jobs=args.jobs
    )
    doc = report.to_dict()
    if args.format == "csv":
        lines = ["index,fidelity"] + [f"{i},{f!r}" for i, f in enumerate(report.fidelities)]
        _write_output(args, "\n".join(lines) + "\n")
        print(json.dumps({k: v for k, v in doc.items() if not isinstance(v, list)}, sort_keys=True))
        return 0
    _emit(args, doc)
    return 0


def cmd_bell_suite(args, parser):
    rng = _rng_from_args(args, parser)
    report = experiments.bell_state_suite(
        noise=_noise_from_args(args), rng=rng, mc_trials=args.mc_trials, jobs=args.jobs
    )
    _emit(args, report.to_dict())
    return 0


def cmd_chsh_manifold(args, parser):
    rng = _rng_from_args(args, parser)
    grid = experiments.chsh_manifold(
        step=args.step, noise=_noise_from_args(args), rng=rng,
        mc_trials=args.mc_trials, jobs=args.jobs,
    )
    doc = grid.to_dict()
    if args.format == "csv":
        _write_output(args, grid.to_csv())
        print(json.dumps({k: v for k, v in doc.items() if not isinstance(v, list)}, sort_keys=True))
        return 0
    _emit(args, doc)
    return 0


def cmd_mixed_suite(args, parser):
    rng = _rng_from_args(args, parser)
    targets = None
    if args.glyph:
        targets = experiments.load_psi_glyph()
    elif args.targets:
        try:
            targets = experiments.read_bloch_targets(args.targets)
        except OSError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
        except ValueError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
    if targets is None and rng is None:
        parser.error("mixed-suite --exact needs --targets or --glyph")
    report = experiments.mixed_state_suite(
        targets=targets, n=args.n, noise=_noise_from_args(args), rng=rng,
        mc_trials=args.mc_trials, jobs=args.jobs,
    )
    _emit(args, report.to_dict(include_states=False))
    return 0


def cmd_hom_dip(args, parser):
    rng = _rng_from_args(args, parser)
    delays = np.linspace(-args.delay_max, args.delay_max, args.points)
    scan = experiments.hom_scan(delays, noise=_noise_from_args(args), rng=rng)
    doc = scan.to_dict()
    if args.format == "csv":
        lines = ["delay_fs,expected,counts"] + [
            f"{d!r},{e!r},{c!r}"
            for d, e, c in zip(scan.delays_fs, scan.expected, scan.counts)
        ]
        _write_output(args, "\n".join(lines) + "\n")
        print(json.dumps({"schema": SCHEMA, "visibility": scan.visibility}, sort_keys=True))
        return 0
    _emit(args, doc)
    return 0


def cmd_fringe_fit(args, parser):
    try:
        samples = calibration.read_fringe_csv(args.input)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        fit = calibration.fit_fringe(samples)
    except (ValueError, calibration.CalibrationError) as exc:
        print(f"error: fit failed: {exc}", file=sys.stderr)
        return 2
    text = calibration.fit_to_json(fit)
    _write_output(args, text)
    print(text)
    return 0


def cmd_tomo(args, parser):
    try:
        records = noise.read_count_records(args.input)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if not records:
        print(f"error: {args.input}: no count records", file=sys.stderr)
        return 1
    qubits = args.qubits or (2 if len(records[0].setting) == 2 else 1)
    by_label = {r.setting: r for r in records}
    settings = tomography.canonical_settings(qubits)
    missing = [s.label for s in settings if s.label not in by_label]
    if missing:
        print(f"error: {args.input}: missing settings {missing}", file=sys.stderr)
        return 1
    result = tomography.mle_reconstruct(settings, [by_label[s.label] for s in settings])
    report = {
        "schema": SCHEMA,
        "experiment": "tomo",
        "qubits": qubits,
        "rho": json.loads(tomography.rho_to_json(result.rho)),
        "log_likelihood": result.log_likelihood,
        "iterations": result.iterations,
        "converged": result.converged,
    }
    _emit(args, report)
    return 0


_HANDLERS = {
    "verify-chip": cmd_verify_chip,
    "benchmark-random": cmd_benchmark_random,
    "bell-suite": cmd_bell_suite,
    "chsh-manifold": cmd_chsh_manifold,
    "mixed-suite": cmd_mixed_suite,
    "hom-dip": cmd_hom_dip,
    "fringe-fit": cmd_fringe_fit,
    "tomo": cmd_tomo,
}


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    _apply_config_file(parser, argv)
    args = parser.parse_args(argv)
    return _HANDLERS[args.command](args, parser)


if __name__ == "__main__":
    sys.exit(main())
