"""Command-line surface: simulate, verify, thresholds, fig2, monogamy.

Exit codes: 0 success, 1 verification failure, 2 failed security
assertion, 64 usage error. Every command is deterministic given --seed;
JSON written to standard output never contains timestamps, so identical
invocations produce byte-identical output.
"""

from __future__ import annotations

import argparse
import csv
import datetime
import io
import json
import math
import sys
from typing import Sequence

from . import __version__, analysis, protocol, temporal
from .attacks import CheatPolicy
from .protocol import AttackConfig, ProtocolConfig

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_INSECURE = 2
EXIT_USAGE = 64

SCHEMA_VERSION = 1

VERIFY_THETAS = (0.0, math.pi / 8, math.pi / 4, 3 * math.pi / 8)
VERIFY_FRACTIONS = (0.0, 0.2, 0.5, 1.0)

# Below this sample count a z-test is meaningless; flag the cell instead.
MIN_VERIFY_SAMPLES = 100

CONFIG_DEFAULTS = {
    "theta": 0.0,
    "f": 0.0,
    "rounds": 100_000,
    "bob_basis_weights": [0.25, 0.25, 0.25, 0.25],
    "policy": "unwired_random",
    "seed": 0,
    "disclose_fraction": 1.0,
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _load_config(path: str | None) -> dict:
    merged = dict(CONFIG_DEFAULTS)
    if path is not None:
        try:
            with open(path, encoding="utf-8") as handle:
                loaded = json.load(handle)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config file {path}: {exc}") from exc
        if not isinstance(loaded, dict):
            raise UsageError("config file must contain a JSON object")
        unknown = set(loaded) - set(CONFIG_DEFAULTS)
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        merged.update(loaded)
    return merged


def _protocol_config(args) -> ProtocolConfig:
    values = _load_config(getattr(args, "config", None))
    if args.theta is not None:
        values["theta"] = math.radians(args.theta) if args.degrees else args.theta
    if args.f is not None:
        values["f"] = args.f
    if args.rounds is not None:
        values["rounds"] = args.rounds
    if args.seed is not None:
        values["seed"] = args.seed
    if args.policy is not None:
        values["policy"] = args.policy
    if args.disclose_fraction is not None:
        values["disclose_fraction"] = args.disclose_fraction
    try:
        policy = CheatPolicy(values["policy"])
        attack = AttackConfig(
            theta=float(values["theta"]),
            cheat_fraction=float(values["f"]),
            cheat_policy=policy,
        )
        return ProtocolConfig(
            rounds=int(values["rounds"]),
            attack=attack,
            bob_basis_weights=tuple(float(w) for w in values["bob_basis_weights"]),
            seed=int(values["seed"]),
            disclose_fraction=float(values["disclose_fraction"]),
        )
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from exc


def _config_dict(cfg: ProtocolConfig) -> dict:
    return {
        "theta": cfg.attack.theta,
        "f": cfg.attack.cheat_fraction,
        "rounds": cfg.rounds,
        "bob_basis_weights": list(cfg.bob_basis_weights),
        "policy": cfg.attack.cheat_policy.value,
        "seed": cfg.seed,
        "disclose_fraction": cfg.disclose_fraction,
    }


def _write_manifest(out_path: str, command: list[str], config: dict, outputs: list[str]) -> str:
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "tool": "lgbb84",
        "tool_version": __version__,
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "command": command,
        "config": config,
        "outputs": outputs,
    }
    path = out_path + ".manifest.json"
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(manifest, handle, indent=2, sort_keys=True)
        handle.write("\n")
    return path


def _assess_security(summary: protocol.SimulationSummary) -> dict:
    """Invert the observed statistics and attach a verdict.

    Sampling noise can push the observed pair slightly outside the model's
    feasible region; overshoots within four standard errors are projected
    back onto the boundary, larger ones are reported as inconsistent.
    """
    out = {
        "theta_hat": None,
        "f_hat": None,
        "key_rate": None,
        "verdict": "indeterminate",
    }
    if summary.e_obs is None or summary.lambda_obs is None:
        return out

    e = min(max(summary.e_obs, 0.0), 0.5)
    lam = min(max(summary.lambda_obs, 0.0), analysis.TSIRELSON)
    allowance = (
        4.0 * (summary.lambda_obs_se or 0.0)
        + 8.0 * analysis.TSIRELSON * (summary.e_obs_se or 0.0)
        + 1e-9
    )
    feasible_lam = analysis.TSIRELSON * (1.0 - 2.0 * e)
    if lam > feasible_lam:
        if lam - feasible_lam > allowance:
            out["verdict"] = "inconsistent"
            return out
        lam = feasible_lam

    if 2.0 * e + lam / analysis.TSIRELSON < 1e-9:
        # Degenerate corner: every round was a device-attack round.
        out.update({"f_hat": 1.0, "key_rate": 0.0, "verdict": "insecure"})
        return out

    try:
        theta_hat, f_hat = analysis.estimate_attack(e, lam)
    except analysis.InconsistentObservationsError:
        out["verdict"] = "inconsistent"
        return out
    rate = analysis.key_rate(theta_hat, f_hat)
    out.update(
        {
            "theta_hat": theta_hat,
            "f_hat": f_hat,
            "key_rate": rate,
            "verdict": "secure" if rate > 0.0 else "insecure",
        }
    )
    return out


def _emit(text: str, out_path: str | None, command: list[str], config: dict) -> None:
    sys.stdout.write(text)
    if out_path:
        with open(out_path, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        _write_manifest(out_path, command, config, [out_path])


def _summary_csv(payload: dict) -> str:
    fields = [
        "rounds", "theta", "f", "policy", "seed", "n_key", "n_lgi", "n_discard",
        "e_obs", "e_obs_se", "lambda_obs", "lambda_obs_se", "eve_agreement",
        "theta_hat", "f_hat", "key_rate", "verdict",
    ]
    flat = {**payload["summary"], **payload["security"]}
    buffer = io.StringIO()
    writer = csv.writer(buffer)
    writer.writerow(fields)
    writer.writerow(["" if flat.get(k) is None else flat.get(k) for k in fields])
    return buffer.getvalue()


def cmd_simulate(args) -> int:
    cfg = _protocol_config(args)
    command = ["simulate"] + _reconstruct_flags(cfg, args)

    transcript_stream = None
    outputs = []
    try:
        if args.transcript:
            transcript_stream = open(args.transcript, "w", encoding="utf-8")
            outputs.append(args.transcript)
        summary = protocol.run_simulation(
            cfg, workers=args.workers, transcript_stream=transcript_stream
        )
    finally:
        if transcript_stream is not None:
            transcript_stream.close()

    security = _assess_security(summary)
    payload = {
        "schema_version": SCHEMA_VERSION,
        "command": "simulate",
        "config": _config_dict(cfg),
        "summary": summary.to_dict(),
        "security": security,
    }
    if args.format == "json":
        text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    else:
        text = _summary_csv(payload)
    _emit(text, args.out, command, _config_dict(cfg))

    if args.assert_secure and security["verdict"] != "secure":
        print(f"security assertion failed: verdict={security['verdict']}", file=sys.stderr)
        return EXIT_INSECURE
    return EXIT_OK


def _reconstruct_flags(cfg: ProtocolConfig, args) -> list[str]:
    flags = [
        "--theta", repr(cfg.attack.theta),
        "--f", repr(cfg.attack.cheat_fraction),
        "--rounds", str(cfg.rounds),
        "--seed", str(cfg.seed),
        "--policy", cfg.attack.cheat_policy.value,
    ]
    if getattr(args, "workers", 1) != 1:
        flags += ["--workers", str(args.workers)]
    return flags


def cmd_verify(args) -> int:
    """Monte Carlo vs closed form over the standard theta x f grid."""
    lines = []
    worst = 0.0
    insufficient = 0
    header = f"{'theta':>10} {'f':>5} {'metric':>14} {'analytic':>12} {'empirical':>12} {'z':>8}"
    lines.append(header)
    lines.append("-" * len(header))
    cell = 0
    for theta in VERIFY_THETAS:
        for f in VERIFY_FRACTIONS:
            cfg = ProtocolConfig(
                rounds=args.rounds,
                attack=AttackConfig(theta=theta, cheat_fraction=f),
                seed=args.seed + cell,
            )
            cell += 1
            summary = protocol.run_simulation(cfg, workers=args.workers)
            point = analysis.closed_form_rates(theta, f)

            min_cell = min(
                (summary.lgi_counts.total(key) for key in protocol.LGI_QUAD_KEYS),
                default=0,
            )
            checks = [
                ("e_obs", point.e_ab_observed, summary.e_obs, summary.e_obs_se,
                 summary.n_disclosed),
                ("lambda", point.lgi_ab, summary.lambda_obs, summary.lambda_obs_se,
                 min_cell),
                (
                    "eve_agreement",
                    (1.0 - f) * (1.0 - point.e_ae) + f,
                    summary.eve_agreement,
                    _binomial_se(summary.eve_agreement, summary.n_key),
                    summary.n_key,
                ),
            ]
            for name, expected, observed, se, samples in checks:
                if observed is None or samples < MIN_VERIFY_SAMPLES:
                    lines.append(
                        f"{theta:>10.6f} {f:>5.2f} {name:>14} {expected:>12.6f}"
                        f" {'n/a':>12} insufficient statistics"
                    )
                    insufficient += 1
                    continue
                z = _z_score(observed, expected, se)
                worst = max(worst, abs(z))
                lines.append(
                    f"{theta:>10.6f} {f:>5.2f} {name:>14} {expected:>12.6f}"
                    f" {observed:>12.6f} {z:>8.2f}"
                )
    lines.append(f"max |z| = {worst:.2f}; threshold 4.0; insufficient cells: {insufficient}")
    status = EXIT_OK if worst <= 4.0 else EXIT_VERIFY_FAILED
    lines.append("VERIFY PASS" if status == EXIT_OK else "VERIFY FAIL")
    print("\n".join(lines))
    return status


def _binomial_se(p: float | None, n: int) -> float | None:
    if p is None or n <= 0:
        return None
    return math.sqrt(max(p * (1.0 - p), 0.0) / n)


def _z_score(observed: float, expected: float, se: float | None) -> float:
    diff = observed - expected
    if not se:
        return 0.0 if diff == 0.0 else math.inf
    return diff / se


def cmd_thresholds(args) -> int:
    fractions = args.f if args.f else [0.0, 0.2]
    points = []
    buffer = io.StringIO()
    writer = csv.writer(buffer)
    writer.writerow(["f", "theta_star", "e_ab_star", "e_prime_ab_star"])
    for f in fractions:
        if not 0.0 <= f < 1.0:
            raise UsageError(f"threshold fraction must lie in [0, 1), got {f}")
        point = analysis.security_threshold(f)
        points.append(point)
        writer.writerow([f, point.theta_star, point.e_ab_star, point.e_ab_observed_star])
    command = ["thresholds"] + [x for f in fractions for x in ("--f", repr(f))]
    _emit(buffer.getvalue(), args.out, command, {"f": fractions})
    if args.plot:
        from . import report

        report.render_thresholds(points, args.plot)
    return EXIT_OK


def cmd_fig2(args) -> int:
    fractions = args.f if args.f else [0.0, 0.2]
    if args.points < 2:
        raise UsageError("--points must be at least 2")
    grid = [i * (math.pi / 2) / (args.points - 1) for i in range(args.points)]
    rows = analysis.fig2_data(fractions, grid)
    buffer = io.StringIO()
    writer = csv.writer(buffer)
    writer.writerow(["f", "theta", "e", "lambda", "K"])
    for row in rows:
        writer.writerow([row.cheat_fraction, row.theta, row.e_ab, row.lgi_ab, row.key_rate])
    command = ["fig2"] + [x for f in fractions for x in ("--f", repr(f))]
    command += ["--points", str(args.points)]
    _emit(buffer.getvalue(), args.out, command, {"f": fractions, "points": args.points})
    if args.plot:
        from . import report

        report.render_rate_curves(rows, args.plot)
    return EXIT_OK


def cmd_monogamy(args) -> int:
    sequential_target = temporal.SEQUENTIAL_MONOGAMY_BOUND
    anchored_target = temporal.ANCHORED_MONOGAMY_BOUND

    seq_best, seq_detail = temporal.search_sequential_saturation(seed=args.seed)
    anch_best, anch_detail = temporal.search_anchored_saturation(seed=args.seed)
    seq_random = temporal.search_sequential_bound(args.samples, seed=args.seed)
    anch_random = temporal.search_anchored_bound(args.samples, seed=args.seed)

    lines = [
        "monogamy of sequential correlations (order: sender -> attacker -> receiver)",
        f"  sequential search best:  {seq_best:.9f}  (target 3*sqrt(2) = {sequential_target:.9f})",
        f"    split: lambda_ae = {seq_detail.lambda_ae:.9f}, lambda_ab = {seq_detail.lambda_ab:.9f}",
        f"  anchored search best:    {anch_best:.9f}  (target 4*sqrt(2) = {anchored_target:.9f})",
        f"    split: lambda_ae = {anch_detail.lambda_ae:.9f}, lambda_eb = {anch_detail.lambda_eb:.9f}",
        f"  no-signaling reference:  {temporal.NO_SIGNALING_BOUND:.1f}",
        f"  sequential best exceeds no-signaling bound: {seq_best > temporal.NO_SIGNALING_BOUND}",
        f"  random bound check ({args.samples} attacker configurations at the test settings):",
        f"    sequential max = {seq_random:.9f}  (<= 3*sqrt(2): {seq_random <= sequential_target + 1e-9})",
        f"    anchored max   = {anch_random:.9f}  (<= 4*sqrt(2): {anch_random <= anchored_target + 1e-9})",
    ]
    print("\n".join(lines))
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="lgbb84", description=__doc__)
    parser.add_argument("--version", action="version", version=f"lgbb84 {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    sim = sub.add_parser("simulate", help="run the protocol simulation")
    sim.add_argument("--config", help="JSON config file; flags override its values")
    sim.add_argument("--theta", type=float, help="channel attack angle (radians)")
    sim.add_argument("--degrees", action="store_true", help="interpret --theta in degrees")
    sim.add_argument("--f", type=float, help="device-attack (cheat state) fraction")
    sim.add_argument("--rounds", type=int, help="number of protocol rounds")
    sim.add_argument("--seed", type=int, help="simulation seed")
    sim.add_argument(
        "--policy", choices=[p.value for p in CheatPolicy], help="cheat-device wiring policy"
    )
    sim.add_argument("--disclose-fraction", type=float, help="fraction of key publicly compared")
    sim.add_argument("--workers", type=int, default=1, help="parallel chunk workers")
    sim.add_argument("--out", help="also write the summary to this file (plus manifest)")
    sim.add_argument("--format", choices=["json", "csv"], default="json")
    sim.add_argument("--transcript", help="write one JSON object per round to this file")
    sim.add_argument(
        "--assert-secure",
        action="store_true",
        help="exit with status 2 unless the security verdict is 'secure'",
    )
    sim.set_defaults(func=cmd_simulate)

    ver = sub.add_parser("verify", help="check Monte Carlo results against closed forms")
    ver.add_argument("--rounds", type=int, default=1_000_000, help="rounds per grid cell")
    ver.add_argument("--seed", type=int, default=0)
    ver.add_argument("--workers", type=int, default=1)
    ver.set_defaults(func=cmd_verify)

    thr = sub.add_parser("thresholds", help="tolerable-error thresholds per attack fraction")
    thr.add_argument("--f", type=float, action="append", help="attack fraction (repeatable)")
    thr.add_argument("--out", help="write CSV here (plus manifest)")
    thr.add_argument("--plot", help="render the threshold curves to this image file")
    thr.set_defaults(func=cmd_thresholds)

    fig = sub.add_parser("fig2", help="rate-model curves: error vs inequality value and key rate")
    fig.add_argument("--f", type=float, action="append", help="attack fraction (repeatable)")
    fig.add_argument("--points", type=int, default=200, help="theta grid size")
    fig.add_argument("--out", help="write CSV here (plus manifest)")
    fig.add_argument("--plot", help="render the curves to this image file")
    fig.set_defaults(func=cmd_fig2)

    mon = sub.add_parser("monogamy", help="saturation searches for the monogamy bounds")
    mon.add_argument("--samples", type=int, default=10_000, help="random configurations")
    mon.add_argument("--seed", type=int, default=0)
    mon.set_defaults(func=cmd_monogamy)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"lgbb84: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError,) as exc:
        print(f"lgbb84: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
