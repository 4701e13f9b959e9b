"""Command-line front end: ``simulate``, ``analyze``, ``keyrate``, ``attack-sweep``.

Exit status: 0 success, 2 invalid configuration or arguments, 3 I/O error,
4 malformed trace/summary/report, 5 gate rejection.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .analytic import expected_curves
from .attacks import Composite, InterceptResend, Saturation, split_attack
from .config import ConfigError, RunConfig, attack_to_dict, load_config
from .estimator import R2_MIN, RESIDUAL_MAX_SNU, GroupStats, gate, gate_block, group_stats
from .keyrate import LinkParams, conservative_rate
from .params import QUADRATURES
from .scenarios import desk_thresholds
from .serialization import (TraceParseError, read_json, read_summary, read_trace,
                            report_payload, sniff_kind, verdicts_from_report, write_curves,
                            write_json, write_summary, write_trace)
from .simulate import simulate_block, simulate_stats

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_IO = 3
EXIT_PARSE = 4
EXIT_REJECTED = 5


class GateRejected(Exception):
    code = "GATE_REJECTED"


def _manifest(cfg: RunConfig, files: dict) -> dict:
    p = cfg.system
    return {
        "version": __version__,
        "seed": p.seed,
        "config_hash": cfg.source_hash,
        "system": {"v_a_snu": p.v_a, "t_channel": p.t_channel, "eta": p.eta,
                   "eps_mod_snu": p.eps_mod, "v_el_snu": p.v_el, "gain_v2": p.gain_v2,
                   "n_per_group": p.n_per_group},
        "ratios": list(cfg.schedule.ratios),
        "attack": attack_to_dict(cfg.attack),
        "thresholds": cfg.thresholds,
        "files": files,
    }


def _load(args) -> RunConfig:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    return cfg


def cmd_simulate(args) -> int:
    cfg = _load(args)
    out = Path(args.out or cfg.output.get("dir", "."))
    out.mkdir(parents=True, exist_ok=True)
    files = {}
    if args.summary_only:
        stats = simulate_stats(cfg.system, cfg.schedule, cfg.attack)
    else:
        trace = simulate_block(cfg.system, cfg.schedule, cfg.attack)
        trace_path = out / cfg.output.get("trace", "trace.csv")
        write_trace(trace_path, trace)
        files["trace"] = trace_path.name
        stats = {}
        for q in QUADRATURES:
            k, a, b = trace.select(q)
            stats[q] = group_stats(a, b, k, cfg.schedule.ratios, q)
    summary_path = out / cfg.output.get("summary", "summary.csv")
    write_summary(summary_path, stats)
    files["summary"] = summary_path.name
    manifest_path = out / cfg.output.get("manifest", "manifest.json")
    write_json(manifest_path, _manifest(cfg, files))
    print(json.dumps({"out": str(out), "files": files, "seed": cfg.system.seed,
                      "pulses_per_quadrature": sum(g.n for g in stats["X"])}))
    return EXIT_OK


def _read_manifest(input_path: Path) -> dict:
    manifest = input_path.parent / "manifest.json"
    return read_json(manifest) if manifest.exists() else {}


def _find_ratios(args, input_path: Path):
    if args.config:
        return load_config(args.config).schedule.ratios
    ratios = _read_manifest(input_path).get("ratios")
    return tuple(ratios) if ratios else None


def _thresholds(args, input_path: Path, n_groups_min: int) -> dict:
    """Defaults, then config or manifest thresholds, then --desk-scale, then flags."""
    th = {"r2_min": R2_MIN, "residual_max_snu": RESIDUAL_MAX_SNU, "atten_r2_min": R2_MIN}
    if args.config:
        th.update(load_config(args.config).thresholds)
    else:
        th.update(_read_manifest(input_path).get("thresholds") or {})
    if args.desk_scale:
        th["residual_max_snu"] = desk_thresholds(n_groups_min)["residual_max_snu"]
    for key in ("r2_min", "residual_max_snu", "atten_r2_min"):
        v = getattr(args, key)
        if v is not None:
            th[key] = v
    return th


def cmd_analyze(args) -> int:
    path = Path(args.input)
    kind = sniff_kind(path)
    if kind == "trace":
        ratios = _find_ratios(args, path)
        if ratios is None:
            raise ConfigError("--config", "trace analysis needs the schedule "
                              "(manifest.json next to the trace or --config)")
        trace = read_trace(path)
        if trace.atten_index.max() >= len(ratios):
            raise TraceParseError(path, 0, "atten_index exceeds the schedule length")
        stats = {}
        for q in QUADRATURES:
            k, a, b = trace.select(q)
            if k.size:
                stats[q] = group_stats(a, b, k, ratios, q)
    else:
        stats = read_summary(path)
    n_min = min(g.n for st in stats.values() for g in st)
    th = _thresholds(args, path, n_min)
    block = gate_block(stats, **th)
    out = Path(args.out or path.parent)
    out.mkdir(parents=True, exist_ok=True)
    curves = write_curves(out, stats)
    report = report_payload(block, th, {"source": str(path),
                                        "curves": [c.name for c in curves]})
    write_json(out / "report.json", report)
    print(json.dumps({"accepted": block.accepted, "reject_reasons": block.reject_reasons,
                      "report": str(out / "report.json")}))
    return EXIT_OK if block.accepted else EXIT_REJECTED


def cmd_keyrate(args) -> int:
    slope = args.slope
    if args.report:
        report = read_json(args.report)
        try:
            block = verdicts_from_report(report)
        except (KeyError, TypeError) as exc:
            raise TraceParseError(args.report, 0, f"not a gate report ({exc})") from None
        if not block.accepted:
            raise GateRejected(f"report {args.report} was rejected: {block.reject_reasons}")
        if slope is None:
            slope = max(v.excess_noise_slope for v in block.quadratures.values())
    if slope is None:
        slope = 2e-3
    link = LinkParams(length_km=args.length_km, eta=args.eta, v_el=args.v_el, beta=args.beta,
                      snr_target=args.snr, slope_margin=args.slope_margin)
    result = conservative_rate(link, slope, xi_override=args.xi_override)
    text = json.dumps(result, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n")
    print(text)
    return EXIT_OK


def _sweep_attack(base, param, value):
    ir, wl, sat = split_attack(base)
    if param == "delta":
        sat = Saturation(sat.alpha if sat else 4.0, value)
    elif param == "alpha":
        sat = Saturation(value, sat.delta if sat else 4.0)
    elif param == "mu":
        ir = InterceptResend(value)
    parts = tuple(a for a in (ir, wl, sat) if a is not None)
    return Composite(parts) if parts else None


def cmd_attack_sweep(args) -> int:
    cfg = _load(args)
    values = [float(v) for v in args.values.split(",")]
    rows = []
    for value in values:
        system = cfg.system
        if args.param == "v_b":
            scale = value / (system.eta * system.t_channel)
            system = system.with_(v_a=scale, eps_mod=system.excess_slope * scale)
        attack = _sweep_attack(cfg.attack, args.param, value)
        if args.method == "analytic":
            s, n = expected_curves(system, cfg.schedule, attack)
            stats = [GroupStats(k, "X", system.n_per_group, s[k], n[k], "SNU", r)
                     for k, r in enumerate(cfg.schedule.ratios)]
            per_q = {"X": stats}
        else:
            per_q = simulate_stats(system, cfg.schedule, attack)
        for q, stats in per_q.items():
            v, nf, _ = gate(stats, **cfg.thresholds)
            rows.append([args.param, value, q, v.r2_noise_signal, v.r2_signal_atten,
                         v.excess_noise_slope, v.max_residual_snu, v.accepted,
                         ";".join(v.reject_reasons)])
    header = ["param", "value", "quadrature", "r2_noise_signal", "r2_signal_atten",
              "excess_noise_slope", "max_residual_snu", "accepted", "reject_reasons"]
    out = Path(args.out) if args.out else None
    fh = open(out, "w", newline="") if out else sys.stdout
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    finally:
        if out:
            fh.close()
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cvqkd-shotnoise",
                                description="Shot-noise measurement simulator and gate.")
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="cmd", required=True)

    s = sub.add_parser("simulate", help="Simulate a block and write trace + manifest.")
    s.add_argument("--config", required=True)
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--out", default=None, help="Output directory.")
    s.add_argument("--summary-only", action="store_true",
                   help="Write per-group statistics instead of the full pulse trace.")
    s.set_defaults(func=cmd_simulate)

    a = sub.add_parser("analyze", help="Gate a trace or group summary; write report + curves.")
    a.add_argument("input", help="trace.csv or summary.csv")
    a.add_argument("--config", default=None, help="Run config (schedule and thresholds).")
    a.add_argument("--out", default=None)
    a.add_argument("--r2-min", type=float, default=None)
    a.add_argument("--residual-max-snu", type=float, default=None)
    a.add_argument("--atten-r2-min", type=float, default=None)
    a.add_argument("--desk-scale", action="store_true",
                   help="Scale the residual budget by sqrt(5e8 / group size).")
    a.set_defaults(func=cmd_analyze)

    k = sub.add_parser("keyrate", help="Conservative collective key rate.")
    k.add_argument("--report", default=None, help="Accepted gate report (report.json).")
    k.add_argument("--slope", type=float, default=None,
                   help="Measured noise-vs-signal slope; default from report or 2e-3.")
    k.add_argument("--length-km", type=float, default=80.5)
    k.add_argument("--eta", type=float, default=0.322)
    k.add_argument("--v-el", type=float, default=0.01)
    k.add_argument("--beta", type=float, default=0.948)
    k.add_argument("--snr", type=float, default=0.075)
    k.add_argument("--slope-margin", type=float, default=1e-3)
    k.add_argument("--xi-override", type=float, default=None,
                   help="Use this Alice-side excess noise (SNU) instead of the derived one.")
    k.add_argument("--out", default=None)
    k.set_defaults(func=cmd_keyrate)

    w = sub.add_parser("attack-sweep", help="R^2 vs an attack parameter.")
    w.add_argument("--config", required=True)
    w.add_argument("--seed", type=int, default=None)
    w.add_argument("--param", choices=["delta", "alpha", "mu", "v_b"], required=True)
    w.add_argument("--values", required=True, help="Comma-separated values.")
    w.add_argument("--method", choices=["analytic", "montecarlo"], default="analytic")
    w.add_argument("--out", default=None, help="CSV path (stdout if omitted).")
    w.set_defaults(func=cmd_attack_sweep)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2))
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except TraceParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except GateRejected as exc:
        print(f"{GateRejected.code}: {exc}", file=sys.stderr)
        return EXIT_REJECTED
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
