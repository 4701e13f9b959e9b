"""Trace, summary, report and curve files.

Floats are written with 17 significant digits so that every value reads back
bit-identical.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .estimator import BlockVerdict, GateVerdict, GroupStats, fit_affine, estimator_sigma
from .params import QUADRATURES
from .simulate import PulseTrace

TRACE_HEADER = ["index", "quadrature", "atten_index", "alice_value", "bob_value_volts"]
SUMMARY_HEADER = ["quadrature", "atten_index", "ratio", "count", "signal_var", "noise_var", "unit"]


class TraceParseError(ValueError):
    """Malformed trace or summary file; ``row`` is the 1-based line number."""

    def __init__(self, path, row, message):
        self.path = str(path)
        self.row = row
        super().__init__(f"{path}: row {row}: {message}")


def _g17(x) -> str:
    return format(float(x), ".17g")


def write_trace(path, trace: PulseTrace, chunk: int = 200_000) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(TRACE_HEADER) + "\n")
        for start in range(0, len(trace), chunk):
            sl = slice(start, start + chunk)
            rows = zip(trace.index[sl].tolist(), trace.quadrature[sl].tolist(),
                       trace.atten_index[sl].tolist(), trace.alice_value[sl].tolist(),
                       trace.bob_value_volts[sl].tolist())
            fh.write("".join(f"{i},{QUADRATURES[q]},{k},{a:.17g},{b:.17g}\n"
                             for i, q, k, a, b in rows))


def read_trace(path) -> PulseTrace:
    index, quad, atten, alice, bob = [], [], [], [], []
    qmap = {"X": 0, "P": 1}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != TRACE_HEADER:
            raise TraceParseError(path, 1, f"expected header {','.join(TRACE_HEADER)}")
        for lineno, row in enumerate(reader, start=2):
            if len(row) != 5:
                raise TraceParseError(path, lineno, f"expected 5 fields, got {len(row)}")
            try:
                index.append(int(row[0]))
                quad.append(qmap[row[1]])
                atten.append(int(row[2]))
                alice.append(float(row[3]))
                bob.append(float(row[4]))
            except (ValueError, KeyError) as exc:
                raise TraceParseError(path, lineno, f"bad value ({exc})") from None
            if atten[-1] < 0:
                raise TraceParseError(path, lineno, "negative atten_index")
    if not index:
        raise TraceParseError(path, 2, "trace holds no pulses")
    kmax = max(atten)
    return PulseTrace(np.array(index, dtype=np.int64), np.array(quad, dtype=np.uint8),
                      np.array(atten, dtype=np.int8 if kmax <= 127 else np.int32),
                      np.array(alice), np.array(bob))


def write_summary(path, stats_by_quadrature: dict) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_HEADER)
        for q, stats in stats_by_quadrature.items():
            for g in sorted(stats, key=lambda g: g.atten_index):
                w.writerow([q, g.atten_index, _g17(g.ratio), g.n, _g17(g.s), _g17(g.n_var), g.unit])


def read_summary(path) -> dict:
    out = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        if next(reader, None) != SUMMARY_HEADER:
            raise TraceParseError(path, 1, f"expected header {','.join(SUMMARY_HEADER)}")
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(SUMMARY_HEADER):
                raise TraceParseError(path, lineno, f"expected {len(SUMMARY_HEADER)} fields")
            try:
                g = GroupStats(atten_index=int(row[1]), quadrature=row[0], n=int(row[3]),
                               s=float(row[4]), n_var=float(row[5]), unit=row[6],
                               ratio=float(row[2]))
            except ValueError as exc:
                raise TraceParseError(path, lineno, str(exc)) from None
            if g.quadrature not in QUADRATURES:
                raise TraceParseError(path, lineno, f"unknown quadrature {g.quadrature!r}")
            out.setdefault(g.quadrature, []).append(g)
    if not out:
        raise TraceParseError(path, 2, "summary holds no groups")
    return out


def sniff_kind(path) -> str:
    """``'trace'`` or ``'summary'`` from the header line."""
    with open(path, newline="") as fh:
        header = fh.readline().strip().split(",")
    if header == TRACE_HEADER:
        return "trace"
    if header == SUMMARY_HEADER:
        return "summary"
    raise TraceParseError(path, 1, "neither a trace nor a group-summary header")


def _nan_to_none(x):
    if isinstance(x, float) and math.isnan(x):
        return None
    if isinstance(x, dict):
        return {k: _nan_to_none(v) for k, v in x.items()}
    if isinstance(x, list):
        return [_nan_to_none(v) for v in x]
    return x


def _none_to_nan(d: dict) -> dict:
    return {k: (float("nan") if v is None else v) for k, v in d.items()}


def write_json(path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(_nan_to_none(payload), fh, indent=2, sort_keys=False, allow_nan=False)
        fh.write("\n")


def read_json(path) -> dict:
    with open(path) as fh:
        return json.load(fh)


def report_payload(block: BlockVerdict, thresholds: dict, extra: dict | None = None) -> dict:
    payload = block.to_dict()
    payload["thresholds"] = dict(thresholds)
    if extra:
        payload.update(extra)
    return payload


def verdicts_from_report(report: dict) -> BlockVerdict:
    quads = {}
    for q, d in report["quadratures"].items():
        d = _none_to_nan(d)
        d["reject_reasons"] = list(d["reject_reasons"])
        quads[q] = GateVerdict(**d)
    return BlockVerdict(quads)


def write_curves(out_dir, stats_by_quadrature: dict) -> list:
    """Plot-ready CSVs: noise vs signal and signal vs ratio, per quadrature (SNU)."""
    out_dir = Path(out_dir)
    written = []
    for q, stats in stats_by_quadrature.items():
        stats = sorted(stats, key=lambda g: g.atten_index)
        s = np.array([g.s for g in stats])
        n = np.array([g.n_var for g in stats])
        r = np.array([g.ratio for g in stats])
        try:
            nf = fit_affine(s, n)
            af = fit_affine(r, s)
        except ValueError:
            continue
        shot = nf.intercept if nf.intercept > 0 else 1.0
        path = out_dir / f"noise_vs_signal_{q}.csv"
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["atten_index", "ratio", "count", "signal_snu", "noise_snu",
                        "fitted_noise_snu", "residual_snu", "noise_err_3sigma_snu"])
            for g, fitted, res in zip(stats, nf.predict(s), nf.residuals):
                w.writerow([g.atten_index, _g17(g.ratio), g.n, _g17(g.s / shot), _g17(g.n_var / shot),
                            _g17(fitted / shot), _g17(res / shot),
                            _g17(3 * estimator_sigma(g.n) * g.n_var / shot)])
        written.append(path)
        path = out_dir / f"signal_vs_ratio_{q}.csv"
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["atten_index", "ratio", "signal_snu", "fitted_signal_snu"])
            for g, fitted in zip(stats, af.predict(r)):
                w.writerow([g.atten_index, _g17(g.ratio), _g17(g.s / shot), _g17(fitted / shot)])
        written.append(path)
    return written
