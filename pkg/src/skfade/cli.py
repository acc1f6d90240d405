"""Command-line front end.

Subcommands:
  rate-sweep     achievable rate along an N, D or sigma_z grid (CSV/JSON)
  simulate       Monte Carlo error-rate campaign with budget audit (JSON)
  verify-lemmas  path-identity and variance-ordering checks
  params         dump the precomputed schedule for a configuration (JSON)

Configuration is a flat key=value file plus repeatable --set overrides;
overrides win.  Every run echoes the fully resolved configuration to stderr
(and embeds it in JSON outputs).  Exit codes: 0 success, 1 invalid
configuration, 2 a verification check failed.
"""

import argparse
import json
import math
import sys

import numpy as np

from . import _rng
from .coupled import run_coupled_batch, variance_recursion_oracle
from .errors import SkfadeError, InvalidConfig
from .montecarlo import (
    _BatchStats,
    _report_from_stats,
    error_budget_check,
    simulate_batch,
)
from .params import (
    ChannelParams,
    CodingConfig,
    CsiEstimate,
    achievable_rate,
    build_schedule,
    compute_H,
    q_inverse,
    select_alphabet,
    validate_pair,
)

SWEEP_AXES = ("N", "D", "sigma_z")

# key -> (parser, default)
_CONFIG_SCHEMA = {
    "h": (float, 0.9),
    "sigma_sq": (float, 1.0),
    "P": (float, 10.0),
    "P_tilde": (float, 10.0),
    "sigma_z": (float, 1e-3),
    "h_hat": (float, 0.9),
    "D": (float, 0.0),
    "N": (int, 100),
    "epsilon": (float, 1e-6),
    "M": (int, None),
    "trials": (int, 10000),
    "seed": (int, 0),
    "sweep_axis": (str, None),
    "sweep_start": (float, None),
    "sweep_stop": (float, None),
    "sweep_step": (float, None),
    "out": (str, None),
    "format": (str, "csv"),
    "qfc_sign": (str, "quantizer"),
    "dither": (bool, True),
}


def _parse_bool(text):
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise InvalidConfig(f"expected a boolean, got {text!r}")


def _parse_value(key, text):
    if key not in _CONFIG_SCHEMA:
        raise InvalidConfig(f"unknown configuration key {key!r}")
    kind = _CONFIG_SCHEMA[key][0]
    if kind is bool:
        return _parse_bool(text)
    try:
        return kind(text)
    except ValueError as exc:
        raise InvalidConfig(f"bad value for {key}: {text!r}") from exc


def load_config(path=None, overrides=()):
    """Defaults, then the key=value file, then --set overrides."""
    cfg = {k: d for k, (_, d) in _CONFIG_SCHEMA.items()}
    if path is not None:
        with open(path, encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, 1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise InvalidConfig(f"{path}:{lineno}: expected key=value, got {raw!r}")
                key, _, value = line.partition("=")
                key = key.strip()
                cfg[key] = _parse_value(key, value.strip())
    for item in overrides:
        if "=" not in item:
            raise InvalidConfig(f"--set expects key=value, got {item!r}")
        key, _, value = item.partition("=")
        key = key.strip()
        cfg[key] = _parse_value(key, value.strip())
    return cfg


def _channel(cfg):
    return ChannelParams(h=cfg["h"], sigma_sq=cfg["sigma_sq"], P=cfg["P"],
                         P_tilde=cfg["P_tilde"], sigma_z=cfg["sigma_z"])


def _estimate_of(cfg):
    return CsiEstimate(h_hat=cfg["h_hat"], D=cfg["D"])


def _coding(cfg, ch, est):
    m = cfg["M"]
    if m is None:
        rate = achievable_rate(ch, est, cfg["N"], cfg["epsilon"]).rate
        m = select_alphabet(rate, cfg["N"])
    return CodingConfig(N=cfg["N"], epsilon=cfg["epsilon"], M=m)


def _fmt(x) -> str:
    """12 significant digits, locale-free."""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".12g")


def _echo_config(cfg):
    for key in _CONFIG_SCHEMA:
        print(f"# {key}={cfg[key]}", file=sys.stderr)


def _emit(text, out_path):
    if out_path is None:
        sys.stdout.write(text)
    else:
        with open(out_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _config_doc(cfg):
    return {k: cfg[k] for k in _CONFIG_SCHEMA}


def _sweep_values(cfg):
    axis = cfg["sweep_axis"]
    if axis not in SWEEP_AXES:
        raise InvalidConfig(
            f"rate-sweep needs sweep_axis set to one of {SWEEP_AXES}, got {axis!r}")
    start, stop, step = cfg["sweep_start"], cfg["sweep_stop"], cfg["sweep_step"]
    if start is None or stop is None or step is None:
        raise InvalidConfig("sweep_start, sweep_stop and sweep_step are all required")
    if step <= 0 or stop < start:
        raise InvalidConfig("need sweep_step > 0 and sweep_stop >= sweep_start")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    values = start + step * np.arange(count)
    # land exactly on the stop endpoint (0 + 6*0.15 != 0.9 in binary)
    if count > 1 and abs(values[-1] - stop) <= 1e-9 * max(1.0, abs(stop)):
        values[-1] = stop
    if axis == "N":
        ints = np.rint(values).astype(int)
        if np.any(np.abs(values - ints) > 1e-9) or np.any(ints < 2):
            raise InvalidConfig("an N sweep requires integer values >= 2")
        return axis, [int(v) for v in ints]
    return axis, [float(v) for v in values]


def _rate_row(cfg, axis, value):
    params = dict(cfg)
    params[axis] = value
    ch = _channel(params)
    est = _estimate_of(params)
    n = int(params["N"])
    eps = params["epsilon"]
    point = achievable_rate(ch, est, n, eps)
    h_pess = compute_H(est)
    p_m = eps / (2.0 * (n - 1))
    qinv = q_inverse(p_m / 2.0)
    root3p = math.sqrt(3.0 * ch.P_tilde)
    a = ((root3p - ch.sigma_z) / qinv) ** 2
    b = (abs(root3p - ch.sigma_z) / qinv + ch.sigma_z) ** 2
    ell = q_inverse(eps / 4.0) ** 2 / 3.0
    if h_pess > 0.0:
        c = h_pess * h_pess * ch.snr
        snr_n = 2.0 ** (math.log2(c) + (n - 1) * math.log2(1.0 + c * a / b))
    else:
        snr_n = 0.0
    return (value, point.rate, h_pess, a, b, ell, snr_n)


def cmd_rate_sweep(cfg) -> int:
    axis, values = _sweep_values(cfg)
    rows = [_rate_row(cfg, axis, v) for v in values]
    if cfg["format"] == "json":
        doc = {
            "config": _config_doc(cfg),
            "results": {
                "rows": [
                    {axis: v, "rate": r, "H": h, "A": a, "B": b, "L": ell,
                     "snr_N_H": s}
                    for (v, r, h, a, b, ell, s) in rows
                ],
            },
        }
        _emit(json.dumps(doc, indent=2) + "\n", cfg["out"])
    else:
        lines = [f"{axis},rate,H,A,B,L,snr_N_H"]
        for row in rows:
            lines.append(",".join(_fmt(x) for x in row))
        _emit("\n".join(lines) + "\n", cfg["out"])
    return 0


def _lemma2_grid(base_cfg):
    """(h, h_hat, D) triples with |h - h_hat| <= D and H > 0."""
    triples = []
    for h_hat in (-1.5, -0.9, -0.45, 0.3, 0.62, 0.9, 1.3, 2.1):
        for frac in (0.0, 0.1, 0.25, 0.4):
            d = frac * abs(h_hat)
            for t in (-1.0, -0.5, 0.0, 0.5, 1.0):
                h = h_hat + t * d
                # (h_hat + d) - h_hat can exceed d by one ulp; widen D to match
                triples.append((h, h_hat, max(d, abs(h - h_hat))))
    triples.append((base_cfg["h"], base_cfg["h_hat"], base_cfg["D"]))
    return triples


def _check_lemma2(cfg):
    """Variance ordering sigma_i^2 <= sigma_i^2(H) over the triple grid."""
    n = int(cfg["N"])
    coding = CodingConfig(N=n, epsilon=cfg["epsilon"], M=2)
    skipped = 0
    for h, h_hat, d in _lemma2_grid(cfg):
        est = CsiEstimate(h_hat=h_hat, D=d)
        if compute_H(est) == 0.0 or h == 0.0:
            skipped += 1
            continue
        ch = ChannelParams(h=h, sigma_sq=cfg["sigma_sq"], P=cfg["P"],
                           P_tilde=cfg["P_tilde"], sigma_z=cfg["sigma_z"])
        sched = build_schedule(ch, est, coding)
        if not np.all(sched.sigma_sq_true <= sched.sigma_sq_H + 1e-12):
            return False, (h, h_hat, d), skipped
    return True, None, skipped


def _campaign(cfg, want_lemma1=True, chunk_size=1 << 16):
    """Chunked campaign; optionally verifies the path identity on every path.

    Returns (report, budget, lemma1_ok, first_bad_trial).
    """
    ch = _channel(cfg)
    est = _estimate_of(cfg)
    validate_pair(ch, est)
    coding = _coding(cfg, ch, est)
    schedule = build_schedule(ch, est, coding)
    trials = int(cfg["trials"])
    if trials < 1:
        raise InvalidConfig("trials must be >= 1")
    acc = _BatchStats()
    lemma1_ok = True
    first_bad = None
    for start in range(0, trials, chunk_size):
        idx = range(start, min(start + chunk_size, trials))
        batch, traces = simulate_batch(ch, est, coding, schedule, cfg["seed"], idx,
                                       qfc_sign=cfg["qfc_sign"], dither=cfg["dither"],
                                       want_traces=want_lemma1)
        acc = acc.merge(batch)
        if want_lemma1:
            _, alias_p, pam_p = run_coupled_batch(
                traces.forward_noise, traces.residuals, schedule, ch)
            union_orig = traces.aliasing.any(axis=1) | traces.pam_error
            union_coup = alias_p.any(axis=1) | pam_p
            bad = union_orig != union_coup
            if np.any(bad) and first_bad is None:
                lemma1_ok = False
                first_bad = start + int(np.argmax(bad))
    report = _report_from_stats(acc, coding, cfg["seed"])
    budget = error_budget_check(report, coding, schedule)
    return report, budget, lemma1_ok, first_bad


def cmd_simulate(cfg) -> int:
    report, budget, lemma1_ok, _ = _campaign(cfg)
    lemma2_ok, _, _ = _check_lemma2(cfg)
    doc = {
        "config": _config_doc(cfg),
        "results": report.to_dict(),
        "checks": {
            "budget": budget.passed,
            "lemma1": lemma1_ok,
            "lemma2": lemma2_ok,
            "failures": list(budget.failures),
        },
    }
    _emit(json.dumps(doc, indent=2) + "\n", cfg["out"])
    if not budget.passed:
        for msg in budget.failures:
            print(f"budget check failed: {msg}", file=sys.stderr)
        return 2
    return 0


def cmd_verify_lemmas(cfg) -> int:
    report_lines = []
    ch = _channel(cfg)
    est = _estimate_of(cfg)
    _, _, lemma1_ok, first_bad = _campaign(cfg)
    report_lines.append(
        f"lemma1: {'PASS' if lemma1_ok else 'FAIL'} ({cfg['trials']} paths)")
    lemma2_ok, counterexample, skipped = _check_lemma2(cfg)
    grid_n = len(_lemma2_grid(cfg)) - skipped
    report_lines.append(
        f"lemma2: {'PASS' if lemma2_ok else 'FAIL'} ({grid_n} grid points, "
        f"{skipped} skipped with H = 0)")
    if cfg["format"] == "json":
        doc = {
            "config": _config_doc(cfg),
            "checks": {"lemma1": lemma1_ok, "lemma2": lemma2_ok},
            "details": {"paths": cfg["trials"], "grid_points": grid_n,
                        "skipped": skipped},
        }
        _emit(json.dumps(doc, indent=2) + "\n", cfg["out"])
    else:
        _emit("\n".join(report_lines) + "\n", cfg["out"])
    if not (lemma1_ok and lemma2_ok):
        bad = {}
        if not lemma1_ok:
            bad["lemma1_counterexample"] = {
                "trial_index": first_bad,
                "trial_seed": _rng.trial_seed(cfg["seed"], first_bad),
            }
        if not lemma2_ok:
            h, h_hat, d = counterexample
            bad["lemma2_counterexample"] = {"h": h, "h_hat": h_hat, "D": d}
        print(json.dumps(bad), file=sys.stderr)
        return 2
    return 0


def cmd_params(cfg) -> int:
    ch = _channel(cfg)
    est = _estimate_of(cfg)
    coding = _coding(cfg, ch, est)
    sched = build_schedule(ch, est, coding)
    doc = {
        "config": _config_doc(cfg),
        "schedule": {
            "M": coding.M,
            "H": sched.H,
            "p_m": sched.p_m,
            "A": sched.A,
            "B": sched.B,
            "L": sched.L,
            "alpha": sched.alpha,
            "d_tilde": sched.d_tilde,
            "d_min": sched.d_min,
            "gamma": [float(g) for g in sched.gamma],
            "beta": [float(b) for b in sched.beta],
            "sigma_sq_H": [float(v) for v in sched.sigma_sq_H],
            "sigma_sq_true": [float(v) for v in sched.sigma_sq_true],
            "sigma_sq_oracle": [float(v) for v in variance_recursion_oracle(sched, ch)],
            "constellation": [float(c) for c in sched.constellation],
        },
    }
    _emit(json.dumps(doc, indent=2) + "\n", cfg["out"])
    return 0


_COMMANDS = {
    "rate-sweep": cmd_rate_sweep,
    "simulate": cmd_simulate,
    "verify-lemmas": cmd_verify_lemmas,
    "params": cmd_params,
}


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="skfade",
        description="Feedback coding over fading channels with imperfect "
                    "transmitter CSI and quantized feedback")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", default=None, help="key=value config file")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override one configuration key (repeatable)")
        p.add_argument("--out", default=None, help="output path (default stdout)")
        p.add_argument("--format", choices=("csv", "json"), default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--trials", type=int, default=None)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args.set)
        for key in ("out", "format", "seed", "trials"):
            value = getattr(args, key)
            if value is not None:
                cfg[key] = value
        _echo_config(cfg)
        return _COMMANDS[args.command](cfg)
    except SkfadeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
