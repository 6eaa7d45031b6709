"""Command-line front end.

Configuration files are flat ``key = value`` text with ``[section]`` headers::

    [device]
    eps = 1            # or eps1 / eps2
    eps_g = 1
    gamma = 1
    T_l = 2
    T_r = 1            # "neutral" ties T_r to eps T_l / (eps + eps_g)
    quench = equal     # off | equal | bose
    k = 1
    photon = 1         # symmetric photon rates; or photon_up / photon_down
    # gamma_s, T_s, mu, T_q are optional

    [sweep]            # one axis per line: a list, lin(a, b, n) or log(a, b, n)
    T_l = 0.5, 1, 2, 5
    k = log(0.1, 10, 3)

    [manifold]
    scan_T_r = true
    span = 1e-3, 10
    samples = 48

    [audit]
    law = power        # power | model
    c = 0.1
    beta = 1
    eps_scale = 1      # model law only: eps2 = -eps1 = eps_scale * T_r
    gamma_cv = 1
    T0 = 1
    T_min = 1e-3
    T_max = 1e-1

Exit codes: 0 ok, 2 configuration error, 3 model or solver error, 4 I/O error.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import math
import re
import sys
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .audit import (COMPLIANT, VIOLATED, Termination, cooldown_integrate, estimate_zeta,
                    model_heat_law, power_law)
from .errors import FridgeError, SpecError
from .manifold import AXES, Grid, intersection_test, sweep
from .model import DeviceSpec, QuenchMode, build_generator
from .steady import solve_steady
from .thermo import current_report

EXIT_OK, EXIT_CONFIG, EXIT_MODEL, EXIT_IO = 0, 2, 3, 4
UNITS = "k_B = hbar = 1; energies, temperatures and rates share one model unit"

CSV_COLUMNS = ["eps", "eps_g", "T_l", "T_r", "T_s", "k", "gamma", "gamma_s",
               "p0", "p_ld", "p_rd", "p_lu", "p_ru", "j_ld", "j_rd", "j_lu", "j_ru",
               "q_l", "q_r", "q_s", "sigma", "charge_l", "charge_r", "cooling", "neutral"]

DEVICE_KEYS = {"eps", "eps1", "eps2", "eps_g", "mu", "gamma", "gamma_s", "T_l", "T_r",
               "T_s", "quench", "k", "photon", "photon_up", "photon_down", "T_q"}
SECTION_KEYS = {
    "device": DEVICE_KEYS,
    "sweep": set(AXES),
    "manifold": {"scan_T_r", "span", "samples"},
    "audit": {"law", "c", "beta", "eps_scale", "gamma_cv", "T0", "T_floor", "t_max",
              "T_min", "T_max", "samples"},
}


class ConfigError(Exception):
    pass


# ---------------------------------------------------------------------------
# config parsing
# ---------------------------------------------------------------------------

def read_config(text):
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"),
                                       strict=True, empty_lines_in_values=False)
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config: {exc}") from None
    config = {}
    for section in parser.sections():
        if section not in SECTION_KEYS:
            raise ConfigError(f"unknown section [{section}]")
        unknown = set(parser[section]) - SECTION_KEYS[section]
        if unknown:
            raise ConfigError(f"unknown key(s) in [{section}]: {', '.join(sorted(unknown))}")
        config[section] = dict(parser[section])
    return config


def _number(section, key, raw):
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"[{section}] {key}: expected a number, got {raw!r}") from None


def _require(config, section, keys):
    block = config.get(section)
    if block is None:
        raise ConfigError(f"missing section [{section}]")
    missing = [k for k in keys if k not in block]
    if missing:
        raise ConfigError(f"[{section}] missing required key(s): {', '.join(missing)}")
    return block


_RANGE = re.compile(r"^(lin|log)\(\s*([^,]+),\s*([^,]+),\s*([^,)]+)\)$")


def parse_values(section, key, raw):
    """A comma-separated list, ``lin(a, b, n)`` or ``log(a, b, n)``."""
    raw = raw.strip()
    m = _RANGE.match(raw)
    if m:
        kind, a, b, n = m.groups()
        a, b = _number(section, key, a), _number(section, key, b)
        n = _number(section, key, n)
        if n != int(n) or n < 0:
            raise ConfigError(f"[{section}] {key}: point count must be a non-negative integer")
        if kind == "log" and (a <= 0 or b <= 0):
            raise ConfigError(f"[{section}] {key}: log range needs positive bounds")
        f = np.linspace if kind == "lin" else np.geomspace
        return [float(v) for v in f(a, b, int(n))]
    if raw == "":
        return []
    return [_number(section, key, v) for v in raw.split(",")]


def device_from_config(config, need_T_r=True):
    """Build the base :class:`DeviceSpec`; returns ``(spec, tie_T_r)``."""
    required = ["gamma", "eps_g", "T_l"] + (["T_r"] if need_T_r else [])
    block = _require(config, "device", required)
    if "eps" in block and ({"eps1", "eps2"} & set(block)):
        raise ConfigError("[device] give either eps or eps1/eps2, not both")
    if "eps" in block:
        eps = _number("device", "eps", block["eps"])
        e1, e2 = -eps, eps
    elif "eps1" in block and "eps2" in block:
        e1, e2 = _number("device", "eps1", block["eps1"]), _number("device", "eps2", block["eps2"])
    else:
        raise ConfigError("[device] missing required key(s): eps (or eps1 and eps2)")

    def num(key, default=0.0):
        return _number("device", key, block[key]) if key in block else default

    tie = block.get("T_r", "").strip() == "neutral"
    T_r = 1.0 if tie or "T_r" not in block else num("T_r")
    override = None
    if "photon" in block:
        override = (num("photon"),) * 2
    elif "photon_up" in block or "photon_down" in block:
        if not ("photon_up" in block and "photon_down" in block):
            raise ConfigError("[device] photon_up and photon_down must be given together")
        override = (num("photon_up"), num("photon_down"))
    elif num("gamma_s") > 0 and "T_s" not in block:
        raise ConfigError("[device] missing required key(s): T_s (thermal photon rates)")
    try:
        mode = QuenchMode(block.get("quench", "off").strip())
    except ValueError:
        raise ConfigError(f"[device] quench must be one of off, equal, bose") from None
    try:
        spec = DeviceSpec(
            eps1=e1, eps2=e2, eps_g=num("eps_g"), gamma=num("gamma"), T_l=num("T_l"), T_r=T_r,
            T_s=num("T_s"), mu=num("mu"), gamma_s=num("gamma_s"), quench_mode=mode, k=num("k"),
            photon_override=override, T_q=num("T_q") if "T_q" in block else None,
        )
    except SpecError as exc:
        raise ConfigError(f"[device] invalid device: {exc}") from None
    return spec, tie


def grid_from_config(config, need_T_r=True):
    base, tie = device_from_config(config, need_T_r=False)
    axes = {key: parse_values("sweep", key, raw) for key, raw in config.get("sweep", {}).items()}
    if need_T_r and "T_r" not in config["device"] and "T_r" not in axes:
        raise ConfigError("[device] missing required key(s): T_r")
    if tie and "T_r" in axes:
        raise ConfigError("T_r = neutral conflicts with a T_r sweep axis")
    try:
        grid = Grid(base, axes, tie_T_r=tie)
        grid.specs()  # validate every point up front
    except (SpecError, FridgeError) as exc:
        raise ConfigError(f"invalid grid point: {exc}") from None
    return grid


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------

def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def _envelope(command, body, reproducible):
    meta = {"program": "photofridge", "version": __version__, "units": UNITS}
    if not reproducible:
        meta["timestamp"] = datetime.now(timezone.utc).isoformat(timespec="seconds")
    return {"command": command, "metadata": meta, **body}


def _emit_json(args, command, body):
    text = json.dumps(_jsonable(_envelope(command, body, args.reproducible)), indent=2) + "\n"
    return _write(args.out, text)


def _write(path, text):
    if path is None or path == "-":
        sys.stdout.write(text)
        return EXIT_OK
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        print(f"error: cannot write {path}: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


def _g17(x):
    return format(float(x), ".17g")


def _spec_columns(spec):
    if spec.quench_mode is QuenchMode.EQUAL:
        k = spec.k
    elif spec.quench_mode is QuenchMode.OFF:
        k = 0.0
    else:
        k = float("nan")
    return [spec.eps2, spec.eps_g, spec.T_l, spec.T_r, spec.T_s, k, spec.gamma, spec.gamma_s]


def sweep_csv(result):
    """Serialize a :class:`~photofridge.manifold.SweepResult` with 17 significant digits."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    nan = float("nan")
    for pt in result.points:
        row = _spec_columns(pt.spec)
        row += list(pt.p) if pt.p is not None else [nan] * 5
        r = pt.report
        if r is None:
            row += [nan] * 11
        else:
            row += [r.j_ld, r.j_rd, r.j_lu, r.j_ru, r.q_l, r.q_r, r.q_s, r.sigma,
                    r.charge_left, r.charge_right]
        w.writerow([_g17(v) for v in row]
                   + [str(pt.is_cooling_right).lower(), str(pt.is_charge_neutral).lower()])
    return buf.getvalue()


def read_sweep_csv(text):
    """Parse :func:`sweep_csv` output back into dicts of floats and bools."""
    rows = []
    for rec in csv.DictReader(io.StringIO(text)):
        rows.append({k: (v == "true") if k in ("cooling", "neutral") else float(v)
                     for k, v in rec.items()})
    return rows


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def _steady_body(spec):
    ss = solve_steady(build_generator(spec))
    report = current_report(spec, ss)
    return ss, report


def cmd_steady(args, config):
    spec, _ = device_from_config(config)
    ss, report = _steady_body(spec)
    r = report
    body = {
        "p": ss.as_dict(),
        "residual": ss.residual,
        "method": ss.method.value,
        "currents": {"j_ld": r.j_ld, "j_rd": r.j_rd, "j_lu": r.j_lu, "j_ru": r.j_ru},
        "heat": {"q_l": r.q_l, "q_r": r.q_r, "q_s": r.q_s, "q_q": r.q_q},
        "sigma": r.sigma,
        "charge": {"left": r.charge_left, "right": r.charge_right},
    }
    return _emit_json(args, "steady", body)


def cmd_currents(args, config):
    spec, _ = device_from_config(config)
    _, report = _steady_body(spec)
    body = report.as_dict()
    body.pop("spec_hash")
    return _emit_json(args, "currents", {"report": body})


def cmd_sweep(args, config):
    grid = grid_from_config(config)
    result = sweep(grid, args.tol_q, args.tol_cool, args.jobs)
    for pt in result.failures:
        print(f"warning: point failed: {pt.error}", file=sys.stderr)
    return _write(args.out, sweep_csv(result))


def _witness(pt):
    r = pt.report
    return {"eps1": pt.spec.eps1, "eps2": pt.spec.eps2, "eps_g": pt.spec.eps_g,
            "T_l": pt.spec.T_l, "T_r": pt.spec.T_r, "T_s": pt.spec.T_s,
            "q_r": r.q_r, "q_l": r.q_l, "charge_left": r.charge_left,
            "charge_right": r.charge_right}


def cmd_manifold(args, config):
    block = config.get("manifold", {})
    scan = block.get("scan_T_r", "false").strip().lower()
    if scan not in ("true", "false"):
        raise ConfigError("[manifold] scan_T_r must be true or false")
    grid = grid_from_config(config, need_T_r=scan == "false")
    span = tuple(parse_values("manifold", "span", block.get("span", "1e-3, 10")))
    if len(span) != 2 or not 0 < span[0] < span[1]:
        raise ConfigError("[manifold] span must be two increasing positive numbers")
    samples = int(_number("manifold", "samples", block.get("samples", "48")))
    verdict = intersection_test(grid, args.tol_q, args.tol_cool, scan_T_r=scan == "true",
                                span=span, samples=samples, jobs=args.jobs)
    body = {
        "verdict": verdict.label,
        "evaluated": verdict.evaluated,
        "witnesses": [_witness(p) for p in verdict.witnesses],
        "tolerances": {"tol_q": "default 1e-10*gamma" if args.tol_q is None else args.tol_q,
                       "tol_cool": ("default 1e-12*gamma*eps" if args.tol_cool is None
                                    else args.tol_cool)},
        "grid": verdict.result.grid if verdict.result else {},
    }
    return _emit_json(args, "manifold", body)


def cmd_audit(args, config):
    block = _require(config, "audit", ["law", "gamma_cv", "T0"])

    def num(key, default=None):
        if key in block:
            return _number("audit", key, block[key])
        if default is None:
            raise ConfigError(f"[audit] missing required key(s): {key}")
        return default

    kind = block["law"].strip()
    if kind == "power":
        law = power_law(num("c"), num("beta"))
    elif kind == "model":
        spec, _ = device_from_config(config, need_T_r=False)
        law = model_heat_law(spec, num("eps_scale") if "eps_scale" in block else None)
    else:
        raise ConfigError("[audit] law must be power or model")
    gamma_cv, T0 = num("gamma_cv"), num("T0")
    T_min, T_max = num("T_min", 1e-3 * T0), num("T_max", 1e-1 * T0)
    samples = int(num("samples", 12))
    try:
        fit = estimate_zeta(law, gamma_cv, np.geomspace(T_min, T_max, samples))
    except FridgeError as exc:
        print(f"error: device does not cool: {exc}", file=sys.stderr)
        return EXIT_MODEL
    traj = cooldown_integrate(law, T0, gamma_cv, num("T_floor", 1e-9 * T0), num("t_max", 1e3))
    if traj.terminated is Termination.STALLED:
        print(f"error: device does not cool: {traj.message}", file=sys.stderr)
        return EXIT_MODEL
    body = {
        "zeta": fit.zeta,
        "r_squared": fit.r_squared,
        "freeze_time": traj.freeze_time,
        "terminated": traj.terminated.value,
        "verdict": VIOLATED if fit.violates_third_law else COMPLIANT,
        "fit_range": [T_min, T_max],
        "samples": samples,
    }
    return _emit_json(args, "audit", body)


COMMANDS = {"steady": cmd_steady, "currents": cmd_currents, "sweep": cmd_sweep,
            "manifold": cmd_manifold, "audit": cmd_audit}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, metavar="PATH")
    common.add_argument("--out", metavar="PATH", help="output file (default: stdout)")
    common.add_argument("--jobs", type=int, default=1, metavar="N")
    common.add_argument("--reproducible", action="store_true",
                        help="omit the timestamp so identical configs give identical output")
    common.add_argument("--tol-q", type=float, default=None, metavar="X")
    common.add_argument("--tol-cool", type=float, default=None, metavar="X")
    parser = argparse.ArgumentParser(prog="photofridge",
                                     description="Double-dot photon refrigerator simulator")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        with open(args.config, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        config = read_config(text)
        return COMMANDS[args.command](args, config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FridgeError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_MODEL


if __name__ == "__main__":
    sys.exit(main())
