"""Parameter sweeps, the no-net-charging manifold and its overlap with the cooling region."""

from __future__ import annotations

import itertools
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields, replace
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import brentq

from .errors import BracketError, DomainError, FridgeError
from .model import DeviceArrays, DeviceSpec, assemble, build_generator, rate_table
from .steady import solve_batch, solve_steady
from .thermo import CurrentReport, current_arrays, current_report

_SPEC_FIELDS = {f.name for f in fields(DeviceSpec)} - {"quench_mode", "photon_override"}
AXES = ("eps", "photon") + tuple(sorted(_SPEC_FIELDS))
CHUNK = 2048
NOISE = 1e-13  # charge currents below NOISE * gamma are roundoff


def set_parameter(spec: DeviceSpec, name: str, value) -> DeviceSpec:
    """Copy of ``spec`` with one named parameter changed.

    Besides the plain fields, ``eps`` places the levels at -eps, +eps and
    ``photon`` sets symmetric photon rates (value, value).
    """
    if name == "eps":
        return replace(spec, eps1=-value, eps2=value)
    if name == "photon":
        return replace(spec, photon_override=(value, value))
    if name not in _SPEC_FIELDS:
        raise DomainError(f"unknown parameter {name!r}")
    return replace(spec, **{name: value})


def no_charging_temperature(eps, eps_g, T_l):
    """Right-lead temperature with eps / T_r = (eps + eps_g) / T_l.

    Only meaningful for the symmetric level placement with symmetric photon
    rates and equal quench rates.
    """
    if eps + eps_g == 0:
        raise DomainError("eps + eps_g must be nonzero")
    if not (eps > 0 and eps_g >= 0 and T_l > 0):
        raise DomainError("need eps > 0, eps_g >= 0, T_l > 0")
    return eps * T_l / (eps + eps_g)


# ---------------------------------------------------------------------------
# grids and sweeps
# ---------------------------------------------------------------------------

@dataclass
class Grid:
    """Cartesian product of parameter axes around a base device.

    Axes vary in insertion order with the last one fastest.  With ``tie_T_r``
    every point gets T_r from :func:`no_charging_temperature`.
    """

    base: DeviceSpec
    axes: dict = field(default_factory=dict)
    tie_T_r: bool = False

    def __post_init__(self):
        for name in self.axes:
            if name not in AXES:
                raise DomainError(f"unknown grid axis {name!r}")
        self.axes = {name: [float(v) for v in values] for name, values in self.axes.items()}

    def __len__(self):
        return int(np.prod([len(v) for v in self.axes.values()])) if self.axes else 1

    def specs(self):
        names = list(self.axes)
        out = []
        for combo in itertools.product(*self.axes.values()):
            spec = self.base
            for name, value in zip(names, combo):
                spec = set_parameter(spec, name, value)
            if self.tie_T_r:
                spec = replace(spec, T_r=no_charging_temperature(spec.eps2, spec.eps_g, spec.T_l))
            out.append(spec)
        return out

    def describe(self):
        return {"axes": {n: list(v) for n, v in self.axes.items()},
                "tie_T_r": self.tie_T_r, "points": len(self)}


def _as_specs(grid):
    if isinstance(grid, Grid):
        return grid.specs(), grid.describe()
    specs = list(grid)
    return specs, {"points": len(specs), "explicit": True}


def default_tol_q(spec):
    return 1e-10 * spec.gamma


def default_tol_cool(spec):
    return 1e-12 * spec.gamma * spec.half_gap


@dataclass(frozen=True)
class SweepPoint:
    spec: DeviceSpec
    report: CurrentReport | None
    p: np.ndarray | None
    residual: float
    is_cooling_right: bool
    is_charge_neutral: bool
    error: str | None = None


def classify(spec, report, tol_q=None, tol_cool=None):
    """``(is_cooling_right, is_charge_neutral)`` for one evaluated point."""
    if report is None:
        return False, False
    tq = default_tol_q(spec) if tol_q is None else tol_q
    tc = default_tol_cool(spec) if tol_cool is None else tol_cool
    cooling = bool(report.q_r > tc)
    neutral = bool(max(abs(report.charge_left), abs(report.charge_right)) < tq)
    return cooling, neutral


@dataclass
class SweepResult:
    points: list
    grid: dict
    tol_q: float | None = None
    tol_cool: float | None = None

    @property
    def counts(self):
        """Number of points per ``(cooling, neutral)`` flag combination."""
        c = Counter((p.is_cooling_right, p.is_charge_neutral) for p in self.points)
        return {key: c.get(key, 0) for key in itertools.product((False, True), repeat=2)}

    @property
    def failures(self):
        return [p for p in self.points if p.error is not None]

    def reflag(self, tol_q=None, tol_cool=None):
        pts = [replace(p, **dict(zip(("is_cooling_right", "is_charge_neutral"),
                                     classify(p.spec, p.report, tol_q, tol_cool))))
               for p in self.points]
        return SweepResult(pts, self.grid, tol_q, tol_cool)


def _row_report(spec, cur, i):
    parts = {b: float(cur["sigma_" + b][i]) for b in ("l", "r", "s", "q")}
    return CurrentReport(
        j_ld=float(cur["j_ld"][i]), j_rd=float(cur["j_rd"][i]),
        j_lu=float(cur["j_lu"][i]), j_ru=float(cur["j_ru"][i]),
        q_l=float(cur["q_l"][i]), q_r=float(cur["q_r"][i]),
        q_s=float(cur["q_s"][i]), q_q=float(cur["q_q"][i]),
        q_photon=float(cur["q_photon"][i]), q_quench=float(cur["q_quench"][i]),
        sigma=float(cur["sigma"][i]), sigma_parts=parts,
        charge_left=float(cur["charge_left"][i]), charge_right=float(cur["charge_right"][i]),
        spec_hash=spec.key,
    )


def _evaluate_chunk(specs, tol_q, tol_cool):
    if not specs:
        return []
    arr = DeviceArrays.from_specs(specs)
    rt = rate_table(arr)
    p, res, ok = solve_batch(assemble(rt))
    cur = current_arrays(arr, rt, p)
    total = cur["q_l"] + cur["q_r"] + cur["q_s"] + cur["q_q"]
    scale = np.max(np.abs([cur["q_l"], cur["q_r"], cur["q_s"], cur["q_q"],
                           arr.gamma * (arr.eps2 - arr.eps1)]), axis=0)
    ok &= (np.abs(total) <= 1e-10 * scale) & np.isfinite(cur["sigma"])
    points = []
    for i, spec in enumerate(specs):
        if ok[i]:
            report, pi, ri, err = _row_report(spec, cur, i), p[i].copy(), float(res[i]), None
        else:
            # slow path: reproduce the failure (or recover) through the scalar API
            try:
                ss = solve_steady(build_generator(spec))
                report, pi, ri, err = current_report(spec, ss), np.array(ss.p), ss.residual, None
            except FridgeError as exc:
                report, pi, ri, err = None, None, float("nan"), f"{type(exc).__name__}: {exc}"
        cooling, neutral = classify(spec, report, tol_q, tol_cool)
        points.append(SweepPoint(spec, report, pi, ri, cooling, neutral, err))
    return points


def _chunks(seq, size):
    return [seq[i:i + size] for i in range(0, len(seq), size)]


def sweep(grid: Grid | Iterable[DeviceSpec], tol_q=None, tol_cool=None, jobs=1) -> SweepResult:
    """Steady state and currents at every grid point, in grid order.

    Tolerances default to the scale-aware values ``1e-10 * gamma`` (charge)
    and ``1e-12 * gamma * eps`` (cooling).  Failing points are kept with an
    error message instead of aborting the sweep.
    """
    specs, desc = _as_specs(grid)
    chunks = _chunks(specs, CHUNK)
    if jobs > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(lambda c: _evaluate_chunk(c, tol_q, tol_cool), chunks))
    else:
        parts = [_evaluate_chunk(c, tol_q, tol_cool) for c in chunks]
    return SweepResult([pt for part in parts for pt in part], desc, tol_q, tol_cool)


# ---------------------------------------------------------------------------
# no-charging roots
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NoChargingRoot:
    parameter: str
    value: float
    charge_right: float
    charge_left: float
    simultaneous: bool
    iterations: int


def _charge_right(spec):
    return current_report(spec).charge_right


def find_no_charging(spec: DeviceSpec, free="T_r", bracket=(0.1, 10.0), tol_q=None,
                     xtol=1e-15, maxiter=200) -> NoChargingRoot:
    """Value of parameter ``free`` in ``bracket`` where the right lead's net current vanishes.

    Also reports whether the left lead's net current vanishes there
    (``simultaneous``).
    """
    a, b = map(float, bracket)

    def residual(x):
        return _charge_right(set_parameter(spec, free, x))

    fa, fb = residual(a), residual(b)
    if fa == 0:
        root, its = a, 0
    elif fb == 0:
        root, its = b, 0
    elif np.sign(fa) == np.sign(fb):
        raise BracketError(f"charge_right has the same sign at {free}={a:g} ({fa:.3e}) "
                           f"and {free}={b:g} ({fb:.3e})")
    else:
        root, info = brentq(residual, a, b, xtol=xtol, rtol=4 * np.finfo(float).eps,
                            maxiter=maxiter, full_output=True)
        its = info.iterations
    at = set_parameter(spec, free, root)
    report = current_report(at)
    tq = default_tol_q(at) if tol_q is None else tol_q
    return NoChargingRoot(free, float(root), report.charge_right, report.charge_left,
                          abs(report.charge_left) < tq, its)


def _charge_right_batch(arr):
    rt = rate_table(arr)
    p, _, ok = solve_batch(assemble(rt))
    j = rt.k_in * p[:, :1] - rt.k_out * p[:, 1:]
    c = j[:, 1] + j[:, 3]
    return np.where(ok, c, np.nan)


def neutral_T_r(specs: Sequence[DeviceSpec], span=(1e-3, 10.0), samples=48):
    """All no-charging values of T_r within ``span * T_l`` for each device.

    Sign changes of the right lead's net current that exceed roundoff
    (``NOISE * gamma``) are located on a log grid of ``samples`` temperatures and each is refined by bisection in log T_r
    down to adjacent floating-point numbers.  Returns one list of roots per spec.
    """
    roots = [[] for _ in specs]
    for offset, chunk in zip(range(0, len(specs), CHUNK // 4), _chunks(list(specs), CHUNK // 4)):
        arr = DeviceArrays.from_specs(chunk)
        n = len(chunk)
        u = np.geomspace(span[0], span[1], samples)
        T = arr.T_l[:, None] * u[None, :]
        idx = np.repeat(np.arange(n), samples)
        c = _charge_right_batch(arr.take(idx).with_T_r(T.ravel())).reshape(n, samples)

        # sign changes between samples that stand clear of roundoff noise; a
        # single sub-noise sample between two such samples brackets too
        floor = NOISE * arr.gamma[:, None]
        strong = np.abs(c) > floor
        s = np.where(strong, np.sign(c), 0.0)
        si, sj = np.nonzero(s[:, :-1] * s[:, 1:] < 0)
        wi, wj = np.nonzero((s[:, :-2] * s[:, 2:] < 0) & ~strong[:, 1:-1])
        step = np.concatenate([np.ones_like(sj), 2 * np.ones_like(wj)])
        si, sj = np.concatenate([si, wi]), np.concatenate([sj, wj])
        lo, hi = T[si, sj], T[si, sj + step]
        c_lo = c[si, sj]
        sub = arr.take(si)
        for _ in range(80):
            mid = np.sqrt(lo * hi)
            active = (mid > lo) & (mid < hi)
            if not active.any():
                break
            cm = _charge_right_batch(sub.with_T_r(mid))
            left = np.sign(cm) == np.sign(c_lo)
            lo = np.where(active & left, mid, lo)
            c_lo = np.where(active & left, cm, c_lo)
            hi = np.where(active & ~left & ~np.isnan(cm), mid, hi)
        c_hi = _charge_right_batch(sub.with_T_r(hi))
        best = np.where(np.abs(c_lo) <= np.abs(c_hi), lo, hi)
        for i, r in zip(si, best):
            roots[offset + i].append(float(r))
    return [sorted(r) for r in roots]


# ---------------------------------------------------------------------------
# intersection of the cooling and no-charging manifolds
# ---------------------------------------------------------------------------

@dataclass
class Verdict:
    empty: bool
    witnesses: list
    evaluated: int
    tol_q: float | None
    tol_cool: float | None
    result: SweepResult | None = None
    unresolved: int = 0  # devices with no resolvable neutral T_r in the scan

    @property
    def label(self):
        return "empty" if self.empty else "nonempty"


def intersection_test(grid, tol_q=None, tol_cool=None, scan_T_r=False, span=(1e-3, 10.0),
                      samples=48, jobs=1) -> Verdict:
    """Search ``grid`` for points that both cool the right lead and charge neither lead.

    With ``scan_T_r`` the grid's own T_r is ignored; each device is instead
    evaluated at every T_r where it is charge-neutral (see :func:`neutral_T_r`).
    An empty verdict is evidence on the sampled points only.
    """
    specs, desc = _as_specs(grid)
    unresolved = 0
    if scan_T_r:
        found = neutral_T_r(specs, span, samples)
        unresolved = sum(not ts for ts in found)
        specs = [replace(s, T_r=t) for s, ts in zip(specs, found) for t in ts]
        desc = dict(desc, scan_T_r={"span": list(span), "samples": samples,
                                    "unresolved": unresolved})
    result = sweep(specs, tol_q, tol_cool, jobs)
    result.grid = desc
    witnesses = [p for p in result.points if p.is_cooling_right and p.is_charge_neutral]
    return Verdict(not witnesses, witnesses, len(result.points), tol_q, tol_cool, result,
                   unresolved)
