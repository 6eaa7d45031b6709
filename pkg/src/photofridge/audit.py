"""Cool-down of the cold lead and its characteristic exponent.

A cold bath with heat capacity c_V(T) that loses heat at rate q(T) cools as
dT/dt = -q(T) / c_V(T).  If that rate behaves like T**zeta as T -> 0, the
bath reaches absolute zero in finite time whenever zeta < 1, which violates
the unattainability principle.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from typing import Callable, NamedTuple

import numpy as np
from scipy.integrate import solve_ivp

from .errors import DomainError
from .model import DeviceSpec
from .thermo import current_report

HeatLaw = Callable[[float], float]

VIOLATED = "III-law violated: finite-time absolute zero"
COMPLIANT = "compliant on tested range"
ZETA_TOL = 1e-9  # fitted exponents this close to 1 count as 1 (roundoff of the log fit)


def cv_electron(T, gamma_cv):
    """Low-temperature electronic heat capacity, linear in T."""
    return gamma_cv * T


def power_law(c, beta) -> HeatLaw:
    """Synthetic cooling power q(T) = c T**beta."""
    def q(T):
        return c * T**beta
    q.__name__ = f"power_law(c={c}, beta={beta})"
    return q


def model_heat_law(spec: DeviceSpec, eps_scale=None) -> HeatLaw:
    """Heat extracted from the right lead as a function of its temperature.

    All other parameters stay as in ``spec``.  With ``eps_scale = c`` the
    levels follow the lead, eps2 = -eps1 = c T_r, which is the operating-point
    scaling under which the original (quench-free) device gives q_r ~ T_r.
    """
    def q(T):
        s = replace(spec, T_r=T)
        if eps_scale is not None:
            s = replace(s, eps1=-eps_scale * T, eps2=eps_scale * T)
        return current_report(s).q_r
    return q


class ZetaFit(NamedTuple):
    zeta: float
    r_squared: float

    @property
    def violates_third_law(self):
        return self.zeta < 1 - ZETA_TOL

    @property
    def verdict(self):
        return VIOLATED if self.violates_third_law else COMPLIANT


def _fit_log_slope(T, rate):
    x, y = np.log(T), np.log(rate)
    A = np.stack([x, np.ones_like(x)], axis=1)
    (slope, intercept), *_ = np.linalg.lstsq(A, y, rcond=None)
    res = y - (slope * x + intercept)
    ss_res = float(res @ res)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    # a flat, exactly fitted series has ss_tot ~ ss_res ~ roundoff
    if ss_res <= 1e-24 * len(y) * max(1.0, float(np.max(np.abs(y)))) ** 2:
        r2 = 1.0
    else:
        r2 = 1.0 - ss_res / ss_tot
    return float(slope), r2


def estimate_zeta(law: HeatLaw, gamma_cv, T_samples) -> ZetaFit:
    """Exponent of dT/dt ~ -T**zeta, fitted on the lowest decade of ``T_samples``.

    The samples must number at least 8 and span at least two decades, and the
    law must cool (q > 0) at every one of them.
    """
    T = np.sort(np.asarray(T_samples, dtype=float))
    if len(T) < 8 or T[0] <= 0 or np.log10(T[-1] / T[0]) < 2 - 1e-12:
        raise DomainError("need >= 8 positive samples spanning >= 2 decades")
    q = np.array([law(t) for t in T])
    bad = np.nonzero(~(q > 0))[0]
    if len(bad):
        listing = ", ".join(f"T={T[i]:.6g}: q={q[i]:.6g}" for i in bad)
        raise DomainError(f"cooling power is not positive at {listing}")
    low = T <= T[0] * 10 * (1 + 1e-12)
    if low.sum() < 2:
        raise DomainError("fewer than two samples in the lowest decade")
    rate = q[low] / cv_electron(T[low], gamma_cv)
    return ZetaFit(*_fit_log_slope(T[low], rate))


class Termination(str, Enum):
    FLOOR_REACHED = "floor_reached"
    T_MAX = "t_max"
    STALLED = "stalled"


@dataclass(frozen=True, eq=False)
class CoolTrajectory:
    t: np.ndarray
    T: np.ndarray
    terminated: Termination
    freeze_time: float | None = None
    zeta: float | None = None
    r_squared: float | None = None
    message: str = ""
    floor_time: float | None = None

    @property
    def samples(self):
        return list(zip(self.t.tolist(), self.T.tolist()))


def cooldown_integrate(law: HeatLaw, T0, gamma_cv, T_floor=None, t_max=1e3, rtol=1e-8):
    """Integrate dT/dt = -q(T) / c_V(T) from ``T0`` until T_floor, t_max or a stall.

    Uses the Dormand-Prince 5(4) pair with event location; ``floor_time`` is
    the interpolated time at which T crosses ``T_floor`` (default 1e-9 T0).
    That crossing counts as freeze-out, and is reported as ``freeze_time``,
    only when the exponent fitted on the last decade of the path is below 1.
    An exponential approach (zeta = 1) also passes any positive floor, but it
    never reaches zero.  A law that stops cooling (q <= 0) ends the run as
    ``stalled``.
    """
    T_floor = 1e-9 * T0 if T_floor is None else T_floor
    if not T0 > T_floor > 0:
        raise DomainError("need T0 > T_floor > 0")
    q0 = law(T0)
    if not q0 > 0:
        return CoolTrajectory(np.array([0.0]), np.array([float(T0)]), Termination.STALLED,
                              message=f"device does not cool: q(T0) = {q0:.6g}")

    def rhs(t, y):
        T = max(y[0], 0.5 * T_floor)  # trial stages may overshoot the floor
        return [-law(T) / cv_electron(T, gamma_cv)]

    def floor(t, y):
        return y[0] - T_floor
    floor.terminal, floor.direction = True, -1

    def stall(t, y):
        return law(max(y[0], 0.5 * T_floor))
    stall.terminal, stall.direction = True, -1

    sol = solve_ivp(rhs, (0.0, t_max), [float(T0)], method="RK45", rtol=rtol,
                    atol=rtol * T_floor, events=[floor, stall])
    t, T = sol.t, sol.y[0]
    crossed = None
    if len(sol.t_events[0]):
        reason, crossed = Termination.FLOOR_REACHED, float(sol.t_events[0][0])
        t, T = np.append(t[t < crossed], crossed), np.append(T[t < crossed], T_floor)
        msg = f"reached T_floor={T_floor:.3g} at t={crossed:.10g}"
    elif len(sol.t_events[1]):
        reason, msg = Termination.STALLED, f"cooling power vanished at T={T[-1]:.6g}"
    elif sol.status < 0:
        reason, msg = Termination.STALLED, sol.message
    else:
        reason, msg = Termination.T_MAX, f"T={T[-1]:.6g} at t_max={t_max:g}"

    zeta = r2 = None
    if T[0] >= 10 * T[-1]:
        probe = np.geomspace(T[-1], 10 * T[-1], 12)
        rate = np.array([law(x) for x in probe]) / cv_electron(probe, gamma_cv)
        if np.all(rate > 0):
            zeta, r2 = _fit_log_slope(probe, rate)
    freeze = crossed if crossed is not None and zeta is not None and zeta < 1 - ZETA_TOL else None
    return CoolTrajectory(t, T, reason, freeze, zeta, r2, msg, crossed)
