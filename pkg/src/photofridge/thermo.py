"""Particle and heat currents, entropy production and the closed-form heat flows.

Sign conventions: a particle current is positive when electrons enter the
device from the lead, and a heat current is positive when heat leaves the
bath and enters the device.  Positive ``q_r`` therefore means the right lead
is being cooled.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .errors import DivergenceError, DomainError, SolverError, SpecMismatchError
from .model import DeviceArrays, DeviceSpec, build_generator, rate_table
from .steady import SteadyState, solve_steady

ENERGY_TOL = 1e-10


def current_arrays(arr: DeviceArrays, rt, p):
    """Currents for a batch of devices with steady states ``p`` (shape (N, 5)).

    Entropy contributions of a zero-temperature bath that exchanges heat are
    returned as NaN; :func:`entropy_production` turns them into errors.
    """
    p0 = p[:, :1]
    j = rt.k_in * p0 - rt.k_out * p[:, 1:]
    rel = rt.energies[:, 1:] - arr.mu[:, None]
    flow = rel * j
    q_l = flow[:, 0] + flow[:, 2]
    q_r = flow[:, 1] + flow[:, 3]
    ld, rd, lu, ru = p[:, 1], p[:, 2], p[:, 3], p[:, 4]
    q_photon = arr.eps_g * (rt.ph_up * (ld + ru) - rt.ph_dn * (rd + lu))
    q_quench = (rt.gaps[:, 0] * (rt.qu_up[:, 0] * ld - rt.qu_dn[:, 0] * lu)
                + rt.gaps[:, 1] * (rt.qu_up[:, 1] * rd - rt.qu_dn[:, 1] * ru))
    sep = rt.quench_separate
    q_s = q_photon + np.where(sep, 0.0, q_quench)
    q_q = np.where(sep, q_quench, 0.0)

    floor = 1e-13 * arr.gamma * np.max(np.abs(rel), axis=1)
    s_l = _entropy_flow(q_l, arr.T_l, floor)
    s_r = _entropy_flow(q_r, arr.T_r, floor)
    s_photon = _entropy_flow(q_photon, rt.T_photon, floor)
    s_quench = _entropy_flow(q_quench, rt.T_quench, floor)
    s_s = s_photon + np.where(sep, 0.0, s_quench)
    s_q = np.where(sep, s_quench, 0.0)
    return {
        "j_ld": j[:, 0], "j_rd": j[:, 1], "j_lu": j[:, 2], "j_ru": j[:, 3],
        "q_l": q_l, "q_r": q_r, "q_s": q_s, "q_q": q_q,
        "q_photon": q_photon, "q_quench": q_quench,
        "sigma_l": s_l, "sigma_r": s_r, "sigma_s": s_s, "sigma_q": s_q,
        "sigma": s_l + s_r + s_s + s_q,
        "charge_left": j[:, 0] + j[:, 2], "charge_right": j[:, 1] + j[:, 3],
    }


def _entropy_flow(q, T, floor):
    with np.errstate(divide="ignore", invalid="ignore"):
        s = -q / T
    s = np.where(np.isinf(T), 0.0, s)
    frozen = T == 0
    return np.where(frozen & (np.abs(q) <= floor), 0.0, np.where(frozen, np.nan, s))


@dataclass(frozen=True)
class CurrentReport:
    j_ld: float
    j_rd: float
    j_lu: float
    j_ru: float
    q_l: float
    q_r: float
    q_s: float
    sigma: float
    charge_left: float
    charge_right: float
    q_q: float = 0.0
    q_photon: float = 0.0
    q_quench: float = 0.0
    sigma_parts: dict = field(default_factory=dict)
    spec_hash: str = ""

    def as_dict(self):
        return asdict(self)


def _check_pair(spec, ss):
    if ss.spec_hash != spec.key:
        raise SpecMismatchError("steady state was not computed for this device")


def _evaluate(spec, ss, with_rates=False):
    arr = DeviceArrays.from_specs([spec])
    rt = rate_table(arr)
    out = current_arrays(arr, rt, ss.p[None, :])
    c = {name: float(v[0]) for name, v in out.items()}
    return (c, rt) if with_rates else c


def particle_currents(spec: DeviceSpec, ss: SteadyState):
    """``(j_ld, j_rd, j_lu, j_ru)``; negative values mean electrons leave into the lead."""
    _check_pair(spec, ss)
    c = _evaluate(spec, ss)
    return c["j_ld"], c["j_rd"], c["j_lu"], c["j_ru"]


def _check_energy(spec, c):
    total = c["q_l"] + c["q_r"] + c["q_s"] + c["q_q"]
    scale = max(abs(c["q_l"]), abs(c["q_r"]), abs(c["q_s"]), abs(c["q_q"]),
                spec.gamma * spec.delta_r)
    if abs(total) > ENERGY_TOL * scale:
        raise SolverError(f"energy balance violated: sum of heat currents is {total:.3e}")


def heat_currents(spec: DeviceSpec, ss: SteadyState):
    """``(q_l, q_r, q_s)``.

    ``q_s`` is summed over the photon and quench transition fluxes rather than
    inferred from the lead currents, and the three must balance.  With a
    separate quench bath (``spec.T_q``) its heat is not part of ``q_s``; use
    :func:`current_report` to see it.
    """
    _check_pair(spec, ss)
    c = _evaluate(spec, ss)
    _check_energy(spec, c)
    return c["q_l"], c["q_r"], c["q_s"]


def channel_temperatures(spec: DeviceSpec):
    """Temperatures seen by each transition channel: leads, photon and quench.

    Photon and quench channels use the temperature implied by the ratio of
    their up and down rates, so symmetric rates count as infinitely hot.
    """
    arr = DeviceArrays.from_specs([spec])
    return _temperatures(spec, rate_table(arr))


def _temperatures(spec, rt):
    return {"l": spec.T_l, "r": spec.T_r,
            "photon": float(rt.T_photon[0]), "quench": float(rt.T_quench[0])}


def entropy_production(spec: DeviceSpec, report: CurrentReport):
    """Total entropy production ``-sum_i q_i / T_i`` and its per-bath parts.

    Returns ``(sigma, parts)`` with parts keyed ``l``, ``r``, ``s`` (photon
    source, including quench heat unless a separate quench bath is set) and
    ``q``.
    """
    return _entropy(spec, report, channel_temperatures(spec))


def _entropy(spec, report, temps):
    floor = 1e-13 * spec.gamma * np.max(np.abs(spec.level_energies() - spec.mu))
    flows = {}
    for channel, q in (("l", report.q_l), ("r", report.q_r),
                       ("photon", report.q_photon), ("quench", report.q_quench)):
        T = temps[channel]
        if T == 0:
            if abs(q) > floor:
                raise DivergenceError(channel, q)
            flows[channel] = 0.0
        else:
            flows[channel] = 0.0 if np.isinf(T) else -q / T
    separate = spec.T_q is not None
    parts = {
        "l": flows["l"],
        "r": flows["r"],
        "s": flows["photon"] + (0.0 if separate else flows["quench"]),
        "q": flows["quench"] if separate else 0.0,
    }
    return parts["l"] + parts["r"] + parts["s"] + parts["q"], parts


def current_report(spec: DeviceSpec, ss: SteadyState | None = None) -> CurrentReport:
    """Solve (if needed) and evaluate every current of ``spec``."""
    if ss is None:
        ss = solve_steady(build_generator(spec))
    _check_pair(spec, ss)
    c, rt = _evaluate(spec, ss, with_rates=True)
    _check_energy(spec, c)
    report = CurrentReport(
        j_ld=c["j_ld"], j_rd=c["j_rd"], j_lu=c["j_lu"], j_ru=c["j_ru"],
        q_l=c["q_l"], q_r=c["q_r"], q_s=c["q_s"], q_q=c["q_q"],
        q_photon=c["q_photon"], q_quench=c["q_quench"],
        sigma=np.nan,
        charge_left=c["charge_left"], charge_right=c["charge_right"],
        spec_hash=spec.key,
    )
    sigma, parts = _entropy(spec, report, _temperatures(spec, rt))
    return replace(report, sigma=sigma, sigma_parts=parts)


def closed_form_heat(k, Gamma, eps, eps_g, T_l):
    """Heat flows ``(q_r, q_l)`` on the no-charging manifold.

    Valid for eps2 = -eps1 = eps, mu = 0, equal quench rates ``k``, symmetric
    photon rates and T_r = eps T_l / (eps + eps_g)::

        q_r = -4 k Gamma eps sinh(x) / (10k + Gamma + (10k + 4 Gamma) cosh(x))
        q_l = q_r (eps + eps_g) / eps,          x = (eps + eps_g) / T_l
    """
    k, Gamma, eps, eps_g, T_l = (float(v) for v in (k, Gamma, eps, eps_g, T_l))
    if not all(np.isfinite(v) for v in (k, Gamma, eps, eps_g)) or np.isnan(T_l):
        raise DomainError("closed_form_heat needs finite inputs")
    if k < 0 or Gamma <= 0 or T_l <= 0:
        raise DomainError("need k >= 0, Gamma > 0 and T_l > 0")
    x = (eps + eps_g) / T_l
    # sinh(x) / (a + b cosh(x)) rewritten with exp(-|x|) so large x cannot overflow
    a, b = 10 * k + Gamma, 10 * k + 4 * Gamma
    e = np.exp(-abs(x))
    ratio = np.sign(x) * (1 - e * e) / (2 * a * e + b * (1 + e * e))
    q_r = -4 * k * Gamma * eps * ratio
    q_l = -4 * k * Gamma * (eps + eps_g) * ratio
    return float(q_r), float(q_l)
