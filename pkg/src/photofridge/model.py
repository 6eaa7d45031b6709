"""Device parameters, occupation laws and the five-state rate matrix.

States are ordered (empty, left-down, right-down, left-up, right-up) with
single-particle energies (0, eps1 - eps_g, eps1, eps2 + eps_g, eps2).  Units
are k_B = hbar = 1; energies and temperatures share one unit.

Everything below the scalar API works on columns of parameters
(:class:`DeviceArrays`) so that sweeps over thousands of devices can build
and solve their generators in a single batched call.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, fields, replace
from enum import Enum, IntEnum
from typing import NamedTuple, Sequence

import numpy as np
from scipy.special import expit

from .errors import DomainError, SpecError


class State(IntEnum):
    EMPTY = 0
    LEFT_DOWN = 1
    RIGHT_DOWN = 2
    LEFT_UP = 3
    RIGHT_UP = 4


STATE_LABELS = ("0", "ld", "rd", "lu", "ru")
ELECTRONS = np.array([0, 1, 1, 1, 1])


class QuenchMode(str, Enum):
    """How the intra-dot (down <-> up) transitions are parameterized."""

    OFF = "off"
    EQUAL = "equal"  # k_up = k_down = k on both dots
    BOSE = "bose"  # Gamma_s * (n, 1 + n) at the dot gap, thermal at T_s (or T_q)


class Side(str, Enum):
    LEFT = "left"
    RIGHT = "right"


_MODE_CODE = {QuenchMode.OFF: 0, QuenchMode.EQUAL: 1, QuenchMode.BOSE: 2}


def _floats(*values):
    arrays = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in values))
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise DomainError(f"non-finite input {a!r}")
    return arrays


def _unwrap(a):
    return a[()] if a.ndim == 0 else a


def fermi_pair(eps, mu, T):
    """Return ``(f, 1 - f)`` for the Fermi function, each computed without cancellation.

    At ``T == 0`` the step convention f(mu) = 1/2 applies.
    """
    eps, mu, T = _floats(eps, mu, T)
    if np.any(T < 0):
        raise DomainError("temperature must be >= 0")
    hot = T > 0
    x = np.divide(eps - mu, T, out=np.zeros_like(T), where=hot)
    step = np.where(eps < mu, 1.0, np.where(eps > mu, 0.0, 0.5))
    occ = np.where(hot, expit(-x), step)
    hole = np.where(hot, expit(x), 1.0 - step)
    return _unwrap(occ), _unwrap(hole)


def fermi(eps, mu, T):
    """Fermi-Dirac occupation 1 / (exp((eps - mu)/T) + 1); a step at T = 0."""
    return fermi_pair(eps, mu, T)[0]


def bose(eps, T):
    """Bose-Einstein occupation 1 / (exp(eps/T) - 1), evaluated through expm1.

    Returns 0 at ``T == 0``.  Raises :class:`DomainError` for ``eps <= 0`` at
    finite temperature, where the occupation is infinite or negative.
    """
    eps, T = _floats(eps, T)
    if np.any(T < 0):
        raise DomainError("temperature must be >= 0")
    hot = T > 0
    if np.any(hot & (eps <= 0)):
        raise DomainError("Bose occupation needs eps > 0 when T > 0")
    x = np.divide(eps, T, out=np.full_like(T, np.inf), where=hot)
    with np.errstate(over="ignore"):
        n = 1.0 / np.expm1(x)
    return _unwrap(n)


@dataclass(frozen=True)
class DeviceSpec:
    """Parameters of the double-dot refrigerator.

    ``photon_override`` replaces the Bose photon rates by an explicit
    ``(k_up, k_down)`` pair; ``(k, k)`` is the symmetric (infinite photon
    temperature) regime.  ``T_q`` is experimental: when set, quench
    transitions are thermal at ``T_q`` and their heat is booked to a separate
    bath instead of the photon source.
    """

    eps1: float
    eps2: float
    eps_g: float
    gamma: float
    T_l: float
    T_r: float
    T_s: float = 0.0
    mu: float = 0.0
    gamma_s: float = 0.0
    quench_mode: QuenchMode = QuenchMode.OFF
    k: float = 0.0
    photon_override: tuple[float, float] | None = None
    T_q: float | None = None

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name == "quench_mode":
                try:
                    object.__setattr__(self, f.name, QuenchMode(v))
                except ValueError:
                    raise SpecError(f"unknown quench_mode {v!r}") from None
            elif f.name == "photon_override":
                if v is not None:
                    pair = tuple(float(x) for x in v)
                    if len(pair) != 2 or not all(np.isfinite(pair)):
                        raise SpecError("photon_override must be a finite (k_up, k_down) pair")
                    if min(pair) < 0:
                        raise SpecError("photon_override rates must be >= 0")
                    object.__setattr__(self, f.name, pair)
            elif f.name == "T_q" and v is None:
                continue
            else:
                x = float(v)
                if not np.isfinite(x):
                    raise SpecError(f"{f.name} must be finite, got {v!r}")
                object.__setattr__(self, f.name, x)
        if self.gamma <= 0:
            raise SpecError("gamma must be > 0")
        for name in ("gamma_s", "k", "T_l", "T_r", "T_s"):
            if getattr(self, name) < 0:
                raise SpecError(f"{name} must be >= 0")
        if self.T_q is not None and self.T_q < 0:
            raise SpecError("T_q must be >= 0")
        if not self.eps2 > self.eps1:
            raise SpecError("eps2 must exceed eps1 (Delta_r > 0)")
        if self.eps_g < 0:
            raise SpecError("eps_g must be >= 0")
        if self.gamma_s > 0 and self.photon_override is None and self.T_s > 0 and self.eps_g <= 0:
            raise SpecError("Bose photon rates need eps_g > 0 when T_s > 0 (use photon_override)")

    @classmethod
    def symmetric(cls, eps, eps_g, **kw):
        """Levels placed at eps2 = -eps1 = eps."""
        return cls(eps1=-eps, eps2=eps, eps_g=eps_g, **kw)

    @property
    def delta_l(self):
        return self.eps2 - self.eps1 + 2 * self.eps_g

    @property
    def delta_r(self):
        return self.eps2 - self.eps1

    @property
    def half_gap(self):
        """(eps2 - eps1) / 2; equals eps in the symmetric placement."""
        return 0.5 * (self.eps2 - self.eps1)

    @property
    def quench_temperature(self):
        return self.T_s if self.T_q is None else self.T_q

    def level_energies(self):
        e1, e2, g = self.eps1, self.eps2, self.eps_g
        return np.array([0.0, e1 - g, e1, e2 + g, e2])

    @property
    def key(self):
        """Stable identifier, used to pair generators and steady states with their device."""
        return hashlib.sha1(repr(self).encode()).hexdigest()[:16]

    def with_(self, **changes):
        return replace(self, **changes)


def lead_rates(eps, spec, side):
    """Tunneling rates ``(bath -> system, system -> bath)`` for a level at ``eps``."""
    T = spec.T_l if Side(side) is Side.LEFT else spec.T_r
    occ, hole = fermi_pair(eps, spec.mu, T)
    return spec.gamma * occ, spec.gamma * hole


def _thermal_pair(gap, coupling, T):
    n = bose(gap, T)
    return coupling * n, coupling * (1.0 + n)


def photon_rates(eps, spec):
    """Photon-assisted inter-dot rates ``(k_up, k_down)`` for the transition quantum ``eps``."""
    if spec.photon_override is not None:
        return spec.photon_override
    if spec.gamma_s == 0:
        return 0.0, 0.0
    return _thermal_pair(eps, spec.gamma_s, spec.T_s)


def quench_rates(spec, dot):
    """Intra-dot rates ``(k_up, k_down)`` across the left (Delta_l) or right (Delta_r) gap."""
    mode = spec.quench_mode
    if mode is QuenchMode.OFF:
        return 0.0, 0.0
    if mode is QuenchMode.EQUAL:
        return spec.k, spec.k
    gap = spec.delta_l if Side(dot) is Side.LEFT else spec.delta_r
    if spec.gamma_s == 0:
        return 0.0, 0.0
    return _thermal_pair(gap, spec.gamma_s, spec.quench_temperature)


# ---------------------------------------------------------------------------
# columnar (batched) layer
# ---------------------------------------------------------------------------

@dataclass
class DeviceArrays:
    """Column-per-field view of many :class:`DeviceSpec` objects.

    ``ph_up``/``ph_dn`` and ``T_q`` hold NaN where a device leaves them unset.
    """

    eps1: np.ndarray
    eps2: np.ndarray
    eps_g: np.ndarray
    gamma: np.ndarray
    T_l: np.ndarray
    T_r: np.ndarray
    T_s: np.ndarray
    mu: np.ndarray
    gamma_s: np.ndarray
    k: np.ndarray
    mode: np.ndarray
    ph_up: np.ndarray
    ph_dn: np.ndarray
    T_q: np.ndarray

    @classmethod
    def from_specs(cls, specs: Sequence[DeviceSpec]):
        cols = {name: [] for name in ("eps1", "eps2", "eps_g", "gamma", "T_l", "T_r",
                                      "T_s", "mu", "gamma_s", "k")}
        mode, up, dn, tq = [], [], [], []
        for s in specs:
            for name, col in cols.items():
                col.append(getattr(s, name))
            mode.append(_MODE_CODE[s.quench_mode])
            pu, pd = s.photon_override if s.photon_override is not None else (np.nan, np.nan)
            up.append(pu)
            dn.append(pd)
            tq.append(np.nan if s.T_q is None else s.T_q)
        arrays = {name: np.asarray(col, dtype=float) for name, col in cols.items()}
        return cls(**arrays, mode=np.asarray(mode, dtype=int),
                   ph_up=np.asarray(up, dtype=float), ph_dn=np.asarray(dn, dtype=float),
                   T_q=np.asarray(tq, dtype=float))

    def __len__(self):
        return len(self.eps1)

    def take(self, index):
        return DeviceArrays(**{f.name: getattr(self, f.name)[index] for f in fields(self)})

    def with_T_r(self, T_r):
        return replace(self, T_r=np.asarray(T_r, dtype=float))


class RateTable(NamedTuple):
    """All transition rates of a batch of devices.

    Lead columns follow the level order (ld, rd, lu, ru); quench columns are
    (left, right).
    """

    energies: np.ndarray  # (N, 5)
    k_in: np.ndarray  # (N, 4)
    k_out: np.ndarray  # (N, 4)
    ph_up: np.ndarray  # (N,)
    ph_dn: np.ndarray
    qu_up: np.ndarray  # (N, 2)
    qu_dn: np.ndarray
    gaps: np.ndarray  # (N, 2): Delta_l, Delta_r
    T_lead: np.ndarray  # (N, 4)
    T_photon: np.ndarray  # effective photon temperature
    T_quench: np.ndarray  # effective quench temperature
    quench_separate: np.ndarray  # quench heat booked to its own bath


def _effective_temperature(up, dn, gap):
    # gap / ln(k_down / k_up); inf for symmetric rates, 0 for pure decay
    with np.errstate(divide="ignore", invalid="ignore"):
        T = gap / np.log(dn / up)
    T = np.where(up == dn, np.inf, T)
    return np.where((up == 0) & (dn > 0), 0.0, T)


def rate_table(arr: DeviceArrays) -> RateTable:
    e1, e2, g = arr.eps1, arr.eps2, arr.eps_g
    zeros = np.zeros_like(e1)
    energies = np.stack([zeros, e1 - g, e1, e2 + g, e2], axis=1)
    T_lead = np.stack([arr.T_l, arr.T_r, arr.T_l, arr.T_r], axis=1)
    occ, hole = fermi_pair(energies[:, 1:], arr.mu[:, None], T_lead)
    k_in = arr.gamma[:, None] * occ
    k_out = arr.gamma[:, None] * hole

    override = ~np.isnan(arr.ph_up)
    thermal = ~override & (arr.gamma_s > 0)
    if np.any(thermal & (arr.T_s > 0) & (g <= 0)):
        raise DomainError("Bose photon rates need eps_g > 0 when T_s > 0")
    n_ph = bose(np.where(thermal, g, 1.0), np.where(thermal, arr.T_s, 0.0))
    ph_up = np.where(override, arr.ph_up, np.where(thermal, arr.gamma_s * n_ph, 0.0))
    ph_dn = np.where(override, arr.ph_dn, np.where(thermal, arr.gamma_s * (1.0 + n_ph), 0.0))
    T_photon = np.where(override, _effective_temperature(arr.ph_up, arr.ph_dn, g), arr.T_s)

    gaps = np.stack([e2 - e1 + 2 * g, e2 - e1], axis=1)
    separate = ~np.isnan(arr.T_q)
    T_qb = np.where(separate, arr.T_q, arr.T_s)
    bose_mode = (arr.mode == 2) & (arr.gamma_s > 0)
    n_q = bose(gaps, np.where(bose_mode, T_qb, 0.0)[:, None])
    equal = (arr.mode == 1)[:, None]
    qu_up = np.where(equal, arr.k[:, None], np.where(bose_mode[:, None], arr.gamma_s[:, None] * n_q, 0.0))
    qu_dn = np.where(equal, arr.k[:, None],
                     np.where(bose_mode[:, None], arr.gamma_s[:, None] * (1.0 + n_q), 0.0))
    T_quench = np.where(arr.mode == 2, T_qb, np.inf)
    return RateTable(energies, k_in, k_out, ph_up, ph_dn, qu_up, qu_dn, gaps, T_lead,
                     T_photon, T_quench, separate)


def assemble(rt: RateTable) -> np.ndarray:
    """Stack of generators ``M[n]`` with ``dp/dt = M @ p`` and zero column sums."""
    n = len(rt.ph_up)
    M = np.zeros((n, 5, 5))
    for level in range(1, 5):
        M[:, level, 0] = rt.k_in[:, level - 1]
        M[:, 0, level] = rt.k_out[:, level - 1]
    ld, rd, lu, ru = State.LEFT_DOWN, State.RIGHT_DOWN, State.LEFT_UP, State.RIGHT_UP
    # photon: ld -> rd and ru -> lu absorb eps_g
    M[:, rd, ld] = rt.ph_up
    M[:, ld, rd] = rt.ph_dn
    M[:, lu, ru] = rt.ph_up
    M[:, ru, lu] = rt.ph_dn
    # quench: ld <-> lu across Delta_l, rd <-> ru across Delta_r
    M[:, lu, ld] = rt.qu_up[:, 0]
    M[:, ld, lu] = rt.qu_dn[:, 0]
    M[:, ru, rd] = rt.qu_up[:, 1]
    M[:, rd, ru] = rt.qu_dn[:, 1]
    idx = np.arange(5)
    M[:, idx, idx] = -M.sum(axis=1)
    return M


@dataclass(frozen=True, eq=False)
class Generator:
    m: np.ndarray
    spec_hash: str

    def check(self):
        """Raise :class:`SpecError` if the rate-matrix invariants fail."""
        m = self.m
        off = m - np.diag(np.diag(m))
        if np.any(off < 0):
            raise SpecError("negative off-diagonal rate")
        scale = np.max(np.abs(m), axis=0)
        if np.any(np.abs(m.sum(axis=0)) > 1e-13 * np.where(scale > 0, scale, 1.0)):
            raise SpecError("generator columns do not sum to zero")
        return self


def build_generator(spec: DeviceSpec) -> Generator:
    if not isinstance(spec, DeviceSpec):
        raise SpecError(f"expected DeviceSpec, got {type(spec).__name__}")
    m = assemble(rate_table(DeviceArrays.from_specs([spec])))[0]
    m.setflags(write=False)
    return Generator(m, spec.key).check()
