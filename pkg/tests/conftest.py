import math

import numpy as np
import pytest

from photofridge import DeviceSpec


def log_uniform(rng, lo, hi):
    return float(math.exp(rng.uniform(math.log(lo), math.log(hi))))


def random_spec(rng):
    """A valid device with every rate regime represented."""
    eps1 = -log_uniform(rng, 0.05, 5)
    eps2 = log_uniform(rng, 0.05, 5) if rng.random() < 0.5 else -eps1
    eps_g = log_uniform(rng, 0.05, 3)
    kw = dict(eps1=eps1, eps2=eps2, eps_g=eps_g, gamma=log_uniform(rng, 0.1, 10),
              T_l=log_uniform(rng, 0.05, 20), T_r=log_uniform(rng, 0.05, 20),
              mu=float(rng.uniform(-1, 1)) if rng.random() < 0.3 else 0.0)
    photon = rng.integers(3)
    if photon == 0:
        kw["photon_override"] = (log_uniform(rng, 0.01, 10),) * 2
    elif photon == 1:
        kw["photon_override"] = (log_uniform(rng, 0.01, 10), log_uniform(rng, 0.01, 10))
    kw["gamma_s"] = log_uniform(rng, 0.01, 10)
    kw["T_s"] = log_uniform(rng, 0.05, 1e3)
    mode = ["off", "equal", "bose"][rng.integers(3)]
    kw["quench_mode"] = mode
    if mode == "equal":
        kw["k"] = log_uniform(rng, 0.01, 10)
    return DeviceSpec(**kw)


def equilibrium_spec(rng):
    """All baths at one temperature; thermal photon and quench rates."""
    T = log_uniform(rng, 0.1, 10)
    eps1 = -log_uniform(rng, 0.05, 3)
    eps2 = log_uniform(rng, 0.05, 3)
    return DeviceSpec(eps1=eps1, eps2=eps2, eps_g=log_uniform(rng, 0.05, 2),
                      gamma=log_uniform(rng, 0.1, 10), T_l=T, T_r=T, T_s=T,
                      mu=float(rng.uniform(-0.5, 0.5)), gamma_s=log_uniform(rng, 0.01, 10),
                      quench_mode=["off", "bose"][rng.integers(2)])


def gibbs(spec, T):
    """Grand-canonical occupation of the five states, straight from the Boltzmann weights."""
    e1, e2, g, mu = spec.eps1, spec.eps2, spec.eps_g, spec.mu
    energies = [0.0, e1 - g, e1, e2 + g, e2]
    electrons = [0, 1, 1, 1, 1]
    w = [math.exp(-(e - mu * n) / T) for e, n in zip(energies, electrons)]
    z = math.fsum(w)
    return np.array([x / z for x in w])


def oracle_spec(k, gamma, eps, eps_g, T_l):
    """Device in the regime of the closed-form heat flows."""
    return DeviceSpec.symmetric(eps, eps_g, gamma=gamma, T_l=T_l,
                                T_r=eps * T_l / (eps + eps_g), quench_mode="equal", k=k,
                                photon_override=(k, k))


ORACLE_GRID = [(k, g, e, eg, tl)
               for k in (0.1, 1, 10) for g in (0.1, 1, 10) for e in (0.5, 1, 2)
               for eg in (0.5, 1) for tl in (0.5, 1, 2, 5)]


@pytest.fixture
def rng():
    return np.random.default_rng(20121114)


@pytest.fixture
def a1_spec():
    return oracle_spec(1, 1, 1, 1, 2)
