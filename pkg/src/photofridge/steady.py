"""Stationary distribution of the five-state generator."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DomainError, MultipleSteadyStatesError, SolverError
from .model import STATE_LABELS, Generator

NEGATIVE_TOL = 1e-12
RESIDUAL_TOL = 1e-10


class Method(str, Enum):
    REPLACE_ROW = "replace_row"
    NULL_SPACE = "null_space"


@dataclass(frozen=True, eq=False)
class SteadyState:
    p: np.ndarray
    residual: float
    method: Method
    spec_hash: str

    def as_dict(self):
        return {label: float(x) for label, x in zip(STATE_LABELS, self.p)}


def residual(gen, p):
    """Max-norm of ``M @ p``; accepts a :class:`Generator` or a bare matrix."""
    m = gen.m if isinstance(gen, Generator) else np.asarray(gen, dtype=float)
    p = np.asarray(p, dtype=float)
    if p.shape != (m.shape[1],):
        raise DomainError(f"probability vector has shape {p.shape}, generator is {m.shape}")
    return float(np.max(np.abs(m @ p)))


def closed_classes(m):
    """Number of closed communicating classes of the chain with generator ``m``."""
    n = len(m)
    reach = (m.T > 0) | np.eye(n, dtype=bool)  # reach[i, j]: i can get to j
    for _ in range(int(np.ceil(np.log2(max(n, 2))))):
        reach = (reach.astype(np.int64) @ reach.astype(np.int64)) > 0
    # i lies in a closed class when every state it reaches leads back to it
    closed = np.all(~reach | reach.T, axis=1)
    return len({reach[i].tobytes() for i in np.nonzero(closed)[0]})


def _replace_row(m):
    r = int(np.argmax(np.abs(np.diag(m))))
    a = m.copy()
    a[r, :] = 1.0
    b = np.zeros(len(m))
    b[r] = 1.0
    try:
        return np.linalg.solve(a, b)
    except np.linalg.LinAlgError:
        return None


def _null_space(m):
    _, _, vt = np.linalg.svd(m)
    v = vt[-1]
    return v / v.sum()


def _clean(p):
    if np.any(p < -NEGATIVE_TOL):
        raise SolverError(f"steady state has negative component {p.min():.3e}")
    p = np.where(p < 0, 0.0, p)
    return p / p.sum()


def solve_steady(gen: Generator, method: Method | str | None = None) -> SteadyState:
    """Normalized kernel vector of ``gen.m``.

    By default the row with the largest diagonal magnitude is replaced by the
    normalization row and the 5x5 system is solved directly; if that fails the
    residual check, an SVD null-space extraction is used instead.  Passing
    ``method`` forces one route.
    """
    m = gen.m
    if closed_classes(m) > 1:
        raise MultipleSteadyStatesError("generator has more than one closed class")
    scale = float(np.max(np.abs(m)))
    method = None if method is None else Method(method)

    p, used = None, Method.REPLACE_ROW
    if method in (None, Method.REPLACE_ROW):
        p = _replace_row(m)
        bad = p is None or np.any(p < -NEGATIVE_TOL) or residual(m, p) > RESIDUAL_TOL * scale
        if bad and method is None:
            p = None
        elif p is None:
            raise SolverError("normalization system is singular")
    if p is None:
        p, used = _null_space(m), Method.NULL_SPACE
    p = _clean(p)
    res = residual(m, p)
    if res > RESIDUAL_TOL * scale:
        raise SolverError(f"steady-state residual {res:.3e} exceeds {RESIDUAL_TOL:g} * {scale:.3e}")
    p.setflags(write=False)
    return SteadyState(p, res, used, gen.spec_hash)


def solve_batch(M):
    """Replace-row solve for a stack of generators.

    Returns ``(p, residual, ok)``; rows with ``ok == False`` were singular,
    too negative or failed the residual check and should be re-solved one by
    one with :func:`solve_steady` to obtain a diagnostic.
    """
    M = np.asarray(M, dtype=float)
    n = len(M)
    rows = np.argmax(np.abs(np.diagonal(M, axis1=1, axis2=2)), axis=1)
    a = M.copy()
    a[np.arange(n), rows, :] = 1.0
    b = np.zeros((n, 5))
    b[np.arange(n), rows] = 1.0
    ok = np.ones(n, dtype=bool)
    try:
        p = np.linalg.solve(a, b[..., None])[..., 0]
    except np.linalg.LinAlgError:
        p = np.full((n, 5), np.nan)
        for i in range(n):
            try:
                p[i] = np.linalg.solve(a[i], b[i])
            except np.linalg.LinAlgError:
                ok[i] = False
    ok &= np.all(np.isfinite(p), axis=1) & np.all(p >= -NEGATIVE_TOL, axis=1)
    p = np.where(p < 0, 0.0, p)
    with np.errstate(invalid="ignore", divide="ignore"):
        p = p / p.sum(axis=1, keepdims=True)
    res = np.max(np.abs(np.einsum("nij,nj->ni", M, p)), axis=1)
    scale = np.max(np.abs(M), axis=(1, 2))
    ok &= res <= RESIDUAL_TOL * scale
    return p, res, ok
