"""Python-side driver for the batched monodromy kernel."""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ..errors import IntegrationError
from ..potential import TRIG, PeriodicPotential, sup_norm_bound
from ._kernel import STATUS_OK, integrate_batch

DEFAULT_ODE_TOL = 1e-10

# Chunking is fixed (never derived from the thread count) so results do not
# depend on how many workers evaluate them.
_CHUNK = 512


def thread_count() -> int:
    env = os.environ.get("HILLSPEC_THREADS")
    cpus = os.cpu_count() or 1
    if env:
        try:
            return max(1, min(int(env), cpus))
        except ValueError:
            pass
    return cpus


@lru_cache(maxsize=64)
def _kernel_args(V: PeriodicPotential):
    T = V.period
    if V.kind == TRIG and not V.is_constant:
        seg_x0 = np.array([0.0])
        seg_x1 = np.array([T])
        seg_c = np.array([0.0])
        seg_u = np.array([False])
        w = np.array([2 * math.pi * k / T for k, _, _ in V.coeffs])
        ca = np.array([a for _, a, _ in V.coeffs])
        cb = np.array([b for _, _, b in V.coeffs])
    else:
        vals = [V.mean_value] if V.kind == TRIG else list(V.samples)
        n = len(vals)
        edges = np.array([T * i / n for i in range(n + 1)])
        edges[-1] = T
        seg_x0, seg_x1 = edges[:-1].copy(), edges[1:].copy()
        seg_c = np.array(vals, dtype=float)
        seg_u = np.ones(n, dtype=np.bool_)
        w = np.zeros(0)
        ca = np.zeros(0)
        cb = np.zeros(0)
    return seg_x0, seg_x1, seg_c, seg_u, w, ca, cb


@dataclass
class BatchResult:
    energies: np.ndarray
    matrices: np.ndarray  # (n, 4): m11, m21, m12, m22
    errors: np.ndarray
    zeros: np.ndarray  # zeros of the Dirichlet solution in (0, T]
    scale_exp: np.ndarray  # >0 means entries were rescaled by 1e100**scale_exp
    steps: int

    @property
    def traces(self) -> np.ndarray:
        tr = self.matrices[:, 0] + self.matrices[:, 3]
        big = self.scale_exp > 0
        if np.any(big):
            tr = tr.copy()
            tr[big] = np.copysign(np.inf, tr[big])
        return tr


def _run_chunk(V: PeriodicPotential, E: np.ndarray, tol: float) -> tuple:
    seg_x0, seg_x1, seg_c, seg_u, w, ca, cb = _kernel_args(V)
    v = sup_norm_bound(V)
    kmax = math.sqrt(max(float(np.max(E)) + v, 1.0))
    hmax = min(0.5 / kmax, V.period)
    max_steps = int(max(2e5, 400 * V.period * kmax))
    Y, err, zeros, scale, steps, status, worst = integrate_batch(
        E, seg_x0, seg_x1, seg_c, seg_u, w, ca, cb, tol, V.period, hmax, max_steps
    )
    if status != STATUS_OK:
        raise IntegrationError(
            f"step budget {max_steps} exhausted over period {V.period} "
            f"(energies {E.min():.6g}..{E.max():.6g})",
            achieved_error=float(worst) * tol,
        )
    return Y, err, zeros, scale, steps


def evaluate_batch(V: PeriodicPotential, energies, tol: float = DEFAULT_ODE_TOL) -> BatchResult:
    """Monodromy matrices of V at each energy."""
    if not tol > 0:
        raise ValueError("tol must be positive")
    E = np.ascontiguousarray(np.atleast_1d(np.asarray(energies, dtype=float)))
    if E.size == 0:
        empty = np.zeros(0)
        return BatchResult(E, np.zeros((0, 4)), empty, empty.astype(np.int64), empty.astype(np.int64), 0)
    order = np.argsort(E, kind="stable")
    Es = E[order]
    chunks = [Es[i : i + _CHUNK] for i in range(0, Es.size, _CHUNK)]
    workers = min(thread_count(), len(chunks))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda c: _run_chunk(V, c, tol), chunks))
    else:
        parts = [_run_chunk(V, c, tol) for c in chunks]
    Y = np.concatenate([p[0] for p in parts])
    err = np.concatenate([p[1] for p in parts])
    zeros = np.concatenate([p[2] for p in parts])
    scale = np.concatenate([p[3] for p in parts])
    steps = sum(p[4] for p in parts)
    inv = np.empty_like(order)
    inv[order] = np.arange(order.size)
    return BatchResult(E, Y[inv], err[inv], zeros[inv], scale[inv], steps)
