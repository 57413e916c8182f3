"""Chunked, schedule-independent evaluation over sampled triples (r, t, delta)."""

from __future__ import annotations

import functools
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .geometry import DomainSet, SamplePlan, delta_samples, draw_samples, sample_pairs
from .lang import Call, Cond, GMap, Num, Param, ScalarFn, Var, walk

CHUNK_TRIPLES = 1 << 16
# combos farther than this (relative to the magnitudes involved) from the domain count as escapes
ROUNDING_SLACK = 4 * np.finfo(float).eps


def worker_count() -> int:
    raw = os.environ.get("XCONVEX_THREADS", "").strip()
    if raw:
        n = int(raw)
        if n < 1:
            raise ValueError("XCONVEX_THREADS must be a positive integer")
        return n
    return os.cpu_count() or 1


def map_chunks(fn: Callable[[int, int], object], bounds: Sequence[tuple[int, int]]) -> list:
    """Apply ``fn`` to every chunk; results come back in chunk order."""
    workers = min(worker_count(), len(bounds))
    if workers <= 1:
        return [fn(a, b) for a, b in bounds]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda ab: fn(*ab), bounds))


@dataclass(frozen=True)
class TripleSet:
    points: np.ndarray
    r_idx: np.ndarray
    t_idx: np.ndarray
    deltas: np.ndarray

    @property
    def n_pairs(self) -> int:
        return len(self.r_idx)

    def chunks(self, per_pair: int = 1) -> list[tuple[int, int]]:
        rows = max(1, CHUNK_TRIPLES // (len(self.deltas) * max(1, per_pair)))
        return [(a, min(a + rows, self.n_pairs)) for a in range(0, self.n_pairs, rows)]


@functools.lru_cache(maxsize=64)
def triple_set(M: DomainSet, plan: SamplePlan) -> TripleSet:
    samples = draw_samples(M, plan)
    r, t = sample_pairs(M, plan)
    return TripleSet(samples.points, r, t, delta_samples(plan))


def combos(ts: TripleSet, gt: np.ndarray, a: int, b: int) -> np.ndarray:
    """``delta * (r - t) + g(t)`` for pairs ``a:b``; shape ``(pairs, deltas, dim)``."""
    R = ts.points[ts.r_idx[a:b]]
    T = ts.points[ts.t_idx[a:b]]
    out = ts.deltas[None, :, None] * (R - T)[:, None, :]
    out += gt[ts.t_idx[a:b]][:, None, :]
    return out


def row_bounds(ts: TripleSet, gt: np.ndarray, a: int, b: int) -> np.ndarray:
    R = np.abs(ts.points[ts.r_idx[a:b]]).max(axis=1)
    T = np.abs(ts.points[ts.t_idx[a:b]]).max(axis=1)
    G = np.abs(gt[ts.t_idx[a:b]]).max(axis=1)
    return ROUNDING_SLACK * (R + T + G + 1.0)


def escape_distances(support: DomainSet, C: np.ndarray, bounds: np.ndarray) -> np.ndarray:
    """Distance of each combo (``(p, d, n)``) from ``support``, zeroed within rounding."""
    p, d, n = C.shape
    flat = C.reshape(-1, n)
    out = np.zeros(p * d)
    if support.is_whole_space:
        return out.reshape(p, d)
    outside = ~support.contains_many(flat)
    if outside.any():
        idx = np.flatnonzero(outside)
        dist = support.distance_many(flat[idx])
        slack = np.repeat(bounds, d)[idx]
        dist[dist <= slack] = 0.0
        out[idx] = dist
    return out.reshape(p, d)


# A candidate is (value, key): larger value wins, ties go to the smaller key.
Candidate = tuple


def better(a: Candidate | None, b: Candidate | None) -> Candidate | None:
    if a is None:
        return b
    if b is None:
        return a
    if a[0] != b[0]:
        return a if a[0] > b[0] else b
    return a if a[1] <= b[1] else b


def reduce_candidates(cands) -> Candidate | None:
    return functools.reduce(better, cands, None)


def row_candidate(rowvals: np.ndarray, mask: np.ndarray | None, offset: int) -> Candidate | None:
    vals = rowvals if mask is None else np.where(mask, rowvals, -np.inf)
    if len(vals) == 0:
        return None
    k = int(np.argmax(vals))
    if vals[k] == -np.inf:
        return None
    return (float(vals[k]), (offset + k,))


def gvalues(g: GMap, points: np.ndarray) -> np.ndarray:
    return g.apply(points)


def _guard_constant(node, bindings) -> float | None:
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Param):
        return bindings.get(node.name)
    return None


def auto_breakpoints(fn: ScalarFn, M: DomainSet, plan: SamplePlan) -> list[set[float]]:
    """Coordinates where ``fn`` may jump, one set per axis.

    Guards of the form ``xi <op> c`` contribute ``c``.  If ``floor`` or ``ceil``
    appears, every axis gets the integers of each truncated box, keeping the
    ``lattice_cap`` closest to the box's finite ends.
    """
    out = [set() for _ in range(M.dim)]
    bindings = fn.bindings
    lattice = False
    for node in walk(fn.body):
        if isinstance(node, Call) and node.name in ("floor", "ceil"):
            lattice = True
        if isinstance(node, Cond):
            for var, other in ((node.left, node.right), (node.right, node.left)):
                c = _guard_constant(other, bindings)
                if isinstance(var, Var) and c is not None and np.isfinite(c):
                    out[var.index].add(float(c))
    if lattice:
        for entry in M.truncated_boxes(plan.truncation_bound):
            if entry is None:
                continue
            lo, hi, box = entry
            for k, iv in enumerate(box):
                ints = np.arange(np.ceil(lo[k]), np.floor(hi[k]) + 1.0)
                ends = [e for e in (iv.lo, iv.hi) if np.isfinite(e)] or [0.0]
                dist = np.min(np.abs(ints[:, None] - np.array(ends)[None, :]), axis=1)
                keep = ints[np.argsort(dist, kind="stable")[: plan.lattice_cap]]
                out[k].update(float(v) for v in keep)
    return out


def effective_plan(plan: SamplePlan, M: DomainSet, *fns: ScalarFn) -> SamplePlan:
    """``plan`` with automatic breakpoints of ``fns`` added (if enabled)."""
    if not plan.auto_breakpoints or not fns:
        return plan
    extra = [set() for _ in range(M.dim)]
    for fn in fns:
        for k, vals in enumerate(auto_breakpoints(fn, M, plan)):
            extra[k] |= vals
    if not any(extra):
        return plan
    return plan.with_breakpoints([sorted(v) for v in extra])
