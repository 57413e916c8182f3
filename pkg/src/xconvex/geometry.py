"""Union-of-box domains in R^n: exact membership and deterministic sampling.

Membership always uses the original (possibly infinite) bounds.  Sampling
clips infinite ends to ``[-B, B]`` where ``B`` is the plan's truncation bound.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "Interval",
    "DomainSet",
    "SamplePlan",
    "Samples",
    "contains",
    "sample_points",
    "draw_samples",
    "delta_samples",
    "sample_pairs",
]


def _parse_bound(value) -> float:
    if isinstance(value, str):
        key = value.strip().lower()
        if key in ("inf", "+inf"):
            return math.inf
        if key == "-inf":
            return -math.inf
        raise ValueError(f"bad interval bound {value!r}")
    return float(value)


def _format_bound(value: float):
    if value == math.inf:
        return "inf"
    if value == -math.inf:
        return "-inf"
    return value


@dataclass(frozen=True)
class Interval:
    """A real interval; ``None`` closedness means closed if finite, open if infinite."""

    lo: float
    hi: float
    lo_closed: bool | None = None
    hi_closed: bool | None = None

    def __post_init__(self):
        lo, hi = float(self.lo), float(self.hi)
        if math.isnan(lo) or math.isnan(hi):
            raise ValueError("interval bounds must not be NaN")
        lo_closed = math.isfinite(lo) if self.lo_closed is None else bool(self.lo_closed)
        hi_closed = math.isfinite(hi) if self.hi_closed is None else bool(self.hi_closed)
        if (lo_closed and math.isinf(lo)) or (hi_closed and math.isinf(hi)):
            raise ValueError("an infinite endpoint cannot be closed")
        if lo > hi:
            raise ValueError(f"empty interval: lo={lo} > hi={hi}")
        if lo == hi and not (lo_closed and hi_closed):
            raise ValueError("a degenerate interval must be closed at both ends")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "lo_closed", lo_closed)
        object.__setattr__(self, "hi_closed", hi_closed)

    def contains(self, x: float) -> bool:
        above = x > self.lo or (self.lo_closed and x == self.lo)
        below = x < self.hi or (self.hi_closed and x == self.hi)
        return bool(above and below)

    def contains_many(self, x: np.ndarray) -> np.ndarray:
        above = (x >= self.lo) if self.lo_closed else (x > self.lo)
        below = (x <= self.hi) if self.hi_closed else (x < self.hi)
        return above & below

    @property
    def unbounded(self) -> bool:
        return self.lo == -math.inf and self.hi == math.inf

    @classmethod
    def from_json(cls, obj: dict) -> Interval:
        return cls(
            _parse_bound(obj["lo"]),
            _parse_bound(obj["hi"]),
            obj.get("lo_closed"),
            obj.get("hi_closed"),
        )

    def to_json(self) -> dict:
        return {
            "lo": _format_bound(self.lo),
            "hi": _format_bound(self.hi),
            "lo_closed": self.lo_closed,
            "hi_closed": self.hi_closed,
        }


Box = tuple  # tuple[Interval, ...], one interval per axis


@dataclass(frozen=True)
class DomainSet:
    """A non-empty finite union of axis-aligned boxes in ``dim`` dimensions."""

    dim: int
    pieces: tuple[Box, ...]

    def __post_init__(self):
        if int(self.dim) < 1:
            raise ValueError("dim must be a positive integer")
        pieces = tuple(tuple(box) for box in self.pieces)
        if not pieces:
            raise ValueError("a domain needs at least one box")
        for box in pieces:
            if len(box) != self.dim:
                raise ValueError(f"box {box} does not have {self.dim} intervals")
            for iv in box:
                if not isinstance(iv, Interval):
                    raise TypeError("box entries must be Interval instances")
        object.__setattr__(self, "dim", int(self.dim))
        object.__setattr__(self, "pieces", pieces)

    # -- construction -------------------------------------------------------

    @classmethod
    def union(cls, *intervals: Interval | tuple) -> DomainSet:
        """One-dimensional union, e.g. ``DomainSet.union((1, 2), (3, inf))``."""
        boxes = []
        for iv in intervals:
            if not isinstance(iv, Interval):
                iv = Interval(*iv)
            boxes.append((iv,))
        return cls(1, tuple(boxes))

    @classmethod
    def box(cls, *intervals: Interval | tuple) -> DomainSet:
        """A single box, one interval per axis."""
        ivs = tuple(iv if isinstance(iv, Interval) else Interval(*iv) for iv in intervals)
        return cls(len(ivs), (ivs,))

    @classmethod
    def whole(cls, dim: int = 1) -> DomainSet:
        return cls(dim, (tuple(Interval(-math.inf, math.inf) for _ in range(dim)),))

    @classmethod
    def from_json(cls, obj) -> DomainSet:
        if isinstance(obj, str):
            raise ValueError("domain must be a JSON object")
        dim = int(obj["dim"])
        pieces = []
        for box in obj["pieces"]:
            if isinstance(box, dict):
                box = [box]
            pieces.append(tuple(Interval.from_json(iv) for iv in box))
        return cls(dim, tuple(pieces))

    def to_json(self) -> dict:
        return {
            "dim": self.dim,
            "pieces": [[iv.to_json() for iv in box] for box in self.pieces],
        }

    # -- membership ---------------------------------------------------------

    @property
    def is_whole_space(self) -> bool:
        return any(all(iv.unbounded for iv in box) for box in self.pieces)

    def contains(self, x) -> bool:
        x = _as_point(x, self.dim)
        return any(all(iv.contains(float(xi)) for iv, xi in zip(box, x)) for box in self.pieces)

    def contains_many(self, X: np.ndarray) -> np.ndarray:
        X = _as_points(X, self.dim)
        if self.is_whole_space:
            return np.ones(len(X), dtype=bool)
        out = np.zeros(len(X), dtype=bool)
        for box in self.pieces:
            inside = np.ones(len(X), dtype=bool)
            for k, iv in enumerate(box):
                inside &= iv.contains_many(X[:, k])
            out |= inside
        return out

    def distance_many(self, X: np.ndarray) -> np.ndarray:
        """Euclidean distance to the closure of the union."""
        X = _as_points(X, self.dim)
        best = np.full(len(X), np.inf)
        for box in self.pieces:
            sq = np.zeros(len(X))
            for k, iv in enumerate(box):
                below = np.maximum(iv.lo - X[:, k], 0.0)
                above = np.maximum(X[:, k] - iv.hi, 0.0)
                d = below + above
                sq += d * d
            np.minimum(best, np.sqrt(sq), out=best)
        return best

    # -- sampling support ---------------------------------------------------

    def truncated_boxes(self, bound: float) -> list[tuple[np.ndarray, np.ndarray, Box] | None]:
        """Per box ``(lo, hi, box)`` clipped to ``[-bound, bound]``; ``None`` if empty."""
        out = []
        for box in self.pieces:
            lo = np.array([max(iv.lo, -bound) for iv in box])
            hi = np.array([min(iv.hi, bound) for iv in box])
            out.append((lo, hi, box) if np.all(lo <= hi) else None)
        return out


def contains(M: DomainSet, x) -> bool:
    """Exact membership of the point ``x`` in ``M``."""
    return M.contains(x)


def _as_point(x, dim: int) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.ndim != 1 or len(x) != dim:
        raise ValueError(f"expected a point of dimension {dim}, got shape {x.shape}")
    return x


def _as_points(X, dim: int) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1 and dim == 1:
        X = X[:, None]
    if X.ndim != 2 or X.shape[1] != dim:
        raise ValueError(f"expected points of dimension {dim}, got shape {X.shape}")
    return X


@dataclass(frozen=True)
class SamplePlan:
    """How domains are sampled.

    ``breakpoints`` holds extra coordinates per axis.  ``pair_budget`` caps the
    number of ordered pairs drawn from grid and breakpoint points; each random
    point adds two ordered pairs with a seeded random partner.
    """

    grid_per_axis: int = 101
    random_count: int = 2000
    seed: int = 42
    delta_grid: int = 501
    truncation_bound: float = 1000.0
    breakpoints: tuple[tuple[float, ...], ...] = ()
    pair_budget: int = 100_000
    auto_breakpoints: bool = True
    lattice_cap: int = 64

    def __post_init__(self):
        if int(self.grid_per_axis) < 1:
            raise ValueError("grid_per_axis must be positive")
        if int(self.random_count) < 0:
            raise ValueError("random_count must be non-negative")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if int(self.delta_grid) < 2:
            raise ValueError("delta_grid must be at least 2")
        if not (float(self.truncation_bound) > 0 and math.isfinite(self.truncation_bound)):
            raise ValueError("truncation_bound must be a positive finite real")
        if int(self.pair_budget) < 1:
            raise ValueError("pair_budget must be positive")
        bps = self.breakpoints
        if bps and all(isinstance(b, (int, float)) for b in bps):
            bps = (tuple(bps),)
        bps = tuple(tuple(sorted({float(v) + 0.0 for v in axis})) for axis in bps)
        object.__setattr__(self, "breakpoints", bps)
        for name in ("grid_per_axis", "random_count", "seed", "delta_grid", "pair_budget", "lattice_cap"):
            object.__setattr__(self, name, int(getattr(self, name)))
        object.__setattr__(self, "truncation_bound", float(self.truncation_bound))

    def axis_breakpoints(self, axis: int) -> tuple[float, ...]:
        return self.breakpoints[axis] if axis < len(self.breakpoints) else ()

    def with_breakpoints(self, extra: Sequence[Iterable[float]]) -> SamplePlan:
        """Return a plan whose breakpoints also include ``extra`` (one iterable per axis)."""
        n = max(len(self.breakpoints), len(extra))
        merged = []
        for axis in range(n):
            cur = set(self.axis_breakpoints(axis))
            if axis < len(extra):
                cur.update(float(v) for v in extra[axis])
            merged.append(tuple(sorted(cur)))
        return replace(self, breakpoints=tuple(merged))

    @classmethod
    def from_json(cls, obj: dict | None) -> SamplePlan:
        obj = dict(obj or {})
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(obj) - known
        if unknown:
            raise ValueError(f"unknown plan fields: {sorted(unknown)}")
        if "breakpoints" in obj:
            obj["breakpoints"] = tuple(
                tuple(axis) if isinstance(axis, (list, tuple)) else axis for axis in obj["breakpoints"]
            )
        return cls(**obj)

    def to_json(self) -> dict:
        return {
            "grid_per_axis": self.grid_per_axis,
            "random_count": self.random_count,
            "seed": self.seed,
            "delta_grid": self.delta_grid,
            "truncation_bound": self.truncation_bound,
            "breakpoints": [list(axis) for axis in self.breakpoints],
            "pair_budget": self.pair_budget,
            "auto_breakpoints": self.auto_breakpoints,
            "lattice_cap": self.lattice_cap,
        }


@dataclass(frozen=True)
class Samples:
    """Sampled points sorted lexicographically, with a grid/breakpoint flag."""

    points: np.ndarray
    structured: np.ndarray = field(repr=False)

    def __len__(self) -> int:
        return len(self.points)


def _axis_grid(lo: float, hi: float, iv, n: int) -> np.ndarray:
    if lo == hi:
        return np.array([lo])
    if n == 1:
        return np.array([0.5 * (lo + hi)])
    step = (hi - lo) / (n - 1)
    a = lo + step if (lo == iv.lo and not iv.lo_closed) else lo
    b = hi - step if (hi == iv.hi and not iv.hi_closed) else hi
    if a > b:
        return np.array([0.5 * (lo + hi)])
    return np.linspace(a, b, n)


def _merge_axis(grid: np.ndarray, bps: np.ndarray, span: float) -> np.ndarray:
    """Grid plus breakpoints; grid values within rounding of a breakpoint are dropped."""
    if len(bps) == 0:
        return grid
    near = np.min(np.abs(grid[:, None] - bps[None, :]), axis=1) <= 1e-9 * max(span, 1.0)
    return np.union1d(grid[~near], bps)


def _unique_rows(X: np.ndarray) -> np.ndarray:
    if len(X) == 0:
        return X
    return np.unique(X + 0.0, axis=0)


@functools.lru_cache(maxsize=64)
def draw_samples(M: DomainSet, plan: SamplePlan) -> Samples:
    B = plan.truncation_bound
    structured = []
    random_pts = []
    rng = np.random.default_rng(plan.seed)
    any_box = False
    for entry in M.truncated_boxes(B):
        if entry is None:
            continue
        lo, hi, box = entry
        any_box = True
        axes = []
        for k, iv in enumerate(box):
            grid = _axis_grid(lo[k], hi[k], iv, plan.grid_per_axis)
            bps = np.array([v for v in plan.axis_breakpoints(k) if lo[k] <= v <= hi[k]])
            axes.append(_merge_axis(grid, bps, hi[k] - lo[k]))
        mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, M.dim)
        structured.append(mesh)
        if plan.random_count:
            draws = rng.uniform(lo, hi, size=(plan.random_count, M.dim))
            random_pts.append(draws)
    if not any_box:
        raise ValueError("every box of the domain is empty after truncation")

    S = np.concatenate(structured)
    S = _unique_rows(S[M.contains_many(S)])
    if random_pts:
        R = np.concatenate(random_pts)
        R = _unique_rows(R[M.contains_many(R)])
    else:
        R = np.empty((0, M.dim))
    if len(S) + len(R) == 0:
        raise ValueError("no sampled point lies in the domain")

    allpts = np.concatenate([S, R]) + 0.0
    flags = np.concatenate([np.ones(len(S), bool), np.zeros(len(R), bool)])
    # np.unique keeps the first occurrence, so grid points win over random duplicates
    pts, first = np.unique(allpts, axis=0, return_index=True)
    flags = flags[first]
    pts.setflags(write=False)
    flags.setflags(write=False)
    return Samples(pts, flags)


def sample_points(M: DomainSet, plan: SamplePlan) -> np.ndarray:
    """Grid, breakpoint and seeded random points of ``M``, sorted and de-duplicated."""
    return draw_samples(M, plan).points


def delta_samples(plan: SamplePlan) -> np.ndarray:
    d = np.linspace(0.0, 1.0, plan.delta_grid)
    d[0], d[-1] = 0.0, 1.0
    d.setflags(write=False)
    return d


@functools.lru_cache(maxsize=64)
def sample_pairs(M: DomainSet, plan: SamplePlan) -> tuple[np.ndarray, np.ndarray]:
    """Ordered index pairs ``(r, t)`` into :func:`sample_points`, sorted.

    All ordered pairs when they fit the budget.  Otherwise all pairs of grid and
    breakpoint points (uniformly subsampled if even those exceed the budget),
    plus two ordered pairs per random point with a seeded random partner.
    """
    samples = draw_samples(M, plan)
    n = len(samples)
    budget = plan.pair_budget
    if n * n <= budget:
        r, t = np.divmod(np.arange(n * n, dtype=np.int64), n)
        r.setflags(write=False)
        t.setflags(write=False)
        return r, t

    rng = np.random.default_rng([plan.seed, 1])
    s_idx = np.flatnonzero(samples.structured)
    k = len(s_idx)
    if k * k <= budget:
        flat = np.arange(k * k, dtype=np.int64)
    else:
        flat = np.sort(rng.choice(k * k, size=budget, replace=False))
    a, b = np.divmod(flat, k)
    codes = [s_idx[a] * n + s_idx[b]]

    rand_idx = np.flatnonzero(~samples.structured)
    if len(rand_idx):
        partners = rng.integers(0, n, size=len(rand_idx))
        codes.append(rand_idx * n + partners)
        codes.append(partners * n + rand_idx)
    codes = np.unique(np.concatenate(codes))
    r, t = np.divmod(codes, n)
    r.setflags(write=False)
    t.setflags(write=False)
    return r, t
