"""Geometric reductions: interval discrepancy, boxes, and envy.

A point x in [0,1]^d becomes a sparse +-1 vector over Haar coordinates:
per axis, one wavelet per scale touches x, plus one shared constant
coordinate.  Keeping those d*log(T)+1 signed sums small keeps EVERY dyadic
interval count small, because an interval's indicator has unit l1 mass in
the Haar system.  The tensor version does the same for axis-parallel boxes
with (log(T)+1)^d coordinates per point.  Envy minimization for two
players rides on top: cardinal envy through the covariance eigenbasis,
ordinal envy through the d = 2 interval reduction.

Every measurement here is computed twice, by direct counting and by Haar
reconstruction, and the two routes must agree to fp tolerance; a
disagreement raises instead of returning a number.
"""

import math
import time
from dataclasses import dataclass
from itertools import product
from typing import Optional, Sequence

import numpy as np

from .core import RunResult
from .errors import InvariantViolationError, MemoryGuardError
from .haar import (DyadicBox, DyadicInterval, box_coefficients, cell_index,
                   interval_coefficients)
from .rng import SeededRng
from .signer import CoshSigner, SignerConfig, random_sign
from .spectral import eigendecompose

COUNT_TOL = 1e-6


@dataclass(frozen=True)
class PointStream:
    """Arrivals in [0,1]^d, fixed up front."""

    points: tuple[tuple[float, ...], ...]
    d: int

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("dimension must be >= 1")
        for t, x in enumerate(self.points):
            if len(x) != self.d:
                raise ValueError(f"point {t} has {len(x)} coordinates, want {self.d}")
            for xi in x:
                if not 0.0 <= xi <= 1.0:
                    raise ValueError(f"point {t} coordinate {xi} outside [0, 1]")

    @property
    def T(self) -> int:
        return len(self.points)

    def axis(self, i: int) -> tuple[float, ...]:
        return tuple(x[i] for x in self.points)

    @classmethod
    def uniform(cls, d: int, T: int, rng: SeededRng) -> "PointStream":
        pts = tuple(tuple(rng.uniform() for _ in range(d)) for _ in range(T))
        return cls(points=pts, d=d)


@dataclass(frozen=True)
class IntervalQuery:
    """[a, b) on one axis; b = 1.0 also admits x = 1.0 so the right edge
    of the unit cube stays coverable."""

    axis: int
    a: float
    b: float

    def __post_init__(self):
        if self.axis < 0:
            raise ValueError("axis must be >= 0")
        if not (0.0 <= self.a < self.b <= 1.0):
            raise ValueError(f"need 0 <= a < b <= 1, got [{self.a}, {self.b})")

    def contains(self, x: float) -> bool:
        if x == 1.0:
            return self.b == 1.0
        return self.a <= x < self.b


@dataclass(frozen=True)
class Allocation:
    """Items assigned to player 1 or 2, with both players' valuations."""

    assignment: tuple[int, ...]
    v1: tuple[float, ...]
    v2: tuple[float, ...]

    def __post_init__(self):
        if not (len(self.assignment) == len(self.v1) == len(self.v2)):
            raise ValueError("assignment and valuations must have equal length")
        if any(a not in (1, 2) for a in self.assignment):
            raise ValueError("assignment entries must be 1 or 2")
        for vals in (self.v1, self.v2):
            if any(not 0.0 <= u <= 1.0 for u in vals):
                raise ValueError("valuations must lie in [0, 1]")

    @property
    def T(self) -> int:
        return len(self.assignment)


@dataclass
class GeometricRun:
    run: RunResult
    signs: tuple[int, ...]
    points: PointStream
    max_scale: int


def tree_depth(T: int) -> int:
    """Dyadic depth covering T arrivals: T rounded up to a power of two."""
    return (T - 1).bit_length() if T > 1 else 0


def _signer_loop(points: PointStream, max_scale: int, cfg: SignerConfig,
                 build_update, algorithm: str, rng: Optional[SeededRng],
                 stride: Optional[int], lazy: bool) -> GeometricRun:
    if algorithm not in ("cosh", "random"):
        raise ValueError(f"unknown algorithm {algorithm!r}")
    seed = rng.seed if rng is not None else 0
    algo_rng = (rng if rng is not None else SeededRng(0)).derive("algo")
    T = points.T
    if stride is None:
        stride = max(1, T // 64)
    engine = CoshSigner(cfg, size=None if lazy else cfg.n)
    signs = []
    trace: list[tuple[int, float, float]] = []
    started = time.perf_counter()
    small = not lazy and cfg.n <= 8192
    for t, x in enumerate(points.points, start=1):
        coords, vals = build_update(x, engine)
        forced = random_sign(algo_rng) if algorithm == "random" else None
        signs.append(engine.step_pm(coords, vals, forced))
        if t % stride == 0 or t == T:
            trace.append((t, engine.max_abs, engine.phi))
            if small:
                engine.check_consistency()
    if T > 0 and not small:
        engine.check_consistency()
    run = RunResult(algorithm=algorithm, seed=seed, steps=T,
                    max_linf=engine.max_abs, argmax_t=engine.argmax_t,
                    trace=trace, final_linf=engine.current_linf(),
                    wall_time=time.perf_counter() - started)
    return GeometricRun(run=run, signs=tuple(signs), points=points,
                        max_scale=max_scale)


def interval_signer(points: PointStream, max_scale: Optional[int] = None,
                    cfg: Optional[SignerConfig] = None, algorithm: str = "cosh",
                    rng: Optional[SeededRng] = None,
                    stride: Optional[int] = None) -> GeometricRun:
    """Balance interval counts on every axis of a point stream.

    Coordinates: one shared constant (id 0), then per axis a block of
    2^max_scale - 1 wavelet slots ordered by scale.  Each update touches
    the constant plus one wavelet per axis per scale, all with value +-1,
    which is exactly d * max_scale + 1 nonzeros.
    """
    d = points.d
    J = tree_depth(points.T) if max_scale is None else max_scale
    if J < 0:
        raise ValueError("max_scale must be >= 0")
    tprime = 1 << J
    block = tprime - 1
    sparsity = d * J + 1
    if cfg is None:
        cfg = SignerConfig(n=1 + d * block, s=sparsity)

    def build(x, engine):
        # inline of scale_decomposition on cell bits, allocation-light
        coords = [0]
        vals = [1.0]
        for i in range(d):
            base = 1 + i * block
            c = cell_index(x[i], J)
            for j in range(1, J + 1):
                k = c >> (J - j + 1)
                coords.append(base + (1 << (j - 1)) + k - 1)
                vals.append(-1.0 if (c >> (J - j)) & 1 else 1.0)
        if len(coords) != sparsity:
            raise InvariantViolationError(
                "problems", engine.t + 1,
                f"update sparsity {len(coords)} != {sparsity}")
        return coords, vals

    return _signer_loop(points, J, cfg, build, algorithm, rng, stride,
                        lazy=False)


def tusnady_signer(points: PointStream, max_scale: Optional[int] = None,
                   cfg: Optional[SignerConfig] = None, algorithm: str = "cosh",
                   rng: Optional[SeededRng] = None, stride: Optional[int] = None,
                   memory_cap: int = 2_000_000) -> GeometricRun:
    """Balance dyadic box counts via the tensor Haar system.

    Coordinate ids are assigned lazily, in first-touch order, keyed by the
    tensor index; only the T * (max_scale+1)^d touched coordinates are ever
    materialized even though the declared space has 2^(max_scale * d).
    """
    d = points.d
    J = tree_depth(points.T) if max_scale is None else max_scale
    if J < 0:
        raise ValueError("max_scale must be >= 0")
    sparsity = (J + 1) ** d
    if cfg is None:
        cfg = SignerConfig(n=(1 << J) ** d, s=sparsity)
    coord_map: dict[tuple, int] = {}

    def build(x, engine):
        per_axis = []
        for i in range(d):
            c = cell_index(x[i], J)
            dec = [((0, 0), 1.0)]
            for j in range(1, J + 1):
                k = c >> (J - j + 1)
                dec.append(((j, k), -1.0 if (c >> (J - j)) & 1 else 1.0))
            per_axis.append(dec)
        entries = []
        for combo in product(*per_axis):
            key = tuple(jk for jk, _ in combo)
            val = 1.0
            for _, v in combo:
                val *= v
            entries.append((key, val))
        if len(entries) != sparsity:
            raise InvariantViolationError(
                "problems", engine.t + 1,
                f"update sparsity {len(entries)} != {sparsity}")
        # fixed evaluation order: sort by tensor index, not by assigned id,
        # so d = 1 reproduces interval_signer's sums bit for bit
        entries.sort(key=lambda e: e[0])
        coords = []
        vals = []
        for key, val in entries:
            cid = coord_map.setdefault(key, len(coord_map))
            coords.append(cid)
            vals.append(val)
        if len(coord_map) > memory_cap:
            raise MemoryGuardError(
                f"{len(coord_map)} touched coordinates exceed cap {memory_cap}")
        engine.ensure_size(len(coord_map))
        return coords, vals

    geo = _signer_loop(points, J, cfg, build, algorithm, rng, stride, lazy=True)
    geo.run.extra["coords_touched"] = len(coord_map)
    return geo


def _axis_cells(points: PointStream, axis: int, scale: int, t: int) -> np.ndarray:
    return np.array([cell_index(x[axis], scale) for x in points.points[:t]],
                    dtype=np.int64)


def _wavelet_values(cells: np.ndarray, scale: int, j: int, k: int) -> np.ndarray:
    """Vector of Psi_{j,k} over points given their finest-cell indices."""
    if j == 0:
        return np.ones(len(cells), dtype=np.int64)
    inside = (cells >> (scale - j + 1)) == k
    sign = 1 - 2 * ((cells >> (scale - j)) & 1)
    return inside * sign


def dyadic_interval_discrepancy(signs: Sequence[int], points: PointStream,
                                interval: DyadicInterval, axis: int,
                                t: int) -> int:
    """|signed count of points in a dyadic interval|, dual-computed.

    Direct counting and Haar reconstruction from the interval's coefficient
    expansion must agree; a mismatch means the reduction is broken and
    raises rather than returning either number.
    """
    if not 0 <= axis < points.d:
        raise ValueError(f"axis {axis} out of range for d={points.d}")
    if not 0 <= t <= points.T:
        raise ValueError(f"t={t} out of range")
    chi = np.array(signs[:t], dtype=np.int64)
    direct = int(sum(int(s) for s, x in zip(signs[:t], points.points[:t])
                     if interval.contains(x[axis])))
    scale = max(interval.level, 1)
    cells = _axis_cells(points, axis, scale, t)
    recon = 0.0
    for h, coeff in interval_coefficients(interval).items():
        dt_h = int(np.dot(chi, _wavelet_values(cells, scale, h.j, h.k))) if t else 0
        recon += coeff * dt_h
    if abs(recon - direct) > COUNT_TOL * max(1, points.T):
        raise InvariantViolationError(
            "problems", t,
            f"interval {interval} axis {axis}: count {direct} vs "
            f"reconstruction {recon}")
    return abs(direct)


def dyadic_box_discrepancy(signs: Sequence[int], points: PointStream,
                           box: DyadicBox, t: int) -> int:
    """Tensor version of the interval oracle, same dual-route contract."""
    if box.d != points.d:
        raise ValueError(f"box dimension {box.d} != stream dimension {points.d}")
    if not 0 <= t <= points.T:
        raise ValueError(f"t={t} out of range")
    chi = np.array(signs[:t], dtype=np.int64)
    direct = int(sum(int(s) for s, x in zip(signs[:t], points.points[:t])
                     if all(iv.contains(xi) for iv, xi in zip(box.axes, x))))
    scale = max(max(iv.level for iv in box.axes), 1)
    cells = [_axis_cells(points, i, scale, t) for i in range(points.d)]
    recon = 0.0
    for th, coeff in box_coefficients(box).items():
        vec = chi.copy()
        for i, h in enumerate(th.parts):
            vec = vec * _wavelet_values(cells[i], scale, h.j, h.k)
        recon += coeff * int(vec.sum())
    if abs(recon - direct) > COUNT_TOL * max(1, points.T):
        raise InvariantViolationError(
            "problems", t,
            f"box {box}: count {direct} vs reconstruction {recon}")
    return abs(direct)


def max_dyadic_discrepancy(signs: Sequence[int], points: PointStream,
                           max_scale: Optional[int] = None,
                           t: Optional[int] = None,
                           cell_cap: int = 4_000_000) -> tuple[int, DyadicBox]:
    """Exact max |signed count| over EVERY dyadic box up to max_scale.

    Bins the first t signed points into the finest grid once; every coarser
    level is adjacent-pair sums of the previous one, so the full scan costs
    a small multiple of the finest grid size.  Returns the max and a
    witness box.
    """
    t = points.T if t is None else t
    if not 0 <= t <= points.T:
        raise ValueError(f"t={t} out of range")
    d = points.d
    J = tree_depth(points.T) if max_scale is None else max_scale
    if J < 0:
        raise ValueError("max_scale must be >= 0")
    side = 1 << J
    if side ** d > cell_cap:
        raise MemoryGuardError(
            f"dyadic scan at scale {J} in d={d} needs {side ** d} cells, "
            f"cap is {cell_cap}")
    if t == 0:
        return 0, DyadicBox(tuple(DyadicInterval(0, 0) for _ in range(d)))
    index = np.zeros(t, dtype=np.int64)
    for i in range(d):
        index = index * side + _axis_cells(points, i, J, t)
    grid = np.bincount(index, weights=np.asarray(signs[:t], dtype=np.float64),
                       minlength=side ** d).reshape((side,) * d)
    best = 0.0
    witness = (tuple(0 for _ in range(d)), tuple(0 for _ in range(d)))

    def scan(arr: np.ndarray, axis: int, levels: tuple[int, ...]) -> None:
        nonlocal best, witness
        if axis == d:
            flat = np.abs(arr.reshape(-1))
            pos = int(flat.argmax())
            val = float(flat[pos])
            if val > best:
                best = val
                witness = (levels, tuple(int(k) for k in
                                         np.unravel_index(pos, arr.shape)))
            return
        a = arr
        for j in range(J, -1, -1):
            scan(a, axis + 1, levels + (j,))
            if j > 0:
                shape = (a.shape[:axis] + (a.shape[axis] // 2, 2)
                         + a.shape[axis + 1:])
                a = a.reshape(shape).sum(axis=axis + 1)

    scan(grid, 0, ())
    box = DyadicBox(tuple(DyadicInterval(j, k)
                          for j, k in zip(witness[0], witness[1])))
    return int(best), box


def count_interval(signs: Sequence[int], points: PointStream,
                   query: IntervalQuery, t: int) -> int:
    """Signed count of the first t points inside an arbitrary interval."""
    return sum(int(s) for s, x in zip(signs[:t], points.points[:t])
               if query.contains(x[query.axis]))


def max_interval_discrepancy(signs: Sequence[int], points: PointStream,
                             axis: int, t: int) -> tuple[int, IntervalQuery]:
    """Exact max of |signed count| over ALL intervals on one axis.

    Sort by coordinate, collapse ties into groups (an interval takes all of
    an equal-coordinate group or none of it), then a max- and a min-sum
    Kadane pass over the group sums.  The witness interval's endpoints sit
    midway between neighboring distinct coordinates.
    """
    if not 0 <= axis < points.d:
        raise ValueError(f"axis {axis} out of range for d={points.d}")
    order = sorted(range(min(t, points.T)),
                   key=lambda l: (points.points[l][axis], l))
    coords: list[float] = []
    sums: list[int] = []
    for l in order:
        x = points.points[l][axis]
        if coords and coords[-1] == x:
            sums[-1] += signs[l]
        else:
            coords.append(x)
            sums.append(signs[l])
    if not sums:
        return 0, IntervalQuery(axis=axis, a=0.0, b=1.0)
    best = 0
    window = (0, len(sums) - 1)
    for flip in (1, -1):
        cur = 0
        start = 0
        for g, s in enumerate(sums):
            cur += flip * s
            if cur > best:
                best = cur
                window = (start, g)
            if cur < 0:
                cur = 0
                start = g + 1
    lo, hi = window
    a = 0.0 if lo == 0 else (coords[lo - 1] + coords[lo]) / 2.0
    b = 1.0 if hi == len(sums) - 1 else (coords[hi] + coords[hi + 1]) / 2.0
    return best, IntervalQuery(axis=axis, a=a, b=b)


def cardinal_envy(alloc: Allocation, t: Optional[int] = None) -> tuple[float, float]:
    """Each player's value for the other's bundle minus their own, directly."""
    t = alloc.T if t is None else t
    e1 = math.fsum(u if a == 2 else -u
                   for a, u in zip(alloc.assignment[:t], alloc.v1[:t]))
    e2 = math.fsum(u if a == 1 else -u
                   for a, u in zip(alloc.assignment[:t], alloc.v2[:t]))
    return e1, e2


@dataclass
class CardinalEnvyResult:
    allocation: Allocation
    envy_trace: list[tuple[int, float, float]]
    max_envy: float
    run: RunResult


def allocate_cardinal(v1: Sequence[float], v2: Sequence[float],
                      rng: Optional[SeededRng] = None, algorithm: str = "cosh",
                      stride: Optional[int] = None) -> CardinalEnvyResult:
    """Allocate items online so neither player's cardinal envy grows.

    Item t becomes the vector (u_1t, -u_2t); a + sign hands the item to
    player 2.  The vector is coin-symmetrized and signed in the eigenbasis
    of the realized stream's empirical covariance, so the two coordinates
    the signer sees are uncorrelated.  The accumulator's coordinates ARE
    the players' envies, which is re-checked against the allocation.
    """
    if algorithm not in ("cosh", "random"):
        raise ValueError(f"unknown algorithm {algorithm!r}")
    if len(v1) != len(v2):
        raise ValueError("valuation streams must have equal length")
    if rng is None:
        rng = SeededRng(0)
    for vals in (v1, v2):
        if any(not 0.0 <= float(u) <= 1.0 for u in vals):
            raise ValueError("valuations must lie in [0, 1]")
    T = len(v1)
    V = np.array([[float(a), -float(b)] for a, b in zip(v1, v2)],
                 dtype=float).reshape(T, 2)
    P = (V.T @ V) / max(T, 1)
    basis = eigendecompose((P + P.T) / 2.0)
    cfg = SignerConfig(n=2, s=2)
    engine = CoshSigner(cfg)
    coin_rng = rng.derive("symmetrize")
    algo_rng = rng.derive("algo")
    if stride is None:
        stride = max(1, T // 64)
    started = time.perf_counter()
    sqrt2 = math.sqrt(2.0)
    assignment: list[int] = []
    acc = np.zeros(2)
    max_envy = 0.0
    max_linf = 0.0
    argmax_t = 0
    envy_trace: list[tuple[int, float, float]] = []
    trace: list[tuple[int, float, float]] = []
    for t in range(1, T + 1):
        v = V[t - 1]
        xi = coin_rng.sign()
        w = (basis.U.T @ (xi * v)) / sqrt2
        vals = [min(1.0, max(-1.0, float(x))) for x in w]
        forced = random_sign(algo_rng) if algorithm == "random" else None
        chi_prime, _ = engine.step([0, 1], vals, forced)
        chi = chi_prime * xi
        assignment.append(2 if chi == 1 else 1)
        acc += chi * v
        max_envy = max(max_envy, acc[0], acc[1])
        linf = float(np.max(np.abs(acc)))
        if linf > max_linf:
            max_linf = linf
            argmax_t = t
        if t % stride == 0 or t == T:
            envy_trace.append((t, float(acc[0]), float(acc[1])))
            trace.append((t, max_linf, engine.phi))
            partial = Allocation(assignment=tuple(assignment),
                                 v1=tuple(float(x) for x in v1[:t]),
                                 v2=tuple(float(x) for x in v2[:t]))
            e1, e2 = cardinal_envy(partial)
            if max(abs(e1 - acc[0]), abs(e2 - acc[1])) > 1e-9 * max(1, t):
                raise InvariantViolationError(
                    "problems", t,
                    f"accumulator ({acc[0]}, {acc[1]}) disagrees with "
                    f"allocation envy ({e1}, {e2})")
    alloc = Allocation(assignment=tuple(assignment),
                       v1=tuple(float(x) for x in v1),
                       v2=tuple(float(x) for x in v2))
    run = RunResult(algorithm=algorithm, seed=rng.seed, steps=T,
                    max_linf=max_linf, argmax_t=argmax_t, trace=trace,
                    final_linf=float(np.max(np.abs(acc))) if T else 0.0,
                    wall_time=time.perf_counter() - started)
    return CardinalEnvyResult(allocation=alloc, envy_trace=envy_trace,
                              max_envy=max_envy, run=run)


def measure_ordinal_envy(alloc: Allocation, t: Optional[int] = None) -> int:
    """Worst prefix imbalance in either player's descending-value order.

    Valuation ties break by arrival index.  The empty prefix counts, so the
    result is never negative.
    """
    t = alloc.T if t is None else t
    worst = 0
    for own, values in ((1, alloc.v1), (2, alloc.v2)):
        order = sorted(range(t), key=lambda l: (-values[l], l))
        run = 0
        for l in order:
            run += -1 if alloc.assignment[l] == own else 1
            if run > worst:
                worst = run
    return worst


@dataclass
class OrdinalEnvyResult:
    allocation: Allocation
    envy_trace: list[tuple[int, int, int]]
    max_envy: int
    run: RunResult


def allocate_ordinal(v1: Sequence[float], v2: Sequence[float],
                     rng: Optional[SeededRng] = None, algorithm: str = "cosh",
                     stride: Optional[int] = None,
                     max_scale: Optional[int] = None) -> OrdinalEnvyResult:
    """Allocate items online so ordinal envy stays polylogarithmic.

    The pair of valuations is a point in [0,1]^2 fed to the interval
    reduction; + gives the item to player 2.  Ordinal envy at a checkpoint
    is bounded by twice the worst interval discrepancy over the two axes
    (a value-order prefix is an interval of one axis, up to ties), and the
    bound is asserted, not assumed.
    """
    if len(v1) != len(v2):
        raise ValueError("valuation streams must have equal length")
    points = PointStream(points=tuple((float(a), float(b))
                                      for a, b in zip(v1, v2)), d=2)
    T = points.T
    if stride is None:
        stride = max(1, T // 64)
    geo = interval_signer(points, max_scale=max_scale, algorithm=algorithm,
                          rng=rng, stride=stride)
    assignment = tuple(2 if s == 1 else 1 for s in geo.signs)
    alloc = Allocation(assignment=assignment,
                       v1=tuple(float(x) for x in v1),
                       v2=tuple(float(x) for x in v2))
    envy_trace: list[tuple[int, int, int]] = []
    max_envy = 0
    for t in sorted(set(list(range(stride, T + 1, stride)) + ([T] if T else []))):
        envy = measure_ordinal_envy(alloc, t)
        disc = max(max_interval_discrepancy(geo.signs, points, 0, t)[0],
                   max_interval_discrepancy(geo.signs, points, 1, t)[0])
        bound = 2 * disc
        if envy > bound:
            raise InvariantViolationError(
                "problems", t, f"ordinal envy {envy} exceeds 2x interval "
                f"discrepancy bound {bound}")
        envy_trace.append((t, envy, bound))
        max_envy = max(max_envy, envy)
    return OrdinalEnvyResult(allocation=alloc, envy_trace=envy_trace,
                             max_envy=max_envy, run=geo.run)
