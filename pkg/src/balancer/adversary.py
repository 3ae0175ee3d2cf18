"""Hard instances: adaptive orthogonality, flat lower bounds, a fractal gap.

Three ways to make a signer's life hard.  The adaptive adversary always
feeds a vector orthogonal to the current discrepancy, which forces
||d_t||_2^2 to grow by at least n-1 every step no matter what sign comes
back.  The uncorrelated-coordinates experiment shows that streams with
constant l2-norm k push the max coordinate past k/4 with constant
probability within n steps.  The fractal tree instance separates the two
sides of the sinh anti-concentration inequality by an exp(Omega(h))
factor, computed exactly by a distributional walk down the tree.
"""

import math
import statistics
import time
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from .core import DistributionSpec, RunResult, SparseUpdate, sample
from .errors import (InvalidInstanceError, InvariantViolationError,
                     MemoryGuardError, UnsupportedModeError)
from .rng import SeededRng
from .signer import CoshSigner, SignerConfig, random_sign

ORTHO_TOL = 1e-9


@dataclass
class AdversaryState:
    """Accumulated signed sum the adversary is reacting to."""

    d: list[float]
    t: int = 0
    mode: str = "orthogonal"

    @classmethod
    def zero(cls, n: int) -> "AdversaryState":
        if n < 2:
            raise ValueError("adversary needs n >= 2")
        return cls(d=[0.0] * n)

    def apply(self, sign: int, v: SparseUpdate) -> None:
        for c, val in v.entries:
            self.d[c] += sign * val
        self.t += 1

    def norm_sq(self) -> float:
        return math.fsum(x * x for x in self.d)


def orthogonal_adversary_next(state: AdversaryState) -> SparseUpdate:
    """Next input: orthogonal to d, with n-1 coordinates at +-1.

    Coordinates are signed greedily in descending |d| order, which keeps
    the running inner product within the largest |d|; that coordinate is
    held back and absorbs the residual as a fraction in [-1, 1].
    """
    d = state.d
    n = len(d)
    order = sorted(range(n), key=lambda c: (-abs(d[c]), c))
    reserved = order[0]
    v = [0.0] * n
    r = 0.0
    for c in order[1:]:
        sigma = 1.0 if r * d[c] <= 0.0 else -1.0
        v[c] = sigma
        r += sigma * d[c]
    if d[reserved] == 0.0:
        v[reserved] = 1.0
    else:
        frac = -r / d[reserved]
        if abs(frac) > 1.0:
            # |r| <= |d_reserved| holds in real arithmetic; an ulp past 1
            # is roundoff, anything more is a bug
            if abs(frac) > 1.0 + 1e-9:
                raise InvariantViolationError(
                    "adversary", state.t + 1,
                    f"residual fraction {frac!r} escapes [-1, 1]")
            frac = math.copysign(1.0, frac)
        v[reserved] = frac
    norm = math.sqrt(state.norm_sq())
    dot = math.fsum(v[c] * d[c] for c in range(n))
    if abs(dot) > ORTHO_TOL * max(1.0, norm):
        raise InvariantViolationError(
            "adversary", state.t + 1,
            f"constructed vector has <d,v> = {dot:.3e}")
    return SparseUpdate(tuple((c, v[c]) for c in range(n)), n)


def adversary_run(n: int, T: int, algorithm: str = "cosh",
                  rng: Optional[SeededRng] = None,
                  stride: Optional[int] = None) -> RunResult:
    """Drive a signer against the orthogonal adversary for T steps.

    Checks ||d_t||_2^2 >= (n-1) t as it goes; the guarantee holds for any
    sign sequence, so both the greedy signer and the coin baseline satisfy
    it, and a violation is an implementation bug, not bad luck.
    """
    if algorithm not in ("cosh", "random"):
        raise ValueError(f"unknown algorithm {algorithm!r}")
    if rng is None:
        rng = SeededRng(0)
    algo_rng = rng.derive("algo")
    state = AdversaryState.zero(n)
    cfg = SignerConfig(n=n, s=n)
    engine = CoshSigner(cfg)
    if stride is None:
        stride = max(1, T // 64)
    started = time.perf_counter()
    trace: list[tuple[int, float, float]] = []
    max_linf = 0.0
    argmax_t = 0
    fp_slack = 1e-9
    for t in range(1, T + 1):
        v = orthogonal_adversary_next(state)
        coords, vals = v.scaled_nonzeros()
        forced = random_sign(algo_rng) if algorithm == "random" else None
        sign, _ = engine.step(coords, vals, forced)
        state.apply(sign, v)
        ssq = state.norm_sq()
        floor = (n - 1) * t
        if ssq < floor * (1.0 - fp_slack) - fp_slack:
            raise InvariantViolationError(
                "adversary", t, f"||d||^2 = {ssq} below floor {floor}")
        linf = max(abs(x) for x in state.d)
        if linf > max_linf:
            max_linf = linf
            argmax_t = t
        if t % stride == 0 or t == T:
            trace.append((t, max_linf, engine.phi))
    result = RunResult(algorithm=algorithm, seed=rng.seed, steps=T,
                       max_linf=max_linf, argmax_t=argmax_t, trace=trace,
                       final_linf=max(map(abs, state.d)) if T else 0.0,
                       wall_time=time.perf_counter() - started)
    result.extra["final_norm_sq"] = state.norm_sq()
    result.extra["norm_sq_floor"] = (n - 1) * T
    return result


@dataclass(frozen=True)
class LowerBoundReport:
    n: int
    k: float
    threshold: float
    trials: int
    hits: int
    algorithm: str

    @property
    def frequency(self) -> float:
        return self.hits / self.trials if self.trials else 0.0


def certify_uncorrelated(spec: DistributionSpec) -> float:
    """Check exact coordinate uncorrelation and constant l2-norm; returns k.

    Requires finite support.  Off-diagonal second moments must vanish to
    1e-12 and every atom must have the same l2-norm.
    """
    try:
        finite = spec.as_finite_support()
    except UnsupportedModeError as exc:
        raise InvalidInstanceError(
            f"certification needs finite support: {exc}") from exc
    n = spec.n
    norms = []
    for update, _ in finite.atoms:
        norms.append(math.fsum(x * x for x in update.dense()))
    k_sq = norms[0]
    if any(abs(s - k_sq) > 1e-9 * max(1.0, k_sq) for s in norms):
        raise InvalidInstanceError(
            f"atom l2-norms vary: {sorted(set(norms))[:4]}")
    for i in range(n):
        for j in range(i + 1, n):
            second = math.fsum(p * u.dense()[i] * u.dense()[j]
                               for u, p in finite.atoms)
            if abs(second) > 1e-12:
                raise InvalidInstanceError(
                    f"coordinates {i},{j} correlate: E[v_i v_j] = {second:.3e}")
    return math.sqrt(k_sq)


def lower_bound_experiment(spec: DistributionSpec, trials: int,
                           rng: Optional[SeededRng] = None,
                           algorithm: str = "cosh",
                           steps: Optional[int] = None) -> LowerBoundReport:
    """Fraction of trials where max_t ||d_t||_inf crosses k/4 within n steps."""
    from .signer import run_stream

    if rng is None:
        rng = SeededRng(0)
    k = certify_uncorrelated(spec)
    n = spec.n
    threshold = k / 4.0
    if steps is None:
        steps = n
    hits = 0
    for i in range(trials):
        res = run_stream(spec, steps, rng=rng.derive(f"trial-{i}"),
                         algorithm=algorithm)
        if res.max_linf > threshold:
            hits += 1
    return LowerBoundReport(n=n, k=k, threshold=threshold, trials=trials,
                            hits=hits, algorithm=algorithm)


def sphere_stress(n: int, T: int, rng: Optional[SeededRng] = None,
                  algorithm: str = "cosh",
                  stride: Optional[int] = None) -> RunResult:
    """Sign i.i.d. uniform unit-sphere vectors, tracking the l2 growth.

    Every step obeys ||d_t||^2 - ||d_{t-1}||^2 = 1 + 2 chi <d_{t-1}, v_t>,
    which is re-checked as the run goes; the l2 track rides in extra.
    """
    if algorithm not in ("cosh", "random"):
        raise ValueError(f"unknown algorithm {algorithm!r}")
    if n < 2:
        raise ValueError("sphere stress needs n >= 2")
    if rng is None:
        rng = SeededRng(0)
    spec = DistributionSpec.unit_sphere(n)
    stream_rng = rng.derive("stream")
    algo_rng = rng.derive("algo")
    cfg = SignerConfig(n=n, s=n)
    engine = CoshSigner(cfg)
    if stride is None:
        stride = max(1, T // 64)
    started = time.perf_counter()
    trace: list[tuple[int, float, float]] = []
    l2_trace: list[tuple[int, float]] = []
    ssq = 0.0
    max_l2 = 0.0
    argmax_l2 = 0
    for t in range(1, T + 1):
        v = sample(spec, stream_rng)
        coords, vals = v.scaled_nonzeros()
        dot_before = math.fsum(engine.d[c] * x for c, x in zip(coords, vals))
        forced = random_sign(algo_rng) if algorithm == "random" else None
        sign, _ = engine.step(coords, vals, forced)
        predicted = ssq + 1.0 + 2.0 * sign * dot_before
        ssq = math.fsum(x * x for x in engine.d)
        if abs(ssq - predicted) > 1e-6 * max(1.0, ssq):
            raise InvariantViolationError(
                "adversary", t,
                f"l2 growth identity broken: {ssq} vs predicted {predicted}")
        l2 = math.sqrt(ssq)
        if l2 > max_l2:
            max_l2 = l2
            argmax_l2 = t
        if t % stride == 0 or t == T:
            trace.append((t, engine.max_abs, engine.phi))
            l2_trace.append((t, max_l2))
    result = RunResult(algorithm=algorithm, seed=rng.seed, steps=T,
                       max_linf=engine.max_abs, argmax_t=engine.argmax_t,
                       trace=trace, final_linf=engine.current_linf(),
                       wall_time=time.perf_counter() - started)
    result.extra["max_l2"] = max_l2
    result.extra["argmax_t_l2"] = argmax_l2
    result.extra["l2_trace"] = l2_trace
    return result


def sphere_growth(n: int, T_grid: Sequence[int], seeds: int,
                  algorithm: str = "cosh",
                  base_seed: int = 0) -> list[tuple[int, float]]:
    """Median of max ||d_t||_2 per T over a fixed seed set.

    The same seeds are reused across the grid, and a longer run extends the
    shorter one's stream, so the medians never decrease.
    """
    out = []
    for T in T_grid:
        maxima = [sphere_stress(n, T, rng=SeededRng(base_seed + i),
                                algorithm=algorithm).extra["max_l2"]
                  for i in range(seeds)]
        out.append((T, statistics.median(maxima)))
    return out


# Fractal tree: kinds and labels.  The root is labeled d; its right child
# (r23) is labeled 2d/3 and rejoins the main recursion; a g0 node splits
# into g1L/g1R; g1L's left child is the -d node, after which everything
# below is zero; all other nodes are zero-labeled.
_CHILD_KINDS = {
    "root": ("g0", "r23"),
    "r23": ("g0", "g0"),
    "g0": ("g1L", "g1R"),
    "g1L": ("dead", "g0"),
    "g1R": ("g0", "g0"),
    "dead": ("zero", "zero"),
    "zero": ("zero", "zero"),
}
_LABELS = {"root": "d", "r23": "2d/3", "dead": "-d",
           "g0": "0", "g1L": "0", "g1R": "0", "zero": "0"}


@dataclass(frozen=True)
class FractalReport:
    h: int
    d: float
    lhs: float
    rhs: float
    beta: float
    p_hit: float
    p_passed: float
    scale_log: float  # true lhs/rhs are the reported ones times e**scale_log

    @property
    def log_beta(self) -> float:
        return math.log(self.beta)


@dataclass(frozen=True)
class FractalInstance:
    h: int
    magnitude: float

    def __post_init__(self):
        if self.h < 1:
            raise ValueError("height must be >= 1")
        if not self.magnitude > 0:
            raise ValueError("magnitude must be positive")

    def label_table(self) -> dict[tuple[int, int], tuple[str, str]]:
        """(level, index) -> (kind, symbolic label), for auditing."""
        if self.h > 16:
            raise MemoryGuardError(f"label table for h={self.h} would have "
                                   f"{(1 << self.h) - 1} nodes")
        table = {(0, 0): ("root", _LABELS["root"])}
        for level in range(1, self.h):
            for idx in range(1 << level):
                parent = table[(level - 1, idx >> 1)][0]
                kind = _CHILD_KINDS[parent][idx & 1]
                table[(level, idx)] = (kind, _LABELS[kind])
        return table

    def report(self) -> FractalReport:
        return fractal_ratio(self.h, self.magnitude)


def _fractal_path_distribution(h: int) -> dict[tuple[int, int], Fraction]:
    """Exact distribution of (passed-2d/3, hit--d) over uniform root-leaf
    paths, by one forward sweep per level."""
    dist: dict[tuple[str, int, int], Fraction] = {
        ("root", 0, 0): Fraction(1)}
    half = Fraction(1, 2)
    for _ in range(h - 1):
        new: dict[tuple[str, int, int], Fraction] = defaultdict(Fraction)
        for (kind, passed, hit), p in dist.items():
            if kind == "root":
                new[("g0", passed, hit)] += p * half
                new[("r23", 1, hit)] += p * half
            elif kind == "r23":
                new[("g0", passed, hit)] += p
            elif kind == "g0":
                new[("g1L", passed, hit)] += p * half
                new[("g1R", passed, hit)] += p * half
            elif kind == "g1L":
                new[("dead", passed, 1)] += p * half
                new[("g0", passed, hit)] += p * half
            elif kind == "g1R":
                new[("g0", passed, hit)] += p
            else:
                new[(kind, passed, hit)] += p
        dist = new
    out: dict[tuple[int, int], Fraction] = defaultdict(Fraction)
    for (_, passed, hit), p in dist.items():
        out[(passed, hit)] += p
    return dict(out)


def fractal_ratio(h: int, d: float) -> FractalReport:
    """Exact E|path sum| vs E[path sum of absolutes] for sinh labels.

    Path sums only involve sinh(d), sinh(2d/3) and the one possible -d
    term, so the whole computation reduces to the exact joint law of
    (passed, hit).  For d > 350 both sides are computed in units of e**d
    to stay inside float range; the ratio is unaffected.
    """
    if h < 1:
        raise ValueError("height must be >= 1")
    if not d > 0:
        raise ValueError("magnitude must be positive")
    law = _fractal_path_distribution(h)
    if d > 350.0:
        scale_log = d
        sd = (1.0 - math.exp(-2.0 * d)) / 2.0
        s23 = (math.exp(-d / 3.0) - math.exp(-5.0 * d / 3.0)) / 2.0
    else:
        scale_log = 0.0
        sd = math.sinh(d)
        s23 = math.sinh(2.0 * d / 3.0)
    lhs = 0.0
    rhs = 0.0
    p_hit = Fraction(0)
    p_passed = Fraction(0)
    for (passed, hit), p in sorted(law.items()):
        w = float(p)
        lhs += w * abs(sd * (1 - hit) + passed * s23)
        rhs += w * (sd * (1 + hit) + passed * s23)
        if hit:
            p_hit += p
        if passed:
            p_passed += p
    return FractalReport(h=h, d=d, lhs=lhs, rhs=rhs, beta=rhs / lhs,
                         p_hit=float(p_hit), p_passed=float(p_passed),
                         scale_log=scale_log)
