"""Greedy hyperbolic-cosine potential signer and the random baseline.

The signer keeps Phi_t = sum_i cosh(lambda d_t(i)) and gives the arriving
vector v the sign that makes Phi smallest.  The exact decision quantity is

    Phi(d + v) - Phi(d - v) = 2 sum_i sinh(lambda d(i)) sinh(lambda v(i))

so the comparison never subtracts two large potentials; ties go to +1.
For +-1-valued updates sinh(lambda v(i)) = +-sinh(lambda), and the decision
reduces to the sign of L = sum_i sinh(lambda d(i)) v(i), the same linear
term reported in the drift diagnostics.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Optional

from .core import (DiscrepancyState, DistributionSpec, RunResult, SparseUpdate,
                   stream_updates)
from .errors import InvariantViolationError, PotentialOverflowError
from .rng import SeededRng


@dataclass(frozen=True)
class SignerConfig:
    """Potential parameters: dimension n, sparsity bound s, scale lambda.

    lambda defaults to 1/(2s).  potential_cap makes overflow a loud error
    instead of a silent inf: if Phi ever exceeds it, lambda was wrong for
    the stream and the run aborts with the step index.
    """

    n: int
    s: int
    lam: Optional[float] = None
    potential_cap: float = 1e300

    def __post_init__(self):
        if self.n < 1 or self.s < 1:
            raise ValueError("n and s must be >= 1")
        if self.lam is None:
            object.__setattr__(self, "lam", 1.0 / (2 * self.s))
        if not 0.0 < self.lam <= 1.0:
            raise ValueError(f"lambda must be in (0, 1], got {self.lam}")
        if self.potential_cap <= self.n:
            raise ValueError("potential_cap must exceed the initial potential n")


@dataclass
class DriftDiagnostics:
    """Per-step Taylor terms of the potential change.

    L = sum_i sinh(lam d(i)) v(i), Q = sum_i |sinh(lam d(i))| v(i)^2, and
    delta_phi is the realized change for the chosen sign; it always obeys
    delta_phi <= -lam|L| + lam^2 Q + lam^2 n (plus fp slack).
    """

    L: float
    Q: float
    delta_phi: float


class CoshSigner:
    """Stream engine with cached sinh/cosh per coordinate.

    The potential is tracked as n + excess where excess = sum(cosh - 1)
    over touched coordinates, so huge declared dimensions (lazy tensor
    coordinate spaces) cost nothing.  For +-1 updates the caches advance
    by the hyperbolic addition formulas, avoiding libm calls in the hot
    loop; a full recomputation resets any accumulated drift whenever
    check_consistency runs.
    """

    def __init__(self, cfg: SignerConfig, size: Optional[int] = None):
        self.cfg = cfg
        self.lam = cfg.lam
        size = cfg.n if size is None else size
        self.d = [0.0] * size
        self._sh = [0.0] * size
        self._ch = [1.0] * size
        self._sl = math.sinh(self.lam)
        self._cl = math.cosh(self.lam)
        self.excess = 0.0
        self.t = 0
        self.max_abs = 0.0
        self.argmax_t = 0

    @property
    def phi(self) -> float:
        return self.cfg.n + self.excess

    def ensure_size(self, size: int) -> None:
        grow = size - len(self.d)
        if grow > 0:
            self.d.extend([0.0] * grow)
            self._sh.extend([0.0] * grow)
            self._ch.extend([1.0] * grow)

    # -- decisions -------------------------------------------------------

    def decide_pm(self, coords: list[int], vals: list[float]) -> int:
        """Sign for a +-1-valued update: the sign of -L (ties to +1)."""
        sh = self._sh
        L = 0.0
        for c, v in zip(coords, vals):
            L = L + sh[c] if v > 0.0 else L - sh[c]
        return 1 if L <= 0.0 else -1

    def decide(self, coords: list[int], vals: list[float]) -> int:
        sh = self._sh
        lam = self.lam
        D = 0.0
        for c, v in zip(coords, vals):
            D += sh[c] * math.sinh(lam * v)
        return 1 if D <= 0.0 else -1

    # -- state updates ---------------------------------------------------

    def apply_pm(self, coords: list[int], vals: list[float], sign: int) -> None:
        """Apply sign*vals where every value is +1 or -1."""
        d, sh, ch = self.d, self._sh, self._ch
        sl, cl = self._sl, self._cl
        excess = self.excess
        max_abs = self.max_abs
        self.t += 1
        for c, v in zip(coords, vals):
            s0, c0 = sh[c], ch[c]
            if (sign > 0) == (v > 0.0):
                d[c] += 1.0
                s1 = s0 * cl + c0 * sl
                c1 = c0 * cl + s0 * sl
            else:
                d[c] -= 1.0
                s1 = s0 * cl - c0 * sl
                c1 = c0 * cl - s0 * sl
            sh[c], ch[c] = s1, c1
            excess += c1 - c0
            a = d[c]
            if a < 0.0:
                a = -a
            if a > max_abs:
                max_abs = a
                self.argmax_t = self.t
        self.excess = excess
        self.max_abs = max_abs
        self._check_cap()

    def apply(self, coords: list[int], vals: list[float], sign: int) -> float:
        """Generic update; returns the realized potential change."""
        d, sh, ch = self.d, self._sh, self._ch
        lam = self.lam
        delta = 0.0
        self.t += 1
        for c, v in zip(coords, vals):
            d[c] += sign * v
            x = lam * d[c]
            c1 = math.cosh(x)
            delta += c1 - ch[c]
            sh[c] = math.sinh(x)
            ch[c] = c1
            a = abs(d[c])
            if a > self.max_abs:
                self.max_abs = a
                self.argmax_t = self.t
        self.excess += delta
        self._check_cap()
        return delta

    def step_pm(self, coords: list[int], vals: list[float],
                forced_sign: Optional[int] = None) -> int:
        sign = self.decide_pm(coords, vals) if forced_sign is None else forced_sign
        self.apply_pm(coords, vals, sign)
        return sign

    def step(self, coords: list[int], vals: list[float],
             forced_sign: Optional[int] = None) -> tuple[int, DriftDiagnostics]:
        sh = self._sh
        L = 0.0
        Q = 0.0
        for c, v in zip(coords, vals):
            s0 = sh[c]
            L += s0 * v
            Q += abs(s0) * v * v
        sign = self.decide(coords, vals) if forced_sign is None else forced_sign
        delta = self.apply(coords, vals, sign)
        return sign, DriftDiagnostics(L=L, Q=Q, delta_phi=delta)

    # -- invariants --------------------------------------------------------

    def _check_cap(self) -> None:
        phi = self.cfg.n + self.excess
        if not phi <= self.cfg.potential_cap:  # catches inf and nan too
            raise PotentialOverflowError(self.t, phi, self.cfg.potential_cap)

    def check_consistency(self) -> None:
        """Recompute the potential from scratch; 1e-9 relative agreement
        required.  Verification only: the caches are left untouched, so
        how often this runs can never change a decision."""
        lam = self.lam
        fresh = math.fsum(math.cosh(lam * x) - 1.0 for x in self.d if x != 0.0)
        if abs(fresh - self.excess) > 1e-9 * (self.cfg.n + abs(fresh)):
            raise InvariantViolationError(
                "signer", self.t,
                f"incremental potential {self.cfg.n + self.excess!r} vs "
                f"recomputed {self.cfg.n + fresh!r}")

    def current_linf(self) -> float:
        return max((abs(x) for x in self.d), default=0.0)


def choose_sign(state: DiscrepancyState, v: SparseUpdate,
                cfg: SignerConfig) -> tuple[int, DriftDiagnostics]:
    """One greedy step on a caller-owned DiscrepancyState (updated in place).

    Decision, diagnostics, and the incremental potential update all run
    over v's support only; untouched coordinates cannot change.
    """
    if v.dim != cfg.n:
        raise ValueError(f"update dimension {v.dim} != configured n {cfg.n}")
    if v.nnz > cfg.s:
        raise ValueError(f"update has {v.nnz} nonzeros, sparsity bound is {cfg.s}")
    if state.lam != cfg.lam:
        raise ValueError("state and config disagree on lambda")
    lam = cfg.lam
    d = state.d
    L = 0.0
    Q = 0.0
    D = 0.0
    for c, val in v.entries:
        s0 = math.sinh(lam * d[c])
        L += s0 * val
        Q += abs(s0) * val * val
        D += s0 * math.sinh(lam * val)
    sign = 1 if D <= 0.0 else -1
    delta = 0.0
    for c, val in v.entries:
        old = math.cosh(lam * d[c])
        d[c] += sign * val
        delta += math.cosh(lam * d[c]) - old
    state.phi += delta
    state.t += 1
    if not state.phi <= cfg.potential_cap:
        raise PotentialOverflowError(state.t, state.phi, cfg.potential_cap)
    return sign, DriftDiagnostics(L=L, Q=Q, delta_phi=delta)


def random_sign(rng: SeededRng) -> int:
    """Uniform +-1, independent of the update."""
    return rng.sign()


def run_stream(spec: DistributionSpec, T: int, cfg: Optional[SignerConfig] = None,
               rng: Optional[SeededRng] = None, algorithm: str = "cosh",
               stride: Optional[int] = None, keep_final_d: bool = False) -> RunResult:
    """Sign a whole stream; returns the aggregate RunResult.

    The stream is drawn from rng.derive("stream") and the baseline's coins
    from rng.derive("algo"), so different algorithms on the same seed see
    identical streams (paired comparisons rely on this).
    """
    if algorithm not in ("cosh", "random"):
        raise ValueError(f"unknown algorithm {algorithm!r}")
    if cfg is None:
        cfg = SignerConfig(n=spec.n, s=spec.s)
    if rng is None:
        rng = SeededRng(0)
    stream_rng = rng.derive("stream")
    algo_rng = rng.derive("algo")
    engine = CoshSigner(cfg)
    if stride is None:
        stride = max(1, T // 64)
    started = time.perf_counter()
    trace: list[tuple[int, float, float]] = []
    small = cfg.n <= 8192
    for up in stream_updates(spec, T, stream_rng):
        if up.dim != cfg.n:
            raise ValueError(f"update dimension {up.dim} != configured n {cfg.n}")
        if up.nnz > cfg.s:
            raise ValueError(f"update has {up.nnz} nonzeros, bound is {cfg.s}")
        coords, vals = up.scaled_nonzeros()
        forced = algo_rng.sign() if algorithm == "random" else None
        if all(v == 1.0 or v == -1.0 for v in vals):
            engine.step_pm(coords, vals, forced)
        else:
            engine.step(coords, vals, forced)
        if engine.t % stride == 0 or engine.t == T:
            trace.append((engine.t, engine.max_abs, engine.phi))
            if small:
                engine.check_consistency()
    if T > 0 and not small:
        engine.check_consistency()
    result = RunResult(
        algorithm=algorithm, seed=rng.seed, steps=T,
        max_linf=engine.max_abs, argmax_t=engine.argmax_t, trace=trace,
        final_linf=engine.current_linf(),
        wall_time=time.perf_counter() - started)
    if keep_final_d:
        result.extra["final_d"] = list(engine.d)
    return result
