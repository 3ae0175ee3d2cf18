"""Exact verification of sinh-free anti-concentration bounds.

For finite-support joints everything here is an exact expectation: sums of
float products accumulated with fsum, no sampling.  Two inequality
families are covered.  Uncorrelated coordinates (E[X_i X_j] = 0, |X_i| <=
c, atoms s-sparse) give E|sum a_i X_i| >= E[sum |a_i| X_i^2] / (c s);
mean-zero pairwise-independent coordinates give the stronger
E|sum a_i X_i| >= E[sum |a_i X_i|] / s.  The four-atom counterexample
shows the stronger form genuinely needs pairwise independence, not just
uncorrelation: its ratio collapses as delta -> 0.
"""

import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .core import hadamard_entry
from .errors import InvalidInstanceError
from .rng import SeededRng

EXACT_TOL = 1e-12
_KINDS = ("uncorrelated", "pairwise-independent")


@dataclass(frozen=True)
class AnticoncInstance:
    """Weighted finite joint (a, X) with its claimed hypothesis class.

    atoms are (value vector, probability) pairs; the class flag says which
    bound the instance is meant to feed, certify() checks whether the
    hypotheses actually hold.
    """

    a: tuple[float, ...]
    atoms: tuple[tuple[tuple[float, ...], float], ...]
    c: float
    s: int
    kind: str

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown instance class {self.kind!r}")
        if not self.atoms:
            raise ValueError("need at least one atom")
        if not self.c > 0:
            raise ValueError("bound c must be positive")
        if self.s < 1:
            raise ValueError("sparsity s must be >= 1")
        n = len(self.a)
        total = math.fsum(p for _, p in self.atoms)
        if abs(total - 1.0) > EXACT_TOL:
            raise ValueError(f"atom probabilities sum to {total!r}, not 1")
        for x, p in self.atoms:
            if p < 0:
                raise ValueError(f"negative probability {p!r}")
            if len(x) != n:
                raise ValueError("atom length disagrees with coefficient vector")

    @property
    def n(self) -> int:
        return len(self.a)


@dataclass(frozen=True)
class CertificationReport:
    """Outcome of the exact hypothesis checks, with every violation listed."""

    mean_zero: bool
    uncorrelated_moments: bool
    pairwise_marginals: bool
    within_bound: bool
    within_sparsity: bool
    violations: tuple[str, ...]

    @property
    def certified_uncorrelated(self) -> bool:
        return (self.uncorrelated_moments and self.within_bound
                and self.within_sparsity)

    @property
    def certified_pairwise(self) -> bool:
        return (self.mean_zero and self.pairwise_marginals
                and self.within_sparsity)


def certify(inst: AnticoncInstance) -> CertificationReport:
    """Exact atom-sum checks for both hypothesis classes.

    Never raises; the report carries the failures.  Second moments and
    means must vanish to 1e-12; pair pmfs must equal the product of their
    marginals to 1e-12; bounds and sparsity are per-atom checks.
    """
    n = inst.n
    violations: list[str] = []

    mean_zero = True
    for i in range(n):
        m = math.fsum(p * x[i] for x, p in inst.atoms)
        if abs(m) > EXACT_TOL:
            mean_zero = False
            violations.append(f"mean({i}) = {m:.3e}")

    uncorrelated = True
    for i in range(n):
        for j in range(i + 1, n):
            second = math.fsum(p * x[i] * x[j] for x, p in inst.atoms)
            if abs(second) > EXACT_TOL:
                uncorrelated = False
                violations.append(f"E[X_{i} X_{j}] = {second:.3e}")

    pairwise = True
    for i in range(n):
        for j in range(i + 1, n):
            joint: dict[tuple[float, float], float] = defaultdict(float)
            left: dict[float, float] = defaultdict(float)
            right: dict[float, float] = defaultdict(float)
            for x, p in inst.atoms:
                joint[(x[i], x[j])] += p
                left[x[i]] += p
                right[x[j]] += p
            pairs = set(joint) | {(u, v) for u in left for v in right}
            for u, v in sorted(pairs):
                got = joint.get((u, v), 0.0)
                want = left[u] * right[v]
                if abs(got - want) > EXACT_TOL:
                    pairwise = False
                    violations.append(
                        f"pair({i},{j}) pmf at ({u!r},{v!r}): "
                        f"{got!r} != {want!r}")

    bound_ok = True
    sparsity_ok = True
    limit = inst.c + EXACT_TOL * max(1.0, inst.c)
    for idx, (x, _) in enumerate(inst.atoms):
        if any(abs(v) > limit for v in x):
            bound_ok = False
            violations.append(f"atom {idx} exceeds bound c = {inst.c}")
        nnz = sum(1 for v in x if v != 0.0)
        if nnz > inst.s:
            sparsity_ok = False
            violations.append(f"atom {idx} has {nnz} nonzeros > s = {inst.s}")

    return CertificationReport(mean_zero=mean_zero,
                               uncorrelated_moments=uncorrelated,
                               pairwise_marginals=pairwise,
                               within_bound=bound_ok,
                               within_sparsity=sparsity_ok,
                               violations=tuple(violations))


@dataclass(frozen=True)
class PerKTerm:
    k: int
    lhs: float   # E[|sum a_i X_i| ; X_k != 0]
    rhs: float   # the per-coordinate floor the claim asserts

    @property
    def holds(self) -> bool:
        return self.lhs >= self.rhs - EXACT_TOL


@dataclass(frozen=True)
class VerificationResult:
    kind: str
    lhs: float
    rhs: float
    holds: bool
    per_k: tuple[PerKTerm, ...] = field(default=())


def _lhs_terms(inst: AnticoncInstance) -> list[tuple[float, float,
                                                     tuple[float, ...]]]:
    """(|L(x)|, p, x) per atom with L = sum_i a_i x_i summed by fsum."""
    out = []
    for x, p in inst.atoms:
        L = math.fsum(a * v for a, v in zip(inst.a, x))
        out.append((abs(L), p, x))
    return out


def verify_uncorrelated(inst: AnticoncInstance) -> VerificationResult:
    """Exact check of E|sum a_i X_i| >= E[sum |a_i| X_i^2] / (c s).

    Also returns the per-coordinate refinement terms
    E[|L| ; X_k != 0] >= E[|a_k| X_k^2] / c whose average over sparsity
    implies the headline bound.
    """
    report = certify(inst)
    if not report.certified_uncorrelated:
        raise InvalidInstanceError(
            "not certified uncorrelated: " + "; ".join(report.violations))
    terms = _lhs_terms(inst)
    lhs = math.fsum(absL * p for absL, p, _ in terms)
    rhs = math.fsum(p * abs(a) * v * v
                    for _, p, x in terms
                    for a, v in zip(inst.a, x)) / (inst.c * inst.s)
    per_k = []
    for k in range(inst.n):
        lhs_k = math.fsum(absL * p for absL, p, x in terms if x[k] != 0.0)
        rhs_k = math.fsum(p * abs(inst.a[k]) * x[k] * x[k]
                          for _, p, x in terms) / inst.c
        per_k.append(PerKTerm(k=k, lhs=lhs_k, rhs=rhs_k))
    return VerificationResult(kind="uncorrelated", lhs=lhs, rhs=rhs,
                              holds=lhs >= rhs - EXACT_TOL,
                              per_k=tuple(per_k))


def verify_pairwise(inst: AnticoncInstance) -> VerificationResult:
    """Exact check of E|sum a_i X_i| >= E[sum |a_i X_i|] / s.

    The per-coordinate refinement here is E[|L| ; X_k != 0] >= E|a_k X_k|.
    """
    report = certify(inst)
    if not report.certified_pairwise:
        raise InvalidInstanceError(
            "not certified pairwise-independent: "
            + "; ".join(report.violations))
    terms = _lhs_terms(inst)
    lhs = math.fsum(absL * p for absL, p, _ in terms)
    rhs = math.fsum(p * abs(a * v)
                    for _, p, x in terms
                    for a, v in zip(inst.a, x)) / inst.s
    per_k = []
    for k in range(inst.n):
        lhs_k = math.fsum(absL * p for absL, p, x in terms if x[k] != 0.0)
        rhs_k = math.fsum(p * abs(inst.a[k] * x[k]) for _, p, x in terms)
        per_k.append(PerKTerm(k=k, lhs=lhs_k, rhs=rhs_k))
    return VerificationResult(kind="pairwise-independent", lhs=lhs, rhs=rhs,
                              holds=lhs >= rhs - EXACT_TOL,
                              per_k=tuple(per_k))


def aggregate_per_k(result: VerificationResult, s: int) -> tuple[float, float]:
    """Averaged per-coordinate terms: (sum lhs_k / s, sum rhs_k / s).

    The first component never exceeds the headline lhs (each atom is
    counted once per nonzero, at most s times), and the second equals the
    headline rhs; together the per-k inequalities recover the full bound.
    """
    return (math.fsum(t.lhs for t in result.per_k) / s,
            math.fsum(t.rhs for t in result.per_k) / s)


@dataclass(frozen=True)
class CounterexampleReport:
    delta: float
    lhs: float
    rhs: float       # E[sum |a_i X_i|], before the 1/s of the bound
    instance: AnticoncInstance

    @property
    def ratio(self) -> float:
        return self.lhs / self.rhs


def pairwise_counterexample(delta: float) -> CounterexampleReport:
    """The four-atom uncorrelated pair where the pairwise bound fails.

    X = +-(1/delta, 1/delta) with probability delta^2 / (2 (1+delta^2))
    each, and (1, -1), (-1, 1) with the remaining mass split evenly.
    E[X_1 X_2] = 0, yet |X_1 + X_2| is almost always 0: the exact values
    are lhs = 2 delta / (1+delta^2) against rhs = (2+2 delta)/(1+delta^2),
    so lhs / (rhs/2) -> 0 and the pairwise inequality cannot extend to
    merely uncorrelated coordinates.
    """
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must be in (0, 1), got {delta!r}")
    big = 1.0 / delta
    p_big = delta * delta / (2.0 * (1.0 + delta * delta))
    p_small = 0.5 - p_big
    inst = AnticoncInstance(
        a=(1.0, 1.0),
        atoms=(((big, big), p_big), ((-big, -big), p_big),
               ((1.0, -1.0), p_small), ((-1.0, 1.0), p_small)),
        c=big, s=2, kind="uncorrelated")
    terms = _lhs_terms(inst)
    lhs = math.fsum(absL * p for absL, p, _ in terms)
    rhs = math.fsum(p * abs(a * v)
                    for _, p, x in terms
                    for a, v in zip(inst.a, x))
    return CounterexampleReport(delta=delta, lhs=lhs, rhs=rhs, instance=inst)


# -- instance generators ---------------------------------------------------

def hadamard_instance(n: int, weights: Optional[Sequence[float]] = None,
                      kind: str = "uncorrelated") -> AnticoncInstance:
    """X uniform over the signed rows of the order-n Hadamard matrix.

    Tight for both bounds: with unit weights lhs = rhs = 1.  The signed
    rows make every coordinate a uniform +-1 variable, and distinct
    columns are orthogonal, so both hypothesis classes certify.
    """
    if n & (n - 1) or n < 1:
        raise ValueError(f"need a power of two, got {n}")
    a = tuple(float(w) for w in weights) if weights is not None \
        else (1.0,) * n
    if len(a) != n:
        raise ValueError("weight vector length disagrees with n")
    p = 1.0 / (2 * n)
    atoms = []
    for k in range(n):
        row = tuple(float(hadamard_entry(k, j)) for j in range(n))
        atoms.append((row, p))
        atoms.append((tuple(-v for v in row), p))
    return AnticoncInstance(a=a, atoms=tuple(atoms), c=1.0, s=n, kind=kind)


def _orthogonalized_sign_table(n: int, rng: SeededRng) -> Optional[list[list[float]]]:
    rows = [[float(rng.sign()) for _ in range(n)] for _ in range(n)]
    q: list[list[float]] = []
    for v in rows:
        w = list(v)
        for _ in range(2):  # second pass keeps residuals at roundoff level
            for u in q:
                proj = math.fsum(a * b for a, b in zip(w, u))
                w = [a - proj * b for a, b in zip(w, u)]
        norm = math.sqrt(math.fsum(x * x for x in w))
        if norm < 1e-6:
            return None
        q.append([x / norm for x in w])
    return q


def random_uncorrelated_instance(n: int, rng: SeededRng) -> AnticoncInstance:
    """Signed rows of an orthogonalized random sign table, random weights.

    Row orthonormality makes E[X_i X_j] vanish to roundoff, so the
    uncorrelated hypothesis holds by construction.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    while True:
        q = _orthogonalized_sign_table(n, rng)
        if q is not None:
            break
    p = 1.0 / (2 * n)
    atoms = []
    for row in q:
        atoms.append((tuple(row), p))
        atoms.append((tuple(-x for x in row), p))
    c = max(abs(x) for row in q for x in row)
    a = tuple(4.0 * rng.uniform() - 2.0 for _ in range(n))
    return AnticoncInstance(a=a, atoms=tuple(atoms), c=c, s=n,
                            kind="uncorrelated")


def random_pairwise_instance(n: int, rng: SeededRng) -> AnticoncInstance:
    """n scaled Hadamard columns under a random signed row: exactly
    pairwise independent, mean zero, per-coordinate scales in (1/4, 1]."""
    if n < 1:
        raise ValueError("n must be >= 1")
    m = 4
    while m < n + 1:
        m *= 2
    cols = list(range(1, m))
    for i in range(n):  # partial Fisher-Yates, first n entries
        j = i + rng.randint(len(cols) - i)
        cols[i], cols[j] = cols[j], cols[i]
    cols = cols[:n]
    scales = tuple(0.25 + 0.75 * rng.uniform() for _ in range(n))
    p = 1.0 / (2 * m)
    atoms = []
    for k in range(m):
        row = tuple(scales[i] * hadamard_entry(k, cols[i]) for i in range(n))
        atoms.append((row, p))
        atoms.append((tuple(-v for v in row), p))
    a = tuple(4.0 * rng.uniform() - 2.0 for _ in range(n))
    return AnticoncInstance(a=a, atoms=tuple(atoms), c=max(scales), s=n,
                            kind="pairwise-independent")
