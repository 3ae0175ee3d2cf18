"""Unnormalized Haar wavelets on [0,1], their tensorization, and the exact
l1 coefficient identities for dyadic intervals and boxes.

The system is Psi_{0,0} = 1 and, for scale j >= 1 and shift 0 <= k < 2^(j-1),
Psi_{j,k}(x) = Psi(2^(j-1) x - k) where Psi is +1 on [0, 1/2), -1 on [1/2, 1),
0 elsewhere.  Every quantity in this module is dyadic, hence exact in 64-bit
floats: scaling by powers of two only shifts exponents, and the subtraction
2^(j-1) x - k is exact whenever the result lands in [0, 1).

Indicator coefficients are taken against the unnormalized system:
coeff_I(h) = E[1_I * h] / E[h^2].  For a dyadic interval of level l these
vanish above scale l, carry per-scale l1 mass 2^-(l+1-j), and sum to total
l1 mass exactly 1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction


@dataclass(frozen=True, order=True)
class HaarIndex:
    """Wavelet identifier (j, k); (0, 0) is the constant."""

    j: int
    k: int

    def __post_init__(self):
        if self.j < 0:
            raise ValueError(f"scale must be >= 0, got {self.j}")
        if self.j == 0:
            if self.k != 0:
                raise ValueError("the constant wavelet is (0, 0)")
        elif not 0 <= self.k < (1 << (self.j - 1)):
            raise ValueError(f"shift {self.k} out of range for scale {self.j}")

    def support(self) -> tuple[Fraction, Fraction]:
        if self.j == 0:
            return Fraction(0), Fraction(1)
        w = Fraction(1, 1 << (self.j - 1))
        return self.k * w, (self.k + 1) * w


@dataclass(frozen=True, order=True)
class TensorHaarIndex:
    parts: tuple[HaarIndex, ...]

    def __post_init__(self):
        if len(self.parts) < 1:
            raise ValueError("tensor index needs at least one axis")

    @property
    def d(self) -> int:
        return len(self.parts)


@dataclass(frozen=True, order=True)
class DyadicInterval:
    """[m 2^-level, (m+1) 2^-level), half-open.

    The last cell closes at 1.0 so every x in [0, 1] lands in exactly one
    cell per level, matching how evaluation clamps x = 1.0.
    """

    level: int
    m: int

    def __post_init__(self):
        if self.level < 0 or not 0 <= self.m < (1 << self.level):
            raise ValueError(f"bad dyadic interval ({self.level}, {self.m})")

    def endpoints(self) -> tuple[float, float]:
        w = 2.0 ** -self.level
        return self.m * w, (self.m + 1) * w

    def contains(self, x: float) -> bool:
        if x == 1.0:
            return self.m == (1 << self.level) - 1
        lo, hi = self.endpoints()
        return lo <= x < hi


@dataclass(frozen=True)
class DyadicBox:
    axes: tuple[DyadicInterval, ...]

    def __post_init__(self):
        if len(self.axes) < 1:
            raise ValueError("box needs at least one axis")

    @property
    def d(self) -> int:
        return len(self.axes)

    def contains(self, point) -> bool:
        return all(iv.contains(point[i]) for i, iv in enumerate(self.axes))


def evaluate(h: HaarIndex, x: float) -> int:
    """Psi_{j,k}(x) in {-1, 0, +1}.  x = 1.0 is clamped into the last cell
    (half-open supports never contain 1, but file streams may)."""
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x must be in [0, 1], got {x!r}")
    if h.j == 0:
        return 1
    half = 1 << (h.j - 1)
    if x == 1.0:
        return -1 if h.k == half - 1 else 0
    y = math.ldexp(x, h.j - 1) - h.k  # both steps exact, see module docstring
    if 0.0 <= y < 0.5:
        return 1
    if 0.5 <= y < 1.0:
        return -1
    return 0


def evaluate_tensor(th: TensorHaarIndex, point) -> int:
    out = 1
    for i, h in enumerate(th.parts):
        v = evaluate(h, point[i])
        if v == 0:
            return 0
        out *= v
    return out


def second_moment(h: HaarIndex) -> float:
    """E_x[Psi_{j,k}(x)^2] = 2^-(j-1) for j >= 1, 1 for the constant."""
    if h.j == 0:
        return 1.0
    return 2.0 ** -(h.j - 1)


def cell_index(x: float, max_scale: int) -> int:
    """Index of the level-max_scale dyadic cell containing x (1.0 clamped)."""
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x must be in [0, 1], got {x!r}")
    c = int(math.ldexp(x, max_scale))  # exact product, exact floor
    top = (1 << max_scale) - 1
    return top if c > top else c


def scale_decomposition(x: float, max_scale: int) -> list[tuple[HaarIndex, int]]:
    """The one wavelet per scale that is nonzero at x, with its value.

    Returns [(HaarIndex(0,0), 1), (HaarIndex(1,k1), v1), ...] up to max_scale;
    exactly max_scale + 1 entries (evaluation sparsity).
    """
    c = cell_index(x, max_scale)
    out: list[tuple[HaarIndex, int]] = [(HaarIndex(0, 0), 1)]
    for j in range(1, max_scale + 1):
        k = c >> (max_scale - j + 1)
        val = -1 if (c >> (max_scale - j)) & 1 else 1
        out.append((HaarIndex(j, k), val))
    return out


def interval_coefficients(I: DyadicInterval, max_scale: int | None = None) -> dict[HaarIndex, float]:
    """All nonzero coefficients of 1_I in the Haar system.

    coeff(0,0) = 2^-l; for 1 <= j <= l the single surviving shift is
    k = m >> (l - j + 1) with coefficient sign given by bit (l - j) of m
    (the interval sits in the +1 or -1 half of that wavelet) and magnitude
    2^(j-1-l).  Scales above l integrate to zero against 1_I.
    """
    l, m = I.level, I.m
    if max_scale is not None and max_scale < l:
        raise ValueError(f"max_scale {max_scale} below interval level {l}")
    coeffs: dict[HaarIndex, float] = {HaarIndex(0, 0): 2.0 ** -l}
    for j in range(1, l + 1):
        k = m >> (l - j + 1)
        sign = -1.0 if (m >> (l - j)) & 1 else 1.0
        coeffs[HaarIndex(j, k)] = sign * 2.0 ** (j - 1 - l)
    return coeffs


def box_coefficients(B: DyadicBox, max_scale: int | None = None) -> dict[TensorHaarIndex, float]:
    """Tensor product of the per-axis interval coefficient maps."""
    per_axis = [sorted(interval_coefficients(iv, max_scale).items())
                for iv in B.axes]
    out: dict[TensorHaarIndex, float] = {}
    stack: list[tuple[int, tuple[HaarIndex, ...], float]] = [(0, (), 1.0)]
    while stack:
        i, parts, acc = stack.pop()
        if i == len(per_axis):
            out[TensorHaarIndex(parts)] = acc
            continue
        for h, c in per_axis[i]:
            stack.append((i + 1, parts + (h,), acc * c))
    return out


def reconstruct_interval(coeffs: dict[HaarIndex, float], x: float) -> float:
    return math.fsum(c * evaluate(h, x) for h, c in coeffs.items())


def reconstruct_box(coeffs: dict[TensorHaarIndex, float], point) -> float:
    return math.fsum(c * evaluate_tensor(th, point) for th, c in coeffs.items())


def inner_product(h1: HaarIndex, h2: HaarIndex) -> Fraction:
    """Exact integral of Psi_h1 * Psi_h2 over [0,1].

    Both factors are piecewise constant on the dyadic grid at scale
    max(j1, j2), so the integral is an integer cell-sum times the cell
    width; computed over the intersection of supports only.
    """
    top = max(h1.j, h2.j, 1)
    cells = 1 << top
    lo1, hi1 = h1.support()
    lo2, hi2 = h2.support()
    lo = max(lo1, lo2)
    hi = min(hi1, hi2)
    if lo >= hi:
        return Fraction(0)
    first = int(lo * cells)
    last = int(hi * cells)  # exclusive; dyadic endpoints are exact here
    total = 0
    for c in range(first, last):
        x = (2 * c + 1) / (2 * cells)  # cell midpoint, never a breakpoint
        total += evaluate(h1, x) * evaluate(h2, x)
    return Fraction(total, cells)


def tensor_inner_product(t1: TensorHaarIndex, t2: TensorHaarIndex) -> Fraction:
    """Exact integral under the product measure: product of axis integrals."""
    if t1.d != t2.d:
        raise ValueError("tensor indices must share dimension")
    out = Fraction(1)
    for a, b in zip(t1.parts, t2.parts):
        out *= inner_product(a, b)
        if out == 0:
            return Fraction(0)
    return out


def wavelets_up_to(max_scale: int) -> list[HaarIndex]:
    """All indices with scale <= max_scale, (scale asc, shift asc)."""
    out = [HaarIndex(0, 0)]
    for j in range(1, max_scale + 1):
        out.extend(HaarIndex(j, k) for k in range(1 << (j - 1)))
    return out
