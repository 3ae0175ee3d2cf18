"""Shared domain types and stream plumbing.

An arriving vector is a SparseUpdate: (coordinate, value) pairs with values
in [-1, 1].  DistributionSpec describes where updates come from; sample()
realizes one draw and stream_updates() a whole replayable stream.  All
randomness flows through SeededRng so (spec, seed) determines every byte.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterator, Optional

from .errors import StreamFormatError, UnsupportedModeError
from .rng import SeededRng

CONFIG_FORMAT_VERSION = 1


@dataclass(frozen=True)
class SparseUpdate:
    """One arriving vector v_t, sparse: entries are (coord, value) pairs.

    Coordinate ids are strictly increasing and < dim; values lie in [-1, 1].
    """

    entries: tuple[tuple[int, float], ...]
    dim: int

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError(f"dim must be >= 1, got {self.dim}")
        prev = -1
        for coord, value in self.entries:
            if not (isinstance(coord, int) and prev < coord < self.dim):
                raise ValueError(
                    f"coordinate ids must be strictly increasing in [0, {self.dim}), got {coord} after {prev}")
            if not (-1.0 <= value <= 1.0):  # also rejects NaN
                raise ValueError(f"value {value!r} at coord {coord} outside [-1, 1]")
            prev = coord

    @property
    def nnz(self) -> int:
        return len(self.entries)

    def dense(self) -> list[float]:
        out = [0.0] * self.dim
        for coord, value in self.entries:
            out[coord] = value
        return out

    def negate(self) -> "SparseUpdate":
        return SparseUpdate(tuple((c, -v) for c, v in self.entries), self.dim)

    def scaled_nonzeros(self) -> tuple[list[int], list[float]]:
        """Parallel (coords, values) lists for the signer hot path."""
        return [c for c, _ in self.entries], [v for _, v in self.entries]


@dataclass
class DiscrepancyState:
    """Signed prefix-sum d_t with its running cosh potential.

    phi = sum_i cosh(lam * d[i]); lam is the potential scale.
    """

    d: list[float]
    t: int = 0
    phi: float = 0.0
    lam: float = 1.0

    @classmethod
    def zero(cls, n: int, lam: float) -> "DiscrepancyState":
        return cls(d=[0.0] * n, t=0, phi=float(n), lam=lam)

    def recompute_phi(self) -> float:
        return math.fsum(math.cosh(self.lam * x) for x in self.d)


def hadamard_entry(i: int, j: int) -> int:
    """Sylvester Hadamard matrix entry, n a power of two: (-1)^popcount(i&j)."""
    return -1 if bin(i & j).count("1") & 1 else 1


def hadamard_row(i: int, n: int) -> tuple[float, ...]:
    return tuple(float(hadamard_entry(i, j)) for j in range(n))


_KINDS = ("finite-support", "product-uniform-cube", "unit-sphere",
          "hadamard-rows", "file-stream")


@dataclass(frozen=True)
class DistributionSpec:
    """Declarative input distribution with declared dimension n and sparsity s."""

    kind: str
    n: int
    s: int
    atoms: Optional[tuple[tuple[SparseUpdate, float], ...]] = None
    path: Optional[str] = None
    records: Optional[tuple[SparseUpdate, ...]] = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown distribution kind {self.kind!r}")
        if self.n < 1 or self.s < 1:
            raise ValueError("n and s must be >= 1")
        if self.kind == "finite-support":
            if not self.atoms:
                raise ValueError("finite-support needs at least one atom")
            total = math.fsum(p for _, p in self.atoms)
            if abs(total - 1.0) > 1e-12:
                raise ValueError(f"atom probabilities sum to {total!r}, not 1")
            for atom, p in self.atoms:
                if p < 0:
                    raise ValueError(f"negative probability {p!r}")
                if atom.dim != self.n:
                    raise ValueError("atom dimension disagrees with spec")
                if atom.nnz > self.s:
                    raise ValueError(
                        f"atom has {atom.nnz} nonzeros, sparsity bound is {self.s}")
        elif self.kind == "hadamard-rows":
            if self.n & (self.n - 1):
                raise ValueError(f"hadamard-rows needs a power of two, got {self.n}")

    # -- constructors ---------------------------------------------------

    @classmethod
    def finite_support(cls, atoms: list[tuple[SparseUpdate, float]]) -> "DistributionSpec":
        n = atoms[0][0].dim
        s = max(a.nnz for a, _ in atoms)
        return cls(kind="finite-support", n=n, s=max(s, 1), atoms=tuple(atoms))

    @classmethod
    def product_uniform_cube(cls, d: int) -> "DistributionSpec":
        return cls(kind="product-uniform-cube", n=d, s=d)

    @classmethod
    def unit_sphere(cls, n: int) -> "DistributionSpec":
        return cls(kind="unit-sphere", n=n, s=n)

    @classmethod
    def hadamard_rows(cls, n: int) -> "DistributionSpec":
        return cls(kind="hadamard-rows", n=n, s=n)

    @classmethod
    def file_stream(cls, path: str) -> "DistributionSpec":
        n, s, records = _parse_stream_file(path)
        return cls(kind="file-stream", n=n, s=s, path=path, records=records)

    def as_finite_support(self) -> "DistributionSpec":
        """Expand to explicit atoms where that is exact."""
        if self.kind == "finite-support":
            return self
        if self.kind == "hadamard-rows":
            n = self.n
            p = 1.0 / (2 * n)  # dyadic for power-of-two n: exact
            atoms = []
            for i in range(n):
                row = hadamard_row(i, n)
                up = SparseUpdate(tuple(enumerate(row)), n)
                atoms.append((up, p))
                atoms.append((up.negate(), p))
            return DistributionSpec(kind="finite-support", n=n, s=n, atoms=tuple(atoms))
        raise UnsupportedModeError(
            f"{self.kind} has no exact finite-support expansion")


def sample(spec: DistributionSpec, rng: SeededRng) -> SparseUpdate:
    """One draw from the distribution.  Emitted updates always satisfy the
    spec's dimension, bounds, and sparsity; a violation is a hard error."""
    if spec.kind == "finite-support":
        u = rng.uniform()
        acc = 0.0
        for atom, p in spec.atoms:
            acc += p
            if u < acc:
                return atom
        return spec.atoms[-1][0]
    if spec.kind == "product-uniform-cube":
        vals = tuple((i, rng.uniform()) for i in range(spec.n))
        return SparseUpdate(vals, spec.n)
    if spec.kind == "unit-sphere":
        return SparseUpdate(tuple(enumerate(_sphere_point(spec.n, rng))), spec.n)
    if spec.kind == "hadamard-rows":
        i = rng.randint(spec.n)
        sgn = rng.sign()
        row = hadamard_row(i, spec.n)
        return SparseUpdate(tuple((j, sgn * x) for j, x in enumerate(row)), spec.n)
    if spec.kind == "file-stream":
        idx = rng.randint(len(spec.records))
        return spec.records[idx]
    raise UnsupportedModeError(spec.kind)


def stream_updates(spec: DistributionSpec, T: int, rng: SeededRng) -> Iterator[SparseUpdate]:
    """T updates.  i.i.d. draws for distributional kinds; file streams are
    replayed in file order (the file IS the stream)."""
    if spec.kind == "file-stream":
        if T > len(spec.records):
            raise StreamFormatError(spec.path or "<stream>", len(spec.records) + 1,
                                    f"stream has {len(spec.records)} records, {T} requested")
        yield from spec.records[:T]
        return
    for _ in range(T):
        yield sample(spec, rng)


def rademacher_symmetrize(u: SparseUpdate, rng: SeededRng) -> tuple[SparseUpdate, int]:
    """Multiply the incoming vector by an independent uniform +-1 coin.

    Returns (possibly negated update, coin)."""
    coin = rng.sign()
    return (u if coin == 1 else u.negate()), coin


def _sphere_point(n: int, rng: SeededRng) -> list[float]:
    # normalized independent gaussians; resample the (measure-zero) zero vector
    while True:
        g = []
        while len(g) < n:
            a, b = rng.normal_pair()
            g.append(a)
            if len(g) < n:
                g.append(b)
        norm = math.sqrt(math.fsum(x * x for x in g))
        if norm > 1e-12:
            return [x / norm for x in g]


# -- stream file format -------------------------------------------------
#
# header:  dim=<n> sparsity=<s>
# records: one update per line, whitespace-separated coord:value pairs.
# Blank lines and lines starting with '#' are skipped.

def _parse_stream_file(path: str) -> tuple[int, int, tuple[SparseUpdate, ...]]:
    n = s = None
    records: list[SparseUpdate] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if n is None:
                try:
                    fields = dict(tok.split("=", 1) for tok in line.split())
                    n = int(fields["dim"])
                    s = int(fields["sparsity"])
                except (ValueError, KeyError) as exc:
                    raise StreamFormatError(path, lineno,
                                            f"bad header {line!r}: {exc}") from exc
                if n < 1 or s < 1:
                    raise StreamFormatError(path, lineno, "dim and sparsity must be >= 1")
                continue
            entries = []
            for tok in line.split():
                try:
                    coord_s, value_s = tok.split(":", 1)
                    entries.append((int(coord_s), float(value_s)))
                except ValueError as exc:
                    raise StreamFormatError(path, lineno,
                                            f"bad pair {tok!r}: {exc}") from exc
            try:
                up = SparseUpdate(tuple(entries), n)
            except ValueError as exc:
                raise StreamFormatError(path, lineno, str(exc)) from exc
            if up.nnz > s:
                raise StreamFormatError(path, lineno,
                                        f"{up.nnz} nonzeros exceed declared sparsity {s}")
            records.append(up)
    if n is None:
        raise StreamFormatError(path, 0, "missing header line 'dim=<n> sparsity=<s>'")
    if not records:
        raise StreamFormatError(path, 0, "stream file has no records")
    return n, s, tuple(records)


def write_stream_file(path: str, updates: list[SparseUpdate], s: int) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"dim={updates[0].dim} sparsity={s}\n")
        for up in updates:
            fh.write(" ".join(f"{c}:{v!r}" for c, v in up.entries) + "\n")


# -- structured config (JSON, versioned) --------------------------------

def spec_to_config(spec: DistributionSpec) -> dict:
    obj: dict = {"format_version": CONFIG_FORMAT_VERSION, "kind": spec.kind}
    if spec.kind == "finite-support":
        obj["atoms"] = [{"entries": [[c, v] for c, v in atom.entries],
                         "dim": atom.dim, "p": p} for atom, p in spec.atoms]
    elif spec.kind == "file-stream":
        obj["path"] = spec.path
    else:
        obj["n"] = spec.n
    return obj


def spec_from_config(obj: dict) -> DistributionSpec:
    version = obj.get("format_version")
    if version != CONFIG_FORMAT_VERSION:
        raise ValueError(f"config format_version {version!r} not supported "
                         f"(expected {CONFIG_FORMAT_VERSION})")
    kind = obj["kind"]
    if kind == "finite-support":
        atoms = [(SparseUpdate(tuple((int(c), float(v)) for c, v in a["entries"]),
                               int(a["dim"])), float(a["p"]))
                 for a in obj["atoms"]]
        return DistributionSpec.finite_support(atoms)
    if kind == "product-uniform-cube":
        return DistributionSpec.product_uniform_cube(int(obj["n"]))
    if kind == "unit-sphere":
        return DistributionSpec.unit_sphere(int(obj["n"]))
    if kind == "hadamard-rows":
        return DistributionSpec.hadamard_rows(int(obj["n"]))
    if kind == "file-stream":
        return DistributionSpec.file_stream(obj["path"])
    raise ValueError(f"unknown distribution kind {kind!r}")


def load_spec_config(path: str) -> DistributionSpec:
    with open(path, "r", encoding="utf-8") as fh:
        return spec_from_config(json.load(fh))


# -- run records ---------------------------------------------------------

@dataclass
class RunResult:
    """Aggregate record of one stream run.

    trace holds (t, running max |d|_inf, phi) rows downsampled at a stride;
    max_linf is computed at full resolution before any downsampling.
    """

    algorithm: str
    seed: int
    steps: int
    max_linf: float
    argmax_t: int
    trace: list[tuple[int, float, float]]
    final_linf: float = 0.0
    wall_time: float = 0.0          # informational only, never serialized
    extra: dict = field(default_factory=dict)

    def summary(self) -> dict:
        return {"max_linf": self.max_linf, "argmax_t": self.argmax_t,
                "steps": self.steps, "seed": self.seed}

    def csv_rows(self) -> list[tuple[int, float, float]]:
        return list(self.trace)
