"""Shifted cubic lattice, regions, hashed configurations and binary words.

A stored site ``(x, y, z)`` stands for the point ``(x, y + 1/2, z + 1/2)`` of
the shifted lattice Z^3 + (0, 1/2, 1/2).  Two sites are adjacent when their
stored coordinates differ by one along exactly one axis.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, replace
from functools import cached_property
from itertools import islice, product
from typing import Iterator, Mapping, NamedTuple, Optional

import numpy as np

from . import hashing

Site = tuple  # (x, y, z) stored integer coordinates

NEIGHBOR_STEPS = ((1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1))


class EmptyRegionError(ValueError):
    pass


def add(a, b):
    return tuple(u + v for u, v in zip(a, b))


def adjacent(a, b) -> bool:
    return len(a) == len(b) and sum(abs(u - v) for u, v in zip(a, b)) == 1


@dataclass(frozen=True)
class Region:
    """Inclusive box of stored coordinates."""

    lo: tuple
    hi: tuple

    def __post_init__(self):
        lo, hi = tuple(int(v) for v in self.lo), tuple(int(v) for v in self.hi)
        if len(lo) != 3 or len(hi) != 3:
            raise ValueError("regions are three dimensional")
        if any(a > b for a, b in zip(lo, hi)):
            raise EmptyRegionError(f"empty region {lo}..{hi}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def shape(self) -> tuple:
        return tuple(b - a + 1 for a, b in zip(self.lo, self.hi))

    @property
    def size(self) -> int:
        return math.prod(self.shape)

    def __contains__(self, s) -> bool:
        return all(a <= c <= b for a, c, b in zip(self.lo, s, self.hi))

    def sites(self) -> Iterator[Site]:
        """Sites in lexicographic order (matches C-order array layout)."""
        return product(*(range(a, b + 1) for a, b in zip(self.lo, self.hi)))

    def index(self, s) -> tuple:
        return tuple(c - a for c, a in zip(s, self.lo))

    def translate(self, v) -> "Region":
        return Region(add(self.lo, v), add(self.hi, v))

    def layer(self, axis: int, which: str) -> "Region":
        """Extreme layer orthogonal to ``axis``; ``which`` is 'min' or 'max'."""
        c = self.lo[axis] if which == "min" else self.hi[axis]
        lo, hi = list(self.lo), list(self.hi)
        lo[axis] = hi[axis] = c
        return Region(tuple(lo), tuple(hi))

    def intersect(self, other: "Region") -> Optional["Region"]:
        lo = tuple(max(a, b) for a, b in zip(self.lo, other.lo))
        hi = tuple(min(a, b) for a, b in zip(self.hi, other.hi))
        if any(a > b for a, b in zip(lo, hi)):
            return None
        return Region(lo, hi)

    def hull(self, other: "Region") -> "Region":
        return Region(
            tuple(min(a, b) for a, b in zip(self.lo, other.lo)),
            tuple(max(a, b) for a, b in zip(self.hi, other.hi)),
        )

    def slices(self, inner: "Region") -> tuple:
        """Array slices selecting ``inner`` inside an array laid out on ``self``."""
        return tuple(slice(a - o, b - o + 1) for a, b, o in zip(inner.lo, inner.hi, self.lo))

    def literal(self) -> str:
        return ",".join(f"{a}..{b}" for a, b in zip(self.lo, self.hi))

    @classmethod
    def parse(cls, text: str) -> "Region":
        parts = text.replace(" ", "").split(",")
        if len(parts) != 3:
            raise ValueError(f"region literal needs three ranges: {text!r}")
        lo, hi = [], []
        for part in parts:
            m = re.fullmatch(r"(-?\d+)\.\.(-?\d+)", part)
            if not m:
                raise ValueError(f"bad range {part!r} in region literal")
            lo.append(int(m.group(1)))
            hi.append(int(m.group(2)))
        return cls(tuple(lo), tuple(hi))


def cube(n: int) -> Region:
    """Closed box [0, n]^3 of stored sites (n + 1 sites per side)."""
    return Region((0, 0, 0), (n, n, n))


def _integer_axis(a, b) -> tuple:
    return math.floor(a) + 1, math.ceil(b) - 1


def _half_integer_axis(a, b) -> tuple:
    # stored v sits at v + 1/2; need a < v + 1/2 < b
    return math.floor(a - 0.5) + 1, math.ceil(b - 0.5) - 1


def make_region(x_interval, y_interval, z_interval) -> Region:
    """Stored-coordinate box for the open real box ``x × y × z`` on the shifted lattice.

    The x axis carries integer coordinates, y and z carry half-integers.

    >>> make_region((-3, 3), (0, 24), (0, 6)).literal()
    '-2..2,0..23,0..5'
    """
    bounds = [
        _integer_axis(*x_interval),
        _half_integer_axis(*y_interval),
        _half_integer_axis(*z_interval),
    ]
    for axis, (a, b) in zip("xyz", bounds):
        if a > b:
            raise EmptyRegionError(f"open interval on {axis} contains no lattice point")
    return Region(tuple(a for a, _ in bounds), tuple(b for _, b in bounds))


class Overlay(Mapping):
    """Read-only site -> state map, validated once and shared by every view."""

    def __init__(self, entries: Mapping = ()):
        data = {}
        for key, value in dict(entries).items():
            key = tuple(int(c) for c in key)
            if len(key) != 3 or value not in (0, 1):
                raise ValueError(f"bad overlay entry {key!r}: {value!r}")
            data[key] = int(value)
        self._data = data

    def __getitem__(self, key):
        return self._data[key]

    def __iter__(self):
        return iter(self._data)

    def __len__(self):
        return len(self._data)

    def __repr__(self):
        return f"Overlay({len(self._data)} sites)"

    @cached_property
    def arrays(self):
        if not self._data:
            return np.zeros((0, 3), dtype=np.int64), np.zeros(0, dtype=np.uint8)
        keys = np.fromiter((c for k in self._data for c in k), dtype=np.int64, count=3 * len(self._data))
        vals = np.fromiter(self._data.values(), dtype=np.uint8, count=len(self._data))
        return keys.reshape(-1, 3), vals


@dataclass(frozen=True)
class Configuration:
    """Bernoulli(p) site configuration on the whole shifted lattice.

    Site ``s`` is 1 iff ``uniform(site_hash(seed, s)) < p``.  ``overlay`` maps
    stored sites to forced values and wins over the hash.  Shifts and
    complements are lazy views over the same underlying field.
    """

    seed: int
    p: float
    overlay: Mapping = field(default_factory=Overlay)
    offset: tuple = (0, 0, 0)
    flipped: bool = False

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"p must lie in [0, 1], got {self.p}")
        if not isinstance(self.overlay, Overlay):
            object.__setattr__(self, "overlay", Overlay(self.overlay))

    @classmethod
    def constant(cls, value: int, overlay: Optional[Mapping] = None) -> "Configuration":
        """All sites ``value`` except the overlay."""
        return cls(seed=0, p=float(value), overlay=dict(overlay or {}))

    def _base_state(self, s) -> int:
        v = self.overlay.get(s)
        if v is not None:
            return v
        return int(hashing.below(hashing.site_hash(self.seed, *s), self.p))

    def site_state(self, s) -> int:
        return self._base_state(add(s, self.offset)) ^ int(self.flipped)

    def states(self, region: Region) -> np.ndarray:
        """uint8 state array of ``region`` indexed [x, y, z]."""
        base = region.translate(self.offset)
        xs, ys, zs = (np.arange(a, b + 1) for a, b in zip(base.lo, base.hi))
        if self.p >= 1.0:
            out = np.ones(region.shape, dtype=np.uint8)
        elif self.p <= 0.0:
            out = np.zeros(region.shape, dtype=np.uint8)
        else:
            out = hashing.below(hashing.box_hash(self.seed, xs, ys, zs), self.p).astype(np.uint8)
        keys, vals = self.overlay.arrays
        if len(vals):
            inside = np.all((keys >= base.lo) & (keys <= base.hi), axis=1)
            if inside.any():
                idx = keys[inside] - np.array(base.lo)
                out[idx[:, 0], idx[:, 1], idx[:, 2]] = vals[inside]
        if self.flipped:
            out ^= 1
        return out

    def with_overlay(self, entries: Mapping) -> "Configuration":
        """Force sites given in *this view's* coordinates and colors."""
        merged = dict(self.overlay)
        for s, v in entries.items():
            merged[add(s, self.offset)] = int(v) ^ int(self.flipped)
        return replace(self, overlay=merged)


def site_state(config: Configuration, s) -> int:
    return config.site_state(s)


def complement(config: Configuration) -> Configuration:
    return replace(config, flipped=not config.flipped)


def shift(config: Configuration, v) -> Configuration:
    """View with ``state(u) = config.state(u + v)``."""
    return replace(config, offset=add(config.offset, v))


# ---------------------------------------------------------------------------
# words

_TAILS = ("none", "zeros", "ones", "periodic")


@dataclass(frozen=True)
class Word:
    """Binary sequence as run lengths plus an optional infinite tail.

    ``tail`` is one of 'none', 'zeros', 'ones' or 'periodic'; a periodic tail
    repeats ``period`` run lengths, continuing the alternation of symbols.
    """

    runs: tuple = ()
    first_symbol: int = 1
    tail: str = "none"
    period: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "runs", tuple(int(r) for r in self.runs))
        object.__setattr__(self, "period", tuple(int(r) for r in self.period))
        if any(r < 1 for r in self.runs + self.period):
            raise ValueError("run lengths must be positive")
        if self.first_symbol not in (0, 1):
            raise ValueError("first_symbol must be 0 or 1")
        if self.tail not in _TAILS:
            raise ValueError(f"unknown tail {self.tail!r}")
        if (self.tail == "periodic") != bool(self.period):
            raise ValueError("a period is given iff tail == 'periodic'")

    @classmethod
    def from_digits(cls, digits, tail: str = "none") -> "Word":
        digits = [int(d) for d in digits]
        runs = []
        for i, d in enumerate(digits):
            if i and d == digits[i - 1]:
                runs[-1] += 1
            else:
                runs.append(1)
        return cls(tuple(runs), digits[0] if digits else 1, tail)

    @classmethod
    def monochromatic(cls, symbol: int) -> "Word":
        return cls((), symbol, "ones" if symbol else "zeros")

    @property
    def is_finite(self) -> bool:
        return self.tail == "none"

    @property
    def finite_length(self) -> Optional[int]:
        return sum(self.runs) if self.is_finite else None

    def iter_runs(self) -> Iterator[tuple]:
        """Yield (symbol, length) runs; a monochromatic tail yields length ``inf``."""
        sym = self.first_symbol
        runs = list(self.runs)
        if self.tail in ("zeros", "ones"):
            t = 1 if self.tail == "ones" else 0
            if runs and (sym + len(runs) - 1) % 2 == t:
                runs[-1] = math.inf
            else:
                runs.append(math.inf)
                if len(runs) == 1:
                    sym = t
        for r in runs:
            yield sym, r
            sym ^= 1
        if self.tail == "periodic":
            while True:
                for r in self.period:
                    yield sym, r
                    sym ^= 1

    def prefix_runs(self, n: int) -> list:
        """Runs covering the first ``n`` digits; the last one may be truncated."""
        out, total = [], 0
        for sym, r in self.iter_runs():
            if total >= n:
                break
            take = min(r, n - total)
            out.append((sym, int(take)))
            total += take
        if total < n:
            raise ValueError(f"finite word of length {total} is shorter than n={n}")
        return out

    def prefix(self, n: int) -> list:
        return [s for s, r in self.prefix_runs(n) for _ in range(r)]

    def line(self) -> str:
        tail = self.tail if self.tail != "periodic" else "periodic:" + ",".join(map(str, self.period))
        return f"first={self.first_symbol} runs={','.join(map(str, self.runs))} tail={tail}"

    @classmethod
    def parse(cls, line: str) -> "Word":
        fields = {}
        for token in line.split():
            key, sep, value = token.partition("=")
            if not sep or key not in ("first", "runs", "tail"):
                raise ValueError(f"bad word field {token!r}")
            fields[key] = value
        if "first" not in fields or "tail" not in fields:
            raise ValueError("word line needs first= and tail=")
        runs = tuple(int(v) for v in fields.get("runs", "").split(",") if v)
        tail, period = fields["tail"], ()
        if tail.startswith("periodic:"):
            period = tuple(int(v) for v in tail[len("periodic:"):].split(",") if v)
            tail = "periodic"
        return cls(runs, int(fields["first"]), tail, period)


def read_word_file(path) -> Word:
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip() and not ln.lstrip().startswith("#")]
    if len(lines) != 1:
        raise ValueError(f"{path}: expected exactly one word line, found {len(lines)}")
    return Word.parse(lines[0])


class RunInfo(NamedTuple):
    symbols: list
    boundaries: list  # 1-based i with xi_i != xi_{i+1}, i < n
    lengths: list  # r_j = i_{j+1} - i_j, with i_0 = 0


def runs(word: Word, n: int) -> RunInfo:
    symbols = word.prefix(n)
    boundaries = [i for i in range(1, n) if symbols[i - 1] != symbols[i]]
    edges = [0] + boundaries
    lengths = [b - a for a, b in zip(edges, edges[1:])]
    return RunInfo(symbols, boundaries, lengths)


def is_m_stretched(word: Word, M: int) -> bool:
    """Every finite run, the first one included, has at least ``M`` digits."""
    if M <= 1:
        return True
    finite = [r for _, r in islice(word.iter_runs(), len(word.runs) + 1) if r != math.inf]
    return all(r >= M for r in finite + list(word.period))
