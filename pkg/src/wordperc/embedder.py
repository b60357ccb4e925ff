"""Embedding stretched binary words along outlet chains.

A run of symbol ``c`` entering outlet ``k`` walks the ``c``-connectors
``k, k+1, ...``.  Its length is tuned to the exact run length by

* the entry vertex (one extra sibling when entering at ``b_mm``/``w_mp``),
* one parity vertex at the terminal outlet,
* two-vertex detours through the center vertices of intermediary outlets.

Embedding from ``v`` means ``v = v_0`` is uncolored and ``v_1, ..., v_n``
spell the word; :class:`EmbeddingResult` keeps ``v_0`` in ``start`` and the
colored sites in ``path``.
"""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy import ndimage

from . import hashing
from .lattice import Configuration, Region, Word, adjacent, is_m_stretched
from .outlets import OutletChain


class EmbeddingInfeasible(RuntimeError):
    def __init__(self, run_index: int, reason: str):
        self.run_index, self.reason = run_index, reason
        super().__init__(f"run {run_index}: {reason}")


class SpliceInfeasible(EmbeddingInfeasible):
    pass


class BudgetExhausted(RuntimeError):
    """The oracle hit its node budget before deciding."""


# splice arithmetic ------------------------------------------------------------


@dataclass(frozen=True)
class SplicePlan:
    run_length: int
    I: int
    lambda_sum: int
    base_length: int
    parity_pad: int
    detours: int
    start_extra: int

    @property
    def total(self) -> int:
        return self.base_length + self.parity_pad + 2 * self.detours


def splice_plan(
    lambdas: Sequence[int], l: int, ell_eff: int, start_extra: int = 0, strict: bool = True
) -> SplicePlan:
    """Plan a run of exactly ``l`` vertices over connectors of lengths ``lambdas``.

    ``I`` is the largest count of leading connectors whose lengths sum to at
    most ``l - 4``.  The base path (entry, optional sibling, ``I`` connectors,
    terminal vertex) has ``sum + 2 + start_extra`` vertices; one parity vertex
    and ``detours`` two-vertex detours make up the rest.

    With ``strict`` the stretching condition ``l >= ell_eff**2`` is required
    and the guaranteed bounds are asserted.
    """
    if start_extra not in (0, 1):
        raise ValueError("start_extra is 0 or 1")
    if strict:
        if l < ell_eff * ell_eff:
            raise ValueError(f"run length {l} below ell_eff^2 = {ell_eff * ell_eff}")
        if any(not 1 <= lam <= ell_eff for lam in lambdas):
            raise ValueError("connector lengths must lie in [1, ell_eff]")
    total, I = 0, 0
    for lam in lambdas:
        if total + lam > l - 4:
            break
        total += lam
        I += 1
    else:
        raise SpliceInfeasible(-1, f"chain exhausted before a run of {l} is covered")
    if I == 0:
        raise SpliceInfeasible(-1, f"first connector ({lambdas[0]}) too long for a run of {l}")
    base = total + 2 + start_extra
    rest = l - base
    pad = rest % 2
    detours = (rest - pad) // 2
    if detours > I - 1:
        raise SpliceInfeasible(-1, f"needs {detours} detours, only {I - 1} intermediary outlets")
    plan = SplicePlan(l, I, total, base, pad, detours, start_extra)
    if strict:
        assert l - ell_eff - 3 <= total <= l - 4
        assert I >= ell_eff - 2
        assert plan.total == l
    return plan


# constructive embedding -------------------------------------------------------

_DIRECT = {1: "b_pm", 0: "w_pp"}
_SIBLING = {"b_mm": "b_pm", "w_mp": "w_pp"}
_PARTNER = {"b_pm": "w_pp", "w_pp": "b_pm", "b_mm": "w_mp", "w_mp": "b_mm"}
_TERMINAL = {1: ("b_mm", "b_pm"), 0: ("w_mp", "w_pp")}
_DETOUR = {1: ("b_mm", "b_pm"), 0: ("w_mp", "w_pp")}


@dataclass
class EmbeddingResult:
    path: list
    word_prefix: list
    start: Optional[tuple] = None
    outlet_index_per_run: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "start": list(self.start) if self.start is not None else None,
            "path": [list(s) for s in self.path],
            "word_prefix": list(self.word_prefix),
            "outlet_index_per_run": [list(r) for r in self.outlet_index_per_run],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EmbeddingResult":
        return cls(
            path=[tuple(s) for s in d["path"]],
            word_prefix=list(d["word_prefix"]),
            start=tuple(d["start"]) if d.get("start") is not None else None,
            outlet_index_per_run=[tuple(r) for r in d.get("outlet_index_per_run", [])],
        )

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def embed_word(
    config: Configuration, chain: OutletChain, word: Word, n: int, strict: bool = True
) -> EmbeddingResult:
    """Embed the first ``n`` digits of ``word`` along ``chain``.

    Every run but the last is spliced to its exact length; the last run of
    the prefix follows connectors greedily.  ``strict`` enforces runs of at
    least ``ell_eff**2`` digits before the last one.  Raises
    :class:`EmbeddingInfeasible` naming the failing run.
    """
    runs = word.prefix_runs(n)
    outlets = chain.outlets
    ell = chain.ell_eff
    path, spans = [], []
    k = 0
    first_sym = runs[0][0]
    start = outlets[0].site(_PARTNER[_DIRECT[first_sym]])
    prev_end = None
    for idx, (sym, length) in enumerate(runs):
        entry = _DIRECT[sym] if prev_end is None else _PARTNER[prev_end]
        head = [entry] + ([_SIBLING[entry]] if entry in _SIBLING else [])
        connectors = chain.paths(sym)[k:]
        if idx == len(runs) - 1:
            seq = [outlets[k].site(x) for x in head]
            last = k
            for m, conn in enumerate(connectors):
                if len(seq) >= length:
                    break
                seq.extend(conn)
                last = k + m + 1
            if len(seq) < length:
                seq.extend(outlets[last].site(x) for x in _TERMINAL[sym])
            if len(seq) < length:
                raise EmbeddingInfeasible(idx, "chain exhausted during the final run")
            path.extend(seq[:length])
            spans.append((k, last))
            break
        if strict and length < ell * ell:
            raise EmbeddingInfeasible(idx, f"run of {length} is shorter than ell_eff^2 = {ell * ell}")
        try:
            plan = splice_plan(chain.lambdas(sym)[k:], length, ell, len(head) - 1, strict)
        except SpliceInfeasible as exc:
            raise SpliceInfeasible(idx, exc.reason) from None
        seq = [outlets[k].site(x) for x in head]
        for m in range(plan.I):
            if 1 <= m <= plan.detours:
                seq.extend(outlets[k + m].site(x) for x in _DETOUR[sym])
            seq.extend(connectors[m])
        end = k + plan.I
        terminal = _TERMINAL[sym][: 1 + plan.parity_pad]
        seq.extend(outlets[end].site(x) for x in terminal)
        if len(seq) != length:
            raise AssertionError(f"spliced run has {len(seq)} vertices, wanted {length}")
        path.extend(seq)
        spans.append((k, end))
        prev_end = terminal[-1]
        k = end
    symbols = [s for s, r in runs for _ in range(r)]
    return EmbeddingResult(path, symbols, start, spans)


# verification -----------------------------------------------------------------


@dataclass(frozen=True)
class Verification:
    ok: bool
    index: Optional[int] = None
    reason: str = ""

    def __bool__(self):
        return self.ok


def verify_embedding(config, result: EmbeddingResult) -> Verification:
    """Check self-avoidance, adjacency and digit-by-digit colors.

    ``config`` only needs a ``site_state(site)`` method, so lattices of any
    dimension are accepted.
    """
    path, word = result.path, result.word_prefix
    if len(path) != len(word):
        return Verification(False, min(len(path), len(word)), "path and word lengths differ")
    seen = set()
    if result.start is not None:
        seen.add(tuple(result.start))
        if path and not adjacent(tuple(result.start), tuple(path[0])):
            return Verification(False, 0, "first site is not adjacent to the start")
    for i, s in enumerate(path):
        s = tuple(s)
        if s in seen:
            return Verification(False, i, f"site {s} visited twice")
        seen.add(s)
        if i and not adjacent(tuple(path[i - 1]), s):
            return Verification(False, i, f"site {s} is not adjacent to its predecessor")
        if config.site_state(s) != word[i]:
            return Verification(False, i, f"site {s} has state {config.site_state(s)}, digit {word[i]}")
    return Verification(True)


# brute-force oracle -------------------------------------------------------------


def oracle_embed(
    config: Configuration,
    region: Region,
    word: Word,
    n: int,
    starts: Iterable,
    budget: int = 1_000_000,
) -> Optional[EmbeddingResult]:
    """Exhaustive depth-first search for an embedding of the first ``n`` digits.

    Starts are tried in lexicographic order and neighbors in the order +x, -x,
    +y, -y, +z, -z; paths stay inside ``region``.  Returns None when no
    embedding exists and raises :class:`BudgetExhausted` after ``budget``
    placed sites.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    digits = word.prefix(n)
    states = config.states(region).ravel().tolist()
    nx, ny, nz = region.shape
    sx, sy = ny * nz, nz
    lo = region.lo
    steps = ((1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1))
    nodes = 0

    def site(f):
        a, rem = divmod(f, sx)
        b, c = divmod(rem, sy)
        return (a + lo[0], b + lo[1], c + lo[2])

    def neighbors(f):
        a, rem = divmod(f, sx)
        b, c = divmod(rem, sy)
        out = []
        for dx, dy, dz in steps:
            if 0 <= a + dx < nx and 0 <= b + dy < ny and 0 <= c + dz < nz:
                out.append(f + dx * sx + dy * sy + dz)
        return out

    for v0 in sorted(set(tuple(s) for s in starts)):
        if v0 not in region:
            continue
        root = (v0[0] - lo[0]) * sx + (v0[1] - lo[1]) * sy + (v0[2] - lo[2])
        on_path = {root}
        trail = []
        stack = [iter(neighbors(root))]
        while stack:
            advanced = False
            for g in stack[-1]:
                if g in on_path or states[g] != digits[len(trail)]:
                    continue
                nodes += 1
                if nodes > budget:
                    raise BudgetExhausted(f"oracle exceeded {budget} nodes")
                trail.append(g)
                if len(trail) == n:
                    return EmbeddingResult([site(f) for f in trail], digits, v0)
                on_path.add(g)
                stack.append(iter(neighbors(g)))
                advanced = True
                break
            if not advanced:
                stack.pop()
                if trail:
                    on_path.discard(trail.pop())
    return None


# the M = 2 construction in Z^(d-1) x {0, 1} -------------------------------------------


@dataclass(frozen=True)
class HyperConfiguration:
    """Bernoulli(p) field on Z^dim hashed like :class:`Configuration`."""

    seed: int
    p: float
    dim: int
    overlay: dict = field(default_factory=dict, compare=False)

    @property
    def domain(self) -> int:
        return hashing.HYPER_DOMAIN ^ self.dim

    def site_state(self, s) -> int:
        s = tuple(s)
        if len(s) != self.dim:
            raise ValueError(f"expected {self.dim} coordinates, got {s}")
        if s in self.overlay:
            return self.overlay[s]
        return int(hashing.below(hashing.chain_hash(self.seed, self.domain, s), self.p))

    def states(self, lo: Sequence[int], hi: Sequence[int]) -> np.ndarray:
        h = np.array(hashing.mix64((self.seed & hashing.MASK64) ^ self.domain), dtype=np.uint64)
        for a, b in zip(lo, hi):
            h = hashing.mix64_array(h[..., None] ^ hashing.as_u64(np.arange(a, b + 1)))
        out = hashing.below(h, self.p).astype(np.uint8)
        for s, v in self.overlay.items():
            if all(a <= c <= b for a, c, b in zip(lo, s, hi)):
                out[tuple(c - a for c, a in zip(s, lo))] = v
        return out


def good_columns(config: HyperConfiguration, lo: Sequence[int], hi: Sequence[int]) -> np.ndarray:
    """Vertices v of the (d-1)-box with state 0 at (v, 0) and 1 at (v, 1)."""
    states = config.states(tuple(lo) + (0,), tuple(hi) + (1,))
    return (states[..., 0] == 0) & (states[..., 1] == 1)


def good_density_p(density: float) -> float:
    """Smaller p with p * (1 - p) = density (density <= 1/4)."""
    if not 0.0 <= density <= 0.25:
        raise ValueError("good-vertex density lies in [0, 1/4]")
    return (1.0 - math.sqrt(1.0 - 4.0 * density)) / 2.0


def crosses(good: np.ndarray) -> bool:
    structure = ndimage.generate_binary_structure(good.ndim, 1)
    if not good[0].any() or not good[-1].any():
        return False
    labels, _ = ndimage.label(good, structure=structure)
    common = np.intersect1d(np.unique(labels[0]), np.unique(labels[-1]))
    return bool(common[common > 0].size)


def crossing_path(good: np.ndarray) -> Optional[list]:
    """Shortest good path from the first to the last layer along axis 0 (array indices)."""
    shape = good.shape
    dims = len(shape)
    parent = {}
    queue = deque()
    for idx in sorted(zip(*np.nonzero(good[0]))):
        s = (0,) + tuple(int(c) for c in idx)
        parent[s] = None
        queue.append(s)
    found = None
    while queue:
        s = queue.popleft()
        if s[0] == shape[0] - 1:
            found = s
            break
        for axis in range(dims):
            for d in (1, -1):
                t = s[:axis] + (s[axis] + d,) + s[axis + 1:]
                if 0 <= t[axis] < shape[axis] and t not in parent and good[t]:
                    parent[t] = s
                    queue.append(t)
    if found is None:
        return None
    out = []
    while found is not None:
        out.append(found)
        found = parent[found]
    return out[::-1]


def lift_columns(columns: Sequence[tuple], word: Word, n: int) -> Optional[EmbeddingResult]:
    """Realize the first ``n`` digits on columns (g, 0) = 0, (g, 1) = 1.

    A run switches level inside the column holding the previous run's last
    digit, then advances one column per further digit.
    """
    runs = word.prefix_runs(n)
    pos = 0
    path = []
    for sym, length in runs:
        path.append(tuple(columns[pos]) + (sym,))
        for _ in range(length - 1):
            pos += 1
            if pos >= len(columns):
                return None
            path.append(tuple(columns[pos]) + (sym,))
    first = runs[0][0]
    start = tuple(columns[0]) + (1 - first,)
    symbols = [s for s, r in runs for _ in range(r)]
    return EmbeddingResult(path, symbols, start, [])


def remark2_embed(
    dims: int,
    seed: int,
    p: float,
    box: tuple,
    word: Word,
    n: int,
    overlay: Optional[dict] = None,
) -> Optional[EmbeddingResult]:
    """Embed a 2-stretched word in Z^dims x {0, 1} above a crossing of good columns.

    ``box`` is ``(lo, hi)`` in Z^dims; the crossing runs along the first axis.
    Returns None when no crossing exists or it is too short for ``n`` digits.
    """
    if not is_m_stretched(word, 2):
        raise ValueError("word must be 2-stretched")
    lo, hi = tuple(box[0]), tuple(box[1])
    if len(lo) != dims or len(hi) != dims:
        raise ValueError("box dimension differs from dims")
    config = HyperConfiguration(seed, p, dims + 1, dict(overlay or {}))
    good = good_columns(config, lo, hi)
    if not crosses(good):
        return None
    route = crossing_path(good)
    columns = [tuple(c + a for c, a in zip(idx, lo)) for idx in route]
    return lift_columns(columns, word, n)
