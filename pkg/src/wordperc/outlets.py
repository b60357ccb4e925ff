"""Outlets, good boxes, the renormalized lattice and outlet chains.

Stored offsets of the eight outlet sites relative to a center ``v`` in Z^3
(``b`` sites are 1, ``w`` sites are 0; first sign is y, second is z):

    b_pp (0, 0, 1)   b_mp (0, -1, 1)   b_pm (0, 0, 0)    b_mm (0, -1, 0)
    w_pp (0, 0, -1)  w_mp (0, -1, -1)  w_pm (0, 0, -2)   w_mm (0, -1, -2)

The ``b_*m`` and ``w_*p`` sites are the four center vertices.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from . import connectivity as cn
from .lattice import Configuration, Region, add, adjacent, make_region, shift

OUTLET_OFFSETS = {
    "b_pp": (0, 0, 1),
    "b_mp": (0, -1, 1),
    "b_pm": (0, 0, 0),
    "b_mm": (0, -1, 0),
    "w_pp": (0, 0, -1),
    "w_mp": (0, -1, -1),
    "w_pm": (0, 0, -2),
    "w_mm": (0, -1, -2),
}
B_LABELS = ("b_pp", "b_mp", "b_pm", "b_mm")
W_LABELS = ("w_pp", "w_mp", "w_pm", "w_mm")


@dataclass(frozen=True)
class OutletVertices:
    center: tuple

    def site(self, label: str) -> tuple:
        return add(self.center, OUTLET_OFFSETS[label])

    def sites(self) -> dict:
        return {label: self.site(label) for label in OUTLET_OFFSETS}

    def __getattr__(self, name):
        if name in OUTLET_OFFSETS:
            return self.site(name)
        raise AttributeError(name)


def ell_bound(L: int) -> int:
    """Worst-case connector length (12L-1) * 12L * (2L+1)."""
    return (12 * L - 1) * 12 * L * (2 * L + 1)


# regions relative to an outlet at the origin ------------------------------


def gamma_region(L: int) -> Region:
    return make_region((-L, L), (0, 8 * L), (0, 2 * L))


def escape_regions(L: int) -> dict:
    """The four boxes holding the escape paths, keyed 1..4."""
    return {
        1: make_region((-L, L), (0, 8 * L), (1, 2 * L + 1)),
        2: make_region((-L, L), (-8 * L, 0), (1, 2 * L + 1)),
        3: make_region((-L, L), (-8 * L, 0), (-2 * L - 1, -1)),
        4: make_region((-L, L), (0, 8 * L), (-2 * L - 1, -1)),
    }


# (start label, color, y-side) of each escape path
ESCAPES = {1: ("b_pp", 1, "max"), 2: ("b_mp", 1, "min"), 3: ("w_mm", 0, "min"), 4: ("w_pm", 0, "max")}


def box_region(L: int) -> Region:
    return make_region((-2 * L, 2 * L), (-8 * L, 8 * L), (-2 * L - 1, 2 * L + 1))


def slab_region(L: int, color: int) -> Region:
    z = (1, 2 * L + 1) if color == 1 else (-2 * L - 1, -1)
    return make_region((-6 * L, 6 * L), (4 * L, 8 * L), z)


def block_region(L: int) -> Region:
    """Smallest box containing everything a good-box test at the origin reads."""
    return box_region(L).hull(slab_region(L, 1)).hull(slab_region(L, 0))


def renorm_position(L: int, i: int, j: int) -> tuple:
    return (4 * i * L, 12 * j * L, 0)


def connector_region(L: int, i: int, j: int, color: int) -> Region:
    """Corridor for the connector leaving the outlet of box (i, j) towards j + 1.

    x within (-6L, 6L) of the box center, y from the outlet row up to the next
    row, z in the upper (color 1) or lower (color 0) half.
    """
    x0, y0, _ = renorm_position(L, i, j)
    zlo, zhi = (1, 2 * L) if color == 1 else (-2 * L - 1, -2)
    return Region((x0 - 6 * L + 1, y0, zlo), (x0 + 6 * L - 1, y0 + 12 * L - 1, zhi))


# events -------------------------------------------------------------------


def _elementary(state_at: Callable, center) -> bool:
    for label, (dx, dy, dz) in OUTLET_OFFSETS.items():
        want = 1 if label[0] == "b" else 0
        if state_at((center[0] + dx, center[1] + dy, center[2] + dz)) != want:
            return False
    return True


def is_elementary_outlet(config: Configuration, v) -> bool:
    return _elementary(config.site_state, tuple(v))


def gamma_event(config: Configuration, L: int) -> bool:
    """1-path in R_L from stored (0, 0, 0) to the maximal-y layer."""
    if L < 1:
        raise ValueError("L must be >= 1")
    region = gamma_region(L)
    states = config.states(region)
    return cn.connects_to_layer_array(states, region.index((0, 0, 0)), 1, axis=1, which="max")


def _escapes_hold(states_of: Callable, k: int, L: int) -> bool:
    for n, region in escape_regions(L).items():
        label, color, side = ESCAPES[n]
        region = region.translate((k, 0, 0))
        start = add((k, 0, 0), OUTLET_OFFSETS[label])
        if not cn.connects_to_layer_array(states_of(region), region.index(start), color, 1, side):
            return False
    return True


def is_l_outlet(config: Configuration, v, L: int) -> bool:
    if L < 1:
        raise ValueError("L must be >= 1")
    local = shift(config, tuple(v))
    return is_elementary_outlet(local, (0, 0, 0)) and _escapes_hold(local.states, 0, L)


@dataclass(frozen=True)
class GoodBox:
    good: bool
    k: Optional[int] = None

    def __bool__(self):
        return self.good


def good_box_block(block: np.ndarray, L: int) -> GoodBox:
    """Good-box test on a state array laid out on ``block_region(L)``."""
    region = block_region(L)

    def states_of(r: Region) -> np.ndarray:
        return block[region.slices(r)]

    def state_at(s) -> int:
        return int(block[region.index(s)])

    witness = None
    for k in range(-L + 1, L):
        if _elementary(state_at, (k, 0, 0)) and _escapes_hold(states_of, k, L):
            witness = k
            break
    if witness is None:
        return GoodBox(False)
    for color in (1, 0):
        if not cn.uniqueness_array(states_of(slab_region(L, color)), L, color):
            return GoodBox(False)
    return GoodBox(True, witness)


def is_good_box(config: Configuration, v, L: int) -> GoodBox:
    """Good-box test of the box centered at ``v``; carries the smallest witness k."""
    if L < 1:
        raise ValueError("L must be >= 1")
    local = shift(config, tuple(v))
    # cheap rejection before hashing the whole block
    if not any(_elementary(local.site_state, (k, 0, 0)) for k in range(-L + 1, L)):
        return GoodBox(False)
    return good_box_block(local.states(block_region(L)), L)


def is_occupied(config: Configuration, L: int, i: int, j: int) -> bool:
    if (i + j) % 2:
        raise ValueError(f"renormalized vertex ({i}, {j}) needs i + j even")
    return bool(is_good_box(config, renorm_position(L, i, j), L))


def find_oriented_path(
    occupancy: Callable,
    start_set: Iterable,
    steps: int,
    window: Optional[int] = None,
) -> Optional[list]:
    """Oriented path (i_0, 0), ..., (i_K, K) of occupied vertices, or None.

    Layer-by-layer search restricted to ``|i| <= window`` (default: ``steps``
    plus the largest start offset).  Within a layer vertices are ordered by
    ``(|i|, -i)``; each vertex keeps the first parent that reaches it.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    starts = sorted({int(i) for i in start_set}, key=lambda i: (abs(i), -i))
    if window is None:
        window = steps + max((abs(i) for i in starts), default=0)
    key = lambda i: (abs(i), -i)  # noqa: E731
    layer = [i for i in starts if i % 2 == 0 and abs(i) <= window and occupancy(i, 0)]
    parents = [{i: None for i in layer}]
    for j in range(1, steps + 1):
        nxt = {}
        for i in layer:
            for c in (i + 1, i - 1):
                if c in nxt or abs(c) > window:
                    continue
                if occupancy(c, j):
                    nxt[c] = i
        if not nxt:
            return None
        parents.append(nxt)
        layer = sorted(nxt, key=key)
    i = layer[0]
    path = []
    for j in range(steps, -1, -1):
        path.append((i, j))
        i = parents[j][i]
    return path[::-1]


def occupancy_of(config: Configuration, L: int) -> Callable:
    """Memoized occupancy predicate ``(i, j) -> bool`` for a configuration."""
    cache = {}

    def occupied(i: int, j: int) -> bool:
        if (i, j) not in cache:
            cache[(i, j)] = is_occupied(config, L, i, j)
        return cache[(i, j)]

    return occupied


# outlet chains --------------------------------------------------------------


class ChainExtractionError(RuntimeError):
    def __init__(self, segment: int, color: Optional[int], reason: str):
        self.segment, self.color, self.reason = segment, color, reason
        super().__init__(f"segment {segment}: {reason}")


@dataclass
class OutletChain:
    L: int
    outlets: list
    b_paths: list
    w_paths: list
    lambda_b: list = field(default_factory=list)
    lambda_w: list = field(default_factory=list)
    ell_eff: int = 0

    def __post_init__(self):
        if not self.lambda_b:
            self.lambda_b = [len(p) for p in self.b_paths]
        if not self.lambda_w:
            self.lambda_w = [len(p) for p in self.w_paths]
        if not self.ell_eff:
            self.ell_eff = max(self.lambda_b + self.lambda_w, default=0)

    def paths(self, color: int) -> list:
        return self.b_paths if color == 1 else self.w_paths

    def lambdas(self, color: int) -> list:
        return self.lambda_b if color == 1 else self.lambda_w

    def to_dict(self) -> dict:
        return {
            "L": self.L,
            "outlets": [
                {"center": list(o.center), "sites": {k: list(s) for k, s in o.sites().items()}}
                for o in self.outlets
            ],
            "b_paths": [[list(s) for s in p] for p in self.b_paths],
            "w_paths": [[list(s) for s in p] for p in self.w_paths],
            "lambda_b": list(self.lambda_b),
            "lambda_w": list(self.lambda_w),
            "ell_eff": self.ell_eff,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "OutletChain":
        return cls(
            L=d["L"],
            outlets=[OutletVertices(tuple(o["center"])) for o in d["outlets"]],
            b_paths=[[tuple(s) for s in p] for p in d["b_paths"]],
            w_paths=[[tuple(s) for s in p] for p in d["w_paths"]],
            lambda_b=list(d["lambda_b"]),
            lambda_w=list(d["lambda_w"]),
            ell_eff=d["ell_eff"],
        )

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def extract_outlet_chain(config: Configuration, L: int, path: Sequence) -> OutletChain:
    """Outlets along an oriented path joined by disjoint 1- and 0-connectors.

    Connector m runs from ``b_pp`` (``w_pm``) of outlet m to ``b_mp``
    (``w_mm``) of outlet m + 1 inside :func:`connector_region`.  Connectors
    are found greedily in path order; each forbids all earlier vertices.
    """
    outlets = []
    for n, (i, j) in enumerate(path):
        v = renorm_position(L, i, j)
        box = is_good_box(config, v, L)
        if not box:
            raise ChainExtractionError(n, None, f"box ({i}, {j}) is not good")
        outlets.append(OutletVertices(add(v, (box.k, 0, 0))))
    for (i, j), (i2, j2) in zip(path, path[1:]):
        if abs(i2 - i) != 1 or j2 != j + 1:
            raise ValueError(f"not an oriented step: ({i}, {j}) -> ({i2}, {j2})")
    reserved = {s for o in outlets for s in o.sites().values()}
    used: set = set()
    b_paths, w_paths = [], []
    for m, (i, j) in enumerate(path[:-1]):
        for color, start, end, out in ((1, "b_pp", "b_mp", b_paths), (0, "w_pm", "w_mm", w_paths)):
            src, dst = outlets[m].site(start), outlets[m + 1].site(end)
            forbidden = used | (reserved - {src, dst})
            found = cn.find_path(
                config, connector_region(L, i, j, color), color, [src], [dst], forbidden
            )
            if found is None:
                raise ChainExtractionError(m, color, f"no {color}-connector from outlet {m}")
            used.update(found)
            out.append(found)
    return OutletChain(L, outlets, b_paths, w_paths)


def validate_chain(config: Configuration, chain: OutletChain) -> list:
    """Independent check of every chain invariant; returns a list of problems."""
    problems = []
    n = len(chain.outlets)
    if len(chain.b_paths) != n - 1 or len(chain.w_paths) != n - 1:
        problems.append("connector count differs from outlet count - 1")
    for m, o in enumerate(chain.outlets):
        for label, s in o.sites().items():
            if config.site_state(s) != (label[0] == "b"):
                problems.append(f"outlet {m} site {label} has wrong color")
    seen = {}
    for color, paths, lambdas, a, b in (
        (1, chain.b_paths, chain.lambda_b, "b_pp", "b_mp"),
        (0, chain.w_paths, chain.lambda_w, "w_pm", "w_mm"),
    ):
        for m, p in enumerate(paths):
            tag = f"{'bw'[1 - color]}-connector {m}"
            if not p or p[0] != chain.outlets[m].site(a) or p[-1] != chain.outlets[m + 1].site(b):
                problems.append(f"{tag} has wrong endpoints")
            if lambdas[m] != len(p) or lambdas[m] > chain.ell_eff:
                problems.append(f"{tag} length bookkeeping is off")
            for u, v in zip(p, p[1:]):
                if not adjacent(u, v):
                    problems.append(f"{tag} jumps between {u} and {v}")
            for s in p:
                if config.site_state(s) != color:
                    problems.append(f"{tag} crosses {s} of the wrong color")
                if s in seen:
                    problems.append(f"{tag} meets {seen[s]} at {s}")
                seen[s] = tag
    endpoints = {s for p in chain.b_paths + chain.w_paths for s in (p[0], p[-1])} if n > 1 else set()
    for m, o in enumerate(chain.outlets):
        for label, s in o.sites().items():
            if s in seen and s not in endpoints:
                problems.append(f"outlet {m} site {label} lies inside {seen[s]}")
    if chain.ell_eff != max(chain.lambda_b + chain.lambda_w, default=0):
        problems.append("ell_eff is not the largest connector length")
    return problems


# witnesses ----------------------------------------------------------------


def good_box_witness(L: int, v=(0, 0, 0), k: int = 0, slabs: bool = True) -> dict:
    """Overlay making the box centered at ``v`` good with an outlet at ``v + (k, 0, 0)``.

    Four straight monochromatic corridors carry the escape paths; with
    ``slabs`` the two uniqueness slabs are made monochromatic as well.
    """
    out = {}
    c = add(v, (k, 0, 0))
    for label, off in OUTLET_OFFSETS.items():
        out[add(c, off)] = 1 if label[0] == "b" else 0
    for y in range(-8 * L, 8 * L):
        out[add(c, (0, y, 1))] = 1
        out[add(c, (0, y, -2))] = 0
    if slabs:
        for color in (1, 0):
            for s in slab_region(L, color).translate(v).sites():
                out[s] = color
    return out


def witness_overlay(L: int, vertices: Iterable, k: int = 0, slabs: bool = True) -> dict:
    """Union of :func:`good_box_witness` over renormalized vertices (i, j)."""
    out = {}
    for i, j in vertices:
        out.update(good_box_witness(L, renorm_position(L, i, j), k, slabs))
    return out


def planted_vertices(window: int, steps: int) -> list:
    return [(i, j) for j in range(steps + 1) for i in range(-window, window + 1) if (i + j) % 2 == 0]
