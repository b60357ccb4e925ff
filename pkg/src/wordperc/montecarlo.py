"""Monte Carlo estimation of event probabilities.

Trial ``t`` of an estimate with base seed ``s`` evaluates the event on
``Configuration(derive_seed(s, t), p)``.  Only success counts are
aggregated, so the report does not depend on how trials are scheduled.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields, replace
from itertools import product
from statistics import NormalDist
from typing import Optional, Sequence

import numpy as np

from . import connectivity as cn
from . import embedder as em
from . import hashing
from . import outlets as ol
from .lattice import Configuration, Region, Word, cube
from .pipeline import make_configuration, run_pipeline

KINDS = (
    "crossing",
    "uniqueness",
    "gamma",
    "elementary_outlet",
    "l_outlet",
    "good_box",
    "occupied",
    "chain_extraction",
    "embed_success",
    "remark2_crossing",
    "w_inequality",
)
N_KINDS = {"crossing", "uniqueness", "remark2_crossing"}
L_KINDS = {"gamma", "l_outlet", "good_box", "occupied", "chain_extraction", "embed_success"}

CSV_COLUMNS = ("kind", "p", "scale", "t", "trials", "successes", "p_hat", "ci_low", "ci_high", "seed", "elapsed_ms")

Z95 = NormalDist().inv_cdf(0.975)


class InvalidSpec(ValueError):
    pass


class ReportFormatError(ValueError):
    pass


@dataclass(frozen=True)
class EventSpec:
    """An event and its parameters.

    ``scale`` is the box size: L for outlet-type events, N (cube [0, N]^3)
    for crossing and uniqueness, the box side for ``remark2_crossing``.
    ``word`` is a word-file line or a digit string.
    """

    kind: str
    p: float
    scale: Optional[int] = None
    t: Optional[int] = None
    color: int = 1
    region: Optional[str] = None
    word: Optional[str] = None
    n: Optional[int] = None
    steps: Optional[int] = None
    window: Optional[int] = None
    dims: Optional[int] = None
    i: int = 0
    j: int = 0
    budget: int = 200_000
    plant: str = "none"

    def __post_init__(self):
        kind = self.kind.replace("-", "_")
        object.__setattr__(self, "kind", kind)
        if kind not in KINDS:
            raise InvalidSpec(f"unknown event kind {self.kind!r}")
        if not 0.0 <= self.p <= 1.0:
            raise InvalidSpec(f"p must lie in [0, 1], got {self.p}")
        if self.color not in (0, 1):
            raise InvalidSpec("color is 0 or 1")
        needs_scale = (N_KINDS | L_KINDS) - {"remark2_crossing"}
        if kind in needs_scale and self.region is None and (self.scale is None or self.scale < 1):
            raise InvalidSpec(f"{kind} needs a positive scale")
        if kind in ("chain_extraction", "embed_success") and (self.steps is None or self.steps < 1):
            raise InvalidSpec(f"{kind} needs steps >= 1")
        if kind == "occupied" and (self.i + self.j) % 2:
            raise InvalidSpec("occupied needs i + j even")
        if kind == "w_inequality" and not self.word:
            raise InvalidSpec("w_inequality needs a word")
        if self.t is not None and self.t < 1:
            raise InvalidSpec("t must be >= 1")

    def parsed_word(self) -> Optional[Word]:
        if self.word is None:
            return None
        if "=" in self.word:
            return Word.parse(self.word)
        return Word.from_digits(self.word)

    def cube_region(self) -> Region:
        return Region.parse(self.region) if self.region else cube(self.scale)


# single-trial evaluation ------------------------------------------------------


def evaluate(spec: EventSpec, seed: int) -> bool:
    """Evaluate ``spec`` on the configuration with the given seed."""
    kind = spec.kind
    if kind == "remark2_crossing":
        dims = spec.dims or 4
        side = spec.scale or 12
        cfg = em.HyperConfiguration(seed, spec.p, dims + 1)
        return em.crosses(em.good_columns(cfg, (0,) * dims, (side - 1,) * dims))
    L = spec.scale
    if kind in ("chain_extraction", "embed_success"):
        window = spec.window if spec.window is not None else spec.steps
        config = make_configuration(seed, spec.p, L, spec.plant, window, spec.steps)
        if kind == "chain_extraction":
            occupied = ol.occupancy_of(config, L)
            starts = [i for i in range(-window, window + 1) if i % 2 == 0]
            path = ol.find_oriented_path(occupied, starts, spec.steps, window)
            if path is None:
                return False
            try:
                ol.extract_outlet_chain(config, L, path)
            except ol.ChainExtractionError:
                return False
            return True
        out = run_pipeline(config, L, spec.steps, spec.parsed_word(), spec.n, window)
        return out.ok
    config = Configuration(seed, spec.p)
    if kind == "crossing":
        return cn.crossing(config, spec.cube_region())
    if kind == "uniqueness":
        return cn.uniqueness(config, spec.cube_region(), spec.t or spec.scale, spec.color)
    if kind == "gamma":
        return ol.gamma_event(config, L)
    if kind == "elementary_outlet":
        return ol.is_elementary_outlet(config, (0, 0, 0))
    if kind == "l_outlet":
        return ol.is_l_outlet(config, (0, 0, 0), L)
    if kind == "good_box":
        return bool(ol.is_good_box(config, (0, 0, 0), L))
    if kind == "occupied":
        return ol.is_occupied(config, L, spec.i, spec.j)
    if kind == "w_inequality":
        region = Region.parse(spec.region) if spec.region else Region((-3, -3, -3), (3, 3, 3))
        word = spec.parsed_word()
        n = spec.n or word.finite_length
        found = em.oracle_embed(config, region, word, n, [(0, 0, 0)], spec.budget)
        return found is not None
    raise InvalidSpec(kind)


def _outlet_screen(seeds: np.ndarray, centers, p: float) -> np.ndarray:
    """Seeds for which some center carries an elementary outlet."""
    any_ok = np.zeros(len(seeds), dtype=bool)
    for c in centers:
        ok = np.ones(len(seeds), dtype=bool)
        for label, off in ol.OUTLET_OFFSETS.items():
            s = (c[0] + off[0], c[1] + off[1], c[2] + off[2])
            bit = hashing.below(hashing.many_seed_site_hash(seeds, *s), p)
            ok &= bit if label[0] == "b" else ~bit
        any_ok |= ok
    return any_ok


def screen(spec: EventSpec, seeds: np.ndarray) -> Optional[np.ndarray]:
    """Vectorized necessary condition for success, or None when there is none.

    Rejected seeds certainly fail; the rest are evaluated one by one.
    """
    kind, L, p = spec.kind, spec.scale, spec.p
    if kind in ("elementary_outlet", "l_outlet"):
        return _outlet_screen(seeds, [(0, 0, 0)], p)
    if kind in ("good_box", "occupied"):
        x0, y0, _ = ol.renorm_position(L, spec.i, spec.j) if kind == "occupied" else (0, 0, 0)
        return _outlet_screen(seeds, [(x0 + k, y0, 0) for k in range(-L + 1, L)], p)
    if kind == "gamma":
        return hashing.below(hashing.many_seed_site_hash(seeds, 0, 0, 0), p)
    return None


def count_successes(spec: EventSpec, start: int, stop: int, base_seed: int) -> int:
    seeds = hashing.derive_seeds(base_seed, stop, start)
    mask = screen(spec, seeds)
    if spec.kind == "elementary_outlet":
        return int(mask.sum())
    idx = range(len(seeds)) if mask is None else np.flatnonzero(mask)
    return sum(bool(evaluate(spec, int(seeds[i]))) for i in idx)


# reports --------------------------------------------------------------------------


def wilson_interval(successes: int, trials: int, z: float = Z95) -> tuple:
    """Wilson score interval, clamped so that low <= p_hat <= high."""
    if trials <= 0:
        return 0.0, 1.0
    p_hat = successes / trials
    denom = 1 + z * z / trials
    center = (p_hat + z * z / (2 * trials)) / denom
    half = z / denom * math.sqrt(p_hat * (1 - p_hat) / trials + z * z / (4 * trials * trials))
    low = 0.0 if successes == 0 else max(0.0, min(center - half, p_hat))
    high = 1.0 if successes == trials else min(1.0, max(center + half, p_hat))
    return low, high


@dataclass
class EstimateReport:
    spec: EventSpec
    trials: int
    successes: int
    p_hat: float
    ci_low: float
    ci_high: float
    seed: int
    elapsed_ms: float = 0.0
    flags: tuple = ()

    @property
    def half_width(self) -> float:
        return (self.ci_high - self.ci_low) / 2

    def to_dict(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in fields(self) if f.name != "spec"}
        d["spec"] = {k: v for k, v in asdict(self.spec).items()}
        d["flags"] = list(self.flags)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "EstimateReport":
        d = dict(d)
        d["spec"] = EventSpec(**d["spec"])
        d["flags"] = tuple(d.get("flags", ()))
        return cls(**d)


def make_report(spec, trials, successes, seed, elapsed_ms=0.0, flags=()) -> EstimateReport:
    low, high = wilson_interval(successes, trials)
    return EstimateReport(spec, trials, successes, successes / trials, low, high, seed, elapsed_ms, tuple(flags))


def _chunks(start: int, stop: int, parts: int) -> list:
    size = max(1, math.ceil((stop - start) / parts))
    return [(a, min(a + size, stop)) for a in range(start, stop, size)]


def _count_chunk(args) -> int:
    spec, a, b, base_seed = args
    return count_successes(spec, a, b, base_seed)


def _count(spec: EventSpec, start: int, stop: int, base_seed: int, threads: int) -> int:
    if threads <= 1 or stop - start < 2:
        return count_successes(spec, start, stop, base_seed)
    jobs = [(spec, a, b, base_seed) for a, b in _chunks(start, stop, threads * 4)]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return sum(pool.map(_count_chunk, jobs))


def estimate(
    spec: EventSpec,
    trials: int,
    base_seed: int,
    threads: int = 1,
    min_successes: Optional[int] = None,
    max_trials: Optional[int] = None,
) -> EstimateReport:
    """Estimate the probability of ``spec`` from ``trials`` seeded trials.

    With ``min_successes``, further batches of ``trials`` are run until that
    many successes are seen or ``max_trials`` is reached; a shortfall sets the
    ``insufficient_successes`` flag.
    """
    if trials < 1:
        raise InvalidSpec("trials must be >= 1")
    t0 = time.perf_counter()
    done = trials
    successes = _count(spec, 0, trials, base_seed, threads)
    flags = []
    if min_successes:
        cap = max(max_trials or trials, trials)
        while successes < min_successes and done < cap:
            nxt = min(done + trials, cap)
            successes += _count(spec, done, nxt, base_seed, threads)
            done = nxt
        if successes < min_successes:
            flags.append("insufficient_successes")
    elapsed = (time.perf_counter() - t0) * 1000.0
    return make_report(spec, done, successes, base_seed, elapsed, flags)


def _flag_trends(reports: list, keys: list) -> None:
    """Flag a report whose CI lies entirely below its predecessor's along an axis."""
    for axis in (0, 1):
        groups = {}
        for rep, key in zip(reports, keys):
            groups.setdefault(key[1 - axis], []).append(rep)
        for seq in groups.values():
            for prev, cur in zip(seq, seq[1:]):
                if cur.ci_high < prev.ci_low and "trend_violation" not in cur.flags:
                    cur.flags = cur.flags + ("trend_violation",)


def sweep(
    template: EventSpec,
    p_values: Optional[Sequence[float]] = None,
    scale_values: Optional[Sequence[int]] = None,
    trials: int = 100,
    base_seed: int = 0,
    threads: int = 1,
) -> list:
    """One report per (p, scale) grid point, p-major.

    Points sharing a scale share trial seeds, so monotone events stay
    monotone in p; distinct scales get independent seeds.
    """
    ps = [template.p] if p_values is None else list(p_values)
    scales = [template.scale] if scale_values is None else list(scale_values)
    if not ps or not scales:
        raise InvalidSpec("empty grid")
    reports, keys = [], []
    for p, (si, scale) in product(ps, enumerate(scales)):
        point_seed = hashing.derive_seed(base_seed, si, hashing.POINT_DOMAIN)
        spec = replace(template, p=p, scale=scale)
        reports.append(estimate(spec, trials, point_seed, threads))
        keys.append((p, si))
    _flag_trends(reports, keys)
    return reports


# persistence -----------------------------------------------------------------------


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def write_report(reports: Sequence[EstimateReport], fmt: str, destination=None, header: Sequence[str] = ()) -> str:
    """Serialize reports as 'csv' or 'json'; writes to ``destination`` if given.

    ``header`` lines are emitted as leading '#' comments in CSV and under
    ``"config"`` in JSON.
    """
    if fmt == "csv":
        buf = io.StringIO()
        for line in header:
            buf.write(f"# {line}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in reports:
            w.writerow([
                r.spec.kind, _fmt(r.spec.p), _fmt(r.spec.scale), _fmt(r.spec.t), r.trials,
                r.successes, _fmt(r.p_hat), _fmt(r.ci_low), _fmt(r.ci_high), r.seed, _fmt(float(r.elapsed_ms)),
            ])
        text = buf.getvalue()
    elif fmt == "json":
        doc = {"config": list(header), "reports": [r.to_dict() for r in reports]}
        text = json.dumps(doc, sort_keys=True, indent=1) + "\n"
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    if destination is not None:
        if hasattr(destination, "write"):
            destination.write(text)
        else:
            with open(destination, "w") as fh:
                fh.write(text)
    return text


def _parse_csv(text: str) -> list:
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    if not lines:
        raise ReportFormatError("no CSV header")
    rows = list(csv.reader(lines))
    head = rows[0]
    for col in head:
        if col not in CSV_COLUMNS:
            raise ReportFormatError(f"unknown column {col!r}")
    missing = [c for c in CSV_COLUMNS if c not in head]
    if missing:
        raise ReportFormatError(f"missing column {missing[0]!r}")
    out = []
    for n, row in enumerate(rows[1:], start=2):
        if len(row) != len(head):
            raise ReportFormatError(f"row {n} has {len(row)} fields, expected {len(head)}")
        d = dict(zip(head, row))
        try:
            spec = EventSpec(
                kind=d["kind"],
                p=float(d["p"]),
                scale=int(d["scale"]) if d["scale"] else None,
                t=int(d["t"]) if d["t"] else None,
            )
            out.append(EstimateReport(
                spec, int(d["trials"]), int(d["successes"]), float(d["p_hat"]), float(d["ci_low"]),
                float(d["ci_high"]), int(d["seed"]), float(d["elapsed_ms"]),
            ))
        except (ValueError, InvalidSpec) as exc:
            raise ReportFormatError(f"row {n}: {exc}") from None
    return out


def read_report(source) -> list:
    """Inverse of :func:`write_report`; format is sniffed from the content."""
    if hasattr(source, "read"):
        text = source.read()
    else:
        with open(source) as fh:
            text = fh.read()
    if text.lstrip().startswith("{"):
        try:
            doc = json.loads(text)
            return [EstimateReport.from_dict(d) for d in doc["reports"]]
        except (KeyError, TypeError, json.JSONDecodeError) as exc:
            raise ReportFormatError(f"malformed JSON report: {exc}") from None
    return _parse_csv(text)
