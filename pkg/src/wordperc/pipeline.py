"""Oriented path -> outlet chain -> embedded word -> verification."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .embedder import EmbeddingInfeasible, EmbeddingResult, embed_word, verify_embedding
from .lattice import Configuration, Word
from .outlets import (
    ChainExtractionError,
    OutletChain,
    extract_outlet_chain,
    find_oriented_path,
    occupancy_of,
    planted_vertices,
    witness_overlay,
)

STAGES = ("oriented_path", "chain_extraction", "embedding", "verify")


def make_configuration(
    seed: int, p: float, L: int = 1, plant: str = "none", window: int = 0, steps: int = 0
) -> Configuration:
    """Bernoulli(p) configuration, optionally with good-box witnesses planted.

    ``plant`` is 'none', 'corridors' (outlets plus straight escape corridors)
    or 'full' (corridors plus monochromatic uniqueness slabs) on every
    renormalized vertex with ``|i| <= window`` and ``0 <= j <= steps``.
    """
    if plant == "none":
        return Configuration(seed, p)
    if plant not in ("corridors", "full"):
        raise ValueError(f"unknown plant mode {plant!r}")
    overlay = witness_overlay(L, planted_vertices(window, steps), slabs=plant == "full")
    return Configuration(seed, p, overlay)


@dataclass
class PipelineOutcome:
    ok: bool
    stage: Optional[str] = None
    detail: str = ""
    oriented_path: Optional[list] = None
    chain: Optional[OutletChain] = None
    word: Optional[Word] = None
    n: int = 0
    result: Optional[EmbeddingResult] = None

    def to_dict(self) -> dict:
        return {
            "status": "ok" if self.ok else "infeasible",
            "stage": self.stage,
            "detail": self.detail,
            "oriented_path": [list(v) for v in self.oriented_path] if self.oriented_path else None,
            "word": self.word.line() if self.word else None,
            "n": self.n,
            "chain": self.chain.to_dict() if self.chain else None,
            "result": self.result.to_dict() if self.result else None,
        }


def stretched_word(ell_eff: int, count: int, first: int = 1) -> Word:
    """Finite word of ``count`` runs, each ``ell_eff**2`` long."""
    return Word((ell_eff * ell_eff,) * count, first)


def run_pipeline(
    config: Configuration,
    L: int,
    steps: int,
    word: Optional[Word] = None,
    n: Optional[int] = None,
    window: Optional[int] = None,
    stretched_runs: int = 3,
    max_paths: int = 4,
    strict: bool = True,
) -> PipelineOutcome:
    """Full constructive pipeline on one configuration.

    Oriented paths are tried from start offsets ordered by ``(|i|, -i)``; the
    first one whose chain extracts is used (at most ``max_paths`` tries).
    Without ``word`` the word has ``stretched_runs`` runs of ``ell_eff**2``.
    """
    if window is None:
        window = steps
    occupied = occupancy_of(config, L)
    starts = sorted(range(-window, window + 1, 1), key=lambda i: (abs(i), -i))
    starts = [i for i in starts if i % 2 == 0]
    chain = path = None
    first_error = None
    tried = 0
    for i in starts:
        candidate = find_oriented_path(occupied, [i], steps, window)
        if candidate is None:
            continue
        tried += 1
        try:
            chain = extract_outlet_chain(config, L, candidate)
            path = candidate
            break
        except ChainExtractionError as exc:
            first_error = first_error or exc
        if tried >= max_paths:
            break
    if path is None:
        if first_error is None:
            return PipelineOutcome(False, "oriented_path", f"no occupied {steps}-step oriented path")
        return PipelineOutcome(False, "chain_extraction", str(first_error))
    if word is None:
        word = stretched_word(chain.ell_eff, stretched_runs)
    if n is None:
        n = word.finite_length
        if n is None:
            raise ValueError("n is required for infinite words")
    out = PipelineOutcome(False, oriented_path=path, chain=chain, word=word, n=n)
    try:
        out.result = embed_word(config, chain, word, n, strict=strict)
    except EmbeddingInfeasible as exc:
        out.stage, out.detail = "embedding", str(exc)
        return out
    check = verify_embedding(config, out.result)
    if not check:
        out.stage, out.detail = "verify", f"index {check.index}: {check.reason}"
        return out
    out.ok = True
    return out
