"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v``; the summary lines are
repeated at the end of the pytest report.
"""

import collections
import json
import math
import os
import random
import subprocess
import sys
import time

import numpy as np

from wordperc import connectivity as cn
from wordperc import embedder as em
from wordperc import hashing
from wordperc import montecarlo as mc
from wordperc.lattice import Configuration, Region, Word, cube
from wordperc.pipeline import make_configuration, run_pipeline


def test_criterion_1_elementary_outlet_frequency(criterion):
    t0 = time.perf_counter()
    rep = mc.estimate(mc.EventSpec("elementary_outlet", 0.5), 100_000, 42)
    elapsed = time.perf_counter() - t0
    exact = 1 / 256
    tol = 4 * math.sqrt(exact * (1 - exact) / 1e5)
    ok = abs(rep.p_hat - exact) <= tol and elapsed < 60
    criterion(1, ok, f"p_hat={rep.p_hat:.6f} exact={exact:.6f} tol={tol:.6f} time={elapsed:.2f}s")
    assert ok


def test_criterion_2_coupling_monotonicity(criterion):
    t0 = time.perf_counter()
    rng = random.Random(2)
    pairs = [tuple(sorted((rng.uniform(0.2, 0.45), rng.uniform(0.2, 0.45)))) for _ in range(10)]
    region = cube(6)
    site_violations = crossing_violations = sites = 0
    for k in range(1000):
        seed = hashing.derive_seed(7, k)
        for p1, p2 in pairs:
            a = Configuration(seed, p1).states(region)
            b = Configuration(seed, p2).states(region)
            site_violations += int(np.count_nonzero(a > b))
            sites += a.size
            low = cn.spans_axis_array(a == 1, axis=1)
            high = cn.spans_axis_array(b == 1, axis=1)
            crossing_violations += int(low and not high)
    elapsed = time.perf_counter() - t0
    ok = site_violations == 0 and crossing_violations == 0 and elapsed < 30
    criterion(2, ok, f"site violations={site_violations} over {sites} site-pairs, "
                     f"crossing violations={crossing_violations}, time={elapsed:.1f}s")
    assert ok


def test_criterion_3_finite_size_trends(criterion):
    t0 = time.perf_counter()
    sizes = (6, 10, 14, 18)
    rows = {}
    for kind in ("crossing", "uniqueness"):
        rows[kind] = [mc.estimate(mc.EventSpec(kind, 0.5, scale=n), 2000, 300 + n) for n in sizes]
    elapsed = time.perf_counter() - t0
    ok = elapsed < 300
    details = []
    for kind, reps in rows.items():
        monotone = all(b.ci_high >= a.ci_low for a, b in zip(reps, reps[1:]))
        strict = (1 - reps[-1].p_hat) < (1 - reps[0].p_hat)
        ok = ok and monotone and strict
        details.append(f"{kind}: " + " ".join(f"N={r.spec.scale}:{r.p_hat:.4f}" for r in reps))
    criterion(3, ok, "; ".join(details) + f"; time={elapsed:.1f}s")
    assert ok


def test_criterion_4_splice_arithmetic(criterion):
    t0 = time.perf_counter()
    rng = random.Random(4)
    failures = 0
    for _ in range(10_000):
        ell = rng.randint(4, 40)
        l = ell * ell + rng.randint(0, 2 * ell * ell)
        lambdas = []
        while sum(lambdas) <= l:
            lambdas.append(rng.randint(1, ell))
        ell_eff = max(lambdas)
        extra = rng.randint(0, 1)
        plan = em.splice_plan(lambdas, l, ell_eff, extra)
        good = (
            plan.base_length + plan.parity_pad + 2 * plan.detours == l
            and l - ell_eff - 3 <= plan.lambda_sum <= l - 4
            and plan.I >= ell_eff - 2
            and plan.detours <= plan.I - 1
        )
        failures += not good
    elapsed = time.perf_counter() - t0
    ok = failures == 0 and elapsed < 10
    criterion(4, ok, f"failures={failures}/10000 time={elapsed:.2f}s")
    assert ok


def _oracle_case(config, result, rng):
    """Sub-embedding around a run switch whose bounding box fits 6x6x4."""
    path, word = result.path, result.word_prefix
    switches = [i for i in range(1, len(word)) if word[i] != word[i - 1]] or [len(word) // 2]
    q = max(1, rng.choice(switches) - rng.randint(2, 6))
    start = tuple(path[q - 1])
    for m in range(12, 0, -1):
        sites = np.array([start] + [tuple(s) for s in path[q:q + m]])
        if len(sites) != m + 1:
            continue
        lo, hi = sites.min(0), sites.max(0)
        if sorted(hi - lo + 1) <= [4, 6, 6] and all(a <= b for a, b in zip(sorted(hi - lo + 1), (4, 6, 6))):
            region = Region(tuple(int(v) for v in lo), tuple(int(v) for v in hi))
            digits = word[q:q + m]
            return region, start, digits
    return None


def test_criterion_5_soundness_and_oracle_agreement(criterion):
    t0 = time.perf_counter()
    unsound = 0
    successes = []

    # literal setting: Bernoulli(1/2), L = 3, 12 renormalization steps
    stages = collections.Counter()
    for k in range(200):
        cfg = make_configuration(hashing.derive_seed(500, k), 0.5)
        out = run_pipeline(cfg, 3, 12)
        stages[out.stage or "ok"] += 1
        if out.ok:
            unsound += not em.verify_embedding(cfg, out.result)
            successes.append((cfg, out.result))
    literal = dict(stages)

    # planted good-box witnesses on a random background: strict runs of ell_eff^2
    planted = collections.Counter()
    jobs = [(3, 1, 56, Word((2304, 40), 1)), (3, 1, 56, Word((2304, 40), 0))]
    jobs += [(1, 2, 50, None)] * 30
    for n, (L, window, steps, word) in enumerate(jobs):
        cfg = make_configuration(hashing.derive_seed(600, n), 0.5, L, "full", window, steps)
        out = run_pipeline(cfg, L, steps, word, window=window)
        planted[(L, out.stage or "ok")] += 1
        if out.ok:
            unsound += not em.verify_embedding(cfg, out.result)
            successes.append((cfg, out.result))

    rng = random.Random(5)
    agree = cases = 0
    for cfg, result in successes:
        if cases == 20:
            break
        case = _oracle_case(cfg, result, rng)
        if case is None:
            continue
        region, start, digits = case
        found = em.oracle_embed(cfg, region, Word.from_digits(digits), len(digits), [start], 10**7)
        cases += 1
        agree += found is not None and bool(em.verify_embedding(cfg, found))
    elapsed = time.perf_counter() - t0
    ok = unsound == 0 and cases == 20 and agree == cases and elapsed < 600
    criterion(5, ok, f"literal L=3 outcomes={literal}; planted outcomes={dict(planted)}; "
                     f"unsound={unsound}/{len(successes)} successes; oracle agreement={agree}/{cases}; "
                     f"time={elapsed:.0f}s")
    assert ok


def test_criterion_6_four_dimensional_columns(criterion):
    t0 = time.perf_counter()
    trials = 300
    at_half = mc.estimate(mc.EventSpec("remark2_crossing", 0.5, scale=12, dims=4), trials, 66)
    p_low = em.good_density_p(0.10)
    at_tenth = mc.estimate(mc.EventSpec("remark2_crossing", p_low, scale=12, dims=4), trials, 66)
    rng = random.Random(6)
    lifted = verified = 0
    for k in range(60):
        runs = [rng.randint(2, 4) for _ in range(rng.randint(2, 6))]
        word = Word(tuple(runs), rng.randint(0, 1))
        seed = hashing.derive_seed(66, k)
        for p in (0.5, p_low):
            res = em.remark2_embed(4, seed, p, ((0,) * 4, (11,) * 4), word, sum(runs))
            if res is not None:
                lifted += 1
                verified += bool(em.verify_embedding(em.HyperConfiguration(seed, p, 5), res))
    elapsed = time.perf_counter() - t0
    ok = (
        at_half.ci_low > 0
        and at_half.p_hat >= 10 * at_tenth.p_hat
        and lifted > 0
        and verified == lifted
        and elapsed < 300
    )
    criterion(6, ok, f"crossing freq density 1/4: {at_half.p_hat:.3f} [{at_half.ci_low:.3f},"
                     f"{at_half.ci_high:.3f}], density 0.10: {at_tenth.p_hat:.3f}; "
                     f"lifted paths verified {verified}/{lifted}; time={elapsed:.1f}s")
    assert ok


def test_criterion_7_inequality_w(criterion):
    t0 = time.perf_counter()
    trials = 2000

    def est(digits):
        return mc.estimate(mc.EventSpec("w_inequality", 0.5, word=digits), trials, 77)

    mono = [est("0" * 10), est("1" * 10)]
    floor_rep = min(mono, key=lambda r: r.p_hat)
    rng = random.Random(7)
    passed = 0
    worst = 1.0
    for _ in range(20):
        digits = "".join(rng.choice("01") for _ in range(10))
        rep = est(digits)
        margin = rep.p_hat - (floor_rep.p_hat - 2 * max(rep.half_width, floor_rep.half_width))
        worst = min(worst, margin)
        passed += margin >= 0
    elapsed = time.perf_counter() - t0
    ok = passed >= 19 and elapsed < 300
    criterion(7, ok, f"{passed}/20 prefixes at or above the monochromatic floor "
                     f"(0^10: {mono[0].p_hat:.4f}, 1^10: {mono[1].p_hat:.4f}); "
                     f"smallest margin={worst:.4f}; time={elapsed:.1f}s")
    assert ok


def _cli(args, threads, env_threads=False):
    env = dict(os.environ)
    env.pop("PERC_THREADS", None)
    argv = [sys.executable, "-m", "wordperc", *args]
    if env_threads:
        env["PERC_THREADS"] = str(threads)
    else:
        argv += ["--threads", str(threads)]
    proc = subprocess.run(argv, capture_output=True, env=env)
    return proc.returncode, proc.stdout


def test_criterion_8_cli_determinism(criterion, tmp_path):
    t0 = time.perf_counter()
    word = tmp_path / "w.txt"
    word.write_text("first=0 runs=300,256 tail=ones\n")
    embed_json = tmp_path / "embed.json"
    commands = {
        "gen": (["gen", "--p", "0.5", "--seed", "3", "--region", "0..4,0..4,0..2", "--format", "json"], True),
        "event": (["event", "--event", "good-box", "--p", "0.5", "--L", "3", "--seed", "4"], True),
        "estimate": (["estimate", "--event", "crossing", "--p", "0.35", "--N", "6",
                      "--trials", "400", "--seed", "5", "--out", "json"], False),
        "sweep": (["sweep", "--event", "l-outlet", "--p", "0.5", "--L", "2", "--p-values", "0.45,0.55",
                   "--scales", "1,2", "--trials", "20000", "--seed", "6"], False),
        "embed": (["embed", "--p", "0.5", "--L", "1", "--steps", "45", "--window", "2", "--plant", "full",
                   "--word-file", str(word), "--n", "700", "--seed", "8", "--json", str(embed_json)], False),
        "oracle": (["oracle", "--p", "0.5", "--seed", "9", "--region", "-3..3,-3..3,-3..3",
                    "--word", "1100111000", "--start", "0,0,0"], True),
    }
    mismatched = []
    codes = {}
    for name, (args, via_env) in commands.items():
        outputs = []
        for threads in (1, 4, 1):
            code, out = _cli(args, threads, via_env)
            extra = embed_json.read_bytes() if name == "embed" else b""
            outputs.append((code, out, extra))
        codes[name] = outputs[0][0]
        if len(set(outputs)) != 1:
            mismatched.append(name)
    verify = [_cli(["verify", "--json", str(embed_json)], t, True) for t in (1, 4)]
    codes["verify"] = verify[0][0]
    if verify[0] != verify[1]:
        mismatched.append("verify")
    elapsed = time.perf_counter() - t0
    ok = not mismatched and codes["embed"] == 0 and codes["verify"] == 0
    criterion(8, ok, f"byte-identical: {len(codes) - len(mismatched)}/{len(codes)} commands "
                     f"(exit codes {json.dumps(codes, sort_keys=True)}); time={elapsed:.1f}s")
    assert ok
