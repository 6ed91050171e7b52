"""Acceptance checks: the package's end-to-end guarantees, one per test.

Run `pytest tests/test_acceptance.py -v -s` to see one PASS/FAIL line per
guarantee with the measured margin. Every check here is oracle-based:
ground-truth synthetic populations, an independent grid search, exhaustive
small grids, or brute-force re-sorting.
"""

from __future__ import annotations

import math
import subprocess
import sys
import time

import numpy as np

from zpdselect import pipeline
from zpdselect.difficulty import CalibratedItem, calibrate
from zpdselect.rasch import (
    ResponseItem,
    estimate_ability,
    estimate_ability_grid,
    sigmoid,
)
from zpdselect.selection import Mode, rank_and_select, zpd_score
from zpdselect.synth import SynthSpec, Uniform, generate_population


def report(label: str, ok: bool, detail: str = "") -> None:
    status = "PASS" if ok else "FAIL"
    line = f"[{status}] {label}"
    if detail:
        line = f"{line}  ({detail})"
    print(line)
    assert ok, line


def response_items(b, r):
    return [ResponseItem(float(bb), int(rr)) for bb, rr in zip(b, r)]


class TestAcceptance:
    def test_ability_recovery_on_large_populations(self):
        # 10,000-item populations, true ability in {-2..2}, 3 seeds each:
        # the estimate must land within 0.1 of truth in under a second.
        worst_err = 0.0
        slowest = 0.0
        for theta_star in (-2.0, -1.0, 0.0, 1.0, 2.0):
            for seed in (0, 1, 2):
                start = time.perf_counter()
                b_star, recs = generate_population(
                    SynthSpec(
                        n_items=10_000,
                        theta_star=theta_star,
                        difficulty_dist=Uniform(-3, 3),
                        seed=seed,
                    )
                )
                est = estimate_ability(
                    response_items(b_star, [rec.correct for rec in recs])
                )
                slowest = max(slowest, time.perf_counter() - start)
                worst_err = max(worst_err, abs(est.theta - theta_star))
        report(
            "ability recovery: 15 runs of n=10000, |error| <= 0.1, each < 1 s",
            worst_err <= 0.1 and slowest < 1.0,
            f"worst |error|={worst_err:.4f}, slowest run={slowest * 1000:.0f} ms",
        )

    def test_root_finder_agrees_with_grid_search(self):
        # 100 random 500-item instances: the bisection estimate and the
        # independent step-1e-4 grid search stay within 1e-3, all in
        # under 10 seconds total.
        rng = np.random.default_rng(2024)
        start = time.perf_counter()
        worst = 0.0
        for _ in range(100):
            theta_true = float(rng.uniform(-2, 2))
            b = rng.uniform(-3, 3, 500)
            r = (rng.random(500) < sigmoid(theta_true - b)).astype(int)
            if r.sum() in (0, len(r)):
                r[0] = 1 - r[0]
            items = response_items(b, r)
            root = estimate_ability(items)
            grid = estimate_ability_grid(items, step=1e-4)
            worst = max(worst, abs(root.theta - grid.theta))
        total = time.perf_counter() - start
        report(
            "root finder vs grid search: 100 instances of n=500, gap <= 1e-3, total < 10 s",
            worst <= 1e-3 and total < 10.0,
            f"worst gap={worst:.2e}, total={total:.2f} s",
        )

    def test_expected_matches_observed_count_on_unclamped_fits(self):
        # At any unclamped estimate the expected number of successes
        # matches the observed count to within one sample.
        rng = np.random.default_rng(7)
        checked = 0
        worst = 0.0
        for n in (3, 5, 20, 100, 1000):
            for _ in range(40):
                b = rng.uniform(-3.5, 3.5, n)
                r = (rng.random(n) < rng.uniform(0.2, 0.8)).astype(int)
                est = estimate_ability(response_items(b, r))
                if est.clamped:
                    continue
                checked += 1
                worst = max(worst, est.count_gap)
        report(
            "expected-vs-observed success count: gap <= 1 on every unclamped fit",
            checked >= 100 and worst <= 1.0,
            f"{checked} unclamped instances, max gap={worst:.2e}",
        )

    def test_correction_rule_exact_on_reference_grid(self):
        # calibrate(raw, r, mu) must reproduce
        # raw + (1 - r) * max(0, mu - raw) bit-for-bit on the reference
        # grid raw in {0, mu/2, mu, 2mu} x r in {0, 1}, including the
        # fixed points: correct items unchanged, raw == mu unchanged,
        # raw above mu unchanged.
        checks = 0
        ok = True
        for mu in (0.1, 0.7, 1.0, 1.6180339887498949, 2.5):
            for raw in (0.0, 0.5 * mu, mu, 2.0 * mu):
                for r in (0, 1):
                    expected = raw + (1 - r) * max(0.0, mu - raw)
                    ok = ok and calibrate(raw, r, mu) == expected
                    checks += 1
            ok = ok and calibrate(mu, 0, mu) == mu
            ok = ok and calibrate(2.0 * mu, 0, mu) == 2.0 * mu
            ok = ok and calibrate(0.5 * mu, 1, mu) == 0.5 * mu
            checks += 3
        report(
            "correction rule: exact equality with the closed form on the reference grid",
            ok,
            f"{checks} exact comparisons",
        )

    def test_selected_set_matches_two_independent_oracles(self):
        # On 1,000-item random instances the selected set must equal both
        # a brute-force full sort by independently computed score and the
        # k items nearest the ability estimate, at every budget in
        # {1%, 5%, 10%, 15%}, with k exactly ceil(rho * N).
        def scalar_score(theta: float, bb: float) -> float:
            x = theta - bb
            if x >= 0:
                z = math.exp(-x)
                p = 1.0 / (1.0 + z)
            else:
                z = math.exp(x)
                p = z / (1.0 + z)
            return p * (1.0 - p)

        expected_k = {0.01: 10, 0.05: 50, 0.10: 100, 0.15: 150}
        rng = np.random.default_rng(11)
        instances = 0
        ok = True
        for trial in range(5):
            theta = float(rng.uniform(-2, 2))
            b = [float(v) for v in rng.uniform(-3, 3, 1000)]
            items = [
                CalibratedItem(id=f"x{i}", raw=0.0, calibrated=0.0, b=v, correct=0)
                for i, v in enumerate(b)
            ]
            for rho, k in expected_k.items():
                sel = rank_and_select(items, theta, rho)
                chosen = set(sel.selected_ids())
                by_score = sorted(
                    range(1000), key=lambda i: (-scalar_score(theta, b[i]), i)
                )[:k]
                by_distance = sorted(
                    range(1000), key=lambda i: (abs(theta - b[i]), i)
                )[:k]
                ok = ok and sel.k == k
                ok = ok and chosen == set(f"x{i}" for i in by_score)
                ok = ok and chosen == set(f"x{i}" for i in by_distance)
                instances += 1
        report(
            "selection equivalence: set matches full-sort and nearest-|theta - b| oracles",
            ok,
            f"{instances} (instance, budget) pairs",
        )

    def test_proximity_score_properties(self):
        rng = np.random.default_rng(3)
        ps = rng.random(1000)
        peak = abs(zpd_score(0.5) - 0.25)
        edges = max(abs(zpd_score(0.0)), abs(zpd_score(1.0)))
        symmetry = max(abs(zpd_score(float(p)) - zpd_score(float(1.0 - p))) for p in ps)
        ok = peak <= 1e-12 and edges <= 1e-12 and symmetry <= 1e-12
        report(
            "proximity score: peak 0.25 at p=0.5, zero at the edges, symmetric, all within 1e-12",
            ok,
            f"peak err={peak:.1e}, edge err={edges:.1e}, symmetry err={symmetry:.1e}",
        )

    def test_partition_structure_on_symmetric_population(self):
        # Symmetric data with ability near zero: at a 10% budget the
        # easy/zpd/hard subsets are pairwise disjoint and the zpd subset
        # has the strictly lowest mean |b|.
        _, recs = generate_population(
            SynthSpec(
                n_items=1000,
                theta_star=0.0,
                difficulty_dist=Uniform(-3, 3),
                seed=17,
            )
        )
        results = {mode: pipeline.run(recs, 0.10, mode=mode) for mode in Mode}
        theta_hat = results[Mode.ZPD].theta
        sets = {m: set(r.selection.selected_ids()) for m, r in results.items()}
        mean_abs = {
            m: float(
                np.mean([abs(s.b) for s in r.selection.samples if s.selected])
            )
            for m, r in results.items()
        }
        disjoint = (
            sets[Mode.EASY].isdisjoint(sets[Mode.ZPD])
            and sets[Mode.EASY].isdisjoint(sets[Mode.HARD])
            and sets[Mode.ZPD].isdisjoint(sets[Mode.HARD])
        )
        lowest = (
            mean_abs[Mode.ZPD] < mean_abs[Mode.EASY]
            and mean_abs[Mode.ZPD] < mean_abs[Mode.HARD]
        )
        report(
            "partition structure: easy/zpd/hard disjoint at 10%, zpd has lowest mean |b|",
            disjoint and lowest and abs(theta_hat) < 0.5,
            f"theta={theta_hat:.3f}, mean|b| easy={mean_abs[Mode.EASY]:.2f} "
            f"zpd={mean_abs[Mode.ZPD]:.2f} hard={mean_abs[Mode.HARD]:.2f}",
        )

    def test_budget_nesting_on_fixed_input(self):
        _, recs = generate_population(
            SynthSpec(
                n_items=500,
                theta_star=0.4,
                difficulty_dist=Uniform(-3, 3),
                seed=23,
            )
        )
        budgets = (0.01, 0.05, 0.10, 0.15)
        selections = [
            set(pipeline.run(recs, rho).selection.selected_ids()) for rho in budgets
        ]
        nested = all(a <= b for a, b in zip(selections, selections[1:]))
        report(
            "budget nesting: selected(1%) within selected(5%) within selected(10%) within selected(15%)",
            nested,
            "sizes " + " <= ".join(str(len(s)) for s in selections),
        )

    def test_end_to_end_determinism(self, tmp_path):
        # The installed command on a seeded synthetic file must produce
        # byte-identical selection files across three runs.
        recs = tmp_path / "recs.jsonl"
        gen = subprocess.run(
            [
                sys.executable,
                "-m",
                "zpdselect",
                "simulate",
                "--n",
                "300",
                "--theta-star",
                "0.4",
                "--seed",
                "99",
                "-o",
                str(recs),
            ],
            capture_output=True,
            text=True,
        )
        assert gen.returncode == 0, gen.stderr
        outputs = []
        for run_idx in range(3):
            out = tmp_path / f"sel{run_idx}.jsonl"
            proc = subprocess.run(
                [
                    sys.executable,
                    "-m",
                    "zpdselect",
                    "pipeline",
                    "-i",
                    str(recs),
                    "--ratio",
                    "0.1",
                    "-o",
                    str(out),
                ],
                capture_output=True,
                text=True,
            )
            assert proc.returncode == 0, proc.stderr
            outputs.append(out.read_bytes())
        identical = outputs[0] == outputs[1] == outputs[2]
        report(
            "end-to-end determinism: byte-identical selection across 3 command runs",
            identical and len(outputs[0]) > 0,
            f"{len(outputs[0])} bytes per run",
        )
