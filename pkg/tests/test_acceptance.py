"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v -s``; the verdict table is
also repeated in the terminal summary.
"""

import time
from fractions import Fraction

import pytest

from blackboard import suites
from blackboard.protocols import best_zero_round_referee_apx, best_zero_round_referee_mis

STRESS = ("silent", "full-broadcast", "xor:directed_round1", "xor:fooling_xor", "xor:symmetric_xor", "luby:1")


def _summary(rep, pick=lambda q: True):
    rows = [q for q in rep.quantities if pick(q)]
    bad = [q.name for q in rows if not q.passed]
    return rows, bad


@pytest.fixture(scope="module")
def embedding_report():
    start = time.perf_counter()
    rep = suites.embedding(k=1, f_hat=1, p_hat=2, seed=0, mc_trials=10_000)
    return rep, time.perf_counter() - start


def test_mis_base_case(record_criterion):
    start = time.perf_counter()
    values = {k: best_zero_round_referee_mis(k)[1] for k in (1, 2, 3, 4)}
    elapsed = time.perf_counter() - start
    ok = all(values[k] == Fraction(1, 2**k) for k in values) and elapsed < 5
    record_criterion("mis-base-case", ok, f"optima={[str(v) for v in values.values()]} time={elapsed:.2f}s")
    assert ok


def test_matching_base_case(record_criterion):
    start = time.perf_counter()
    optima = {k: best_zero_round_referee_apx(k)[1] for k in (1, 2, 3)}
    elapsed = time.perf_counter() - start
    flagged = [k for k, e in optima.items() if e > Fraction(1, k)]
    ratios = {k: 1 / e for k, e in optima.items()}
    ok = all(ratios[k] >= k for k in ratios) and elapsed < 30
    detail = f"E={[str(e) for e in optima.values()]} ratios={[str(r) for r in ratios.values()]} flagged={flagged} time={elapsed:.2f}s"
    record_criterion("matching-base-case", ok, detail)
    assert ok


def test_structure_suite(record_criterion):
    start = time.perf_counter()
    rep = suites.structure(trials=200, seed=0, k=1, f_hat=1, p_hat=2)
    elapsed = time.perf_counter() - start
    ok = rep.passed and elapsed < 60
    record_criterion("structure", ok, "; ".join(f"{q.name}={q.value:g}" for q in rep.quantities) + f" time={elapsed:.1f}s")
    assert ok, rep.failures()


def test_marginal_and_product_laws(record_criterion, embedding_report):
    rep, elapsed = embedding_report
    keys = ("marginal_equals_level_law", "blocks_product_gap", "fooling_product_tv_max", "sigma_uniform")
    rows, bad = _summary(rep, lambda q: any(k in q.name for k in keys))
    covered = all(any(q.name.startswith(f"mis.{p}.fooling_product_tv_max") for q in rows) for p in STRESS)
    ok = not bad and covered and elapsed < 180
    record_criterion("marginal-product-laws", ok, f"{len(rows)} quantities, failures={bad}, embedding time={elapsed:.1f}s")
    assert ok


def test_leakage_inequalities(record_criterion, embedding_report):
    rep, elapsed = embedding_report
    keys = ("first_round_info", "other_blocks_info_avg", "fooling_info_avg", "info_additivity")
    rows, bad = _summary(rep, lambda q: any(k in q.name for k in keys))
    covered = all(any(q.name.startswith(f"mis.{p}.round1.info_additivity") for q in rows) for p in STRESS)
    ok = not bad and covered and elapsed < 300
    record_criterion("leakage-inequalities", ok, f"{len(rows)} quantities, failures={bad}")
    assert ok


def test_embedding_faithfulness(record_criterion, embedding_report):
    rep, elapsed = embedding_report
    keys = ("mean_tv_vs_pinsker_budget", "tv_exactly_zero", "tau_", "round_elimination", "rectangle", "fixture")
    rows, bad = _summary(rep, lambda q: any(k in q.name for k in keys))
    zero_tv = [q for q in rows if q.name.endswith("tv_exactly_zero")]
    mc = [q for q in rows if "tau_success" in q.name]
    ok = not bad and len(zero_tv) >= 2 and len(mc) >= 2 and elapsed < 300
    record_criterion("embedding-faithfulness", ok, f"{len(rows)} quantities, MC={[(q.name, q.value) for q in mc]}, failures={bad}")
    assert ok


def test_luby_upper_bound(record_criterion):
    rep = suites.luby_suite(sizes=(8, 16, 32, 64), graphs=100, seed=0)
    record_criterion("luby", rep.passed, "; ".join(f"{q.name}={q.value:g}" for q in rep.quantities))
    assert rep.passed, rep.failures()


def test_bipartite_reduction(record_criterion):
    rep = suites.bipartite_suite(graphs=20, samples=2000, seed=0, max_n=12)
    record_criterion("bipartite-reduction", rep.passed, f"{len(rep.quantities)} checks, failures={[q.name for q in rep.failures()]}")
    assert rep.passed, rep.failures()


def test_infotheory_suite(record_criterion):
    rep = suites.infotheory(trials=100, seed=0)
    record_criterion("infotheory", rep.passed, f"{len(rep.quantities)} checks, failures={[q.name for q in rep.failures()]}")
    assert rep.passed, rep.failures()


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v", "-s"]))
