import csv
import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from divcore.errors import DataError, FitError, OracleGuardError
from divcore.evalbench import (
    BUILD,
    REPLACEMENT,
    TimingSample,
    alpha_ratio,
    analyze,
    best_fit,
    evaluate_composability,
    exhaustive_max_min,
    extrapolate_total,
    fit,
    gmm_greedy,
    mean_by_k,
    measure,
    separation_audit,
    try_fits,
    write_bench_artifacts,
    write_eval_csv,
)
from divcore.evalbench.oracles import _farthest_pair
from divcore.vecspace import Vector, pairwise_distances, stack

from conftest import random_vectors, unit


def naive_dist(u, v):
    # independent of the package kernel: plain Python floats
    a, b = list(u.components), list(v.components)
    dot = math.fsum(x * y for x, y in zip(a, b))
    na = math.sqrt(math.fsum(x * x for x in a))
    nb = math.sqrt(math.fsum(x * x for x in b))
    return 1.0 - max(-1.0, min(1.0, dot / (na * nb)))


def naive_div(points):
    return min(naive_dist(a, b) for a, b in itertools.combinations(points, 2))


def test_exhaustive_examples():
    pts = [unit(d) for d in (0, 10, 90, 180)]
    sel = exhaustive_max_min(pts, 2)
    assert sel.indices == (0, 3) and sel.diversity == 2.0
    subset, div = exhaustive_max_min(pts, 3)
    assert subset == [pts[0], pts[2], pts[3]] and div == 1.0
    assert exhaustive_max_min(pts, 4).diversity == pytest.approx(1 - math.cos(math.radians(10)), abs=1e-12)


def test_exhaustive_guard_and_limits():
    with pytest.raises(OracleGuardError):
        exhaustive_max_min(random_vectors(21, 3, 0), 2)
    assert exhaustive_max_min(random_vectors(20, 3, 0), 2).diversity > 0
    with pytest.raises(DataError):
        exhaustive_max_min(random_vectors(5, 3, 0), 6)
    with pytest.raises(DataError):
        exhaustive_max_min(random_vectors(5, 3, 0), 1)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 9), st.integers(1, 4), st.integers(0, 2**32 - 1), st.data())
def test_exhaustive_matches_naive_enumeration(n, dim, seed, data):
    k = data.draw(st.integers(2, n))
    pts = random_vectors(n, dim, seed)
    best = max(naive_div(c) for c in itertools.combinations(pts, k))
    sel = exhaustive_max_min(pts, k)
    assert sel.diversity == pytest.approx(best, abs=1e-12)
    assert naive_div(sel.subset) == pytest.approx(sel.diversity, abs=1e-12)


def naive_gmm(points, k):
    n = len(points)
    a, b = max(itertools.combinations(range(n), 2), key=lambda p: naive_dist(points[p[0]], points[p[1]]))
    chosen = [a, b]
    while len(chosen) < k:
        rest = [i for i in range(n) if i not in chosen]
        chosen.append(max(rest, key=lambda i: min(naive_dist(points[i], points[c]) for c in chosen)))
    return chosen


@pytest.mark.parametrize("seed", range(6))
def test_gmm_matches_naive(seed):
    pts = random_vectors(40, 5, seed)
    for k in (2, 3, 7):
        sel = gmm_greedy(pts, k)
        assert set(sel.indices) == set(naive_gmm(pts, k))
        assert sel.diversity == pytest.approx(naive_div(sel.subset), abs=1e-12)


def test_gmm_examples():
    pts = [unit(d) for d in (0, 10, 90, 180)]
    sel = gmm_greedy(pts, 2)
    assert set(sel.indices) == {0, 3} and sel.diversity == 2.0
    assert set(gmm_greedy(pts, 3).indices) == {0, 2, 3}


@settings(max_examples=60, deadline=None)
@given(st.integers(4, 12), st.integers(2, 8), st.integers(0, 2**32 - 1), st.data())
def test_gmm_quarter_bound_and_pair_optimality(n, dim, seed, data):
    # cosine distance is half the squared chord, so only a quarter-optimum bound is provable
    pts = random_vectors(n, dim, seed)
    k = data.draw(st.integers(2, min(n, 5)))
    opt = exhaustive_max_min(pts, k).diversity
    got = gmm_greedy(pts, k).diversity
    assert got >= 0.25 * opt - 1e-12
    assert got <= opt + 1e-12
    if k == 2:
        assert got == opt


def test_farthest_pair_prefilter_is_exact():
    pts = random_vectors(2100, 3, 1)
    block, norms = stack(pts)
    full = pairwise_distances(block, norms)
    i, j = _farthest_pair(block, norms)
    assert full[i, j] == full.max()
    assert i < j


def test_alpha_ratio():
    assert alpha_ratio(1.0, 0.5) == 2.0
    assert alpha_ratio(0.8, 0.8) == 1.0
    with pytest.warns(RuntimeWarning):
        assert alpha_ratio(1.0, 0.0) == math.inf
    with pytest.raises(ValueError):
        alpha_ratio(-1.0, 1.0)


def test_separation_audit():
    pts = [unit(d) for d in (0, 10, 90, 180)]
    audit = separation_audit(pts, [0, 3])
    assert audit.internal == 2.0
    assert audit.to_outside == pytest.approx(1 - math.cos(math.radians(10)), abs=1e-12)
    assert audit.outside == pytest.approx(1 - math.cos(math.radians(80)), abs=1e-12)
    assert audit.beats_cross_edges and audit.beats_outside_edges
    assert separation_audit(pts, [0, 1, 2, 3]).outside == math.inf
    with pytest.raises(DataError):
        separation_audit(pts, [1])


def test_fit_exact_lines():
    f = fit([(k, 2 * k + 1) for k in (1, 2, 3, 4)], "linear")
    assert f.coefficients == pytest.approx((1.0, 2.0), abs=1e-9)
    assert f.r_squared == pytest.approx(1.0, abs=1e-12)
    q = fit([(k, k * k) for k in (10, 50, 100, 500)], "quadratic")
    assert q.coefficients == pytest.approx((0.0, 0.0, 1.0), abs=1e-6)
    assert q.r_squared == pytest.approx(1.0, abs=1e-12)
    assert q(1000) == pytest.approx(1e6, rel=1e-9)


def normal_equations(points, degree):
    # exact rational solve of (X^T X) b = X^T y
    X = [[Fraction(k) ** p for p in range(degree + 1)] for k, _ in points]
    y = [Fraction(v) for _, v in points]
    m = degree + 1
    A = [[sum(r[i] * r[j] for r in X) for j in range(m)] + [sum(r[i] * t for r, t in zip(X, y))] for i in range(m)]
    for c in range(m):
        piv = next(r for r in range(c, m) if A[r][c] != 0)
        A[c], A[piv] = A[piv], A[c]
        for r in range(m):
            if r != c:
                fct = A[r][c] / A[c][c]
                A[r] = [a - fct * b for a, b in zip(A[r], A[c])]
    return [float(A[i][m] / A[i][i]) for i in range(m)]


@pytest.mark.parametrize("basis,degree", [("linear", 1), ("quadratic", 2)])
def test_fit_matches_normal_equations(basis, degree):
    pts = [(10, 0.0031), (50, 0.0162), (100, 0.041), (500, 0.52), (1000, 1.97)]
    got = fit(pts, basis).coefficients
    want = normal_equations(pts, degree)
    assert got == pytest.approx(want, abs=1e-6)


def test_fit_errors():
    with pytest.raises(FitError):
        fit([(10, 1.0), (10, 2.0), (10, 3.0)], "linear")
    with pytest.raises(FitError):
        fit([(10, 1.0), (50, 2.0)], "quadratic")
    with pytest.raises(ValueError):
        fit([(1, 1.0), (2, 2.0)], "cubic")


def test_try_and_best_fit():
    pts = [(10, 1.0), (50, 2.0)]
    fits = try_fits(pts)
    assert set(fits) == {"linear"}
    assert best_fit(fits).basis == "linear"
    assert best_fit({}) is None
    fits = try_fits([(k, k * k + 3.0) for k in (10, 50, 100)])
    assert best_fit(fits).basis == "quadratic"
    line = try_fits([(k, 4.0 * k) for k in (10, 50, 100)])
    assert best_fit(line).basis == "linear"


def test_extrapolate_examples():
    assert extrapolate_total(0, 100, lambda k: 5.0, lambda k: 1.0) == 95.0
    assert extrapolate_total(0, 100, lambda k: 5.0, lambda k: 1.0, 0.0) == 5.0
    with pytest.warns(RuntimeWarning):
        assert extrapolate_total(10, 100, lambda k: -1.0, lambda k: 1.0) == pytest.approx(81.0)
    with pytest.raises(ValueError):
        extrapolate_total(10, 100, lambda k: 1.0, lambda k: 1.0, 1.5)
    with pytest.raises(ValueError):
        extrapolate_total(200, 100, lambda k: 1.0, lambda k: 1.0)


@settings(max_examples=100)
@given(
    st.floats(0, 1e3), st.floats(0, 1e3), st.floats(0, 1e3), st.floats(0, 1e-3),
    st.integers(2, 1000), st.integers(0, 10_000), st.floats(0, 1),
)
def test_extrapolate_monotone_in_n(a, b, c, r, k, extra, frac):
    build = lambda x: a + b * x + c * x * x
    rep = lambda x: r * x
    base = extrapolate_total(k, k + extra, build, rep, frac)
    assert extrapolate_total(k, k + extra + 1, build, rep, frac) >= base
    assert base >= build(k) * (1 - 1e-12)


class TickClock:
    def __init__(self):
        self.t = 0.0

    def __call__(self):
        self.t += 1.0
        return self.t


def test_measure_sample_counts():
    data = random_vectors(300, 4, 0)
    result = measure(data, (3, 6), 3, clock=TickClock())
    builds = [s for s in result if s.phase == BUILD]
    assert sorted((s.k, s.stream_id) for s in builds) == [(k, s) for k in (3, 6) for s in range(3)]
    assert all(s.duration == 1.0 for s in result)
    for k in (3, 6):
        steady = 3 * (100 - k)
        accepted = sum(1 for s in result if s.k == k and s.phase == REPLACEMENT)
        assert result.replacement_rates[k] == accepted / steady
    assert result.mean_stream_length == 100


def test_measure_rejects_large_k():
    with pytest.raises(DataError, match="shortest stream"):
        measure(random_vectors(50, 3, 0), (10,), 5)


def test_mean_by_k():
    s = [TimingSample(10, 0, BUILD, 1.0), TimingSample(10, 1, BUILD, 3.0), TimingSample(50, 0, BUILD, 4.0),
         TimingSample(10, 0, REPLACEMENT, 9.0)]
    assert mean_by_k(s, BUILD) == [(10, 2.0), (50, 4.0)]
    with pytest.raises(ValueError):
        TimingSample(10, 0, "other", 1.0)


@pytest.mark.filterwarnings("ignore:.*clamped to 0:RuntimeWarning")
def test_analyze_and_artifacts(tmp_path):
    result = measure(random_vectors(400, 4, 1), (4, 8, 16), 2)
    analysis = analyze(result, 0.9, extra_k=(32,))
    assert set(analysis.build_fits) == {"linear", "quadratic"}
    assert set(analysis.predictions) == {4, 8, 16, 32}
    paths = write_bench_artifacts(tmp_path, result, analysis)
    names = sorted(p.name for p in paths)
    assert names == ["extrapolation.csv", "fig3a.csv", "fig3b.csv", "fig3c.csv", "fits.csv", "report.csv"]
    rows = list(csv.reader(open(tmp_path / "fits.csv")))
    assert rows[0] == ["phase", "basis", "c0", "c1", "c2", "r_squared"]
    assert [r[:2] for r in rows[1:]] == [[BUILD, "linear"], [BUILD, "quadratic"], [REPLACEMENT, "linear"], [REPLACEMENT, "quadratic"]]
    assert rows[1][4] == ""
    rows = list(csv.reader(open(tmp_path / "extrapolation.csv")))
    assert [r[0] for r in rows[1:]] == ["4", "8", "16", "32"]
    assert rows[-1][2] == "" and rows[-1][3] == "0.9"
    assert list(csv.reader(open(tmp_path / "fig3a.csv")))[0] == ["x", "y_measured", "y_fit"]


def test_analyze_with_one_k_leaves_predictions_empty():
    result = measure(random_vectors(100, 3, 0), (4,), 2)
    analysis = analyze(result)
    assert analysis.predictions == {}
    assert analysis.build_model is None


def test_evaluate_composability_exhaustive_tiny(tmp_path):
    data = random_vectors(12, 3, 4)
    report = evaluate_composability(data, 2, 3, baseline="exhaustive")
    assert report.composed_size == 6
    assert report.alpha >= 1.0
    write_eval_csv(tmp_path / "e.csv", report)
    rows = list(csv.reader(open(tmp_path / "e.csv")))
    assert rows[0] == ["composed_diversity", "baseline_diversity", "alpha", "replacement_rate"]
    assert float(rows[1][2]) == report.alpha


def test_evaluate_composability_guard_and_greedy():
    with pytest.raises(OracleGuardError):
        evaluate_composability(random_vectors(21, 3, 0), 2, 3, baseline="exhaustive")
    report = evaluate_composability(random_vectors(500, 6, 0), 5, 5)
    assert report.composed_size == 25 and report.baseline == "greedy"
    assert report.alpha > 0 and 0 <= report.replacement_rate <= 1


def test_half_bound_counterexample_is_genuine():
    # 20 planar unit vectors; plain-Python enumeration confirms farthest-first
    # lands below half the optimum, which the non-metric distance permits
    x = np.random.default_rng(10_010).normal(size=(20, 2))
    pts = [Vector(r / np.linalg.norm(r)) for r in x]
    D = [[naive_dist(a, b) for b in pts] for a in pts]
    opt = max(min(D[i][j] for i, j in itertools.combinations(c, 2)) for c in itertools.combinations(range(20), 6))
    chosen = naive_gmm(pts, 6)
    greedy = min(D[i][j] for i, j in itertools.combinations(chosen, 2))
    assert greedy < 0.5 * opt
    assert greedy >= 0.25 * opt
    assert exhaustive_max_min(pts, 6).diversity == pytest.approx(opt, abs=1e-12)
    assert gmm_greedy(pts, 6).diversity == pytest.approx(greedy, abs=1e-12)
