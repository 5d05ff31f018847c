import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cubelab.boolcube import Cell
from cubelab.errors import (
    ConstantFunction,
    FunctionIsMsp,
    NonPowerOfTwoLength,
    NoTraversal,
    SparsityCapExceeded,
)
from cubelab.fourier import (
    SparseFourier,
    cut_analysis,
    format_function,
    from_records,
    inverse_wht,
    is_smsp,
    marginal_correlation,
    min_traversal,
    msp_closure,
    msp_residual,
    parse_function,
    random_coefficients,
    restrict,
    sid_lambda,
    smsp_lambda,
    support_cells,
    table_index_to_point,
    to_records,
    wht,
)


def all_points(d):
    return np.array(list(itertools.product((-1, 1), repeat=d)), dtype=np.int8)


def and_function(s, dim=None):
    """0/1 indicator of the all-ones assignment on features 1..s:
    prod (1+x_i)/2, so every subset of [s] has coefficient 2^-s."""
    dim = dim or s
    terms = tuple(
        (frozenset(c), 2.0 ** -s)
        for r in range(s + 1)
        for c in itertools.combinations(range(1, s + 1), r)
    )
    return SparseFourier(terms, dim)


class TestSparseFourier:
    def test_duplicates_summed(self):
        f = SparseFourier(((frozenset({1}), 0.5), (frozenset({1}), 0.25)), 3)
        assert f.coefficient((1,)) == 0.75

    def test_exact_zero_dropped(self):
        f = SparseFourier(((frozenset({1}), 0.5), (frozenset({1}), -0.5)), 3)
        assert f.terms == ()

    def test_variance_excludes_mean(self):
        f = parse_function("3 + 1*x1 + 0.5*x2", 4)
        assert f.variance == pytest.approx(1.25)
        assert f.mean == 3.0

    def test_evaluate_matches_terms(self):
        f = parse_function("1*x1*x2 + 0.5*x3", 3)
        assert f.evaluate(np.array([1, -1, -1])) == pytest.approx(-1.5)

    def test_evaluate_rows_matches_scalar(self):
        f = parse_function("0.3 + 1*x1*x3 + 0.2*x2", 3)
        X = all_points(3)
        rows = f.evaluate_rows(X)
        for x, v in zip(X, rows):
            assert f.evaluate(x) == pytest.approx(v)

    @given(st.lists(st.floats(-3, 3), min_size=4, max_size=4))
    def test_parseval_matches_brute_force_d2(self, table):
        f = wht(np.array(table))
        X = all_points(2)
        vals = f.evaluate_rows(X)
        assert f.variance == pytest.approx(np.var(vals), abs=1e-10)
        assert f.mean == pytest.approx(vals.mean(), abs=1e-12)


class TestWht:
    def test_round_trip_exact(self):
        gen = np.random.default_rng(0)
        for s in range(1, 11):
            table = gen.normal(size=2 ** s)
            back = inverse_wht(wht(table), s)
            np.testing.assert_allclose(back, table, atol=1e-12)

    def test_xor_table(self):
        # bit b of the table index encodes x_{b+1}; bit 0 -> +1, 1 -> -1
        table = np.array([
            table_index_to_point(i, 2).prod() for i in range(4)
        ], dtype=float)
        f = wht(table)
        assert f.terms == ((frozenset({1, 2}), 1.0),)

    def test_single_feature_table(self):
        table = np.array([table_index_to_point(i, 3)[0] for i in range(8)],
                         dtype=float)
        f = wht(table)
        assert f.terms == ((frozenset({1}), 1.0),)

    def test_non_power_of_two_rejected(self):
        with pytest.raises(NonPowerOfTwoLength):
            wht(np.zeros(6))

    def test_parseval_brute_force(self):
        gen = np.random.default_rng(1)
        for _ in range(20):
            table = gen.normal(size=2 ** 6)
            f = wht(table)
            assert f.variance == pytest.approx(np.var(table), abs=1e-10)


class TestRestrict:
    def test_restrict_xor_to_one_side(self):
        f = parse_function("1*x1*x2", 4)
        g = restrict(f, Cell(4, ((1, 1),)))
        assert g.terms == ((frozenset({2}), 1.0),)
        g = restrict(f, Cell(4, ((1, -1),)))
        assert g.terms == ((frozenset({2}), -1.0),)

    def test_cancellation_dropped(self):
        f = parse_function("1*x1 + 1*x1*x2", 3)
        g = restrict(f, Cell(3, ((2, -1),)))
        assert g.terms == ()

    def test_restrict_agrees_pointwise(self):
        gen = np.random.default_rng(2)
        for _ in range(200):
            s = int(gen.integers(2, 9))
            table = gen.normal(size=2 ** s)
            f = wht(table)
            q = int(gen.integers(1, s + 1))
            feats = gen.choice(np.arange(1, s + 1), size=q, replace=False)
            constraints = tuple(
                (int(k), int(gen.integers(0, 2)) * 2 - 1) for k in feats
            )
            cell = Cell(s, constraints)
            g = restrict(f, cell)
            for x in all_points(s):
                if cell.contains(x):
                    assert g.evaluate(x) == pytest.approx(
                        f.evaluate(x), abs=1e-10
                    )

    def test_restricted_mean_is_cell_average(self):
        f = parse_function("1*x1*x2 + 0.5*x3", 3)
        cell = Cell(3, ((1, 1), (2, 1)))
        g = restrict(f, cell)
        vals = [f.evaluate(x) for x in all_points(3) if cell.contains(x)]
        assert g.mean == pytest.approx(np.mean(vals))


def exhaustive_is_msp(supports):
    """Order-search oracle: some permutation adds <= 1 new feature each."""
    supports = [frozenset(s) for s in supports if s]
    for perm in itertools.permutations(supports):
        covered = set()
        for s in perm:
            if len(s - covered) > 1:
                break
            covered |= s
        else:
            return True
    return not supports


class TestMspClosure:
    def test_xor_not_msp(self):
        assert not msp_closure(parse_function("1*x1*x2", 5)).is_msp

    def test_staircase_is_msp(self):
        f = parse_function("1*x1 + 1*x1*x2 + 1*x1*x2*x3", 5)
        assert msp_closure(f).is_msp

    def test_closure_vs_exhaustive_orderings(self):
        gen = np.random.default_rng(3)
        for _ in range(500):
            m = int(gen.integers(1, 7))
            supports = []
            for _ in range(m):
                size = int(gen.integers(1, 5))
                supports.append(frozenset(
                    int(j) for j in
                    gen.choice(np.arange(1, 7), size=size, replace=False)
                ))
            supports = list(set(supports))
            f = random_coefficients(supports, seed=int(gen.integers(1 << 30)),
                                    dim=6)
            assert msp_closure(f).is_msp == exhaustive_is_msp(supports)

    def test_residual_of_msp_is_zero(self):
        f = parse_function("1*x1 + 1*x1*x2", 5)
        assert msp_residual(f).terms == ()

    def test_residual_of_mixed_function(self):
        f = parse_function("1*x1 + 1*x3*x4", 5)
        r = msp_residual(f)
        assert r.terms == ((frozenset({3, 4}), 1.0),)


class TestSmspAndSid:
    def test_support_cells_count(self):
        f = parse_function("1*x1*x2", 5)
        assert sum(1 for _ in support_cells(f)) == 9

    def test_sparsity_cap(self):
        supports = [{j} for j in range(1, 18)]
        f = random_coefficients(supports, seed=0, dim=20)
        with pytest.raises(SparsityCapExceeded):
            list(support_cells(f))

    def test_xor_not_smsp(self):
        assert not is_smsp(parse_function("1*x1*x2", 5))

    def test_and_is_smsp(self):
        assert is_smsp(and_function(3, dim=5))

    def test_smsp_iff_positive_sid(self):
        gen = np.random.default_rng(4)
        for _ in range(100):
            m = int(gen.integers(1, 5))
            supports = list({
                frozenset(
                    int(j) for j in gen.choice(
                        np.arange(1, 6),
                        size=int(gen.integers(1, 4)), replace=False,
                    )
                )
                for _ in range(m)
            })
            f = random_coefficients(supports, seed=int(gen.integers(1 << 30)),
                                    dim=5)
            if f.is_constant():
                continue
            if is_smsp(f):
                assert sid_lambda(f) > 0
            else:
                assert sid_lambda(f) == 0

    def test_sid_constant_function_rejected(self):
        with pytest.raises(ConstantFunction):
            sid_lambda(parse_function("2.5", 3))

    def test_support_cell_enumeration_matches_full_enumeration(self):
        # fixing a feature outside the support never changes the terms
        f = parse_function("1*x1 + 0.5*x1*x2", 4)
        by_support = sid_lambda(f)
        worst = math.inf
        for q in range(5):
            for feats in itertools.combinations(range(1, 5), q):
                for signs in itertools.product((-1, 1), repeat=q):
                    g = restrict(f, Cell(4, tuple(zip(feats, signs))))
                    if g.variance <= 0:
                        continue
                    best = max((a * a for s, a in g.terms if len(s) == 1),
                               default=0.0)
                    worst = min(worst, best / g.variance)
        assert by_support == pytest.approx(worst, abs=1e-12)


class TestAndConstants:
    @pytest.mark.parametrize("s", [2, 3])
    def test_sid_lambda(self, s):
        f = and_function(s)
        assert sid_lambda(f) == pytest.approx(1.0 / (2 ** s - 1), abs=1e-12)

    @pytest.mark.parametrize("s", [2, 3])
    def test_smsp_lambda(self, s):
        f = and_function(s)
        assert smsp_lambda(f) == pytest.approx(2.0 ** (-2 * s), abs=1e-12)

    @pytest.mark.parametrize("s", [2, 3, 4])
    def test_all_ones_path_correlations(self, s):
        # after fixing the first t coordinates to +1, the squared
        # correlation with the next coordinate is 1/(2^{s-t} - 1)
        f = and_function(s)
        for t in range(s):
            cell = Cell(s, tuple((j, 1) for j in range(1, t + 1)))
            got = marginal_correlation(f, cell, t + 1)
            assert got == pytest.approx(1.0 / (2 ** (s - t) - 1), abs=1e-12)


class TestTraversal:
    def test_single_pair_target(self):
        t, size = min_traversal([frozenset({3, 4})])
        assert t == frozenset({3, 4}) and size == 2

    def test_respects_forbidden(self):
        t, size = min_traversal([frozenset({1, 2, 3})], forbidden={1})
        assert t == frozenset({2, 3})

    def test_shared_features_reused(self):
        t, size = min_traversal([frozenset({1, 2, 3}), frozenset({2, 3, 4})])
        assert size == 2 and t == frozenset({2, 3})

    def test_impossible_traversal(self):
        with pytest.raises(NoTraversal):
            min_traversal([frozenset({1, 2})], forbidden={1})

    def test_lexicographic_tie(self):
        t, _ = min_traversal([frozenset({1, 2, 3, 4})])
        assert t == frozenset({1, 2})


class TestCutAnalysis:
    def test_cut_reconnects_nothing(self):
        f = parse_function("1*x1*x2 + 0.02*x1", 10)
        analysis = cut_analysis(f, [frozenset({1})])
        assert analysis.cut_weight == pytest.approx(4e-4)
        assert frozenset({1, 2}) in analysis.disconnected
        assert analysis.disconnected_weight(f) == pytest.approx(1.0)

    def test_empty_cut_matches_residual(self):
        f = parse_function("1*x1 + 1*x3*x4", 10)
        analysis = cut_analysis(f, [])
        assert analysis.disconnected == frozenset({frozenset({3, 4})})


class TestParseFormat:
    def test_round_trip(self):
        f = parse_function("1*x1*x2 + 0.5*x3 + 0.25", 5)
        assert parse_function(format_function(f), 5).terms == f.terms

    def test_zero_coefficient_dropped(self):
        f = parse_function("1*x1*x2 + 0*x1", 5)
        assert f.terms == ((frozenset({1, 2}), 1.0),)

    def test_duplicate_subset_rejected(self):
        with pytest.raises(ValueError):
            parse_function("1*x1 + 2*x1", 5)

    def test_records_round_trip(self):
        f = parse_function("1*x1*x2 + 0.5*x3", 5)
        assert from_records(to_records(f), 5).terms == f.terms
