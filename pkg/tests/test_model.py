import io
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sphsgd.harmonics import dim_pi, eval_basis, eval_basis_batch
from sphsgd.kernel import CoefficientSchedule, kappa_sq
from sphsgd.model import (
    CoefficientVector,
    DegreeMismatchError,
    SuffixAverager,
    dump_csv,
    evaluate,
    evaluate_many,
    l2_norm_sq,
    load_csv,
    project_to_ball,
    rkhs_norm_sq,
    suffix_start,
    suffix_update,
)

CIRCLE = CoefficientSchedule(1.0, "circle-paper", 2)
S2 = CoefficientSchedule(1.0, "power-of-dim", 3)


def random_vector(sched, L, rng, scale=1.0):
    return CoefficientVector(sched, L, scale * rng.standard_normal(dim_pi(sched.d, L)))


coef_lists = st.lists(st.floats(-5, 5, allow_nan=False), min_size=9, max_size=9)


class TestEvaluate:
    def test_zero(self):
        f = CoefficientVector(S2, 2)
        assert evaluate(f, eval_basis(3, 2, [0, 1, 0])) == 0.0

    def test_constant(self):
        f = CoefficientVector(S2, 0, [1.0])
        for x in ([1, 0, 0], [0, 0.6, 0.8]):
            assert evaluate(f, eval_basis(3, 3, x)) == 1.0

    def test_cosine(self):
        # cos t = (1/sqrt2) * sqrt2 cos t
        f = CoefficientVector(CIRCLE, 1, [0.0, 1 / math.sqrt(2), 0.0])
        th = math.pi / 3
        assert evaluate(f, eval_basis(2, 1, [math.cos(th), math.sin(th)])) == pytest.approx(0.5, abs=1e-15)

    def test_mismatch(self):
        f = CoefficientVector(S2, 3)
        with pytest.raises(DegreeMismatchError):
            evaluate(f, eval_basis(3, 2, [1, 0, 0]))
        with pytest.raises(DegreeMismatchError):
            evaluate(f, eval_basis(4, 3, [1, 0, 0, 0]))
        with pytest.raises(DegreeMismatchError):
            CoefficientVector(S2, 1, [1.0, 2.0])

    def test_padding_consistency(self):
        rng = np.random.default_rng(0)
        f = random_vector(S2, 3, rng)
        g = CoefficientVector(S2, 6, f.padded(6))
        X = rng.standard_normal((50, 3))
        X /= np.linalg.norm(X, axis=1)[:, None]
        B = eval_basis_batch(3, 6, X)
        np.testing.assert_array_equal(evaluate_many(f, B), evaluate_many(g, B))
        f.grow_to(6)
        np.testing.assert_array_equal(f.coef, g.coef)
        f.grow_to(2)
        assert f.L == 6


class TestNorms:
    def test_examples(self):
        assert rkhs_norm_sq(CoefficientVector(S2, 2)) == 0.0
        f = CoefficientVector(CIRCLE, 2, [0, 0, 0, 0.1, 0])
        assert rkhs_norm_sq(f) == pytest.approx(0.16, rel=1e-14)
        g = CoefficientVector(S2, 1, [0, 0, 0.5, 0])
        assert rkhs_norm_sq(g) == pytest.approx(0.25 * 16, rel=1e-14)
        assert l2_norm_sq(CoefficientVector(S2, 0, [1.0])) == 1.0
        assert l2_norm_sq(CoefficientVector(S2, 1, [0.3, 0.4, 0, 0])) == pytest.approx(0.25, abs=1e-16)

    @given(coef_lists)
    def test_interlacing(self, c):
        f = CoefficientVector(S2, 2, c)
        assert l2_norm_sq(f) <= rkhs_norm_sq(f) * (1 + 1e-14)

    def test_sup_bound(self):
        rng = np.random.default_rng(1)
        X = rng.standard_normal((10**4, 3))
        X /= np.linalg.norm(X, axis=1)[:, None]
        B = eval_basis_batch(3, 5, X)
        kappa = math.sqrt(kappa_sq(S2))
        for _ in range(5):
            f = random_vector(S2, 5, rng, scale=0.1)
            assert np.abs(evaluate_many(f, B)).max() <= kappa * math.sqrt(rkhs_norm_sq(f)) + 1e-8
        # the section a_k Y(X[0]) attains the bound at X[0] up to truncation
        f = CoefficientVector(S2, 5, S2.expanded(5) * B[0])
        assert evaluate_many(f, B[:1])[0] == pytest.approx(rkhs_norm_sq(f), rel=1e-12)


class TestProjection:
    def test_inside_unchanged(self):
        f = CoefficientVector(S2, 0, [0.5])
        p = project_to_ball(f, 1.0)
        np.testing.assert_array_equal(p.coef, f.coef)
        assert p is not f

    def test_halved(self):
        f = CoefficientVector(S2, 0, [2.0])
        np.testing.assert_array_equal(project_to_ball(f, 1.0).coef, [1.0])

    @given(coef_lists, st.floats(0.01, 10))
    def test_norm_and_idempotent(self, c, Q):
        f = CoefficientVector(S2, 2, c)
        p = project_to_ball(f, Q)
        target = min(math.sqrt(rkhs_norm_sq(f)), Q)
        assert math.sqrt(rkhs_norm_sq(p)) == pytest.approx(target, rel=1e-12, abs=1e-300)
        np.testing.assert_array_equal(project_to_ball(p, Q).coef, p.coef)

    def test_nonexpansive(self):
        rng = np.random.default_rng(2)
        for _ in range(200):
            f = random_vector(S2, 3, rng, scale=rng.uniform(0.01, 1))
            g = random_vector(S2, 3, rng, scale=rng.uniform(0.01, 1))
            Q = rng.uniform(0.1, 3)
            pf, pg = project_to_ball(f, Q), project_to_ball(g, Q)
            lhs = rkhs_norm_sq(CoefficientVector(S2, 3, pf.coef - pg.coef))
            rhs = rkhs_norm_sq(CoefficientVector(S2, 3, f.coef - g.coef))
            assert math.sqrt(lhs) <= math.sqrt(rhs) + 1e-10

    def test_bad_radius(self):
        with pytest.raises(ValueError):
            project_to_ball(CoefficientVector(S2, 0), 0.0)


class TestSuffix:
    @pytest.mark.parametrize("alpha,n,start", [(1.0, 10, 0), (0.5, 4, 2), (0.5, 5, 3), (0.25, 16, 12), (0.1, 3, 2), (0.5, 1, 0)])
    def test_start(self, alpha, n, start):
        assert suffix_start(alpha, n) == start

    @given(st.floats(0.01, 1.0), st.integers(1, 10**6))
    def test_count(self, alpha, n):
        start = suffix_start(alpha, n)
        count = n - start
        assert count >= 1
        if alpha * n >= 1:
            assert count == n - math.ceil(round((1 - alpha) * n, 9))

    def _feed(self, alpha, iterates):
        avg = SuffixAverager(alpha, len(iterates), S2)
        for i, c in enumerate(iterates):
            suffix_update(avg, CoefficientVector(S2, 0, [c]), i)
        return avg.result().coef[0]

    def test_polyak(self):
        vals = [1.0, 2.0, 6.0, 3.0]
        assert self._feed(1.0, vals) == pytest.approx(3.0)

    def test_constant_window(self):
        assert self._feed(0.5, [9.0, -4.0, 1.5, 1.5]) == 1.5

    def test_mean_of_window(self):
        assert self._feed(0.5, [9.0, -4.0, 0.0, 3.0]) == 1.5

    def test_growing_degrees(self):
        avg = SuffixAverager(1.0, 2, S2)
        avg.update(CoefficientVector(S2, 0, [2.0]), 0)
        avg.update(CoefficientVector(S2, 1, [0.0, 1.0, 1.0, 1.0]), 1)
        r = avg.result()
        assert r.L == 1
        np.testing.assert_allclose(r.coef, [1.0, 0.5, 0.5, 0.5])

    def test_block_matches_single(self):
        rng = np.random.default_rng(3)
        rows = rng.standard_normal((37, dim_pi(3, 2)))
        a = SuffixAverager(0.3, 37, S2)
        b = SuffixAverager(0.3, 37, S2)
        for i, r in enumerate(rows):
            a.add(r, 2, i)
        b.add_block(rows[:20], 2, 0)
        b.add_block(rows[20:], 2, 20)
        np.testing.assert_allclose(a.result().coef, b.result().coef, rtol=1e-13)
        assert a.count == b.count == 37 - suffix_start(0.3, 37)

    def test_out_of_order(self):
        avg = SuffixAverager(0.5, 4, S2)
        avg.update(CoefficientVector(S2, 0, [1.0]), 2)
        with pytest.raises(ValueError):
            avg.update(CoefficientVector(S2, 0, [1.0]), 2)
        with pytest.raises(ValueError):
            avg.add_block(np.zeros((2, 1)), 0, 1)

    def test_empty_and_invalid(self):
        with pytest.raises(ValueError):
            SuffixAverager(0.5, 4, S2).result()
        with pytest.raises(ValueError):
            SuffixAverager(0.0, 4, S2)
        with pytest.raises(ValueError):
            SuffixAverager(0.5, 0, S2)


class TestCsv:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(4)
        f = random_vector(S2, 4, rng)
        path = tmp_path / "f.csv"
        dump_csv(f, path)
        g = load_csv(path, S2)
        assert g.L == 4
        np.testing.assert_array_equal(f.coef, g.coef)

    def test_layout(self):
        buf = io.StringIO()
        dump_csv(CoefficientVector(CIRCLE, 1, [0.5, 0.25, -1.0]), buf)
        lines = buf.getvalue().splitlines()
        assert lines == ["k,j,coefficient", "0,1,0.5", "1,1,0.25", "1,2,-1.0"]

    def test_bad_index(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("k,j,coefficient\n1,3,0.5\n")
        with pytest.raises(DegreeMismatchError):
            load_csv(path, CIRCLE)
