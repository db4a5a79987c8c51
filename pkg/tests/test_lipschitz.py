import numpy as np
import pytest

from freegeo.lipschitz import (LipschitzError, aux_f_xy, cutoff_xi,
                               f_gamma_construct, from_values,
                               g_gamma_construct, lip_norm, mcshane_extend,
                               pair_slope, peaking_check)
from freegeo.metric import (branching_tree, equilateral, gallery,
                            gamma_fatten, line_space)
from conftest import random_euclidean_space


class TestNormAndSlope:
    def test_identity_on_line(self):
        f = from_values(line_space([0, 1, 2, 3]), [0, 1, 2, 3])
        assert lip_norm(f) == 1.0

    def test_zigzag_on_line(self):
        g = from_values(line_space([0, 1, 2, 3]), [0, 1, 0, 1])
        assert lip_norm(g) == 1.0

    def test_constant_zero(self):
        f = from_values(equilateral(4), [0, 0, 0, 0])
        assert lip_norm(f) == 0.0

    def test_antisymmetry(self):
        rng = np.random.default_rng(0)
        s = random_euclidean_space(rng, 6)
        f = from_values(s, rng.normal(size=6), shift_to_base=True)
        for p in range(6):
            for q in range(6):
                if p != q:
                    assert pair_slope(f, p, q) == pytest.approx(
                        -pair_slope(f, q, p), abs=1e-12)

    def test_same_point_rejected(self):
        f = from_values(equilateral(3), [0, 1, 0])
        with pytest.raises(LipschitzError):
            pair_slope(f, 1, 1)


class TestAuxFxy:
    def test_endpoint_values_before_shift(self):
        # raw values at the endpoints are +-d(x,y)/2; check via differences
        s = equilateral(3, scale=2.0)
        f = aux_f_xy(s, 1, 2)
        assert f(1) - f(2) == pytest.approx(2.0, abs=1e-12)

    def test_zero_at_equidistant_base(self):
        s = equilateral(3)
        f = aux_f_xy(s, 1, 2)
        assert f(0) == 0.0

    def test_slope_formula_to_third_point(self):
        rng = np.random.default_rng(1)
        for _ in range(10):
            s = random_euclidean_space(rng, 5)
            x, y = 1, 2
            f = aux_f_xy(s, x, y)
            d = s.dist
            for z in range(5):
                if z in (x, y):
                    continue
                expect = d[x, y] / (d[z, y] + d[z, x])
                assert abs(pair_slope(f, x, z)) == pytest.approx(
                    expect, abs=1e-12)

    def test_norm_at_most_one(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            s = random_euclidean_space(rng, int(rng.integers(3, 9)))
            f = aux_f_xy(s, 0, 1)
            assert lip_norm(f) <= 1.0 + 1e-9


class TestPeaking:
    def test_equilateral_witness_half(self):
        s = equilateral(3)
        f = aux_f_xy(s, 1, 2)
        assert peaking_check(f, 1, 2) == pytest.approx(0.5, abs=1e-12)

    def test_collinear_fails(self):
        s = line_space([0, 1, 2, 3])
        f = from_values(s, [0, 1, 2, 3])
        assert peaking_check(f, 1, 0) is None

    def test_almost_aligned_truncation(self):
        space, (x, y) = gallery("almost_aligned").generate(3)
        f = aux_f_xy(space, x, y)
        assert peaking_check(f, x, y) == pytest.approx(8.0 / 9.0, abs=1e-12)


class TestMcShane:
    def test_identity_case(self):
        s = line_space([0, 1, 2])
        f = mcshane_extend(s, [0, 1, 2], [0.0, 1.0, 0.5], 1.0)
        assert np.array_equal(f.values, [0.0, 1.0, 0.5])

    def test_line_extension_and_clip(self):
        s = line_space([0, 1, 2, 3])
        f = mcshane_extend(s, [0, 1], [0.0, 1.0], 1.0)
        assert np.allclose(f.values, [0, 1, 2, 3])
        g = mcshane_extend(s, [0, 1], [0.0, 1.0], 1.0, clip=(-1.0, 1.0))
        assert np.allclose(g.values, [0, 1, 1, 1])

    def test_equilateral(self):
        s = equilateral(3)
        f = mcshane_extend(s, [0, 1], [0.0, 1.0], 1.0)
        assert f(2) == pytest.approx(1.0)

    def test_restriction_exact_and_norm_kept(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            s = random_euclidean_space(rng, 7)
            sub = [0, 2, 4]
            base = from_values(s, rng.normal(size=7), shift_to_base=True)
            L = lip_norm(base)
            f = mcshane_extend(s, sub, base.values[sub], L)
            assert np.array_equal(f.values[sub], base.values[sub])
            assert lip_norm(f) <= L + 1e-9

    def test_not_lipschitz_rejected(self):
        s = line_space([0, 1, 2])
        with pytest.raises(LipschitzError):
            mcshane_extend(s, [0, 1], [0.0, 5.0], 1.0)

    def test_base_required(self):
        s = line_space([0, 1, 2])
        with pytest.raises(LipschitzError):
            mcshane_extend(s, [1, 2], [1.0, 2.0], 1.0)


class TestCutoff:
    def test_anchor_values(self):
        xi = cutoff_xi(1.0, 3.0)
        assert xi(1.0) == 1.0
        assert xi(3.0) == 0.0
        assert xi(2.0) == pytest.approx(0.5)
        assert xi(0.2) == 1.0
        assert xi(9.0) == 0.0


class TestFattenedLift:
    def _line_setup(self):
        s = line_space([0, 1, 2, 3])
        fat = gamma_fatten(s, 1.0)
        f = mcshane_extend(s, [0, 1], [0.0, 1.0], 1.0, clip=(-1.0, 1.0))
        return s, fat, f

    def test_line_values(self):
        s, fat, f = self._line_setup()
        fg = f_gamma_construct(s, 1.0, [(1.0, 1, 0)], f, fat)
        assert fg(1) == pytest.approx(2.0)
        assert fg(0) == 0.0
        assert fg(2) == pytest.approx(1.5)
        assert fg(3) == pytest.approx(1.5)

    def test_line_pairing_one(self):
        s, fat, f = self._line_setup()
        fg = f_gamma_construct(s, 1.0, [(1.0, 1, 0)], f, fat)
        assert (fg(1) - fg(0)) / fat.d(0, 1) == pytest.approx(1.0)

    def test_overlapping_supports_rejected(self):
        s = line_space([0, 1, 2, 3])
        fat = gamma_fatten(s, 1.0)
        f = from_values(s, [0, 1, 2, 3])
        with pytest.raises(LipschitzError):
            f_gamma_construct(s, 1.0, [(0.5, 1, 0), (0.5, 2, 1)], f, fat)

    def test_taper(self):
        s, fat, f = self._line_setup()
        fg = f_gamma_construct(s, 1.0, [(1.0, 1, 0)], f, fat)
        xi = cutoff_xi(1.0, 33.0)
        gg = g_gamma_construct(s, fg, xi)
        assert gg(1) == pytest.approx(2.0)
        assert gg(2) == pytest.approx(1.5 * 31 / 32)
        assert gg(3) == pytest.approx(1.5 * 30 / 32)
