"""Catalog profiles solve their equations; checked by finite differences."""

import math

import numpy as np
import pytest

from epigraph_lab import (
    ball_torsion,
    cosh_mode,
    double_front_profile,
    interval_torsion,
    make_nonlinearity,
    saturating_front,
    strip_torsion,
    tanh_front,
)


def second_difference(profile, ys, h=1e-3):
    ys = np.asarray(ys, dtype=float)
    return (profile(ys + h) - 2.0 * profile(ys) + profile(ys - h)) / h**2


class TestSaturatingFront:
    def test_values(self):
        assert saturating_front(0.0) == 0.0
        assert saturating_front(1.0) == 1.0
        assert saturating_front(2.0) == 1.0
        assert saturating_front(0.5) == 0.9375
        out = saturating_front(np.array([0.0, 1.0, 5.0]))
        assert isinstance(out, np.ndarray)
        assert isinstance(saturating_front(0.3), float)

    def test_monotone_and_continuous_at_junction(self):
        ys = np.linspace(0.0, 2.0, 401)
        vals = saturating_front(ys)
        assert (np.diff(vals) >= 0.0).all()
        assert abs(saturating_front(1.0 - 1e-5) - 1.0) <= 1e-19

    def test_ode_residual(self):
        ys = np.linspace(0.1, 0.9, 9)
        u = saturating_front(ys)
        lhs = -second_difference(saturating_front, ys)
        rhs = 12.0 * np.sqrt(1.0 - u)
        assert np.max(np.abs(lhs - rhs)) <= 1e-4


class TestDoubleFront:
    def test_values(self):
        for y, v in [(0.5, 0.0), (1.0, 0.0), (2.0, 1.0), (3.0, 0.0),
                     (4.0, 1.0), (5.0, 1.0)]:
            assert double_front_profile(y) == v
        assert abs(double_front_profile(3.0 + 1e-4)) <= 1e-12
        assert abs(double_front_profile(3.0 - 1e-4)) <= 1e-12

    def test_ode_residual_on_both_fronts(self):
        f = make_nonlinearity("double_front_source")
        ys = np.concatenate([np.linspace(1.2, 2.8, 17),
                             np.linspace(3.2, 3.8, 7)])
        u = double_front_profile(ys)
        lhs = -second_difference(double_front_profile, ys)
        assert np.max(np.abs(lhs - f(u))) <= 1e-3

    def test_derivative_changes_sign_between_fronts(self):
        h = 1e-4
        up = (double_front_profile(1.7 + h) - double_front_profile(1.7 - h))
        down = (double_front_profile(2.5 + h) - double_front_profile(2.5 - h))
        assert up > 0.0 > down


class TestTanhFront:
    def test_values(self):
        assert tanh_front(0.0) == 0.0
        assert tanh_front(20.0) == pytest.approx(1.0, abs=1e-11)
        assert tanh_front(1.5) == pytest.approx(0.7859163970696592, abs=5e-16)

    def test_ode_residual(self):
        ys = np.linspace(0.1, 3.0, 15)
        u = tanh_front(ys)
        lhs = -second_difference(tanh_front, ys)
        assert np.max(np.abs(lhs - (u - u**3))) <= 5e-6


class TestTorsion:
    def test_interval_formula(self):
        assert interval_torsion(0.5, 0.0, 1.0) == 0.125
        assert interval_torsion(0.0, 0.0, 1.0) == 0.0
        assert interval_torsion(1.0, 0.0, 1.0) == 0.0
        assert interval_torsion(1.0, 0.0, 2.0) == 0.5

    def test_interval_second_difference_is_exact(self):
        d2 = second_difference(lambda y: interval_torsion(y, 0.0, 2.0),
                               np.array([0.5]), h=0.25)
        assert d2[0] == -1.0

    def test_strip_formula(self):
        assert strip_torsion(0.0, 1.0) == 0.5
        assert strip_torsion(1.0, 1.0) == 0.0
        assert strip_torsion(-1.0, 1.0) == 0.0

    def test_ball_formula(self):
        assert ball_torsion([0.0, 0.0], 1.0) == 0.25
        assert ball_torsion([0.0, 0.0, 0.0], 1.0) == pytest.approx(1.0 / 6)
        ring = np.array([[1.0, 0.0], [0.0, -1.0]])
        assert np.max(np.abs(ball_torsion(ring, 1.0))) <= 1e-15

    def test_ball_discrete_laplacian_is_exact(self):
        h = 0.25
        c = np.array([0.0, 0.0])
        stencil = np.array([[h, 0.0], [-h, 0.0], [0.0, h], [0.0, -h]])
        lap = (ball_torsion(c + stencil, 1.0).sum()
               - 4.0 * ball_torsion(c, 1.0)) / h**2
        assert lap == -1.0


class TestCoshMode:
    @pytest.mark.parametrize("m", [1, 2, 3])
    def test_trace_is_exactly_zero(self, m):
        pts = np.array([[0.7, 0.0], [0.7, math.pi], [-1.3, 0.0],
                        [-1.3, math.pi]])
        assert np.all(cosh_mode(m, pts) == 0.0)

    def test_fold_symmetry_is_bitwise(self):
        lo = cosh_mode(1, [0.4, 0.25])
        hi = cosh_mode(1, [0.4, math.pi - 0.25])
        assert lo == hi
        lo2 = cosh_mode(2, [0.4, 0.25])
        hi2 = cosh_mode(2, [0.4, math.pi - 0.25])
        assert lo2 == -hi2

    def test_discrete_harmonicity(self):
        h = 1e-3
        c = np.array([0.5, 1.0])
        stencil = np.array([[h, 0.0], [-h, 0.0], [0.0, h], [0.0, -h]])
        lap = (cosh_mode(1, c + stencil).sum() - 4.0 * cosh_mode(1, c)) / h**2
        assert abs(lap) <= 1e-5

    def test_growth_in_x(self):
        xs = np.array([[0.0, 1.0], [1.0, 1.0], [2.0, 1.0]])
        vals = cosh_mode(1, xs)
        assert vals[0] < vals[1] < vals[2]
