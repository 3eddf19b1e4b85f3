import random
from fractions import Fraction

import numpy as np
import pytest

from soskit.moment import (
    MomentSequence,
    format_matrix,
    localizing_matrix,
    moment_matrix,
    monomial_vector,
    riesz,
    symbolic_localizing_matrix,
    symbolic_moment_matrix,
)
from soskit.poly import Polynomial
from soskit.sdp import is_psd

M1_GRID = """\
[y00  y10  y01]
[y10  y20  y11]
[y01  y11  y02]"""

M1U_GRID = """\
[ay00-y20+by02  ay10-y30+by12  ay01-y21+by03]
[ay10-y30+by12  ay20-y40+by22  ay11-y31+by13]
[ay01-y21+by03  ay11-y31+by13  ay02-y22+by04]"""

M2_GRID = """\
[y00  y10  y01  y11  y20  y02]
[y10  y20  y11  y21  y30  y12]
[y01  y11  y02  y12  y21  y03]
[y11  y21  y12  y22  y31  y13]
[y20  y30  y21  y31  y40  y22]
[y02  y12  y03  y13  y22  y04]"""

M2U_GRID = """\
[ay30  ay40  ay31  ay41  ay50  ay32]
[ay40  ay50  ay41  ay51  ay60  ay42]
[ay31  ay41  ay32  ay42  ay51  ay33]
[ay41  ay51  ay42  ay52  ay61  ay43]
[ay50  ay60  ay51  ay61  ay70  ay52]
[ay32  ay42  ay33  ay43  ay52  ay34]"""


class TestMonomialVector:
    def test_n2_r1(self):
        assert monomial_vector(2, 1) == [(0, 0), (1, 0), (0, 1)]

    def test_n2_r2(self):
        assert monomial_vector(2, 2) == [(0, 0), (1, 0), (0, 1), (1, 1), (2, 0), (0, 2)]

    def test_n1_r0(self):
        assert monomial_vector(1, 0) == [(0,)]

    def test_length(self):
        assert len(monomial_vector(3, 4)) == 35  # C(7,3)


class TestRiesz:
    def test_constant(self):
        y = MomentSequence.from_point([Fraction(3)], 2)
        assert riesz(y, Polynomial.constant(1, 1)) == 1

    def test_two_terms(self):
        vals = {m: Fraction(0) for m in monomial_vector(2, 2)}
        vals[(1, 0)] = Fraction(2)
        vals[(0, 2)] = Fraction(5)
        vals[(0, 0)] = Fraction(1)
        y = MomentSequence(2, 2, vals)
        f = Polynomial(2, {(1, 0): 3, (0, 2): 1})
        assert riesz(y, f) == 11

    def test_linearity(self):
        rng = random.Random(5)
        y = MomentSequence.from_point([Fraction(1, 2), Fraction(-2, 3)], 4)
        for _ in range(20):
            f = Polynomial(2, {(rng.randint(0, 2), rng.randint(0, 2)):
                               Fraction(rng.randint(-5, 5)) for _ in range(3)})
            g = Polynomial(2, {(rng.randint(0, 2), rng.randint(0, 2)):
                               Fraction(rng.randint(-5, 5)) for _ in range(3)})
            a, b = Fraction(rng.randint(-4, 4)), Fraction(rng.randint(-4, 4))
            assert riesz(y, f.scale(a) + g.scale(b)) == a * riesz(y, f) + b * riesz(y, g)

    def test_degree_overflow(self):
        y = MomentSequence.from_point([1], 2)
        with pytest.raises(ValueError):
            riesz(y, Polynomial(1, {(3,): 1}))


class TestSymbolicMatrices:
    def test_moment_matrix_r1(self):
        assert format_matrix(symbolic_moment_matrix(2, 1)) == M1_GRID

    def test_moment_matrix_r2(self):
        assert format_matrix(symbolic_moment_matrix(2, 2)) == M2_GRID

    def test_localizing_r1(self):
        u = [("a", (0, 0)), (-1, (2, 0)), ("b", (0, 2))]
        assert format_matrix(symbolic_localizing_matrix(2, 1, u)) == M1U_GRID

    def test_localizing_r2(self):
        assert format_matrix(symbolic_localizing_matrix(2, 2, [("a", (3, 0))])) == M2U_GRID

    def test_localizing_with_unit_poly_is_moment(self):
        one = Polynomial.constant(2, 1)
        assert symbolic_localizing_matrix(2, 2, one) == symbolic_moment_matrix(2, 2)

    def test_symmetry(self):
        m = symbolic_localizing_matrix(2, 2, [("a", (1, 0)), (3, (0, 1))])
        for i in range(len(m)):
            for j in range(len(m)):
                assert m[i][j] == m[j][i]


class TestNumericMatrices:
    def test_dirac_rank_one(self):
        pt = [Fraction(2), Fraction(-1, 3)]
        y = MomentSequence.from_point(pt, 4)
        m = moment_matrix(y, 2)
        basis = monomial_vector(2, 2)
        v = [pt[0] ** a * pt[1] ** b for a, b in basis]
        for i in range(len(basis)):
            for j in range(len(basis)):
                assert m[i][j] == v[i] * v[j]
        arr = np.array([[float(x) for x in row] for row in m])
        assert np.linalg.matrix_rank(arr, tol=1e-8) == 1
        assert is_psd(arr)[0]

    def test_atomic_measure_psd(self):
        rng = random.Random(11)
        for _ in range(10):
            pts = [[Fraction(rng.randint(-3, 3), rng.randint(1, 3)) for _ in range(2)]
                   for _ in range(3)]
            wts = [Fraction(rng.randint(1, 5)) for _ in range(3)]
            y = MomentSequence.from_atoms(pts, wts, 6)
            m = np.array([[float(v) for v in row] for row in moment_matrix(y, 2)])
            assert is_psd(m)[0]
            # localizing matrix of a constraint holding on the support stays PSD
            bound = max(float(sum(x * x for x in p)) for p in pts) + 1
            g = Polynomial.constant(2, Fraction(int(bound + 1)))
            g = g - Polynomial(2, {(2, 0): 1, (0, 2): 1})
            loc = np.array([[float(v) for v in row]
                            for row in localizing_matrix(y, g, 2)])
            assert is_psd(loc)[0]

    def test_top_left_is_y0(self):
        y = MomentSequence.from_atoms([[1], [2]], [Fraction(1, 2), Fraction(1, 2)], 2)
        assert moment_matrix(y, 1)[0][0] == y[(0,)] == 1

    def test_missing_moment_rejected(self):
        with pytest.raises(ValueError):
            MomentSequence(1, 2, {(0,): 1, (1,): 1})  # (2,) missing

    def test_insufficient_degree(self):
        y = MomentSequence.from_point([1], 2)
        with pytest.raises(ValueError):
            moment_matrix(y, 2)
        with pytest.raises(ValueError):
            localizing_matrix(y, Polynomial(1, {(1,): 1}), 1)
