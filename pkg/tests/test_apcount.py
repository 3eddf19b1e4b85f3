import random
from fractions import Fraction
from itertools import combinations
from math import comb

import pytest

from soskit import sdp
from soskit.apcount import (
    ap_count_formula,
    ap_orbits,
    brute_force_R,
    brute_force_W,
    build_density_relaxation,
    build_mono_relaxation,
    cyclic_bound,
    density_certificate,
    density_lambda,
    density_program,
    density_relaxation_program,
    enumerate_aps,
    mono_ap_count,
    mono_program,
    same_color_indicator,
)
from soskit.relax import extract_certificate, float_identity_tol, verify_certificate
from soskit.symmetry import affine_action


def is_ap_by_midpoint(t, n):
    """Independent oracle: some element is the midpoint of the other two."""
    a, b, c = t
    return any((x + z) % n == (2 * y) % n
               for x, y, z in ((a, b, c), (b, a, c), (a, c, b)))


class TestEnumerate:
    def test_z5_all_three_subsets(self):
        aps = enumerate_aps(5)
        assert len(aps) == 10 == comb(5, 3)
        for t in combinations(range(5), 3):
            assert is_ap_by_midpoint(t, 5)
            assert t in aps

    def test_z4_wraparound(self):
        aps = enumerate_aps(4)
        assert (0, 1, 2) in aps
        # {3,0,1} is the progression 3, 0, 1 with step 1, so {0,1,3} counts
        assert (0, 1, 3) in aps
        assert len(aps) == ap_count_formula(4) == 4

    def test_z3_single(self):
        assert enumerate_aps(3).triples == ((0, 1, 2),)

    def test_matches_midpoint_oracle(self):
        for n in (5, 7, 8, 11):
            aps = set(enumerate_aps(n).triples)
            for t in combinations(range(n), 3):
                assert (t in aps) == is_ap_by_midpoint(t, n)

    def test_count_formula_cross_check(self):
        # the closed-form count matches enumeration away from multiples of 3
        for n in (4, 5, 7, 8, 10, 11, 13, 14):
            assert ap_count_formula(n) == len(enumerate_aps(n))


class TestOrbits:
    def test_single_orbit_prime(self):
        assert len(ap_orbits(5)) == 1
        assert len(ap_orbits(7)) == 1

    def test_orbit_stabilizer(self):
        for p in (5, 7):
            group = affine_action(p).elements()
            assert len(group) == p * (p - 1)
            for orbit in ap_orbits(p):
                rep = set(orbit[0])
                stab = sum(1 for g in group
                           if {g[v] for v in rep} == rep)
                assert len(orbit) * stab == len(group)

    def test_n3(self):
        assert ap_orbits(3) == [[(0, 1, 2)]]

    def test_orbit_sizes_divide_group_order(self):
        for p in (5, 7, 11, 13):
            for orbit in ap_orbits(p):
                assert (p * (p - 1)) % len(orbit) == 0


class TestMonoCount:
    def test_indicator_values(self):
        assert same_color_indicator(1, 1, -1) == 0
        assert same_color_indicator(-1, -1, -1) == 1

    def test_all_ones(self):
        assert mono_ap_count([1] * 5) == 10

    def test_three_two_split(self):
        assert mono_ap_count([1, 1, 1, -1, -1]) == 1

    def test_formula_equals_direct_count(self):
        rng = random.Random(123)
        for _ in range(1000):
            n = rng.randint(3, 10)
            coloring = [rng.choice((-1, 1)) for _ in range(n)]
            direct = sum(1 for a, b, c in enumerate_aps(n)
                         if coloring[a] == coloring[b] == coloring[c])
            assert mono_ap_count(coloring) == direct

    def test_rejects_bad_values(self):
        with pytest.raises(ValueError):
            mono_ap_count([1, 0, -1])


class TestBruteForceR:
    def test_known_values(self):
        assert brute_force_R(5) == 1    # table row for 5 mod 24 is exact
        assert brute_force_R(8) == 0    # table row for 8 mod 24
        assert brute_force_R(3) == 0

    def test_bracket_small(self):
        for n in range(3, 13):
            low, high = cyclic_bound(n)
            r = brute_force_R(n)
            assert float(low) - 1e-9 <= r <= float(high) + 1e-9


class TestCyclicBound:
    def test_row_12(self):
        assert cyclic_bound(12) == (Fraction(-2), Fraction(16))

    def test_row_24(self):
        assert cyclic_bound(24) == (Fraction(32), Fraction(32))

    def test_row_10(self):
        assert cyclic_bound(10) == (Fraction(4), Fraction(4))

    def test_row_5(self):
        assert cyclic_bound(5) == (Fraction(1), Fraction(1))


class TestDensityLambda:
    def test_full_set(self):
        assert density_lambda(5, 5) == 10 == len(enumerate_aps(5))

    def test_p5_d4(self):
        assert density_lambda(5, 4) == 3
        assert brute_force_W(5, 4) == 4  # true minimum is above the bound

    def test_single_point(self):
        assert density_lambda(5, 1) == 0

    def test_below_brute_force(self):
        for p in (5, 7):
            for D in range(p + 1):
                assert density_lambda(p, D) <= brute_force_W(p, D)

    def test_rejects_bad_args(self):
        with pytest.raises(ValueError):
            density_lambda(6, 2)
        with pytest.raises(ValueError):
            density_lambda(5, 9)


class TestBruteForceW:
    def test_values(self):
        assert brute_force_W(5, 3) == 1
        assert brute_force_W(5, 5) == 10
        assert brute_force_W(7, 2) == 0


class TestDensityCertificate:
    def test_p5_d4_exact(self):
        cert = density_certificate(5, 4)
        assert cert.lam == 3
        v = verify_certificate(density_program(5, 4), cert, mode="exact")
        assert v.identity_residual.is_zero()
        assert v.psd_ok

    def test_p7_all_d(self):
        for D in range(8):
            v = verify_certificate(density_program(7, D), density_certificate(7, D),
                                   mode="exact")
            assert v.ok(), f"D={D}"

    def test_p5_d0_degenerate(self):
        cert = density_certificate(5, 0)
        assert cert.lam == 0
        v = verify_certificate(density_program(5, 0), cert, mode="exact")
        assert v.ok()


class TestDensityRelaxation:
    def test_p5_d4_bracketed(self):
        prob, _ = build_density_relaxation(5, 4)
        sol = sdp.solve(prob)
        assert sol.status == sdp.OPTIMAL
        lam = float(density_lambda(5, 4))
        assert lam - 1e-6 <= sol.primal_obj <= brute_force_W(5, 4) + 1e-6

    def test_p7_d0_zero(self):
        prob, _ = build_density_relaxation(7, 0, use_symmetry=True)
        sol = sdp.solve(prob)
        assert abs(sol.primal_obj) < 1e-6

    def test_p7_sym_matches_unsym(self):
        from conftest import conclusive
        for D in range(8):
            u, _ = build_density_relaxation(7, D)
            s, _ = build_density_relaxation(7, D, use_symmetry=True)
            su, ss = sdp.solve(u), sdp.solve(s)
            assert conclusive(su) and conclusive(ss), f"D={D}"
            assert abs(su.primal_obj - ss.primal_obj) <= 1e-6 * (1 + abs(su.primal_obj)), f"D={D}"

    def test_symmetry_needs_prime(self):
        with pytest.raises(ValueError):
            build_density_relaxation(6, 2, use_symmetry=True)

    def test_extracted_certificate_p5_full(self):
        prob, info = build_density_relaxation(5, 5)
        sol = sdp.solve(prob)
        assert sol.status == sdp.OPTIMAL
        assert abs(sol.primal_obj - 10.0) < 1e-5   # equals the full AP count
        prog = density_relaxation_program(5, 5)
        cert = extract_certificate(sol, info, prog)
        assert abs(float(cert.lam) - 10.0) < 1e-5
        v = verify_certificate(prog, cert, mode=cert.mode)
        tol = 0.0 if cert.mode == "exact" else float_identity_tol(prog.objective)
        assert v.ok(tol)


class TestMonoRelaxation:
    def test_n5_bound_below_brute(self):
        prob, _ = build_mono_relaxation(5)
        sol = sdp.solve(prob)
        assert sol.status == sdp.OPTIMAL
        assert sol.primal_obj <= brute_force_R(5) + 1e-6  # only the bracket is promised
        # analytic value of this relaxation: on the +-1 cube the objective is
        # 5/8 + 3/8*(sum x_i)^2, and the degree-2 dual attains the constant
        assert abs(sol.primal_obj - 0.625) < 1e-6

    def test_n3(self):
        prob, _ = build_mono_relaxation(3)
        sol = sdp.solve(prob)
        assert sol.primal_obj <= 0 + 1e-6
        assert float(mono_program(3).objective.coefficient_of((0, 0, 0))) == 0.25

    def test_n8(self):
        prob, _ = build_mono_relaxation(8, use_symmetry=True)
        sol = sdp.solve(prob)
        assert sol.primal_obj <= brute_force_R(8) + 1e-6 == 1e-6

    def test_sym_matches_unsym(self):
        for n in (3, 5, 6, 8):
            u, _ = build_mono_relaxation(n)
            s, _ = build_mono_relaxation(n, use_symmetry=True)
            a, b = sdp.solve(u), sdp.solve(s)
            assert abs(a.primal_obj - b.primal_obj) < 1e-6, f"n={n}"
