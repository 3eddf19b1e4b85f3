import random
from fractions import Fraction

import numpy as np
import pytest

from conftest import grid_minimum
from soskit import sdp
from soskit.poly import EXACT, FLOAT, Polynomial, motzkin
from soskit.relax import (
    Certificate,
    PolyProgram,
    add_ball_constraint,
    build_moment_primal,
    build_sos_dual,
    check_order,
    check_sos,
    extract_certificate,
    float_identity_tol,
    rationalize_certificate,
    verify_certificate,
)


def disk_program():
    f = Polynomial(2, {(2, 0): 1, (0, 2): 1})
    g = Polynomial(2, {(0, 0): 1, (2, 0): -1, (0, 2): -1})
    return PolyProgram(2, f, ineqs=(g,))


class TestBuildSosDual:
    def test_square_unconstrained(self):
        p = PolyProgram(1, Polynomial(1, {(2,): 1}))
        prob, info = build_sos_dual(p, 2)
        sol = sdp.solve(prob)
        assert sol.status == sdp.OPTIMAL
        assert abs(sol.primal_obj) < 1e-7
        cert = extract_certificate(sol, info, p)
        v = verify_certificate(p, cert, mode=cert.mode)
        tol = 0.0 if cert.mode == EXACT else float_identity_tol(p.objective)
        assert v.ok(tol)
        # one valid Gram for x^2 over (1, x) is [[0,0],[0,1]]
        q = np.array(cert.gram[0], dtype=float)
        assert abs(q[1, 1] - 1.0) < 1e-6

    def test_motzkin_sos_program_infeasible(self):
        p = PolyProgram(2, motzkin())
        prob, _ = build_sos_dual(p, 6)
        sol = sdp.solve(prob, max_iter=60)
        assert sol.status != sdp.OPTIMAL  # no value of the shift makes it SOS

    def test_disk_optimum_zero(self):
        p = disk_program()
        prob, _ = build_sos_dual(p, 2)
        sol = sdp.solve(prob)
        assert sol.status == sdp.OPTIMAL
        gmin = grid_minimum(p, 81)
        assert abs(sol.primal_obj) < 1e-6
        assert sol.primal_obj <= gmin + 1e-6

    def test_order_too_small(self):
        with pytest.raises(ValueError):
            build_sos_dual(PolyProgram(1, Polynomial(1, {(4,): 1})), 2)
        with pytest.raises(ValueError):
            check_order(disk_program(), 1)


class TestBuildMomentPrimal:
    def test_disk_dirac_at_origin(self):
        p = disk_program()
        prob, info = build_moment_primal(p, 2)
        sol = sdp.solve(prob)
        assert sol.status == sdp.OPTIMAL
        assert abs(sol.primal_obj) < 1e-6
        # the Dirac moment vector at the origin is feasible with objective 0
        y = np.zeros(prob.n_free)
        y[info.moment_index[(0, 0)]] = 1.0
        rep = sdp.check_feasible(prob, [], y)
        assert rep.feasible(1e-12)
        assert rep.objective == 0.0

    def test_interval_minimum(self):
        p = PolyProgram(1, Polynomial(1, {(1,): 1}),
                        ineqs=(Polynomial(1, {(1,): 1, (0,): -1}),
                               Polynomial(1, {(0,): 2, (1,): -1})))
        prob, _ = build_moment_primal(p, 2)
        sol = sdp.solve(prob)
        gmin = grid_minimum(p, 601, box=2.5)
        assert abs(sol.primal_obj - 1.0) < 1e-6
        assert sol.primal_obj <= gmin + 1e-6

    def test_constant_shift(self):
        p = disk_program()
        shifted = PolyProgram(2, p.objective + Polynomial.constant(2, 5), p.ineqs)
        a = sdp.solve(build_moment_primal(p, 2)[0]).primal_obj
        b = sdp.solve(build_moment_primal(shifted, 2)[0]).primal_obj
        assert abs((b - a) - 5.0) < 1e-6

    def test_returned_moment_vector_is_feasible(self):
        # the solution mapping must hand back a usable moment vector
        p = PolyProgram(1, Polynomial(1, {(1,): 1}),
                        ineqs=(Polynomial(1, {(1,): 1, (0,): -1}),
                               Polynomial(1, {(0,): 2, (1,): -1})))
        prob, info = build_moment_primal(p, 2)
        sol = sdp.solve(prob)
        rep = sdp.check_feasible(prob, [], sol.free)
        assert rep.max_violation() < 1e-6
        assert abs(rep.objective - sol.primal_obj) < 1e-6
        assert abs(sol.free[info.moment_index[(1,)]] - 1.0) < 1e-5  # y_x at the optimum


class TestBallConstraint:
    def test_appends_ball(self):
        p = PolyProgram(2, Polynomial(2, {(1, 0): 1}))
        q = add_ball_constraint(p, 1)
        assert len(q.ineqs) == 1
        assert q.ineqs[0] == Polynomial(2, {(0, 0): 1, (2, 0): -1, (0, 2): -1})

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            add_ball_constraint(disk_program(), 0)

    def test_two_balls_value_unchanged(self):
        p = PolyProgram(2, Polynomial(2, {(1, 0): 1, (0, 1): 1}))
        one = add_ball_constraint(p, 1)
        two = add_ball_constraint(one, 4)
        assert len(two.ineqs) == 2
        a = sdp.solve(build_sos_dual(one, 2)[0]).primal_obj
        b = sdp.solve(build_sos_dual(two, 2)[0]).primal_obj
        assert abs(a - b) < 1e-6

    def test_ball_redundant_for_01_program(self):
        from soskit.apcount import density_relaxation_program
        p = density_relaxation_program(5, 2)
        with_ball = add_ball_constraint(p, 5)
        a = sdp.solve(build_sos_dual(p, 3, eq_mult_degrees=[0] * 5)[0]).primal_obj
        b = sdp.solve(build_sos_dual(with_ball, 3, eq_mult_degrees=[0] * 5)[0]).primal_obj
        assert abs(a - b) < 1e-5


class TestCheckSos:
    def test_perfect_square(self):
        r = check_sos(Polynomial(1, {(2,): 1, (1,): 2, (0,): 1}), 1)
        assert r.status == "feasible"
        q = np.array(r.certificate.gram[0], dtype=float)
        assert np.allclose(q, [[1.0, 1.0], [1.0, 1.0]], atol=1e-5)

    def test_motzkin_not_sos(self):
        r = check_sos(motzkin(), 3)
        assert r.status == "infeasible"
        assert r.margin > 1e-3

    def test_negative_somewhere(self):
        r = check_sos(Polynomial(1, {(2,): 1, (0,): -1}), 1)
        assert r.status == "infeasible"

    def test_odd_degree(self):
        r = check_sos(Polynomial(1, {(3,): 1}), 2)
        assert r.status == "infeasible"

    def test_feasible_implies_nonnegative_sampled(self):
        rng = random.Random(12)
        f1 = Polynomial(2, {(1, 0): 1, (0, 1): -2, (0, 0): 1})
        f2 = Polynomial(2, {(2, 0): 1, (1, 1): 1})
        f = f1 * f1 + f2 * f2
        r = check_sos(f, 2)
        assert r.status == "feasible"
        ff = f.to_float()
        for _ in range(1000):
            x = [rng.uniform(-3, 3), rng.uniform(-3, 3)]
            assert ff.evaluate(x) >= -1e-9


class TestCertificates:
    def test_disk_certificate_verifies(self):
        p = disk_program()
        prob, info = build_sos_dual(p, 2)
        sol = sdp.solve(prob)
        cert = extract_certificate(sol, info, p)
        v = verify_certificate(p, cert, mode=cert.mode)
        tol = 0.0 if cert.mode == EXACT else float_identity_tol(p.objective)
        assert v.ok(tol)
        assert abs(float(cert.lam)) < 1e-6
        # certified bound holds at feasible samples
        rng = random.Random(1)
        f = p.objective.to_float()
        hits = 0
        while hits < 1000:
            x = [rng.uniform(-1, 1), rng.uniform(-1, 1)]
            if x[0] ** 2 + x[1] ** 2 <= 1:
                hits += 1
                assert f.evaluate(x) >= float(cert.lam) - 1e-9

    def test_constant_objective(self):
        p = PolyProgram(1, Polynomial.constant(1, 1))
        prob, info = build_sos_dual(p, 2)
        sol = sdp.solve(prob)
        cert = extract_certificate(sol, info, p)
        assert abs(float(cert.lam) - 1.0) < 1e-7
        for q in cert.gram:
            assert np.max(np.abs(np.array(q, dtype=float))) < 1e-6

    def test_corrupted_gram_reported(self):
        p = disk_program()
        prob, info = build_sos_dual(p, 2)
        cert = extract_certificate(sdp.solve(prob), info, p, rationalize=False)
        cert.gram[0] = np.array(cert.gram[0])
        cert.gram[0][0, 0] += 0.5
        v = verify_certificate(p, cert, mode=FLOAT)
        assert not v.ok(float_identity_tol(p.objective))
        assert abs(float(v.identity_residual.coefficient_of((0, 0)))) > 0.4

    def test_rationalize_caps_denominator(self):
        cert = Certificate(lam=1 / 3, gram=[np.array([[1 / 3]])],
                           eq_multipliers=[], orders=[0], mode=FLOAT)
        exact = rationalize_certificate(cert)
        assert exact.lam == Fraction(1, 3)
        assert exact.gram[0][0][0] == Fraction(1, 3)

    def test_verify_rejects_wrong_shapes(self):
        p = disk_program()
        cert = Certificate(lam=Fraction(0), gram=[[[Fraction(0)]]],
                           eq_multipliers=[], orders=[0], mode=EXACT)
        with pytest.raises(ValueError):
            verify_certificate(p, cert, mode=EXACT)  # missing the sigma_1 Gram

    def test_exact_mode_requires_rational(self):
        p = PolyProgram(1, Polynomial(1, {(2,): 1}))
        cert = Certificate(lam=0.0, gram=[np.zeros((2, 2))], eq_multipliers=[],
                           orders=[1], mode=FLOAT)
        with pytest.raises(ValueError):
            verify_certificate(p, cert, mode=EXACT)

    def test_certificate_json_round_trip(self):
        p = disk_program()
        prob, info = build_sos_dual(p, 2)
        cert = extract_certificate(sdp.solve(prob), info, p)
        back = Certificate.from_json(cert.to_json(), p.n)
        assert back.mode == cert.mode
        assert back.orders == cert.orders
        v = verify_certificate(p, back, mode=back.mode)
        tol = 0.0 if back.mode == EXACT else float_identity_tol(p.objective)
        assert v.ok(tol)


class TestHierarchySpot:
    def test_monotone_and_bracketed(self, corpus):
        for entry in corpus[:3]:
            gmin = grid_minimum(entry.program, entry.grid_points)
            prev = None
            for s in entry.orders:
                prob, _ = build_sos_dual(entry.program, s)
                sol = sdp.solve(prob)
                assert sol.status == sdp.OPTIMAL, entry.name
                assert sol.primal_obj <= gmin + 1e-6, entry.name
                if prev is not None:
                    assert sol.primal_obj >= prev - 1e-6, entry.name
                prev = sol.primal_obj

    def test_weak_duality_across_pair(self, corpus):
        for entry in corpus[:3]:
            s = entry.orders[0]
            sos = sdp.solve(build_sos_dual(entry.program, s)[0])
            mom = sdp.solve(build_moment_primal(entry.program, s)[0])
            assert mom.primal_obj >= sos.primal_obj - 1e-6, entry.name
