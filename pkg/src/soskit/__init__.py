"""Polynomial optimization toolkit: moment/SOS relaxations, symmetry
reduction of invariant SDPs, a dense interior-point solver, and exact
certificate verification."""

from soskit.poly import Monomial, Polynomial, monomial_cmp, monomials_up_to_degree
from soskit.moment import (
    MomentSequence,
    localizing_matrix,
    moment_matrix,
    monomial_vector,
    riesz,
)
from soskit.relax import (
    Certificate,
    PolyProgram,
    add_ball_constraint,
    build_moment_primal,
    build_sos_dual,
    check_sos,
    extract_certificate,
    verify_certificate,
)
from soskit.sdp import SdpProblem, SdpSolution, dual_of, is_psd, solve

__all__ = [
    "Monomial",
    "Polynomial",
    "monomial_cmp",
    "monomials_up_to_degree",
    "MomentSequence",
    "monomial_vector",
    "riesz",
    "moment_matrix",
    "localizing_matrix",
    "PolyProgram",
    "Certificate",
    "add_ball_constraint",
    "build_sos_dual",
    "build_moment_primal",
    "check_sos",
    "extract_certificate",
    "verify_certificate",
    "SdpProblem",
    "SdpSolution",
    "solve",
    "dual_of",
    "is_psd",
]
