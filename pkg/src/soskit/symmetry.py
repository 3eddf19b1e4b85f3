"""Permutation-group machinery for invariant SDPs.

The commutant of a permutation action on Z is spanned by the {0,1}
indicator matrices E_i of the orbits of Z x Z.  Normalizing to
B_i = E_i/sqrt(tr(E_i'E_i)) gives an orthonormal basis whose multiplication
parameters B_iB_j = sum_k lam_{ij}^k B_k define the regular-representation
matrices (L_k)_{ij} = lam_{kj}^i.  A sum over the B basis is PSD exactly
when the corresponding sum over the L basis is, which shrinks an invariant
PSD constraint from |Z| to the number of orbits.

The lam parameters involve square roots of integers; they are kept exact as
sums of rational multiples of square roots of squarefree integers.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from soskit import sdp

GROUP_ENUMERATION_CAP = 10 ** 6


# -- exact arithmetic with square roots ---------------------------------------

def _squarefree(n: int) -> Tuple[int, int]:
    """n = s*s*r with r squarefree; returns (s, r)."""
    if n <= 0:
        raise ValueError("radicand must be positive")
    s, r, m, d = 1, 1, n, 2
    while d * d <= m:
        cnt = 0
        while m % d == 0:
            m //= d
            cnt += 1
        s *= d ** (cnt // 2)
        if cnt % 2:
            r *= d
        d += 1
    if m > 1:
        r *= m
    return s, r


class RadicalSum:
    """Exact value sum_r c_r * sqrt(r) over squarefree integers r."""

    __slots__ = ("terms",)

    def __init__(self, terms: Optional[Dict[int, Fraction]] = None):
        self.terms = {r: c for r, c in (terms or {}).items() if c != 0}

    @staticmethod
    def of(coef, radicand: int = 1) -> "RadicalSum":
        coef = Fraction(coef)
        if coef == 0:
            return RadicalSum()
        s, r = _squarefree(radicand)
        return RadicalSum({r: coef * s})

    def __add__(self, other: "RadicalSum") -> "RadicalSum":
        terms = dict(self.terms)
        for r, c in other.terms.items():
            terms[r] = terms.get(r, Fraction(0)) + c
        return RadicalSum(terms)

    def __sub__(self, other: "RadicalSum") -> "RadicalSum":
        return self + (-other)

    def __neg__(self) -> "RadicalSum":
        return RadicalSum({r: -c for r, c in self.terms.items()})

    def __mul__(self, other) -> "RadicalSum":
        if not isinstance(other, RadicalSum):
            other = RadicalSum.of(other)
        terms: Dict[int, Fraction] = {}
        for r1, c1 in self.terms.items():
            for r2, c2 in other.terms.items():
                s, r = _squarefree(r1 * r2)
                terms[r] = terms.get(r, Fraction(0)) + c1 * c2 * s
        return RadicalSum(terms)

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        if not isinstance(other, RadicalSum):
            other = RadicalSum.of(other)
        return self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def is_zero(self) -> bool:
        return not self.terms

    def __float__(self) -> float:
        return sum(float(c) * float(r) ** 0.5 for r, c in self.terms.items())

    def __repr__(self) -> str:
        if not self.terms:
            return "0"
        return " + ".join(
            f"{c}" if r == 1 else f"{c}*sqrt({r})"
            for r, c in sorted(self.terms.items())
        )


# -- group actions ------------------------------------------------------------

def compose(a: Sequence[int], b: Sequence[int]) -> Tuple[int, ...]:
    """Apply a, then b."""
    return tuple(b[a[i]] for i in range(len(a)))


def inverse(a: Sequence[int]) -> Tuple[int, ...]:
    out = [0] * len(a)
    for i, j in enumerate(a):
        out[j] = i
    return tuple(out)


def perm_matrix(g: Sequence[int]) -> np.ndarray:
    """Permutation matrix with entry (i, j) = 1 iff g maps i to j."""
    n = len(g)
    if sorted(g) != list(range(n)):
        raise ValueError("not a permutation")
    m = np.zeros((n, n))
    for i, j in enumerate(g):
        m[i, j] = 1.0
    return m


@dataclass
class GroupAction:
    """A finite group acting on {0..size-1}, given by generating permutations."""

    size: int
    generators: List[Tuple[int, ...]]

    def __post_init__(self):
        self.generators = [tuple(g) for g in self.generators]
        for g in self.generators:
            if sorted(g) != list(range(self.size)):
                raise ValueError(f"generator {g} is not a permutation of the set")

    def elements(self, cap: int = GROUP_ENUMERATION_CAP) -> List[Tuple[int, ...]]:
        """All group elements by closure over the generators."""
        identity = tuple(range(self.size))
        seen = {identity}
        frontier = [identity]
        while frontier:
            nxt = []
            for a in frontier:
                for g in self.generators:
                    c = compose(a, g)
                    if c not in seen:
                        seen.add(c)
                        if len(seen) > cap:
                            raise ValueError(f"group exceeds enumeration cap {cap}")
                        nxt.append(c)
            frontier = nxt
        return sorted(seen)

    def to_json(self) -> dict:
        return {"size": self.size, "generators": [list(g) for g in self.generators]}

    @staticmethod
    def from_json(data: dict) -> "GroupAction":
        return GroupAction(size=int(data["size"]),
                           generators=[tuple(g) for g in data["generators"]])


def cyclic_action(n: int) -> GroupAction:
    return GroupAction(n, [tuple((i + 1) % n for i in range(n))])


def dihedral_action(n: int) -> GroupAction:
    rot = tuple((i + 1) % n for i in range(n))
    ref = tuple((n - i) % n for i in range(n))
    return GroupAction(n, [rot, ref])


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    d = 2
    while d * d <= n:
        if n % d == 0:
            return False
        d += 1
    return True


def primitive_root(p: int) -> int:
    if not is_prime(p):
        raise ValueError(f"{p} is not prime")
    if p == 2:
        return 1
    for g in range(2, p):
        vals = set()
        x = 1
        for _ in range(p - 1):
            x = x * g % p
            vals.add(x)
        if len(vals) == p - 1:
            return g
    raise RuntimeError("unreachable")


def affine_action(p: int) -> GroupAction:
    """i -> a + b*i mod p with b invertible; generated by the shift and a
    primitive multiplier."""
    g = primitive_root(p)
    shift = tuple((i + 1) % p for i in range(p))
    mult = tuple(g * i % p for i in range(p))
    return GroupAction(p, [shift, mult])


def named_action(name: str) -> GroupAction:
    """Constructors by name: "cyclic n", "dihedral n", "affine p"."""
    parts = name.split()
    if len(parts) != 2:
        raise ValueError(f"expected '<kind> <n>', got {name!r}")
    kind, n = parts[0], int(parts[1])
    if kind == "cyclic":
        return cyclic_action(n)
    if kind == "dihedral":
        return dihedral_action(n)
    if kind == "affine":
        return affine_action(n)
    raise ValueError(f"unknown action kind {kind!r}")


# -- orbit basis ---------------------------------------------------------------

@dataclass
class OrbitBasis:
    size: int
    orbits: List[List[Tuple[int, int]]]
    sizes: List[int]
    transpose_of: List[int]
    lam: Dict[Tuple[int, int], Dict[int, RadicalSum]]
    L_float: List[np.ndarray]

    @property
    def d(self) -> int:
        return len(self.orbits)

    def E(self, i: int) -> np.ndarray:
        m = np.zeros((self.size, self.size))
        for r, c in self.orbits[i]:
            m[r, c] = 1.0
        return m

    def B(self, i: int) -> np.ndarray:
        return self.E(i) / float(self.sizes[i]) ** 0.5

    def L_exact(self, k: int) -> List[List[RadicalSum]]:
        d = self.d
        return [[self.lam[(k, j)].get(i, RadicalSum()) for j in range(d)]
                for i in range(d)]

    def coordinates(self, X: np.ndarray) -> np.ndarray:
        """Coordinates of the commutant projection of X over the B basis."""
        out = np.zeros(self.d)
        for i, orbit in enumerate(self.orbits):
            t = sum(X[r, c] for r, c in orbit)
            out[i] = t / float(self.sizes[i]) ** 0.5
        return out

    def sym_groups(self) -> List[Tuple[int, ...]]:
        """Transpose-paired orbit indices: (j,) when E_j is symmetric, else
        (j, j*).  Symmetric members of the commutant are exactly the sums
        with equal coordinates inside each group."""
        out = []
        for i, it in enumerate(self.transpose_of):
            if it == i:
                out.append((i,))
            elif it > i:
                out.append((i, it))
        return out

    def lift(self, x: Sequence[float]) -> np.ndarray:
        """X = sum_i x_i B_i."""
        X = np.zeros((self.size, self.size))
        for i, orbit in enumerate(self.orbits):
            v = float(x[i]) / float(self.sizes[i]) ** 0.5
            for r, c in orbit:
                X[r, c] += v
        return X


def _pair_orbits(action: GroupAction) -> List[List[Tuple[int, int]]]:
    """Orbits of Z x Z under (i, j) -> (g(i), g(j)), by union-find over
    generator images only."""
    n = action.size
    parent = list(range(n * n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(a, b):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)

    for g in action.generators:
        for i in range(n):
            gi = g[i]
            for j in range(n):
                union(i * n + j, gi * n + g[j])
    groups: Dict[int, List[Tuple[int, int]]] = {}
    for i in range(n):
        for j in range(n):
            groups.setdefault(find(i * n + j), []).append((i, j))
    return [groups[k] for k in sorted(groups)]


def commutant_basis(action: GroupAction) -> OrbitBasis:
    """Orbit basis of the commutant, with exact multiplication parameters
    lam_{ij}^k = c_{ij}^k * sqrt(t_k/(t_i t_j)) where c counts walks
    E_i E_j = sum_k c_{ij}^k E_k."""
    orbits = _pair_orbits(action)
    n = action.size
    d = len(orbits)
    sizes = [len(o) for o in orbits]
    orbit_of = np.full((n, n), -1, dtype=int)
    for k, orbit in enumerate(orbits):
        for r, c in orbit:
            orbit_of[r, c] = k
    transpose_of = [int(orbit_of[orbits[i][0][1], orbits[i][0][0]]) for i in range(d)]

    E = [np.zeros((n, n), dtype=np.int64) for _ in range(d)]
    for k, orbit in enumerate(orbits):
        for r, c in orbit:
            E[k][r, c] = 1

    lam: Dict[Tuple[int, int], Dict[int, RadicalSum]] = {}
    counts: Dict[Tuple[int, int], Dict[int, int]] = {}
    for i in range(d):
        for j in range(d):
            prod = E[i] @ E[j]
            cs: Dict[int, int] = {}
            for k in range(d):
                r, c = orbits[k][0]
                v = int(prod[r, c])
                if v:
                    cs[k] = v
            # the product must be orbit-constant: reconstruct and compare
            back = np.zeros((n, n), dtype=np.int64)
            for k, v in cs.items():
                back += v * E[k]
            if not np.array_equal(back, prod):
                raise AssertionError("commutant product not orbit-constant")
            counts[(i, j)] = cs
            lam[(i, j)] = {
                k: RadicalSum.of(Fraction(v, sizes[i] * sizes[j]),
                                 sizes[i] * sizes[j] * sizes[k])
                for k, v in cs.items()
            }

    L_float = []
    for k in range(d):
        mat = np.zeros((d, d))
        for i in range(d):
            for j in range(d):
                v = lam[(k, j)].get(i)
                if v is not None:
                    mat[i, j] = float(v)
        L_float.append(mat)

    return OrbitBasis(size=n, orbits=orbits, sizes=sizes,
                      transpose_of=transpose_of, lam=lam, L_float=L_float)


def phi_check(basis: OrbitBasis, x: Sequence, y: Sequence) -> bool:
    """Verify the algebra homomorphism phi(XY) = phi(X)phi(Y) exactly for
    X = sum x_i B_i, Y = sum y_j B_j with rational coordinates."""
    d = basis.d
    x = [Fraction(v) for v in x]
    y = [Fraction(v) for v in y]
    z = [RadicalSum() for _ in range(d)]
    for i in range(d):
        if x[i] == 0:
            continue
        for j in range(d):
            if y[j] == 0:
                continue
            for k, l in basis.lam[(i, j)].items():
                z[k] = z[k] + (x[i] * y[j]) * l

    Ls = [basis.L_exact(k) for k in range(d)]
    lhs = [[RadicalSum() for _ in range(d)] for _ in range(d)]
    for k in range(d):
        if z[k].is_zero():
            continue
        for a in range(d):
            for b in range(d):
                lhs[a][b] = lhs[a][b] + z[k] * Ls[k][a][b]

    phix = [[RadicalSum() for _ in range(d)] for _ in range(d)]
    phiy = [[RadicalSum() for _ in range(d)] for _ in range(d)]
    for k in range(d):
        if x[k] != 0:
            for a in range(d):
                for b in range(d):
                    phix[a][b] = phix[a][b] + x[k] * Ls[k][a][b]
        if y[k] != 0:
            for a in range(d):
                for b in range(d):
                    phiy[a][b] = phiy[a][b] + y[k] * Ls[k][a][b]
    rhs = [[RadicalSum() for _ in range(d)] for _ in range(d)]
    for a in range(d):
        for c in range(d):
            if phix[a][c].is_zero():
                continue
            for b in range(d):
                rhs[a][b] = rhs[a][b] + phix[a][c] * phiy[c][b]

    return all(lhs[a][b] == rhs[a][b] for a in range(d) for b in range(d))


def group_average(action: GroupAction, X: np.ndarray,
                  basis: Optional[OrbitBasis] = None) -> np.ndarray:
    """Orthogonal projection of X onto the commutant.

    Algebraically identical to averaging M_g X M_g' over the group, but
    computed as sum_i (tr(E_i'X)/t_i) E_i so the group is never enumerated.
    """
    X = np.asarray(X, dtype=float)
    if X.shape != (action.size, action.size):
        raise ValueError("matrix size does not match the action")
    if basis is None:
        basis = commutant_basis(action)
    out = np.zeros_like(X)
    for orbit in basis.orbits:
        t = sum(X[r, c] for r, c in orbit) / len(orbit)
        for r, c in orbit:
            out[r, c] = t
    return out


# -- reduction of invariant SDPs ------------------------------------------------

@dataclass
class ReducedSdp:
    problem: sdp.SdpProblem
    basis: OrbitBasis
    groups: List[Tuple[int, ...]]   # orbit indices behind each reduced variable
    row_map: List[int]              # reduced row -> a representative original row

    def lift(self, x: Sequence[float]) -> np.ndarray:
        full = np.zeros(self.basis.d)
        for g, v in zip(self.groups, x):
            for j in g:
                full[j] = v
        return self.basis.lift(full)


def reduce_sdp(p: sdp.SdpProblem, action: GroupAction,
               basis: Optional[OrbitBasis] = None,
               tol: float = 1e-10) -> ReducedSdp:
    """Reduce a single-block invariant SDP to orbit coordinates.

    The objective must be fixed by the action; the constraint family must be
    permuted into itself (rows need not be individually fixed: orbit-
    equivalent rows collapse to one).  Transpose-paired orbits share one
    variable, which keeps the lifted matrix symmetric, so the reduced
    problem is  opt sum x_g <C, B_g> : sum x_g L_g >= 0  plus the collapsed
    rows, with B_g and L_g summed over each pairing group.
    """
    if len(p.block_dims) != 1 or p.n_free or p.lmis:
        raise ValueError("reduce_sdp expects a single PSD block and no free scalars")
    n = p.block_dims[0]
    if action.size != n:
        raise ValueError("action size does not match the block dimension")
    if basis is None:
        basis = commutant_basis(action)

    C = p.C[0]
    scale = 1.0 + float(np.max(np.abs(C)))
    for gi, g in enumerate(action.generators):
        M = perm_matrix(g)
        dev = M @ C @ M.T - C
        worst = np.unravel_index(np.argmax(np.abs(dev)), dev.shape)
        if abs(dev[worst]) > tol * scale:
            raise ValueError(
                f"objective not invariant: generator {gi} moves entry "
                f"{tuple(int(v) for v in worst)} by {dev[worst]:.3e}")

    def row_key(a: np.ndarray, rhs: float, rel: str):
        return (rel, round(rhs, 10), tuple(np.round(a, 10).flatten()))

    keys = {}
    for k, r in enumerate(p.rows):
        keys.setdefault(row_key(r.blocks.get(0, np.zeros((n, n))), r.rhs, r.rel), []).append(k)
    for gi, g in enumerate(action.generators):
        M = perm_matrix(g)
        for k, r in enumerate(p.rows):
            a = r.blocks.get(0, np.zeros((n, n)))
            moved = row_key(M @ a @ M.T, r.rhs, r.rel)
            if moved not in keys:
                raise ValueError(
                    f"constraints not invariant: generator {gi} maps row {k} "
                    f"({r.label or 'unlabeled'}) outside the family")

    groups = basis.sym_groups()
    sqrt_t = [float(t) ** 0.5 for t in basis.sizes]

    def reduced_coeff(a: np.ndarray, group) -> float:
        return sum(float(np.sum(a * basis.E(j))) / sqrt_t[j] for j in group)

    obj = np.array([reduced_coeff(C, g) for g in groups])

    rows: List[sdp.LinearRow] = []
    row_map: List[int] = []
    seen = set()
    for k, r in enumerate(p.rows):
        a = r.blocks.get(0, np.zeros((n, n)))
        coeffs = {gi: reduced_coeff(a, g) for gi, g in enumerate(groups)}
        coeffs = {i: c for i, c in coeffs.items() if abs(c) > 1e-14}
        key = (r.rel, round(r.rhs, 10),
               tuple(sorted((i, round(c, 10)) for i, c in coeffs.items())))
        if key in seen:
            continue
        seen.add(key)
        rows.append(sdp.LinearRow(free=coeffs, rhs=r.rhs, rel=r.rel, label=r.label))
        row_map.append(k)

    lmi = sdp.MatrixIneq(
        dim=basis.d,
        const=np.zeros((basis.d, basis.d)),
        coeffs={gi: sum(basis.L_float[j] for j in g) for gi, g in enumerate(groups)},
        label="orbit_psd",
    )
    reduced = sdp.SdpProblem(
        n_free=len(groups),
        free_obj=obj,
        rows=rows,
        lmis=[lmi],
        sense=p.sense,
        free_names=[f"x{g}" for g in groups],
    )
    return ReducedSdp(problem=reduced, basis=basis, groups=groups, row_map=row_map)
