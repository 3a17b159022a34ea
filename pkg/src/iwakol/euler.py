"""Synthetic Euler systems over finite quotients.

The cohomology stand-in is the free module of rank rho over R[H_n]; its
virtue is that every norm relation can be checked exactly, coefficient by
coefficient, with no transcendence hiding anywhere. Classes are generated
multiplicatively: the class at level n is the base class hit by the Euler
factors of the primes dividing n, evaluated at inverse Frobenius. The
corestriction relation then holds on the nose, because corestriction is a
ring map on group coordinates and drops exactly the component of each
Frobenius at its own prime.

Two flavors circulate: the direct one, with factors P_ell, and the dual
one with P*_ell (coefficients scaled by ell^{-k}). The conversion from a
dual-flavor system z to a direct-flavor system c sums over all proper
divisors, the base level included, with brackets

    B_{ell,d} = (P_ell - P*_ell)(Frob_ell^{-1} at H_d) / (ell - 1),

each coefficient divisible exactly because a_k - a_k ell^{-k} carries the
integer factor (ell^k - 1)/(ell - 1). Restricting the summand from H_d to
H_n also multiplies in the missing norms, which is what makes the
converted classes satisfy the direct relation.
"""

from __future__ import annotations

import itertools

from .galois import (
    DeformationData,
    GroupRing,
    GroupRingElem,
    SquarefreeLevel,
    cor_map,
    dlog,
    dual_euler_poly,
    enumerate_levels,
    eval_poly_at_group,
    euler_poly,
    frobenius,
    res_map,
)
from .coeff import gamma_exponent, pr_unit
from .lam import QuotientRing


class MockCohomology:
    """Free rank-rho modules over R[H_n] for all levels, with the maps.

    Vectors are lists of group ring elements of length rho. The module
    maps between levels act componentwise.
    """

    def __init__(self, ring: QuotientRing, rho: int = 1):
        self.ring = ring
        self.rho = rho
        self._group_rings: dict = {}

    def group_ring(self, level: SquarefreeLevel) -> GroupRing:
        gr = self._group_rings.get(level.primes)
        if gr is None:
            gr = GroupRing(self.ring, level)
            self._group_rings[level.primes] = gr
        return gr

    def embed_base(self, level: SquarefreeLevel, base) -> list:
        """Constant lift of ring elements to level n (identity support)."""
        gr = self.group_ring(level)
        return [gr.from_ring(b) for b in base]

    def res(self, frm: SquarefreeLevel, to: SquarefreeLevel, vec):
        f = res_map(self.group_ring(frm), self.group_ring(to))
        return [f(v) for v in vec]

    def cor(self, frm: SquarefreeLevel, to: SquarefreeLevel, vec):
        f = cor_map(self.group_ring(frm), self.group_ring(to))
        return [f(v) for v in vec]

    def scale_vec(self, z: GroupRingElem, vec):
        return [z * v for v in vec]

    def vec_eq(self, a, b) -> bool:
        return all(x == y for x, y in zip(a, b))

    def vec_sub(self, a, b):
        return [x - y for x, y in zip(a, b)]

    def is_zero_vec(self, vec) -> bool:
        return all(v.is_zero() for v in vec)


def model_frobenius(gr: GroupRing, ell: int, own: int = 0,
                    inverse: bool = False) -> GroupRingElem:
    """Frobenius at ell with a chosen component at ell itself.

    The restriction of Frob_ell to a level coprime to ell is canonical
    (discrete logs at the other primes), but at levels divisible by ell
    no canonical choice exists, ell being ramified there. The generator
    of a synthetic system picks the own component freely; the norm
    relations never see it because corestriction projects it away.
    """
    sign = -1 if inverse else 1
    exps = []
    for q in gr.level.primes:
        e = own if q == ell else dlog(q, ell)
        exps.append((sign * e) % (q - 1))
    return gr.group_elem(tuple(exps))


class SyntheticEulerSystem:
    """A family of classes indexed by squarefree levels."""

    def __init__(self, data: DeformationData, cohom: MockCohomology,
                 classes: dict, flavor: str, own_exponents: dict):
        self.data = data
        self.cohom = cohom
        self.ring = cohom.ring
        self.classes = classes  # primes tuple -> vector
        self.flavor = flavor
        self.own_exponents = dict(own_exponents)

    def levels(self):
        return sorted((SquarefreeLevel(pr) for pr in self.classes),
                      key=lambda lv: lv.n)

    def cls(self, level: SquarefreeLevel):
        return self.classes[level.primes]

    def euler_coeffs(self, ell: int):
        if self.flavor == "dual":
            return dual_euler_poly(self.data, self.ring, ell)
        return euler_poly(self.data, self.ring, ell)


def generate_multiplicative(data: DeformationData, ring: QuotientRing,
                            primes, base, rho: int | None = None,
                            flavor: str = "direct", own_exponents=None,
                            max_primes=None) -> SyntheticEulerSystem:
    """The multiplicative model system over all levels from these primes.

    base is a list of ring elements (the class at level one). The class
    at level n is prod_ell P_ell(Frob_ell^{-1}) applied to the constant
    lift of the base, Frobenius carrying the seeded own component at its
    own prime. Seeding matters: with the own component trivial, a prime
    level ell admissible for the quotient would get the class P_ell(1)
    times the base, which is zero, and every derived invariant would
    collapse with it. The default seeds every own component with 1.
    """
    if flavor not in ("direct", "dual"):
        raise ValueError("flavor must be direct or dual")
    base = list(base)
    if rho is None:
        rho = len(base)
    if rho != len(base):
        raise ValueError("base must have length rho")
    own = {int(ell): 1 for ell in primes}
    if own_exponents:
        for ell, e in own_exponents.items():
            own[int(ell)] = int(e)
    cohom = MockCohomology(ring, rho)
    classes = {}
    for level in enumerate_levels(primes, max_primes):
        gr = cohom.group_ring(level)
        factor = gr.one
        for ell in level.primes:
            coeffs = (dual_euler_poly if flavor == "dual" else euler_poly)(
                data, ring, ell)
            fr = model_frobenius(gr, ell, own=own[ell], inverse=True)
            factor = factor * eval_poly_at_group(gr, coeffs, fr)
        classes[level.primes] = [factor * gr.from_ring(b) for b in base]
    return SyntheticEulerSystem(data, cohom, classes, flavor, own)


def verify_norm_relation(es: SyntheticEulerSystem, level: SquarefreeLevel,
                         ell: int) -> bool:
    """cor to level n/ell equals the Euler factor times the lower class."""
    if ell not in level.primes:
        raise ValueError("ell must divide the level")
    sub = SquarefreeLevel([q for q in level.primes if q != ell])
    lhs = es.cohom.cor(level, sub, es.cls(level))
    gr_sub = es.cohom.group_ring(sub)
    coeffs = es.euler_coeffs(ell)
    fr = frobenius(gr_sub, ell, inverse=True)
    factor = eval_poly_at_group(gr_sub, coeffs, fr)
    rhs = es.cohom.scale_vec(factor, es.cls(sub))
    return es.cohom.vec_eq(lhs, rhs)


def verify_all_norm_relations(es: SyntheticEulerSystem):
    """Every (level, prime) pair; returns a list of result triples."""
    out = []
    for level in es.levels():
        for ell in level.primes:
            out.append((level.n, ell, verify_norm_relation(es, level, ell)))
    return out


def rubin_bracket(data: DeformationData, gr_d: GroupRing, ell: int
                  ) -> GroupRingElem:
    """B_{ell, d}: the divided difference of the two Euler flavors.

    Computed coefficientwise with the exact integer quotient
    (ell^k - 1)/(ell - 1), then certified by multiplying back.
    """
    ring = gr_d.ring
    O = ring.O
    direct = euler_poly(data, ring, ell)
    linv = O.inv(O.from_int(ell))
    bracket_coeffs = []
    scale = O.one  # ell^{-k}
    for k, a in enumerate(direct):
        geom = sum(ell**j for j in range(k))  # (ell^k - 1)/(ell - 1)
        bracket_coeffs.append(ring.scale(a, scale * O.from_int(geom)))
        scale = scale * linv
    fr = frobenius(gr_d, ell, inverse=True)
    B = eval_poly_at_group(gr_d, bracket_coeffs, fr)
    # certificate: (ell - 1) B = P - P* at the same evaluation point
    dual = dual_euler_poly(data, ring, ell)
    diff = [a - b for a, b in zip(direct, dual)]
    check = eval_poly_at_group(gr_d, diff, fr)
    assert (ell - 1) * B == check, "bracket division certificate failed"
    return B


def convert_rubin(es: SyntheticEulerSystem) -> SyntheticEulerSystem:
    """Build a direct-flavor system from a dual-flavor one.

    c(n) = z(n) + sum over proper divisors d of n (d = 1 included) of
    res_{d -> n} ( prod_{ell | n/d} B_{ell, d} * z(d) ).
    """
    if es.flavor != "dual":
        raise ValueError("conversion starts from a dual-flavor system")
    cohom = es.cohom
    classes = {}
    for level in es.levels():
        primes = level.primes
        acc = [v for v in es.cls(level)]
        for k in range(len(primes)):
            for keep in itertools.combinations(primes, k):
                d = SquarefreeLevel(keep)
                gr_d = cohom.group_ring(d)
                A = gr_d.one
                for ell in primes:
                    if ell not in keep:
                        A = A * rubin_bracket(es.data, gr_d, ell)
                term = cohom.res(d, level, cohom.scale_vec(A, es.cls(d)))
                acc = [a + t for a, t in zip(acc, term)]
        classes[primes] = acc
    return SyntheticEulerSystem(es.data, cohom, classes, "direct",
                                es.own_exponents)


# ---------------------------------------------------------------------------
# twists


def twist_by_character(data: DeformationData, chi: dict) -> DeformationData:
    """Scale each Frobenius matrix by the unit character value chi[ell].

    The Euler factor transforms by T -> chi(ell) T, which tests check
    directly; admissibility is not preserved in general.
    """
    frob2 = {}
    for ell, m in data.frob.items():
        u = chi.get(ell, 1)
        frob2[ell] = [[{mono: c * u for mono, c in e.items()} for e in row]
                      for row in m]
    return DeformationData(data.O, data.r, data.dim, frob2,
                           twist=dict(data.twist),
                           name=f"{data.name}-twisted")


def cyclotomic_twist_exponent(O, ell: int) -> int:
    """s(ell) with (1 + p)^{s(ell)} equal to the principal unit part of ell."""
    return gamma_exponent(pr_unit(O, ell))


def extend_cyclotomic(data: DeformationData) -> DeformationData:
    """Attach the cyclotomic scaling (1 + x_r)^{s(ell)} to every prime.

    The last variable plays the role of the cyclotomic deformation
    direction; specializing x_r to (1 + p)^j - 1 recovers the twist by
    the j-th power of the cyclotomic character, which is what the
    specialization tests exercise.
    """
    twist = dict(data.twist)
    for ell in data.frob:
        twist[ell] = cyclotomic_twist_exponent(data.O, ell)
    return DeformationData(data.O, data.r, data.dim, data.frob,
                           twist=twist, name=f"{data.name}-cyclotomic")
