"""Squarefree levels, group rings, Frobenius data, derivative operators.

The level structure is the classical one: for each auxiliary prime ell
(different from p) the group H_ell is cyclic of order ell - 1 with a
canonical generator attached to the smallest primitive root mod ell, and
H_n for squarefree n is the product over the primes dividing n. Group
rings are taken over a finite quotient ring and flatten site-wise, so the
Ideal machinery from linalg applies to them unchanged.

Frobenius elements are synthetic but honest about the arithmetic they
model: the component of Frob_ell at a prime q is the discrete log of ell
in (Z/q)*, and the component at ell itself is trivial by convention, the
unramified choice that makes the norm relations exact.
"""

from __future__ import annotations

import itertools
import math

from .coeff import CoeffRing
from .lam import QuotientRing, RingElem
from .linalg import Ideal, ModulePres, SiteSpace


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    i = 2
    while i * i <= n:
        if n % i == 0:
            return False
        i += 1
    return True


def primitive_root(q: int) -> int:
    """Smallest primitive root mod a prime q."""
    order = q - 1
    fac = []
    m = order
    d = 2
    while d * d <= m:
        if m % d == 0:
            fac.append(d)
            while m % d == 0:
                m //= d
        d += 1
    if m > 1:
        fac.append(m)
    for g in range(2, q):
        if all(pow(g, order // f, q) != 1 for f in fac):
            return g
    raise ValueError(f"{q} is not prime")


def dlog(q: int, a: int) -> int:
    """Discrete log of a mod q base the canonical generator."""
    a %= q
    if a == 0:
        raise ValueError("zero has no discrete log")
    g = primitive_root(q)
    cur = 1
    for k in range(q - 1):
        if cur == a:
            return k
        cur = cur * g % q
    raise ArithmeticError("unreachable for prime q")


def vp(n: int, p: int) -> int:
    v = 0
    n = abs(n)
    while n and n % p == 0:
        n //= p
        v += 1
    return v


class SquarefreeLevel:
    """A squarefree product of admissible primes, with its group data."""

    def __init__(self, primes):
        primes = sorted(set(int(q) for q in primes))
        for q in primes:
            if not is_prime(q):
                raise ValueError(f"{q} is not prime")
        self.primes = tuple(primes)
        self.n = 1
        for q in primes:
            self.n *= q
        self.orders = tuple(q - 1 for q in self.primes)
        self.size = 1
        for o in self.orders:
            self.size *= o

    def divides(self, other: "SquarefreeLevel") -> bool:
        return set(self.primes) <= set(other.primes)

    def quotient_primes(self, other: "SquarefreeLevel"):
        """Primes of self not in other (self / gcd)."""
        return tuple(q for q in self.primes if q not in other.primes)

    def __eq__(self, other):
        return isinstance(other, SquarefreeLevel) and self.primes == other.primes

    def __hash__(self):
        return hash(self.primes)

    def __repr__(self):
        return f"SquarefreeLevel({self.n})"


def enumerate_levels(primes, max_primes=None):
    """All squarefree levels from the given primes, ordered by n.

    Includes the empty level n = 1.
    """
    primes = sorted(set(primes))
    cap = len(primes) if max_primes is None else max_primes
    out = []
    for k in range(cap + 1):
        for sub in itertools.combinations(primes, k):
            out.append(SquarefreeLevel(sub))
    out.sort(key=lambda lv: lv.n)
    return out


class GroupRingElem:
    """Element of R[H_n]: a sparse map from exponent tuples to R."""

    __slots__ = ("gr", "coords")

    def __init__(self, gr: "GroupRing", coords: dict):
        self.gr = gr
        self.coords = coords

    def __add__(self, other):
        self.gr._same(other)
        out = dict(self.coords)
        for g, v in other.coords.items():
            prev = out.get(g)
            nv = prev + v if prev is not None else v
            if nv.is_zero():
                out.pop(g, None)
            else:
                out[g] = nv
        return GroupRingElem(self.gr, out)

    def __neg__(self):
        return GroupRingElem(self.gr, {g: -v for g, v in self.coords.items()})

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, GroupRingElem):
            self.gr._same(other)
            return self.gr._mul(self, other)
        if isinstance(other, (int, RingElem)):
            return self.gr.scale(self, other)
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, (int, RingElem)):
            return self.gr.scale(self, other)
        return NotImplemented

    def __pow__(self, n: int):
        if n < 0:
            raise ValueError("negative group ring power")
        out = self.gr.one
        base = self
        while n:
            if n & 1:
                out = out * base
            n >>= 1
            if n:
                base = base * base
        return out

    def is_zero(self):
        return not self.coords

    def __eq__(self, other):
        return (isinstance(other, GroupRingElem)
                and self.gr.key == other.gr.key
                and self.coords == other.coords)

    def __hash__(self):
        return hash((self.gr.key, self.gr.flatten(self)))

    def __repr__(self):
        if not self.coords:
            return "0"
        parts = []
        for g in sorted(self.coords):
            parts.append(f"[{g}]({self.coords[g]!r})")
        return " + ".join(parts)


class GroupRing:
    """R[H_n] with the site-wise flattening protocol.

    Group elements are exponent tuples against the canonical generators;
    sites are (group element, ring site) pairs ordered with the group
    index major.
    """

    def __init__(self, ring: QuotientRing, level: SquarefreeLevel):
        self.ring = ring
        self.level = level
        self.elements = list(itertools.product(
            *[range(o) for o in level.orders]))
        self.index = {g: i for i, g in enumerate(self.elements)}
        caps = []
        base = list(ring.space.caps)
        for _ in self.elements:
            caps.extend(base)
        self.space = SiteSpace(ring.O.p, caps)
        self.key = (ring.key, level.primes)
        ident = tuple([0] * len(level.primes))
        self.zero = GroupRingElem(self, {})
        self.one = GroupRingElem(self, {ident: ring.one})
        self.identity = ident
        self._mod_basis = None
        self._module = None

    def _same(self, other):
        if not isinstance(other, GroupRingElem) or other.gr.key != self.key:
            raise ValueError("elements belong to different group rings")

    def group_elem(self, exps, coeff=None) -> GroupRingElem:
        exps = tuple(e % o for e, o in zip(exps, self.level.orders))
        c = self.ring.one if coeff is None else coeff
        if c.is_zero():
            return self.zero
        return GroupRingElem(self, {exps: c})

    def sigma(self, q: int) -> GroupRingElem:
        """The canonical generator of H_q inside this group ring."""
        i = self.level.primes.index(q)
        exps = tuple(1 if j == i else 0
                     for j in range(len(self.level.primes)))
        return self.group_elem(exps)

    def from_ring(self, x: RingElem) -> GroupRingElem:
        if x.is_zero():
            return self.zero
        return GroupRingElem(self, {self.identity: x})

    def _mul(self, a: GroupRingElem, b: GroupRingElem) -> GroupRingElem:
        orders = self.level.orders
        acc: dict = {}
        for ga, va in a.coords.items():
            for gb, vb in b.coords.items():
                g = tuple((x + y) % o for x, y, o in zip(ga, gb, orders))
                v = va * vb
                prev = acc.get(g)
                nv = prev + v if prev is not None else v
                if nv.is_zero():
                    acc.pop(g, None)
                else:
                    acc[g] = nv
        return GroupRingElem(self, acc)

    def scale(self, a: GroupRingElem, s) -> GroupRingElem:
        out = {}
        for g, v in a.coords.items():
            nv = v * s
            if not nv.is_zero():
                out[g] = nv
        return GroupRingElem(self, out)

    def aug(self, a: GroupRingElem) -> RingElem:
        total = self.ring.zero
        for v in a.coords.values():
            total = total + v
        return total

    def norm(self, q: int) -> GroupRingElem:
        """Sum of all powers of sigma_q."""
        i = self.level.primes.index(q)
        o = self.level.orders[i]
        coords = {}
        one = self.ring.one
        for k in range(o):
            exps = tuple(k if j == i else 0
                         for j in range(len(self.level.primes)))
            coords[exps] = one
        return GroupRingElem(self, coords)

    def full_norm(self) -> GroupRingElem:
        out = self.one
        for q in self.level.primes:
            out = out * self.norm(q)
        return out

    # -- flattening protocol ------------------------------------------------

    def flatten(self, a: GroupRingElem) -> tuple:
        rdim = self.ring.space.dim
        vec = [0] * (rdim * len(self.elements))
        for g, v in a.coords.items():
            base = self.index[g] * rdim
            fv = self.ring.flatten(v)
            for j, x in enumerate(fv):
                vec[base + j] = x
        return tuple(vec)

    def unflatten(self, vec) -> GroupRingElem:
        rdim = self.ring.space.dim
        coords = {}
        for g, i in self.index.items():
            chunk = vec[i * rdim:(i + 1) * rdim]
            v = self.ring.unflatten(chunk)
            if not v.is_zero():
                coords[g] = v
        return GroupRingElem(self, coords)

    def module_basis(self):
        if self._mod_basis is None:
            out = []
            for g in self.elements:
                for b in self.ring.module_basis():
                    if b.is_zero():
                        out.append(self.zero)
                    else:
                        out.append(GroupRingElem(self, {g: b}))
            self._mod_basis = out
        return self._mod_basis

    def as_module(self) -> ModulePres:
        if self._module is None:
            dim = self.space.dim
            rows = [[1 if j == i else 0 for j in range(dim)]
                    for i in range(dim)]
            gens = []
            O = self.ring.O
            if O.deg > 1:
                t = self.ring.from_scalar(O.from_coords(
                    [0, 1] + [0] * (O.deg - 2)))
                gens.append(self.from_ring(t))
            for i in range(1, self.ring.r + 1):
                gens.append(self.from_ring(self.ring.var(i)))
            for q in self.level.primes:
                gens.append(self.sigma(q))
            mats = [[list(self.flatten(g * b)) for b in self.module_basis()]
                    for g in gens]
            self._module = ModulePres(self.space, rows, mats)
        return self._module

    def ideal(self, gens) -> Ideal:
        return Ideal(self, list(gens))

    def coefficient(self, a: GroupRingElem, exps) -> RingElem:
        return a.coords.get(tuple(exps), self.ring.zero)

    def __repr__(self):
        return f"GroupRing(level={self.level.n}, |H|={self.level.size})"


# ---------------------------------------------------------------------------
# maps between levels


def cor_map(src: GroupRing, tgt: GroupRing):
    """Corestriction R[H_n] -> R[H_d] for d | n: project the exponents."""
    if not tgt.level.divides(src.level):
        raise ValueError("target level must divide the source level")
    keep = [src.level.primes.index(q) for q in tgt.level.primes]

    def f(a: GroupRingElem) -> GroupRingElem:
        out: dict = {}
        for g, v in a.coords.items():
            h = tuple(g[i] for i in keep)
            prev = out.get(h)
            nv = prev + v if prev is not None else v
            if nv.is_zero():
                out.pop(h, None)
            else:
                out[h] = nv
        return GroupRingElem(tgt, out)

    return f


def res_map(src: GroupRing, tgt: GroupRing):
    """Restriction R[H_d] -> R[H_n] for d | n: lift and hit with the norms."""
    if not src.level.divides(tgt.level):
        raise ValueError("source level must divide the target level")
    pos = {q: i for i, q in enumerate(tgt.level.primes)}
    src_pos = [pos[q] for q in src.level.primes]
    new = [i for i, q in enumerate(tgt.level.primes)
           if q not in src.level.primes]
    new_orders = [tgt.level.orders[i] for i in new]

    def f(a: GroupRingElem) -> GroupRingElem:
        out: dict = {}
        for g, v in a.coords.items():
            template = [0] * len(tgt.level.primes)
            for e, i in zip(g, src_pos):
                template[i] = e
            for extra in itertools.product(*[range(o) for o in new_orders]):
                h = list(template)
                for e, i in zip(extra, new):
                    h[i] = e
                out[tuple(h)] = v
        return GroupRingElem(tgt, out)

    return f


def generator_change(gr: GroupRing, exponents: dict):
    """The automorphism sigma_q -> sigma_q^{a_q} as a map on the group ring.

    Each a_q must be a unit mod q - 1. Exponent tuples transform by
    multiplication because the map permutes each cyclic factor.
    """
    mults = []
    for q, o in zip(gr.level.primes, gr.level.orders):
        a = exponents.get(q, 1) % o
        if math.gcd(a, o) != 1:
            raise ValueError(f"{a} is not invertible mod {o}")
        mults.append(a)

    def f(z: GroupRingElem) -> GroupRingElem:
        out = {}
        for g, v in z.coords.items():
            h = tuple(e * a % o for e, a, o in
                      zip(g, mults, gr.level.orders))
            out[h] = v
        return GroupRingElem(gr, out)

    return f


# ---------------------------------------------------------------------------
# Frobenius and admissibility


def frobenius(gr: GroupRing, ell: int, inverse: bool = False) -> GroupRingElem:
    """Frob_ell in R[H_n], own-prime component trivial.

    At a prime q != ell the component is sigma_q^{dlog_q(ell)}; at q = ell
    it is the identity, the unramified normalization under which the norm
    relations below hold on the nose.
    """
    exps = []
    for q in gr.level.primes:
        if q == ell:
            exps.append(0)
        else:
            k = dlog(q, ell)
            exps.append(-k if inverse else k)
    return gr.group_elem(tuple(exps))


class DeformationData:
    """Exact Frobenius matrices over the Iwasawa algebra, per prime.

    frob entries are polynomial dicts over O (exact integer data at the
    stored precision); twist, when present, maps primes to the exponent
    s(ell) of a cyclotomic scaling (1 + x_r)^{s(ell)} applied to the whole
    matrix in each quotient.
    """

    def __init__(self, O: CoeffRing, r: int, dim: int, frob: dict,
                 twist: dict | None = None, name: str = "deformation"):
        self.O = O
        self.r = r
        self.dim = dim
        self.frob = {int(l): [[dict(e) for e in row] for row in m]
                     for l, m in frob.items()}
        self.twist = {int(l): int(s) for l, s in (twist or {}).items()}
        self.name = name
        for ell, m in self.frob.items():
            if len(m) != dim or any(len(row) != dim for row in m):
                raise ValueError(f"Frobenius matrix at {ell} has wrong shape")

    def primes(self):
        return sorted(self.frob)

    def frob_matrix(self, ring: QuotientRing, ell: int):
        if ring.r != self.r:
            raise ValueError("ring has a different number of variables")
        m = [[ring.from_poly(e) for e in row] for row in self.frob[ell]]
        s = self.twist.get(ell)
        if s:
            if ring.r < 1:
                raise ValueError("twist needs at least one variable")
            u = (ring.one + ring.var(ring.r)) ** s
            m = [[u * e for e in row] for row in m]
        return m

    def spec(self) -> dict:
        return {
            "name": self.name,
            "dim": self.dim,
            "r": self.r,
            "primes": self.primes(),
            "twist": {str(l): s for l, s in sorted(self.twist.items())},
        }


def _poly_t_mul(R: QuotientRing, a, b):
    out = [R.zero] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x.is_zero():
            continue
        for j, y in enumerate(b):
            if not y.is_zero():
                out[i + j] = out[i + j] + x * y
    return out


def _det_t_matrix(R: QuotientRing, m):
    """Determinant of a matrix of t-polynomials (lists of ring elements)."""
    n = len(m)
    if n == 1:
        return list(m[0][0])
    total = [R.zero]
    for j in range(n):
        a = m[0][j]
        if all(x.is_zero() for x in a):
            continue
        minor = [row[:j] + row[j + 1:] for row in m[1:]]
        term = _poly_t_mul(R, a, _det_t_matrix(R, minor))
        if j % 2:
            term = [-x for x in term]
        width = max(len(total), len(term))
        total = [(total[i] if i < len(total) else R.zero) +
                 (term[i] if i < len(term) else R.zero)
                 for i in range(width)]
    return total


def euler_poly(data: DeformationData, ring: QuotientRing, ell: int):
    """Coefficients [a_0 .. a_d] of P_ell(T) = det(1 - Frob_ell T)."""
    F = data.frob_matrix(ring, ell)
    d = data.dim
    if d > 4:
        raise ValueError("determinant budget is dimension 4")
    m = []
    for i in range(d):
        row = []
        for j in range(d):
            const = ring.one if i == j else ring.zero
            row.append([const, -F[i][j]])
        m.append(row)
    coeffs = _det_t_matrix(ring, m)
    while len(coeffs) < d + 1:
        coeffs.append(ring.zero)
    return coeffs[:d + 1]


def dual_euler_poly(data: DeformationData, ring: QuotientRing, ell: int):
    """P*_ell(T): coefficient a_k scaled by ell^{-k}.

    ell is invertible in the quotient since ell != p, so the scaling is
    exact; the difference P - P* is then divisible by ell - 1 one
    coefficient at a time.
    """
    coeffs = euler_poly(data, ring, ell)
    O = ring.O
    linv = O.inv(O.from_int(ell))
    out = []
    scale = O.one
    for a in coeffs:
        out.append(ring.scale(a, scale))
        scale = scale * linv
    return out


def eval_poly_at_group(gr: GroupRing, coeffs, g: GroupRingElem) -> GroupRingElem:
    """Evaluate a T-polynomial with ring coefficients at a group element."""
    out = gr.zero
    power = gr.one
    for a in coeffs:
        if not a.is_zero():
            out = out + power * gr.from_ring(a)
        power = power * g
    return out


def prime_in_P(data: DeformationData, ring: QuotientRing, ell: int,
               min_v: int | None = None):
    """Admissibility of ell for this quotient.

    Tests, in order: ell is a prime different from p; ell = 1 mod p to
    the depth the quotient's additive exponent demands; P_ell(1) = 0 in
    the quotient; and the fixed space presented by Frob_ell - 1 is free
    of rank one (Fitt_0 = 0 and Fitt_1 = R). Returns (ok, reasons).
    """
    from .fitting import PresentedModule

    reasons = {}
    p = ring.O.p
    reasons["prime"] = is_prime(ell) and ell != p
    if min_v is None:
        min_v = max(ring.coeff_caps) if ring.coeff_caps else 1
    reasons["congruence"] = vp(ell - 1, p) >= min_v
    if ell in data.frob:
        coeffs = euler_poly(data, ring, ell)
        val = ring.zero
        for a in coeffs:
            val = val + a
        reasons["euler_at_one"] = val.is_zero()
        F = data.frob_matrix(ring, ell)
        rows = []
        for i in range(data.dim):
            row = []
            for j in range(data.dim):
                e = F[i][j]
                if i == j:
                    e = e - ring.one
                row.append(e)
            rows.append(row)
        pm = PresentedModule(ring, data.dim, rows)
        reasons["fitt0_zero"] = pm.fitting_ideal(0).is_zero()
        reasons["fitt1_unit"] = pm.fitting_ideal(1).is_unit_ideal()
    else:
        reasons["euler_at_one"] = False
        reasons["fitt0_zero"] = False
        reasons["fitt1_unit"] = False
    return all(reasons.values()), reasons


# ---------------------------------------------------------------------------
# derivative operators


def kolyvagin_D(gr: GroupRing, q: int) -> GroupRingElem:
    """D_q = sum_{v=0}^{q-2} v sigma_q^v in R[H_n]."""
    i = gr.level.primes.index(q)
    o = gr.level.orders[i]
    coords = {}
    for v in range(1, o):
        exps = tuple(v if j == i else 0
                     for j in range(len(gr.level.primes)))
        c = gr.ring.from_scalar(v)
        if not c.is_zero():
            coords[exps] = c
    return GroupRingElem(gr, coords)


def kolyvagin_D_full(gr: GroupRing) -> GroupRingElem:
    out = gr.one
    for q in gr.level.primes:
        out = out * kolyvagin_D(gr, q)
    return out


def e_map(gr: GroupRing, z: GroupRingElem) -> RingElem:
    """For a single-prime level and aug(z) = 0: sum of j * z_j.

    Well-defined on the augmentation ideal mod its square exactly when
    q - 1 dies in the quotient, which is part of admissibility; the map
    refuses to run otherwise rather than return something base-dependent.
    """
    if len(gr.level.primes) != 1:
        raise ValueError("e_map expects a prime level")
    q = gr.level.primes[0]
    if not gr.ring.from_scalar(q - 1).is_zero():
        raise ValueError(f"{q} - 1 is not zero in the quotient")
    if not gr.aug(z).is_zero():
        raise ValueError("e_map needs an augmentation-zero element")
    total = gr.ring.zero
    for (j,), v in z.coords.items():
        total = total + gr.ring.scale(v, j)
    return total
