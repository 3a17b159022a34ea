"""Derivative classes, universal Kolyvagin classes, and their ideal ladders.

Everything in this module lives at a finite quotient of the Iwasawa
algebra. The inputs are a synthetic Euler system over a working quotient
ring and a family of target quotients cut out by powers of a monic
parameter system; the outputs are the derived classes, the ideals their
coordinates generate, and the finite ladders whose projective limits the
theory is actually about. Limits are never formed: a ladder carries its
ideals depth by depth together with the comparison data between floors,
and a stabilization flag that records whether the last few floors agree.

Two conventions matter throughout. Derivative classes are stored in the
canonical generator basis, so recomputing with a different choice of
generators of the groups H_ell returns the identical element; the change
of generators multiplies the raw derivative by a unit that we divide out
on extraction. And Frobenius elements entering the modification factors
are not inverted by default; the switch use_inverse_frobenius toggles the
other convention everywhere it can occur.
"""

from __future__ import annotations

import itertools
import math

from .coeff import INF, CoeffRing
from .fitting import LinearElement, PresentedModule
from .galois import (
    DeformationData,
    GroupRing,
    GroupRingElem,
    SquarefreeLevel,
    dual_euler_poly,
    e_map,
    enumerate_levels,
    eval_poly_at_group,
    euler_poly,
    frobenius,
    prime_in_P,
    res_map,
    vp,
)
from .lam import (
    MonicParameterSystem,
    QuotientHom,
    QuotientRing,
    RingElem,
    coeff_embedding,
    poly_map_coeffs,
    quotient_hom,
    reduce_map,
    scalar_extension,
)
from .linalg import FinModule, Ideal, hom_module, image_ideal, preimage
from .euler import (
    SyntheticEulerSystem,
    cyclotomic_twist_exponent,
    generate_multiplicative,
)

PERMUTATION_BUDGET = 6


class CongruenceError(ArithmeticError):
    """A derived element failed the fixedness congruence at the target."""


class NormImageError(ArithmeticError):
    """An element expected in the image of restriction is not constant."""


# ---------------------------------------------------------------------------
# plumbing between quotients


_GROUP_RINGS: dict = {}
_REDUCTIONS: dict = {}


def _gr(ring: QuotientRing, primes) -> GroupRing:
    key = (ring.key, tuple(primes))
    gr = _GROUP_RINGS.get(key)
    if gr is None:
        gr = GroupRing(ring, SquarefreeLevel(primes))
        _GROUP_RINGS[key] = gr
    return gr


def _reduction(source: QuotientRing, target: QuotientRing) -> QuotientHom:
    """The canonical map between two quotients of the same algebra.

    For quotients of the same parameter system this is the plain depth
    reduction. Across different systems the variables map identically and
    the constructor's vanishing check decides whether the source ideal is
    contained in the target ideal, raising ValueError when it is not.
    That check is the only ideal containment test this module ever needs.
    """
    key = (source.key, target.key)
    hom = _REDUCTIONS.get(key)
    if hom is not None:
        return hom
    if source.mps.key == target.mps.key:
        hom = reduce_map(source, target)
    else:
        images = [target.var(i) for i in range(1, source.r + 1)]
        hom = quotient_hom(source, target, images)
    _REDUCTIONS[key] = hom
    return hom


def _push_group(hom: QuotientHom, gr_tgt: GroupRing,
                z: GroupRingElem) -> GroupRingElem:
    out = {}
    for g, v in z.coords.items():
        w = hom.apply(v)
        if not w.is_zero():
            out[g] = w
    return GroupRingElem(gr_tgt, out)


def _euler_coeffs(es: SyntheticEulerSystem, ring: QuotientRing, ell: int):
    if es.flavor == "dual":
        return dual_euler_poly(es.data, ring, ell)
    return euler_poly(es.data, ring, ell)


def _level_of(es: SyntheticEulerSystem, n):
    if isinstance(n, SquarefreeLevel):
        level = n
    elif isinstance(n, (tuple, list)):
        level = SquarefreeLevel(tuple(int(q) for q in n))
    else:
        n = int(n)
        if n < 1:
            raise ValueError("levels are positive squarefree integers")
        primes = []
        m = n
        d = 2
        while d * d <= m:
            if m % d == 0:
                primes.append(d)
                m //= d
                if m % d == 0:
                    raise ValueError(f"{n} is not squarefree")
            else:
                d += 1
        if m > 1:
            primes.append(m)
        level = SquarefreeLevel(primes)
    if level.primes not in es.classes:
        raise ValueError(f"the system carries no class at level {level.n}")
    return level


def _perm_sign(perm) -> int:
    inv = 0
    for i in range(len(perm)):
        for j in range(i + 1, len(perm)):
            if perm[i] > perm[j]:
                inv += 1
    return -1 if inv % 2 else 1


def _require_admissible(es: SyntheticEulerSystem, I: QuotientRing,
                        level: SquarefreeLevel):
    for q in level.primes:
        ok, reasons = prime_in_P(es.data, I, q)
        if not ok:
            bad = sorted(k for k, v in reasons.items() if not v)
            raise ValueError(
                f"{q} is not admissible for this quotient (failing: "
                f"{', '.join(bad)})")


def _check_fixed(gr: GroupRing, z: GroupRingElem, what: str):
    for q in gr.level.primes:
        if not ((gr.sigma(q) - gr.one) * z).is_zero():
            raise CongruenceError(
                f"{what} is not fixed by the generator at {q}")


def _constant_value(gr: GroupRing, z: GroupRingElem) -> RingElem:
    c0 = gr.coefficient(z, gr.identity)
    for g in gr.elements:
        if gr.coefficient(z, g) != c0:
            raise NormImageError(
                "element does not descend along restriction")
    return c0


# ---------------------------------------------------------------------------
# derivative classes


def kolyvagin_D_generator(gr: GroupRing, q: int, a: int = 1) -> GroupRingElem:
    """The derivative operator at q built on the generator sigma_q^a."""
    i = gr.level.primes.index(q)
    o = gr.level.orders[i]
    if math.gcd(a, o) != 1:
        raise ValueError(f"{a} is not invertible mod {o}")
    coords = {}
    for v in range(1, o):
        exps = tuple(a * v % o if j == i else 0
                     for j in range(len(gr.level.primes)))
        c = gr.ring.from_scalar(v)
        if not c.is_zero():
            coords[exps] = c
    return GroupRingElem(gr, coords)


class DerivativeClass:
    """A derivative class at one level and one target quotient.

    kappa holds the class in the canonical generator basis, one ring
    element per coordinate of the system. derivative keeps the reduced
    derivative vector itself, still spread over the group ring, for
    callers who want the undescended object.
    """

    def __init__(self, level: SquarefreeLevel, ring: QuotientRing,
                 kappa, generators: dict, derivative, source: str):
        self.level = level
        self.ring = ring
        self.kappa = list(kappa)
        self.generators = dict(generators)
        self.derivative = list(derivative)
        self.source = source

    def __repr__(self):
        return (f"DerivativeClass(n={self.level.n}, "
                f"rho={len(self.kappa)})")


def derivative_class(es: SyntheticEulerSystem, n, I: QuotientRing,
                     generators: dict | None = None) -> DerivativeClass:
    """Apply the derivative operators at level n and descend mod I.

    Every prime of n must be admissible for I; the derivative of the
    class at n is then fixed by the level group modulo I and constant as
    a function on the group, and the constant is the class. With
    generators sigma_q^{a_q} in place of the canonical ones the raw
    constant picks up the factor prod a_q^{-1}, which is divided out, so
    the stored class does not depend on the choice.
    """
    level = _level_of(es, n)
    _require_admissible(es, I, level)
    gens = {q: 1 for q in level.primes}
    if generators:
        for q, a in generators.items():
            if q not in gens:
                raise ValueError(f"{q} does not divide the level")
            gens[q] = int(a)
    gr_w = es.cohom.group_ring(level)
    D = gr_w.one
    for q in level.primes:
        D = D * kolyvagin_D_generator(gr_w, q, gens[q])
    vec_w = [D * z for z in es.cls(level)]
    hom = _reduction(es.ring, I)
    gr_I = _gr(I, level.primes)
    vec_I = [_push_group(hom, gr_I, v) for v in vec_w]
    for v in vec_I:
        _check_fixed(gr_I, v, f"derivative at level {level.n}")
    unit = 1
    for q in level.primes:
        unit *= gens[q]
    kappa = [I.scale(_constant_value(gr_I, v), unit) for v in vec_I]
    return DerivativeClass(level, I, kappa, gens, vec_I, es.data.name)


def universal_kolyvagin(es: SyntheticEulerSystem, n, I: QuotientRing,
                        use_inverse_frobenius: bool = False):
    """The universal class at level n over the quotient I.

    The signed sum over permutations of the primes of n: each permutation
    contributes its sign times the derivative class at the product of its
    fixed points, scaled by the extraction values of the Euler factors
    P_ell evaluated at the Frobenius of the image prime, one factor for
    every displaced prime. Returns a vector of ring elements.
    """
    level = _level_of(es, n)
    _require_admissible(es, I, level)
    primes = level.primes
    k = len(primes)
    if k > PERMUTATION_BUDGET:
        raise ValueError(
            f"level has {k} primes; the permutation sum stops at "
            f"{PERMUTATION_BUDGET}")
    rho = es.cohom.rho
    acc = [I.zero] * rho
    classes: dict = {}
    for perm in itertools.permutations(range(k)):
        sign = _perm_sign(perm)
        fixed = tuple(primes[i] for i in range(k) if perm[i] == i)
        dc = classes.get(fixed)
        if dc is None:
            dc = derivative_class(es, SquarefreeLevel(fixed), I)
            classes[fixed] = dc
        factor = I.one
        for i in range(k):
            if perm[i] == i:
                continue
            ell = primes[i]
            gr_ell = _gr(I, (ell,))
            g = frobenius(gr_ell, primes[perm[i]],
                          inverse=use_inverse_frobenius)
            z = eval_poly_at_group(gr_ell, _euler_coeffs(es, I, ell), g)
            factor = factor * e_map(gr_ell, z)
        for j in range(rho):
            acc[j] = acc[j] + I.scale(dc.kappa[j] * factor, sign)
    return acc


def A_extract(es: SyntheticEulerSystem, working: QuotientRing, alpha: dict,
              ell: int, use_inverse_frobenius: bool = False) -> RingElem:
    """A lift of the extraction value of P_ell at a displaced Frobenius.

    Computed over the working quotient as the canonical exponent sum
    without the admissibility guards: modulo the augmentation ideal of
    the level group the result agrees with the honest extraction wherever
    the latter is defined, and any two lifts differ by something the
    passage to an admissible quotient kills.
    """
    gr = _gr(working, (ell,))
    g = frobenius(gr, alpha[ell], inverse=use_inverse_frobenius)
    z = eval_poly_at_group(gr, _euler_coeffs(es, working, ell), g)
    total = working.zero
    for (j,), v in z.coords.items():
        total = total + working.scale(v, j)
    return total


def d_universal(es: SyntheticEulerSystem, n, working: QuotientRing | None = None,
                use_inverse_frobenius: bool = False, a_tweak=None,
                generators: dict | None = None):
    """The universal derivative at level n over a working quotient.

    No admissibility is needed here; the element is defined for every
    squarefree level the system carries. Each permutation term embeds the
    derivative of the class at the fixed-point level into the full level
    group and scales it by the product of lifted extraction values. The
    a_tweak hook, when given, replaces each lift A by
    a_tweak(alpha, ell, A) and exists so that independence of the lift
    choice can be exercised; generators plays the same role for the
    derivative operators.
    """
    level = _level_of(es, n)
    primes = level.primes
    k = len(primes)
    if k > PERMUTATION_BUDGET:
        raise ValueError(
            f"level has {k} primes; the permutation sum stops at "
            f"{PERMUTATION_BUDGET}")
    W = working if working is not None else es.ring
    same = W.key == es.ring.key
    hom = None if same else _reduction(es.ring, W)
    gens = {q: 1 for q in primes}
    if generators:
        for q, a in generators.items():
            gens[q] = int(a)
    rho = es.cohom.rho
    gr_n = _gr(W, primes)
    acc = [gr_n.zero] * rho
    for perm in itertools.permutations(range(k)):
        sign = _perm_sign(perm)
        fixed = tuple(primes[i] for i in range(k) if perm[i] == i)
        d_level = SquarefreeLevel(fixed)
        gr_src = es.cohom.group_ring(d_level)
        D = gr_src.one
        for q in fixed:
            D = D * kolyvagin_D_generator(gr_src, q, gens[q])
        vec = [D * z for z in es.cls(d_level)]
        if same:
            gr_d = gr_src
        else:
            gr_d = _gr(W, fixed)
            vec = [_push_group(hom, gr_d, v) for v in vec]
        emb = res_map(gr_d, gr_n)
        alpha = {primes[i]: primes[perm[i]] for i in range(k)}
        A = W.one
        for i in range(k):
            if perm[i] == i:
                continue
            a_val = A_extract(es, W, alpha, primes[i],
                              use_inverse_frobenius)
            if a_tweak is not None:
                a_val = a_tweak(alpha, primes[i], a_val)
            A = A * a_val
        Az = gr_n.from_ring(A)
        for j in range(rho):
            term = Az * emb(vec[j])
            acc[j] = acc[j] + (term if sign > 0 else -term)
    return acc


def universal_consistency(es: SyntheticEulerSystem, n, I: QuotientRing,
                          use_inverse_frobenius: bool = False):
    """Descend the universal derivative mod I and match the universal class.

    The reduction of d_n must be fixed by the level group and constant on
    it; the common value has to equal the universal class computed
    directly. Returns the descended vector, raising CongruenceError or
    NormImageError when the chain breaks.
    """
    level = _level_of(es, n)
    d = d_universal(es, n, working=es.ring,
                    use_inverse_frobenius=use_inverse_frobenius)
    hom = _reduction(es.ring, I)
    gr_I = _gr(I, level.primes)
    d_I = [_push_group(hom, gr_I, v) for v in d]
    for v in d_I:
        _check_fixed(gr_I, v, f"universal derivative at level {level.n}")
    common = [_constant_value(gr_I, v) for v in d_I]
    ku = universal_kolyvagin(es, n, I,
                             use_inverse_frobenius=use_inverse_frobenius)
    for a, b in zip(common, ku):
        if a != b:
            raise NormImageError(
                "descent of the universal derivative disagrees with the "
                "universal class")
    return common


# ---------------------------------------------------------------------------
# coordinate ideals


def ki_ideal(es: SyntheticEulerSystem, Iprime: QuotientRing, n,
             use_inverse_frobenius: bool = False,
             a_tweak=None, generators: dict | None = None) -> Ideal:
    """The coordinate ideal of the universal derivative in R'[H_n].

    Over a free module every homomorphism into the ring is a combination
    of the coordinate projections, so the values of all functionals on
    d_n generate the same ideal as the coordinates themselves.
    """
    level = _level_of(es, n)
    d = d_universal(es, n, working=Iprime,
                    use_inverse_frobenius=use_inverse_frobenius,
                    a_tweak=a_tweak, generators=generators)
    return _gr(Iprime, level.primes).ideal(d)


def _free_module(gr: GroupRing, rho: int):
    from .linalg import ModulePres, SiteSpace

    caps = list(gr.space.caps) * rho
    space = SiteSpace(gr.space.p, caps)
    rows = [[1 if j == i else 0 for j in range(space.dim)]
            for i in range(space.dim)]
    base = gr.as_module()
    d = gr.space.dim
    action = []
    for m in base.action:
        big = [[0] * space.dim for _ in range(space.dim)]
        for b in range(rho):
            for i in range(d):
                for j in range(d):
                    big[b * d + i][b * d + j] = m[i][j]
        action.append(big)
    return ModulePres(space, rows, action)


def ki_ideal_brute(es: SyntheticEulerSystem, Iprime: QuotientRing, n,
                   use_inverse_frobenius: bool = False) -> Ideal:
    """Same ideal through hom enumeration; for small cross-checks only."""
    level = _level_of(es, n)
    d = d_universal(es, n, working=Iprime,
                    use_inverse_frobenius=use_inverse_frobenius)
    gr = _gr(Iprime, level.primes)
    if es.cohom.rho == 1:
        return image_ideal(list(gr.flatten(d[0])), gr.as_module(), gr)
    dom = _free_module(gr, es.cohom.rho)
    flat = []
    for v in d:
        flat.extend(gr.flatten(v))
    homs = hom_module(dom, gr.as_module())
    gens = [gr.unflatten(h.apply(flat)) for h in homs]
    return Ideal(gr, gens)


def c_ideal(es: SyntheticEulerSystem, Iprime: QuotientRing, n,
            I: QuotientRing | None = None,
            use_inverse_frobenius: bool = False) -> Ideal:
    """The ideal of Lambda/I cut out by the universal derivative at n.

    The coordinate ideal over I' is pushed into I, where the fixedness
    congruence must hold; the result is pulled back through the norm
    isomorphism x -> N x onto the fixed part of the level group ring.
    When I' and I coincide the same ideal falls out of the universal
    class directly, and the two computations are compared.
    """
    if I is None:
        I = Iprime
    level = _level_of(es, n)
    _require_admissible(es, I, level)
    ki = ki_ideal(es, Iprime, n,
                  use_inverse_frobenius=use_inverse_frobenius)
    gr_I = _gr(I, level.primes)
    if Iprime.key == I.key:
        pushed = list(ki.gens)
    else:
        hom = _reduction(Iprime, I)
        pushed = [_push_group(hom, gr_I, g) for g in ki.gens]
    for g in pushed:
        _check_fixed(gr_I, g, f"derivative coordinates at level {level.n}")
    ki_I = gr_I.ideal(pushed)

    norm = gr_I.full_norm()
    mat = [list(gr_I.flatten(norm * gr_I.from_ring(b)))
           for b in I.module_basis()]
    sub = [list(r) for r in ki_I.module.rows]
    rows = preimage(mat, sub, I.space.p, I.space.N)
    pre = FinModule(I.space, [list(r) for r in rows])
    out = Ideal(I, [I.unflatten(r) for r in pre.rows])
    if out.module != pre:
        raise ArithmeticError("norm preimage is not an ideal")
    if Iprime.key == I.key:
        direct = I.ideal(universal_kolyvagin(
            es, level, I, use_inverse_frobenius=use_inverse_frobenius))
        if direct != out:
            raise ArithmeticError(
                "universal class ideal disagrees with the norm preimage")
    return out


def admissible_levels(es: SyntheticEulerSystem, I: QuotientRing,
                      pool=None, i: int | None = None,
                      exact: bool = False):
    """Levels of the system all of whose primes are admissible for I.

    pool restricts the primes considered; i bounds the number of prime
    factors, or pins it exactly when exact is set. Level one is included
    unless exact demands a positive count.
    """
    if pool is None:
        pool = sorted(es.own_exponents)
    adm = [q for q in sorted(set(int(q) for q in pool))
           if prime_in_P(es.data, I, q)[0]]
    cap = i if i is not None else None
    out = []
    for level in enumerate_levels(adm, max_primes=cap):
        if level.primes not in es.classes:
            continue
        if exact and i is not None and len(level.primes) != i:
            continue
        out.append(level)
    return out


# ---------------------------------------------------------------------------
# ladders


class IdealLadder:
    """A finite stretch of the projective system of derived ideals.

    One ideal per depth vector, shallow to deep, plus the floor by floor
    comparison of each ideal's image downstairs with the ideal living
    there. stabilized records whether the last stable_runs floors agreed.
    """

    def __init__(self, mps: MonicParameterSystem, depths, rings, ideals,
                 images_agree, stabilized: bool, meta: dict | None = None):
        self.mps = mps
        self.depths = [tuple(m) for m in depths]
        self.rings = list(rings)
        self.ideals = list(ideals)
        self.images_agree = list(images_agree)
        self.stabilized = bool(stabilized)
        self.meta = dict(meta or {})

    def to_json(self) -> dict:
        return {
            "depth": [list(m) for m in self.depths],
            "generators": [[str(g) for g in ideal.reduced_generators()]
                           for ideal in self.ideals],
            "stabilized": self.stabilized,
        }

    def __repr__(self):
        return (f"IdealLadder(floors={len(self.ideals)}, "
                f"stabilized={self.stabilized})")


def _c_i_at(es: SyntheticEulerSystem, R: QuotientRing, i: int, pool,
            levels=None, use_inverse_frobenius: bool = False) -> Ideal:
    """The i-th derived ideal of Lambda/R at a single depth."""
    if levels is None:
        levels = admissible_levels(es, R, pool, i=i)
    gens = []
    for level in levels:
        c = c_ideal(es, R, level, I=R,
                    use_inverse_frobenius=use_inverse_frobenius)
        gens.extend(c.gens)
    return Ideal(R, gens)


def _validate_user_levels(es, rings, levels, i):
    out = []
    for n in levels:
        level = _level_of(es, n)
        if len(level.primes) > i:
            raise ValueError(
                f"level {level.n} has more than {i} prime factors")
        for R in rings:
            _require_admissible(es, R, level)
        out.append(level)
    return out


def c_i_ladder(es: SyntheticEulerSystem, mps: MonicParameterSystem, i: int,
               depths, pool=None, k_stable: int = 3, levels=None,
               use_inverse_frobenius: bool = False) -> IdealLadder:
    """The ladder of i-th derived ideals along a depth chain.

    depths is an ascending chain of depth vectors for the given parameter
    system. Level sets default to everything admissible from the pool
    with at most i prime factors, recomputed per floor, which keeps the
    required nesting automatic; an explicit levels list is validated
    against every floor instead. The image of each floor downstairs must
    land inside the ideal there, a containment that is exact for these
    systems, so a violation raises. Stabilization asks the last k_stable
    floors to agree under the comparison maps.
    """
    depths = [tuple(m) for m in depths]
    for a, b in zip(depths, depths[1:]):
        if len(a) != len(b) or any(x > y for x, y in zip(a, b)):
            raise ValueError("depths must ascend componentwise")
    rings = [QuotientRing(mps, m) for m in depths]
    fixed_levels = None
    if levels is not None:
        fixed_levels = _validate_user_levels(es, rings, levels, i)
    ideals = []
    for R in rings:
        ideals.append(_c_i_at(es, R, i, pool, levels=fixed_levels,
                              use_inverse_frobenius=use_inverse_frobenius))
    images_agree = []
    for j in range(len(rings) - 1):
        deep, shallow = rings[j + 1], rings[j]
        hom = _reduction(deep, shallow)
        pushed = Ideal(shallow, [hom.apply(g) for g in ideals[j + 1].gens])
        if not pushed.issubset(ideals[j]):
            raise ArithmeticError(
                "deeper ideal does not land inside the shallower one")
        images_agree.append(pushed == ideals[j])
    runs = max(k_stable - 1, 0)
    tail = images_agree[-runs:] if runs else []
    stabilized = len(images_agree) >= runs and all(tail)
    meta = {"i": i, "pool": sorted(es.own_exponents) if pool is None
            else sorted(set(int(q) for q in pool))}
    return IdealLadder(mps, depths, rings, ideals, images_agree,
                       stabilized, meta)


def ind_ideal(es: SyntheticEulerSystem, depths,
              mps: MonicParameterSystem | None = None) -> IdealLadder:
    """The ladder of coordinate ideals of the base class.

    Computed directly from the class at level one, then checked against
    the zeroth derived ladder, which by definition only sees level one.
    """
    if mps is None:
        mps = es.ring.mps
    ladder = c_i_ladder(es, mps, 0, depths, pool=())
    base = es.cls(SquarefreeLevel(()))
    gr1 = es.cohom.group_ring(SquarefreeLevel(()))
    coords = [gr1.coefficient(b, ()) for b in base]
    for R, ideal in zip(ladder.rings, ladder.ideals):
        hom = _reduction(es.ring, R)
        direct = R.ideal([hom.apply(c) for c in coords])
        if direct != ideal:
            raise ArithmeticError(
                "coordinate ideal of the base class disagrees with the "
                "zeroth ladder")
    return ladder


# ---------------------------------------------------------------------------
# compatibility checks


def check_level_compat(es: SyntheticEulerSystem, mps: MonicParameterSystem,
                       m, mprime, n,
                       use_inverse_frobenius: bool = False) -> dict:
    """Compare the two routes between nested depths at one level.

    The coordinate ideal computed at the deeper quotient and pushed down
    should equal the one computed downstairs, and likewise for the
    derived ideals of Lambda/I. Returns the comparison booleans.
    """
    m = tuple(m)
    mprime = tuple(mprime)
    if len(m) != len(mprime) or any(a > b for a, b in zip(m, mprime)):
        raise ValueError("mprime must dominate m componentwise")
    R = QuotientRing(mps, m)
    Rp = QuotientRing(mps, mprime)
    level = _level_of(es, n)
    ki_deep = ki_ideal(es, Rp, level,
                       use_inverse_frobenius=use_inverse_frobenius)
    ki_shallow = ki_ideal(es, R, level,
                          use_inverse_frobenius=use_inverse_frobenius)
    hom = _reduction(Rp, R)
    gr_R = _gr(R, level.primes)
    pushed = Ideal(gr_R, [_push_group(hom, gr_R, g) for g in ki_deep.gens])
    ki_agree = pushed == ki_shallow
    c_deep = c_ideal(es, Rp, level, I=R,
                     use_inverse_frobenius=use_inverse_frobenius)
    c_shallow = c_ideal(es, R, level, I=R,
                        use_inverse_frobenius=use_inverse_frobenius)
    c_agree = c_deep == c_shallow
    return {"n": level.n, "m": list(m), "mprime": list(mprime),
            "ki_agree": ki_agree, "c_agree": c_agree,
            "ok": ki_agree and c_agree}


def _diag(mps: MonicParameterSystem, N: int):
    return tuple([N] * (len(mps.hs) + 1))


def _probe_depth(deep_mps, start: int, shallow_ring, budget: int):
    for N in range(start, start + budget + 1):
        try:
            cand = QuotientRing(deep_mps, _diag(deep_mps, N))
            _reduction(cand, shallow_ring)
            return cand, N
        except ValueError:
            continue
    raise ValueError(
        f"no depth within {budget} steps of {start} reduces onto the "
        f"previous floor")


def check_mps_independence(es: SyntheticEulerSystem,
                           mps_alt: MonicParameterSystem, i: int, depths,
                           pool=None, budget: int = 8,
                           use_inverse_frobenius: bool = False) -> dict:
    """Interleave the standard and an alternative parameter system.

    depths gives the diagonal depths of the standard system. Between
    consecutive standard floors the probe finds an alternative depth
    whose quotient reduces onto the previous floor and receives the next
    one, so the two towers interleave; every derived ideal, pushed down
    one step of the interleaved chain, must equal the ideal on that
    floor. The common level set is taken at the deepest floor.
    """
    mps_std = es.ring.mps
    depths = [int(N) for N in depths]
    if sorted(depths) != depths:
        raise ValueError("depths must ascend")
    schedule = []
    prev_ring = None
    for idx, N in enumerate(depths):
        R = QuotientRing(mps_std, _diag(mps_std, N))
        if prev_ring is not None:
            _reduction(R, prev_ring)
        schedule.append(("standard", N, R))
        prev_ring = R
        if idx + 1 < len(depths):
            alt, N_alt = _probe_depth(mps_alt, N, prev_ring, budget)
            schedule.append(("alternative", N_alt, alt))
            prev_ring = alt
            try:
                _reduction(QuotientRing(mps_std,
                                        _diag(mps_std, depths[idx + 1])),
                           alt)
            except ValueError:
                raise ValueError(
                    f"standard depth {depths[idx + 1]} does not reduce "
                    f"onto the interleaved floor at {N_alt}; widen the "
                    f"depth gaps")
    deepest = schedule[-1][2]
    levels = admissible_levels(es, deepest, pool, i=i)
    values = [_c_i_at(es, R, i, pool, levels=levels,
                      use_inverse_frobenius=use_inverse_frobenius)
              for _, _, R in schedule]
    agree = []
    for j in range(len(schedule) - 1):
        deep = schedule[j + 1][2]
        shallow = schedule[j][2]
        hom = _reduction(deep, shallow)
        pushed = Ideal(shallow, [hom.apply(g) for g in values[j + 1].gens])
        same = pushed == values[j]
        agree.append(same)
        if not same:
            raise ArithmeticError(
                "interleaved ideals disagree between floors "
                f"{schedule[j + 1][:2]} and {schedule[j][:2]}")
    return {
        "schedule": [(tag, N) for tag, N, _ in schedule],
        "levels": [lv.n for lv in levels],
        "agree": agree,
        "ok": all(agree),
    }


# ---------------------------------------------------------------------------
# scalar extension


def extended_system(es: SyntheticEulerSystem, O2: CoeffRing):
    """The same system with coefficients extended to O2.

    The deformation data maps entrywise, the working quotient extends
    with its parameter system carried along, and the system regenerates
    from the extended base. The regenerated classes are compared with the
    images of the originals, which must agree exactly.
    """
    emb = coeff_embedding(es.ring.O, O2)
    ring2, hom = scalar_extension(es.ring, O2)
    frob2 = {ell: [[poly_map_coeffs(emb, e) for e in row] for row in m]
             for ell, m in es.data.frob.items()}
    data2 = DeformationData(O2, es.data.r, es.data.dim, frob2,
                            twist=dict(es.data.twist),
                            name=es.data.name + "-extended")
    base1 = es.cls(SquarefreeLevel(()))
    gr1 = es.cohom.group_ring(SquarefreeLevel(()))
    base2 = [hom.apply(gr1.coefficient(b, ())) for b in base1]
    primes = sorted(es.own_exponents)
    es2 = generate_multiplicative(
        data2, ring2, primes, base2, flavor=es.flavor,
        own_exponents=dict(es.own_exponents))
    for level in es.levels():
        gr_t = es2.cohom.group_ring(level)
        pushed = [_push_group(hom, gr_t, z) for z in es.cls(level)]
        if not es2.cohom.vec_eq(pushed, es2.cls(level)):
            raise ArithmeticError(
                f"extended class at level {level.n} disagrees with the "
                f"image of the original")
    return es2, hom


def scalar_extension_check(es: SyntheticEulerSystem, O2: CoeffRing, i: int,
                           depths, pool=None,
                           use_inverse_frobenius: bool = False) -> dict:
    """Extension and contraction of the derived ladders along O -> O2.

    Per floor: the extension of the derived ideal must generate the
    extended floor's ideal, and the contraction of the extended ideal
    back downstairs must recover the original. Both hold for these
    systems and are reported, not asserted, so a failure is visible as
    data rather than a crash.
    """
    es2, _ = extended_system(es, O2)
    ladder = c_i_ladder(es, es.ring.mps, i, depths, pool=pool,
                        use_inverse_frobenius=use_inverse_frobenius)
    ladder2 = c_i_ladder(es2, es2.ring.mps, i, depths, pool=pool,
                         use_inverse_frobenius=use_inverse_frobenius)
    floors = []
    for R, C, R2, C2 in zip(ladder.rings, ladder.ideals,
                            ladder2.rings, ladder2.ideals):
        _, hom_m = scalar_extension(R, O2)
        if hom_m.target.key != R2.key:
            raise ArithmeticError("extended floors fell out of step")
        extended = Ideal(R2, [hom_m.apply(g) for g in C.gens])
        ext_ok = extended == C2
        contracted = hom_m.preimage_module(C2.module)
        con_ok = contracted == C.module
        floors.append({"depth": list(R.depths), "extension": ext_ok,
                       "contraction": con_ok})
    ok = all(f["extension"] and f["contraction"] for f in floors)
    return {"floors": floors, "ok": ok,
            "stabilized": [ladder.stabilized, ladder2.stabilized]}


def scalar_extension_fitting(pm: PresentedModule, O2: CoeffRing,
                             i: int) -> dict:
    """Base change compatibility of one Fitting ideal along O -> O2."""
    ring2, hom = scalar_extension(pm.ring, O2)
    rows2 = [[hom.apply(e) for e in row] for row in pm.rows]
    pm2 = PresentedModule(ring2, pm.ngens, rows2)
    F = pm.fitting_ideal(i)
    F2 = pm2.fitting_ideal(i)
    extended = Ideal(ring2, [hom.apply(g) for g in F.gens])
    contracted = hom.preimage_module(F2.module)
    return {"i": i, "extension": extended == F2,
            "contraction": contracted == F.module}


# ---------------------------------------------------------------------------
# specialization


def _monic_from_linear(O: CoeffRing, h: LinearElement):
    r = h.r
    lead = h.coeffs[r]
    if not O.is_unit(lead):
        raise ValueError(
            "the leading coefficient must be a unit; permute the "
            "variables so that the last one carries a unit")
    u = O.inv(lead)
    poly = h.as_poly()
    out = {}
    for mono, c in poly.items():
        out[mono] = u * c
    return out


def weak_specialization(es: SyntheticEulerSystem, h: LinearElement, i: int,
                        depths, pool=None, budget: int = 4,
                        use_inverse_frobenius: bool = False) -> dict:
    """Reduction of the derived ladder modulo a linear element.

    The quotient by (h) is presented without leaving the original
    algebra: the parameter system keeps the first r - 1 variables and
    replaces the last one by the monic normalization of h, and the floor
    at depth N takes the vector (N, .., N, 1), whose last entry pins h
    itself. Each floor is identified with the corresponding quotient of
    the algebra in one variable less through an explicit substitution
    map, checked bijective. The image of the standard ladder at a
    compatible depth must land inside the specialized floor; equality is
    reported since it can genuinely fail when admissibility downstairs
    is strictly weaker.
    """
    O = es.ring.O
    r = es.ring.r
    if h.r != r or r < 1:
        raise ValueError("the linear element must match the variables")
    mps_std = es.ring.mps
    h_poly = _monic_from_linear(O, h)
    hs = list(mps_std.hs[:r - 1]) + [h_poly]
    mps_h = MonicParameterSystem(O, mps_std.h0, hs)
    bar_hs = [{m[:r - 1]: c for m, c in hp.items()}
              for hp in mps_std.hs[:r - 1]]
    mps_bar = MonicParameterSystem(O, mps_std.h0, bar_hs)

    entries = []
    images_agree = []
    prev_ring = None
    prev_ideal = None
    for N in depths:
        N = int(N)
        R_h = QuotientRing(mps_h, tuple([N] * r + [1]))
        C_h = _c_i_at(es, R_h, i, pool,
                      use_inverse_frobenius=use_inverse_frobenius)

        R_bar = QuotientRing(mps_bar, tuple([N] * r))
        images = [R_bar.var(j) for j in range(1, r)]
        tail = R_bar.zero
        for mono, c in h_poly.items():
            if mono[r - 1] == 1:
                continue
            tail = tail + R_bar.from_poly({mono[:r - 1]: c})
        images.append(-tail)
        iso = quotient_hom(R_h, R_bar, images)
        injective = iso.preimage_module(
            FinModule(R_bar.space, [])).cardinality() == 1
        if not injective or R_h.cardinality() != R_bar.cardinality():
            raise ArithmeticError(
                "substitution onto the smaller algebra is not bijective")

        pushed = None
        for Nx in range(N, N + budget + 1):
            R_x = QuotientRing(mps_std, tuple([N] * r + [Nx]))
            try:
                hom = _reduction(R_x, R_h)
            except ValueError:
                continue
            C_x = _c_i_at(es, R_x, i, pool,
                          use_inverse_frobenius=use_inverse_frobenius)
            pushed = Ideal(R_h, [hom.apply(g) for g in C_x.gens])
            break
        if pushed is None:
            raise ValueError(
                f"no standard depth within {budget} of {N} reduces onto "
                f"the specialized floor")
        if not pushed.issubset(C_h):
            raise ArithmeticError(
                "the specialized image escapes the specialized ideal")

        bar_ideal = Ideal(R_bar, [iso.apply(g) for g in C_h.gens])
        if prev_ring is not None:
            hom_down = _reduction(R_h, prev_ring)
            down = Ideal(prev_ring,
                         [hom_down.apply(g) for g in C_h.gens])
            images_agree.append(down == prev_ideal)
        entries.append({
            "N": N, "iso_bijective": True,
            "containment": True, "equality": pushed == C_h,
            "bar_generators": [str(g) for g in
                               bar_ideal.reduced_generators()],
            "ideal": C_h, "bar_ideal": bar_ideal, "ring": R_h,
            "bar_ring": R_bar,
        })
        prev_ring, prev_ideal = R_h, C_h
    return {
        "h": repr(h), "i": i,
        "entries": entries,
        "stabilized": len(images_agree) >= 2 and all(images_agree[-2:]),
        "images_agree": images_agree,
    }


def strong_specialization_report(es: SyntheticEulerSystem, a, i: int,
                                 m0_list, pool, m1prime: int = 2,
                                 b=None, Mprime: int | None = None,
                                 use_inverse_frobenius: bool = False) -> dict:
    """The one variable strong compatibility apparatus, floor by floor.

    For each m0 the quotient by (pi^m0, x - a) embeds into a quotient of
    the unramified extension generated by a root beta of t^m1' = b, with
    x - a going to pi^m0 beta at the deeper floor and to zero at the
    shallower one. The report checks the commuting square of the two
    embeddings, the matching of admissibility on both sides, and the
    agreement of the derived ideals transported along the embeddings.

    On faithfulness of the embeddings: the shallow one is one to one and
    that is checked on the nose. The deep one cannot be, at any finite
    precision with m1' > 1, because (x - a)^j lands at valuation j m0
    and the top coordinates drop below the horizon; what is true, and
    what the check pins down exactly, is that its kernel is precisely
    the truncation lattice spanned by pi^(m0' - j m0) (x - a)^j and
    nothing more. The downward containment of the derived ideals is
    exact and asserted; the transported equalities rest on input beyond
    this calculus, so they are reported as booleans, never asserted.
    """
    O = es.ring.O
    if es.ring.r != 1:
        raise ValueError("strong specialization here is one variable only")
    p = O.p
    if isinstance(a, int):
        a = O.from_int(a)
    if b is None:
        g = 2
        while pow(g, (p - 1) // 2, p) == 1:
            g += 1
        b = g
    if isinstance(b, int):
        b_int = b
    else:
        raise ValueError("b must be a rational integer lift")
    minpoly = tuple([-b_int] + [0] * (m1prime - 1) + [1])
    floors = []
    for m0 in m0_list:
        m0 = int(m0)
        m0p = m0 * m1prime
        M2 = Mprime if Mprime is not None else max(O.M, m0p + 1)
        O2 = CoeffRing(p, M2, ("unramified", minpoly))
        emb = coeff_embedding(O, O2)
        beta = O2.from_coords([0, 1] + [0] * (O2.deg - 2))
        if beta ** m1prime != O2.from_int(b_int):
            raise ArithmeticError("beta does not satisfy its equation")

        lin = {(1,): O.one}
        if not a.is_zero():
            lin[(0,)] = -a
        mps_I = MonicParameterSystem(O, es.ring.mps.h0, [lin])
        R_I = QuotientRing(mps_I, (m0, 1))
        shift = dict(lin)
        power = {(0,) * 1: O.one}
        for _ in range(m1prime):
            new = {}
            for m1, c1 in power.items():
                for m2, c2 in shift.items():
                    key = (m1[0] + m2[0],)
                    val = c1 * c2
                    prev_c = new.get(key)
                    new[key] = prev_c + val if prev_c is not None else val
            power = new
        wpow = O.uniformizer ** m0p
        cst = power.get((0,), O.zero) - wpow * O.from_int(b_int)
        power[(0,)] = cst
        power = {m: c for m, c in power.items() if not c.is_zero()}
        mps_Ip = MonicParameterSystem(O, es.ring.mps.h0, [power])
        R_Ip = QuotientRing(mps_Ip, (m0p, 1))

        mps_O2 = MonicParameterSystem(O2, emb(mps_I.h0), [])
        Rt_deep = QuotientRing(mps_O2, (m0p,))
        Rt_shallow = QuotientRing(mps_O2, (m0,))

        img_deep = Rt_deep.from_scalar(
            emb(a) + (O2.uniformizer ** m0) * beta)
        e_deep = quotient_hom(R_Ip, Rt_deep, [img_deep], coeff_map=emb)
        e_shallow = quotient_hom(R_I, Rt_shallow,
                                 [Rt_shallow.from_scalar(emb(a))],
                                 coeff_map=emb)
        # The deep embedding sends (x - a)^j to pi^(j m0) beta^j, so the
        # j-th coordinate is only seen up to pi^(m0' - j m0).  Its kernel
        # at this precision is therefore the lattice spanned by
        # pi^(m0' - j m0) (x - a)^j, never anything larger; one to one
        # holds on the nose only for the shallow embedding.
        ker_deep = e_deep.preimage_module(FinModule(Rt_deep.space, []))
        xma = R_Ip.var(1) - R_Ip.from_scalar(a)
        rows = []
        for j in range(m1prime):
            lat = R_Ip.scale(xma ** j,
                             O.uniformizer ** max(0, m0p - j * m0))
            rows.append(R_Ip.flatten(lat))
        truncation = FinModule(R_Ip.space, rows)
        ker_is_truncation = ker_deep == truncation
        inj_shallow = e_shallow.preimage_module(
            FinModule(Rt_shallow.space, [])).cardinality() == 1
        faithful = inj_shallow and ker_is_truncation

        pi1 = _reduction(R_Ip, R_I)
        pi2 = reduce_map(Rt_deep, Rt_shallow)
        square = all(
            e_shallow.apply(pi1.apply(x)) == pi2.apply(e_deep.apply(x))
            for x in R_Ip.module_basis())

        frob_deep = {}
        frob_shallow = {}
        for ell in pool:
            F = es.data.frob_matrix(R_Ip, ell)
            frob_deep[ell] = [[{(): e_deep.apply(x).coeff(())}
                               for x in row] for row in F]
            F0 = es.data.frob_matrix(R_I, ell)
            frob_shallow[ell] = [[{(): e_shallow.apply(x).coeff(())}
                                  for x in row] for row in F0]
        data_star = DeformationData(O2, 0, es.data.dim, frob_deep,
                                    name=es.data.name + "-embedded")
        data_star0 = DeformationData(O2, 0, es.data.dim, frob_shallow,
                                     name=es.data.name + "-embedded")
        adm = {}
        for ell in pool:
            deep_match = (prime_in_P(es.data, R_Ip, ell)[0]
                          == prime_in_P(data_star, Rt_deep, ell)[0])
            shallow_match = (prime_in_P(es.data, R_I, ell)[0]
                             == prime_in_P(data_star0, Rt_shallow, ell)[0])
            adm[ell] = deep_match and shallow_match
        lemma_adm = all(adm.values())
        red = _reduction(es.ring, R_Ip)
        gr1 = es.cohom.group_ring(SquarefreeLevel(()))
        base_star = [e_deep.apply(red.apply(gr1.coefficient(z, ())))
                     for z in es.cls(SquarefreeLevel(()))]
        es_star = generate_multiplicative(
            data_star, Rt_deep, sorted(pool), base_star,
            flavor=es.flavor,
            own_exponents={ell: es.own_exponents[ell] for ell in pool})

        C_Ip = _c_i_at(es, R_Ip, i, pool,
                       use_inverse_frobenius=use_inverse_frobenius)
        C_I = _c_i_at(es, R_I, i, pool,
                      use_inverse_frobenius=use_inverse_frobenius)
        C_star = _c_i_at(es_star, Rt_deep, i, pool,
                         use_inverse_frobenius=use_inverse_frobenius)

        pushed_down = Ideal(R_I, [pi1.apply(g) for g in C_Ip.gens])
        if not pushed_down.issubset(C_I):
            raise ArithmeticError(
                "derived ideal escapes its shallower floor")
        transported = Ideal(Rt_deep, [e_deep.apply(g) for g in C_Ip.gens])
        star_match = transported == C_star
        deep_pre = (C_Ip.module
                    == e_deep.preimage_module(C_star.module))
        C_star_down = Ideal(Rt_shallow,
                            [pi2.apply(g) for g in C_star.gens])
        final_eq = (pushed_down.module
                    == e_shallow.preimage_module(C_star_down.module))
        strong_eq = pushed_down == C_I

        floors.append({
            "m0": m0, "m0prime": m0p,
            "shallow_embedding_injective": inj_shallow,
            "deep_kernel_size": ker_deep.cardinality(),
            "deep_kernel_is_truncation": ker_is_truncation,
            "embedding_faithful": faithful,
            "square_commutes": square,
            "admissibility": dict(adm),
            "admissibility_match": lemma_adm,
            "containment": True,
            "star_ideal_match": star_match,
            "deep_preimage_match": deep_pre,
            "final_equality": final_eq,
            "strong_equality": strong_eq,
        })
    ok = all(f["square_commutes"] and f["admissibility_match"]
             and f["embedding_faithful"] for f in floors)
    return {"a": repr(a), "i": i, "b": b_int, "m1prime": m1prime,
            "floors": floors, "ok": ok,
            "strong_equalities": [f["strong_equality"] for f in floors],
            "final_equalities": [f["final_equality"] for f in floors]}


def cyclotomic_strong_report(es: SyntheticEulerSystem, a, b, i: int,
                             depths, pool, budget: int = 6,
                             use_inverse_frobenius: bool = False) -> dict:
    """Strong compatibility along the cyclotomic direction, two variables.

    The element h = a x_1 + x_2 + b pins the second variable. Per floor
    m three quotients enter: the target with h to the first power, the
    same with h to the m-th power, and a deepened coefficient version.
    The pool is restricted to primes congruent to one modulo pi^N where
    N is grown until the tautological character is trivial on all of
    them modulo the middle quotient, an exact check here. The three
    derived ideals then sit in a chain inside the target floor, which is
    asserted; the pinching equality of the outer two is the content of
    the strong statement and is reported.
    """
    O = es.ring.O
    if es.ring.r != 2:
        raise ValueError("the cyclotomic comparison needs two variables")
    if isinstance(a, int):
        a = O.from_int(a)
    if isinstance(b, int):
        b = O.from_int(b)
    if O.valuation(b) < 1:
        raise ValueError("the constant term of h must be divisible by pi")
    h_poly = {(0, 1): O.one}
    if not a.is_zero():
        h_poly[(1, 0)] = a
    if not b.is_zero():
        h_poly[(0, 0)] = b
    x1 = {(1, 0): O.one}
    mps_h = MonicParameterSystem(O, es.ring.mps.h0, [x1, h_poly])

    floors = []
    for m in depths:
        m = int(m)
        R_I = QuotientRing(mps_h, (m, m, 1))
        R_Imid = QuotientRing(mps_h, (m, m, m))

        N = None
        pool_N = []
        for cand in range(m, m + budget + 1):
            pool_N = [ell for ell in pool if vp(ell - 1, O.p) >= cand]
            ok = True
            for ell in pool_N:
                s = cyclotomic_twist_exponent(O, ell)
                if (R_Imid.one + R_Imid.var(2)) ** s != R_Imid.one:
                    ok = False
                    break
            if ok:
                N = cand
                break
        if N is None:
            raise ValueError(
                f"no exponent within {budget} of {m} trivializes the "
                f"character on the congruence pool")
        R_Ideep = QuotientRing(mps_h, (N, m, 1))

        vacuous = not pool_N
        levels_I = admissible_levels(es, R_I, pool_N, i=i)
        levels_mid = admissible_levels(es, R_Imid, pool_N, i=i)
        levels_deep = admissible_levels(es, R_Ideep, pool_N, i=i)
        sets_match = ({lv.primes for lv in levels_mid}
                      == {lv.primes for lv in levels_I})

        C_I = _c_i_at(es, R_I, i, pool_N, levels=levels_I,
                      use_inverse_frobenius=use_inverse_frobenius)
        C_mid = _c_i_at(es, R_Imid, i, pool_N, levels=levels_mid,
                        use_inverse_frobenius=use_inverse_frobenius)
        C_deep = _c_i_at(es, R_Ideep, i, pool_N, levels=levels_deep,
                         use_inverse_frobenius=use_inverse_frobenius)

        hom_mid = _reduction(R_Imid, R_I)
        hom_deep = _reduction(R_Ideep, R_I)
        mid_I = Ideal(R_I, [hom_mid.apply(g) for g in C_mid.gens])
        deep_I = Ideal(R_I, [hom_deep.apply(g) for g in C_deep.gens])
        if not deep_I.issubset(mid_I) or not mid_I.issubset(C_I):
            raise ArithmeticError(
                "the three floors do not chain inside the target")
        floors.append({
            "m": m, "N": N, "pool": pool_N, "vacuous": vacuous,
            "level_sets_match": sets_match,
            "pinched": deep_I == C_I,
            "middle_equals_target": mid_I == C_I,
        })
    return {"i": i, "floors": floors,
            "pinched_all": all(f["pinched"] for f in floors),
            "vacuous_any": any(f["vacuous"] for f in floors)}


# ---------------------------------------------------------------------------
# statistics


def del_statistics(es: SyntheticEulerSystem, I: QuotientRing, t: int, i: int,
                   pool=None, use_inverse_frobenius: bool = False) -> dict:
    """Minimal valuation statistics of the universal classes.

    Defined over a zero variable quotient only, where the maximal ideal
    is principal and the depth of a class is the least valuation of its
    coordinates. The prime pool at tolerance t keeps ell when both
    ell - 1 and the Euler value at one have valuation at least t; the
    statistic takes the minimum over levels with exactly i prime factors
    drawn from that pool. An empty pool of levels leaves the statistic
    undefined rather than infinite, and a class that vanishes at the
    working precision caps the value and flags it.
    """
    if I.r != 0:
        raise ValueError("statistics need a zero variable quotient")
    O = es.ring.O
    if pool is None:
        pool = sorted(es.own_exponents)
    ref = QuotientRing(MonicParameterSystem(O, es.ring.mps.h0, []), (O.M,))
    p_t = []
    for ell in sorted(set(int(q) for q in pool)):
        v_cong = vp(ell - 1, O.p) * O.e
        coeffs = _euler_coeffs(es, ref, ell)
        val = ref.zero
        for c in coeffs:
            val = val + c
        v_euler = O.valuation(val.coeff(tuple()))
        if v_euler is INF:
            v_euler = ref.c
        if min(v_cong, v_euler) >= t:
            p_t.append(ell)
    levels = [lv for lv in enumerate_levels(p_t, max_primes=i)
              if len(lv.primes) == i and lv.primes in es.classes]
    cap = I.c
    per_level = {}
    capped = False
    for level in levels:
        try:
            ku = universal_kolyvagin(
                es, level, I, use_inverse_frobenius=use_inverse_frobenius)
        except ValueError:
            continue
        vals = []
        for x in ku:
            v = O.valuation(x.coeff(tuple()))
            if v is INF or v >= cap:
                v = cap
            vals.append(v)
        d = min(vals)
        if d >= cap:
            capped = True
        per_level[level.n] = d
    if not per_level:
        return {"defined": False, "del": None, "capped": False,
                "per_level": {}, "pool": p_t, "t": t, "i": i}
    d_i = min(per_level.values())
    return {"defined": True, "del": d_i, "capped": capped and
            d_i >= cap, "per_level": per_level, "pool": p_t,
            "t": t, "i": i}
