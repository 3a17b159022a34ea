"""Iwasawa algebra quotients at finite level.

A monic parameter system over O consists of a nonzero h0 in pi*O together
with polynomials h_1, ..., h_r where h_i lies in O[x_1..x_i], is monic in
x_i, and has all its pure x_i-power coefficients below the leading one in
the maximal ideal. The quotient of O[[x_1..x_r]] by the ideal generated by
h0^{m_0}, h_1^{m_1}, ..., h_r^{m_r} is then a finite free module over
O/pi^{m_0 v(h0)} on the monomials with exponents a_i < m_i deg(h_i), and
everything here computes in that basis.

Normal forms come from dividing by the h_i^{m_i} one variable at a time,
highest variable first; the triangular shape of the system means reducing
x_i never disturbs a variable above it, so the rewriting terminates and
lands in the monomial basis. Uniqueness follows from freeness.

Ring maps between quotients are only ever produced by quotient_hom, which
refuses to build a map until the images of the defining generators are
checked to vanish in the target.
"""

from __future__ import annotations

import itertools

from .coeff import CoeffElem, CoeffRing, INF, PrecisionError
from .linalg import FinModule, Ideal, ModulePres, SiteSpace

# A polynomial is a dict from exponent tuples (length r) to nonzero
# CoeffElem values, all at the full precision of the coefficient ring.


def poly_add(a: dict, b: dict) -> dict:
    out = dict(a)
    for m, c in b.items():
        prev = out.get(m)
        nv = prev + c if prev is not None else c
        if nv.is_zero():
            out.pop(m, None)
        else:
            out[m] = nv
    return out


def poly_neg(a: dict) -> dict:
    return {m: -c for m, c in a.items()}


def poly_mul(a: dict, b: dict) -> dict:
    out: dict = {}
    for ma, ca in a.items():
        for mb, cb in b.items():
            m = tuple(x + y for x, y in zip(ma, mb))
            c = ca * cb
            prev = out.get(m)
            nv = prev + c if prev is not None else c
            if nv.is_zero():
                out.pop(m, None)
            else:
                out[m] = nv
    return out


def poly_pow(a: dict, n: int) -> dict:
    if n < 0:
        raise ValueError("negative polynomial power")
    result = None
    base = a
    while n:
        if n & 1:
            result = base if result is None else poly_mul(result, base)
        n >>= 1
        if n:
            base = poly_mul(base, base)
    if result is None:
        raise ValueError("empty power needs a ring to supply 1")
    return result


def poly_map_coeffs(fn, a: dict) -> dict:
    out = {}
    for m, c in a.items():
        v = fn(c)
        if not v.is_zero():
            out[m] = v
    return out


def _mono_str(mono) -> str:
    parts = []
    for i, e in enumerate(mono):
        if e == 1:
            parts.append(f"x{i + 1}")
        elif e > 1:
            parts.append(f"x{i + 1}^{e}")
    return "*".join(parts) if parts else "1"


def validate_mps(O: CoeffRing, h0: CoeffElem, hs) -> tuple[list[int], int]:
    """Check the monic parameter shape; return (degrees, v(h0)).

    Raises ValueError with the first violated condition.
    """
    if h0.is_zero():
        raise ValueError("h0 must be nonzero")
    v0 = O.valuation(h0)
    if v0 is INF or v0 < 1:
        raise ValueError("h0 must lie in pi*O")
    r = len(hs)
    degs = []
    for i, h in enumerate(hs):
        if not h:
            raise ValueError(f"h_{i + 1} is zero")
        d = 0
        for mono in h:
            if len(mono) != r:
                raise ValueError("exponent tuples must have length r")
            for j in range(i + 1, r):
                if mono[j]:
                    raise ValueError(
                        f"h_{i + 1} may only involve x_1..x_{i + 1}")
            d = max(d, mono[i])
        if d < 1:
            raise ValueError(f"h_{i + 1} must involve x_{i + 1}")
        lead = tuple(d if j == i else 0 for j in range(r))
        for mono, c in h.items():
            if mono[i] == d and mono != lead:
                raise ValueError(
                    f"h_{i + 1} is not monic in x_{i + 1}: the top degree "
                    "appears in a mixed term")
        if h.get(lead) != O.one:
            raise ValueError(f"h_{i + 1} must have leading coefficient 1")
        # distinguished shape: pure x_i powers below the top need
        # coefficients in pi*O (mixed monomials sit in the maximal
        # ideal automatically)
        for mono, c in h.items():
            if mono == lead:
                continue
            if all(mono[j] == 0 for j in range(r) if j != i):
                v = O.valuation(c)
                if v is INF or v < 1:
                    raise ValueError(
                        f"h_{i + 1}: coefficient of {_mono_str(mono)} must "
                        "be in pi*O")
        degs.append(d)
    return degs, int(v0)


class MonicParameterSystem:
    """Validated system (h0; h_1..h_r) over a coefficient ring."""

    def __init__(self, O: CoeffRing, h0: CoeffElem, hs):
        self.O = O
        self.h0 = h0
        self.hs = [dict(h) for h in hs]
        self.degs, self.v0 = validate_mps(O, h0, self.hs)
        self.r = len(self.hs)
        self.key = (O.key, h0.coords,
                    tuple(tuple(sorted((m, c.coords) for m, c in h.items()))
                          for h in self.hs))

    def spec(self) -> dict:
        return {
            "coeff": self.O.spec(),
            "h0": list(self.h0.coords),
            "h": [{_mono_str(m): list(c.coords) for m, c in
                   sorted(h.items())} for h in self.hs],
        }

    def __repr__(self):
        return f"MonicParameterSystem(r={self.r}, degs={self.degs}, v0={self.v0})"


class RingElem:
    """Element of a QuotientRing in normal form.

    coords maps basis monomials to canonical coefficient representatives
    mod pi^c; zero coefficients are absent.
    """

    __slots__ = ("ring", "coords")

    def __init__(self, ring: "QuotientRing", coords: dict):
        self.ring = ring
        self.coords = coords

    def __add__(self, other):
        self.ring._same(other)
        out = dict(self.coords)
        O, c = self.ring.O, self.ring.c
        for m, v in other.coords.items():
            prev = out.get(m)
            nv = O.reduce_mod_pi(prev + v, c) if prev is not None else v
            if nv.is_zero():
                out.pop(m, None)
            else:
                out[m] = nv
        return RingElem(self.ring, out)

    def __neg__(self):
        O, c = self.ring.O, self.ring.c
        return RingElem(self.ring,
                        {m: O.reduce_mod_pi(-v, c)
                         for m, v in self.coords.items()})

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, RingElem):
            self.ring._same(other)
            return self.ring._mul(self, other)
        if isinstance(other, (int, CoeffElem)):
            return self.ring.scale(self, other)
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, (int, CoeffElem)):
            return self.ring.scale(self, other)
        return NotImplemented

    def __pow__(self, n: int):
        if n < 0:
            raise ValueError("negative ring power")
        out = self.ring.one
        base = self
        while n:
            if n & 1:
                out = out * base
            n >>= 1
            if n:
                base = base * base
        return out

    def is_zero(self) -> bool:
        return not self.coords

    def __eq__(self, other) -> bool:
        return (isinstance(other, RingElem) and self.ring.key == other.ring.key
                and self.coords == other.coords)

    def __hash__(self):
        return hash((self.ring.key, self.ring.flatten(self)))

    def coeff(self, mono) -> CoeffElem:
        return self.coords.get(tuple(mono), self.ring.O.zero)

    def __repr__(self):
        if not self.coords:
            return "0"
        parts = []
        for m in sorted(self.coords):
            c = self.coords[m]
            cs = repr(c)
            ms = _mono_str(m)
            parts.append(cs if ms == "1" else f"({cs})*{ms}")
        return " + ".join(parts)


class QuotientRing:
    """O[[x_1..x_r]] modulo (h0^{m_0}, h_1^{m_1}, .., h_r^{m_r}).

    depths is the tuple (m_0, m_1, .., m_r). The ring is free over
    O/pi^{m_0 v(h0)} on monomials with exponent a_i < m_i deg(h_i); being
    a quotient of a regular local ring by a system of parameters it is
    self-injective, which is what licenses extend_hom's certified mode.
    """

    def __init__(self, mps: MonicParameterSystem, depths):
        depths = tuple(int(x) for x in depths)
        if len(depths) != mps.r + 1:
            raise ValueError("depths must have length r + 1")
        if any(m < 1 for m in depths):
            raise ValueError("all depths must be at least 1")
        self.mps = mps
        self.O = mps.O
        self.r = mps.r
        self.depths = depths
        self.c = depths[0] * mps.v0
        if self.c > self.O.cap:
            raise PrecisionError(
                f"quotient needs pi^{self.c} but the coefficient ring "
                f"stores only pi^{self.O.cap}")
        self.coeff_caps = self.O.pi_caps(self.c)
        self.D = [depths[i + 1] * mps.degs[i] for i in range(self.r)]
        self._low = []
        for i in range(self.r):
            g = poly_pow(mps.hs[i], depths[i + 1])
            lead = tuple(self.D[i] if j == i else 0 for j in range(self.r))
            assert g.get(lead) == self.O.one
            self._low.append({m: c for m, c in g.items() if m != lead})
        self.basis = list(itertools.product(*[range(d) for d in self.D]))
        self.basis_index = {m: i for i, m in enumerate(self.basis)}
        caps = []
        for _ in self.basis:
            caps.extend(self.coeff_caps)
        self.space = SiteSpace(self.O.p, caps)
        self.key = (mps.key, depths)
        self.zero = RingElem(self, {})
        one = self.O.reduce_mod_pi(self.O.one, self.c)
        self.one = RingElem(self, {} if one.is_zero()
                            else {tuple([0] * self.r): one})
        self.certified_selfinjective = True
        self._nf_cache: dict = {}
        self._module = None
        self._mod_basis = None

    def _same(self, other):
        if not isinstance(other, RingElem) or other.ring.key != self.key:
            raise ValueError("elements belong to different rings")

    # -- construction of elements -------------------------------------------

    def from_poly(self, poly: dict) -> RingElem:
        return RingElem(self, self._reduce_poly(poly))

    def from_scalar(self, c) -> RingElem:
        if isinstance(c, int):
            c = self.O.from_int(c)
        red = self.O.reduce_mod_pi(c, self.c)
        if red.is_zero():
            return self.zero
        return RingElem(self, {tuple([0] * self.r): red})

    def var(self, i: int) -> RingElem:
        """The image of x_i (1-based index)."""
        if not 1 <= i <= self.r:
            raise ValueError("variable index out of range")
        mono = tuple(1 if j == i - 1 else 0 for j in range(self.r))
        return self.from_poly({mono: self.O.one})

    def random_elem(self, rng) -> RingElem:
        coords = {}
        for m in self.basis:
            c = self.O.reduce_mod_pi(self.O.random_elem(rng), self.c)
            if not c.is_zero():
                coords[m] = c
        return RingElem(self, coords)

    # -- normal form ----------------------------------------------------------

    def _reduce_poly(self, poly: dict) -> dict:
        f = dict(poly)
        for i in range(self.r - 1, -1, -1):
            D = self.D[i]
            low = self._low[i]
            while True:
                worst = None
                for mono in f:
                    if mono[i] >= D and (worst is None or mono > worst):
                        worst = mono
                if worst is None:
                    break
                coef = f.pop(worst)
                if coef.is_zero():
                    continue
                q = worst[:i] + (worst[i] - D,) + worst[i + 1:]
                for beta, cb in low.items():
                    target = tuple(a + b for a, b in zip(q, beta))
                    add = -(coef * cb)
                    prev = f.get(target)
                    nv = prev + add if prev is not None else add
                    if nv.is_zero():
                        f.pop(target, None)
                    else:
                        f[target] = nv
        out = {}
        for mono, coef in f.items():
            red = self.O.reduce_mod_pi(coef, self.c)
            if not red.is_zero():
                assert mono in self.basis_index
                out[mono] = red
        return out

    def _monomial_nf(self, gamma) -> dict:
        if gamma in self.basis_index:
            return {gamma: self.O.reduce_mod_pi(self.O.one, self.c)}
        hit = self._nf_cache.get(gamma)
        if hit is None:
            hit = self._reduce_poly({gamma: self.O.one})
            self._nf_cache[gamma] = hit
        return hit

    def _mul(self, a: RingElem, b: RingElem) -> RingElem:
        acc: dict = {}
        for ma, ca in a.coords.items():
            for mb, cb in b.coords.items():
                c = ca * cb
                gamma = tuple(x + y for x, y in zip(ma, mb))
                for m2, c2 in self._monomial_nf(gamma).items():
                    add = c * c2
                    prev = acc.get(m2)
                    nv = prev + add if prev is not None else add
                    acc[m2] = nv
        out = {}
        for m, v in acc.items():
            red = self.O.reduce_mod_pi(v, self.c)
            if not red.is_zero():
                out[m] = red
        return RingElem(self, out)

    def scale(self, a: RingElem, s) -> RingElem:
        if isinstance(s, int):
            s = self.O.from_int(s)
        out = {}
        for m, v in a.coords.items():
            red = self.O.reduce_mod_pi(v * s, self.c)
            if not red.is_zero():
                out[m] = red
        return RingElem(self, out)

    # -- flattening -------------------------------------------------------

    def flatten(self, elem: RingElem) -> tuple:
        p = self.O.p
        vec = []
        for mono in self.basis:
            c = elem.coords.get(mono)
            if c is None:
                vec.extend([0] * self.O.deg)
            else:
                for t, n in enumerate(self.coeff_caps):
                    vec.append(c.coords[t] % p**n if n else 0)
        return tuple(vec)

    def unflatten(self, vec) -> RingElem:
        d = self.O.deg
        coords = {}
        for bi, mono in enumerate(self.basis):
            chunk = list(vec[bi * d:(bi + 1) * d])
            c = self.O.reduce_mod_pi(self.O.from_coords(chunk), self.c)
            if not c.is_zero():
                coords[mono] = c
        return RingElem(self, coords)

    def module_basis(self):
        """Ring elements whose Z-span is the whole ring (the sites)."""
        if self._mod_basis is None:
            out = []
            for mono in self.basis:
                for t in range(self.O.deg):
                    c = self.O.from_coords([1 if j == t else 0
                                            for j in range(self.O.deg)])
                    red = self.O.reduce_mod_pi(c, self.c)
                    if red.is_zero():
                        out.append(self.zero)
                    else:
                        out.append(RingElem(self, {mono: red}))
            self._mod_basis = out
        return self._mod_basis

    def as_module(self) -> ModulePres:
        """The ring as a module over itself, for hom cross-checks only."""
        if self._module is None:
            dim = self.space.dim
            rows = [[1 if j == i else 0 for j in range(dim)]
                    for i in range(dim)]
            gens = []
            if self.O.deg > 1:
                gens.append(self.from_scalar(self.O.from_coords(
                    [0, 1] + [0] * (self.O.deg - 2))))
            for i in range(1, self.r + 1):
                gens.append(self.var(i))
            mats = [[list(self.flatten(g * b)) for b in self.module_basis()]
                    for g in gens]
            self._module = ModulePres(self.space, rows, mats)
        return self._module

    def ideal(self, gens) -> Ideal:
        return Ideal(self, [g if isinstance(g, RingElem)
                            else self.from_scalar(g) for g in gens])

    def annihilator(self, elem: RingElem) -> Ideal:
        """The ideal of z with z * elem = 0."""
        from .linalg import preimage
        mat = [list(self.flatten(b * elem)) for b in self.module_basis()]
        zr = self.space.zero_rows()
        sp = self.space
        if zr:
            rows = preimage(mat, zr, sp.p, sp.N)
        else:
            from .linalg import kernel
            rows = kernel(mat, sp.p, sp.N)
        return Ideal(self, [self.unflatten(r) for r in rows])

    def power_ideal(self, depths2) -> Ideal:
        """Image in this ring of the ideal attached to other depths."""
        depths2 = tuple(int(x) for x in depths2)
        if len(depths2) != self.r + 1:
            raise ValueError("depths must have length r + 1")
        gens = [self.from_scalar(self.mps.h0 ** depths2[0])]
        for i in range(self.r):
            gens.append(self.from_poly(poly_pow(self.mps.hs[i],
                                                depths2[i + 1])))
        return self.ideal(gens)

    def cardinality(self) -> int:
        p = self.O.p
        card = 1
        for n in self.coeff_caps:
            card *= p**n
        return card ** len(self.basis)

    def spec(self) -> dict:
        out = self.mps.spec()
        out["depths"] = list(self.depths)
        return out

    def __repr__(self):
        return (f"QuotientRing(r={self.r}, depths={self.depths}, "
                f"monomials={len(self.basis)})")


def quotient_ring(mps: MonicParameterSystem, depths) -> QuotientRing:
    return QuotientRing(mps, depths)


# ---------------------------------------------------------------------------
# ring maps


class QuotientHom:
    """A certified O-algebra map between quotient rings.

    Built only through quotient_hom, which verifies that every defining
    generator of the source ideal dies in the target before handing the
    object out.
    """

    def __init__(self, source: QuotientRing, target: QuotientRing,
                 var_images, coeff_map):
        self.source = source
        self.target = target
        self.var_images = list(var_images)
        self.coeff_map = coeff_map
        self._powers = [{0: target.one} for _ in range(source.r)]
        self._matrix = None

    def _var_pow(self, i: int, k: int) -> RingElem:
        tab = self._powers[i]
        if k not in tab:
            best = max(e for e in tab if e <= k)
            cur = tab[best]
            while best < k:
                cur = cur * self.var_images[i]
                best += 1
                tab[best] = cur
        return tab[k]

    def apply(self, elem: RingElem) -> RingElem:
        if elem.ring.key != self.source.key:
            raise ValueError("element not in the source ring")
        out = self.target.zero
        for mono, c in elem.coords.items():
            term = self.target.from_scalar(self.coeff_map(c))
            for i, e in enumerate(mono):
                if e:
                    term = term * self._var_pow(i, e)
            out = out + term
        return out

    def matrix(self):
        """Flat matrix of the map on site coordinates (rows = source sites)."""
        if self._matrix is None:
            self._matrix = [list(self.target.flatten(self.apply(b)))
                            for b in self.source.module_basis()]
        return self._matrix

    def push_module(self, m: FinModule) -> FinModule:
        rows = []
        for row in m.rows:
            elem = self.source.unflatten(row)
            rows.append(list(self.target.flatten(self.apply(elem))))
        return FinModule(self.target.space, rows)

    def push_ideal(self, ideal: Ideal) -> Ideal:
        return Ideal(self.target, [self.apply(g) for g in ideal.gens])

    def preimage_module(self, m: FinModule) -> FinModule:
        from .linalg import preimage
        sp = self.source.space
        tp = self.target.space
        N = max(sp.N, tp.N)
        lift_t = tp.p ** (N - tp.N)
        mat = [[x * lift_t % tp.p**N for x in row] for row in self.matrix()]
        sub = [[x * lift_t % tp.p**N for x in row]
               for row in list(m.rows) + tp.zero_rows()]
        rows = preimage(mat, sub, sp.p, N)
        return FinModule(sp, [list(r) for r in rows])


def quotient_hom(source: QuotientRing, target: QuotientRing,
                 var_images, coeff_map=None) -> QuotientHom:
    """Build the algebra map x_i -> var_images[i], checking it exists.

    coeff_map takes coefficients of the source's O to the target's; None
    means the rings share the same O data and coefficients pass through.
    Raises ValueError if any defining generator of the source ideal has a
    nonzero image, since no such ring map exists.
    """
    if coeff_map is None:
        if (source.O.kind, source.O.minpoly_exact, source.O.p) != \
           (target.O.kind, target.O.minpoly_exact, target.O.p):
            raise ValueError("coefficient rings differ; pass coeff_map")
        tgt_O = target.O

        def coeff_map(c, _t=tgt_O):
            return _t.from_coords([x % _t.pM for x in c.coords])

    if len(var_images) != source.r:
        raise ValueError("need one image per variable")
    for v in var_images:
        if not isinstance(v, RingElem) or v.ring.key != target.key:
            raise ValueError("variable images must lie in the target")
    hom = QuotientHom(source, target, var_images, coeff_map)
    # well-definedness: all defining generators must die
    m0 = source.depths[0]
    pi_img = target.from_scalar(coeff_map(source.O.uniformizer))
    if not (pi_img ** source.c).is_zero():
        raise ValueError("pi^c does not vanish in the target")
    h0_img = target.from_scalar(coeff_map(source.mps.h0))
    if not (h0_img ** m0).is_zero():
        raise ValueError("h0^m0 does not vanish in the target")
    for i in range(source.r):
        img = _eval_poly(source.mps.hs[i], hom)
        if not (img ** source.depths[i + 1]).is_zero():
            raise ValueError(f"h_{i + 1}^m does not vanish in the target")
    return hom


def _eval_poly(poly: dict, hom: QuotientHom) -> RingElem:
    out = hom.target.zero
    for mono, c in poly.items():
        term = hom.target.from_scalar(hom.coeff_map(c))
        for i, e in enumerate(mono):
            if e:
                term = term * hom._var_pow(i, e)
        out = out + term
    return out


def reduce_map(source: QuotientRing, target: QuotientRing) -> QuotientHom:
    """The canonical surjection onto a shallower quotient of the same system."""
    if source.mps.key != target.mps.key:
        raise ValueError("reduce_map needs the same parameter system")
    if any(a < b for a, b in zip(source.depths, target.depths)):
        raise ValueError("target depths must not exceed source depths")
    return quotient_hom(source, target,
                        [target.var(i + 1) for i in range(source.r)])


def multiply_by_component(i: int, source: QuotientRing,
                          target: QuotientRing):
    """Multiplication by h_i from one quotient into the next deeper one.

    source and target must differ by one in the i-th exponent only,
    i = 0 meaning h0. The map lifts the canonical representative and
    multiplies by h_i; three facts are certified on construction and
    any failure raises, since each would falsify a structural property
    of these quotients. The map is well defined (the defining powers of
    the source die), one to one, and its image is exactly the
    annihilator of h_i^{m_i} in the target. Returns the map together
    with the report of the checks.
    """
    from .linalg import FinModule, kernel, preimage

    if source.mps.key != target.mps.key:
        raise ValueError("both rings must share the parameter system")
    if not 0 <= i <= source.r:
        raise ValueError("component index out of range")
    expect = tuple(m + (1 if j == i else 0)
                   for j, m in enumerate(source.depths))
    if tuple(target.depths) != expect:
        raise ValueError(
            "target must deepen exactly the chosen exponent by one")
    mps = source.mps
    if i == 0:
        hi = target.from_scalar(mps.h0)
        power = target.from_scalar(mps.h0 ** source.depths[0])
    else:
        hi = target.from_poly(mps.hs[i - 1])
        power = target.from_poly(poly_pow(mps.hs[i - 1], source.depths[i]))

    def apply(x: RingElem) -> RingElem:
        source._same(x)
        return target.from_poly(dict(x.coords)) * hi

    for j in range(source.r + 1):
        if j == 0:
            g = target.from_scalar(mps.h0 ** source.depths[0])
        else:
            g = target.from_poly(poly_pow(mps.hs[j - 1], source.depths[j]))
        if not (g * hi).is_zero():
            raise ArithmeticError(
                "multiplication by the component is not well defined")
    mat = [list(target.flatten(apply(b))) for b in source.module_basis()]
    sp = target.space
    zr = sp.zero_rows()
    rows = preimage(mat, zr, sp.p, sp.N) if zr else kernel(mat, sp.p, sp.N)
    ker = FinModule(source.space, [list(r) for r in rows])
    if ker.cardinality() != 1:
        raise ArithmeticError("multiplication by the component is not "
                              "one to one")
    image = FinModule(sp, mat)
    ann = target.annihilator(power)
    if image != ann.module:
        raise ArithmeticError(
            "the image does not match the annihilator of the power")
    report = {"i": i, "injective": True, "kernel_size": 1,
              "image_is_annihilator": True}
    return apply, report


def coeff_embedding(O1: CoeffRing, O2: CoeffRing):
    """Coefficient map for scalar extension; identity data or Z_p base."""
    if O1.p != O2.p:
        raise ValueError("different residue characteristics")
    if (O1.kind, O1.minpoly_exact) == (O2.kind, O2.minpoly_exact):
        return lambda c: O2.from_coords([x % O2.pM for x in c.coords])
    if O1.deg == 1:
        return lambda c: O2.from_coords(
            [c.coords[0] % O2.pM] + [0] * (O2.deg - 1))
    raise ValueError("unsupported coefficient extension")


def scalar_extension(ring: QuotientRing, O2: CoeffRing):
    """Extend scalars to O2; returns (extended ring, inclusion hom).

    The parameter system is carried across coefficientwise and the depths
    are kept; h0 keeps its ideal but its valuation is measured in the new
    uniformizer, so the coefficient cap scales by the ramification index.
    """
    emb = coeff_embedding(ring.O, O2)
    mps2 = MonicParameterSystem(
        O2, emb(ring.mps.h0),
        [poly_map_coeffs(emb, h) for h in ring.mps.hs])
    ring2 = QuotientRing(mps2, ring.depths)
    hom = quotient_hom(ring, ring2,
                       [ring2.var(i + 1) for i in range(ring.r)], emb)
    return ring2, hom


# ---------------------------------------------------------------------------
# affine transport


class AffineTransform:
    """x_j -> sum_k U[j][k] x_k + a[j] with U invertible over O, a in pi or x."""

    def __init__(self, O: CoeffRing, U, a):
        self.O = O
        self.r = len(a)
        self.U = [[c if isinstance(c, CoeffElem) else O.from_int(c)
                   for c in row] for row in U]
        self.a = [c if isinstance(c, CoeffElem) else O.from_int(c) for c in a]
        if len(self.U) != self.r or any(len(row) != self.r for row in self.U):
            raise ValueError("U must be square of size r")
        for sh in self.a:
            v = O.valuation(sh)
            if not (v is INF or v >= 1):
                raise ValueError("shift entries must lie in pi*O")
        det = _det(O, self.U)
        if not O.is_unit(det):
            raise ValueError("U must be invertible over O")

    def image_polys(self):
        """The substituted variables as polynomials, x_j -> U x + a."""
        out = []
        for j in range(self.r):
            poly = {}
            if not self.a[j].is_zero():
                poly[tuple([0] * self.r)] = self.a[j]
            for k in range(self.r):
                if not self.U[j][k].is_zero():
                    mono = tuple(1 if t == k else 0 for t in range(self.r))
                    poly[mono] = self.U[j][k]
            out.append(poly)
        return out

    def inverse(self) -> "AffineTransform":
        Uinv = _mat_inv(self.O, self.U)
        a2 = []
        for j in range(self.r):
            s = self.O.zero
            for k in range(self.r):
                s = s + Uinv[j][k] * self.a[k]
            a2.append(-s)
        return AffineTransform(self.O, Uinv, a2)

    def compose(self, other: "AffineTransform") -> "AffineTransform":
        """self after other: x -> self.U (other.U x + other.a) + self.a."""
        if self.O.key != other.O.key or self.r != other.r:
            raise ValueError("transforms do not match")
        O = self.O
        U = [[sum((self.U[j][t] * other.U[t][k] for t in range(self.r)),
                  O.zero) for k in range(self.r)] for j in range(self.r)]
        a = []
        for j in range(self.r):
            s = self.a[j]
            for t in range(self.r):
                s = s + self.U[j][t] * other.a[t]
            a.append(s)
        return AffineTransform(O, U, a)

    def __eq__(self, other):
        return (isinstance(other, AffineTransform)
                and self.O.key == other.O.key and self.r == other.r
                and self.U == other.U and self.a == other.a)


def _det(O: CoeffRing, m):
    n = len(m)
    if n == 0:
        return O.one
    if n == 1:
        return m[0][0]
    total = O.zero
    sign = 1
    for j in range(n):
        minor = [row[:j] + row[j + 1:] for row in m[1:]]
        term = m[0][j] * _det(O, minor)
        total = total + term if sign > 0 else total - term
        sign = -sign
    return total


def _mat_inv(O: CoeffRing, m):
    n = len(m)
    det = _det(O, m)
    dinv = O.inv(det)
    out = [[O.zero] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            minor = [row[:i] + row[i + 1:]
                     for k, row in enumerate(m) if k != j]
            cof = _det(O, minor)
            if (i + j) % 2:
                cof = -cof
            out[i][j] = cof * dinv
    return out


def apply_affine(mps: MonicParameterSystem, T: AffineTransform):
    """Transport a parameter system along an affine substitution.

    Returns the new system; raises ValueError if the substituted system
    leaves the monic triangular shape (the transform is then not a legal
    transport for this system).
    """
    if T.O.key != mps.O.key or T.r != mps.r:
        raise ValueError("transform does not match the system")
    images = T.image_polys()
    new_hs = []
    for i, h in enumerate(mps.hs):
        sub: dict = {}
        for mono, c in h.items():
            term = {tuple([0] * mps.r): c}
            for j, e in enumerate(mono):
                for _ in range(e):
                    term = poly_mul(term, images[j])
            sub = poly_add(sub, term)
        # normalize the leading coefficient in x_{i+1} back to 1
        d = mps.degs[i]
        lead = tuple(d if j == i else 0 for j in range(mps.r))
        lc = sub.get(lead)
        if lc is None or not mps.O.is_unit(lc):
            raise ValueError("transport destroys monicity")
        inv = mps.O.inv(lc)
        sub = poly_map_coeffs(lambda c: c * inv, sub)
        new_hs.append(sub)
    out = MonicParameterSystem(mps.O, mps.h0, new_hs)
    if out.degs != mps.degs:
        raise ValueError("transport changes the parameter degrees")
    return out


def affine_isomorphism(R1: QuotientRing, T: AffineTransform):
    """Quotients of a system and its affine transport are isomorphic.

    Returns (R2, fwd, bwd) where fwd: R1 -> R2 sends x_j to the
    substituted variable and bwd inverts it; both are certified by
    quotient_hom and the round trips are checked on the variables.
    """
    mps2 = apply_affine(R1.mps, T)
    R2 = QuotientRing(mps2, R1.depths)
    images = T.image_polys()
    fwd = quotient_hom(R1, R2, [R2.from_poly(pl) for pl in images])
    Tinv = T.inverse()
    images_inv = Tinv.image_polys()
    bwd = quotient_hom(R2, R1, [R1.from_poly(pl) for pl in images_inv])
    for i in range(1, R1.r + 1):
        assert bwd.apply(fwd.apply(R1.var(i))) == R1.var(i)
        assert fwd.apply(bwd.apply(R2.var(i))) == R2.var(i)
    return R2, fwd, bwd


def _elem_matrix(O: CoeffRing, r: int, entries: dict):
    out = [[O.one if j == k else O.zero for k in range(r)]
           for j in range(r)]
    for (j, k), c in entries.items():
        out[j][k] = c
    return out


def elementary_decomposition(T: AffineTransform):
    """Write T as a composition of elementary affine transforms.

    The factors are single coordinate shifts, single unit scalings of
    one variable, and transvections adding a multiple of one variable
    to another; composing the returned list in order reproduces T
    entrywise. The linear part is factored by row reduction over O,
    which succeeds because the matrix is invertible over a local ring:
    every column of the remaining block carries a unit somewhere at or
    below the pivot.
    """
    O = T.O
    r = T.r
    factors = []
    for j in range(r):
        if not T.a[j].is_zero():
            shift = [T.a[j] if k == j else O.zero for k in range(r)]
            factors.append(AffineTransform(
                O, _elem_matrix(O, r, {}), shift))
    A = [[c for c in row] for row in T.U]
    zeros = [O.zero] * r
    ops = []
    for j in range(r):
        if not O.is_unit(A[j][j]):
            pick = None
            for i in range(j + 1, r):
                if O.is_unit(A[i][j]):
                    pick = i
                    break
            if pick is None:
                raise ArithmeticError("no unit pivot; the matrix is not "
                                      "invertible over the local ring")
            for k in range(r):
                A[j][k] = A[j][k] + A[pick][k]
            ops.append(("add", j, pick, O.one))
        piv = A[j][j]
        if piv != O.one:
            u = O.inv(piv)
            for k in range(r):
                A[j][k] = u * A[j][k]
            ops.append(("scale", j, u))
        for i in range(r):
            if i == j or A[i][j].is_zero():
                continue
            c = A[i][j]
            for k in range(r):
                A[i][k] = A[i][k] - c * A[j][k]
            ops.append(("add", i, j, -c))
    # the recorded row operations reduce U to the identity, so U is the
    # product of their inverses taken in the original order
    for op in ops:
        if op[0] == "add":
            _, j, k, c = op
            factors.append(AffineTransform(
                O, _elem_matrix(O, r, {(j, k): -c}), zeros))
        else:
            _, j, u = op
            diag = _elem_matrix(O, r, {(j, j): O.inv(u)})
            factors.append(AffineTransform(O, diag, zeros))
    out = AffineTransform(O, _elem_matrix(O, r, {}), zeros)
    for f in factors:
        out = out.compose(f)
    if out != T:
        raise ArithmeticError("decomposition does not recompose")
    return factors
