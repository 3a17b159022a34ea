"""Higher Fitting ideals of finitely presented modules, and their growth.

A module is given by a finite presentation: n generators and a list of
relation rows. Fitt_i is the ideal generated by the (n-i)-minors of the
relation matrix; determinants are expanded division-free, which is the
only safe option over a quotient ring full of zero divisors.

The growth analysis works along one-variable specializations: a sequence
of levels N produces lengths that are eventually affine in N, and the
stabilized first difference is the local exponent the reports quote.
"""

from __future__ import annotations

import itertools

from .coeff import INF, CoeffRing
from .lam import QuotientRing, RingElem
from .linalg import Ideal


def _det_ring(ring: QuotientRing, rows) -> RingElem:
    """Determinant by Laplace expansion with memo on column subsets."""
    n = len(rows)
    if n == 0:
        return ring.one
    memo: dict = {}

    def rec(i: int, cols: tuple) -> RingElem:
        if i == n:
            return ring.one
        key = cols
        hit = memo.get(key)
        if hit is not None:
            return hit
        total = ring.zero
        for pos, j in enumerate(cols):
            a = rows[i][j]
            if a.is_zero():
                continue
            sub = rec(i + 1, cols[:pos] + cols[pos + 1:])
            term = a * sub
            total = total + term if pos % 2 == 0 else total - term
        memo[key] = total
        return total

    return rec(0, tuple(range(n)))


class PresentedModule:
    """Cokernel of a relation matrix over a quotient ring.

    rows: list of relations, each a list of ngens ring elements.
    """

    MINOR_BUDGET = 6

    def __init__(self, ring: QuotientRing, ngens: int, rows):
        self.ring = ring
        self.ngens = ngens
        self.rows = [list(r) for r in rows]
        for r in self.rows:
            if len(r) != ngens:
                raise ValueError("relation width does not match ngens")

    def fitting_ideal(self, i: int) -> Ideal:
        """Fitt_i: the ideal of (ngens - i)-minors of the relations."""
        if i < 0:
            raise ValueError("negative Fitting index")
        k = self.ngens - i
        if k <= 0:
            return self.ring.ideal([self.ring.one])
        if k > len(self.rows):
            return self.ring.ideal([self.ring.zero])
        if k > self.MINOR_BUDGET:
            raise ValueError(
                f"{k}-minors exceed the determinant budget "
                f"({self.MINOR_BUDGET})")
        dets = []
        for rsel in itertools.combinations(range(len(self.rows)), k):
            for csel in itertools.combinations(range(self.ngens), k):
                sub = [[self.rows[a][b] for b in csel] for a in rsel]
                dets.append(_det_ring(self.ring, sub))
        return self.ring.ideal(dets)

    def map(self, hom) -> "PresentedModule":
        """Base change the presentation along a certified ring map."""
        rows = [[hom.apply(x) for x in r] for r in self.rows]
        return PresentedModule(hom.target, self.ngens, rows)


def maximal_ideal_generators(ring: QuotientRing):
    gens = [ring.from_scalar(ring.O.uniformizer)]
    for i in range(1, ring.r + 1):
        gens.append(ring.var(i))
    return gens


def min_generators(ideal: Ideal) -> int:
    """Minimal number of generators, read off from I / m I.

    Exact because both cardinalities are exact; the quotient is a vector
    space over the residue field, so the answer is the log of the index
    in base |k|.
    """
    ring = ideal.ring
    if ideal.is_zero():
        return 0
    mgens = maximal_ideal_generators(ring)
    sub = Ideal(ring, [m * g for m in mgens for g in ideal.gens])
    idx = ideal.cardinality() // sub.cardinality()
    q = ring.O.p ** ring.O.f_res
    dim = 0
    while idx > 1:
        if idx % q:
            raise ArithmeticError("index is not a power of the residue size")
        idx //= q
        dim += 1
    return dim


class StructureData:
    """A verified chain decomposition: M = R/(f_1) + .. + R/(f_s), f_j | f_{j+1}.

    The divisibility claims are certified at construction by ideal
    membership in the quotient, which is exactly divisibility there.
    """

    def __init__(self, ring: QuotientRing, fs):
        self.ring = ring
        self.fs = list(fs)
        for a, b in zip(self.fs, self.fs[1:]):
            if not ring.ideal([a]).contains(b):
                raise ValueError("structure data violates the divisor chain")

    def fitting(self, i: int) -> Ideal:
        """Closed form: Fitt_i = (f_1 * .. * f_{s-i})."""
        s = len(self.fs)
        if i >= s:
            return self.ring.ideal([self.ring.one])
        prod = self.ring.one
        for f in self.fs[:s - i]:
            prod = prod * f
        return self.ring.ideal([prod])

    def presentation(self) -> PresentedModule:
        s = len(self.fs)
        rows = []
        for j, f in enumerate(self.fs):
            row = [self.ring.zero] * s
            row[j] = f
            rows.append(row)
        return PresentedModule(self.ring, s, rows)


def char_ideal(sd: StructureData) -> Ideal:
    return sd.fitting(0)


# ---------------------------------------------------------------------------
# one-variable specialization lengths


def _eval_poly_at(O: CoeffRing, g: dict, a):
    """Evaluate a one-variable polynomial dict at a coefficient value."""
    deg = max(k for (k,) in g)
    acc = O.zero
    for k in range(deg, -1, -1):
        acc = acc * a
        c = g.get((k,))
        if c is not None:
            acc = acc + c
    return acc


def specialization_length(O: CoeffRing, g: dict, direction: str, N: int):
    """Length of the level-N specialized quotient along a linear direction.

    direction "unit" specializes x to a - pi^N for the attached point a = 0
    (callers shift g beforehand for other points); the length is the
    valuation of g(-pi^N). direction "pi" measures the mixed valuation
    min_k (N * v(g_k) + k), the length along the residue fiber.

    Returns (length, capped): capped means the stored precision cannot
    rule out a longer answer, so the value is only a lower bound.
    """
    if not g:
        return 0, True
    if direction == "unit":
        val = O.valuation(_eval_poly_at(O, g, -(O.uniformizer ** N)))
        if val is INF or val >= O.cap:
            return O.cap, True
        return int(val), False
    if direction == "pi":
        best = None
        floor = None  # lower bound from coefficients invisible at precision
        deg = max(k for (k,) in g)
        for k in range(deg + 1):
            c = g.get((k,))
            v = O.valuation(c) if c is not None else INF
            if v is INF:
                cand_floor = N * O.cap + k
                if floor is None or cand_floor < floor:
                    floor = cand_floor
            else:
                cand = N * int(v) + k
                if best is None or cand < best:
                    best = cand
        if best is None:
            return N * O.cap, True
        capped = floor is not None and floor < best
        return best, capped
    raise ValueError(f"unknown direction {direction!r}")


def localized_fitting_exponents(O: CoeffRing, fs, direction: str,
                                levels) -> dict:
    """Per-index growth data for the chain f_1 | .. | f_s.

    For each level N the specialization lengths of the f_j are sorted
    increasingly and the i-th value is the sum of the first s - i of
    them, mirroring the closed-form Fitting ideals. Returns
    {"levels": [...], "values": {i: [...]}, "capped": bool}.
    """
    fs = list(fs)
    s = len(fs)
    levels = list(levels)
    values = {i: [] for i in range(s + 1)}
    capped = False
    for N in levels:
        lens = []
        for g in fs:
            ln, cap = specialization_length(O, g, direction, N)
            capped = capped or cap
            lens.append(ln)
        lens.sort()
        for i in range(s + 1):
            values[i].append(sum(lens[:s - i]))
    return {"levels": levels, "values": values, "capped": capped}


def estimate_local_exponent(series, stable_runs: int = 3):
    """Stabilized first difference of an eventually affine sequence.

    series is a list of values at consecutive levels. Returns
    (slope, stable) where stable means the last stable_runs differences
    agree; slope is that common difference (None when never stable).
    """
    diffs = [b - a for a, b in zip(series, series[1:])]
    if len(diffs) < stable_runs:
        return None, False
    tail = diffs[-stable_runs:]
    if all(d == tail[0] for d in tail):
        return tail[0], True
    return None, False


# ---------------------------------------------------------------------------
# choosing linear elements away from finitely many bad directions


class LinearElement:
    """A linear form a_0 pi + a_1 x_1 + .. + a_r x_r with its direction data.

    The direction invariants are what specialization sees: the projective
    point (a_1 : .. : a_r) normalized at its first unit entry, together
    with the ratio a_0 / a_{i_0} at that entry. Forms with no unit among
    a_1..a_r specialize along the residue fiber instead.
    """

    def __init__(self, O: CoeffRing, coeffs):
        self.O = O
        self.coeffs = [c if not isinstance(c, int) else O.from_int(c)
                       for c in coeffs]
        if len(self.coeffs) < 2:
            raise ValueError("need a_0 and at least one variable")
        self.r = len(self.coeffs) - 1

    def invariants(self):
        O = self.O
        i0 = None
        for i in range(1, self.r + 1):
            if O.is_unit(self.coeffs[i]):
                i0 = i
                break
        if i0 is None:
            return ("pi-direction",)
        inv = O.inv(self.coeffs[i0])
        point = tuple((self.coeffs[j] * inv).coords
                      for j in range(1, self.r + 1))
        ratio = (self.coeffs[0] * inv).coords
        return ("unit-direction", point, ratio)

    def as_poly(self) -> dict:
        out = {}
        c0 = self.coeffs[0] * self.O.uniformizer
        if not c0.is_zero():
            out[tuple([0] * self.r)] = c0
        for i in range(1, self.r + 1):
            if not self.coeffs[i].is_zero():
                mono = tuple(1 if j == i - 1 else 0 for j in range(self.r))
                out[mono] = self.coeffs[i]
        return out

    def __repr__(self):
        return f"LinearElement({[c.coords for c in self.coeffs]})"


def choose_linear_avoiding(O: CoeffRing, r: int, avoid) -> LinearElement:
    """First linear form, in a fixed enumeration, whose direction is new.

    avoid is a collection of LinearElement (or invariant tuples); the
    enumeration is deterministic so equal inputs give equal choices.
    """
    seen = set()
    for item in avoid:
        inv = item.invariants() if isinstance(item, LinearElement) else item
        seen.add(inv)
    for bound in range(0, O.p ** 2):
        for i0 in range(1, r + 1):
            for a0 in range(bound + 1):
                for rest in itertools.product(range(bound + 1), repeat=r - 1):
                    coeffs = [a0]
                    vals = list(rest)
                    body = []
                    for i in range(1, r + 1):
                        if i == i0:
                            body.append(1)
                        else:
                            body.append(vals.pop(0))
                    cand = LinearElement(O, coeffs + body)
                    if cand.invariants() not in seen:
                        return cand
    raise ValueError("no admissible linear form found")
