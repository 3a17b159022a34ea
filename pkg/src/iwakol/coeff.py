"""Exact p-adic coefficient rings at fixed finite precision.

A ``CoeffRing`` models the ring of integers O of a finite extension of
Q_p, truncated at absolute precision p^M. Supported extensions are a
single monogenic step over Z_p: an unramified one (minimal polynomial
irreducible mod p) or an eisenstein one (totally ramified). Elements are
coordinate vectors on the power basis of the generator, each coordinate
an exact Python integer reduced mod p^M.

All arithmetic is exact at the stated precision. Divisions are never
performed blindly inside the truncated ring: the series routines lift to
a boosted internal precision first, so every published digit is correct.
"""

from __future__ import annotations

import math
from typing import Iterable, Sequence

INF = math.inf

_SMALL_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47)


class PrecisionError(ArithmeticError):
    """Raised when a request exceeds what the stored precision supports."""


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    for q in _SMALL_PRIMES:
        if n == q:
            return True
        if n % q == 0:
            return False
    f = 49
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


# ---------------------------------------------------------------------------
# polynomial helpers over F_p (residue-field arithmetic)


def _fp_trim(a: list[int]) -> list[int]:
    while a and a[-1] == 0:
        a.pop()
    return a


def _fp_mul(a: Sequence[int], b: Sequence[int], p: int) -> list[int]:
    if not a or not b:
        return []
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] = (out[i + j] + x * y) % p
    return _fp_trim(out)


def _fp_divmod(a: Sequence[int], b: Sequence[int], p: int):
    a = list(a)
    q = [0] * max(0, len(a) - len(b) + 1)
    inv_lead = pow(b[-1], -1, p)
    for i in range(len(a) - len(b), -1, -1):
        c = a[i + len(b) - 1] * inv_lead % p
        if c:
            q[i] = c
            for j, y in enumerate(b):
                a[i + j] = (a[i + j] - c * y) % p
    return _fp_trim(q), _fp_trim(a)


def _fp_sub(a: Sequence[int], b: Sequence[int], p: int) -> list[int]:
    n = max(len(a), len(b))
    a = list(a) + [0] * (n - len(a))
    b = list(b) + [0] * (n - len(b))
    return _fp_trim([(x - y) % p for x, y in zip(a, b)])


def _fp_ext_gcd(a: Sequence[int], b: Sequence[int], p: int):
    """Return (g, s, t) with s*a + t*b = g over F_p[t]."""
    r0, r1 = list(a), list(b)
    s0, s1 = [1], []
    t0, t1 = [], [1]
    while r1:
        q, r = _fp_divmod(r0, r1, p)
        r0, r1 = r1, r
        s0, s1 = s1, _fp_sub(s0, _fp_mul(q, s1, p), p)
        t0, t1 = t1, _fp_sub(t0, _fp_mul(q, t1, p), p)
    return r0, s0, t0


def _fp_poly_irreducible(poly: Sequence[int], p: int) -> bool:
    """Rabin test for a monic polynomial over F_p."""
    n = len(poly) - 1
    if n <= 0:
        return False
    mod = list(poly)

    def powmod_xq(e: int) -> list[int]:
        # x^(p^e) mod poly via repeated Frobenius
        r = [0, 1]
        for _ in range(e):
            out = [0]
            base = list(r)
            ee = p
            acc = [1]
            while ee:
                if ee & 1:
                    acc = _fp_divmod(_fp_mul(acc, base, p), mod, p)[1]
                base = _fp_divmod(_fp_mul(base, base, p), mod, p)[1]
                ee >>= 1
            r = acc
        return r

    top = powmod_xq(n)
    diff = _fp_trim([(a - b) % p for a, b in zip(top + [0, 0], [0, 1] + [0] * len(top))])
    if diff:
        return False
    for q in {f for f in range(2, n + 1) if n % f == 0 and _is_prime(f)}:
        sub = powmod_xq(n // q)
        diff = _fp_trim([(a - b) % p for a, b in zip(sub + [0, 0], [0, 1] + [0] * len(sub))])
        g, _, _ = _fp_ext_gcd(mod, diff, p)
        if len(g) > 1:
            return False
    return True


# ---------------------------------------------------------------------------


class CoeffElem:
    """Element of a CoeffRing: coordinates on the power basis, mod p^M."""

    __slots__ = ("ring", "coords")

    def __init__(self, ring: "CoeffRing", coords: Iterable[int]):
        self.ring = ring
        self.coords = tuple(c % ring.pM for c in coords)
        if len(self.coords) != ring.deg:
            raise ValueError("coordinate length mismatch")

    def __add__(self, other: "CoeffElem") -> "CoeffElem":
        return CoeffElem(self.ring, [a + b for a, b in zip(self.coords, other.coords)])

    def __sub__(self, other: "CoeffElem") -> "CoeffElem":
        return CoeffElem(self.ring, [a - b for a, b in zip(self.coords, other.coords)])

    def __neg__(self) -> "CoeffElem":
        return CoeffElem(self.ring, [-a for a in self.coords])

    def __mul__(self, other):
        if isinstance(other, int):
            return CoeffElem(self.ring, [a * other for a in self.coords])
        return self.ring.mul(self, other)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "CoeffElem":
        r = self.ring.one
        b = self
        while n:
            if n & 1:
                r = r * b
            b = b * b
            n >>= 1
        return r

    def __eq__(self, other) -> bool:
        return (isinstance(other, CoeffElem) and self.ring.key == other.ring.key
                and self.coords == other.coords)

    def __hash__(self) -> int:
        return hash((self.ring.key, self.coords))

    def is_zero(self) -> bool:
        return all(c == 0 for c in self.coords)

    def __repr__(self) -> str:
        if self.ring.deg == 1:
            return f"{self.coords[0]}"
        return "(" + " + ".join(f"{c}*t^{i}" if i else f"{c}"
                                for i, c in enumerate(self.coords) if c) + ")" if any(
            self.coords) else "0"


class CoeffRing:
    """O at precision p^M, optionally a monogenic step over Z_p.

    Args:
        p: odd prime.
        M: absolute precision exponent, at least 1.
        ext: None for Z_p itself, else a pair (kind, poly) where kind is
            "unramified" or "eisenstein" and poly is the monic minimal
            polynomial of the generator as an exact integer coefficient
            list, constant term first, leading coefficient 1.
    """

    def __init__(self, p: int, M: int, ext=None):
        if not _is_prime(p) or p == 2:
            raise ValueError("p must be an odd prime")
        if M < 1:
            raise ValueError("M must be positive")
        self.p = p
        self.M = M
        self.pM = p**M
        if ext is None:
            self.kind = "trivial"
            self.minpoly_exact = (0, 1)
            self.deg = 1
            self.e = 1
            self.f_res = 1
        else:
            kind, poly = ext
            poly = tuple(int(c) for c in poly)
            if len(poly) < 3 or poly[-1] != 1:
                raise ValueError("ext poly must be monic of degree >= 2")
            self.minpoly_exact = poly
            self.deg = len(poly) - 1
            self.kind = kind
            if kind == "unramified":
                res = [c % p for c in poly]
                if not _fp_poly_irreducible(res, p):
                    raise ValueError("unramified poly must be irreducible mod p")
                self.e = 1
                self.f_res = self.deg
            elif kind == "eisenstein":
                if any(c % p != 0 for c in poly[:-1]):
                    raise ValueError("eisenstein poly needs all lower coefficients in (p)")
                if poly[0] % (p * p) == 0:
                    raise ValueError("eisenstein constant term must have valuation exactly 1")
                self.e = self.deg
                self.f_res = 1
            else:
                raise ValueError(f"unknown extension kind {kind!r}")
        self.key = (p, M, self.kind, self.minpoly_exact)
        self.zero = CoeffElem(self, [0] * self.deg)
        self.one = CoeffElem(self, [1] + [0] * (self.deg - 1))
        self._red_rows = self._reduction_rows(self.pM)
        if self.kind == "eisenstein":
            # t^e = -(lower part); check v(pi^e) = v(p) as a construction guard
            te = CoeffElem(self, [(-c) % self.pM for c in self.minpoly_exact[:-1]])
            assert self.valuation(te) == self.e

    # -- construction helpers ------------------------------------------------

    def _reduction_rows(self, mod: int) -> list[tuple[int, ...]]:
        """Coordinates of t^k for k in [deg, 2*deg-1), mod the given modulus."""
        rows = [tuple((-c) % mod for c in self.minpoly_exact[:-1])]
        for _ in range(self.deg - 2):
            prev = rows[-1]
            shifted = [0] + list(prev[:-1])
            overflow = prev[-1]
            if overflow:
                for j in range(self.deg):
                    shifted[j] = (shifted[j] + overflow * rows[0][j]) % mod
            rows.append(tuple(x % mod for x in shifted))
        return rows

    def from_int(self, a: int) -> CoeffElem:
        return CoeffElem(self, [a] + [0] * (self.deg - 1))

    def from_coords(self, coords: Iterable[int]) -> CoeffElem:
        return CoeffElem(self, coords)

    @property
    def uniformizer(self) -> CoeffElem:
        if self.kind == "eisenstein":
            return CoeffElem(self, [0, 1] + [0] * (self.deg - 2))
        return self.from_int(self.p)

    @property
    def cap(self) -> int:
        """Largest representable uniformizer valuation, e*M."""
        return self.e * self.M

    def spec(self) -> dict:
        out = {"p": self.p, "M": self.M}
        if self.kind != "trivial":
            out["ext"] = {"kind": self.kind, "poly": list(self.minpoly_exact)}
        return out

    # -- arithmetic ----------------------------------------------------------

    def mul(self, a: CoeffElem, b: CoeffElem) -> CoeffElem:
        d = self.deg
        if d == 1:
            return CoeffElem(self, [a.coords[0] * b.coords[0]])
        conv = [0] * (2 * d - 1)
        for i, x in enumerate(a.coords):
            if x:
                for j, y in enumerate(b.coords):
                    conv[i + j] += x * y
        out = conv[:d]
        for k in range(d, 2 * d - 1):
            c = conv[k]
            if c:
                row = self._red_rows[k - d]
                for j in range(d):
                    out[j] += c * row[j]
        return CoeffElem(self, out)

    def is_unit(self, a: CoeffElem) -> bool:
        return self.valuation(a) == 0

    def inv(self, a: CoeffElem) -> CoeffElem:
        """Inverse of a unit, by residue inversion and Hensel iteration."""
        if not self.is_unit(a):
            raise ZeroDivisionError("not a unit")
        p = self.p
        if self.kind == "unramified" and self.deg > 1:
            res = [c % p for c in a.coords]
            mod = [c % p for c in self.minpoly_exact]
            g, s, _ = _fp_ext_gcd(_fp_trim(res), mod, p)
            c0 = pow(g[0], -1, p)
            inv0 = [x * c0 % p for x in s]
            x = CoeffElem(self, (inv0 + [0] * self.deg)[:self.deg])
        else:
            x = self.from_int(pow(a.coords[0] % p, -1, p))
        two = self.from_int(2)
        for _ in range(max(1, math.ceil(math.log2(self.e * self.M)) + 1)):
            x = x * (two - a * x)
        assert (a * x) == self.one
        return x

    def valuation(self, a: CoeffElem):
        """Uniformizer valuation; INF for zero at this precision."""
        if a.is_zero():
            return INF
        p, M = self.p, self.M

        def vp(n: int) -> int:
            v = 0
            while n % p == 0 and v < M:
                n //= p
                v += 1
            return v

        if self.kind == "eisenstein":
            best = INF
            for i, c in enumerate(a.coords):
                if c:
                    best = min(best, self.e * vp(c) + i)
            return best
        return min(vp(c) for c in a.coords if c)

    def pi_caps(self, c: int) -> list[int]:
        """Per-coordinate precision exponents describing O/pi^c additively."""
        if c > self.cap:
            raise PrecisionError(f"pi^{c} below stored precision (cap {self.cap})")
        if self.kind == "eisenstein":
            return [max(0, -(-(c - i) // self.e)) for i in range(self.deg)]
        return [c] * self.deg

    def reduce_mod_pi(self, a: CoeffElem, c: int) -> CoeffElem:
        """Canonical representative of a mod pi^c (coordinatewise caps)."""
        caps = self.pi_caps(c)
        return CoeffElem(self, [x % (self.p**n) if n else 0
                                for x, n in zip(a.coords, caps)])

    def div_exact_pi(self, a: CoeffElem, k: int) -> CoeffElem:
        """Exact division by pi^k. Raises on non-divisible input.

        The quotient is correct modulo pi^(cap - k); callers only ever
        reduce it further, so no wrong digit can be published.
        """
        if k == 0:
            return a
        if self.kind != "eisenstein":
            pk = self.p**k
            if any(c % pk for c in a.coords):
                raise ArithmeticError("not divisible by pi^k")
            return CoeffElem(self, [c // pk for c in a.coords])
        out = a
        for _ in range(k):
            out = self._div_pi_once(out)
        return out

    def _div_pi_once(self, a: CoeffElem) -> CoeffElem:
        # 1/t = t^(e-1) / t^e and t^e = p*w with w a unit, so
        # a/t = a * t^(e-1) * w^(-1) / p with an exact coordinate division.
        te = CoeffElem(self, [(-c) % self.pM for c in self.minpoly_exact[:-1]])
        w = CoeffElem(self, [c // self.p for c in te.coords])
        out = a * (self.uniformizer ** (self.e - 1)) * self.inv(w)
        if any(c % self.p for c in out.coords):
            raise ArithmeticError("not divisible by pi")
        return CoeffElem(self, [c // self.p for c in out.coords])

    def split_unit(self, a: CoeffElem):
        """Write a nonzero element as (v, u) with a = pi^v * u, u a unit."""
        v = self.valuation(a)
        if v is INF:
            raise ZeroDivisionError("zero has no unit part")
        return v, self.div_exact_pi(a, int(v))

    # -- residue field -------------------------------------------------------

    def residue(self, a: CoeffElem) -> tuple[int, ...]:
        """Image in the residue field k as an F_p coordinate tuple."""
        if self.kind == "unramified":
            return tuple(c % self.p for c in a.coords)
        return (a.coords[0] % self.p,)

    def residue_inv(self, r: tuple) -> tuple:
        p = self.p
        if self.f_res == 1:
            return (pow(r[0], -1, p),)
        mod = [c % p for c in self.minpoly_exact]
        g, s, _ = _fp_ext_gcd(_fp_trim(list(r)), mod, p)
        c0 = pow(g[0], -1, p)
        out = [x * c0 % p for x in s]
        return tuple((out + [0] * self.f_res)[:self.f_res])

    def residue_mul(self, r1: tuple, r2: tuple) -> tuple:
        p = self.p
        if self.f_res == 1:
            return (r1[0] * r2[0] % p,)
        mod = [c % p for c in self.minpoly_exact]
        out = _fp_divmod(_fp_mul(list(r1), list(r2), p), mod, p)[1]
        return tuple((out + [0] * self.f_res)[:self.f_res])

    # -- randomness (explicit rng, deterministic) ----------------------------

    def random_elem(self, rng) -> CoeffElem:
        return CoeffElem(self, [rng.randrange(self.pM) for _ in range(self.deg)])

    def random_unit(self, rng) -> CoeffElem:
        while True:
            x = self.random_elem(rng)
            if self.is_unit(x):
                return x

    def __repr__(self) -> str:
        return f"CoeffRing(p={self.p}, M={self.M}, kind={self.kind})"


# ---------------------------------------------------------------------------
# module-level operations


def coeff_ring_new(spec: dict) -> CoeffRing:
    """Build a CoeffRing from its JSON description."""
    p, M = int(spec["p"]), int(spec["M"])
    ext = spec.get("ext")
    if ext is None:
        return CoeffRing(p, M)
    return CoeffRing(p, M, (ext["kind"], ext["poly"]))


def valuation(x: CoeffElem):
    return x.ring.valuation(x)


def _log_terms_needed(p: int, M: int) -> int:
    k = 1
    while k - int(math.log(k, p)) <= M + 1:
        k += 1
    return k + 2


def padic_log(u: CoeffElem) -> CoeffElem:
    """log(u) for u in 1 + pO, exact mod p^M.

    The series sum z^k (-1)^(k+1) / k is evaluated on exact integer lifts
    at a boosted precision so the divisions by k lose nothing: each digit
    of the returned element is correct. Requires v(u - 1) >= v(p).
    """
    ring = u.ring
    p, M = ring.p, ring.M
    z = u - ring.one
    if not z.is_zero() and ring.valuation(z) < ring.e:
        raise ValueError("padic_log needs u in 1 + pO")
    K = _log_terms_needed(p, M)
    guard = int(math.log(K, p)) + 2
    big = CoeffRing(p, M + guard, None if ring.kind == "trivial"
                    else (ring.kind, ring.minpoly_exact))
    if any(c % p for c in z.coords):
        raise ValueError("padic_log lift: u - 1 must have all coordinates in (p)")
    w = big.from_coords([c // p for c in z.coords])  # z = p * w on exact lifts
    acc = big.zero
    pw = big.one
    for k in range(1, K + 1):
        pw = pw * w  # w^k
        s = 0
        kk = k
        while kk % p == 0:
            kk //= p
            s += 1
        scale = p ** (k - s) * pow(kk, -1, big.pM) % big.pM
        term = CoeffElem(big, [c * scale for c in pw.coords])
        acc = acc + term if k % 2 == 1 else acc - term
    return ring.from_coords(acc.coords)


def gamma_exponent(u: CoeffElem) -> int:
    """Exponent s mod p^(M-1) with (1+p)^s = u, for u in 1 + pZ_p.

    The returned integer is the canonical representative in
    [0, p^(M-1)); (1+p)^s then matches u mod p^M exactly.
    """
    ring = u.ring
    p, M = ring.p, ring.M
    if M < 2:
        raise PrecisionError("gamma_exponent needs M >= 2")
    if any(c for c in u.coords[1:]) or (u.coords[0] - 1) % p != 0:
        raise ValueError("gamma_exponent needs u in 1 + pZ_p")
    lu = padic_log(ring.from_int(u.coords[0])).coords[0]
    lg = padic_log(ring.from_int(1 + p)).coords[0]
    mod = p ** (M - 1)
    s = (lu // p) * pow(lg // p, -1, mod) % mod
    assert pow(1 + p, s, ring.pM) == u.coords[0] % ring.pM
    return s


def teichmuller(ring: CoeffRing, a: int) -> CoeffElem:
    """Teichmuller representative of an integer prime to p, as a constant."""
    if a % ring.p == 0:
        raise ValueError("needs a prime to p")
    q = ring.p**ring.f_res
    x = a % ring.pM
    for _ in range(ring.M + 2):
        x = pow(x, q, ring.pM)
    assert pow(x, q, ring.pM) == x
    return ring.from_int(x)


def pr_unit(ring: CoeffRing, ell: int) -> CoeffElem:
    """Projection of a prime ell != p to the principal units 1 + pZ_p."""
    w = teichmuller(ring, ell)
    return ring.from_int(ell) * ring.inv(w)
