#!/usr/bin/env python3
"""Independent oracle for Kolyvagin derivative constants.

Group rings are plain dicts keyed by exponent tuples, arithmetic stays
in Z until a final reduction, and discrete logs are recomputed from
scratch. Nothing here imports the package. Frozen constants go into
tests/test_kolyvagin.py.

Model under test: diagonal Frobenius diag(1, 2) at every prime, det
polynomial P(x) = 1 - 3x + 2x^2, multiplicative classes with own-prime
seed exponent 1, coefficients F_3.
"""

import itertools
from fractions import Fraction


def primitive_root(q):
    for g in range(2, q):
        seen = set()
        x = 1
        for _ in range(q - 1):
            x = x * g % q
            seen.add(x)
        if len(seen) == q - 1:
            return g
    raise ValueError


def dlog(q, a):
    g = primitive_root(q)
    x = 1
    for j in range(q - 1):
        if x == a % q:
            return j
        x = x * g % q
    raise ValueError


def gr_mul(a, b, orders):
    out = {}
    for ga, ca in a.items():
        for gb, cb in b.items():
            g = tuple((x + y) % o for x, y, o in zip(ga, gb, orders))
            out[g] = out.get(g, 0) + ca * cb
    return {g: c for g, c in out.items() if c}


def gr_scale(a, s):
    return {g: c * s for g, c in a.items() if c * s}


def gr_add(a, b):
    out = dict(a)
    for g, c in b.items():
        out[g] = out.get(g, 0) + c
    return {g: c for g, c in out.items() if c}


def gr_mod(a, p):
    return {g: c % p for g, c in a.items() if c % p}


def unit(primes):
    return {tuple(0 for _ in primes): 1}


def sigma_power(primes, q, k):
    orders = [x - 1 for x in primes]
    i = primes.index(q)
    return {tuple((k % orders[j]) if j == i else 0
                  for j in range(len(primes))): 1}


def frob_inv(primes, ell, own=1):
    """Frob_ell^{-1} exponents: own seed at ell, dlogs elsewhere."""
    orders = [x - 1 for x in primes]
    exps = []
    for q, o in zip(primes, orders):
        e = own if q == ell else dlog(q, ell)
        exps.append((-e) % o)
    return {tuple(exps): 1}


def euler_at(primes, ell, g):
    """P(x) = 1 - 3x + 2x^2 evaluated at the group element g."""
    orders = [x - 1 for x in primes]
    out = unit(primes)
    out = gr_add(out, gr_scale(g, -3))
    out = gr_add(out, gr_scale(gr_mul(g, g, orders), 2))
    return out


def cls(primes):
    orders = [x - 1 for x in primes]
    c = unit(primes)
    for ell in primes:
        c = gr_mul(c, euler_at(primes, ell, frob_inv(primes, ell)), orders)
    return c


def D_op(primes, q, gen=1):
    orders = [x - 1 for x in primes]
    i = primes.index(q)
    o = orders[i]
    out = {}
    for v in range(1, o):
        exps = tuple((gen * v) % o if j == i else 0
                     for j in range(len(primes)))
        out[exps] = out.get(exps, 0) + v
    return out


def kappa(primes, p=3, gens=None):
    """Common coefficient of D_n c(n) mod p; asserts constancy."""
    orders = [x - 1 for x in primes]
    gens = gens or {q: 1 for q in primes}
    c = cls(primes)
    D = unit(primes)
    for q in primes:
        D = gr_mul(D, D_op(primes, q, gens[q]), orders)
    dc = gr_mod(gr_mul(D, c, orders), p)
    vals = set()
    for exps in itertools.product(*[range(o) for o in orders]):
        vals.add(dc.get(exps, 0))
    assert len(vals) == 1, f"not fixed at {primes}: {sorted(vals)}"
    raw = vals.pop()
    norm = 1
    for q in primes:
        norm = norm * gens[q] % p
    return raw * norm % p


def e_value(ell, src, p=3):
    """e-map of P_ell(Frob_src) in Z/p[H_ell], canonical exponents."""
    k = dlog(ell, src)
    o = ell - 1
    z = {0: 1}
    z[k % o] = z.get(k % o, 0) - 3
    z[2 * k % o] = z.get(2 * k % o, 0) + 2
    assert sum(z.values()) % p == 0, "aug must vanish"
    return sum(j * c for j, c in z.items()) % p


def main():
    p = 3
    for primes in [(7,), (13,), (19,), (7, 13), (13, 19), (7, 13, 19)]:
        print(f"kappa{primes} = {kappa(primes, p)}")
    # generator invariance spot checks (normalized kappa must not move)
    print("kappa((7,), gens 5):", kappa((7,), p, {7: 5}))
    print("kappa((7,13), gens 5,7):", kappa((7, 13), p, {7: 5, 13: 7}))
    for pair in [(7, 13), (13, 7), (13, 19), (19, 13), (7, 19), (19, 7)]:
        print(f"e(P_{pair[0]}(Frob_{pair[1]})) = {e_value(*pair, p)}")
    # universal kappa at two-prime levels: identity minus transposition
    for l1, l2 in [(7, 13), (13, 19), (7, 19)]:
        ku = (kappa((l1, l2), p)
              - e_value(l1, l2, p) * e_value(l2, l1, p) * kappa((), p)) % p
        print(f"kappa_univ({l1}*{l2}) = {ku}")
    # three-prime universal sum over S_3
    perms = list(itertools.permutations(range(3)))
    primes = (7, 13, 19)

    def sign(perm):
        s = 1
        for i in range(3):
            for j in range(i + 1, 3):
                if perm[i] > perm[j]:
                    s = -s
        return s

    total = 0
    for perm in perms:
        fixed = tuple(primes[i] for i in range(3) if perm[i] == i)
        term = kappa(fixed, p)
        for i in range(3):
            if perm[i] != i:
                term = term * e_value(primes[i], primes[perm[i]], p) % p
        total = (total + sign(perm) * term) % p
    print(f"kappa_univ(7*13*19) = {total}")


if __name__ == "__main__":
    main()
