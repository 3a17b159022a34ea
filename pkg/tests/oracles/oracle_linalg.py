#!/usr/bin/env python3
"""Independent oracle for Howell-form linear algebra over Z/p^N.

Everything here is brute force: span enumeration and exhaustive map
counting on tiny modules. Frozen into tests/test_linalg.py.
"""

import itertools


def span(rows, q):
    """Full enumeration of the row span over Z/q."""
    out = {tuple([0] * len(rows[0]))}
    for coeffs in itertools.product(range(q), repeat=len(rows)):
        v = [0] * len(rows[0])
        for c, r in zip(coeffs, rows):
            for j, x in enumerate(r):
                v[j] = (v[j] + c * x) % q
        out.add(tuple(v))
    return out


def main() -> None:
    # Howell closure example over Z/4
    s1 = span([[2, 1]], 4)
    s2 = span([[2, 1], [0, 2]], 4)
    print(f"span[[2,1]]/Z4 = {sorted(s1)}")
    print(f"same span with closure row [0,2]: {s1 == s2}")
    # the closure row is needed so every leading-zero member is reachable
    # top-down: (0,2) has leading zero and is 2*(2,1).

    print(f"1 in span([2]) over Z/4: {(1,) in span([[2]], 4)}")

    # Hom_R(R,R), R = F5[x]/(x^2), as 2x2 matrices over F5 commuting with x
    # additive basis (1, x); mult-by-x matrix sends (a,b) -> (0,a)
    cnt = 0
    for m in itertools.product(range(5), repeat=4):
        f = [[m[0], m[1]], [m[2], m[3]]]

        def apply(fm, v):
            return tuple(sum(fm[i][j] * v[i] for i in range(2)) % 5 for j in range(2))

        def xact(v):
            return (0, v[0])

        if all(apply(f, xact(v)) == xact(apply(f, v))
               for v in itertools.product(range(5), repeat=2)):
            cnt += 1
    print(f"|Hom_R(R,R)| for R=F5[x]/(x^2): {cnt} (free rank 1: expect 25)")

    # Hom_{Z/25}(Z/5, Z/25): f(1) killed by 5
    images = [a for a in range(25) if (5 * a) % 25 == 0]
    print(f"|Hom_Z25(Z/5, Z/25)| = {len(images)}, images of 1: {images}")

    # extend_hom example: S = 5R in M = R = Z/25, f(5)=5, solutions x with 5x=5
    sols = [x for x in range(25) if (5 * x) % 25 == 5]
    print(f"extensions of 5->5 on Z/25: g(1) in {sols}, minimal {min(sols)}")


if __name__ == "__main__":
    main()
