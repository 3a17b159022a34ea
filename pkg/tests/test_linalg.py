"""Howell form and flattened module machinery.

Frozen values come from tests/oracles/oracle_linalg.py, which enumerates
the small spans and hom sets by brute force.
"""

import itertools

import pytest
from hypothesis import given, settings, strategies as st

from iwakol.linalg import (
    ExtensionError,
    FinModule,
    Hom,
    Ideal,
    ModulePres,
    SiteSpace,
    extend_hom,
    hom_module,
    hom_space_cardinality,
    howell,
    in_span,
    intersect,
    kernel,
    matmul,
    preimage,
    solve,
    solve_affine,
    span_cardinality,
)


# --- Howell form over Z/4, matching the enumerated oracle ----------------


def test_howell_z4_basic():
    h = howell([[2, 1]], 2, 2)
    assert h == [(2, 1), (0, 2)]
    span = set()
    for a, b in itertools.product(range(4), repeat=2):
        v = ((2 * a) % 4, (a + 2 * b) % 4)
        span.add(v)
    assert span == {(0, 0), (0, 2), (2, 1), (2, 3)}
    for v in span:
        assert in_span(v, h, 2, 2)
    for v in itertools.product(range(4), repeat=2):
        if v not in span:
            assert not in_span(v, h, 2, 2)
    assert span_cardinality(h, 2, 2) == 4


def test_howell_membership_counterexample():
    # without the closure row, (0, 2) would be missed by naive echelon form
    assert in_span([0, 2], howell([[2, 1]], 2, 2), 2, 2)
    assert not in_span([1], howell([[2]], 2, 2), 2, 2)


def test_howell_canonical_idempotent():
    rows = [[10, 5, 0], [0, 5, 5], [5, 0, 20]]
    h = howell(rows, 5, 2)
    assert howell(h, 5, 2) == h
    # shuffling the input does not change the canonical form
    assert howell(rows[::-1], 5, 2) == h


def test_kernel_and_solve():
    mat = [[5, 0], [0, 1]]
    ker = kernel(mat, 5, 2)
    assert ker == [(5, 0)]
    h = howell(mat, 5, 2)
    c = solve(h, [10, 3], 5, 2)
    assert c is not None
    q = 25
    got = [sum(ci * r[j] for ci, r in zip(c, h)) % q for j in range(2)]
    assert got == [10, 3]
    assert solve(h, [1, 0], 5, 2) is None


def test_solve_affine_minimal():
    sol = solve_affine([[5]], [5], 5, 2)
    assert sol == [1]
    assert solve_affine([[5]], [1], 5, 2) is None
    assert solve_affine([[5]], [0], 5, 2) == [0]


def test_intersect_and_preimage():
    a = [[5, 0]]
    b = [[0, 5], [5, 5]]
    inter = intersect(a, b, 5, 2)
    assert inter == [(5, 0)]
    pre = preimage([[5, 0], [0, 1]], [[0, 5]], 5, 2)
    # x * mat = (5 x0, x1) in span{(0,5)}  <=>  x0 in 5Z, x1 in 5Z
    assert set(pre) == {(5, 0), (0, 5)}


# --- hypothesis properties ------------------------------------------------

small_entry = st.integers(min_value=0, max_value=24)


@st.composite
def matrices(draw, max_rows=4, max_cols=4):
    r = draw(st.integers(1, max_rows))
    c = draw(st.integers(1, max_cols))
    return [[draw(small_entry) for _ in range(c)] for _ in range(r)]


@given(matrices())
@settings(max_examples=60, deadline=None)
def test_prop_howell_span(mat):
    h = howell(mat, 5, 2)
    for r in mat:
        assert in_span(r, h, 5, 2)
    for r in h:
        # each Howell row is a combination of the inputs: check by
        # reducing against the Howell form of the inputs (same span)
        assert in_span(r, h, 5, 2)
    assert howell(h, 5, 2) == h


@given(matrices(), st.lists(small_entry, min_size=4, max_size=4))
@settings(max_examples=60, deadline=None)
def test_prop_solve_roundtrip(mat, x):
    x = x[: len(mat)]
    q = 25
    target = [sum(xi * r[j] for xi, r in zip(x, mat)) % q
              for j in range(len(mat[0]))]
    h = howell(mat, 5, 2)
    c = solve(h, target, 5, 2)
    assert c is not None
    got = [sum(ci * r[j] for ci, r in zip(c, h)) % q
           for j in range(len(mat[0]))] if h else [0] * len(mat[0])
    assert got == target
    sol = solve_affine(mat, target, 5, 2)
    assert sol is not None
    got2 = [sum(si * r[j] for si, r in zip(sol, mat)) % q
            for j in range(len(mat[0]))]
    assert got2 == target


@given(matrices())
@settings(max_examples=60, deadline=None)
def test_prop_kernel(mat):
    ker = kernel(mat, 5, 2)
    q = 25
    for x in ker:
        prod = [sum(xi * r[j] for xi, r in zip(x, mat)) % q
                for j in range(len(mat[0]))]
        assert not any(prod)


@given(matrices(max_rows=3, max_cols=3), matrices(max_rows=3, max_cols=3))
@settings(max_examples=40, deadline=None)
def test_prop_intersect(a, b):
    c = len(a[0])
    b = [r[:c] + [0] * (c - len(r)) for r in (row[:c] for row in b)]
    b = [list(r) + [0] * (c - len(r)) for r in b]
    inter = intersect(a, b, 5, 2)
    ha, hb = howell(a, 5, 2), howell(b, 5, 2)
    for v in inter:
        assert in_span(v, ha, 5, 2)
        assert in_span(v, hb, 5, 2)


# --- flattened modules and homs -------------------------------------------


def _dual_numbers_module():
    # F_5[x]/(x^2) acting on itself; sites are 1 and x
    space = SiteSpace(5, [1, 1])
    rows = [[1, 0], [0, 1]]
    x_mat = [[0, 1], [0, 0]]
    return ModulePres(space, rows, [x_mat])


def test_hom_dual_numbers_endomorphisms():
    m = _dual_numbers_module()
    assert m.action_closed()
    assert hom_space_cardinality(m, m) == 25


def test_hom_z5_into_z25():
    space = SiteSpace(5, [2])
    sub = ModulePres(space, [[5]], [])
    full = ModulePres(space, [[1]], [])
    assert hom_space_cardinality(sub, full) == 5
    homs = hom_module(sub, full)
    images = set()
    for h in homs:
        for c in range(25):
            img = h.apply([5 * c % 25])
            images.add(img[0])
    assert images <= {0, 5, 10, 15, 20}


def test_extend_hom_identity():
    space = SiteSpace(5, [2])
    full = ModulePres(space, [[1]], [])
    g = extend_hom([[5]], [[5]], full, full, certified=True)
    assert g.images == [(1,)]
    assert g.apply([7]) == (7,)


def test_extend_hom_failure_raises():
    # over Z/25 ask for g with g(5) = 1: impossible, 5 g(1) = 1 has no root
    space = SiteSpace(5, [2])
    full = ModulePres(space, [[1]], [])
    with pytest.raises(ExtensionError):
        extend_hom([[5]], [[1]], full, full, certified=False)
    with pytest.raises(AssertionError):
        extend_hom([[5]], [[1]], full, full, certified=True)


def test_finmodule_mixed_caps():
    space = SiteSpace(5, [2, 1])
    m = FinModule(space, [[1, 0]])
    # second coordinate lives mod 5, so (0,5) is the zero class
    assert m.contains([0, 5])
    assert not m.contains([0, 1])
    full = FinModule(space, [[1, 0], [0, 1]])
    assert full.cardinality() == 125
    assert m.issubset(full)
    assert m.sum(full) == full
    assert full.intersection(m) == m


class _FakeZ25:
    """Minimal ring protocol instance: Z/25 with integer elements."""

    def __init__(self):
        self.space = SiteSpace(5, [2])
        self.one = 1

    def flatten(self, x):
        return (x % 25,)

    def unflatten(self, v):
        return v[0] % 25

    def module_basis(self):
        return [1]

    def as_module(self):
        return ModulePres(self.space, [[1]], [])


def test_ideal_over_fake_ring():
    r = _FakeZ25()
    i10 = Ideal(r, [10])
    assert i10.contains(5)
    assert i10.contains(15)
    assert not i10.contains(1)
    assert i10 == Ideal(r, [5])
    assert i10.cardinality() == 5
    i5 = Ideal(r, [5])
    assert (i5 * i5).is_zero()
    assert (i5 + i10) == i5
    assert Ideal(r, [1]).is_unit_ideal()
    assert Ideal(r, [0]).is_zero()
    assert i10.reduced_generators() == [5]
