"""Synthetic Euler systems: norm relations, conversion, twists.

The frozen class supports and bracket values were computed by hand from
the diagonal Frobenius data (the determinant polynomial of diag(1, 2) is
1 - 3T + 2T^2 for every prime, which keeps the expansions short enough
to multiply out on paper).
"""

import pytest
from hypothesis import given, settings, strategies as st

from iwakol.coeff import CoeffRing
from iwakol.euler import (
    MockCohomology,
    convert_rubin,
    cyclotomic_twist_exponent,
    extend_cyclotomic,
    generate_multiplicative,
    model_frobenius,
    rubin_bracket,
    twist_by_character,
    verify_all_norm_relations,
    verify_norm_relation,
)
from iwakol.galois import (
    DeformationData,
    GroupRing,
    SquarefreeLevel,
    dual_euler_poly,
    euler_poly,
    eval_poly_at_group,
    frobenius,
)
from iwakol.lam import MonicParameterSystem, QuotientRing

O3 = CoeffRing(3, 2)
O34 = CoeffRing(3, 4)


def _diag_data(O, a, b, r=0, primes=(7, 13)):
    zero = {}
    mono = tuple([0] * r)
    return DeformationData(O, r, 2, {
        ell: [[{mono: O.from_int(a)}, zero], [zero, {mono: O.from_int(b)}]]
        for ell in primes
    })


def _ring_f3():
    mps = MonicParameterSystem(O3, O3.from_int(3), [])
    return QuotientRing(mps, (1,))


def _ring_z9():
    mps = MonicParameterSystem(O3, O3.from_int(3), [])
    return QuotientRing(mps, (2,))


def _ring_f3x():
    # F_3[x]/(x^2 + 3x + 3) with coefficients mod 9
    mps = MonicParameterSystem(
        O34, O34.from_int(3),
        [{(2,): O34.one, (1,): O34.from_int(3), (0,): O34.from_int(3)}])
    return QuotientRing(mps, (2, 1))


def test_model_frobenius_components():
    R = _ring_f3()
    gr = GroupRing(R, SquarefreeLevel([7, 13]))
    assert model_frobenius(gr, 7, own=1).coords == {(1, 11): R.one}
    assert model_frobenius(gr, 7, own=1, inverse=True).coords == \
        {(5, 1): R.one}
    assert model_frobenius(gr, 13, own=1).coords == {(3, 1): R.one}
    # own component zero reproduces the canonical restriction convention
    assert model_frobenius(gr, 7, own=0) == frobenius(gr, 7)


def test_prime_level_class_frozen():
    R = _ring_f3()
    data = _diag_data(O3, 1, 2)
    es = generate_multiplicative(data, R, [7], [R.one])
    c7 = es.cls(SquarefreeLevel([7]))[0]
    # P(T) = 1 + 2T^2 over F_3, evaluated at sigma^{-1} seeded with own
    # exponent 1: the class is [e] + 2[sigma^4]
    assert c7.coords == {(0,): R.one, (4,): R.from_scalar(2)}


def test_level_91_class_frozen():
    R = _ring_f3()
    data = _diag_data(O3, 1, 2)
    es = generate_multiplicative(data, R, [7, 13], [R.one])
    c91 = es.cls(SquarefreeLevel([7, 13]))[0]
    one, two = R.one, R.from_scalar(2)
    assert c91.coords == {
        (0, 0): one, (0, 10): two, (4, 2): two, (4, 0): one}


def test_norm_relations_direct():
    R = _ring_f3x()
    data = _diag_data(O34, 1, 2, r=1)
    base = [R.one + R.var(1)]
    es = generate_multiplicative(data, R, [7, 13], base)
    results = verify_all_norm_relations(es)
    assert len(results) == 4
    assert all(ok for (_, _, ok) in results)
    assert [lv.n for lv in es.levels()] == [1, 7, 13, 91]


def test_norm_relations_dual_and_rank_two():
    R = _ring_f3x()
    data = _diag_data(O34, 1, 2, r=1)
    base = [R.one, R.var(1)]
    es = generate_multiplicative(data, R, [7, 13], base, flavor="dual")
    assert all(ok for (_, _, ok) in verify_all_norm_relations(es))
    direct = generate_multiplicative(data, R, [7, 13], base)
    lv7 = SquarefreeLevel([7])
    assert es.cls(lv7)[0] != direct.cls(lv7)[0]


def test_norm_relation_detects_corruption():
    R = _ring_z9()
    data = _diag_data(O3, 1, 2)
    es = generate_multiplicative(data, R, [7], [R.one])
    lv7 = SquarefreeLevel([7])
    gr7 = es.cohom.group_ring(lv7)
    es.classes[(7,)] = [es.cls(lv7)[0] + gr7.sigma(7)]
    assert not verify_norm_relation(es, lv7, 7)
    with pytest.raises(ValueError):
        verify_norm_relation(es, lv7, 13)


def test_rubin_bracket_base_level_frozen():
    R = _ring_z9()
    data = _diag_data(O3, 1, 2)
    gr1 = GroupRing(R, SquarefreeLevel([]))
    B = rubin_bracket(data, gr1, 7)
    # hand value: 0 + (-3)*7^{-1}*1 + 2*7^{-2}*8 = 24 + 112 = 136 = 1 mod 9
    assert B.coords == {(): R.one}
    # external form of the certificate
    direct = euler_poly(data, R, 7)
    dual = dual_euler_poly(data, R, 7)
    fr = frobenius(gr1, 7, inverse=True)
    diff = eval_poly_at_group(gr1, [a - b for a, b in zip(direct, dual)], fr)
    assert 6 * B == diff


def test_conversion_base_divisor_required():
    # at a prime level the dual-flavor class alone fails the direct
    # relation; the base-level bracket term is what repairs it
    R = _ring_z9()
    data = _diag_data(O3, 1, 2)
    z = generate_multiplicative(data, R, [7], [R.one], flavor="dual")
    lv7, lv1 = SquarefreeLevel([7]), SquarefreeLevel([])
    cohom = z.cohom
    bad = z.cls(lv7)
    lhs = cohom.cor(lv7, lv1, bad)
    gr1 = cohom.group_ring(lv1)
    factor = eval_poly_at_group(gr1, euler_poly(data, R, 7),
                                frobenius(gr1, 7, inverse=True))
    rhs = cohom.scale_vec(factor, z.cls(lv1))
    assert not cohom.vec_eq(lhs, rhs)
    c = convert_rubin(z)
    assert verify_norm_relation(c, lv7, 7)


def test_convert_rubin_two_primes():
    R = _ring_z9()
    data = _diag_data(O3, 1, 2)
    z = generate_multiplicative(data, R, [7, 13], [R.one], flavor="dual")
    c = convert_rubin(z)
    assert c.flavor == "direct"
    assert all(ok for (_, _, ok) in verify_all_norm_relations(c))
    assert c.cls(SquarefreeLevel([])) == z.cls(SquarefreeLevel([]))
    with pytest.raises(ValueError):
        convert_rubin(c)


def test_convert_rubin_three_primes():
    R = _ring_z9()
    data = _diag_data(O3, 1, 2, primes=(7, 13, 19))
    z = generate_multiplicative(data, R, [7, 13, 19], [R.one],
                                flavor="dual")
    c = convert_rubin(z)
    results = verify_all_norm_relations(c)
    assert len(results) == 12
    assert all(ok for (_, _, ok) in results)


@settings(max_examples=12, deadline=None)
@given(e7=st.integers(min_value=0, max_value=5),
       e13=st.integers(min_value=0, max_value=11))
def test_prop_norm_relations_any_seed(e7, e13):
    R = _ring_f3()
    data = _diag_data(O3, 1, 2)
    es = generate_multiplicative(data, R, [7, 13], [R.one],
                                 own_exponents={7: e7, 13: e13})
    assert all(ok for (_, _, ok) in verify_all_norm_relations(es))


def test_twist_by_character():
    R = _ring_z9()
    data = _diag_data(O3, 1, 2)
    twisted = twist_by_character(data, {7: 2})
    p0 = euler_poly(data, R, 7)
    p1 = euler_poly(twisted, R, 7)
    assert p1[0] == p0[0]
    assert p1[1] == R.scale(p0[1], 2)
    assert p1[2] == R.scale(p0[2], 4)
    assert euler_poly(twisted, R, 13) == euler_poly(data, R, 13)
    es = generate_multiplicative(twisted, R, [7, 13], [R.one])
    assert all(ok for (_, _, ok) in verify_all_norm_relations(es))


def test_cyclotomic_twist_exponents():
    # 7 = 4^8 and 13 = 4^4 mod 81 (both are 1 mod 3, so the Teichmuller
    # part is trivial)
    assert cyclotomic_twist_exponent(O34, 7) == 8
    assert cyclotomic_twist_exponent(O34, 13) == 4
    data = _diag_data(O34, 1, 2, r=1)
    ext = extend_cyclotomic(data)
    assert ext.twist == {7: 8, 13: 4}
    R = _ring_f3x()
    u = (R.one + R.var(1)) ** 8
    p0 = euler_poly(data, R, 7)
    p1 = euler_poly(ext, R, 7)
    assert p1[1] == u * p0[1]
    assert p1[2] == u * u * p0[2]
    es = generate_multiplicative(ext, R, [7, 13], [R.one])
    assert all(ok for (_, _, ok) in verify_all_norm_relations(es))
