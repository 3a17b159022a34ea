"""Group rings, Frobenius data, derivative operators.

Group-theoretic identities were enumerated independently in
tests/oracles/oracle_groups.py; the discrete log and Euler factor values
are frozen from direct hand computation.
"""

import pytest
from hypothesis import given, settings, strategies as st

from iwakol.coeff import CoeffRing
from iwakol.galois import (
    DeformationData,
    GroupRing,
    SquarefreeLevel,
    cor_map,
    dlog,
    dual_euler_poly,
    e_map,
    enumerate_levels,
    eval_poly_at_group,
    euler_poly,
    frobenius,
    generator_change,
    kolyvagin_D,
    kolyvagin_D_full,
    prime_in_P,
    primitive_root,
    res_map,
    vp,
)
from iwakol.lam import MonicParameterSystem, QuotientRing

O3 = CoeffRing(3, 2)
O5 = CoeffRing(5, 2)


def _ring_f3():
    # F_3[x]/(x^2)
    mps = MonicParameterSystem(O3, O3.from_int(3), [{(2,): O3.one}])
    return QuotientRing(mps, (1, 1))


def _ring_z25():
    mps = MonicParameterSystem(O5, O5.from_int(5), [])
    return QuotientRing(mps, (2,))


def test_primitive_roots_and_dlog():
    assert primitive_root(7) == 3
    assert primitive_root(11) == 2
    assert primitive_root(13) == 2
    for q in (7, 11, 13):
        g = primitive_root(q)
        for a in range(1, q):
            assert pow(g, dlog(q, a), q) == a
    assert dlog(13, 7) == 11


def test_levels():
    lvls = enumerate_levels([13, 7])
    assert [lv.n for lv in lvls] == [1, 7, 13, 91]
    assert lvls[3].size == 72
    assert lvls[1].divides(lvls[3])
    assert not lvls[3].divides(lvls[1])
    assert lvls[3].quotient_primes(lvls[1]) == (13,)
    with pytest.raises(ValueError):
        SquarefreeLevel([6])


def test_group_ring_basics():
    R = _ring_f3()
    gr = GroupRing(R, SquarefreeLevel([7]))
    s = gr.sigma(7)
    assert s**6 == gr.one
    assert (s - gr.one) * (s + gr.one) == s * s - gr.one
    assert gr.aug(s**3 - gr.one).is_zero()
    z = gr.from_ring(R.var(1)) * s
    assert gr.coefficient(z, (1,)) == R.var(1)
    assert gr.unflatten(gr.flatten(z)) == z
    assert gr.as_module().action_closed()


def test_derivative_telescoping():
    # (sigma - 1) D_q = (q - 1) - N_q, checked where q - 1 is not zero
    R = _ring_z25()
    gr = GroupRing(R, SquarefreeLevel([7]))
    s = gr.sigma(7)
    D = kolyvagin_D(gr, 7)
    lhs = (s - gr.one) * D
    rhs = gr.from_ring(R.from_scalar(6)) - gr.norm(7)
    assert lhs == rhs
    # aug D_q = (q-1)(q-2)/2 = 15
    assert gr.aug(D) == R.from_scalar(15)


def test_full_derivative_product():
    R = _ring_f3()
    gr = GroupRing(R, SquarefreeLevel([7, 13]))
    D = kolyvagin_D_full(gr)
    D7 = kolyvagin_D(gr, 7)
    D13 = kolyvagin_D(gr, 13)
    assert D == D7 * D13 == D13 * D7


def test_cor_res_composition():
    R = _ring_f3()
    gr_d = GroupRing(R, SquarefreeLevel([7]))
    gr_n = GroupRing(R, SquarefreeLevel([7, 13]))
    res = res_map(gr_d, gr_n)
    cor = cor_map(gr_n, gr_d)
    z = gr_d.sigma(7) + gr_d.one
    lifted = res(z)
    assert len(lifted.coords) == 24  # two terms times |H_13|
    back = cor(lifted)
    assert back == 12 * z
    # res carries the norm: lifted is fixed by sigma_13
    assert gr_n.sigma(13) * lifted == lifted
    with pytest.raises(ValueError):
        cor_map(gr_d, gr_n)


def test_frobenius_exponents():
    R = _ring_f3()
    gr = GroupRing(R, SquarefreeLevel([7, 13]))
    fr = frobenius(gr, 7)
    assert set(fr.coords) == {(0, 11)}
    fr_inv = frobenius(gr, 7, inverse=True)
    assert fr * fr_inv == gr.one
    # own-prime component is trivial by convention
    fr13 = frobenius(gr, 13)
    (exps,) = fr13.coords
    assert exps[1] == 0 and exps[0] == dlog(7, 13)


def _diag_data(O, a, b, r=0):
    zero = {}
    mono = tuple([0] * r)
    return DeformationData(O, r, 2, {
        ell: [[{mono: O.from_int(a)}, zero], [zero, {mono: O.from_int(b)}]]
        for ell in (7, 13)
    })


def test_euler_poly_diag():
    R = _ring_z25()
    data = _diag_data(O5, 1, 2)
    coeffs = euler_poly(data, R, 7)
    assert coeffs == [R.one, R.from_scalar(-3), R.from_scalar(2)]
    dual = dual_euler_poly(data, R, 7)
    inv7 = O5.inv(O5.from_int(7))
    assert dual[0] == R.one
    assert dual[1] == R.scale(R.from_scalar(-3), inv7)
    assert dual[2] == R.scale(R.from_scalar(2), inv7 * inv7)
    gr = GroupRing(R, SquarefreeLevel([7]))
    at_one = eval_poly_at_group(gr, coeffs, gr.one)
    assert at_one == gr.from_ring(R.zero)


def test_prime_in_P():
    R = _ring_f3()
    good = _diag_data(O3, 1, 2, r=1)
    ok, reasons = prime_in_P(good, R, 7)
    assert ok, reasons
    ok13, _ = prime_in_P(good, R, 13)
    assert ok13
    # identity Frobenius has a rank-2 fixed space: not admissible
    flat = _diag_data(O3, 1, 1, r=1)
    ok2, reasons2 = prime_in_P(flat, R, 7)
    assert not ok2 and not reasons2["fitt1_unit"]
    # Frobenius without eigenvalue 1 fails the Euler condition
    nofix = _diag_data(O3, 2, 2, r=1)
    ok3, reasons3 = prime_in_P(nofix, R, 7)
    assert not ok3 and not reasons3["euler_at_one"]
    # 5 = 2 mod 3 fails the congruence
    ok4, reasons4 = prime_in_P(good, R, 5)
    assert not ok4 and not reasons4["congruence"]
    assert vp(6, 3) == 1 and vp(10, 5) == 1


def test_e_map():
    R = _ring_f3()
    gr = GroupRing(R, SquarefreeLevel([7]))
    s = gr.sigma(7)
    for j in range(1, 6):
        val = e_map(gr, s**j - gr.one)
        assert val == R.from_scalar(j)
    # the square of the augmentation ideal dies
    z = (s - gr.one) * (s**2 - gr.one)
    assert e_map(gr, z).is_zero()
    with pytest.raises(ValueError):
        e_map(gr, s)  # aug nonzero
    gr25 = GroupRing(_ring_z25(), SquarefreeLevel([7]))
    with pytest.raises(ValueError):
        e_map(gr25, gr25.sigma(7) - gr25.one)  # 6 nonzero mod 25


def test_generator_change():
    R = _ring_f3()
    gr = GroupRing(R, SquarefreeLevel([7]))
    f = generator_change(gr, {7: 5})
    s = gr.sigma(7)
    assert f(s) == s**5
    assert f(gr.one) == gr.one
    D = kolyvagin_D(gr, 7)
    fD = f(D)
    # coefficient v moves to exponent 5v
    assert gr.coefficient(fD, (5 % 6,)) == R.from_scalar(1)
    assert gr.coefficient(fD, (10 % 6,)) == R.from_scalar(2)
    with pytest.raises(ValueError):
        generator_change(gr, {7: 2})


small = st.integers(0, 2)


@given(st.lists(small, min_size=6, max_size=6),
       st.lists(small, min_size=6, max_size=6))
@settings(max_examples=30, deadline=None)
def test_prop_group_ring_commutative(a, b):
    R = _ring_f3()
    gr = GroupRing(R, SquarefreeLevel([7]))
    s = gr.sigma(7)
    za = gr.zero
    zb = gr.zero
    for k, (x, y) in enumerate(zip(a, b)):
        za = za + x * (s**k)
        zb = zb + y * (s**k)
    assert za * zb == zb * za
    assert gr.aug(za * zb) == gr.aug(za) * gr.aug(zb)
