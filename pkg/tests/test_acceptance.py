"""Acceptance gate: eleven numbered criteria, one line each.

Every criterion prints a single pass/fail line (visible with -s or in
failure output) and asserts exact equалity at its stated tolerance; no
criterion is weakened for speed. Shared systems live in small builders
so each test stands alone.
"""

import itertools
import json
import random
import time

from iwakol.cli import main as cli_main
from iwakol.coeff import CoeffRing
from iwakol.euler import (
    convert_rubin,
    generate_multiplicative,
    verify_all_norm_relations,
)
from iwakol.fitting import (
    LinearElement,
    PresentedModule,
    estimate_local_exponent,
    localized_fitting_exponents,
    specialization_length,
)
from iwakol.galois import DeformationData
from iwakol.kolyvagin import (
    admissible_levels,
    c_i_ladder,
    check_mps_independence,
    derivative_class,
    ki_ideal,
    ki_ideal_brute,
    kolyvagin_D_generator,
    scalar_extension_check,
    scalar_extension_fitting,
    strong_specialization_report,
    universal_consistency,
    universal_kolyvagin,
    weak_specialization,
    _gr,
)
from iwakol.lam import (
    AffineTransform,
    MonicParameterSystem,
    QuotientRing,
    apply_affine,
    elementary_decomposition,
    multiply_by_component,
    reduce_map,
)
from iwakol.linalg import Ideal, extend_hom
from iwakol.verify import brute_force_group_h1, verify_suite

SEED = 20260819

ZERO: dict = {}


def _line(num, detail):
    print(f"criterion {num:2d}: PASS - {detail}")


def _standard_mps(O, r):
    hs = [{tuple(1 if j == i else 0 for j in range(r)): O.one}
          for i in range(r)]
    return MonicParameterSystem(O, O.uniformizer, hs)


def _small_standard_rings(O, budget=6):
    """All standard-system quotients over O with size <= p^budget."""
    out = []
    for r in (0, 1, 2):
        mps = _standard_mps(O, r)
        for m0 in range(1, budget + 1):
            rest = [range(1, budget + 1)] * r
            for tail in itertools.product(*rest):
                weight = m0
                for m in tail:
                    weight *= m
                if weight <= budget:
                    out.append(QuotientRing(mps, (m0,) + tail))
    return out


def _diag_frob(O, r, primes, d2=2):
    mono = tuple([0] * r)
    return {q: [[{mono: O.one}, ZERO], [ZERO, {mono: O.from_int(d2)}]]
            for q in primes}


def _es_r0(O, primes=(7, 13, 19), rho=1, flavor="direct"):
    mps = MonicParameterSystem(O, O.uniformizer, [])
    ring = QuotientRing(mps, (2,))
    data = DeformationData(O, 0, 2, _diag_frob(O, 0, primes), name="diag12")
    base = [ring.one, ring.from_scalar(2)][:rho]
    es = generate_multiplicative(data, ring, list(primes), base,
                                 flavor=flavor)
    return es, ring, QuotientRing(mps, (1,))


def _es_r1(O, depths=(2, 3), primes=(7, 13, 19)):
    mps = _standard_mps(O, 1)
    W = QuotientRing(mps, depths)
    data = DeformationData(O, 1, 2, _diag_frob(O, 1, primes),
                           name="diag12-r1")
    es = generate_multiplicative(data, W, list(primes), [W.var(1)])
    return es, mps, W


def _es_r2(O, primes=(7, 19, 109), frob_poly=None):
    mps = _standard_mps(O, 2)
    W = QuotientRing(mps, (2, 2, 3))
    poly = frob_poly or {(0, 0): O.one, (1, 0): O.one}
    frob = {q: [[dict(poly)]] for q in primes}
    data = DeformationData(O, 2, 1, frob, name="plane")
    return generate_multiplicative(data, W, list(primes), [W.var(1)]), mps, W


# ---------------------------------------------------------------------------


def test_criterion_01_fitting_closed_form():
    rng = random.Random(SEED)
    O = CoeffRing(5, 7)
    rings = _small_standard_rings(O)
    checked = 0
    for _ in range(50):
        R = rings[rng.randrange(len(rings))]
        s = rng.randrange(1, 5)
        factors = [R.one, R.from_scalar(O.uniformizer)]
        factors += [R.var(i) for i in range(1, R.r + 1)]
        d = R.one
        diag = []
        for _ in range(s):
            d = d * factors[rng.randrange(len(factors))]
            diag.append(d)
        rows = [[diag[j] if t == j else R.zero for t in range(s)]
                for j in range(s)]
        pm = PresentedModule(R, s, rows)
        fitts = []
        for i in range(s + 1):
            prod = R.one
            for e in diag[:s - i]:
                prod = prod * e
            F = pm.fitting_ideal(i)
            assert F == R.ideal([prod])
            fitts.append(F)
        for a, b in zip(fitts, fitts[1:]):
            assert a.issubset(b)
        for dj in diag:
            assert fitts[0].issubset(R.ideal([dj]))
        lower = tuple(rng.randrange(1, m + 1) for m in R.depths)
        if lower != tuple(R.depths):
            R2 = QuotientRing(R.mps, lower)
            down = reduce_map(R, R2)
            rows2 = [[down.apply(e) for e in row] for row in rows]
            pm2 = PresentedModule(R2, s, rows2)
            for i in (0, 1):
                pushed = Ideal(R2, [down.apply(g)
                                    for g in pm.fitting_ideal(i).gens])
                assert pushed == pm2.fitting_ideal(i)
        checked += 1
    assert checked == 50
    _line(1, "50 random diagonal presentations, closed form, filtration, "
             "annihilator, base change")


def test_criterion_02_injectivity_and_extension_battery():
    O = CoeffRing(5, 7)
    budget = 6
    pairs = 0
    for src in _small_standard_rings(O, budget):
        for i in range(src.r + 1):
            tgt_depths = tuple(m + (1 if j == i else 0)
                               for j, m in enumerate(src.depths))
            weight = tgt_depths[0]
            for m in tgt_depths[1:]:
                weight *= m
            if weight > budget:
                continue
            tgt = QuotientRing(src.mps, tgt_depths)
            fn, report = multiply_by_component(i, src, tgt)
            assert report["injective"] and report["kernel_size"] == 1
            assert report["image_is_annihilator"]
            pairs += 1
    assert pairs >= 30

    rng = random.Random(SEED + 2)
    arenas = []
    R1 = QuotientRing(_standard_mps(O, 1), (2, 2))
    arenas.append(_gr(R1, (7,)))
    R2 = QuotientRing(_standard_mps(O, 1), (1, 3))
    arenas.append(_gr(R2, (13,)))
    R0 = QuotientRing(_standard_mps(O, 0), (3,))
    arenas.append(_gr(R0, (7, 13)))
    done = 0
    for k in range(200):
        gr = arenas[k % len(arenas)]
        mod = gr.as_module()
        R = gr.ring
        nsub = 1 + rng.randrange(2)
        subs = []
        for _ in range(nsub):
            s = gr.from_ring(R.random_elem(rng))
            if rng.randrange(2):
                s = s * gr.sigma(gr.level.primes[0])
            subs.append(s)
        t = gr.from_ring(R.random_elem(rng))
        sub_rows = [list(gr.flatten(s)) for s in subs]
        values = [list(gr.flatten(t * s)) for s in subs]
        h = extend_hom(sub_rows, values, mod, mod, certified=True)
        for row, val in zip(sub_rows, values):
            assert list(h.apply(row)) == val
        done += 1
    assert done == 200
    _line(2, f"{pairs} component multiplications certified injective with "
             "annihilator image; 200 hom extensions")


def test_criterion_03_group_ring_identities():
    O = CoeffRing(5, 3)
    R = QuotientRing(MonicParameterSystem(O, O.uniformizer, []), (3,))
    primes = [2, 3, 7, 11, 13, 17, 19, 23, 29, 31]
    for ell in primes:
        gr = _gr(R, (ell,))
        D = kolyvagin_D_generator(gr, ell)
        assert gr.sigma(ell) * D - D == (
            gr.from_ring(R.from_scalar(ell - 1)) - gr.norm(ell))
        assert gr.aug(D) == R.from_scalar((ell - 1) * (ell - 2) // 2)
    _line(3, f"telescoping and augmentation exact at {len(primes)} primes "
             "up to 31")


def test_criterion_04_euler_system_laws():
    O = CoeffRing(3, 4)
    total = 0
    es4, ring, I = _es_r0(O, primes=(7, 13, 19, 31), rho=2)
    for es in (
        es4,
        _es_r0(O, rho=1)[0],
        _es_r1(O)[0],
        _es_r2(O)[0],
        _es_r0(O, primes=(7, 13), rho=2, flavor="dual")[0],
    ):
        results = verify_all_norm_relations(es)
        assert results and all(good for _, _, good in results)
        total += len(results)

    dual = _es_r0(O, primes=(7, 13), rho=2, flavor="dual")[0]
    direct = convert_rubin(dual)
    converted = verify_all_norm_relations(direct)
    assert converted and all(good for _, _, good in converted)

    congruences = 0
    for es, I in ((_es_r0(O)[0], _es_r0(O)[2]),):
        for level in admissible_levels(es, I):
            if level.primes:
                derivative_class(es, level.primes, I)
                congruences += 1
    assert congruences >= 3
    _line(4, f"{total} adjacent-pair relations, rubin conversion, "
             f"{congruences} admissible congruences")


def test_criterion_05_kolyvagin_engine_coherence():
    O = CoeffRing(3, 4)
    es, ring, I = _es_r0(O)
    for q in (7, 13, 19):
        uni = universal_kolyvagin(es, q, I)
        kap = derivative_class(es, (q,), I).kappa
        assert [str(v) for v in uni] == [str(v) for v in kap]
    for n in (91, 133, 247, 1729):
        universal_consistency(es, n, I)

    O2 = CoeffRing(3, 2)
    es1, mps, W = _es_r1(O2)
    I2 = QuotientRing(mps, (1, 2))
    default = ki_ideal(es1, I2, (19,))
    assert ki_ideal(es1, I2, (19,), generators={19: 5}) == default
    tweak = lambda alpha, ell, A: A + A.ring.from_scalar(ell - 1)
    assert ki_ideal(es1, I2, (19,), a_tweak=tweak) == default
    for n in (1, (19,)):
        assert ki_ideal(es1, I2, n) == ki_ideal_brute(es1, I2, n)
    _line(5, "universal equals derivative at single primes, descent "
             "consistent at 4 composites, generator invariance, "
             "shortcut equals enumeration")


def test_criterion_06_ladder_laws():
    O = CoeffRing(3, 2)
    es, mps, W = _es_r1(O, depths=(2, 4))
    floors = [(1, 1), (1, 2), (1, 3), (1, 4)]
    lad = c_i_ladder(es, mps, 1, floors, pool=(7, 13, 19))
    assert len(lad.ideals) == 4
    assert all(lad.images_agree)
    for deep_R, deep_C, sh_R, sh_C in zip(lad.rings[1:], lad.ideals[1:],
                                          lad.rings, lad.ideals):
        down = reduce_map(deep_R, sh_R)
        pushed = Ideal(sh_R, [down.apply(g) for g in deep_C.gens])
        assert pushed.issubset(sh_C)
        assert pushed == sh_C

    alts_r1 = [
        MonicParameterSystem(O, O.uniformizer,
                             [{(1,): O.one, (0,): O.uniformizer}]),
        MonicParameterSystem(O, O.uniformizer,
                             [{(2,): O.one, (0,): O.uniformizer}]),
    ]
    for alt in alts_r1:
        out = check_mps_independence(es, alt, 1, [1, 2], pool=(19,))
        assert out["ok"]

    es2, mps2, W2 = _es_r2(O)
    alts_r2 = [
        MonicParameterSystem(O, O.uniformizer, [
            {(1, 0): O.one, (0, 0): O.uniformizer},
            {(0, 1): O.one, (0, 0): O.uniformizer}]),
        MonicParameterSystem(O, O.uniformizer, [
            {(1, 0): O.one},
            {(0, 1): O.one, (1, 0): O.uniformizer}]),
    ]
    for alt in alts_r2:
        out = check_mps_independence(es2, alt, 1, [1, 2], pool=(19,))
        assert out["ok"]

    rng = random.Random(SEED + 6)
    for _ in range(5):
        U = [[1 + 3 * rng.randrange(2), 0],
             [rng.randrange(3), 1 + 3 * rng.randrange(2)]]
        a = [3 * rng.randrange(3), 3 * rng.randrange(3)]
        T = AffineTransform(O, U, a)
        assert elementary_decomposition(T)
        out = check_mps_independence(es2, apply_affine(mps2, T), 1, [1, 2],
                                     pool=(19,))
        assert out["ok"]
    _line(6, "length-4 ladder equalities, 4 alternative systems at "
             "ranks 1 and 2, 5 random affine transports")


def test_criterion_07_scalar_extension():
    O = CoeffRing(5, 2)
    extensions = (("unramified", (-2, 0, 1)), ("eisenstein", (5, 0, 1)))
    rng = random.Random(SEED + 7)
    mps = _standard_mps(O, 1)
    W = QuotientRing(mps, (2, 2))
    x = W.var(1)
    bases = [x, x + W.from_scalar(5), W.from_scalar(2) * x, x * x + x]
    instances = 0
    for ext in extensions:
        O2 = CoeffRing(5, 2, ext)
        for k in range(10):
            d2 = 2 + rng.randrange(3)
            data = DeformationData(O, 1, 2, _diag_frob(O, 1, (11,), d2=d2),
                                   name=f"diag1{d2}")
            es = generate_multiplicative(data, W, [11],
                                         [bases[rng.randrange(len(bases))]])
            out = scalar_extension_check(es, O2, 1, [(1, 1), (2, 2)],
                                         pool=(11,))
            assert out["ok"]
            entries = [W.zero, W.one, x, W.from_scalar(5), x + W.one]
            rows = [[entries[rng.randrange(len(entries))] for _ in range(2)]
                    for _ in range(2)]
            pm = PresentedModule(W, 2, rows)
            fit = scalar_extension_fitting(pm, O2, rng.randrange(3))
            assert fit["extension"] and fit["contraction"]
            instances += 1
    assert instances == 20
    _line(7, "extension and contraction equalities plus the Fitting "
             "analogue, 10 instances over each quadratic extension of Z5")


def test_criterion_08_specialization():
    O = CoeffRing(3, 2)
    rng = random.Random(SEED + 8)
    polys = [{(0, 0): O.one, (1, 0): O.one},
             {(0, 0): O.one, (0, 1): O.one},
             {(0, 0): O.one, (1, 0): O.one, (0, 1): O.one}]
    systems = [_es_r2(O, frob_poly=poly)[0] for poly in polys]
    contained = 0
    equalities = []
    for k in range(20):
        es = systems[k % 3]
        coeffs = [rng.randrange(3), rng.randrange(3),
                  1 + 3 * rng.randrange(2)]
        out = weak_specialization(es, LinearElement(O, coeffs), 1, [1, 2],
                                  pool=(19,))
        assert all(e["containment"] for e in out["entries"])
        equalities.append([e["equality"] for e in out["entries"]])
        contained += len(out["entries"])

    mps1 = _standard_mps(O, 1)
    W1 = QuotientRing(mps1, (2, 2))
    frob = {19: [[{(0,): O.one, (1,): O.one}]]}
    data = DeformationData(O, 1, 1, frob, name="line")
    es_line = generate_multiplicative(data, W1, [19], [W1.var(1)])
    strong = strong_specialization_report(es_line, 0, 1, [1], (19,))
    f = strong["floors"][0]
    assert f["shallow_embedding_injective"]
    assert f["square_commutes"]
    assert f["admissibility_match"]
    assert strong["ok"]
    _line(8, f"{contained} weak containments (equality recorded on "
             f"{sum(map(len, equalities))} floors), strong report "
             f"two-sided: strong={strong['strong_equalities']} "
             f"final={strong['final_equalities']}")


def test_criterion_09_asymptotics():
    O = CoeffRing(5, 21)
    g = {(2,): O.one}
    series = []
    for N in range(3, 11):
        length, capped = specialization_length(O, g, "unit", N)
        assert not capped
        assert length == 2 * N
        series.append(length)
    slope, stable = estimate_local_exponent(series)
    assert stable and slope == 2

    coprime = {(1,): O.one, (0,): O.one}
    lengths = [specialization_length(O, coprime, "unit", N)[0]
               for N in range(3, 11)]
    assert len(set(lengths)) == 1

    data = localized_fitting_exponents(O, [{(1,): O.one}, g], "unit",
                                       range(3, 11))
    assert not data["capped"]
    s0, ok0 = estimate_local_exponent(data["values"][0])
    s1, ok1 = estimate_local_exponent(data["values"][1])
    assert ok0 and s0 == 3
    assert ok1 and s1 == 1
    _line(9, "lengths 2N for N in 3..10, coprime sequence constant, "
             "exponents recovered with zero drift")


def test_criterion_10_special_linear_cohomology():
    start = time.perf_counter()
    S = [[0, 4], [1, 0]]
    T = [[1, 1], [0, 1]]
    out = brute_force_group_h1([S, T], [S, T], 5, 2)
    elapsed = time.perf_counter() - start
    assert out["order"] == 120
    assert out["h1"] == 0
    assert elapsed < 60.0
    _line(10, f"dim H1 = 0 on the standard plane, order 120, "
              f"{elapsed:.2f}s")


def test_criterion_11_verify_determinism(tmp_path):
    f1 = tmp_path / "a.json"
    f2 = tmp_path / "b.json"
    assert cli_main(["verify", "--seed", "4", "--out", str(f1)]) == 0
    assert cli_main(["verify", "--seed", "4", "--out", str(f2)]) == 0
    assert f1.read_bytes() == f2.read_bytes()
    direct = json.dumps(verify_suite(seed=4), sort_keys=True)
    again = json.dumps(verify_suite(seed=4), sort_keys=True)
    assert direct == again
    _line(11, "verify twice with one seed, byte-identical reports")
