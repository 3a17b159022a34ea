"""The invariant battery and the brute-force cohomology solver."""

import json

import pytest

from iwakol.verify import (
    FAULT_TARGETS,
    QUICK_CHECKS,
    brute_force_group_h1,
    verify_suite,
)


def test_quick_battery_all_pass():
    report = verify_suite(seed=0, quick=True)
    assert report["ok"] is True
    assert [c["name"] for c in report["checks"]] == list(QUICK_CHECKS)
    assert all(c["ok"] for c in report["checks"])


def test_report_byte_identical():
    a = json.dumps(verify_suite(seed=11, quick=True), sort_keys=True)
    b = json.dumps(verify_suite(seed=11, quick=True), sort_keys=True)
    assert a == b


def test_fault_injection_names_the_target():
    for target in FAULT_TARGETS:
        if target not in QUICK_CHECKS:
            continue
        report = verify_suite(seed=0, quick=True, fault=target)
        assert report["ok"] is False
        failing = [c["name"] for c in report["checks"] if not c["ok"]]
        assert failing == [target]


def test_fault_guards():
    with pytest.raises(ValueError, match="unknown fault target"):
        verify_suite(fault="bogus")
    # ladder-compat is outside the quick subset, so quick would skip it
    with pytest.raises(ValueError, match="quick subset"):
        verify_suite(quick=True, fault="ladder-compat")


def test_h1_trivial_group():
    out = brute_force_group_h1([], [], 5, 2)
    assert out == {"order": 1, "cocycles": 0, "coboundaries": 0, "h1": 0}


def test_h1_order_two_coprime_action():
    # |G| = 2 is invertible mod 5, so cohomology vanishes in degree one
    out = brute_force_group_h1([[[4]]], [[[1, 0], [0, 1]]], 5, 2)
    assert out["order"] == 2
    assert out["h1"] == 0


def test_h1_cyclic_p_with_trivial_action():
    # Z/5 acting trivially on F_5: Hom(Z/5, F_5) is one dimensional
    uni = [[[1, 1], [0, 1]]]
    out = brute_force_group_h1(uni, [[[1]]], 5, 1)
    assert out["order"] == 5
    assert out["cocycles"] == 1
    assert out["coboundaries"] == 0
    assert out["h1"] == 1


def test_h1_guards():
    with pytest.raises(ValueError, match="one action matrix"):
        brute_force_group_h1([[[4]]], [], 5, 1)
    S = [[0, 4], [1, 0]]
    T = [[1, 1], [0, 1]]
    with pytest.raises(ValueError, match="budget"):
        brute_force_group_h1([S, T], [S, T], 5, 2, budget=10)
    # the identity as a structure matrix with a nontrivial action is
    # inconsistent: the closure sees one element with two action values
    with pytest.raises(ValueError, match="determine the action"):
        brute_force_group_h1([[[1]]], [[[2]]], 5, 1)


def test_quick_subset_is_stable():
    assert QUICK_CHECKS == (
        "fitting-diagonal", "component-multiplication", "hom-extension",
        "group-ring-identities", "norm-relation", "rubin-conversion",
        "derivative-congruence", "universal-descent", "coordinate-ideals",
        "strong-specialization", "del-statistics", "asymptotics",
        "group-h1")
