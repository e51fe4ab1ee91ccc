"""End-to-end acceptance criteria 1-10.

Each test records a PASS/FAIL line; conftest prints them all at the end of the run.
"""
import contextlib
import math
import time
from fractions import Fraction

import numpy as np
import pytest

from crncompare import bundles
from crncompare.analysis import (compare_mfpt_coupled, empirical_stationary, estimate_mfpt,
                                 product_form_stationary, set_mass_error, stationary_set_mass,
                                 tv_distance, verify_drift, DistributionTable)
from crncompare.conditions import check_thm_3_2, check_thm_3_3, check_thm_S2
from crncompare.coupling import CouplingConfig, replicate_coupled, replicate_ssa

RESULTS = {}


@contextlib.contextmanager
def criterion(n, label):
    t0 = time.perf_counter()
    detail = {}
    try:
        yield detail
    except BaseException:
        RESULTS[n] = f"criterion {n:>2} FAIL  {label}"
        print(RESULTS[n])
        raise
    extra = ", ".join(f"{k}={v}" for k, v in detail.items())
    RESULTS[n] = f"criterion {n:>2} PASS  {label} ({time.perf_counter() - t0:.1f}s{', ' + extra if extra else ''})"
    print(RESULTS[n])


# configurations shared by criteria 1 and 3 ---------------------------------------------

def _si1():
    return bundles.braess(Stot=20, k1=30, k2=50, k3=10, k4=10, k5=1000)


def _si2():
    return bundles.braess(Stot=20, k1=30, k2=10, k3=10, k4=50, k5=10)


def configs():
    """(name, pair, checker, partition, truncation, start states, coupling mode)."""
    e1, e2, h, tf, br = (bundles.enzyme1(), bundles.enzyme2(), bundles.histone(),
                         bundles.histone_tf(), bundles.braess())
    si1, si2 = _si1(), _si2()
    return [
        ("enzyme1 k3 x2", e1.pair(), "3.2", None, None, [e1.initial["s"]], "per-index"),
        ("enzyme2 k5 x2", e2.pair(), "3.2", None, e2.truncation, [e2.initial["empty"]], "per-index"),
        ("histone mu x2", h.pair(), "3.2", None, None, [h.initial["r"], h.initial["a"]], "per-index"),
        ("histone_tf k5a x2", tf.pair(), "3.2", None, tf.truncation, [tf.initial["r"]], "per-index"),
        ("braess k2=k4, k5 x2", br.pair(), "3.3", br.partitions["main"], None,
         [br.initial["start"]], "grouped"),
        ("braess si1 k5 1000->10", si1.pair("si1", k5=10), "S.2", si1.partitions["si1"], None,
         [si1.initial["start"]], "grouped"),
        ("braess si2 k5 10->1000", si2.pair("si2", k5=1000), "S.2", si2.partitions["si2"], None,
         [si2.initial["start"]], "grouped"),
    ]


def _check(pair, thm, gp, trunc):
    if thm == "3.2":
        return check_thm_3_2(pair, truncation=trunc)
    if thm == "3.3":
        return check_thm_3_3(pair, gp, truncation=trunc)
    return check_thm_S2(pair, gp, truncation=trunc)


def test_criterion_01_checker_goldens():
    with criterion(1, "condition-checker goldens") as info:
        slowest = 0.0
        for name, pair, thm, gp, trunc, _, _ in configs():
            t0 = time.perf_counter()
            rep = _check(pair, thm, gp, trunc)
            dt = time.perf_counter() - t0
            slowest = max(slowest, dt)
            assert rep.passed is True, (name, rep.to_dict())
            assert dt < 30, name
        info["slowest_check"] = f"{slowest:.2f}s"


def test_criterion_02_checker_falsification():
    with criterion(2, "checker falsification") as info:
        e1 = bundles.enzyme1()
        r1 = check_thm_3_2(e1.pair(k3=Fraction(1, 2)))
        br = bundles.braess(k2=50, k4=10)
        r2 = check_thm_3_3(br.pair(k5=2), br.partitions["main"])
        h = bundles.histone()
        r3 = check_thm_3_2(h.pair(mu=Fraction(1, 2)))
        for rep in (r1, r2, r3):
            assert rep.passed is False
            w = rep.witness
            assert w is not None and w["x"] is not None and w["y"] is not None
        info["witness_rows"] = [r1.witness["row"], r2.witness["row"], r3.witness["row"]]


def test_criterion_03_pathwise_ordering():
    with criterion(3, "pathwise ordering, 10^3 coupled replicates to T=10") as info:
        total = 0
        for name, pair, _, gp, _, starts, mode in configs():
            cfg = CouplingConfig(mode=mode, groups=gp, horizon=10.0, seed=20240601, record="none")
            for x0 in starts:
                summ = replicate_coupled(pair, x0, x0, cfg, n_rep=1000)
                assert summ.ordered.all(), (name, x0, summ.violations)
                total += summ.n
        info["replicates"] = total


def _tv_counts(a, b):
    keys = {tuple(r) for r in a.tolist()} | {tuple(r) for r in b.tolist()}
    ca = {k: 0 for k in keys}
    cb = dict(ca)
    for r in a.tolist():
        ca[tuple(r)] += 1
    for r in b.tolist():
        cb[tuple(r)] += 1
    return 0.5 * sum(abs(ca[k] / len(a) - cb[k] / len(b)) for k in keys)


def test_criterion_04_marginal_law():
    with criterion(4, "coupled vs SSA marginal law at t=1, Enzyme I") as info:
        t0 = time.perf_counter()
        e1 = bundles.enzyme1()
        s = e1.initial["s"]
        summ = replicate_coupled(e1.pair(), s, s, CouplingConfig(horizon=1.0, seed=1, record="none"),
                                 n_rep=100_000)
        ssa = replicate_ssa(e1.network, s, 1.0, seed=2, n_rep=100_000)
        tv = _tv_counts(summ.final_x, ssa.final)
        dt = time.perf_counter() - t0
        info["tv"] = f"{tv:.4f}"
        info["states_seen"] = len({tuple(r) for r in ssa.final.tolist()})
        assert tv <= 0.02
        assert dt < 60


def test_criterion_05_braess_insensitivity():
    with criterion(5, "Braess MFPT insensitive to k5 when k2=k4") as info:
        ests = []
        for k5 in (Fraction(1, 10), 10):
            b = bundles.braess(Stot=5, k1=1, k2=1, k3=1, k4=1, k5=k5)
            est = estimate_mfpt(b.network, b.initial["start"], b.targets["end"], 1e4, 10_000, seed=5)
            assert est.n_censored == 0
            ests.append(est)
        diff = abs(ests[0].mean - ests[1].mean)
        pooled = math.hypot(ests[0].std_error, ests[1].std_error)
        info["means"] = f"{ests[0].mean:.3f}/{ests[1].mean:.3f}"
        info["z"] = f"{diff / pooled:.2f}"
        assert diff <= 3 * pooled


def test_criterion_06_braess_directionality():
    with criterion(6, "Braess k5=1000 vs 10: T >= T-breve per replicate") as info:
        b = _si1()
        cfg = CouplingConfig(mode="grouped", groups=b.partitions["si1"], horizon=1e4, seed=6)
        cmp = compare_mfpt_coupled(b.pair("si1", k5=10), b.initial["start"], b.initial["start"],
                                   b.targets["end"], cfg, n=1000)
        assert cmp.direction == "increasing"
        assert cmp.pathwise_ok and cmp.n_pathwise_violations == 0
        assert cmp.n_paired == 1000
        assert np.all(cmp.times_x >= cmp.times_xbreve)
        assert cmp.paired_mean_diff > 3 * cmp.paired_std_error
        info["diff"] = f"{cmp.paired_mean_diff:.4f}+-{cmp.paired_std_error:.4f}"


def test_criterion_07_product_form():
    with criterion(7, "product-form stationary law vs occupation estimate") as info:
        t0 = time.perf_counter()
        e2 = bundles.enzyme2()
        net = e2.network.with_caps([15, 15, None, None])
        emp = empirical_stationary(net, e2.initial["empty"], 1e5, seed=7)
        pf = product_form_stationary(2, [1] * 6, [15, 15])
        tv = tv_distance(emp, pf)
        info["tv"] = f"{tv:.4f}"
        assert tv <= 0.05
        assert time.perf_counter() - t0 < 120


def test_criterion_08_histone_monotonicity():
    with criterion(8, "histone stationary masses and passage times move with mu") as info:
        h = bundles.histone()
        pair = h.pair()
        a, r = h.initial["a"], h.initial["r"]
        base = empirical_stationary(pair.base, r, 2e5, seed=8)
        var = empirical_stationary(pair.variant, r, 2e5, seed=9)
        for gamma, up in ((h.targets["a"], True), (h.targets["r"], False)):
            p, q = stationary_set_mass(base, gamma), stationary_set_mass(var, gamma)
            margin = 3 * math.hypot(set_mass_error(base, gamma), set_mass_error(var, gamma))
            assert (q - p if up else p - q) > margin
        info["pi_a"] = f"{stationary_set_mass(base, h.targets['a']):.3f}->{stationary_set_mass(var, h.targets['a']):.3f}"
        info["pi_r"] = f"{stationary_set_mass(base, h.targets['r']):.3f}->{stationary_set_mass(var, h.targets['r']):.3f}"
        cfg = CouplingConfig(horizon=1e4, seed=8)
        ar = compare_mfpt_coupled(pair, a, a, h.targets["r"], cfg, n=1000)
        assert ar.direction == "decreasing" and ar.pathwise_ok
        assert np.all(ar.times_x <= ar.times_xbreve)
        ra = compare_mfpt_coupled(pair, r, r, h.targets["a"], cfg, n=1000)
        assert ra.direction == "increasing" and ra.pathwise_ok
        assert np.all(ra.times_xbreve <= ra.times_x)


def test_criterion_09_drift():
    with criterion(9, "Foster-Lyapunov drift inequalities") as info:
        tf = bundles.histone_tf()
        r1 = verify_drift(tf.network, tf.lyapunov, [None, None, 100])
        assert r1.passed and r1.n_states == 10 * 101
        e2 = bundles.enzyme2()
        r2 = verify_drift(e2.network, e2.lyapunov, [50, 50, None, None])
        assert r2.passed and not r2.C_touches_boundary and r2.V_nonnegative
        info["C_size"] = len(r2.C)
        info["d"] = f"{r2.constants['d']:.4f}"


def test_criterion_10_property_suites():
    import test_coupling
    import test_kernels
    import test_model
    import test_order
    with criterion(10, "property suites") as info:
        props = [
            test_order.test_preorder_laws,
            test_order.test_antisymmetric_when_full_rank,
            test_order.test_upper_sets_are_increasing,
            test_kernels.test_psi_singletons_equal_phi,
            test_kernels.test_phi_jump_iff_in_interval,
            test_model.test_generator_rows_sum_to_zero,
            test_model.test_mass_action_bruteforce,
            test_coupling.test_same_seed_same_run,
        ]
        for fn in props:
            fn()
        test_coupling.test_determinism(bundles.enzyme1())
        info["suites"] = len(props) + 1
