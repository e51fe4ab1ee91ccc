from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from crncompare import bundles
from crncompare.conditions import (CHECKERS, CoupledPair, GroupPartition, check_thm_3_1,
                                   check_thm_3_2, check_thm_3_3, check_thm_S2, suggest_groups,
                                   verify_assumption_S1)
from crncompare.errors import PreconditionFailed, ValidationError
from crncompare.model import enumerate_states, exact_rate_vector
from crncompare.order import preceq


def thm_3_1_oracle(pair):
    """Direct transcription of the pairwise conditions, in exact arithmetic."""
    net, A, ns = pair.base, pair.order, pair.ns
    X = [tuple(x) for x in enumerate_states(net).tolist()]
    inside = set(X)
    rate_a = {x: exact_rate_vector(net, ns, x) for x in X}
    rate_b = {x: pair.exact_rates(x)[1] for x in X}
    for x in X:
        for y in X:
            if not preceq(A, x, y):
                continue
            for j, v in enumerate(ns.vectors):
                yv = tuple(a + b for a, b in zip(y, v))
                xv = tuple(a + b for a, b in zip(x, v))
                if yv in inside and not preceq(A, x, yv) and rate_b[y][j] > rate_a[x][j]:
                    return False
                if xv in inside and not preceq(A, xv, y) and rate_b[y][j] < rate_a[x][j]:
                    return False
    return True


def _assert_consistent(rep):
    assert rep.passed == (rep.witness is None)


def test_enzyme1_goldens(enzyme1):
    up = enzyme1.pair(k3=2)
    for chk in (check_thm_3_1, check_thm_3_2):
        rep = chk(up)
        assert rep.passed, rep.to_dict()
        _assert_consistent(rep)
    same = enzyme1.pair(k3=1)
    assert check_thm_3_1(same).passed and check_thm_3_2(same).passed
    down = enzyme1.pair(k3=Fraction(1, 2))
    for chk in (check_thm_3_1, check_thm_3_2):
        rep = chk(down)
        assert not rep.passed
        _assert_consistent(rep)
        w = rep.witness
        assert preceq(down.order, w["x"], w["y"])


def test_enzyme1_witness_is_a_real_violation(enzyme1):
    pair = enzyme1.pair(k3=Fraction(1, 2))
    w = check_thm_3_2(pair).witness
    ra, rb = pair.exact_rates(w["x"])[0], pair.exact_rates(w["y"])[1]
    j = w["indices"][0] - 1
    # the k3 direction raises row 2 of A, so the variant must be at least as fast
    assert rb[j] < ra[j]


def test_enzyme2_histone_histone_tf():
    e2 = bundles.enzyme2()
    assert check_thm_3_2(e2.pair(), truncation=e2.truncation).passed
    assert not check_thm_3_2(e2.pair(k5=Fraction(1, 2)), truncation=e2.truncation).passed
    h = bundles.histone()
    assert check_thm_3_2(h.pair()).passed
    assert check_thm_3_2(h.pair(mu=1)).passed
    rep = check_thm_3_2(h.pair(mu=Fraction(1, 2)))
    assert not rep.passed and rep.witness is not None
    tf = bundles.histone_tf()
    rep = check_thm_3_2(tf.pair(), truncation=tf.truncation)
    assert rep.passed and "truncation" in rep.scope


def test_braess_grouped(braess):
    rep = check_thm_3_3(braess.pair(), braess.partitions["main"])
    assert rep.passed
    bad = bundles.braess(k2=50, k4=10)
    rep = check_thm_3_3(bad.pair(k5=1000), bad.partitions["main"])
    assert not rep.passed
    assert rep.witness["row"] == 2


def test_braess_signed_groups():
    b = bundles.braess(Stot=3, k1=30, k2=50, k3=10, k4=10, k5=1000)
    assert check_thm_S2(b.pair("si1", k5=10), b.partitions["si1"]).passed
    assert not check_thm_S2(b.pair("si1", k5=2000), b.partitions["si1"]).passed
    b2 = bundles.braess(Stot=3, k2=10, k4=50, k5=10)
    assert check_thm_S2(b2.pair("si2", k5=1000), b2.partitions["si2"]).passed


def test_suggest_groups(braess):
    gp = suggest_groups(braess.order(), braess.pair().ns)
    assert gp.one_based() == [[1, 3], [2, 4], [5]]
    assert gp.eta == ((1, -1), (0, 1), (0, 0))
    e2 = bundles.enzyme2()
    assert suggest_groups(e2.order(), e2.pair().ns).one_based() == [[j] for j in range(1, 7)]


def test_assumption_S1(braess):
    ns = braess.pair().ns
    si1 = braess.order("si1")
    assert verify_assumption_S1(si1, ns, braess.partitions["si1"]) == (True, None)
    main = braess.order()
    assert verify_assumption_S1(main, ns, suggest_groups(main, ns))[0]
    # in block {5,2}, <A_3, v_2> = 1 follows <A_3, v_5> = 0
    swapped = GroupPartition.from_one_based([[3, 1], [5, 2], [4]])
    ok, where = verify_assumption_S1(si1, ns, swapped)
    assert not ok and where[0] == 2
    with pytest.raises(PreconditionFailed):
        check_thm_S2(braess.pair("si1"), swapped)


def _brute_S1(A, V, blocks):
    AV = np.asarray(V) @ np.asarray(A).T
    for g in blocks:
        for q in range(1, len(g)):
            for i in range(AV.shape[1]):
                c, p = AV[g[q], i], AV[g[q - 1], i]
                if c != p and c != 0:
                    return False
    return True


@given(st.permutations(range(5)), st.integers(1, 4))
def test_assumption_S1_bruteforce(perm, cut):
    b = bundles.braess()
    ns = b.pair().ns
    blocks = [tuple(perm[:cut]), tuple(perm[cut:])]
    gp = GroupPartition(tuple(blocks))
    for name in ("main", "si1", "si2"):
        A = b.order(name)
        assert verify_assumption_S1(A, ns, gp)[0] == _brute_S1(A.A, ns.vectors, blocks)


def test_group_preconditions(braess):
    with pytest.raises(PreconditionFailed):
        check_thm_3_3(braess.pair(), GroupPartition.from_one_based([[1, 2], [3, 4], [5]]))
    with pytest.raises(PreconditionFailed):
        check_thm_3_3(braess.pair(), GroupPartition.from_one_based([[1, 3], [2, 4]]))


def test_unit_images_required():
    e1 = bundles.enzyme1()
    pair = CoupledPair(e1.network, e1.variant(k3=2), ((-2, 0, 0, 0), (0, 1, 0, 0)))
    with pytest.raises(PreconditionFailed):
        check_thm_3_2(pair)
    # the pairwise checker has no such precondition
    assert check_thm_3_1(pair).passed == thm_3_1_oracle(pair)


def test_pair_validation():
    e1 = bundles.enzyme1()
    with pytest.raises(ValidationError):
        CoupledPair(e1.network, bundles.enzyme1(Stot=4).network, e1.order())
    with pytest.raises(ValidationError):
        CoupledPair(e1.network, e1.network, ((1, 0),))


def test_single_group_matches_per_index():
    b = bundles.histone()
    for mu in (Fraction(1, 2), 1, 2):
        pair = b.pair(mu=mu)
        n = pair.ns.n
        single = GroupPartition(tuple((j,) for j in range(n)))
        assert check_thm_3_3(pair, single).passed == check_thm_3_2(pair).passed


def test_deterministic_witness(enzyme1):
    pair = enzyme1.pair(k3=Fraction(1, 3))
    assert check_thm_3_2(pair).to_dict() == check_thm_3_2(pair).to_dict()


def test_checkers_registry():
    assert set(CHECKERS) == {"3.1", "3.2", "3.3", "S.2"}


rate = st.sampled_from([Fraction(1, 3), Fraction(1, 2), 1, 2, 3])


@settings(max_examples=40)
@given(st.sampled_from(["enzyme1", "histone", "braess"]), st.data())
def test_implications_and_oracle(bid, data):
    b = bundles.build(bid)
    names = [k for k in b.params if not k.endswith("tot")]
    base = {k: data.draw(rate, label=k) for k in names}
    var = {k: data.draw(rate, label="v" + k) for k in names}
    b = bundles.build(bid, **base)
    pair = b.pair(**var)
    r31 = check_thm_3_1(pair)
    assert r31.passed == thm_3_1_oracle(pair)
    r32 = check_thm_3_2(pair)
    _assert_consistent(r32)
    if r32.passed:
        assert r31.passed
        assert check_thm_3_3(pair).passed
    single = GroupPartition(tuple((j,) for j in range(pair.ns.n)))
    assert check_thm_3_3(pair, single).passed == r32.passed
