import numpy as np
from hypothesis import given, strategies as st

from crncompare import kernels as K
from crncompare.conditions import GroupPartition
from crncompare.coupling import phi_map, psi_map

W = np.uint64


def _philox(ctr, key):
    out = K.philox4x32(*(W(c) for c in ctr), *(W(k) for k in key))
    return tuple(int(v) for v in out)


def test_philox_known_answers():
    # Random123 kat_vectors for philox4x32_10
    assert _philox((0, 0, 0, 0), (0, 0)) == (0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8)
    f = 0xffffffff
    assert _philox((f, f, f, f), (f, f)) == (0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd)
    assert _philox((0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344), (0xa4093822, 0x299f31d0)) \
        == (0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1)


def test_uniform_pair_regression():
    assert K.uniform_pair(W(1), W(2), 5, 3, 0) == (0.7038906800135428, 0.6546164909917785)


def test_uniforms_in_unit_interval():
    u = np.array([K.uniform_pair(W(7), W(0), s, 0, 1) for s in range(2000)]).ravel()
    assert u.min() >= 0 and u.max() < 1
    assert abs(u.mean() - 0.5) < 0.02


V2 = ((1, 0), (0, 1))


def test_phi_intervals():
    lam = 4.0
    x = (2, 2)
    rates = (1.0, 1.0)  # lambda/4 each: intervals [0, .25) and [.5, .75)
    assert phi_map(rates, lam, x, 0.1, V2) == (3, 2)
    assert phi_map(rates, lam, x, 0.3, V2) == x
    assert phi_map(rates, lam, x, 0.6, V2) == (2, 3)
    assert phi_map(rates, lam, x, 0.8, V2) == x
    assert phi_map(rates, lam, x, 0.25, V2) == x
    assert phi_map(rates, lam, x, 0.5, V2) == (2, 3)
    assert phi_map(rates, lam, x, 1.0, V2) == x
    assert phi_map((0.0, 0.0), lam, x, 0.0, V2) == x
    assert phi_map(lambda s: (1.0, 0.0), lam, x, 0.0, V2) == (3, 2)


BRAESS_V = ((-1, 1, 0, 0), (0, -1, 0, 1), (-1, 0, 1, 0), (0, 0, -1, 1), (0, -1, 1, 0))


def test_psi_stacks_blocks_in_sigma_order():
    gp = GroupPartition.from_one_based([[3, 1], [4, 2], [5]])
    lam = 10.0
    R = (1.0, 2.0, 0.5, 1.5, 0.7)  # Upsilon_1..5
    x = (2, 1, 1, 1)
    step = lambda u: psi_map(R, lam, gp, x, u, BRAESS_V)
    add = lambda j: tuple(a + b for a, b in zip(x, BRAESS_V[j - 1]))
    # block 1 from 0: Upsilon_3 on [0, .05), then Upsilon_1 on [.05, .15)
    assert step(0.0) == add(3) and step(0.049) == add(3)
    assert step(0.05) == add(1) and step(0.149) == add(1)
    assert step(0.151) == x
    # block 2 from 2/5: Upsilon_4 on [.4, .55), Upsilon_2 on [.55, .75)
    assert step(0.4) == add(4) and step(0.551) == add(2) and step(0.751) == x
    # block 3 from 4/5
    assert step(0.8) == add(5) and step(0.87) == x


rates5 = st.lists(st.floats(0, 1.9, allow_nan=False), min_size=5, max_size=5)


@given(rates5, st.floats(0, 1, allow_nan=False))
def test_psi_singletons_equal_phi(R, u):
    lam = 10.0
    gp = GroupPartition(tuple((j,) for j in range(5)))
    x = (3, 3, 3, 3)
    assert psi_map(R, lam, gp, x, u, BRAESS_V) == phi_map(R, lam, x, u, BRAESS_V)


@given(rates5, st.floats(0, 1, allow_nan=False))
def test_phi_jump_iff_in_interval(R, u):
    lam = 10.0
    y = phi_map(R, lam, (3, 3, 3, 3), u, BRAESS_V)
    hits = [j for j in range(5) if j / 5 <= u < j / 5 + R[j] / lam]
    assert len(hits) <= 1
    expect = (3, 3, 3, 3) if not hits else tuple(3 + v for v in BRAESS_V[hits[0]])
    assert y == expect
