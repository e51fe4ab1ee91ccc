"""Exhaustive checks of the comparison conditions on finite or truncated spaces.

All facet-type checks (per-index, grouped, signed-grouped) reduce to the same
obligation: on each triple (x, row i, y) with x <= y and y on facet i of the
cone translated to x, a sum of variant rates at y must be bounded by the same
sum of base rates at x, from above or below depending on a sign.
"""
from dataclasses import dataclass, field
from fractions import Fraction
import logging

import numpy as np

from .errors import InfiniteSpace, PreconditionFailed, ValidationError
from .model import (derive_net_structure, enumerate_states, exact_rate_vector,
                    is_finite, rate_table)
from .order import OrderSpec, check_av_entries, images

log = logging.getLogger(__name__)

REL_TOL = 1e-9
ABS_TOL = 1e-12


@dataclass(frozen=True)
class GroupPartition:
    """Ordered blocks of 0-based net-vector indices.

    The concatenation of the blocks is the bijection sigma. ``eta`` holds the
    common A v_j per block when the partition is in equal-image mode.
    """
    groups: tuple
    eta: tuple = None

    @property
    def sigma(self):
        return tuple(j for g in self.groups for j in g)

    @classmethod
    def from_one_based(cls, groups, eta=None):
        return cls(tuple(tuple(int(j) - 1 for j in g) for g in groups), eta)

    def one_based(self):
        return [[j + 1 for j in g] for g in self.groups]

    def validate(self, n):
        flat = self.sigma
        if sorted(flat) != list(range(n)) or any(len(g) == 0 for g in self.groups):
            raise PreconditionFailed(f"groups must partition the {n} net vectors")


@dataclass
class CoupledPair:
    """Base network (rates Upsilon) and variant (rates Upsilon-breve) with an order."""
    base: object
    variant: object
    order: OrderSpec
    ns: object = None
    perm: tuple = None  # variant net-vector index for each base index

    def __post_init__(self):
        b, v = self.base, self.variant
        if b.species != v.species:
            raise ValidationError("networks have different species")
        if b.state_space != v.state_space:
            raise ValidationError("networks have different state spaces")
        self.order = OrderSpec.of(self.order)
        if self.order.d != b.d:
            raise ValidationError("order matrix dimension does not match the networks")
        self.ns = derive_net_structure(b)
        nsv = derive_net_structure(v)
        if set(self.ns.vectors) != set(nsv.vectors):
            raise ValidationError("networks have different net reaction vectors")
        self.ns_variant = nsv
        self.perm = tuple(nsv.index(vec) for vec in self.ns.vectors)

    def rate_tables(self, states, space=None):
        """Float rate tables (base, variant) in base net-vector order."""
        ra = rate_table(self.base, self.ns, states, space)
        rb = rate_table(self.variant, self.ns_variant, states, space)[:, list(self.perm)]
        return ra, rb

    def exact_rates(self, x, space=None):
        ra = exact_rate_vector(self.base, self.ns, x, space)
        rbv = exact_rate_vector(self.variant, self.ns_variant, x, space)
        return ra, [rbv[k] for k in self.perm]


def make_pair(base, variant, order=None):
    if order is None:
        order = base.order_matrix
        if order is None:
            raise ValidationError("no order matrix given and the base model has none")
    return CoupledPair(base, variant, order)


@dataclass
class ConditionReport:
    theorem: str
    passed: bool
    pairs_checked: int
    n_states: int
    scope: str
    witness: dict = None
    equality_obligations: int = 0
    notes: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "theorem": self.theorem,
            "verdict": "pass" if self.passed else "fail",
            "scope": self.scope,
            "n_states": self.n_states,
            "pairs_checked": self.pairs_checked,
            "equality_obligations": self.equality_obligations,
            "witness": self.witness,
            **self.notes,
        }


class _Space:
    """Enumerated (possibly truncated) space shared by both rate families."""

    def __init__(self, pair, truncation=None, max_states=None):
        net = pair.base
        if truncation is not None:
            net = net.with_caps(truncation)
            self.scope = f"verified on truncation M={truncation}"
        else:
            if not is_finite(net):
                raise InfiniteSpace("state space is infinite; pass a truncation")
            self.scope = "exhaustive on finite state space"
        self.net = net
        kw = {} if max_states is None else {"max_states": max_states}
        self.states = enumerate_states(net, **kw)
        self.ra, self.rb = pair.rate_tables(self.states, space=net)
        self.AX = images(pair.order, self.states)
        self.pair = pair
        self._exact = {}

    def exact(self, idx):
        if idx not in self._exact:
            self._exact[idx] = self.pair.exact_rates(self.states[idx], space=self.net)
        return self._exact[idx]

    def state(self, idx):
        return [int(v) for v in self.states[idx]]


def _tol(a, b):
    return np.maximum(ABS_TOL, REL_TOL * np.maximum(np.abs(a), np.abs(b)))


def _first_violation(small, big, exact_check):
    """First flat position where small <= big fails.

    Float comparison decides clear cases; entries inside the tolerance band
    are settled by ``exact_check(pos)`` which returns True on violation.
    """
    diff = small - big
    tol = _tol(small, big)
    clear = diff > tol
    near = (np.abs(diff) <= tol) & (diff != 0)
    cand = np.flatnonzero(clear | near)
    for pos in cand:
        if clear.flat[pos] or exact_check(pos):
            return int(pos)
    return None


def _fmt(v):
    return float(v)


def _facet_check(pair, sp, obligations, theorem, av):
    """Run the generic facet obligation over every (x, i, y).

    obligations[i] is a list of (indices, sign): sign < 0 asks
    sum Upsilon-breve(y) <= sum Upsilon(x), sign > 0 asks >=.
    """
    m = pair.order.m
    S = len(sp.states)
    mats = []
    for i in range(m):
        obs = obligations[i]
        M = np.zeros((len(obs), pair.ns.n))
        for k, (idx, _) in enumerate(obs):
            M[k, list(idx)] = 1.0
        signs = np.array([s for _, s in obs], dtype=np.int64)
        mats.append((M, signs))
    triples = 0
    eq_obl = 0
    for a in range(S):
        D = sp.AX - sp.AX[a]
        comp = np.all(D >= 0, axis=1)
        tight = (D == 0) & comp[:, None]
        if av is not None:
            ys = np.flatnonzero(tight.any(axis=1))
            if len(ys):
                T = tight[ys]
                neg = (T[:, :, None] & (av.T[None, :, :] < 0)).any(axis=1)
                pos = (T[:, :, None] & (av.T[None, :, :] > 0)).any(axis=1)
                eq_obl += int(np.sum(neg & pos))
        for i in range(m):
            M, signs = mats[i]
            if not len(signs):
                continue
            ys = np.flatnonzero(tight[:, i])
            if not len(ys):
                continue
            triples += len(ys)
            lhs = sp.rb[ys] @ M.T          # sums of variant rates at y
            rhs = np.broadcast_to(sp.ra[a] @ M.T, lhs.shape)
            # put every obligation in the form small <= big
            small = np.where(signs < 0, lhs, rhs)
            big = np.where(signs < 0, rhs, lhs)

            def exact_check(pos, ys=ys, M=M, signs=signs):
                r, k = divmod(pos, len(signs))
                ex_x = sp.exact(a)[0]
                ex_y = sp.exact(int(ys[r]))[1]
                idx = np.flatnonzero(M[k])
                sx = sum((ex_x[j] for j in idx), Fraction(0))
                sy = sum((ex_y[j] for j in idx), Fraction(0))
                return sy > sx if signs[k] < 0 else sy < sx

            pos = _first_violation(small, big, exact_check)
            if pos is not None:
                r, k = divmod(pos, len(signs))
                idx = np.flatnonzero(M[k])
                witness = {
                    "x": sp.state(a),
                    "y": sp.state(int(ys[r])),
                    "row": i + 1,
                    "indices": [int(j) + 1 for j in idx],
                    "required": "variant(y) <= base(x)" if signs[k] < 0 else "variant(y) >= base(x)",
                    "variant_y": _fmt(lhs[r, k]),
                    "base_x": _fmt(rhs[r, k]),
                }
                return ConditionReport(theorem, False, triples, S, sp.scope, witness, eq_obl)
    return ConditionReport(theorem, True, triples, S, sp.scope, None, eq_obl)


def _require_unit_images(pair):
    av, ok = check_av_entries(pair.order, pair.ns)
    if not ok:
        raise PreconditionFailed("some A v_j has an entry outside {-1, 0, 1}")
    return av


def check_thm_3_2(pair, truncation=None, max_states=None):
    """Per-index facet conditions (requires every A v_j in {-1,0,1})."""
    av = _require_unit_images(pair)
    obligations = []
    for i in range(pair.order.m):
        obligations.append([((j,), int(np.sign(av[j, i]))) for j in range(pair.ns.n) if av[j, i] != 0])
    sp = _Space(pair, truncation, max_states)
    rep = _facet_check(pair, sp, obligations, "3.2", av)
    rep.notes["Av"] = av.tolist()
    return rep


def suggest_groups(order, ns):
    """Group net vectors with equal images A v_j, blocks in order of first appearance."""
    av, _ = check_av_entries(OrderSpec.of(order), ns)
    keys, groups = [], []
    for j, row in enumerate(map(tuple, av.tolist())):
        if row in keys:
            groups[keys.index(row)].append(j)
        else:
            keys.append(row)
            groups.append([j])
    return GroupPartition(tuple(tuple(g) for g in groups), tuple(keys))


def check_thm_3_3(pair, gp=None, truncation=None, max_states=None):
    """Grouped facet conditions with groups of equal images A v_j."""
    av = _require_unit_images(pair)
    if gp is None:
        gp = suggest_groups(pair.order, pair.ns)
    gp.validate(pair.ns.n)
    etas = []
    for g in gp.groups:
        rows = {tuple(av[j]) for j in g}
        if len(rows) != 1:
            raise PreconditionFailed(f"group {[j + 1 for j in g]} mixes different A v_j")
        etas.append(rows.pop())
    obligations = []
    for i in range(pair.order.m):
        obligations.append([(g, int(np.sign(eta[i]))) for g, eta in zip(gp.groups, etas) if eta[i] != 0])
    sp = _Space(pair, truncation, max_states)
    rep = _facet_check(pair, sp, obligations, "3.3", None)
    rep.notes["groups"] = gp.one_based()
    return rep


def verify_assumption_S1(order, ns, gp):
    """Within each block, consecutive <A_i, v_sigma(q)> equal the previous one or are 0.

    Returns (ok, (block, position, row)) with 1-based block, sigma position and row.
    """
    av, _ = check_av_entries(OrderSpec.of(order), ns)
    gp.validate(ns.n)
    pos = 0
    for k, g in enumerate(gp.groups):
        for q in range(1, len(g)):
            cur, prev = av[g[q]], av[g[q - 1]]
            for i in range(av.shape[1]):
                if cur[i] != prev[i] and cur[i] != 0:
                    return False, (k + 1, pos + q + 1, i + 1)
        pos += len(g)
    return True, None


def check_thm_S2(pair, gp, truncation=None, max_states=None):
    """Signed grouped facet conditions under the block ordering assumption."""
    av = _require_unit_images(pair)
    ok, where = verify_assumption_S1(pair.order, pair.ns, gp)
    if not ok:
        raise PreconditionFailed(f"block ordering assumption fails at (block, position, row) = {where}")
    obligations = []
    for i in range(pair.order.m):
        obs = []
        for g in gp.groups:
            minus = tuple(j for j in g if av[j, i] == -1)
            plus = tuple(j for j in g if av[j, i] == 1)
            if minus:
                obs.append((minus, -1))
            if plus:
                obs.append((plus, 1))
        obligations.append(obs)
    sp = _Space(pair, truncation, max_states)
    rep = _facet_check(pair, sp, obligations, "S.2", None)
    rep.notes["groups"] = gp.one_based()
    return rep


def check_thm_3_1(pair, truncation=None, max_states=None):
    """Pairwise conditions over all comparable pairs x <= y."""
    sp = _Space(pair, truncation, max_states)
    av, _ = check_av_entries(pair.order, pair.ns)
    V = pair.ns.V
    S = len(sp.states)
    n = pair.ns.n
    inside = np.stack([sp.net.contains(sp.states + V[j]) for j in range(n)], axis=1)
    pairs = 0
    for a in range(S):
        D = sp.AX - sp.AX[a]
        ys = np.flatnonzero(np.all(D >= 0, axis=1))
        pairs += len(ys)
        Dy = D[ys]
        # (5): y+v_j in X and not x <= y+v_j -> variant_j(y) <= base_j(x)
        need5 = inside[ys] & np.any(Dy[:, None, :] + av[None, :, :] < 0, axis=2)
        # (6): x+v_j in X and not x+v_j <= y -> variant_j(y) >= base_j(x)
        need6 = inside[a][None, :] & np.any(Dy[:, None, :] - av[None, :, :] < 0, axis=2)
        if not (need5.any() or need6.any()):
            continue
        vy = sp.rb[ys]
        bx = np.broadcast_to(sp.ra[a], vy.shape)
        # obligations not in force compare 0 <= 0
        small = np.stack([np.where(need5, vy, 0.0), np.where(need6, bx, 0.0)], axis=2)
        big = np.stack([np.where(need5, bx, 0.0), np.where(need6, vy, 0.0)], axis=2)

        def exact_check(pos, ys=ys):
            r, rest = divmod(pos, 2 * n)
            j, c = divmod(rest, 2)
            ex_x = sp.exact(a)[0][j]
            ex_y = sp.exact(int(ys[r]))[1][j]
            return ex_y > ex_x if c == 0 else ex_y < ex_x

        pos = _first_violation(small, big, exact_check)
        if pos is not None:
            r, rest = divmod(pos, 2 * n)
            j, c = divmod(rest, 2)
            witness = {
                "x": sp.state(a),
                "y": sp.state(int(ys[r])),
                "index": j + 1,
                "condition": "y+v_j leaves the cone at x" if c == 0 else "x+v_j is not below y",
                "required": "variant(y) <= base(x)" if c == 0 else "variant(y) >= base(x)",
                "variant_y": _fmt(vy[r, j]),
                "base_x": _fmt(bx[r, j]),
            }
            return ConditionReport("3.1", False, pairs, S, sp.scope, witness)
    return ConditionReport("3.1", True, pairs, S, sp.scope)


CHECKERS = {"3.1": check_thm_3_1, "3.2": check_thm_3_2, "3.3": check_thm_3_3, "S.2": check_thm_S2}
