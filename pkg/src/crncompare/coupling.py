"""Uniformization coupling of two chains and the single-chain SSA oracle.

Both chains are driven by one Poisson clock of rate lambda and one shared
uniform per potential jump. A uniform selects net vector j when it falls in
the j-th half-open interval at the current state; intervals either sit at
(j-1)/n (per-index mode) or are stacked inside group blocks (grouped mode).

Rates that are unbounded on an infinite state space are handled by running on
a box ||x||_inf <= M with the true rates inside the box. When either chain
leaves the box the run is spliced: M grows, lambda is recomputed, and the
skeleton continues with the next counter values of the same stream.
"""
from dataclasses import dataclass, field
import logging
import math
import os

import numpy as np

from . import kernels as K
from ._accel import set_threads
from .conditions import CoupledPair, GroupPartition
from .errors import PreconditionFailed, TruncationLimit, UnboundedRates, ValidationError
from .model import (StateIndex, StateSet, derive_net_structure, enumerate_states,
                    is_finite, rate_table)
from .order import OrderSpec, images, preceq

log = logging.getLogger(__name__)

DEFAULT_SEED = 20240601
STREAM_COUPLED = 0
STREAM_SSA = 1
STREAM_STATIONARY = 2
BUFFER = 4096


def default_seed():
    env = os.environ.get("SCRN_SEED")
    return int(env) if env not in (None, "") else DEFAULT_SEED


def split_seed(seed):
    seed = int(seed)
    if not 0 <= seed < 2 ** 64:
        raise ValidationError("seed must be in [0, 2^64)")
    return np.uint64(seed & 0xFFFFFFFF), np.uint64(seed >> 32)


@dataclass
class CouplingConfig:
    mode: str = "per-index"         # or "grouped"
    horizon: float = 10.0
    seed: int = None
    groups: GroupPartition = None
    record: str = "accepted"        # "accepted", "potential" or "none"
    M0: int = 16
    growth: float = 2.0
    max_M: int = 100_000
    stop_when_hit: bool = False

    def __post_init__(self):
        if self.seed is None:
            self.seed = default_seed()
        if not self.horizon > 0:
            raise ValidationError("horizon must be positive")
        if not self.growth > 1:
            raise ValidationError("growth factor must exceed 1")
        if self.mode not in ("per-index", "grouped"):
            raise ValidationError(f"unknown mode {self.mode!r}")
        if self.record not in ("accepted", "potential", "none"):
            raise ValidationError(f"unknown record mode {self.record!r}")

    def to_dict(self):
        return {
            "mode": self.mode, "horizon": self.horizon, "seed": self.seed,
            "groups": None if self.groups is None else self.groups.one_based(),
            "record": self.record, "M0": self.M0, "growth": self.growth,
            "max_M": self.max_M, "stop_when_hit": self.stop_when_hit,
        }


@dataclass
class SamplePath:
    times: np.ndarray
    states: np.ndarray
    terminal: str = "horizon"
    horizon: float = None

    @property
    def events(self):
        return [(float(t), tuple(int(v) for v in s)) for t, s in zip(self.times, self.states)]

    def state_at(self, t):
        k = np.searchsorted(self.times, t, side="right") - 1
        return self.states[max(k, 0)]


@dataclass
class CoupledRun:
    path_x: SamplePath
    path_xbreve: SamplePath
    ordered_throughout: bool
    first_violation: tuple = None
    hit_x: float = None
    hit_xbreve: float = None
    n_potential: int = 0
    n_accepted: tuple = (0, 0)
    final_M: int = None

    def summary(self):
        return {
            "ordered_throughout": self.ordered_throughout,
            "first_violation": self.first_violation,
            "hit_x": self.hit_x, "hit_xbreve": self.hit_xbreve,
            "final_x": [int(v) for v in self.path_x.states[-1]],
            "final_xbreve": [int(v) for v in self.path_xbreve.states[-1]],
            "n_potential": self.n_potential,
            "n_accepted": list(self.n_accepted),
            "final_M": self.final_M,
        }


# tables -----------------------------------------------------------------------

class Table:
    """Rate, successor and image tables on one enumerated space or box."""

    def __init__(self, states, nxt, rates, order, M):
        self.states = states
        self.index = StateIndex(states)
        self.nxt = np.ascontiguousarray(nxt)
        self.rates = [np.ascontiguousarray(r) for r in rates]
        self.tot = [r.sum(axis=1) for r in self.rates]
        n = nxt.shape[1]
        self.lam = 1.0 + n * max(float(t.max()) if len(t) else 0.0 for t in self.tot)
        self.AX = np.ascontiguousarray(images(order, states)) if order is not None \
            else np.zeros((len(states), 1), dtype=np.int64)
        self.M = M
        self._masks = {}

    def idx(self, x):
        i = int(self.index.lookup(np.asarray(x)[None, :])[0])
        if i < 0:
            raise ValidationError(f"state {tuple(int(v) for v in x)} is not in the state space")
        return i

    def gamma_mask(self, gamma, params):
        if gamma is None:
            return np.zeros(len(self.states), dtype=np.bool_)
        key = id(gamma)
        if key not in self._masks:
            self._masks[key] = np.ascontiguousarray(gamma.mask(self.states, params))
        return self._masks[key]


class Tables:
    """Lazily built tables for one or more rate families on a shared space.

    ``families`` is a list of (network, its NetStructure, permutation into the
    reference vector order). On an infinite space tables are built on boxes.
    """

    def __init__(self, space, ns, families, order=None, M0=16, growth=2.0, max_M=100_000):
        self.space = space
        self.ns = ns
        self.families = families
        self.order = order
        self.finite = is_finite(space)
        self.M0, self.growth, self.max_M = int(M0), float(growth), int(max_M)
        self._cache = {}

    def get(self, M=None):
        key = None if self.finite else int(M)
        if key not in self._cache:
            self._cache[key] = self._build(key)
        return self._cache[key]

    def _build(self, M):
        box = self.space if M is None else self.space.with_caps(M)
        states = enumerate_states(box)
        idx = StateIndex(states)
        V = self.ns.V
        nxt = np.empty((len(states), self.ns.n), dtype=np.int64)
        for j in range(self.ns.n):
            Y = states + V[j]
            col = idx.lookup(Y)
            if M is not None:
                miss = col < 0
                col[miss & self.space.contains(Y)] = -2
            nxt[:, j] = col
        rates = []
        for net, ns_k, perm in self.families:
            R = rate_table(net, ns_k, states, self.space)[:, list(perm)]
            R[nxt == -1] = 0.0
            rates.append(R)
        if M is not None:
            log.debug("built truncation box M=%d with %d states", M, len(states))
        return Table(states, nxt, rates, self.order, M)

    def initial_M(self, *xs):
        if self.finite:
            return None
        need = max(int(np.max(x)) for x in xs)
        M = self.M0
        while M < need:
            M = self.grow(M)
        return M

    def grow(self, M, *xs):
        if self.finite:
            return None
        need = max([int(np.max(x)) for x in xs] + [0])
        while True:
            M = max(int(math.ceil(M * self.growth)), M + 1)
            if M > self.max_M:
                raise TruncationLimit(f"truncation box would exceed the hard cap {self.max_M}")
            if M >= need:
                return M


def pair_tables(pair, cfg=None):
    cfg = cfg or CouplingConfig()
    fam = [(pair.base, pair.ns, tuple(range(pair.ns.n))),
           (pair.variant, pair.ns_variant, pair.perm)]
    return Tables(pair.base, pair.ns, fam, pair.order, cfg.M0, cfg.growth, cfg.max_M)


def net_tables(net, M0=16, growth=2.0, max_M=100_000):
    ns = derive_net_structure(net)
    return Tables(net, ns, [(net, ns, tuple(range(ns.n)))], None, M0, growth, max_M)


def choose_lambda(pair, truncation=None):
    """1 + n * max(sup sum Upsilon, sup sum Upsilon-breve) over the finite space or box."""
    tabs = pair_tables(pair)
    if not tabs.finite and truncation is None:
        raise UnboundedRates("rates may be unbounded on an infinite space; give a truncation")
    return tabs.get(truncation).lam


# interval maps --------------------------------------------------------------------

def _layout(n, mode="per-index", gp=None):
    """Arrays (perm, lo, first) describing the interval stacking."""
    if mode == "per-index" or gp is None:
        perm = np.arange(n, dtype=np.int64)
        lo = np.arange(n, dtype=np.float64) / n
        first = np.ones(n, dtype=np.bool_)
        return perm, lo, first
    gp.validate(n)
    perm = np.asarray(gp.sigma, dtype=np.int64)
    lo = np.empty(n)
    first = np.zeros(n, dtype=np.bool_)
    p = 0
    for g in gp.groups:
        lo[p:p + len(g)] = p / n
        first[p] = True
        p += len(g)
    return perm, lo, first


def _rates_at(rates, x):
    r = rates(x) if callable(rates) else rates
    return np.asarray(r, dtype=np.float64).reshape(1, -1)


def phi_map(rates, lam, x, u, vectors):
    """x + v_j if u lies in [(j-1)/n, (j-1)/n + Upsilon_j(x)/lambda), else x.

    ``rates`` is the vector Upsilon(x) or a callable returning it.
    """
    R = _rates_at(rates, x)
    perm, lo, first = _layout(R.shape[1])
    j = K.pick(R, 0, float(lam), perm, lo, first, float(u))
    return _apply(x, vectors, j)


def psi_map(rates, lam, gp, x, u, vectors):
    """Grouped variant: block k starts at p_{k-1}/n and stacks its rates in sigma order."""
    R = _rates_at(rates, x)
    perm, lo, first = _layout(R.shape[1], "grouped", gp)
    j = K.pick(R, 0, float(lam), perm, lo, first, float(u))
    return _apply(x, vectors, j)


def _apply(x, vectors, j):
    x = tuple(int(v) for v in x)
    if j < 0:
        return x
    return tuple(a + int(b) for a, b in zip(x, vectors[j]))


# coupled runs -----------------------------------------------------------------------

def _init_state(tab, xa, xb, gamma, params, n):
    st_f = np.zeros((n, K.NF))
    st_i = np.zeros((n, K.NI), dtype=np.int64)
    st_f[:, K.F_HIT_A] = -1.0
    st_f[:, K.F_HIT_B] = -1.0
    st_f[:, K.F_VIOL_T] = -1.0
    st_i[:, K.I_A] = tab.idx(xa)
    st_i[:, K.I_B] = tab.idx(xb)
    st_i[:, K.I_ORDERED] = 1
    st_i[:, K.I_VIOL_A] = -1
    st_i[:, K.I_VIOL_B] = -1
    st_i[:, K.I_EXIT_A] = -1
    st_i[:, K.I_EXIT_B] = -1
    if gamma is not None:
        if gamma.contains(xa, params):
            st_f[:, K.F_HIT_A] = 0.0
        if gamma.contains(xb, params):
            st_f[:, K.F_HIT_B] = 0.0
    return st_f, st_i


class _Recorder:
    def __init__(self, x0, x0b):
        self.t = [0.0]
        self.a = [np.asarray(x0, dtype=np.int64)]
        self.b = [np.asarray(x0b, dtype=np.int64)]
        self.flag = [3]

    def add(self, t, xa, xb, flag):
        self.t.append(float(t))
        self.a.append(np.asarray(xa, dtype=np.int64))
        self.b.append(np.asarray(xb, dtype=np.int64))
        self.flag.append(int(flag))

    def add_block(self, tab, bt, ba, bb, bf):
        self.t.extend(bt.tolist())
        self.a.extend(tab.states[ba])
        self.b.extend(tab.states[bb])
        self.flag.extend(bf.tolist())

    def paths(self, potential, horizon, terminal):
        t = np.asarray(self.t)
        A = np.asarray(self.a, dtype=np.int64)
        B = np.asarray(self.b, dtype=np.int64)
        f = np.asarray(self.flag)
        if potential:
            return (SamplePath(t, A, terminal, horizon), SamplePath(t, B, terminal, horizon))
        ka = (f & 1) > 0
        kb = (f & 2) > 0
        return (SamplePath(t[ka], A[ka], terminal, horizon), SamplePath(t[kb], B[kb], terminal, horizon))


class _CoupledEngine:
    def __init__(self, pair, cfg, gamma=None):
        self.pair = pair
        self.cfg = cfg
        self.gamma = StateSet.of(gamma)
        self.tabs = pair_tables(pair, cfg)
        self.perm, self.lo, self.first = _layout(pair.ns.n, cfg.mode, cfg.groups)
        if cfg.mode == "grouped" and cfg.groups is None:
            raise ValidationError("grouped mode needs a group partition")
        self.key0, self.key1 = split_seed(cfg.seed)
        self.params = pair.base.params
        self.A = pair.order.matrix

    def args(self, tab):
        gmask = tab.gamma_mask(self.gamma, self.params)
        return (tab.rates[0], tab.rates[1], tab.nxt, tab.tot[0], tab.tot[1], tab.lam,
                self.perm, self.lo, self.first, tab.AX, gmask, self.gamma is not None)

    def check_start(self, x0, x0b):
        if not preceq(self.pair.order, x0, x0b):
            raise PreconditionFailed("initial states are not ordered: x0 must be below x0b")

    def note_violation(self, tab, sf, si, viol):
        if si[K.I_ORDERED] == 0 and viol[0] is None and si[K.I_VIOL_A] >= 0:
            viol[0] = (float(sf[K.F_VIOL_T]),
                       [int(v) for v in tab.states[si[K.I_VIOL_A]]],
                       [int(v) for v in tab.states[si[K.I_VIOL_B]]])

    def resume(self, rep, sf, si, M, viol, rec=None):
        """Continue one replicate until the horizon (or both hits)."""
        cfg = self.cfg
        record = K.REC_NONE if rec is None else (K.REC_POTENTIAL if cfg.record == "potential" else K.REC_ACCEPTED)
        cap = BUFFER if rec is not None else 0
        bt = np.zeros(cap)
        ba = np.zeros(cap, dtype=np.int64)
        bb = np.zeros(cap, dtype=np.int64)
        bf = np.zeros(cap, dtype=np.int64)
        V = self.pair.ns.V
        while True:
            tab = self.tabs.get(M)
            si[K.I_NREC] = 0
            status = K.coupled_core(*self.args(tab), self.key0, self.key1, rep, STREAM_COUPLED,
                                    float(cfg.horizon), cfg.stop_when_hit, record,
                                    sf, si, bt, ba, bb, bf)
            self.note_violation(tab, sf, si, viol)
            if rec is not None:
                k = si[K.I_NREC]
                rec.add_block(tab, bt[:k], ba[:k], bb[:k], bf[:k])
            if status == K.DONE:
                return M
            if status == K.BUFFER_FULL:
                continue
            M = self._splice(tab, sf, si, M, viol, rec, V)

    def _splice(self, tab, sf, si, M, viol, rec, V):
        """Apply an exit step on the larger box and check order and targets there."""
        xa = tab.states[si[K.I_A]].copy()
        xb = tab.states[si[K.I_B]].copy()
        if si[K.I_EXIT_A] >= 0:
            xa += V[si[K.I_EXIT_A]]
        if si[K.I_EXIT_B] >= 0:
            xb += V[si[K.I_EXIT_B]]
        M = self.tabs.grow(M, xa, xb)
        tab = self.tabs.get(M)
        si[K.I_A] = tab.idx(xa)
        si[K.I_B] = tab.idx(xb)
        t = sf[K.F_T]
        flag = si[K.I_FLAG]
        if flag & 1:
            si[K.I_ACC_A] += 1
        if flag & 2:
            si[K.I_ACC_B] += 1
        if np.any(self.A @ (xb - xa) < 0) and si[K.I_ORDERED] == 1:
            si[K.I_ORDERED] = 0
            sf[K.F_VIOL_T] = t
            viol[0] = (float(t), [int(v) for v in xa], [int(v) for v in xb])
        if self.gamma is not None:
            if sf[K.F_HIT_A] < 0 and self.gamma.contains(xa, self.params):
                sf[K.F_HIT_A] = t
            if sf[K.F_HIT_B] < 0 and self.gamma.contains(xb, self.params):
                sf[K.F_HIT_B] = t
        if rec is not None:
            rec.add(t, xa, xb, flag)
        log.info("replicate spliced onto truncation box M=%d at t=%.6g", M, t)
        return M


def _hit(v):
    return None if v < 0 else float(v)


def simulate_coupled(pair, x0, x0b, cfg=None, gamma=None, replicate=0):
    """One coupled run with recorded paths."""
    cfg = cfg or CouplingConfig()
    eng = _CoupledEngine(pair, cfg, gamma)
    x0 = np.asarray(x0, dtype=np.int64)
    x0b = np.asarray(x0b, dtype=np.int64)
    eng.check_start(x0, x0b)
    M = eng.tabs.initial_M(x0, x0b)
    tab = eng.tabs.get(M)
    sf, si = _init_state(tab, x0, x0b, eng.gamma, eng.params, 1)
    sf, si = sf[0], si[0]
    rec = _Recorder(x0, x0b) if cfg.record != "none" else None
    viol = [None]
    M = eng.resume(replicate, sf, si, M, viol, rec)
    terminal = "target-hit" if cfg.stop_when_hit and sf[K.F_HIT_A] >= 0 and sf[K.F_HIT_B] >= 0 else "horizon"
    if rec is None:
        tab = eng.tabs.get(M)
        px = SamplePath(np.array([0.0]), tab.states[[si[K.I_A]]], terminal, cfg.horizon)
        pb = SamplePath(np.array([0.0]), tab.states[[si[K.I_B]]], terminal, cfg.horizon)
    else:
        px, pb = rec.paths(cfg.record == "potential", cfg.horizon, terminal)
    return CoupledRun(px, pb, bool(si[K.I_ORDERED]), viol[0], _hit(sf[K.F_HIT_A]), _hit(sf[K.F_HIT_B]),
                      int(si[K.I_NPOT]), (int(si[K.I_ACC_A]), int(si[K.I_ACC_B])), M)


@dataclass
class CoupledSummary:
    """Per-replicate results of many coupled runs (replicate order)."""
    final_x: np.ndarray
    final_xbreve: np.ndarray
    ordered: np.ndarray
    hit_x: np.ndarray            # NaN when censored
    hit_xbreve: np.ndarray
    n_potential: np.ndarray
    violations: dict = field(default_factory=dict)
    final_M: np.ndarray = None

    @property
    def n(self):
        return len(self.ordered)

    def run(self, r):
        return {
            "ordered_throughout": bool(self.ordered[r]),
            "first_violation": self.violations.get(r),
            "hit_x": None if np.isnan(self.hit_x[r]) else float(self.hit_x[r]),
            "hit_xbreve": None if np.isnan(self.hit_xbreve[r]) else float(self.hit_xbreve[r]),
            "final_x": [int(v) for v in self.final_x[r]],
            "final_xbreve": [int(v) for v in self.final_xbreve[r]],
            "n_potential": int(self.n_potential[r]),
        }


def replicate_coupled(pair, x0, x0b, cfg=None, n_rep=1, gamma=None, threads=None):
    """Independent coupled runs; replicate r uses counter stream (cfg.seed, r)."""
    if n_rep < 1:
        raise ValidationError("n_rep must be at least 1")
    cfg = cfg or CouplingConfig()
    set_threads(threads)
    eng = _CoupledEngine(pair, cfg, gamma)
    x0 = np.asarray(x0, dtype=np.int64)
    x0b = np.asarray(x0b, dtype=np.int64)
    eng.check_start(x0, x0b)
    M0 = eng.tabs.initial_M(x0, x0b)
    tab = eng.tabs.get(M0)
    sf, si = _init_state(tab, x0, x0b, eng.gamma, eng.params, n_rep)
    K.coupled_batch(*eng.args(tab), eng.key0, eng.key1, 0, STREAM_COUPLED,
                    float(cfg.horizon), cfg.stop_when_hit, sf, si)
    final_M = np.full(n_rep, -1 if M0 is None else M0, dtype=np.int64)
    violations = {}
    fx = np.empty((n_rep, pair.base.d), dtype=np.int64)
    fb = np.empty((n_rep, pair.base.d), dtype=np.int64)
    for r in range(n_rep):
        viol = [None]
        eng.note_violation(tab, sf[r], si[r], viol)
        M = M0
        if si[r, K.I_STATUS] == K.EXITED:
            M = eng._splice(tab, sf[r], si[r], M0, viol, None, pair.ns.V)
            M = eng.resume(r, sf[r], si[r], M, viol)
            final_M[r] = M
        if viol[0] is not None:
            violations[r] = viol[0]
        states = eng.tabs.get(M).states
        fx[r] = states[si[r, K.I_A]]
        fb[r] = states[si[r, K.I_B]]
    hx = np.where(sf[:, K.F_HIT_A] >= 0, sf[:, K.F_HIT_A], np.nan)
    hb = np.where(sf[:, K.F_HIT_B] >= 0, sf[:, K.F_HIT_B], np.nan)
    return CoupledSummary(fx, fb, si[:, K.I_ORDERED].astype(bool), hx, hb,
                          si[:, K.I_NPOT].copy(), violations, final_M)


# single chain ---------------------------------------------------------------------------

class _SsaEngine:
    def __init__(self, net, seed, gamma=None, M0=16, growth=2.0, max_M=100_000, stream=STREAM_SSA):
        self.net = net
        self.tabs = net_tables(net, M0, growth, max_M)
        self.gamma = StateSet.of(gamma)
        self.key0, self.key1 = split_seed(seed)
        self.stream = stream

    def init(self, x0, n):
        x0 = np.asarray(x0, dtype=np.int64)
        M = self.tabs.initial_M(x0)
        tab = self.tabs.get(M)
        sf = np.zeros((n, K.NF))
        si = np.zeros((n, K.NI), dtype=np.int64)
        sf[:, K.F_HIT_A] = 0.0 if (self.gamma is not None and self.gamma.contains(x0, self.net.params)) else -1.0
        si[:, K.I_A] = tab.idx(x0)
        si[:, K.I_EXIT_A] = -1
        return M, tab, sf, si

    def resume(self, rep, sf, si, M, horizon, stop_when_hit, rec=None, occ=None, burn=0.0, nbatch=1):
        """Continue one chain; ``occ`` collects {state: per-batch occupation} when given."""
        cap = BUFFER if rec is not None else 0
        bt = np.zeros(cap)
        bs = np.zeros(cap, dtype=np.int64)
        V = self.tabs.ns.V
        batch_len = (horizon - burn) / nbatch if occ is not None else 1.0
        while True:
            tab = self.tabs.get(M)
            gmask = tab.gamma_mask(self.gamma, self.net.params)
            occ_arr = np.zeros((nbatch, len(tab.states))) if occ is not None else np.zeros((1, 1))
            si[K.I_NREC] = 0
            status = K.ssa_core(tab.rates[0], tab.nxt, tab.tot[0], gmask, self.gamma is not None,
                                self.key0, self.key1, rep, self.stream, float(horizon), stop_when_hit,
                                K.REC_NONE if rec is None else K.REC_ACCEPTED,
                                occ_arr, float(burn), float(batch_len), occ is not None,
                                sf, si, bt, bs)
            if occ is not None:
                for i in np.flatnonzero(occ_arr.sum(axis=0)):
                    key = tuple(int(v) for v in tab.states[i])
                    occ.setdefault(key, np.zeros(nbatch))
                    occ[key] += occ_arr[:, i]
            if rec is not None:
                k = si[K.I_NREC]
                rec[0].extend(bt[:k].tolist())
                rec[1].extend(tab.states[bs[:k]])
            if status == K.DONE:
                return M
            if status == K.BUFFER_FULL:
                continue
            x = tab.states[si[K.I_A]] + V[si[K.I_EXIT_A]]
            M = self.tabs.grow(M, x)
            tab = self.tabs.get(M)
            si[K.I_A] = tab.idx(x)
            si[K.I_ACC_A] += 1
            t = sf[K.F_T]
            if self.gamma is not None and sf[K.F_HIT_A] < 0 and self.gamma.contains(x, self.net.params):
                sf[K.F_HIT_A] = t
            if rec is not None:
                rec[0].append(float(t))
                rec[1].append(x.copy())


def simulate_ssa(net, x0, T, seed=None, replicate=0, gamma=None, stop_when_hit=False):
    """Exact single-chain path by the direct method."""
    seed = default_seed() if seed is None else seed
    eng = _SsaEngine(net, seed, gamma)
    M, tab, sf, si = eng.init(x0, 1)
    rec = ([0.0], [np.asarray(x0, dtype=np.int64)])
    eng.resume(replicate, sf[0], si[0], M, T, stop_when_hit, rec=rec)
    terminal = "target-hit" if stop_when_hit and sf[0, K.F_HIT_A] >= 0 else "horizon"
    return SamplePath(np.asarray(rec[0]), np.asarray(rec[1], dtype=np.int64), terminal, T)


@dataclass
class SsaSummary:
    final: np.ndarray
    hit: np.ndarray      # NaN when censored


def replicate_ssa(net, x0, T, seed=None, n_rep=1, gamma=None, stop_when_hit=False, threads=None):
    seed = default_seed() if seed is None else seed
    set_threads(threads)
    eng = _SsaEngine(net, seed, gamma)
    M, tab, sf, si = eng.init(x0, n_rep)
    K.ssa_batch(tab.rates[0], tab.nxt, tab.tot[0], tab.gamma_mask(eng.gamma, net.params),
                eng.gamma is not None, eng.key0, eng.key1, 0, STREAM_SSA, float(T),
                stop_when_hit, sf, si)
    final = np.empty((n_rep, net.d), dtype=np.int64)
    for r in range(n_rep):
        Mr = M
        if si[r, K.I_STATUS] == K.EXITED:
            x = tab.states[si[r, K.I_A]] + eng.tabs.ns.V[si[r, K.I_EXIT_A]]
            Mr = eng.tabs.grow(M, x)
            t2 = eng.tabs.get(Mr)
            si[r, K.I_A] = t2.idx(x)
            if eng.gamma is not None and sf[r, K.F_HIT_A] < 0 and eng.gamma.contains(x, net.params):
                sf[r, K.F_HIT_A] = sf[r, K.F_T]
            Mr = eng.resume(r, sf[r], si[r], Mr, T, stop_when_hit)
        final[r] = eng.tabs.get(Mr).states[si[r, K.I_A]]
    hit = np.where(sf[:, K.F_HIT_A] >= 0, sf[:, K.F_HIT_A], np.nan)
    return SsaSummary(final, hit)
