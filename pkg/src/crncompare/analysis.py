"""Hitting times, stationary laws, stochastic order tests and drift checks."""
from dataclasses import dataclass, field
from fractions import Fraction
import math

import numpy as np

from . import kernels as K
from .coupling import (STREAM_STATIONARY, CouplingConfig, _SsaEngine, default_seed,
                       replicate_coupled, replicate_ssa)
from .errors import (AllCensored, DirectionUnknown, InfiniteSpace, InvalidParams,
                     ValidationError)
from .expr import Expr
from .model import (StateIndex, StateSet, coordinate_bounds, derive_net_structure,
                    enumerate_states, exact_rate_vector, is_finite, rate_table)
from .order import verify_decreasing, verify_increasing

REL_TOL = 1e-12
ABS_TOL = 1e-12


# first passage ------------------------------------------------------------------

def first_passage(path, gamma, params=None):
    """Earliest event time whose state is in gamma, or None when censored."""
    gamma = StateSet.of(gamma)
    hit = gamma.mask(path.states, params)
    if not hit.any():
        return None
    return float(path.times[int(np.argmax(hit))])


@dataclass
class MfptEstimate:
    mean: float
    std_error: float
    n_samples: int
    n_censored: int
    samples: np.ndarray = field(default=None, repr=False)

    @property
    def censored_fraction(self):
        total = self.n_samples + self.n_censored
        return self.n_censored / total if total else 0.0

    def to_dict(self):
        return {"mean": self.mean, "std_error": self.std_error,
                "n_samples": self.n_samples, "n_censored": self.n_censored,
                "censored_fraction": self.censored_fraction}


def _mean_se(x):
    x = np.asarray(x, dtype=float)
    if len(x) < 2:
        return float(x.mean()) if len(x) else math.nan, 0.0
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(len(x)))


def estimate_mfpt(net, x0, gamma, horizon, n, seed=None, threads=None):
    """Monte Carlo mean first passage time from x0 to gamma over n SSA paths.

    Censored paths (no hit before the horizon) are excluded from the mean and
    counted separately.
    """
    gamma = StateSet.of(gamma)
    if gamma is None or (gamma.states is not None and not gamma.states):
        raise ValidationError("target set is empty")
    seed = default_seed() if seed is None else seed
    res = replicate_ssa(net, x0, horizon, seed, n, gamma, stop_when_hit=True, threads=threads)
    ok = ~np.isnan(res.hit)
    if not ok.any():
        raise AllCensored(f"none of the {n} paths reached the target by t={horizon}")
    mean, se = _mean_se(res.hit[ok])
    return MfptEstimate(mean, se, int(ok.sum()), int((~ok).sum()), res.hit)


# usual stochastic order -----------------------------------------------------------

@dataclass
class OrderTest:
    holds: bool
    max_violation: float
    at: float = None

    def to_dict(self):
        return {"holds": self.holds, "max_violation": self.max_violation, "at": self.at}


def usual_stochastic_order_test(samples_a, samples_b, tol=0.0):
    """Is a smaller than b in the usual stochastic order, judged on empirical CDFs?

    Checks F_a(t) >= F_b(t) at every point of the merged sample grid. Censored
    samples may be passed as inf (they never count as hits).
    """
    a = np.sort(np.asarray(samples_a, dtype=float))
    b = np.sort(np.asarray(samples_b, dtype=float))
    if not len(a) or not len(b):
        raise ValidationError("both sample sets must be non-empty")
    grid = np.unique(np.concatenate([a, b]))
    grid = grid[np.isfinite(grid)]
    if not len(grid):
        return OrderTest(True, 0.0, None)
    Fa = np.searchsorted(a, grid, side="right") / len(a)
    Fb = np.searchsorted(b, grid, side="right") / len(b)
    gap = Fb - Fa
    k = int(np.argmax(gap))
    worst = max(float(gap[k]), 0.0)
    return OrderTest(worst <= tol, worst, float(grid[k]) if worst > 0 else None)


# coupled MFPT comparison ---------------------------------------------------------------

@dataclass
class MfptComparison:
    direction: str
    n: int
    pathwise_ok: bool
    n_pathwise_violations: int
    first_violation: dict
    ordered_fraction: float
    base: MfptEstimate
    variant: MfptEstimate
    paired_mean_diff: float
    paired_std_error: float
    n_paired: int
    cdf: OrderTest
    times_x: np.ndarray = field(default=None, repr=False)
    times_xbreve: np.ndarray = field(default=None, repr=False)

    def to_dict(self):
        return {
            "direction": self.direction,
            "n_replicates": self.n,
            "pathwise_ok": self.pathwise_ok,
            "n_pathwise_violations": self.n_pathwise_violations,
            "first_violation": self.first_violation,
            "ordered_fraction": self.ordered_fraction,
            "mfpt_x": self.base.to_dict(),
            "mfpt_xbreve": self.variant.to_dict(),
            "paired_mean_diff": self.paired_mean_diff,
            "paired_std_error": self.paired_std_error,
            "n_paired": self.n_paired,
            "cdf_dominance": self.cdf.to_dict(),
        }


def gamma_direction(pair, gamma, truncation=None):
    """'increasing' or 'decreasing' for gamma on the (possibly truncated) space."""
    gamma = StateSet.of(gamma)
    net = pair.base
    if truncation is not None:
        net = net.with_caps(truncation)
    elif not is_finite(net):
        raise InfiniteSpace("state space is infinite; give a truncation to classify the target set")
    states = enumerate_states(net)
    mask = gamma.mask(states, pair.base.params)
    if verify_increasing(pair.order, states, mask)[0]:
        return "increasing"
    if verify_decreasing(pair.order, states, mask)[0]:
        return "decreasing"
    raise DirectionUnknown("target set is neither increasing nor decreasing")


def _estimate_from(times):
    ok = np.isfinite(times)
    mean, se = _mean_se(times[ok]) if ok.any() else (math.nan, 0.0)
    return MfptEstimate(mean, se, int(ok.sum()), int((~ok).sum()), times)


def compare_mfpt_coupled(pair, x0, x0b, gamma, cfg=None, n=1000, truncation=None,
                         threads=None, direction=None):
    """Paired first passage times of X and X-breve from one coupled run each.

    For an increasing gamma the coupling forces T-breve <= T on every replicate;
    for a decreasing one T <= T-breve. ``paired_mean_diff`` is the mean of
    (larger - smaller) over replicates where both chains hit.
    """
    cfg = cfg or CouplingConfig()
    gamma = StateSet.of(gamma)
    if direction is None:
        direction = gamma_direction(pair, gamma, truncation)
    elif direction not in ("increasing", "decreasing"):
        raise DirectionUnknown(f"unknown direction {direction!r}")
    run_cfg = CouplingConfig(**{**cfg.__dict__, "stop_when_hit": True, "record": "none"})
    summ = replicate_coupled(pair, x0, x0b, run_cfg, n, gamma, threads)
    tx = np.where(np.isnan(summ.hit_x), np.inf, summ.hit_x)
    tb = np.where(np.isnan(summ.hit_xbreve), np.inf, summ.hit_xbreve)
    small, big = (tb, tx) if direction == "increasing" else (tx, tb)
    bad = small > big
    first = None
    if bad.any():
        r = int(np.argmax(bad))
        first = {"replicate": r, "T_x": float(tx[r]), "T_xbreve": float(tb[r])}
    both = np.isfinite(small) & np.isfinite(big)
    mdiff, sediff = _mean_se((big - small)[both]) if both.any() else (math.nan, 0.0)
    return MfptComparison(
        direction, n, not bad.any(), int(bad.sum()), first, float(summ.ordered.mean()),
        _estimate_from(tx), _estimate_from(tb), mdiff, sediff, int(both.sum()),
        usual_stochastic_order_test(small, big), tx, tb)


# stationary distributions -----------------------------------------------------------

@dataclass
class DistributionTable:
    """Probability masses on a list of states, with optional per-batch estimates."""
    support: np.ndarray
    mass: np.ndarray
    batches: np.ndarray = field(default=None, repr=False)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.support = np.asarray(self.support, dtype=np.int64).reshape(len(self.mass), -1)
        self.mass = np.asarray(self.mass, dtype=float)
        if np.any(self.mass < 0):
            raise ValidationError("negative probability mass")
        tot = self.mass.sum()
        if tot <= 0:
            raise ValidationError("distribution has no mass")
        self.mass = self.mass / tot

    def prob(self, x):
        i = StateIndex(self.support).lookup(np.asarray(x)[None, :])[0]
        return 0.0 if i < 0 else float(self.mass[i])

    def as_dict(self):
        return {tuple(int(v) for v in s): float(p) for s, p in zip(self.support, self.mass)}

    @property
    def std_error(self):
        if self.batches is None or len(self.batches) < 2:
            return None
        return self.batches.std(axis=0, ddof=1) / math.sqrt(len(self.batches))

    def to_dict(self):
        se = self.std_error
        rows = []
        for k, (s, p) in enumerate(zip(self.support, self.mass)):
            row = {"state": [int(v) for v in s], "mass": float(p)}
            if se is not None:
                row["std_error"] = float(se[k])
            rows.append(row)
        return {**self.meta, "n_states": len(self.mass), "distribution": rows}


def empirical_stationary(net, x0, total_time, burn_in=None, seed=None, n_batches=20):
    """Occupation-time estimate of the stationary law from one long SSA path.

    The first ``burn_in`` time units (default 10% of ``total_time``) are
    discarded; the rest is split into ``n_batches`` equal batches whose
    normalized occupations give batch-means standard errors.
    """
    if not total_time > 0:
        raise ValidationError("total_time must be positive")
    burn = 0.1 * total_time if burn_in is None else float(burn_in)
    if not 0 <= burn < total_time:
        raise ValidationError("burn_in must lie in [0, total_time)")
    seed = default_seed() if seed is None else seed
    eng = _SsaEngine(net, seed, stream=STREAM_STATIONARY)
    M, tab, sf, si = eng.init(x0, 1)
    occ = {}
    eng.resume(0, sf[0], si[0], M, float(total_time), False, occ=occ, burn=burn, nbatch=n_batches)
    keys = sorted(occ)
    support = np.asarray(keys, dtype=np.int64).reshape(len(keys), net.d)
    per_batch = np.stack([occ[k] for k in keys], axis=1)
    total = per_batch.sum(axis=0)
    bsum = per_batch.sum(axis=1, keepdims=True)
    batches = np.divide(per_batch, bsum, out=np.zeros_like(per_batch), where=bsum > 0)
    meta = {"total_time": float(total_time), "burn_in": burn, "n_batches": n_batches,
            "seed": int(seed), "n_jumps": int(si[0][K.I_ACC_A])}
    return DistributionTable(support, total, batches, meta)


def product_form_stationary(E_tot, kappas, caps):
    """Truncated product-form law of the open enzyme network.

    Poisson(c1) x Poisson(c2) x binomial-type factor on x3 + x4 = E_tot, over
    the box x1 <= caps[0], x2 <= caps[1], renormalized. Computed in log space.
    """
    k = [Fraction(v) if not isinstance(v, float) else v for v in kappas]
    if len(k) != 6:
        raise InvalidParams("need six rate constants")
    if any(v <= 0 for v in k):
        raise InvalidParams("rate constants must be positive")
    E_tot = int(E_tot)
    if E_tot < 0:
        raise InvalidParams("E_tot must be non-negative")
    k1, k2, k3, k4, k5, k6 = (float(v) for v in k)
    c1 = k5 / k6
    c2 = k1 * k3 * k5 / (k2 * k4 * k6)
    r = k1 * k5 / (k2 * k6)
    log_c3 = -math.log1p(r)
    log_c4 = math.log(r) - math.log1p(r)
    n1, n2 = int(caps[0]), int(caps[1])
    x1 = np.arange(n1 + 1)
    x2 = np.arange(n2 + 1)
    x4 = np.arange(E_tot + 1)
    lg = np.vectorize(math.lgamma)
    l1 = x1 * math.log(c1) - c1 - lg(x1 + 1.0)
    l2 = x2 * math.log(c2) - c2 - lg(x2 + 1.0)
    x3 = E_tot - x4
    l34 = math.lgamma(E_tot + 1.0) + x3 * log_c3 + x4 * log_c4 - lg(x3 + 1.0) - lg(x4 + 1.0)
    A, B, D = np.meshgrid(x1, x2, x4, indexing="ij")
    logp = l1[A] + l2[B] + l34[D]
    logp = logp - logp.max()
    support = np.stack([A.ravel(), B.ravel(), E_tot - D.ravel(), D.ravel()], axis=1)
    order = np.lexsort(support.T[::-1])
    meta = {"c": [c1, c2, math.exp(log_c3), math.exp(log_c4)], "caps": [n1, n2], "E_tot": E_tot}
    return DistributionTable(support[order], np.exp(logp.ravel()[order]), None, meta)


def _gamma_mask(dist, gamma, params):
    gamma = StateSet.of(gamma)
    if gamma is None:
        return np.zeros(len(dist.mass), dtype=bool)
    return gamma.mask(dist.support, params)


def stationary_set_mass(dist, gamma, params=None):
    """Total mass of the states of gamma (0 for the empty set)."""
    return float(dist.mass[_gamma_mask(dist, gamma, params)].sum())


def set_mass_error(dist, gamma, params=None):
    """Batch-means standard error of stationary_set_mass (0 for exact tables)."""
    if dist.batches is None or len(dist.batches) < 2:
        return 0.0
    m = dist.batches[:, _gamma_mask(dist, gamma, params)].sum(axis=1)
    return float(m.std(ddof=1) / math.sqrt(len(m)))


def tv_distance(p, q):
    """Total variation distance on the union of supports."""
    pa, qa = p.as_dict(), q.as_dict()
    return 0.5 * sum(abs(pa.get(s, 0.0) - qa.get(s, 0.0)) for s in set(pa) | set(qa))


# drift ---------------------------------------------------------------------------

@dataclass
class LyapunovSpec:
    """Norm-like V with a drift mode.

    mode 'negative-drift' checks QV <= -c + d 1_C; when C is None the set
    C = {QV > -c} is computed and reported. mode 'exponential' checks
    QV <= -c' V + d'. Constants may be parameter expressions such as 'k5a*Dtot'.
    """
    V: object
    mode: str = "negative-drift"
    c: object = 1
    d: object = None
    C: object = None
    c_prime: object = None
    d_prime: object = None

    def __post_init__(self):
        if isinstance(self.V, str):
            self.V = Expr(self.V)
        if self.mode not in ("negative-drift", "exponential"):
            raise ValidationError(f"unknown drift mode {self.mode!r}")
        if self.mode == "exponential" and (self.c_prime is None or self.d_prime is None):
            raise ValidationError("exponential mode needs c_prime and d_prime")
        self.C = StateSet.of(self.C)

    def constant(self, name, params):
        v = getattr(self, name)
        if v is None:
            return None
        e = Expr(v) if isinstance(v, str) else Expr(str(Fraction(v)))
        return e({k: Fraction(p) for k, p in params.items()}, exact=True)

    def to_dict(self):
        out = {"V": self.V.source, "mode": self.mode}
        for k in ("c", "d", "c_prime", "d_prime"):
            v = getattr(self, k)
            if v is not None:
                out[k] = v if isinstance(v, (str, int)) else str(v)
        if self.C is not None:
            out["C"] = self.C.describe()
        return out


def _V_of(V):
    return Expr(V) if isinstance(V, str) else (V.V if isinstance(V, LyapunovSpec) else V)


def drift_value(net, V, x, exact=True):
    """QV(x) = sum_j Upsilon_j(x) (V(x + v_j) - V(x)), exactly by default."""
    V = _V_of(V)
    ns = derive_net_structure(net)
    x = [int(v) for v in x]
    if exact:
        rates = exact_rate_vector(net, ns, x)
        env = net.env(x, exact=True)
        v0 = Fraction(V(env, exact=True))
        total = Fraction(0)
        for vec, r in zip(ns.vectors, rates):
            if r:
                y = [a + b for a, b in zip(x, vec)]
                total += r * (Fraction(V(net.env(y, exact=True), exact=True)) - v0)
        return total
    return float(drift_table(net, V, np.asarray([x]))[0])


def drift_table(net, V, states):
    """Vectorized QV at the rows of ``states`` (float)."""
    V = _V_of(V)
    ns = derive_net_structure(net)
    states = np.asarray(states, dtype=np.int64)
    R = rate_table(net, ns, states)
    v0 = np.broadcast_to(np.asarray(V(net.env(states)), dtype=float), (len(states),))
    out = np.zeros(len(states))
    for j in range(ns.n):
        live = R[:, j] > 0
        if not live.any():
            continue
        Y = states[live] + ns.V[j]
        vy = np.broadcast_to(np.asarray(V(net.env(Y)), dtype=float), (len(Y),))
        out[live] += R[live, j] * (vy - v0[live])
    return out


def _values(net, V, states):
    return np.broadcast_to(np.asarray(_V_of(V)(net.env(states)), dtype=float), (len(states),))


@dataclass
class DriftReport:
    passed: bool
    mode: str
    n_states: int
    scope: str
    worst_state: list
    worst_margin: float
    constants: dict
    C: list = None
    C_touches_boundary: bool = False
    V_nonnegative: bool = True

    def to_dict(self):
        return {
            "verdict": "pass" if self.passed else "fail",
            "mode": self.mode, "scope": self.scope, "n_states": self.n_states,
            "worst_state": self.worst_state, "worst_margin": self.worst_margin,
            "constants": self.constants, "C": self.C,
            "C_touches_boundary": self.C_touches_boundary,
            "V_nonnegative": self.V_nonnegative,
        }


def _boundary_mask(net, truncation, states):
    """States sitting on a cap that the truncation added to an unbounded coordinate."""
    if truncation is None:
        return np.zeros(len(states), dtype=bool)
    caps = [int(truncation)] * net.d if np.isscalar(truncation) else list(truncation)
    base_ub = coordinate_bounds(net)
    mask = np.zeros(len(states), dtype=bool)
    for i, c in enumerate(caps):
        if c is not None and c < base_ub[i]:
            mask |= states[:, i] >= c
    return mask


def verify_drift(net, spec, truncation=None):
    """Check the drift inequality of ``spec`` at every state of the truncation.

    QV is evaluated with the untruncated rates; the truncation only selects the
    states to test. Inequalities inside the float tolerance band are settled
    exactly. The worst state maximizes (left side - right side).
    """
    if truncation is None and not is_finite(net):
        raise InfiniteSpace("state space is infinite; give a truncation")
    box = net if truncation is None else net.with_caps(truncation)
    states = enumerate_states(box)
    scope = "exhaustive on finite state space" if truncation is None else f"verified on truncation M={truncation}"
    QV = drift_table(net, spec.V, states)
    Vx = _values(net, spec.V, states)
    v_ok = bool(np.all(Vx >= 0))

    def exact_qv(i):
        return drift_value(net, spec.V, states[i], exact=True)

    def exact_v(i):
        env = net.env([int(v) for v in states[i]], exact=True)
        return Fraction(spec.V(env, exact=True))

    if spec.mode == "exponential":
        cp = spec.constant("c_prime", net.params)
        dp = spec.constant("d_prime", net.params)
        rhs = -float(cp) * Vx + float(dp)
        margin = QV - rhs
        tol = np.maximum(ABS_TOL, REL_TOL * np.maximum(np.abs(QV), np.abs(rhs)))
        bad = margin > tol
        for i in np.flatnonzero((np.abs(margin) <= tol) & (margin != 0)):
            bad[i] = exact_qv(i) > -cp * exact_v(i) + dp
        k = int(np.argmax(margin))
        return DriftReport(not bad.any(), spec.mode, len(states), scope, [int(v) for v in states[k]],
                           float(margin[k]), {"c_prime": float(cp), "d_prime": float(dp)},
                           V_nonnegative=v_ok)

    c = spec.constant("c", net.params)
    cf = float(c)
    tol = np.maximum(ABS_TOL, REL_TOL * np.maximum(np.abs(QV), cf))
    if spec.C is not None:
        inC = spec.C.mask(states, net.params)
    else:
        inC = QV > -cf + tol
        for i in np.flatnonzero((np.abs(QV + cf) <= tol) & (QV != -cf)):
            inC[i] = exact_qv(i) > -c
    d = spec.constant("d", net.params)
    if d is None:
        d = 1 + max(max((float(q) for q in QV[inC]), default=0.0), 0.0) if inC.any() else 0.0
    df = float(d)
    rhs = -cf + df * inC
    margin = QV - rhs
    bad = margin > np.maximum(ABS_TOL, REL_TOL * np.maximum(np.abs(QV), np.abs(rhs)))
    boundary = _boundary_mask(net, truncation, states)
    touches = bool(np.any(inC & boundary))
    k = int(np.argmax(np.where(inC, -np.inf, margin))) if (~inC).any() else int(np.argmax(margin))
    C_list = [[int(v) for v in s] for s in states[inC]]
    return DriftReport(not bad.any() and not touches, spec.mode, len(states), scope,
                       [int(v) for v in states[k]], float(margin[k]),
                       {"c": cf, "d": df}, C_list, touches, v_ok)


# reachability ------------------------------------------------------------------------

def _graph(net, truncation):
    box = net if truncation is None else net.with_caps(truncation)
    if truncation is None and not is_finite(net):
        raise InfiniteSpace("state space is infinite; give a truncation")
    states = enumerate_states(box)
    ns = derive_net_structure(box)
    R = rate_table(box, ns, states)
    idx = StateIndex(states)
    succ = np.stack([idx.lookup(states + ns.V[j]) for j in range(ns.n)], axis=1)
    succ[R <= 0] = -1
    return states, succ


def _bfs(succ, start):
    seen = np.zeros(len(succ), dtype=bool)
    seen[start] = True
    frontier = [start]
    while frontier:
        nxt = succ[frontier].ravel()
        nxt = np.unique(nxt[nxt >= 0])
        nxt = nxt[~seen[nxt]]
        seen[nxt] = True
        frontier = nxt.tolist()
    return seen


def reachable_states(net, x0, truncation=None):
    """States reachable from x0 along positive-rate transitions (BFS)."""
    states, succ = _graph(net, truncation)
    i = int(StateIndex(states).lookup(np.asarray(x0)[None, :])[0])
    if i < 0:
        raise ValidationError("x0 is not in the state space")
    return states[_bfs(succ, i)]


def is_irreducible(net, truncation=None):
    """Every state reaches every other on the finite space or truncation."""
    states, succ = _graph(net, truncation)
    if not _bfs(succ, 0).all():
        return False
    rev = [[] for _ in range(len(states))]
    for i, row in enumerate(succ):
        for j in row:
            if j >= 0:
                rev[j].append(i)
    width = max((len(r) for r in rev), default=0)
    pred = np.full((len(states), max(width, 1)), -1, dtype=np.int64)
    for j, r in enumerate(rev):
        pred[j, :len(r)] = r
    return bool(_bfs(pred, 0).all())
