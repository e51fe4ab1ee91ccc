"""Reaction networks, propensities, net reaction vectors and state spaces."""
from dataclasses import dataclass, field, replace
from fractions import Fraction
import json
import logging

import numpy as np

from .errors import (CapExceeded, EvaluationError, InfiniteSpace, ParseError,
                     ValidationError)
from .expr import Expr

log = logging.getLogger(__name__)

MAX_STATES = 2_000_000


def to_fraction(value):
    """Read a parameter value exactly. Strings like '1/3' and '0.1' are allowed."""
    if isinstance(value, bool):
        raise ValidationError(f"bad numeric value {value!r}")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        if not np.isfinite(value):
            raise ValidationError(f"non-finite value {value!r}")
        return Fraction(repr(value))
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError):
            raise ValidationError(f"bad numeric value {value!r}") from None
    raise ValidationError(f"bad numeric value {value!r}")


def fraction_to_json(q):
    q = Fraction(q)
    return q.numerator if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


@dataclass(frozen=True)
class MassAction:
    """Mass-action propensity; ``constant`` is a parameter name or a literal."""
    constant: object

    def to_json(self):
        c = self.constant
        return {"mass_action": c if isinstance(c, str) else fraction_to_json(c)}


@dataclass(frozen=True)
class Expression:
    expr: Expr

    def to_json(self):
        return {"expr": self.expr.source}


@dataclass(frozen=True)
class Reaction:
    reactant: tuple
    product: tuple
    propensity: object

    @property
    def net(self):
        return tuple(p - r for p, r in zip(self.product, self.reactant))


@dataclass(frozen=True)
class StateSpace:
    """State space description.

    kind is 'enumerated' (explicit ``states``), 'class' (linear equalities
    and inequalities over the non-negative integers, optional caps) or 'box'
    (caps only). ``caps`` has one entry per coordinate, None meaning uncapped.
    """
    kind: str
    states: tuple = ()
    equalities: tuple = ()      # ((coeffs...), rhs)
    inequalities: tuple = ()    # ((coeffs...), rhs) meaning <c,x> <= rhs
    caps: tuple = ()

    def to_json(self):
        if self.kind == "enumerated":
            return {"kind": "enumerated", "states": [list(s) for s in self.states]}
        out = {"kind": self.kind}
        if self.equalities:
            out["equalities"] = [{"coeffs": list(c), "rhs": b} for c, b in self.equalities]
        if self.inequalities:
            out["inequalities"] = [{"coeffs": list(c), "rhs": b} for c, b in self.inequalities]
        if any(c is not None for c in self.caps):
            out["caps"] = list(self.caps)
        return out


@dataclass(frozen=True)
class Network:
    species: tuple
    reactions: tuple
    state_space: StateSpace
    params: dict = field(default_factory=dict)
    order_matrix: tuple = None
    name: str = ""

    def __post_init__(self):
        validate(self)

    @property
    def d(self):
        return len(self.species)

    def env(self, X=None, exact=False):
        """Name bindings for expression evaluation.

        X is an (S, d) integer array (vectorized) or a single state when exact.
        """
        if exact:
            e = {k: Fraction(v) for k, v in self.params.items()}
            if X is not None:
                for i, xi in enumerate(X):
                    e[f"x{i + 1}"] = Fraction(int(xi))
            return e
        e = {k: float(v) for k, v in self.params.items()}
        if X is not None:
            X = np.asarray(X)
            for i in range(self.d):
                e[f"x{i + 1}"] = X[:, i].astype(float)
        return e

    def with_params(self, **overrides):
        params = dict(self.params)
        for k, v in overrides.items():
            if k not in params:
                raise ValidationError(f"unknown parameter {k!r}")
            params[k] = to_fraction(v)
        return replace(self, params=params)

    def with_caps(self, caps):
        """Same network on the intersection of its space with a coordinate box.

        ``caps`` is an int (applied to every coordinate) or a per-coordinate list.
        """
        if np.isscalar(caps):
            caps = [int(caps)] * self.d
        caps = list(caps)
        if len(caps) != self.d:
            raise ValidationError("caps length does not match dimension")
        ss = self.state_space
        if ss.kind == "enumerated":
            keep = tuple(s for s in ss.states
                         if all(c is None or v <= c for v, c in zip(s, caps)))
            return replace(self, state_space=replace(ss, states=keep))
        old = ss.caps or (None,) * self.d
        merged = tuple(
            c if o is None else (o if c is None else min(o, c))
            for o, c in zip(old, caps))
        return replace(self, state_space=replace(ss, caps=merged))

    def contains(self, X):
        """Vectorized membership test for the rows of X."""
        X = np.atleast_2d(np.asarray(X, dtype=np.int64))
        ss = self.state_space
        if ss.kind == "enumerated":
            allowed = set(ss.states)
            return np.fromiter((tuple(r) in allowed for r in X.tolist()), bool, len(X))
        ok = np.all(X >= 0, axis=1)
        for i, c in enumerate(ss.caps):
            if c is not None:
                ok &= X[:, i] <= c
        for c, b in ss.equalities:
            ok &= X @ np.asarray(c, dtype=np.int64) == b
        for c, b in ss.inequalities:
            ok &= X @ np.asarray(c, dtype=np.int64) <= b
        return ok


def validate(net):
    d = len(net.species)
    if d < 1:
        raise ValidationError("network needs at least one species")
    if len(set(net.species)) != d:
        raise ValidationError("duplicate species names")
    if not net.reactions:
        raise ValidationError("reaction list is empty")
    xnames = {f"x{i + 1}" for i in range(d)}
    clash = xnames & set(net.params)
    if clash:
        raise ValidationError(f"parameter names clash with state variables: {sorted(clash)}")
    seen = np.zeros(d, dtype=bool)
    for k, r in enumerate(net.reactions):
        if len(r.reactant) != d or len(r.product) != d:
            raise ValidationError(f"reaction {k + 1}: vector length differs from species count")
        if min(r.reactant) < 0 or min(r.product) < 0:
            raise ValidationError(f"reaction {k + 1}: negative stoichiometry")
        if tuple(r.reactant) == tuple(r.product):
            raise ValidationError(f"reaction {k + 1}: reactant equals product")
        seen |= np.asarray(r.reactant) > 0
        seen |= np.asarray(r.product) > 0
        p = r.propensity
        if isinstance(p, MassAction):
            if isinstance(p.constant, str) and p.constant not in net.params:
                raise ValidationError(f"reaction {k + 1}: unknown rate constant {p.constant!r}")
        elif isinstance(p, Expression):
            unknown = p.expr.names() - xnames - set(net.params)
            if unknown:
                raise ValidationError(f"reaction {k + 1}: unknown names {sorted(unknown)}")
        else:
            raise ValidationError(f"reaction {k + 1}: bad propensity")
    if not seen.all():
        missing = [net.species[i] for i in np.flatnonzero(~seen)]
        raise ValidationError(f"species never appear in a reaction: {missing}")
    ss = net.state_space
    if ss.kind not in ("enumerated", "class", "box"):
        raise ValidationError(f"unknown state space kind {ss.kind!r}")
    if ss.kind == "enumerated":
        for s in ss.states:
            if len(s) != d or min(s) < 0:
                raise ValidationError(f"bad enumerated state {s}")
    else:
        if ss.caps and len(ss.caps) != d:
            raise ValidationError("caps length does not match dimension")
        for c in ss.caps:
            if c is not None and c < 0:
                raise ValidationError("caps must be non-negative")
        for c, _ in ss.equalities + ss.inequalities:
            if len(c) != d:
                raise ValidationError("constraint length does not match dimension")
        if ss.kind == "box" and (not ss.caps or any(c is None for c in ss.caps)):
            raise ValidationError("box state space needs a cap for every coordinate")
    if net.order_matrix is not None:
        for row in net.order_matrix:
            if len(row) != d:
                raise ValidationError("order_matrix row length does not match dimension")


# net structure ----------------------------------------------------------------

@dataclass(frozen=True)
class NetStructure:
    """Distinct net vectors in order of first appearance, with their reactions."""
    vectors: tuple
    groups: tuple

    @property
    def n(self):
        return len(self.vectors)

    @property
    def V(self):
        return np.asarray(self.vectors, dtype=np.int64).reshape(len(self.vectors), -1)

    def index(self, v):
        return self.vectors.index(tuple(v))


def derive_net_structure(net):
    vectors, groups = [], []
    for k, r in enumerate(net.reactions):
        v = r.net
        if v in vectors:
            groups[vectors.index(v)].append(k)
        else:
            vectors.append(v)
            groups.append([k])
    return NetStructure(tuple(vectors), tuple(tuple(g) for g in groups))


# propensities -----------------------------------------------------------------

def falling(m, ell):
    out = np.ones_like(m, dtype=float)
    for k in range(ell):
        out = out * (m - k)
    return out


def _constant(net, p, exact):
    c = p.constant
    v = net.params[c] if isinstance(c, str) else to_fraction(c)
    return Fraction(v) if exact else float(v)


def propensities(net, X):
    """Per-reaction propensities at the rows of X, shape (S, r)."""
    X = np.atleast_2d(np.asarray(X, dtype=np.int64))
    env = None
    out = np.empty((len(X), len(net.reactions)))
    for k, r in enumerate(net.reactions):
        p = r.propensity
        if isinstance(p, MassAction):
            val = np.full(len(X), _constant(net, p, False))
            for i, ell in enumerate(r.reactant):
                if ell:
                    val = val * falling(X[:, i], ell)
        else:
            if env is None:
                env = net.env(X)
            val = np.broadcast_to(np.asarray(p.expr(env), dtype=float), (len(X),))
        bad = ~np.isfinite(val) | (val < 0)
        if bad.any():
            s = tuple(int(v) for v in X[np.argmax(bad)])
            raise EvaluationError(f"reaction {k + 1}: propensity invalid ({val[np.argmax(bad)]}) at state {s}")
        out[:, k] = val
    return out


def exact_propensities(net, x):
    """Per-reaction propensities at one state as Fractions."""
    x = [int(v) for v in x]
    env = None
    out = []
    for k, r in enumerate(net.reactions):
        p = r.propensity
        if isinstance(p, MassAction):
            val = _constant(net, p, True)
            for i, ell in enumerate(r.reactant):
                for j in range(ell):
                    val *= x[i] - j
        else:
            if env is None:
                env = net.env(x, exact=True)
            val = Fraction(p.expr(env, exact=True))
        if val < 0:
            raise EvaluationError(f"reaction {k + 1}: negative propensity at state {tuple(x)}")
        out.append(val)
    return out


def rate_table(net, ns, X, space=None):
    """Summed rates Upsilon_j at the rows of X, shape (S, n).

    Entry j is zeroed where x+v_j is outside ``space`` (a Network whose
    ``contains`` defines the state space; defaults to ``net``).
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.int64))
    space = net if space is None else space
    P = propensities(net, X)
    out = np.zeros((len(X), ns.n))
    for j, (v, g) in enumerate(zip(ns.vectors, ns.groups)):
        col = P[:, list(g)].sum(axis=1)
        col[~space.contains(X + np.asarray(v))] = 0.0
        out[:, j] = col
    return out


def rate_vector(net, ns, x):
    return rate_table(net, ns, np.asarray(x)[None, :])[0]


def exact_rate_vector(net, ns, x, space=None):
    space = net if space is None else space
    P = exact_propensities(net, x)
    out = []
    for v, g in zip(ns.vectors, ns.groups):
        y = np.asarray(x) + np.asarray(v)
        out.append(sum((P[k] for k in g), Fraction(0)) if space.contains(y)[0] else Fraction(0))
    return out


def generator_row(net, ns, x):
    """Off-diagonal entries {x+v_j: Upsilon_j(x)} with positive rate, plus the diagonal."""
    rates = rate_vector(net, ns, x)
    row = {}
    for v, r in zip(ns.vectors, rates):
        if r > 0:
            y = tuple(int(a + b) for a, b in zip(x, v))
            row[y] = row.get(y, 0.0) + float(r)
    return row, -float(rates.sum())


# enumeration ------------------------------------------------------------------

def coordinate_bounds(net):
    """Upper bound per coordinate implied by caps and non-negative constraints."""
    ss = net.state_space
    d = net.d
    ub = [np.inf] * d
    for i, c in enumerate(ss.caps or ()):
        if c is not None:
            ub[i] = min(ub[i], c)
    for c, b in ss.equalities + ss.inequalities:
        if all(ci >= 0 for ci in c):
            for i, ci in enumerate(c):
                if ci > 0:
                    ub[i] = min(ub[i], b // ci)
    return ub


def enumerate_states(net, max_states=MAX_STATES):
    """All states of a finite space as a lexicographically sorted (S, d) int64 array."""
    ss = net.state_space
    d = net.d
    if ss.kind == "enumerated":
        arr = np.unique(np.asarray(ss.states, dtype=np.int64).reshape(-1, d), axis=0)
        if len(arr) > max_states:
            raise CapExceeded(f"{len(arr)} states exceed the maximum {max_states}")
        return arr
    ub = coordinate_bounds(net)
    if any(u == np.inf for u in ub):
        free = [net.species[i] for i, u in enumerate(ub) if u == np.inf]
        raise InfiniteSpace(f"coordinates {free} are unbounded; give caps or a truncation")
    if any(u < 0 for u in ub):
        return np.zeros((0, d), dtype=np.int64)
    prunable = [(np.asarray(c), b) for c, b in ss.equalities + ss.inequalities
                if all(ci >= 0 for ci in c)]
    arr = np.zeros((1, 0), dtype=np.int64)
    for i in range(d):
        vals = np.arange(int(ub[i]) + 1, dtype=np.int64)
        arr = np.hstack([np.repeat(arr, len(vals), axis=0),
                         np.tile(vals, len(arr))[:, None]])
        for c, b in prunable:
            arr = arr[arr @ c[: i + 1] <= b]
        if len(arr) > 10 * max_states:
            raise CapExceeded(f"enumeration exceeds {10 * max_states} partial states")
    arr = arr[net.contains(arr)]
    if len(arr) > max_states:
        raise CapExceeded(f"{len(arr)} states exceed the maximum {max_states}")
    return arr


def is_finite(net):
    if net.state_space.kind == "enumerated":
        return True
    return all(u != np.inf for u in coordinate_bounds(net))


class StateIndex:
    """Row lookup for a lexicographically sorted state array."""

    def __init__(self, states):
        self.states = np.asarray(states, dtype=np.int64)
        if len(self.states):
            self.lo = self.states.min(axis=0)
            span = self.states.max(axis=0) - self.lo + 1
        else:
            self.lo = np.zeros(self.states.shape[1], dtype=np.int64)
            span = np.ones(self.states.shape[1], dtype=np.int64)
        self.span = span
        strides = np.ones_like(span)
        for i in range(len(span) - 2, -1, -1):
            strides[i] = strides[i + 1] * span[i + 1]
        self.strides = strides
        self.keys = (self.states - self.lo) @ strides

    def lookup(self, Y):
        """Row index of each row of Y, or -1 when absent."""
        Y = np.atleast_2d(np.asarray(Y, dtype=np.int64))
        out = np.full(len(Y), -1, dtype=np.int64)
        if not len(self.states):
            return out
        rel = Y - self.lo
        inside = np.all((rel >= 0) & (rel < self.span), axis=1)
        keys = rel[inside] @ self.strides
        pos = np.searchsorted(self.keys, keys)
        pos = np.minimum(pos, len(self.keys) - 1)
        hit = self.keys[pos] == keys
        idx = np.flatnonzero(inside)
        out[idx[hit]] = pos[hit]
        return out

    def __len__(self):
        return len(self.states)


# model files ------------------------------------------------------------------

def _vector(value, species, where):
    if isinstance(value, dict):
        out = [0] * len(species)
        for name, count in value.items():
            if name not in species:
                raise ValidationError(f"{where}: unknown species {name!r}")
            out[species.index(name)] = int(count)
        return tuple(out)
    if isinstance(value, list):
        if len(value) != len(species):
            raise ValidationError(f"{where}: expected {len(species)} entries")
        return tuple(int(v) for v in value)
    raise ValidationError(f"{where}: expected a list or species map")


def _locate(text, needle):
    pos = text.find(needle)
    if pos < 0:
        return None, None
    line = text.count("\n", 0, pos) + 1
    col = pos - (text.rfind("\n", 0, pos) + 1) + 1
    return line, col


def network_from_dict(data, text=""):
    if not isinstance(data, dict):
        raise ValidationError("model must be a JSON object")
    try:
        species = tuple(str(s) for s in data["species"])
        raw_reactions = data["reactions"]
    except KeyError as e:
        raise ValidationError(f"missing key {e.args[0]!r}") from None
    params = {str(k): to_fraction(v) for k, v in (data.get("params") or {}).items()}
    reactions = []
    for k, rd in enumerate(raw_reactions):
        where = f"reaction {k + 1}"
        reactant = _vector(rd.get("reactant", []), species, where)
        product = _vector(rd.get("product", []), species, where)
        rate = rd.get("rate")
        if isinstance(rate, dict) and "mass_action" in rate:
            c = rate["mass_action"]
            prop = MassAction(c if isinstance(c, str) else to_fraction(c))
        elif isinstance(rate, dict) and "expr" in rate:
            src = rate["expr"]
            try:
                prop = Expression(Expr(src))
            except ParseError as e:
                line, col = _locate(text, src)
                if line is None:
                    raise
                raise ParseError(f"{where}: {e.args[0].split(' (line')[0]}",
                                 line, col + (e.column or 1) - 1) from None
        else:
            raise ValidationError(f"{where}: rate must be {{'mass_action': ...}} or {{'expr': ...}}")
        reactions.append(Reaction(reactant, product, prop))
    ssd = data.get("state_space")
    if not isinstance(ssd, dict):
        raise ValidationError("missing state_space")
    kind = ssd.get("kind")
    d = len(species)
    caps = ssd.get("caps")
    if isinstance(caps, int):
        caps = [caps] * d
    caps = tuple(None if c is None else int(c) for c in caps) if caps else ()
    if kind == "enumerated":
        ss = StateSpace("enumerated", states=tuple(tuple(int(v) for v in s) for s in ssd.get("states", [])))
    elif kind in ("class", "box"):
        eqs = tuple((tuple(int(c) for c in e["coeffs"]), int(e["rhs"])) for e in ssd.get("equalities", []))
        ineqs = tuple((tuple(int(c) for c in e["coeffs"]), int(e["rhs"])) for e in ssd.get("inequalities", []))
        ss = StateSpace(kind, equalities=eqs, inequalities=ineqs, caps=caps)
    else:
        raise ValidationError(f"unknown state_space kind {kind!r}")
    order = data.get("order_matrix")
    if order is not None:
        order = tuple(tuple(int(v) for v in row) for row in order)
    return Network(species, tuple(reactions), ss, params, order, str(data.get("name", "")))


def parse_model(text):
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(e.msg, e.lineno, e.colno) from None
    return network_from_dict(data, text)


def network_to_dict(net):
    out = {}
    if net.name:
        out["name"] = net.name
    out["species"] = list(net.species)
    out["params"] = {k: fraction_to_json(v) for k, v in net.params.items()}
    reactions = []
    for r in net.reactions:
        reactions.append({
            "reactant": {s: c for s, c in zip(net.species, r.reactant) if c},
            "product": {s: c for s, c in zip(net.species, r.product) if c},
            "rate": r.propensity.to_json(),
        })
    out["reactions"] = reactions
    out["state_space"] = net.state_space.to_json()
    if net.order_matrix is not None:
        out["order_matrix"] = [list(row) for row in net.order_matrix]
    return out


def serialize_model(net):
    return json.dumps(network_to_dict(net), indent=2) + "\n"


def load_model(path):
    with open(path, encoding="utf-8") as fh:
        return parse_model(fh.read())


class StateSet:
    """A target set given by a predicate expression or an explicit state list."""

    def __init__(self, predicate=None, states=None):
        if (predicate is None) == (states is None):
            raise ValidationError("give exactly one of predicate or states")
        self.predicate = Expr(predicate) if isinstance(predicate, str) else predicate
        self.states = None
        if states is not None:
            self.states = {tuple(int(v) for v in s) for s in states}

    def mask(self, X, params=None):
        X = np.atleast_2d(np.asarray(X, dtype=np.int64))
        if self.states is not None:
            return np.fromiter((tuple(r) in self.states for r in X.tolist()), bool, len(X))
        env = {k: float(v) for k, v in (params or {}).items()}
        for i in range(X.shape[1]):
            env[f"x{i + 1}"] = X[:, i].astype(float)
        val = np.broadcast_to(np.asarray(self.predicate(env), dtype=float), (len(X),))
        return val != 0

    def contains(self, x, params=None):
        return bool(self.mask(np.asarray(x)[None, :], params)[0])

    def describe(self):
        if self.states is not None:
            return {"states": sorted(list(s) for s in self.states)}
        return {"predicate": self.predicate.source}

    @classmethod
    def of(cls, obj):
        if obj is None or isinstance(obj, StateSet):
            return obj
        if isinstance(obj, str):
            return cls(predicate=obj)
        return cls(states=obj)
