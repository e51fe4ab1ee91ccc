"""Ready-made networks for the five worked examples, with their orders and targets.

Parameters use ASCII names: k1..k6 for rate constants, Stot/Etot/Dtot for
conserved totals (S_tot style spellings are accepted too), and for the histone
models k1a, k1b, k2a, k2b, k3a, k3b, mu, c plus k1a0, k1a1, K, h, k5a, k6a.
Any value not given falls back to a default (all rate constants 1, mu = 1,
c = 1, K = 5, h = 2) and is listed in ``ExampleBundle.defaults``.
"""
from dataclasses import dataclass, field
from fractions import Fraction

from .analysis import LyapunovSpec
from .conditions import CoupledPair, GroupPartition
from .errors import InvalidParams
from .expr import Expr
from .model import (Expression, MassAction, Network, Reaction, StateSet, StateSpace,
                    to_fraction)
from .order import OrderSpec


@dataclass
class ExampleBundle:
    id: str
    network: Network
    orders: dict
    theorems: dict              # order name -> checker key
    variant_param: str
    variant_factor: dict        # order name -> factor applied to variant_param
    initial: dict
    targets: dict
    partitions: dict = field(default_factory=dict)
    truncation: object = None   # caps for checkers on infinite spaces
    lyapunov: LyapunovSpec = None
    defaults: tuple = ()

    @property
    def params(self):
        return dict(self.network.params)

    def order(self, name="main"):
        try:
            return self.orders[name]
        except KeyError:
            raise InvalidParams(f"{self.id} has no order {name!r}; choose from {sorted(self.orders)}") from None

    def variant(self, **overrides):
        return self.network.with_params(**overrides)

    def default_variant(self, order="main"):
        """Variant overrides realizing the comparison studied with this order."""
        p = self.variant_param
        return {p: self.network.params[p] * self.variant_factor[order]}

    def pair(self, order="main", **overrides):
        """Coupled pair (base, variant); without overrides uses default_variant(order)."""
        A = self.order(order)
        var = self.variant(**(overrides or self.default_variant(order)))
        return CoupledPair(self.network, var, A)

    def to_dict(self):
        return {
            "id": self.id,
            "params": {k: str(v) for k, v in self.network.params.items()},
            "defaults": list(self.defaults),
            "orders": {k: [list(r) for r in v.A] for k, v in self.orders.items()},
            "theorems": dict(self.theorems),
            "initial": {k: list(v) for k, v in self.initial.items()},
            "targets": {k: v.describe() for k, v in self.targets.items()},
            "partitions": {k: v.one_based() for k, v in self.partitions.items()},
        }


RATE_DEFAULTS = {"mu": 1, "c": 1, "K": 5, "h": 2}


def _resolve(bid, given, rates, totals):
    params, defaults = {}, []
    norm = {k.replace("_", ""): v for k, v in given.items()}
    allowed = set(rates) | set(totals)
    unknown = set(norm) - allowed
    if unknown:
        raise InvalidParams(f"{bid}: unknown parameters {sorted(unknown)}")
    for name, default in totals.items():
        v = norm.get(name, default)
        if name not in norm:
            defaults.append(name)
        try:
            q = to_fraction(v)
        except Exception:
            raise InvalidParams(f"{bid}: bad value for {name}") from None
        if q.denominator != 1 or q < 1:
            raise InvalidParams(f"{bid}: {name} must be a positive integer")
        params[name] = q
    for name in rates:
        if name in norm:
            try:
                q = to_fraction(norm[name])
            except Exception:
                raise InvalidParams(f"{bid}: bad value for {name}") from None
        else:
            q = Fraction(RATE_DEFAULTS.get(name, 1))
            defaults.append(name)
        if q <= 0:
            raise InvalidParams(f"{bid}: {name} must be positive")
        params[name] = q
    return params, tuple(defaults)


def _rxn(reactant, product, rate):
    prop = MassAction(rate) if not rate.startswith("=") else Expression(Expr(rate[1:]))
    return Reaction(tuple(reactant), tuple(product), prop)


def enzyme1(**given):
    p, dflt = _resolve("enzyme1", given, ["k1", "k2", "k3"], {"Stot": 3, "Etot": 2})
    S, E = int(p["Stot"]), int(p["Etot"])
    rx = (
        _rxn((1, 0, 1, 0), (0, 0, 0, 1), "k1"),
        _rxn((0, 0, 0, 1), (1, 0, 1, 0), "k2"),
        _rxn((0, 0, 0, 1), (0, 1, 1, 0), "k3"),
    )
    ss = StateSpace("class", equalities=(((1, 1, 0, 1), S), ((0, 0, 1, 1), E)))
    A = ((-1, 0, 0, 0), (0, 1, 0, 0))
    net = Network(("S", "P", "E", "SE"), rx, ss, p, A, "enzyme1")
    s, prod = (S, 0, E, 0), (0, S, E, 0)
    return ExampleBundle(
        "enzyme1", net, {"main": OrderSpec(A)}, {"main": "3.2"}, "k3", {"main": 2},
        {"s": s, "p": prod}, {"p": StateSet(states=[prod])}, defaults=dflt)


def enzyme2_lyapunov():
    b = ("(1 + (k5 + k2*Etot + k3*Etot) + (2*k5 + k6 + 2*k2*Etot)^2/(8*k6))"
         " / (k2*Etot*(2*Etot - 1))")
    return LyapunovSpec(f"x1^2 + ((2*Etot - 1)*({b}) + 1)*x2 + ({b})*x4^2", c=1)


def enzyme2(**given):
    p, dflt = _resolve("enzyme2", given, ["k1", "k2", "k3", "k4", "k5", "k6"], {"Etot": 2})
    E = int(p["Etot"])
    rx = (
        _rxn((1, 0, 1, 0), (0, 0, 0, 1), "k1"),
        _rxn((0, 0, 0, 1), (1, 0, 1, 0), "k2"),
        _rxn((0, 0, 0, 1), (0, 1, 1, 0), "k3"),
        _rxn((0, 1, 1, 0), (0, 0, 0, 1), "k4"),
        _rxn((0, 0, 0, 0), (1, 0, 0, 0), "k5"),
        _rxn((1, 0, 0, 0), (0, 0, 0, 0), "k6"),
    )
    ss = StateSpace("class", equalities=(((0, 0, 1, 1), E),))
    A = ((1, 0, 0, 0), (0, 1, 0, 0), (0, 0, -1, 0))
    net = Network(("S", "P", "E", "SE"), rx, ss, p, A, "enzyme2")
    return ExampleBundle(
        "enzyme2", net, {"main": OrderSpec(A)}, {"main": "3.2"}, "k5", {"main": 2},
        {"empty": (0, 0, E, 0)}, {}, truncation=[12, 12, None, None],
        lyapunov=enzyme2_lyapunov(), defaults=dflt)


def braess(**given):
    p, dflt = _resolve("braess", given, ["k1", "k2", "k3", "k4", "k5"], {"Stot": 2})
    S = int(p["Stot"])
    rx = (
        _rxn((1, 0, 0, 0), (0, 1, 0, 0), "k1"),
        _rxn((0, 1, 0, 0), (0, 0, 0, 1), "k2"),
        _rxn((1, 0, 0, 0), (0, 0, 1, 0), "k3"),
        _rxn((0, 0, 1, 0), (0, 0, 0, 1), "k4"),
        _rxn((0, 1, 0, 0), (0, 0, 1, 0), "k5"),
    )
    ss = StateSpace("class", equalities=(((1, 1, 1, 1), S),))
    A = ((-1, 0, 0, 0), (0, -1, -1, 0))
    orders = {
        "main": OrderSpec(A),
        "si1": OrderSpec(((-1, 0, 0, 0), (0, 0, -1, 0), (0, -1, -1, 0))),
        "si2": OrderSpec(((-1, 0, 0, 0), (0, -1, 0, 0), (0, -1, -1, 0))),
    }
    parts = {
        "main": GroupPartition.from_one_based([[1, 3], [2, 4], [5]]),
        "si1": GroupPartition.from_one_based([[3, 1], [4, 2], [5]]),
        "si2": GroupPartition.from_one_based([[1, 3], [2, 4], [5]]),
    }
    net = Network(("S1", "S2", "S3", "S4"), rx, ss, p, A, "braess")
    start, end = (S, 0, 0, 0), (0, 0, 0, S)
    return ExampleBundle(
        "braess", net, orders, {"main": "3.3", "si1": "S.2", "si2": "S.2"}, "k5",
        {"main": 2, "si1": Fraction(1, 2), "si2": 2},
        {"start": start, "end": end}, {"end": StateSet(states=[end])}, parts, defaults=dflt)


_HISTONE_RATES = ["k1b", "k2a", "k2b", "k3a", "k3b", "mu", "c"]
_R2 = "=(Dtot - (x1 + x2))*(k2a + k2b*x1)"
_R3 = "=x2*(k3a + x1*k3b)"
_R4 = "=x1*mu*(c*k3a + x2*k3b)"


def histone(**given):
    p, dflt = _resolve("histone", given, ["k1a"] + _HISTONE_RATES, {"Dtot": 3})
    D = int(p["Dtot"])
    rx = (
        _rxn((0, 0), (0, 1), "=(Dtot - (x1 + x2))*(k1a + k1b*x2)"),
        _rxn((0, 0), (1, 0), _R2),
        _rxn((0, 1), (0, 0), _R3),
        _rxn((1, 0), (0, 0), _R4),
    )
    ss = StateSpace("class", inequalities=(((1, 1), D),))
    A = ((-1, 0), (0, 1))
    net = Network(("DR", "DA"), rx, ss, p, A, "histone")
    a, r = (0, D), (D, 0)
    return ExampleBundle(
        "histone", net, {"main": OrderSpec(A)}, {"main": "3.2"}, "mu", {"main": 2},
        {"a": a, "r": r}, {"a": StateSet(states=[a]), "r": StateSet(states=[r])}, defaults=dflt)


def histone_tf(**given):
    p, dflt = _resolve("histone_tf", given,
                       ["k1a0", "k1a1", "K", "h"] + _HISTONE_RATES + ["k5a", "k6a"], {"Dtot": 3})
    if p["h"].denominator != 1:
        raise InvalidParams("histone_tf: hill exponent h must be a positive integer")
    D = int(p["Dtot"])
    rx = (
        _rxn((0, 0, 0), (0, 1, 0), "=(Dtot - (x1 + x2))*(k1a0 + k1a1*hill(x3, K, h) + k1b*x2)"),
        _rxn((0, 0, 0), (1, 0, 0), _R2),
        _rxn((0, 1, 0), (0, 0, 0), _R3),
        _rxn((1, 0, 0), (0, 0, 0), _R4),
        _rxn((0, 1, 0), (0, 1, 1), "k5a"),
        _rxn((0, 0, 1), (0, 0, 0), "k6a"),
    )
    ss = StateSpace("class", inequalities=(((1, 1, 0), D),))
    A = ((-1, 0, 0), (0, 1, 0), (0, 0, 1))
    net = Network(("DR", "DA", "P"), rx, ss, p, A, "histone_tf")
    drift = LyapunovSpec("x3", mode="exponential", c_prime="k6a", d_prime="k5a*Dtot")
    return ExampleBundle(
        "histone_tf", net, {"main": OrderSpec(A)}, {"main": "3.2"}, "k5a", {"main": 2},
        {"r": (D, 0, 0), "a": (0, D, 0)}, {"theta": StateSet(predicate="x1 == 0 and x2 == Dtot")},
        truncation=[None, None, 30], lyapunov=drift, defaults=dflt)


BUILDERS = {"enzyme1": enzyme1, "enzyme2": enzyme2, "braess": braess,
            "histone": histone, "histone_tf": histone_tf}


def build(bid, **params):
    try:
        fn = BUILDERS[bid]
    except KeyError:
        raise InvalidParams(f"unknown example {bid!r}; choose from {sorted(BUILDERS)}") from None
    return fn(**params)
