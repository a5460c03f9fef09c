"""Dataflow builder for ReLU circuits.

Values are affine expressions over *nodes*; a node is either a network input
or a neuron ``ReLU(expr)``.  Because every neuron is nonnegative, carrying a
neuron across layers costs a single ReLU channel.  :meth:`Circuit.to_network`
schedules neurons as late as possible (so recomputed sub-circuits do not get
hoisted and stored) and inserts the delay channels needed to obtain a strictly
layered :class:`~cascade_relu.network.ReluNetwork`.

Neurons are hash-consed per *scope*: identical pre-activations inside one
scope share a neuron.  Opening a fresh scope forces recomputation, which is
how the two-pass schedule of the cascade keeps its width independent of n.
"""

from __future__ import annotations

from contextlib import contextmanager
from fractions import Fraction
from typing import Iterable, Sequence

from .network import AffineLayer, ReluNetwork
from .rational import as_fraction

__all__ = ["Expr", "Circuit"]

_ZERO = Fraction(0)
_ONE = Fraction(1)


class Expr:
    """Affine combination ``sum_k c_k * node_k + const`` (immutable by convention)."""

    __slots__ = ("terms", "const")

    def __init__(self, terms: dict | None = None, const=0):
        self.terms = {k: v for k, v in (terms or {}).items() if v != 0}
        self.const = Fraction(const)

    @classmethod
    def constant(cls, c) -> "Expr":
        return cls({}, as_fraction(c))

    def is_constant(self) -> bool:
        return not self.terms

    def __add__(self, other):
        if not isinstance(other, Expr):
            return Expr(self.terms, self.const + as_fraction(other))
        t = dict(self.terms)
        for k, v in other.terms.items():
            t[k] = t.get(k, _ZERO) + v
        return Expr(t, self.const + other.const)

    __radd__ = __add__

    def __neg__(self):
        return Expr({k: -v for k, v in self.terms.items()}, -self.const)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, c):
        c = as_fraction(c)
        if c == 0:
            return Expr()
        return Expr({k: v * c for k, v in self.terms.items()}, self.const * c)

    __rmul__ = __mul__

    def __truediv__(self, c):
        return self * (1 / as_fraction(c))

    def __repr__(self):
        parts = [f"{v}*n{k}" for k, v in sorted(self.terms.items())]
        return "Expr(" + " + ".join(parts + [str(self.const)]) + ")"


def lincomb(pairs: Iterable[tuple], const=0) -> Expr:
    """``sum(c * e for c, e in pairs) + const`` without intermediate copies."""
    t: dict = {}
    k0 = as_fraction(const)
    for c, e in pairs:
        c = as_fraction(c)
        if c == 0:
            continue
        k0 += c * e.const
        for k, v in e.terms.items():
            t[k] = t.get(k, _ZERO) + c * v
    return Expr(t, k0)


class Circuit:
    """Builder for a layered ReLU network with ``n_inputs`` inputs."""

    def __init__(self, n_inputs: int, nonneg_inputs: Sequence[bool] | None = None):
        self.n_inputs = n_inputs
        flags = list(nonneg_inputs) if nonneg_inputs is not None else [False] * n_inputs
        self._nonneg: list[bool] = flags
        self._pre: list[Expr | None] = [None] * n_inputs
        self._asap: list[int] = [0] * n_inputs
        self._table: dict = {}
        self._scope: tuple = ()
        self._fresh = 0

    # -- nodes ----------------------------------------------------------
    def input(self, i: int) -> Expr:
        return Expr({i: _ONE})

    @property
    def inputs(self) -> list[Expr]:
        return [self.input(i) for i in range(self.n_inputs)]

    @property
    def n_neurons(self) -> int:
        return len(self._pre) - self.n_inputs

    @contextmanager
    def scope(self, name=None):
        """Neurons created inside do not share with neurons outside."""
        if name is None:
            self._fresh += 1
            name = ("fresh", self._fresh)
        saved = self._scope
        self._scope = saved + (name,)
        try:
            yield
        finally:
            self._scope = saved

    def relu(self, e: Expr, fresh: bool = False) -> Expr:
        """ReLU(e), folded when the sign of e is known and shared by key.

        ``fresh`` always allocates a new neuron, which keeps a block's
        layout independent of the values fed to it.
        """
        if fresh:
            e = e if isinstance(e, Expr) else Expr.constant(e)
            node = len(self._pre)
            self._pre.append(Expr(e.terms, e.const))
            self._nonneg.append(True)
            self._asap.append(1 + max((self._asap[k] for k in e.terms), default=0))
            return Expr({node: _ONE})
        if not isinstance(e, Expr):
            return Expr.constant(max(as_fraction(e), _ZERO))
        if not e.terms:
            return Expr.constant(max(e.const, _ZERO))
        signs = set()
        for k, v in e.terms.items():
            if not self._nonneg[k]:
                signs.add(0)
                break
            signs.add(1 if v > 0 else -1)
        if signs == {1} and e.const >= 0:
            return e
        if signs == {-1} and e.const <= 0:
            return Expr()
        # no rescaling: a per-neuron scale would compound along the depth
        key = (self._scope, tuple(sorted(e.terms.items())), e.const)
        node = self._table.get(key)
        if node is None:
            node = len(self._pre)
            self._pre.append(Expr(e.terms, e.const))
            self._nonneg.append(True)
            self._asap.append(1 + max(self._asap[k] for k in e.terms))
            self._table[key] = node
        return Expr({node: _ONE})

    def nonneg(self, e: Expr) -> Expr:
        """Materialize a value known to be >= 0 as a single neuron."""
        if len(e.terms) == 1 and e.const == 0:
            (k, v), = e.terms.items()
            if v == 1 and self._nonneg[k]:
                return e
        if not e.terms:
            return e
        items = sorted(e.terms.items())
        key = (self._scope, "nn", tuple(items), e.const)
        node = self._table.get(key)
        if node is None:
            node = len(self._pre)
            self._pre.append(Expr(e.terms, e.const))
            self._nonneg.append(True)
            self._asap.append(1 + max(self._asap[k] for k in e.terms))
            self._table[key] = node
        return Expr({node: _ONE})

    def split(self, e: Expr) -> Expr:
        """Store a signed value as ReLU(e) - ReLU(-e) (two neurons)."""
        if e.is_constant():
            return e
        return self.relu(e) - self.relu(-e)

    def level(self, e: Expr) -> int:
        """Earliest layer at which ``e`` is available."""
        return max((self._asap[k] for k in e.terms), default=0)

    # -- gadgets ----------------------------------------------------------
    def min2(self, a: Expr, b: Expr) -> Expr:
        return a - self.relu(a - b)

    def max2(self, a: Expr, b: Expr) -> Expr:
        return a + self.relu(b - a)

    def min_tree(self, values: Sequence[Expr]) -> Expr:
        vals = list(values)
        if not vals:
            raise ValueError("min of nothing")
        while len(vals) > 1:
            nxt = [self.min2(vals[i], vals[i + 1]) for i in range(0, len(vals) - 1, 2)]
            if len(vals) % 2:
                nxt.append(vals[-1])
            vals = nxt
        return vals[0]

    def max_tree(self, values: Sequence[Expr]) -> Expr:
        vals = list(values)
        if not vals:
            raise ValueError("max of nothing")
        while len(vals) > 1:
            nxt = [self.max2(vals[i], vals[i + 1]) for i in range(0, len(vals) - 1, 2)]
            if len(vals) % 2:
                nxt.append(vals[-1])
            vals = nxt
        return vals[0]

    def apply_network(self, net: ReluNetwork, inputs: Sequence[Expr],
                      layer_scopes: bool = False) -> list[Expr]:
        """Instantiate ``net`` on the given input expressions.

        With ``layer_scopes`` each layer gets its own scope, so two copies of
        ``net`` share neurons only at equal depth; neurons the network
        deliberately recomputes at different depths stay separate.
        """
        if len(inputs) != net.input_dim:
            raise ValueError(f"network expects {net.input_dim} inputs, got {len(inputs)}")
        vals = list(inputs)
        last = net.depth - 1
        for k, layer in enumerate(net.layers):
            new = []
            for i in range(layer.n_out):
                e = lincomb(((w, vals[j]) for j, w in layer.row(i).items()), layer.bias[i])
                if k == last:
                    new.append(e)
                elif layer_scopes:
                    with self.scope(("layer", id(net), k)):
                        new.append(self.relu(e))
                else:
                    new.append(self.relu(e))
            vals = new
        return vals

    # -- evaluation of the DAG itself (reference, exact) ------------------
    def evaluate(self, outputs: Sequence[Expr], x: Sequence) -> list[Fraction]:
        vals: dict[int, Fraction] = {i: as_fraction(x[i]) for i in range(self.n_inputs)}

        def value(e: Expr) -> Fraction:
            s = e.const
            for k, v in e.terms.items():
                s += v * node(k)
            return s

        def node(k: int) -> Fraction:
            if k in vals:
                return vals[k]
            stack = [k]
            while stack:
                top = stack[-1]
                missing = [j for j in self._pre[top].terms if j not in vals]
                if missing:
                    stack.extend(missing)
                    continue
                stack.pop()
                if top not in vals:
                    vals[top] = max(value(self._pre[top]), _ZERO)
            return vals[k]

        return [value(e) for e in outputs]

    # -- lowering -----------------------------------------------------------
    def to_network(self, outputs: Sequence[Expr], meta: dict | None = None) -> ReluNetwork:
        n_in = self.n_inputs
        outputs = list(outputs)
        # reachable neurons
        seen: set[int] = set()
        stack = [k for e in outputs for k in e.terms]
        while stack:
            k = stack.pop()
            if k in seen or k < n_in:
                continue
            seen.add(k)
            stack.extend(self._pre[k].terms)
        neurons = sorted(seen)
        D = max((self._asap[k] for k in neurons), default=0)

        consumers_level: dict[int, list[int]] = {}
        level: dict[int, int] = {}
        for e in outputs:
            for k in e.terms:
                consumers_level.setdefault(k, []).append(D + 1)
        for k in reversed(neurons):
            lv = min(consumers_level[k]) - 1
            level[k] = lv
            for j in self._pre[k].terms:
                consumers_level.setdefault(j, []).append(lv)
        for i in range(n_in):
            level[i] = 0
        last_use = {k: max(v) for k, v in consumers_level.items()}

        # channels per hidden level
        chan: list[dict] = [dict() for _ in range(D + 1)]
        order: list[list] = [[] for _ in range(D + 1)]

        def add(L, key):
            chan[L][key] = len(order[L])
            order[L].append(key)

        for L in range(1, D + 1):
            for k in neurons:
                if level[k] == L:
                    add(L, ("n", k))
        for k, lu in last_use.items():
            if k < n_in:
                for L in range(1, lu):
                    if self._nonneg[k]:
                        add(L, ("d", k))
                    else:
                        add(L, ("p", k))
                        add(L, ("m", k))
            else:
                for L in range(level[k] + 1, lu):
                    add(L, ("d", k))

        def read(k: int, C: int) -> dict:
            """Columns (at layer C-1) carrying node k, with coefficients."""
            if k < n_in:
                if C == 1:
                    return {k: _ONE}
                if self._nonneg[k]:
                    return {chan[C - 1][("d", k)]: _ONE}
                return {chan[C - 1][("p", k)]: _ONE, chan[C - 1][("m", k)]: -_ONE}
            if level[k] == C - 1:
                return {chan[C - 1][("n", k)]: _ONE}
            return {chan[C - 1][("d", k)]: _ONE}

        def row_of(e: Expr, C: int) -> dict:
            r: dict[int, Fraction] = {}
            for k, v in e.terms.items():
                for col, c in read(k, C).items():
                    r[col] = r.get(col, _ZERO) + v * c
            return r

        layers = []
        for L in range(1, D + 1):
            rows, bias = [], []
            for kind, k in order[L]:
                if kind == "n":
                    rows.append(row_of(self._pre[k], L))
                    bias.append(self._pre[k].const)
                elif kind == "d":
                    rows.append(read(k, L))
                    bias.append(_ZERO)
                elif kind == "p":
                    rows.append({k: _ONE} if L == 1 else {chan[L - 1][("p", k)]: _ONE})
                    bias.append(_ZERO)
                else:
                    rows.append({k: -_ONE} if L == 1 else {chan[L - 1][("m", k)]: _ONE})
                    bias.append(_ZERO)
            n_prev = n_in if L == 1 else len(order[L - 1])
            layers.append(AffineLayer.from_rows(rows, bias, n_prev))
        n_prev = n_in if D == 0 else len(order[D])
        out_rows = [row_of(e, D + 1) for e in outputs]
        layers.append(AffineLayer.from_rows(out_rows, [e.const for e in outputs], n_prev))
        return ReluNetwork(n_in, layers, dict(meta or {}))
