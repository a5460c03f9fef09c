"""Exact-arithmetic intermediate representation of ReLU networks.

A :class:`ReluNetwork` is an ordered list of :class:`AffineLayer` objects with
ReLU applied after every layer except the last.  ``depth`` is the number of
affine layers; ``width`` is the largest layer output dimension.

Weights are stored sparsely (CSR) as exact Fractions.  Exact evaluation comes
in two flavours that must agree:

* :func:`evaluate` -- one point, plain Fraction arithmetic (reference route);
* :func:`evaluate_batch` -- many points at once, using a per-layer integer
  scaling so that every intermediate value is an integer; integers below
  2**53 are pushed through float64 sparse products (which are then exact),
  larger ones fall back to Python integers.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .rational import (
    RationalParseError,
    as_fraction,
    format_rational,
    parse_rational,
)

__all__ = [
    "DimensionError",
    "NetworkParseError",
    "AffineLayer",
    "ReluNetwork",
    "NetworkStats",
    "evaluate",
    "evaluate_batch",
    "compose",
    "juxtapose",
    "affine_wrap",
    "sum_outputs",
    "min2_gadget",
    "max2_gadget",
    "pass_through",
    "identity_network",
    "serialize",
    "deserialize",
    "stats",
]

_INT_EXACT = 2 ** 62
_FLOAT_EXACT = 2.0**52
_DENSE_LIMIT = 4096


class DimensionError(ValueError):
    """Dimension mismatch between a network and its input or partner."""

    def __init__(self, what: str, expected: int, actual: int):
        super().__init__(f"{what}: expected dimension {expected}, got {actual}")
        self.expected = expected
        self.actual = actual


class NetworkParseError(ValueError):
    """Malformed network file; ``location`` names the offending field."""

    def __init__(self, location: str, message: str):
        super().__init__(f"{location}: {message}")
        self.location = location


@dataclass(frozen=True, eq=False)
class AffineLayer:
    """``x -> W x + b`` with ``W`` in CSR form over exact rationals."""

    n_out: int
    n_in: int
    indptr: np.ndarray
    indices: np.ndarray
    data: tuple
    bias: tuple
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if len(self.bias) != self.n_out:
            raise DimensionError("bias length", self.n_out, len(self.bias))
        if len(self.indptr) != self.n_out + 1 or len(self.indices) != len(self.data):
            raise ValueError("inconsistent CSR arrays")
        if len(self.indices) and (self.indices.min() < 0 or self.indices.max() >= self.n_in):
            raise ValueError("column index out of range")

    # -- construction -------------------------------------------------
    @classmethod
    def from_rows(cls, rows: Sequence[dict], bias: Sequence, n_in: int) -> "AffineLayer":
        """Build from one ``{column: coefficient}`` mapping per output row."""
        indptr = [0]
        indices: list[int] = []
        data: list[Fraction] = []
        for row in rows:
            for j in sorted(row):
                w = as_fraction(row[j])
                if w != 0:
                    indices.append(j)
                    data.append(w)
            indptr.append(len(indices))
        return cls(
            n_out=len(rows),
            n_in=n_in,
            indptr=np.asarray(indptr, dtype=np.int64),
            indices=np.asarray(indices, dtype=np.int64),
            data=tuple(data),
            bias=tuple(as_fraction(b) for b in bias),
        )

    @classmethod
    def from_dense(cls, weights, bias=None) -> "AffineLayer":
        weights = [[as_fraction(w) for w in row] for row in weights]
        n_out = len(weights)
        n_in = len(weights[0]) if n_out else 0
        if any(len(r) != n_in for r in weights):
            raise ValueError("ragged weight matrix")
        if bias is None:
            bias = [Fraction(0)] * n_out
        rows = [{j: w for j, w in enumerate(r) if w != 0} for r in weights]
        return cls.from_rows(rows, bias, n_in)

    @classmethod
    def identity(cls, dim: int) -> "AffineLayer":
        return cls.from_rows([{i: 1} for i in range(dim)], [0] * dim, dim)

    # -- access -------------------------------------------------------
    def row(self, i: int) -> dict:
        lo, hi = self.indptr[i], self.indptr[i + 1]
        return {int(j): self.data[k] for k, j in zip(range(lo, hi), self.indices[lo:hi])}

    def rows(self) -> list[dict]:
        return [self.row(i) for i in range(self.n_out)]

    def dense(self) -> list[list[Fraction]]:
        out = [[Fraction(0)] * self.n_in for _ in range(self.n_out)]
        for i in range(self.n_out):
            for j, w in self.row(i).items():
                out[i][j] = w
        return out

    @property
    def nnz(self) -> int:
        return len(self.data)

    def apply(self, x: Sequence[Fraction]) -> list[Fraction]:
        out = list(self.bias)
        ip, ind, dat = self.indptr, self.indices, self.data
        for i in range(self.n_out):
            s = out[i]
            for k in range(ip[i], ip[i + 1]):
                s += dat[k] * x[ind[k]]
            out[i] = s
        return out

    def matmul(self, other: "AffineLayer") -> "AffineLayer":
        """Return ``self o other`` as one affine layer."""
        if other.n_out != self.n_in:
            raise DimensionError("layer fusion", self.n_in, other.n_out)
        orows = other.rows()
        rows = []
        bias = []
        for i in range(self.n_out):
            acc: dict[int, Fraction] = {}
            b = self.bias[i]
            for j, w in self.row(i).items():
                b += w * other.bias[j]
                for k, v in orows[j].items():
                    acc[k] = acc.get(k, 0) + w * v
            rows.append(acc)
            bias.append(b)
        return AffineLayer.from_rows(rows, bias, other.n_in)

    # -- numeric forms (cached) ----------------------------------------
    def float_form(self):
        f = self._cache.get("float")
        if f is None:
            m = sp.csr_matrix(
                (np.array([float(w) for w in self.data], dtype=np.float64), self.indices, self.indptr),
                shape=(self.n_out, self.n_in),
            )
            f = (m, np.array([float(b) for b in self.bias], dtype=np.float64))
            self._cache["float"] = f
        return f

    def int_form(self):
        """Integer numerators of ``W`` over a common denominator.

        Returns ``(W_den, float_csr, W_num_rows, row_abs_max, b_den, b_num, int_csr)``;
        the float64 and int64 CSR copies are ``None`` when the numerators do
        not fit exactly.
        """
        f = self._cache.get("int")
        if f is None:
            wden = 1
            for w in self.data:
                wden = math.lcm(wden, w.denominator)
            nums = [w.numerator * (wden // w.denominator) for w in self.data]
            bden = 1
            for b in self.bias:
                bden = math.lcm(bden, b.denominator)
            bnum = [b.numerator * (bden // b.denominator) for b in self.bias]
            row_abs = 0
            for i in range(self.n_out):
                s = sum(abs(nums[k]) for k in range(self.indptr[i], self.indptr[i + 1]))
                row_abs = max(row_abs, s)
            csr = None
            if row_abs < _FLOAT_EXACT:
                csr = sp.csr_matrix(
                    (np.array(nums, dtype=np.float64), self.indices, self.indptr),
                    shape=(self.n_out, self.n_in),
                )
            icsr = None
            if row_abs < _INT_EXACT:
                icsr = sp.csr_matrix(
                    (np.array(nums, dtype=np.int64), self.indices, self.indptr),
                    shape=(self.n_out, self.n_in),
                )
            f = (wden, csr, nums, row_abs, bden, bnum, icsr)
            self._cache["int"] = f
        return f


@dataclass(frozen=True)
class NetworkStats:
    width: int
    depth: int
    max_abs_weight: Fraction
    parameter_count: int

    @property
    def hidden_layers(self) -> int:
        return self.depth - 1


@dataclass(frozen=True, eq=False)
class ReluNetwork:
    input_dim: int
    layers: tuple
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.layers:
            raise ValueError("a network needs at least one layer")
        object.__setattr__(self, "layers", tuple(self.layers))
        d = self.input_dim
        for k, layer in enumerate(self.layers):
            if layer.n_in != d:
                raise DimensionError(f"layer {k} input", d, layer.n_in)
            d = layer.n_out

    @property
    def output_dim(self) -> int:
        return self.layers[-1].n_out

    @property
    def depth(self) -> int:
        return len(self.layers)

    @property
    def width(self) -> int:
        return max(layer.n_out for layer in self.layers)

    def __call__(self, x, mode: str = "exact"):
        return evaluate(self, x, mode)

    def with_meta(self, **meta) -> "ReluNetwork":
        m = dict(self.meta)
        m.update(meta)
        return ReluNetwork(self.input_dim, self.layers, m)


# ---------------------------------------------------------------------------
# evaluation


def evaluate(net: ReluNetwork, x, mode: str = "exact"):
    """Evaluate ``net`` at one point, exactly or in float64."""
    if len(x) != net.input_dim:
        raise DimensionError("network input", net.input_dim, len(x))
    last = len(net.layers) - 1
    if mode == "exact":
        v = [as_fraction(t) for t in x]
        for k, layer in enumerate(net.layers):
            v = layer.apply(v)
            if k != last:
                v = [t if t > 0 else Fraction(0) for t in v]
        return v
    if mode == "float64":
        v = np.asarray([float(t) for t in x], dtype=np.float64)
        for k, layer in enumerate(net.layers):
            m, b = layer.float_form()
            v = m @ v + b
            if k != last:
                v = np.maximum(v, 0.0)
        return v
    raise ValueError(f"unknown evaluation mode {mode!r}")


def _to_object(a) -> np.ndarray:
    if a.dtype == object:
        return a
    return np.vectorize(int, otypes=[object])(a) if a.size else a.astype(object)


def _gcd_reduce(a, start: int) -> int:
    g = start
    if a.dtype == object:
        for v in a.flat:
            g = math.gcd(g, v)
            if g == 1:
                break
        return g
    arr = a.astype(np.int64)
    if arr.size:
        g = math.gcd(g, int(np.gcd.reduce(arr, axis=None)))
    return g


def _scaled_bias(layer: AffineLayer, bnum, bmul: int):
    key = ("bias", bmul)
    hit = layer._cache.get(key)
    if hit is None:
        bias = [b * bmul for b in bnum]
        hit = (bias, max((abs(b) for b in bias), default=0))
        layer._cache[key] = hit
    return hit


def _bias_array(layer: AffineLayer, bias, bmul: int, dtype):
    key = ("bias", bmul, np.dtype(dtype).name)
    arr = layer._cache.get(key)
    if arr is None:
        arr = np.asarray(bias, dtype=dtype)
        layer._cache[key] = arr
    return arr


def _affine_int(layer: AffineLayer, X, S: int, xmax: float | None = None):
    """One layer in scaled-integer form: returns (Y, S', bound on |Y| or None).

    ``xmax`` is a known bound on |X|; the data is scanned only when the
    propagated bound is too loose for exact float arithmetic.
    """
    wden, csr, nums, row_abs, bden, bnum, icsr = layer.int_form()
    S_new = math.lcm(S * wden, bden)
    k = S_new // (S * wden)
    bmul = S_new // bden
    bias, bias_max = _scaled_bias(layer, bnum, bmul)
    if X.dtype != object:
        bound = None
        if xmax is not None:
            bound = float(k) * float(row_abs) * xmax + float(bias_max)
        if bound is None or bound >= _FLOAT_EXACT:
            xmax = max(float(X.max()), -float(X.min())) if X.size else 0.0
            bound = float(k) * float(row_abs) * xmax + float(bias_max)
        if csr is not None and bound < _FLOAT_EXACT:
            Y = csr @ (X if X.dtype == np.float64 else X.astype(np.float64))
            if k != 1:
                Y *= float(k)
            if bias_max:
                Y += _bias_array(layer, bias, bmul, np.float64)[:, None]
            return Y, S_new, bound
        if icsr is not None and bound < _INT_EXACT:
            Y = icsr @ (X if X.dtype == np.int64 else X.astype(np.int64))
            if k != 1:
                Y *= k
            if bias_max:
                Y += _bias_array(layer, bias, bmul, np.int64)[:, None]
            return Y, S_new, bound
        X = _to_object(X)
    m = X.shape[1]
    Y = np.empty((layer.n_out, m), dtype=object)
    ip, ind = layer.indptr, layer.indices
    for i in range(layer.n_out):
        acc = np.full(m, bias[i], dtype=object)
        for t in range(ip[i], ip[i + 1]):
            acc = acc + (nums[t] * k) * X[ind[t]]
        Y[i] = acc
    return Y, S_new, None


def _normalize(Y, S: int, threshold: int = 1 << 20):
    if S > threshold:
        g = _gcd_reduce(Y, S)
        if g > 1:
            if Y.dtype == np.float64:
                Y = Y / float(g)
            else:
                Y = Y // g
            S //= g
    if Y.dtype == object and Y.size:
        mx = max(abs(v) for v in Y.flat)
        if mx < _FLOAT_EXACT:
            Y = Y.astype(np.float64)
        elif mx < _INT_EXACT:
            Y = Y.astype(np.int64)
    return Y, S


def evaluate_batch(net: ReluNetwork, points, chunk: int = 256) -> list[list[Fraction]]:
    """Exact evaluation at many points (same results as :func:`evaluate`)."""
    pts = [[as_fraction(t) for t in p] for p in points]
    for p in pts:
        if len(p) != net.input_dim:
            raise DimensionError("network input", net.input_dim, len(p))
    out: list = [None] * len(pts)
    last = len(net.layers) - 1
    for idx, S in _denominator_chunks(pts, chunk):
        block = [pts[i] for i in idx]
        ints = [[t.numerator * (S // t.denominator) for t in p] for p in block]
        X = np.array(ints, dtype=object).T.reshape(net.input_dim, len(block))
        X, S = _normalize(X, S, threshold=1 << 62)
        bound = None
        for k, layer in enumerate(net.layers):
            X, S, bound = _affine_int(layer, X, S, bound)
            if k != last:
                if X.dtype == object:
                    X = np.where(X > 0, X, 0)
                else:
                    np.maximum(X, 0, out=X)
            X, S2 = _normalize(X, S, threshold=1 << 36)
            if S2 != S:
                bound = bound * S2 / S if bound is not None else None
                S = S2
            if X.dtype == object:
                bound = None
        for col, i in enumerate(idx):
            out[i] = [Fraction(int(v), S) for v in X[:, col]]
    return out


def _denominator_chunks(pts, chunk: int, limit: int = 1 << 32):
    """Group points (sorted by common denominator) so each group's common
    denominator stays at most ``limit``; unrelated denominators get their
    own groups instead of one huge common scale."""
    dens = []
    for p in pts:
        D = 1
        for t in p:
            D = math.lcm(D, t.denominator)
        dens.append(D)
    order = sorted(range(len(pts)), key=lambda i: dens[i])
    cur, S = [], 1
    for i in order:
        S2 = math.lcm(S, dens[i])
        if cur and (len(cur) >= chunk or S2 > limit):
            yield cur, S
            cur, S2 = [], dens[i]
        cur.append(i)
        S = S2
    if cur:
        yield cur, S


def evaluate_batch_float(net: ReluNetwork, points) -> np.ndarray:
    """float64 evaluation at many points; returns shape (n_points, output_dim)."""
    X = np.asarray([[float(t) for t in p] for p in points], dtype=np.float64).T
    last = len(net.layers) - 1
    for k, layer in enumerate(net.layers):
        m, b = layer.float_form()
        X = m @ X + b[:, None]
        if k != last:
            X = np.maximum(X, 0.0)
    return X.T


# ---------------------------------------------------------------------------
# structural operations


def compose(first: ReluNetwork, second: ReluNetwork) -> ReluNetwork:
    """``second o first``; the seam layers are fused into one affine layer."""
    if first.output_dim != second.input_dim:
        raise DimensionError("compose", second.input_dim, first.output_dim)
    seam = second.layers[0].matmul(first.layers[-1])
    layers = first.layers[:-1] + (seam,) + second.layers[1:]
    return ReluNetwork(first.input_dim, layers)


def pass_through(dim: int, nonneg: bool = False) -> ReluNetwork:
    """Identity carried across one hidden layer.

    With ``nonneg`` a single ReLU channel per coordinate is used, which is the
    identity only on nonnegative inputs.
    """
    if nonneg:
        hidden = AffineLayer.identity(dim)
        out = AffineLayer.identity(dim)
    else:
        hidden = AffineLayer.from_rows(
            [{i: 1} for i in range(dim)] + [{i: -1} for i in range(dim)], [0] * (2 * dim), dim
        )
        out = AffineLayer.from_rows([{i: 1, dim + i: -1} for i in range(dim)], [0] * dim, 2 * dim)
    return ReluNetwork(dim, (hidden, out))


def identity_network(dim: int) -> ReluNetwork:
    return ReluNetwork(dim, (AffineLayer.identity(dim),))


def _pad_depth(net: ReluNetwork, depth: int) -> ReluNetwork:
    while net.depth < depth:
        net = compose(net, pass_through(net.output_dim))
    return net


def _block_diag(layers: Sequence[AffineLayer], shared_input: bool) -> AffineLayer:
    rows: list[dict] = []
    bias: list[Fraction] = []
    col_off = 0
    for layer in layers:
        for i in range(layer.n_out):
            r = layer.row(i)
            rows.append(r if shared_input else {j + col_off: w for j, w in r.items()})
            bias.append(layer.bias[i])
        col_off += layer.n_in
    n_in = layers[0].n_in if shared_input else col_off
    return AffineLayer.from_rows(rows, bias, n_in)


def juxtapose(nets: Sequence[ReluNetwork]) -> ReluNetwork:
    """Run networks side by side on a shared input; outputs are concatenated."""
    nets = list(nets)
    if not nets:
        raise ValueError("juxtapose needs at least one network")
    d = nets[0].input_dim
    for net in nets:
        if net.input_dim != d:
            raise DimensionError("juxtapose input", d, net.input_dim)
    depth = max(net.depth for net in nets)
    nets = [_pad_depth(net, depth) for net in nets]
    layers = [_block_diag([n.layers[0] for n in nets], shared_input=True)]
    for k in range(1, depth):
        layers.append(_block_diag([n.layers[k] for n in nets], shared_input=False))
    return ReluNetwork(d, layers)


def affine_wrap(net: ReluNetwork, pre: AffineLayer | None = None,
                post: AffineLayer | None = None) -> ReluNetwork:
    """``post o net o pre`` with both maps fused (depth unchanged)."""
    layers = list(net.layers)
    input_dim = net.input_dim
    if pre is not None:
        if pre.n_out != net.input_dim:
            raise DimensionError("affine_wrap pre", net.input_dim, pre.n_out)
        layers[0] = layers[0].matmul(pre)
        input_dim = pre.n_in
    if post is not None:
        if post.n_in != net.output_dim:
            raise DimensionError("affine_wrap post", post.n_in, net.output_dim)
        layers[-1] = post.matmul(layers[-1])
    return ReluNetwork(input_dim, layers)


def sum_outputs(net: ReluNetwork, coefficients: Sequence) -> ReluNetwork:
    """Append a weighted sum of the outputs (fused into the last layer)."""
    coefficients = [as_fraction(c) for c in coefficients]
    if len(coefficients) != net.output_dim:
        raise DimensionError("sum_outputs", net.output_dim, len(coefficients))
    post = AffineLayer.from_rows([dict(enumerate(coefficients))], [0], net.output_dim)
    return affine_wrap(net, post=post)


def min2_gadget() -> ReluNetwork:
    """min(a, b) = a - ReLU(a - b), with ``a`` carried as ReLU(a) - ReLU(-a)."""
    hidden = AffineLayer.from_dense([[1, 0], [-1, 0], [1, -1]])
    out = AffineLayer.from_dense([[1, -1, -1]])
    return ReluNetwork(2, (hidden, out))


def max2_gadget() -> ReluNetwork:
    """max(a, b) = a + ReLU(b - a)."""
    hidden = AffineLayer.from_dense([[1, 0], [-1, 0], [-1, 1]])
    out = AffineLayer.from_dense([[1, -1, 1]])
    return ReluNetwork(2, (hidden, out))


def stats(net: ReluNetwork) -> NetworkStats:
    """Width, depth, largest |weight or bias| and parameter count.

    ``parameter_count`` counts stored (nonzero) weights plus all biases.
    """
    mx = Fraction(0)
    count = 0
    for layer in net.layers:
        for w in layer.data:
            if abs(w) > mx:
                mx = abs(w)
        for b in layer.bias:
            if abs(b) > mx:
                mx = abs(b)
        count += layer.nnz + layer.n_out
    return NetworkStats(width=net.width, depth=net.depth, max_abs_weight=mx, parameter_count=count)


# ---------------------------------------------------------------------------
# serialization


def _layer_to_json(layer: AffineLayer) -> dict:
    if layer.n_out * layer.n_in <= _DENSE_LIMIT:
        weights = [[format_rational(w) for w in row] for row in layer.dense()]
    else:
        entries = []
        for i in range(layer.n_out):
            for j, w in layer.row(i).items():
                entries.append([i, j, format_rational(w)])
        weights = {"rows": layer.n_out, "cols": layer.n_in, "entries": entries}
    return {"weights": weights, "bias": [format_rational(b) for b in layer.bias]}


def serialize(net: ReluNetwork) -> bytes:
    """UTF-8 JSON text; fields ``input_dim``, ``layers``, ``meta`` in that order."""
    doc = {
        "input_dim": net.input_dim,
        "layers": [_layer_to_json(layer) for layer in net.layers],
        "meta": net.meta,
    }
    return (json.dumps(doc, indent=1, ensure_ascii=False) + "\n").encode("utf-8")


def _rat(value, where: str) -> Fraction:
    if isinstance(value, float):
        raise NetworkParseError(where, "floating-point literals are not permitted")
    try:
        return parse_rational(value, where)
    except RationalParseError as exc:
        raise NetworkParseError(where, str(exc)) from None


def deserialize(blob) -> ReluNetwork:
    if isinstance(blob, (bytes, bytearray)):
        try:
            blob = blob.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise NetworkParseError(f"byte {exc.start}", "invalid UTF-8") from None
    try:
        doc = json.loads(blob)
    except json.JSONDecodeError as exc:
        raise NetworkParseError(f"line {exc.lineno} column {exc.colno}", exc.msg) from None
    if not isinstance(doc, dict):
        raise NetworkParseError("$", "top level must be an object")
    for key in ("input_dim", "layers"):
        if key not in doc:
            raise NetworkParseError(f"$.{key}", "missing field")
    input_dim = doc["input_dim"]
    if not isinstance(input_dim, int) or isinstance(input_dim, bool) or input_dim < 1:
        raise NetworkParseError("$.input_dim", "must be a positive integer")
    if not isinstance(doc["layers"], list) or not doc["layers"]:
        raise NetworkParseError("$.layers", "must be a nonempty array")
    layers = []
    n_in = input_dim
    for k, ld in enumerate(doc["layers"]):
        where = f"$.layers[{k}]"
        if not isinstance(ld, dict) or "weights" not in ld or "bias" not in ld:
            raise NetworkParseError(where, "needs 'weights' and 'bias'")
        if not isinstance(ld["bias"], list):
            raise NetworkParseError(where + ".bias", "must be an array")
        bias = [_rat(b, f"{where}.bias[{i}]") for i, b in enumerate(ld["bias"])]
        w = ld["weights"]
        if isinstance(w, list):
            if len(w) != len(bias):
                raise NetworkParseError(where + ".weights", f"expected {len(bias)} rows, got {len(w)}")
            rows = []
            for i, r in enumerate(w):
                if not isinstance(r, list) or len(r) != n_in:
                    raise NetworkParseError(f"{where}.weights[{i}]", f"expected {n_in} entries")
                rows.append({j: _rat(v, f"{where}.weights[{i}][{j}]") for j, v in enumerate(r)})
        elif isinstance(w, dict):
            if w.get("rows") != len(bias) or w.get("cols") != n_in:
                raise NetworkParseError(where + ".weights", "sparse shape does not chain")
            rows = [dict() for _ in bias]
            for t, e in enumerate(w.get("entries", [])):
                if (not isinstance(e, list) or len(e) != 3 or not isinstance(e[0], int)
                        or not isinstance(e[1], int) or not 0 <= e[0] < len(bias)
                        or not 0 <= e[1] < n_in):
                    raise NetworkParseError(f"{where}.weights.entries[{t}]", "bad sparse entry")
                rows[e[0]][e[1]] = _rat(e[2], f"{where}.weights.entries[{t}][2]")
        else:
            raise NetworkParseError(where + ".weights", "must be an array or sparse object")
        layers.append(AffineLayer.from_rows(rows, bias, n_in))
        n_in = len(bias)
    meta = doc.get("meta", {})
    return ReluNetwork(input_dim, layers, meta if isinstance(meta, dict) else {"value": meta})
