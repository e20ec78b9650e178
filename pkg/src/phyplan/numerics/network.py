"""Dense tanh networks: construction, evaluation and input derivatives."""

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from phyplan.numerics import autodiff as ad

ACTIVATIONS = ("tanh", "identity")


class ShapeError(ValueError):
    """Invalid layer sizes or mismatched input dimension."""


class GradientResult(NamedTuple):
    value: np.ndarray
    input_jacobian: np.ndarray  # (n_in, n_out)


@dataclass(frozen=True)
class DenseNetwork:
    """Fully connected network; ``weights[k]`` has shape (sizes[k+1], sizes[k])."""

    layer_sizes: tuple
    weights: tuple
    biases: tuple
    hidden_activation: str = "tanh"
    output_activation: str = "identity"
    _flat: np.ndarray = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.layer_sizes)
        _check_sizes(sizes)
        object.__setattr__(self, "layer_sizes", sizes)
        if len(self.weights) != len(sizes) - 1 or len(self.biases) != len(sizes) - 1:
            raise ShapeError("need one weight matrix and bias per layer transition")
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            if np.shape(w) != (sizes[k + 1], sizes[k]) or np.shape(b) != (sizes[k + 1],):
                raise ShapeError(f"layer {k} parameters do not map {sizes[k]} -> {sizes[k + 1]}")
        if self.hidden_activation != "tanh" or self.output_activation != "identity":
            raise ValueError("only tanh hidden and identity output activations are supported")
        ws = tuple(np.array(w, dtype=float) for w in self.weights)
        bs = tuple(np.array(b, dtype=float) for b in self.biases)
        for a in ws + bs:
            a.setflags(write=False)
        object.__setattr__(self, "weights", ws)
        object.__setattr__(self, "biases", bs)

    @property
    def n_inputs(self):
        return self.layer_sizes[0]

    @property
    def n_outputs(self):
        return self.layer_sizes[-1]

    @property
    def n_params(self):
        return n_params(self.layer_sizes)

    def flat(self):
        """Parameters in layer-major order: W_k row-major, then b_k."""
        if self._flat is None:
            parts = []
            for w, b in zip(self.weights, self.biases):
                parts.append(w.ravel())
                parts.append(b)
            object.__setattr__(self, "_flat", np.concatenate(parts))
        return self._flat.copy()

    @classmethod
    def from_flat(cls, layer_sizes, params):
        sizes = tuple(int(s) for s in layer_sizes)
        _check_sizes(sizes)
        params = np.asarray(params, dtype=float)
        if params.shape != (n_params(sizes),):
            raise ShapeError(f"expected {n_params(sizes)} parameters, got {params.shape}")
        weights, biases = [], []
        for (w_sl, w_shape), b_sl in _layout(sizes):
            weights.append(params[w_sl].reshape(w_shape))
            biases.append(params[b_sl])
        return cls(sizes, tuple(weights), tuple(biases))


def _check_sizes(sizes):
    if len(sizes) < 2 or any(s < 1 for s in sizes):
        raise ShapeError(f"layer sizes must be >= 2 positive integers, got {sizes}")


def n_params(sizes):
    return sum(sizes[k + 1] * sizes[k] + sizes[k + 1] for k in range(len(sizes) - 1))


def _layout(sizes):
    off = 0
    out = []
    for k in range(len(sizes) - 1):
        n_in, n_out = sizes[k], sizes[k + 1]
        w_sl = slice(off, off + n_out * n_in)
        off += n_out * n_in
        b_sl = slice(off, off + n_out)
        off += n_out
        out.append(((w_sl, (n_out, n_in)), b_sl))
    return out


def table1_sizes(n_in, n_out, hidden=8, width=40):
    """Default skill-network shape: eight hidden layers of forty units."""
    return (n_in,) + (width,) * hidden + (n_out,)


def xavier_init(layer_sizes, seed):
    """Glorot-normal weights (variance 2/(fan_in+fan_out)) and zero biases."""
    sizes = tuple(int(s) for s in layer_sizes)
    _check_sizes(sizes)
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for k in range(len(sizes) - 1):
        fan_in, fan_out = sizes[k], sizes[k + 1]
        std = np.sqrt(2.0 / (fan_in + fan_out))
        weights.append(rng.normal(0.0, std, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return DenseNetwork(sizes, tuple(weights), tuple(biases))


def _as_batch(net, x):
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    xb = x[None, :] if single else x
    if xb.ndim != 2 or xb.shape[1] != net.n_inputs:
        raise ShapeError(f"input has shape {x.shape}, network expects {net.n_inputs} features")
    return xb, single


def forward(net, x):
    """Evaluate the network at one input vector or a batch of rows."""
    h, single = _as_batch(net, x)
    last = len(net.weights) - 1
    for k, (w, b) in enumerate(zip(net.weights, net.biases)):
        h = h @ w.T + b
        if k < last:
            h = np.tanh(h)
    return h[0] if single else h


def forward_with_input_jacobian(net, x):
    """Value and exact d(output_j)/d(input_i) by forward-mode propagation."""
    xv = np.asarray(x, dtype=float)
    if xv.ndim != 1:
        raise ShapeError("forward_with_input_jacobian takes a single input vector")
    h, _ = _as_batch(net, xv)
    h = h[0]
    jac = np.eye(net.n_inputs)  # rows: input directions
    last = len(net.weights) - 1
    for k, (w, b) in enumerate(zip(net.weights, net.biases)):
        h = w @ h + b
        jac = jac @ w.T
        if k < last:
            h = np.tanh(h)
            jac = jac * (1.0 - h * h)
    return GradientResult(h, jac)


def forward_tangent(params, sizes, x, direction):
    """Differentiable forward pass with one directional input derivative.

    ``params`` is a flat parameter :class:`~phyplan.numerics.autodiff.Var`
    (or array), ``x`` a batch (N, n_in) and ``direction`` a vector of length
    n_in. Returns ``(y, dy)`` with ``dy = J(x) @ direction`` per row. With
    ``direction=None`` only ``y`` is propagated and ``dy`` is None.
    """
    h = np.asarray(x, dtype=float)
    dh = None
    if direction is not None:
        dh = np.broadcast_to(np.asarray(direction, dtype=float), h.shape)
    layout = _layout(tuple(sizes))
    last = len(layout) - 1
    for k, ((w_sl, w_shape), b_sl) in enumerate(layout):
        wt = params[w_sl].reshape(*w_shape).T
        b = params[b_sl]
        z = h @ wt + b
        dz = None if dh is None else dh @ wt
        if k < last:
            h = ad.tanh(z)
            if dz is not None:
                dh = (1.0 - h * h) * dz
        else:
            h, dh = z, dz
    return h, dh


def fused_tangent_forward(params, sizes, x, direction, n_tangent):
    """Single-node version of :func:`forward_tangent` for training.

    Rows of ``x`` are all evaluated; the last ``n_tangent`` rows additionally
    get the directional derivative along ``direction``. Returns one
    :class:`~phyplan.numerics.autodiff.Var` of shape (N + n_tangent, n_out):
    the N values followed by the n_tangent derivatives. The backward pass is
    hand-derived, which avoids one tape node per elementwise operation.
    """
    flat = ad.value(params)
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    nt = int(n_tangent)
    first_t = n - nt
    layout = _layout(tuple(sizes))
    last = len(layout) - 1

    a = np.empty((n + nt, x.shape[1]))
    a[:n] = x
    a[n:] = np.asarray(direction, dtype=float) if nt else 0.0
    saved = []
    for k, ((w_sl, w_shape), b_sl) in enumerate(layout):
        w = flat[w_sl].reshape(w_shape)
        z = a @ w.T
        z[:n] += flat[b_sl]
        if k < last:
            nxt = np.empty_like(z)
            s = np.tanh(z[:n], out=nxt[:n])
            sp = np.multiply(s, s)
            np.subtract(1.0, sp, out=sp)
            zt = z[n:]
            np.multiply(sp[first_t:], zt, out=nxt[n:])
            saved.append((a, s, sp, zt))
            a = nxt
        else:
            saved.append((a, None, None, None))
            a = z

    def backward(g):
        grad = np.zeros_like(flat)
        gz = np.asarray(g, dtype=float)
        for k in range(last, -1, -1):
            (w_sl, w_shape), b_sl = layout[k]
            a_in = saved[k][0]
            grad[w_sl] = (gz.T @ a_in).ravel()
            grad[b_sl] = gz[:n].sum(axis=0)
            if k == 0:
                break
            ga = gz @ flat[w_sl].reshape(w_shape)
            _, s, sp, zt = saved[k - 1]
            gs = ga[:n]
            gt = ga[n:]
            if nt:
                corr = gt * zt
                corr *= s[first_t:]
                corr *= 2.0
                gs[first_t:] -= corr
                gt *= sp[first_t:]
            gs *= sp
            gz = ga
        return (grad,)

    parents = (params,) if isinstance(params, ad.Var) else ()
    return ad.Var(a, parents, backward if parents else None)
