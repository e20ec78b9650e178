"""Tape-based reverse-mode automatic differentiation over numpy arrays.

Only the handful of operations needed by dense tanh networks and their
physics residuals are supported. Broadcasting follows numpy; gradients are
summed back onto the broadcast operand shape.
"""

import numpy as np


class NumericError(ArithmeticError):
    """Raised when an objective evaluates to a non-finite value."""


def _unbroadcast(grad, shape):
    if grad.shape == shape:
        return grad
    ndim_extra = grad.ndim - len(shape)
    if ndim_extra > 0:
        grad = grad.sum(axis=tuple(range(ndim_extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


def _lift(x):
    return x if isinstance(x, Var) else Var(np.asarray(x, dtype=float))


class Var:
    """A node in the computation graph holding a float64 array value."""

    __slots__ = ("value", "grad", "_parents", "_backward")
    __array_ufunc__ = None  # make numpy defer to the reflected Var operators

    def __init__(self, value, parents=(), backward=None):
        self.value = np.asarray(value, dtype=float)
        self.grad = None
        self._parents = parents
        self._backward = backward

    @property
    def shape(self):
        return self.value.shape

    def __repr__(self):
        return f"Var(shape={self.value.shape})"

    # arithmetic -----------------------------------------------------------

    def __add__(self, other):
        other = _lift(other)
        a, b = self, other

        def backward(g):
            return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

        return Var(a.value + b.value, (a, b), backward)

    __radd__ = __add__

    def __sub__(self, other):
        other = _lift(other)
        a, b = self, other

        def backward(g):
            return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)

        return Var(a.value - b.value, (a, b), backward)

    def __rsub__(self, other):
        return _lift(other) - self

    def __mul__(self, other):
        other = _lift(other)
        a, b = self, other

        def backward(g):
            return _unbroadcast(g * b.value, a.shape), _unbroadcast(g * a.value, b.shape)

        return Var(a.value * b.value, (a, b), backward)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = _lift(other)
        a, b = self, other

        def backward(g):
            ga = g / b.value
            gb = -g * a.value / (b.value * b.value)
            return _unbroadcast(ga, a.shape), _unbroadcast(gb, b.shape)

        return Var(a.value / b.value, (a, b), backward)

    def __rtruediv__(self, other):
        return _lift(other) / self

    def __neg__(self):
        return Var(-self.value, (self,), lambda g: (-g,))

    def __pow__(self, p):
        if isinstance(p, Var):
            raise TypeError("only constant exponents are supported")
        a = self

        def backward(g):
            return (g * p * a.value ** (p - 1),)

        return Var(a.value**p, (a,), backward)

    def __matmul__(self, other):
        other = _lift(other)
        a, b = self, other
        if a.value.ndim != 2 or b.value.ndim != 2:
            raise ValueError("matmul supports 2-D operands only")

        def backward(g):
            return g @ b.value.T, a.value.T @ g

        return Var(a.value @ b.value, (a, b), backward)

    def __rmatmul__(self, other):
        return _lift(other) @ self

    # shape ----------------------------------------------------------------

    def __getitem__(self, idx):
        a = self
        parts = idx if isinstance(idx, tuple) else (idx,)
        fancy = any(isinstance(i, (list, np.ndarray)) for i in parts)

        def backward(g):
            out = np.zeros_like(a.value)
            if fancy:
                np.add.at(out, idx, g)
            else:
                out[idx] = g
            return (out,)

        return Var(a.value[idx], (a,), backward)

    def reshape(self, *shape):
        a = self

        def backward(g):
            return (g.reshape(a.shape),)

        return Var(a.value.reshape(*shape), (a,), backward)

    @property
    def T(self):
        return Var(self.value.T, (self,), lambda g: (g.T,))

    # reductions -----------------------------------------------------------

    def sum(self, axis=None):
        a = self

        def backward(g):
            if axis is not None:
                g = np.expand_dims(g, axis)
            return (np.broadcast_to(g, a.shape).copy(),)

        return Var(a.value.sum(axis=axis), (a,), backward)

    def mean(self, axis=None):
        n = self.value.size if axis is None else self.value.shape[axis]
        return self.sum(axis) * (1.0 / n)

    # elementwise ----------------------------------------------------------

    def tanh(self):
        out = np.tanh(self.value)
        return Var(out, (self,), lambda g: (g * (1.0 - out * out),))

    def sin(self):
        a = self
        return Var(np.sin(a.value), (a,), lambda g: (g * np.cos(a.value),))

    def cos(self):
        a = self
        return Var(np.cos(a.value), (a,), lambda g: (-g * np.sin(a.value),))

    def exp(self):
        out = np.exp(self.value)
        return Var(out, (self,), lambda g: (g * out,))

    def backward(self, seed=None):
        """Accumulate d(self)/d(node) into ``node.grad`` for every ancestor."""
        order = []
        seen = set()
        stack = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if id(p) not in seen:
                    stack.append((p, False))

        for node in order:
            node.grad = None
        self.grad = np.ones_like(self.value) if seed is None else np.asarray(seed, dtype=float)
        for node in reversed(order):
            if node._backward is None or node.grad is None:
                continue
            for parent, g in zip(node._parents, node._backward(node.grad)):
                parent.grad = g if parent.grad is None else parent.grad + g


def value(x):
    return x.value if isinstance(x, Var) else np.asarray(x, dtype=float)


def tanh(x):
    return x.tanh() if isinstance(x, Var) else np.tanh(x)


def sin(x):
    return x.sin() if isinstance(x, Var) else np.sin(x)


def cos(x):
    return x.cos() if isinstance(x, Var) else np.cos(x)


def concat(parts, axis=-1):
    """Concatenate Vars (or arrays) along ``axis``."""
    parts = [_lift(p) for p in parts]
    sizes = [p.value.shape[axis] for p in parts]
    splits = np.cumsum(sizes)[:-1]

    def backward(g):
        return tuple(np.split(g, splits, axis=axis))

    return Var(np.concatenate([p.value for p in parts], axis=axis), tuple(parts), backward)


def gradient(objective, params):
    """Evaluate ``objective`` at ``params`` and its gradient by reverse mode.

    ``objective`` receives a :class:`Var` wrapping a copy of ``params`` and
    must return a scalar :class:`Var`. Returns ``(loss, grad)``.
    """
    p = Var(np.array(params, dtype=float, copy=True))
    out = objective(p)
    if not isinstance(out, Var):
        raise TypeError("objective must return a Var")
    loss = float(out.value)
    if not np.isfinite(loss):
        raise NumericError(f"objective is not finite: {loss}")
    out.backward()
    grad = np.zeros_like(p.value) if p.grad is None else p.grad
    return loss, grad
