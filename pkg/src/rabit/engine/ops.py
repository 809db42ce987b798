"""
Differentiable primitives.

Every op takes Tensors (plain arrays and scalars are lifted to constants), computes its
output with numpy and registers a closure returning one gradient per input.
Broadcasting is limited to equal shapes and a 1-channel map against a C-channel map.
"""
from functools import lru_cache
from typing import Any, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import special

from rabit.engine import profiler
from rabit.engine.tensor import Tensor
from rabit.errors import ShapeError

Axis = Optional[Union[int, Tuple[int, ...]]]

_SQRT_2 = np.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)


def as_tensor(value: Any, like: Optional[Tensor] = None) -> Tensor:
    if isinstance(value, Tensor):
        return value
    dtype = like.dtype if like is not None else None
    return Tensor(np.asarray(value, dtype=dtype))


def _pair(a: Any, b: Any) -> Tuple[Tensor, Tensor]:
    if isinstance(a, Tensor):
        return a, as_tensor(b, like=a)
    b = as_tensor(b)
    return as_tensor(a, like=b), b


def _check_broadcast(a: Tensor, b: Tensor, op: str) -> None:
    if a.shape == b.shape:
        return

    if (
        a.ndim == b.ndim == 4
        and a.shape[0] == b.shape[0]
        and a.shape[2:] == b.shape[2:]
        and 1 in (a.shape[1], b.shape[1])
    ):
        return

    msg = "%s: incompatible shapes %s and %s (only a 1-channel map broadcasts over channels)."
    raise ShapeError(msg % (op, a.shape, b.shape))


def _reduce_to(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    if grad.shape == shape:
        return grad
    axes = tuple(axis for axis, (g, s) in enumerate(zip(grad.shape, shape)) if s == 1 and g != 1)
    return grad.sum(axis=axes, keepdims=True)


# arithmetic


def add(a: Any, b: Any) -> Tensor:
    a, b = _pair(a, b)
    _check_broadcast(a, b, "add")

    def _backward(g: np.ndarray):
        return _reduce_to(g, a.shape), _reduce_to(g, b.shape)

    return Tensor.from_op(a.data + b.data, (a, b), "add", _backward)


def sub(a: Any, b: Any) -> Tensor:
    a, b = _pair(a, b)
    _check_broadcast(a, b, "sub")

    def _backward(g: np.ndarray):
        return _reduce_to(g, a.shape), -_reduce_to(g, b.shape)

    return Tensor.from_op(a.data - b.data, (a, b), "sub", _backward)


def mul(a: Any, b: Any) -> Tensor:
    a, b = _pair(a, b)
    _check_broadcast(a, b, "mul")

    def _backward(g: np.ndarray):
        return _reduce_to(g * b.data, a.shape), _reduce_to(g * a.data, b.shape)

    return Tensor.from_op(a.data * b.data, (a, b), "mul", _backward)


def div(a: Any, b: Any) -> Tensor:
    a, b = _pair(a, b)
    _check_broadcast(a, b, "div")

    def _backward(g: np.ndarray):
        return _reduce_to(g / b.data, a.shape), _reduce_to(-g * a.data / (b.data * b.data), b.shape)

    return Tensor.from_op(a.data / b.data, (a, b), "div", _backward)


def neg(x: Tensor) -> Tensor:
    return Tensor.from_op(-x.data, (x,), "neg", lambda g: (-g,))


def scalar_mul(x: Tensor, c: float) -> Tensor:
    return Tensor.from_op(x.data * x.dtype.type(c), (x,), "scalar_mul", lambda g: (g * c,))


def add_scalar(x: Tensor, c: float) -> Tensor:
    return Tensor.from_op(x.data + x.dtype.type(c), (x,), "add_scalar", lambda g: (g,))


def sub_from_scalar(c: float, x: Tensor) -> Tensor:
    """c - x; with c = 1 this is the reverse of an attention map."""
    return Tensor.from_op(x.dtype.type(c) - x.data, (x,), "sub_from_scalar", lambda g: (-g,))


def pow_scalar(x: Tensor, exponent: float) -> Tensor:
    out = np.power(x.data, exponent)

    def _backward(g: np.ndarray):
        if exponent == 0:
            return (np.zeros_like(g),)
        base = np.where(x.data == 0, 1, x.data)
        local = exponent * np.power(base, exponent - 1)
        if exponent != 1:
            local = np.where(x.data == 0, 0.0 if exponent > 1 else np.inf, local)
        return (g * local,)

    return Tensor.from_op(out, (x,), "pow", _backward)


def log(x: Tensor) -> Tensor:
    return Tensor.from_op(np.log(x.data), (x,), "log", lambda g: (g / x.data,))


def exp(x: Tensor) -> Tensor:
    out = np.exp(x.data)
    return Tensor.from_op(out, (x,), "exp", lambda g: (g * out,))


# activations


def relu(x: Tensor) -> Tensor:
    mask = x.data > 0
    return Tensor.from_op(np.where(mask, x.data, 0).astype(x.dtype), (x,), "relu", lambda g: (g * mask,))


def sigmoid(x: Tensor) -> Tensor:
    out = special.expit(x.data)
    return Tensor.from_op(out, (x,), "sigmoid", lambda g: (g * out * (1 - out),))


def gelu(x: Tensor) -> Tensor:
    cdf = 0.5 * (1.0 + special.erf(x.data / _SQRT_2))
    pdf = _INV_SQRT_2PI * np.exp(-0.5 * x.data * x.data)
    out = (x.data * cdf).astype(x.dtype)
    return Tensor.from_op(out, (x,), "gelu", lambda g: (g * (cdf + x.data * pdf),))


def softmax(x: Tensor, axis: int = -1) -> Tensor:
    out = special.softmax(x.data, axis=axis).astype(x.dtype)

    def _backward(g: np.ndarray):
        return (out * (g - (g * out).sum(axis=axis, keepdims=True)),)

    return Tensor.from_op(out, (x,), "softmax", _backward)


def softmax_channels(x: Tensor) -> Tensor:
    if x.ndim != 4:
        msg = "softmax_channels expects an N x C x H x W tensor, got shape %s."
        raise ShapeError(msg % (x.shape,))
    return softmax(x, axis=1)


def log_softmax(x: Tensor, axis: int = -1) -> Tensor:
    out = special.log_softmax(x.data, axis=axis).astype(x.dtype)

    def _backward(g: np.ndarray):
        return (g - np.exp(out) * g.sum(axis=axis, keepdims=True),)

    return Tensor.from_op(out, (x,), "log_softmax", _backward)


# shapes and reductions


def _normalize_axes(axis: Axis, ndim: int) -> Tuple[int, ...]:
    if axis is None:
        return tuple(range(ndim))
    if isinstance(axis, int):
        axis = (axis,)
    return tuple(sorted(a % ndim for a in axis))


def sum(x: Tensor, axis: Axis = None, keepdims: bool = False) -> Tensor:  # noqa: A001
    axes = _normalize_axes(axis, x.ndim)
    out = x.data.sum(axis=axes, keepdims=keepdims)

    def _backward(g: np.ndarray):
        if not keepdims:
            g = np.expand_dims(g, axes)
        return (np.broadcast_to(g, x.shape).copy(),)

    return Tensor.from_op(np.asarray(out), (x,), "sum", _backward)


def mean(x: Tensor, axis: Axis = None, keepdims: bool = False) -> Tensor:
    axes = _normalize_axes(axis, x.ndim)
    count = int(np.prod([x.shape[a] for a in axes])) if axes else 1
    return scalar_mul(sum(x, axes, keepdims), 1.0 / count)


def reshape(x: Tensor, shape: Tuple[int, ...]) -> Tensor:
    return Tensor.from_op(x.data.reshape(shape), (x,), "reshape", lambda g: (g.reshape(x.shape),))


def transpose(x: Tensor, axes: Sequence[int]) -> Tensor:
    inverse = tuple(np.argsort(axes))
    return Tensor.from_op(x.data.transpose(axes), (x,), "transpose", lambda g: (g.transpose(inverse),))


def concat(xs: Sequence[Tensor], axis: int = 1) -> Tensor:
    if not xs:
        raise ShapeError("concat needs at least one tensor.")

    reference = xs[0].shape
    axis = axis % len(reference)
    for x in xs[1:]:
        if len(x.shape) != len(reference) or any(
            d != r for i, (d, r) in enumerate(zip(x.shape, reference)) if i != axis
        ):
            msg = "concat: shape %s does not match %s outside axis %d."
            raise ShapeError(msg % (x.shape, reference, axis))

    boundaries = np.cumsum([x.shape[axis] for x in xs])[:-1]

    def _backward(g: np.ndarray):
        return tuple(np.split(g, boundaries, axis=axis))

    return Tensor.from_op(np.concatenate([x.data for x in xs], axis=axis), tuple(xs), "concat", _backward)


def concat_channels(xs: Sequence[Tensor]) -> Tensor:
    return concat(xs, axis=1)


def take_channels(x: Tensor, start: int, stop: int) -> Tensor:
    if not 0 <= start < stop <= x.shape[1]:
        msg = "take_channels: range [%d, %d) is outside %d channels."
        raise ShapeError(msg % (start, stop, x.shape[1]))

    def _backward(g: np.ndarray):
        grad = np.zeros_like(x.data)
        grad[:, start:stop] = g
        return (grad,)

    return Tensor.from_op(x.data[:, start:stop], (x,), "take_channels", _backward)


def select(x: Tensor, index: int) -> Tensor:
    """Scalar element `index` of a 1-D tensor."""
    if x.ndim != 1:
        msg = "select expects a 1-D tensor, got shape %s."
        raise ShapeError(msg % (x.shape,))

    def _backward(g: np.ndarray):
        grad = np.zeros_like(x.data)
        grad[index] = g
        return (grad,)

    return Tensor.from_op(np.asarray(x.data[index]), (x,), "select", _backward)


def scale(x: Tensor, factor: Tensor) -> Tensor:
    """Multiply every element of x by a single-element tensor."""
    if factor.size != 1:
        msg = "scale expects a single-element factor, got shape %s."
        raise ShapeError(msg % (factor.shape,))

    value = factor.data.reshape(())

    def _backward(g: np.ndarray):
        return g * value, np.asarray((g * x.data).sum()).reshape(factor.shape)

    return Tensor.from_op(x.data * value, (x, factor), "scale", _backward)


def normalized_weights(w: Tensor, eps: float) -> Tensor:
    """relu(w) / (eps + sum(relu(w))), the fast normalized fusion coefficients."""
    mask = w.data > 0
    clamped = np.where(mask, w.data, 0)
    total = eps + clamped.sum()
    out = (clamped / total).astype(w.dtype)

    def _backward(g: np.ndarray):
        return (mask * (g / total - (g * clamped).sum() / (total * total)),)

    return Tensor.from_op(out, (w,), "normalized_weights", _backward)


# token space


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
        msg = "matmul: inner dimensions of %s and %s do not agree."
        raise ShapeError(msg % (a.shape, b.shape))
    if b.ndim > 2 and a.shape[:-2] != b.shape[:-2]:
        msg = "matmul: batch dimensions of %s and %s do not agree."
        raise ShapeError(msg % (a.shape, b.shape))

    out = np.matmul(a.data, b.data)
    profiler.record_macs("matmul", out.size * a.shape[-1])

    def _backward(g: np.ndarray):
        grad_a = np.matmul(g, np.swapaxes(b.data, -1, -2))
        if b.ndim == 2:
            grad_b = a.data.reshape(-1, a.shape[-1]).T @ g.reshape(-1, g.shape[-1])
        else:
            grad_b = np.matmul(np.swapaxes(a.data, -1, -2), g)
        return grad_a, grad_b

    return Tensor.from_op(out, (a, b), "matmul", _backward)


def linear(x: Tensor, weight: Tensor, bias: Optional[Tensor] = None) -> Tensor:
    """x[..., in] @ weight[out, in].T + bias[out]"""
    out_features, in_features = weight.shape
    if x.shape[-1] != in_features:
        msg = "linear: input features %d do not match weight %s."
        raise ShapeError(msg % (x.shape[-1], weight.shape))

    out = x.data @ weight.data.T
    if bias is not None:
        out = out + bias.data
    profiler.record_macs("linear", out.size * in_features)

    def _backward(g: np.ndarray):
        flat = g.reshape(-1, out_features)
        grads = [g @ weight.data, flat.T @ x.data.reshape(-1, in_features)]
        if bias is not None:
            grads.append(flat.sum(axis=0))
        return grads

    parents = (x, weight) if bias is None else (x, weight, bias)
    return Tensor.from_op(out, parents, "linear", _backward)


# spatial


def _output_size(size: int, kernel: int, stride: int, padding: int, op: str) -> int:
    out = (size + 2 * padding - kernel) // stride + 1
    if out < 1:
        msg = "%s: output size %d < 1 for input %d, kernel %d, stride %d, padding %d."
        raise ShapeError(msg % (op, out, size, kernel, stride, padding))
    return out


def _check_spatial(x: Tensor, stride: int, padding: int, op: str) -> None:
    if x.ndim != 4:
        msg = "%s expects an N x C x H x W tensor, got shape %s."
        raise ShapeError(msg % (op, x.shape))
    if stride < 1 or padding < 0:
        msg = "%s: stride must be >= 1 and padding >= 0, got %d and %d."
        raise ShapeError(msg % (op, stride, padding))


def conv2d(x: Tensor, weight: Tensor, bias: Optional[Tensor] = None, stride: int = 1, padding: int = 0) -> Tensor:
    _check_spatial(x, stride, padding, "conv2d")
    n, c, h, w = x.shape
    out_c, in_c, kh, kw = weight.shape
    if c != in_c:
        msg = "conv2d: input has %d channels, weight expects %d."
        raise ShapeError(msg % (c, in_c))

    oh = _output_size(h, kh, stride, padding, "conv2d")
    ow = _output_size(w, kw, stride, padding, "conv2d")
    kernel = weight.data.reshape(out_c, -1)
    profiler.record_macs("conv2d", n * out_c * oh * ow * in_c * kh * kw)

    if kh == kw == 1 and padding == 0:
        picked = x.data[:, :, ::stride, ::stride].reshape(n, c, oh * ow)
        out = np.matmul(kernel, picked)

        def _backward_pointwise(g: np.ndarray):
            flat = g.reshape(n, out_c, oh * ow)
            grad_x = np.zeros_like(x.data)
            grad_x[:, :, ::stride, ::stride] = np.matmul(kernel.T, flat).reshape(n, c, oh, ow)
            grad_w = np.einsum("noh,nch->oc", flat, picked).reshape(weight.shape)
            return _with_bias(grad_x, grad_w, g)

        backward_fn = _backward_pointwise
        out = out.reshape(n, out_c, oh, ow)
    else:
        padded = np.pad(x.data, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
        windows = sliding_window_view(padded, (kh, kw), axis=(2, 3))[:, :, ::stride, ::stride]
        cols = windows.transpose(0, 2, 3, 1, 4, 5).reshape(n * oh * ow, c * kh * kw)
        out = (cols @ kernel.T).reshape(n, oh, ow, out_c).transpose(0, 3, 1, 2)

        def _backward_im2col(g: np.ndarray):
            flat = g.transpose(0, 2, 3, 1).reshape(-1, out_c)
            grad_w = (flat.T @ cols).reshape(weight.shape)
            grad_cols = (flat @ kernel).reshape(n, oh, ow, c, kh, kw)

            grad_padded = np.zeros_like(padded)
            for i in range(kh):
                for j in range(kw):
                    grad_padded[:, :, i:i + stride * oh:stride, j:j + stride * ow:stride] += (
                        grad_cols[:, :, :, :, i, j].transpose(0, 3, 1, 2)
                    )
            grad_x = grad_padded[:, :, padding:padding + h, padding:padding + w]
            return _with_bias(grad_x, grad_w, g)

        backward_fn = _backward_im2col

    if bias is not None:
        out = out + bias.data.reshape(1, out_c, 1, 1)

    parents = (x, weight) if bias is None else (x, weight, bias)
    return Tensor.from_op(np.ascontiguousarray(out), parents, "conv2d", backward_fn)


def _with_bias(grad_x: np.ndarray, grad_w: np.ndarray, g: np.ndarray):
    return grad_x, grad_w, g.sum(axis=(0, 2, 3))


def batch_norm2d(
    x: Tensor,
    gamma: Tensor,
    beta: Tensor,
    running_mean: np.ndarray,
    running_var: np.ndarray,
    training: bool,
    momentum: float = 0.1,
    eps: float = 1e-5,
) -> Tensor:
    """
    Per-channel normalization. Training mode normalizes with batch moments and
    updates the running buffers in place (unbiased variance), eval mode uses the buffers.
    """
    if x.ndim != 4 or x.shape[1] != gamma.shape[0] or running_mean.shape != gamma.shape:
        msg = "batch_norm2d: input %s does not match %d-channel state."
        raise ShapeError(msg % (x.shape, gamma.shape[0]))

    channels = x.shape[1]
    count = x.size // channels
    if count == 0:
        raise ShapeError("batch_norm2d: zero elements per channel.")

    axes = (0, 2, 3)
    stat_shape = (1, channels, 1, 1)

    if training:
        batch_mean = x.data.mean(axis=axes)
        batch_var = x.data.var(axis=axes)
        unbiased = batch_var * count / (count - 1) if count > 1 else batch_var
        running_mean *= 1 - momentum
        running_mean += momentum * batch_mean
        running_var *= 1 - momentum
        running_var += momentum * unbiased
    else:
        batch_mean, batch_var = running_mean, running_var

    inv_std = (1.0 / np.sqrt(batch_var + eps)).reshape(stat_shape)
    normalized = (x.data - batch_mean.reshape(stat_shape)) * inv_std
    out = (normalized * gamma.data.reshape(stat_shape) + beta.data.reshape(stat_shape)).astype(x.dtype)

    def _backward(g: np.ndarray):
        grad_gamma = (g * normalized).sum(axis=axes)
        grad_beta = g.sum(axis=axes)
        grad_norm = g * gamma.data.reshape(stat_shape)

        if training:
            grad_x = (inv_std / count) * (
                count * grad_norm
                - grad_norm.sum(axis=axes, keepdims=True)
                - normalized * (grad_norm * normalized).sum(axis=axes, keepdims=True)
            )
        else:
            grad_x = grad_norm * inv_std
        return grad_x, grad_gamma, grad_beta

    return Tensor.from_op(out, (x, gamma, beta), "batch_norm2d", _backward)


def layer_norm(x: Tensor, gamma: Tensor, beta: Tensor, eps: float = 1e-5) -> Tensor:
    dim = x.shape[-1]
    if gamma.shape != (dim,):
        msg = "layer_norm: last axis %d does not match %s."
        raise ShapeError(msg % (dim, gamma.shape))

    mu = x.data.mean(axis=-1, keepdims=True)
    inv_std = 1.0 / np.sqrt(x.data.var(axis=-1, keepdims=True) + eps)
    normalized = (x.data - mu) * inv_std
    out = (normalized * gamma.data + beta.data).astype(x.dtype)

    def _backward(g: np.ndarray):
        grad_norm = g * gamma.data
        grad_x = (inv_std / dim) * (
            dim * grad_norm
            - grad_norm.sum(axis=-1, keepdims=True)
            - normalized * (grad_norm * normalized).sum(axis=-1, keepdims=True)
        )
        flat = g.reshape(-1, dim)
        return grad_x, (flat * normalized.reshape(-1, dim)).sum(axis=0), flat.sum(axis=0)

    return Tensor.from_op(out, (x, gamma, beta), "layer_norm", _backward)


def max_pool2d(x: Tensor, kernel: int, stride: int, padding: int = 0) -> Tensor:
    """Window maximum with -inf padding; ties send the gradient to the first element in row-major order."""
    _check_spatial(x, stride, padding, "max_pool2d")
    if kernel < 1 or padding > kernel // 2:
        msg = "max_pool2d: kernel %d with padding %d is not supported."
        raise ShapeError(msg % (kernel, padding))

    n, c, h, w = x.shape
    oh = _output_size(h, kernel, stride, padding, "max_pool2d")
    ow = _output_size(w, kernel, stride, padding, "max_pool2d")

    padded = np.pad(
        x.data, ((0, 0), (0, 0), (padding, padding), (padding, padding)), constant_values=-np.inf
    )
    windows = sliding_window_view(padded, (kernel, kernel), axis=(2, 3))[:, :, ::stride, ::stride]
    flat = windows[:, :, :oh, :ow].reshape(n, c, oh, ow, kernel * kernel)
    arg = flat.argmax(axis=-1)
    out = np.take_along_axis(flat, arg[..., None], axis=-1)[..., 0]

    def _backward(g: np.ndarray):
        rows = np.arange(oh).reshape(1, 1, oh, 1) * stride + arg // kernel
        cols = np.arange(ow).reshape(1, 1, 1, ow) * stride + arg % kernel
        batch = np.arange(n).reshape(n, 1, 1, 1)
        channel = np.arange(c).reshape(1, c, 1, 1)

        grad_padded = np.zeros(padded.shape, dtype=x.dtype)
        np.add.at(grad_padded, (batch, channel, rows, cols), g)
        return (grad_padded[:, :, padding:padding + h, padding:padding + w],)

    return Tensor.from_op(out, (x,), "max_pool2d", _backward)


def _window_sum(a: np.ndarray, kernel: int, axis: int) -> np.ndarray:
    return sliding_window_view(a, kernel, axis=axis).sum(axis=-1)


def _window_sum_adjoint(a: np.ndarray, kernel: int, axis: int) -> np.ndarray:
    pad = [(0, 0)] * a.ndim
    pad[axis] = (kernel - 1, kernel - 1)
    return _window_sum(np.pad(a, pad), kernel, axis)


def avg_pool2d(x: Tensor, kernel: int, stride: int, padding: int = 0) -> Tensor:
    """Window mean over zero padding; the divisor is always kernel**2."""
    _check_spatial(x, stride, padding, "avg_pool2d")
    if kernel < 1:
        msg = "avg_pool2d: kernel must be >= 1, got %d."
        raise ShapeError(msg % kernel)

    n, c, h, w = x.shape
    oh = _output_size(h, kernel, stride, padding, "avg_pool2d")
    ow = _output_size(w, kernel, stride, padding, "avg_pool2d")
    area = kernel * kernel

    padded = np.pad(x.data, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
    dense = _window_sum(_window_sum(padded, kernel, axis=3), kernel, axis=2)
    out = (dense[:, :, ::stride, ::stride][:, :, :oh, :ow] / area).astype(x.dtype)

    def _backward(g: np.ndarray):
        spread = np.zeros(dense.shape, dtype=g.dtype)
        spread[:, :, ::stride, ::stride][:, :, :oh, :ow] = g / area
        grad_padded = _window_sum_adjoint(_window_sum_adjoint(spread, kernel, axis=2), kernel, axis=3)
        return (grad_padded[:, :, padding:padding + h, padding:padding + w],)

    return Tensor.from_op(out, (x,), "avg_pool2d", _backward)


@lru_cache(maxsize=256)
def interpolation_matrix(in_size: int, out_size: int) -> np.ndarray:
    """Row i holds the bilinear weights of output i over the input (half-pixel centres)."""
    if in_size < 1 or out_size < 1:
        msg = "interpolation_matrix: sizes must be >= 1, got %d -> %d."
        raise ShapeError(msg % (in_size, out_size))

    source = (np.arange(out_size) + 0.5) * (in_size / out_size) - 0.5
    source = np.maximum(source, 0.0)
    lower = np.minimum(np.floor(source).astype(np.int64), in_size - 1)
    upper = np.minimum(lower + 1, in_size - 1)
    frac = source - lower

    matrix = np.zeros((out_size, in_size))
    rows = np.arange(out_size)
    np.add.at(matrix, (rows, lower), 1.0 - frac)
    np.add.at(matrix, (rows, upper), frac)
    matrix.setflags(write=False)
    return matrix


def bilinear_resize(x: Tensor, out_h: int, out_w: int) -> Tensor:
    if x.ndim != 4:
        msg = "bilinear_resize expects an N x C x H x W tensor, got shape %s."
        raise ShapeError(msg % (x.shape,))

    rows = interpolation_matrix(x.shape[2], out_h).astype(x.dtype)
    cols = interpolation_matrix(x.shape[3], out_w).astype(x.dtype)
    out = rows @ x.data @ cols.T

    def _backward(g: np.ndarray):
        return (rows.T @ g @ cols,)

    return Tensor.from_op(out, (x,), "bilinear_resize", _backward)
