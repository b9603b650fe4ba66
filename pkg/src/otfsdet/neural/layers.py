"""Layers with explicit forward/backward passes.

Every layer keeps its parameters in ``params`` (a list of arrays, possibly
empty) and writes matching gradients into ``grads`` during ``backward``.
``forward`` caches whatever the backward pass needs; layers are therefore
stateful between a forward and the following backward, and a model must not
interleave two half-finished passes through the same instance.

Conv1d uses "same" padding with output length ceil(L / stride). Instead of
materializing a padded copy, each kernel tap is applied only over the output
range where its input index lands inside the real signal; taps that would
read padding alone are skipped. On the length-1 and length-2 maps the
detector nets run on, that skips most of the arithmetic.
"""

import numpy as np

from ..errors import DimensionError, ParameterError


def _uniform_init(rng, shape, fan_in):
    # zero-mean uniform scaled by 1/sqrt(fan_in); biases are zeros elsewhere
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


class Dense:
    """Affine map on (batch, d_in) -> (batch, d_out)."""

    def __init__(self, d_in, d_out, rng):
        if d_in < 1 or d_out < 1:
            raise ParameterError(f"dense dims must be positive, got {d_in}->{d_out}")
        self.d_in = d_in
        self.d_out = d_out
        self.w = _uniform_init(rng, (d_in, d_out), d_in)
        self.b = np.zeros(d_out)
        self.params = [self.w, self.b]
        self.grads = [np.zeros_like(self.w), np.zeros_like(self.b)]
        self._x = None

    def forward(self, x):
        if x.ndim != 2 or x.shape[1] != self.d_in:
            raise DimensionError(
                f"dense expects (batch, {self.d_in}), got {x.shape}"
            )
        self._x = x
        return x @ self.w + self.b

    def backward(self, dy):
        x = self._x
        self.grads[0] = x.T @ dy
        self.grads[1] = dy.sum(axis=0)
        return dy @ self.w.T


class ReLU:
    """Elementwise max(x, 0); shape-agnostic."""

    def __init__(self):
        self.params = []
        self.grads = []
        self._mask = None

    def forward(self, x):
        self._mask = x > 0
        # np.maximum (unlike a mask select) lets NaN through, so a diverged
        # forward pass surfaces as a NaN loss instead of being silently zeroed
        return np.maximum(x, 0.0)

    def backward(self, dy):
        return np.where(self._mask, dy, 0.0)


class SeqInput:
    """Reshape flat (batch, d) features to a 1-channel sequence (batch, 1, d)."""

    def __init__(self, length):
        self.length = length
        self.params = []
        self.grads = []

    def forward(self, x):
        if x.ndim != 2 or x.shape[1] != self.length:
            raise DimensionError(f"expected (batch, {self.length}), got {x.shape}")
        return x[:, None, :]

    def backward(self, dy):
        return dy[:, 0, :]


class Flatten:
    """(batch, C, L) -> (batch, C*L), row-major."""

    def __init__(self):
        self.params = []
        self.grads = []
        self._shape = None

    def forward(self, x):
        if x.ndim != 3:
            raise DimensionError(f"flatten expects (batch, C, L), got {x.shape}")
        self._shape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, dy):
        return dy.reshape(self._shape)


def _tap_plan(length, kernel, stride):
    """Per-tap valid output ranges for same-padded strided conv1d.

    Output j reads input u = j*stride + t - pad_left for tap t. Returns
    (l_out, [(t, j_lo, n_j, u_lo)]) keeping only taps with a nonempty
    in-bounds range.
    """
    l_out = -(-length // stride)
    pad_total = max((l_out - 1) * stride + kernel - length, 0)
    pad_left = pad_total // 2
    plan = []
    for t in range(kernel):
        j_lo = max(0, -(-(pad_left - t) // stride))
        j_hi = min(l_out - 1, (length - 1 - t + pad_left) // stride)
        if j_lo > j_hi:
            continue
        plan.append((t, j_lo, j_hi - j_lo + 1, j_lo * stride + t - pad_left))
    return l_out, plan


class Conv1D:
    """Same-padded 1-D convolution, weight shape (c_out, c_in, kernel)."""

    def __init__(self, c_in, c_out, kernel, rng, stride=1):
        if min(c_in, c_out, kernel, stride) < 1:
            raise ParameterError("conv1d sizes must be positive")
        self.c_in = c_in
        self.c_out = c_out
        self.kernel = kernel
        self.stride = stride
        self.w = _uniform_init(rng, (c_out, c_in, kernel), c_in * kernel)
        self.b = np.zeros(c_out)
        self.params = [self.w, self.b]
        self.grads = [np.zeros_like(self.w), np.zeros_like(self.b)]
        self._x = None
        self._plans = {}

    def _plan(self, length):
        if length not in self._plans:
            self._plans[length] = _tap_plan(length, self.kernel, self.stride)
        return self._plans[length]

    def forward(self, x):
        if x.ndim != 3 or x.shape[1] != self.c_in:
            raise DimensionError(
                f"conv1d expects (batch, {self.c_in}, L), got {x.shape}"
            )
        b, _, length = x.shape
        l_out, plan = self._plan(length)
        self._x = x
        y = np.broadcast_to(self.b[:, None], (b, self.c_out, l_out)).copy()
        s = self.stride
        # w[:, :, t] is strided in both axes, which knocks the matmul off
        # the BLAS path; copy each tap matrix contiguous first (and keep it
        # for backward, which runs before the optimizer touches w)
        self._wt = {t: np.ascontiguousarray(self.w[:, :, t]) for t, *_ in plan}
        for t, j_lo, n_j, u_lo in plan:
            xs = x[:, :, u_lo : u_lo + s * n_j : s]  # (b, c_in, n_j)
            flat = xs.transpose(0, 2, 1).reshape(b * n_j, self.c_in)
            yt = flat @ self._wt[t].T  # (b*n_j, c_out)
            y[:, :, j_lo : j_lo + n_j] += yt.reshape(b, n_j, self.c_out).transpose(0, 2, 1)
        return y

    def backward(self, dy):
        x = self._x
        b, _, length = x.shape
        _, plan = self._plan(length)
        s = self.stride
        dw = np.zeros_like(self.w)
        dx = np.zeros_like(x)
        for t, j_lo, n_j, u_lo in plan:
            xs = x[:, :, u_lo : u_lo + s * n_j : s]
            dys = dy[:, :, j_lo : j_lo + n_j]
            x_flat = xs.transpose(0, 2, 1).reshape(b * n_j, self.c_in)
            dy_flat = dys.transpose(0, 2, 1).reshape(b * n_j, self.c_out)
            dw[:, :, t] = dy_flat.T @ x_flat
            dxs = dy_flat @ self._wt[t]  # (b*n_j, c_in)
            dx[:, :, u_lo : u_lo + s * n_j : s] += dxs.reshape(b, n_j, self.c_in).transpose(0, 2, 1)
        self.grads[0] = dw
        self.grads[1] = dy.sum(axis=(0, 2))
        return dx


class MaxPool1D:
    """Non-overlapping max pooling along the last axis."""

    def __init__(self, factor):
        if factor < 1:
            raise ParameterError("pool factor must be positive")
        self.factor = factor
        self.params = []
        self.grads = []
        self._arg = None
        self._shape = None

    def forward(self, x):
        if x.ndim != 3 or x.shape[2] % self.factor != 0:
            raise DimensionError(
                f"maxpool1d({self.factor}) needs length divisible by factor, got {x.shape}"
            )
        b, c, length = x.shape
        windows = x.reshape(b, c, length // self.factor, self.factor)
        self._arg = windows.argmax(axis=3)
        self._shape = x.shape
        return windows.max(axis=3)

    def backward(self, dy):
        b, c, length = self._shape
        l_out = length // self.factor
        dwin = np.zeros((b, c, l_out, self.factor))
        bi, ci, ji = np.ogrid[:b, :c, :l_out]
        dwin[bi, ci, ji, self._arg] = dy
        return dwin.reshape(b, c, length)


class ResidualBlock:
    """conv(stride s) -> relu -> conv(stride 1), plus skip, then relu.

    The skip path is the identity when shapes agree and a 1x1 strided
    projection conv otherwise.
    """

    def __init__(self, c_in, c_out, rng, stride=1):
        self.conv1 = Conv1D(c_in, c_out, 3, rng, stride=stride)
        self.relu1 = ReLU()
        self.conv2 = Conv1D(c_out, c_out, 3, rng, stride=1)
        self.proj = None
        if c_in != c_out or stride != 1:
            self.proj = Conv1D(c_in, c_out, 1, rng, stride=stride)
        self.relu_out = ReLU()
        self.params = self.conv1.params + self.conv2.params + (
            self.proj.params if self.proj is not None else []
        )

    @property
    def grads(self):
        out = self.conv1.grads + self.conv2.grads
        if self.proj is not None:
            out = out + self.proj.grads
        return out

    def forward(self, x):
        main = self.conv2.forward(self.relu1.forward(self.conv1.forward(x)))
        skip = x if self.proj is None else self.proj.forward(x)
        return self.relu_out.forward(main + skip)

    def backward(self, dy):
        dsum = self.relu_out.backward(dy)
        dmain = self.conv1.backward(self.relu1.backward(self.conv2.backward(dsum)))
        dskip = dsum if self.proj is None else self.proj.backward(dsum)
        return dmain + dskip
