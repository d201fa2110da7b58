"""Sequence-model operations: 1-D convolution, pooling, LSTM recurrence.

Each op accepts a single sequence (T,C) or a batch (B,T,C) and fuses its
whole computation into one graph node with a hand-written backward pass,
so a 140-step recurrence costs one node instead of thousands.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..errors import ShapeError
from .tensor import Array, Tensor, _node, _sigmoid


def _batched(x: Tensor) -> tuple[Array, bool]:
    """View input data as (B,T,C), remembering whether a batch axis was added."""
    if x.ndim == 2:
        return x.data[None], True
    if x.ndim == 3:
        return x.data, False
    raise ShapeError(f"expected a (T,C) or (B,T,C) tensor, got shape {x.shape}")


def conv1d(x: Tensor, kernels: Tensor, bias: Tensor, stride: int = 1) -> Tensor:
    """Valid (unpadded) 1-D convolution over the time axis.

    x (B,T,C) or (T,C), kernels (F,K,C), bias (F,) -> (B,T',F) with
    T' = (T-K)//stride + 1.
    """
    if stride < 1:
        raise ShapeError(f"stride must be >= 1, got {stride}")
    if kernels.ndim != 3:
        raise ShapeError(f"kernels must be (F,K,C), got shape {kernels.shape}")
    data, squeeze = _batched(x)
    batch, steps, chans = data.shape
    n_filters, width, k_chans = kernels.shape
    if k_chans != chans:
        raise ShapeError(f"kernel channels {k_chans} != input channels {chans}")
    if steps < width:
        raise ShapeError(f"sequence of {steps} steps is shorter than kernel size {width}")

    out_steps = (steps - width) // stride + 1
    # windows[b,t,c,k] = data[b, t*stride + k, c]; flatten (c,k) to match kernels.
    windows = sliding_window_view(data, width, axis=1)[:, ::stride]
    win_mat = np.ascontiguousarray(windows).reshape(batch * out_steps, chans * width)
    ker_mat = kernels.data.transpose(0, 2, 1).reshape(n_filters, chans * width)
    result = (win_mat @ ker_mat.T).reshape(batch, out_steps, n_filters) + bias.data

    def backward(out: Tensor):
        def run():
            grad = out.grad if not squeeze else out.grad[None]
            grad_mat = grad.reshape(batch * out_steps, n_filters)
            if kernels.requires_grad:
                dk = (grad_mat.T @ win_mat).reshape(n_filters, chans, width)
                kernels.accumulate(dk.transpose(0, 2, 1))
            if bias.requires_grad:
                bias.accumulate(grad.sum(axis=(0, 1)))
            if x.requires_grad:
                dwin = (grad_mat @ ker_mat).reshape(batch, out_steps, chans, width)
                dx = np.zeros_like(data)
                span = out_steps * stride
                for k in range(width):
                    dx[:, k:k + span:stride, :] += dwin[:, :, :, k]
                x.accumulate(dx[0] if squeeze else dx)
        return run

    return _node(result[0] if squeeze else result, (x, kernels, bias), backward)


def maxpool1d(x: Tensor, pool: int) -> Tensor:
    """Non-overlapping max over windows of `pool` steps; trailing remainder dropped."""
    if pool < 1:
        raise ShapeError(f"pool size must be >= 1, got {pool}")
    data, squeeze = _batched(x)
    batch, steps, feats = data.shape
    n_out = steps // pool
    if n_out < 1:
        raise ShapeError(f"cannot pool {steps} steps with window {pool}")
    blocks = data[:, :n_out * pool].reshape(batch, n_out, pool, feats)
    result = blocks.max(axis=2)

    def backward(out: Tensor):
        winners = blocks.argmax(axis=2)  # first maximum on ties

        def run():
            if not x.requires_grad:
                return
            grad = out.grad if not squeeze else out.grad[None]
            buf = np.zeros_like(blocks)
            np.put_along_axis(buf, winners[:, :, None, :], grad[:, :, None, :], axis=2)
            dx = np.zeros_like(data)
            dx[:, :n_out * pool] = buf.reshape(batch, n_out * pool, feats)
            x.accumulate(dx[0] if squeeze else dx)
        return run

    return _node(result[0] if squeeze else result, (x,), backward)


def global_maxpool(x: Tensor) -> Tensor:
    """Per-feature maximum over the whole time axis: (B,T,F) -> (B,F)."""
    data, squeeze = _batched(x)
    if data.shape[1] < 1:
        raise ShapeError("global max pooling needs at least one time step")
    result = data.max(axis=1)

    def backward(out: Tensor):
        winners = data.argmax(axis=1)  # (B,F), first maximum on ties

        def run():
            if not x.requires_grad:
                return
            grad = out.grad if not squeeze else out.grad[None]
            dx = np.zeros_like(data)
            np.put_along_axis(dx, winners[:, None, :], grad[:, None, :], axis=1)
            x.accumulate(dx[0] if squeeze else dx)
        return run

    return _node(result[0] if squeeze else result, (x,), backward)


def lstm_sequence(x: Tensor, weights: Tensor, bias: Tensor) -> Tensor:
    """Run an LSTM cell over a sequence, returning every hidden state.

    x (B,T,d) or (T,d); weights ((d+h), 4h) packs the input rows on top of
    the recurrent rows, gate order (input, forget, candidate, output);
    bias (4h,). Initial hidden and cell states are zero. Output (B,T,h).

    Backpropagation through time is fused into a single backward closure.
    """
    data, squeeze = _batched(x)
    batch, steps, d = data.shape
    if weights.ndim != 2 or weights.shape[1] % 4 != 0:
        raise ShapeError(f"LSTM weights must be ((d+h),4h), got {weights.shape}")
    h = weights.shape[1] // 4
    if weights.shape[0] != d + h:
        raise ShapeError(
            f"LSTM weights expect input size {weights.shape[0] - h}, got {d}"
        )
    wx = weights.data[:d]
    wh = weights.data[d:]

    # Input projections for all steps at once; the recurrence adds h @ wh.
    xz = (data.reshape(batch * steps, d) @ wx).reshape(batch, steps, 4 * h) + bias.data

    gi = np.empty((steps, batch, h))
    gf = np.empty((steps, batch, h))
    gg = np.empty((steps, batch, h))
    go = np.empty((steps, batch, h))
    tc = np.empty((steps, batch, h))
    cells = np.empty((steps, batch, h))
    hidden = np.empty((steps, batch, h))

    h_prev = np.zeros((batch, h))
    c_prev = np.zeros((batch, h))
    for t in range(steps):
        z = xz[:, t] + h_prev @ wh
        gi[t] = _sigmoid(z[:, :h])
        gf[t] = _sigmoid(z[:, h:2 * h])
        gg[t] = np.tanh(z[:, 2 * h:3 * h])
        go[t] = _sigmoid(z[:, 3 * h:])
        cells[t] = gf[t] * c_prev + gi[t] * gg[t]
        tc[t] = np.tanh(cells[t])
        hidden[t] = go[t] * tc[t]
        h_prev = hidden[t]
        c_prev = cells[t]

    result = hidden.transpose(1, 0, 2)  # (B,T,h)

    def backward(out: Tensor):
        def run():
            grad = out.grad if not squeeze else out.grad[None]
            dxz = np.empty((steps, batch, 4 * h))
            dwh = np.zeros_like(wh)
            dz = np.empty((batch, 4 * h))
            dh_next = np.zeros((batch, h))
            dc_next = np.zeros((batch, h))
            for t in range(steps - 1, -1, -1):
                dh = grad[:, t] + dh_next
                do = dh * tc[t]
                dc = dh * go[t] * (1.0 - tc[t] * tc[t]) + dc_next
                c_before = cells[t - 1] if t > 0 else np.zeros((batch, h))
                dz[:, :h] = (dc * gg[t]) * gi[t] * (1.0 - gi[t])
                dz[:, h:2 * h] = (dc * c_before) * gf[t] * (1.0 - gf[t])
                dz[:, 2 * h:3 * h] = (dc * gi[t]) * (1.0 - gg[t] * gg[t])
                dz[:, 3 * h:] = do * go[t] * (1.0 - go[t])
                dxz[t] = dz
                h_before = hidden[t - 1] if t > 0 else np.zeros((batch, h))
                dwh += h_before.T @ dz
                dh_next = dz @ wh.T
                dc_next = dc * gf[t]
            dxz_bt = dxz.transpose(1, 0, 2).reshape(batch * steps, 4 * h)
            if weights.requires_grad:
                dwx = data.reshape(batch * steps, d).T @ dxz_bt
                weights.accumulate(np.vstack([dwx, dwh]))
            if bias.requires_grad:
                bias.accumulate(dxz_bt.sum(axis=0))
            if x.requires_grad:
                dx = (dxz_bt @ wx.T).reshape(batch, steps, d)
                x.accumulate(dx[0] if squeeze else dx)
        return run

    return _node(result[0] if squeeze else result, (x, weights, bias), backward)
