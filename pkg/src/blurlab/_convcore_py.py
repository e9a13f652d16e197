"""Pure-numpy convolution core (fallback backend).

All functions operate on pre-padded float64 inputs; padding policy lives in
the callers. `corr_*` implement strided 2-D cross-correlation and its two
adjoints, which are the only hot kernels in the package.
"""

import numpy as np
from numpy.lib.stride_tricks import as_strided


def _patches(xp, kh, kw, stride):
    b, c, hp, wp = xp.shape
    ho = (hp - kh) // stride + 1
    wo = (wp - kw) // stride + 1
    sb, sc, sh, sw = xp.strides
    shape = (b, c, ho, wo, kh, kw)
    strides = (sb, sc, sh * stride, sw * stride, sh, sw)
    return as_strided(xp, shape=shape, strides=strides), ho, wo


def corr_forward(xp, w, stride):
    """(B,Ci,Hp,Wp) x (Co,Ci,kh,kw) -> (B,Co,Ho,Wo), valid correlation."""
    xp = np.ascontiguousarray(xp, dtype=np.float64)
    w = np.ascontiguousarray(w, dtype=np.float64)
    co, ci, kh, kw = w.shape
    p, ho, wo = _patches(xp, kh, kw, stride)
    b = xp.shape[0]
    cols = p.transpose(0, 2, 3, 1, 4, 5).reshape(b * ho * wo, ci * kh * kw)
    out = cols @ w.reshape(co, ci * kh * kw).T
    return np.ascontiguousarray(out.reshape(b, ho, wo, co).transpose(0, 3, 1, 2))


def corr_backward_input(gy, w, stride, hp, wp):
    """Adjoint of corr_forward with respect to the padded input."""
    gy = np.ascontiguousarray(gy, dtype=np.float64)
    w = np.ascontiguousarray(w, dtype=np.float64)
    b, co, ho, wo = gy.shape
    _, ci, kh, kw = w.shape
    gx = np.zeros((b, ci, hp, wp), dtype=np.float64)
    gflat = gy.transpose(0, 2, 3, 1).reshape(b * ho * wo, co)
    for i in range(kh):
        for j in range(kw):
            contrib = gflat @ w[:, :, i, j]  # (B*Ho*Wo, Ci)
            contrib = contrib.reshape(b, ho, wo, ci).transpose(0, 3, 1, 2)
            gx[:, :, i : i + stride * ho : stride, j : j + stride * wo : stride] += contrib
    return gx


def corr_backward_weight(xp, gy, stride, kh, kw):
    """Adjoint of corr_forward with respect to the filter weights."""
    xp = np.ascontiguousarray(xp, dtype=np.float64)
    gy = np.ascontiguousarray(gy, dtype=np.float64)
    b, co, ho, wo = gy.shape
    ci = xp.shape[1]
    p, _, _ = _patches(xp, kh, kw, stride)
    cols = p.transpose(0, 2, 3, 1, 4, 5).reshape(b * ho * wo, ci * kh * kw)
    gflat = gy.transpose(0, 2, 3, 1).reshape(b * ho * wo, co)
    gw = gflat.T @ cols
    return np.ascontiguousarray(gw.reshape(co, ci, kh, kw))
