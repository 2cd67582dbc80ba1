"""Pure-numpy reference versions of the convolution and pooling kernels.

Every routine here produces bit-identical output to its compiled twin in
``_kernels.pyx``: copies are exact, and accumulations run in the same
order (kernel offset major) so floating-point sums agree.
"""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def im2col(x, kh, kw):
    """(N, C, H, W) -> (N*Ho*Wo, C*kh*kw) patch matrix, stride 1, no padding."""
    n, c, h, w = x.shape
    ho, wo = h - kh + 1, w - kw + 1
    win = sliding_window_view(x, (kh, kw), axis=(2, 3))  # N, C, Ho, Wo, kh, kw
    return np.ascontiguousarray(win.transpose(0, 2, 3, 1, 4, 5)).reshape(n * ho * wo, c * kh * kw)


def col2im(cols, shape, kh, kw):
    """Adjoint of :func:`im2col`; overlapping patch entries are summed."""
    n, c, h, w = shape
    ho, wo = h - kh + 1, w - kw + 1
    cols6 = cols.reshape(n, ho, wo, c, kh, kw)
    dx = np.zeros(shape, dtype=np.float64)
    for i in range(kh):
        for j in range(kw):
            dx[:, :, i:i + ho, j:j + wo] += cols6[:, :, :, :, i, j].transpose(0, 3, 1, 2)
    return dx


def maxpool_forward(x, k):
    """Non-overlapping k*k max pooling. Returns (out, argmax) where argmax is
    the row-major offset of the first maximum inside each window."""
    n, c, h, w = x.shape
    ho, wo = h // k, w // k
    win = x[:, :, :ho * k, :wo * k].reshape(n, c, ho, k, wo, k)
    win = win.transpose(0, 1, 2, 4, 3, 5).reshape(n, c, ho, wo, k * k)
    arg = win.argmax(axis=-1)
    out = np.take_along_axis(win, arg[..., None], axis=-1)[..., 0]
    return np.ascontiguousarray(out), arg.astype(np.intp)


def maxpool_backward(dout, arg, k, shape):
    n, c, h, w = shape
    ho, wo = dout.shape[2], dout.shape[3]
    dwin = np.zeros((n, c, ho, wo, k * k), dtype=np.float64)
    np.put_along_axis(dwin, arg[..., None], dout[..., None], axis=-1)
    dwin = dwin.reshape(n, c, ho, wo, k, k).transpose(0, 1, 2, 4, 3, 5).reshape(n, c, ho * k, wo * k)
    dx = np.zeros(shape, dtype=np.float64)
    dx[:, :, :ho * k, :wo * k] = dwin
    return dx
