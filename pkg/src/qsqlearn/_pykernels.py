"""Numpy implementations of the hot kernels, used when the extension is absent."""
import numpy as np


def fwht_inplace(a):
    """Unnormalized Walsh-Hadamard butterfly over a length-2^n vector."""
    size = a.shape[0]
    h = 1
    while h < size:
        view = a.reshape(-1, 2, h)
        x = view[:, 0, :].copy()
        view[:, 0, :] += view[:, 1, :]
        view[:, 1, :] = x - view[:, 1, :]
        h *= 2


def fwht_rows_inplace(a):
    rows, size = a.shape
    h = 1
    while h < size:
        view = a.reshape(rows, -1, 2, h)
        x = view[:, :, 0, :].copy()
        view[:, :, 0, :] += view[:, :, 1, :]
        view[:, :, 1, :] = x - view[:, :, 1, :]
        h *= 2


def submasks(ones, free):
    """All indices ``ones | sub`` for ``sub`` a submask of ``free``, as an array."""
    idx = np.array([ones], dtype=np.int64)
    bit = 0
    while free >> bit:
        if (free >> bit) & 1:
            idx = np.concatenate([idx, idx | (1 << bit)])
        bit += 1
    return idx


def pattern_mass(coeffs, ones, free):
    vals = coeffs[submasks(ones, free)]
    return float(np.dot(vals, vals))


def pattern_mass_rows(coeffs, ones, free):
    vals = coeffs[:, submasks(ones, free)]
    return np.einsum("ij,ij->i", vals, vals)
