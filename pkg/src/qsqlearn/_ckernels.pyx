# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops. Signatures mirror ``qsqlearn._pykernels``."""
import numpy as np

cimport numpy as cnp

cnp.import_array()


def fwht_inplace(double[::1] a):
    """Unnormalized Walsh-Hadamard butterfly over a length-2^n vector."""
    cdef Py_ssize_t size = a.shape[0]
    cdef Py_ssize_t h = 1
    cdef Py_ssize_t i, j
    cdef double x, y
    while h < size:
        for i in range(0, size, 2 * h):
            for j in range(i, i + h):
                x = a[j]
                y = a[j + h]
                a[j] = x + y
                a[j + h] = x - y
        h *= 2


def fwht_rows_inplace(double[:, ::1] a):
    cdef Py_ssize_t rows = a.shape[0]
    cdef Py_ssize_t size = a.shape[1]
    cdef Py_ssize_t r, h, i, j
    cdef double x, y
    for r in range(rows):
        h = 1
        while h < size:
            for i in range(0, size, 2 * h):
                for j in range(i, i + h):
                    x = a[r, j]
                    y = a[r, j + h]
                    a[r, j] = x + y
                    a[r, j + h] = x - y
            h *= 2


def pattern_mass(const double[::1] coeffs, long long ones, long long free):
    """Sum of coeffs[S]**2 over S = ones | sub, sub a submask of free."""
    cdef double total = 0.0
    cdef double v
    cdef long long sub = free
    while True:
        v = coeffs[ones | sub]
        total += v * v
        if sub == 0:
            break
        sub = (sub - 1) & free
    return total


def pattern_mass_rows(const double[:, ::1] coeffs, long long ones, long long free):
    cdef Py_ssize_t rows = coeffs.shape[0]
    cdef Py_ssize_t r
    cdef long long sub
    cdef double total, v
    out = np.empty(rows, dtype=np.float64)
    cdef double[::1] res = out
    for r in range(rows):
        total = 0.0
        sub = free
        while True:
            v = coeffs[r, ones | sub]
            total += v * v
            if sub == 0:
                break
            sub = (sub - 1) & free
        res[r] = total
    return out
