"""Closed forms for 1x1 and 2x2 linear algebra; numpy.linalg otherwise.

The closed loop evaluates these four times per integration step on tiny
matrices, where LAPACK call overhead dominates the arithmetic.
"""

import math

import numpy as np


def det(A):
    n = A.shape[0]
    if n == 1:
        return float(A[0, 0])
    if n == 2:
        return float(A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0])
    return float(np.linalg.det(A))


def inv(A):
    n = A.shape[0]
    if n == 1:
        return np.array([[1.0 / A[0, 0]]])
    if n == 2:
        d = A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]
        return np.array([[A[1, 1], -A[0, 1]], [-A[1, 0], A[0, 0]]]) / d
    return np.linalg.inv(A)


def solve(A, b):
    n = A.shape[0]
    if n == 1:
        return b / A[0, 0]
    if n == 2:
        a, c, d = A[0, 0], A[0, 1], A[1, 1]
        e = A[1, 0]
        den = a * d - c * e
        return np.array([(d * b[0] - c * b[1]) / den, (a * b[1] - e * b[0]) / den])
    return np.linalg.solve(A, b)


def cond_sym(A):
    """2-norm condition number of a symmetric matrix."""
    n = A.shape[0]
    if n == 1:
        return 1.0 if A[0, 0] != 0.0 else math.inf
    if n == 2:
        return cond_sym2(float(A[0, 0]), float(A[0, 1]), float(A[1, 1]))
    return float(np.linalg.cond(A))


def cond_sym2(a, b, d):
    """Condition number of [[a, b], [b, d]] from its eigenvalues."""
    mean = 0.5 * (a + d)
    rad = math.hypot(0.5 * (a - d), b)
    lo, hi = abs(mean - rad), abs(mean + rad)
    big, small = max(lo, hi), min(lo, hi)
    return big / small if small > 0.0 else math.inf
