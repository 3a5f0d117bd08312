"""Naive reference implementations used as independent oracles in tests."""

import numpy as np


def entrywise_ito(a_values, c_values, increments):
    """I(i,j) = sum_k sum_r sum_m A_m(i,k) C_m(r,j) dB_m(k,r), by explicit loops."""
    n, d = increments.shape[0], increments.shape[1]
    out = np.zeros((d, d))
    for i in range(d):
        for j in range(d):
            total = 0.0
            for k in range(d):
                for r in range(d):
                    for m in range(n):
                        total += a_values[m][i, k] * c_values[m][r, j] * increments[m][k, r]
            out[i, j] = total
    return out
