"""Brute-force references for the attention masks."""

import math

import numpy as np


def brute_force_allowed(ell, rho):
    """Selection rule evaluated entry by entry with explicit offsets."""
    half = ell // 2
    cap = math.ceil(ell / 2)
    out = np.zeros((ell + 1, ell + 1), dtype=bool)
    for m in range(-half, half + 1):
        for n in range(-half, half + 1):
            if m != 0 and abs(n) <= min(rho * cap / abs(m), cap) + 1e-9:
                out[half + m, half + n] = True
    return out


def union_oracle(ell, rho, block):
    """Set union of the single-target zero sets shifted along the diagonal."""
    single = {(i, j) for i, j in zip(*np.nonzero(brute_force_allowed(ell, rho)))}
    cells = {(i + s, j + s) for s in range(block) for i, j in single}
    out = np.zeros((ell + block, ell + block), dtype=bool)
    for i, j in cells:
        out[i, j] = True
    return out
