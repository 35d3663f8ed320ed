"""Independent reference values frozen into the Rust tests.

Run with: python3 scripts/derive_oracles.py
"""
import itertools
import math

import numpy as np
from scipy.optimize import linprog

np.set_printoptions(precision=17)


def rbf_position():
    # 10x10 centres at {0, 1/9, ..., 1}^2, x-major, sigma = 0.0123
    cs = [(i / 9, j / 9) for i in range(10) for j in range(10)]
    return [math.exp(-((0.5 - cx) ** 2 + (0.5 - cy) ** 2) / 0.0123) for cx, cy in cs]


def rbf_orientation(theta=0.0):
    out = []
    for j in range(20):
        c = -math.pi + j * 2 * math.pi / 20
        d = (theta - c) % (2 * math.pi)
        d = min(d, 2 * math.pi - d)
        out.append(math.exp(-d * d / (math.pi / 5)))
    return out


ATOMS = np.array([
    [0, 0, 0, 0, 0],
    [1, 0, 1, 0, 0],
    [1, 0, 0, 1, 0],
    [0, 1, 1, 0, 0],
    [0, 1, 0, 1, 0],
    [0, 0, 0, 0, 1],
], dtype=float)


def lad(rewards):
    """min_w sum_j |r_j - atoms_j . w| as a linear program."""
    n, d = ATOMS.shape
    # variables: w (free, d), t (n) >= |residual|
    c = np.concatenate([np.zeros(d), np.ones(n)])
    a_ub = np.block([[ATOMS, -np.eye(n)], [-ATOMS, -np.eye(n)]])
    b_ub = np.concatenate([rewards, -rewards])
    bounds = [(None, None)] * d + [(0, None)] * n
    res = linprog(c, A_ub=a_ub, b_ub=b_ub, bounds=bounds, method="highs")
    return res.fun


def closed_form_check(trials=2000):
    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(trials):
        r = np.concatenate([[0.0], rng.uniform(-1, 1, 4), [1.0]])
        cf = abs(r[1] - r[2] - r[3] + r[4])
        worst = max(worst, abs(lad(r) - cf))
    return worst


if __name__ == "__main__":
    print("rbf_position(0.5,0.5; 0.0123) =", repr(rbf_position()))
    print("rbf_orientation(0) =", repr(rbf_orientation()))
    print("torus (0,0)-(0.5,0.5) =", repr(math.sqrt(0.5)))
    general = np.array([0.0, 0.3, -0.7, 0.55, 0.9, 1.0])
    l1 = lad(general)
    print("LAD l1 for", general.tolist(), "=", repr(l1), "mae =", repr(l1 / 6))
    print("max |LAD - |r2-r3-r4+r5|| over random tasks =", closed_form_check())
