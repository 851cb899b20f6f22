#!/usr/bin/env python3
"""Reference optimum for fixtures/five_tree.json.

Fits the rank-k penalty to the training CSV with numpy, enumerates every grid
cell, minimizes the penalty over each cell's closure by trying every face of
the box, and writes the best cell to fixtures/five_tree_oracle.json.

    python3 scripts/five_tree_oracle.py [--lambda 1.0] [--rank 1]
"""

import argparse
import itertools
import json
from pathlib import Path

import numpy as np

ROOT = Path(__file__).resolve().parent.parent


def evaluate(tree, x):
    node = tree[0]
    while "split" in node:
        s = node["split"]
        node = tree[s["left"] if x[s["var"]] < s["value"] else s["right"]]
    return node["leaf"]


def penalty_terms(data, rank, lam):
    mu = data.mean(axis=0)
    sigma = data.std(axis=0, ddof=1)
    z = (data - mu) / sigma
    corr = z.T @ z / (len(data) - 1)
    vals, vecs = np.linalg.eigh(corr)
    phi = vecs[:, np.argsort(vals)[::-1][:rank]]
    m = np.eye(len(mu)) - phi @ phi.T
    d = np.diag(1.0 / sigma)
    # lam * |M D (x - mu)|^2 = x'Ax + b'x + c
    q = d @ m.T @ m @ d
    a = lam * q
    b = -2.0 * lam * q @ mu
    c = lam * mu @ q @ mu

    def value(x):
        r = m @ ((x - mu) / sigma)
        return lam * float(r @ r)

    return a, b, c, value


def box_min(a, b, lo, hi, value):
    n = len(lo)
    best = (np.inf, None)
    for state in itertools.product((0, 1, 2), repeat=n):
        x = np.where(np.array(state) == 0, lo, hi).astype(float)
        free = [i for i in range(n) if state[i] == 2]
        if free:
            fixed = [i for i in range(n) if state[i] != 2]
            h = 2.0 * a[np.ix_(free, free)]
            rhs = -(b[free] + 2.0 * a[np.ix_(free, fixed)] @ x[fixed])
            if abs(np.linalg.det(h)) < 1e-12 * max(1.0, np.abs(h).max()) ** len(free):
                continue
            x[free] = np.linalg.solve(h, rhs)
            if np.any(x[free] < lo[free] - 1e-12) or np.any(x[free] > hi[free] + 1e-12):
                continue
            x = np.clip(x, lo, hi)
        v = value(x)
        if v < best[0]:
            best = (v, x)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--lambda", dest="lam", type=float, default=1.0)
    ap.add_argument("--rank", type=int, default=1)
    args = ap.parse_args()

    model = json.loads((ROOT / "fixtures/five_tree.json").read_text())
    data = np.loadtxt(ROOT / "fixtures/five_tree_train.csv", delimiter=",", skiprows=1)
    lo_box, hi_box = np.array(model["lower"]), np.array(model["upper"])
    n = model["n"]

    rows = []
    for i in range(n):
        vals = {node["split"]["value"] for t in model["trees"] for node in t
                if "split" in node and node["split"]["var"] == i}
        inner = sorted(v for v in vals if lo_box[i] < v < hi_box[i])
        rows.append([lo_box[i], *inner, hi_box[i]])

    a, b, _, value = penalty_terms(data, args.rank, args.lam)
    best = (np.inf, None, None)
    for idx in itertools.product(*(range(len(r) - 1) for r in rows)):
        lo = np.array([rows[i][j] for i, j in enumerate(idx)])
        hi = np.array([rows[i][j + 1] for i, j in enumerate(idx)])
        mid = 0.5 * (lo + hi)
        f = sum(evaluate(t, mid) for t in model["trees"])
        p, x = box_min(a, b, lo, hi, value)
        if p + f < best[0]:
            best = (p + f, x, idx)

    out = {
        "lambda": args.lam,
        "rank": args.rank,
        "optimum": best[0],
        "x": best[1].tolist(),
        "cell": list(best[2]),
        "cells": int(np.prod([len(r) - 1 for r in rows])),
    }
    (ROOT / "fixtures/five_tree_oracle.json").write_text(json.dumps(out, indent=2) + "\n")
    print(json.dumps(out))


if __name__ == "__main__":
    main()
