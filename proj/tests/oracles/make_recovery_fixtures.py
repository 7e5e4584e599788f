"""Regenerates recovery_fixtures.json with a generic conic solver.

The C++ tests only read the JSON; rerun this script (numpy + cvxpy) to refresh it.
"""

import json
from pathlib import Path

import cvxpy as cp
import numpy as np


def instance(rng, idx):
    n_blocks = int(rng.integers(2, 6))
    sizes = [int(s) for s in rng.integers(1, 4, size=n_blocks)]
    n = sum(sizes)
    while n > 12:
        sizes.pop()
        n = sum(sizes)
    m = int(rng.integers(max(1, n // 3), n))
    A = rng.standard_normal((m, n))
    x = np.zeros(n)
    starts = np.cumsum([0] + sizes[:-1])
    active = rng.random(len(sizes)) < 0.4
    if not active.any():
        active[rng.integers(len(sizes))] = True
    for b, on in enumerate(active):
        if on:
            x[starts[b]:starts[b] + sizes[b]] = rng.standard_normal(sizes[b])
    noisy = idx % 2 == 1
    y = A @ x
    eta = 0.0
    if noisy:
        e = rng.standard_normal(m)
        e *= 0.05 * np.linalg.norm(y) / np.linalg.norm(e)
        y = y + e
        eta = float(np.linalg.norm(e) * rng.uniform(0.8, 1.5))
    w = rng.uniform(0.3, 3.0, size=len(sizes))
    return sizes, A, y, eta, w


def solve(sizes, A, y, eta, w):
    n = A.shape[1]
    z = cp.Variable(n)
    starts = np.cumsum([0] + sizes[:-1])
    obj = sum(w[b] * cp.norm(z[starts[b]:starts[b] + sizes[b]], 2) for b in range(len(sizes)))
    cons = [A @ z == y] if eta == 0.0 else [cp.norm(A @ z - y, 2) <= eta]
    prob = cp.Problem(cp.Minimize(obj), cons)
    for tol in (1e-10, 1e-9, 1e-8):
        prob.solve(solver=cp.CLARABEL, tol_gap_abs=tol, tol_gap_rel=tol, tol_feas=tol, max_iter=500)
        if prob.status == cp.OPTIMAL:
            break
    assert prob.status == cp.OPTIMAL, prob.status
    return z.value, prob.value


def main():
    rng = np.random.default_rng(20190611)
    cases = []
    # Fixed small case: two blocks of two, three measurements, support on the first block.
    A = rng.standard_normal((3, 4))
    x = np.array([1.0, -0.5, 0.0, 0.0])
    fixed = ([2, 2], A, A @ x, 0.0, np.ones(2))
    for i in range(20):
        sizes, A, y, eta, w = fixed if i == 0 else instance(rng, i)
        z, val = solve(sizes, A, y, eta, w)
        cases.append({
            "block_sizes": sizes,
            "A": A.tolist(),
            "y": y.tolist(),
            "eta": eta,
            "w": list(map(float, w)),
            "x_opt": z.tolist(),
            "objective": float(val),
        })
    out = Path(__file__).with_name("recovery_fixtures.json")
    out.write_text(json.dumps({"cases": cases}, indent=1) + "\n")
    print(f"wrote {len(cases)} cases to {out}")


if __name__ == "__main__":
    main()
