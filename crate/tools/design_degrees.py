#!/usr/bin/env python3
"""Design irregular LDPC degree distributions for the code pool.

Uses the Gaussian approximation of density evolution (Chung et al.): for a
check distribution concentrated on two consecutive degrees, the variable
distribution maximizing the rate at a given channel quality is a linear
program. A bisection on the channel quality finds the best threshold at which
the target rate is still reachable, and the check degree is swept.

The channel is a BI-AWGN matched in capacity to a BSC; the reported ``f*`` is
``(1 - R) / h2(q*)`` for the BSC crossover ``q*`` of equal capacity.

Writes ``rate_<pct>.txt`` files (node-perspective fractions) understood by
``qrir gen-matrices``.
"""

import argparse
import os

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq, linprog


def phi(x):
    x = np.asarray(x, float)
    out = np.ones_like(x)
    lo = (x > 0) & (x < 10)
    out[lo] = np.exp(-0.4527 * x[lo] ** 0.86 + 0.0218)
    hi = x >= 10
    xh = x[hi]
    out[hi] = np.sqrt(np.pi / xh) * np.exp(-xh / 4) * (1 - 10 / (7 * xh))
    return out


_GRID = np.concatenate([np.linspace(1e-6, 10, 20000), np.linspace(10, 400, 20000)[1:]])
_PHI_GRID = phi(_GRID)


def phi_inv(y):
    y = np.clip(np.asarray(y, float), _PHI_GRID[-1], 1 - 1e-12)
    return np.interp(-y, -_PHI_GRID, _GRID)


def h2(p):
    return -p * np.log2(p) - (1 - p) * np.log2(1 - p)


def awgn_capacity(sigma):
    def integrand(y):
        density = np.exp(-((y - 1) ** 2) / (2 * sigma**2)) / np.sqrt(2 * np.pi * sigma**2)
        return density * np.log2(1 + np.exp(-2 * y / sigma**2))

    return 1 - quad(integrand, -30, 30, limit=200)[0]


def best_lambda(m0, vdeg, rho, rate, deg2_cap):
    """Edge-perspective variable distribution of maximal rate, or None."""
    r = np.logspace(-8, 0, 400) * phi(np.array([m0]))[0]
    g = np.zeros_like(r)
    for j, w in rho:
        g += w * phi_inv(1 - (1 - r) ** (j - 1))
    a_ub = np.array([phi(m0 + (i - 1) * g) for i in vdeg]).T
    b_ub = r * (1 - 1e-4)
    # Degree-2 columns at most deg2_cap (1 - R) of all columns.
    row = np.array([-deg2_cap * (1 - rate) / i for i in vdeg])
    row[0] += 0.5
    a_ub = np.vstack([a_ub, row])
    b_ub = np.append(b_ub, 0.0)
    rho_prime = sum(w * (j - 1) for j, w in rho)
    bounds = [(0, None)] * len(vdeg)
    bounds[0] = (0, np.exp(m0 / 4) / rho_prime)  # stability condition
    res = linprog(
        -np.array([1.0 / i for i in vdeg]),
        A_ub=a_ub,
        b_ub=b_ub,
        A_eq=[np.ones(len(vdeg))],
        b_eq=[1],
        bounds=bounds,
        method="highs",
    )
    if not res.success:
        return None, None
    inv_rho = sum(w / j for j, w in rho)
    return 1 - inv_rho / np.dot(res.x, 1.0 / np.array(vdeg)), res.x


def check_nodes(dc_avg):
    lo = int(np.floor(dc_avg))
    frac = dc_avg - lo
    return [(d, f) for d, f in [(lo, 1 - frac), (lo + 1, frac)] if f > 1e-9]


def design(rate, vdeg, dc_grid, deg2_cap):
    best = None
    for dc_avg in dc_grid:
        nodes = check_nodes(dc_avg)
        total = sum(d * f for d, f in nodes)
        rho = [(d, d * f / total) for d, f in nodes]

        def reachable(m0):
            r, _ = best_lambda(m0, vdeg, rho, rate, deg2_cap)
            return r is not None and r >= rate

        lo, hi = 0.05, 60.0
        if not reachable(hi):
            continue
        for _ in range(40):
            mid = np.sqrt(lo * hi)
            if reachable(mid):
                hi = mid
            else:
                lo = mid
        _, lam = best_lambda(hi, vdeg, rho, rate, deg2_cap)
        capacity = awgn_capacity(np.sqrt(2 / hi))
        q = brentq(lambda p: h2(p) - (1 - capacity), 1e-9, 0.5 - 1e-12)
        f = (1 - rate) / h2(q)
        if best is None or f < best[0]:
            best = (f, nodes, lam, q)
    return best


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--max-degree", type=int, default=12)
    ap.add_argument("--degree2-cap", type=float, default=0.9)
    ap.add_argument("--out", default="config/distributions")
    args = ap.parse_args()
    vdeg = [d for d in [2, 3, 4, 5, 6, 7, 8, 10, 12, 15, 20] if d <= args.max_degree]
    os.makedirs(args.out, exist_ok=True)
    for pct in range(50, 95, 5):
        rate = pct / 100
        base = 3 / (1 - rate)
        dc_grid = np.arange(max(4, base * 1.4), base * 4 + 4, 0.25)
        f, nodes, lam, q = design(rate, vdeg, dc_grid, args.degree2_cap)
        node = np.array(lam) / np.array(vdeg)
        node /= node.sum()
        keep = [(d, n) for d, n in zip(vdeg, node) if n > 1e-4]
        total = sum(n for _, n in keep)
        with open(os.path.join(args.out, f"rate_{pct}.txt"), "w") as fh:
            fh.write("# node-perspective degree fractions\n[variable]\n")
            for d, n in keep:
                fh.write(f"{d} {n / total:.6f}\n")
            fh.write("[check]\n")
            for d, n in nodes:
                fh.write(f"{d} {n:.6f}\n")
        print(f"R={rate:.2f}  f*={f:.4f}  q*={q:.4f}  variable {[(d, round(n / total, 4)) for d, n in keep]}")


if __name__ == "__main__":
    main()
