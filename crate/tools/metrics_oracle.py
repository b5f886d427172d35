#!/usr/bin/env python3
"""Writes the block-summary fixture used by crates/core/tests/metrics.rs.

Frames are drawn at random; the expected summary is computed here with
plain floating point, independently of the Rust implementation.
"""

import csv
import math
import random
import sys

ELL = 32000
RATES = [50, 55, 60, 65, 70, 75, 80, 85, 90]
KAPPA, E1_FACTOR, GEN_TIME = 0.9, 1.1, 0.25


def h2(p):
    return -p * math.log2(p) - (1 - p) * math.log2(1 - p)


def main(out_dir):
    rng = random.Random(20240611)
    rows = []
    for i in range(50):
        q = rng.uniform(0.005, 0.05)
        pct = min(RATES, key=lambda r: abs(1 - r / 100 - 1.2 * h2(q)))
        p = rng.randrange(0, 1200)
        s = 4800 - p
        verified = rng.random() > 0.1
        if not verified:
            q = None
        elif rng.random() < 0.05:
            q = 0.0
        rows.append(dict(frame_id=i, rate_pct=pct, p=p, s=s, d=rng.randrange(0, 300), verified=int(verified),
                         qber="" if q is None else repr(q), iterations=rng.randrange(1, 400),
                         elapsed_ms=repr(rng.uniform(0.5, 80.0))))
    with open(f"{out_dir}/metrics_block.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        w.writerows(rows)

    ok = [r for r in rows if r["verified"]]
    effs, qbers = [], []
    for r in ok:
        q = float(r["qber"])
        qbers.append(q)
        if q > 0:
            syn = ELL * (100 - r["rate_pct"]) // 100
            effs.append((syn - r["p"] + r["d"]) / ((ELL - r["p"] - r["s"]) * h2(q)))
    frames = len(rows)
    fer = (frames - len(ok)) / frames
    mean_f = sum(effs) / len(effs)
    std_f = math.sqrt(sum((x - mean_f) ** 2 for x in effs) / (len(effs) - 1))
    mean_it = sum(r["iterations"] for r in ok) / len(ok)
    mean_q = sum(qbers) / len(qbers)
    ell_block = sum(ELL - r["p"] - r["s"] for r in rows)
    e1 = min(E1_FACTOR * mean_q, 0.5)
    l_sec = max(0.0, ell_block * (1 - fer) * (KAPPA * (1 - h2(e1)) - mean_f * h2(mean_q)))
    tau = sum(float(r["elapsed_ms"]) for r in rows) / 1000 + GEN_TIME
    with open(f"{out_dir}/metrics_expected.txt", "w") as fh:
        for k, v in [("fer", fer), ("mean_f_ec", mean_f), ("std_f_ec", std_f), ("mean_iterations", mean_it),
                     ("mean_qber", mean_q), ("ell_block", ell_block), ("l_sec", l_sec), ("tau_s", tau),
                     ("r_sec", l_sec / tau)]:
            fh.write(f"{k} {v!r}\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "crates/core/tests/fixtures")
