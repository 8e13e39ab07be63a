"""Subexperiment count and wall time of cut-and-knit against the number of cuts.

    python3 scripts/overhead_timing.py --max-cuts 3 --out results/overhead.csv
"""
import argparse
import csv
import math
from pathlib import Path

from cutknit.cli import PipelineConfig, overhead_scan
from cutknit.cutting import qpd_overhead, sampling_variance_bound


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--n-addr", type=int, default=4)
    ap.add_argument("--n-data", type=int, default=2)
    ap.add_argument("--max-cuts", type=int, default=3)
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--mode", default="analytic", choices=("analytic", "sampled"))
    ap.add_argument("--out", default="results/overhead.csv")
    args = ap.parse_args()
    cfg = PipelineConfig(n_addr=args.n_addr, n_data=args.n_data, mode=args.mode)
    rows = overhead_scan(cfg, range(args.max_cuts + 1), args.repeats)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["cut_count", "subexperiment_count", "wall_time_s", "qpd_overhead", "variance_bound"])
        for m, subs, t in rows:
            w.writerow([m, subs, repr(t), qpd_overhead(m), sampling_variance_bound(m)])
    prev = None
    for m, subs, t in rows:
        slope = "" if prev is None else f"  log-ratio {math.log(t / prev):.3f} (log 6 = {math.log(6):.3f})"
        print(f"M={m}  {subs:5d} subexperiments  {t:.4f} s{slope}")
        prev = t


if __name__ == "__main__":
    main()
