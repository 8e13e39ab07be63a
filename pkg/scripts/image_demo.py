"""Round-trip a 32x32 grayscale image through encode, cut (2 cuts), knit and decode.

    python3 scripts/image_demo.py [--pgm in.pgm] [--out results/image]
"""
import argparse
import time
from pathlib import Path

import numpy as np

from cutknit.cli import PipelineConfig, cmd_image
from cutknit.pgm import PgmImage, write_pgm


def synthetic_image(size: int = 32) -> PgmImage:
    yy, xx = np.mgrid[0:size, 0:size]
    rings = np.cos(np.hypot(xx - size / 2, yy - size / 2) / 2.5)
    ramp = xx / (size - 1)
    return PgmImage(np.rint((0.6 * rings + 0.4 * (2 * ramp - 1) + 1) / 2 * 255).clip(0, 255).astype(int))


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--pgm", help="input PGM; a synthetic 32x32 image is used when omitted")
    ap.add_argument("--out", default="results/image")
    ap.add_argument("--mode", default="analytic", choices=("analytic", "sampled"))
    ap.add_argument("--shots", type=int, default=100_000)
    ap.add_argument("--cuts", type=int, default=2)
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    src = Path(args.pgm) if args.pgm else out / "input.pgm"
    if not args.pgm:
        src.write_bytes(write_pgm(synthetic_image()))
    cfg = PipelineConfig(n_addr=9, n_data=2, max_cuts=args.cuts, mode=args.mode, shots=args.shots,
                         output_dir=str(out))
    t0 = time.perf_counter()
    res = cmd_image(cfg, str(src), str(out / "decoded.pgm"))
    print(f"rmse {100 * res.rmse_fraction:.4f}% of range  rvf {res.rvf:.5f}  "
          f"{res.pipeline.record.subexperiment_count} subexperiments  {time.perf_counter() - t0:.1f} s")


if __name__ == "__main__":
    main()
