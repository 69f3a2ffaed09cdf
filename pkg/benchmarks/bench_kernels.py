"""Time the compiled kernels against the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--repeat N] [--side PIXELS]

Workloads mirror what the pipeline actually does: encode/decode on
blobby masks, run-merge intersection on RLE pairs, polygon scanline
rasterization.  Reports per-op microseconds and the speedup factor.
"""

import argparse
import time

import numpy as np

from maskbench.masks import _kernels_py

try:
    from maskbench.masks import _kernels_cy
except ImportError:
    _kernels_cy = None


def blobby_mask(rng, side):
    """Random mask with run structure closer to real segmentations than
    iid noise (iid is the codec's worst case and nothing like food)."""
    yy, xx = np.mgrid[0:side, 0:side]
    m = np.zeros((side, side), dtype=np.uint8)
    for _ in range(rng.integers(1, 4)):
        cx, cy = rng.uniform(0, side, 2)
        r = rng.uniform(side * 0.1, side * 0.4)
        m |= (((xx - cx) ** 2 + (yy - cy) ** 2) <= r * r).astype(np.uint8)
    return m


def timeit(fn, args_list, repeat):
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        for args in args_list:
            fn(*args)
        best = min(best, time.perf_counter() - start)
    return best / len(args_list)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--side", type=int, default=256)
    parser.add_argument("--cases", type=int, default=40)
    args = parser.parse_args()

    if _kernels_cy is None:
        print("compiled kernels not built; run pip install -e . first")
        return

    rng = np.random.default_rng(0)
    mask_args = [(blobby_mask(rng, args.side),) for _ in range(args.cases)]
    counts = [
        (np.asarray(_kernels_py.encode(m), dtype=np.int64),) for (m,) in mask_args
    ]
    decode_args = [(c, args.side, args.side) for (c,) in counts]
    pair_args = [
        (counts[i][0], counts[(i + 1) % len(counts)][0]) for i in range(len(counts))
    ]
    poly_args = []
    for _ in range(args.cases):
        n = int(rng.integers(3, 12))
        angles = np.sort(rng.uniform(0, 2 * np.pi, n))
        radii = rng.uniform(args.side * 0.1, args.side * 0.45, n)
        pts = np.stack(
            [
                args.side / 2 + radii * np.cos(angles),
                args.side / 2 + radii * np.sin(angles),
            ],
            axis=1,
        )
        poly_args.append(([np.ascontiguousarray(pts)], args.side, args.side))

    rows = [
        ("encode", mask_args),
        ("decode", decode_args),
        ("intersection_area", pair_args),
        ("rasterize", poly_args),
    ]
    print(f"side={args.side}  cases={args.cases}  repeat={args.repeat}")
    print(f"{'op':<18}{'python':>12}{'cython':>12}{'speedup':>10}")
    for name, workload in rows:
        t_py = timeit(getattr(_kernels_py, name), workload, args.repeat)
        t_cy = timeit(getattr(_kernels_cy, name), workload, args.repeat)
        print(
            f"{name:<18}{t_py * 1e6:>10.1f}us{t_cy * 1e6:>10.1f}us"
            f"{t_py / t_cy:>9.1f}x"
        )


if __name__ == "__main__":
    main()
