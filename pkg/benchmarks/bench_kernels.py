"""Time the compiled grid kernels against their pure-Python twins.

Run from the repository root:

    python3 benchmarks/bench_kernels.py
    python3 benchmarks/bench_kernels.py --size 1200 --repeat 7

Workloads mirror real use: blob masks the size of a typical auto-sized grid
for labeling and seeded extraction, and a square-root branch continuation
over an annulus for the BFS kernel.  Outputs of the two backends are also
checked for exact equality while we are at it.
"""

import argparse
import time

import numpy as np

from planarcover._kernels import HAVE_COMPILED, pyfallback

if HAVE_COMPILED:
    from planarcover._kernels import _gridcore
else:
    _gridcore = None


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def blob_mask(rng, n):
    # smooth a noise field so components look like rasterized regions
    # rather than salt-and-pepper speckle
    field = rng.random((n, n))
    for _ in range(3):
        field = 0.25 * (
            np.roll(field, 1, 0)
            + np.roll(field, -1, 0)
            + np.roll(field, 1, 1)
            + np.roll(field, -1, 1)
        )
    return (field < np.median(field)).astype(np.uint8)


def root_workload(n):
    xs = np.linspace(-1.0, 1.0, n)
    w = xs[None, :] + 1j * xs[:, None]
    v = w * w
    valid = ((np.abs(w) > 0.15) & (np.abs(w) < 0.95)).astype(np.uint8)
    # open the annulus so the BFS has to walk around, as it does when a
    # region hugs a branch point
    valid[: n // 2, n // 2 - 1 : n // 2 + 2] = 0
    mod = np.sqrt(np.abs(v))
    theta = np.angle(v)
    j = np.arange(2)
    roots = mod[..., None] * np.exp(1j * (theta[..., None] + 2.0 * np.pi * j) / 2)
    sr = sc = int(0.75 * n)
    base = int(np.argmin(np.abs(roots[sr, sc] - w[sr, sc])))
    return (
        np.ascontiguousarray(valid),
        np.ascontiguousarray(theta),
        np.ascontiguousarray(roots),
        2,
        sr,
        sc,
        base,
    )


def equal_pair(a, b):
    if isinstance(a, tuple):
        return all(equal_pair(x, y) for x, y in zip(a, b))
    # byte-level identity, so NaN at unassigned cells compares equal
    a, b = np.asarray(a), np.asarray(b)
    return a.shape == b.shape and a.tobytes() == b.tobytes()


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size", type=int, default=800, help="grid side length")
    ap.add_argument("--repeat", type=int, default=5, help="best-of repetitions")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    if not HAVE_COMPILED:
        print("compiled extension not built; timing the pure backend only")

    rng = np.random.default_rng(args.seed)
    n = args.size
    mask = blob_mask(rng, n)
    rows, cols = np.nonzero(mask)
    seed_at = len(rows) // 2
    sr, sc = int(rows[seed_at]), int(cols[seed_at])
    rw = root_workload(n)

    cases = [
        ("label4 %dx%d" % (n, n), lambda mod: mod.label4(mask)),
        (
            "component_from_seed %dx%d" % (n, n),
            lambda mod: mod.component_from_seed(mask, sr, sc),
        ),
        ("propagate_kth_root %dx%d k=2" % (n, n), lambda mod: mod.propagate_kth_root(*rw)),
    ]

    print("%-34s %12s %12s %9s" % ("kernel", "python", "compiled", "speedup"))
    for name, call in cases:
        t_py, out_py = best_of(lambda: call(pyfallback), args.repeat)
        if _gridcore is None:
            print("%-34s %10.1f ms %12s %9s" % (name, 1e3 * t_py, "-", "-"))
            continue
        t_c, out_c = best_of(lambda: call(_gridcore), args.repeat)
        match = "" if equal_pair(out_py, out_c) else "  OUTPUT MISMATCH"
        print(
            "%-34s %10.1f ms %10.1f ms %8.1fx%s"
            % (name, 1e3 * t_py, 1e3 * t_c, t_py / t_c, match)
        )


if __name__ == "__main__":
    main()
