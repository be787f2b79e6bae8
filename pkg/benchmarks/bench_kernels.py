"""Time the compiled trial kernel against the numpy fallback.

Workload shape mimics one downlink trial at moderate cluster size: a few
hundred cluster groups, each a handful of BSs serving 2 users per BS.

Run:  python3 benchmarks/bench_kernels.py
"""

import time

import numpy as np

from netmimo._kernels import ENGINE, solve_trial_groups


def build_workload(seed, n_groups, mean_bs, users_per_bs=2, m=4):
    rng = np.random.default_rng(seed)
    n_bs = 4 * n_groups
    n_users = 2 * n_groups + 1
    bs_xy = rng.uniform(-6000.0, 6000.0, (n_bs, 2))
    user_xy = rng.uniform(-6000.0, 6000.0, (n_users, 2))
    bs_lists, user_lists, tcols = [], [], []
    for _ in range(n_groups):
        b = max(1, int(rng.poisson(mean_bs)))
        j = users_per_bs * b
        bs_lists.append(np.sort(rng.choice(n_bs, size=b, replace=False)))
        user_lists.append(rng.choice(n_users - 1, size=j, replace=False))
        tcols.append(int(rng.integers(0, j)))
    bs_indptr = np.zeros(n_groups + 1, dtype=np.int64)
    bs_indptr[1:] = np.cumsum([len(x) for x in bs_lists])
    u_indptr = np.zeros(n_groups + 1, dtype=np.int64)
    u_indptr[1:] = np.cumsum([len(x) for x in user_lists])
    return (bs_xy, user_xy, bs_indptr,
            np.concatenate(bs_lists).astype(np.int64), u_indptr,
            np.concatenate(user_lists).astype(np.int64),
            np.array(tcols, dtype=np.int64), n_users - 1, 424242, m,
            0.392, 3.76)


def time_engine(args, engine, repeats):
    solve_trial_groups(*args, engine=engine)  # warm up
    start = time.perf_counter()
    for _ in range(repeats):
        solve_trial_groups(*args, engine=engine)
    return (time.perf_counter() - start) / repeats


def main():
    print(f"default engine: {ENGINE}")
    for mean_bs, n_groups in [(2, 150), (6, 550), (10, 900)]:
        args = build_workload(1234, n_groups, mean_bs)
        t_np = time_engine(args, "numpy", 3)
        line = (f"groups={n_groups:4d} mean_bs={mean_bs:2d} "
                f"numpy {1e3 * t_np:8.2f} ms/trial")
        if ENGINE == "cython":
            t_cy = time_engine(args, "cython", 10)
            own_c, oth_c = solve_trial_groups(*args, engine="cython")
            own_f, oth_f = solve_trial_groups(*args, engine="numpy")
            err = np.max(np.abs(oth_c - oth_f) / np.abs(oth_f))
            line += (f"  cython {1e3 * t_cy:7.2f} ms/trial "
                     f"  speedup {t_np / t_cy:5.1f}x  max rel diff {err:.1e}")
        print(line)


if __name__ == "__main__":
    main()
