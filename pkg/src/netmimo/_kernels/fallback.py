"""Pure numpy trial kernel; same contract as the compiled core.

One trial hands over a batch of cluster groups. A group is a BS set plus
the list of users it jointly serves with zero forcing; the kernel
regenerates every needed channel from the counter RNG, solves the group's
Gram system once, and reports how much power the requested beam columns
put onto a single receiving user.

Group g with stacked channel matrix H (rows = BS antennas, columns =
served users) beamforms column j as w_j = H G^{-1} e_j / sqrt(G^{-1}_jj),
G = H^H H. With g the stacked channel toward the receiver and
z = G^{-1} H^H g, the received power from beam j is |z_j|^2 / G^{-1}_jj.
"""

import numpy as np
from scipy.linalg import cho_solve, solve_triangular

from . import rng


def _gains(bs_pos, user_pos, d0, alpha):
    d = np.hypot(bs_pos[:, None, 0] - user_pos[None, :, 0],
                 bs_pos[:, None, 1] - user_pos[None, :, 1])
    return (1.0 + d / d0) ** (-alpha)


def _stacked(bs_pos, bs_ids, user_pos, user_ids, master, m, d0, alpha):
    # (m*B, J) channel matrix, BS-major rows, matching the propagation
    # layer's stacking convention
    b, j = len(bs_ids), len(user_ids)
    seeds = rng.pair_seed(master, np.repeat(bs_ids, j), np.tile(user_ids, b))
    fades = rng.complex_fading(seeds, m).reshape(b, j, m)
    amp = np.sqrt(_gains(bs_pos, user_pos, d0, alpha))
    h = fades * amp[:, :, None]
    return h.transpose(0, 2, 1).reshape(b * m, j)


def solve_trial_groups(bs_xy, user_xy, bs_indptr, bs_idx, user_indptr,
                       user_idx, target_col, receiver, master_seed, m,
                       d0, alpha):
    """Per-group beam power onto one receiver.

    target_col[g] >= 0 restricts group g to that single beam column
    (reported in own[g], remaining columns summed in others[g]);
    target_col[g] == -1 sums every column into others[g].
    Returns (own, others), both (n_groups,) float64.
    """
    bs_xy = np.asarray(bs_xy, dtype=float)
    user_xy = np.asarray(user_xy, dtype=float)
    n_groups = len(target_col)
    own = np.zeros(n_groups)
    others = np.zeros(n_groups)
    rec = user_xy[int(receiver)][None, :]
    rec_id = np.array([int(receiver)], dtype=np.int64)
    for gi in range(n_groups):
        bs_ids = bs_idx[bs_indptr[gi]:bs_indptr[gi + 1]]
        u_ids = user_idx[user_indptr[gi]:user_indptr[gi + 1]]
        if len(bs_ids) == 0 or len(u_ids) == 0:
            continue
        bpos = bs_xy[bs_ids]
        h = _stacked(bpos, bs_ids, user_xy[u_ids], u_ids, master_seed, m,
                     d0, alpha)
        g_vec = _stacked(bpos, bs_ids, rec, rec_id, master_seed, m,
                         d0, alpha)[:, 0]
        gram = h.conj().T @ h
        low = np.linalg.cholesky(gram)
        z = cho_solve((low, True), h.conj().T @ g_vec, check_finite=False)
        linv = solve_triangular(low, np.eye(len(u_ids)), lower=True,
                                check_finite=False)
        dinv = np.einsum("ij,ij->j", linv.conj(), linv).real
        leak = np.abs(z) ** 2 / dinv
        tc = int(target_col[gi])
        if tc >= 0:
            own[gi] = leak[tc]
            others[gi] = leak.sum() - leak[tc]
        else:
            others[gi] = leak.sum()
    return own, others
