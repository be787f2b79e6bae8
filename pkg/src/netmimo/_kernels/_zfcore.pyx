# cython: language_level=3
"""Compiled trial kernel.

Mirrors fallback.solve_trial_groups: regenerates link channels from the
counter RNG, solves each cluster group's Gram system with LAPACK, and
reports per-group beam power onto one receiver. The two engines agree to
floating-point tolerance, not bitwise (libm vs numpy transcendentals).
"""

import numpy as np

from libc.stdint cimport uint64_t, int64_t
from libc.math cimport sqrt, log, cos, sin, hypot, pow

from scipy.linalg.cython_blas cimport zherk, zgemv
from scipy.linalg.cython_lapack cimport zpotrf, zpotrs, ztrtri

cdef extern from *:
    """
    #include <math.h>
    #if defined(__GLIBC__)
    #define zf_sincos(x, s, c) sincos((x), (s), (c))
    #else
    static void zf_sincos(double x, double *s, double *c)
    { *s = sin(x); *c = cos(x); }
    #endif
    """
    void zf_sincos(double x, double *s, double *c) noexcept nogil

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15
cdef uint64_t MIX1 = 0xBF58476D1CE4E5B9
cdef uint64_t MIX2 = 0x94D049BB133111EB
cdef uint64_t PAIR1 = 0xA24BAED4963EE407
cdef uint64_t PAIR2 = 0x9FB21C651E98DF25
cdef double TWO_PI = 6.283185307179586476925287
cdef double INV_TWO53 = 1.0 / 9007199254740992.0


cdef inline uint64_t mix64(uint64_t z) noexcept nogil:
    z = (z ^ (z >> 30)) * MIX1
    z = (z ^ (z >> 27)) * MIX2
    return z ^ (z >> 31)


cdef inline uint64_t pair_seed(uint64_t master, uint64_t b, uint64_t u) noexcept nogil:
    cdef uint64_t mstate = mix64(master + GOLDEN)
    return mix64(mix64(mstate ^ ((b + 1) * PAIR1)) ^ ((u + 1) * PAIR2))


cdef inline double uniform_at(uint64_t seed, uint64_t k) noexcept nogil:
    # counter draw k >= 1 from one link stream, strictly inside (0, 1)
    cdef uint64_t w = mix64(seed + k * GOLDEN)
    return ((w >> 11) + 0.5) * INV_TWO53


cdef inline void fill_link(uint64_t seed, double amp, int m,
                           double complex *out) noexcept nogil:
    # unit complex-normal m-vector times amp; Box-Muller pairs collapse to
    # amplitude sqrt(-ln u1) and phase 2*pi*u2 per coefficient
    cdef int a
    cdef double r, ang, s, c
    for a in range(m):
        r = amp * sqrt(-log(uniform_at(seed, 2 * a + 1)))
        ang = TWO_PI * uniform_at(seed, 2 * a + 2)
        zf_sincos(ang, &s, &c)
        out[a] = r * c + 1j * (r * s)


def solve_trial_groups(double[:, ::1] bs_xy, double[:, ::1] user_xy,
                       int64_t[::1] bs_indptr, int64_t[::1] bs_idx,
                       int64_t[::1] user_indptr, int64_t[::1] user_idx,
                       int64_t[::1] target_col, receiver, master_seed,
                       int m, double d0, double alpha):
    """Same contract as the numpy fallback; see fallback.solve_trial_groups."""
    cdef Py_ssize_t n_groups = target_col.shape[0]
    cdef uint64_t ms = <uint64_t><unsigned long long>(int(master_seed))
    cdef int64_t rec = <int64_t>(int(receiver))
    cdef double rx = user_xy[rec, 0]
    cdef double ry = user_xy[rec, 1]

    own_arr = np.zeros(n_groups)
    oth_arr = np.zeros(n_groups)
    cdef double[::1] own = own_arr
    cdef double[::1] oth = oth_arr
    if n_groups == 0:
        return own_arr, oth_arr

    cdef Py_ssize_t gi, bb, jj, i
    cdef int64_t maxb = 0, maxj = 0, nb, nj
    for gi in range(n_groups):
        nb = bs_indptr[gi + 1] - bs_indptr[gi]
        nj = user_indptr[gi + 1] - user_indptr[gi]
        if nb > maxb:
            maxb = nb
        if nj > maxj:
            maxj = nj

    cdef int lda = <int>(maxb * m), ldg = <int>maxj
    if lda == 0 or ldg == 0:
        return own_arr, oth_arr
    h_buf = np.empty((lda, maxj), dtype=np.complex128, order="F")
    g_buf = np.empty((ldg, maxj), dtype=np.complex128, order="F")
    vec_buf = np.empty(lda, dtype=np.complex128)
    y_buf = np.empty(ldg, dtype=np.complex128)
    cdef double complex[::1, :] H = h_buf
    cdef double complex[::1, :] G = g_buf
    cdef double complex[::1] gv = vec_buf
    cdef double complex[::1] y = y_buf

    # the receiver is fixed across groups, so each BS's link to it is
    # generated once and replayed from a cache
    rec_buf = np.empty((bs_xy.shape[0], m), dtype=np.complex128)
    seen_buf = np.zeros(bs_xy.shape[0], dtype=np.uint8)
    cdef double complex[:, ::1] rec_ch = rec_buf
    cdef unsigned char[::1] seen = seen_buf

    cdef char lo = b"L", ct = b"C", nodiag = b"N"
    cdef int n_i, j_i, info, inc1 = 1, nrhs = 1
    cdef double oned = 1.0, zerod = 0.0
    cdef double complex onez = 1.0, zeroz = 0.0
    cdef int64_t boff, uoff, bsid, uid
    cdef double bx, by, ux, uy, amp, dinv, power, total, own_p
    cdef int tc

    for gi in range(n_groups):
        boff = bs_indptr[gi]
        uoff = user_indptr[gi]
        nb = bs_indptr[gi + 1] - boff
        nj = user_indptr[gi + 1] - uoff
        if nb == 0 or nj == 0:
            continue
        n_i = <int>(nb * m)
        j_i = <int>nj

        for jj in range(nj):
            uid = user_idx[uoff + jj]
            ux = user_xy[uid, 0]
            uy = user_xy[uid, 1]
            for bb in range(nb):
                bsid = bs_idx[boff + bb]
                bx = bs_xy[bsid, 0]
                by = bs_xy[bsid, 1]
                amp = sqrt(pow(1.0 + hypot(bx - ux, by - uy) / d0, -alpha))
                fill_link(pair_seed(ms, <uint64_t>bsid, <uint64_t>uid), amp,
                          m, &H[bb * m, jj])
        for bb in range(nb):
            bsid = bs_idx[boff + bb]
            if seen[bsid] == 0:
                bx = bs_xy[bsid, 0]
                by = bs_xy[bsid, 1]
                amp = sqrt(pow(1.0 + hypot(bx - rx, by - ry) / d0, -alpha))
                fill_link(pair_seed(ms, <uint64_t>bsid, <uint64_t>rec), amp,
                          m, &rec_ch[bsid, 0])
                seen[bsid] = 1
            for i in range(m):
                gv[bb * m + i] = rec_ch[bsid, i]

        zherk(&lo, &ct, &j_i, &n_i, &oned, &H[0, 0], &lda, &zerod,
              &G[0, 0], &ldg)
        zpotrf(&lo, &j_i, &G[0, 0], &ldg, &info)
        if info != 0:
            raise RuntimeError("cholesky failed in trial kernel")
        zgemv(&ct, &n_i, &j_i, &onez, &H[0, 0], &lda, &gv[0], &inc1,
              &zeroz, &y[0], &inc1)
        zpotrs(&lo, &j_i, &nrhs, &G[0, 0], &ldg, &y[0], &ldg, &info)
        if info != 0:
            raise RuntimeError("solve failed in trial kernel")
        ztrtri(&lo, &nodiag, &j_i, &G[0, 0], &ldg, &info)
        if info != 0:
            raise RuntimeError("triangular inversion failed in trial kernel")

        tc = <int>target_col[gi]
        total = 0.0
        own_p = 0.0
        for jj in range(nj):
            dinv = 0.0
            for i in range(jj, nj):
                dinv += (G[i, jj].real * G[i, jj].real
                         + G[i, jj].imag * G[i, jj].imag)
            power = (y[jj].real * y[jj].real
                     + y[jj].imag * y[jj].imag) / dinv
            total += power
            if jj == tc:
                own_p = power
        if tc >= 0:
            own[gi] = own_p
            oth[gi] = total - own_p
        else:
            oth[gi] = total
    return own_arr, oth_arr
