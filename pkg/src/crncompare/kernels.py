"""Hot loops: counter-based RNG, coupled uniformization skeleton, and SSA.

All kernels work on integer state indices into precomputed tables:

* ``nxt[i, j]``  index of state i + v_j, -1 if outside the state space,
  -2 if inside the state space but outside the current truncation box;
* ``R[i, j]``    summed rate of net vector j at state i;
* ``AX[i, :]``   image A x_i used for order checks.

Compiled with numba unless the backend flag disables it (see _accel).
"""
import math

import numpy as np

from ._accel import compile_kernel, numba_enabled

COMPILED = numba_enabled()

if COMPILED:
    import numba
    prange = numba.prange

    def kernel(fn=None, parallel=False):
        if fn is None:
            return lambda f: compile_kernel(f, parallel=parallel)
        return compile_kernel(fn)
else:
    prange = range

    def kernel(fn=None, parallel=False):
        if fn is None:
            return lambda f: f
        return fn

BACKEND = "numba" if COMPILED else "python"

# status codes
DONE = 0
BUFFER_FULL = 1
EXITED = 2

# record modes
REC_NONE = 0
REC_ACCEPTED = 1
REC_POTENTIAL = 2

# kernel state layout
F_T, F_HIT_A, F_HIT_B, F_VIOL_T = 0, 1, 2, 3
NF = 4
(I_A, I_B, I_STEP, I_NPOT, I_ORDERED, I_VIOL_A, I_VIOL_B, I_NREC, I_STATUS,
 I_EXIT_A, I_EXIT_B, I_ACC_A, I_ACC_B, I_FLAG) = range(14)
NI = 14

# Philox4x32-10 ------------------------------------------------------------------

_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = np.uint64(0x9E3779B9)
_W1 = np.uint64(0xBB67AE85)
_MASK = np.uint64(0xFFFFFFFF)
_S32 = np.uint64(32)
_S5 = np.uint64(5)
_S6 = np.uint64(6)
_P26 = np.uint64(67108864)
_INV53 = 1.0 / 9007199254740992.0


@kernel
def philox4x32(c0, c1, c2, c3, k0, k1):
    """Philox4x32 with 10 rounds on uint64-held 32-bit words."""
    for _ in range(10):
        p0 = _M0 * c0
        p1 = _M1 * c2
        hi0 = p0 >> _S32
        lo0 = p0 & _MASK
        hi1 = p1 >> _S32
        lo1 = p1 & _MASK
        n0 = (hi1 ^ c1 ^ k0) & _MASK
        n2 = (hi0 ^ c3 ^ k1) & _MASK
        c0 = n0
        c1 = lo1
        c2 = n2
        c3 = lo0
        k0 = (k0 + _W0) & _MASK
        k1 = (k1 + _W1) & _MASK
    return c0, c1, c2, c3


@kernel
def uniform_pair(key0, key1, step, rep, stream):
    """Two uniforms in [0, 1) for counter (step, replicate, stream)."""
    c0 = np.uint64(step & 0xFFFFFFFF)
    c1 = np.uint64((step >> 32) & 0xFFFFFFFF)
    w0, w1, w2, w3 = philox4x32(c0, c1, np.uint64(rep), np.uint64(stream), key0, key1)
    a = (w0 >> _S5) * _P26 + (w1 >> _S6)
    b = (w2 >> _S5) * _P26 + (w3 >> _S6)
    return np.float64(a) * _INV53, np.float64(b) * _INV53


# interval maps ------------------------------------------------------------------

@kernel
def pick(R, i, lam, perm, lo, first, u):
    """Index j whose stacked half-open interval contains u, or -1.

    Position q of ``perm`` holds a net-vector index; a block starts where
    ``first[q]`` is set, at offset ``lo[q]``. Singleton blocks with identity
    ``perm`` and ``lo[q] = q/n`` give the per-index intervals.
    """
    acc = 0.0
    for q in range(perm.shape[0]):
        if first[q]:
            acc = lo[q]
        j = perm[q]
        hi = acc + R[i, j] / lam
        if acc <= u and u < hi:
            return j
        acc = hi
    return -1


# coupled skeleton ---------------------------------------------------------------

@kernel
def coupled_core(ra, rb, nxt, tot_a, tot_b, lam, perm, lo, first, AX, gmask, use_gamma,
                 key0, key1, rep, stream, horizon, stop_when_hit, record,
                 st_f, st_i, buf_t, buf_a, buf_b, buf_flag):
    t = st_f[F_T]
    ia = st_i[I_A]
    ib = st_i[I_B]
    step = st_i[I_STEP]
    nrec = st_i[I_NREC]
    cap = buf_t.shape[0]
    m = AX.shape[1]
    status = DONE
    while True:
        if stop_when_hit and st_f[F_HIT_A] >= 0.0 and st_f[F_HIT_B] >= 0.0:
            break
        if tot_a[ia] == 0.0 and tot_b[ib] == 0.0:
            t = horizon
            break
        if record != REC_NONE and nrec >= cap:
            status = BUFFER_FULL
            break
        u1, u = uniform_pair(key0, key1, step, rep, stream)
        step += 1
        t_new = t - math.log1p(-u1) / lam
        if t_new > horizon:
            t = horizon
            break
        t = t_new
        st_i[I_NPOT] += 1
        ja = pick(ra, ia, lam, perm, lo, first, u)
        jb = pick(rb, ib, lam, perm, lo, first, u)
        na = ia
        nb = ib
        flag = 0
        exited = False
        st_i[I_EXIT_A] = -1
        st_i[I_EXIT_B] = -1
        if ja >= 0:
            na = nxt[ia, ja]
            flag |= 1
            if na == -2:
                st_i[I_EXIT_A] = ja
                na = ia
                exited = True
        if jb >= 0:
            nb = nxt[ib, jb]
            flag |= 2
            if nb == -2:
                st_i[I_EXIT_B] = jb
                nb = ib
                exited = True
        st_i[I_FLAG] = flag
        if exited:
            # caller rebuilds the tables and applies the exit step
            ia = na
            ib = nb
            status = EXITED
            break
        ia = na
        ib = nb
        if flag & 1:
            st_i[I_ACC_A] += 1
        if flag & 2:
            st_i[I_ACC_B] += 1
        if flag != 0:
            for r in range(m):
                if AX[ib, r] < AX[ia, r]:
                    if st_i[I_ORDERED] == 1:
                        st_i[I_ORDERED] = 0
                        st_f[F_VIOL_T] = t
                        st_i[I_VIOL_A] = ia
                        st_i[I_VIOL_B] = ib
                    break
            if use_gamma:
                if st_f[F_HIT_A] < 0.0 and gmask[ia]:
                    st_f[F_HIT_A] = t
                if st_f[F_HIT_B] < 0.0 and gmask[ib]:
                    st_f[F_HIT_B] = t
        if record == REC_POTENTIAL or (record == REC_ACCEPTED and flag != 0):
            buf_t[nrec] = t
            buf_a[nrec] = ia
            buf_b[nrec] = ib
            buf_flag[nrec] = flag
            nrec += 1
    st_f[F_T] = t
    st_i[I_A] = ia
    st_i[I_B] = ib
    st_i[I_STEP] = step
    st_i[I_NREC] = nrec
    st_i[I_STATUS] = status
    return status


@kernel(parallel=True)
def coupled_batch(ra, rb, nxt, tot_a, tot_b, lam, perm, lo, first, AX, gmask, use_gamma,
                  key0, key1, rep0, stream, horizon, stop_when_hit, out_f, out_i):
    """Run replicates rep0 .. rep0+R-1 without path recording.

    ``out_f``/``out_i`` hold the initial kernel state per replicate on entry
    and the final state on return.
    """
    nrep = out_f.shape[0]
    for r in prange(nrep):
        bt = np.zeros(0)
        bi = np.zeros(0, dtype=np.int64)
        sf = out_f[r].copy()
        si = out_i[r].copy()
        coupled_core(ra, rb, nxt, tot_a, tot_b, lam, perm, lo, first, AX, gmask, use_gamma,
                     key0, key1, rep0 + r, stream, horizon, stop_when_hit, REC_NONE,
                     sf, si, bt, bi, bi, bi)
        out_f[r] = sf
        out_i[r] = si


# single-chain SSA ----------------------------------------------------------------

@kernel
def occupy(occ, i, t0, t1, burn, batch_len):
    """Add the part of [t0, t1) after ``burn`` to the occupation of state i, per batch."""
    if t1 <= burn:
        return
    if t0 < burn:
        t0 = burn
    nb = occ.shape[0]
    while t0 < t1:
        b = int((t0 - burn) / batch_len)
        if b >= nb:
            b = nb - 1
            occ[b, i] += t1 - t0
            return
        end = burn + (b + 1) * batch_len
        if end <= t0:
            # rounding put t0 on the boundary
            b += 1
            if b >= nb:
                occ[nb - 1, i] += t1 - t0
                return
            end = burn + (b + 1) * batch_len
        seg = min(t1, end)
        occ[b, i] += seg - t0
        t0 = seg


@kernel
def ssa_core(R, nxt, tot, gmask, use_gamma, key0, key1, rep, stream, horizon,
             stop_when_hit, record, occ, burn, batch_len, track_occ,
             st_f, st_i, buf_t, buf_s):
    """Direct-method SSA. Uses st_f[F_T], st_f[F_HIT_A] and st_i[I_A], I_STEP, I_NREC,
    I_STATUS, I_EXIT_A, I_ACC_A of the shared state layout."""
    t = st_f[F_T]
    i = st_i[I_A]
    step = st_i[I_STEP]
    nrec = st_i[I_NREC]
    cap = buf_t.shape[0]
    n = R.shape[1]
    status = DONE
    while True:
        if stop_when_hit and st_f[F_HIT_A] >= 0.0:
            break
        a0 = tot[i]
        if a0 == 0.0:
            if track_occ:
                occupy(occ, i, t, horizon, burn, batch_len)
            t = horizon
            break
        if record != REC_NONE and nrec >= cap:
            status = BUFFER_FULL
            break
        u1, u2 = uniform_pair(key0, key1, step, rep, stream)
        step += 1
        t_new = t - math.log1p(-u1) / a0
        if t_new > horizon:
            if track_occ:
                occupy(occ, i, t, horizon, burn, batch_len)
            t = horizon
            break
        if track_occ:
            occupy(occ, i, t, t_new, burn, batch_len)
        t = t_new
        target = u2 * a0
        acc = 0.0
        j = -1
        for k in range(n):
            if R[i, k] > 0.0:
                j = k
                acc += R[i, k]
                if target < acc:
                    break
        ni = nxt[i, j]
        st_i[I_EXIT_A] = -1
        if ni == -2:
            st_i[I_EXIT_A] = j
            status = EXITED
            break
        i = ni
        st_i[I_ACC_A] += 1
        if use_gamma and st_f[F_HIT_A] < 0.0 and gmask[i]:
            st_f[F_HIT_A] = t
        if record != REC_NONE:
            buf_t[nrec] = t
            buf_s[nrec] = i
            nrec += 1
    st_f[F_T] = t
    st_i[I_A] = i
    st_i[I_STEP] = step
    st_i[I_NREC] = nrec
    st_i[I_STATUS] = status
    return status


@kernel(parallel=True)
def ssa_batch(R, nxt, tot, gmask, use_gamma, key0, key1, rep0, stream, horizon,
              stop_when_hit, out_f, out_i):
    nrep = out_f.shape[0]
    for r in prange(nrep):
        bt = np.zeros(0)
        bi = np.zeros(0, dtype=np.int64)
        occ = np.zeros((1, 1))
        sf = out_f[r].copy()
        si = out_i[r].copy()
        ssa_core(R, nxt, tot, gmask, use_gamma, key0, key1, rep0 + r, stream, horizon,
                 stop_when_hit, REC_NONE, occ, 0.0, 1.0, False, sf, si, bt, bi)
        out_f[r] = sf
        out_i[r] = si
