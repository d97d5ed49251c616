# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled Gibbs kernels.

Line-for-line mirror of ``_pykernels.py`` (see that module for the
bookkeeping scheme).  Draws come from numpy's C distribution routines on the
caller's bit generator, so output is bit-identical to the Python fallback.
The sweep loops run without the GIL while holding the generator's lock.
"""
import numpy as np
cimport numpy as cnp
from cpython.pycapsule cimport PyCapsule_GetPointer
from libc.math cimport exp, log, sqrt, isfinite, fabs, INFINITY
from libc.stdlib cimport malloc, free
from numpy.random cimport bitgen_t
from numpy.random.c_distributions cimport (
    random_standard_normal, random_standard_gamma, random_standard_uniform,
)

cnp.import_array()

cdef enum:
    STATUS_OK = 0
    STATUS_NONFINITE = 1


cdef struct Slots:
    int T
    int *lab
    double *val
    int *cnt
    int *pos
    int *order
    int n_active
    int *freestack
    int n_free


cdef struct Audit:
    long updates
    double max_sum_error
    double min_weight
    long copies
    long copy_mismatches


cdef int slots_init(Slots *s, int T, double value) noexcept nogil:
    cdef int i
    s.T = T
    s.lab = <int *> malloc(T * sizeof(int))
    s.val = <double *> malloc((T + 1) * sizeof(double))
    s.cnt = <int *> malloc((T + 1) * sizeof(int))
    s.pos = <int *> malloc((T + 1) * sizeof(int))
    s.order = <int *> malloc((T + 1) * sizeof(int))
    s.freestack = <int *> malloc((T + 1) * sizeof(int))
    if (s.lab == NULL or s.val == NULL or s.cnt == NULL or s.pos == NULL
            or s.order == NULL or s.freestack == NULL):
        return -1
    for i in range(T):
        s.lab[i] = 0
    for i in range(T + 1):
        s.val[i] = 0.0
        s.cnt[i] = 0
        s.pos[i] = 0
    s.order[0] = 0
    s.n_active = 1
    # stack top is the last element; pushes T, T-1, ..., 1 so slot 1 pops first
    for i in range(T):
        s.freestack[i] = T - i
    s.n_free = T
    s.val[0] = value
    s.cnt[0] = T
    return 0


cdef void slots_free(Slots *s) noexcept nogil:
    free(s.lab)
    free(s.val)
    free(s.cnt)
    free(s.pos)
    free(s.order)
    free(s.freestack)


cdef inline void slots_detach(Slots *s, int t) noexcept nogil:
    cdef int k = s.lab[t]
    cdef int i, last
    s.cnt[k] -= 1
    if s.cnt[k] == 0:
        i = s.pos[k]
        last = s.order[s.n_active - 1]
        s.order[i] = last
        s.pos[last] = i
        s.n_active -= 1
        s.freestack[s.n_free] = k
        s.n_free += 1


cdef inline void slots_attach_new(Slots *s, int t, double value) noexcept nogil:
    s.n_free -= 1
    cdef int k = s.freestack[s.n_free]
    s.val[k] = value
    s.cnt[k] = 1
    s.pos[k] = s.n_active
    s.order[s.n_active] = k
    s.n_active += 1
    s.lab[t] = k


cdef inline void slots_attach(Slots *s, int t, int k) noexcept nogil:
    s.cnt[k] += 1
    s.lab[t] = k


cdef void audit_init(Audit *a) noexcept nogil:
    a.updates = 0
    a.max_sum_error = 0.0
    a.min_weight = INFINITY
    a.copies = 0
    a.copy_mismatches = 0


cdef void audit_weights(Audit *a, double *w, int n, double total) noexcept nogil:
    cdef double s = 0.0
    cdef double q, err
    cdef int i
    for i in range(n):
        q = w[i] / total
        s += q
        if q < a.min_weight:
            a.min_weight = q
    err = fabs(s - 1.0)
    if err > a.max_sum_error:
        a.max_sum_error = err
    a.updates += 1


cdef void audit_copy(Audit *a, Slots *s, int t, int k, double *values) noexcept nogil:
    cdef int j
    a.copies += 1
    for j in range(s.T):
        if j != t and s.lab[j] == k:
            if values[j] != values[t]:
                a.copy_mismatches += 1
            return
    a.copy_mismatches += 1


cdef dict audit_dict(Audit *a):
    return {
        "updates": a.updates,
        "max_sum_error": a.max_sum_error,
        "min_weight": a.min_weight if a.updates else 0.0,
        "copies": a.copies,
        "copy_mismatches": a.copy_mismatches,
    }


cdef inline int pick(double *lw, double *w, int n, double u, double *total_out) noexcept nogil:
    cdef double mx = lw[0]
    cdef double total = 0.0
    cdef double target, acc
    cdef int i
    for i in range(n):
        if lw[i] > mx:
            mx = lw[i]
    for i in range(n):
        w[i] = exp(lw[i] - mx)
    for i in range(n):
        total += w[i]
    total_out[0] = total
    target = u * total
    acc = 0.0
    for i in range(n):
        acc += w[i]
        if target < acc:
            return i
    return n - 1


cdef bitgen_t *_bitgen(rng) except NULL:
    return <bitgen_t *> PyCapsule_GetPointer(rng.bit_generator.capsule, "BitGenerator")


cdef int _mean_loop(
    double[::1] y, double m, double tau0_sq, double nu0, double lambda0, double c,
    bint hierarchical, double eta, double phi, int sweeps, int burn_in, bitgen_t *bg,
    double init_mu, double init_sigma_sq, bint store, Audit *aud,
    double[::1] out_s2, double[::1] out_lam, double[::1] out_loc,
    cnp.int64_t[::1] out_k, cnp.int64_t[::1] out_big, double[::1] mu_sum,
    double[:, ::1] rows, int *bad_sweep,
) noexcept nogil:
    cdef int T = y.shape[0]
    cdef double one_tau = 1.0 + tau0_sq
    cdef double lw0_const = log(c) - 0.5 * log(one_tau)
    cdef double fresh_scale = tau0_sq / one_tau
    cdef double inv_tau = 1.0 / tau0_sq
    cdef double m_over_tau = m / tau0_sq
    cdef double two_tau = 2.0 * tau0_sq
    cdef double hyper_shape = nu0 + eta
    cdef double s2 = init_sigma_sq
    cdef double lam = lambda0
    cdef double acc_c, acc_r, d, r, shape, rate, two_s2, fresh_sd, yt, v, prec, mean, loc, total
    cdef int it, t, i, k, n, big, nw, status = STATUS_OK
    cdef Slots s
    cdef double *mu = <double *> malloc(T * sizeof(double))
    cdef double *sy = <double *> malloc((T + 1) * sizeof(double))
    cdef double *lw = <double *> malloc((T + 2) * sizeof(double))
    cdef double *w = <double *> malloc((T + 2) * sizeof(double))
    if mu == NULL or sy == NULL or lw == NULL or w == NULL or slots_init(&s, T, init_mu) != 0:
        free(mu); free(sy); free(lw); free(w)
        return -1
    for t in range(T):
        mu[t] = init_mu
        mu_sum[t] = 0.0

    for it in range(sweeps):
        if hierarchical:
            lam = (s2 * phi / (s2 + phi)) * random_standard_gamma(bg, hyper_shape)

        acc_c = 0.0
        for i in range(s.n_active):
            d = s.val[s.order[i]] - m
            acc_c += d * d
        acc_r = 0.0
        for t in range(T):
            r = y[t] - mu[t]
            acc_r += r * r
        shape = nu0 + 0.5 * T + 0.5 * s.n_active
        rate = lam + acc_c / two_tau + 0.5 * acc_r
        s2 = rate / random_standard_gamma(bg, shape)
        if not (isfinite(s2) and s2 > 0.0):
            status = STATUS_NONFINITE
            bad_sweep[0] = it
            break

        two_s2 = 2.0 * s2
        fresh_sd = sqrt(s2 * fresh_scale)
        for t in range(T):
            slots_detach(&s, t)
            yt = y[t]
            nw = s.n_active
            for i in range(nw):
                k = s.order[i]
                r = yt - s.val[k]
                lw[i] = log(<double> s.cnt[k]) - r * r / two_s2
            r = yt - m
            lw[nw] = lw0_const - r * r / (two_s2 * one_tau)
            i = pick(lw, w, nw + 1, random_standard_uniform(bg), &total)
            if aud != NULL:
                audit_weights(aud, w, nw + 1, total)
            if i == nw:
                v = (yt * tau0_sq + m) / one_tau + fresh_sd * random_standard_normal(bg)
                slots_attach_new(&s, t, v)
                mu[t] = v
            else:
                k = s.order[i]
                slots_attach(&s, t, k)
                mu[t] = s.val[k]
                if aud != NULL:
                    audit_copy(aud, &s, t, k, mu)

        for i in range(s.n_active):
            sy[s.order[i]] = 0.0
        for t in range(T):
            sy[s.lab[t]] += y[t]
        for i in range(s.n_active):
            k = s.order[i]
            prec = s.cnt[k] + inv_tau
            mean = (sy[k] + m_over_tau) / prec
            s.val[k] = mean + sqrt(s2 / prec) * random_standard_normal(bg)
        for t in range(T):
            mu[t] = s.val[s.lab[t]]

        if it >= burn_in:
            i = it - burn_in
            loc = 0.0
            big = 0
            for n in range(s.n_active):
                k = s.order[n]
                loc += (<double> s.cnt[k] / T) * s.val[k]
                if s.cnt[k] > big:
                    big = s.cnt[k]
            out_s2[i] = s2
            out_lam[i] = lam
            out_loc[i] = loc
            out_k[i] = s.n_active
            out_big[i] = big
            for t in range(T):
                mu_sum[t] += mu[t]
            if store:
                for t in range(T):
                    rows[i, t] = mu[t]

    slots_free(&s)
    free(mu); free(sy); free(lw); free(w)
    return status


def mean_chain(y, double m, double tau0_sq, double nu0, double lambda0, double c,
               bint hierarchical, double eta, double phi, int sweeps, int burn_in, rng,
               double init_mu, double init_sigma_sq, bint store=False, bint audit=False):
    cdef double[::1] yv = np.ascontiguousarray(y, dtype=np.float64)
    cdef int T = yv.shape[0]
    cdef int L = sweeps - burn_in
    out_s2 = np.empty(L)
    out_lam = np.empty(L)
    out_loc = np.empty(L)
    out_k = np.empty(L, dtype=np.int64)
    out_big = np.empty(L, dtype=np.int64)
    mu_sum = np.empty(T)
    rows = np.empty((L, T)) if store else np.empty((1, 1))
    cdef double[::1] v_s2 = out_s2, v_lam = out_lam, v_loc = out_loc, v_sum = mu_sum
    cdef cnp.int64_t[::1] v_k = out_k, v_big = out_big
    cdef double[:, ::1] v_rows = rows
    cdef Audit a
    cdef Audit *ap = NULL
    cdef int bad = 0, status
    cdef bitgen_t *bg = _bitgen(rng)
    if audit:
        audit_init(&a)
        ap = &a
    with rng.bit_generator.lock, nogil:
        status = _mean_loop(yv, m, tau0_sq, nu0, lambda0, c, hierarchical, eta, phi,
                            sweeps, burn_in, bg, init_mu, init_sigma_sq, store, ap,
                            v_s2, v_lam, v_loc, v_k, v_big, v_sum, v_rows, &bad)
    if status < 0:
        raise MemoryError()
    if status != STATUS_OK:
        return {"status": status, "sweep": bad}
    res = {
        "status": STATUS_OK, "sweep": sweeps, "sigma_sq": out_s2, "lambda0": out_lam,
        "location": out_loc, "n_clusters": out_k, "largest": out_big,
        "param_sum": mu_sum, "rows": rows if store else None,
    }
    if audit:
        res["audit"] = audit_dict(&a)
    return res


cdef int _variance_loop(
    double[::1] y, double m, double nu0, double lambda0, double log_fresh_const,
    int sweeps, int burn_in, bitgen_t *bg, double init_mu, double init_sigma_sq,
    bint store, Audit *aud,
    double[::1] out_mu, double[::1] out_scale, cnp.int64_t[::1] out_k,
    cnp.int64_t[::1] out_big, double[::1] s2_sum, double[:, ::1] rows, int *bad_sweep,
) noexcept nogil:
    cdef int T = y.shape[0]
    cdef double kappa = lambda0 / (T * (nu0 - 1.0))
    cdef double fresh_shape = nu0 + 0.5
    cdef double two_lam = 2.0 * lambda0
    cdef double mu = init_mu
    cdef double a, b, denom, r, r2, v, scale, total
    cdef int it, t, i, k, n, big, nw, status = STATUS_OK
    cdef Slots s
    cdef double *s2 = <double *> malloc(T * sizeof(double))
    cdef double *acc = <double *> malloc((T + 1) * sizeof(double))
    cdef double *lw = <double *> malloc((T + 2) * sizeof(double))
    cdef double *w = <double *> malloc((T + 2) * sizeof(double))
    if s2 == NULL or acc == NULL or lw == NULL or w == NULL or slots_init(&s, T, init_sigma_sq) != 0:
        free(s2); free(acc); free(lw); free(w)
        return -1
    for t in range(T):
        s2[t] = init_sigma_sq
        s2_sum[t] = 0.0

    for it in range(sweeps):
        for i in range(s.n_active):
            acc[s.order[i]] = 0.0
        for t in range(T):
            acc[s.lab[t]] += y[t]
        a = 0.0
        b = 0.0
        for i in range(s.n_active):
            k = s.order[i]
            a += acc[k] / s.val[k]
            b += s.cnt[k] / s.val[k]
        denom = 1.0 + kappa * b
        mu = (m + kappa * a) / denom + sqrt(kappa / denom) * random_standard_normal(bg)
        if not isfinite(mu):
            status = STATUS_NONFINITE
            bad_sweep[0] = it
            break

        for t in range(T):
            slots_detach(&s, t)
            r = y[t] - mu
            r2 = r * r
            nw = s.n_active
            for i in range(nw):
                k = s.order[i]
                v = s.val[k]
                lw[i] = log(<double> s.cnt[k]) - 0.5 * log(v) - r2 / (2.0 * v)
            lw[nw] = log_fresh_const - fresh_shape * log(r2 + two_lam)
            i = pick(lw, w, nw + 1, random_standard_uniform(bg), &total)
            if aud != NULL:
                audit_weights(aud, w, nw + 1, total)
            if i == nw:
                v = (lambda0 + 0.5 * r2) / random_standard_gamma(bg, fresh_shape)
                if not (isfinite(v) and v > 0.0):
                    status = STATUS_NONFINITE
                    break
                slots_attach_new(&s, t, v)
                s2[t] = v
            else:
                k = s.order[i]
                slots_attach(&s, t, k)
                s2[t] = s.val[k]
                if aud != NULL:
                    audit_copy(aud, &s, t, k, s2)
        if status != STATUS_OK:
            bad_sweep[0] = it
            break

        for i in range(s.n_active):
            acc[s.order[i]] = 0.0
        for t in range(T):
            r = y[t] - mu
            acc[s.lab[t]] += r * r
        for i in range(s.n_active):
            k = s.order[i]
            v = (lambda0 + 0.5 * acc[k]) / random_standard_gamma(bg, nu0 + 0.5 * s.cnt[k])
            if not (isfinite(v) and v > 0.0):
                status = STATUS_NONFINITE
                break
            s.val[k] = v
        if status != STATUS_OK:
            bad_sweep[0] = it
            break
        for t in range(T):
            s2[t] = s.val[s.lab[t]]

        if it >= burn_in:
            i = it - burn_in
            scale = 0.0
            big = 0
            for n in range(s.n_active):
                k = s.order[n]
                scale += (<double> s.cnt[k] / T) * sqrt(s.val[k])
                if s.cnt[k] > big:
                    big = s.cnt[k]
            out_mu[i] = mu
            out_scale[i] = scale
            out_k[i] = s.n_active
            out_big[i] = big
            for t in range(T):
                s2_sum[t] += s2[t]
            if store:
                for t in range(T):
                    rows[i, t] = s2[t]

    slots_free(&s)
    free(s2); free(acc); free(lw); free(w)
    return status


def variance_chain(y, double m, double nu0, double lambda0, double c, double log_fresh_const,
                   int sweeps, int burn_in, rng, double init_mu, double init_sigma_sq,
                   bint store=False, bint audit=False):
    cdef double[::1] yv = np.ascontiguousarray(y, dtype=np.float64)
    cdef int T = yv.shape[0]
    cdef int L = sweeps - burn_in
    out_mu = np.empty(L)
    out_scale = np.empty(L)
    out_k = np.empty(L, dtype=np.int64)
    out_big = np.empty(L, dtype=np.int64)
    s2_sum = np.empty(T)
    rows = np.empty((L, T)) if store else np.empty((1, 1))
    cdef double[::1] v_mu = out_mu, v_scale = out_scale, v_sum = s2_sum
    cdef cnp.int64_t[::1] v_k = out_k, v_big = out_big
    cdef double[:, ::1] v_rows = rows
    cdef Audit a
    cdef Audit *ap = NULL
    cdef int bad = 0, status
    cdef bitgen_t *bg = _bitgen(rng)
    if audit:
        audit_init(&a)
        ap = &a
    with rng.bit_generator.lock, nogil:
        status = _variance_loop(yv, m, nu0, lambda0, log_fresh_const, sweeps, burn_in, bg,
                                init_mu, init_sigma_sq, store, ap,
                                v_mu, v_scale, v_k, v_big, v_sum, v_rows, &bad)
    if status < 0:
        raise MemoryError()
    if status != STATUS_OK:
        return {"status": status, "sweep": bad}
    res = {
        "status": STATUS_OK, "sweep": sweeps, "mu": out_mu, "scale": out_scale,
        "n_clusters": out_k, "largest": out_big, "param_sum": s2_sum,
        "rows": rows if store else None,
    }
    if audit:
        res["audit"] = audit_dict(&a)
    return res


def cond_mean_chain(y, labels, int K, double m, double tau0_sq, double nu0, double lambda0,
                    bint hierarchical, double eta, double phi, int sweeps, int burn_in, rng,
                    double init_mu, double init_sigma_sq, bint store=False):
    cdef double[::1] yv = np.ascontiguousarray(y, dtype=np.float64)
    cdef cnp.intp_t[::1] lab = np.ascontiguousarray(labels, dtype=np.intp)
    cdef int T = yv.shape[0]
    cdef int L = sweeps - burn_in
    cdef double inv_tau = 1.0 / tau0_sq
    cdef double m_over_tau = m / tau0_sq
    cdef double two_tau = 2.0 * tau0_sq
    cdef double hyper_shape = nu0 + eta
    cdef double shape = nu0 + 0.5 * T + 0.5 * K
    cdef double s2 = init_sigma_sq
    cdef double lam = lambda0
    cdef double acc_c, acc_r, e, r, rate, prec
    cdef int it, t, d, i, status = STATUS_OK, bad = 0
    cnt_a = np.zeros(K, dtype=np.int64)
    sy_a = np.zeros(K)
    val_a = np.full(K, init_mu)
    out_s2 = np.empty(L)
    val_sum = np.zeros(K)
    rows = np.empty((L, K)) if store else np.empty((1, 1))
    cdef cnp.int64_t[::1] cnt = cnt_a
    cdef double[::1] sy = sy_a, val = val_a, v_s2 = out_s2, v_sum = val_sum
    cdef double[:, ::1] v_rows = rows
    cdef bitgen_t *bg = _bitgen(rng)
    for t in range(T):
        cnt[lab[t]] += 1
        sy[lab[t]] += yv[t]

    with rng.bit_generator.lock, nogil:
        for it in range(sweeps):
            if hierarchical:
                lam = (s2 * phi / (s2 + phi)) * random_standard_gamma(bg, hyper_shape)
            acc_c = 0.0
            for d in range(K):
                e = val[d] - m
                acc_c += e * e
            acc_r = 0.0
            for t in range(T):
                r = yv[t] - val[lab[t]]
                acc_r += r * r
            rate = lam + acc_c / two_tau + 0.5 * acc_r
            s2 = rate / random_standard_gamma(bg, shape)
            if not (isfinite(s2) and s2 > 0.0):
                status = STATUS_NONFINITE
                bad = it
                break
            for d in range(K):
                prec = cnt[d] + inv_tau
                val[d] = (sy[d] + m_over_tau) / prec + sqrt(s2 / prec) * random_standard_normal(bg)
            if it >= burn_in:
                i = it - burn_in
                v_s2[i] = s2
                for d in range(K):
                    v_sum[d] += val[d]
                if store:
                    for d in range(K):
                        v_rows[i, d] = val[d]
    if status != STATUS_OK:
        return {"status": status, "sweep": bad}
    return {"status": STATUS_OK, "sweep": sweeps, "sigma_sq": out_s2,
            "value_sum": val_sum, "rows": rows if store else None}


def cond_variance_chain(y, labels, int K, double m, double nu0, double lambda0,
                        bint fix_mu, double mu_fixed, int sweeps, int burn_in, rng,
                        double init_mu, double init_sigma_sq, bint store=False):
    cdef double[::1] yv = np.ascontiguousarray(y, dtype=np.float64)
    cdef cnp.intp_t[::1] lab = np.ascontiguousarray(labels, dtype=np.intp)
    cdef int T = yv.shape[0]
    cdef int L = sweeps - burn_in
    cdef double kappa = lambda0 / (T * (nu0 - 1.0))
    cdef double mu = mu_fixed if fix_mu else init_mu
    cdef double a, b, denom, r, v
    cdef int it, t, d, i, status = STATUS_OK, bad = 0
    cnt_a = np.zeros(K, dtype=np.int64)
    sy_a = np.zeros(K)
    val_a = np.full(K, init_sigma_sq)
    acc_a = np.zeros(K)
    out_mu = np.empty(L)
    val_sum = np.zeros(K)
    rows = np.empty((L, K)) if store else np.empty((1, 1))
    cdef cnp.int64_t[::1] cnt = cnt_a
    cdef double[::1] sy = sy_a, val = val_a, acc = acc_a, v_mu = out_mu, v_sum = val_sum
    cdef double[:, ::1] v_rows = rows
    cdef bitgen_t *bg = _bitgen(rng)
    for t in range(T):
        cnt[lab[t]] += 1
        sy[lab[t]] += yv[t]

    with rng.bit_generator.lock, nogil:
        for it in range(sweeps):
            if not fix_mu:
                a = 0.0
                b = 0.0
                for d in range(K):
                    a += sy[d] / val[d]
                    b += cnt[d] / val[d]
                denom = 1.0 + kappa * b
                mu = (m + kappa * a) / denom + sqrt(kappa / denom) * random_standard_normal(bg)
            for d in range(K):
                acc[d] = 0.0
            for t in range(T):
                r = yv[t] - mu
                acc[lab[t]] += r * r
            for d in range(K):
                v = (lambda0 + 0.5 * acc[d]) / random_standard_gamma(bg, nu0 + 0.5 * cnt[d])
                if not (isfinite(v) and v > 0.0):
                    status = STATUS_NONFINITE
                    break
                val[d] = v
            if status != STATUS_OK:
                bad = it
                break
            if it >= burn_in:
                i = it - burn_in
                v_mu[i] = mu
                for d in range(K):
                    v_sum[d] += val[d]
                if store:
                    for d in range(K):
                        v_rows[i, d] = val[d]
    if status != STATUS_OK:
        return {"status": status, "sweep": bad}
    return {"status": STATUS_OK, "sweep": sweeps, "mu": out_mu,
            "value_sum": val_sum, "rows": rows if store else None}
