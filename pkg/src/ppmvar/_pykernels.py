"""Pure-Python Gibbs kernels.

This module is the fallback used when the compiled ``_ckernels`` extension is
unavailable.  ``_ckernels.pyx`` mirrors it statement for statement: same
cluster-slot bookkeeping, same arithmetic order, same sequence of calls into
the bit generator.  The two backends therefore return identical draws for a
given seed.  Any change here must be repeated there (``tests/test_kernels.py``
checks parity).

Cluster bookkeeping: ``lab[t]`` is the slot holding index t, ``val``/``cnt``
the slot's shared value and membership count.  Active slots are kept in
``order`` (removal swaps in the last entry) and freed slots go on a stack.
"""
import math

import numpy as np

STATUS_OK = 0
STATUS_NONFINITE = 1


class _Slots:
    def __init__(self, T, value):
        self.lab = [0] * T
        self.val = [0.0] * (T + 1)
        self.cnt = [0] * (T + 1)
        self.pos = [0] * (T + 1)
        self.order = [0]
        self.free = list(range(T, 0, -1))
        self.val[0] = value
        self.cnt[0] = T

    def detach(self, t):
        k = self.lab[t]
        self.cnt[k] -= 1
        if self.cnt[k] == 0:
            i = self.pos[k]
            last = self.order[-1]
            self.order[i] = last
            self.pos[last] = i
            self.order.pop()
            self.free.append(k)

    def attach_new(self, t, value):
        k = self.free.pop()
        self.val[k] = value
        self.cnt[k] = 1
        self.pos[k] = len(self.order)
        self.order.append(k)
        self.lab[t] = k

    def attach(self, t, k):
        self.cnt[k] += 1
        self.lab[t] = k


class _Audit:
    def __init__(self):
        self.updates = 0
        self.max_sum_error = 0.0
        self.min_weight = math.inf
        self.copies = 0
        self.copy_mismatches = 0

    def weights(self, w, total):
        s = 0.0
        for x in w:
            q = x / total
            s += q
            if q < self.min_weight:
                self.min_weight = q
        err = abs(s - 1.0)
        if err > self.max_sum_error:
            self.max_sum_error = err
        self.updates += 1

    def copy(self, slots, t, k, values):
        # values[t] was copied from slot k; compare against another member
        self.copies += 1
        for j in range(len(slots.lab)):
            if j != t and slots.lab[j] == k:
                if values[j] != values[t]:
                    self.copy_mismatches += 1
                return
        self.copy_mismatches += 1

    def as_dict(self):
        return {
            "updates": self.updates,
            "max_sum_error": self.max_sum_error,
            "min_weight": self.min_weight if self.updates else 0.0,
            "copies": self.copies,
            "copy_mismatches": self.copy_mismatches,
        }


def _pick(lw, u):
    """Index drawn from unnormalised log weights ``lw`` given uniform ``u``."""
    mx = lw[0]
    for x in lw:
        if x > mx:
            mx = x
    w = [math.exp(x - mx) for x in lw]
    total = 0.0
    for x in w:
        total += x
    target = u * total
    acc = 0.0
    n = len(w)
    for i in range(n):
        acc += w[i]
        if target < acc:
            return i, w, total
    return n - 1, w, total


def mean_chain(y, m, tau0_sq, nu0, lambda0, c, hierarchical, eta, phi,
               sweeps, burn_in, rng, init_mu, init_sigma_sq, store=False, audit=False):
    y = [float(v) for v in y]
    T = len(y)
    L = sweeps - burn_in
    one_tau = 1.0 + tau0_sq
    lw0_const = math.log(c) - 0.5 * math.log(one_tau)
    fresh_scale = tau0_sq / one_tau
    inv_tau = 1.0 / tau0_sq
    m_over_tau = m / tau0_sq
    two_tau = 2.0 * tau0_sq
    hyper_shape = nu0 + eta

    out_s2 = np.empty(L)
    out_lam = np.empty(L)
    out_loc = np.empty(L)
    out_k = np.empty(L, dtype=np.int64)
    out_big = np.empty(L, dtype=np.int64)
    mu_sum = [0.0] * T
    rows = np.empty((L, T)) if store else None

    slots = _Slots(T, init_mu)
    mu = [init_mu] * T
    s2 = init_sigma_sq
    lam = lambda0
    sy = [0.0] * (T + 1)
    aud = _Audit() if audit else None

    for it in range(sweeps):
        if hierarchical:
            lam = (s2 * phi / (s2 + phi)) * rng.standard_gamma(hyper_shape)

        acc_c = 0.0
        for k in slots.order:
            d = slots.val[k] - m
            acc_c += d * d
        acc_r = 0.0
        for t in range(T):
            r = y[t] - mu[t]
            acc_r += r * r
        shape = nu0 + 0.5 * T + 0.5 * len(slots.order)
        rate = lam + acc_c / two_tau + 0.5 * acc_r
        s2 = rate / rng.standard_gamma(shape)
        if not (math.isfinite(s2) and s2 > 0.0):
            return {"status": STATUS_NONFINITE, "sweep": it}

        two_s2 = 2.0 * s2
        fresh_sd = math.sqrt(s2 * fresh_scale)
        for t in range(T):
            slots.detach(t)
            yt = y[t]
            lw = []
            for k in slots.order:
                r = yt - slots.val[k]
                lw.append(math.log(slots.cnt[k]) - r * r / two_s2)
            r = yt - m
            lw.append(lw0_const - r * r / (two_s2 * one_tau))
            i, w, total = _pick(lw, rng.random())
            if aud is not None:
                aud.weights(w, total)
            if i == len(slots.order):
                v = (yt * tau0_sq + m) / one_tau + fresh_sd * rng.standard_normal()
                slots.attach_new(t, v)
                mu[t] = v
            else:
                k = slots.order[i]
                slots.attach(t, k)
                mu[t] = slots.val[k]
                if aud is not None:
                    aud.copy(slots, t, k, mu)

        for k in slots.order:
            sy[k] = 0.0
        for t in range(T):
            sy[slots.lab[t]] += y[t]
        for k in slots.order:
            prec = slots.cnt[k] + inv_tau
            mean = (sy[k] + m_over_tau) / prec
            slots.val[k] = mean + math.sqrt(s2 / prec) * rng.standard_normal()
        for t in range(T):
            mu[t] = slots.val[slots.lab[t]]

        if it >= burn_in:
            i = it - burn_in
            loc = 0.0
            big = 0
            for k in slots.order:
                n = slots.cnt[k]
                loc += (n / T) * slots.val[k]
                if n > big:
                    big = n
            out_s2[i] = s2
            out_lam[i] = lam
            out_loc[i] = loc
            out_k[i] = len(slots.order)
            out_big[i] = big
            for t in range(T):
                mu_sum[t] += mu[t]
            if store:
                rows[i, :] = mu

    res = {
        "status": STATUS_OK,
        "sweep": sweeps,
        "sigma_sq": out_s2,
        "lambda0": out_lam,
        "location": out_loc,
        "n_clusters": out_k,
        "largest": out_big,
        "param_sum": np.array(mu_sum),
        "rows": rows,
    }
    if aud is not None:
        res["audit"] = aud.as_dict()
    return res


def variance_chain(y, m, nu0, lambda0, c, log_fresh_const, sweeps, burn_in, rng,
                   init_mu, init_sigma_sq, store=False, audit=False):
    # log_fresh_const = log c + lgamma(nu0+1/2) - lgamma(nu0) + (nu0+1/2) log 2 + nu0 log lambda0,
    # precomputed by the caller so both backends share one lgamma.
    y = [float(v) for v in y]
    T = len(y)
    L = sweeps - burn_in
    kappa = lambda0 / (T * (nu0 - 1.0))
    fresh_shape = nu0 + 0.5
    two_lam = 2.0 * lambda0

    out_mu = np.empty(L)
    out_scale = np.empty(L)
    out_k = np.empty(L, dtype=np.int64)
    out_big = np.empty(L, dtype=np.int64)
    s2_sum = [0.0] * T
    rows = np.empty((L, T)) if store else None

    slots = _Slots(T, init_sigma_sq)
    s2 = [init_sigma_sq] * T
    mu = init_mu
    acc = [0.0] * (T + 1)
    aud = _Audit() if audit else None

    for it in range(sweeps):
        for k in slots.order:
            acc[k] = 0.0
        for t in range(T):
            acc[slots.lab[t]] += y[t]
        a = 0.0
        b = 0.0
        for k in slots.order:
            a += acc[k] / slots.val[k]
            b += slots.cnt[k] / slots.val[k]
        denom = 1.0 + kappa * b
        mu = (m + kappa * a) / denom + math.sqrt(kappa / denom) * rng.standard_normal()
        if not math.isfinite(mu):
            return {"status": STATUS_NONFINITE, "sweep": it}

        for t in range(T):
            slots.detach(t)
            r = y[t] - mu
            r2 = r * r
            lw = []
            for k in slots.order:
                v = slots.val[k]
                lw.append(math.log(slots.cnt[k]) - 0.5 * math.log(v) - r2 / (2.0 * v))
            lw.append(log_fresh_const - fresh_shape * math.log(r2 + two_lam))
            i, w, total = _pick(lw, rng.random())
            if aud is not None:
                aud.weights(w, total)
            if i == len(slots.order):
                v = (lambda0 + 0.5 * r2) / rng.standard_gamma(fresh_shape)
                if not (math.isfinite(v) and v > 0.0):
                    return {"status": STATUS_NONFINITE, "sweep": it}
                slots.attach_new(t, v)
                s2[t] = v
            else:
                k = slots.order[i]
                slots.attach(t, k)
                s2[t] = slots.val[k]
                if aud is not None:
                    aud.copy(slots, t, k, s2)

        for k in slots.order:
            acc[k] = 0.0
        for t in range(T):
            r = y[t] - mu
            acc[slots.lab[t]] += r * r
        for k in slots.order:
            v = (lambda0 + 0.5 * acc[k]) / rng.standard_gamma(nu0 + 0.5 * slots.cnt[k])
            if not (math.isfinite(v) and v > 0.0):
                return {"status": STATUS_NONFINITE, "sweep": it}
            slots.val[k] = v
        for t in range(T):
            s2[t] = slots.val[slots.lab[t]]

        if it >= burn_in:
            i = it - burn_in
            scale = 0.0
            big = 0
            for k in slots.order:
                n = slots.cnt[k]
                scale += (n / T) * math.sqrt(slots.val[k])
                if n > big:
                    big = n
            out_mu[i] = mu
            out_scale[i] = scale
            out_k[i] = len(slots.order)
            out_big[i] = big
            for t in range(T):
                s2_sum[t] += s2[t]
            if store:
                rows[i, :] = s2

    res = {
        "status": STATUS_OK,
        "sweep": sweeps,
        "mu": out_mu,
        "scale": out_scale,
        "n_clusters": out_k,
        "largest": out_big,
        "param_sum": np.array(s2_sum),
        "rows": rows,
    }
    if aud is not None:
        res["audit"] = aud.as_dict()
    return res


def cond_mean_chain(y, labels, K, m, tau0_sq, nu0, lambda0, hierarchical, eta, phi,
                    sweeps, burn_in, rng, init_mu, init_sigma_sq, store=False):
    """Fixed-partition chain: sigma^2 step then cluster-mean step, no reallocation."""
    y = [float(v) for v in y]
    labels = [int(v) for v in labels]
    T = len(y)
    L = sweeps - burn_in
    inv_tau = 1.0 / tau0_sq
    m_over_tau = m / tau0_sq
    two_tau = 2.0 * tau0_sq
    hyper_shape = nu0 + eta
    shape = nu0 + 0.5 * T + 0.5 * K

    cnt = [0] * K
    sy = [0.0] * K
    for t in range(T):
        cnt[labels[t]] += 1
        sy[labels[t]] += y[t]
    val = [init_mu] * K
    s2 = init_sigma_sq
    lam = lambda0

    out_s2 = np.empty(L)
    val_sum = [0.0] * K
    rows = np.empty((L, K)) if store else None

    for it in range(sweeps):
        if hierarchical:
            lam = (s2 * phi / (s2 + phi)) * rng.standard_gamma(hyper_shape)
        acc_c = 0.0
        for d in range(K):
            e = val[d] - m
            acc_c += e * e
        acc_r = 0.0
        for t in range(T):
            r = y[t] - val[labels[t]]
            acc_r += r * r
        rate = lam + acc_c / two_tau + 0.5 * acc_r
        s2 = rate / rng.standard_gamma(shape)
        if not (math.isfinite(s2) and s2 > 0.0):
            return {"status": STATUS_NONFINITE, "sweep": it}
        for d in range(K):
            prec = cnt[d] + inv_tau
            val[d] = (sy[d] + m_over_tau) / prec + math.sqrt(s2 / prec) * rng.standard_normal()
        if it >= burn_in:
            i = it - burn_in
            out_s2[i] = s2
            for d in range(K):
                val_sum[d] += val[d]
            if store:
                rows[i, :] = val

    return {
        "status": STATUS_OK,
        "sweep": sweeps,
        "sigma_sq": out_s2,
        "value_sum": np.array(val_sum),
        "rows": rows,
    }


def cond_variance_chain(y, labels, K, m, nu0, lambda0, fix_mu, mu_fixed,
                        sweeps, burn_in, rng, init_mu, init_sigma_sq, store=False):
    """Fixed-partition chain for the variance model: mu step then cluster variances."""
    y = [float(v) for v in y]
    labels = [int(v) for v in labels]
    T = len(y)
    L = sweeps - burn_in
    kappa = lambda0 / (T * (nu0 - 1.0))

    cnt = [0] * K
    sy = [0.0] * K
    for t in range(T):
        cnt[labels[t]] += 1
        sy[labels[t]] += y[t]
    val = [init_sigma_sq] * K
    mu = mu_fixed if fix_mu else init_mu
    acc = [0.0] * K

    out_mu = np.empty(L)
    val_sum = [0.0] * K
    rows = np.empty((L, K)) if store else None

    for it in range(sweeps):
        if not fix_mu:
            a = 0.0
            b = 0.0
            for d in range(K):
                a += sy[d] / val[d]
                b += cnt[d] / val[d]
            denom = 1.0 + kappa * b
            mu = (m + kappa * a) / denom + math.sqrt(kappa / denom) * rng.standard_normal()
        for d in range(K):
            acc[d] = 0.0
        for t in range(T):
            r = y[t] - mu
            acc[labels[t]] += r * r
        for d in range(K):
            v = (lambda0 + 0.5 * acc[d]) / rng.standard_gamma(nu0 + 0.5 * cnt[d])
            if not (math.isfinite(v) and v > 0.0):
                return {"status": STATUS_NONFINITE, "sweep": it}
            val[d] = v
        if it >= burn_in:
            i = it - burn_in
            out_mu[i] = mu
            for d in range(K):
                val_sum[d] += val[d]
            if store:
                rows[i, :] = val

    return {
        "status": STATUS_OK,
        "sweep": sweeps,
        "mu": out_mu,
        "value_sum": np.array(val_sum),
        "rows": rows,
    }
