# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops; see ``_pykernels.py`` for the reference version."""

from libc.math cimport fabs, sqrt, pow

import numpy as np

cdef double A21 = 1.0 / 5
cdef double A31 = 3.0 / 40, A32 = 9.0 / 40
cdef double A41 = 44.0 / 45, A42 = -56.0 / 15, A43 = 32.0 / 9
cdef double A51 = 19372.0 / 6561, A52 = -25360.0 / 2187, A53 = 64448.0 / 6561, A54 = -212.0 / 729
cdef double A61 = 9017.0 / 3168, A62 = -355.0 / 33, A63 = 46732.0 / 5247, A64 = 49.0 / 176, A65 = -5103.0 / 18656
cdef double B1 = 35.0 / 384, B3 = 500.0 / 1113, B4 = 125.0 / 192, B5 = -2187.0 / 6784, B6 = 11.0 / 84
cdef double E1 = 71.0 / 57600, E3 = -71.0 / 16695, E4 = 71.0 / 1920
cdef double E5 = -17253.0 / 339200, E6 = 22.0 / 525, E7 = -1.0 / 40


cdef inline void _rhs(double n2, double phi, double rp, double tau_f, double tau_c,
                      double s, double sigma_v, double *dn, double *dp) nogil:
    cdef double stim = n2 * phi * sigma_v
    dn[0] = -stim - n2 / tau_f + rp
    dp[0] = stim - phi / tau_c + s


def integrate_rate(double n2, double phi, double t, double t_end, double h,
                   double rp, double tau_f, double tau_c, double s, double sigma_v,
                   double rtol, double atol_n2, double atol_phi, double max_step,
                   double conv_tol, long hold_needed, long hold, long max_steps):
    cdef long accepted = 0, rejected = 0
    cdef bint converged = False, last, ok_n, ok_p
    cdef double k1n, k1p, k2n, k2p, k3n, k3p, k4n, k4p, k5n, k5p, k6n, k6p, k7n, k7p
    cdef double n2_new, phi_new, en, ep, sn, sp, err

    _rhs(n2, phi, rp, tau_f, tau_c, s, sigma_v, &k1n, &k1p)
    with nogil:
        while t < t_end and accepted < max_steps:
            if h > max_step:
                h = max_step
            last = False
            if t + h >= t_end:
                h = t_end - t
                last = True

            _rhs(n2 + h * A21 * k1n, phi + h * A21 * k1p,
                 rp, tau_f, tau_c, s, sigma_v, &k2n, &k2p)
            _rhs(n2 + h * (A31 * k1n + A32 * k2n),
                 phi + h * (A31 * k1p + A32 * k2p),
                 rp, tau_f, tau_c, s, sigma_v, &k3n, &k3p)
            _rhs(n2 + h * (A41 * k1n + A42 * k2n + A43 * k3n),
                 phi + h * (A41 * k1p + A42 * k2p + A43 * k3p),
                 rp, tau_f, tau_c, s, sigma_v, &k4n, &k4p)
            _rhs(n2 + h * (A51 * k1n + A52 * k2n + A53 * k3n + A54 * k4n),
                 phi + h * (A51 * k1p + A52 * k2p + A53 * k3p + A54 * k4p),
                 rp, tau_f, tau_c, s, sigma_v, &k5n, &k5p)
            _rhs(n2 + h * (A61 * k1n + A62 * k2n + A63 * k3n + A64 * k4n + A65 * k5n),
                 phi + h * (A61 * k1p + A62 * k2p + A63 * k3p + A64 * k4p + A65 * k5p),
                 rp, tau_f, tau_c, s, sigma_v, &k6n, &k6p)
            n2_new = n2 + h * (B1 * k1n + B3 * k3n + B4 * k4n + B5 * k5n + B6 * k6n)
            phi_new = phi + h * (B1 * k1p + B3 * k3p + B4 * k4p + B5 * k5p + B6 * k6p)

            if n2_new < 0.0 or phi_new < 0.0:
                rejected += 1
                h *= 0.5
                continue

            _rhs(n2_new, phi_new, rp, tau_f, tau_c, s, sigma_v, &k7n, &k7p)
            en = h * (E1 * k1n + E3 * k3n + E4 * k4n + E5 * k5n + E6 * k6n + E7 * k7n)
            ep = h * (E1 * k1p + E3 * k3p + E4 * k4p + E5 * k5p + E6 * k6p + E7 * k7p)
            sn = atol_n2 + rtol * (fabs(n2) if fabs(n2) > fabs(n2_new) else fabs(n2_new))
            sp = atol_phi + rtol * (fabs(phi) if fabs(phi) > fabs(phi_new) else fabs(phi_new))
            err = sqrt(0.5 * ((en / sn) * (en / sn) + (ep / sp) * (ep / sp)))

            if err > 1.0:
                rejected += 1
                h *= max(0.2, 0.9 * pow(err, -0.2))
                continue

            if last:
                t = t_end
            else:
                t = t + h
            n2 = n2_new
            phi = phi_new
            k1n = k7n
            k1p = k7p
            accepted += 1
            if err == 0.0:
                h *= 5.0
            else:
                h *= min(5.0, max(0.2, 0.9 * pow(err, -0.2)))

            ok_n = (fabs(k1n) * tau_f <= conv_tol * n2
                    or (n2 <= atol_n2 and fabs(k1n) * tau_f <= atol_n2))
            ok_p = (fabs(k1p) * tau_c <= conv_tol * phi
                    or (phi <= atol_phi and fabs(k1p) * tau_c <= atol_phi))
            if ok_n and ok_p:
                hold += 1
                if hold >= hold_needed:
                    converged = True
                    break
            else:
                hold = 0
    return n2, phi, t, h, accepted, rejected, hold, converged


def echo_recursion(x, g, long dp, long da, double loop_coef, double eta_d,
                   double eta_m, double seed, double blowup):
    cdef double[::1] xs = np.ascontiguousarray(x, dtype=np.float64)
    cdef double[::1] gs = np.ascontiguousarray(g, dtype=np.float64)
    cdef long n = xs.shape[0]
    cdef long rt = 2 * dp + 2 * da
    ye_arr = np.zeros(n)
    ac_arr = np.zeros(n)
    cdef double[::1] ye = ye_arr
    cdef double[::1] ac = ac_arr
    cdef double g0 = gs[0] if n > 0 else 1.0
    cdef long status = -1
    cdef long i, j, k, a
    cdef double sx_j, g_j, sx_k, g_k, prev, v, back, sx_a, g_a
    with nogil:
        for i in range(n):
            j = i - dp
            k = i - dp - 2 * da
            sx_j = eta_m * xs[j] if j >= 0 else eta_m
            g_j = gs[j] if j >= 0 else g0
            sx_k = eta_m * xs[k] if k >= 0 else eta_m
            g_k = gs[k] if k >= 0 else g0
            prev = ye[i - rt] if i >= rt else seed
            v = loop_coef * eta_d * eta_d * prev * sx_k * g_j * g_k * sx_j
            ye[i] = v

            a = i - 2 * da
            back = ye[k] if k >= 0 else seed
            sx_a = eta_m * xs[a] if a >= 0 else eta_m
            g_a = gs[a] if a >= 0 else g0
            ac[i] = loop_coef * eta_d * back * sx_a * g_a * gs[i]

            if fabs(v) > blowup:
                status = i
                break
    return ac_arr, ye_arr, status
