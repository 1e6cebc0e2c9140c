"""Pure-Python implementations of the inner loops.

These mirror ``_ckernels.pyx`` statement for statement; the compiled module
is preferred when it is importable (see :mod:`rbcom.kernels`).
"""

import math

import numpy as np

# Dormand-Prince 5(4) tableau
A21 = 1 / 5
A31, A32 = 3 / 40, 9 / 40
A41, A42, A43 = 44 / 45, -56 / 15, 32 / 9
A51, A52, A53, A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
A61, A62, A63, A64, A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
B1, B3, B4, B5, B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
E1, E3, E4, E5, E6, E7 = (
    71 / 57600,
    -71 / 16695,
    71 / 1920,
    -17253 / 339200,
    22 / 525,
    -1 / 40,
)


def _rhs(n2, phi, rp, tau_f, tau_c, s, sigma_v):
    stim = n2 * phi * sigma_v
    return -stim - n2 / tau_f + rp, stim - phi / tau_c + s


def integrate_rate(
    n2, phi, t, t_end, h,
    rp, tau_f, tau_c, s, sigma_v,
    rtol, atol_n2, atol_phi, max_step,
    conv_tol, hold_needed, hold, max_steps,
):
    """Advance the two-level rate equations with adaptive Dormand-Prince steps.

    Stops at ``t_end``, after ``max_steps`` accepted steps, or once the
    relative stationarity test has held for ``hold_needed`` consecutive
    accepted steps. Steps that would make either density negative are
    rejected and retried with half the step.

    Returns ``(n2, phi, t, h, accepted, rejected, hold, converged)``.
    """
    accepted = 0
    rejected = 0
    converged = False
    k1n, k1p = _rhs(n2, phi, rp, tau_f, tau_c, s, sigma_v)
    while t < t_end and accepted < max_steps:
        if h > max_step:
            h = max_step
        last = False
        if t + h >= t_end:
            h = t_end - t
            last = True

        k2n, k2p = _rhs(n2 + h * A21 * k1n, phi + h * A21 * k1p, rp, tau_f, tau_c, s, sigma_v)
        k3n, k3p = _rhs(
            n2 + h * (A31 * k1n + A32 * k2n),
            phi + h * (A31 * k1p + A32 * k2p),
            rp, tau_f, tau_c, s, sigma_v,
        )
        k4n, k4p = _rhs(
            n2 + h * (A41 * k1n + A42 * k2n + A43 * k3n),
            phi + h * (A41 * k1p + A42 * k2p + A43 * k3p),
            rp, tau_f, tau_c, s, sigma_v,
        )
        k5n, k5p = _rhs(
            n2 + h * (A51 * k1n + A52 * k2n + A53 * k3n + A54 * k4n),
            phi + h * (A51 * k1p + A52 * k2p + A53 * k3p + A54 * k4p),
            rp, tau_f, tau_c, s, sigma_v,
        )
        k6n, k6p = _rhs(
            n2 + h * (A61 * k1n + A62 * k2n + A63 * k3n + A64 * k4n + A65 * k5n),
            phi + h * (A61 * k1p + A62 * k2p + A63 * k3p + A64 * k4p + A65 * k5p),
            rp, tau_f, tau_c, s, sigma_v,
        )
        n2_new = n2 + h * (B1 * k1n + B3 * k3n + B4 * k4n + B5 * k5n + B6 * k6n)
        phi_new = phi + h * (B1 * k1p + B3 * k3p + B4 * k4p + B5 * k5p + B6 * k6p)

        if n2_new < 0.0 or phi_new < 0.0:
            rejected += 1
            h *= 0.5
            continue

        k7n, k7p = _rhs(n2_new, phi_new, rp, tau_f, tau_c, s, sigma_v)
        en = h * (E1 * k1n + E3 * k3n + E4 * k4n + E5 * k5n + E6 * k6n + E7 * k7n)
        ep = h * (E1 * k1p + E3 * k3p + E4 * k4p + E5 * k5p + E6 * k6p + E7 * k7p)
        sn = atol_n2 + rtol * max(abs(n2), abs(n2_new))
        sp = atol_phi + rtol * max(abs(phi), abs(phi_new))
        err = math.sqrt(0.5 * ((en / sn) ** 2 + (ep / sp) ** 2))

        if err > 1.0:
            rejected += 1
            h *= max(0.2, 0.9 * err ** -0.2)
            continue

        t = t_end if last else t + h
        n2, phi = n2_new, phi_new
        k1n, k1p = k7n, k7p
        accepted += 1
        if err == 0.0:
            h *= 5.0
        else:
            h *= min(5.0, max(0.2, 0.9 * err ** -0.2))

        ok_n = abs(k1n) * tau_f <= conv_tol * n2 or (n2 <= atol_n2 and abs(k1n) * tau_f <= atol_n2)
        ok_p = abs(k1p) * tau_c <= conv_tol * phi or (phi <= atol_phi and abs(k1p) * tau_c <= atol_phi)
        if ok_n and ok_p:
            hold += 1
            if hold >= hold_needed:
                converged = True
                break
        else:
            hold = 0
    return n2, phi, t, h, accepted, rejected, hold, converged


def echo_recursion(x, g, dp, da, loop_coef, eta_d, eta_m, seed, blowup):
    """Delay-line recursion of the unfiltered echo channel.

    History before sample 0 is the unmodulated seeded carrier: ``ye = seed``,
    modulator transparency ``eta_m`` and gain ``g[0]``. Returns
    ``(ac, ye, status)`` where ``status`` is the first sample index whose
    magnitude exceeded ``blowup`` or -1.
    """
    n = len(x)
    rt = 2 * dp + 2 * da
    ye = np.zeros(n)
    ac = np.zeros(n)
    xs = [float(v) for v in x]
    gs = [float(v) for v in g]
    g0 = gs[0] if n else 1.0
    status = -1
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

        if abs(v) > blowup:
            status = i
            break
    return ac, ye, status
