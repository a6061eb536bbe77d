"""Dormand-Prince 5(4) integrator with PI step control, specialised to the band model.

The state is y = (b0, a_1, ..., a_N) and the right-hand side

    i dy/dtau = H(tau) y,   H = [[beta tau, g^T], [g, diag(k / tau)]].

Compiled with numba when available; the same code runs as plain Python.
"""
import numpy as np

try:
    from numba import njit
except ImportError:  # pragma: no cover
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f

# Butcher tableau
C2, C3, C4, C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
A21 = 1 / 5
A31, A32 = 3 / 40, 9 / 40
A41, A42, A43 = 44 / 45, -56 / 15, 32 / 9
A51, A52, A53, A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
A61, A62, A63, A64, A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
B1, B3, B4, B5, B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
# fifth minus embedded fourth order weights
E1, E3, E4, E5, E6, E7 = (71 / 57600, -71 / 16695, 71 / 1920, -17253 / 339200,
                          22 / 525, -1 / 40)

SAFETY = 0.9
FAC_MIN, FAC_MAX = 0.2, 5.0
ALPHA, BETA_PI = 0.7 / 5, 0.4 / 5

STATUS_OK = 0
STATUS_STEP_LIMIT = 1
STATUS_STEP_UNDERFLOW = 2


@njit(cache=True)
def _rhs(tau, y, beta, k, g, sign, out):
    n = k.shape[0]
    b0 = y[0]
    acc = beta * tau * b0
    for j in range(n):
        acc += g[j] * y[j + 1]
        out[j + 1] = -1j * sign * (k[j] / tau * y[j + 1] + g[j] * b0)
    out[0] = -1j * sign * acc


@njit(cache=True)
def _step_cap(tau, beta, kmax, cap):
    return cap / (beta * abs(tau) + kmax / abs(tau))


@njit(cache=True)
def integrate(y0, tau0, targets, beta, k, g, sign, rtol, atol, cap, max_steps):
    """Integrate from ``tau0`` through each of the monotone ``targets``.

    Returns (states at targets, accepted steps, rejected steps,
    max norm drift over accepted steps, status code, tau reached).
    """
    m = y0.shape[0]
    n_out = targets.shape[0]
    out = np.zeros((n_out, m), dtype=np.complex128)
    direction = 1.0 if targets[n_out - 1] >= tau0 else -1.0
    kmax = 0.0
    for j in range(k.shape[0]):
        kmax = max(kmax, abs(k[j]))

    y = y0.copy()
    k1 = np.empty(m, np.complex128)
    k2 = np.empty(m, np.complex128)
    k3 = np.empty(m, np.complex128)
    k4 = np.empty(m, np.complex128)
    k5 = np.empty(m, np.complex128)
    k6 = np.empty(m, np.complex128)
    k7 = np.empty(m, np.complex128)
    tmp = np.empty(m, np.complex128)
    ynew = np.empty(m, np.complex128)

    norm0 = 0.0
    for i in range(m):
        norm0 += y[i].real ** 2 + y[i].imag ** 2
    drift = 0.0

    tau = tau0
    _rhs(tau, y, beta, k, g, sign, k1)
    h = 0.1 * _step_cap(tau, beta, kmax, cap)
    err_prev = 1e-4
    accepted = 0
    rejected = 0
    status = STATUS_OK
    idx = 0
    while idx < n_out:
        target = targets[idx]
        if (target - tau) * direction <= 0.0:
            for i in range(m):
                out[idx, i] = y[i]
            idx += 1
            continue
        if accepted + rejected >= max_steps:
            status = STATUS_STEP_LIMIT
            break
        h = min(h, _step_cap(tau, beta, kmax, cap))
        h_free = h
        last = False
        if h >= abs(target - tau):
            h = abs(target - tau)
            last = True
        if h <= 1e-14 * abs(tau):
            status = STATUS_STEP_UNDERFLOW
            break
        dt = direction * h

        for i in range(m):
            tmp[i] = y[i] + dt * A21 * k1[i]
        _rhs(tau + C2 * dt, tmp, beta, k, g, sign, k2)
        for i in range(m):
            tmp[i] = y[i] + dt * (A31 * k1[i] + A32 * k2[i])
        _rhs(tau + C3 * dt, tmp, beta, k, g, sign, k3)
        for i in range(m):
            tmp[i] = y[i] + dt * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i])
        _rhs(tau + C4 * dt, tmp, beta, k, g, sign, k4)
        for i in range(m):
            tmp[i] = y[i] + dt * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i])
        _rhs(tau + C5 * dt, tmp, beta, k, g, sign, k5)
        for i in range(m):
            tmp[i] = y[i] + dt * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i]
                                  + A64 * k4[i] + A65 * k5[i])
        tau_new = target if last else tau + dt
        _rhs(tau_new, tmp, beta, k, g, sign, k6)
        for i in range(m):
            ynew[i] = y[i] + dt * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i]
                                   + B5 * k5[i] + B6 * k6[i])
        _rhs(tau_new, ynew, beta, k, g, sign, k7)

        err = 0.0
        for i in range(m):
            e = dt * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i]
                      + E6 * k6[i] + E7 * k7[i])
            sc = atol + rtol * max(abs(y[i]), abs(ynew[i]))
            err += (abs(e) / sc) ** 2
        err = np.sqrt(err / m)

        if err <= 1.0:
            accepted += 1
            tau = tau_new
            norm = 0.0
            for i in range(m):
                y[i] = ynew[i]
                k1[i] = k7[i]
                norm += y[i].real ** 2 + y[i].imag ** 2
            drift = max(drift, abs(norm - norm0))
            if err == 0.0:
                fac = FAC_MAX
            else:
                fac = SAFETY * err ** (-ALPHA) * err_prev ** BETA_PI
                fac = min(FAC_MAX, max(FAC_MIN, fac))
            err_prev = max(err, 1e-4)
            h = (h_free if last else h) * fac
        else:
            rejected += 1
            h = h * max(FAC_MIN, SAFETY * err ** (-0.2))
    return out, accepted, rejected, drift, status, tau
