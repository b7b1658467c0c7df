"""Hot loops. Written in the numba-compatible subset of Python + numpy."""

import numpy as np

from ._jit import njit

MAX_SWEEPS = 80
_EPS = 2.220446049250313e-16


@njit
def jacobi_svd(a):
    """One-sided (Hestenes) Jacobi SVD of a tall or square matrix.

    Returns ``(u, s, v, sweeps)``; ``sweeps == -1`` signals that the
    off-diagonal mass did not vanish within ``MAX_SWEEPS`` sweeps. Columns of
    ``u`` attached to (numerically) zero singular values are completed to an
    orthonormal set, so ``u`` always has orthonormal columns.
    """
    m, n = a.shape
    # work at unit scale so squared column norms cannot underflow
    scale = 0.0
    for i in range(m):
        for j in range(n):
            scale = max(scale, abs(a[i, j]))
    w = a / scale if scale > 0.0 else a.copy()
    v = np.eye(n)
    tol = _EPS * max(m, 1)
    sweeps = -1
    for sweep in range(MAX_SWEEPS):
        rotated = False
        for p in range(n - 1):
            for q in range(p + 1, n):
                alpha = 0.0
                beta = 0.0
                gamma = 0.0
                for i in range(m):
                    alpha += w[i, p] * w[i, p]
                    beta += w[i, q] * w[i, q]
                    gamma += w[i, p] * w[i, q]
                if gamma == 0.0 or alpha == 0.0 or beta == 0.0 or abs(gamma) <= tol * np.sqrt(alpha) * np.sqrt(beta):
                    continue
                zeta = (beta - alpha) / (2.0 * gamma)
                if abs(zeta) > 1e150:
                    t = 0.5 / abs(zeta)
                else:
                    t = 1.0 / (abs(zeta) + np.sqrt(1.0 + zeta * zeta))
                if t == 0.0:
                    continue
                rotated = True
                if zeta < 0.0:
                    t = -t
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = c * t
                for i in range(m):
                    wp = w[i, p]
                    wq = w[i, q]
                    w[i, p] = c * wp - s * wq
                    w[i, q] = s * wp + c * wq
                for i in range(n):
                    vp = v[i, p]
                    vq = v[i, q]
                    v[i, p] = c * vp - s * vq
                    v[i, q] = s * vp + c * vq
        if not rotated:
            sweeps = sweep + 1
            break

    sv = np.empty(n)
    for j in range(n):
        acc = 0.0
        for i in range(m):
            acc += w[i, j] * w[i, j]
        sv[j] = np.sqrt(acc) * scale

    order = np.argsort(-sv, kind="mergesort")
    s_sorted = np.empty(n)
    u = np.zeros((m, n))
    v_sorted = np.empty((n, n))
    for k in range(n):
        j = order[k]
        s_sorted[k] = sv[j]
        for i in range(n):
            v_sorted[i, k] = v[i, j]

    smax = s_sorted[0] if n > 0 else 0.0
    floor = smax * 1e-14
    deficient = np.zeros(n, dtype=np.bool_)
    for k in range(n):
        j = order[k]
        if s_sorted[k] == 0.0 or s_sorted[k] <= floor:
            deficient[k] = True
        else:
            for i in range(m):
                u[i, k] = w[i, j] * scale / s_sorted[k]

    for k in range(n):
        if not deficient[k]:
            continue
        for e in range(m):
            cand = np.zeros(m)
            cand[e] = 1.0
            for _ in range(2):
                for other in range(n):
                    if other == k or (deficient[other] and other > k):
                        continue
                    proj = 0.0
                    for i in range(m):
                        proj += u[i, other] * cand[i]
                    for i in range(m):
                        cand[i] -= proj * u[i, other]
            nrm = 0.0
            for i in range(m):
                nrm += cand[i] * cand[i]
            nrm = np.sqrt(nrm)
            if nrm > 0.5:
                for i in range(m):
                    u[i, k] = cand[i] / nrm
                break
    return u, s_sorted, v_sorted, sweeps


@njit
def adam_update(p, g, m, v, t, eta, beta1, beta2, eps, decay):
    """In-place Adam/AdamW update of flat arrays; ``t`` is the already-incremented step.

    Returns False if any updated entry is non-finite.
    """
    c1 = 1.0 - beta1**t
    c2 = 1.0 - beta2**t
    ok = True
    for i in range(p.size):
        gi = g[i]
        m[i] = beta1 * m[i] + (1.0 - beta1) * gi
        v[i] = beta2 * v[i] + (1.0 - beta2) * gi * gi
        m_hat = m[i] / c1
        v_hat = v[i] / c2
        p[i] = p[i] - eta * (m_hat / (np.sqrt(v_hat) + eps) + decay * p[i])
        if not np.isfinite(p[i]):
            ok = False
    return ok


@njit
def momentum_update(p, g, h, noise, eta, mu, sigma, decay):
    """In-place heavy-ball step with decoupled decay and additive gradient noise."""
    ok = True
    for i in range(p.size):
        h[i] = (1.0 - mu) * h[i] + mu * (g[i] + sigma * noise[i])
        p[i] = p[i] - eta * (h[i] + decay * p[i])
        if not np.isfinite(p[i]):
            ok = False
    return ok


@njit
def sgd_update(p, g, eta):
    ok = True
    for i in range(p.size):
        p[i] = p[i] - eta * g[i]
        if not np.isfinite(p[i]):
            ok = False
    return ok
