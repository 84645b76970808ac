"""Hot numeric kernels with a numba fast path and a vectorized numpy fallback.

Two continuation solvers live here:

* ``pastur_batch`` -- solves the self-consistent fixed point
  m = sum_i p_i / (a_i - z - m) for a batch of upper-half-plane points z,
  following the unique branch down from large Im(z) (damped Newton along a
  geometric eta ladder, companion-matrix root rescue on branch trouble).
* ``cubic_branch_batch`` -- tracks the root of
  xi^3 - z*xi^2 - (a^2-1)*xi + a^2*z = 0 that behaves like z at infinity,
  from z = i*T down to the requested height above the real axis.

Set ``WIGNERSOURCE_NUMBA=0`` to force the numpy path (both implementations
stay importable for benchmarking and equivalence tests).

Status codes: 0 = Newton path, 1 = root rescue was needed, 2 = failed.
"""

import os

import numpy as np

NEWTON_TOL = 1e-14
RESIDUAL_TOL = 1e-12
MAX_NEWTON = 60

_flag = os.environ.get("WIGNERSOURCE_NUMBA", "").strip().lower()
NUMBA_DISABLED = _flag in ("0", "false", "no", "off")

try:
    if NUMBA_DISABLED:
        raise ImportError("numba disabled via WIGNERSOURCE_NUMBA")
    from numba import njit

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False

    def njit(*args, **kwargs):  # decorator stub so the jitted source still defines
        def wrap(fn):
            return fn

        return wrap


# ---------------------------------------------------------------------------
# scalar (numba) implementation
# ---------------------------------------------------------------------------


@njit(cache=True)
def _g_and_gp(locs, wts, w):
    g = 0.0 + 0.0j
    gp = 0.0 + 0.0j
    for k in range(locs.shape[0]):
        d = locs[k] - w
        g += wts[k] / d
        gp += wts[k] / (d * d)
    return g, gp


@njit(cache=True)
def _poly_coeffs(locs, wts, z, out):
    """Monic coefficients (highest power first) of
    P(w) = (w - z) * prod_j (w - a_j) + sum_i p_i prod_{j != i} (w - a_j)."""
    l = locs.shape[0]
    A = np.zeros(l + 1, dtype=np.complex128)  # prod (w - a_j)
    A[0] = 1.0
    for j in range(l):
        for k in range(j + 1, 0, -1):
            A[k] = A[k] - locs[j] * A[k - 1]
    B = np.zeros(l, dtype=np.complex128)  # sum_i p_i prod_{j != i} (w - a_j)
    Bi = np.zeros(l, dtype=np.complex128)
    for i in range(l):
        for k in range(l):
            Bi[k] = 0.0
        Bi[0] = 1.0
        deg = 0
        for j in range(l):
            if j == i:
                continue
            for k in range(deg + 1, 0, -1):
                Bi[k] = Bi[k] - locs[j] * Bi[k - 1]
            deg += 1
        for k in range(l):
            B[k] += wts[i] * Bi[k]
    for k in range(l + 2):
        out[k] = 0.0
    for k in range(l + 1):
        out[k] += A[k]
        out[k + 1] -= z * A[k]
    for k in range(l):
        out[k + 2] += B[k]


@njit(cache=True)
def _poly_roots(coeffs):
    d = coeffs.shape[0] - 1
    C = np.zeros((d, d), dtype=np.complex128)
    for i in range(d - 1):
        C[i + 1, i] = 1.0
    for i in range(d):
        C[0, i] = -coeffs[i + 1] / coeffs[0]
    return np.linalg.eigvals(C)


@njit(cache=True)
def _newton_at(locs, wts, zr, m0):
    m = m0
    g, gp = _g_and_gp(locs, wts, zr + m)
    F = m - g
    for _ in range(MAX_NEWTON):
        if abs(F) < NEWTON_TOL:
            break
        step = F / (1.0 - gp)
        lam = 1.0
        improved = False
        for _ in range(40):
            cand = m - lam * step
            gc, gpc = _g_and_gp(locs, wts, zr + cand)
            Fc = cand - gc
            if abs(Fc) < abs(F):
                m = cand
                F = Fc
                gp = gpc
                improved = True
                break
            lam *= 0.5
        if not improved:
            break
    return m, abs(F)


@njit(cache=True)
def _rescue_at(locs, wts, zr, m_prev, scratch):
    _poly_coeffs(locs, wts, zr, scratch)
    roots = _poly_roots(scratch)
    best = roots[0] - zr
    bestscore = 1e300
    for r in roots:
        cand = r - zr
        if cand.imag >= -1e-9:
            score = abs(cand - m_prev)
            if score < bestscore:
                bestscore = score
                best = cand
    return _newton_at(locs, wts, zr, best)


@njit(cache=True)
def _solve_point(locs, wts, z, ratio, scratch):
    amax = 0.0
    for k in range(locs.shape[0]):
        if abs(locs[k]) > amax:
            amax = abs(locs[k])
    eta0 = 2.0 * (1.0 + amax + abs(z))
    x = z.real
    target = z.imag
    eta = eta0
    prev_eta = eta0
    m = -1.0 / complex(x, eta0)
    status = 0
    while True:
        zr = complex(x, eta)
        m_prev = m
        m, resid = _newton_at(locs, wts, zr, m)
        deta = max(prev_eta - eta, 1e-300) if eta < prev_eta else 1.0
        cap = 10.0 * max(deta, deta ** (1.0 / 3.0))
        if resid > RESIDUAL_TOL or m.imag < -1e-12 or abs(m - m_prev) > cap:
            m, resid = _rescue_at(locs, wts, zr, m_prev, scratch)
            status = 1
            if resid > RESIDUAL_TOL or m.imag < -1e-12:
                return m, resid, 2
        if eta <= target:
            break
        prev_eta = eta
        eta = max(target, eta * ratio)
    if -1e-13 < m.imag < 0.0:
        m = complex(m.real, 0.0)
        g, _ = _g_and_gp(locs, wts, z + m)
        resid = abs(m - g)
    if resid > RESIDUAL_TOL or m.imag < -1e-12:
        return m, resid, 2
    return m, resid, status


@njit(cache=True)
def _pastur_batch_numba_impl(locs, wts, zs):
    npts = zs.shape[0]
    out = np.empty(npts, dtype=np.complex128)
    resid = np.empty(npts, dtype=np.float64)
    status = np.empty(npts, dtype=np.int64)
    scratch = np.empty(locs.shape[0] + 2, dtype=np.complex128)
    for i in range(npts):
        m, r, s = _solve_point(locs, wts, zs[i], 0.5, scratch)
        if s == 2:
            m, r, s = _solve_point(locs, wts, zs[i], 0.8, scratch)
        out[i] = m
        resid[i] = r
        status[i] = s
    return out, resid, status


@njit(cache=True)
def _cubic_branch_batch_numba_impl(xs, a, im_target, t_start):
    npts = xs.shape[0]
    out = np.empty(npts, dtype=np.complex128)
    C = np.zeros((3, 3), dtype=np.complex128)
    C[1, 0] = 1.0
    C[2, 1] = 1.0
    a2 = a * a
    for i in range(npts):
        eta = t_start
        xi = complex(0.0, 0.0)
        first = True
        while True:
            z = complex(xs[i], eta)
            C[0, 0] = z
            C[0, 1] = a2 - 1.0
            C[0, 2] = -a2 * z
            roots = np.linalg.eigvals(C)
            ref = z if first else xi
            best = roots[0]
            bestd = abs(roots[0] - ref)
            for k in range(1, 3):
                d = abs(roots[k] - ref)
                if d < bestd:
                    bestd = d
                    best = roots[k]
            xi = best
            first = False
            if eta <= im_target:
                break
            eta = max(im_target, eta * 0.5)
        out[i] = xi
    return out


# ---------------------------------------------------------------------------
# vectorized numpy implementation
# ---------------------------------------------------------------------------


def _g_numpy(locs, wts, w):
    return np.sum(wts / (locs - np.asarray(w)[..., None]), axis=-1)


def _gp_numpy(locs, wts, w):
    return np.sum(wts / (locs - np.asarray(w)[..., None]) ** 2, axis=-1)


def _poly_coeffs_numpy(locs, wts, z):
    A = np.array([1.0 + 0.0j])
    for a in locs:
        A = np.convolve(A, np.array([1.0, -a], dtype=np.complex128))
    B = np.zeros(len(locs), dtype=np.complex128)
    for i in range(len(locs)):
        Bi = np.array([1.0 + 0.0j])
        for j, aj in enumerate(locs):
            if j != i:
                Bi = np.convolve(Bi, np.array([1.0, -aj], dtype=np.complex128))
        B += wts[i] * Bi
    P = np.convolve(np.array([1.0, -z], dtype=np.complex128), A)
    P[-len(B):] += B
    return P


def _rescue_numpy(locs, wts, z, m_prev):
    roots = np.roots(_poly_coeffs_numpy(locs, wts, z))
    cands = roots - z
    ok = cands.imag >= -1e-9
    if not np.any(ok):
        ok = np.ones(cands.shape, dtype=bool)
    cands = cands[ok]
    m = cands[np.argmin(np.abs(cands - m_prev))]
    for _ in range(MAX_NEWTON):
        w = z + m
        g = np.sum(wts / (locs - w))
        F = m - g
        if abs(F) < NEWTON_TOL:
            break
        gp = np.sum(wts / (locs - w) ** 2)
        m = m - F / (1.0 - gp)
    return m, abs(m - np.sum(wts / (locs - (z + m))))


def _newton_batch_numpy(locs, wts, zr, m):
    F = m - _g_numpy(locs, wts, zr + m)
    for _ in range(MAX_NEWTON):
        active = np.abs(F) >= NEWTON_TOL
        if not np.any(active):
            break
        gp = _gp_numpy(locs, wts, zr + m)
        step = np.where(active, F / (1.0 - gp), 0.0)
        lam = np.ones(m.shape)
        accepted = ~active
        progressed = False
        for _ in range(40):
            cand = m - lam * step
            Fc = cand - _g_numpy(locs, wts, zr + cand)
            better = ~accepted & (np.abs(Fc) < np.abs(F))
            m = np.where(better, cand, m)
            F = np.where(better, Fc, F)
            progressed = progressed or bool(np.any(better))
            accepted |= better
            if np.all(accepted):
                break
            lam = np.where(accepted, lam, lam * 0.5)
        if not progressed:
            break
    return m, np.abs(F)


def _pastur_batch_numpy(locs, wts, zs, ratio=0.5):
    locs = np.asarray(locs, dtype=np.float64)
    wts = np.asarray(wts, dtype=np.float64)
    zs = np.atleast_1d(np.asarray(zs, dtype=np.complex128))
    x = zs.real
    target = zs.imag
    eta0 = 2.0 * (1.0 + np.max(np.abs(locs)) + np.abs(zs))
    eta = eta0.copy()
    prev_eta = eta0.copy()
    m = -1.0 / (x + 1j * eta0)
    status = np.zeros(zs.shape[0], dtype=np.int64)
    first = True
    while True:
        zr = x + 1j * eta
        m_prev = m.copy()
        m, resid = _newton_batch_numpy(locs, wts, zr, m)
        deta = np.where(first, 1.0, np.maximum(prev_eta - eta, 1e-300))
        cap = 10.0 * np.maximum(deta, np.cbrt(deta))
        bad = (resid > RESIDUAL_TOL) | (m.imag < -1e-12) | (np.abs(m - m_prev) > cap)
        for i in np.nonzero(bad)[0]:
            mi, ri = _rescue_numpy(locs, wts, zr[i], m_prev[i])
            m[i] = mi
            resid[i] = ri
            if ri > RESIDUAL_TOL or mi.imag < -1e-12:
                status[i] = 2
            else:
                status[i] = max(status[i], 1)
        first = False
        if np.all(eta <= target):
            break
        prev_eta = eta.copy()
        eta = np.maximum(target, eta * ratio)
    small_neg = (m.imag < 0.0) & (m.imag > -1e-13)
    if np.any(small_neg):
        m = np.where(small_neg, m.real + 0.0j, m)
        resid = np.where(small_neg, np.abs(m - _g_numpy(locs, wts, zs + m)), resid)
    fail = (resid > RESIDUAL_TOL) | (m.imag < -1e-12)
    status = np.where(fail, 2, np.minimum(status, 1))
    return m, resid, status


def _cubic_branch_batch_numpy(xs, a, im_target, t_start):
    xs = np.atleast_1d(np.asarray(xs, dtype=np.float64))
    n = xs.shape[0]
    a2 = a * a
    etas = [t_start]
    while etas[-1] > im_target:
        etas.append(max(im_target, etas[-1] * 0.5))
    C = np.zeros((n, 3, 3), dtype=np.complex128)
    C[:, 1, 0] = 1.0
    C[:, 2, 1] = 1.0
    xi = None
    for eta in etas:
        z = xs + 1j * eta
        C[:, 0, 0] = z
        C[:, 0, 1] = a2 - 1.0
        C[:, 0, 2] = -a2 * z
        roots = np.linalg.eigvals(C)
        ref = z if xi is None else xi
        pick = np.argmin(np.abs(roots - ref[:, None]), axis=1)
        xi = roots[np.arange(n), pick]
    return xi


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------


def pastur_batch(locs, wts, zs):
    """Solve the fixed point for a batch of z; returns (m, residual, status)."""
    locs = np.ascontiguousarray(locs, dtype=np.float64)
    wts = np.ascontiguousarray(wts, dtype=np.float64)
    zs = np.ascontiguousarray(np.atleast_1d(zs), dtype=np.complex128)
    if HAVE_NUMBA:
        return _pastur_batch_numba_impl(locs, wts, zs)
    m, resid, status = _pastur_batch_numpy(locs, wts, zs)
    retry = status == 2
    if np.any(retry):
        m2, r2, s2 = _pastur_batch_numpy(locs, wts, zs[retry], ratio=0.8)
        m[retry], resid[retry], status[retry] = m2, r2, s2
    return m, resid, status


def cubic_branch_batch(xs, a, im_target, t_start):
    """Track the z-asymptotic cubic root for each x down to x + i*im_target."""
    xs = np.ascontiguousarray(np.atleast_1d(xs), dtype=np.float64)
    if HAVE_NUMBA:
        return _cubic_branch_batch_numba_impl(xs, float(a), float(im_target), float(t_start))
    return _cubic_branch_batch_numpy(xs, float(a), float(im_target), float(t_start))


def pastur_batch_numpy(locs, wts, zs):
    """Pure-numpy path, exposed for benchmarks and equivalence tests."""
    locs = np.ascontiguousarray(locs, dtype=np.float64)
    wts = np.ascontiguousarray(wts, dtype=np.float64)
    zs = np.ascontiguousarray(np.atleast_1d(zs), dtype=np.complex128)
    m, resid, status = _pastur_batch_numpy(locs, wts, zs)
    retry = status == 2
    if np.any(retry):
        m2, r2, s2 = _pastur_batch_numpy(locs, wts, zs[retry], ratio=0.8)
        m[retry], resid[retry], status[retry] = m2, r2, s2
    return m, resid, status


def cubic_branch_batch_numpy(xs, a, im_target, t_start):
    xs = np.ascontiguousarray(np.atleast_1d(xs), dtype=np.float64)
    return _cubic_branch_batch_numpy(xs, float(a), float(im_target), float(t_start))


pastur_batch_numba = _pastur_batch_numba_impl if HAVE_NUMBA else None
cubic_branch_batch_numba = _cubic_branch_batch_numba_impl if HAVE_NUMBA else None
