"""Batch kernels for frame generation and the second-variation formulas.

Every formula exists twice: a vectorized numpy route built on einsum and a
scalar-loop numba route compiled with ``@njit``.  The two implementations
share no intermediate code, so their agreement is a real consistency check
and the benchmark comparison is honest.  All kernels take factor-1
projections as stacked row batches:

``E1``   tangent projections, shape ``(B, n, m1)``
``N1``   normal projections, shape ``(B, d, m1)``
``J``    complex structure, shape ``(m1, m1)``
``JS``   quaternionic structures stacked, shape ``(3, m1, m1)``

and return one value per frame (or per frame and structure index ``s`` for
the quaternionic closed forms).  Inner products with structure images are
always evaluated as written in the underlying identity, including the terms
that vanish by skewness; collapsing them would turn the cross-formula
agreement checks into tautologies.
"""

from __future__ import annotations

import numpy as np

from ._backend import NUMBA_AVAILABLE

if NUMBA_AVAILABLE:
    from numba import njit
else:  # pragma: no cover - exercised only when numba is absent
    njit = None


# Residual threshold below which a row is declared linearly dependent,
# relative to its norm before orthogonalization.
DEGENERATE_ROW_RTOL = 1e-8


def orthonormalize_batch(raw: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Two-sweep modified Gram-Schmidt over a batch of frames.

    Parameters
    ----------
    raw : ndarray, shape (B, k, m)
        Row vectors to orthonormalize, one frame per batch entry.

    Returns
    -------
    frames : ndarray, shape (B, k, m)
        Orthonormal rows where ``ok`` is true; garbage rows elsewhere.
    ok : ndarray of bool, shape (B,)
        False for frames where some row lost essentially all of its norm
        during the first sweep (numerically dependent input).
    """
    out = np.array(raw, dtype=np.float64, copy=True)
    B, k, m = out.shape
    if k > m:
        raise ValueError(f"cannot orthonormalize {k} rows in dimension {m}")
    ok = np.ones(B, dtype=bool)
    first_norms = np.linalg.norm(out, axis=2)
    for sweep in range(2):
        for i in range(k):
            v = out[:, i, :]
            for j in range(i):
                u = out[:, j, :]
                v -= np.sum(v * u, axis=1)[:, None] * u
            norm = np.linalg.norm(v, axis=1)
            if sweep == 0:
                ok &= norm > DEGENERATE_ROW_RTOL * first_norms[:, i]
            v /= np.maximum(norm, 1e-150)[:, None]
    return out, ok


# ---------------------------------------------------------------------------
# numpy routes, complex kind
# ---------------------------------------------------------------------------


def q_sff_numpy(E1, N1, J, lam):
    """Second-fundamental-form route: sums of B-value inner products."""
    JE = E1 @ J.T
    JN = N1 @ J.T
    a = np.einsum("bjm,bjm->bj", E1, E1)
    b = np.einsum("bkm,bkm->bk", N1, N1)
    c = np.einsum("bjm,bkm->bjk", E1, N1)
    r = np.einsum("bjm,bkm->bjk", JE, N1)
    s = np.einsum("bjm,bkm->bjk", E1, JN)
    p = np.einsum("bjm,bjm->bj", JE, E1)
    q = np.einsum("bkm,bkm->bk", JN, N1)
    ab = a[:, :, None] * b[:, None, :]
    pq = p[:, :, None] * q[:, None, :]
    quarter = 0.25 * lam
    # <R(e,e)eta,eta>: kept although skewness kills it analytically
    r_eeNN = quarter * (c * c - c * c + r * r - r * r + 2.0 * pq)
    # <R(e,eta)e,eta>
    r_eNeN = quarter * (c * c - ab + s * r - pq + 2.0 * s * r)
    # <R(eta,e)e,eta>
    r_NeeN = quarter * (ab - c * c + pq - s * r + 2.0 * r * r)
    bb_mixed = (r_eeNN + r_eNeN + lam * (c * c + c * c + ab)) / 3.0
    bb_diag = (r_NeeN + r_NeeN + lam * (ab + c * c + c * c)) / 3.0
    return np.einsum("bjk->b", 2.0 * bb_mixed - bb_diag)


def q_curvature_numpy(E1, N1, J, lam):
    """Curvature route: mixed sectional terms plus metric corrections."""
    JE = E1 @ J.T
    JN = N1 @ J.T
    a = np.einsum("bjm,bjm->bj", E1, E1)
    b = np.einsum("bkm,bkm->bk", N1, N1)
    c = np.einsum("bjm,bkm->bjk", E1, N1)
    r = np.einsum("bjm,bkm->bjk", JE, N1)
    s = np.einsum("bjm,bkm->bjk", E1, JN)
    p = np.einsum("bjm,bjm->bj", JE, E1)
    q = np.einsum("bkm,bkm->bk", JN, N1)
    ab = a[:, :, None] * b[:, None, :]
    pq = p[:, :, None] * q[:, None, :]
    # <R(e,eta)eta,e> written with all five metric terms
    r_eNNe = 0.25 * lam * (ab - c * c + pq - r * s + 2.0 * s * s)
    total = -(4.0 / 3.0) * r_eNNe + (2.0 * lam / 3.0) * c * c + (lam / 3.0) * ab
    return np.einsum("bjk->b", total)


def q_mid_numpy(E1, N1, J, lam):
    """Mixed tangent-normal route."""
    JN = N1 @ J.T
    c = np.einsum("bjm,bkm->bjk", E1, N1)
    s = np.einsum("bjm,bkm->bjk", E1, JN)
    return lam * (np.einsum("bjk,bjk->b", c, c) - np.einsum("bjk,bjk->b", s, s))


def q_normal_numpy(N1, J, lam):
    """Closed form over the normal projections (complete frames)."""
    JN = N1 @ J.T
    g = np.einsum("bkm,blm->bkl", N1, N1)
    jg = np.einsum("bkm,blm->bkl", JN, N1)
    return lam * (np.einsum("bkl,bkl->b", jg, jg) - np.einsum("bkl,bkl->b", g, g))


def q_tangent_numpy(E1, J, lam):
    """Closed form over the tangent projections (complete frames)."""
    JE = E1 @ J.T
    g = np.einsum("bjm,bim->bji", E1, E1)
    jg = np.einsum("bjm,bim->bji", JE, E1)
    return lam * (np.einsum("bji,bji->b", jg, jg) - np.einsum("bji,bji->b", g, g))


# ---------------------------------------------------------------------------
# numpy routes, quaternionic kind
# ---------------------------------------------------------------------------


def q_sff_quat_numpy(E1, N1, JS, lam):
    a = np.einsum("bjm,bjm->bj", E1, E1)
    b = np.einsum("bkm,bkm->bk", N1, N1)
    c = np.einsum("bjm,bkm->bjk", E1, N1)
    ab = a[:, :, None] * b[:, None, :]
    quarter = 0.25 * lam
    r_eeNN = quarter * (c * c - c * c)
    r_eNeN = quarter * (c * c - ab)
    r_NeeN = quarter * (ab - c * c)
    for J in JS:
        JE = E1 @ J.T
        JN = N1 @ J.T
        r = np.einsum("bjm,bkm->bjk", JE, N1)
        s = np.einsum("bjm,bkm->bjk", E1, JN)
        p = np.einsum("bjm,bjm->bj", JE, E1)
        q = np.einsum("bkm,bkm->bk", JN, N1)
        pq = p[:, :, None] * q[:, None, :]
        r_eeNN = r_eeNN + quarter * (2.0 * pq + r * r - r * r)
        r_eNeN = r_eNeN + quarter * (2.0 * s * r + s * r - pq)
        r_NeeN = r_NeeN + quarter * (2.0 * r * r + pq - s * r)
    bb_mixed = (r_eeNN + r_eNeN + lam * (c * c + c * c + ab)) / 3.0
    bb_diag = (r_NeeN + r_NeeN + lam * (ab + c * c + c * c)) / 3.0
    return np.einsum("bjk->b", 2.0 * bb_mixed - bb_diag)


def q_curvature_quat_numpy(E1, N1, JS, lam):
    a = np.einsum("bjm,bjm->bj", E1, E1)
    b = np.einsum("bkm,bkm->bk", N1, N1)
    c = np.einsum("bjm,bkm->bjk", E1, N1)
    ab = a[:, :, None] * b[:, None, :]
    r_eNNe = 0.25 * lam * (ab - c * c)
    for J in JS:
        JE = E1 @ J.T
        JN = N1 @ J.T
        r = np.einsum("bjm,bkm->bjk", JE, N1)
        s = np.einsum("bjm,bkm->bjk", E1, JN)
        p = np.einsum("bjm,bjm->bj", JE, E1)
        q = np.einsum("bkm,bkm->bk", JN, N1)
        pq = p[:, :, None] * q[:, None, :]
        r_eNNe = r_eNNe + 0.25 * lam * (2.0 * s * s + pq - r * s)
    total = -(4.0 / 3.0) * r_eNNe + (2.0 * lam / 3.0) * c * c + (lam / 3.0) * ab
    return np.einsum("bjk->b", total)


def q_mid_quat_numpy(E1, N1, JS, lam):
    c = np.einsum("bjm,bkm->bjk", E1, N1)
    acc = np.einsum("bjk,bjk->b", c, c)
    for J in JS:
        JN = N1 @ J.T
        s = np.einsum("bjm,bkm->bjk", E1, JN)
        acc = acc - np.einsum("bjk,bjk->b", s, s)
    return lam * acc


def q_normal_quat_numpy(E1, N1, JS, lam):
    """Per-structure closed form over normal projections, shape (B, 3)."""
    B = N1.shape[0]
    g = np.einsum("bkm,blm->bkl", N1, N1)
    gg = np.einsum("bkl,bkl->b", g, g)
    cross = np.empty((3, B))
    pure = np.empty((3, B))
    for k, J in enumerate(JS):
        JN = N1 @ J.T
        ce = np.einsum("bkm,bjm->bkj", JN, E1)
        cross[k] = np.einsum("bkj,bkj->b", ce, ce)
        jg = np.einsum("bkm,blm->bkl", JN, N1)
        pure[k] = np.einsum("bkl,bkl->b", jg, jg)
    out = np.empty((B, 3))
    for s in range(3):
        others = [k for k in range(3) if k != s]
        out[:, s] = lam * (-cross[others[0]] - cross[others[1]] + pure[s] - gg)
    return out


def q_tangent_quat_numpy(E1, N1, JS, lam):
    """Per-structure closed form over tangent projections, shape (B, 3)."""
    B = E1.shape[0]
    g = np.einsum("bjm,bim->bji", E1, E1)
    gg = np.einsum("bji,bji->b", g, g)
    cross = np.empty((3, B))
    pure = np.empty((3, B))
    for k, J in enumerate(JS):
        JN = N1 @ J.T
        ce = np.einsum("bkm,bjm->bkj", JN, E1)
        cross[k] = np.einsum("bkj,bkj->b", ce, ce)
        JE = E1 @ J.T
        jt = np.einsum("bjm,bim->bji", JE, E1)
        pure[k] = np.einsum("bji,bji->b", jt, jt)
    out = np.empty((B, 3))
    for s in range(3):
        others = [k for k in range(3) if k != s]
        out[:, s] = lam * (-cross[others[0]] - cross[others[1]] + pure[s] - gg)
    return out


# ---------------------------------------------------------------------------
# numba routes
# ---------------------------------------------------------------------------

if NUMBA_AVAILABLE:

    @njit(cache=True)
    def q_sff_numba(E1, N1, J, lam):
        B, n, m = E1.shape
        d = N1.shape[1]
        out = np.empty(B)
        quarter = 0.25 * lam
        for f in range(B):
            je = E1[f] @ J.T
            jn = N1[f] @ J.T
            acc = 0.0
            for j in range(n):
                a = np.dot(E1[f, j], E1[f, j])
                p = np.dot(je[j], E1[f, j])
                for k in range(d):
                    b = np.dot(N1[f, k], N1[f, k])
                    q = np.dot(jn[k], N1[f, k])
                    c = np.dot(E1[f, j], N1[f, k])
                    r = np.dot(je[j], N1[f, k])
                    s = np.dot(E1[f, j], jn[k])
                    r_eeNN = quarter * (c * c - c * c + r * r - r * r + 2.0 * p * q)
                    r_eNeN = quarter * (c * c - a * b + s * r - p * q + 2.0 * s * r)
                    r_NeeN = quarter * (a * b - c * c + p * q - s * r + 2.0 * r * r)
                    bb_mixed = (r_eeNN + r_eNeN + lam * (c * c + c * c + a * b)) / 3.0
                    bb_diag = (2.0 * r_NeeN + lam * (a * b + c * c + c * c)) / 3.0
                    acc += 2.0 * bb_mixed - bb_diag
            out[f] = acc
        return out

    @njit(cache=True)
    def q_curvature_numba(E1, N1, J, lam):
        B, n, m = E1.shape
        d = N1.shape[1]
        out = np.empty(B)
        for f in range(B):
            je = E1[f] @ J.T
            jn = N1[f] @ J.T
            acc = 0.0
            for j in range(n):
                a = np.dot(E1[f, j], E1[f, j])
                p = np.dot(je[j], E1[f, j])
                for k in range(d):
                    b = np.dot(N1[f, k], N1[f, k])
                    q = np.dot(jn[k], N1[f, k])
                    c = np.dot(E1[f, j], N1[f, k])
                    r = np.dot(je[j], N1[f, k])
                    s = np.dot(E1[f, j], jn[k])
                    r_eNNe = 0.25 * lam * (a * b - c * c + p * q - r * s + 2.0 * s * s)
                    acc += (
                        -(4.0 / 3.0) * r_eNNe
                        + (2.0 * lam / 3.0) * c * c
                        + (lam / 3.0) * a * b
                    )
            out[f] = acc
        return out

    @njit(cache=True)
    def q_mid_numba(E1, N1, J, lam):
        B, n, m = E1.shape
        d = N1.shape[1]
        out = np.empty(B)
        for f in range(B):
            jn = N1[f] @ J.T
            acc = 0.0
            for j in range(n):
                for k in range(d):
                    c = np.dot(E1[f, j], N1[f, k])
                    s = np.dot(E1[f, j], jn[k])
                    acc += c * c - s * s
            out[f] = lam * acc
        return out

    @njit(cache=True)
    def q_normal_numba(N1, J, lam):
        B, d, m = N1.shape
        out = np.empty(B)
        for f in range(B):
            jn = N1[f] @ J.T
            acc = 0.0
            for k in range(d):
                for l in range(d):
                    jg = np.dot(jn[k], N1[f, l])
                    g = np.dot(N1[f, k], N1[f, l])
                    acc += jg * jg - g * g
            out[f] = lam * acc
        return out

    @njit(cache=True)
    def q_tangent_numba(E1, J, lam):
        B, n, m = E1.shape
        out = np.empty(B)
        for f in range(B):
            je = E1[f] @ J.T
            acc = 0.0
            for j in range(n):
                for i in range(n):
                    jg = np.dot(je[j], E1[f, i])
                    g = np.dot(E1[f, j], E1[f, i])
                    acc += jg * jg - g * g
            out[f] = lam * acc
        return out

    @njit(cache=True)
    def q_sff_quat_numba(E1, N1, JS, lam):
        B, n, m = E1.shape
        d = N1.shape[1]
        out = np.empty(B)
        quarter = 0.25 * lam
        for f in range(B):
            acc = 0.0
            je0 = E1[f] @ JS[0].T
            je1 = E1[f] @ JS[1].T
            je2 = E1[f] @ JS[2].T
            jn0 = N1[f] @ JS[0].T
            jn1 = N1[f] @ JS[1].T
            jn2 = N1[f] @ JS[2].T
            for j in range(n):
                a = np.dot(E1[f, j], E1[f, j])
                for k in range(d):
                    b = np.dot(N1[f, k], N1[f, k])
                    c = np.dot(E1[f, j], N1[f, k])
                    r_eeNN = quarter * (c * c - c * c)
                    r_eNeN = quarter * (c * c - a * b)
                    r_NeeN = quarter * (a * b - c * c)
                    for t in range(3):
                        if t == 0:
                            je = je0
                            jn = jn0
                        elif t == 1:
                            je = je1
                            jn = jn1
                        else:
                            je = je2
                            jn = jn2
                        p = np.dot(je[j], E1[f, j])
                        q = np.dot(jn[k], N1[f, k])
                        r = np.dot(je[j], N1[f, k])
                        s = np.dot(E1[f, j], jn[k])
                        r_eeNN += quarter * (2.0 * p * q + r * r - r * r)
                        r_eNeN += quarter * (2.0 * s * r + s * r - p * q)
                        r_NeeN += quarter * (2.0 * r * r + p * q - s * r)
                    bb_mixed = (r_eeNN + r_eNeN + lam * (c * c + c * c + a * b)) / 3.0
                    bb_diag = (2.0 * r_NeeN + lam * (a * b + c * c + c * c)) / 3.0
                    acc += 2.0 * bb_mixed - bb_diag
            out[f] = acc
        return out

    @njit(cache=True)
    def q_curvature_quat_numba(E1, N1, JS, lam):
        B, n, m = E1.shape
        d = N1.shape[1]
        out = np.empty(B)
        for f in range(B):
            acc = 0.0
            je0 = E1[f] @ JS[0].T
            je1 = E1[f] @ JS[1].T
            je2 = E1[f] @ JS[2].T
            jn0 = N1[f] @ JS[0].T
            jn1 = N1[f] @ JS[1].T
            jn2 = N1[f] @ JS[2].T
            for j in range(n):
                a = np.dot(E1[f, j], E1[f, j])
                for k in range(d):
                    b = np.dot(N1[f, k], N1[f, k])
                    c = np.dot(E1[f, j], N1[f, k])
                    r_eNNe = 0.25 * lam * (a * b - c * c)
                    for t in range(3):
                        if t == 0:
                            je = je0
                            jn = jn0
                        elif t == 1:
                            je = je1
                            jn = jn1
                        else:
                            je = je2
                            jn = jn2
                        p = np.dot(je[j], E1[f, j])
                        q = np.dot(jn[k], N1[f, k])
                        r = np.dot(je[j], N1[f, k])
                        s = np.dot(E1[f, j], jn[k])
                        r_eNNe += 0.25 * lam * (2.0 * s * s + p * q - r * s)
                    acc += (
                        -(4.0 / 3.0) * r_eNNe
                        + (2.0 * lam / 3.0) * c * c
                        + (lam / 3.0) * a * b
                    )
            out[f] = acc
        return out

    @njit(cache=True)
    def q_mid_quat_numba(E1, N1, JS, lam):
        B, n, m = E1.shape
        d = N1.shape[1]
        out = np.empty(B)
        for f in range(B):
            jn0 = N1[f] @ JS[0].T
            jn1 = N1[f] @ JS[1].T
            jn2 = N1[f] @ JS[2].T
            acc = 0.0
            for j in range(n):
                for k in range(d):
                    c = np.dot(E1[f, j], N1[f, k])
                    s0 = np.dot(E1[f, j], jn0[k])
                    s1 = np.dot(E1[f, j], jn1[k])
                    s2 = np.dot(E1[f, j], jn2[k])
                    acc += c * c - s0 * s0 - s1 * s1 - s2 * s2
            out[f] = lam * acc
        return out

    @njit(cache=True)
    def q_normal_quat_numba(E1, N1, JS, lam):
        B, n, m = E1.shape
        d = N1.shape[1]
        out = np.empty((B, 3))
        for f in range(B):
            cross = np.zeros(3)
            pure = np.zeros(3)
            gg = 0.0
            for k in range(d):
                for l in range(d):
                    g = np.dot(N1[f, k], N1[f, l])
                    gg += g * g
            for t in range(3):
                jn = N1[f] @ JS[t].T
                for k in range(d):
                    for j in range(n):
                        v = np.dot(jn[k], E1[f, j])
                        cross[t] += v * v
                    for l in range(d):
                        v = np.dot(jn[k], N1[f, l])
                        pure[t] += v * v
            for s in range(3):
                tot = pure[s] - gg
                for t in range(3):
                    if t != s:
                        tot -= cross[t]
                out[f, s] = lam * tot
        return out

    @njit(cache=True)
    def q_tangent_quat_numba(E1, N1, JS, lam):
        B, n, m = E1.shape
        d = N1.shape[1]
        out = np.empty((B, 3))
        for f in range(B):
            cross = np.zeros(3)
            pure = np.zeros(3)
            gg = 0.0
            for j in range(n):
                for i in range(n):
                    g = np.dot(E1[f, j], E1[f, i])
                    gg += g * g
            for t in range(3):
                jn = N1[f] @ JS[t].T
                je = E1[f] @ JS[t].T
                for k in range(d):
                    for j in range(n):
                        v = np.dot(jn[k], E1[f, j])
                        cross[t] += v * v
                for j in range(n):
                    for i in range(n):
                        v = np.dot(je[j], E1[f, i])
                        pure[t] += v * v
            for s in range(3):
                tot = pure[s] - gg
                for t in range(3):
                    if t != s:
                        tot -= cross[t]
                out[f, s] = lam * tot
        return out


_NUMPY_COMPLEX = {
    "sff": q_sff_numpy,
    "curvature": q_curvature_numpy,
    "mid": q_mid_numpy,
    "normal": q_normal_numpy,
    "tangent": q_tangent_numpy,
}

_NUMPY_QUAT = {
    "sff": q_sff_quat_numpy,
    "curvature": q_curvature_quat_numpy,
    "mid": q_mid_quat_numpy,
    "normal": q_normal_quat_numpy,
    "tangent": q_tangent_quat_numpy,
}

if NUMBA_AVAILABLE:
    _NUMBA_COMPLEX = {
        "sff": q_sff_numba,
        "curvature": q_curvature_numba,
        "mid": q_mid_numba,
        "normal": q_normal_numba,
        "tangent": q_tangent_numba,
    }
    _NUMBA_QUAT = {
        "sff": q_sff_quat_numba,
        "curvature": q_curvature_quat_numba,
        "mid": q_mid_quat_numba,
        "normal": q_normal_quat_numba,
        "tangent": q_tangent_quat_numba,
    }
else:  # pragma: no cover
    _NUMBA_COMPLEX = {}
    _NUMBA_QUAT = {}


def kernel_table(backend: str, quaternionic: bool) -> dict:
    """Name-to-kernel mapping for the requested backend and kind."""
    if backend == "numpy":
        return _NUMPY_QUAT if quaternionic else _NUMPY_COMPLEX
    if backend == "numba":
        if not NUMBA_AVAILABLE:
            raise RuntimeError("numba backend requested but numba is not importable")
        return _NUMBA_QUAT if quaternionic else _NUMBA_COMPLEX
    raise ValueError(f"unknown backend {backend!r}")
