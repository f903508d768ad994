"""Closed geodesics in desk-scale products and their Jacobi index forms.

The lowest projective factor has an elementary global model: with the
normalization used here its maximal sectional curvature is 1 and it is
isometric to the unit round 2-sphere, with the complex structure acting as
the oriented quarter turn in each tangent plane.  Products of that sphere
with a flat circle or a round sphere therefore admit completely explicit
closed geodesics (products of great circles), and everything downstream of
the frame transport ODE can be checked against closed-form spectra.

The pipeline is: describe a closed geodesic (`GeodesicSpec`), sample it
(`sample_geodesic`), parallel-transport a normal frame around it
(`transport_normal_frame`), then assemble and diagonalize the discretized
second-variation form (`index_form_spectrum`).  Stability of the curve is
read off the Morse index, matching the convention that stable means the
quadratic form is nonnegative.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Union

import numpy as np

from .errors import BadClosure, IncompleteSample
from .model_spaces import Sphere

CLOSURE_TOL = 1e-9
SPEED_TOL = 1e-12


@dataclass(frozen=True)
class Circle:
    """Flat circle of the given circumference, embedded in the plane."""

    circumference: float

    def __post_init__(self):
        object.__setattr__(self, "circumference", float(self.circumference))
        if not self.circumference > 0.0:
            raise BadClosure(f"circumference must be positive, got {self.circumference}")

    @property
    def radius(self) -> float:
        return self.circumference / (2.0 * np.pi)

    @property
    def dim(self) -> int:
        return 1


Factor2 = Union[Circle, Sphere]


@dataclass(frozen=True)
class ProductEmbedding:
    """Unit 2-sphere times a circle or round sphere, in flat coordinates.

    Factor 1 occupies the first three ambient coordinates; factor 2 the
    rest.  This carries only the embedding geometry (projections and
    curvature constants), not any particular curve, so non-geodesic test
    curves can reuse it.
    """

    factor2: Factor2

    def __post_init__(self):
        if not isinstance(self.factor2, (Circle, Sphere)):
            raise BadClosure(f"unsupported second factor {self.factor2!r}")

    @property
    def radius2(self) -> float:
        if isinstance(self.factor2, Circle):
            return self.factor2.radius
        return self.factor2.radius

    @property
    def period2(self) -> float:
        """Arclength after which a unit-speed closed geodesic of factor 2 closes."""
        return 2.0 * np.pi * self.radius2

    @property
    def dim2(self) -> int:
        return self.factor2.dim

    @property
    def ambient2(self) -> int:
        return 2 if isinstance(self.factor2, Circle) else self.factor2.dim + 1

    @property
    def ambient_dim(self) -> int:
        return 3 + self.ambient2

    @property
    def normal_dim(self) -> int:
        """Dimension of the normal bundle of a curve in the product."""
        return self.dim2 + 1

    @property
    def sectional2(self) -> float:
        if isinstance(self.factor2, Circle):
            return 0.0
        return self.factor2.sectional

    def tangent_project(self, positions: np.ndarray, vectors: np.ndarray) -> np.ndarray:
        """Remove the per-factor radial components of ``vectors``.

        Both arguments have shape ``(..., ambient_dim)``; positions must
        lie on the product (each factor block on its sphere).
        """
        positions = np.asarray(positions, dtype=np.float64)
        out = np.array(vectors, dtype=np.float64, copy=True)
        p1 = positions[..., :3]
        v1 = out[..., :3]
        v1 -= np.sum(v1 * p1, axis=-1, keepdims=True) * p1
        p2 = positions[..., 3:]
        v2 = out[..., 3:]
        u2 = p2 / self.radius2
        v2 -= np.sum(v2 * u2, axis=-1, keepdims=True) * u2
        return out


@dataclass(frozen=True)
class GeodesicSpec:
    """A closed geodesic of the product, given by speeds and total length.

    The curve advances with arclength rate ``a`` along a great circle of
    the first factor and rate ``b`` along a closed geodesic of the second,
    with ``a^2 + b^2 = 1``.  Both components must individually close after
    length ``length``.
    """

    embedding: ProductEmbedding
    speeds: tuple
    length: float

    def __post_init__(self):
        a, b = (float(v) for v in self.speeds)
        object.__setattr__(self, "speeds", (a, b))
        object.__setattr__(self, "length", float(self.length))
        if a < 0.0 or b < 0.0:
            raise BadClosure(f"speeds must be nonnegative, got {self.speeds}")
        if abs(a * a + b * b - 1.0) > SPEED_TOL:
            raise BadClosure(f"speeds must satisfy a^2 + b^2 = 1, got {self.speeds}")
        if not self.length > 0.0:
            raise BadClosure(f"length must be positive, got {self.length}")
        if a == 0.0 and b == 0.0:
            raise BadClosure("at least one speed must be positive")
        if a > 0.0:
            turns = a * self.length / (2.0 * np.pi)
            if abs(turns - round(turns)) > CLOSURE_TOL or round(turns) < 1:
                raise BadClosure(
                    f"factor-1 component does not close: a*L/(2*pi) = {turns}"
                )
        if b > 0.0:
            turns = b * self.length / self.embedding.period2
            if abs(turns - round(turns)) > CLOSURE_TOL or round(turns) < 1:
                raise BadClosure(
                    f"factor-2 component does not close: b*L/period = {turns}"
                )

    @classmethod
    def from_windings(cls, embedding: ProductEmbedding, p: int, q: int) -> "GeodesicSpec":
        """Closed geodesic winding ``p`` times around factor 1, ``q`` around factor 2."""
        p, q = int(p), int(q)
        if p < 0 or q < 0 or (p == 0 and q == 0):
            raise BadClosure(f"winding numbers must be nonnegative, not both zero: {(p, q)}")
        len1 = 2.0 * np.pi * p
        len2 = embedding.period2 * q
        total = float(np.hypot(len1, len2))
        return cls(embedding, (len1 / total, len2 / total), total)


@dataclass(frozen=True)
class CurveSample:
    """A closed curve sampled at equal arclength steps.

    ``positions`` and ``tangents`` have shape (N, ambient); the optional
    ``normal_frame`` has shape (N, normal_dim, ambient) and holds an
    orthonormal in-manifold normal frame at each node, parallel along the
    curve once ``transport_normal_frame`` has filled it together with the
    loop ``holonomy``.  ``spec`` is present only for curves produced by
    ``sample_geodesic``; hand-built test curves may omit it.
    """

    embedding: ProductEmbedding
    h: float
    positions: np.ndarray
    tangents: np.ndarray
    normal_frame: Optional[np.ndarray] = None
    holonomy: Optional[np.ndarray] = None
    spec: Optional[GeodesicSpec] = field(default=None, compare=False)

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=np.float64)
        tan = np.asarray(self.tangents, dtype=np.float64)
        if pos.ndim != 2 or pos.shape[1] != self.embedding.ambient_dim:
            raise IncompleteSample(f"positions have wrong shape {pos.shape}")
        if tan.shape != pos.shape:
            raise IncompleteSample("tangents must match positions in shape")
        speeds = np.linalg.norm(tan, axis=1)
        if np.max(np.abs(speeds - 1.0)) > 1e-10:
            raise IncompleteSample("tangents must be unit vectors")
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "tangents", tan)

    @property
    def n_nodes(self) -> int:
        return self.positions.shape[0]

    @property
    def length(self) -> float:
        return self.h * self.n_nodes


def _gauge(spec: GeodesicSpec, twist: float, initial_rotation: Optional[np.ndarray]):
    """Return a function s -> (frame rows, their s-derivatives).

    The base gauge mixes the two unit tangent directions against each
    other, keeps the in-sphere normal of the factor-1 great circle, and
    carries the constant in-sphere normals of the factor-2 great circle.
    Its rows have purely radial derivatives, so it is already parallel; a
    nonzero ``twist`` superimposes a rotation by angle
    ``twist * sin(2*pi*s/L)`` in the first two gauge directions, which
    makes the transport ODE genuinely nonautonomous while returning to the
    identity at the loop closure.
    """
    emb = spec.embedding
    a, b = spec.speeds
    L = spec.length
    rho = emb.radius2
    amb2 = emb.ambient2
    D = emb.ambient_dim
    nu = emb.normal_dim

    u1 = np.array([1.0, 0.0, 0.0])
    v1 = np.array([0.0, 1.0, 0.0])
    w1 = np.cross(u1, v1)
    u2 = np.zeros(amb2)
    v2 = np.zeros(amb2)
    u2[0] = 1.0
    v2[1] = 1.0
    extras2 = [np.eye(amb2)[i] for i in range(2, amb2)]

    rot0 = np.eye(nu) if initial_rotation is None else np.asarray(initial_rotation, float)
    if rot0.shape != (nu, nu):
        raise IncompleteSample(f"initial rotation must be {nu}x{nu}, got {rot0.shape}")
    if np.max(np.abs(rot0 @ rot0.T - np.eye(nu))) > 1e-12:
        raise IncompleteSample("initial rotation must be orthogonal")

    spin = np.zeros((nu, nu))
    spin[0, 1] = -1.0
    spin[1, 0] = 1.0

    def at(s: float):
        if a > 0.0:
            t1 = -u1 * np.sin(a * s) + v1 * np.cos(a * s)
            dt1 = -a * (u1 * np.cos(a * s) + v1 * np.sin(a * s))
        else:
            t1 = v1
            dt1 = np.zeros(3)
        if b > 0.0:
            ang = b * s / rho
            t2 = -u2 * np.sin(ang) + v2 * np.cos(ang)
            dt2 = -(b / rho) * (u2 * np.cos(ang) + v2 * np.sin(ang))
        else:
            t2 = v2
            dt2 = np.zeros(amb2)

        rows = np.zeros((nu, D))
        drows = np.zeros((nu, D))
        rows[0, :3] = b * t1
        rows[0, 3:] = -a * t2
        drows[0, :3] = b * dt1
        drows[0, 3:] = -a * dt2
        rows[1, :3] = w1
        for i, w in enumerate(extras2):
            rows[2 + i, 3:] = w

        rows = rot0 @ rows
        drows = rot0 @ drows
        if twist != 0.0:
            theta = twist * np.sin(2.0 * np.pi * s / L)
            dtheta = twist * (2.0 * np.pi / L) * np.cos(2.0 * np.pi * s / L)
            c, sn = np.cos(theta), np.sin(theta)
            rot = np.eye(nu) + sn * spin + (1.0 - c) * (spin @ spin)
            drot = dtheta * (c * spin + sn * (spin @ spin))
            drows = rot @ drows + drot @ rows
            rows = rot @ rows
        return rows, drows

    return at


def sample_geodesic(spec: GeodesicSpec, n_nodes: int) -> CurveSample:
    """Sample the closed geodesic at ``n_nodes`` equal arclength steps."""
    if n_nodes < 16:
        raise ValueError(f"need at least 16 nodes, got {n_nodes}")
    emb = spec.embedding
    a, b = spec.speeds
    h = spec.length / n_nodes
    s = h * np.arange(n_nodes)
    D = emb.ambient_dim
    pos = np.zeros((n_nodes, D))
    tan = np.zeros((n_nodes, D))
    pos[:, 0] = np.cos(a * s)
    pos[:, 1] = np.sin(a * s)
    if a > 0.0:
        tan[:, 0] = -a * np.sin(a * s)
        tan[:, 1] = a * np.cos(a * s)
    rho = emb.radius2
    ang = b * s / rho
    pos[:, 3] = rho * np.cos(ang)
    pos[:, 4] = rho * np.sin(ang)
    if b > 0.0:
        tan[:, 3] = -b * np.sin(ang)
        tan[:, 4] = b * np.cos(ang)
    return CurveSample(embedding=emb, h=h, positions=pos, tangents=tan, spec=spec)


def transport_normal_frame(
    sample: CurveSample,
    twist: float = 0.0,
    initial_rotation: Optional[np.ndarray] = None,
) -> CurveSample:
    """Parallel-transport an orthonormal normal frame around the loop.

    Integrates the coefficient system ``dc/ds = -A(s) c`` with classic
    4th-order Runge-Kutta, where ``A[z, l] = <E_l', E_z>`` is computed from
    the analytic derivatives of the reference gauge.  Returns a copy of the
    sample with ``normal_frame`` holding the transported frame at each node
    and ``holonomy`` the loop map H with V(L) = H V(0).
    """
    if sample.spec is None:
        raise IncompleteSample("transport needs a sample produced from a geodesic spec")
    spec = sample.spec
    gauge = _gauge(spec, twist, initial_rotation)
    N = sample.n_nodes
    h = sample.h
    nu = spec.embedding.normal_dim

    def coeff_matrix(s: float) -> np.ndarray:
        rows, drows = gauge(s)
        return rows @ drows.T

    frames = np.empty((N, nu, spec.embedding.ambient_dim))
    coeffs = np.eye(nu)
    for i in range(N):
        s = i * h
        rows, _ = gauge(s)
        frames[i] = coeffs.T @ rows
        a1 = coeff_matrix(s)
        amid = coeff_matrix(s + 0.5 * h)
        a2 = coeff_matrix(s + h)
        k1 = -a1 @ coeffs
        k2 = -amid @ (coeffs + 0.5 * h * k1)
        k3 = -amid @ (coeffs + 0.5 * h * k2)
        k4 = -a2 @ (coeffs + h * k3)
        coeffs = coeffs + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    holonomy = coeffs.copy()
    orth = np.max(np.abs(holonomy @ holonomy.T - np.eye(nu)))
    if not np.isfinite(orth) or orth > 1e-6:
        raise RuntimeError(f"transport lost orthogonality by {orth}; geometry bug")
    return replace(sample, normal_frame=frames, holonomy=holonomy)


def transport_residual(sample: CurveSample) -> float:
    """Worst tangential central-difference derivative of the frame rows.

    A parallel frame has purely radial ambient derivative, so this residual
    measures how far the transported frame is from parallel, discretized at
    second order.  Interior nodes only; no wraparound.
    """
    if sample.normal_frame is None:
        raise IncompleteSample("transport residual needs a transported frame")
    F = sample.normal_frame
    diff = (F[2:] - F[:-2]) / (2.0 * sample.h)
    proj = sample.embedding.tangent_project(sample.positions[1:-1, None, :], diff)
    return float(np.max(np.linalg.norm(proj, axis=-1)))


def geodesic_residual(sample: CurveSample) -> float:
    """Max norm of the tangential part of the discrete acceleration.

    Periodic second differences of the positions divided by h^2, projected
    onto the product's tangent spaces; exact geodesics give roundoff-level
    values, and for a smooth non-geodesic the residual approaches its
    geodesic curvature at rate O(h^2).
    """
    pos = sample.positions
    second = (np.roll(pos, -1, axis=0) - 2.0 * pos + np.roll(pos, 1, axis=0)) / sample.h**2
    tang = sample.embedding.tangent_project(pos, second)
    return float(np.max(np.linalg.norm(tang, axis=1)))


@dataclass(frozen=True)
class GeodesicSpectrum:
    """Spectrum of the discretized second-variation form along a loop."""

    eigenvalues: np.ndarray
    morse_index: int
    nullity: int
    holonomy: np.ndarray
    tol: float


def index_form_spectrum(
    sample: CurveSample, embedding: Optional[ProductEmbedding] = None
) -> GeodesicSpectrum:
    """Assemble and diagonalize the Jacobi form of a transported sample.

    The form acts on normal fields written in the parallel frame as
    coefficient vectors per node.  Its matrix is the periodic second
    difference Laplacian (seam blocks twisted by the holonomy) minus the
    per-node curvature blocks ``<Rbar(F_z, T) T, F_w>``; eigenvalues
    approximate the Jacobi operator spectrum, negatives count instability
    directions and near-zeros Jacobi fields.
    """
    if sample.normal_frame is None or sample.holonomy is None:
        raise IncompleteSample("index form needs a transported frame and holonomy")
    emb = embedding if embedding is not None else sample.embedding
    F = sample.normal_frame
    T = sample.tangents
    N, nu, D = F.shape
    h = sample.h

    curv = np.empty((N, nu, nu))
    for i in range(N):
        t1 = T[i, :3]
        f1 = F[i, :, :3]
        g1 = f1 @ f1.T
        ft1 = f1 @ t1
        block = 1.0 * (np.dot(t1, t1) * g1 - np.outer(ft1, ft1))
        t2 = T[i, 3:]
        f2 = F[i, :, 3:]
        k2 = emb.sectional2
        if k2 != 0.0:
            g2 = f2 @ f2.T
            ft2 = f2 @ t2
            block = block + k2 * (np.dot(t2, t2) * g2 - np.outer(ft2, ft2))
        curv[i] = block

    dim = N * nu
    mat = np.zeros((dim, dim))
    inv_h2 = 1.0 / (h * h)
    eye = np.eye(nu)
    for i in range(N):
        sl = slice(i * nu, (i + 1) * nu)
        mat[sl, sl] = 2.0 * inv_h2 * eye - curv[i]
    for i in range(N - 1):
        sl = slice(i * nu, (i + 1) * nu)
        sr = slice((i + 1) * nu, (i + 2) * nu)
        mat[sl, sr] = -inv_h2 * eye
        mat[sr, sl] = -inv_h2 * eye
    H = sample.holonomy
    mat[(N - 1) * nu :, :nu] = -inv_h2 * H.T
    mat[:nu, (N - 1) * nu :] = -inv_h2 * H

    asym = float(np.max(np.abs(mat - mat.T)))
    if asym > 1e-12:
        raise RuntimeError(f"index form matrix asymmetric by {asym}; geometry bug")
    vals = np.linalg.eigvalsh(0.5 * (mat + mat.T))
    tol = 1e-6 * max(1.0, float(np.abs(vals).max()))
    morse = int(np.sum(vals < -tol))
    nullity = int(np.sum(np.abs(vals) <= tol))
    return GeodesicSpectrum(
        eigenvalues=vals, morse_index=morse, nullity=nullity, holonomy=H, tol=tol
    )


def canonical_geodesics(circumference: float = 2.0 * np.pi) -> dict:
    """The three reference closed geodesics over a circle second factor.

    ``slice``: constant on factor 1, one loop of the circle.
    ``equator``: one great circle of factor 1, constant on factor 2.
    ``diagonal``: equal speeds, closing after one loop of each factor.
    """
    emb = ProductEmbedding(Circle(circumference))
    return {
        "slice": GeodesicSpec.from_windings(emb, 0, 1),
        "equator": GeodesicSpec.from_windings(emb, 1, 0),
        "diagonal": GeodesicSpec.from_windings(emb, 1, 1),
    }
