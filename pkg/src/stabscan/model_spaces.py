"""Factor models of the product and their curvature tensors.

A projective factor is the complex or quaternionic projective space carrying
its symmetric metric, handled through real coordinates ``R^{m1}`` together
with the orthogonal almost complex structures ``J`` (one for the complex
kind, a triple ``J_1, J_2, J_3`` for the quaternionic kind).  The constant
``lambda_sq`` is the maximum of the sectional curvatures; the metric is
normalized so that

* complex kind:        ``lambda_sq = 2 m1 / (m1 + 2)``
* quaternionic kind:   ``lambda_sq = 2 m1 / (m1 + 4)``

The isometric embedding of the projective space into a round sphere through
projection matrices pins the second fundamental form completely, which is
why inner products of ``B`` values reduce to curvature evaluations; see
``sff_inner``.  The second factor may be another projective model, a round
sphere, or a flat space.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Union

import numpy as np

from .errors import BadDimension, DimensionMismatch
from .tangent_algebra import AmbientVector


class Kind(str, Enum):
    """Scalar field of a projective factor."""

    COMPLEX = "complex"
    QUATERNIONIC = "quaternionic"


def _require_kind(kind) -> Kind:
    try:
        return Kind(kind)
    except ValueError:
        raise BadDimension(f"unknown projective kind {kind!r}") from None


def lambda_squared(kind, m1: int) -> float:
    """Maximal sectional curvature of the projective factor.

    Parameters
    ----------
    kind : Kind or str
        ``complex`` or ``quaternionic``.
    m1 : int
        Real coordinate dimension.  Must be even and at least 2 for the
        complex kind, a positive multiple of 4 for the quaternionic kind.

    Returns
    -------
    float
        ``2*m1/(m1+2)`` respectively ``2*m1/(m1+4)``.

    Raises
    ------
    BadDimension
        On a parity or size violation.
    """
    kind = _require_kind(kind)
    m1 = int(m1)
    if kind is Kind.COMPLEX:
        if m1 < 2 or m1 % 2 != 0:
            raise BadDimension(
                f"complex projective factors need even m1 >= 2, got {m1}"
            )
        return (2.0 * m1) / (m1 + 2.0)
    if m1 < 4 or m1 % 4 != 0:
        raise BadDimension(
            f"quaternionic projective factors need m1 a multiple of 4, got {m1}"
        )
    return (2.0 * m1) / (m1 + 4.0)


def veronese_ambient_dims(kind, m1: int) -> tuple[int, int]:
    """Dimensions ``(l, m)`` of the round sphere realizing the factor.

    The minimal isometric embedding sends the projective space into the unit
    sphere ``S^l`` sitting in ``R^m`` with ``m = l + 1`` and

        ``l = (m1/2) * (m1/delta + 1) + m1/delta - 1``

    where ``delta`` is 2 for the complex kind and 4 for the quaternionic
    kind.  The embedding itself is never materialized; these numbers are
    bookkeeping for reports.
    """
    kind = _require_kind(kind)
    lambda_squared(kind, m1)  # reuse the dimension validation
    delta = 2 if kind is Kind.COMPLEX else 4
    over = m1 // delta
    l = (m1 // 2) * (over + 1) + over - 1
    return l, l + 1


def complex_structure(m1: int) -> np.ndarray:
    """Orthogonal complex structure on ``R^{m1}``.

    Coordinates are paired as ``(x_0, x_1), (x_2, x_3), ...`` and each pair
    is rotated a quarter turn, ``J e_{2i} = e_{2i+1}``.
    """
    j = np.zeros((m1, m1))
    for i in range(0, m1, 2):
        j[i + 1, i] = 1.0
        j[i, i + 1] = -1.0
    return j


def quaternionic_structures(m1: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Anticommuting triple ``J_1, J_2, J_3`` on ``R^{m1}``.

    ``R^{m1}`` is read as ``H^{m1/4}`` with basis ``1, i, j, k`` per
    quaternionic coordinate and ``J_1, J_2, J_3`` act by left multiplication
    with ``i, j, k``.  Associativity of quaternion multiplication gives
    ``J_1 J_2 = J_3`` and ``J_2 J_1 = -J_3``.
    """
    j1 = np.zeros((m1, m1))
    j2 = np.zeros((m1, m1))
    j3 = np.zeros((m1, m1))
    for o in range(0, m1, 4):
        # i * (a + bi + cj + dk) = -b + ai - dj + ck
        j1[o + 0, o + 1] = -1.0
        j1[o + 1, o + 0] = 1.0
        j1[o + 2, o + 3] = -1.0
        j1[o + 3, o + 2] = 1.0
        # j * (a + bi + cj + dk) = -c + di + aj - bk
        j2[o + 0, o + 2] = -1.0
        j2[o + 1, o + 3] = 1.0
        j2[o + 2, o + 0] = 1.0
        j2[o + 3, o + 1] = -1.0
        # k * (a + bi + cj + dk) = -d - ci + bj + ak
        j3[o + 0, o + 3] = -1.0
        j3[o + 1, o + 2] = -1.0
        j3[o + 2, o + 1] = 1.0
        j3[o + 3, o + 0] = 1.0
    return j1, j2, j3


@dataclass(frozen=True)
class ProjectiveModel:
    """Complex or quaternionic projective factor in real coordinates.

    ``lambda_sq`` defaults to the normalization formula and exists as an
    explicit field only so that report tooling can inject a corrupted value
    and verify that certification catches it.  The ``structures`` tuple
    holds the almost complex structure matrices.
    """

    kind: Kind
    m1: int
    lambda_sq: float = None  # type: ignore[assignment]
    structures: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "kind", _require_kind(self.kind))
        object.__setattr__(self, "m1", int(self.m1))
        formula = lambda_squared(self.kind, self.m1)
        value = formula if self.lambda_sq is None else float(self.lambda_sq)
        object.__setattr__(self, "lambda_sq", value)
        if self.kind is Kind.COMPLEX:
            mats = (complex_structure(self.m1),)
        else:
            mats = quaternionic_structures(self.m1)
        for mat in mats:
            mat.setflags(write=False)
        object.__setattr__(self, "structures", mats)

    @property
    def dim(self) -> int:
        return self.m1


@dataclass(frozen=True)
class Sphere:
    """Round sphere factor of the given dimension and radius."""

    dim: int
    radius: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "dim", int(self.dim))
        object.__setattr__(self, "radius", float(self.radius))
        if self.dim < 1:
            raise BadDimension(f"sphere dimension must be positive, got {self.dim}")
        if not self.radius > 0.0:
            raise BadDimension(f"sphere radius must be positive, got {self.radius}")

    @property
    def sectional(self) -> float:
        return 1.0 / (self.radius * self.radius)


@dataclass(frozen=True)
class Flat:
    """Flat factor of the given dimension."""

    dim: int

    def __post_init__(self):
        object.__setattr__(self, "dim", int(self.dim))
        if self.dim < 1:
            raise BadDimension(f"flat dimension must be positive, got {self.dim}")


FactorModel = Union[ProjectiveModel, Sphere, Flat]


@dataclass(frozen=True)
class ProductSpace:
    """Riemannian product of a projective factor with a second factor."""

    factor1: ProjectiveModel
    factor2: FactorModel

    def __post_init__(self):
        if not isinstance(self.factor1, ProjectiveModel):
            raise DimensionMismatch("factor 1 must be a projective model")
        if not isinstance(self.factor2, (ProjectiveModel, Sphere, Flat)):
            raise DimensionMismatch(f"unsupported factor 2 model {self.factor2!r}")

    @property
    def split(self) -> tuple[int, int]:
        return (self.factor1.dim, self.factor2.dim)

    @property
    def ambient_dim(self) -> int:
        return self.factor1.dim + self.factor2.dim


def _as_factor_vector(v, dim: int) -> np.ndarray:
    arr = np.asarray(v, dtype=np.float64)
    if arr.shape != (dim,):
        raise DimensionMismatch(f"vector shape {arr.shape} does not match dimension {dim}")
    return arr


def curvature(model: FactorModel, x, y, z, w) -> float:
    """Curvature tensor value ``<R(X, Y) Z, W>`` of one factor.

    Sign convention: ``<R(X, Y) Y, X>`` is the (nonnegative) sectional
    numerator, so round spheres evaluate to
    ``(1/r^2) (<Y,Z><X,W> - <X,Z><Y,W>)`` and flat factors to zero.  The
    projective kinds use their symmetric-space tensors written through the
    structures ``J``.
    """
    if isinstance(model, Flat):
        _as_factor_vector(x, model.dim)
        _as_factor_vector(y, model.dim)
        _as_factor_vector(z, model.dim)
        _as_factor_vector(w, model.dim)
        return 0.0
    if isinstance(model, Sphere):
        x = _as_factor_vector(x, model.dim)
        y = _as_factor_vector(y, model.dim)
        z = _as_factor_vector(z, model.dim)
        w = _as_factor_vector(w, model.dim)
        k = model.sectional
        return k * ((y @ z) * (x @ w) - (x @ z) * (y @ w))
    if not isinstance(model, ProjectiveModel):
        raise DimensionMismatch(f"unsupported factor model {model!r}")
    x = _as_factor_vector(x, model.m1)
    y = _as_factor_vector(y, model.m1)
    z = _as_factor_vector(z, model.m1)
    w = _as_factor_vector(w, model.m1)
    quarter = 0.25 * model.lambda_sq
    base = (y @ z) * (x @ w) - (x @ z) * (y @ w)
    if model.kind is Kind.COMPLEX:
        j = model.structures[0]
        jx, jy, jz = j @ x, j @ y, j @ z
        return quarter * (
            base + (jy @ z) * (jx @ w) - (jx @ z) * (jy @ w) + 2.0 * (x @ jy) * (jz @ w)
        )
    total = base
    for j in model.structures:
        jx, jy, jz = j @ x, j @ y, j @ z
        total += 2.0 * (x @ jy) * (jz @ w)
        total += (jy @ z) * (jx @ w) - (jx @ z) * (jy @ w)
    return quarter * total


def product_curvature(space: ProductSpace, x, y, z, w) -> float:
    """Curvature of the product, the sum of blockwise factor evaluations.

    Inputs may be ``AmbientVector`` instances or plain arrays of the ambient
    length; mixed factor arguments contribute nothing across factors.
    """
    m1, m2 = space.split

    def blocks(v):
        if isinstance(v, AmbientVector):
            if v.split != space.split:
                raise DimensionMismatch(
                    f"vector split {v.split} does not match space split {space.split}"
                )
            return v.factor1, v.factor2
        arr = np.asarray(v, dtype=np.float64)
        if arr.shape != (m1 + m2,):
            raise DimensionMismatch(
                f"vector shape {arr.shape} does not match ambient dimension {m1 + m2}"
            )
        return arr[:m1], arr[m1:]

    x1, x2 = blocks(x)
    y1, y2 = blocks(y)
    z1, z2 = blocks(z)
    w1, w2 = blocks(w)
    return curvature(space.factor1, x1, y1, z1, w1) + curvature(
        space.factor2, x2, y2, z2, w2
    )


def sff_inner(model: ProjectiveModel, x, y, z, w) -> float:
    """Inner product ``<B(X, Y), B(Z, W)>`` of second fundamental form values.

    For the minimal sphere embedding of a projective factor the Gauss
    equation closes, giving

        ``3 <B(X,Y), B(Z,W)> = <R(X,Z)W, Y> + <R(X,W)Z, Y>
          + lambda_sq (<X,Y><Z,W> + <X,W><Y,Z> + <X,Z><W,Y>)``

    which this function evaluates.  Vectors live in the factor coordinates
    ``R^{m1}``.
    """
    if not isinstance(model, ProjectiveModel):
        raise DimensionMismatch("second fundamental form products need a projective model")
    x = _as_factor_vector(x, model.m1)
    y = _as_factor_vector(y, model.m1)
    z = _as_factor_vector(z, model.m1)
    w = _as_factor_vector(w, model.m1)
    lam = model.lambda_sq
    metric = (x @ y) * (z @ w) + (x @ w) * (y @ z) + (x @ z) * (w @ y)
    return (
        curvature(model, x, z, w, y) + curvature(model, x, w, z, y) + lam * metric
    ) / 3.0


def lambda_sq_defect(model: ProjectiveModel) -> float:
    """Distance of the stored normalization from the formula value."""
    return abs(model.lambda_sq - lambda_squared(model.kind, model.m1))


def structure_defects(model: ProjectiveModel) -> dict[str, float]:
    """Worst violations of the structure matrix identities.

    Returns max norm defects for ``J^2 = -I``, orthogonality, skewness, and
    for the quaternionic kind the products ``J_1 J_2 = J_3 = -J_2 J_1``.
    """
    eye = np.eye(model.m1)
    square = max(
        float(np.max(np.abs(j @ j + eye))) for j in model.structures
    )
    orth = max(
        float(np.max(np.abs(j.T @ j - eye))) for j in model.structures
    )
    skew = max(float(np.max(np.abs(j + j.T))) for j in model.structures)
    out = {"square": square, "orthogonal": orth, "skew": skew}
    if model.kind is Kind.QUATERNIONIC:
        j1, j2, j3 = model.structures
        out["triple"] = float(np.max(np.abs(j1 @ j2 - j3)))
        out["anticommute"] = float(np.max(np.abs(j2 @ j1 + j3)))
    return out
