"""Frames and factor projections for vectors of a Riemannian product.

Ambient coordinates are real row vectors of length ``m1 + m2``.  The first
``m1`` slots belong to factor 1, the remaining ``m2`` to factor 2.  An adapted
frame at a point of an immersed submanifold splits into tangent vectors
``e_1 .. e_n`` and normal vectors ``eta_1 .. eta_d``, all pairwise
orthonormal in the ambient inner product.  When ``n + d`` equals the ambient
dimension the frame is complete and resolves every ambient vector.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateInput, DimensionMismatch

GRAM_MIN_EIGENVALUE = 1e-10
ORTHONORMALITY_TOL = 1e-12
COMPLETE_DET_TOL = 1e-10
RESAMPLE_LIMIT = 8


@dataclass(frozen=True)
class AmbientVector:
    """A vector of the product, tagged with its factor split.

    Parameters
    ----------
    coords : array_like
        Real coordinates of length ``split[0] + split[1]``.
    split : tuple of int
        Coordinate dimensions ``(m1, m2)`` of the two factors.
    """

    coords: np.ndarray
    split: tuple[int, int]

    def __post_init__(self):
        coords = np.asarray(self.coords, dtype=np.float64)
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "split", (int(self.split[0]), int(self.split[1])))
        m1, m2 = self.split
        if m1 < 0 or m2 < 0:
            raise DimensionMismatch(f"split must be nonnegative, got {self.split}")
        if coords.ndim != 1 or coords.shape[0] != m1 + m2:
            raise DimensionMismatch(
                f"coords has shape {coords.shape}, expected ({m1 + m2},)"
            )

    @property
    def factor1(self) -> np.ndarray:
        """Factor-1 block, length ``m1``."""
        return self.coords[: self.split[0]]

    @property
    def factor2(self) -> np.ndarray:
        """Factor-2 block, length ``m2``."""
        return self.coords[self.split[0] :]

    def norm(self) -> float:
        return float(np.linalg.norm(self.coords))


def project_factor(vector, which: int, split: tuple[int, int] | None = None):
    """Project onto one factor, keeping the ambient length.

    The image keeps the coordinates of the chosen factor and zeroes the rest,
    so the map is an orthogonal projection of the ambient space (idempotent
    and self adjoint).

    Parameters
    ----------
    vector : AmbientVector or array_like
        The vector to project.  Plain arrays need ``split``.
    which : int
        1 for the first factor, 2 for the second.
    split : tuple of int, optional
        Factor dimensions when ``vector`` is a plain array.

    Returns
    -------
    Same type as ``vector``, zero padded to the ambient length.
    """
    if which not in (1, 2):
        raise ValueError(f"which must be 1 or 2, got {which!r}")
    if isinstance(vector, AmbientVector):
        out = project_factor(vector.coords, which, vector.split)
        return AmbientVector(out, vector.split)
    if split is None:
        raise DimensionMismatch("plain arrays need an explicit split")
    m1, m2 = int(split[0]), int(split[1])
    coords = np.asarray(vector, dtype=np.float64)
    if coords.shape[-1] != m1 + m2:
        raise DimensionMismatch(
            f"vector length {coords.shape[-1]} does not match split {split}"
        )
    out = np.zeros_like(coords)
    if which == 1:
        out[..., :m1] = coords[..., :m1]
    else:
        out[..., m1:] = coords[..., m1:]
    return out


def gram_schmidt(vectors) -> np.ndarray:
    """Orthonormalize a stack of vectors, preserving their span.

    Runs two passes of modified Gram-Schmidt, which keeps the loss of
    orthogonality near machine precision even for poorly conditioned input.

    Parameters
    ----------
    vectors : array_like, shape (k, m)
        Rows are the input vectors.

    Returns
    -------
    ndarray, shape (k, m)
        Orthonormal rows spanning the same subspace, in sweep order.

    Raises
    ------
    DegenerateInput
        When the smallest eigenvalue of the Gram matrix is at or below
        ``1e-10``, i.e. the rows are numerically dependent.
    """
    rows = np.atleast_2d(np.asarray(vectors, dtype=np.float64))
    if rows.ndim != 2:
        raise DimensionMismatch(f"expected a (k, m) stack, got shape {rows.shape}")
    k, m = rows.shape
    if k > m:
        raise DegenerateInput(f"{k} vectors cannot be independent in dimension {m}")
    gram = rows @ rows.T
    smallest = float(np.linalg.eigvalsh(gram)[0])
    if smallest <= GRAM_MIN_EIGENVALUE:
        raise DegenerateInput(
            f"smallest Gram eigenvalue {smallest:.3e} is at or below "
            f"{GRAM_MIN_EIGENVALUE:.0e}"
        )
    basis = rows.copy()
    for _sweep in range(2):
        for i in range(k):
            for j in range(i):
                basis[i] -= (basis[i] @ basis[j]) * basis[j]
            norm = np.linalg.norm(basis[i])
            if norm <= 1e-150:
                raise DegenerateInput("vector vanished during orthonormalization")
            basis[i] /= norm
    return basis


@dataclass(frozen=True)
class AdaptedFrame:
    """Orthonormal tangent and normal vectors at a point of a product.

    Parameters
    ----------
    tangent : array_like, shape (n, m1 + m2)
        Tangent vectors ``e_1 .. e_n``.
    normal : array_like, shape (d, m1 + m2)
        Normal vectors ``eta_1 .. eta_d``.
    split : tuple of int
        Factor dimensions ``(m1, m2)``.

    All ``n + d`` rows must be pairwise orthonormal to ``1e-12``.  A complete
    frame (``n + d == m1 + m2``) additionally has determinant of modulus one
    to ``1e-10``.
    """

    tangent: np.ndarray
    normal: np.ndarray
    split: tuple[int, int]
    validate: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        tangent = np.atleast_2d(np.asarray(self.tangent, dtype=np.float64))
        normal = np.atleast_2d(np.asarray(self.normal, dtype=np.float64))
        object.__setattr__(self, "tangent", tangent)
        object.__setattr__(self, "normal", normal)
        object.__setattr__(self, "split", (int(self.split[0]), int(self.split[1])))
        m = self.split[0] + self.split[1]
        if tangent.shape[0] < 1 or normal.shape[0] < 1:
            raise DimensionMismatch("frames need at least one tangent and one normal vector")
        if tangent.shape[1] != m or normal.shape[1] != m:
            raise DimensionMismatch(
                f"frame vectors have length {tangent.shape[1]}/{normal.shape[1]}, "
                f"ambient dimension is {m}"
            )
        if self.n + self.d > m:
            raise DimensionMismatch(
                f"{self.n + self.d} orthonormal vectors cannot fit in dimension {m}"
            )
        if self.validate:
            stacked = self.stacked()
            gram = stacked @ stacked.T
            defect = float(np.max(np.abs(gram - np.eye(self.n + self.d))))
            if defect > ORTHONORMALITY_TOL:
                raise DimensionMismatch(
                    f"frame is not orthonormal, worst Gram defect {defect:.3e}"
                )
            if self.is_complete:
                det = float(np.linalg.det(stacked))
                if abs(abs(det) - 1.0) > COMPLETE_DET_TOL:
                    raise DimensionMismatch(
                        f"complete frame determinant {det!r} is not of modulus one"
                    )

    @property
    def n(self) -> int:
        return self.tangent.shape[0]

    @property
    def d(self) -> int:
        return self.normal.shape[0]

    @property
    def ambient_dim(self) -> int:
        return self.split[0] + self.split[1]

    @property
    def is_complete(self) -> bool:
        return self.n + self.d == self.ambient_dim

    def stacked(self) -> np.ndarray:
        """All frame vectors as rows, tangent block first."""
        return np.vstack([self.tangent, self.normal])

    def tangent_factor(self, which: int) -> np.ndarray:
        """Factor blocks of the tangent vectors, shape (n, m_which)."""
        m1 = self.split[0]
        return self.tangent[:, :m1] if which == 1 else self.tangent[:, m1:]

    def normal_factor(self, which: int) -> np.ndarray:
        """Factor blocks of the normal vectors, shape (d, m_which)."""
        m1 = self.split[0]
        return self.normal[:, :m1] if which == 1 else self.normal[:, m1:]


def completeness_residual(frame: AdaptedFrame, vector) -> float:
    """Defect of the resolution of ``vector`` through the frame.

    For a complete frame the squared norm of any ambient vector equals the
    sum of its squared projections on all frame vectors; the returned value
    is the absolute difference of the two sides.
    """
    w = vector.coords if isinstance(vector, AmbientVector) else np.asarray(vector, dtype=np.float64)
    if w.shape != (frame.ambient_dim,):
        raise DimensionMismatch(
            f"vector shape {w.shape} does not match ambient dimension {frame.ambient_dim}"
        )
    coeffs = frame.stacked() @ w
    return abs(float(w @ w) - float(coeffs @ coeffs))


def random_adapted_frame(
    seed: int, n: int, d: int, split: tuple[int, int]
) -> AdaptedFrame:
    """Draw a Haar-like random adapted frame, reproducibly.

    A fixed 64-bit seeded PCG64 generator supplies standard Gaussian rows
    which are then orthonormalized; degenerate draws are resampled from the
    same stream, at most eight times.  Calling twice with one seed returns
    bitwise identical frames.

    Parameters
    ----------
    seed : int
        Seed for ``numpy.random.PCG64``.
    n, d : int
        Number of tangent and normal vectors.
    split : tuple of int
        Factor dimensions ``(m1, m2)``.

    Returns
    -------
    AdaptedFrame
        First ``n`` orthonormalized rows as tangent, last ``d`` as normal.
    """
    m = int(split[0]) + int(split[1])
    if n < 1 or d < 1 or n + d > m:
        raise DimensionMismatch(
            f"cannot fit n={n} tangent and d={d} normal vectors in dimension {m}"
        )
    rng = np.random.Generator(np.random.PCG64(seed))
    last_error: DegenerateInput | None = None
    for _attempt in range(1 + RESAMPLE_LIMIT):
        draw = rng.standard_normal((n + d, m))
        try:
            basis = gram_schmidt(draw)
        except DegenerateInput as err:
            last_error = err
            continue
        return AdaptedFrame(basis[:n], basis[n:], split)
    raise DegenerateInput(
        f"no independent draw after {1 + RESAMPLE_LIMIT} attempts: {last_error}"
    )
