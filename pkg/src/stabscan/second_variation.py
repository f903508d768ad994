"""Second-variation sums over adapted frames and the equality classifiers.

The central quantity is a trace Q built from coordinate test sections of a
minimal submanifold of a product with a projective first factor.  Q admits
five independent expressions: one through second-fundamental-form inner
products, one through the curvature tensor, one mixing tangent and normal
projections, and two closed forms that see only the normal respectively
only the tangent projections (those two require a complete adapted frame).
Numerical agreement of all five over random frames certifies the algebraic
derivation chain; the closed forms then feed the sign scans and the
equality-case classifiers.

All projections are onto the first factor coordinates, written ``e1``/``n1``
for tangent/normal rows.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from ._backend import resolve_backend
from ._kernels import kernel_table, orthonormalize_batch
from .errors import (
    CaseMismatch,
    DegenerateInput,
    DimensionMismatch,
    IncompleteFrame,
)
from .model_spaces import Kind, ProductSpace, ProjectiveModel
from .tangent_algebra import AdaptedFrame

# Vector-level threshold deciding when a factor-1 projection counts as zero
# inside classifier detail payloads.
PROJECTION_ZERO_TOL = 1e-8

# Default off-span tolerance for the plane structure detector.
STRUCTURE_TOL = 1e-9

RESAMPLE_LIMIT = 8


class EqualityCase(Enum):
    """Analyzed regimes of the sign theorems."""

    D1 = "d1"
    D2Complex = "d2-complex"
    N1 = "n1"
    N2Complex = "n2-complex"
    QuatD1 = "quat-d1"
    QuatD2 = "quat-d2"
    QuatN1 = "quat-n1"
    QuatN2 = "quat-n2"
    Structure = "structure"


class PlaneStructure(Enum):
    """Which product almost complex structures leave a 2-plane invariant."""

    J1 = "J1"
    J2 = "J2"
    BOTH = "Both"
    NEITHER = "Neither"


@dataclass(frozen=True)
class ClassifierVerdict:
    case: EqualityCase
    is_equality_case: bool
    detail: Optional[dict]


@dataclass(frozen=True)
class SecondVariationReport:
    """All formula values for one frame plus their mutual discrepancy."""

    q_sff: float
    q_curvature: float
    q_mid: float
    q_normal_closed: list
    q_tangent_closed: list
    max_discrepancy: float
    classifier: Optional[ClassifierVerdict]


def _check_frame(space: ProductSpace, frame: AdaptedFrame) -> None:
    if frame.split != space.split:
        raise DimensionMismatch(
            f"frame split {frame.split} does not match space split {space.split}"
        )


def _factor1_rows(space: ProductSpace, frame: AdaptedFrame):
    _check_frame(space, frame)
    m1 = space.split[0]
    e1 = np.ascontiguousarray(frame.tangent[None, :, :m1])
    n1 = np.ascontiguousarray(frame.normal[None, :, :m1])
    return e1, n1


def _kernels_for(space: ProductSpace, backend: Optional[str]):
    model = space.factor1
    quat = model.kind is Kind.QUATERNIONIC
    table = kernel_table(resolve_backend(backend), quat)
    if quat:
        struct = np.ascontiguousarray(np.stack(model.structures))
    else:
        struct = np.ascontiguousarray(model.structures[0])
    return table, struct, model.lambda_sq


def q_from_sff(space: ProductSpace, frame: AdaptedFrame, backend: str | None = None) -> float:
    """Q through sums of second-fundamental-form inner products.

    Does not require a complete frame.
    """
    e1, n1 = _factor1_rows(space, frame)
    table, struct, lam = _kernels_for(space, backend)
    return float(table["sff"](e1, n1, struct, lam)[0])


def q_curvature_form(space: ProductSpace, frame: AdaptedFrame, backend: str | None = None) -> float:
    """Q through curvature evaluations with metric correction terms."""
    e1, n1 = _factor1_rows(space, frame)
    table, struct, lam = _kernels_for(space, backend)
    return float(table["curvature"](e1, n1, struct, lam)[0])


def q_midform(space: ProductSpace, frame: AdaptedFrame, backend: str | None = None) -> float:
    """Q through squared tangent-normal projection pairings."""
    e1, n1 = _factor1_rows(space, frame)
    table, struct, lam = _kernels_for(space, backend)
    return float(table["mid"](e1, n1, struct, lam)[0])


def q_normal_closed(space: ProductSpace, frame: AdaptedFrame, backend: str | None = None) -> list:
    """Closed form of Q over normal projections only.

    Valid only for complete frames; returns one value for a complex first
    factor and three values (one per structure index) for a quaternionic
    one, all of which equal Q.
    """
    if not frame.is_complete:
        raise IncompleteFrame(
            f"closed forms need n + d = {frame.ambient_dim}, got {frame.n + frame.d}"
        )
    e1, n1 = _factor1_rows(space, frame)
    table, struct, lam = _kernels_for(space, backend)
    if space.factor1.kind is Kind.QUATERNIONIC:
        return [float(v) for v in table["normal"](e1, n1, struct, lam)[0]]
    return [float(table["normal"](n1, struct, lam)[0])]


def q_tangent_closed(space: ProductSpace, frame: AdaptedFrame, backend: str | None = None) -> list:
    """Closed form of Q over tangent projections only (complete frames)."""
    if not frame.is_complete:
        raise IncompleteFrame(
            f"closed forms need n + d = {frame.ambient_dim}, got {frame.n + frame.d}"
        )
    e1, n1 = _factor1_rows(space, frame)
    table, struct, lam = _kernels_for(space, backend)
    if space.factor1.kind is Kind.QUATERNIONIC:
        return [float(v) for v in table["tangent"](e1, n1, struct, lam)[0]]
    return [float(table["tangent"](e1, struct, lam)[0])]


def equality_tolerance(space: ProductSpace, frame: AdaptedFrame) -> float:
    """Threshold under which Q counts as zero for classification."""
    return 1e-10 * space.factor1.lambda_sq * (frame.n + frame.d) ** 2


def second_variation_report(
    space: ProductSpace,
    frame: AdaptedFrame,
    case: EqualityCase | None = None,
    backend: str | None = None,
) -> SecondVariationReport:
    """Evaluate every applicable formula and optionally classify.

    The closed forms enter only when the frame is complete; the discrepancy
    field is the spread of all computed values.
    """
    values = [
        q_from_sff(space, frame, backend),
        q_curvature_form(space, frame, backend),
        q_midform(space, frame, backend),
    ]
    if frame.is_complete:
        qn = q_normal_closed(space, frame, backend)
        qt = q_tangent_closed(space, frame, backend)
    else:
        qn = []
        qt = []
    all_vals = values + qn + qt
    spread = float(max(all_vals) - min(all_vals))
    verdict = None
    if case is not None:
        verdict = classify_equality_case(space, frame, case, backend=backend)
    return SecondVariationReport(
        q_sff=values[0],
        q_curvature=values[1],
        q_mid=values[2],
        q_normal_closed=qn,
        q_tangent_closed=qt,
        max_discrepancy=spread,
        classifier=verdict,
    )


_COMPLEX_CASES = {
    EqualityCase.D1: ("d", 1),
    EqualityCase.D2Complex: ("d", 2),
    EqualityCase.N1: ("n", 1),
    EqualityCase.N2Complex: ("n", 2),
}

_QUAT_CASES = {
    EqualityCase.QuatD1: ("d", 1),
    EqualityCase.QuatD2: ("d", 2),
    EqualityCase.QuatN1: ("n", 1),
    EqualityCase.QuatN2: ("n", 2),
}


def _validate_case(space: ProductSpace, frame: AdaptedFrame, case: EqualityCase) -> str:
    """Return 'normal' or 'tangent' (which projections drive the verdict)."""
    kind = space.factor1.kind
    if case is EqualityCase.Structure:
        if not (
            isinstance(space.factor2, ProjectiveModel)
            and space.factor2.kind is Kind.COMPLEX
            and kind is Kind.COMPLEX
        ):
            raise CaseMismatch("structure detection needs two complex projective factors")
        if frame.d == 2:
            return "normal"
        if frame.n == 2:
            return "tangent"
        raise CaseMismatch("structure detection needs a 2-dimensional tangent or normal bundle")
    table = _COMPLEX_CASES if kind is Kind.COMPLEX else _QUAT_CASES
    if case not in table:
        raise CaseMismatch(f"case {case} does not apply to a {kind.value} first factor")
    attr, want = table[case]
    have = frame.n if attr == "n" else frame.d
    if have != want:
        raise CaseMismatch(f"case {case} needs {attr} = {want}, frame has {attr} = {have}")
    return "tangent" if attr == "n" else "normal"


def classify_equality_case(
    space: ProductSpace,
    frame: AdaptedFrame,
    case: EqualityCase,
    backend: str | None = None,
) -> ClassifierVerdict:
    """Decide whether a complete frame realizes the equality case Q = 0.

    The verdict is driven by the closed form matching the analyzed regime
    (normal projections for the codimension cases, tangent projections for
    the low-dimension cases; every structure index must vanish in the
    quaternionic cases).  The detail payload is present exactly when the
    verdict is positive and records the geometric shape of the equality:
    the sign relating the two normal (or tangent) projections in the
    2-dimensional complex cases, vanishing projection norms otherwise, and
    the invariant-plane structure for the structure case.
    """
    if not frame.is_complete:
        raise IncompleteFrame("classification is defined for complete frames only")
    side = _validate_case(space, frame, case)

    if case is EqualityCase.Structure:
        verdict = detect_structure(space, frame, plane=side)
        is_eq = verdict is not PlaneStructure.NEITHER
        detail = {"structure": verdict.value} if is_eq else None
        return ClassifierVerdict(case=case, is_equality_case=is_eq, detail=detail)

    if side == "normal":
        qs = q_normal_closed(space, frame, backend)
    else:
        qs = q_tangent_closed(space, frame, backend)
    tol = equality_tolerance(space, frame)
    is_eq = all(abs(v) <= tol for v in qs)
    if not is_eq:
        return ClassifierVerdict(case=case, is_equality_case=False, detail=None)

    m1 = space.split[0]
    rows = frame.normal[:, :m1] if side == "normal" else frame.tangent[:, :m1]
    kind = space.factor1.kind
    if kind is Kind.QUATERNIONIC:
        key = "max_normal_projection" if side == "normal" else "max_tangent_projection"
        detail = {key: float(np.max(np.linalg.norm(rows, axis=1)))}
    elif case in (EqualityCase.D1, EqualityCase.N1):
        key = "normal_projection_norm" if side == "normal" else "tangent_projection_norm"
        detail = {key: float(np.linalg.norm(rows[0]))}
    else:
        j = space.factor1.structures[0]
        paired = float(rows[1] @ (j @ rows[0]))
        norms = np.linalg.norm(rows, axis=1)
        if float(np.max(norms)) <= PROJECTION_ZERO_TOL:
            detail = {"epsilon": None}
        else:
            detail = {"epsilon": 1 if paired > 0.0 else -1}
    return ClassifierVerdict(case=case, is_equality_case=True, detail=detail)


def detect_structure(
    space: ProductSpace,
    frame: AdaptedFrame,
    plane: str = "auto",
    tol: float = STRUCTURE_TOL,
) -> PlaneStructure:
    """Test a 2-plane for invariance under the two product structures.

    The structures act blockwise: the first applies the factor structures
    with matching signs, the second flips the sign on the second factor.  A
    plane is invariant under a structure when the image of each basis
    vector has off-span residual at most ``tol``.  Planes whose projection
    to either factor vanishes are invariant under both structures or
    neither, never exactly one.
    """
    if not (
        isinstance(space.factor1, ProjectiveModel)
        and isinstance(space.factor2, ProjectiveModel)
        and space.factor1.kind is Kind.COMPLEX
        and space.factor2.kind is Kind.COMPLEX
    ):
        raise CaseMismatch("structure detection needs two complex projective factors")
    _check_frame(space, frame)
    if plane == "auto":
        if frame.d == 2:
            plane = "normal"
        elif frame.n == 2:
            plane = "tangent"
        else:
            raise CaseMismatch("no 2-dimensional plane to test")
    if plane == "normal":
        basis = frame.normal
    elif plane == "tangent":
        basis = frame.tangent
    else:
        raise CaseMismatch(f"unknown plane selector {plane!r}")
    if basis.shape[0] != 2:
        raise CaseMismatch(f"structure detection needs a 2-plane, got {basis.shape[0]} rows")

    m1 = space.split[0]
    j1 = space.factor1.structures[0]
    j2 = space.factor2.structures[0]

    def invariant(sign2: float) -> bool:
        for v in basis:
            img = np.concatenate([j1 @ v[:m1], sign2 * (j2 @ v[m1:])])
            resid = img - basis.T @ (basis @ img)
            if np.linalg.norm(resid) > tol:
                return False
        return True

    same = invariant(1.0)
    flipped = invariant(-1.0)
    if same and flipped:
        return PlaneStructure.BOTH
    if same:
        return PlaneStructure.J1
    if flipped:
        return PlaneStructure.J2
    return PlaneStructure.NEITHER


# ---------------------------------------------------------------------------
# frame constructions for the classifier suites
# ---------------------------------------------------------------------------


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(seed))


def _random_unit(rng, dim: int) -> np.ndarray:
    v = rng.standard_normal(dim)
    return v / np.linalg.norm(v)


def _orthonormal_pair(rng, dim: int):
    from .tangent_algebra import gram_schmidt

    rows = gram_schmidt(rng.standard_normal((2, dim)))
    return rows[0], rows[1]


def _complete_frame(space: ProductSpace, lead_rows: np.ndarray, side: str, rng) -> AdaptedFrame:
    """Complete orthonormal lead rows to a full adapted frame.

    ``side`` says whether the lead rows are the normal or the tangent
    bundle; the other bundle is a random orthonormal completion.
    """
    from .tangent_algebra import gram_schmidt

    m = space.ambient_dim
    k = lead_rows.shape[0]
    for _ in range(RESAMPLE_LIMIT):
        try:
            full = gram_schmidt(
                np.vstack([lead_rows, rng.standard_normal((m - k, m))])
            )
        except DegenerateInput:
            continue
        if side == "normal":
            return AdaptedFrame(tangent=full[k:], normal=full[:k], split=space.split)
        return AdaptedFrame(tangent=full[:k], normal=full[k:], split=space.split)
    raise DegenerateInput("could not complete the constructed rows to a frame")


def _split_unit(space: ProductSpace, weight: float, part1: np.ndarray, part2: np.ndarray):
    """Ambient unit row with factor-1 norm ``weight`` along given unit parts."""
    m1, m2 = space.split
    row = np.zeros(m1 + m2)
    row[:m1] = weight * part1
    row[m1:] = np.sqrt(max(0.0, 1.0 - weight * weight)) * part2
    return row


def build_equality_frame(
    space: ProductSpace,
    case: EqualityCase,
    seed,
    t: float | None = None,
    eps: int = 1,
) -> AdaptedFrame:
    """Construct a complete frame realizing the equality Q = 0 for ``case``.

    For the 1-dimensional cases the constrained projection is zero; for the
    2-dimensional complex cases the two constrained factor-1 projections
    are unit-norm-matched partners under the factor structure with sign
    ``eps``; for the quaternionic cases every constrained projection is
    zero.  ``t`` is the factor-1 projection norm in the complex
    2-dimensional cases (forced to 1 when the second factor is a line).
    """
    rng = _rng(seed)
    m1, m2 = space.split
    kind = space.factor1.kind

    if case in (EqualityCase.D1, EqualityCase.N1):
        if kind is not Kind.COMPLEX:
            raise CaseMismatch(f"case {case} needs a complex first factor")
        row = np.zeros(m1 + m2)
        row[m1:] = _random_unit(rng, m2)
        side = "normal" if case is EqualityCase.D1 else "tangent"
        return _complete_frame(space, row[None, :], side, rng)

    if case in (EqualityCase.D2Complex, EqualityCase.N2Complex):
        if kind is not Kind.COMPLEX:
            raise CaseMismatch(f"case {case} needs a complex first factor")
        if m2 < 2:
            t = 1.0
        elif t is None:
            t = float(rng.uniform(0.3, 0.95))
        u = _random_unit(rng, m1)
        ju = space.factor1.structures[0] @ u
        if t >= 1.0:
            a = np.zeros(m2)
            b = np.zeros(m2)
        else:
            a, b = _orthonormal_pair(rng, m2)
        rows = np.vstack(
            [_split_unit(space, t, u, a), _split_unit(space, t, eps * ju, b)]
        )
        side = "normal" if case is EqualityCase.D2Complex else "tangent"
        return _complete_frame(space, rows, side, rng)

    if case in (EqualityCase.QuatD1, EqualityCase.QuatD2, EqualityCase.QuatN1, EqualityCase.QuatN2):
        if kind is not Kind.QUATERNIONIC:
            raise CaseMismatch(f"case {case} needs a quaternionic first factor")
        count = 1 if case in (EqualityCase.QuatD1, EqualityCase.QuatN1) else 2
        if m2 < count:
            raise CaseMismatch(
                f"zero-projection frames for {case} need a second factor of dimension >= {count}"
            )
        rows = np.zeros((count, m1 + m2))
        if count == 1:
            rows[0, m1:] = _random_unit(rng, m2)
        else:
            a, b = _orthonormal_pair(rng, m2)
            rows[0, m1:] = a
            rows[1, m1:] = b
        side = "normal" if case in (EqualityCase.QuatD1, EqualityCase.QuatD2) else "tangent"
        return _complete_frame(space, rows, side, rng)

    raise CaseMismatch(f"no equality construction for case {case}")


def build_violation_frame(
    space: ProductSpace,
    case: EqualityCase,
    seed,
    margin: float = 1e-2,
    mode: str = "norm",
) -> AdaptedFrame:
    """Construct a complete frame violating one equality condition.

    ``mode`` selects which condition breaks in the 2-dimensional complex
    cases: ``norm`` mismatches the two projection norms by ``margin``,
    ``angle`` rotates the second projection by ``margin`` radians away from
    the structure partner (an in-span orthogonality defect), ``span``
    rotates it out of the span of the first projection and its structure
    image (needs factor-1 dimension at least 4).  The 1-dimensional and
    quaternionic cases have a single condition (zero projection) and
    violate it by giving the constrained row factor-1 norm ``margin``.
    """
    rng = _rng(seed)
    m1, m2 = space.split
    kind = space.factor1.kind

    if case in (EqualityCase.D1, EqualityCase.N1, EqualityCase.QuatD1, EqualityCase.QuatN1):
        u = _random_unit(rng, m1)
        part2 = _random_unit(rng, m2)
        row = _split_unit(space, margin, u, part2)
        side = "normal" if case in (EqualityCase.D1, EqualityCase.QuatD1) else "tangent"
        return _complete_frame(space, row[None, :], side, rng)

    if case in (EqualityCase.QuatD2, EqualityCase.QuatN2):
        if m2 < 2:
            raise CaseMismatch("needs a second factor of dimension >= 2")
        u = _random_unit(rng, m1)
        a, b = _orthonormal_pair(rng, m2)
        first = _split_unit(space, margin, u, a)
        second = np.zeros(m1 + m2)
        second[m1:] = b
        rows = np.vstack([first, second])
        side = "normal" if case is EqualityCase.QuatD2 else "tangent"
        return _complete_frame(space, rows, side, rng)

    if case not in (EqualityCase.D2Complex, EqualityCase.N2Complex):
        raise CaseMismatch(f"no violation construction for case {case}")

    if m2 < 2:
        raise CaseMismatch("violation constructions need a second factor of dimension >= 2")
    t = float(rng.uniform(0.4, 0.9))
    eps = 1 if rng.uniform() < 0.5 else -1
    u = _random_unit(rng, m1)
    j = space.factor1.structures[0]
    ju = j @ u
    a, b = _orthonormal_pair(rng, m2)
    first = _split_unit(space, t, u, a)

    if mode == "norm":
        second = _split_unit(space, t - margin, eps * ju, b)
    elif mode == "angle":
        part1 = np.cos(margin) * eps * ju + np.sin(margin) * u
        # keep the full rows orthogonal by tilting the factor-2 part
        mix = -t * t * np.sin(margin) / (1.0 - t * t)
        if abs(mix) >= 1.0:
            raise CaseMismatch("angle violation needs a smaller margin or t")
        part2 = mix * a + np.sqrt(1.0 - mix * mix) * b
        second = _split_unit(space, t, part1, part2)
    elif mode == "span":
        if m1 < 4:
            raise CaseMismatch("span violation needs factor-1 dimension >= 4")
        w = rng.standard_normal(m1)
        w -= (w @ u) * u + (w @ ju) * ju
        w /= np.linalg.norm(w)
        part1 = np.cos(margin) * eps * ju + np.sin(margin) * w
        second = _split_unit(space, t, part1, b)
    else:
        raise CaseMismatch(f"unknown violation mode {mode!r}")

    rows = np.vstack([first, second])
    side = "normal" if case is EqualityCase.D2Complex else "tangent"
    return _complete_frame(space, rows, side, rng)


def build_structure_plane(space: ProductSpace, target: PlaneStructure, seed) -> AdaptedFrame:
    """Construct a frame whose normal 2-plane has the requested structure.

    ``J1`` and ``J2`` planes mix both factors with equal weight and close
    under exactly one product structure; ``BOTH`` builds a plane inside the
    first factor alone.
    """
    if not (
        isinstance(space.factor2, ProjectiveModel)
        and space.factor1.kind is Kind.COMPLEX
        and space.factor2.kind is Kind.COMPLEX
    ):
        raise CaseMismatch("structure planes need two complex projective factors")
    rng = _rng(seed)
    m1, m2 = space.split
    j1 = space.factor1.structures[0]
    j2 = space.factor2.structures[0]
    x = _random_unit(rng, m1)
    y = _random_unit(rng, m2)
    u = np.concatenate([x, y]) / np.sqrt(2.0)
    if target is PlaneStructure.J1:
        v = np.concatenate([j1 @ x, j2 @ y]) / np.sqrt(2.0)
    elif target is PlaneStructure.J2:
        v = np.concatenate([j1 @ x, -(j2 @ y)]) / np.sqrt(2.0)
    elif target is PlaneStructure.BOTH:
        u = np.concatenate([x, np.zeros(m2)])
        v = np.concatenate([j1 @ x, np.zeros(m2)])
    else:
        raise CaseMismatch("cannot construct a plane with no structure on purpose")
    return _complete_frame(space, np.vstack([u, v]), "normal", rng)


def build_double_equality_frame(
    space: ProductSpace,
    seed,
    eps1: int = 1,
    eps2: int = 1,
    t: float | None = None,
) -> AdaptedFrame:
    """Tangent 2-plane whose projections pair under both factor structures.

    Realizes the simultaneous equality cases of both factors in a product
    of two complex projective models: matching signs give a plane invariant
    under the same-sign product structure, opposite signs under the
    sign-flipped one.
    """
    if not (
        isinstance(space.factor2, ProjectiveModel)
        and space.factor1.kind is Kind.COMPLEX
        and space.factor2.kind is Kind.COMPLEX
    ):
        raise CaseMismatch("double equality frames need two complex projective factors")
    rng = _rng(seed)
    m1, m2 = space.split
    if t is None:
        t = float(rng.uniform(0.3, 0.95))
    u = _random_unit(rng, m1)
    v = _random_unit(rng, m2)
    ju = space.factor1.structures[0] @ u
    jv = space.factor2.structures[0] @ v
    s = np.sqrt(1.0 - t * t)
    e1 = np.concatenate([t * u, s * v])
    e2 = np.concatenate([eps1 * t * ju, eps2 * s * jv])
    return _complete_frame(space, np.vstack([e1, e2]), "tangent", rng)


# ---------------------------------------------------------------------------
# batch scans
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FormulaScanResult:
    frames: int
    formulas: int
    max_rel_discrepancy: float
    elapsed: float


@dataclass(frozen=True)
class SignScanResult:
    frames: int
    max_q: float
    min_q: float
    elapsed: float
    values: Optional[np.ndarray] = None


def _random_projections(rng, batch, n, d, m, m1):
    """Draw a batch of adapted frames and return factor-1 projections."""
    raw = rng.standard_normal((batch, n + d, m))
    frames, ok = orthonormalize_batch(raw)
    rounds = 0
    while not ok.all():
        rounds += 1
        if rounds > RESAMPLE_LIMIT:
            raise DegenerateInput("random frame generation kept producing dependent rows")
        bad = np.flatnonzero(~ok)
        redraw, redraw_ok = orthonormalize_batch(
            rng.standard_normal((bad.size, n + d, m))
        )
        frames[bad] = redraw
        ok[bad] = redraw_ok
    e1 = np.ascontiguousarray(frames[:, :n, :m1])
    n1 = np.ascontiguousarray(frames[:, n:, :m1])
    return e1, n1


def formula_scan(
    space: ProductSpace,
    n: int,
    d: int,
    frames: int,
    seed: int,
    backend: str | None = None,
    chunk: int = 4096,
) -> FormulaScanResult:
    """Cross-check every formula over random complete adapted frames.

    Draws ``frames`` random frames with ``n`` tangent and ``d`` normal
    vectors (``n + d`` must exhaust the ambient dimension), evaluates all
    five formulas on each, and records the worst relative spread
    ``(max - min) / max(1, max |value|)``.
    """
    m = space.ambient_dim
    m1 = space.split[0]
    if n + d != m:
        raise IncompleteFrame(f"formula scan needs n + d = {m}, got {n + d}")
    if n < 1 or d < 1:
        raise DimensionMismatch("need at least one tangent and one normal vector")
    table, struct, lam = _kernels_for(space, backend)
    quat = space.factor1.kind is Kind.QUATERNIONIC
    rng = np.random.Generator(np.random.PCG64(seed))
    worst = 0.0
    formulas = 9 if quat else 5
    done = 0
    start = time.perf_counter()
    while done < frames:
        batch = min(chunk, frames - done)
        e1, n1 = _random_projections(rng, batch, n, d, m, m1)
        cols = [
            table["sff"](e1, n1, struct, lam),
            table["curvature"](e1, n1, struct, lam),
            table["mid"](e1, n1, struct, lam),
        ]
        if quat:
            qn = table["normal"](e1, n1, struct, lam)
            qt = table["tangent"](e1, n1, struct, lam)
            cols.extend([qn[:, 0], qn[:, 1], qn[:, 2], qt[:, 0], qt[:, 1], qt[:, 2]])
        else:
            cols.append(table["normal"](n1, struct, lam))
            cols.append(table["tangent"](e1, struct, lam))
        stack = np.stack(cols)
        spread = stack.max(axis=0) - stack.min(axis=0)
        scale = np.maximum(1.0, np.abs(stack).max(axis=0))
        worst = max(worst, float((spread / scale).max()))
        done += batch
    return FormulaScanResult(
        frames=done,
        formulas=formulas,
        max_rel_discrepancy=worst,
        elapsed=time.perf_counter() - start,
    )


def sign_scan(
    space: ProductSpace,
    n: int,
    d: int,
    frames: int,
    seed: int,
    backend: str | None = None,
    chunk: int = 8192,
    keep_values: bool = False,
) -> SignScanResult:
    """Scan Q over random complete frames and record its range.

    Uses the closed form matching the smaller bundle: the normal form when
    ``d <= n``, the tangent form otherwise.  For a quaternionic first
    factor the maximum is taken over all three structure indices.  With
    ``keep_values`` the per-frame worst entries come back for histograms.
    """
    m = space.ambient_dim
    m1 = space.split[0]
    if n + d != m:
        raise IncompleteFrame(f"sign scan needs n + d = {m}, got {n + d}")
    table, struct, lam = _kernels_for(space, backend)
    quat = space.factor1.kind is Kind.QUATERNIONIC
    rng = np.random.Generator(np.random.PCG64(seed))
    max_q = -np.inf
    min_q = np.inf
    done = 0
    kept: list[np.ndarray] = []
    start = time.perf_counter()
    use_normal = d <= n
    while done < frames:
        batch = min(chunk, frames - done)
        e1, n1 = _random_projections(rng, batch, n, d, m, m1)
        if quat:
            vals = table["normal" if use_normal else "tangent"](e1, n1, struct, lam)
        elif use_normal:
            vals = table["normal"](n1, struct, lam)
        else:
            vals = table["tangent"](e1, struct, lam)
        max_q = max(max_q, float(vals.max()))
        min_q = min(min_q, float(vals.min()))
        if keep_values:
            kept.append(vals if vals.ndim == 1 else vals.max(axis=1))
        done += batch
    return SignScanResult(
        frames=done,
        max_q=max_q,
        min_q=min_q,
        elapsed=time.perf_counter() - start,
        values=np.concatenate(kept) if kept else None,
    )
