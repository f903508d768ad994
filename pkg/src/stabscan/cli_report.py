"""Command line suites: identity scans, sign scans, classifiers, spectra.

Four subcommands drive the library over embedded default configurations
and emit deterministic reports:

``verify-identities``
    certifies the model constants and cross-checks every Q formula over
    random complete frames in a list of product spaces.
``sign-scan``
    scans Q over random frames in the analyzed regimes and records its
    range plus a histogram.
``classify``
    runs constructed equality and violation frames through the
    equality-case classifiers, and constructed planes through the
    structure detector.
``geodesic-index``
    transports frames along closed product geodesics and reports Morse
    index, nullity and extreme eigenvalues of the discretized second
    variation form.

Reports carry a ``meta`` section (timestamps, wall clock) and a ``body``
section; the body is a pure function of the configuration, so runs with
the same seed reproduce it byte for byte.  Exit code 0 means every check
passed, 1 means some check failed, 2 means the configuration was invalid.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from ._backend import resolve_backend
from .errors import (
    BadClosure,
    BadDimension,
    CaseMismatch,
    ConfigError,
    DimensionMismatch,
    IncompleteFrame,
)
from .geodesic_lab import (
    Circle,
    GeodesicSpec,
    ProductEmbedding,
    canonical_geodesics,
    geodesic_residual,
    index_form_spectrum,
    sample_geodesic,
    transport_normal_frame,
    transport_residual,
)
from .model_spaces import (
    Flat,
    Kind,
    ProductSpace,
    ProjectiveModel,
    Sphere,
    lambda_squared,
    structure_defects,
    veronese_ambient_dims,
)
from .second_variation import (
    EqualityCase,
    PlaneStructure,
    build_double_equality_frame,
    build_equality_frame,
    build_structure_plane,
    build_violation_frame,
    classify_equality_case,
    detect_structure,
    formula_scan,
    q_normal_closed,
    q_tangent_closed,
    sign_scan,
)

HISTOGRAM_BINS = 24

DEFAULT_SEED = 42
DEFAULT_SAMPLES = 2000

DEFAULT_TOLERANCES = {
    "formula_rel": 1e-9,
    "sign_max": 1e-11,
    "equality_abs": 1e-10,
    "violation_max": -1e-6,
    "structure": 1e-9,
    "slice_lambda_min": -1e-6,
    "spectrum_window": 1e-2,
    "holonomy_orth": 1e-9,
    "geodesic_residual": 1e-6,
}

DEFAULT_SPACES = [
    {"kind": "complex", "m1": 2, "factor2": {"type": "flat", "dim": 1}},
    {"kind": "complex", "m1": 2, "factor2": {"type": "flat", "dim": 2}},
    {"kind": "complex", "m1": 4, "factor2": {"type": "flat", "dim": 1}},
    {"kind": "complex", "m1": 4, "factor2": {"type": "flat", "dim": 2}},
    {"kind": "complex", "m1": 6, "factor2": {"type": "flat", "dim": 1}},
    {"kind": "complex", "m1": 6, "factor2": {"type": "flat", "dim": 2}},
    {"kind": "complex", "m1": 4, "factor2": {"type": "sphere", "dim": 2, "radius": 1.3}},
    {"kind": "complex", "m1": 2, "factor2": {"type": "sphere", "dim": 3, "radius": 0.7}},
    {"kind": "complex", "m1": 2, "factor2": {"type": "complex", "m1": 2}},
    {"kind": "complex", "m1": 4, "factor2": {"type": "complex", "m1": 2}},
    {"kind": "quaternionic", "m1": 4, "factor2": {"type": "flat", "dim": 1}},
    {"kind": "quaternionic", "m1": 4, "factor2": {"type": "flat", "dim": 2}},
    {"kind": "quaternionic", "m1": 8, "factor2": {"type": "flat", "dim": 1}},
    {"kind": "quaternionic", "m1": 4, "factor2": {"type": "sphere", "dim": 2, "radius": 1.1}},
    {"kind": "quaternionic", "m1": 8, "factor2": {"type": "sphere", "dim": 3, "radius": 0.9}},
]

DEFAULT_CASES = [case.value for case in EqualityCase]

DEFAULT_GEODESICS = [
    {"name": "slice", "nodes": 256},
    {"name": "equator", "nodes": 256},
    {"name": "diagonal", "nodes": 256},
]

_C4F2 = {"kind": "complex", "m1": 4, "factor2": {"type": "flat", "dim": 2}}
_C2F1 = {"kind": "complex", "m1": 2, "factor2": {"type": "flat", "dim": 1}}
_C2F2 = {"kind": "complex", "m1": 2, "factor2": {"type": "flat", "dim": 2}}
_H4F2 = {"kind": "quaternionic", "m1": 4, "factor2": {"type": "flat", "dim": 2}}
_H4F1 = {"kind": "quaternionic", "m1": 4, "factor2": {"type": "flat", "dim": 1}}

# Each analyzed regime pinned to a concrete space and (tangent, normal)
# dimensions; these double as the sign-scan regimes.
CASE_REGIMES = {
    "d1": (_C4F2, 5, 1),
    "d2-complex": (_C4F2, 4, 2),
    "n1": (_C2F1, 1, 2),
    "n2-complex": (_C2F2, 2, 2),
    "quat-d1": (_H4F2, 5, 1),
    "quat-d2": (_H4F2, 4, 2),
    "quat-n1": (_H4F1, 1, 4),
    "quat-n2": (_H4F2, 2, 4),
}

STRUCTURE_SPACES = [
    {"kind": "complex", "m1": 2, "factor2": {"type": "complex", "m1": 2}},
    {"kind": "complex", "m1": 4, "factor2": {"type": "complex", "m1": 2}},
]

# Margin ranges for constructed violation frames, wide enough that the
# violation bound holds for every draw (see build_violation_frame).
VIOLATION_MARGINS = {
    "d1": (0.05, 0.5),
    "n1": (0.05, 0.5),
    "d2-complex": (0.01, 0.15),
    "n2-complex": (0.01, 0.15),
    "quat-d1": (0.01, 0.3),
    "quat-d2": (0.01, 0.3),
    "quat-n1": (0.01, 0.3),
    "quat-n2": (0.01, 0.3),
}

_TOP_KEYS = {
    "seed",
    "samples",
    "backend",
    "tolerances",
    "spaces",
    "cases",
    "geodesics",
    "lambda_sq_override",
}


@dataclass
class SuiteConfig:
    """Resolved configuration for one suite run.

    Every field has an embedded default, so each command runs with no
    arguments at all.  A JSON config file may override any subset; unknown
    keys are rejected rather than ignored.
    """

    seed: int = DEFAULT_SEED
    samples: int = DEFAULT_SAMPLES
    backend: str = "auto"
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    spaces: list = field(default_factory=lambda: [dict(s) for s in DEFAULT_SPACES])
    cases: list = field(default_factory=lambda: list(DEFAULT_CASES))
    geodesics: list = field(default_factory=lambda: [dict(g) for g in DEFAULT_GEODESICS])
    lambda_sq_override: float | None = None


def load_suite_config(path: str | None, seed: int | None, samples: int | None) -> SuiteConfig:
    """Merge defaults, an optional JSON config file, and flag overrides."""
    config = SuiteConfig()
    if path is not None:
        try:
            with open(path, "r", encoding="utf-8") as handle:
                raw = json.load(handle)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError("config root must be an object")
        unknown = set(raw) - _TOP_KEYS
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "seed" in raw:
            config.seed = _check_seed(raw["seed"])
        if "samples" in raw:
            config.samples = _check_samples(raw["samples"])
        if "backend" in raw:
            if raw["backend"] not in ("auto", "numpy", "numba"):
                raise ConfigError(f"backend must be auto, numpy or numba, got {raw['backend']!r}")
            config.backend = raw["backend"]
        if "tolerances" in raw:
            tols = raw["tolerances"]
            if not isinstance(tols, dict):
                raise ConfigError("tolerances must be an object")
            unknown = set(tols) - set(DEFAULT_TOLERANCES)
            if unknown:
                raise ConfigError(f"unknown tolerance names: {sorted(unknown)}")
            for key, value in tols.items():
                if not isinstance(value, (int, float)) or isinstance(value, bool):
                    raise ConfigError(f"tolerance {key} must be a number")
                config.tolerances[key] = float(value)
        if "spaces" in raw:
            if not isinstance(raw["spaces"], list) or not raw["spaces"]:
                raise ConfigError("spaces must be a nonempty list")
            config.spaces = [_check_space(entry) for entry in raw["spaces"]]
        if "cases" in raw:
            if not isinstance(raw["cases"], list):
                raise ConfigError("cases must be a list")
            known = {case.value for case in EqualityCase}
            for name in raw["cases"]:
                if name not in known:
                    raise ConfigError(f"unknown case {name!r}; choose from {sorted(known)}")
            config.cases = list(raw["cases"])
        if "geodesics" in raw:
            if not isinstance(raw["geodesics"], list) or not raw["geodesics"]:
                raise ConfigError("geodesics must be a nonempty list")
            config.geodesics = [_check_geodesic(entry) for entry in raw["geodesics"]]
        if "lambda_sq_override" in raw:
            value = raw["lambda_sq_override"]
            if value is not None:
                if not isinstance(value, (int, float)) or isinstance(value, bool) or value <= 0:
                    raise ConfigError("lambda_sq_override must be a positive number or null")
                config.lambda_sq_override = float(value)
    if seed is not None:
        config.seed = _check_seed(seed)
    if samples is not None:
        config.samples = _check_samples(samples)
    return config


def _check_seed(value) -> int:
    if not isinstance(value, int) or isinstance(value, bool) or not 0 <= value < 2**64:
        raise ConfigError(f"seed must be an integer in [0, 2^64), got {value!r}")
    return value


def _check_samples(value) -> int:
    if not isinstance(value, int) or isinstance(value, bool) or value < 1:
        raise ConfigError(f"samples must be a positive integer, got {value!r}")
    return value


def _check_space(entry) -> dict:
    if not isinstance(entry, dict):
        raise ConfigError(f"space entries must be objects, got {entry!r}")
    unknown = set(entry) - {"kind", "m1", "factor2"}
    if unknown:
        raise ConfigError(f"unknown space keys: {sorted(unknown)}")
    if entry.get("kind") not in ("complex", "quaternionic"):
        raise ConfigError(f"space kind must be complex or quaternionic, got {entry.get('kind')!r}")
    if not isinstance(entry.get("m1"), int) or entry["m1"] < 1:
        raise ConfigError(f"space m1 must be a positive integer, got {entry.get('m1')!r}")
    factor2 = entry.get("factor2")
    if not isinstance(factor2, dict):
        raise ConfigError("space factor2 must be an object")
    kind2 = factor2.get("type")
    if kind2 == "flat":
        allowed = {"type", "dim"}
    elif kind2 == "sphere":
        allowed = {"type", "dim", "radius"}
    elif kind2 in ("complex", "quaternionic"):
        allowed = {"type", "m1"}
    else:
        raise ConfigError(f"factor2 type must be flat, sphere, complex or quaternionic, got {kind2!r}")
    unknown = set(factor2) - allowed
    if unknown:
        raise ConfigError(f"unknown factor2 keys: {sorted(unknown)}")
    return entry


def _check_geodesic(entry) -> dict:
    if not isinstance(entry, dict):
        raise ConfigError(f"geodesic entries must be objects, got {entry!r}")
    unknown = set(entry) - {"name", "factor2", "windings", "nodes", "twist"}
    if unknown:
        raise ConfigError(f"unknown geodesic keys: {sorted(unknown)}")
    canonical = entry.get("name") in ("slice", "equator", "diagonal")
    if not canonical:
        if "factor2" not in entry or "windings" not in entry:
            raise ConfigError(
                "geodesic entries need either a canonical name or factor2 plus windings"
            )
        windings = entry["windings"]
        if (
            not isinstance(windings, list)
            or len(windings) != 2
            or not all(isinstance(w, int) and not isinstance(w, bool) for w in windings)
        ):
            raise ConfigError(f"windings must be two integers, got {windings!r}")
    nodes = entry.get("nodes", 256)
    if not isinstance(nodes, int) or isinstance(nodes, bool) or nodes < 16:
        raise ConfigError(f"nodes must be an integer >= 16, got {nodes!r}")
    twist = entry.get("twist", 0.0)
    if not isinstance(twist, (int, float)) or isinstance(twist, bool):
        raise ConfigError(f"twist must be a number, got {twist!r}")
    return entry


# ---------------------------------------------------------------------------
# object construction from descriptors
# ---------------------------------------------------------------------------


def _build_factor2(desc: dict):
    kind = desc["type"]
    try:
        if kind == "flat":
            return Flat(desc["dim"])
        if kind == "sphere":
            return Sphere(desc["dim"], desc.get("radius", 1.0))
        return ProjectiveModel(Kind(kind), desc["m1"])
    except (BadDimension, BadClosure, ValueError, KeyError) as exc:
        raise ConfigError(f"bad factor2 descriptor {desc!r}: {exc}") from exc


def _build_space(desc: dict, override: float | None) -> ProductSpace:
    try:
        factor1 = ProjectiveModel(Kind(desc["kind"]), desc["m1"], lambda_sq=override)
        return ProductSpace(factor1, _build_factor2(desc["factor2"]))
    except (BadDimension, DimensionMismatch, ValueError, KeyError) as exc:
        raise ConfigError(f"bad space descriptor {desc!r}: {exc}") from exc


def _factor2_name(desc: dict) -> str:
    kind = desc["type"]
    if kind == "flat":
        return f"F{desc['dim']}"
    if kind == "sphere":
        return f"S{desc['dim']}r{desc.get('radius', 1.0):g}"
    prefix = "C" if kind == "complex" else "H"
    return f"{prefix}{desc['m1']}"


def space_name(desc: dict) -> str:
    prefix = "C" if desc["kind"] == "complex" else "H"
    return f"{prefix}{desc['m1']}x{_factor2_name(desc['factor2'])}"


def _child_seed(*entropy: int) -> int:
    return int(np.random.SeedSequence(list(entropy)).generate_state(1, np.uint64)[0])


def _progress(message: str) -> None:
    print(message, file=sys.stderr, flush=True)


# ---------------------------------------------------------------------------
# suites
# ---------------------------------------------------------------------------


def cmd_verify_identities(config: SuiteConfig):
    """Certify model constants, then cross-check all Q formulas."""
    tol = config.tolerances["formula_rel"]
    constants = []
    constants_pass = True
    seen = set()
    models = []
    for desc in config.spaces:
        models.append((desc["kind"], desc["m1"], config.lambda_sq_override))
        factor2 = desc["factor2"]
        if factor2["type"] in ("complex", "quaternionic"):
            models.append((factor2["type"], factor2["m1"], None))
    for kind_name, m1, override in models:
        key = (kind_name, m1, override)
        if key in seen:
            continue
        seen.add(key)
        kind = Kind(kind_name)
        try:
            model = ProjectiveModel(kind, m1, lambda_sq=override)
        except BadDimension as exc:
            raise ConfigError(str(exc)) from exc
        formula = lambda_squared(kind, m1)
        defect = abs(model.lambda_sq - formula)
        structure_defect = max(structure_defects(model).values())
        domain_dim, ambient_dim = veronese_ambient_dims(kind, m1)
        row_pass = defect <= 1e-15 and structure_defect <= 1e-12
        constants_pass = constants_pass and row_pass
        prefix = "C" if kind is Kind.COMPLEX else "H"
        constants.append(
            {
                "model": f"{prefix}{m1}",
                "kind": kind_name,
                "m1": m1,
                "lambda_sq": model.lambda_sq,
                "lambda_sq_formula": formula,
                "lambda_sq_defect": defect,
                "structure_defect": structure_defect,
                "veronese_domain_dim": domain_dim,
                "veronese_ambient_dim": ambient_dim,
                "pass": row_pass,
            }
        )

    scans = []
    worst = 0.0
    total = 0
    for idx, desc in enumerate(config.spaces):
        space = _build_space(desc, config.lambda_sq_override)
        name = space_name(desc)
        m = space.ambient_dim
        dims = list(range(1, m))
        base, extra = divmod(config.samples, len(dims))
        for j, d in enumerate(dims):
            frames = base + (1 if j < extra else 0)
            if frames == 0:
                continue
            result = formula_scan(
                space,
                n=m - d,
                d=d,
                frames=frames,
                seed=_child_seed(config.seed, 1, idx, d),
                backend=config.backend,
            )
            worst = max(worst, result.max_rel_discrepancy)
            total += result.frames
            scans.append(
                {
                    "space": name,
                    "n": m - d,
                    "d": d,
                    "frames": result.frames,
                    "max_rel_discrepancy": result.max_rel_discrepancy,
                }
            )
        _progress(f"[verify-identities] {name}: {config.samples} frames scanned")

    passed = constants_pass and worst <= tol
    body = {
        "suite": "verify-identities",
        "pass": passed,
        "seed": config.seed,
        "samples_per_space": config.samples,
        "tolerance_rel": tol,
        "constants": constants,
        "constants_pass": constants_pass,
        "scans": scans,
        "total_frames": total,
        "worst_rel_discrepancy": worst,
    }
    return body, passed


def cmd_sign_scan(config: SuiteConfig):
    """Scan Q over random frames in every requested regime."""
    tol = config.tolerances["sign_max"]
    regime_names = [name for name in config.cases if name in CASE_REGIMES]
    if not regime_names:
        raise ConfigError("no scannable cases configured; the case list is empty")
    regimes = []
    worst = -np.inf
    passed = True
    for idx, name in enumerate(regime_names):
        desc, n, d = CASE_REGIMES[name]
        space = _build_space(desc, config.lambda_sq_override)
        result = sign_scan(
            space,
            n=n,
            d=d,
            frames=config.samples,
            seed=_child_seed(config.seed, 2, idx),
            backend=config.backend,
            keep_values=True,
        )
        counts, edges = np.histogram(result.values, bins=HISTOGRAM_BINS)
        violations = int(np.sum(result.values > tol))
        regime_pass = result.max_q <= tol
        passed = passed and regime_pass
        worst = max(worst, result.max_q)
        regimes.append(
            {
                "regime": name,
                "space": space_name(desc),
                "n": n,
                "d": d,
                "frames": result.frames,
                "min_q": result.min_q,
                "max_q": result.max_q,
                "violations": violations,
                "pass": regime_pass,
                "histogram": {
                    "bin_edges": [float(e) for e in edges],
                    "counts": [int(c) for c in counts],
                },
            }
        )
        _progress(f"[sign-scan] {name}: max Q = {result.max_q:.3e} over {result.frames} frames")
    body = {
        "suite": "sign-scan",
        "pass": passed,
        "seed": config.seed,
        "samples_per_regime": config.samples,
        "tolerance_max_q": tol,
        "regimes": regimes,
        "worst_max_q": worst,
    }
    return body, passed


def _classify_standard_case(config: SuiteConfig, case_idx: int, name: str) -> dict:
    case = EqualityCase(name)
    desc, n, d = CASE_REGIMES[name]
    space = _build_space(desc, config.lambda_sq_override)
    normal_side = name in ("d1", "d2-complex", "quat-d1", "quat-d2")
    closed_form = q_normal_closed if normal_side else q_tangent_closed
    k = config.samples
    seeds = np.random.SeedSequence([config.seed, 3, case_idx]).generate_state(2 * k, np.uint64)
    rng = np.random.Generator(np.random.PCG64(_child_seed(config.seed, 3, case_idx, 1)))

    max_abs_q = 0.0
    equality_ok = True
    for i in range(k):
        eps = 1 if i % 2 == 0 else -1
        frame = build_equality_frame(space, case, int(seeds[i]), eps=eps)
        verdict = classify_equality_case(space, frame, case)
        detail_ok = True
        if name in ("d2-complex", "n2-complex"):
            detail_ok = verdict.detail.get("epsilon") == eps
        equality_ok = equality_ok and verdict.is_equality_case and detail_ok
        max_abs_q = max(max_abs_q, max(abs(q) for q in closed_form(space, frame)))

    lo, hi = VIOLATION_MARGINS[name]
    margins = rng.uniform(lo, hi, k)
    two_modes = name in ("d2-complex", "n2-complex")
    max_violation_q = -np.inf
    rejection_ok = True
    for i in range(k):
        mode = ("norm", "angle")[i % 2] if two_modes else "norm"
        frame = build_violation_frame(
            space, case, int(seeds[k + i]), margin=float(margins[i]), mode=mode
        )
        verdict = classify_equality_case(space, frame, case)
        rejection_ok = rejection_ok and not verdict.is_equality_case
        max_violation_q = max(max_violation_q, max(closed_form(space, frame)))

    case_pass = (
        equality_ok
        and rejection_ok
        and max_abs_q <= config.tolerances["equality_abs"]
        and max_violation_q <= config.tolerances["violation_max"]
    )
    return {
        "case": name,
        "space": space_name(desc),
        "n": n,
        "d": d,
        "equality_frames": k,
        "equality_all_classified": equality_ok,
        "max_abs_q": max_abs_q,
        "violation_frames": k,
        "violations_all_rejected": rejection_ok,
        "max_violation_q": max_violation_q,
        "pass": case_pass,
    }


def _classify_structure_case(config: SuiteConfig, case_idx: int) -> dict:
    k = config.samples
    tol = config.tolerances["structure"]
    targets = [PlaneStructure.J1, PlaneStructure.J2, PlaneStructure.BOTH]
    planes = []
    all_ok = True
    for s_idx, desc in enumerate(STRUCTURE_SPACES):
        space = _build_space(desc, config.lambda_sq_override)
        for t_idx, target in enumerate(targets):
            seeds = np.random.SeedSequence(
                [config.seed, 3, case_idx, s_idx, t_idx]
            ).generate_state(k, np.uint64)
            missed = 0
            for i in range(k):
                frame = build_structure_plane(space, target, int(seeds[i]))
                got = detect_structure(space, frame, plane="normal", tol=tol)
                if got is not target:
                    missed += 1
            all_ok = all_ok and missed == 0
            planes.append(
                {
                    "space": space_name(desc),
                    "target": target.value,
                    "frames": k,
                    "misclassified": missed,
                }
            )

    # Frames realizing the equality case in both factors at once: their
    # tangent plane must always close under one of the product structures.
    desc = STRUCTURE_SPACES[0]
    space = _build_space(desc, config.lambda_sq_override)
    seeds = np.random.SeedSequence([config.seed, 3, case_idx, 99]).generate_state(k, np.uint64)
    neither = 0
    max_abs_q = 0.0
    sign_mismatch = 0
    for i in range(k):
        eps1 = 1 if i % 2 == 0 else -1
        eps2 = 1 if i % 3 == 0 else -1
        frame = build_double_equality_frame(space, int(seeds[i]), eps1=eps1, eps2=eps2)
        max_abs_q = max(max_abs_q, max(abs(q) for q in q_tangent_closed(space, frame)))
        got = detect_structure(space, frame, plane="tangent", tol=tol)
        if got is PlaneStructure.NEITHER:
            neither += 1
        expected = PlaneStructure.J1 if eps1 == eps2 else PlaneStructure.J2
        if got is not expected:
            sign_mismatch += 1
    equality_ok = (
        neither == 0
        and sign_mismatch == 0
        and max_abs_q <= config.tolerances["equality_abs"]
    )
    all_ok = all_ok and equality_ok
    return {
        "case": "structure",
        "planes": planes,
        "equality_planes": {
            "space": space_name(desc),
            "frames": k,
            "neither": neither,
            "sign_mismatches": sign_mismatch,
            "max_abs_q": max_abs_q,
        },
        "pass": all_ok,
    }


def cmd_classify(config: SuiteConfig):
    """Run constructed frames through the classifiers and detectors."""
    if not config.cases:
        raise ConfigError("case list is empty; nothing to classify")
    rows = []
    passed = True
    for case_idx, name in enumerate(config.cases):
        if name == "structure":
            row = _classify_structure_case(config, case_idx)
        else:
            row = _classify_standard_case(config, case_idx, name)
        passed = passed and row["pass"]
        rows.append(row)
        _progress(f"[classify] {name}: {'ok' if row['pass'] else 'FAILED'}")
    body = {
        "suite": "classify",
        "pass": passed,
        "seed": config.seed,
        "samples_per_case": config.samples,
        "tolerances": {
            "equality_abs": config.tolerances["equality_abs"],
            "violation_max": config.tolerances["violation_max"],
            "structure": config.tolerances["structure"],
        },
        "cases": rows,
    }
    return body, passed


def _geodesic_spec(entry: dict):
    """Turn one config entry into a spec, a label and a node count."""
    nodes = entry.get("nodes", 256)
    twist = float(entry.get("twist", 0.0))
    name = entry.get("name")
    if name in ("slice", "equator", "diagonal"):
        spec = canonical_geodesics()[name]
        return spec, name, nodes, twist, True
    factor2 = entry["factor2"]
    kind = factor2.get("type")
    try:
        if kind == "circle":
            model = Circle(factor2["circumference"])
        elif kind == "sphere":
            model = Sphere(factor2["dim"], factor2.get("radius", 1.0))
        else:
            raise ConfigError(f"geodesic factor2 type must be circle or sphere, got {kind!r}")
        embedding = ProductEmbedding(model)
        p, q = entry["windings"]
        spec = GeodesicSpec.from_windings(embedding, p, q)
    except (BadClosure, BadDimension, KeyError) as exc:
        raise ConfigError(f"bad geodesic entry {entry!r}: {exc}") from exc
    label = name or f"{kind}-w{p}-{q}"
    return spec, label, nodes, twist, False


def _factor2_label(embedding: ProductEmbedding) -> str:
    if isinstance(embedding.factor2, Circle):
        return f"circle({embedding.factor2.circumference:g})"
    return f"sphere({embedding.factor2.dim},r={embedding.factor2.radius:g})"


def _run_geodesic(spec: GeodesicSpec, nodes: int, twist: float, tolerances: dict):
    sample = sample_geodesic(spec, nodes)
    sample = transport_normal_frame(sample, twist=twist)
    spectrum = index_form_spectrum(sample)
    holonomy = spectrum.holonomy
    orth_defect = float(
        np.max(np.abs(holonomy.T @ holonomy - np.eye(holonomy.shape[0])))
    )
    lam_min = float(spectrum.eigenvalues[0])
    return {
        "sample": sample,
        "spectrum": spectrum,
        "lambda_min": lam_min,
        "morse_index": spectrum.morse_index,
        "nullity": spectrum.nullity,
        "geodesic_residual": float(geodesic_residual(sample)),
        "transport_residual": float(transport_residual(sample)),
        "holonomy_defect": orth_defect,
    }


_CANONICAL_CHECKS = {
    "slice": (
        ("morse_index_is_0", lambda r, t: (float(r["morse_index"]), 0.0, r["morse_index"] == 0)),
        (
            "lambda_min_above_floor",
            lambda r, t: (r["lambda_min"], t["slice_lambda_min"], r["lambda_min"] >= t["slice_lambda_min"]),
        ),
        ("nullity_is_2", lambda r, t: (float(r["nullity"]), 2.0, r["nullity"] == 2)),
    ),
    "equator": (
        (
            "lambda_min_near_minus_1",
            lambda r, t: (
                r["lambda_min"],
                t["spectrum_window"],
                abs(r["lambda_min"] + 1.0) <= t["spectrum_window"],
            ),
        ),
        ("morse_index_is_1", lambda r, t: (float(r["morse_index"]), 1.0, r["morse_index"] == 1)),
        ("nullity_is_3", lambda r, t: (float(r["nullity"]), 3.0, r["nullity"] == 3)),
    ),
    "diagonal": (
        (
            "lambda_min_near_minus_half",
            lambda r, t: (
                r["lambda_min"],
                t["spectrum_window"],
                abs(r["lambda_min"] + 0.5) <= t["spectrum_window"],
            ),
        ),
        ("morse_index_is_1", lambda r, t: (float(r["morse_index"]), 1.0, r["morse_index"] == 1)),
    ),
}


def _stability_checks(spec: GeodesicSpec, run: dict) -> list:
    """The coarse stability laws for a non-canonical closed geodesic."""
    a = spec.speeds[0]
    emb = spec.embedding
    checks = []
    if a > 0.0:
        checks.append(
            ("morse_index_positive", float(run["morse_index"]), 1.0, run["morse_index"] >= 1)
        )
    elif emb.sectional2 == 0.0:
        checks.append(("morse_index_is_0", float(run["morse_index"]), 0.0, run["morse_index"] == 0))
    elif emb.dim2 >= 2:
        checks.append(
            ("morse_index_positive", float(run["morse_index"]), 1.0, run["morse_index"] >= 1)
        )
    return checks


def cmd_geodesic_index(config: SuiteConfig):
    """Transport, diagonalize and sanity-check the configured geodesics."""
    tols = config.tolerances
    runs = []
    passed = True
    for entry in config.geodesics:
        spec, label, nodes, twist, canonical = _geodesic_spec(entry)
        run = _run_geodesic(spec, nodes, twist, tols)
        checks = []
        if canonical:
            for check_name, fn in _CANONICAL_CHECKS[label]:
                value, bound, ok = fn(run, tols)
                checks.append((check_name, value, bound, ok))
        else:
            checks.extend(_stability_checks(spec, run))
        checks.append(
            (
                "geodesic_residual_small",
                run["geodesic_residual"],
                tols["geodesic_residual"],
                run["geodesic_residual"] <= tols["geodesic_residual"],
            )
        )
        checks.append(
            (
                "holonomy_orthogonal",
                run["holonomy_defect"],
                tols["holonomy_orth"],
                run["holonomy_defect"] <= tols["holonomy_orth"],
            )
        )
        run_pass = all(ok for (_, _, _, ok) in checks)
        passed = passed and run_pass
        spectrum = run["spectrum"]
        low = [float(v) for v in spectrum.eigenvalues[:8]]
        runs.append(
            {
                "name": label,
                "factor2": _factor2_label(spec.embedding),
                "a": spec.speeds[0],
                "b": spec.speeds[1],
                "length": spec.length,
                "nodes": nodes,
                "twist": twist,
                "lambda_min": run["lambda_min"],
                "morse_index": run["morse_index"],
                "nullity": run["nullity"],
                "lowest_eigenvalues": low,
                "geodesic_residual": run["geodesic_residual"],
                "transport_residual": run["transport_residual"],
                "holonomy_defect": run["holonomy_defect"],
                "checks": [
                    {"check": name, "value": value, "bound": bound, "pass": ok}
                    for (name, value, bound, ok) in checks
                ],
                "pass": run_pass,
            }
        )
        _progress(
            f"[geodesic-index] {label}: morse {run['morse_index']}, "
            f"nullity {run['nullity']}, min {run['lambda_min']:.6f}"
        )

    # Second-order convergence probe on the rotating great circle.  Its
    # lowest eigenvalue comes from a constant field and is exact at every
    # resolution, so the probe watches the first rotational mode instead,
    # whose continuum value is exactly zero.
    exact = 0.0
    spec = canonical_geodesics()["equator"]
    errors = []
    for nodes in (64, 128):
        run = _run_geodesic(spec, nodes, 0.0, tols)
        errors.append(abs(float(run["spectrum"].eigenvalues[1]) - exact))
    ratio = errors[0] / errors[1] if errors[1] > 0 else float("inf")
    conv_pass = 4.0 / 1.5 <= ratio <= 4.0 * 1.5
    passed = passed and conv_pass
    convergence = {
        "name": "equator",
        "quantity": "first rotational eigenvalue",
        "nodes": [64, 128],
        "exact": exact,
        "errors": errors,
        "ratio": ratio,
        "pass": conv_pass,
    }

    body = {
        "suite": "geodesic-index",
        "pass": passed,
        "seed": config.seed,
        "tolerances": {
            "slice_lambda_min": tols["slice_lambda_min"],
            "spectrum_window": tols["spectrum_window"],
            "holonomy_orth": tols["holonomy_orth"],
            "geodesic_residual": tols["geodesic_residual"],
        },
        "runs": runs,
        "convergence": convergence,
    }
    return body, passed


COMMANDS = {
    "verify-identities": cmd_verify_identities,
    "sign-scan": cmd_sign_scan,
    "classify": cmd_classify,
    "geodesic-index": cmd_geodesic_index,
}


# ---------------------------------------------------------------------------
# rendering
# ---------------------------------------------------------------------------


def format_float(value: float) -> str:
    """Render one float with 17 significant digits, the round-trip width."""
    value = float(value)
    if not np.isfinite(value):
        raise ValueError(f"non-finite value in report: {value}")
    return format(value, ".17g")


def render_json(obj, indent: int = 0) -> str:
    """Serialize a report deterministically: sorted keys, fixed float width."""
    pad = "  " * indent
    inner = "  " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        parts = [
            f"{inner}{json.dumps(str(key))}: {render_json(obj[key], indent + 1)}"
            for key in sorted(obj)
        ]
        return "{\n" + ",\n".join(parts) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if len(obj) == 0:
            return "[]"
        parts = [f"{inner}{render_json(item, indent + 1)}" for item in obj]
        return "[\n" + ",\n".join(parts) + "\n" + pad + "]"
    if isinstance(obj, bool) or isinstance(obj, np.bool_):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return format_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        return render_json(obj.tolist(), indent)
    raise TypeError(f"cannot serialize {type(obj)!r}")


_CSV_COLUMNS = {
    "verify-identities": (
        "scans",
        ["space", "n", "d", "frames", "max_rel_discrepancy"],
    ),
    "sign-scan": (
        "regimes",
        ["regime", "space", "n", "d", "frames", "min_q", "max_q", "violations", "pass"],
    ),
    "geodesic-index": (
        "runs",
        [
            "name",
            "factor2",
            "a",
            "b",
            "length",
            "nodes",
            "lambda_min",
            "morse_index",
            "nullity",
            "geodesic_residual",
            "transport_residual",
            "holonomy_defect",
            "pass",
        ],
    ),
}

_CSV_CLASSIFY = [
    "case",
    "space",
    "equality_frames",
    "equality_all_classified",
    "max_abs_q",
    "violation_frames",
    "violations_all_rejected",
    "max_violation_q",
    "pass",
]


def _csv_cell(value) -> str:
    if isinstance(value, bool) or isinstance(value, np.bool_):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return format_float(value)
    return str(value)


def render_csv(command: str, body: dict) -> str:
    """Flatten the main table of one report into CSV text."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    if command == "classify":
        writer.writerow(_CSV_CLASSIFY)
        for row in body["cases"]:
            writer.writerow([_csv_cell(row.get(col, "")) for col in _CSV_CLASSIFY])
        return buffer.getvalue()
    section, columns = _CSV_COLUMNS[command]
    writer.writerow(columns)
    for row in body[section]:
        writer.writerow([_csv_cell(row.get(col, "")) for col in columns])
    return buffer.getvalue()


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stabscan",
        description="Stability scans for minimal submanifolds of projective products.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        p = sub.add_parser(name, help=fn.__doc__.splitlines()[0].lower().rstrip("."))
        p.add_argument("--config", metavar="PATH", help="JSON config file")
        p.add_argument("--seed", type=int, metavar="U64", help="root seed override")
        p.add_argument("--samples", type=int, metavar="N", help="sample count override")
        p.add_argument("--out", metavar="PATH", help="write the report here instead of stdout")
        p.add_argument("--format", choices=("json", "csv"), default="json")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_suite_config(args.config, args.seed, args.samples)
        started = time.perf_counter()
        body, passed = COMMANDS[args.command](config)
        wall = time.perf_counter() - started
    except (ConfigError, BadClosure, BadDimension, DimensionMismatch, CaseMismatch, IncompleteFrame) as exc:
        print(f"stabscan: config error: {exc}", file=sys.stderr)
        return 2

    if args.format == "json":
        report = {
            "meta": {
                "command": args.command,
                "generated_at": datetime.now(timezone.utc).isoformat(),
                "wall_clock_s": wall,
                "backend": resolve_backend(config.backend),
            },
            "body": body,
        }
        text = render_json(report) + "\n"
    else:
        text = render_csv(args.command, body)

    if args.out:
        with open(args.out, "w", encoding="utf-8") as handle:
            handle.write(text)
    else:
        sys.stdout.write(text)
    _progress(f"[{args.command}] {'PASS' if passed else 'FAIL'} in {wall:.2f}s")
    return 0 if passed else 1


if __name__ == "__main__":
    raise SystemExit(main())
