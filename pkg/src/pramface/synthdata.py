"""Procedural two-domain face-like dataset with exact per-component masks.

Each identity is a bundle of geometry parameters (component positions, sizes)
and base intensities, drawn from seeded distributions with a minimum
separation between identities so the matching task is learnable from
geometry alone. A sample renders the identity's layout onto a 144x144
canvas: a face ellipse plus four components (left eye, right eye, nose,
mouth), each with a boolean mask that exactly covers the pixels the
component was painted on.

The two domains share geometry. VIS is the plain render; NIR applies a
fixed nonlinear intensity remap (inversion-like, exponent != 1 so no
per-pixel affine map can align the domains) plus a low-frequency additive
pattern. Pose (shift + shear), emotion (eye/mouth deformation) and, at the
severe level, half-plane occlusions perturb individual samples; occlusions
zero image pixels and mask bits alike, so a fully covered component yields
an empty mask.

Everything is driven by numpy PCG64 generators keyed on (seed, identity,
domain, sample index), so regeneration is bit-identical.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import pgm
from .maskops import NUM_PARTS

CANVAS = 144
DOMAINS = ("VIS", "NIR")
LEVELS = ("none", "mild", "severe")

MIN_GEOMETRY_SEPARATION = 8.0  # L2 px distance between identity geometry vectors
MAX_SPEC_TRIES = 2000

_OCCLUSION_SIDES = ("left", "right", "top", "bottom")


@dataclass(frozen=True)
class IdentitySpec:
    """Geometry (pixels, relative to the face center) and base intensities."""

    identity: int
    face_cx: float
    face_cy: float
    face_rx: float
    face_ry: float
    eye_dx: float
    eye_dy: float
    eye_rx: float
    eye_ry: float
    nose_dy: float
    nose_rx: float
    nose_ry: float
    mouth_dy: float
    mouth_rx: float
    mouth_ry: float
    face_level: float
    eye_level: float
    nose_level: float
    mouth_level: float

    def geometry_vector(self) -> np.ndarray:
        return np.array(
            [
                self.face_rx,
                self.face_ry,
                self.eye_dx,
                self.eye_dy,
                2 * self.eye_rx,
                2 * self.eye_ry,
                self.nose_dy,
                2 * self.nose_rx,
                2 * self.nose_ry,
                self.mouth_dy,
                2 * self.mouth_rx,
                2 * self.mouth_ry,
            ]
        )


@dataclass(frozen=True)
class Occlusion:
    side: str  # left | right | top | bottom
    fraction: float  # of the canvas, from that side


@dataclass(frozen=True)
class RenderSpec:
    identity: IdentitySpec
    domain: str
    pose_dx: float = 0.0
    pose_dy: float = 0.0
    shear: float = 0.0
    emotion: float = 0.0
    occlusion: Occlusion | None = None
    brightness: float = 1.0


@dataclass(frozen=True)
class PerturbationLevel:
    pose: float
    shear: float
    emotion: float
    occlusion_prob: float


_LEVELS = {
    "none": PerturbationLevel(pose=0.0, shear=0.0, emotion=0.0, occlusion_prob=0.0),
    "mild": PerturbationLevel(pose=3.0, shear=0.04, emotion=0.5, occlusion_prob=0.0),
    "severe": PerturbationLevel(pose=9.0, shear=0.12, emotion=1.0, occlusion_prob=0.4),
}


def _draw_identity(identity: int, rng: np.random.Generator) -> IdentitySpec:
    u = rng.uniform
    return IdentitySpec(
        identity=identity,
        face_cx=72.0 + u(-4, 4),
        face_cy=72.0 + u(-4, 4),
        face_rx=u(36, 46),
        face_ry=u(46, 58),
        eye_dx=u(14, 21),
        eye_dy=u(-24, -13),
        eye_rx=u(5, 8.5),
        eye_ry=u(3.5, 6.5),
        nose_dy=u(-2, 8),
        nose_rx=u(4, 7.5),
        nose_ry=u(7, 12),
        mouth_dy=u(19, 30),
        mouth_rx=u(9, 16),
        mouth_ry=u(3.5, 6.5),
        face_level=u(105, 150),
        eye_level=u(30, 75),
        nose_level=u(160, 200),
        mouth_level=u(35, 85),
    )


def _components_fit_inside_face(spec: IdentitySpec) -> bool:
    # Probe the emotion extremes at zero pose: every component-mask pixel
    # must land inside the face ellipse.
    for emotion in (-1.0, 0.0, 1.0):
        _, masks = render(RenderSpec(identity=spec, domain="VIS", emotion=emotion))
        face = masks[0]
        if not face.any():
            return False
        for part in range(1, NUM_PARTS):
            if not masks[part].any():
                return False
            if (masks[part] & ~face).any():
                return False
    return True


def build_identity_specs(num_ids: int, seed: int) -> list[IdentitySpec]:
    """Rejection-sample identities keeping geometry vectors well separated."""
    rng = np.random.default_rng([seed, 0x1D5])
    specs: list[IdentitySpec] = []
    vectors: list[np.ndarray] = []
    for identity in range(num_ids):
        for _ in range(MAX_SPEC_TRIES):
            candidate = _draw_identity(identity, rng)
            vec = candidate.geometry_vector()
            if vectors and min(np.linalg.norm(vec - v) for v in vectors) < MIN_GEOMETRY_SEPARATION:
                continue
            if not _components_fit_inside_face(candidate):
                continue
            specs.append(candidate)
            vectors.append(vec)
            break
        else:
            raise RuntimeError(
                f"could not place identity {identity} with separation "
                f">= {MIN_GEOMETRY_SEPARATION}px after {MAX_SPEC_TRIES} tries"
            )
    return specs


def draw_render_spec(
    spec: IdentitySpec, domain: str, level: str, rng: np.random.Generator
) -> RenderSpec:
    """Sample the per-image perturbations for one render at a given level."""
    if level not in _LEVELS:
        raise ValueError(f"unknown perturbation level {level!r}; choose from {LEVELS}")
    p = _LEVELS[level]
    occlusion = None
    if p.occlusion_prob > 0 and rng.random() < p.occlusion_prob:
        occlusion = Occlusion(
            side=_OCCLUSION_SIDES[int(rng.integers(0, 4))],
            fraction=float(rng.uniform(0.35, 0.55)),
        )
    return RenderSpec(
        identity=spec,
        domain=domain,
        pose_dx=float(rng.uniform(-p.pose, p.pose)),
        pose_dy=float(rng.uniform(-p.pose, p.pose)),
        shear=float(rng.uniform(-p.shear, p.shear)),
        emotion=float(rng.uniform(-p.emotion, p.emotion)),
        occlusion=occlusion,
        brightness=float(rng.uniform(0.95, 1.05)),
    )


_GRID_Y, _GRID_X = np.mgrid[0:CANVAS, 0:CANVAS].astype(np.float64)

# Fixed low-frequency additive pattern applied to NIR renders only.
_NIR_PATTERN = np.sin(2 * np.pi * _GRID_X / CANVAS * 0.9 + 0.6) * np.cos(
    2 * np.pi * _GRID_Y / CANVAS * 0.7 - 0.3
)


def _nir_remap(vis01: np.ndarray) -> np.ndarray:
    return 0.06 + 0.86 * (1.0 - vis01) ** 1.3 + 0.08 * _NIR_PATTERN


def render(spec: RenderSpec) -> tuple[np.ndarray, np.ndarray]:
    """Render one sample: (uint8 image, bool masks (5,144,144)).

    Mask order is [face, left eye, right eye, nose, mouth]; mask 0 is the
    face-region ellipse and masks 1..4 exactly cover their components.
    """
    if spec.domain not in DOMAINS:
        raise ValueError(f"unknown domain {spec.domain!r}")
    sid = spec.identity
    cx = sid.face_cx + spec.pose_dx
    cy = sid.face_cy + spec.pose_dy
    # Face-local sheared coordinates; one transform moves the whole assembly.
    v = _GRID_Y - cy
    u = _GRID_X - cx - spec.shear * v

    emotion = spec.emotion
    eye_ry = sid.eye_ry * (1.0 - 0.3 * emotion)
    mouth_ry = sid.mouth_ry * (1.0 + 0.5 * emotion)
    mouth_dy = sid.mouth_dy + 2.0 * emotion

    def field(ox: float, oy: float, rx: float, ry: float) -> np.ndarray:
        return ((u - ox) / rx) ** 2 + ((v - oy) / ry) ** 2

    face_f = field(0.0, 0.0, sid.face_rx, sid.face_ry)
    parts_f = [
        field(-sid.eye_dx, sid.eye_dy, sid.eye_rx, eye_ry),
        field(+sid.eye_dx, sid.eye_dy, sid.eye_rx, eye_ry),
        field(0.0, sid.nose_dy, sid.nose_rx, sid.nose_ry),
        field(0.0, mouth_dy, sid.mouth_rx, mouth_ry),
    ]
    levels = [sid.eye_level, sid.eye_level, sid.nose_level, sid.mouth_level]

    img = np.full((CANVAS, CANVAS), 12.0)
    face_mask = face_f <= 1.0
    img[face_mask] = (sid.face_level * (0.55 + 0.45 * (1.0 - face_f)))[face_mask]
    masks = np.zeros((NUM_PARTS, CANVAS, CANVAS), dtype=bool)
    masks[0] = face_mask
    for part, (f, level) in enumerate(zip(parts_f, levels), start=1):
        support = f <= 1.0
        img[support] = (level * (0.5 + 0.5 * (1.0 - f)))[support]
        masks[part] = support

    img *= spec.brightness
    if spec.domain == "NIR":
        img = np.clip(_nir_remap(np.clip(img / 255.0, 0.0, 1.0)), 0.0, 1.0) * 255.0

    if spec.occlusion is not None:
        region = _occlusion_region(spec.occlusion)
        img[region] = 0.0
        masks[:, region] = False

    return np.clip(img, 0.0, 255.0).round().astype(np.uint8), masks


def _occlusion_region(occ: Occlusion) -> np.ndarray:
    extent = int(round(occ.fraction * CANVAS))
    region = np.zeros((CANVAS, CANVAS), dtype=bool)
    if occ.side == "left":
        region[:, :extent] = True
    elif occ.side == "right":
        region[:, CANVAS - extent :] = True
    elif occ.side == "top":
        region[:extent, :] = True
    elif occ.side == "bottom":
        region[CANVAS - extent :, :] = True
    else:
        raise ValueError(f"unknown occlusion side {occ.side!r}")
    return region


@dataclass
class GenerateSummary:
    split: str
    num_ids: int
    num_samples: int
    empty_component_masks: int
    manifest_path: Path

    def manifest_sha256(self) -> str:
        return hashlib.sha256(self.manifest_path.read_bytes()).hexdigest()


def generate_dataset(
    root: str | Path,
    num_ids: int,
    samples_per_id_per_domain: int,
    seed: int,
    level: str = "mild",
    split: str = "train",
) -> GenerateSummary:
    """Write one split of the dataset layout consumed by the sampler.

    Layout: <root>/<split>/<identity>/<domain>_<k>.pgm with sibling
    <domain>_<k>.mask<i>.pgm files and a manifest.tsv per split.
    """
    if num_ids < 2:
        raise ValueError(f"need at least 2 identities, got {num_ids}")
    if samples_per_id_per_domain < 1:
        raise ValueError("need at least 1 sample per identity per domain")
    if level not in _LEVELS:
        raise ValueError(f"unknown perturbation level {level!r}; choose from {LEVELS}")

    split_dir = Path(root) / split
    split_dir.mkdir(parents=True, exist_ok=True)
    specs = build_identity_specs(num_ids, seed)

    rows: list[str] = []
    empty_masks = 0
    for spec in specs:
        id_dir = split_dir / f"{spec.identity:04d}"
        id_dir.mkdir(exist_ok=True)
        for domain_idx, domain in enumerate(DOMAINS):
            for k in range(samples_per_id_per_domain):
                rng = np.random.default_rng([seed, spec.identity, domain_idx, k])
                render_spec = draw_render_spec(spec, domain, level, rng)
                image, masks = render(render_spec)
                stem = f"{domain}_{k}"
                pgm.write_pgm(id_dir / f"{stem}.pgm", image)
                for i in range(NUM_PARTS):
                    pgm.write_pgm(id_dir / f"{stem}.mask{i}.pgm", masks[i])
                empty_masks += sum(1 for i in range(NUM_PARTS) if not masks[i].any())
                rel = f"{spec.identity:04d}/{stem}"
                sample_id = f"{split}/{rel}"
                mask_paths = "\t".join(f"{rel}.mask{i}.pgm" for i in range(NUM_PARTS))
                rows.append(f"{sample_id}\t{spec.identity}\t{domain}\t{rel}.pgm\t{mask_paths}")

    rows.sort()
    manifest = split_dir / "manifest.tsv"
    header = "sample_id\tidentity\tdomain\timage\t" + "\t".join(
        f"mask{i}" for i in range(NUM_PARTS)
    )
    manifest.write_text(header + "\n" + "\n".join(rows) + "\n")
    return GenerateSummary(
        split=split,
        num_ids=num_ids,
        num_samples=num_ids * len(DOMAINS) * samples_per_id_per_domain,
        empty_component_masks=empty_masks,
        manifest_path=manifest,
    )
