"""Layered skin phantom with a growing melanoma lesion.

The phantom lives in the box (0, 10)^3 (millimetres, used directly as
dimensionless coordinates).  The x3 axis points up: the top face x3 = 10 is
covered by a 2 mm immersion layer, below it sit epidermis, dermis and fat.
The lesion is a cylinder (month 0) or a downward-pointing cone whose base disk
lies on the skin surface, centred on the vertical axis through (5, 5).

Points are classified into :class:`TissueKind` values; coefficients are the
tabulated 6 GHz values divided by a uniform ``scaling_factor``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import UnknownMonth


class Shape(enum.Enum):
    CYLINDER = "Cylinder"
    CONE = "Cone"


class TissueKind(enum.IntEnum):
    VACUUM = 0
    IMMERSION = 1
    EPIDERMIS = 2
    DERMIS = 3
    FAT = 4
    TUMOR_STAGE1 = 5
    TUMOR_STAGE2 = 6
    TUMOR_STAGE3 = 7


@dataclass(frozen=True)
class MelanomaModel:
    month: int
    shape: Shape
    diameter: float
    depth: float

    @property
    def radius(self) -> float:
        return 0.5 * self.diameter


@dataclass(frozen=True)
class TissueProperties:
    eps_r: float
    sigma: float
    # "depth" column exactly as printed; tumour rows carry inequalities
    table_depth: str


# month -> (shape, diameter mm, depth mm)
_GROWTH_TABLE: dict[int, tuple[Shape, float, float]] = {
    0: (Shape.CYLINDER, 6.00, 0.15),
    2: (Shape.CONE, 6.09, 0.34),
    4: (Shape.CONE, 6.19, 0.71),
    6: (Shape.CONE, 6.28, 1.08),
    8: (Shape.CONE, 6.36, 1.46),
    10: (Shape.CONE, 6.45, 1.83),
    12: (Shape.CONE, 6.54, 2.20),
    14: (Shape.CONE, 6.62, 2.57),
    16: (Shape.CONE, 6.71, 2.95),
    18: (Shape.CONE, 6.79, 3.32),
    20: (Shape.CONE, 6.87, 3.69),
    22: (Shape.CONE, 6.96, 4.06),
}

MONTHS: tuple[int, ...] = tuple(sorted(_GROWTH_TABLE))

TISSUE_TABLE: dict[TissueKind, TissueProperties] = {
    TissueKind.IMMERSION: TissueProperties(32.0, 4.0, "2"),
    TissueKind.EPIDERMIS: TissueProperties(35.0, 4.0, "1"),
    TissueKind.DERMIS: TissueProperties(40.0, 9.0, "3.5"),
    TissueKind.FAT: TissueProperties(9.0, 1.0, "5.5"),
    TissueKind.TUMOR_STAGE1: TissueProperties(45.0, 5.0, "< 1"),
    TissueKind.TUMOR_STAGE2: TissueProperties(50.0, 5.0, "> 1"),
    TissueKind.TUMOR_STAGE3: TissueProperties(60.0, 6.0, "> 1"),
}

VACUUM_PROPERTIES = TissueProperties(1.0, 0.0, "")

TUMOR_KINDS = (TissueKind.TUMOR_STAGE1, TissueKind.TUMOR_STAGE2, TissueKind.TUMOR_STAGE3)


def melanoma_model(month: int) -> MelanomaModel:
    """Return the tabulated lesion geometry for ``month`` (no interpolation)."""
    if isinstance(month, bool) or not isinstance(month, (int, np.integer)) or int(month) not in _GROWTH_TABLE:
        raise UnknownMonth(f"month {month!r} is not tabulated; expected one of {list(MONTHS)}")
    shape, diameter, depth = _GROWTH_TABLE[int(month)]
    return MelanomaModel(int(month), shape, diameter, depth)


def analytic_tumor_volume(model: MelanomaModel) -> float:
    base_area = math.pi * model.radius**2
    if model.shape is Shape.CYLINDER:
        return base_area * model.depth
    return base_area * model.depth / 3.0


def _kind_coefficients(scaling_factor: float) -> tuple[np.ndarray, np.ndarray]:
    """Lookup arrays indexed by ``TissueKind`` value."""
    eps = np.empty(len(TissueKind))
    sigma = np.empty(len(TissueKind))
    eps[TissueKind.VACUUM] = VACUUM_PROPERTIES.eps_r
    sigma[TissueKind.VACUUM] = VACUUM_PROPERTIES.sigma
    for kind, props in TISSUE_TABLE.items():
        eps[kind] = props.eps_r / scaling_factor
        sigma[kind] = props.sigma / scaling_factor
    return eps, sigma


@dataclass(frozen=True)
class SkinPhantom:
    """Skin stack plus lesion inside the box ``(lo, hi)^3``.

    ``layer_bounds`` lists ``(kind, z_bottom, z_top)`` from the top down; the
    intervals must tile ``[lo, hi]``.  A ``tumor`` of ``None`` gives the bare
    skin stack.
    """

    tumor: MelanomaModel | None
    skin_surface_z: float = 8.0
    layer_bounds: tuple[tuple[TissueKind, float, float], ...] = (
        (TissueKind.IMMERSION, 8.0, 10.0),
        (TissueKind.EPIDERMIS, 7.0, 8.0),
        (TissueKind.DERMIS, 4.5, 7.0),
        (TissueKind.FAT, 0.0, 4.5),
    )
    tumor_axis_xy: tuple[float, float] = (5.0, 5.0)
    stage_thresholds: tuple[float, float] = (1.0, 3.5)
    scaling_factor: float = 5.0
    box: tuple[float, float] = (0.0, 10.0)

    def __post_init__(self):
        if self.scaling_factor <= 0:
            raise ValueError("scaling_factor must be positive")
        lo, hi = self.box
        bounds = sorted(self.layer_bounds, key=lambda b: b[1])
        if bounds[0][1] != lo or bounds[-1][2] != hi:
            raise ValueError("layers must cover the whole box height")
        for below, above in zip(bounds, bounds[1:]):
            if below[2] != above[1]:
                raise ValueError(f"layer gap or overlap at x3={below[2]} / {above[1]}")
        if self.stage_thresholds[0] > self.stage_thresholds[1]:
            raise ValueError("stage thresholds must be ordered")

    @classmethod
    def for_month(cls, month: int, **kwargs) -> "SkinPhantom":
        return cls(tumor=melanoma_model(month), **kwargs)

    def without_tumor(self) -> "SkinPhantom":
        return replace(self, tumor=None)

    @property
    def tumor_kind(self) -> TissueKind | None:
        """Stage of the lesion, decided from its depth alone."""
        if self.tumor is None:
            return None
        shallow, deep = self.stage_thresholds
        if self.tumor.depth < shallow:
            return TissueKind.TUMOR_STAGE1
        if self.tumor.depth <= deep:
            return TissueKind.TUMOR_STAGE2
        return TissueKind.TUMOR_STAGE3

    def in_tumor(self, points) -> np.ndarray:
        p = np.asarray(points, dtype=float)
        if self.tumor is None:
            return np.zeros(p.shape[:-1], dtype=bool)
        base = self.skin_surface_z
        apex = base - self.tumor.depth
        z = p[..., 2]
        r = np.hypot(p[..., 0] - self.tumor_axis_xy[0], p[..., 1] - self.tumor_axis_xy[1])
        in_slab = (z >= apex) & (z <= base)
        if self.tumor.shape is Shape.CYLINDER:
            allowed = self.tumor.radius
        else:
            allowed = self.tumor.radius * (z - apex) / (base - apex)
        return in_slab & (r <= allowed) & self.in_box(p)

    def in_box(self, points) -> np.ndarray:
        p = np.asarray(points, dtype=float)
        lo, hi = self.box
        return np.all((p >= lo) & (p <= hi), axis=-1)

    def classify(self, points) -> np.ndarray:
        """Vectorised tissue lookup; returns an int8 array of ``TissueKind`` values."""
        p = np.asarray(points, dtype=float)
        z = p[..., 2]
        kinds = np.full(p.shape[:-1], TissueKind.VACUUM, dtype=np.int8)
        inside = self.in_box(p)
        # layers are half-open [bottom, top) except the topmost, which is closed
        top = max(b[2] for b in self.layer_bounds)
        for kind, z0, z1 in self.layer_bounds:
            upper = (z <= z1) if z1 == top else (z < z1)
            kinds[inside & (z >= z0) & upper] = kind
        if self.tumor is not None:
            kinds[self.in_tumor(p)] = self.tumor_kind
        return kinds

    def tissue_at(self, point) -> TissueKind:
        return TissueKind(int(self.classify(np.asarray(point, dtype=float)[None, :])[0]))

    def coefficient_tables(self) -> tuple[np.ndarray, np.ndarray]:
        """``(eps, sigma)`` lookup arrays indexed by ``TissueKind``."""
        return _kind_coefficients(self.scaling_factor)

    def coefficients(self, points) -> tuple[np.ndarray, np.ndarray]:
        eps, sigma = self.coefficient_tables()
        kinds = self.classify(points)
        return eps[kinds], sigma[kinds]

    def coefficients_at(self, point) -> tuple[float, float]:
        eps, sigma = self.coefficient_tables()
        kind = self.tissue_at(point)
        return float(eps[kind]), float(sigma[kind])

    def to_config(self) -> dict:
        """Keys understood by the run-config reader."""
        return {
            "month": None if self.tumor is None else self.tumor.month,
            "scaling_factor": self.scaling_factor,
            "stage_thresholds": list(self.stage_thresholds),
        }

    @classmethod
    def from_config(cls, cfg: dict) -> "SkinPhantom":
        month = cfg.get("month")
        return cls(
            tumor=None if month is None else melanoma_model(month),
            scaling_factor=float(cfg.get("scaling_factor", 5.0)),
            stage_thresholds=tuple(float(v) for v in cfg.get("stage_thresholds", (1.0, 3.5))),
        )
