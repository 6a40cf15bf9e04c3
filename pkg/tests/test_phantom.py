import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from melanoma_fem.errors import UnknownMonth
from melanoma_fem.phantom import (
    MONTHS,
    TISSUE_TABLE,
    Shape,
    SkinPhantom,
    TissueKind,
    analytic_tumor_volume,
    melanoma_model,
)

GROWTH_ROWS = [
    (0, Shape.CYLINDER, 6.00, 0.15),
    (2, Shape.CONE, 6.09, 0.34),
    (4, Shape.CONE, 6.19, 0.71),
    (6, Shape.CONE, 6.28, 1.08),
    (8, Shape.CONE, 6.36, 1.46),
    (10, Shape.CONE, 6.45, 1.83),
    (12, Shape.CONE, 6.54, 2.20),
    (14, Shape.CONE, 6.62, 2.57),
    (16, Shape.CONE, 6.71, 2.95),
    (18, Shape.CONE, 6.79, 3.32),
    (20, Shape.CONE, 6.87, 3.69),
    (22, Shape.CONE, 6.96, 4.06),
]

TISSUE_ROWS = [
    (TissueKind.IMMERSION, 32, 4, "2"),
    (TissueKind.EPIDERMIS, 35, 4, "1"),
    (TissueKind.DERMIS, 40, 9, "3.5"),
    (TissueKind.FAT, 9, 1, "5.5"),
    (TissueKind.TUMOR_STAGE1, 45, 5, "< 1"),
    (TissueKind.TUMOR_STAGE2, 50, 5, "> 1"),
    (TissueKind.TUMOR_STAGE3, 60, 6, "> 1"),
]


class TestMelanomaModel:
    @pytest.mark.parametrize("month,shape,diameter,depth", GROWTH_ROWS)
    def test_rows(self, month, shape, diameter, depth):
        m = melanoma_model(month)
        assert (m.month, m.shape, m.diameter, m.depth) == (month, shape, diameter, depth)

    @pytest.mark.parametrize("month", [7, -2, 24, 1])
    def test_untabulated_month(self, month):
        with pytest.raises(UnknownMonth):
            melanoma_model(month)

    def test_growth_is_monotone(self):
        models = [melanoma_model(m) for m in MONTHS]
        assert all(a.diameter < b.diameter and a.depth < b.depth for a, b in zip(models, models[1:]))


class TestTissueTable:
    @pytest.mark.parametrize("kind,eps_r,sigma,depth", TISSUE_ROWS)
    def test_rows(self, kind, eps_r, sigma, depth):
        p = TISSUE_TABLE[kind]
        assert (p.eps_r, p.sigma, p.table_depth) == (eps_r, sigma, depth)

    def test_scaled_coefficients(self):
        ph = SkinPhantom.for_month(22)
        assert ph.coefficients_at((5, 5, 9)) == pytest.approx((6.4, 0.8), abs=1e-15)
        assert ph.coefficients_at((0.1, 0.1, 0.1)) == pytest.approx((1.8, 0.2), abs=1e-15)
        assert ph.coefficients_at((5, 5, 11)) == (1.0, 0.0)


class TestClassification:
    def test_examples(self):
        ph = SkinPhantom.for_month(22)
        assert ph.tissue_at((5, 5, 9)) is TissueKind.IMMERSION
        assert ph.tissue_at((5, 5, 8 - 4.06 + 1e-6)) is TissueKind.TUMOR_STAGE3
        assert ph.tissue_at((5, 5, 8 - 4.06 - 1e-6)) is TissueKind.FAT
        assert ph.tissue_at((0.1, 0.1, 0.1)) is TissueKind.FAT
        assert ph.tissue_at((5, 5, 11)) is TissueKind.VACUUM

    @pytest.mark.parametrize("month,kind", [
        (0, TissueKind.TUMOR_STAGE1), (4, TissueKind.TUMOR_STAGE1),
        (6, TissueKind.TUMOR_STAGE2), (18, TissueKind.TUMOR_STAGE2),
        (20, TissueKind.TUMOR_STAGE3), (22, TissueKind.TUMOR_STAGE3),
    ])
    def test_stage_from_depth(self, month, kind):
        assert SkinPhantom.for_month(month).tumor_kind is kind

    def test_cone_rim(self):
        ph = SkinPhantom.for_month(22)
        r = 3.48
        # halfway down the cone the allowed radius is half the base radius
        z = 8 - 4.06 / 2
        assert ph.tissue_at((5 + 0.49 * r, 5, z)) is TissueKind.TUMOR_STAGE3
        assert ph.tissue_at((5 + 0.51 * r, 5, z)) is TissueKind.DERMIS

    def test_layers_partition_box(self, rng):
        # binomial oracle on the bare skin stack: slab fractions of the unit height
        ph = SkinPhantom.for_month(22).without_tumor()
        n = 100_000
        kinds = ph.classify(rng.random((n, 3)) * 10)
        assert np.all(kinds != TissueKind.VACUUM)
        for kind, frac in [(TissueKind.IMMERSION, 0.2), (TissueKind.EPIDERMIS, 0.1),
                           (TissueKind.DERMIS, 0.25), (TissueKind.FAT, 0.45)]:
            got = np.mean(kinds == kind)
            assert abs(got - frac) < 3 * math.sqrt(frac * (1 - frac) / n)

    @settings(max_examples=200, deadline=None)
    @given(st.tuples(*[st.floats(-5, 15, allow_nan=False)] * 3), st.sampled_from(MONTHS))
    def test_total_and_consistent(self, p, month):
        ph = SkinPhantom.for_month(month)
        kind = ph.tissue_at(p)
        inside = all(0 <= c <= 10 for c in p)
        assert (kind is TissueKind.VACUUM) == (not inside)
        eps, sigma = ph.coefficients_at(p)
        assert eps >= 1.0 / 5.0 and sigma >= 0.0


class TestTumorVolume:
    def test_closed_forms(self):
        assert analytic_tumor_volume(melanoma_model(0)) == pytest.approx(4.2412, abs=1e-4)
        assert analytic_tumor_volume(melanoma_model(22)) == pytest.approx(51.49, abs=5e-3)

    def test_monte_carlo(self, rng):
        ph = SkinPhantom.for_month(22)
        r, d = 3.48, 4.06
        lo = np.array([5 - r, 5 - r, 8 - d])
        hi = np.array([5 + r, 5 + r, 8.0])
        n = 1_000_000
        frac = ph.in_tumor(lo + (hi - lo) * rng.random((n, 3))).mean()
        box = np.prod(hi - lo)
        sigma = box * math.sqrt(frac * (1 - frac) / n)
        assert abs(frac * box - analytic_tumor_volume(ph.tumor)) < 4 * sigma

    def test_flat_limit(self):
        from melanoma_fem.phantom import MelanomaModel
        assert analytic_tumor_volume(MelanomaModel(0, Shape.CONE, 6.0, 0.0)) == 0.0


class TestConfigRoundTrip:
    def test_to_from_config(self):
        ph = SkinPhantom.for_month(12, scaling_factor=4.0, stage_thresholds=(0.5, 3.0))
        back = SkinPhantom.from_config(ph.to_config())
        assert back == ph

    def test_rejects_bad_layers(self):
        with pytest.raises(ValueError):
            SkinPhantom(tumor=None, layer_bounds=((TissueKind.FAT, 0.0, 4.0), (TissueKind.DERMIS, 4.5, 10.0)))
