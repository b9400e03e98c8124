"""Inverse-TTC baseline vector."""

import numpy as np
import pytest

from dspr.scene import nearest_objects
from dspr.ttc import TtcVector, inverse_ttc_vector

from conftest import frame, pedestrian, random_frame, state, vehicle


class TestInverseTtc:
    def test_closing_pair(self):
        f = frame(objects=[vehicle("o", 20, 0, vx=-5.0)])
        vec = inverse_ttc_vector(f)
        assert vec.values[0] == pytest.approx(0.25)

    def test_receding_is_zero(self):
        f = frame(objects=[vehicle("o", 20, 0, vx=5.0)])
        assert inverse_ttc_vector(f).values[0] == 0.0

    def test_cap(self):
        f = frame(objects=[vehicle("o", 0.1, 0, vx=-100.0)])
        assert inverse_ttc_vector(f, cap=10.0).values[0] == 10.0

    def test_scale_in_closing_rate(self):
        f1 = frame(objects=[vehicle("o", 40, 0, vx=-4.0)])
        f2 = frame(objects=[vehicle("o", 40, 0, vx=-8.0)])
        v1 = inverse_ttc_vector(f1).values[0]
        v2 = inverse_ttc_vector(f2).values[0]
        assert v2 == pytest.approx(2 * v1)

    def test_slotting_matches_risk_vector_layout(self, rng):
        for _ in range(20):
            f = random_frame(rng)
            slots = nearest_objects(f)
            vec = inverse_ttc_vector(f)
            assert vec.values.shape == (40,)
            for i, obj in enumerate(slots):
                if obj is None:
                    assert vec.values[i] == 0.0

    def test_pedestrian_slot(self):
        f = frame(ego=state(vx=5.0), objects=[pedestrian("p", 10, 0)])
        vec = inverse_ttc_vector(f)
        assert vec.values[30] == pytest.approx(0.5)

    def test_vector_validation(self):
        with pytest.raises(ValueError):
            TtcVector(np.ones(39))
        with pytest.raises(ValueError):
            TtcVector(np.full(40, -1.0))
