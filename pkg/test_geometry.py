import math
import os
import sys

sys.path.append(os.path.join(os.path.dirname(__file__), "src"))

import numpy as np
import pytest
from pydantic import ValidationError

from core.exceptions import ConfigurationError, UnreducedTupleError
from schemas.configuration import (
    INFINITY,
    CenterConfiguration,
    ConfigurationFile,
    ExtendedComplex,
    StrengthTuple,
)
from services import geometry_service, tetra_service


def test_extended_complex_wire_forms():
    assert ExtendedComplex.model_validate("inf").infinite
    assert ExtendedComplex.model_validate({"re": 1.0, "im": -2.0}).value == complex(1, -2)
    assert ExtendedComplex.model_validate(3).value == 3.0
    assert ExtendedComplex.of(float("inf")) == INFINITY
    assert INFINITY.model_dump() == "inf"
    assert ExtendedComplex.of(1 - 2j).model_dump() == {"re": 1.0, "im": -2.0}


def test_infinity_has_no_value():
    with pytest.raises(UnreducedTupleError):
        INFINITY.value


def test_coinciding_centers_are_rejected():
    with pytest.raises(ValidationError):
        CenterConfiguration(points=((0.0, 0.0, 0.0), (0.0, 0.0, 0.0)))


def test_configuration_file_length_mismatch():
    with pytest.raises(ValidationError):
        ConfigurationFile.model_validate({"centers": [[0, 0, 0]], "alpha": [1, 2]})


def test_tuple_classes():
    real = StrengthTuple.from_values([0.1, "inf", -0.3])
    assert real.is_real and real.feasible_class == "real"
    assert real.infinity_pattern == (1,)
    dissipative = StrengthTuple.from_values([0.1 - 0.2j, 0.0])
    assert dissipative.feasible_class == "dissipative"
    general = StrengthTuple.from_values([0.1 + 0.2j])
    assert general.feasible_class == "general"
    with pytest.raises(UnreducedTupleError):
        real.values()


def test_reduce_keeps_order():
    config = CenterConfiguration(points=((0, 0, 0), (1, 0, 0), (0, 2, 0)))
    alpha = StrengthTuple.from_values([0.5, "inf", -1.0])
    reduced, sub = geometry_service.reduce(alpha, config)
    assert reduced.n == 2
    np.testing.assert_allclose(reduced.values(), [0.5, -1.0])
    assert sub.points == ((0, 0, 0), (0, 2, 0))


def test_reduce_rejects_length_mismatch():
    config = CenterConfiguration(points=((0, 0, 0), (1, 0, 0)))
    with pytest.raises(ConfigurationError):
        geometry_service.reduce(StrengthTuple.from_values([1.0]), config)


def test_chordal_distance_properties():
    rng = np.random.default_rng(7)
    values = [ExtendedComplex.of(complex(*rng.normal(size=2) * 3)) for _ in range(20)] + [INFINITY]
    for a in values:
        assert geometry_service.chordal_distance(a, a) == pytest.approx(0.0, abs=1e-15)
        for b in values:
            d_ab = geometry_service.chordal_distance(a, b)
            assert d_ab == pytest.approx(geometry_service.chordal_distance(b, a))
            assert d_ab <= 2.0 + 1e-15
            for c in values[:5]:
                assert d_ab <= geometry_service.chordal_distance(a, c) + geometry_service.chordal_distance(c, b) + 1e-12
    assert geometry_service.chordal_distance(ExtendedComplex.of(0.0), INFINITY) == pytest.approx(2.0)


def test_tuple_distance():
    a = StrengthTuple.from_values([0.0, "inf"])
    b = StrengthTuple.from_values([0.0, 1e12])
    assert geometry_service.tuple_distance(a, b) < 1e-11


def test_tetra_unachievable_candidates():
    config = tetra_service.tetra_vertices(math.pi)
    assert geometry_service.is_equidistant(config)
    np.testing.assert_allclose(geometry_service.unachievable_frequency_candidates(config, 2.5), [1.0, 2.0])


def test_generic_configuration_has_no_candidates():
    config = CenterConfiguration(points=((0, 0, 0), (1, 0, 0), (0, math.sqrt(2), 0)))
    assert not geometry_service.is_equidistant(config)
    assert geometry_service.unachievable_frequency_candidates(config, 10.0) == []


def test_diameter():
    config = CenterConfiguration(points=((0, 0, 0), (3, 0, 0), (0, 4, 0)))
    assert geometry_service.diameter(config) == pytest.approx(5.0)
    assert geometry_service.diameter(CenterConfiguration(points=((1, 2, 3),))) == 0.0
    assert geometry_service.diameter(tetra_service.tetra_vertices(2.0)) == pytest.approx(2.0)
