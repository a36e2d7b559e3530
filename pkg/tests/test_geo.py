from __future__ import annotations

import math

import pytest
from hypothesis import given, strategies as st

from soctriage.geo import GAZETTEER, KM_PER_MILE, GeoPoint, haversine_miles, resolve_city

from oracles import slc_miles

LONDON = GeoPoint(51.5074, -0.1278)
NEW_YORK = GeoPoint(40.7128, -74.0060)


def test_london_new_york():
    d = haversine_miles(LONDON, NEW_YORK)
    oracle = slc_miles(51.5074, -0.1278, 40.7128, -74.0060)
    assert d == pytest.approx(oracle, rel=1e-9)
    assert d == pytest.approx(3461, rel=0.01)
    assert 5520 <= d * KM_PER_MILE <= 5630


def test_identity():
    assert haversine_miles(LONDON, LONDON) == 0


def test_point_validation():
    with pytest.raises(ValueError):
        GeoPoint(91, 0)
    with pytest.raises(ValueError):
        GeoPoint(0, -180.5)


def test_gazetteer_lookup():
    assert resolve_city("new york").label == "NYC"
    assert resolve_city("London").label == "London"
    assert resolve_city("Atlantis") is None
    assert resolve_city(None) is None


lat = st.floats(-89.0, 89.0)
lon = st.floats(-180.0, 180.0)


@given(lat, lon, lat, lon)
def test_symmetry_and_oracle(a1, o1, a2, o2):
    a, b = GeoPoint(a1, o1), GeoPoint(a2, o2)
    d = haversine_miles(a, b)
    assert d == pytest.approx(haversine_miles(b, a), abs=1e-9)
    assert 0 <= d <= math.pi * 3958.8 + 1e-6
    # law of cosines loses precision for tiny separations
    assert d == pytest.approx(slc_miles(a1, o1, a2, o2), rel=1e-6, abs=0.05)


def test_gazetteer_points_are_valid():
    assert len(GAZETTEER) >= 20
    for key, city in GAZETTEER.items():
        assert key == city.name.lower()
