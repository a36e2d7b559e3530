"""Great-circle distance and a small city gazetteer for login geolocation."""

from __future__ import annotations

import math
from dataclasses import dataclass

EARTH_RADIUS_MI = 3958.8
KM_PER_MILE = 1.609344


@dataclass(frozen=True)
class GeoPoint:
    latitude: float
    longitude: float

    def __post_init__(self):
        if not (-90.0 <= self.latitude <= 90.0) or not (-180.0 <= self.longitude <= 180.0):
            raise ValueError(f"coordinates out of range: {self.latitude}, {self.longitude}")


def haversine_miles(a: GeoPoint, b: GeoPoint) -> float:
    lat1, lon1, lat2, lon2 = map(math.radians, (a.latitude, a.longitude, b.latitude, b.longitude))
    h = math.sin((lat2 - lat1) / 2) ** 2 + \
        math.cos(lat1) * math.cos(lat2) * math.sin((lon2 - lon1) / 2) ** 2
    return 2 * EARTH_RADIUS_MI * math.asin(min(1.0, math.sqrt(h)))


@dataclass(frozen=True)
class City:
    name: str
    point: GeoPoint
    short: str = ""

    @property
    def label(self) -> str:
        return self.short or self.name


def _city(name, lat, lon, short=""):
    return City(name, GeoPoint(lat, lon), short)


GAZETTEER: dict[str, City] = {c.name.lower(): c for c in (
    _city("London", 51.5074, -0.1278),
    _city("New York", 40.7128, -74.0060, "NYC"),
    _city("Los Angeles", 34.0522, -118.2437, "LA"),
    _city("San Francisco", 37.7749, -122.4194, "SF"),
    _city("Chicago", 41.8781, -87.6298),
    _city("Boston", 42.3601, -71.0589),
    _city("Seattle", 47.6062, -122.3321),
    _city("Dallas", 32.7767, -96.7970),
    _city("Miami", 25.7617, -80.1918),
    _city("Toronto", 43.6532, -79.3832),
    _city("Paris", 48.8566, 2.3522),
    _city("Berlin", 52.5200, 13.4050),
    _city("Amsterdam", 52.3676, 4.9041),
    _city("Dublin", 53.3498, -6.2603),
    _city("Madrid", 40.4168, -3.7038),
    _city("Manchester", 53.4808, -2.2426),
    _city("Birmingham", 52.4862, -1.8904),
    _city("Moscow", 55.7558, 37.6173),
    _city("Lagos", 6.5244, 3.3792),
    _city("Mumbai", 19.0760, 72.8777),
    _city("Singapore", 1.3521, 103.8198),
    _city("Tokyo", 35.6762, 139.6503),
    _city("Sydney", -33.8688, 151.2093),
    _city("Sao Paulo", -23.5505, -46.6333),
    _city("Newark", 40.7357, -74.1724),
    _city("Brooklyn", 40.6782, -73.9442),
)}


def resolve_city(name: str | None) -> City | None:
    if not name:
        return None
    return GAZETTEER.get(name.strip().lower())
