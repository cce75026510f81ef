"""Physical constants (SI units)."""

SPEED_OF_LIGHT = 299_792_458.0  # m/s
PLANCK = 6.62607015e-34  # J s
EARTH_RADIUS = 6_371_000.0  # m, mean spherical radius
EARTH_MU = 3.986004418e14  # m^3/s^2
EARTH_ROTATION_RATE = 7.2921150e-5  # rad/s, sidereal
GEO_ALTITUDE = 35_786_000.0  # m above mean radius
