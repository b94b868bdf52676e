"""Physical constants used across the simulator (SI units)."""

import math

MU_EARTH = 3.986004418e14        # m^3/s^2, Earth gravitational parameter
R_EARTH = 6378.137e3             # m, WGS-84 equatorial radius
J2_EARTH = 1.08263e-3            # Earth oblateness coefficient
OMEGA_EARTH = 7.2921159e-5       # rad/s, Earth rotation rate

P_SRP = 4.56e-6                  # N/m^2, solar radiation pressure at 1 AU
AU = 1.495978707e11              # m
MU_SUN = 1.32712440018e20        # m^3/s^2
MU_MOON = 4.9048695e12           # m^3/s^2
MOON_DIST = 3.844e8              # m, mean Earth-Moon distance
MOON_PERIOD = 27.321661 * 86400.0  # s, sidereal month

YEAR_SECONDS = 365.25 * 86400.0  # s, Julian year
OBLIQUITY = math.radians(23.439)   # rad, obliquity of the ecliptic
B0_EQUATOR = 3.12e-5             # T, mean equatorial field strength at R_EARTH
DIPOLE_TILT = math.radians(11.5)   # rad, geomagnetic dipole tilt
