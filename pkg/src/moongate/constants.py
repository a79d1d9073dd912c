"""Physical constants and model parameters.

Gravitational parameters and body radii follow the DE430-compatible values
used throughout the toolkit; canonical units are derived from them, never
hard-coded elsewhere.
"""

import math

# Gravitational parameters [km^3/s^2]
MU_SUN_KM3_S2 = 132712440041.279
MU_EARTH_KM3_S2 = 398600.436
MU_MOON_KM3_S2 = 4902.800

# Mean equatorial radii [km]
R_EARTH_KM = 6378.136
R_MOON_KM = 1737.400

# Obliquity of the ecliptic, used as the fixed ECI <-> MCI tilt [rad]
ECLIPTIC_OBLIQUITY_RAD = math.radians(23.4)

# Radius of the sphere where the dominant attractor switches between the
# Moon and the Earth [km]
SWITCH_RADIUS_KM = 320000.0

# Propulsion defaults: maximum thrust acceleration at full tank and
# effective exhaust velocity [km/s^2], [km/s]
UT_MAX_KM_S2 = 4.903e-7
EXHAUST_VELOCITY_KM_S = 30.0

# Seconds between J2000 (2000-01-01 12:00:00 TT) and the Unix epoch
J2000_UNIX_S = 946727935.816

# TT - TAI offset [s]
TT_MINUS_TAI_S = 32.184

AU_KM = 149597870.7

SECONDS_PER_DAY = 86400.0

# Mean-element lunar orbit (geocentric, ecliptic axes, J2000 epoch).
# Angles in degrees, rates in degrees per day; the mean motion is derived
# from mu so the model velocity is the exact time derivative of position.
MOON_KEPLER = {
    "a_km": 384400.0,
    "e": 0.055545526,
    "i_deg": 5.15668983,
    "raan_deg": 125.0445479,
    "raan_rate_deg_day": -0.05295376,
    "peri_lon_deg": 83.3532465,
    "peri_lon_rate_deg_day": 0.11140353,
    "mean_anomaly_deg": 134.9633964,
}

# Mean-element solar orbit (geocentric, ecliptic axes, J2000 epoch).
SUN_KEPLER = {
    "a_km": 1.00000011 * AU_KM,
    "e": 0.01671022,
    "i_deg": 0.0,
    "raan_deg": 0.0,
    "raan_rate_deg_day": 0.0,
    "peri_lon_deg": 102.94719 + 180.0,
    "peri_lon_rate_deg_day": 0.00000885,
    "mean_anomaly_deg": 357.5291092,
}

# Gateway reference orbit: osculating classical elements about the Moon in
# ecliptic-aligned MCI axes at the anchor epoch below.
GATEWAY_COE_MCI = {
    "a_km": 3.916e4,
    "e": 0.923,
    "i_deg": 98.53,
    "raan_deg": -60.75,
    "argp_deg": 84.05,
    "ta_deg": 168.22,
}
GATEWAY_ANCHOR_UTC = "2025-05-25T16:51:30"

# Departure-epoch search window for Gateway-anchored transfers.
GATEWAY_WINDOW_UTC = ("2025-05-23T22:35:00", "2025-05-30T05:38:00")

# Destination orbits (arrival arc's axes: MCI for the lunar one, ECI for
# the terrestrial one) and transfer-duration search windows.
LLO_TARGET = {"p_km": 1837.4, "e": 0.0, "i_deg": 90.0}
LLO_TOF_WINDOW_DAYS = (25.0, 45.0)
LEO_TARGET = {"p_km": 6841.136, "e": 0.0, "i_deg": 51.6}
LEO_TOF_WINDOW_DAYS = (100.0, 170.0)
