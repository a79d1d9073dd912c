"""Minimum-time low-thrust transfer design between the lunar Gateway orbit,
low lunar orbits, and low Earth orbits, in a Sun-Earth-Moon point-mass
ephemeris model.
"""

__version__ = "0.1.0"
