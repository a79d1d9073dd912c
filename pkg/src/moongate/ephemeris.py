"""Sun, Moon, and Gateway state services.

Two providers are available. The analytic provider evaluates mean-element
Kepler orbits for the Moon and the Sun and needs no data files. The bundled
provider interpolates packaged state tables (a numerically generated lunar
ephemeris and a Gateway orbit table) and falls back to the analytic Sun;
it is the one scenario solves use, because the transfer model requires the
lunar motion to be dynamically consistent with the point-mass force model.

Every query is answered in one of two inertial axes sets: equatorial ECI
or ecliptic MCI. States are kilometers and kilometers per second.
"""

from __future__ import annotations

import importlib.resources
import io
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import constants
from .epochs import seconds_past_j2000_to_utc
from .errors import EphemerisRangeError, TableFormatError
from .frames import BodyId, FrameTag, eci_to_mci_matrix
from .mee import MeeState, cartesian_to_mee

TABLE_HEADER = "epoch_s,x_km,y_km,z_km,vx_kms,vy_kms,vz_kms"

_SECONDS_PER_DAY = constants.SECONDS_PER_DAY


def solve_kepler(mean_anomaly_rad: float, e: float) -> float:
    """Eccentric anomaly from mean anomaly, Newton iteration."""
    m = math.remainder(mean_anomaly_rad, 2.0 * math.pi)
    ecc_anom = m + e * math.sin(m)
    for _ in range(30):
        f = ecc_anom - e * math.sin(ecc_anom) - m
        delta = f / (1.0 - e * math.cos(ecc_anom))
        ecc_anom -= delta
        if abs(delta) < 1e-14:
            break
    return ecc_anom


@dataclass(frozen=True)
class CartesianState:
    """Inertial state of a body relative to a center, tagged with its axes."""

    r_km: np.ndarray
    v_kms: np.ndarray
    frame: FrameTag
    center: BodyId
    epoch_s: float


@dataclass(frozen=True)
class KeplerOrbit:
    """Precessing two-body orbit in ecliptic axes.

    The node and the longitude of periapsis drift linearly; the mean motion
    comes from mu and a, which keeps the returned velocity equal to the exact
    time derivative of the returned position.
    """

    mu_km3_s2: float
    a_km: float
    e: float
    i_rad: float
    raan0_rad: float
    raan_rate_rad_s: float
    peri_lon0_rad: float
    peri_lon_rate_rad_s: float
    m0_rad: float

    @classmethod
    def from_mean_elements(cls, mu_km3_s2: float, table: dict) -> "KeplerOrbit":
        rad = math.radians
        per_day = 1.0 / _SECONDS_PER_DAY
        return cls(
            mu_km3_s2=mu_km3_s2,
            a_km=table["a_km"],
            e=table["e"],
            i_rad=rad(table["i_deg"]),
            raan0_rad=rad(table["raan_deg"]),
            raan_rate_rad_s=rad(table["raan_rate_deg_day"]) * per_day,
            peri_lon0_rad=rad(table["peri_lon_deg"]),
            peri_lon_rate_rad_s=rad(table["peri_lon_rate_deg_day"]) * per_day,
            m0_rad=rad(table["mean_anomaly_deg"]),
        )

    @property
    def mean_motion_rad_s(self) -> float:
        return math.sqrt(self.mu_km3_s2 / self.a_km**3)

    def state_ecliptic(self, epoch_s: float) -> tuple[np.ndarray, np.ndarray]:
        """Position [km] and velocity [km/s] in ecliptic axes."""
        raan = self.raan0_rad + self.raan_rate_rad_s * epoch_s
        peri_lon = self.peri_lon0_rad + self.peri_lon_rate_rad_s * epoch_s
        argp = peri_lon - raan
        argp_rate = self.peri_lon_rate_rad_s - self.raan_rate_rad_s
        mean_anom = self.m0_rad + self.mean_motion_rad_s * epoch_s
        ecc_anom = solve_kepler(mean_anom, self.e)
        ce, se = math.cos(ecc_anom), math.sin(ecc_anom)
        b = self.a_km * math.sqrt(1.0 - self.e**2)
        r_pf = np.array([self.a_km * (ce - self.e), b * se, 0.0])
        r_norm = self.a_km * (1.0 - self.e * ce)
        edot = self.mean_motion_rad_s * self.a_km / r_norm
        v_pf = np.array([-self.a_km * edot * se, b * edot * ce, 0.0])

        def z_cross(w: np.ndarray) -> np.ndarray:
            return np.array([-w[1], w[0], 0.0])

        # Rotate out of the perifocal frame, adding the secular drift terms
        # so that v stays the exact derivative of r.
        ca, sa = math.cos(argp), math.sin(argp)
        rot_argp = np.array([[ca, -sa, 0.0], [sa, ca, 0.0], [0.0, 0.0, 1.0]])
        r1 = rot_argp @ r_pf
        v1 = rot_argp @ v_pf + argp_rate * z_cross(r1)
        ci, si = math.cos(self.i_rad), math.sin(self.i_rad)
        rot_inc = np.array([[1.0, 0.0, 0.0], [0.0, ci, -si], [0.0, si, ci]])
        r2 = rot_inc @ r1
        v2 = rot_inc @ v1
        cr, sr = math.cos(raan), math.sin(raan)
        rot_raan = np.array([[cr, -sr, 0.0], [sr, cr, 0.0], [0.0, 0.0, 1.0]])
        r3 = rot_raan @ r2
        v3 = rot_raan @ v2 + self.raan_rate_rad_s * z_cross(r3)
        return r3, v3


class StateTable:
    """Time-ordered Cartesian states with C1 cubic-Hermite interpolation."""

    def __init__(
        self,
        epochs_s: np.ndarray,
        pos_km: np.ndarray,
        vel_kms: np.ndarray,
        frame: FrameTag,
        center: BodyId,
    ) -> None:
        epochs_s = np.ascontiguousarray(epochs_s, dtype=float)
        pos_km = np.ascontiguousarray(pos_km, dtype=float)
        vel_kms = np.ascontiguousarray(vel_kms, dtype=float)
        if epochs_s.ndim != 1 or len(epochs_s) < 2:
            raise TableFormatError("a state table needs at least two rows")
        if np.any(np.diff(epochs_s) <= 0.0):
            raise TableFormatError("table epochs must increase strictly")
        if pos_km.shape != (len(epochs_s), 3) or vel_kms.shape != pos_km.shape:
            raise TableFormatError("table arrays must be (n,) and (n, 3)")
        self.epochs_s = epochs_s
        self.pos_km = pos_km
        self.vel_kms = vel_kms
        self.frame = frame
        self.center = center

    @property
    def span_s(self) -> tuple[float, float]:
        return float(self.epochs_s[0]), float(self.epochs_s[-1])

    @classmethod
    def from_csv_text(cls, text: str) -> "StateTable":
        """Parse the documented CSV schema; errors carry the line number."""
        frame = None
        center = None
        header_seen = False
        rows = []
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                for token in line[1:].replace(",", " ").split():
                    if "=" in token:
                        key, _, value = token.partition("=")
                        if key.strip() == "frame":
                            frame = value.strip().lower()
                        elif key.strip() == "center":
                            center = value.strip().lower()
                continue
            if not header_seen:
                if line != TABLE_HEADER:
                    raise TableFormatError(
                        f"line {lineno}: header must be '{TABLE_HEADER}'"
                    )
                header_seen = True
                continue
            parts = line.split(",")
            if len(parts) != 7:
                raise TableFormatError(
                    f"line {lineno}: expected 7 fields, got {len(parts)}"
                )
            try:
                rows.append([float(x) for x in parts])
            except ValueError as exc:
                raise TableFormatError(f"line {lineno}: {exc}") from exc
        if not header_seen:
            raise TableFormatError("missing header line")
        if frame is None or center is None:
            raise TableFormatError("missing '# frame=... center=...' comment")
        try:
            frame_tag = FrameTag(frame)
            center_id = BodyId(center)
        except ValueError as exc:
            raise TableFormatError(str(exc)) from exc
        data = np.array(rows)
        if len(data) < 2:
            raise TableFormatError("a state table needs at least two rows")
        return cls(data[:, 0], data[:, 1:4], data[:, 4:7], frame_tag, center_id)

    @classmethod
    def from_path(cls, path: str | Path) -> "StateTable":
        return cls.from_csv_text(Path(path).read_text())

    def to_csv_text(self) -> str:
        out = io.StringIO()
        out.write(f"# frame={self.frame.value.upper()} center={self.center.value.upper()}\n")
        out.write(TABLE_HEADER + "\n")
        for t, p, v in zip(self.epochs_s, self.pos_km, self.vel_kms):
            out.write(
                f"{t:.3f},{p[0]:.9e},{p[1]:.9e},{p[2]:.9e},"
                f"{v[0]:.12e},{v[1]:.12e},{v[2]:.12e}\n"
            )
        return out.getvalue()

    def state(self, epoch_s: float) -> tuple[np.ndarray, np.ndarray]:
        """Interpolated (position, velocity); exact at the stored nodes."""
        t0, t1 = self.span_s
        if not t0 <= epoch_s <= t1:
            raise EphemerisRangeError(
                f"epoch {epoch_s:.3f} ({seconds_past_j2000_to_utc(epoch_s)}) "
                f"outside table span [{t0:.3f}, {t1:.3f}]"
            )
        idx = int(np.searchsorted(self.epochs_s, epoch_s, side="right") - 1)
        idx = min(max(idx, 0), len(self.epochs_s) - 2)
        h = self.epochs_s[idx + 1] - self.epochs_s[idx]
        theta = (epoch_s - self.epochs_s[idx]) / h
        t2 = theta * theta
        t3 = t2 * theta
        h00 = 2.0 * t3 - 3.0 * t2 + 1.0
        h10 = t3 - 2.0 * t2 + theta
        h01 = -2.0 * t3 + 3.0 * t2
        h11 = t3 - t2
        p0, p1 = self.pos_km[idx], self.pos_km[idx + 1]
        v0, v1 = self.vel_kms[idx], self.vel_kms[idx + 1]
        pos = h00 * p0 + h10 * h * v0 + h01 * p1 + h11 * h * v1
        d00 = (6.0 * t2 - 6.0 * theta) / h
        d10 = 3.0 * t2 - 4.0 * theta + 1.0
        d01 = (-6.0 * t2 + 6.0 * theta) / h
        d11 = 3.0 * t2 - 2.0 * theta
        vel = d00 * p0 + d10 * v0 + d01 * p1 + d11 * v1
        return pos, vel


def _analytic_moon() -> KeplerOrbit:
    return KeplerOrbit.from_mean_elements(
        constants.MU_EARTH_KM3_S2 + constants.MU_MOON_KM3_S2,
        constants.MOON_KEPLER,
    )


def _analytic_sun() -> KeplerOrbit:
    return KeplerOrbit.from_mean_elements(
        constants.MU_SUN_KM3_S2 + constants.MU_EARTH_KM3_S2,
        constants.SUN_KEPLER,
    )


class Ephemeris:
    """Answers body-state queries from Moon/Sun/Gateway sources.

    Sources produce geocentric states: the Moon either from a table (ECI
    axes) or the analytic orbit, the Sun from the analytic orbit unless a
    table is supplied. The Gateway source, when present, is Moon-centered.
    """

    def __init__(
        self,
        moon_table: StateTable | None = None,
        sun_table: StateTable | None = None,
        gateway_table: StateTable | None = None,
    ) -> None:
        if moon_table is not None and (
            moon_table.frame is not FrameTag.ECI
            or moon_table.center is not BodyId.EARTH
        ):
            raise TableFormatError("moon table must be ECI, Earth-centered")
        if gateway_table is not None and (
            gateway_table.frame is not FrameTag.MCI
            or gateway_table.center is not BodyId.MOON
        ):
            raise TableFormatError("gateway table must be MCI, Moon-centered")
        self.moon_table = moon_table
        self.sun_table = sun_table
        self.gateway_table = gateway_table
        self._moon_kepler = _analytic_moon()
        self._sun_kepler = _analytic_sun()
        self._tilt = eci_to_mci_matrix()

    def moon_from_earth_eci(self, epoch_s: float) -> tuple[np.ndarray, np.ndarray]:
        if self.moon_table is not None:
            return self.moon_table.state(epoch_s)
        r_ecl, v_ecl = self._moon_kepler.state_ecliptic(epoch_s)
        return self._tilt.T @ r_ecl, self._tilt.T @ v_ecl

    def sun_from_earth_eci(self, epoch_s: float) -> tuple[np.ndarray, np.ndarray]:
        if self.sun_table is not None:
            return self.sun_table.state(epoch_s)
        r_ecl, v_ecl = self._sun_kepler.state_ecliptic(epoch_s)
        return self._tilt.T @ r_ecl, self._tilt.T @ v_ecl

    def gateway_from_moon_mci(self, epoch_s: float) -> tuple[np.ndarray, np.ndarray]:
        if self.gateway_table is None:
            raise EphemerisRangeError("no Gateway table loaded")
        return self.gateway_table.state(epoch_s)

    def body_state(
        self,
        body: BodyId,
        epoch_s: float,
        center: BodyId,
        frame: FrameTag,
    ) -> CartesianState:
        """State of `body` relative to `center` expressed in `frame` axes.

        Deterministic: repeated identical queries return identical numbers.

        Raises:
            EphemerisRangeError: epoch outside a backing table span, or the
                requested body has no source.
            ValueError: unsupported body/center/frame combination.
        """
        if frame not in (FrameTag.ECI, FrameTag.MCI):
            raise ValueError(f"body_state serves ECI or MCI axes, not {frame}")
        r, v = self._relative_eci(body, center, epoch_s)
        if frame is FrameTag.MCI:
            r = self._tilt @ r
            v = self._tilt @ v
        return CartesianState(r, v, frame, center, epoch_s)

    def _geocentric_eci(self, body: BodyId, epoch_s: float):
        if body is BodyId.EARTH:
            return np.zeros(3), np.zeros(3)
        if body is BodyId.MOON:
            return self.moon_from_earth_eci(epoch_s)
        if body is BodyId.SUN:
            return self.sun_from_earth_eci(epoch_s)
        if body is BodyId.GATEWAY:
            r_gw_mci, v_gw_mci = self.gateway_from_moon_mci(epoch_s)
            r_em, v_em = self.moon_from_earth_eci(epoch_s)
            return self._tilt.T @ r_gw_mci + r_em, self._tilt.T @ v_gw_mci + v_em
        raise ValueError(f"unsupported body {body}")

    def _relative_eci(self, body: BodyId, center: BodyId, epoch_s: float):
        rb, vb = self._geocentric_eci(body, epoch_s)
        rc, vc = self._geocentric_eci(center, epoch_s)
        return rb - rc, vb - vc


def analytic_ephemeris() -> Ephemeris:
    """Zero-data provider backed by the mean-element orbits."""
    return Ephemeris()


_BUNDLED: Ephemeris | None = None


def bundled_ephemeris() -> Ephemeris:
    """Provider backed by the packaged Moon and Gateway tables (cached)."""
    global _BUNDLED
    if _BUNDLED is None:
        data = importlib.resources.files("moongate") / "data"
        moon = StateTable.from_csv_text((data / "moon_eci.csv").read_text())
        gateway = StateTable.from_csv_text((data / "gateway_mci.csv").read_text())
        _BUNDLED = Ephemeris(moon_table=moon, gateway_table=gateway)
    return _BUNDLED


def gateway_mee(
    eph: Ephemeris, epoch_s: float, du_km: float, vu_km_s: float
) -> MeeState:
    """Gateway osculating equinoctial elements in lunar canonical units."""
    state = eph.body_state(BodyId.GATEWAY, epoch_s, BodyId.MOON, FrameTag.MCI)
    return cartesian_to_mee(state.r_km / du_km, state.v_kms / vu_km_s, 1.0)
