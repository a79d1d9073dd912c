# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled propagation core.

Byte-for-byte mirror of the pure-Python core's algorithms with the hot path
(state/adjoint rates, the finite-difference adjoint gradient, and the
embedded Runge-Kutta controller) in C. Selected automatically at import when
present; the pure core remains the reference in equivalence tests.
"""

import numpy as np

from libc.math cimport atan2, cos, fabs, hypot, isfinite, remainder, sin, sqrt

from ._pycore import RawArc
from .errors import SingularStateError
from .frames import eci_to_mci_matrix
from .indirect import HamiltonianSplit

BACKEND_NAME = "compiled"

STATUS_OK = 0
STATUS_EVENT = 1
STATUS_EXHAUSTED = 2
STATUS_MIN_STEP = 3
STATUS_MAX_STEPS = 4
STATUS_NON_FINITE = 5
STATUS_SINGULAR = 6

cdef int C_OK = 0
cdef int C_EVENT = 1
cdef int C_EXHAUSTED = 2
cdef int C_MIN_STEP = 3
cdef int C_MAX_STEPS = 4
cdef int C_NON_FINITE = 5
cdef int C_SINGULAR = 6

cdef double SINGULAR_SWITCH = 1e-14


class _Exhausted(Exception):
    pass


# Dormand-Prince 5(4) tableau.
cdef double TC[7]
cdef double TA[7][6]
cdef double TB5[7]
cdef double TB4[7]

TC[0] = 0.0; TC[1] = 1.0 / 5.0; TC[2] = 3.0 / 10.0; TC[3] = 4.0 / 5.0
TC[4] = 8.0 / 9.0; TC[5] = 1.0; TC[6] = 1.0

cdef int _i, _j
for _i in range(7):
    for _j in range(6):
        TA[_i][_j] = 0.0
TA[1][0] = 1.0 / 5.0
TA[2][0] = 3.0 / 40.0; TA[2][1] = 9.0 / 40.0
TA[3][0] = 44.0 / 45.0; TA[3][1] = -56.0 / 15.0; TA[3][2] = 32.0 / 9.0
TA[4][0] = 19372.0 / 6561.0; TA[4][1] = -25360.0 / 2187.0
TA[4][2] = 64448.0 / 6561.0; TA[4][3] = -212.0 / 729.0
TA[5][0] = 9017.0 / 3168.0; TA[5][1] = -355.0 / 33.0
TA[5][2] = 46732.0 / 5247.0; TA[5][3] = 49.0 / 176.0
TA[5][4] = -5103.0 / 18656.0
TA[6][0] = 35.0 / 384.0; TA[6][1] = 0.0; TA[6][2] = 500.0 / 1113.0
TA[6][3] = 125.0 / 192.0; TA[6][4] = -2187.0 / 6784.0; TA[6][5] = 11.0 / 84.0

for _j in range(6):
    TB5[_j] = TA[6][_j]
TB5[6] = 0.0
TB4[0] = 5179.0 / 57600.0; TB4[1] = 0.0; TB4[2] = 7571.0 / 16695.0
TB4[3] = 393.0 / 640.0; TB4[4] = -92097.0 / 339200.0
TB4[5] = 187.0 / 2100.0; TB4[6] = 1.0 / 40.0

# Ecliptic components -> ECI components (constant obliquity tilt).
cdef double ECL_TO_ECI[3][3]
_ecl = eci_to_mci_matrix().T
for _i in range(3):
    for _j in range(3):
        ECL_TO_ECI[_i][_j] = float(_ecl[_i, _j])
del _ecl


cdef class EphPack:
    """Base geocentric sources; see the pure core for the layout."""

    cdef public int moon_mode
    cdef double mk[9]
    cdef double sk[9]
    cdef double[::1] t_ep
    cdef double[:, ::1] t_pos
    cdef double[:, ::1] t_vel
    cdef Py_ssize_t n_rows
    cdef Py_ssize_t cache

    def __init__(
        self,
        moon_mode,
        moon_kepler,
        sun_kepler,
        moon_epochs=None,
        moon_pos=None,
        moon_vel=None,
    ):
        cdef Py_ssize_t k
        self.moon_mode = int(moon_mode)
        mkv = np.ascontiguousarray(moon_kepler, dtype=np.float64)
        skv = np.ascontiguousarray(sun_kepler, dtype=np.float64)
        if mkv.shape != (9,) or skv.shape != (9,):
            raise ValueError("kepler packs must have nine entries")
        for k in range(9):
            self.mk[k] = mkv[k]
            self.sk[k] = skv[k]
        if moon_epochs is None:
            moon_epochs = np.zeros(0)
        if moon_pos is None:
            moon_pos = np.zeros((0, 3))
        if moon_vel is None:
            moon_vel = np.zeros((0, 3))
        self.t_ep = np.ascontiguousarray(moon_epochs, dtype=np.float64)
        self.t_pos = np.ascontiguousarray(moon_pos, dtype=np.float64)
        self.t_vel = np.ascontiguousarray(moon_vel, dtype=np.float64)
        self.n_rows = self.t_ep.shape[0]
        self.cache = 0
        if self.moon_mode == 1 and self.n_rows < 2:
            raise ValueError("moon table needs at least two rows")


cdef class ArcParams:
    """Flat numeric description of one arc; mirrors the pure core."""

    cdef public double direction
    cdef public double anchor_epoch_s
    cdef public double tu_s
    cdef public double du_km
    cdef public double ut_max_km_s2
    cdef public double c_km_s
    cdef public double tau_fin_s
    cdef public double tau_offset_s
    cdef public bint thrust_on
    cdef public bint forward_mass
    cdef public EphPack eph
    cdef double tilt[3][3]
    cdef int n_pert
    cdef double pmu[2]
    cdef double pwm[2]
    cdef double pws[2]
    cdef public double fd_step
    cdef public bint frozen
    cdef public double event_threshold_canon
    cdef public double event_w_moon
    cdef public double event_w_sun
    cdef public double last_alpha
    cdef public double last_beta

    def __init__(
        self,
        direction,
        anchor_epoch_s,
        tu_s,
        du_km,
        ut_max_km_s2,
        c_km_s,
        tau_fin_s,
        tau_offset_s,
        thrust_on,
        forward_mass,
        eph,
        tilt,
        pert_mu,
        pert_w_moon,
        pert_w_sun,
        fd_step=1e-7,
        frozen=False,
        event_threshold_canon=-1.0,
        event_w_moon=0.0,
        event_w_sun=0.0,
        last_alpha=0.0,
        last_beta=0.0,
    ):
        cdef Py_ssize_t a, b
        self.direction = float(direction)
        self.anchor_epoch_s = float(anchor_epoch_s)
        self.tu_s = float(tu_s)
        self.du_km = float(du_km)
        self.ut_max_km_s2 = float(ut_max_km_s2)
        self.c_km_s = float(c_km_s)
        self.tau_fin_s = float(tau_fin_s)
        self.tau_offset_s = float(tau_offset_s)
        self.thrust_on = bool(thrust_on)
        self.forward_mass = bool(forward_mass)
        self.eph = eph
        tl = np.ascontiguousarray(tilt, dtype=np.float64)
        if tl.shape != (3, 3):
            raise ValueError("tilt must be a 3x3 matrix")
        for a in range(3):
            for b in range(3):
                self.tilt[a][b] = tl[a, b]
        mu = np.ascontiguousarray(pert_mu, dtype=np.float64)
        wm = np.ascontiguousarray(pert_w_moon, dtype=np.float64)
        ws = np.ascontiguousarray(pert_w_sun, dtype=np.float64)
        if not (mu.shape[0] == wm.shape[0] == ws.shape[0]):
            raise ValueError("perturber descriptors must have equal lengths")
        if mu.shape[0] > 2:
            raise ValueError("at most two perturbers are supported")
        self.n_pert = mu.shape[0]
        for a in range(self.n_pert):
            self.pmu[a] = mu[a]
            self.pwm[a] = wm[a]
            self.pws[a] = ws[a]
        self.fd_step = float(fd_step)
        self.frozen = bool(frozen)
        self.event_threshold_canon = float(event_threshold_canon)
        self.event_w_moon = float(event_w_moon)
        self.event_w_sun = float(event_w_sun)
        self.last_alpha = float(last_alpha)
        self.last_beta = float(last_beta)


# ---------------------------------------------------------------------------
# Ephemeris kernels


cdef double _solve_kepler(double mean_anomaly, double e):
    cdef double m = remainder(mean_anomaly, 2.0 * 3.14159265358979323846)
    cdef double ecc = m + e * sin(m)
    cdef double f, delta
    cdef int it
    for it in range(30):
        f = ecc - e * sin(ecc) - m
        delta = f / (1.0 - e * cos(ecc))
        ecc -= delta
        if fabs(delta) < 1e-14:
            break
    return ecc


cdef void _kepler_ecl_pos(const double* k, double epoch_s, double* out):
    cdef double a = k[0], e = k[1], inc = k[2]
    cdef double raan = k[3] + k[4] * epoch_s
    cdef double argp = (k[5] + k[6] * epoch_s) - raan
    cdef double ecc = _solve_kepler(k[7] + k[8] * epoch_s, e)
    cdef double b = a * sqrt(1.0 - e * e)
    cdef double x_pf = a * (cos(ecc) - e)
    cdef double y_pf = b * sin(ecc)
    cdef double ca = cos(argp), sa = sin(argp)
    cdef double x1 = ca * x_pf - sa * y_pf
    cdef double y1 = sa * x_pf + ca * y_pf
    cdef double ci = cos(inc), si = sin(inc)
    cdef double y2 = ci * y1
    cdef double z2 = si * y1
    cdef double cr = cos(raan), sr = sin(raan)
    out[0] = cr * x1 - sr * y2
    out[1] = sr * x1 + cr * y2
    out[2] = z2


cdef int _hermite_pos(EphPack e, double epoch_s, double* out) except -1:
    cdef Py_ssize_t n = e.n_rows
    cdef double t0 = e.t_ep[0]
    cdef double t1 = e.t_ep[n - 1]
    if not (t0 <= epoch_s <= t1):
        raise SingularStateError(
            f"moon table exhausted at epoch {epoch_s:.1f} s"
        )
    cdef Py_ssize_t idx = e.cache
    if idx > n - 2:
        idx = n - 2
    # The integrator walks epochs monotonically; try the cached interval
    # and its neighbors before falling back to bisection.
    if not (e.t_ep[idx] <= epoch_s <= e.t_ep[idx + 1]):
        if idx + 1 <= n - 2 and e.t_ep[idx + 1] <= epoch_s <= e.t_ep[idx + 2]:
            idx += 1
        elif idx >= 1 and e.t_ep[idx - 1] <= epoch_s <= e.t_ep[idx]:
            idx -= 1
        else:
            idx = _bisect_right(e, epoch_s) - 1
            if idx < 0:
                idx = 0
            if idx > n - 2:
                idx = n - 2
    e.cache = idx
    cdef double h = e.t_ep[idx + 1] - e.t_ep[idx]
    cdef double th = (epoch_s - e.t_ep[idx]) / h
    cdef double t2 = th * th
    cdef double t3 = t2 * th
    cdef double c0 = 2.0 * t3 - 3.0 * t2 + 1.0
    cdef double c1 = (t3 - 2.0 * t2 + th) * h
    cdef double c2 = -2.0 * t3 + 3.0 * t2
    cdef double c3 = (t3 - t2) * h
    cdef int k
    for k in range(3):
        out[k] = (
            c0 * e.t_pos[idx, k]
            + c1 * e.t_vel[idx, k]
            + c2 * e.t_pos[idx + 1, k]
            + c3 * e.t_vel[idx + 1, k]
        )
    return 0


cdef Py_ssize_t _bisect_right(EphPack e, double x):
    cdef Py_ssize_t lo = 0
    cdef Py_ssize_t hi = e.n_rows
    cdef Py_ssize_t mid
    while lo < hi:
        mid = (lo + hi) // 2
        if x < e.t_ep[mid]:
            hi = mid
        else:
            lo = mid + 1
    return lo


cdef int _moon_eci(ArcParams P, double epoch_s, double* out) except -1:
    cdef double ecl[3]
    cdef int k
    if P.eph.moon_mode == 1:
        _hermite_pos(P.eph, epoch_s, out)
        return 0
    _kepler_ecl_pos(P.eph.mk, epoch_s, ecl)
    for k in range(3):
        out[k] = (
            ECL_TO_ECI[k][0] * ecl[0]
            + ECL_TO_ECI[k][1] * ecl[1]
            + ECL_TO_ECI[k][2] * ecl[2]
        )
    return 0


cdef void _sun_eci(ArcParams P, double epoch_s, double* out):
    cdef double ecl[3]
    cdef int k
    _kepler_ecl_pos(P.eph.sk, epoch_s, ecl)
    for k in range(3):
        out[k] = (
            ECL_TO_ECI[k][0] * ecl[0]
            + ECL_TO_ECI[k][1] * ecl[1]
            + ECL_TO_ECI[k][2] * ecl[2]
        )


cdef int _bodies_at(ArcParams P, double epoch_s, double* mus, double bpos[2][3]) except -1:
    """Perturber canonical positions on arc axes; returns count."""
    cdef double moon[3]
    cdef double sun[3]
    cdef double base[3]
    cdef bint have_moon = False
    cdef bint have_sun = False
    cdef int k, c
    if P.n_pert == 0:
        return 0
    for k in range(P.n_pert):
        for c in range(3):
            base[c] = 0.0
        if P.pwm[k] != 0.0:
            if not have_moon:
                _moon_eci(P, epoch_s, moon)
                have_moon = True
            for c in range(3):
                base[c] += P.pwm[k] * moon[c]
        if P.pws[k] != 0.0:
            if not have_sun:
                _sun_eci(P, epoch_s, sun)
                have_sun = True
            for c in range(3):
                base[c] += P.pws[k] * sun[c]
        mus[k] = P.pmu[k]
        for c in range(3):
            bpos[k][c] = (
                P.tilt[c][0] * base[0]
                + P.tilt[c][1] * base[1]
                + P.tilt[c][2] * base[2]
            ) / P.du_km
    return P.n_pert


cdef inline double _epoch_at(ArcParams P, double tau_hat):
    if P.frozen:
        return P.anchor_epoch_s
    return P.anchor_epoch_s + P.direction * tau_hat * P.tu_s


cdef inline double _swept_s(ArcParams P, double tau_hat):
    if P.frozen:
        tau_hat = 0.0
    return P.tau_offset_s + tau_hat * P.tu_s


cdef inline double _mass_ratio(ArcParams P, double tau_hat):
    if not P.thrust_on:
        return 1.0
    cdef double swept = _swept_s(P, tau_hat)
    cdef double burned = swept if P.forward_mass else (P.tau_fin_s - swept)
    return 1.0 - (P.ut_max_km_s2 / P.c_km_s) * burned


cdef inline double _thrust_canon(ArcParams P, double m_ratio):
    return (P.ut_max_km_s2 / m_ratio) * P.tu_s * P.tu_s / P.du_km


# ---------------------------------------------------------------------------
# Dynamics kernels (canonical units, mu = 1)


cdef int _mee_cart(const double* z, double* r, double* v) except -1:
    cdef double p = z[0], l = z[1], m = z[2], n = z[3], s = z[4], q = z[5]
    cdef double alpha2 = n * n - s * s
    cdef double sig2 = 1.0 + n * n + s * s
    cdef double cq = cos(q)
    cdef double sq = sin(q)
    cdef double eta = 1.0 + l * cq + m * sq
    if eta <= 0.0:
        raise SingularStateError(
            f"state on the open hyperbolic branch: 1 + l cos q + m sin q = {eta}"
        )
    cdef double rad = p / eta
    cdef double ns2 = 2.0 * n * s
    cdef double rs = rad / sig2
    r[0] = rs * (cq + alpha2 * cq + ns2 * sq)
    r[1] = rs * (sq - alpha2 * sq + ns2 * cq)
    r[2] = rs * 2.0 * (n * sq - s * cq)
    cdef double vs = sqrt(1.0 / p) / sig2
    v[0] = -vs * (sq + alpha2 * sq - ns2 * cq + m - ns2 * l + alpha2 * m)
    v[1] = -vs * (-cq + alpha2 * cq + ns2 * sq - l + ns2 * m + alpha2 * l)
    v[2] = vs * 2.0 * (n * cq + s * sq + l * n + m * s)
    return 0


cdef int _lvlh_rows(const double* r, const double* v, double B[3][3]) except -1:
    cdef double hx = r[1] * v[2] - r[2] * v[1]
    cdef double hy = r[2] * v[0] - r[0] * v[2]
    cdef double hz = r[0] * v[1] - r[1] * v[0]
    cdef double hn = sqrt(hx * hx + hy * hy + hz * hz)
    cdef double rn = sqrt(r[0] * r[0] + r[1] * r[1] + r[2] * r[2])
    if hn == 0.0 or rn == 0.0:
        raise SingularStateError("degenerate state: zero angular momentum")
    cdef double er0 = r[0] / rn, er1 = r[1] / rn, er2 = r[2] / rn
    cdef double eh0 = hx / hn, eh1 = hy / hn, eh2 = hz / hn
    B[0][0] = er0; B[0][1] = er1; B[0][2] = er2
    B[2][0] = eh0; B[2][1] = eh1; B[2][2] = eh2
    B[1][0] = eh1 * er2 - eh2 * er1
    B[1][1] = eh2 * er0 - eh0 * er2
    B[1][2] = eh0 * er1 - eh1 * er0
    return 0


cdef int _battin(const double* r, const double* rho, double mu, double* acc) except -1:
    cdef double rho2 = rho[0] * rho[0] + rho[1] * rho[1] + rho[2] * rho[2]
    if rho2 == 0.0:
        raise ValueError("perturbing body coincides with the center")
    cdef double q = (
        r[0] * (r[0] - 2.0 * rho[0])
        + r[1] * (r[1] - 2.0 * rho[1])
        + r[2] * (r[2] - 2.0 * rho[2])
    ) / rho2
    cdef double one_q = 1.0 + q
    if one_q <= 0.0:
        raise ValueError("craft position reaches the perturbing body")
    cdef double fq = q * (3.0 + 3.0 * q + q * q) / (1.0 + one_q * sqrt(one_q))
    cdef double d0 = rho[0] - r[0]
    cdef double d1 = rho[1] - r[1]
    cdef double d2 = rho[2] - r[2]
    cdef double dd = d0 * d0 + d1 * d1 + d2 * d2
    cdef double d3 = dd * sqrt(dd)
    if d3 == 0.0:
        raise ValueError("craft position reaches the perturbing body")
    cdef double f = -mu / d3
    acc[0] = f * (r[0] + fq * rho[0])
    acc[1] = f * (r[1] + fq * rho[1])
    acc[2] = f * (r[2] + fq * rho[2])
    return 0


cdef int _apert_lvlh(
    const double* z, int nb, const double* mus, double bpos[2][3], double* out
) except -1:
    cdef double r[3]
    cdef double v[3]
    cdef double B[3][3]
    cdef double acc[3]
    cdef double tot0 = 0.0, tot1 = 0.0, tot2 = 0.0
    cdef int k
    _mee_cart(z, r, v)
    for k in range(nb):
        _battin(r, bpos[k], mus[k], acc)
        tot0 += acc[0]
        tot1 += acc[1]
        tot2 += acc[2]
    _lvlh_rows(r, v, B)
    out[0] = B[0][0] * tot0 + B[0][1] * tot1 + B[0][2] * tot2
    out[1] = B[1][0] * tot0 + B[1][1] * tot1 + B[1][2] * tot2
    out[2] = B[2][0] * tot0 + B[2][1] * tot1 + B[2][2] * tot2
    return 0


cdef int _gauss(const double* z, double G[6][3], double* kepler_qdot) except -1:
    cdef double p = z[0], l = z[1], m = z[2], n = z[3], s = z[4], q = z[5]
    if p <= 0.0:
        raise SingularStateError(f"semilatus rectum must be positive, got {p}")
    cdef double cq = cos(q)
    cdef double sq = sin(q)
    cdef double eta = 1.0 + l * cq + m * sq
    if eta <= 0.0:
        raise SingularStateError(
            f"state on the open hyperbolic branch: eta = {eta}"
        )
    cdef double rp = sqrt(p)
    cdef double lever = n * sq - s * cq
    cdef double chi = 1.0 + n * n + s * s
    G[0][0] = 0.0
    G[0][1] = rp * 2.0 * p / eta
    G[0][2] = 0.0
    G[1][0] = rp * sq
    G[1][1] = rp * ((eta + 1.0) * cq + l) / eta
    G[1][2] = rp * (-m * lever / eta)
    G[2][0] = -rp * cq
    G[2][1] = rp * ((eta + 1.0) * sq + m) / eta
    G[2][2] = rp * (l * lever / eta)
    G[3][0] = 0.0
    G[3][1] = 0.0
    G[3][2] = rp * 0.5 * chi * cq / eta
    G[4][0] = 0.0
    G[4][1] = 0.0
    G[4][2] = rp * 0.5 * chi * sq / eta
    G[5][0] = 0.0
    G[5][1] = 0.0
    G[5][2] = rp * lever / eta
    kepler_qdot[0] = sqrt(1.0 / (p * p * p)) * eta * eta
    return 0


cdef int _split(
    const double* z, const double* lam, const double* a_pert, double sgn, double* out4
) except -1:
    """out4 = (h_free, h_r, h_t, h_h), direction-folded."""
    cdef double G[6][3]
    cdef double kq
    cdef double cr = 0.0, ct = 0.0, ch = 0.0
    cdef double h_free
    cdef int i
    _gauss(z, G, &kq)
    for i in range(6):
        cr += lam[i] * G[i][0]
        ct += lam[i] * G[i][1]
        ch += lam[i] * G[i][2]
    h_free = cr * a_pert[0] + ct * a_pert[1] + ch * a_pert[2] + lam[5] * kq
    out4[0] = sgn * h_free
    out4[1] = sgn * cr
    out4[2] = sgn * ct
    out4[3] = sgn * ch
    return 0


cdef double _composed_h(
    const double* z,
    const double* lam,
    int nb,
    const double* mus,
    double bpos[2][3],
    double a_t,
    double sgn,
) except *:
    cdef double a_pert[3]
    cdef double s4[4]
    _apert_lvlh(z, nb, mus, bpos, a_pert)
    _split(z, lam, a_pert, sgn, s4)
    return s4[0] - a_t * sqrt(s4[1] * s4[1] + s4[2] * s4[2] + s4[3] * s4[3])


cdef int _costate_rates(
    const double* z,
    const double* lam,
    int nb,
    const double* mus,
    double bpos[2][3],
    double a_t,
    double sgn,
    double fd_step,
    double* out,
) except -1:
    cdef double work[6]
    cdef double base, h, f_ph, f_mh, f_ph2, f_mh2, d_full, d_half
    cdef int i
    for i in range(6):
        work[i] = z[i]
    for i in range(6):
        base = work[i]
        h = fd_step
        work[i] = base + h
        f_ph = _composed_h(work, lam, nb, mus, bpos, a_t, sgn)
        work[i] = base - h
        f_mh = _composed_h(work, lam, nb, mus, bpos, a_t, sgn)
        work[i] = base + 0.5 * h
        f_ph2 = _composed_h(work, lam, nb, mus, bpos, a_t, sgn)
        work[i] = base - 0.5 * h
        f_mh2 = _composed_h(work, lam, nb, mus, bpos, a_t, sgn)
        work[i] = base
        d_full = (f_ph - f_mh) / (2.0 * h)
        d_half = (f_ph2 - f_mh2) / h
        out[i] = -(4.0 * d_half - d_full) / 3.0
    return 0


cdef int _rhs(double tau_hat, const double* y, ArcParams P, double* out) except -1:
    cdef double mus[2]
    cdef double bpos[2][3]
    cdef double a_pert[3]
    cdef double s4[4]
    cdef double G[6][3]
    cdef double kq, m_ratio, a_t, switch, alpha, beta
    cdef double a_thrust[3]
    cdef double total[3]
    cdef double ca, sa, cb, sb
    cdef int nb, i
    nb = _bodies_at(P, _epoch_at(P, tau_hat), mus, bpos)
    _apert_lvlh(y, nb, mus, bpos, a_pert)
    _split(y, y + 6, a_pert, P.direction, s4)
    a_t = 0.0
    a_thrust[0] = 0.0
    a_thrust[1] = 0.0
    a_thrust[2] = 0.0
    if P.thrust_on:
        m_ratio = _mass_ratio(P, tau_hat)
        if m_ratio <= 0.0:
            raise _Exhausted()
        a_t = _thrust_canon(P, m_ratio)
        switch = sqrt(s4[1] * s4[1] + s4[2] * s4[2] + s4[3] * s4[3])
        if switch > SINGULAR_SWITCH:
            alpha = atan2(-s4[1], -s4[2])
            beta = atan2(-s4[3], hypot(s4[1], s4[2]))
            P.last_alpha = alpha
            P.last_beta = beta
        else:
            alpha = P.last_alpha
            beta = P.last_beta
        ca = cos(alpha); sa = sin(alpha)
        cb = cos(beta); sb = sin(beta)
        a_thrust[0] = a_t * sa * cb
        a_thrust[1] = a_t * ca * cb
        a_thrust[2] = a_t * sb
    total[0] = a_pert[0] + a_thrust[0]
    total[1] = a_pert[1] + a_thrust[1]
    total[2] = a_pert[2] + a_thrust[2]
    _gauss(y, G, &kq)
    for i in range(6):
        out[i] = P.direction * (
            G[i][0] * total[0] + G[i][1] * total[1] + G[i][2] * total[2]
        )
    out[5] += P.direction * kq
    _costate_rates(y, y + 6, nb, mus, bpos, a_t, P.direction, P.fd_step, out + 6)
    return 0


cdef int _node(
    double tau_hat,
    const double* y,
    ArcParams P,
    double* s4,
    double* alpha,
    double* beta,
    double* h_star,
    double* m_ratio,
) except -1:
    cdef double mus[2]
    cdef double bpos[2][3]
    cdef double a_pert[3]
    cdef double a_t, switch
    cdef int nb
    nb = _bodies_at(P, _epoch_at(P, tau_hat), mus, bpos)
    _apert_lvlh(y, nb, mus, bpos, a_pert)
    _split(y, y + 6, a_pert, P.direction, s4)
    m_ratio[0] = _mass_ratio(P, tau_hat)
    a_t = 0.0
    if P.thrust_on and m_ratio[0] > 0.0:
        a_t = _thrust_canon(P, m_ratio[0])
    switch = sqrt(s4[1] * s4[1] + s4[2] * s4[2] + s4[3] * s4[3])
    if switch > SINGULAR_SWITCH:
        alpha[0] = atan2(-s4[1], -s4[2])
        beta[0] = atan2(-s4[3], hypot(s4[1], s4[2]))
    else:
        alpha[0] = P.last_alpha
        beta[0] = P.last_beta
    h_star[0] = s4[0] - a_t * switch
    return 0


cdef double _event(double tau_hat, const double* y, ArcParams P) except *:
    cdef double epoch = _epoch_at(P, tau_hat)
    cdef double base[3]
    cdef double body[3]
    cdef double center[3]
    cdef double r[3]
    cdef double v[3]
    cdef int k
    for k in range(3):
        base[k] = 0.0
    if P.event_w_moon != 0.0:
        _moon_eci(P, epoch, body)
        for k in range(3):
            base[k] += P.event_w_moon * body[k]
    if P.event_w_sun != 0.0:
        _sun_eci(P, epoch, body)
        for k in range(3):
            base[k] += P.event_w_sun * body[k]
    for k in range(3):
        center[k] = (
            P.tilt[k][0] * base[0]
            + P.tilt[k][1] * base[1]
            + P.tilt[k][2] * base[2]
        ) / P.du_km
    _mee_cart(y, r, v)
    cdef double d0 = r[0] - center[0]
    cdef double d1 = r[1] - center[1]
    cdef double d2 = r[2] - center[2]
    return sqrt(d0 * d0 + d1 * d1 + d2 * d2) - P.event_threshold_canon


# ---------------------------------------------------------------------------
# Python-visible entry points (same shapes as the pure core)


def rhs(double tau_hat, y, ArcParams P):
    """Coupled element/adjoint rates in swept canonical time."""
    cdef double[::1] yv = np.ascontiguousarray(y, dtype=np.float64)
    if yv.shape[0] != 12:
        raise ValueError("state vector must have 12 components")
    out = np.empty(12)
    cdef double[::1] ov = out
    _rhs(tau_hat, &yv[0], P, &ov[0])
    return out


def node_outputs(double tau_hat, y, ArcParams P):
    """Split, controls, composed Hamiltonian, and mass ratio at a node."""
    cdef double[::1] yv = np.ascontiguousarray(y, dtype=np.float64)
    cdef double s4[4]
    cdef double alpha = 0.0, beta = 0.0, h_star = 0.0, m_ratio = 0.0
    _node(tau_hat, &yv[0], P, s4, &alpha, &beta, &h_star, &m_ratio)
    split = HamiltonianSplit(h_free=s4[0], h_r=s4[1], h_t=s4[2], h_h=s4[3])
    return split, alpha, beta, h_star, m_ratio


def event_value(double tau_hat, y, ArcParams P):
    """Signed canonical distance to the switching sphere (positive outside)."""
    cdef double[::1] yv = np.ascontiguousarray(y, dtype=np.float64)
    return _event(tau_hat, &yv[0], P)


def mass_ratio(ArcParams P, double tau_hat):
    return _mass_ratio(P, tau_hat)


cdef int _stall_status_c(ArcParams P, double tau_hat):
    if P.thrust_on and _mass_ratio(P, tau_hat) <= 1e-6:
        return C_EXHAUSTED
    return C_MIN_STEP


def propagate_raw(
    y0,
    double tau_end_hat,
    ArcParams P,
    double rtol,
    double atol,
    double max_step_hat,
    long max_steps,
):
    """Adaptive fifth-order integration over swept time [0, tau_end_hat].

    Same controller, statuses, and outputs as the pure core.
    """
    arr = np.ascontiguousarray(y0, dtype=np.float64)
    if arr.shape != (12,):
        raise ValueError(f"state vector must have 12 components, got {arr.shape}")

    cdef double y[12]
    cdef double y_new[12]
    cdef double yi[12]
    cdef double f_now[12]
    cdef double ks[7][12]
    cdef double err_comp, err, scale, acc
    cdef double tau = 0.0
    cdef double h, min_step, factor, g_new, g_prev = 1.0
    cdef double stop_hat = tau_end_hat
    cdef double zero_burn_s, floor_s
    cdef bint will_exhaust = False
    cdef bint event_on
    cdef long steps = 0
    cdef long n_rhs = 0
    cdef int status = C_OK
    cdef int i, j, stage, failed_inside
    cdef double tau_new

    for i in range(12):
        y[i] = arr[i]

    taus = [0.0]
    states = [arr.copy()]

    try:
        n_rhs += 1
        _rhs(0.0, y, P, f_now)
    except _Exhausted:
        return _finalize_py([0.0], states, [np.zeros(12)], P, C_EXHAUSTED, n_rhs)
    except SingularStateError:
        return _finalize_py([0.0], states, [np.zeros(12)], P, C_SINGULAR, n_rhs)
    derivs = [_as_array(f_now)]
    event_on = P.event_threshold_canon > 0.0
    if event_on:
        g_prev = _event(0.0, y, P)

    # Forward arcs burn monotonically, so the mass-zero time is known in
    # closed form. Stop a hair short of it (thrust acceleration diverges as
    # 1/m) and report the arc as exhausted instead of grinding the step
    # size down against the singularity.
    if P.thrust_on and P.forward_mass:
        zero_burn_s = P.c_km_s / P.ut_max_km_s2
        if P.tau_offset_s + tau_end_hat * P.tu_s >= zero_burn_s:
            will_exhaust = True
            floor_s = zero_burn_s * (1.0 - 1e-3)
            stop_hat = (floor_s - P.tau_offset_s) / P.tu_s
            if stop_hat < 0.0:
                stop_hat = 0.0

    h = 0.02 * 2.0 * 3.14159265358979323846 * y[0] * sqrt(y[0])
    if h > max_step_hat:
        h = max_step_hat
    if h > tau_end_hat:
        h = tau_end_hat
    min_step = tau_end_hat * 1e-14
    if min_step < 1e-13:
        min_step = 1e-13

    while tau < stop_hat:
        if steps >= max_steps:
            status = C_MAX_STEPS
            break
        steps += 1
        if h > stop_hat - tau:
            h = stop_hat - tau
        for i in range(12):
            ks[0][i] = f_now[i]
        failed_inside = -1
        try:
            for stage in range(1, 7):
                for i in range(12):
                    acc = 0.0
                    for j in range(stage):
                        acc += TA[stage][j] * ks[j][i]
                    yi[i] = y[i] + h * acc
                n_rhs += 1
                _rhs(tau + TC[stage] * h, yi, P, ks[stage])
        except _Exhausted:
            failed_inside = C_EXHAUSTED
        except SingularStateError:
            failed_inside = C_SINGULAR
        if failed_inside >= 0:
            # Shrink toward the failure; if the step is already tiny the
            # condition is real and the arc ends here.
            if h <= 4.0 * min_step:
                status = failed_inside
                break
            h *= 0.25
            continue
        err = 0.0
        for i in range(12):
            acc = 0.0
            for j in range(7):
                acc += TB5[j] * ks[j][i]
            y_new[i] = y[i] + h * acc
            acc = 0.0
            for j in range(7):
                acc += (TB5[j] - TB4[j]) * ks[j][i]
            err_comp = h * acc
            scale = fabs(y[i])
            if fabs(y_new[i]) > scale:
                scale = fabs(y_new[i])
            scale = atol + rtol * scale
            err += (err_comp / scale) * (err_comp / scale)
        err = sqrt(err / 12.0)
        if not isfinite(err):
            status = (
                C_EXHAUSTED
                if _stall_status_c(P, tau) == C_EXHAUSTED
                else C_NON_FINITE
            )
            break
        if err <= 1.0:
            tau_new = tau + h
            # Last stage sits at (tau + h, y_new): first-same-as-last.
            taus.append(tau_new)
            states.append(_as_array(y_new))
            derivs.append(_as_array(ks[6]))
            tau = tau_new
            for i in range(12):
                y[i] = y_new[i]
                f_now[i] = ks[6][i]
            if event_on:
                g_new = _event(tau, y, P)
                if g_prev > 0.0 >= g_new:
                    status = C_EVENT
                    break
                g_prev = g_new
            if err == 0.0:
                factor = 5.0
            else:
                factor = 0.9 * err ** -0.2
                if factor > 5.0:
                    factor = 5.0
                if factor < 0.2:
                    factor = 0.2
            h = h * factor
            if h > max_step_hat:
                h = max_step_hat
        else:
            factor = 0.9 * err ** -0.2
            if factor < 0.2:
                factor = 0.2
            h *= factor
        if h < min_step:
            status = _stall_status_c(P, tau)
            break
    if will_exhaust and status == C_OK:
        status = C_EXHAUSTED
    return _finalize_py(taus, states, derivs, P, status, n_rhs)


cdef object _as_array(double* buf):
    out = np.empty(12)
    cdef double[::1] v = out
    cdef int i
    for i in range(12):
        v[i] = buf[i]
    return out


def _finalize_py(taus, states, derivs, ArcParams P, int status, long n_rhs):
    cdef Py_ssize_t n = len(taus)
    cdef Py_ssize_t k
    controls = np.empty((n, 2))
    splits = np.empty((n, 4))
    hams = np.empty(n)
    mrs = np.empty(n)
    cdef double[:, ::1] cv = controls
    cdef double[:, ::1] sv = splits
    cdef double[::1] hv = hams
    cdef double[::1] mv = mrs
    cdef double s4[4]
    cdef double alpha, beta, h_star, m_ratio
    cdef double[::1] yv
    for k in range(n):
        yv = states[k]
        try:
            _node(taus[k], &yv[0], P, s4, &alpha, &beta, &h_star, &m_ratio)
        except (SingularStateError, ValueError):
            cv[k, 0] = cv[k, 1] = np.nan
            sv[k, 0] = sv[k, 1] = sv[k, 2] = sv[k, 3] = np.nan
            hv[k] = np.nan
            mv[k] = np.nan
            continue
        cv[k, 0] = alpha
        cv[k, 1] = beta
        sv[k, 0] = s4[0]
        sv[k, 1] = s4[1]
        sv[k, 2] = s4[2]
        sv[k, 3] = s4[3]
        hv[k] = h_star
        mv[k] = m_ratio
    return RawArc(
        taus=np.array(taus),
        states=np.array(states),
        derivs=np.array(derivs),
        controls=controls,
        splits=splits,
        hamiltonians=hams,
        mass_ratios=mrs,
        status=status,
        n_rhs=n_rhs,
    )
