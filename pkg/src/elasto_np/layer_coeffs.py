"""Elastodynamic single-layer potentials on a sphere.

The single layer of a vector harmonic density on the sphere of radius ``R``
stays in the span of at most two vector harmonics.  This module provides
the radial weights of those expansions inside and outside the sphere, the
on-surface and traction coefficient tables, and a brute-force surface
quadrature of the Kupradze kernel that serves as an independent oracle.

Shorthand: for a medium with wavenumbers ``k_s, k_p`` the weights combine a
shear part scaled by ``1/mu`` and a pressure part scaled by ``1/(lam+2mu)``.
When the Bessel index of the shear/pressure pair differs by two, both parts
blow up like ``1/omega**2`` at low frequency and cancel; :func:`sp_cross`
evaluates that difference through its power series in ``k``.
"""
import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateModuli, SideMismatch, TooCloseToSurface
from .harmonics import ModeIndex, sphere_quadrature, unit_vectors, vsh, vsh_norm2
from .specfun import ScaledFnValue, acute, sph_bessel_j, sph_deriv, sph_hankel1

__all__ = [
    "ElasticMedium",
    "make_medium",
    "scalar_layer_eigen",
    "single_layer_action",
    "SurfaceCoeffs",
    "TractionCoeffs",
    "surface_coeffs",
    "traction_coeffs",
    "sp_cross",
    "kupradze",
    "kernel_quadrature_oracle",
    "layer_field",
    "fd_traction",
    "fd_pde_residual",
    "project_on_modes",
    "hessian_integral_closed_form",
    "hessian_integral_quadrature",
]

# |k| * radius below SERIES_SWITCH + order/4 sends the shear/pressure
# differences through their power series; direct evaluation cancels about
# (order + 2) log10(1/|k r|) digits there
SERIES_SWITCH = 3.0
# omega * |x - y| below which the kernel uses its Taylor series
KERNEL_SERIES_SWITCH = 1e-2
KERNEL_SERIES_TERMS = 8


@dataclass(frozen=True)
class ElasticMedium:
    """Lamé pair at a fixed angular frequency.

    Wavenumbers use the principal square root, ``k_s = omega/sqrt(mu)``.
    """

    lam: complex
    mu: complex
    omega: float
    k_s: complex = field(init=False)
    k_p: complex = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "lam", complex(self.lam))
        object.__setattr__(self, "mu", complex(self.mu))
        object.__setattr__(self, "k_s", self.omega / cmath.sqrt(self.mu))
        object.__setattr__(self, "k_p", self.omega / cmath.sqrt(self.lam + 2 * self.mu))

    @property
    def p_modulus(self):
        return self.lam + 2 * self.mu

    @property
    def convexity(self):
        """Flags for ``mu > 0`` and ``3 lam + 2 mu > 0`` (real parts for complex input)."""
        return (self.mu.real > 0 and self.mu.imag == 0,
                (3 * self.lam + 2 * self.mu).real > 0 and (3 * self.lam + 2 * self.mu).imag == 0)

    def with_mu(self, mu):
        return ElasticMedium(self.lam, mu, self.omega)

    def with_lam(self, lam):
        return ElasticMedium(lam, self.mu, self.omega)


def make_medium(lam, mu, omega):
    """Validated :class:`ElasticMedium`."""
    if not omega > 0:
        raise ValueError("omega must be positive")
    if complex(mu) == 0 or complex(lam) + 2 * complex(mu) == 0:
        raise DegenerateModuli("mu and lam + 2 mu must be nonzero")
    return ElasticMedium(lam, mu, omega)


def _jh(n, k, r_j, r_h):
    """``j_n(k r_j) h_n(k r_h)`` for possibly different orders (tuple n)."""
    nj, nh = (n, n) if isinstance(n, int) else n
    return (sph_bessel_j(nj, k * r_j) * sph_hankel1(nh, k * r_h)).to_complex()


def scalar_layer_eigen(n, k, R, x_radius, side):
    """Radial weight of the scalar single layer of ``Y_n^m`` on ``|x| = R``.

    Returns ``-i k R^2 j_n(k min(|x|, R)) h_n(k max(|x|, R))``.
    """
    tol = 1e-14 * R
    if side == "on":
        if abs(x_radius - R) > tol:
            raise SideMismatch("on-surface evaluation needs |x| = R")
        return -1j * k * R * R * _jh(n, k, R, R)
    if side == "in":
        if not x_radius < R:
            raise SideMismatch("interior evaluation needs |x| < R")
        return -1j * k * R * R * _jh(n, k, x_radius, R)
    if side == "out":
        if not x_radius > R:
            raise SideMismatch("exterior evaluation needs |x| > R")
        return -1j * k * R * R * _jh(n, k, R, x_radius)
    raise ValueError(f"unknown side {side!r}")


# --------------------------------------------------------------------------
# shear/pressure difference with index gap two


def _j_series_coeffs(a, terms):
    # j_a(z) (2a+1)!! / z^a = sum_s A_s z^{2s}
    out = [1.0]
    for s in range(1, terms):
        out.append(out[-1] * (-0.5) / (s * (2 * a + 2 * s + 1)))
    return np.array(out)


def _y_series_coeffs(b, terms):
    # -y_b(z) z^{b+1} / (2b-1)!! = sum_t B_t z^{2t}
    out = [1.0]
    for t in range(1, terms):
        out.append(out[-1] * (-0.5) / (t * (2 * t - 1 - 2 * b)))
    return np.array(out)


def sp_cross(a, medium, r_j, r_h, terms=None):
    """Stable ``k_s j_a(k_s r_j) h_{a+2}(k_s r_h)/mu - (same with p)/(lam+2mu)``.

    Both parts grow like ``1/omega**2`` when ``|k r|`` is small and nearly
    cancel.  Below ``SERIES_SWITCH + a/4`` the singular part is expanded as
    an even series in ``k`` whose difference between ``k_s`` and ``k_p`` is
    divided by ``omega**2`` analytically.
    """
    ks, kp, mu, pm = medium.k_s, medium.k_p, medium.mu, medium.p_modulus
    big = max(abs(ks), abs(kp)) * max(r_j, r_h)
    b = a + 2
    if big >= SERIES_SWITCH + 0.25 * a:
        return ks * _jh((a, b), ks, r_j, r_h) / mu - kp * _jh((a, b), kp, r_j, r_h) / pm
    w2 = medium.omega ** 2
    terms = terms or int(30 + 4 * big)
    A = _j_series_coeffs(a, terms)
    B = _y_series_coeffs(b, terms)
    # y-part: Q_y(k) = -i (2a+3) r_j^a / r_h^{a+3} sum_u C_u k^{2u}
    C = np.convolve(A * r_j ** (2 * np.arange(terms)), B * r_h ** (2 * np.arange(terms)))[:terms]
    pref = -1j * (2 * a + 3) * r_j ** a / r_h ** (a + 3)
    # (k_s^{2u} - k_p^{2u}) / omega^2 = D sum_{t<u} k_s^{2t} k_p^{2(u-1-t)}
    D = 1.0 / mu - 1.0 / pm
    s2, p2 = ks * ks, kp * kp
    diff = 0j
    geo = 0j  # running sum_{t<u} s2^t p2^{u-1-t}
    for u in range(1, terms):
        geo = geo * p2 + s2 ** (u - 1)
        diff += C[u] * geo
    qy = pref * D * diff
    # the regular j_a j_b part has no cancellation
    qj = (ks ** 3 * (sph_bessel_j(a, ks * r_j) * sph_bessel_j(b, ks * r_h)).to_complex()
          - kp ** 3 * (sph_bessel_j(a, kp * r_j) * sph_bessel_j(b, kp * r_h)).to_complex())
    # Q(k) = k^3 j_a h_b; the i of h = j + i y sits in pref
    return qy + qj / w2


# --------------------------------------------------------------------------
# single-layer actions


def _weights_exterior(mode, med, R, r):
    n = mode.n
    ks, kp, mu, pm = med.k_s, med.k_p, med.mu, med.p_modulus
    c = -1j * R * R / (2 * n + 1)
    if mode.kind == "T":
        return {"T": -1j * ks * R * R * _jh(n, ks, R, r) / mu}
    if mode.kind == "I":
        wI = c * ((n + 1) * ks * _jh(n - 1, ks, R, r) / mu + n * kp * _jh(n - 1, kp, R, r) / pm)
        wN = n * c * sp_cross(n - 1, med, R, r)
        return {"I": wI, "N": wN}
    # N density: cross term j_{n+1} h_{n-1} carries no cancellation
    wI = (n + 1) * c * (ks * _jh((n + 1, n - 1), ks, R, r) / mu
                        - kp * _jh((n + 1, n - 1), kp, R, r) / pm)
    wN = c * (n * ks * _jh(n + 1, ks, R, r) / mu + (n + 1) * kp * _jh(n + 1, kp, R, r) / pm)
    return {"I": wI, "N": wN}


def _hj(n, k, r_h, r_j):
    nh, nj = (n, n) if isinstance(n, int) else n
    return (sph_hankel1(nh, k * r_h) * sph_bessel_j(nj, k * r_j)).to_complex()


def _weights_interior(mode, med, R, r):
    n = mode.n
    ks, kp, mu, pm = med.k_s, med.k_p, med.mu, med.p_modulus
    c = -1j * R * R / (2 * n + 1)
    if mode.kind == "T":
        return {"T": -1j * ks * R * R * _hj(n, ks, R, r) / mu}
    if mode.kind == "I":
        wI = c * ((n + 1) * ks * _hj(n - 1, ks, R, r) / mu + n * kp * _hj(n - 1, kp, R, r) / pm)
        wN = n * c * (ks * _hj((n - 1, n + 1), ks, R, r) / mu
                      - kp * _hj((n - 1, n + 1), kp, R, r) / pm)
        return {"I": wI, "N": wN}
    # h_{n+1}(kR) j_{n-1}(k|x|): index gap two, same cancellation as outside
    wI = (n + 1) * c * sp_cross(n - 1, med, r, R)
    wN = c * (n * ks * _hj(n + 1, ks, R, r) / mu + (n + 1) * kp * _hj(n + 1, kp, R, r) / pm)
    return {"I": wI, "N": wN}


def single_layer_action(mode, medium, R, x_radius, region):
    """Expansion weights of the single layer of a vector-harmonic density.

    Parameters
    ----------
    mode : ModeIndex
        Density ``T``, ``I`` (order ``n-1``) or ``N`` (order ``n+1``).
    medium : ElasticMedium
    R : float
        Sphere radius.
    x_radius : float
        Evaluation radius.
    region : {"interior", "exterior"}

    Returns
    -------
    dict
        ``{"T": w}`` or ``{"I": w_I, "N": w_N}``: the potential at ``x`` equals
        the weighted sum of the unit-sphere harmonics at ``x / |x|``.
    """
    if not isinstance(mode, ModeIndex):
        mode = ModeIndex(*mode)
    if mode.n < 1:
        raise ValueError("single-layer actions are defined for n >= 1")
    if region == "exterior":
        if not x_radius >= R:
            raise SideMismatch("exterior evaluation needs |x| >= R")
        return _weights_exterior(mode, medium, R, x_radius)
    if region == "interior":
        if not x_radius <= R:
            raise SideMismatch("interior evaluation needs |x| <= R")
        return _weights_interior(mode, medium, R, x_radius)
    raise ValueError(f"unknown region {region!r}")


@dataclass(frozen=True)
class SurfaceCoeffs:
    b_n: complex
    c_1n: complex
    d_1n: complex
    c_2n: complex
    d_2n: complex


@dataclass(frozen=True)
class TractionCoeffs:
    frak_b_n: complex
    frak_c_1n: complex
    frak_d_1n: complex
    frak_c_2n: complex
    frak_d_2n: complex


def surface_coeffs(n, medium, R):
    """On-surface single-layer coefficients for degree ``n``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    T = _weights_exterior(ModeIndex(n, 0, "T"), medium, R, R)
    I = _weights_exterior(ModeIndex(n, 0, "I"), medium, R, R)
    N = _weights_exterior(ModeIndex(n, 0, "N"), medium, R, R)
    return SurfaceCoeffs(T["T"], I["I"], I["N"], N["I"], N["N"])


def traction_coeffs(n, medium, R, variant="verified"):
    """Exterior traction coefficients of the single layers on ``|x| = R``.

    Parameters
    ----------
    n : int
    medium : ElasticMedium
    R : float
    variant : {"verified", "printed"}
        The two differ only in the second bracket of ``frak_c_2n``, which
        pairs ``k^2 h_n(kR)`` with ``j_{n+1}(kR)`` in the verified form and
        with ``j_{n-1}(kR)`` in the printed form.  Finite-difference traction
        of the analytic exterior field agrees with the verified form.

    Notes
    -----
    The shear/pressure difference in the ``d_1n`` entry goes through
    :func:`sp_cross`; the other brackets have no low-frequency cancellation.
    """
    if variant not in ("verified", "printed"):
        raise ValueError(f"unknown variant {variant!r}")
    if n < 1:
        raise ValueError("n must be >= 1")
    ks, kp, mu, pm = medium.k_s, medium.k_p, medium.mu, medium.p_modulus
    den = 2 * n + 1
    jh = _jh
    jc = n + 1 if variant == "verified" else n - 1
    b = -1j * ks * R * (sph_bessel_j(n, ks * R) * acute("H", n, ks * R)).to_complex()
    c1 = (-2 * (n - 1) * R * 1j * (jh(n - 1, ks, R, R) * ks * (n + 1) / den
                                   + jh(n - 1, kp, R, R) * kp * mu * n / (pm * den))
          + R * R * 1j * (jh((n - 1, n), ks, R, R) * ks * ks * (n + 1)
                          + jh((n - 1, n), kp, R, R) * kp * kp * n) / den)
    d1 = (2 * n * (n + 2) * R * 1j * mu * sp_cross(n - 1, medium, R, R) / den
          + n * R * R * 1j * (-jh((n - 1, n), ks, R, R) * ks * ks
                              + jh((n - 1, n), kp, R, R) * kp * kp) / den)
    c2 = (-2 * (n * n - 1) * R * 1j * (jh((n + 1, n - 1), ks, R, R) * ks / den
                                       - jh((n + 1, n - 1), kp, R, R) * kp * mu / (pm * den))
          - (n + 1) * R * R * 1j * (-jh((jc, n), ks, R, R) * ks * ks
                                    + jh((jc, n), kp, R, R) * kp * kp) / den)
    d2 = (2 * (n + 2) * R * 1j * (jh(n + 1, ks, R, R) * ks * n / den
                                  + jh(n + 1, kp, R, R) * kp * mu * (n + 1) / (pm * den))
          - R * R * 1j * (jh((n + 1, n), ks, R, R) * ks * ks * n
                          + jh((n + 1, n), kp, R, R) * kp * kp * (n + 1)) / den)
    return TractionCoeffs(b, c1, d1, c2, d2)


# --------------------------------------------------------------------------
# direct kernel quadrature


def _phi_derivs(k, r):
    e = np.exp(1j * k * r)
    phi = e / r
    d1 = e * (1j * k * r - 1) / r ** 2
    d2 = e * (-(k * r) ** 2 - 2j * k * r + 2) / r ** 3
    return phi, d1, d2


def kupradze(medium, x):
    """Kupradze matrix for an array of separations ``x`` of shape (..., 3)."""
    x = np.asarray(x, dtype=float)
    r = np.linalg.norm(x, axis=-1)
    xh = x / r[..., None]
    eye = np.eye(3)
    ks, kp, w = medium.k_s, medium.k_p, medium.omega
    phis, d1s, d2s = _phi_derivs(ks, r)
    _, d1p, d2p = _phi_derivs(kp, r)
    g2 = (d2p - d2s) / w ** 2
    g1 = (d1p - d1s) / (w ** 2 * r)
    small = w * r < KERNEL_SERIES_SWITCH
    if np.any(small):
        # g = sum_m alpha_m r^{m-1}; d_i d_j r^p = p r^{p-2}(delta + (p-2) xx)
        cs, cp = 1 / cmath.sqrt(medium.mu), 1 / cmath.sqrt(medium.p_modulus)
        rs = r[small]
        a2 = np.zeros_like(rs, dtype=complex)
        a1 = np.zeros_like(rs, dtype=complex)
        for m in range(2, 2 + KERNEL_SERIES_TERMS):
            alpha = (1j) ** m * w ** (m - 2) * (cp ** m - cs ** m) / math.factorial(m)
            p = m - 1
            # g'' and g'/r of r^p
            a2 += alpha * p * (p - 1) * rs ** (p - 2)
            a1 += alpha * p * rs ** (p - 2)
        g2 = g2.astype(complex)
        g1 = g1.astype(complex)
        g2[small] = a2
        g1[small] = a1
    xx = xh[..., :, None] * xh[..., None, :]
    hess = g2[..., None, None] * xx + g1[..., None, None] * (eye - xx)
    return (-(phis / medium.mu)[..., None, None] * eye + hess) / (4 * np.pi)


def kernel_quadrature_oracle(mode, medium, R, x, degree=None, standoff=0.2):
    """Single layer of a vector-harmonic density by direct surface quadrature.

    Parameters
    ----------
    x : array_like, shape (..., 3)
        Evaluation points with ``| |x| - R | > standoff * R``.
    degree : int, optional
        Quadrature degree, default ``max(60, 4 n + 40)``.
    """
    if not isinstance(mode, ModeIndex):
        mode = ModeIndex(*mode)
    x = np.atleast_2d(np.asarray(x, dtype=float))
    rad = np.linalg.norm(x, axis=-1)
    if np.any(np.abs(rad - R) <= standoff * R):
        raise TooCloseToSurface("evaluation point inside the quadrature standoff")
    deg = degree or max(60, 4 * mode.n + 40)
    q = sphere_quadrature(deg)
    r_hat, _, _ = unit_vectors(q.theta, q.phi)
    y = R * r_hat
    dens = vsh(mode, q.theta, q.phi) * (q.weights * R * R)[:, None]
    out = np.empty(x.shape, dtype=complex)
    for i, xi in enumerate(x):
        G = kupradze(medium, xi[None, :] - y)
        out[i] = np.einsum("kij,kj->i", G, dens)
    return out


# --------------------------------------------------------------------------
# analytic fields and finite-difference checks


def _cart_to_angles(x):
    r = np.linalg.norm(x, axis=-1)
    theta = np.arccos(np.clip(x[..., 2] / r, -1.0, 1.0))
    phi = np.mod(np.arctan2(x[..., 1], x[..., 0]), 2 * np.pi)
    return r, theta, phi


def layer_field(mode, medium, R, x, branch=None):
    """Analytic single layer of ``mode`` at Cartesian points (..., 3).

    ``branch="exterior"`` (or ``"interior"``) forces one radial expression
    for all points, continuing it analytically across ``|x| = R``; this is
    what one-sided difference quotients at the surface need.
    """
    if not isinstance(mode, ModeIndex):
        mode = ModeIndex(*mode)
    x = np.asarray(x, dtype=float)
    flat = x.reshape(-1, 3)
    r, th, ph = _cart_to_angles(flat)
    out = np.zeros(flat.shape, dtype=complex)
    cache = {}
    for i in range(len(flat)):
        key = float(r[i])
        if key not in cache:
            region = branch or ("exterior" if key >= R else "interior")
            fn = _weights_exterior if region == "exterior" else _weights_interior
            cache[key] = fn(mode, medium, R, key)
        for kind, wgt in cache[key].items():
            out[i] += wgt * vsh(ModeIndex(mode.n, mode.m, kind), th[i], ph[i])
    return out.reshape(x.shape)


def _jacobian(field_fn, x, h):
    """(..., 3 components, 3 directions) by fourth-order central differences."""
    x = np.asarray(x, dtype=float)
    J = np.zeros(x.shape[:-1] + (3, 3), dtype=complex)
    c = ((-2, 1.0), (-1, -8.0), (1, 8.0), (2, -1.0))
    for d in range(3):
        e = np.zeros(3)
        e[d] = h
        J[..., :, d] = sum(w * field_fn(x + s * e) for s, w in c) / (12 * h)
    return J


def fd_traction(field_fn, lam, mu, x, h=1e-4):
    """Traction ``lam div(u) nu + mu (grad u + grad u^T) nu`` with ``nu = x/|x|``."""
    x = np.asarray(x, dtype=float)
    nu = x / np.linalg.norm(x, axis=-1, keepdims=True)
    J = _jacobian(field_fn, x, h)
    div = np.trace(J, axis1=-2, axis2=-1)
    sym = J + np.swapaxes(J, -1, -2)
    return lam * div[..., None] * nu + mu * np.einsum("...ij,...j->...i", sym, nu)


def fd_pde_residual(field_fn, lam, mu, omega, x, h):
    """``mu Lap u + (lam+mu) grad div u + omega^2 u`` by second-order differences."""
    x = np.asarray(x, dtype=float)
    u0 = field_fn(x)
    lap = np.zeros_like(u0)
    H = np.zeros(x.shape[:-1] + (3, 3, 3), dtype=complex)  # comp, d1, d2
    E = np.eye(3) * h
    for a in range(3):
        up, um = field_fn(x + E[a]), field_fn(x - E[a])
        H[..., :, a, a] = (up - 2 * u0 + um) / h ** 2
        for b in range(a + 1, 3):
            cross = (field_fn(x + E[a] + E[b]) - field_fn(x + E[a] - E[b])
                     - field_fn(x - E[a] + E[b]) + field_fn(x - E[a] - E[b])) / (4 * h * h)
            H[..., :, a, b] = cross
            H[..., :, b, a] = cross
    lap = np.trace(H, axis1=-2, axis2=-1)
    graddiv = np.einsum("...iij->...j", H)
    return mu * lap + (lam + mu) * graddiv + omega ** 2 * u0


def project_on_modes(values, n, m, quad, kinds=("T", "I", "N")):
    """Coefficients of sphere samples on the unit-sphere harmonics of degree n."""
    out = {}
    for kind in kinds:
        md = ModeIndex(n, m, kind)
        V = vsh(md, quad.theta, quad.phi)
        out[kind] = np.sum(np.conj(V) * values * quad.weights[:, None]) / vsh_norm2(md)
    return out


# --------------------------------------------------------------------------
# Hessian-of-Helmholtz integrals against surface densities


def _j_second(n, z):
    # from the spherical Bessel equation
    j = sph_bessel_j(n, z).to_complex()
    jd = sph_deriv("J", n, z).to_complex()
    return -2 * jd / z - (1 - n * (n + 1) / z ** 2) * j


def hessian_integral_closed_form(n, k, R, x_radius, density):
    """Closed-form I/N weights of ``int_{S_R} Hess Phi(x - y) . g(y) ds``.

    ``Phi = -exp(ik|x|)/(4 pi |x|)`` and ``|x| > R``.  ``density`` is
    ``"grad"`` (surface gradient of ``Y_n^m``), ``"normal"`` (``Y_n^m nu``) or
    ``"curl"`` (surface gradient crossed with ``nu``, which integrates to zero).
    Returns ``{"I": w, "N": w}`` on the unit-sphere harmonics of degree ``n``.
    """
    if density == "curl":
        return {"I": 0j, "N": 0j}
    t = k * R
    hm = sph_hankel1(n - 1, k * x_radius).to_complex()
    hp = sph_hankel1(n + 1, k * x_radius).to_complex()
    jm, jp = sph_bessel_j(n - 1, t).to_complex(), sph_bessel_j(n + 1, t).to_complex()
    jmd, jpd = sph_deriv("J", n - 1, t).to_complex(), sph_deriv("J", n + 1, t).to_complex()
    d = 2 * n + 1
    if density == "grad":
        a = jmd * t * n * (n + 1) / d - jm * n * (n + 1) * (n - 1) / d
        b = jpd * t * n * (n + 1) / d + jp * n * (n + 1) * (n + 2) / d
    elif density == "normal":
        a = (jm - jmd * t) * (n - 1) / d + _j_second(n - 1, t) * t * t / d
        b = (jpd * t - jp) * (n + 2) / d + _j_second(n + 1, t) * t * t / d
    else:
        raise ValueError(f"unknown density {density!r}")
    return {"I": -1j * k * hm * a, "N": -1j * k * hp * b}


def hessian_integral_quadrature(n, m, k, R, x, density, degree=None):
    """Direct quadrature of ``int_{S_R} Hess Phi(x - y) . g(y) ds`` at points x."""
    from .harmonics import surf_grad_ylm, ylm

    x = np.atleast_2d(np.asarray(x, dtype=float))
    q = sphere_quadrature(degree or max(60, 4 * n + 40))
    r_hat, _, _ = unit_vectors(q.theta, q.phi)
    if density == "grad":
        g = surf_grad_ylm(n, m, q.theta, q.phi)
    elif density == "normal":
        g = ylm(n, m, q.theta, q.phi)[:, None] * r_hat
    elif density == "curl":
        g = np.cross(surf_grad_ylm(n, m, q.theta, q.phi), r_hat)
    else:
        raise ValueError(f"unknown density {density!r}")
    g = g * (q.weights * R * R)[:, None]
    out = np.empty(x.shape, dtype=complex)
    for i, xi in enumerate(x):
        d = xi[None, :] - R * r_hat
        r = np.linalg.norm(d, axis=-1)
        dh = d / r[:, None]
        _, d1, d2 = _phi_derivs(k, r)
        # Hess(e^{ikr}/r) with Phi = -that / (4 pi)
        dd = np.einsum("ki,kj->kij", dh, dh)
        H = -(d2[:, None, None] * dd + (d1 / r)[:, None, None] * (np.eye(3) - dd)) / (4 * np.pi)
        out[i] = np.einsum("kij,kj->i", H, g)
    return out
