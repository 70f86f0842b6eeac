"""Scalar and vector spherical harmonics on the unit sphere.

Conventions
-----------
``Y_n^m`` are L2-orthonormal complex harmonics with the Condon-Shortley
phase.  Vector harmonics are indexed by the degree ``n`` of the scalar
harmonic they are built from::

    T  = grad_S Y_n^m x nu              |T|^2  = n(n+1)
    I  = grad_S Y_n^m + n Y_n^m nu        |I|^2  = n(2n+1)   (order n-1)
    N  = -grad_S Y_n^m + (n+1) Y_n^m nu   |N|^2  = (n+1)(2n+1) (order n+1)

so ``ModeIndex(n, m, "I")`` is the field of order ``n - 1`` and
``ModeIndex(n, m, "N")`` the one of order ``n + 1``.
"""
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DegreeTooLarge, InvalidOrder
from .specfun import N_MAX

__all__ = [
    "ModeIndex",
    "SpherePoint",
    "SphereQuadrature",
    "sphere_quadrature",
    "ylm",
    "ylm_and_dtheta",
    "surf_grad_ylm",
    "vsh",
    "unit_vectors",
    "coeff_vectors",
    "verify_prop_identities",
    "vsh_norm2",
]


@dataclass(frozen=True)
class ModeIndex:
    n: int
    m: int
    kind: str = "T"

    def __post_init__(self):
        if self.kind not in ("T", "I", "N"):
            raise InvalidOrder(f"unknown mode kind {self.kind!r}")
        if self.n < 0 or abs(self.m) > self.n:
            raise InvalidOrder(f"invalid (n, m) = ({self.n}, {self.m})")
        if self.kind in ("T", "I") and self.n < 1:
            raise InvalidOrder(f"{self.kind} modes need n >= 1")


@dataclass(frozen=True)
class SpherePoint:
    theta: float
    phi: float

    def __post_init__(self):
        if not 0.0 <= self.theta <= np.pi:
            raise ValueError("theta outside [0, pi]")
        if not 0.0 <= self.phi < 2 * np.pi:
            raise ValueError("phi outside [0, 2 pi)")


@dataclass(frozen=True)
class SphereQuadrature:
    """Tensor Gauss-Legendre (cos theta) x trapezoid (phi) rule."""

    theta: np.ndarray
    phi: np.ndarray
    weights: np.ndarray
    degree: int

    def integrate(self, values):
        """Integrate samples whose last axis runs over the nodes."""
        return np.tensordot(values, self.weights, axes=([-1], [0]))


@lru_cache(maxsize=64)
def sphere_quadrature(degree):
    """Quadrature exact for spherical polynomials up to ``degree``."""
    if degree < 0:
        raise ValueError("degree must be non-negative")
    if degree > 2 * N_MAX:
        raise DegreeTooLarge(f"degree {degree} exceeds {2 * N_MAX}")
    nt = (degree + 2) // 2
    nphi = degree + 1
    x, wx = np.polynomial.legendre.leggauss(nt)
    theta = np.arccos(x)
    phi = 2 * np.pi * np.arange(nphi) / nphi
    T, P = np.meshgrid(theta, phi, indexing="ij")
    W = np.outer(wx, np.full(nphi, 2 * np.pi / nphi))
    out = SphereQuadrature(T.ravel(), P.ravel(), W.ravel(), degree)
    for a in (out.theta, out.phi, out.weights):
        a.setflags(write=False)
    return out


def _legendre_column(n, m, theta):
    """Normalized associated Legendre value of degree n, order m >= 0 (CS phase).

    The normalization makes ``P e^{i m phi}`` orthonormal on the sphere.
    Uses sectoral seeding then the three-term recurrence in degree.
    """
    theta = np.asarray(theta, dtype=float)
    if m > n:
        return np.zeros(theta.shape)
    x, s = np.cos(theta), np.sin(theta)
    pmm = np.full(theta.shape, 1.0 / np.sqrt(4 * np.pi))
    for k in range(1, m + 1):
        pmm = -np.sqrt((2 * k + 1) / (2.0 * k)) * s * pmm
    if n == m:
        return pmm
    prev, cur = pmm, np.sqrt(2 * m + 3.0) * x * pmm
    for l in range(m + 2, n + 1):
        a = np.sqrt((4.0 * l * l - 1) / (l * l - m * m))
        b = np.sqrt(((l - 1.0) ** 2 - m * m) / (4.0 * (l - 1) ** 2 - 1))
        prev, cur = cur, a * (x * cur - b * prev)
    return cur


def _check_nm(n, m):
    if n < 0 or abs(m) > n:
        raise InvalidOrder(f"invalid (n, m) = ({n}, {m})")


def ylm_and_dtheta(n, m, theta, phi):
    """``Y_n^m`` and ``dY_n^m/dtheta`` at arrays of angles."""
    _check_nm(n, m)
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    am = abs(m)
    x, s = np.cos(theta), np.sin(theta)
    p = _legendre_column(n, am, theta)
    # dP/dtheta from the ladder relation
    pm1 = _legendre_column(n, am + 1, theta)
    up = np.sqrt((n - am) * (n + am + 1.0))
    s_safe = np.where(s > 1e-300, s, 1e-300)
    dp = am * x / s_safe * p + up * pm1
    e = np.exp(1j * am * phi)
    y, dy = p * e, dp * e
    if m < 0:
        sign = (-1) ** am
        y, dy = sign * np.conj(y), sign * np.conj(dy)
    return y, dy


def ylm(n, m, theta, phi):
    """Orthonormal complex spherical harmonic ``Y_n^m(theta, phi)``."""
    return ylm_and_dtheta(n, m, theta, phi)[0]


def unit_vectors(theta, phi):
    """Cartesian (r_hat, theta_hat, phi_hat), each of shape (..., 3)."""
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    st, ct, sp, cp = np.sin(theta), np.cos(theta), np.sin(phi), np.cos(phi)
    r = np.stack([st * cp, st * sp, ct], axis=-1)
    t = np.stack([ct * cp, ct * sp, -st], axis=-1)
    p = np.stack([-sp, cp, np.zeros_like(st)], axis=-1)
    return r, t, p


_POLE_EPS = 1e-12


def _grad_parts(n, m, theta, phi):
    theta = np.clip(np.asarray(theta, dtype=float), _POLE_EPS, np.pi - _POLE_EPS)
    y, dy = ylm_and_dtheta(n, m, theta, phi)
    return theta, y, dy, 1j * m * y / np.sin(theta)


def surf_grad_ylm(n, m, theta, phi):
    """Surface gradient of ``Y_n^m`` in Cartesian components, shape (..., 3)."""
    theta, y, dy, dphi = _grad_parts(n, m, theta, phi)
    _, th, ph = unit_vectors(theta, phi)
    return dy[..., None] * th + dphi[..., None] * ph


def vsh(mode, theta, phi):
    """Vector spherical harmonic of ``mode`` (see module docstring)."""
    if not isinstance(mode, ModeIndex):
        mode = ModeIndex(*mode)
    n, m = mode.n, mode.m
    theta, y, dy, dphi = _grad_parts(n, m, theta, phi)
    r, th, ph = unit_vectors(theta, phi)
    grad = dy[..., None] * th + dphi[..., None] * ph
    if mode.kind == "T":
        # theta_hat x r_hat = -phi_hat, phi_hat x r_hat = theta_hat
        return -dy[..., None] * ph + dphi[..., None] * th
    if mode.kind == "I":
        return grad + n * y[..., None] * r
    return -grad + (n + 1) * y[..., None] * r


def vsh_norm2(mode):
    """Exact squared L2 norm of a vector harmonic on the unit sphere."""
    n = mode.n
    return {"T": n * (n + 1.0), "I": n * (2 * n + 1.0),
            "N": (n + 1.0) * (2 * n + 1.0)}[mode.kind]


def _inner(quad, f, g):
    """Integral of conj(f) . g over the sphere (vector or scalar samples)."""
    prod = np.conj(f) * g
    if prod.ndim == 2:
        prod = prod.sum(axis=-1)
    return np.sum(prod * quad.weights)


def coeff_vectors(n, m, quad=None):
    """Expansion vectors of ``I_{n-1}^m`` and ``N_{n+1}^m`` on scalar harmonics.

    Returns two dicts ``a[q]`` and ``c[q]`` (3-vectors) with
    ``I_{n-1}^m = sum_q a[q] Y_{n-1}^q`` and ``N_{n+1}^m = sum_q c[q] Y_{n+1}^q``.
    """
    if n < 1:
        raise InvalidOrder("coefficient vectors need n >= 1")
    _check_nm(n, m)
    quad = quad or sphere_quadrature(2 * n + 6)
    th, ph = quad.theta, quad.phi
    I = vsh(ModeIndex(n, m, "I"), th, ph)
    N = vsh(ModeIndex(n, m, "N"), th, ph)
    w = quad.weights
    a = {}
    for q in range(-(n - 1), n):
        yq = np.conj(ylm(n - 1, q, th, ph))
        a[q] = (yq[:, None] * I * w[:, None]).sum(axis=0)
    c = {}
    for q in range(-(n + 1), n + 2):
        yq = np.conj(ylm(n + 1, q, th, ph))
        c[q] = (yq[:, None] * N * w[:, None]).sum(axis=0)
    return a, c


def _vec_integral(quad, scalar, vec):
    return (scalar[:, None] * vec * quad.weights[:, None]).sum(axis=0)


def _fd_surface_grad_of_grad(p, q, theta, phi, h):
    """Surface gradient of each Cartesian component of grad_S conj(Y_p^q).

    Returns array (..., 3 components i, 3 directions) via fourth-order
    centred differences in theta and phi.
    """
    def g(t, f):
        return np.conj(surf_grad_ylm(p, q, t, f))

    c = np.array([1.0, -8.0, 8.0, -1.0]) / 12.0
    offs = (-2, -1, 1, 2)
    dth = sum(ci * g(theta + k * h, phi) for ci, k in zip(c, offs)) / h
    dph = sum(ci * g(theta, phi + k * h) for ci, k in zip(c, offs)) / h
    _, th, ph = unit_vectors(theta, phi)
    st = np.sin(theta)
    return (dth[..., :, None] * th[..., None, :]
            + (dph / st[..., None])[..., :, None] * ph[..., None, :])


def verify_prop_identities(which, n, m, fd_step=2e-4, pole_offset=1e-3):
    """Check the integral identities for products with ``Y_n^m``.

    ``which`` selects the family:

    * ``"P1"``: integrals of conj(Y_p^q) Y_n^m nu and conj(Y_p^q) grad_S Y_n^m,
      plus the relation between the a and c coefficient vectors;
    * ``"P2"``: integrals of (grad_S conj(Y_p^q) . grad_S Y_n^m) nu;
    * ``"P3"``: integrals of grad_S(grad_S conj(Y_p^q)) . grad_S Y_n^m with the
      inner surface gradient taken by finite differences.

    Degrees ``p = n - 1, n + 1`` are compared with the closed forms and
    ``p = n, n + 2`` must vanish.  Returns the maximal absolute residual.
    """
    if n < 1:
        raise InvalidOrder("identities need n >= 1")
    _check_nm(n, m)
    quad = sphere_quadrature(2 * n + 6)
    th, ph = quad.theta, quad.phi
    if which == "P3":
        # keep every finite-difference stencil away from the poles
        if np.min(np.minimum(th, np.pi - th)) < 2 * fd_step + pole_offset:
            raise ValueError("quadrature node too close to a pole")
    a, c = coeff_vectors(n, m, quad)
    r, _, _ = unit_vectors(th, ph)
    y = ylm(n, m, th, ph)
    gy = surf_grad_ylm(n, m, th, ph)
    res = 0.0
    deg = {n - 1: ("a", a), n + 1: ("c", c)}
    for p in (n - 1, n, n + 1, n + 2):
        if p < 0:
            continue
        for q in range(-p, p + 1):
            yb = np.conj(ylm(p, q, th, ph))
            if which == "P1":
                lhs1 = _vec_integral(quad, yb * y, r)
                lhs2 = _vec_integral(quad, yb, gy)
                if p == n - 1:
                    rhs1, rhs2 = a[q] / (2 * n + 1), (n + 1) / (2 * n + 1) * a[q]
                elif p == n + 1:
                    rhs1, rhs2 = c[q] / (2 * n + 1), -n / (2 * n + 1) * c[q]
                else:
                    rhs1 = rhs2 = 0.0
                res = max(res, np.max(np.abs(lhs1 - rhs1)), np.max(np.abs(lhs2 - rhs2)))
            elif which == "P2":
                gb = np.conj(surf_grad_ylm(p, q, th, ph))
                dot = np.sum(gb * gy, axis=-1)
                lhs = _vec_integral(quad, dot, r)
                if p == n - 1:
                    rhs = (n + 1) * (n - 1) / (2 * n + 1) * a[q]
                elif p == n + 1:
                    rhs = n * (n + 2) / (2 * n + 1) * c[q]
                else:
                    rhs = 0.0
                res = max(res, np.max(np.abs(lhs - rhs)))
            elif which == "P3":
                G = _fd_surface_grad_of_grad(p, q, th, ph, fd_step)
                integrand = np.einsum("kij,kj->ki", G, gy)
                lhs = (integrand * quad.weights[:, None]).sum(axis=0)
                if p == n - 1:
                    rhs = -n * (n + 1) * (n - 1) / (2 * n + 1) * a[q]
                elif p == n + 1:
                    rhs = n * (n + 1) * (n + 2) / (2 * n + 1) * c[q]
                else:
                    rhs = 0.0
                res = max(res, np.max(np.abs(lhs - rhs)))
            else:
                raise ValueError(f"unknown identity family {which!r}")
    if which == "P1" and n >= 2:
        # a_{n-1,m}^q = (2n+1)/(2n-1) conj(c_{n,q}^m): compare with N built on degree n-1
        for q in range(-(n - 1), n):
            _, cq = coeff_vectors(n - 1, q, quad)
            rhs = (2 * n + 1) / (2 * n - 1) * np.conj(cq[m])
            res = max(res, np.max(np.abs(a[q] - rhs)))
    return float(res)
