"""Polariton resonance of a homogeneous ball with a lossy negative shear modulus.

A ball ``B_R`` with Lamé pair ``(lam_hat, mu_hat)`` sits in a matrix
``(lam, mu)``.  For a source whose Newtonian potential is a sum of
``f_{1,n,m} j_n(k_s|x|) T_n^m`` the transmission problem decouples into one
2x2 system per degree for the interior and exterior layer densities
``(psi_1, psi_2)``.  Only ``mu_hat`` enters; ``lam_hat`` never does.

Notation: ``J(t) = t j_n'(t) - j_n(t)`` and ``H(t) = t h_n'(t) - h_n(t)``
(:func:`elasto_np.specfun.acute`); hatted wavenumber ``kh = omega/sqrt(mu_hat)``.
"""
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import (
    ConfigInvalid,
    ModeMismatch,
    NoBracket,
    ResonanceNotAchieved,
    SingularSystem,
)
from .layer_coeffs import ElasticMedium
from .specfun import ScaledFnValue, acute, sph_bessel_j, sph_deriv, sph_hankel1

__all__ = [
    "CoreFreeConfig",
    "SourceSpectrum",
    "CoreFreeSolution",
    "make_corefree",
    "corefree_system",
    "solve_corefree_mode",
    "psi_tilde",
    "psi1_closed_form",
    "resonance_quantity",
    "solve_corefree",
    "mode_energy",
    "dissipation_energy",
    "sweep_im_mu",
    "tune_re_mu",
    "tune_p1",
    "p1_profile",
]


@dataclass(frozen=True)
class CoreFreeConfig:
    R: float
    exterior: ElasticMedium
    shell: ElasticMedium

    @property
    def omega(self):
        return self.exterior.omega

    def with_mu_hat(self, mu_hat):
        return replace(self, shell=self.shell.with_mu(mu_hat))


def make_corefree(R, lam, mu, lam_hat, mu_hat, omega):
    """Validated :class:`CoreFreeConfig`.

    The matrix must be real and strongly convex; the shell must not be
    active (``Im mu_hat >= 0``).
    """
    if not R > 0:
        raise ConfigInvalid("R must be positive")
    if not omega > 0:
        raise ConfigInvalid("omega must be positive")
    if complex(lam).imag or complex(mu).imag:
        raise ConfigInvalid("matrix moduli must be real")
    if not (mu > 0 and 3 * lam + 2 * mu > 0):
        raise ConfigInvalid("matrix moduli violate strong convexity")
    if complex(mu_hat).imag < 0:
        raise ConfigInvalid("Im mu_hat must be nonnegative")
    if complex(mu_hat) == 0:
        raise ConfigInvalid("mu_hat must be nonzero")
    return CoreFreeConfig(float(R), ElasticMedium(lam, mu, omega), ElasticMedium(lam_hat, mu_hat, omega))


@dataclass(frozen=True)
class SourceSpectrum:
    """T-mode coefficients ``f_{1,n,m}`` of the Newtonian potential.

    Values may be complex or :class:`ScaledFnValue` (for coefficients that
    overflow doubles, as for point-like sources).
    """

    entries: dict
    n_min: int = 1

    def scaled(self, key):
        v = self.entries[key]
        return v if isinstance(v, ScaledFnValue) else ScaledFnValue.from_complex(complex(v))

    def degrees(self):
        return sorted({n for n, _ in self.entries})


@dataclass
class CoreFreeSolution:
    modes: dict  # (n, m) -> (psi_1, psi_2) as ScaledFnValue
    psi_tilde: dict  # n -> complex
    energy: float = 0.0
    diagnostics: dict = field(default_factory=dict)


def _radial(n, cfg):
    k, kh, R = cfg.exterior.k_s, cfg.shell.k_s, cfg.R
    t, th = k * R, kh * R
    return dict(
        k=k, kh=kh, R=R,
        j=sph_bessel_j(n, t), h=sph_hankel1(n, t),
        jh_=sph_bessel_j(n, th), hh=sph_hankel1(n, th),
        J=acute("J", n, t), H=acute("H", n, t), Jh=acute("J", n, th),
        jd=sph_deriv("J", n, t), hd=sph_deriv("H", n, t), jhd=sph_deriv("J", n, th),
    )


def corefree_system(n, cfg, variant="derived"):
    """2x2 matrix of the degree-``n`` transmission system and its unit-source rhs.

    Parameters
    ----------
    variant : {"derived", "printed"}
        ``"derived"`` uses the interior single layer with ``1/mu_hat`` and the
        traction entries with a single power of ``R``.  ``"printed"`` uses
        ``1/mu`` in ``a11`` and ``R**2`` in the second row, which coincide
        with the derived entries only when ``R = 1`` and ``mu_hat = mu``.

    Returns
    -------
    A : ndarray (2, 2)
    rhs : ndarray (2,)
        Right-hand side for ``f_{1,n,m} = 1``: ``(j_n(k_s R), mu J(k_s R)/R)``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    r = _radial(n, cfg)
    k, kh, R = r["k"], r["kh"], r["R"]
    mu, muh = cfg.exterior.mu, cfg.shell.mu
    if variant == "derived":
        a11 = -1j * kh * R * R * (r["jh_"] * r["hh"]).to_complex() / muh
        a21 = -1j * kh * R * (r["hh"] * r["Jh"]).to_complex()
        a22 = 1j * k * R * (r["j"] * r["H"]).to_complex()
    elif variant == "printed":
        a11 = -1j * kh * R * R * (r["jh_"] * r["hh"]).to_complex() / mu
        a21 = -1j * kh * R * R * (r["hh"] * r["Jh"]).to_complex()
        a22 = -1 + 1j * k * R * R * (r["h"] * r["J"]).to_complex()
    else:
        raise ValueError(f"unknown variant {variant!r}")
    a12 = 1j * k * R * R * (r["j"] * r["h"]).to_complex() / mu
    A = np.array([[a11, a12], [a21, a22]], dtype=complex)
    return A, (r["j"], r["J"] * (mu / R))


def solve_corefree_mode(n, cfg, f_1nm, variant="derived", return_info=False):
    """Densities ``(psi_1, psi_2)`` for one T-mode source coefficient.

    The system is solved for a unit source and scaled by ``f_1nm``, so
    coefficients beyond double range are carried as :class:`ScaledFnValue`.
    """
    A, (rj, rg) = corefree_system(n, cfg, variant)
    # common scale of the rhs: j and J share the magnitude of j_n
    base = rj if not rj.is_zero else rg
    b = np.array([(rj / base).to_complex(), (rg / base).to_complex()])
    det = A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]
    if not np.isfinite(det) or abs(det) < 1e-300 * max(1.0, np.abs(A).max() ** 2):
        raise SingularSystem(f"degree {n}: singular transmission system", np.inf)
    x = np.linalg.solve(A, b)
    res = np.linalg.norm(A @ x - b) / max(np.linalg.norm(b), 1e-300)
    f = f_1nm if isinstance(f_1nm, ScaledFnValue) else ScaledFnValue.from_complex(complex(f_1nm))
    psi = tuple(ScaledFnValue.from_complex(complex(v)) * base * f for v in x)
    if return_info:
        return psi, {"condition": float(np.linalg.cond(A)), "residual": float(res)}
    return tuple(p.to_complex() for p in psi)


def psi_tilde(n, cfg):
    """Closed-form resonance denominator for degree ``n``.

    ``(((mu - mu_hat) j(kh R) + kh mu_hat R j'(kh R)) h(k R)
    - k mu R j(kh R) h'(k R)) k kh R^3 j(k R) h(kh R)``.
    It equals ``-mu mu_hat`` times the determinant of the derived system.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    r = _radial(n, cfg)
    k, kh, R = r["k"], r["kh"], r["R"]
    mu, muh = cfg.exterior.mu, cfg.shell.mu
    bracket = ((r["jh_"] * r["h"]) * (mu - muh) + (r["jhd"] * r["h"]) * (kh * muh * R)
               - (r["jh_"] * r["hd"]) * (k * mu * R))
    return (bracket * r["j"] * r["hh"] * (k * kh * R ** 3)).to_complex()


def psi1_closed_form(n, cfg, f_1nm, variant="corrected"):
    """``psi_1`` from :func:`psi_tilde`.

    ``"corrected"`` returns ``mu mu_hat f j_n(k_s R)/psi_tilde``, which the
    derived system reproduces; ``"printed"`` drops the ``mu mu_hat`` factor.
    """
    fac = {"corrected": cfg.exterior.mu * cfg.shell.mu, "printed": 1.0}[variant]
    f = f_1nm if isinstance(f_1nm, ScaledFnValue) else ScaledFnValue.from_complex(complex(f_1nm))
    return (f * sph_bessel_j(n, cfg.exterior.k_s * cfg.R) * fac / psi_tilde(n, cfg)).to_complex()


def resonance_quantity(n0, cfg):
    """``Im(mu_hat) / |psi_tilde_{n0}|^2`` (independent of ``m``)."""
    ims = cfg.shell.mu.imag
    if ims == 0:
        return 0.0
    return ims / abs(psi_tilde(n0, cfg)) ** 2


def mode_energy(n, cfg, psi1):
    """Dissipated energy of one interior T-mode with density ``psi1``.

    ``Im(a21 conj(a11)) |psi1|^2 R^2 n(n+1)``: the interior traction times the
    conjugate interior displacement on the boundary, integrated over the sphere.
    """
    A, _ = corefree_system(n, cfg)
    p = psi1 if isinstance(psi1, ScaledFnValue) else ScaledFnValue.from_complex(complex(psi1))
    w = (A[1, 0] * np.conj(A[0, 0])).imag * cfg.R ** 2 * n * (n + 1)
    if p.is_zero or w == 0:
        return 0.0
    return float(w * np.exp(2 * p.log_abs()))


def solve_corefree(cfg, src, variant="derived"):
    """Solve every mode of ``src`` and accumulate the dissipated energy."""
    modes, tildes, diag = {}, {}, {}
    energy = 0.0
    for key in sorted(src.entries):
        n, _ = key
        psi, info = solve_corefree_mode(n, cfg, src.scaled(key), variant, return_info=True)
        modes[key] = psi
        diag[key] = info
        if n not in tildes:
            tildes[n] = psi_tilde(n, cfg)
        energy += mode_energy(n, cfg, psi[0])
    return CoreFreeSolution(modes, tildes, energy, diag)


def dissipation_energy(cfg, src, solution):
    """Energy of a previously computed solution; modes must match ``src``."""
    if set(solution.modes) != set(src.entries):
        raise ModeMismatch("solution modes differ from the source spectrum")
    return sum(mode_energy(key[0], cfg, solution.modes[key][0]) for key in solution.modes)


def sweep_im_mu(n0, cfg, im_values):
    """Resonance quantity along ``Im mu_hat`` at fixed ``Re mu_hat``."""
    re = cfg.shell.mu.real
    return np.array([resonance_quantity(n0, cfg.with_mu_hat(complex(re, v))) for v in im_values])


def _grid_then_golden(fun, lo, hi, points, xtol=1e-14):
    xs = np.linspace(lo, hi, points)
    vals = np.array([fun(x) for x in xs])
    i = int(np.argmin(vals))
    if i == 0 or i == points - 1:
        raise NoBracket(f"minimum on the boundary of [{lo}, {hi}]")
    res = minimize_scalar(fun, bracket=(xs[i - 1], xs[i], xs[i + 1]), method="golden",
                          tol=xtol)
    x = float(res.x) if res.fun <= vals[i] else float(xs[i])
    return x, xs, vals


def tune_re_mu(n0, cfg_template, search=(-3.0, -1.0), im_mu=1e-8, points=2001):
    """``Re mu_hat`` minimizing ``|psi_tilde_{n0}|`` at small fixed ``Im mu_hat``.

    A uniform grid locates the basin, then golden-section search refines it.

    Raises
    ------
    NoBracket
        If the grid minimum sits on an endpoint of ``search``.
    """
    def fun(x):
        return abs(psi_tilde(n0, cfg_template.with_mu_hat(complex(x, im_mu))))

    x, _, _ = _grid_then_golden(fun, search[0], search[1], points)
    return x


def p1_profile(n0, cfg_template, M, p_values):
    """``|psi_tilde_{n0}|`` and the resonance quantity for ``mu_hat = -mu + i/M + p``."""
    mu = cfg_template.exterior.mu.real
    out = []
    for p in p_values:
        cfg = cfg_template.with_mu_hat(complex(-mu + p, 1.0 / M))
        out.append((abs(psi_tilde(n0, cfg)), resonance_quantity(n0, cfg)))
    return np.array(out)


def tune_p1(n0, cfg_template, M, search=None, step=1e-4, strict=True):
    """Real shift ``p`` with ``mu_hat = -mu + i/M + p`` minimizing ``|psi_tilde_{n0}|``.

    Parameters
    ----------
    search : (float, float), optional
        Interval for ``p``; default ``[-10/n0, 10/n0]``.
    step : float
        Coarse grid spacing before golden-section refinement.
    strict : bool
        Raise :class:`ResonanceNotAchieved` when the quantity at the
        minimizer does not exceed ``M``.
    """
    mu = cfg_template.exterior.mu.real
    lo, hi = search or (-10.0 / n0, 10.0 / n0)
    points = int(round((hi - lo) / step)) + 1

    def fun(p):
        return abs(psi_tilde(n0, cfg_template.with_mu_hat(complex(-mu + p, 1.0 / M))))

    p, _, _ = _grid_then_golden(fun, lo, hi, points, xtol=1e-15)
    q = resonance_quantity(n0, cfg_template.with_mu_hat(complex(-mu + p, 1.0 / M)))
    if strict and not q > M:
        raise ResonanceNotAchieved(f"quantity {q:.3g} does not exceed M = {M:.3g}", q)
    return p
