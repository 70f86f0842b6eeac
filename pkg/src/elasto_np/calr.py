"""Core-shell-matrix structure and cloaking by anomalous localized resonance.

Core ``B_{r_i}`` with ``(lam_c, mu_c)``, shell ``B_{r_e} minus B_{r_i}`` with
``(lam_hat, mu_hat)``, matrix ``(lam, mu)``.  For T-mode sources the
transmission problem reduces to one 4x4 system per degree for the densities
``(phi_1, ..., phi_4)`` on the core boundary (core side), core boundary
(shell side), shell boundary (shell side) and shell boundary (matrix side).

Subscripts follow ``x_{n s r}``: ``s = 0, 1, 2`` selects the matrix, core or
shell wavenumber and ``r = i, e`` the radius ``r_i`` or ``r_e``; e.g.
``j2i = j_n(k_hat r_i)``.  Capital ``J, H`` are the combinations
``t f'(t) - f(t)``.
"""
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import (
    ConfigInvalid,
    OnInterface,
    OrderTooSmall,
    SingularSystem,
    SourceInsideShell,
    TuningFailed,
)
from .harmonics import ModeIndex, vsh
from .layer_coeffs import ElasticMedium
from .resonance import SourceSpectrum
from .specfun import (
    ScaledFnValue,
    acute,
    grave_remainder,
    grave_remainder_deriv,
    log_double_factorial,
    sph_bessel_j,
    sph_hankel1,
)

__all__ = [
    "CoreShellConfig",
    "CoreShellSolution",
    "EtaGamma",
    "make_coreshell",
    "critical_radius",
    "eta_gamma",
    "assemble_coreshell",
    "solve_coreshell_mode",
    "solve_coreshell",
    "denominator_d",
    "denominator_d_printed",
    "closed_form_coefficients",
    "q2",
    "q2_condition",
    "d_profile",
    "tune_p2",
    "tuned_config",
    "point_source_spectrum",
    "source_inside_critical",
    "dissipation_energy_coreshell",
    "field_eval",
    "scattered_field",
    "boundedness_diagnostic",
]


@dataclass(frozen=True)
class CoreShellConfig:
    r_i: float
    r_e: float
    core: ElasticMedium
    shell: ElasticMedium
    exterior: ElasticMedium

    @property
    def omega(self):
        return self.exterior.omega

    @property
    def rho(self):
        return self.r_i / self.r_e

    @property
    def r_star(self):
        return float(np.sqrt(self.r_e ** 3 / self.r_i))

    @property
    def bound_radius(self):
        return self.r_e ** 3 / self.r_i ** 2

    def with_mu_hat(self, mu_hat):
        return replace(self, shell=self.shell.with_mu(mu_hat))


def make_coreshell(r_i, r_e, lam, mu, lam_c, mu_c, lam_hat, mu_hat, omega):
    """Validated :class:`CoreShellConfig`."""
    if not 0 < r_i < r_e:
        raise ConfigInvalid("need 0 < r_i < r_e")
    if not omega > 0:
        raise ConfigInvalid("omega must be positive")
    if complex(lam).imag or complex(mu).imag or not (mu > 0 and 3 * lam + 2 * mu > 0):
        raise ConfigInvalid("matrix moduli must be real and strongly convex")
    if complex(mu_c) == 0 or complex(mu_hat) == 0:
        raise ConfigInvalid("shear moduli must be nonzero")
    if complex(mu_hat).imag < 0 or complex(mu_c).imag < 0:
        raise ConfigInvalid("Im of the shear moduli must be nonnegative")
    return CoreShellConfig(float(r_i), float(r_e), ElasticMedium(lam_c, mu_c, omega),
                           ElasticMedium(lam_hat, mu_hat, omega), ElasticMedium(lam, mu, omega))


def critical_radius(cfg):
    """``(r_star, bound_radius) = (sqrt(r_e^3/r_i), r_e^3/r_i^2)``."""
    return cfg.r_star, cfg.bound_radius


@dataclass(frozen=True)
class EtaGamma:
    eta: complex
    gamma: complex


def eta_gamma(n, k, r):
    """``eta = n-1 + n j' - j`` and ``gamma = n+2 + (n+1) h' + h`` in remainder form.

    ``J(kr) = t^n/(2n+1)!! eta`` and ``H(kr) = -(2n-1)!!/(i t^(n+1)) gamma``.
    """
    t = k * r
    jg, jgd = grave_remainder("J", n, t), grave_remainder_deriv("J", n, t)
    hg, hgd = grave_remainder("H", n, t), grave_remainder_deriv("H", n, t)
    return EtaGamma(n - 1 + n * jgd - jg, n + 2 + (n + 1) * hgd + hg)


def _radials(n, cfg):
    k, kc, kh = cfg.exterior.k_s, cfg.core.k_s, cfg.shell.k_s
    ri, re = cfg.r_i, cfg.r_e
    out = dict(k=k, kc=kc, kh=kh)
    for tag, t in (("0e", k * re), ("1i", kc * ri), ("2i", kh * ri), ("2e", kh * re)):
        out["j" + tag] = sph_bessel_j(n, t)
        out["h" + tag] = sph_hankel1(n, t)
        out["J" + tag] = acute("J", n, t)
        out["H" + tag] = acute("H", n, t)
    return out


def _c(v):
    return v.to_complex()


def _unit_system(n, cfg, variant="derived"):
    """Matrix and rhs for ``f = 1``; rhs returned as (base, rhs/base)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    r = _radials(n, cfg)
    k, kc, kh = r["k"], r["kc"], r["kh"]
    ri, re = cfg.r_i, cfg.r_e
    mu, muc, muh = cfg.exterior.mu, cfg.core.mu, cfg.shell.mu
    A = np.zeros((4, 4), dtype=complex)
    A[0, 0] = -1j * kc * ri ** 2 * _c(r["j1i"] * r["h1i"]) / muc
    A[1, 0] = -1j * kc * ri * _c(r["J1i"] * r["h1i"])
    A[2, 3] = 1j * k * re ** 2 * _c(r["j0e"] * r["h0e"]) / mu
    A[3, 3] = 1j * k * re * _c(r["j0e"] * r["H0e"])
    A[2, 1] = -1j * kh * ri ** 2 * _c(r["j2i"] * r["h2e"]) / muh
    A[2, 2] = -1j * kh * re ** 2 * _c(r["j2e"] * r["h2e"]) / muh
    A[3, 2] = -1j * kh * re * _c(r["J2e"] * r["h2e"])
    if variant == "derived":
        A[0, 1] = 1j * kh * ri ** 2 * _c(r["j2i"] * r["h2i"]) / muh
        A[0, 2] = 1j * kh * re ** 2 * _c(r["j2i"] * r["h2e"]) / muh
        A[1, 1] = 1j * kh * ri * _c(r["j2i"] * r["H2i"])
        A[1, 2] = 1j * kh * (re ** 2 / ri) * _c(r["J2i"] * r["h2e"])
        A[3, 1] = -1j * kh * (ri ** 2 / re) * _c(r["j2i"] * r["H2e"])
    elif variant == "printed":
        A[0, 1] = -1j * kh * ri ** 2 * _c(r["j1i"] * r["h2i"]) / muh
        A[0, 2] = -1j * kh * re ** 2 * _c(r["j1i"] * r["h2e"]) / muh
        A[1, 1] = -1j * kh * ri * _c(r["j2i"] * r["H2i"])
        A[1, 2] = -1j * kh * re * _c(r["J2i"] * r["h2e"])
        A[3, 1] = -1j * kh * ri * _c(r["j2i"] * r["H2e"])
    else:
        raise ValueError(f"unknown variant {variant!r}")
    base = r["j0e"]
    b = np.array([0, 0, 1.0, _c(r["J0e"] / base) * mu / re], dtype=complex)
    return A, base, b, r


def assemble_coreshell(n, cfg, f_1nm=1.0, variant="derived"):
    """4x4 matrix and rhs ``(0, 0, f j0e, f mu J0e / r_e)`` for degree ``n``.

    Parameters
    ----------
    variant : {"derived", "printed"}
        ``"derived"`` follows the single-layer actions: ``+i`` in
        ``a12, a13, a22, a23``, the shell Bessel factor ``j2i`` in row 1,
        and radius powers ``r_e^2/r_i`` in ``a23`` and ``r_i^2/r_e`` in
        ``a42``.  ``"printed"`` is the literal display, kept for comparison.

    Returns
    -------
    A : ndarray (4, 4)
    rhs : ndarray (4,)
        May overflow for point-like sources; :func:`solve_coreshell_mode`
        works with the scaled form instead.
    """
    A, base, b, _ = _unit_system(n, cfg, variant)
    f = f_1nm if isinstance(f_1nm, ScaledFnValue) else ScaledFnValue.from_complex(complex(f_1nm))
    return A, b * (base * f).to_complex()


@dataclass
class CoreShellModeSolution:
    n: int
    m: int
    phi: tuple  # four ScaledFnValue
    d: complex
    residual: float
    condition: float
    closed_form_deviation: float = float("nan")

    def phi_complex(self):
        return tuple(p.to_complex() for p in self.phi)


def _norm_factor(n, cfg):
    mu, muc, muh = cfg.exterior.mu, cfg.core.mu, cfg.shell.mu
    return (2 * n + 1) ** 4 * mu * muc * muh ** 2 / (n * n * cfg.r_i * cfg.r_e)


def denominator_d(n, cfg, variant="derived"):
    """Normalized determinant of the degree-``n`` system.

    ``det(A) (2n+1)^4 mu mu_c mu_hat^2 / (n^2 r_i r_e)``; for large ``n``
    this is ``(mu_hat + mu_c)(mu + mu_hat)`` plus ``O(1/n)`` and
    ``O(rho^(2n))`` corrections.
    """
    A, _, _, _ = _unit_system(n, cfg, variant)
    return complex(np.linalg.det(A)) * _norm_factor(n, cfg)


def denominator_d_printed(n, cfg):
    """The displayed closed form of ``d_{n,m}`` (product reading), unnormalized."""
    r = _radials(n, cfg)
    k, kc, kh = r["k"], r["kc"], r["kh"]
    ri, re = cfg.r_i, cfg.r_e
    mu, muc, muh = cfg.exterior.mu, cfg.core.mu, cfg.shell.mu
    den = mu * muc * muh ** 2
    first = r["H0e"] * (mu * ri) * (
        r["j1i"] * (r["H2i"] * r["j2e"] * re + r["J2i"] * r["h2e"] * ri) * muh
        - r["J1i"] * (r["h2e"] * r["j2i"] - r["h2i"] * r["j2e"]) * (muc * re))
    second = r["h0e"] * (muh * re) * (
        r["J1i"] * (r["H2e"] * r["j2i"] * re - r["J2e"] * r["h2i"] * ri) * muc
        + r["j1i"] * (r["H2i"] * r["J2e"] - r["H2e"] * r["J2i"]) * (muh * ri))
    pref = k * kc * kh ** 2 * ri ** 2 * re ** 2 / den
    return (first * pref * r["h1i"] * r["h2e"] * r["j0e"] * r["j2i"] * second / den).to_complex()


def closed_form_coefficients(n, cfg, f_1nm=1.0):
    """Displayed ``phi_tilde_i / d`` for i = 1..4 (diagnostic shadow values).

    The undefined token ``h_{n23}`` in the first numerator is read as ``h2e``.
    """
    r = _radials(n, cfg)
    k, kc, kh = r["k"], r["kc"], r["kh"]
    ri, re = cfg.r_i, cfg.r_e
    mu, muc, muh = cfg.exterior.mu, cfg.core.mu, cfg.shell.mu
    f = f_1nm if isinstance(f_1nm, ScaledFnValue) else ScaledFnValue.from_complex(complex(f_1nm))
    w0 = r["H0e"] * r["j0e"] - r["J0e"] * r["h0e"]
    t1 = (r["h2e"] * r["j0e"] * r["j2i"] * w0
          * (r["H2i"] * r["j2i"] * re - r["J2i"] * r["h2i"] * ri)) * (-1j * k * kh ** 2 * ri * re ** 2 / muh)
    t2 = (r["h1i"] * r["h2e"] * r["j0e"] * w0
          * (r["J2i"] * r["j1i"] * (muh * ri) - r["J1i"] * r["j2i"] * (muc * re))) * (
        1j * k * kc * kh * ri * re ** 2 / (muc * muh))
    t3 = (r["h1i"] * r["j2i"] * r["j0e"] * w0
          * (r["J1i"] * r["h2i"] * muc - r["H2i"] * r["j1i"] * muh)) * (
        1j * k * kc * kh * ri ** 3 * re / (muc * muh))
    a = r["J0e"] * (mu * ri) * (
        r["j1i"] * (r["H2i"] * r["j2e"] * re - r["J2i"] * r["h2e"] * ri) * muh
        + r["J1i"] * (r["h2e"] * r["j2i"] - r["h2i"] * r["j2e"]) * (muc * re))
    b = r["j0e"] * (muh * re) * (
        r["J1i"] * (r["J2e"] * r["h2i"] * ri - r["H2e"] * r["j2i"] * re) * muc
        + r["j1i"] * (r["H2e"] * r["J2i"] - r["H2i"] * r["J2e"]) * (muh * ri))
    den = muc * muh ** 2
    t4 = a * r["h1i"] * r["h2e"] * r["j2i"] * b * (1j * kc * kh ** 2 * ri ** 2 / den ** 2)
    d = denominator_d_printed(n, cfg)
    return tuple((t * f).to_complex() / d for t in (t1, t2, t3, t4))


def _solve_equilibrated(A, b):
    # rows 1 and 3 are O(1/n) against O(1) for rows 2 and 4; balance before
    # partial pivoting, then one step of refinement
    R = 1.0 / np.abs(A).max(axis=1)
    C = 1.0 / np.abs(A * R[:, None]).max(axis=0)
    As = A * R[:, None] * C[None, :]
    x = C * np.linalg.solve(As, R * b)
    return x + C * np.linalg.solve(As, R * (b - A @ x))


def solve_coreshell_mode(n, cfg, f_1nm, m=0, variant="derived", shadow=False):
    """Numeric 4x4 solve for one T-mode source coefficient.

    Rows and columns are equilibrated before LU with partial pivoting and
    one refinement step follows; ``residual`` is ``|A x - b| / |b|`` for the
    unit-source system.

    Raises
    ------
    SingularSystem
        Determinant below ``1e-300`` relative to the matrix scale.
    """
    A, base, b, _ = _unit_system(n, cfg, variant)
    det = np.linalg.det(A)
    scale = np.abs(A).max()
    if not np.isfinite(det) or abs(det) < 1e-300 * scale ** 4:
        raise SingularSystem(f"degree {n}: singular core-shell system", np.inf)
    x = _solve_equilibrated(A, b)
    res = float(np.linalg.norm(A @ x - b) / np.linalg.norm(b))
    f = f_1nm if isinstance(f_1nm, ScaledFnValue) else ScaledFnValue.from_complex(complex(f_1nm))
    phi = tuple(ScaledFnValue.from_complex(complex(v)) * base * f for v in x)
    sol = CoreShellModeSolution(n, m, phi, complex(det) * _norm_factor(n, cfg), res,
                                float(np.linalg.cond(A)))
    if shadow:
        cf = np.array(closed_form_coefficients(n, cfg, f))
        num = np.array(sol.phi_complex())
        with np.errstate(invalid="ignore", divide="ignore"):
            sol.closed_form_deviation = float(np.linalg.norm(cf - num) / np.linalg.norm(num))
    return sol


def q2(n, cfg, joining=-1):
    """The asymptotic tuning function ``q_{2,n}`` transcribed from its display.

    Parameters
    ----------
    joining : {-1, +1}
        Sign joining the two groups of the last bracket, which the display
        leaves out.  ``eta_{n11}`` is read as ``eta_{n1i}``.

    Raises
    ------
    OrderTooSmall
        For ``n < 30``, outside the asymptotic regime.
    """
    if n < 30:
        raise OrderTooSmall("q2 needs n >= 30")
    if joining not in (-1, 1):
        raise ValueError("joining must be +1 or -1")
    k, kc, kh = cfg.exterior.k_s, cfg.core.k_s, cfg.shell.k_s
    ri, re = cfg.r_i, cfg.r_e
    mu, muc, muh = cfg.exterior.mu, cfg.core.mu, cfg.shell.mu
    rho2n = cfg.rho ** (2 * n)
    e1i = eta_gamma(n, kc, ri)
    e2i = eta_gamma(n, kh, ri)
    e2e = eta_gamma(n, kh, re)
    e0e = eta_gamma(n, k, re)
    jg = lambda kk, rr: 1 + grave_remainder("J", n, kk * rr)
    hg = lambda kk, rr: 1 + grave_remainder("H", n, kk * rr)
    t1 = (muc + muh) * (mu + muh) * n * n * re * re
    t2 = (muh * ri - muc * re) * (mu * ri - muh * re) * n * n * rho2n
    t3 = muh * re * hg(k, re) * (
        muc * re * e1i.eta * (e2e.gamma * rho2n * jg(kh, ri) + hg(kh, ri) * e2e.eta)
        - muh * jg(kc, ri) * (ri * e2e.gamma * e2i.eta * rho2n - re * e2i.gamma * e2e.eta))
    t4 = mu * e0e.gamma * (
        muc * re * e1i.eta * (re * hg(kh, ri) * jg(kh, re) - ri * rho2n * hg(kh, re) * jg(kh, ri))
        + joining * muh * jg(kc, ri) * (ri ** 2 * rho2n * hg(kh, re) * e2i.eta
                                         + re ** 2 * jg(kh, re) * e2i.gamma))
    return complex(t1 + t2 - t3 - t4)


def q2_condition(n0, cfg, p, joining=1, reading="normalized"):
    """Tuning condition built from :func:`q2` at shift ``p``.

    ``reading="normalized"`` gives ``p^2 - q2/(n0^2 r_e^2)``, whose zeros
    coincide with the minima of ``|d_{n0}|``; ``reading="literal"`` gives
    ``p^2 + q2`` as displayed.
    """
    q = q2(n0, cfg, joining)
    if reading == "literal":
        return p * p + q
    if reading != "normalized":
        raise ValueError(f"unknown reading {reading!r}")
    return p * p - q / (n0 * n0 * cfg.r_e ** 2)


def tuned_config(cfg_template, n0, p, loss=None):
    """``mu_hat = -mu + i loss + p`` with ``loss = rho^n0`` by default."""
    loss = cfg_template.rho ** n0 if loss is None else loss
    return cfg_template.with_mu_hat(complex(-cfg_template.exterior.mu.real + p, loss))


def d_profile(n0, cfg_template, p_values, loss=None, n=None):
    """``|d_n|`` along real shifts ``p`` of the tuned family (``n`` defaults to ``n0``)."""
    n = n0 if n is None else n
    return np.array([abs(denominator_d(n, tuned_config(cfg_template, n0, p, loss)))
                     for p in p_values])


def tune_p2(n0, cfg_template, search=None, step=1e-4, loss=None, strict=True,
            interface="outer"):
    """Real shift ``p_2`` minimizing ``|d_{n0}|`` for ``mu_hat = -mu + i loss + p_2``.

    A coarse grid over ``search`` is refined by golden-section search around
    the best grid point.

    Parameters
    ----------
    search : (float, float), optional
        Overrides the interval chosen by ``interface``.
    interface : {"outer", "inner", "any"}
        ``|d|`` has two near-zeros of similar depth.  The shell-matrix
        plasmon sits at ``p < 0`` (``mu_hat ~ -mu (n+2)/(n-1)``) and is the
        one an exterior source excites; the core-shell plasmon sits at
        ``p > 0`` (``mu_hat ~ -mu (n-1)/(n+2)``).  Default intervals are
        ``[-8/n0, 0]``, ``[0, 8/n0]`` and ``[-8/n0, 8/n0]``.
    strict : bool
        Require ``|d(p*)| <= 10 rho^(2 n0) * median_grid |d|`` and raise
        :class:`TuningFailed` otherwise.

    Returns
    -------
    float
    """
    if complex(cfg_template.core.mu) != complex(cfg_template.exterior.mu):
        raise ConfigInvalid("tuning requires mu_c = mu")
    width = 8.0 / n0
    intervals = {"outer": (-width, 0.0), "inner": (0.0, width), "any": (-width, width)}
    if interface not in intervals:
        raise ValueError(f"unknown interface {interface!r}")
    lo, hi = search or intervals[interface]
    xs = np.linspace(lo, hi, int(round((hi - lo) / step)) + 1)

    def fun(p):
        return abs(denominator_d(n0, tuned_config(cfg_template, n0, p, loss)))

    vals = np.array([fun(x) for x in xs])
    i = int(np.argmin(vals))
    if 0 < i < len(xs) - 1:
        res = minimize_scalar(fun, bracket=(xs[i - 1], xs[i], xs[i + 1]), method="golden", tol=1e-15)
        p = float(res.x) if res.fun <= vals[i] else float(xs[i])
    else:
        p = float(xs[i])
    achieved = fun(p)
    target = 10 * cfg_template.rho ** (2 * n0) * float(np.median(vals))
    if strict and not achieved <= target:
        raise TuningFailed(f"|d| = {achieved:.3g} above target {target:.3g}", achieved)
    return p


def point_source_spectrum(r0, k_s, n_range, r_e):
    """Point-like T-mode spectrum ``f_{1,n,0} = (2n+1)!! (k_s r0)^(-n)``.

    Raises
    ------
    SourceInsideShell
        If ``r0 <= r_e``.
    """
    if not r0 > r_e:
        raise SourceInsideShell(f"source radius {r0} not outside r_e = {r_e}")
    n_min, n_max = n_range
    if not 1 <= n_min <= n_max:
        raise ValueError("invalid n_range")
    entries = {}
    for n in range(n_min, n_max + 1):
        lg = log_double_factorial(2 * n + 1) - n * np.log(complex(k_s) * r0)
        e2 = int(np.floor(lg.real / np.log(2)))
        entries[(n, 0)] = ScaledFnValue.from_parts(np.exp(lg - e2 * np.log(2)), e2)
    return SourceSpectrum(entries, n_min)


def source_inside_critical(r0, cfg):
    """Compare the spectrum growth rate with the critical one.

    ``limsup f_tilde^(1/n) = 1/(k r0)`` exceeds ``sqrt(r_i/(k^2 r_e^3))``
    exactly when ``r0 < r_star``.
    """
    k = abs(cfg.exterior.k_s)
    return 1.0 / (k * r0) > np.sqrt(cfg.r_i / (k * k * cfg.r_e ** 3))


@dataclass
class CoreShellSolution:
    modes: dict  # (n, m) -> CoreShellModeSolution
    d: dict  # n -> complex
    energy: float
    classification: str
    diagnostics: dict = field(default_factory=dict)


def _shell_coeffs(n, cfg, mode_sol, r=None):
    r = r or _radials(n, cfg)
    kh, muh = r["kh"], cfg.shell.mu
    a = r["j2i"] * mode_sol.phi[1] * (-1j * kh * cfg.r_i ** 2 / muh)  # multiplies h(kh r)
    b = r["h2e"] * mode_sol.phi[2] * (-1j * kh * cfg.r_e ** 2 / muh)  # multiplies j(kh r)
    return a, b


def _mode_energy(n, cfg, mode_sol):
    r = _radials(n, cfg)
    a, b = _shell_coeffs(n, cfg, mode_sol, r)
    muh = cfg.shell.mu
    total = 0.0 + 0j
    for rad, tag, sgn in ((cfg.r_e, "2e", 1.0), (cfg.r_i, "2i", -1.0)):
        U = a * r["h" + tag] + b * r["j" + tag]
        Ut = a * r["H" + tag] + b * r["J" + tag]  # r * (U' - U/r)
        if U.is_zero or Ut.is_zero:
            continue
        total += sgn * rad * (Ut * U.conjugate()).to_complex()
    return float(n * (n + 1) * (muh * total).imag)


def solve_coreshell(cfg, src, threshold=1e6, shadow=False):
    """Solve every mode of ``src``; energy from boundary forms on both interfaces."""
    modes, ds = {}, {}
    energy = 0.0
    for key in sorted(src.entries):
        n, m = key
        sol = solve_coreshell_mode(n, cfg, src.scaled(key), m=m, shadow=shadow)
        modes[key] = sol
        ds[n] = sol.d
        energy += _mode_energy(n, cfg, sol)
    cls = "resonant" if energy > threshold else "non_resonant"
    return CoreShellSolution(modes, ds, energy, cls)


def dissipation_energy_coreshell(cfg, src, threshold=1e6):
    """``(energy, classification)``; resonant when the energy exceeds ``threshold``."""
    sol = solve_coreshell(cfg, src, threshold)
    return sol.energy, sol.classification


def _radial_profile(n, cfg, mode_sol, rad, region, f_scaled, include_source):
    r = _radials(n, cfg)
    if region == "core":
        t = cfg.core.k_s * rad
        w = r["h1i"] * sph_bessel_j(n, t) * mode_sol.phi[0] * (-1j * cfg.core.k_s * cfg.r_i ** 2 / cfg.core.mu)
        return w.to_complex()
    if region == "shell":
        a, b = _shell_coeffs(n, cfg, mode_sol, r)
        t = cfg.shell.k_s * rad
        return (a * sph_hankel1(n, t) + b * sph_bessel_j(n, t)).to_complex()
    k = cfg.exterior.k_s
    w = r["j0e"] * sph_hankel1(n, k * rad) * mode_sol.phi[3] * (-1j * k * cfg.r_e ** 2 / cfg.exterior.mu)
    if include_source:
        w = w + f_scaled * sph_bessel_j(n, k * rad)
    return w.to_complex()


def _region(cfg, rad):
    if rad < cfg.r_i:
        return "core"
    return "shell" if rad < cfg.r_e else "exterior"


def _field(x, cfg, solution, src, include_source, region=None):
    x = np.asarray(x, dtype=float)
    rad = float(np.linalg.norm(x))
    theta = float(np.arccos(np.clip(x[2] / rad, -1, 1)))
    phi = float(np.mod(np.arctan2(x[1], x[0]), 2 * np.pi))
    region = region or _region(cfg, rad)
    out = np.zeros(3, dtype=complex)
    for key, ms in solution.modes.items():
        n, m = key
        w = _radial_profile(n, cfg, ms, rad, region, src.scaled(key), include_source)
        out += w * vsh(ModeIndex(n, m, "T"), theta, phi)
    return out


def field_eval(x, cfg, solution, src, include_source=True, rtol=1e-14):
    """Displacement at ``x`` from the modal solution.

    The source potential is added outside the shell when ``include_source``;
    its expansion is the truncated spectrum, so it is exact for the modes
    carried by ``src``.

    Raises
    ------
    OnInterface
        If ``|x|`` is within ``rtol`` of ``r_i`` or ``r_e``; the exception
        carries both one-sided limits as ``limits = (inner, outer)``.
    """
    rad = float(np.linalg.norm(x))
    if rad == 0:
        rad = 1e-300
    for rr, inner, outer in ((cfg.r_i, "core", "shell"), (cfg.r_e, "shell", "exterior")):
        if abs(rad - rr) <= rtol * rr:
            lims = (_field(x, cfg, solution, src, include_source, inner),
                    _field(x, cfg, solution, src, include_source, outer))
            raise OnInterface(f"|x| = {rad} lies on an interface", lims)
    return _field(x, cfg, solution, src, include_source)


def scattered_field(x, cfg, solution, src):
    """Exterior field without the source potential (``|x| > r_e``)."""
    if not np.linalg.norm(x) > cfg.r_e:
        raise ValueError("scattered_field is defined outside the shell")
    return _field(x, cfg, solution, src, include_source=False, region="exterior")


def _shell_points(radius, count, seed=0):
    # deterministic quasi-uniform points (Fibonacci lattice)
    i = np.arange(count) + 0.5
    z = 1 - 2 * i / count
    az = np.mod(np.pi * (1 + 5 ** 0.5) * i + seed, 2 * np.pi)
    s = np.sqrt(1 - z * z)
    return radius * np.stack([s * np.cos(az), s * np.sin(az), z], axis=1)


def boundedness_diagnostic(cfg_template, src, n0, losses=None, n0_values=None, radius=None,
                           points=200, step=1e-4):
    """Energy and exterior field size while the resonance is strengthened.

    Two dials are supported.  With ``losses`` the degree ``n0`` is fixed and
    ``mu_hat = -mu + i delta + p_2`` is retuned for each ``delta``.  With
    ``n0_values`` the loss stays ``rho^n0`` and both ``n0`` and ``p_2`` are
    retuned.  The maximum of the scattered field over ``points`` points of a
    sphere of ``radius`` (default ``1.05 * bound_radius``) is recorded.

    Returns
    -------
    dict of arrays ``n0``, ``loss``, ``p``, ``energy``, ``max_field``.
    """
    if (losses is None) == (n0_values is None):
        raise ValueError("give exactly one of losses or n0_values")
    radius = radius or 1.05 * cfg_template.bound_radius
    xs = _shell_points(radius, points)
    plan = ([(n0, d) for d in losses] if losses is not None
            else [(n, cfg_template.rho ** n) for n in n0_values])
    out = {"n0": [], "loss": [], "p": [], "energy": [], "max_field": []}
    for nn, delta in plan:
        p = tune_p2(nn, cfg_template, step=step, loss=delta, strict=False)
        cfg = tuned_config(cfg_template, nn, p, delta)
        sol = solve_coreshell(cfg, src)
        mx = max(np.linalg.norm(scattered_field(x, cfg, sol, src)) for x in xs)
        for key, val in zip(out, (nn, delta, p, sol.energy, float(mx))):
            out[key].append(val)
    return {k: np.array(v) for k, v in out.items()}
