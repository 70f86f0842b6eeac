"""Spectrum of the elastic Neumann-Poincaré operator on a sphere.

For each degree ``n`` the adjoint N-P operator acts on ``T_n^m`` by a scalar
and on the pair ``(I_{n-1}^m, N_{n+1}^m)`` by the 2x2 matrix

    [[c_1n - 1/2, c_2n],
     [d_1n,       d_2n - 1/2]]

acting on coefficient columns ``(alpha, beta)`` of ``alpha I + beta N``.
The entries come from the exterior traction coefficients and the jump
relation ``d_nu S|_+ = 1/2 + K*``.
"""
import cmath
from dataclasses import dataclass

import numpy as np

from .errors import DoubleDegenerate
from .layer_coeffs import make_medium, traction_coeffs

__all__ = [
    "NpEigenSystem",
    "np_matrix",
    "np_eigensystem",
    "eigen_residual",
    "quasistatic_probe",
    "QuasistaticProbe",
]


@dataclass(frozen=True)
class NpEigenSystem:
    """Eigen-data for one degree.

    ``U_coeff`` and ``V_coeff`` follow the displayed closed forms
    ``(c1 - d2 +/- s, 2 d1)``.  They are rays; when ``d_1n`` is tiny the
    first component of one of them is computed with heavy cancellation, so
    ``U_stable`` and ``V_stable`` give the same rays from the better
    conditioned row of the eigen-equation (unit 2-norm).
    """

    n: int
    lambda_1n: complex
    lambda_2n: complex
    lambda_3n: complex
    U_coeff: tuple
    V_coeff: tuple
    U_stable: tuple
    V_stable: tuple
    branch: str
    block: np.ndarray


def np_matrix(n, medium, R, variant="verified"):
    """Scalar T-block and 2x2 I/N block of the adjoint N-P operator.

    Returns
    -------
    lam1 : complex
        ``frak_b_n - 1/2``.
    block : ndarray, shape (2, 2)
    """
    tc = traction_coeffs(n, medium, R, variant=variant)
    block = np.array([[tc.frak_c_1n - 0.5, tc.frak_c_2n],
                      [tc.frak_d_1n, tc.frak_d_2n - 0.5]], dtype=complex)
    return tc.frak_b_n - 0.5, block


def _stable_vector(block, lam):
    # null vector of (block - lam) from the row with the larger entries
    a = block - lam * np.eye(2)
    r0, r1 = a[0], a[1]
    cand = [np.array([-r0[1], r0[0]]), np.array([-r1[1], r1[0]])]
    v = max(cand, key=lambda c: np.linalg.norm(c))
    nv = np.linalg.norm(v)
    if nv == 0:
        v, nv = np.array([1.0 + 0j, 0j]), 1.0
    return tuple(v / nv)


def eigen_residual(block, lam, vec):
    """``|A v - lam v| / (|A| |v|)``."""
    v = np.asarray(vec, dtype=complex)
    return np.linalg.norm(block @ v - lam * v) / (np.linalg.norm(block, 2) * np.linalg.norm(v))


def np_eigensystem(n, medium, R, tol_d1n=1e-14, variant="verified", previous=None):
    """N-P eigenvalues and eigenvectors for degree ``n``.

    Parameters
    ----------
    n : int
    medium : ElasticMedium
    R : float
    tol_d1n : float
        ``|d_1n|`` below ``tol_d1n * |block|`` selects the degenerate branch.
    variant : {"verified", "printed"}
        Passed to :func:`traction_coeffs`.
    previous : NpEigenSystem, optional
        When given, ``lambda_2n``/``lambda_3n`` (and their vectors) are swapped
        if that keeps them closer to the previous step of a sweep.

    Raises
    ------
    DoubleDegenerate
        ``d_1n``, ``c_2n`` and ``d_2n - c_1n`` all negligible: every vector
        of the I/N plane is an eigenvector.
    """
    lam1, A = np_matrix(n, medium, R, variant=variant)
    c1, c2 = A[0, 0] + 0.5, A[0, 1]
    d1, d2 = A[1, 0], A[1, 1] + 0.5
    scale = np.linalg.norm(A, 2)
    if abs(d1) > tol_d1n * scale:
        s = cmath.sqrt((d2 - c1) ** 2 + 4 * d1 * c2)
        lam2 = (c1 + d2 - 1 + s) / 2
        lam3 = (c1 + d2 - 1 - s) / 2
        U = (c1 - d2 + s, 2 * d1)
        V = (c1 - d2 - s, 2 * d1)
        branch = "generic"
    else:
        if abs(c2) <= tol_d1n * scale and abs(d2 - c1) <= tol_d1n * scale:
            raise DoubleDegenerate(f"degree {n}: the I/N block is a multiple of the identity")
        lam2, lam3 = c1 - 0.5, d2 - 0.5
        U = (1.0 + 0j, 0j)
        V = (c2, d2 - c1)
        branch = "degenerate_d1n_zero"
    Us, Vs = _stable_vector(A, lam2), _stable_vector(A, lam3)
    if branch == "degenerate_d1n_zero":
        Us = (1.0 + 0j, 0j)
    if previous is not None:
        keep = abs(lam2 - previous.lambda_2n) + abs(lam3 - previous.lambda_3n)
        swap = abs(lam3 - previous.lambda_2n) + abs(lam2 - previous.lambda_3n)
        if swap < keep:
            lam2, lam3, U, V, Us, Vs = lam3, lam2, V, U, Vs, Us
    return NpEigenSystem(n, lam1, lam2, lam3, U, V, Us, Vs, branch, A)


@dataclass(frozen=True)
class QuasistaticProbe:
    omegas: tuple
    systems: tuple
    increments: np.ndarray  # (len-1, 3) successive |lambda_i(w_k) - lambda_i(w_{k+1})|
    converging: bool


def quasistatic_probe(n, lam, mu, R, omega_list, slack=1.5):
    """Eigenvalues along a decreasing frequency sequence.

    ``converging`` is true when every increment shrinks at least in
    proportion to the frequency step (with multiplicative ``slack``) or is
    already at rounding level.
    """
    omegas = tuple(float(w) for w in omega_list)
    if any(not 0 < w <= 0.1 for w in omegas) or any(b >= a for a, b in zip(omegas, omegas[1:])):
        raise ValueError("omega_list must be decreasing values in (0, 0.1]")
    systems = []
    prev = None
    for w in omegas:
        prev = np_eigensystem(n, make_medium(lam, mu, w), R, previous=prev)
        systems.append(prev)
    lams = np.array([[s.lambda_1n, s.lambda_2n, s.lambda_3n] for s in systems])
    inc = np.abs(np.diff(lams, axis=0))
    ok = True
    floor = 1e-13 * max(1.0, np.abs(lams).max())
    for k in range(1, len(inc)):
        ratio = omegas[k + 1] / omegas[k]
        ok &= bool(np.all((inc[k] <= slack * ratio * inc[k - 1]) | (inc[k] <= floor)))
    return QuasistaticProbe(omegas, tuple(systems), inc, ok)
