import numpy as np
import pytest

from elasto_np.errors import DoubleDegenerate
from elasto_np.layer_coeffs import make_medium, traction_coeffs
from elasto_np.np_spectrum import (
    eigen_residual,
    np_eigensystem,
    np_matrix,
    quasistatic_probe,
)

MEDIA = [
    (1.0, 1.0, 2.0),
    (1.3, 0.8, 5.0),
    (1.0 + 0.1j, -1.2 + 0.2j, 3.0),
    (2.0, 0.5 + 0.3j, 0.7),
]


def test_blocks_from_traction():
    med = make_medium(1.0, 1.0, 2.0)
    lam1, A = np_matrix(3, med, 1.0)
    tc = traction_coeffs(3, med, 1.0)
    assert lam1 == tc.frak_b_n - 0.5
    assert np.trace(A) == pytest.approx(tc.frak_c_1n + tc.frak_d_2n - 1, abs=1e-15)


def test_example_residual():
    es = np_eigensystem(3, make_medium(1.0, 1.0, 2.0), 1.0)
    assert es.branch == "generic"
    assert eigen_residual(es.block, es.lambda_2n, es.U_stable) < 1e-12
    assert eigen_residual(es.block, es.lambda_3n, es.V_stable) < 1e-12
    assert eigen_residual(es.block, es.lambda_2n, es.U_coeff) < 1e-12
    assert abs(es.lambda_2n * es.lambda_3n - np.linalg.det(es.block)) < 1e-12


@pytest.mark.parametrize("params", MEDIA)
def test_residuals_and_identities_all_n(params):
    med = make_medium(*params)
    for n in range(1, 41):
        es = np_eigensystem(n, med, 1.0)
        A = es.block
        assert eigen_residual(A, es.lambda_2n, es.U_stable) < 1e-11
        assert eigen_residual(A, es.lambda_3n, es.V_stable) < 1e-11
        nrm = np.linalg.norm(A)
        assert abs(es.lambda_2n + es.lambda_3n - np.trace(A)) <= 1e-12 * nrm
        assert abs(es.lambda_2n * es.lambda_3n - np.linalg.det(A)) <= 1e-12 * nrm ** 2


def test_scaling_freedom():
    es = np_eigensystem(4, make_medium(1.3, 0.8, 5.0), 1.0)
    v = np.array(es.U_stable) * 1e3
    assert eigen_residual(es.block, es.lambda_2n, v) < 1e-12


def test_degenerate_branch_continuity(monkeypatch):
    import elasto_np.np_spectrum as nps

    med = make_medium(1.0, 1.0, 2.0)
    _, A = np_matrix(2, med, 1.0)

    def fake(d1):
        B = A.copy()
        B[1, 0] = d1
        return lambda *a, **k: (0.1, B)

    monkeypatch.setattr(nps, "np_matrix", fake(1e-10))
    g = np_eigensystem(2, med, 1.0)
    monkeypatch.setattr(nps, "np_matrix", fake(0.0))
    d = np_eigensystem(2, med, 1.0)
    assert g.branch == "generic" and d.branch == "degenerate_d1n_zero"
    got = sorted([g.lambda_2n, g.lambda_3n], key=lambda z: z.real)
    ref = sorted([d.lambda_2n, d.lambda_3n], key=lambda z: z.real)
    assert np.allclose(got, ref, atol=1e-8)
    assert d.lambda_2n == A[0, 0] and d.lambda_3n == A[1, 1]
    assert eigen_residual(d.block, d.lambda_3n, d.V_coeff) < 1e-14

    B = np.diag([0.2 + 0j, 0.2 + 0j])
    monkeypatch.setattr(nps, "np_matrix", lambda *a, **k: (0.1, B))
    with pytest.raises(DoubleDegenerate):
        np_eigensystem(2, med, 1.0)


def test_discriminant_zero(monkeypatch):
    import elasto_np.np_spectrum as nps

    # (d2 - c1)^2 + 4 d1 c2 = 0 with d1 != 0
    B = np.array([[0.3, -0.25], [1.0, -0.7]], dtype=complex)
    monkeypatch.setattr(nps, "np_matrix", lambda *a, **k: (0.1, B))
    es = np_eigensystem(2, make_medium(1, 1, 1), 1.0)
    assert es.lambda_2n == es.lambda_3n


def test_large_n_accumulation():
    # b_n -> 1/2 so lambda_1n -> 0 like C/n
    med = make_medium(1.0, 1.0, 2.0)
    vals = [(n, np_eigensystem(n, med, 1.0).lambda_1n) for n in (20, 40, 80, 160)]
    C = max(abs(v) * n for n, v in vals)
    assert C < 2.0
    assert all(abs(v) < C / n + 1e-15 for n, v in vals)


def test_quasistatic_probe():
    p = quasistatic_probe(2, 1.0, 1.0, 1.0, [1e-2, 1e-3, 1e-4, 1e-5])
    assert p.converging
    last = p.systems[-1]
    for lam in (last.lambda_1n, last.lambda_2n, last.lambda_3n):
        assert abs(lam.imag) < 1e-6
    # increments shrink with omega
    assert np.all(p.increments[-1] < 1e-2 * p.increments[0])
    # T-mode static value
    assert abs(last.lambda_1n - 0.3) < 1e-8
    p2 = quasistatic_probe(2, 1.0, 1.0, 2.0, [1e-2, 1e-3, 1e-4, 1e-5])
    for a, b in zip((last.lambda_1n, last.lambda_2n, last.lambda_3n),
                    (p2.systems[-1].lambda_1n, p2.systems[-1].lambda_2n, p2.systems[-1].lambda_3n)):
        assert abs(a - b) < 1e-6


def test_probe_rejects_bad_grid():
    with pytest.raises(ValueError):
        quasistatic_probe(2, 1.0, 1.0, 1.0, [1e-3, 1e-2])
