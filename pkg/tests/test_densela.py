import numpy as np
import pytest

from tespect import densela
from tespect.errors import AsymmetryExceeded, NotPositiveDefinite


def rand_orthogonal(rng, n):
    q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    return q


# -- symmetric eigendecomposition ---------------------------------------------


def test_sym_eig_diagonal():
    dec = densela.sym_eig(np.diag([3.0, 1.0]))
    assert np.allclose(dec.eigenvalues, [1.0, 3.0], atol=1e-14)


def test_sym_eig_identity():
    dec = densela.sym_eig(np.eye(4))
    assert np.allclose(dec.eigenvalues, 1.0, atol=1e-14)
    q = dec.eigenvectors
    assert np.linalg.norm(q.T @ q - np.eye(4)) < 1e-10


@pytest.mark.parametrize("n", [2, 7, 40])
def test_sym_eig_residuals(n):
    rng = np.random.default_rng(n)
    s = rng.standard_normal((n, n))
    s = 0.5 * (s + s.T)
    dec = densela.sym_eig(s)
    q, lam = dec.eigenvectors, dec.eigenvalues
    assert np.linalg.norm(q.T @ q - np.eye(n)) < 1e-10
    assert np.linalg.norm(s @ q - q * lam) < 1e-9 * max(np.linalg.norm(s), 1.0)


def test_sym_eig_rejects_asymmetric():
    with pytest.raises(AsymmetryExceeded):
        densela.sym_eig(np.array([[1.0, 2.0], [0.0, 1.0]]))


# -- SPD roots -------------------------------------------------------------------


def test_spd_inv_sqrt_diagonal():
    r = densela.spd_inv_sqrt(np.diag([4.0, 9.0]))
    assert np.allclose(r, np.diag([0.5, 1.0 / 3.0]), atol=1e-14)


def test_spd_inv_sqrt_identity():
    assert np.allclose(densela.spd_inv_sqrt(np.eye(3)), np.eye(3), atol=1e-14)


@pytest.mark.parametrize("n", [3, 10, 30])
def test_spd_roots_compose(n):
    rng = np.random.default_rng(100 + n)
    q = rand_orthogonal(rng, n)
    s = (q * rng.uniform(0.5, 20.0, n)) @ q.T
    s = 0.5 * (s + s.T)
    root = densela.spd_sqrt(s)
    inv_root = densela.spd_inv_sqrt(s)
    assert np.linalg.norm(root @ root - s) < 1e-9 * np.linalg.norm(s)
    assert np.linalg.norm(inv_root @ s @ inv_root - np.eye(n)) < 1e-9
    assert np.linalg.norm(inv_root @ root - np.eye(n)) < 1e-9


def test_spd_rejects_indefinite():
    with pytest.raises(NotPositiveDefinite):
        densela.spd_inv_sqrt(np.diag([1.0, -1.0]))


# -- dense nonsymmetric eigensolver ------------------------------------------------


def test_nonsym_eig_rotation():
    spec = densela.nonsym_eig(np.array([[0.0, 1.0], [-1.0, 0.0]]))
    assert np.allclose(sorted(spec.eigenvalues, key=lambda z: z.imag), [-1j, 1j], atol=1e-14)


def test_nonsym_eig_companion_toy():
    spec = densela.nonsym_eig(np.array([[1.25, -0.5], [0.5, 0.0]]))
    assert np.allclose(sorted(spec.eigenvalues.real), [0.25, 1.0], atol=1e-12)


def test_nonsym_eig_trace_identity():
    rng = np.random.default_rng(50)
    m = rng.standard_normal((50, 50))
    spec = densela.nonsym_eig(m)
    tr = np.trace(m)
    assert abs(spec.eigenvalues.sum() - tr) <= 1e-8 * (1.0 + abs(tr))


def test_nonsym_eig_conjugate_closure_and_lidskii():
    rng = np.random.default_rng(7)
    for i in range(200):
        n = int(rng.integers(2, 65))
        m = rng.standard_normal((n, n))
        vals = densela.nonsym_eig(m).eigenvalues
        scale = max(np.linalg.norm(m), 1e-300)
        # conjugate closure: the multiset matches its own conjugate
        diff = np.abs(np.sort_complex(vals) - np.sort_complex(vals.conj()))
        assert np.max(diff) <= 1e-8 * scale, f"matrix {i}"
        tr = np.trace(m)
        assert abs(vals.sum() - tr) <= 1e-8 * (1.0 + abs(tr))


def test_nonsym_eig_vector_residuals():
    rng = np.random.default_rng(11)
    m = rng.standard_normal((40, 40))
    spec = densela.nonsym_eig(m, want_vectors=True)
    assert spec.residuals is not None
    assert np.max(spec.residuals) < 1e-8


def test_nonsym_eig_rejects_nonfinite():
    with pytest.raises(ValueError):
        densela.nonsym_eig(np.array([[np.nan, 0.0], [0.0, 1.0]]))


# -- determinants -------------------------------------------------------------------


def test_complex_det_identity():
    for n in (1, 4, 9):
        det = densela.complex_det(np.eye(n))
        assert det.value == pytest.approx(1.0, abs=1e-14)


def test_complex_det_diagonal():
    det = densela.complex_det(np.diag([2.0, 3.0j]))
    assert det.value == pytest.approx(6.0j, abs=1e-13)


def test_complex_det_matches_eigenvalue_product():
    rng = np.random.default_rng(20)
    m = rng.standard_normal((20, 20))
    det = densela.complex_det(m)
    vals = densela.nonsym_eig(m).eigenvalues
    log_ref = float(np.sum(np.log(np.abs(vals))))
    arg_ref = float(np.angle(np.prod(vals / np.abs(vals))))
    assert det.log_abs == pytest.approx(log_ref, rel=1e-8)
    assert np.cos(det.arg - arg_ref) == pytest.approx(1.0, abs=1e-8)


def test_complex_det_multiplicative():
    rng = np.random.default_rng(21)
    for _ in range(5):
        a = rng.standard_normal((10, 10)) + 1j * rng.standard_normal((10, 10))
        b = rng.standard_normal((10, 10)) + 1j * rng.standard_normal((10, 10))
        dab = densela.complex_det(a @ b)
        da, db = densela.complex_det(a), densela.complex_det(b)
        assert dab.log_abs == pytest.approx(da.log_abs + db.log_abs, rel=1e-8)
        assert np.cos(dab.arg - da.arg - db.arg) == pytest.approx(1.0, abs=1e-8)


def test_complex_det_singular_sentinel():
    det = densela.complex_det(np.array([[1.0, 1.0], [1.0, 1.0]]))
    assert det.log_abs == -np.inf
    assert det.value == 0.0


# -- singular values -------------------------------------------------------------------


def test_singular_values_diagonal():
    assert np.allclose(densela.singular_values(np.diag([3.0, -4.0])), [4.0, 3.0], atol=1e-12)


def test_singular_values_orthogonal():
    rng = np.random.default_rng(31)
    q = rand_orthogonal(rng, 6)
    assert np.allclose(densela.singular_values(q), 1.0, atol=1e-10)


def test_singular_values_frobenius_identity():
    rng = np.random.default_rng(32)
    m = rng.standard_normal((15, 15))
    sv = densela.singular_values(m)
    assert np.sum(sv**2) == pytest.approx(np.linalg.norm(m) ** 2, rel=1e-10)
    assert np.all(np.diff(sv) <= 1e-12)


def test_logdet_overflow_guard():
    huge = densela.LogDet(800.0, 0.3)
    assert np.isinf(huge.value.real)
    zero = densela.LogDet(-np.inf, 0.0)
    assert zero.value == 0.0


def test_spd_guard_at_conditioning_floor():
    with pytest.raises(NotPositiveDefinite):
        densela.spd_inv_sqrt(np.diag([1.0, 5e-14]))
