"""
テスト問題生成のテスト
"""

import numpy as np
import pytest

from src.embeddings import RngStream
from src.exceptions import DimensionMismatch, ParameterOrderViolation
from src.instances import (
    Basis,
    LsqKind,
    SpectrumKind,
    make_lsq,
    make_psd,
    make_random_lsq,
    make_random_rect,
    make_rect_hard,
    make_two_eig,
    randomize_basis,
)


def test_coherent_lsq():
    """A = e₁、B = (1,2,3) の最適残差は 4 + 9"""
    instance = make_lsq(LsqKind.COHERENT, 3, 1)
    np.testing.assert_array_equal(instance.A[:, 0], [1.0, 0.0, 0.0])
    np.testing.assert_array_equal(instance.B[:, 0], [1.0, 2.0, 3.0])
    assert instance.optimal_residual_sq == pytest.approx(13.0)
    assert instance.r == 1
    assert instance.label == "coherent"


def test_incoherent_lsq():
    instance = make_lsq(LsqKind.INCOHERENT, 8, 3, p=2)
    np.testing.assert_allclose(instance.A.T @ instance.A, np.eye(3), atol=1e-12)
    assert instance.B.shape == (8, 2)
    assert instance.label == "incoherent"


def test_lsq_full_scale_rank():
    instance = make_lsq(LsqKind.INCOHERENT, 1000, 10)
    assert instance.r == 10
    projector = instance.A @ instance.A.T
    expected = float(np.sum((instance.B - projector @ instance.B) ** 2))
    assert instance.optimal_residual_sq == pytest.approx(expected, rel=1e-10)


def test_lsq_invalid_dimensions():
    with pytest.raises(DimensionMismatch):
        make_lsq(LsqKind.COHERENT, 3, 4)


def test_random_lsq_rank_deficient():
    instance = make_random_lsq(30, 5, 2, 3, RngStream(1))
    assert instance.r == 3
    assert instance.d == 5
    again = make_random_lsq(30, 5, 2, 3, RngStream(1))
    np.testing.assert_array_equal(instance.A, again.A)


def test_psd_step_identity():
    instance = make_psd(Basis.IDENTITY, SpectrumKind.STEP, 12)
    np.testing.assert_array_equal(np.diag(instance.H), [1.0] * 10 + [1e-5] * 2)
    assert instance.r == 12
    assert instance.label == "step/coherent"
    assert instance.spectrum.tail(10) == pytest.approx(2e-10)
    assert instance.trace_tail.tail(10) == pytest.approx(2e-5)


def test_psd_poly_dct():
    instance = make_psd(Basis.DCT, SpectrumKind.POLY, 4)
    eigvals = np.sort(np.linalg.eigvalsh(instance.H))[::-1]
    np.testing.assert_allclose(eigvals, [1.0, 1 / 4, 1 / 9, 1 / 16], atol=1e-10)
    assert instance.label == "poly/incoherent"
    np.testing.assert_allclose(make_psd(Basis.IDENTITY, SpectrumKind.POLY, 1).H, [[1.0]])


def test_psd_step_requires_ten():
    with pytest.raises(DimensionMismatch):
        make_psd(Basis.IDENTITY, SpectrumKind.STEP, 5)


def test_two_eig():
    instance = make_two_eig(1.0, 1.0, 0, 4, 6)
    np.testing.assert_array_equal(instance.H, np.diag([1.0] * 4 + [0.0] * 2))

    instance = make_two_eig(1e6, 1.0, 5, 50, 60)
    assert instance.r == 50
    assert instance.trace_tail.tail(5) == pytest.approx(45.0)
    assert instance.trace_tail.tail(0) == pytest.approx(5e6 + 45.0)
    with pytest.raises(ParameterOrderViolation):
        make_two_eig(1.0, 2.0, 1, 3, 4)


def test_rect_hard():
    instance = make_rect_hard(100.0, 2, 5, 8, 10)
    assert instance.A.shape == (8, 10)
    assert instance.spectrum.tail(2) == pytest.approx(3.0)
    assert make_rect_hard(1.0, 5, 5, 8, 10).spectrum.tail(5) == 0.0


def test_rect_hard_gram_matches_two_eig():
    """A*A は make_two_eig(a², 1, q, r, n) の H に等しい"""
    rect = make_rect_hard(1e6, 5, 50, 60, 60)
    two_eig = make_two_eig(1e12, 1.0, 5, 50, 60)
    np.testing.assert_allclose(rect.A.T @ rect.A, two_eig.H)


def test_random_rect_spectrum():
    instance = make_random_rect(20, 30, 10, 1.0, RngStream(3))
    singular_values = np.linalg.svd(instance.A, compute_uv=False)
    np.testing.assert_allclose(singular_values[:10], 1.0 / np.arange(1, 11), atol=1e-12)
    assert singular_values[10] < 1e-12
    with pytest.raises(ParameterOrderViolation):
        make_random_rect(5, 6, 7, 1.0, RngStream(0))


def test_randomize_basis_preserves_spectrum():
    instance = make_psd(Basis.IDENTITY, SpectrumKind.POLY, 16)
    rotated = randomize_basis(instance, RngStream(9))
    assert rotated.basis is Basis.RANDOM
    assert np.trace(rotated.H) == pytest.approx(np.trace(instance.H))
    np.testing.assert_allclose(np.sort(np.linalg.eigvalsh(rotated.H))[::-1], instance.eigenvalues, atol=1e-12)
    assert not np.allclose(rotated.H, instance.H)

    rect = make_rect_hard(10.0, 2, 5, 6, 8)
    rotated_rect = randomize_basis(rect, RngStream(9))
    np.testing.assert_allclose(
        np.linalg.svd(rotated_rect.A, compute_uv=False), np.linalg.svd(rect.A, compute_uv=False), atol=1e-12
    )
