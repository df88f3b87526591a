"""
密行列カーネルモジュール

実数体・複素数体の両方で使える密行列の基本演算（QR分解、打ち切りSVD、
擬似逆行列、正規直交DCT、半正定値行列の逆平方根、フロベニウスノルム）を提供します。

行列は 2 次元の numpy.ndarray で表します。実数は float64、複素数は complex128
（実部・虚部を交互に並べた C 順序の格納）です。
"""

import enum
import logging
from typing import Tuple

import numpy as np
import scipy.fft
import scipy.linalg

from .exceptions import NotPositiveDefinite, RankDeficient

logger = logging.getLogger("dense_core")

EPS = np.finfo(np.float64).eps


class FieldTag(enum.Enum):
    """
    スカラー体の指定

    α_K は実数体で 1、複素数体で 0 です。理論式の分母のずれはすべてこの値で決まります。
    """

    REAL = "real"
    COMPLEX = "complex"

    @property
    def alpha(self) -> int:
        return 1 if self is FieldTag.REAL else 0

    @property
    def dtype(self) -> np.dtype:
        return np.dtype(np.float64) if self is FieldTag.REAL else np.dtype(np.complex128)

    @classmethod
    def from_name(cls, name: str) -> "FieldTag":
        """
        文字列（"real" / "complex"、大文字小文字は区別しない）から FieldTag を取得する
        """
        try:
            return cls(name.strip().lower())
        except ValueError:
            raise ValueError(f"不明なスカラー体です: {name}") from None

    @classmethod
    def of(cls, M: np.ndarray) -> "FieldTag":
        """
        配列の dtype からスカラー体を判定する
        """
        return cls.COMPLEX if np.iscomplexobj(M) else cls.REAL


def adjoint(M: np.ndarray) -> np.ndarray:
    """共役転置 M*"""
    return M.conj().T


def frob_sq(M: np.ndarray) -> float:
    """
    フロベニウスノルムの二乗（全要素の絶対値の二乗和）を返す
    """
    M = np.asarray(M)
    if M.size == 0:
        return 0.0
    return float(np.real(np.vdot(M, M)))


def thin_qr(M: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    列フルランク行列の薄いQR分解

    R の対角成分が非負の実数になるように符号（複素数なら位相）を正規化します。
    この正規化をしたガウス行列の Q は Haar 分布に従います。

    Args:
        M: m×k 行列（m ≥ k）

    Returns:
        (Q, R): Q は正規直交列を持つ m×k 行列、R は k×k 上三角行列

    Raises:
        RankDeficient: R の対角成分が許容誤差を下回った場合
    """
    M = np.asarray(M)
    rows, cols = M.shape
    if cols > rows:
        raise RankDeficient(f"列数 {cols} が行数 {rows} を超えているため列フルランクになりません")
    if cols == 0:
        return np.zeros((rows, 0), dtype=M.dtype), np.zeros((0, 0), dtype=M.dtype)

    Q, R = np.linalg.qr(M, mode="reduced")
    diag = np.diagonal(R)
    magnitude = np.abs(diag)
    tol = max(rows, cols) * EPS * max(float(np.max(magnitude)), float(np.linalg.norm(M, 2)))
    if np.min(magnitude) <= tol:
        raise RankDeficient(f"R の対角成分 {float(np.min(magnitude)):.3e} が許容誤差 {tol:.3e} 以下です")

    phase = diag / magnitude
    Q = Q * phase[np.newaxis, :]
    R = phase.conj()[:, np.newaxis] * R
    # 対角の虚部は丸め誤差なので落とす
    R[np.diag_indices(cols)] = magnitude
    return Q, R


def truncated_svd(M: np.ndarray, q: int) -> Tuple[np.ndarray, float]:
    """
    最良ランク q 近似 ⟦M⟧_q と、その誤差 Σ_{i>q} σ_i² を返す

    Args:
        M: 行列
        q: 0 ≤ q ≤ min(rows, cols)

    Returns:
        (Mq, tail_sq)
    """
    M = np.asarray(M)
    if not 0 <= q <= min(M.shape):
        raise ValueError(f"q={q} は 0 以上 {min(M.shape)} 以下である必要があります")
    if M.size == 0:
        return np.zeros_like(M), 0.0

    U, s, Vh = np.linalg.svd(M, full_matrices=False)
    Mq = (U[:, :q] * s[:q]) @ Vh[:q, :]
    tail_sq = float(np.sum(s[q:] ** 2))
    return Mq, tail_sq


def singular_values_sq(M: np.ndarray) -> np.ndarray:
    """
    降順に並んだ特異値の二乗を返す
    """
    M = np.asarray(M)
    if M.size == 0:
        return np.zeros(0)
    return np.linalg.svd(M, compute_uv=False) ** 2


def pseudoinverse(M: np.ndarray) -> np.ndarray:
    """
    Moore–Penrose 擬似逆行列

    σ_i ≤ max(rows, cols)·eps·σ_max の特異値は 0 として扱います。
    """
    M = np.asarray(M)
    rows, cols = M.shape
    if M.size == 0:
        return np.zeros((cols, rows), dtype=M.dtype)
    return np.linalg.pinv(M, rcond=max(rows, cols) * EPS)


def numerical_rank(M: np.ndarray) -> int:
    """
    擬似逆行列と同じ打ち切り基準で数値ランクを求める
    """
    M = np.asarray(M)
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    if s[0] == 0.0:
        return 0
    return int(np.sum(s > max(M.shape) * EPS * s[0]))


def dct_orthonormal(n: int) -> np.ndarray:
    """
    n×n の正規直交 DCT-II 行列 C（C x = dct(x)、C*C = I）を返す
    """
    if n < 1:
        raise ValueError(f"n={n} は 1 以上である必要があります")
    return scipy.fft.dct(np.eye(n), type=2, norm="ortho", axis=0)


def psd_inv_sqrt(H: np.ndarray) -> np.ndarray:
    """
    正定値エルミート行列 H に対して S·H·S = I となる S = H^{-1/2} を返す

    Raises:
        NotPositiveDefinite: 最小固有値が許容誤差以下の場合
    """
    H = np.asarray(H)
    n = H.shape[0]
    if H.shape != (n, n):
        raise NotPositiveDefinite(f"正方行列ではありません: {H.shape}")

    H = 0.5 * (H + adjoint(H))
    eigvals, eigvecs = scipy.linalg.eigh(H)
    tol = n * EPS * max(float(np.max(np.abs(eigvals))), 1.0)
    if eigvals[0] <= tol:
        raise NotPositiveDefinite(f"最小固有値 {eigvals[0]:.3e} が許容誤差 {tol:.3e} 以下です")

    S = (eigvecs / np.sqrt(eigvals)[np.newaxis, :]) @ adjoint(eigvecs)
    return 0.5 * (S + adjoint(S))
