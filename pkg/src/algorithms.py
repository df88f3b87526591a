"""
スケッチアルゴリズムモジュール

sketch-and-solve、ランダム化SVD、Nyström 近似、一般化 Nyström 近似と、
それらを検証するための厳密な代数分解（残差分解、Schur 補行列）を提供します。
"""

import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np
import scipy.linalg

from .dense_core import EPS, adjoint, frob_sq, pseudoinverse
from .exceptions import DimensionMismatch, NotPsd, RankExceedsSketch

logger = logging.getLogger("algorithms")

# 半正定値判定の許容誤差
PSD_SYMMETRY_TOL = 1e-10
PSD_EIGENVALUE_TOL = 1e-10


@dataclass
class SketchSolveResult:
    """
    sketch-and-solve の結果

    Attributes:
        xhat: スケッチ問題の解 X̂ (d×p)
        residual_sq: 元の問題での残差 ‖B − AX̂‖²_F
        optimal_residual_sq: 最適残差 ‖B − AA⁺B‖²_F
    """

    xhat: np.ndarray
    residual_sq: float
    optimal_residual_sq: float

    @property
    def ratio(self) -> float:
        """
        残差比 ‖B − AX̂‖²_F / ‖B − AA⁺B‖²_F（最適残差が 0 なら nan）
        """
        if self.optimal_residual_sq <= 0.0:
            return float("nan")
        return self.residual_sq / self.optimal_residual_sq


@dataclass
class LowRankResult:
    """
    低ランク近似の結果

    Attributes:
        left: 左因子
        right: 右因子（近似は left @ right）
        err_sq: ‖A − Â‖²_F（Nyström では tr(H − Ĥ)）
    """

    left: np.ndarray
    right: np.ndarray
    err_sq: float

    @property
    def approximation(self) -> np.ndarray:
        return self.left @ self.right


def _as_matrix(M: np.ndarray) -> np.ndarray:
    M = np.asarray(M)
    if M.ndim == 1:
        return M[:, np.newaxis]
    return M


def check_psd(H: np.ndarray, name: str = "H") -> np.ndarray:
    """
    H がエルミートかつ半正定値であることを確認し、対称化した H を返す

    Raises:
        NotPsd: 対称性または固有値の条件を満たさない場合
    """
    H = np.asarray(H)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise NotPsd(f"{name} は正方行列である必要があります: {H.shape}")
    scale = np.sqrt(frob_sq(H))
    if np.sqrt(frob_sq(H - adjoint(H))) > PSD_SYMMETRY_TOL * scale:
        raise NotPsd(f"{name} がエルミートではありません")
    H = 0.5 * (H + adjoint(H))
    if H.size == 0 or scale == 0.0:
        return H
    eigvals = scipy.linalg.eigvalsh(H)
    if eigvals[0] < -PSD_EIGENVALUE_TOL * max(eigvals[-1], 0.0):
        raise NotPsd(f"{name} の最小固有値 {eigvals[0]:.3e} が負です")
    return H


def sketch_and_solve(A: np.ndarray, B: np.ndarray, Omega: np.ndarray) -> SketchSolveResult:
    """
    スケッチした最小二乗問題 X̂ = (Ω*A)⁺(Ω*B) を解き、元の問題での残差を評価する

    Args:
        A: n×d 行列
        B: n×p 行列（1 次元配列なら p = 1）
        Omega: n×ℓ の埋め込み

    Returns:
        SketchSolveResult
    """
    A, B, Omega = _as_matrix(A), _as_matrix(B), _as_matrix(Omega)
    n = A.shape[0]
    if B.shape[0] != n or Omega.shape[0] != n:
        raise DimensionMismatch(f"行数が一致しません: A={A.shape}, B={B.shape}, Ω={Omega.shape}")

    Omega_adj = adjoint(Omega)
    xhat = pseudoinverse(Omega_adj @ A) @ (Omega_adj @ B)
    residual_sq = frob_sq(B - A @ xhat)
    optimal_residual_sq = frob_sq(B - A @ (pseudoinverse(A) @ B))
    return SketchSolveResult(xhat=xhat, residual_sq=residual_sq, optimal_residual_sq=optimal_residual_sq)


def range_basis(A: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    列ピボット付きQR分解で A = QR（Q は n×r の正規直交列）と、その直交補空間 Q⊥ を求める

    Returns:
        (Q, Q_perp): [Q Q⊥] はユニタリ
    """
    A = _as_matrix(A)
    n = A.shape[0]
    if A.size == 0:
        return np.zeros((n, 0), dtype=A.dtype), np.eye(n, dtype=A.dtype)

    Qfull, R, _ = scipy.linalg.qr(A, mode="full", pivoting=True)
    diag = np.abs(np.diagonal(R))
    if diag.size == 0 or diag[0] == 0.0:
        rank = 0
    else:
        rank = int(np.sum(diag > max(A.shape) * EPS * diag[0]))
    return Qfull[:, :rank], Qfull[:, rank:]


def residual_decomposition(A: np.ndarray, B: np.ndarray, Omega: np.ndarray) -> Tuple[float, float]:
    """
    sketch-and-solve の残差を 2 つの項に分解する

        ‖B − AX̂‖²_F = ‖(Ω*Q)⁺(Ω*Q⊥)Q⊥*B‖²_F + ‖Q⊥*B‖²_F

    Q は range(A) の正規直交基底で、A がランク落ちしていても構いません。

    Returns:
        (cross_term_sq, optimal_sq)

    Raises:
        RankExceedsSketch: rank(A) > ℓ の場合
    """
    A, B, Omega = _as_matrix(A), _as_matrix(B), _as_matrix(Omega)
    if B.shape[0] != A.shape[0] or Omega.shape[0] != A.shape[0]:
        raise DimensionMismatch(f"行数が一致しません: A={A.shape}, B={B.shape}, Ω={Omega.shape}")

    Q, Q_perp = range_basis(A)
    rank, ell = Q.shape[1], Omega.shape[1]
    if rank > ell:
        raise RankExceedsSketch(f"rank(A)={rank} が ℓ={ell} を超えています")

    Omega_adj = adjoint(Omega)
    tail = adjoint(Q_perp) @ B
    cross = pseudoinverse(Omega_adj @ Q) @ (Omega_adj @ Q_perp) @ tail
    return frob_sq(cross), frob_sq(tail)


def randomized_svd(A: np.ndarray, Omega: np.ndarray) -> LowRankResult:
    """
    ランダム化SVD Â = Q(Q*A)（Q は range(AΩ) の正規直交基底）

    Args:
        A: d×n 行列
        Omega: n×ℓ の埋め込み

    Returns:
        LowRankResult（left = Q、right = Q*A）
    """
    A, Omega = _as_matrix(A), _as_matrix(Omega)
    if A.shape[1] != Omega.shape[0]:
        raise DimensionMismatch(f"A の列数 {A.shape[1]} と Ω の行数 {Omega.shape[0]} が一致しません")

    Y = A @ Omega
    # AΩ がランク落ちしても正しい射影になるよう、SVD の打ち切りで基底を取る
    U, s, _ = np.linalg.svd(Y, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        rank = 0
    else:
        rank = int(np.sum(s > max(Y.shape) * EPS * s[0]))
    Q = U[:, :rank]
    right = adjoint(Q) @ A
    return LowRankResult(left=Q, right=right, err_sq=frob_sq(A - Q @ right))


def nystrom(H: np.ndarray, Omega: np.ndarray) -> LowRankResult:
    """
    Nyström 近似 H⟨Ω⟩ = HΩ(Ω*HΩ)⁺Ω*H

    コア行列 Ω*HΩ の擬似逆は固有値の打ち切りで安定化し、近似を F F* の形で返します
    （F = HΩ V Λ^{-1/2}）。そのため近似は構成上半正定値です。

    Returns:
        LowRankResult（left = F、right = F*、err_sq = tr(H − H⟨Ω⟩)）

    Raises:
        NotPsd: H が半正定値でない場合
    """
    Omega = _as_matrix(Omega)
    H = check_psd(H)
    if H.shape[1] != Omega.shape[0]:
        raise DimensionMismatch(f"H の次元 {H.shape[0]} と Ω の行数 {Omega.shape[0]} が一致しません")

    Y = H @ Omega
    core = adjoint(Omega) @ Y
    core = 0.5 * (core + adjoint(core))
    eigvals, eigvecs = scipy.linalg.eigh(core)
    top = float(eigvals[-1]) if eigvals.size else 0.0
    keep = eigvals > max(core.shape[0], 1) * EPS * top if top > 0.0 else np.zeros(eigvals.shape, dtype=bool)
    F = Y @ (eigvecs[:, keep] / np.sqrt(eigvals[keep])[np.newaxis, :])
    err_sq = float(np.real(np.trace(H))) - frob_sq(F)
    return LowRankResult(left=F, right=adjoint(F), err_sq=err_sq)


def schur_complement(H: np.ndarray, Omega: np.ndarray) -> np.ndarray:
    """
    Nyström 近似の残差 H/Ω = H − H⟨Ω⟩ を返す
    """
    H = check_psd(H)
    result = nystrom(H, Omega)
    residual = H - result.approximation
    return 0.5 * (residual + adjoint(residual))


def generalized_nystrom(A: np.ndarray, Omega: np.ndarray, Psi: np.ndarray) -> LowRankResult:
    """
    一般化 Nyström 近似 A⟨Ω,Ψ⟩ = AΩ(Ψ*AΩ)⁺Ψ*A

    Args:
        A: d×n 行列
        Omega: n×ℓ の右埋め込み
        Psi: d×k の左埋め込み

    Returns:
        LowRankResult（left = AΩ(Ψ*AΩ)⁺、right = Ψ*A）
    """
    A, Omega, Psi = _as_matrix(A), _as_matrix(Omega), _as_matrix(Psi)
    if A.shape[1] != Omega.shape[0] or A.shape[0] != Psi.shape[0]:
        raise DimensionMismatch(f"次元が一致しません: A={A.shape}, Ω={Omega.shape}, Ψ={Psi.shape}")

    Y = A @ Omega
    Z = adjoint(Psi) @ A
    left = Y @ pseudoinverse(adjoint(Psi) @ Y)
    return LowRankResult(left=left, right=Z, err_sq=frob_sq(A - left @ Z))


def weighting_gap(M: np.ndarray, R: np.ndarray) -> float:
    """
    重み付けの損失 ‖(R*M)⁺R*‖²_F − ‖M⁺‖²_F を返す

    M (ℓ×r) が列フルランク、R (ℓ×ℓ) が正則なら常に非負です。
    """
    M, R = _as_matrix(M), _as_matrix(R)
    if R.shape != (M.shape[0], M.shape[0]):
        raise DimensionMismatch(f"R は {M.shape[0]}×{M.shape[0]} である必要があります: {R.shape}")
    R_adj = adjoint(R)
    return frob_sq(pseudoinverse(R_adj @ M) @ R_adj) - frob_sq(pseudoinverse(M))


def sketching_identity_term(Omega: np.ndarray, r: int, B: np.ndarray) -> float:
    """
    Ω を先頭 r 行 Ω₁ と残り Ω₂ に分けたときの ‖(Ω₁*)⁺Ω₂*B‖²_F を返す

    Args:
        Omega: n×ℓ の埋め込み
        r: 分割位置
        B: (n−r)×p 行列
    """
    Omega, B = _as_matrix(Omega), _as_matrix(B)
    n = Omega.shape[0]
    if not 0 <= r <= n or B.shape[0] != n - r:
        raise DimensionMismatch(f"分割 r={r} と B の行数 {B.shape[0]} が n={n} と整合しません")
    top, bottom = Omega[:r, :], Omega[r:, :]
    return frob_sq(pseudoinverse(adjoint(top)) @ adjoint(bottom) @ B)
