"""
テスト問題生成モジュール

普遍性実験の最小二乗問題（coherent / incoherent）、半正定値行列（step / poly スペクトル）、
下界の証明に現れる困難インスタンスを生成します。
"""

import dataclasses
import enum
import logging
from dataclasses import dataclass
from typing import Union

import numpy as np

from .dense_core import FieldTag, adjoint, dct_orthonormal, frob_sq, numerical_rank, pseudoinverse
from .embeddings import RngStream, sample_haar_unitary
from .exceptions import DimensionMismatch, ParameterOrderViolation
from .theory import SpectrumTail

logger = logging.getLogger("instances")

STEP_TOP = 10
STEP_FLOOR = 1e-5


class LsqKind(enum.Enum):
    COHERENT = "coherent"
    INCOHERENT = "incoherent"


class Basis(enum.Enum):
    IDENTITY = "identity"
    DCT = "dct"
    RANDOM = "random"


class SpectrumKind(enum.Enum):
    STEP = "step"
    POLY = "poly"


@dataclass
class LeastSquaresInstance:
    """
    最小二乗問題 min ‖B − AX‖²_F

    Attributes:
        A: n×d 行列
        B: n×p 行列
        r: rank(A)
        optimal_residual_sq: ‖B − AA⁺B‖²_F
        label: 出力用のラベル
    """

    A: np.ndarray
    B: np.ndarray
    r: int
    optimal_residual_sq: float
    label: str = "lsq"

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def d(self) -> int:
        return self.A.shape[1]


@dataclass
class PsdInstance:
    """
    半正定値行列 H = QΛQ*

    Attributes:
        H: n×n 半正定値行列
        eigenvalues: 降順の固有値 λ
        spectrum: ランダム化SVD の対象としての特異値の二乗 λ² の裾
        r: ランク
        basis: 固有ベクトルの基底
        label: 出力用のラベル
    """

    H: np.ndarray
    eigenvalues: np.ndarray
    spectrum: SpectrumTail
    r: int
    basis: Basis
    label: str = "psd"

    @property
    def n(self) -> int:
        return self.H.shape[0]

    @property
    def trace_tail(self) -> SpectrumTail:
        """
        Nyström のトレース誤差に対応する固有値そのものの裾
        """
        return SpectrumTail(self.eigenvalues)


@dataclass
class RectInstance:
    """
    d×n の困難インスタンス（特異値 a が q 個、1 が r−q 個、残りは 0）

    Attributes:
        A: d×n 行列
        a: 大きい特異値
        q: 大きい特異値の個数
        r: ランク
        spectrum: 特異値の二乗の裾
        label: 出力用のラベル
    """

    A: np.ndarray
    a: float
    q: int
    r: int
    spectrum: SpectrumTail
    label: str = "rect"


def _rhs(n: int, p: int) -> np.ndarray:
    # B = Σ_i i·e_i（1 始まり）を p 列に複製
    return np.tile(np.arange(1, n + 1, dtype=np.float64)[:, np.newaxis], (1, p))


def _lsq_from(A: np.ndarray, B: np.ndarray, label: str) -> LeastSquaresInstance:
    optimal = frob_sq(B - A @ (pseudoinverse(A) @ B))
    return LeastSquaresInstance(A=A, B=B, r=numerical_rank(A), optimal_residual_sq=optimal, label=label)


def make_lsq(kind: LsqKind, n: int, d: int, p: int = 1) -> LeastSquaresInstance:
    """
    普遍性実験の最小二乗問題を生成する

    Coherent: A = [I 0]*、Incoherent: A = DCT 行列の先頭 d 列。B の第 i 成分は i。
    """
    if not 1 <= d <= n or p < 1:
        raise DimensionMismatch(f"1 ≤ d ≤ n かつ p ≥ 1 である必要があります: n={n}, d={d}, p={p}")
    if kind is LsqKind.COHERENT:
        A = np.eye(n, d)
    else:
        A = dct_orthonormal(n)[:, :d]
    return _lsq_from(A, _rhs(n, p), label=kind.value)


def make_random_lsq(n: int, d: int, p: int, r: int, rng: RngStream, field: FieldTag = FieldTag.REAL) -> LeastSquaresInstance:
    """
    ランク r（r < d ならランク落ち）のランダムな最小二乗問題を生成する
    """
    if not 0 <= r <= min(n, d) or p < 1:
        raise DimensionMismatch(f"0 ≤ r ≤ min(n, d) である必要があります: n={n}, d={d}, r={r}")
    gen = rng.generator()

    def gaussian(shape):
        if field is FieldTag.REAL:
            return gen.standard_normal(shape)
        return (gen.standard_normal(shape) + 1j * gen.standard_normal(shape)) / np.sqrt(2.0)

    A = gaussian((n, r)) @ gaussian((r, d))
    B = gaussian((n, p))
    return _lsq_from(A, B, label=f"random-r{r}")


def _psd_from(Q: np.ndarray, eigenvalues: np.ndarray, basis: Basis, label: str) -> PsdInstance:
    H = (Q * eigenvalues[np.newaxis, :]) @ adjoint(Q)
    H = 0.5 * (H + adjoint(H))
    ordered = np.sort(eigenvalues)[::-1]
    return PsdInstance(
        H=H,
        eigenvalues=ordered,
        spectrum=SpectrumTail(ordered ** 2),
        r=int(np.count_nonzero(ordered)),
        basis=basis,
        label=label,
    )


def make_psd(basis: Basis, spectrum: SpectrumKind, n: int) -> PsdInstance:
    """
    H = QΛQ* を生成する

    Step: 先頭 10 個が 1、残りが 1e-5。Poly: λ_i = i⁻²。Q は単位行列または DCT 行列。
    """
    if spectrum is SpectrumKind.STEP and n < STEP_TOP:
        raise DimensionMismatch(f"step スペクトルには n ≥ {STEP_TOP} が必要です: n={n}")
    if n < 1:
        raise DimensionMismatch(f"n={n} は 1 以上である必要があります")

    if spectrum is SpectrumKind.STEP:
        eigenvalues = np.full(n, STEP_FLOOR)
        eigenvalues[:STEP_TOP] = 1.0
    else:
        eigenvalues = np.arange(1, n + 1, dtype=np.float64) ** -2

    if basis is Basis.IDENTITY:
        Q = np.eye(n)
    elif basis is Basis.DCT:
        Q = dct_orthonormal(n)
    else:
        raise DimensionMismatch(f"make_psd の基底は identity か dct です: {basis.value}")

    label = f"{spectrum.value}/{'coherent' if basis is Basis.IDENTITY else 'incoherent'}"
    return _psd_from(Q, eigenvalues, basis, label)


def make_two_eig(a: float, b: float, q: int, r: int, n: int) -> PsdInstance:
    """
    対角行列 H_{a,b} = diag(a·I_q, b·I_{r−q}, 0_{n−r}) を生成する
    """
    if not (0 < b <= a) or not (0 <= q <= r <= n):
        raise ParameterOrderViolation(f"0 < b ≤ a かつ q ≤ r ≤ n を満たしません: a={a}, b={b}, q={q}, r={r}, n={n}")
    eigenvalues = np.zeros(n)
    eigenvalues[:q] = a
    eigenvalues[q:r] = b
    H = np.diag(eigenvalues)
    ordered = np.sort(eigenvalues)[::-1]
    return PsdInstance(
        H=H,
        eigenvalues=ordered,
        spectrum=SpectrumTail(ordered ** 2),
        r=r,
        basis=Basis.IDENTITY,
        label=f"two-eig(a={a:g},b={b:g},q={q},r={r})",
    )


def make_rect_hard(a: float, q: int, r: int, d: int, n: int) -> RectInstance:
    """
    d×n 行列 H_a = diag(a·I_q, I_{r−q}, 0) を生成する
    """
    if not (0 <= q <= r <= min(d, n)) or a <= 0:
        raise ParameterOrderViolation(f"q ≤ r ≤ min(d, n) かつ a > 0 を満たしません: a={a}, q={q}, r={r}, d={d}, n={n}")
    singular_values = np.zeros(min(d, n))
    singular_values[:q] = a
    singular_values[q:r] = 1.0
    A = np.zeros((d, n))
    A[np.diag_indices(min(d, n))] = singular_values
    return RectInstance(
        A=A,
        a=a,
        q=q,
        r=r,
        spectrum=SpectrumTail.from_singular_values(singular_values),
        label=f"rect-hard(a={a:g},q={q},r={r})",
    )


def make_random_rect(d: int, n: int, r: int, decay: float, rng: RngStream) -> RectInstance:
    """
    特異値 σ_i = i^{-decay}（i ≤ r）を持つ、両側を Haar 回転した d×n 行列を生成する
    """
    if not 1 <= r <= min(d, n):
        raise ParameterOrderViolation(f"1 ≤ r ≤ min(d, n) を満たしません: r={r}, d={d}, n={n}")
    singular_values = np.zeros(min(d, n))
    singular_values[:r] = np.arange(1, r + 1, dtype=np.float64) ** -decay
    core = np.zeros((d, n))
    core[np.diag_indices(min(d, n))] = singular_values
    U = sample_haar_unitary(d, FieldTag.REAL, rng.spawn(1))
    V = sample_haar_unitary(n, FieldTag.REAL, rng.spawn(2))
    return RectInstance(
        A=U @ core @ adjoint(V),
        a=float(singular_values[0]),
        q=0,
        r=r,
        spectrum=SpectrumTail.from_singular_values(singular_values),
        label=f"random-rect(d={d},n={n},r={r},decay={decay:g})",
    )


Instance = Union[PsdInstance, RectInstance]


def randomize_basis(instance: Instance, rng: RngStream) -> Instance:
    """
    Haar ユニタリで基底をランダム化する（スペクトルは不変）

    半正定値インスタンスは U H U*、長方形インスタンスは U A V* に置き換えます。
    """
    field = FieldTag.of(instance.H if isinstance(instance, PsdInstance) else instance.A)
    if isinstance(instance, PsdInstance):
        U = sample_haar_unitary(instance.n, field, rng.spawn(1))
        H = U @ instance.H @ adjoint(U)
        H = 0.5 * (H + adjoint(H))
        return dataclasses.replace(instance, H=H, basis=Basis.RANDOM)

    d, n = instance.A.shape
    U = sample_haar_unitary(d, field, rng.spawn(1))
    V = sample_haar_unitary(n, field, rng.spawn(2))
    return dataclasses.replace(instance, A=U @ instance.A @ adjoint(V))
