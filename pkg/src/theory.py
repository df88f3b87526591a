"""
理論値モジュール

sketch-and-solve、ランダム化SVD、Nyström、一般化 Nyström の誤差について、
閉じた形の期待値・上界・下界と、埋め込み次元や行列ベクトル積の予算を計算します。
"""

import enum
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .dense_core import FieldTag
from .exceptions import (
    DimensionTooSmall,
    InfeasibleBudget,
    NoAdmissibleQ,
    ParameterOrderViolation,
    RankBelowSketch,
)

logger = logging.getLogger("theory")

# 浮動小数点の丸めで切り上げが 1 つずれるのを防ぐ
_CEIL_SLACK = 1e-9


class GammaKind(enum.Enum):
    """
    一般化 Nyström の左埋め込み Ψ の種類（γ の選択）
    """

    GAUSSIAN = "gaussian"
    HAAR = "haar"


class BudgetMethod(enum.Enum):
    GENERALIZED_NYSTROM = "gn"
    RSVD = "rsvd"


@dataclass(frozen=True)
class BoundQuery:
    """
    理論式の入力パラメータ

    Attributes:
        field: スカラー体
        n: Ω の行数
        d: A の行数
        r: ランク
        ell: 右埋め込み次元 ℓ
        k: 左埋め込み次元（一般化 Nyström のみ）
        q: 比較ランク
        gamma_kind: Ψ の種類
        epsilon: 精度目標 ε
        t: 行列ベクトル積の予算
    """

    field: FieldTag = FieldTag.REAL
    n: int = 0
    d: int = 0
    r: int = 0
    ell: int = 0
    k: int = 0
    q: int = 0
    gamma_kind: GammaKind = GammaKind.GAUSSIAN
    epsilon: float = 0.0
    t: int = 0

    def __post_init__(self):
        for name in ("n", "d", "r", "ell", "k", "q", "t"):
            if getattr(self, name) < 0:
                raise ParameterOrderViolation(f"{name}={getattr(self, name)} は 0 以上である必要があります")


class SpectrumTail:
    """
    降順に並んだ特異値の二乗 σ₁² ≥ … ≥ σ_r² と、その裾 tail(q) = Σ_{i>q} σ_i²
    """

    def __init__(self, values: Iterable[float]):
        values = np.asarray(list(values), dtype=np.float64)
        if np.any(values < 0):
            raise ValueError("特異値の二乗に負の値が含まれています")
        self.values = np.sort(values)[::-1]
        # suffix[q] = Σ_{i ≥ q} values[i]（0 始まり）
        self._suffix = np.concatenate((np.cumsum(self.values[::-1])[::-1], [0.0]))

    @classmethod
    def from_singular_values(cls, singular_values: Iterable[float]) -> "SpectrumTail":
        return cls(np.asarray(list(singular_values), dtype=np.float64) ** 2)

    @classmethod
    def from_file(cls, path: str) -> "SpectrumTail":
        """
        1 行に 1 つの特異値の二乗（降順）を書いたテキストファイルを読み込む
        """
        file_path = Path(path)
        values = []
        with open(file_path, "r", encoding="utf-8") as f:
            for line_no, line in enumerate(f, start=1):
                text = line.strip()
                if not text or text.startswith("#"):
                    continue
                try:
                    values.append(float(text))
                except ValueError:
                    raise ValueError(f"{file_path}:{line_no}: 数値として読めません: {text!r}") from None
        if any(a < b for a, b in zip(values, values[1:])):
            logger.warning(f"スペクトルファイル '{file_path}' が降順ではないため並べ替えます")
        return cls(values)

    @property
    def rank(self) -> int:
        return int(np.count_nonzero(self.values))

    def __len__(self) -> int:
        return len(self.values)

    def tail(self, q: int) -> float:
        if q < 0:
            raise ValueError(f"q={q} は 0 以上である必要があります")
        if q >= len(self.values):
            return 0.0
        return float(self._suffix[q])


def _ceil(value: float) -> int:
    return math.ceil(value - _CEIL_SLACK)


def hmt_factor(q: int, ell: int, field: FieldTag) -> float:
    """
    既存の解析の係数 1 + q/(ℓ − q − α_K)
    """
    denom = ell - q - field.alpha
    if denom <= 0:
        raise ParameterOrderViolation(f"q={q} は ℓ − α_K = {ell - field.alpha} 未満である必要があります")
    return 1.0 + q / denom


def sharp_factor(r: int, ell: int, q: int, field: FieldTag) -> float:
    """
    シャープな係数 (r−ℓ)/(r−q)·(1 + q/(ℓ − q − α_K))
    """
    if r <= q:
        raise ParameterOrderViolation(f"r={r} は q={q} より大きい必要があります")
    return (r - ell) / (r - q) * hmt_factor(q, ell, field)


def _admissible(q_grid: Optional[Sequence[int]], ell: int, field: FieldTag) -> List[int]:
    if q_grid is None:
        q_grid = range(0, max(ell - field.alpha, 0))
    return [q for q in q_grid if 0 <= q < ell - field.alpha]


def ss_ratio_gaussian(query: BoundQuery) -> float:
    """
    ガウス埋め込みでの sketch-and-solve の期待残差比 1 + r/(ℓ − r − α_K)
    """
    denom = query.ell - query.r - query.field.alpha
    if denom <= 0:
        raise DimensionTooSmall(f"ℓ={query.ell} が r + α_K = {query.r + query.field.alpha} 以下のため期待値が発散します")
    return 1.0 + query.r / denom


def ss_ratio_haar(query: BoundQuery) -> float:
    """
    ランダム正規直交埋め込みでの期待残差比 1 + (n−ℓ)/(n−r)·r/(ℓ − r − α_K)

    どの埋め込みでも最悪ケースでこれを下回れないので、ミニマックス値でもあります。
    """
    denom = query.ell - query.r - query.field.alpha
    if denom <= 0:
        raise DimensionTooSmall(f"ℓ={query.ell} が r + α_K = {query.r + query.field.alpha} 以下のため期待値が発散します")
    if query.n < query.ell:
        raise DimensionTooSmall(f"n={query.n} は ℓ={query.ell} 以上である必要があります")
    if query.n == query.r:
        return 1.0
    return 1.0 + (query.n - query.ell) / (query.n - query.r) * query.r / denom


def gaussian_sketch_identity(r: int, ell: int, field: FieldTag) -> float:
    """
    E‖(Ω₁*)⁺Ω₂*B‖²_F / ‖B‖²_F = r/(ℓ − r − α_K)（ガウス埋め込み）
    """
    return ss_ratio_gaussian(BoundQuery(field=field, r=r, ell=ell)) - 1.0


def haar_sketch_identity(n: int, r: int, ell: int, field: FieldTag) -> float:
    """
    E‖(Ω₁*)⁺Ω₂*B‖²_F / ‖B‖²_F = (n−ℓ)/(n−r)·r/(ℓ − r − α_K)（ランダム正規直交埋め込み）
    """
    return ss_ratio_haar(BoundQuery(field=field, n=n, r=r, ell=ell)) - 1.0


def inverse_wishart_mean(r: int, ell: int, field: FieldTag) -> float:
    """
    E[W⁻¹] = I/(ℓ − r − α_K) の係数
    """
    denom = ell - r - field.alpha
    if denom <= 0:
        raise DimensionTooSmall(f"ℓ={ell} が r + α_K = {r + field.alpha} 以下のため E[W⁻¹] が存在しません")
    return 1.0 / denom


def inverse_beta_mean(r: int, ell: int, n: int, field: FieldTag) -> float:
    """
    E[X⁻¹] = (1 + (n−ℓ)/(ℓ − r − α_K))·I の係数
    """
    return 1.0 + (n - ell) * inverse_wishart_mean(r, ell, field)


def rsvd_bound_hmt(q_grid: Optional[Sequence[int]], r: int, ell: int, field: FieldTag, tail: SpectrumTail) -> float:
    """
    既存の上界 min_q (1 + q/(ℓ − q − α_K))·tail(q)

    Args:
        q_grid: 最小化する q の候補（None なら 0 ≤ q < ℓ − α_K のすべて）
        r: ランク（この上界では使わないが、呼び出し形式をそろえている）
        ell: 埋め込み次元
        field: スカラー体
        tail: スペクトルの裾

    Raises:
        NoAdmissibleQ: 候補がない場合
    """
    candidates = _admissible(q_grid, ell, field)
    if not candidates:
        raise NoAdmissibleQ(f"q < ℓ − α_K = {ell - field.alpha} を満たす候補がありません")
    return min(hmt_factor(q, ell, field) * tail.tail(q) for q in candidates)


def rsvd_bound_sharp(q_grid: Optional[Sequence[int]], r: int, ell: int, field: FieldTag, tail: SpectrumTail) -> float:
    """
    シャープな上界 min_q (r−ℓ)/(r−q)·(1 + q/(ℓ − q − α_K))·tail(q)

    Raises:
        RankBelowSketch: r < ℓ の場合
        NoAdmissibleQ: 候補がない場合
    """
    if r < ell:
        raise RankBelowSketch(f"r={r} が ℓ={ell} 未満です")
    candidates = _admissible(q_grid, ell, field)
    if not candidates:
        raise NoAdmissibleQ(f"q < ℓ − α_K = {ell - field.alpha} を満たす候補がありません")
    if r == ell:
        return 0.0
    return min(sharp_factor(r, ell, q, field) * tail.tail(q) for q in candidates)


def nystrom_bound(q_grid: Optional[Sequence[int]], r: int, ell: int, field: FieldTag, eig_tail: SpectrumTail) -> float:
    """
    Nyström 近似の期待トレース誤差の上界（固有値の裾に対するシャープな上界）
    """
    return rsvd_bound_sharp(q_grid, r, ell, field, eig_tail)


def rsvd_lower_factor(r: int, ell: int, q: int, field: FieldTag) -> float:
    """
    ミニマックス下界の係数 (r−ℓ)/(r−q)·(1 + q/(ℓ − q − α_K))

    Raises:
        ParameterOrderViolation: q + α_K < ℓ ≤ r を満たさない場合
    """
    if not (q + field.alpha < ell <= r):
        raise ParameterOrderViolation(f"q + α_K < ℓ ≤ r を満たしません: q={q}, ℓ={ell}, r={r}, α_K={field.alpha}")
    return sharp_factor(r, ell, q, field)


def two_eig_limit(b: float, q: int, r: int, ell: int, field: FieldTag) -> float:
    """
    2 固有値の困難インスタンスで a → ∞ としたときの期待トレース誤差 b(r−ℓ)(1 + q/(ℓ − q − α_K))
    """
    if not (q + field.alpha < ell <= r):
        raise ParameterOrderViolation(f"q + α_K < ℓ ≤ r を満たしません: q={q}, ℓ={ell}, r={r}")
    return b * (r - ell) * hmt_factor(q, ell, field)


def gamma(query: BoundQuery) -> float:
    """
    Ψ がガウスなら 1、ランダム正規直交なら (d−k)/(d−ℓ)
    """
    if query.gamma_kind is GammaKind.GAUSSIAN:
        return 1.0
    if query.d < query.k or query.d <= query.ell:
        raise ParameterOrderViolation(f"d={query.d} は k={query.k} 以上かつ ℓ={query.ell} より大きい必要があります")
    return (query.d - query.k) / (query.d - query.ell)


def _gn_prefactor(query: BoundQuery, gamma_value: float) -> float:
    denom = query.k - query.ell - query.field.alpha
    if denom <= 0:
        raise ParameterOrderViolation(f"ℓ + α_K < k を満たしません: ℓ={query.ell}, k={query.k}")
    return 1.0 + gamma_value * query.ell / denom


def gn_bound(query: BoundQuery, tail: SpectrumTail) -> float:
    """
    一般化 Nyström の上界 (1 + γ·ℓ/(k − ℓ − α_K))·min_q (r−ℓ)/(r−q)(1 + q/(ℓ − q − α_K))·tail(q)

    Raises:
        ParameterOrderViolation: ℓ + α_K < k ≤ r を満たさない場合
    """
    if query.k > query.r:
        raise ParameterOrderViolation(f"k={query.k} は r={query.r} 以下である必要があります")
    prefactor = _gn_prefactor(query, gamma(query))
    try:
        inner = rsvd_bound_sharp(None, query.r, query.ell, query.field, tail)
    except (RankBelowSketch, NoAdmissibleQ) as e:
        raise ParameterOrderViolation(str(e)) from None
    return prefactor * inner


def gn_lower_factor(query: BoundQuery) -> float:
    """
    一般化 Nyström のミニマックス下界の係数

        (1 + (d−k)/(d−ℓ)·ℓ/(k − ℓ − α_K))·(r−ℓ)/(r−q)(1 + q/(ℓ − q − α_K))

    q + α_K = ℓ のときは無限大を返します。
    """
    if query.q + query.field.alpha > query.ell or query.k > query.r:
        raise ParameterOrderViolation(
            f"q + α_K ≤ ℓ かつ k ≤ r を満たしません: q={query.q}, ℓ={query.ell}, k={query.k}, r={query.r}"
        )
    haar_query = BoundQuery(field=query.field, d=query.d, k=query.k, ell=query.ell, gamma_kind=GammaKind.HAAR)
    prefactor = _gn_prefactor(query, gamma(haar_query))
    if query.q + query.field.alpha == query.ell:
        return math.inf
    return prefactor * rsvd_lower_factor(query.r, query.ell, query.q, query.field)


def split_objective(k: int, ell: int, q: int, field: FieldTag = FieldTag.COMPLEX) -> float:
    """
    (1 + ℓ/(k − ℓ − α_K))(1 + q/(ℓ − q − α_K))（複素数体では α_K = 0）
    """
    alpha = field.alpha
    if not (q + alpha < ell and ell + alpha < k):
        return math.inf
    return (1.0 + ell / (k - ell - alpha)) * (1.0 + q / (ell - q - alpha))


def plan_split(q: int, t: int, field: FieldTag = FieldTag.COMPLEX) -> Tuple[int, int, float]:
    """
    予算 t = k + ℓ のもとで一般化 Nyström の下界を最小にする (k, ℓ) を選ぶ

    連続最適 k/ℓ = √(t−q)/√q を求め、k を切り上げて ℓ を切り下げる場合とその逆の
    2 通りを評価して良い方を返します（同値なら k が大きい方）。

    Returns:
        (k, ell, objective)

    Raises:
        InfeasibleBudget: q < ℓ < k を満たす整数分割がない場合
    """
    if not 0 < q < t:
        raise InfeasibleBudget(f"0 < q < t を満たしません: q={q}, t={t}")

    ratio = math.sqrt(t - q) / math.sqrt(q)
    ell_cont = t / (1.0 + ratio)
    candidates = {(t - math.floor(ell_cont), math.floor(ell_cont)), (t - math.ceil(ell_cont), math.ceil(ell_cont))}
    scored = sorted(
        ((split_objective(k, ell, q, field), -k, k, ell) for k, ell in candidates),
        key=lambda item: (item[0], item[1]),
    )
    objective, _, k, ell = scored[0]
    if not math.isfinite(objective):
        raise InfeasibleBudget(f"予算 t={t} では q={q} < ℓ < k を満たす分割がありません")
    logger.info(f"予算 t={t}、q={q} の最適分割: k={k}, ℓ={ell}, 目的関数={objective:.6f}")
    return k, ell, objective


def budget_for_epsilon(q: int, epsilon: float, method: BudgetMethod) -> int:
    """
    精度 (1 + ε) を保証するのに必要な行列ベクトル積の数

    一般化 Nyström: ⌈2(1/ε + 1)(1/ε + √(1/ε² + 2/ε) + 1)·q⌉
    ランダム化SVD: ⌈(2/ε + 2)·q⌉
    """
    if epsilon <= 0:
        raise ValueError(f"ε={epsilon} は正である必要があります")
    if q < 1:
        raise ValueError(f"q={q} は 1 以上である必要があります")
    inv = 1.0 / epsilon
    if method is BudgetMethod.GENERALIZED_NYSTROM:
        return _ceil(2.0 * (inv + 1.0) * (inv + math.sqrt(inv * inv + 2.0 * inv) + 1.0) * q)
    return _ceil((2.0 * inv + 2.0) * q)


def ss_dimensions(r: int, field: FieldTag, epsilon: float) -> Tuple[int, int]:
    """
    sketch-and-solve の最小埋め込み次元 r + 1 + α_K と、ε 精度に十分な次元 ⌈r/ε + r + α_K⌉
    """
    if r < 1:
        raise ValueError(f"r={r} は 1 以上である必要があります")
    if epsilon <= 0:
        raise ValueError(f"ε={epsilon} は正である必要があります")
    ell_min = r + 1 + field.alpha
    ell_sufficient = _ceil(r / epsilon + r + field.alpha)
    return ell_min, ell_sufficient
