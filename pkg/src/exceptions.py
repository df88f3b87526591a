"""
例外モジュール

スケッチ計算・理論式・インスタンス生成で送出される例外を定義します。
すべて ValueError のサブクラスなので、呼び出し側は一括して捕捉できます。
"""


class SketchError(ValueError):
    """
    sketch-bench の例外の基底クラス
    """


class RankDeficient(SketchError):
    """QR分解の対象が列フルランクでない"""


class NotPositiveDefinite(SketchError):
    """行列が正定値でない"""


class NotPsd(SketchError):
    """行列が半正定値（エルミート）でない"""


class InvalidSpec(SketchError):
    """埋め込みの指定が不正"""


class DimensionMismatch(SketchError):
    """行列の次元が整合しない"""


class RankExceedsSketch(SketchError):
    """rank(A) が埋め込み次元 ℓ を超えている"""


class DimensionTooSmall(SketchError):
    """埋め込み次元が小さすぎて期待値が発散する"""


class NoAdmissibleQ(SketchError):
    """最小化に使える比較ランク q が存在しない"""


class RankBelowSketch(SketchError):
    """r < ℓ のためシャープな上界が適用できない"""


class ParameterOrderViolation(SketchError):
    """パラメータの大小関係が前提を満たさない"""


class InfeasibleBudget(SketchError):
    """行列ベクトル積の予算内で q < ℓ < k を満たす分割が存在しない"""
