"""
モンテカルロ実験モジュール

シード付きの試行を繰り返して期待値を推定し、理論値と比較します。
普遍性実験（最小二乗の図とランダム化SVDの図）の再現もここで行います。
"""

import dataclasses
import enum
import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from dotenv import load_dotenv

from .algorithms import (
    generalized_nystrom,
    nystrom,
    randomized_svd,
    sketch_and_solve,
    sketching_identity_term,
)
from .dense_core import FieldTag, adjoint, pseudoinverse
from .embeddings import (
    EmbeddingKind,
    EmbeddingSpec,
    RngStream,
    haar_block_check,
    sample_beta,
    sample_embedding,
    sample_wishart,
)
from .exceptions import DimensionTooSmall, InvalidSpec, SketchError
from .instances import (
    Basis,
    LeastSquaresInstance,
    LsqKind,
    PsdInstance,
    RectInstance,
    SpectrumKind,
    make_lsq,
    make_psd,
)
from .theory import (
    BoundQuery,
    GammaKind,
    gaussian_sketch_identity,
    gn_bound,
    haar_sketch_identity,
    inverse_beta_mean,
    inverse_wishart_mean,
    nystrom_bound,
    rsvd_bound_hmt,
    rsvd_bound_sharp,
)

# .envの読み込み
load_dotenv()

KIND_ORDER = list(EmbeddingKind)

FIG1_D = 10
FIG1_EMBEDDINGS = list(EmbeddingKind)
FIG2_EMBEDDINGS = [
    EmbeddingKind.GAUSSIAN,
    EmbeddingKind.SIGN,
    EmbeddingKind.UNIFORM,
    EmbeddingKind.SPARSE_IID,
    EmbeddingKind.SPARSE_STACK,
    EmbeddingKind.SRTT,
]

# 普遍性の判定に使う許容誤差（相対 5% + 3 標準誤差）
UNIVERSALITY_REL_TOL = 0.05
SIGMAS = 3.0
DEGENERATE_SE = 1e-10


class Task(enum.Enum):
    """
    1 試行あたりに計算するスカラー量の種類
    """

    SKETCH_SOLVE = "sketch-solve"
    RSVD = "rsvd"
    NYSTROM = "nystrom"
    GEN_NYSTROM = "gen-nystrom"
    WISHART_INV = "wishart-inv"
    BETA_INV = "beta-inv"
    HAAR_BLOCK_INV = "haar-block-inv"
    SKETCH_IDENTITY = "sketch-identity"


class Figure(enum.Enum):
    FIG1 = "1"
    FIG2 = "2"


class Scale(enum.Enum):
    PAPER = "paper"
    DESK = "desk"


SCALE_PRESETS = {
    Scale.PAPER: {"n": 1000, "trials": 1000, "grid_points": 20},
    Scale.DESK: {"n": 300, "trials": 300, "grid_points": 12},
}


@dataclass
class TrialSummary:
    """
    1 セル（埋め込み × ℓ [× k]）のモンテカルロ統計

    Attributes:
        task: タスク名
        embedding: 埋め込み名
        instance: インスタンスのラベル
        n: 周囲空間の次元
        r: ランク
        ell: 埋め込み次元
        k: 左埋め込み次元（一般化 Nyström のみ）
        trials: 試行回数
        mean: 標本平均
        stderr: 標準誤差（標本標準偏差/√trials）
        median: 中央値
        seed: マスターシード
        theory: 理論値（ない場合は None）
        z_score: (mean − theory)/stderr
        reference: 最適なランク ℓ 近似の誤差（低ランク近似のみ）
        high_variance: 期待値の分母が小さく裾が重いセル
        status: "ok" または "failed"
        error: 失敗時のメッセージ
        figure: 図番号（普遍性実験のみ）
        d_or_basis: 図の CSV 用の列（d または基底の名前）
    """

    task: str
    embedding: str
    instance: str
    n: int
    r: int
    ell: int
    k: Optional[int]
    trials: int
    mean: float
    stderr: float
    median: float
    seed: int
    theory: Optional[float] = None
    z_score: Optional[float] = None
    reference: Optional[float] = None
    high_variance: bool = False
    status: str = "ok"
    error: str = ""
    figure: str = ""
    d_or_basis: str = ""

    @property
    def ok(self) -> bool:
        return self.status == "ok"


@dataclass
class ExperimentGrid:
    """
    実験グリッドの指定

    Attributes:
        task: タスク
        ell_grid: 狭義単調増加の ℓ のリスト
        embeddings: 試す埋め込みの種類
        instance: 対象のインスタンス（タスクに応じた型）
        trials: 1 セルあたりの試行回数
        master_seed: マスターシード
        field: スカラー体
        n: 周囲空間の次元（インスタンスを持たないタスク用）
        r: ランク（インスタンスを持たないタスク用）
        k_grid: 左埋め込み次元の候補（一般化 Nyström のみ）
        psi_kind: 左埋め込みの種類（一般化 Nyström のみ）
        zeta: スパース埋め込みの ζ（None なら既定値）
        figure: 図番号（CSV 出力用）
        d_or_basis: CSV 出力用の列
    """

    task: Task
    ell_grid: List[int]
    embeddings: List[EmbeddingKind]
    instance: Optional[Union[LeastSquaresInstance, PsdInstance, RectInstance]] = None
    trials: int = 1000
    master_seed: int = 0
    field: FieldTag = FieldTag.REAL
    n: Optional[int] = None
    r: Optional[int] = None
    k_grid: Optional[List[int]] = None
    psi_kind: EmbeddingKind = EmbeddingKind.GAUSSIAN
    zeta: Optional[int] = None
    figure: str = ""
    d_or_basis: str = ""

    def __post_init__(self):
        if not self.ell_grid:
            raise InvalidSpec("ell_grid が空です")
        if any(b <= a for a, b in zip(self.ell_grid, self.ell_grid[1:])):
            raise InvalidSpec(f"ell_grid は狭義単調増加である必要があります: {self.ell_grid}")
        if self.trials < 1:
            raise InvalidSpec(f"trials={self.trials} は 1 以上である必要があります")
        if not self.embeddings:
            raise InvalidSpec("embeddings が空です")
        n = self.ambient_dim
        if n is not None and self.ell_grid[-1] > n:
            raise InvalidSpec(f"ℓ={self.ell_grid[-1]} が n={n} を超えています")
        if self.task is Task.GEN_NYSTROM and not self.k_grid:
            raise InvalidSpec("一般化 Nyström には k_grid が必要です")

    @property
    def ambient_dim(self) -> Optional[int]:
        """
        Ω の行数 n
        """
        inst = self.instance
        if isinstance(inst, LeastSquaresInstance):
            return inst.n
        if isinstance(inst, PsdInstance):
            return inst.n
        if isinstance(inst, RectInstance):
            return inst.A.shape[1]
        return self.n

    @property
    def rank(self) -> Optional[int]:
        inst = self.instance
        if inst is not None and hasattr(inst, "r"):
            return inst.r
        return self.r

    @property
    def instance_label(self) -> str:
        inst = self.instance
        if inst is not None and hasattr(inst, "label"):
            return inst.label
        return f"{self.task.value}(r={self.r},n={self.n})"

    def cells(self) -> List[Tuple[EmbeddingKind, int, Optional[int]]]:
        """
        (埋め込み, ℓ, k) のセル一覧（埋め込み、ℓ、k の順）
        """
        result = []
        for kind in self.embeddings:
            for ell in self.ell_grid:
                if self.task is Task.GEN_NYSTROM:
                    result.extend((kind, ell, k) for k in self.k_grid if k > ell)
                else:
                    result.append((kind, ell, None))
        return result


@dataclass
class MatrixEstimate:
    """
    ランダム行列の期待値の成分ごとの推定

    Attributes:
        mean: 成分ごとの標本平均
        stderr: 成分ごとの標準誤差
        target: 比較対象
        max_abs_z: 成分ごとの |z| の最大値（複素数は実部・虚部を別々に評価）
        trials: 試行回数
    """

    mean: np.ndarray
    stderr: np.ndarray
    target: np.ndarray
    max_abs_z: float
    trials: int


def z_score(mean: float, stderr: float, target: float) -> float:
    """
    (mean − target)/stderr

    標準誤差が丸め誤差の水準（≤ 1e-10·(1 + |target|)）なら、一致で 0、不一致で ±inf を返します。
    """
    diff = mean - target
    floor = DEGENERATE_SE * (1.0 + abs(target))
    if stderr > floor:
        return diff / stderr
    if abs(diff) <= floor:
        return 0.0
    return float(np.sign(diff)) * np.inf


def within_tolerance(mean: float, stderr: float, target: float, rel: float, sigmas: float = SIGMAS) -> bool:
    """
    |mean − target| ≤ rel·|target| + sigmas·stderr
    """
    return abs(mean - target) <= rel * abs(target) + sigmas * stderr


def within_max_tolerance(mean: float, stderr: float, target: float, rel: float, sigmas: float = SIGMAS) -> bool:
    """
    |mean − target| ≤ max(sigmas·stderr, rel·|target|)
    """
    return abs(mean - target) <= max(sigmas * stderr, rel * abs(target))


def summarize(values: np.ndarray) -> Tuple[float, float, float]:
    """
    試行番号順の値から (平均, 標準誤差, 中央値) を求める
    """
    values = np.asarray(values, dtype=np.float64)
    mean = float(np.mean(values))
    stderr = float(np.std(values, ddof=1) / np.sqrt(values.size)) if values.size > 1 else 0.0
    return mean, stderr, float(np.median(values))


def geometric_grid(low: int, high: int, points: int) -> List[int]:
    """
    low から high までの等比的な整数グリッド（重複なし、昇順）
    """
    if high < low:
        raise InvalidSpec(f"グリッドの範囲が不正です: {low}..{high}")
    raw = np.round(np.geomspace(low, high, num=max(points, 1))).astype(int)
    return sorted(set(int(v) for v in raw))


def middle_third(values: Sequence[int]) -> List[int]:
    """
    グリッドの中央 1/3（インデックス基準）
    """
    count = len(values)
    lo, hi = count // 3, count - count // 3
    if hi <= lo:
        return list(values)
    return list(values[lo:hi])


def prediction_for_class(kind: EmbeddingKind, n: int, r: int, ell: int, field: FieldTag) -> Optional[float]:
    """
    sketch-and-solve の ε = 比 − 1 について、埋め込みのクラスに応じた予測値
    """
    try:
        if kind.universality_class is EmbeddingKind.HAAR:
            return haar_sketch_identity(n, r, ell, field)
        return gaussian_sketch_identity(r, ell, field)
    except DimensionTooSmall:
        return None


class ExperimentRunner:
    """
    モンテカルロ実験の実行クラス

    セルごとに試行番号 0..trials−1 のストリームを使い、集計は試行番号順に行うので、
    並列実行しても結果はビット単位で再現されます。

    Attributes:
        workers: セルを並列に実行するスレッド数
        logger: ロガー
    """

    def __init__(self, workers: Optional[int] = None):
        """
        ExperimentRunnerのコンストラクタ

        Args:
            workers: スレッド数（指定がなければ環境変数 SKETCH_WORKERS、既定は 1）
        """
        # ロガーの設定
        self.logger = logging.getLogger("experiments")
        self.logger.setLevel(logging.INFO)

        if workers is None:
            workers = int(os.getenv("SKETCH_WORKERS", "1"))
        self.workers = max(1, workers)

    # ------------------------------------------------------------------
    # グリッド実行
    # ------------------------------------------------------------------

    def run_grid(self, grid: ExperimentGrid) -> List[TrialSummary]:
        """
        グリッドのすべてのセルを実行する

        セルの失敗は他のセルを止めず、そのセルの status を "failed" にします。

        Args:
            grid: 実験グリッド

        Returns:
            セル順の TrialSummary のリスト
        """
        start_time = time.time()
        cells = grid.cells()
        self.logger.info(
            f"タスク '{grid.task.value}' の {len(cells)} セルを実行しています（試行回数 {grid.trials}、シード {grid.master_seed}）..."
        )

        if self.workers > 1 and len(cells) > 1:
            with ThreadPoolExecutor(max_workers=self.workers) as executor:
                summaries = list(executor.map(lambda cell: self._run_cell(grid, *cell), cells))
        else:
            summaries = [self._run_cell(grid, *cell) for cell in cells]

        failed = sum(1 for s in summaries if not s.ok)
        processing_time = time.time() - start_time
        self.logger.info(f"タスク '{grid.task.value}' が完了しました（失敗 {failed} セル、{processing_time:.2f} 秒）")
        return summaries

    def _run_cell(self, grid: ExperimentGrid, kind: EmbeddingKind, ell: int, k: Optional[int]) -> TrialSummary:
        n = grid.ambient_dim or 0
        r = grid.rank or 0
        base = dict(
            task=grid.task.value,
            embedding=kind.value,
            instance=grid.instance_label,
            n=n,
            r=r,
            ell=ell,
            k=k,
            trials=grid.trials,
            seed=grid.master_seed,
            figure=grid.figure,
            d_or_basis=grid.d_or_basis,
        )
        try:
            trial, theory, reference = self._prepare(grid, kind, ell, k)
            values = np.empty(grid.trials)
            kind_key = KIND_ORDER.index(kind)
            for i in range(grid.trials):
                values[i] = trial(RngStream(grid.master_seed, i).spawn(kind_key))
            mean, stderr, median = summarize(values)
        except (SketchError, np.linalg.LinAlgError, ValueError) as e:
            self.logger.error(f"セル ({kind.value}, ℓ={ell}, k={k}) の実行中にエラーが発生しました: {str(e)}")
            return TrialSummary(mean=float("nan"), stderr=float("nan"), median=float("nan"), status="failed", error=str(e), **base)

        high_variance = grid.task is Task.SKETCH_SOLVE and ell - r - grid.field.alpha <= 2
        return TrialSummary(
            mean=mean,
            stderr=stderr,
            median=median,
            theory=theory,
            z_score=None if theory is None else z_score(mean, stderr, theory),
            reference=reference,
            high_variance=high_variance,
            **base,
        )

    def _spec(self, grid: ExperimentGrid, kind: EmbeddingKind, n: int, ell: int) -> EmbeddingSpec:
        return EmbeddingSpec(kind=kind, n=n, ell=ell, field=grid.field, zeta=grid.zeta)

    def _prepare(
        self, grid: ExperimentGrid, kind: EmbeddingKind, ell: int, k: Optional[int]
    ) -> Tuple[Callable[[RngStream], float], Optional[float], Optional[float]]:
        """
        セルの 1 試行関数・理論値・参照値を組み立てる
        """
        task, inst, field_tag = grid.task, grid.instance, grid.field

        if task is Task.SKETCH_SOLVE:
            if not isinstance(inst, LeastSquaresInstance):
                raise InvalidSpec("sketch-solve には LeastSquaresInstance が必要です")
            spec = self._spec(grid, kind, inst.n, ell)
            optimal = inst.optimal_residual_sq

            def trial(stream: RngStream) -> float:
                result = sketch_and_solve(inst.A, inst.B, sample_embedding(spec, stream.spawn(0)))
                return result.residual_sq / optimal - 1.0

            return trial, prediction_for_class(kind, inst.n, inst.r, ell, field_tag), None

        if task in (Task.RSVD, Task.NYSTROM):
            if isinstance(inst, PsdInstance):
                A, spectrum = inst.H, inst.spectrum
                eig_tail = inst.trace_tail
            elif isinstance(inst, RectInstance) and task is Task.RSVD:
                A, spectrum, eig_tail = inst.A, inst.spectrum, None
            else:
                raise InvalidSpec(f"{task.value} には PsdInstance{'' if task is Task.NYSTROM else ' か RectInstance'} が必要です")
            n, r = A.shape[1], inst.r
            spec = self._spec(grid, kind, n, ell)
            tail = spectrum if task is Task.RSVD else eig_tail

            if task is Task.RSVD:

                def trial(stream: RngStream) -> float:
                    return randomized_svd(A, sample_embedding(spec, stream.spawn(0))).err_sq

            else:

                def trial(stream: RngStream) -> float:
                    return nystrom(A, sample_embedding(spec, stream.spawn(0))).err_sq

            if r < ell:
                theory = 0.0
            else:
                bound = rsvd_bound_sharp if task is Task.RSVD else nystrom_bound
                theory = bound(None, r, ell, field_tag, tail)
            return trial, theory, tail.tail(ell)

        if task is Task.GEN_NYSTROM:
            if isinstance(inst, RectInstance):
                A, spectrum = inst.A, inst.spectrum
            elif isinstance(inst, PsdInstance):
                A, spectrum = inst.H, inst.spectrum
            else:
                raise InvalidSpec("gen-nystrom には RectInstance か PsdInstance が必要です")
            d, n = A.shape
            omega_spec = self._spec(grid, kind, n, ell)
            psi_spec = EmbeddingSpec(kind=grid.psi_kind, n=d, ell=k, field=field_tag, zeta=grid.zeta)

            def trial(stream: RngStream) -> float:
                Omega = sample_embedding(omega_spec, stream.spawn(0))
                Psi = sample_embedding(psi_spec, stream.spawn(1))
                return generalized_nystrom(A, Omega, Psi).err_sq

            theory = None
            if grid.psi_kind in (EmbeddingKind.GAUSSIAN, EmbeddingKind.HAAR):
                gamma_kind = GammaKind.GAUSSIAN if grid.psi_kind is EmbeddingKind.GAUSSIAN else GammaKind.HAAR
                query = BoundQuery(field=field_tag, n=n, d=d, r=inst.r, ell=ell, k=k, gamma_kind=gamma_kind)
                try:
                    theory = gn_bound(query, spectrum)
                except SketchError as e:
                    self.logger.warning(f"一般化 Nyström の上界を評価できません（ℓ={ell}, k={k}）: {str(e)}")
            return trial, theory, spectrum.tail(ell)

        r, n = grid.r, grid.n
        if r is None:
            raise InvalidSpec(f"{task.value} には r が必要です")

        if task is Task.WISHART_INV:

            def trial(stream: RngStream) -> float:
                W = sample_wishart(r, ell, field_tag, stream.spawn(0))
                return float(np.real(np.trace(np.linalg.inv(W)))) / r

            return trial, _safe(inverse_wishart_mean, r, ell, field_tag), None

        if n is None:
            raise InvalidSpec(f"{task.value} には n が必要です")

        if task is Task.BETA_INV:

            def trial(stream: RngStream) -> float:
                X = sample_beta(r, ell, n, field_tag, stream.spawn(0))
                return float(np.real(np.trace(np.linalg.inv(X)))) / r

            return trial, _safe(inverse_beta_mean, r, ell, n, field_tag), None

        if task is Task.HAAR_BLOCK_INV:
            spec = EmbeddingSpec(kind=EmbeddingKind.HAAR, n=n, ell=ell, field=field_tag)

            def trial(stream: RngStream) -> float:
                top = haar_block_check(spec, stream.spawn(0), r)
                return float(np.real(np.trace(np.linalg.inv(top @ adjoint(top))))) / r

            return trial, _safe(inverse_beta_mean, r, ell, n, field_tag), None

        if task is Task.SKETCH_IDENTITY:
            spec = self._spec(grid, kind, n, ell)
            B = np.ones((n - r, 1))
            norm_sq = float(n - r) or 1.0

            def trial(stream: RngStream) -> float:
                return sketching_identity_term(sample_embedding(spec, stream.spawn(0)), r, B) / norm_sq

            return trial, prediction_for_class(kind, n, r, ell, field_tag), None

        raise InvalidSpec(f"未対応のタスクです: {task}")

    # ------------------------------------------------------------------
    # 行列の期待値
    # ------------------------------------------------------------------

    def estimate_matrix_expectation(
        self, draw: Callable[[RngStream], np.ndarray], target: np.ndarray, trials: int, seed: int
    ) -> MatrixEstimate:
        """
        ランダム行列の成分ごとの平均を目標行列と比較する

        Args:
            draw: ストリームを受け取って行列を 1 つ返す関数
            target: 目標とする期待値
            trials: 試行回数
            seed: マスターシード

        Returns:
            MatrixEstimate
        """
        target = np.asarray(target)
        samples = np.stack([np.asarray(draw(RngStream(seed, i))) for i in range(trials)])
        mean = samples.mean(axis=0)
        if trials > 1:
            stderr = np.sqrt(samples.real.var(axis=0, ddof=1) + samples.imag.var(axis=0, ddof=1)) / np.sqrt(trials)
        else:
            stderr = np.zeros(mean.shape)

        zs = []
        for part in (np.real, np.imag):
            part_samples = part(samples)
            part_se = part_samples.std(axis=0, ddof=1) / np.sqrt(trials) if trials > 1 else np.zeros(mean.shape)
            for m, s, t in zip(part(mean).ravel(), part_se.ravel(), part(target).ravel()):
                zs.append(abs(z_score(float(m), float(s), float(t))))
        max_abs_z = float(max(zs)) if zs else 0.0
        return MatrixEstimate(mean=mean, stderr=stderr, target=target, max_abs_z=max_abs_z, trials=trials)

    def estimate_unbiasedness(
        self, instance: LeastSquaresInstance, spec: EmbeddingSpec, trials: int, seed: int
    ) -> Tuple[float, Dict[str, object]]:
        """
        E[X̂] = A⁺B を成分ごとの z スコアで確認する

        Returns:
            (max_abs_z, report)
        """
        if spec.kind not in (EmbeddingKind.GAUSSIAN, EmbeddingKind.HAAR):
            raise InvalidSpec(f"不偏性はガウスかランダム正規直交埋め込みでのみ成り立ちます: {spec.kind.value}")
        if spec.ell <= instance.r + spec.field.alpha:
            raise DimensionTooSmall(f"ℓ={spec.ell} は r + α_K = {instance.r + spec.field.alpha} より大きい必要があります")

        xstar = pseudoinverse(instance.A) @ instance.B

        def draw(stream: RngStream) -> np.ndarray:
            return sketch_and_solve(instance.A, instance.B, sample_embedding(spec, stream)).xhat

        estimate = self.estimate_matrix_expectation(draw, xstar, trials, seed)
        self.logger.info(f"不偏性の確認（{spec.kind.value}, ℓ={spec.ell}, {trials} 試行）: max|z| = {estimate.max_abs_z:.3f}")
        report = {
            "embedding": spec.kind.value,
            "ell": spec.ell,
            "trials": trials,
            "max_abs_z": estimate.max_abs_z,
            "mean": estimate.mean,
            "stderr": estimate.stderr,
            "target": xstar,
        }
        return estimate.max_abs_z, report

    # ------------------------------------------------------------------
    # 普遍性実験
    # ------------------------------------------------------------------


    def universality_grids(
        self,
        fig: Figure,
        scale: Scale,
        seed: int,
        trials: Optional[int] = None,
        ell_grid: Optional[List[int]] = None,
        embeddings: Optional[List[EmbeddingKind]] = None,
        n: Optional[int] = None,
        d: Optional[int] = None,
        p: Optional[int] = None,
        zeta: Optional[int] = None,
    ) -> List[ExperimentGrid]:
        """
        図の再現に使う実験グリッドを組み立てる

        n は規模の既定値を、d と p は最小二乗の図の既定値（d=10, p=1）を上書きします。
        ζ はスパース埋め込みの非ゼロ数（None なら種類ごとの既定値）です。
        """
        preset = SCALE_PRESETS[scale]
        n = n or preset["n"]
        trials = trials or preset["trials"]
        grids = []

        if fig is Figure.FIG1:
            d = d or FIG1_D
            p = p or 1
            ells = ell_grid or geometric_grid(d + 2, n - 1, preset["grid_points"])
            for kind in (LsqKind.COHERENT, LsqKind.INCOHERENT):
                grids.append(
                    ExperimentGrid(
                        task=Task.SKETCH_SOLVE,
                        ell_grid=ells,
                        embeddings=embeddings or FIG1_EMBEDDINGS,
                        instance=make_lsq(kind, n, d, p),
                        trials=trials,
                        master_seed=seed,
                        zeta=zeta,
                        figure=fig.value,
                        d_or_basis=str(d),
                    )
                )
            return grids

        if d is not None or p is not None:
            raise InvalidSpec("d と p は最小二乗の図（図 1）でのみ指定できます")
        ells = ell_grid or geometric_grid(2, n // 2, preset["grid_points"])
        for basis in (Basis.IDENTITY, Basis.DCT):
            for spectrum in (SpectrumKind.STEP, SpectrumKind.POLY):
                grids.append(
                    ExperimentGrid(
                        task=Task.RSVD,
                        ell_grid=ells,
                        embeddings=embeddings or FIG2_EMBEDDINGS,
                        instance=make_psd(basis, spectrum, n),
                        trials=trials,
                        master_seed=seed,
                        zeta=zeta,
                        figure=fig.value,
                        d_or_basis=basis.value,
                    )
                )
        return grids

    def universality_report(
        self,
        fig: Figure,
        scale: Scale,
        seed: int,
        trials: Optional[int] = None,
        ell_grid: Optional[List[int]] = None,
        embeddings: Optional[List[EmbeddingKind]] = None,
        n: Optional[int] = None,
        d: Optional[int] = None,
        p: Optional[int] = None,
        zeta: Optional[int] = None,
    ) -> "UniversalityReport":
        """
        普遍性実験の図を再現し、曲線ごとに普遍性クラスを判定する

        Args:
            fig: 図（FIG1: sketch-and-solve、FIG2: ランダム化SVD）
            scale: PAPER（n=1000、1000 試行）または DESK（n=300、300 試行）
            seed: マスターシード
            trials: 試行回数の上書き
            ell_grid: ℓ グリッドの上書き
            embeddings: 埋め込みの上書き
            n, d, p: 次元の上書き
            zeta: スパース埋め込みの ζ

        Returns:
            全インスタンス・全埋め込み・全 ℓ の TrialSummary と、sketch-and-solve の曲線の判定
        """
        self.logger.info(f"図 {fig.value} を {scale.value} スケールで再現しています（シード {seed}）...")
        summaries: List[TrialSummary] = []
        for grid in self.universality_grids(fig, scale, seed, trials, ell_grid, embeddings, n, d, p, zeta):
            summaries.extend(self.run_grid(grid))

        classes = classify_universality(summaries)
        for (instance, embedding), verdict in classes.items():
            level = logging.INFO if verdict.within_gate else logging.WARNING
            self.logger.log(
                level,
                f"{instance}/{embedding}: {verdict.label} クラスに近い"
                f"（ガウス予測との偏差 {verdict.gaussian_deviation:.3f}、正規直交予測との偏差 {verdict.haar_deviation:.3f}、"
                f"所属クラスの許容範囲 {'内' if verdict.within_gate else '外'}）",
            )
        return UniversalityReport(summaries=summaries, classes=classes)


def _safe(func, *args) -> Optional[float]:
    try:
        return func(*args)
    except DimensionTooSmall:
        return None


@dataclass
class UniversalityClass:
    """
    1 本の曲線の普遍性クラスの判定

    Attributes:
        label: 近い方の予測（"gaussian" または "haar"）
        expected: 埋め込みの種類から決まるクラス
        gaussian_deviation: ガウス予測からの平均絶対相対偏差
        haar_deviation: 正規直交予測からの平均絶対相対偏差
        cells: 判定に使ったセル数
        ells: 判定に使った ℓ
        failures: 所属クラスの予測から 5% + 3 標準誤差を超えて外れたセル
    """

    label: str
    expected: str
    gaussian_deviation: float
    haar_deviation: float
    cells: int = 0
    ells: List[int] = dataclasses.field(default_factory=list)
    failures: List[str] = dataclasses.field(default_factory=list)

    @property
    def within_gate(self) -> bool:
        return not self.failures

    @property
    def matches(self) -> bool:
        return self.label == self.expected


@dataclass
class UniversalityReport:
    """
    普遍性実験の結果

    Attributes:
        summaries: 全セルの TrialSummary
        classes: (インスタンス, 埋め込み) ごとの判定（sketch-and-solve の曲線のみ）
    """

    summaries: List[TrialSummary]
    classes: Dict[Tuple[str, str], UniversalityClass]

    @property
    def failed_cells(self) -> List[TrialSummary]:
        return [s for s in self.summaries if not s.ok]

    @property
    def passed(self) -> bool:
        return not self.failed_cells and all(c.within_gate for c in self.classes.values())


def classify_universality(
    summaries: Sequence[TrialSummary], field_tag: FieldTag = FieldTag.REAL
) -> Dict[Tuple[str, str], UniversalityClass]:
    """
    sketch-and-solve の曲線を、ℓ グリッドの中央 1/3 でガウス予測と正規直交予測のどちらに近いかで分類する

    同じ範囲で、埋め込みの所属クラスの予測から UNIVERSALITY_REL_TOL + 3 標準誤差 以内かどうかも判定します。
    """
    curves: Dict[Tuple[str, str], List[TrialSummary]] = {}
    for s in summaries:
        if s.task == Task.SKETCH_SOLVE.value:
            curves.setdefault((s.instance, s.embedding), []).append(s)

    result = {}
    for key, cells in curves.items():
        instance, embedding = key
        expected = EmbeddingKind.from_name(embedding).universality_class
        cells = sorted(cells, key=lambda s: s.ell)
        chosen = set(middle_third([s.ell for s in cells]))
        gaussian_devs, haar_devs, failures = [], [], []
        for s in cells:
            if s.ell not in chosen:
                continue
            if not s.ok:
                failures.append(f"{instance}/{embedding}/ℓ={s.ell}: {s.error}")
                continue
            g = prediction_for_class(EmbeddingKind.GAUSSIAN, s.n, s.r, s.ell, field_tag)
            h = prediction_for_class(EmbeddingKind.HAAR, s.n, s.r, s.ell, field_tag)
            own = g if expected is EmbeddingKind.GAUSSIAN else h
            if own is not None and not within_tolerance(s.mean, s.stderr, own, UNIVERSALITY_REL_TOL):
                failures.append(f"{instance}/{embedding}/ℓ={s.ell}: 平均 {s.mean:.4g} ± {s.stderr:.2g}、予測 {own:.4g}")
            if g is None or h is None or g == 0.0 or h == 0.0:
                continue
            gaussian_devs.append(abs(s.mean - g) / g)
            haar_devs.append(abs(s.mean - h) / h)
        if not gaussian_devs and not failures:
            continue
        g_dev = float(np.mean(gaussian_devs)) if gaussian_devs else float("nan")
        h_dev = float(np.mean(haar_devs)) if haar_devs else float("nan")
        result[key] = UniversalityClass(
            label="gaussian" if g_dev <= h_dev else "haar",
            expected="gaussian" if expected is EmbeddingKind.GAUSSIAN else "haar",
            gaussian_deviation=g_dev,
            haar_deviation=h_dev,
            cells=len(gaussian_devs),
            ells=sorted(chosen),
            failures=failures,
        )
    return result


def hmt_reference(instance: PsdInstance, ell: int, field_tag: FieldTag = FieldTag.REAL) -> Optional[float]:
    """
    ランダム化SVD の既存の上界（比較用）
    """
    try:
        return rsvd_bound_hmt(None, instance.r, ell, field_tag, instance.spectrum)
    except SketchError:
        return None
