"""
検証スイートモジュール

期待値の公式（モンテカルロ）と代数的な恒等式（サンプルごと）の検証項目を
スイートごとに登録し、まとめて実行します。
"""

import logging
import time
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional

import numpy as np

from .algorithms import (
    nystrom,
    randomized_svd,
    residual_decomposition,
    schur_complement,
    sketch_and_solve,
    weighting_gap,
)
from .dense_core import FieldTag, adjoint, frob_sq, pseudoinverse
from .embeddings import EmbeddingKind, EmbeddingSpec, RngStream, haar_block_check, sample_beta, sample_haar_unitary, sample_wishart
from .exceptions import SketchError
from .experiments import (
    ExperimentGrid,
    ExperimentRunner,
    Figure,
    Scale,
    Task,
    TrialSummary,
    hmt_reference,
    within_max_tolerance,
)
from .instances import LsqKind, Basis, SpectrumKind, make_lsq, make_psd, make_random_lsq, make_random_rect, make_rect_hard, make_two_eig
from .theory import (
    BoundQuery,
    BudgetMethod,
    GammaKind,
    budget_for_epsilon,
    gn_lower_factor,
    hmt_factor,
    inverse_beta_mean,
    inverse_wishart_mean,
    plan_split,
    rsvd_bound_sharp,
    sharp_factor,
    split_objective,
    ss_dimensions,
    ss_ratio_gaussian,
    ss_ratio_haar,
    two_eig_limit,
)

SUITES = ("sketch-solve", "wishart", "beta", "algebraic", "low-rank", "planner", "universality")

# 代数的な恒等式の許容誤差
IDENTITY_TOL = 1e-8
EIGENVALUE_SLACK = 1e-9
# 統計的検証の許容誤差
STAT_REL_TOL = 0.02
MAX_ABS_Z = 4.0
GN_LOWER_REL_TOL = 0.03


@dataclass
class CheckResult:
    """
    検証項目の結果

    Attributes:
        name: 項目名
        suite: スイート名
        passed: 合格したかどうか
        detail: 診断メッセージ
        statistic: z スコアや最大誤差などの代表値
        processing_time: 処理時間（秒）
    """

    name: str
    suite: str
    passed: bool
    detail: str
    statistic: Optional[float] = None
    processing_time: float = 0.0


@dataclass
class CheckOutcome:
    passed: bool
    detail: str
    statistic: Optional[float] = None


class VerificationSuite:
    """
    検証項目のレジストリ

    Attributes:
        checks: 登録された検証項目のディクショナリ
        check_handlers: 項目名から実行関数へのディクショナリ
        runner: モンテカルロ実験の実行クラス
        logger: ロガー
    """

    def __init__(self, runner: Optional[ExperimentRunner] = None):
        """
        VerificationSuiteのコンストラクタ

        Args:
            runner: 実験の実行クラス（指定がなければ新規作成）
        """
        self.checks: Dict[str, Dict[str, str]] = {}
        self.check_handlers: Dict[str, Callable[[int, Optional[int]], CheckOutcome]] = {}
        self.runner = runner or ExperimentRunner()

        # ロガーの設定
        self.logger = logging.getLogger("verification")
        self.logger.setLevel(logging.INFO)

    def register_check(self, name: str, suite: str, description: str, handler: Callable[[int, Optional[int]], CheckOutcome]):
        """
        検証項目を登録します。

        Args:
            name: 項目名
            suite: 所属するスイート
            description: 項目の説明
            handler: (seed, trials) を受け取り CheckOutcome を返す関数
        """
        if suite not in SUITES:
            raise ValueError(f"不明なスイートです: {suite}")
        self.checks[name] = {"name": name, "suite": suite, "description": description}
        self.check_handlers[name] = handler
        self.logger.debug(f"検証項目 '{name}' を登録しました")

    def list_checks(self, suite: str = "all") -> List[Dict[str, str]]:
        """
        スイートに含まれる検証項目の一覧（"all" ならすべて）
        """
        if suite != "all" and suite not in SUITES:
            raise ValueError(f"不明なスイートです: {suite}")
        return [c for c in self.checks.values() if suite == "all" or c["suite"] == suite]

    def run(self, suite: str = "all", seed: int = 0, trials: Optional[int] = None) -> List[CheckResult]:
        """
        スイートの検証項目を順に実行する

        1 つの項目で例外が起きても残りは実行し、その項目を不合格とします。

        Args:
            suite: スイート名または "all"
            seed: マスターシード
            trials: 試行回数の上書き（None なら各項目の既定値）

        Returns:
            CheckResult のリスト
        """
        results = []
        for check in self.list_checks(suite):
            name = check["name"]
            start_time = time.time()
            self.logger.info(f"検証項目 '{name}' を実行しています...")
            try:
                outcome = self.check_handlers[name](seed, trials)
            except (SketchError, ValueError, np.linalg.LinAlgError) as e:
                self.logger.error(f"検証項目 '{name}' の実行中にエラーが発生しました: {str(e)}")
                outcome = CheckOutcome(passed=False, detail=f"エラー: {str(e)}")
            processing_time = time.time() - start_time
            results.append(
                CheckResult(
                    name=name,
                    suite=check["suite"],
                    passed=outcome.passed,
                    detail=outcome.detail,
                    statistic=outcome.statistic,
                    processing_time=processing_time,
                )
            )
            level = logging.INFO if outcome.passed else logging.WARNING
            self.logger.log(level, f"検証項目 '{name}': {'PASS' if outcome.passed else 'FAIL'}（{processing_time:.2f} 秒）")
        return results


def create_verification_suite(runner: Optional[ExperimentRunner] = None) -> VerificationSuite:
    """
    既定の検証項目をすべて登録した VerificationSuite を作る
    """
    verifier = VerificationSuite(runner)
    register_default_checks(verifier)
    return verifier


# ----------------------------------------------------------------------
# 統計的検証
# ----------------------------------------------------------------------


def _mean_gate(mean: float, stderr: float, target: float, rel: float = STAT_REL_TOL) -> CheckOutcome:
    passed = within_max_tolerance(mean, stderr, target, rel)
    z = (mean - target) / stderr if stderr > 0 else 0.0
    detail = f"平均 {mean:.6g} ± {stderr:.3g}、目標 {target:.6g}（z = {z:.2f}）"
    return CheckOutcome(passed=passed, detail=detail, statistic=z)


def _sketch_solve_check(runner: ExperimentRunner, kind: EmbeddingKind, field: FieldTag) -> Callable:
    def handler(seed: int, trials: Optional[int]) -> CheckOutcome:
        n, d, ell = 200, 5, 20
        instance = make_lsq(LsqKind.COHERENT, n, d, 1)
        grid = ExperimentGrid(
            task=Task.SKETCH_SOLVE,
            ell_grid=[ell],
            embeddings=[kind],
            instance=instance,
            trials=trials or 5000,
            master_seed=seed,
            field=field,
        )
        summary = runner.run_grid(grid)[0]
        if not summary.ok:
            return CheckOutcome(passed=False, detail=summary.error)
        query = BoundQuery(field=field, n=n, r=instance.r, ell=ell)
        target = ss_ratio_gaussian(query) if kind is EmbeddingKind.GAUSSIAN else ss_ratio_haar(query)
        return _mean_gate(summary.mean + 1.0, summary.stderr, target)

    return handler


def _unbiasedness_check(runner: ExperimentRunner, kind: EmbeddingKind) -> Callable:
    def handler(seed: int, trials: Optional[int]) -> CheckOutcome:
        instance = make_random_lsq(50, 3, 2, 3, RngStream(seed, 0, (0xB1A5,)))
        spec = EmbeddingSpec(kind=kind, n=50, ell=10)
        max_abs_z, _ = runner.estimate_unbiasedness(instance, spec, trials or 5000, seed)
        return CheckOutcome(passed=max_abs_z < MAX_ABS_Z, detail=f"max|z| = {max_abs_z:.3f}（< {MAX_ABS_Z}）", statistic=max_abs_z)

    return handler


def _inverse_mean_check(
    runner: ExperimentRunner, draw: Callable[[RngStream], np.ndarray], r: int, target_scalar: float, default_trials: int
) -> Callable:
    def handler(seed: int, trials: Optional[int]) -> CheckOutcome:
        target = target_scalar * np.eye(r)
        estimate = runner.estimate_matrix_expectation(lambda s: np.linalg.inv(draw(s)), target, trials or default_trials, seed)
        diag_mean = float(np.real(np.trace(estimate.mean))) / r
        diag_se = float(np.sqrt(np.sum(np.diag(estimate.stderr) ** 2))) / r
        diag_ok = abs(diag_mean - target_scalar) <= 3.0 * diag_se
        passed = diag_ok and estimate.max_abs_z < MAX_ABS_Z
        detail = (
            f"対角平均 {diag_mean:.6g} ± {diag_se:.3g}、目標 {target_scalar:.6g}、"
            f"成分ごとの max|z| = {estimate.max_abs_z:.3f}"
        )
        return CheckOutcome(passed=passed, detail=detail, statistic=estimate.max_abs_z)

    return handler


def _two_eig_check(runner: ExperimentRunner) -> Callable:
    def handler(seed: int, trials: Optional[int]) -> CheckOutcome:
        a, b, q, r, n, ell = 1e6, 1.0, 5, 50, 60, 20
        grid = ExperimentGrid(
            task=Task.NYSTROM,
            ell_grid=[ell],
            embeddings=[EmbeddingKind.GAUSSIAN],
            instance=make_two_eig(a, b, q, r, n),
            trials=trials or 5000,
            master_seed=seed,
        )
        summary = runner.run_grid(grid)[0]
        if not summary.ok:
            return CheckOutcome(passed=False, detail=summary.error)
        return _mean_gate(summary.mean, summary.stderr, two_eig_limit(b, q, r, ell, FieldTag.REAL))

    return handler


def _rsvd_step_check(runner: ExperimentRunner) -> Callable:
    def handler(seed: int, trials: Optional[int]) -> CheckOutcome:
        instance = make_psd(Basis.IDENTITY, SpectrumKind.STEP, 100)
        grid = ExperimentGrid(
            task=Task.RSVD,
            ell_grid=[15, 20, 30, 50],
            embeddings=[EmbeddingKind.GAUSSIAN],
            instance=instance,
            trials=trials or 1000,
            master_seed=seed,
        )
        failures = []
        worst = -np.inf
        for s in runner.run_grid(grid):
            if not s.ok:
                failures.append(f"ℓ={s.ell}: {s.error}")
                continue
            sharp = rsvd_bound_sharp(None, instance.r, s.ell, FieldTag.REAL, instance.spectrum)
            hmt = hmt_reference(instance, s.ell)
            worst = max(worst, (s.mean - sharp) / max(s.stderr, 1e-300))
            if s.mean > sharp + 3.0 * s.stderr:
                failures.append(f"ℓ={s.ell}: 平均 {s.mean:.4g} > シャープな上界 {sharp:.4g} + 3SE")
            if hmt is None:
                failures.append(f"ℓ={s.ell}: 既存の上界を評価できません")
            elif sharp > hmt * (1.0 + 1e-12):
                failures.append(f"ℓ={s.ell}: シャープな上界 {sharp:.4g} > 既存の上界 {hmt:.4g}")
        detail = "; ".join(failures) if failures else "すべての ℓ で 平均 ≤ シャープな上界 + 3SE ≤ 既存の上界 + 3SE"
        return CheckOutcome(passed=not failures, detail=detail, statistic=float(worst))

    return handler


def _gn_upper_check(runner: ExperimentRunner) -> Callable:
    def handler(seed: int, trials: Optional[int]) -> CheckOutcome:
        instance = make_random_rect(60, 80, 60, 1.0, RngStream(seed, 0, (0x6E,)))
        grid = ExperimentGrid(
            task=Task.GEN_NYSTROM,
            ell_grid=[10],
            k_grid=[25],
            embeddings=[EmbeddingKind.GAUSSIAN],
            psi_kind=EmbeddingKind.GAUSSIAN,
            instance=instance,
            trials=trials or 2000,
            master_seed=seed,
        )
        s = runner.run_grid(grid)[0]
        if not s.ok:
            return CheckOutcome(passed=False, detail=s.error)
        bound = s.theory
        passed = bound is not None and s.mean <= bound + 3.0 * s.stderr
        return CheckOutcome(passed=passed, detail=f"平均 {s.mean:.6g} ± {s.stderr:.3g}、上界 {bound}", statistic=s.z_score)

    return handler


def _gn_lower_check(runner: ExperimentRunner) -> Callable:
    def handler(seed: int, trials: Optional[int]) -> CheckOutcome:
        a, q, r, d, n, ell, k = 1e6, 3, 40, 60, 80, 10, 25
        instance = make_rect_hard(a, q, r, d, n)
        grid = ExperimentGrid(
            task=Task.GEN_NYSTROM,
            ell_grid=[ell],
            k_grid=[k],
            embeddings=[EmbeddingKind.GAUSSIAN],
            psi_kind=EmbeddingKind.HAAR,
            instance=instance,
            trials=trials or 2000,
            master_seed=seed,
        )
        s = runner.run_grid(grid)[0]
        if not s.ok:
            return CheckOutcome(passed=False, detail=s.error)
        query = BoundQuery(field=FieldTag.REAL, d=d, n=n, r=r, ell=ell, k=k, q=q, gamma_kind=GammaKind.HAAR)
        prediction = gn_lower_factor(query) * instance.spectrum.tail(q)
        passed = s.mean >= prediction - (3.0 * s.stderr + GN_LOWER_REL_TOL * prediction)
        return CheckOutcome(
            passed=passed,
            detail=f"平均 {s.mean:.6g} ± {s.stderr:.3g}、下界の予測 {prediction:.6g}",
            statistic=(s.mean - prediction) / s.stderr if s.stderr > 0 else 0.0,
        )

    return handler


def _universality_check(runner: ExperimentRunner) -> Callable:
    def handler(seed: int, trials: Optional[int]) -> CheckOutcome:
        report = runner.universality_report(Figure.FIG1, Scale.DESK, seed, trials=trials)
        failures = [f for verdict in report.classes.values() for f in verdict.failures]
        gated = {(i, e, ell) for (i, e), verdict in report.classes.items() for ell in verdict.ells}
        failures.extend(
            f"{s.instance}/{s.embedding}/ℓ={s.ell}: {s.error}"
            for s in report.failed_cells
            if (s.instance, s.embedding, s.ell) not in gated
        )
        if failures:
            detail = "; ".join(failures)
        else:
            checked = sum(verdict.cells for verdict in report.classes.values())
            detail = f"{len(report.classes)} 曲線 {checked} セルすべてが所属クラスの予測に一致"
            mismatched = [f"{i}/{e}" for (i, e), verdict in report.classes.items() if not verdict.matches]
            if mismatched:
                detail += f"（偏差は他方のクラスの方が小さい曲線: {', '.join(mismatched)}）"
        return CheckOutcome(passed=report.passed, detail=detail, statistic=float(len(failures)))

    return handler


def _trace_grid_check(
    runner: ExperimentRunner, task: Task, r: int, n: Optional[int], ells: List[int], field: FieldTag, default_trials: int
) -> Callable:
    # ℓ ごとに tr(逆行列)/r の平均を閉じた式と比べる
    def handler(seed: int, trials: Optional[int]) -> CheckOutcome:
        grid = ExperimentGrid(
            task=task,
            ell_grid=ells,
            embeddings=[EmbeddingKind.HAAR if task is Task.HAAR_BLOCK_INV else EmbeddingKind.GAUSSIAN],
            trials=trials or default_trials,
            master_seed=seed,
            field=field,
            n=n,
            r=r,
        )
        return _grid_gate(runner.run_grid(grid))

    return handler


def _sketch_identity_check(runner: ExperimentRunner, kind: EmbeddingKind) -> Callable:
    def handler(seed: int, trials: Optional[int]) -> CheckOutcome:
        grid = ExperimentGrid(
            task=Task.SKETCH_IDENTITY,
            ell_grid=[20, 40],
            embeddings=[kind],
            trials=trials or 2000,
            master_seed=seed,
            n=200,
            r=5,
        )
        return _grid_gate(runner.run_grid(grid))

    return handler


def _grid_gate(summaries: List[TrialSummary]) -> CheckOutcome:
    failures, worst = [], 0.0
    for s in summaries:
        if not s.ok or s.theory is None:
            failures.append(f"ℓ={s.ell}: {s.error or '理論値がありません'}")
            continue
        worst = max(worst, abs(s.z_score or 0.0))
        if not within_max_tolerance(s.mean, s.stderr, s.theory, STAT_REL_TOL):
            failures.append(f"ℓ={s.ell}: 平均 {s.mean:.6g} ± {s.stderr:.3g}、目標 {s.theory:.6g}")
    detail = "; ".join(failures) if failures else "、".join(f"ℓ={s.ell}: {s.mean:.4g}（目標 {s.theory:.4g}）" for s in summaries)
    return CheckOutcome(passed=not failures, detail=detail, statistic=worst)


# ----------------------------------------------------------------------
# 代数的検証
# ----------------------------------------------------------------------


def _gaussian(gen: np.random.Generator, shape) -> np.ndarray:
    return gen.standard_normal(shape)


def check_residual_decomposition(seed: int, count: int = 500) -> CheckOutcome:
    """
    残差分解の 2 項の和が sketch-and-solve の残差に一致すること（ランク落ちを含む）
    """
    worst = 0.0
    for i in range(count):
        stream = RngStream(seed, i, (0x52,))
        gen = stream.generator()
        n = int(gen.integers(20, 41))
        d = int(gen.integers(2, 7))
        r = int(gen.integers(1, d + 1))
        p = int(gen.integers(1, 3))
        ell = d + 3
        instance = make_random_lsq(n, d, p, r, stream.spawn(1))
        Omega = _gaussian(gen, (n, ell))
        residual = sketch_and_solve(instance.A, instance.B, Omega).residual_sq
        cross, optimal = residual_decomposition(instance.A, instance.B, Omega)
        worst = max(worst, abs(cross + optimal - residual) / max(residual, np.finfo(float).tiny))
    return CheckOutcome(passed=worst <= IDENTITY_TOL, detail=f"最大相対誤差 {worst:.3e}（{count} 例）", statistic=worst)


def check_gram_correspondence(seed: int, count: int = 200) -> CheckOutcome:
    """
    H = A*A の Nyström 近似が Â*Â に一致し、トレース誤差が ‖A − Â‖²_F に一致すること
    """
    worst_entry, worst_trace = 0.0, 0.0
    for i in range(count):
        gen = RngStream(seed, i, (0x47,)).generator()
        d = int(gen.integers(5, 16))
        n = int(gen.integers(5, 16))
        ell = int(gen.integers(1, min(d, n)))
        A = _gaussian(gen, (d, n))
        Omega = _gaussian(gen, (n, ell))
        H = adjoint(A) @ A
        rsvd = randomized_svd(A, Omega)
        nys = nystrom(H, Omega)
        Ahat = rsvd.approximation
        worst_entry = max(worst_entry, float(np.max(np.abs(nys.approximation - adjoint(Ahat) @ Ahat))))
        worst_trace = max(worst_trace, abs(nys.err_sq - rsvd.err_sq) / max(rsvd.err_sq, 1.0))
    passed = worst_entry <= IDENTITY_TOL and worst_trace <= IDENTITY_TOL
    return CheckOutcome(
        passed=passed,
        detail=f"成分ごとの最大誤差 {worst_entry:.3e}、トレースの最大相対誤差 {worst_trace:.3e}（{count} 例）",
        statistic=max(worst_entry, worst_trace),
    )


def _random_psd(gen: np.random.Generator, n: int) -> np.ndarray:
    G = _gaussian(gen, (n, n))
    return G @ G.T / n + 0.1 * np.eye(n)


def _min_eig(M: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(0.5 * (M + adjoint(M)))[0])


def check_schur_properties(seed: int, count: int = 200) -> CheckOutcome:
    """
    Schur 補行列の半正定値性・表現の不変性・凹性・単調性
    """
    failures = {"psd": 0, "invariance": 0, "concavity": 0, "monotonicity": 0}
    worst = 0.0
    for i in range(count):
        stream = RngStream(seed, i, (0x53,))
        gen = stream.generator()
        n, ell = 8, 3
        H1, H2 = _random_psd(gen, n), _random_psd(gen, n)
        Omega = _gaussian(gen, (n, ell))
        U = sample_haar_unitary(ell, FieldTag.REAL, stream.spawn(1))
        V = sample_haar_unitary(ell, FieldTag.REAL, stream.spawn(2))
        M = U @ np.diag(gen.uniform(0.5, 2.0, ell)) @ V

        S1, S2 = schur_complement(H1, Omega), schur_complement(H2, Omega)
        if _min_eig(S1) < -EIGENVALUE_SLACK:
            failures["psd"] += 1
        diff = float(np.max(np.abs(schur_complement(H1, Omega @ M) - S1)))
        worst = max(worst, diff)
        if diff > IDENTITY_TOL:
            failures["invariance"] += 1
        for theta in (0.25, 0.5, 0.9):
            mixed = schur_complement(theta * H1 + (1 - theta) * H2, Omega)
            if _min_eig(mixed - theta * S1 - (1 - theta) * S2) < -EIGENVALUE_SLACK:
                failures["concavity"] += 1
        G = _gaussian(gen, (n, 2))
        H_big = H1 + G @ G.T
        if _min_eig(schur_complement(H_big, Omega) - S1) < -EIGENVALUE_SLACK:
            failures["monotonicity"] += 1
    passed = not any(failures.values())
    detail = "、".join(f"{k}: 失敗 {v}" for k, v in failures.items()) + f"（{count} 例、不変性の最大誤差 {worst:.3e}）"
    return CheckOutcome(passed=passed, detail=detail, statistic=float(sum(failures.values())))


def check_weighting_hurts(seed: int, count: int = 1000) -> CheckOutcome:
    """
    重み付けは損失を増やすだけであること ‖M⁺‖²_F ≤ ‖(R*M)⁺R*‖²_F
    """
    worst = np.inf
    for i in range(count):
        gen = RngStream(seed, i, (0x57,)).generator()
        ell = int(gen.integers(2, 9))
        r = int(gen.integers(1, ell))
        M = _gaussian(gen, (ell, r))
        R = _gaussian(gen, (ell, ell)) + 2.0 * np.eye(ell)
        scale = max(1.0, frob_sq(pseudoinverse(M)))
        worst = min(worst, weighting_gap(M, R) / scale)
    return CheckOutcome(passed=worst >= -EIGENVALUE_SLACK, detail=f"最小の（正規化した）差 {worst:.3e}（{count} 例）", statistic=worst)


def check_projector_equivalence(seed: int, count: int = 100) -> CheckOutcome:
    """
    ランダム化SVD の基底形式と擬似逆形式 (AΩ)(AΩ)⁺A が一致すること
    """
    worst = 0.0
    for i in range(count):
        gen = RngStream(seed, i, (0x50,)).generator()
        A = _gaussian(gen, (10, 20))
        Omega = _gaussian(gen, (20, 5))
        Y = A @ Omega
        direct = Y @ pseudoinverse(Y) @ A
        worst = max(worst, float(np.max(np.abs(randomized_svd(A, Omega).approximation - direct))))
    return CheckOutcome(passed=worst <= 1e-9, detail=f"最大誤差 {worst:.3e}（{count} 例）", statistic=worst)


# ----------------------------------------------------------------------
# 計画式の検証
# ----------------------------------------------------------------------


def check_planner(seed: int, trials: Optional[int]) -> CheckOutcome:
    """
    予算の分割と必要な行列ベクトル積の数
    """
    problems = []
    k, ell, objective = plan_split(16, 80)
    if (k, ell) != (53, 27) or abs(objective - 5.0035) > 1e-3:
        problems.append(f"plan_split(16, 80) = ({k}, {ell}, {objective:.4f})")
    if not split_objective(54, 26, 16) > objective:
        problems.append("(54, 26) が (53, 27) より良くなっています")
    budget = budget_for_epsilon(10, 0.5, BudgetMethod.RSVD)
    if budget != 60:
        problems.append(f"ランダム化SVD の予算 {budget} ≠ 60")
    if ss_dimensions(10, FieldTag.REAL, 0.1) != (12, 111):
        problems.append(f"ss_dimensions = {ss_dimensions(10, FieldTag.REAL, 0.1)}")
    detail = "; ".join(problems) if problems else f"k={k}, ℓ={ell}, 目的関数 {objective:.4f}; RSVD 予算 {budget}"
    return CheckOutcome(passed=not problems, detail=detail, statistic=objective)


def check_closed_forms(seed: int, trials: Optional[int]) -> CheckOutcome:
    """
    閉じた式の代表値
    """
    expected = [
        ("ガウス (実数, r=10, ℓ=20)", ss_ratio_gaussian(BoundQuery(field=FieldTag.REAL, r=10, ell=20)), 2.1111),
        ("正規直交 (実数, n=1000, r=10, ℓ=20)", ss_ratio_haar(BoundQuery(field=FieldTag.REAL, n=1000, r=10, ell=20)), 2.0999),
        ("ガウス (複素数, r=10, ℓ=20)", ss_ratio_gaussian(BoundQuery(field=FieldTag.COMPLEX, r=10, ell=20)), 2.0),
        ("シャープな係数 (r=100, ℓ=20, q=10)", sharp_factor(100, 20, 10, FieldTag.REAL), 1.8765),
        ("既存の係数 (ℓ=20, q=10)", hmt_factor(10, 20, FieldTag.REAL), 2.1111),
        ("逆 Wishart (r=3, ℓ=12)", inverse_wishart_mean(3, 12, FieldTag.REAL), 1.0 / 8.0),
        ("逆 Beta (r=3, ℓ=10, n=50)", inverse_beta_mean(3, 10, 50, FieldTag.REAL), 7.6667),
    ]
    bad = [f"{label}: {value:.6f} ≠ {target}" for label, value, target in expected if abs(value - target) > 1e-4]
    return CheckOutcome(passed=not bad, detail="; ".join(bad) if bad else f"{len(expected)} 個の式が一致", statistic=float(len(bad)))


# ----------------------------------------------------------------------
# 登録
# ----------------------------------------------------------------------


def register_default_checks(verifier: VerificationSuite):
    """
    既定の検証項目を登録します。

    Args:
        verifier: VerificationSuite のインスタンス
    """
    runner = verifier.runner

    for kind in (EmbeddingKind.GAUSSIAN, EmbeddingKind.HAAR):
        for field_tag in (FieldTag.REAL, FieldTag.COMPLEX):
            verifier.register_check(
                name=f"ss-{kind.value}-{field_tag.value}",
                suite="sketch-solve",
                description=f"sketch-and-solve の期待残差比（{kind.value}, {field_tag.value}, n=200, r=5, ℓ=20）",
                handler=_sketch_solve_check(runner, kind, field_tag),
            )
    for kind in (EmbeddingKind.GAUSSIAN, EmbeddingKind.HAAR):
        verifier.register_check(
            name=f"unbiased-{kind.value}",
            suite="sketch-solve",
            description=f"E[X̂] = A⁺B（{kind.value}, n=50, d=3, p=2, ℓ=10）",
            handler=_unbiasedness_check(runner, kind),
        )

    for kind in (EmbeddingKind.GAUSSIAN, EmbeddingKind.HAAR):
        verifier.register_check(
            name=f"sketch-identity-{kind.value}",
            suite="sketch-solve",
            description=f"E‖(Ω₁*)⁺Ω₂*B‖²_F / ‖B‖²_F の閉じた式（{kind.value}, n=200, r=5, ℓ ∈ {{20, 40}}）",
            handler=_sketch_identity_check(runner, kind),
        )

    for field_tag in (FieldTag.REAL, FieldTag.COMPLEX):
        verifier.register_check(
            name=f"inverse-wishart-{field_tag.value}",
            suite="wishart",
            description=f"E[W⁻¹] = I/(ℓ − r − α)（{field_tag.value}, r=3, ℓ=12）",
            handler=_inverse_mean_check(
                runner,
                lambda s, f=field_tag: sample_wishart(3, 12, f, s),
                3,
                inverse_wishart_mean(3, 12, field_tag),
                10000,
            ),
        )

    verifier.register_check(
        name="inverse-wishart-trace",
        suite="wishart",
        description="tr(W⁻¹)/r の ℓ 依存性（実数, r=3, ℓ ∈ {10, 12, 24}）",
        handler=_trace_grid_check(runner, Task.WISHART_INV, 3, None, [10, 12, 24], FieldTag.REAL, 5000),
    )

    for field_tag in (FieldTag.REAL, FieldTag.COMPLEX):
        beta_mean = inverse_beta_mean(3, 10, 50, field_tag)
        verifier.register_check(
            name=f"inverse-beta-{field_tag.value}",
            suite="beta",
            description=f"E[X⁻¹] = (1 + (n−ℓ)/(ℓ − r − α))·I（{field_tag.value}, r=3, ℓ=10, n=50）",
            handler=_inverse_mean_check(runner, lambda s, f=field_tag: sample_beta(3, 10, 50, f, s), 3, beta_mean, 10000),
        )
        haar_spec = EmbeddingSpec(kind=EmbeddingKind.HAAR, n=50, ell=10, field=field_tag)
        verifier.register_check(
            name=f"haar-top-block-{field_tag.value}",
            suite="beta",
            description=f"正規直交埋め込みの先頭ブロック Ω₁Ω₁* が同じ逆行列の期待値を持つ（{field_tag.value}）",
            handler=_inverse_mean_check(
                runner,
                lambda s, spec=haar_spec: (lambda top: top @ adjoint(top))(haar_block_check(spec, s, 3)),
                3,
                beta_mean,
                10000,
            ),
        )
    for task, label in ((Task.BETA_INV, "inverse-beta-trace"), (Task.HAAR_BLOCK_INV, "haar-block-trace")):
        verifier.register_check(
            name=label,
            suite="beta",
            description=f"tr(X⁻¹)/r の ℓ 依存性（{task.value}, r=3, n=50, ℓ ∈ {{10, 20, 40}}）",
            handler=_trace_grid_check(runner, task, 3, 50, [10, 20, 40], FieldTag.REAL, 5000),
        )

    algebraic = [
        ("residual-decomposition", "残差分解の恒等式（500 例、ランク落ちを含む）", check_residual_decomposition),
        ("gram-correspondence", "Gram 対応 Ĥ = Â*Â とトレース恒等式（200 例）", check_gram_correspondence),
        ("schur-properties", "Schur 補行列の性質（200 例）", check_schur_properties),
        ("weighting-hurts", "重み付けの損失が非負（1000 例）", check_weighting_hurts),
        ("projector-equivalence", "ランダム化SVD の射影形式の一致", check_projector_equivalence),
    ]
    for name, description, func in algebraic:
        verifier.register_check(name=name, suite="algebraic", description=description, handler=lambda seed, trials, f=func: f(seed))

    verifier.register_check(
        name="two-eig-limit",
        suite="low-rank",
        description="2 固有値インスタンスでの Nyström トレース誤差（a=1e6, q=5, r=50, n=60, ℓ=20）",
        handler=_two_eig_check(runner),
    )
    verifier.register_check(
        name="rsvd-step-bound",
        suite="low-rank",
        description="step スペクトルでのランダム化SVD の上界（n=100, ℓ ∈ {15, 20, 30, 50}）",
        handler=_rsvd_step_check(runner),
    )
    verifier.register_check(
        name="gn-upper-bound",
        suite="low-rank",
        description="一般化 Nyström の上界（60×80, r=60, ℓ=10, k=25）",
        handler=_gn_upper_check(runner),
    )
    verifier.register_check(
        name="gn-lower-bound",
        suite="low-rank",
        description="一般化 Nyström の困難インスタンスでの下界（a=1e6, 正規直交 Ψ）",
        handler=_gn_lower_check(runner),
    )

    verifier.register_check(name="plan-split", suite="planner", description="予算の分割と行列ベクトル積の数", handler=check_planner)
    verifier.register_check(name="closed-forms", suite="planner", description="閉じた式の代表値", handler=check_closed_forms)

    verifier.register_check(
        name="fig1-desk-universality",
        suite="universality",
        description="最小二乗の普遍性（n=300, d=10, 300 試行、ℓ グリッドの中央 1/3）",
        handler=_universality_check(runner),
    )
