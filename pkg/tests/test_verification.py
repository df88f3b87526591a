"""
検証スイートのテスト
"""

import pytest

from src.exceptions import DimensionTooSmall
from src.experiments import ExperimentRunner
from src.verification import (
    SUITES,
    CheckOutcome,
    VerificationSuite,
    check_closed_forms,
    check_gram_correspondence,
    check_planner,
    check_projector_equivalence,
    check_residual_decomposition,
    check_schur_properties,
    check_weighting_hurts,
    create_verification_suite,
)


def test_verification_suite_initialization():
    """VerificationSuite の初期化をテストします"""
    verifier = VerificationSuite(ExperimentRunner(workers=1))
    assert verifier.checks == {}
    assert verifier.check_handlers == {}


def test_register_check():
    """検証項目の登録をテストします"""
    verifier = VerificationSuite(ExperimentRunner(workers=1))

    def handler(seed, trials):
        return CheckOutcome(passed=True, detail="ok", statistic=float(seed))

    verifier.register_check(name="dummy", suite="planner", description="Dummy check", handler=handler)

    assert "dummy" in verifier.checks
    assert verifier.checks["dummy"]["suite"] == "planner"
    assert verifier.check_handlers["dummy"] == handler
    assert verifier.list_checks("planner") == [{"name": "dummy", "suite": "planner", "description": "Dummy check"}]
    assert verifier.list_checks("wishart") == []

    with pytest.raises(ValueError):
        verifier.register_check(name="bad", suite="unknown", description="", handler=handler)
    with pytest.raises(ValueError):
        verifier.list_checks("unknown")


def test_run_marks_errors_as_failures():
    """例外を投げた項目は不合格になり、残りの項目は実行される"""
    verifier = VerificationSuite(ExperimentRunner(workers=1))

    def broken(seed, trials):
        raise DimensionTooSmall("ℓ が小さすぎます")

    verifier.register_check(name="broken", suite="planner", description="", handler=broken)
    verifier.register_check(
        name="fine", suite="planner", description="", handler=lambda seed, trials: CheckOutcome(True, f"seed={seed}")
    )

    results = verifier.run("planner", seed=5)
    assert [r.name for r in results] == ["broken", "fine"]
    assert not results[0].passed
    assert "ℓ が小さすぎます" in results[0].detail
    assert results[1].passed
    assert results[1].detail == "seed=5"


def test_default_checks_cover_every_suite():
    verifier = create_verification_suite(ExperimentRunner(workers=1))
    suites = {check["suite"] for check in verifier.list_checks()}
    assert suites == set(SUITES)
    names = set(verifier.checks)
    assert {"ss-gaussian-real", "ss-haar-complex", "unbiased-haar", "inverse-wishart-complex", "haar-top-block-real"} <= names
    assert {"residual-decomposition", "two-eig-limit", "gn-lower-bound", "plan-split", "fig1-desk-universality"} <= names
    assert {"inverse-beta-complex", "haar-top-block-complex", "inverse-wishart-trace", "haar-block-trace", "sketch-identity-haar"} <= names


def test_algebraic_checks_pass_with_small_counts():
    assert check_residual_decomposition(1, count=50).passed
    assert check_gram_correspondence(1, count=30).passed
    assert check_schur_properties(1, count=20).passed
    assert check_weighting_hurts(1, count=200).passed
    assert check_projector_equivalence(1, count=20).passed


def test_planner_suite_passes():
    verifier = create_verification_suite(ExperimentRunner(workers=1))
    results = verifier.run("planner", seed=7)
    assert [r.name for r in results] == ["plan-split", "closed-forms"]
    assert all(r.passed for r in results)
    assert check_planner(0, None).statistic == pytest.approx(5.0035, abs=1e-3)
    assert check_closed_forms(0, None).statistic == 0.0


def test_algebraic_suite_passes():
    verifier = create_verification_suite(ExperimentRunner(workers=1))
    results = verifier.run("algebraic", seed=7)
    assert len(results) == 5
    assert all(r.passed for r in results), [r.detail for r in results if not r.passed]


def _run_suite(suite, trials, seed=7):
    verifier = create_verification_suite(ExperimentRunner(workers=2))
    results = verifier.run(suite, seed=seed, trials=trials)
    assert results
    assert all(r.passed for r in results), [(r.name, r.detail) for r in results if not r.passed]
    return results


@pytest.mark.slow
def test_sketch_solve_suite_passes():
    """期待残差比・不偏性・スケッチの恒等式（試行回数を減らして実行）"""
    names = [r.name for r in _run_suite("sketch-solve", 1000)]
    assert "ss-haar-complex" in names
    assert "sketch-identity-gaussian" in names


@pytest.mark.slow
def test_wishart_suite_passes():
    _run_suite("wishart", 2000)


@pytest.mark.slow
def test_beta_suite_passes():
    """逆 Beta と Haar の先頭ブロックは実数体と複素数体の両方で検証される"""
    names = [r.name for r in _run_suite("beta", 2000)]
    assert {"inverse-beta-real", "inverse-beta-complex", "haar-top-block-real", "haar-top-block-complex"} <= set(names)


@pytest.mark.slow
def test_low_rank_suite_passes():
    names = [r.name for r in _run_suite("low-rank", 300)]
    assert names == ["two-eig-limit", "rsvd-step-bound", "gn-upper-bound", "gn-lower-bound"]


@pytest.mark.slow
def test_universality_suite_passes():
    """最小二乗の図の 8 種類の埋め込みが所属クラスの予測に一致する"""
    (result,) = _run_suite("universality", 60)
    assert result.statistic == 0.0
    assert "16 曲線" in result.detail
