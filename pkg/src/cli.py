#!/usr/bin/env python
"""
sketch-bench CLI

検証スイートの実行、普遍性実験の図の再現、埋め込み次元の計画、理論値の表示を行うための
コマンドラインインターフェース
"""

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

from dotenv import load_dotenv

from .dense_core import FieldTag
from .embeddings import EmbeddingKind
from .exceptions import InfeasibleBudget, InvalidSpec, SketchError
from .experiments import ExperimentRunner, Figure, Scale
from .report import format_float, write_csv, write_json, write_svg
from .theory import (
    BoundQuery,
    BudgetMethod,
    GammaKind,
    SpectrumTail,
    budget_for_epsilon,
    gn_bound,
    gn_lower_factor,
    hmt_factor,
    plan_split,
    rsvd_bound_hmt,
    rsvd_bound_sharp,
    rsvd_lower_factor,
    sharp_factor,
    split_objective,
    ss_dimensions,
    ss_ratio_gaussian,
    ss_ratio_haar,
)
from .verification import SUITES, create_verification_suite

DEFAULT_SEED = 20250101

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2


def setup_logging(log_dir: Optional[str] = None):
    """
    ロギングの設定

    標準出力は CSV / JSON / レポートに使うため、ログは標準エラー出力とログファイルに書き出します。
    """
    # ログディレクトリの作成
    log_dir = log_dir or os.environ.get("SKETCH_LOG_DIR", "logs")
    os.makedirs(log_dir, exist_ok=True)

    # ロギングの設定
    logging.basicConfig(
        level=logging.INFO,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        handlers=[
            logging.StreamHandler(sys.stderr),
            logging.FileHandler(os.path.join(log_dir, "sketch_bench.log"), encoding="utf-8"),
        ],
    )
    return logging.getLogger("cli")


@dataclass
class CliConfig:
    """
    検証済みのコマンドライン設定

    Attributes:
        command: サブコマンド
        seed: マスターシード
        trials: 試行回数（None なら各処理の既定値）
        field: スカラー体（None なら各処理の既定値）
        format: 出力形式
        out: 出力先（None なら標準出力）
    """

    command: str
    seed: int = DEFAULT_SEED
    trials: Optional[int] = None
    field: Optional[FieldTag] = None
    format: str = "text"
    out: Optional[str] = None
    suite: str = "all"
    figure: Optional[Figure] = None
    scale: Scale = Scale.DESK
    embeddings: Optional[List[EmbeddingKind]] = None
    ell_grid: Optional[List[int]] = None
    svg: Optional[str] = None
    n: Optional[int] = None
    d: Optional[int] = None
    p: Optional[int] = None
    r: Optional[int] = None
    q: Optional[int] = None
    ell: Optional[int] = None
    k: Optional[int] = None
    zeta: Optional[int] = None
    budget: Optional[int] = None
    epsilon: Optional[float] = None
    method: str = "both"
    gamma: GammaKind = GammaKind.GAUSSIAN
    spectrum: Optional[str] = None
    workers: Optional[int] = None

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> "CliConfig":
        """
        argparse の結果から設定を作り、検証する

        Raises:
            InvalidSpec: 値が不正な場合
        """
        get = lambda name, default=None: getattr(args, name, default)  # noqa: E731

        seed = get("seed")
        if seed is None:
            seed = int(os.getenv("SKETCH_SEED", str(DEFAULT_SEED)))
        trials = get("trials")
        if trials is None and os.getenv("SKETCH_TRIALS"):
            trials = int(os.getenv("SKETCH_TRIALS"))

        config = cls(
            command=args.command,
            seed=seed,
            trials=trials,
            field=FieldTag.from_name(get("field")) if get("field") else None,
            format=get("format") or "text",
            out=get("out"),
            suite=get("suite") or "all",
            figure=Figure(str(get("id"))) if get("id") is not None else None,
            scale=Scale(get("scale") or "desk"),
            embeddings=[EmbeddingKind.from_name(e) for e in get("embeddings")] if get("embeddings") else None,
            ell_grid=get("ell_grid"),
            svg=get("svg"),
            n=get("n"),
            d=get("d"),
            p=get("p"),
            r=get("r"),
            q=get("q"),
            ell=get("ell"),
            k=get("k"),
            zeta=get("zeta"),
            budget=get("budget"),
            epsilon=get("epsilon"),
            method=get("method") or "both",
            gamma=GammaKind(get("gamma")) if get("gamma") else GammaKind.GAUSSIAN,
            spectrum=get("spectrum"),
            workers=get("workers"),
        )
        config.validate()
        return config

    def validate(self):
        if self.trials is not None and self.trials < 1:
            raise InvalidSpec(f"--trials は 1 以上である必要があります: {self.trials}")
        for name in ("n", "d", "r", "q", "ell", "k", "budget", "workers"):
            value = getattr(self, name)
            if value is not None and value < 0:
                raise InvalidSpec(f"--{name} は 0 以上である必要があります: {value}")
        if self.epsilon is not None and self.epsilon <= 0:
            raise InvalidSpec(f"--epsilon は正である必要があります: {self.epsilon}")
        if self.ell_grid is not None and any(b <= a for a, b in zip(self.ell_grid, self.ell_grid[1:])):
            raise InvalidSpec(f"--ell-grid は狭義単調増加である必要があります: {self.ell_grid}")
        if self.command == "plan" and self.q is None and self.r is None:
            raise InvalidSpec("plan には --q または --r が必要です")
        if self.command == "plan" and self.q is not None and self.budget is None and self.epsilon is None:
            raise InvalidSpec("plan --q には --budget または --epsilon が必要です")
        if self.command == "figure" and self.figure is None:
            raise InvalidSpec("figure には --id が必要です")
        for name in ("p", "zeta"):
            value = getattr(self, name)
            if value is not None and value < 1:
                raise InvalidSpec(f"--{name} は 1 以上である必要があります: {value}")
        if self.command == "figure" and self.figure is Figure.FIG2 and (self.d is not None or self.p is not None):
            raise InvalidSpec("--d と --p は --id 1 でのみ指定できます")


# ----------------------------------------------------------------------
# サブコマンド
# ----------------------------------------------------------------------


def cmd_verify(config: CliConfig) -> int:
    """
    検証スイートを実行し、項目ごとに PASS / FAIL を表示する
    """
    logger = logging.getLogger("cli")
    logger.info(f"検証スイート '{config.suite}' を実行しています（シード {config.seed}）...")

    verifier = create_verification_suite(ExperimentRunner(workers=config.workers))
    results = verifier.run(config.suite, seed=config.seed, trials=config.trials)

    if config.format == "json":
        payload = [
            {
                "name": r.name,
                "suite": r.suite,
                "passed": r.passed,
                "detail": r.detail,
                "statistic": format_float(r.statistic),
            }
            for r in results
        ]
        print(json.dumps(payload, ensure_ascii=False, indent=2))
    else:
        for r in results:
            z = f" [{format_float(r.statistic)}]" if r.statistic is not None else ""
            print(f"{'PASS' if r.passed else 'FAIL'}  {r.suite:<13} {r.name:<24}{z} {r.detail}")

    failed = [r for r in results if not r.passed]
    logger.info(f"{len(results) - len(failed)}/{len(results)} 項目が合格しました")
    if config.format != "json":
        print(f"{len(results) - len(failed)}/{len(results)} 項目が合格しました")
    return EXIT_FAILED if failed else EXIT_OK


def cmd_figure(config: CliConfig) -> int:
    """
    普遍性実験の図を再現し、CSV（または JSON / SVG）を書き出す

    sketch-and-solve の曲線の普遍性クラスの判定は標準エラー出力に表示します。
    """
    logger = logging.getLogger("cli")
    runner = ExperimentRunner(workers=config.workers)
    try:
        report = runner.universality_report(
            config.figure,
            config.scale,
            config.seed,
            trials=config.trials,
            ell_grid=config.ell_grid,
            embeddings=config.embeddings,
            n=config.n,
            d=config.d,
            p=config.p,
            zeta=config.zeta,
        )
    except SketchError as e:
        print(f"エラー: {str(e)}", file=sys.stderr)
        return EXIT_USAGE
    summaries = report.summaries

    title = f"figure {config.figure.value} ({config.scale.value}, seed {config.seed})"
    try:
        if config.format == "json":
            write_json(summaries, config.out)
        elif config.format == "svg":
            write_svg(summaries, config.out, title=title)
        else:
            write_csv(summaries, config.out)
        if config.svg:
            write_svg(summaries, config.svg, title=title)
    except OSError as e:
        logger.error(str(e))
        print(f"エラー: {str(e)}", file=sys.stderr)
        return EXIT_FAILED

    for (instance, embedding), verdict in report.classes.items():
        gate = "OK" if verdict.within_gate else "外れ"
        print(
            f"{instance:<12} {embedding:<14} class={verdict.label:<9} expected={verdict.expected:<9} "
            f"gaussian_dev={format_float(verdict.gaussian_deviation)} haar_dev={format_float(verdict.haar_deviation)} {gate}",
            file=sys.stderr,
        )

    failed = len(report.failed_cells)
    if failed:
        logger.warning(f"{failed} セルが失敗しました")
        return EXIT_FAILED
    return EXIT_OK


def plan_report(config: CliConfig) -> List[Dict[str, object]]:
    """
    plan サブコマンドの各行（項目名と値）
    """
    rows: List[Dict[str, object]] = []
    if config.r is not None and config.epsilon is not None:
        ss_field = config.field or FieldTag.REAL
        ell_min, ell_sufficient = ss_dimensions(config.r, ss_field, config.epsilon)
        rows.append({"quantity": "ell_min", "value": ell_min})
        rows.append({"quantity": "ell_sufficient", "value": ell_sufficient})

    if config.q is not None and config.budget is not None:
        split_field = config.field or FieldTag.COMPLEX
        k, ell, objective = plan_split(config.q, config.budget, split_field)
        rows.append({"quantity": "k", "value": k})
        rows.append({"quantity": "ell", "value": ell})
        rows.append({"quantity": "objective", "value": objective})
        alternative = (k + 1, ell - 1) if ell > 1 else None
        if alternative is not None:
            rows.append({"quantity": f"objective(k={alternative[0]},ell={alternative[1]})", "value": split_objective(*alternative, config.q, split_field)})

    if config.q is not None and config.epsilon is not None:
        methods = [BudgetMethod.GENERALIZED_NYSTROM, BudgetMethod.RSVD] if config.method == "both" else [BudgetMethod(config.method)]
        for method in methods:
            rows.append({"quantity": f"budget_{method.value}", "value": budget_for_epsilon(config.q, config.epsilon, method)})
    return rows


def cmd_plan(config: CliConfig) -> int:
    """
    埋め込み次元・予算の分割・行列ベクトル積の数を表示する
    """
    logger = logging.getLogger("cli")
    try:
        rows = plan_report(config)
    except InfeasibleBudget as e:
        logger.error(f"予算が不足しています: {str(e)}")
        print(f"エラー: {str(e)}", file=sys.stderr)
        return EXIT_FAILED
    _print_rows(rows, config.format)
    return EXIT_OK


def bounds_report(config: CliConfig) -> List[Dict[str, object]]:
    """
    与えられたパラメータで評価できるすべての理論値

    前提条件を満たさない式は status にメッセージを入れ、他の式の評価は続けます。
    """
    field_tag = config.field or FieldTag.REAL
    tail = SpectrumTail.from_file(config.spectrum) if config.spectrum else None
    r = config.r if config.r is not None else (tail.rank if tail is not None else None)
    query = BoundQuery(
        field=field_tag,
        n=config.n or 0,
        d=config.d or 0,
        r=r or 0,
        ell=config.ell or 0,
        k=config.k or 0,
        q=config.q or 0,
        gamma_kind=config.gamma,
    )

    entries = []

    def add(name: str, func, *needs):
        if any(v is None for v in needs):
            return
        try:
            entries.append({"quantity": name, "value": func(), "status": "ok"})
        except (SketchError, ValueError, ZeroDivisionError) as e:
            entries.append({"quantity": name, "value": None, "status": str(e)})

    add("ss_ratio_gaussian", lambda: ss_ratio_gaussian(query), r, config.ell)
    add("ss_ratio_haar", lambda: ss_ratio_haar(query), r, config.ell, config.n)
    add("hmt_factor", lambda: hmt_factor(config.q, config.ell, field_tag), config.q, config.ell)
    add("sharp_factor", lambda: sharp_factor(r, config.ell, config.q, field_tag), r, config.ell, config.q)
    add("rsvd_lower_factor", lambda: rsvd_lower_factor(r, config.ell, config.q, field_tag), r, config.ell, config.q)
    add("rsvd_bound_hmt", lambda: rsvd_bound_hmt(None, r, config.ell, field_tag, tail), r, config.ell, tail)
    add("rsvd_bound_sharp", lambda: rsvd_bound_sharp(None, r, config.ell, field_tag, tail), r, config.ell, tail)
    add("gn_bound", lambda: gn_bound(query, tail), r, config.ell, config.k, tail)
    add("gn_lower_factor", lambda: gn_lower_factor(query), r, config.ell, config.k, config.q, config.d)
    add("split_objective", lambda: split_objective(config.k, config.ell, config.q, field_tag), config.k, config.ell, config.q)
    return entries


def cmd_bounds(config: CliConfig) -> int:
    """
    理論値の表を表示する
    """
    logger = logging.getLogger("cli")
    try:
        rows = bounds_report(config)
    except OSError as e:
        logger.error(f"スペクトルファイルを読み込めません: {str(e)}")
        print(f"エラー: {str(e)}", file=sys.stderr)
        return EXIT_FAILED
    if not rows:
        print("評価できる式がありません（--r と --ell などを指定してください）", file=sys.stderr)
        return EXIT_USAGE
    _print_rows(rows, config.format)
    return EXIT_OK


def _print_rows(rows: Sequence[Dict[str, object]], fmt: str):
    def show(value):
        if isinstance(value, float):
            return format_float(value)
        return "" if value is None else str(value)

    if fmt == "json":
        print(json.dumps([{k: show(v) if k == "value" else v for k, v in row.items()} for row in rows], ensure_ascii=False, indent=2))
        return
    for row in rows:
        status = row.get("status", "ok")
        suffix = "" if status == "ok" else f"  ({status})"
        print(f"{row['quantity']:<36} {show(row['value'])}{suffix}")


# ----------------------------------------------------------------------
# 引数の解析
# ----------------------------------------------------------------------


def _int_list(text: str) -> List[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"整数のカンマ区切りリストではありません: {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sketch-bench",
        description="sketch-bench CLI - ランダム埋め込みの期待誤差の検証と普遍性実験の再現",
    )
    subparsers = parser.add_subparsers(dest="command", help="実行するコマンド")

    def common(p, formats):
        p.add_argument("--seed", type=int, default=None, help=f"マスターシード（既定: 環境変数 SKETCH_SEED、なければ {DEFAULT_SEED}）")
        p.add_argument("--format", choices=formats, default=formats[0], help=f"出力形式（既定: {formats[0]}）")

    # verifyコマンド
    verify_parser = subparsers.add_parser("verify", help="検証スイートを実行する")
    common(verify_parser, ["text", "json"])
    verify_parser.add_argument("--suite", choices=list(SUITES) + ["all"], default="all", help="スイート（既定: all）")
    verify_parser.add_argument("--trials", type=int, default=None, help="試行回数（既定: 各項目の既定値、環境変数 SKETCH_TRIALS）")
    verify_parser.add_argument("--workers", type=int, default=None, help="並列スレッド数（既定: 環境変数 SKETCH_WORKERS）")

    # figureコマンド
    figure_parser = subparsers.add_parser("figure", help="普遍性実験の図を再現する")
    common(figure_parser, ["csv", "json", "svg"])
    figure_parser.add_argument("--id", choices=["1", "2"], required=True, help="図（1: sketch-and-solve、2: ランダム化SVD）")
    figure_parser.add_argument("--scale", choices=[s.value for s in Scale], default="desk", help="規模（既定: desk）")
    figure_parser.add_argument("--trials", type=int, default=None, help="試行回数（既定: 規模の既定値）")
    figure_parser.add_argument("--ell-grid", type=_int_list, default=None, help="ℓ グリッド（カンマ区切り）")
    figure_parser.add_argument("--embeddings", nargs="+", default=None, help="埋め込みの種類（既定: 図の既定値）")
    figure_parser.add_argument("--n", type=int, default=None, help="Ω の行数 n（既定: 規模の既定値）")
    figure_parser.add_argument("--d", type=int, default=None, help="最小二乗の列数 d（図 1 のみ、既定: 10）")
    figure_parser.add_argument("--p", type=int, default=None, help="右辺の列数 p（図 1 のみ、既定: 1）")
    figure_parser.add_argument("--zeta", type=int, default=None, help="スパース埋め込みの Ω の 1 行あたりの非ゼロ数 ζ（既定: SparseIID 16、SparseStack 8）")
    figure_parser.add_argument("--out", "-o", default=None, help="出力ファイル（既定: 標準出力）")
    figure_parser.add_argument("--svg", default=None, help="CSV と同時に書き出す SVG ファイル")
    figure_parser.add_argument("--workers", type=int, default=None, help="並列スレッド数（既定: 環境変数 SKETCH_WORKERS）")

    # planコマンド
    plan_parser = subparsers.add_parser("plan", help="埋め込み次元と予算を計画する")
    common(plan_parser, ["text", "json"])
    plan_parser.add_argument("--q", type=int, default=None, help="目標ランク q")
    plan_parser.add_argument("--r", type=int, default=None, help="sketch-and-solve のランク r")
    plan_parser.add_argument("--budget", "-t", type=int, default=None, help="行列ベクトル積の予算 t = k + ℓ")
    plan_parser.add_argument("--epsilon", type=float, default=None, help="精度目標 ε")
    plan_parser.add_argument("--method", choices=["both", "gn", "rsvd"], default="both", help="予算を求める手法（既定: both）")
    plan_parser.add_argument(
        "--field", choices=["real", "complex"], default=None, help="スカラー体（既定: 分割は complex、sketch-and-solve の次元は real）"
    )

    # boundsコマンド
    bounds_parser = subparsers.add_parser("bounds", help="理論値を表示する")
    common(bounds_parser, ["text", "json"])
    bounds_parser.add_argument("--field", choices=["real", "complex"], default="real", help="スカラー体（既定: real）")
    for name, text in (("n", "Ω の行数 n"), ("d", "A の行数 d"), ("r", "ランク r"), ("ell", "埋め込み次元 ℓ"), ("k", "左埋め込み次元 k"), ("q", "比較ランク q")):
        bounds_parser.add_argument(f"--{name}", type=int, default=None, help=text)
    bounds_parser.add_argument("--gamma", choices=[g.value for g in GammaKind], default=GammaKind.GAUSSIAN.value, help="Ψ の種類（既定: gaussian）")
    bounds_parser.add_argument("--spectrum", default=None, help="特異値の二乗を 1 行に 1 つ書いたファイル（降順）")

    return parser


def run(argv: Optional[Sequence[str]] = None) -> int:
    """
    コマンドライン引数を解析して処理を実行し、終了コードを返す

    0: すべて合格、1: 検証の失敗や I/O エラー、2: 使い方の誤り
    """
    # 環境変数の読み込み
    load_dotenv()

    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help()
        return EXIT_USAGE

    setup_logging()
    try:
        config = CliConfig.from_args(args)
    except (SketchError, ValueError) as e:
        print(f"エラー: {str(e)}", file=sys.stderr)
        return EXIT_USAGE

    # コマンドに応じた処理を実行
    commands = {"verify": cmd_verify, "figure": cmd_figure, "plan": cmd_plan, "bounds": cmd_bounds}
    return commands[config.command](config)


def main():
    """
    メイン関数
    """
    sys.exit(run())


if __name__ == "__main__":
    main()
