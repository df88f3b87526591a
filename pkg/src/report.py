"""
結果出力モジュール

TrialSummary の行を CSV / JSON / SVG として書き出します。
SVG は CSV と同じ行から描画し、追加の計算は行いません。
"""

import csv
import io
import json
import logging
import math
import sys
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .experiments import TrialSummary  # noqa: E402

logger = logging.getLogger("report")

CSV_COLUMNS = [
    "figure",
    "instance",
    "embedding",
    "n",
    "d_or_basis",
    "ell",
    "k",
    "trials",
    "mean",
    "stderr",
    "median",
    "theory",
    "z",
    "optimal_tail",
    "high_variance",
    "status",
]

# SVG の出力をビット単位で再現するためのソルト
SVG_HASHSALT = "sketch-bench"


def format_float(value: Optional[float]) -> str:
    """
    有効数字 10 桁で整形する（None は空文字列）
    """
    if value is None:
        return ""
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return f"{value:.10g}"


def summary_to_row(summary: TrialSummary) -> Dict[str, str]:
    return {
        "figure": summary.figure,
        "instance": summary.instance,
        "embedding": summary.embedding,
        "n": str(summary.n),
        "d_or_basis": summary.d_or_basis,
        "ell": str(summary.ell),
        "k": "" if summary.k is None else str(summary.k),
        "trials": str(summary.trials),
        "mean": format_float(summary.mean),
        "stderr": format_float(summary.stderr),
        "median": format_float(summary.median),
        "theory": format_float(summary.theory),
        "z": format_float(summary.z_score),
        "optimal_tail": format_float(summary.reference),
        "high_variance": "1" if summary.high_variance else "0",
        "status": summary.status,
    }


def render_csv(summaries: Sequence[TrialSummary]) -> str:
    """
    固定の列順と書式で CSV 文字列を作る
    """
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for summary in summaries:
        writer.writerow(summary_to_row(summary))
    return buffer.getvalue()


def render_json(summaries: Sequence[TrialSummary]) -> str:
    """
    CSV と同じ行を JSON 配列にする
    """
    return json.dumps([summary_to_row(s) for s in summaries], ensure_ascii=False, indent=2) + "\n"


def _write_text(text: str, path: Optional[str]):
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    file_path = Path(path)
    try:
        if file_path.parent != Path(""):
            file_path.parent.mkdir(parents=True, exist_ok=True)
        with open(file_path, "w", encoding="utf-8", newline="") as f:
            f.write(text)
    except OSError as e:
        raise OSError(f"'{file_path}' への書き込みに失敗しました: {e.strerror or str(e)}") from e
    logger.info(f"結果を書き出しました: {file_path}")


def write_csv(summaries: Sequence[TrialSummary], path: Optional[str] = None):
    """
    CSV を書き出す（path が None または "-" なら標準出力）
    """
    _write_text(render_csv(summaries), path)


def write_json(summaries: Sequence[TrialSummary], path: Optional[str] = None):
    """
    JSON を書き出す（path が None または "-" なら標準出力）
    """
    _write_text(render_json(summaries), path)


def _group(summaries: Sequence[TrialSummary]) -> Dict[str, Dict[str, List[TrialSummary]]]:
    grouped: Dict[str, Dict[str, List[TrialSummary]]] = {}
    for s in summaries:
        if not s.ok:
            continue
        grouped.setdefault(s.instance, {}).setdefault(s.embedding, []).append(s)
    return grouped


def render_svg(summaries: Sequence[TrialSummary], title: str = "") -> str:
    """
    インスタンスごとに平均と ℓ の関係を描いた SVG 文字列を作る

    理論値は破線、最適なランク ℓ 近似の誤差（ある場合）は点線で重ねます。縦軸は対数です。
    """
    grouped = _group(summaries)
    panels = max(len(grouped), 1)
    cols = min(panels, 2)
    rows = math.ceil(panels / cols)

    with plt.rc_context({"svg.hashsalt": SVG_HASHSALT, "svg.fonttype": "path"}):
        fig, axes = plt.subplots(rows, cols, figsize=(5.0 * cols, 3.8 * rows), squeeze=False)
        for ax, (instance, curves) in zip(axes.ravel(), grouped.items()):
            reference_drawn = False
            for embedding, cells in curves.items():
                cells = sorted(cells, key=lambda s: (s.ell, s.k or 0))
                ells = [s.ell for s in cells]
                (line,) = ax.plot(ells, [s.mean for s in cells], marker="o", markersize=3, label=embedding)
                theory = [(s.ell, s.theory) for s in cells if s.theory is not None and s.theory > 0]
                if theory:
                    ax.plot([e for e, _ in theory], [t for _, t in theory], linestyle="--", color=line.get_color(), linewidth=0.8)
                if not reference_drawn:
                    reference = [(s.ell, s.reference) for s in cells if s.reference is not None and s.reference > 0]
                    if reference:
                        ax.plot([e for e, _ in reference], [v for _, v in reference], linestyle=":", color="black", label="optimal")
                        reference_drawn = True
            ax.set_yscale("log")
            ax.set_xscale("log")
            ax.set_xlabel("ℓ")
            ax.set_ylabel("mean")
            ax.set_title(instance, fontsize=9)
            ax.legend(fontsize=6)
        for ax in axes.ravel()[len(grouped):]:
            ax.set_visible(False)
        if title:
            fig.suptitle(title)
        fig.tight_layout()

        buffer = io.StringIO()
        fig.savefig(buffer, format="svg", metadata={"Date": None})
        plt.close(fig)
    return buffer.getvalue()


def write_svg(summaries: Sequence[TrialSummary], path: Optional[str] = None, title: str = ""):
    """
    SVG を書き出す（path が None または "-" なら標準出力）
    """
    _write_text(render_svg(summaries, title=title), path)
