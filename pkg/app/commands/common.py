"""サブコマンド共通の入出力。"""
from __future__ import annotations

import csv
import logging
from pathlib import Path
from typing import Iterable, Mapping, Sequence, Union

from app.models import RunConfig

logger = logging.getLogger(__name__)


def load_config(path: Union[str, Path]) -> RunConfig:
    """JSON の設定を読み込む。ValidationError と OSError は呼び出し側で終了コード 2 に変換する"""
    text = Path(path).read_text(encoding="utf-8")
    return RunConfig.model_validate_json(text)


def format_value(v) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def write_csv(path: Union[str, Path], columns: Sequence[str], rows: Iterable[Mapping]) -> Path:
    """全列を 17 桁で書き出す。欠けた列は空欄"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([format_value(row[c]) if c in row else "" for c in columns])
    logger.info("wrote %s", path)
    return path


def print_table(title: str, columns: Sequence[str], rows: Iterable[Mapping]) -> None:
    print(title)
    print("  ".join(f"{c:>14s}" for c in columns))
    for row in rows:
        cells = []
        for c in columns:
            v = row.get(c, "")
            cells.append(f"{v:>14.6e}" if isinstance(v, float) else f"{str(v):>14s}")
        print("  ".join(cells))
