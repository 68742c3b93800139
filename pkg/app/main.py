"""コマンドラインの入口。

  python -m app.main simulate|divcurl-check|dispersion|justify|hamiltonian --config <path> [--out <dir>] [--threads N]

終了コード: 0 正常, 2 設定エラー, 3 数値エラー・想定外の失敗
"""
from __future__ import annotations

import argparse
import importlib
import json
import logging
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

from dotenv import load_dotenv
from pydantic import ValidationError

# .envファイルから環境変数を読み込む
load_dotenv()

# - VWS_THREADS: --threads 未指定時のスレッド数（既定 1 = 参照用の単一スレッド実行）
# - VWS_LOG_LEVEL: ログレベル（既定 INFO）
# - VWS_OUT_DIR: --out 未指定時の出力ディレクトリ（既定 ./out）
DEFAULT_THREADS = int(os.getenv("VWS_THREADS", "1"))
LOG_LEVEL = os.getenv("VWS_LOG_LEVEL", "INFO").upper()
DEFAULT_OUT_DIR = os.getenv("VWS_OUT_DIR", "out")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_FAILURE = 3

COMMANDS = {
    "simulate": "app.commands.simulate",
    "divcurl-check": "app.commands.divcurl_check",
    "dispersion": "app.commands.dispersion",
    "justify": "app.commands.justify",
    "hamiltonian": "app.commands.hamiltonian_check",
}

logger = logging.getLogger("app.main")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vws", description="渦度付き水面波の数値実験ツール")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON 設定ファイル")
        p.add_argument("--out", default=None, help="出力ディレクトリ（既定は VWS_OUT_DIR）")
        p.add_argument("--threads", type=int, default=None, help="スレッド数（既定は VWS_THREADS）")
    return parser


def _limit_threads(n: int) -> None:
    # numpy / scipy の BLAS スレッド数はインポート前に決める必要がある
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(var, str(max(1, n)))


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=LOG_LEVEL, format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    threads = args.threads if args.threads is not None else DEFAULT_THREADS
    if threads < 1:
        logger.error("--threads は 1 以上で指定してください: %d", threads)
        return EXIT_CONFIG
    _limit_threads(threads)

    from app.commands.common import load_config
    from app.errors import VwsError

    try:
        config = load_config(args.config)
    except ValidationError as e:
        logger.error("設定ファイルが不正です: %s", e)
        return EXIT_CONFIG
    except (OSError, json.JSONDecodeError, ValueError) as e:
        logger.error("設定ファイルを読み込めません: %s", e)
        return EXIT_CONFIG

    out_dir = Path(args.out or config.out_dir or DEFAULT_OUT_DIR)
    out_dir.mkdir(parents=True, exist_ok=True)
    command = importlib.import_module(COMMANDS[args.command])
    try:
        if args.command == "justify":
            return command.run(config, out_dir, threads=threads)
        return command.run(config, out_dir)
    except VwsError as e:
        logger.error("数値エラーで停止しました: %s", e)
        return EXIT_FAILURE
    except Exception:
        logger.exception("想定外のエラー")
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
