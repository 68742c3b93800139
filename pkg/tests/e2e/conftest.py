import json
import os
import subprocess
import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parents[2]
CLI_TIMEOUT = int(os.getenv("E2E_TIMEOUT", "300"))


@pytest.fixture
def write_config(tmp_path):
    """辞書を JSON 設定ファイルとして書き、そのパスを返す"""

    def _write(cfg, name="config.json"):
        path = tmp_path / name
        path.write_text(json.dumps(cfg), encoding="utf-8")
        return path

    return _write


@pytest.fixture
def run_cli():
    """python -m app.main を別プロセスで実行する。スレッド数は 1 に固定"""

    def _run(*args, env=None):
        merged = os.environ.copy()
        merged.update({"VWS_THREADS": "1", "VWS_LOG_LEVEL": "WARNING"})
        merged.update(env or {})
        return subprocess.run(
            [sys.executable, "-m", "app.main", *map(str, args)],
            cwd=ROOT, env=merged, capture_output=True, text=True, timeout=CLI_TIMEOUT,
        )

    return _run
