"""CLI のサブコマンド。各モジュールは run(config, out_dir) -> int を持つ。"""
