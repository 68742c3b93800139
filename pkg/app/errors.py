"""数値計算で発生する例外の定義。

CLI 側では VwsError をまとめて受けて終了コード 3 に変換する。
各例外は診断に使う数値を属性として保持する。
"""
from __future__ import annotations


class VwsError(Exception):
    """本パッケージ固有の数値エラーの基底クラス"""


class MeanNotZero(VwsError):
    def __init__(self, mean: float, tol: float, what: str = "field"):
        self.mean = float(mean)
        self.tol = float(tol)
        self.what = what
        super().__init__(f"{what} の平均が 0 ではありません: mean={self.mean:.3e} tol={self.tol:.3e}")


class NonFiniteSymbol(VwsError):
    def __init__(self, count: int):
        self.count = int(count)
        super().__init__(f"乗数シンボルに非有限値が含まれています: count={self.count}")


class DepthVanishes(VwsError):
    def __init__(self, min_h: float, h_min: float):
        self.min_h = float(min_h)
        self.h_min = float(h_min)
        super().__init__(f"水深が下限を下回りました: min_h={self.min_h:.4e} < h_min={self.h_min:.4e}")


class KrylovNoConvergence(VwsError):
    def __init__(self, iterations: int, residual: float):
        self.iterations = int(iterations)
        self.residual = float(residual)
        super().__init__(f"GMRES が収束しません: iterations={self.iterations} residual={self.residual:.3e}")


class NotDivergenceFree(VwsError):
    def __init__(self, residual: float, tol: float):
        self.residual = float(residual)
        self.tol = float(tol)
        super().__init__(f"渦度が発散ゼロではありません: residual={self.residual:.3e} tol={self.tol:.3e}")


class BottomFluxNotZero(VwsError):
    def __init__(self, residual: float, tol: float):
        self.residual = float(residual)
        self.tol = float(tol)
        super().__init__(f"底面の法線成分が 0 ではありません: residual={self.residual:.3e} tol={self.tol:.3e}")


class RayleighTaylorViolated(VwsError):
    def __init__(self, min_a: float, a_min: float, t: float):
        self.min_a = float(min_a)
        self.a_min = float(a_min)
        self.t = float(t)
        super().__init__(
            f"Rayleigh-Taylor 条件違反: min_a={self.min_a:.4e} < a_min={self.a_min:.4e} (t={self.t:.4f})")


class InadmissibleDirection(VwsError):
    def __init__(self, reason: str):
        self.reason = reason
        super().__init__(f"許容されない摂動方向です: {reason}")


class SnapshotFormatError(VwsError):
    """スナップショットファイルの形式不正"""


class InadmissibleFunctional(VwsError):
    """勾配が余接条件 ∂x(δF/δω)̲₂/√μ = δF/δψ を満たさない汎関数"""

    def __init__(self, name: str, residual: float, tol: float):
        self.name = name
        self.residual = float(residual)
        self.tol = float(tol)
        super().__init__(f"許容されない汎関数です: {name} residual={self.residual:.3e} tol={self.tol:.3e}")
