import math
from typing import List, Literal, Optional, Tuple
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


# 空間フィルタ（2/3 則 + 指数フィルタ）
class FilterSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    alpha: float = Field(36.0, ge=0.0, description="指数フィルタの強さ α（exp(-α(|k|/k_max)^p)）")
    order: int = Field(16, ge=2, description="指数フィルタの次数 p（偶数）")
    two_thirds: bool = Field(True, description="2/3 則による切断を行うか")

    @field_validator("order")
    @classmethod
    def validate_order(cls, v: int) -> int:
        if v % 2 != 0:
            raise ValueError("order は偶数で指定してください")
        return v


# 無次元パラメータと数値設定
class Params(BaseModel):
    model_config = ConfigDict(frozen=True)

    eps: float = Field(..., gt=0.0, description="振幅パラメータ ε = a/H0")
    mu: float = Field(..., gt=0.0, description="浅水パラメータ μ = H0²/L²")
    Lx: float = Field(2.0 * math.pi, gt=0.0, description="x 方向の周期")
    nx: int = Field(32, description="x 方向の格子点数（偶数, 8 以上）")
    nz: int = Field(16, description="鉛直 Chebyshev-Gauss-Lobatto 点数（5 以上）")
    dt: Optional[float] = Field(None, gt=0.0, description="固定時間刻み。未指定なら CFL から決定")
    cfl: float = Field(0.5, gt=0.0, le=2.0, description="CFL 数")
    T: float = Field(1.0, ge=0.0, description="計算終了時刻")
    filter: FilterSpec = Field(default_factory=FilterSpec, description="スペクトルフィルタ設定")
    krylov_rtol: float = Field(1e-10, gt=0.0, description="GMRES の相対残差許容値")
    krylov_maxiter: int = Field(200, ge=1, description="GMRES の最大反復回数")
    krylov_restart: int = Field(60, ge=1, description="GMRES のリスタート長")
    tol_div: float = Field(1e-8, gt=0.0, description="渦度の発散に対する相対許容値")
    tol_mean: float = Field(1e-12, gt=0.0, description="平均ゼロ判定の相対許容値（場のスケール倍）")
    tol_cotangent: float = Field(1e-6, gt=0.0, description="汎関数の余接条件に対する相対許容値")
    h_min: float = Field(0.05, gt=0.0, description="水深 1+εζ の下限")
    a_min: float = Field(0.0, description="Rayleigh-Taylor 係数の下限")
    n_energy: int = Field(3, ge=1, description="エネルギー ℰᴺ の次数 N")
    clean_every: int = Field(1, ge=0, description="発散除去の間隔（ステップ数, 0 は無効）")
    eps_max: float = Field(1.0, gt=0.0, description="ε の上限 ε0")
    mu_max: float = Field(1.0, gt=0.0, description="μ の上限 μ0")

    @field_validator("nx")
    @classmethod
    def validate_nx(cls, v: int) -> int:
        if v < 8 or v % 2 != 0:
            raise ValueError("nx は 8 以上の偶数で指定してください")
        return v

    @field_validator("nz")
    @classmethod
    def validate_nz(cls, v: int) -> int:
        if v < 5:
            raise ValueError("nz は 5 以上で指定してください")
        return v

    @model_validator(mode="after")
    def validate_regime(self) -> "Params":
        if self.eps > self.eps_max:
            raise ValueError(f"eps は (0, {self.eps_max}] の範囲で指定してください")
        if self.mu > self.mu_max:
            raise ValueError(f"mu は (0, {self.mu_max}] の範囲で指定してください")
        return self


# 初期条件（名前付きの解析解ファミリ）
class InitialCondition(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Literal["rest", "standing_wave", "shear_vorticity", "manufactured"] = Field(
        "rest", description="初期条件の種類")
    amplitude: float = Field(0.0, description="水面変位の振幅")
    mode: int = Field(1, ge=1, description="波数モード番号")
    strength: float = Field(0.0, description="シア渦度の強さ c")
    profile: Literal["uniform", "linear"] = Field("uniform", description="シア渦度の鉛直分布")
    component: Literal[1, 2] = Field(1, description="シア渦度の成分（1: 横断, 2: 面内）")
    potential: float = Field(0.0, description="ψ の振幅（mode と同じ波数）")
    manufactured_id: int = Field(0, ge=0, le=1, description="製造解の番号（0: 回転流, 1: 平坦ポテンシャル流）")

    @model_validator(mode="after")
    def validate_family(self) -> "InitialCondition":
        if self.kind == "standing_wave" and self.amplitude == 0.0 and self.potential == 0.0:
            raise ValueError("standing_wave には amplitude か potential を指定してください")
        if self.kind == "shear_vorticity" and self.strength == 0.0:
            raise ValueError("shear_vorticity には strength を指定してください")
        return self


class DispersionSpec(BaseModel):
    cases: List[Tuple[float, int]] = Field(
        default_factory=lambda: [(1.0, 1), (0.25, 1), (0.04, 2)],
        description="測定する (μ, k) の組")
    amplitude: float = Field(1e-6, gt=0.0, description="線形定在波の振幅")
    periods: float = Field(6.0, ge=5.0, description="測定に用いる周期数")
    steps_per_period: int = Field(200, ge=20, description="1 周期あたりのステップ数")


class JustifySpec(BaseModel):
    mus: List[float] = Field(default_factory=lambda: [0.04, 0.01, 0.0025], description="μ のスイープ")
    T: float = Field(0.5, gt=0.0, description="比較時刻")
    amplitude: float = Field(0.05, description="初期水面変位の振幅")
    strength: float = Field(1.0, description="シア渦度の強さ")
    component: Literal[1, 2] = Field(1, description="シア渦度の成分")
    profile: Literal["uniform", "linear"] = Field("uniform", description="シア渦度の鉛直分布")
    refine_check: bool = Field(False, description="解像度倍化による自己離散化誤差の推定を行うか")

    @field_validator("mus")
    @classmethod
    def validate_mus(cls, v: List[float]) -> List[float]:
        if len(v) < 2 or any(m <= 0.0 for m in v):
            raise ValueError("mus は 2 個以上の正の値で指定してください")
        return v


class DivCurlCheckSpec(BaseModel):
    resolutions: List[Tuple[int, int]] = Field(
        default_factory=lambda: [(32, 16), (64, 32), (128, 48)], description="(nx, nz) の列")
    eps: float = Field(1.0, gt=0.0, description="製造解に用いる ε")
    mu: float = Field(0.5, gt=0.0, description="製造解に用いる μ")
    amplitude: float = Field(0.1, description="ζ = amplitude·cos x")


class HamiltonianCheckSpec(BaseModel):
    n_states: int = Field(3, ge=1, description="ランダム状態の数")
    h_list: List[float] = Field(default_factory=lambda: [1e-3, 1e-4, 1e-5], description="差分幅")
    trajectory_steps: int = Field(20, ge=2, description="軌道検査のステップ数")
    trajectory_dt: float = Field(0.01, gt=0.0, description="軌道検査の時間刻み（中心差分の誤差を抑える）")


# 実行設定（--config で与える JSON）
class RunConfig(BaseModel):
    scenario: str = Field(..., min_length=1, max_length=100, description="シナリオ名")
    params: Params = Field(..., description="数値パラメータ")
    initial: InitialCondition = Field(default_factory=InitialCondition, description="初期条件")
    output_every: int = Field(1, ge=1, description="診断 CSV の出力間隔（ステップ）")
    snapshot_every: int = Field(0, ge=0, description="スナップショット出力間隔（0 は最終のみ）")
    out_dir: Optional[str] = Field(None, description="出力ディレクトリ")
    seed: int = Field(0, ge=0, description="乱数シード")
    dispersion: DispersionSpec = Field(default_factory=DispersionSpec)
    justify: JustifySpec = Field(default_factory=JustifySpec)
    divcurl: DivCurlCheckSpec = Field(default_factory=DivCurlCheckSpec)
    hamiltonian: HamiltonianCheckSpec = Field(default_factory=HamiltonianCheckSpec)

    @field_validator("scenario")
    @classmethod
    def validate_scenario(cls, v: str) -> str:
        s = v.strip()
        if not s:
            raise ValueError("scenario は1文字以上で指定してください")
        return s


# 再構成の残差レポート
class ResidualReport(BaseModel):
    curl_max: float = Field(0.0, description="max |curl U/μ - ω|")
    div_max: float = Field(0.0, description="max |div U|")
    bottom_w_max: float = Field(0.0, description="底面の法線速度 max |w_b|")
    surface_x_defect: float = Field(0.0, description="max |U∥·e_x - ∂xψ|")
    surface_y_defect: float = Field(0.0, description="max |U∥·e_y - ∂xψ̃|")
    transverse_defect: float = Field(0.0, description="max |ω3 - ∂x^σ V_y|（横断成分の整合性）")
    surface_identity: float = Field(0.0, description="max |ω̲·N^μ - ∂x(U∥·e_y)|")
    bottom_identity: float = Field(0.0, description="max |ω_b·N_b - ∂x V_{b,y}|")
    dn_mean: float = Field(0.0, description="除去前の一般化 DN の平均")
    iterations: int = Field(0, description="GMRES 反復回数の合計")


# エネルギーレポート
class EnergyReport(BaseModel):
    total: float = Field(..., description="ℰᴺ の合計")
    zeta_term: float = Field(..., description="|ζ|²_{Hᴺ}")
    psi_term: float = Field(..., description="|𝔓ψ|²_{H³}")
    good_unknown_term: float = Field(..., description="Σ_{0<α≤N} |𝔓ψ(α)|²")
    vorticity_term: float = Field(..., description="‖ω‖²_{H^{N-1}}")
    bottom_term: float = Field(..., description="|ω_b·N_b|²_{H0^{-1/2}}")
    hamiltonian: float = Field(..., description="全エネルギー H")
    min_a: float = Field(1.0, description="Rayleigh-Taylor 係数の最小値")
    min_h: float = Field(..., description="水深の最小値")


# fd_check の結果
class FdReport(BaseModel):
    errors: List[float] = Field(..., description="各 h の相対誤差")
    min_error: float = Field(..., description="相対誤差の最小値")
    slope: Optional[float] = Field(None, description="誤差の h に対する観測次数")
    predicted: float = Field(..., description="勾配と方向の内積")
