from typing import Optional, Literal, Dict, Any, List, Tuple
from pydantic import BaseModel, Field, model_validator


class RateFit(BaseModel):
    """幂律拟合结果 e_k ≈ C · k^{-p}"""

    exponent: float = Field(
        ...,
        description="衰减指数 p"
    )
    constant: float = Field(
        ...,
        gt=0.0,
        description="常数 C"
    )
    r_squared: Optional[float] = Field(
        None,
        description="对数坐标下的决定系数，少于3个点时无定义"
    )
    window: Tuple[int, int] = Field(
        ...,
        description="拟合窗口 (k_lo, k_hi)"
    )
    points_used: int = Field(
        ...,
        ge=0,
        description="参与回归的点数（对数均匀抽样后）"
    )

    @model_validator(mode="after")
    def check_window(self):
        k_lo, k_hi = self.window
        if k_lo < 1 or k_hi <= k_lo:
            raise ValueError(f"拟合窗口非法: {self.window}")
        return self


class BoundReport(BaseModel):
    """收敛界检查结果：e_k ≤ C / k^p 对所有 k > anchor 是否成立"""

    satisfied: bool = Field(
        ...,
        description="worst_ratio ≤ 1 + tolerance 时为 True"
    )
    worst_k: int = Field(
        ...,
        description="比值 e_k · k^p / C 最大的迭代"
    )
    worst_ratio: float = Field(
        ...,
        description="max_k e_k · k^p / C"
    )
    exponent: float = Field(
        ...,
        description="检查所用指数 p"
    )
    constant: float = Field(
        ...,
        description="检查所用常数 C"
    )
    anchor_k: int = Field(
        ...,
        description="锚点迭代，只检查 k > anchor_k"
    )
    constant_source: Literal["explicit", "anchor"] = Field(
        ...,
        description="C 的来源：显式给出，或在锚点处标定 C = e_anchor · anchor^p"
    )
    tolerance: float = Field(
        ...,
        ge=0.0,
        description="相对容差"
    )
    checked: int = Field(
        ...,
        ge=1,
        description="参与检查的迭代数"
    )


class ScheduleReport(BaseModel):
    """步长/动量调度是否满足 α_k → 0、Σα_k = ∞、β_k → 0（None 表示依赖数据，无法符号判定）"""

    alpha_to_zero: Optional[bool] = Field(None, description="α_k → 0")
    alpha_sum_diverges: Optional[bool] = Field(None, description="Σ α_k = ∞")
    beta_to_zero: Optional[bool] = Field(None, description="β_k → 0")

    @property
    def weak_convergence_conditions(self) -> bool:
        return bool(self.alpha_to_zero and self.alpha_sum_diverges and self.beta_to_zero)


class MomentEstimate(BaseModel):
    """经验矩估计"""

    order: float = Field(..., description="矩的阶数")
    n: int = Field(..., ge=1, description="样本数")
    seed: int = Field(..., description="随机种子")
    value: float = Field(..., description="(1/n) Σ ‖ξ_i‖^order")
    diverging: bool = Field(
        False,
        description="真实矩不存在（order ≥ ν），估计值随 n 发散"
    )


class GradCheckReport(BaseModel):
    """解析梯度与中心差分梯度的比较结果"""

    objective: str = Field(..., description="目标函数名称")
    samples: int = Field(..., ge=1, description="随机点数")
    seed: int = Field(..., description="随机种子")
    step: float = Field(..., description="差分步长 h")
    max_relative_error: float = Field(..., description="最大相对误差")
    worst_point: List[float] = Field(..., description="误差最大的点")
    tolerance: float = Field(..., description="通过阈值")
    passed: bool = Field(..., description="max_relative_error ≤ tolerance")


class RunSummary(BaseModel):
    """单个种子（或单个变体）运行的摘要"""

    variant: str = Field(..., description="变体名称，无变体时为 trace")
    seed: int = Field(..., description="随机种子")
    csv_file: str = Field(..., description="轨迹CSV文件名")
    iterations: int = Field(..., ge=0, description="实际执行的迭代数")
    final_f: float = Field(..., description="最终函数值")
    final_gap: Optional[float] = Field(None, description="最终间隙 f - f*")
    final_grad_norm: float = Field(..., description="最终梯度范数")
    aborted_at: Optional[int] = Field(None, description="出现非有限值的迭代")
    abort_reason: Optional[str] = Field(None, description="中止原因")


class SummaryReport(BaseModel):
    """summary.json 的内容"""

    format_version: int = Field(..., description="格式版本")
    app_version: str = Field(..., description="程序版本")
    config_text: str = Field(..., description="实际使用的完整实验配置（可直接重跑）")
    config_path: Optional[str] = Field(None, description="配置文件路径")
    method: str = Field(..., description="迭代方法 rgd / momentum / sgd")
    seeds: List[int] = Field(..., description="运行的种子，升序")
    runs: List[RunSummary] = Field(default_factory=list, description="各运行摘要，按变体、种子升序")
    rate_fits: Dict[str, RateFit] = Field(default_factory=dict, description="按变体的幂律拟合")
    bound_reports: Dict[str, BoundReport] = Field(default_factory=dict, description="按变体的界检查")
    schedule_reports: Dict[str, ScheduleReport] = Field(default_factory=dict, description="按变体的调度条件判定")
    wall_clock_seconds: float = Field(..., ge=0.0, description="总耗时（秒）")
    notes: List[str] = Field(default_factory=list, description="运行中的诊断信息")
