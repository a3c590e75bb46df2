"""
零均值噪声源

随机数使用 numpy 的 PCG64，种子经 SeedSequence 展开；
每个运行种子对应一条独立的流，第 k 次迭代的噪声就是这条流上的第 k 次抽样，
因此不同种子的运行可以任意顺序或并发执行。
"""

from enum import Enum
from typing import Any, Dict, Tuple
import logging

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .base_model import MomentEstimate
from .constants import app_name

logger = logging.getLogger(app_name)


class NoiseFamily(str, Enum):
    """噪声分布族"""
    ZERO = "zero"            # 无噪声
    UNIFORM = "uniform"      # [-a, a] 上均匀分布
    STUDENT_T = "student_t"  # s · t_ν，q 阶矩有限当且仅当 q < ν
    GAUSSIAN = "gaussian"    # N(0, s²)，仅作对照


class NoiseSpec(BaseModel):
    """噪声规格：分布族、参数、声明的有界矩阶数 q 与维数"""

    model_config = ConfigDict(frozen=True)

    family: NoiseFamily = Field(default=NoiseFamily.ZERO, description="分布族")
    half_width: float = Field(default=1.0, gt=0.0, description="均匀分布半宽 a")
    dof: float = Field(default=5.0, gt=2.0, description="Student-t 自由度 ν")
    scale: float = Field(default=1.0, gt=0.0, description="Student-t / 高斯的尺度 s")
    q: float = Field(default=4.0, gt=2.0, description="声明的有界矩阶数 q")
    dim: int = Field(default=1, ge=1, description="噪声向量维数")

    @model_validator(mode="after")
    def check_moment_order(self):
        if self.family == NoiseFamily.STUDENT_T and not self.dof > self.q:
            raise ValueError(f"Student-t 的 q 阶矩有限需要 ν > q，当前 ν={self.dof}, q={self.q}")
        return self

    def describe(self) -> Dict[str, Any]:
        info: Dict[str, Any] = {"family": self.family.value, "dim": self.dim, "q": self.q}
        if self.family == NoiseFamily.UNIFORM:
            info["half_width"] = self.half_width
        elif self.family == NoiseFamily.STUDENT_T:
            info.update(dof=self.dof, scale=self.scale)
        elif self.family == NoiseFamily.GAUSSIAN:
            info["scale"] = self.scale
        return info


class RngState(BaseModel):
    """
    显式传递的随机数状态

    保存 PCG64 的完整状态字典，sample 不修改输入状态而是返回新状态。
    """

    model_config = ConfigDict(frozen=True)

    seed: int = Field(..., ge=0, lt=2 ** 64, description="64 位种子")
    counter: int = Field(default=0, ge=0, description="已抽样次数")
    bit_state: Dict[str, Any]

    @classmethod
    def from_seed(cls, seed: int) -> "RngState":
        bit_generator = np.random.PCG64(np.random.SeedSequence(seed))
        return cls(seed=seed, bit_state=bit_generator.state)

    def generator(self) -> np.random.Generator:
        bit_generator = np.random.PCG64(0)
        bit_generator.state = self.bit_state
        return np.random.Generator(bit_generator)


def _draw(spec: NoiseSpec, gen: np.random.Generator, rows: int) -> np.ndarray:
    shape = (rows, spec.dim)
    if spec.family == NoiseFamily.ZERO:
        return np.zeros(shape)
    if spec.family == NoiseFamily.UNIFORM:
        return gen.uniform(-spec.half_width, spec.half_width, size=shape)
    if spec.family == NoiseFamily.STUDENT_T:
        return spec.scale * gen.standard_t(spec.dof, size=shape)
    return gen.normal(0.0, spec.scale, size=shape)


def sample(spec: NoiseSpec, state: RngState) -> Tuple[np.ndarray, RngState]:
    """
    抽取一个噪声向量

    Args:
        spec: 噪声规格
        state: 当前随机数状态

    Returns:
        (噪声向量, 新状态)：新状态的 counter 加一
    """
    gen = state.generator()
    xi = _draw(spec, gen, 1)[0]
    new_state = RngState(seed=state.seed, counter=state.counter + 1, bit_state=gen.bit_generator.state)
    return xi, new_state


def draw_block(spec: NoiseSpec, seed: int, n: int) -> np.ndarray:
    """
    从种子 seed 的流上一次抽取 n 个噪声向量，形状 (n, dim)

    第 i 行与从 RngState.from_seed(seed) 起连续调用 sample 的第 i 次结果一致。
    """
    return _draw(spec, RngState.from_seed(seed).generator(), n)


def empirical_moment(spec: NoiseSpec, order: float, n: int, seed: int) -> MomentEstimate:
    """
    经验矩 (1/n) Σ ‖ξ_i‖^order

    Student-t 在 order ≥ ν 时真实矩不存在，估计值随 n 发散，结果中 diverging 置为 True。
    """
    if n < 1000:
        raise ValueError(f"经验矩至少需要 1000 个样本，当前 n={n}")
    xi = draw_block(spec, seed, n)
    norms = np.linalg.norm(xi, axis=1)
    value = float(np.mean(norms ** order))
    diverging = spec.family == NoiseFamily.STUDENT_T and order >= spec.dof
    if diverging:
        logger.warning(f"⚠ Student-t(ν={spec.dof}) 的 {order} 阶矩不存在，估计值 {value:.4g} 随样本数发散")
    return MomentEstimate(order=order, n=n, seed=seed, value=value, diverging=diverging)
