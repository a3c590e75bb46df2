"""
黎曼流形抽象

两种具体流形：欧氏空间 R^n 与嵌入 R^n 的单位球面 S^{n-1}。
两者都使用环境空间的欧氏内积作为度量；点与切向量都以环境坐标存储。

以下划线开头的方法直接作用在 numpy 数组上，供优化循环使用；
模块级函数（project_to_tangent、exp_map 等）作用在带校验的
ManifoldPoint / TangentVector 上，是对外接口。
"""

from typing import Annotated, Literal, Optional, Union
import logging

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .constants import app_name, POINT_NORM_TOL, TANGENT_TOL
from .errors import ConfigError, DimensionError, ManifoldError

logger = logging.getLogger(app_name)

# 收缩 p + t 的范数低于该值视为越过对径点
RETRACT_DEGENERATE_TOL = 1e-12


def _as_vector(v) -> np.ndarray:
    arr = np.array(v, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim != 1:
        raise DimensionError(f"期望一维坐标向量，实际形状为 {arr.shape}")
    return arr


class Manifold(BaseModel):
    """流形基类，子类实现数组层面的几何运算"""

    model_config = ConfigDict(frozen=True)

    def describe(self) -> str:
        raise NotImplementedError

    def check_coords(self, coords: np.ndarray) -> None:
        """校验环境坐标是否构成流形上的点，不满足时抛出 ManifoldError"""
        if coords.shape != (self.ambient_dim,):
            raise DimensionError(
                f"{self.describe()} 需要长度为 {self.ambient_dim} 的坐标，实际为 {coords.shape}"
            )

    def check_tangent(self, base: np.ndarray, coords: np.ndarray) -> None:
        if coords.shape != base.shape:
            raise DimensionError(f"切向量维度 {coords.shape} 与基点维度 {base.shape} 不一致")

    def _proju(self, x: np.ndarray, v: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _expmap(self, x: np.ndarray, t: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _retract(self, x: np.ndarray, t: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _dist(self, x: np.ndarray, y: np.ndarray) -> float:
        raise NotImplementedError

    def _inner(self, x: np.ndarray, u: np.ndarray, v: np.ndarray) -> float:
        return float(np.dot(u, v))

    def _random_point(self, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    def _random_tangent(self, x: np.ndarray, rng: np.random.Generator, norm: float) -> np.ndarray:
        """在 x 处随机取一个范数为 norm 的切向量"""
        v = self._proju(x, rng.standard_normal(x.shape[0]))
        n = np.linalg.norm(v)
        if n == 0.0:
            return v
        return v * (norm / n)

    def point(self, coords) -> "ManifoldPoint":
        return ManifoldPoint(manifold=self, coords=coords)

    def random_point(self, rng: np.random.Generator) -> "ManifoldPoint":
        return ManifoldPoint(manifold=self, coords=self._random_point(rng))


class Euclidean(Manifold):
    """欧氏空间 R^dim"""

    kind: Literal["euclidean"] = "euclidean"
    dim: int = Field(..., ge=1, description="空间维数")

    @property
    def ambient_dim(self) -> int:
        return self.dim

    def describe(self) -> str:
        return f"euclidean({self.dim})"

    def _proju(self, x, v):
        return np.array(v, dtype=float, copy=True)

    def _expmap(self, x, t):
        return x + t

    def _retract(self, x, t):
        return x + t

    def _dist(self, x, y):
        return float(np.linalg.norm(x - y))

    def _random_point(self, rng):
        return rng.standard_normal(self.dim)


class Sphere(Manifold):
    """单位球面 S^{ambient_dim-1}，嵌入在 R^{ambient_dim} 中"""

    kind: Literal["sphere"] = "sphere"
    ambient_dim: int = Field(..., ge=2, description="环境空间维数（S^2 对应 3）")

    def describe(self) -> str:
        return f"sphere({self.ambient_dim})"

    def check_coords(self, coords):
        super().check_coords(coords)
        norm = float(np.linalg.norm(coords))
        if abs(norm - 1.0) > POINT_NORM_TOL:
            raise ManifoldError(f"球面上的点需要单位范数，实际 ‖x‖ = {norm!r}")

    def check_tangent(self, base, coords):
        super().check_tangent(base, coords)
        dot = abs(float(np.dot(coords, base)))
        if dot > TANGENT_TOL * max(1.0, float(np.linalg.norm(coords))):
            raise ManifoldError(f"切向量与基点不正交：|<v, x>| = {dot!r}")

    def _proju(self, x, v):
        return v - np.dot(x, v) * x

    def _expmap(self, x, t):
        n = np.linalg.norm(t)
        if n == 0.0:
            return np.array(x, copy=True)
        y = np.cos(n) * x + np.sin(n) * (t / n)
        return y / np.linalg.norm(y)

    def _retract(self, x, t):
        y = x + t
        n = np.linalg.norm(y)
        if n <= RETRACT_DEGENERATE_TOL:
            raise ManifoldError(f"收缩退化：‖p + t‖ = {n!r}（步长越过了对径点）")
        return y / n

    def _dist(self, x, y):
        # 与 arccos(clamp(<x,y>, -1, 1)) 等价，但在 0 与 π 附近不损失精度
        return float(2.0 * np.arctan2(np.linalg.norm(x - y), np.linalg.norm(x + y)))

    def _random_point(self, rng):
        v = rng.standard_normal(self.ambient_dim)
        return v / np.linalg.norm(v)


ManifoldKind = Annotated[Union[Euclidean, Sphere], Field(discriminator="kind")]


class ManifoldPoint(BaseModel):
    """流形上的点（环境坐标），构造后不可变"""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    manifold: ManifoldKind
    coords: np.ndarray

    @field_validator("coords", mode="before")
    @classmethod
    def coerce_coords(cls, v):
        arr = _as_vector(v)
        arr.flags.writeable = False
        return arr

    @model_validator(mode="after")
    def check_on_manifold(self):
        self.manifold.check_coords(self.coords)
        return self

    def __eq__(self, other):
        if not isinstance(other, ManifoldPoint):
            return NotImplemented
        return self.manifold == other.manifold and np.array_equal(self.coords, other.coords)

    def __hash__(self):
        return hash((self.manifold, self.coords.tobytes()))


class TangentVector(BaseModel):
    """基点 base 处的切向量（环境坐标）"""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    base: ManifoldPoint
    coords: np.ndarray

    @field_validator("coords", mode="before")
    @classmethod
    def coerce_coords(cls, v):
        arr = _as_vector(v)
        arr.flags.writeable = False
        return arr

    @model_validator(mode="after")
    def check_is_tangent(self):
        self.base.manifold.check_tangent(self.base.coords, self.coords)
        return self

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.coords))

    def scaled(self, factor: float) -> "TangentVector":
        return TangentVector(base=self.base, coords=self.coords * factor)

    def __eq__(self, other):
        if not isinstance(other, TangentVector):
            return NotImplemented
        return self.base == other.base and np.array_equal(self.coords, other.coords)

    def __hash__(self):
        return hash((self.base, self.coords.tobytes()))


def _require_base(p: ManifoldPoint, t: TangentVector) -> None:
    if t.base != p:
        raise ManifoldError("切向量的基点与给定点不一致")


def project_to_tangent(p: ManifoldPoint, v) -> TangentVector:
    """
    把环境向量投影到 p 处的切空间

    球面：v - <v, p> p；欧氏空间：恒等。

    Args:
        p: 基点
        v: 环境空间中的向量

    Returns:
        TangentVector: p 处的切向量

    Raises:
        DimensionError: v 的维度与 p 不一致
    """
    v = _as_vector(v)
    if v.shape != p.coords.shape:
        raise DimensionError(f"向量维度 {v.shape[0]} 与点的维度 {p.coords.shape[0]} 不一致")
    return TangentVector(base=p, coords=p.manifold._proju(p.coords, v))


def exp_map(p: ManifoldPoint, t: TangentVector) -> ManifoldPoint:
    """
    指数映射：沿测地线以初速度 t 走单位时间

    球面上为大圆运动 cos(‖t‖) p + sin(‖t‖) t/‖t‖，结果重新归一化。
    """
    _require_base(p, t)
    return ManifoldPoint(manifold=p.manifold, coords=p.manifold._expmap(p.coords, t.coords))


def retract_normalize(p: ManifoldPoint, t: TangentVector) -> ManifoldPoint:
    """归一化收缩 (p + t)/‖p + t‖；欧氏空间上为 p + t"""
    _require_base(p, t)
    return ManifoldPoint(manifold=p.manifold, coords=p.manifold._retract(p.coords, t.coords))


def geodesic_distance(p: ManifoldPoint, q: ManifoldPoint) -> float:
    if p.manifold != q.manifold:
        raise ManifoldError(f"两点不在同一流形上：{p.manifold.describe()} 与 {q.manifold.describe()}")
    return p.manifold._dist(p.coords, q.coords)


def inner(p: ManifoldPoint, u: TangentVector, v: TangentVector) -> float:
    """p 处的黎曼度量 g_p(u, v)，两种流形都取环境欧氏内积"""
    if u.base != p or v.base != p:
        raise ManifoldError("内积的两个切向量必须以 p 为基点")
    return p.manifold._inner(p.coords, u.coords, v.coords)


def parse_manifold(kind: str, dim: int, key: Optional[str] = None) -> Manifold:
    """按名称构造流形（供实验配置解析使用）"""
    kind = kind.strip().lower()
    if kind == "euclidean":
        return Euclidean(dim=dim)
    if kind == "sphere":
        return Sphere(ambient_dim=dim)
    raise ConfigError(f"未知流形类型 '{kind}'，可选 euclidean / sphere", key=key)
