"""
目标函数

内置三类目标：球面高度函数、二次型、半平方范数。
自定义目标继承 Objective 并放入 plugin/ 目录，由 ObjectiveRegistry 自动加载。
"""

from typing import ClassVar, Optional, Union
import logging
import math

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .constants import app_name
from .errors import DimensionError, ManifoldError
from .manifold import Euclidean, Manifold, ManifoldPoint, Sphere, TangentVector, project_to_tangent

logger = logging.getLogger(app_name)

# 对称性检查容差
SYMMETRY_TOL = 1e-12


class Objective(BaseModel):
    """
    目标函数基类

    子类需要实现：
    - dim: 环境维数
    - value(x): 在环境坐标上求值（有限差分会在流形外求值，因此必须对整个环境空间有定义）
    - gradient(x): 环境梯度
    - default_manifold(): 目标函数自然所在的流形

    可选实现：
    - minimizer_coords(): 已知的最小点
    - known_lipschitz: 已知的 Lipschitz 常数
    - exact_lipschitz(): 可精确计算的 Lipschitz 常数（lipschitz_estimate 优先使用）
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    name: ClassVar[str] = "objective"

    @property
    def dim(self) -> int:
        raise NotImplementedError

    def value(self, x: np.ndarray) -> float:
        raise NotImplementedError(f"目标函数 '{self.name}' 未实现 value 方法")

    def gradient(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError(f"目标函数 '{self.name}' 未实现 gradient 方法")

    def value_batch(self, X: np.ndarray) -> np.ndarray:
        return np.array([self.value(x) for x in X])

    def gradient_batch(self, X: np.ndarray) -> np.ndarray:
        return np.stack([self.gradient(x) for x in X])

    def default_manifold(self) -> Manifold:
        return Euclidean(dim=self.dim)

    def minimizer_coords(self) -> Optional[np.ndarray]:
        return None

    @property
    def known_lipschitz(self) -> Optional[float]:
        return None

    def exact_lipschitz(self) -> Optional[float]:
        return None

    @property
    def known_minimizer(self) -> Optional[ManifoldPoint]:
        coords = self.minimizer_coords()
        if coords is None:
            return None
        return ManifoldPoint(manifold=self.default_manifold(), coords=coords)

    @property
    def optimal_value(self) -> Optional[float]:
        coords = self.minimizer_coords()
        return None if coords is None else self.value(coords)

    def describe(self) -> dict:
        return {"kind": self.name, "dim": self.dim}

    @classmethod
    def from_params(cls, dim: Optional[int] = None, A=None, b=None) -> "Objective":
        """从实验配置构造（子类按需覆盖）"""
        return cls()


class SphereHeight(Objective):
    """高度函数 f(x) = x_{n-1}（S^2 上即 f(x, y, z) = z），最小点为南极"""

    name: ClassVar[str] = "sphere_height"

    ambient: int = Field(default=3, ge=2, description="环境维数")

    @property
    def dim(self) -> int:
        return self.ambient

    def value(self, x):
        return float(x[-1])

    def gradient(self, x):
        g = np.zeros(self.ambient)
        g[-1] = 1.0
        return g

    def value_batch(self, X):
        return np.array(X[:, -1], dtype=float)

    def gradient_batch(self, X):
        G = np.zeros_like(X, dtype=float)
        G[:, -1] = 1.0
        return G

    def default_manifold(self):
        return Sphere(ambient_dim=self.ambient)

    def minimizer_coords(self):
        x = np.zeros(self.ambient)
        x[-1] = -1.0
        return x

    @property
    def known_lipschitz(self):
        return 1.0

    @classmethod
    def from_params(cls, dim=None, A=None, b=None):
        return cls(ambient=dim if dim is not None else 3)


class Quadratic(Objective):
    """二次型 f(x) = ½<Ax, x> - <b, x>，A 对称正定"""

    name: ClassVar[str] = "quadratic"

    A: np.ndarray
    b: np.ndarray

    @field_validator("A", "b", mode="before")
    @classmethod
    def coerce_array(cls, v):
        arr = np.array(v, dtype=float)
        arr.flags.writeable = False
        return arr

    @model_validator(mode="after")
    def check_spd(self):
        A, b = self.A, self.b
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise DimensionError(f"A 必须是方阵，实际形状 {A.shape}")
        if b.shape != (A.shape[0],):
            raise DimensionError(f"b 的长度 {b.shape} 与 A 的阶数 {A.shape[0]} 不一致")
        if np.max(np.abs(A - A.T)) > SYMMETRY_TOL:
            raise ValueError("A 不对称")
        if np.min(np.linalg.eigvalsh(A)) <= 0.0:
            raise ValueError("A 不是正定矩阵")
        return self

    @property
    def dim(self):
        return self.b.shape[0]

    def value(self, x):
        return float(0.5 * np.dot(self.A @ x, x) - np.dot(self.b, x))

    def gradient(self, x):
        return self.A @ x - self.b

    def minimizer_coords(self):
        return np.linalg.solve(self.A, self.b)

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.A)

    def exact_lipschitz(self):
        return float(self.eigenvalues()[-1])

    @property
    def known_lipschitz(self):
        return self.exact_lipschitz()

    def describe(self):
        return {"kind": self.name, "dim": self.dim, "A": self.A.tolist(), "b": self.b.tolist()}

    @classmethod
    def from_params(cls, dim=None, A=None, b=None):
        if A is None or b is None:
            raise ValueError("二次型需要同时给出 A 与 b")
        return cls(A=A, b=b)


class HalfSquare(Objective):
    """f(x) = ½‖x‖²，最小点为原点"""

    name: ClassVar[str] = "half_square"

    n: int = Field(default=1, ge=1, description="维数")

    @property
    def dim(self):
        return self.n

    def value(self, x):
        return float(0.5 * np.dot(x, x))

    def gradient(self, x):
        return np.array(x, dtype=float, copy=True)

    def value_batch(self, X):
        return 0.5 * np.einsum("ij,ij->i", X, X)

    def gradient_batch(self, X):
        return np.array(X, dtype=float, copy=True)

    def minimizer_coords(self):
        return np.zeros(self.n)

    @property
    def known_lipschitz(self):
        return 1.0

    @classmethod
    def from_params(cls, dim=None, A=None, b=None):
        return cls(n=dim if dim is not None else 1)


PointLike = Union[ManifoldPoint, np.ndarray, list, tuple, float]


def _coords_of(f: Objective, x: PointLike) -> np.ndarray:
    coords = x.coords if isinstance(x, ManifoldPoint) else np.atleast_1d(np.asarray(x, dtype=float))
    if coords.shape != (f.dim,):
        raise DimensionError(f"目标函数 '{f.name}' 的维数为 {f.dim}，输入点维数为 {coords.shape[0]}")
    return coords


def evaluate(f: Objective, x: PointLike) -> float:
    """求目标函数值 f(x)"""
    return f.value(_coords_of(f, x))


def euclidean_gradient(f: Objective, x: PointLike) -> np.ndarray:
    return np.asarray(f.gradient(_coords_of(f, x)), dtype=float)


def riemannian_gradient(f: Objective, x: ManifoldPoint) -> TangentVector:
    """黎曼梯度：环境梯度在切空间上的投影"""
    return project_to_tangent(x, euclidean_gradient(f, x))


def finite_difference_gradient(f: Objective, x: PointLike, h: float = 1e-6) -> np.ndarray:
    """
    中心差分梯度 (f(x+h e_i) - f(x-h e_i)) / 2h，逐个环境坐标计算

    需要切向比较时由调用方自行投影。

    Args:
        f: 目标函数
        x: 求值点
        h: 差分步长，取值 [1e-10, 1e-2]

    Returns:
        np.ndarray: 环境空间中的差分梯度
    """
    if not 1e-10 <= h <= 1e-2:
        raise ValueError(f"差分步长 h={h} 超出允许范围 [1e-10, 1e-2]")
    x0 = _coords_of(f, x)
    grad = np.zeros_like(x0)
    for i in range(x0.shape[0]):
        xp = x0.copy()
        xm = x0.copy()
        xp[i] += h
        xm[i] -= h
        grad[i] = (f.value(xp) - f.value(xm)) / (2.0 * h)
    return grad


def gradient_relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """‖analytic - numeric‖ / max(1, ‖analytic‖)"""
    return float(np.linalg.norm(analytic - numeric) / max(1.0, float(np.linalg.norm(analytic))))


def sampled_lipschitz(f: Objective, m: Manifold, n_samples: int, seed: int) -> float:
    """
    在随机点对上取 ‖∇_g f(x) - ∇_g f(y)‖ / d(x, y) 的最大值

    这是真实 Lipschitz 常数的下界。点对 y = exp_x(t)，‖t‖ 在 [1e-3, π/2] 上均匀。
    """
    if n_samples < 2:
        raise ValueError("n_samples 至少为 2")
    if m.ambient_dim != f.dim:
        raise DimensionError(f"流形 {m.describe()} 与目标函数维数 {f.dim} 不一致")
    rng = np.random.default_rng(seed)
    best = 0.0
    for _ in range(n_samples):
        x = m._random_point(rng)
        t = m._random_tangent(x, rng, rng.uniform(1e-3, math.pi / 2))
        y = m._expmap(x, t)
        d = m._dist(x, y)
        if d == 0.0:
            continue
        gx = m._proju(x, f.gradient(x))
        gy = m._proju(y, f.gradient(y))
        best = max(best, float(np.linalg.norm(gx - gy)) / d)
    return best


def lipschitz_estimate(f: Objective, m: Manifold, n_samples: int = 10_000, seed: int = 0) -> float:
    """
    估计黎曼梯度的 Lipschitz 常数 L

    可精确计算时（二次型：A 的最大特征值）直接返回精确值；
    否则返回随机点对上的比值最大值（真实 L 的下界）。
    """
    exact = f.exact_lipschitz()
    if exact is not None:
        return exact
    estimate = sampled_lipschitz(f, m, n_samples, seed)
    logger.debug(f"{f.name} 的采样 Lipschitz 估计: {estimate:.6g}（{n_samples} 个点对）")
    return estimate


def gradient_gap_ratio(f: Objective, x: ManifoldPoint) -> Optional[float]:
    """
    诊断量 ‖∇_g f(x)‖·d(x, x*) / (f(x) - f(x*))

    该比值 ≥ 1 并不总是成立（例如临界点处梯度为零而间隙为正），只用于报告。
    """
    x_star = f.known_minimizer
    if x_star is None:
        return None
    if x_star.manifold != x.manifold:
        raise ManifoldError("最小点与 x 不在同一流形上")
    gap = evaluate(f, x) - f.value(x_star.coords)
    if gap <= 0.0:
        return None
    g = riemannian_gradient(f, x)
    d = x.manifold._dist(x.coords, x_star.coords)
    return g.norm * d / gap
