"""
Rayleigh 商目标函数插件

f(x) = ½<Ax, x> 限制在单位球面 S^{n-1} 上，最小点是 A 最小特征值对应的特征向量，
最小值为 λ_min / 2。
"""

from typing import ClassVar

import numpy as np
from pydantic import field_validator, model_validator

from core.errors import DimensionError
from core.manifold import Sphere
from core.objective import Objective


class RayleighQuotient(Objective):
    name: ClassVar[str] = "rayleigh_quotient"

    A: np.ndarray

    @field_validator("A", mode="before")
    @classmethod
    def coerce_matrix(cls, v):
        arr = np.array(v, dtype=float)
        arr.flags.writeable = False
        return arr

    @model_validator(mode="after")
    def check_symmetric(self):
        A = self.A
        if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] < 2:
            raise DimensionError(f"A 必须是至少 2 阶的方阵，实际形状 {A.shape}")
        if np.max(np.abs(A - A.T)) > 1e-12:
            raise ValueError("A 不对称")
        return self

    @property
    def dim(self):
        return self.A.shape[0]

    def value(self, x):
        return float(0.5 * np.dot(self.A @ x, x))

    def gradient(self, x):
        return self.A @ x

    def default_manifold(self):
        return Sphere(ambient_dim=self.dim)

    def minimizer_coords(self):
        # 特征向量符号取为最大分量为正
        _, vecs = np.linalg.eigh(self.A)
        v = vecs[:, 0]
        if v[np.argmax(np.abs(v))] < 0:
            v = -v
        return v / np.linalg.norm(v)

    def describe(self):
        return {"kind": self.name, "dim": self.dim, "A": self.A.tolist()}

    @classmethod
    def from_params(cls, dim=None, A=None, b=None):
        if A is None:
            raise ValueError("Rayleigh 商需要给出 A")
        return cls(A=A)
