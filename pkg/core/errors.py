"""
异常类型

CLI 根据异常类型映射退出码：ConfigError → 2，NumericalAbort → 3
"""


class DescentError(Exception):
    """easyDescent 异常基类"""


class ConfigError(DescentError, ValueError):
    """配置错误（未知键、非法取值、不满足收敛条件的步长调度等）"""

    def __init__(self, message: str, key: str = None):
        self.key = key
        super().__init__(f"[{key}] {message}" if key else message)


class DimensionError(DescentError, ValueError):
    """维度不匹配"""


class ManifoldError(DescentError, ValueError):
    """流形运算错误（流形不一致、切向量基点不一致、退化收缩）"""


class NumericalAbort(DescentError):
    """迭代中出现 NaN/inf"""

    def __init__(self, message: str, k: int = None):
        self.k = k
        super().__init__(message)
