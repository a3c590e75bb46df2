import importlib.util
import logging
import os
import sys
from typing import Dict, List, Optional, Type

from .constants import app_name
from .errors import ConfigError
from .objective import HalfSquare, Objective, Quadratic, SphereHeight

logger = logging.getLogger(app_name)

BUILTIN_OBJECTIVES: Dict[str, Type[Objective]] = {
    SphereHeight.name: SphereHeight,
    Quadratic.name: Quadratic,
    HalfSquare.name: HalfSquare,
}


def filename_to_classname(filename: str) -> str:
    """rayleigh_quotient.py -> RayleighQuotient"""
    if filename.endswith(".py"):
        filename = filename[:-3]
    return "".join(part.capitalize() for part in filename.split("_") if part)


def load_class_from_file(file_path: str, class_name: str) -> type:
    file_path = os.path.abspath(file_path)
    module_name = os.path.splitext(os.path.basename(file_path))[0]

    spec = importlib.util.spec_from_file_location(module_name, file_path)
    if spec is None:
        raise ImportError(f"无法从文件 {file_path} 创建模块规范")

    module = importlib.util.module_from_spec(spec)
    sys.modules[module_name] = module
    try:
        spec.loader.exec_module(module)
    except Exception as e:
        raise ImportError(f"执行模块 {module_name} 出错: {e}")

    if not hasattr(module, class_name):
        raise AttributeError(f"模块 {module_name} 中没有类 {class_name}")
    return getattr(module, class_name)


class ObjectiveRegistry:
    def __init__(self, src: Optional[str] = None):
        """
        初始化目标函数注册表

        Args:
            src: 插件目录路径；为 None 时只注册内置目标函数

        插件约定：plugin/<snake_name>.py 中定义 Objective 子类 <CamelName>，
        以文件名 <snake_name> 注册。
        """
        self.plugin_src = src
        self._objectives: Dict[str, Type[Objective]] = dict(BUILTIN_OBJECTIVES)
        if src:
            self.load_plugins()

    def load_plugins(self) -> int:
        """加载插件目录下的所有目标函数，返回成功加载的数量"""
        if not self.plugin_src or not os.path.isdir(self.plugin_src):
            logger.warning(f"插件目录 '{self.plugin_src}' 不存在或不是一个目录")
            return 0

        count = 0
        for filename in sorted(os.listdir(self.plugin_src)):
            if not filename.endswith(".py") or filename.startswith("__"):
                continue
            name = filename[:-3]
            logger.debug(f"加载目标函数文件: {filename}")
            try:
                cls = load_class_from_file(os.path.join(self.plugin_src, filename), filename_to_classname(filename))
                if not (isinstance(cls, type) and issubclass(cls, Objective)):
                    logger.error(f"✗ 插件 '{filename}' 中的类不是 Objective 子类，已跳过")
                    continue
                if name in BUILTIN_OBJECTIVES:
                    logger.error(f"✗ 插件 '{filename}' 与内置目标函数重名，已跳过")
                    continue
                self._objectives[name] = cls
                count += 1
                logger.info(f"✓ 成功加载目标函数: {name}")
            except (ImportError, AttributeError, ValueError) as e:
                logger.error(f"✗ 加载插件 '{filename}' 失败: {e}")
        return count

    def reload_plugins(self) -> int:
        """清除插件目标函数（保留内置）后重新扫描插件目录"""
        logger.info("🔄 开始重新加载目标函数插件...")
        self._objectives = dict(BUILTIN_OBJECTIVES)
        count = self.load_plugins()
        logger.info(f"✅ 插件重新加载完成，共加载 {count} 个目标函数")
        return count

    def names(self) -> List[str]:
        return sorted(self._objectives)

    def __contains__(self, name: str) -> bool:
        return name in self._objectives

    def get(self, name: str) -> Type[Objective]:
        try:
            return self._objectives[name]
        except KeyError:
            raise ConfigError(f"未知目标函数 '{name}'，可选 {', '.join(self.names())}", key="objective.kind")

    def create(self, name: str, dim: Optional[int] = None, A=None, b=None) -> Objective:
        return self.get(name).from_params(dim=dim, A=A, b=b)
