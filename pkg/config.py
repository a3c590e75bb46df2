"""
配置管理模块

支持从环境变量、.env文件和默认值加载配置
"""

import os
import sys
import logging
import logging.handlers
import datetime
from typing import Optional
from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict

from core.constants import __VERSION__, app_name


def get_app_root():
    """
    获取应用根目录
    兼容开发环境和PyInstaller打包后的环境
    """
    if getattr(sys, 'frozen', False):
        return os.path.dirname(os.path.abspath(sys.executable))
    # 开发环境：config.py 所在目录就是项目根目录
    return os.path.dirname(os.path.abspath(__file__))


class Settings(BaseSettings):
    """应用配置类"""

    model_config = SettingsConfigDict(
        env_file=os.path.join(get_app_root(), ".env"),
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    # 插件配置
    PLUGIN_DIR: str = Field(
        default="plugin",
        description="目标函数插件目录"
    )

    # 扫描实验配置
    DESCENT_THREADS: int = Field(
        default=4,
        ge=1,
        description="多种子扫描时的最大并发数"
    )

    OUTPUT_DIR: str = Field(
        default="results",
        description="未指定 --out 时的输出目录"
    )

    WITH_X: bool = Field(
        default=False,
        description="CSV中是否默认输出坐标列 x_0..x_{n-1}"
    )

    # 数值参数
    FD_STEP: float = Field(
        default=1e-6,
        ge=1e-10,
        le=1e-2,
        description="中心差分步长 h"
    )

    GRADCHECK_TOL: float = Field(
        default=1e-5,
        gt=0.0,
        description="梯度检查允许的最大相对误差"
    )

    BOUND_ANCHOR: int = Field(
        default=10,
        ge=1,
        description="界检查的默认锚点迭代 k"
    )

    BOUND_TOL: float = Field(
        default=0.0,
        ge=0.0,
        description="界检查的默认相对容差"
    )

    FIT_MAX_POINTS: int = Field(
        default=200,
        ge=3,
        description="对数坐标拟合时的最大采样点数"
    )

    FIT_FLOOR: float = Field(
        default=1e-15,
        ge=0.0,
        description="低于该值的误差不参与拟合（浮点噪声底）"
    )

    # 日志配置
    LOG_LEVEL: str = Field(
        default="INFO",
        description="日志级别（DEBUG, INFO, WARNING, ERROR）"
    )

    LOG_FILE: Optional[str] = Field(
        default=None,
        description="日志文件路径"
    )

    # 应用配置
    APP_NAME: str = Field(
        default=app_name,
        description="应用名称（仅用于显示，日志器名称固定为 core.constants.app_name）"
    )

    APP_VERSION: str = Field(
        default=__VERSION__,
        description="应用版本"
    )

    DEBUG: bool = Field(
        default=False,
        description="调试模式"
    )


class MillisecondFormatter(logging.Formatter):
    """时间格式: YYYY-MM-DD HH:MM:SS,mmm"""

    def formatTime(self, record, datefmt=None):
        ct = datetime.datetime.fromtimestamp(record.created)
        s = ct.strftime("%Y-%m-%d %H:%M:%S")
        return f"{s},{ct.microsecond // 1000:03d}"


class AppConfig:
    """应用配置管理器"""

    def __init__(self, env_file: Optional[str] = None):
        """
        初始化配置

        Args:
            env_file: .env文件路径（可选，默认使用根目录/.env）
        """
        if env_file is None:
            env_file = os.path.join(get_app_root(), ".env")
        self.env_file = env_file
        self.settings = self._load_settings()

    def _load_settings(self) -> Settings:
        """加载配置"""
        if os.path.exists(self.env_file):
            return Settings(_env_file=self.env_file)
        return Settings()

    def get_run_defaults(self) -> dict:
        """
        获取运行相关的默认值

        Returns:
            dict: 输出目录、并发数、坐标列开关
        """
        return {
            "output_dir": self.settings.OUTPUT_DIR,
            "threads": self.settings.DESCENT_THREADS,
            "with_x": self.settings.WITH_X,
            "plugin_dir": self.settings.PLUGIN_DIR,
        }

    def get_analysis_config(self) -> dict:
        """
        获取分析层的默认参数

        Returns:
            dict: 差分步长、梯度检查容差、界检查锚点与容差、拟合参数
        """
        return {
            "fd_step": self.settings.FD_STEP,
            "gradcheck_tol": self.settings.GRADCHECK_TOL,
            "anchor": self.settings.BOUND_ANCHOR,
            "bound_tol": self.settings.BOUND_TOL,
            "fit_max_points": self.settings.FIT_MAX_POINTS,
            "fit_floor": self.settings.FIT_FLOOR,
        }

    def get_log_config(self) -> dict:
        """
        获取日志配置

        Returns:
            dict: 日志配置字典
        """
        return {
            "level": self.settings.LOG_LEVEL,
            "filename": self.settings.LOG_FILE,
            "format": "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
        }

    def setup_logging(self):
        """设置日志系统"""
        log_config = self.get_log_config()
        # 各模块都通过 core.constants.app_name 取日志器
        logger = logging.getLogger(app_name)
        logger.setLevel(getattr(logging, log_config["level"].upper(), logging.INFO))

        # 清除现有handlers
        logger.handlers.clear()

        formatter = MillisecondFormatter(log_config["format"])

        # 日志走 stderr，stdout 留给 JSON 输出
        console_handler = logging.StreamHandler(sys.stderr)
        console_handler.setFormatter(formatter)
        logger.addHandler(console_handler)

        if log_config["filename"]:
            log_dir = os.path.dirname(log_config["filename"])
            if log_dir and not os.path.exists(log_dir):
                os.makedirs(log_dir, exist_ok=True)

            file_handler = logging.handlers.RotatingFileHandler(
                log_config["filename"],
                maxBytes=10 * 1024 * 1024,  # 10MB
                backupCount=5,
                encoding="utf-8",
            )
            file_handler.setFormatter(formatter)
            logger.addHandler(file_handler)

        return logger

    @property
    def plugin_dir(self) -> str:
        return self.settings.PLUGIN_DIR

    @property
    def threads(self) -> int:
        return self.settings.DESCENT_THREADS

    def __repr__(self) -> str:
        """配置信息字符串表示"""
        return f"""AppConfig(
  运行配置:
    - 插件目录: {self.settings.PLUGIN_DIR}
    - 输出目录: {self.settings.OUTPUT_DIR}
    - 并发数: {self.settings.DESCENT_THREADS}

  数值配置:
    - 差分步长: {self.settings.FD_STEP}
    - 梯度检查容差: {self.settings.GRADCHECK_TOL}
    - 界检查锚点: {self.settings.BOUND_ANCHOR}
    - 拟合采样点: {self.settings.FIT_MAX_POINTS}

  日志配置:
    - 级别: {self.settings.LOG_LEVEL}
    - 文件: {self.settings.LOG_FILE or 'Console'}
)"""


# 全局配置实例
config = None


def get_config(env_file: Optional[str] = None) -> AppConfig:
    """
    获取配置实例（单例模式）

    Args:
        env_file: .env文件路径

    Returns:
        AppConfig: 配置实例
    """
    global config
    if config is None:
        config = AppConfig(env_file)
    return config


def reload_config(env_file: Optional[str] = None):
    """
    重新加载配置

    Args:
        env_file: .env文件路径
    """
    global config
    config = AppConfig(env_file)
    return config
