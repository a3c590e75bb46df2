"""
实验配置文件

行格式 `key = value`，`#` 之后为注释。`[section]` 之后的裸键补全为 `section.key`，
带点的键原样使用；`[variant.<name>]` 段中的键（必须带点）只覆盖该变体。
未知键一律报错。矩阵字面量行之间用 `;` 分隔、元素之间用空白分隔。

示例：

    [objective]
    kind = quadratic
    quadratic.A = 4 1; 1 3
    quadratic.b = 1 2

    [schedule]
    alpha = powerlaw c=1 gamma=0.8

    [run]
    method = rgd
    seeds = 1..1000
"""

from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union
import json
import logging
import math

import numpy as np
from pydantic import BaseModel, Field, TypeAdapter, ValidationError

from .constants import app_name
from .errors import ConfigError
from .manifold import Euclidean, ManifoldPoint, Sphere, parse_manifold
from .noise import NoiseSpec
from .objective import Objective
from .optimize import AlphaRule, BetaRule, SGD_GAMMA_RANGE, RunConfig, ScheduleSpec, StepRule, METHODS
from .plugin_manager import ObjectiveRegistry

logger = logging.getLogger(app_name)

# 已知键及说明，顺序即规范化输出的顺序
KNOWN_KEYS: Dict[str, str] = {
    "objective.kind": "目标函数名称（sphere_height / quadratic / half_square / 插件名）",
    "objective.dim": "环境维数",
    "objective.A": "矩阵 A（行之间用 ; 分隔）",
    "objective.b": "向量 b",
    "manifold.kind": "euclidean / sphere，缺省为目标函数的自然流形",
    "manifold.dim": "环境维数，缺省与目标函数一致",
    "schedule.alpha": "步长规则：fixed 0.25 / powerlaw c=1 gamma=0.8 / line_search / sequence 0.38 0.25",
    "schedule.beta": "动量规则：zero / powerlaw d=0.1 gamma=1 / ratio [guarded=false]",
    "noise.family": "zero / uniform / student_t / gaussian",
    "noise.half_width": "均匀分布半宽 a",
    "noise.dof": "Student-t 自由度 ν",
    "noise.scale": "Student-t / 高斯尺度 s",
    "noise.q": "声明的有界矩阶数 q",
    "noise.override": "显式噪声序列，替代随机抽样",
    "run.method": "rgd / momentum / sgd",
    "run.x0": "初始点坐标",
    "run.theta0": "球面初始点与北极的夹角 θ0，x0 = (sin θ0, 0, …, cos θ0)",
    "run.step_rule": "exp_map / normalize_retract / ambient",
    "run.seed": "单个种子",
    "run.seeds": "种子范围 A..B 或空白分隔的种子列表",
    "run.max_iters": "最大迭代数",
    "run.grad_tol": "梯度范数停止阈值，0 表示不按梯度停止",
    "run.record_x": "是否记录并输出坐标列",
    "bound.p": "界的指数 p",
    "bound.C": "界的常数 C（缺省时在锚点标定）",
    "bound.anchor": "锚点迭代",
    "bound.tol": "相对容差",
    "bound.column": "检查的列，缺省 gap",
    "fit.window": "拟合窗口 k_lo:k_hi",
    "fit.column": "拟合的列，缺省 gap",
}

ALIASES = {
    "quadratic.A": "objective.A",
    "quadratic.b": "objective.b",
}

SECTIONS = ("objective", "quadratic", "manifold", "schedule", "noise", "run", "bound", "fit")

_alpha_adapter = TypeAdapter(AlphaRule)
_beta_adapter = TypeAdapter(BetaRule)


def _canonical_key(key: str, where: str) -> str:
    key = ALIASES.get(key, key)
    if key not in KNOWN_KEYS:
        raise ConfigError(f"未知配置键（{where}）", key=key)
    return key


# ================================
# 值解析
# ================================

def parse_float(value: str, key: str) -> float:
    try:
        v = float(value)
    except ValueError:
        raise ConfigError(f"'{value}' 不是数值", key=key)
    if not math.isfinite(v):
        raise ConfigError(f"'{value}' 不是有限数值", key=key)
    return v


def parse_int(value: str, key: str) -> int:
    try:
        return int(value)
    except ValueError:
        raise ConfigError(f"'{value}' 不是整数", key=key)


def parse_bool(value: str, key: str) -> bool:
    v = value.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"'{value}' 不是布尔值", key=key)


def parse_vector(value: str, key: str) -> List[float]:
    parts = value.replace(",", " ").split()
    if not parts:
        raise ConfigError("向量不能为空", key=key)
    return [parse_float(p, key) for p in parts]


def parse_matrix(value: str, key: str) -> List[List[float]]:
    rows = [parse_vector(r, key) for r in value.split(";") if r.strip()]
    if not rows:
        raise ConfigError("矩阵不能为空", key=key)
    if len({len(r) for r in rows}) != 1:
        raise ConfigError(f"矩阵各行长度不一致: {[len(r) for r in rows]}", key=key)
    return rows


def parse_seeds(value: str, key: str = "run.seeds") -> List[int]:
    """A..B（闭区间）或空白分隔的种子列表，返回升序去重后的结果"""
    value = value.strip()
    if ".." in value:
        lo, _, hi = value.partition("..")
        a, b = parse_int(lo.strip(), key), parse_int(hi.strip(), key)
        if a < 0 or b < a:
            raise ConfigError(f"种子范围 '{value}' 非法", key=key)
        return list(range(a, b + 1))
    seeds = sorted({parse_int(p, key) for p in value.replace(",", " ").split()})
    if not seeds or seeds[0] < 0:
        raise ConfigError(f"种子列表 '{value}' 非法", key=key)
    return seeds


def parse_window(value: str, key: str = "fit.window") -> Tuple[int, int]:
    lo, sep, hi = value.partition(":")
    if not sep:
        raise ConfigError(f"窗口 '{value}' 的格式应为 k_lo:k_hi", key=key)
    return parse_int(lo.strip(), key), parse_int(hi.strip(), key)


def _rule_params(value: str, key: str) -> Dict[str, Any]:
    tokens = value.split()
    if not tokens:
        raise ConfigError("规则不能为空", key=key)
    params: Dict[str, Any] = {"kind": tokens[0].lower()}
    positional = []
    for tok in tokens[1:]:
        name, sep, raw = tok.partition("=")
        if sep:
            params[name] = raw
        else:
            positional.append(tok)
    if positional:
        if params["kind"] == "fixed" and len(positional) == 1:
            params["value"] = positional[0]
        elif params["kind"] == "sequence":
            params["values"] = positional
        else:
            raise ConfigError(f"规则 '{value}' 中有无法识别的参数 {positional}", key=key)
    return params


def parse_alpha(value: str, key: str = "schedule.alpha", method: Optional[str] = None):
    """
    解析步长规则

    method 为 sgd 时先检查 powerlaw 的 gamma 是否落在 (0.5, 1]，给出针对随机下降的报错。
    """
    params = _rule_params(value, key)
    if method == "sgd" and params["kind"] == "powerlaw" and "gamma" in params:
        gamma = parse_float(params["gamma"], key)
        lo, hi = SGD_GAMMA_RANGE
        if not lo < gamma <= hi:
            raise ConfigError(f"随机下降要求步长指数 gamma ∈ ({lo}, {hi}]，当前 gamma={gamma}", key=key)
    if "guarded" in params:
        raise ConfigError("guarded 只适用于动量规则", key=key)
    try:
        return _alpha_adapter.validate_python(params)
    except ValidationError as e:
        raise ConfigError(_first_error(e), key=key)


def parse_beta(value: str, key: str = "schedule.beta"):
    params = _rule_params(value, key)
    if "guarded" in params:
        params["guarded"] = parse_bool(params["guarded"], key)
    try:
        return _beta_adapter.validate_python(params)
    except ValidationError as e:
        raise ConfigError(_first_error(e), key=key)


def _first_error(e: ValidationError) -> str:
    err = e.errors()[0]
    loc = ".".join(str(p) for p in err.get("loc", ()))
    return f"{loc}: {err.get('msg')}" if loc else str(err.get("msg"))


# ================================
# 配置文件
# ================================

class ExperimentFile(BaseModel):
    """解析后的实验配置：基础键值、按名称的变体覆盖、来源路径"""

    entries: Dict[str, str] = Field(default_factory=dict)
    variants: Dict[str, Dict[str, str]] = Field(default_factory=dict)
    path: Optional[str] = None

    @classmethod
    def parse_text(cls, text: str, path: Optional[str] = None) -> "ExperimentFile":
        entries: Dict[str, str] = {}
        variants: Dict[str, Dict[str, str]] = {}
        section: Optional[str] = None
        target = entries
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            where = f"第 {lineno} 行"
            if line.startswith("[") and line.endswith("]"):
                section = line[1:-1].strip()
                if section.startswith("variant."):
                    name = section[len("variant."):].strip()
                    if not name:
                        raise ConfigError(f"变体名称不能为空（{where}）", key=section)
                    target = variants.setdefault(name, {})
                elif section in SECTIONS:
                    target = entries
                else:
                    raise ConfigError(f"未知配置段（{where}）", key=section)
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ConfigError(f"{where} 缺少 '='：{line}", key=path)
            key, value = key.strip(), value.strip()
            if "." not in key:
                if section is None or section.startswith("variant."):
                    raise ConfigError(f"{where} 的键需要写成 section.key 形式", key=key)
                key = f"{section}.{key}"
            key = _canonical_key(key, where)
            if key in target:
                raise ConfigError(f"{where} 重复定义", key=key)
            target[key] = value
        return cls(entries=entries, variants=variants, path=path)

    @classmethod
    def load(cls, path: Union[str, Path]) -> "ExperimentFile":
        """读取配置文件；也接受之前运行输出的 summary.json（使用其中记录的配置）"""
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as e:
            raise ConfigError(f"无法读取配置文件: {e}", key="--config")
        if path.suffix == ".json":
            try:
                text = json.loads(text)["config_text"]
            except (ValueError, KeyError, TypeError) as e:
                raise ConfigError(f"summary 文件中没有可用的配置: {e}", key="config_text")
        return cls.parse_text(text, path=str(path))

    def with_overrides(self, overrides: List[str]) -> "ExperimentFile":
        """应用命令行 key=value 覆盖（同时作用于已定义该键的变体）"""
        entries = dict(self.entries)
        variants = {name: dict(v) for name, v in self.variants.items()}
        for item in overrides:
            key, sep, value = item.partition("=")
            if not sep:
                raise ConfigError(f"覆盖项 '{item}' 的格式应为 key=value", key="--override")
            key = _canonical_key(key.strip(), "--override")
            value = value.strip()
            entries[key] = value
            for v in variants.values():
                if key in v:
                    v[key] = value
        return ExperimentFile(entries=entries, variants=variants, path=self.path)

    def to_text(self) -> str:
        """规范化文本，重新解析后得到相同的配置"""
        order = list(KNOWN_KEYS)
        lines = []
        for key in sorted(self.entries, key=order.index):
            lines.append(f"{key} = {self.entries[key]}")
        for name, overrides in self.variants.items():
            lines.append("")
            lines.append(f"[variant.{name}]")
            for key in sorted(overrides, key=order.index):
                lines.append(f"{key} = {overrides[key]}")
        return "\n".join(lines) + "\n"

    # ---------- 取值 ----------

    def variant_names(self) -> List[Optional[str]]:
        return sorted(self.variants) if self.variants else [None]

    def resolved(self, variant: Optional[str] = None) -> Dict[str, str]:
        merged = dict(self.entries)
        if variant is not None:
            if variant not in self.variants:
                raise ConfigError(f"未定义的变体 '{variant}'", key="variant")
            merged.update(self.variants[variant])
        return merged

    @property
    def method(self) -> str:
        method = self.entries.get("run.method", "rgd").strip().lower()
        if method not in METHODS:
            raise ConfigError(f"未知方法 '{method}'，可选 {', '.join(METHODS)}", key="run.method")
        return method

    def seeds(self) -> List[int]:
        if "run.seeds" in self.entries:
            return parse_seeds(self.entries["run.seeds"])
        seed = parse_int(self.entries.get("run.seed", "0"), "run.seed")
        if seed < 0:
            raise ConfigError("种子必须非负", key="run.seed")
        return [seed]

    def build_objective(self, registry: ObjectiveRegistry, variant: Optional[str] = None) -> Objective:
        cfg = self.resolved(variant)
        if "objective.kind" not in cfg:
            raise ConfigError("缺少目标函数类型", key="objective.kind")
        dim = parse_int(cfg["objective.dim"], "objective.dim") if "objective.dim" in cfg else None
        A = parse_matrix(cfg["objective.A"], "objective.A") if "objective.A" in cfg else None
        b = parse_vector(cfg["objective.b"], "objective.b") if "objective.b" in cfg else None
        try:
            return registry.create(cfg["objective.kind"].strip(), dim=dim, A=A, b=b)
        except ConfigError:
            raise
        except (ValidationError, ValueError) as e:
            raise ConfigError(str(e), key="objective")

    def build_run_config(
        self,
        registry: ObjectiveRegistry,
        variant: Optional[str] = None,
        seed: Optional[int] = None,
    ) -> RunConfig:
        """组装单个变体、单个种子的 RunConfig"""
        cfg = self.resolved(variant)
        method = self.method
        objective = self.build_objective(registry, variant)

        if "manifold.kind" in cfg:
            dim = parse_int(cfg.get("manifold.dim", str(objective.dim)), "manifold.dim")
            manifold = parse_manifold(cfg["manifold.kind"], dim, key="manifold.kind")
        else:
            manifold = objective.default_manifold()

        if "schedule.alpha" not in cfg:
            raise ConfigError("缺少步长规则", key="schedule.alpha")
        alpha = parse_alpha(cfg["schedule.alpha"], method=method)
        beta = parse_beta(cfg.get("schedule.beta", "zero"))

        noise = None
        if "noise.family" in cfg:
            params: Dict[str, Any] = {"family": cfg["noise.family"].strip().lower(), "dim": objective.dim}
            for name in ("half_width", "dof", "scale", "q"):
                key = f"noise.{name}"
                if key in cfg:
                    params[name] = parse_float(cfg[key], key)
            try:
                noise = NoiseSpec(**params)
            except ValidationError as e:
                raise ConfigError(_first_error(e), key="noise")
        override = parse_vector(cfg["noise.override"], "noise.override") if "noise.override" in cfg else None

        x0 = self._initial_point(cfg, manifold)
        if seed is None:
            seed = self.seeds()[0]
        try:
            return RunConfig(
                objective=objective,
                manifold=manifold,
                x0=x0,
                schedule=ScheduleSpec(alpha=alpha, beta=beta),
                step_rule=StepRule(cfg.get("run.step_rule", "exp_map").strip()),
                noise=noise,
                noise_override=override,
                seed=seed,
                max_iters=parse_int(cfg.get("run.max_iters", "1000"), "run.max_iters"),
                grad_tol=parse_float(cfg.get("run.grad_tol", "0"), "run.grad_tol"),
                record_x=parse_bool(cfg.get("run.record_x", "false"), "run.record_x"),
            )
        except ConfigError:
            raise
        except ValidationError as e:
            raise ConfigError(_first_error(e), key="run")
        except ValueError as e:
            raise ConfigError(str(e), key="run.step_rule")

    @staticmethod
    def _initial_point(cfg: Dict[str, str], manifold) -> ManifoldPoint:
        if "run.x0" in cfg and "run.theta0" in cfg:
            raise ConfigError("run.x0 与 run.theta0 只能给出一个", key="run.x0")
        if "run.theta0" in cfg:
            if not isinstance(manifold, Sphere):
                raise ConfigError("run.theta0 只适用于球面", key="run.theta0")
            theta = parse_float(cfg["run.theta0"], "run.theta0")
            coords = np.zeros(manifold.ambient_dim)
            coords[0] = math.sin(theta)
            coords[-1] = math.cos(theta)
            coords /= np.linalg.norm(coords)
        elif "run.x0" in cfg:
            coords = np.array(parse_vector(cfg["run.x0"], "run.x0"))
        elif isinstance(manifold, Euclidean):
            coords = np.zeros(manifold.ambient_dim)
        else:
            raise ConfigError("球面上的运行需要 run.x0 或 run.theta0", key="run.x0")
        try:
            return ManifoldPoint(manifold=manifold, coords=coords)
        except (ValidationError, ValueError) as e:
            raise ConfigError(str(e), key="run.x0")

    def bound_settings(self, variant: Optional[str] = None) -> Optional[Dict[str, Any]]:
        """未给出 bound.p 时返回 None"""
        cfg = self.resolved(variant)
        if "bound.p" not in cfg:
            return None
        return {
            "p": parse_float(cfg["bound.p"], "bound.p"),
            "C": parse_float(cfg["bound.C"], "bound.C") if "bound.C" in cfg else None,
            "anchor": parse_int(cfg["bound.anchor"], "bound.anchor") if "bound.anchor" in cfg else None,
            "tol": parse_float(cfg["bound.tol"], "bound.tol") if "bound.tol" in cfg else None,
            "column": cfg.get("bound.column", "gap").strip(),
        }

    def fit_settings(self, variant: Optional[str] = None) -> Optional[Dict[str, Any]]:
        cfg = self.resolved(variant)
        if "fit.window" not in cfg:
            return None
        return {"window": parse_window(cfg["fit.window"]), "column": cfg.get("fit.column", "gap").strip()}
