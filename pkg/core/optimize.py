"""
三种最速下降迭代

- 黎曼梯度下降 x_{k+1} = exp_{x_k}(-α_k ∇_g f(x_k))（或归一化收缩）
- 动量下降 x_{k+1} = x_k - α_k ∇f(x_k) + β_k (x_k - x_{k-1})（线性空间）
- 随机下降 x_{k+1} = x_k - α_k (∇f(x_k) + ξ_k)，α_k = c / k^γ，γ ∈ (0.5, 1]

迭代编号约定：第 k 步（k ≥ 1）用 α_k、β_k、ξ_k 从 x_{k-1} 得到 x_k，
轨迹第 k 条记录保存 x_k 以及产生它的 α_k、β_k、ξ_k。
"""

from enum import Enum
from typing import Annotated, List, Literal, Optional, Sequence, Union
import hashlib
import json
import logging
import math

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .analysis import Trace, TraceMeta
from .base_model import ScheduleReport
from .constants import app_name, RATIO_EPS
from .errors import ConfigError, DimensionError, ManifoldError
from .manifold import Euclidean, Manifold, ManifoldKind, ManifoldPoint
from .noise import NoiseFamily, NoiseSpec, RngState, _draw, draw_block
from .objective import Objective, Quadratic

logger = logging.getLogger(app_name)

# 随机下降要求的步长指数区间 (0.5, 1]
SGD_GAMMA_RANGE = (0.5, 1.0)


# ================================
# 步长与动量调度
# ================================

class FixedStep(BaseModel):
    """固定步长 α_k = value"""
    model_config = ConfigDict(frozen=True)
    kind: Literal["fixed"] = "fixed"
    value: float = Field(..., gt=0.0)

    def label(self) -> str:
        return f"fixed({self.value!r})"


class PowerLawStep(BaseModel):
    """α_k = c / k^γ"""
    model_config = ConfigDict(frozen=True)
    kind: Literal["powerlaw"] = "powerlaw"
    c: float = Field(..., gt=0.0)
    gamma: float = Field(..., gt=0.0, le=1.0)

    def label(self) -> str:
        return f"powerlaw(c={self.c!r}, gamma={self.gamma!r})"


class LineSearchStep(BaseModel):
    """二次型上的精确线搜索 α_k = argmin_α f(x_k - α ∇f(x_k))"""
    model_config = ConfigDict(frozen=True)
    kind: Literal["line_search"] = "line_search"

    def label(self) -> str:
        return "line_search"


class SequenceStep(BaseModel):
    """显式给出的步长序列，用完后重复最后一个值"""
    model_config = ConfigDict(frozen=True)
    kind: Literal["sequence"] = "sequence"
    values: List[float] = Field(..., min_length=1)

    @model_validator(mode="after")
    def check_positive(self):
        if any(not v > 0.0 for v in self.values):
            raise ValueError("步长序列中的值必须全部为正")
        return self

    def label(self) -> str:
        return "sequence(" + ", ".join(repr(v) for v in self.values) + ")"


class ZeroMomentum(BaseModel):
    model_config = ConfigDict(frozen=True)
    kind: Literal["zero"] = "zero"

    def label(self) -> str:
        return "zero"


class PowerLawMomentum(BaseModel):
    """β_k = d / k^γ"""
    model_config = ConfigDict(frozen=True)
    kind: Literal["powerlaw"] = "powerlaw"
    d: float = Field(..., gt=0.0)
    gamma: float = Field(..., gt=0.0, le=1.0)

    def label(self) -> str:
        return f"powerlaw(d={self.d!r}, gamma={self.gamma!r})"


class StepRatioMomentum(BaseModel):
    """
    β_k = ‖x_k - x_{k-1}‖ / ‖x_{k-1} - x_{k-2}‖

    guarded=True 时，若加入动量项后的函数值大于纯线搜索步，则本步放弃动量（记录 β_k = 0）。
    """
    model_config = ConfigDict(frozen=True)
    kind: Literal["ratio"] = "ratio"
    guarded: bool = True

    def label(self) -> str:
        return "ratio" if self.guarded else "ratio(guarded=false)"


AlphaRule = Annotated[Union[FixedStep, PowerLawStep, LineSearchStep, SequenceStep], Field(discriminator="kind")]
BetaRule = Annotated[Union[ZeroMomentum, PowerLawMomentum, StepRatioMomentum], Field(discriminator="kind")]


class ScheduleSpec(BaseModel):
    """步长规则 alpha 与动量规则 beta"""
    model_config = ConfigDict(frozen=True)

    alpha: AlphaRule
    beta: BetaRule = Field(default_factory=ZeroMomentum)

    def label(self) -> str:
        return f"alpha={self.alpha.label()}; beta={self.beta.label()}"


class StepRule(str, Enum):
    """步进规则"""
    EXP_MAP = "exp_map"                      # 指数映射
    NORMALIZE_RETRACT = "normalize_retract"  # 归一化收缩
    AMBIENT = "ambient"                      # 环境空间直接相减（仅欧氏空间）


def alpha_at(rule, k: int) -> float:
    """第 k 步（k ≥ 1）的步长；线搜索步长依赖当前点，由迭代循环计算"""
    if isinstance(rule, FixedStep):
        return rule.value
    if isinstance(rule, PowerLawStep):
        return rule.c / float(k) ** rule.gamma
    if isinstance(rule, SequenceStep):
        return rule.values[min(k, len(rule.values)) - 1]
    raise ValueError("线搜索步长依赖当前点，不能预先给出")


def beta_at(rule, k: int) -> float:
    if isinstance(rule, ZeroMomentum):
        return 0.0
    if isinstance(rule, PowerLawMomentum):
        return rule.d / float(k) ** rule.gamma
    raise ValueError("比值动量依赖迭代历史，不能预先给出")


def partial_sum(rule, k: int) -> float:
    """Σ_{j=1}^{k} α_j，用来数值核对 validate_schedule 的发散判定"""
    if isinstance(rule, FixedStep):
        return rule.value * k
    if isinstance(rule, PowerLawStep):
        j = np.arange(1, k + 1, dtype=float)
        return float(rule.c * np.sum(j ** -rule.gamma))
    if isinstance(rule, SequenceStep):
        head = rule.values[:k]
        return float(sum(head) + max(0, k - len(rule.values)) * rule.values[-1])
    raise ValueError("线搜索步长的部分和依赖迭代轨迹")


def validate_schedule(s: ScheduleSpec) -> ScheduleReport:
    """
    判定调度是否满足 α_k → 0、Σα_k = ∞、β_k → 0（动量法弱收敛到临界点的条件）

    依赖数据的规则（线搜索步长、比值动量）对应字段为 None。
    """
    alpha, beta = s.alpha, s.beta
    if isinstance(alpha, FixedStep):
        a_zero, a_div = False, True
    elif isinstance(alpha, PowerLawStep):
        a_zero, a_div = True, alpha.gamma <= 1.0
    elif isinstance(alpha, SequenceStep):
        a_zero, a_div = False, True
    else:
        a_zero, a_div = None, None

    if isinstance(beta, (ZeroMomentum, PowerLawMomentum)):
        b_zero = True
    else:
        b_zero = None
    return ScheduleReport(alpha_to_zero=a_zero, alpha_sum_diverges=a_div, beta_to_zero=b_zero)


# ================================
# 运行配置
# ================================

class RunConfig(BaseModel):
    """一次运行的全部自由选择"""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    objective: Objective
    manifold: ManifoldKind
    x0: ManifoldPoint
    schedule: ScheduleSpec
    step_rule: StepRule = StepRule.EXP_MAP
    noise: Optional[NoiseSpec] = None
    noise_override: Optional[List[float]] = Field(
        None,
        description="显式噪声序列，按迭代顺序每次消耗 dim 个值，替代随机抽样"
    )
    seed: int = Field(default=0, ge=0)
    max_iters: int = Field(default=1000, ge=0)
    grad_tol: float = Field(default=0.0, ge=0.0, description="梯度范数停止阈值，0 表示不按梯度停止")
    record_x: bool = Field(default=False, description="是否记录每步坐标")

    @model_validator(mode="after")
    def check_consistency(self):
        if self.x0.manifold != self.manifold:
            raise ValueError(f"x0 所在流形 {self.x0.manifold.describe()} 与声明的 {self.manifold.describe()} 不一致")
        if self.objective.dim != self.manifold.ambient_dim:
            raise ValueError(f"目标函数维数 {self.objective.dim} 与流形 {self.manifold.describe()} 不一致")
        if self.step_rule == StepRule.AMBIENT and not isinstance(self.manifold, Euclidean):
            raise ValueError("ambient 步进规则只能用于欧氏空间")
        if isinstance(self.schedule.alpha, LineSearchStep):
            if not isinstance(self.objective, Quadratic) or not isinstance(self.manifold, Euclidean):
                raise ValueError("精确线搜索只适用于欧氏空间上的二次型")
        if self.noise is not None and self.noise.dim != self.objective.dim:
            raise ValueError(f"噪声维数 {self.noise.dim} 与目标函数维数 {self.objective.dim} 不一致")
        if self.noise_override is not None and len(self.noise_override) % self.objective.dim != 0:
            raise ValueError(f"noise_override 的长度 {len(self.noise_override)} 不是维数 {self.objective.dim} 的整数倍")
        return self

    def config_key(self) -> str:
        """除种子外的配置指纹"""
        payload = {
            "objective": self.objective.describe(),
            "manifold": self.manifold.describe(),
            "x0": self.x0.coords.tolist(),
            "schedule": self.schedule.label(),
            "step_rule": self.step_rule.value,
            "noise": None if self.noise is None else self.noise.describe(),
            "noise_override": self.noise_override,
            "max_iters": self.max_iters,
            "grad_tol": self.grad_tol,
            "record_x": self.record_x,
        }
        return hashlib.sha1(json.dumps(payload, sort_keys=True).encode("utf-8")).hexdigest()

    def meta(self, method: str) -> TraceMeta:
        return TraceMeta(
            method=method,
            seed=self.seed,
            objective=self.objective.describe(),
            manifold=self.manifold.describe(),
            schedule=self.schedule.label(),
            step_rule=self.step_rule.value,
            noise=None if self.noise is None else self.noise.describe(),
            max_iters=self.max_iters,
            grad_tol=self.grad_tol,
            config_key=self.config_key(),
        )


# ================================
# 单步更新
# ================================

def _coords(x) -> np.ndarray:
    return x.coords if isinstance(x, ManifoldPoint) else np.atleast_1d(np.asarray(x, dtype=float))


def _require_euclidean(x: ManifoldPoint, what: str) -> None:
    if isinstance(x, ManifoldPoint) and not isinstance(x.manifold, Euclidean):
        raise ManifoldError(f"{what} 只定义在欧氏空间上，当前为 {x.manifold.describe()}")


def _wrap(template, coords: np.ndarray):
    if isinstance(template, ManifoldPoint):
        return ManifoldPoint(manifold=template.manifold, coords=coords)
    return coords


def _step_coords(manifold: Manifold, rule: StepRule, x: np.ndarray, g: np.ndarray, alpha: float) -> np.ndarray:
    if not np.any(g):
        return np.array(x, copy=True)
    if rule == StepRule.AMBIENT:
        return x - alpha * g
    t = -alpha * g
    if rule == StepRule.NORMALIZE_RETRACT:
        return manifold._retract(x, t)
    return manifold._expmap(x, t)


def rgd_step(f: Objective, x: ManifoldPoint, alpha: float, step_rule: StepRule = StepRule.EXP_MAP) -> ManifoldPoint:
    """
    黎曼最速下降的一步：x' = exp_x(-α ∇_g f(x))（或归一化收缩 / 环境空间相减）

    梯度恰为零时原样返回 x。
    """
    if not alpha > 0.0:
        raise ValueError(f"步长必须为正，当前 α={alpha!r}")
    step_rule = StepRule(step_rule)
    if step_rule == StepRule.AMBIENT:
        _require_euclidean(x, "ambient 步进规则")
    m = x.manifold
    if f.dim != m.ambient_dim:
        raise DimensionError(f"目标函数维数 {f.dim} 与点的维数 {m.ambient_dim} 不一致")
    g = m._proju(x.coords, f.gradient(x.coords))
    return ManifoldPoint(manifold=m, coords=_step_coords(m, step_rule, x.coords, g, alpha))


def momentum_step(f: Objective, x, x_prev, alpha: float, beta: float):
    """
    动量下降的一步：x_k - α ∇f(x_k) + β (x_k - x_{k-1})

    β = 0 时与环境空间的梯度步逐位相同。
    """
    _require_euclidean(x, "动量下降")
    xc, pc = _coords(x), _coords(x_prev)
    if xc.shape != (f.dim,) or pc.shape != (f.dim,):
        raise DimensionError(f"x 与 x_prev 的维数必须都是 {f.dim}")
    new = xc - alpha * f.gradient(xc)
    if beta != 0.0:
        new = new + beta * (xc - pc)
    return _wrap(x, new)


def exact_line_search_quadratic(A, b, x) -> float:
    """
    二次型上的精确线搜索：α = <g, g> / <Ag, g>，g = Ax - b

    Raises:
        ValueError: g = 0（临界点处线搜索无定义）
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    g = A @ _coords(x) - b
    return _line_search_alpha(A, g)


def _line_search_alpha(A: np.ndarray, g: np.ndarray) -> float:
    if not np.any(g):
        raise ValueError("梯度为零，精确线搜索无定义")
    return float(np.dot(g, g) / np.dot(A @ g, g))


def momentum_ratio_beta(x_k, x_prev, x_prev2=None) -> float:
    """
    β_k = ‖x_k - x_{k-1}‖ / ‖x_{k-1} - x_{k-2}‖

    尚不足两段位移（x_prev2 为 None）或分母 ≤ 1e-15 时返回 0。
    """
    if x_prev2 is None:
        return 0.0
    den = float(np.linalg.norm(_coords(x_prev) - _coords(x_prev2)))
    if den <= RATIO_EPS:
        return 0.0
    return float(np.linalg.norm(_coords(x_k) - _coords(x_prev))) / den


def sgd_step(f: Objective, x, alpha: float, xi):
    """随机下降的一步：x - α (∇f(x) + ξ)"""
    _require_euclidean(x, "随机下降")
    xc = _coords(x)
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    if xi.shape != xc.shape or xc.shape != (f.dim,):
        raise DimensionError(f"噪声维数 {xi.shape} 与点的维数 {xc.shape} 不一致")
    return _wrap(x, xc - alpha * (f.gradient(xc) + xi))


# ================================
# 完整运行
# ================================

class _Recorder:
    """预分配列数组，逐步写入，最后截断为 Trace"""

    def __init__(self, cfg: RunConfig, method: str, with_xi: bool):
        n = cfg.max_iters + 1
        dim = cfg.objective.dim
        self.cfg = cfg
        self.method = method
        self.k = np.arange(n, dtype=np.int64)
        self.f = np.zeros(n)
        self.g = np.zeros(n)
        self.alpha = np.zeros(n)
        self.beta = np.zeros(n)
        self.x = np.zeros((n, dim)) if cfg.record_x else None
        self.xi = np.zeros((n, dim)) if with_xi else None
        x_star = cfg.objective.minimizer_coords()
        self.x_star = None if x_star is None or x_star.shape != (dim,) else x_star
        self.f_star = None if self.x_star is None else cfg.objective.value(self.x_star)
        self.dist = None if self.x_star is None else np.zeros(n)
        self.size = 0

    def add(self, x: np.ndarray, f: float, g_norm: float, alpha: float = 0.0, beta: float = 0.0, xi=None):
        i = self.size
        self.f[i] = f
        self.g[i] = g_norm
        self.alpha[i] = alpha
        self.beta[i] = beta
        if self.x is not None:
            self.x[i] = x
        if self.xi is not None and xi is not None:
            self.xi[i] = xi
        if self.dist is not None:
            self.dist[i] = self.cfg.manifold._dist(x, self.x_star)
        self.size += 1

    def build(self, aborted_at: Optional[int] = None, reason: Optional[str] = None) -> Trace:
        n = self.size
        return Trace(
            meta=self.cfg.meta(self.method),
            k=self.k[:n].copy(),
            f_value=self.f[:n].copy(),
            grad_norm=self.g[:n].copy(),
            alpha=self.alpha[:n].copy(),
            beta=self.beta[:n].copy(),
            gap=None if self.f_star is None else self.f[:n] - self.f_star,
            dist_to_opt=None if self.dist is None else self.dist[:n].copy(),
            x=None if self.x is None else self.x[:n].copy(),
            xi=None if self.xi is None else self.xi[:n].copy(),
            aborted_at=aborted_at,
            abort_reason=reason,
        )


def _non_finite(x: np.ndarray, f: float) -> bool:
    return not (math.isfinite(f) and np.all(np.isfinite(x)))


def _finish(rec: _Recorder, k_abort: Optional[int], cfg: RunConfig, method: str) -> Trace:
    if k_abort is not None:
        reason = f"第 {k_abort} 步出现非有限值（NaN/inf）"
        logger.error(f"✗ {method} 运行中止（seed={cfg.seed}）：{reason}")
        return rec.build(aborted_at=k_abort, reason=reason)
    trace = rec.build()
    logger.debug(f"✓ {method} 运行完成（seed={cfg.seed}）：{trace.iterations} 步，f={trace.f_value[-1]:.6g}")
    return trace


def _should_stop(g_norm: float, cfg: RunConfig) -> bool:
    return cfg.grad_tol > 0.0 and g_norm <= cfg.grad_tol


def run_rgd(cfg: RunConfig) -> Trace:
    """
    黎曼梯度下降

    迭代到 max_iters 或 ‖∇_g f‖ ≤ grad_tol（grad_tol > 0 时）为止，逐步记录。
    出现 NaN/inf 时记录出错的那一步并中止。
    """
    if cfg.noise is not None or cfg.noise_override is not None:
        raise ConfigError("黎曼梯度下降不接受噪声配置", key="noise")
    if not isinstance(cfg.schedule.beta, ZeroMomentum):
        raise ConfigError("黎曼梯度下降不使用动量，schedule.beta 必须为 zero", key="schedule.beta")

    f, m, rule = cfg.objective, cfg.manifold, cfg.schedule.alpha
    line_search = isinstance(rule, LineSearchStep)
    rec = _Recorder(cfg, "rgd", with_xi=False)

    x = np.array(cfg.x0.coords, dtype=float)
    fx = f.value(x)
    g = m._proju(x, f.gradient(x))
    gn = float(np.linalg.norm(g))
    rec.add(x, fx, gn)

    for k in range(1, cfg.max_iters + 1):
        if _should_stop(gn, cfg) or (line_search and gn == 0.0):
            break
        alpha = _line_search_alpha(f.A, g) if line_search else alpha_at(rule, k)
        x = _step_coords(m, cfg.step_rule, x, g, alpha)
        fx = f.value(x)
        g = m._proju(x, f.gradient(x))
        gn = float(np.linalg.norm(g))
        rec.add(x, fx, gn, alpha=alpha)
        if _non_finite(x, fx):
            return _finish(rec, k, cfg, "rgd")
    return _finish(rec, None, cfg, "rgd")


def run_momentum(cfg: RunConfig) -> Trace:
    """
    动量下降：x_k = x_{k-1} - α_k ∇f(x_{k-1}) + β_k (x_{k-1} - x_{k-2})

    约定 x_{-1} = x_0，因此第一步没有动量项；比值动量在两段位移出现之前为 0。
    """
    if not isinstance(cfg.manifold, Euclidean):
        raise ConfigError("动量下降只定义在欧氏空间上", key="manifold.kind")
    if cfg.noise is not None or cfg.noise_override is not None:
        raise ConfigError("动量下降不接受噪声配置", key="noise")

    f = cfg.objective
    a_rule, b_rule = cfg.schedule.alpha, cfg.schedule.beta
    line_search = isinstance(a_rule, LineSearchStep)
    ratio = isinstance(b_rule, StepRatioMomentum)
    rec = _Recorder(cfg, "momentum", with_xi=False)

    x = np.array(cfg.x0.coords, dtype=float)
    x_prev = x.copy()
    x_prev2 = None
    fx = f.value(x)
    g = f.gradient(x)
    gn = float(np.linalg.norm(g))
    rec.add(x, fx, gn)

    for k in range(1, cfg.max_iters + 1):
        if _should_stop(gn, cfg) or (line_search and gn == 0.0):
            break
        alpha = _line_search_alpha(f.A, g) if line_search else alpha_at(a_rule, k)
        beta = momentum_ratio_beta(x, x_prev, x_prev2) if ratio else beta_at(b_rule, k)

        new = x - alpha * g
        if beta != 0.0:
            candidate = new + beta * (x - x_prev)
            if ratio and b_rule.guarded and f.value(candidate) > f.value(new):
                beta = 0.0
            else:
                new = candidate

        x_prev2, x_prev, x = x_prev, x, new
        fx = f.value(x)
        g = f.gradient(x)
        gn = float(np.linalg.norm(g))
        rec.add(x, fx, gn, alpha=alpha, beta=beta)
        if _non_finite(x, fx):
            return _finish(rec, k, cfg, "momentum")
    return _finish(rec, None, cfg, "momentum")


def _check_sgd_config(cfg: RunConfig) -> PowerLawStep:
    if not isinstance(cfg.manifold, Euclidean):
        raise ConfigError("随机下降只定义在欧氏空间上", key="manifold.kind")
    if cfg.noise is None and cfg.noise_override is None:
        raise ConfigError("随机下降需要噪声配置（noise.family 或 noise.override）", key="noise.family")
    rule = cfg.schedule.alpha
    if not isinstance(rule, PowerLawStep):
        raise ConfigError("随机下降的步长必须是 powerlaw c=… gamma=…", key="schedule.alpha")
    lo, hi = SGD_GAMMA_RANGE
    if not lo < rule.gamma <= hi:
        raise ConfigError(
            f"随机下降要求步长指数 gamma ∈ ({lo}, {hi}]，当前 gamma={rule.gamma}",
            key="schedule.alpha",
        )
    if not isinstance(cfg.schedule.beta, ZeroMomentum):
        raise ConfigError("随机下降不使用动量，schedule.beta 必须为 zero", key="schedule.beta")
    return rule


def _noise_rows(cfg: RunConfig) -> np.ndarray:
    dim = cfg.objective.dim
    if cfg.noise_override is not None:
        rows = np.asarray(cfg.noise_override, dtype=float).reshape(-1, dim)
        if rows.shape[0] < cfg.max_iters:
            raise ConfigError(
                f"noise.override 只给出 {rows.shape[0]} 步噪声，少于 max_iters={cfg.max_iters}",
                key="noise.override",
            )
        return rows[: cfg.max_iters]
    return draw_block(cfg.noise, cfg.seed, cfg.max_iters)


def run_sgd(cfg: RunConfig) -> Trace:
    """
    随机最速下降，α_k = c / k^γ，γ ∈ (0.5, 1]

    第 k 步的噪声 ξ_k 是种子 cfg.seed 对应随机流上的第 k 次抽样（或 noise.override 的第 k 项），
    记录在轨迹的 xi 列中。同一配置与种子的结果逐位可复现。
    """
    rule = _check_sgd_config(cfg)
    f = cfg.objective
    noise = _noise_rows(cfg)
    rec = _Recorder(cfg, "sgd", with_xi=True)

    x = np.array(cfg.x0.coords, dtype=float)
    fx = f.value(x)
    g = f.gradient(x)
    rec.add(x, fx, float(np.linalg.norm(g)))

    for k in range(1, cfg.max_iters + 1):
        if _should_stop(float(np.linalg.norm(g)), cfg):
            break
        alpha = rule.c / float(k) ** rule.gamma
        xi = noise[k - 1]
        x = x - alpha * (g + xi)
        fx = f.value(x)
        g = f.gradient(x)
        rec.add(x, fx, float(np.linalg.norm(g)), alpha=alpha, xi=xi)
        if _non_finite(x, fx):
            return _finish(rec, k, cfg, "sgd")
    return _finish(rec, None, cfg, "sgd")


# 批量运行时每次抽取噪声的迭代块大小
_BATCH_CHUNK = 1024


def run_sgd_batch(cfg: RunConfig, seeds: Sequence[int]) -> List[Trace]:
    """
    多个种子同步推进的随机下降（Monte Carlo 用）

    状态为 (种子数, dim) 的数组，每个种子仍使用自己的随机流，
    结果与逐个调用 run_sgd 一致（误差在 1e-12 以内，一维目标时逐位相同）；
    不记录坐标时也逐步计算到最小点的距离。不支持梯度停止与 noise.override。

    Returns:
        List[Trace]: 按种子升序排列的轨迹
    """
    rule = _check_sgd_config(cfg)
    if cfg.noise_override is not None:
        raise ConfigError("批量运行不支持 noise.override", key="noise.override")
    seeds = sorted(int(s) for s in seeds)
    if not seeds:
        raise ValueError("至少需要一个种子")

    f, spec = cfg.objective, cfg.noise
    S, T, dim = len(seeds), cfg.max_iters, f.dim
    gens = [RngState.from_seed(s).generator() for s in seeds]

    F = np.zeros((S, T + 1))
    Gn = np.zeros((S, T + 1))
    alphas = np.zeros(T + 1)
    XI = np.zeros((S, T + 1, dim))
    Xrec = np.zeros((S, T + 1, dim)) if cfg.record_x else None
    x_star = f.minimizer_coords()
    if x_star is not None and x_star.shape != (dim,):
        x_star = None
    D = None if x_star is None else np.zeros((S, T + 1))

    X = np.tile(np.asarray(cfg.x0.coords, dtype=float), (S, 1))
    G = f.gradient_batch(X)
    F[:, 0] = f.value_batch(X)
    Gn[:, 0] = np.linalg.norm(G, axis=1)
    if Xrec is not None:
        Xrec[:, 0] = X
    if D is not None:
        D[:, 0] = np.linalg.norm(X - x_star, axis=1)

    for start in range(1, T + 1, _BATCH_CHUNK):
        rows = min(_BATCH_CHUNK, T + 1 - start)
        if spec.family == NoiseFamily.ZERO:
            chunk = np.zeros((S, rows, dim))
        else:
            chunk = np.stack([_draw(spec, gen, rows) for gen in gens])
        XI[:, start:start + rows] = chunk
        for j in range(rows):
            k = start + j
            alpha = rule.c / float(k) ** rule.gamma
            X = X - alpha * (G + chunk[:, j])
            G = f.gradient_batch(X)
            F[:, k] = f.value_batch(X)
            Gn[:, k] = np.linalg.norm(G, axis=1)
            alphas[k] = alpha
            if Xrec is not None:
                Xrec[:, k] = X
            if D is not None:
                D[:, k] = np.linalg.norm(X - x_star, axis=1)

    f_star = None if x_star is None else f.value(x_star)
    traces = []
    for i, seed in enumerate(seeds):
        seed_cfg = cfg.model_copy(update={"seed": seed})
        finite = np.isfinite(F[i])
        bad = np.flatnonzero(~finite)
        n = T + 1 if bad.size == 0 else int(bad[0]) + 1
        traces.append(Trace(
            meta=seed_cfg.meta("sgd"),
            k=np.arange(n, dtype=np.int64),
            f_value=F[i, :n].copy(),
            grad_norm=Gn[i, :n].copy(),
            alpha=alphas[:n].copy(),
            beta=np.zeros(n),
            gap=None if f_star is None else F[i, :n] - f_star,
            dist_to_opt=None if D is None else D[i, :n].copy(),
            x=None if Xrec is None else Xrec[i, :n].copy(),
            xi=XI[i, :n].copy(),
            aborted_at=None if bad.size == 0 else int(bad[0]),
            abort_reason=None if bad.size == 0 else f"第 {int(bad[0])} 步出现非有限值（NaN/inf）",
        ))
    logger.info(f"✓ 批量随机下降完成：{S} 个种子 × {T} 步")
    return traces


METHODS = {
    "rgd": run_rgd,
    "momentum": run_momentum,
    "sgd": run_sgd,
}


def run(cfg: RunConfig, method: str) -> Trace:
    """按方法名分派"""
    try:
        runner = METHODS[method]
    except KeyError:
        raise ConfigError(f"未知方法 '{method}'，可选 {', '.join(METHODS)}", key="run.method")
    return runner(cfg)
