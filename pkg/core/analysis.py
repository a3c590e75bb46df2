"""
轨迹记录与收敛分析

- Trace: 按列存储的迭代轨迹（numpy 数组），records 按需生成逐条记录
- energy / energy_series: 能量函数 E_k = f(x_k) - f(x*) + ½‖x_k - x*‖²
- mean_trace: 多种子轨迹逐点平均（按种子升序合并）
- fit_rate: 对数坐标最小二乘拟合 e_k ≈ C k^{-p}
- check_bound: 检查 e_k ≤ C / k^p（显式 C，或在锚点标定 C）
"""

from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple
import logging

import numpy as np
from pydantic import BaseModel, Field

from .base_model import BoundReport, RateFit
from .constants import app_name

logger = logging.getLogger(app_name)

# 已知最小点时允许的负间隙（浮点误差）
GAP_FLOOR = -1e-10


class TraceMeta(BaseModel):
    """运行配置摘要"""

    method: str = Field(..., description="rgd / momentum / sgd")
    seed: int = Field(..., description="随机种子")
    objective: Dict[str, Any] = Field(..., description="目标函数描述")
    manifold: str = Field(..., description="流形描述")
    schedule: str = Field(..., description="步长与动量调度")
    step_rule: str = Field(..., description="步进规则")
    noise: Optional[Dict[str, Any]] = Field(None, description="噪声规格")
    max_iters: int = Field(..., ge=0)
    grad_tol: float = Field(..., ge=0.0)
    config_key: str = Field(..., description="除种子外的配置指纹，mean_trace 用来判断可否合并")
    seeds: Optional[List[int]] = Field(None, description="平均轨迹所合并的种子")


class TraceRecord(BaseModel):
    """单次迭代记录"""

    k: int
    x: Optional[List[float]] = None
    f_value: float
    gap: Optional[float] = None
    grad_norm: float
    alpha: float
    beta: float
    xi: Optional[List[float]] = None
    dist_to_opt: Optional[float] = None


def _opt(v: float) -> Optional[float]:
    return None if np.isnan(v) else float(v)


class Trace:
    """
    迭代轨迹

    所有列长度一致，k 从 0 严格递增；第 0 条记录的 alpha = beta = 0。
    gap / dist_to_opt 在最小点未知时为 None；x / xi 只在需要时记录。
    """

    COLUMNS = ("f_value", "gap", "grad_norm", "alpha", "beta", "dist_to_opt")

    def __init__(
        self,
        meta: TraceMeta,
        k: np.ndarray,
        f_value: np.ndarray,
        grad_norm: np.ndarray,
        alpha: np.ndarray,
        beta: np.ndarray,
        gap: Optional[np.ndarray] = None,
        dist_to_opt: Optional[np.ndarray] = None,
        x: Optional[np.ndarray] = None,
        xi: Optional[np.ndarray] = None,
        aborted_at: Optional[int] = None,
        abort_reason: Optional[str] = None,
    ):
        self.meta = meta
        self.k = np.asarray(k, dtype=np.int64)
        self.f_value = np.asarray(f_value, dtype=float)
        self.grad_norm = np.asarray(grad_norm, dtype=float)
        self.alpha = np.asarray(alpha, dtype=float)
        self.beta = np.asarray(beta, dtype=float)
        self.gap = None if gap is None else np.asarray(gap, dtype=float)
        self.dist_to_opt = None if dist_to_opt is None else np.asarray(dist_to_opt, dtype=float)
        self.x = x
        self.xi = xi
        self.aborted_at = aborted_at
        self.abort_reason = abort_reason

        n = len(self.k)
        for name in ("f_value", "grad_norm", "alpha", "beta", "gap", "dist_to_opt"):
            col = getattr(self, name)
            if col is not None and len(col) != n:
                raise ValueError(f"列 {name} 长度 {len(col)} 与 k 的长度 {n} 不一致")
        if n and (self.k[0] != 0 or np.any(np.diff(self.k) <= 0)):
            raise ValueError("k 必须从 0 开始严格递增")

    def __len__(self) -> int:
        return len(self.k)

    @property
    def aborted(self) -> bool:
        return self.aborted_at is not None

    @property
    def iterations(self) -> int:
        return int(self.k[-1]) if len(self.k) else 0

    def column(self, name: str) -> np.ndarray:
        if name not in self.COLUMNS:
            raise KeyError(f"未知列 '{name}'，可选 {', '.join(self.COLUMNS)}")
        col = getattr(self, name)
        if col is None:
            raise KeyError(f"轨迹中没有 '{name}' 列（最小点未知）")
        return col

    def series(self, name: str = "gap") -> Tuple[np.ndarray, np.ndarray]:
        return self.k, self.column(name)

    def record(self, i: int) -> TraceRecord:
        return TraceRecord(
            k=int(self.k[i]),
            x=None if self.x is None else [float(v) for v in self.x[i]],
            f_value=float(self.f_value[i]),
            gap=None if self.gap is None else _opt(self.gap[i]),
            grad_norm=float(self.grad_norm[i]),
            alpha=float(self.alpha[i]),
            beta=float(self.beta[i]),
            xi=None if self.xi is None or i == 0 else [float(v) for v in self.xi[i]],
            dist_to_opt=None if self.dist_to_opt is None else _opt(self.dist_to_opt[i]),
        )

    @property
    def records(self) -> Iterator[TraceRecord]:
        for i in range(len(self)):
            yield self.record(i)

    @property
    def final(self) -> TraceRecord:
        return self.record(len(self) - 1)


def energy(record: TraceRecord, x_star, objective=None) -> float:
    """
    E_k = f(x_k) - f(x*) + ½‖x_k - x*‖²

    Args:
        record: 迭代记录（需要记录了 x）
        x_star: 最小点坐标（或 ManifoldPoint）
        objective: 记录中没有 gap 时用来计算 f(x_k) - f(x*)
    """
    if record.x is None:
        raise ValueError(f"记录 k={record.k} 中没有坐标 x，无法计算能量")
    x = np.asarray(record.x, dtype=float)
    x_star = np.asarray(getattr(x_star, "coords", x_star), dtype=float)
    if record.gap is not None:
        gap = record.gap
    elif objective is not None:
        gap = objective.value(x) - objective.value(x_star)
    else:
        raise ValueError(f"记录 k={record.k} 中没有间隙，且未提供目标函数")
    diff = x - x_star
    return float(gap + 0.5 * np.dot(diff, diff))


def energy_series(trace: Trace, x_star) -> np.ndarray:
    """整条轨迹的能量序列"""
    if trace.x is None or trace.gap is None:
        raise ValueError("计算能量序列需要轨迹记录坐标 x 和间隙 gap")
    x_star = np.asarray(getattr(x_star, "coords", x_star), dtype=float)
    diff = trace.x - x_star
    return trace.gap + 0.5 * np.einsum("ij,ij->i", diff, diff)


def mean_trace(traces: Sequence[Trace]) -> Trace:
    """
    多条轨迹的逐点平均（Monte Carlo 期望估计）

    轨迹按种子升序合并，逐项更新均值 m += (v - m)/i，
    因此 N 条相同轨迹的平均与原轨迹逐位相同，结果与执行顺序无关。
    """
    if not traces:
        raise ValueError("mean_trace 至少需要一条轨迹")
    ordered = sorted(traces, key=lambda t: t.meta.seed)
    first = ordered[0]
    for t in ordered[1:]:
        if t.meta.config_key != first.meta.config_key:
            raise ValueError(f"种子 {t.meta.seed} 的配置与种子 {first.meta.seed} 不一致，不能合并")
        if len(t) != len(first) or not np.array_equal(t.k, first.k):
            raise ValueError(f"种子 {t.meta.seed} 的轨迹长度 {len(t)} 与 {len(first)} 不一致")

    names = ("f_value", "grad_norm", "alpha", "beta", "gap", "dist_to_opt")
    means: Dict[str, Optional[np.ndarray]] = {}
    for name in names:
        if getattr(first, name) is None:
            means[name] = None
            continue
        m = np.array(getattr(first, name), dtype=float, copy=True)
        for i, t in enumerate(ordered[1:], start=2):
            m += (getattr(t, name) - m) / i
        means[name] = m

    meta = first.meta.model_copy(update={"seeds": [t.meta.seed for t in ordered]})
    return Trace(meta=meta, k=first.k.copy(), **means)


def _log_spaced_indices(k: np.ndarray, max_points: int) -> np.ndarray:
    if len(k) <= max_points:
        return np.arange(len(k))
    targets = np.geomspace(k[0], k[-1], max_points)
    idx = np.searchsorted(k, targets, side="left")
    idx = np.clip(idx, 0, len(k) - 1)
    return np.unique(idx)


def fit_rate(
    k: Sequence[float],
    e: Sequence[float],
    window: Tuple[int, int],
    max_points: int = 200,
    floor: float = 1e-15,
) -> RateFit:
    """
    在 (log k, log e_k) 上做普通最小二乘：log e_k ≈ log C - p log k

    Args:
        k: 迭代序号
        e: 对应的正误差序列
        window: 拟合窗口 (k_lo, k_hi)，闭区间
        max_points: 窗口内对数均匀抽样的最大点数
        floor: 低于该值的点视为浮点噪声底，不参与拟合

    Returns:
        RateFit: 指数 p、常数 C、r²

    Raises:
        ValueError: 窗口内没有点、存在非正值（报告对应的 k）或有效点少于3个
    """
    k = np.asarray(k, dtype=float)
    e = np.asarray(e, dtype=float)
    k_lo, k_hi = int(window[0]), int(window[1])
    if k_lo < 1 or k_hi <= k_lo:
        raise ValueError(f"拟合窗口非法: ({k_lo}, {k_hi})，需要 1 ≤ k_lo < k_hi")
    mask = (k >= k_lo) & (k <= k_hi)
    if not np.any(mask):
        raise ValueError(f"窗口 [{k_lo}, {k_hi}] 内没有数据点")
    kw, ew = k[mask], e[mask]
    bad = np.flatnonzero(~(ew > 0.0))
    if bad.size:
        raise ValueError(f"k={int(kw[bad[0]])} 处的值 {ew[bad[0]]!r} 非正，无法取对数")

    idx = _log_spaced_indices(kw, max_points)
    kw, ew = kw[idx], ew[idx]
    keep = ew >= floor
    kw, ew = kw[keep], ew[keep]
    if len(kw) < 3:
        raise ValueError(f"窗口 [{k_lo}, {k_hi}] 内有效点只有 {len(kw)} 个，至少需要3个")

    lk, le = np.log(kw), np.log(ew)
    slope, intercept = np.polyfit(lk, le, 1)
    resid = le - (slope * lk + intercept)
    ss_res = float(np.dot(resid, resid))
    centered = le - le.mean()
    ss_tot = float(np.dot(centered, centered))
    r_squared = 1.0 if ss_tot == 0.0 else min(1.0, max(0.0, 1.0 - ss_res / ss_tot))
    return RateFit(
        exponent=float(-slope),
        constant=float(np.exp(intercept)),
        r_squared=r_squared,
        window=(k_lo, k_hi),
        points_used=int(len(kw)),
    )


def check_bound(
    k: Sequence[float],
    e: Sequence[float],
    p: float,
    anchor_k: int,
    tolerance: float = 0.0,
    C: Optional[float] = None,
) -> BoundReport:
    """
    检查 e_k ≤ (1 + tolerance) · C / k^p 对所有 k > anchor_k 成立

    两种模式：
    - 显式 C（如 L·d²/2）
    - C 为 None：在锚点标定 C = e_anchor · anchor^p，用于常数未给出的 O(k^{-p}) 论断
    """
    k = np.asarray(k, dtype=float)
    e = np.asarray(e, dtype=float)
    if C is None:
        at = np.flatnonzero(k == anchor_k)
        if at.size == 0:
            raise ValueError(f"序列中没有锚点 k={anchor_k}")
        e_anchor = float(e[at[0]])
        if not e_anchor > 0.0:
            raise ValueError(f"锚点 k={anchor_k} 处的值 {e_anchor!r} 非正，无法标定常数")
        C = e_anchor * float(anchor_k) ** p
        source = "anchor"
    else:
        if not C > 0.0:
            raise ValueError(f"常数 C 必须为正，当前 {C!r}")
        source = "explicit"

    mask = k > anchor_k
    if not np.any(mask):
        raise ValueError(f"k > {anchor_k} 的窗口为空")
    kw, ew = k[mask], e[mask]
    if np.any(np.isnan(ew)):
        bad = int(kw[np.flatnonzero(np.isnan(ew))[0]])
        raise ValueError(f"k={bad} 处的值为 NaN")

    scaled = ew * np.power(kw, p)
    worst = int(np.argmax(scaled))
    satisfied = bool(np.all(scaled <= C * (1.0 + tolerance)))
    return BoundReport(
        satisfied=satisfied,
        worst_k=int(kw[worst]),
        worst_ratio=float(scaled[worst] / C),
        exponent=float(p),
        constant=float(C),
        anchor_k=int(anchor_k),
        constant_source=source,
        tolerance=float(tolerance),
        checked=int(len(kw)),
    )


def descent_violations(trace: Trace, lipschitz: float, tol: float = 1e-10) -> List[int]:
    """
    逐步检查充分下降不等式 f(x_{k+1}) ≤ f(x_k) - ‖∇_g f(x_k)‖² / (2L) + tol

    Returns:
        List[int]: 不满足不等式的 k
    """
    f, g = trace.f_value, trace.grad_norm
    lhs = f[1:]
    rhs = f[:-1] - g[:-1] ** 2 / (2.0 * lipschitz) + tol
    return [int(trace.k[i]) for i in np.flatnonzero(lhs > rhs)]


def gradient_gap_ratio_series(trace: Trace) -> np.ndarray:
    """
    诊断序列 ‖∇_g f(x_k)‖ · d(x_k, x*) / gap_k，gap 非正处为 NaN

    临界点附近该比值可以远小于 1，只作报告。
    """
    if trace.gap is None or trace.dist_to_opt is None:
        raise ValueError("需要已知最小点的轨迹")
    out = np.full(len(trace), np.nan)
    pos = trace.gap > 0.0
    out[pos] = trace.grad_norm[pos] * trace.dist_to_opt[pos] / trace.gap[pos]
    return out


def gap_is_consistent(trace: Trace) -> bool:
    """已知最小点时间隙不应明显为负"""
    if trace.gap is None:
        return True
    return bool(np.all(trace.gap[~np.isnan(trace.gap)] >= GAP_FLOOR))
