"""
轨迹CSV读写

格式：表头 k,f_value,gap,grad_norm,alpha,beta,dist_to_opt，可选坐标列 x_0..x_{n-1}
与噪声列 xi_0..xi_{n-1}；浮点数 17 位有效数字，缺失值为空字段，LF 换行，行尾无分隔符。
"""

from pathlib import Path
from typing import Union
import io
import logging

import numpy as np
import pandas as pd

from .analysis import Trace, TraceMeta
from .constants import app_name
from .errors import ConfigError

logger = logging.getLogger(app_name)

BASE_COLUMNS = ["k", "f_value", "gap", "grad_norm", "alpha", "beta", "dist_to_opt"]
FLOAT_FORMAT = "%.17g"


def trace_to_frame(trace: Trace, with_x: bool = False, with_xi: bool = False) -> pd.DataFrame:
    n = len(trace)
    nan = np.full(n, np.nan)
    data = {
        "k": trace.k,
        "f_value": trace.f_value,
        "gap": nan if trace.gap is None else trace.gap,
        "grad_norm": trace.grad_norm,
        "alpha": trace.alpha,
        "beta": trace.beta,
        "dist_to_opt": nan if trace.dist_to_opt is None else trace.dist_to_opt,
    }
    if with_x:
        if trace.x is None:
            raise ValueError("轨迹未记录坐标，无法输出 x 列（运行时需要 run.record_x = true）")
        for i in range(trace.x.shape[1]):
            data[f"x_{i}"] = trace.x[:, i]
    if with_xi and trace.xi is not None:
        for i in range(trace.xi.shape[1]):
            col = np.array(trace.xi[:, i], dtype=float)
            col[0] = np.nan
            data[f"xi_{i}"] = col
    return pd.DataFrame(data)


def format_trace(trace: Trace, with_x: bool = False, with_xi: bool = False) -> str:
    """轨迹的CSV文本"""
    buf = io.StringIO()
    trace_to_frame(trace, with_x, with_xi).to_csv(
        buf, index=False, float_format=FLOAT_FORMAT, na_rep="", lineterminator="\n"
    )
    return buf.getvalue()


def write_trace(trace: Trace, path: Union[str, Path], with_x: bool = False, with_xi: bool = False) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(format_trace(trace, with_x, with_xi))
    logger.debug(f"轨迹已写入 {path}（{len(trace)} 行）")
    return path


def read_frame(path: Union[str, Path]) -> pd.DataFrame:
    """
    读取轨迹CSV并校验

    Raises:
        ConfigError: 文件不存在、缺少列、字段数不一致或存在非数值字段（报告行号，表头为第1行）
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"轨迹文件不存在: {path}", key="trace")
    try:
        df = pd.read_csv(path, dtype=str, keep_default_na=False)
    except pd.errors.ParserError as e:
        raise ConfigError(f"CSV格式错误: {e}", key=str(path))
    except pd.errors.EmptyDataError:
        raise ConfigError("CSV文件为空", key=str(path))

    missing = [c for c in BASE_COLUMNS if c not in df.columns]
    if missing:
        raise ConfigError(f"缺少列 {', '.join(missing)}", key=str(path))

    out = {}
    for col in df.columns:
        raw = df[col].str.strip()
        values = pd.to_numeric(raw.replace("", np.nan), errors="coerce")
        bad = values.isna() & (raw != "")
        if bad.any():
            row = int(np.flatnonzero(bad.to_numpy())[0]) + 2
            raise ConfigError(f"第 {row} 行的 {col} 字段 '{raw[bad].iloc[0]}' 不是数值", key=str(path))
        out[col] = values.astype(float)
    frame = pd.DataFrame(out)
    if frame["k"].isna().any():
        row = int(np.flatnonzero(frame["k"].isna().to_numpy())[0]) + 2
        raise ConfigError(f"第 {row} 行缺少 k", key=str(path))
    return frame


def read_trace(path: Union[str, Path]) -> Trace:
    """把轨迹CSV读回 Trace（元信息只保留文件名）"""
    frame = read_frame(path)
    k = frame["k"].to_numpy()
    if np.any(k != np.round(k)):
        raise ConfigError("k 列必须为整数", key=str(path))

    def optional(name):
        col = frame[name].to_numpy()
        return None if np.all(np.isnan(col)) else col

    x_cols = [c for c in frame.columns if c.startswith("x_")]
    xi_cols = [c for c in frame.columns if c.startswith("xi_")]
    meta = TraceMeta(
        method="file", seed=0, objective={}, manifold="", schedule="", step_rule="",
        max_iters=max(0, len(k) - 1), grad_tol=0.0, config_key=str(path),
    )
    try:
        return Trace(
            meta=meta,
            k=k.astype(np.int64),
            f_value=frame["f_value"].to_numpy(),
            grad_norm=frame["grad_norm"].to_numpy(),
            alpha=frame["alpha"].to_numpy(),
            beta=frame["beta"].to_numpy(),
            gap=optional("gap"),
            dist_to_opt=optional("dist_to_opt"),
            x=frame[x_cols].to_numpy() if x_cols else None,
            xi=np.nan_to_num(frame[xi_cols].to_numpy()) if xi_cols else None,
        )
    except ValueError as e:
        raise ConfigError(str(e), key=str(path))
