"""
实验执行：按变体、按种子运行，写出轨迹CSV与 summary.json

多种子扫描在线程池中执行（每个任务一个种子，互不共享可变状态），
随机下降的多种子扫描改用 run_sgd_batch 同步推进；
文件名只由变体和种子决定，summary.json 最后写出，因此输出与执行顺序无关。
"""

from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, Dict, List, Optional, Union
import json
import logging
import time

from .analysis import Trace, check_bound, fit_rate, gap_is_consistent, mean_trace
from .base_model import RunSummary, SummaryReport
from .constants import app_name, __VERSION__, SUMMARY_FORMAT_VERSION
from .errors import NumericalAbort
from .experiment_file import ExperimentFile
from .optimize import RunConfig, run, run_sgd_batch, validate_schedule
from .plugin_manager import ObjectiveRegistry
from .trace_io import write_trace

logger = logging.getLogger(app_name)

DEFAULT_LABEL = "trace"


def csv_name(label: str, seed: int) -> str:
    return f"{label}_seed{seed}.csv"


def _run_seeds(cfgs: List[RunConfig], method: str, threads: int) -> List[Trace]:
    seeds = [c.seed for c in cfgs]
    if method == "sgd" and len(cfgs) > 1 and cfgs[0].noise_override is None:
        return run_sgd_batch(cfgs[0], seeds)
    if len(cfgs) == 1 or threads <= 1:
        return [run(c, method) for c in cfgs]
    with ThreadPoolExecutor(max_workers=min(threads, len(cfgs))) as executor:
        return list(executor.map(lambda c: run(c, method), cfgs))


def _summarize(label: str, trace: Trace, csv_file: str) -> RunSummary:
    final = trace.final
    return RunSummary(
        variant=label,
        seed=trace.meta.seed,
        csv_file=csv_file,
        iterations=trace.iterations,
        final_f=final.f_value,
        final_gap=final.gap,
        final_grad_norm=final.grad_norm,
        aborted_at=trace.aborted_at,
        abort_reason=trace.abort_reason,
    )


def run_experiment(
    exp: ExperimentFile,
    out_dir: Union[str, Path],
    registry: ObjectiveRegistry,
    threads: int = 4,
    with_x: bool = False,
    analysis: Optional[Dict[str, Any]] = None,
) -> SummaryReport:
    """
    执行一个实验配置

    Args:
        exp: 已应用命令行覆盖的实验配置
        out_dir: 输出目录
        registry: 目标函数注册表
        threads: 多种子扫描的最大并发数
        with_x: 是否输出坐标列与噪声列（坐标列需要轨迹记录了坐标）
        analysis: 分析层默认参数（锚点、容差、拟合采样）

    Returns:
        SummaryReport: 同时写入 out_dir/summary.json

    Raises:
        NumericalAbort: 有运行出现非有限值（轨迹与 summary 仍会写出）
    """
    analysis = analysis or {}
    start = time.perf_counter()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    method = exp.method
    seeds = exp.seeds()
    report = SummaryReport(
        format_version=SUMMARY_FORMAT_VERSION,
        app_version=__VERSION__,
        config_text=exp.to_text(),
        config_path=exp.path,
        method=method,
        seeds=seeds,
        wall_clock_seconds=0.0,
    )
    aborted: List[Trace] = []

    for variant in exp.variant_names():
        label = variant or DEFAULT_LABEL
        cfgs = [exp.build_run_config(registry, variant, seed) for seed in seeds]
        report.schedule_reports[label] = validate_schedule(cfgs[0].schedule)
        logger.info(f"开始运行 {label}: 方法 {method}，{len(seeds)} 个种子，最多 {cfgs[0].max_iters} 步")

        traces = _run_seeds(cfgs, method, threads)
        extra_columns = with_x or cfgs[0].record_x
        for trace in traces:
            name = csv_name(label, trace.meta.seed)
            write_trace(trace, out_dir / name, with_x=extra_columns and trace.x is not None, with_xi=extra_columns)
            report.runs.append(_summarize(label, trace, name))
            if trace.aborted:
                aborted.append(trace)
                report.notes.append(f"{label} seed={trace.meta.seed}: {trace.abort_reason}")
            elif not gap_is_consistent(trace):
                report.notes.append(f"{label} seed={trace.meta.seed}: 间隙出现明显负值，最小点可能不正确")

        if any(t.aborted for t in traces):
            continue
        target = traces[0]
        if len(traces) > 1:
            target = mean_trace(traces)
            write_trace(target, out_dir / f"{label}_mean.csv")
        _analyse(exp, variant, label, target, report, analysis)

    report.wall_clock_seconds = time.perf_counter() - start
    summary_path = out_dir / "summary.json"
    summary_path.write_text(
        json.dumps(report.model_dump(mode="json"), ensure_ascii=False, indent=2) + "\n",
        encoding="utf-8",
    )
    if aborted:
        first = aborted[0]
        raise NumericalAbort(f"seed={first.meta.seed}: {first.abort_reason}（结果已写入 {out_dir}）", k=first.aborted_at)
    logger.info(f"✓ 实验完成，结果写入 {out_dir}（{report.wall_clock_seconds:.2f} 秒）")
    return report


def _analyse(exp: ExperimentFile, variant: Optional[str], label: str, trace: Trace,
             report: SummaryReport, analysis: Dict[str, Any]) -> None:
    fit = exp.fit_settings(variant)
    if fit is not None:
        try:
            k, e = trace.series(fit["column"])
            report.rate_fits[label] = fit_rate(
                k, e, fit["window"],
                max_points=analysis.get("fit_max_points", 200),
                floor=analysis.get("fit_floor", 1e-15),
            )
        except (KeyError, ValueError) as err:
            report.notes.append(f"{label}: 拟合失败：{err}")

    bound = exp.bound_settings(variant)
    if bound is not None:
        anchor = bound["anchor"]
        if anchor is None:
            anchor = 0 if bound["C"] is not None else analysis.get("anchor", 10)
        tol = bound["tol"] if bound["tol"] is not None else analysis.get("bound_tol", 0.0)
        try:
            k, e = trace.series(bound["column"])
            result = check_bound(k, e, bound["p"], anchor, tolerance=tol, C=bound["C"])
            report.bound_reports[label] = result
            mark = "✓" if result.satisfied else "✗"
            logger.info(f"{mark} {label} 界检查: worst_k={result.worst_k}, worst_ratio={result.worst_ratio:.6g}")
        except (KeyError, ValueError) as err:
            report.notes.append(f"{label}: 界检查失败：{err}")
