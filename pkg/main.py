"""
easyDescent主程序入口

子命令：
1. run：按实验配置运行（支持多种子扫描），写出轨迹CSV与 summary.json
2. fit：对轨迹CSV的某一列做对数坐标幂律拟合
3. check-bound：检查轨迹是否满足 e_k ≤ C / k^p
4. gradcheck：解析梯度与中心差分梯度比较

退出码：0 成功，1 检查未通过，2 配置错误，3 数值中止。JSON 结果写到标准输出，日志写到标准错误。
"""

import argparse
import json
import os
import sys

import numpy as np
from pydantic import BaseModel, ValidationError

from config import get_app_root, get_config
from core.analysis import check_bound, fit_rate
from core.base_model import GradCheckReport
from core.constants import EXIT_CHECK_FAILED, EXIT_CONFIG_ERROR, EXIT_NUMERICAL_ABORT, EXIT_OK
from core.errors import ConfigError, DescentError, NumericalAbort
from core.experiment_file import ExperimentFile, parse_matrix, parse_vector, parse_window
from core.objective import euclidean_gradient, finite_difference_gradient, gradient_relative_error
from core.plugin_manager import ObjectiveRegistry
from core.runner import run_experiment
from core.trace_io import read_trace


def _emit(model: BaseModel) -> None:
    print(json.dumps(model.model_dump(mode="json"), ensure_ascii=False, indent=2))


def _registry(config) -> ObjectiveRegistry:
    plugin_dir = config.plugin_dir
    if not os.path.isabs(plugin_dir):
        plugin_dir = os.path.join(get_app_root(), plugin_dir)
    return ObjectiveRegistry(plugin_dir)


def cmd_run(args, config, logger) -> int:
    """运行实验配置"""
    exp = ExperimentFile.load(args.config)
    overrides = list(args.override or [])
    if args.seed is not None:
        overrides.append(f"run.seeds={args.seed}")
    if args.seeds is not None:
        overrides.append(f"run.seeds={args.seeds}")
    if overrides:
        exp = exp.with_overrides(overrides)

    defaults = config.get_run_defaults()
    out_dir = args.out or defaults["output_dir"]
    logger.info(f"实验配置: {args.config}，输出目录: {out_dir}")
    report = run_experiment(
        exp,
        out_dir,
        _registry(config),
        threads=defaults["threads"],
        with_x=args.with_x or defaults["with_x"],
        analysis=config.get_analysis_config(),
    )
    _emit(report)
    return EXIT_OK


def cmd_fit(args, config, logger) -> int:
    """对轨迹CSV拟合 e_k ≈ C k^{-p}"""
    trace = read_trace(args.trace)
    window = parse_window(args.window, key="--window")
    analysis = config.get_analysis_config()
    try:
        k, e = trace.series(args.column)
    except KeyError as e:
        raise ConfigError(str(e), key="--column")
    result = fit_rate(k, e, window, max_points=analysis["fit_max_points"], floor=analysis["fit_floor"])
    logger.info(f"拟合结果: p={result.exponent:.6g}, C={result.constant:.6g}, r²={result.r_squared}")
    _emit(result)
    return EXIT_OK


def cmd_check_bound(args, config, logger) -> int:
    """检查 e_k ≤ (1 + tol) · C / k^p，满足时退出码为 0，否则为 1"""
    trace = read_trace(args.trace)
    analysis = config.get_analysis_config()
    try:
        k, e = trace.series(args.column)
    except KeyError as e:
        raise ConfigError(str(e), key="--column")
    if args.C is not None:
        anchor = args.anchor if args.anchor is not None else 0
    else:
        anchor = args.anchor if args.anchor is not None else analysis["anchor"]
    tol = args.tol if args.tol is not None else analysis["bound_tol"]
    report = check_bound(k, e, args.p, anchor, tolerance=tol, C=args.C)
    _emit(report)
    if report.satisfied:
        logger.info(f"✓ 界成立（worst_ratio={report.worst_ratio:.6g}）")
        return EXIT_OK
    logger.warning(f"✗ 界不成立：k={report.worst_k} 处 e_k·k^p/C = {report.worst_ratio:.6g}")
    return EXIT_CHECK_FAILED


def cmd_gradcheck(args, config, logger) -> int:
    """在随机点上比较解析梯度与中心差分梯度，最大相对误差不超过容差时退出码为 0"""
    registry = _registry(config)
    if args.config:
        objective = ExperimentFile.load(args.config).build_objective(registry)
    else:
        A = parse_matrix(args.A, "--A") if args.A else None
        b = parse_vector(args.b, "--b") if args.b else None
        try:
            objective = registry.create(args.objective, dim=args.dim, A=A, b=b)
        except ConfigError:
            raise
        except ValueError as e:
            raise ConfigError(str(e), key="--objective")

    if args.samples < 1:
        raise ConfigError(f"采样点数必须至少为 1，当前 {args.samples}", key="--samples")

    analysis = config.get_analysis_config()
    h = args.h if args.h is not None else analysis["fd_step"]
    tol = args.tol if args.tol is not None else analysis["gradcheck_tol"]
    manifold = objective.default_manifold()
    rng = np.random.default_rng(args.seed)

    worst, worst_point = -1.0, None
    for _ in range(args.samples):
        x = manifold._random_point(rng)
        analytic = euclidean_gradient(objective, x)
        if args.perturb:
            analytic = analytic + args.perturb
        err = gradient_relative_error(analytic, finite_difference_gradient(objective, x, h))
        if err > worst:
            worst, worst_point = err, x

    report = GradCheckReport(
        objective=objective.name,
        samples=args.samples,
        seed=args.seed,
        step=h,
        max_relative_error=worst,
        worst_point=[float(v) for v in worst_point],
        tolerance=tol,
        passed=worst <= tol,
    )
    _emit(report)
    mark = "✓" if report.passed else "✗"
    logger.info(f"{mark} {objective.name} 梯度检查：最大相对误差 {worst:.3e}（容差 {tol:g}）")
    return EXIT_OK if report.passed else EXIT_CHECK_FAILED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="easyDescent",
        description="easyDescent - 流形上的最速下降、动量下降与随机下降实验",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
示例:
  python main.py run --config example/sphere_height.cfg --out results/sphere
  python main.py run --config example/sgd_montecarlo.cfg --seeds 1..100
  python main.py run --config results/sphere/summary.json --out results/rerun
  python main.py fit results/sphere/trace_seed0.csv --window 100:10000
  python main.py check-bound results/sphere/trace_seed0.csv --p 1 --C 4.934802200544679
  python main.py gradcheck --objective quadratic --A "4 1; 1 3" --b "1 2" --samples 100
        """
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="运行实验配置")
    p_run.add_argument("--config", required=True, help="实验配置文件（或之前输出的 summary.json）")
    p_run.add_argument("--out", help="输出目录（默认: OUTPUT_DIR）")
    seeds = p_run.add_mutually_exclusive_group()
    seeds.add_argument("--seed", type=int, help="只运行单个种子")
    seeds.add_argument("--seeds", help="种子范围 A..B")
    p_run.add_argument("--override", action="append", metavar="KEY=VALUE", help="覆盖配置项（可重复）")
    p_run.add_argument("--with-x", action="store_true", help="输出坐标列（需要 run.record_x = true）与随机下降的噪声列")
    p_run.set_defaults(handler=cmd_run)

    p_fit = sub.add_parser("fit", help="对轨迹CSV做幂律拟合")
    p_fit.add_argument("trace", help="轨迹CSV文件")
    p_fit.add_argument("--window", required=True, help="拟合窗口 k_lo:k_hi")
    p_fit.add_argument("--column", default="gap", help="拟合的列（默认: gap）")
    p_fit.set_defaults(handler=cmd_fit)

    p_bound = sub.add_parser("check-bound", help="检查收敛界 e_k ≤ C / k^p")
    p_bound.add_argument("trace", help="轨迹CSV文件")
    p_bound.add_argument("--p", type=float, required=True, help="指数 p")
    p_bound.add_argument("--C", type=float, help="显式常数 C")
    p_bound.add_argument("--anchor", type=int, help="锚点 k；未给出 C 时在锚点标定 C")
    p_bound.add_argument("--tol", type=float, help="相对容差（默认: BOUND_TOL）")
    p_bound.add_argument("--column", default="gap", help="检查的列（默认: gap）")
    p_bound.set_defaults(handler=cmd_check_bound)

    p_grad = sub.add_parser("gradcheck", help="解析梯度与中心差分梯度比较")
    p_grad.add_argument("--objective", default="quadratic", help="目标函数名称")
    p_grad.add_argument("--config", help="从实验配置读取目标函数")
    p_grad.add_argument("--dim", type=int, help="维数")
    p_grad.add_argument("--A", help="矩阵 A，例如 \"4 1; 1 3\"")
    p_grad.add_argument("--b", help="向量 b，例如 \"1 2\"")
    p_grad.add_argument("--samples", type=int, default=100, help="随机点数（默认: 100）")
    p_grad.add_argument("--seed", type=int, default=0, help="随机种子（默认: 0）")
    p_grad.add_argument("--h", type=float, help="差分步长（默认: FD_STEP）")
    p_grad.add_argument("--tol", type=float, help="相对误差容差（默认: GRADCHECK_TOL）")
    p_grad.add_argument("--perturb", type=float, default=0.0, help=argparse.SUPPRESS)
    p_grad.set_defaults(handler=cmd_gradcheck)
    return parser


def main(argv=None) -> int:
    """主函数"""
    parser = build_parser()
    args = parser.parse_args(argv)

    config = get_config()
    logger = config.setup_logging()
    logger.debug(f"启动 {config.settings.APP_NAME} v{config.settings.APP_VERSION}")
    if config.settings.DEBUG:
        logger.debug(f"配置信息:\n{config}")

    try:
        return args.handler(args, config, logger)
    except NumericalAbort as e:
        logger.error(f"✗ 数值中止: {e}")
        return EXIT_NUMERICAL_ABORT
    except ValidationError as e:
        logger.error(f"✗ 配置错误: {e}")
        return EXIT_CONFIG_ERROR
    except (DescentError, ValueError, OSError) as e:
        logger.error(f"✗ 配置错误: {e}")
        return EXIT_CONFIG_ERROR


if __name__ == "__main__":
    sys.exit(main())
