app_name = "easyDescent"
__VERSION__ = "0.1.0"

# summary.json 格式版本，字段有破坏性变化时递增
SUMMARY_FORMAT_VERSION = 2

# 球面点的单位范数容差、切向量正交容差
POINT_NORM_TOL = 1e-12
TANGENT_TOL = 1e-10

# 动量比值分母的退化阈值
RATIO_EPS = 1e-15

# 非有限值中止、退出码
EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG_ERROR = 2
EXIT_NUMERICAL_ABORT = 3
