import numpy as np
import pytest

from core.errors import ConfigError
from core.manifold import ManifoldPoint, Sphere
from core.objective import HalfSquare, Objective, SphereHeight
from core.optimize import FixedStep, RunConfig, ScheduleSpec, run_rgd
from core.plugin_manager import BUILTIN_OBJECTIVES, ObjectiveRegistry, filename_to_classname

RAYLEIGH_A = [[2.0, 1.0, 0.0], [1.0, 3.0, 1.0], [0.0, 1.0, 4.0]]


def test_filename_to_classname():
    assert filename_to_classname("rayleigh_quotient.py") == "RayleighQuotient"
    assert filename_to_classname("half_square") == "HalfSquare"


def test_builtins_without_plugin_dir():
    registry = ObjectiveRegistry()
    assert registry.names() == sorted(BUILTIN_OBJECTIVES)
    assert isinstance(registry.create("sphere_height"), SphereHeight)
    assert registry.create("half_square", dim=4) == HalfSquare(n=4)
    with pytest.raises(ConfigError) as info:
        registry.get("rosenbrock")
    assert info.value.key == "objective.kind"


def test_missing_plugin_dir(tmp_path):
    assert ObjectiveRegistry(str(tmp_path / "nowhere")).names() == sorted(BUILTIN_OBJECTIVES)


def test_rayleigh_plugin(registry):
    assert "rayleigh_quotient" in registry
    f = registry.create("rayleigh_quotient", A=RAYLEIGH_A)
    assert isinstance(f, Objective)
    assert f.default_manifold() == Sphere(ambient_dim=3)
    v = f.minimizer_coords()
    lam = np.linalg.eigvalsh(np.array(RAYLEIGH_A))[0]
    np.testing.assert_allclose(np.array(RAYLEIGH_A) @ v, lam * v, atol=1e-12)
    assert f.optimal_value == pytest.approx(lam / 2, abs=1e-12)
    with pytest.raises(ValueError):
        registry.create("rayleigh_quotient")


def test_rayleigh_descent_reaches_smallest_eigenvalue(registry):
    f = registry.create("rayleigh_quotient", A=RAYLEIGH_A)
    m = f.default_manifold()
    x0 = ManifoldPoint(manifold=m, coords=np.ones(3) / np.sqrt(3.0))
    cfg = RunConfig(objective=f, manifold=m, x0=x0, schedule=ScheduleSpec(alpha=FixedStep(value=0.2)), max_iters=500)
    trace = run_rgd(cfg)
    assert trace.gap[-1] <= 1e-10


def test_plugin_loading_rules(tmp_path):
    (tmp_path / "shifted_square.py").write_text(
        "import numpy as np\n"
        "from core.objective import Objective\n"
        "class ShiftedSquare(Objective):\n"
        "    @property\n"
        "    def dim(self):\n"
        "        return 1\n"
        "    def value(self, x):\n"
        "        return float(0.5 * (x[0] - 1.0) ** 2)\n"
        "    def gradient(self, x):\n"
        "        return np.array([x[0] - 1.0])\n",
        encoding="utf-8",
    )
    (tmp_path / "not_objective.py").write_text("class NotObjective:\n    pass\n", encoding="utf-8")
    (tmp_path / "broken.py").write_text("raise RuntimeError('boom')\n", encoding="utf-8")
    (tmp_path / "quadratic.py").write_text(
        "from core.objective import Objective\nclass Quadratic(Objective):\n    pass\n", encoding="utf-8"
    )
    registry = ObjectiveRegistry(str(tmp_path))
    assert "shifted_square" in registry
    assert "not_objective" not in registry
    assert "broken" not in registry
    assert registry.get("quadratic") is BUILTIN_OBJECTIVES["quadratic"]
    assert registry.create("shifted_square").value(np.array([3.0])) == 2.0

    (tmp_path / "shifted_square.py").unlink()
    assert registry.reload_plugins() == 0
    assert "shifted_square" not in registry
