"""ED-network simulation with ambulance diversion and bi-objective staffing search."""

from importlib import resources
from pathlib import Path

__version__ = "0.1.0"

_BUILTIN_CONFIGS = {
    "case-study": "case_study.json",
    "case-study-counts": "case_study_count_rates.json",
}


def builtin_config_path(name: str) -> Path | None:
    """Path of a packaged example configuration, or None for unknown names."""
    fname = _BUILTIN_CONFIGS.get(name)
    if fname is None:
        return None
    return Path(resources.files("ednetsim").joinpath("data", fname))


def case_study_path() -> Path:
    """The six-ED case-study configuration shipped with the package."""
    return builtin_config_path("case-study")


from .model import (  # noqa: E402
    ADPolicy,
    Allocation,
    ArrivalModel,
    ConfigError,
    DistributionSpec,
    EDConfig,
    NetworkConfig,
    NO_DIVERSION,
    RunDesign,
    SeverityTag,
    SolverSettings,
    StudyConfig,
    TimeSlot,
    Violation,
    check_allocation,
    f2,
    load_study,
    validate_config,
    validate_study,
)
from .engine import ReplicationStats, run_population, run_replication  # noqa: E402
from .optimize import (  # noqa: E402
    Evaluation,
    ParetoArchive,
    SimEvaluator,
    compare_policies,
    dominates,
    eval_point,
    hypervolume_2d,
    pareto_search,
    solve,
)
from .calibrate import DTDTTargets, calibrate_ed, calibrate_network  # noqa: E402
