"""Service-cost ratio optimizer for collaborative adapter training at the edge.

The heavy lifting lives in the compiled extension; this package re-exports it.
"""

from ._core import (  # noqa: F401
    Allocation,
    CostBreakdown,
    Scenario,
    ScenarioConfig,
    SchemaError,
    Solution,
    __version__,
    adapter_param_count,
    brute_force_association,
    check_feasibility,
    evaluate,
    generate,
    initialize,
    link_rate,
    load_scenario,
    min_cost_assignment,
    path_loss_db,
    run,
    save_scenario,
    scr,
)

__all__ = [
    "Allocation",
    "CostBreakdown",
    "Scenario",
    "ScenarioConfig",
    "SchemaError",
    "Solution",
    "__version__",
    "adapter_param_count",
    "brute_force_association",
    "check_feasibility",
    "evaluate",
    "generate",
    "initialize",
    "link_rate",
    "load_scenario",
    "min_cost_assignment",
    "path_loss_db",
    "run",
    "save_scenario",
    "scr",
]
