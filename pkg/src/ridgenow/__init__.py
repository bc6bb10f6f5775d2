"""Targeted preselection + ridge/GCV nowcasting, weekly bridge models, and a
Monte Carlo engine that checks the methodology's statistical behaviour."""

from .bridge import (
    NowcastRun,
    ReleaseCalendar,
    VariantComparison,
    WeekDesign,
    build_week_design,
    calendar_from_panel,
    compare_variants,
    make_synthetic_panel,
    nowcast_recursive,
    preset_calendar,
)
from .dataset import (
    Observation,
    Panel,
    PanelSchema,
    Series,
    Transform,
    apply_transform,
    load_panel,
    parse_quarter,
    quarter_label,
    save_panel,
)
from .mc import (
    DgpConfig,
    McReport,
    conditional_mspe,
    population_moment_matrix,
    run_mc,
    simulate_dgp,
    simulation_table,
    sure_screening_sweep,
    scaled_alpha_grid,
    verify_error_scaling,
    verify_gcv_oos,
)
from .ridge import (
    AlphaGrid,
    RidgeFit,
    gcv,
    gcv_minimize,
    restricted_eigenvalues,
    ridge_after_selection,
    ridge_solve,
)
from .screen import ScreenConfig, ScreenResult, screen, tstat_single

__version__ = "0.1.0"

__all__ = [
    "AlphaGrid",
    "DgpConfig",
    "McReport",
    "NowcastRun",
    "Observation",
    "Panel",
    "PanelSchema",
    "ReleaseCalendar",
    "RidgeFit",
    "ScreenConfig",
    "ScreenResult",
    "Series",
    "Transform",
    "VariantComparison",
    "WeekDesign",
    "apply_transform",
    "build_week_design",
    "calendar_from_panel",
    "compare_variants",
    "conditional_mspe",
    "gcv",
    "gcv_minimize",
    "load_panel",
    "make_synthetic_panel",
    "nowcast_recursive",
    "parse_quarter",
    "population_moment_matrix",
    "preset_calendar",
    "quarter_label",
    "restricted_eigenvalues",
    "ridge_after_selection",
    "ridge_solve",
    "run_mc",
    "save_panel",
    "screen",
    "simulate_dgp",
    "simulation_table",
    "sure_screening_sweep",
    "scaled_alpha_grid",
    "tstat_single",
    "verify_error_scaling",
    "verify_gcv_oos",
]
