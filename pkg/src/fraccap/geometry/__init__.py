"""Planar domains and moving-planes geometry."""
from .domain import (
    AnnularDomain,
    DiskRegion,
    Domain2,
    HalfspaceFrame,
    SurfaceSamples,
)
from .io import read_domain, write_domain
from .measures import (
    RhoResult,
    exterior_parallel_surface,
    inner_parallel_domain,
    minkowski_sum_disk,
    parallel_surface_annular,
    rho_deviation,
    touching_ball_radii,
)
from .planes import (
    AnnularCritical,
    CaseFlags,
    CriticalCase,
    CriticalResult,
    DefectResult,
    ExtremalRadiiCheck,
    annular_critical_value,
    classify_critical,
    containment_margin,
    critical_scan,
    critical_value,
    extremal_radii_check,
    reflect,
    reflection_defect,
    reflection_defect_exact,
    set_critical_value,
    slab_measures,
)

__all__ = [name for name in dir() if not name.startswith("_")]
