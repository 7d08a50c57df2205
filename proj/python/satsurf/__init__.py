"""Multi-view satellite surface reconstruction.

Python bindings over the C++ core: RPC cameras, the hash-encoded SDF field,
volume rendering, depth fusion, surface extraction and DSM metrics. The
complete pipeline is available through :func:`run_cli`.
"""

from satsurf._core import (  # noqa: F401
    Field,
    FieldConfig,
    FitForm,
    Ray,
    RpcModel,
    RuntimeFailure,
    SceneBounds,
    ValidationError,
    alpha_from_sdf,
    chamfer,
    color_loss,
    composite,
    delta_pred,
    depth_loss,
    dsm_error_stats,
    eikonal_loss,
    embed_frequency,
    fit_scale_offset,
    localize,
    make_ray,
    marching_cubes,
    normal_loss,
    normals_from_depth,
    project,
    rasterize_dsm,
    run_cli,
    schedule_lambda,
)

__all__ = [
    "Field",
    "FieldConfig",
    "FitForm",
    "Ray",
    "RpcModel",
    "RuntimeFailure",
    "SceneBounds",
    "ValidationError",
    "alpha_from_sdf",
    "chamfer",
    "color_loss",
    "composite",
    "delta_pred",
    "depth_loss",
    "dsm_error_stats",
    "eikonal_loss",
    "embed_frequency",
    "fit_scale_offset",
    "localize",
    "make_ray",
    "marching_cubes",
    "normal_loss",
    "normals_from_depth",
    "project",
    "rasterize_dsm",
    "run_cli",
    "schedule_lambda",
]
