from canopy.pipeline.crowns import (
    CrownError,
    CrownPolygon,
    LabelScheme,
    RegionOverlap,
    assign_superpixel_labels,
    rasterize_polygons,
    read_crowns,
    write_crowns,
)
from canopy.pipeline.evaluate import (
    ConfusionMetrics,
    CvReport,
    confusion_metrics,
    cross_validate,
    merge_confusion,
    write_confusion_csv,
)
from canopy.pipeline.folds import FoldAssignment, audit_crown_leakage, make_folds
from canopy.pipeline.landscape import (
    MASKED_CODE,
    CoverSummary,
    DominanceGrid,
    cover_summary,
    dominance_grid,
    landscape_predict,
    percent_to_hectares,
    write_cover_csv,
    write_dominance_csv,
)
from canopy.pipeline.multiplex import (
    MultiplexReport,
    imagery_multiplex,
    split_crowns_75_25,
    subset_configs,
    write_multiplex_csv,
)

__all__ = [
    "MASKED_CODE",
    "ConfusionMetrics",
    "CoverSummary",
    "CrownError",
    "CrownPolygon",
    "CvReport",
    "DominanceGrid",
    "FoldAssignment",
    "LabelScheme",
    "MultiplexReport",
    "RegionOverlap",
    "assign_superpixel_labels",
    "audit_crown_leakage",
    "confusion_metrics",
    "cover_summary",
    "cross_validate",
    "dominance_grid",
    "imagery_multiplex",
    "landscape_predict",
    "make_folds",
    "merge_confusion",
    "percent_to_hectares",
    "rasterize_polygons",
    "read_crowns",
    "split_crowns_75_25",
    "subset_configs",
    "write_confusion_csv",
    "write_cover_csv",
    "write_crowns",
    "write_dominance_csv",
    "write_multiplex_csv",
]
