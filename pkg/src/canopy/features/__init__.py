from canopy.features.bank import (
    FeatureConfig,
    FeatureTable,
    build_manifest,
    compute_region_features,
    extract_features,
)
from canopy.features.indices import MS_INDEX_NAMES, RGB_INDEX_NAMES, vegetation_indices
from canopy.features.spectral import (
    brightness_filter_top50,
    quantize_levels,
    spectral_stats,
)
from canopy.features.texture import (
    autocorrelation_features,
    glcm_features,
    laws_features,
    lbp_histogram,
)

__all__ = [
    "FeatureConfig",
    "FeatureTable",
    "MS_INDEX_NAMES",
    "RGB_INDEX_NAMES",
    "autocorrelation_features",
    "brightness_filter_top50",
    "build_manifest",
    "compute_region_features",
    "extract_features",
    "glcm_features",
    "laws_features",
    "lbp_histogram",
    "quantize_levels",
    "spectral_stats",
    "vegetation_indices",
]
