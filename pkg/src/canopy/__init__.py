"""Object-based orthomosaic analysis toolkit.

Segments RGB orthomosaics into superpixels, computes a spectral + textural
feature bank per region, trains weighted multiclass models from labelled
crown polygons, and extends predictions to landscape class maps and
per-cell dominance grids.
"""

__version__ = "0.1.0"

from canopy.raster import GeoTransform, Raster

__all__ = ["GeoTransform", "Raster", "__version__"]
