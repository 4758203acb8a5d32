"""Standardized radiomic features of a masked region (186 features, 10 families).

Morphological features are deliberately absent: reference and synthetic
volumes share one mask, so shape carries no fidelity signal.
"""

from .features import (FAMILIES, FAMILY_COUNTS, FEATURE_IDS, N_FEATURES, FeatureVector,
                       extract_all, family_of)
from .firstorder import (intensity_histogram_features, intensity_stats_features,
                         ivh_features, local_intensity_features)
from .roi import (DEFAULT_N_BINS, DiscretizedRoi, EmptyRoiError, Roi, bin_values, build_roi,
                  discretize_fbn)
from .texture import (cooccurrence_features, neighbourhood_features, runlength_features,
                      zone_features)

__all__ = [
    "FAMILIES", "FAMILY_COUNTS", "FEATURE_IDS", "N_FEATURES", "FeatureVector", "extract_all",
    "family_of", "intensity_histogram_features", "intensity_stats_features", "ivh_features",
    "local_intensity_features", "DEFAULT_N_BINS", "DiscretizedRoi", "EmptyRoiError", "Roi",
    "bin_values", "build_roi", "discretize_fbn", "cooccurrence_features",
    "neighbourhood_features", "runlength_features", "zone_features",
]
