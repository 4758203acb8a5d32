"""Radiomic fidelity of synthesized 3D volumes.

Image-quality metrics, 186 standardized radiomic features, per-feature
agreement between a reference cohort and synthesized cohorts, and a PCA plus
random-forest outcome classifier, with seeded phantoms for testing.
"""

from .fidelity import (CorrelationRecord, CorrelationTable, GroupAssignment, NetworkProfile,
                       assign_groups, band, correlate_cohorts, paired_t_test, spearman,
                       spearman_rho)
from .metrics import QualityReport, SsimConfig, mae, mse, psnr, quality_report, ssim3d
from .ml import (ClassificationReport, Dataset, EvalConfig, ForestModel, ForestParams, PcaModel,
                 auc_roc, evaluate, forest_fit, forest_predict_proba, pca_fit, pca_transform)
from .phantom import DegradeSpec, PhantomSpec, degrade, generate_cohort
from .preprocess import CropSpec, crop, minmax_normalize, resample, standardize
from .radiomics import FEATURE_IDS, FeatureVector, extract_all
from .tables import FeatureTable
from .volume import (CaseRecord, Manifest, Mask, Volume, read_manifest, read_mask, read_volume,
                     validate_pair, write_manifest, write_mask, write_volume)

__version__ = "0.1.0"

__all__ = [
    "CorrelationRecord", "CorrelationTable", "GroupAssignment", "NetworkProfile",
    "assign_groups", "band", "correlate_cohorts", "paired_t_test", "spearman", "spearman_rho",
    "QualityReport", "SsimConfig", "mae", "mse", "psnr", "quality_report", "ssim3d",
    "ClassificationReport", "Dataset", "EvalConfig", "ForestModel", "ForestParams", "PcaModel",
    "auc_roc", "evaluate", "forest_fit", "forest_predict_proba", "pca_fit", "pca_transform",
    "DegradeSpec", "PhantomSpec", "degrade", "generate_cohort", "CropSpec", "crop",
    "minmax_normalize", "resample", "standardize", "FEATURE_IDS", "FeatureVector", "extract_all",
    "FeatureTable", "CaseRecord", "Manifest", "Mask", "Volume", "read_manifest", "read_mask",
    "read_volume", "validate_pair", "write_manifest", "write_mask", "write_volume",
]
