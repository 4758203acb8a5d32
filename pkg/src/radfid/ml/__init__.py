"""Outcome classification: PCA, random forest, AUC/ROC and repeated evaluation."""

from .evaluate import (ClassificationReport, Dataset, EvalConfig, RocPoint, auc_roc,
                       auc_score, evaluate, roc_area, roc_curve, stratified_split)
from .forest import ForestModel, ForestParams, Tree, forest_fit, forest_predict_proba
from .pca import PcaModel, pca_fit, pca_inverse_transform, pca_transform

__all__ = [
    "ClassificationReport", "Dataset", "EvalConfig", "RocPoint", "auc_roc", "auc_score",
    "evaluate", "roc_area", "roc_curve", "stratified_split", "ForestModel", "ForestParams",
    "Tree", "forest_fit", "forest_predict_proba", "PcaModel", "pca_fit",
    "pca_inverse_transform", "pca_transform",
]
