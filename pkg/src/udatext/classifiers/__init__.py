from .gridsearch import DEFAULT_GRIDS, TRAINERS, GridSpec, grid_search_cv, stratified_folds
from .linear import (FeatureMatrix, LinearModel, logreg_loss_grad, predict_proba, softmax,
                     svm_loss_grad, train_logreg, train_svm, weighted_xent_grad)
from .persist import class_scores, load_model, model_from_json, model_to_json, rank_classes, save_model
from .trees import TreeEnsembleModel, train_gradient_boost, train_random_forest

__all__ = [
    "DEFAULT_GRIDS", "TRAINERS", "GridSpec", "grid_search_cv", "stratified_folds",
    "FeatureMatrix", "LinearModel", "logreg_loss_grad", "predict_proba", "softmax",
    "svm_loss_grad", "train_logreg", "train_svm", "weighted_xent_grad",
    "class_scores", "load_model", "model_from_json", "model_to_json", "rank_classes", "save_model",
    "TreeEnsembleModel", "train_gradient_boost", "train_random_forest",
]
