"""Spectral graph filters, the MSGS multi-scale signed-attention model and
its comparators, with a small autodiff engine and experiment drivers."""

from .datagen import Dataset, SbmConfig, generate_sbm, load_dataset, split
from .graph import Graph, LaplacianKind, PropagationKind, build_graph, laplacian, propagation_matrix
from .models import Ablation, ModelParams, ModelSpec, init_params
from .spectral import eig_sym, response_closed_form
from .trainer import TrainConfig, evaluate, train

__all__ = [
    "Ablation", "Dataset", "Graph", "LaplacianKind", "ModelParams", "ModelSpec",
    "PropagationKind", "SbmConfig", "TrainConfig", "build_graph", "eig_sym", "evaluate",
    "generate_sbm", "init_params", "laplacian", "load_dataset", "propagation_matrix",
    "response_closed_form", "split", "train",
]
