"""Graph neural networks for molecular property prediction.

SMILES in, trained models out: parsing and chemical perception, graph
construction and featurization, dataset splits, a small reverse-mode
autodiff engine with the segment kernels message passing needs, four graph
architectures plus a fingerprint baseline, and a training pipeline with a
command-line front end.
"""

from .canonical import canonical_smiles
from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .data import Dataset, load_csv_dataset
from .featurize import (
    FeatureConfig,
    atom_features,
    bond_features,
    default_atom_config,
    default_bond_config,
    encode_one_hot,
    morgan_fingerprint,
)
from .graphs import GraphBatch, MolGraph, batch_graphs, build_graph, unbatch_graphs
from .metrics import rmse, roc_auc_mean
from .models import ModelSpec, init_params, model_forward
from .molecule import (
    Atom,
    Bond,
    BondDirection,
    BondOrder,
    BondStereo,
    ChiralTag,
    Hybridization,
    Molecule,
    molecular_weight,
)
from .scaffold import murcko_scaffold
from .smiles import SmilesParseError, parse_smiles
from .split import SplitPlan, k_fold, split
from .training import (
    EarlyStopper,
    TrainConfig,
    evaluate,
    predict_scores,
    random_search,
    train_with_early_stopping,
)

__all__ = [
    "Atom",
    "Bond",
    "BondDirection",
    "BondOrder",
    "BondStereo",
    "Checkpoint",
    "ChiralTag",
    "Dataset",
    "EarlyStopper",
    "FeatureConfig",
    "GraphBatch",
    "Hybridization",
    "ModelSpec",
    "MolGraph",
    "Molecule",
    "SmilesParseError",
    "SplitPlan",
    "TrainConfig",
    "atom_features",
    "batch_graphs",
    "bond_features",
    "build_graph",
    "canonical_smiles",
    "default_atom_config",
    "default_bond_config",
    "encode_one_hot",
    "evaluate",
    "init_params",
    "k_fold",
    "load_checkpoint",
    "load_csv_dataset",
    "model_forward",
    "molecular_weight",
    "morgan_fingerprint",
    "murcko_scaffold",
    "parse_smiles",
    "predict_scores",
    "random_search",
    "rmse",
    "roc_auc_mean",
    "save_checkpoint",
    "split",
    "train_with_early_stopping",
    "unbatch_graphs",
]
