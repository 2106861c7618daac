"""CSV dataset ingestion and cached featurization.

A dataset row is a SMILES string plus one float label per task. Empty or
non-numeric label cells become mask zeros and never touch losses or
metrics. Rows whose SMILES cannot be parsed are dropped and counted.
Graphs and fingerprints are built lazily and cached per molecule.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field

import numpy as np

from .featurize import (
    FeatureConfig,
    atom_features,
    bond_features,
    default_atom_config,
    default_bond_config,
    morgan_fingerprint,
)
from .graphs import GraphBatch, MolGraph, batch_graphs, build_graph
from .molecule import Molecule
from .smiles import SmilesParseError, parse_smiles


class DataError(ValueError):
    pass


@dataclass
class Dataset:
    smiles: list[str]
    molecules: list[Molecule]
    labels: np.ndarray  # [n, n_tasks]
    mask: np.ndarray  # [n, n_tasks], 1 where a label is present
    task_names: list[str]
    n_dropped: int = 0
    dropped_rows: list[int] = field(default_factory=list)
    atom_config: FeatureConfig = field(default_factory=default_atom_config)
    bond_config: FeatureConfig = field(default_factory=default_bond_config)
    _graphs: dict[int, MolGraph] = field(default_factory=dict, repr=False)
    _fps: dict[tuple[int, int], dict[int, np.ndarray]] = field(default_factory=dict, repr=False)

    def __len__(self) -> int:
        return len(self.smiles)

    @property
    def n_tasks(self) -> int:
        return self.labels.shape[1]

    def graph(self, i: int) -> MolGraph:
        if i not in self._graphs:
            mol = self.molecules[i]
            self._graphs[i] = build_graph(
                mol,
                atom_features(mol, self.atom_config),
                bond_features(mol, self.bond_config),
                scheme="molecular",
            )
        return self._graphs[i]

    def graph_batch(self, indices) -> GraphBatch:
        return batch_graphs([self.graph(i) for i in indices])

    def fingerprint(self, i: int, radius: int = 2, n_bits: int = 2048) -> np.ndarray:
        cache = self._fps.setdefault((radius, n_bits), {})
        if i not in cache:
            cache[i] = morgan_fingerprint(self.molecules[i], radius, n_bits)
        return cache[i]

    def fingerprint_matrix(self, indices, radius: int = 2, n_bits: int = 2048) -> np.ndarray:
        return np.stack([self.fingerprint(i, radius, n_bits) for i in indices])


def load_csv_dataset(path, smiles_column: str, task_columns: list[str] | None = None) -> Dataset:
    """Load a UTF-8 CSV with a header row into a Dataset.

    ``task_columns`` defaults to every non-SMILES column. Raises
    :class:`DataError` for a missing file, a missing column, or when no row
    has a parseable SMILES.
    """
    if not os.path.exists(path):
        raise DataError(f"CSV file not found: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"CSV file is empty: {path}") from None
        rows = [row for row in reader if any(cell.strip() for cell in row)]

    if smiles_column not in header:
        raise DataError(f"smiles column '{smiles_column}' not found in header {header}")
    smiles_idx = header.index(smiles_column)
    if task_columns is None:
        task_columns = [col for col in header if col != smiles_column]
    if not task_columns:
        raise DataError("no task columns available")
    task_idx = []
    for col in task_columns:
        if col not in header:
            raise DataError(f"task column '{col}' not found in header {header}")
        task_idx.append(header.index(col))

    smiles: list[str] = []
    molecules: list[Molecule] = []
    labels: list[list[float]] = []
    mask: list[list[float]] = []
    dropped: list[int] = []
    for row_num, row in enumerate(rows):
        text = row[smiles_idx].strip() if smiles_idx < len(row) else ""
        try:
            mol = parse_smiles(text)
        except SmilesParseError:
            dropped.append(row_num)
            continue
        lab, msk = [], []
        for idx in task_idx:
            cell = row[idx].strip() if idx < len(row) else ""
            try:
                lab.append(float(cell))
                msk.append(1.0)
            except ValueError:
                lab.append(0.0)
                msk.append(0.0)
        smiles.append(text)
        molecules.append(mol)
        labels.append(lab)
        mask.append(msk)

    if not smiles:
        raise DataError(f"no usable rows in {path} ({len(dropped)} dropped)")
    return Dataset(
        smiles=smiles,
        molecules=molecules,
        labels=np.array(labels, dtype=np.float64),
        mask=np.array(mask, dtype=np.float64),
        task_names=list(task_columns),
        n_dropped=len(dropped),
        dropped_rows=dropped,
    )
