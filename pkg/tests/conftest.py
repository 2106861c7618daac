"""Shared test helpers and fixtures."""

from __future__ import annotations

import csv
import os

import numpy as np
import pytest

from molgnn.molecule import Bond, Molecule, build_neighbor_table

DATA_DIR = os.path.join(os.path.dirname(__file__), "data")
ORACLE_PATH = os.path.join(DATA_DIR, "parser_oracle.tsv")
DATASET_PATH = os.path.join(DATA_DIR, "bbbp_like.csv")


def load_oracle_rows():
    with open(ORACLE_PATH, encoding="utf-8") as fh:
        header = fh.readline().strip().split("\t")
        rows = []
        for line in fh:
            rows.append(dict(zip(header, line.rstrip("\n").split("\t"))))
    return rows


def load_dataset_rows():
    with open(DATASET_PATH, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        return list(reader)


def permute_molecule(mol: Molecule, perm: list[int]) -> Molecule:
    """Relabel atoms so old index i becomes perm[i]."""
    n = mol.num_atoms
    atoms = [None] * n
    for old, new in enumerate(perm):
        atoms[new] = mol.atoms[old]
    bonds = tuple(
        Bond(
            a=perm[b.a],
            b=perm[b.b],
            order=b.order,
            conjugated=b.conjugated,
            in_ring=b.in_ring,
            stereo=b.stereo,
            direction=b.direction,
        )
        for b in mol.bonds
    )
    rings = tuple(tuple(perm[i] for i in ring) for ring in mol.rings)
    return Molecule(
        atoms=tuple(atoms),
        bonds=bonds,
        rings=rings,
        neighbors=build_neighbor_table(n, bonds),
    )


@pytest.fixture(scope="session")
def oracle_rows():
    return load_oracle_rows()


@pytest.fixture(scope="session")
def dataset_rows():
    return load_dataset_rows()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
