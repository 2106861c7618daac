"""Atom/bond featurization and circular fingerprints.

The default atom featurization is the classic 74-wide recipe: 43 exact atom
types, heavy-atom degree 0-10, implicit valence 0-6, formal charge, radical
count, aromaticity flag, five hybridizations and total hydrogens 0-4. Closed
vocabularies are strict: an out-of-vocabulary value raises instead of being
clamped. Bond features are 12 wide: four bond types, conjugation, ring
membership and six stereo states. Additional descriptors (mass, chiral tags,
hydrogen-inclusive degree, bond direction) can be composed into custom
configurations.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .molecule import (
    Bond,
    BondDirection,
    BondOrder,
    BondStereo,
    ChiralTag,
    Hybridization,
    Molecule,
)
from .periodic import ATOMIC_MASS


class FeatureError(ValueError):
    pass


ATOM_TYPES = (
    "C", "N", "O", "S", "F", "Si", "P", "Cl", "Br", "Mg", "Na", "Ca", "Fe",
    "As", "Al", "I", "B", "V", "K", "Tl", "Yb", "Sb", "Sn", "Ag", "Pd", "Co",
    "Se", "Ti", "Zn", "H", "Li", "Ge", "Cu", "Au", "Ni", "Cd", "In", "Mn",
    "Zr", "Cr", "Pt", "Hg", "Pb",
)

HYBRIDIZATIONS = (
    Hybridization.SP,
    Hybridization.SP2,
    Hybridization.SP3,
    Hybridization.SP3D,
    Hybridization.SP3D2,
)

BOND_TYPES = (BondOrder.SINGLE, BondOrder.DOUBLE, BondOrder.TRIPLE, BondOrder.AROMATIC)

BOND_STEREOS = (
    BondStereo.NONE,
    BondStereo.ANY,
    BondStereo.Z,
    BondStereo.E,
    BondStereo.CIS,
    BondStereo.TRANS,
)


def encode_one_hot(value, vocabulary, allow_unknown: bool = False) -> np.ndarray:
    """One-hot vector over ``vocabulary``; unknown values need the extra slot."""
    if not vocabulary:
        raise FeatureError("one-hot vocabulary must be non-empty")
    width = len(vocabulary) + (1 if allow_unknown else 0)
    vec = np.zeros(width, dtype=np.float64)
    try:
        vec[list(vocabulary).index(value)] = 1.0
    except ValueError:
        if not allow_unknown:
            raise FeatureError(f"value {value!r} outside closed vocabulary {vocabulary!r}")
        vec[-1] = 1.0
    return vec


@dataclass(frozen=True)
class Descriptor:
    """One feature column group: an extractor plus its encoding."""

    name: str
    extract: Callable
    vocabulary: tuple | None = None  # None means raw numeric
    allow_unknown: bool = False

    @property
    def width(self) -> int:
        if self.vocabulary is None:
            return 1
        return len(self.vocabulary) + (1 if self.allow_unknown else 0)

    def encode(self, value) -> np.ndarray:
        if self.vocabulary is None:
            return np.array([float(value)], dtype=np.float64)
        try:
            return encode_one_hot(value, self.vocabulary, self.allow_unknown)
        except FeatureError as err:
            raise FeatureError(f"descriptor '{self.name}': {err}") from None


@dataclass(frozen=True)
class FeatureConfig:
    descriptors: tuple[Descriptor, ...]

    @property
    def width(self) -> int:
        return sum(d.width for d in self.descriptors)

    def layout(self) -> list[dict]:
        return [{"name": d.name, "width": d.width} for d in self.descriptors]


# atom descriptor extractors

def _atom_type(mol: Molecule, idx: int):
    return mol.atoms[idx].element


def _atom_degree(mol: Molecule, idx: int):
    return mol.degree(idx)


def _atom_degree_with_h(mol: Molecule, idx: int):
    return mol.degree(idx) + mol.atoms[idx].total_h


def _atom_implicit_valence(mol: Molecule, idx: int):
    return mol.atoms[idx].implicit_h


def _atom_explicit_valence(mol: Molecule, idx: int):
    return math.ceil(mol.bonded_valence(idx) - 1e-9) + mol.atoms[idx].explicit_h_neighbors


def _atom_charge(mol: Molecule, idx: int):
    return mol.atoms[idx].formal_charge


def _atom_radicals(mol: Molecule, idx: int):
    return mol.atoms[idx].num_radical_electrons


def _atom_aromatic(mol: Molecule, idx: int):
    return 1.0 if mol.atoms[idx].aromatic else 0.0


def _atom_hybridization(mol: Molecule, idx: int):
    return mol.atoms[idx].hybridization


def _atom_total_h(mol: Molecule, idx: int):
    return mol.atoms[idx].total_h


def _atom_in_ring(mol: Molecule, idx: int):
    return 1.0 if mol.atoms[idx].in_ring else 0.0


def _atom_chiral_tag(mol: Molecule, idx: int):
    return mol.atoms[idx].chiral_tag


def _atom_chirality_rs(mol: Molecule, idx: int):
    # R/S assignment is not performed; every atom reports unspecified
    return "unspecified"


def _atom_is_chiral_center(mol: Molecule, idx: int):
    return 1.0 if mol.atoms[idx].chiral_tag in (ChiralTag.CW, ChiralTag.CCW) else 0.0


def _atom_mass(mol: Molecule, idx: int):
    return ATOMIC_MASS[mol.atoms[idx].element]


def default_atom_config() -> FeatureConfig:
    """The 74-wide default atom featurization."""
    return FeatureConfig(
        descriptors=(
            Descriptor("atom_type", _atom_type, ATOM_TYPES),
            Descriptor("degree", _atom_degree, tuple(range(11))),
            Descriptor("implicit_valence", _atom_implicit_valence, tuple(range(7))),
            Descriptor("formal_charge", _atom_charge),
            Descriptor("radical_electrons", _atom_radicals),
            Descriptor("aromatic", _atom_aromatic),
            Descriptor("hybridization", _atom_hybridization, HYBRIDIZATIONS),
            Descriptor("total_h", _atom_total_h, tuple(range(5))),
        )
    )


EXTRA_ATOM_DESCRIPTORS = {
    "degree_with_h": Descriptor("degree_with_h", _atom_degree_with_h, tuple(range(11))),
    "explicit_valence": Descriptor("explicit_valence", _atom_explicit_valence),
    "in_ring": Descriptor("in_ring", _atom_in_ring),
    "chiral_tag": Descriptor(
        "chiral_tag",
        _atom_chiral_tag,
        (ChiralTag.CW, ChiralTag.CCW, ChiralTag.UNSPECIFIED, ChiralTag.OTHER),
    ),
    "chirality_type": Descriptor("chirality_type", _atom_chirality_rs, ("R", "S"), allow_unknown=True),
    "is_chiral_center": Descriptor("is_chiral_center", _atom_is_chiral_center),
    "mass": Descriptor("mass", _atom_mass),
}


# bond descriptor extractors

def _bond_type(mol: Molecule, bond: Bond):
    return bond.order


def _bond_conjugated(mol: Molecule, bond: Bond):
    return 1.0 if bond.conjugated else 0.0


def _bond_in_ring(mol: Molecule, bond: Bond):
    return 1.0 if bond.in_ring else 0.0


def _bond_stereo(mol: Molecule, bond: Bond):
    return bond.stereo


def _bond_direction(mol: Molecule, bond: Bond):
    return bond.direction


def default_bond_config() -> FeatureConfig:
    """The 12-wide default bond featurization."""
    return FeatureConfig(
        descriptors=(
            Descriptor("bond_type", _bond_type, BOND_TYPES),
            Descriptor("conjugated", _bond_conjugated),
            Descriptor("in_ring", _bond_in_ring),
            Descriptor("stereo", _bond_stereo, BOND_STEREOS),
        )
    )


EXTRA_BOND_DESCRIPTORS = {
    "direction": Descriptor(
        "direction",
        _bond_direction,
        (BondDirection.NONE, BondDirection.END_UP_RIGHT, BondDirection.END_DOWN_RIGHT),
    ),
}


def atom_features(mol: Molecule, config: FeatureConfig | None = None) -> np.ndarray:
    """Feature matrix with one row per atom, in atom order."""
    if config is None:
        config = default_atom_config()
    out = np.zeros((mol.num_atoms, config.width), dtype=np.float64)
    for idx in range(mol.num_atoms):
        col = 0
        for desc in config.descriptors:
            vec = desc.encode(desc.extract(mol, idx))
            out[idx, col : col + desc.width] = vec
            col += desc.width
    return out


def bond_features(mol: Molecule, config: FeatureConfig | None = None) -> np.ndarray:
    """Feature matrix with one row per directed edge.

    Row order matches the molecular graph scheme: bond i produces rows 2i
    and 2i+1, and both directions share the same content.
    """
    if config is None:
        config = default_bond_config()
    out = np.zeros((2 * mol.num_bonds, config.width), dtype=np.float64)
    for i, bond in enumerate(mol.bonds):
        col = 0
        for desc in config.descriptors:
            vec = desc.encode(desc.extract(mol, bond))
            out[2 * i, col : col + desc.width] = vec
            out[2 * i + 1, col : col + desc.width] = vec
            col += desc.width
    return out


# circular (Morgan/ECFP style) fingerprints

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_U64 = (1 << 64) - 1

_ORDER_HASH_CODE = {
    BondOrder.SINGLE: 1,
    BondOrder.DOUBLE: 2,
    BondOrder.TRIPLE: 3,
    BondOrder.AROMATIC: 4,
}


def _fnv1a64(data: bytes) -> int:
    h = _FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * _FNV_PRIME) & _U64
    return h


def morgan_identifiers(mol: Molecule, radius: int) -> set[int]:
    """All circular substructure identifiers up to ``radius``.

    The set for radius r is a subset of the set for radius r+1 by
    construction; folding happens only in :func:`morgan_fingerprint`.
    """
    if radius < 0:
        raise FeatureError("radius must be non-negative")
    ids = []
    for idx in range(mol.num_atoms):
        atom = mol.atoms[idx]
        seed = (
            f"{atom.element}|{mol.degree(idx)}|{atom.formal_charge}|"
            f"{atom.implicit_h}|{int(atom.aromatic)}"
        )
        ids.append(_fnv1a64(seed.encode()))
    collected = set(ids)
    for _ in range(radius):
        new_ids = []
        for idx in range(mol.num_atoms):
            env = sorted(
                (_ORDER_HASH_CODE[mol.bonds[bidx].order], ids[nbr])
                for nbr, bidx in mol.neighbors[idx]
            )
            text = str(ids[idx]) + "|" + ",".join(f"{o}:{i}" for o, i in env)
            new_ids.append(_fnv1a64(text.encode()))
        ids = new_ids
        collected.update(ids)
    return collected


def morgan_fingerprint(mol: Molecule, radius: int = 2, n_bits: int = 2048) -> np.ndarray:
    """Folded binary fingerprint of circular substructure identifiers."""
    if n_bits < 1:
        raise FeatureError("n_bits must be at least 1")
    vec = np.zeros(n_bits, dtype=np.float64)
    for ident in morgan_identifiers(mol, radius):
        vec[ident % n_bits] = 1.0
    return vec


def dump_feature_matrix(path, matrix: np.ndarray, layout: list[dict]) -> None:
    """Write a row-major little-endian float64 dump plus a JSON sidecar."""
    data = np.ascontiguousarray(matrix, dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(data.tobytes())
    sidecar = {"shape": list(matrix.shape), "dtype": "<f8", "layout": layout}
    with open(str(path) + ".json", "w", encoding="utf-8") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)


def load_feature_matrix(path) -> np.ndarray:
    with open(str(path) + ".json", encoding="utf-8") as fh:
        sidecar = json.load(fh)
    raw = np.fromfile(path, dtype="<f8")
    return raw.reshape(sidecar["shape"])
