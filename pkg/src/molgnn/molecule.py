"""Molecule domain types.

Atoms, bonds and molecules are frozen after perception, so they are safe to
share between threads and to use as cache keys. All indices are positions in
``Molecule.atoms`` / ``Molecule.bonds``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from .periodic import ATOMIC_MASS


class ChiralTag(enum.Enum):
    UNSPECIFIED = "unspecified"
    CW = "cw"
    CCW = "ccw"
    OTHER = "other"


class Hybridization(enum.Enum):
    S = "S"
    SP = "SP"
    SP2 = "SP2"
    SP3 = "SP3"
    SP3D = "SP3D"
    SP3D2 = "SP3D2"
    OTHER = "other"


class BondOrder(enum.Enum):
    SINGLE = 1
    DOUBLE = 2
    TRIPLE = 3
    AROMATIC = 4

    @property
    def valence(self) -> float:
        """Contribution to an atom's bonded valence (aromatic counts 1.5)."""
        return 1.5 if self is BondOrder.AROMATIC else float(self.value)


class BondStereo(enum.Enum):
    NONE = "none"
    ANY = "any"
    Z = "Z"
    E = "E"
    CIS = "cis"
    TRANS = "trans"


class BondDirection(enum.Enum):
    NONE = "none"
    END_UP_RIGHT = "/"
    END_DOWN_RIGHT = "\\"


@dataclass(frozen=True)
class Atom:
    element: str
    formal_charge: int = 0
    implicit_h: int = 0
    explicit_h_neighbors: int = 0
    aromatic: bool = False
    chiral_tag: ChiralTag = ChiralTag.UNSPECIFIED
    num_radical_electrons: int = 0
    in_ring: bool = False
    hybridization: Hybridization = Hybridization.OTHER
    isotope: int = 0

    @property
    def total_h(self) -> int:
        """Hydrogens attached in any form (implicit plus merged explicit)."""
        return self.implicit_h + self.explicit_h_neighbors


@dataclass(frozen=True)
class Bond:
    a: int
    b: int
    order: BondOrder = BondOrder.SINGLE
    conjugated: bool = False
    in_ring: bool = False
    stereo: BondStereo = BondStereo.NONE
    direction: BondDirection = BondDirection.NONE

    def other(self, idx: int) -> int:
        if idx == self.a:
            return self.b
        if idx == self.b:
            return self.a
        raise ValueError(f"atom {idx} is not an endpoint of this bond")


@dataclass(frozen=True)
class Molecule:
    atoms: tuple[Atom, ...]
    bonds: tuple[Bond, ...]
    rings: tuple[tuple[int, ...], ...] = ()
    # neighbors[i] lists (neighbor atom index, bond index) pairs for atom i.
    neighbors: tuple[tuple[tuple[int, int], ...], ...] = field(default=(), repr=False)

    @property
    def num_atoms(self) -> int:
        return len(self.atoms)

    @property
    def num_bonds(self) -> int:
        return len(self.bonds)

    def degree(self, idx: int) -> int:
        """Heavy-atom degree (explicit graph neighbors, hydrogens excluded)."""
        return len(self.neighbors[idx])

    def bond_between(self, a: int, b: int) -> Bond | None:
        for nbr, bidx in self.neighbors[a]:
            if nbr == b:
                return self.bonds[bidx]
        return None

    def bonded_valence(self, idx: int) -> float:
        return sum(self.bonds[bidx].order.valence for _, bidx in self.neighbors[idx])


def build_neighbor_table(n_atoms: int, bonds) -> tuple[tuple[tuple[int, int], ...], ...]:
    table: list[list[tuple[int, int]]] = [[] for _ in range(n_atoms)]
    for bidx, bond in enumerate(bonds):
        table[bond.a].append((bond.b, bidx))
        table[bond.b].append((bond.a, bidx))
    return tuple(tuple(row) for row in table)


def molecular_weight(mol: Molecule) -> float:
    """Average molecular mass in Daltons, hydrogens included.

    Isotope labels are stored but do not alter the mass; the standard
    atomic weight is used for every atom.
    """
    h_mass = ATOMIC_MASS["H"]
    total = 0.0
    for atom in mol.atoms:
        total += ATOMIC_MASS[atom.element] + atom.total_h * h_mass
    return total
