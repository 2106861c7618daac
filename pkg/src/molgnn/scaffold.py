"""Bemis-Murcko scaffold extraction.

The scaffold keeps every ring atom plus the acyclic linker atoms on paths
between rings, obtained by iteratively pruning terminal non-ring atoms.
Atoms attached to the remaining framework through a double or triple bond
(carbonyl oxygens on linkers, for example) are kept as well. Hydrogen counts
on framework atoms grow by one per pruned single-bond neighbor, so the
result is a chemically complete molecule. An acyclic input yields the empty
molecule.
"""

from __future__ import annotations

from dataclasses import replace

from .molecule import Bond, BondOrder, Molecule, build_neighbor_table


def murcko_scaffold(mol: Molecule) -> Molecule:
    if not any(atom.in_ring for atom in mol.atoms):
        return Molecule(atoms=(), bonds=(), rings=(), neighbors=())

    degree = [mol.degree(i) for i in range(mol.num_atoms)]
    kept = [True] * mol.num_atoms
    changed = True
    while changed:
        changed = False
        for idx in range(mol.num_atoms):
            if kept[idx] and degree[idx] <= 1 and not mol.atoms[idx].in_ring:
                kept[idx] = False
                changed = True
                for j, _ in mol.neighbors[idx]:
                    if kept[j]:
                        degree[j] -= 1

    # retain atoms multiple-bonded to the framework (exocyclic =O and kin)
    for idx in range(mol.num_atoms):
        if kept[idx]:
            continue
        for j, bidx in mol.neighbors[idx]:
            if kept[j] and mol.bonds[bidx].order in (BondOrder.DOUBLE, BondOrder.TRIPLE):
                kept[idx] = True
                break

    remap: dict[int, int] = {}
    atoms = []
    for idx in range(mol.num_atoms):
        if not kept[idx]:
            continue
        lost = sum(1 for j, _ in mol.neighbors[idx] if not kept[j])
        atom = mol.atoms[idx]
        if lost:
            atom = replace(atom, implicit_h=atom.implicit_h + lost)
        remap[idx] = len(atoms)
        atoms.append(atom)

    bonds = tuple(
        Bond(
            a=remap[b.a],
            b=remap[b.b],
            order=b.order,
            conjugated=b.conjugated,
            in_ring=b.in_ring,
            stereo=b.stereo,
            direction=b.direction,
        )
        for b in mol.bonds
        if kept[b.a] and kept[b.b]
    )
    rings = tuple(tuple(remap[i] for i in ring) for ring in mol.rings)
    return Molecule(
        atoms=tuple(atoms),
        bonds=bonds,
        rings=rings,
        neighbors=build_neighbor_table(len(atoms), bonds),
    )
