"""Canonical SMILES generation.

Atoms are ranked by iterative invariant refinement; remaining ties are broken
by trying every member of the first tied class and keeping the
lexicographically smallest string, so isomorphic inputs always canonicalize
to the same text regardless of atom order. The form is self-consistent, not
compatible with any external toolkit's canonical SMILES.

Chiral tags and bond directions are constitution-level noise for the uses of
this writer (scaffold grouping, duplicate detection) and are dropped.
"""

from __future__ import annotations

import math

from .molecule import Atom, Bond, BondOrder, Molecule
from .periodic import ORGANIC_SUBSET, allowed_valences

_BRANCH_CAP = 20000

_ORDER_CODE = {
    BondOrder.SINGLE: 1,
    BondOrder.DOUBLE: 2,
    BondOrder.TRIPLE: 3,
    BondOrder.AROMATIC: 4,
}


def canonical_smiles(mol: Molecule) -> str:
    """Deterministic SMILES string, identical for isomorphic molecules."""
    if mol.num_atoms == 0:
        return ""
    ranks = _initial_ranks(mol)
    budget = [_BRANCH_CAP]
    return _canonical_from(mol, ranks, budget)


def _initial_ranks(mol: Molecule) -> list[int]:
    keys = []
    for idx, atom in enumerate(mol.atoms):
        keys.append(
            (
                atom.element,
                mol.degree(idx),
                atom.formal_charge,
                atom.total_h,
                atom.aromatic,
                atom.num_radical_electrons,
                atom.isotope,
            )
        )
    return _dense_ranks(keys)


def _dense_ranks(keys) -> list[int]:
    order = {key: rank for rank, key in enumerate(sorted(set(keys)))}
    return [order[key] for key in keys]


def _refine(mol: Molecule, ranks: list[int]) -> list[int]:
    n = mol.num_atoms
    while True:
        keys = []
        for idx in range(n):
            nbrs = sorted(
                (_ORDER_CODE[mol.bonds[bidx].order], ranks[j])
                for j, bidx in mol.neighbors[idx]
            )
            keys.append((ranks[idx], tuple(nbrs)))
        new = _dense_ranks(keys)
        if new == ranks:
            return ranks
        ranks = new


def _canonical_from(mol: Molecule, ranks: list[int], budget: list[int]) -> str:
    ranks = _refine(mol, ranks)
    n = mol.num_atoms
    if len(set(ranks)) == n:
        return _write(mol, ranks)

    counts: dict[int, list[int]] = {}
    for idx, rank in enumerate(ranks):
        counts.setdefault(rank, []).append(idx)
    tied_rank = min(r for r, members in counts.items() if len(members) > 1)
    members = counts[tied_rank]

    best: str | None = None
    for m in members:
        budget[0] -= 1
        bumped = [r + (0 if i == m else 1) if r >= tied_rank else r for i, r in enumerate(ranks)]
        bumped[m] = tied_rank
        text = _canonical_from(mol, _dense_ranks(bumped), budget)
        if best is None or text < best:
            best = text
        if budget[0] <= 0:
            break  # symmetry blow-up guard; first candidates still deterministic
    assert best is not None
    return best


def _default_h(mol: Molecule, idx: int) -> int:
    """H count a reader would infer for the bare atom symbol."""
    atom = mol.atoms[idx]
    allowed = allowed_valences(atom.element, atom.formal_charge)
    if not allowed:
        return 0
    used = math.ceil(mol.bonded_valence(idx) - 1e-9)
    if atom.aromatic:
        return max(0, allowed[0] - used)
    fitting = [v for v in allowed if v >= used]
    return (min(fitting) - used) if fitting else 0


def _atom_token(mol: Molecule, idx: int) -> str:
    atom = mol.atoms[idx]
    symbol = atom.element.lower() if atom.aromatic else atom.element
    needs_bracket = (
        atom.element not in ORGANIC_SUBSET
        or atom.formal_charge != 0
        or atom.isotope != 0
        or _default_h(mol, idx) != atom.total_h
    )
    if not needs_bracket:
        return symbol
    parts = ["["]
    if atom.isotope:
        parts.append(str(atom.isotope))
    parts.append(symbol)
    h = atom.total_h
    if h == 1:
        parts.append("H")
    elif h > 1:
        parts.append(f"H{h}")
    charge = atom.formal_charge
    if charge == 1:
        parts.append("+")
    elif charge == -1:
        parts.append("-")
    elif charge > 1:
        parts.append(f"+{charge}")
    elif charge < -1:
        parts.append(f"-{-charge}")
    parts.append("]")
    return "".join(parts)


def _bond_token(mol: Molecule, bond: Bond) -> str:
    order = bond.order
    if order is BondOrder.AROMATIC:
        return ""
    if order is BondOrder.SINGLE:
        # explicit '-' keeps single bonds between aromatic atoms unambiguous
        if mol.atoms[bond.a].aromatic and mol.atoms[bond.b].aromatic:
            return "-"
        return ""
    return "=" if order is BondOrder.DOUBLE else "#"


def _write(mol: Molecule, ranks: list[int]) -> str:
    n = mol.num_atoms
    pos = {idx: rank for idx, rank in enumerate(ranks)}
    visited = [False] * n
    pieces: list[str] = []

    ring_numbers: dict[int, int] = {}  # bond index -> closure digit
    open_digits: set[int] = set()
    closures_at: dict[int, list[int]] = {}  # atom -> bond indices closing here

    # first pass: identify back edges in rank-guided preorder DFS
    tree_children: dict[int, list[tuple[int, int]]] = {i: [] for i in range(n)}
    back_edges_at: dict[int, list[int]] = {i: [] for i in range(n)}
    used_bonds: set[int] = set()
    for start in sorted(range(n), key=lambda i: pos[i]):
        if visited[start]:
            continue
        visited[start] = True
        frames = [(start, iter(sorted(mol.neighbors[start], key=lambda t: pos[t[0]])))]
        while frames:
            v, nbr_iter = frames[-1]
            advanced = False
            for w, bidx in nbr_iter:
                if bidx in used_bonds:
                    continue
                used_bonds.add(bidx)
                if visited[w]:
                    ring_numbers[bidx] = -1  # back edge, digit assigned later
                    back_edges_at[v].append(bidx)
                    closures_at.setdefault(w, []).append(bidx)
                else:
                    visited[w] = True
                    tree_children[v].append((w, bidx))
                    frames.append((w, iter(sorted(mol.neighbors[w], key=lambda t: pos[t[0]]))))
                    advanced = True
                    break
            if not advanced:
                frames.pop()

    # second pass: emit text
    digit_of: dict[int, int] = {}

    def closure_token(bidx: int, opening: bool) -> str:
        if opening:
            digit = 1
            while digit in open_digits:
                digit += 1
            open_digits.add(digit)
            digit_of[bidx] = digit
        else:
            digit = digit_of[bidx]
            open_digits.discard(digit)
        bond = mol.bonds[bidx]
        sym = _bond_token(mol, bond)
        text = str(digit) if digit < 10 else f"%{digit:02d}"
        return sym + text

    def emit(v: int, via_bond: int) -> None:
        if via_bond >= 0:
            pieces.append(_bond_token(mol, mol.bonds[via_bond]))
        pieces.append(_atom_token(mol, v))
        for bidx in sorted(closures_at.get(v, []), key=lambda b: pos[mol.bonds[b].other(v)]):
            pieces.append(closure_token(bidx, opening=True))
        for bidx in sorted(back_edges_at[v], key=lambda b: digit_of.get(b, 99)):
            pieces.append(closure_token(bidx, opening=False))
        children = sorted(tree_children[v], key=lambda t: pos[t[0]])
        for i, (w, bidx) in enumerate(children):
            if i < len(children) - 1:
                pieces.append("(")
                emit(w, bidx)
                pieces.append(")")
            else:
                emit(w, bidx)

    is_child = [False] * n
    for v in range(n):
        for w, _ in tree_children[v]:
            is_child[w] = True
    roots = sorted((i for i in range(n) if not is_child[i]), key=lambda i: pos[i])

    first = True
    for root in roots:
        if not first:
            pieces.append(".")
        emit(root, -1)
        first = False
    return "".join(pieces)
