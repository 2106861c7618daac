"""SMILES reading.

``parse_smiles`` turns a SMILES string into a fully perceived
:class:`~molgnn.molecule.Molecule`: implicit hydrogens assigned, rings found,
aromaticity resolved and validated, conjugation and hybridization set. The
supported grammar covers organic-subset and bracket atoms, charges, explicit
H counts, isotopes, ring closures (including ``%nn``), branches, the bond
symbols ``- = # : / \\``, aromatic lowercase atoms, the chiral marks ``@`` and
``@@``, and dot-separated components (the largest component is kept; ties go
to the heavier one).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .molecule import BondDirection, BondOrder, ChiralTag
from .periodic import (
    AROMATIC_BRACKET,
    AROMATIC_ORGANIC,
    ORGANIC_SUBSET,
    is_known_element,
)


class SmilesParseError(ValueError):
    """Raised for any malformed or chemically impossible SMILES input."""


@dataclass
class RawAtom:
    """Atom as written, before perception."""

    element: str
    aromatic_input: bool = False
    charge: int = 0
    isotope: int = 0
    h_count: int | None = None  # None: infer from valence (organic subset)
    chiral: ChiralTag = ChiralTag.UNSPECIFIED
    bracket: bool = False
    explicit_h_neighbors: int = 0


@dataclass
class RawBond:
    """Bond as written; ``a`` is the atom that appeared first in the text."""

    a: int
    b: int
    order: BondOrder | None = None  # None: default (single or aromatic)
    direction: BondDirection = BondDirection.NONE


@dataclass
class RawMol:
    atoms: list[RawAtom] = field(default_factory=list)
    bonds: list[RawBond] = field(default_factory=list)


_BRACKET_RE = re.compile(
    r"^(?P<isotope>\d+)?"
    r"(?P<element>[A-Z][a-z]?|se|as|[bcnops])"
    r"(?P<chiral>@@|@(?:TH|AL|SP|OH|TB)?\d*)?"
    r"(?P<hcount>H\d*)?"
    r"(?P<charge>\+\d+|-\d+|\++|-+)?"
    r"(?::(?P<cls>\d+))?$"
)

_BOND_CHARS = {
    "-": BondOrder.SINGLE,
    "=": BondOrder.DOUBLE,
    "#": BondOrder.TRIPLE,
    ":": BondOrder.AROMATIC,
}


def _parse_bracket(body: str, pos: int) -> RawAtom:
    match = _BRACKET_RE.match(body)
    if match is None:
        raise SmilesParseError(f"malformed bracket atom '[{body}]' at position {pos}")
    element = match.group("element")
    aromatic = False
    if element.islower():
        if element not in AROMATIC_BRACKET:
            raise SmilesParseError(f"'{element}' cannot be aromatic (position {pos})")
        aromatic = True
        element = element.capitalize()
    if not is_known_element(element):
        raise SmilesParseError(f"unknown element symbol '{element}' at position {pos}")

    hcount = 0
    if match.group("hcount"):
        digits = match.group("hcount")[1:]
        hcount = int(digits) if digits else 1
        if element == "H" and hcount:
            raise SmilesParseError("a hydrogen atom cannot carry hydrogens")

    charge = 0
    chg = match.group("charge")
    if chg:
        if chg[0] == "+":
            charge = int(chg[1:]) if chg[1:].isdigit() else len(chg)
        else:
            charge = -(int(chg[1:]) if chg[1:].isdigit() else len(chg))

    chiral = ChiralTag.UNSPECIFIED
    tag = match.group("chiral")
    if tag == "@":
        chiral = ChiralTag.CCW
    elif tag == "@@":
        chiral = ChiralTag.CW
    elif tag:
        chiral = ChiralTag.OTHER

    isotope = int(match.group("isotope")) if match.group("isotope") else 0
    return RawAtom(
        element=element,
        aromatic_input=aromatic,
        charge=charge,
        isotope=isotope,
        h_count=hcount,
        chiral=chiral,
        bracket=True,
    )


def tokenize_to_raw(text: str) -> RawMol:
    """First parsing stage: grammar only, no chemistry.

    Builds the atom/bond lists exactly as written. Raises
    :class:`SmilesParseError` for grammar violations (unclosed rings or
    brackets, unmatched parentheses, stray bond symbols, unknown elements).
    """
    if not text or not text.strip():
        raise SmilesParseError("empty SMILES input")
    text = text.strip()

    mol = RawMol()
    anchor: int | None = None
    pending_order: BondOrder | None = None
    pending_dot = False
    pending_dir = BondDirection.NONE
    branch_stack: list[int | None] = []
    # ring closure number -> (atom index, written order or None, direction)
    open_rings: dict[int, tuple[int, BondOrder | None, BondDirection]] = {}

    def add_atom(atom: RawAtom, pos: int) -> None:
        nonlocal anchor, pending_order, pending_dot, pending_dir
        idx = len(mol.atoms)
        mol.atoms.append(atom)
        if anchor is not None and not pending_dot:
            mol.bonds.append(RawBond(anchor, idx, pending_order, pending_dir))
        elif pending_order is not None:
            raise SmilesParseError(f"bond symbol with no preceding atom near position {pos}")
        anchor = idx
        pending_order = None
        pending_dir = BondDirection.NONE
        pending_dot = False

    def close_ring(num: int, pos: int) -> None:
        nonlocal pending_order, pending_dir
        if anchor is None:
            raise SmilesParseError(f"ring closure digit before any atom at position {pos}")
        if num in open_rings:
            other, other_order, other_dir = open_rings.pop(num)
            if other == anchor:
                raise SmilesParseError(f"ring bond {num} closes onto its own atom")
            order = pending_order
            if order is not None and other_order is not None and order != other_order:
                raise SmilesParseError(f"conflicting bond orders for ring closure {num}")
            if order is None:
                order = other_order
            direction = other_dir if other_dir != BondDirection.NONE else pending_dir
            for bond in mol.bonds:
                if {bond.a, bond.b} == {other, anchor}:
                    raise SmilesParseError(
                        f"duplicate bond between atoms {other} and {anchor} via ring closure {num}"
                    )
            mol.bonds.append(RawBond(other, anchor, order, direction))
        else:
            open_rings[num] = (anchor, pending_order, pending_dir)
        pending_order = None
        pending_dir = BondDirection.NONE

    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "[":
            end = text.find("]", i)
            if end < 0:
                raise SmilesParseError(f"unterminated bracket atom at position {i}")
            add_atom(_parse_bracket(text[i + 1 : end], i), i)
            i = end + 1
        elif ch in "(" ")":
            if ch == "(":
                if anchor is None:
                    raise SmilesParseError("branch opened before any atom")
                branch_stack.append(anchor)
            else:
                if not branch_stack:
                    raise SmilesParseError(f"unmatched ')' at position {i}")
                anchor = branch_stack.pop()
            i += 1
        elif ch in _BOND_CHARS:
            if pending_order is not None:
                raise SmilesParseError(f"two bond symbols in a row at position {i}")
            pending_order = _BOND_CHARS[ch]
            i += 1
        elif ch in "/\\":
            if pending_dir != BondDirection.NONE:
                raise SmilesParseError(f"two direction symbols in a row at position {i}")
            pending_dir = (
                BondDirection.END_UP_RIGHT if ch == "/" else BondDirection.END_DOWN_RIGHT
            )
            if pending_order is None:
                pending_order = BondOrder.SINGLE
            i += 1
        elif ch == ".":
            if pending_order is not None:
                raise SmilesParseError(f"bond symbol before '.' at position {i}")
            pending_dot = True
            i += 1
        elif ch == "%":
            if i + 2 >= n or not text[i + 1 : i + 3].isdigit():
                raise SmilesParseError(f"'%' needs two digits at position {i}")
            close_ring(int(text[i + 1 : i + 3]), i)
            i += 3
        elif ch.isdigit():
            close_ring(int(ch), i)
            i += 1
        elif ch.isupper():
            two = text[i : i + 2]
            if two in ("Cl", "Br"):
                add_atom(RawAtom(element=two), i)
                i += 2
            elif ch in ORGANIC_SUBSET:
                add_atom(RawAtom(element=ch), i)
                i += 1
            else:
                raise SmilesParseError(
                    f"unknown element symbol '{ch}' at position {i} (bracket atoms "
                    f"are required outside the organic subset)"
                )
        elif ch in AROMATIC_ORGANIC:
            add_atom(RawAtom(element=ch.upper(), aromatic_input=True), i)
            i += 1
        else:
            raise SmilesParseError(f"unexpected character {ch!r} at position {i}")

    if branch_stack:
        raise SmilesParseError("unmatched '(' in SMILES")
    if open_rings:
        nums = ", ".join(str(k) for k in sorted(open_rings))
        raise SmilesParseError(f"unclosed ring bond(s): {nums}")
    if pending_order is not None:
        raise SmilesParseError("dangling bond symbol at end of SMILES")
    if not mol.atoms:
        raise SmilesParseError("empty SMILES input")
    return mol


def merge_explicit_hydrogens(mol: RawMol) -> RawMol:
    """Fold plain ``[H]`` neighbor atoms into their heavy atom's H count.

    Only uncharged, isotope-free hydrogens with exactly one single bond to a
    non-hydrogen atom are merged; anything else ([2H], bare H2) stays a node.
    """
    counts: dict[int, int] = {}
    for bidx, bond in enumerate(mol.bonds):
        counts[bond.a] = counts.get(bond.a, 0) + 1
        counts[bond.b] = counts.get(bond.b, 0) + 1

    removable: set[int] = set()
    for idx, atom in enumerate(mol.atoms):
        if atom.element != "H" or atom.charge or atom.isotope or (atom.h_count or 0):
            continue
        if counts.get(idx, 0) != 1:
            continue
        bond = next(b for b in mol.bonds if idx in (b.a, b.b))
        if bond.order not in (None, BondOrder.SINGLE):
            continue
        other = bond.b if bond.a == idx else bond.a
        if mol.atoms[other].element == "H":
            continue
        removable.add(idx)
        mol.atoms[other].explicit_h_neighbors += 1

    if not removable:
        return mol
    remap: dict[int, int] = {}
    atoms: list[RawAtom] = []
    for idx, atom in enumerate(mol.atoms):
        if idx not in removable:
            remap[idx] = len(atoms)
            atoms.append(atom)
    bonds = [
        RawBond(remap[b.a], remap[b.b], b.order, b.direction)
        for b in mol.bonds
        if b.a not in removable and b.b not in removable
    ]
    return RawMol(atoms=atoms, bonds=bonds)


def parse_smiles(text: str):
    """Parse and perceive a SMILES string into a Molecule.

    Multi-component inputs keep the component with the most heavy atoms
    (ties broken by molecular weight). See :mod:`molgnn.perception` for the
    perception rules applied after grammar parsing.
    """
    from .perception import perceive

    raw = merge_explicit_hydrogens(tokenize_to_raw(text))
    return perceive(raw)
