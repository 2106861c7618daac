"""Element data used by the SMILES parser and featurizers.

Masses are IUPAC standard (average) atomic weights. The valence table drives
implicit-hydrogen assignment for organic-subset atoms and valence validation
for bracket atoms; charge shifts the allowed valences by its sign, except for
the early (electron-poor) elements B and Al where the shift is inverted so
that borate-style anions keep their four bonds.
"""

from __future__ import annotations

ATOMIC_MASS: dict[str, float] = {
    "H": 1.008, "Li": 6.94, "B": 10.81, "C": 12.011, "N": 14.007,
    "O": 15.999, "F": 18.998, "Na": 22.990, "Mg": 24.305, "Al": 26.982,
    "Si": 28.085, "P": 30.974, "S": 32.06, "Cl": 35.45, "K": 39.098,
    "Ca": 40.078, "Ti": 47.867, "V": 50.942, "Cr": 51.996, "Mn": 54.938,
    "Fe": 55.845, "Co": 58.933, "Ni": 58.693, "Cu": 63.546, "Zn": 65.38,
    "Ge": 72.630, "As": 74.922, "Se": 78.971, "Br": 79.904, "Zr": 91.224,
    "Pd": 106.42, "Ag": 107.868, "Cd": 112.414, "In": 114.818,
    "Sn": 118.710, "Sb": 121.760, "I": 126.904, "Yb": 173.045,
    "Pt": 195.084, "Au": 196.967, "Hg": 200.592, "Tl": 204.38, "Pb": 207.2,
}

# Default valences for implicit-H assignment. Multi-valent entries are tried
# smallest first (S reads as 2, 4 or 6 depending on the written bonds).
VALENCES: dict[str, tuple[int, ...]] = {
    "B": (3,), "C": (4,), "N": (3,), "O": (2,), "P": (3, 5), "S": (2, 4, 6),
    "F": (1,), "Cl": (1,), "Br": (1,), "I": (1,), "H": (1,),
}

# Charge raises the valence of these elements when negative (borohydride).
EARLY_ELEMENTS = frozenset({"B", "Al"})

# Atoms writable without brackets; lowercase forms assert aromaticity.
ORGANIC_SUBSET = frozenset({"B", "C", "N", "O", "P", "S", "F", "Cl", "Br", "I"})
AROMATIC_ORGANIC = frozenset({"b", "c", "n", "o", "p", "s"})
# Elements additionally allowed lowercase inside brackets.
AROMATIC_BRACKET = frozenset({"b", "c", "n", "o", "p", "s", "se", "as"})

# Elements that may sit in an aromatic ring (sp2-capable).
SP2_CAPABLE = frozenset({"B", "C", "N", "O", "P", "S", "Se", "As"})

# Valence-shell electron counts, for hybridization and lone-pair reasoning.
OUTER_ELECTRONS: dict[str, int] = {
    "H": 1, "B": 3, "C": 4, "N": 5, "O": 6, "F": 7, "Si": 4, "P": 5,
    "S": 6, "Cl": 7, "Ge": 4, "As": 5, "Se": 6, "Br": 7, "Sn": 4,
    "Sb": 5, "I": 7, "Pb": 4,
}

# Elements whose lone pairs participate in conjugated systems.
LONE_PAIR_DONORS = frozenset({"N", "O", "S", "P", "Se", "As"})


def allowed_valences(element: str, charge: int) -> tuple[int, ...]:
    """Charge-adjusted valences for an element, empty if the table has none."""
    base = VALENCES.get(element)
    if base is None:
        return ()
    shift = -charge if element in EARLY_ELEMENTS else charge
    return tuple(max(0, v + shift) for v in base)


def is_known_element(symbol: str) -> bool:
    return symbol in ATOMIC_MASS
