"""Chemical perception: hydrogens, rings, aromaticity, conjugation.

The rules are deliberately self-contained and documented here rather than
claimed equivalent to any external toolkit.

Hydrogen counts
    Bracket atoms take their written H count verbatim. Organic-subset atoms
    get the smallest charge-adjusted valence that accommodates the written
    bonds; aromatic bonds count 1.5 and the sum is rounded up. A bond sum
    exceeding every allowed valence is a parse error. Aromatic organic-subset
    atoms fill against their lowest valence, clamped at zero (fused and
    substituted positions simply have no hydrogen left).

Aromaticity
    Candidate rings come from the smallest set of smallest rings; connected
    unions of fused rings are also tested so that naphthalene-like systems
    written in Kekulé form resolve. A candidate is aromatic when every member
    is sp2-capable (degree at most three, element B/C/N/O/P/S/Se/As) and the
    pi-electron count satisfies 4n+2. Per-atom pi contributions: 1 for an
    atom with a double bond inside the candidate, or with aromatic-order
    bonds plus a free valence against its lowest allowed valence; 0 for an
    exocyclic double bond or a bare cation; 2 for an anion or a lone-pair
    heteroatom. Lowercase input atoms must end up aromatic, otherwise the
    input is rejected.

Conjugation
    Aromatic bonds are conjugated. A double or triple bond is conjugated
    when a single or aromatic bond links one of its atoms to an unsaturated
    atom or a lone-pair donor. A single bond is conjugated when both of its
    atoms qualify and at least one is unsaturated.

Hybridization
    Steric-number rule: sigma partners (hydrogens included) plus lone pairs,
    with aromatic atoms pinned to SP2. Elements without outer-electron data
    report ``other``.
"""

from __future__ import annotations

import math
from itertools import combinations

from .molecule import (
    Atom,
    Bond,
    BondDirection,
    BondOrder,
    BondStereo,
    Hybridization,
    Molecule,
    build_neighbor_table,
)
from .periodic import (
    ATOMIC_MASS,
    LONE_PAIR_DONORS,
    OUTER_ELECTRONS,
    SP2_CAPABLE,
    allowed_valences,
)
from .smiles import RawAtom, RawBond, RawMol, SmilesParseError

_MAX_FUSED_COMBO = 6  # rings per fused system enumerated exhaustively


def _adjacency(n: int, bonds: list[RawBond]) -> list[list[tuple[int, int]]]:
    adj: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    for bidx, bond in enumerate(bonds):
        adj[bond.a].append((bond.b, bidx))
        adj[bond.b].append((bond.a, bidx))
    return adj


def _connected_components(n: int, adj) -> list[list[int]]:
    seen = [False] * n
    comps = []
    for start in range(n):
        if seen[start]:
            continue
        stack = [start]
        seen[start] = True
        comp = []
        while stack:
            v = stack.pop()
            comp.append(v)
            for w, _ in adj[v]:
                if not seen[w]:
                    seen[w] = True
                    stack.append(w)
        comps.append(sorted(comp))
    return comps


def find_bridges(n: int, adj) -> set[int]:
    """Bond indices that lie on no cycle (iterative lowpoint search)."""
    visited = [False] * n
    disc = [0] * n
    low = [0] * n
    parent_of: dict[int, tuple[int, int]] = {}  # child -> (parent, edge)
    bridges: set[int] = set()
    timer = 0
    for root in range(n):
        if visited[root]:
            continue
        stack: list[tuple[int, int]] = [(root, 0)]
        visited[root] = True
        disc[root] = low[root] = timer
        timer += 1
        while stack:
            v, ptr = stack.pop()
            if ptr < len(adj[v]):
                stack.append((v, ptr + 1))
                w, eidx = adj[v][ptr]
                if parent_of.get(v, (None, None))[1] == eidx:
                    continue
                if visited[w]:
                    low[v] = min(low[v], disc[w])
                else:
                    visited[w] = True
                    disc[w] = low[w] = timer
                    timer += 1
                    parent_of[w] = (v, eidx)
                    stack.append((w, 0))
            else:
                if v in parent_of:
                    p, eidx = parent_of[v]
                    low[p] = min(low[p], low[v])
                    if low[v] > disc[p]:
                        bridges.add(eidx)
    return bridges


def smallest_rings(
    n: int, bonds: list[RawBond], adj, bridges: set[int] | None = None
) -> list[tuple[int, ...]]:
    """Minimum cycle basis (SSSR) via shortest candidate cycles over GF(2).

    Candidate cycles are collected Horton-style from per-vertex BFS trees of
    the cyclic subgraph, sorted by length with a lexicographic tie-break, and
    greedily accepted while linearly independent in edge space.
    """
    comps = _connected_components(n, adj)
    target = len(bonds) - n + len(comps)
    if target <= 0:
        return []
    if bridges is None:
        bridges = find_bridges(n, adj)

    cyclic_adj: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    cyclic_atoms: list[int] = []
    for v in range(n):
        rows = [(w, e) for w, e in adj[v] if e not in bridges]
        cyclic_adj[v] = rows
        if rows:
            cyclic_atoms.append(v)

    candidates: dict[frozenset[int], tuple[int, ...]] = {}
    for root in cyclic_atoms:
        dist = {root: 0}
        parent: dict[int, tuple[int, int]] = {}
        queue = [root]
        while queue:
            nxt = []
            for v in queue:
                for w, eidx in cyclic_adj[v]:
                    if w not in dist:
                        dist[w] = dist[v] + 1
                        parent[w] = (v, eidx)
                        nxt.append(w)
            queue = nxt

        def path_edges(v: int) -> set[int]:
            edges = set()
            while v != root:
                v, eidx = parent[v]
                edges.add(eidx)
            return edges

        for eidx, bond in enumerate(bonds):
            if eidx in bridges:
                continue
            x, y = bond.a, bond.b
            if x not in dist or y not in dist:
                continue
            if parent.get(x, (None, None))[1] == eidx or parent.get(y, (None, None))[1] == eidx:
                continue
            cycle = (path_edges(x) ^ path_edges(y)) | {eidx}
            key = frozenset(cycle)
            if key not in candidates:
                candidates[key] = tuple(sorted(cycle))

    ordered = sorted(candidates, key=lambda c: (len(c), candidates[c]))
    basis_masks: list[int] = []
    rings: list[tuple[int, ...]] = []
    for cycle in ordered:
        mask = 0
        for eidx in cycle:
            mask |= 1 << eidx
        cur = mask
        for bm in basis_masks:
            cur = min(cur, cur ^ bm)
        if cur:
            basis_masks.append(cur)
            basis_masks.sort(reverse=True)
            ring = _order_cycle(cycle, bonds)
            if ring is not None:
                rings.append(ring)
            if len(rings) == target:
                break

    rings.sort(key=lambda r: (len(r), r))
    return rings


def _order_cycle(edge_set: frozenset[int], bonds: list[RawBond]) -> tuple[int, ...] | None:
    nbr: dict[int, list[int]] = {}
    for eidx in edge_set:
        a, b = bonds[eidx].a, bonds[eidx].b
        nbr.setdefault(a, []).append(b)
        nbr.setdefault(b, []).append(a)
    if any(len(v) != 2 for v in nbr.values()):
        return None
    start = min(nbr)
    prev, cur = None, start
    out: list[int] = []
    while True:
        out.append(cur)
        nxt = [w for w in sorted(nbr[cur]) if w != prev]
        prev, cur = cur, nxt[0]
        if cur == start:
            break
    if len(out) > 2 and out[-1] < out[1]:
        out = [out[0]] + out[:0:-1]
    return tuple(out)


def _pi_contribution(
    idx: int,
    member: set[int],
    atoms: list[RawAtom],
    bonds: list[RawBond],
    adj,
    h_total: list[int],
) -> int | None:
    """Pi electrons atom ``idx`` donates to a candidate ring, None if it cannot."""
    atom = atoms[idx]
    if atom.element not in SP2_CAPABLE:
        return None
    if len(adj[idx]) + h_total[idx] > 3:
        return None

    in_double = False
    exo_double = False
    has_aromatic = False
    sigma_sum = h_total[idx]
    for w, eidx in adj[idx]:
        order = bonds[eidx].order
        if order in (BondOrder.DOUBLE, BondOrder.TRIPLE):
            if w in member:
                in_double = True
            else:
                exo_double = True
            sigma_sum += order.value
        elif order is BondOrder.AROMATIC:
            has_aromatic = True
            sigma_sum += 1
        else:
            sigma_sum += 1

    if in_double:
        return 1
    if has_aromatic:
        allowed = allowed_valences(atom.element, atom.charge)
        if allowed and allowed[0] > sigma_sum:
            return 1
    if exo_double:
        return 0
    if atom.charge > 0:
        return 0
    if atom.charge < 0:
        return 2
    if atom.element in LONE_PAIR_DONORS:
        return 2
    return None


def perceive_aromaticity(
    atoms: list[RawAtom],
    bonds: list[RawBond],
    adj,
    rings: list[tuple[int, ...]],
    h_total: list[int],
) -> tuple[set[int], set[int]]:
    """Return (aromatic atom indices, aromatic bond indices).

    Every SSSR ring and every connected union of fused rings is tested
    against the 4n+2 rule using the bond orders as written; marks are applied
    afterwards so evaluation order cannot matter.
    """
    if not rings:
        return set(), set()

    bond_index = {}
    for eidx, bond in enumerate(bonds):
        bond_index[(bond.a, bond.b)] = eidx
        bond_index[(bond.b, bond.a)] = eidx
    ring_edge_sets = [
        frozenset(bond_index[(ring[i], ring[(i + 1) % len(ring)])] for i in range(len(ring)))
        for ring in rings
    ]

    parent = list(range(len(rings)))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i, j in combinations(range(len(rings)), 2):
        if ring_edge_sets[i] & ring_edge_sets[j]:
            parent[find(i)] = find(j)

    systems: dict[int, list[int]] = {}
    for i in range(len(rings)):
        systems.setdefault(find(i), []).append(i)

    candidates: list[tuple[set[int], frozenset[int]]] = []
    for members in systems.values():
        for size in range(1, len(members) + 1):
            if 1 < size < len(members) and len(members) > _MAX_FUSED_COMBO:
                continue
            for combo in combinations(members, size):
                if size > 1 and not _is_connected_combo(combo, ring_edge_sets):
                    continue
                atom_set: set[int] = set()
                edge_set: set[int] = set()
                for ridx in combo:
                    atom_set.update(rings[ridx])
                    edge_set.update(ring_edge_sets[ridx])
                candidates.append((atom_set, frozenset(edge_set)))

    aromatic_atoms: set[int] = set()
    aromatic_bonds: set[int] = set()
    for atom_set, edge_set in candidates:
        total = 0
        ok = True
        for idx in atom_set:
            pi = _pi_contribution(idx, atom_set, atoms, bonds, adj, h_total)
            if pi is None:
                ok = False
                break
            total += pi
        if ok and total >= 2 and (total - 2) % 4 == 0:
            aromatic_atoms.update(atom_set)
            aromatic_bonds.update(edge_set)
    aromatic_bonds = {
        e for e in aromatic_bonds
        if bonds[e].a in aromatic_atoms and bonds[e].b in aromatic_atoms
    }
    return aromatic_atoms, aromatic_bonds


def _is_connected_combo(combo, ring_edge_sets) -> bool:
    remaining = set(combo[1:])
    frontier = [combo[0]]
    while frontier and remaining:
        cur = frontier.pop()
        linked = {r for r in remaining if ring_edge_sets[cur] & ring_edge_sets[r]}
        remaining -= linked
        frontier.extend(linked)
    return not remaining


def _assign_hydrogens(atoms: list[RawAtom], bonds: list[RawBond], adj) -> tuple[list[int], list[int]]:
    """Implicit H and radical electron counts; validates valences."""
    implicit = [0] * len(atoms)
    radicals = [0] * len(atoms)
    for idx, atom in enumerate(atoms):
        order_sum = sum(bonds[eidx].order.valence for _, eidx in adj[idx])
        used = math.ceil(order_sum - 1e-9)
        allowed = allowed_valences(atom.element, atom.charge)

        if atom.bracket:
            implicit[idx] = atom.h_count or 0
            if atom.aromatic_input:
                # sigma framework only: the atom may donate a lone pair
                # instead of joining the pi system, so aromatic bonds count 1
                sigma = sum(
                    1 if bonds[eidx].order is BondOrder.AROMATIC else bonds[eidx].order.valence
                    for _, eidx in adj[idx]
                )
                total = math.ceil(sigma - 1e-9) + implicit[idx] + atom.explicit_h_neighbors
                if allowed and total > max(allowed):
                    raise SmilesParseError(
                        f"valence {total} impossible for {_atom_desc(atom)}"
                    )
                continue
            total = used + implicit[idx] + atom.explicit_h_neighbors
            if allowed:
                if total > max(allowed):
                    raise SmilesParseError(
                        f"valence {total} impossible for {_atom_desc(atom)}"
                    )
                radicals[idx] = min(v for v in allowed if v >= total) - total
        elif atom.aromatic_input:
            total = used + atom.explicit_h_neighbors
            implicit[idx] = max(0, (allowed[0] if allowed else 0) - total)
        else:
            total = used + atom.explicit_h_neighbors
            if not allowed:
                continue
            fitting = [v for v in allowed if v >= total]
            if not fitting:
                raise SmilesParseError(
                    f"valence {total} impossible for {_atom_desc(atom)}"
                )
            implicit[idx] = min(fitting) - total
    return implicit, radicals


def _atom_desc(atom: RawAtom) -> str:
    charge = f"{atom.charge:+d}" if atom.charge else "neutral"
    return f"{charge} {atom.element}"


def _hybridization(
    atom: RawAtom, aromatic: bool, sigma: int, order_sum: int, h: int
) -> Hybridization:
    if aromatic:
        return Hybridization.SP2
    outer = OUTER_ELECTRONS.get(atom.element)
    if outer is None:
        return Hybridization.OTHER
    lone_pairs = max(0, (outer - atom.charge - order_sum - h) // 2)
    steric = sigma + h + lone_pairs
    table = {
        0: Hybridization.S,
        1: Hybridization.S,
        2: Hybridization.SP,
        3: Hybridization.SP2,
        4: Hybridization.SP3,
        5: Hybridization.SP3D,
        6: Hybridization.SP3D2,
    }
    return table.get(steric, Hybridization.OTHER)


def _bond_stereo(bonds: list[RawBond], adj, orders: list[BondOrder]) -> list[BondStereo]:
    stereo = [BondStereo.NONE] * len(bonds)
    for eidx, bond in enumerate(bonds):
        if orders[eidx] is not BondOrder.DOUBLE:
            continue
        side_a = _reference_side(bond.a, eidx, bonds, adj, orders)
        side_b = _reference_side(bond.b, eidx, bonds, adj, orders)
        if side_a is None or side_b is None:
            continue
        stereo[eidx] = BondStereo.Z if side_a == side_b else BondStereo.E
    return stereo


def _reference_side(atom_idx: int, double_eidx: int, bonds, adj, orders) -> bool | None:
    """True if the directional reference neighbor sits below the bond axis."""
    for _, eidx in sorted(adj[atom_idx], key=lambda t: t[1]):
        if eidx == double_eidx or orders[eidx] is not BondOrder.SINGLE:
            continue
        bond = bonds[eidx]
        if bond.direction is BondDirection.NONE:
            continue
        neighbor_written_first = bond.a != atom_idx
        return neighbor_written_first == (bond.direction is BondDirection.END_UP_RIGHT)
    return None


def _conjugation(atoms, bonds, adj, orders) -> list[bool]:
    multi = {BondOrder.DOUBLE, BondOrder.TRIPLE, BondOrder.AROMATIC}
    unsat = [False] * len(atoms)
    for eidx, bond in enumerate(bonds):
        if orders[eidx] in multi:
            unsat[bond.a] = True
            unsat[bond.b] = True

    def contributes(idx: int) -> bool:
        return (
            unsat[idx]
            or atoms[idx].element in LONE_PAIR_DONORS
            or atoms[idx].charge < 0
        )

    conj = [False] * len(bonds)
    for eidx, bond in enumerate(bonds):
        order = orders[eidx]
        if order is BondOrder.AROMATIC:
            conj[eidx] = True
        elif order in (BondOrder.DOUBLE, BondOrder.TRIPLE):
            for end in (bond.a, bond.b):
                for w, e2 in adj[end]:
                    if e2 == eidx:
                        continue
                    if orders[e2] in (BondOrder.SINGLE, BondOrder.AROMATIC) and contributes(w):
                        conj[eidx] = True
                        break
                if conj[eidx]:
                    break
        else:
            if (
                contributes(bond.a)
                and contributes(bond.b)
                and (unsat[bond.a] or unsat[bond.b])
            ):
                conj[eidx] = True
    return conj


def _select_component(
    raw: RawMol, implicit: list[int], radicals: list[int]
) -> tuple[RawMol, list[int], list[int]]:
    adj = _adjacency(len(raw.atoms), raw.bonds)
    comps = _connected_components(len(raw.atoms), adj)
    if len(comps) == 1:
        return raw, implicit, radicals

    h_mass = ATOMIC_MASS["H"]

    def heavy_count(comp: list[int]) -> int:
        return sum(1 for i in comp if raw.atoms[i].element != "H")

    def mass(comp: list[int]) -> float:
        return sum(
            ATOMIC_MASS[raw.atoms[i].element]
            + (implicit[i] + raw.atoms[i].explicit_h_neighbors) * h_mass
            for i in comp
        )

    best = max(comps, key=lambda c: (heavy_count(c), mass(c), -min(c)))
    keep = sorted(best)
    remap = {old: new for new, old in enumerate(keep)}
    atoms = [raw.atoms[old] for old in keep]
    bonds = [
        RawBond(remap[b.a], remap[b.b], b.order, b.direction)
        for b in raw.bonds
        if b.a in remap and b.b in remap
    ]
    return (
        RawMol(atoms=atoms, bonds=bonds),
        [implicit[i] for i in keep],
        [radicals[i] for i in keep],
    )


def perceive(raw: RawMol) -> Molecule:
    """Run full perception on a raw parse and freeze the result."""
    atoms, bonds = raw.atoms, raw.bonds
    n = len(atoms)
    adj = _adjacency(n, bonds)

    # default-aromatic bonds outside any cycle are plain single bonds
    bridges = find_bridges(n, adj)
    for eidx, bond in enumerate(bonds):
        if bond.order is None:
            both_arom = atoms[bond.a].aromatic_input and atoms[bond.b].aromatic_input
            if both_arom and eidx not in bridges:
                bond.order = BondOrder.AROMATIC
            else:
                bond.order = BondOrder.SINGLE
        elif bond.order is BondOrder.AROMATIC and eidx in bridges:
            raise SmilesParseError("aromatic bond written outside a ring")

    implicit, radicals = _assign_hydrogens(atoms, bonds, adj)

    raw, implicit, radicals = _select_component(raw, implicit, radicals)
    atoms, bonds = raw.atoms, raw.bonds
    n = len(atoms)
    adj = _adjacency(n, bonds)
    bridges = find_bridges(n, adj)

    h_total = [implicit[i] + atoms[i].explicit_h_neighbors for i in range(n)]
    rings = smallest_rings(n, bonds, adj, bridges)
    aromatic_atoms, aromatic_bonds = perceive_aromaticity(atoms, bonds, adj, rings, h_total)

    for idx, atom in enumerate(atoms):
        if atom.aromatic_input and idx not in aromatic_atoms:
            raise SmilesParseError(
                f"atom {idx} written aromatic but no 4n+2 ring supports it"
            )
    for eidx, bond in enumerate(bonds):
        if bond.order is BondOrder.AROMATIC and eidx not in aromatic_bonds:
            raise SmilesParseError("aromatic bond not part of an aromatic ring")

    orders = [
        BondOrder.AROMATIC if eidx in aromatic_bonds else bonds[eidx].order
        for eidx in range(len(bonds))
    ]
    conj = _conjugation(atoms, bonds, adj, orders)
    stereo = _bond_stereo(bonds, adj, orders)

    cyclic_atoms = set()
    for eidx, bond in enumerate(bonds):
        if eidx not in bridges:
            cyclic_atoms.add(bond.a)
            cyclic_atoms.add(bond.b)

    final_atoms = []
    for idx, atom in enumerate(atoms):
        order_sum = math.ceil(sum(orders[eidx].valence for _, eidx in adj[idx]) - 1e-9)
        final_atoms.append(
            Atom(
                element=atom.element,
                formal_charge=atom.charge,
                implicit_h=implicit[idx],
                explicit_h_neighbors=atom.explicit_h_neighbors,
                aromatic=idx in aromatic_atoms,
                chiral_tag=atom.chiral,
                num_radical_electrons=radicals[idx],
                in_ring=idx in cyclic_atoms,
                hybridization=_hybridization(
                    atom, idx in aromatic_atoms, len(adj[idx]), order_sum, h_total[idx]
                ),
                isotope=atom.isotope,
            )
        )

    final_bonds = []
    for eidx, bond in enumerate(bonds):
        final_bonds.append(
            Bond(
                a=bond.a,
                b=bond.b,
                order=orders[eidx],
                conjugated=conj[eidx],
                in_ring=eidx not in bridges,
                stereo=stereo[eidx],
                direction=bond.direction,
            )
        )

    return Molecule(
        atoms=tuple(final_atoms),
        bonds=tuple(final_bonds),
        rings=tuple(rings),
        neighbors=build_neighbor_table(n, final_bonds),
    )
