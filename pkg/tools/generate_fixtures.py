"""Generate the parser oracle table and the benchmark-style dataset.

Molecules are assembled as explicit graphs (curated ring cores, substituents
and linkers with known chemistry), so every oracle property is known by
construction rather than by parsing:

* atom/bond counts come from the assembled graph,
* hydrogen totals from valence arithmetic over the built bonds,
* aromatic flags from the curated core definitions,
* ring counts from a networkx cycle basis,
* molecular weight from an atomic mass table kept local to this tool,
* scaffolds from an independent pruning pass over the graph.

The SMILES text is produced by a randomized-traversal writer (lowercase
aromatic or Kekule form, optional %nn ring digits, optional explicit [H]
atoms, optional counterion components), giving a genuine write-then-parse
oracle: the package parser must reconstruct exactly what was built.

Run from the repository root:

    python3 tools/generate_fixtures.py

Outputs tests/data/parser_oracle.tsv and tests/data/bbbp_like.csv.
"""

from __future__ import annotations

import math
import os
import random

import networkx as nx

MASS = {
    "H": 1.008, "B": 10.81, "C": 12.011, "N": 14.007, "O": 15.999,
    "F": 18.998, "Na": 22.990, "P": 30.974, "S": 32.06, "Cl": 35.45,
    "Br": 79.904, "I": 126.904,
}

VALENCE = {
    "B": (3,), "C": (4,), "N": (3,), "O": (2,), "P": (3, 5), "S": (2, 4, 6),
    "F": (1,), "Cl": (1,), "Br": (1,), "I": (1,), "H": (1,),
}

ORGANIC = {"B", "C", "N", "O", "P", "S", "F", "Cl", "Br", "I"}
AROMATIC_LOWER = {"b", "c", "n", "o", "p", "s"}


class Builder:
    """Incremental molecule graph with explicit chemistry annotations.

    Node attributes: element, charge, aromatic flag, pi (electrons the atom
    donates to its aromatic ring: 0, 1 or 2), h (explicit hydrogen override,
    None means infer from valence). Edge attribute: order (1, 2, 3 or "ar").
    """

    def __init__(self):
        self.g = nx.Graph()
        self.next_id = 0

    def atom(self, element, charge=0, aromatic=False, pi=None, h=None):
        idx = self.next_id
        self.next_id += 1
        self.g.add_node(idx, element=element, charge=charge, aromatic=aromatic, pi=pi, h=h)
        return idx

    def bond(self, a, b, order=1):
        self.g.add_edge(a, b, order=order)

    def merge(self, other: "Builder") -> dict:
        mapping = {}
        for node in sorted(other.g.nodes()):
            mapping[node] = self.atom(**other.g.nodes[node])
        for a, b in other.g.edges():
            self.bond(mapping[a], mapping[b], other.g.edges[a, b]["order"])
        return mapping


def _aromatic_ring(b: Builder, spec):
    """spec: list of (element, pi, h_override, charge); returns atom ids."""
    ids = [b.atom(el, charge=chg, aromatic=True, pi=pi, h=h) for el, pi, h, chg in spec]
    for i in range(len(ids)):
        b.bond(ids[i], ids[(i + 1) % len(ids)], "ar")
    return ids


def _plain_ring(b: Builder, elements):
    ids = [b.atom(el) for el in elements]
    for i in range(len(ids)):
        b.bond(ids[i], ids[(i + 1) % len(ids)], 1)
    return ids


def _fuse_benzo(b: Builder, a_idx, b_idx):
    """Fuse a benzene ring onto the aromatic bond (a_idx, b_idx)."""
    extra = [b.atom("C", aromatic=True, pi=1) for _ in range(4)]
    chain = [a_idx] + extra + [b_idx]
    for i in range(len(chain) - 1):
        b.bond(chain[i], chain[i + 1], "ar")
    return extra


C1 = ("C", 1, None, 0)
N1 = ("N", 1, None, 0)
NH2E = ("N", 2, 1, 0)  # pyrrole-type nitrogen: lone pair in the ring, one H
O2E = ("O", 2, None, 0)
S2E = ("S", 2, None, 0)


def core_benzene():
    b = Builder()
    ids = _aromatic_ring(b, [C1] * 6)
    return b, ids


def core_pyridine():
    b = Builder()
    ids = _aromatic_ring(b, [N1] + [C1] * 5)
    return b, ids[1:]


def core_pyrimidine():
    b = Builder()
    ids = _aromatic_ring(b, [N1, C1, N1, C1, C1, C1])
    return b, [ids[1], ids[3], ids[4], ids[5]]


def core_pyrazine():
    b = Builder()
    ids = _aromatic_ring(b, [N1, C1, C1, N1, C1, C1])
    return b, [ids[1], ids[2], ids[4], ids[5]]


def core_pyridazine():
    b = Builder()
    ids = _aromatic_ring(b, [N1, N1, C1, C1, C1, C1])
    return b, ids[2:]


def core_pyrrole():
    b = Builder()
    ids = _aromatic_ring(b, [NH2E] + [C1] * 4)
    return b, ids[1:]


def core_furan():
    b = Builder()
    ids = _aromatic_ring(b, [O2E] + [C1] * 4)
    return b, ids[1:]


def core_thiophene():
    b = Builder()
    ids = _aromatic_ring(b, [S2E] + [C1] * 4)
    return b, ids[1:]


def core_imidazole():
    b = Builder()
    ids = _aromatic_ring(b, [NH2E, C1, N1, C1, C1])
    return b, [ids[1], ids[3], ids[4]]


def core_pyrazole():
    b = Builder()
    ids = _aromatic_ring(b, [NH2E, N1, C1, C1, C1])
    return b, ids[2:]


def core_oxazole():
    b = Builder()
    ids = _aromatic_ring(b, [O2E, C1, N1, C1, C1])
    return b, [ids[1], ids[3], ids[4]]


def core_isoxazole():
    b = Builder()
    ids = _aromatic_ring(b, [O2E, N1, C1, C1, C1])
    return b, ids[2:]


def core_thiazole():
    b = Builder()
    ids = _aromatic_ring(b, [S2E, C1, N1, C1, C1])
    return b, [ids[1], ids[3], ids[4]]


def core_triazole():
    b = Builder()
    ids = _aromatic_ring(b, [NH2E, C1, N1, C1, N1])
    return b, [ids[1], ids[3]]


def core_naphthalene():
    b = Builder()
    ids = _aromatic_ring(b, [C1] * 6)
    extra = _fuse_benzo(b, ids[0], ids[1])
    return b, ids[2:] + extra


def core_quinoline():
    b = Builder()
    ids = _aromatic_ring(b, [N1] + [C1] * 5)
    extra = _fuse_benzo(b, ids[2], ids[3])
    return b, [ids[1], ids[4], ids[5]] + extra


def core_indole():
    b = Builder()
    ids = _aromatic_ring(b, [NH2E, C1, C1, C1, C1])
    extra = _fuse_benzo(b, ids[2], ids[3])
    return b, [ids[1], ids[4]] + extra


def core_benzofuran():
    b = Builder()
    ids = _aromatic_ring(b, [O2E, C1, C1, C1, C1])
    extra = _fuse_benzo(b, ids[2], ids[3])
    return b, [ids[1], ids[4]] + extra


def core_benzothiophene():
    b = Builder()
    ids = _aromatic_ring(b, [S2E, C1, C1, C1, C1])
    extra = _fuse_benzo(b, ids[2], ids[3])
    return b, [ids[1], ids[4]] + extra


def core_benzimidazole():
    b = Builder()
    ids = _aromatic_ring(b, [NH2E, C1, N1, C1, C1])
    extra = _fuse_benzo(b, ids[3], ids[4])
    return b, [ids[1]] + extra


def core_pyridone():
    # 2-pyridone: aromatic via the nitrogen lone pair; carbonyl carbon adds 0
    b = Builder()
    ids = _aromatic_ring(b, [NH2E, ("C", 0, None, 0), C1, C1, C1, C1])
    b.bond(ids[1], b.atom("O"), 2)
    return b, ids[2:]


def core_cyclopropane():
    b = Builder()
    return b, _plain_ring(b, ["C"] * 3)


def core_cyclobutane():
    b = Builder()
    return b, _plain_ring(b, ["C"] * 4)


def core_cyclopentane():
    b = Builder()
    return b, _plain_ring(b, ["C"] * 5)


def core_cyclohexane():
    b = Builder()
    return b, _plain_ring(b, ["C"] * 6)


def core_cycloheptane():
    b = Builder()
    return b, _plain_ring(b, ["C"] * 7)


def core_piperidine():
    b = Builder()
    return b, _plain_ring(b, ["N"] + ["C"] * 5)


def core_piperazine():
    b = Builder()
    return b, _plain_ring(b, ["N", "C", "C", "N", "C", "C"])


def core_morpholine():
    b = Builder()
    ids = _plain_ring(b, ["O", "C", "C", "N", "C", "C"])
    return b, ids[1:]


def core_pyrrolidine():
    b = Builder()
    return b, _plain_ring(b, ["N", "C", "C", "C", "C"])


def core_tetrahydrofuran():
    b = Builder()
    ids = _plain_ring(b, ["O", "C", "C", "C", "C"])
    return b, ids[1:]


def core_tetrahydropyran():
    b = Builder()
    ids = _plain_ring(b, ["O"] + ["C"] * 5)
    return b, ids[1:]


def core_cyclohexene():
    b = Builder()
    ids = _plain_ring(b, ["C"] * 6)
    b.g.edges[ids[0], ids[1]]["order"] = 2
    return b, ids[2:]


def core_cyclohexanone():
    b = Builder()
    ids = _plain_ring(b, ["C"] * 6)
    b.bond(ids[0], b.atom("O"), 2)
    return b, ids[1:]


def core_norbornane():
    b = Builder()
    ids = _plain_ring(b, ["C"] * 6)
    bridge = b.atom("C")
    b.bond(ids[0], bridge, 1)
    b.bond(ids[3], bridge, 1)
    return b, [ids[1], ids[2], ids[4], ids[5]]


def core_adamantane():
    b = Builder()
    c = [b.atom("C") for _ in range(10)]
    for a, bb in [
        (0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0),
        (1, 6), (3, 7), (5, 8), (6, 9), (7, 9), (8, 9),
    ]:
        b.bond(c[a], c[bb], 1)
    return b, [c[0], c[2], c[4]]


def core_spiro():
    b = Builder()
    five = _plain_ring(b, ["C"] * 5)
    hub = five[0]
    arm = [b.atom("C") for _ in range(5)]
    b.bond(hub, arm[0], 1)
    for i in range(4):
        b.bond(arm[i], arm[i + 1], 1)
    b.bond(arm[4], hub, 1)
    return b, five[1:] + arm[1:4]


CORES = [
    ("benzene", core_benzene), ("pyridine", core_pyridine),
    ("pyrimidine", core_pyrimidine), ("pyrazine", core_pyrazine),
    ("pyridazine", core_pyridazine), ("pyrrole", core_pyrrole),
    ("furan", core_furan), ("thiophene", core_thiophene),
    ("imidazole", core_imidazole), ("pyrazole", core_pyrazole),
    ("oxazole", core_oxazole), ("isoxazole", core_isoxazole),
    ("thiazole", core_thiazole), ("triazole", core_triazole),
    ("naphthalene", core_naphthalene), ("quinoline", core_quinoline),
    ("indole", core_indole), ("benzofuran", core_benzofuran),
    ("benzothiophene", core_benzothiophene), ("benzimidazole", core_benzimidazole),
    ("pyridone", core_pyridone),
    ("cyclopropane", core_cyclopropane), ("cyclobutane", core_cyclobutane),
    ("cyclopentane", core_cyclopentane), ("cyclohexane", core_cyclohexane),
    ("cycloheptane", core_cycloheptane), ("piperidine", core_piperidine),
    ("piperazine", core_piperazine), ("morpholine", core_morpholine),
    ("pyrrolidine", core_pyrrolidine), ("tetrahydrofuran", core_tetrahydrofuran),
    ("tetrahydropyran", core_tetrahydropyran), ("cyclohexene", core_cyclohexene),
    ("cyclohexanone", core_cyclohexanone), ("norbornane", core_norbornane),
    ("adamantane", core_adamantane), ("spiro", core_spiro),
]

AROMATIC_CORE_NAMES = {
    "benzene", "pyridine", "pyrimidine", "pyrazine", "pyridazine", "pyrrole",
    "furan", "thiophene", "imidazole", "pyrazole", "oxazole", "isoxazole",
    "thiazole", "triazole", "naphthalene", "quinoline", "indole",
    "benzofuran", "benzothiophene", "benzimidazole", "pyridone",
}


def _sub_from_spec(atoms, bonds):
    """atoms: list of (element, charge, h); bonds: (i, j, order)."""
    def make():
        b = Builder()
        ids = [b.atom(el, charge=chg, h=h) for el, chg, h in atoms]
        for i, j, order in bonds:
            b.bond(ids[i], ids[j], order)
        return b, ids[0]
    return make


SUBSTITUENTS = [
    ("methyl", _sub_from_spec([("C", 0, None)], [])),
    ("ethyl", _sub_from_spec([("C", 0, None), ("C", 0, None)], [(0, 1, 1)])),
    ("propyl", _sub_from_spec([("C", 0, None)] * 3, [(0, 1, 1), (1, 2, 1)])),
    ("isopropyl", _sub_from_spec([("C", 0, None)] * 3, [(0, 1, 1), (0, 2, 1)])),
    ("tbutyl", _sub_from_spec([("C", 0, None)] * 4, [(0, 1, 1), (0, 2, 1), (0, 3, 1)])),
    ("hydroxy", _sub_from_spec([("O", 0, None)], [])),
    ("methoxy", _sub_from_spec([("O", 0, None), ("C", 0, None)], [(0, 1, 1)])),
    ("amino", _sub_from_spec([("N", 0, None)], [])),
    ("dimethylamino", _sub_from_spec([("N", 0, None), ("C", 0, None), ("C", 0, None)],
                                     [(0, 1, 1), (0, 2, 1)])),
    ("fluoro", _sub_from_spec([("F", 0, None)], [])),
    ("chloro", _sub_from_spec([("Cl", 0, None)], [])),
    ("bromo", _sub_from_spec([("Br", 0, None)], [])),
    ("iodo", _sub_from_spec([("I", 0, None)], [])),
    ("nitrile", _sub_from_spec([("C", 0, None), ("N", 0, None)], [(0, 1, 3)])),
    ("carboxyl", _sub_from_spec([("C", 0, None), ("O", 0, None), ("O", 0, None)],
                                [(0, 1, 2), (0, 2, 1)])),
    ("carboxylate", _sub_from_spec([("C", 0, None), ("O", 0, None), ("O", -1, 0)],
                                   [(0, 1, 2), (0, 2, 1)])),
    ("ester", _sub_from_spec([("C", 0, None), ("O", 0, None), ("O", 0, None), ("C", 0, None)],
                             [(0, 1, 2), (0, 2, 1), (2, 3, 1)])),
    ("amide", _sub_from_spec([("C", 0, None), ("O", 0, None), ("N", 0, None)],
                             [(0, 1, 2), (0, 2, 1)])),
    ("acetyl", _sub_from_spec([("C", 0, None), ("O", 0, None), ("C", 0, None)],
                              [(0, 1, 2), (0, 2, 1)])),
    ("acetamido", _sub_from_spec(
        [("N", 0, None), ("C", 0, None), ("O", 0, None), ("C", 0, None)],
        [(0, 1, 1), (1, 2, 2), (1, 3, 1)])),
    ("nitro", _sub_from_spec([("N", 1, 0), ("O", 0, None), ("O", -1, 0)],
                             [(0, 1, 2), (0, 2, 1)])),
    ("cf3", _sub_from_spec([("C", 0, None), ("F", 0, None), ("F", 0, None), ("F", 0, None)],
                           [(0, 1, 1), (0, 2, 1), (0, 3, 1)])),
    ("sulfonamide", _sub_from_spec(
        [("S", 0, None), ("O", 0, None), ("O", 0, None), ("N", 0, None)],
        [(0, 1, 2), (0, 2, 2), (0, 3, 1)])),
    ("methylsulfonyl", _sub_from_spec(
        [("S", 0, None), ("O", 0, None), ("O", 0, None), ("C", 0, None)],
        [(0, 1, 2), (0, 2, 2), (0, 3, 1)])),
    ("vinyl", _sub_from_spec([("C", 0, None), ("C", 0, None)], [(0, 1, 2)])),
    ("hydroxymethyl", _sub_from_spec([("C", 0, None), ("O", 0, None)], [(0, 1, 1)])),
    ("thiomethyl", _sub_from_spec([("S", 0, None), ("C", 0, None)], [(0, 1, 1)])),
    ("ammonium", _sub_from_spec([("N", 1, 3)], [])),
]

#  linker chains between two cores: (elements, orders, pendants on first atom)
LINKERS = [
    ("direct", None),
    ("methylene", (["C"], [], [])),
    ("ethylene", (["C", "C"], [1], [])),
    ("ether", (["O"], [], [])),
    ("amine", (["N"], [], [])),
    ("thio", (["S"], [], [])),
    ("carbonyl", (["C"], [], [("O", 2)])),
    ("amide", (["C", "N"], [1], [("O", 2)])),
    ("vinylene", (["C", "C"], [2], [])),
    ("ethynylene", (["C", "C"], [3], [])),
    ("oxymethyl", (["O", "C"], [1], [])),
]


def _attach(b: Builder, site: int, sub_make) -> bool:
    """Attach a substituent if the site still has a hydrogen to give up."""
    if hydrogen_count(b.g, site) < 1:
        return False
    sb, root = sub_make()
    mapping = b.merge(sb)
    b.bond(site, mapping[root], 1)
    node = b.g.nodes[site]
    if node.get("h") is not None:
        node["h"] = max(0, node["h"] - 1)
    return True


def assemble(core_a, sub_picks_a, linker=None, core_b=None, sub_picks_b=()):
    """Build one molecule graph; sub_picks are (site_index, substituent) pairs."""
    b, sites_a = core_a[1]()
    used: set[int] = set()
    for site_pick, sub in sub_picks_a:
        site = sites_a[site_pick % len(sites_a)]
        if site in used:
            continue
        if _attach(b, site, sub[1]):
            used.add(site)

    if core_b is not None:
        site_a = next(
            (s for s in sites_a if s not in used and hydrogen_count(b.g, s) >= 1), None
        )
        if site_a is None:
            return b.g  # fully substituted; keep the single-core molecule
        cb, sites_b_local = core_b[1]()
        mapping = b.merge(cb)
        sites_b = [mapping[s] for s in sites_b_local]
        site_b = sites_b[0]
        used.add(site_a)
        spec = linker[1] if linker else None
        if spec is None:
            b.bond(site_a, site_b, 1)
        else:
            elements, orders, pendants = spec
            chain = [b.atom(el) for el in elements]
            for i in range(len(chain) - 1):
                b.bond(chain[i], chain[i + 1], orders[i] if orders else 1)
            b.bond(site_a, chain[0], 1)
            b.bond(chain[-1], site_b, 1)
            for el, order in pendants:
                b.bond(chain[0], b.atom(el), order)
        busy = {site_b}
        for site_pick, sub in sub_picks_b:
            site = sites_b[site_pick % len(sites_b)]
            if site in busy:
                continue
            if _attach(b, site, sub[1]):
                busy.add(site)
    return b.g


# independent property computations

def bond_order_sum(g, node) -> int:
    total = sum(1.5 if g.edges[e]["order"] == "ar" else float(g.edges[e]["order"])
                for e in g.edges(node))
    return math.ceil(total - 1e-9)


def hydrogen_count(g, node) -> int:
    attrs = g.nodes[node]
    if attrs.get("h") is not None:
        return attrs["h"]
    element = attrs["element"]
    charge = attrs["charge"]
    shift = -charge if element == "B" else charge
    allowed = tuple(max(0, v + shift) for v in VALENCE[element])
    used = bond_order_sum(g, node)
    if attrs["aromatic"]:
        return max(0, allowed[0] - used)
    fitting = [v for v in allowed if v >= used]
    assert fitting, f"assembled impossible valence: {element} with {used} bonds"
    return min(fitting) - used


def mol_weight(g) -> float:
    return sum(
        MASS[g.nodes[n]["element"]] + hydrogen_count(g, n) * MASS["H"] for n in g.nodes()
    )


def scaffold_graph(g: nx.Graph) -> nx.Graph:
    bridges = {frozenset(e) for e in nx.bridges(g)}
    cyclic_nodes = set()
    for a, b in g.edges():
        if frozenset((a, b)) not in bridges:
            cyclic_nodes.update((a, b))
    if not cyclic_nodes:
        return nx.Graph()

    work = g.copy()
    changed = True
    while changed:
        changed = False
        for node in sorted(work.nodes()):
            if node not in cyclic_nodes and work.degree(node) <= 1:
                work.remove_node(node)
                changed = True

    keep = set(work.nodes())
    for a, b in g.edges():
        if g.edges[a, b]["order"] in (2, 3):
            if a in keep and b not in keep:
                keep.add(b)
            elif b in keep and a not in keep:
                keep.add(a)

    out = g.subgraph(keep).copy()
    for node in out.nodes():
        lost = sum(1 for nbr in g.neighbors(node) if nbr not in keep)
        if lost:
            out.nodes[node]["h"] = hydrogen_count(g, node) + lost
    return out


def infer_bare_h(element, charge, orders, aromatic_written):
    """H count a reader infers for the bare symbol, None if bare is illegal."""
    if element not in ORGANIC or charge != 0:
        return None
    allowed = VALENCE[element]
    used = math.ceil(sum(1.5 if o == "ar" else float(o) for o in orders) - 1e-9)
    if aromatic_written:
        return max(0, allowed[0] - used)
    fitting = [v for v in allowed if v >= used]
    if not fitting:
        return None
    return min(fitting) - used


def kekule_assign(g: nx.Graph) -> set[frozenset]:
    """Choose double bonds pairing every pi-1 aromatic atom (backtracking)."""
    need = sorted(n for n, a in g.nodes(data=True) if a["aromatic"] and a.get("pi") == 1)
    need_set = set(need)
    adj = {
        n: sorted(
            m for m in g.neighbors(n)
            if m in need_set and g.edges[n, m]["order"] == "ar"
        )
        for n in need
    }
    matched: dict[int, int] = {}
    doubles: set[frozenset] = set()
    order = sorted(need, key=lambda n: (len(adj[n]), n))

    def backtrack(pos: int) -> bool:
        while pos < len(order) and order[pos] in matched:
            pos += 1
        if pos == len(order):
            return True
        node = order[pos]
        for nbr in adj[node]:
            if nbr in matched:
                continue
            matched[node] = nbr
            matched[nbr] = node
            doubles.add(frozenset((node, nbr)))
            if backtrack(pos + 1):
                return True
            del matched[node]
            del matched[nbr]
            doubles.discard(frozenset((node, nbr)))
        return False

    assert backtrack(0), "no Kekule assignment exists for this ring system"
    return doubles


def write_smiles(
    g: nx.Graph,
    rng: random.Random,
    kekule: bool = False,
    percent_digits: bool = False,
    explicit_h: bool = False,
) -> tuple[str, list[int]]:
    """Randomized-traversal writer; returns (text, atom emission order)."""
    if g.number_of_nodes() == 0:
        return "", []
    doubles = kekule_assign(g) if kekule else set()

    def written_order(a, b):
        o = g.edges[a, b]["order"]
        if o == "ar":
            return (2 if frozenset((a, b)) in doubles else 1) if kekule else "ar"
        return o

    def bond_text(a, b):
        o = written_order(a, b)
        if o == "ar":
            return ""
        if o == 1:
            both_arom = (not kekule) and g.nodes[a]["aromatic"] and g.nodes[b]["aromatic"]
            return "-" if both_arom else ""
        return "=" if o == 2 else "#"

    # pass 1: randomized DFS tree and back edges
    nodes = sorted(g.nodes())
    start = rng.choice(nodes)
    visited = {start}
    preorder = {start: 0}
    tree_children: dict[int, list[int]] = {n: [] for n in nodes}
    back_edges: list[tuple[int, int]] = []  # (later endpoint, earlier endpoint)
    used_edges: set[frozenset] = set()
    frames = [(start, iter(sorted(g.neighbors(start), key=lambda _: rng.random())))]
    while frames:
        v, it = frames[-1]
        advanced = False
        for w in it:
            e = frozenset((v, w))
            if e in used_edges:
                continue
            used_edges.add(e)
            if w in visited:
                back_edges.append((v, w))
            else:
                visited.add(w)
                preorder[w] = len(preorder)
                tree_children[v].append(w)
                frames.append((w, iter(sorted(g.neighbors(w), key=lambda _: rng.random()))))
                advanced = True
                break
        if not advanced:
            frames.pop()

    assert len(visited) == g.number_of_nodes(), "molecule graph is disconnected"

    opens_at: dict[int, list[frozenset]] = {n: [] for n in nodes}
    closes_at: dict[int, list[frozenset]] = {n: [] for n in nodes}
    for v, w in back_edges:
        first, second = (w, v) if preorder[w] < preorder[v] else (v, w)
        opens_at[first].append(frozenset((v, w)))
        closes_at[second].append(frozenset((v, w)))

    # pass 2: emission
    pieces: list[str] = []
    emitted: list[int] = []
    digit_of: dict[frozenset, int] = {}
    taken: set[int] = set()
    h_budget = 2 if explicit_h else 0

    def digit_text(d: int) -> str:
        return f"%{d:02d}" if (d > 9 or percent_digits) else str(d)

    def atom_token(node: int, emit_h: int) -> str:
        attrs = g.nodes[node]
        element, charge = attrs["element"], attrs["charge"]
        aromatic_written = attrs["aromatic"] and not kekule
        h_total = hydrogen_count(g, node)
        orders = [written_order(node, nbr) for nbr in g.neighbors(node)]
        inferred = infer_bare_h(element, charge, orders, aromatic_written)
        needs_bracket = (
            charge != 0
            or element not in ORGANIC
            or inferred is None
            or inferred != h_total
            or (aromatic_written and element.lower() not in AROMATIC_LOWER)
        )
        symbol = element.lower() if aromatic_written else element
        if not needs_bracket:
            return symbol
        shown = h_total - emit_h
        text = "[" + symbol
        if shown == 1:
            text += "H"
        elif shown > 1:
            text += f"H{shown}"
        if charge:
            sign = "+" if charge > 0 else "-"
            text += sign if abs(charge) == 1 else f"{sign}{abs(charge)}"
        return text + "]"

    def emit(v: int) -> None:
        nonlocal h_budget
        emitted.append(v)
        emit_h = 0
        if (
            h_budget > 0
            and not g.nodes[v]["aromatic"]
            and g.nodes[v]["charge"] == 0
            and g.nodes[v].get("h") is None
            and hydrogen_count(g, v) >= 1
        ):
            emit_h = min(hydrogen_count(g, v), h_budget)
            h_budget -= emit_h
        pieces.append(atom_token(v, emit_h))
        for e in opens_at[v]:
            digit = 1
            while digit in taken:
                digit += 1
            taken.add(digit)
            digit_of[e] = digit
            a, b = tuple(e)
            pieces.append(bond_text(a, b) + digit_text(digit))
        for e in closes_at[v]:
            digit = digit_of[e]
            taken.discard(digit)
            a, b = tuple(e)
            pieces.append(bond_text(a, b) + digit_text(digit))
        for _ in range(emit_h):
            pieces.append("([H])")
        children = tree_children[v]
        for i, w in enumerate(children):
            if i < len(children) - 1:
                pieces.append("(" + bond_text(v, w))
                emit(w)
                pieces.append(")")
            else:
                pieces.append(bond_text(v, w))
                emit(w)

    emit(start)
    return "".join(pieces), emitted


def oracle_fields(g: nx.Graph, smiles: str, order: list[int]):
    scaf = scaffold_graph(g)
    if scaf.number_of_nodes():
        relabeled = nx.convert_node_labels_to_integers(scaf, ordering="sorted")
        scaf_smiles, _ = write_smiles(relabeled, random.Random(7))
    else:
        scaf_smiles = ""
    return [
        smiles,
        str(g.number_of_nodes()),
        str(g.number_of_edges()),
        ",".join(str(hydrogen_count(g, n)) for n in order),
        "".join("1" if g.nodes[n]["aromatic"] else "0" for n in order),
        str(len(nx.cycle_basis(g))),
        f"{mol_weight(g):.4f}",
        scaf_smiles,
    ]


def _sub_by_name(name: str):
    return next(s for s in SUBSTITUENTS if s[0] == name)


def sanity_checks() -> None:
    """Anchor the generator against hand-known formulas before trusting it."""
    b, _ = core_benzene()
    assert abs(mol_weight(b.g) - 78.114) < 0.005  # C6H6
    b, _ = core_pyrrole()
    assert abs(mol_weight(b.g) - 67.091) < 0.005  # C4H5N
    b, _ = core_pyridine()
    assert abs(mol_weight(b.g) - 79.102) < 0.005  # C5H5N
    b, _ = core_adamantane()
    assert abs(mol_weight(b.g) - 136.238) < 0.005  # C10H16
    assert len(nx.cycle_basis(b.g)) == 3
    g = assemble(("benzene", core_benzene), [(0, _sub_by_name("carboxyl"))])
    assert abs(mol_weight(g) - 122.123) < 0.005  # benzoic acid C7H6O2
    g = assemble(("benzene", core_benzene), [(0, _sub_by_name("acetamido"))])
    assert abs(mol_weight(g) - 135.166) < 0.005  # acetanilide C8H9NO


def _rand_subs(rng: random.Random, max_subs: int):
    picks = []
    for _ in range(rng.randint(0, max_subs)):
        picks.append((rng.randrange(100), SUBSTITUENTS[rng.randrange(len(SUBSTITUENTS))]))
    return picks


def generate_molecule(rng: random.Random):
    """One random assembly; returns (graph, core names used)."""
    core_a = CORES[rng.randrange(len(CORES))]
    if rng.random() < 0.45:
        core_b = CORES[rng.randrange(len(CORES))]
        linker = LINKERS[rng.randrange(len(LINKERS))]
        g = assemble(core_a, _rand_subs(rng, 2), linker, core_b, _rand_subs(rng, 1))
        names = (core_a[0], core_b[0])
    else:
        g = assemble(core_a, _rand_subs(rng, 3))
        names = (core_a[0],)
    return g, names


def _write_counterion(rng: random.Random):
    if rng.random() < 0.5:
        b = Builder()
        b.atom("Cl", charge=-1, h=0)
        return write_smiles(b.g, rng)[0]
    b = Builder()
    b.atom("Na", charge=1, h=0)
    return write_smiles(b.g, rng)[0]


def build_oracle(path: str, count: int = 520, seed: int = 20240801) -> None:
    rng = random.Random(seed)
    rows = []
    seen = set()
    while len(rows) < count:
        g, names = generate_molecule(rng)
        has_aromatic = any(a["aromatic"] for _, a in g.nodes(data=True))
        kekule = has_aromatic and rng.random() < 0.35
        smiles, order = write_smiles(
            g,
            rng,
            kekule=kekule,
            percent_digits=rng.random() < 0.06,
            explicit_h=rng.random() < 0.06,
        )
        if smiles in seen:
            continue
        has_charge = any(a["charge"] != 0 for _, a in g.nodes(data=True))
        if not has_charge and rng.random() < 0.05:
            ion = _write_counterion(rng)
            smiles = f"{ion}.{smiles}" if rng.random() < 0.5 else f"{smiles}.{ion}"
        seen.add(smiles)
        rows.append("\t".join(oracle_fields(g, smiles, order)))

    with open(path, "w", encoding="utf-8") as fh:
        fh.write("smiles\tn_atoms\tn_bonds\timplicit_h_list\taromatic_flags\tn_rings\tmw\tscaffold_smiles\n")
        fh.write("\n".join(rows))
        fh.write("\n")


def label_for(g: nx.Graph, names, rng: random.Random) -> int:
    """Structure-derived binary label with mild noise (permeability-style)."""
    n_aromatic = sum(1 for _, a in g.nodes(data=True) if a["aromatic"])
    donors = sum(
        1 for n, a in g.nodes(data=True)
        if a["element"] in ("N", "O") and hydrogen_count(g, n) > 0
    )
    charged = sum(1 for _, a in g.nodes(data=True) if a["charge"] != 0)
    mw = mol_weight(g)
    score = (
        0.55 * n_aromatic
        - 1.1 * donors
        - 2.2 * charged
        - 0.022 * (mw - 260.0)
        + rng.gauss(0.0, 1.4)
    )
    label = 1 if score > 3.0 else 0
    if rng.random() < 0.06:
        label = 1 - label
    return label


def build_dataset(path: str, count: int = 2000, seed: int = 20240802) -> None:
    rng = random.Random(seed)
    rows = []
    seen = set()
    while len(rows) < count:
        g, names = generate_molecule(rng)
        smiles, _ = write_smiles(g, rng, kekule=rng.random() < 0.25)
        if smiles in seen:
            continue
        seen.add(smiles)
        rows.append(f"{smiles},{label_for(g, names, rng)}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("smiles,permeable\n")
        fh.write("\n".join(rows))
        fh.write("\n")


def main() -> None:
    sanity_checks()
    here = os.path.dirname(os.path.abspath(__file__))
    data_dir = os.path.join(here, "..", "tests", "data")
    os.makedirs(data_dir, exist_ok=True)
    oracle = os.path.join(data_dir, "parser_oracle.tsv")
    dataset = os.path.join(data_dir, "bbbp_like.csv")
    build_oracle(oracle)
    build_dataset(dataset)
    print(f"wrote {oracle}")
    print(f"wrote {dataset}")


if __name__ == "__main__":
    main()
