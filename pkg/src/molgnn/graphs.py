"""Graph construction and batching.

Three graph schemes are supported. ``molecular`` graphs mirror chemical
bonds, ``complete`` graphs connect every atom pair, and ``distance`` graphs
connect pairs within a Euclidean cutoff of supplied 3-D coordinates. Every
undirected relation is stored as two directed edges so message passing is a
plain gather over incoming edges; no self-loops are stored (models add their
own).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .molecule import Molecule

GRAPH_SCHEMES = ("molecular", "complete", "distance")
DEFAULT_DISTANCE_CUTOFF = 5.0  # Angstroms


class GraphError(ValueError):
    pass


@dataclass
class MolGraph:
    num_nodes: int
    src: np.ndarray  # int64 [num_edges]
    dst: np.ndarray  # int64 [num_edges]
    node_feats: np.ndarray  # float64 [num_nodes, d_node]
    edge_feats: np.ndarray | None = None  # float64 [num_edges, d_edge]

    @property
    def num_edges(self) -> int:
        return int(self.src.shape[0])


@dataclass
class GraphBatch:
    num_nodes: int
    num_graphs: int
    src: np.ndarray
    dst: np.ndarray
    node_feats: np.ndarray
    edge_feats: np.ndarray | None
    node_offsets: np.ndarray  # int64 [num_graphs], first node of each graph
    graph_id: np.ndarray  # int64 [num_nodes]
    sizes: list[tuple[int, int]] = field(default_factory=list)  # (nodes, edges)


def directed_bond_edges(mol: Molecule) -> tuple[np.ndarray, np.ndarray]:
    """Both directions of every bond, bond i at rows 2i and 2i+1."""
    src = np.empty(2 * mol.num_bonds, dtype=np.int64)
    dst = np.empty(2 * mol.num_bonds, dtype=np.int64)
    for i, bond in enumerate(mol.bonds):
        src[2 * i], dst[2 * i] = bond.a, bond.b
        src[2 * i + 1], dst[2 * i + 1] = bond.b, bond.a
    return src, dst


def build_graph(
    mol: Molecule,
    node_feats: np.ndarray,
    edge_feats: np.ndarray | None = None,
    scheme: str = "molecular",
    coords: np.ndarray | None = None,
    cutoff: float | None = None,
) -> MolGraph:
    """Construct a directed graph for one molecule.

    ``node_feats`` rows follow atom order. For the molecular scheme
    ``edge_feats`` rows must follow the directed edge order produced by
    :func:`directed_bond_edges`; other schemes carry no edge features.
    """
    n = mol.num_atoms
    if node_feats.shape[0] != n:
        raise GraphError(f"node feature rows ({node_feats.shape[0]}) != atom count ({n})")

    if scheme == "molecular":
        src, dst = directed_bond_edges(mol)
        if edge_feats is not None and edge_feats.shape[0] != src.shape[0]:
            raise GraphError(
                f"edge feature rows ({edge_feats.shape[0]}) != directed edge count ({src.shape[0]})"
            )
        return MolGraph(n, src, dst, node_feats, edge_feats)

    if scheme == "complete":
        pairs = [(i, j) for i in range(n) for j in range(n) if i != j]
        src = np.array([p[0] for p in pairs], dtype=np.int64)
        dst = np.array([p[1] for p in pairs], dtype=np.int64)
        return MolGraph(n, src, dst, node_feats, None)

    if scheme == "distance":
        if coords is None:
            raise GraphError("distance scheme requires coordinates")
        coords = np.asarray(coords, dtype=np.float64)
        if coords.shape != (n, 3):
            raise GraphError(f"coordinates shape {coords.shape} != ({n}, 3)")
        if cutoff is None:
            cutoff = DEFAULT_DISTANCE_CUTOFF
        if cutoff <= 0:
            raise GraphError(f"cutoff must be positive, got {cutoff}")
        diff = coords[:, None, :] - coords[None, :, :]
        dist = np.sqrt((diff * diff).sum(axis=2))
        keep = (dist <= cutoff) & ~np.eye(n, dtype=bool)
        src, dst = np.nonzero(keep)
        return MolGraph(n, src.astype(np.int64), dst.astype(np.int64), node_feats, None)

    raise GraphError(f"unknown graph scheme '{scheme}', expected one of {GRAPH_SCHEMES}")


def batch_graphs(graphs: list[MolGraph]) -> GraphBatch:
    """Concatenate graphs with index shifting; order is preserved."""
    if not graphs:
        raise GraphError("cannot batch an empty graph list")
    node_width = graphs[0].node_feats.shape[1]
    has_edge_feats = graphs[0].edge_feats is not None
    edge_width = graphs[0].edge_feats.shape[1] if has_edge_feats else None
    for g in graphs:
        if g.node_feats.shape[1] != node_width:
            raise GraphError(
                f"node feature widths differ: {node_width} vs {g.node_feats.shape[1]}"
            )
        if (g.edge_feats is not None) != has_edge_feats:
            raise GraphError("cannot mix graphs with and without edge features")
        if has_edge_feats and g.edge_feats.shape[1] != edge_width:
            raise GraphError(
                f"edge feature widths differ: {edge_width} vs {g.edge_feats.shape[1]}"
            )

    offsets = np.zeros(len(graphs), dtype=np.int64)
    total = 0
    src_parts, dst_parts, gid_parts = [], [], []
    for i, g in enumerate(graphs):
        offsets[i] = total
        src_parts.append(g.src + total)
        dst_parts.append(g.dst + total)
        gid_parts.append(np.full(g.num_nodes, i, dtype=np.int64))
        total += g.num_nodes

    return GraphBatch(
        num_nodes=total,
        num_graphs=len(graphs),
        src=np.concatenate(src_parts) if src_parts else np.zeros(0, np.int64),
        dst=np.concatenate(dst_parts) if dst_parts else np.zeros(0, np.int64),
        node_feats=np.concatenate([g.node_feats for g in graphs], axis=0),
        edge_feats=(
            np.concatenate([g.edge_feats for g in graphs], axis=0) if has_edge_feats else None
        ),
        node_offsets=offsets,
        graph_id=np.concatenate(gid_parts),
        sizes=[(g.num_nodes, g.num_edges) for g in graphs],
    )


def unbatch_graphs(batch: GraphBatch) -> list[MolGraph]:
    """Exact inverse of :func:`batch_graphs`."""
    out = []
    node_pos = 0
    edge_pos = 0
    for i, (n_nodes, n_edges) in enumerate(batch.sizes):
        offset = batch.node_offsets[i]
        out.append(
            MolGraph(
                num_nodes=n_nodes,
                src=batch.src[edge_pos : edge_pos + n_edges] - offset,
                dst=batch.dst[edge_pos : edge_pos + n_edges] - offset,
                node_feats=batch.node_feats[node_pos : node_pos + n_nodes].copy(),
                edge_feats=(
                    batch.edge_feats[edge_pos : edge_pos + n_edges].copy()
                    if batch.edge_feats is not None
                    else None
                ),
            )
        )
        node_pos += n_nodes
        edge_pos += n_edges
    return out


def read_coordinate_file(path) -> list[np.ndarray]:
    """Read per-molecule coordinate blocks.

    One ``x y z`` line per atom, molecules separated by blank lines, in the
    same order as the dataset they accompany.
    """
    blocks: list[np.ndarray] = []
    current: list[list[float]] = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            stripped = line.strip()
            if not stripped:
                if current:
                    blocks.append(np.array(current, dtype=np.float64))
                    current = []
                continue
            parts = stripped.split()
            if len(parts) != 3:
                raise GraphError(f"coordinate line needs three values: {stripped!r}")
            current.append([float(p) for p in parts])
    if current:
        blocks.append(np.array(current, dtype=np.float64))
    return blocks
