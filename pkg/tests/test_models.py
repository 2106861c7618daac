"""Layer semantics, model invariants, gradient flow."""

import numpy as np
import pytest

import molgnn.autodiff as ad
from molgnn import parse_smiles
from molgnn.autodiff import Tensor, backward, constant, grad_check, tensor, zero_grad
from molgnn.featurize import atom_features, bond_features, morgan_fingerprint
from molgnn.graphs import MolGraph, batch_graphs, build_graph
from molgnn.models import (
    ModelError,
    ModelSpec,
    check_params,
    expected_param_shapes,
    gat_layer_forward,
    gcn_layer_forward,
    init_params,
    model_forward,
    mpnn_forward,
    nf_layer_forward,
    readout,
)


def rand(shape, seed):
    return np.random.default_rng(seed).standard_normal(shape)


def toy_graph(n_nodes, edges, node_dim=4, edge_dim=3, seed=0):
    rng = np.random.default_rng(seed)
    src = np.array([e[0] for e in edges], dtype=np.int64)
    dst = np.array([e[1] for e in edges], dtype=np.int64)
    return MolGraph(
        num_nodes=n_nodes,
        src=src,
        dst=dst,
        node_feats=rng.standard_normal((n_nodes, node_dim)),
        edge_feats=rng.standard_normal((len(edges), edge_dim)),
    )


def permute_graph(g: MolGraph, perm: list[int]) -> MolGraph:
    inv = np.argsort(perm)
    order = np.argsort(perm[g.src] * 10000 + perm[g.dst], kind="stable")
    node_feats = np.empty_like(g.node_feats)
    for old, new in enumerate(perm):
        node_feats[new] = g.node_feats[old]
    src = perm[g.src][order]
    dst = perm[g.dst][order]
    edge_feats = g.edge_feats[order] if g.edge_feats is not None else None
    return MolGraph(g.num_nodes, src, dst, node_feats, edge_feats)


def mol_batch(smiles_list):
    graphs = []
    for s in smiles_list:
        mol = parse_smiles(s)
        graphs.append(build_graph(mol, atom_features(mol), bond_features(mol)))
    return batch_graphs(graphs)


class TestGcnLayer:
    def test_isolated_node_identity_weight(self):
        g = MolGraph(1, np.zeros(0, np.int64), np.zeros(0, np.int64), rand((1, 3), 0))
        batch = batch_graphs([g])
        h = constant(batch.node_feats)
        out = gcn_layer_forward(batch, h, tensor(np.eye(3)), tensor(np.zeros((1, 3))))
        assert np.allclose(out.value, np.maximum(batch.node_feats, 0.0), atol=1e-14)

    def test_two_isolated_nodes_independent(self):
        g = MolGraph(2, np.zeros(0, np.int64), np.zeros(0, np.int64), rand((2, 3), 1))
        batch = batch_graphs([g])
        w, b = tensor(rand((3, 3), 2)), tensor(np.zeros((1, 3)))
        both = gcn_layer_forward(batch, constant(batch.node_feats), w, b).value
        for i in range(2):
            solo = MolGraph(1, np.zeros(0, np.int64), np.zeros(0, np.int64),
                            batch.node_feats[i : i + 1])
            one = gcn_layer_forward(batch_graphs([solo]), constant(solo.node_feats), w, b).value
            assert np.allclose(both[i], one[0], atol=1e-12)

    def test_star_normalization_hand_computed(self):
        # center 0 with leaves 1 and 2; degrees with self loop: 3, 2, 2
        edges = [(0, 1), (1, 0), (0, 2), (2, 0)]
        g = toy_graph(3, edges, node_dim=2, seed=3)
        batch = batch_graphs([g])
        h = batch.node_feats
        out = gcn_layer_forward(
            batch, constant(h), tensor(np.eye(2)), tensor(np.zeros((1, 2)))
        ).value
        expected_center = h[0] / 3.0 + h[1] / np.sqrt(6.0) + h[2] / np.sqrt(6.0)
        expected_leaf1 = h[1] / 2.0 + h[0] / np.sqrt(6.0)
        assert np.allclose(out[0], np.maximum(expected_center, 0.0), atol=1e-12)
        assert np.allclose(out[1], np.maximum(expected_leaf1, 0.0), atol=1e-12)


class TestGatLayer:
    def test_isolated_node_attention_is_one(self):
        # with only the self loop, softmax over a singleton must give exactly 1,
        # so the output is relu(W h) regardless of the attention vectors
        g = MolGraph(1, np.zeros(0, np.int64), np.zeros(0, np.int64), rand((1, 3), 0))
        batch = batch_graphs([g])
        w = tensor(rand((3, 3), 1))
        out = gat_layer_forward(
            batch, constant(batch.node_feats), [w],
            [tensor(rand((3, 1), 2))], [tensor(rand((3, 1), 3))],
        ).value
        expected = np.maximum(batch.node_feats @ w.value, 0.0)
        assert np.array_equal(out, expected)

    def test_identical_neighbors_uniform_attention(self):
        # all nodes share one feature vector, so every attention score ties
        # and the receiving node averages: output = relu(W h) exactly
        feats = np.tile(rand((1, 3), 4), (3, 1))
        edges = [(0, 1), (1, 0), (0, 2), (2, 0), (1, 2), (2, 1)]
        g = MolGraph(3, np.array([e[0] for e in edges]), np.array([e[1] for e in edges]), feats)
        batch = batch_graphs([g])
        w = tensor(rand((3, 3), 5))
        out = gat_layer_forward(
            batch, constant(batch.node_feats), [w],
            [tensor(rand((3, 1), 6))], [tensor(rand((3, 1), 7))],
        ).value
        expected = np.maximum(feats @ w.value, 0.0)
        assert np.allclose(out, expected, atol=1e-12)

    def test_two_heads_concatenate(self):
        batch = mol_batch(["CCO"])
        spec = ModelSpec(kind="gat", n_tasks=1, hidden_size=8, num_heads=2, num_rounds=1)
        params = init_params(spec, 0)
        h = gat_layer_forward(
            batch,
            constant(batch.node_feats),
            [params["layer0.head0.weight"], params["layer0.head1.weight"]],
            [params["layer0.head0.attn_src"], params["layer0.head1.attn_src"]],
            [params["layer0.head0.attn_dst"], params["layer0.head1.attn_dst"]],
        )
        assert h.shape == (3, 16)


class TestNfLayer:
    def test_isolated_node(self):
        g = MolGraph(1, np.zeros(0, np.int64), np.zeros(0, np.int64), rand((1, 3), 0))
        batch = batch_graphs([g])
        w, b = tensor(rand((3, 3), 1)), tensor(rand((1, 3), 2))
        out = nf_layer_forward(batch, constant(batch.node_feats), w, b).value
        expected = 1.0 / (1.0 + np.exp(-(batch.node_feats @ w.value + b.value)))
        assert np.allclose(out, expected, atol=1e-12)

    def test_equal_neighbor_doubles_sum(self):
        h0 = rand((1, 3), 3)
        feats = np.tile(h0, (2, 1))
        g = MolGraph(2, np.array([0, 1]), np.array([1, 0]), feats)
        batch = batch_graphs([g])
        w, b = tensor(rand((3, 3), 4)), tensor(rand((1, 3), 5))
        out = nf_layer_forward(batch, constant(batch.node_feats), w, b).value
        expected = 1.0 / (1.0 + np.exp(-((2.0 * h0) @ w.value + b.value)))
        assert np.allclose(out[0], expected[0], atol=1e-12)


class TestMpnn:
    def make_params(self, spec):
        return init_params(spec, seed=9)

    def test_zero_rounds_is_projection(self):
        spec = ModelSpec(kind="mpnn", n_tasks=1, node_feat_dim=4, edge_feat_dim=3, hidden_size=5)
        params = self.make_params(spec)
        g = toy_graph(3, [(0, 1), (1, 0)], node_dim=4, edge_dim=3, seed=1)
        batch = batch_graphs([g])
        out = mpnn_forward(batch, constant(batch.node_feats), constant(batch.edge_feats), params, 0)
        expected = batch.node_feats @ params["proj.weight"].value + params["proj.bias"].value
        assert np.allclose(out.value, expected, atol=1e-14)

    def test_no_edges_appl_gru_with_zero_messages(self):
        spec = ModelSpec(kind="mpnn", n_tasks=1, node_feat_dim=4, edge_feat_dim=3, hidden_size=5)
        params = self.make_params(spec)
        g = MolGraph(2, np.zeros(0, np.int64), np.zeros(0, np.int64),
                     rand((2, 4), 2), np.zeros((0, 3)))
        batch = batch_graphs([g])
        out = mpnn_forward(batch, constant(batch.node_feats), constant(batch.edge_feats), params, 2)
        h = constant(batch.node_feats @ params["proj.weight"].value + params["proj.bias"].value)
        zero = constant(np.zeros((2, 5)))
        for _ in range(2):
            h = ad.gru_cell(
                zero, h,
                params["gru.wz"], params["gru.uz"], params["gru.bz"],
                params["gru.wr"], params["gru.ur"], params["gru.br"],
                params["gru.wc"], params["gru.uc"], params["gru.bc"],
            )
        assert np.allclose(out.value, h.value, atol=1e-14)

    def test_missing_edge_features_rejected(self):
        spec = ModelSpec(kind="mpnn", n_tasks=1, node_feat_dim=4, edge_feat_dim=3)
        params = self.make_params(spec)
        g = toy_graph(2, [(0, 1), (1, 0)], node_dim=4, edge_dim=3)
        batch = batch_graphs([g])
        with pytest.raises(ModelError):
            mpnn_forward(batch, constant(batch.node_feats), None, params, 1)

    def test_one_round_scalar_hand_trace(self):
        # hidden size 1: every weight is a scalar, so one message round can be
        # traced with plain arithmetic
        spec = ModelSpec(kind="mpnn", n_tasks=1, node_feat_dim=1, edge_feat_dim=1, hidden_size=1)
        values = [0.3, -0.2, 0.1, 0.4, 0.25, -0.3, 0.2, 0.5, -0.4, 0.6, 0.15]
        params = {
            name: Tensor(np.full(shape, values[i % len(values)] + 0.01 * i), requires_grad=True)
            for i, (name, shape) in enumerate(sorted(expected_param_shapes(spec).items()))
        }
        g = MolGraph(2, np.array([0]), np.array([1]), np.array([[1.5], [-0.5]]),
                     np.array([[2.0]]))
        batch = batch_graphs([g])
        out = mpnn_forward(batch, constant(batch.node_feats), constant(batch.edge_feats),
                           params, 1).value

        def val(name):
            return params[name].value[0, 0]

        def sig(v):
            return 1.0 / (1.0 + np.exp(-v))

        h = np.array([1.5, -0.5]) * val("proj.weight") + val("proj.bias")
        edge_hidden = max(0.0, 2.0 * val("edge.w1") + val("edge.b1"))
        edge_mat = edge_hidden * val("edge.w2") + val("edge.b2")
        messages = np.array([0.0, edge_mat * h[0]])  # single edge 0 -> 1
        expected = []
        for i in range(2):
            m, hh = messages[i], h[i]
            z = sig(m * val("gru.wz") + hh * val("gru.uz") + val("gru.bz"))
            r = sig(m * val("gru.wr") + hh * val("gru.ur") + val("gru.br"))
            c = np.tanh(m * val("gru.wc") + (r * hh) * val("gru.uc") + val("gru.bc"))
            expected.append((1 - z) * hh + z * c)
        assert np.allclose(out.ravel(), expected, atol=1e-12)


class TestReadout:
    def test_sum_invariant_under_permutation(self):
        g = toy_graph(4, [(0, 1), (1, 0)], node_dim=3, seed=0)
        batch = batch_graphs([g])
        base = readout(batch, constant(batch.node_feats), "sum").value
        perm = np.array([2, 0, 3, 1])
        g2 = permute_graph(g, perm)
        batch2 = batch_graphs([g2])
        again = readout(batch2, constant(batch2.node_feats), "sum").value
        assert np.allclose(base, again, atol=1e-12)

    def test_mean_of_identical_vectors(self):
        v = rand((1, 3), 1)
        g = MolGraph(3, np.zeros(0, np.int64), np.zeros(0, np.int64), np.tile(v, (3, 1)))
        batch = batch_graphs([g])
        out = readout(batch, constant(batch.node_feats), "mean").value
        assert np.allclose(out, v, atol=1e-14)

    def test_two_graphs_two_rows(self):
        batch = mol_batch(["CCO", "c1ccccc1"])
        for kind in ("sum", "mean", "max"):
            assert readout(batch, constant(batch.node_feats), kind).shape == (2, 74)

    def test_weighted_sum_needs_gate(self):
        batch = mol_batch(["C"])
        with pytest.raises(ModelError):
            readout(batch, constant(batch.node_feats), "weighted_sum")

    def test_unknown_kind(self):
        batch = mol_batch(["C"])
        with pytest.raises(ModelError):
            readout(batch, constant(batch.node_feats), "set2set")


class TestModelForward:
    SMILES = ["CCO", "c1ccccc1", "CC(=O)O", "C"]

    @pytest.mark.parametrize("kind", ["gcn", "gat", "nf", "mpnn"])
    def test_output_shape(self, kind):
        batch = mol_batch(self.SMILES)
        spec = ModelSpec(kind=kind, n_tasks=3, hidden_size=8, num_heads=2)
        out = model_forward(spec, init_params(spec, 0), batch)
        assert out.shape == (4, 3)

    def test_ecfp_shape_and_modality(self):
        spec = ModelSpec(kind="ecfp-mlp", n_tasks=2, fp_bits=256)
        params = init_params(spec, 0)
        fps = np.stack([morgan_fingerprint(parse_smiles(s), 2, 256) for s in self.SMILES])
        assert model_forward(spec, params, fps).shape == (4, 2)
        with pytest.raises(ModelError):
            model_forward(spec, params, mol_batch(["C"]))
        graph_spec = ModelSpec(kind="gcn", n_tasks=2)
        with pytest.raises(ModelError):
            model_forward(graph_spec, init_params(graph_spec, 0), fps)

    def test_deterministic_across_runs(self):
        batch = mol_batch(self.SMILES)
        spec = ModelSpec(kind="gcn", n_tasks=1)
        params = init_params(spec, 7)
        a = model_forward(spec, params, batch).value
        b = model_forward(spec, params, batch).value
        assert np.array_equal(a, b)

    def test_train_mode_dropout_keyed(self):
        batch = mol_batch(self.SMILES)
        spec = ModelSpec(kind="gcn", n_tasks=1, dropout=0.5)
        params = init_params(spec, 7)
        a = model_forward(spec, params, batch, train=True, dropout_key=1).value
        b = model_forward(spec, params, batch, train=True, dropout_key=1).value
        c = model_forward(spec, params, batch, train=True, dropout_key=2).value
        assert np.array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_params_mismatch_rejected(self):
        spec = ModelSpec(kind="gcn", n_tasks=1)
        params = init_params(spec, 0)
        params.pop("out.bias")
        with pytest.raises(ModelError, match="out.bias"):
            check_params(spec, params)

    @pytest.mark.parametrize("kind", ["gcn", "gat", "nf", "mpnn"])
    def test_within_graph_permutation_invariance(self, kind):
        rng = np.random.default_rng(3)
        mol = parse_smiles("CC(=O)Oc1ccccc1C(=O)O")
        g = build_graph(mol, atom_features(mol), bond_features(mol))
        spec = ModelSpec(kind=kind, n_tasks=2, hidden_size=8, num_heads=2)
        params = init_params(spec, 1)
        base = model_forward(spec, params, batch_graphs([g])).value
        for _ in range(5):
            perm = rng.permutation(g.num_nodes)
            out = model_forward(spec, params, batch_graphs([permute_graph(g, perm)])).value
            assert np.max(np.abs(out - base)) < 1e-9

    @pytest.mark.parametrize("kind", ["gcn", "gat", "nf", "mpnn", "ecfp-mlp"])
    def test_batch_independence(self, kind):
        spec = ModelSpec(kind=kind, n_tasks=2, hidden_size=8, num_heads=2, fp_bits=128)
        params = init_params(spec, 2)
        if kind == "ecfp-mlp":
            fps = np.stack([morgan_fingerprint(parse_smiles(s), 2, 128) for s in self.SMILES])
            together = model_forward(spec, params, fps).value
            for i in range(len(self.SMILES)):
                alone = model_forward(spec, params, fps[i : i + 1]).value
                assert np.max(np.abs(together[i] - alone[0])) < 1e-9
            return
        graphs = []
        for s in self.SMILES:
            mol = parse_smiles(s)
            graphs.append(build_graph(mol, atom_features(mol), bond_features(mol)))
        together = model_forward(spec, params, batch_graphs(graphs)).value
        for i, g in enumerate(graphs):
            alone = model_forward(spec, params, batch_graphs([g])).value
            assert np.max(np.abs(together[i] - alone[0])) < 1e-9


@pytest.mark.parametrize("kind", ["gcn", "gat", "nf", "mpnn", "ecfp-mlp"])
def test_full_model_gradients(kind):
    spec = ModelSpec(
        kind=kind, n_tasks=1, node_feat_dim=4, edge_feat_dim=3,
        hidden_size=3, num_rounds=1, num_heads=2, predictor_hidden=(3,),
        dropout=0.0, fp_bits=6,
    )
    params = init_params(spec, 11)
    if kind == "ecfp-mlp":
        # continuous stand-in for fingerprints keeps ReLU kinks off the
        # finite-difference path
        data = np.abs(rand((3, 6), 0)) * 0.5
    else:
        g = toy_graph(4, [(0, 1), (1, 0), (1, 2), (2, 1), (2, 3), (3, 2)],
                      node_dim=4, edge_dim=3, seed=5)
        data = batch_graphs([g])
    targets = np.array([[1.0], [0.0], [1.0]]) if kind == "ecfp-mlp" else np.array([[1.0]])

    names = sorted(params)
    tensors = [params[n] for n in names]

    def f(*weights):
        p = dict(zip(names, weights))
        out = model_forward(spec, p, data)
        return ad.mse(out, targets)

    assert grad_check(f, tensors) < 1e-4
