"""DAG-composed functions: pooling, evaluation, error propagation.

The propagation bound is checked two ways: exactly, with constant-offset
perturbations where the recursion is tight, and empirically, with
kernel-estimate constituents produced by build_deep_approx.
"""

import math

import numpy as np
import pytest

from hermloc.deep_net import (
    Dag,
    DagNode,
    build_deep_approx,
    estimate_lipschitz,
    eval_gfunction,
    make_pooling,
    propagation_gap,
    read_dag_json,
    write_dag_json,
)
from hermloc.estimator import EstimatorConfig


def two_level_tree():
    """Two sources feeding one clipped sink; constituents attached."""
    nodes = {
        "s1": DagNode(
            id="s1", kind="source", in_dim=1,
            constituent=lambda x: math.sin(float(x[0])), lipschitz=1.0,
        ),
        "s2": DagNode(
            id="s2", kind="source", in_dim=1,
            constituent=lambda x: math.cos(float(x[0])), lipschitz=1.0,
        ),
        "top": DagNode(
            id="top", kind="internal", in_dim=2, children=("s1", "s2"),
            pooling_name="clip", pooling_params={"lo": -1.0, "hi": 1.0},
            pooling_c=1.0, lipschitz=1.0,
            constituent=lambda z: math.cos(float(z[0]) * float(z[1])),
        ),
    }
    return Dag(nodes=nodes, sink="top")


class TestPooling:
    def test_identity(self):
        v = np.array([0.3, -2.0])
        np.testing.assert_array_equal(make_pooling("identity", {})(v), v)

    def test_clip(self):
        pool = make_pooling("clip", {"lo": -1.0, "hi": 1.0})
        np.testing.assert_array_equal(
            pool(np.array([0.5, -3.0, 2.0])), [0.5, -1.0, 1.0]
        )

    def test_clip_is_contracting(self):
        pool = make_pooling("clip", {"lo": -1.0, "hi": 1.0})
        rng = np.random.default_rng(0)
        for _ in range(100):
            a = rng.uniform(-3, 3, 4)
            b = rng.uniform(-3, 3, 4)
            gap = float(np.linalg.norm(pool(a) - pool(b)))
            assert gap <= float(np.sum(np.abs(a - b))) + 1e-12

    def test_radial(self):
        pool = make_pooling("radial", {"radius": 2.0})
        out = pool(np.array([3.0, 4.0]))
        np.testing.assert_allclose(out, [1.2, 1.6], rtol=1e-15)
        origin = pool(np.zeros(3))
        np.testing.assert_array_equal(origin, [2.0, 0.0, 0.0])

    def test_validation(self):
        with pytest.raises(ValueError):
            make_pooling("clip", {"lo": 1.0, "hi": 1.0})
        with pytest.raises(ValueError):
            make_pooling("radial", {"radius": 0.0})
        with pytest.raises(ValueError):
            make_pooling("softmax", {})


class TestDagStructure:
    def test_orders_levels_sources(self):
        dag = two_level_tree()
        order = dag.topological_order()
        pos = {nid: i for i, nid in enumerate(order)}
        for node in dag.nodes.values():
            for child in node.children:
                assert pos[child] < pos[node.id]
        assert dag.levels() == {"s1": 0, "s2": 0, "top": 1}
        assert dag.sources() == ["s1", "s2"]

    def test_node_validation(self):
        with pytest.raises(ValueError):
            DagNode(id="a", kind="middle", in_dim=1)
        with pytest.raises(ValueError):
            DagNode(id="a", kind="source", in_dim=0)
        with pytest.raises(ValueError):
            DagNode(id="a", kind="source", in_dim=1, children=("b",))
        with pytest.raises(ValueError):
            DagNode(id="a", kind="internal", in_dim=1)
        with pytest.raises(ValueError):
            DagNode(id="a", kind="internal", in_dim=3, children=("b", "c"))
        with pytest.raises(ValueError):
            DagNode(id="a", kind="source", in_dim=1, pooling_c=0.0)

    def test_graph_validation(self):
        src = DagNode(id="s", kind="source", in_dim=1)
        with pytest.raises(ValueError):
            Dag(nodes={"s": src}, sink="t")
        top = DagNode(id="t", kind="internal", in_dim=1, children=("missing",))
        with pytest.raises(ValueError):
            Dag(nodes={"s": src, "t": top}, sink="t")
        # two unreferenced nodes: no unique sink
        s2 = DagNode(id="u", kind="source", in_dim=1)
        t1 = DagNode(id="t", kind="internal", in_dim=1, children=("s",))
        with pytest.raises(ValueError):
            Dag(nodes={"s": src, "u": s2, "t": t1}, sink="t")

    def test_cycle_detection(self):
        a = DagNode(id="a", kind="internal", in_dim=1, children=("b",))
        b = DagNode(id="b", kind="internal", in_dim=1, children=("a",))
        t = DagNode(id="t", kind="internal", in_dim=1, children=("a",))
        with pytest.raises(ValueError, match="cycle"):
            Dag(nodes={"a": a, "b": b, "t": t}, sink="t")


class TestEvalGFunction:
    def test_composite_value(self):
        dag = two_level_tree()
        out = eval_gfunction(dag, {"s1": [0.5], "s2": [0.25]})
        want = math.cos(math.sin(0.5) * math.cos(0.25))
        assert out == pytest.approx(want, rel=1e-15)

    def test_pooling_applies_before_constituent(self):
        dag = two_level_tree()
        big = {"s1": [math.pi / 2], "s2": [0.0]}  # sin -> 1.0, cos -> 1.0
        out = eval_gfunction(dag, big)
        assert out == pytest.approx(math.cos(1.0), rel=1e-15)

    def test_order_independence(self):
        dag = two_level_tree()
        inputs = {"s1": [0.1], "s2": [-0.7]}
        base = eval_gfunction(dag, inputs)
        for order in (["s1", "s2", "top"], ["s2", "s1", "top"]):
            assert eval_gfunction(dag, inputs, order=order) == base

    def test_shared_child_memoized(self):
        calls = {"n": 0}

        def counted(x):
            calls["n"] += 1
            return float(x[0])

        nodes = {
            "s": DagNode(id="s", kind="source", in_dim=1, constituent=counted),
            "a": DagNode(id="a", kind="internal", in_dim=1, children=("s",),
                         constituent=lambda z: float(z[0]) + 1.0),
            "b": DagNode(id="b", kind="internal", in_dim=1, children=("s",),
                         constituent=lambda z: float(z[0]) - 1.0),
            "t": DagNode(id="t", kind="internal", in_dim=2, children=("a", "b"),
                         constituent=lambda z: float(z[0]) * float(z[1])),
        }
        dag = Dag(nodes=nodes, sink="t")
        out = eval_gfunction(dag, {"s": [2.0]})
        assert out == pytest.approx(3.0, rel=1e-15)
        assert calls["n"] == 1

    def test_validation(self):
        dag = two_level_tree()
        with pytest.raises(ValueError):
            eval_gfunction(dag, {"s1": [0.0]})
        with pytest.raises(ValueError):
            eval_gfunction(dag, {"s1": [0.0, 1.0], "s2": [0.0]})
        with pytest.raises(ValueError):
            eval_gfunction(dag, {"s1": [0.0], "s2": [0.0]}, order=["top", "s1", "s2"])
        with pytest.raises(ValueError):
            eval_gfunction(dag, {"s1": [0.0], "s2": [0.0]}, order=["s1", "s2"])
        bare = Dag(
            nodes={
                "s": DagNode(id="s", kind="source", in_dim=1),
                "t": DagNode(id="t", kind="internal", in_dim=1, children=("s",),
                             constituent=lambda z: 0.0),
            },
            sink="t",
        )
        with pytest.raises(ValueError):
            eval_gfunction(bare, {"s": [0.0]})


class TestEstimateLipschitz:
    def test_linear_function(self):
        rng = np.random.default_rng(1)
        slope = np.array([2.0, -1.0])
        est = estimate_lipschitz(lambda x: float(x @ slope), 2, rng, trials=400)
        norm = float(np.linalg.norm(slope))
        assert est <= norm + 1e-9
        assert est >= 0.9 * norm


class TestPropagation:
    def test_constant_offsets_make_bound_tight(self):
        # f and f + delta at every node, with a summing sink whose slope is
        # +1 in each child: offsets add coherently and the measured gap hits
        # the recursion value 3 delta exactly
        nodes = {
            "s1": DagNode(id="s1", kind="source", in_dim=1,
                          constituent=lambda x: math.sin(float(x[0]))),
            "s2": DagNode(id="s2", kind="source", in_dim=1,
                          constituent=lambda x: math.cos(float(x[0]))),
            "top": DagNode(id="top", kind="internal", in_dim=2,
                           children=("s1", "s2"), lipschitz=1.0,
                           constituent=lambda z: float(z[0]) + float(z[1])),
        }
        dag = Dag(nodes=nodes, sink="top")
        delta = 1e-3
        f_set = {nid: dag.nodes[nid].constituent for nid in dag.nodes}
        g_set = {
            nid: (lambda fn: lambda z, fn=fn: fn(z) + delta)(f_set[nid])
            for nid in dag.nodes
        }
        probes = [{"s1": [0.2 * i - 0.5], "s2": [0.1 * i - 0.3]} for i in range(5)]
        rep = propagation_gap(dag, f_set, g_set, probes)
        assert rep.node_eps == pytest.approx(delta, rel=1e-9)
        assert rep.predicted_bound == pytest.approx(3.0 * delta, rel=1e-9)
        assert rep.measured_gap == pytest.approx(3.0 * delta, rel=1e-9)

    def test_kernel_estimates_respect_bound(self):
        dag = two_level_tree()
        g1 = np.linspace(-1.0, 1.0, 200).reshape(-1, 1)
        side = np.linspace(-1.0, 1.0, 20)
        g2 = np.stack(np.meshgrid(side, side, indexing="ij"), axis=-1).reshape(-1, 2)
        approx = build_deep_approx(
            dag,
            {"s1": g1, "s2": g1, "top": g2},
            {
                "s1": EstimatorConfig.build(8.0, 1.0, 1),
                "s2": EstimatorConfig.build(8.0, 1.0, 1),
                "top": EstimatorConfig.build(8.0, 1.0, 2),
            },
        )
        f_set = {nid: dag.nodes[nid].constituent for nid in dag.nodes}
        g_set = {nid: approx.nodes[nid].constituent for nid in dag.nodes}
        rng = np.random.default_rng(0)
        probes = [
            {"s1": rng.uniform(-1, 1, 1), "s2": rng.uniform(-1, 1, 1)}
            for _ in range(20)
        ]
        rep = propagation_gap(dag, f_set, g_set, probes)
        assert rep.measured_gap <= rep.predicted_bound
        assert rep.node_eps < 0.1  # frozen sanity envelope for this setup

    def test_validation(self):
        dag = two_level_tree()
        f_set = {nid: dag.nodes[nid].constituent for nid in dag.nodes}
        nodes = {
            nid: DagNode(
                id=n.id, kind=n.kind, in_dim=n.in_dim, children=n.children,
                pooling_name=n.pooling_name, pooling_params=dict(n.pooling_params),
                pooling_c=n.pooling_c, lipschitz=None, constituent=n.constituent,
            )
            for nid, n in dag.nodes.items()
        }
        unbounded = Dag(nodes=nodes, sink="top")
        with pytest.raises(ValueError):
            propagation_gap(unbounded, f_set, f_set, [])
        with pytest.raises(ValueError):
            propagation_gap(dag, f_set, {"s1": f_set["s1"]}, [])


class TestBuildDeepApprox:
    def test_validation(self):
        dag = two_level_tree()
        pts = {"s1": np.zeros((4, 1)), "s2": np.zeros((4, 1)), "top": np.zeros((4, 1))}
        cfgs = {nid: EstimatorConfig.build(4.0, 1.0, 1) for nid in dag.nodes}
        with pytest.raises(ValueError):
            build_deep_approx(dag, pts, cfgs)  # top points have wrong width
        bare = Dag(
            nodes={
                "s": DagNode(id="s", kind="source", in_dim=1),
                "t": DagNode(id="t", kind="internal", in_dim=1, children=("s",),
                             constituent=lambda z: 0.0),
            },
            sink="t",
        )
        with pytest.raises(ValueError):
            build_deep_approx(
                bare,
                {"s": np.zeros((4, 1)), "t": np.zeros((4, 1))},
                {nid: EstimatorConfig.build(4.0, 1.0, 1) for nid in bare.nodes},
            )


class TestDagJson:
    def test_round_trip(self, tmp_path):
        dag = two_level_tree()
        path = tmp_path / "graph.json"
        write_dag_json(dag, str(path))
        back = read_dag_json(str(path))
        assert back.sink == dag.sink
        assert set(back.nodes) == set(dag.nodes)
        for nid, node in dag.nodes.items():
            other = back.nodes[nid]
            assert other.kind == node.kind
            assert other.in_dim == node.in_dim
            assert other.children == node.children
            assert other.pooling_name == node.pooling_name
            assert other.pooling_params == node.pooling_params
            assert other.pooling_c == node.pooling_c
            assert other.lipschitz == node.lipschitz
            assert other.constituent is None  # structure only

    def test_reattach_and_evaluate(self, tmp_path):
        dag = two_level_tree()
        path = tmp_path / "graph.json"
        write_dag_json(dag, str(path))
        back = read_dag_json(str(path)).with_constituents(
            {nid: dag.nodes[nid].constituent for nid in dag.nodes}
        )
        inputs = {"s1": [0.3], "s2": [0.8]}
        assert eval_gfunction(back, inputs) == eval_gfunction(dag, inputs)

    def test_malformed_rejected(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"nodes": []}')
        with pytest.raises(ValueError):
            read_dag_json(str(path))
        path.write_text(
            '{"nodes": [{"id": "s", "kind": "source", "in_dim": 1},'
            ' {"id": "s", "kind": "source", "in_dim": 1}], "sink": "s"}'
        )
        with pytest.raises(ValueError):
            read_dag_json(str(path))
        path.write_text('{"nodes": [{"id": "s", "kind": "source"}], "sink": "s"}')
        with pytest.raises(ValueError):
            read_dag_json(str(path))
