import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vasqforge.core import (
    BinaryMask,
    DomainBoundsError,
    GrowthParams,
    ParameterError,
    Point2,
    RadiusParams,
    StructuralError,
    VesselForest,
)

from conftest import chain, random_tree, star


def test_first_insertion_is_root():
    f = VesselForest(512, 512)
    assert f.add_node(Point2(5, 5)) == 0
    assert f.roots == [0]


def test_append_returns_previous_count():
    f = chain(3)
    assert f.add_node((1, 1), 2) == 3
    assert f.nodes[3].parent == 2


def test_out_of_domain_rejected():
    f = VesselForest(512, 512)
    with pytest.raises(DomainBoundsError):
        f.add_node((-1, 0))
    with pytest.raises(DomainBoundsError):
        f.add_node((512, 3))


def test_dangling_parent_rejected():
    f = chain(2)
    with pytest.raises(StructuralError):
        f.add_node((3, 3), 5)
    with pytest.raises(StructuralError):
        f.add_node((3, 3), 2)  # self reference: id 2 is not yet allocated


def test_non_finite_point():
    with pytest.raises(ParameterError):
        Point2.checked(float("nan"), 0)


def brute_children(f):
    kids = {n.id: [] for n in f.nodes}
    for n in f.nodes:
        if n.parent is not None:
            kids[n.parent].append(n.id)
    return kids


def test_leaves_examples():
    assert chain(1).leaves() == [0]
    assert chain(3).leaves() == [2]
    assert star(2).leaves() == [1, 2]


def test_bifurcation_examples():
    assert chain(3).bifurcations() == []
    assert star(2).bifurcations() == [(0, [1, 2])]
    f = VesselForest(64, 64)
    f.add_node((1, 1))
    f.add_node((2, 1), 0)
    for k in range(3):
        f.add_node((3, 1 + k), 1)
    assert f.bifurcations() == [(1, [2, 3, 4])]


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 60), st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_tree_queries_match_brute_force(n, roots, seed):
    rng = np.random.default_rng(seed)
    f = random_tree(rng, n, roots=min(roots, n))
    kids = brute_children(f)
    assert f.leaves() == sorted(i for i, c in kids.items() if not c)
    assert f.bifurcations() == [(i, c) for i, c in sorted(kids.items()) if len(c) >= 2]
    # leaves and internal nodes partition the node set
    internal = {i for i, c in kids.items() if c}
    assert set(f.leaves()) | internal == set(range(n))
    assert not set(f.leaves()) & internal
    # acyclic: every node reaches a root within n steps
    for node in f.nodes:
        cur, steps = node, 0
        while cur.parent is not None:
            assert cur.parent < cur.id
            cur = f.nodes[cur.parent]
            steps += 1
        assert cur.id in f.roots and steps <= n


def test_forest_json_round_trip(rng):
    f = random_tree(rng, 30, roots=2)
    for n in f.nodes:
        n.radius = rng.uniform(0.5, 3)
    g = VesselForest.from_dict(f.to_dict())
    assert g.to_dict() == f.to_dict()


@settings(max_examples=30, deadline=None)
@given(w=st.integers(1, 40), h=st.integers(1, 40), seed=st.integers(0, 2**32 - 1))
def test_mask_png_round_trip(tmp_path_factory, w, h, seed):
    rng = np.random.default_rng(seed)
    m = BinaryMask(rng.random((h, w)) < 0.4)
    path = tmp_path_factory.mktemp("png") / "m.png"
    m.save_png(path)
    assert BinaryMask.load_png(path) == m


def test_mask_loader_threshold(tmp_path):
    from PIL import Image

    arr = np.array([[0, 127, 128, 255]], dtype=np.uint8)
    Image.fromarray(arr, mode="L").save(tmp_path / "g.png")
    assert BinaryMask.load_png(tmp_path / "g.png").pixels.tolist() == [[False, False, True, True]]


@pytest.mark.parametrize(
    "kw",
    [dict(Da=0), dict(Dk=-1), dict(Ls=0), dict(Dk=20, Da=20), dict(N_max=0), dict(T_max=0)],
)
def test_growth_params_invariants(kw):
    with pytest.raises(ParameterError):
        GrowthParams(**kw)


def test_radius_params_invariants():
    with pytest.raises(ParameterError):
        RadiusParams(r_tip=5, r_max=4)
    with pytest.raises(ParameterError):
        RadiusParams(gamma=0)
