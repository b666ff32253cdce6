import json

import numpy as np
import pytest

from qaoa_cluster.clustering import (
    BoxDistribution,
    Dataset,
    DatasetError,
    bhattacharyya_coefficient,
    bicluster,
    boxes_19q,
    euclidean_distance_matrix,
    labels_match,
    load_dataset,
    overlap_graph,
)
from qaoa_cluster.experiment import SolveConfig
from qaoa_cluster.graphs import topology_19q


def closed_form_bhattacharyya(p, q):
    """Overlap area over sqrt(area_p area_q) for uniform boxes."""
    lo = np.maximum(p.lower, q.lower)
    hi = np.minimum(p.upper, q.upper)
    inter = np.prod(np.clip(hi - lo, 0, None))
    return inter / np.sqrt(p.area * q.area)


def test_identical_boxes():
    b = BoxDistribution((0.0, 0.0), (1.0, 2.0))
    assert bhattacharyya_coefficient(b, b) == pytest.approx(1.0, abs=1e-12)


def test_half_overlap():
    a = BoxDistribution((0.0, 0.0), (1.0, 1.0))
    b = BoxDistribution((0.5, 0.0), (1.0, 1.0))
    assert bhattacharyya_coefficient(a, b) == pytest.approx(0.5, abs=1e-3)


def test_disjoint_boxes():
    a = BoxDistribution((0.0, 0.0), (1.0, 1.0))
    b = BoxDistribution((3.0, 0.0), (1.0, 1.0))
    assert bhattacharyya_coefficient(a, b) == 0.0


def test_matches_closed_form_on_random_boxes(rng):
    for _ in range(20):
        a = BoxDistribution(tuple(rng.uniform(-1, 1, 2)), tuple(rng.uniform(0.3, 2, 2)))
        b = BoxDistribution(tuple(rng.uniform(-1, 1, 2)), tuple(rng.uniform(0.3, 2, 2)))
        assert bhattacharyya_coefficient(a, b) == pytest.approx(closed_form_bhattacharyya(a, b), abs=1e-3)


def test_boxes_reproduce_19q_topology():
    g = overlap_graph(boxes_19q())
    assert g.edge_pairs == topology_19q().edge_pairs


def test_euclidean_graph():
    d = Dataset.from_points([[0, 0], [3, 4], [3, 0]])
    g = euclidean_distance_matrix(d)
    assert dict(((i, j), w) for i, j, w in g.edges) == pytest.approx({(0, 1): 5.0, (0, 2): 3.0, (1, 2): 4.0})


def test_bicluster_separates_two_groups():
    pts = [[0, 0], [0.2, 0.1], [0.1, 0.3], [6, 6], [6.1, 5.8], [5.9, 6.2]]
    labels = bicluster(Dataset.from_points(pts), "brute_force")
    assert labels_match(labels.labels, [0, 0, 0, 1, 1, 1])


def test_bicluster_qaoa_small():
    pts = [[0, 0], [0.2, 0.1], [6, 6], [6.1, 5.8]]
    cfg = SolveConfig(shots=200, budget=10)
    labels = bicluster(Dataset.from_points(pts), "qaoa", cfg, seed=1)
    assert labels_match(labels.labels, [0, 0, 1, 1])


def test_dataset_json(tmp_path):
    d = boxes_19q()
    path = tmp_path / "boxes.json"
    path.write_text(json.dumps(d.to_json()))
    assert load_dataset(path) == d
    pts = Dataset.from_points([[0.0, 1.0], [2.0, 3.0]])
    assert Dataset.from_json(pts.to_json()).points.tolist() == pts.points.tolist()


@pytest.mark.parametrize(
    "data",
    [
        {"kind": "points", "data": [[0, 0]]},
        {"kind": "points", "data": [[0, "x"], [1, 1]]},
        {"kind": "boxes", "data": [{"center": [0, 0], "size": [0, 1]}, {"center": [1, 1], "size": [1, 1]}]},
        {"kind": "graph", "data": []},
    ],
)
def test_bad_datasets(data):
    with pytest.raises(DatasetError):
        Dataset.from_json(data)


def test_unknown_solver():
    with pytest.raises(ValueError):
        bicluster(Dataset.from_points([[0, 0], [1, 1]]), "annealer")
