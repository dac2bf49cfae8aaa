import json

import numpy as np
import pytest
from conftest import random_network
from hypothesis import given
from hypothesis import strategies as st

from fluidcorrect.network import (
    NetworkError,
    ServiceNetwork,
    decompose,
    load_network,
    save_network,
    validate_network,
)


def test_flex_net_shape(flex_net):
    assert (flex_net.n, flex_net.m, flex_net.k) == (2, 3, 4)
    np.testing.assert_array_equal(flex_net.class_of, [0, 0, 1, 1])
    np.testing.assert_array_equal(flex_net.pool_of, [0, 1, 1, 2])
    np.testing.assert_allclose(flex_net.activity_cost(), [4, 6, 6, 5])
    np.testing.assert_allclose(flex_net.total_cost(3), [12, 18, 15])


def test_hospital_has_four_components(hospital_net):
    comps = decompose(hospital_net)
    assert [c.pools for c in comps] == [(0,), (1, 2), (3,), (4, 5, 6)]
    assert [c.classes for c in comps] == [(0,), (1,), (2, 3), (4, 5)]
    sub = comps[3].subnetwork()
    assert (sub.n, sub.m, sub.k) == (2, 3, 4)
    np.testing.assert_allclose(sub.c, hospital_net.c[[4, 5, 6]])


@pytest.mark.parametrize(
    "R, A, c, p, kind",
    [
        ([[1, 1]], [[1, 0], [0, 1]], [1, 1], [5], None),
        ([[1, 0]], [[1, 1]], [1], [5], "bad routing column"),
        ([[1, 1]], [[1, 1], [1, 0]], [1, 1], [5], "bad consumption column"),
        ([[2]], [[1]], [1], [5], "non-binary routing"),
        ([[1]], [[-1]], [1], [5], "negative consumption"),
        ([[1]], [[1]], [-1], [5], "negative cost"),
        ([[1]], [[1]], [1], [-5], "negative penalty"),
        ([[1]], [[1]], [1, 2], [5], "dimension mismatch"),
        ([[1], [0]], [[1]], [1], [5, 5], "class unreachable"),
        ([[1]], [[np.nan]], [1], [5], "non-finite"),
    ],
)
def test_validation_reports_kind(R, A, c, p, kind):
    net = ServiceNetwork(R, A, c, p, validate=False)
    kinds = {v.kind for v in validate_network(net)}
    if kind is None:
        assert not kinds
    else:
        assert kind in kinds
        with pytest.raises(NetworkError):
            ServiceNetwork(R, A, c, p)


def test_declared_dimensions_checked(flex_net):
    assert validate_network(flex_net, expected=(2, 3, 4)) == []
    assert validate_network(flex_net, expected=(2, 3, 5))[0].kind == "dimension mismatch"


def test_json_roundtrip(tmp_path, hospital_net):
    path = tmp_path / "net.json"
    save_network(hospital_net, path)
    d = json.loads(path.read_text())
    assert set(d) >= {"n", "m", "k", "R", "A", "c", "p"}
    back = load_network(path)
    for name in ("R", "A", "c", "p"):
        np.testing.assert_array_equal(getattr(back, name), getattr(hospital_net, name))


def test_declared_mismatch_on_load(tmp_path, flex_net):
    d = flex_net.to_dict()
    d["k"] = 7
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(d))
    with pytest.raises(NetworkError):
        load_network(path)


def test_arrays_are_read_only(flex_net):
    with pytest.raises(ValueError):
        flex_net.c[0] = 1.0


@given(st.integers(0, 10_000))
def test_components_partition_network(seed):
    net = random_network(np.random.default_rng(seed), max_n=5, max_m=5)
    comps = decompose(net)
    assert sorted(h for c in comps for h in c.pools) == list(range(net.m))
    assert sorted(i for c in comps for i in c.classes) == list(range(net.n))
    assert sorted(j for c in comps for j in c.activities) == list(range(net.k))
    for comp in comps:
        # no activity crosses components
        for j in comp.activities:
            assert net.class_of[j] in comp.classes
            assert net.pool_of[j] in comp.pools
