import math

import numpy as np
import pytest

from voxelforge.cppn import (ACTIVATION_NAMES, IN_BIAS, IN_X, INPUT_IDS, Cppn,
                             CppnError, Link, Node, evaluate, random_cppn)


def passthrough_net():
    # single link x -> linear output, weight 1
    return Cppn(nodes=(Node(5, "linear"),), links=(Link(IN_X, 5, 1.0),),
                output_id=5)


def test_linear_passthrough_zero():
    assert evaluate(passthrough_net(), 0.0, 0.0, 0.0, 0.0) == 0.0


def test_linear_passthrough_clamp_identity():
    assert evaluate(passthrough_net(), 1.0, 0.0, 0.0, 0.0) == 1.0


def test_output_clamped():
    net = Cppn(nodes=(Node(5, "linear"),), links=(Link(IN_X, 5, 10.0),),
               output_id=5)
    assert evaluate(net, 1.0, 0, 0, 0) == 1.0
    assert evaluate(net, -1.0, 0, 0, 0) == -1.0


def test_cycle_rejected_at_construction():
    with pytest.raises(CppnError, match="cycle"):
        Cppn(nodes=(Node(5, "linear"), Node(6, "linear")),
             links=(Link(5, 6, 1.0), Link(6, 5, 1.0)),
             output_id=6)


def test_disabled_links_ignored():
    net = Cppn(nodes=(Node(5, "linear"),),
               links=(Link(IN_X, 5, 1.0), Link(IN_BIAS, 5, 100.0, enabled=False)),
               output_id=5)
    assert evaluate(net, 0.5, 0, 0, 0) == 0.5


# --- independent straight-line interpreter used as an oracle ---------------

def _act_scalar(name, x):
    if name == "sine":
        return math.sin(x)
    if name == "sigmoid":
        return 2.0 / (1.0 + math.exp(-x)) - 1.0
    if name == "gaussian":
        return math.exp(-0.5 * x * x)
    if name == "abs":
        return abs(x)
    return x


def oracle_eval(cppn, x, y, z, r):
    values = {0: x, 1: y, 2: z, 3: r, 4: 1.0}
    acts = {n.id: n.activation for n in cppn.nodes}

    def val(nid):
        if nid in values:
            return values[nid]
        pre = sum(l.weight * val(l.src) for l in cppn.links
                  if l.enabled and l.dst == nid)
        values[nid] = _act_scalar(acts[nid], pre)
        return values[nid]

    return max(-1.0, min(1.0, val(cppn.output_id)))


def random_layered_net(rng, n_hidden=9):
    # ascending node ids guarantee acyclicity
    ids = list(range(5, 5 + n_hidden + 1))
    nodes = tuple(Node(i, ACTIVATION_NAMES[rng.integers(len(ACTIVATION_NAMES))])
                  for i in ids)
    links = []
    for i in ids:
        sources = list(INPUT_IDS) + [j for j in ids if j < i]
        for src in rng.choice(sources, size=min(3, len(sources)),
                              replace=False):
            links.append(Link(int(src), i, float(rng.normal())))
    return Cppn(nodes=nodes, links=tuple(links), output_id=ids[-1])


def test_random_network_matches_oracle():
    rng = np.random.default_rng(7)
    for _ in range(30):
        net = random_layered_net(rng)
        x, y, z = rng.uniform(-1, 1, 3)
        r = math.sqrt(x * x + y * y + z * z)
        assert evaluate(net, x, y, z, r) == pytest.approx(
            oracle_eval(net, x, y, z, r), abs=1e-12)


def test_vectorized_matches_scalar():
    rng = np.random.default_rng(3)
    net = random_layered_net(rng)
    xs = rng.uniform(-1, 1, 20)
    ys = rng.uniform(-1, 1, 20)
    zs = rng.uniform(-1, 1, 20)
    rs = np.sqrt(xs ** 2 + ys ** 2 + zs ** 2)
    vec = evaluate(net, xs, ys, zs, rs)
    for i in range(20):
        assert vec[i] == evaluate(net, xs[i], ys[i], zs[i], rs[i])


def test_outputs_in_range():
    rng = np.random.default_rng(11)
    for _ in range(20):
        net = random_layered_net(rng)
        xs = rng.uniform(-1, 1, 100)
        out = evaluate(net, xs, xs[::-1], np.abs(xs), np.abs(xs) * 2)
        assert np.all(out >= -1.0) and np.all(out <= 1.0)


def test_serialization_round_trip():
    rng = np.random.default_rng(5)
    net = random_layered_net(rng)
    again = Cppn.from_dict(net.to_dict())
    assert again == net
    x = 0.31415
    assert evaluate(again, x, -x, x / 2, x) == evaluate(net, x, -x, x / 2, x)


def test_random_cppn_structure():
    rng = np.random.default_rng(0)
    net = random_cppn(rng)
    assert len(net.nodes) == 1
    assert len(net.links) == len(INPUT_IDS)
    assert all(l.enabled for l in net.links)
