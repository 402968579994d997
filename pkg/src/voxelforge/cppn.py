"""Compositional pattern-producing networks.

A CPPN is a small feed-forward function graph queried once per lattice
point with the point's scaled coordinates (x, y, z), its radial distance
r from the lattice center, and a constant bias. Node ids 0-4 are the
fixed inputs; hidden nodes and the single output node carry activation
functions. The output is hard-clamped to [-1, 1].
"""

from __future__ import annotations

import numpy as np
from dataclasses import dataclass

# Fixed input node ids.
IN_X, IN_Y, IN_Z, IN_R, IN_BIAS = 0, 1, 2, 3, 4
INPUT_IDS = (IN_X, IN_Y, IN_Z, IN_R, IN_BIAS)


def _sigmoid(x):
    # 2/(1+exp(-x)) - 1, written in its numerically stable form
    return np.tanh(0.5 * x)


ACTIVATIONS = {
    "sine": np.sin,
    "sigmoid": _sigmoid,
    "gaussian": lambda x: np.exp(-0.5 * x * x),
    "abs": np.abs,
    "linear": lambda x: x,
}
ACTIVATION_NAMES = tuple(sorted(ACTIVATIONS))


@dataclass(frozen=True)
class Node:
    id: int
    activation: str


@dataclass(frozen=True)
class Link:
    src: int
    dst: int
    weight: float
    enabled: bool = True


class CppnError(ValueError):
    pass


@dataclass(frozen=True)
class Cppn:
    """Immutable feed-forward network; cycles are rejected at construction."""

    nodes: tuple[Node, ...]
    links: tuple[Link, ...]
    output_id: int

    def __post_init__(self):
        ids = [n.id for n in self.nodes]
        if len(set(ids)) != len(ids):
            raise CppnError("duplicate node ids")
        if any(i in INPUT_IDS for i in ids):
            raise CppnError("node ids 0-4 are reserved for inputs")
        if self.output_id not in ids:
            raise CppnError("output node missing from node list")
        for n in self.nodes:
            if n.activation not in ACTIVATIONS:
                raise CppnError(f"unknown activation {n.activation!r}")
        known = set(ids) | set(INPUT_IDS)
        for l in self.links:
            if l.src not in known or l.dst not in known:
                raise CppnError(f"link {l.src}->{l.dst} references unknown node")
            if l.dst in INPUT_IDS:
                raise CppnError("links may not target an input node")
        object.__setattr__(self, "_topo", _topo_order(self.nodes, self.links))

    @property
    def topo_order(self) -> tuple[int, ...]:
        return self._topo

    def to_dict(self) -> dict:
        return {
            "nodes": [{"id": n.id, "activation": n.activation} for n in self.nodes],
            "links": [{"src": l.src, "dst": l.dst, "weight": l.weight,
                       "enabled": l.enabled} for l in self.links],
            "output_id": self.output_id,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Cppn":
        return cls(
            nodes=tuple(Node(n["id"], n["activation"]) for n in d["nodes"]),
            links=tuple(Link(l["src"], l["dst"], float(l["weight"]),
                             bool(l["enabled"])) for l in d["links"]),
            output_id=d["output_id"],
        )


def _topo_order(nodes, links):
    """Kahn's algorithm over enabled links; deterministic (ascending ids)."""
    ids = sorted(n.id for n in nodes)
    indeg = {i: 0 for i in ids}
    out = {i: [] for i in ids}
    for l in links:
        if l.enabled and l.src not in INPUT_IDS:
            indeg[l.dst] += 1
            out[l.src].append(l.dst)
    ready = sorted(i for i in ids if indeg[i] == 0)
    order = []
    while ready:
        n = ready.pop(0)
        order.append(n)
        changed = False
        for m in out[n]:
            indeg[m] -= 1
            if indeg[m] == 0:
                ready.append(m)
                changed = True
        if changed:
            ready.sort()
    if len(order) != len(ids):
        raise CppnError("network contains a cycle")
    return tuple(order)


def evaluate(cppn: Cppn, x, y, z, r):
    """Feed-forward evaluation; accepts scalars or broadcastable arrays.

    Returns the output node's value clamped to [-1, 1]. Nodes with no
    enabled incoming link see a net input of 0.
    """
    scalar = np.isscalar(x) or (np.ndim(x) == 0)
    values = {IN_X: np.asarray(x, dtype=np.float64),
              IN_Y: np.asarray(y, dtype=np.float64),
              IN_Z: np.asarray(z, dtype=np.float64),
              IN_R: np.asarray(r, dtype=np.float64),
              IN_BIAS: np.float64(1.0)}
    acts = {n.id: ACTIVATIONS[n.activation] for n in cppn.nodes}
    incoming = {n.id: [] for n in cppn.nodes}
    for l in cppn.links:
        if l.enabled:
            incoming[l.dst].append(l)
    for nid in cppn.topo_order:
        pre = np.float64(0.0)
        for l in incoming[nid]:
            pre = pre + l.weight * values[l.src]
        values[nid] = acts[nid](pre)
    out = np.clip(values[cppn.output_id], -1.0, 1.0)
    # broadcast constant outputs up to the input shape
    out = np.broadcast_to(out, np.broadcast_shapes(out.shape, values[IN_X].shape))
    return float(out) if scalar else np.array(out)


def random_cppn(rng: np.random.Generator) -> Cppn:
    """Fresh minimal network: inputs fully connected to one output node."""
    out_id = max(INPUT_IDS) + 1
    act = ACTIVATION_NAMES[rng.integers(len(ACTIVATION_NAMES))]
    links = tuple(Link(i, out_id, float(rng.normal(0.0, 1.0)))
                  for i in INPUT_IDS)
    return Cppn(nodes=(Node(out_id, act),), links=links, output_id=out_id)
