"""Quad-network genomes, their expression into voxel bodies, and mutation.

Each genome holds four independent CPPNs: c1 decides where material is
present, c2 the congenital stiffness, c3 the developmental gain, and c4
the actuation phase. Expression queries all four at every lattice point
and keeps the largest face-connected component of present voxels.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .cppn import (ACTIVATION_NAMES, INPUT_IDS, Cppn, CppnError, Link, Node,
                   evaluate, random_cppn)

K_LOW = 1.0e4    # Pa, softest expressible modulus
K_HIGH = 1.0e10  # Pa, stiffest expressible modulus
ALPHA_RANGE = 10.0
NETWORK_KEYS = ("c1", "c2", "c3", "c4")


class ExpressionError(ValueError):
    """Raised when a genome expresses to an empty body."""


@dataclass(frozen=True)
class Genome:
    id: int
    c1: Cppn
    c2: Cppn
    c3: Cppn
    c4: Cppn
    parent_id: int | None = None

    @property
    def networks(self) -> tuple[Cppn, Cppn, Cppn, Cppn]:
        return (self.c1, self.c2, self.c3, self.c4)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "parent_id": self.parent_id,
            "networks": {k: net.to_dict()
                         for k, net in zip(NETWORK_KEYS, self.networks)},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Genome":
        nets = {k: Cppn.from_dict(d["networks"][k]) for k in NETWORK_KEYS}
        return cls(id=d["id"], parent_id=d.get("parent_id"), **nets)


def save_genome(genome: Genome, path) -> None:
    with open(path, "w") as fh:
        json.dump(genome.to_dict(), fh, indent=1)
        fh.write("\n")


def load_genome(path) -> Genome:
    with open(path) as fh:
        try:
            d = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}: invalid genome JSON: {exc.msg}")
    try:
        return Genome.from_dict(d)
    except (KeyError, CppnError, TypeError) as exc:
        raise ValueError(f"{path}: malformed genome: {exc}")


@dataclass(frozen=True)
class Phenotype:
    """Expressed body: presence mask plus per-voxel material fields.

    Field arrays cover the full lattice; values are only meaningful where
    geometry is True.
    """

    dims: tuple[int, int, int]
    geometry: np.ndarray   # bool (nx, ny, nz)
    stiffness: np.ndarray  # Pa
    alpha: np.ndarray      # dimensionless gain
    phase: np.ndarray      # radians

    @property
    def num_voxels(self) -> int:
        return int(self.geometry.sum())

    @property
    def voxel_coords(self) -> np.ndarray:
        """(N, 3) integer lattice coordinates of present voxels, C-order."""
        return np.argwhere(self.geometry)

    def field_flat(self, name: str) -> np.ndarray:
        """Per-voxel values of a field, aligned with voxel_coords."""
        return getattr(self, name)[self.geometry]


def random_genome(rng: np.random.Generator, genome_id: int) -> Genome:
    return Genome(id=genome_id, parent_id=None,
                  **{k: random_cppn(rng) for k in NETWORK_KEYS})


def _scaled_axes(dims):
    return [np.linspace(-1.0, 1.0, n) if n > 1 else np.zeros(1) for n in dims]


_FACE_STRUCTURE = ndimage.generate_binary_structure(3, 1)


def largest_component(present: np.ndarray) -> np.ndarray:
    """Largest face-connected component; size ties broken by the component
    containing the lexicographically smallest voxel index."""
    labels, n = ndimage.label(present, structure=_FACE_STRUCTURE)
    if n == 0:
        return np.zeros_like(present, dtype=bool)
    sizes = np.bincount(labels.ravel())[1:]
    best = sizes.max()
    flat = labels.ravel()
    winner = min((lab for lab in range(1, n + 1) if sizes[lab - 1] == best),
                 key=lambda lab: int(np.argmax(flat == lab)))
    return labels == winner


def express(genome: Genome, dims=(10, 10, 10),
            k_range: tuple[float, float] = (K_LOW, K_HIGH)) -> Phenotype:
    """Query the four networks over the lattice and build a Phenotype.

    Geometry is present where c1 > 0; stiffness is mapped log-linearly
    over k_range (default [1e4, 1e10] Pa), gain linearly over [-10, 10],
    phase over [-pi, pi].
    """
    dims = tuple(int(d) for d in dims)
    axes = _scaled_axes(dims)
    gx, gy, gz = np.meshgrid(*axes, indexing="ij")
    r = np.sqrt(gx * gx + gy * gy + gz * gz)
    outs = [evaluate(net, gx, gy, gz, r) for net in genome.networks]
    present = outs[0] > 0.0
    geometry = largest_component(present)
    if not geometry.any():
        raise ExpressionError(f"genome {genome.id} expresses no material")
    lo, hi = np.log10(k_range[0]), np.log10(k_range[1])
    stiffness = 10.0 ** (lo + 0.5 * (hi - lo) * (outs[1] + 1.0))
    alpha = ALPHA_RANGE * outs[2]
    phase = np.pi * outs[3]
    return Phenotype(dims=dims, geometry=geometry, stiffness=stiffness,
                     alpha=alpha, phase=phase)


# ---------------------------------------------------------------------------
# Mutation

_OPS = ("add_node", "add_link", "remove_link", "perturb_weight",
        "change_activation")
WEIGHT_MUTATION_STD = 0.5


def _reaches(links, start, goal):
    """True if goal is reachable from start along enabled links."""
    stack, seen = [start], {start}
    adj = {}
    for l in links:
        if l.enabled:
            adj.setdefault(l.src, []).append(l.dst)
    while stack:
        n = stack.pop()
        if n == goal:
            return True
        for m in adj.get(n, ()):
            if m not in seen:
                seen.add(m)
                stack.append(m)
    return False


def _apply_op(cppn: Cppn, op: str, rng: np.random.Generator) -> Cppn | None:
    """One structural/parametric mutation; None if inapplicable."""
    links = list(cppn.links)
    nodes = list(cppn.nodes)

    if op == "add_node":
        enabled = [i for i, l in enumerate(links) if l.enabled]
        if not enabled:
            return None
        idx = enabled[rng.integers(len(enabled))]
        old = links[idx]
        new_id = max(n.id for n in nodes) + 1
        act = ACTIVATION_NAMES[rng.integers(len(ACTIVATION_NAMES))]
        links[idx] = Link(old.src, old.dst, old.weight, enabled=False)
        links.append(Link(old.src, new_id, 1.0))
        links.append(Link(new_id, old.dst, old.weight))
        nodes.append(Node(new_id, act))

    elif op == "add_link":
        existing = {(l.src, l.dst) for l in links}
        sources = list(INPUT_IDS) + [n.id for n in nodes
                                     if n.id != cppn.output_id]
        targets = [n.id for n in nodes]
        candidates = [(a, b) for a in sources for b in targets
                      if a != b and (a, b) not in existing
                      and not _reaches(links, b, a)]
        if not candidates:
            return None
        a, b = candidates[rng.integers(len(candidates))]
        links.append(Link(a, b, float(rng.normal(0.0, 1.0))))

    elif op == "remove_link":
        if not links:
            return None
        del links[rng.integers(len(links))]

    elif op == "perturb_weight":
        if not links:
            return None
        idx = int(rng.integers(len(links)))
        l = links[idx]
        links[idx] = Link(l.src, l.dst,
                          l.weight + float(rng.normal(0.0, WEIGHT_MUTATION_STD)),
                          l.enabled)

    elif op == "change_activation":
        idx = int(rng.integers(len(nodes)))
        n = nodes[idx]
        nodes[idx] = Node(n.id, ACTIVATION_NAMES[rng.integers(len(ACTIVATION_NAMES))])

    else:
        raise ValueError(op)

    return Cppn(nodes=tuple(nodes), links=tuple(links),
                output_id=cppn.output_id)


def _mutate_cppn(cppn: Cppn, rng: np.random.Generator) -> Cppn:
    # inapplicable op -> redraw, max 10 tries, then leave unchanged
    for _ in range(10):
        op = _OPS[rng.integers(len(_OPS))]
        out = _apply_op(cppn, op, rng)
        if out is not None:
            return out
    return cppn


def mutate(genome: Genome, rng: np.random.Generator, child_id: int) -> Genome:
    """Mutated copy: each network selected with p=0.5 (at least one), one
    operation applied per selected network."""
    selected = [rng.random() < 0.5 for _ in NETWORK_KEYS]
    if not any(selected):
        selected[rng.integers(len(NETWORK_KEYS))] = True
    nets = {}
    for key, net, sel in zip(NETWORK_KEYS, genome.networks, selected):
        nets[key] = _mutate_cppn(net, rng) if sel else net
    return Genome(id=child_id, parent_id=genome.id, **nets)
