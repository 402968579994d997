"""Voxel-lattice soft-body simulation.

Each present voxel is a point mass; face-adjacent voxels are joined by
Hookean springs whose constant is the series combination of the two
voxels' moduli times the edge length. Springs actuate by oscillating
their rest length, the ground is a damped penalty spring with Coulomb
friction, and integration is semi-implicit Euler. Development (stiffness
change driven by filtered stress or pressure) runs inside the same step.
"""

from __future__ import annotations

import json
import math
import time as _time
from dataclasses import dataclass

import numpy as np

from ._kernels import run_steps
from .config import LatticeConfig
from .development import DevelopmentRule
from .genome import Phenotype, largest_component


class LatticeError(ValueError):
    """Raised for bodies the simulator cannot build (empty/disconnected)."""


@dataclass
class SimState:
    """Mutable dynamic state plus the immutable lattice structure."""

    positions: np.ndarray      # (N, 3) m
    velocities: np.ndarray     # (N, 3) m/s
    stiffness: np.ndarray      # (N,) Pa, current k_i
    stress: np.ndarray         # (N,) Pa, filtered
    pressure: np.ndarray       # (N,) Pa, filtered
    prev_stress: np.ndarray    # (N,) Pa, previous development-step value
    prev_pressure: np.ndarray  # (N,) Pa
    ground_normal: np.ndarray  # (N,) N, last-step contact normal force
    peak_stress: np.ndarray    # (N,) Pa
    peak_pressure: np.ndarray  # (N,) Pa
    time: float
    # structure (fixed for the lifetime of the state)
    masses: np.ndarray           # (N,) kg
    springs: np.ndarray          # (M, 2) int64 voxel indices
    incident_counts: np.ndarray  # (N,) int64
    alpha: np.ndarray            # (N,) development gain
    phase: np.ndarray            # (N,) rad
    congenital: np.ndarray       # (N,) Pa

    @property
    def num_voxels(self) -> int:
        return self.positions.shape[0]

    def center_of_mass(self) -> np.ndarray:
        w = self.masses / self.masses.sum()
        return w @ self.positions

    def is_finite(self) -> bool:
        return bool(np.isfinite(self.positions).all()
                    and np.isfinite(self.velocities).all())


@dataclass
class SimResult:
    displacement_xy: float          # voxel-length units
    trajectory: np.ndarray          # rows (t, com_x, com_y, com_z), SI
    final_stiffness: np.ndarray     # (N,) Pa
    congenital_stiffness: np.ndarray
    peak_stress: np.ndarray         # (N,) Pa
    peak_pressure: np.ndarray      # (N,) Pa
    unstable: bool = False
    wall_time: float = 0.0


def build_lattice(phenotype: Phenotype, config: LatticeConfig) -> SimState:
    """Realize a phenotype as point masses and face-adjacent springs.

    The body is translated so its lowest point rests at ground height
    (z = 0); velocities start at zero and stiffness at the congenital
    field.
    """
    coords = phenotype.voxel_coords
    n = coords.shape[0]
    if n == 0:
        raise LatticeError("phenotype has no voxels")
    if not np.array_equal(largest_component(phenotype.geometry),
                          phenotype.geometry):
        raise LatticeError("phenotype geometry is not a single connected "
                           "component; expression should have pruned it")
    edge = config.voxel_edge_length
    pos = coords.astype(np.float64) * edge
    pos[:, 2] -= pos[:, 2].min()

    index = {tuple(c): i for i, c in enumerate(map(tuple, coords))}
    pairs = []
    for i, c in enumerate(map(tuple, coords)):
        for axis in range(3):
            nb = list(c)
            nb[axis] += 1
            j = index.get(tuple(nb))
            if j is not None:
                pairs.append((i, j))
    springs = (np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
               if pairs else np.zeros((0, 2), dtype=np.int64))
    incident = np.zeros(n, dtype=np.int64)
    for i, j in springs:
        incident[i] += 1
        incident[j] += 1

    mass = config.density * edge ** 3
    congenital = np.clip(phenotype.field_flat("stiffness").astype(np.float64),
                         config.k_min, config.k_max)
    zeros = lambda: np.zeros(n)
    return SimState(
        positions=pos,
        velocities=np.zeros((n, 3)),
        stiffness=congenital.copy(),
        stress=zeros(), pressure=zeros(),
        prev_stress=zeros(), prev_pressure=zeros(),
        ground_normal=zeros(),
        peak_stress=zeros(), peak_pressure=zeros(),
        time=0.0,
        masses=np.full(n, mass),
        springs=springs,
        incident_counts=incident,
        alpha=phenotype.field_flat("alpha").astype(np.float64),
        phase=phenotype.field_flat("phase").astype(np.float64),
        congenital=congenital,
    )


def spring_constants(state: SimState, config: LatticeConfig) -> np.ndarray:
    """Current per-spring constants: series-combined moduli times edge."""
    k = state.stiffness
    i, j = state.springs[:, 0], state.springs[:, 1]
    return 2.0 * k[i] * k[j] / (k[i] + k[j]) * config.voxel_edge_length


def stable_dt(state: SimState, config: LatticeConfig) -> float:
    """Timestep from the stiffest spring (incl. ground) and lightest mass."""
    ks = spring_constants(state, config)
    k_stiffest = max(float(ks.max()) if ks.size else 0.0,
                     config.ground_stiffness)
    omega = math.sqrt(k_stiffest / float(state.masses.min()))
    return config.dt_safety_factor * 2.0 / omega


def _filter_decay(dt: float, config: LatticeConfig) -> float:
    tau = config.signal_filter_time_constant
    return math.exp(-dt / tau) if tau > 0 else 0.0


def step(state: SimState, config: LatticeConfig,
         rule: DevelopmentRule = DevelopmentRule.NONE,
         actuate: bool = True, dt: float | None = None,
         act_t0: float = 0.0) -> SimState:
    """Advance one timestep in place and return the state."""
    if dt is None:
        dt = stable_dt(state, config)
    dev = rule.value if actuate else 0
    state.time = run_steps(
        1, dt, state.time, act_t0,
        state.positions, state.velocities, state.stiffness, state.masses,
        state.springs[:, 0].copy(), state.springs[:, 1].copy(),
        state.incident_counts,
        state.alpha, state.phase,
        state.stress, state.pressure, state.prev_stress, state.prev_pressure,
        state.peak_stress, state.peak_pressure, state.ground_normal,
        config.voxel_edge_length, config.actuation_amplitude,
        config.actuation_frequency, config.k_min, config.k_max,
        config.damping_ratio, config.ground_stiffness,
        config.friction_coefficient, config.gravity,
        _filter_decay(dt, config), actuate, dev)
    return state


def compute_signals(state: SimState, config: LatticeConfig,
                    actuation_time: float | None = None):
    """Raw (unfiltered) interoceptive signals at the current configuration.

    stress_i: mean |axial elastic load| / edge^2 over incident springs.
    pressure_i: compressive spring loads plus ground contact, per face.
    """
    edge = config.voxel_edge_length
    area = edge * edge
    n = state.num_voxels
    psi = np.ones(n)
    if actuation_time is not None:
        damp = (config.k_max - state.stiffness) / (config.k_max - config.k_min)
        psi = 1.0 + config.actuation_amplitude * np.sin(
            2.0 * np.pi * config.actuation_frequency * actuation_time
            + state.phase) * damp
    stress_sum = np.zeros(n)
    comp_sum = np.zeros(n)
    if state.springs.size:
        i, j = state.springs[:, 0], state.springs[:, 1]
        d = state.positions[j] - state.positions[i]
        ell = np.linalg.norm(d, axis=1)
        rest = edge * 0.5 * (psi[i] + psi[j])
        ks = spring_constants(state, config)
        fax = ks * (ell - rest)
        np.add.at(stress_sum, i, np.abs(fax) / area)
        np.add.at(stress_sum, j, np.abs(fax) / area)
        comp = np.maximum(0.0, -fax) / area
        np.add.at(comp_sum, i, comp)
        np.add.at(comp_sum, j, comp)
    pen = np.maximum(0.0, -state.positions[:, 2])
    cg = 2.0 * config.damping_ratio * np.sqrt(
        config.ground_stiffness * state.masses)
    normal = np.where(pen > 0,
                      np.maximum(0.0, config.ground_stiffness * pen
                                 - cg * state.velocities[:, 2]),
                      0.0)
    stress = np.where(state.incident_counts > 0,
                      stress_sum / np.maximum(state.incident_counts, 1), 0.0)
    pressure = (comp_sum + normal / area) / 6.0
    return stress, pressure


def elastic_potential(positions: np.ndarray, state: SimState,
                      config: LatticeConfig, psi: np.ndarray | None = None
                      ) -> float:
    """Hookean spring energy at arbitrary positions (for force checks)."""
    if state.springs.size == 0:
        return 0.0
    edge = config.voxel_edge_length
    if psi is None:
        psi = np.ones(state.num_voxels)
    i, j = state.springs[:, 0], state.springs[:, 1]
    ell = np.linalg.norm(positions[j] - positions[i], axis=1)
    rest = edge * 0.5 * (psi[i] + psi[j])
    ks = spring_constants(state, config)
    return float(np.sum(0.5 * ks * (ell - rest) ** 2))


def elastic_forces(positions: np.ndarray, state: SimState,
                   config: LatticeConfig, psi: np.ndarray | None = None
                   ) -> np.ndarray:
    """Elastic spring forces at arbitrary positions (no damping/contact)."""
    edge = config.voxel_edge_length
    forces = np.zeros_like(positions)
    if state.springs.size == 0:
        return forces
    if psi is None:
        psi = np.ones(state.num_voxels)
    i, j = state.springs[:, 0], state.springs[:, 1]
    d = positions[j] - positions[i]
    ell = np.linalg.norm(d, axis=1)
    u = d / ell[:, None]
    rest = edge * 0.5 * (psi[i] + psi[j])
    ks = spring_constants(state, config)
    fax = (ks * (ell - rest))[:, None] * u
    np.add.at(forces, i, fax)
    np.add.at(forces, j, -fax)
    return forces


def mechanical_energy(state: SimState, config: LatticeConfig) -> float:
    """Kinetic + gravitational + spring + ground-penalty elastic energy."""
    kin = 0.5 * float(np.sum(state.masses
                             * np.sum(state.velocities ** 2, axis=1)))
    grav = config.gravity * float(np.sum(state.masses
                                         * state.positions[:, 2]))
    spring = elastic_potential(state.positions, state, config)
    pen = np.maximum(0.0, -state.positions[:, 2])
    ground = 0.5 * config.ground_stiffness * float(np.sum(pen ** 2))
    return kin + grav + spring + ground


def _run_chunked(state: SimState, config: LatticeConfig, duration: float,
                 rule: DevelopmentRule, actuate: bool, act_t0: float,
                 trajectory: list, dt_state: dict) -> bool:
    """Advance `duration` seconds in kernel chunks; False on blow-up.

    dt_state carries {'dt', 'k_ref'} across phases so the timestep is
    recomputed only when the stiffest spring drifts past a 2x change.
    """
    sp_i = np.ascontiguousarray(state.springs[:, 0])
    sp_j = np.ascontiguousarray(state.springs[:, 1])
    dev = rule.value if actuate else 0
    t_end = state.time + duration
    while state.time < t_end - 1e-12:
        dt = dt_state["dt"]
        chunk = max(1, int(round(0.02 / dt)))
        n = min(chunk, int(math.ceil((t_end - state.time) / dt - 1e-9)))
        if n <= 0:
            break
        state.time = run_steps(
            n, dt, state.time, act_t0,
            state.positions, state.velocities, state.stiffness, state.masses,
            sp_i, sp_j, state.incident_counts,
            state.alpha, state.phase,
            state.stress, state.pressure,
            state.prev_stress, state.prev_pressure,
            state.peak_stress, state.peak_pressure, state.ground_normal,
            config.voxel_edge_length, config.actuation_amplitude,
            config.actuation_frequency, config.k_min, config.k_max,
            config.damping_ratio, config.ground_stiffness,
            config.friction_coefficient, config.gravity,
            _filter_decay(dt, config), actuate, dev)
        if not state.is_finite():
            return False
        trajectory.append((state.time, *state.center_of_mass()))
        if dev != 0:
            ks = spring_constants(state, config)
            k_now = float(ks.max()) if ks.size else config.ground_stiffness
            ref = dt_state["k_ref"]
            if k_now > 2.0 * ref or k_now < 0.5 * ref:
                dt_state["dt"] = stable_dt(state, config)
                dt_state["k_ref"] = k_now
    return True


def simulate(phenotype: Phenotype, config: LatticeConfig,
             rule: DevelopmentRule = DevelopmentRule.NONE) -> SimResult:
    """Full evaluation: settle under gravity, then actuate with development.

    Fitness is the horizontal center-of-mass displacement over the
    actuation phase, in voxel lengths. Numerical blow-up yields
    displacement 0 with the unstable flag set.
    """
    t0 = _time.perf_counter()
    state = build_lattice(phenotype, config)
    ks = spring_constants(state, config)
    dt_state = {"dt": stable_dt(state, config),
                "k_ref": float(ks.max()) if ks.size else config.ground_stiffness}
    trajectory = [(0.0, *state.center_of_mass())]

    def _fail():
        return SimResult(
            displacement_xy=0.0,
            trajectory=np.asarray(trajectory),
            final_stiffness=state.stiffness.copy(),
            congenital_stiffness=state.congenital.copy(),
            peak_stress=state.peak_stress.copy(),
            peak_pressure=state.peak_pressure.copy(),
            unstable=True,
            wall_time=_time.perf_counter() - t0)

    if not _run_chunked(state, config, config.settle_duration, rule,
                        actuate=False, act_t0=0.0,
                        trajectory=trajectory, dt_state=dt_state):
        return _fail()
    com_start = state.center_of_mass()
    act_t0 = state.time
    duration = config.sim_cycles / config.actuation_frequency
    if not _run_chunked(state, config, duration, rule,
                        actuate=True, act_t0=act_t0,
                        trajectory=trajectory, dt_state=dt_state):
        return _fail()
    com_end = state.center_of_mass()
    disp = float(np.hypot(com_end[0] - com_start[0],
                          com_end[1] - com_start[1]))
    return SimResult(
        displacement_xy=disp / config.voxel_edge_length,
        trajectory=np.asarray(trajectory),
        final_stiffness=state.stiffness.copy(),
        congenital_stiffness=state.congenital.copy(),
        peak_stress=state.peak_stress.copy(),
        peak_pressure=state.peak_pressure.copy(),
        unstable=False,
        wall_time=_time.perf_counter() - t0)


# ---------------------------------------------------------------------------
# Exports

def write_trajectory(path, trajectory: np.ndarray) -> None:
    """CSV with header t,com_x,com_y,com_z; SI units, 6 significant digits."""
    with open(path, "w") as fh:
        fh.write("t,com_x,com_y,com_z\n")
        for row in trajectory:
            fh.write(",".join(f"{v:.6g}" for v in row) + "\n")


def write_final_state(path, phenotype: Phenotype, result: SimResult) -> None:
    """Per-voxel JSON: lattice index, congenital/final stiffness, peaks."""
    coords = phenotype.voxel_coords
    voxels = []
    for n, (x, y, z) in enumerate(coords):
        voxels.append({
            "index": [int(x), int(y), int(z)],
            "k_congenital": float(result.congenital_stiffness[n]),
            "k_final": float(result.final_stiffness[n]),
            "peak_stress": float(result.peak_stress[n]),
            "peak_pressure": float(result.peak_pressure[n]),
        })
    with open(path, "w") as fh:
        json.dump({"displacement_xy": result.displacement_xy,
                   "unstable": result.unstable,
                   "voxels": voxels}, fh, indent=1)
        fh.write("\n")
