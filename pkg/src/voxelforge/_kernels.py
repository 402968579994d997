"""Compiled inner loop of the lattice simulation.

One kernel advances the state a fixed number of timesteps at a fixed dt.
The driver in physics.py handles chunking, timestep recomputation, and
blow-up detection. No fastmath: runs must be bitwise reproducible, so
fused/reordered arithmetic is off.
"""

import math

import numpy as np
from numba import njit


@njit(cache=True, fastmath=False)
def run_steps(n_steps, dt, t0, act_t0,
              pos, vel, k, masses,
              sp_i, sp_j, n_inc,
              alpha, phase,
              f_stress, f_press, prev_s, prev_p,
              peak_s, peak_p, ground_n,
              edge, amp, freq, k_min, k_max,
              zeta, kg, mu, g,
              decay, actuate, dev_rule):
    """Advance n_steps semi-implicit Euler steps in place; returns end time.

    dev_rule: 0 = no development, 1 = stress-driven, 2 = pressure-driven.
    decay is exp(-dt/tau) of the signal filter (0 -> unfiltered).
    """
    nv = pos.shape[0]
    ns = sp_i.shape[0]
    area = edge * edge
    two_pi_f = 2.0 * math.pi * freq
    inv_krange = 1.0 / (k_max - k_min)

    forces = np.zeros((nv, 3))
    psi = np.ones(nv)
    stress_sum = np.zeros(nv)
    comp_sum = np.zeros(nv)

    t = t0
    for _ in range(n_steps):
        if actuate:
            for v in range(nv):
                damp = (k_max - k[v]) * inv_krange
                psi[v] = 1.0 + amp * math.sin(
                    two_pi_f * (t - act_t0) + phase[v]) * damp

        for v in range(nv):
            forces[v, 0] = 0.0
            forces[v, 1] = 0.0
            forces[v, 2] = 0.0
            stress_sum[v] = 0.0
            comp_sum[v] = 0.0

        for e in range(ns):
            i = sp_i[e]
            j = sp_j[e]
            dx = pos[j, 0] - pos[i, 0]
            dy = pos[j, 1] - pos[i, 1]
            dz = pos[j, 2] - pos[i, 2]
            ell = math.sqrt(dx * dx + dy * dy + dz * dz)
            if ell < 1.0e-12:
                continue
            ux = dx / ell
            uy = dy / ell
            uz = dz / ell
            rest = edge * 0.5 * (psi[i] + psi[j])
            ks = 2.0 * k[i] * k[j] / (k[i] + k[j]) * edge
            fax = ks * (ell - rest)
            mred = masses[i] * masses[j] / (masses[i] + masses[j])
            cdamp = 2.0 * zeta * math.sqrt(ks * mred)
            vrel = ((vel[j, 0] - vel[i, 0]) * ux
                    + (vel[j, 1] - vel[i, 1]) * uy
                    + (vel[j, 2] - vel[i, 2]) * uz)
            ftot = fax + cdamp * vrel
            forces[i, 0] += ftot * ux
            forces[i, 1] += ftot * uy
            forces[i, 2] += ftot * uz
            forces[j, 0] -= ftot * ux
            forces[j, 1] -= ftot * uy
            forces[j, 2] -= ftot * uz
            sa = abs(fax) / area
            stress_sum[i] += sa
            stress_sum[j] += sa
            if fax < 0.0:
                ca = -fax / area
                comp_sum[i] += ca
                comp_sum[j] += ca

        for v in range(nv):
            forces[v, 2] -= masses[v] * g
            pen = -pos[v, 2]
            contact = pen > 0.0
            ne = 0.0
            cg = 0.0
            if contact:
                ne = kg * pen
                cg = 2.0 * zeta * math.sqrt(kg * masses[v])
                forces[v, 2] += ne
                vtx = vel[v, 0]
                vty = vel[v, 1]
                vt = math.sqrt(vtx * vtx + vty * vty)
                if vt > 1.0e-12:
                    fmax = mu * ne
                    fcap = masses[v] * vt / dt
                    ff = fmax if fmax < fcap else fcap
                    forces[v, 0] -= ff * vtx / vt
                    forces[v, 1] -= ff * vty / vt
            inv_m = 1.0 / masses[v]
            vel[v, 0] += forces[v, 0] * inv_m * dt
            vel[v, 1] += forces[v, 1] * inv_m * dt
            if contact:
                # contact damping integrated implicitly: stable at any dt
                vel[v, 2] = (vel[v, 2] + forces[v, 2] * inv_m * dt) \
                    / (1.0 + cg * inv_m * dt)
                nf = ne - cg * vel[v, 2]
                if nf < 0.0:
                    nf = 0.0
                ground_n[v] = nf
            else:
                vel[v, 2] += forces[v, 2] * inv_m * dt
                ground_n[v] = 0.0
            pos[v, 0] += vel[v, 0] * dt
            pos[v, 1] += vel[v, 1] * dt
            pos[v, 2] += vel[v, 2] * dt

        for v in range(nv):
            raw_s = stress_sum[v] / n_inc[v] if n_inc[v] > 0 else 0.0
            raw_p = (comp_sum[v] + ground_n[v] / area) / 6.0
            fs = raw_s + (f_stress[v] - raw_s) * decay
            fp = raw_p + (f_press[v] - raw_p) * decay
            f_stress[v] = fs
            f_press[v] = fp
            if fs > peak_s[v]:
                peak_s[v] = fs
            if fp > peak_p[v]:
                peak_p[v] = fp
            if dev_rule == 1:
                kn = k[v] + alpha[v] * (fs - prev_s[v])
            elif dev_rule == 2:
                kn = k[v] + alpha[v] * (fp - prev_p[v])
            else:
                kn = k[v]
            if kn < k_min:
                kn = k_min
            elif kn > k_max:
                kn = k_max
            k[v] = kn
            prev_s[v] = fs
            prev_p[v] = fp

        t += dt

    return t
