"""Fused single-pass evaluation of the species rates.

The numpy operator composition in model_full is the readable reference;
this module evaluates the identical stencils node-by-node in one compiled
sweep (no intermediate fields), which is what makes desk-scale 3D runs
affordable on one core.  A test pins the two paths together to round-off.

The interior sweep is branch-free: degenerate x/y axes are handled by
collapsing the periodic neighbour indices onto the node itself, which
makes every tangential difference vanish identically.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from . import operators as ops
from .grid import Grid


@njit(cache=True, fastmath=True)
def _prep_kernel(rho, u, F, P, c2, hx, hy, hz, D1, S, div_u):
    """Combined stress c2*rho*F F^T - P*I and div u in one sweep.

    Folding the pressure into the stress diagonal lets its gradient ride
    along with the stress divergence (the stencils are identical)."""
    nx, ny, nz = rho.shape
    cx = 0.0 if nx == 1 else 0.5 / hx
    cy = 0.0 if ny == 1 else 0.5 / hy
    cz = 0.5 / hz
    e0 = D1[0] / hz
    e1 = D1[1] / hz
    e2 = D1[2] / hz
    for i in range(nx):
        ip = i + 1 if i + 1 < nx else 0
        im = i - 1 if i > 0 else nx - 1
        for j in range(ny):
            jp = j + 1 if j + 1 < ny else 0
            jm = j - 1 if j > 0 else ny - 1
            for k in range(nz):
                s = c2 * rho[i, j, k]
                for a in range(3):
                    for b in range(a, 3):
                        v = s * (F[a, 0, i, j, k] * F[b, 0, i, j, k]
                                 + F[a, 1, i, j, k] * F[b, 1, i, j, k]
                                 + F[a, 2, i, j, k] * F[b, 2, i, j, k])
                        S[a, b, i, j, k] = v
                        S[b, a, i, j, k] = v
                p0 = P[i, j, k]
                S[0, 0, i, j, k] -= p0
                S[1, 1, i, j, k] -= p0
                S[2, 2, i, j, k] -= p0

                if k == 0:
                    dz = (e0 * u[2, i, j, 0] + e1 * u[2, i, j, 1]
                          + e2 * u[2, i, j, 2])
                elif k == nz - 1:
                    dz = -(e0 * u[2, i, j, nz - 1] + e1 * u[2, i, j, nz - 2]
                           + e2 * u[2, i, j, nz - 3])
                else:
                    dz = (u[2, i, j, k + 1] - u[2, i, j, k - 1]) * cz
                div_u[i, j, k] = (dz
                                  + (u[0, ip, j, k] - u[0, im, j, k]) * cx
                                  + (u[1, i, jp, k] - u[1, i, jm, k]) * cy)


@njit(cache=True, fastmath=True)
def _rates_interior(rho, u, F, psi, S, div_u, mu, lam, sign, alpha,
                    hx, hy, hz, with_transport, rho_dot, u_dot, F_dot):
    """Interior z planes (central differences everywhere), fully unrolled."""
    nx, ny, nz = rho.shape
    no_x = nx == 1
    no_y = ny == 1
    cx = 0.0 if no_x else 0.5 / hx
    cy = 0.0 if no_y else 0.5 / hy
    cz = 0.5 / hz
    cx2 = 0.0 if no_x else 1.0 / (hx * hx)
    cy2 = 0.0 if no_y else 1.0 / (hy * hy)
    cz2 = 1.0 / (hz * hz)
    mu_lam = mu + lam

    for i in range(nx):
        ip = i + 1 if i + 1 < nx else 0
        im = i - 1 if i > 0 else nx - 1
        for j in range(ny):
            jp = j + 1 if j + 1 < ny else 0
            jm = j - 1 if j > 0 else ny - 1
            for k in range(1, nz - 1):
                kp = k + 1
                km = k - 1
                r = rho[i, j, k]
                u0 = u[0, i, j, k]
                u1 = u[1, i, j, k]
                u2 = u[2, i, j, k]

                g00 = (u[0, ip, j, k] - u[0, im, j, k]) * cx
                g01 = (u[0, i, jp, k] - u[0, i, jm, k]) * cy
                g02 = (u[0, i, j, kp] - u[0, i, j, km]) * cz
                g10 = (u[1, ip, j, k] - u[1, im, j, k]) * cx
                g11 = (u[1, i, jp, k] - u[1, i, jm, k]) * cy
                g12 = (u[1, i, j, kp] - u[1, i, j, km]) * cz
                g20 = (u[2, ip, j, k] - u[2, im, j, k]) * cx
                g21 = (u[2, i, jp, k] - u[2, i, jm, k]) * cy
                g22 = (u[2, i, j, kp] - u[2, i, j, km]) * cz

                lap0 = ((u[0, ip, j, k] - 2.0 * u0 + u[0, im, j, k]) * cx2
                        + (u[0, i, jp, k] - 2.0 * u0 + u[0, i, jm, k]) * cy2
                        + (u[0, i, j, kp] - 2.0 * u0 + u[0, i, j, km]) * cz2)
                lap1 = ((u[1, ip, j, k] - 2.0 * u1 + u[1, im, j, k]) * cx2
                        + (u[1, i, jp, k] - 2.0 * u1 + u[1, i, jm, k]) * cy2
                        + (u[1, i, j, kp] - 2.0 * u1 + u[1, i, j, km]) * cz2)
                lap2 = ((u[2, ip, j, k] - 2.0 * u2 + u[2, im, j, k]) * cx2
                        + (u[2, i, jp, k] - 2.0 * u2 + u[2, i, jm, k]) * cy2
                        + (u[2, i, j, kp] - 2.0 * u2 + u[2, i, j, km]) * cz2)

                gs0 = (psi[ip, j, k] - psi[im, j, k]) * cx
                gs1 = (psi[i, jp, k] - psi[i, jm, k]) * cy
                gs2 = (psi[i, j, kp] - psi[i, j, km]) * cz
                gd0 = (div_u[ip, j, k] - div_u[im, j, k]) * cx
                gd1 = (div_u[i, jp, k] - div_u[i, jm, k]) * cy
                gd2 = (div_u[i, j, kp] - div_u[i, j, km]) * cz

                dS0 = ((S[0, 0, ip, j, k] - S[0, 0, im, j, k]) * cx
                       + (S[0, 1, i, jp, k] - S[0, 1, i, jm, k]) * cy
                       + (S[0, 2, i, j, kp] - S[0, 2, i, j, km]) * cz)
                dS1 = ((S[1, 0, ip, j, k] - S[1, 0, im, j, k]) * cx
                       + (S[1, 1, i, jp, k] - S[1, 1, i, jm, k]) * cy
                       + (S[1, 2, i, j, kp] - S[1, 2, i, j, km]) * cz)
                dS2 = ((S[2, 0, ip, j, k] - S[2, 0, im, j, k]) * cx
                       + (S[2, 1, i, jp, k] - S[2, 1, i, jm, k]) * cy
                       + (S[2, 2, i, j, kp] - S[2, 2, i, j, km]) * cz)

                sr = sign * r
                ar = alpha * r
                u_dot[0, i, j, k] = (-(g00 * u0 + g01 * u1 + g02 * u2)
                                     + (mu * lap0 + mu_lam * gd0
                                        + dS0 + sr * gs0 - ar * u0) / r)
                u_dot[1, i, j, k] = (-(g10 * u0 + g11 * u1 + g12 * u2)
                                     + (mu * lap1 + mu_lam * gd1
                                        + dS1 + sr * gs1 - ar * u1) / r)
                u_dot[2, i, j, k] = (-(g20 * u0 + g21 * u1 + g22 * u2)
                                     + (mu * lap2 + mu_lam * gd2
                                        + dS2 + sr * gs2 - ar * u2) / r)

                if with_transport:
                    rho_dot[i, j, k] = -(
                        (rho[ip, j, k] * u[0, ip, j, k]
                         - rho[im, j, k] * u[0, im, j, k]) * cx
                        + (rho[i, jp, k] * u[1, i, jp, k]
                           - rho[i, jm, k] * u[1, i, jm, k]) * cy
                        + (rho[i, j, kp] * u[2, i, j, kp]
                           - rho[i, j, km] * u[2, i, j, km]) * cz)
                    for b in range(3):
                        F0 = F[0, b, i, j, k]
                        F1 = F[1, b, i, j, k]
                        F2 = F[2, b, i, j, k]
                        F_dot[0, b, i, j, k] = (
                            -(u0 * (F[0, b, ip, j, k] - F[0, b, im, j, k]) * cx
                              + u1 * (F[0, b, i, jp, k] - F[0, b, i, jm, k]) * cy
                              + u2 * (F[0, b, i, j, kp] - F[0, b, i, j, km]) * cz)
                            + g00 * F0 + g01 * F1 + g02 * F2)
                        F_dot[1, b, i, j, k] = (
                            -(u0 * (F[1, b, ip, j, k] - F[1, b, im, j, k]) * cx
                              + u1 * (F[1, b, i, jp, k] - F[1, b, i, jm, k]) * cy
                              + u2 * (F[1, b, i, j, kp] - F[1, b, i, j, km]) * cz)
                            + g10 * F0 + g11 * F1 + g12 * F2)
                        F_dot[2, b, i, j, k] = (
                            -(u0 * (F[2, b, ip, j, k] - F[2, b, im, j, k]) * cx
                              + u1 * (F[2, b, i, jp, k] - F[2, b, i, jm, k]) * cy
                              + u2 * (F[2, b, i, j, kp] - F[2, b, i, j, km]) * cz)
                            + g20 * F0 + g21 * F1 + g22 * F2)


@njit(cache=True, fastmath=True)
def _rates_walls(rho, u, F, psi, S, div_u, mu, lam, sign, alpha,
                 hx, hy, hz, D1, D2, with_transport, rho_dot, u_dot, F_dot):
    """The two wall planes, using the one-sided z stencils."""
    nx, ny, nz = rho.shape
    no_x = nx == 1
    no_y = ny == 1
    cx = 0.0 if no_x else 0.5 / hx
    cy = 0.0 if no_y else 0.5 / hy
    cx2 = 0.0 if no_x else 1.0 / (hx * hx)
    cy2 = 0.0 if no_y else 1.0 / (hy * hy)
    cz2 = 1.0 / (hz * hz)
    mu_lam = mu + lam

    gu = np.empty((3, 3))
    lap_u = np.empty(3)

    for wall in range(2):
        if wall == 0:
            k, z0, z1, z2, z3 = 0, 0, 1, 2, 3
            a0, a1, a2 = D1[0] / hz, D1[1] / hz, D1[2] / hz
        else:
            k, z0, z1, z2, z3 = nz - 1, nz - 1, nz - 2, nz - 3, nz - 4
            a0, a1, a2 = -D1[0] / hz, -D1[1] / hz, -D1[2] / hz
        b0 = D2[0] * cz2
        b1 = D2[1] * cz2
        b2 = D2[2] * cz2
        b3 = D2[3] * cz2

        for i in range(nx):
            ip = i + 1 if i + 1 < nx else 0
            im = i - 1 if i > 0 else nx - 1
            for j in range(ny):
                jp = j + 1 if j + 1 < ny else 0
                jm = j - 1 if j > 0 else ny - 1

                for a in range(3):
                    gu[a, 0] = (u[a, ip, j, k] - u[a, im, j, k]) * cx
                    gu[a, 1] = (u[a, i, jp, k] - u[a, i, jm, k]) * cy
                    gu[a, 2] = (a0 * u[a, i, j, z0] + a1 * u[a, i, j, z1]
                                + a2 * u[a, i, j, z2])
                    lap_u[a] = (
                        (u[a, ip, j, k] - 2.0 * u[a, i, j, k]
                         + u[a, im, j, k]) * cx2
                        + (u[a, i, jp, k] - 2.0 * u[a, i, j, k]
                           + u[a, i, jm, k]) * cy2
                        + b0 * u[a, i, j, z0] + b1 * u[a, i, j, z1]
                        + b2 * u[a, i, j, z2] + b3 * u[a, i, j, z3])

                r = rho[i, j, k]
                u0 = u[0, i, j, k]
                u1 = u[1, i, j, k]
                u2 = u[2, i, j, k]

                for a in range(3):
                    if a == 0:
                        gpsi = (psi[ip, j, k] - psi[im, j, k]) * cx
                        gdiv = (div_u[ip, j, k] - div_u[im, j, k]) * cx
                    elif a == 1:
                        gpsi = (psi[i, jp, k] - psi[i, jm, k]) * cy
                        gdiv = (div_u[i, jp, k] - div_u[i, jm, k]) * cy
                    else:
                        gpsi = (a0 * psi[i, j, z0] + a1 * psi[i, j, z1]
                                + a2 * psi[i, j, z2])
                        gdiv = (a0 * div_u[i, j, z0] + a1 * div_u[i, j, z1]
                                + a2 * div_u[i, j, z2])

                    divS = (a0 * S[a, 2, i, j, z0] + a1 * S[a, 2, i, j, z1]
                            + a2 * S[a, 2, i, j, z2]
                            + (S[a, 0, ip, j, k] - S[a, 0, im, j, k]) * cx
                            + (S[a, 1, i, jp, k] - S[a, 1, i, jm, k]) * cy)

                    conv = gu[a, 0] * u0 + gu[a, 1] * u1 + gu[a, 2] * u2
                    force = (mu * lap_u[a] + mu_lam * gdiv + divS
                             + sign * r * gpsi - alpha * r * u[a, i, j, k])
                    u_dot[a, i, j, k] = -conv + force / r

                if with_transport:
                    rho_dot[i, j, k] = -(
                        a0 * rho[i, j, z0] * u[2, i, j, z0]
                        + a1 * rho[i, j, z1] * u[2, i, j, z1]
                        + a2 * rho[i, j, z2] * u[2, i, j, z2]
                        + (rho[ip, j, k] * u[0, ip, j, k]
                           - rho[im, j, k] * u[0, im, j, k]) * cx
                        + (rho[i, jp, k] * u[1, i, jp, k]
                           - rho[i, jm, k] * u[1, i, jm, k]) * cy)

                    for a in range(3):
                        for b in range(3):
                            adv = (u2 * (a0 * F[a, b, i, j, z0]
                                         + a1 * F[a, b, i, j, z1]
                                         + a2 * F[a, b, i, j, z2])
                                   + u0 * (F[a, b, ip, j, k]
                                           - F[a, b, im, j, k]) * cx
                                   + u1 * (F[a, b, i, jp, k]
                                           - F[a, b, i, jm, k]) * cy)
                            F_dot[a, b, i, j, k] = (
                                -adv
                                + gu[a, 0] * F[0, b, i, j, k]
                                + gu[a, 1] * F[1, b, i, j, k]
                                + gu[a, 2] * F[2, b, i, j, k])


def species_rates(grid: Grid, rho, u, F, psi, p, with_transport=True):
    """(rho_dot, u_dot, F_dot) of one species; u_dot walls not yet zeroed.

    Transport outputs are left zero when with_transport is false (reduced
    formulation, which only needs the momentum rate).
    """
    S = np.empty_like(F)
    div_u = np.empty_like(rho)
    _prep_kernel(rho, u, F, p.pressure(rho), p.c2, grid.hx, grid.hy, grid.hz,
                 ops.D1_WALL, S, div_u)
    rho_dot = np.zeros_like(rho)
    u_dot = np.empty_like(u)
    F_dot = np.zeros_like(F)
    args = (rho, u, F, psi, S, div_u,
            p.mu, p.lam, p.electrostatic_sign, p.alpha,
            grid.hx, grid.hy, grid.hz)
    _rates_interior(*args, with_transport, rho_dot, u_dot, F_dot)
    _rates_walls(*args, ops.D1_WALL, ops.D2_WALL, with_transport,
                 rho_dot, u_dot, F_dot)
    return rho_dot, u_dot, F_dot
