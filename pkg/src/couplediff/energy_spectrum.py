"""Discrete energy, spectral gap, and the energy-control estimate.

The energy of a state w = (u, v) has three nonnegative terms: the Dirichlet
term of u on (-1, 0), the double-quadrature jump term of v on (0, 1), and
the interface exchange term tying v to the trace u(0).  The generator is
the negative weighted gradient of this energy, so

    E(w) = 1/2 <w, -L w>_W

holds to roundoff, and the smallest nonzero eigenvalue lambda2 of -L in the
weighted inner product equals twice the gap constant beta1 that controls the
exponential decay of ||w - mean||.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .discretization import (
    GeneratorMatrix,
    Grid,
    StateField,
    interface_profile,
    mass,
    pair_kernel_matrix,
    require_resolved,
    weighted_inner,
)
from .kernels import CouplingConstants, Kernel


@dataclass
class EnergyBreakdown:
    local_term: float
    nonlocal_term: float
    coupling_term: float

    @property
    def total(self) -> float:
        return self.local_term + self.nonlocal_term + self.coupling_term


def energy_terms(grid: Grid, constants: CouplingConstants, values, pair, q):
    """The three energy terms from precomputed kernel data.

    local    = 1/2 sum_i (u_{i+1} - u_i)^2 / h
    nonlocal = (c1/4) sum_jk K_jk (v_k - v_j)^2 h^2
    coupling = (c2/2) sum_j q_j (v_j - u_I)^2 h
    """
    nl0 = grid.interface_index + 1
    u = values[:nl0]
    v = values[nl0:]
    local = 0.5 * float(np.sum(np.diff(u) ** 2)) / grid.h_local
    dv = v[None, :] - v[:, None]
    nonlocal_ = 0.25 * constants.c1 * grid.h_nonlocal**2 * float(np.sum(pair * dv * dv))
    coupling = (
        0.5 * constants.c2 * grid.h_nonlocal * float(np.sum(q * (v - u[-1]) ** 2))
    )
    return local, nonlocal_, coupling


def energy(
    grid: Grid, kernel: Kernel, constants: CouplingConstants, w: StateField
) -> EnergyBreakdown:
    require_resolved(grid, kernel)
    pair = pair_kernel_matrix(grid, kernel)
    q = interface_profile(grid, kernel)
    local, nonlocal_, coupling = energy_terms(grid, constants, w.values, pair, q)
    return EnergyBreakdown(local, nonlocal_, coupling)


def nonlocal_energy_full(grid: Grid, kernel: Kernel, w: StateField) -> float:
    """Pure nonlocal energy over the whole domain (-1, 1).

    Double quadrature over all degree-of-freedom pairs, local nodes and
    nonlocal centers alike, of J_eps(x - y) (w(y) - w(x))^2.
    """
    require_resolved(grid, kernel)
    x = grid.positions
    ww = grid.weights
    K = kernel(x[:, None] - x[None, :])
    dw = w.values[None, :] - w.values[:, None]
    return float(np.sum((ww[:, None] * ww[None, :]) * K * dw * dw))


@dataclass
class SpectralReport:
    beta1: float
    lambda2: float
    eigvec: StateField
    residual: float


def estimate_beta1(generator: GeneratorMatrix) -> SpectralReport:
    """Smallest nonzero eigenvalue of -L in the weighted inner product.

    Solves the W-symmetric eigenproblem A x = lambda W x with A = -W L,
    deflates the constant (zero) mode, and returns lambda2 together with
    beta1 = lambda2 / 2 and the mass-zero eigenfunction.
    """
    W = generator.weights
    A = -(W[:, None] * generator.matrix)
    A = 0.5 * (A + A.T)
    d = 1.0 / np.sqrt(W)
    B = d[:, None] * A * d[None, :]
    vals, vecs = scipy.linalg.eigh(B)
    if vals[0] > 1e-8 * max(vals[1], 1.0):
        raise RuntimeError(
            f"constant mode not found in the spectrum (lowest eigenvalue {vals[0]:.3e})"
        )
    lam = float(vals[1])
    x = d * vecs[:, 1]
    x /= np.sqrt(np.sum(W * x * x))
    x *= np.sign(x[np.argmax(np.abs(x))]) or 1.0
    r = -generator.matrix @ x - lam * x
    residual = float(np.sqrt(np.sum(W * r * r)))
    if residual > 1e-8 * lam:
        raise RuntimeError(
            f"eigensolver residual {residual:.3e} exceeds 1e-8 * lambda2 = {1e-8 * lam:.3e}"
        )
    return SpectralReport(
        beta1=0.5 * lam,
        lambda2=lam,
        eigvec=StateField(generator.grid, x),
        residual=residual,
    )


def rayleigh(
    grid: Grid, kernel: Kernel, constants: CouplingConstants, w: StateField
) -> float:
    """Energy over squared weighted norm of the mean-free part of w."""
    shifted = StateField(grid, w.values - 0.5 * mass(grid, w))
    denom = weighted_inner(grid, shifted, shifted)
    scale = float(np.max(np.abs(w.values))) or 1.0
    if denom <= 1e-28 * scale * scale:
        raise ValueError("rayleigh quotient undefined for (numerically) constant input")
    return energy(grid, kernel, constants, w).total / denom


def estimate_energy_control_k(
    grid: Grid,
    kernel: Kernel,
    constants: CouplingConstants,
    n_samples: int,
    seed: int,
) -> float:
    """Randomized lower estimate of the constant dominating the full nonlocal energy.

    Draws mean-zero standard normal states sequentially from one seeded
    stream and returns the minimum over samples of
    energy(w).total / nonlocal_energy_full(w).  Samples whose full nonlocal
    energy is below 1e-14 are discarded.
    """
    if n_samples < 10:
        raise ValueError("need at least 10 samples")
    require_resolved(grid, kernel)
    pair = pair_kernel_matrix(grid, kernel)
    q = interface_profile(grid, kernel)
    x = grid.positions
    ww = grid.weights
    K = kernel(x[:, None] - x[None, :])
    WKW = ww[:, None] * K * ww[None, :]

    rng = np.random.default_rng(seed)
    best = np.inf
    for _ in range(n_samples):
        z = rng.standard_normal(grid.size)
        z -= 0.5 * float(ww @ z)
        dz = z[None, :] - z[:, None]
        nlf = float(np.sum(WKW * dz * dz))
        if nlf < 1e-14:
            continue
        total = sum(energy_terms(grid, constants, z, pair, q))
        best = min(best, total / nlf)
    if not np.isfinite(best):
        raise RuntimeError("all random samples had degenerate nonlocal energy")
    return best
