"""Acceptance gate: every criterion at its stated size and tolerance.

Each test prints one `ACCEPTANCE <nn> <name>: PASS|FAIL` line (visible with
pytest -rA).  Criterion 06 asserts, in addition to the strict decrease of the
sweep error, that the gap constant at eps = 0.05 lies within 5% of pi^2/8;
that target is quantitatively unreachable for unit-radius kernels (the
interface contact conductance of the rescaled kernel is (1/eps) int rho J,
so the gap solves mu tan mu = 2g and still sits ~24% below the heat value at
eps = 0.05).  The assertion is kept as stated and fails honestly; see the
transmission-oracle test in test_energy_spectrum.py for the verified value.
"""
import time

import numpy as np
import pytest
import scipy.linalg

from couplediff import (
    BarrierSpec,
    StateField,
    StepScheme,
    assemble_generator,
    assemble_heat_generator,
    barrier_fields,
    build_grid,
    cfl_limit,
    coupling_constants,
    decay_report,
    epsilon_sweep,
    estimate_beta1,
    estimate_energy_control_k,
    evolve,
    make_kernel,
    picard_window_solve,
    step_explicit,
    step_implicit,
    supersolution_check,
)
from couplediff.config import SimConfig
from conftest import weighted_norm

PI2_OVER_8 = np.pi**2 / 8.0


def report(num, name, ok, detail=""):
    status = "PASS" if ok else "FAIL"
    print(f"ACCEPTANCE {num:02d} {name}: {status}  {detail}")
    return ok


@pytest.fixture(scope="module")
def setup200():
    kernel = make_kernel("triangle", 1.0, 1.0)
    constants = coupling_constants(kernel)
    grid = build_grid(200, 200)
    generator = assemble_generator(grid, kernel, constants)
    return grid, kernel, constants, generator


@pytest.fixture(scope="module")
def step_run(setup200):
    grid, _, _, generator = setup200
    w0 = StateField(grid, np.where(grid.positions <= 0.0, 1.0, 0.0))
    start = time.time()
    traj = evolve(generator, w0, StepScheme(kind="implicit", dt=1e-3), 10.0)
    return traj, time.time() - start


def test_criterion_01_mass_conservation(step_run):
    traj, elapsed = step_run
    drift = float(np.max(np.abs(traj.mass - traj.mass[0])) / abs(traj.mass[0]))
    ok = drift <= 1e-11 and elapsed <= 30.0
    assert report(1, "mass-conservation", ok, f"drift={drift:.2e} time={elapsed:.1f}s")


def test_criterion_02_energy_dissipation(step_run):
    traj, _ = step_run
    rise = float(np.max(np.diff(traj.energy_total)))
    ok = rise <= 1e-12
    assert report(2, "energy-dissipation", ok, f"max step increase={rise:.2e}")


def test_criterion_03_spectral_gap(setup200):
    _, kernel, constants, generator = setup200
    start = time.time()
    rep = estimate_beta1(generator)
    fine = estimate_beta1(
        assemble_generator(build_grid(400, 400), kernel, constants)
    )
    elapsed = time.time() - start
    change = abs(fine.beta1 / rep.beta1 - 1.0)
    ok = (
        rep.beta1 > 0.01
        and rep.residual <= 1e-8 * rep.lambda2
        and change < 0.01
        and elapsed <= 60.0
    )
    assert report(
        3, "spectral-gap",
        ok,
        f"beta1={rep.beta1:.6f} residual={rep.residual:.1e} "
        f"refinement change={change:.2e} time={elapsed:.1f}s",
    )


def test_criterion_04_exponential_decay(setup200):
    grid, _, _, generator = setup200
    w0 = StateField(
        grid, np.exp(-((grid.positions + 0.5) ** 2) / (2 * 0.15**2))
    )
    traj = evolve(generator, w0, StepScheme(kind="implicit", dt=2e-3), 8.0)
    spectral = estimate_beta1(generator)
    rep = decay_report(traj, spectral)
    in_range = 1.9 * spectral.beta1 <= rep.fitted_rate <= 2.1 * spectral.beta1
    ok = rep.bound_satisfied and in_range
    assert report(
        4, "exponential-decay",
        ok,
        f"bound={rep.bound_satisfied} fitted={rep.fitted_rate:.5f} "
        f"2*beta1={2 * spectral.beta1:.5f}",
    )


def test_criterion_05_eigensolver_anchor():
    rep = estimate_beta1(assemble_heat_generator(400))
    rel = abs(rep.beta1 / PI2_OVER_8 - 1.0)
    ok = rel <= 0.02
    assert report(5, "pure-heat-anchor", ok, f"beta1={rep.beta1:.6f} rel err={rel:.2e}")


def test_criterion_06_rescaling_limit():
    cfg = SimConfig(
        init_kind="gaussian", init_center=-0.5, init_width=0.15,
        grid_n_local=200, grid_n_nonlocal=200, time_dt=5e-4,
    )
    start = time.time()
    rows = epsilon_sweep(cfg, [0.4, 0.2, 0.1, 0.05], horizon=0.5)
    elapsed = time.time() - start
    errs = [r.sup_error_l2 for r in rows]
    decreasing = all(a > b for a, b in zip(errs, errs[1:]))
    beta_rel = abs(rows[-1].beta1_eps / PI2_OVER_8 - 1.0)
    beta_ok = beta_rel <= 0.05
    ok = decreasing and beta_ok and elapsed <= 300.0
    report(
        6, "rescaling-limit",
        ok,
        f"sup_errors={[f'{e:.4f}' for e in errs]} decreasing={decreasing}; "
        f"beta1(0.05)={rows[-1].beta1_eps:.4f} vs pi^2/8={PI2_OVER_8:.4f} "
        f"(rel {beta_rel:.1%}, required 5%) time={elapsed:.0f}s",
    )
    assert decreasing
    assert beta_ok, (
        f"beta1_eps at eps=0.05 is {rows[-1].beta1_eps:.4f}, {beta_rel:.1%} from "
        f"pi^2/8; the interface contact conductance bounds it near the "
        f"transmission value mu^2/2 with mu tan mu = 1/(3 eps), far outside 5%"
    )


def test_criterion_07_comparison_principle():
    kernel = make_kernel("triangle", 1.0, 1.0)
    constants = coupling_constants(kernel)
    grid = build_grid(50, 50)
    generator = assemble_generator(grid, kernel, constants)
    rng = np.random.default_rng(20260801)
    dt_exp = cfl_limit(generator)
    worst = 0.0
    for _ in range(50):
        lo = rng.standard_normal(grid.size)
        hi = lo + np.abs(rng.standard_normal(grid.size))
        a, b = StateField(grid, lo), StateField(grid, hi)
        for _ in range(200):
            a = step_explicit(generator, a, dt_exp)
            b = step_explicit(generator, b, dt_exp)
            worst = max(worst, float(np.max(a.values - b.values)))
        a, b = StateField(grid, lo), StateField(grid, hi)
        for _ in range(40):
            a = step_implicit(generator, a, 5e-3)
            b = step_implicit(generator, b, 5e-3)
            worst = max(worst, float(np.max(a.values - b.values)))
    ok = worst <= 1e-12
    assert report(7, "comparison-principle", ok, f"worst violation={worst:.2e}")


def test_criterion_08_picard_fidelity():
    kernel = make_kernel("triangle", 1.0, 1.0)
    constants = coupling_constants(kernel)
    grid = build_grid(100, 100)
    window = 0.8 / (2 * constants.c1 + constants.c2)
    scheme = StepScheme(kind="picard", picard_window=window, picard_tol=1e-10)
    w0 = StateField(grid, np.where(grid.positions <= 0.0, 1.0, 0.0))
    traj, rep = picard_window_solve(grid, kernel, constants, w0, scheme, 0.5)
    generator = assemble_generator(grid, kernel, constants)
    mono = evolve(generator, w0, StepScheme(kind="implicit", dt=traj.dt), 0.5)
    gap = weighted_norm(grid, traj.final_state.values - mono.final_state.values)
    converged = all(n <= scheme.picard_tol for n in rep.final_update_norms)
    ratios_ok = rep.kappa >= 1.0 or all(r <= rep.kappa for r in rep.contraction_ratios)
    ok = converged and gap <= 1e-6 and ratios_ok
    assert report(
        8, "picard-fidelity",
        ok,
        f"windows={rep.window_count} gap={gap:.2e} kappa={rep.kappa:.3f} "
        f"max ratio={max(rep.contraction_ratios):.2e}",
    )


def test_criterion_09_semigroup_oracle():
    kernel = make_kernel("triangle", 1.0, 1.0)
    constants = coupling_constants(kernel)
    grid = build_grid(20, 20)
    generator = assemble_generator(grid, kernel, constants)
    W = generator.weights
    A = -(W[:, None] * generator.matrix)
    A = 0.5 * (A + A.T)
    d = 1.0 / np.sqrt(W)
    vals, vecs = scipy.linalg.eigh(d[:, None] * A * d[None, :])
    w0 = StateField(grid, np.exp(-((grid.positions + 0.5) ** 2) / (2 * 0.15**2)))
    exact = d * (vecs @ (np.exp(-vals * 0.5) * (vecs.T @ (np.sqrt(W) * w0.values))))
    traj = evolve(generator, w0, StepScheme(kind="implicit", dt=1e-4), 0.5)
    gap = weighted_norm(grid, traj.final_state.values - exact)
    ok = gap <= 1e-5
    assert report(9, "semigroup-oracle", ok, f"L2 gap={gap:.2e}")


def test_criterion_10_operator_structure():
    worst = 0.0
    for family in ("uniform", "triangle", "epanechnikov"):
        for eps in (1.0, 0.25):
            kernel = make_kernel(family, 1.0, eps)
            gen = assemble_generator(
                build_grid(50, 50), kernel, coupling_constants(kernel)
            )
            L, W = gen.matrix, gen.weights
            n = L.shape[0]
            row_mag = np.abs(L).sum(axis=1)
            WL = W[:, None] * L
            off = ~np.eye(n, dtype=bool)
            M = np.eye(n) - 0.05 * L
            defect = max(
                float(np.max(np.abs(WL - WL.T))) / float(np.max(np.abs(WL))),
                float(np.max(np.abs(L.sum(axis=1)) / row_mag)),
                float(np.max(np.abs(L @ np.ones(n)) / row_mag)),
                float(-min(0.0, np.min(L[off]))),
                float(max(0.0, np.max(M[off]))),
                float(max(0.0, 1.0 - np.min(np.diag(M)))),
                float(np.max(np.abs(M.sum(axis=1) - 1.0) / (1.0 + 0.05 * row_mag))),
            )
            worst = max(worst, defect)
    ok = worst <= 1e-12
    assert report(10, "operator-structure", ok, f"worst defect={worst:.2e}")


def test_criterion_11_energy_control():
    constants = coupling_constants(make_kernel("triangle", 1.0, 1.0))
    ks = {}
    for eps, n in ((1.0, 100), (0.5, 200), (0.25, 400)):
        grid = build_grid(n, n)
        kernel = make_kernel("triangle", 1.0, eps)
        ks[eps] = estimate_energy_control_k(grid, kernel, constants, 500, seed=1234)
    positive = all(v > 0.0 for v in ks.values())
    uniform = min(ks.values()) >= 0.5 * ks[1.0]
    ok = positive and uniform
    assert report(
        11, "energy-control",
        ok,
        "k-hat=" + ", ".join(f"{e}:{v:.1f}" for e, v in ks.items())
        + f" min/k(1)={min(ks.values()) / ks[1.0]:.3f}",
    )


def test_criterion_12_barrier_supersolution():
    kernel = make_kernel("triangle", 1.0, 1.0)
    constants = coupling_constants(kernel)
    grid = build_grid(1000, 100)
    spec = BarrierSpec(xi0=2.0, a=0.5, T=0.03)
    times = np.arange(0.0, spec.T + 1e-12, 1e-5)
    u, v = barrier_fields(spec, grid, times)
    rep = supersolution_check(u, v, times, grid, kernel, constants, tol=1e-6)
    ok = rep.passed((1, 2, 3))
    assert report(
        12, "barrier-supersolution",
        ok,
        f"margins={[f'{m:.2e}' for m in rep.margins()[:3]]}",
    )
