import numpy as np
import pytest

from conftest import make_params
from demix.diagnostics import (
    check_energy_telescoping,
    check_entropy_dissipation,
    check_euler_lagrange,
    check_holder_modulus,
    check_kinetic_bound,
    check_mubar_gradient_decomposition,
    check_q_integrability,
    check_weak_form_residual,
    proved_failures,
    run_all_checks,
    weak_form_mode_residual,
)
from demix.energy import state_from_c1
from demix.grid import Grid1D, Profile
from demix.jko import JkoConfig, run_trajectory


@pytest.fixture(scope="module")
def demixing_run():
    from demix.constitutive import ArcsinDeGennes

    g = Grid1D(10.0, 48)
    params = make_params(ArcsinDeGennes(), chi=4.0)
    rng = np.random.default_rng(2)
    c1 = np.clip(
        0.5 + 0.15 * np.cos(np.pi * g.centers / 10.0) + 0.02 * rng.standard_normal(48),
        0.05,
        0.95,
    )
    initial = state_from_c1(Profile(g, c1))
    cfg = JkoConfig(tau=0.05, inner_tol=1e-6, inner_max_iter=2000)
    records = run_trajectory(initial, cfg, params, 12)
    return records, params, cfg


@pytest.fixture(scope="module")
def constant_run():
    from demix.constitutive import ArcsinDeGennes

    g = Grid1D(1.0, 24)
    params = make_params(ArcsinDeGennes(), chi=0.0)
    initial = state_from_c1(Profile(g, np.full(24, 0.5)))
    cfg = JkoConfig(tau=0.1, inner_tol=1e-8, inner_max_iter=50)
    records = run_trajectory(initial, cfg, params, 6)
    return records, params, cfg


def test_constant_trajectory_reports(constant_run):
    records, params, cfg = constant_run
    rep = check_energy_telescoping(records, params, cfg)
    assert rep.holds
    assert rep.lhs == pytest.approx(records[0].energy, abs=1e-12)
    kin = check_kinetic_bound(records, params, cfg)
    assert kin.holds and kin.lhs <= 1e-14
    ent = check_entropy_dissipation(records, params, cfg)
    assert ent.holds and ent.context["fraction_holding"] == 1.0
    hold = check_holder_modulus(records, params, cfg)
    assert hold.holds and hold.lhs == 0.0
    qint = check_q_integrability(records, params, cfg)
    assert qint.lhs <= 1e-12
    eula = check_euler_lagrange(records[-1], params, cfg.inner_tol)
    assert eula.holds and eula.lhs <= 1e-12
    mub = check_mubar_gradient_decomposition(records[-1], params)
    assert mub.lhs <= 1e-12
    for rep in check_weak_form_residual(records, params, cfg, 3):
        assert rep.lhs <= 1e-12


def test_proved_inequalities_on_demixing_run(demixing_run):
    records, params, cfg = demixing_run
    reports = run_all_checks(records, params, cfg)
    failures = proved_failures(reports)
    assert failures == []
    by_name = {r.name: r for r in reports}
    assert by_name["entropy_dissipation"].context["fraction_holding"] == 1.0


def test_entropy_dissipation_chi0_margins(constant_run):
    records, params, cfg = constant_run
    rep = check_entropy_dissipation(records, params, cfg)
    assert rep.context["worst_margin"] >= 0.0


def test_reports_are_deterministic(demixing_run):
    records, params, cfg = demixing_run
    a = run_all_checks(records, params, cfg)
    b = run_all_checks(records, params, cfg)
    for ra, rb in zip(a, b):
        assert ra == rb


def test_euler_lagrange_tracks_inner_tol(arcsin_model):
    g = Grid1D(10.0, 48)
    params = make_params(arcsin_model, chi=4.0)
    c1 = 0.5 + 0.2 * np.cos(np.pi * g.centers / 10.0)
    initial = state_from_c1(Profile(g, c1))
    residuals = []
    for tol in (1e-3, 1e-5):
        cfg = JkoConfig(tau=0.05, inner_tol=tol, inner_max_iter=4000)
        records = run_trajectory(initial, cfg, params, 2)
        residuals.append(records[-1].eula_residual)
        rep = check_euler_lagrange(records[-1], params, tol)
        assert rep.holds
    assert residuals[1] < residuals[0]


def test_mubar_decomposition_exact_and_refines(arcsin_model):
    # arithmetic-mean product rule is exact; the omega-substituted form of
    # the first factor carries the real discretization error and shrinks
    params = make_params(arcsin_model, chi=2.0)
    omega_mismatches = []
    for n in (32, 64, 128):
        g = Grid1D(10.0, n)
        c1 = 0.5 + 0.25 * np.cos(np.pi * g.centers / 10.0)
        initial = state_from_c1(Profile(g, c1))
        cfg = JkoConfig(tau=0.05, inner_tol=1e-7, inner_max_iter=3000)
        records = run_trajectory(initial, cfg, params, 1)
        rep = check_mubar_gradient_decomposition(records[-1], params)
        assert rep.holds  # exact identity at rounding level
        omega_mismatches.append(rep.context["omega_form_l1_mismatch"])
    assert omega_mismatches[2] < omega_mismatches[1] < omega_mismatches[0]


def test_weak_form_mode_zero_is_mass_conservation(demixing_run):
    records, params, cfg = demixing_run
    resid, _ = weak_form_mode_residual(records, params, cfg, 0)
    assert resid <= 1e-10


def test_weak_form_residual_decreases_with_tau(arcsin_model):
    g = Grid1D(10.0, 32)
    params = make_params(arcsin_model, chi=4.0)
    c1 = 0.5 + 0.2 * np.cos(np.pi * g.centers / 10.0)
    initial = state_from_c1(Profile(g, c1))
    horizon = 0.8
    residuals = {}
    for tau in (0.1, 0.05):
        cfg = JkoConfig(tau=tau, inner_tol=1e-7, inner_max_iter=3000)
        records = run_trajectory(initial, cfg, params, int(round(horizon / tau)))
        residuals[tau] = [
            weak_form_mode_residual(records, params, cfg, j)[0] for j in (1, 2)
        ]
    for j in range(2):
        assert residuals[0.05][j] < residuals[0.1][j]


def test_q_integrability_flags_dimension(demixing_run):
    records, params, cfg = demixing_run
    rep = check_q_integrability(records, params, cfg)
    assert rep.context["p"] == 2.0
    assert rep.context["p_substituted_for_1d"]
    assert rep.context["max_abs_mubar_mean"] <= 1e-9 * records[0].state.grid.cells


def test_kinetic_quadrature_discrepancy_refines(arcsin_model):
    # face quadrature of c |grad psi/tau|^2 approaches the exact squared
    # step distance under grid refinement
    params = make_params(arcsin_model, chi=4.0)
    discrepancies = []
    for n in (32, 64, 128):
        g = Grid1D(10.0, n)
        c1 = 0.5 + 0.25 * np.cos(np.pi * g.centers / 10.0)
        initial = state_from_c1(Profile(g, c1))
        cfg = JkoConfig(tau=0.05, inner_tol=1e-7, inner_max_iter=3000)
        records = run_trajectory(initial, cfg, params, 2)
        rep = check_kinetic_bound(records, params, cfg)
        assert rep.holds
        discrepancies.append(rep.context["max_face_quadrature_discrepancy"])
    assert discrepancies[2] < discrepancies[1] < discrepancies[0]


def test_q_integrability_fitted_constant_stable(arcsin_model):
    # fixed physical horizon, tau refined: the fitted constant stays within
    # a factor two across the levels
    g = Grid1D(10.0, 32)
    params = make_params(arcsin_model, chi=4.0)
    c1 = 0.5 + 0.2 * np.cos(np.pi * g.centers / 10.0)
    initial = state_from_c1(Profile(g, c1))
    horizon = 0.8
    fitted = []
    for tau in (horizon / 8, horizon / 16, horizon / 32):
        cfg = JkoConfig(tau=tau, inner_tol=1e-6, inner_max_iter=2500)
        records = run_trajectory(initial, cfg, params, int(round(horizon / tau)))
        rep = check_q_integrability(records, params, cfg)
        fitted.append(rep.context["empirical_C"])
    assert max(fitted) <= 2.0 * min(fitted)
