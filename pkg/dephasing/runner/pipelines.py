# runner/pipelines.py
"""
One function per physics pipeline.

Each takes a validated run configuration and returns a `PipelineResult`
with its CSV tables and a summary; writing files is left to `runs`.
"""
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from core.exceptions import FitError, PhysicalDomainError
from core.params import make_params
from core.spectral import dominant_frequency
from gpe.fields import AB, CoupledField, snapshot_rows, two_mode_reduction
from gpe.solver import (
    IDEAL_GAS_R_MAX,
    SolverConfig,
    evolve,
    ground_state,
    make_grid,
    normalized,
    with_basis,
)
from hydro.thomas_fermi import (
    TFState,
    chemical_potential_tf,
    evolve_r0,
    healing_length,
    phase_coefficients,
    single_condensate_diffusion_time,
    stationary_radius,
)
from hydro.zero_order import (
    phi_equation_residual,
    stationary_zero_order,
    tf_cross_correlation_initial,
)
from josephson.dynamics import (
    TwoModeState,
    amplitude_A,
    closed_form_delta_n,
    closed_form_phase,
    evolve_two_mode,
    hamiltonian_c,
)
from moments.generator import GeneratorSource
from moments.propagation import (
    column_names as moment_columns,
    correlation_decay,
    fit_gaussian_decay,
    initial_moments,
    propagate_moments,
)
from oracle.dynamics import (
    collapse_time,
    column_names as oracle_columns,
    evolve_exact,
    revival_time,
    visibility,
)
from oracle.two_mode import (
    build_hamiltonian,
    coherent_state,
    number_squeezed_state,
    project_two_mode,
)
from perturbation.coefficients import dephasing_rate
from perturbation.first_order import (
    boundary_zero_order,
    q1_numeric,
    solve_first_order_phi,
    solve_first_order_psi,
)
from perturbation.secular import CorrectedGenerator, secular_growth_check

from .output import Table

logger = logging.getLogger(__name__)

TIME = "t[1/omega_m]"


@dataclass(frozen=True, eq=False)
class PipelineResult:
    tables: list
    summary: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)


def _period(params):
    """Josephson period pi / lambda, or one trap period without coupling."""
    return math.pi / params.lambda_coupling if params.lambda_coupling > 0 else 2 * math.pi


def _times(params, scenario):
    n_samples = int(round(scenario["n_periods"] * scenario["samples_per_period"]))
    return np.linspace(0.0, scenario["n_periods"] * _period(params), n_samples + 1)


def _closed_phase(state0, params, times):
    """Closed-form phase, or None when C vanishes and the phase jumps."""
    try:
        return closed_form_phase(state0, params, times)
    except PhysicalDomainError:
        return None


def run_two_mode(config):
    """Classical two-mode trajectory with its closed form when C != 0."""
    params = make_params(config["params"])
    scenario = config["scenario"]
    state0 = TwoModeState(scenario["delta_n0"], scenario["delta_phi0"])
    times = _times(params, scenario)
    trajectory = evolve_two_mode(state0, params, times, config["solver"]["steps_per_period"])

    columns = [TIME, "delta_n[atoms]", "delta_phi[rad]", "c_value[hbar omega_m]"]
    rows = trajectory.as_rows()
    c_value = hamiltonian_c(state0, params)
    drift = float(np.max(np.abs(trajectory.c_values - c_value)))
    summary = {"c_value": c_value, "c_drift": drift}
    closed_phi = _closed_phase(state0, params, times) if params.lambda_coupling > 0 else None
    if closed_phi is not None:
        closed_n = closed_form_delta_n(state0, params, times)
        columns += ["delta_n_closed[atoms]", "delta_phi_closed[rad]"]
        rows = np.column_stack([rows, closed_n, closed_phi])
        summary.update(
            amplitude=amplitude_A(state0, params),
            max_delta_n_error=float(np.max(np.abs(trajectory.delta_n - closed_n))),
            max_delta_phi_error=float(np.max(np.abs(trajectory.delta_phi - closed_phi))),
        )
    return PipelineResult([Table("two_mode", columns, rows, (TIME, "delta_n[atoms]"))], summary)


def run_hydro(config):
    """Stationary Thomas-Fermi quantities and a breathing r0 trajectory."""
    params = make_params(config["params"])
    scenario = config["scenario"]
    r0 = stationary_radius(params)
    times = _times(params, scenario)
    trajectory = evolve_r0(TFState(scenario["r0_scale"] * r0), params, times,
                           steps_per_period=config["solver"]["steps_per_period"])
    phases = phase_coefficients(trajectory, params, b_plus0=params.hbar * scenario["delta_theta0"])
    rows = np.column_stack([trajectory.as_rows(), phases.a_coeff, phases.b_plus, phases.b_minus])
    columns = [TIME, "r0[l_osc]", "r0_dot[l_osc omega_m]", "a_coeff[hbar omega_m / l_osc^2]",
               "b_plus[hbar]", "b_minus[hbar]"]

    xi = healing_length(params, r0)
    zo = stationary_zero_order(params, scenario["population_fraction"],
                               params.hbar * scenario["delta_theta0"],
                               n_points=config["grid"]["n_points"])
    summary = {
        "r0": r0,
        "mu": chemical_potential_tf(params, r0),
        "xi": xi,
        "xi_over_r0": xi / r0,
        "alpha": zo.alpha,
        "u_tilde0": zo.u_tilde0,
        "gamma_plus": zo.gamma_plus,
        "gamma_minus": zo.gamma_minus,
        "phi_equation_residual": phi_equation_residual(zo, params),
        "single_condensate_diffusion_time": single_condensate_diffusion_time(params),
        "r0_min": float(trajectory.r0.min()),
        "r0_max": float(trajectory.r0.max()),
    }
    logger.info("hydro: r0=%.6g xi/r0=%.4g", r0, xi / r0)
    return PipelineResult([Table("hydro", columns, rows, (TIME, "r0[l_osc]"))], summary)


def _gpe_initial(params, config, solver_config):
    scenario = config["scenario"]
    n_a = (params.n_total + scenario["delta_n0"]) / 2
    if scenario["initial"] == "ground":
        return ground_state(params, AB, solver_config, population_fraction=n_a / params.n_total)
    if not params.u0 * params.n_total > 0:
        raise PhysicalDomainError("Self-similar initial data need a repulsive interaction.")
    grid = make_grid(params, solver_config)
    psi_a, psi_b = tf_cross_correlation_initial(
        grid, params, stationary_radius(params), n_a, params.n_total - n_a,
        delta_phi=scenario["delta_phi0"],
    )
    return normalized(CoupledField(psi_a, psi_b, AB))


def run_gpe(config):
    """Mean-field evolution in the configured basis, compared with the two-mode model."""
    params = make_params(config["params"])
    solver, scenario = config["solver"], config["scenario"]
    r_max = IDEAL_GAS_R_MAX
    if params.u0 * params.n_total > 0:
        r_max = max(config["grid"]["r_max_factor"] * stationary_radius(params), IDEAL_GAS_R_MAX)
    solver_config = SolverConfig(dt=solver["dt"], scheme=solver["scheme"],
                                 n_points=config["grid"]["n_points"], r_max=r_max)
    initial = _gpe_initial(params, config, solver_config)
    state0 = two_mode_reduction(initial, params)
    run_length = scenario["n_periods"] * _period(params)
    steps = solver["steps"] or max(1, math.ceil(run_length / solver["dt"]))
    result = evolve(with_basis(initial, solver["basis"], params), params, solver_config,
                    steps, record_every=solver["record_every"])

    trajectory = result.trajectory
    columns = [TIME, "n_first[atoms]", "n_second[atoms]", "cross_re[atoms]", "cross_im[atoms]",
               "energy[hbar omega_m]"]
    rows = trajectory.as_rows()
    summary = {"steps": steps, "basis": solver["basis"], "delta_n0": state0.delta_n,
               "delta_phi0": state0.delta_phi}
    if params.lambda_coupling > 0:
        closed_n = closed_form_delta_n(state0, params, trajectory.times)
        columns += ["delta_n_closed[atoms]"]
        rows = np.column_stack([rows, closed_n])
        if solver["basis"] == AB:
            delta_n = trajectory.n_first - trajectory.n_second
            summary["max_delta_n_error"] = float(np.max(np.abs(delta_n - closed_n)))
        phase = trajectory.relative_phase
        closed_phi = _closed_phase(state0, params, trajectory.times)
        if closed_phi is not None:
            summary["max_phase_error"] = float(np.max(np.abs(phase - closed_phi)))
        if len(trajectory.times) > 2:
            summary["phase_frequency"] = dominant_frequency(trajectory.times, phase)

    snapshot = Table(
        "gpe_snapshot",
        ["r[l_osc]", "first_re[l_osc^-3/2]", "first_im[l_osc^-3/2]",
         "second_re[l_osc^-3/2]", "second_im[l_osc^-3/2]"],
        snapshot_rows(result.state),
    )
    plot = (TIME, "n_first[atoms]", "n_second[atoms]")
    return PipelineResult([Table("gpe", columns, rows, plot), snapshot], summary)


def _moment_unit(name):
    return {0: "1", 1: "hbar", 2: "hbar^2"}[name.count("Q_")]


def _moment_headers():
    names = moment_columns()
    return [TIME] + [f"{name}[{_moment_unit(name)}]" for name in names[1:]]


def _first_order_source(params, zo, config):
    boundary = boundary_zero_order(zo, params, n_points=config["grid"]["boundary_points"])
    corrections = solve_first_order_phi(zo, solve_first_order_psi(boundary, params), params)
    solver = config["solver"]
    source = CorrectedGenerator(zo, corrections, params, solver["grouping"],
                                solver["coefficient_mode"])
    return source, {"excluded_fraction": corrections.excluded_fraction}


def run_moments(config):
    """
    Moment propagation with the correlation decay.

    With a trap difference and lambda > 0 the first-order corrected
    generator drives the flow; otherwise the zero-order one.
    """
    params = make_params(config["params"])
    scenario, solver = config["scenario"], config["solver"]
    zo = stationary_zero_order(params, scenario["population_fraction"],
                               params.hbar * scenario["delta_theta0"],
                               n_points=config["grid"]["n_points"])
    diagnostics = {}
    if params.delta_omega_sq != 0 and params.lambda_coupling > 0:
        source, diagnostics = _first_order_source(params, zo, config)
    else:
        source = GeneratorSource(zo, params, solver["grouping"], solver["coefficient_mode"])
    start = initial_moments(var_p_rel=scenario["p2_rel0"], var_q_rel=scenario["q2_rel0"],
                            hbar=params.hbar)
    times = _times(params, scenario)
    trajectory = propagate_moments(start, source, times,
                                   max_step=source.max_step(solver["steps_per_period"]))
    decay = correlation_decay(trajectory, hbar=params.hbar)

    summary = {"final_correlation_decay": float(decay[-1]),
               "q_rel_variance_change": float(trajectory.variance_of("Q_rel")[-1]
                                              - trajectory.variance_of("Q_rel")[0])}
    try:
        summary["tau_d_fit"] = fit_gaussian_decay(times[1:], decay[1:])
    except FitError as error:
        summary["tau_d_fit"] = math.inf
        logger.info("moments: no Gaussian decay to fit (%s)", error)
    table = Table("moments", _moment_headers(), trajectory.as_rows(hbar=params.hbar),
                  (TIME, "correlation_decay[1]"))
    return PipelineResult([table], summary, diagnostics)


def run_dephasing(config):
    """
    Perturbation parameter, first- and second-order coefficients and both tau_D.

    The summary also carries the cut overlap amplitude q1_numeric and its ratio
    to the closed form.
    """
    params = make_params(config["params"])
    scenario, solver = config["scenario"], config["solver"]
    zo = stationary_zero_order(params, scenario["population_fraction"],
                               params.hbar * scenario["delta_theta0"],
                               n_points=config["grid"]["n_points"])
    coefficients = dephasing_rate(params, zo, scenario["p2_rel0"], scenario["variant"])
    columns = ["v[1]", "xi_over_r0[1]", "log_factor[1]", "q1_amplitude[1]",
               "q2_rate[omega_m]", "rate_total[omega_m]", "tau_d_total[1/omega_m]",
               "rate_imbalance[omega_m]", "tau_d_imbalance[1/omega_m]"]
    row = [coefficients.v, coefficients.xi / coefficients.r0, coefficients.log_factor,
           coefficients.q1_amplitude, coefficients.q2_rate, coefficients.rate_total,
           coefficients.tau_d_total, coefficients.rate_imbalance,
           coefficients.tau_d_imbalance]
    tables = [Table("dephasing", columns, [row])]
    summary = coefficients.as_dict()
    summary["rate"] = coefficients.rate
    numeric = q1_numeric(zo, params, n_points=config["grid"]["boundary_points"])
    summary["q1_numeric"] = numeric
    summary["q1_ratio"] = coefficients.q1_closed_form / numeric if numeric else math.nan

    diagnostics = {}
    if scenario["secular_check"]:
        report = secular_growth_check(
            params, scenario["population_fraction"], params.hbar * scenario["delta_theta0"],
            n_periods=max(1, int(round(scenario["n_periods"]))),
            n_points=config["grid"]["boundary_points"],
            grouping=solver["grouping"], coefficient_mode=solver["coefficient_mode"],
        )
        tables.append(Table("secular", [TIME, "q_rel[hbar]"], report.as_rows(),
                            (TIME, "q_rel[hbar]")))
        summary["secular"] = report.summary()
        diagnostics["excluded_fraction"] = report.excluded_fraction
    return PipelineResult(tables, summary, diagnostics)


def run_oracle(config):
    """Exact two-mode evolution with visibility, collapse and revival times."""
    params = make_params(config["params"])
    oracle, scenario = config["oracle"], config["scenario"]
    u_int, delta_e = 0.0, 0.0
    if params.u0 > 0:
        projection = project_two_mode(params, n_atoms=oracle["n_atoms"])
        u_int, delta_e = projection.u_int, projection.delta_e
    if oracle["u_int"] is not None:
        u_int = oracle["u_int"]
    if oracle["delta_e"] is not None:
        delta_e = oracle["delta_e"]
    hamiltonian = build_hamiltonian(oracle["n_atoms"], params.lambda_coupling, u_int, delta_e,
                                    oracle["interaction_asymmetry"], params.hbar)
    if oracle["initial"] == "coherent":
        state0 = coherent_state(oracle["n_atoms"], oracle["population_fraction"], oracle["phase"])
    else:
        state0 = number_squeezed_state(oracle["n_atoms"], oracle["width"], oracle["phase"],
                                       oracle["population_fraction"])

    t_rev = revival_time(hamiltonian)
    period = _period(params)
    if params.lambda_coupling == 0 and math.isfinite(t_rev):
        period = t_rev
    n_samples = int(round(scenario["n_periods"] * scenario["samples_per_period"]))
    times = np.linspace(0.0, scenario["n_periods"] * period, n_samples + 1)
    trajectory = evolve_exact(state0, hamiltonian, times)

    values = visibility(trajectory)
    summary = {"u_int": u_int, "delta_e": delta_e, "chi": hamiltonian.chi,
               "revival_time": t_rev, "final_visibility": float(values[-1]),
               "delta_n_frequency": dominant_frequency(times, trajectory.mean_delta_n())}
    try:
        summary["collapse_time"] = collapse_time(times, values)
    except FitError:
        summary["collapse_time"] = math.inf
    table = Table("oracle", oracle_columns(), trajectory.as_rows(), (TIME, "visibility[1]"))
    return PipelineResult([table], summary)


PIPELINES = {
    "two-mode": run_two_mode,
    "hydro": run_hydro,
    "gpe": run_gpe,
    "moments": run_moments,
    "dephasing": run_dephasing,
    "oracle": run_oracle,
}
