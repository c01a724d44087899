//! Named studies run from a configuration.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;

use super::bundle::{ResultBundle, Table};
use super::config::{ModelConfig, RunConfig};
use crate::asymptotics::{
    fit_sinusoid, fitness_comparison_with_orbit, hopf_cole, limit_profile, measure_moments,
    orbit_moment_samples, predict_moments, stationary_constant_env, time_averaged_profile,
};
use crate::env_models::{
    check_hypotheses, locate_optimum, mean_growth, EnvironmentModel, ModelKind,
};
use crate::error::Error;
use crate::floquet::{
    effective_signals, grid_family, principal_eigenpair, radius_sweep, tail_bound_excess,
    FloquetOptions,
};
use crate::no_mutation::{concentration_metrics, selected_trait, simulate_sigma0};
use crate::pde_solver::{
    find_periodic_orbit, gaussian_field, OrbitOptions, OrbitRecord, SimulationGrid,
};
use crate::rho_ode::{integrate_logistic, periodic_rho_closed_form, PeriodicScalarSignal};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Experiment {
    Sigma0Convergence,
    PeriodicOrbit,
    FloquetSweep,
    EpsilonLimit,
    Moments,
    Example1,
    Example2,
    FitnessCompare,
}

impl Experiment {
    pub const ALL: [Experiment; 8] = [
        Self::Sigma0Convergence,
        Self::PeriodicOrbit,
        Self::FloquetSweep,
        Self::EpsilonLimit,
        Self::Moments,
        Self::Example1,
        Self::Example2,
        Self::FitnessCompare,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Self::Sigma0Convergence => "sigma0-convergence",
            Self::PeriodicOrbit => "periodic-orbit",
            Self::FloquetSweep => "floquet-sweep",
            Self::EpsilonLimit => "epsilon-limit",
            Self::Moments => "moments",
            Self::Example1 => "example1",
            Self::Example2 => "example2",
            Self::FitnessCompare => "fitness-compare",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Experiment {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL.into_iter().find(|e| e.tag() == s).ok_or_else(|| {
            let tags: Vec<&str> = Self::ALL.iter().map(|e| e.tag()).collect();
            format!(
                "unknown experiment `{s}`; expected one of {}",
                tags.join(", ")
            )
        })
    }
}

/// Failure of a run, split by exit status.
#[derive(Debug, Clone, PartialEq)]
pub enum RunError {
    Validation(String),
    Numerical(String),
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Validation(m) => write!(f, "validation error: {m}"),
            Self::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl std::error::Error for RunError {}

fn classify(context: &str) -> impl Fn(Error) -> RunError + '_ {
    move |e| {
        let msg = format!("{context}: {e}");
        match e {
            Error::InvalidParameter(_)
            | Error::NoUniqueMaximum { .. }
            | Error::LimitInconsistency(_)
            | Error::Unsupported(_) => RunError::Validation(msg),
            Error::Extinction(_)
            | Error::NoConvergence { .. }
            | Error::NonFinite(_)
            | Error::ZeroMass(_) => RunError::Numerical(msg),
        }
    }
}

struct Setup {
    model: EnvironmentModel,
    grid: SimulationGrid,
}

fn setup(cfg: &RunConfig) -> Result<Setup, RunError> {
    let model = cfg
        .build_model()
        .map_err(|e| RunError::Validation(e.to_string()))?;
    let grid = cfg
        .build_grid(&model)
        .map_err(|e| RunError::Validation(e.to_string()))?;
    Ok(Setup { model, grid })
}

fn optimum(model: &EnvironmentModel, grid: &SimulationGrid) -> Result<f64, RunError> {
    match (model.analytic(), model.kind()) {
        (Some(info), _) => Ok(info.x_m),
        // every trait is optimal; take the middle of the domain
        (None, ModelKind::Custom) if is_flat(model, grid) => Ok(0.5 * (grid.x_lo + grid.x_hi)),
        (None, _) => locate_optimum(model, (grid.x_lo, grid.x_hi)).map_err(classify("optimum")),
    }
}

fn is_flat(model: &EnvironmentModel, grid: &SimulationGrid) -> bool {
    let xs = [grid.x_lo, 0.5 * (grid.x_lo + grid.x_hi), grid.x_hi];
    (0..16).all(|j| {
        let t = j as f64 * model.period() / 16.0;
        xs.iter().all(|&x| model.rate(t, x) == model.rate(t, xs[0]))
    })
}

fn orbit_options(cfg: &RunConfig) -> OrbitOptions {
    OrbitOptions {
        tol: cfg.solver.orbit_tol,
        max_periods: cfg.solver.max_periods,
        snapshot_stride: 0,
    }
}

fn floquet_options(cfg: &RunConfig) -> FloquetOptions {
    FloquetOptions {
        growth_tol: cfg.solver.eigen_tol,
        ..FloquetOptions::default()
    }
}

/// Run one experiment. Deterministic given the configuration, apart from
/// the elapsed time recorded in the manifest.
pub fn run_experiment(experiment: Experiment, cfg: &RunConfig) -> Result<ResultBundle, RunError> {
    let start = Instant::now();
    let mut bundle = ResultBundle::new(experiment.tag(), cfg.clone());
    let s = setup(cfg)?;
    bundle.put("experiment", experiment.tag());
    match experiment {
        Experiment::Sigma0Convergence => sigma0_convergence(cfg, &s, &mut bundle)?,
        Experiment::PeriodicOrbit => periodic_orbit(cfg, &s, &mut bundle)?,
        Experiment::FloquetSweep => floquet_sweep(cfg, &s, &mut bundle)?,
        Experiment::EpsilonLimit => epsilon_limit(cfg, &s, &mut bundle)?,
        Experiment::Moments => {
            let orbit = orbit_for(cfg, &s)?;
            moments(cfg, &s, &orbit, &mut bundle)?;
        }
        Experiment::Example1 | Experiment::Example2 => {
            let orbit = orbit_for(cfg, &s)?;
            moments(cfg, &s, &orbit, &mut bundle)?;
            fitness(cfg, &s, &orbit, &mut bundle)?;
        }
        Experiment::FitnessCompare => {
            let orbit = orbit_for(cfg, &s)?;
            fitness(cfg, &s, &orbit, &mut bundle)?;
        }
    }
    bundle.manifest.run.elapsed_seconds = start.elapsed().as_secs_f64();
    Ok(bundle)
}

fn sigma0_convergence(
    cfg: &RunConfig,
    s: &Setup,
    bundle: &mut ResultBundle,
) -> Result<(), RunError> {
    let grid = s.grid.clone().with_sigma(0.0);
    let model = &s.model;
    let x_m = optimum(model, &grid)?;
    let period = model.period();
    let st = &cfg.study;
    let q = {
        let m = model.clone();
        PeriodicScalarSignal::from_fn(period, move |t| m.rate(t, x_m))
            .map_err(classify("forcing"))?
    };
    let orbit = periodic_rho_closed_form(&q).map_err(classify("closed-form orbit"))?;

    let mut field = gaussian_field(&grid, x_m, st.n0_sd * st.n0_sd, 1.0);
    let chunks = 20usize;
    let mut rho_table = Table::new(&["t", "rho", "rho_tilde"]);
    let mut conc = Table::new(&["t", "mean", "variance", "mass_outside"]);
    let mut final_gap: f64 = 0.0;
    let mut last = None;
    let stride_target = 4096usize;
    let total_steps = (st.t_end / st.sigma0_dt).ceil() as usize;
    let stride = total_steps.div_ceil(stride_target).max(1);
    let mut step_index = 0usize;
    for c in 0..chunks {
        let t_stop = st.t_end * (c + 1) as f64 / chunks as f64;
        let run = simulate_sigma0(&grid, model, &field, t_stop, st.sigma0_dt)
            .map_err(classify("σ = 0 run"))?;
        for (i, &(t, r)) in run.rho.iter().enumerate() {
            if i == 0 && c > 0 {
                continue;
            }
            if step_index % stride == 0 {
                rho_table.push(vec![t, r, orbit.value_at(t)]);
            }
            step_index += 1;
            if t >= st.t_end - period - 1e-12 {
                final_gap = final_gap.max((r - orbit.value_at(t)).abs());
            }
        }
        let m =
            concentration_metrics(&run.state, x_m, st.window).map_err(classify("concentration"))?;
        conc.push(vec![run.state.time, m.mean, m.variance, m.mass_outside]);
        field = run.state.density();
        let extinct = run.extinct;
        last = Some((run, m));
        if extinct {
            break;
        }
    }
    let (run, m) = last.expect("at least one chunk");
    bundle.put("extinct", run.extinct);
    bundle.put("x_m", x_m);
    bundle.put("final_time", run.state.time);
    bundle.put("final_mass_outside", m.mass_outside);
    bundle.put("final_variance", m.variance);
    bundle.put("final_mean", m.mean);
    bundle.put("selected_trait", selected_trait(&run.state));
    bundle.put("final_period_rho_gap", final_gap);
    bundle.put("rho_tilde_mean", orbit.mean);
    // the limit orbit against a direct integration of the logistic equation
    let mut ode_gap: f64 = 0.0;
    for rho0 in [0.05, 5.0] {
        let path = integrate_logistic(&q, rho0, 50.0 * period, period / 512.0)
            .map_err(classify("logistic ODE"))?;
        for &(t, r) in path.iter().filter(|p| p.0 >= 49.0 * period) {
            ode_gap = ode_gap.max((r - orbit.value_at(t)).abs());
        }
    }
    bundle.put("closed_form_ode_gap", ode_gap);
    if is_flat(model, &grid) {
        let r = model.rate(0.0, x_m);
        let worst = orbit
            .samples
            .iter()
            .map(|s| (s.1 - r).abs())
            .fold(0.0, f64::max);
        bundle.put("constant_collapse_gap", worst);
    }
    bundle.tables.insert("rho".into(), rho_table);
    bundle.tables.insert("concentration".into(), conc);
    Ok(())
}

fn orbit_for(cfg: &RunConfig, s: &Setup) -> Result<OrbitRecord, RunError> {
    find_periodic_orbit(&s.grid, &s.model, None, orbit_options(cfg))
        .map_err(classify("periodic orbit"))
}

fn snapshot_table(orbit: &OrbitRecord, count: usize) -> Table {
    let mut t = Table::new(&["t", "x", "n"]);
    let n = orbit.snapshots.len() - 1;
    let count = count.min(n);
    let xs = orbit.grid.nodes();
    for k in 0..count {
        let snap = &orbit.snapshots[k * n / count];
        for (x, v) in xs.iter().zip(&snap.values) {
            t.push(vec![snap.time, *x, *v]);
        }
    }
    t
}

/// Bounds `ρ_m ≤ ρ ≤ ρ_M` with `ρ_M = max(ρ₀, d₀)` and
/// `ρ_m = (1/T) e^{−d₀T} (e^{|λ|T} − 1)`.
pub fn population_bounds(rho0: f64, d0: f64, lambda: f64, period: f64) -> (f64, f64) {
    let rho_max = rho0.max(d0);
    let rho_min = (-d0 * period).exp() * (lambda.abs() * period).exp_m1() / period;
    (rho_min, rho_max)
}

fn periodic_orbit(cfg: &RunConfig, s: &Setup, bundle: &mut ResultBundle) -> Result<(), RunError> {
    let pair = principal_eigenpair(&s.grid, &s.model, floquet_options(cfg))
        .map_err(classify("eigenpair"))?;
    bundle.put("lambda", pair.lambda);
    let orbit = find_periodic_orbit(&s.grid, &s.model, None, orbit_options(cfg)).map_err(
        classify(&format!(
            "periodic orbit (principal eigenvalue λ = {:.6})",
            pair.lambda
        )),
    )?;
    let signal = effective_signals(&pair, &s.model).map_err(classify("effective signals"))?;
    let mut profile_gap: f64 = 0.0;
    if signal.p_snapshots.len() == orbit.snapshots.len() {
        for (snap, p) in orbit.snapshots.iter().zip(&signal.p_snapshots) {
            let rho = s.grid.dx * snap.values.iter().sum::<f64>();
            for (a, b) in snap.values.iter().zip(&p.values) {
                profile_gap = profile_gap.max((a / rho - b).abs());
            }
        }
        bundle.put("orbit_profile_gap", profile_gap);
    }
    let d0 = s.model.rate_bound(s.grid.x_lo, s.grid.x_hi);
    let (rho_min, rho_max) = population_bounds(1.0, d0, pair.lambda, s.model.period());
    let within = orbit
        .rho_samples
        .iter()
        .all(|r| rho_min <= r.1 && r.1 <= rho_max);
    bundle.put("rho_mean", orbit.rho_mean());
    bundle.put("periods", orbit.periods as u64);
    bundle.put("period_gap", orbit.period_gap);
    bundle.put(
        "contraction_rate",
        orbit.contraction_rate.unwrap_or(f64::NAN),
    );
    bundle.put("clipped_mass", orbit.clipped_mass);
    bundle.put("rho_lower_bound", rho_min);
    bundle.put("rho_upper_bound", rho_max);
    bundle.put("bounds_hold", within);
    let margin = check_hypotheses(&s.model, (s.grid.x_lo, s.grid.x_hi), pair.lambda).confinement;
    if let Some(m) = margin {
        bundle.put("tail_bound_excess", tail_bound_excess(&pair, m));
    }

    let mut rho = Table::new(&["t", "rho"]);
    for &(t, r) in &orbit.rho_samples {
        rho.push(vec![t, r]);
    }
    let mut gaps = Table::new(&["period", "gap"]);
    for (k, g) in orbit.gap_history.iter().enumerate() {
        gaps.push(vec![(k + 1) as f64, *g]);
    }
    bundle.tables.insert("orbit_rho".into(), rho);
    bundle.tables.insert("period_gaps".into(), gaps);
    bundle.tables.insert(
        "snapshots".into(),
        snapshot_table(&orbit, cfg.study.snapshot_count),
    );
    Ok(())
}

fn floquet_sweep(cfg: &RunConfig, s: &Setup, bundle: &mut ResultBundle) -> Result<(), RunError> {
    let center = s
        .model
        .analytic()
        .map(|a| a.x_m)
        .unwrap_or(0.5 * (s.grid.x_lo + s.grid.x_hi));
    let grids = grid_family(&cfg.study.radii, center, s.grid.dx, s.grid.dt, s.grid.sigma)
        .map_err(classify("radius family"))?;
    let grids: Vec<SimulationGrid> = grids
        .into_iter()
        .map(|g| g.with_scheme(s.grid.scheme))
        .collect();
    let sweep = radius_sweep(&grids, &s.model, floquet_options(cfg), 1e-9)
        .map_err(classify("radius sweep"))?;
    let mut t = Table::new(&["R", "sigma", "lambda", "identity_residual", "iterations"]);
    for p in &sweep.points {
        t.push(vec![
            p.radius,
            p.sigma,
            p.lambda,
            p.identity_residual,
            p.iterations as f64,
        ]);
    }
    if let ModelConfig::Constant { a0, shift, .. } = cfg.model {
        // separable case: λ_R = −a₀ + σ π² / (2R)²
        let worst = sweep
            .points
            .iter()
            .map(|p| (p.lambda - (-(a0 + shift) + p.sigma * (PI / (2.0 * p.radius)).powi(2))).abs())
            .fold(0.0, f64::max);
        bundle.put("closed_form_gap", worst);
    }
    bundle.put("nonincreasing", sweep.nonincreasing);
    bundle.put("truncation_gap", sweep.truncation_gap);
    bundle.put(
        "lambda",
        sweep.points.last().map(|p| p.lambda).unwrap_or(f64::NAN),
    );
    bundle.put(
        "max_identity_residual",
        sweep
            .points
            .iter()
            .map(|p| p.identity_residual)
            .fold(0.0, f64::max),
    );
    bundle.tables.insert("eigenreport".into(), t);
    Ok(())
}

/// `sup |u_ε − u|` over all orbit snapshots and `|x − x_m| ≤ half_width`.
pub fn phase_gap(
    orbit: &OrbitRecord,
    model: &EnvironmentModel,
    eps: f64,
    half_width: f64,
) -> Result<f64, Error> {
    let x_m = match model.analytic() {
        Some(info) => info.x_m,
        None => locate_optimum(model, (orbit.grid.x_lo, orbit.grid.x_hi))?,
    };
    let profile = limit_profile(model, mean_growth(model, x_m), &orbit.grid)?;
    let mut worst: f64 = 0.0;
    for snap in &orbit.snapshots {
        let u_eps = hopf_cole(snap, eps)?;
        for ((x, ue), u) in profile.xs.iter().zip(&u_eps).zip(&profile.u_values) {
            if (x - x_m).abs() <= half_width {
                worst = worst.max((ue - u).abs());
            }
        }
    }
    Ok(worst)
}

fn epsilon_limit(cfg: &RunConfig, s: &Setup, bundle: &mut ResultBundle) -> Result<(), RunError> {
    let opts = orbit_options(cfg);
    let rows: Vec<Vec<f64>> = cfg
        .study
        .eps_list
        .par_iter()
        .map(|&eps| {
            let grid = s.grid.clone().with_sigma(eps * eps);
            let orbit = find_periodic_orbit(&grid, &s.model, None, opts)
                .map_err(classify(&format!("periodic orbit at ε = {eps}")))?;
            let gap = phase_gap(&orbit, &s.model, eps, cfg.study.limit_half_width)
                .map_err(classify(&format!("phase comparison at ε = {eps}")))?;
            Ok(vec![eps, gap, orbit.rho_mean(), orbit.periods as f64])
        })
        .collect::<Result<_, RunError>>()?;
    let mut t = Table::new(&["eps", "sup_gap", "rho_mean", "periods"]);
    let mut order: Vec<&Vec<f64>> = rows.iter().collect();
    order.sort_by(|a, b| b[0].total_cmp(&a[0]));
    let monotone = order.windows(2).all(|w| w[1][1] < w[0][1]);
    for r in &rows {
        t.push(r.clone());
    }
    bundle.put("monotone_decreasing", monotone);
    bundle.put(
        "smallest_eps_gap",
        order.last().map(|r| r[1]).unwrap_or(f64::NAN),
    );
    bundle.tables.insert("epsilon_limit".into(), t);
    Ok(())
}

fn moments(
    cfg: &RunConfig,
    s: &Setup,
    orbit: &OrbitRecord,
    bundle: &mut ResultBundle,
) -> Result<(), RunError> {
    let eps = cfg.eps();
    let measured = measure_moments(orbit).map_err(classify("moments"))?;
    let predicted =
        predict_moments(&s.model, eps, &s.grid).map_err(classify("predicted moments"))?;
    let (mu, var) = orbit_moment_samples(orbit).map_err(classify("moments"))?;
    let times: Vec<f64> = orbit.snapshots[..mu.len()].iter().map(|s| s.time).collect();
    let b = 2.0 * PI / s.model.period();
    let mu_pred: Vec<f64> = times.iter().map(|&t| predicted.mu.eval(t)).collect();
    let var_pred: Vec<f64> = times.iter().map(|&t| predicted.sigma2.eval(t)).collect();
    let fit = fit_sinusoid(&times, &mu, b).map_err(classify("sinusoid fit"))?;
    let fit_pred = fit_sinusoid(&times, &mu_pred, b).map_err(classify("sinusoid fit"))?;
    let mut t = Table::new(&["t", "mu", "sigma2", "mu_pred", "sigma2_pred"]);
    for i in 0..mu.len() {
        t.push(vec![times[i], mu[i], var[i], mu_pred[i], var_pred[i]]);
    }
    bundle.put("eps", eps);
    bundle.put("mu_amplitude", fit.amplitude);
    bundle.put("mu_lag", fit.lag);
    bundle.put("mu_offset", fit.offset);
    bundle.put("mu_amplitude_pred", fit_pred.amplitude);
    bundle.put("mu_lag_pred", fit_pred.lag);
    bundle.put("variance_mean", measured.sigma2.mean());
    bundle.put("variance_mean_pred", predicted.sigma2.mean());
    bundle.put("rho_mean", measured.rho_mean);
    bundle.put("rho_mean_pred", predicted.rho_mean);
    bundle.put("periods", orbit.periods as u64);
    bundle.tables.insert("moments".into(), t);
    let mut rho = Table::new(&["t", "rho"]);
    for &(t, r) in &orbit.rho_samples {
        rho.push(vec![t, r]);
    }
    bundle.tables.insert("orbit_rho".into(), rho);
    Ok(())
}

fn fitness(
    cfg: &RunConfig,
    s: &Setup,
    orbit: &OrbitRecord,
    bundle: &mut ResultBundle,
) -> Result<(), RunError> {
    let eps = cfg.eps();
    let tau = cfg.tau();
    let cmp = fitness_comparison_with_orbit(&s.model, tau, eps, orbit)
        .map_err(classify("fitness comparison"))?;
    bundle.put("tau", tau);
    bundle.put("F_p", cmp.f_p);
    bundle.put("F_c", cmp.f_c);
    if let Some(v) = cmp.f_p_predicted {
        bundle.put("F_p_pred", v);
    }
    if let Some(v) = cmp.f_c_predicted {
        bundle.put("F_c_pred", v);
    }
    bundle.put("rho_mean_p", cmp.rho_mean_p);
    bundle.put("rho_c", cmp.rho_c);
    bundle.put("variance_p", cmp.variance_p);
    bundle.put("variance_c", cmp.variance_c);
    bundle.put("ordering", cmp.ordering.clone());

    let stat = stationary_constant_env(&s.model, tau, eps, &s.grid)
        .map_err(classify("stationary state"))?;
    let avg = time_averaged_profile(orbit).map_err(classify("averaged profile"))?;
    let mut t = Table::new(&["x", "p_bar", "n_c", "n_c_analytic"]);
    for (i, x) in s.grid.nodes().into_iter().enumerate() {
        let an = stat
            .analytic
            .as_ref()
            .map(|f| f.values[i])
            .unwrap_or(f64::NAN);
        t.push(vec![x, avg[i], stat.numeric.values[i], an]);
    }
    if let Some(g) = stat.sup_relative_gap {
        bundle.put("stationary_sup_relative_gap", g);
    }
    bundle.tables.insert("profiles".into(), t);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cli_io::config::{parse_config_str, parse_override};

    #[test]
    fn tags_round_trip() {
        for e in Experiment::ALL {
            assert_eq!(e.tag().parse::<Experiment>().unwrap(), e);
        }
        assert!("orbit".parse::<Experiment>().is_err());
    }

    #[test]
    fn population_bounds_are_ordered() {
        let (lo, hi) = population_bounds(1.0, 17.0, -0.45, 1.0);
        assert!(lo > 0.0 && lo < hi);
        assert_eq!(hi, 17.0);
    }

    #[test]
    fn constant_sweep_matches_closed_form() {
        let cfg = parse_config_str(
            "[model]\nkind = \"constant\"\na0 = 0.5\nperiod = 1.0\n[grid]\nx_lo = -3\nx_hi = 3\nnx = 299\n\
             [solver]\neps = 0.1\n[study]\nradii = [1.0, 2.0, 3.0]\n",
            &[],
        )
        .unwrap();
        let b = run_experiment(Experiment::FloquetSweep, &cfg).unwrap();
        assert!(b.number("closed_form_gap").unwrap() < 1e-4);
        assert_eq!(b.summary["nonincreasing"], serde_json::Value::Bool(true));
        assert_eq!(b.tables["eigenreport"].rows.len(), 3);
    }

    #[test]
    fn summaries_are_deterministic() {
        let cfg = parse_config_str(
            "[model]\nkind = \"oscillating_optimum\"\nr = 1\ng = 1\nc = 1\nb = 6.283185307179586\n\
             [grid]\nx_lo = -3\nx_hi = 3\nnx = 119\n[solver]\neps = 0.1\n",
            &[parse_override("solver.orbit_tol=1e-6").unwrap()],
        )
        .unwrap();
        let a = run_experiment(Experiment::PeriodicOrbit, &cfg).unwrap();
        let b = run_experiment(Experiment::PeriodicOrbit, &cfg).unwrap();
        assert_eq!(a.summary_json(), b.summary_json());
        assert_eq!(a.tables, b.tables);
    }

    #[test]
    fn sigma0_study_reports_closed_form_checks() {
        let cfg = parse_config_str(
            "[model]\nkind = \"constant\"\na0 = 0.7\nperiod = 1.0\n[grid]\nnx = 199\n[study]\nt_end = 20.0\n",
            &[],
        )
        .unwrap();
        let b = run_experiment(Experiment::Sigma0Convergence, &cfg).unwrap();
        assert!(b.number("constant_collapse_gap").unwrap() < 1e-12);
        assert!(b.number("closed_form_ode_gap").unwrap() < 1e-6);
        assert!(b.number("final_period_rho_gap").unwrap() < 1e-2);
        assert_eq!(b.tables["concentration"].rows.len(), 20);
    }

    #[test]
    fn extinction_is_a_numerical_failure() {
        let cfg = parse_config_str(
            "[model]\nkind = \"oscillating_optimum\"\nr = 1\ng = 1\nc = 1\nb = 6.283185307179586\nshift = -10\n\
             [grid]\nx_lo = -3\nx_hi = 3\nnx = 119\n[solver]\neps = 0.1\n",
            &[],
        )
        .unwrap();
        let err = run_experiment(Experiment::FitnessCompare, &cfg).unwrap_err();
        assert!(matches!(err, RunError::Numerical(_)), "{err}");
    }
}
