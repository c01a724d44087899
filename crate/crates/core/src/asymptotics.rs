//! Small-mutation asymptotics: the Hopf–Cole phase, its limit `u`, the
//! time-periodic corrector `v`, Gaussian moment expansions around the
//! selected trait, and the fitness comparisons between a population raised
//! in a periodic environment and one raised in a constant environment.

use std::f64::consts::PI;

use crate::env_models::{
    check_hypotheses, locate_optimum, mean_growth, EnvironmentModel, ModelKind,
};
use crate::error::{invalid, Error, Result};
use crate::floquet::{effective_signals, principal_eigenpair, FloquetOptions};
use crate::no_mutation::field_concentration;
use crate::pde_solver::{
    find_periodic_orbit, DensityField, OrbitOptions, OrbitRecord, SimulationGrid,
};
use crate::quadrature::{cumulative_simpson, periodic_mean, simpson};
use crate::rho_ode::{periodic_rho_closed_form, PeriodicScalarSignal, RhoOrbit};

/// Densities are floored here before taking logarithms.
pub const LOG_FLOOR: f64 = 1e-300;

/// `u_ε(x) = ε (ln n(x) + ½ ln 2πε)`.
pub fn hopf_cole(field: &DensityField, eps: f64) -> Result<Vec<f64>> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(invalid(format!("ε must be positive, got {eps}")));
    }
    if !field.values.iter().any(|v| *v > 0.0) {
        return Err(Error::ZeroMass(format!("density at t = {}", field.time)));
    }
    let shift = 0.5 * (2.0 * PI * eps).ln();
    Ok(field
        .values
        .iter()
        .map(|v| eps * (v.max(LOG_FLOOR).ln() + shift))
        .collect())
}

/// Coefficients of `u(x) = −(A/2) y² + B y³ + C y⁴ + O(y⁵)`, `y = x − x_m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaylorCoefficients {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

/// `u(x) = −|∫_{x_m}^x √(ρ̄ − ā)|` sampled on grid nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitProfile {
    pub xs: Vec<f64>,
    pub u_values: Vec<f64>,
    pub x_m: f64,
    pub rho_bar: f64,
    pub taylor: TaylorCoefficients,
}

impl LimitProfile {
    /// Linear interpolation between nodes.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        let h = self.xs[1] - self.xs[0];
        let s = ((x - self.xs[0]) / h).clamp(0.0, (n - 1) as f64);
        let i = (s.floor() as usize).min(n - 2);
        let w = s - i as f64;
        (1.0 - w) * self.u_values[i] + w * self.u_values[i + 1]
    }

    /// `max |(u')² + ā − ρ̄|` over interior nodes, by centered differences.
    pub fn hamilton_jacobi_residual(&self, model: &EnvironmentModel) -> f64 {
        let h = self.xs[1] - self.xs[0];
        (1..self.xs.len() - 1)
            .map(|i| {
                let du = (self.u_values[i + 1] - self.u_values[i - 1]) / (2.0 * h);
                (du * du + mean_growth(model, self.xs[i]) - self.rho_bar).abs()
            })
            .fold(0.0, f64::max)
    }
}

fn radicand(model: &EnvironmentModel, rho_bar: f64, x: f64) -> Result<f64> {
    let r = rho_bar - mean_growth(model, x);
    let tol = 1e-12 * rho_bar.abs().max(1.0);
    if r < -tol {
        return Err(Error::LimitInconsistency(format!(
            "ρ̄ − ā({x}) = {r} is negative; ρ̄ = {rho_bar} is below the mean rate"
        )));
    }
    Ok(r.max(0.0))
}

/// `u(x)` by Simpson's rule from `x_m`.
fn profile_value(model: &EnvironmentModel, rho_bar: f64, x_m: f64, x: f64) -> Result<f64> {
    // Simpson takes `Fn`; keep the first radicand failure aside
    let err = std::cell::RefCell::new(None);
    let integral = simpson(
        |s| match radicand(model, rho_bar, s) {
            Ok(r) => r.sqrt(),
            Err(e) => {
                err.borrow_mut().get_or_insert(e);
                0.0
            }
        },
        x_m,
        x,
        256,
    );
    if let Some(e) = err.into_inner() {
        return Err(e);
    }
    Ok(-integral.abs())
}

fn optimum_of(model: &EnvironmentModel, grid: &SimulationGrid) -> Result<f64> {
    match model.analytic() {
        Some(info) => Ok(info.x_m),
        None => locate_optimum(model, (grid.x_lo, grid.x_hi)),
    }
}

/// Closed-form Taylor coefficients for the builtin quadratic families.
pub fn analytic_taylor(model: &EnvironmentModel) -> Option<TaylorCoefficients> {
    match model.kind() {
        ModelKind::OscillatingOptimum { g, .. } => Some(TaylorCoefficients {
            a: g.sqrt(),
            b: 0.0,
            c: 0.0,
        }),
        ModelKind::OscillatingPressure { g_mean, .. } => Some(TaylorCoefficients {
            a: g_mean.sqrt(),
            b: 0.0,
            c: 0.0,
        }),
        _ => None,
    }
}

/// Five-point centered differences of `u` at `x_m` with step `h`.
pub fn numeric_taylor(
    model: &EnvironmentModel,
    rho_bar: f64,
    x_m: f64,
    h: f64,
) -> Result<TaylorCoefficients> {
    let u = |k: f64| profile_value(model, rho_bar, x_m, x_m + k * h);
    let (um2, um1, u0, u1, u2) = (u(-2.0)?, u(-1.0)?, u(0.0)?, u(1.0)?, u(2.0)?);
    let d2 = (-u2 + 16.0 * u1 - 30.0 * u0 + 16.0 * um1 - um2) / (12.0 * h * h);
    let d3 = (u2 - 2.0 * u1 + 2.0 * um1 - um2) / (2.0 * h.powi(3));
    let d4 = (u2 - 4.0 * u1 + 6.0 * u0 - 4.0 * um1 + um2) / h.powi(4);
    Ok(TaylorCoefficients {
        a: -d2,
        b: d3 / 6.0,
        c: d4 / 24.0,
    })
}

/// The limit phase on the grid nodes.
///
/// Taylor coefficients are exact for the builtin families and come from
/// five-point differences with step `10 dx` otherwise.
pub fn limit_profile(
    model: &EnvironmentModel,
    rho_bar: f64,
    grid: &SimulationGrid,
) -> Result<LimitProfile> {
    let x_m = optimum_of(model, grid)?;
    let xs = grid.nodes();
    for &x in &xs {
        radicand(model, rho_bar, x)?;
    }
    // accumulate outward from x_m so each node costs one short quadrature
    let mut u_values = vec![0.0; xs.len()];
    let right = xs.partition_point(|&x| x < x_m);
    let mut prev = (x_m, 0.0);
    for i in right..xs.len() {
        let piece = profile_value(model, rho_bar, prev.0, xs[i])?;
        let v = prev.1 + piece;
        u_values[i] = v;
        prev = (xs[i], v);
    }
    prev = (x_m, 0.0);
    for i in (0..right).rev() {
        let piece = profile_value(model, rho_bar, prev.0, xs[i])?;
        let v = prev.1 + piece;
        u_values[i] = v;
        prev = (xs[i], v);
    }
    let taylor = match analytic_taylor(model) {
        Some(t) => t,
        None => numeric_taylor(model, rho_bar, x_m, 10.0 * grid.dx)?,
    };
    if !(taylor.a > 0.0) {
        return Err(Error::LimitInconsistency(format!(
            "curvature coefficient A = {} is not positive",
            taylor.a
        )));
    }
    Ok(LimitProfile {
        xs,
        u_values,
        x_m,
        rho_bar,
        taylor,
    })
}

/// Time-periodic corrector around the limit phase.
#[derive(Debug, Clone)]
pub struct Corrector {
    /// Phases `t_j = j T / N`, `j = 0..=N`.
    pub times: Vec<f64>,
    pub xs: Vec<f64>,
    /// `v[j][i] = −t_j (ā(x_i) − ρ̄) + ∫₀^{t_j} (a(s, x_i) − ρ(s)) ds`.
    pub v_values: Vec<Vec<f64>>,
    /// First-order coefficient of `v` at `x_m`.
    pub d: PeriodicScalarSignal,
    /// Second-order coefficient of `v` at `x_m`.
    pub e: PeriodicScalarSignal,
    /// `Δu(x_m)`.
    pub kappa_bar: f64,
}

/// Phases per period used by [`corrector`].
pub const CORRECTOR_NODES: usize = 256;

fn cell_solution(model: &EnvironmentModel, rho_integral: &[f64], x: f64, nodes: usize) -> Vec<f64> {
    let period = model.period();
    let h = period / nodes as f64;
    let a: Vec<f64> = (0..=nodes).map(|j| model.rate(j as f64 * h, x)).collect();
    let a_int = cumulative_simpson(&a, h);
    let drift = (a_int[nodes] - rho_integral[nodes]) / period;
    (0..=nodes)
        .map(|j| a_int[j] - rho_integral[j] - j as f64 * h * drift)
        .collect()
}

/// The cell solution `v` and its expansion coefficients at `x_m`.
///
/// `D` and `E` are the oscillating parts of `∂ₓv` and `½∂ₓₓv` at `x_m`, each
/// shifted by the time mean that the next-order equation forces on the
/// gradient of `v` (`3B/A` and `(9B²/A² + 6C/A)/2`).
pub fn corrector(
    model: &EnvironmentModel,
    rho_orbit: &RhoOrbit,
    profile: &LimitProfile,
) -> Result<Corrector> {
    let period = model.period();
    if (rho_orbit.period - period).abs() > 1e-12 * period {
        return Err(invalid(format!(
            "orbit period {} differs from the model period {period}",
            rho_orbit.period
        )));
    }
    let nodes = CORRECTOR_NODES;
    let h = period / nodes as f64;
    let times: Vec<f64> = (0..=nodes).map(|j| j as f64 * h).collect();
    let rho: Vec<f64> = times.iter().map(|&t| rho_orbit.value_at(t)).collect();
    let rho_int = cumulative_simpson(&rho, h);
    let v_values_by_x: Vec<Vec<f64>> = profile
        .xs
        .iter()
        .map(|&x| cell_solution(model, &rho_int, x, nodes))
        .collect();
    let v_values = (0..=nodes)
        .map(|j| v_values_by_x.iter().map(|col| col[j]).collect())
        .collect();

    let step = 1e-2;
    let at = |k: f64| cell_solution(model, &rho_int, profile.x_m + k * step, nodes);
    let (vm2, vm1, v0, v1, v2) = (at(-2.0), at(-1.0), at(0.0), at(1.0), at(2.0));
    let dx: Vec<f64> = (0..nodes)
        .map(|j| (-v2[j] + 8.0 * v1[j] - 8.0 * vm1[j] + vm2[j]) / (12.0 * step))
        .collect();
    let dxx: Vec<f64> = (0..nodes)
        .map(|j| {
            (-v2[j] + 16.0 * v1[j] - 30.0 * v0[j] + 16.0 * vm1[j] - vm2[j]) / (12.0 * step * step)
        })
        .collect();
    let TaylorCoefficients { a, b, c } = profile.taylor;
    let (dx_mean, dxx_mean) = (periodic_mean(&dx), periodic_mean(&dxx));
    let d_shift = 3.0 * b / a;
    let e_shift = 0.5 * (9.0 * b * b / (a * a) + 6.0 * c / a);
    let d: Vec<f64> = dx.iter().map(|v| v - dx_mean + d_shift).collect();
    let e: Vec<f64> = dxx.iter().map(|v| 0.5 * (v - dxx_mean) + e_shift).collect();
    Ok(Corrector {
        times,
        xs: profile.xs.clone(),
        v_values,
        d: PeriodicScalarSignal::from_samples(period, d)?,
        e: PeriodicScalarSignal::from_samples(period, e)?,
        kappa_bar: -a,
    })
}

/// Truncated power series in `s = √ε`, coefficients of `s⁰ ..= s⁴`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Series([f64; 5]);

impl Series {
    fn mul(self, o: Series, order: usize) -> Series {
        let mut out = [0.0; 5];
        for i in 0..=order {
            for j in 0..=order - i {
                out[i + j] += self.0[i] * o.0[j];
            }
        }
        Series(out)
    }

    /// `self / o`, requires `o.0[0] ≠ 0`.
    fn div(self, o: Series, order: usize) -> Series {
        let mut q = [0.0; 5];
        for k in 0..=order {
            let mut r = self.0[k];
            for j in 1..=k {
                r -= o.0[j] * q[k - j];
            }
            q[k] = r / o.0[0];
        }
        Series(q)
    }

    fn eval(self, s: f64, order: usize) -> f64 {
        (0..=order).rev().fold(0.0, |acc, k| acc * s + self.0[k])
    }
}

/// `(1/√2π) ∫ y^j e^{−A y²/2} dy`.
fn gaussian_moment(j: usize, a: f64) -> f64 {
    if j % 2 == 1 {
        return 0.0;
    }
    let double_fact: f64 = (1..j).step_by(2).map(|k| k as f64).product();
    double_fact * a.powf(-((j + 1) as f64) / 2.0)
}

/// `∫(x − x_m)^k n` divided by `e^{v(t,x_m)}`, as a series in `√ε` with the
/// `ε^{k/2}` prefactor folded in. The `F(t)` constant is left out.
fn raw_moment_series(k: usize, t: &TaylorCoefficients, d: f64, e: f64) -> Series {
    let g = |j: usize| gaussian_moment(j, t.a);
    let (b, c) = (t.b, t.c);
    let order0 = g(k);
    let order1 = b * g(k + 3) + d * g(k + 1);
    let order2 = c * g(k + 4)
        + e * g(k + 2)
        + 0.5 * (b * b * g(k + 6) + 2.0 * b * d * g(k + 4) + d * d * g(k + 2));
    let mut coeffs = [0.0; 5];
    for (shift, v) in [order0, order1, order2].iter().enumerate() {
        if k + shift <= 4 {
            coeffs[k + shift] = *v;
        }
    }
    Series(coeffs)
}

/// Normalized moment `∫(x − x_m)^k n / ∫n` from the Gaussian expansion.
///
/// Terms through `ε` are kept for `k ≤ 2` and through `ε²` for `k = 3, 4`
/// (the leading order there).
pub fn gaussian_moment_expansion(
    k: usize,
    taylor: &TaylorCoefficients,
    d: f64,
    e: f64,
    eps: f64,
) -> Result<f64> {
    if k > 4 {
        return Err(Error::Unsupported(format!(
            "moment order {k} exceeds the expansion order"
        )));
    }
    if !(taylor.a > 0.0) {
        return Err(invalid(format!(
            "curvature coefficient A = {} must be positive",
            taylor.a
        )));
    }
    if !(eps.is_finite() && eps >= 0.0) {
        return Err(invalid(format!("ε must be nonnegative, got {eps}")));
    }
    let order = if k <= 2 { 2 } else { 4 };
    let num = raw_moment_series(k, taylor, d, e);
    let den = raw_moment_series(0, taylor, d, e);
    Ok(num.div(den, order).eval(eps.sqrt(), order))
}

/// `∫n / e^{v(t,x_m)}` through order `ε`, without the `F(t)` term.
pub fn mass_expansion(taylor: &TaylorCoefficients, d: f64, e: f64, eps: f64) -> f64 {
    raw_moment_series(0, taylor, d, e).eval(eps.sqrt(), 2)
}

/// Variance from the expansion, truncated at order `ε`.
pub fn variance_expansion(taylor: &TaylorCoefficients, d: f64, e: f64) -> impl Fn(f64) -> f64 {
    let den = raw_moment_series(0, taylor, d, e);
    let m1 = raw_moment_series(1, taylor, d, e).div(den, 2);
    let m2 = raw_moment_series(2, taylor, d, e).div(den, 2);
    let var = Series([m2.0[0], m2.0[1], m2.0[2], 0.0, 0.0]);
    let sq = m1.mul(m1, 2);
    move |eps| {
        let s = eps.sqrt();
        var.eval(s, 2) - sq.eval(s, 2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomentSource {
    Simulated,
    Asymptotic,
}

/// Mean trait, trait variance and mean population size over a period.
#[derive(Debug, Clone)]
pub struct MomentReport {
    pub mu: PeriodicScalarSignal,
    pub sigma2: PeriodicScalarSignal,
    pub rho_mean: f64,
    pub source: MomentSource,
}

/// Asymptotic moments at mutation scale `ε`.
///
/// Builtin families use their closed forms. Other models go through the
/// limit profile on `grid`, the corrector and the Gaussian expansion.
pub fn predict_moments(
    model: &EnvironmentModel,
    eps: f64,
    grid: &SimulationGrid,
) -> Result<MomentReport> {
    let period = model.period();
    match model.kind() {
        ModelKind::OscillatingOptimum { r, g, c, b } => {
            let (r, g, c, b) = (*r, *g, *c, *b);
            let amp = 2.0 * eps * c * g.sqrt() / b;
            Ok(MomentReport {
                mu: PeriodicScalarSignal::from_fn(period, move |t| amp * (b * t - PI / 2.0).sin())?,
                sigma2: PeriodicScalarSignal::constant(period, eps / g.sqrt())?,
                rho_mean: r - g * c * c / 2.0 - eps * g.sqrt(),
                source: MomentSource::Asymptotic,
            })
        }
        ModelKind::OscillatingPressure { r, g_mean, .. } => Ok(MomentReport {
            mu: PeriodicScalarSignal::constant(period, 0.0)?,
            sigma2: PeriodicScalarSignal::constant(period, eps / g_mean.sqrt())?,
            rho_mean: r - eps * g_mean.sqrt(),
            source: MomentSource::Asymptotic,
        }),
        _ => {
            let x_m = optimum_of(model, grid)?;
            let rho_bar = mean_growth(model, x_m);
            let profile = limit_profile(model, rho_bar, grid)?;
            let q = {
                let m = model.clone();
                PeriodicScalarSignal::from_fn(period, move |t| m.rate(t, x_m))?
            };
            let orbit = periodic_rho_closed_form(&q)?;
            let corr = corrector(model, &orbit, &profile)?;
            let n = CORRECTOR_NODES;
            let (mut mu, mut var) = (Vec::with_capacity(n), Vec::with_capacity(n));
            for j in 0..n {
                let t = j as f64 * period / n as f64;
                let (d, e) = (corr.d.eval(t), corr.e.eval(t));
                mu.push(x_m + gaussian_moment_expansion(1, &profile.taylor, d, e, eps)?);
                var.push(variance_expansion(&profile.taylor, d, e)(eps));
            }
            Ok(MomentReport {
                mu: PeriodicScalarSignal::from_samples(period, mu)?,
                sigma2: PeriodicScalarSignal::from_samples(period, var)?,
                rho_mean: rho_bar + eps * corr.kappa_bar,
                source: MomentSource::Asymptotic,
            })
        }
    }
}

/// Trapezoid moments of every snapshot of the orbit but the repeated last one.
pub fn measure_moments(orbit: &OrbitRecord) -> Result<MomentReport> {
    let (mu, var) = orbit_moment_samples(orbit)?;
    let period = orbit.period();
    Ok(MomentReport {
        mu: PeriodicScalarSignal::from_samples(period, mu)?,
        sigma2: PeriodicScalarSignal::from_samples(period, var)?,
        rho_mean: orbit.rho_mean(),
        source: MomentSource::Simulated,
    })
}

/// Per-snapshot mean and variance, endpoint excluded.
pub fn orbit_moment_samples(orbit: &OrbitRecord) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = orbit.snapshots.len() - 1;
    let mut mu = Vec::with_capacity(n);
    let mut var = Vec::with_capacity(n);
    for snap in &orbit.snapshots[..n] {
        let m = field_concentration(&orbit.grid, snap, 0.0, f64::INFINITY)?;
        mu.push(m.mean);
        var.push(m.variance);
    }
    Ok((mu, var))
}

/// Period average of `n/ρ` over the orbit.
pub fn time_averaged_profile(orbit: &OrbitRecord) -> Result<Vec<f64>> {
    let n = orbit.snapshots.len() - 1;
    let dx = orbit.grid.dx;
    let mut avg = vec![0.0; orbit.grid.nx];
    for snap in &orbit.snapshots[..n] {
        let mass = dx * snap.values.iter().sum::<f64>();
        if !(mass > 0.0) {
            return Err(Error::ZeroMass(format!(
                "orbit snapshot at t = {}",
                snap.time
            )));
        }
        for (a, v) in avg.iter_mut().zip(&snap.values) {
            *a += v / (mass * n as f64);
        }
    }
    Ok(avg)
}

/// `F̃(τ) = ∫ a(τ,x) (1/T)∫₀ᵀ n/ρ dt dx`.
pub fn mean_fitness(orbit: &OrbitRecord, model: &EnvironmentModel, tau: f64) -> Result<f64> {
    let avg = time_averaged_profile(orbit)?;
    let dx = orbit.grid.dx;
    Ok(dx
        * orbit
            .grid
            .nodes()
            .iter()
            .zip(&avg)
            .map(|(&x, p)| model.rate(tau, x) * p)
            .sum::<f64>())
}

/// Stationary state of the environment frozen at `tau`.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryComparison {
    pub numeric: DensityField,
    pub rho_numeric: f64,
    /// Explicit Gaussian for builtin quadratic rates.
    pub analytic: Option<DensityField>,
    pub rho_analytic: Option<f64>,
    /// `max |n_num − n_an| / max n_an`.
    pub sup_relative_gap: Option<f64>,
}

/// Ground state of `σ∂ₓₓ + a(τ,·)`: `ρ_c = −λ`, `n_c = ρ_c P`.
///
/// The frozen operator is run through the periodic eigen-solver with an
/// artificial period of `max(512, 10/dt)` steps.
pub fn stationary_constant_env(
    model: &EnvironmentModel,
    tau: f64,
    eps: f64,
    grid: &SimulationGrid,
) -> Result<StationaryComparison> {
    let grid = grid.clone().with_sigma(eps * eps);
    let steps = ((10.0 / grid.dt).round() as usize).max(512);
    let frozen = model.frozen(tau, steps as f64 * grid.dt)?;
    let hyp = check_hypotheses(&frozen, (grid.x_lo, grid.x_hi), 0.0);
    if hyp.confinement.is_none() {
        return Err(invalid(format!(
            "frozen rate at τ = {tau} is not confining on [{}, {}]",
            grid.x_lo, grid.x_hi
        )));
    }
    let pair = principal_eigenpair(&grid, &frozen, FloquetOptions::default())?;
    if pair.lambda >= 0.0 {
        return Err(Error::Extinction(format!(
            "frozen environment at τ = {tau} has λ = {} ≥ 0",
            pair.lambda
        )));
    }
    let rho_numeric = -pair.lambda;
    let signal = effective_signals(&pair, &frozen)?;
    let numeric = DensityField::new(
        0.0,
        signal.p_snapshots[0]
            .values
            .iter()
            .map(|p| rho_numeric * p)
            .collect(),
    );
    let (analytic, rho_analytic, gap) = match model.frozen_quadratic(tau) {
        Some(q) => {
            let rho_c = q.r - eps * q.g.sqrt();
            let norm = rho_c * q.g.powf(0.25) / (2.0 * PI * eps).sqrt();
            let field = DensityField::from_fn(&grid, 0.0, |x| {
                norm * (-q.g.sqrt() * (x - q.center).powi(2) / (2.0 * eps)).exp()
            });
            let peak = field.sup();
            let gap = numeric
                .values
                .iter()
                .zip(&field.values)
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
                / peak;
            (Some(field), Some(rho_c), Some(gap))
        }
        None => (None, None, None),
    };
    Ok(StationaryComparison {
        numeric,
        rho_numeric,
        analytic,
        rho_analytic,
        sup_relative_gap: gap,
    })
}

/// Periodic versus constant environment, evaluated in the environment at `tau`.
#[derive(Debug, Clone, PartialEq)]
pub struct FitnessComparison {
    pub tau: f64,
    pub eps: f64,
    pub f_p: f64,
    pub f_c: f64,
    /// Closed-form `F̃_p`, builtin pressure models only.
    pub f_p_predicted: Option<f64>,
    /// Closed-form `F̃_c`, builtin models only.
    pub f_c_predicted: Option<f64>,
    pub rho_mean_p: f64,
    pub rho_c: f64,
    /// Period mean of the variance of `n/ρ` on the orbit.
    pub variance_p: f64,
    pub variance_c: f64,
    /// `"F_c < F_p"`, `"F_p < F_c"` or `"F_c = F_p"`.
    pub ordering: String,
}

/// Compare the periodic orbit against the stationary state of the frozen
/// environment at `tau`. The grid's `σ` is replaced by `ε²`.
pub fn fitness_comparison(
    model: &EnvironmentModel,
    tau: f64,
    eps: f64,
    grid: &SimulationGrid,
    orbit_opts: OrbitOptions,
) -> Result<FitnessComparison> {
    let grid = grid.clone().with_sigma(eps * eps);
    let orbit = find_periodic_orbit(&grid, model, None, orbit_opts)?;
    fitness_comparison_with_orbit(model, tau, eps, &orbit)
}

/// As [`fitness_comparison`] for an orbit that is already available.
pub fn fitness_comparison_with_orbit(
    model: &EnvironmentModel,
    tau: f64,
    eps: f64,
    orbit: &OrbitRecord,
) -> Result<FitnessComparison> {
    let f_p = mean_fitness(orbit, model, tau)?;
    let (_, var) = orbit_moment_samples(orbit)?;
    let variance_p = periodic_mean(&var);
    let stat = stationary_constant_env(model, tau, eps, &orbit.grid)?;
    let f_c = {
        let dx = orbit.grid.dx;
        let xs = orbit.grid.nodes();
        dx * xs
            .iter()
            .zip(&stat.numeric.values)
            .map(|(&x, n)| model.rate(tau, x) * n)
            .sum::<f64>()
            / stat.rho_numeric
    };
    let variance_c = field_concentration(&orbit.grid, &stat.numeric, 0.0, f64::INFINITY)?.variance;
    let f_p_predicted = match model.kind() {
        ModelKind::OscillatingPressure {
            r,
            g_mean,
            pressure,
        } => Some(r - eps * pressure(tau) / g_mean.sqrt()),
        ModelKind::OscillatingOptimum { r, g, .. }
            if model.frozen_quadratic(tau).map(|q| q.center.abs() < 1e-12) == Some(true) =>
        {
            Some(r - eps * g.sqrt())
        }
        _ => None,
    };
    let scale = f_p.abs().max(f_c.abs()).max(1.0);
    let ordering = if (f_p - f_c).abs() <= 1e-12 * scale {
        "F_c = F_p"
    } else if f_c < f_p {
        "F_c < F_p"
    } else {
        "F_p < F_c"
    };
    Ok(FitnessComparison {
        tau,
        eps,
        f_p,
        f_c,
        f_p_predicted,
        f_c_predicted: stat.rho_analytic,
        rho_mean_p: orbit.rho_mean(),
        rho_c: stat.rho_numeric,
        variance_p,
        variance_c,
        ordering: ordering.to_string(),
    })
}

/// Least-squares fit `y ≈ m₀ + α cos bt + β sin bt`, reported as
/// `m₀ + amplitude · sin(bt − lag)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinusoidFit {
    pub offset: f64,
    pub amplitude: f64,
    pub lag: f64,
}

pub fn fit_sinusoid(times: &[f64], values: &[f64], b: f64) -> Result<SinusoidFit> {
    if times.len() != values.len() || times.len() < 3 {
        return Err(invalid("sinusoid fit needs at least three paired samples"));
    }
    // normal equations for the basis (1, cos, sin)
    let mut m = [[0.0f64; 3]; 3];
    let mut rhs = [0.0f64; 3];
    for (&t, &y) in times.iter().zip(values) {
        let basis = [1.0, (b * t).cos(), (b * t).sin()];
        for i in 0..3 {
            rhs[i] += basis[i] * y;
            for j in 0..3 {
                m[i][j] += basis[i] * basis[j];
            }
        }
    }
    let sol = solve3(m, rhs).ok_or_else(|| invalid("sinusoid fit is singular"))?;
    let (alpha, beta) = (sol[1], sol[2]);
    Ok(SinusoidFit {
        offset: sol[0],
        amplitude: alpha.hypot(beta),
        lag: (-alpha).atan2(beta),
    })
}

fn solve3(mut m: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let pivot = (col..3).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[pivot][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..3 {
            let f = m[row][col] / m[col][col];
            for k in col..3 {
                m[row][k] -= f * m[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let s: f64 = (row + 1..3).map(|k| m[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / m[row][row];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env_models::{make_oscillating_optimum, make_oscillating_pressure};
    use crate::pde_solver::gaussian_field;

    fn example1() -> EnvironmentModel {
        make_oscillating_optimum(1.0, 1.0, 1.0, 2.0 * PI).unwrap()
    }

    fn example2() -> EnvironmentModel {
        make_oscillating_pressure(1.0, |t| 2.0 + 1.8 * (2.0 * PI * t).cos()).unwrap()
    }

    fn grid() -> SimulationGrid {
        SimulationGrid::new(-4.0, 4.0, 799, 1.0 / 512.0, 0.0025).unwrap()
    }

    #[test]
    fn hopf_cole_inverts_gaussians() {
        let g = grid();
        let eps = 0.05;
        let flat = DensityField::from_fn(&g, 0.0, |_| (2.0 * PI * eps).powf(-0.5));
        assert!(hopf_cole(&flat, eps)
            .unwrap()
            .iter()
            .all(|u| u.abs() < 1e-14));
        let gauss = gaussian_field(&g, 0.0, eps, 1.0);
        for (u, x) in hopf_cole(&gauss, eps).unwrap().iter().zip(g.nodes()) {
            assert!((u + x * x / 2.0).abs() < 1e-12);
        }
        let zero = DensityField::new(0.0, vec![0.0; g.nx]);
        assert!(matches!(hopf_cole(&zero, eps), Err(Error::ZeroMass(_))));
    }

    #[test]
    fn limit_profiles_of_builtins_are_parabolas() {
        let g = grid();
        for (m, curv) in [(example1(), 1.0), (example2(), 2f64.sqrt())] {
            let x_m = m.analytic().unwrap().x_m;
            let rho_bar = mean_growth(&m, x_m);
            let p = limit_profile(&m, rho_bar, &g).unwrap();
            for (u, x) in p.u_values.iter().zip(&p.xs) {
                assert!((u + curv / 2.0 * x * x).abs() < 1e-10, "{u} at {x}");
            }
            assert!(p.hamilton_jacobi_residual(&m) < 1e-8);
            assert!(p.u_values.iter().all(|u| *u <= 0.0));
            assert!((p.taylor.a - curv).abs() < 1e-15);
        }
        assert!((limit_profile(&example1(), 0.5, &g).unwrap().taylor.a - 1.0).abs() < 1e-15);
    }

    #[test]
    fn numeric_taylor_matches_closed_form() {
        let m = example1();
        let t = numeric_taylor(&m, 0.5, 0.0, 0.1).unwrap();
        assert!((t.a - 1.0).abs() < 1e-6);
        assert!(t.b.abs() < 1e-6 && t.c.abs() < 1e-6);
        // ā = 1 − x² + x³/3 near 0: √(x² − x³/3) = x(1 − x/6 − x²/72 …)
        let cubic = EnvironmentModel::custom(1.0, |_, x| 1.0 - x * x + x * x * x / 3.0).unwrap();
        let t = numeric_taylor(&cubic, 1.0, 0.0, 0.02).unwrap();
        assert!((t.a - 1.0).abs() < 1e-6);
        assert!((t.b - 1.0 / 18.0).abs() < 1e-5, "{}", t.b);
        assert!((t.c - 1.0 / 288.0).abs() < 1e-4, "{}", t.c);
    }

    #[test]
    fn low_rho_bar_is_inconsistent() {
        let g = grid();
        assert!(matches!(
            limit_profile(&example1(), 0.4, &g),
            Err(Error::LimitInconsistency(_))
        ));
    }

    #[test]
    fn corrector_of_example1() {
        let m = example1();
        let g = SimulationGrid::new(-2.0, 2.0, 79, 0.01, 0.0025).unwrap();
        let q = PeriodicScalarSignal::from_fn(1.0, {
            let m = m.clone();
            move |t| m.rate(t, 0.0)
        })
        .unwrap();
        let orbit = periodic_rho_closed_form(&q).unwrap();
        let profile = limit_profile(&m, orbit.mean, &g).unwrap();
        let corr = corrector(&m, &orbit, &profile).unwrap();
        for j in 0..CORRECTOR_NODES {
            let t = corr.times[j];
            assert!((corr.d.eval(t) + (2.0 / (2.0 * PI)) * (2.0 * PI * t).cos()).abs() < 1e-8);
            assert!(corr.e.eval(t).abs() < 1e-6);
        }
        assert!((corr.kappa_bar + 1.0).abs() < 1e-15);
        // the cell solution starts and ends at zero for every trait
        let last = corr.v_values.last().unwrap();
        assert!(corr.v_values[0].iter().all(|v| *v == 0.0));
        assert!(last.iter().all(|v| v.abs() < 1e-9));
    }

    #[test]
    fn corrector_of_example2_has_no_drift() {
        let m = example2();
        let g = SimulationGrid::new(-2.0, 2.0, 79, 0.01, 0.0025).unwrap();
        let q = PeriodicScalarSignal::from_fn(1.0, |_| 1.0).unwrap();
        let orbit = periodic_rho_closed_form(&q).unwrap();
        let profile = limit_profile(&m, 1.0, &g).unwrap();
        let corr = corrector(&m, &orbit, &profile).unwrap();
        assert!(corr.d.samples().unwrap().iter().all(|d| d.abs() < 1e-10));
        assert!((corr.kappa_bar + 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn moment_expansion_reproduces_closed_forms() {
        let t = TaylorCoefficients {
            a: 1.7,
            b: 0.3,
            c: -0.2,
        };
        let (d, e, eps) = (0.4, 0.1, 1e-3);
        let mu = gaussian_moment_expansion(1, &t, d, e, eps).unwrap();
        assert!((mu - eps * (3.0 * t.b / t.a.powi(2) + d / t.a)).abs() < 1e-15);
        let var = variance_expansion(&t, d, e)(eps);
        assert!((var - eps / t.a).abs() < 1e-15);
        // population size bracket without F
        let (a, b, c) = (t.a, t.b, t.c);
        let expected = a.powf(-0.5)
            * (1.0
                + eps
                    * (15.0 * b * b / (2.0 * a.powi(3))
                        + 3.0 * (c + b * d) / (a * a)
                        + (e + 0.5 * d * d) / a));
        assert!((mass_expansion(&t, d, e, eps) - expected).abs() < 1e-14);
        let sym = TaylorCoefficients {
            a: 2.0,
            b: 0.0,
            c: 0.0,
        };
        assert_eq!(
            gaussian_moment_expansion(1, &sym, 0.0, 0.3, 0.05).unwrap(),
            0.0
        );
        assert!(matches!(
            gaussian_moment_expansion(5, &sym, 0.0, 0.0, 0.05),
            Err(Error::Unsupported(_))
        ));
        // fourth moment of a Gaussian of variance ε/A
        let m4 = gaussian_moment_expansion(4, &sym, 0.0, 0.0, 0.05).unwrap();
        assert!((m4 - 3.0 * (0.05f64 / 2.0).powi(2)).abs() < 1e-15);
    }

    #[test]
    fn predictions_for_builtins() {
        let g = grid();
        let p = predict_moments(&example1(), 0.05, &g).unwrap();
        let amp = 2.0 * 0.05 / (2.0 * PI);
        assert!((amp - 0.0159).abs() < 1e-4);
        let times: Vec<f64> = (0..64).map(|j| j as f64 / 64.0).collect();
        let mu: Vec<f64> = times.iter().map(|&t| p.mu.eval(t)).collect();
        let fit = fit_sinusoid(&times, &mu, 2.0 * PI).unwrap();
        assert!((fit.amplitude - amp).abs() < 1e-12);
        assert!((fit.lag - PI / 2.0).abs() < 1e-12);
        assert!((p.rho_mean - 0.45).abs() < 1e-15);
        let p2 = predict_moments(&example2(), 0.05, &g).unwrap();
        assert!((p2.sigma2.eval(0.3) - 0.05 / 2f64.sqrt()).abs() < 1e-15);
        let p0 = predict_moments(&example1(), 0.0, &g).unwrap();
        assert_eq!(
            (p0.mu.eval(0.2), p0.sigma2.eval(0.2), p0.rho_mean),
            (0.0, 0.0, 0.5)
        );
    }

    #[test]
    fn custom_prediction_agrees_with_builtin() {
        let g = SimulationGrid::new(-3.0, 3.0, 299, 1.0 / 256.0, 0.0025).unwrap();
        let builtin = example1();
        let custom = EnvironmentModel::custom(1.0, {
            let m = builtin.clone();
            move |t, x| m.rate(t, x)
        })
        .unwrap();
        let (pb, pc) = (
            predict_moments(&builtin, 0.05, &g).unwrap(),
            predict_moments(&custom, 0.05, &g).unwrap(),
        );
        for j in 0..16 {
            let t = j as f64 / 16.0;
            assert!((pb.mu.eval(t) - pc.mu.eval(t)).abs() < 1e-6);
            assert!((pb.sigma2.eval(t) - pc.sigma2.eval(t)).abs() < 1e-6);
        }
        assert!((pb.rho_mean - pc.rho_mean).abs() < 1e-6);
    }

    #[test]
    fn sinusoid_fit_recovers_parameters() {
        let times: Vec<f64> = (0..50).map(|j| j as f64 * 0.02).collect();
        let ys: Vec<f64> = times
            .iter()
            .map(|&t| 0.1 + 0.3 * (2.0 * PI * t - 0.7).sin())
            .collect();
        let fit = fit_sinusoid(&times, &ys, 2.0 * PI).unwrap();
        assert!((fit.offset - 0.1).abs() < 1e-12);
        assert!((fit.amplitude - 0.3).abs() < 1e-12);
        assert!((fit.lag - 0.7).abs() < 1e-12);
    }

    #[test]
    fn stationary_state_matches_gaussian() {
        let g = SimulationGrid::new(-3.0, 3.0, 599, 1.0 / 64.0, 0.0).unwrap();
        let s = stationary_constant_env(&example1(), 0.5, 0.05, &g).unwrap();
        assert!((s.rho_analytic.unwrap() - 0.95).abs() < 1e-15);
        assert!((s.rho_numeric - 0.95).abs() < 1e-3);
        assert!(
            s.sup_relative_gap.unwrap() < 1e-3,
            "{:?}",
            s.sup_relative_gap
        );
    }
}
