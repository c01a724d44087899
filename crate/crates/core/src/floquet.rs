//! Principal periodic eigenpair of `∂ₜp − σ∂ₓₓp − a(t,x) p = λ p` on a
//! truncated interval with zero Dirichlet data, by power iteration on the
//! period map of the linearized stepper.

use rayon::prelude::*;

use crate::env_models::{ConfinementMargin, EnvironmentModel};
use crate::error::{invalid, Error, Result};
use crate::pde_solver::{default_initial_guess, DensityField, Propagator, SimulationGrid};
use crate::quadrature::periodic_mean;
use crate::rho_ode::PeriodicScalarSignal;

/// Controls for [`principal_eigenpair`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FloquetOptions {
    /// Stop once consecutive growth factors agree to this relative tolerance.
    pub growth_tol: f64,
    /// ... and the sup-normalized profile moved by less than this.
    pub profile_tol: f64,
    pub max_iterations: usize,
    pub min_steps_per_period: usize,
    /// Keep every `snapshot_stride`-th step; `0` gives at most 512 snapshots.
    pub snapshot_stride: usize,
}

impl Default for FloquetOptions {
    fn default() -> Self {
        Self {
            growth_tol: 1e-10,
            profile_tol: 1e-9,
            max_iterations: 20_000,
            min_steps_per_period: 512,
            snapshot_stride: 0,
        }
    }
}

/// Principal eigenvalue and the periodic eigenfunction over one period.
#[derive(Debug, Clone, PartialEq)]
pub struct FloquetPair {
    pub lambda: f64,
    /// `p(t,·)` at uniformly spaced phases `0 ..= T`, scaled so that
    /// `sup p(0,·) = 1` and `p(T,·) = p(0,·)`.
    pub p_snapshots: Vec<DensityField>,
    /// `sup p(0,·)` after normalization.
    pub normalization: f64,
    /// Half-width of the truncated interval.
    pub radius: f64,
    pub grid: SimulationGrid,
    pub period: f64,
    pub iterations: usize,
    /// Last two measured growth factors.
    pub growth_factors: (f64, f64),
}

/// `Q(t) = ∫a p / ∫p` and the unit-mass profiles `P = p / ∫p`.
#[derive(Debug, Clone)]
pub struct EffectiveSignal {
    pub q: PeriodicScalarSignal,
    /// Same phases as the pair's snapshots.
    pub p_snapshots: Vec<DensityField>,
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Power iteration on the period map of the linearized equation.
pub fn principal_eigenpair(
    grid: &SimulationGrid,
    model: &EnvironmentModel,
    opts: FloquetOptions,
) -> Result<FloquetPair> {
    principal_eigenpair_from(grid, model, None, opts)
}

/// As [`principal_eigenpair`], starting from a given profile.
pub fn principal_eigenpair_from(
    grid: &SimulationGrid,
    model: &EnvironmentModel,
    start: Option<&DensityField>,
    opts: FloquetOptions,
) -> Result<FloquetPair> {
    let period = model.period();
    let per = grid.steps_per(period)?;
    if per < opts.min_steps_per_period {
        return Err(invalid(format!(
            "{per} steps per period, need at least {}",
            opts.min_steps_per_period
        )));
    }
    let stride = if opts.snapshot_stride == 0 {
        per.div_ceil(512)
    } else {
        opts.snapshot_stride
    };
    if per % stride != 0 {
        return Err(invalid(format!(
            "snapshot stride {stride} does not divide the {per} steps of a period"
        )));
    }
    let mut p = match start {
        Some(f) if f.values.len() == grid.nx => f.values.clone(),
        Some(_) => return Err(invalid("start profile does not match the grid")),
        None => default_initial_guess(grid, model).values,
    };
    let s0 = sup(&p);
    if !(s0 > 0.0 && s0.is_finite()) {
        return Err(Error::ZeroMass(
            "start profile for the eigen-iteration".into(),
        ));
    }
    p.iter_mut().for_each(|v| *v /= s0);

    let mut prop = Propagator::new(grid, model)?;
    let mut prev_growth = f64::NAN;
    let mut growth = f64::NAN;
    let mut prev = p.clone();
    let mut iterations = 0;
    loop {
        if iterations >= opts.max_iterations {
            return Err(Error::NoConvergence {
                iterations,
                detail: format!("last growth factors {prev_growth} and {growth}"),
            });
        }
        prev.copy_from_slice(&p);
        for k in 0..per {
            prop.step(&mut p, k, false)?;
        }
        iterations += 1;
        let s = sup(&p);
        if !(s > 0.0) {
            return Err(Error::ZeroMass("eigen-iterate vanished".into()));
        }
        p.iter_mut().for_each(|v| *v /= s);
        prev_growth = growth;
        growth = s;
        let moved = p
            .iter()
            .zip(&prev)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        if ((growth - prev_growth) / growth).abs() < opts.growth_tol && moved < opts.profile_tol {
            break;
        }
    }

    let lambda = -growth.ln() / period;
    // one more period for the snapshots, undoing the e^{−λt} drift
    let mut snapshots = vec![DensityField::new(0.0, p.clone())];
    for k in 0..per {
        prop.step(&mut p, k, false)?;
        if (k + 1) % stride == 0 {
            let t = (k + 1) as f64 * grid.dt;
            let scale = (lambda * t).exp();
            snapshots.push(DensityField::new(t, p.iter().map(|v| v * scale).collect()));
        }
    }
    Ok(FloquetPair {
        lambda,
        p_snapshots: snapshots,
        normalization: 1.0,
        radius: 0.5 * (grid.x_hi - grid.x_lo),
        grid: grid.clone(),
        period,
        iterations,
        growth_factors: (prev_growth, growth),
    })
}

/// `Q` and `P` at every snapshot of `pair`.
pub fn effective_signals(pair: &FloquetPair, model: &EnvironmentModel) -> Result<EffectiveSignal> {
    let xs = pair.grid.nodes();
    let dx = pair.grid.dx;
    let mut q = Vec::with_capacity(pair.p_snapshots.len());
    let mut profiles = Vec::with_capacity(pair.p_snapshots.len());
    for snap in &pair.p_snapshots {
        let mass = dx * snap.values.iter().sum::<f64>();
        if !(mass > 0.0) {
            return Err(Error::ZeroMass(format!(
                "eigenfunction snapshot at t = {}",
                snap.time
            )));
        }
        let weighted: f64 = dx
            * xs.iter()
                .zip(&snap.values)
                .map(|(&x, v)| model.rate(snap.time, x) * v)
                .sum::<f64>();
        q.push(weighted / mass);
        profiles.push(DensityField::new(
            snap.time,
            snap.values.iter().map(|v| v / mass).collect(),
        ));
    }
    // the last snapshot repeats phase 0
    q.pop();
    Ok(EffectiveSignal {
        q: PeriodicScalarSignal::from_samples(pair.period, q)?,
        p_snapshots: profiles,
    })
}

/// `|λ + (1/T) ∫₀ᵀ Q|`.
pub fn lambda_identity_residual(pair: &FloquetPair, signal: &EffectiveSignal) -> f64 {
    let mean = match signal.q.samples() {
        Some(s) => periodic_mean(s),
        None => signal.q.mean(),
    };
    (pair.lambda + mean).abs()
}

/// Largest `ln p − ln(sup p · e^{−√(δ/σ)(|x|−R₀)})` over sampled `(t, x)`
/// with `|x| ≥ R₀`; nonpositive when the exponential tail bound holds.
pub fn tail_bound_excess(pair: &FloquetPair, margin: ConfinementMargin) -> f64 {
    let rate = (margin.delta / pair.grid.sigma).sqrt();
    let xs = pair.grid.nodes();
    let peak = pair
        .p_snapshots
        .iter()
        .map(|s| sup(&s.values))
        .fold(0.0, f64::max);
    let mut worst = f64::NEG_INFINITY;
    for snap in &pair.p_snapshots {
        for (&x, &v) in xs.iter().zip(&snap.values) {
            if x.abs() >= margin.radius && v > 0.0 {
                let bound = peak.ln() - rate * (x.abs() - margin.radius);
                worst = worst.max(v.ln() - bound);
            }
        }
    }
    worst
}

/// One point of a truncation study.
#[derive(Debug, Clone, PartialEq)]
pub struct RadiusPoint {
    pub radius: f64,
    pub sigma: f64,
    pub lambda: f64,
    pub identity_residual: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadiusSweep {
    pub points: Vec<RadiusPoint>,
    /// `λ_R` never increases with `R` beyond `tolerance`.
    pub nonincreasing: bool,
    /// `|λ_{R_last} − λ_{R_prev}|`, the reported truncation estimate.
    pub truncation_gap: f64,
}

/// Grids `[center − R, center + R]` of spacing `dx` for each radius.
pub fn grid_family(
    radii: &[f64],
    center: f64,
    dx: f64,
    dt: f64,
    sigma: f64,
) -> Result<Vec<SimulationGrid>> {
    radii
        .iter()
        .map(|&r| SimulationGrid::with_spacing(center - r, center + r, dx, dt, sigma))
        .collect()
}

/// Eigen-solves for every grid in parallel. Grids must be ordered by radius.
pub fn radius_sweep(
    grids: &[SimulationGrid],
    model: &EnvironmentModel,
    opts: FloquetOptions,
    tolerance: f64,
) -> Result<RadiusSweep> {
    let points: Vec<RadiusPoint> = grids
        .par_iter()
        .map(|g| {
            let pair = principal_eigenpair(g, model, opts)?;
            let signal = effective_signals(&pair, model)?;
            Ok(RadiusPoint {
                radius: pair.radius,
                sigma: g.sigma,
                lambda: pair.lambda,
                identity_residual: lambda_identity_residual(&pair, &signal),
                iterations: pair.iterations,
            })
        })
        .collect::<Result<_>>()?;
    if points.windows(2).any(|w| w[1].radius < w[0].radius) {
        return Err(invalid("radius sweep grids must be ordered by radius"));
    }
    let nonincreasing = points
        .windows(2)
        .all(|w| w[1].lambda <= w[0].lambda + tolerance);
    let truncation_gap = match points.as_slice() {
        [.., a, b] => (b.lambda - a.lambda).abs(),
        _ => f64::NAN,
    };
    Ok(RadiusSweep {
        points,
        nonincreasing,
        truncation_gap,
    })
}

/// Ground energy of `−∂ₓₓ` on the discrete interval with zero Dirichlet data.
pub fn discrete_dirichlet_ground_energy(grid: &SimulationGrid) -> f64 {
    let theta = std::f64::consts::PI / (2.0 * (grid.nx + 1) as f64);
    (2.0 * theta.sin() / grid.dx).powi(2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env_models::make_oscillating_optimum;
    use std::f64::consts::PI;

    fn opts() -> FloquetOptions {
        FloquetOptions {
            min_steps_per_period: 64,
            ..Default::default()
        }
    }

    #[test]
    fn constant_rate_is_shifted_dirichlet_energy() {
        let sigma = 0.01;
        let g = SimulationGrid::new(-2.0, 2.0, 199, 1.0 / 64.0, sigma).unwrap();
        let m = EnvironmentModel::constant(0.7, 1.0).unwrap();
        let pair = principal_eigenpair(&g, &m, opts()).unwrap();
        // continuum γ₁ = π²/(2R)², discrete energy to O(dx²)
        let gamma = (PI / 4.0).powi(2);
        assert!((pair.lambda - (-0.7 + sigma * gamma)).abs() < 1e-5);
        let signal = effective_signals(&pair, &m).unwrap();
        let res = lambda_identity_residual(&pair, &signal);
        assert!((res - sigma * gamma).abs() < 1e-5, "{res}");
    }

    #[test]
    fn space_independent_rate_gives_averaged_lambda() {
        let sigma = 0.01;
        let g = SimulationGrid::new(-2.0, 2.0, 199, 1.0 / 256.0, sigma).unwrap();
        let m = EnvironmentModel::custom(1.0, |t, _| 0.4 + 0.8 * (2.0 * PI * t).cos()).unwrap();
        let pair = principal_eigenpair(
            &g,
            &m,
            FloquetOptions {
                min_steps_per_period: 256,
                ..opts()
            },
        )
        .unwrap();
        let gamma = (PI / 4.0).powi(2);
        assert!((pair.lambda - (-0.4 + sigma * gamma)).abs() < 1e-5);
        let signal = effective_signals(&pair, &m).unwrap();
        for (j, s) in signal.q.samples().unwrap().iter().enumerate() {
            let t = pair.p_snapshots[j].time;
            assert!((s - (0.4 + 0.8 * (2.0 * PI * t).cos())).abs() < 1e-12);
        }
        for p in &signal.p_snapshots {
            assert!((g.dx * p.values.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn pair_invariants_for_example1() {
        let g = SimulationGrid::new(-4.0, 4.0, 399, 1.0 / 128.0, 0.0025).unwrap();
        let m = make_oscillating_optimum(1.0, 1.0, 1.0, 2.0 * PI).unwrap();
        let pair = principal_eigenpair(
            &g,
            &m,
            FloquetOptions {
                min_steps_per_period: 128,
                ..opts()
            },
        )
        .unwrap();
        assert!(pair.lambda < 0.0);
        assert!((sup(&pair.p_snapshots[0].values) - 1.0).abs() < 1e-12);
        assert!(pair
            .p_snapshots
            .iter()
            .all(|s| s.values.iter().all(|v| *v >= 0.0)));
        let (first, last) = (&pair.p_snapshots[0], pair.p_snapshots.last().unwrap());
        let gap = first
            .values
            .iter()
            .zip(&last.values)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(gap < 1e-8, "{gap}");
    }

    #[test]
    fn vanishing_viscosity_approaches_max_mean_rate() {
        let m = make_oscillating_optimum(1.0, 1.0, 1.0, 2.0 * PI).unwrap();
        let max_abar = 0.5;
        let mut prev = f64::INFINITY;
        for sigma in [0.04, 0.01, 0.0025] {
            let g = SimulationGrid::new(-3.0, 3.0, 299, 1.0 / 128.0, sigma).unwrap();
            let pair = principal_eigenpair(
                &g,
                &m,
                FloquetOptions {
                    min_steps_per_period: 128,
                    ..opts()
                },
            )
            .unwrap();
            let gap = (pair.lambda + max_abar).abs();
            assert!(gap < prev);
            prev = gap;
        }
        assert!(prev < 0.06);
    }

    #[test]
    fn discrete_energy_tends_to_continuum() {
        let g = SimulationGrid::new(-2.0, 2.0, 1999, 0.1, 1.0).unwrap();
        assert!((discrete_dirichlet_ground_energy(&g) - (PI / 4.0).powi(2)).abs() < 1e-6);
    }

    #[test]
    fn too_few_steps_is_rejected() {
        let g = SimulationGrid::new(-2.0, 2.0, 99, 1.0 / 64.0, 0.01).unwrap();
        let m = EnvironmentModel::constant(1.0, 1.0).unwrap();
        assert!(principal_eigenpair(&g, &m, FloquetOptions::default()).is_err());
    }
}
