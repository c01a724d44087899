//! Time stepping of `∂ₜn − σ ∂ₓₓn = n (a(t,x) − ρ(t))`, `ρ = ∫ n dx`, on a
//! truncated interval with zero Dirichlet data, and the period-map fixed
//! point iteration that locates the periodic orbit.
//!
//! Two schemes share the same grid and tridiagonal machinery:
//!
//! * [`TimeScheme::ImexEuler`]: backward-Euler diffusion, forward-Euler
//!   reaction with `ρ` frozen at the start of the step.
//! * [`TimeScheme::Strang`]: half reaction step, Crank–Nicolson diffusion,
//!   half reaction step. Each reaction half step is solved in closed form:
//!   with `a` frozen at the half-step midpoint, `n(s) = n₀ e^{s a} / (1 + ∫₀ˢ m)`
//!   where `m(s) = ∫ n₀ e^{s a} dx`. The competition term therefore only ever
//!   rescales `n`, and the normalized profile evolves exactly as for the
//!   linearized problem.

use crate::env_models::{locate_optimum, EnvironmentModel};
use crate::error::{invalid, Error, Result};

/// Population sizes below this are treated as extinct.
pub const EXTINCTION_THRESHOLD: f64 = 1e-12;

/// Largest reaction table cached per propagator (entries).
const MAX_CACHED_FACTORS: usize = 1 << 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    DirichletZero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TimeScheme {
    ImexEuler,
    #[default]
    Strang,
}

/// Uniform grid of `nx` interior nodes on `(x_lo, x_hi)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationGrid {
    pub x_lo: f64,
    pub x_hi: f64,
    pub nx: usize,
    pub dx: f64,
    pub dt: f64,
    pub boundary: Boundary,
    /// Diffusion coefficient `σ = ε²`.
    pub sigma: f64,
    pub scheme: TimeScheme,
}

impl SimulationGrid {
    pub fn new(x_lo: f64, x_hi: f64, nx: usize, dt: f64, sigma: f64) -> Result<Self> {
        if !(x_lo.is_finite() && x_hi.is_finite() && x_lo < x_hi) {
            return Err(invalid(format!("need x_lo < x_hi, got [{x_lo}, {x_hi}]")));
        }
        if nx < 16 {
            return Err(invalid(format!(
                "need at least 16 interior nodes, got {nx}"
            )));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(invalid(format!("time step must be positive, got {dt}")));
        }
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(invalid(format!(
                "diffusion must be nonnegative, got {sigma}"
            )));
        }
        Ok(Self {
            x_lo,
            x_hi,
            nx,
            dx: (x_hi - x_lo) / (nx + 1) as f64,
            dt,
            boundary: Boundary::DirichletZero,
            sigma,
            scheme: TimeScheme::default(),
        })
    }

    /// Grid on `(x_lo, x_hi)` whose spacing is `dx` (rounded to fit).
    pub fn with_spacing(x_lo: f64, x_hi: f64, dx: f64, dt: f64, sigma: f64) -> Result<Self> {
        if !(dx.is_finite() && dx > 0.0) {
            return Err(invalid(format!("spacing must be positive, got {dx}")));
        }
        let cells = ((x_hi - x_lo) / dx).round().max(2.0) as usize;
        Self::new(x_lo, x_hi, cells - 1, dt, sigma)
    }

    pub fn with_scheme(mut self, scheme: TimeScheme) -> Self {
        self.scheme = scheme;
        self
    }

    /// Same grid with a different diffusion coefficient.
    pub fn with_sigma(mut self, sigma: f64) -> Self {
        self.sigma = sigma;
        self
    }

    #[inline]
    pub fn node(&self, i: usize) -> f64 {
        self.x_lo + (i + 1) as f64 * self.dx
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.nx).map(|i| self.node(i)).collect()
    }

    /// Number of steps in one period, requiring `dt` to divide `period`.
    pub fn steps_per(&self, period: f64) -> Result<usize> {
        let ratio = period / self.dt;
        let steps = ratio.round();
        if steps < 1.0 || (ratio - steps).abs() > 1e-9 * ratio.max(1.0) {
            return Err(invalid(format!(
                "time step {} does not divide the period {period}",
                self.dt
            )));
        }
        Ok(steps as usize)
    }
}

/// `σ = ε²`.
pub fn sigma_from_eps(eps: f64) -> f64 {
    eps * eps
}

/// Density on the interior nodes of a grid at a given time.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityField {
    pub time: f64,
    pub values: Vec<f64>,
}

impl DensityField {
    pub fn new(time: f64, values: Vec<f64>) -> Self {
        Self { time, values }
    }

    pub fn from_fn(grid: &SimulationGrid, time: f64, f: impl Fn(f64) -> f64) -> Self {
        Self {
            time,
            values: grid.nodes().into_iter().map(f).collect(),
        }
    }

    pub fn sup(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// `ρ = ∫ n dx` by the trapezoid rule (boundary values are zero).
pub fn total_mass(field: &DensityField, grid: &SimulationGrid) -> f64 {
    grid.dx * field.values.iter().sum::<f64>()
}

/// Gaussian of variance `var` centered at `center`, scaled to `mass`.
pub fn gaussian_field(grid: &SimulationGrid, center: f64, var: f64, mass: f64) -> DensityField {
    let norm = mass / (2.0 * std::f64::consts::PI * var).sqrt();
    DensityField::from_fn(grid, 0.0, |x| {
        norm * (-(x - center).powi(2) / (2.0 * var)).exp()
    })
}

/// Default starting profile: unit-mass Gaussian of variance `ε = √σ` at `x_m`.
pub fn default_initial_guess(grid: &SimulationGrid, model: &EnvironmentModel) -> DensityField {
    let x_m = model
        .analytic()
        .map(|a| a.x_m)
        .or_else(|| locate_optimum(model, (grid.x_lo, grid.x_hi)).ok())
        .unwrap_or(0.5 * (grid.x_lo + grid.x_hi));
    let var = grid.sigma.sqrt().max(4.0 * grid.dx);
    gaussian_field(grid, x_m, var, 1.0)
}

/// Factored constant-coefficient tridiagonal matrix `I − α L_h`, where `L_h`
/// is the unscaled 3-point Laplacian stencil `(1, −2, 1)`.
#[derive(Debug, Clone)]
pub(crate) struct Tridiagonal {
    alpha: f64,
    /// Modified super-diagonal of the Thomas sweep.
    upper: Vec<f64>,
    /// Reciprocal pivots.
    inv_pivot: Vec<f64>,
}

impl Tridiagonal {
    pub(crate) fn new(n: usize, alpha: f64) -> Result<Self> {
        let (diag, off) = (1.0 + 2.0 * alpha, -alpha);
        let mut upper = vec![0.0; n];
        let mut inv_pivot = vec![0.0; n];
        let mut prev = 0.0;
        for i in 0..n {
            let pivot = diag - off * prev;
            if !(pivot.is_finite() && pivot.abs() > 1e-300) {
                return Err(Error::NonFinite(format!(
                    "tridiagonal pivot {pivot} at row {i}"
                )));
            }
            inv_pivot[i] = 1.0 / pivot;
            upper[i] = off * inv_pivot[i];
            prev = upper[i];
        }
        Ok(Self {
            alpha,
            upper,
            inv_pivot,
        })
    }

    /// Solve in place.
    pub(crate) fn solve(&self, rhs: &mut [f64]) {
        let off = -self.alpha;
        let n = rhs.len();
        let mut prev = 0.0;
        for i in 0..n {
            let v = (rhs[i] - off * prev) * self.inv_pivot[i];
            rhs[i] = v;
            prev = v;
        }
        for i in (0..n.saturating_sub(1)).rev() {
            rhs[i] -= self.upper[i] * rhs[i + 1];
        }
    }
}

/// `out = (I + β L_h) n` with zero Dirichlet data.
fn apply_explicit(beta: f64, n: &[f64], out: &mut [f64]) {
    let len = n.len();
    for i in 0..len {
        let left = if i > 0 { n[i - 1] } else { 0.0 };
        let right = if i + 1 < len { n[i + 1] } else { 0.0 };
        out[i] = n[i] + beta * (left - 2.0 * n[i] + right);
    }
}

/// Per-step diagnostics.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StepInfo {
    /// Mass removed by clipping negative values.
    pub clipped_mass: f64,
}

/// Reusable one-step propagator for a fixed grid and model.
pub(crate) struct Propagator<'a> {
    grid: &'a SimulationGrid,
    model: &'a EnvironmentModel,
    xs: Vec<f64>,
    implicit: Tridiagonal,
    /// `β` of the explicit half of Crank–Nicolson.
    explicit_beta: f64,
    steps_per_period: Option<usize>,
    /// Per phase index: reaction data for the step (layout depends on scheme).
    table: Option<Vec<f64>>,
    scratch: Vec<f64>,
    factors: Vec<f64>,
}

impl<'a> Propagator<'a> {
    pub(crate) fn new(grid: &'a SimulationGrid, model: &'a EnvironmentModel) -> Result<Self> {
        let r = grid.sigma * grid.dt / (grid.dx * grid.dx);
        let (implicit_alpha, explicit_beta) = match grid.scheme {
            TimeScheme::ImexEuler => (r, 0.0),
            TimeScheme::Strang => (0.5 * r, 0.5 * r),
        };
        let implicit = Tridiagonal::new(grid.nx, implicit_alpha)?;
        let xs = grid.nodes();
        let steps_per_period = grid.steps_per(model.period()).ok();
        let width = Self::factor_width(grid);
        let table = steps_per_period
            .filter(|p| p * width <= MAX_CACHED_FACTORS)
            .map(|p| {
                let mut table = vec![0.0; p * width];
                for k in 0..p {
                    Self::fill_factors(grid, model, &xs, k, &mut table[k * width..(k + 1) * width]);
                }
                table
            });
        Ok(Self {
            grid,
            model,
            xs,
            implicit,
            explicit_beta,
            steps_per_period,
            table,
            scratch: vec![0.0; grid.nx],
            factors: vec![0.0; width],
        })
    }

    fn factor_width(grid: &SimulationGrid) -> usize {
        match grid.scheme {
            TimeScheme::ImexEuler => grid.nx,
            TimeScheme::Strang => 2 * grid.nx,
        }
    }

    /// Reaction data for step `k` (from `t_k = k dt`).
    ///
    /// Euler: `a(t_k, x)`. Strang: `exp(dt/4 · a(t_mid, x))` for both half
    /// steps, midpoints at `t_k + dt/4` and `t_k + 3dt/4`.
    fn fill_factors(
        grid: &SimulationGrid,
        model: &EnvironmentModel,
        xs: &[f64],
        k: usize,
        out: &mut [f64],
    ) {
        let t = k as f64 * grid.dt;
        match grid.scheme {
            TimeScheme::ImexEuler => {
                for (o, &x) in out.iter_mut().zip(xs) {
                    *o = model.rate(t, x);
                }
            }
            TimeScheme::Strang => {
                let q = 0.25 * grid.dt;
                let (first, second) = out.split_at_mut(xs.len());
                for (i, &x) in xs.iter().enumerate() {
                    first[i] = (q * model.rate(t + q, x)).exp();
                    second[i] = (q * model.rate(t + 3.0 * q, x)).exp();
                }
            }
        }
    }

    fn load_factors(&mut self, k: usize) {
        let width = self.factors.len();
        match (&self.table, self.steps_per_period) {
            (Some(table), Some(p)) => {
                let phase = k % p;
                self.factors
                    .copy_from_slice(&table[phase * width..(phase + 1) * width]);
            }
            _ => Self::fill_factors(self.grid, self.model, &self.xs, k, &mut self.factors),
        }
    }

    /// Advance `n` from `t_k = k dt` to `t_{k+1}`. Without `competition` the
    /// `−ρ n` term is dropped (linearized problem).
    pub(crate) fn step(&mut self, n: &mut [f64], k: usize, competition: bool) -> Result<StepInfo> {
        self.load_factors(k);
        let dx = self.grid.dx;
        let dt = self.grid.dt;
        let mut info = StepInfo::default();
        match self.grid.scheme {
            TimeScheme::ImexEuler => {
                let rho = if competition {
                    dx * n.iter().sum::<f64>()
                } else {
                    0.0
                };
                let d0 = self.factors.iter().fold(0.0f64, |m, a| m.max(a.abs()));
                if dt * (d0 + rho) >= 1.0 {
                    return Err(invalid(format!(
                        "reaction step bound violated: dt (d0 + rho) = {} >= 1",
                        dt * (d0 + rho)
                    )));
                }
                for (v, a) in n.iter_mut().zip(&self.factors) {
                    *v += dt * *v * (a - rho);
                }
                self.implicit.solve(n);
            }
            TimeScheme::Strang => {
                let nx = self.grid.nx;
                let (first, second) = self.factors.split_at(nx);
                reaction_half_step(n, first, dx, 0.5 * dt, competition);
                apply_explicit(self.explicit_beta, n, &mut self.scratch);
                self.implicit.solve(&mut self.scratch);
                n.copy_from_slice(&self.scratch);
                reaction_half_step(n, second, dx, 0.5 * dt, competition);
            }
        }
        for v in n.iter_mut() {
            if !v.is_finite() {
                return Err(Error::NonFinite(format!(
                    "density at t = {}",
                    (k + 1) as f64 * self.grid.dt
                )));
            }
            if *v < 0.0 {
                info.clipped_mass += -*v * dx;
                *v = 0.0;
            }
        }
        Ok(info)
    }
}

/// Exact solution of `∂ₜn = n (a − ρ)` over a half step `h` with `a` frozen;
/// `quarter[i] = exp(h a_i / 2)`.
fn reaction_half_step(n: &mut [f64], quarter: &[f64], dx: f64, h: f64, competition: bool) {
    if !competition {
        for (v, q) in n.iter_mut().zip(quarter) {
            *v *= q * q;
        }
        return;
    }
    let (mut m0, mut m_half, mut m_full) = (0.0, 0.0, 0.0);
    for (v, q) in n.iter_mut().zip(quarter) {
        m0 += *v;
        m_half += *v * q;
        *v *= q * q;
        m_full += *v;
    }
    // e^{R(h)} = 1 + ∫₀ʰ m(s) ds by Simpson on the three mass samples
    let growth = 1.0 + h / 6.0 * dx * (m0 + 4.0 * m_half + m_full);
    let inv = 1.0 / growth;
    for v in n.iter_mut() {
        *v *= inv;
    }
}

/// One step of the selected scheme (see module docs).
///
/// The step starts at `field.time`; the reaction terms are evaluated at that
/// time, not at a cached phase.
pub fn step_imex(
    field: &DensityField,
    grid: &SimulationGrid,
    model: &EnvironmentModel,
) -> Result<(DensityField, StepInfo)> {
    check_field(field, grid)?;
    let shifted;
    let model_at = if field.time != 0.0 {
        // re-anchor the model so that step index 0 starts at field.time
        let t0 = field.time;
        let inner = model.clone();
        shifted = EnvironmentModel::custom(model.period(), move |t, x| inner.rate(t + t0, x))?;
        &shifted
    } else {
        model
    };
    let mut prop = Propagator::new(grid, model_at)?;
    let mut values = field.values.clone();
    let info = prop.step(&mut values, 0, true)?;
    Ok((DensityField::new(field.time + grid.dt, values), info))
}

fn check_field(field: &DensityField, grid: &SimulationGrid) -> Result<()> {
    if field.values.len() != grid.nx {
        return Err(invalid(format!(
            "field has {} values but the grid has {} nodes",
            field.values.len(),
            grid.nx
        )));
    }
    if field.values.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(invalid("density must be finite and nonnegative"));
    }
    Ok(())
}

/// Diagnostics of a forward simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationOutput {
    pub final_field: DensityField,
    /// `(t, ρ)` after every step, starting with the initial state.
    pub rho: Vec<(f64, f64)>,
    /// Relative sup-norm change between consecutive period samples.
    pub period_gaps: Vec<f64>,
    /// Largest mass seen within 5% of either end of the domain.
    pub max_boundary_mass: f64,
    pub clipped_mass: f64,
    pub extinct: bool,
}

fn boundary_mass(values: &[f64], dx: f64) -> f64 {
    let band = (values.len() / 20).max(1);
    let n = values.len();
    dx * (values[..band].iter().sum::<f64>() + values[n - band..].iter().sum::<f64>())
}

fn relative_sup_gap(a: &[f64], b: &[f64]) -> f64 {
    let diff = a
        .iter()
        .zip(b)
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    let scale = a.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if scale > 0.0 {
        diff / scale
    } else {
        0.0
    }
}

/// Repeated steps from `n0` (at time `n0.time`) up to `t_end`.
///
/// Stops early with `extinct = true` once `ρ < 1e-12`.
pub fn simulate(
    grid: &SimulationGrid,
    model: &EnvironmentModel,
    n0: &DensityField,
    t_end: f64,
) -> Result<SimulationOutput> {
    check_field(n0, grid)?;
    if n0.values.iter().all(|v| *v == 0.0) {
        return Err(invalid("initial density is identically zero"));
    }
    let k0 = (n0.time / grid.dt).round();
    if (n0.time - k0 * grid.dt).abs() > 1e-9 * grid.dt.max(n0.time.abs()) {
        return Err(invalid(format!(
            "start time {} is not a multiple of dt = {}",
            n0.time, grid.dt
        )));
    }
    let k0 = k0 as usize;
    let steps = ((t_end - n0.time) / grid.dt - 1e-9).ceil().max(0.0) as usize;
    let mut prop = Propagator::new(grid, model)?;
    let per = grid.steps_per(model.period()).ok();

    let mut n = n0.values.clone();
    let mut rho = vec![(n0.time, grid.dx * n.iter().sum::<f64>())];
    let mut period_gaps = Vec::new();
    let mut last_period_sample = n.clone();
    let mut max_boundary_mass = boundary_mass(&n, grid.dx);
    let mut clipped_mass = 0.0;
    let mut extinct = false;
    for s in 0..steps {
        let k = k0 + s;
        clipped_mass += prop.step(&mut n, k, true)?.clipped_mass;
        let t = (k + 1) as f64 * grid.dt;
        let mass = grid.dx * n.iter().sum::<f64>();
        rho.push((t, mass));
        max_boundary_mass = max_boundary_mass.max(boundary_mass(&n, grid.dx));
        if let Some(p) = per {
            if (k + 1) % p == 0 {
                period_gaps.push(relative_sup_gap(&n, &last_period_sample));
                last_period_sample.copy_from_slice(&n);
            }
        }
        if mass < EXTINCTION_THRESHOLD {
            extinct = true;
            break;
        }
    }
    let t_final = rho.last().map(|r| r.0).unwrap_or(n0.time);
    Ok(SimulationOutput {
        final_field: DensityField::new(t_final, n),
        rho,
        period_gaps,
        max_boundary_mass,
        clipped_mass,
        extinct,
    })
}

/// Controls for [`find_periodic_orbit`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrbitOptions {
    /// Stop when `‖n(kT) − n((k−1)T)‖∞ / ‖n(kT)‖∞` falls below this.
    pub tol: f64,
    pub max_periods: usize,
    /// Keep every `snapshot_stride`-th step of the final period; `0` picks a
    /// stride giving at most 512 snapshots.
    pub snapshot_stride: usize,
}

impl Default for OrbitOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_periods: 5000,
            snapshot_stride: 0,
        }
    }
}

/// One period of the periodic solution.
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitRecord {
    pub grid: SimulationGrid,
    /// Snapshots at phases `0 ..= T` (first and last included).
    pub snapshots: Vec<DensityField>,
    /// `(phase, ρ)` at every step of the recorded period.
    pub rho_samples: Vec<(f64, f64)>,
    /// Relative sup distance between the first and last snapshot.
    pub period_gap: f64,
    pub periods: usize,
    /// Relative period-to-period gaps of the whole iteration.
    pub gap_history: Vec<f64>,
    /// Geometric decay rate of the gap per period near convergence.
    pub contraction_rate: Option<f64>,
    pub clipped_mass: f64,
}

impl OrbitRecord {
    pub fn period(&self) -> f64 {
        self.snapshots.last().map(|s| s.time).unwrap_or(0.0)
    }

    /// `(1/T) ∫₀ᵀ ρ` over the recorded period.
    pub fn rho_mean(&self) -> f64 {
        let n = self.rho_samples.len() - 1;
        self.rho_samples[..n].iter().map(|s| s.1).sum::<f64>() / n as f64
    }

    /// Snapshot times are uniformly spaced; `T / (snapshots − 1)`.
    pub fn snapshot_spacing(&self) -> f64 {
        self.period() / (self.snapshots.len() - 1) as f64
    }
}

fn contraction_rate(gaps: &[f64]) -> Option<f64> {
    let usable: Vec<f64> = gaps.iter().rev().take(11).cloned().collect();
    if usable.len() < 3 || usable.iter().any(|g| !(*g > 0.0)) {
        return None;
    }
    let m = usable.len() - 1;
    Some((usable[0] / usable[m]).powf(1.0 / m as f64))
}

/// Iterate whole periods until the period map reaches its fixed point.
pub fn find_periodic_orbit(
    grid: &SimulationGrid,
    model: &EnvironmentModel,
    n0_guess: Option<&DensityField>,
    opts: OrbitOptions,
) -> Result<OrbitRecord> {
    let per = grid.steps_per(model.period())?;
    let guess = match n0_guess {
        Some(g) => g.clone(),
        None => default_initial_guess(grid, model),
    };
    check_field(&guess, grid)?;
    if guess.values.iter().all(|v| *v == 0.0) {
        return Err(invalid("initial density is identically zero"));
    }
    let mut prop = Propagator::new(grid, model)?;
    let mut n = guess.values;
    let mut start = n.clone();
    let mut gaps = Vec::new();
    let mut clipped = 0.0;
    let extinct_err = || {
        Error::Extinction(
            "no positive periodic orbit (λ ≥ 0): population size fell below 1e-12".into(),
        )
    };

    let mut periods = 0;
    loop {
        if periods >= opts.max_periods {
            return Err(Error::NoConvergence {
                iterations: periods,
                detail: format!(
                    "period-map gap {} above tolerance {}",
                    gaps.last().copied().unwrap_or(f64::NAN),
                    opts.tol
                ),
            });
        }
        start.copy_from_slice(&n);
        for k in 0..per {
            clipped += prop.step(&mut n, k, true)?.clipped_mass;
        }
        periods += 1;
        let mass = grid.dx * n.iter().sum::<f64>();
        if mass < EXTINCTION_THRESHOLD {
            return Err(extinct_err());
        }
        let gap = relative_sup_gap(&n, &start);
        gaps.push(gap);
        if gap < opts.tol {
            break;
        }
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
    let mut snapshots = vec![DensityField::new(0.0, n.clone())];
    let mut rho_samples = vec![(0.0, grid.dx * n.iter().sum::<f64>())];
    let first = n.clone();
    for k in 0..per {
        clipped += prop.step(&mut n, k, true)?.clipped_mass;
        let t = (k + 1) as f64 * grid.dt;
        rho_samples.push((t, grid.dx * n.iter().sum::<f64>()));
        if (k + 1) % stride == 0 {
            snapshots.push(DensityField::new(t, n.clone()));
        }
    }
    if rho_samples.iter().any(|r| r.1 < EXTINCTION_THRESHOLD) {
        return Err(extinct_err());
    }
    let period_gap = relative_sup_gap(&n, &first);
    Ok(OrbitRecord {
        grid: grid.clone(),
        snapshots,
        rho_samples,
        period_gap,
        periods,
        contraction_rate: contraction_rate(&gaps),
        gap_history: gaps,
        clipped_mass: clipped,
    })
}

/// Comparison envelope `n(t,x) ≤ exp(C₁ − C₂|x| + C₃ t)` with
/// `C₃ = σ C₂² + d₀`, valid when `n₀ ≤ exp(C₁ − C₂|x|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonBound {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

impl ComparisonBound {
    /// Smallest `C₁` for the given decay rate `C₂` and rate bound `d₀`.
    pub fn for_initial(grid: &SimulationGrid, n0: &DensityField, c2: f64, d0: f64) -> Self {
        let c1 = grid
            .nodes()
            .iter()
            .zip(&n0.values)
            .filter(|(_, v)| **v > 0.0)
            .map(|(x, v)| v.ln() + c2 * x.abs())
            .fold(f64::NEG_INFINITY, f64::max);
        Self {
            c1,
            c2,
            c3: grid.sigma * c2 * c2 + d0,
        }
    }

    pub fn log_value(&self, t: f64, x: f64) -> f64 {
        self.c1 - self.c2 * x.abs() + self.c3 * t
    }

    /// Largest `ln n − ln bound` over the field (≤ 0 when the bound holds).
    pub fn excess(&self, grid: &SimulationGrid, field: &DensityField) -> f64 {
        grid.nodes()
            .iter()
            .zip(&field.values)
            .filter(|(_, v)| **v > 0.0)
            .map(|(x, v)| v.ln() - self.log_value(field.time, *x))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}
