//! The `σ = 0` problem `∂ₜn = n (a(t,x) − ρ(t))`, solved through its
//! exponents: `n(t,x) = n₀(x) exp(∫₀ᵗ a(s,x) ds − ∫₀ᵗ ρ)`.

use crate::env_models::EnvironmentModel;
use crate::error::{invalid, Error, Result};
use crate::pde_solver::{DensityField, SimulationGrid, EXTINCTION_THRESHOLD};

/// Log-domain state of the `σ = 0` problem.
#[derive(Debug, Clone, PartialEq)]
pub struct ExponentState {
    pub grid: SimulationGrid,
    /// `ln n₀`, `−∞` where `n₀ = 0`.
    pub log_n0: Vec<f64>,
    /// `∫₀ᵗ a(s, x_i) ds`.
    pub log_factors: Vec<f64>,
    /// `∫₀ᵗ ρ`.
    pub rho_integral: f64,
    pub time: f64,
}

impl ExponentState {
    pub fn new(grid: &SimulationGrid, n0: &DensityField) -> Result<Self> {
        if n0.values.len() != grid.nx {
            return Err(invalid("initial density does not match the grid"));
        }
        if n0.values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(invalid("density must be finite and nonnegative"));
        }
        if n0.values.iter().all(|v| *v == 0.0) {
            return Err(invalid("initial density is identically zero"));
        }
        Ok(Self {
            grid: grid.clone(),
            log_n0: n0.values.iter().map(|v| v.ln()).collect(),
            log_factors: vec![0.0; grid.nx],
            rho_integral: 0.0,
            time: n0.time,
        })
    }

    /// `n = n₀ exp(log_factors − rho_integral)`.
    pub fn density(&self) -> DensityField {
        let values = self
            .log_n0
            .iter()
            .zip(&self.log_factors)
            .map(|(l0, l)| (l0 + l - self.rho_integral).exp())
            .collect();
        DensityField::new(self.time, values)
    }

    pub fn mass(&self) -> f64 {
        self.grid.dx * self.density().values.iter().sum::<f64>()
    }
}

/// Result of [`simulate_sigma0`].
#[derive(Debug, Clone, PartialEq)]
pub struct Sigma0Run {
    /// `(t, ρ)` after every step, starting with the initial state.
    pub rho: Vec<(f64, f64)>,
    /// `(t, ∫ n a / ρ)` at the same times.
    pub mean_rate: Vec<(f64, f64)>,
    pub state: ExponentState,
    pub extinct: bool,
}

fn mean_rate_of(state: &ExponentState, model: &EnvironmentModel, xs: &[f64]) -> (f64, f64) {
    let n = state.density();
    let dx = state.grid.dx;
    let mass = dx * n.values.iter().sum::<f64>();
    let weighted = dx
        * xs.iter()
            .zip(&n.values)
            .map(|(&x, v)| model.rate(state.time, x) * v)
            .sum::<f64>();
    (
        mass,
        if mass > 0.0 {
            weighted / mass
        } else {
            f64::NAN
        },
    )
}

/// Advance the exponents from `n0.time` to `t_end` with step `dt`.
///
/// Per trait, `∫a` over a step is Simpson's rule on `a(t_k)`, `a(t_k + dt/2)`,
/// `a(t_{k+1})`. The competition integral is closed exactly through
/// `e^{ΔR} = 1 + ∫ m`, `m(s) = ∫ n(t_k) e^{∫_{t_k}^{t_k+s} a}`, again by
/// Simpson's rule in `s`.
pub fn simulate_sigma0(
    grid: &SimulationGrid,
    model: &EnvironmentModel,
    n0: &DensityField,
    t_end: f64,
    dt: f64,
) -> Result<Sigma0Run> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(invalid(format!("time step must be positive, got {dt}")));
    }
    let mut state = ExponentState::new(grid, n0)?;
    let xs = grid.nodes();
    let steps = ((t_end - state.time) / dt - 1e-9).ceil().max(0.0) as usize;
    let t0 = state.time;

    let (m0, q0) = mean_rate_of(&state, model, &xs);
    let mut rho = vec![(t0, m0)];
    let mut mean_rate = vec![(t0, q0)];
    let mut a_left: Vec<f64> = xs.iter().map(|&x| model.rate(t0, x)).collect();
    let mut extinct = false;

    for k in 0..steps {
        let t = t0 + k as f64 * dt;
        let (mut m_start, mut m_half, mut m_full) = (0.0, 0.0, 0.0);
        for i in 0..grid.nx {
            let x = xs[i];
            let a_mid = model.rate(t + 0.5 * dt, x);
            let a_right = model.rate(t + dt, x);
            let half = dt / 24.0 * (5.0 * a_left[i] + 8.0 * a_mid - a_right);
            let full = dt / 6.0 * (a_left[i] + 4.0 * a_mid + a_right);
            let base = state.log_n0[i] + state.log_factors[i] - state.rho_integral;
            if base.is_finite() {
                m_start += base.exp();
                m_half += (base + half).exp();
                m_full += (base + full).exp();
            }
            state.log_factors[i] += full;
            a_left[i] = a_right;
        }
        let growth = 1.0 + dt / 6.0 * grid.dx * (m_start + 4.0 * m_half + m_full);
        if !(growth.is_finite() && growth > 0.0) {
            return Err(Error::NonFinite(format!(
                "competition factor at t = {}",
                t + dt
            )));
        }
        state.rho_integral += growth.ln();
        state.time = t0 + (k + 1) as f64 * dt;
        let (mass, q) = mean_rate_of(&state, model, &xs);
        if !mass.is_finite() {
            return Err(Error::NonFinite(format!(
                "population size at t = {}",
                state.time
            )));
        }
        rho.push((state.time, mass));
        mean_rate.push((state.time, q));
        if mass < EXTINCTION_THRESHOLD {
            extinct = true;
            break;
        }
    }
    Ok(Sigma0Run {
        rho,
        mean_rate,
        state,
        extinct,
    })
}

/// Moments of `n/ρ` and its mass outside `|x − center| < radius`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConcentrationMetrics {
    pub mean: f64,
    pub variance: f64,
    pub mass_outside: f64,
}

/// Trapezoid moments of the normalized density.
pub fn concentration_metrics(
    state: &ExponentState,
    center: f64,
    radius: f64,
) -> Result<ConcentrationMetrics> {
    field_concentration(&state.grid, &state.density(), center, radius)
}

/// Same as [`concentration_metrics`] for an explicit density.
pub fn field_concentration(
    grid: &SimulationGrid,
    field: &DensityField,
    center: f64,
    radius: f64,
) -> Result<ConcentrationMetrics> {
    let xs = grid.nodes();
    let mass: f64 = field.values.iter().sum();
    if !(mass > 0.0) {
        return Err(Error::ZeroMass(format!("density at t = {}", field.time)));
    }
    let mut mean = 0.0;
    let mut outside = 0.0;
    for (&x, v) in xs.iter().zip(&field.values) {
        mean += x * v;
        if (x - center).abs() >= radius {
            outside += v;
        }
    }
    mean /= mass;
    let variance = xs
        .iter()
        .zip(&field.values)
        .map(|(&x, v)| (x - mean).powi(2) * v)
        .sum::<f64>()
        / mass;
    Ok(ConcentrationMetrics {
        mean,
        variance,
        mass_outside: outside / mass,
    })
}

/// Trait at the largest density.
pub fn selected_trait(state: &ExponentState) -> f64 {
    let (i, _) = state
        .log_n0
        .iter()
        .zip(&state.log_factors)
        .map(|(a, b)| a + b)
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, v)| {
            if v > best.1 {
                (i, v)
            } else {
                best
            }
        });
    state.grid.node(i)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env_models::make_oscillating_optimum;
    use crate::pde_solver::gaussian_field;
    use std::f64::consts::PI;

    fn grid() -> SimulationGrid {
        SimulationGrid::new(-4.0, 4.0, 799, 0.01, 0.0).unwrap()
    }

    #[test]
    fn autonomous_run_tends_to_peak_rate() {
        let g = grid();
        let m = EnvironmentModel::custom(1.0, |_, x| 1.0 - x * x).unwrap();
        let n0 = gaussian_field(&g, 0.2, 0.5, 0.1);
        let run = simulate_sigma0(&g, &m, &n0, 100.0, 0.05).unwrap();
        let last = run.rho.last().unwrap().1;
        // ρ ≈ 1 − E[x²] with variance ~ 1/(2t)
        assert!((last - 1.0).abs() < 0.02, "{last}");
        // exponents are exactly t·a(x) for an autonomous rate
        for (i, l) in run.state.log_factors.iter().enumerate() {
            let x = g.node(i);
            assert!((l - 100.0 * (1.0 - x * x)).abs() < 1e-9);
        }
    }

    #[test]
    fn gaussian_metrics_match_tail_oracle() {
        let g = SimulationGrid::new(-4.0, 4.0, 7999, 0.01, 0.0).unwrap();
        let sd = 0.2;
        let f = gaussian_field(&g, 0.5, sd * sd, 3.0);
        let c = field_concentration(&g, &f, 0.5, 3.0 * sd).unwrap();
        assert!((c.mean - 0.5).abs() < 1e-10);
        assert!((c.variance - sd * sd).abs() < 1e-8);
        assert!((c.mass_outside - 0.0027).abs() < 1e-4, "{}", c.mass_outside);
    }

    #[test]
    fn discrete_dirac_has_grid_limited_variance() {
        let g = grid();
        let mut v = vec![0.0; g.nx];
        v[399] = 1.0;
        v[398] = 0.5;
        v[400] = 0.5;
        let c = field_concentration(&g, &DensityField::new(0.0, v), 0.0, 0.1).unwrap();
        assert!(c.variance <= g.dx * g.dx);
        assert_eq!(c.mass_outside, 0.0);
    }

    #[test]
    fn zero_mass_is_an_error() {
        let g = grid();
        let f = DensityField::new(0.0, vec![0.0; g.nx]);
        assert!(matches!(
            field_concentration(&g, &f, 0.0, 0.1),
            Err(Error::ZeroMass(_))
        ));
        assert!(ExponentState::new(&g, &f).is_err());
    }

    #[test]
    fn uniform_death_reaches_extinction() {
        let g = grid();
        let m = EnvironmentModel::constant(-1.0, 1.0).unwrap();
        let n0 = gaussian_field(&g, 0.0, 0.1, 1.0);
        let run = simulate_sigma0(&g, &m, &n0, 40.0, 0.01).unwrap();
        assert!(run.extinct);
    }

    #[test]
    fn oscillating_optimum_variance_shrinks_like_inverse_time() {
        let g = grid();
        let m = make_oscillating_optimum(1.0, 1.0, 1.0, 2.0 * PI).unwrap();
        let n0 = DensityField::from_fn(&g, 0.0, |_| 0.1);
        let mut variances = Vec::new();
        let mut start = n0;
        for t in [25.0, 50.0, 100.0] {
            let run = simulate_sigma0(&g, &m, &start, t, 1.0 / 64.0).unwrap();
            variances.push(
                concentration_metrics(&run.state, 0.0, 0.1)
                    .unwrap()
                    .variance,
            );
            start = run.state.density();
        }
        // Laplace: variance ≈ 1/(2 g t) once the initial width is forgotten
        for (v, t) in variances.iter().zip([25.0, 50.0, 100.0]) {
            assert!((v * 2.0 * t - 1.0).abs() < 0.05, "{v} at {t}");
        }
    }

    #[test]
    fn second_order_in_time() {
        let g = SimulationGrid::new(-3.0, 3.0, 199, 0.01, 0.0).unwrap();
        let m = make_oscillating_optimum(1.0, 1.0, 1.0, 2.0 * PI).unwrap();
        let n0 = gaussian_field(&g, 0.3, 0.3, 0.2);
        let at = |dt: f64| {
            simulate_sigma0(&g, &m, &n0, 2.0, dt)
                .unwrap()
                .rho
                .last()
                .unwrap()
                .1
        };
        let (a, b, c) = (at(1.0 / 16.0), at(1.0 / 32.0), at(1.0 / 64.0));
        let ratio = (a - b) / (b - c);
        assert!(ratio > 3.0, "{ratio}");
    }
}
