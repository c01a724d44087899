//! The periodically forced logistic equation `dρ/dt = ρ (q(t) − ρ)`.
//!
//! Its unique positive periodic solution has the closed form
//!
//! ```text
//!            1 − exp(−∫₀ᵀ q)
//! ρ̃(t) = ─────────────────────────────────────────
//!         exp(−∫₀ᵀ q) ∫ₜ^{t+T} exp(∫ₜˢ q(θ) dθ) ds
//! ```
//!
//! which exists iff `∫₀ᵀ q > 0`. Both the closed form and a positivity
//! preserving RK4 integrator live here; the two are used as each other's
//! oracle.

use std::fmt;
use std::sync::Arc;

use crate::env_models::ScalarFn;
use crate::error::{invalid, Error, Result};
use crate::quadrature::{cumulative_simpson, periodic_mean, simpson};

/// Default nodes per period for the closed-form orbit.
pub const CLOSED_FORM_NODES: usize = 2048;

#[derive(Clone)]
enum SignalRepr {
    Function(ScalarFn),
    /// Samples at `t_j = j T / N`, `j = 0..N`, endpoint excluded.
    Sampled(Arc<Vec<f64>>),
}

/// A `T`-periodic scalar function of time, either callable or sampled.
///
/// Sampled signals are evaluated with periodic four-point Lagrange
/// interpolation.
#[derive(Clone)]
pub struct PeriodicScalarSignal {
    period: f64,
    repr: SignalRepr,
}

impl fmt::Debug for PeriodicScalarSignal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut d = f.debug_struct("PeriodicScalarSignal");
        d.field("period", &self.period);
        match &self.repr {
            SignalRepr::Function(_) => d.field("repr", &"function"),
            SignalRepr::Sampled(s) => d.field("samples", &s.len()),
        };
        d.finish()
    }
}

impl PeriodicScalarSignal {
    pub fn from_fn<F>(period: f64, f: F) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        check_period(period)?;
        Ok(Self {
            period,
            repr: SignalRepr::Function(Arc::new(f)),
        })
    }

    pub fn constant(period: f64, value: f64) -> Result<Self> {
        Self::from_fn(period, move |_| value)
    }

    /// Wrap samples taken at `t_j = j T / N` (the endpoint `t = T` must not
    /// be repeated).
    pub fn from_samples(period: f64, samples: Vec<f64>) -> Result<Self> {
        check_period(period)?;
        if samples.is_empty() {
            return Err(invalid("a sampled signal needs at least one sample"));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("signal sample".into()));
        }
        Ok(Self {
            period,
            repr: SignalRepr::Sampled(Arc::new(samples)),
        })
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn eval(&self, t: f64) -> f64 {
        match &self.repr {
            SignalRepr::Function(f) => f(t),
            SignalRepr::Sampled(s) => periodic_interp(s, t / self.period),
        }
    }

    /// `(1/T) ∫₀ᵀ q`.
    pub fn mean(&self) -> f64 {
        match &self.repr {
            SignalRepr::Function(f) => simpson(|t| f(t), 0.0, self.period, 4096) / self.period,
            SignalRepr::Sampled(s) => periodic_mean(s),
        }
    }

    /// Stored samples of a sampled signal.
    pub fn samples(&self) -> Option<&[f64]> {
        match &self.repr {
            SignalRepr::Sampled(s) => Some(s.as_slice()),
            SignalRepr::Function(_) => None,
        }
    }
}

fn check_period(period: f64) -> Result<()> {
    if period.is_finite() && period > 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("period must be positive, got {period}")))
    }
}

/// Periodic cubic interpolation of `samples` at phase `s` (in periods).
fn periodic_interp(samples: &[f64], s: f64) -> f64 {
    let n = samples.len();
    if n < 4 {
        // too few points for a cubic: fall back to linear
        let u = s.rem_euclid(1.0) * n as f64;
        let i = (u.floor() as usize).min(n - 1);
        let w = u - i as f64;
        return (1.0 - w) * samples[i] + w * samples[(i + 1) % n];
    }
    let u = s.rem_euclid(1.0) * n as f64;
    let i = (u.floor() as usize).min(n - 1);
    let w = u - i as f64;
    let at = |k: isize| samples[(i as isize + k).rem_euclid(n as isize) as usize];
    let (p0, p1, p2, p3) = (at(-1), at(0), at(1), at(2));
    // Lagrange weights on nodes -1, 0, 1, 2
    let l0 = -w * (w - 1.0) * (w - 2.0) / 6.0;
    let l1 = (w + 1.0) * (w - 1.0) * (w - 2.0) / 2.0;
    let l2 = -(w + 1.0) * w * (w - 2.0) / 2.0;
    let l3 = (w + 1.0) * w * (w - 1.0) / 6.0;
    l0 * p0 + l1 * p1 + l2 * p2 + l3 * p3
}

/// One period of the positive periodic solution.
#[derive(Debug, Clone, PartialEq)]
pub struct RhoOrbit {
    pub period: f64,
    /// `(t, ρ)` at `t_j = j T / N` for `j = 0..=N`.
    pub samples: Vec<(f64, f64)>,
    /// `ρ̄ = (1/T) ∫₀ᵀ ρ`.
    pub mean: f64,
}

impl RhoOrbit {
    fn from_values(period: f64, values: Vec<f64>) -> Self {
        let n = values.len() - 1;
        let samples: Vec<(f64, f64)> = values
            .iter()
            .enumerate()
            .map(|(j, &r)| (period * j as f64 / n as f64, r))
            .collect();
        let mean = periodic_mean(&values[..n]);
        Self {
            period,
            samples,
            mean,
        }
    }

    /// Interpolated value at any `t` (periodically wrapped).
    pub fn value_at(&self, t: f64) -> f64 {
        let n = self.samples.len() - 1;
        let vals: Vec<f64> = self.samples[..n].iter().map(|s| s.1).collect();
        periodic_interp(&vals, t / self.period)
    }

    /// The orbit as a sampled periodic signal.
    pub fn as_signal(&self) -> PeriodicScalarSignal {
        let n = self.samples.len() - 1;
        let vals = self.samples[..n].iter().map(|s| s.1).collect();
        PeriodicScalarSignal::from_samples(self.period, vals).expect("orbit samples are finite")
    }
}

/// Closed-form periodic orbit sampled at [`CLOSED_FORM_NODES`] per period.
pub fn periodic_rho_closed_form(q: &PeriodicScalarSignal) -> Result<RhoOrbit> {
    periodic_rho_closed_form_with(q, CLOSED_FORM_NODES)
}

/// Closed-form periodic orbit with `nodes` samples per period.
///
/// The antiderivative `Φ` of `q` is tabulated once on `[0, 2T]`; both the
/// inner and the outer exponential integrals are then read off cumulative
/// fourth-order quadratures.
pub fn periodic_rho_closed_form_with(q: &PeriodicScalarSignal, nodes: usize) -> Result<RhoOrbit> {
    if nodes < 8 {
        return Err(invalid(format!(
            "need at least 8 nodes per period, got {nodes}"
        )));
    }
    let period = q.period();
    let h = period / nodes as f64;
    let qs: Vec<f64> = (0..=2 * nodes).map(|j| q.eval(j as f64 * h)).collect();
    if qs.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("forcing signal".into()));
    }
    let phi = cumulative_simpson(&qs, h);
    let total = phi[nodes];
    if !(total > 0.0) {
        return Err(Error::Extinction(format!(
            "no positive periodic orbit: ∫₀ᵀ q = {total} is not positive"
        )));
    }
    if qs.iter().all(|v| *v == qs[0]) {
        // constant forcing: ρ̃ ≡ q, no quadrature needed
        return Ok(RhoOrbit::from_values(period, vec![qs[0]; nodes + 1]));
    }
    let phi_max = phi.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = phi.iter().map(|p| (p - phi_max).exp()).collect();
    let big_w = cumulative_simpson(&w, h);
    let growth = total.exp_m1();
    let values: Vec<f64> = (0..=nodes)
        .map(|j| growth * (phi[j] - phi_max).exp() / (big_w[j + nodes] - big_w[j]))
        .collect();
    if values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::NonFinite("closed-form orbit lost positivity".into()));
    }
    Ok(RhoOrbit::from_values(period, values))
}

/// Integrate `dρ/dt = ρ (q(t) − ρ)` with classical RK4.
///
/// Returns `(t, ρ)` at `t_k = k dt` up to `t_end` (the last step is shortened
/// to land on `t_end`). A step that would lose positivity is retried as two
/// half steps, recursively.
pub fn integrate_logistic(
    q: &PeriodicScalarSignal,
    rho0: f64,
    t_end: f64,
    dt: f64,
) -> Result<Vec<(f64, f64)>> {
    if !(rho0.is_finite() && rho0 > 0.0) {
        return Err(invalid(format!(
            "initial population must be positive, got {rho0}"
        )));
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(invalid(format!("time step must be positive, got {dt}")));
    }
    if !(t_end.is_finite() && t_end >= 0.0) {
        return Err(invalid(format!(
            "end time must be nonnegative, got {t_end}"
        )));
    }
    let steps = (t_end / dt - 1e-9).ceil().max(0.0) as usize;
    let mut out = Vec::with_capacity(steps + 1);
    let mut t = 0.0;
    let mut rho = rho0;
    out.push((t, rho));
    for k in 1..=steps {
        let t_next = (k as f64 * dt).min(t_end);
        rho = positive_step(q, t, rho, t_next - t, 0)?;
        t = t_next;
        out.push((t, rho));
    }
    Ok(out)
}

fn rk4(q: &PeriodicScalarSignal, t: f64, rho: f64, h: f64) -> f64 {
    let f = |t: f64, r: f64| r * (q.eval(t) - r);
    let k1 = f(t, rho);
    let k2 = f(t + 0.5 * h, rho + 0.5 * h * k1);
    let k3 = f(t + 0.5 * h, rho + 0.5 * h * k2);
    let k4 = f(t + h, rho + h * k3);
    rho + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
}

fn positive_step(q: &PeriodicScalarSignal, t: f64, rho: f64, h: f64, depth: u32) -> Result<f64> {
    let next = rk4(q, t, rho, h);
    if next.is_finite() && next > 0.0 {
        return Ok(next);
    }
    if depth >= 40 {
        return Err(Error::NonFinite(format!(
            "logistic step at t = {t} cannot keep ρ positive"
        )));
    }
    let mid = positive_step(q, t, rho, 0.5 * h, depth + 1)?;
    positive_step(q, t + 0.5 * h, mid, 0.5 * h, depth + 1)
}

/// `(1/T) ∫₀ᵀ ρ` of an orbit.
pub fn orbit_mean(orbit: &RhoOrbit) -> f64 {
    let n = orbit.samples.len() - 1;
    periodic_mean(&orbit.samples[..n].iter().map(|s| s.1).collect::<Vec<_>>())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn example1_forcing() -> PeriodicScalarSignal {
        // a(t, x_m = 0) for r = g = c = 1, b = 2π
        PeriodicScalarSignal::from_fn(1.0, |t| 1.0 - (2.0 * PI * t).sin().powi(2)).unwrap()
    }

    #[test]
    fn constant_forcing_collapses() {
        for r in [0.3, 1.0, 4.0] {
            let orbit =
                periodic_rho_closed_form(&PeriodicScalarSignal::constant(2.0, r).unwrap()).unwrap();
            for (_, v) in &orbit.samples {
                assert!((v - r).abs() < 1e-12, "{v} vs {r}");
            }
            assert!((orbit_mean(&orbit) - r).abs() < 1e-12);
        }
    }

    #[test]
    fn negative_average_is_extinction() {
        let q = PeriodicScalarSignal::from_fn(1.0, |t| -1.0 + 0.5 * (2.0 * PI * t).cos()).unwrap();
        assert!(matches!(
            periodic_rho_closed_form(&q),
            Err(Error::Extinction(_))
        ));
    }

    #[test]
    fn closed_form_solves_the_ode() {
        let q = example1_forcing();
        let orbit = periodic_rho_closed_form(&q).unwrap();
        let n = orbit.samples.len() - 1;
        let h = orbit.period / n as f64;
        let mut worst: f64 = 0.0;
        for j in 0..n {
            let (t, r) = orbit.samples[j];
            let d1 = orbit.value_at(t + h) - orbit.value_at(t - h);
            let d2 = orbit.value_at(t + 2.0 * h) - orbit.value_at(t - 2.0 * h);
            let deriv = (8.0 * d1 - d2) / (12.0 * h);
            worst = worst.max((deriv - r * (q.eval(t) - r)).abs());
        }
        assert!(worst < 1e-6, "{worst}");
        assert!((orbit.samples[0].1 - orbit.samples[n].1).abs() < 1e-10);
        assert!(orbit.samples.iter().all(|s| s.1 > 0.0));
        // ∫ρ̃ = ∫q over a period since d ln ρ̃ / dt = q − ρ̃ integrates to zero
        assert!((orbit.mean - 0.5).abs() < 1e-10);
    }

    #[test]
    fn logistic_fixed_point_and_relaxation() {
        let r = 2.0;
        let q = PeriodicScalarSignal::constant(1.0, r).unwrap();
        let traj = integrate_logistic(&q, r, 5.0, 0.01).unwrap();
        assert!(traj.iter().all(|(_, v)| (v - r).abs() < 1e-14));

        let traj = integrate_logistic(&q, r / 2.0, 10.0 / r, 0.001).unwrap();
        let exact = |t: f64| r / (1.0 + (r / (r / 2.0) - 1.0) * (-r * t).exp());
        let (t_last, v_last) = *traj.last().unwrap();
        assert!((t_last - 5.0).abs() < 1e-12);
        assert!((v_last - r).abs() < 1e-3 * r);
        for (t, v) in &traj {
            assert!((v - exact(*t)).abs() < 1e-10);
        }
        assert!(traj.windows(2).all(|w| w[1].1 >= w[0].1));
    }

    #[test]
    fn stiff_start_stays_positive() {
        let q = PeriodicScalarSignal::constant(1.0, 1.0).unwrap();
        let traj = integrate_logistic(&q, 500.0, 1.0, 0.5).unwrap();
        assert!(traj.iter().all(|(_, v)| *v > 0.0 && v.is_finite()));
    }

    #[test]
    fn interpolated_signal_is_accurate() {
        let n = 512;
        let samples = (0..n)
            .map(|j| (2.0 * PI * j as f64 / n as f64).sin())
            .collect();
        let sig = PeriodicScalarSignal::from_samples(1.0, samples).unwrap();
        for k in 0..97 {
            let t = k as f64 * 0.0123;
            assert!((sig.eval(t) - (2.0 * PI * t).sin()).abs() < 1e-9);
        }
        assert!(sig.mean().abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_inputs() {
        let q = PeriodicScalarSignal::constant(1.0, 1.0).unwrap();
        assert!(integrate_logistic(&q, 0.0, 1.0, 0.1).is_err());
        assert!(integrate_logistic(&q, 1.0, 1.0, 0.0).is_err());
        assert!(PeriodicScalarSignal::constant(0.0, 1.0).is_err());
    }
}
