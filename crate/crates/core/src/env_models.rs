//! Periodic growth-rate models `a(t, x)` and the numerical checks of the
//! structural hypotheses the rest of the crate relies on.
//!
//! A model is immutable once built. Builtin kinds carry closed forms for the
//! time average `ā(x)`, its maximizer `x_m` and the curvature `ā''(x_m)`;
//! everything else falls back to quadrature over one period.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{invalid, Error, Result};
use crate::quadrature::{bisect, golden_section_max, simpson};

pub type RateFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Default number of Simpson subintervals per period for time averages.
pub const TIME_QUADRATURE_NODES: usize = 256;

/// Nodes used when sampling `ā` to count sign changes of its slope.
const OPTIMUM_SCAN_NODES: usize = 401;

/// Closed-form information available for builtin models.
#[derive(Clone)]
pub struct AnalyticInfo {
    pub mean_rate: ScalarFn,
    pub x_m: f64,
    /// `ā''(x_m)`, negative for a nondegenerate maximum.
    pub curvature: f64,
}

impl fmt::Debug for AnalyticInfo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AnalyticInfo")
            .field("x_m", &self.x_m)
            .field("curvature", &self.curvature)
            .finish_non_exhaustive()
    }
}

/// Selection pressure `g(t) = g0 + Σ_k (c_k cos 2πkt + s_k sin 2πkt)`, period 1.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierPressure {
    pub mean: f64,
    pub cos: Vec<f64>,
    pub sin: Vec<f64>,
}

impl FourierPressure {
    pub fn new(mean: f64, cos: Vec<f64>, sin: Vec<f64>) -> Self {
        Self { mean, cos, sin }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let mut g = self.mean;
        for (k, c) in self.cos.iter().enumerate() {
            g += c * (2.0 * PI * (k + 1) as f64 * t).cos();
        }
        for (k, s) in self.sin.iter().enumerate() {
            g += s * (2.0 * PI * (k + 1) as f64 * t).sin();
        }
        g
    }
}

/// Growth rate sampled on a regular `(t, x)` lattice.
///
/// Rows are time samples `t_j = j T / nt`, `j = 0..nt`, wrapped periodically;
/// columns are trait samples spanning `[x_lo, x_hi]` inclusive. Evaluation is
/// bilinear, and traits outside the table take the nearest edge value.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedRate {
    pub period: f64,
    pub x_lo: f64,
    pub x_hi: f64,
    pub nx: usize,
    pub nt: usize,
    pub values: Vec<f64>,
}

/// Cap on the number of table entries accepted from a file.
pub const MAX_TABLE_ENTRIES: usize = 1 << 24;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct TableParseError {
    pub line: usize,
    pub message: String,
}

impl TabulatedRate {
    /// Parse the plain-text sample format: a header line `T nx nt` followed by
    /// `nt` rows of `nx` values (whitespace separated, `#` starts a comment).
    pub fn parse(text: &str, x_lo: f64, x_hi: f64) -> std::result::Result<Self, TableParseError> {
        let err = |line: usize, message: String| TableParseError { line, message };
        if !(x_lo.is_finite() && x_hi.is_finite() && x_lo < x_hi) {
            return Err(err(
                0,
                format!("trait range [{x_lo}, {x_hi}] is empty or non-finite"),
            ));
        }
        let mut tokens = text.lines().enumerate().flat_map(|(i, line)| {
            let content = line.split('#').next().unwrap_or("");
            content.split_whitespace().map(move |tok| (i + 1, tok))
        });
        let mut next = |what: &str| {
            tokens
                .next()
                .ok_or_else(|| err(0, format!("unexpected end of input while reading {what}")))
        };
        let (line, tok) = next("period")?;
        let period: f64 = tok
            .parse()
            .map_err(|_| err(line, format!("period `{tok}` is not a number")))?;
        if !(period.is_finite() && period > 0.0) {
            return Err(err(line, format!("period must be positive, got {period}")));
        }
        let mut count = |what: &str| -> std::result::Result<usize, TableParseError> {
            let (line, tok) = next(what)?;
            tok.parse::<usize>()
                .map_err(|_| err(line, format!("{what} `{tok}` is not a nonnegative integer")))
        };
        let nx = count("nx")?;
        let nt = count("nt")?;
        if nx < 2 || nt < 1 {
            return Err(err(
                1,
                format!("need nx >= 2 and nt >= 1, got nx = {nx}, nt = {nt}"),
            ));
        }
        let total = nx
            .checked_mul(nt)
            .filter(|&n| n <= MAX_TABLE_ENTRIES)
            .ok_or_else(|| err(1, format!("table of {nx} x {nt} entries is too large")))?;
        let mut values = Vec::with_capacity(total.min(text.len()));
        while values.len() < total {
            let (line, tok) = next("table entry")?;
            let v: f64 = tok
                .parse()
                .map_err(|_| err(line, format!("entry `{tok}` is not a number")))?;
            if !v.is_finite() {
                return Err(err(line, format!("entry `{tok}` is not finite")));
            }
            values.push(v);
        }
        if let Some((line, tok)) = tokens.next() {
            return Err(err(
                line,
                format!("trailing data `{tok}` after {total} entries"),
            ));
        }
        Ok(Self {
            period,
            x_lo,
            x_hi,
            nx,
            nt,
            values,
        })
    }

    pub fn eval(&self, t: f64, x: f64) -> f64 {
        let tau = (t / self.period).rem_euclid(1.0) * self.nt as f64;
        let j0 = (tau.floor() as usize).min(self.nt - 1);
        let wt = tau - j0 as f64;
        let j1 = (j0 + 1) % self.nt;

        let dx = (self.x_hi - self.x_lo) / (self.nx - 1) as f64;
        let s = ((x - self.x_lo) / dx).clamp(0.0, (self.nx - 1) as f64);
        let i0 = (s.floor() as usize).min(self.nx - 2);
        let wx = s - i0 as f64;

        let at = |j: usize, i: usize| self.values[j * self.nx + i];
        let row = |j: usize| (1.0 - wx) * at(j, i0) + wx * at(j, i0 + 1);
        (1.0 - wt) * row(j0) + wt * row(j1)
    }
}

/// Which family a model belongs to.
#[derive(Clone)]
pub enum ModelKind {
    /// `a(t,x) = r − g (x − c sin bt)²`.
    OscillatingOptimum {
        r: f64,
        g: f64,
        c: f64,
        b: f64,
    },
    /// `a(t,x) = r − g(t) x²` with a 1-periodic pressure `g`.
    OscillatingPressure {
        r: f64,
        g_mean: f64,
        pressure: ScalarFn,
    },
    Tabulated(Arc<TabulatedRate>),
    Custom,
}

impl fmt::Debug for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::OscillatingOptimum { r, g, c, b } => f
                .debug_struct("OscillatingOptimum")
                .field("r", r)
                .field("g", g)
                .field("c", c)
                .field("b", b)
                .finish(),
            Self::OscillatingPressure { r, g_mean, .. } => f
                .debug_struct("OscillatingPressure")
                .field("r", r)
                .field("g_mean", g_mean)
                .finish_non_exhaustive(),
            Self::Tabulated(t) => f
                .debug_struct("Tabulated")
                .field("nx", &t.nx)
                .field("nt", &t.nt)
                .finish_non_exhaustive(),
            Self::Custom => f.write_str("Custom"),
        }
    }
}

/// A frozen-in-time rate of the form `r − g (x − center)²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticRate {
    pub r: f64,
    pub g: f64,
    pub center: f64,
}

/// A `T`-periodic growth rate `a(t, x)`.
#[derive(Clone)]
pub struct EnvironmentModel {
    period: f64,
    kind: ModelKind,
    rate: RateFn,
    analytic: Option<AnalyticInfo>,
}

impl fmt::Debug for EnvironmentModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EnvironmentModel")
            .field("period", &self.period)
            .field("kind", &self.kind)
            .field("analytic", &self.analytic)
            .finish_non_exhaustive()
    }
}

/// `a(t,x) = r − g (x − c sin bt)²`, period `2π / b`.
pub fn make_oscillating_optimum(r: f64, g: f64, c: f64, b: f64) -> Result<EnvironmentModel> {
    if !(g.is_finite() && g > 0.0) {
        return Err(invalid(format!(
            "selection strength g must be positive, got {g}"
        )));
    }
    if !(b.is_finite() && b > 0.0) {
        return Err(invalid(format!(
            "angular frequency b must be positive, got {b}"
        )));
    }
    if !(r.is_finite() && c.is_finite() && c >= 0.0) {
        return Err(invalid(format!(
            "need finite r and c >= 0, got r = {r}, c = {c}"
        )));
    }
    Ok(EnvironmentModel {
        period: 2.0 * PI / b,
        kind: ModelKind::OscillatingOptimum { r, g, c, b },
        rate: Arc::new(move |t, x| {
            let y = x - c * (b * t).sin();
            r - g * y * y
        }),
        analytic: Some(AnalyticInfo {
            mean_rate: Arc::new(move |x| r - g * (x * x + 0.5 * c * c)),
            x_m: 0.0,
            curvature: -2.0 * g,
        }),
    })
}

/// `a(t,x) = r − g(t) x²` for a positive 1-periodic pressure `g`.
///
/// Positivity of `g` is checked on a 1024-point sample of one period, and the
/// mean pressure `ḡ` is obtained by Simpson quadrature.
pub fn make_oscillating_pressure<G>(r: f64, g_fn: G) -> Result<EnvironmentModel>
where
    G: Fn(f64) -> f64 + Send + Sync + 'static,
{
    if !r.is_finite() {
        return Err(invalid(format!(
            "maximal growth rate r must be finite, got {r}"
        )));
    }
    for j in 0..1024 {
        let t = j as f64 / 1024.0;
        let g = g_fn(t);
        if !(g.is_finite() && g > 0.0) {
            return Err(invalid(format!(
                "selection pressure must stay positive: g({t}) = {g}"
            )));
        }
    }
    let g_mean = simpson(&g_fn, 0.0, 1.0, 4 * TIME_QUADRATURE_NODES);
    let pressure: ScalarFn = Arc::new(g_fn);
    let p = pressure.clone();
    Ok(EnvironmentModel {
        period: 1.0,
        kind: ModelKind::OscillatingPressure {
            r,
            g_mean,
            pressure,
        },
        rate: Arc::new(move |t, x| r - p(t) * x * x),
        analytic: Some(AnalyticInfo {
            mean_rate: Arc::new(move |x| r - g_mean * x * x),
            x_m: 0.0,
            curvature: -2.0 * g_mean,
        }),
    })
}

impl EnvironmentModel {
    /// Wrap an arbitrary periodic rate. No closed forms are attached.
    pub fn custom<F>(period: f64, rate: F) -> Result<Self>
    where
        F: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        if !(period.is_finite() && period > 0.0) {
            return Err(invalid(format!("period must be positive, got {period}")));
        }
        Ok(Self {
            period,
            kind: ModelKind::Custom,
            rate: Arc::new(rate),
            analytic: None,
        })
    }

    /// A rate that does not depend on `t` or `x`.
    pub fn constant(a0: f64, period: f64) -> Result<Self> {
        Self::custom(period, move |_, _| a0)
    }

    pub fn tabulated(table: TabulatedRate) -> Result<Self> {
        let table = Arc::new(table);
        let tab = table.clone();
        let mut model = Self::custom(table.period, move |t, x| tab.eval(t, x))?;
        model.kind = ModelKind::Tabulated(table);
        Ok(model)
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn kind(&self) -> &ModelKind {
        &self.kind
    }

    pub fn analytic(&self) -> Option<&AnalyticInfo> {
        self.analytic.as_ref()
    }

    #[inline]
    pub fn rate(&self, t: f64, x: f64) -> f64 {
        (self.rate)(t, x)
    }

    /// The model with `delta` added to the rate everywhere.
    pub fn shifted(&self, delta: f64) -> Self {
        match &self.kind {
            ModelKind::OscillatingOptimum { r, g, c, b } => {
                make_oscillating_optimum(r + delta, *g, *c, *b)
                    .expect("parameters already validated")
            }
            ModelKind::OscillatingPressure {
                r,
                g_mean,
                pressure,
            } => {
                let mut m = self.clone();
                let (r, g_mean, p) = (r + delta, *g_mean, pressure.clone());
                m.kind = ModelKind::OscillatingPressure {
                    r,
                    g_mean,
                    pressure: p.clone(),
                };
                m.rate = Arc::new(move |t, x| r - p(t) * x * x);
                m.analytic = Some(AnalyticInfo {
                    mean_rate: Arc::new(move |x| r - g_mean * x * x),
                    x_m: 0.0,
                    curvature: -2.0 * g_mean,
                });
                m
            }
            _ => {
                let inner = self.rate.clone();
                let analytic = self.analytic.clone().map(|info| {
                    let mean = info.mean_rate.clone();
                    AnalyticInfo {
                        mean_rate: Arc::new(move |x| mean(x) + delta),
                        ..info
                    }
                });
                Self {
                    period: self.period,
                    kind: ModelKind::Custom,
                    rate: Arc::new(move |t, x| inner(t, x) + delta),
                    analytic,
                }
            }
        }
    }

    /// The time-independent rate `x ↦ a(tau, x)` viewed as a model of the
    /// given (arbitrary) period.
    pub fn frozen(&self, tau: f64, period: f64) -> Result<Self> {
        let inner = self.rate.clone();
        let mut m = Self::custom(period, move |_, x| inner(tau, x))?;
        if let Some(q) = self.frozen_quadratic(tau) {
            m.analytic = Some(AnalyticInfo {
                mean_rate: Arc::new(move |x| q.r - q.g * (x - q.center).powi(2)),
                x_m: q.center,
                curvature: -2.0 * q.g,
            });
        }
        Ok(m)
    }

    /// For builtin kinds, `a(tau, ·)` written as `r − g (x − center)²`.
    pub fn frozen_quadratic(&self, tau: f64) -> Option<QuadraticRate> {
        match &self.kind {
            ModelKind::OscillatingOptimum { r, g, c, b } => Some(QuadraticRate {
                r: *r,
                g: *g,
                center: c * (b * tau).sin(),
            }),
            ModelKind::OscillatingPressure { r, pressure, .. } => Some(QuadraticRate {
                r: *r,
                g: pressure(tau),
                center: 0.0,
            }),
            _ => None,
        }
    }

    /// `ā(x)` by composite Simpson over one period, ignoring closed forms.
    pub fn quadrature_mean(&self, x: f64, nodes: usize) -> f64 {
        simpson(|t| self.rate(t, x), 0.0, self.period, nodes) / self.period
    }

    /// Sampled `max |a|` over one period and the trait interval.
    pub fn rate_bound(&self, x_lo: f64, x_hi: f64) -> f64 {
        let (nx, nt) = (401, 256);
        let mut d0: f64 = 0.0;
        for j in 0..nt {
            let t = j as f64 * self.period / nt as f64;
            for i in 0..nx {
                let x = x_lo + (x_hi - x_lo) * i as f64 / (nx - 1) as f64;
                d0 = d0.max(self.rate(t, x).abs());
            }
        }
        d0
    }
}

/// `ā(x) = (1/T) ∫₀ᵀ a(t, x) dt`, closed form when available.
pub fn mean_growth(model: &EnvironmentModel, x: f64) -> f64 {
    match &model.analytic {
        Some(info) => (info.mean_rate)(x),
        None => model.quadrature_mean(x, TIME_QUADRATURE_NODES),
    }
}

/// Maximizer of `ā` on `bracket`, required to be the unique one.
///
/// Uniqueness is tested as exactly one `+ → −` sign change of the discrete
/// slope of quadrature-evaluated `ā`; the maximizer is then refined by golden
/// section and polished by bisection on a centered-difference slope.
pub fn locate_optimum(model: &EnvironmentModel, bracket: (f64, f64)) -> Result<f64> {
    let (lo, hi) = bracket;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(invalid(format!("bad bracket [{lo}, {hi}]")));
    }
    let abar = |x: f64| model.quadrature_mean(x, TIME_QUADRATURE_NODES);
    let n = OPTIMUM_SCAN_NODES;
    let h = (hi - lo) / (n - 1) as f64;
    let xs: Vec<f64> = (0..n).map(|i| lo + i as f64 * h).collect();
    let vals: Vec<f64> = xs.iter().map(|&x| abar(x)).collect();
    let scale = vals.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let flat = 1e-13 * scale;

    // signs of the nonzero slopes, with the index of the interval
    let slopes: Vec<(usize, f64)> = vals
        .windows(2)
        .enumerate()
        .filter_map(|(i, w)| {
            let d = w[1] - w[0];
            (d.abs() > flat).then_some((i, d.signum()))
        })
        .collect();
    let changes: Vec<(usize, usize)> = slopes
        .windows(2)
        .filter(|w| w[0].1 != w[1].1)
        .map(|w| (w[0].0, w[1].0))
        .collect();
    let violation = |detail: String| Error::NoUniqueMaximum { lo, hi, detail };
    let (left, right) = match changes.as_slice() {
        [] => {
            return Err(violation(
                "discrete slope of the mean rate never changes sign".into(),
            ))
        }
        [(l, r)] => (*l, *r),
        more => {
            return Err(violation(format!(
                "discrete slope of the mean rate changes sign {} times",
                more.len()
            )))
        }
    };
    let rising = slopes
        .iter()
        .find(|(i, _)| *i == left)
        .map(|s| s.1)
        .unwrap_or(0.0);
    if rising < 0.0 {
        return Err(violation("the only critical point is a minimum".into()));
    }

    let (a, b) = (xs[left], xs[(right + 1).min(n - 1)]);
    let xg = golden_section_max(abar, a, b, 1e-9 * (hi - lo));
    let dh = 1e-5 * (hi - lo).max(1.0);
    let slope = |x: f64| (abar(x + dh) - abar(x - dh)) / (2.0 * dh);
    let w = 1e-6 * (hi - lo);
    let polished = bisect(slope, (xg - w).max(a), (xg + w).min(b), 1e-15)
        .or_else(|| bisect(slope, a, b, 1e-15));
    Ok(polished.unwrap_or(xg))
}

/// Confinement margin: `a(t,x) + λ ≤ −δ` for all `t` and `|x| ≥ R₀`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfinementMargin {
    pub delta: f64,
    pub radius: f64,
}

/// Outcome of sampling the structural hypotheses on a trait interval.
#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisReport {
    /// `max_x |a(0,x) − a(T,x)|` on the sample grid.
    pub periodicity_residual: f64,
    /// Sampled `max |a|`, the bound `d₀`.
    pub rate_bound: f64,
    pub unique_max: bool,
    pub x_m: Option<f64>,
    /// `ā(x_m)`; NaN when no unique maximum was found.
    pub a_m: f64,
    pub confinement: Option<ConfinementMargin>,
    pub notes: Vec<String>,
}

impl HypothesisReport {
    pub fn has_positive_optimum(&self) -> bool {
        self.unique_max && self.a_m > 0.0
    }
}

/// Sample periodicity, boundedness, a unique positive maximum of `ā`, and the
/// confinement margin on `domain`.
///
/// The confinement radius is `R₀ = 1.1 r₀`, where `r₀` is the smallest sampled
/// radius beyond which `max_t (a + λ)` stays negative; `δ` is then the margin
/// realized on `|x| ≥ R₀`.
pub fn check_hypotheses(
    model: &EnvironmentModel,
    domain: (f64, f64),
    lambda_hint: f64,
) -> HypothesisReport {
    let (lo, hi) = domain;
    let (nx, nt) = (401usize, 256usize);
    let period = model.period();
    let xs: Vec<f64> = (0..nx)
        .map(|i| lo + (hi - lo) * i as f64 / (nx - 1) as f64)
        .collect();
    let mut notes = Vec::new();

    let periodicity_residual = xs
        .iter()
        .map(|&x| (model.rate(0.0, x) - model.rate(period, x)).abs())
        .fold(0.0, f64::max);
    let rate_bound = model.rate_bound(lo, hi);

    let (unique_max, x_m, a_m) = match locate_optimum(model, domain) {
        Ok(x) => (true, Some(x), mean_growth(model, x)),
        Err(e) => {
            notes.push(e.to_string());
            (false, None, f64::NAN)
        }
    };
    if unique_max && a_m <= 0.0 {
        notes.push(format!("maximal mean rate {a_m} is not positive"));
    }

    // worst rate over time at each sampled trait
    let sup_t = |x: f64| {
        (0..nt)
            .map(|j| model.rate(j as f64 * period / nt as f64, x))
            .fold(f64::NEG_INFINITY, f64::max)
            + lambda_hint
    };
    let mut by_radius: Vec<(f64, f64)> = xs.iter().map(|&x| (x.abs(), sup_t(x))).collect();
    by_radius.sort_by(|a, b| a.0.total_cmp(&b.0));
    // suffix maximum over radii
    let mut worst_beyond = vec![f64::NEG_INFINITY; by_radius.len()];
    let mut acc = f64::NEG_INFINITY;
    for k in (0..by_radius.len()).rev() {
        acc = acc.max(by_radius[k].1);
        worst_beyond[k] = acc;
    }
    let r0 = (0..by_radius.len())
        .find(|&k| worst_beyond[k] < 0.0)
        .map(|k| by_radius[k].0);
    let confinement = r0.and_then(|r0| {
        let radius = 1.1 * r0;
        let at_radius = [radius, -radius]
            .iter()
            .filter(|x| (lo..=hi).contains(*x))
            .map(|&x| sup_t(x))
            .fold(f64::NEG_INFINITY, f64::max);
        let beyond = by_radius
            .iter()
            .filter(|(r, _)| *r >= radius)
            .map(|(_, v)| *v)
            .fold(f64::NEG_INFINITY, f64::max);
        let worst = at_radius.max(beyond);
        (worst < 0.0 && worst.is_finite()).then_some(ConfinementMargin {
            delta: -worst,
            radius,
        })
    });
    if confinement.is_none() {
        notes.push(format!(
            "a + λ does not become negative towards the edges of [{lo}, {hi}]"
        ));
    }

    HypothesisReport {
        periodicity_residual,
        rate_bound,
        unique_max,
        x_m,
        a_m,
        confinement,
        notes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example1() -> EnvironmentModel {
        make_oscillating_optimum(1.0, 1.0, 1.0, 2.0 * PI).unwrap()
    }

    #[test]
    fn oscillating_optimum_closed_forms() {
        let m = example1();
        assert!((m.period() - 1.0).abs() < 1e-15);
        for x in [-2.0, -0.3, 0.0, 1.7] {
            assert!((mean_growth(&m, x) - (1.0 - (x * x + 0.5))).abs() < 1e-15);
        }
        // a(1/4, 1) = 1 − (1 − sin(π/2))² = 1
        assert!((m.rate(0.25, 1.0) - 1.0).abs() < 1e-15);
        assert!((mean_growth(&m, 0.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn zero_amplitude_is_time_independent() {
        let m = make_oscillating_optimum(1.0, 1.0, 0.0, 2.0 * PI).unwrap();
        for t in [0.0, 0.13, 0.5, 0.77] {
            for x in [-1.0, 0.2, 2.0] {
                assert_eq!(m.rate(t, x), 1.0 - x * x);
            }
        }
    }

    #[test]
    fn rejects_nonpositive_parameters() {
        assert!(make_oscillating_optimum(1.0, 0.0, 1.0, 1.0).is_err());
        assert!(make_oscillating_optimum(1.0, 1.0, 1.0, -1.0).is_err());
        assert!(make_oscillating_pressure(1.0, |t| (2.0 * PI * t).cos()).is_err());
    }

    #[test]
    fn oscillating_pressure_mean() {
        let m = make_oscillating_pressure(1.0, |t| 2.0 + 1.8 * (2.0 * PI * t).cos()).unwrap();
        match m.kind() {
            ModelKind::OscillatingPressure {
                g_mean, pressure, ..
            } => {
                assert!((g_mean - 2.0).abs() < 1e-12);
                assert!((pressure(0.5) - 0.2).abs() < 1e-12);
            }
            other => panic!("unexpected kind {other:?}"),
        }
        assert!((mean_growth(&m, 0.5) - (1.0 - 2.0 * 0.25)).abs() < 1e-12);
        let flat = make_oscillating_pressure(1.0, |_| 2.0).unwrap();
        assert_eq!(flat.rate(0.3, 0.5), 1.0 - 2.0 * 0.25);
    }

    #[test]
    fn quadrature_mean_matches_closed_form() {
        let models = [
            example1(),
            make_oscillating_optimum(0.7, 2.5, 0.4, 3.0).unwrap(),
            make_oscillating_pressure(1.0, |t| 2.0 + 1.8 * (2.0 * PI * t).cos()).unwrap(),
        ];
        for m in &models {
            for i in 0..=80 {
                let x = -4.0 + 0.1 * i as f64;
                let q = m.quadrature_mean(x, TIME_QUADRATURE_NODES);
                assert!((q - mean_growth(m, x)).abs() < 1e-10, "x = {x}");
            }
        }
    }

    #[test]
    fn builtin_models_are_periodic() {
        for m in [
            example1(),
            make_oscillating_optimum(1.0, 1.0, 0.5, 3.0).unwrap(),
        ] {
            let worst = (0..=100)
                .map(|i| -5.0 + 0.1 * i as f64)
                .map(|x| (m.rate(0.0, x) - m.rate(m.period(), x)).abs())
                .fold(0.0, f64::max);
            assert!(worst < 1e-12, "{worst}");
        }
    }

    #[test]
    fn optimum_of_builtins_is_origin() {
        let x = locate_optimum(&example1(), (-3.0, 2.5)).unwrap();
        assert!(x.abs() < 1e-8, "{x}");
        let p = make_oscillating_pressure(1.0, |t| 2.0 + 1.8 * (2.0 * PI * t).cos()).unwrap();
        let x = locate_optimum(&p, (-2.0, 4.0)).unwrap();
        assert!(x.abs() < 1e-8, "{x}");
    }

    #[test]
    fn optimum_rejects_flat_and_bimodal() {
        let flat = EnvironmentModel::constant(1.0, 1.0).unwrap();
        assert!(matches!(
            locate_optimum(&flat, (-1.0, 1.0)),
            Err(Error::NoUniqueMaximum { .. })
        ));
        let twin = EnvironmentModel::custom(1.0, |_, x| -(x * x - 1.0).powi(2)).unwrap();
        assert!(matches!(
            locate_optimum(&twin, (-2.0, 2.0)),
            Err(Error::NoUniqueMaximum { .. })
        ));
    }

    #[test]
    fn optimum_of_shifted_custom_model() {
        let m = EnvironmentModel::custom(2.0, |t, x| {
            1.0 - (x - 0.37).powi(2) + 0.3 * (PI * t).sin() * x
        })
        .unwrap();
        // ā(x) = 1 − (x − 0.37)² since the sine averages out
        let x = locate_optimum(&m, (-3.0, 3.0)).unwrap();
        assert!((x - 0.37).abs() < 1e-8, "{x}");
        let y = locate_optimum(&m.shifted(-5.0), (-3.0, 3.0)).unwrap();
        assert!((x - y).abs() < 1e-9);
    }

    #[test]
    fn hypotheses_for_example1() {
        let rep = check_hypotheses(&example1(), (-5.0, 5.0), 0.0);
        assert!(rep.has_positive_optimum());
        assert!((rep.a_m - 0.5).abs() < 1e-10);
        assert!(rep.periodicity_residual < 1e-12);
        let conf = rep.confinement.expect("confining");
        assert!((conf.radius - 2.2).abs() < 0.05, "{conf:?}");
        assert!(conf.delta > 0.0);
        // the margin must actually hold beyond the radius
        for i in 0..=400 {
            let x = -5.0 + 0.025 * i as f64;
            if x.abs() >= conf.radius {
                for j in 0..64 {
                    assert!(example1().rate(j as f64 / 64.0, x) <= -conf.delta + 1e-12);
                }
            }
        }
    }

    #[test]
    fn flat_rate_has_no_unique_maximum() {
        let rep = check_hypotheses(
            &EnvironmentModel::constant(1.0, 1.0).unwrap(),
            (-1.0, 1.0),
            0.0,
        );
        assert!(!rep.unique_max);
        assert!(rep.confinement.is_none());
        assert!(!rep.notes.is_empty());
    }

    #[test]
    fn hypotheses_constant_pressure_pass() {
        let m = make_oscillating_pressure(1.0, |_| 2.0).unwrap();
        let rep = check_hypotheses(&m, (-5.0, 5.0), 0.0);
        assert!(rep.has_positive_optimum());
        assert!(rep.confinement.is_some());
        assert_eq!(rep.rate_bound, 49.0);
    }

    #[test]
    fn tabulated_roundtrip_and_wrap() {
        let text = "# a(t,x) on a 2 x 3 lattice\n2.0 3 2\n0 1 2\n4 5 6\n";
        let tab = TabulatedRate::parse(text, -1.0, 1.0).unwrap();
        assert_eq!((tab.nx, tab.nt), (3, 2));
        assert_eq!(tab.eval(0.0, 0.0), 1.0);
        assert_eq!(tab.eval(1.0, -1.0), 4.0);
        // halfway between the last row and the wrapped first row
        assert!((tab.eval(1.5, 1.0) - 4.0).abs() < 1e-12);
        assert_eq!(tab.eval(2.0, 0.5), tab.eval(0.0, 0.5));
        assert_eq!(tab.eval(0.0, 7.0), 2.0);
        let model = EnvironmentModel::tabulated(tab).unwrap();
        assert_eq!(model.period(), 2.0);
    }

    #[test]
    fn tabulated_parse_errors_carry_lines() {
        let e = TabulatedRate::parse("1.0 2 1\n0.0 nope\n", 0.0, 1.0).unwrap_err();
        assert_eq!(e.line, 2);
        assert!(TabulatedRate::parse("1.0 2 2\n0 0 0\n", 0.0, 1.0).is_err());
        assert!(TabulatedRate::parse("1.0 2 1\n0 0 9\n", 0.0, 1.0).is_err());
        assert!(TabulatedRate::parse("-1 2 1\n0 0\n", 0.0, 1.0).is_err());
        assert!(TabulatedRate::parse("1 99999999 99999999\n", 0.0, 1.0).is_err());
    }
}
