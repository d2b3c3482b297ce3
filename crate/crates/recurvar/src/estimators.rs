//! Mean-function estimators, influence functions, and variance machinery.
//!
//! Three estimators of μ(s) = E N(s) live here, one per observation scheme:
//!
//! * **uncensored** — the plain average of fully observed paths;
//! * **IPCW, observed censoring** — μ̂(s) = Σ_{u ≤ s} Δν̂(u)/K̂(u) with the
//!   empirical censoring survivor K̂(u) = n^{−1} Σ 1{C_i ≥ u};
//! * **IPCW, censored censoring** — the same reweighting with K̂ the
//!   product integral of the censoring hazard Λ̂(u) = ΔĜ°₁(u)/K̂°(u), the
//!   Kaplan–Meier-type construction needed when a terminal event cuts the
//!   censoring times off.
//!
//! Each estimator also produces its per-subject influence values
//! μ'_{F_n}(δ_{X_i} − F_n; s) — the plug-in of the functional derivative at
//! the empirical measure — whose squared average is the plug-in variance.
//! The derivative is linear and Σ_i (δ_{X_i} − F_n) = 0, so the influence
//! columns sum to zero; the implementations preserve this identity up to
//! rounding, and the tests hold them to it.
//!
//! For simulation work the module carries the truth side as well:
//! [`TruthSpec`] describes the homogeneous-Poisson / exponential-censoring
//! family with closed-form μ, K, Λ and terminal-event moments,
//! [`influence_at_truth`] evaluates the influence expressions at the true
//! nuisance functions from latent data, and [`asymptotic_variance_oracle`]
//! computes the closed-form asymptotic variances by adaptive quadrature —
//! including the third-term penalty that makes the censored-censoring
//! estimator *more* efficient than the one using complete censoring times.

use thiserror::Error;

use crate::process::{CountingPath, DataDesign, DataError, Design, FollowUp, Sample};
use crate::stepfn::StepFunction;

/// Which estimator a curve came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorKind {
    Uncensored,
    IpcwObserved,
    IpcwCensored,
}

/// Errors from estimation and the truth-side oracles.
#[derive(Debug, Error)]
pub enum EstimateError {
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("estimator requires {expected:?}-design data")]
    WrongDesign { expected: DataDesign },
    #[error("horizon must be finite and positive (got {0})")]
    BadHorizon(f64),
    #[error("grid point {0} is not finite or lies outside [0, horizon]")]
    BadGrid(f64),
    #[error(
        "risk set exhausted: K-hat = 0 at time {time} — insufficient follow-up before the horizon"
    )]
    RiskSetExhausted { time: f64 },
    #[error("invalid truth specification: {0}")]
    InvalidTruth(String),
    #[error("unsupported truth family: {0}")]
    UnsupportedTruth(&'static str),
}

// ---------------------------------------------------------------------------
// Truth specifications
// ---------------------------------------------------------------------------

/// Binary covariate mixture: Z = 1 with probability `prob_z1`, multiplying
/// the event rate by `rate_multiplier`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovariateMix {
    pub prob_z1: f64,
    pub rate_multiplier: f64,
}

/// The parametric truth behind simulated scenarios: homogeneous Poisson
/// events at rate λ (per covariate group), exponential censoring C and
/// terminal event T, all independent, observed on [0, τ].
///
/// Everything the studies need is in closed form: μ(s) = λ̄ E(s ∧ T), the
/// survivors K(u) = e^{−cu} and P(T > u) = e^{−ρu}, the per-group means,
/// and the moments of the stopped increments that enter the variance
/// expressions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruthSpec {
    /// Event rate λ for Z = 0 (and for everyone without a mixture).
    pub event_rate: f64,
    /// Exponential censoring rate; 0 means no censoring (C = ∞).
    pub censor_rate: f64,
    /// Exponential terminal-event rate ρ; 0 means no terminal event.
    pub terminal_rate: f64,
    /// End of observation τ.
    pub horizon: f64,
    /// Optional binary covariate mixture.
    pub covariate_mix: Option<CovariateMix>,
}

impl TruthSpec {
    pub fn validate(&self) -> Result<(), EstimateError> {
        let bad = |msg: String| Err(EstimateError::InvalidTruth(msg));
        if self.event_rate <= 0.0 || !self.event_rate.is_finite() {
            return bad(format!("event rate must be positive (got {})", self.event_rate));
        }
        if self.censor_rate < 0.0 || !self.censor_rate.is_finite() {
            return bad(format!("censor rate must be nonnegative (got {})", self.censor_rate));
        }
        if self.terminal_rate < 0.0 || !self.terminal_rate.is_finite() {
            return bad(format!("terminal rate must be nonnegative (got {})", self.terminal_rate));
        }
        if self.horizon <= 0.0 || !self.horizon.is_finite() {
            return bad(format!("horizon must be positive (got {})", self.horizon));
        }
        if let Some(mix) = self.covariate_mix {
            if !(0.0..=1.0).contains(&mix.prob_z1) {
                return bad(format!("z probability must lie in [0, 1] (got {})", mix.prob_z1));
            }
            if mix.rate_multiplier <= 0.0 || !mix.rate_multiplier.is_finite() {
                return bad(format!(
                    "rate multiplier must be positive (got {})",
                    mix.rate_multiplier
                ));
            }
        }
        Ok(())
    }

    /// Event rate for a subject with the given covariate value.
    pub fn rate_for(&self, z1: bool) -> f64 {
        match self.covariate_mix {
            Some(mix) if z1 => self.event_rate * mix.rate_multiplier,
            _ => self.event_rate,
        }
    }

    /// The marginal event rate λ̄ = E(rate given Z).
    pub fn mixed_rate(&self) -> f64 {
        match self.covariate_mix {
            Some(mix) => {
                self.event_rate * (1.0 - mix.prob_z1 + mix.prob_z1 * mix.rate_multiplier)
            }
            None => self.event_rate,
        }
    }

    /// E(s ∧ T) = (1 − e^{−ρs})/ρ, with the ρ = 0 limit s.
    fn expected_stopped_time(&self, s: f64) -> f64 {
        let rho = self.terminal_rate;
        if rho == 0.0 {
            s
        } else {
            (-(-rho * s).exp_m1()) / rho
        }
    }

    /// μ(s) = λ̄ E(s ∧ T).
    pub fn mean(&self, s: f64) -> f64 {
        self.mixed_rate() * self.expected_stopped_time(s)
    }

    /// E(N(s) | Z = z) = λ_z E(s ∧ T).
    pub fn conditional_mean(&self, s: f64, z1: bool) -> f64 {
        self.rate_for(z1) * self.expected_stopped_time(s)
    }

    /// K(u) = P(C ≥ u) = e^{−cu}.
    pub fn censor_survivor(&self, u: f64) -> f64 {
        (-self.censor_rate * u).exp()
    }

    /// P(T > u) = e^{−ρu}.
    pub fn terminal_survivor(&self, u: f64) -> f64 {
        (-self.terminal_rate * u).exp()
    }

    /// E min(N(s), cap) for the pure Poisson family: the truth of the
    /// capped (bounded) process used by the almost-sure study.
    pub fn capped_mean(&self, s: f64, cap: usize) -> Result<f64, EstimateError> {
        if self.censor_rate != 0.0 || self.terminal_rate != 0.0 || self.covariate_mix.is_some() {
            return Err(EstimateError::UnsupportedTruth(
                "capped mean requires the pure Poisson family (no censoring, terminal event, \
                 or covariate mixture)",
            ));
        }
        let m = self.event_rate * s;
        // E min(N, cap) = cap − Σ_{j<cap} (cap − j) P(N = j)
        let mut pmf = (-m).exp();
        let mut shortfall = 0.0;
        for j in 0..cap {
            shortfall += (cap - j) as f64 * pmf;
            pmf *= m / (j + 1) as f64;
        }
        Ok(cap as f64 - shortfall)
    }

    /// Var N(s) for the stopped process: N(s) | T ~ Poisson(λ̄ (s ∧ T)).
    fn var_n(&self, s: f64) -> f64 {
        let lam = self.mixed_rate();
        let rho = self.terminal_rate;
        if rho == 0.0 {
            return lam * s;
        }
        let e1 = self.expected_stopped_time(s);
        // E (s ∧ T)^2 = 2(1 − e^{−ρs}(1 + ρs))/ρ²
        let e2 = 2.0 * (1.0 - (-rho * s).exp() * (1.0 + rho * s)) / (rho * rho);
        lam * e1 + lam * lam * (e2 - e1 * e1)
    }

    /// Var(N(s) − N(u)) for u ≤ s: the increment is Poisson(λ̄ L) given T,
    /// with L = (T ∧ s − u)⁺.
    fn var_increment(&self, u: f64, s: f64) -> f64 {
        let lam = self.mixed_rate();
        let rho = self.terminal_rate;
        let d = s - u;
        if rho == 0.0 {
            return lam * d;
        }
        let e1 = ((-rho * u).exp() - (-rho * s).exp()) / rho;
        let e2 = 2.0 * (-rho * u).exp() * (1.0 - (-rho * d).exp() * (1.0 + rho * d)) / (rho * rho);
        lam * e1 + lam * lam * (e2 - e1 * e1)
    }
}

// ---------------------------------------------------------------------------
// EstimateCurve
// ---------------------------------------------------------------------------

/// An estimator's full output: the curve, its censoring components, and the
/// per-subject influence values on a grid.
///
/// `k_hat` stores the left-continuous survivor K̂ through its jumps; the
/// right-continuous step function held internally satisfies
/// K̂(s) = its left limit at s, which is what [`k_at`](Self::k_at) returns.
#[derive(Debug, Clone)]
pub struct EstimateCurve {
    kind: EstimatorKind,
    horizon: f64,
    n: usize,
    mu_hat: StepFunction,
    k_hat: StepFunction,
    lambda_hat: Option<StepFunction>,
    grid: Vec<f64>,
    variance: Vec<f64>,
    influence: Vec<Vec<f64>>,
}

impl EstimateCurve {
    pub fn kind(&self) -> EstimatorKind {
        self.kind
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Number of subjects behind the estimate.
    pub fn n(&self) -> usize {
        self.n
    }

    /// μ̂ as a step function on [0, horizon].
    pub fn mu_hat(&self) -> &StepFunction {
        &self.mu_hat
    }

    /// μ̂(s).
    pub fn mu_at(&self, s: f64) -> f64 {
        self.mu_hat.value(s)
    }

    /// K̂(s), the left-continuous censoring survivor actually used as the
    /// weight at time s.
    pub fn k_at(&self, s: f64) -> f64 {
        self.k_hat.left_limit(s)
    }

    /// Λ̂, present for the censored-censoring estimator only.
    pub fn lambda_hat(&self) -> Option<&StepFunction> {
        self.lambda_hat.as_ref()
    }

    /// Evaluation grid: by default all jump times of μ̂ in (0, horizon]
    /// plus the horizon.
    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    /// Plug-in variance n^{−1} Σ_i influence(i, s)² per grid point — an
    /// estimate of the asymptotic variance of √n(μ̂(s) − μ(s)).
    pub fn variance(&self) -> &[f64] {
        &self.variance
    }

    /// The n × |grid| influence matrix, subject-major.
    pub fn influence(&self) -> &[Vec<f64>] {
        &self.influence
    }

    /// Standard error of μ̂ at grid index `k`: √(variance[k]/n).
    pub fn se(&self, k: usize) -> f64 {
        (self.variance[k] / self.n as f64).sqrt()
    }

    fn finish(
        kind: EstimatorKind,
        horizon: f64,
        mu_hat: StepFunction,
        k_hat: StepFunction,
        lambda_hat: Option<StepFunction>,
        grid: Vec<f64>,
        influence: Vec<Vec<f64>>,
    ) -> Self {
        let n = influence.len();
        let variance = (0..grid.len())
            .map(|k| influence.iter().map(|row| row[k] * row[k]).sum::<f64>() / n as f64)
            .collect();
        Self { kind, horizon, n, mu_hat, k_hat, lambda_hat, grid, variance, influence }
    }
}

fn check_horizon(horizon: f64) -> Result<(), EstimateError> {
    if !horizon.is_finite() || horizon <= 0.0 {
        return Err(EstimateError::BadHorizon(horizon));
    }
    Ok(())
}

/// Default grid (μ̂ jumps in (0, horizon] plus the horizon) or a validated,
/// sorted, deduplicated user grid.
fn resolve_grid(
    mu_hat: &StepFunction,
    horizon: f64,
    user: Option<&[f64]>,
) -> Result<Vec<f64>, EstimateError> {
    match user {
        Some(points) => {
            let mut grid: Vec<f64> = points.to_vec();
            for &s in &grid {
                if !s.is_finite() || s < 0.0 || s > horizon {
                    return Err(EstimateError::BadGrid(s));
                }
            }
            grid.sort_unstable_by(f64::total_cmp);
            grid.dedup();
            if grid.is_empty() {
                return Err(EstimateError::BadGrid(f64::NAN));
            }
            Ok(grid)
        }
        None => {
            let mut grid: Vec<f64> = mu_hat.times().to_vec();
            if grid.last() != Some(&horizon) {
                grid.push(horizon);
            }
            Ok(grid)
        }
    }
}

/// Run-length encodes presorted times into distinct times and counts.
fn distinct_counts(sorted: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut times: Vec<f64> = Vec::new();
    let mut counts: Vec<f64> = Vec::new();
    for &t in sorted {
        if times.last() == Some(&t) {
            *counts.last_mut().expect("count for last time") += 1.0;
        } else {
            times.push(t);
            counts.push(1.0);
        }
    }
    (times, counts)
}

fn pooled_event_times(sample: &Sample, horizon: f64, skip: Option<usize>) -> Vec<f64> {
    let mut all: Vec<f64> = Vec::new();
    for (i, s) in sample.subjects().iter().enumerate() {
        if skip == Some(i) {
            continue;
        }
        let cut = s.path().times().partition_point(|&t| t <= horizon);
        all.extend_from_slice(&s.path().times()[..cut]);
    }
    all.sort_unstable_by(f64::total_cmp);
    all
}

// ---------------------------------------------------------------------------
// Example 1: uncensored average
// ---------------------------------------------------------------------------

/// The plain average of fully observed paths; influence(i, s) = N_i(s) − μ̂(s).
pub fn mean_uncensored(
    paths: &[CountingPath],
    horizon: f64,
    grid: Option<&[f64]>,
) -> Result<EstimateCurve, EstimateError> {
    check_horizon(horizon)?;
    if paths.is_empty() {
        return Err(EstimateError::Data(DataError::EmptySample));
    }
    let n = paths.len() as f64;
    let mut pooled: Vec<f64> = Vec::new();
    for p in paths {
        let cut = p.times().partition_point(|&t| t <= horizon);
        pooled.extend_from_slice(&p.times()[..cut]);
    }
    pooled.sort_unstable_by(f64::total_cmp);
    let (times, counts) = distinct_counts(&pooled);
    // same accumulation as `process::empirical_mean`: one exact count per
    // distinct time, a single division by n
    let mu_hat = StepFunction::new(
        0.0,
        times.iter().zip(&counts).map(|(&u, &m)| (u, m / n)),
    )
    .expect("distinct positive times")
    .restrict(horizon)
    .expect("pooled times clipped to the horizon");
    let grid = resolve_grid(&mu_hat, horizon, grid)?;
    let influence: Vec<Vec<f64>> = paths
        .iter()
        .map(|p| {
            grid.iter()
                .map(|&s| p.count_at(s) as f64 - mu_hat.value(s))
                .collect()
        })
        .collect();
    Ok(EstimateCurve::finish(
        EstimatorKind::Uncensored,
        horizon,
        mu_hat,
        StepFunction::constant(1.0),
        None,
        grid,
        influence,
    ))
}

// ---------------------------------------------------------------------------
// Example 2: IPCW with observed censoring
// ---------------------------------------------------------------------------

fn observed_censor_times(sample: &Sample) -> Result<Vec<f64>, EstimateError> {
    if sample.design() != DataDesign::Observed {
        return Err(EstimateError::WrongDesign { expected: DataDesign::Observed });
    }
    let mut c: Vec<f64> = sample
        .subjects()
        .iter()
        .map(|s| match s.followup() {
            FollowUp::Observed { censor } => censor,
            FollowUp::Censored { .. } => unreachable!("design-homogeneous sample"),
        })
        .collect();
    c.sort_unstable_by(f64::total_cmp);
    Ok(c)
}

/// K̂_n(s) = n^{−1} Σ 1{C_i ≥ s}: the empirical left-continuous censoring
/// survivor, ties at s counted in.
pub fn k_hat_observed(sample: &Sample, s: f64) -> Result<f64, EstimateError> {
    let sorted = observed_censor_times(sample)?;
    let geq = sorted.len() - sorted.partition_point(|&c| c < s);
    Ok(geq as f64 / sample.n() as f64)
}

/// The IPCW estimator with observed censoring times:
/// μ̂(s) = Σ_{u ≤ s} Δν̂(u)/K̂(u), with plug-in influence
/// Σ_{e ≤ s} 1/K̂(e) − Σ_{u ≤ s ∧ C_i} Δν̂(u)/K̂(u)² per subject.
pub fn mu_ipcw_observed(
    sample: &Sample,
    horizon: f64,
    grid: Option<&[f64]>,
) -> Result<EstimateCurve, EstimateError> {
    check_horizon(horizon)?;
    let sorted_c = observed_censor_times(sample)?;
    let n = sample.n() as f64;
    let pooled = pooled_event_times(sample, horizon, None);
    let (times, counts) = distinct_counts(&pooled);

    // at-risk counts #{C_i ≥ u} per distinct event time, and at the horizon
    let at_risk = |u: f64| (sorted_c.len() - sorted_c.partition_point(|&c| c < u)) as f64;
    let mut risk: Vec<f64> = Vec::with_capacity(times.len());
    for &u in &times {
        let r = at_risk(u);
        if r == 0.0 {
            return Err(EstimateError::RiskSetExhausted { time: u });
        }
        risk.push(r);
    }
    if at_risk(horizon) == 0.0 {
        return Err(EstimateError::RiskSetExhausted { time: horizon });
    }

    // μ̂ jumps m_u/#{C ≥ u} (the two 1/n factors cancel exactly)
    let mu_hat = StepFunction::new(
        0.0,
        times.iter().zip(&risk).zip(&counts).map(|((&u, &r), &m)| (u, m / r)),
    )
    .expect("distinct positive times")
    .restrict(horizon)
    .expect("horizon validated");

    // prefix sums of Δν̂(u)/K̂(u)² = m_u n / #{C ≥ u}²
    let mut w2: Vec<f64> = Vec::with_capacity(times.len() + 1);
    w2.push(0.0);
    for ((&m, &r), _) in counts.iter().zip(&risk).zip(&times) {
        w2.push(w2.last().unwrap() + m * n / (r * r));
    }

    let grid = resolve_grid(&mu_hat, horizon, grid)?;
    let mut influence = Vec::with_capacity(sample.n());
    for subject in sample.subjects() {
        let c_i = subject.followup().time();
        // own-event prefix: Σ 1/K̂(e) = Σ n/#{C ≥ e} over the subject's events
        let events = subject.path().times();
        let mut own: Vec<f64> = Vec::with_capacity(events.len() + 1);
        own.push(0.0);
        for &e in events {
            let idx = times.partition_point(|&u| u < e);
            let weight = if idx < times.len() && times[idx] == e {
                n / risk[idx]
            } else {
                // event beyond the horizon: never queried at grid points
                0.0
            };
            own.push(own.last().unwrap() + weight);
        }
        let row: Vec<f64> = grid
            .iter()
            .map(|&s| {
                let own_part = own[events.partition_point(|&e| e <= s)];
                let sub_part = w2[times.partition_point(|&u| u <= s.min(c_i))];
                own_part - sub_part
            })
            .collect();
        influence.push(row);
    }

    let (c_times, c_counts) = distinct_counts(&sorted_c);
    let k_step = StepFunction::new(
        1.0,
        c_times.iter().zip(&c_counts).map(|(&c, &k)| (c, -k / n)),
    )
    .expect("distinct positive times");

    Ok(EstimateCurve::finish(
        EstimatorKind::IpcwObserved,
        horizon,
        mu_hat,
        k_step,
        None,
        grid,
        influence,
    ))
}

// ---------------------------------------------------------------------------
// Example 3: IPCW with censored censoring times
// ---------------------------------------------------------------------------

/// Shared censoring tables for the censored-censoring design: hazard jump
/// times (distinct C̃ with a D̃ = 1 tie, restricted to the horizon), their
/// jump sizes ΔΛ̂ = d₁/r, risk counts, and the running product-integral
/// K̂ values after each jump.
struct CensTables {
    n: f64,
    /// Hazard jump times, increasing.
    times: Vec<f64>,
    /// ΔΛ̂ at each jump: d₁(u)/r(u), exact integer ratios.
    dl: Vec<f64>,
    /// Adjusted risk counts r(u) = #{C̃ > u} + d₁(u).
    risk: Vec<f64>,
    /// kk[j] = ∏_{l ≤ j} (1 − dl[l]); K̂(s) = kk just before s.
    kk: Vec<f64>,
}

impl CensTables {
    fn build(sample: &Sample, horizon: f64) -> Result<(Self, Vec<(f64, bool)>), EstimateError> {
        if sample.design() != DataDesign::Censored {
            return Err(EstimateError::WrongDesign { expected: DataDesign::Censored });
        }
        let mut followups: Vec<(f64, bool)> = sample
            .subjects()
            .iter()
            .map(|s| match s.followup() {
                FollowUp::Censored { time, censoring_observed } => (time, censoring_observed),
                FollowUp::Observed { .. } => unreachable!("design-homogeneous sample"),
            })
            .collect();
        let mut sorted = followups.clone();
        sorted.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
        followups.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));

        let n = sample.n() as f64;
        let mut times = Vec::new();
        let mut dl = Vec::new();
        let mut risk = Vec::new();
        let mut kk = Vec::new();
        let mut i = 0;
        let mut running = 1.0f64;
        while i < sorted.len() {
            let t = sorted[i].0;
            let mut d1 = 0.0f64;
            let mut j = i;
            while j < sorted.len() && sorted[j].0 == t {
                if sorted[j].1 {
                    d1 += 1.0;
                }
                j += 1;
            }
            if d1 > 0.0 && t <= horizon {
                let r = (sorted.len() - j) as f64 + d1;
                let jump = d1 / r;
                running *= 1.0 - jump;
                times.push(t);
                dl.push(jump);
                risk.push(r);
                kk.push(running);
            }
            i = j;
        }
        Ok((Self { n, times, dl, risk, kk }, followups))
    }

    /// K̂(t) = ∏_{u < t} (1 − ΔΛ̂(u)).
    fn k_before(&self, t: f64) -> f64 {
        let idx = self.times.partition_point(|&u| u < t);
        if idx == 0 {
            1.0
        } else {
            self.kk[idx - 1]
        }
    }

    fn lambda_hat(&self) -> StepFunction {
        StepFunction::new(0.0, self.times.iter().copied().zip(self.dl.iter().copied()))
            .expect("distinct positive times")
    }

    fn k_step(&self) -> StepFunction {
        let mut jumps = Vec::with_capacity(self.times.len());
        let mut prev = 1.0;
        for (&t, &k) in self.times.iter().zip(&self.kk) {
            jumps.push((t, k - prev));
            prev = k;
        }
        StepFunction::new(1.0, jumps).expect("distinct positive times")
    }
}

/// Λ̂ (jumps ΔΛ̂(u) = ΔĜ°₁(u)/K̂°(u) at distinct D̃ = 1 follow-up times up
/// to the horizon) and the right-continuous representation of its product
/// integral K̂; evaluate K̂(s) as the left limit at s.
pub fn censoring_hazard_and_khat(
    sample: &Sample,
    horizon: f64,
) -> Result<(StepFunction, StepFunction), EstimateError> {
    check_horizon(horizon)?;
    let (tables, _) = CensTables::build(sample, horizon)?;
    Ok((tables.lambda_hat(), tables.k_step()))
}

/// The IPCW estimator with censored censoring times:
/// μ̂(s) = Σ_{u ≤ s} Δν̂(u)/K̂(u) with K̂ the product integral of Λ̂, and
/// the plug-in influence obtained by inserting F_n into the functional
/// derivative — the hazard-martingale term
/// Σ_{v ≤ s} A_i(v) Δμ̂(v) with
/// A_i(v) = Σ_{w < v} (1 − ΔΛ̂(w))^{−1} K̂°(w)^{−1} (1{C̃_i = w, D̃_i = 1}
/// − 1{C̃_i ≥ w} ΔΛ̂(w)).
pub fn mu_ipcw_censored(
    sample: &Sample,
    horizon: f64,
    grid: Option<&[f64]>,
) -> Result<EstimateCurve, EstimateError> {
    check_horizon(horizon)?;
    let (tab, _) = CensTables::build(sample, horizon)?;
    let n = tab.n;
    let pooled = pooled_event_times(sample, horizon, None);
    let (times, counts) = distinct_counts(&pooled);

    // A unit hazard jump sends the product integral to zero: any ν̂ jump at
    // or after it within the horizon leaves μ̂ undefined there.
    if let Some(j) = tab.dl.iter().position(|&d| d == 1.0) {
        let idx = times.partition_point(|&v| v < tab.times[j]);
        if idx < times.len() {
            return Err(EstimateError::RiskSetExhausted { time: times[idx] });
        }
    }

    // μ̂ jumps q_v = Δν̂(v)/K̂(v) and their prefix sums
    let mut kv: Vec<f64> = Vec::with_capacity(times.len());
    let mut q: Vec<f64> = Vec::with_capacity(times.len());
    let mut qp: Vec<f64> = Vec::with_capacity(times.len() + 1);
    qp.push(0.0);
    for (&v, &m) in times.iter().zip(&counts) {
        let k = tab.k_before(v);
        if k <= 0.0 {
            return Err(EstimateError::RiskSetExhausted { time: v });
        }
        kv.push(k);
        let jump = (m / n) / k;
        q.push(jump);
        qp.push(qp.last().unwrap() + jump);
    }
    let mu_hat = StepFunction::new(0.0, times.iter().copied().zip(q.iter().copied()))
        .expect("distinct positive times")
        .restrict(horizon)
        .expect("horizon validated");

    // Martingale weights per hazard jump: g_w = (1 − ΔΛ̂)^{−1} K̂°(w)^{−1} ΔΛ̂
    // with K̂°(w)^{−1} = n/r(w). A unit hazard jump gets weight 0: no μ̂ jump
    // can lie beyond it (the risk-set check above fired otherwise), so these
    // entries are never selected, and zero keeps the prefix sums finite.
    let mut gp: Vec<f64> = Vec::with_capacity(tab.times.len() + 1);
    gp.push(0.0);
    for (&dl, &r) in tab.dl.iter().zip(&tab.risk) {
        let g = if dl < 1.0 { (1.0 / (1.0 - dl)) * (n / r) * dl } else { 0.0 };
        gp.push(gp.last().unwrap() + g);
    }
    // cu[l] = #{hazard jumps < v_l}; hp[l+1] = Σ_{l' ≤ l} q G[cu[l']]
    let cu: Vec<usize> = times
        .iter()
        .map(|&v| tab.times.partition_point(|&u| u < v))
        .collect();
    let mut hp: Vec<f64> = Vec::with_capacity(times.len() + 1);
    hp.push(0.0);
    for (l, &jump) in q.iter().enumerate() {
        hp.push(hp.last().unwrap() + jump * gp[cu[l]]);
    }

    let grid = resolve_grid(&mu_hat, horizon, grid)?;
    let mut influence = Vec::with_capacity(sample.n());
    for subject in sample.subjects() {
        let (c_i, d_i) = match subject.followup() {
            FollowUp::Censored { time, censoring_observed } => (time, censoring_observed),
            FollowUp::Observed { .. } => unreachable!("design checked"),
        };
        let events = subject.path().times();
        let mut own_events: Vec<f64> = Vec::with_capacity(events.len() + 1);
        own_events.push(0.0);
        for &e in events {
            let weight = if e <= horizon { 1.0 / tab.k_before(e) } else { 0.0 };
            own_events.push(own_events.last().unwrap() + weight);
        }
        // point-mass part of M_{i,1}: fires at the subject's own hazard jump
        let own_weight = if d_i {
            match tab.times.binary_search_by(|u| u.total_cmp(&c_i)) {
                Ok(j) if tab.dl[j] < 1.0 => (1.0 / (1.0 - tab.dl[j])) * (n / tab.risk[j]),
                // at a unit jump the factor μ̂(s) − μ̂(C̃_i) is always 0
                _ => 0.0,
            }
        } else {
            0.0
        };
        let e_i = times.partition_point(|&v| v <= c_i);
        let cnt_c = tab.times.partition_point(|&u| u <= c_i);
        let b_i = cu.partition_point(|&c| c <= cnt_c);

        let row: Vec<f64> = grid
            .iter()
            .map(|&s| {
                let l1 = times.partition_point(|&v| v <= s);
                let own_part = own_events[events.partition_point(|&e| e <= s)];
                let mu_s = qp[l1];
                let own_piece = own_weight * (qp[l1] - qp[e_i.min(l1)]);
                let mut g_piece = hp[l1.min(b_i)];
                if l1 > b_i {
                    g_piece += gp[cnt_c] * (qp[l1] - qp[b_i]);
                }
                own_part - mu_s + own_piece - g_piece
            })
            .collect();
        influence.push(row);
    }

    Ok(EstimateCurve::finish(
        EstimatorKind::IpcwCensored,
        horizon,
        mu_hat,
        tab.k_step(),
        Some(tab.lambda_hat()),
        grid,
        influence,
    ))
}

// ---------------------------------------------------------------------------
// Dispatch and the lean point path
// ---------------------------------------------------------------------------

/// Runs the estimator selected by `kind` on the sample.
pub fn estimate(
    sample: &Sample,
    kind: EstimatorKind,
    horizon: f64,
    grid: Option<&[f64]>,
) -> Result<EstimateCurve, EstimateError> {
    match kind {
        EstimatorKind::Uncensored => {
            let paths: Vec<CountingPath> =
                sample.subjects().iter().map(|s| s.path().clone()).collect();
            mean_uncensored(&paths, horizon, grid)
        }
        EstimatorKind::IpcwObserved => mu_ipcw_observed(sample, horizon, grid),
        EstimatorKind::IpcwCensored => mu_ipcw_censored(sample, horizon, grid),
    }
}

/// μ̂(t) alone, recomputed from scratch, optionally leaving one subject out —
/// the work-horse of the jackknife. Accumulation order (ascending distinct
/// event times, one division per time) matches the full estimators exactly,
/// so leave-one-out values inherit their reduction identities.
pub fn estimate_point(
    sample: &Sample,
    kind: EstimatorKind,
    t: f64,
    skip: Option<usize>,
) -> Result<f64, EstimateError> {
    check_horizon(t)?;
    let n_eff = sample.n() - usize::from(skip.is_some());
    if n_eff == 0 {
        return Err(EstimateError::Data(DataError::EmptySample));
    }
    let n = n_eff as f64;
    let pooled = pooled_event_times(sample, t, skip);
    let (times, counts) = distinct_counts(&pooled);
    match kind {
        EstimatorKind::Uncensored => {
            Ok(counts.iter().map(|&m| m / n).sum())
        }
        EstimatorKind::IpcwObserved => {
            if sample.design() != DataDesign::Observed {
                return Err(EstimateError::WrongDesign { expected: DataDesign::Observed });
            }
            let mut c: Vec<f64> = sample
                .subjects()
                .iter()
                .enumerate()
                .filter(|(i, _)| skip != Some(*i))
                .map(|(_, s)| s.followup().time())
                .collect();
            c.sort_unstable_by(f64::total_cmp);
            let at_risk = |u: f64| (c.len() - c.partition_point(|&x| x < u)) as f64;
            if at_risk(t) == 0.0 {
                return Err(EstimateError::RiskSetExhausted { time: t });
            }
            let mut total = 0.0;
            for (&u, &m) in times.iter().zip(&counts) {
                let r = at_risk(u);
                if r == 0.0 {
                    return Err(EstimateError::RiskSetExhausted { time: u });
                }
                total += m / r;
            }
            Ok(total)
        }
        EstimatorKind::IpcwCensored => {
            if sample.design() != DataDesign::Censored {
                return Err(EstimateError::WrongDesign { expected: DataDesign::Censored });
            }
            let mut fu: Vec<(f64, bool)> = sample
                .subjects()
                .iter()
                .enumerate()
                .filter(|(i, _)| skip != Some(*i))
                .map(|(_, s)| match s.followup() {
                    FollowUp::Censored { time, censoring_observed } => {
                        (time, censoring_observed)
                    }
                    FollowUp::Observed { .. } => unreachable!("design checked"),
                })
                .collect();
            fu.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
            // run-length the hazard jumps, tracking where (if anywhere) a
            // unit jump absorbs the product integral
            let mut hazard_times: Vec<f64> = Vec::new();
            let mut running_k: Vec<f64> = Vec::new();
            let mut absorbing = f64::INFINITY;
            let mut running = 1.0f64;
            let mut h = 0usize;
            while h < fu.len() {
                let u = fu[h].0;
                let mut d1 = 0.0f64;
                let mut j = h;
                while j < fu.len() && fu[j].0 == u {
                    if fu[j].1 {
                        d1 += 1.0;
                    }
                    j += 1;
                }
                if d1 > 0.0 {
                    let r = (fu.len() - j) as f64 + d1;
                    let jump = d1 / r;
                    if jump == 1.0 && absorbing.is_infinite() {
                        absorbing = u;
                    }
                    running *= 1.0 - jump;
                    hazard_times.push(u);
                    running_k.push(running);
                }
                h = j;
            }
            let mut total = 0.0;
            for (&v, &m) in times.iter().zip(&counts) {
                if v >= absorbing {
                    return Err(EstimateError::RiskSetExhausted { time: v });
                }
                let idx = hazard_times.partition_point(|&u| u < v);
                let k = if idx == 0 { 1.0 } else { running_k[idx - 1] };
                if k <= 0.0 {
                    return Err(EstimateError::RiskSetExhausted { time: v });
                }
                total += (m / n) / k;
            }
            Ok(total)
        }
    }
}

// ---------------------------------------------------------------------------
// Truth-side influence and variance oracles
// ---------------------------------------------------------------------------

/// Composite Simpson estimate with adaptive bisection; `fa`, `fm`, `fb` are
/// f at the endpoints and midpoint.
#[allow(clippy::too_many_arguments)]
fn adaptive_simpson_rec(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    adaptive_simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + adaptive_simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// ∫_a^b f to absolute tolerance `tol` by adaptive Simpson quadrature.
fn adaptive_simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let fa = f(a);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let fb = f(b);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    adaptive_simpson_rec(&f, a, b, fa, fm, fb, whole, tol, 48)
}

/// Integrates f over [a, b] splitting at the given discontinuity points, so
/// each adaptive run sees a smooth integrand.
fn integrate_piecewise(f: impl Fn(f64) -> f64, a: f64, b: f64, cuts: &[f64], tol: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let mut knots: Vec<f64> = cuts.iter().copied().filter(|&x| x > a && x < b).collect();
    knots.sort_unstable_by(f64::total_cmp);
    knots.dedup();
    knots.push(b);
    let piece_tol = tol / knots.len() as f64;
    let mut lo = a;
    let mut total = 0.0;
    for &hi in &knots {
        total += adaptive_simpson(&f, lo, hi, piece_tol);
        lo = hi;
    }
    total
}

const QUAD_TOL: f64 = 1e-8;

/// Evaluates the influence function at the *true* nuisance functions from
/// latent data: the full path N (already stopped at any terminal event),
/// the latent censoring time C, and the terminal time T (`None` when the
/// truth has no terminal event). Used by simulation studies to check
/// E μ̇(X; s) = 0 and Var μ̇(X; s).
///
/// The censoring martingale integral is expanded as the point mass at C
/// minus the compensator:
/// μ̇ = N(s) − μ(s) − 1{C < s} B(C)/K(C) + ∫_0^{C ∧ s} B(u)/K(u) Λ(du),
/// with B(u) = N(s) − μ(s) − (N(u) − μ(u)) for the observed design and
/// B(u) = N(s) − N(u) − 1{T > u} P(T > u)^{−1} (μ(s) − μ(u)) for the
/// censored one.
pub fn influence_at_truth(
    path: &CountingPath,
    censor: f64,
    terminal: Option<f64>,
    truth: &TruthSpec,
    s: f64,
    design: Design,
) -> Result<f64, EstimateError> {
    truth.validate()?;
    if s < 0.0 || !s.is_finite() {
        return Err(EstimateError::BadHorizon(s));
    }
    let n_s = path.count_at(s) as f64;
    let mu_s = truth.mean(s);
    let base = n_s - mu_s;
    let c_rate = truth.censor_rate;
    if design == Design::Uncensored || c_rate == 0.0 {
        return Ok(base);
    }
    let t_latent = terminal.unwrap_or(f64::INFINITY);
    let b = |u: f64| -> f64 {
        match design {
            Design::Observed => base - (path.count_at(u) as f64 - truth.mean(u)),
            Design::Censored => {
                let survivor_term = if t_latent > u {
                    (mu_s - truth.mean(u)) / truth.terminal_survivor(u)
                } else {
                    0.0
                };
                n_s - path.count_at(u) as f64 - survivor_term
            }
            Design::Uncensored => unreachable!("handled above"),
        }
    };
    let point_mass = if censor < s { b(censor) / truth.censor_survivor(censor) } else { 0.0 };
    let upper = censor.min(s);
    let mut cuts: Vec<f64> = path.times().to_vec();
    if let Some(t) = terminal {
        cuts.push(t);
    }
    let compensator = integrate_piecewise(
        |u| b(u) / truth.censor_survivor(u) * c_rate,
        0.0,
        upper,
        &cuts,
        QUAD_TOL,
    );
    Ok(base - point_mass + compensator)
}

/// The closed-form asymptotic variance Var μ̇(X; s) by adaptive quadrature:
/// Var N(s) + ∫_0^s Var(N(s) − N(u)) K(u)^{−1} Λ(du), minus, for the
/// censored design, ∫_0^s (μ(s) − μ(u))² P(T ≤ u) P(T > u)^{−1} K(u)^{−1}
/// Λ(du) — the efficiency gain from discarding the complete censoring times.
pub fn asymptotic_variance_oracle(
    truth: &TruthSpec,
    s: f64,
    design: Design,
) -> Result<f64, EstimateError> {
    truth.validate()?;
    if truth.covariate_mix.is_some() {
        return Err(EstimateError::UnsupportedTruth(
            "variance oracle requires a covariate-free truth",
        ));
    }
    if !s.is_finite() || s < 0.0 || s > truth.horizon {
        return Err(EstimateError::BadHorizon(s));
    }
    let base = truth.var_n(s);
    if design == Design::Uncensored {
        return Ok(base);
    }
    let c = truth.censor_rate;
    if c == 0.0 {
        return Ok(base);
    }
    let added = adaptive_simpson(
        |u| truth.var_increment(u, s) * (c * u).exp() * c,
        0.0,
        s,
        QUAD_TOL,
    );
    match design {
        Design::Observed => Ok(base + added),
        Design::Censored => Ok(base + added - oracle_variance_gap(truth, s)?),
        Design::Uncensored => unreachable!("handled above"),
    }
}

/// The third term of the censored-design variance expression:
/// ∫_0^s (μ(s) − μ(u))² P(T ≤ u) P(T > u)^{−1} K(u)^{−1} Λ(du). This is the
/// exact asymptotic-variance gap between the observed- and censored-design
/// estimators.
pub fn oracle_variance_gap(truth: &TruthSpec, s: f64) -> Result<f64, EstimateError> {
    truth.validate()?;
    if truth.covariate_mix.is_some() {
        return Err(EstimateError::UnsupportedTruth(
            "variance oracle requires a covariate-free truth",
        ));
    }
    if !s.is_finite() || s < 0.0 || s > truth.horizon {
        return Err(EstimateError::BadHorizon(s));
    }
    let c = truth.censor_rate;
    let rho = truth.terminal_rate;
    if c == 0.0 || rho == 0.0 {
        return Ok(0.0);
    }
    let mu_s = truth.mean(s);
    Ok(adaptive_simpson(
        |u| {
            let diff = mu_s - truth.mean(u);
            diff * diff * ((rho * u).exp() - 1.0) * (c * u).exp() * c
        },
        0.0,
        s,
        QUAD_TOL,
    ))
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::process::Subject;

    fn path(times: &[f64]) -> CountingPath {
        CountingPath::new(times.iter().copied()).unwrap()
    }

    /// Dataset A: subject 1 events {1}, C = 4; subject 2 events {2}, C = 2.
    fn dataset_a() -> Sample {
        let s1 =
            Subject::new(1, path(&[1.0]), FollowUp::Observed { censor: 4.0 }, None).unwrap();
        let s2 =
            Subject::new(2, path(&[2.0]), FollowUp::Observed { censor: 2.0 }, None).unwrap();
        Sample::new(vec![s1, s2]).unwrap()
    }

    /// Dataset B: (ñ = {0.5}, C̃ = 1, D̃ = 1), (ñ = {}, C̃ = 2, D̃ = 0),
    /// (ñ = {1.5}, C̃ = 3, D̃ = 1).
    fn dataset_b() -> Sample {
        let s1 = Subject::new(
            1,
            path(&[0.5]),
            FollowUp::Censored { time: 1.0, censoring_observed: true },
            None,
        )
        .unwrap();
        let s2 = Subject::new(
            2,
            CountingPath::empty(),
            FollowUp::Censored { time: 2.0, censoring_observed: false },
            None,
        )
        .unwrap();
        let s3 = Subject::new(
            3,
            path(&[1.5]),
            FollowUp::Censored { time: 3.0, censoring_observed: true },
            None,
        )
        .unwrap();
        Sample::new(vec![s1, s2, s3]).unwrap()
    }

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    // --- Example 1 -----------------------------------------------------------

    #[test]
    fn uncensored_average_and_influence() {
        let paths = [path(&[1.0, 3.0]), path(&[2.0])];
        let curve = mean_uncensored(&paths, 3.0, None).unwrap();
        assert_eq!(curve.mu_at(2.0), 1.0);
        assert_eq!(curve.grid(), &[1.0, 2.0, 3.0]);
        for k in 0..curve.grid().len() {
            let col: f64 = curve.influence().iter().map(|r| r[k]).sum();
            assert_close(col, 0.0, 1e-14);
        }
        assert_eq!(curve.k_at(2.5), 1.0);
        let single = mean_uncensored(&paths[..1], 3.0, None).unwrap();
        assert_eq!(single.variance(), &[0.0, 0.0]);
    }

    // --- Example 2 -----------------------------------------------------------

    #[test]
    fn k_hat_observed_fixture() {
        let sample = dataset_a();
        assert_eq!(k_hat_observed(&sample, 1.0).unwrap(), 1.0);
        assert_eq!(k_hat_observed(&sample, 2.0).unwrap(), 1.0);
        assert_eq!(k_hat_observed(&sample, 3.0).unwrap(), 0.5);
        assert!(matches!(
            k_hat_observed(&dataset_b(), 1.0),
            Err(EstimateError::WrongDesign { .. })
        ));
    }

    #[test]
    fn ipcw_observed_fixture() {
        let curve = mu_ipcw_observed(&dataset_a(), 3.0, None).unwrap();
        assert_close(curve.mu_at(1.0), 0.5, 1e-12);
        assert_close(curve.mu_at(2.0), 1.0, 1e-12);
        assert_close(curve.k_at(1.0), 1.0, 1e-12);
        assert_close(curve.k_at(3.0), 0.5, 1e-12);
        for k in 0..curve.grid().len() {
            let col: f64 = curve.influence().iter().map(|r| r[k]).sum();
            assert_close(col, 0.0, 1e-12);
        }
    }

    #[test]
    fn ipcw_observed_with_full_followup_is_the_plain_average() {
        let s1 =
            Subject::new(1, path(&[0.5, 1.5]), FollowUp::Observed { censor: 5.0 }, None).unwrap();
        let s2 = Subject::new(2, path(&[1.0]), FollowUp::Observed { censor: 6.0 }, None).unwrap();
        let s3 = Subject::new(3, CountingPath::empty(), FollowUp::Observed { censor: 5.0 }, None)
            .unwrap();
        let sample = Sample::new(vec![s1, s2, s3]).unwrap();
        let ipcw = mu_ipcw_observed(&sample, 5.0, None).unwrap();
        let paths: Vec<CountingPath> =
            sample.subjects().iter().map(|s| s.path().clone()).collect();
        let plain = mean_uncensored(&paths, 5.0, None).unwrap();
        assert_eq!(ipcw.mu_hat(), plain.mu_hat());
        assert_eq!(ipcw.grid(), plain.grid());
        for (a, b) in ipcw.influence().iter().zip(plain.influence()) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn ipcw_observed_detects_exhausted_risk_set() {
        let s1 = Subject::new(1, path(&[1.0]), FollowUp::Observed { censor: 1.0 }, None).unwrap();
        let s2 = Subject::new(2, path(&[2.0]), FollowUp::Observed { censor: 2.0 }, None).unwrap();
        let sample = Sample::new(vec![s1, s2]).unwrap();
        // horizon beyond every C: K̂(horizon) = 0
        assert!(matches!(
            mu_ipcw_observed(&sample, 3.0, None),
            Err(EstimateError::RiskSetExhausted { .. })
        ));
        assert!(mu_ipcw_observed(&sample, 2.0, None).is_ok());
    }

    // --- Example 3 -----------------------------------------------------------

    #[test]
    fn censoring_hazard_fixture() {
        let (lambda, _) = censoring_hazard_and_khat(&dataset_b(), 3.5).unwrap();
        assert_eq!(lambda.times(), &[1.0, 3.0]);
        assert_close(lambda.jumps()[0], 1.0 / 3.0, 1e-12);
        assert_close(lambda.jumps()[1], 1.0, 1e-12);
        let k = |s: f64| crate::stepfn::product_integral(&lambda, s).unwrap();
        assert_close(k(2.0), 2.0 / 3.0, 1e-12);
        assert_close(k(3.0), 2.0 / 3.0, 1e-12);
        assert_close(k(3.5), 0.0, 1e-12);
    }

    #[test]
    fn khat_representation_matches_product_integral() {
        let (lambda, k_step) = censoring_hazard_and_khat(&dataset_b(), 3.5).unwrap();
        for s in [0.5, 1.0, 1.5, 2.0, 3.0, 3.25, 3.5] {
            let from_rep = k_step.left_limit(s);
            let direct = crate::stepfn::product_integral(&lambda, s).unwrap();
            assert_close(from_rep, direct, 1e-12);
        }
    }

    #[test]
    fn ipcw_censored_fixture() {
        let curve = mu_ipcw_censored(&dataset_b(), 2.5, None).unwrap();
        assert_close(curve.mu_at(0.5), 1.0 / 3.0, 1e-12);
        assert_close(curve.mu_at(1.5), 5.0 / 6.0, 1e-12);
        assert_close(curve.k_at(2.0), 2.0 / 3.0, 1e-12);
        for k in 0..curve.grid().len() {
            let col: f64 = curve.influence().iter().map(|r| r[k]).sum();
            assert_close(col, 0.0, 1e-12);
        }
    }

    #[test]
    fn ipcw_censored_influence_hand_check() {
        // At s = 2.5: μ̂ = 5/6, and the three influence values work out to
        // 1 − 5/6 + (3/2)(1/2) − 1/4, −5/6 − 1/4, and 3/2 − 5/6 − 1/4.
        let curve = mu_ipcw_censored(&dataset_b(), 2.5, None).unwrap();
        let k = curve.grid().iter().position(|&s| s == 2.5).unwrap();
        let infl: Vec<f64> = curve.influence().iter().map(|r| r[k]).collect();
        assert_close(infl[0], 1.0 - 5.0 / 6.0 + 0.75 - 0.25, 1e-12);
        assert_close(infl[1], -5.0 / 6.0 - 0.25, 1e-12);
        assert_close(infl[2], 1.5 - 5.0 / 6.0 - 0.25, 1e-12);
    }

    #[test]
    fn ipcw_censored_all_observed_matches_observed_design() {
        // same data under both encodings; all D̃ = 1
        let evs: [&[f64]; 3] = [&[0.5, 1.5], &[1.0], &[]];
        let cs = [2.0, 3.0, 1.0];
        let mut obs = Vec::new();
        let mut cen = Vec::new();
        for (i, (&c, &e)) in cs.iter().zip(evs.iter()).enumerate() {
            obs.push(
                Subject::new(i as u64 + 1, path(e), FollowUp::Observed { censor: c }, None)
                    .unwrap(),
            );
            cen.push(
                Subject::new(
                    i as u64 + 1,
                    path(e),
                    FollowUp::Censored { time: c, censoring_observed: true },
                    None,
                )
                .unwrap(),
            );
        }
        let a = mu_ipcw_observed(&Sample::new(obs).unwrap(), 2.0, None).unwrap();
        let b = mu_ipcw_censored(&Sample::new(cen).unwrap(), 2.0, None).unwrap();
        assert_eq!(a.grid(), b.grid());
        for &s in a.grid() {
            assert_close(a.mu_at(s), b.mu_at(s), 1e-12 * (1.0 + a.mu_at(s).abs()));
            assert_close(a.k_at(s), b.k_at(s), 1e-12);
        }
    }

    #[test]
    fn unit_hazard_jump_after_the_last_event_is_allowed() {
        // ΔΛ̂(1) = 1/2 (subject 2 still at risk), then a unit jump at 2 with
        // no ν̂ jump at or after it: the estimate stays defined.
        let s1 = Subject::new(
            1,
            CountingPath::empty(),
            FollowUp::Censored { time: 1.0, censoring_observed: true },
            None,
        )
        .unwrap();
        let s2 = Subject::new(
            2,
            path(&[1.5]),
            FollowUp::Censored { time: 2.0, censoring_observed: true },
            None,
        )
        .unwrap();
        let curve = mu_ipcw_censored(&Sample::new(vec![s1, s2]).unwrap(), 2.0, None).unwrap();
        // μ̂(2) = (1/2)/K̂(1.5) with K̂(1.5) = 1 − 1/2
        assert_close(curve.mu_at(2.0), 1.0, 1e-12);
        assert_close(curve.k_at(2.5), 0.0, 1e-12);
    }

    #[test]
    fn unit_hazard_jump_with_events_at_or_after_is_an_error() {
        // every follow-up ends at 1 with observed censoring, so ΔΛ̂(1) = 1;
        // subject 2's event ties at 1, which the absorbing state forbids
        let s1 = Subject::new(
            1,
            CountingPath::empty(),
            FollowUp::Censored { time: 1.0, censoring_observed: true },
            None,
        )
        .unwrap();
        let s2 = Subject::new(
            2,
            path(&[1.0]),
            FollowUp::Censored { time: 1.0, censoring_observed: true },
            None,
        )
        .unwrap();
        let sample = Sample::new(vec![s1, s2]).unwrap();
        assert!(matches!(
            mu_ipcw_censored(&sample, 2.0, None),
            Err(EstimateError::RiskSetExhausted { time }) if time == 1.0
        ));
        assert!(matches!(
            estimate_point(&sample, EstimatorKind::IpcwCensored, 2.0, None),
            Err(EstimateError::RiskSetExhausted { time }) if time == 1.0
        ));
    }

    #[test]
    fn kaplan_meier_collapses_to_empirical_survivor_without_terminal_events() {
        let cs = [0.7, 1.3, 1.3, 2.9, 4.0];
        let obs: Vec<Subject> = cs
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                Subject::new(i as u64 + 1, CountingPath::empty(), FollowUp::Observed { censor: c }, None)
                    .unwrap()
            })
            .collect();
        let cen: Vec<Subject> = cs
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                Subject::new(
                    i as u64 + 1,
                    CountingPath::empty(),
                    FollowUp::Censored { time: c, censoring_observed: true },
                    None,
                )
                .unwrap()
            })
            .collect();
        let obs = Sample::new(obs).unwrap();
        let (_, k_step) = censoring_hazard_and_khat(&Sample::new(cen).unwrap(), 5.0).unwrap();
        for s in [0.1, 0.7, 1.0, 1.3, 2.0, 2.9, 3.5, 4.0, 4.5] {
            let km = k_step.left_limit(s);
            let emp = k_hat_observed(&obs, s).unwrap();
            assert_close(km, emp, 1e-12);
        }
    }

    // --- dispatch and point evaluation --------------------------------------

    #[test]
    fn estimate_point_matches_full_estimator() {
        let sample_a = dataset_a();
        let sample_b = dataset_b();
        for t in [0.5, 1.0, 1.7, 2.0] {
            let full = mu_ipcw_observed(&sample_a, t, None).unwrap().mu_at(t);
            let point = estimate_point(&sample_a, EstimatorKind::IpcwObserved, t, None).unwrap();
            assert_eq!(full, point);
        }
        for t in [0.5, 1.5, 2.5] {
            let full = mu_ipcw_censored(&sample_b, t, None).unwrap().mu_at(t);
            let point = estimate_point(&sample_b, EstimatorKind::IpcwCensored, t, None).unwrap();
            assert_eq!(full, point);
        }
        let unc = estimate_point(&sample_a, EstimatorKind::Uncensored, 2.0, None).unwrap();
        assert_eq!(unc, 1.0);
    }

    #[test]
    fn estimate_point_skip_recomputes_the_subsample() {
        let sample = dataset_a();
        // leaving subject 2 out: only subject 1, events {1}, C = 4
        let skip1 = estimate_point(&sample, EstimatorKind::IpcwObserved, 2.0, Some(1)).unwrap();
        assert_close(skip1, 1.0, 1e-15);
        // leaving subject 1 out: subject 2 alone, event at 2, C = 2
        let skip0 = estimate_point(&sample, EstimatorKind::IpcwObserved, 2.0, Some(0)).unwrap();
        assert_close(skip0, 1.0, 1e-15);
    }

    // --- truth-side oracles ---------------------------------------------------

    fn simple_truth(censor_rate: f64, terminal_rate: f64) -> TruthSpec {
        TruthSpec {
            event_rate: 1.0,
            censor_rate,
            terminal_rate,
            horizon: 5.0,
            covariate_mix: None,
        }
    }

    #[test]
    fn truth_mean_closed_forms() {
        let t0 = simple_truth(0.0, 0.0);
        assert_eq!(t0.mean(2.0), 2.0);
        assert_eq!(t0.mean(0.0), 0.0);
        let t1 = simple_truth(0.0, 1.0);
        assert_close(t1.mean(1.0), 1.0 - (-1.0f64).exp(), 1e-12);
        let mixed = TruthSpec {
            covariate_mix: Some(CovariateMix { prob_z1: 0.5, rate_multiplier: 2.0 }),
            ..t0
        };
        assert_close(mixed.mean(2.0), 1.5 * 2.0, 1e-12);
        assert_close(mixed.conditional_mean(2.0, true), 4.0, 1e-12);
        assert_close(mixed.conditional_mean(2.0, false), 2.0, 1e-12);
    }

    #[test]
    fn capped_mean_matches_direct_poisson_sum() {
        let truth = simple_truth(0.0, 0.0);
        // cap 3, m = λs: E min(N, 3) = 3 − e^{−m}(3 + 2m + m²/2)
        for s in [0.3, 1.0, 2.7] {
            let m: f64 = s;
            let expected = 3.0 - (-m).exp() * (3.0 + 2.0 * m + 0.5 * m * m);
            assert_close(truth.capped_mean(s, 3).unwrap(), expected, 1e-12);
        }
        assert!(truth.capped_mean(1.0, 0).unwrap().abs() < 1e-15);
        assert!(matches!(
            simple_truth(0.5, 0.0).capped_mean(1.0, 3),
            Err(EstimateError::UnsupportedTruth(_))
        ));
    }

    #[test]
    fn adaptive_simpson_integrates_polynomials_and_exponentials() {
        assert_close(adaptive_simpson(|x| x * x, 0.0, 1.0, 1e-10), 1.0 / 3.0, 1e-9);
        assert_close(adaptive_simpson(f64::exp, 0.0, 2.0, 1e-10), 2.0f64.exp() - 1.0, 1e-8);
        assert_close(
            adaptive_simpson(|x| (10.0 * x).sin(), 0.0, 3.0, 1e-10),
            (1.0 - (30.0f64).cos()) / 10.0,
            1e-8,
        );
        assert_eq!(adaptive_simpson(|_| 1.0, 1.0, 1.0, 1e-10), 0.0);
    }

    #[test]
    fn variance_oracle_no_terminal_closed_form() {
        // λ = 1, s = 1: Var = λs + ∫_0^s λ(s−u) c e^{cu} du
        //                   = s + (e^{cs} − 1)/c − s = (e^{cs} − 1)/c
        let truth = simple_truth(0.5, 0.0);
        let got = asymptotic_variance_oracle(&truth, 1.0, Design::Observed).unwrap();
        assert_close(got, ((0.5f64).exp() - 1.0) / 0.5, 1e-7);
    }

    #[test]
    fn variance_oracle_limits_and_ordering() {
        let no_censoring = simple_truth(0.0, 0.3);
        let v = asymptotic_variance_oracle(&no_censoring, 2.0, Design::Observed).unwrap();
        assert_close(v, no_censoring.var_n(2.0), 1e-12);

        let truth = simple_truth(0.4, 0.5);
        let obs = asymptotic_variance_oracle(&truth, 2.0, Design::Observed).unwrap();
        let cen = asymptotic_variance_oracle(&truth, 2.0, Design::Censored).unwrap();
        assert!(cen < obs, "censored {cen} should be below observed {obs}");
        let gap = oracle_variance_gap(&truth, 2.0).unwrap();
        assert_close(obs - cen, gap, 1e-12);
        assert!(gap > 0.0);

        // without a terminal event the designs coincide
        let flat = simple_truth(0.4, 0.0);
        let o = asymptotic_variance_oracle(&flat, 2.0, Design::Observed).unwrap();
        let c = asymptotic_variance_oracle(&flat, 2.0, Design::Censored).unwrap();
        assert_close(o, c, 1e-12);
    }

    #[test]
    fn variance_oracle_rejects_covariate_mixtures() {
        let truth = TruthSpec {
            covariate_mix: Some(CovariateMix { prob_z1: 0.5, rate_multiplier: 2.0 }),
            ..simple_truth(0.5, 0.0)
        };
        assert!(matches!(
            asymptotic_variance_oracle(&truth, 1.0, Design::Observed),
            Err(EstimateError::UnsupportedTruth(_))
        ));
    }

    #[test]
    fn influence_at_truth_degenerate_cases() {
        let truth = simple_truth(0.5, 0.0);
        let p = path(&[0.5, 1.5]);
        // s = 0: all terms vanish
        let v = influence_at_truth(&p, 2.0, None, &truth, 0.0, Design::Observed).unwrap();
        assert_close(v, 0.0, 1e-12);
        // no censoring: μ̇ = N(s) − μ(s)
        let flat = simple_truth(0.0, 0.0);
        let v = influence_at_truth(&p, f64::INFINITY, None, &flat, 2.0, Design::Observed).unwrap();
        assert_close(v, 2.0 - 2.0, 1e-12);
        let v = influence_at_truth(&p, 1.0, None, &truth, 2.0, Design::Uncensored).unwrap();
        assert_close(v, 2.0 - 2.0, 1e-12);
    }

    #[test]
    fn influence_at_truth_hand_integral() {
        // empty path, C < s: μ̇ = −μ(s) − B(C)e^{cC} + ∫_0^C B(u)e^{cu}c du
        // with B(u) = μ(u) − μ(s) = u − s for λ = 1, no terminal event.
        let truth = simple_truth(0.5, 0.0);
        let (c, s, rate) = (1.0, 2.0, 0.5);
        let b = |u: f64| u - s;
        let integral = adaptive_simpson(|u| b(u) * (rate * u).exp() * rate, 0.0, c, 1e-12);
        let expected = -s - b(c) * (rate * c).exp() + integral;
        let got = influence_at_truth(
            &CountingPath::empty(),
            c,
            None,
            &truth,
            s,
            Design::Observed,
        )
        .unwrap();
        assert_close(got, expected, 1e-7);
    }

    #[test]
    fn influence_at_truth_designs_agree_without_terminal_event() {
        let truth = simple_truth(0.5, 0.0);
        let p = path(&[0.3, 1.2]);
        let a = influence_at_truth(&p, 1.7, None, &truth, 2.0, Design::Observed).unwrap();
        let b = influence_at_truth(&p, 1.7, None, &truth, 2.0, Design::Censored).unwrap();
        assert_close(a, b, 1e-9);
    }

    // --- grid handling --------------------------------------------------------

    #[test]
    fn custom_grids_are_validated_and_sorted() {
        let paths = [path(&[1.0])];
        let curve = mean_uncensored(&paths, 3.0, Some(&[2.0, 0.5, 2.0])).unwrap();
        assert_eq!(curve.grid(), &[0.5, 2.0]);
        assert!(matches!(
            mean_uncensored(&paths, 3.0, Some(&[4.0])),
            Err(EstimateError::BadGrid(_))
        ));
        assert!(matches!(
            mean_uncensored(&paths, 0.0, None),
            Err(EstimateError::BadHorizon(_))
        ));
    }
}
