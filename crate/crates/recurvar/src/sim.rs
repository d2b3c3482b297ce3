//! Scenario generation and the Monte Carlo studies.
//!
//! The truth family is deliberately narrow — homogeneous Poisson events,
//! exponential censoring and terminal times, an optional binary rate
//! mixture — because every check downstream needs an analytic answer:
//! μ(s) = λ̄ E(s ∧ T) in closed form for the rate studies, e^{−cu} and
//! e^{−ρu} for the influence and variance oracles, and a capped Poisson
//! mean for the almost-sure study.
//!
//! Four studies live here:
//!
//! * [`convergence_study`] — the L¹ rate of ‖F_n − F‖_[p] (expected slope
//!   (1 − p)/p on a log–log scale) together with the single-event-time
//!   v_p(F_n − F) variant (expected slope 1 − p);
//! * [`as_bound_study`] — a single growing trajectory of
//!   r_n = n^{(p−1)/p} ‖F_n − F‖_[p] for a capped, hence bounded, process,
//!   checking that the running max stops growing;
//! * [`coverage_and_variance_study`] — Wald-interval coverage, plug-in
//!   versus empirical variance, the truth-side influence moments, and the
//!   observed-versus-censored design comparison on terminal-event
//!   scenarios.
//!
//! Everything is a pure function of its inputs and a 64-bit seed:
//! replications and subjects get counter-derived substreams, and
//! aggregation runs in fixed index order, so results are identical at any
//! parallelism level.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Deserialize;
use thiserror::Error;

use crate::estimators::{
    asymptotic_variance_oracle, estimate, influence_at_truth, oracle_variance_gap,
    EstimateError, EstimatorKind, TruthSpec,
};
use crate::process::{CountingPath, Design, FollowUp, Sample, Subject};
use crate::stepfn::{pvar_distance_to_truth, StepFnError, StepFunction};

/// Standard normal 97.5% quantile, for 95% Wald intervals.
pub const Z_975: f64 = 1.959963984540054;

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Estimate(#[from] EstimateError),
    #[error(transparent)]
    StepFn(#[from] StepFnError),
    #[error("exponent p must lie in [1, 2) for the rate studies (got {0})")]
    BadExponent(f64),
    #[error("n_list needs at least 3 sizes for a slope fit (got {0})")]
    TooFewSizes(usize),
    #[error("invalid study configuration: {0}")]
    Config(String),
}

// ---------------------------------------------------------------------------
// Substreams
// ---------------------------------------------------------------------------

/// Derives a statistically independent child seed from a master seed and a
/// stream index (SplitMix64 finalizer over a golden-ratio counter). Studies
/// use it twice: master → replication, replication → subject.
pub fn substream(master: u64, index: u64) -> u64 {
    let mut z = master.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Exp(rate) by inversion, redrawing the (measure-zero) exact zero so event
/// and follow-up times are strictly positive.
fn sample_exp(rng: &mut ChaCha8Rng, rate: f64) -> f64 {
    loop {
        let u: f64 = rng.gen();
        let x = -(1.0 - u).ln() / rate;
        if x > 0.0 {
            return x;
        }
    }
}

// ---------------------------------------------------------------------------
// Scenarios and generation
// ---------------------------------------------------------------------------

/// A fully specified data-generating configuration.
#[derive(Debug, Clone, Copy)]
pub struct Scenario {
    pub truth: TruthSpec,
    pub n: usize,
    pub seed: u64,
    pub design: Design,
}

/// What the simulator knows that the analyst may not: the complete stopped
/// path, the latent censoring time (∞ when the truth has none), the
/// terminal time, and the covariate (absent when the truth has no mixture).
#[derive(Debug, Clone)]
pub struct LatentSubject {
    pub z: Option<bool>,
    pub terminal: Option<f64>,
    pub censor: f64,
    /// N stopped at τ ∧ T, uncensored.
    pub path: CountingPath,
}

/// Draws one subject. Fixed draw order — covariate, terminal time,
/// censoring time, event gaps — so streams are reproducible across designs.
fn draw_subject(truth: &TruthSpec, seed: u64) -> LatentSubject {
    let mut rng = rng_for(seed);
    let z = truth.covariate_mix.map(|mix| rng.gen::<f64>() < mix.prob_z1);
    let terminal = (truth.terminal_rate > 0.0).then(|| sample_exp(&mut rng, truth.terminal_rate));
    let censor = if truth.censor_rate > 0.0 {
        sample_exp(&mut rng, truth.censor_rate)
    } else {
        f64::INFINITY
    };
    let rate = truth.rate_for(z == Some(true));
    let stop = truth.horizon.min(terminal.unwrap_or(f64::INFINITY));
    let mut events = Vec::new();
    let mut s = 0.0;
    loop {
        s += sample_exp(&mut rng, rate);
        if s > stop {
            break;
        }
        events.push(s);
    }
    LatentSubject {
        z,
        terminal,
        censor,
        path: CountingPath::new(events).expect("positive finite event times"),
    }
}

fn draw_latents(truth: &TruthSpec, n: usize, seed: u64) -> Vec<LatentSubject> {
    (0..n).map(|i| draw_subject(truth, substream(seed, i as u64))).collect()
}

/// Encodes latent subjects as the observed data of one design:
///
/// * uncensored — the full stopped path, follow-up τ;
/// * observed — path cut at C, follow-up C ∧ τ with the censoring time on
///   record;
/// * censored — path cut at C, follow-up (C̃, D̃) = (C ∧ T ∧ τ, 1{C < T}),
///   with follow-up reaching τ recorded as censoring observed there.
///
/// Clipping at τ leaves every estimate on [0, τ] unchanged (no event or
/// weight evaluation ever looks past the horizon) while keeping the data
/// files finite.
pub fn encode_sample(latents: &[LatentSubject], tau: f64, design: Design) -> Sample {
    let subjects: Vec<Subject> = latents
        .iter()
        .enumerate()
        .map(|(i, latent)| {
            let id = i as u64 + 1;
            let z = latent.z.map(f64::from);
            let (path, followup) = match design {
                Design::Uncensored => {
                    (latent.path.clone(), FollowUp::Observed { censor: tau })
                }
                Design::Observed => {
                    let censor = latent.censor.min(tau);
                    (latent.path.censor(latent.censor), FollowUp::Observed { censor })
                }
                Design::Censored => {
                    let t_latent = latent.terminal.unwrap_or(f64::INFINITY);
                    let c_and_t = latent.censor.min(t_latent);
                    let (time, censoring_observed) = if c_and_t > tau {
                        (tau, true)
                    } else {
                        (c_and_t, latent.censor < t_latent)
                    };
                    (
                        latent.path.censor(latent.censor),
                        FollowUp::Censored { time, censoring_observed },
                    )
                }
            };
            Subject::new(id, path, followup, z).expect("generated data is valid")
        })
        .collect();
    Sample::new(subjects).expect("ids increasing, designs homogeneous")
}

/// Draws a sample for the scenario, returning both the analyst's view and
/// the latent data behind it.
pub fn generate(scenario: &Scenario) -> Result<(Sample, Vec<LatentSubject>), SimError> {
    scenario.truth.validate()?;
    if scenario.n == 0 {
        return Err(SimError::Config("scenario sample size must be at least 1".into()));
    }
    let latents = draw_latents(&scenario.truth, scenario.n, scenario.seed);
    let sample = encode_sample(&latents, scenario.truth.horizon, scenario.design);
    Ok((sample, latents))
}

/// μ(s) = λ̄ E(s ∧ T): the scenario's true mean function.
pub fn true_mean(truth: &TruthSpec, s: f64) -> f64 {
    truth.mean(s)
}

// ---------------------------------------------------------------------------
// Rate studies
// ---------------------------------------------------------------------------

fn ols_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let x_bar = xs.iter().sum::<f64>() / n;
    let y_bar = ys.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        num += (x - x_bar) * (y - y_bar);
        den += (x - x_bar) * (x - x_bar);
    }
    num / den
}

fn check_rate_exponent(p: f64) -> Result<(), SimError> {
    if !(p.is_finite() && (1.0..2.0).contains(&p)) {
        return Err(SimError::BadExponent(p));
    }
    Ok(())
}

/// Log–log rate summary for the p-variation norm of F_n − F and for the
/// single-event-time v_p variant.
#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub p: f64,
    pub n_list: Vec<usize>,
    pub replications: usize,
    /// E-hat ‖F_n − F‖_[p] per n.
    pub mean_norms: Vec<f64>,
    pub fitted_slope: f64,
    /// (1 − p)/p.
    pub theoretical_slope: f64,
    /// E-hat v_p(F_n − F) per n for the empirical CDF of one event time.
    pub prop1_mean_vp: Vec<f64>,
    pub prop1_fitted_slope: f64,
    /// 1 − p.
    pub prop1_theoretical_slope: f64,
}

/// Estimates both rate exponents by Monte Carlo. The mean-function
/// statistic uses fully observed paths regardless of `design` — both rates
/// are statements about F_n itself, so the design only tags the report.
pub fn convergence_study(
    truth: &TruthSpec,
    design: Design,
    p: f64,
    n_list: &[usize],
    replications: usize,
    seed: u64,
) -> Result<ConvergenceReport, SimError> {
    let _ = design;
    truth.validate()?;
    check_rate_exponent(p)?;
    if n_list.len() < 3 {
        return Err(SimError::TooFewSizes(n_list.len()));
    }
    if n_list.contains(&0) || replications == 0 {
        return Err(SimError::Config("sample sizes and B must be positive".into()));
    }
    let tau = truth.horizon;
    let norms_master = substream(seed, 0);
    let cdf_master = substream(seed, 1);
    let b = replications;

    let mut mean_norms = Vec::with_capacity(n_list.len());
    let mut prop1_mean_vp = Vec::with_capacity(n_list.len());
    for (k, &n) in n_list.iter().enumerate() {
        let norms: Result<Vec<f64>, SimError> = (0..b)
            .into_par_iter()
            .map(|j| {
                let rep_seed = substream(norms_master, (k * b + j) as u64);
                let latents = draw_latents(truth, n, rep_seed);
                let f_n = crate::process::empirical_mean(latents.iter().map(|l| &l.path))
                    .expect("nonempty sample");
                let dist = pvar_distance_to_truth(&f_n, |s| truth.mean(s), p, tau)?;
                Ok(dist.norm)
            })
            .collect();
        let norms = norms?;
        mean_norms.push(norms.iter().sum::<f64>() / b as f64);

        let lambda = truth.event_rate;
        let vps: Result<Vec<f64>, SimError> = (0..b)
            .into_par_iter()
            .map(|j| {
                let rep_seed = substream(cdf_master, (k * b + j) as u64);
                let mut rng = rng_for(rep_seed);
                let weight = 1.0 / n as f64;
                let draws: Vec<(f64, f64)> =
                    (0..n).map(|_| (sample_exp(&mut rng, lambda), weight)).collect();
                let f_n = StepFunction::new(0.0, draws).expect("positive draws");
                let dist = pvar_distance_to_truth(
                    &f_n,
                    |s| -(-lambda * s).exp_m1(),
                    p,
                    f64::INFINITY,
                )?;
                Ok(dist.v_p)
            })
            .collect();
        let vps = vps?;
        prop1_mean_vp.push(vps.iter().sum::<f64>() / b as f64);
    }

    let log_n: Vec<f64> = n_list.iter().map(|&n| (n as f64).ln()).collect();
    let log_norms: Vec<f64> = mean_norms.iter().map(|v| v.ln()).collect();
    let log_vps: Vec<f64> = prop1_mean_vp.iter().map(|v| v.ln()).collect();
    Ok(ConvergenceReport {
        p,
        n_list: n_list.to_vec(),
        replications: b,
        mean_norms,
        fitted_slope: ols_slope(&log_n, &log_norms),
        theoretical_slope: (1.0 - p) / p,
        prop1_mean_vp,
        prop1_fitted_slope: ols_slope(&log_n, &log_vps),
        prop1_theoretical_slope: 1.0 - p,
    })
}

/// One growing trajectory of the scaled p-variation statistic.
#[derive(Debug, Clone)]
pub struct AsBoundReport {
    pub p: f64,
    pub cap: usize,
    pub n_max: usize,
    /// r_n = n^{(p−1)/p} ‖F_n − F‖_[p] for n = 1..=n_max.
    pub r: Vec<f64>,
    /// max r_n over the reporting window n ∈ [100, n_max].
    pub max_r: f64,
    /// First n in the window attaining that max.
    pub argmax_n: usize,
    /// No new running max beyond n_max/2.
    pub stabilized: bool,
}

/// Follows r_n = n^{(p−1)/p} ‖F_n − F‖_[p] along one growing sample of the
/// capped process min(N, cap), which is bounded as the almost-sure bound
/// requires. The trajectory is evaluated at every n; the report window
/// starts at n = 100.
pub fn as_bound_study(
    truth: &TruthSpec,
    p: f64,
    cap: usize,
    n_max: usize,
    seed: u64,
) -> Result<AsBoundReport, SimError> {
    truth.validate()?;
    check_rate_exponent(p)?;
    if n_max < 200 {
        return Err(SimError::Config(format!(
            "as-bound trajectory needs n_max ≥ 200 for the stabilization window (got {n_max})"
        )));
    }
    // rejects censoring, terminal events, and mixtures: the capped process
    // must be a pure Poisson count for the truth to be exact
    truth.capped_mean(truth.horizon, cap)?;
    let tau = truth.horizon;
    let truth_fn =
        |s: f64| truth.capped_mean(s, cap).expect("family validated before the trajectory");
    let exponent = (p - 1.0) / p;

    let mut pooled: Vec<f64> = Vec::new();
    let mut r = Vec::with_capacity(n_max);
    for i in 0..n_max {
        let latent = draw_subject(truth, substream(seed, i as u64));
        let events = latent.path.times();
        let kept = &events[..events.len().min(cap)];
        for &e in kept {
            let at = pooled.partition_point(|&x| x < e);
            pooled.insert(at, e);
        }
        let n = i + 1;
        let weight = 1.0 / n as f64;
        let f_n = StepFunction::new(0.0, pooled.iter().map(|&e| (e, weight)))
            .expect("positive event times");
        let dist = pvar_distance_to_truth(&f_n, truth_fn, p, tau)?;
        r.push((n as f64).powf(exponent) * dist.norm);
    }

    let window_start = 100.min(n_max);
    let mut max_r = f64::NEG_INFINITY;
    let mut argmax_n = window_start;
    for n in window_start..=n_max {
        let value = r[n - 1];
        if value > max_r {
            max_r = value;
            argmax_n = n;
        }
    }
    Ok(AsBoundReport {
        p,
        cap,
        n_max,
        r,
        max_r,
        argmax_n,
        stabilized: argmax_n <= n_max / 2,
    })
}

// ---------------------------------------------------------------------------
// Coverage, variance, and the design comparison
// ---------------------------------------------------------------------------

/// One replication's interval, for the per-replication CSV.
#[derive(Debug, Clone, Copy)]
pub struct CoverageRep {
    pub rep: usize,
    pub mu_hat: f64,
    pub std_error: f64,
    pub lower: f64,
    pub upper: f64,
    pub covered: bool,
}

/// Moments of influence_at_truth pooled over all subjects and replications,
/// against the closed-form oracle.
#[derive(Debug, Clone, Copy)]
pub struct TruthSideCheck {
    pub draws: usize,
    /// Mean of μ̇(X; t) — should be 0.
    pub mean_influence: f64,
    pub se_mean: f64,
    /// Monte Carlo Var μ̇(X; t).
    pub mc_variance: f64,
    pub se_variance: f64,
    /// Closed-form Var μ̇(X; t); absent for covariate mixtures.
    pub oracle_variance: Option<f64>,
}

/// Observed- versus censored-design comparison on shared latent draws.
#[derive(Debug, Clone, Copy)]
pub struct DesignComparison {
    pub replications_used: usize,
    pub failures: usize,
    pub mean_plugin_observed: f64,
    pub mean_plugin_censored: f64,
    /// Empirical Var of √n(μ̂(t) − μ(t)) per design.
    pub mc_variance_observed: f64,
    pub mc_variance_censored: f64,
    pub oracle_observed: f64,
    pub oracle_censored: f64,
    /// Closed-form third term of the censored-design variance expression.
    pub oracle_gap: f64,
    /// Mean over replications of (plug-in observed − plug-in censored).
    pub mean_plugin_gap: f64,
    pub se_plugin_gap: f64,
}

#[derive(Debug, Clone)]
pub struct CoverageReport {
    pub design: Design,
    pub t: f64,
    pub n: usize,
    pub replications: usize,
    pub truth_mean: f64,
    /// Replications where the estimator was not computable.
    pub failures: usize,
    pub coverage: f64,
    pub mean_plugin_variance: f64,
    /// Empirical Var of √n(μ̂(t) − μ(t)) over successful replications.
    pub empirical_variance: f64,
    pub variance_ratio: f64,
    pub reps: Vec<CoverageRep>,
    pub truth_side: TruthSideCheck,
    /// Present when the truth has both censoring and a terminal event.
    pub comparison: Option<DesignComparison>,
}

/// The estimator matched to each analysis design.
pub fn kind_for(design: Design) -> EstimatorKind {
    match design {
        Design::Uncensored => EstimatorKind::Uncensored,
        Design::Observed => EstimatorKind::IpcwObserved,
        Design::Censored => EstimatorKind::IpcwCensored,
    }
}

/// μ̂(t) and its plug-in variance for one encoded design, or None if the
/// estimator is not computable on this draw.
fn point_estimate(
    latents: &[LatentSubject],
    tau: f64,
    design: Design,
    t: f64,
) -> Option<(f64, f64)> {
    let sample = encode_sample(latents, tau, design);
    match estimate(&sample, kind_for(design), t, Some(&[t])) {
        Ok(curve) => Some((curve.mu_at(t), curve.variance()[0])),
        Err(_) => None,
    }
}

struct RepDraw {
    main: Option<(f64, f64)>,
    observed: Option<(f64, f64)>,
    censored: Option<(f64, f64)>,
    infl_sum: f64,
    infl_sum2: f64,
    infl_sum4: f64,
}

/// Runs the full interval study: per replication μ̂(t), plug-in SE, and a
/// 95% Wald interval; pooled truth-side influence moments; and, when the
/// truth has censoring and a terminal event, the two-design comparison on
/// the same draws.
pub fn coverage_and_variance_study(
    truth: &TruthSpec,
    design: Design,
    t: f64,
    n: usize,
    replications: usize,
    seed: u64,
) -> Result<CoverageReport, SimError> {
    truth.validate()?;
    if !t.is_finite() || t <= 0.0 || t > truth.horizon {
        return Err(SimError::Config(format!(
            "evaluation time t must lie in (0, τ] (got {t})"
        )));
    }
    if n < 2 || replications == 0 {
        return Err(SimError::Config("need n ≥ 2 and B ≥ 1".into()));
    }
    let tau = truth.horizon;
    let mu_true = truth.mean(t);
    let compare = truth.censor_rate > 0.0 && truth.terminal_rate > 0.0;

    let draws: Vec<RepDraw> = (0..replications)
        .into_par_iter()
        .map(|j| {
            let rep_seed = substream(seed, j as u64);
            let latents = draw_latents(truth, n, rep_seed);
            let main = point_estimate(&latents, tau, design, t);
            let (observed, censored) = if compare {
                let observed = if design == Design::Observed {
                    main
                } else {
                    point_estimate(&latents, tau, Design::Observed, t)
                };
                let censored = if design == Design::Censored {
                    main
                } else {
                    point_estimate(&latents, tau, Design::Censored, t)
                };
                (observed, censored)
            } else {
                (None, None)
            };
            let mut infl_sum = 0.0;
            let mut infl_sum2 = 0.0;
            let mut infl_sum4 = 0.0;
            for latent in &latents {
                let v = influence_at_truth(
                    &latent.path,
                    latent.censor,
                    latent.terminal,
                    truth,
                    t,
                    design,
                )
                .expect("truth validated");
                infl_sum += v;
                infl_sum2 += v * v;
                infl_sum4 += v * v * v * v;
            }
            RepDraw { main, observed, censored, infl_sum, infl_sum2, infl_sum4 }
        })
        .collect();

    // fixed-order aggregation over replication index
    let mut reps = Vec::with_capacity(replications);
    let mut failures = 0usize;
    let mut covered = 0usize;
    let mut sum_var = 0.0;
    let mut root_n_errors: Vec<f64> = Vec::new();
    let n_f = n as f64;
    for (j, draw) in draws.iter().enumerate() {
        match draw.main {
            Some((mu_hat, variance)) => {
                let std_error = (variance / n_f).sqrt();
                let lower = mu_hat - Z_975 * std_error;
                let upper = mu_hat + Z_975 * std_error;
                let is_covered = lower <= mu_true && mu_true <= upper;
                covered += usize::from(is_covered);
                sum_var += variance;
                root_n_errors.push(n_f.sqrt() * (mu_hat - mu_true));
                reps.push(CoverageRep {
                    rep: j,
                    mu_hat,
                    std_error,
                    lower,
                    upper,
                    covered: is_covered,
                });
            }
            None => failures += 1,
        }
    }
    let used = reps.len();
    if used < 2 {
        return Err(SimError::Config(format!(
            "estimator failed on {failures} of {replications} replications; too few remain"
        )));
    }
    let used_f = used as f64;
    let mean_plugin_variance = sum_var / used_f;
    let err_mean = root_n_errors.iter().sum::<f64>() / used_f;
    let empirical_variance = root_n_errors
        .iter()
        .map(|e| (e - err_mean) * (e - err_mean))
        .sum::<f64>()
        / (used_f - 1.0);

    // truth-side influence moments, pooled over all draws
    let total_draws = replications * n;
    let total_f = total_draws as f64;
    let (s1, s2, s4) = draws.iter().fold((0.0, 0.0, 0.0), |(a, b, c), d| {
        (a + d.infl_sum, b + d.infl_sum2, c + d.infl_sum4)
    });
    let mean_influence = s1 / total_f;
    let mc_variance = s2 / total_f - mean_influence * mean_influence;
    let se_mean = (mc_variance / total_f).sqrt();
    let se_variance = ((s4 / total_f - mc_variance * mc_variance).max(0.0) / total_f).sqrt();
    let truth_side = TruthSideCheck {
        draws: total_draws,
        mean_influence,
        se_mean,
        mc_variance,
        se_variance,
        oracle_variance: asymptotic_variance_oracle(truth, t, design).ok(),
    };

    let comparison = if compare {
        let pairs: Vec<((f64, f64), (f64, f64))> = draws
            .iter()
            .filter_map(|d| d.observed.zip(d.censored))
            .collect();
        let used = pairs.len();
        let used_f = used as f64;
        let mean_obs_var = pairs.iter().map(|(o, _)| o.1).sum::<f64>() / used_f;
        let mean_cen_var = pairs.iter().map(|(_, c)| c.1).sum::<f64>() / used_f;
        let mc_var = |values: Vec<f64>| {
            let m = values.iter().sum::<f64>() / used_f;
            values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (used_f - 1.0)
        };
        let mc_variance_observed =
            mc_var(pairs.iter().map(|(o, _)| n_f.sqrt() * (o.0 - mu_true)).collect());
        let mc_variance_censored =
            mc_var(pairs.iter().map(|(_, c)| n_f.sqrt() * (c.0 - mu_true)).collect());
        let gaps: Vec<f64> = pairs.iter().map(|(o, c)| o.1 - c.1).collect();
        let mean_plugin_gap = gaps.iter().sum::<f64>() / used_f;
        let gap_var = gaps
            .iter()
            .map(|g| (g - mean_plugin_gap) * (g - mean_plugin_gap))
            .sum::<f64>()
            / (used_f - 1.0);
        Some(DesignComparison {
            replications_used: used,
            failures: replications - used,
            mean_plugin_observed: mean_obs_var,
            mean_plugin_censored: mean_cen_var,
            mc_variance_observed,
            mc_variance_censored,
            oracle_observed: asymptotic_variance_oracle(truth, t, Design::Observed)?,
            oracle_censored: asymptotic_variance_oracle(truth, t, Design::Censored)?,
            oracle_gap: oracle_variance_gap(truth, t)?,
            mean_plugin_gap,
            se_plugin_gap: (gap_var / used_f).sqrt(),
        })
    } else {
        None
    };

    Ok(CoverageReport {
        design,
        t,
        n,
        replications,
        truth_mean: mu_true,
        failures,
        coverage: covered as f64 / used_f,
        mean_plugin_variance,
        empirical_variance,
        variance_ratio: mean_plugin_variance / empirical_variance,
        reps,
        truth_side,
        comparison,
    })
}

// ---------------------------------------------------------------------------
// Study configuration files
// ---------------------------------------------------------------------------

/// Flat key–value study configuration (JSON). Missing keys fall back to
/// per-study defaults; unknown keys are rejected.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfigFile {
    pub lambda: Option<f64>,
    pub censor_rate: Option<f64>,
    pub terminal_rate: Option<f64>,
    pub tau: Option<f64>,
    pub n: Option<usize>,
    pub n_list: Option<Vec<usize>>,
    #[serde(rename = "B")]
    pub b: Option<usize>,
    pub p: Option<f64>,
    pub t: Option<f64>,
    pub design: Option<String>,
    pub seed: Option<u64>,
    pub z_prob: Option<f64>,
    pub z_multiplier: Option<f64>,
    pub cap: Option<usize>,
}

impl StudyConfigFile {
    pub fn parse(text: &str) -> Result<Self, SimError> {
        serde_json::from_str(text).map_err(|e| SimError::Config(e.to_string()))
    }

    pub fn design(&self) -> Result<Option<Design>, SimError> {
        match self.design.as_deref() {
            None => Ok(None),
            Some("uncensored") => Ok(Some(Design::Uncensored)),
            Some("observed") => Ok(Some(Design::Observed)),
            Some("censored") => Ok(Some(Design::Censored)),
            Some(other) => Err(SimError::Config(format!(
                "design must be uncensored, observed, or censored (got {other})"
            ))),
        }
    }
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
