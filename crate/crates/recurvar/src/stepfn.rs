//! Step functions and exact p-variation norms.
//!
//! Everything downstream — counting paths, empirical means, IPCW estimators,
//! the convergence studies — manipulates right-continuous step functions with
//! finitely many jumps. This module owns that representation and the exact
//! operations built on it: evaluation from either side, pointwise algebra,
//! Lebesgue–Stieltjes integration against the jump measure, the product
//! integral of a cumulative hazard, and the p-variation machinery
//!
//! ```text
//!   v_p(f; J)  = sup { Σ_j |f(t_j) − f(t_{j−1})|^p : t_0 < … < t_m in J },
//!   ‖f‖_(p)    = v_p(f)^{1/p},
//!   ‖f‖_[p]    = ‖f‖_(p) + ‖f‖_∞ ,
//! ```
//!
//! the supremum running over all finite partitions of the domain.
//!
//! For a step function the supremum is a maximum over *subsequences of the
//! value sequence* `(f(0), f(t_1), …, f(t_m))`: between jumps the function is
//! constant, so any partition point can be slid to a breakpoint without
//! decreasing the sum. [`pvar`] exploits this reduction, prunes interior
//! points of monotone runs (for p ≥ 1 they never enter an optimal
//! subsequence, since |a + b|^p ≥ |a|^p + |b|^p for same-sign a, b), and runs
//! an exact dynamic program over the surviving local extrema. The DP's
//! predecessor scan is accelerated with a dyadic branch-and-bound that
//! discards only provably non-improving candidates, so the result is still
//! exact; the worst case remains O(m²) but oscillating sequences resolve in
//! near-linear time. [`pvar_bruteforce`] enumerates every subsequence
//! outright and is the oracle the fast path is tested against.
//!
//! [`pvar_distance_to_truth`] computes the same quantities for `F_n − F` with
//! `F_n` a step function and `F` continuous and nondecreasing: on each
//! constancy interval of `F_n` the difference is monotone, so all path
//! extrema lie in the finite candidate sequence of left limits and values at
//! the breakpoints (plus both endpoints of the domain), and the identical
//! reduction applies.

use thiserror::Error;

/// Largest breakpoint count accepted by [`pvar_bruteforce`].
pub const BRUTE_FORCE_LIMIT: usize = 20;

/// Errors from step-function construction and the operations in this module.
#[derive(Debug, Error)]
pub enum StepFnError {
    #[error("initial value must be finite (got {0})")]
    BadInitial(f64),
    #[error("breakpoint times must be finite and strictly positive (got {0})")]
    BadTime(f64),
    #[error("jumps must be finite (got {0})")]
    BadJump(f64),
    #[error("domain end {end} lies before the last breakpoint {last}")]
    BadDomainEnd { end: f64, last: f64 },
    #[error("variation exponent must lie in [{lo}, {hi}] (got {p})")]
    BadExponent { p: f64, lo: f64, hi: f64 },
    #[error("horizon must be positive (got {0})")]
    BadHorizon(f64),
    #[error("brute-force oracle accepts at most {limit} breakpoints (got {got})")]
    TooManyBreakpoints { got: usize, limit: usize },
    #[error("product integral requires all hazard jumps <= 1 (got {0})")]
    JumpAboveOne(f64),
    #[error("truth function not finite at t = {t}")]
    TruthNotFinite { t: f64 },
}

/// Evaluation side: the right-continuous value or the left limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// `f(t)` — the value including any jump at `t`.
    Right,
    /// `f(t−)` — the limit excluding a jump at `t`.
    Left,
}

/// Upper-endpoint convention for [`stieltjes_integral`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpperLimit {
    /// Integrate over `(0, s]` — jumps at `s` included.
    Closed,
    /// Integrate over `(0, s)` — jumps at `s` excluded.
    Open,
}

// ---------------------------------------------------------------------------
// StepFunction
// ---------------------------------------------------------------------------

/// An immutable right-continuous step function on `[0, domain_end]`.
///
/// Represented by its value at 0 plus strictly increasing, strictly positive
/// breakpoint times with nonzero jumps; the value is constant at the final
/// level beyond the last breakpoint, which also serves as the value "at
/// infinity" when the domain is unbounded. Construction sorts the input,
/// merges ties by summing their jumps, and drops exact-zero jumps, so the
/// invariants hold by the time a value exists.
#[derive(Debug, Clone, PartialEq)]
pub struct StepFunction {
    initial: f64,
    times: Vec<f64>,
    jumps: Vec<f64>,
    /// Post-jump values, `levels[k] = f(times[k])`; kept alongside the jumps
    /// so evaluation is a binary search plus a lookup.
    levels: Vec<f64>,
    domain_end: f64,
}

impl StepFunction {
    /// Builds a step function from `(time, jump)` pairs in any order.
    pub fn new(
        initial: f64,
        points: impl IntoIterator<Item = (f64, f64)>,
    ) -> Result<Self, StepFnError> {
        if !initial.is_finite() {
            return Err(StepFnError::BadInitial(initial));
        }
        let mut pts: Vec<(f64, f64)> = points.into_iter().collect();
        for &(t, j) in &pts {
            if !t.is_finite() || t <= 0.0 {
                return Err(StepFnError::BadTime(t));
            }
            if !j.is_finite() {
                return Err(StepFnError::BadJump(j));
            }
        }
        pts.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
        let mut times: Vec<f64> = Vec::with_capacity(pts.len());
        let mut jumps: Vec<f64> = Vec::with_capacity(pts.len());
        for (t, j) in pts {
            if times.last() == Some(&t) {
                let last = jumps.last_mut().expect("jump for merged time");
                *last += j;
                if *last == 0.0 {
                    times.pop();
                    jumps.pop();
                }
            } else if j != 0.0 {
                times.push(t);
                jumps.push(j);
            }
        }
        Ok(Self::assemble(initial, times, jumps, f64::INFINITY))
    }

    /// The constant function `t ↦ value`.
    pub fn constant(value: f64) -> Self {
        Self::assemble(value, Vec::new(), Vec::new(), f64::INFINITY)
    }

    fn assemble(initial: f64, times: Vec<f64>, jumps: Vec<f64>, domain_end: f64) -> Self {
        let mut levels = Vec::with_capacity(jumps.len());
        let mut running = initial;
        for &j in &jumps {
            running += j;
            levels.push(running);
        }
        Self { initial, times, jumps, levels, domain_end }
    }

    /// Restricts the function to `[0, end]`, discarding later jumps.
    pub fn restrict(&self, end: f64) -> Result<Self, StepFnError> {
        if end.is_nan() || end < 0.0 {
            return Err(StepFnError::BadDomainEnd { end, last: 0.0 });
        }
        let keep = self.times.partition_point(|&t| t <= end);
        Ok(Self::assemble(
            self.initial,
            self.times[..keep].to_vec(),
            self.jumps[..keep].to_vec(),
            end,
        ))
    }

    pub fn initial_value(&self) -> f64 {
        self.initial
    }

    /// Breakpoint times, strictly increasing.
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Jump sizes aligned with [`times`](Self::times); all nonzero.
    pub fn jumps(&self) -> &[f64] {
        &self.jumps
    }

    /// Right end of the domain; `+∞` when unbounded.
    pub fn domain_end(&self) -> f64 {
        self.domain_end
    }

    /// Number of breakpoints.
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// `f(t)`; `t = +∞` yields the final level.
    pub fn value(&self, t: f64) -> f64 {
        let k = self.times.partition_point(|&u| u <= t);
        if k == 0 {
            self.initial
        } else {
            self.levels[k - 1]
        }
    }

    /// `f(t−)`, the left limit at `t`.
    pub fn left_limit(&self, t: f64) -> f64 {
        let k = self.times.partition_point(|&u| u < t);
        if k == 0 {
            self.initial
        } else {
            self.levels[k - 1]
        }
    }

    /// Evaluates from the requested [`Side`].
    pub fn evaluate(&self, t: f64, side: Side) -> f64 {
        match side {
            Side::Right => self.value(t),
            Side::Left => self.left_limit(t),
        }
    }

    /// The constant tail level, i.e. the value at `+∞`.
    pub fn value_at_infinity(&self) -> f64 {
        self.levels.last().copied().unwrap_or(self.initial)
    }

    /// The value sequence `(f(0), f(t_1), …, f(t_m))` that determines every
    /// partition sum.
    pub fn value_sequence(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.levels.len() + 1);
        v.push(self.initial);
        v.extend_from_slice(&self.levels);
        v
    }

    /// Pointwise sum; the domain end is the smaller of the two.
    pub fn add(&self, other: &Self) -> Self {
        self.combine(other, 1.0)
    }

    /// Pointwise difference; the domain end is the smaller of the two.
    pub fn sub(&self, other: &Self) -> Self {
        self.combine(other, -1.0)
    }

    /// Pointwise scalar multiple. `c` must be finite.
    pub fn scale(&self, c: f64) -> Self {
        debug_assert!(c.is_finite());
        let (times, jumps) = self
            .times
            .iter()
            .zip(&self.jumps)
            .filter_map(|(&t, &j)| {
                let cj = c * j;
                (cj != 0.0).then_some((t, cj))
            })
            .unzip();
        Self::assemble(c * self.initial, times, jumps, self.domain_end)
    }

    fn combine(&self, other: &Self, sign: f64) -> Self {
        let mut times = Vec::with_capacity(self.times.len() + other.times.len());
        let mut jumps = Vec::with_capacity(times.capacity());
        let (mut i, mut k) = (0, 0);
        while i < self.times.len() || k < other.times.len() {
            let ta = self.times.get(i).copied().unwrap_or(f64::INFINITY);
            let tb = other.times.get(k).copied().unwrap_or(f64::INFINITY);
            let (t, j) = if ta < tb {
                i += 1;
                (ta, self.jumps[i - 1])
            } else if tb < ta {
                k += 1;
                (tb, sign * other.jumps[k - 1])
            } else {
                i += 1;
                k += 1;
                (ta, self.jumps[i - 1] + sign * other.jumps[k - 1])
            };
            if j != 0.0 {
                times.push(t);
                jumps.push(j);
            }
        }
        Self::assemble(
            self.initial + sign * other.initial,
            times,
            jumps,
            self.domain_end.min(other.domain_end),
        )
    }
}

// ---------------------------------------------------------------------------
// p-variation
// ---------------------------------------------------------------------------

/// The result of an exact p-variation computation.
///
/// `partition` holds the times of an attaining partition and
/// `partition_values` the function values there, so
/// `Σ |Δ partition_values|^p` reproduces `v_p` exactly. In results from
/// [`pvar_distance_to_truth`] a time may appear twice: the first occurrence
/// is the left limit at that time, the second the value.
#[derive(Debug, Clone, PartialEq)]
pub struct PVarResult {
    /// The variation exponent used.
    pub p: f64,
    /// `v_p(f)`, the maximal partition sum.
    pub v_p: f64,
    /// `‖f‖_(p) = v_p^{1/p}`.
    pub seminorm: f64,
    /// `‖f‖_∞` over the domain.
    pub sup_norm: f64,
    /// `‖f‖_[p] = seminorm + sup_norm`.
    pub norm: f64,
    /// Times of an attaining partition, in increasing order.
    pub partition: Vec<f64>,
    /// Function values along `partition`.
    pub partition_values: Vec<f64>,
}

impl PVarResult {
    /// Recomputes the partition sum from the stored values.
    pub fn recomputed_v_p(&self) -> f64 {
        self.partition_values
            .windows(2)
            .map(|w| (w[1] - w[0]).abs().powf(self.p))
            .sum()
    }
}

fn check_exponent(p: f64, hi: f64) -> Result<(), StepFnError> {
    if p < 1.0 || p > hi || !p.is_finite() {
        return Err(StepFnError::BadExponent { p, lo: 1.0, hi });
    }
    Ok(())
}

/// Keeps the indices of local extrema (first and last point always survive);
/// interior points of monotone runs and plateau repeats are dropped. For
/// p ≥ 1 an optimal subsequence only ever uses surviving indices: a skipped
/// plateau point has an equal-valued earlier twin, and a skipped monotone
/// point `b` between `a` and `v` satisfies |v−a|^p ≥ |b−a|^p + |v−b|^p.
fn prune_to_extrema(values: &[f64]) -> Vec<usize> {
    let mut kept: Vec<usize> = Vec::with_capacity(values.len());
    for (i, &v) in values.iter().enumerate() {
        if kept.last().is_some_and(|&k| values[k] == v) {
            continue;
        }
        while kept.len() >= 2 {
            let b = values[kept[kept.len() - 1]];
            let a = values[kept[kept.len() - 2]];
            if (b - a > 0.0) == (v - b > 0.0) {
                kept.pop();
            } else {
                break;
            }
        }
        kept.push(i);
    }
    kept
}

/// Exact DP over a value sequence with a dyadic branch-and-bound on
/// predecessor candidates.
///
/// `best_to[j]` is the maximal `Σ |v_{i_k} − v_{i_{k−1}}|^p` over
/// subsequences of `values[0..=j]`; it is attained by a subsequence ending at
/// `j` (appending `j` never decreases the sum), hence nondecreasing in `j`.
/// The scan for predecessor `m` of `j` walks m = j−1 … 0 and skips a whole
/// dyadic block when `radius[block] + |v[center] − v[j]|` — an upper bound on
/// `|v[i] − v[j]|` over the block — cannot lift `best_to[m] + |·|^p` above
/// the incumbent (sound because `best_to` is nondecreasing). Returns the
/// maximum together with predecessor links for partition recovery.
fn dp_max_subsequence(values: &[f64], p: f64) -> (f64, Vec<usize>) {
    let len = values.len();
    let mut link = vec![0usize; len];
    if len < 2 {
        return (0.0, link);
    }
    let s = len - 1;
    let mut height = 1usize;
    while (s >> height) > 0 {
        height += 1;
    }
    // Dyadic tree bookkeeping: point j sits in block `j >> h` at level h; the
    // block's representative value is at `center(j, h)` and `radius` holds the
    // max distance from the representative to the block's processed points.
    let node = |j: usize, h: usize| (s >> h) + (j >> h);
    let center = |j: usize, h: usize| ((j >> h) << h) + (1usize << (h - 1));
    let center_beyond = |j: usize, h: usize| (j >> h) == (s >> h) && (s >> (h - 1)) & 1 == 0;
    let mut radius = vec![0.0f64; s];

    let mut best = 0.0f64;
    let mut best_to = vec![0.0f64; len];
    for j in 0..len {
        for h in 1..=height {
            if !center_beyond(j, h) {
                let r = &mut radius[node(j, h)];
                *r = r.max((values[center(j, h)] - values[j]).abs());
            }
        }
        if j == 0 {
            continue;
        }
        let mut m = j - 1;
        link[j] = m;
        // `delta` lazily tracks the distance a candidate must reach to beat
        // the incumbent: (best − best_to[m])^{1/p}, recomputed only when the
        // cheap stale bound fails.
        let mut delta = (values[m] - values[j]).abs();
        best = best_to[m] + delta.powf(p);
        let mut h = 0usize;
        while m > 0 {
            while h < height && (m >> h) & 1 == 0 {
                h += 1;
            }
            m -= 1;
            let mut delta_stale = true;
            while h > 0 {
                if !center_beyond(m, h) {
                    let reach = radius[node(m, h)] + (values[center(m, h)] - values[j]).abs();
                    if delta >= reach {
                        break;
                    }
                    if delta_stale {
                        delta = (best - best_to[m]).powf(1.0 / p);
                        delta_stale = false;
                        if delta >= reach {
                            break;
                        }
                    }
                }
                h -= 1;
            }
            if h > 0 {
                // Whole block certified non-improving: skip to its start.
                m = (m >> h) << h;
            } else {
                let d = (values[m] - values[j]).abs();
                if d >= delta {
                    let cand = best_to[m] + d.powf(p);
                    if cand >= best {
                        best = cand;
                        link[j] = m;
                    }
                }
            }
        }
        best_to[j] = best;
    }
    (best, link)
}

/// Shared assembly: prune, run the DP, backtrack the partition, and attach
/// the sup norm taken over the *full* candidate sequence.
fn pvar_over_values(values: &[f64], times: &[f64], p: f64) -> PVarResult {
    debug_assert_eq!(values.len(), times.len());
    let kept = prune_to_extrema(values);
    let pruned: Vec<f64> = kept.iter().map(|&i| values[i]).collect();
    let (v_p, link) = dp_max_subsequence(&pruned, p);
    let mut chain = Vec::new();
    if !pruned.is_empty() {
        let mut i = pruned.len() - 1;
        chain.push(i);
        while i > 0 {
            i = link[i];
            chain.push(i);
        }
        chain.reverse();
    }
    let partition: Vec<f64> = chain.iter().map(|&i| times[kept[i]]).collect();
    let partition_values: Vec<f64> = chain.iter().map(|&i| pruned[i]).collect();
    let sup_norm = values.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let seminorm = if v_p > 0.0 { v_p.powf(1.0 / p) } else { 0.0 };
    PVarResult {
        p,
        v_p,
        seminorm,
        sup_norm,
        norm: seminorm + sup_norm,
        partition,
        partition_values,
    }
}

/// Exact p-variation of a step function over its whole domain, `p ≥ 1`.
pub fn pvar(f: &StepFunction, p: f64) -> Result<PVarResult, StepFnError> {
    check_exponent(p, f64::INFINITY)?;
    let values = f.value_sequence();
    let mut times = Vec::with_capacity(values.len());
    times.push(0.0);
    times.extend_from_slice(&f.times);
    Ok(pvar_over_values(&values, &times, p))
}

/// Brute-force oracle: enumerates every subsequence of the value sequence.
/// Exponential in the breakpoint count, hence the [`BRUTE_FORCE_LIMIT`] guard.
pub fn pvar_bruteforce(f: &StepFunction, p: f64) -> Result<PVarResult, StepFnError> {
    check_exponent(p, f64::INFINITY)?;
    if f.len() > BRUTE_FORCE_LIMIT {
        return Err(StepFnError::TooManyBreakpoints { got: f.len(), limit: BRUTE_FORCE_LIMIT });
    }
    let values = f.value_sequence();
    let mut times = Vec::with_capacity(values.len());
    times.push(0.0);
    times.extend_from_slice(&f.times);

    let mut best = 0.0f64;
    let mut best_mask: u32 = 1;
    for mask in 0u32..(1u32 << values.len()) {
        if mask.count_ones() < 2 {
            continue;
        }
        let mut sum = 0.0;
        let mut prev: Option<f64> = None;
        let mut bits = mask;
        while bits != 0 {
            let i = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            if let Some(pv) = prev {
                sum += (values[i] - pv).abs().powf(p);
            }
            prev = Some(values[i]);
        }
        if sum > best {
            best = sum;
            best_mask = mask;
        }
    }
    let mut partition = Vec::new();
    let mut partition_values = Vec::new();
    let mut bits = best_mask;
    while bits != 0 {
        let i = bits.trailing_zeros() as usize;
        bits &= bits - 1;
        partition.push(times[i]);
        partition_values.push(values[i]);
    }
    let sup_norm = values.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let seminorm = if best > 0.0 { best.powf(1.0 / p) } else { 0.0 };
    Ok(PVarResult {
        p,
        v_p: best,
        seminorm,
        sup_norm,
        norm: seminorm + sup_norm,
        partition,
        partition_values,
    })
}

/// Exact `‖F_n − F‖`-type quantities for a step function against a continuous
/// nondecreasing truth on `[0, horizon]` (the horizon may be `+∞`).
///
/// On each constancy interval of the step function the difference is
/// monotone, so every path extremum of `g = F_n − F` lies in the candidate
/// sequence `g(0), g(t_1−), g(t_1), …, g(horizon)`; the usual subsequence
/// reduction then applies verbatim. Left limits are recorded in the partition
/// by repeating the breakpoint time (left limit first).
pub fn pvar_distance_to_truth<F>(
    empirical: &StepFunction,
    truth: F,
    p: f64,
    horizon: f64,
) -> Result<PVarResult, StepFnError>
where
    F: Fn(f64) -> f64,
{
    check_exponent(p, 2.0)?;
    if horizon.is_nan() || horizon <= 0.0 {
        return Err(StepFnError::BadHorizon(horizon));
    }
    let eval = |t: f64| -> Result<f64, StepFnError> {
        let y = truth(t);
        if y.is_finite() {
            Ok(y)
        } else {
            Err(StepFnError::TruthNotFinite { t })
        }
    };

    let mut times = vec![0.0];
    let mut values = vec![empirical.initial - eval(0.0)?];
    let cut = empirical.times.partition_point(|&t| t <= horizon);
    for k in 0..cut {
        let t = empirical.times[k];
        let ft = eval(t)?;
        let before = if k == 0 { empirical.initial } else { empirical.levels[k - 1] };
        times.push(t);
        values.push(before - ft);
        times.push(t);
        values.push(empirical.levels[k] - ft);
    }
    let last_bp = if cut == 0 { 0.0 } else { empirical.times[cut - 1] };
    if last_bp < horizon {
        times.push(horizon);
        values.push(empirical.value(horizon) - eval(horizon)?);
    }
    Ok(pvar_over_values(&values, &times, p))
}

// ---------------------------------------------------------------------------
// Integrals
// ---------------------------------------------------------------------------

/// `∫ g dF` over `(0, s]` or `(0, s)`: the sum of `g(t) ΔF(t)` over
/// breakpoints in range. `s = +∞` with [`UpperLimit::Closed`] telescopes the
/// whole jump measure.
pub fn stieltjes_integral<G>(g: G, f: &StepFunction, s: f64, upper: UpperLimit) -> f64
where
    G: Fn(f64) -> f64,
{
    let end = match upper {
        UpperLimit::Closed => f.times.partition_point(|&t| t <= s),
        UpperLimit::Open => f.times.partition_point(|&t| t < s),
    };
    (0..end).map(|i| g(f.times[i]) * f.jumps[i]).sum()
}

/// The product integral `∏_{u < s} (1 − ΔΛ(u))` of a cumulative hazard given
/// by its jumps. Left-continuous in `s` by construction: the jump at `s`
/// itself is excluded. Any jump above one (a super-unit hazard increment) is
/// rejected; a jump of exactly one sends the product to zero for all later
/// `s` (absorbing censoring).
pub fn product_integral(hazard: &StepFunction, s: f64) -> Result<f64, StepFnError> {
    if let Some(&bad) = hazard.jumps.iter().find(|&&j| j > 1.0) {
        return Err(StepFnError::JumpAboveOne(bad));
    }
    let end = hazard.times.partition_point(|&t| t < s);
    Ok(hazard.jumps[..end].iter().fold(1.0, |acc, &j| acc * (1.0 - j)))
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
