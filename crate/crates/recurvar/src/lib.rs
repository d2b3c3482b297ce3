//! Mean-function estimation for recurrent events under right censoring.
//!
//! The crate is organised around one estimation problem: a subject generates a
//! recurrent-event counting process `N`, observation may stop at a censoring
//! time (itself possibly cut short by a terminal event), and the target is the
//! marginal mean function `mu(s) = E N(s)` together with honest uncertainty.
//! The distinctive analytical tool is the exact p-variation norm
//! `‖f‖_[p] = v_p(f)^{1/p} + ‖f‖_∞`, under which the empirical mean converges
//! to `mu` at rate `n^{(1-p)/p}` — strictly faster than the `n^{-1/2}`
//! functional CLT scaling would suggest for the seminorm part.
//!
//! Modules, bottom up:
//!
//! * [`stepfn`] — immutable right-continuous step functions: evaluation from
//!   either side, pointwise algebra, Lebesgue–Stieltjes and product
//!   integrals, and exact p-variation (with a brute-force oracle and a
//!   distance-to-continuous-truth variant).
//! * [`process`] — counting-process paths, order-statistic decomposition,
//!   empirical means, censoring, and the CSV data interchange.
//! * [`estimators`] — the three mean estimators (uncensored average, IPCW
//!   under fully observed censoring, IPCW with estimated censoring hazard),
//!   their plug-in influence functions and variances, and closed-form
//!   asymptotic-variance oracles for the simulated truth family.
//! * [`pseudo`] — leave-one-out jackknife pseudo-observations and the
//!   conditional-unbiasedness diagnostic for covariate effects.
//! * [`sim`] — deterministic scenario generation and the Monte Carlo studies
//!   (convergence rates, almost-sure boundedness, CI coverage, variance
//!   agreement and design efficiency).

pub mod estimators;
pub mod process;
pub mod pseudo;
pub mod sim;
pub mod stepfn;
