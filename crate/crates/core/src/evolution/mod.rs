//! Fixed-step integration of degree-distribution dynamics.
//!
//! A rule set ([`EvolutionRules`]) owns the state layout and the per-round
//! update; this module drives the round loop, enforces finiteness and the
//! negative-mass slack, samples a [`Trajectory`], and runs step-size sweeps.

pub mod cut;
pub mod is;

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest tolerated dip below zero, in units of the step size.
pub const NEGATIVE_SLACK: f64 = 8.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvolutionError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("non-finite value in `{field}` at round {round}")]
    NonFinite { round: u64, field: String },
    #[error("`{field}` = {value:e} fell below the -{NEGATIVE_SLACK}*step slack at round {round}")]
    NegativeMass { round: u64, field: String, value: f64 },
    #[error("open-edge mass exhausted with a pending backlog of {backlog:e}")]
    Exhausted { backlog: f64 },
    #[error("rate system is singular at p = {p}")]
    Singular { p: f64 },
    #[error("phase-1 rates undefined: (10-4mu)mu = {criticality} >= 1")]
    OutOfPhase { criticality: f64 },
    #[error("refinement needs at least two strictly decreasing step sizes")]
    BadSweep,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolutionParams {
    /// Vertex mass moved per round.
    pub step_size: f64,
    /// Integration stops once the rule set's tracked mass is at or below this.
    pub stop_threshold: f64,
    /// Highest explicitly tracked degree.
    pub max_degree_cap: usize,
    /// Rounds between trajectory samples.
    pub record_interval: u64,
}

impl EvolutionParams {
    pub const DEFAULT_RECORD_INTERVAL: u64 = 1_000_000;

    pub fn new(step_size: f64) -> Self {
        Self {
            step_size,
            stop_threshold: step_size,
            max_degree_cap: 7,
            record_interval: Self::DEFAULT_RECORD_INTERVAL,
        }
    }

    pub fn with_stop_threshold(mut self, stop_threshold: f64) -> Self {
        self.stop_threshold = stop_threshold;
        self
    }

    pub fn with_record_interval(mut self, record_interval: u64) -> Self {
        self.record_interval = record_interval;
        self
    }

    pub fn with_max_degree_cap(mut self, cap: usize) -> Self {
        self.max_degree_cap = cap;
        self
    }

    pub fn validate(&self) -> Result<(), EvolutionError> {
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return Err(EvolutionError::InvalidParams(format!(
                "step_size must be positive, got {}",
                self.step_size
            )));
        }
        if !(self.stop_threshold >= self.step_size) {
            return Err(EvolutionError::InvalidParams(format!(
                "stop_threshold {} is below step_size {}",
                self.stop_threshold, self.step_size
            )));
        }
        if self.max_degree_cap < 5 {
            return Err(EvolutionError::InvalidParams(format!(
                "max_degree_cap must be at least 5, got {}",
                self.max_degree_cap
            )));
        }
        if self.record_interval == 0 {
            return Err(EvolutionError::InvalidParams("record_interval must be positive".into()));
        }
        Ok(())
    }
}

/// Outcome of a single round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Step {
    Continue,
    /// Nothing left to act on; the run ends even if the tracked mass is
    /// still above the stop threshold.
    Complete,
}

/// A deterministic per-round update on some proportion state.
pub trait EvolutionRules {
    type State: Clone + std::fmt::Debug;

    /// Short identifier used in reports.
    fn name(&self) -> &'static str;

    /// Mass whose exhaustion ends the run.
    fn tracked_mass(&self, state: &Self::State) -> f64;

    fn step(&self, state: &mut Self::State, params: &EvolutionParams) -> Result<Step, EvolutionError>;

    /// Column names for [`EvolutionRules::row`], excluding the round index.
    fn columns(&self, params: &EvolutionParams) -> Vec<String>;

    /// All state fields in column order.
    fn row(&self, state: &Self::State) -> Vec<f64>;

    /// Indices into [`EvolutionRules::row`] of the proportions subject to the
    /// negative-mass slack.
    fn proportion_columns(&self, params: &EvolutionParams) -> Vec<usize>;

    /// Indices into [`EvolutionRules::row`] of the monotone accumulators.
    fn accumulator_columns(&self) -> Vec<usize>;

    /// The headline quantity (independent mass, or good edges).
    fn headline(&self, state: &Self::State) -> f64;
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample<S> {
    pub round: u64,
    pub state: S,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<S> {
    pub columns: Vec<String>,
    pub samples: Vec<Sample<S>>,
}

impl<S> Trajectory<S> {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

impl<S: Clone + std::fmt::Debug> Trajectory<S> {
    /// CSV with a header naming every state field, one row per sample.
    pub fn to_csv<R: EvolutionRules<State = S>>(&self, rules: &R) -> String {
        let mut out = String::from("round");
        for c in &self.columns {
            out.push(',');
            out.push_str(c);
        }
        out.push('\n');
        for s in &self.samples {
            let _ = write!(out, "{}", s.round);
            for v in rules.row(&s.state) {
                let _ = write!(out, ",{v:.12e}");
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Integration<S> {
    pub final_state: S,
    pub rounds: u64,
    pub trajectory: Trajectory<S>,
}

/// Runs `rules` from `initial` until the tracked mass drops to the stop
/// threshold or the rule set reports completion.
///
/// The initial state and the final state are always sampled; intermediate
/// samples are taken every `record_interval` rounds.
pub fn integrate<R: EvolutionRules>(
    initial: R::State,
    rules: &R,
    params: &EvolutionParams,
) -> Result<Integration<R::State>, EvolutionError> {
    params.validate()?;
    let columns = rules.columns(params);
    let proportions = rules.proportion_columns(params);
    let floor = -NEGATIVE_SLACK * params.step_size;

    let mut state = initial;
    check_finite(rules, &state, &columns, 0)?;
    let mut samples = vec![Sample { round: 0, state: state.clone() }];
    let mut round = 0u64;

    while rules.tracked_mass(&state) > params.stop_threshold {
        round += 1;
        let outcome = rules.step(&mut state, params)?;
        let row = rules.row(&state);
        for (i, v) in row.iter().enumerate() {
            if !v.is_finite() {
                return Err(EvolutionError::NonFinite { round, field: columns[i].clone() });
            }
        }
        // The terminating round may dump the last backlog onto dust-level
        // classes; the slack applies only while the process continues.
        let finishing = outcome == Step::Complete || rules.tracked_mass(&state) <= params.stop_threshold;
        for &i in proportions.iter().filter(|_| !finishing) {
            if row[i] < floor {
                return Err(EvolutionError::NegativeMass {
                    round,
                    field: columns[i].clone(),
                    value: row[i],
                });
            }
        }
        if round.is_multiple_of(params.record_interval) {
            samples.push(Sample { round, state: state.clone() });
        }
        if outcome == Step::Complete {
            break;
        }
    }
    if samples.last().map(|s| s.round) != Some(round) {
        samples.push(Sample { round, state: state.clone() });
    }

    Ok(Integration {
        final_state: state,
        rounds: round,
        trajectory: Trajectory { columns, samples },
    })
}

fn check_finite<R: EvolutionRules>(
    rules: &R,
    state: &R::State,
    columns: &[String],
    round: u64,
) -> Result<(), EvolutionError> {
    for (i, v) in rules.row(state).iter().enumerate() {
        if !v.is_finite() {
            return Err(EvolutionError::NonFinite { round, field: columns[i].clone() });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinePoint {
    pub step_size: f64,
    pub rounds: u64,
    pub headline: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub rules: String,
    pub points: Vec<RefinePoint>,
    /// `headline[i+1] - headline[i]`.
    pub differences: Vec<f64>,
    /// `|diff[i+1]| / |diff[i]|`; about 0.5 for a first-order method under halving.
    pub ratios: Vec<f64>,
    /// True when successive difference magnitudes fail to shrink.
    pub non_monotone: bool,
}

/// Integrates once per step size (independently, in parallel when enabled)
/// and summarizes how the headline settles.
pub fn refine<R>(
    initial: &R::State,
    rules: &R,
    base: &EvolutionParams,
    step_sizes: &[f64],
) -> Result<ConvergenceReport, EvolutionError>
where
    R: EvolutionRules + Sync,
    R::State: Send + Sync,
{
    if step_sizes.len() < 2 || step_sizes.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(EvolutionError::BadSweep);
    }
    let runs = crate::par::map(step_sizes, |&eps| {
        let params = EvolutionParams {
            step_size: eps,
            stop_threshold: eps.max(base.stop_threshold * eps / base.step_size),
            record_interval: u64::MAX,
            ..*base
        };
        integrate(initial.clone(), rules, &params).map(|run| RefinePoint {
            step_size: eps,
            rounds: run.rounds,
            headline: rules.headline(&run.final_state),
        })
    });
    let points = runs.into_iter().collect::<Result<Vec<_>, _>>()?;
    let differences: Vec<f64> = points.windows(2).map(|w| w[1].headline - w[0].headline).collect();
    let ratios: Vec<f64> = differences.windows(2).map(|w| w[1].abs() / w[0].abs()).collect();
    let non_monotone = differences.windows(2).any(|w| w[1].abs() >= w[0].abs());
    Ok(ConvergenceReport {
        rules: rules.name().to_string(),
        points,
        differences,
        ratios,
        non_monotone,
    })
}

#[cfg(test)]
mod tests {
    use super::is::Is3Rules;
    use super::*;

    #[test]
    fn stop_at_or_above_one_runs_zero_rounds() {
        let rules = Is3Rules::default();
        let params = EvolutionParams::new(1e-5).with_stop_threshold(1.0);
        let run = integrate(rules.initial(&params), &rules, &params).unwrap();
        assert_eq!(run.rounds, 0);
        assert_eq!(run.final_state.independent, 0.0);
        assert_eq!(run.trajectory.len(), 1);
    }

    #[test]
    fn invalid_params() {
        let rules = Is3Rules::default();
        for params in [
            EvolutionParams::new(0.0),
            EvolutionParams::new(1e-5).with_stop_threshold(1e-6),
            EvolutionParams::new(1e-5).with_max_degree_cap(4),
            EvolutionParams::new(1e-5).with_record_interval(0),
        ] {
            let init = rules.initial(&EvolutionParams::new(1e-5));
            assert!(matches!(integrate(init, &rules, &params), Err(EvolutionError::InvalidParams(_))));
        }
    }

    #[test]
    fn halving_the_step_moves_little() {
        let rules = Is3Rules::default();
        let eps = 1e-5;
        let a = integrate(rules.initial(&EvolutionParams::new(eps)), &rules, &EvolutionParams::new(eps)).unwrap();
        let b = integrate(rules.initial(&EvolutionParams::new(eps)), &rules, &EvolutionParams::new(eps / 2.0)).unwrap();
        assert!((a.final_state.independent - b.final_state.independent).abs() < 10.0 * eps);
    }

    #[test]
    fn refine_rejects_bad_sweeps() {
        let rules = Is3Rules::default();
        let base = EvolutionParams::new(1e-4);
        let init = rules.initial(&base);
        assert_eq!(refine(&init, &rules, &base, &[1e-4]), Err(EvolutionError::BadSweep));
        assert_eq!(refine(&init, &rules, &base, &[1e-4, 1e-3]), Err(EvolutionError::BadSweep));
    }

    #[test]
    fn refine_reports_differences() {
        let rules = Is3Rules::default();
        let base = EvolutionParams::new(1e-3);
        let report = refine(&rules.initial(&base), &rules, &base, &[1e-3, 1e-4, 1e-5]).unwrap();
        assert_eq!(report.points.len(), 3);
        assert_eq!(report.differences.len(), 2);
        assert_eq!(report.ratios.len(), 1);
        assert_eq!(report.rules, "is3");
    }
}
