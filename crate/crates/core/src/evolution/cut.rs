//! Cut evolution on 3-regular configuration graphs.
//!
//! Survivors are plain 3-vertices (`[]`) and 2-vertices with one coloured
//! neighbour (`[R]`/`[G]`, tracked together). Per unit of consumed
//! `[]`-mass the expected action counts solve a small linear system; the
//! resulting rates are rational in the open-edge probability `p`, and
//! multiplying through by `D(p)` gives the polynomial rates the loop uses.

use nalgebra::{Matrix6, Vector6};
use serde::{Deserialize, Serialize};

use super::{EvolutionError, EvolutionParams, EvolutionRules, Step};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutEvolutionState {
    /// `[R]` plus `[G]` mass.
    pub rat2: f64,
    /// `[]` mass.
    pub rat3: f64,
    pub good: f64,
    pub bad: f64,
}

impl CutEvolutionState {
    pub fn initial() -> Self {
        Self { rat2: 0.0, rat3: 1.0, good: 0.0, bad: 0.0 }
    }
}

impl Default for CutEvolutionState {
    fn default() -> Self {
        Self::initial()
    }
}

/// Probability that a random open edge ends at a 2-vertex of one fixed
/// colour. `None` once no open edges remain.
pub fn edge_probability(rat2: f64, rat3: f64) -> Option<f64> {
    let den = 2.0 * rat2 + 3.0 * rat3;
    if den > 0.0 {
        Some(rat2 / den)
    } else {
        None
    }
}

/// Rates per unit decrease of `[]`-mass at edge probability `p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutRates {
    pub p: f64,
    pub v_r: f64,
    pub g: f64,
    pub b: f64,
    /// Always -1: the normalization.
    pub plain_rate: f64,
    /// Lowest-priority queries from an isolated `[R]`.
    pub c_r: f64,
    /// Open edges of coloured vertices matched to random open edges.
    pub r: f64,
    /// `[]-[R]` queries.
    pub c_3r: f64,
    /// `[]-[R]-[R]` queries.
    pub c_3rr: f64,
    /// `[R]-[R]` queries.
    pub c_rr: f64,
    /// Open edges of white vertices matched to random open edges.
    pub w: f64,
}

impl CutRates {
    pub fn action_counts(&self) -> [f64; 6] {
        [self.c_r, self.r, self.c_3r, self.c_3rr, self.c_rr, self.w]
    }
}

/// Solves the six balance equations for the action counts
/// `(c_R, r, c_3R, c_3RR, c_RR, w)` by LU decomposition and evaluates the
/// colour, good and bad rates from them.
pub fn solve_cut_rates(p: f64) -> Result<CutRates, EvolutionError> {
    if !(0.0..0.5).contains(&p) {
        return Err(EvolutionError::Singular { p });
    }
    let q = 1.0 - 2.0 * p;
    // columns: c_R, r, c_3R, c_3RR, c_RR, w
    #[rustfmt::skip]
    let a = Matrix6::new(
        2.0 * p, p - 1.0, p,    p,    p,    2.0 * p,
        q,       0.0,     -1.0, p,    0.0,  0.0,
        0.0,     0.0,     p,    -1.0, q,    0.0,
        p,       0.0,     0.0,  0.0,  -1.0, 0.0,
        0.0,     p,       0.0,  0.0,  p,    -1.0,
        q,       q,       q,    q,    q,    q,
    );
    let rhs = Vector6::new(0.0, 0.0, 0.0, 0.0, 0.0, 1.0);
    let x = a.lu().solve(&rhs).ok_or(EvolutionError::Singular { p })?;
    let (c_r, r, c_3r, c_3rr, c_rr, w) = (x[0], x[1], x[2], x[3], x[4], x[5]);
    let total = c_r + r + c_3r + c_3rr + c_rr + w;

    let v_r = -c_r - 2.0 * p * total + (1.0 - 2.0 * p) * (r + c_3rr) + (2.0 - 3.0 * p) * c_3r + p * c_rr;
    let g = 3.0 * p * c_r + 4.0 * p * r + (1.0 + p) * c_3r + (4.0 + p) * c_3rr + 8.0 * p * c_rr + w;
    let b = p * r + c_3rr + 2.0 * p * c_rr;
    Ok(CutRates { p, v_r, g, b, plain_rate: -1.0, c_r, r, c_3r, c_3rr, c_rr, w })
}

/// The rates multiplied through by `D(p)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormRates {
    pub v_r: f64,
    pub g: f64,
    pub b: f64,
    pub d: f64,
}

pub fn closed_form_rates(p: f64) -> ClosedFormRates {
    let p2 = p * p;
    let p3 = p2 * p;
    let p4 = p3 * p;
    let p5 = p4 * p;
    ClosedFormRates {
        v_r: 1.0 - 8.0 * p + 4.0 * p2 + 8.0 * p3 + 3.0 * p4 - 10.0 * p5,
        g: 1.0 + 8.0 * p - 11.0 * p2 - 6.0 * p3 + 12.0 * p5,
        b: p * (1.0 - p) * (1.0 - p) * (2.0 + p + 2.0 * p2),
        d: 2.0 - 4.0 * p - 4.0 * p2 + 8.0 * p3 + 2.0 * p4 - 4.0 * p5,
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum CutMode {
    #[default]
    ClosedForm,
    LinearSolve,
}

/// One round: `rat3` falls by `eps*D(q)` and the rest move by the matching
/// multiples of the rates.
pub fn cut_step(state: &mut CutEvolutionState, eps: f64, mode: CutMode) -> Result<Step, EvolutionError> {
    let Some(q) = edge_probability(state.rat2, state.rat3) else {
        return Ok(Step::Complete);
    };
    let (v_r, plain, g, b) = match mode {
        CutMode::ClosedForm => {
            let cf = closed_form_rates(q);
            (cf.v_r, -cf.d, cf.g, cf.b)
        }
        CutMode::LinearSolve => {
            let d = closed_form_rates(q).d;
            let rates = solve_cut_rates(q)?;
            (rates.v_r * d, rates.plain_rate * d, rates.g * d, rates.b * d)
        }
    };
    state.rat2 += eps * v_r;
    state.rat3 += eps * plain;
    state.good += eps * g;
    state.bad += eps * b;
    Ok(Step::Continue)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CutRules {
    pub mode: CutMode,
}

impl EvolutionRules for CutRules {
    type State = CutEvolutionState;

    fn name(&self) -> &'static str {
        match self.mode {
            CutMode::ClosedForm => "cut3",
            CutMode::LinearSolve => "cut3-linear",
        }
    }

    fn tracked_mass(&self, state: &CutEvolutionState) -> f64 {
        state.rat2 + state.rat3
    }

    fn step(&self, state: &mut CutEvolutionState, params: &EvolutionParams) -> Result<Step, EvolutionError> {
        cut_step(state, params.step_size, self.mode)
    }

    fn columns(&self, _params: &EvolutionParams) -> Vec<String> {
        ["good", "bad", "rat3", "rat2"].iter().map(|s| s.to_string()).collect()
    }

    fn row(&self, state: &CutEvolutionState) -> Vec<f64> {
        vec![state.good, state.bad, state.rat3, state.rat2]
    }

    fn proportion_columns(&self, _params: &EvolutionParams) -> Vec<usize> {
        vec![2, 3]
    }

    fn accumulator_columns(&self) -> Vec<usize> {
        vec![0, 1]
    }

    fn headline(&self, state: &CutEvolutionState) -> f64 {
        state.good
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::integrate;

    #[test]
    fn edge_probability_values() {
        assert_eq!(edge_probability(0.0, 1.0), Some(0.0));
        assert_eq!(edge_probability(1.0, 0.0), Some(0.5));
        assert!((edge_probability(0.5, 0.5).unwrap() - 0.2).abs() < 1e-15);
        assert_eq!(edge_probability(0.0, 0.0), None);
    }

    #[test]
    fn rates_at_zero() {
        let r = solve_cut_rates(0.0).unwrap();
        let expect = [0.5, 0.0, 0.5, 0.0, 0.0, 0.0];
        for (x, e) in r.action_counts().iter().zip(expect) {
            assert!((x - e).abs() < 1e-14, "{x} vs {e}");
        }
        assert!((r.v_r - 0.5).abs() < 1e-14);
        assert!((r.g - 0.5).abs() < 1e-14);
        assert!(r.b.abs() < 1e-14);
        assert_eq!(r.plain_rate, -1.0);
    }

    #[test]
    fn closed_form_constants() {
        let c = closed_form_rates(0.0);
        assert_eq!((c.v_r, c.g, c.b, c.d), (1.0, 1.0, 0.0, 2.0));
        assert_eq!(closed_form_rates(1.0).b, 0.0);
    }

    #[test]
    fn closed_form_matches_linear_solve() {
        for p in [0.1, 0.2, 0.3, 0.45] {
            let r = solve_cut_rates(p).unwrap();
            let c = closed_form_rates(p);
            assert!((c.v_r / c.d - r.v_r).abs() < 1e-12);
            assert!((c.g / c.d - r.g).abs() < 1e-12);
            assert!((c.b / c.d - r.b).abs() < 1e-12);
        }
    }

    #[test]
    fn near_half_counts_are_nonnegative() {
        let r = solve_cut_rates(0.49).unwrap();
        assert!(r.action_counts().iter().all(|x| x.is_finite() && *x >= -1e-12));
        assert!(solve_cut_rates(0.5).is_err());
        assert!(solve_cut_rates(-0.1).is_err());
    }

    #[test]
    fn first_step_from_initial_state() {
        let eps = 1e-6;
        for mode in [CutMode::ClosedForm, CutMode::LinearSolve] {
            let mut s = CutEvolutionState::initial();
            cut_step(&mut s, eps, mode).unwrap();
            assert!((s.rat2 - eps).abs() < 1e-18);
            assert!((s.rat3 - (1.0 - 2.0 * eps)).abs() < 1e-15);
            assert!((s.good - eps).abs() < 1e-18);
            assert_eq!(s.bad, 0.0);
        }
    }

    #[test]
    fn coarse_run_accounts_for_all_edges() {
        let params = EvolutionParams::new(1e-4);
        let run = integrate(CutEvolutionState::initial(), &CutRules::default(), &params).unwrap();
        let s = run.final_state;
        assert!((s.good - 1.34105).abs() < 1e-3);
        assert!((s.good + s.bad - 1.5).abs() < 1e-3);
    }
}
