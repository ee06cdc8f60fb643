//! Independent-set evolutions on 3- and 4-regular configuration graphs.
//!
//! State is the survival degree distribution relative to the original
//! vertex count. Each round redistributes the pending open-edge deletions,
//! contracts every 2-vertex (each contraction adds one vertex to the
//! independent set), then deletes mass from the highest occupied degree.
//! The 3-regular run optionally probes the four neighbours of a deleted
//! 4-vertex; the 4-regular run replaces low-degree deletions by probing a
//! 3-vertex.

use serde::{Deserialize, Serialize};

use super::{EvolutionError, EvolutionParams, EvolutionRules, Step};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeState {
    /// `v[d]`: surviving mass of degree `d`, for `d` in `0..=cap`. Entries 0 and 1 stay unused.
    pub v: Vec<f64>,
    pub independent: f64,
    /// Open-edge deletions not yet charged to any degree class.
    pub erase: f64,
    /// Mass removed by direct deletion, per degree.
    pub deleted: Vec<f64>,
}

impl DegreeState {
    /// All mass on degree `d`.
    pub fn regular(d: usize, cap: usize) -> Self {
        assert!(d <= cap, "degree {d} above cap {cap}");
        let mut v = vec![0.0; cap + 1];
        v[d] = 1.0;
        Self { v, independent: 0.0, erase: 0.0, deleted: vec![0.0; cap + 1] }
    }

    pub fn cap(&self) -> usize {
        self.v.len() - 1
    }

    /// Open-edge mass `sum d*v[d]` over classes `d >= 3` above the dust level.
    pub fn open_edge_mass(&self, eps: f64) -> f64 {
        (3..self.v.len()).filter(|&i| self.v[i] > eps).map(|i| i as f64 * self.v[i]).sum()
    }

    /// Survival mass over degrees `3..=cap`.
    pub fn survival_mass(&self) -> f64 {
        self.v[3..].iter().sum()
    }

    /// Degree proportions `3..=cap` normalized by survival mass.
    pub fn normalized(&self) -> Vec<f64> {
        let total = self.survival_mass();
        self.v[3..].iter().map(|x| x / total).collect()
    }

    /// Highest degree `>= floor` with `v[d] >= eps`, stopping at `floor`.
    fn highest_above(&self, floor: usize, eps: f64) -> usize {
        let mut max = self.cap();
        while max > floor && self.v[max] < eps {
            max -= 1;
        }
        max
    }
}

/// Charges the erase backlog to degree classes in proportion to `d*v[d]`;
/// every hit moves mass from `d` to `d-1`. The backlog is reset to `-eps`.
pub fn redistribute_erasures(state: &mut DegreeState, eps: f64) -> Result<(), EvolutionError> {
    if state.erase <= eps {
        return Ok(());
    }
    let s = state.open_edge_mass(eps);
    if !(s > 0.0) {
        return Err(EvolutionError::Exhausted { backlog: state.erase });
    }
    let r = (state.erase + eps) / s;
    for i in 3..state.v.len() {
        if state.v[i] > eps {
            let del = r * i as f64 * state.v[i];
            state.v[i] -= del;
            state.v[i - 1] += del;
        }
    }
    state.erase = -eps;
    Ok(())
}

/// Contracts all 2-vertex mass. Both neighbours are drawn by open-edge
/// weight; the merged vertex has degree `i+j-2`, and merges beyond the cap
/// are deleted outright (their edges go to the erase backlog).
///
/// `open_edges` is the open-edge mass at the start of the block.
pub fn apply_contractions(state: &mut DegreeState, eps: f64, open_edges: f64) -> Result<(), EvolutionError> {
    if state.v[2] <= eps {
        return Ok(());
    }
    if !(open_edges > 0.0) {
        return Err(EvolutionError::Exhausted { backlog: state.v[2] });
    }
    let deg = state.v.len();
    let s = open_edges;
    let r = (state.v[2] + eps) / s;
    let mut add = vec![0.0; 2 * deg - 3];
    for i in 3..deg {
        for j in 3..deg {
            add[i + j - 2] += i as f64 * state.v[i] * j as f64 * state.v[j];
        }
    }
    state.independent += state.v[2] + eps;
    state.v[2] = -eps;
    for i in 3..deg {
        state.v[i] += r * (add[i] / s - 2.0 * i as f64 * state.v[i]);
    }
    for (i, a) in add.iter().enumerate().skip(deg) {
        state.erase += i as f64 * r * a / s;
    }
    Ok(())
}

/// Deletes `2*eps` mass of the highest occupied degree. When that degree is
/// 4 and `improvement` is on, also applies the neighbour-probe corrections.
///
/// `open_edges` is the open-edge mass used by the contraction block of the
/// same round.
pub fn is3_delete_step(state: &mut DegreeState, eps: f64, improvement: bool, open_edges: f64) -> Step {
    if !(3..state.v.len()).any(|d| state.v[d] > eps) {
        return Step::Complete;
    }
    let max = state.highest_above(4, eps);
    state.v[max] -= 2.0 * eps;
    state.deleted[max] += 2.0 * eps;
    state.erase += 2.0 * max as f64 * eps;

    if max == 4 && improvement {
        let s = open_edges;
        let (v3, v4) = (state.v[3], state.v[4]);

        // all four neighbours are 4-vertices
        let p4444 = 2.0 * eps * (4.0 * v4 / s).powi(4);
        state.v[3] -= 4.0 * p4444;
        state.erase += 12.0 * p4444;
        state.independent += p4444;

        let p4443 = 8.0 * eps * (4.0 * v4 / s).powi(3) * 3.0 * v3 / s;
        state.v[3] -= 3.0 * p4443;
        state.v[2] -= p4443;
        state.erase += 11.0 * p4443;
        state.independent += p4443;

        let p4433 = 12.0 * eps * (12.0 * v4 * v3 / s / s).powi(2);
        state.v[4] += p4433;
        state.v[3] -= 2.0 * p4433;
        state.v[2] -= 2.0 * p4433;
        state.erase += 6.0 * p4433;
        state.independent += p4433;
    }
    Step::Continue
}

/// The 4-regular fallback when no degree >= 6 is occupied: probe a 3-vertex;
/// delete it if all neighbours have degree 3, otherwise delete its
/// highest-degree neighbour and contract at it.
pub fn is4_special_step(state: &mut DegreeState, eps: f64) -> Step {
    let (v3, v4, v5) = (state.v[3], state.v[4], state.v[5]);
    let denom = 3.0 * v3 + 4.0 * v4 + 5.0 * v5;
    if !(denom > 0.0) || (v3 <= 0.0 && v4 <= 0.0) {
        return Step::Complete;
    }
    let rat3 = 3.0 * v3 / denom;
    let rat4 = 4.0 * v4 / denom;
    let rat5 = 5.0 * v5 / denom;
    let r33 = rat3 * rat3;
    let r333 = r33 * rat3;
    state.v[2] += eps * 3.0 * r333;
    state.v[3] += eps * (-1.0 - 3.0 * rat3);
    state.v[4] += eps * 3.0 * (-rat4 + r33 * (1.0 - rat3));
    state.v[5] += eps * 3.0 * (-rat5 + rat3 * rat4 * (rat4 + 2.0 * rat5));
    state.independent += eps * (1.0 - r333);
    state.erase += eps * (6.0 - 12.0 * r33 + 6.0 * r333 + (15.0 * rat3 * rat4 + 3.0) * (rat4 + 2.0 * rat5));
    Step::Continue
}

/// Edge-endpoint probability of hitting a 4-vertex when a fraction `lambda`
/// of survivors are 4-vertices and the rest 3-vertices.
pub fn mu_of_lambda(lambda: f64) -> f64 {
    4.0 * lambda / (3.0 + lambda)
}

/// Expected totals per unit of deleted 4-vertex mass while only degrees 3
/// and 4 are occupied (deletion cascade through 5- and 6-vertices included).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Phase1Rates {
    pub mu: f64,
    pub edge_deletions: f64,
    pub contractions: f64,
    pub delta_v3: f64,
    pub delta_v4: f64,
}

/// `(10 - 4mu) * mu`: expected open edges deleted by clearing the 5- and
/// 6-vertices created by one open-edge deletion. The cascade is subcritical
/// below 1.
pub fn criticality(mu: f64) -> f64 {
    (10.0 - 4.0 * mu) * mu
}

pub fn phase1_rates(mu: f64) -> Result<Phase1Rates, EvolutionError> {
    let crit = criticality(mu);
    if crit >= 1.0 {
        return Err(EvolutionError::OutOfPhase { criticality: crit });
    }
    let den = 1.0 - crit;
    let q = 1.0 - mu;
    Ok(Phase1Rates {
        mu,
        edge_deletions: 4.0 / den,
        contractions: 4.0 * q / den,
        delta_v3: (4.0 * mu - 4.0 * q * (3.0 - 2.0 * mu)) / den,
        delta_v4: (4.0 * q * q * q - 4.0 * mu - 1.0) / den,
    })
}

/// Root of `4mu^2 - 10mu + 1`, where phase 1 ends.
pub fn critical_mu() -> f64 {
    (10.0 - 84f64.sqrt()) / 8.0
}

/// Phase-1 totals from the same branching argument with the cascade
/// factor counted per open-edge deletion: only a `1 - mu` share of the
/// deletions creates a 2-vertex, so the denominator is
/// `1 - (1-mu)(10-4mu)mu`. Agrees with [`phase1_rates`] to first order in
/// `mu` and tracks the integrator over the whole phase.
pub fn phase1_branching_rates(mu: f64) -> Result<Phase1Rates, EvolutionError> {
    let q = 1.0 - mu;
    let crit = q * criticality(mu);
    if crit >= 1.0 {
        return Err(EvolutionError::OutOfPhase { criticality: crit });
    }
    let edges = 4.0 / (1.0 - crit);
    Ok(Phase1Rates {
        mu,
        edge_deletions: edges,
        contractions: q * edges,
        delta_v3: edges * (6.0 * mu - 3.0 - 2.0 * mu * mu),
        delta_v4: edges * (q * (1.0 - 4.0 * mu + mu * mu) - mu) - 1.0,
    })
}

fn columns(cap: usize) -> Vec<String> {
    let mut cols = vec!["independent".to_string(), "erase".to_string()];
    cols.extend((2..=cap).map(|d| format!("v{d}")));
    cols
}

fn row(state: &DegreeState) -> Vec<f64> {
    let mut out = vec![state.independent, state.erase];
    out.extend_from_slice(&state.v[2..]);
    out
}

/// Erase backlog and every degree class.
fn proportion_columns(cap: usize) -> Vec<usize> {
    (1..=cap).collect()
}

/// Shared first half of a round: erase redistribution then contraction.
/// Returns the open-edge mass the contraction block used, or `None` when
/// the open edges ran out mid-round (the process is over).
fn redistribute_and_contract(state: &mut DegreeState, eps: f64) -> Result<Option<f64>, EvolutionError> {
    let run = |state: &mut DegreeState| {
        redistribute_erasures(state, eps)?;
        let s = state.open_edge_mass(eps);
        apply_contractions(state, eps, s)?;
        Ok(s)
    };
    match run(state) {
        Ok(s) => Ok(Some(s)),
        Err(EvolutionError::Exhausted { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

/// 3-regular independent-set process.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Is3Rules {
    pub improvement: bool,
}

impl Default for Is3Rules {
    fn default() -> Self {
        Self { improvement: true }
    }
}

impl Is3Rules {
    pub fn initial(&self, params: &EvolutionParams) -> DegreeState {
        DegreeState::regular(3, params.max_degree_cap)
    }
}

impl EvolutionRules for Is3Rules {
    type State = DegreeState;

    fn name(&self) -> &'static str {
        if self.improvement {
            "is3"
        } else {
            "is3-plain"
        }
    }

    fn tracked_mass(&self, state: &DegreeState) -> f64 {
        state.v[3]
    }

    fn step(&self, state: &mut DegreeState, params: &EvolutionParams) -> Result<Step, EvolutionError> {
        let eps = params.step_size;
        let Some(s) = redistribute_and_contract(state, eps)? else {
            return Ok(Step::Complete);
        };
        Ok(is3_delete_step(state, eps, self.improvement, s))
    }

    fn columns(&self, params: &EvolutionParams) -> Vec<String> {
        columns(params.max_degree_cap)
    }

    fn row(&self, state: &DegreeState) -> Vec<f64> {
        row(state)
    }

    fn proportion_columns(&self, params: &EvolutionParams) -> Vec<usize> {
        proportion_columns(params.max_degree_cap)
    }

    fn accumulator_columns(&self) -> Vec<usize> {
        vec![0]
    }

    fn headline(&self, state: &DegreeState) -> f64 {
        state.independent
    }
}

/// 4-regular independent-set process.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Is4Rules;

impl Is4Rules {
    pub fn initial(&self, params: &EvolutionParams) -> DegreeState {
        DegreeState::regular(4, params.max_degree_cap)
    }
}

impl EvolutionRules for Is4Rules {
    type State = DegreeState;

    fn name(&self) -> &'static str {
        "is4"
    }

    fn tracked_mass(&self, state: &DegreeState) -> f64 {
        state.v[4]
    }

    fn step(&self, state: &mut DegreeState, params: &EvolutionParams) -> Result<Step, EvolutionError> {
        let eps = params.step_size;
        if redistribute_and_contract(state, eps)?.is_none() {
            return Ok(Step::Complete);
        }
        let max = state.highest_above(5, eps);
        if max > 5 {
            state.v[max] -= 2.0 * eps;
            state.deleted[max] += 2.0 * eps;
            state.erase += 2.0 * max as f64 * eps;
            Ok(Step::Continue)
        } else {
            Ok(is4_special_step(state, eps))
        }
    }

    fn columns(&self, params: &EvolutionParams) -> Vec<String> {
        columns(params.max_degree_cap)
    }

    fn row(&self, state: &DegreeState) -> Vec<f64> {
        row(state)
    }

    fn proportion_columns(&self, params: &EvolutionParams) -> Vec<usize> {
        proportion_columns(params.max_degree_cap)
    }

    fn accumulator_columns(&self) -> Vec<usize> {
        vec![0]
    }

    fn headline(&self, state: &DegreeState) -> f64 {
        state.independent
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::integrate;

    fn state(pairs: &[(usize, f64)]) -> DegreeState {
        let mut s = DegreeState::regular(3, 7);
        s.v[3] = 0.0;
        for &(d, x) in pairs {
            s.v[d] = x;
        }
        s
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn redistribute_single_class() {
        let mut s = state(&[(3, 1.0)]);
        s.erase = 0.3;
        redistribute_erasures(&mut s, 0.0).unwrap();
        assert!(close(s.v[3], 0.7) && close(s.v[2], 0.3));
    }

    #[test]
    fn redistribute_empty_backlog_is_noop() {
        let mut s = state(&[(3, 0.6), (4, 0.4)]);
        let before = s.clone();
        redistribute_erasures(&mut s, 1e-7).unwrap();
        assert_eq!(s, before);
    }

    #[test]
    fn redistribute_two_classes() {
        let mut s = state(&[(3, 0.5), (4, 0.5)]);
        s.erase = 0.07;
        redistribute_erasures(&mut s, 0.0).unwrap();
        assert!(close(s.v[4], 0.46));
        assert!(close(s.v[3], 0.51));
        assert!(close(s.v[2], 0.03));
    }

    #[test]
    fn redistribute_without_open_edges_is_exhausted() {
        let mut s = state(&[]);
        s.erase = 0.1;
        assert!(matches!(redistribute_erasures(&mut s, 0.0), Err(EvolutionError::Exhausted { .. })));
    }

    #[test]
    fn contraction_of_cubic_mass() {
        let c = 1e-3;
        let mut s = state(&[(3, 1.0), (2, c)]);
        let open = s.open_edge_mass(0.0);
        apply_contractions(&mut s, 0.0, open).unwrap();
        assert!(close(s.v[4], c));
        assert!(close(s.v[3], 1.0 - 2.0 * c));
        assert!(close(s.independent, c));
        assert_eq!(s.v[2], 0.0);
    }

    #[test]
    fn contraction_without_two_vertices_is_noop() {
        let mut s = state(&[(3, 1.0)]);
        let before = s.clone();
        apply_contractions(&mut s, 0.0, 3.0).unwrap();
        assert_eq!(s, before);
    }

    #[test]
    fn contraction_overflow_goes_to_erase() {
        let c = 1e-3;
        let mut s = state(&[(7, 1.0), (2, c)]);
        let open = s.open_edge_mass(0.0);
        apply_contractions(&mut s, 0.0, open).unwrap();
        assert!(close(s.erase, 12.0 * c));
        assert!(close(s.v[7], 1.0 - 2.0 * c));
        assert!((3..7).all(|d| s.v[d] == 0.0));
    }

    #[test]
    fn delete_from_highest_class() {
        let eps = 1e-6;
        let mut s = state(&[(3, 0.5), (4, 0.2), (6, 0.1)]);
        let open = s.open_edge_mass(eps);
        assert_eq!(is3_delete_step(&mut s, eps, true, open), Step::Continue);
        assert!(close(s.v[6], 0.1 - 2.0 * eps));
        assert!(close(s.erase, 12.0 * eps));
        assert!(close(s.v[4], 0.2) && close(s.v[3], 0.5));
    }

    #[test]
    fn improvement_only_changes_four_vertex_deletions() {
        let eps = 1e-6;
        let base = state(&[(3, 0.5), (4, 0.3)]);
        let open = base.open_edge_mass(eps);
        let mut plain = base.clone();
        let mut improved = base.clone();
        is3_delete_step(&mut plain, eps, false, open);
        is3_delete_step(&mut improved, eps, true, open);
        assert!(close(plain.v[4], 0.3 - 2.0 * eps));
        assert!(close(plain.erase, 8.0 * eps));
        assert_eq!(plain.independent, 0.0);
        assert!(improved.independent > 0.0);
        assert!(improved.v[3] < plain.v[3]);
    }

    #[test]
    fn empty_state_completes() {
        let mut s = state(&[]);
        assert_eq!(is3_delete_step(&mut s, 1e-7, true, 0.0), Step::Complete);
        assert_eq!(is4_special_step(&mut s, 1e-7), Step::Complete);
    }

    #[test]
    fn is4_probe_all_cubic() {
        let eps = 1e-6;
        let mut s = state(&[(3, 1.0)]);
        is4_special_step(&mut s, eps);
        assert!(close(s.v[3], 1.0 - 4.0 * eps));
        assert!(close(s.v[2], 3.0 * eps));
        assert!(close(s.independent, 0.0));
        assert!(close(s.erase, 0.0));
    }

    #[test]
    fn is4_probe_half_and_half() {
        let eps = 1e-6;
        // 3*v3 = 4*v4 gives rat3 = rat4 = 0.5
        let mut s = state(&[(3, 0.4), (4, 0.3)]);
        is4_special_step(&mut s, eps);
        assert!(close(s.independent, 0.875 * eps));
    }

    #[test]
    fn is4_probe_without_three_or_four_vertices() {
        let mut s = state(&[(5, 1.0)]);
        assert_eq!(is4_special_step(&mut s, 1e-6), Step::Complete);
    }

    #[test]
    fn mu_values() {
        assert_eq!(mu_of_lambda(0.0), 0.0);
        assert_eq!(mu_of_lambda(1.0), 1.0);
        assert!(close(mu_of_lambda(1.0 / 3.0), 0.4));
    }

    #[test]
    fn phase1_values() {
        let r = phase1_rates(0.0).unwrap();
        assert_eq!((r.edge_deletions, r.contractions, r.delta_v3, r.delta_v4), (4.0, 4.0, -12.0, 3.0));
        let r = phase1_rates(0.05).unwrap();
        assert!((r.edge_deletions - 4.0 / 0.51).abs() < 1e-12);
        assert!((r.edge_deletions - 7.843).abs() < 1e-3);
        assert!((critical_mu() - 0.104356).abs() < 1e-6);
        assert!(matches!(phase1_rates(critical_mu()), Err(EvolutionError::OutOfPhase { .. })));
        assert!(phase1_rates(0.2).is_err());
    }

    #[test]
    fn branching_rates_agree_at_small_mu() {
        let a = phase1_branching_rates(0.0).unwrap();
        let b = phase1_rates(0.0).unwrap();
        assert_eq!((a.edge_deletions, a.contractions), (b.edge_deletions, b.contractions));
        assert!((a.delta_v3 - b.delta_v3).abs() < 1e-12 && (a.delta_v4 - b.delta_v4).abs() < 1e-12);
        let mu = 1e-4;
        let (a, b) = (phase1_branching_rates(mu).unwrap(), phase1_rates(mu).unwrap());
        assert!((a.delta_v3 / b.delta_v3 - 1.0).abs() < 1e-3);
        assert!(phase1_branching_rates(critical_mu()).is_ok());
    }

    #[test]
    fn short_runs_complete_with_finite_state() {
        let params = EvolutionParams::new(1e-4);
        let run = integrate(Is3Rules::default().initial(&params), &Is3Rules::default(), &params).unwrap();
        assert!((run.final_state.independent - 0.4453).abs() < 2e-3);
        let run = integrate(Is4Rules.initial(&params), &Is4Rules, &params).unwrap();
        assert!((run.final_state.independent - 0.4041).abs() < 2e-3);
    }

    #[test]
    fn trajectory_columns() {
        let params = EvolutionParams::new(1e-3).with_record_interval(50);
        let rules = Is3Rules::default();
        let run = integrate(rules.initial(&params), &rules, &params).unwrap();
        let csv = run.trajectory.to_csv(&rules);
        assert!(csv.starts_with("round,independent,erase,v2,v3,v4,v5,v6,v7\n"));
        assert_eq!(csv.lines().count(), run.trajectory.len() + 1);
    }
}
