//! Incremental evaluation of the posted capacity constraints.
//!
//! The engine owns the delay of every waiting flight and keeps, per posted
//! constraint, the number of candidates whose delayed entry currently falls
//! inside the constraint's window. Violation is measured as overflow,
//! `max(0, count - residual_cap)`, summed over posted constraints.

use serde::{Deserialize, Serialize};

use crate::instance::TimeMin;
use crate::preprocess::PreprocessedModel;

/// Scaling applied to the demand standard deviation so that the balancing
/// term of the objective stays integral.
pub const BALANCE_SCALE: f64 = 1000.0;

/// Ground-hold delay (minutes) per decision variable.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Assignment(Vec<u32>);

impl Assignment {
    pub fn zeros(num_vars: usize) -> Self {
        Self(vec![0; num_vars])
    }

    pub fn from_delays(delays: Vec<u32>) -> Self {
        Self(delays)
    }

    #[inline]
    pub fn get(&self, var: usize) -> u32 {
        self.0[var]
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<u32> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total_delay(&self) -> u64 {
        self.0.iter().map(|&d| d as u64).sum()
    }
}

/// Integer weights of the objective terms: total delay, overflow, and
/// demand standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectiveWeights {
    pub delay: i64,
    pub violation: i64,
    pub balance: i64,
}

impl Default for ObjectiveWeights {
    fn default() -> Self {
        Self {
            delay: 1,
            violation: 1,
            balance: 0,
        }
    }
}

#[inline]
fn overflow(count: i64, residual_cap: i64) -> i64 {
    (count - residual_cap).max(0)
}

/// Current assignment plus incrementally maintained violation data.
#[derive(Debug, Clone)]
pub struct Engine<'m> {
    model: &'m PreprocessedModel,
    delays: Vec<u32>,
    counts: Vec<i64>,
    total_violations: i64,
    /// Number of violated constraints whose window currently holds the var.
    var_violations: Vec<u32>,
    violated_vars: Vec<usize>,
    /// Position in `violated_vars`, or `usize::MAX`.
    violated_pos: Vec<usize>,
}

impl<'m> Engine<'m> {
    /// Engine at the initial all-zero assignment.
    pub fn new(model: &'m PreprocessedModel) -> Self {
        Self::with_assignment(model, Assignment::zeros(model.num_vars()))
    }

    pub fn with_assignment(model: &'m PreprocessedModel, assignment: Assignment) -> Self {
        assert_eq!(
            assignment.len(),
            model.num_vars(),
            "assignment size mismatch"
        );
        let g = model.max_hold();
        assert!(
            assignment.as_slice().iter().all(|&d| d <= g),
            "delay outside [0, {g}]"
        );
        let n = model.num_vars();
        let mut engine = Self {
            model,
            delays: assignment.into_inner(),
            counts: Vec::new(),
            total_violations: 0,
            var_violations: vec![0; n],
            violated_vars: Vec::new(),
            violated_pos: vec![usize::MAX; n],
        };
        engine.rebuild();
        engine
    }

    fn rebuild(&mut self) {
        let (counts, total) = self.recompute();
        self.counts = counts;
        self.total_violations = total;
        self.var_violations.fill(0);
        for (k, c) in self.model.posted.iter().enumerate() {
            if self.counts[k] <= c.residual_cap {
                continue;
            }
            for cand in &self.model.candidate_list(k).flights {
                if c.span
                    .contains(cand.entry + self.delays[cand.var] as TimeMin)
                {
                    self.var_violations[cand.var] += 1;
                }
            }
        }
        self.violated_vars.clear();
        self.violated_pos.fill(usize::MAX);
        for v in 0..self.delays.len() {
            if self.var_violations[v] > 0 {
                self.violated_pos[v] = self.violated_vars.len();
                self.violated_vars.push(v);
            }
        }
    }

    /// Per-constraint counts and total overflow computed from scratch.
    pub fn recompute(&self) -> (Vec<i64>, i64) {
        let mut counts = Vec::with_capacity(self.model.posted.len());
        let mut total = 0;
        for (k, c) in self.model.posted.iter().enumerate() {
            let count = self
                .model
                .candidate_list(k)
                .flights
                .iter()
                .filter(|cand| {
                    c.span
                        .contains(cand.entry + self.delays[cand.var] as TimeMin)
                })
                .count() as i64;
            total += overflow(count, c.residual_cap);
            counts.push(count);
        }
        (counts, total)
    }

    pub fn model(&self) -> &'m PreprocessedModel {
        self.model
    }

    #[inline]
    pub fn delay(&self, var: usize) -> u32 {
        self.delays[var]
    }

    pub fn delays(&self) -> &[u32] {
        &self.delays
    }

    pub fn assignment(&self) -> Assignment {
        Assignment(self.delays.clone())
    }

    #[inline]
    pub fn total_violations(&self) -> i64 {
        self.total_violations
    }

    pub fn counts(&self) -> &[i64] {
        &self.counts
    }

    pub fn total_delay(&self) -> u64 {
        self.delays.iter().map(|&d| d as u64).sum()
    }

    #[inline]
    pub fn variable_violations(&self, var: usize) -> u32 {
        self.var_violations[var]
    }

    /// Variables with `variable_violations > 0`, in no particular order.
    pub fn violated_vars(&self) -> &[usize] {
        &self.violated_vars
    }

    /// Change in total overflow if `var` were assigned `delay`.
    pub fn assign_delta(&self, var: usize, delay: u32) -> i64 {
        let old = self.delays[var] as TimeMin;
        let new = delay as TimeMin;
        if old == new {
            return 0;
        }
        let mut delta = 0;
        for m in self.model.memberships(var) {
            let k = m.constraint as usize;
            let c = &self.model.posted[k];
            let was_in = c.span.contains(m.entry + old);
            let is_in = c.span.contains(m.entry + new);
            if was_in == is_in {
                continue;
            }
            let count = self.counts[k];
            if was_in {
                if count > c.residual_cap {
                    delta -= 1;
                }
            } else if count >= c.residual_cap {
                delta += 1;
            }
        }
        delta
    }

    /// Sets `var` to `delay` and returns the change in total overflow.
    pub fn commit(&mut self, var: usize, delay: u32) -> i64 {
        debug_assert!(delay <= self.model.max_hold());
        let old = self.delays[var] as TimeMin;
        let new = delay as TimeMin;
        if old == new {
            return 0;
        }
        let before = self.total_violations;
        let model = self.model;
        for m in model.memberships(var) {
            let k = m.constraint as usize;
            let c = &model.posted[k];
            let was_in = c.span.contains(m.entry + old);
            let is_in = c.span.contains(m.entry + new);
            if was_in == is_in {
                continue;
            }
            let was_violated = self.counts[k] > c.residual_cap;
            if was_in {
                self.counts[k] -= 1;
                if was_violated {
                    self.total_violations -= 1;
                    self.bump(var, -1);
                    if self.counts[k] <= c.residual_cap {
                        self.bump_members(k, var, -1);
                    }
                }
            } else {
                self.counts[k] += 1;
                let now_violated = self.counts[k] > c.residual_cap;
                if now_violated {
                    self.total_violations += 1;
                    self.bump(var, 1);
                    if !was_violated {
                        self.bump_members(k, var, 1);
                    }
                }
            }
        }
        self.delays[var] = delay;
        self.total_violations - before
    }

    /// Adjusts the counter of every var (other than `skip`) currently inside
    /// constraint `k`'s window.
    fn bump_members(&mut self, k: usize, skip: usize, by: i32) {
        let model = self.model;
        let span = model.posted[k].span;
        for cand in &model.candidate_list(k).flights {
            if cand.var != skip && span.contains(cand.entry + self.delays[cand.var] as TimeMin) {
                self.bump(cand.var, by);
            }
        }
    }

    #[inline]
    fn bump(&mut self, var: usize, by: i32) {
        let before = self.var_violations[var];
        let after = (before as i32 + by) as u32;
        self.var_violations[var] = after;
        if before == 0 && after > 0 {
            self.violated_pos[var] = self.violated_vars.len();
            self.violated_vars.push(var);
        } else if before > 0 && after == 0 {
            let pos = self.violated_pos[var];
            self.violated_vars.swap_remove(pos);
            if let Some(&moved) = self.violated_vars.get(pos) {
                self.violated_pos[moved] = pos;
            }
            self.violated_pos[var] = usize::MAX;
        }
    }

    /// Entering demand for every (window, relevant cell) pair, window-major,
    /// including the known airborne part.
    pub fn demand_matrix(&self) -> Vec<u32> {
        let model = self.model;
        model
            .candidates
            .lists()
            .iter()
            .map(|list| {
                let span = model.params.window_unchecked(list.window);
                let inside = list
                    .flights
                    .iter()
                    .filter(|c| span.contains(c.entry + self.delays[c.var] as TimeMin))
                    .count() as u32;
                model.known.get(list.window, list.cell) + inside
            })
            .collect()
    }

    /// Weighted objective. The balancing term is recomputed from scratch
    /// and only evaluated when its weight is non-zero.
    pub fn objective(&self, weights: &ObjectiveWeights) -> i64 {
        let mut value =
            weights.delay * self.total_delay() as i64 + weights.violation * self.total_violations;
        if weights.balance != 0 {
            let sigma = population_std_dev(&self.demand_matrix());
            value += weights.balance * (BALANCE_SCALE * sigma).round() as i64;
        }
        value
    }
}

pub(crate) fn population_std_dev(values: &[u32]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let n = values.len() as f64;
    let mean = values.iter().map(|&v| v as f64).sum::<f64>() / n;
    let var = values
        .iter()
        .map(|&v| {
            let d = v as f64 - mean;
            d * d
        })
        .sum::<f64>()
        / n;
    var.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{Cell, CellEntry, Flight, Instance, ScenarioParams};

    /// One cell, one window [40, 100), cap 2, three waiting flights entering
    /// at 90, 95, 99.
    fn three_in_one() -> Instance {
        with_cap(2)
    }

    fn with_cap(cap: i64) -> Instance {
        let params = ScenarioParams {
            now: 0,
            start: 100,
            end: 100,
            window: 60,
            step: 10,
            max_hold: 10,
            cap,
        };
        let flights = [90, 95, 99]
            .iter()
            .enumerate()
            .map(|(i, &t)| Flight {
                id: format!("f{i}"),
                departure: t,
                arrival: t + 20,
                entries: vec![CellEntry { time: t, cell: 0 }],
            })
            .collect();
        Instance::new(
            params,
            vec![Cell {
                id: "c".into(),
                cap: None,
            }],
            flights,
        )
        .unwrap()
    }

    fn scratch_total(model: &PreprocessedModel, delays: &[u32]) -> i64 {
        model
            .posted
            .iter()
            .enumerate()
            .map(|(k, c)| {
                let count = model
                    .candidate_list(k)
                    .flights
                    .iter()
                    .filter(|cand| c.span.contains(cand.entry + delays[cand.var] as i64))
                    .count() as i64;
                (count - c.residual_cap).max(0)
            })
            .sum()
    }

    #[test]
    fn moving_one_flight_out_relieves_overflow() {
        let inst = three_in_one();
        let model = PreprocessedModel::build(&inst);
        assert_eq!(model.posted.len(), 1);
        let mut engine = Engine::new(&model);
        assert_eq!(engine.total_violations(), 1);
        assert_eq!(engine.assign_delta(2, 0), 0);
        assert_eq!(engine.assign_delta(2, 1), -1);
        assert_eq!(engine.assign_delta(0, 9), 0);
        assert_eq!(engine.assign_delta(0, 10), -1);
        for v in 0..3 {
            assert_eq!(engine.variable_violations(v), 1);
        }
        let delta = engine.commit(2, 1);
        assert_eq!(delta, -1);
        assert_eq!(engine.total_violations(), 0);
        assert!(engine.violated_vars().is_empty());
        assert_eq!(engine.variable_violations(0), 0);
        assert_eq!(engine.objective(&ObjectiveWeights::default()), 1);
    }

    #[test]
    fn moving_into_saturated_window_costs_overflow() {
        let inst = three_in_one();
        let model = PreprocessedModel::build(&inst);
        let mut engine = Engine::with_assignment(&model, Assignment::from_delays(vec![0, 6, 5]));
        // Entries now at 90, 101, 104: count 1, cap 2.
        assert_eq!(engine.total_violations(), 0);
        assert_eq!(engine.commit(1, 0), 0);
        assert_eq!(engine.assign_delta(2, 0), 1);
        assert_eq!(engine.commit(2, 0), 1);
        assert_eq!(
            engine.total_violations(),
            scratch_total(&model, engine.delays())
        );
    }

    #[test]
    fn commit_and_commit_back_restores_counts() {
        let inst = three_in_one();
        let model = PreprocessedModel::build(&inst);
        let mut engine = Engine::new(&model);
        let initial = engine.counts().to_vec();
        let quoted = engine.assign_delta(1, 7);
        assert_eq!(engine.commit(1, 7), quoted);
        assert_eq!(engine.commit(1, 7), 0);
        engine.commit(1, 0);
        assert_eq!(engine.counts(), initial.as_slice());
        assert_eq!(engine.total_violations(), 1);
        assert_eq!(engine.violated_vars().len(), 3);
    }

    #[test]
    fn objective_terms() {
        let inst = three_in_one();
        let model = PreprocessedModel::build(&inst);
        let engine = Engine::with_assignment(&model, Assignment::from_delays(vec![3, 5, 0]));
        // Entries at 93, 100, 99 -> two inside, no overflow.
        assert_eq!(engine.total_violations(), 0);
        let w = ObjectiveWeights::default();
        assert_eq!(engine.objective(&w), 8);
        let balance = ObjectiveWeights {
            delay: 0,
            violation: 1,
            balance: 1,
        };
        // single (cell, window) pair -> sigma 0
        assert_eq!(engine.objective(&balance), 0);
        assert_eq!(population_std_dev(&[1, 1, 1, 1]), 0.0);
        assert!((population_std_dev(&[1, 2, 3, 4]) - 1.25f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn objective_sums_delay_and_violation_terms() {
        // cap 0: entries 93 and 99 stay inside -> overflow 2
        let inst = with_cap(0);
        let model = PreprocessedModel::build(&inst);
        let engine = Engine::with_assignment(&model, Assignment::from_delays(vec![3, 5, 0]));
        assert_eq!(engine.total_violations(), 2);
        let w = ObjectiveWeights {
            delay: 1,
            violation: 1,
            balance: 0,
        };
        assert_eq!(engine.objective(&w), 10);
        assert_eq!(
            Engine::new(&PreprocessedModel::build(&with_cap(3))).objective(&w),
            0
        );
    }

    mod props {
        use super::*;
        use crate::generator::{tiny, TinyConfig};
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]
            #[test]
            fn incremental_matches_scratch(seed in 0u64..10_000, moves in proptest::collection::vec((0usize..64, 0u32..64), 1..200)) {
                let inst = tiny(&TinyConfig { seed, waiting: 6, cells: 3, max_hold: 15, airborne: 3 }).unwrap();
                let model = PreprocessedModel::build(&inst);
                prop_assume!(model.num_vars() > 0);
                let mut engine = Engine::new(&model);
                for (v, d) in moves {
                    let var = v % model.num_vars();
                    let delay = d % (model.max_hold() + 1);
                    let quoted = engine.assign_delta(var, delay);
                    let applied = engine.commit(var, delay);
                    prop_assert_eq!(quoted, applied);
                    let (counts, total) = engine.recompute();
                    prop_assert_eq!(engine.counts(), counts.as_slice());
                    prop_assert_eq!(engine.total_violations(), total);
                    prop_assert!(total >= 0);
                    let fresh = Engine::with_assignment(&model, engine.assignment());
                    for var in 0..model.num_vars() {
                        prop_assert_eq!(engine.variable_violations(var), fresh.variable_violations(var));
                    }
                    let mut a = engine.violated_vars().to_vec();
                    let mut b = fresh.violated_vars().to_vec();
                    a.sort_unstable();
                    b.sort_unstable();
                    prop_assert_eq!(a, b);
                }
            }
        }
    }
}
