//! Relevant-flight classification, per-(window, cell) candidate lists, known
//! airborne demand, and the pruned set of posted capacity constraints.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::instance::{Instance, ScenarioParams, TimeMin, Window};

/// Relevant flights split into airborne (fixed) and waiting (delayable).
///
/// All three lists hold indices into [`Instance::flights`] in ascending order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FlightClassification {
    pub relevant: Vec<usize>,
    pub airborne: Vec<usize>,
    pub waiting: Vec<usize>,
}

pub fn classify_flights(instance: &Instance) -> FlightClassification {
    let p = &instance.params;
    let mut out = FlightClassification::default();
    for (idx, f) in instance.flights.iter().enumerate() {
        if f.departure > p.end || f.arrival < p.start - p.window {
            continue;
        }
        out.relevant.push(idx);
        if f.departure <= p.now {
            out.airborne.push(idx);
        } else {
            out.waiting.push(idx);
        }
    }
    out
}

/// A waiting flight that can enter a given cell during a given window,
/// either as planned or after some ground hold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Candidate {
    /// Decision variable index (position in [`FlightClassification::waiting`]).
    pub var: usize,
    /// Planned entry time into the cell.
    pub entry: TimeMin,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateList {
    pub window: usize,
    pub cell: usize,
    /// Sorted by entry time, then variable.
    pub flights: Vec<Candidate>,
}

/// Candidate lists for every window and relevant cell, stored window-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateTable {
    relevant_cells: Vec<usize>,
    num_windows: usize,
    lists: Vec<CandidateList>,
}

impl CandidateTable {
    /// Cells some waiting flight can enter within the horizon (sorted).
    pub fn relevant_cells(&self) -> &[usize] {
        &self.relevant_cells
    }

    pub fn num_windows(&self) -> usize {
        self.num_windows
    }

    /// Candidate list for window `r` and the `pos`-th relevant cell.
    pub fn get(&self, r: usize, pos: usize) -> &CandidateList {
        &self.lists[r * self.relevant_cells.len() + pos]
    }

    pub fn lists(&self) -> &[CandidateList] {
        &self.lists
    }
}

/// Widens every window downward by the maximum hold: an entry planned in
/// `[lo - g, hi)` can be held into `[lo, hi)`.
fn candidate_windows(params: &ScenarioParams, entry: TimeMin) -> std::ops::Range<usize> {
    let widened = ScenarioParams {
        window: params.window + params.max_hold,
        ..*params
    };
    widened.windows_containing(entry)
}

pub fn build_candidates(
    instance: &Instance,
    classification: &FlightClassification,
) -> CandidateTable {
    let params = &instance.params;
    let num_windows = params.num_windows();
    let mut by_cell: BTreeMap<usize, Vec<Vec<Candidate>>> = BTreeMap::new();
    for (var, &fidx) in classification.waiting.iter().enumerate() {
        for entry in &instance.flights[fidx].entries {
            let range = candidate_windows(params, entry.time);
            if range.is_empty() {
                continue;
            }
            let per_window = by_cell
                .entry(entry.cell)
                .or_insert_with(|| vec![Vec::new(); num_windows]);
            for r in range {
                per_window[r].push(Candidate {
                    var,
                    entry: entry.time,
                });
            }
        }
    }

    let relevant_cells: Vec<usize> = by_cell.keys().copied().collect();
    let mut lists = Vec::with_capacity(num_windows * relevant_cells.len());
    for r in 0..num_windows {
        for (&cell, per_window) in &by_cell {
            let mut flights = per_window[r].clone();
            flights.sort_unstable_by_key(|c| (c.entry, c.var));
            lists.push(CandidateList {
                window: r,
                cell,
                flights,
            });
        }
    }
    CandidateTable {
        relevant_cells,
        num_windows,
        lists,
    }
}

/// Entering-flight counts of airborne flights per (window, cell).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KnownDemand {
    num_cells: usize,
    counts: Vec<u32>,
}

impl KnownDemand {
    #[inline]
    pub fn get(&self, r: usize, cell: usize) -> u32 {
        self.counts[r * self.num_cells + cell]
    }

    pub fn max(&self) -> u32 {
        self.counts.iter().copied().max().unwrap_or(0)
    }
}

pub fn known_demand(instance: &Instance, classification: &FlightClassification) -> KnownDemand {
    let params = &instance.params;
    let num_cells = instance.cells.len();
    let mut counts = vec![0u32; params.num_windows() * num_cells];
    for &fidx in &classification.airborne {
        for entry in &instance.flights[fidx].entries {
            for r in params.windows_containing(entry.time) {
                counts[r * num_cells + entry.cell] += 1;
            }
        }
    }
    KnownDemand { num_cells, counts }
}

/// An `atmost(residual_cap, ...)` constraint over the candidates of one
/// (window, cell) pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PostedConstraint {
    pub window: usize,
    pub cell: usize,
    pub span: Window,
    /// `cap(cell) - P[window, cell]`; negative when airborne traffic alone
    /// already overloads the cell.
    pub residual_cap: i64,
    /// Index into [`CandidateTable::lists`].
    pub candidates: usize,
}

/// Posts a constraint for each (window, relevant cell) pair whose worst case
/// demand `P + |candidates|` exceeds the cell capacity.
pub fn post_constraints(
    instance: &Instance,
    table: &CandidateTable,
    known: &KnownDemand,
) -> Vec<PostedConstraint> {
    let params = &instance.params;
    let width = table.relevant_cells.len();
    let mut posted = Vec::new();
    for r in 0..table.num_windows {
        for (pos, &cell) in table.relevant_cells.iter().enumerate() {
            let list = table.get(r, pos);
            let cap = instance.cap_of(cell);
            let fixed = known.get(r, cell) as i64;
            if fixed + list.flights.len() as i64 > cap {
                posted.push(PostedConstraint {
                    window: r,
                    cell,
                    span: params.window_unchecked(r),
                    residual_cap: cap - fixed,
                    candidates: r * width + pos,
                });
            }
        }
    }
    posted
}

/// Membership of a decision variable in a posted constraint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Membership {
    pub constraint: u32,
    pub entry: TimeMin,
}

/// Everything the constraint engine and the search need, derived once from
/// an instance and shared read-only afterwards.
#[derive(Debug, Clone)]
pub struct PreprocessedModel {
    pub params: ScenarioParams,
    pub classification: FlightClassification,
    pub candidates: CandidateTable,
    pub known: KnownDemand,
    pub posted: Vec<PostedConstraint>,
    caps: Vec<i64>,
    membership_start: Vec<usize>,
    memberships: Vec<Membership>,
}

impl PreprocessedModel {
    pub fn build(instance: &Instance) -> Self {
        let classification = classify_flights(instance);
        let candidates = build_candidates(instance, &classification);
        let known = known_demand(instance, &classification);
        let posted = post_constraints(instance, &candidates, &known);

        let num_vars = classification.waiting.len();
        let mut per_var: Vec<Vec<Membership>> = vec![Vec::new(); num_vars];
        for (k, c) in posted.iter().enumerate() {
            for cand in &candidates.lists()[c.candidates].flights {
                per_var[cand.var].push(Membership {
                    constraint: k as u32,
                    entry: cand.entry,
                });
            }
        }
        let mut membership_start = Vec::with_capacity(num_vars + 1);
        let mut memberships = Vec::new();
        membership_start.push(0);
        for list in per_var {
            memberships.extend(list);
            membership_start.push(memberships.len());
        }

        Self {
            params: instance.params,
            caps: (0..instance.cells.len())
                .map(|c| instance.cap_of(c))
                .collect(),
            classification,
            candidates,
            known,
            posted,
            membership_start,
            memberships,
        }
    }

    #[inline]
    pub fn num_vars(&self) -> usize {
        self.classification.waiting.len()
    }

    #[inline]
    pub fn max_hold(&self) -> u32 {
        self.params.max_hold as u32
    }

    #[inline]
    pub fn cap_of(&self, cell: usize) -> i64 {
        self.caps[cell]
    }

    /// Posted constraints that variable `var` is a candidate of.
    #[inline]
    pub fn memberships(&self, var: usize) -> &[Membership] {
        &self.memberships[self.membership_start[var]..self.membership_start[var + 1]]
    }

    pub fn candidate_list(&self, constraint: usize) -> &CandidateList {
        &self.candidates.lists()[self.posted[constraint].candidates]
    }

    /// Relevant cells carrying at least one posted constraint.
    pub fn active_cells(&self) -> Vec<usize> {
        let mut cells: Vec<usize> = self.posted.iter().map(|c| c.cell).collect();
        cells.sort_unstable();
        cells.dedup();
        cells
    }

    /// Instance flight index of decision variable `var`.
    #[inline]
    pub fn flight_of(&self, var: usize) -> usize {
        self.classification.waiting[var]
    }

    /// Spreads per-variable delays onto all instance flights (zero for
    /// flights without a decision variable).
    pub fn expand_delays(&self, delays: &[u32], num_flights: usize) -> Vec<u32> {
        let mut out = vec![0; num_flights];
        for (var, &d) in delays.iter().enumerate() {
            out[self.flight_of(var)] = d;
        }
        out
    }

    pub fn summary(&self) -> ModelSummary {
        let pairs = self.candidates.num_windows() * self.candidates.relevant_cells().len();
        ModelSummary {
            relevant_flights: self.classification.relevant.len(),
            airborne_flights: self.classification.airborne.len(),
            waiting_flights: self.classification.waiting.len(),
            relevant_cells: self.candidates.relevant_cells().len(),
            active_cells: self.active_cells().len(),
            windows: self.candidates.num_windows(),
            candidate_pairs: pairs,
            posted_constraints: self.posted.len(),
            pruning_ratio: if pairs == 0 {
                0.0
            } else {
                1.0 - self.posted.len() as f64 / pairs as f64
            },
        }
    }
}

/// Size counters of a preprocessed model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelSummary {
    pub relevant_flights: usize,
    pub airborne_flights: usize,
    pub waiting_flights: usize,
    pub relevant_cells: usize,
    pub active_cells: usize,
    pub windows: usize,
    pub candidate_pairs: usize,
    pub posted_constraints: usize,
    pub pruning_ratio: f64,
}
