//! Brute-force reference checks.
//!
//! Nothing here uses the preprocessing pipeline or the engine: relevant
//! flights, relevant cells and window membership are recomputed directly
//! from the instance so the checks stay independent of the solver path.

use serde::Serialize;
use thiserror::Error;

use crate::instance::{Instance, TimeMin};

/// Upper bound on `(g + 1)^waiting` for exhaustive search.
pub const ENUMERATION_LIMIT: u64 = 1 << 25;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error(
        "{waiting} waiting flights with {values} delay values each exceed the enumeration limit"
    )]
    TooLarge { waiting: usize, values: u64 },
    #[error("assignment has {got} entries, instance has {expected} flights")]
    Length { expected: usize, got: usize },
}

/// Per-flight delays (instance flight order) minimising total delay.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OracleResult {
    pub feasible: bool,
    pub min_total_delay: Option<u64>,
    pub witness: Option<Vec<u32>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Overflow {
    pub window: usize,
    pub cell: usize,
    pub demand: i64,
    pub cap: i64,
    pub overflow: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FullCheck {
    pub ok: bool,
    pub violations: Vec<Overflow>,
}

/// Waiting flights that can be airborne in some window: planned to depart
/// after `now` and by `e`, arriving no earlier than the first window opens.
fn delayable(instance: &Instance) -> Vec<usize> {
    let p = &instance.params;
    instance
        .flights
        .iter()
        .enumerate()
        .filter(|(_, f)| {
            f.departure > p.now && f.departure <= p.end && f.arrival >= p.start - p.window
        })
        .map(|(i, _)| i)
        .collect()
}

/// Cells whose demand depends on the assignment: some delayable flight has
/// an entry that some hold in `[0, g]` places inside some window.
fn controllable_cells(instance: &Instance, flights: &[usize]) -> Vec<bool> {
    let p = &instance.params;
    let windows: Vec<_> = p.windows().collect();
    let mut out = vec![false; instance.cells.len()];
    for &f in flights {
        for e in &instance.flights[f].entries {
            if out[e.cell] {
                continue;
            }
                    out[e.cell] = windows
                .iter()
                .any(|w| e.time < w.hi && e.time + p.max_hold >= w.lo);
        }
    }
    out
}

struct Tally<'a> {
    instance: &'a Instance,
    num_cells: usize,
    counts: Vec<i64>,
}

impl<'a> Tally<'a> {
    fn new(instance: &'a Instance) -> Self {
        let num_cells = instance.cells.len();
        Self {
            instance,
            num_cells,
            counts: vec![0; instance.params.num_windows() * num_cells],
        }
    }

    /// Adds (or removes, with `by = -1`) a flight's delayed entries.
    /// Returns whether every touched controllable count stays within cap.
    fn apply(&mut self, flight: usize, delay: TimeMin, by: i64, watched: &[bool]) -> bool {
        let p = &self.instance.params;
        let mut within = true;
        for e in &self.instance.flights[flight].entries {
            let time = e.time + delay;
            for (r, w) in p.windows().enumerate() {
                if w.lo <= time && time < w.hi {
                    let slot = &mut self.counts[r * self.num_cells + e.cell];
                    *slot += by;
                    if watched[e.cell] && *slot > self.instance.cap_of(e.cell) {
                        within = false;
                    }
                }
            }
        }
        within
    }

    fn overflows(&self, watched: &[bool]) -> Vec<Overflow> {
        let mut out = Vec::new();
        for (i, &demand) in self.counts.iter().enumerate() {
            let cell = i % self.num_cells;
            let cap = self.instance.cap_of(cell);
            if watched[cell] && demand > cap {
                out.push(Overflow {
                    window: i / self.num_cells,
                    cell,
                    demand,
                    cap,
                    overflow: demand - cap,
                });
            }
        }
        out
    }
}

/// Recomputes every (window, relevant cell) demand from scratch, without
/// any constraint pruning, for delays given per instance flight.
pub fn check_full(instance: &Instance, delays: &[u32]) -> Result<FullCheck, OracleError> {
    if delays.len() != instance.flights.len() {
        return Err(OracleError::Length {
            expected: instance.flights.len(),
            got: delays.len(),
        });
    }
    let watched = controllable_cells(instance, &delayable(instance));
    let mut tally = Tally::new(instance);
    for (f, &d) in delays.iter().enumerate() {
        tally.apply(f, d as TimeMin, 1, &watched);
    }
    let violations = tally.overflows(&watched);
    Ok(FullCheck {
        ok: violations.is_empty(),
        violations,
    })
}

/// Exhaustive minimum total delay over all holds of the delayable flights.
pub fn brute_force_min_delay(instance: &Instance) -> Result<OracleResult, OracleError> {
    let flights = delayable(instance);
    let values = instance.params.max_hold as u64 + 1;
    let fits = values
        .checked_pow(flights.len() as u32)
        .is_some_and(|n| n <= ENUMERATION_LIMIT);
    if !fits {
        return Err(OracleError::TooLarge {
            waiting: flights.len(),
            values,
        });
    }

    let watched = controllable_cells(instance, &flights);
    let mut is_var = vec![false; instance.flights.len()];
    for &f in &flights {
        is_var[f] = true;
    }
    let mut tally = Tally::new(instance);
    let mut base_ok = true;
    for (f, &var) in is_var.iter().enumerate() {
        if !var {
            base_ok &= tally.apply(f, 0, 1, &watched);
        }
    }
    if !base_ok {
        return Ok(OracleResult {
            feasible: false,
            min_total_delay: None,
            witness: None,
        });
    }

    let mut search = Enumeration {
        flights: &flights,
        max_hold: instance.params.max_hold,
        watched: &watched,
        current: vec![0; flights.len()],
        best: None,
    };
    search.descend(&mut tally, 0, 0);

    Ok(match search.best {
        Some((total, holds)) => {
            let mut witness = vec![0u32; instance.flights.len()];
            for (i, &f) in flights.iter().enumerate() {
                witness[f] = holds[i];
            }
            OracleResult {
                feasible: true,
                min_total_delay: Some(total),
                witness: Some(witness),
            }
        }
        None => OracleResult {
            feasible: false,
            min_total_delay: None,
            witness: None,
        },
    })
}

struct Enumeration<'a> {
    flights: &'a [usize],
    max_hold: TimeMin,
    watched: &'a [bool],
    current: Vec<u32>,
    best: Option<(u64, Vec<u32>)>,
}

impl Enumeration<'_> {
    /// Depth-first over flights in fixed order. Counts only grow as flights
    /// are added, so any overflow prunes the subtree; so does a partial
    /// delay that already reaches the incumbent.
    fn descend(&mut self, tally: &mut Tally<'_>, depth: usize, partial: u64) {
        if depth == self.flights.len() {
            if self.best.as_ref().is_none_or(|(b, _)| partial < *b) {
                self.best = Some((partial, self.current.clone()));
            }
            return;
        }
        let f = self.flights[depth];
        for d in 0..=self.max_hold {
            let total = partial + d as u64;
            if self.best.as_ref().is_some_and(|(b, _)| total >= *b) {
                break;
            }
            let ok = tally.apply(f, d, 1, self.watched);
            if ok {
                self.current[depth] = d as u32;
                self.descend(tally, depth + 1, total);
            }
            tally.apply(f, d, -1, self.watched);
        }
        self.current[depth] = 0;
    }
}
