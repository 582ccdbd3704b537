//! Problem data model: scenario parameters, cells, flights and the JSON
//! instance format.
//!
//! All times are integer minutes since midnight of the traffic day. Plans
//! crossing midnight simply use minutes above 1440.

use std::collections::HashMap;
use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Minutes since the common time origin.
pub type TimeMin = i64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum InstanceError {
    #[error("malformed instance at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid scenario parameter `{field}`: {reason}")]
    Params { field: &'static str, reason: String },
    #[error("cell `{cell}`: {reason}")]
    Cell { cell: String, reason: String },
    #[error("duplicate flight id `{0}`")]
    DuplicateFlight(String),
    #[error("flight `{flight}`: {reason}")]
    Flight { flight: String, reason: String },
    #[error("window index {index} out of range 0..={max}")]
    WindowOutOfRange { index: usize, max: usize },
}

/// A right-open time interval `[lo, hi)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Window {
    pub lo: TimeMin,
    pub hi: TimeMin,
}

impl Window {
    #[inline]
    pub fn contains(&self, time: TimeMin) -> bool {
        self.lo <= time && time < self.hi
    }

    #[inline]
    pub fn len(&self) -> TimeMin {
        self.hi - self.lo
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.hi <= self.lo
    }

    pub fn overlaps(&self, other: &Window) -> bool {
        self.lo < other.hi && other.lo < self.hi
    }
}

impl fmt::Display for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {})", self.lo, self.hi)
    }
}

/// The re-planning time frame.
///
/// Sliding window `r` (for `0 <= r <= m`, `m = (end - start) / step`) is the
/// right-open interval `[start - window + r*step, start + r*step)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioParams {
    pub now: TimeMin,
    #[serde(rename = "s")]
    pub start: TimeMin,
    #[serde(rename = "e")]
    pub end: TimeMin,
    /// Sliding window length in minutes.
    #[serde(rename = "w")]
    pub window: TimeMin,
    /// Time step between consecutive windows.
    #[serde(rename = "t")]
    pub step: TimeMin,
    /// Maximum ground hold per flight.
    #[serde(rename = "g")]
    pub max_hold: TimeMin,
    /// Default capacity (entering flights per window).
    pub cap: i64,
}

impl ScenarioParams {
    pub fn validate(&self) -> Result<(), InstanceError> {
        let bad = |field, reason: String| Err(InstanceError::Params { field, reason });
        if self.now < 0 {
            return bad("now", format!("must be non-negative, got {}", self.now));
        }
        if self.now >= self.start {
            return bad(
                "s",
                format!("must be after now={}, got {}", self.now, self.start),
            );
        }
        if self.end < self.start {
            return bad(
                "e",
                format!("must not precede s={}, got {}", self.start, self.end),
            );
        }
        if self.window <= 0 {
            return bad("w", format!("must be positive, got {}", self.window));
        }
        if self.step <= 0 {
            return bad("t", format!("must be positive, got {}", self.step));
        }
        if (self.end - self.start) % self.step != 0 {
            return bad(
                "t",
                format!(
                    "{} does not divide e - s = {}",
                    self.step,
                    self.end - self.start
                ),
            );
        }
        if self.max_hold < 0 {
            return bad("g", format!("must be non-negative, got {}", self.max_hold));
        }
        if self.cap < 0 {
            return bad("cap", format!("must be non-negative, got {}", self.cap));
        }
        Ok(())
    }

    /// `m = (e - s) / t`; there are `m + 1` sliding windows.
    #[inline]
    pub fn window_count(&self) -> usize {
        ((self.end - self.start) / self.step) as usize
    }

    #[inline]
    pub fn num_windows(&self) -> usize {
        self.window_count() + 1
    }

    pub fn window_bounds(&self, r: usize) -> Result<Window, InstanceError> {
        let max = self.window_count();
        if r > max {
            return Err(InstanceError::WindowOutOfRange { index: r, max });
        }
        Ok(self.window_unchecked(r))
    }

    #[inline]
    pub(crate) fn window_unchecked(&self, r: usize) -> Window {
        let shift = r as TimeMin * self.step;
        Window {
            lo: self.start - self.window + shift,
            hi: self.start + shift,
        }
    }

    pub fn windows(&self) -> impl Iterator<Item = Window> + '_ {
        (0..self.num_windows()).map(|r| self.window_unchecked(r))
    }

    /// Indices of every window containing `time`, as a (possibly empty)
    /// contiguous range.
    pub fn windows_containing(&self, time: TimeMin) -> Range<usize> {
        let rel = time - self.start;
        let first = (rel.div_euclid(self.step) + 1).max(0);
        let last = (rel + self.window)
            .div_euclid(self.step)
            .min(self.window_count() as TimeMin);
        if last < first {
            0..0
        } else {
            first as usize..last as usize + 1
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cell {
    pub id: String,
    pub cap: Option<i64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CellEntry {
    pub time: TimeMin,
    /// Index into [`Instance::cells`].
    pub cell: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Flight {
    pub id: String,
    pub departure: TimeMin,
    pub arrival: TimeMin,
    /// Cell entries in time order, at most one per cell.
    pub entries: Vec<CellEntry>,
}

impl Flight {
    pub fn entry_into(&self, cell: usize) -> Option<TimeMin> {
        self.entries.iter().find(|e| e.cell == cell).map(|e| e.time)
    }
}

/// A validated problem instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub params: ScenarioParams,
    pub cells: Vec<Cell>,
    pub flights: Vec<Flight>,
    cell_index: HashMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct CellRecord {
    id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cap: Option<i64>,
}

#[derive(Serialize, Deserialize)]
struct FlightRecord {
    id: String,
    dep: TimeMin,
    arr: TimeMin,
    entries: Vec<(TimeMin, String)>,
}

#[derive(Serialize, Deserialize)]
struct InstanceRecord {
    params: ScenarioParams,
    cells: Vec<CellRecord>,
    flights: Vec<FlightRecord>,
}

impl Instance {
    /// Builds and validates an instance from already-resolved parts.
    pub fn new(
        params: ScenarioParams,
        cells: Vec<Cell>,
        flights: Vec<Flight>,
    ) -> Result<Self, InstanceError> {
        params.validate()?;
        let mut cell_index = HashMap::with_capacity(cells.len());
        for (idx, cell) in cells.iter().enumerate() {
            if let Some(cap) = cell.cap {
                if cap < 0 {
                    return Err(InstanceError::Cell {
                        cell: cell.id.clone(),
                        reason: format!("capacity must be non-negative, got {cap}"),
                    });
                }
            }
            if cell_index.insert(cell.id.clone(), idx).is_some() {
                return Err(InstanceError::Cell {
                    cell: cell.id.clone(),
                    reason: "duplicate cell id".into(),
                });
            }
        }
        let instance = Self {
            params,
            cells,
            flights,
            cell_index,
        };
        instance.validate_flights()?;
        Ok(instance)
    }

    fn validate_flights(&self) -> Result<(), InstanceError> {
        let mut seen_ids = std::collections::HashSet::with_capacity(self.flights.len());
        let mut seen_cells = vec![usize::MAX; self.cells.len()];
        for (fidx, flight) in self.flights.iter().enumerate() {
            let fail = |reason: String| {
                Err(InstanceError::Flight {
                    flight: flight.id.clone(),
                    reason,
                })
            };
            if !seen_ids.insert(flight.id.as_str()) {
                return Err(InstanceError::DuplicateFlight(flight.id.clone()));
            }
            if flight.departure < 0 {
                return fail(format!("negative departure time {}", flight.departure));
            }
            if flight.departure > flight.arrival {
                return fail(format!(
                    "departure {} after arrival {}",
                    flight.departure, flight.arrival
                ));
            }
            let mut prev = TimeMin::MIN;
            for entry in &flight.entries {
                if entry.cell >= self.cells.len() {
                    return fail(format!(
                        "entry references unknown cell index {}",
                        entry.cell
                    ));
                }
                if entry.time < prev {
                    return fail(format!(
                        "entries not sorted by time ({} after {})",
                        entry.time, prev
                    ));
                }
                if entry.time < flight.departure || entry.time > flight.arrival {
                    return fail(format!(
                        "entry time {} outside [{}, {}]",
                        entry.time, flight.departure, flight.arrival
                    ));
                }
                if seen_cells[entry.cell] == fidx {
                    return fail(format!("re-enters cell `{}`", self.cells[entry.cell].id));
                }
                seen_cells[entry.cell] = fidx;
                prev = entry.time;
            }
        }
        Ok(())
    }

    pub fn parse(bytes: &[u8]) -> Result<Self, InstanceError> {
        let record: InstanceRecord =
            serde_json::from_slice(bytes).map_err(|err| InstanceError::Syntax {
                line: err.line(),
                column: err.column(),
                message: err.to_string(),
            })?;
        record.params.validate()?;

        let cells: Vec<Cell> = record
            .cells
            .into_iter()
            .map(|c| Cell {
                id: c.id,
                cap: c.cap,
            })
            .collect();
        let mut index = HashMap::with_capacity(cells.len());
        for (i, c) in cells.iter().enumerate() {
            index.entry(c.id.as_str()).or_insert(i);
        }

        let mut flights = Vec::with_capacity(record.flights.len());
        for f in record.flights {
            let mut entries = Vec::with_capacity(f.entries.len());
            for (time, cell) in &f.entries {
                let Some(&cell_idx) = index.get(cell.as_str()) else {
                    return Err(InstanceError::Flight {
                        flight: f.id,
                        reason: format!("entry references unknown cell `{cell}`"),
                    });
                };
                entries.push(CellEntry {
                    time: *time,
                    cell: cell_idx,
                });
            }
            flights.push(Flight {
                id: f.id,
                departure: f.dep,
                arrival: f.arr,
                entries,
            });
        }
        drop(index);
        Self::new(record.params, cells, flights)
    }

    pub fn to_json(&self) -> String {
        let record = InstanceRecord {
            params: self.params,
            cells: self
                .cells
                .iter()
                .map(|c| CellRecord {
                    id: c.id.clone(),
                    cap: c.cap,
                })
                .collect(),
            flights: self
                .flights
                .iter()
                .map(|f| FlightRecord {
                    id: f.id.clone(),
                    dep: f.departure,
                    arr: f.arrival,
                    entries: f
                        .entries
                        .iter()
                        .map(|e| (e.time, self.cells[e.cell].id.clone()))
                        .collect(),
                })
                .collect(),
        };
        serde_json::to_string(&record).expect("instance serialization cannot fail")
    }

    /// Returns a copy with different scenario parameters, re-validated.
    pub fn with_params(&self, params: ScenarioParams) -> Result<Self, InstanceError> {
        params.validate()?;
        let mut out = self.clone();
        out.params = params;
        Ok(out)
    }

    pub fn cell_id(&self, cell: usize) -> &str {
        &self.cells[cell].id
    }

    pub fn cell_by_id(&self, id: &str) -> Option<usize> {
        self.cell_index.get(id).copied()
    }

    pub fn flight_by_id(&self, id: &str) -> Option<usize> {
        self.flights.iter().position(|f| f.id == id)
    }

    /// Capacity of `cell`, falling back to the scenario default.
    #[inline]
    pub fn cap_of(&self, cell: usize) -> i64 {
        self.cells[cell].cap.unwrap_or(self.params.cap)
    }
}
