//! Evaluation artifacts: per-window demand statistics, the delay histogram,
//! and the run summary, with JSON, CSV, Markdown and SVG renderings.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::instance::{Instance, TimeMin};
use crate::preprocess::{ModelSummary, PreprocessedModel};
use crate::search::SolveResult;

/// Histogram bucket width in minutes.
pub const HISTOGRAM_STEP: u32 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum StatsPopulation {
    /// Cells some waiting flight can enter within the horizon.
    #[default]
    Relevant,
    /// Every cell of the instance.
    All,
}

impl FromStr for StatsPopulation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "relevant" => Ok(Self::Relevant),
            "all" => Ok(Self::All),
            other => Err(format!("unknown statistics population `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DemandStats {
    pub mean: f64,
    pub std_dev: f64,
    pub variance: f64,
    pub min: u32,
    pub median: u32,
    pub max: u32,
}

impl DemandStats {
    /// Population statistics; the median of an even-sized population is the
    /// lower of the two middle values.
    pub fn of(values: &[u32]) -> Self {
        if values.is_empty() {
            return Self {
                mean: 0.0,
                std_dev: 0.0,
                variance: 0.0,
                min: 0,
                median: 0,
                max: 0,
            };
        }
        let mut sorted = values.to_vec();
        sorted.sort_unstable();
        let n = values.len() as f64;
        let mean = values.iter().map(|&v| v as f64).sum::<f64>() / n;
        let variance = values
            .iter()
            .map(|&v| (v as f64 - mean).powi(2))
            .sum::<f64>()
            / n;
        Self {
            mean,
            std_dev: variance.sqrt(),
            variance,
            min: sorted[0],
            median: sorted[(sorted.len() - 1) / 2],
            max: sorted[sorted.len() - 1],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowStats {
    pub window: usize,
    pub lo: TimeMin,
    pub hi: TimeMin,
    pub before: DemandStats,
    pub after: DemandStats,
}

impl WindowStats {
    /// `(sigma_after - sigma_before) / sigma_before`, or `None` when the
    /// window had no spread before.
    pub fn relative_std_change(&self) -> Option<f64> {
        (self.before.std_dev > 0.0)
            .then(|| (self.after.std_dev - self.before.std_dev) / self.before.std_dev)
    }
}

/// Entering demand per window for the given cells, with delays given per
/// instance flight. Row `r` holds one count per entry of `cells`.
pub fn demand_by_window(instance: &Instance, delays: &[u32], cells: &[usize]) -> Vec<Vec<u32>> {
    let params = &instance.params;
    let mut slot = vec![usize::MAX; instance.cells.len()];
    for (i, &c) in cells.iter().enumerate() {
        slot[c] = i;
    }
    let mut rows = vec![vec![0u32; cells.len()]; params.num_windows()];
    for (f, flight) in instance.flights.iter().enumerate() {
        let d = delays[f] as TimeMin;
        for e in &flight.entries {
            let pos = slot[e.cell];
            if pos == usize::MAX {
                continue;
            }
            for r in params.windows_containing(e.time + d) {
                rows[r][pos] += 1;
            }
        }
    }
    rows
}

pub fn population_cells(
    instance: &Instance,
    model: &PreprocessedModel,
    population: StatsPopulation,
) -> Vec<usize> {
    match population {
        StatsPopulation::Relevant => model.candidates.relevant_cells().to_vec(),
        StatsPopulation::All => (0..instance.cells.len()).collect(),
    }
}

/// Before/after demand statistics for every sliding window. Delays are per
/// instance flight.
pub fn window_statistics(
    instance: &Instance,
    cells: &[usize],
    before: &[u32],
    after: &[u32],
) -> Vec<WindowStats> {
    let rows_before = demand_by_window(instance, before, cells);
    let rows_after = demand_by_window(instance, after, cells);
    instance
        .params
        .windows()
        .enumerate()
        .map(|(r, w)| WindowStats {
            window: r,
            lo: w.lo,
            hi: w.hi,
            before: DemandStats::of(&rows_before[r]),
            after: DemandStats::of(&rows_after[r]),
        })
        .collect()
}

/// Mean over windows of the relative standard deviation change; windows
/// without spread before are skipped.
pub fn mean_relative_std_change(stats: &[WindowStats]) -> f64 {
    let changes: Vec<f64> = stats
        .iter()
        .filter_map(|s| s.relative_std_change())
        .collect();
    if changes.is_empty() {
        0.0
    } else {
        changes.iter().sum::<f64>() / changes.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistogramBucket {
    pub lo: u32,
    pub hi: u32,
    pub count: usize,
}

/// Zero-delay count plus 5-minute buckets `[5k+1, 5k+5]` up to the maximum
/// hold.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DelayHistogram {
    pub zero: usize,
    pub buckets: Vec<HistogramBucket>,
}

impl DelayHistogram {
    pub fn total(&self) -> usize {
        self.zero + self.buckets.iter().map(|b| b.count).sum::<usize>()
    }
}

pub fn delay_histogram(delays: &[u32], max_hold: u32) -> DelayHistogram {
    let top = delays.iter().copied().max().unwrap_or(0).max(max_hold);
    let n = top.div_ceil(HISTOGRAM_STEP) as usize;
    let mut buckets: Vec<HistogramBucket> = (0..n as u32)
        .map(|k| HistogramBucket {
            lo: HISTOGRAM_STEP * k + 1,
            hi: HISTOGRAM_STEP * (k + 1),
            count: 0,
        })
        .collect();
    let mut zero = 0;
    for &d in delays {
        if d == 0 {
            zero += 1;
        } else {
            buckets[((d - 1) / HISTOGRAM_STEP) as usize].count += 1;
        }
    }
    DelayHistogram { zero, buckets }
}

/// Spearman rank correlation (average ranks for ties). Returns `None` when
/// either side is constant or fewer than two points are given.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Option<f64> {
    assert_eq!(xs.len(), ys.len());
    if xs.len() < 2 {
        return None;
    }
    let rx = ranks(xs);
    let ry = ranks(ys);
    pearson(&rx, &ry)
}

fn ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = vec![0.0; values.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = avg;
        }
        i = j + 1;
    }
    out
}

fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut cov, mut va, mut vb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        cov += (x - ma) * (y - mb);
        va += (x - ma).powi(2);
        vb += (y - mb).powi(2);
    }
    (va > 0.0 && vb > 0.0).then(|| cov / (va.sqrt() * vb.sqrt()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlightDelay {
    pub id: String,
    pub delay: u32,
}

/// Everything a `solve` run reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runtime_seconds: Option<f64>,
    pub seed: u64,
    pub feasible: bool,
    pub iterations: u64,
    pub waiting_flights: usize,
    pub airborne_flights: usize,
    pub relevant_cells: usize,
    pub posted_constraints: usize,
    pub pruning_ratio: f64,
    pub initial_violations: i64,
    pub min_violations: i64,
    pub total_delay: u64,
    /// Total delay over flights with a positive delay.
    pub average_delay: f64,
    /// Total delay over all relevant flights (airborne included).
    pub average_delay_relevant: f64,
    pub delayed_flights: usize,
    pub zero_delay_share: f64,
    pub demand_std_change: f64,
    pub stats_population: StatsPopulation,
    pub window_stats: Vec<WindowStats>,
    pub histogram: DelayHistogram,
    pub delays: Vec<FlightDelay>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ReportOptions {
    pub population: StatsPopulation,
    /// Include wall-clock time; off for byte-reproducible output.
    pub include_timing: bool,
}

impl SolveReport {
    pub fn build(
        instance: &Instance,
        model: &PreprocessedModel,
        result: &SolveResult,
        options: ReportOptions,
    ) -> Self {
        let summary: ModelSummary = model.summary();
        let delays = result.assignment.as_slice();
        let before = vec![0u32; instance.flights.len()];
        let after = model.expand_delays(delays, instance.flights.len());
        let cells = population_cells(instance, model, options.population);
        let window_stats = window_statistics(instance, &cells, &before, &after);

        let delayed = delays.iter().filter(|&&d| d > 0).count();
        let total = result.total_delay;
        let relevant = summary.relevant_flights;
        SolveReport {
            runtime_seconds: options.include_timing.then_some(result.wall_time.as_secs_f64()),
            seed: result.seed,
            feasible: result.feasible,
            iterations: result.iterations,
            waiting_flights: summary.waiting_flights,
            airborne_flights: summary.airborne_flights,
            relevant_cells: summary.relevant_cells,
            posted_constraints: summary.posted_constraints,
            pruning_ratio: summary.pruning_ratio,
            initial_violations: result.initial_violations,
            min_violations: result.min_violations,
            total_delay: total,
            average_delay: ratio(total as f64, delayed),
            average_delay_relevant: ratio(total as f64, relevant),
            delayed_flights: delayed,
            zero_delay_share: ratio((delays.len() - delayed) as f64, delays.len()),
            demand_std_change: mean_relative_std_change(&window_stats),
            stats_population: options.population,
            window_stats,
            histogram: delay_histogram(delays, model.max_hold()),
            delays: delays
                .iter()
                .enumerate()
                .map(|(var, &delay)| FlightDelay {
                    id: instance.flights[model.flight_of(var)].id.clone(),
                    delay,
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serialization cannot fail");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    fn summary_rows(&self) -> Vec<(&'static str, String)> {
        vec![
            (
                "runtime_seconds",
                self.runtime_seconds
                    .map(|s| format!("{s:.3}"))
                    .unwrap_or_default(),
            ),
            ("seed", self.seed.to_string()),
            ("feasible", self.feasible.to_string()),
            ("iterations", self.iterations.to_string()),
            ("waiting_flights", self.waiting_flights.to_string()),
            ("airborne_flights", self.airborne_flights.to_string()),
            ("relevant_cells", self.relevant_cells.to_string()),
            ("posted_constraints", self.posted_constraints.to_string()),
            ("pruning_ratio", format!("{:.4}", self.pruning_ratio)),
            ("initial_violations", self.initial_violations.to_string()),
            ("min_violations", self.min_violations.to_string()),
            ("total_delay", self.total_delay.to_string()),
            ("average_delay", format!("{:.2}", self.average_delay)),
            (
                "average_delay_relevant",
                format!("{:.2}", self.average_delay_relevant),
            ),
            ("delayed_flights", self.delayed_flights.to_string()),
            ("zero_delay_share", format!("{:.4}", self.zero_delay_share)),
            (
                "demand_std_change",
                format!("{:.4}", self.demand_std_change),
            ),
        ]
    }

    /// Three CSV tables (summary, window statistics, histogram) separated
    /// by blank lines.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("metric,value\n");
        for (k, v) in self.summary_rows() {
            let _ = writeln!(out, "{k},{v}");
        }
        out.push('\n');
        out.push_str(
            "window,lo,hi,mean_before,mean_after,std_before,std_after,var_before,var_after,\
             min_before,min_after,median_before,median_after,max_before,max_after\n",
        );
        for w in &self.window_stats {
            let (b, a) = (&w.before, &w.after);
            let _ = writeln!(
                out,
                "{},{},{},{:.3},{:.3},{:.3},{:.3},{:.3},{:.3},{},{},{},{},{},{}",
                w.window,
                w.lo,
                w.hi,
                b.mean,
                a.mean,
                b.std_dev,
                a.std_dev,
                b.variance,
                a.variance,
                b.min,
                a.min,
                b.median,
                a.median,
                b.max,
                a.max
            );
        }
        out.push('\n');
        out.push_str("delay_lo,delay_hi,flights\n");
        let _ = writeln!(out, "0,0,{}", self.histogram.zero);
        for b in &self.histogram.buckets {
            let _ = writeln!(out, "{},{},{}", b.lo, b.hi, b.count);
        }
        out
    }

    pub fn to_markdown(&self) -> String {
        let mut out = String::from("## Summary\n\n| metric | value |\n|---|---|\n");
        for (k, v) in self.summary_rows() {
            let _ = writeln!(out, "| {k} | {v} |");
        }
        out.push_str(
            "\n## Cell demand per sliding window\n\n\
             | window | mean before | mean after | std before | std after | var before | var after | min | median | max before | max after |\n\
             |---|---|---|---|---|---|---|---|---|---|---|\n",
        );
        for w in &self.window_stats {
            let (b, a) = (&w.before, &w.after);
            let _ = writeln!(
                out,
                "| {}-{} | {:.3} | {:.3} | {:.3} | {:.3} | {:.3} | {:.3} | {}/{} | {}/{} | {} | {} |",
                clock(w.lo), clock(w.hi), b.mean, a.mean, b.std_dev, a.std_dev, b.variance,
                a.variance, b.min, a.min, b.median, a.median, b.max, a.max
            );
        }
        out.push_str("\n## Delay histogram\n\n| delay (min) | flights |\n|---|---|\n");
        let _ = writeln!(out, "| 0 | {} |", self.histogram.zero);
        for b in &self.histogram.buckets {
            let _ = writeln!(out, "| {}-{} | {} |", b.lo, b.hi, b.count);
        }
        out
    }

    /// Bar chart of the delay histogram on a log10 count axis.
    pub fn histogram_svg(&self) -> String {
        let bars: Vec<(String, usize)> = std::iter::once(("0".to_string(), self.histogram.zero))
            .chain(
                self.histogram
                    .buckets
                    .iter()
                    .map(|b| (format!("{}-{}", b.lo, b.hi), b.count)),
            )
            .collect();
        let (width, height, pad) = (40.0 + 24.0 * bars.len() as f64, 260.0, 30.0);
        let top = bars.iter().map(|b| b.1).max().unwrap_or(1).max(1) as f64;
        let scale = (height - 2.0 * pad) / (top + 1.0).log10();
        let mut svg = format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" font-size=\"8\">\n"
        );
        for (i, (label, count)) in bars.iter().enumerate() {
            let h = (*count as f64 + 1.0).log10() * scale;
            let x = pad + 24.0 * i as f64;
            let _ = writeln!(
                svg,
                "  <rect x=\"{x:.1}\" y=\"{:.1}\" width=\"20\" height=\"{h:.1}\" fill=\"steelblue\"><title>{label}: {count}</title></rect>",
                height - pad - h
            );
            let _ = writeln!(
                svg,
                "  <text x=\"{:.1}\" y=\"{:.1}\" transform=\"rotate(60 {:.1} {:.1})\">{label}</text>",
                x + 4.0,
                height - pad + 8.0,
                x + 4.0,
                height - pad + 8.0
            );
        }
        svg.push_str("</svg>\n");
        svg
    }
}

fn ratio(num: f64, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num / den as f64
    }
}

fn clock(minutes: TimeMin) -> String {
    let m = minutes.rem_euclid(1440);
    format!("{:02}:{:02}", m / 60, m % 60)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lower_middle_median() {
        let s = DemandStats::of(&[1, 2, 3, 4]);
        assert_eq!(s.mean, 2.5);
        assert_eq!(s.median, 2);
        assert_eq!(s.min, 1);
        assert_eq!(s.max, 4);
        assert!((s.variance - s.std_dev * s.std_dev).abs() < 1e-9);
        let c = DemandStats::of(&[7, 7, 7]);
        assert_eq!(c.std_dev, 0.0);
        assert_eq!(c.variance, 0.0);
        assert_eq!(DemandStats::of(&[3, 1, 2]).median, 2);
    }

    #[test]
    fn histogram_buckets() {
        let h = delay_histogram(&[0, 0, 1, 4, 5, 7], 120);
        assert_eq!(h.zero, 2);
        assert_eq!(h.buckets.len(), 24);
        assert_eq!(
            h.buckets[0],
            HistogramBucket {
                lo: 1,
                hi: 5,
                count: 3
            }
        );
        assert_eq!(
            h.buckets[1],
            HistogramBucket {
                lo: 6,
                hi: 10,
                count: 1
            }
        );
        assert_eq!(h.total(), 6);
        let all_zero = delay_histogram(&[0; 9], 120);
        assert_eq!(all_zero.zero, 9);
        assert!(all_zero.buckets.iter().all(|b| b.count == 0));
        assert_eq!(delay_histogram(&[15], 15).buckets.len(), 3);
    }

    #[test]
    fn spearman_basics() {
        let x = [1.0, 2.0, 3.0, 4.0];
        assert!((spearman(&x, &[10.0, 8.0, 3.0, 1.0]).unwrap() + 1.0).abs() < 1e-12);
        assert!((spearman(&x, &[1.0, 5.0, 6.0, 9.0]).unwrap() - 1.0).abs() < 1e-12);
        assert!(spearman(&x, &[2.0, 2.0, 2.0, 2.0]).is_none());
        // ties get average ranks
        let r = ranks(&[5.0, 1.0, 5.0]);
        assert_eq!(r, vec![2.5, 1.0, 2.5]);
    }

    #[test]
    fn relative_change_and_clock() {
        let mk = |b: f64, a: f64| WindowStats {
            window: 0,
            lo: 0,
            hi: 60,
            before: DemandStats {
                std_dev: b,
                ..DemandStats::of(&[])
            },
            after: DemandStats {
                std_dev: a,
                ..DemandStats::of(&[])
            },
        };
        let stats = vec![mk(10.0, 6.0), mk(4.0, 3.0), mk(0.0, 0.0)];
        assert!((mean_relative_std_change(&stats) - (-0.325)).abs() < 1e-12);
        assert_eq!(clock(1260), "21:00");
        assert_eq!(clock(1440 + 65), "01:05");
    }
}
