//! Three-state local search heuristic with tabu and exponential
//! diversification.
//!
//! Delays are grouped into ten-minute buckets. While infeasible, the search
//! prefers short delays (state 1), then switches to most-violated-variable
//! repair (state 2) and finally to a full best-move scan (state 3) as the
//! overflow drops. Stagnation triggers a diversification that resets
//! randomly chosen, preferably long, delays to zero. Once feasible, the best
//! total delay is recorded and diversification keeps reshaping the solution
//! until the iteration budget runs out.

use std::cmp::Reverse;
use std::time::{Duration, Instant};

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{Assignment, Engine, ObjectiveWeights};
use crate::preprocess::PreprocessedModel;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SearchError {
    #[error("series ratio must exceed 1, got {0}")]
    Ratio(f64),
    #[error("series powers out of order: low {low} > high {high}")]
    Powers { low: i32, high: i32 },
    #[error("invalid search configuration: {0}")]
    Config(String),
}

/// Normalised geometric series over the integer powers `low..=high`:
/// `p(y) = x^y (x - 1) / (x^(high+1) - x^low)`.
#[derive(Debug, Clone)]
pub struct ExpDistribution {
    ratio: f64,
    low: i32,
    high: i32,
    weights: Vec<f64>,
    sampler: WeightedIndex<f64>,
}

impl ExpDistribution {
    pub fn new(ratio: f64, low: i32, high: i32) -> Result<Self, SearchError> {
        if !(ratio > 1.0) || !ratio.is_finite() {
            return Err(SearchError::Ratio(ratio));
        }
        if low > high {
            return Err(SearchError::Powers { low, high });
        }
        let denom = ratio.powi(high + 1) - ratio.powi(low);
        let weights: Vec<f64> = (low..=high)
            .map(|y| ratio.powi(y) * (ratio - 1.0) / denom)
            .collect();
        let sampler =
            WeightedIndex::new(&weights).map_err(|e| SearchError::Config(e.to_string()))?;
        Ok(Self {
            ratio,
            low,
            high,
            weights,
            sampler,
        })
    }

    pub fn ratio(&self) -> f64 {
        self.ratio
    }

    pub fn low(&self) -> i32 {
        self.low
    }

    pub fn high(&self) -> i32 {
        self.high
    }

    /// Probability of power `y`; zero outside `low..=high`.
    pub fn weight(&self, y: i32) -> f64 {
        if y < self.low || y > self.high {
            0.0
        } else {
            self.weights[(y - self.low) as usize]
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> i32 {
        self.low + self.sampler.sample(rng) as i32
    }
}

pub fn exp_probabilities(ratio: f64, low: i32, high: i32) -> Result<ExpDistribution, SearchError> {
    ExpDistribution::new(ratio, low, high)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchConfig {
    pub max_iter: u64,
    /// Series ratio for picking the delay bucket in state 1.
    pub state1_ratio: f64,
    /// Series ratio for picking the bucket to reset during diversification.
    pub diversify_ratio: f64,
    /// Overflow at or below which state 2 is used.
    pub state2_threshold: i64,
    /// Overflow at or below which state 3 is used.
    pub state3_threshold: i64,
    /// Stagnant iterations before diversifying.
    pub diversify_level: u64,
    /// Resets per diversification while infeasible (plus one).
    pub small_steps: u32,
    /// Resets per diversification once feasible (plus one).
    pub large_steps: u32,
    pub tabu_tenure: u64,
    pub rng_seed: u64,
    pub weight_increment: i64,
    /// Width of a delay bucket in minutes.
    pub bucket_width: u32,
    /// Soft wall-clock deadline in seconds.
    pub time_limit_secs: Option<f64>,
    /// Let state 3 take an overflow-neutral move at a local minimum.
    pub plateau_moves: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            max_iter: 8_000,
            state1_ratio: 1.3,
            diversify_ratio: 1.5,
            state2_threshold: 300,
            state3_threshold: 5,
            diversify_level: 30,
            small_steps: 10,
            large_steps: 100,
            tabu_tenure: 10,
            rng_seed: 0,
            weight_increment: 1,
            bucket_width: 10,
            time_limit_secs: None,
            plateau_moves: true,
        }
    }
}

impl SearchConfig {
    /// Parses a JSON object of overrides; missing keys keep their defaults.
    pub fn from_json(text: &str) -> Result<Self, SearchError> {
        let config: Self =
            serde_json::from_str(text).map_err(|e| SearchError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), SearchError> {
        let fail = |msg: String| Err(SearchError::Config(msg));
        if !(self.state1_ratio > 1.0) {
            return Err(SearchError::Ratio(self.state1_ratio));
        }
        if !(self.diversify_ratio > 1.0) {
            return Err(SearchError::Ratio(self.diversify_ratio));
        }
        if self.state3_threshold >= self.state2_threshold {
            return fail(format!(
                "state3_threshold ({}) must be below state2_threshold ({})",
                self.state3_threshold, self.state2_threshold
            ));
        }
        if self.state3_threshold < 0 {
            return fail("state3_threshold must be non-negative".into());
        }
        if self.diversify_level == 0 || self.small_steps == 0 || self.large_steps == 0 {
            return fail("diversify_level, small_steps and large_steps must be positive".into());
        }
        if self.tabu_tenure == 0 || self.bucket_width == 0 {
            return fail("tabu_tenure and bucket_width must be positive".into());
        }
        if self.weight_increment < 0 {
            return fail("weight_increment must be non-negative".into());
        }
        if let Some(t) = self.time_limit_secs {
            if !(t > 0.0) {
                return fail(format!("time limit must be positive, got {t}"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HeuristicState {
    /// Short-delay-biased repair.
    ShortDelays,
    /// Most violated variable, smallest improving delay.
    MostViolated,
    /// Best move over all violated variables and delays.
    BestMove,
}

/// Outcome of a search run. `assignment` is the best feasible assignment,
/// or the least-violated one seen when no feasible assignment was reached.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub feasible: bool,
    pub assignment: Assignment,
    pub total_delay: u64,
    pub iterations: u64,
    pub initial_violations: i64,
    pub min_violations: i64,
    pub best_iteration: Option<u64>,
    pub first_feasible_iteration: Option<u64>,
    pub moves: u64,
    pub diversifications: u64,
    pub seed: u64,
    #[serde(skip)]
    pub wall_time: Duration,
}

/// Keeps the minimum key seen, breaking ties uniformly at random.
struct Pick<K, T> {
    best: Option<(K, T)>,
    ties: u32,
}

impl<K: Ord, T> Pick<K, T> {
    fn new() -> Self {
        Self {
            best: None,
            ties: 0,
        }
    }

    fn offer<R: Rng>(&mut self, key: K, item: T, rng: &mut R) {
        match &self.best {
            Some((k, _)) if key > *k => {}
            Some((k, _)) if key == *k => {
                self.ties += 1;
                if rng.gen_range(0..self.ties) == 0 {
                    self.best = Some((key, item));
                }
            }
            _ => {
                self.best = Some((key, item));
                self.ties = 1;
            }
        }
    }

    fn into_inner(self) -> Option<(K, T)> {
        self.best
    }
}

/// A single search run over one engine.
pub struct Search<'m> {
    engine: Engine<'m>,
    config: SearchConfig,
    rng: ChaCha8Rng,
    short_delays: ExpDistribution,
    resets: ExpDistribution,
    buckets: u32,
    it: u64,
    state: HeuristicState,
    steady: u64,
    tabu: Vec<u64>,
    weights: ObjectiveWeights,
    moves: u64,
    diversifications: u64,
}

impl<'m> Search<'m> {
    pub fn new(model: &'m PreprocessedModel, config: SearchConfig) -> Result<Self, SearchError> {
        Self::from_engine(Engine::new(model), config)
    }

    pub fn from_engine(engine: Engine<'m>, config: SearchConfig) -> Result<Self, SearchError> {
        config.validate()?;
        let g = engine.model().max_hold();
        let buckets = g.div_ceil(config.bucket_width).max(1);
        let short_delays = ExpDistribution::new(config.state1_ratio, 1, buckets as i32)?;
        let resets = ExpDistribution::new(config.diversify_ratio, 1, buckets as i32)?;
        let n = engine.model().num_vars();
        Ok(Self {
            rng: ChaCha8Rng::seed_from_u64(config.rng_seed),
            engine,
            config,
            short_delays,
            resets,
            buckets,
            it: 0,
            state: HeuristicState::ShortDelays,
            steady: 0,
            tabu: vec![0; n],
            weights: ObjectiveWeights::default(),
            moves: 0,
            diversifications: 0,
        })
    }

    pub fn engine(&self) -> &Engine<'m> {
        &self.engine
    }

    pub fn state(&self) -> HeuristicState {
        self.state
    }

    pub fn set_state(&mut self, state: HeuristicState) {
        self.state = state;
    }

    pub fn iteration(&self) -> u64 {
        self.it
    }

    pub fn weights(&self) -> ObjectiveWeights {
        self.weights
    }

    pub fn tabu_expiry(&self, var: usize) -> u64 {
        self.tabu[var]
    }

    #[inline]
    fn allowed(&self, var: usize) -> bool {
        self.tabu[var] <= self.it
    }

    /// Delay range `[lo, hi]` for bucket `i` in state 1: the most probable
    /// (highest) bucket maps to the shortest delays.
    pub fn short_delay_range(&self, bucket: u32) -> Option<(u32, u32)> {
        let width = self.config.bucket_width;
        let lo = (self.buckets - bucket) * width + 1;
        let hi = ((self.buckets - bucket + 1) * width).min(self.engine.model().max_hold());
        (lo <= hi).then_some((lo, hi))
    }

    fn apply(&mut self, var: usize, delay: u32) {
        self.engine.commit(var, delay);
        self.tabu[var] = self.it + self.config.tabu_tenure;
        self.moves += 1;
    }

    /// Executes one heuristic step in the current state. Returns whether a
    /// move was committed; every committed move reduces overflow, except plateau moves
    /// in state 3.
    pub fn step(&mut self) -> bool {
        let chosen = match self.state {
            HeuristicState::ShortDelays => self.select_short_delay(),
            HeuristicState::MostViolated => self.select_most_violated(),
            HeuristicState::BestMove => self.select_best_move(),
        };
        match chosen {
            Some((var, delay)) => {
                self.apply(var, delay);
                true
            }
            None => false,
        }
    }

    fn select_short_delay(&mut self) -> Option<(usize, u32)> {
        let bucket = self.short_delays.sample(&mut self.rng) as u32;
        let (lo, hi) = self.short_delay_range(bucket)?;
        let delay = self.rng.gen_range(lo..=hi);
        let mut pick = Pick::new();
        for &var in self.engine.violated_vars() {
            if !self.allowed(var) || self.engine.delay(var) == delay {
                continue;
            }
            let delta = self.engine.assign_delta(var, delay);
            if delta < 0 {
                pick.offer(delta, var, &mut self.rng);
            }
        }
        pick.into_inner().map(|(_, var)| (var, delay))
    }

    fn select_most_violated(&mut self) -> Option<(usize, u32)> {
        let mut pick = Pick::new();
        for &var in self.engine.violated_vars() {
            if self.allowed(var) {
                pick.offer(
                    Reverse(self.engine.variable_violations(var)),
                    var,
                    &mut self.rng,
                );
            }
        }
        let (_, var) = pick.into_inner()?;
        let current = self.engine.delay(var);
        let mut best: Option<(i64, u32)> = None;
        for delay in 0..=self.engine.model().max_hold() {
            if delay == current {
                continue;
            }
            let delta = self.engine.assign_delta(var, delay);
            if delta < 0 && best.is_none_or(|b| (delta, delay) < b) {
                best = Some((delta, delay));
            }
        }
        best.map(|(_, delay)| (var, delay))
    }

    /// Best improving move over all violated variables. At a local minimum
    /// a random non-tabu move that keeps the overflow unchanged is taken
    /// instead, when one exists.
    fn select_best_move(&mut self) -> Option<(usize, u32)> {
        let g = self.engine.model().max_hold();
        let mut pick = Pick::new();
        let mut plateau = Pick::new();
        for &var in self.engine.violated_vars() {
            if !self.allowed(var) {
                continue;
            }
            let current = self.engine.delay(var);
            for delay in 0..=g {
                if delay == current {
                    continue;
                }
                let delta = self.engine.assign_delta(var, delay);
                if delta < 0 {
                    pick.offer((delta, delay), var, &mut self.rng);
                } else if delta == 0 && self.config.plateau_moves {
                    plateau.offer((), (var, delay), &mut self.rng);
                }
            }
        }
        match pick.into_inner() {
            Some(((_, delay), var)) => Some((var, delay)),
            None => plateau.into_inner().map(|(_, m)| m),
        }
    }

    /// Resets `rounds` randomly chosen delayed flights to zero, preferring
    /// long delays. Ignores tabu.
    pub fn diversify(&mut self, rounds: u32) {
        let width = self.config.bucket_width;
        let mut pool = Vec::new();
        for _ in 0..rounds {
            let bucket = self.resets.sample(&mut self.rng) as u32;
            let lo = (bucket - 1) * width;
            let hi = bucket * width;
            pool.clear();
            pool.extend(
                self.engine
                    .delays()
                    .iter()
                    .enumerate()
                    .filter(|&(_, &d)| d > lo && d <= hi)
                    .map(|(v, _)| v),
            );
            if pool.is_empty() {
                continue;
            }
            let var = pool[self.rng.gen_range(0..pool.len())];
            self.engine.commit(var, 0);
        }
        self.diversifications += 1;
    }

    /// Runs the meta-heuristic until the iteration budget or the deadline
    /// is exhausted.
    pub fn run(mut self) -> SolveResult {
        let started = Instant::now();
        let deadline = self
            .config
            .time_limit_secs
            .map(|s| started + Duration::from_secs_f64(s));
        let initial_violations = self.engine.total_violations();
        let mut best: Option<(u64, Assignment, u64)> = None;
        let mut least_violated = (initial_violations, self.engine.assignment());
        if initial_violations == 0 {
            best = Some((self.engine.total_delay(), self.engine.assignment(), 0));
        }
        let mut old_viol = initial_violations;
        let mut first_feasible = (initial_violations == 0).then_some(0);

        while self.it < self.config.max_iter {
            if deadline.is_some_and(|d| Instant::now() >= d) {
                break;
            }
            self.step();
            self.it += 1;

            let viol = self.engine.total_violations();
            if viol == old_viol {
                self.steady += 1;
            } else {
                self.steady = 0;
            }
            let max_diverse = if viol == 0 {
                self.config.large_steps
            } else {
                self.config.small_steps
            };
            if viol == 0 {
                first_feasible.get_or_insert(self.it);
                self.state = HeuristicState::ShortDelays;
                self.tabu.fill(0);
                let total = self.engine.total_delay();
                if best.as_ref().is_none_or(|(b, _, _)| total < *b) {
                    best = Some((total, self.engine.assignment(), self.it));
                    self.weights = ObjectiveWeights::default();
                }
            } else {
                if viol <= self.config.state3_threshold {
                    self.state = HeuristicState::BestMove;
                } else if viol <= self.config.state2_threshold {
                    self.state = HeuristicState::MostViolated;
                }
                if best.is_none() && viol < least_violated.0 {
                    least_violated = (viol, self.engine.assignment());
                }
            }
            if self.steady == self.config.diversify_level {
                if viol > 0 {
                    self.weights.violation += self.config.weight_increment;
                }
                self.diversify(max_diverse + 1);
                self.steady = 0;
            }
            old_viol = self.engine.total_violations();
        }

        let min_violations = if best.is_some() { 0 } else { least_violated.0 };
        let (feasible, assignment, best_iteration) = match best {
            Some((_, a, at)) => (true, a, Some(at)),
            None => (false, least_violated.1, None),
        };
        SolveResult {
            feasible,
            total_delay: assignment.total_delay(),
            assignment,
            iterations: self.it,
            initial_violations,
            min_violations,
            best_iteration,
            first_feasible_iteration: first_feasible,
            moves: self.moves,
            diversifications: self.diversifications,
            seed: self.config.rng_seed,
            wall_time: started.elapsed(),
        }
    }
}

pub fn solve(model: &PreprocessedModel, config: &SearchConfig) -> Result<SolveResult, SearchError> {
    Ok(Search::new(model, config.clone())?.run())
}

/// Independent runs with seeds `rng_seed, rng_seed + 1, ...` on scoped
/// threads; returns the best (feasible first, then lowest total delay, then
/// fewest violations, then lowest seed).
pub fn solve_multi_start(
    model: &PreprocessedModel,
    config: &SearchConfig,
    starts: usize,
) -> Result<SolveResult, SearchError> {
    config.validate()?;
    let starts = starts.max(1);
    if starts == 1 {
        return solve(model, config);
    }
    let results: Vec<Result<SolveResult, SearchError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..starts)
            .map(|i| {
                let cfg = SearchConfig {
                    rng_seed: config.rng_seed.wrapping_add(i as u64),
                    ..config.clone()
                };
                scope.spawn(move || solve(model, &cfg))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("search thread panicked"))
            .collect()
    });
    let mut best: Option<SolveResult> = None;
    for result in results {
        let r = result?;
        let key = |r: &SolveResult| (!r.feasible, r.total_delay, r.min_violations);
        if best.as_ref().is_none_or(|b| key(&r) < key(b)) {
            best = Some(r);
        }
    }
    Ok(best.expect("at least one start"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{Cell, CellEntry, Flight, Instance, ScenarioParams};

    fn single_window(entries: &[i64], cap: i64, max_hold: i64) -> Instance {
        let params = ScenarioParams {
            now: 0,
            start: 100,
            end: 100,
            window: 60,
            step: 10,
            max_hold,
            cap,
        };
        let flights = entries
            .iter()
            .enumerate()
            .map(|(i, &t)| Flight {
                id: format!("f{i}"),
                departure: t,
                arrival: t + 30,
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

    #[test]
    fn exp_weights_reference_values() {
        let d = exp_probabilities(1.3, 1, 12).unwrap();
        assert!((d.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((d.weight(12) - 0.241_12).abs() < 5e-6, "{}", d.weight(12));
        assert!((d.weight(1) - 0.013_454).abs() < 5e-7, "{}", d.weight(1));
        let single = exp_probabilities(1.5, 4, 4).unwrap();
        assert_eq!(single.weights(), &[1.0]);
        let d = exp_probabilities(1.5, 1, 12).unwrap();
        assert!(d.weights().windows(2).all(|w| w[0] < w[1]));
        assert!(matches!(
            exp_probabilities(1.0, 1, 12),
            Err(SearchError::Ratio(_))
        ));
        assert!(matches!(
            exp_probabilities(0.5, 1, 12),
            Err(SearchError::Ratio(_))
        ));
        assert!(matches!(
            exp_probabilities(1.3, 3, 2),
            Err(SearchError::Powers { .. })
        ));
    }

    #[test]
    fn sampling_follows_weights() {
        let d = exp_probabilities(1.3, 1, 12).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut hist = [0u32; 12];
        let n = 200_000;
        for _ in 0..n {
            hist[(d.sample(&mut rng) - 1) as usize] += 1;
        }
        for (i, &h) in hist.iter().enumerate() {
            let expected = d.weight(i as i32 + 1);
            assert!((h as f64 / n as f64 - expected).abs() < 0.005);
        }
    }

    #[test]
    fn config_validation() {
        assert!(SearchConfig::default().validate().is_ok());
        let bad = SearchConfig {
            state3_threshold: 300,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = SearchConfig {
            tabu_tenure: 0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let parsed: SearchConfig =
            serde_json::from_str(r#"{"max_iter": 5, "tabu_tenure": 3}"#).unwrap();
        assert_eq!(parsed.max_iter, 5);
        assert_eq!(parsed.state2_threshold, 300);
    }

    #[test]
    fn bucket_mapping_prefers_short_delays() {
        let inst = single_window(&[90, 95, 99], 2, 120);
        let model = PreprocessedModel::build(&inst);
        let search = Search::new(&model, SearchConfig::default()).unwrap();
        assert_eq!(search.short_delay_range(12), Some((1, 10)));
        assert_eq!(search.short_delay_range(11), Some((11, 20)));
        assert_eq!(search.short_delay_range(1), Some((111, 120)));

        let inst = single_window(&[90, 95, 99], 2, 15);
        let model = PreprocessedModel::build(&inst);
        let search = Search::new(&model, SearchConfig::default()).unwrap();
        assert_eq!(search.short_delay_range(2), Some((1, 10)));
        assert_eq!(search.short_delay_range(1), Some((11, 15)));
    }

    #[test]
    fn most_violated_step_reduces_overflow() {
        let inst = single_window(&[90, 95, 99], 2, 15);
        let model = PreprocessedModel::build(&inst);
        let mut search = Search::new(&model, SearchConfig::default()).unwrap();
        search.set_state(HeuristicState::MostViolated);
        let before = search.engine().total_violations();
        assert!(search.step());
        assert!(search.engine().total_violations() < before);
        let (_, scratch) = search.engine().recompute();
        assert_eq!(scratch, search.engine().total_violations());
    }

    #[test]
    fn step_stalls_when_everything_is_tabu() {
        let inst = single_window(&[90, 95, 99], 2, 15);
        let model = PreprocessedModel::build(&inst);
        let mut search = Search::new(&model, SearchConfig::default()).unwrap();
        search.tabu.fill(50);
        for state in [
            HeuristicState::ShortDelays,
            HeuristicState::MostViolated,
            HeuristicState::BestMove,
        ] {
            search.set_state(state);
            assert!(!search.step());
            assert_eq!(search.engine().total_violations(), 1);
        }
    }

    #[test]
    fn best_move_picks_minimal_delay() {
        let inst = single_window(&[90, 95, 99], 2, 15);
        let model = PreprocessedModel::build(&inst);
        let mut search = Search::new(&model, SearchConfig::default()).unwrap();
        search.set_state(HeuristicState::BestMove);
        assert!(search.step());
        assert_eq!(search.engine().delays(), &[0, 0, 1]);
        assert_eq!(search.tabu_expiry(2), 10);
    }

    /// One cell, cap 2, windows [70,100), [80,110), [90,120); the airborne
    /// entry at 71 leaves room for one more flight in the first window.
    fn two_step_trap() -> Instance {
        Instance::parse(
            br#"{"params":{"now":0,"s":100,"e":120,"w":30,"t":10,"g":15,"cap":2},
            "cells":[{"id":"c0"}],
            "flights":[
              {"id":"w0","dep":83,"arr":96,"entries":[[87,"c0"]]},
              {"id":"w1","dep":116,"arr":120,"entries":[[116,"c0"]]},
              {"id":"w2","dep":95,"arr":103,"entries":[[97,"c0"]]},
              {"id":"w3","dep":70,"arr":83,"entries":[[74,"c0"]]},
              {"id":"a0","dep":0,"arr":81,"entries":[[71,"c0"]]}]}"#,
        )
        .unwrap()
    }

    #[test]
    fn plateau_move_leaves_local_minimum() {
        let inst = two_step_trap();
        let model = PreprocessedModel::build(&inst);
        let trapped = || Engine::with_assignment(&model, Assignment::from_delays(vec![0, 0, 3, 0]));
        assert_eq!(trapped().total_violations(), 1);

        let strict = SearchConfig {
            plateau_moves: false,
            ..Default::default()
        };
        let mut search = Search::from_engine(trapped(), strict).unwrap();
        search.set_state(HeuristicState::BestMove);
        assert!(!search.step());

        let mut search = Search::from_engine(trapped(), SearchConfig::default()).unwrap();
        search.set_state(HeuristicState::BestMove);
        assert!(search.step());
        assert_eq!(search.engine().total_violations(), 1);
    }

    #[test]
    fn plateau_moves_reach_the_optimum() {
        let inst = two_step_trap();
        let model = PreprocessedModel::build(&inst);
        let config = SearchConfig {
            max_iter: 5_000,
            rng_seed: 69,
            ..Default::default()
        };
        let result = solve(&model, &config).unwrap();
        assert!(result.feasible);
        assert_eq!(result.total_delay, 20);
    }

    #[test]
    fn diversify_resets_delays() {
        let inst = single_window(&[90, 95, 99], 2, 120);
        let model = PreprocessedModel::build(&inst);
        let engine = Engine::with_assignment(&model, Assignment::from_delays(vec![0, 0, 115]));
        let mut search = Search::from_engine(engine, SearchConfig::default()).unwrap();
        search.diversify(101);
        assert_eq!(search.engine().delays(), &[0, 0, 0]);
        assert_eq!(search.engine().total_violations(), 1);

        let mut idle = Search::new(&model, SearchConfig::default()).unwrap();
        idle.diversify(101);
        assert_eq!(idle.engine().delays(), &[0, 0, 0]);
    }

    #[test]
    fn reverse_distribution_favours_long_delay_bucket() {
        let d = exp_probabilities(1.5, 1, 12).unwrap();
        let top = d.weight(12);
        assert!((1..12).all(|y| d.weight(y) < top));
    }

    #[test]
    fn no_constraints_is_immediately_feasible() {
        let inst = single_window(&[90, 95], 2, 15);
        let model = PreprocessedModel::build(&inst);
        assert!(model.posted.is_empty());
        let result = solve(
            &model,
            &SearchConfig {
                max_iter: 50,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(result.feasible);
        assert_eq!(result.total_delay, 0);
        assert_eq!(result.best_iteration, Some(0));
    }

    #[test]
    fn solves_three_flight_example_optimally() {
        let inst = single_window(&[90, 95, 99], 2, 15);
        let model = PreprocessedModel::build(&inst);
        let result = solve(
            &model,
            &SearchConfig {
                max_iter: 2_000,
                rng_seed: 7,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(result.feasible);
        assert_eq!(result.total_delay, 1);
        assert_eq!(result.assignment.as_slice(), &[0, 0, 1]);
    }

    #[test]
    fn reports_infeasible_with_min_violations() {
        let inst = single_window(&[60], 0, 5);
        let model = PreprocessedModel::build(&inst);
        let result = solve(
            &model,
            &SearchConfig {
                max_iter: 500,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(!result.feasible);
        assert_eq!(result.min_violations, 1);
        assert_eq!(result.initial_violations, 1);
    }

    #[test]
    fn fixed_seed_is_reproducible() {
        let inst = single_window(&[60, 62, 70, 71, 80, 85, 90, 99], 3, 60);
        let model = PreprocessedModel::build(&inst);
        let cfg = SearchConfig {
            max_iter: 3_000,
            rng_seed: 11,
            ..Default::default()
        };
        let a = solve(&model, &cfg).unwrap();
        let b = solve(&model, &cfg).unwrap();
        assert_eq!(a.assignment, b.assignment);
        assert_eq!(a.moves, b.moves);
        let multi = solve_multi_start(&model, &cfg, 3).unwrap();
        assert!(multi.total_delay <= a.total_delay || !a.feasible);
    }
}
