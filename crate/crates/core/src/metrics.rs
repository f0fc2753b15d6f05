//! Strategy switches, sidewalk-salsa detection and per-scenario summaries.

use serde::{Deserialize, Serialize};

use crate::simulator::{EndState, TraceRow, TrialResult};

/// Where a plan heads relative to the current lateral position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Heading {
    Left,
    Right,
    Inside,
}

pub fn classify(plan_mean_x: f64, current_x: f64, dead_band: f64) -> Heading {
    if plan_mean_x < current_x - dead_band {
        Heading::Left
    } else if plan_mean_x > current_x + dead_band {
        Heading::Right
    } else {
        Heading::Inside
    }
}

/// Counts transitions of the plan mean out of the dead band onto a side other
/// than the last one recorded. Returning inside the band changes nothing.
pub fn strategy_switches(samples: &[(f64, f64)], dead_band: f64) -> usize {
    let mut last: Option<Heading> = None;
    let mut count = 0;
    for &(mean, current) in samples {
        let side = classify(mean, current, dead_band);
        if side != Heading::Inside && last != Some(side) {
            count += 1;
            last = Some(side);
        }
    }
    count
}

/// `(plan_mean_x, x)` of pedestrian `ped` at the sampled steps before `end`.
pub fn plan_samples(rows: &[TraceRow], ped: usize, end: Option<usize>) -> Vec<(f64, f64)> {
    rows.iter()
        .take_while(|r| end.is_none_or(|e| r.step < e))
        .filter(|r| r.peds[ped].sample)
        .map(|r| (r.peds[ped].plan_mean_x, r.peds[ped].state.x))
        .collect()
}

/// Switch counts of both pedestrians up to the passing step, or the whole
/// trace when they never passed.
pub fn switch_counts(rows: &[TraceRow], passing_step: Option<usize>, dead_band: f64) -> [usize; 2] {
    [0, 1].map(|ped| strategy_switches(&plan_samples(rows, ped, passing_step), dead_band))
}

pub fn trial_switch_counts(result: &TrialResult, dead_band: f64) -> [usize; 2] {
    switch_counts(&result.rows, result.passing_step, dead_band)
}

pub fn is_salsa(counts: [usize; 2]) -> bool {
    counts.iter().all(|&c| c >= 2)
}

pub fn detect_salsa(result: &TrialResult, dead_band: f64) -> bool {
    is_salsa(trial_switch_counts(result, dead_band))
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioSummary {
    pub scenario: String,
    pub trials: usize,
    pub finished: usize,
    pub collided: usize,
    pub out_of_bounds: usize,
    pub timeout: usize,
    pub salsas: usize,
    /// Salsas among the collided trials.
    pub collided_salsas: usize,
    /// Pedestrian-trials with 0, 1, 2 and 3 or more switches.
    pub switch_histogram: [usize; 4],
}

impl ScenarioSummary {
    /// Histogram bin with the most pedestrian-trials; ties go to fewer switches.
    pub fn histogram_mode(&self) -> usize {
        let mut best = 0;
        for (i, &v) in self.switch_histogram.iter().enumerate() {
            if v > self.switch_histogram[best] {
                best = i;
            }
        }
        best
    }

    /// Share of pedestrian-trials with two or more switches.
    pub fn multi_switch_share(&self) -> f64 {
        let total: usize = self.switch_histogram.iter().sum();
        if total == 0 {
            0.0
        } else {
            (self.switch_histogram[2] + self.switch_histogram[3]) as f64 / total as f64
        }
    }
}

pub fn summarize(scenario: &str, results: &[TrialResult], dead_band: f64) -> ScenarioSummary {
    let mut s = ScenarioSummary {
        scenario: scenario.to_string(),
        trials: results.len(),
        ..Default::default()
    };
    for r in results {
        match r.end_state {
            EndState::Finished => s.finished += 1,
            EndState::Collision => s.collided += 1,
            EndState::OutOfBounds => s.out_of_bounds += 1,
            EndState::Timeout => s.timeout += 1,
        }
        let counts = trial_switch_counts(r, dead_band);
        for c in counts {
            s.switch_histogram[c.min(3)] += 1;
        }
        if is_salsa(counts) {
            s.salsas += 1;
            if r.end_state == EndState::Collision {
                s.collided_salsas += 1;
            }
        }
    }
    s
}

/// Plain-text table of summaries.
pub fn format_table(summaries: &[ScenarioSummary]) -> String {
    let mut out = format!(
        "{:<28}{:>9}{:>10}{:>15}{:>9}{:>17}\n",
        "scenario", "finished", "collided", "out_of_bounds", "timeout", "sidewalk_salsas"
    );
    for s in summaries {
        out.push_str(&format!(
            "{:<28}{:>9}{:>10}{:>15}{:>9}{:>17}\n",
            s.scenario, s.finished, s.collided, s.out_of_bounds, s.timeout, s.salsas
        ));
    }
    out
}

/// Switch histogram as CSV, one row per scenario.
pub fn histogram_csv(summaries: &[ScenarioSummary]) -> String {
    let mut out = String::from("scenario,switches_0,switches_1,switches_2,switches_3_or_more\n");
    for s in summaries {
        let h = s.switch_histogram;
        out.push_str(&format!("{},{},{},{},{}\n", s.scenario, h[0], h[1], h[2], h[3]));
    }
    out
}
