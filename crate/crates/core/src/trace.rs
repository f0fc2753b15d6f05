//! Per-trial trace files: a CSV of per-step rows and a JSON record with the
//! trial outcome and optional plan/belief snapshots.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::agent::{AgentMode, ReplanStatus};
use crate::error::{Error, Result};
use crate::metrics::{is_salsa, switch_counts};
use crate::simulator::{passing_step, EndState, PedestrianRow, SnapshotRecord, TraceRow, TrialResult};
use crate::state::PedestrianState;

const PED_FIELDS: [&str; 16] = [
    "x",
    "y",
    "heading",
    "v_forw",
    "v_orth",
    "omega",
    "risk",
    "risk_argmax",
    "threshold",
    "replanned",
    "cap",
    "status",
    "iterations",
    "mode",
    "plan_mean_x",
    "sample",
];
const N_PED: usize = PED_FIELDS.len();

pub fn csv_header() -> Vec<String> {
    let mut h = vec!["step".to_string(), "t".to_string()];
    for suffix in ["a", "b"] {
        h.extend(PED_FIELDS.iter().map(|f| format!("{f}_{suffix}")));
    }
    h
}

/// `<scenario>_<seed>`, the stem shared by both files of a trial.
pub fn trace_stem(scenario: &str, seed: u64) -> String {
    format!("{scenario}_{seed}")
}

fn status_str(s: Option<ReplanStatus>) -> &'static str {
    match s {
        None => "",
        Some(ReplanStatus::Success) => "success",
        Some(ReplanStatus::Infeasible) => "infeasible",
    }
}

fn mode_str(m: AgentMode) -> &'static str {
    match m {
        AgentMode::Normal => "normal",
        AgentMode::Recovering => "recovering",
    }
}

fn ped_fields(r: &PedestrianRow) -> [String; N_PED] {
    let s = &r.state;
    [
        s.x.to_string(),
        s.y.to_string(),
        s.heading.to_string(),
        s.v_forw.to_string(),
        s.v_orth.to_string(),
        s.omega.to_string(),
        r.risk.to_string(),
        r.risk_argmax.to_string(),
        r.threshold.to_string(),
        u8::from(r.replanned()).to_string(),
        r.replan_cap.map(|c| c.to_string()).unwrap_or_default(),
        status_str(r.replan_status).to_string(),
        r.iterations.to_string(),
        mode_str(r.mode).to_string(),
        r.plan_mean_x.to_string(),
        u8::from(r.sample).to_string(),
    ]
}

pub fn write_csv<W: std::io::Write>(rows: &[TraceRow], out: W) -> std::result::Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(csv_header())?;
    for row in rows {
        let mut rec = vec![row.step.to_string(), row.time.to_string()];
        for ped in &row.peds {
            rec.extend(ped_fields(ped));
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn to_csv_string(rows: &[TraceRow]) -> String {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("csv output is utf-8")
}

struct Fields<'a> {
    rec: &'a csv::StringRecord,
    record: u64,
    pos: usize,
}

impl<'a> Fields<'a> {
    fn bad(&self, reason: String) -> Error {
        Error::MalformedTrace {
            record: self.record,
            reason,
        }
    }

    fn next_str(&mut self) -> &'a str {
        let v = self.rec.get(self.pos).unwrap_or("");
        self.pos += 1;
        v
    }

    fn column(&self) -> String {
        csv_header().get(self.pos - 1).cloned().unwrap_or_default()
    }

    fn parse<T: std::str::FromStr>(&mut self) -> Result<T> {
        let raw = self.next_str();
        raw.parse()
            .map_err(|_| self.bad(format!("column {}: cannot parse {raw:?}", self.column())))
    }

    fn float(&mut self) -> Result<f64> {
        let v: f64 = self.parse()?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(self.bad(format!("column {}: non-finite value", self.column())))
        }
    }

    fn flag(&mut self) -> Result<bool> {
        match self.next_str() {
            "0" => Ok(false),
            "1" => Ok(true),
            other => Err(self.bad(format!("column {}: expected 0 or 1, got {other:?}", self.column()))),
        }
    }

    fn pedestrian(&mut self) -> Result<PedestrianRow> {
        let state = PedestrianState {
            x: self.float()?,
            y: self.float()?,
            heading: self.float()?,
            v_forw: self.float()?,
            v_orth: self.float()?,
            omega: self.float()?,
        };
        let risk = self.float()?;
        let risk_argmax = self.parse()?;
        let threshold = self.float()?;
        let replanned = self.flag()?;
        let cap = match self.next_str() {
            "" => None,
            raw => Some(
                raw.parse::<f64>()
                    .map_err(|_| self.bad(format!("column {}: cannot parse {raw:?}", self.column())))?,
            ),
        };
        let status = match self.next_str() {
            "" => None,
            "success" => Some(ReplanStatus::Success),
            "infeasible" => Some(ReplanStatus::Infeasible),
            other => return Err(self.bad(format!("column {}: unknown status {other:?}", self.column()))),
        };
        if replanned != status.is_some() || cap.is_some() != status.is_some() {
            return Err(self.bad("replanned flag, cap and status disagree".into()));
        }
        let iterations = self.parse()?;
        let mode = match self.next_str() {
            "normal" => AgentMode::Normal,
            "recovering" => AgentMode::Recovering,
            other => return Err(self.bad(format!("column {}: unknown mode {other:?}", self.column()))),
        };
        let plan_mean_x = self.float()?;
        let sample = self.flag()?;
        Ok(PedestrianRow {
            state,
            risk,
            risk_argmax,
            threshold,
            replan_cap: cap,
            replan_status: status,
            iterations,
            mode,
            plan_mean_x,
            sample,
        })
    }
}

/// Parses a trace CSV. Errors name the first offending record (1-based,
/// header = record 1).
pub fn parse_csv(text: &str) -> Result<Vec<TraceRow>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(text.as_bytes());
    let header = csv_header();
    let mut rows: Vec<TraceRow> = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let record = i as u64 + 1;
        let rec = rec.map_err(|e| Error::MalformedTrace {
            record,
            reason: e.to_string(),
        })?;
        if rec.len() != header.len() {
            return Err(Error::MalformedTrace {
                record,
                reason: format!("expected {} fields, found {}", header.len(), rec.len()),
            });
        }
        if i == 0 {
            if rec.iter().ne(header.iter().map(String::as_str)) {
                return Err(Error::MalformedTrace {
                    record,
                    reason: "unexpected header".into(),
                });
            }
            continue;
        }
        let mut f = Fields { rec: &rec, record, pos: 0 };
        let step: usize = f.parse()?;
        let time = f.float()?;
        let a = f.pedestrian()?;
        let b = f.pedestrian()?;
        if let Some(prev) = rows.last() {
            if step != prev.step + 1 {
                return Err(f.bad(format!("step {step} does not follow {}", prev.step)));
            }
        } else if step != 0 {
            return Err(f.bad(format!("first step is {step}, expected 0")));
        }
        rows.push(TraceRow { step, time, peds: [a, b] });
    }
    if rows.is_empty() && text.trim().is_empty() {
        return Err(Error::MalformedTrace {
            record: 1,
            reason: "missing header".into(),
        });
    }
    Ok(rows)
}

/// Outcome metadata stored next to the CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub scenario: String,
    pub seed: u64,
    pub end_state: EndState,
    pub steps: usize,
    pub passing_step: Option<usize>,
    /// Dead band the switch counts were computed with.
    pub dead_band: f64,
    pub switch_counts: [usize; 2],
    pub salsa: bool,
    pub final_states: [PedestrianState; 2],
    #[serde(default)]
    pub snapshots: Vec<SnapshotRecord>,
}

impl TrialRecord {
    pub fn from_result(r: &TrialResult, dead_band: f64) -> Self {
        let counts = switch_counts(&r.rows, r.passing_step, dead_band);
        Self {
            scenario: r.scenario.clone(),
            seed: r.seed,
            end_state: r.end_state,
            steps: r.steps(),
            passing_step: r.passing_step,
            dead_band,
            switch_counts: counts,
            salsa: is_salsa(counts),
            final_states: r.final_states,
            snapshots: r.snapshots.clone(),
        }
    }
}

pub fn to_json(record: &TrialRecord) -> String {
    serde_json::to_string_pretty(record).expect("trial record serializes")
}

pub fn parse_json(text: &str) -> Result<TrialRecord> {
    Ok(serde_json::from_str(text)?)
}

/// Metrics recomputed from trace rows, optionally cut at `up_to` (exclusive).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReplayMetrics {
    pub passing_step: Option<usize>,
    pub switch_counts: [usize; 2],
    pub salsa: bool,
}

pub fn replay_metrics(rows: &[TraceRow], up_to: Option<usize>, dead_band: f64) -> ReplayMetrics {
    let rows = match up_to {
        Some(n) => &rows[..n.min(rows.len())],
        None => rows,
    };
    let passing = passing_step(rows);
    let counts = switch_counts(rows, passing, dead_band);
    ReplayMetrics {
        passing_step: passing,
        switch_counts: counts,
        salsa: is_salsa(counts),
    }
}

/// Writes `<stem>.csv` and `<stem>.json` into `dir`; returns both paths.
pub fn write_trial(dir: &Path, result: &TrialResult, dead_band: f64) -> Result<(PathBuf, PathBuf)> {
    let stem = trace_stem(&result.scenario, result.seed);
    let csv_path = dir.join(format!("{stem}.csv"));
    let json_path = dir.join(format!("{stem}.json"));
    fs::write(&csv_path, to_csv_string(&result.rows)).map_err(|e| Error::io(&csv_path, e))?;
    let record = TrialRecord::from_result(result, dead_band);
    fs::write(&json_path, to_json(&record)).map_err(|e| Error::io(&json_path, e))?;
    Ok((csv_path, json_path))
}

pub fn read_csv(path: &Path) -> Result<Vec<TraceRow>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_csv(&text)
}

pub fn read_json(path: &Path) -> Result<TrialRecord> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::ModelParams;
    use crate::simulator::{make_scenario, run_trial, TrialOptions};

    fn short_trial() -> TrialResult {
        let p = ModelParams::default();
        let mut r = run_trial(&make_scenario("symmetric").unwrap(), 3, &p, TrialOptions { snapshots: true });
        r.rows.truncate(90);
        r
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let r = short_trial();
        let text = to_csv_string(&r.rows);
        assert_eq!(parse_csv(&text).unwrap(), r.rows);
    }

    #[test]
    fn header_shape() {
        let h = csv_header();
        assert_eq!(h.len(), 2 + 2 * 16);
        assert_eq!(h[2], "x_a");
        assert_eq!(h[18], "x_b");
    }

    #[test]
    fn truncated_file_names_first_bad_record() {
        let text = to_csv_string(&short_trial().rows);
        let cut = &text[..text.len() - 40];
        let lines = cut.lines().count() as u64;
        match parse_csv(cut) {
            Err(Error::MalformedTrace { record, .. }) => assert_eq!(record, lines),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bad_value_is_reported() {
        let text = to_csv_string(&short_trial().rows);
        let broken = text.replacen("normal", "sleeping", 1);
        let err = parse_csv(&broken).unwrap_err();
        assert!(matches!(err, Error::MalformedTrace { record: 2, .. }), "{err}");
        assert!(err.to_string().contains("mode_a"), "{err}");
    }

    #[test]
    fn empty_input_rejected() {
        assert!(parse_csv("").is_err());
        assert!(parse_csv("step,t\n").is_err());
    }

    #[test]
    fn json_round_trip() {
        let r = short_trial();
        let rec = TrialRecord::from_result(&r, 0.2);
        assert_eq!(parse_json(&to_json(&rec)).unwrap(), rec);
    }

    #[test]
    fn replay_matches_recorded_metrics() {
        let p = ModelParams::default();
        let r = run_trial(&make_scenario("symmetric").unwrap(), 3, &p, TrialOptions::default());
        let rec = TrialRecord::from_result(&r, p.dead_band);
        let m = replay_metrics(&parse_csv(&to_csv_string(&r.rows)).unwrap(), None, p.dead_band);
        assert_eq!(m.passing_step, rec.passing_step);
        assert_eq!(m.switch_counts, rec.switch_counts);
        assert_eq!(m.salsa, rec.salsa);
    }
}
