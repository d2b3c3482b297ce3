//! Counting-process paths, observed-data records, and sample ingestion.
//!
//! A subject's event history is a counting process N: right-continuous,
//! nondecreasing, integer-valued, N(0) = 0. We store it as the sorted
//! sequence of event times with repetitions — the k-th order statistic is
//! the k-th event time T_k, and N decomposes into the simple processes
//! N^{(k)} jumping once at T_k. Around the path sit the observation schemes
//! the estimators distinguish: censoring observed directly (records (Ñ, C))
//! or itself censored by a terminal event (records (Ñ, C̃, D̃) with
//! C̃ = C ∧ T and D̃ = 1{C < T}), in both cases optionally carrying a real
//! covariate Z.
//!
//! File ingestion lives here too: a subjects CSV (`id,followup,reason,z`)
//! joined with an events CSV (`id,time`) yields a validated, design-
//! homogeneous [`Sample`].

use std::collections::BTreeMap;
use std::path::Path;

use thiserror::Error;

use crate::stepfn::StepFunction;

const SUBJECTS_HEADER: &str = "id,followup,reason,z";
const EVENTS_HEADER: &str = "id,time";

/// Errors from path construction, sample validation, and file ingestion.
#[derive(Debug, Error)]
pub enum DataError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Csv(#[from] csv::Error),
    #[error("{path}: expected header `{expected}`, got `{got}`")]
    BadHeader { path: String, expected: &'static str, got: String },
    #[error("{path}: row {row}: {msg}")]
    BadField { path: String, row: usize, msg: String },
    #[error("sample contains no subjects")]
    EmptySample,
    #[error("subject ids must be strictly increasing (saw {id} after {prev})")]
    IdOrder { prev: u64, id: u64 },
    #[error("subject {id}: follow-up must be finite and positive (got {value})")]
    BadFollowUp { id: u64, value: f64 },
    #[error("subject {id}: unknown reason `{reason}` (expected `censoring` or `terminal`)")]
    UnknownReason { id: u64, reason: String },
    #[error("event times must be finite and positive (got {0})")]
    BadTime(f64),
    #[error("subject {id}: event at {time} exceeds follow-up {followup}")]
    EventAfterFollowUp { id: u64, time: f64, followup: f64 },
    #[error("event row references unknown subject id {id}")]
    UnknownEventId { id: u64 },
    #[error(
        "design `observed` requested but subject {id} records a terminal event; \
         use design `censored`"
    )]
    MixedDesign { id: u64 },
    #[error("sample mixes observed- and censored-censoring subjects")]
    MixedFollowUp,
}

// ---------------------------------------------------------------------------
// CountingPath
// ---------------------------------------------------------------------------

/// One subject's counting process: sorted event times, repetitions allowed
/// (a time repeated k times encodes a jump of size k).
#[derive(Debug, Clone, PartialEq)]
pub struct CountingPath {
    times: Vec<f64>,
}

impl CountingPath {
    /// Builds a path from event times in any order.
    pub fn new(times: impl IntoIterator<Item = f64>) -> Result<Self, DataError> {
        let mut times: Vec<f64> = times.into_iter().collect();
        for &t in &times {
            if !t.is_finite() || t <= 0.0 {
                return Err(DataError::BadTime(t));
            }
        }
        times.sort_unstable_by(f64::total_cmp);
        Ok(Self { times })
    }

    /// The path with no events.
    pub fn empty() -> Self {
        Self { times: Vec::new() }
    }

    /// Sorted event times.
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// N(∞), the total event count.
    pub fn total(&self) -> usize {
        self.times.len()
    }

    /// N(t) = #{k : T_k ≤ t}.
    pub fn count_at(&self, t: f64) -> usize {
        self.times.partition_point(|&u| u <= t)
    }

    /// N(t−) = #{k : T_k < t}.
    pub fn count_before(&self, t: f64) -> usize {
        self.times.partition_point(|&u| u < t)
    }

    /// The censored path Ñ(s) = ∫ 1{c ≥ u} N(du): keeps events with time
    /// ≤ c, ties at c included.
    pub fn censor(&self, c: f64) -> Self {
        let keep = self.times.partition_point(|&u| u <= c);
        Self { times: self.times[..keep].to_vec() }
    }

    /// The simple processes N^{(k)}, k = 1..N(∞), each jumping once at T_k;
    /// their pointwise sum reproduces the path.
    pub fn decompose(&self) -> Vec<Self> {
        self.times.iter().map(|&t| Self { times: vec![t] }).collect()
    }

    /// The path as a step function; simultaneous events merge into one jump
    /// of integer size.
    pub fn to_step(&self) -> StepFunction {
        StepFunction::new(0.0, merged_jumps(&self.times, 1.0))
            .expect("validated event times form a step function")
    }
}

/// Run-length encodes sorted times into `(time, count·unit)` pairs.
fn merged_jumps(sorted: &[f64], unit: f64) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = Vec::new();
    for &t in sorted {
        match out.last_mut() {
            Some((u, j)) if *u == t => *j += unit,
            _ => out.push((t, unit)),
        }
    }
    out
}

/// F_n(t) = n^{−1} Σ_i N_i(t): the jump at u is (multiplicity of u across
/// all paths)/n, computed as one exact integer count per distinct time
/// followed by a single division.
pub fn empirical_mean<'a>(
    paths: impl IntoIterator<Item = &'a CountingPath>,
) -> Result<StepFunction, DataError> {
    let mut all: Vec<f64> = Vec::new();
    let mut n = 0usize;
    for p in paths {
        n += 1;
        all.extend_from_slice(&p.times);
    }
    if n == 0 {
        return Err(DataError::EmptySample);
    }
    all.sort_unstable_by(f64::total_cmp);
    let jumps = merged_jumps(&all, 1.0)
        .into_iter()
        .map(|(t, k)| (t, k / n as f64));
    Ok(StepFunction::new(0.0, jumps).expect("validated event times form a step function"))
}

// ---------------------------------------------------------------------------
// Subjects and samples
// ---------------------------------------------------------------------------

/// How a subject's follow-up ended and what was recorded about it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FollowUp {
    /// Censoring time C observed directly (Example-2 data (Ñ, C)).
    Observed { censor: f64 },
    /// Follow-up C̃ = C ∧ T with indicator D̃ (Example-3 data (Ñ, C̃, D̃));
    /// `censoring_observed` is D̃ = 1, i.e. C < T.
    Censored { time: f64, censoring_observed: bool },
}

impl FollowUp {
    /// The time at which observation of events stopped (C or C̃).
    pub fn time(&self) -> f64 {
        match *self {
            FollowUp::Observed { censor } => censor,
            FollowUp::Censored { time, .. } => time,
        }
    }
}

/// Which observation scheme a sample's records follow.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataDesign {
    Observed,
    Censored,
}

/// Requested analysis design, the CLI- and scenario-level notion: the
/// uncensored design reads the same files as the observed one but averages
/// the raw paths.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Design {
    Uncensored,
    Observed,
    Censored,
}

/// One observed-data record: events up to the follow-up, the follow-up
/// itself, and an optional covariate.
#[derive(Debug, Clone, PartialEq)]
pub struct Subject {
    id: u64,
    path: CountingPath,
    followup: FollowUp,
    z: Option<f64>,
}

impl Subject {
    pub fn new(
        id: u64,
        path: CountingPath,
        followup: FollowUp,
        z: Option<f64>,
    ) -> Result<Self, DataError> {
        let end = followup.time();
        if !end.is_finite() || end <= 0.0 {
            return Err(DataError::BadFollowUp { id, value: end });
        }
        if let Some(&last) = path.times().last() {
            if last > end {
                return Err(DataError::EventAfterFollowUp { id, time: last, followup: end });
            }
        }
        Ok(Self { id, path, followup, z })
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn path(&self) -> &CountingPath {
        &self.path
    }

    pub fn followup(&self) -> FollowUp {
        self.followup
    }

    pub fn z(&self) -> Option<f64> {
        self.z
    }
}

/// A nonempty, design-homogeneous collection of subjects with strictly
/// increasing ids.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    subjects: Vec<Subject>,
    design: DataDesign,
}

impl Sample {
    pub fn new(subjects: Vec<Subject>) -> Result<Self, DataError> {
        let first = subjects.first().ok_or(DataError::EmptySample)?;
        let design = match first.followup {
            FollowUp::Observed { .. } => DataDesign::Observed,
            FollowUp::Censored { .. } => DataDesign::Censored,
        };
        for w in subjects.windows(2) {
            if w[1].id <= w[0].id {
                return Err(DataError::IdOrder { prev: w[0].id, id: w[1].id });
            }
        }
        for s in &subjects {
            let matches = matches!(
                (design, s.followup),
                (DataDesign::Observed, FollowUp::Observed { .. })
                    | (DataDesign::Censored, FollowUp::Censored { .. })
            );
            if !matches {
                return Err(DataError::MixedFollowUp);
            }
        }
        Ok(Self { subjects, design })
    }

    pub fn n(&self) -> usize {
        self.subjects.len()
    }

    pub fn design(&self) -> DataDesign {
        self.design
    }

    pub fn subjects(&self) -> &[Subject] {
        &self.subjects
    }
}

// ---------------------------------------------------------------------------
// File ingestion
// ---------------------------------------------------------------------------

fn check_header(
    rdr: &mut csv::Reader<std::fs::File>,
    path: &Path,
    expected: &'static str,
) -> Result<(), DataError> {
    let got = rdr.headers()?.iter().collect::<Vec<_>>().join(",");
    if got != expected {
        return Err(DataError::BadHeader {
            path: path.display().to_string(),
            expected,
            got,
        });
    }
    Ok(())
}

fn field_err(path: &Path, row: usize, msg: impl Into<String>) -> DataError {
    DataError::BadField { path: path.display().to_string(), row, msg: msg.into() }
}

struct SubjectRow {
    followup: f64,
    terminal: bool,
    z: Option<f64>,
    events: Vec<f64>,
}

/// Reads a subjects CSV joined with an events CSV into a [`Sample`] under
/// the requested design.
///
/// The `reason` column distinguishes the schemes: under `Design::Censored`
/// it becomes D̃ (`censoring` → 1, `terminal` → 0); under `Design::Observed`
/// any `terminal` row is an error, since observed-censoring data records C
/// itself. The uncensored design accepts either reason and treats the
/// follow-up as the end of observation.
pub fn read_sample(
    subjects_path: &Path,
    events_path: &Path,
    requested: Design,
) -> Result<Sample, DataError> {
    let mut rdr = csv::Reader::from_path(subjects_path)?;
    check_header(&mut rdr, subjects_path, SUBJECTS_HEADER)?;
    let mut rows: BTreeMap<u64, SubjectRow> = BTreeMap::new();
    let mut prev_id: Option<u64> = None;
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = k + 2; // 1-based, after the header
        if rec.len() != 4 {
            return Err(field_err(subjects_path, row, format!("expected 4 fields, got {}", rec.len())));
        }
        let id: u64 = rec[0]
            .parse()
            .map_err(|_| field_err(subjects_path, row, format!("bad id `{}`", &rec[0])))?;
        if let Some(prev) = prev_id {
            if id <= prev {
                return Err(DataError::IdOrder { prev, id });
            }
        }
        prev_id = Some(id);
        let followup: f64 = rec[1]
            .parse()
            .map_err(|_| field_err(subjects_path, row, format!("bad followup `{}`", &rec[1])))?;
        if !followup.is_finite() || followup <= 0.0 {
            return Err(DataError::BadFollowUp { id, value: followup });
        }
        let terminal = match &rec[2] {
            "censoring" => false,
            "terminal" => true,
            other => return Err(DataError::UnknownReason { id, reason: other.to_string() }),
        };
        if terminal && requested == Design::Observed {
            return Err(DataError::MixedDesign { id });
        }
        let z = if rec[3].is_empty() {
            None
        } else {
            Some(rec[3].parse().map_err(|_| {
                field_err(subjects_path, row, format!("bad covariate `{}`", &rec[3]))
            })?)
        };
        rows.insert(id, SubjectRow { followup, terminal, z, events: Vec::new() });
    }

    let mut rdr = csv::Reader::from_path(events_path)?;
    check_header(&mut rdr, events_path, EVENTS_HEADER)?;
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = k + 2;
        if rec.len() != 2 {
            return Err(field_err(events_path, row, format!("expected 2 fields, got {}", rec.len())));
        }
        let id: u64 = rec[0]
            .parse()
            .map_err(|_| field_err(events_path, row, format!("bad id `{}`", &rec[0])))?;
        let time: f64 = rec[1]
            .parse()
            .map_err(|_| field_err(events_path, row, format!("bad time `{}`", &rec[1])))?;
        let entry = rows.get_mut(&id).ok_or(DataError::UnknownEventId { id })?;
        if !time.is_finite() || time <= 0.0 {
            return Err(DataError::BadTime(time));
        }
        if time > entry.followup {
            return Err(DataError::EventAfterFollowUp { id, time, followup: entry.followup });
        }
        entry.events.push(time);
    }

    let mut subjects = Vec::with_capacity(rows.len());
    for (id, r) in rows {
        let followup = match requested {
            Design::Censored => FollowUp::Censored {
                time: r.followup,
                censoring_observed: !r.terminal,
            },
            Design::Observed | Design::Uncensored => FollowUp::Observed { censor: r.followup },
        };
        subjects.push(Subject::new(id, CountingPath::new(r.events)?, followup, r.z)?);
    }
    Sample::new(subjects)
}

/// Writes a sample back to the two-file format read by [`read_sample`].
/// Numbers are written with enough digits to round-trip exactly.
pub fn write_sample(
    sample: &Sample,
    subjects_path: &Path,
    events_path: &Path,
) -> Result<(), DataError> {
    let mut w = csv::Writer::from_path(subjects_path)?;
    w.write_record(SUBJECTS_HEADER.split(','))?;
    for s in sample.subjects() {
        let (followup, reason) = match s.followup() {
            FollowUp::Observed { censor } => (censor, "censoring"),
            FollowUp::Censored { time, censoring_observed } => {
                (time, if censoring_observed { "censoring" } else { "terminal" })
            }
        };
        let z = s.z().map(|z| z.to_string()).unwrap_or_default();
        w.write_record([s.id().to_string(), followup.to_string(), reason.to_string(), z])?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(events_path)?;
    w.write_record(EVENTS_HEADER.split(','))?;
    for s in sample.subjects() {
        for &t in s.path().times() {
            w.write_record([s.id().to_string(), t.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn path(times: &[f64]) -> CountingPath {
        CountingPath::new(times.iter().copied()).unwrap()
    }

    // --- paths --------------------------------------------------------------

    #[test]
    fn path_counts_with_tie_conventions() {
        let p = path(&[2.0, 1.0, 1.0]);
        assert_eq!(p.times(), &[1.0, 1.0, 2.0]);
        assert_eq!(p.total(), 3);
        assert_eq!(p.count_at(1.0), 2);
        assert_eq!(p.count_before(1.0), 0);
        assert_eq!(p.count_at(0.5), 0);
        assert_eq!(p.count_at(f64::INFINITY), 3);
    }

    #[test]
    fn path_rejects_bad_times() {
        assert!(matches!(CountingPath::new([0.0]), Err(DataError::BadTime(_))));
        assert!(matches!(CountingPath::new([-1.0]), Err(DataError::BadTime(_))));
        assert!(matches!(CountingPath::new([f64::NAN]), Err(DataError::BadTime(_))));
    }

    #[test]
    fn decompose_yields_simple_paths_summing_back() {
        let p = path(&[1.0, 1.0, 2.0]);
        let parts = p.decompose();
        assert_eq!(parts.len(), 3);
        assert_eq!(parts[0].times(), &[1.0]);
        assert_eq!(parts[1].times(), &[1.0]);
        assert_eq!(parts[2].times(), &[2.0]);
        for t in [0.5, 1.0, 1.5, 2.0, 3.0] {
            let sum: usize = parts.iter().map(|q| q.count_at(t)).sum();
            assert_eq!(sum, p.count_at(t));
        }
        assert!(CountingPath::empty().decompose().is_empty());
        assert_eq!(path(&[3.0]).decompose().len(), 1);
    }

    #[test]
    fn censor_keeps_ties_and_is_idempotent() {
        let p = path(&[1.0, 3.0]);
        assert_eq!(p.censor(2.0).times(), &[1.0]);
        assert_eq!(path(&[2.0]).censor(2.0).times(), &[2.0]);
        assert_eq!(p.censor(f64::INFINITY).times(), p.times());
        let once = p.censor(2.0);
        assert_eq!(once.censor(2.0), once);
        assert_eq!(once.censor(5.0), once);
    }

    #[test]
    fn to_step_merges_simultaneous_events() {
        let p = path(&[1.0, 1.0, 2.0]);
        let f = p.to_step();
        assert_eq!(f.times(), &[1.0, 2.0]);
        assert_eq!(f.jumps(), &[2.0, 1.0]);
        assert_eq!(f.value(1.5), 2.0);
    }

    // --- empirical mean ------------------------------------------------------

    #[test]
    fn empirical_mean_averages_jump_mass() {
        let paths = [path(&[1.0, 3.0]), path(&[2.0])];
        let f = empirical_mean(paths.iter()).unwrap();
        assert_eq!(f.times(), &[1.0, 2.0, 3.0]);
        assert_eq!(f.jumps(), &[0.5, 0.5, 0.5]);
        let single = empirical_mean([&paths[0]]).unwrap();
        assert_eq!(single, paths[0].to_step());
        let same = empirical_mean([&paths[1], &paths[1], &paths[1]]).unwrap();
        assert_eq!(same, paths[1].to_step());
        assert!(matches!(empirical_mean([]), Err(DataError::EmptySample)));
    }

    #[test]
    fn empirical_mean_commutes_with_decomposition() {
        // F_n = Σ_k F_n^{(k)}: group the k-th simple process across subjects.
        let paths = [path(&[0.5, 1.5, 2.5]), path(&[1.0]), path(&[0.5, 2.0])];
        let full = empirical_mean(paths.iter()).unwrap();
        let n = paths.len();
        let max_k = paths.iter().map(|p| p.total()).max().unwrap();
        let mut sum = StepFunction::constant(0.0);
        for k in 0..max_k {
            let kth: Vec<CountingPath> = paths
                .iter()
                .map(|p| p.decompose().get(k).cloned().unwrap_or_else(CountingPath::empty))
                .collect();
            // same divisor n even when a path lacks a k-th event
            let mut grouped = empirical_mean(kth.iter()).unwrap();
            grouped = grouped.scale(kth.len() as f64 / n as f64);
            sum = sum.add(&grouped);
        }
        for t in [0.25, 0.5, 1.0, 1.75, 2.5, 3.0] {
            assert!((sum.value(t) - full.value(t)).abs() < 1e-15);
        }
    }

    // --- samples -------------------------------------------------------------

    fn dataset_a() -> Sample {
        let s1 = Subject::new(
            1,
            path(&[1.0]),
            FollowUp::Observed { censor: 4.0 },
            None,
        )
        .unwrap();
        let s2 = Subject::new(
            2,
            path(&[2.0]),
            FollowUp::Observed { censor: 2.0 },
            None,
        )
        .unwrap();
        Sample::new(vec![s1, s2]).unwrap()
    }

    #[test]
    fn subject_validates_followup_invariant() {
        assert!(matches!(
            Subject::new(1, path(&[3.0]), FollowUp::Observed { censor: 2.0 }, None),
            Err(DataError::EventAfterFollowUp { id: 1, .. })
        ));
        assert!(matches!(
            Subject::new(1, CountingPath::empty(), FollowUp::Observed { censor: 0.0 }, None),
            Err(DataError::BadFollowUp { .. })
        ));
        // tie at the follow-up is legal: 1{C ≥ u} keeps it
        assert!(Subject::new(1, path(&[2.0]), FollowUp::Observed { censor: 2.0 }, None).is_ok());
    }

    #[test]
    fn sample_enforces_homogeneity_and_id_order() {
        assert!(matches!(Sample::new(vec![]), Err(DataError::EmptySample)));
        let a = Subject::new(1, CountingPath::empty(), FollowUp::Observed { censor: 1.0 }, None)
            .unwrap();
        let b = Subject::new(
            2,
            CountingPath::empty(),
            FollowUp::Censored { time: 1.0, censoring_observed: true },
            None,
        )
        .unwrap();
        assert!(matches!(
            Sample::new(vec![a.clone(), b]),
            Err(DataError::MixedFollowUp)
        ));
        assert!(matches!(
            Sample::new(vec![a.clone(), a]),
            Err(DataError::IdOrder { .. })
        ));
        assert_eq!(dataset_a().design(), DataDesign::Observed);
        assert_eq!(dataset_a().n(), 2);
    }

    // --- file round trip ------------------------------------------------------

    #[test]
    fn write_then_read_is_identity() {
        let dir = tempfile::tempdir().unwrap();
        let sp = dir.path().join("subjects.csv");
        let ep = dir.path().join("events.csv");
        let sample = dataset_a();
        write_sample(&sample, &sp, &ep).unwrap();
        let back = read_sample(&sp, &ep, Design::Observed).unwrap();
        assert_eq!(back, sample);
    }

    #[test]
    fn read_applies_design_semantics() {
        let dir = tempfile::tempdir().unwrap();
        let sp = dir.path().join("subjects.csv");
        let ep = dir.path().join("events.csv");
        fs::write(
            &sp,
            "id,followup,reason,z\n1,1,censoring,\n2,2,terminal,0.5\n3,3,censoring,1\n",
        )
        .unwrap();
        fs::write(&ep, "id,time\n1,0.5\n3,1.5\n").unwrap();

        let cens = read_sample(&sp, &ep, Design::Censored).unwrap();
        assert_eq!(cens.design(), DataDesign::Censored);
        assert_eq!(
            cens.subjects()[1].followup(),
            FollowUp::Censored { time: 2.0, censoring_observed: false }
        );
        assert_eq!(cens.subjects()[1].z(), Some(0.5));
        assert_eq!(cens.subjects()[2].path().times(), &[1.5]);

        assert!(matches!(
            read_sample(&sp, &ep, Design::Observed),
            Err(DataError::MixedDesign { id: 2 })
        ));
        // the uncensored design reads terminal rows as plain end of observation
        let unc = read_sample(&sp, &ep, Design::Uncensored).unwrap();
        assert_eq!(unc.design(), DataDesign::Observed);
    }

    #[test]
    fn read_rejects_malformed_files() {
        let dir = tempfile::tempdir().unwrap();
        let sp = dir.path().join("subjects.csv");
        let ep = dir.path().join("events.csv");

        fs::write(&sp, "id,fu,reason,z\n").unwrap();
        fs::write(&ep, "id,time\n").unwrap();
        assert!(matches!(
            read_sample(&sp, &ep, Design::Observed),
            Err(DataError::BadHeader { .. })
        ));

        fs::write(&sp, "id,followup,reason,z\n").unwrap();
        assert!(matches!(
            read_sample(&sp, &ep, Design::Observed),
            Err(DataError::EmptySample)
        ));

        fs::write(&sp, "id,followup,reason,z\n2,1,censoring,\n1,1,censoring,\n").unwrap();
        assert!(matches!(
            read_sample(&sp, &ep, Design::Observed),
            Err(DataError::IdOrder { prev: 2, id: 1 })
        ));

        fs::write(&sp, "id,followup,reason,z\n1,1,dropout,\n").unwrap();
        assert!(matches!(
            read_sample(&sp, &ep, Design::Observed),
            Err(DataError::UnknownReason { id: 1, .. })
        ));

        fs::write(&sp, "id,followup,reason,z\n1,2,censoring,\n").unwrap();
        fs::write(&ep, "id,time\n1,3\n").unwrap();
        assert!(matches!(
            read_sample(&sp, &ep, Design::Observed),
            Err(DataError::EventAfterFollowUp { id: 1, .. })
        ));

        fs::write(&ep, "id,time\n7,1\n").unwrap();
        assert!(matches!(
            read_sample(&sp, &ep, Design::Observed),
            Err(DataError::UnknownEventId { id: 7 })
        ));

        fs::write(&sp, "id,followup,reason,z\n1,0,censoring,\n").unwrap();
        fs::write(&ep, "id,time\n").unwrap();
        assert!(matches!(
            read_sample(&sp, &ep, Design::Observed),
            Err(DataError::BadFollowUp { id: 1, .. })
        ));
    }
}
