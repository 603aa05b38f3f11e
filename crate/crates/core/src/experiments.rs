//! Parameter sweeps with repetitions, in the style of NetLogo's
//! BehaviorSpace.
//!
//! An experiment document is a list of `key = value` lines. Keys are either
//! simulation parameters or one of the meta keys `name`, `repetitions`,
//! `stop_ticks` and `recorded` (comma separated metric names). A parameter
//! value of the form `[start -> step -> stop]` sweeps it:
//!
//! ```text
//! name = very-class-size
//! repetitions = 10
//! stop_ticks = 100
//! tip_mode = true
//! class_size_target_public = [1 -> 10 -> 100]
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::dynamics::{self, TickMetrics};
use crate::error::{Error, Result};
use crate::metrics;
use crate::params::{split_assignment, SimParams};
use crate::rng::mix_seed;

/// `{start, start + step, ...}` up to and including `stop`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRange {
    pub start: f64,
    pub step: f64,
    pub stop: f64,
}

impl SweepRange {
    pub fn new(start: f64, step: f64, stop: f64) -> Result<Self> {
        if !(start.is_finite() && step.is_finite() && stop.is_finite()) {
            return Err(Error::Domain("sweep bounds must be finite".into()));
        }
        if step <= 0.0 {
            return Err(Error::Domain(format!("sweep step must be positive, got {step}")));
        }
        if stop < start {
            return Err(Error::Domain(format!("empty sweep: {start} > {stop}")));
        }
        Ok(Self { start, step, stop })
    }

    pub fn values(&self) -> Vec<f64> {
        // tolerate rounding in the last step, e.g. 0.1 increments
        let slack = self.step * 1e-9;
        (0u64..)
            .map(|i| self.start + i as f64 * self.step)
            .take_while(|v| *v <= self.stop + slack)
            .collect()
    }

    /// Parse `[start -> step -> stop]` (`→` is accepted for `->`).
    pub fn parse(text: &str) -> Result<Self> {
        let inner = text
            .trim()
            .strip_prefix('[')
            .and_then(|t| t.strip_suffix(']'))
            .ok_or_else(|| Error::Domain(format!("`{text}` is not a `[a -> b -> c]` range")))?;
        let inner = inner.replace('→', "->");
        let parts: Vec<&str> = inner.split("->").map(str::trim).collect();
        if parts.len() != 3 {
            return Err(Error::Domain(format!("`{text}` needs exactly three parts")));
        }
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| Error::Domain(format!("`{s}` is not a number")))
        };
        Self::new(num(parts[0])?, num(parts[1])?, num(parts[2])?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub name: String,
    pub base: SimParams,
    pub swept: BTreeMap<String, SweepRange>,
    pub repetitions: u32,
    pub stop_ticks: u32,
    pub recorded: Vec<String>,
}

impl ExperimentSpec {
    pub fn new(name: &str, base: SimParams) -> Self {
        Self {
            name: name.to_string(),
            stop_ticks: base.max_ticks,
            base,
            swept: BTreeMap::new(),
            repetitions: 1,
            recorded: TickMetrics::SCALARS.iter().map(|s| s.to_string()).collect(),
        }
    }
}

pub fn parse_experiment(document: &str) -> Result<ExperimentSpec> {
    let mut spec = ExperimentSpec::new("experiment", SimParams::default());
    let mut stop_ticks = None;
    let parse_err = |line: usize, message: String| Error::Parse { line, message };

    for (idx, raw) in document.lines().enumerate() {
        let line = idx + 1;
        let Some((key, value)) = split_assignment(raw, line)? else {
            continue;
        };
        match key {
            "name" => spec.name = value.to_string(),
            "repetitions" => {
                spec.repetitions = value
                    .parse()
                    .ok()
                    .filter(|&r| r >= 1)
                    .ok_or_else(|| parse_err(line, format!("repetitions must be >= 1, got `{value}`")))?;
            }
            "stop_ticks" => {
                stop_ticks = Some(
                    value
                        .parse::<u32>()
                        .ok()
                        .filter(|&t| t >= 1)
                        .ok_or_else(|| parse_err(line, format!("stop_ticks must be >= 1, got `{value}`")))?,
                );
            }
            "recorded" => {
                let names: Vec<String> = value
                    .split(',')
                    .map(|s| s.trim().to_string())
                    .filter(|s| !s.is_empty())
                    .collect();
                if let Some(bad) = names.iter().find(|n| !TickMetrics::SCALARS.contains(&n.as_str())) {
                    return Err(parse_err(line, format!("unknown metric `{bad}`")));
                }
                spec.recorded = names;
            }
            _ if value.starts_with('[') => {
                if !SimParams::KEYS.contains(&key) {
                    return Err(parse_err(line, format!("unknown key `{key}`")));
                }
                let range = SweepRange::parse(value).map_err(|e| parse_err(line, e.to_string()))?;
                spec.swept.insert(key.to_string(), range);
            }
            _ => spec.base.set(key, value).map_err(|e| parse_err(line, e.to_string()))?,
        }
    }
    if let Some(t) = stop_ticks {
        spec.stop_ticks = t;
    }
    spec.base.max_ticks = spec.stop_ticks;
    // every configuration of the sweep must be a valid parameter set
    for (_, params) in expand(&spec)? {
        params.validate()?;
    }
    Ok(spec)
}

/// Text form of a swept value, as handed to `SimParams::set`.
fn format_value(v: f64) -> String {
    format!("{v}")
}

/// One parameter set per point of the Cartesian product of the swept
/// ranges. Keys vary in sorted order with the first key slowest, and
/// run ids count from 1.
pub fn expand(spec: &ExperimentSpec) -> Result<Vec<(u32, SimParams)>> {
    let axes: Vec<(&String, Vec<f64>)> = spec.swept.iter().map(|(k, r)| (k, r.values())).collect();
    let total: usize = axes.iter().map(|(_, v)| v.len()).product();
    let mut out = Vec::with_capacity(total);
    for n in 0..total {
        let mut params = spec.base.clone();
        params.max_ticks = spec.stop_ticks;
        let mut rest = n;
        for (key, values) in axes.iter().rev() {
            let v = values[rest % values.len()];
            rest /= values.len();
            params.set(key, &format_value(v))?;
        }
        out.push((n as u32 + 1, params));
    }
    Ok(out)
}

/// One tick of one repetition of one configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub run_id: u32,
    pub repetition: u32,
    pub seed: u64,
    /// Swept parameter values, in key order.
    pub params: Vec<(String, f64)>,
    pub metrics: TickMetrics,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub swept_keys: Vec<String>,
    pub recorded: Vec<String>,
    /// Sorted by (run_id, repetition, tick).
    pub records: Vec<RunRecord>,
}

/// Mean and 95% half-width of one metric over the repetitions of one
/// configuration at one tick.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub run_id: u32,
    pub params: Vec<(String, f64)>,
    pub tick: u32,
    pub n: usize,
    /// `(mean, ci95)` per recorded metric.
    pub stats: Vec<(f64, f64)>,
}

/// Execute every (run, repetition) pair on `workers` threads.
pub fn simulate(spec: &ExperimentSpec, workers: usize) -> Result<ExperimentResult> {
    let configs = expand(spec)?;
    let jobs: Vec<(u32, u32, &SimParams)> = configs
        .iter()
        .flat_map(|(id, p)| (1..=spec.repetitions).map(move |rep| (*id, rep, p)))
        .collect();
    let swept_keys: Vec<String> = spec.swept.keys().cloned().collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Domain(format!("thread pool: {e}")))?;
    let runs: Vec<Result<Vec<RunRecord>>> = pool.install(|| {
        jobs.par_iter()
            .map(|&(run_id, rep, base)| {
                let mut params = base.clone();
                params.seed = mix_seed(base.seed, u64::from(run_id), u64::from(rep));
                let swept: Vec<(String, f64)> = swept_keys
                    .iter()
                    .map(|k| {
                        let v = params.get(k).and_then(|s| s.parse().ok()).unwrap_or(f64::NAN);
                        (k.clone(), v)
                    })
                    .collect();
                let wrap = |e: Error| Error::Run {
                    run_id: run_id as usize,
                    repetition: rep as usize,
                    source: Box::new(e),
                };
                let mut world = dynamics::setup(&params).map_err(wrap)?;
                let ticks = dynamics::run(&mut world).map_err(wrap)?;
                Ok(ticks
                    .into_iter()
                    .map(|metrics| RunRecord {
                        run_id,
                        repetition: rep,
                        seed: params.seed,
                        params: swept.clone(),
                        metrics,
                    })
                    .collect())
            })
            .collect()
    });

    let mut records = Vec::with_capacity(jobs.len() * spec.stop_ticks as usize);
    for r in runs {
        records.extend(r?);
    }
    records.sort_by_key(|r| (r.run_id, r.repetition, r.metrics.tick));
    Ok(ExperimentResult {
        swept_keys,
        recorded: spec.recorded.clone(),
        records,
    })
}

/// Group records by (configuration, tick) and summarise each metric.
pub fn aggregate(result: &ExperimentResult) -> Vec<AggregateRow> {
    let mut groups: BTreeMap<(u32, u32), Vec<&RunRecord>> = BTreeMap::new();
    for r in &result.records {
        groups.entry((r.run_id, r.metrics.tick)).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((run_id, tick), rows)| {
            let stats = result
                .recorded
                .iter()
                .map(|m| {
                    let xs: Vec<f64> = rows
                        .iter()
                        .map(|r| r.metrics.scalar(m).unwrap_or(f64::NAN))
                        .collect();
                    mean_ci95(&xs)
                })
                .collect();
            AggregateRow {
                run_id,
                params: rows[0].params.clone(),
                tick,
                n: rows.len(),
                stats,
            }
        })
        .collect()
}

/// Sample mean and `1.96 * sd / sqrt(n)` with the n-1 standard deviation;
/// the half-width of a single sample is 0.
pub fn mean_ci95(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, 1.96 * var.sqrt() / (n as f64).sqrt())
}

fn csv_err(e: impl std::fmt::Display) -> Error {
    Error::Csv(e.to_string())
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(csv_err)?;
    String::from_utf8(bytes).map_err(csv_err)
}

/// One row per (run_id, repetition, tick).
pub fn raw_csv(result: &ExperimentResult) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["run_id".to_string(), "repetition".into(), "seed".into()];
    header.extend(result.swept_keys.iter().cloned());
    header.push("tick".into());
    header.extend(result.recorded.iter().cloned());
    w.write_record(&header).map_err(csv_err)?;
    for r in &result.records {
        let mut row = vec![r.run_id.to_string(), r.repetition.to_string(), r.seed.to_string()];
        row.extend(r.params.iter().map(|(_, v)| v.to_string()));
        row.push(r.metrics.tick.to_string());
        row.extend(
            result
                .recorded
                .iter()
                .map(|m| r.metrics.scalar(m).unwrap_or(f64::NAN).to_string()),
        );
        w.write_record(&row).map_err(csv_err)?;
    }
    finish(w)
}

/// One row per (configuration, tick) with `<metric>_mean` and
/// `<metric>_ci95` columns.
pub fn aggregated_csv(result: &ExperimentResult) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["run_id".to_string()];
    header.extend(result.swept_keys.iter().cloned());
    header.push("tick".into());
    header.push("n".into());
    for m in &result.recorded {
        header.push(format!("{m}_mean"));
        header.push(format!("{m}_ci95"));
    }
    w.write_record(&header).map_err(csv_err)?;
    for a in aggregate(result) {
        let mut row = vec![a.run_id.to_string()];
        row.extend(a.params.iter().map(|(_, v)| v.to_string()));
        row.push(a.tick.to_string());
        row.push(a.n.to_string());
        for (mean, ci) in &a.stats {
            row.push(mean.to_string());
            row.push(ci.to_string());
        }
        w.write_record(&row).map_err(csv_err)?;
    }
    finish(w)
}

/// Raw and aggregated CSV documents of a whole experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub raw: String,
    pub aggregated: String,
}

pub fn run_experiment(spec: &ExperimentSpec, workers: usize) -> Result<ExperimentOutput> {
    let result = simulate(spec, workers)?;
    Ok(ExperimentOutput {
        raw: raw_csv(&result)?,
        aggregated: aggregated_csv(&result)?,
    })
}

/// Figures that `plot_data` knows how to extract.
pub const FIGURES: &[&str] = &["fig4_9", "fig4_12", "fig4_13", "fig4_14"];

/// Migration measure plotted against class size.
pub const MIGRATION_MEASURE: &str = "migration_total_public";

struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn parse(text: &str) -> Result<Self> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let header = r.headers().map_err(csv_err)?.iter().map(String::from).collect();
        let rows = r
            .records()
            .map(|rec| rec.map(|rec| rec.iter().map(String::from).collect()))
            .collect::<std::result::Result<_, _>>()
            .map_err(csv_err)?;
        Ok(Self { header, rows })
    }

    fn col(&self, figure: &str, name: &str) -> Result<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn {
                figure: figure.to_string(),
                column: name.to_string(),
            })
    }

    fn num(&self, row: usize, col: usize) -> Result<f64> {
        let cell = &self.rows[row][col];
        cell.parse()
            .map_err(|_| Error::Csv(format!("row {}: `{cell}` is not a number", row + 2)))
    }
}

/// Tidy `x,y,series,ci` rows for one figure.
///
/// `fig4_9`, `fig4_12` and `fig4_13` read an aggregated experiment CSV and
/// use the final tick; `fig4_14` reads a `students.csv` dump and emits the
/// Lorenz curves of wealth and grades of active students.
pub fn plot_data(input: &str, figure: &str) -> Result<String> {
    let table = Table::parse(input)?;
    let mut out = String::from("x,y,series,ci\n");
    match figure {
        "fig4_9" => sweep_figure(
            &table,
            figure,
            "class_size_target_public",
            "class_size_target_private",
            &[MIGRATION_MEASURE],
            &mut out,
        )?,
        "fig4_12" => sweep_figure(
            &table,
            figure,
            "req_home_hours_public",
            "req_home_hours_private",
            &["seg_wealth_index"],
            &mut out,
        )?,
        "fig4_13" => sweep_figure(
            &table,
            figure,
            "req_home_hours_public",
            "req_home_hours_private",
            &["avg_wealth_public", "avg_wealth_private"],
            &mut out,
        )?,
        "fig4_14" => lorenz_figure(&table, figure, &mut out)?,
        other => return Err(Error::UnknownFigure(other.to_string())),
    }
    Ok(out)
}

fn sweep_figure(
    t: &Table,
    figure: &str,
    x_key: &str,
    series_key: &str,
    measures: &[&str],
    out: &mut String,
) -> Result<()> {
    let tick = t.col(figure, "tick")?;
    let x = t.col(figure, x_key)?;
    let series = t.col(figure, series_key)?;
    let cols = measures
        .iter()
        .map(|m| Ok((t.col(figure, &format!("{m}_mean"))?, t.col(figure, &format!("{m}_ci95"))?)))
        .collect::<Result<Vec<_>>>()?;
    let last = (0..t.rows.len())
        .map(|r| t.num(r, tick))
        .try_fold(f64::NEG_INFINITY, |acc, v| v.map(|v| acc.max(v)))?;
    for r in 0..t.rows.len() {
        if t.num(r, tick)? != last {
            continue;
        }
        for (m, (mean, ci)) in measures.iter().zip(&cols) {
            let label = if measures.len() == 1 {
                t.rows[r][series].clone()
            } else {
                format!("{m}@{}", t.rows[r][series])
            };
            let _ = writeln!(
                out,
                "{},{},{},{}",
                t.rows[r][x], t.rows[r][*mean], label, t.rows[r][*ci]
            );
        }
    }
    Ok(())
}

fn lorenz_figure(t: &Table, figure: &str, out: &mut String) -> Result<()> {
    let retired = t.col(figure, "retired")?;
    for measure in ["wealth", "grades"] {
        let c = t.col(figure, measure)?;
        let mut values = Vec::new();
        for r in 0..t.rows.len() {
            if t.rows[r][retired] == "true" {
                continue;
            }
            values.push(t.num(r, c)?.max(0.0));
        }
        let curve = metrics::lorenz(&values)?;
        for (p, l) in curve.points {
            let _ = writeln!(out, "{p},{l},{measure},0");
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn range_expansion() {
        assert_eq!(SweepRange::parse("[1 -> 10 -> 100]").unwrap().values().len(), 10);
        assert_eq!(SweepRange::parse("[1 → 1 → 10]").unwrap().values(), (1..=10).map(f64::from).collect::<Vec<_>>());
        assert_eq!(SweepRange::parse("[0 -> 0.1 -> 0.3]").unwrap().values().len(), 4);
        assert!(SweepRange::parse("[5 -> 0 -> 10]").is_err());
        assert!(SweepRange::parse("[5 -> -1 -> 10]").is_err());
        assert!(SweepRange::parse("[5 -> 1]").is_err());
        assert!(SweepRange::parse("5 -> 1 -> 7").is_err());
    }

    #[test]
    fn ci_of_singleton_is_zero() {
        assert_eq!(mean_ci95(&[3.5]), (3.5, 0.0));
        let (m, ci) = mean_ci95(&[1.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((ci - 1.96 * 2f64.sqrt() / 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn expansion_is_lexicographic() {
        let mut spec = ExperimentSpec::new("t", SimParams::default());
        spec.swept.insert("req_home_hours_public".into(), SweepRange::new(1.0, 1.0, 2.0).unwrap());
        spec.swept.insert("req_home_hours_private".into(), SweepRange::new(5.0, 1.0, 7.0).unwrap());
        let runs = expand(&spec).unwrap();
        let pairs: Vec<(u32, f64, f64)> = runs
            .iter()
            .map(|(id, p)| (*id, p.req_home_hours_private, p.req_home_hours_public))
            .collect();
        assert_eq!(
            pairs,
            vec![
                (1, 5.0, 1.0),
                (2, 5.0, 2.0),
                (3, 6.0, 1.0),
                (4, 6.0, 2.0),
                (5, 7.0, 1.0),
                (6, 7.0, 2.0)
            ]
        );
    }

    #[test]
    fn empty_sweep_is_one_base_run() {
        let spec = ExperimentSpec::new("t", SimParams::default());
        let runs = expand(&spec).unwrap();
        assert_eq!(runs.len(), 1);
        assert_eq!(runs[0].1, SimParams::default());
    }

    #[test]
    fn parse_errors_carry_lines() {
        let err = parse_experiment("name = x\nbogus = 3\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err:?}");
        let err = parse_experiment("public_fee = [1 -> 0 -> 3]").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        let err = parse_experiment("repetitions = 0").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        let err = parse_experiment("recorded = gini_wealth, nope").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        // a swept value that is not an integer cannot set an integer field
        assert!(parse_experiment("n_students = [1 -> 0.5 -> 2]").is_err());
    }

    #[test]
    fn parse_meta_keys() {
        let spec = parse_experiment(
            "name = demo\nrepetitions = 3\nstop_ticks = 7\nrecorded = gini_wealth\npublic_fee = 50\n",
        )
        .unwrap();
        assert_eq!(spec.name, "demo");
        assert_eq!(spec.repetitions, 3);
        assert_eq!(spec.stop_ticks, 7);
        assert_eq!(spec.base.max_ticks, 7);
        assert_eq!(spec.base.public_fee, 50.0);
        assert_eq!(spec.recorded, vec!["gini_wealth".to_string()]);
    }
}
