use std::collections::{BTreeMap, BTreeSet};

use pssm_core::experiments::{expand, parse_experiment, plot_data, run_experiment, simulate};
use pssm_core::Error;

const CLASS_SIZE: &str = include_str!("../../../experiments/very-class-size.cfg");
const HOME_HOURS: &str = include_str!("../../../experiments/very-home-study-hours.cfg");

const SMALL: &str = "\
name = small
repetitions = 4
stop_ticks = 6
recorded = migration_total_public, seg_wealth_index, enrolled_private
n_students = 60
tip_mode = true
class_size_target_public = [5 -> 15 -> 35]
req_home_hours_public = [1 -> 4 -> 9]
";

fn table(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

fn col(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"))
}

#[test]
fn shipped_experiments_expand_to_one_hundred_configurations() {
    for doc in [CLASS_SIZE, HOME_HOURS] {
        let spec = parse_experiment(doc).unwrap();
        assert_eq!(spec.repetitions, 10);
        assert_eq!(spec.stop_ticks, 100);
        assert_eq!(spec.swept.len(), 2);
        let configs = expand(&spec).unwrap();
        assert_eq!(configs.len(), 100);
        let distinct: BTreeSet<String> = configs
            .iter()
            .map(|(_, p)| spec.swept.keys().map(|k| p.get(k).unwrap()).collect::<Vec<_>>().join(","))
            .collect();
        assert_eq!(distinct.len(), 100);
    }
    let spec = parse_experiment(CLASS_SIZE).unwrap();
    assert!(spec.base.tip_mode);
    let spec = parse_experiment(HOME_HOURS).unwrap();
    assert!(!spec.base.tip_mode);
}

#[test]
fn raw_rows_are_unique_and_complete() {
    let spec = parse_experiment(SMALL).unwrap();
    let out = run_experiment(&spec, 2).unwrap();
    let (header, rows) = table(&out.raw);
    assert_eq!(rows.len(), 9 * 4 * 6);
    let (r, p, t, s) = (col(&header, "run_id"), col(&header, "repetition"), col(&header, "tick"), col(&header, "seed"));
    let keys: BTreeSet<(&str, &str, &str)> = rows.iter().map(|x| (&*x[r], &*x[p], &*x[t])).collect();
    assert_eq!(keys.len(), rows.len());
    let seeds: BTreeMap<(&str, &str), &str> = rows.iter().map(|x| ((&*x[r], &*x[p]), &*x[s])).collect();
    let distinct: BTreeSet<&str> = seeds.values().copied().collect();
    assert_eq!(distinct.len(), 9 * 4, "every (run, repetition) has its own seed");
}

#[test]
fn aggregate_matches_raw() {
    let spec = parse_experiment(SMALL).unwrap();
    let out = run_experiment(&spec, 1).unwrap();
    let (rh, raw) = table(&out.raw);
    let (ah, agg) = table(&out.aggregated);
    assert_eq!(agg.len(), 9 * 6);

    let mut groups: BTreeMap<(u32, u32), Vec<&Vec<String>>> = BTreeMap::new();
    for row in &raw {
        let key = (row[col(&rh, "run_id")].parse().unwrap(), row[col(&rh, "tick")].parse().unwrap());
        groups.entry(key).or_default().push(row);
    }
    for row in &agg {
        let key: (u32, u32) = (row[col(&ah, "run_id")].parse().unwrap(), row[col(&ah, "tick")].parse().unwrap());
        let members = &groups[&key];
        assert_eq!(row[col(&ah, "n")], members.len().to_string());
        for metric in &spec.recorded {
            let xs: Vec<f64> = members.iter().map(|m| m[col(&rh, metric)].parse().unwrap()).collect();
            let n = xs.len() as f64;
            let mean = xs.iter().sum::<f64>() / n;
            let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
            let half = 1.96 * (ss / (n - 1.0)).sqrt() / n.sqrt();
            let got_mean: f64 = row[col(&ah, &format!("{metric}_mean"))].parse().unwrap();
            let got_ci: f64 = row[col(&ah, &format!("{metric}_ci95"))].parse().unwrap();
            assert!((got_mean - mean).abs() <= 1e-9 * mean.abs().max(1.0), "{metric} mean at {key:?}");
            assert!((got_ci - half).abs() <= 1e-9 * half.max(1.0), "{metric} ci at {key:?}");
        }
    }
}

#[test]
fn output_does_not_depend_on_worker_count() {
    let spec = parse_experiment(SMALL).unwrap();
    let one = run_experiment(&spec, 1).unwrap();
    let many = run_experiment(&spec, 8).unwrap();
    assert_eq!(one.raw, many.raw);
    assert_eq!(one.aggregated, many.aggregated);
}

#[test]
fn sorted_records_follow_run_repetition_tick() {
    let spec = parse_experiment(SMALL).unwrap();
    let result = simulate(&spec, 3).unwrap();
    let keys: Vec<_> = result.records.iter().map(|r| (r.run_id, r.repetition, r.metrics.tick)).collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
    assert_eq!(keys.first(), Some(&(1, 1, 1)));
}

#[test]
fn parse_errors_name_the_line() {
    let err = parse_experiment("name = x\nrepetitions = 0\n").unwrap_err();
    assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
    let err = parse_experiment("name = x\n\nno_such_key = [1 -> 1 -> 2]\n").unwrap_err();
    assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
    let err = parse_experiment("recorded = enrolled_public, bogus\n").unwrap_err();
    assert!(matches!(err, Error::Parse { line: 1, .. }), "{err}");
}

#[test]
fn figure_extraction_has_one_point_per_configuration() {
    let doc = "\
name = fig
repetitions = 2
stop_ticks = 3
n_students = 40
tip_mode = true
class_size_target_public = [5 -> 5 -> 20]
class_size_target_private = [10 -> 30 -> 40]
";
    let spec = parse_experiment(doc).unwrap();
    let out = run_experiment(&spec, 1).unwrap();
    let fig = plot_data(&out.aggregated, "fig4_9").unwrap();
    let (header, rows) = table(&fig);
    assert_eq!(header, ["x", "y", "series", "ci"]);
    assert_eq!(rows.len(), 8);
    let series: BTreeSet<&str> = rows.iter().map(|r| r[2].as_str()).collect();
    assert_eq!(series.len(), 2);
    assert!(matches!(plot_data(&out.aggregated, "fig9_9"), Err(Error::UnknownFigure(_))));
}
