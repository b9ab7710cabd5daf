use std::path::{Path, PathBuf};

use lfvlab::manifest::Table;
use lfvlab::scenario::ExperimentKind;
use lfvlab::{compare_manifests, emit_csv, parse_scenario, run_experiment, ResultManifest, ScenarioError};

fn crate_dir() -> &'static Path {
    Path::new(env!("CARGO_MANIFEST_DIR"))
}

fn read(path: impl AsRef<Path>) -> String {
    std::fs::read_to_string(crate_dir().join(path)).unwrap()
}

fn problems(text: &str) -> Vec<String> {
    match parse_scenario(text).unwrap_err() {
        ScenarioError::Invalid(p) => p,
        e => panic!("expected validation problems, got {e}"),
    }
}

fn example_scenarios() -> Vec<PathBuf> {
    let mut v: Vec<_> = std::fs::read_dir(crate_dir().join("scenarios"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "scn"))
        .collect();
    v.sort();
    v
}

#[test]
fn golden_scenario_parses_and_passes() {
    let s = parse_scenario(&read("tests/data/golden_closed.scn")).unwrap();
    assert_eq!(s.name, "closed_harmonic");
    assert_eq!(s.experiment, ExperimentKind::ClosedBaseline);
    assert_eq!(s.position_grid().unwrap().unwrap().len(), 48);
    assert_eq!(s.tolerance("l2"), 1e-3);
    let m = run_experiment(&s).unwrap();
    assert!(m.all_passed(), "{:?}", m.checks);
}

#[test]
fn collision_window_rule_is_named() {
    let text = read("scenarios/collisions.scn").replace("epsilon = 0.01", "epsilon = 0.2");
    let p = problems(&text);
    assert!(p.iter().any(|m| m.contains("epsilon <= tau * 0.1")), "{p:?}");
}

#[test]
fn list_length_mismatch_reports_both_lengths() {
    let text = read("scenarios/kernels.scn").replace("omegas = 0.5, 1.0, 1.5, 2.0", "omegas = 0.5, 1.0, 1.5");
    let p = problems(&text);
    assert!(p.iter().any(|m| m.contains("bath.omegas has 3 entries but bath.n = 4")), "{p:?}");
}

#[test]
fn every_example_runs() {
    let scenarios = example_scenarios();
    assert_eq!(scenarios.len(), 7);
    for path in scenarios {
        let s = parse_scenario(&std::fs::read_to_string(&path).unwrap()).unwrap();
        let m = run_experiment(&s).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert!(!m.tables.is_empty() && !m.checks.is_empty());
        for t in &m.tables {
            assert!(t.rows.iter().all(|r| r.len() == t.columns.len()), "{}", t.name);
        }
        let generic_collisions = s.name == "collisions";
        assert_eq!(m.all_passed(), !generic_collisions, "{}: {:?}", s.name, m.checks);
    }
}

#[test]
fn collision_manifest_records_provenance() {
    let s = parse_scenario(&read("scenarios/collisions_resonant.scn")).unwrap();
    let m = run_experiment(&s).unwrap();
    assert_eq!(m.delta_weight.as_deref(), Some("unit"));
    assert!(!m.ancilla_cutoffs.is_empty());
    assert_eq!(m.table("gamma").unwrap().rows.len(), 10);
}

#[test]
fn plus_manifest_records_n_delta() {
    let s = parse_scenario(&read("scenarios/plus_harmonic.scn")).unwrap();
    let m = run_experiment(&s).unwrap();
    assert!(m.n_delta.is_some());
}

#[test]
fn echo_reproduces_tables_bit_for_bit() {
    for name in ["scenarios/closed_harmonic.scn", "scenarios/influence_free.scn", "scenarios/thermal.scn"] {
        let first = run_experiment(&parse_scenario(&read(name)).unwrap()).unwrap();
        let second = run_experiment(&parse_scenario(&first.scenario_echo).unwrap()).unwrap();
        assert_eq!(first.scenario_echo, second.scenario_echo);
        for (a, b) in first.tables.iter().zip(&second.tables) {
            let bits = |t: &Table| t.rows.iter().flatten().map(|v| v.to_bits()).collect::<Vec<_>>();
            assert_eq!(bits(a), bits(b), "{name}: table {}", a.name);
        }
        assert!(compare_manifests(&first, &second, 0.0).is_empty());
    }
}

fn small_manifest() -> ResultManifest {
    run_experiment(&parse_scenario(&read("scenarios/kernels.scn")).unwrap()).unwrap()
}

#[test]
fn csv_files_follow_the_table_schema() {
    let mut m = small_manifest();
    m.tables.push(Table::new("empty", &[("a", "1"), ("b", "time")]));
    let dir = tempfile::tempdir().unwrap();
    let paths = emit_csv(&m, dir.path()).unwrap();
    assert_eq!(paths.len(), 3);

    let mut r = csv::Reader::from_path(dir.path().join("kernels.csv")).unwrap();
    assert_eq!(r.headers().unwrap(), vec!["s", "noise_kernel", "dissipation_kernel"]);
    let rows: Vec<Vec<f64>> = r
        .records()
        .map(|rec| rec.unwrap().iter().map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows, m.table("kernels").unwrap().rows);

    assert_eq!(std::fs::read_to_string(dir.path().join("empty.csv")).unwrap(), "a,b\n");
}

#[test]
fn manifest_write_is_atomic_and_loadable() {
    let m = small_manifest();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("nested").join("manifest.json");
    std::fs::create_dir_all(path.parent().unwrap()).unwrap();
    std::fs::write(&path, "stale").unwrap();
    m.write_atomic(&path).unwrap();
    let entries: Vec<_> = std::fs::read_dir(path.parent().unwrap()).unwrap().collect();
    assert_eq!(entries.len(), 1);
    assert_eq!(ResultManifest::load(&path).unwrap(), m);
}

#[test]
fn compare_reports_the_largest_difference() {
    let a = small_manifest();
    let mut b = a.clone();
    b.tables[0].rows[3][1] += 1e-6;
    assert!(compare_manifests(&a, &b, 1e-5).is_empty());
    let d = compare_manifests(&a, &b, 1e-9);
    assert_eq!(d.len(), 1);
    assert!(d[0].contains("row 3, column noise_kernel"), "{d:?}");
    b.tables.pop();
    assert!(compare_manifests(&a, &b, 1.0).iter().any(|m| m.contains("missing from the second")));
}
