use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use spbo::netlist::{synthesize, SynthParams};
use spbo::run_record::RunRecord;
use spbo::{evaluate_sp, pack, save_design, Design, SequencePair};
use spbo_cli::commands::{EvaluationDump, MacroPlacement, SummaryRow, TraceRow};

fn spbo(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("spbo").chain(args.iter().copied());
    let code = spbo_cli::main_with(argv, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

fn small_design(dir: &Path, macros: usize, seed: u64) -> (PathBuf, Design) {
    let params = SynthParams {
        name: format!("small{macros}"),
        macros,
        nets: 3 * macros,
        pads: 6,
        whitespace: 1.0,
        side: (10, 60),
        degree: (2, 4),
        pad_fraction: 0.3,
    };
    let d = synthesize(&params, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
    let path = dir.join(format!("small{macros}.json"));
    save_design(&d, &path).unwrap();
    (path, d)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// `(x, y, width, height)` of every `class="macro"` rectangle.
fn svg_macro_rects(svg: &str) -> Vec<(f64, f64, f64, f64)> {
    let attr = |tag: &str, name: &str| -> f64 {
        let key = format!(" {name}=\"");
        let start = tag.find(&key).unwrap() + key.len();
        let end = start + tag[start..].find('"').unwrap();
        tag[start..end].parse().unwrap()
    };
    svg.lines()
        .filter(|l| l.starts_with("<rect class=\"macro\""))
        .map(|t| (attr(t, "x"), attr(t, "y"), attr(t, "width"), attr(t, "height")))
        .collect()
}

fn read_csv<T: serde::de::DeserializeOwned>(path: &Path) -> Vec<T> {
    csv::Reader::from_path(path)
        .unwrap()
        .deserialize()
        .collect::<Result<_, _>>()
        .unwrap()
}

fn read_record(path: &Path) -> RunRecord {
    RunRecord::read_jsonl(fs::read(path).unwrap().as_slice()).unwrap()
}

fn records_in(dir: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "jsonl"))
        .collect();
    v.sort();
    v
}

#[test]
fn one_macro_renders_one_rectangle_at_the_origin() {
    let dir = tempfile::tempdir().unwrap();
    let (design, _) = small_design(dir.path(), 1, 1);
    let svg = dir.path().join("one.svg");
    let (code, out, _) = spbo(&["pack", "--design", s(&design), "--svg", s(&svg)]);
    assert_eq!(code, 0);
    assert!(out.contains("fits"));
    let rects = svg_macro_rects(&fs::read_to_string(&svg).unwrap());
    assert_eq!(rects.len(), 1);
    assert_eq!((rects[0].0, rects[0].1), (0.0, 0.0));
}

#[test]
fn svg_coordinates_parse_back_to_the_packing() {
    let dir = tempfile::tempdir().unwrap();
    let (design_path, design) = small_design(dir.path(), 6, 2);
    let svg = dir.path().join("id.svg");
    let (code, _, _) = spbo(&["pack", "--design", s(&design_path), "--svg", s(&svg)]);
    assert_eq!(code, 0);
    let rects = svg_macro_rects(&fs::read_to_string(&svg).unwrap());
    let packed = pack(&SequencePair::identity(6), &design.shapes()).unwrap();
    let mut x = 0.0;
    for (r, (p, m)) in rects.iter().zip(packed.positions.iter().zip(&design.macros)) {
        assert_eq!((r.0, r.1), *p);
        assert_eq!((r.2, r.3), (m.shape.width, m.shape.height));
        // identity pair: a single row, left to right
        assert_eq!((r.0, r.1), (x, 0.0));
        x += r.2;
    }

    for seed in 0..5 {
        let seed = seed.to_string();
        let (code, out, _) = spbo(&["pack", "--design", s(&design_path), "--seed", &seed, "--svg", s(&svg)]);
        assert_eq!(code, 0);
        let sp: SequencePair = out.lines().next().unwrap().trim_start_matches("sp ").parse().unwrap();
        let packed = pack(&sp, &design.shapes()).unwrap();
        let rects = svg_macro_rects(&fs::read_to_string(&svg).unwrap());
        for (i, a) in rects.iter().enumerate() {
            assert_eq!((a.0, a.1), packed.positions[i]);
            for b in &rects[i + 1..] {
                let apart = a.0 + a.2 <= b.0 || b.0 + b.2 <= a.0 || a.1 + a.3 <= b.1 || b.1 + b.3 <= a.1;
                assert!(apart, "{a:?} overlaps {b:?}");
            }
        }
    }
}

#[test]
fn evaluate_matches_the_library_and_dumps_agree() {
    let dir = tempfile::tempdir().unwrap();
    let (design_path, design) = small_design(dir.path(), 5, 3);
    let json = dir.path().join("e.json");
    let csv_path = dir.path().join("e.csv");
    let (_, out, _) = spbo(&["pack", "--design", s(&design_path), "--seed", "3"]);
    let sp = out.lines().next().unwrap().trim_start_matches("sp ").to_string();
    let sp = sp.as_str();
    let (code, out, err) = spbo(&[
        "evaluate", "--design", s(&design_path), "--sp", sp, "--json", s(&json), "--csv", s(&csv_path),
    ]);
    assert_eq!(code, 0, "{err}");
    let want = evaluate_sp(&design, &sp.parse().unwrap()).unwrap();
    assert_eq!(out.trim(), format!("hpwl {}", want.hpwl));

    let dump: EvaluationDump = serde_json::from_str(&fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(dump.hpwl, want.hpwl);
    let rows: Vec<MacroPlacement> = read_csv(&csv_path);
    assert_eq!(rows, dump.macros);
    for (row, p) in rows.iter().zip(&want.placement.positions) {
        assert_eq!((row.x, row.y), *p);
    }
}

#[test]
fn infeasible_pair_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let (design_path, mut design) = small_design(dir.path(), 6, 4);
    let total_width: f64 = design.shapes().iter().map(|m| m.width).sum();
    design.outline = spbo::Outline::square_with_whitespace(design.total_macro_area(), 0.2);
    assert!(total_width > design.outline.width);
    design.project_pads();
    save_design(&design, &design_path).unwrap();
    let (code, _, err) = spbo(&["evaluate", "--design", s(&design_path), "--sp", "0 1 2 3 4 5 / 0 1 2 3 4 5"]);
    assert_eq!(code, 2);
    assert!(err.contains("infeasible"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let (design_path, _) = small_design(dir.path(), 3, 5);
    let exe = env!("CARGO_BIN_EXE_spbo");
    let code = |args: &[&str]| Command::new(exe).args(args).output().unwrap().status.code().unwrap();
    assert_eq!(code(&["--help"]), 0);
    assert_eq!(code(&["pack", "--design", s(&design_path)]), 0);
    assert_eq!(code(&["pack", "--bogus"]), 1);
    assert_eq!(code(&["pack", "--design", s(&design_path), "--sp", "0 1 / 1 0"]), 1);
    assert_eq!(code(&["pack", "--design", s(&design_path), "--outline", "ten"]), 1);
    assert_eq!(code(&["pack", "--design", "/nonexistent/design.json"]), 2);
    fs::write(dir.path().join("broken.json"), "{").unwrap();
    assert_eq!(code(&["pack", "--design", s(&dir.path().join("broken.json"))]), 2);

    let numerical = spbo_cli::CliError::Core(spbo::Error::Numerical("x".into()));
    assert_eq!(numerical.exit_code(), 3);
}

#[test]
fn single_repeat_has_no_standard_error() {
    let dir = tempfile::tempdir().unwrap();
    let (design_path, _) = small_design(dir.path(), 5, 6);
    let out = dir.path().join("runs");
    let (code, _, err) = spbo(&[
        "run", "--design", s(&design_path), "--algo", "sa", "--budget", "40", "--repeats", "1", "--out-dir", s(&out),
    ]);
    assert_eq!(code, 0, "{err}");
    let text = fs::read_to_string(out.join("summary.csv")).unwrap();
    let line = text.lines().nth(1).unwrap();
    assert!(line.ends_with(",,1,"), "{line}");
    let rows: Vec<SummaryRow> = read_csv(&out.join("summary.csv"));
    assert_eq!(rows[0].stderr_hpwl, None);
}

#[test]
fn summary_mean_is_the_mean_of_the_finals() {
    let dir = tempfile::tempdir().unwrap();
    let (design_path, _) = small_design(dir.path(), 5, 7);
    let out = dir.path().join("runs");
    let (code, _, err) = spbo(&[
        "run", "--design", s(&design_path), "--algo", "bo", "--budget", "16", "--n-init", "6",
        "--batch-size", "5", "--fit-iters", "20", "--seed", "10", "--repeats", "5", "--jobs", "2",
        "--out-dir", s(&out),
    ]);
    assert_eq!(code, 0, "{err}");
    let records = records_in(&out);
    assert_eq!(records.len(), 5);
    let finals: Vec<f64> = records.iter().map(|p| read_record(p).best_hpwl().unwrap()).collect();
    let rows: Vec<SummaryRow> = read_csv(&out.join("summary.csv"));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].mean_hpwl, finals.iter().sum::<f64>() / 5.0);
    assert_eq!(rows[0].budget, 16);
    assert_eq!(rows[0].repeats, 5);
    let seeds: Vec<u64> = records.iter().map(|p| read_record(p).meta.seed).collect();
    assert_eq!(seeds, vec![10, 11, 12, 13, 14]);
}

#[test]
fn reports_average_the_traces() {
    let dir = tempfile::tempdir().unwrap();
    let (design_path, _) = small_design(dir.path(), 6, 8);
    let out = dir.path().join("runs");
    let (code, _, err) = spbo(&[
        "run", "--design", s(&design_path), "--algo", "sa", "--schedule", "linear,stepdown", "--t0", "50",
        "--budget", "50", "--repeats", "5", "--out-dir", s(&out),
    ]);
    assert_eq!(code, 0, "{err}");
    let records = records_in(&out);
    assert_eq!(records.len(), 10);

    let single = dir.path().join("single");
    let (code, _, _) = spbo(&["report", s(&records[0]), "--out-dir", s(&single)]);
    assert_eq!(code, 0);
    let trace: Vec<TraceRow> = read_csv(&single.join("trace.csv"));
    let r0 = read_record(&records[0]);
    assert_eq!(trace.iter().map(|t| t.mean_best_hpwl).collect::<Vec<_>>(), r0.best_trace());
    assert!(trace.iter().all(|t| t.stderr_best_hpwl.is_none()));

    let all = dir.path().join("all");
    let mut args = vec!["report"];
    args.extend(records.iter().map(|p| s(p)));
    args.extend(["--out-dir", s(&all)]);
    let (code, _, _) = spbo(&args);
    assert_eq!(code, 0);
    let agg: Vec<SummaryRow> = read_csv(&all.join("aggregate.csv"));
    assert_eq!(agg.len(), 2);
    let trace: Vec<TraceRow> = read_csv(&all.join("trace.csv"));
    assert_eq!(trace.len(), 100);
    let linear: Vec<RunRecord> = records
        .iter()
        .map(|p| read_record(p))
        .filter(|r| r.meta.config["schedule"] == "linear")
        .collect();
    for t in trace.iter().filter(|t| t.setting == "linear/50") {
        let vals: Vec<f64> = linear.iter().map(|r| r.rows[t.eval].best_hpwl).collect();
        let m = vals.iter().sum::<f64>() / 5.0;
        let sd = (vals.iter().map(|v| (v - m).powi(2)).sum::<f64>() / 4.0).sqrt();
        assert_eq!(t.mean_best_hpwl, m);
        assert!((t.stderr_best_hpwl.unwrap() - sd / 5f64.sqrt()).abs() <= 1e-9 * (1.0 + sd));
        assert_eq!(t.runs, 5);
    }
    for w in trace.windows(2) {
        if w[0].setting == w[1].setting {
            assert!(w[1].mean_best_hpwl <= w[0].mean_best_hpwl);
        }
    }
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (design_path, _) = small_design(dir.path(), 6, 9);
    let run = |name: &str| {
        let out = dir.path().join(name);
        for algo_args in [
            vec!["--algo", "bo", "--budget", "16", "--n-init", "6", "--batch-size", "5", "--fit-iters", "20"],
            vec!["--algo", "sa", "--budget", "40", "--schedule", "linear,exponential", "--t0", "100,1000"],
        ] {
            let mut args = vec!["run", "--design", s(&design_path), "--repeats", "2", "--jobs", "2", "--out-dir", s(&out)];
            args.extend(algo_args);
            let (code, _, err) = spbo(&args);
            assert_eq!(code, 0, "{err}");
        }
        let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(&out)
            .unwrap()
            .map(|e| {
                let p = e.unwrap().path();
                (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap())
            })
            .collect();
        files.sort();
        files
    };
    let a = run("a");
    let b = run("b");
    assert_eq!(a.len(), 11);
    assert_eq!(a, b);
}

#[test]
fn synth_writes_a_loadable_design() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("apte.json");
    let (code, out, _) = spbo(&["synth", "--out", s(&path)]);
    assert_eq!(code, 0);
    assert!(out.contains("9 macros, 97 nets, 73 pads"));
    let (code, _, _) = spbo(&["pack", "--design", s(&path), "--seed", "1"]);
    assert_eq!(code, 0);
}
