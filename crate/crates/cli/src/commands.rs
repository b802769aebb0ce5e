use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use spbo::bo_engine::{run_bo, sample_feasible, BoConfig, DEFAULT_MAX_DRAWS};
use spbo::acquisition::BatchAcqConfig;
use spbo::netlist::{synthesize, SynthParams};
use spbo::run_record::{Algo, RunMeta, RunRecord};
use spbo::sa_engine::{run_sa, SaConfig};
use spbo::surrogate_gp::FitOptions;
use spbo::{evaluate_sp, load_design, pack, save_design, Design, SequencePair};

use crate::args::{AlgoArg, DesignArgs, EvaluateArgs, PackArgs, ReportArgs, RunArgs, SynthArgs};
use crate::error::{CliError, CliResult};
use crate::stats::{mean, standard_error};
use crate::svg;

pub const SUMMARY_FILE: &str = "summary.csv";
pub const AGGREGATE_FILE: &str = "aggregate.csv";
pub const TRACE_FILE: &str = "trace.csv";

/// One line of the summary and aggregate tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub design: String,
    pub algo: String,
    /// `schedule/t0` for SA, the acquisition for BO.
    pub setting: String,
    pub budget: usize,
    pub mean_hpwl: f64,
    /// Empty for a single repeat.
    pub stderr_hpwl: Option<f64>,
    pub repeats: usize,
    /// Empty unless the runs recorded timing.
    pub wall_time_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub design: String,
    pub algo: String,
    pub setting: String,
    pub eval: usize,
    pub mean_best_hpwl: f64,
    pub stderr_best_hpwl: Option<f64>,
    pub runs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MacroPlacement {
    pub name: String,
    pub x: f64,
    pub y: f64,
    pub width: f64,
    pub height: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationDump {
    pub design: String,
    pub sp: String,
    pub hpwl: f64,
    pub lp_objectives: (f64, f64),
    pub macros: Vec<MacroPlacement>,
}

pub fn load(args: &DesignArgs) -> CliResult<Design> {
    load_design(&args.design, args.format(), &args.load_options()?).map_err(|e| match e {
        spbo::Error::Io(e) => CliError::io(&args.design, e),
        e => CliError::Core(e),
    })
}

/// Writes `bytes` to a sibling temporary file, then renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let name = path
        .file_name()
        .ok_or_else(|| CliError::usage(format!("{} is not a file path", path.display())))?
        .to_string_lossy();
    let tmp = path.with_file_name(format!(".{name}.{}.tmp", std::process::id()));
    fs::write(&tmp, bytes).map_err(|e| CliError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
}

fn create_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn file_safe(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.' { c } else { '_' })
        .collect()
}

fn csv_bytes<T: Serialize>(rows: &[T], header: bool) -> CliResult<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().has_headers(header).from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| CliError::io("<csv buffer>", e.into_error()))
}

/// Appends rows to a CSV file, writing the header only when the file is new.
fn append_csv<T: Serialize>(path: &Path, rows: &[T]) -> CliResult<()> {
    let mut bytes = match fs::read(path) {
        Ok(b) => b,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Vec::new(),
        Err(e) => return Err(CliError::io(path, e)),
    };
    let fresh = csv_bytes(rows, bytes.is_empty())?;
    bytes.extend(fresh);
    write_atomic(path, &bytes)
}

/// Label that separates configurations of the same algorithm.
pub fn setting_of(meta: &RunMeta) -> String {
    let cfg = &meta.config;
    match meta.algo {
        Algo::Bo => cfg["acq"].as_str().unwrap_or("?").to_string(),
        Algo::Sa => {
            let schedule = cfg["schedule"].as_str().unwrap_or("?");
            match cfg["t0"].as_f64() {
                Some(t0) => format!("{schedule}/{t0}"),
                None => format!("{schedule}/?"),
            }
        }
    }
}

#[derive(Debug, Clone)]
enum EngineConfig {
    Bo(BoConfig),
    Sa(SaConfig),
}

impl EngineConfig {
    fn with_seed(&self, seed: u64) -> Self {
        let mut c = self.clone();
        match &mut c {
            EngineConfig::Bo(b) => b.seed = seed,
            EngineConfig::Sa(s) => s.seed = seed,
        }
        c
    }

    fn run(&self, design: &Design) -> spbo::Result<RunRecord> {
        match self {
            EngineConfig::Bo(c) => run_bo(design, c),
            EngineConfig::Sa(c) => run_sa(design, c),
        }
    }
}

fn engine_configs(args: &RunArgs) -> CliResult<Vec<EngineConfig>> {
    match args.algo {
        AlgoArg::Bo => {
            let b = args.batch_size;
            if b == 0 {
                return Err(CliError::usage("--batch-size must be at least 1"));
            }
            if args.n_init == 0 || args.budget < args.n_init || (args.budget - args.n_init) % b != 0 {
                return Err(CliError::usage(format!(
                    "--budget {} must equal --n-init {} plus a whole number of batches of {b}",
                    args.budget, args.n_init
                )));
            }
            Ok(vec![EngineConfig::Bo(BoConfig {
                n_init: args.n_init,
                rounds: (args.budget - args.n_init) / b,
                batch: BatchAcqConfig {
                    batch_size: b,
                    rho_scale: args.rho_scale,
                },
                acq: args.acq.into(),
                ucb_beta: args.ucb_beta,
                fit: FitOptions {
                    max_iters: args.fit_iters,
                    ..FitOptions::default()
                },
                timing: args.timing,
                ..BoConfig::default()
            })])
        }
        AlgoArg::Sa => {
            let mut out = Vec::new();
            for &schedule in &args.schedule {
                for &t0 in &args.t0 {
                    out.push(EngineConfig::Sa(SaConfig {
                        t0,
                        schedule: schedule.into(),
                        budget: args.budget,
                        t_final: args.t_final,
                        timing: args.timing,
                        ..SaConfig::default()
                    }));
                }
            }
            Ok(out)
        }
    }
}

fn summarize(design: &str, algo: &str, setting: String, records: &[&RunRecord]) -> SummaryRow {
    let finals: Vec<f64> = records.iter().filter_map(|r| r.best_hpwl()).collect();
    let times: Option<Vec<f64>> = records.iter().map(|r| r.meta.wall_time_s).collect();
    SummaryRow {
        design: design.to_string(),
        algo: algo.to_string(),
        setting,
        budget: records.iter().map(|r| r.rows.len()).max().unwrap_or(0),
        mean_hpwl: mean(&finals),
        stderr_hpwl: standard_error(&finals),
        repeats: records.len(),
        wall_time_s: times.map(|t| mean(&t)),
    }
}

/// Runs every configuration `repeats` times, writes one record per run and
/// appends one summary row per configuration.
pub fn cmd_run(args: &RunArgs, out: &mut dyn Write) -> CliResult<Vec<SummaryRow>> {
    if args.repeats == 0 {
        return Err(CliError::usage("--repeats must be at least 1"));
    }
    if args.jobs == 0 {
        return Err(CliError::usage("--jobs must be at least 1"));
    }
    let configs = engine_configs(args)?;
    let design = load(&args.design)?;
    create_dir(&args.out_dir)?;

    let tasks: Vec<(usize, u64)> = (0..configs.len())
        .flat_map(|c| (0..args.repeats as u64).map(move |k| (c, args.seed + k)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs)
        .build()
        .map_err(|e| CliError::usage(format!("cannot start {} workers: {e}", args.jobs)))?;
    let results: Vec<spbo::Result<RunRecord>> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(c, seed)| configs[c].with_seed(seed).run(&design))
            .collect()
    });

    let mut failure: Option<CliError> = None;
    let mut by_config: Vec<Vec<RunRecord>> = vec![Vec::new(); configs.len()];
    for (&(c, seed), result) in tasks.iter().zip(results) {
        let record = match result {
            Ok(r) => r,
            Err(e @ spbo::Error::InvalidArgument(_)) => {
                failure.get_or_insert(CliError::Core(e));
                continue;
            }
            Err(e) => {
                failure.get_or_insert(CliError::RunFailed {
                    seed,
                    numerical: matches!(e, spbo::Error::Numerical(_)),
                    message: e.to_string(),
                });
                continue;
            }
        };
        let path = record_path(
            &args.out_dir,
            &design.name,
            record.meta.algo,
            &setting_of(&record.meta),
            seed,
        );
        write_atomic(&path, record.to_jsonl_string().as_bytes())?;
        if let Some(msg) = &record.meta.error {
            failure.get_or_insert(CliError::RunFailed {
                seed,
                message: msg.clone(),
                numerical: msg.starts_with("numerical failure"),
            });
        }
        by_config[c].push(record);
    }
    if let Some(e) = failure {
        return Err(e);
    }

    let algo = match args.algo {
        AlgoArg::Bo => "bo",
        AlgoArg::Sa => "sa",
    };
    let rows: Vec<SummaryRow> = by_config
        .iter()
        .map(|records| {
            let refs: Vec<&RunRecord> = records.iter().collect();
            summarize(&design.name, algo, setting_of(&records[0].meta), &refs)
        })
        .collect();
    append_csv(&args.out_dir.join(SUMMARY_FILE), &rows)?;
    for r in &rows {
        let se = r.stderr_hpwl.map_or("NA".to_string(), |s| format!("{s:.1}"));
        writeln!(
            out,
            "{} {} {}: mean HPWL {:.1} +- {se} over {} runs of {} evaluations",
            r.design, r.algo, r.setting, r.mean_hpwl, r.repeats, r.budget
        )
        .map_err(|e| CliError::io("<stdout>", e))?;
    }
    Ok(rows)
}

fn parse_sp(text: &str, design: &Design) -> CliResult<SequencePair> {
    let sp: SequencePair = text.parse()?;
    if sp.len() != design.num_macros() {
        return Err(CliError::usage(format!(
            "sequence pair has {} macros, design has {}",
            sp.len(),
            design.num_macros()
        )));
    }
    Ok(sp)
}

pub fn cmd_pack(args: &PackArgs, out: &mut dyn Write) -> CliResult<spbo::PackResult> {
    let design = load(&args.design)?;
    let sp = match (&args.sp, args.seed) {
        (Some(s), _) => parse_sp(s, &design)?,
        (None, Some(seed)) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = sample_feasible(&design, 1, &HashSet::new(), DEFAULT_MAX_DRAWS, &mut rng)?;
            s.points.into_iter().next().expect("one point")
        }
        (None, None) => SequencePair::identity(design.num_macros()),
    };
    let result = pack(&sp, &design.shapes())?;
    let fits = result.packed_width <= design.outline.width
        && result.packed_height <= design.outline.height;
    let io = |e| CliError::io("<stdout>", e);
    writeln!(out, "sp {sp}").map_err(io)?;
    writeln!(
        out,
        "packed {} x {} in outline {} x {}: {}",
        result.packed_width,
        result.packed_height,
        design.outline.width,
        design.outline.height,
        if fits { "fits" } else { "exceeds outline" }
    )
    .map_err(io)?;
    if let Some(path) = &args.svg {
        write_atomic(path, svg::render(&design, &result.positions).as_bytes())?;
    }
    Ok(result)
}

pub fn cmd_evaluate(args: &EvaluateArgs, out: &mut dyn Write) -> CliResult<EvaluationDump> {
    let design = load(&args.design)?;
    let sp = parse_sp(&args.sp, &design)?;
    let v = evaluate_sp(&design, &sp)?;
    let macros: Vec<MacroPlacement> = design
        .macros
        .iter()
        .zip(&v.placement.positions)
        .map(|(m, p)| MacroPlacement {
            name: m.name.clone(),
            x: p.0,
            y: p.1,
            width: m.shape.width,
            height: m.shape.height,
        })
        .collect();
    let dump = EvaluationDump {
        design: design.name.clone(),
        sp: sp.to_string(),
        hpwl: v.hpwl,
        lp_objectives: v.lp_objectives,
        macros,
    };
    writeln!(out, "hpwl {}", v.hpwl).map_err(|e| CliError::io("<stdout>", e))?;
    if let Some(path) = &args.json {
        let mut text = serde_json::to_string_pretty(&dump).map_err(spbo::Error::from)?;
        text.push('\n');
        write_atomic(path, text.as_bytes())?;
    }
    if let Some(path) = &args.csv {
        write_atomic(path, &csv_bytes(&dump.macros, true)?)?;
    }
    Ok(dump)
}

pub fn read_record(path: &Path) -> CliResult<RunRecord> {
    let f = fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    RunRecord::read_jsonl(BufReader::new(f)).map_err(|source| CliError::Record {
        path: path.to_path_buf(),
        source,
    })
}

/// Summary per configuration and per-evaluation mean best-so-far traces.
pub fn cmd_report(args: &ReportArgs, out: &mut dyn Write) -> CliResult<(Vec<SummaryRow>, Vec<TraceRow>)> {
    let records: Vec<RunRecord> = args
        .records
        .iter()
        .map(|p| read_record(p))
        .collect::<CliResult<_>>()?;
    let mut groups: BTreeMap<(String, String, String), Vec<&RunRecord>> = BTreeMap::new();
    for r in &records {
        let key = (r.meta.design.clone(), r.meta.algo.to_string(), setting_of(&r.meta));
        groups.entry(key).or_default().push(r);
    }

    let mut summary = Vec::new();
    let mut traces = Vec::new();
    for ((design, algo, setting), group) in &groups {
        summary.push(summarize(design, algo, setting.clone(), group));
        let len = group.iter().map(|r| r.rows.len()).max().unwrap_or(0);
        for eval in 0..len {
            let vals: Vec<f64> = group
                .iter()
                .filter_map(|r| r.rows.get(eval).map(|row| row.best_hpwl))
                .collect();
            traces.push(TraceRow {
                design: design.clone(),
                algo: algo.clone(),
                setting: setting.clone(),
                eval,
                mean_best_hpwl: mean(&vals),
                stderr_best_hpwl: standard_error(&vals),
                runs: vals.len(),
            });
        }
    }
    create_dir(&args.out_dir)?;
    write_atomic(&args.out_dir.join(AGGREGATE_FILE), &csv_bytes(&summary, true)?)?;
    write_atomic(&args.out_dir.join(TRACE_FILE), &csv_bytes(&traces, true)?)?;
    for r in &summary {
        let se = r.stderr_hpwl.map_or("NA".to_string(), |s| format!("{s:.1}"));
        writeln!(out, "{} {} {}: {:.1} +- {se} ({} runs)", r.design, r.algo, r.setting, r.mean_hpwl, r.repeats)
            .map_err(|e| CliError::io("<stdout>", e))?;
    }
    Ok((summary, traces))
}

pub fn cmd_synth(args: &SynthArgs, out: &mut dyn Write) -> CliResult<Design> {
    let mut p = SynthParams::apte_class();
    if let Some(n) = &args.name {
        p.name = n.clone();
    }
    if let Some(m) = args.macros {
        p.macros = m;
    }
    if let Some(n) = args.nets {
        p.nets = n;
    }
    if let Some(n) = args.pads {
        p.pads = n;
    }
    if let Some(g) = args.whitespace {
        p.whitespace = g;
    }
    let design = synthesize(&p, &mut ChaCha8Rng::seed_from_u64(args.seed))?;
    save_design(&design, &args.out)?;
    writeln!(
        out,
        "{}: {} macros, {} nets, {} pads, outline {} x {}",
        args.out.display(),
        design.num_macros(),
        design.nets.len(),
        design.pads.len(),
        design.outline.width,
        design.outline.height
    )
    .map_err(|e| CliError::io("<stdout>", e))?;
    Ok(design)
}

/// Path of the record file written by `run` for one seed.
pub fn record_path(out_dir: &Path, design: &str, algo: Algo, setting: &str, seed: u64) -> PathBuf {
    out_dir.join(format!(
        "{}-{algo}-{}-seed{seed}.jsonl",
        file_safe(design),
        file_safe(&setting.replace('/', "-t"))
    ))
}
