// SPDX-License-Identifier: Apache-2.0

//! `hlsforge` command line.

use clap::{Args, Parser, Subcommand, ValueEnum};
use hlsforge::agents::{AgentRole, BackendKind};
use hlsforge::bugrag::Repository;
use hlsforge::diagnostics::{differential_check, records_json, verify, verify_against, VerificationReport, DEFAULT_DIFF_RUNS};
use hlsforge::fixer::{fix, FixConfig};
use hlsforge::frontend::{emit_ast, extract_metadata, parse, parse_str, Ast, Origin, SourceUnit};
use hlsforge::harness::pipeline::{eval_pass_rate, kernel_designs, single_injection_cases};
use hlsforge::harness::{speedup_eval, Config, Thresholds};
use hlsforge::qor::{baseline_estimate, DeviceProfile, OpCostTable, ResourceCaps};
use hlsforge::tuner::{tune, OptimizationSpec, TuneOutcome};
use hlsforge::voda::{build_corpus, inject, revalidate};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "hlsforge", version, about = "Repair, dataset synthesis and pragma tuning for HLS-C designs")]
struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Agent backend for every role.
    #[arg(long, global = true, value_enum)]
    backend: Option<BackendArg>,
    /// Target device profile.
    #[arg(long, global = true)]
    device: Option<String>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Both)]
    format: Format,
    /// Bug slice repository file; the seeded catalog when absent.
    #[arg(long, global = true)]
    bugrag: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    Deterministic,
    Http,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Json,
    Both,
}

#[derive(Subcommand)]
enum Command {
    /// Print an embedded kernel at the configured problem size.
    Kernel {
        name: String,
        #[arg(long)]
        size: Option<u64>,
    },
    /// Parse a design and print its normalized form and loop/array summary.
    Parse { file: PathBuf },
    /// Run the static detectors, and the differential check when a reference is given.
    Verify {
        file: PathBuf,
        #[arg(long)]
        reference: Option<PathBuf>,
    },
    /// Compare a design against a reference on random inputs.
    Csim {
        file: PathBuf,
        #[arg(long)]
        reference: PathBuf,
        #[arg(long, default_value_t = DEFAULT_DIFF_RUNS)]
        runs: usize,
    },
    /// Inject one bug class into a clean design.
    Inject {
        file: PathBuf,
        #[arg(long)]
        mnemonic: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    #[command(subcommand)]
    Dataset(DatasetCmd),
    /// Repair a buggy design.
    Fix {
        file: PathBuf,
        #[arg(long)]
        reference: Option<PathBuf>,
        #[arg(long)]
        budget: Option<usize>,
        #[arg(long)]
        trace_out: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Insert optimization directives under resource caps.
    Tune {
        file: PathBuf,
        #[arg(long)]
        caps: Option<String>,
        #[arg(long)]
        target_latency: Option<u64>,
        #[arg(long)]
        budget: Option<usize>,
        #[arg(long)]
        trace_out: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    #[command(subcommand)]
    Eval(EvalCmd),
    #[command(subcommand)]
    Bugrag(BugragCmd),
}

#[derive(Args)]
struct DesignsArg {
    /// Directory of clean designs (`*.c`, `*.cpp`); the embedded kernels when absent.
    #[arg(long)]
    designs: Option<PathBuf>,
}

#[derive(Subcommand)]
enum DatasetCmd {
    /// Build a verified bug dataset.
    Build {
        #[command(flatten)]
        designs: DesignsArg,
        /// Comma-separated mnemonics; all seed mnemonics when absent.
        #[arg(long, value_delimiter = ',')]
        mnemonics: Vec<String>,
        #[arg(long, default_value_t = 2)]
        per_pair: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-check a written dataset offline.
    Check {
        dir: PathBuf,
        #[command(flatten)]
        designs: DesignsArg,
    },
}

#[derive(Subcommand)]
enum EvalCmd {
    /// Repair every single-injection case and report the pass rate.
    PassRate {
        #[arg(long, default_value_t = 2)]
        per_pair: usize,
        #[arg(long)]
        budget: Option<usize>,
        #[arg(long)]
        trace_out: Option<PathBuf>,
    },
    /// Tune the embedded kernels and report speedups.
    Speedup {
        #[arg(long)]
        caps: Option<String>,
        #[arg(long)]
        budget: Option<usize>,
    },
}

#[derive(Subcommand)]
enum BugragCmd {
    /// List the slices in the repository.
    List,
    /// Propose and add a slice for records no slice matches.
    Expand { file: PathBuf },
}

/// Failure with its exit status.
struct Failure {
    code: u8,
    message: String,
}

fn usage(message: impl std::fmt::Display) -> Failure {
    Failure { code: 2, message: message.to_string() }
}

fn failed(message: impl std::fmt::Display) -> Failure {
    Failure { code: 1, message: message.to_string() }
}

type Outcome = Result<u8, Failure>;

struct Env {
    cfg: Config,
    device: DeviceProfile,
    costs: OpCostTable,
    repo: Repository,
    format: Format,
    bugrag: Option<PathBuf>,
}

impl Env {
    fn from_cli(cli: &Cli) -> Result<Env, Failure> {
        let mut cfg = match &cli.config {
            Some(p) => Config::load(p).map_err(usage)?,
            None => Config::default(),
        };
        if let Some(s) = cli.seed {
            cfg.seed = s;
        }
        if let Some(d) = &cli.device {
            cfg.device = d.clone();
        }
        if let Some(b) = cli.backend {
            let kind = match b {
                BackendArg::Deterministic => BackendKind::Deterministic,
                BackendArg::Http => BackendKind::Http,
            };
            cfg.agents.default.kind = kind;
            for c in cfg.agents.roles.values_mut().chain(cfg.agents.evaluators.iter_mut()) {
                c.kind = kind;
            }
        }
        cfg.agents.check().map_err(usage)?;
        let device = DeviceProfile::by_name(&cfg.device).ok_or_else(|| usage(format!("unknown device `{}`", cfg.device)))?;
        let repo = match &cli.bugrag {
            Some(p) if p.exists() => Repository::load(p).map_err(usage)?,
            _ => Repository::seeded(),
        };
        Ok(Env { cfg, device, costs: OpCostTable::default(), repo, format: cli.format, bugrag: cli.bugrag.clone() })
    }

    fn report(&self, table: &str, json: &str) {
        if self.format != Format::Json {
            print!("{table}");
            if !table.ends_with('\n') {
                println!();
            }
        }
        if self.format != Format::Table {
            println!("{json}");
        }
    }
}

fn read_design(path: &Path) -> Result<Ast, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let name = path.file_stem().map_or_else(|| "design".into(), |s| s.to_string_lossy().into_owned());
    parse(&SourceUnit::new(name, text, Origin::User)).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

/// Named designs from a directory, sorted by name, or the embedded kernels.
fn designs(arg: &DesignsArg, size: u64) -> Result<Vec<(String, Ast)>, Failure> {
    let Some(dir) = &arg.designs else {
        return Ok(kernel_designs(size));
    };
    let entries = std::fs::read_dir(dir).map_err(|e| usage(format!("{}: {e}", dir.display())))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(Result::ok)
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|x| x == "c" || x == "cpp"))
        .collect();
    paths.sort();
    let mut out = Vec::new();
    for p in paths {
        let name = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        out.push((name, read_design(&p)?));
    }
    if out.is_empty() {
        return Err(usage(format!("{}: no designs found", dir.display())));
    }
    Ok(out)
}

fn report_table(r: &VerificationReport) -> String {
    let mut out = format!("status: {:?}\n", r.status).to_lowercase();
    for rec in &r.records {
        out.push_str(&format!("{}:{} {} {}\n", rec.line, rec.col, rec.mnemonic, rec.message));
    }
    if let Some(c) = &r.csim {
        out.push_str(&format!("csim: {} over {} runs\n", if c.passed { "pass" } else { "FAIL" }, c.runs));
        if let Some(m) = &c.mismatch {
            out.push_str(&format!("  {m}\n"));
        }
    }
    out
}

fn clean_status(clean: bool) -> u8 {
    if clean {
        0
    } else {
        1
    }
}

fn run(cli: Cli) -> Outcome {
    let env = Env::from_cli(&cli)?;
    let seed = env.cfg.seed;
    match cli.command {
        Command::Kernel { name, size } => {
            let unit = hlsforge::harness::corpus::kernel(&name, size.unwrap_or(env.cfg.size))
                .ok_or_else(|| usage(format!("unknown kernel `{name}`")))?;
            print!("{}", unit.text);
            Ok(0)
        }
        Command::Parse { file } => {
            let ast = read_design(&file)?;
            let meta = extract_metadata(&ast);
            let table = format!("{}\nloops: {}  arrays: {}\n", emit_ast(&ast), meta.loops.len(), meta.arrays.len());
            let json = serde_json::json!({"code": emit_ast(&ast), "metadata": meta});
            env.report(&table, &serde_json::to_string_pretty(&json).expect("metadata serializes"));
            Ok(0)
        }
        Command::Verify { file, reference } => {
            let ast = read_design(&file)?;
            let r = match reference {
                Some(p) => verify_against(&ast, &read_design(&p)?, DEFAULT_DIFF_RUNS, seed),
                None => verify(&ast),
            };
            env.report(&report_table(&r), &r.to_json());
            Ok(clean_status(r.is_clean()))
        }
        Command::Csim { file, reference, runs } => {
            let (ast, refr) = (read_design(&file)?, read_design(&reference)?);
            let out = differential_check(&ast, &refr, runs, seed).map_err(usage)?;
            let table = match &out.witness {
                None => format!("csim: pass over {} runs\n", out.runs),
                Some(w) => format!("csim: FAIL on run {}: {}\n", w.run, w.mismatch),
            };
            let json = serde_json::json!({"passed": out.passed, "runs": out.runs, "witness": out.witness});
            env.report(&table, &json.to_string());
            Ok(clean_status(out.passed))
        }
        Command::Inject { file, mnemonic, out } => {
            let ast = read_design(&file)?;
            let slice = env.repo.lookup(&mnemonic).map_err(usage)?;
            let (bug, note) = inject(&ast, slice, seed).map_err(failed)?;
            let code = emit_ast(&bug);
            let errors = hlsforge::voda::label(&bug, &ast, &slice.mnemonic, seed);
            match &out {
                Some(p) => write_file(p, &code)?,
                None if env.format != Format::Json => print!("{code}"),
                None => {}
            }
            let json = serde_json::json!({"code": code, "note": note, "errors": errors.records});
            env.report(&report_table(&errors), &json.to_string());
            Ok(clean_status(errors.has(&slice.mnemonic)))
        }
        Command::Dataset(DatasetCmd::Build { designs: d, mnemonics, per_pair, out }) => {
            let list = designs(&d, env.cfg.size)?;
            let mnemonics = if mnemonics.is_empty() {
                hlsforge::diagnostics::SEED_MNEMONICS.iter().map(|m| m.to_string()).collect()
            } else {
                mnemonics
            };
            let cot = env.cfg.agents.backend(AgentRole::CotGenerator).map_err(usage)?;
            let corpus = build_corpus(&list, &mnemonics, per_pair, seed, &env.repo, cot.as_ref()).map_err(usage)?;
            corpus.write(&out).map_err(usage)?;
            let m = &corpus.manifest;
            let mut table = format!("samples: {}  rejected: {}\n", corpus.samples.len(), m.rejected_count);
            for (k, v) in &m.per_mnemonic {
                table.push_str(&format!("{k:<8} {v:>4}\n"));
            }
            env.report(&table, &serde_json::to_string(m).expect("manifest serializes"));
            Ok(0)
        }
        Command::Dataset(DatasetCmd::Check { dir, designs: d }) => {
            let originals: BTreeMap<String, Ast> = designs(&d, env.cfg.size)?.into_iter().collect();
            let r = revalidate(&dir, &originals).map_err(usage)?;
            let mut table = format!("checked: {}  violations: {}\n", r.checked, r.violations.len());
            for v in &r.violations {
                table.push_str(&format!("  {v}\n"));
            }
            let json = serde_json::json!({"checked": r.checked, "violations": r.violations});
            env.report(&table, &json.to_string());
            Ok(clean_status(r.is_ok()))
        }
        Command::Fix { file, reference, budget, trace_out, out } => {
            let buggy = read_design(&file)?;
            let reference = reference.map(|p| read_design(&p)).transpose()?;
            let base = baseline_estimate(reference.as_ref().unwrap_or(&buggy), &env.device, &env.costs);
            let mut cfg = FixConfig::new(Thresholds::from_baseline(base.latency_cycles, &env.device))
                .with_budget(budget.unwrap_or(env.cfg.budget));
            cfg.device = env.device.clone();
            cfg.costs = env.costs.clone();
            cfg.reference = reference;
            let agents = env.cfg.agents.fixer_agents().map_err(usage)?;
            let (fixed, trace) = fix(&buggy, &cfg, &env.repo, &agents).map_err(failed)?;
            if let Some(p) = &trace_out {
                write_file(p, &trace.to_json())?;
            }
            let code = emit_ast(&fixed);
            if let Some(p) = &out {
                write_file(p, &code)?;
            }
            let last = trace.iterations.last().map_or(&trace.initial, |i| &i.report);
            let table = format!(
                "outcome: {:?}  iterations: {}/{}\n{}{}",
                trace.outcome,
                trace.iterations.len(),
                trace.budget,
                report_table(last),
                if out.is_none() { code.clone() } else { String::new() }
            );
            let json = serde_json::json!({"outcome": trace.outcome, "iterations": trace.iterations.len(), "errors": serde_json::from_str::<serde_json::Value>(&records_json(&last.records)).unwrap_or_default(), "code": code});
            env.report(&table, &json.to_string());
            Ok(clean_status(trace.outcome == hlsforge::fixer::Outcome::Fixed))
        }
        Command::Tune { file, caps, target_latency, budget, trace_out, out } => {
            let ast = read_design(&file)?;
            let caps = ResourceCaps::parse(caps.as_deref().unwrap_or(&env.cfg.caps)).map_err(usage)?;
            let mut spec = OptimizationSpec::new(caps).with_budget(budget.unwrap_or(env.cfg.budget));
            if let Some(t) = target_latency {
                spec = spec.with_target(t);
            }
            let optimizer = env.cfg.agents.backend(AgentRole::Optimizer).map_err(usage)?;
            let agents = env.cfg.agents.fixer_agents().map_err(usage)?;
            let (tuned, trace) = tune(&ast, &spec, &env.device, &env.costs, optimizer.as_ref(), Some(&agents)).map_err(failed)?;
            if let Some(p) = &trace_out {
                write_file(p, &trace.to_json())?;
            }
            let code = emit_ast(&tuned);
            if let Some(p) = &out {
                write_file(p, &code)?;
            }
            let best = trace.accepted.and_then(|i| trace.iterations.iter().find(|it| it.index == i));
            let mut table = format!(
                "outcome: {:?}  iterations: {}\nbaseline latency: {}\n",
                trace.outcome,
                trace.iterations.len(),
                trace.baseline.latency_cycles
            );
            if let Some(b) = best {
                let r = &b.qor.resources;
                table.push_str(&format!("tuned latency: {}  dsp {} ff {} lut {}\n", b.qor.latency_cycles, r.dsp, r.ff, r.lut));
            }
            if out.is_none() {
                table.push_str(&code);
            }
            let json = serde_json::json!({"outcome": trace.outcome, "baseline": trace.baseline, "accepted": best.map(|b| &b.qor), "code": code});
            env.report(&table, &json.to_string());
            Ok(clean_status(trace.outcome != TuneOutcome::Infeasible))
        }
        Command::Eval(EvalCmd::PassRate { per_pair, budget, trace_out }) => {
            let cot = env.cfg.agents.backend(AgentRole::CotGenerator).map_err(usage)?;
            let mnemonics: Vec<String> = hlsforge::diagnostics::SEED_MNEMONICS.iter().map(|m| m.to_string()).collect();
            let corpus = build_corpus(&kernel_designs(env.cfg.size), &mnemonics, per_pair, seed, &env.repo, cot.as_ref())
                .map_err(usage)?;
            let cases = single_injection_cases(&corpus);
            let agents = env.cfg.agents.fixer_agents().map_err(usage)?;
            let run = eval_pass_rate(&cases, budget.unwrap_or(env.cfg.budget), &env.device, &env.costs, &env.repo, &agents)
                .map_err(failed)?;
            if let Some(p) = &trace_out {
                write_file(p, &serde_json::to_string_pretty(&run.runs).expect("runs serialize"))?;
            }
            env.report(&run.summary.table(), &run.summary.to_json());
            Ok(clean_status(run.summary.failed.is_empty()))
        }
        Command::Eval(EvalCmd::Speedup { caps, budget }) => {
            let caps = ResourceCaps::parse(caps.as_deref().unwrap_or(&env.cfg.caps)).map_err(usage)?;
            let spec = OptimizationSpec::new(caps).with_budget(budget.unwrap_or(env.cfg.budget));
            let optimizer = env.cfg.agents.backend(AgentRole::Optimizer).map_err(usage)?;
            let report = speedup_eval(&kernel_designs(env.cfg.size), &spec, &env.device, &env.costs, optimizer.as_ref())
                .map_err(failed)?;
            env.report(&report.table(), &report.to_json());
            Ok(clean_status(report.rows.iter().all(|r| r.outcome != TuneOutcome::Infeasible)))
        }
        Command::Bugrag(BugragCmd::List) => {
            let mut table = format!("version {}\n", env.repo.version);
            for s in env.repo.slices() {
                table.push_str(&format!("{:<5} {:<22} {}\n", s.mnemonic, s.category.as_str(), s.error_type));
            }
            env.report(&table, &env.repo.to_json());
            Ok(0)
        }
        Command::Bugrag(BugragCmd::Expand { file }) => {
            let text = std::fs::read_to_string(&file).map_err(|e| usage(format!("{}: {e}", file.display())))?;
            let ast = parse_str(&text).map_err(|e| usage(format!("{}: {e}", file.display())))?;
            let report = verify(&ast);
            let unmatched: Vec<_> = report.records.iter().filter(|r| env.repo.match_record(r).is_none()).cloned().collect();
            if unmatched.is_empty() {
                env.report("every record matches an existing slice\n", &serde_json::json!({"added": null}).to_string());
                return Ok(0);
            }
            let backend = env.cfg.agents.backend(AgentRole::BugAnalyzer).map_err(usage)?;
            let unit = SourceUnit::new("design", text, Origin::User);
            let slice = env.repo.propose_new_slice(&unit, &unmatched, backend.as_ref()).map_err(failed)?;
            let mut repo = env.repo.clone();
            let version = repo.expand(slice.clone()).map_err(failed)?;
            if let Some(p) = &env.bugrag {
                repo.save(p).map_err(usage)?;
            }
            let table = format!("added {} ({}) at version {version}\n", slice.mnemonic, slice.error_type);
            env.report(&table, &serde_json::json!({"added": slice, "version": version}).to_string());
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
