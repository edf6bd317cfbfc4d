use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use tarepair::eval::{
    run_experiment, table, words_from_jsonl, words_to_jsonl, Benchmark, EvalReport, Experiment, ExperimentConfig,
    FailureKind, ScConfig, DEFAULT_SC_BUDGET, DEFAULT_SC_DEPTH,
};
use tarepair::model::{abstract_guards, AbstractionStrategy, InvariantMode, ManualMap, ParamValuation, Pta, Ta};
use tarepair::oracle::{label_tests, ExternalProcess, Oracle, OracleBackend, OracleError, TestSuite};
use tarepair::polyhedra::{self, PolyUnion, UnionJson};
use tarepair::rational::{self, Rational};
use tarepair::repair::{instantiate, Domain, RepairConfig, DEFAULT_MAX_ITERATIONS};
use tarepair::semantics::{build_epzg, Epzg, EpzgConfig, DEFAULT_DEPTH};
use tarepair::synthesis::{synthesize, Mode, SynthesisError};
use tarepair::testgen::{generate_test_data, Policy, TestData, TestgenConfig, DEFAULT_CAP, DEFAULT_HORIZON};

const EXIT_VALIDATION: u8 = 1;
const EXIT_INSUFFICIENT: u8 = 2;
const EXIT_ORACLE: u8 = 3;

const PROTOCOL_HELP: &str = "\
ORACLES
  --oracle takes exactly one of
    ta:<path>        membership in the timed automaton stored at <path>
    exec:<command>   a child process; <command> is split at whitespace
    recorded:<path>  verdicts replayed from JSON lines {\"word\": ..., \"verdict\": true}

EXEC ORACLE WIRE PROTOCOL
  The process is started once and queried sequentially. Each query is one
  line of JSON on its standard input:
    {\"word\": [[\"a\", \"1/2\"], [\"c\", \"5\"]]}
  Timestamps are absolute and written as decimal or fraction strings. The
  process answers every query with exactly one line on standard output:
    {\"accept\": true}
  Standard error is passed through. A reply later than --timeout seconds,
  a malformed reply or an exited process stops the run with exit code 3.

EXIT CODES
  0 success, 1 invalid input or internal error, 2 abstraction insufficient
  (strict synthesis found no valuation), 3 oracle failure";

#[derive(Parser)]
#[command(name = "tarepair", version, about = "Test-driven repair of timed automata", after_help = PROTOCOL_HELP)]
struct Cli {
    /// Raise log verbosity (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    /// Largest number of atoms a polyhedron may hold.
    #[arg(long, global = true)]
    atom_cap: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Replace guard constants by parameters.
    Abstract(AbstractArgs),
    /// Build the zone graph of a parametric automaton.
    Epzg(EpzgArgs),
    /// Generate test words from the zone graph.
    GenTests(GenTestsArgs),
    /// Label test words with an oracle.
    #[command(after_help = PROTOCOL_HELP)]
    Label(LabelArgs),
    /// Synthesize the parameter constraint of a labeled test suite.
    #[command(after_help = PROTOCOL_HELP)]
    Synth(SynthArgs),
    /// Pick the valuation of a constraint nearest to the initial one.
    Repair(RepairArgs),
    /// Run the pipeline for several policies and print a result table.
    #[command(after_help = PROTOCOL_HELP)]
    Eval(EvalArgs),
    /// Run every step and persist all intermediate artifacts.
    #[command(after_help = PROTOCOL_HELP)]
    Pipeline(PipelineArgs),
}

#[derive(Args)]
struct AbstractArgs {
    /// Timed automaton to abstract.
    #[arg(long)]
    ta: PathBuf,
    /// all | shared | shared:independent | shared:keep | manual:<path>
    #[arg(long, default_value = "all")]
    abstraction: String,
    /// Parametric automaton output.
    #[arg(short, long)]
    output: PathBuf,
    /// Initial valuation output.
    #[arg(long)]
    valuation_out: PathBuf,
}

#[derive(Args)]
struct EpzgOpts {
    /// Longest explored path, in transitions.
    #[arg(long, default_value_t = DEFAULT_DEPTH)]
    depth: usize,
    /// Keep nodes with equal location, zone and arrival interval apart.
    #[arg(long)]
    no_merge: bool,
}

#[derive(Args)]
struct EpzgArgs {
    #[arg(long)]
    pta: PathBuf,
    #[command(flatten)]
    opts: EpzgOpts,
    /// Graph output as JSON.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Print the state table.
    #[arg(long)]
    table: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyName {
    Minmax1,
    Minmax2,
    Minmax4,
    Random,
}

#[derive(Args)]
struct TestgenOpts {
    /// Timestamp selection policy.
    #[arg(long, value_enum, default_value = "minmax1")]
    policy: PolicyName,
    /// Timestamps drawn per state by the random policy.
    #[arg(long, default_value_t = 3)]
    samples: usize,
    /// Surrogate length of unbounded arrival intervals.
    #[arg(long, default_value_t = DEFAULT_HORIZON.to_string())]
    horizon: String,
    /// Words kept per path.
    #[arg(long, default_value_t = DEFAULT_CAP, conflicts_with = "no_cap")]
    cap: usize,
    /// Keep every word of every path.
    #[arg(long)]
    no_cap: bool,
    /// Add the empty word.
    #[arg(long)]
    include_empty: bool,
}

#[derive(Args)]
struct GenTestsArgs {
    #[arg(long)]
    pta: PathBuf,
    /// Zone graph written by `epzg`.
    #[arg(long)]
    epzg: PathBuf,
    /// Longest path, in transitions.
    #[arg(long, default_value_t = DEFAULT_DEPTH)]
    depth: usize,
    #[command(flatten)]
    opts: TestgenOpts,
    /// Seed of the random policy.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Test data output as JSON lines.
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct OracleOpts {
    /// ta:<path> | exec:<command> | recorded:<path>
    #[arg(long)]
    oracle: String,
    /// Seconds an exec oracle may take per query.
    #[arg(long, default_value_t = 10.0)]
    timeout: f64,
}

#[derive(Args)]
struct LabelArgs {
    /// Test data written by `gen-tests`.
    #[arg(long)]
    tests: PathBuf,
    #[command(flatten)]
    oracle: OracleOpts,
    /// Test suite output.
    #[arg(short, long)]
    output: PathBuf,
    /// Every verdict obtained, as a recording for `recorded:`.
    #[arg(long)]
    record: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    pta: PathBuf,
    /// Test suite written by `label`.
    #[arg(long)]
    suite: PathBuf,
    /// Drop tests that would make the constraint empty.
    #[arg(long)]
    greedy: bool,
    /// Constraint output as JSON.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Constraint output as text.
    #[arg(long)]
    text_out: Option<PathBuf>,
}

#[derive(Args)]
struct RepairOpts {
    /// Search multiples of 1/<granularity> instead of integers.
    #[arg(long)]
    granularity: Option<u32>,
    /// Search bounds of one parameter, as <param>=<lo>:<hi> (repeatable).
    #[arg(long = "bound")]
    bounds: Vec<String>,
    /// Best-first steps before falling back to a full sweep.
    #[arg(long, default_value_t = DEFAULT_MAX_ITERATIONS)]
    max_iterations: usize,
}

#[derive(Args)]
struct RepairArgs {
    #[arg(long)]
    pta: PathBuf,
    /// Constraint written by `synth`.
    #[arg(long)]
    phi: PathBuf,
    /// Initial valuation written by `abstract`.
    #[arg(long)]
    v_init: PathBuf,
    #[command(flatten)]
    opts: RepairOpts,
    /// Repaired automaton output.
    #[arg(short, long)]
    output: PathBuf,
    /// Repaired valuation output.
    #[arg(long)]
    valuation_out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentOpts {
    /// Timed automaton to repair.
    #[arg(long)]
    ta: PathBuf,
    /// all | shared | shared:independent | shared:keep | manual:<path>
    #[arg(long, default_value = "all")]
    abstraction: String,
    #[command(flatten)]
    oracle: OracleOpts,
    /// The oracle's automaton, for distance and conformance when the oracle is not `ta:`.
    #[arg(long)]
    oracle_model: Option<PathBuf>,
    /// Name shown in reports; defaults to the model file stem.
    #[arg(long)]
    id: Option<String>,
    #[command(flatten)]
    epzg: EpzgOpts,
    #[command(flatten)]
    testgen: TestgenOpts,
    /// Drop tests that would make the constraint empty.
    #[arg(long)]
    greedy: bool,
    #[command(flatten)]
    repair: RepairOpts,
    /// Seed of every random choice.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Positive words sampled for conformance.
    #[arg(long, default_value_t = DEFAULT_SC_BUDGET)]
    sc_budget: usize,
    /// Frozen conformance words as JSON lines; replaces sampling.
    #[arg(long)]
    sc_set: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    experiment: ExperimentOpts,
    /// Policies to compare; defaults to minmax1, minmax2 and minmax4.
    #[arg(long = "policies", value_enum, value_delimiter = ',')]
    policies: Vec<PolicyName>,
    /// Reports output as a JSON array.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct PipelineArgs {
    #[command(flatten)]
    experiment: ExperimentOpts,
    /// Directory receiving every artifact.
    #[arg(short, long, default_value = "out")]
    out: PathBuf,
}

/// An error with the process exit code it maps to.
struct CliError {
    code: u8,
    error: anyhow::Error,
}

impl From<anyhow::Error> for CliError {
    fn from(error: anyhow::Error) -> Self {
        CliError {
            code: EXIT_VALIDATION,
            error,
        }
    }
}

fn coded<E: Into<anyhow::Error>>(code: u8) -> impl FnOnce(E) -> CliError {
    move |e| CliError { code, error: e.into() }
}

type CliResult<T> = Result<T, CliError>;

fn read(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn write(path: &Path, content: &str) -> anyhow::Result<()> {
    fs::write(path, content).with_context(|| format!("cannot write {}", path.display()))
}

fn pretty<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

fn load_ta(path: &Path) -> anyhow::Result<Ta> {
    Ta::from_json(&read(path)?).with_context(|| format!("invalid timed automaton {}", path.display()))
}

fn load_pta(path: &Path) -> anyhow::Result<Pta> {
    Pta::from_json(&read(path)?).with_context(|| format!("invalid parametric automaton {}", path.display()))
}

fn load_json<T: serde::de::DeserializeOwned>(path: &Path, what: &str) -> anyhow::Result<T> {
    serde_json::from_str(&read(path)?).with_context(|| format!("invalid {what} {}", path.display()))
}

fn parse_abstraction(spec: &str) -> anyhow::Result<AbstractionStrategy> {
    Ok(match spec {
        "all" => AbstractionStrategy::All,
        "shared" => AbstractionStrategy::SharedPerLocation(InvariantMode::JoinOnly),
        "shared:independent" => AbstractionStrategy::SharedPerLocation(InvariantMode::Independent),
        "shared:keep" => AbstractionStrategy::SharedPerLocation(InvariantMode::Keep),
        _ => match spec.strip_prefix("manual:") {
            Some(path) => AbstractionStrategy::Manual(load_json::<ManualMap>(Path::new(path), "abstraction map")?),
            None => bail!("unknown abstraction `{spec}`; expected all, shared, shared:independent, shared:keep or manual:<path>"),
        },
    })
}

/// The oracle and, for `ta:` oracles, its automaton.
fn open_oracle(opts: &OracleOpts) -> anyhow::Result<(Oracle, Option<Ta>)> {
    let (kind, arg) = opts
        .oracle
        .split_once(':')
        .ok_or_else(|| anyhow!("oracle `{}` lacks a kind; expected ta:, exec: or recorded:", opts.oracle))?;
    Ok(match kind {
        "ta" => {
            let ta = load_ta(Path::new(arg))?;
            (Oracle::from_ta(ta.clone()), Some(ta))
        }
        "exec" => {
            let command: Vec<String> = arg.split_whitespace().map(String::from).collect();
            if command.is_empty() {
                bail!("exec oracle needs a command");
            }
            if !(opts.timeout.is_finite() && opts.timeout > 0.0) {
                bail!("--timeout must be a positive number of seconds");
            }
            let p = ExternalProcess::new(command, Duration::from_secs_f64(opts.timeout));
            (Oracle::new(OracleBackend::ExternalProcess(p)), None)
        }
        "recorded" => {
            let backend = OracleBackend::recorded_from_jsonl(&read(Path::new(arg))?)
                .with_context(|| format!("invalid recording {arg}"))?;
            (Oracle::new(backend), None)
        }
        _ => bail!("unknown oracle kind `{kind}`; expected ta:, exec: or recorded:"),
    })
}

fn policy(name: PolicyName, samples: usize, seed: u64) -> Policy {
    match name {
        PolicyName::Minmax1 => Policy::MinMaxPm1,
        PolicyName::Minmax2 => Policy::MinMax2,
        PolicyName::Minmax4 => Policy::MinMax4,
        PolicyName::Random => Policy::Random {
            seed,
            samples_per_state: samples,
        },
    }
}

fn testgen_config(opts: &TestgenOpts, name: PolicyName, depth: usize, seed: u64) -> anyhow::Result<TestgenConfig> {
    let mut cfg = TestgenConfig::new(policy(name, opts.samples, seed), depth);
    cfg.horizon = rational::parse(&opts.horizon).with_context(|| format!("invalid horizon `{}`", opts.horizon))?;
    cfg.cap = (!opts.no_cap).then_some(opts.cap);
    cfg.include_empty = opts.include_empty;
    Ok(cfg)
}

fn repair_config(opts: &RepairOpts) -> anyhow::Result<RepairConfig> {
    let mut bounds: BTreeMap<String, (Rational, Rational)> = BTreeMap::new();
    for b in &opts.bounds {
        let parsed = b.split_once('=').and_then(|(p, range)| {
            let (lo, hi) = range.split_once(':')?;
            Some((p.trim().to_string(), rational::parse(lo).ok()?, rational::parse(hi).ok()?))
        });
        let Some((p, lo, hi)) = parsed else {
            bail!("invalid bound `{b}`; expected <param>=<lo>:<hi>");
        };
        if lo > hi {
            bail!("empty bound `{b}`");
        }
        bounds.insert(p, (lo, hi));
    }
    Ok(RepairConfig {
        domain: match opts.granularity {
            None => Domain::Integer,
            Some(0) => bail!("--granularity must be positive"),
            Some(granularity) => Domain::Rational { granularity },
        },
        bounds,
        max_iterations: opts.max_iterations,
    })
}

fn synth_code(e: SynthesisError) -> CliError {
    let code = match e {
        SynthesisError::Unsatisfiable => EXIT_INSUFFICIENT,
        _ => EXIT_VALIDATION,
    };
    coded(code)(anyhow::Error::new(e).context("synth failed"))
}

fn run_abstract(a: &AbstractArgs) -> CliResult<()> {
    let ta = load_ta(&a.ta)?;
    let strategy = parse_abstraction(&a.abstraction)?;
    let (pta, v_init) = abstract_guards(&ta, &strategy).context("abstract failed")?;
    write(&a.output, &pta.to_json())?;
    write(&a.valuation_out, &pretty(&v_init))?;
    println!("{} parameters, initial valuation {v_init}", pta.parameters.len());
    Ok(())
}

fn epzg_config(opts: &EpzgOpts) -> EpzgConfig {
    EpzgConfig {
        depth: opts.depth,
        merge: !opts.no_merge,
    }
}

fn run_epzg(a: &EpzgArgs) -> CliResult<()> {
    let pta = load_pta(&a.pta)?;
    let g = build_epzg(&pta, epzg_config(&a.opts)).context("epzg failed")?;
    if let Some(d) = &g.diagnostic {
        log::warn!("zone graph is partial: {d}");
    }
    if let Some(out) = &a.output {
        write(out, &pretty(&g))?;
    }
    if a.table || a.output.is_none() {
        print!("{}", g.table());
    }
    Ok(())
}

fn run_gen_tests(a: &GenTestsArgs) -> CliResult<()> {
    let pta = load_pta(&a.pta)?;
    let g: Epzg = load_json(&a.epzg, "zone graph")?;
    let cfg = testgen_config(&a.opts, a.opts.policy, a.depth, a.seed)?;
    let td = generate_test_data(&pta, &g, &cfg).context("gen-tests failed")?;
    write(&a.output, &td.to_jsonl())?;
    println!("{} words", td.len());
    Ok(())
}

fn run_label(a: &LabelArgs) -> CliResult<()> {
    let td = TestData::from_jsonl(&read(&a.tests)?).with_context(|| format!("invalid test data {}", a.tests.display()))?;
    let (mut oracle, _) = open_oracle(&a.oracle)?;
    let labeled = label_tests(&td, &mut oracle);
    if let Some(path) = &a.record {
        write(path, &oracle.recording())?;
    }
    let suite = labeled.map_err(oracle_failure)?;
    write(&a.output, &suite.to_json())?;
    println!(
        "{} tests ({} accepted, {} rejected), {} oracle queries",
        suite.len(),
        suite.mba().count(),
        suite.mbr().count(),
        oracle.backend_queries()
    );
    Ok(())
}

fn oracle_failure(e: OracleError) -> CliError {
    coded(EXIT_ORACLE)(anyhow::Error::new(e).context("label failed"))
}

fn phi_text(phi: &PolyUnion) -> String {
    format!("{phi}\n")
}

fn phi_json(phi: &PolyUnion) -> String {
    pretty(&phi.to_json())
}

fn run_synth(a: &SynthArgs) -> CliResult<()> {
    let pta = load_pta(&a.pta)?;
    let suite = TestSuite::from_json(&read(&a.suite)?).with_context(|| format!("invalid test suite {}", a.suite.display()))?;
    let mode = if a.greedy { Mode::Greedy } else { Mode::Strict };
    let (phi, discarded) = synthesize(&pta, &suite, mode).map_err(synth_code)?;
    if let Some(out) = &a.output {
        write(out, &phi_json(&phi))?;
    }
    if let Some(out) = &a.text_out {
        write(out, &phi_text(&phi))?;
    }
    for t in &discarded {
        eprintln!("discarded: {} ({})", t.word, if t.verdict { "accepted" } else { "rejected" });
    }
    print!("{}", phi_text(&phi));
    Ok(())
}

fn run_repair(a: &RepairArgs) -> CliResult<()> {
    let pta = load_pta(&a.pta)?;
    let json: UnionJson = load_json(&a.phi, "constraint")?;
    let phi = PolyUnion::from_json(json).context("invalid constraint")?;
    let v_init: ParamValuation = load_json(&a.v_init, "valuation")?;
    let cfg = repair_config(&a.opts)?;
    let v_rep = instantiate(&phi, &v_init, &cfg).context("repair failed")?;
    let ta_rep = pta.apply_valuation(&v_rep).context("repair failed")?;
    write(&a.output, &ta_rep.as_pta().to_json())?;
    if let Some(out) = &a.valuation_out {
        write(out, &pretty(&v_rep))?;
    }
    println!("repaired valuation {v_rep}");
    Ok(())
}

struct Prepared {
    bench: Benchmark,
    oracle: Oracle,
    cfg: ExperimentConfig,
}

/// Resolves every input before any step runs.
fn prepare(o: &ExperimentOpts, name: PolicyName) -> anyhow::Result<Prepared> {
    let ta_init = load_ta(&o.ta)?;
    let abstraction = parse_abstraction(&o.abstraction)?;
    let (oracle, oracle_ta) = open_oracle(&o.oracle)?;
    let oracle_ta = match &o.oracle_model {
        Some(p) => Some(load_ta(p)?),
        None => oracle_ta,
    };
    let id = o.id.clone().unwrap_or_else(|| {
        let stem = o.ta.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        stem.split('.').next().unwrap_or_default().to_string()
    });
    let mut cfg = ExperimentConfig::new(Policy::MinMaxPm1, o.epzg.depth);
    cfg.testgen = testgen_config(&o.testgen, name, o.epzg.depth, o.seed)?;
    cfg.merge = !o.epzg.no_merge;
    cfg.mode = if o.greedy { Mode::Greedy } else { Mode::Strict };
    cfg.repair = repair_config(&o.repair)?;
    cfg.sc = ScConfig {
        seed: o.seed,
        budget: o.sc_budget,
        depth: DEFAULT_SC_DEPTH,
    };
    if let Some(p) = &o.sc_set {
        cfg.sc_words = Some(words_from_jsonl(&read(p)?).with_context(|| format!("invalid word set {}", p.display()))?);
    }
    Ok(Prepared {
        bench: Benchmark {
            id,
            ta_init,
            abstraction,
            oracle_ta,
        },
        oracle,
        cfg,
    })
}

fn failure_of(report: &EvalReport) -> Option<CliError> {
    let f = report.failure.as_ref()?;
    let code = match f.kind {
        FailureKind::AbstractionInsufficient => EXIT_INSUFFICIENT,
        FailureKind::Oracle => EXIT_ORACLE,
        FailureKind::Validation | FailureKind::Internal => EXIT_VALIDATION,
    };
    Some(CliError {
        code,
        error: anyhow!("{} failed: {}", f.stage, f.message),
    })
}

fn run_eval(a: &EvalArgs) -> CliResult<()> {
    let names = if a.policies.is_empty() {
        vec![PolicyName::Minmax1, PolicyName::Minmax2, PolicyName::Minmax4]
    } else {
        a.policies.clone()
    };
    let mut reports = Vec::new();
    for name in names {
        let mut p = prepare(&a.experiment, name)?;
        reports.push(run_experiment(&p.bench, &mut p.oracle, &p.cfg).report);
    }
    if let Some(path) = &a.json {
        write(path, &pretty(&reports))?;
    }
    print!("{}", table(&reports));
    match reports.iter().find_map(failure_of) {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

/// Writes every artifact the run produced under the layout of `pipeline`.
fn persist(dir: &Path, exp: &Experiment, oracle: &Oracle) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let a = &exp.artifacts;
    let r = &exp.report;
    if let Some(pta) = &a.pta {
        write(&dir.join("01_pta.json"), &pta.to_json())?;
        write(&dir.join("01_v_init.json"), &pretty(&r.v_init))?;
    }
    if let Some(g) = &a.epzg {
        write(&dir.join("02_epzg.json"), &pretty(g))?;
    }
    if let Some(td) = &a.test_data {
        write(&dir.join("03_testdata.jsonl"), &td.to_jsonl())?;
    }
    write(&dir.join("04_oracle.jsonl"), &oracle.recording())?;
    if let Some(suite) = &a.suite {
        write(&dir.join("04_testsuite.json"), &suite.to_json())?;
    }
    if let Some(phi) = &a.phi {
        write(&dir.join("05_phi.txt"), &phi_text(phi))?;
        write(&dir.join("05_phi.json"), &phi_json(phi))?;
    }
    if let Some(ta) = &a.ta_rep {
        write(&dir.join("06_ta_rep.json"), &ta.as_pta().to_json())?;
    }
    if let Some(v) = &r.v_rep {
        write(&dir.join("06_v_rep.json"), &pretty(v))?;
    }
    if let Some(words) = &a.sc_words {
        write(&dir.join("07_sc_words.jsonl"), &words_to_jsonl(words))?;
    }
    write(&dir.join("report.json"), &r.to_json())?;
    write(&dir.join("report.txt"), &r.to_text())?;
    Ok(())
}

fn run_pipeline(a: &PipelineArgs) -> CliResult<()> {
    let mut p = prepare(&a.experiment, a.experiment.testgen.policy)?;
    let exp = run_experiment(&p.bench, &mut p.oracle, &p.cfg);
    persist(&a.out, &exp, &p.oracle)?;
    print!("{}", exp.report.to_text());
    match failure_of(&exp.report) {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        2 => "debug",
        _ => "trace",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Some(cap) = cli.atom_cap {
        polyhedra::set_atom_cap(cap);
    }
    let result = match &cli.command {
        Command::Abstract(a) => run_abstract(a),
        Command::Epzg(a) => run_epzg(a),
        Command::GenTests(a) => run_gen_tests(a),
        Command::Label(a) => run_label(a),
        Command::Synth(a) => run_synth(a),
        Command::Repair(a) => run_repair(a),
        Command::Eval(a) => run_eval(a),
        Command::Pipeline(a) => run_pipeline(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {:#}", e.error);
            ExitCode::from(e.code)
        }
    }
}
