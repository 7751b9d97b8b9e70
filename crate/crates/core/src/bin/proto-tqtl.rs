use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};
use serde::Serialize;
use serde_json::{json, Value};

use proto_tqtl::proto::{self, read_dataset, read_model, write_dataset, write_model, TrainConfig};
use proto_tqtl::specs::{self, Builtin, ReportRow, SatisfactionReport, SpecParams};
use proto_tqtl::synth::{self, SynthSpec};
use proto_tqtl::tqtl::{parse, pretty_print, scope_check, Formula, Robustness};
use proto_tqtl::trace_gen::{generate_trace, Aggregation};
use proto_tqtl::{read_trace, write_trace, ClassSource, Label, Trace};

const EXIT_INPUT: u8 = 1;
const EXIT_SEMANTIC: u8 = 2;
const EXIT_VIOLATIONS: u8 = 3;

#[derive(Parser)]
#[command(name = "proto-tqtl", version, about = "Prototype-similarity traces and TQTL verification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and scope-check a specification, then print its canonical form.
    SpecCheck(SpecCheckArgs),
    /// Evaluate a specification on traces and report satisfaction rates.
    Verify(VerifyArgs),
    /// Generate a synthetic latent dataset.
    GenData(GenDataArgs),
    /// Train a prototype bank on a dataset.
    Train(TrainArgs),
    /// Project every prototype onto its nearest same-class training patch.
    Project(ProjectArgs),
    /// Run a model over synthetic videos (or a clip file) and write traces.
    GenTrace(GenTraceArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ClassSourceArg {
    Predicted,
    GroundTruth,
}

impl From<ClassSourceArg> for ClassSource {
    fn from(c: ClassSourceArg) -> Self {
        match c {
            ClassSourceArg::Predicted => ClassSource::Predicted,
            ClassSourceArg::GroundTruth => ClassSource::GroundTruth,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum LabelArg {
    Real,
    Fake,
}

impl From<LabelArg> for Label {
    fn from(l: LabelArg) -> Self {
        match l {
            LabelArg::Real => Label::Real,
            LabelArg::Fake => Label::Fake,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum AggregationArg {
    Mean,
    Sum,
}

#[derive(Args)]
struct SpecOptions {
    /// A .tqtl file, or builtin:phi1 / builtin:phi2 / builtin:phi3.
    #[arg(long)]
    spec: String,
    /// Class the built-in specifications are stated for.
    #[arg(long, value_enum, default_value = "fake")]
    target: LabelArg,
    /// Similarity ceiling of the non-relevance specifications.
    #[arg(long, default_value_t = 0.4)]
    ceiling: f64,
    /// Drift bound of phi2.
    #[arg(long, default_value_t = 0.1)]
    drift: f64,
    /// Drift window of phi2, in frames.
    #[arg(long, default_value_t = 5)]
    window: u64,
    /// Build phi1 with the connectives exactly as printed.
    #[arg(long)]
    literal_phi1: bool,
    /// Label read by class() atoms.
    #[arg(long, value_enum, default_value = "predicted")]
    class_source: ClassSourceArg,
}

#[derive(Args)]
struct SpecCheckArgs {
    #[command(flatten)]
    spec: SpecOptions,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    spec: SpecOptions,
    /// Trace file (repeatable).
    #[arg(long)]
    trace: Vec<PathBuf>,
    /// Directory whose files are all read as traces, in name order.
    #[arg(long)]
    trace_dir: Option<PathBuf>,
    /// Print a JSON document instead of the text report.
    #[arg(long)]
    json: bool,
    /// Exit with status 3 when any trace is not satisfied.
    #[arg(long)]
    strict: bool,
    /// Worker threads (0 uses every core).
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

#[derive(Args)]
struct GenDataArgs {
    /// TOML generator settings; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    clips_per_class: Option<usize>,
    #[arg(long)]
    height: Option<usize>,
    #[arg(long)]
    width: Option<usize>,
    #[arg(long)]
    noise_scale: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Cluster weight [default: 0.2]
    #[arg(long)]
    lambda_c: Option<f64>,
    /// Separation coefficient [default: -0.2]
    #[arg(long, allow_hyphen_values = true)]
    lambda_s: Option<f64>,
    /// Diversity weight [default: 0.1]
    #[arg(long)]
    lambda_d: Option<f64>,
    /// Cosine threshold of the diversity term [default: 0.3]
    #[arg(long)]
    s_max: Option<f64>,
    /// Prototypes per class [default: 10]
    #[arg(long)]
    m_k: Option<usize>,
    /// [default: 0.001]
    #[arg(long)]
    lr_proto: Option<f64>,
    /// [default: 0.0002]
    #[arg(long)]
    lr_fc: Option<f64>,
    /// [default: 200]
    #[arg(long)]
    epochs: Option<usize>,
    /// Project every N epochs [default: 5]
    #[arg(long)]
    projection_period: Option<usize>,
    /// Initialization seed [default: 0]
    #[arg(long)]
    seed: Option<u64>,
    /// Add lambda_s times the separation term as written instead of |lambda_s|
    #[arg(long)]
    literal_lambda_signs: bool,
    /// Write per-epoch loss terms as CSV.
    #[arg(long)]
    history: Option<PathBuf>,
}

#[derive(Args)]
struct ProjectArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Defaults to overwriting the model file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenTraceArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
    /// Generator settings for synthetic videos.
    #[arg(long, conflicts_with = "clips")]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 2)]
    videos_per_class: usize,
    #[arg(long, default_value_t = 16)]
    frames: usize,
    #[arg(long)]
    seed: Option<u64>,
    /// A dataset file read as the frames of one video, in order.
    #[arg(long)]
    clips: Option<PathBuf>,
    /// Ground truth of the --clips video.
    #[arg(long, value_enum, requires = "clips")]
    label: Option<LabelArg>,
    #[arg(long, value_enum, default_value = "mean")]
    aggregation: AggregationArg,
}

struct Failure {
    code: u8,
    message: String,
}

fn input(message: impl Display) -> Failure {
    Failure { code: EXIT_INPUT, message: message.to_string() }
}

fn semantic(message: impl Display) -> Failure {
    Failure { code: EXIT_SEMANTIC, message: message.to_string() }
}

type Outcome = Result<u8, Failure>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("PROTO_TQTL_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_INPUT } else { 0 });
        }
    };
    let result = match cli.command {
        Command::SpecCheck(a) => spec_check(a),
        Command::Verify(a) => verify(a),
        Command::GenData(a) => gen_data(a),
        Command::Train(a) => train(a),
        Command::Project(a) => project(a),
        Command::GenTrace(a) => gen_trace(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn print_config<T: Serialize>(name: &str, value: &T) {
    eprintln!("config {name}: {}", serde_json::to_string(value).expect("config serializes"));
}

fn class_source_name(c: ClassSource) -> &'static str {
    match c {
        ClassSource::Predicted => "predicted",
        ClassSource::GroundTruth => "ground-truth",
    }
}

fn load_spec(opts: &SpecOptions) -> Result<(Formula, ClassSource), Failure> {
    let class_source = ClassSource::from(opts.class_source);
    let params = SpecParams {
        target_class: opts.target.into(),
        similarity_ceiling: opts.ceiling,
        drift_bound: opts.drift,
        window: opts.window,
        class_source,
        literal_phi1: opts.literal_phi1,
    };
    let formula = if let Some(name) = opts.spec.strip_prefix("builtin:") {
        params.validate().map_err(input)?;
        let builtin: Builtin = name.parse().map_err(input)?;
        print_config(
            "spec",
            &json!({
                "spec": opts.spec,
                "target": params.target_class,
                "ceiling": params.similarity_ceiling,
                "drift": params.drift_bound,
                "window": params.window,
                "literal_phi1": params.literal_phi1,
                "class_source": class_source_name(class_source),
            }),
        );
        builtin.build(&params)
    } else {
        let text = fs::read_to_string(&opts.spec).map_err(|e| input(format!("{}: {e}", opts.spec)))?;
        print_config("spec", &json!({ "spec": opts.spec, "class_source": class_source_name(class_source) }));
        if text.trim().is_empty() {
            return Err(input(format!("{}: empty specification", opts.spec)));
        }
        parse(&text).map_err(|e| input(format!("{}: {e}", opts.spec)))?
    };
    let errors = scope_check(&formula);
    if !errors.is_empty() {
        let lines: Vec<String> = errors.iter().map(|e| format!("{}: {e}", opts.spec)).collect();
        return Err(semantic(lines.join("\n")));
    }
    Ok((formula, class_source))
}

fn spec_check(args: SpecCheckArgs) -> Outcome {
    let (formula, _) = load_spec(&args.spec)?;
    println!("{}", pretty_print(&formula));
    Ok(0)
}

fn trace_paths(args: &VerifyArgs) -> Result<Vec<PathBuf>, Failure> {
    let mut paths = args.trace.clone();
    if let Some(dir) = &args.trace_dir {
        let entries = fs::read_dir(dir).map_err(|e| input(format!("{}: {e}", dir.display())))?;
        let mut found = Vec::new();
        for entry in entries {
            let entry = entry.map_err(|e| input(format!("{}: {e}", dir.display())))?;
            if entry.path().is_file() {
                found.push(entry.path());
            }
        }
        found.sort();
        paths.extend(found);
    }
    if paths.is_empty() {
        return Err(input("no traces given (use --trace or --trace-dir)"));
    }
    Ok(paths)
}

fn robustness_json(r: Robustness) -> Value {
    match r {
        Robustness::PosInf => json!("+inf"),
        Robustness::NegInf => json!("-inf"),
        Robustness::Finite(v) => json!(v),
    }
}

fn row_json(row: &ReportRow) -> Value {
    json!({
        "total": row.total,
        "sat": row.sat,
        "unsat": row.unsat,
        "inconclusive": row.inconclusive,
        "percentage": row.percentage(),
    })
}

fn verify(args: VerifyArgs) -> Outcome {
    if args.jobs > 0 {
        rayon::ThreadPoolBuilder::new().num_threads(args.jobs).build_global().map_err(input)?;
    }
    let (formula, class_source) = load_spec(&args.spec)?;
    let paths = trace_paths(&args)?;
    print_config(
        "verify",
        &json!({ "traces": paths.len(), "jobs": args.jobs, "json": args.json, "strict": args.strict }),
    );
    let traces: Vec<Trace> = paths
        .iter()
        .map(|p| read_trace(p).map_err(|e| input(format!("{}: {e}", p.display()))))
        .collect::<Result<_, _>>()?;
    let report = specs::report(&formula, &traces, class_source).map_err(|e| match e {
        specs::SpecError::Eval { .. } => semantic(e),
        other => input(other),
    })?;

    if args.json {
        println!("{}", serde_json::to_string_pretty(&report_json(&args.spec.spec, class_source, &paths, &report)).unwrap());
    } else {
        print_report(&paths, &report);
    }
    let violations = report.violations();
    if violations > 0 {
        info!("{violations} of {} traces not satisfied", report.all.total);
    }
    Ok(if args.strict && violations > 0 { EXIT_VIOLATIONS } else { 0 })
}

fn report_json(spec: &str, class_source: ClassSource, paths: &[PathBuf], report: &SatisfactionReport) -> Value {
    let traces: Vec<Value> = report
        .outcomes
        .iter()
        .zip(paths)
        .map(|(o, p)| {
            json!({
                "path": p.display().to_string(),
                "video_id": o.video_id,
                "ground_truth": o.ground_truth,
                "predicted": o.predicted,
                "verdict": o.verdict.as_str(),
                "robustness": robustness_json(o.robustness),
            })
        })
        .collect();
    json!({
        "spec": spec,
        "class_source": class_source_name(class_source),
        "traces": traces,
        "summary": {
            "positive": row_json(&report.positive),
            "negative": row_json(&report.negative),
            "all": row_json(&report.all),
        },
    })
}

fn print_report(paths: &[PathBuf], report: &SatisfactionReport) {
    for (o, p) in report.outcomes.iter().zip(paths) {
        println!(
            "{}\t{}\tgt={}\tpred={}\t{}\t{}",
            p.display(),
            o.video_id,
            o.ground_truth,
            o.predicted,
            o.verdict,
            o.robustness
        );
    }
    println!();
    print!("{report}");
}

fn gen_data(args: GenDataArgs) -> Outcome {
    let mut spec = match &args.config {
        Some(path) => SynthSpec::load(path).map_err(input)?,
        None => SynthSpec::default(),
    };
    if let Some(v) = args.clips_per_class {
        spec.clips_per_class = v;
    }
    if let Some(v) = args.height {
        spec.h = v;
    }
    if let Some(v) = args.width {
        spec.w = v;
    }
    if let Some(v) = args.noise_scale {
        spec.noise_scale = v;
    }
    if let Some(v) = args.seed {
        spec.seed = v;
    }
    print_config("synth", &spec);
    let dataset = synth::generate_dataset(&spec).map_err(input)?;
    write_dataset(&dataset, &args.out).map_err(input)?;
    println!("wrote {} clips to {}", dataset.len(), args.out.display());
    Ok(0)
}

fn train(args: TrainArgs) -> Outcome {
    let mut cfg = TrainConfig::default();
    macro_rules! apply {
        ($($field:ident),*) => { $(if let Some(v) = args.$field { cfg.$field = v; })* };
    }
    apply!(lambda_c, lambda_s, lambda_d, s_max, m_k, lr_proto, lr_fc, epochs, projection_period, seed);
    cfg.literal_lambda_signs |= args.literal_lambda_signs;
    print_config("train", &cfg);
    let dataset = read_dataset(&args.data).map_err(input)?;
    let outcome = proto::train(&dataset, &cfg).map_err(input)?;
    write_model(&outcome.bank, &args.out).map_err(input)?;
    if let Some(path) = &args.history {
        write_history(path, &outcome.history)?;
    }
    println!("initial loss {:.6}", outcome.initial.total);
    println!("final loss {:.6}", outcome.last.total);
    println!("training accuracy {:.4}", outcome.accuracy);
    if outcome.last.total >= outcome.initial.total {
        warn!("final loss did not improve on the initial loss");
    }
    println!("wrote model with {} prototypes to {}", outcome.bank.m(), args.out.display());
    Ok(0)
}

fn write_history(path: &Path, history: &[proto::EpochStats]) -> Result<(), Failure> {
    let mut out = String::from("epoch,total,ce,clus,sep,div,projected\n");
    for e in history {
        let l = &e.loss;
        out.push_str(&format!("{},{},{},{},{},{},{}\n", e.epoch, l.total, l.ce, l.clus, l.sep, l.div, e.projected));
    }
    fs::write(path, out).map_err(|e| input(format!("{}: {e}", path.display())))
}

fn project(args: ProjectArgs) -> Outcome {
    let out = args.out.clone().unwrap_or_else(|| args.model.clone());
    print_config(
        "project",
        &json!({ "model": args.model.display().to_string(), "data": args.data.display().to_string(), "out": out.display().to_string() }),
    );
    let bank = read_model(&args.model).map_err(input)?;
    let dataset = read_dataset(&args.data).map_err(input)?;
    let projected = proto::project(&bank, &dataset).map_err(input)?;
    write_model(&projected, &out).map_err(input)?;
    println!("projected {} prototypes, wrote {}", projected.m(), out.display());
    Ok(0)
}

fn gen_trace(args: GenTraceArgs) -> Outcome {
    let bank = read_model(&args.model).map_err(input)?;
    let aggregation = match args.aggregation {
        AggregationArg::Mean => Aggregation::Mean,
        AggregationArg::Sum => Aggregation::Sum,
    };
    let videos = if let Some(path) = &args.clips {
        let label: Label = args.label.ok_or_else(|| input("--clips requires --label"))?.into();
        print_config("gen-trace", &json!({ "clips": path.display().to_string(), "label": label }));
        let dataset = read_dataset(path).map_err(input)?;
        let id = path.file_stem().map_or("video".into(), |s| s.to_string_lossy().into_owned());
        vec![synth::Video { id, label, frames: dataset.clips }]
    } else {
        let mut spec = match &args.config {
            Some(path) => SynthSpec::load(path).map_err(input)?,
            None => SynthSpec::default(),
        };
        if let Some(seed) = args.seed {
            spec.seed = seed;
        }
        print_config(
            "gen-trace",
            &json!({ "synth": spec, "videos_per_class": args.videos_per_class, "frames": args.frames }),
        );
        synth::generate_videos(&spec, args.videos_per_class, args.frames).map_err(input)?
    };
    fs::create_dir_all(&args.out_dir).map_err(|e| input(format!("{}: {e}", args.out_dir.display())))?;
    for video in &videos {
        let trace = generate_trace(&video.id, &video.frames, &bank, video.label, aggregation).map_err(input)?;
        let path = args.out_dir.join(format!("{}.jsonl", video.id));
        write_trace(&trace, &path).map_err(input)?;
    }
    println!("wrote {} traces to {}", videos.len(), args.out_dir.display());
    Ok(0)
}
