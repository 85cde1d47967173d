//! Command-line front end: `generate`, `train`, `evaluate` and `score`.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use chrono::{DateTime, SecondsFormat, Utc};
use clap::{Parser, Subcommand};

use crate::artifact::ModelArtifact;
use crate::config::{config_hash, RunConfig};
use crate::dataset::{label_mask_split, read_csv, ColumnSchema, MaskedLabels};
use crate::error::{ConfigError, DatasetError, Error, EvalError};
use crate::eval::run_cv;
use crate::iforest::write_scores_csv;
use crate::pipeline::fit_two_phase;
use crate::preprocess::{fit_pipeline, transform};
use crate::svm::label_of;
use crate::synthetic::generate;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "scfraud", version, about = "Semi-supervised supply-chain fraud detection")]
pub struct Cli {
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory; overrides `output_dir` from the config.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Suppress progress messages.
    #[arg(long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic dataset as CSV.
    Generate,
    /// Fit preprocessing, the isolation forest and the self-trained SVM.
    Train,
    /// Cross-validate the configured methods for each labeled fraction.
    Evaluate,
    /// Score a CSV with a trained artifact.
    Score {
        #[arg(long)]
        artifact: PathBuf,
        #[arg(long)]
        input: PathBuf,
        /// Defaults to `scored.csv` in the output directory.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

/// Resolved command context.
#[derive(Debug, Clone)]
pub struct Context {
    pub config: RunConfig,
    /// SHA-256 of the config file, or of the empty string without one.
    pub config_hash: String,
    /// Directory relative data paths resolve against.
    pub base_dir: PathBuf,
    pub out_dir: PathBuf,
    pub quiet: bool,
}

impl Context {
    pub fn new(config: Option<&Path>, seed: Option<u64>, out: Option<&Path>, quiet: bool) -> Result<Self, Error> {
        let (mut cfg, hash, base_dir) = match config {
            Some(p) => {
                let (cfg, hash) = RunConfig::load(p)?;
                let base = p.parent().map(Path::to_path_buf).unwrap_or_default();
                (cfg, hash, base)
            }
            None => (RunConfig::default(), config_hash(b""), PathBuf::new()),
        };
        if let Some(s) = seed {
            cfg.seed = s;
        }
        let out_dir = out.map(Path::to_path_buf).unwrap_or_else(|| cfg.output_dir.clone());
        Ok(Self {
            config: cfg,
            config_hash: hash,
            base_dir,
            out_dir,
            quiet,
        })
    }

    fn note(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}", msg.as_ref());
        }
    }

    fn out_path(&self, name: &str) -> Result<PathBuf, Error> {
        std::fs::create_dir_all(&self.out_dir).map_err(|e| Error::io(&self.out_dir, e))?;
        Ok(self.out_dir.join(name))
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, Error> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<(), Error> {
    let mut w = create(path)?;
    f(&mut w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

/// Writes `synthetic.csv`; returns its path.
pub fn cmd_generate(ctx: &Context) -> Result<PathBuf, Error> {
    let spec = &ctx.config.data.synthetic;
    let data = generate(spec, ctx.config.seed)?;
    let path = ctx.out_path("synthetic.csv")?;
    data.write_csv(create(&path)?)?;
    ctx.note(format!(
        "wrote {} rows ({} fraud) to {}",
        spec.n,
        data.y.iter().filter(|&&v| v == 1).count(),
        path.display()
    ));
    Ok(path)
}

/// Paths written by `train`.
#[derive(Debug, Clone)]
pub struct TrainOutputs {
    pub artifact: PathBuf,
    pub history: PathBuf,
    pub log: PathBuf,
    pub scores: PathBuf,
}

fn modified_time(path: &Path) -> Option<String> {
    let t = std::fs::metadata(path).ok()?.modified().ok()?;
    Some(DateTime::<Utc>::from(t).to_rfc3339_opts(SecondsFormat::Secs, true))
}

pub fn cmd_train(ctx: &Context) -> Result<TrainOutputs, Error> {
    let cfg = &ctx.config;
    let data = cfg.load_data(&ctx.base_dir)?;
    let mask = label_mask_split(&data.labels, cfg.eval.labeled_fraction, cfg.seed)?;
    let masked = MaskedLabels::new(&data.labels, &mask);
    let pre_cfg = cfg.preprocess_for(&data.features);
    let pre = fit_pipeline(&data.features, masked.observed(), &pre_cfg)?;
    let x = transform(&pre, &data.features)?;
    ctx.note(format!(
        "{} rows, {} labeled, {} features",
        x.nrows(),
        mask.labeled.len(),
        x.ncols()
    ));
    let pipeline = cfg.pipeline_config();
    let fit = fit_two_phase(&x, masked.observed(), &pipeline, cfg.seed)?;
    ctx.note(format!(
        "{} candidates ({} above tau = {:.6}), best iteration {}",
        fit.candidates.len(),
        fit.above_threshold,
        fit.model.tau,
        fit.best_iteration
    ));

    let artifact = ModelArtifact::new(
        cfg.seed,
        ctx.config_hash.clone(),
        data.path.as_deref().and_then(modified_time),
        cfg.data.label_column.clone(),
        data.schema.clone(),
        pre.clone(),
        fit.model.clone(),
    );
    let out = TrainOutputs {
        artifact: ctx.out_path("model.scf")?,
        history: ctx.out_path("selftrain_history.csv")?,
        log: ctx.out_path("train.log")?,
        scores: ctx.out_path("anomaly_scores.csv")?,
    };
    artifact.save(&out.artifact)?;
    write_file(&out.history, |w| fit.history.write_csv(w))?;
    write_file(&out.scores, |w| write_scores_csv(w, &fit.unlabeled, &fit.unlabeled_scores))?;

    let params = fit.model.svm.params();
    let mut log = String::new();
    log.push_str("# effective configuration\n");
    log.push_str(&cfg.to_toml());
    log.push_str("\n# run summary\n");
    log.push_str(&format!("config_hash = \"{}\"\n", ctx.config_hash));
    log.push_str(&format!("rows = {}\nlabeled = {}\n", x.nrows(), mask.labeled.len()));
    log.push_str(&format!("features = {}\n", x.ncols()));
    log.push_str(&format!("missing_dropped = {:?}\n", pre.missing_dropped()));
    log.push_str(&format!("correlation_dropped = {:?}\n", pre.correlation_dropped()));
    log.push_str(&format!("tau = {}\n", fit.model.tau));
    log.push_str(&format!("above_threshold = {}\ncandidates = {}\n", fit.above_threshold, fit.candidates.len()));
    if let Some(grid) = &fit.grid {
        for s in grid {
            log.push_str(&format!("grid C={} gamma={} mean_f1={}\n", s.c, s.gamma, s.mean_f1));
        }
    }
    log.push_str(&format!(
        "svm C = {}\nsvm gamma = {}\nclass_weight_fraud = {}\nclass_weight_legit = {}\n",
        params.c, params.gamma, params.class_weight_fraud, params.class_weight_legit
    ));
    log.push_str(&format!("support_vectors = {}\n", fit.model.svm.support_vectors().nrows()));
    log.push_str(&format!(
        "selftrain_iterations = {}\nbest_iteration = {}\nstop = {:?}\n",
        fit.history.iterations(),
        fit.best_iteration,
        fit.history.stop
    ));
    write_file(&out.log, |w| w.write_all(log.as_bytes()))?;
    ctx.note(format!("artifact written to {}", out.artifact.display()));
    Ok(out)
}

/// Report file names for one labeled fraction.
pub fn report_names(fraction: f64) -> (String, String) {
    (format!("report_lf{fraction}.txt"), format!("folds_lf{fraction}.csv"))
}

/// Writes one text report and one per-fold CSV per labeled fraction.
pub fn cmd_evaluate(ctx: &Context) -> Result<Vec<PathBuf>, Error> {
    let cfg = &ctx.config;
    let data = cfg.load_data(&ctx.base_dir)?;
    let pre_cfg = cfg.preprocess_for(&data.features);
    let pipeline = cfg.pipeline_config();
    let mut written = Vec::new();
    for &fraction in &cfg.eval.labeled_fraction_sweep {
        let start = Instant::now();
        let report = run_cv(&data.features, &data.labels, &pre_cfg, &pipeline, &cfg.cv_config(fraction))?;
        let (txt, csv) = report_names(fraction);
        let txt = ctx.out_path(&txt)?;
        let csv = ctx.out_path(&csv)?;
        write_file(&txt, |w| w.write_all(report.render_table().as_bytes()))?;
        write_file(&csv, |w| report.write_folds_csv(w))?;
        ctx.note(format!(
            "labeled fraction {fraction}: {} folds in {:.1}s\n{}",
            report.n_folds,
            start.elapsed().as_secs_f64(),
            report.render_table()
        ));
        written.push(txt);
        written.push(csv);
    }
    Ok(written)
}

/// Scores `input`, appending `anomaly_score,decision_value,predicted_label,confidence`.
///
/// The input may carry the label column or omit it; every other column must
/// match the training schema in order. Returns the number of rows scored.
pub fn cmd_score(ctx: &Context, artifact: &Path, input: &Path, output: &Path) -> Result<usize, Error> {
    let art = ModelArtifact::load(artifact)?;
    if ctx.config_hash != config_hash(b"") {
        art.verify_config_hash(&ctx.config_hash)?;
    }
    let bytes = std::fs::read(input).map_err(|e| Error::io(input, e))?;
    let mut rdr = csv::Reader::from_reader(&bytes[..]);
    let header: Vec<String> = rdr
        .headers()
        .map_err(DatasetError::from)?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let full: Vec<ColumnSchema> = art.meta.input_schema.clone();
    let has_label = header.len() == full.len() && header.iter().zip(&full).all(|(h, c)| *h == c.name);
    let schema: Vec<ColumnSchema> = if has_label {
        full
    } else {
        full.into_iter().filter(|c| c.name != art.meta.label_column).collect()
    };
    let table = read_csv(&bytes[..], &schema)?;
    let features = if has_label {
        table.split_column(&art.meta.label_column)?.0
    } else {
        table
    };

    let start = Instant::now();
    let x = transform(&art.preprocess, &features)?;
    let anomaly = art.forest().score_all(&x)?;
    let decision = art.svm().decision_values(&x)?;
    let elapsed = start.elapsed().as_secs_f64();

    let mut w = csv::Writer::from_writer(create(output)?);
    let mut out_header = header.clone();
    out_header.extend(["anomaly_score", "decision_value", "predicted_label", "confidence"].map(String::from));
    w.write_record(&out_header).map_err(DatasetError::from)?;
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(DatasetError::from)?;
        let mut row: Vec<String> = rec.iter().map(String::from).collect();
        row.push(anomaly[i].to_string());
        row.push(decision[i].to_string());
        row.push(label_of(decision[i]).to_string());
        row.push(art.model.confidence(decision[i]).to_string());
        w.write_record(&row).map_err(DatasetError::from)?;
    }
    w.flush().map_err(|e| Error::io(output, e))?;
    let n = x.nrows();
    if !ctx.quiet {
        let rate = if elapsed > 0.0 { n as f64 / elapsed } else { f64::INFINITY };
        eprintln!("scored {n} rows in {elapsed:.3}s ({rate:.0} rows/s)");
    }
    Ok(n)
}

/// Exit code for an error: data problems map to 2, everything else to 3.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) => EXIT_USAGE,
        Error::Dataset(_) | Error::Preprocess(_) | Error::Artifact(_) | Error::Io { .. } => EXIT_DATA,
        Error::Eval(EvalError::Fold { source, .. }) => exit_code(source),
        _ => EXIT_INTERNAL,
    }
}

fn dispatch(cli: Cli) -> Result<(), Error> {
    let needs_config = matches!(cli.command, Command::Train | Command::Evaluate);
    if needs_config && cli.config.is_none() {
        return Err(ConfigError::Invalid("this command needs --config".into()).into());
    }
    let ctx = Context::new(cli.config.as_deref(), cli.seed, cli.out.as_deref(), cli.quiet)?;
    match cli.command {
        Command::Generate => cmd_generate(&ctx).map(drop),
        Command::Train => cmd_train(&ctx).map(drop),
        Command::Evaluate => cmd_evaluate(&ctx).map(drop),
        Command::Score {
            artifact,
            input,
            output,
        } => {
            let output = match output {
                Some(p) => p,
                None => ctx.out_path("scored.csv")?,
            };
            cmd_score(&ctx, &artifact, &input, &output).map(drop)
        }
    }
}

/// Parses `args` (program name first) and runs the command; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match dispatch(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
