//! Command-line front end: `train`, `classify`, `eval` and `spectrum`.
//!
//! Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical
//! error. Diagnostics go to standard error; data goes to standard output or
//! the requested files.

use std::collections::HashSet;
use std::ffi::OsString;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};
use wordsub::classifiers::{
    train, Classifier, FeatureKind, Model, Strategy, SubspaceParams, SvmParams, TrainConfig, DEFAULT_SEED,
};
use wordsub::corpus::{parse_documents, Corpus, Document};
use wordsub::embedding::{is_roman_word, EmbeddingTable};
use wordsub::eval::{
    make_folds, paired_ttest, run_experiment, spectrum_report, Comparison, EvalReport, ExperimentConfig, Grid,
};
use wordsub::subspace::DimPolicy;
use wordsub::{Error, ErrorCategory, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

/// Label printed for documents that cannot be classified.
pub const UNCLASSIFIABLE: &str = "__UNCLASSIFIABLE__";

#[derive(Debug, Parser)]
#[command(name = "wordsub", version, about = "Word-subspace text classification")]
pub struct Cli {
    /// Worker threads; 1 runs sequentially. Defaults to all cores.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a model and write it to a file.
    Train(TrainArgs),
    /// Classify documents with a trained model.
    Classify(ClassifyArgs),
    /// Run the 10-fold train/validation/test protocol.
    Eval(EvalArgs),
    /// Eigenvalue spectra of the class word subspaces.
    Spectrum(SpectrumArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Switch {
    On,
    Off,
}

impl Switch {
    fn on(self) -> bool {
        self == Switch::On
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EmbeddingFormat {
    Bin,
    Txt,
}

#[derive(Debug, Clone, Args)]
pub struct EmbeddingArgs {
    /// Embedding file (word2vec binary or text layout).
    #[arg(long)]
    pub embeddings: Option<PathBuf>,

    /// Embedding file layout; inferred from the extension when omitted.
    #[arg(long, value_enum)]
    pub format: Option<EmbeddingFormat>,

    /// Drop embedding words with characters outside the ASCII set.
    #[arg(long, value_enum, default_value = "on")]
    pub filter_roman: Switch,

    /// Scale word vectors to unit length before modeling.
    #[arg(long, value_enum, default_value = "on")]
    pub normalize_vectors: Switch,
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub embedding: EmbeddingArgs,

    /// Training corpus files (`label token token ...` per line).
    #[arg(long, required = true, num_args = 1..)]
    pub corpus: Vec<PathBuf>,

    #[arg(long)]
    pub strategy: String,

    /// Feature scheme; defaults to the strategy's natural one.
    #[arg(long)]
    pub feature: Option<String>,

    /// Class subspace dimension (capped by each class's rank).
    #[arg(long, default_value_t = 150)]
    pub mc: usize,

    /// Query subspace dimension stored as the default for classification.
    #[arg(long, default_value_t = 25)]
    pub mq: usize,

    /// Canonical angles used in the similarity; defaults to min(m_c, m_q).
    #[arg(long)]
    pub t: Option<usize>,

    /// LSA rank.
    #[arg(long, default_value_t = 50)]
    pub k: usize,

    /// SVM regularization.
    #[arg(long, default_value_t = 1e-4)]
    pub lambda: f64,

    /// SVM passes over the training samples.
    #[arg(long, default_value_t = 20)]
    pub epochs: usize,

    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,

    /// Model output file.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ClassifyArgs {
    #[command(flatten)]
    pub embedding: EmbeddingArgs,

    #[arg(long)]
    pub model: PathBuf,

    /// Documents to classify, in corpus layout.
    #[arg(long)]
    pub input: PathBuf,

    /// Input lines carry no class label: every token is a word.
    #[arg(long)]
    pub unlabeled: bool,

    /// Override the model's query subspace dimension.
    #[arg(long)]
    pub mq: Option<usize>,

    /// Override the model's number of canonical angles.
    #[arg(long)]
    pub t: Option<usize>,

    /// Prediction output; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub embedding: EmbeddingArgs,

    #[arg(long, required = true, num_args = 1..)]
    pub corpus: Vec<PathBuf>,

    #[arg(long, conflicts_with = "strategies")]
    pub strategy: Option<String>,

    /// Several strategies evaluated on the same folds.
    #[arg(long, value_delimiter = ',')]
    pub strategies: Vec<String>,

    /// Paired t-test between the two strategies.
    #[arg(long)]
    pub ttest: bool,

    /// Feature scheme for every strategy; defaults per strategy.
    #[arg(long)]
    pub feature: Option<String>,

    #[arg(long, value_delimiter = ',')]
    pub mc_grid: Option<Vec<usize>>,

    #[arg(long, value_delimiter = ',')]
    pub mq_grid: Option<Vec<usize>>,

    #[arg(long, value_delimiter = ',')]
    pub k_grid: Option<Vec<usize>>,

    #[arg(long, value_delimiter = ',')]
    pub lambda_grid: Option<Vec<f64>>,

    #[arg(long, default_value_t = 20)]
    pub epochs: usize,

    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,

    /// Machine-readable report file.
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Also write the human-readable table here.
    #[arg(long)]
    pub table: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub embedding: EmbeddingArgs,

    #[arg(long, required = true, num_args = 1..)]
    pub corpus: Vec<PathBuf>,

    /// Dimension at which the cumulative variance is summarized.
    #[arg(long, default_value_t = 150)]
    pub at: usize,

    /// Tab-separated spectrum curves.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let rendered = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(stderr, "{rendered}");
            } else {
                let _ = write!(stdout, "{rendered}");
            }
            return code;
        }
    };
    match execute(&cli, stdout) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e.category() {
        ErrorCategory::Config => EXIT_CONFIG,
        ErrorCategory::Data => EXIT_DATA,
        ErrorCategory::Numerical => EXIT_NUMERICAL,
    }
}

fn execute(cli: &Cli, stdout: &mut dyn Write) -> Result<()> {
    let work = |out: &mut dyn Write| match &cli.command {
        Command::Train(a) => cmd_train(a, out),
        Command::Classify(a) => cmd_classify(a, out),
        Command::Eval(a) => cmd_eval(a, out).map(|_| ()),
        Command::Spectrum(a) => cmd_spectrum(a, out),
    };
    match cli.threads {
        Some(0) => Err(Error::Config("--threads must be at least 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config(format!("cannot start thread pool: {e}")))?;
            // The sink is not `Send`, so output is buffered inside the pool.
            let mut buffer = Vec::new();
            let result = pool.install(|| work(&mut buffer));
            stdout.write_all(&buffer)?;
            result
        }
        None => work(stdout),
    }
}

pub fn cmd_train(args: &TrainArgs, stdout: &mut dyn Write) -> Result<()> {
    let strategy: Strategy = args.strategy.parse()?;
    let feature = parse_feature(args.feature.as_deref(), strategy)?;
    let out = create_output(&args.out)?;
    let corpus = read_corpus(&args.corpus)?;
    let embeddings = load_embeddings_for(&args.embedding, needs_embeddings(strategy, feature), vocabulary(&corpus))?;

    let mut config = TrainConfig::new(strategy);
    config.feature = feature;
    config.subspace = SubspaceParams {
        class_dim: DimPolicy::AtMost(args.mc),
        query_dim: DimPolicy::AtMost(args.mq),
        angles: args.t,
        normalize_vectors: args.embedding.normalize_vectors.on(),
    };
    config.lsa_rank = args.k;
    config.svm = SvmParams {
        lambda: args.lambda,
        epochs: args.epochs,
        seed: args.seed,
    };
    config.normalize_vectors = args.embedding.normalize_vectors.on();
    config.seed = args.seed;
    if args.mc == 0 || args.mq == 0 || args.t == Some(0) {
        return Err(Error::Config("--mc, --mq and --t must be at least 1".into()));
    }

    let model = train(&corpus, embeddings.as_ref(), &config)?;
    let mut writer = BufWriter::new(out);
    model.save(&mut writer)?;
    writer.flush()?;

    writeln!(stdout, "strategy\t{}", strategy)?;
    writeln!(stdout, "feature\t{}", feature)?;
    writeln!(stdout, "documents\t{}", corpus.len())?;
    for line in model.summary() {
        writeln!(stdout, "class\t{line}")?;
    }
    info!("model written to {}", args.out.display());
    Ok(())
}

pub fn cmd_classify(args: &ClassifyArgs, stdout: &mut dyn Write) -> Result<()> {
    let model_file = open_input(&args.model)?;
    let input = open_input(&args.input)?;
    let mut sink: Box<dyn Write> = match &args.out {
        Some(p) => Box::new(BufWriter::new(create_output(p)?)),
        None => Box::new(&mut *stdout),
    };
    let model = Model::load(BufReader::new(model_file))?;
    let documents = read_documents(BufReader::new(input), args.unlabeled)?;
    let wanted: HashSet<String> = documents.iter().flat_map(|d| d.tokens().iter().cloned()).collect();
    let needs = model.embedding_dimension().is_some();
    let embeddings = load_embeddings_for(&args.embedding, needs, wanted)?;
    if let (Some(dim), Some(table)) = (model.embedding_dimension(), embeddings.as_ref()) {
        if dim != table.dimension() {
            return Err(Error::AmbientMismatch {
                left: dim,
                right: table.dimension(),
            });
        }
    }

    for (i, doc) in documents.iter().enumerate() {
        let prediction = match (&model, args.mq, args.t) {
            (Model::Subspace(m), mq, t) if mq.is_some() || t.is_some() => {
                let policy = mq.map_or(m.params().query_dim, DimPolicy::AtMost);
                m.predict_with(doc.tokens(), embeddings.as_ref().expect("checked above"), policy, t.or(m.params().angles))
            }
            _ => model.predict(doc.tokens(), embeddings.as_ref()),
        };
        match prediction {
            Ok(p) => writeln!(sink, "{i}\t{}\t{:?}", p.label, p.score())?,
            Err(Error::DegenerateQuery(why)) => {
                warn!("document {i}: {why}");
                writeln!(sink, "{i}\t{UNCLASSIFIABLE}\t-")?;
            }
            Err(e) => return Err(e),
        }
    }
    sink.flush()?;
    Ok(())
}

pub fn cmd_eval(args: &EvalArgs, stdout: &mut dyn Write) -> Result<EvalReport> {
    let names: Vec<String> = match (&args.strategy, args.strategies.is_empty()) {
        (Some(s), _) => vec![s.clone()],
        (None, false) => args.strategies.clone(),
        (None, true) => return Err(Error::Config("give --strategy or --strategies".into())),
    };
    let strategies = names.iter().map(|s| s.parse()).collect::<Result<Vec<Strategy>>>()?;
    if strategies.iter().collect::<HashSet<_>>().len() != strategies.len() {
        return Err(Error::Config("a strategy is listed twice".into()));
    }
    if args.ttest && strategies.len() != 2 {
        return Err(Error::Config("--ttest compares exactly two strategies".into()));
    }
    let features = strategies
        .iter()
        .map(|&s| parse_feature(args.feature.as_deref(), s))
        .collect::<Result<Vec<_>>>()?;
    let out = args.out.as_deref().map(create_output).transpose()?;
    let table_out = args.table.as_deref().map(create_output).transpose()?;

    let corpus = read_corpus(&args.corpus)?;
    let needs = strategies.iter().zip(&features).any(|(&s, &f)| needs_embeddings(s, f));
    let embeddings = load_embeddings_for(&args.embedding, needs, vocabulary(&corpus))?;
    let plan = make_folds(&corpus, args.seed)?;

    let defaults = Grid::default();
    let grid = Grid {
        class_dims: args.mc_grid.clone().unwrap_or(defaults.class_dims),
        query_dims: args.mq_grid.clone().unwrap_or(defaults.query_dims),
        lsa_ranks: args.k_grid.clone().unwrap_or(defaults.lsa_ranks),
        svm_lambdas: args.lambda_grid.clone().unwrap_or(defaults.svm_lambdas),
    };
    if grid.class_dims.contains(&0) || grid.query_dims.contains(&0) || grid.lsa_ranks.contains(&0) {
        return Err(Error::Config("grid dimensions must be at least 1".into()));
    }

    let mut reports = Vec::with_capacity(strategies.len());
    for (&strategy, &feature) in strategies.iter().zip(&features) {
        let config = ExperimentConfig {
            strategy,
            feature,
            grid: grid.clone(),
            normalize_vectors: args.embedding.normalize_vectors.on(),
            svm_epochs: args.epochs,
            seed: args.seed,
        };
        reports.push(run_experiment(&corpus, embeddings.as_ref(), &config, &plan)?);
    }

    let comparison = if args.ttest {
        match paired_ttest(&reports[0].accuracies(), &reports[1].accuracies()) {
            Ok(test) => Some(Comparison {
                a: strategies[0],
                b: strategies[1],
                test,
            }),
            Err(e @ Error::DegenerateTest(_)) => {
                warn!("paired t-test not reported: {e}");
                None
            }
            Err(e) => return Err(e),
        }
    } else {
        None
    };
    let report = EvalReport {
        seed: args.seed,
        documents: corpus.len(),
        strategies: reports,
        comparison,
    };

    let table = report.to_table();
    write!(stdout, "{table}")?;
    if let Some(mut f) = table_out {
        f.write_all(table.as_bytes())?;
    }
    if let Some(mut f) = out {
        f.write_all(report.to_key_values().as_bytes())?;
    }
    Ok(report)
}

pub fn cmd_spectrum(args: &SpectrumArgs, stdout: &mut dyn Write) -> Result<()> {
    let out = args.out.as_deref().map(create_output).transpose()?;
    let corpus = read_corpus(&args.corpus)?;
    let embeddings = load_embeddings_for(&args.embedding, true, vocabulary(&corpus))?.expect("required");
    let report = spectrum_report(&corpus, &embeddings, args.embedding.normalize_vectors.on())?;
    for (c, cum) in report.classes.iter().zip(&report.cumulative) {
        let at = cum.get(args.at.saturating_sub(1)).copied().unwrap_or(1.0);
        writeln!(stdout, "class\t{c}\tcumulative@{}\t{at:?}", args.at)?;
    }
    match report.mean_cumulative_at(args.at) {
        Some(v) => writeln!(stdout, "mean\tcumulative@{}\t{v:?}", args.at)?,
        None => warn!("--at {} exceeds the embedding dimension {}", args.at, embeddings.dimension()),
    }
    if let Some(mut f) = out {
        f.write_all(report.to_tsv().as_bytes())?;
    }
    Ok(())
}

fn parse_feature(name: Option<&str>, strategy: Strategy) -> Result<FeatureKind> {
    let feature = match name {
        Some(n) => n.parse()?,
        None => strategy.default_feature(),
    };
    if !strategy.supports(feature) {
        return Err(Error::Config(format!("strategy {strategy} does not support feature {feature}")));
    }
    Ok(feature)
}

fn needs_embeddings(strategy: Strategy, feature: FeatureKind) -> bool {
    matches!(strategy, Strategy::Msm | Strategy::TfMsm | Strategy::Sa) || feature == FeatureKind::W2v
}

fn open_input(path: &Path) -> Result<File> {
    if !path.is_file() {
        return Err(Error::Config(format!("input file not found: {}", path.display())));
    }
    Ok(File::open(path)?)
}

fn create_output(path: &Path) -> Result<File> {
    File::create(path).map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display())))
}

fn read_documents<R: BufRead>(reader: R, unlabeled: bool) -> Result<Vec<Document>> {
    if !unlabeled {
        let (docs, warnings) = parse_documents(reader)?;
        for w in warnings {
            warn!("{w}");
        }
        return Ok(docs);
    }
    let mut docs = Vec::new();
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        docs.push(Document::new("_", line.split_whitespace())?);
    }
    Ok(docs)
}

fn read_corpus(paths: &[PathBuf]) -> Result<Corpus> {
    let files = paths.iter().map(|p| open_input(p)).collect::<Result<Vec<_>>>()?;
    let mut documents = Vec::new();
    for (file, path) in files.into_iter().zip(paths) {
        let (docs, warnings) = parse_documents(BufReader::new(file))?;
        for w in warnings {
            warn!("{}: {w}", path.display());
        }
        documents.extend(docs);
    }
    Corpus::new(documents)
}

fn vocabulary(corpus: &Corpus) -> HashSet<String> {
    corpus
        .documents()
        .iter()
        .flat_map(|d| d.tokens().iter().cloned())
        .collect()
}

/// Loads only the embedding rows for `wanted` words.
fn load_embeddings_for(args: &EmbeddingArgs, required: bool, wanted: HashSet<String>) -> Result<Option<EmbeddingTable>> {
    let Some(path) = &args.embeddings else {
        if required {
            return Err(Error::Config("this strategy needs --embeddings".into()));
        }
        return Ok(None);
    };
    let format = match args.format {
        Some(f) => f,
        None => detect_format(path)?,
    };
    let file = open_input(path)?;
    let roman = args.filter_roman.on();
    let keep = |w: &str| wanted.contains(w) && (!roman || is_roman_word(w));
    let reader = BufReader::with_capacity(1 << 20, file);
    let table = match format {
        EmbeddingFormat::Bin => EmbeddingTable::load_binary_filtered(reader, keep)?,
        EmbeddingFormat::Txt => EmbeddingTable::load_text_filtered(reader, keep)?,
    };
    info!(
        "loaded {} of {} needed word vectors (dimension {})",
        table.len(),
        wanted.len(),
        table.dimension()
    );
    Ok(Some(table))
}

fn detect_format(path: &Path) -> Result<EmbeddingFormat> {
    match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
        Some("bin") => Ok(EmbeddingFormat::Bin),
        Some("txt" | "vec" | "text") => Ok(EmbeddingFormat::Txt),
        _ => Err(Error::Config(format!(
            "cannot infer the embedding format of {}; pass --format bin|txt",
            path.display()
        ))),
    }
}
