//! `comogphog` command-line front end.

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use comogphog::eval::{self, EvalError, PairSelection, Polarity, ScoredPair};
use comogphog::featuredb::{self, FeatureStore, StoreError, MAGIC};
use comogphog::features::{extract_features_with, structure_image, FEATURE_LEN};
use comogphog::scoring;
use comogphog::structure::{read_pdb_file, LabelTable, MatchLevel};
use comogphog::Config;

const EXIT_IO: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_MISSING_LABELS: u8 = 3;
const EXIT_INCOMPLETE: u8 = 4;

#[derive(Parser, Debug)]
#[command(name = "comogphog", version, about = "Protein structure similarity from CA distance-matrix gradient features")]
struct Cli {
    /// TOML file overriding pipeline parameters
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Worker threads (0 = one per CPU)
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Extract features for every structure file in a directory
    Extract {
        dir: PathBuf,
        /// Output feature store
        #[arg(short, long)]
        out: PathBuf,
        /// Only keep structures listed in this sid,sccs table
        #[arg(long)]
        labels: Option<PathBuf>,
        /// Also export the store as CSV
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Write each normalized distance image as PGM into this directory
        #[arg(long)]
        pgm_dir: Option<PathBuf>,
    },
    /// Score two structure files
    Score { file_a: PathBuf, file_b: PathBuf },
    /// Rank the entries of a store by distance to a query structure
    Search {
        store: PathBuf,
        query: PathBuf,
        #[arg(long, default_value_t = 10)]
        k: usize,
    },
    /// Evaluate a store (or an id_a,id_b,score file) as a family classifier
    Evaluate {
        input: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        /// Required for score files; stores default to lower
        #[arg(long, value_enum)]
        polarity: Option<PolarityArg>,
        #[arg(long)]
        eval_bins: Option<usize>,
        #[arg(long, value_enum, default_value_t = LevelArg::Family)]
        level: LevelArg,
        /// Score a random subset of this many pairs instead of all of them
        #[arg(long)]
        sample: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum PolarityArg {
    Lower,
    Higher,
}

impl From<PolarityArg> for Polarity {
    fn from(p: PolarityArg) -> Self {
        match p {
            PolarityArg::Lower => Polarity::LowerIsSimilar,
            PolarityArg::Higher => Polarity::HigherIsSimilar,
        }
    }
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum LevelArg {
    Family,
    Superfamily,
}

impl From<LevelArg> for MatchLevel {
    fn from(l: LevelArg) -> Self {
        match l {
            LevelArg::Family => MatchLevel::Family,
            LevelArg::Superfamily => MatchLevel::Superfamily,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_IO)
        }
    }
}

fn load_config(path: Option<&Path>, eval_bins: Option<usize>) -> Result<Config> {
    let mut config = match path {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            toml::from_str(&text).with_context(|| format!("parsing {}", p.display()))?
        }
        None => Config::default(),
    };
    if let Some(bins) = eval_bins {
        config.eval_bins = bins;
    }
    config.validate()?;
    eprintln!("config: {config}");
    Ok(config)
}

fn run(cli: Cli) -> Result<u8> {
    if cli.jobs > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.jobs)
            .build_global()
            .context("configuring worker pool")?;
    }
    let eval_bins = match &cli.command {
        Command::Evaluate { eval_bins, .. } => *eval_bins,
        _ => None,
    };
    let config = match load_config(cli.config.as_deref(), eval_bins) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            return Ok(EXIT_USAGE);
        }
    };

    let uses_store = matches!(cli.command, Command::Extract { .. } | Command::Search { .. });
    if uses_store && config.feature_len() != FEATURE_LEN {
        eprintln!(
            "error: feature stores hold {FEATURE_LEN} values per entry, this configuration yields {}",
            config.feature_len()
        );
        return Ok(EXIT_USAGE);
    }

    match cli.command {
        Command::Extract { dir, out, labels, csv, pgm_dir } => {
            cmd_extract(&dir, &out, labels.as_deref(), csv.as_deref(), pgm_dir.as_deref(), &config, cli.jobs)
        }
        Command::Score { file_a, file_b } => cmd_score(&file_a, &file_b, &config),
        Command::Search { store, query, k } => cmd_search(&store, &query, k, &config),
        Command::Evaluate { input, labels, out_dir, polarity, level, sample, seed, .. } => {
            let selection = match sample {
                Some(count) => PairSelection::Sample { count, seed },
                None => PairSelection::All,
            };
            cmd_evaluate(&input, &labels, &out_dir, polarity.map(Into::into), level.into(), selection, &config)
        }
    }
}

fn cmd_extract(
    dir: &Path,
    out: &Path,
    labels: Option<&Path>,
    csv: Option<&Path>,
    pgm_dir: Option<&Path>,
    config: &Config,
    jobs: usize,
) -> Result<u8> {
    let labels = labels.map(LabelTable::read).transpose()?;
    let ingest = match featuredb::ingest_dir(dir, labels.as_ref(), config, jobs) {
        Ok(i) => i,
        Err(StoreError::EmptyCorpus(d)) => {
            eprintln!("error: no structure in {d} could be processed");
            return Ok(EXIT_USAGE);
        }
        Err(e) => return Err(e.into()),
    };
    for path in &ingest.added {
        eprintln!("ok      {}", path.display());
    }
    for skip in &ingest.skipped {
        eprintln!("skipped {}: {}", skip.path.display(), skip.reason);
    }
    ingest.store.save(out)?;
    if let Some(csv) = csv {
        let file = fs::File::create(csv).with_context(|| format!("creating {}", csv.display()))?;
        ingest.store.write_csv(BufWriter::new(file))?;
    }
    if let Some(pgm_dir) = pgm_dir {
        fs::create_dir_all(pgm_dir)?;
        for path in &ingest.added {
            let trace = read_pdb_file(path)?;
            let img = structure_image(&trace, config)?;
            let target = pgm_dir.join(format!("{}.pgm", trace.id()));
            img.write_pgm(BufWriter::new(fs::File::create(&target)?))?;
        }
    }
    eprintln!(
        "wrote {} entries to {} ({} skipped)",
        ingest.store.len(),
        out.display(),
        ingest.skipped.len()
    );
    Ok(0)
}

/// Formats with nine significant digits; zero prints as `0.000000000`.
fn nine_significant(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v:.9}");
    }
    let magnitude = v.abs().log10().floor() as i32;
    let decimals = (8 - magnitude).max(0) as usize;
    format!("{v:.decimals$}")
}

fn cmd_score(a: &Path, b: &Path, config: &Config) -> Result<u8> {
    let fa = extract_features_with(&read_pdb_file(a)?, config)?;
    let fb = extract_features_with(&read_pdb_file(b)?, config)?;
    println!("d= {}", nine_significant(scoring::score(&fa, &fb)?));
    Ok(0)
}

fn cmd_search(store: &Path, query: &Path, k: usize, config: &Config) -> Result<u8> {
    if k == 0 {
        eprintln!("error: --k must be at least 1");
        return Ok(EXIT_USAGE);
    }
    let store = FeatureStore::load(store)?;
    if store.is_empty() {
        eprintln!("error: store is empty");
        return Ok(EXIT_USAGE);
    }
    let q = extract_features_with(&read_pdb_file(query)?, config)?;
    let hits = scoring::search(store.entries(), &q, k)?;
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    for (rank, hit) in hits.iter().enumerate() {
        writeln!(out, "{},{},{}", rank + 1, hit.target_id, hit.distance)?;
    }
    out.flush()?;
    Ok(0)
}

fn is_store(path: &Path) -> Result<bool> {
    let mut head = [0u8; 4];
    let mut file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(io::Read::read(&mut file, &mut head)? == 4 && &head == MAGIC)
}

fn cmd_evaluate(
    input: &Path,
    labels: &Path,
    out_dir: &Path,
    polarity: Option<Polarity>,
    level: MatchLevel,
    selection: PairSelection,
    config: &Config,
) -> Result<u8> {
    let labels = LabelTable::read(labels)?;
    let (pairs, polarity) = if is_store(input)? {
        let store = FeatureStore::load(input)?;
        let polarity = polarity.unwrap_or(Polarity::LowerIsSimilar);
        match eval::score_corpus(store.entries(), &labels, level, selection) {
            Ok(p) => (p, polarity),
            Err(EvalError::MissingLabel(id)) => return missing_label(&id),
            Err(e) => return Err(e.into()),
        }
    } else {
        let Some(polarity) = polarity else {
            eprintln!("error: --polarity is required when evaluating a score file");
            return Ok(EXIT_USAGE);
        };
        let text = fs::read_to_string(input).with_context(|| format!("reading {}", input.display()))?;
        let rows = eval::parse_score_file(&text)?;
        match eval::label_pairs(&rows, &labels, level) {
            Ok(p) => (p, polarity),
            Err(EvalError::MissingLabel(id)) => return missing_label(&id),
            Err(e) => return Err(e.into()),
        }
    };
    if pairs.is_empty() {
        bail!("no pairs to evaluate");
    }
    eprintln!(
        "evaluating {} pairs ({} {} matches), polarity {polarity}",
        pairs.len(),
        pairs.iter().filter(|p| p.is_match).count(),
        level.name()
    );
    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    write_reports(&pairs, polarity, level, out_dir, config.eval_bins)
}

fn missing_label(id: &str) -> Result<u8> {
    eprintln!("error: no label for {id:?}");
    Ok(EXIT_MISSING_LABELS)
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<fs::File>> {
    let path = dir.join(name);
    let file = fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn write_reports(
    pairs: &[ScoredPair],
    polarity: Polarity,
    level: MatchLevel,
    out_dir: &Path,
    eval_bins: usize,
) -> Result<u8> {
    let mut code = 0;
    let mut diagnose = |what: &str, e: &EvalError| {
        eprintln!("warning: {what} not written: {e}");
        code = EXIT_INCOMPLETE;
    };

    match eval::pvalue_curve(pairs, polarity, eval_bins) {
        Ok(bins) => eval::write_pvalue_csv(create(out_dir, "pvalue.csv")?, &bins, level, polarity)?,
        Err(e) => diagnose("pvalue.csv", &e),
    }
    let thresholds = eval::threshold_grid(pairs, eval_bins);
    let curve = eval::mcc_curve(pairs, polarity, &thresholds)?;
    eval::write_mcc_csv(create(out_dir, "mcc.csv")?, &curve, level, polarity)?;
    match eval::roc_curve(pairs, polarity) {
        Ok(roc) => eval::write_roc_csv(create(out_dir, "roc.csv")?, &roc, level, polarity)?,
        Err(e) => diagnose("roc.csv", &e),
    }

    let summary = eval::summarize(pairs, polarity, &thresholds)?;
    let mut out = create(out_dir, "summary.txt")?;
    writeln!(out, "level: {}", level.name())?;
    writeln!(out, "polarity: {polarity}")?;
    writeln!(out, "pairs: {}", summary.pairs)?;
    writeln!(out, "matches: {}", summary.matches)?;
    match &summary.auc {
        Ok(a) => writeln!(out, "auc: {a:.6}")?,
        Err(e) => writeln!(out, "auc: NA ({e})")?,
    }
    writeln!(out, "peak_mcc: {:.6}", summary.peak.mcc)?;
    writeln!(out, "peak_threshold: {:.6}", summary.peak.threshold)?;
    match &summary.sensitivity_specificity {
        Ok((sens, spec)) => {
            writeln!(out, "sensitivity: {sens:.6}")?;
            writeln!(out, "specificity: {spec:.6}")?;
        }
        Err(e) => {
            writeln!(out, "sensitivity: NA ({e})")?;
            writeln!(out, "specificity: NA ({e})")?;
        }
    }
    out.flush()?;
    Ok(code)
}
