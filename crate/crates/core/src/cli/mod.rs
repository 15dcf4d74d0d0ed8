//! The `bondchain` command line.
//!
//! Exit codes: 0 success, 1 usage error (bad flags, missing or unknown
//! inputs, bad config), 2 data error (unparseable or inconsistent data).

pub mod config;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::corpus::{corpus_stats, parse_column_file, write_column_file, Document, Sentence};
use crate::eval::{evaluate, render_report, render_summary};
use crate::lexicon::{load_lexicon, mask, EntityMatch, Lexicon};
use crate::model::train::masked_training_tags;
use crate::model::{load_checkpoint, predict, save_checkpoint, train};
use crate::pipeline::{
    extract_chains, extract_table_facts, read_table, render_chains, TableDoc,
};
use crate::tagscheme::{AnnotatedSentence, Strictness};

pub use config::{load_config, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "bondchain", version, about = "Extract pKa data chains from text and tables")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Input file; repeat for several
    #[arg(long)]
    input: Vec<PathBuf>,
    /// Output file (standard output when absent)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Lexicon file or directory; repeat for several
    #[arg(long)]
    lexicon: Vec<PathBuf>,
    /// `key = value` file; flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct Hyper {
    /// Decoder [default: crf]
    #[arg(long, value_parser = ["softmax", "crf"])]
    mode: Option<String>,
    /// Seed for initialisation and shuffling [default: 7]
    #[arg(long)]
    seed: Option<u64>,
    /// Learning rate [default: 0.05]
    #[arg(long)]
    lr: Option<f64>,
    /// Epochs [default: 30]
    #[arg(long)]
    epochs: Option<usize>,
    /// Sentences per batch [default: 8]
    #[arg(long)]
    batch: Option<usize>,
    /// L2 penalty on weight matrices [default: 0.0001]
    #[arg(long)]
    l2: Option<f64>,
    /// Momentum [default: 0.9]
    #[arg(long)]
    momentum: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Entity, token, sentence and document counts of column files
    Stats(Common),
    /// Collapse lexicon matches to $CMP$ / $BOND$; writes <out>.align too
    Mask(Common),
    /// Train a tagger; writes the checkpoint and <out>.log
    Train {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        hyper: Hyper,
        /// Development column file scored after every epoch
        #[arg(long)]
        dev: Option<PathBuf>,
    },
    /// Tag column files with a trained model
    Tag {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        model: Option<PathBuf>,
        /// Worker threads (all cores when absent)
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Score predicted against gold column files
    Eval {
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        pred: PathBuf,
        /// Summary file of key=value lines
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Extract chains from CSV/TSV tables
    Tables(Common),
    /// Assemble and merge chains from text and tables
    Chains {
        #[command(flatten)]
        common: Common,
        /// Column file; gold tags are used unless --model is given
        #[arg(long)]
        text: Option<PathBuf>,
        /// Table file; repeat for several
        #[arg(long)]
        tables: Vec<PathBuf>,
        #[arg(long)]
        model: Option<PathBuf>,
    },
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Data(String),
}

fn data(e: impl std::fmt::Display) -> Failure {
    Failure::Data(e.to_string())
}

type Outcome = Result<(), Failure>;

fn resolve(common: &Common) -> Result<RunConfig, Failure> {
    let mut cfg = match &common.config {
        Some(p) => load_config(p).map_err(Failure::Usage)?,
        None => RunConfig::default(),
    };
    if !common.input.is_empty() {
        cfg.input = common.input.clone();
    }
    if common.out.is_some() {
        cfg.out = common.out.clone();
    }
    if !common.lexicon.is_empty() {
        cfg.lexicon = common.lexicon.clone();
    }
    Ok(cfg)
}

fn apply_hyper(cfg: &mut RunConfig, h: &Hyper) -> Result<(), Failure> {
    let pairs = [
        ("mode", h.mode.clone()),
        ("seed", h.seed.map(|v| v.to_string())),
        ("lr", h.lr.map(|v| v.to_string())),
        ("epochs", h.epochs.map(|v| v.to_string())),
        ("batch", h.batch.map(|v| v.to_string())),
        ("l2", h.l2.map(|v| v.to_string())),
        ("momentum", h.momentum.map(|v| v.to_string())),
    ];
    for (k, v) in pairs {
        if let Some(v) = v {
            cfg.train.set(k, &v).map_err(|e| Failure::Usage(e.to_string()))?;
        }
    }
    cfg.train
        .validate()
        .map_err(|e| Failure::Usage(e.to_string()))
}

fn require_existing<'a>(paths: impl IntoIterator<Item = &'a PathBuf>) -> Outcome {
    for p in paths {
        if !p.exists() {
            return Err(Failure::Usage(format!("{}: no such file or directory", p.display())));
        }
    }
    Ok(())
}

fn need_input(cfg: &RunConfig) -> Outcome {
    if cfg.input.is_empty() {
        return Err(Failure::Usage("--input is required".into()));
    }
    require_existing(&cfg.input)
}

fn lexicon(cfg: &RunConfig) -> Result<Lexicon, Failure> {
    if cfg.lexicon.is_empty() {
        return Ok(Lexicon::empty());
    }
    require_existing(&cfg.lexicon)?;
    load_lexicon(&cfg.lexicon).map_err(data)
}

fn read_text(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

fn read_docs(paths: &[PathBuf], mode: Strictness) -> Result<Vec<Document>, Failure> {
    let mut docs = Vec::new();
    for p in paths {
        let parsed = parse_column_file(&read_text(p)?, mode)
            .map_err(|e| Failure::Data(format!("{}: {e}", p.display())))?;
        docs.extend(parsed);
    }
    Ok(docs)
}

/// Writes through a temporary file in the target directory and renames it
/// into place, so failures never leave partial output.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

fn emit(out: Option<&Path>, text: &str, stdout: &mut dyn Write) -> Outcome {
    match out {
        Some(p) => write_atomic(p, text.as_bytes()).map_err(|e| Failure::Data(format!("{}: {e}", p.display()))),
        None => stdout.write_all(text.as_bytes()).map_err(data),
    }
}

fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn stats(common: &Common, stdout: &mut dyn Write) -> Outcome {
    let cfg = resolve(common)?;
    need_input(&cfg)?;
    let docs = read_docs(&cfg.input, Strictness::Lenient)?;
    emit(cfg.out.as_deref(), &corpus_stats(&docs).to_string(), stdout)
}

fn mask_cmd(common: &Common, stdout: &mut dyn Write) -> Outcome {
    let cfg = resolve(common)?;
    need_input(&cfg)?;
    let lex = lexicon(&cfg)?;
    let docs = read_docs(&cfg.input, Strictness::Lenient)?;
    let mut align = String::new();
    let mut masked_docs = Vec::with_capacity(docs.len());
    let mut sentence_idx = 0;
    for doc in &docs {
        let mut sentences = Vec::with_capacity(doc.sentences.len());
        for s in &doc.sentences {
            let matches: Vec<EntityMatch> = lex
                .match_entities(&s.tokens)
                .into_iter()
                .filter(|m| matches!(m.entity, crate::corpus::EntityType::Compound | crate::corpus::EntityType::Bond))
                .collect();
            let m = mask(&s.tokens, &matches).map_err(data)?;
            for a in &m.alignment {
                let _ = writeln!(
                    align,
                    "{sentence_idx}\t{}\t{}\t{}\t{}",
                    a.masked_index,
                    a.start,
                    a.end,
                    crate::corpus::join_tokens(&s.tokens[a.start..a.end])
                );
            }
            let (tokens, tags) = masked_training_tags(&lex, s).map_err(data)?;
            let annotated = AnnotatedSentence::from_tags(tokens, tags, Strictness::Lenient).map_err(data)?;
            sentences.push(annotated.to_sentence());
            sentence_idx += 1;
        }
        masked_docs.push(Document::new(doc.id.clone(), sentences));
    }
    let text = write_column_file(&masked_docs);
    match cfg.out.as_deref() {
        Some(out) => {
            emit(Some(out), &text, stdout)?;
            emit(Some(&sidecar(out, ".align")), &align, stdout)
        }
        None => emit(None, &text, stdout),
    }
}

fn train_cmd(common: &Common, hyper: &Hyper, dev: &Option<PathBuf>, stderr: &mut dyn Write) -> Outcome {
    let mut cfg = resolve(common)?;
    if dev.is_some() {
        cfg.dev = dev.clone();
    }
    apply_hyper(&mut cfg, hyper)?;
    need_input(&cfg)?;
    let out = cfg
        .out
        .clone()
        .ok_or_else(|| Failure::Usage("--out is required for train".into()))?;
    require_existing(cfg.dev.iter())?;
    let lex = lexicon(&cfg)?;
    let docs = read_docs(&cfg.input, Strictness::Lenient)?;
    let dev_docs = match &cfg.dev {
        Some(p) => Some(read_docs(std::slice::from_ref(p), Strictness::Lenient)?),
        None => None,
    };
    let outcome = train(&docs, dev_docs.as_deref(), &lex, &cfg.train).map_err(data)?;
    let log = outcome.log();
    let _ = stderr.write_all(log.as_bytes());
    save_checkpoint(&outcome.checkpoint, &out).map_err(data)?;
    emit(Some(&sidecar(&out, ".log")), &log, stderr)
}

fn tag_cmd(common: &Common, model: &Option<PathBuf>, threads: Option<usize>, stdout: &mut dyn Write) -> Outcome {
    let mut cfg = resolve(common)?;
    if model.is_some() {
        cfg.model = model.clone();
    }
    need_input(&cfg)?;
    let model_path = cfg
        .model
        .clone()
        .ok_or_else(|| Failure::Usage("--model is required for tag".into()))?;
    require_existing([&model_path])?;
    let lex = lexicon(&cfg)?;
    let checkpoint = load_checkpoint(&model_path).map_err(data)?;
    let docs = read_docs(&cfg.input, Strictness::Lenient)?;
    let sentences: Vec<_> = docs
        .iter()
        .flat_map(|d| d.sentences.iter().map(|s| s.tokens.clone()))
        .collect();
    let run = || predict(&checkpoint, &lex, &sentences);
    let tagged = match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(data)?
            .install(run),
        None => run(),
    }
    .map_err(data)?;
    let mut tagged = tagged.into_iter();
    let out_docs: Vec<Document> = docs
        .iter()
        .map(|d| {
            let sentences: Vec<Sentence> = (&mut tagged)
                .take(d.sentences.len())
                .map(|a| a.to_sentence())
                .collect();
            Document::new(d.id.clone(), sentences)
        })
        .collect();
    emit(cfg.out.as_deref(), &write_column_file(&out_docs), stdout)
}

fn annotated(docs: &[Document]) -> Result<Vec<AnnotatedSentence>, Failure> {
    docs.iter()
        .flat_map(|d| &d.sentences)
        .map(|s| AnnotatedSentence::from_sentence(s).map_err(data))
        .collect()
}

fn eval_cmd(gold: &Path, pred: &Path, out: Option<&Path>, stdout: &mut dyn Write) -> Outcome {
    require_existing([&gold.to_path_buf(), &pred.to_path_buf()])?;
    let g = annotated(&read_docs(&[gold.to_path_buf()], Strictness::Lenient)?)?;
    let p = annotated(&read_docs(&[pred.to_path_buf()], Strictness::Lenient)?)?;
    let report = evaluate(&g, &p).map_err(data)?;
    emit(None, &render_report(&report), stdout)?;
    if let Some(path) = out {
        emit(Some(path), &render_summary(&report), stdout)?;
    }
    Ok(())
}

fn read_tables(paths: &[PathBuf]) -> Result<Vec<TableDoc>, Failure> {
    require_existing(paths)?;
    paths.iter().map(|p| read_table(p).map_err(data)).collect()
}

fn tables_cmd(common: &Common, stdout: &mut dyn Write) -> Outcome {
    let cfg = resolve(common)?;
    need_input(&cfg)?;
    let lex = lexicon(&cfg)?;
    let mut chains = Vec::new();
    for t in read_tables(&cfg.input)? {
        chains.extend(extract_table_facts(&t, &lex).map_err(data)?);
    }
    emit(cfg.out.as_deref(), &render_chains(&chains), stdout)
}

fn chains_cmd(
    common: &Common,
    text: &Option<PathBuf>,
    tables: &[PathBuf],
    model: &Option<PathBuf>,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Outcome {
    let mut cfg = resolve(common)?;
    if model.is_some() {
        cfg.model = model.clone();
    }
    if !tables.is_empty() {
        cfg.tables = tables.to_vec();
    }
    if let Some(t) = text {
        cfg.input = vec![t.clone()];
    }
    if cfg.input.is_empty() && cfg.tables.is_empty() {
        return Err(Failure::Usage("give --text and/or --tables".into()));
    }
    require_existing(cfg.input.iter().chain(&cfg.tables).chain(cfg.model.iter()))?;
    let lex = lexicon(&cfg)?;
    let docs = read_docs(&cfg.input, Strictness::Lenient)?;
    let tables = read_tables(&cfg.tables)?;
    let checkpoint = match &cfg.model {
        Some(p) => Some(load_checkpoint(p).map_err(data)?),
        None => None,
    };

    let mut records = Vec::new();
    let mut used = vec![false; tables.len()];
    for doc in &docs {
        let sentences = match &checkpoint {
            Some(m) => {
                let tokens: Vec<_> = doc.sentences.iter().map(|s| s.tokens.clone()).collect();
                predict(m, &lex, &tokens).map_err(data)?
            }
            None => annotated(std::slice::from_ref(doc))?,
        };
        let mine: Vec<TableDoc> = tables
            .iter()
            .enumerate()
            .filter(|(_, t)| t.id == doc.id)
            .map(|(i, t)| {
                used[i] = true;
                t.clone()
            })
            .collect();
        let (merged, diagnostics) = extract_chains(&doc.id, &sentences, &mine, &lex).map_err(data)?;
        for line in diagnostics.iter().chain(&merged.log) {
            let _ = writeln!(stderr, "{line}");
        }
        records.extend(merged.chains);
    }
    for (t, _) in tables.iter().zip(&used).filter(|(_, u)| !**u) {
        let (merged, _) = extract_chains(&t.id, &[], std::slice::from_ref(t), &lex).map_err(data)?;
        for line in &merged.log {
            let _ = writeln!(stderr, "{line}");
        }
        records.extend(merged.chains);
    }
    emit(cfg.out.as_deref(), &render_chains(&records), stdout)
}

/// Parses `args` (program name first) and runs the subcommand, returning
/// the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let rendered = e.render().to_string();
            return if e.use_stderr() {
                let _ = stderr.write_all(rendered.as_bytes());
                1
            } else {
                let _ = stdout.write_all(rendered.as_bytes());
                0
            };
        }
    };
    let result = match &cli.command {
        Command::Stats(c) => stats(c, stdout),
        Command::Mask(c) => mask_cmd(c, stdout),
        Command::Train { common, hyper, dev } => train_cmd(common, hyper, dev, stderr),
        Command::Tag {
            common,
            model,
            threads,
        } => tag_cmd(common, model, *threads, stdout),
        Command::Eval { gold, pred, out } => eval_cmd(gold, pred, out.as_deref(), stdout),
        Command::Tables(c) => tables_cmd(c, stdout),
        Command::Chains {
            common,
            text,
            tables,
            model,
        } => chains_cmd(common, text, tables, model, stdout, stderr),
    };
    match result {
        Ok(()) => 0,
        Err(Failure::Usage(m)) => {
            let _ = writeln!(stderr, "error: {m}\n\nRun with --help for usage.");
            1
        }
        Err(Failure::Data(m)) => {
            let _ = writeln!(stderr, "error: {m}");
            2
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> (i32, String, String) {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run(std::iter::once("bondchain").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(run_args(&["frobnicate"]).0, 1);
        assert_eq!(run_args(&["stats"]).0, 1);
        assert_eq!(run_args(&["stats", "--input", "/nonexistent/x.conll"]).0, 1);
        let (code, out, _) = run_args(&["--help"]);
        assert_eq!(code, 0);
        assert!(out.contains("chains"));
    }

    #[test]
    fn flag_overrides_config() {
        let dir = tempfile::tempdir().unwrap();
        let cfg_path = dir.path().join("run.cfg");
        std::fs::write(&cfg_path, "lr = 0.1\n").unwrap();
        let mut cfg = load_config(&cfg_path).unwrap();
        let hyper = Hyper {
            mode: None,
            seed: None,
            lr: Some(0.2),
            epochs: None,
            batch: None,
            l2: None,
            momentum: None,
        };
        apply_hyper(&mut cfg, &hyper).unwrap();
        assert_eq!(cfg.train.learning_rate, 0.2);
        assert_eq!(crate::model::DecoderMode::Crf, cfg.train.mode);
    }

    #[test]
    fn sidecar_names() {
        assert_eq!(sidecar(Path::new("a/m.bcn"), ".log"), PathBuf::from("a/m.bcn.log"));
    }
}
