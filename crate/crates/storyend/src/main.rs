use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};

use storyend::backends::GenerationRecord;
use storyend::corpus::{
    dump_csv, fingerprint, load_csv, load_many, split_corpus, training_text, SplitSpec,
};
use storyend::harness::{
    build_report, load_jsonl, load_manifest, render, run_evaluation, run_generation,
    EvaluationOptions, FailureRecord, GenerationOptions, JsonlWriter, ReportFormat, RunConfig,
    RunPaths, ScoreRecord,
};
use storyend::humaneval::{
    build_sessions, latest_ratings, mean_by_backend, RatingDimensions, RatingRecord,
    RatingSession, DIMENSION_NAMES,
};
use storyend::metrics::TokenizerConfig;
use storyend::ngram::{CharNgramModel, WordNgramLm};

#[derive(Parser)]
#[command(
    name = "storyend",
    version,
    about = "Generate candidate story endings and score them against the originals"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Merge raw CSV files into one cleaned, deduplicated corpus.
    Ingest {
        /// Input CSV file; repeat for several.
        #[arg(long, required = true)]
        input: Vec<PathBuf>,
        #[arg(long)]
        output: PathBuf,
    },
    /// Split a corpus into train and test files.
    Split {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value_t = 0.8)]
        train_fraction: f64,
        #[arg(long, default_value_t = 13)]
        seed: u64,
        #[arg(long)]
        train_out: PathBuf,
        #[arg(long)]
        test_out: PathBuf,
    },
    /// Fit an n-gram language model on a corpus and save it.
    FitNgram {
        #[arg(long)]
        corpus: PathBuf,
        /// "char" for a character model, "word" for a smoothed word model.
        #[arg(long, default_value = "char")]
        kind: String,
        #[arg(long, default_value_t = 10)]
        order: usize,
        /// Additive smoothing weight; word models only.
        #[arg(long, default_value_t = 0.1)]
        alpha: f64,
        #[arg(long)]
        output: PathBuf,
    },
    /// Generate candidate endings for the test split of a run.
    Generate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        run_dir: PathBuf,
        /// Stop after this many new records; the next invocation resumes.
        #[arg(long)]
        limit: Option<usize>,
        /// Stamp records with this Unix time instead of the wall clock.
        #[arg(long)]
        fixed_timestamp: Option<u64>,
    },
    /// Score every generated ending against its story's original ending.
    Evaluate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        run_dir: PathBuf,
        #[arg(long)]
        fixed_timestamp: Option<u64>,
    },
    /// Rate one blinded session from the terminal.
    Rate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        run_dir: PathBuf,
        #[arg(long)]
        judge: String,
        /// Session index to rate.
        #[arg(long, default_value_t = 0)]
        session: usize,
        /// Maximum items per session when sessions are first built.
        #[arg(long, default_value_t = storyend::humaneval::DEFAULT_SESSION_QUOTA)]
        quota: usize,
        /// Shuffle seed used when sessions are first built.
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Print aggregated per-backend results.
    Report {
        #[arg(long)]
        run_dir: PathBuf,
        /// table, csv, or json.
        #[arg(long, default_value = "table")]
        format: ReportFormat,
        /// Write here instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn main() -> anyhow::Result<()> {
    match Cli::parse().command {
        Command::Ingest { input, output } => ingest(input, output),
        Command::Split {
            corpus,
            train_fraction,
            seed,
            train_out,
            test_out,
        } => split(corpus, train_fraction, seed, train_out, test_out),
        Command::FitNgram {
            corpus,
            kind,
            order,
            alpha,
            output,
        } => fit_ngram(corpus, kind, order, alpha, output),
        Command::Generate {
            config,
            run_dir,
            limit,
            fixed_timestamp,
        } => {
            let config = RunConfig::load(config)?;
            let stats = run_generation(
                &config,
                &run_dir,
                &GenerationOptions {
                    limit,
                    fixed_timestamp,
                },
            )?;
            for d in &stats.diagnostics {
                eprintln!("corpus: {d}");
            }
            println!(
                "generated {} endings ({} already present, {} failed)",
                stats.generated, stats.skipped, stats.failed
            );
            Ok(())
        }
        Command::Evaluate {
            config,
            run_dir,
            fixed_timestamp,
        } => {
            let config = RunConfig::load(config)?;
            let stats = run_evaluation(&config, &run_dir, &EvaluationOptions { fixed_timestamp })?;
            for d in &stats.diagnostics {
                eprintln!("evaluate: {d}");
            }
            println!("scored {} records ({} skipped)", stats.scored, stats.skipped);
            Ok(())
        }
        Command::Rate {
            config,
            run_dir,
            judge,
            session,
            quota,
            seed,
        } => rate(config, run_dir, judge, session, quota, seed),
        Command::Report {
            run_dir,
            format,
            output,
        } => report(run_dir, format, output),
    }
}

fn ingest(input: Vec<PathBuf>, output: PathBuf) -> anyhow::Result<()> {
    let (corpus, diagnostics) = load_many(&input)?;
    for d in &diagnostics {
        eprintln!("{d}");
    }
    dump_csv(&corpus, &output)?;
    println!(
        "ingested {} stories ({} rows rejected) -> {}",
        corpus.len(),
        diagnostics.len(),
        output.display()
    );
    println!("fingerprint {}", fingerprint(&corpus));
    Ok(())
}

fn split(
    corpus: PathBuf,
    train_fraction: f64,
    seed: u64,
    train_out: PathBuf,
    test_out: PathBuf,
) -> anyhow::Result<()> {
    let outcome = load_csv(&corpus)?;
    for d in &outcome.diagnostics {
        eprintln!("{d}");
    }
    let spec = SplitSpec {
        train_fraction,
        seed,
    };
    let (train, test) = split_corpus(&outcome.corpus, &spec)?;
    dump_csv(&train, &train_out)?;
    dump_csv(&test, &test_out)?;
    println!(
        "train {} stories -> {}",
        train.len(),
        train_out.display()
    );
    println!("test {} stories -> {}", test.len(), test_out.display());
    Ok(())
}

fn fit_ngram(
    corpus: PathBuf,
    kind: String,
    order: usize,
    alpha: f64,
    output: PathBuf,
) -> anyhow::Result<()> {
    let outcome = load_csv(&corpus)?;
    for d in &outcome.diagnostics {
        eprintln!("{d}");
    }
    let texts: Vec<String> = outcome
        .corpus
        .stories
        .iter()
        .map(|s| training_text(s, " "))
        .collect();
    match kind.as_str() {
        "char" => {
            let model = CharNgramModel::fit(&texts, order)?;
            model.save(&output)?;
            println!(
                "fitted char {order}-gram on {} stories -> {}",
                texts.len(),
                output.display()
            );
        }
        "word" => {
            let model = WordNgramLm::fit(&texts, order, alpha, TokenizerConfig::default())?;
            model.save(&output)?;
            println!(
                "fitted word {order}-gram (alpha {alpha}) on {} stories -> {}",
                texts.len(),
                output.display()
            );
        }
        other => bail!("unknown model kind {other:?}; expected char or word"),
    }
    Ok(())
}

fn report(run_dir: PathBuf, format: ReportFormat, output: Option<PathBuf>) -> anyhow::Result<()> {
    let paths = RunPaths::new(&run_dir);
    let manifest = load_manifest(&paths)?;
    let scores: Vec<ScoreRecord> = load_jsonl(&paths.scores())?;
    let failures: Vec<FailureRecord> = load_jsonl(&paths.failures())?;
    let ratings: Vec<RatingRecord> = load_jsonl(&paths.ratings())?;
    let human = mean_by_backend(&ratings);
    let text = render(&build_report(&manifest, &scores, &failures, &human), format);
    match output {
        Some(path) => {
            std::fs::write(&path, &text).with_context(|| format!("writing {}", path.display()))?;
            println!("report -> {}", path.display());
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn rate(
    config: PathBuf,
    run_dir: PathBuf,
    judge: String,
    session_ix: usize,
    quota: usize,
    seed: u64,
) -> anyhow::Result<()> {
    let config = RunConfig::load(config)?;
    let paths = RunPaths::new(&run_dir);
    load_manifest(&paths)?;
    let records: Vec<GenerationRecord> = load_jsonl(&paths.records())?;

    let sessions_dir = paths.sessions_dir();
    if !sessions_dir.exists() {
        let outcome = load_csv(&config.corpus.path)?;
        let (sessions, diagnostics) = build_sessions(&records, &outcome.corpus, quota, seed)?;
        for d in &diagnostics {
            eprintln!("sessions: {d}");
        }
        std::fs::create_dir_all(&sessions_dir)?;
        for session in &sessions {
            let mut text = serde_json::to_string_pretty(session)?;
            text.push('\n');
            std::fs::write(sessions_dir.join(format!("{}.json", session.session_id)), text)?;
        }
        println!("built {} blinded sessions in {}", sessions.len(), sessions_dir.display());
    }

    let session_path = sessions_dir.join(format!("session-{session_ix:03}.json"));
    let session: RatingSession = serde_json::from_str(
        &std::fs::read_to_string(&session_path)
            .with_context(|| format!("no session file {}", session_path.display()))?,
    )?;

    // judges only see item ids; records resolve them back to identities
    let resolver: HashMap<String, (&str, &str)> = records
        .iter()
        .map(|r| {
            (
                storyend::humaneval::item_id(&r.story_id, &r.backend_id),
                (r.story_id.as_str(), r.backend_id.as_str()),
            )
        })
        .collect();

    let existing: Vec<RatingRecord> = load_jsonl(&paths.ratings())?;
    let already: std::collections::HashSet<(String, String)> = latest_ratings(&existing)
        .into_iter()
        .map(|r| (r.item_id.clone(), r.judge.clone()))
        .collect();

    let mut writer = JsonlWriter::open(paths.ratings())?;
    let stdin = std::io::stdin();
    let mut input = stdin.lock();
    let stdout = std::io::stdout();
    let mut output = stdout.lock();
    let rated = rate_session(
        &session,
        &resolver,
        &already,
        &judge,
        &mut writer,
        &mut input,
        &mut output,
    )?;
    println!("recorded {rated} ratings from {judge} for {}", session.session_id);
    Ok(())
}

/// Prompts for the five dimensions of every not-yet-rated item, appending
/// a rating record per completed item. Returns the number recorded; the
/// loop ends early and cleanly when input runs out.
fn rate_session(
    session: &RatingSession,
    resolver: &HashMap<String, (&str, &str)>,
    already: &std::collections::HashSet<(String, String)>,
    judge: &str,
    writer: &mut JsonlWriter,
    input: &mut dyn BufRead,
    output: &mut dyn Write,
) -> anyhow::Result<usize> {
    let total = session.items.len();
    let mut rated = 0usize;
    for (ix, item) in session.items.iter().enumerate() {
        if already.contains(&(item.item_id.clone(), judge.to_string())) {
            continue;
        }
        let Some(&(story_id, backend_id)) = resolver.get(&item.item_id) else {
            writeln!(output, "item {} has no matching record; skipped", item.item_id)?;
            continue;
        };
        writeln!(output, "\n[{}/{}] item {}", ix + 1, total, item.item_id)?;
        writeln!(output, "story: {}", item.body)?;
        writeln!(output, "ending: {}", item.ending)?;

        let mut values = [0i64; 5];
        let mut aborted = false;
        for (slot, dimension) in values.iter_mut().zip(DIMENSION_NAMES) {
            loop {
                write!(output, "{dimension} (1-5): ")?;
                output.flush()?;
                let mut line = String::new();
                if input.read_line(&mut line)? == 0 {
                    aborted = true;
                    break;
                }
                match line.trim().parse::<i64>() {
                    Ok(v) if (1..=5).contains(&v) => {
                        *slot = v;
                        break;
                    }
                    Ok(v) => {
                        writeln!(output, "{v} is out of range; each rating is an integer from 1 to 5")?;
                    }
                    Err(_) => {
                        writeln!(output, "{:?} is not a number; each rating is an integer from 1 to 5", line.trim())?;
                    }
                }
            }
            if aborted {
                break;
            }
        }
        if aborted {
            writeln!(output, "\ninput ended; stopping after {rated} ratings")?;
            break;
        }

        let dimensions = RatingDimensions::new(values)?;
        let record = RatingRecord::new(
            story_id,
            backend_id,
            judge,
            dimensions,
            std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        );
        writeln!(output, "recorded {:.1}", record.overall)?;
        writer.append(&record)?;
        rated += 1;
    }
    Ok(rated)
}
