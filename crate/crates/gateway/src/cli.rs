//! Operator commands. Each writes its report to the given sink so the
//! binary and the tests share one code path.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use taskbot::catalog::{load_catalog, load_suggestions, sample_catalog, Task};
use taskbot::corpus::{
    boost_transitions, generate_corpus, make_negative, serialize_prompt, write_jsonl, CorpusConfig, CorpusProviders,
    DialogueOptions, PolicyGraph, PromptConfig, PromptFormat, UtteranceBank,
};
use taskbot::dialogue::{FsSessionStore, MemorySessionStore, Session, SessionStore};
use taskbot::engine::{Engine, TurnInput};
use taskbot::intent::{Intent, IntentConfig, IntentDetector};
use taskbot::response::{HttpGenerator, ToneOfVoice};
use taskbot::simulation::{
    extract_features, predict_rating, replay, simulate_many, synthetic_rating_dataset, train_rating, SimPolicy,
    SimTranscript,
};
use taskbot::video::VideoIndex;
use taskbot::{DefaultCatalogIndex, DefaultEngine, DefaultRatingModel, DefaultVideoIndex};

use crate::api::{router, AppState};

#[derive(Debug, Parser)]
#[command(name = "taskbot", about = "Task assistant service and tools", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the HTTP API.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Session snapshot directory; sessions live in memory when unset.
        #[arg(long)]
        sessions: Option<PathBuf>,
        #[command(flatten)]
        engine: EngineArgs,
    },
    /// Terminal conversation against an embedded engine. Prefix a line with
    /// `tap:` to send a tap.
    Chat {
        #[command(flatten)]
        engine: EngineArgs,
    },
    /// Generate a synthetic dialogue corpus.
    CorpusGen {
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Fixed tone; drawn per dialogue when unset.
        #[arg(long)]
        tone: Option<ToneOfVoice>,
        #[arg(long, default_value = "instruct_block", value_parser = parse_format)]
        format: PromptFormat,
        /// Train/valid/test fractions.
        #[arg(long, default_value = "0.8,0.1,0.1", value_parser = parse_split)]
        split: [f64; 3],
        /// JSON list of {"from", "to", "factor"} transition boosts.
        #[arg(long)]
        policy_overrides: Option<PathBuf>,
        #[arg(long)]
        catalog: Option<PathBuf>,
        #[arg(long, default_value = "corpus")]
        out: PathBuf,
    },
    /// Run simulated users; writes one transcript per seed.
    Simulate {
        /// Half-open seed range `a..b`.
        #[arg(long, value_parser = parse_range)]
        seeds: (u64, u64),
        #[arg(long, default_value_t = 30)]
        max_turns: usize,
        #[arg(long)]
        policy: Option<PathBuf>,
        #[arg(long, default_value = "transcripts")]
        out: PathBuf,
        #[command(flatten)]
        engine: EngineArgs,
    },
    /// Replay a transcript and print the diff report. Exits non-zero on divergence.
    Replay {
        #[arg(long = "in")]
        input: PathBuf,
        #[command(flatten)]
        engine: EngineArgs,
    },
    /// Predict the rating of a transcript.
    Rate {
        #[arg(long)]
        transcript: PathBuf,
        /// Trained model; one is fitted on synthetic data when unset.
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        save_model: Option<PathBuf>,
    },
    /// Build a keyframe index and print per-video frame counts.
    VideoIndex {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Top moment of one video for a question.
    VideoQuery {
        #[arg(long)]
        video_id: String,
        #[arg(long)]
        q: String,
        /// Frame file; the shipped frames when unset.
        #[arg(long)]
        frames: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Default, Args)]
pub struct EngineArgs {
    /// Catalog JSON-lines file; the shipped catalog when unset.
    #[arg(long)]
    pub catalog: Option<PathBuf>,
    #[arg(long)]
    pub suggestions: Option<PathBuf>,
    #[arg(long)]
    pub intent_config: Option<PathBuf>,
    /// Video frame file; the shipped frames when unset.
    #[arg(long)]
    pub frames: Option<PathBuf>,
    /// Completion endpoint for generated text.
    #[arg(long)]
    pub generator_url: Option<String>,
}

fn parse_format(s: &str) -> Result<PromptFormat, String> {
    serde_json::from_value(serde_json::Value::String(s.replace('-', "_")))
        .map_err(|_| format!("unknown format {s:?}; expected instruct_block or turn_tagged"))
}

fn parse_split(s: &str) -> Result<[f64; 3], String> {
    let parts: Vec<f64> =
        s.split(',').map(|p| p.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|e| e.to_string())?;
    <[f64; 3]>::try_from(parts).map_err(|_| "expected three comma-separated fractions".to_string())
}

fn parse_range(s: &str) -> Result<(u64, u64), String> {
    let (a, b) = s.split_once("..").ok_or("expected a..b")?;
    let a: u64 = a.trim().parse().map_err(|e| format!("{e}"))?;
    let b: u64 = b.trim().parse().map_err(|e| format!("{e}"))?;
    if a >= b {
        return Err(format!("empty range {a}..{b}"));
    }
    Ok((a, b))
}

fn catalog_tasks(path: Option<&Path>) -> Result<Vec<Task>> {
    match path {
        Some(p) => load_catalog(p).with_context(|| format!("loading catalog {}", p.display())),
        None => Ok(sample_catalog()),
    }
}

fn frames(path: Option<&Path>) -> Result<DefaultVideoIndex> {
    let records = match path {
        Some(p) => VideoIndex::load_jsonl(p).with_context(|| format!("loading frames {}", p.display()))?,
        None => VideoIndex::shipped_frames(),
    };
    Ok(VideoIndex::build(records)?)
}

pub fn build_engine(args: &EngineArgs) -> Result<DefaultEngine> {
    let catalog = DefaultCatalogIndex::build(catalog_tasks(args.catalog.as_deref())?)?;
    let mut engine = Engine::new(Arc::new(catalog)).with_video(Arc::new(frames(args.frames.as_deref())?));
    if let Some(p) = &args.intent_config {
        let config = IntentConfig::load(p).with_context(|| format!("loading intent config {}", p.display()))?;
        engine = engine.with_detector(IntentDetector::from_config(&config)?);
    }
    if let Some(p) = &args.suggestions {
        engine = engine.with_suggestions(load_suggestions(p)?);
    }
    if let Some(url) = &args.generator_url {
        engine = engine.with_generator(Arc::new(HttpGenerator::new(url.clone())));
    }
    Ok(engine)
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Serve { port, host, sessions, engine } => serve(&host, port, sessions.as_deref(), &engine, out),
        Command::Chat { engine } => {
            let engine = build_engine(&engine)?;
            chat(&engine, std::io::stdin().lock(), out)
        }
        Command::CorpusGen { n, seed, tone, format, split, policy_overrides, catalog, out: dir } => {
            let opts = CorpusGenOptions { n, seed, tone, format, split, policy_overrides, catalog, out: dir };
            corpus_gen(&opts, out)
        }
        Command::Simulate { seeds, max_turns, policy, out: dir, engine } => {
            simulate_cmd(&build_engine(&engine)?, seeds, max_turns, policy.as_deref(), &dir, out)
        }
        Command::Replay { input, engine } => replay_cmd(&build_engine(&engine)?, &input, out),
        Command::Rate { transcript, model, save_model } => {
            rate_cmd(&transcript, model.as_deref(), save_model.as_deref(), out)
        }
        Command::VideoIndex { input } => video_index_cmd(&input, out),
        Command::VideoQuery { video_id, q, frames: f } => video_query_cmd(f.as_deref(), &video_id, &q, out),
    }
}

fn serve(host: &str, port: u16, sessions: Option<&Path>, args: &EngineArgs, out: &mut dyn Write) -> Result<()> {
    let engine = Arc::new(build_engine(args)?);
    let store: Arc<dyn SessionStore> = match sessions {
        Some(dir) => Arc::new(FsSessionStore::open(dir)?),
        None => Arc::new(MemorySessionStore::new()),
    };
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    rt.block_on(async {
        let listener =
            tokio::net::TcpListener::bind((host, port)).await.with_context(|| format!("binding {host}:{port}"))?;
        writeln!(out, "listening on {}", listener.local_addr()?)?;
        out.flush()?;
        axum::serve(listener, router(AppState::new(engine, store)))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await?;
        Ok(())
    })
}

/// Reads lines until the session ends or input runs out.
pub fn chat(engine: &DefaultEngine, input: impl BufRead, out: &mut dyn Write) -> Result<()> {
    let mut session = Session::new("chat");
    let greeting = engine.handle_turn(&mut session, &TurnInput::Utterance(String::new()))?;
    writeln!(out, "bot: {}", greeting.text)?;
    for line in input.lines() {
        let line = line?;
        let turn = match line.trim().strip_prefix("tap:") {
            Some(target) => TurnInput::Tap(target.trim().to_string()),
            None => TurnInput::Utterance(line.trim().to_string()),
        };
        let reply = engine.handle_turn(&mut session, &turn)?;
        writeln!(out, "bot: {}", reply.text)?;
        out.flush()?;
        if session.ended {
            break;
        }
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct CorpusGenOptions {
    pub n: usize,
    pub seed: u64,
    pub tone: Option<ToneOfVoice>,
    pub format: PromptFormat,
    pub split: [f64; 3],
    pub policy_overrides: Option<PathBuf>,
    pub catalog: Option<PathBuf>,
    pub out: PathBuf,
}

#[derive(Debug, Deserialize)]
struct Boost {
    from: Intent,
    to: Intent,
    factor: f64,
}

/// Writes train/valid/test dialogues, preference pairs and prompts under `out`.
pub fn corpus_gen(opts: &CorpusGenOptions, out: &mut dyn Write) -> Result<()> {
    let tasks = catalog_tasks(opts.catalog.as_deref())?;
    let mut policy = PolicyGraph::shipped();
    if let Some(p) = &opts.policy_overrides {
        let boosts: Vec<Boost> = serde_json::from_str(&std::fs::read_to_string(p)?)?;
        let cells: Vec<_> = boosts.iter().map(|b| ((b.from, b.to), b.factor)).collect();
        policy = boost_transitions(&policy, &cells)?;
    }
    let providers = CorpusProviders::default();
    let config = CorpusConfig {
        n: opts.n,
        seed: opts.seed,
        split: opts.split,
        options: DialogueOptions { tone: opts.tone, ..DialogueOptions::default() },
    };
    let splits = generate_corpus(&tasks, &policy, &UtteranceBank::shipped(), &providers, &config)?;
    std::fs::create_dir_all(&opts.out)?;
    write_jsonl(&opts.out.join("train.jsonl"), &splits.train)?;
    write_jsonl(&opts.out.join("valid.jsonl"), &splits.valid)?;
    write_jsonl(&opts.out.join("test.jsonl"), &splits.test)?;

    let by_id: BTreeMap<&str, &Task> = tasks.iter().map(|t| (t.id.as_str(), t)).collect();
    let prompt_config = PromptConfig { format: opts.format, ..PromptConfig::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let (mut pairs, mut prompts) = (Vec::new(), String::new());
    for d in &splits.train {
        let task = by_id[d.task_id.as_str()];
        let config = PromptConfig { tone: d.tone, ..prompt_config };
        for i in 0..d.turns.len() {
            pairs.push(make_negative(d, i, task, &providers.kit, &config, &mut rng)?);
            prompts.push_str(&serialize_prompt(d, task, i, &config)?);
            prompts.push_str("\n\n");
        }
    }
    write_jsonl(&opts.out.join("pairs.jsonl"), &pairs)?;
    std::fs::write(opts.out.join("prompts.txt"), prompts)?;
    let [train, valid, test] = splits.sizes();
    writeln!(
        out,
        "wrote {} dialogues ({train}/{valid}/{test}) and {} pairs to {}",
        opts.n,
        pairs.len(),
        opts.out.display()
    )?;
    Ok(())
}

pub fn simulate_cmd(
    engine: &DefaultEngine,
    (from, to): (u64, u64),
    max_turns: usize,
    policy: Option<&Path>,
    dir: &Path,
    out: &mut dyn Write,
) -> Result<()> {
    let policy = match policy {
        Some(p) => SimPolicy::load(p)?,
        None => SimPolicy::shipped(),
    };
    let seeds: Vec<u64> = (from..to).collect();
    std::fs::create_dir_all(dir)?;
    let embedder = Arc::clone(engine.catalog().embedder());
    for result in simulate_many(engine, &policy, embedder.as_ref(), &seeds, max_turns) {
        let t = result?;
        let path = dir.join(format!("{}.json", t.session_id));
        t.save(&path)?;
        writeln!(
            out,
            "{}: {} turns, started={}, completed={} -> {}",
            t.session_id,
            t.turns.len(),
            t.task_started,
            t.task_completed,
            path.display()
        )?;
    }
    Ok(())
}

pub fn replay_cmd(engine: &DefaultEngine, input: &Path, out: &mut dyn Write) -> Result<()> {
    let recorded = SimTranscript::load(input).with_context(|| format!("loading {}", input.display()))?;
    let report = replay(engine, &recorded);
    writeln!(out, "{}", report.to_json()?)?;
    if let Some(i) = report.first_divergence {
        bail!("replay diverged at turn {i}");
    }
    Ok(())
}

/// Training set used when no model file is given.
pub const DEFAULT_RATING_EXAMPLES: usize = 2000;
pub const DEFAULT_RATING_SEED: u64 = 0;

pub fn rate_cmd(transcript: &Path, model: Option<&Path>, save: Option<&Path>, out: &mut dyn Write) -> Result<()> {
    let t = SimTranscript::load(transcript).with_context(|| format!("loading {}", transcript.display()))?;
    let model: DefaultRatingModel = match model {
        Some(p) => serde_json::from_str(&std::fs::read_to_string(p)?)?,
        None => train_rating(&synthetic_rating_dataset(DEFAULT_RATING_EXAMPLES, DEFAULT_RATING_SEED))?,
    };
    if let Some(p) = save {
        std::fs::write(p, serde_json::to_string_pretty(&model)?)?;
    }
    let features = extract_features(&t);
    let prediction = predict_rating(&model, &features)?;
    let report = serde_json::json!({ "session_id": t.session_id, "features": features, "prediction": prediction });
    writeln!(out, "{}", serde_json::to_string_pretty(&report)?)?;
    Ok(())
}

pub fn video_index_cmd(input: &Path, out: &mut dyn Write) -> Result<()> {
    let index = frames(Some(input))?;
    let ids: Vec<&str> = index.video_ids().collect();
    for id in &ids {
        writeln!(out, "{id}: {} frames", index.frames(id).map_or(0, <[_]>::len))?;
    }
    writeln!(out, "indexed {} videos", ids.len())?;
    Ok(())
}

pub fn video_query_cmd(frames_path: Option<&Path>, video_id: &str, q: &str, out: &mut dyn Write) -> Result<()> {
    let index = frames(frames_path)?;
    let m = index.query_moment(video_id, q, None)?;
    let report = serde_json::json!({
        "video_id": video_id,
        "timestamp_s": m.timestamp_s,
        "caption": m.frame.caption,
        "fused_score": m.fused_score,
        "channel_ranks": m.channel_ranks,
    });
    writeln!(out, "{}", serde_json::to_string_pretty(&report)?)?;
    Ok(())
}
