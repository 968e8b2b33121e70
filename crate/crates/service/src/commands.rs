//! Batch commands behind the `vidsem` binary.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use anyhow::{bail, Context};
use vidsem_core::eval::{
    mean_precision, parse_qrels, parse_queries, run_feedback_session, write_curve_records,
    SessionConfig,
};
use vidsem_core::ingest::load_corpus;
use vidsem_core::{Engine, Language, Snapshot};

use crate::api::{router, ApiSettings, AppState};
use crate::config::ServiceConfig;
use crate::sessions::SessionStore;

pub fn build_engine(config: &ServiceConfig) -> anyhow::Result<Engine> {
    let files = config.corpus_files()?;
    let (index, report) = load_corpus(&files)?;
    for w in &report.warnings {
        log::warn!("{w}");
    }
    Ok(Engine::new(index, config.stopwords()?)?)
}

pub fn load_engine(config: &ServiceConfig, snapshot: &Path) -> anyhow::Result<Engine> {
    let snap = Snapshot::load(snapshot)
        .with_context(|| format!("loading snapshot {}", snapshot.display()))?;
    Ok(Engine::from_snapshot(snap, config.stopwords()?))
}

pub fn index(
    config: &ServiceConfig,
    out: &Path,
    matrix_tsv: Option<&Path>,
    w: &mut impl Write,
) -> anyhow::Result<()> {
    let files = config.corpus_files()?;
    let (index, report) = load_corpus(&files)?;
    for warning in &report.warnings {
        eprintln!("warning: {warning}");
    }
    let engine = Engine::new(index, config.stopwords()?)?;
    engine
        .snapshot()
        .save(out)
        .with_context(|| format!("writing {}", out.display()))?;
    if let Some(path) = matrix_tsv {
        std::fs::write(path, engine.matrix.to_tsv())
            .with_context(|| format!("writing {}", path.display()))?;
    }
    writeln!(w, "concepts: {}", report.concepts_parsed)?;
    writeln!(w, "contexts: {}", report.contexts_parsed)?;
    writeln!(w, "shots: {}", report.shots_parsed)?;
    writeln!(w, "videos: {}", report.videos_indexed)?;
    writeln!(w, "lexicon entries: {}", report.lexicon_entries)?;
    writeln!(w, "weights: {}", engine.matrix.entries().count())?;
    writeln!(w, "warnings: {}", report.warnings.len())?;
    writeln!(w, "snapshot: {}", out.display())?;
    Ok(())
}

pub struct SearchArgs<'a> {
    pub query: &'a str,
    pub lang: Option<Language>,
    pub auto_confirm: usize,
    pub limit: usize,
}

pub fn search(engine: &Engine, args: &SearchArgs, w: &mut impl Write) -> anyhow::Result<()> {
    if args.auto_confirm == 0 || args.limit == 0 {
        bail!("--auto-confirm and --limit must be at least 1");
    }
    let Some(query) = engine.auto_query(args.query, args.lang, args.auto_confirm)? else {
        eprintln!("no concept matched {:?}", args.query);
        return Ok(());
    };
    for r in engine.rank(&query, args.limit)? {
        writeln!(w, "{}\t{}\t{:.6}", r.rank, r.video_id, r.similarity)?;
    }
    Ok(())
}

pub struct EvalArgs<'a> {
    pub qrels: &'a Path,
    pub queries: Option<&'a Path>,
    pub out: &'a Path,
    pub auto_confirm: usize,
    pub session: SessionConfig,
}

pub fn eval(engine: &Engine, args: &EvalArgs, w: &mut impl Write) -> anyhow::Result<()> {
    let qrels = parse_qrels(
        &std::fs::read(args.qrels).with_context(|| format!("reading {}", args.qrels.display()))?,
    )?;
    let texts = match args.queries {
        Some(p) => {
            parse_queries(&std::fs::read(p).with_context(|| format!("reading {}", p.display()))?)?
        }
        None => Default::default(),
    };
    let mut sessions = Vec::new();
    for set in &qrels {
        let text = texts
            .get(&set.query_id)
            .map_or(set.query_id.as_str(), String::as_str);
        let Some(initial) = engine.auto_query(text, None, args.auto_confirm)? else {
            eprintln!("{}: no concept matched {text:?}, skipped", set.query_id);
            continue;
        };
        if set.relevant_videos.is_empty() {
            eprintln!("{}: no relevant videos in qrels, skipped", set.query_id);
            continue;
        }
        let outcomes = run_feedback_session(&initial, set, &engine.matrix, &args.session)?;
        let summary: Vec<String> = outcomes
            .iter()
            .map(|o| {
                format!(
                    "Q{} P@10={:.3} MP={:.3}",
                    o.iteration,
                    o.precision_at(set, 10),
                    mean_precision(&o.curve)
                )
            })
            .collect();
        writeln!(w, "{}\t{}", set.query_id, summary.join("\t"))?;
        sessions.push((set.query_id.as_str(), outcomes));
    }
    let records = write_curve_records(sessions.iter().map(|(q, o)| (*q, o.as_slice())));
    std::fs::write(args.out, records).with_context(|| format!("writing {}", args.out.display()))?;
    writeln!(w, "curve records: {}", args.out.display())?;
    Ok(())
}

pub fn app_state(engine: Engine, config: &ServiceConfig) -> AppState {
    AppState {
        engine: Arc::new(engine),
        sessions: Arc::new(SessionStore::new(config.session_ttl())),
        settings: Arc::new(ApiSettings {
            alpha: config.alpha,
            result_limit: config.result_limit,
            keyframes_dir: config.keyframes_dir.clone(),
        }),
    }
}

pub async fn serve(config: &ServiceConfig, snapshot: Option<PathBuf>) -> anyhow::Result<()> {
    let engine = match snapshot.as_deref().or(config.snapshot.as_deref()) {
        Some(path) => load_engine(config, path)?,
        None => build_engine(config)?,
    };
    log::info!(
        "serving {} videos, {} concepts",
        engine.matrix.videos().len(),
        engine.matrix.concepts().len()
    );
    let state = app_state(engine, config);
    let sessions = state.sessions.clone();
    let sweep = (config.session_ttl() / 4).max(Duration::from_secs(1));
    tokio::spawn(async move {
        let mut tick = tokio::time::interval(sweep);
        loop {
            tick.tick().await;
            let n = sessions.evict_expired();
            if n > 0 {
                log::debug!("evicted {n} idle sessions");
            }
        }
    });
    let listener = tokio::net::TcpListener::bind(config.listen)
        .await
        .with_context(|| format!("binding {}", config.listen))?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
