//! Subcommand implementations. Every run writes its artifacts plus one
//! `manifest.json` under the chosen output directory.

use std::fs::File;
use std::io::{BufReader, Write};
use std::path::Path;

use motifrank::analysis::{
    activity_series, forecast_curve, join_vs_final, new_messages, newmsg_by_rank,
    permutation_importance, spearman_with, sweep_k_reports, weekly_rank_correlation, PValueMethod,
    SweepConfig,
};
use motifrank::dataset::{assemble, make_folds};
use motifrank::encode::{count_kgrams, encode_user, vectorize, MotifVocabulary};
use motifrank::graph::{build_snapshots, pagerank, ranks, PageRankParams, Snapshot};
use motifrank::ingest::{build_store, parse_joins, parse_messages, EventStore};
use motifrank::learn::{
    cross_validate, ForestConfig, ForestLearner, Learner, LogisticConfig, LogisticLearner,
};
use motifrank::report;
use motifrank::synth::{generate, joins_file, messages_file, SynthConfig};
use motifrank::{Dataset, Evaluation};
use serde::Serialize;

use crate::config::Settings;
use crate::error::CliError;
use crate::manifest::Stages;

pub fn load_store(settings: &Settings) -> Result<EventStore, CliError> {
    let events_path = settings.events.as_ref().ok_or_else(|| {
        CliError::Data("an events file is required (--events or config `events`)".into())
    })?;
    let events_file = File::open(events_path).map_err(|err| {
        CliError::Data(format!("cannot open {}: {err}", events_path.display()))
    })?;
    let messages = parse_messages(BufReader::new(events_file))?;
    let joins = match &settings.joins {
        Some(path) => {
            let file = File::open(path).map_err(|err| {
                CliError::Data(format!("cannot open {}: {err}", path.display()))
            })?;
            Some(parse_joins(BufReader::new(file))?)
        }
        None => None,
    };
    Ok(build_store(&messages, joins.as_deref(), settings.horizon)?)
}

pub fn ensure_out_dir(out: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(out)
        .map_err(|err| CliError::Runtime(format!("cannot create {}: {err}", out.display())))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes)
        .map_err(|err| CliError::Runtime(format!("cannot write {}: {err}", path.display())))
}

fn write_csv(
    path: &Path,
    render: impl FnOnce(&mut Vec<u8>) -> motifrank::Result<()>,
) -> Result<(), CliError> {
    let mut buffer = Vec::new();
    render(&mut buffer)?;
    write_bytes(path, &buffer)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_bytes(path, text.as_bytes())
}

fn forest_config(settings: &Settings) -> ForestConfig {
    ForestConfig {
        n_trees: settings.trees,
        seed: settings.seed,
        ..ForestConfig::default()
    }
}

fn logistic_config(settings: &Settings) -> LogisticConfig {
    LogisticConfig {
        l2: settings.l2,
        epochs: settings.epochs,
        step: settings.step,
    }
}

fn pagerank_params(settings: &Settings) -> PageRankParams {
    PageRankParams {
        damping: settings.damping,
        ..PageRankParams::default()
    }
}

fn sweep_config(settings: &Settings) -> SweepConfig {
    SweepConfig {
        m: settings.bins,
        label_week: settings.label_week,
        n_folds: settings.folds,
        seed: settings.seed,
        forest: forest_config(settings),
        pagerank: pagerank_params(settings),
    }
}

#[derive(Debug, Serialize)]
pub struct IngestSummary {
    pub users: usize,
    pub messages: usize,
    pub messages_within_horizon: usize,
    pub t0: i64,
    pub horizon_weeks: u32,
}

pub fn run_ingest(settings: &Settings, out: &Path, stages: &mut Stages) -> Result<(), CliError> {
    let store = stages.time("parse", || load_store(settings))?;
    let summary = IngestSummary {
        users: store.user_count(),
        messages: store
            .events()
            .iter()
            .filter(|e| e.kind == motifrank::ingest::EventKind::Send)
            .count(),
        messages_within_horizon: store.messages_within_horizon().count(),
        t0: store.t0(),
        horizon_weeks: store.horizon_weeks(),
    };
    stages.time("write", || -> Result<(), CliError> {
        let mut buffer = Vec::new();
        store.write_ndjson(&mut buffer)?;
        write_bytes(&out.join("store.ndjson"), &buffer)?;
        write_json(&out.join("ingest_summary.json"), &summary)
    })?;
    println!(
        "ingested {} messages from {} users ({} within the {}-week horizon)",
        summary.messages, summary.users, summary.messages_within_horizon, summary.horizon_weeks
    );
    Ok(())
}

pub fn run_activity(settings: &Settings, out: &Path, stages: &mut Stages) -> Result<(), CliError> {
    let store = stages.time("parse", || load_store(settings))?;
    let series = stages.time("activity", || activity_series(&store));
    write_csv(&out.join("fig1_activity.csv"), |w| {
        report::write_activity_csv(w, &series)
    })?;
    write_json(&out.join("fig1_activity.json"), &series)
}

pub fn run_pagerank(settings: &Settings, out: &Path, stages: &mut Stages) -> Result<(), CliError> {
    let store = stages.time("parse", || load_store(settings))?;
    let snapshots = stages.time("snapshots", || build_snapshots(&store, settings.horizon))?;
    let weeks = stages.time("pagerank", || -> motifrank::Result<Vec<_>> {
        let mut weeks = Vec::new();
        for snapshot in &snapshots {
            match pagerank::<f64>(snapshot, pagerank_params(settings)) {
                Ok(result) => {
                    let table = ranks(&result);
                    weeks.push((result, table));
                }
                Err(motifrank::Error::EmptyGiantComponent { .. }) => continue,
                Err(other) => return Err(other),
            }
        }
        Ok(weeks)
    })?;
    write_csv(&out.join("pagerank.csv"), |w| {
        report::write_pagerank_csv(w, &weeks)
    })
}

pub fn run_encode(settings: &Settings, out: &Path, stages: &mut Stages) -> Result<(), CliError> {
    let store = stages.time("parse", || load_store(settings))?;
    let cutoff = settings.cutoff_week;
    let matrix = stages.time("encode", || -> motifrank::Result<_> {
        let mut vectors = Vec::new();
        for user in store.users() {
            if store.join_week(user).unwrap_or(u32::MAX) > cutoff {
                continue;
            }
            let sequence = encode_user(&store, user, cutoff)?;
            vectors.push(count_kgrams(&sequence, settings.k)?);
        }
        let vocabulary = MotifVocabulary::from_population(&vectors);
        Ok(vectorize(&vectors, &vocabulary))
    })?;
    write_csv(&out.join("motifs.csv"), |w| {
        report::write_motif_matrix_csv(w, &matrix)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ModelKind {
    Rf,
    Logistic,
}

pub fn run_train(
    settings: &Settings,
    out: &Path,
    model: ModelKind,
    stages: &mut Stages,
) -> Result<(), CliError> {
    let store = stages.time("parse", || load_store(settings))?;
    let snapshots = stages.time("snapshots", || build_snapshots(&store, settings.horizon))?;
    let dataset = stages.time("assemble", || {
        assemble::<f64>(
            &store,
            &snapshots,
            settings.cutoff_week,
            settings.label_week,
            settings.k,
            settings.bins,
            false,
            pagerank_params(settings),
        )
    })?;
    let folds = make_folds(&dataset, settings.folds, settings.seed)?;
    let learner: Box<dyn Learner<f64>> = match model {
        ModelKind::Rf => Box::new(ForestLearner(forest_config(settings))),
        ModelKind::Logistic => Box::new(LogisticLearner(logistic_config(settings))),
    };
    let evaluation = stages.time("cross_validate", || {
        cross_validate(&dataset, &folds, learner.as_ref())
    })?;
    // Final model refit on the full population, serialized for reuse.
    stages.time("fit_full_model", || -> Result<(), CliError> {
        match model {
            ModelKind::Rf => {
                let full = motifrank::learn::train_forest::<f64>(
                    &dataset.features,
                    &dataset.labels,
                    &forest_config(settings),
                )?;
                write_json(&out.join("model.json"), &full)
            }
            ModelKind::Logistic => {
                let full = motifrank::learn::train_logistic::<f64>(
                    &dataset.features,
                    &dataset.labels,
                    &logistic_config(settings),
                )?;
                write_json(&out.join("model.json"), &full)
            }
        }
    })?;
    write_csv(&out.join("dataset_features.csv"), |w| {
        report::write_dataset_features_csv(w, &dataset)
    })?;
    write_csv(&out.join("dataset_labels.csv"), |w| {
        report::write_dataset_labels_csv(w, &dataset)
    })?;
    write_csv(&out.join("eval.csv"), |w| report::write_eval_csv(w, &evaluation))?;
    write_json(&out.join("eval.json"), &evaluation)?;
    println!("{}: mae {}", evaluation.learner, evaluation.mae);
    Ok(())
}

pub fn run_correlate(
    settings: &Settings,
    out: &Path,
    p_method: PValueMethod,
    stages: &mut Stages,
) -> Result<(), CliError> {
    let store = stages.time("parse", || load_store(settings))?;
    let snapshots = stages.time("snapshots", || build_snapshots(&store, settings.horizon))?;
    let (mut join_report, scatter) = stages.time("join_vs_final", || {
        join_vs_final::<f64>(&store, &snapshots, pagerank_params(settings))
    })?;
    if let PValueMethod::Permutation { .. } = p_method {
        let x: Vec<f64> = scatter.iter().map(|p| p.join_timestamp as f64).collect();
        let y: Vec<f64> = scatter.iter().map(|p| p.pagerank).collect();
        let context = join_report.context.clone();
        join_report = spearman_with(&x, &y, p_method)?;
        join_report.context = context;
    }
    let weekly = stages.time("weekly_correlation", || {
        weekly_rank_correlation::<f64>(&store, &snapshots, pagerank_params(settings))
    })?;
    for (week, reason) in &weekly.skipped {
        eprintln!("week {week} skipped: {reason}");
    }
    write_csv(&out.join("fig3_scatter.csv"), |w| {
        report::write_scatter_csv(w, &scatter)
    })?;
    write_csv(&out.join("fig3_correlation.csv"), |w| {
        report::write_correlation_csv(w, &join_report)
    })?;
    write_json(&out.join("fig3_correlation.json"), &join_report)?;
    write_csv(&out.join("fig5_weekly_rho.csv"), |w| {
        report::write_weekly_rho_csv(w, &weekly)
    })?;
    write_json(&out.join("fig5_weekly_rho.json"), &weekly)?;
    println!(
        "join-date correlation: rho {} (p {}, n {})",
        join_report.rho, join_report.p_value, join_report.n
    );
    Ok(())
}

pub fn run_newmsg(settings: &Settings, out: &Path, stages: &mut Stages) -> Result<(), CliError> {
    let store = stages.time("parse", || load_store(settings))?;
    let snapshots = stages.time("snapshots", || build_snapshots(&store, settings.horizon))?;
    let counts = stages.time("rank_counts", || {
        newmsg_by_rank::<f64>(&store, &snapshots, pagerank_params(settings))
    })?;
    let total_new = new_messages(&store).iter().filter(|(_, n)| *n).count();
    write_csv(&out.join("fig4_rankcounts.csv"), |w| {
        report::write_rank_counts_csv(w, &counts)
    })?;
    write_json(&out.join("fig4_rankcounts.json"), &counts)?;
    println!(
        "{} new messages, {} attributed to ranked receivers",
        total_new,
        counts.values().sum::<u64>()
    );
    Ok(())
}

pub fn run_forecast_curve(
    settings: &Settings,
    out: &Path,
    stages: &mut Stages,
) -> Result<(), CliError> {
    let store = stages.time("parse", || load_store(settings))?;
    let snapshots = stages.time("snapshots", || build_snapshots(&store, settings.horizon))?;
    let curve = stages.time("forecast_curve", || {
        forecast_curve::<f64>(&store, &snapshots, settings.k, &sweep_config(settings))
    })?;
    for (cutoff, reason) in &curve.skipped {
        eprintln!("cutoff week {cutoff} skipped: {reason}");
    }
    write_csv(&out.join("fig6_curve.csv"), |w| {
        report::write_curve_csv(w, &curve)
    })?;
    write_json(&out.join("fig6_curve.json"), &curve)
}

pub fn run_sweep_k(
    settings: &Settings,
    out: &Path,
    k_min: usize,
    k_max: usize,
    stages: &mut Stages,
) -> Result<(), CliError> {
    if k_min < 1 || k_min > k_max {
        return Err(CliError::Data(format!(
            "invalid k range {k_min}..={k_max}"
        )));
    }
    let store = stages.time("parse", || load_store(settings))?;
    let snapshots = stages.time("snapshots", || build_snapshots(&store, settings.horizon))?;
    let ks: Vec<usize> = (k_min..=k_max).collect();
    let reports = stages.time("sweep_k", || {
        sweep_k_reports::<f64>(&store, &snapshots, &ks, &sweep_config(settings))
    })?;
    let summary: Vec<(usize, f64)> = reports.iter().map(|(k, r)| (*k, r.mae)).collect();
    write_csv(&out.join("fig7_ksweep.csv"), |w| {
        report::write_ksweep_csv(w, &summary)
    })?;
    write_json(&out.join("fig7_ksweep.json"), &reports)
}

pub fn run_importance(
    settings: &Settings,
    out: &Path,
    stages: &mut Stages,
) -> Result<(), CliError> {
    let store = stages.time("parse", || load_store(settings))?;
    let snapshots = stages.time("snapshots", || build_snapshots(&store, settings.horizon))?;
    let dataset = stages.time("assemble", || {
        assemble::<f64>(
            &store,
            &snapshots,
            settings.cutoff_week,
            settings.label_week,
            settings.k,
            settings.bins,
            false,
            pagerank_params(settings),
        )
    })?;
    let learner = ForestLearner(forest_config(settings));
    let importance = stages.time("permutation_importance", || {
        permutation_importance(
            &dataset,
            &learner,
            settings.splits,
            settings.holdout,
            settings.seed,
        )
    })?;
    write_csv(&out.join("fig8_importance.csv"), |w| {
        report::write_importance_csv(w, &importance)
    })?;
    write_json(&out.join("fig8_importance.json"), &importance)
}

#[derive(Debug, Clone, clap::Args, Serialize)]
pub struct SynthArgs {
    /// Number of users to simulate
    #[arg(long, default_value_t = 200)]
    pub users: usize,
    /// Number of weeks to simulate
    #[arg(long, default_value_t = 20)]
    pub weeks: u32,
    /// Fraction of users joining after week 1
    #[arg(long, default_value_t = 0.3)]
    pub spread: f64,
    /// Expected messages per joined user per week
    #[arg(long, default_value_t = 2.0)]
    pub rate: f64,
    /// Preferential-attachment strength in [0,1]
    #[arg(long, default_value_t = 0.8)]
    pub pref: f64,
    /// Probability a first contact is answered the same week
    #[arg(long, default_value_t = 0.6)]
    pub reply: f64,
    /// Generator seed
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

pub fn run_synth(args: &SynthArgs, out: &Path, stages: &mut Stages) -> Result<(), CliError> {
    let config = SynthConfig {
        n_users: args.users,
        n_weeks: args.weeks,
        join_spread: args.spread,
        base_rate: args.rate,
        pref_strength: args.pref,
        reply_prob: args.reply,
        seed: args.seed,
    };
    let (messages, joins) = stages.time("generate", || generate(&config))?;
    write_bytes(&out.join("messages.txt"), messages_file(&messages).as_bytes())?;
    write_bytes(&out.join("joins.txt"), joins_file(&joins).as_bytes())?;
    println!(
        "generated {} messages across {} users and {} weeks",
        messages.len(),
        args.users,
        args.weeks
    );
    Ok(())
}

/// The whole experiment battery in one pass over one store.
pub fn run_reproduce(settings: &Settings, out: &Path, stages: &mut Stages) -> Result<(), CliError> {
    let store = stages.time("parse", || load_store(settings))?;
    let snapshots = stages.time("snapshots", || build_snapshots(&store, settings.horizon))?;

    let series = stages.time("fig1_activity", || activity_series(&store));
    write_csv(&out.join("fig1_activity.csv"), |w| {
        report::write_activity_csv(w, &series)
    })?;
    write_json(&out.join("fig1_activity.json"), &series)?;

    let (join_report, scatter) = stages.time("fig3_join_vs_final", || {
        join_vs_final::<f64>(&store, &snapshots, pagerank_params(settings))
    })?;
    write_csv(&out.join("fig3_scatter.csv"), |w| {
        report::write_scatter_csv(w, &scatter)
    })?;
    write_csv(&out.join("fig3_correlation.csv"), |w| {
        report::write_correlation_csv(w, &join_report)
    })?;
    write_json(&out.join("fig3_correlation.json"), &join_report)?;

    let counts = stages.time("fig4_rank_counts", || {
        newmsg_by_rank::<f64>(&store, &snapshots, pagerank_params(settings))
    })?;
    write_csv(&out.join("fig4_rankcounts.csv"), |w| {
        report::write_rank_counts_csv(w, &counts)
    })?;
    write_json(&out.join("fig4_rankcounts.json"), &counts)?;

    let weekly = stages.time("fig5_weekly_rho", || {
        weekly_rank_correlation::<f64>(&store, &snapshots, pagerank_params(settings))
    })?;
    write_csv(&out.join("fig5_weekly_rho.csv"), |w| {
        report::write_weekly_rho_csv(w, &weekly)
    })?;
    write_json(&out.join("fig5_weekly_rho.json"), &weekly)?;

    let (table, evaluations) = stages.time("table1", || table1(settings, &store, &snapshots))?;
    write_csv(&out.join("table1.csv"), |w| report::write_table_csv(w, &table))?;
    write_json(&out.join("table1.json"), &evaluations)?;

    let curve = stages.time("fig6_curve", || {
        forecast_curve::<f64>(&store, &snapshots, settings.k, &sweep_config(settings))
    })?;
    write_csv(&out.join("fig6_curve.csv"), |w| {
        report::write_curve_csv(w, &curve)
    })?;
    write_json(&out.join("fig6_curve.json"), &curve)?;

    let ks: Vec<usize> = (1..=6).collect();
    let sweep = stages.time("fig7_ksweep", || {
        sweep_k_reports::<f64>(&store, &snapshots, &ks, &sweep_config(settings))
    })?;
    let summary: Vec<(usize, f64)> = sweep.iter().map(|(k, r)| (*k, r.mae)).collect();
    write_csv(&out.join("fig7_ksweep.csv"), |w| {
        report::write_ksweep_csv(w, &summary)
    })?;
    write_json(&out.join("fig7_ksweep.json"), &sweep)?;

    let dataset = stages.time("importance_dataset", || {
        assemble::<f64>(
            &store,
            &snapshots,
            settings.cutoff_week,
            settings.label_week,
            settings.k,
            settings.bins,
            false,
            pagerank_params(settings),
        )
    })?;
    let learner = ForestLearner(forest_config(settings));
    let importance = stages.time("fig8_importance", || {
        permutation_importance(
            &dataset,
            &learner,
            settings.splits,
            settings.holdout,
            settings.seed,
        )
    })?;
    write_csv(&out.join("fig8_importance.csv"), |w| {
        report::write_importance_csv(w, &importance)
    })?;
    write_json(&out.join("fig8_importance.json"), &importance)?;

    Ok(())
}

type Table1 = (Vec<(String, f64)>, Vec<Evaluation>);

fn table1(
    settings: &Settings,
    store: &EventStore,
    snapshots: &[Snapshot],
) -> motifrank::Result<Table1> {
    let dataset: Dataset = assemble(
        store,
        snapshots,
        settings.cutoff_week,
        settings.label_week,
        settings.k,
        settings.bins,
        false,
        pagerank_params(settings),
    )?;
    let folds = make_folds(&dataset, settings.folds, settings.seed)?;
    let logistic = cross_validate(
        &dataset,
        &folds,
        &LogisticLearner(logistic_config(settings)),
    )?;
    let forest = cross_validate(&dataset, &folds, &ForestLearner(forest_config(settings)))?;
    let table = vec![
        (logistic.learner.clone(), logistic.mae),
        (forest.learner.clone(), forest.mae),
    ];
    Ok((table, vec![logistic, forest]))
}

/// Doubles as a smoke check for output-directory writability.
pub fn probe_out_dir(out: &Path) -> Result<(), CliError> {
    ensure_out_dir(out)?;
    let probe = out.join(".write_probe");
    let outcome = File::create(&probe).and_then(|mut f| f.write_all(b"ok"));
    let _ = std::fs::remove_file(&probe);
    outcome.map_err(|err| CliError::Runtime(format!("output directory not writable: {err}")))?;
    Ok(())
}
