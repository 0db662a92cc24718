use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use anyhow::{Context, Result};
use dialprog_core::acceptability::{annotate, fit_profile, ACCEPTABILITY_ATTRIBUTE};
use dialprog_core::corpus::{
    annotate_sentiment, apply_standardizer, filter_dialogues, fit_standardizer, load_corpus, split_train_test,
    FilterRules, HttpSentiment,
};
use dialprog_core::embedding::embed_utterances;
use dialprog_core::eval::{auto_metrics, manual_metrics, turn_values, AnnotationSet};
use dialprog_core::planner::{
    parse_mode, select_response, self_play, CorpusSampler, History, HttpGenerator, ScriptedGenerator,
    SelfPlayOptions, SelfPlayReport,
};
use dialprog_core::pipeline::embed_corpus;
use dialprog_core::plot::{curve_svg, map_csv, map_svg};
use dialprog_core::progression::{least_squares, progression_curve, HttpPf, UnsupervisedPf};
use dialprog_core::seed::derive_seed;
use dialprog_core::stats::mean_std;
use dialprog_core::synthetic::{generate_corpus, scripted_tree, SyntheticSpec};
use dialprog_core::tune::{grid_search, retrain, GridReport, GridSpec, TuneData};
use dialprog_core::{
    ClusterMethod, Corpus, Dialogue, Error, GdsConfig, GeneratorProvider, PoolingConfig, ProgressionScorer,
    ProgressionTrace, Utterance,
};
use serde::Serialize;

use crate::artifact::{read_json, read_model, write_csv, write_json, write_sidecar, write_svg, ModelFile, Stamp};
use crate::providers::{client, Embedding};
use crate::*;

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Ingest(a) => ingest(&a),
        Command::Embed(a) => embed(&a),
        Command::Acceptability(a) => acceptability(&a),
        Command::Gds(GdsCommand::Train(a)) => gds_train(&a),
        Command::Gds(GdsCommand::Map(a)) | Command::Map(a) => map(&a),
        Command::Pf(PfCommand::Curve(a)) => pf_curve(&a),
        Command::Pf(PfCommand::Score(a)) => pf_score(&a),
        Command::Plan(PlanCommand::Respond(a)) => plan_respond(&a),
        Command::Plan(PlanCommand::Selfplay(a)) => plan_selfplay(&a),
        Command::Eval(EvalCommand::Auto(a)) => eval_auto(&a),
        Command::Eval(EvalCommand::Manual(a)) => eval_manual(&a),
        Command::Tune(TuneCommand::Grid(a)) => tune_grid(&a),
    }
}

fn validation(msg: impl Into<String>) -> anyhow::Error {
    Error::Validation(msg.into()).into()
}

fn dialogue<'a>(corpus: &'a Corpus, id: &str) -> Result<&'a Dialogue> {
    corpus.get(id).ok_or_else(|| validation(format!("dialogue {id:?} not in corpus")))
}

fn acceptability_column(corpus: &Corpus, path: &Path) -> Result<Vec<f64>> {
    corpus.attribute_column(ACCEPTABILITY_ATTRIBUTE).with_context(|| {
        format!(
            "{} has no `{ACCEPTABILITY_ATTRIBUTE}` attribute; run `dialprog acceptability` first",
            path.display()
        )
    })
}

fn write_corpus(corpus: &Corpus, path: &Path, stamp: &Stamp) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    corpus.save(path)?;
    write_sidecar(path, stamp)
}

fn ingest(a: &IngestArgs) -> Result<()> {
    let stamp = Stamp::new("ingest", a, a.seed);
    let mut corpus = match (&a.corpus, a.synthetic) {
        (Some(path), _) => load_corpus(path)?,
        (None, Some(n)) => {
            generate_corpus(
                &SyntheticSpec {
                    dialogues: n,
                    ..SyntheticSpec::default()
                },
                a.seed,
            )?
            .corpus
        }
        (None, None) => unreachable!("clap requires --corpus or --synthetic"),
    };
    let before = corpus.len();
    if a.filter {
        let rules = FilterRules {
            lower: a.lower,
            upper: a.upper,
            ..FilterRules::persuasion_default(a.primary.clone())
        };
        corpus = filter_dialogues(&corpus, &rules)?;
    }
    if a.sentiment {
        let url = a.provider_url.as_deref().expect("clap requires --provider-url");
        corpus = annotate_sentiment(&corpus, &HttpSentiment::new(client(url)))?;
    }
    write_corpus(&corpus, &a.out, &stamp)?;
    if let Some(path) = &a.scripted_tree {
        let tree = scripted_tree(&SyntheticSpec::default(), a.seed)?;
        write_json(path, &stamp, &tree)?;
    }
    println!("wrote {} of {before} dialogues to {}", corpus.len(), a.out.display());
    Ok(())
}

fn embed(a: &EmbedArgs) -> Result<()> {
    if a.provider.cache.is_none() {
        return Err(Error::Argument("`embed` needs --cache".into()).into());
    }
    let corpus = load_corpus(&a.corpus)?;
    let emb = Embedding::open(&a.provider)?;
    let matrices = embed_corpus(&corpus, &emb.provider)?;
    emb.save()?;
    let cache = a.provider.cache.as_ref().expect("checked above");
    write_sidecar(cache, &Stamp::new("embed", a, 0))?;
    let utterances: usize = matrices.iter().map(|m| m.len()).sum();
    println!("{} utterances embedded, {} cache entries in {}", utterances, emb.provider.len(), cache.display());
    Ok(())
}

fn acceptability(a: &AcceptabilityArgs) -> Result<()> {
    let stamp = Stamp::new("acceptability", a, a.seed);
    let corpus = load_corpus(&a.corpus)?;
    let (train_raw, test_raw) = split_train_test(&corpus, a.test_fraction, derive_seed(a.seed, "split"))?;
    let standardizer = fit_standardizer(&train_raw)?;
    let train = apply_standardizer(&standardizer, &train_raw);
    let test = apply_standardizer(&standardizer, &test_raw);
    let profile = fit_profile(&train, &a.primary, &format!("{} train split, seed {}", a.corpus.display(), a.seed))?;
    let out = &a.out;
    write_corpus(&annotate(&train, &profile)?, &out.join("train.jsonl"), &stamp)?;
    write_corpus(&annotate(&test, &profile)?, &out.join("test.jsonl"), &stamp)?;
    write_json(&out.join("profile.json"), &stamp, &profile)?;
    write_json(&out.join("standardizer.json"), &stamp, &standardizer)?;
    write_csv(&out.join("weights.csv"), &stamp, &profile.weights_csv())?;
    println!(
        "{} train / {} test dialogues, {} weighted attributes -> {}",
        train.len(),
        test.len(),
        profile.weights.len(),
        out.display()
    );
    Ok(())
}

fn gds_train(a: &GdsTrainArgs) -> Result<()> {
    let stamp = Stamp::new("gds train", a, a.seed);
    let corpus = load_corpus(&a.corpus)?;
    let acc = acceptability_column(&corpus, &a.corpus)?;
    let emb = Embedding::open(&a.provider)?;
    let train = embed_corpus(&corpus, &emb.provider)?;
    emb.save()?;
    let config = GdsConfig {
        pooling: PoolingConfig {
            beta: a.beta,
            normalize: !a.no_normalize,
            normalize_utterances: false,
        },
        reduce_dim: a.dim,
        metric: a.metric,
        method: match a.method {
            Method::Kmeans => ClusterMethod::Kmeans { k: a.k, n_init: a.n_init },
            Method::Hdbscan => ClusterMethod::Hdbscan {
                min_cluster_size: a.min_cluster_size,
                min_samples: None,
            },
        },
        ..GdsConfig::default()
    };
    let model = dialprog_core::gds::fit_gds(&config, &train, &acc, derive_seed(a.seed, "gds"))?;
    if model.is_degenerate() {
        return Err(validation("clustering found no clusters"));
    }
    write_json(
        &a.out,
        &stamp,
        &ModelFile {
            proximity: a.proximity.config(),
            model,
            seed: a.seed,
        },
    )?;
    println!("model written to {}", a.out.display());
    Ok(())
}

/// 2-D path of a dialogue's prefixes through the model's map.
fn dialogue_path(mf: &ModelFile, d: &Dialogue, emb: &Embedding) -> Result<Vec<(f64, f64)>> {
    let u = embed_utterances(d, &emb.provider)?;
    let feats = mf.model.featurize_prefixes(&u)?;
    Ok(mf.model.map.project_all(&feats)?)
}

fn map(a: &MapArgs) -> Result<()> {
    let mf = read_model(&a.model)?;
    let stamp = Stamp::new("map", a, mf.seed);
    let path = match (&a.corpus, &a.dialogue) {
        (Some(corpus), Some(id)) => {
            let corpus = load_corpus(corpus)?;
            let emb = Embedding::open(&a.provider)?;
            let p = dialogue_path(&mf, dialogue(&corpus, id)?, &emb)?;
            emb.save()?;
            Some(p)
        }
        _ => None,
    };
    if let Some(svg) = &a.svg {
        write_svg(svg, &stamp, &map_svg(&mf.model, path.as_deref())?)?;
    }
    if let Some(csv) = &a.csv {
        write_csv(csv, &stamp, &map_csv(&mf.model, path.as_deref())?)?;
    }
    Ok(())
}

/// Scores dialogues either through the GDS model or a remote progression model.
#[allow(clippy::large_enum_variant)]
enum Scoring {
    Model(ModelFile),
    Remote(HttpPf),
}

impl Scoring {
    fn open(model: Option<&Path>, pf_url: Option<&str>) -> Result<Self> {
        match (pf_url, model) {
            (Some(url), _) => Ok(Scoring::Remote(HttpPf::new(client(url)))),
            (None, Some(path)) => Ok(Scoring::Model(read_model(path)?)),
            (None, None) => Err(Error::Argument("need --model or --pf-provider-url".into()).into()),
        }
    }

    fn seed(&self) -> u64 {
        match self {
            Scoring::Model(m) => m.seed,
            Scoring::Remote(_) => 0,
        }
    }

    fn traces(&self, dialogues: &[Dialogue], emb: &Embedding) -> Result<Vec<ProgressionTrace>> {
        match self {
            Scoring::Model(mf) => {
                let corpus = Corpus::new(dialogues.to_vec())?;
                let u = embed_corpus(&corpus, &emb.provider)?;
                Ok(dialprog_core::pipeline::curves(&mf.model, &u, &mf.proximity)?)
            }
            Scoring::Remote(pf) => dialogues
                .iter()
                .map(|d| {
                    let prefixes: Vec<Vec<Utterance>> = (1..=d.len()).map(|t| d.utterances[..t].to_vec()).collect();
                    Ok(ProgressionTrace::from_values(pf.score_batch(&prefixes)?))
                })
                .collect(),
        }
    }

    fn scorer<'a>(&'a self, emb: &'a Embedding) -> Box<dyn ProgressionScorer + 'a> {
        match self {
            Scoring::Model(mf) => Box::new(UnsupervisedPf {
                model: &mf.model,
                provider: &emb.provider,
                proximity: mf.proximity,
            }),
            Scoring::Remote(pf) => Box::new(RemoteRef(pf)),
        }
    }
}

struct RemoteRef<'a>(&'a HttpPf);

impl ProgressionScorer for RemoteRef<'_> {
    fn score(&self, history: &[Utterance]) -> dialprog_core::Result<f64> {
        self.0.score(history)
    }
}

fn pf_curve(a: &PfCurveArgs) -> Result<()> {
    let scoring = Scoring::open(a.model.as_deref(), a.pf_provider_url.as_deref())?;
    let stamp = Stamp::new("pf curve", a, scoring.seed());
    let corpus = load_corpus(&a.corpus)?;
    let d = dialogue(&corpus, &a.dialogue)?;
    let emb = Embedding::open(&a.provider)?;
    let trace = match &scoring {
        Scoring::Model(mf) => progression_curve(d, &mf.model, &emb.provider, &mf.proximity)?,
        Scoring::Remote(_) => scoring.traces(std::slice::from_ref(d), &emb)?.remove(0),
    };
    emb.save()?;
    write_csv(&a.out, &stamp, &trace.to_csv())?;
    if let Some(svg) = &a.svg {
        write_svg(svg, &stamp, &curve_svg(&trace, &a.dialogue))?;
    }
    println!("{}: {} utterances, slope {:.6}", a.dialogue, trace.turn_values.len(), trace.slope);
    Ok(())
}

fn pf_score(a: &PfScoreArgs) -> Result<()> {
    let scoring = Scoring::open(a.model.as_deref(), a.pf_provider_url.as_deref())?;
    let stamp = Stamp::new("pf score", a, scoring.seed());
    let corpus = load_corpus(&a.corpus)?;
    let dialogues = match &a.dialogue {
        Some(id) => vec![dialogue(&corpus, id)?.clone()],
        None => corpus.dialogues.clone(),
    };
    let emb = Embedding::open(&a.provider)?;
    let traces = scoring.traces(&dialogues, &emb)?;
    emb.save()?;
    let mut body = String::from("dialogue_id,utterances,slope,intercept,final\n");
    for (d, t) in dialogues.iter().zip(&traces) {
        let _ = writeln!(body, "{},{},{},{},{}", d.id, t.turn_values.len(), t.slope, t.intercept, t.final_value());
    }
    write_csv(&a.out, &stamp, &body)?;
    println!("scored {} dialogues -> {}", dialogues.len(), a.out.display());
    Ok(())
}

fn generator(g: &GeneratorArgs, provider_url: Option<&str>, corpus: Option<&Corpus>) -> Result<Box<dyn GeneratorProvider>> {
    if let Some(path) = &g.scripted {
        let tree: ScriptedGenerator = read_json(path)?;
        return Ok(Box::new(ScriptedGenerator::new(tree.branches)?));
    }
    if g.sample_corpus {
        let corpus = corpus.ok_or_else(|| Error::Argument("--sample-corpus needs --corpus".into()))?;
        return Ok(Box::new(CorpusSampler::new(corpus)?));
    }
    match provider_url {
        Some(url) => Ok(Box::new(HttpGenerator::new(client(url)))),
        None => Err(Error::Argument("no generator: pass --provider-url, --scripted or --sample-corpus".into()).into()),
    }
}

#[derive(Serialize)]
struct RespondReport<'a> {
    mode: String,
    history_len: usize,
    response: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    selection: Option<&'a dialprog_core::planner::Selection>,
}

fn plan_respond(a: &PlanRespondArgs) -> Result<()> {
    let mode = parse_mode(&a.mode)?;
    let corpus = a.corpus.as_ref().map(load_corpus).transpose()?;
    let history: Vec<Utterance> = match (&a.history, &a.dialogue, &corpus) {
        (Some(path), _, _) => read_json(path)?,
        (None, Some(id), Some(c)) => {
            let d = dialogue(c, id)?;
            d.utterances[..a.context.unwrap_or(d.len()).min(d.len())].to_vec()
        }
        _ => unreachable!("clap requires --history or --corpus with --dialogue"),
    };
    let gen = generator(&a.generator, a.provider.provider_url.as_deref(), corpus.as_ref())?;
    let scoring = Scoring::open(a.model.as_deref(), a.pf_provider_url.as_deref())?;
    let emb = Embedding::open(&a.provider)?;
    let pf = scoring.scorer(&emb);
    let stamp = Stamp::new("plan respond", a, a.seed);
    let history = History::new(history);
    let speaker = history.next_speaker();
    let params = dialprog_core::GenerationParams::default();
    let seed = derive_seed(a.seed, "respond");
    let (response, selection) = match &mode {
        Some(cfg) => {
            let sel = select_response(&history, speaker, cfg, gen.as_ref(), pf.as_ref(), &params, seed)?;
            (sel.chosen_text().to_string(), Some(sel))
        }
        None => (history.generate(gen.as_ref(), speaker, &params, seed)?.text, None),
    };
    emb.save()?;
    write_json(
        &a.out,
        &stamp,
        &RespondReport {
            mode: a.mode.clone(),
            history_len: history.len(),
            response: &response,
            selection: selection.as_ref(),
        },
    )?;
    println!("{speaker}: {response}");
    Ok(())
}

#[derive(Serialize)]
struct SelfPlayAggregate {
    runs: usize,
    mean_progression: Option<f64>,
    std_progression: Option<f64>,
    mean_ee_donation_percent: Option<f64>,
    failed_dialogues: usize,
}

#[derive(Serialize)]
struct SelfPlayFile {
    mode: String,
    aggregate: SelfPlayAggregate,
    runs: Vec<SelfPlayReport>,
}

fn plan_selfplay(a: &SelfPlayArgs) -> Result<()> {
    let mode = parse_mode(&a.mode)?;
    if a.seeds == 0 {
        return Err(Error::Argument("--seeds must be at least 1".into()).into());
    }
    let corpus = load_corpus(&a.corpus)?;
    let seeds: Vec<Dialogue> = corpus.dialogues.iter().take(a.dialogues.unwrap_or(usize::MAX)).cloned().collect();
    let gen = generator(&a.generator, a.provider.provider_url.as_deref(), Some(&corpus))?;
    let scoring = Scoring::open(a.model.as_deref(), a.pf_provider_url.as_deref())?;
    let emb = Embedding::open(&a.provider)?;
    let pf = scoring.scorer(&emb);
    let sentiment = a
        .sentiment
        .then(|| HttpSentiment::new(client(a.provider.provider_url.as_deref().expect("clap requires --provider-url"))));
    let stamp = Stamp::new("plan selfplay", a, a.seed);

    let runs: Vec<SelfPlayReport> = (0..a.seeds)
        .map(|r| {
            let opts = SelfPlayOptions {
                context: a.context,
                turns: a.turns,
                seed: derive_seed(a.seed, &format!("selfplay-{r}")),
                sentiment: sentiment.as_ref().map(|s| s as &dyn dialprog_core::corpus::SentimentProvider),
                ..SelfPlayOptions::default()
            };
            self_play(&seeds, mode.as_ref(), gen.as_ref(), pf.as_ref(), &opts)
        })
        .collect();
    emb.save()?;

    let total: usize = runs.iter().map(|r| r.summary.dialogues).sum();
    let failed: usize = runs.iter().map(|r| r.summary.failed).sum();
    let per_run = |f: fn(&SelfPlayReport) -> Option<f64>| runs.iter().filter_map(f).collect::<Vec<f64>>();
    let progression = mean_std(&per_run(|r| r.summary.mean_progression));
    let donation = mean_std(&per_run(|r| r.summary.ee_donation_percent));
    let file = SelfPlayFile {
        mode: mode.map_or_else(|| "none".to_string(), |m| m.to_string()),
        aggregate: SelfPlayAggregate {
            runs: runs.len(),
            mean_progression: progression.map(|p| p.0),
            std_progression: progression.map(|p| p.1),
            mean_ee_donation_percent: donation.map(|p| p.0),
            failed_dialogues: failed,
        },
        runs,
    };
    write_json(&a.out, &stamp, &file)?;
    if total > 0 && failed == total {
        let first = file.runs.iter().flat_map(|r| &r.transcripts).find_map(|t| t.error.clone()).unwrap_or_default();
        let err = if first.starts_with("provider error") {
            Error::Provider(format!("every self-play dialogue failed; first: {first}"))
        } else {
            Error::Validation(format!("every self-play dialogue failed; first: {first}"))
        };
        return Err(err.into());
    }
    println!(
        "{} runs x {} dialogues, mean progression {}",
        file.aggregate.runs,
        seeds.len(),
        file.aggregate.mean_progression.map_or("n/a".into(), |p| format!("{p:.4}"))
    );
    Ok(())
}

#[derive(Serialize)]
struct AutoFile {
    #[serde(flatten)]
    metrics: dialprog_core::eval::AutoMetrics,
}

fn eval_auto(a: &EvalAutoArgs) -> Result<()> {
    let mf = read_model(&a.model)?;
    let stamp = Stamp::new("eval auto", a, mf.seed);
    let corpus = load_corpus(&a.corpus)?;
    let acc = acceptability_column(&corpus, &a.corpus)?;
    let emb = Embedding::open(&a.provider)?;
    let traces = Scoring::Model(mf).traces(&corpus.dialogues, &emb)?;
    emb.save()?;
    let metrics = auto_metrics(&traces, &acc)?;
    write_json(&a.out, &stamp, &AutoFile { metrics: metrics.clone() })?;
    if let Some(csv) = &a.csv {
        let mut body = String::from("dialogue_id,slope,turn_slope,final,acceptability\n");
        for ((d, t), v) in corpus.dialogues.iter().zip(&traces).zip(&acc) {
            let turn_slope = least_squares(&turn_values(&t.turn_values)).0;
            let _ = writeln!(body, "{},{},{},{},{}", d.id, t.slope, turn_slope, t.final_value(), v);
        }
        write_csv(csv, &stamp, &body)?;
    }
    println!(
        "n={} MAE={:.4} slope r={:.4} (p={:.3e})",
        metrics.dialogues, metrics.mae, metrics.slope_r.r, metrics.slope_r.p
    );
    Ok(())
}

fn eval_manual(a: &EvalManualArgs) -> Result<()> {
    let mf = read_model(&a.model)?;
    let stamp = Stamp::new("eval manual", a, mf.seed);
    let corpus = load_corpus(&a.corpus)?;
    let annotations = AnnotationSet::load(&a.annotations)?;
    let ids: std::collections::BTreeSet<&str> = annotations
        .by_annotator
        .values()
        .flat_map(|m| m.keys().map(String::as_str))
        .collect();
    let rated: Vec<Dialogue> = corpus.dialogues.iter().filter(|d| ids.contains(d.id.as_str())).cloned().collect();
    let emb = Embedding::open(&a.provider)?;
    let traces: BTreeMap<String, ProgressionTrace> = if rated.is_empty() {
        BTreeMap::new()
    } else {
        let t = Scoring::Model(mf).traces(&rated, &emb)?;
        rated.iter().map(|d| d.id.clone()).zip(t).collect()
    };
    emb.save()?;
    let report = manual_metrics(&traces, &annotations)?;
    write_json(&a.out, &stamp, &report)?;
    if let Some(csv) = &a.csv {
        let mut body = String::from("annotator,utt,utt_sl,dlg_sl,dlg_sl_f\n");
        let rows = report.per_annotator.iter().map(|(k, v)| (k.as_str(), v)).chain([("mean", &report.mean)]);
        for (who, s) in rows {
            let _ = writeln!(body, "{who},{},{},{},{}", s.utt, s.utt_sl, s.dlg_sl, s.dlg_sl_f);
        }
        write_csv(csv, &stamp, &body)?;
    }
    println!(
        "{} annotators, mean UTT {:.4} DLG_SL {:.4}",
        report.per_annotator.len(),
        report.mean.utt,
        report.mean.dlg_sl
    );
    Ok(())
}

fn tune_grid(a: &TuneGridArgs) -> Result<()> {
    let spec: GridSpec = read_json(&a.spec)?;
    spec.validate()?;
    let stamp = Stamp::new("tune grid", &(a, &spec), a.seed);
    let corpus = load_corpus(&a.corpus)?;
    let (train, val) = split_train_test(&corpus, a.val_fraction, derive_seed(a.seed, "validation-split"))?;
    let emb = Embedding::open(&a.provider)?;
    let train_u = embed_corpus(&train, &emb.provider)?;
    let val_u = embed_corpus(&val, &emb.provider)?;
    let train_acc = acceptability_column(&train, &a.corpus)?;
    let val_acc = acceptability_column(&val, &a.corpus)?;
    let data = TuneData {
        train: &train_u,
        train_acceptability: &train_acc,
        val: &val_u,
        val_acceptability: &val_acc,
        seed: derive_seed(a.seed, "gds"),
    };
    log::info!("evaluating {} configurations", spec.len());
    let report: GridReport = grid_search(&spec, &data, !a.serial)?;
    write_json(&a.out, &stamp, &report)?;
    if let Some(csv) = &a.csv {
        write_csv(csv, &stamp, &report.to_csv())?;
    }
    let best = report.best().ok_or_else(|| validation("every configuration was degenerate"))?;
    if let Some(path) = &a.model_out {
        let all = embed_corpus(&corpus, &emb.provider)?;
        let acc = acceptability_column(&corpus, &a.corpus)?;
        let model = retrain(&best.config, &all, &acc, derive_seed(a.seed, "gds"))?;
        write_json(
            path,
            &stamp,
            &ModelFile {
                proximity: best.config.proximity,
                model,
                seed: a.seed,
            },
        )?;
    }
    emb.save()?;
    println!(
        "{} configurations evaluated; best #{} r={:.4}",
        report.evaluations,
        best.index,
        best.score.expect("best has a score")
    );
    Ok(())
}
