use std::collections::{BTreeMap, HashMap};
use std::io::Write;

use affecton_client::Client;
use affecton_core::api::{GenerateRequest, MapRequest, PairInput, Steering, TargetSpec};
use affecton_core::corpus::{
    detokenize, load_mapped_tsv, load_pairs_tsv, split, write_mapped_tsv, DialogPair, MappedPair,
};
use affecton_core::decoder::{DecodeMode, DecoderConfig, StepTrace};
use affecton_core::langmodel::{LanguageModel, NGramModel, TrainConfig};
use affecton_core::lemmatizer::LemmaRules;
use affecton_core::lexicon::AffectiveLexicon;
use affecton_core::metrics::SentimentLexicon;
use affecton_core::pipeline::{default_workers, dialog_sequences, evaluate, summarize, utterance_sequences, Engine};
use affecton_core::rating::{build_rating_set, load_golden_tsv, GoldenPair};
use anyhow::Context;
use serde::Serialize;

use crate::args::{EngineArgs, EvalArgs, GenerateArgs, MapArgs, SelectArgs, SteeringArgs, TrainArgs};
use crate::paths::{CliError, CliResult, Paths};

fn load_lexicon(paths: &Paths, path: &std::path::Path) -> CliResult<AffectiveLexicon> {
    let name = paths.resolve(path).display().to_string();
    Ok(AffectiveLexicon::load(&name, paths.open(path)?).with_context(|| format!("bad lexicon {name}"))?)
}

fn load_rules(paths: &Paths, path: Option<&std::path::Path>) -> CliResult<LemmaRules> {
    let reader = path.map(|p| paths.open(p)).transpose()?;
    Ok(LemmaRules::load(reader).context("bad lemma table")?)
}

fn load_model(paths: &Paths, path: &std::path::Path) -> CliResult<NGramModel> {
    Ok(NGramModel::load(paths.open(path)?).with_context(|| format!("bad model file {}", path.display()))?)
}

fn load_pairs(paths: &Paths, path: &std::path::Path) -> CliResult<Vec<DialogPair>> {
    Ok(load_pairs_tsv(paths.open(path)?).with_context(|| format!("bad corpus {}", path.display()))?)
}

fn load_engine(paths: &Paths, args: &EngineArgs) -> CliResult<Engine> {
    let missing = |flag: &str| CliError::Usage(format!("{flag} is required without --server"));
    let model = load_model(paths, args.model.as_deref().ok_or_else(|| missing("--model"))?)?;
    let lexicon = load_lexicon(paths, args.lexicon.as_deref().ok_or_else(|| missing("--lexicon"))?)?;
    let rules = load_rules(paths, args.lemmas.as_deref())?;
    Ok(Engine::new(model, lexicon, rules))
}

fn steering(args: &SteeringArgs, max_len: Option<usize>) -> Steering {
    Steering {
        target: TargetSpec::from(&args.target),
        lambda: args.lambda,
        k: args.k,
        renorm: args.renorm.into(),
        max_len,
    }
}

fn decoder_config(args: &SteeringArgs, mode: DecodeMode, max_len: usize) -> CliResult<DecoderConfig> {
    let mut config = DecoderConfig::new(args.lambda, args.k, args.target, mode);
    config.renorm = args.renorm.into();
    config.max_len = max_len;
    config.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(config)
}

fn block_on<F: std::future::Future>(f: F) -> CliResult<F::Output> {
    let rt = tokio::runtime::Builder::new_current_thread().enable_all().build()?;
    Ok(rt.block_on(f))
}

fn write_jsonl<T: Serialize>(out: &mut impl Write, records: impl IntoIterator<Item = T>) -> CliResult<()> {
    for r in records {
        serde_json::to_writer(&mut *out, &r)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct PairStep<'a> {
    id: &'a str,
    #[serde(flatten)]
    step: &'a StepTrace,
}

pub fn train(paths: &Paths, args: &TrainArgs) -> CliResult<()> {
    let pairs = load_pairs(paths, &args.corpus)?;
    let config = TrainConfig::with_order(args.order as usize, args.delta);
    let (train, heldout) = match &args.ref_model {
        Some(_) => split(&pairs, args.split, args.seed).map_err(|e| CliError::Usage(e.to_string()))?,
        None => (pairs, Vec::new()),
    };
    let model = NGramModel::train(&dialog_sequences(&train), config)?;
    let mut out = paths.create(&args.model)?;
    model.save(&mut out)?;
    out.flush()?;
    println!(
        "generator: {} pairs, vocabulary {}, tokens {}",
        train.len(),
        model.vocab().len(),
        model.token_count()
    );
    if let Some(path) = &args.ref_model {
        let reference = NGramModel::train(&utterance_sequences(&heldout), config)?;
        let mut out = paths.create(path)?;
        reference.save(&mut out)?;
        out.flush()?;
        println!(
            "reference: {} pairs, vocabulary {}, tokens {}",
            heldout.len(),
            reference.vocab().len(),
            reference.token_count()
        );
    }
    Ok(())
}

pub fn generate(paths: &Paths, args: &GenerateArgs) -> CliResult<()> {
    let (text, traces) = match &args.engine.server {
        Some(url) => {
            let req = GenerateRequest {
                source: args.source.clone(),
                steering: steering(&args.steering, Some(args.max_len)),
                trace: args.trace.is_some(),
            };
            let res = block_on(Client::new(url.clone()).generate(&req))??;
            (res.response, res.trace.unwrap_or_default())
        }
        None => {
            let config = decoder_config(&args.steering, DecodeMode::FreeRunning, args.max_len)?;
            let engine = load_engine(paths, &args.engine)?;
            let g = engine.generate(&args.source, &config)?;
            (g.text, g.traces)
        }
    };
    if let Some(path) = &args.trace {
        write_jsonl(&mut paths.create(path)?, &traces)?;
    }
    println!("{text}");
    Ok(())
}

pub fn map(paths: &Paths, args: &MapArgs) -> CliResult<()> {
    let pairs = load_pairs(paths, &args.corpus)?;
    let keep_traces = args.trace.is_some();
    let mapped = match &args.engine.server {
        Some(url) => {
            let req = MapRequest {
                pairs: pairs.iter().map(PairInput::from).collect(),
                steering: steering(&args.steering, None),
                trace: keep_traces,
            };
            block_on(Client::new(url.clone()).map(&req))??.mapped
        }
        None => {
            let config = decoder_config(
                &args.steering,
                DecodeMode::TeacherForced,
                affecton_core::decoder::DEFAULT_MAX_LEN,
            )?;
            let engine = load_engine(paths, &args.engine)?;
            let workers = args.workers.unwrap_or_else(default_workers);
            engine.map_corpus(&pairs, &config, keep_traces, workers)?
        }
    };
    let mut out = paths.create(&args.out)?;
    write_mapped_tsv(&mapped, &mut out)?;
    out.flush()?;
    if let Some(path) = &args.trace {
        let steps = mapped
            .iter()
            .flat_map(|m| m.traces.iter().map(|step| PairStep { id: &m.id, step }));
        write_jsonl(&mut paths.create(path)?, steps)?;
    }
    let s = summarize(&mapped, args.ngram);
    println!(
        "utterances {}, changed {}, substituted tokens {}, mean {}-gram difference {:.4}",
        s.utterances, s.changed_utterances, s.substituted_tokens, args.ngram, s.mean_ngram_diff
    );
    Ok(())
}

fn load_mapped_files(paths: &Paths, files: &[std::path::PathBuf]) -> CliResult<BTreeMap<String, Vec<MappedPair>>> {
    let mut by_target: BTreeMap<String, Vec<MappedPair>> = BTreeMap::new();
    for file in files {
        let rows = load_mapped_tsv(paths.open(file)?).with_context(|| format!("bad mapped file {}", file.display()))?;
        for row in rows {
            by_target.entry(row.target.clone()).or_default().push(row);
        }
    }
    if by_target.is_empty() {
        return Err(CliError::Usage("mapped files are empty".into()));
    }
    Ok(by_target)
}

pub fn eval(paths: &Paths, args: &EvalArgs) -> CliResult<()> {
    let by_target = load_mapped_files(paths, &args.mapped)?;
    let reference = load_model(paths, &args.ref_model)?;
    let lexicon = load_lexicon(paths, &args.lexicon)?;
    let sentiment = SentimentLexicon::from_affective(&lexicon, load_rules(paths, args.lemmas.as_deref())?);
    let report = evaluate(&by_target, &reference, &sentiment)?;
    let json = serde_json::to_string_pretty(&report)?;
    match &args.out {
        Some(path) => {
            let mut out = paths.create(path)?;
            writeln!(out, "{json}")?;
            out.flush()?;
            println!(
                "{:<12} {:>6} {:>9} {:>11} {:>7}",
                "target", "n", "valence", "perplexity", "bleu"
            );
            for row in std::iter::once(&report.original).chain(&report.targets) {
                println!(
                    "{:<12} {:>6} {:>9.4} {:>11.3} {:>7.4}",
                    row.target, row.utterance_count, row.mean_compound, row.perplexity, row.bleu
                );
            }
        }
        None => println!("{json}"),
    }
    Ok(())
}

pub fn select(paths: &Paths, args: &SelectArgs) -> CliResult<()> {
    let by_target = load_mapped_files(paths, &args.mapped)?;
    let sources: HashMap<String, String> = match &args.corpus {
        Some(path) => load_pairs(paths, path)?
            .into_iter()
            .map(|p| (p.id.clone(), detokenize(&p.source)))
            .collect(),
        None => HashMap::new(),
    };
    let golden: Vec<GoldenPair> = match &args.golden {
        Some(path) => load_golden_tsv(paths.open(path)?).context("bad golden file")?,
        None => Vec::new(),
    };
    let set = build_rating_set(&by_target, &sources, &golden, args.n, args.ngram, args.seed);
    let mut out = paths.create(&args.out)?;
    set.write_jsonl(&mut out)?;
    out.flush()?;
    println!(
        "{} items ({} golden at positions {:?}), seed {}",
        set.items.len(),
        golden.len(),
        set.golden_positions,
        set.seed
    );
    Ok(())
}
