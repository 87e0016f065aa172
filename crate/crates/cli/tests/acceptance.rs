//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use affecton_core::corpus::{load_pairs_tsv, split, tokenize, DialogPair, MappedPair};
use affecton_core::decoder::{greedy_decode, AffectTarget, DecodeMode, Decoder, DecoderConfig, Preset};
use affecton_core::langmodel::{
    FixedModel, LanguageModel, NGramModel, TokenDistribution, TokenId, TrainConfig, UniformModel, Vocabulary,
};
use affecton_core::lemmatizer::LemmaRules;
use affecton_core::lexicon::{AffectiveLexicon, VadPoint};
use affecton_core::metrics::{bleu, cohen_kappa, pearson, perplexity, SentimentLexicon};
use affecton_core::pipeline::{dialog_sequences, evaluate, utterance_sequences, Engine, EvalReport};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TRAIN_FRACTION: f64 = 0.5;
const SPLIT_SEED: u64 = 0;
const WORDS: [&str; 8] = ["calm", "dark", "glad", "joy", "mild", "rage", "sad", "warm"];
const ADJACENT_ALLOWANCE: f64 = 0.02;

type Outcome = Result<String, String>;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

struct Fixture {
    pairs: Vec<DialogPair>,
    heldout: Vec<DialogPair>,
    engine: Engine,
    reference: NGramModel,
    sentiment: SentimentLexicon,
}

impl Fixture {
    fn load() -> Self {
        let dir = fixtures();
        let pairs = load_pairs_tsv(BufReader::new(File::open(dir.join("pairs.tsv")).unwrap())).unwrap();
        let lexicon =
            AffectiveLexicon::load("fixture", BufReader::new(File::open(dir.join("lexicon.tsv")).unwrap())).unwrap();
        let (train, heldout) = split(&pairs, TRAIN_FRACTION, SPLIT_SEED).unwrap();
        let generator = NGramModel::train(&dialog_sequences(&train), TrainConfig::default()).unwrap();
        let reference = NGramModel::train(&utterance_sequences(&heldout), TrainConfig::default()).unwrap();
        let sentiment = SentimentLexicon::from_affective(&lexicon, LemmaRules::default());
        Fixture {
            pairs,
            heldout,
            engine: Engine::new(generator, lexicon, LemmaRules::default()),
            reference,
            sentiment,
        }
    }

    fn map(&self, preset: Preset, lambda: f64, k: usize) -> Vec<MappedPair> {
        let config = DecoderConfig::new(lambda, k, AffectTarget::preset(preset), DecodeMode::TeacherForced);
        self.engine.map_corpus(&self.pairs, &config, false, 4).unwrap()
    }

    fn eval(&self, mapped: Vec<MappedPair>) -> EvalReport {
        let name = mapped[0].target.clone();
        evaluate(&BTreeMap::from([(name, mapped)]), &self.reference, &self.sentiment).unwrap()
    }
}

/// Runs of mapping shared by several criteria.
struct Sweeps {
    valence: Vec<(Preset, EvalReport)>,
    lambdas: Vec<(f64, EvalReport)>,
    ks: Vec<(usize, EvalReport)>,
    mapped: Vec<Vec<MappedPair>>,
}

fn sweeps(fx: &Fixture) -> Sweeps {
    let mut mapped = Vec::new();
    let mut run = |p: Preset, lambda: f64, k: usize| {
        let m = fx.map(p, lambda, k);
        mapped.push(m.clone());
        fx.eval(m)
    };
    let valence = [Preset::Hhh, Preset::Mlm, Preset::Lml]
        .into_iter()
        .map(|p| (p, run(p, 0.5, 30)))
        .collect::<Vec<_>>();
    let lambdas = [0.3, 0.5, 0.7, 1.0]
        .into_iter()
        .map(|l| {
            (
                l,
                if l == 0.5 {
                    valence[0].1.clone()
                } else {
                    run(Preset::Hhh, l, 30)
                },
            )
        })
        .collect::<Vec<_>>();
    let ks = [20, 30, 50]
        .into_iter()
        .map(|k| {
            (
                k,
                if k == 30 {
                    valence[0].1.clone()
                } else {
                    run(Preset::Hhh, 0.5, k)
                },
            )
        })
        .collect::<Vec<_>>();
    Sweeps {
        valence,
        lambdas,
        ks,
        mapped,
    }
}

/// Monotone in the given direction except for at most one adjacent pair
/// that moves the wrong way by no more than the relative allowance.
fn trend_holds(values: &[f64], increasing: bool) -> bool {
    let mut violations = 0;
    for w in values.windows(2) {
        let (a, b) = (w[0], w[1]);
        let wrong = if increasing { b < a } else { b > a };
        if wrong {
            violations += 1;
            if (b - a).abs() / a.abs() > ADJACENT_ALLOWANCE {
                return false;
            }
        }
    }
    violations <= 1
}

fn random_point(rng: &mut ChaCha8Rng) -> VadPoint {
    VadPoint::new(rng.random(), rng.random(), rng.random()).unwrap()
}

struct Toy {
    model: FixedModel,
    lexicon: AffectiveLexicon,
    target: VadPoint,
}

fn toy(rng: &mut ChaCha8Rng) -> Toy {
    let vocab = Vocabulary::from_tokens(WORDS);
    let mut scores: Vec<f64> = (0..vocab.len()).map(|_| rng.random::<f64>()).collect();
    for reserved in scores.iter_mut().take(4) {
        *reserved = 0.0;
    }
    Toy {
        model: FixedModel::new(vocab, TokenDistribution::from_scores(scores).unwrap()).unwrap(),
        lexicon: AffectiveLexicon::from_entries("toy", WORDS.map(|w| (w, random_point(rng)))),
        target: random_point(rng),
    }
}

fn softmax(xs: &[f64]) -> Vec<f64> {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = xs.iter().map(|x| (x - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.iter().map(|x| x / s).collect()
}

fn greedy_degeneracy(fx: &Fixture) -> Outcome {
    let config = DecoderConfig::new(0.0, 30, AffectTarget::preset(Preset::Hhh), DecodeMode::FreeRunning);
    let decoder = fx.engine.decoder();
    for pair in fx.heldout.iter().take(50) {
        let (steered, _) = decoder.generate_response(&pair.source, &config).unwrap();
        let greedy = greedy_decode(&fx.engine.model, &pair.source, config.max_len).unwrap();
        if steered != greedy {
            return Err(format!("{}: {steered:?} != {greedy:?}", pair.id));
        }
    }
    Ok("50 sources token-identical".into())
}

fn full_weight_optimality() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let rules = LemmaRules::default();
    let mut steps = 0;
    for _ in 0..200 {
        let t = toy(&mut rng);
        let k = t.model.vocab().len();
        let config = DecoderConfig::new(1.0, k, AffectTarget::custom(t.target), DecodeMode::TeacherForced);
        let decoder = Decoder::new(&t.model, &t.lexicon, &rules);
        let truth: Vec<&str> = (0..6).map(|_| WORDS[rng.random_range(0..WORDS.len())]).collect();
        let (mapped, _) = decoder.map_utterance(&[] as &[&str], &truth, &config).unwrap();
        let best = WORDS
            .iter()
            .map(|w| t.lexicon.lookup(w).unwrap().distance(&t.target))
            .fold(f64::INFINITY, f64::min);
        for word in &mapped {
            let d = t.lexicon.lookup(word).unwrap().distance(&t.target);
            if d != best {
                return Err(format!("chose {word} at distance {d}, minimum is {best}"));
            }
            steps += 1;
        }
    }
    Ok(format!("{steps} steps, every choice an argmin"))
}

fn fusion_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let rules = LemmaRules::default();
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let t = toy(&mut rng);
        let lambda: f64 = rng.random();
        let k = rng.random_range(1..=8);
        let vocab = t.model.vocab();
        let dist = t.model.next_distribution(&[]).unwrap();
        let mut words: Vec<TokenId> = WORDS.iter().map(|w| vocab.id(w).unwrap()).collect();
        words.sort_by(|a, b| dist.prob(*b).total_cmp(&dist.prob(*a)).then(a.cmp(b)));
        words.truncate(k);
        let pi_t = softmax(&words.iter().map(|w| dist.prob(*w)).collect::<Vec<_>>());
        let neg_d: Vec<f64> = words
            .iter()
            .map(|w| -t.lexicon.lookup(vocab.token(*w).unwrap()).unwrap().distance(&t.target))
            .collect();
        let pi_d = softmax(&neg_d);
        let expected: Vec<f64> = (0..words.len())
            .map(|i| (1.0 - lambda) * pi_t[i] + lambda * pi_d[i])
            .collect();

        let config = DecoderConfig::new(lambda, k, AffectTarget::custom(t.target), DecodeMode::TeacherForced);
        let decoder = Decoder::new(&t.model, &t.lexicon, &rules);
        let (chosen, trace) = decoder.select_next(&[], &config, 0, Some("calm")).unwrap();
        if trace.candidates.len() != words.len() {
            return Err(format!(
                "{} candidates, expected {}",
                trace.candidates.len(),
                words.len()
            ));
        }
        for (c, (id, p)) in trace.candidates.iter().zip(words.iter().zip(&expected)) {
            if c.id != *id {
                return Err(format!("candidate order differs: {:?} vs {:?}", c.id, id));
            }
            worst = worst.max((c.fused_prob - p).abs());
        }
        let mut best = 0;
        for i in 1..words.len() {
            if expected[i] > expected[best] || (expected[i] == expected[best] && words[i] < words[best]) {
                best = i;
            }
        }
        if chosen != vocab.token(words[best]).unwrap() {
            return Err(format!("argmax {chosen} != {}", vocab.token(words[best]).unwrap()));
        }
    }
    if worst > 1e-12 {
        return Err(format!("max entry deviation {worst:e} > 1e-12"));
    }
    Ok(format!("1000 instances, max deviation {worst:e}"))
}

fn lambda_monotonicity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let rules = LemmaRules::default();
    for n in 0..200 {
        let t = toy(&mut rng);
        let k = rng.random_range(1..=8);
        let decoder = Decoder::new(&t.model, &t.lexicon, &rules);
        let mut last = f64::INFINITY;
        for step in 0..=10 {
            let lambda = step as f64 / 10.0;
            let config = DecoderConfig::new(lambda, k, AffectTarget::custom(t.target), DecodeMode::TeacherForced);
            let (chosen, _) = decoder.select_next(&[], &config, 0, Some("joy")).unwrap();
            let d = t.lexicon.lookup(&chosen).unwrap().distance(&t.target);
            if d > last {
                return Err(format!("set {n}, lambda {lambda}: distance {d} > {last}"));
            }
            last = d;
        }
    }
    Ok("200 candidate sets, 11 lambda values each".into())
}

fn valence_pull(s: &Sweeps) -> Outcome {
    let mean = |p: Preset| s.valence.iter().find(|(q, _)| *q == p).unwrap().1.targets[0].mean_compound;
    let (hhh, mlm, lml) = (mean(Preset::Hhh), mean(Preset::Mlm), mean(Preset::Lml));
    let original = s.valence[0].1.original.mean_compound;
    let detail = format!("HHH {hhh:.4} > MLM {mlm:.4} > LML {lml:.4}, original {original:.4}");
    if hhh > mlm && mlm > lml && hhh > original && lml < original {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn perplexity_trend(s: &Sweeps) -> Outcome {
    let ppl: Vec<f64> = s.lambdas.iter().map(|(_, r)| r.targets[0].perplexity).collect();
    let detail = format!("lambda 0.3/0.5/0.7/1.0 -> {ppl:.3?}");
    if trend_holds(&ppl, true) {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn bleu_trends(s: &Sweeps) -> Outcome {
    let by_lambda: Vec<f64> = s.lambdas.iter().map(|(_, r)| r.targets[0].bleu).collect();
    let by_k: Vec<f64> = s.ks.iter().map(|(_, r)| r.targets[0].bleu).collect();
    let detail = format!("lambda -> {by_lambda:.4?}; k 20/30/50 -> {by_k:.4?}");
    if trend_holds(&by_lambda, false) && trend_holds(&by_k, false) {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn pass_through(fx: &Fixture, s: &Sweeps) -> Outcome {
    let mut checked = 0;
    for run in &s.mapped {
        for m in run {
            for (orig, new) in m.original.iter().zip(&m.mapped) {
                if !fx.engine.lexicon.contains(&fx.engine.rules.lemmatize(orig)) {
                    if orig != new {
                        return Err(format!("{}: {orig} became {new}", m.id));
                    }
                    checked += 1;
                }
            }
        }
    }
    Ok(format!("{checked} out-of-lexicon positions unchanged"))
}

fn metric_units(fx: &Fixture) -> Outcome {
    let responses: Vec<Vec<String>> = fx.pairs.iter().map(|p| p.response.clone()).collect();
    let self_bleu = bleu(&responses, &responses, 4).unwrap().score;
    if self_bleu != 1.0 {
        return Err(format!("BLEU(X, X) = {self_bleu}"));
    }
    let uniform = UniformModel::new(fx.reference.vocab().clone());
    let v = uniform.vocab().len() as f64;
    let ppl = perplexity(&uniform, &utterance_sequences(&fx.heldout)).unwrap();
    if (ppl - v).abs() > 1e-6 {
        return Err(format!("uniform perplexity {ppl} vs V = {v}"));
    }
    let happy = fx.sentiment.valence_score(&tokenize("she was very happy !")).compound;
    let sad = fx.sentiment.valence_score(&tokenize("she was very sad !")).compound;
    if !(happy > 0.05 && sad < -0.05) {
        return Err(format!("golden compounds happy {happy}, sad {sad}"));
    }
    let xs: Vec<f64> = (0..50).map(|i| ((i * 37) % 101) as f64 / 7.0).collect();
    let r = pearson(&xs, &xs).unwrap();
    if r != 1.0 {
        return Err(format!("pearson(x, x) = {r}"));
    }
    let kappa = cohen_kappa(&[0, 0, 1, 1], &[0, 1, 0, 1]).unwrap().kappa;
    if kappa.abs() > 1e-12 {
        return Err(format!("kappa {kappa}"));
    }
    Ok(format!(
        "BLEU 1, uniform perplexity {ppl:.6} (V {v}), golden {happy:.3}/{sad:.3}, pearson 1, kappa 0"
    ))
}

fn determinism() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_affecton");
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let fx = fixtures();
    let run = |args: &[&str]| -> Result<(), String> {
        let out = Command::new(bin).args(args).output().map_err(|e| e.to_string())?;
        if out.status.success() {
            Ok(())
        } else {
            Err(String::from_utf8_lossy(&out.stderr).into_owned())
        }
    };
    let p = |name: &str| dir.path().join(name).display().to_string();
    let corpus = fx.join("pairs.tsv").display().to_string();
    let lexicon = fx.join("lexicon.tsv").display().to_string();
    run(&[
        "train",
        "--corpus",
        &corpus,
        "--model",
        &p("gen.lm"),
        "--ref-model",
        &p("ref.lm"),
        "--seed",
        "0",
    ])?;
    for out in ["a.tsv", "b.tsv"] {
        run(&[
            "map",
            "--model",
            &p("gen.lm"),
            "--lexicon",
            &lexicon,
            "--corpus",
            &corpus,
            "--target",
            "HHH",
            "--lambda",
            "0.5",
            "--k",
            "30",
            "--out",
            &p(out),
        ])?;
    }
    let a = std::fs::read(p("a.tsv")).map_err(|e| e.to_string())?;
    let b = std::fs::read(p("b.tsv")).map_err(|e| e.to_string())?;
    if a == b && !a.is_empty() {
        Ok(format!("two map runs, {} identical bytes", a.len()))
    } else {
        Err("map outputs differ".into())
    }
}

fn main() {
    let start = Instant::now();
    let fx = Fixture::load();
    let s = sweeps(&fx);
    let results: Vec<(&str, Outcome)> = vec![
        ("lambda-0 equals greedy decoding", greedy_degeneracy(&fx)),
        ("lambda-1 picks a distance argmin", full_weight_optimality()),
        ("fusion matches direct reference", fusion_oracle()),
        ("distance non-increasing in lambda", lambda_monotonicity()),
        ("valence pull ordering", valence_pull(&s)),
        ("perplexity non-decreasing in lambda", perplexity_trend(&s)),
        ("BLEU non-increasing in lambda and k", bleu_trends(&s)),
        ("out-of-lexicon positions pass through", pass_through(&fx, &s)),
        ("metric unit checks", metric_units(&fx)),
        ("map output is deterministic", determinism()),
    ];
    let mut failed = 0;
    for (name, outcome) in &results {
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed in {:.1}s",
        results.len() - failed,
        start.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
