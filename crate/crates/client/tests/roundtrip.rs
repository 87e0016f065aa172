use std::fs::{self, File};

use affecton_client::{Client, ClientError};
use affecton_core::api::{ChatRequest, GenerateRequest, MapRequest, PairInput, Steering, TargetSpec};
use affecton_core::corpus::DialogPair;
use affecton_core::langmodel::{NGramModel, TrainConfig};
use affecton_core::pipeline::dialog_sequences;
use affecton_core::rating::{ItemUtterance, RatingDimension, RatingItem, RatingSubmission};
use affecton_service::{build, ServiceConfig};
use reqwest::StatusCode;
use tempfile::TempDir;

const LEXICON: &str = "term\tvalence\tarousal\tdominance\n\
happy\t0.96\t0.73\t0.85\n\
sad\t0.05\t0.45\t0.20\n\
great\t0.92\t0.60\t0.74\n\
awful\t0.06\t0.76\t0.33\n";

async fn spawn() -> (TempDir, Client) {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let pairs: Vec<DialogPair> = [
        ("a", "how was it ?", "it was great ."),
        ("b", "how was it ?", "it was awful ."),
        ("c", "how are you ?", "i am happy ."),
        ("d", "how are you ?", "i am sad ."),
    ]
    .iter()
    .map(|(i, s, r)| DialogPair::new(i, s, r))
    .collect();
    let model = NGramModel::train(&dialog_sequences(&pairs), TrainConfig::default()).unwrap();
    model.save(File::create(root.join("model.lm")).unwrap()).unwrap();
    fs::write(root.join("lexicon.tsv"), LEXICON).unwrap();
    let item = RatingItem {
        id: "HHH/a".into(),
        target: "HHH".into(),
        golden: false,
        preceding: Some("how was it?".into()),
        utterances: vec![
            ItemUtterance {
                role: "original".into(),
                text: "it was awful.".into(),
            },
            ItemUtterance {
                role: "mapped".into(),
                text: "it was great.".into(),
            },
        ],
    };
    fs::write(root.join("items.jsonl"), serde_json::to_string(&item).unwrap() + "\n").unwrap();

    let mut config = ServiceConfig::new(root.join("data"));
    config.model = Some(root.join("model.lm"));
    config.lexicon = Some(root.join("lexicon.tsv"));
    config.items = Some(root.join("items.jsonl"));
    let app = build(&config).unwrap();
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });
    (dir, Client::new(format!("http://{addr}")))
}

fn steering(lambda: f64) -> Steering {
    Steering {
        target: TargetSpec::Named("HHH".into()),
        lambda,
        k: 5,
        renorm: Default::default(),
        max_len: None,
    }
}

#[tokio::test]
async fn generate_and_map() {
    let (_dir, client) = spawn().await;
    assert!(client.health().await.unwrap().model_loaded);

    let req = GenerateRequest {
        source: "How are you?".into(),
        steering: steering(0.5),
        trace: true,
    };
    let a = client.generate(&req).await.unwrap();
    assert_eq!(a, client.generate(&req).await.unwrap());
    assert!(a.trace.is_some());

    let bad = GenerateRequest {
        steering: steering(-0.1),
        ..req
    };
    let err = client.generate(&bad).await.unwrap_err();
    assert_eq!(err.status(), Some(StatusCode::BAD_REQUEST));
    assert!(matches!(err, ClientError::Api { ref message, .. } if message.contains("lambda")));

    let map = MapRequest {
        pairs: vec![PairInput {
            id: "x".into(),
            source: "how was it?".into(),
            response: "it was awful.".into(),
        }],
        steering: steering(1.0),
        trace: false,
    };
    let res = client.map(&map).await.unwrap();
    assert_eq!(res.mapped.len(), 1);
    assert_eq!(res.mapped[0].original.len(), res.mapped[0].mapped.len());
}

#[tokio::test]
async fn chat_and_trace() {
    let (_dir, client) = spawn().await;
    let id = client.create_session().await.unwrap().session_id;
    let reply = client
        .chat(
            &id,
            &ChatRequest {
                text: "How was it?".into(),
                steering: steering(0.7),
            },
        )
        .await
        .unwrap();
    let session = client.session(&id).await.unwrap();
    assert_eq!(session.history.len(), 2);
    assert_eq!(session.history[1].text, reply.reply);
    assert_eq!(client.trace(&reply.trace_id).await.unwrap(), reply.trace);
    let missing = client.session("missing").await.unwrap_err();
    assert_eq!(missing.status(), Some(StatusCode::NOT_FOUND));
}

#[tokio::test]
async fn rating_round() {
    let (_dir, client) = spawn().await;
    let mut served = 0;
    while let Some(p) = client.next_rating("rater one").await.unwrap().prompt {
        let score = if p.dimension.is_continuous() { 70 } else { 2 };
        let sub = RatingSubmission {
            rater_id: "rater one".into(),
            unit_id: p.unit_id,
            dimension: p.dimension,
            score,
        };
        client.submit_rating(&sub).await.unwrap();
        served += 1;
    }
    assert_eq!(served, 10);
    let dup = RatingSubmission {
        rater_id: "rater one".into(),
        unit_id: "HHH/a:mapped".into(),
        dimension: RatingDimension::Valence,
        score: 1,
    };
    assert_eq!(
        client.submit_rating(&dup).await.unwrap_err().status(),
        Some(StatusCode::CONFLICT)
    );
    let report = client.export_ratings().await.unwrap();
    assert_eq!(report.records.len(), 10);
    assert!(report.agreement.iter().all(|a| !a.computable));
}
