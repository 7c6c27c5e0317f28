//! JSON inference endpoint over one loaded classifier.

use std::net::SocketAddr;
use std::sync::Arc;

use anyhow::{Context, Result};
use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use pseudolabel::model::Classifier;
use pseudolabel::textpipe::SentimentLabel;
use serde::Serialize;
use serde_json::{json, Value};

pub const MAX_BODY_BYTES: usize = 64 * 1024;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Probabilities {
    pub negative: f64,
    pub neutral: f64,
    pub positive: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SentimentResponse {
    pub label: SentimentLabel,
    pub probabilities: Probabilities,
}

type Model = Arc<Classifier<f32>>;

fn error(status: StatusCode, msg: impl Into<String>) -> Response {
    (status, Json(json!({ "error": msg.into() }))).into_response()
}

async fn sentiment(State(model): State<Model>, body: Bytes) -> Response {
    let value: Value = match serde_json::from_slice(&body) {
        Ok(v) => v,
        Err(e) => return error(StatusCode::BAD_REQUEST, format!("invalid JSON: {e}")),
    };
    let text = match value.get("text") {
        None => return error(StatusCode::BAD_REQUEST, "missing field: text"),
        Some(Value::String(s)) => s.clone(),
        Some(_) => return error(StatusCode::BAD_REQUEST, "invalid field: text must be a string"),
    };
    let prediction = match tokio::task::spawn_blocking(move || model.predict(&text)).await {
        Ok(Ok(p)) => p,
        Ok(Err(e)) => return error(StatusCode::BAD_REQUEST, e.to_string()),
        Err(e) => return error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
    };
    let p = &prediction.probs;
    Json(SentimentResponse {
        label: prediction.label,
        probabilities: Probabilities {
            negative: p[SentimentLabel::Negative.index()],
            neutral: p[SentimentLabel::Neutral.index()],
            positive: p[SentimentLabel::Positive.index()],
        },
    })
    .into_response()
}

pub fn router(model: Classifier<f32>) -> Router {
    Router::new()
        .route("/sentiment", post(sentiment))
        .route("/health", get(|| async { StatusCode::OK }))
        .layer(DefaultBodyLimit::max(MAX_BODY_BYTES))
        .with_state(Arc::new(model))
}

/// Serves until Ctrl-C.
pub async fn serve(model: Classifier<f32>, addr: SocketAddr) -> Result<()> {
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .with_context(|| format!("binding {addr}"))?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(model))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
