//! Local HTTP/JSON service for interactive elicitation sessions.
//!
//! Routes (all bodies JSON, see `voi-protocol` for the shapes):
//!
//! | method | path | |
//! |---|---|---|
//! | POST | `/sessions` | create a session from a model file |
//! | GET | `/sessions/{id}` | revision and mutation history |
//! | GET | `/sessions/{id}/model` | current model in file format |
//! | POST | `/sessions/{id}/refine` | condition a variable on new parents |
//! | PUT | `/sessions/{id}/annotations/{paramref}` | attach or replace an annotation |
//! | POST | `/sessions/{id}/undo` | revert the last refine or annotation |
//! | POST | `/sessions/{id}/save` | write the model file to disk |
//! | GET | `/sessions/{id}/evaluate` | marginals, expected utilities, optimum |
//! | POST | `/sessions/{id}/voi` | value of observing chance variables |
//! | POST | `/sessions/{id}/focus` | refine recommendation for a cluster |
//! | GET | `/sessions/{id}/rank` | per-annotation recommendations |
//! | POST | `/sessions/{id}/sweep` | one-way sensitivity sweep |
//! | POST | `/sessions/{id}/bounds` | interval propagation |
//! | POST | `/distributions/tabulate` | fit and tabulate a distribution |
//!
//! Unknown sessions and parameters give 404, malformed or invalid bodies
//! 400 (with a `diagnostics` array for model validation failures), and a
//! mutation whose `expected_revision` is stale 409.

mod error;
mod session;

use std::net::SocketAddr;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, Method, StatusCode};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::Serialize;
use tower_http::cors::{Any, CorsLayer};
use tower_http::trace::TraceLayer;

use voi_core::confidence::DistributionEntry;
use voi_core::model::file::{save_model, ModelFile};
use voi_core::{intervals, sensitivity, voi, DecisionModel, ParamRef, ProbabilityInterval};
use voi_protocol::*;

pub use error::ApiError;
pub use session::{Session, Sessions, Snapshot};

/// Upper limit on Monte Carlo samples per request.
pub const MAX_SAMPLES: usize = 10_000_000;
/// Upper limit on sweep grid and tabulation sizes.
pub const MAX_POINTS: usize = 100_001;

#[derive(Clone, Default)]
pub struct AppState {
    pub sessions: Arc<Sessions>,
}

type ApiResult<T> = Result<Json<T>, ApiError>;

pub fn router(state: AppState) -> Router {
    let cors = CorsLayer::new()
        .allow_origin(Any)
        .allow_methods([Method::GET, Method::POST, Method::PUT])
        .allow_headers([header::CONTENT_TYPE]);
    Router::new()
        .route("/health", get(|| async { "ok" }))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(session_info))
        .route("/sessions/{id}/model", get(get_model))
        .route("/sessions/{id}/refine", post(refine))
        .route("/sessions/{id}/annotations/{paramref}", put(annotate))
        .route("/sessions/{id}/undo", post(undo))
        .route("/sessions/{id}/save", post(save))
        .route("/sessions/{id}/evaluate", get(evaluate))
        .route("/sessions/{id}/voi", post(observe))
        .route("/sessions/{id}/focus", post(focus))
        .route("/sessions/{id}/rank", get(rank))
        .route("/sessions/{id}/sweep", post(sweep))
        .route("/sessions/{id}/bounds", post(bounds))
        .route("/distributions/tabulate", post(tabulate))
        .layer(cors)
        .layer(TraceLayer::new_for_http())
        .with_state(state)
}

/// Serves the API on `addr` until ctrl-c.
pub async fn serve(addr: SocketAddr) -> std::io::Result<()> {
    serve_on(tokio::net::TcpListener::bind(addr).await?).await
}

/// Serves the API on an already bound listener until ctrl-c.
pub async fn serve_on(listener: tokio::net::TcpListener) -> std::io::Result<()> {
    tracing::info!(addr = %listener.local_addr()?, "listening");
    axum::serve(listener, router(AppState::default()))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

/// Bodies are parsed by hand so that malformed JSON gets the same error
/// shape as every other failure.
fn parse<T: DeserializeOwned>(body: &[u8]) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("malformed request body: {e}")))
}

fn parse_ref(text: &str) -> Result<ParamRef, ApiError> {
    text.parse()
        .map_err(|e: voi_core::Error| ApiError::bad_request(e.to_string()))
}

fn check_samples(samples: usize) -> Result<(), ApiError> {
    if samples > MAX_SAMPLES {
        return Err(ApiError::bad_request(format!(
            "at most {MAX_SAMPLES} samples per request"
        )));
    }
    Ok(())
}

/// Runs `f` against the latest committed model on the blocking pool.
async fn compute<T, F>(state: &AppState, id: &str, f: F) -> ApiResult<Revisioned<T>>
where
    T: Serialize + Send + 'static,
    F: FnOnce(&DecisionModel) -> Result<T, ApiError> + Send + 'static,
{
    let snapshot = state.sessions.get(id)?.snapshot();
    let body = tokio::task::spawn_blocking(move || f(&snapshot.model))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))??;
    Ok(Json(Revisioned {
        revision: snapshot.revision,
        body,
    }))
}

async fn create_session(
    State(state): State<AppState>,
    body: Bytes,
) -> Result<(StatusCode, Json<SessionInfo>), ApiError> {
    let file: ModelFile = parse(&body)?;
    let model = file.into_model()?;
    let session = state.sessions.create(model);
    tracing::info!(id = session.id(), "session created");
    Ok((StatusCode::CREATED, Json(session.info().await)))
}

async fn session_info(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<SessionInfo> {
    Ok(Json(state.sessions.get(&id)?.info().await))
}

async fn get_model(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<ModelSnapshot> {
    let snapshot = state.sessions.get(&id)?.snapshot();
    Ok(Json(ModelSnapshot {
        revision: snapshot.revision,
        model: ModelFile::from(snapshot.model.as_ref()),
    }))
}

async fn refine(State(state): State<AppState>, Path(id): Path<String>, body: Bytes) -> ApiResult<MutationResponse> {
    let session = state.sessions.get(&id)?;
    let req: RefineRequest = parse(&body)?;
    let op = Operation::Refine {
        target: req.target,
        extension: req.extension,
    };
    let done = session.mutate(op, req.expected_revision).await?;
    Ok(Json(MutationResponse {
        revision: done.revision,
        warnings: done.warnings,
    }))
}

async fn annotate(
    State(state): State<AppState>,
    Path((id, paramref)): Path<(String, String)>,
    body: Bytes,
) -> ApiResult<MutationResponse> {
    let session = state.sessions.get(&id)?;
    let target = parse_ref(&paramref)?;
    let req: AnnotationRequest = parse(&body)?;
    let expected = req.expected_revision;
    let op = Operation::Annotate {
        annotation: req.into_entry(target),
    };
    let done = session.mutate(op, expected).await?;
    Ok(Json(MutationResponse {
        revision: done.revision,
        warnings: done.warnings,
    }))
}

async fn undo(State(state): State<AppState>, Path(id): Path<String>, body: Bytes) -> ApiResult<MutationResponse> {
    let session = state.sessions.get(&id)?;
    let req: UndoRequest = if body.is_empty() {
        UndoRequest::default()
    } else {
        parse(&body)?
    };
    let done = session.undo(req.expected_revision).await?;
    Ok(Json(MutationResponse {
        revision: done.revision,
        warnings: done.warnings,
    }))
}

async fn save(State(state): State<AppState>, Path(id): Path<String>, body: Bytes) -> ApiResult<SaveResponse> {
    let snapshot = state.sessions.get(&id)?.snapshot();
    let req: SaveRequest = parse(&body)?;
    let path = req.path.clone();
    tokio::task::spawn_blocking(move || save_model(&snapshot.model, &path))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))??;
    Ok(Json(SaveResponse {
        revision: snapshot.revision,
        path: req.path,
    }))
}

async fn evaluate(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Revisioned<Evaluation>> {
    compute(&state, &id, |model| Ok(Evaluation::of(model)?)).await
}

async fn observe(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<Revisioned<VoiResponse>> {
    let req: VoiRequest = parse(&body)?;
    compute(&state, &id, move |model| {
        Ok(voi::observational_vpi(model, &req.observe)?)
    })
    .await
}

async fn focus(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<Revisioned<voi_core::FocusReport>> {
    let req: FocusRequest = parse(&body)?;
    check_samples(req.samples)?;
    compute(&state, &id, move |model| {
        Ok(voi::recommend(model, &req.cluster, req.samples, req.seed)?)
    })
    .await
}

async fn rank(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(query): Query<RankQuery>,
) -> ApiResult<Revisioned<RankResponse>> {
    check_samples(query.samples)?;
    compute(&state, &id, move |model| {
        Ok(RankResponse::from_ranking(voi::rank_parameters(
            model,
            query.samples,
            query.seed,
        )?))
    })
    .await
}

async fn sweep(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<Revisioned<SweepResponse>> {
    let req: SweepRequest = parse(&body)?;
    if req.grid > MAX_POINTS {
        return Err(ApiError::bad_request(format!("at most {MAX_POINTS} grid points")));
    }
    compute(&state, &id, move |model| {
        Ok(sensitivity::sweep(model, &req.param, req.grid, req.range)?)
    })
    .await
}

async fn bounds(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<Revisioned<BoundsResponse>> {
    let req: BoundsRequest = parse(&body)?;
    let (variable, outcome) = parse_target(&req.target)
        .ok_or_else(|| ApiError::bad_request(format!("target `{}` is not of the form Var=outcome", req.target)))?;
    let overrides = req
        .intervals
        .into_iter()
        .map(|o| Ok((o.param, ProbabilityInterval::new(o.low, o.high)?)))
        .collect::<voi_core::Result<Vec<_>>>()?;
    compute(&state, &id, move |model| {
        Ok(intervals::marginal_bounds(model, &overrides, (&variable, &outcome))?)
    })
    .await
}

async fn tabulate(body: Bytes) -> ApiResult<Tabulation> {
    let req: TabulateRequest = parse(&body)?;
    if !(2..=MAX_POINTS).contains(&req.points) {
        return Err(ApiError::bad_request(format!(
            "points must be between 2 and {MAX_POINTS}"
        )));
    }
    let (distribution, elicitation) = req.distribution.into_distribution()?;
    let (low, high) = distribution.support();
    let n = if low == high { 1 } else { req.points };
    let mut points = Vec::with_capacity(n);
    for i in 0..n {
        let x = if i + 1 == n {
            high
        } else {
            low + (high - low) * i as f64 / (n - 1) as f64
        };
        points.push(TabulatedPoint {
            x,
            cdf: distribution.cdf(x)?,
            density: distribution.density(x)?,
        });
    }
    Ok(Json(Tabulation {
        fitted: DistributionEntry::from_distribution(&distribution, elicitation.as_ref()),
        mean: distribution.mean(),
        support: (low, high),
        points,
    }))
}
