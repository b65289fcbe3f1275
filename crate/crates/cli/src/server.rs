use std::sync::Arc;

use axum::body::{Body, Bytes};
use axum::extract::rejection::QueryRejection;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use covidia_core::kgstore::PathQuery;
use covidia_core::service::{
    parse_density_precision, to_json_bytes, ApiError, DensityParams, SearchParams, SearchQuery, Snapshot,
};
use serde::Serialize;

fn json_response(status: StatusCode, bytes: Vec<u8>) -> Response {
    Response::builder()
        .status(status)
        .header(header::CONTENT_TYPE, "application/json")
        .body(Body::from(bytes))
        .expect("static response parts are valid")
}

struct Json<T>(T);

impl<T: Serialize> IntoResponse for Json<T> {
    fn into_response(self) -> Response {
        json_response(StatusCode::OK, to_json_bytes(&self.0))
    }
}

struct ErrorResponse(ApiError);

impl IntoResponse for ErrorResponse {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.0.status()).unwrap_or(StatusCode::BAD_REQUEST);
        json_response(status, to_json_bytes(&self.0.body()))
    }
}

impl From<ApiError> for ErrorResponse {
    fn from(e: ApiError) -> Self {
        ErrorResponse(e)
    }
}

fn query_error(e: QueryRejection) -> ErrorResponse {
    ErrorResponse(ApiError::bad_request(e.body_text()))
}

type Handler<T> = Result<Json<T>, ErrorResponse>;

async fn search(
    State(s): State<Arc<Snapshot>>,
    params: Result<Query<SearchParams>, QueryRejection>,
) -> Handler<covidia_core::service::SearchResponse> {
    let Query(params) = params.map_err(query_error)?;
    let q = SearchQuery::from_params(&params)?;
    Ok(Json(s.search(&q)?))
}

async fn density(
    State(s): State<Arc<Snapshot>>,
    params: Result<Query<DensityParams>, QueryRejection>,
) -> Handler<covidia_core::service::DensityResponse> {
    let Query(params) = params.map_err(query_error)?;
    let precision = parse_density_precision(params.precision.as_deref())?;
    Ok(Json(s.density(precision)?))
}

async fn traverse(State(s): State<Arc<Snapshot>>, body: Bytes) -> Handler<covidia_core::service::TraverseResponse> {
    let q: PathQuery = serde_json::from_slice(&body)
        .map_err(|e| ApiError::bad_request(format!("invalid path query: {e}")))?;
    Ok(Json(s.traverse(&q)?))
}

async fn paper(State(s): State<Arc<Snapshot>>, Path(id): Path<String>) -> Handler<covidia_core::service::PaperDetail> {
    Ok(Json(s.paper(&id)?))
}

async fn network_stats(
    State(s): State<Arc<Snapshot>>,
    Path(kind): Path<String>,
) -> Handler<covidia_core::service::NetworkStatsResponse> {
    Ok(Json(s.network_stats(&kind)?))
}

async fn health(State(s): State<Arc<Snapshot>>) -> Json<covidia_core::service::HealthResponse> {
    Json(s.health())
}

async fn fallback() -> ErrorResponse {
    ErrorResponse(ApiError::not_found("no such endpoint"))
}

/// The JSON API over one immutable snapshot. Route and field names are
/// documented in `docs/api.md`.
pub fn router(snapshot: Arc<Snapshot>) -> Router {
    Router::new()
        .route("/search", get(search))
        .route("/geo/density", get(density))
        .route("/kg/traverse", post(traverse))
        .route("/papers/{id}", get(paper))
        .route("/networks/{kind}/stats", get(network_stats))
        .route("/health", get(health))
        .fallback(fallback)
        .with_state(snapshot)
}

pub async fn serve(snapshot: Snapshot, host: &str, port: u16) -> anyhow::Result<()> {
    let listener = tokio::net::TcpListener::bind((host, port)).await?;
    log::info!("serving {} papers on http://{}", snapshot.paper_count(), listener.local_addr()?);
    axum::serve(listener, router(Arc::new(snapshot))).await?;
    Ok(())
}
