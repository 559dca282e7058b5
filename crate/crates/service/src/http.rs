//! HTTP + JSON routes and the server-sent revision stream.

use std::convert::Infallible;
use std::future::Future;
use std::sync::Arc;

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use futures::stream::{self, Stream};
use posivote_core::{Allocation, Ballot, MethodSpec, RGrid};
use serde::{Deserialize, Serialize};
use tokio::net::TcpListener;

use crate::error::{FieldError, ServiceError};
use crate::store::{CreatedSession, CurveQuery, SessionConfig, SessionInfo, SessionStore, Snapshot};

type AppState = Arc<SessionStore>;

pub fn router(store: Arc<SessionStore>) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/ballots/{voter_id}", put(submit_ballot))
        .route("/sessions/{id}/aggregate", get(aggregate))
        .route("/sessions/{id}/curves", get(curves))
        .route("/sessions/{id}/events", get(events))
        .with_state(store)
}

/// Serves until `shutdown` resolves.
pub async fn serve(
    listener: TcpListener,
    store: Arc<SessionStore>,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(store))
        .with_graceful_shutdown(shutdown)
        .await
}

fn rejection(field: &str, e: impl std::error::Error) -> FieldError {
    FieldError::new(field, e.to_string())
}

async fn create_session(
    State(store): State<AppState>,
    config: Result<Json<SessionConfig>, JsonRejection>,
) -> Result<(StatusCode, Json<CreatedSession>), ServiceError> {
    let Json(config) = config.map_err(|e| ServiceError::InvalidConfig(vec![rejection("body", e)]))?;
    let created = store.create_session(config)?;
    Ok((StatusCode::CREATED, Json(created)))
}

async fn get_session(
    State(store): State<AppState>,
    Path(id): Path<String>,
) -> Result<Json<SessionInfo>, ServiceError> {
    Ok(Json(store.get_session(&id)?))
}

/// Ballot body; `voter_id` is optional and must match the path when given.
#[derive(Debug, Deserialize)]
struct BallotBody {
    voter_id: Option<String>,
    allocations: Vec<Allocation>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RevisionBody {
    pub revision: u64,
}

async fn submit_ballot(
    State(store): State<AppState>,
    Path((id, voter_id)): Path<(String, String)>,
    body: Result<Json<BallotBody>, JsonRejection>,
) -> Result<Json<RevisionBody>, ServiceError> {
    let Json(body) = body.map_err(|e| ServiceError::InvalidBallot(vec![rejection("body", e)]))?;
    if body.voter_id.as_ref().is_some_and(|v| *v != voter_id) {
        return Err(ServiceError::InvalidBallot(vec![FieldError::new(
            "voter_id",
            "body voter_id differs from the path",
        )]));
    }
    let revision = store.submit_ballot(&id, Ballot::new(voter_id, body.allocations))?;
    Ok(Json(RevisionBody { revision }))
}

#[derive(Debug, Deserialize)]
struct AggregateParams {
    dim: Option<usize>,
    method: Option<String>,
}

async fn aggregate(
    State(store): State<AppState>,
    Path(id): Path<String>,
    params: Result<Query<AggregateParams>, QueryRejection>,
) -> Result<Json<Snapshot>, ServiceError> {
    let Query(params) = params.map_err(|e| ServiceError::InvalidQuery(vec![rejection("query", e)]))?;
    let method = params
        .method
        .as_deref()
        .map(str::parse::<MethodSpec>)
        .transpose()
        .map_err(|e| ServiceError::InvalidQuery(vec![FieldError::new("method", e.to_string())]))?;
    Ok(Json(store.snapshot_aggregate(&id, params.dim.unwrap_or(0), method)?))
}

#[derive(Debug, Deserialize)]
struct CurveParams {
    k: Option<String>,
    s: Option<String>,
    methods: Option<String>,
    r: Option<String>,
}

fn parse_list<T: std::str::FromStr>(field: &str, raw: &str) -> Result<Vec<T>, ServiceError> {
    raw.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| {
            p.parse().map_err(|_| {
                ServiceError::InvalidQuery(vec![FieldError::new(field, format!("cannot parse `{p}`"))])
            })
        })
        .collect()
}

impl CurveParams {
    fn into_query(self) -> Result<CurveQuery, ServiceError> {
        let invalid = |field: &str, e: posivote_core::Error| {
            ServiceError::InvalidQuery(vec![FieldError::new(field, e.to_string())])
        };
        Ok(CurveQuery {
            k: self.k.as_deref().map(|k| parse_list("k", k)).transpose()?,
            s: self.s.as_deref().map(|s| parse_list("s", s)).transpose()?,
            methods: self
                .methods
                .as_deref()
                .map(MethodSpec::parse_list)
                .transpose()
                .map_err(|e| invalid("methods", e))?,
            r: self
                .r
                .as_deref()
                .map(str::parse::<RGrid>)
                .transpose()
                .map_err(|e| invalid("r", e))?,
        })
    }
}

async fn curves(
    State(store): State<AppState>,
    Path(id): Path<String>,
    params: Result<Query<CurveParams>, QueryRejection>,
) -> Result<Json<Vec<posivote_core::CurveSeries>>, ServiceError> {
    let Query(params) = params.map_err(|e| ServiceError::InvalidQuery(vec![rejection("query", e)]))?;
    Ok(Json(store.curves(&id, &params.into_query()?)?))
}

/// One `data: {"revision": N}` event for the current revision, then one per
/// change. Intermediate revisions may be coalesced; clients re-fetch.
async fn events(
    State(store): State<AppState>,
    Path(id): Path<String>,
) -> Result<Sse<impl Stream<Item = Result<Event, Infallible>>>, ServiceError> {
    let rx = store.subscribe(&id)?;
    let stream = stream::unfold((rx, true), |(mut rx, first)| async move {
        if !first && rx.changed().await.is_err() {
            return None;
        }
        let revision = *rx.borrow_and_update();
        let data = serde_json::to_string(&RevisionBody { revision }).expect("serializable");
        Some((Ok(Event::default().data(data)), (rx, false)))
    });
    Ok(Sse::new(stream).keep_alive(KeepAlive::default()))
}
