//! Read-only HTTP API over the day store, plus a loopback-only admin
//! listener for issuing access tokens.
//!
//! Requests carry `Authorization: Bearer <token>`. A bad or expired token
//! is 401, a token for someone else is 403, and only then does a missing
//! day come back as 404.

pub mod payload;
pub mod token;

use std::collections::BTreeSet;
use std::net::SocketAddr;
use std::sync::Arc;

use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::{DateTime, Duration, NaiveDate, NaiveTime};
use lifelens_core::model::{PersonId, TimeWindow, Timestamp};
use lifelens_core::store::{DayStore, StoredDay};
use serde::Deserialize;
use serde_json::json;

pub use token::{AccessToken, AuthError, Clock, ManualClock, SystemClock, TokenError, TokenStore};

use payload::{checkins_out, day_payload, glance_out, occurrences_out, profile_out, GlancePayload, ListPayload, WindowOut, PAYLOAD_VERSION};

#[derive(Clone)]
pub struct ApiState {
    pub store: Arc<DayStore>,
    pub tokens: Arc<TokenStore>,
    pub default_ttl: Duration,
}

#[derive(Debug)]
pub enum ApiError {
    Unauthorized,
    Forbidden,
    NotFound(String),
    BadRequest(String),
    Internal(String),
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, msg) = match self {
            ApiError::Unauthorized => (StatusCode::UNAUTHORIZED, "invalid or expired token".to_string()),
            ApiError::Forbidden => (StatusCode::FORBIDDEN, "token does not cover this person".to_string()),
            ApiError::NotFound(m) => (StatusCode::NOT_FOUND, m),
            ApiError::BadRequest(m) => (StatusCode::BAD_REQUEST, m),
            ApiError::Internal(m) => {
                tracing::error!(error = %m, "request failed");
                (StatusCode::INTERNAL_SERVER_ERROR, "internal error".to_string())
            }
        };
        let mut resp = (status, Json(json!({ "error": msg }))).into_response();
        if status == StatusCode::UNAUTHORIZED {
            resp.headers_mut()
                .insert(header::WWW_AUTHENTICATE, header::HeaderValue::from_static("Bearer"));
        }
        resp
    }
}

fn bearer(headers: &HeaderMap) -> Option<&str> {
    let v = headers.get(header::AUTHORIZATION)?.to_str().ok()?;
    let (scheme, token) = v.split_once(' ')?;
    scheme.eq_ignore_ascii_case("bearer").then(|| token.trim())
}

/// Token first, then scope. An unparseable person id cannot be in any
/// scope, so it is reported as 403 rather than revealing anything.
fn authorize(state: &ApiState, headers: &HeaderMap, person: &str) -> Result<PersonId, ApiError> {
    let token = bearer(headers).ok_or(ApiError::Unauthorized)?;
    let id = PersonId::new(person).ok();
    match state.tokens.authorize(token, id.as_ref()) {
        Ok(()) => Ok(id.expect("authorized ids parse")),
        Err(AuthError::Unauthorized) => Err(ApiError::Unauthorized),
        Err(AuthError::Forbidden) => Err(ApiError::Forbidden),
    }
}

fn load(state: &ApiState, person: &PersonId, date: &str) -> Result<Arc<StoredDay>, ApiError> {
    let date: NaiveDate = date
        .parse()
        .map_err(|_| ApiError::BadRequest(format!("bad date {date:?}, expected YYYY-MM-DD")))?;
    state
        .store
        .get(person, date)
        .map_err(|e| ApiError::Internal(e.to_string()))?
        .ok_or_else(|| ApiError::NotFound(format!("no data for {person} on {date}")))
}

#[derive(Debug, Default, Deserialize)]
pub struct WindowQuery {
    pub from: Option<String>,
    pub to: Option<String>,
}

/// RFC 3339 instants, or `HH:MM` on the day's local clock. A clock time
/// before the day's start hour belongs to the following calendar date.
fn parse_bound(s: &str, day: &StoredDay) -> Result<Timestamp, ApiError> {
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Ok(t);
    }
    let t = NaiveTime::parse_from_str(s, "%H:%M")
        .map_err(|_| ApiError::BadRequest(format!("bad time {s:?}, expected RFC 3339 or HH:MM")))?;
    let r = &day.record;
    let (ds, _) = r.bounds();
    let same = r.frame.local(r.date, t);
    Ok(if same < ds {
        r.frame.local(r.date.succ_opt().expect("date in range"), t)
    } else {
        same
    })
}

fn window(q: &WindowQuery, day: &StoredDay) -> Result<TimeWindow, ApiError> {
    let (ds, de) = day.record.bounds();
    let start = q.from.as_deref().map(|s| parse_bound(s, day)).transpose()?.unwrap_or(ds);
    let end = q.to.as_deref().map(|s| parse_bound(s, day)).transpose()?.unwrap_or(de);
    if start >= end {
        return Err(ApiError::BadRequest("window start must be before its end".into()));
    }
    Ok(TimeWindow::new(start, end))
}

async fn get_day(
    State(s): State<ApiState>,
    Path((person, date)): Path<(String, String)>,
    Query(q): Query<WindowQuery>,
    headers: HeaderMap,
) -> Result<Response, ApiError> {
    let id = authorize(&s, &headers, &person)?;
    let day = load(&s, &id, &date)?;
    let w = window(&q, &day)?;
    Ok(Json(day_payload(&day, &w)).into_response())
}

fn list<T: serde::Serialize>(day: &StoredDay, w: &TimeWindow, items: Vec<T>) -> Response {
    Json(ListPayload {
        v: PAYLOAD_VERSION,
        person: day.record.person_id.as_str().to_string(),
        date: day.record.date,
        window: WindowOut {
            start: w.start,
            end: w.end,
        },
        items,
    })
    .into_response()
}

async fn get_occurrences(
    State(s): State<ApiState>,
    Path((person, date)): Path<(String, String)>,
    Query(q): Query<WindowQuery>,
    headers: HeaderMap,
) -> Result<Response, ApiError> {
    let id = authorize(&s, &headers, &person)?;
    let day = load(&s, &id, &date)?;
    let w = window(&q, &day)?;
    Ok(list(&day, &w, occurrences_out(&day, &w)))
}

async fn get_checkins(
    State(s): State<ApiState>,
    Path((person, date)): Path<(String, String)>,
    Query(q): Query<WindowQuery>,
    headers: HeaderMap,
) -> Result<Response, ApiError> {
    let id = authorize(&s, &headers, &person)?;
    let day = load(&s, &id, &date)?;
    let w = window(&q, &day)?;
    Ok(list(&day, &w, checkins_out(&day.record, &w)))
}

async fn get_glance(
    State(s): State<ApiState>,
    Path((person, date)): Path<(String, String)>,
    headers: HeaderMap,
) -> Result<Response, ApiError> {
    let id = authorize(&s, &headers, &person)?;
    let day = load(&s, &id, &date)?;
    Ok(Json(GlancePayload {
        v: PAYLOAD_VERSION,
        person: day.record.person_id.as_str().to_string(),
        date: day.record.date,
        glance: glance_out(&day),
    })
    .into_response())
}

async fn get_profile(
    State(s): State<ApiState>,
    Path(person): Path<String>,
    headers: HeaderMap,
) -> Result<Response, ApiError> {
    let id = authorize(&s, &headers, &person)?;
    let p = s
        .store
        .profile(&id)
        .map_err(|e| ApiError::Internal(e.to_string()))?
        .ok_or_else(|| ApiError::NotFound(format!("no profile for {id}")))?;
    Ok(Json(profile_out(&p)).into_response())
}

/// Public, read-only routes.
pub fn router(state: ApiState) -> Router {
    Router::new()
        .route("/api/days/{person}/{date}", get(get_day))
        .route("/api/days/{person}/{date}/occurrences", get(get_occurrences))
        .route("/api/days/{person}/{date}/glance", get(get_glance))
        .route("/api/days/{person}/{date}/checkins", get(get_checkins))
        .route("/api/profile/{person}", get(get_profile))
        .with_state(state)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IssueRequest {
    pub scope: Vec<String>,
    #[serde(default)]
    pub ttl_minutes: Option<i64>,
}

async fn post_token(State(s): State<ApiState>, Json(req): Json<IssueRequest>) -> Result<Response, ApiError> {
    let scope: BTreeSet<PersonId> = req
        .scope
        .iter()
        .map(|p| PersonId::new(p.as_str()).map_err(|e| ApiError::BadRequest(e.to_string())))
        .collect::<Result<_, _>>()?;
    let ttl = req.ttl_minutes.map(Duration::minutes).unwrap_or(s.default_ttl);
    match s.tokens.issue(scope, ttl) {
        Ok(t) => Ok((StatusCode::CREATED, Json(t)).into_response()),
        Err(e @ (TokenError::InvalidScope | TokenError::InvalidTtl)) => Err(ApiError::BadRequest(e.to_string())),
        Err(e) => Err(ApiError::Internal(e.to_string())),
    }
}

/// Operator routes. Serve only on a loopback address.
pub fn admin_router(state: ApiState) -> Router {
    Router::new().route("/admin/tokens", post(post_token)).with_state(state)
}

#[derive(Debug, thiserror::Error)]
pub enum ServeError {
    #[error("admin listener must bind a loopback address, got {0}")]
    AdminNotLoopback(SocketAddr),
    #[error("bad address {0:?}")]
    BadAddress(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Run the public and admin listeners until either fails.
pub async fn serve(state: ApiState, bind: &str, admin_bind: &str) -> Result<(), ServeError> {
    let admin: SocketAddr = admin_bind.parse().map_err(|_| ServeError::BadAddress(admin_bind.into()))?;
    if !admin.ip().is_loopback() {
        return Err(ServeError::AdminNotLoopback(admin));
    }
    let public = tokio::net::TcpListener::bind(bind).await?;
    let admin_l = tokio::net::TcpListener::bind(admin).await?;
    tracing::info!(public = %public.local_addr()?, admin = %admin_l.local_addr()?, "listening");
    let a = axum::serve(public, router(state.clone()));
    let b = axum::serve(admin_l, admin_router(state));
    tokio::try_join!(async { a.await }, async { b.await })?;
    Ok(())
}
