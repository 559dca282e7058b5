//! Voting sessions over HTTP.
//!
//! | method | path | |
//! |---|---|---|
//! | `POST` | `/sessions` | create a session |
//! | `GET` | `/sessions/{id}` | config and revision |
//! | `PUT` | `/sessions/{id}/ballots/{voter_id}` | submit or replace a ballot |
//! | `GET` | `/sessions/{id}/aggregate?dim=D&method=M` | aggregate snapshot |
//! | `GET` | `/sessions/{id}/curves?k=..&s=..&methods=..&r=lo:hi:step` | analytic curves |
//! | `GET` | `/sessions/{id}/events` | server-sent `data: {"revision": N}` events |
//!
//! Sessions live in memory; [`SessionStore::write_dump`] writes them to a
//! JSON file, which the CLI does on shutdown when asked to.

mod error;
pub mod http;
mod store;

pub use error::{FieldError, ServiceError};
pub use http::{router, serve, RevisionBody};
pub use store::{
    CreatedSession, CurveQuery, SessionConfig, SessionDump, SessionInfo, SessionStore, Snapshot,
};
