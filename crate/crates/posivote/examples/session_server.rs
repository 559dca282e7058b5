//! Serves sessions over HTTP with one demo session preloaded.
//!
//!     cargo run --example session_server
//!     curl localhost:8080/sessions/<id>/aggregate?method=q-nw
//!     curl -N localhost:8080/sessions/<id>/events

use std::sync::Arc;

use posivote::service::{serve, SessionConfig, SessionStore};
use posivote::{Ballot, BudgetRule, MethodSpec};

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let store = Arc::new(SessionStore::new());
    let created = store.create_session(SessionConfig {
        k: 4,
        dimension_labels: vec!["housing".into(), "transit".into(), "parks".into(), "schools".into()],
        rule: BudgetRule::quadratic(16.0)?,
        method: MethodSpec::Q_LW,
        tau: 0.8,
    })?;
    let id = created.id;
    for ballot in [
        Ballot::from_pairs("a", &[(0.9, 2.0), (1.0, 2.0), (1.0, 2.0), (1.0, 2.0)]),
        Ballot::from_pairs("b", &[(1.1, 2.0), (1.0, 2.0), (1.0, 2.0), (1.0, 2.0)]),
        Ballot::from_pairs("c", &[(0.5, 4.0), (1.0, 0.0), (1.0, 0.0), (1.0, 0.0)]),
    ] {
        store.submit_ballot(&id, ballot)?;
    }
    let snapshot = store.snapshot_aggregate(&id, 0, None)?;
    println!("session {id}, revision {}, mu {}", snapshot.revision, snapshot.aggregate.mu);

    let port = std::env::var("PORT").unwrap_or_else(|_| "8080".into());
    let listener = tokio::net::TcpListener::bind(format!("127.0.0.1:{port}")).await?;
    let base = format!("http://{}", listener.local_addr()?);
    println!("curl {base}/sessions/{id}");
    println!("curl '{base}/sessions/{id}/aggregate?dim=0&method=q-nw'");
    println!("curl '{base}/sessions/{id}/curves?k=1,3&s=0.5&methods=all&r=0:2:0.25'");
    println!("curl -N {base}/sessions/{id}/events");
    println!(
        "curl -X PUT -H 'content-type: application/json' -d '{{\"allocations\":[{{\"position\":0.7,\"votes\":2}},{{\"position\":1,\"votes\":2}},{{\"position\":1,\"votes\":2}},{{\"position\":1,\"votes\":2}}]}}' {base}/sessions/{id}/ballots/d"
    );

    serve(listener, store, async {
        let _ = tokio::signal::ctrl_c().await;
    })
    .await?;
    Ok(())
}
