use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, RwLock};

use posivote_core::analytic::DEFAULT_S_VALUES;
use posivote_core::ballot::DEFAULT_TAU;
use posivote_core::{
    classify_ballots, curve_grid, decompose_and_aggregate, validate_ballot, AggregateResult,
    Allocation, Ballot, BudgetRule, CurveSeries, MethodSpec, RGrid,
};
use serde::{Deserialize, Serialize};
use tokio::sync::watch;

use crate::error::{FieldError, ServiceError};

fn default_tau() -> f64 {
    DEFAULT_TAU
}

/// Session settings supplied by the facilitator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub k: usize,
    #[serde(default)]
    pub dimension_labels: Vec<String>,
    pub rule: BudgetRule,
    pub method: MethodSpec,
    #[serde(default = "default_tau")]
    pub tau: f64,
}

impl SessionConfig {
    /// Checks the config, filling in default labels. Returns warnings that do
    /// not prevent creation.
    fn normalize(&mut self) -> Result<Vec<String>, ServiceError> {
        let mut errors = Vec::new();
        if self.k == 0 {
            errors.push(FieldError::new("k", "at least one dimension is required"));
        }
        if !(self.rule.p.is_finite() && self.rule.p > 0.0) {
            errors.push(FieldError::new("rule.p", "points per person must be positive"));
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            errors.push(FieldError::new("tau", "must lie in (0, 1]"));
        }
        if self.dimension_labels.is_empty() {
            self.dimension_labels = (0..self.k).map(|i| format!("dim{i}")).collect();
        } else if self.dimension_labels.len() != self.k {
            errors.push(FieldError::new(
                "dimension_labels",
                format!("{} labels for k = {}", self.dimension_labels.len(), self.k),
            ));
        }
        if !errors.is_empty() {
            return Err(ServiceError::InvalidConfig(errors));
        }

        let mut warnings = Vec::new();
        if self.k == 1 && self.method.is_weighted() {
            warnings.push("weighting inert at k=1".to_string());
        }
        Ok(warnings)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CreatedSession {
    pub id: String,
    pub revision: u64,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionInfo {
    pub id: String,
    pub config: SessionConfig,
    pub revision: u64,
    pub ballot_count: usize,
}

/// Aggregate tagged with the revision it was computed from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub revision: u64,
    pub aggregate: AggregateResult,
}

/// Full session contents, used for the shutdown dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionDump {
    pub id: String,
    pub config: SessionConfig,
    pub revision: u64,
    pub ballots: Vec<Ballot>,
}

#[derive(Debug)]
struct SessionState {
    config: SessionConfig,
    ballots: BTreeMap<String, Ballot>,
    revision: u64,
}

#[derive(Debug)]
struct SessionEntry {
    state: RwLock<SessionState>,
    revisions: watch::Sender<u64>,
}

/// Optional parameters of a curve request; missing values fall back to the
/// session's `k` and method and the default spreads and grid.
#[derive(Debug, Clone, Default)]
pub struct CurveQuery {
    pub k: Option<Vec<u64>>,
    pub s: Option<Vec<f64>>,
    pub methods: Option<Vec<MethodSpec>>,
    pub r: Option<RGrid>,
}

/// In-memory voting sessions.
///
/// Writes to one session are serialized by that session's lock; reads take
/// the lock only long enough to copy the ballots, so every snapshot sees a
/// single revision.
#[derive(Debug, Default)]
pub struct SessionStore {
    sessions: RwLock<HashMap<String, Arc<SessionEntry>>>,
}

impl SessionStore {
    pub fn new() -> Self {
        Self::default()
    }

    fn entry(&self, id: &str) -> Result<Arc<SessionEntry>, ServiceError> {
        self.sessions
            .read()
            .expect("session map poisoned")
            .get(id)
            .cloned()
            .ok_or_else(|| ServiceError::NotFound(format!("session {id}")))
    }

    pub fn create_session(&self, mut config: SessionConfig) -> Result<CreatedSession, ServiceError> {
        let warnings = config.normalize()?;
        let id = uuid::Uuid::new_v4().simple().to_string();
        let (revisions, _) = watch::channel(0);
        let entry = Arc::new(SessionEntry {
            state: RwLock::new(SessionState {
                config,
                ballots: BTreeMap::new(),
                revision: 0,
            }),
            revisions,
        });
        self.sessions
            .write()
            .expect("session map poisoned")
            .insert(id.clone(), entry);
        tracing::info!(session = %id, "created session");
        Ok(CreatedSession {
            id,
            revision: 0,
            warnings,
        })
    }

    pub fn get_session(&self, id: &str) -> Result<SessionInfo, ServiceError> {
        let entry = self.entry(id)?;
        let state = entry.state.read().expect("session poisoned");
        Ok(SessionInfo {
            id: id.to_string(),
            config: state.config.clone(),
            revision: state.revision,
            ballot_count: state.ballots.len(),
        })
    }

    /// Stores `ballot`, replacing any earlier ballot from the same voter, and
    /// returns the new revision. Rejected ballots leave the session untouched.
    pub fn submit_ballot(&self, id: &str, ballot: Ballot) -> Result<u64, ServiceError> {
        let entry = self.entry(id)?;
        let mut state = entry.state.write().expect("session poisoned");
        if ballot.k() != state.config.k {
            return Err(ServiceError::InvalidBallot(vec![FieldError::new(
                "allocations",
                format!("{} allocations, expected {}", ballot.k(), state.config.k),
            )]));
        }
        if ballot.voter_id.is_empty() {
            return Err(ServiceError::InvalidBallot(vec![FieldError::new(
                "voter_id",
                "must not be empty",
            )]));
        }
        validate_ballot(&ballot, &state.config.rule).map_err(ServiceError::Rejected)?;
        state.ballots.insert(ballot.voter_id.clone(), ballot);
        state.revision += 1;
        let revision = state.revision;
        entry.revisions.send_replace(revision);
        Ok(revision)
    }

    /// Convenience wrapper building the ballot from `(position, votes)` pairs.
    pub fn submit_allocations(
        &self,
        id: &str,
        voter_id: &str,
        allocations: Vec<Allocation>,
    ) -> Result<u64, ServiceError> {
        self.submit_ballot(id, Ballot::new(voter_id, allocations))
    }

    /// Aggregates dimension `dim` of the current ballots. `method_override`
    /// replaces the session method for this read only.
    pub fn snapshot_aggregate(
        &self,
        id: &str,
        dim: usize,
        method_override: Option<MethodSpec>,
    ) -> Result<Snapshot, ServiceError> {
        let entry = self.entry(id)?;
        let (revision, ballots, config) = {
            let state = entry.state.read().expect("session poisoned");
            (
                state.revision,
                state.ballots.values().cloned().collect::<Vec<_>>(),
                state.config.clone(),
            )
        };
        if dim >= config.k {
            return Err(ServiceError::Domain(posivote_core::Error::DimensionOutOfRange {
                dim,
                k: config.k,
            }));
        }
        if !ballots.iter().any(|b| b.is_active_on(dim)) {
            return Err(ServiceError::Domain(posivote_core::Error::EmptyDistribution(dim)));
        }
        let method = method_override.unwrap_or(config.method);
        let classified =
            classify_ballots(&ballots, &config.rule, config.tau).map_err(ServiceError::Domain)?;
        let aggregate = decompose_and_aggregate(&classified, dim, method, &config.rule)
            .map_err(ServiceError::Domain)?;
        Ok(Snapshot { revision, aggregate })
    }

    /// Analytic curves for overlaying on a session's aggregates.
    pub fn curves(&self, id: &str, query: &CurveQuery) -> Result<Vec<CurveSeries>, ServiceError> {
        let info = self.get_session(id)?;
        let k = query
            .k
            .clone()
            .unwrap_or_else(|| vec![info.config.k as u64]);
        if k.contains(&0) {
            return Err(ServiceError::InvalidQuery(vec![FieldError::new("k", "must be >= 1")]));
        }
        let s = query.s.clone().unwrap_or_else(|| DEFAULT_S_VALUES.to_vec());
        let methods = query
            .methods
            .clone()
            .unwrap_or_else(|| vec![info.config.method]);
        let grid = query.r.unwrap_or_default();
        curve_grid(&methods, &k, &s, &grid).map_err(ServiceError::Domain)
    }

    /// Revision stream of a session; the receiver starts at the current revision.
    pub fn subscribe(&self, id: &str) -> Result<watch::Receiver<u64>, ServiceError> {
        Ok(self.entry(id)?.revisions.subscribe())
    }

    pub fn dump(&self) -> Vec<SessionDump> {
        let sessions = self.sessions.read().expect("session map poisoned");
        let mut out: Vec<SessionDump> = sessions
            .iter()
            .map(|(id, entry)| {
                let state = entry.state.read().expect("session poisoned");
                SessionDump {
                    id: id.clone(),
                    config: state.config.clone(),
                    revision: state.revision,
                    ballots: state.ballots.values().cloned().collect(),
                }
            })
            .collect();
        out.sort_by(|a, b| a.id.cmp(&b.id));
        out
    }

    pub fn write_dump(&self, path: &std::path::Path) -> std::io::Result<()> {
        let json = serde_json::to_vec_pretty(&self.dump())?;
        std::fs::write(path, json)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use posivote_core::VotingRule;

    fn config(k: usize, method: MethodSpec) -> SessionConfig {
        SessionConfig {
            k,
            dimension_labels: vec![],
            rule: BudgetRule {
                voting: VotingRule::Quadratic,
                p: 16.0,
            },
            method,
            tau: 0.8,
        }
    }

    fn even(id: &str, x: f64) -> Ballot {
        Ballot::from_pairs(id, &[(x, 2.0), (1.0, 2.0), (1.0, 2.0), (1.0, 2.0)])
    }

    #[test]
    fn create_validates_and_warns() {
        let store = SessionStore::new();
        let created = store.create_session(config(3, MethodSpec::Q_LW)).unwrap();
        assert_eq!(created.revision, 0);
        assert!(created.warnings.is_empty());
        let info = store.get_session(&created.id).unwrap();
        assert_eq!(info.config.dimension_labels, vec!["dim0", "dim1", "dim2"]);

        let other = store.create_session(config(3, MethodSpec::Q_LW)).unwrap();
        assert_ne!(created.id, other.id);

        match store.create_session(config(0, MethodSpec::Q_LW)) {
            Err(ServiceError::InvalidConfig(fields)) => assert_eq!(fields[0].field, "k"),
            other => panic!("expected invalid config, got {other:?}"),
        }

        let single = store.create_session(config(1, MethodSpec::Q_SW)).unwrap();
        assert_eq!(single.warnings, vec!["weighting inert at k=1"]);

        let mut labelled = config(2, MethodSpec::Q_NW);
        labelled.dimension_labels = vec!["economy".into()];
        assert!(store.create_session(labelled).is_err());
    }

    #[test]
    fn submissions_bump_revision() {
        let store = SessionStore::new();
        let id = store.create_session(config(4, MethodSpec::Q_LW)).unwrap().id;
        assert_eq!(store.submit_ballot(&id, even("a", 0.9)).unwrap(), 1);
        assert_eq!(store.submit_ballot(&id, even("a", 1.2)).unwrap(), 2);
        assert_eq!(store.get_session(&id).unwrap().ballot_count, 1);

        let over = Ballot::from_pairs("b", &[(1.0, 3.0); 4]);
        assert!(matches!(
            store.submit_ballot(&id, over),
            Err(ServiceError::Rejected(posivote_core::Error::OverBudget { .. }))
        ));
        let short = Ballot::from_pairs("b", &[(1.0, 1.0); 3]);
        assert!(matches!(store.submit_ballot(&id, short), Err(ServiceError::InvalidBallot(_))));
        assert_eq!(store.get_session(&id).unwrap().revision, 2);

        assert!(matches!(
            store.submit_ballot("missing", even("a", 1.0)),
            Err(ServiceError::NotFound(_))
        ));
    }

    #[test]
    fn fixture_aggregate_and_override() {
        let store = SessionStore::new();
        let id = store.create_session(config(4, MethodSpec::Q_LW)).unwrap().id;
        store.submit_ballot(&id, even("a", 0.9)).unwrap();
        store.submit_ballot(&id, even("b", 1.1)).unwrap();
        store
            .submit_ballot(
                &id,
                Ballot::from_pairs("c", &[(0.5, 4.0), (1.0, 0.0), (1.0, 0.0), (1.0, 0.0)]),
            )
            .unwrap();

        let snap = store.snapshot_aggregate(&id, 0, None).unwrap();
        assert_eq!(snap.revision, 3);
        assert!((snap.aggregate.mu - 0.6875).abs() < 1e-12);

        let before = store.get_session(&id).unwrap().revision;
        let nw = store.snapshot_aggregate(&id, 0, Some(MethodSpec::Q_NW)).unwrap();
        assert!((nw.aggregate.mu - 0.875).abs() < 1e-12);
        assert_eq!(store.get_session(&id).unwrap().revision, before);
        assert_eq!(store.get_session(&id).unwrap().config.method, MethodSpec::Q_LW);
    }

    #[test]
    fn single_voter_and_empty_dimension() {
        let store = SessionStore::new();
        let id = store.create_session(config(4, MethodSpec::Q_LW)).unwrap().id;
        assert!(matches!(
            store.snapshot_aggregate(&id, 0, None),
            Err(ServiceError::Domain(posivote_core::Error::EmptyDistribution(0)))
        ));
        store.submit_ballot(&id, even("solo", 0.37)).unwrap();
        let snap = store.snapshot_aggregate(&id, 0, None).unwrap();
        assert_eq!(snap.aggregate.mu, 0.37);
        assert!(snap.aggregate.fallback_non_weighted);
    }

    #[test]
    fn identical_resubmission_gives_identical_aggregate() {
        let store = SessionStore::new();
        let id = store.create_session(config(4, MethodSpec::Q_SW)).unwrap().id;
        store.submit_ballot(&id, even("a", 0.9)).unwrap();
        store.submit_ballot(&id, even("b", 1.3)).unwrap();
        let first = store.snapshot_aggregate(&id, 0, None).unwrap();
        store.submit_ballot(&id, even("b", 1.3)).unwrap();
        let second = store.snapshot_aggregate(&id, 0, None).unwrap();
        assert_eq!(first.aggregate, second.aggregate);
        assert_eq!(second.revision, first.revision + 1);
    }

    #[test]
    fn curves_default_to_session_settings() {
        let store = SessionStore::new();
        let id = store.create_session(config(3, MethodSpec::Q_LW)).unwrap().id;
        let series = store.curves(&id, &CurveQuery::default()).unwrap();
        assert_eq!(series.len(), 3);
        assert!(series.iter().all(|c| c.k == 3 && c.method == MethodSpec::Q_LW));
        let bad = CurveQuery {
            k: Some(vec![0]),
            ..Default::default()
        };
        assert!(store.curves(&id, &bad).is_err());
    }

    #[test]
    fn dump_lists_ballots() {
        let store = SessionStore::new();
        let id = store.create_session(config(4, MethodSpec::Q_LW)).unwrap().id;
        store.submit_ballot(&id, even("a", 0.9)).unwrap();
        let dump = store.dump();
        assert_eq!(dump.len(), 1);
        assert_eq!(dump[0].ballots.len(), 1);
        assert_eq!(dump[0].revision, 1);
    }
}
