//! Nation registry and directed relation store.
//!
//! Relations are directed: a record for (A, B) says nothing about (B, A), and
//! nothing is inferred along chains. A nation's relation to itself is always
//! friendly and is synthesized on query rather than stored. A pair with no
//! stored evaluation is `Undefined`, which is distinct from an evaluation
//! whose masses are all zero.

use std::collections::BTreeMap;
use std::sync::{Arc, RwLock};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{
    self, AlgebraError, CategoryMassVector, RelationCategory, ScalarConfig, TrustEvaluation, WeightVector,
};
use crate::catalog::{self, Assessment, AssessmentViolation, CapMode, PropertyCatalog, Window};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Nation {
    pub id: String,
    pub name: String,
    pub un_member: bool,
}

impl Nation {
    pub fn new(id: impl Into<String>, name: impl Into<String>, un_member: bool) -> Self {
        Nation {
            id: id.into(),
            name: name.into(),
            un_member,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RelationError {
    #[error("nation `{0}` is already registered")]
    DuplicateNation(String),
    #[error("nation `{0}` is not registered")]
    UnknownNation(String),
    #[error("relation of `{0}` to itself is fixed friendly and cannot be evaluated")]
    SelfRelation(String),
    #[error("assessment is for {found_subject} -> {found_object}, expected {subject} -> {object}")]
    AssessmentMismatch {
        subject: String,
        object: String,
        found_subject: String,
        found_object: String,
    },
    #[error("assessment failed validation: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    InvalidAssessment(Vec<AssessmentViolation>),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error("invalid store document: {0}")]
    InvalidStore(String),
}

/// Everything needed to audit a stored evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluatedRelation {
    pub catalog_version: String,
    pub cap_mode: CapMode,
    pub assessment: Assessment,
    pub masses: CategoryMassVector,
    pub weights: WeightVector,
    pub signs: ScalarConfig,
    pub evaluation: TrustEvaluation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "lowercase")]
pub enum RelationState {
    /// No stored evaluation covers the query. `near_misses` lists stored
    /// windows that overlap the query without containing it.
    Undefined {
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        near_misses: Vec<Window>,
    },
    /// A nation's relation to itself; always friendly.
    Reflexive,
    Evaluated(Box<EvaluatedRelation>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationRecord {
    pub subject: String,
    pub object: String,
    pub window: Window,
    #[serde(flatten)]
    pub state: RelationState,
}

impl RelationRecord {
    /// `None` for an undefined relation.
    pub fn label(&self) -> Option<RelationCategory> {
        match &self.state {
            RelationState::Undefined { .. } => None,
            RelationState::Reflexive => Some(RelationCategory::Friendly),
            RelationState::Evaluated(e) => Some(e.evaluation.label),
        }
    }

    pub fn is_undefined(&self) -> bool {
        matches!(self.state, RelationState::Undefined { .. })
    }

    pub fn evaluated(&self) -> Option<&EvaluatedRelation> {
        match &self.state {
            RelationState::Evaluated(e) => Some(e),
            _ => None,
        }
    }
}

/// N×N labels; `cells[i][j]` is the relation of `nations[i]` toward `nations[j]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationMatrix {
    pub nations: Vec<String>,
    pub cells: Vec<Vec<Option<RelationCategory>>>,
}

type PairKey = (String, String, Window);

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RelationStore {
    nations: BTreeMap<String, Nation>,
    records: BTreeMap<PairKey, RelationRecord>,
}

/// Serialized form of a [`RelationStore`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoreDocument {
    pub nations: Vec<Nation>,
    pub records: Vec<RelationRecord>,
}

impl RelationStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register_nation(&mut self, nation: Nation) -> Result<&Nation, RelationError> {
        if self.nations.contains_key(&nation.id) {
            return Err(RelationError::DuplicateNation(nation.id));
        }
        let id = nation.id.clone();
        Ok(self.nations.entry(id).or_insert(nation))
    }

    pub fn nation(&self, id: &str) -> Option<&Nation> {
        self.nations.get(id)
    }

    pub fn nations(&self) -> impl Iterator<Item = &Nation> {
        self.nations.values()
    }

    /// Stored evaluations in (subject, object, window) order.
    pub fn records(&self) -> impl Iterator<Item = &RelationRecord> {
        self.records.values()
    }

    fn require(&self, id: &str) -> Result<(), RelationError> {
        if self.nations.contains_key(id) {
            Ok(())
        } else {
            Err(RelationError::UnknownNation(id.to_string()))
        }
    }

    /// Aggregates the assessment, evaluates it, and stores the result under
    /// (subject, object, assessment window), replacing any previous record
    /// with the same key.
    #[allow(clippy::too_many_arguments)]
    pub fn evaluate_relation(
        &mut self,
        subject: &str,
        object: &str,
        assessment: &Assessment,
        catalog: &PropertyCatalog,
        weights: &WeightVector,
        signs: &ScalarConfig,
        mode: CapMode,
    ) -> Result<&RelationRecord, RelationError> {
        self.require(subject)?;
        self.require(object)?;
        if subject == object {
            return Err(RelationError::SelfRelation(subject.to_string()));
        }
        if assessment.subject != subject || assessment.object != object {
            return Err(RelationError::AssessmentMismatch {
                subject: subject.to_string(),
                object: object.to_string(),
                found_subject: assessment.subject.clone(),
                found_object: assessment.object.clone(),
            });
        }
        let report = catalog::validate_assessment(assessment, catalog, mode);
        if !report.is_clean() {
            return Err(RelationError::InvalidAssessment(report.violations));
        }
        let masses = catalog::aggregate_masses(assessment, catalog, mode)
            .map_err(|v| RelationError::InvalidAssessment(vec![v]))?;
        let evaluation = algebra::evaluate(&masses, weights, signs, None)?;
        let record = RelationRecord {
            subject: subject.to_string(),
            object: object.to_string(),
            window: assessment.window,
            state: RelationState::Evaluated(Box::new(EvaluatedRelation {
                catalog_version: catalog.version().to_string(),
                cap_mode: mode,
                assessment: assessment.clone(),
                masses,
                weights: *weights,
                signs: *signs,
                evaluation,
            })),
        };
        let key = (subject.to_string(), object.to_string(), assessment.window);
        self.records.insert(key.clone(), record);
        Ok(&self.records[&key])
    }

    /// The stored record whose window contains `window`, preferring the
    /// narrowest one. Never consults the reverse direction or any chain.
    pub fn query_relation(&self, subject: &str, object: &str, window: Window) -> Result<RelationRecord, RelationError> {
        self.require(subject)?;
        self.require(object)?;
        if subject == object {
            return Ok(RelationRecord {
                subject: subject.to_string(),
                object: object.to_string(),
                window,
                state: RelationState::Reflexive,
            });
        }
        let candidates = self
            .records
            .range(
                (
                    subject.to_string(),
                    object.to_string(),
                    Window::new(chrono::NaiveDate::MIN, chrono::NaiveDate::MIN),
                )..,
            )
            .take_while(|((s, o, _), _)| s == subject && o == object)
            .map(|(_, r)| r);
        let mut best: Option<&RelationRecord> = None;
        let mut near_misses = Vec::new();
        for r in candidates {
            if r.window.contains(&window) {
                let narrower = best.is_none_or(|b| (r.window.end - r.window.start) < (b.window.end - b.window.start));
                if narrower {
                    best = Some(r);
                }
            } else if r.window.overlaps(&window) {
                near_misses.push(r.window);
            }
        }
        Ok(match best {
            Some(r) => r.clone(),
            None => RelationRecord {
                subject: subject.to_string(),
                object: object.to_string(),
                window,
                state: RelationState::Undefined { near_misses },
            },
        })
    }

    pub fn relation_matrix(&self, nations: &[String], window: Window) -> Result<RelationMatrix, RelationError> {
        for id in nations {
            self.require(id)?;
        }
        let cells = nations
            .iter()
            .map(|a| {
                nations
                    .iter()
                    .map(|b| self.query_relation(a, b, window).map(|r| r.label()))
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(RelationMatrix {
            nations: nations.to_vec(),
            cells,
        })
    }

    pub fn to_document(&self) -> StoreDocument {
        StoreDocument {
            nations: self.nations.values().cloned().collect(),
            records: self.records.values().cloned().collect(),
        }
    }

    pub fn from_document(doc: StoreDocument) -> Result<Self, RelationError> {
        let mut store = RelationStore::new();
        for n in doc.nations {
            store.register_nation(n)?;
        }
        for r in doc.records {
            store.require(&r.subject)?;
            store.require(&r.object)?;
            if r.subject == r.object {
                return Err(RelationError::SelfRelation(r.subject));
            }
            if r.evaluated().is_none() {
                return Err(RelationError::InvalidStore(format!(
                    "record {} -> {} over {} is not an evaluation",
                    r.subject, r.object, r.window
                )));
            }
            let key = (r.subject.clone(), r.object.clone(), r.window);
            if store.records.insert(key, r).is_some() {
                return Err(RelationError::InvalidStore("duplicate record key".into()));
            }
        }
        Ok(store)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("store serializes")
    }

    pub fn from_json(document: &str) -> Result<Self, StoreLoadError> {
        let doc: StoreDocument = serde_json::from_str(document)?;
        Ok(Self::from_document(doc)?)
    }
}

#[derive(Debug, Error)]
pub enum StoreLoadError {
    #[error("parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error(transparent)]
    Invalid(#[from] RelationError),
}

/// A store shared between one writer and many readers. Readers see either the
/// state before or after a write, never a partial one.
#[derive(Debug, Clone, Default)]
pub struct SharedStore(Arc<RwLock<RelationStore>>);

impl SharedStore {
    pub fn new(store: RelationStore) -> Self {
        SharedStore(Arc::new(RwLock::new(store)))
    }

    pub fn read<T>(&self, f: impl FnOnce(&RelationStore) -> T) -> T {
        f(&self.0.read().unwrap_or_else(|e| e.into_inner()))
    }

    pub fn write<T>(&self, f: impl FnOnce(&mut RelationStore) -> T) -> T {
        f(&mut self.0.write().unwrap_or_else(|e| e.into_inner()))
    }

    pub fn snapshot(&self) -> RelationStore {
        self.read(Clone::clone)
    }
}
