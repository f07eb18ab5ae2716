//! Property catalogs and evidence-backed assessments.
//!
//! A catalog lists the capped properties of each relation category; within a
//! category the caps total 1. An assessment records observed property values
//! for one directed pair over an observation window, and aggregates into a
//! [`CategoryMassVector`].

use std::collections::HashSet;
use std::fmt;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{CategoryMassVector, PerCategory, RelationCategory, TOLERANCE};

const DEFAULT_CATALOG_JSON: &str = include_str!("../data/default_catalog.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyDef {
    pub id: String,
    pub category: RelationCategory,
    pub cap: f64,
    pub description: String,
}

/// Serialized shape of a catalog, before invariants are checked.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatalogDocument {
    pub version: String,
    pub properties: Vec<PropertyDef>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CatalogViolation {
    #[error("property `{id}` has cap {cap} outside [0, 1]")]
    CapOutOfRange { id: String, cap: f64 },
    #[error("property id `{0}` is defined more than once")]
    DuplicateId(String),
    #[error("{category} caps total {total}, expected 1")]
    CategoryTotal { category: RelationCategory, total: f64 },
}

impl CatalogDocument {
    /// Every invariant violation, in document order then by category.
    pub fn violations(&self) -> Vec<CatalogViolation> {
        let mut out = Vec::new();
        let mut seen = HashSet::new();
        for p in &self.properties {
            if !p.cap.is_finite() || !(0.0..=1.0).contains(&p.cap) {
                out.push(CatalogViolation::CapOutOfRange {
                    id: p.id.clone(),
                    cap: p.cap,
                });
            }
            if !seen.insert(p.id.as_str()) {
                out.push(CatalogViolation::DuplicateId(p.id.clone()));
            }
        }
        for category in RelationCategory::ALL {
            let total: f64 = self
                .properties
                .iter()
                .filter(|p| p.category == category)
                .map(|p| p.cap)
                .sum();
            if (total - 1.0).abs() > TOLERANCE {
                out.push(CatalogViolation::CategoryTotal { category, total });
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CatalogError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid catalog: {}", join(.0))]
    Invalid(Vec<CatalogViolation>),
}

fn join<T: fmt::Display>(items: &[T]) -> String {
    items.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ")
}

impl From<serde_json::Error> for CatalogError {
    fn from(e: serde_json::Error) -> Self {
        CatalogError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        }
    }
}

/// A validated catalog: caps in `[0, 1]`, unique ids, and each category's caps
/// totalling 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CatalogDocument", into = "CatalogDocument")]
pub struct PropertyCatalog {
    version: String,
    properties: Vec<PropertyDef>,
}

impl TryFrom<CatalogDocument> for PropertyCatalog {
    type Error = CatalogError;

    fn try_from(doc: CatalogDocument) -> Result<Self, CatalogError> {
        let violations = doc.violations();
        if !violations.is_empty() {
            return Err(CatalogError::Invalid(violations));
        }
        Ok(PropertyCatalog {
            version: doc.version,
            properties: doc.properties,
        })
    }
}

impl From<PropertyCatalog> for CatalogDocument {
    fn from(c: PropertyCatalog) -> Self {
        CatalogDocument {
            version: c.version,
            properties: c.properties,
        }
    }
}

impl PropertyCatalog {
    /// The shipped catalog: six friendly, three neutral and six hostile
    /// properties with their published caps.
    pub fn default_catalog() -> Self {
        load_catalog(DEFAULT_CATALOG_JSON).expect("shipped catalog is valid")
    }

    pub fn version(&self) -> &str {
        &self.version
    }

    pub fn properties(&self) -> &[PropertyDef] {
        &self.properties
    }

    pub fn get(&self, id: &str) -> Option<&PropertyDef> {
        self.properties.iter().find(|p| p.id == id)
    }

    pub fn in_category(&self, category: RelationCategory) -> impl Iterator<Item = &PropertyDef> {
        self.properties.iter().filter(move |p| p.category == category)
    }

    /// Number of properties per category (the cardinalities of each table).
    pub fn cardinalities(&self) -> PerCategory<usize> {
        PerCategory::from_fn(|c| self.in_category(c).count())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("catalog serializes")
    }
}

pub fn load_catalog(document: &str) -> Result<PropertyCatalog, CatalogError> {
    let doc: CatalogDocument = serde_json::from_str(document)?;
    doc.try_into()
}

/// Inclusive date range of an observation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Window {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl Window {
    pub fn new(start: NaiveDate, end: NaiveDate) -> Self {
        Window { start, end }
    }

    pub fn is_ordered(&self) -> bool {
        self.start <= self.end
    }

    pub fn contains_date(&self, date: NaiveDate) -> bool {
        self.start <= date && date <= self.end
    }

    pub fn contains(&self, other: &Window) -> bool {
        self.start <= other.start && other.end <= self.end
    }

    pub fn overlaps(&self, other: &Window) -> bool {
        self.start <= other.end && other.start <= self.end
    }
}

impl fmt::Display for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.start, self.end)
    }
}

impl std::str::FromStr for Window {
    type Err = String;

    /// `YYYY-MM-DD..YYYY-MM-DD`
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (a, b) = s
            .split_once("..")
            .ok_or_else(|| format!("window `{s}` must look like 2001-01-01..2005-12-31"))?;
        let parse =
            |d: &str| NaiveDate::parse_from_str(d.trim(), "%Y-%m-%d").map_err(|e| format!("bad date `{d}`: {e}"));
        let w = Window::new(parse(a)?, parse(b)?);
        if !w.is_ordered() {
            return Err(format!("window `{s}` ends before it starts"));
        }
        Ok(w)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvidenceLink {
    pub date: NaiveDate,
    pub source: String,
    pub summary: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssessmentEntry {
    pub property: String,
    pub value: f64,
    #[serde(default)]
    pub evidence: Vec<EvidenceLink>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assessment {
    pub subject: String,
    pub object: String,
    pub window: Window,
    #[serde(default)]
    pub entries: Vec<AssessmentEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub notes: Option<String>,
}

impl Assessment {
    pub fn empty(subject: impl Into<String>, object: impl Into<String>, window: Window) -> Self {
        Assessment {
            subject: subject.into(),
            object: object.into(),
            window,
            entries: Vec::new(),
            notes: None,
        }
    }

    pub fn from_json(document: &str) -> Result<Self, CatalogError> {
        Ok(serde_json::from_str(document)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("assessment serializes")
    }
}

/// How observed values are bounded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CapMode {
    /// Each value lies in `[0, cap]` of its property.
    #[default]
    Strict,
    /// Each value lies in `[0, 1]`; only the per-category total is bounded.
    Free,
}

impl std::str::FromStr for CapMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "strict" => Ok(CapMode::Strict),
            "free" => Ok(CapMode::Free),
            other => Err(format!("unknown cap mode `{other}` (expected strict or free)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AssessmentViolation {
    #[error("window {0} ends before it starts")]
    InvertedWindow(Window),
    #[error("entry references unknown property `{0}`")]
    UnknownProperty(String),
    #[error("property `{0}` appears in more than one entry")]
    DuplicateEntry(String),
    #[error("property `{id}` value {value} is outside [0, {limit}]")]
    ValueOutOfRange { id: String, value: f64, limit: f64 },
    #[error("evidence for `{id}` dated {date} falls outside window {window}")]
    EvidenceOutsideWindow {
        id: String,
        date: NaiveDate,
        window: Window,
    },
    #[error("{category} mass {total} exceeds 1")]
    CategoryOverflow { category: RelationCategory, total: f64 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AssessmentWarning {
    NoEvidence(String),
}

impl fmt::Display for AssessmentWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AssessmentWarning::NoEvidence(id) => write!(f, "entry `{id}` cites no evidence"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<AssessmentViolation>,
    pub warnings: Vec<AssessmentWarning>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Per-entry checks shared by validation and aggregation. Returns the
/// per-category totals over entries that reference known properties.
fn scan(
    assessment: &Assessment,
    catalog: &PropertyCatalog,
    mode: CapMode,
    mut on_violation: impl FnMut(AssessmentViolation),
) -> PerCategory<f64> {
    let mut totals = PerCategory::new(0.0, 0.0, 0.0);
    let mut seen = HashSet::new();
    for entry in &assessment.entries {
        let Some(def) = catalog.get(&entry.property) else {
            on_violation(AssessmentViolation::UnknownProperty(entry.property.clone()));
            continue;
        };
        if !seen.insert(entry.property.as_str()) {
            on_violation(AssessmentViolation::DuplicateEntry(entry.property.clone()));
        }
        let limit = match mode {
            CapMode::Strict => def.cap,
            CapMode::Free => 1.0,
        };
        if !entry.value.is_finite() || entry.value < 0.0 || entry.value > limit + TOLERANCE {
            on_violation(AssessmentViolation::ValueOutOfRange {
                id: entry.property.clone(),
                value: entry.value,
                limit,
            });
        }
        totals[def.category] += entry.value;
    }
    totals
}

fn overflow(totals: &PerCategory<f64>) -> impl Iterator<Item = AssessmentViolation> + '_ {
    totals
        .iter()
        .filter(|(_, &t)| t > 1.0 + TOLERANCE)
        .map(|(category, &total)| AssessmentViolation::CategoryOverflow { category, total })
}

/// Collects every violation instead of stopping at the first one.
pub fn validate_assessment(assessment: &Assessment, catalog: &PropertyCatalog, mode: CapMode) -> ValidationReport {
    let mut report = ValidationReport::default();
    if !assessment.window.is_ordered() {
        report
            .violations
            .push(AssessmentViolation::InvertedWindow(assessment.window));
    }
    let totals = scan(assessment, catalog, mode, |v| report.violations.push(v));
    report.violations.extend(overflow(&totals));
    for entry in &assessment.entries {
        if entry.evidence.is_empty() {
            report
                .warnings
                .push(AssessmentWarning::NoEvidence(entry.property.clone()));
        }
        for ev in &entry.evidence {
            if !assessment.window.contains_date(ev.date) {
                report.violations.push(AssessmentViolation::EvidenceOutsideWindow {
                    id: entry.property.clone(),
                    date: ev.date,
                    window: assessment.window,
                });
            }
        }
    }
    report
}

/// Sums observed values per category. Properties without an entry contribute
/// nothing. Fails on the first entry-level violation or on a category total
/// above 1.
pub fn aggregate_masses(
    assessment: &Assessment,
    catalog: &PropertyCatalog,
    mode: CapMode,
) -> Result<CategoryMassVector, AssessmentViolation> {
    let mut first = None;
    let totals = scan(assessment, catalog, mode, |v| {
        first.get_or_insert(v);
    });
    if let Some(v) = first.or_else(|| overflow(&totals).next()) {
        return Err(v);
    }
    let clamped = PerCategory::from_fn(|c| totals[c].min(1.0));
    Ok(CategoryMassVector::try_from(clamped).expect("totals checked against [0, 1]"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn date(s: &str) -> NaiveDate {
        s.parse().unwrap()
    }

    fn window() -> Window {
        Window::new(date("2001-01-01"), date("2005-12-31"))
    }

    fn entry(id: &str, value: f64) -> AssessmentEntry {
        AssessmentEntry {
            property: id.into(),
            value,
            evidence: vec![],
        }
    }

    #[test]
    fn default_catalog_caps() {
        let c = PropertyCatalog::default_catalog();
        let caps = |cat| c.in_category(cat).map(|p| p.cap).collect::<Vec<_>>();
        assert_eq!(caps(RelationCategory::Friendly), [0.5, 0.2, 0.1, 0.1, 0.075, 0.025]);
        assert_eq!(caps(RelationCategory::Neutral), [0.25, 0.35, 0.40]);
        assert_eq!(caps(RelationCategory::Hostile), [0.5, 0.2, 0.075, 0.125, 0.05, 0.05]);
        assert_eq!(c.cardinalities(), PerCategory::new(6, 3, 6));
    }

    #[test]
    fn catalog_total_error_names_category() {
        let mut doc: CatalogDocument = PropertyCatalog::default_catalog().into();
        doc.properties.iter_mut().find(|p| p.id == "h.P1").unwrap().cap = 0.6;
        let err = PropertyCatalog::try_from(doc).unwrap_err();
        let CatalogError::Invalid(v) = &err else {
            panic!("{err}")
        };
        assert!(matches!(
            v[..],
            [CatalogViolation::CategoryTotal {
                category: RelationCategory::Hostile,
                ..
            }]
        ));
        assert!(err.to_string().contains("hostile"));
    }

    #[test]
    fn catalog_parse_error_has_location() {
        let err = load_catalog("{\n  \"version\": \"x\",\n  \"properties\": [ { \"id\": 3 } ]\n}").unwrap_err();
        match err {
            CatalogError::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn duplicate_ids_and_bad_caps() {
        let doc = CatalogDocument {
            version: "t".into(),
            properties: vec![
                PropertyDef {
                    id: "x".into(),
                    category: RelationCategory::Hostile,
                    cap: 1.0,
                    description: String::new(),
                },
                PropertyDef {
                    id: "x".into(),
                    category: RelationCategory::Neutral,
                    cap: 1.0,
                    description: String::new(),
                },
                PropertyDef {
                    id: "y".into(),
                    category: RelationCategory::Friendly,
                    cap: 1.5,
                    description: String::new(),
                },
            ],
        };
        let v = doc.violations();
        assert!(v.contains(&CatalogViolation::DuplicateId("x".into())));
        assert!(v.iter().any(|v| matches!(v, CatalogViolation::CapOutOfRange { .. })));
        assert!(v.iter().any(|v| matches!(
            v,
            CatalogViolation::CategoryTotal {
                category: RelationCategory::Friendly,
                ..
            }
        )));
    }

    #[test]
    fn aggregate_usa_gbr() {
        let c = PropertyCatalog::default_catalog();
        let mut a = Assessment::empty("USA", "GBR", window());
        for (id, v) in [
            ("n.P1", 0.25),
            ("n.P2", 0.35),
            ("n.P3", 0.40),
            ("f.P1", 0.5),
            ("f.P3", 0.1),
            ("f.P5", 0.075),
            ("f.P6", 0.025),
        ] {
            a.entries.push(entry(id, v));
        }
        let m = aggregate_masses(&a, &c, CapMode::Strict).unwrap();
        assert_eq!(m.get(RelationCategory::Hostile), 0.0);
        assert!((m.get(RelationCategory::Neutral) - 1.0).abs() <= 1e-12);
        assert!((m.get(RelationCategory::Friendly) - 0.70).abs() <= 1e-12);
    }

    #[test]
    fn aggregate_empty_is_zero() {
        let c = PropertyCatalog::default_catalog();
        let a = Assessment::empty("A", "B", window());
        assert_eq!(
            aggregate_masses(&a, &c, CapMode::Strict).unwrap(),
            CategoryMassVector::zero()
        );
    }

    #[test]
    fn aggregate_errors() {
        let c = PropertyCatalog::default_catalog();
        let mut a = Assessment::empty("A", "B", window());
        a.entries.push(entry("h.P9", 0.1));
        assert_eq!(
            aggregate_masses(&a, &c, CapMode::Strict),
            Err(AssessmentViolation::UnknownProperty("h.P9".into()))
        );

        a.entries = vec![entry("h.P4", 0.15)];
        assert!(matches!(
            aggregate_masses(&a, &c, CapMode::Strict),
            Err(AssessmentViolation::ValueOutOfRange { .. })
        ));
        assert!(aggregate_masses(&a, &c, CapMode::Free).is_ok());

        a.entries = vec![entry("h.P1", 0.7), entry("h.P2", 0.5)];
        assert!(matches!(
            aggregate_masses(&a, &c, CapMode::Free),
            Err(AssessmentViolation::CategoryOverflow {
                category: RelationCategory::Hostile,
                ..
            })
        ));

        a.entries = vec![entry("h.P1", -0.1)];
        assert!(aggregate_masses(&a, &c, CapMode::Free).is_err());
    }

    #[test]
    fn validation_reports_everything() {
        let c = PropertyCatalog::default_catalog();
        let mut a = Assessment::empty("A", "B", window());
        a.entries.push(entry("h.P9", 0.1));
        a.entries.push(AssessmentEntry {
            property: "f.P1".into(),
            value: 0.5,
            evidence: vec![EvidenceLink {
                date: date("2007-03-01"),
                source: "s".into(),
                summary: "late".into(),
            }],
        });
        a.entries.push(entry("n.P1", 0.3));
        let r = validate_assessment(&a, &c, CapMode::Strict);
        assert_eq!(r.violations.len(), 3, "{:?}", r.violations);
        assert!(r
            .violations
            .contains(&AssessmentViolation::UnknownProperty("h.P9".into())));
        assert!(r
            .violations
            .iter()
            .any(|v| matches!(v, AssessmentViolation::EvidenceOutsideWindow { .. })));
        assert_eq!(
            r.warnings,
            vec![
                AssessmentWarning::NoEvidence("h.P9".into()),
                AssessmentWarning::NoEvidence("n.P1".into())
            ]
        );
    }

    #[test]
    fn inverted_window_and_duplicates() {
        let c = PropertyCatalog::default_catalog();
        let mut a = Assessment::empty("A", "B", Window::new(date("2005-01-01"), date("2001-01-01")));
        a.entries = vec![entry("n.P1", 0.25), entry("n.P1", 0.25)];
        let r = validate_assessment(&a, &c, CapMode::Strict);
        assert!(r
            .violations
            .iter()
            .any(|v| matches!(v, AssessmentViolation::InvertedWindow(_))));
        assert!(r
            .violations
            .contains(&AssessmentViolation::DuplicateEntry("n.P1".into())));
    }

    #[test]
    fn window_parsing() {
        let w: Window = "2001-01-01..2005-12-31".parse().unwrap();
        assert_eq!(w, window());
        assert!("2005-01-01..2001-01-01".parse::<Window>().is_err());
        assert!("2001-01-01".parse::<Window>().is_err());
        assert!(w.contains(&"2002-01-01..2003-01-01".parse().unwrap()));
        assert!(!w.contains(&"2000-01-01..2003-01-01".parse().unwrap()));
    }
}
