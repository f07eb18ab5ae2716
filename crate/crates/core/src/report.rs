//! Evaluation reports and their text, JSON and CSV renderings.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{
    self, AlgebraError, BandTable, BandTableDocument, CategoryMassVector, InterpretationConfig, PerCategory,
    RelationCategory, ScalarBounds, ScalarConfig, StrengthInterpretation, WeightVector,
};
use crate::catalog::{self, Assessment, CapMode, PropertyCatalog, Window};
use crate::relations::RelationMatrix;

/// Decimal places used by the text and CSV renderings.
pub const PRINT_PRECISION: usize = 6;

/// Pipeline stage that produced an error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Bounds,
    Masses,
    Bands,
    Classification,
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Stage::Bounds => "bounds",
            Stage::Masses => "masses",
            Stage::Bands => "bands",
            Stage::Classification => "classification",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{stage} stage failed: {message}")]
pub struct PipelineError {
    pub stage: Stage,
    pub message: String,
}

impl PipelineError {
    fn new(stage: Stage, e: impl ToString) -> Self {
        PipelineError {
            stage,
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportInputs {
    pub weights: WeightVector,
    pub signs: ScalarConfig,
    pub bounds: ScalarBounds,
    pub masses: CategoryMassVector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub catalog_version: String,
    pub cap_mode: CapMode,
    pub subject: String,
    pub object: String,
    pub window: Window,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub provenance: Provenance,
    pub inputs: ReportInputs,
    pub trust_mass: f64,
    pub strength: f64,
    pub label: RelationCategory,
    pub no_hostile_flag: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub band: Option<String>,
    pub interpretation: StrengthInterpretation,
}

/// Runs validation, aggregation and evaluation for one assessment.
pub fn build_report(
    catalog: &PropertyCatalog,
    assessment: &Assessment,
    weights: &WeightVector,
    signs: &ScalarConfig,
    bands: Option<&BandTableDocument>,
    mode: CapMode,
    interpretation: &InterpretationConfig,
) -> Result<EvaluationReport, PipelineError> {
    let bounds = algebra::compute_bounds(weights, signs).map_err(|e| PipelineError::new(Stage::Bounds, e))?;
    let validation = catalog::validate_assessment(assessment, catalog, mode);
    if let Some(v) = validation.violations.first() {
        return Err(PipelineError::new(Stage::Masses, v));
    }
    let masses =
        catalog::aggregate_masses(assessment, catalog, mode).map_err(|e| PipelineError::new(Stage::Masses, e))?;
    let table = bands
        .map(|doc| BandTable::from_document(doc.clone(), bounds))
        .transpose()
        .map_err(|e| PipelineError::new(Stage::Bands, e))?;
    let evaluation = algebra::evaluate(&masses, weights, signs, table.as_ref()).map_err(|e| {
        let stage = match e {
            AlgebraError::DegenerateScale { .. } => Stage::Bounds,
            AlgebraError::BandTableMismatch { .. } | AlgebraError::InvalidBandTable(_) => Stage::Bands,
            _ => Stage::Classification,
        };
        PipelineError::new(stage, e)
    })?;
    let neutral = RelationCategory::Neutral;
    let interpretation =
        algebra::interpret_strength(&evaluation, masses.get(neutral), weights.get(neutral), interpretation);
    Ok(EvaluationReport {
        provenance: Provenance {
            catalog_version: catalog.version().to_string(),
            cap_mode: mode,
            subject: assessment.subject.clone(),
            object: assessment.object.clone(),
            window: assessment.window,
        },
        inputs: ReportInputs {
            weights: *weights,
            signs: *signs,
            bounds,
            masses,
        },
        trust_mass: evaluation.trust_mass,
        strength: evaluation.strength,
        label: evaluation.label,
        no_hostile_flag: evaluation.no_hostile_flag,
        band: evaluation.band,
        interpretation,
    })
}

/// Fixed-precision number without a negative zero.
pub fn fmt_num(x: f64) -> String {
    let s = format!("{:.*}", PRINT_PRECISION, x);
    if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
        s[1..].to_string()
    } else {
        s
    }
}

fn per_category(values: &PerCategory<f64>) -> String {
    values
        .iter()
        .map(|(c, &v)| format!("{c} {}", fmt_num(v)))
        .collect::<Vec<_>>()
        .join("  ")
}

impl EvaluationReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(s: &str) -> serde_json::Result<Self> {
        serde_json::from_str(s)
    }

    /// Pipeline trace in evaluation order: weights, bounds, masses, trust
    /// mass, strength, label.
    pub fn to_text(&self) -> String {
        let p = &self.provenance;
        let i = &self.inputs;
        let b = &i.bounds;
        let mut out = String::new();
        let _ = writeln!(out, "relation   {} -> {} over {}", p.subject, p.object, p.window);
        let _ = writeln!(
            out,
            "catalog    {} ({} caps)",
            p.catalog_version,
            cap_mode_name(p.cap_mode)
        );
        let _ = writeln!(out, "weights    {}", per_category(i.weights.as_per_category()));
        let signs = i
            .signs
            .0
            .iter()
            .map(|(c, s)| format!("{c} {}", s.symbol()))
            .collect::<Vec<_>>()
            .join("  ");
        let _ = writeln!(out, "signs      {signs}");
        let _ = writeln!(
            out,
            "bounds     lower {}  upper {}  middle band [{}, {}]",
            fmt_num(b.lower),
            fmt_num(b.upper),
            fmt_num(b.middle_band_low),
            fmt_num(b.middle_band_high)
        );
        let _ = writeln!(out, "masses     {}", per_category(i.masses.as_per_category()));
        let _ = writeln!(out, "trust mass {}", fmt_num(self.trust_mass));
        let _ = writeln!(out, "strength   {}", fmt_num(self.strength));
        let _ = writeln!(out, "label      {}", self.label);
        if let Some(band) = &self.band {
            let _ = writeln!(out, "band       {band}");
        }
        let f = &self.interpretation;
        let _ = writeln!(
            out,
            "flags      no_hostile_flag={} contradiction_prone={} fair_consistent={} neutral_biased={} no_hostile={}",
            self.no_hostile_flag, f.contradiction_prone, f.fair_consistent, f.neutral_biased, f.no_hostile
        );
        let _ = writeln!(
            out,
            "neutral    distance weighted {}  raw {}",
            fmt_num(f.neutral_distance_weighted),
            fmt_num(f.neutral_distance_raw)
        );
        out
    }

    pub fn to_csv(&self) -> String {
        let p = &self.provenance;
        let i = &self.inputs;
        let b = &i.bounds;
        let f = &self.interpretation;
        let mut header: Vec<String> = [
            "subject",
            "object",
            "window_start",
            "window_end",
            "catalog_version",
            "cap_mode",
        ]
        .map(String::from)
        .to_vec();
        let mut row = vec![
            p.subject.clone(),
            p.object.clone(),
            p.window.start.to_string(),
            p.window.end.to_string(),
            p.catalog_version.clone(),
            cap_mode_name(p.cap_mode).to_string(),
        ];
        for c in RelationCategory::ALL {
            header.push(format!("weight_{c}"));
            row.push(fmt_num(i.weights.get(c)));
        }
        for c in RelationCategory::ALL {
            header.push(format!("sign_{c}"));
            row.push(i.signs.get(c).symbol().to_string());
        }
        for (name, v) in [
            ("lower", b.lower),
            ("upper", b.upper),
            ("middle_band_low", b.middle_band_low),
            ("middle_band_high", b.middle_band_high),
        ] {
            header.push(name.into());
            row.push(fmt_num(v));
        }
        for c in RelationCategory::ALL {
            header.push(format!("mass_{c}"));
            row.push(fmt_num(i.masses.get(c)));
        }
        let tail = [
            ("trust_mass", fmt_num(self.trust_mass)),
            ("strength", fmt_num(self.strength)),
            ("label", self.label.to_string()),
            ("band", self.band.clone().unwrap_or_default()),
            ("no_hostile_flag", self.no_hostile_flag.to_string()),
            ("contradiction_prone", f.contradiction_prone.to_string()),
            ("fair_consistent", f.fair_consistent.to_string()),
            ("neutral_biased", f.neutral_biased.to_string()),
            ("no_hostile", f.no_hostile.to_string()),
        ];
        for (name, v) in tail {
            header.push(name.into());
            row.push(v);
        }
        write_csv(&[header, row])
    }
}

fn cap_mode_name(mode: CapMode) -> &'static str {
    match mode {
        CapMode::Strict => "strict",
        CapMode::Free => "free",
    }
}

pub(crate) fn write_csv(rows: &[Vec<String>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.write_record(r).expect("write to memory");
    }
    String::from_utf8(w.into_inner().expect("flush to memory")).expect("csv is utf-8")
}

fn cell(label: Option<RelationCategory>) -> &'static str {
    label.map_or("undefined", RelationCategory::as_str)
}

pub fn matrix_to_text(m: &RelationMatrix) -> String {
    if m.nations.is_empty() {
        return String::new();
    }
    let width = m
        .nations
        .iter()
        .map(String::len)
        .chain(["undefined".len()])
        .max()
        .unwrap_or(0);
    let mut out = String::new();
    let _ = write!(out, "{:width$}", "");
    for n in &m.nations {
        let _ = write!(out, "  {n:width$}");
    }
    out = out.trim_end().to_string();
    out.push('\n');
    for (n, row) in m.nations.iter().zip(&m.cells) {
        let mut line = format!("{n:width$}");
        for &c in row {
            let _ = write!(line, "  {:width$}", cell(c));
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out
}

pub fn matrix_to_csv(m: &RelationMatrix) -> String {
    if m.nations.is_empty() {
        return String::new();
    }
    let mut rows = vec![std::iter::once(String::new())
        .chain(m.nations.iter().cloned())
        .collect::<Vec<_>>()];
    for (n, row) in m.nations.iter().zip(&m.cells) {
        rows.push(
            std::iter::once(n.clone())
                .chain(row.iter().map(|&c| cell(c).to_string()))
                .collect(),
        );
    }
    write_csv(&rows)
}

pub fn catalog_to_text(catalog: &PropertyCatalog) -> String {
    let mut out = format!("catalog version {}\n", catalog.version());
    for category in [
        RelationCategory::Friendly,
        RelationCategory::Neutral,
        RelationCategory::Hostile,
    ] {
        let _ = writeln!(out, "\n{category}");
        let mut total = 0.0;
        for p in catalog.in_category(category) {
            total += p.cap;
            let _ = writeln!(out, "  {:<6} {:>6}  {}", p.id, p.cap, p.description);
        }
        let _ = writeln!(out, "  {:<6} {:>6}", "TOTAL", format!("{:.1}", total));
    }
    out
}
