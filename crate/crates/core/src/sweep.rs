//! What-if sweeps over one weight or one property value.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{
    self, AlgebraError, CategoryMassVector, PerCategory, RelationCategory, ScalarConfig, WeightVector, TOLERANCE,
};
use crate::catalog::{self, Assessment, AssessmentEntry, AssessmentViolation, CapMode, PropertyCatalog};
use crate::report::{fmt_num, write_csv};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind", content = "target")]
pub enum SweepTarget {
    /// Sweep one category's weight; the other two rescale proportionally.
    Weight(RelationCategory),
    /// Sweep the observed value of one catalog property.
    Property(String),
}

impl std::fmt::Display for SweepTarget {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SweepTarget::Weight(c) => write!(f, "weight {c}"),
            SweepTarget::Property(id) => write!(f, "property {id}"),
        }
    }
}

/// Walks from `from` toward `to` in increments of `step`; either direction is
/// allowed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivitySpec {
    pub target: SweepTarget,
    pub from: f64,
    pub to: f64,
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SweepError {
    #[error("invalid sweep: {0}")]
    InvalidSpec(String),
    #[error("cannot renormalize: {0} is 0 and the swept weight is {1}")]
    CannotRenormalize(String, f64),
    #[error("unknown property `{0}`")]
    UnknownProperty(String),
    #[error("at swept value {value}: {source}")]
    Assessment { value: f64, source: AssessmentViolation },
    #[error("at swept value {value}: {source}")]
    Algebra { value: f64, source: AlgebraError },
    #[error("base configuration: {0}")]
    Base(String),
}

impl SensitivitySpec {
    /// Swept values in sweep order. The last value snaps to `to` when within
    /// tolerance of it.
    pub fn grid(&self) -> Result<Vec<f64>, SweepError> {
        let bad = |m: &str| Err(SweepError::InvalidSpec(m.into()));
        if !(self.from.is_finite() && self.to.is_finite() && self.step.is_finite()) {
            return bad("non-finite bound or step");
        }
        if self.step <= 0.0 {
            return bad("step must be positive");
        }
        if !(0.0..=1.0).contains(&self.from) || !(0.0..=1.0).contains(&self.to) {
            return bad("swept values must stay within [0, 1]");
        }
        let span = (self.to - self.from).abs();
        let count = (span / self.step + TOLERANCE).floor() as usize;
        let dir = if self.to >= self.from { 1.0 } else { -1.0 };
        Ok((0..=count)
            .map(|i| {
                let v = self.from + dir * i as f64 * self.step;
                if (v - self.to).abs() <= TOLERANCE {
                    self.to
                } else {
                    v.clamp(0.0, 1.0)
                }
            })
            .collect())
    }
}

/// Sets one weight and rescales the other two so their ratio is preserved.
pub fn renormalize(base: &WeightVector, swept: RelationCategory, value: f64) -> Result<WeightVector, SweepError> {
    let rest_base: f64 = RelationCategory::ALL
        .iter()
        .filter(|&&c| c != swept)
        .map(|&c| base.get(c))
        .sum();
    let rest = 1.0 - value;
    let raw = PerCategory::from_fn(|c| {
        if c == swept {
            value
        } else if rest_base > 0.0 {
            base.get(c) * rest / rest_base
        } else {
            0.0
        }
    });
    if rest_base == 0.0 && rest > TOLERANCE {
        let others = RelationCategory::ALL
            .iter()
            .filter(|&&c| c != swept)
            .map(|c| c.as_str())
            .collect::<Vec<_>>()
            .join(" + ");
        return Err(SweepError::CannotRenormalize(others, value));
    }
    algebra::validate_weights(raw).map_err(|source| SweepError::Algebra { value, source })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub weights: WeightVector,
    pub masses: CategoryMassVector,
    pub trust_mass: f64,
    pub strength: f64,
    pub label: RelationCategory,
    pub flipped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub spec: SensitivitySpec,
    pub base_label: RelationCategory,
    pub base_trust_mass: f64,
    pub rows: Vec<SweepRow>,
    /// Swept value of the first row whose label differs from the base label.
    pub first_flip: Option<f64>,
}

fn with_value(assessment: &Assessment, id: &str, value: f64) -> Assessment {
    let mut a = assessment.clone();
    match a.entries.iter_mut().find(|e| e.property == id) {
        Some(e) => e.value = value,
        None => a.entries.push(AssessmentEntry {
            property: id.to_string(),
            value,
            evidence: vec![],
        }),
    }
    a
}

/// Re-evaluates the assessment at every grid point and marks label flips
/// relative to the unmodified base configuration.
pub fn run_sweep(
    catalog: &PropertyCatalog,
    assessment: &Assessment,
    base_weights: &WeightVector,
    signs: &ScalarConfig,
    mode: CapMode,
    spec: &SensitivitySpec,
) -> Result<SweepResult, SweepError> {
    if let SweepTarget::Property(id) = &spec.target {
        if catalog.get(id).is_none() {
            return Err(SweepError::UnknownProperty(id.clone()));
        }
    }
    let grid = spec.grid()?;
    let base_masses =
        catalog::aggregate_masses(assessment, catalog, mode).map_err(|e| SweepError::Base(e.to_string()))?;
    let base =
        algebra::evaluate(&base_masses, base_weights, signs, None).map_err(|e| SweepError::Base(e.to_string()))?;

    let rows = grid
        .into_iter()
        .map(|value| {
            let (weights, masses) = match &spec.target {
                SweepTarget::Weight(c) => (renormalize(base_weights, *c, value)?, base_masses),
                SweepTarget::Property(id) => {
                    let a = with_value(assessment, id, value);
                    let m = catalog::aggregate_masses(&a, catalog, mode)
                        .map_err(|source| SweepError::Assessment { value, source })?;
                    (*base_weights, m)
                }
            };
            let e = algebra::evaluate(&masses, &weights, signs, None)
                .map_err(|source| SweepError::Algebra { value, source })?;
            Ok(SweepRow {
                value,
                weights,
                masses,
                trust_mass: e.trust_mass,
                strength: e.strength,
                label: e.label,
                flipped: e.label != base.label,
            })
        })
        .collect::<Result<Vec<_>, SweepError>>()?;
    let first_flip = rows.iter().find(|r| r.flipped).map(|r| r.value);
    Ok(SweepResult {
        spec: spec.clone(),
        base_label: base.label,
        base_trust_mass: base.trust_mass,
        rows,
        first_flip,
    })
}

impl SweepResult {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("sweep serializes");
        s.push('\n');
        s
    }

    pub fn to_csv(&self) -> String {
        let mut rows = vec![["value", "trust_mass", "strength", "label", "flipped"]
            .map(String::from)
            .to_vec()];
        rows.extend(self.rows.iter().map(|r| {
            vec![
                fmt_num(r.value),
                fmt_num(r.trust_mass),
                fmt_num(r.strength),
                r.label.to_string(),
                r.flipped.to_string(),
            ]
        }));
        write_csv(&rows)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "sweep {} from {} to {} step {}\nbase  trust mass {}  label {}\n\n",
            self.spec.target,
            fmt_num(self.spec.from),
            fmt_num(self.spec.to),
            fmt_num(self.spec.step),
            fmt_num(self.base_trust_mass),
            self.base_label
        );
        out.push_str(&format!(
            "{:>10}  {:>10}  {:>10}  {:<8}  flip\n",
            "value", "trust mass", "strength", "label"
        ));
        for r in &self.rows {
            let line = format!(
                "{:>10}  {:>10}  {:>10}  {:<8}  {}",
                fmt_num(r.value),
                fmt_num(r.trust_mass),
                fmt_num(r.strength),
                r.label.as_str(),
                if r.flipped { "*" } else { "" }
            );
            out.push_str(line.trim_end());
            out.push('\n');
        }
        match self.first_flip {
            Some(v) => out.push_str(&format!("\nfirst flip at {}\n", fmt_num(v))),
            None => out.push_str("\nno flip\n"),
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(from: f64, to: f64, step: f64) -> SensitivitySpec {
        SensitivitySpec {
            target: SweepTarget::Weight(RelationCategory::Hostile),
            from,
            to,
            step,
        }
    }

    #[test]
    fn grid_directions() {
        let g = spec(0.45, 0.05, 0.05).grid().unwrap();
        assert_eq!(g.len(), 9);
        assert_eq!(g[0], 0.45);
        assert_eq!(*g.last().unwrap(), 0.05);
        let g = spec(0.0, 1.0, 0.25).grid().unwrap();
        assert_eq!(g, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(spec(0.45, 0.45, 0.05).grid().unwrap(), vec![0.45]);
        // step larger than the span keeps only the start
        assert_eq!(spec(0.45, 0.47, 0.05).grid().unwrap(), vec![0.45]);
        assert!(spec(0.1, 0.2, 0.0).grid().is_err());
        assert!(spec(0.1, 1.2, 0.1).grid().is_err());
    }

    #[test]
    fn renormalization_keeps_ratio() {
        let base = WeightVector::new(0.45, 0.10, 0.45).unwrap();
        let w = renormalize(&base, RelationCategory::Hostile, 0.2).unwrap();
        let ratio = w.get(RelationCategory::Friendly) / w.get(RelationCategory::Neutral);
        assert!((ratio - 4.5).abs() < 1e-12);
        assert!((w.get(RelationCategory::Neutral) + w.get(RelationCategory::Friendly) - 0.8).abs() < 1e-12);
    }

    #[test]
    fn renormalization_fails_when_rest_is_zero() {
        let base = WeightVector::new(1.0, 0.0, 0.0).unwrap();
        assert!(matches!(
            renormalize(&base, RelationCategory::Hostile, 0.5),
            Err(SweepError::CannotRenormalize(..))
        ));
        assert!(renormalize(&base, RelationCategory::Hostile, 1.0).is_ok());
    }
}
