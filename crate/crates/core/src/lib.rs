//! Trust algebra for directed nation-to-nation relations.
//!
//! [`algebra`] holds the calculus: normalized category weights, the signed
//! scale with its middle band, the trust mass and its strength, and
//! classification into hostile, neutral or friendly (or a finer band table).
//! [`catalog`] turns evidence-backed assessments into category masses,
//! [`relations`] stores directed evaluations between registered nations, and
//! [`report`], [`sweep`] and [`cli`] are the reporting surface.
//!
//! ```
//! use nation_trust::algebra::{evaluate, CategoryMassVector, RelationCategory, ScalarConfig, WeightVector};
//!
//! let masses = CategoryMassVector::new(0.9, 0.6, 0.15).unwrap();
//! let weights = WeightVector::new(0.45, 0.10, 0.45).unwrap();
//! let e = evaluate(&masses, &weights, &ScalarConfig::default(), None).unwrap();
//! assert!((e.trust_mass + 0.2775).abs() < 1e-12);
//! assert_eq!(e.label, RelationCategory::Hostile);
//! ```

pub mod algebra;
pub mod catalog;
pub mod cli;
pub mod relations;
pub mod report;
pub mod sweep;

pub use algebra::{
    classify, classify_extended, compute_bounds, compute_strength, compute_trust_mass, evaluate, interpret_strength,
    validate_weights, AlgebraError, BandTable, CategoryMassVector, RelationCategory, ScalarBounds, ScalarConfig,
    TrustEvaluation, WeightVector,
};
pub use catalog::{aggregate_masses, load_catalog, validate_assessment, Assessment, CapMode, PropertyCatalog};
pub use relations::{Nation, RelationRecord, RelationStore};
