//! The trust calculus: category weights, signed scalar bounds, trust mass,
//! strength, and classification against the middle band or a finer band table.
//!
//! Every weight, sign and mass is keyed by [`RelationCategory`]; there are no
//! positional indices anywhere in this module. All functions are pure.

use std::fmt;
use std::ops::{Index, IndexMut};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Absolute tolerance for normalization and equality checks.
pub const TOLERANCE: f64 = 1e-9;

/// Default distance used by [`interpret_strength`] for its "near to" tests.
pub const DEFAULT_DELTA: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AlgebraError {
    #[error("{category} weight {value} is outside [0, 1]")]
    WeightOutOfRange { category: RelationCategory, value: f64 },
    #[error("weights sum to {sum}, expected 1 (tolerance {TOLERANCE})")]
    WeightsNotNormalized { sum: f64 },
    #[error("{category} mass {value} is outside [0, 1]")]
    MassOutOfRange { category: RelationCategory, value: f64 },
    #[error("non-finite {what} for {category}")]
    NonFinite {
        what: &'static str,
        category: RelationCategory,
    },
    #[error("scalar sign must be -1 or +1, got {0}")]
    InvalidSign(i64),
    #[error("degenerate scale: middle band [{low}, {high}] does not fit inside [{lower}, {upper}]")]
    DegenerateScale {
        lower: f64,
        upper: f64,
        low: f64,
        high: f64,
    },
    #[error("trust mass {value} lies outside the scale [{lower}, {upper}]")]
    OutOfScale { value: f64, lower: f64, upper: f64 },
    #[error("invalid band table: {0}")]
    InvalidBandTable(String),
    #[error(
        "band table was built for bounds [{table_lower}, {table_upper}] but the evaluation uses [{lower}, {upper}]"
    )]
    BandTableMismatch {
        table_lower: f64,
        table_upper: f64,
        lower: f64,
        upper: f64,
    },
}

pub type Result<T, E = AlgebraError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RelationCategory {
    Hostile,
    Neutral,
    Friendly,
}

impl RelationCategory {
    /// Scale order: hostile at the bottom, friendly at the top.
    pub const ALL: [RelationCategory; 3] = [Self::Hostile, Self::Neutral, Self::Friendly];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Hostile => "hostile",
            Self::Neutral => "neutral",
            Self::Friendly => "friendly",
        }
    }
}

impl fmt::Display for RelationCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RelationCategory {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "hostile" | "h" => Ok(Self::Hostile),
            "neutral" | "n" => Ok(Self::Neutral),
            "friendly" | "f" => Ok(Self::Friendly),
            other => Err(format!("unknown relation category `{other}`")),
        }
    }
}

/// Exactly one value per [`RelationCategory`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PerCategory<T> {
    pub hostile: T,
    pub neutral: T,
    pub friendly: T,
}

impl<T> PerCategory<T> {
    pub const fn new(hostile: T, neutral: T, friendly: T) -> Self {
        Self {
            hostile,
            neutral,
            friendly,
        }
    }

    pub fn from_fn(mut f: impl FnMut(RelationCategory) -> T) -> Self {
        Self {
            hostile: f(RelationCategory::Hostile),
            neutral: f(RelationCategory::Neutral),
            friendly: f(RelationCategory::Friendly),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (RelationCategory, &T)> {
        RelationCategory::ALL.into_iter().map(move |c| (c, &self[c]))
    }
}

impl<T> Index<RelationCategory> for PerCategory<T> {
    type Output = T;

    fn index(&self, category: RelationCategory) -> &T {
        match category {
            RelationCategory::Hostile => &self.hostile,
            RelationCategory::Neutral => &self.neutral,
            RelationCategory::Friendly => &self.friendly,
        }
    }
}

impl<T> IndexMut<RelationCategory> for PerCategory<T> {
    fn index_mut(&mut self, category: RelationCategory) -> &mut T {
        match category {
            RelationCategory::Hostile => &mut self.hostile,
            RelationCategory::Neutral => &mut self.neutral,
            RelationCategory::Friendly => &mut self.friendly,
        }
    }
}

/// Normalized observer emphasis per category. Each weight is in `[0, 1]` and
/// the three sum to 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PerCategory<f64>", into = "PerCategory<f64>")]
pub struct WeightVector(PerCategory<f64>);

impl WeightVector {
    pub fn new(hostile: f64, neutral: f64, friendly: f64) -> Result<Self> {
        validate_weights(PerCategory::new(hostile, neutral, friendly))
    }

    pub fn get(&self, category: RelationCategory) -> f64 {
        self.0[category]
    }

    pub fn as_per_category(&self) -> &PerCategory<f64> {
        &self.0
    }
}

impl TryFrom<PerCategory<f64>> for WeightVector {
    type Error = AlgebraError;

    fn try_from(raw: PerCategory<f64>) -> Result<Self> {
        validate_weights(raw)
    }
}

impl From<WeightVector> for PerCategory<f64> {
    fn from(w: WeightVector) -> Self {
        w.0
    }
}

/// Checks that each weight is finite and in `[0, 1]` and that the three sum to 1.
pub fn validate_weights(raw: PerCategory<f64>) -> Result<WeightVector> {
    for (category, &value) in raw.iter() {
        if !value.is_finite() {
            return Err(AlgebraError::NonFinite {
                what: "weight",
                category,
            });
        }
        if !(0.0..=1.0).contains(&value) {
            return Err(AlgebraError::WeightOutOfRange { category, value });
        }
    }
    let sum = raw.hostile + raw.neutral + raw.friendly;
    if (sum - 1.0).abs() > TOLERANCE {
        return Err(AlgebraError::WeightsNotNormalized { sum });
    }
    Ok(WeightVector(raw))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "i64", into = "i64")]
pub enum Sign {
    Negative,
    Positive,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Negative => -1.0,
            Sign::Positive => 1.0,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Sign::Negative => '-',
            Sign::Positive => '+',
        }
    }
}

impl TryFrom<i64> for Sign {
    type Error = AlgebraError;

    fn try_from(v: i64) -> Result<Self> {
        match v {
            -1 => Ok(Sign::Negative),
            1 => Ok(Sign::Positive),
            other => Err(AlgebraError::InvalidSign(other)),
        }
    }
}

impl From<Sign> for i64 {
    fn from(s: Sign) -> i64 {
        match s {
            Sign::Negative => -1,
            Sign::Positive => 1,
        }
    }
}

impl FromStr for Sign {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim() {
            "-" | "-1" => Ok(Sign::Negative),
            "+" | "+1" | "1" => Ok(Sign::Positive),
            other => Err(format!("invalid sign `{other}` (expected - or +)")),
        }
    }
}

/// Scalar sign per category.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ScalarConfig(pub PerCategory<Sign>);

impl Default for ScalarConfig {
    /// Hostile negative, neutral and friendly positive.
    fn default() -> Self {
        ScalarConfig(PerCategory::new(Sign::Negative, Sign::Positive, Sign::Positive))
    }
}

impl ScalarConfig {
    pub fn get(&self, category: RelationCategory) -> Sign {
        self.0[category]
    }

    /// `S_x * W_x` for one category.
    pub fn signed_weight(&self, weights: &WeightVector, category: RelationCategory) -> f64 {
        self.get(category).value() * weights.get(category)
    }

    /// `Σ |S_x * W_x|`, which is 1 for any normalized weight vector.
    pub fn scalar_mass(&self, weights: &WeightVector) -> f64 {
        RelationCategory::ALL
            .iter()
            .map(|&c| self.signed_weight(weights, c).abs())
            .sum()
    }
}

/// The interval scale a trust mass lives on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalarBounds {
    pub lower: f64,
    pub upper: f64,
    pub middle_band_low: f64,
    pub middle_band_high: f64,
}

impl ScalarBounds {
    fn approx_eq(&self, other: &ScalarBounds) -> bool {
        (self.lower - other.lower).abs() <= TOLERANCE
            && (self.upper - other.upper).abs() <= TOLERANCE
            && (self.middle_band_low - other.middle_band_low).abs() <= TOLERANCE
            && (self.middle_band_high - other.middle_band_high).abs() <= TOLERANCE
    }
}

/// Builds the signed scale from weights and signs.
///
/// `lower` and `upper` are the extreme trust masses reachable with masses in
/// `[0, 1]`: the sum of the negatively-signed weights and the sum of the
/// positively-signed weights. Under the default signs this is
/// `lower = -W_hostile` and `upper = W_neutral + W_friendly`. The middle band is
/// `[lower + W_hostile, upper - S_friendly * W_friendly]`.
pub fn compute_bounds(weights: &WeightVector, signs: &ScalarConfig) -> Result<ScalarBounds> {
    let (mut lower, mut upper) = (0.0, 0.0);
    for category in RelationCategory::ALL {
        let sw = signs.signed_weight(weights, category);
        match signs.get(category) {
            Sign::Negative => lower += sw,
            Sign::Positive => upper += sw,
        }
    }
    let low = lower + weights.get(RelationCategory::Hostile);
    let high = upper - signs.signed_weight(weights, RelationCategory::Friendly);
    if low > high + TOLERANCE || low < lower - TOLERANCE || high > upper + TOLERANCE {
        return Err(AlgebraError::DegenerateScale {
            lower,
            upper,
            low,
            high,
        });
    }
    Ok(ScalarBounds {
        lower,
        upper,
        middle_band_low: low,
        middle_band_high: high.max(low),
    })
}

/// Aggregated property mass per category. Masses are independent; their sum
/// may exceed 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PerCategory<f64>", into = "PerCategory<f64>")]
pub struct CategoryMassVector(PerCategory<f64>);

impl CategoryMassVector {
    pub fn new(hostile: f64, neutral: f64, friendly: f64) -> Result<Self> {
        PerCategory::new(hostile, neutral, friendly).try_into()
    }

    pub fn zero() -> Self {
        CategoryMassVector(PerCategory::new(0.0, 0.0, 0.0))
    }

    pub fn get(&self, category: RelationCategory) -> f64 {
        self.0[category]
    }

    pub fn as_per_category(&self) -> &PerCategory<f64> {
        &self.0
    }
}

impl TryFrom<PerCategory<f64>> for CategoryMassVector {
    type Error = AlgebraError;

    fn try_from(raw: PerCategory<f64>) -> Result<Self> {
        for (category, &value) in raw.iter() {
            if !value.is_finite() {
                return Err(AlgebraError::NonFinite { what: "mass", category });
            }
            if !(0.0..=1.0).contains(&value) {
                return Err(AlgebraError::MassOutOfRange { category, value });
            }
        }
        Ok(CategoryMassVector(raw))
    }
}

impl From<CategoryMassVector> for PerCategory<f64> {
    fn from(m: CategoryMassVector) -> Self {
        m.0
    }
}

/// `Σ mass(c) * S_c * W_c` over the three categories.
pub fn compute_trust_mass(masses: &CategoryMassVector, weights: &WeightVector, signs: &ScalarConfig) -> f64 {
    RelationCategory::ALL
        .iter()
        .map(|&c| masses.get(c) * signs.signed_weight(weights, c))
        .sum()
}

/// `Σ mass(c) * W_c`, the unsigned counterpart of the trust mass.
pub fn compute_strength(masses: &CategoryMassVector, weights: &WeightVector) -> f64 {
    RelationCategory::ALL
        .iter()
        .map(|&c| masses.get(c) * weights.get(c))
        .sum()
}

fn check_in_scale(trust_mass: f64, lower: f64, upper: f64) -> Result<()> {
    if !trust_mass.is_finite() || trust_mass < lower - TOLERANCE || trust_mass > upper + TOLERANCE {
        return Err(AlgebraError::OutOfScale {
            value: trust_mass,
            lower,
            upper,
        });
    }
    Ok(())
}

/// Hostile below the middle band, neutral inside it (closed), friendly above.
pub fn classify(trust_mass: f64, bounds: &ScalarBounds) -> Result<RelationCategory> {
    check_in_scale(trust_mass, bounds.lower, bounds.upper)?;
    Ok(if trust_mass < bounds.middle_band_low {
        RelationCategory::Hostile
    } else if trust_mass <= bounds.middle_band_high {
        RelationCategory::Neutral
    } else {
        RelationCategory::Friendly
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub label: String,
    pub low: f64,
    pub high: f64,
    pub parent: RelationCategory,
}

/// A user-defined refinement of the three categories into finer bands.
///
/// Bands are ordered, contiguous, and cover `[lower, upper]` of the bounds the
/// table was built for. Each band sits inside its parent's region, and every
/// category has at least one band.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BandTable {
    bounds: ScalarBounds,
    bands: Vec<Band>,
}

/// On-disk form of a band table: just the ordered band list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandTableDocument {
    pub bands: Vec<Band>,
}

impl BandTable {
    pub fn new(bands: Vec<Band>, bounds: ScalarBounds) -> Result<Self> {
        let bad = |msg: String| Err(AlgebraError::InvalidBandTable(msg));
        let (Some(first), Some(last)) = (bands.first(), bands.last()) else {
            return bad("no bands".into());
        };
        if (first.low - bounds.lower).abs() > TOLERANCE {
            return bad(format!(
                "first band starts at {} but the scale starts at {}",
                first.low, bounds.lower
            ));
        }
        if (last.high - bounds.upper).abs() > TOLERANCE {
            return bad(format!(
                "last band ends at {} but the scale ends at {}",
                last.high, bounds.upper
            ));
        }
        for pair in bands.windows(2) {
            if (pair[0].high - pair[1].low).abs() > TOLERANCE {
                return bad(format!(
                    "gap or overlap between `{}` and `{}`",
                    pair[0].label, pair[1].label
                ));
            }
        }
        for band in &bands {
            if !(band.low.is_finite() && band.high.is_finite()) || band.low > band.high {
                return bad(format!("band `{}` has an empty or inverted range", band.label));
            }
            let (lo, hi) = match band.parent {
                RelationCategory::Hostile => (bounds.lower, bounds.middle_band_low),
                RelationCategory::Neutral => (bounds.middle_band_low, bounds.middle_band_high),
                RelationCategory::Friendly => (bounds.middle_band_high, bounds.upper),
            };
            if band.low < lo - TOLERANCE || band.high > hi + TOLERANCE {
                return bad(format!(
                    "band `{}` [{}, {}] leaves its {} region [{}, {}]",
                    band.label, band.low, band.high, band.parent, lo, hi
                ));
            }
        }
        for category in RelationCategory::ALL {
            if !bands.iter().any(|b| b.parent == category) {
                return bad(format!("no band refines {category}"));
            }
        }
        Ok(BandTable { bounds, bands })
    }

    pub fn from_document(doc: BandTableDocument, bounds: ScalarBounds) -> Result<Self> {
        Self::new(doc.bands, bounds)
    }

    pub fn bands(&self) -> &[Band] {
        &self.bands
    }

    pub fn bounds(&self) -> &ScalarBounds {
        &self.bounds
    }

    fn closes_region(&self, index: usize) -> bool {
        let band = &self.bands[index];
        index + 1 == self.bands.len()
            || (band.parent == RelationCategory::Neutral
                && (band.high - self.bounds.middle_band_high).abs() <= TOLERANCE
                && self.bands[index + 1].parent != RelationCategory::Neutral)
    }

    /// Index of the band containing `value`. Bands are low-inclusive and
    /// high-exclusive, except the last band and the band closing the neutral
    /// region, which are high-inclusive. The first match in order wins.
    fn locate(&self, value: f64) -> Option<usize> {
        check_in_scale(value, self.bounds.lower, self.bounds.upper).ok()?;
        if value < self.bands[0].low {
            return Some(0);
        }
        (0..self.bands.len())
            .find(|&i| {
                let b = &self.bands[i];
                (b.low <= value && value < b.high) || (value == b.high && self.closes_region(i))
            })
            .or_else(|| (value > self.bounds.upper - TOLERANCE).then(|| self.bands.len() - 1))
    }
}

/// Maps a trust mass onto a band of the table.
pub fn classify_extended(trust_mass: f64, table: &BandTable) -> Result<&Band> {
    table
        .locate(trust_mass)
        .map(|i| &table.bands[i])
        .ok_or(AlgebraError::OutOfScale {
            value: trust_mass,
            lower: table.bounds.lower,
            upper: table.bounds.upper,
        })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrustEvaluation {
    pub trust_mass: f64,
    pub strength: f64,
    pub label: RelationCategory,
    pub bounds: ScalarBounds,
    /// True iff the hostile contribution `W_hostile * h_mass` is exactly zero.
    pub no_hostile_flag: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub band: Option<String>,
}

/// The full pipeline: bounds, trust mass, strength, label, and the band label
/// when a table is supplied.
pub fn evaluate(
    masses: &CategoryMassVector,
    weights: &WeightVector,
    signs: &ScalarConfig,
    bands: Option<&BandTable>,
) -> Result<TrustEvaluation> {
    let bounds = compute_bounds(weights, signs)?;
    let trust_mass = compute_trust_mass(masses, weights, signs);
    let strength = compute_strength(masses, weights);
    let label = classify(trust_mass, &bounds)?;
    let band = match bands {
        Some(table) => {
            if !table.bounds.approx_eq(&bounds) {
                return Err(AlgebraError::BandTableMismatch {
                    table_lower: table.bounds.lower,
                    table_upper: table.bounds.upper,
                    lower: bounds.lower,
                    upper: bounds.upper,
                });
            }
            Some(classify_extended(trust_mass, table)?.label.clone())
        }
        None => None,
    };
    let hostile = RelationCategory::Hostile;
    Ok(TrustEvaluation {
        trust_mass,
        strength,
        label,
        bounds,
        no_hostile_flag: weights.get(hostile) * masses.get(hostile) == 0.0,
        band,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterpretationConfig {
    pub delta: f64,
}

impl Default for InterpretationConfig {
    fn default() -> Self {
        Self { delta: DEFAULT_DELTA }
    }
}

/// Independent readings of the strength value. Several may hold at once.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrengthInterpretation {
    /// Strength within delta of 1: evidence pulls both ways.
    pub contradiction_prone: bool,
    /// Strength within delta of 0.5: a consistent reading in one direction.
    pub fair_consistent: bool,
    /// Strength within delta of the weighted neutral mass, which must be positive.
    pub neutral_biased: bool,
    /// Strength equals the trust mass and both are positive.
    pub no_hostile: bool,
    /// `|strength - n_mass * W_neutral|`
    pub neutral_distance_weighted: f64,
    /// `|strength - n_mass|`
    pub neutral_distance_raw: f64,
}

pub fn interpret_strength(
    evaluation: &TrustEvaluation,
    neutral_mass: f64,
    neutral_weight: f64,
    config: &InterpretationConfig,
) -> StrengthInterpretation {
    let s = evaluation.strength;
    let near = |target: f64| (s - target).abs() <= config.delta;
    let weighted_neutral = neutral_mass * neutral_weight;
    StrengthInterpretation {
        contradiction_prone: near(1.0),
        fair_consistent: near(0.5),
        neutral_biased: weighted_neutral > 0.0 && near(weighted_neutral),
        no_hostile: (s - evaluation.trust_mass).abs() <= TOLERANCE && s > 0.0 && evaluation.trust_mass > 0.0,
        neutral_distance_weighted: (s - weighted_neutral).abs(),
        neutral_distance_raw: (s - neutral_mass).abs(),
    }
}
