//! Von Neumann-Morgenstern utilities with bounded absolute risk aversion.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A utility supplied as value and derivative evaluators.
pub trait UtilityFunction: Send + Sync {
    fn value(&self, x: f64) -> f64;
    fn first_derivative(&self, x: f64) -> f64;
    fn second_derivative(&self, x: f64) -> f64;
}

/// `U(x) = -Σ wᵢ exp(-cᵢ x)`. Its absolute risk aversion is a weighted mean of
/// the `cᵢ`, so it stays inside `[min cᵢ, max cᵢ]` and drifts between them as
/// wealth changes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentialMixture {
    pub weights: Vec<f64>,
    pub risk_aversions: Vec<f64>,
}

impl ExponentialMixture {
    pub fn new(weights: Vec<f64>, risk_aversions: Vec<f64>) -> Result<Self> {
        if weights.is_empty() || weights.len() != risk_aversions.len() {
            return Err(Error::InvalidUtility(
                "mixture needs equally many weights and risk aversions".into(),
            ));
        }
        if weights.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
            return Err(Error::InvalidUtility("mixture weights must be positive".into()));
        }
        if risk_aversions.iter().any(|c| !(*c > 0.0 && c.is_finite())) {
            return Err(Error::InvalidUtility(
                "mixture risk aversions must be positive".into(),
            ));
        }
        Ok(Self {
            weights,
            risk_aversions,
        })
    }

    fn ara_range(&self) -> (f64, f64) {
        let lo = self.risk_aversions.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = self.risk_aversions.iter().cloned().fold(0.0, f64::max);
        (lo * (1.0 - 1e-9), hi * (1.0 + 1e-9))
    }
}

impl UtilityFunction for ExponentialMixture {
    fn value(&self, x: f64) -> f64 {
        -self
            .weights
            .iter()
            .zip(&self.risk_aversions)
            .map(|(w, c)| w * (-c * x).exp())
            .sum::<f64>()
    }

    fn first_derivative(&self, x: f64) -> f64 {
        self.weights
            .iter()
            .zip(&self.risk_aversions)
            .map(|(w, c)| w * c * (-c * x).exp())
            .sum()
    }

    fn second_derivative(&self, x: f64) -> f64 {
        -self
            .weights
            .iter()
            .zip(&self.risk_aversions)
            .map(|(w, c)| w * c * c * (-c * x).exp())
            .sum::<f64>()
    }
}

#[derive(Clone)]
pub enum UtilitySpec {
    /// `U(x) = -exp(-c x)`.
    Exponential { risk_aversion: f64 },
    Mixture(ExponentialMixture),
    Custom {
        function: Arc<dyn UtilityFunction>,
        ara_bounds: (f64, f64),
    },
}

impl fmt::Debug for UtilitySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UtilitySpec::Exponential { risk_aversion } => f
                .debug_struct("Exponential")
                .field("risk_aversion", risk_aversion)
                .finish(),
            UtilitySpec::Mixture(m) => f.debug_tuple("Mixture").field(m).finish(),
            UtilitySpec::Custom { ara_bounds, .. } => f
                .debug_struct("Custom")
                .field("ara_bounds", ara_bounds)
                .finish_non_exhaustive(),
        }
    }
}

/// Half-width of the wealth window on which custom utilities are checked.
pub const VALIDATION_HALF_WIDTH: f64 = 25.0;
const VALIDATION_POINTS: usize = 501;

impl UtilitySpec {
    pub fn exponential(risk_aversion: f64) -> Self {
        UtilitySpec::Exponential { risk_aversion }
    }

    pub fn custom(function: Arc<dyn UtilityFunction>, ara_bounds: (f64, f64)) -> Self {
        UtilitySpec::Custom {
            function,
            ara_bounds,
        }
    }

    pub fn is_exponential(&self) -> bool {
        matches!(self, UtilitySpec::Exponential { .. })
    }

    pub fn value(&self, x: f64) -> f64 {
        match self {
            UtilitySpec::Exponential { risk_aversion } => -(-risk_aversion * x).exp(),
            UtilitySpec::Mixture(m) => m.value(x),
            UtilitySpec::Custom { function, .. } => function.value(x),
        }
    }

    pub fn first_derivative(&self, x: f64) -> f64 {
        match self {
            UtilitySpec::Exponential { risk_aversion } => risk_aversion * (-risk_aversion * x).exp(),
            UtilitySpec::Mixture(m) => m.first_derivative(x),
            UtilitySpec::Custom { function, .. } => function.first_derivative(x),
        }
    }

    pub fn second_derivative(&self, x: f64) -> f64 {
        match self {
            UtilitySpec::Exponential { risk_aversion } => {
                -risk_aversion * risk_aversion * (-risk_aversion * x).exp()
            }
            UtilitySpec::Mixture(m) => m.second_derivative(x),
            UtilitySpec::Custom { function, .. } => function.second_derivative(x),
        }
    }

    /// Absolute risk aversion `-U''(x)/U'(x)`.
    pub fn ara(&self, x: f64) -> f64 {
        match self {
            UtilitySpec::Exponential { risk_aversion } => *risk_aversion,
            _ => -self.second_derivative(x) / self.first_derivative(x),
        }
    }

    pub fn ara_bounds(&self) -> (f64, f64) {
        match self {
            UtilitySpec::Exponential { risk_aversion } => (*risk_aversion, *risk_aversion),
            UtilitySpec::Mixture(m) => m.ara_range(),
            UtilitySpec::Custom { ara_bounds, .. } => *ara_bounds,
        }
    }

    /// Checks monotonicity, concavity and the ARA bounds on a wealth window
    /// around `center`.
    pub fn validate(&self, center: f64) -> Result<()> {
        if let UtilitySpec::Exponential { risk_aversion } = self {
            if !(*risk_aversion > 0.0 && risk_aversion.is_finite()) {
                return Err(Error::InvalidUtility(format!(
                    "exponential risk aversion must be positive, got {risk_aversion}"
                )));
            }
            return Ok(());
        }
        let (c1, c2) = self.ara_bounds();
        if !(c1 > 0.0 && c1 < c2 && c2.is_finite()) {
            return Err(Error::InvalidUtility(format!(
                "ARA bounds must satisfy 0 < c1 < c2, got ({c1}, {c2})"
            )));
        }
        let lo = center - VALIDATION_HALF_WIDTH;
        let step = 2.0 * VALIDATION_HALF_WIDTH / (VALIDATION_POINTS - 1) as f64;
        for i in 0..VALIDATION_POINTS {
            let x = lo + step * i as f64;
            let d1 = self.first_derivative(x);
            let d2 = self.second_derivative(x);
            if !(d1 > 0.0) {
                return Err(Error::InvalidUtility(format!("U'({x}) = {d1} is not positive")));
            }
            if !(d2 < 0.0) {
                return Err(Error::InvalidUtility(format!("U''({x}) = {d2} is not negative")));
            }
            let ara = -d2 / d1;
            if !(c1 < ara && ara < c2) {
                return Err(Error::InvalidUtility(format!(
                    "ARA({x}) = {ara} leaves ({c1}, {c2})"
                )));
            }
        }
        Ok(())
    }

    /// The wealth whose utility equals `expected_utility`.
    pub fn certainty_equivalent(&self, expected_utility: f64) -> Result<f64> {
        if !expected_utility.is_finite() {
            return Err(Error::Domain(expected_utility));
        }
        match self {
            UtilitySpec::Exponential { risk_aversion } => {
                if expected_utility >= 0.0 {
                    return Err(Error::Domain(expected_utility));
                }
                Ok(-(-expected_utility).ln() / risk_aversion)
            }
            _ => self.invert_by_bisection(expected_utility),
        }
    }

    fn invert_by_bisection(&self, target: f64) -> Result<f64> {
        const MAX_EXPANSIONS: usize = 200;
        let f = |x: f64| self.value(x) - target;
        let mut width = 1.0;
        let (mut lo, mut hi) = (-width, width);
        let mut expansions = 0;
        while f(hi) < 0.0 {
            lo = hi;
            width *= 2.0;
            hi += width;
            expansions += 1;
            if expansions > MAX_EXPANSIONS || !hi.is_finite() || !f(hi).is_finite() {
                return Err(Error::Domain(target));
            }
        }
        width = 1.0;
        while f(lo) > 0.0 {
            hi = lo;
            width *= 2.0;
            lo -= width;
            expansions += 1;
            if expansions > MAX_EXPANSIONS || !lo.is_finite() || !f(lo).is_finite() {
                return Err(Error::Domain(target));
            }
        }
        // f(lo) <= 0 <= f(hi)
        while hi - lo > 1e-13 * hi.abs().max(lo.abs()).max(1.0) {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if f(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

/// Serializable description of the utilities that have one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum UtilityRepr {
    Exponential { risk_aversion: f64 },
    Mixture(ExponentialMixture),
}

impl TryFrom<&UtilitySpec> for UtilityRepr {
    type Error = Error;

    fn try_from(spec: &UtilitySpec) -> Result<Self> {
        match spec {
            UtilitySpec::Exponential { risk_aversion } => Ok(UtilityRepr::Exponential {
                risk_aversion: *risk_aversion,
            }),
            UtilitySpec::Mixture(m) => Ok(UtilityRepr::Mixture(m.clone())),
            UtilitySpec::Custom { .. } => Err(Error::InvalidUtility(
                "closure-backed utilities have no serialized form".into(),
            )),
        }
    }
}

impl From<UtilityRepr> for UtilitySpec {
    fn from(repr: UtilityRepr) -> Self {
        match repr {
            UtilityRepr::Exponential { risk_aversion } => UtilitySpec::Exponential { risk_aversion },
            UtilityRepr::Mixture(m) => UtilitySpec::Mixture(m),
        }
    }
}

impl Serialize for UtilitySpec {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        UtilityRepr::try_from(self)
            .map_err(serde::ser::Error::custom)?
            .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for UtilitySpec {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        UtilityRepr::deserialize(deserializer).map(UtilitySpec::from)
    }
}
