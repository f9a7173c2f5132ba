use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Locality profile `h` as a function of the distance to the anchor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MapFamily {
    /// `exp(-gamma * r)`
    Exp,
    /// `exp(-gamma * r^2)`
    Gauss,
    /// `max(0, 1 - gamma * r)`
    Linear,
    /// `max(0, 1 - gamma * r^2)`
    Square,
}

impl MapFamily {
    pub const ALL: [MapFamily; 4] = [MapFamily::Exp, MapFamily::Gauss, MapFamily::Linear, MapFamily::Square];

    /// `h` evaluated at distance `r >= 0`.
    pub fn weight(self, gamma: f64, r: f64) -> f64 {
        self.weight_sq(gamma, r * r)
    }

    /// `h` evaluated from the squared distance, which avoids a square root
    /// for the gauss and square families.
    #[inline]
    pub fn weight_sq(self, gamma: f64, r2: f64) -> f64 {
        match self {
            MapFamily::Exp => (-gamma * r2.sqrt()).exp(),
            MapFamily::Gauss => (-gamma * r2).exp(),
            MapFamily::Linear => (1.0 - gamma * r2.sqrt()).max(0.0),
            MapFamily::Square => (1.0 - gamma * r2).max(0.0),
        }
    }

    /// Bounded families vanish outside a finite radius.
    pub fn is_bounded(self) -> bool {
        matches!(self, MapFamily::Linear | MapFamily::Square)
    }

    /// Distance beyond which a bounded family is exactly zero.
    pub fn support_radius(self, gamma: f64) -> Option<f64> {
        match self {
            MapFamily::Linear => Some(1.0 / gamma),
            MapFamily::Square => Some((1.0 / gamma).sqrt()),
            _ => None,
        }
    }
}

impl fmt::Display for MapFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MapFamily::Exp => "exp",
            MapFamily::Gauss => "gauss",
            MapFamily::Linear => "linear",
            MapFamily::Square => "square",
        })
    }
}

impl FromStr for MapFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "exp" | "exponential" => Ok(MapFamily::Exp),
            "gauss" | "gaussian" => Ok(MapFamily::Gauss),
            "linear" => Ok(MapFamily::Linear),
            "square" | "squared" => Ok(MapFamily::Square),
            _ => Err(Error::InvalidParameter(format!("unknown map family `{s}`"))),
        }
    }
}

/// Whether the locality weight is one scalar (euclidean distance) or applied
/// per coordinate (distance `|x_j - c_j|`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MapScope {
    Global,
    Componentwise,
}

impl fmt::Display for MapScope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MapScope::Global => "global",
            MapScope::Componentwise => "componentwise",
        })
    }
}

impl FromStr for MapScope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "global" => Ok(MapScope::Global),
            "component" | "componentwise" | "component-wise" => Ok(MapScope::Componentwise),
            _ => Err(Error::InvalidParameter(format!("unknown map scope `{s}`"))),
        }
    }
}

/// Output of [`ConformalMap::eval_map`].
#[derive(Clone, Debug, PartialEq)]
pub enum Locality {
    Global(f64),
    Componentwise(Vec<f64>),
}

/// One locally linear kernel: `phi(x) = h(x) (x - center)` (global) or
/// `h(x) ∘ (x - center)` (componentwise).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MapRecord")]
pub struct ConformalMap {
    family: MapFamily,
    scope: MapScope,
    gamma: f64,
    center: Vec<f64>,
}

#[derive(Deserialize)]
struct MapRecord {
    family: MapFamily,
    scope: MapScope,
    gamma: f64,
    center: Vec<f64>,
}

impl TryFrom<MapRecord> for ConformalMap {
    type Error = Error;

    fn try_from(r: MapRecord) -> Result<Self> {
        ConformalMap::new(r.family, r.scope, r.gamma, r.center)
    }
}

impl ConformalMap {
    pub fn new(family: MapFamily, scope: MapScope, gamma: f64, center: Vec<f64>) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "bandwidth must be positive and finite, got {gamma}"
            )));
        }
        if center.is_empty() {
            return Err(Error::InvalidParameter("empty anchor".into()));
        }
        if center.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite anchor coordinate".into()));
        }
        Ok(ConformalMap {
            family,
            scope,
            gamma,
            center,
        })
    }

    pub fn family(&self) -> MapFamily {
        self.family
    }

    pub fn scope(&self) -> MapScope {
        self.scope
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        Ok(())
    }

    pub fn eval_map(&self, x: &[f64]) -> Result<Locality> {
        self.check_dim(x)?;
        Ok(match self.scope {
            MapScope::Global => Locality::Global(self.family.weight_sq(self.gamma, self.distance_sq(x))),
            MapScope::Componentwise => Locality::Componentwise(
                x.iter()
                    .zip(&self.center)
                    .map(|(a, c)| self.family.weight_sq(self.gamma, (a - c) * (a - c)))
                    .collect(),
            ),
        })
    }

    fn distance_sq(&self, x: &[f64]) -> f64 {
        x.iter().zip(&self.center).map(|(a, c)| (a - c) * (a - c)).sum()
    }

    pub fn feature_map(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        let mut out = vec![0.0; self.dim()];
        self.feature_map_into(x, &mut out);
        Ok(out)
    }

    /// Writes `phi(x)` into `out`.
    ///
    /// # Panics
    /// If `x` or `out` does not have the anchor's dimension.
    #[inline]
    pub fn feature_map_into(&self, x: &[f64], out: &mut [f64]) {
        assert!(x.len() == self.dim() && out.len() == self.dim());
        match self.scope {
            MapScope::Global => {
                let h = self.family.weight_sq(self.gamma, self.distance_sq(x));
                for ((o, a), c) in out.iter_mut().zip(x).zip(&self.center) {
                    *o = h * (a - c);
                }
            }
            MapScope::Componentwise => {
                for ((o, a), c) in out.iter_mut().zip(x).zip(&self.center) {
                    let t = a - c;
                    *o = self.family.weight_sq(self.gamma, t * t) * t;
                }
            }
        }
    }

    /// `<phi(x1), phi(x2)>`.
    pub fn kernel_eval(&self, x1: &[f64], x2: &[f64]) -> Result<f64> {
        let p1 = self.feature_map(x1)?;
        let p2 = self.feature_map(x2)?;
        Ok(p1.iter().zip(&p2).map(|(a, b)| a * b).sum())
    }
}
