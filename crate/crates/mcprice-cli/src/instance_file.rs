//! Versioned JSON instance files.
//!
//! Schema (version 1), one object per product and per resource:
//!
//! ```json
//! {
//!   "version": 1,
//!   "lambda_bar": 1.2,
//!   "horizon": 1.0,
//!   "products": [
//!     {
//!       "theta": 0.6,
//!       "rho": [0.0, 0.3],
//!       "alpha": 0.0,
//!       "beta": 1.0,
//!       "psi": 0.5,
//!       "x_lower": 0.5,
//!       "x_upper": 4.0
//!     }
//!   ],
//!   "resources": [
//!     { "phi": [1.0, 0.4], "capacity": 0.15 },
//!     { "phi": [0.2, 0.2], "capacity": null }
//!   ]
//! }
//! ```
//!
//! * `theta` - probability the customer arrives at this product first.
//! * `rho` - this product's transition row: entry `j` is the chance a
//!   non-buyer moves on to product `j` (the remainder exits).
//! * `alpha`, `beta` - demand curve `Q(x) = exp(alpha - beta x)`.
//! * `psi` - unit cost subtracted from the price in the objective.
//! * `x_lower`, `x_upper` - price box (equal values pin the price).
//! * `phi` - per-product usage of the resource; `capacity: null` tracks
//!   usage without enforcing a bound.
//! * `lambda_bar` - customer arrival rate (default 1), `horizon` - the
//!   schedule's planning horizon length (default 1).
//!
//! Unknown fields are rejected so typos cannot silently change meaning.
//! All numbers are 64-bit floats.

use mcprice::model::{UncheckedInstance, UncheckedResources};
use serde::Deserialize;
use thiserror::Error;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum FileError {
    #[error("invalid instance file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported schema version {found} (this build reads version {SCHEMA_VERSION})")]
    Version { found: u32 },
    #[error("resource {index} lists {found} phi entries for {products} products")]
    PhiLength {
        index: usize,
        found: usize,
        products: usize,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub version: u32,
    #[serde(default = "one")]
    pub lambda_bar: f64,
    #[serde(default = "one")]
    pub horizon: f64,
    pub products: Vec<ProductEntry>,
    #[serde(default)]
    pub resources: Vec<ResourceEntry>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProductEntry {
    pub theta: f64,
    pub rho: Vec<f64>,
    pub alpha: f64,
    pub beta: f64,
    pub psi: f64,
    pub x_lower: f64,
    pub x_upper: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResourceEntry {
    pub phi: Vec<f64>,
    pub capacity: Option<f64>,
}

fn one() -> f64 {
    1.0
}

impl InstanceFile {
    pub fn parse(bytes: &[u8]) -> Result<InstanceFile, FileError> {
        let file: InstanceFile = serde_json::from_slice(bytes)?;
        if file.version != SCHEMA_VERSION {
            return Err(FileError::Version {
                found: file.version,
            });
        }
        let n = file.products.len();
        for (index, r) in file.resources.iter().enumerate() {
            if r.phi.len() != n {
                return Err(FileError::PhiLength {
                    index,
                    found: r.phi.len(),
                    products: n,
                });
            }
        }
        Ok(file)
    }

    /// Flattens the per-product rows into the validator's input shape.
    /// Row-length mismatches inside `rho` are left for validation to
    /// report as dimension violations.
    pub fn to_unchecked(&self) -> (UncheckedInstance, UncheckedResources) {
        let n = self.products.len();
        let inst = UncheckedInstance {
            n,
            theta: self.products.iter().map(|p| p.theta).collect(),
            rho: self.products.iter().flat_map(|p| p.rho.clone()).collect(),
            alpha: self.products.iter().map(|p| p.alpha).collect(),
            beta: self.products.iter().map(|p| p.beta).collect(),
            psi: self.products.iter().map(|p| p.psi).collect(),
            x_lower: self.products.iter().map(|p| p.x_lower).collect(),
            x_upper: self.products.iter().map(|p| p.x_upper).collect(),
        };
        let resources = UncheckedResources {
            n_resources: self.resources.len(),
            n_products: n,
            phi: self.resources.iter().flat_map(|r| r.phi.clone()).collect(),
            capacity: self.resources.iter().map(|r| r.capacity).collect(),
            lambda_bar: self.lambda_bar,
        };
        (inst, resources)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOOD: &str = r#"{
        "version": 1,
        "lambda_bar": 1.2,
        "products": [
            {"theta": 1.0, "rho": [0.0], "alpha": 0.0, "beta": 1.0,
             "psi": 0.0, "x_lower": 0.0, "x_upper": 10.0}
        ],
        "resources": [{"phi": [1.0], "capacity": 0.5}]
    }"#;

    #[test]
    fn parses_and_flattens() {
        let file = InstanceFile::parse(GOOD.as_bytes()).unwrap();
        assert_eq!(file.horizon, 1.0);
        let (inst, rm) = file.to_unchecked();
        assert_eq!(inst.n, 1);
        assert_eq!(rm.capacity, vec![Some(0.5)]);
        assert_eq!(rm.lambda_bar, 1.2);
    }

    #[test]
    fn rejects_unknown_fields() {
        let bad = GOOD.replace("\"lambda_bar\": 1.2,", "\"lambda\": 1.2,");
        assert!(matches!(
            InstanceFile::parse(bad.as_bytes()),
            Err(FileError::Json(_))
        ));
    }

    #[test]
    fn rejects_wrong_version() {
        let bad = GOOD.replace("\"version\": 1", "\"version\": 2");
        assert!(matches!(
            InstanceFile::parse(bad.as_bytes()),
            Err(FileError::Version { found: 2 })
        ));
    }

    #[test]
    fn rejects_phi_length_mismatch() {
        let bad = GOOD.replace("\"phi\": [1.0]", "\"phi\": [1.0, 2.0]");
        assert!(matches!(
            InstanceFile::parse(bad.as_bytes()),
            Err(FileError::PhiLength { index: 0, .. })
        ));
    }
}
