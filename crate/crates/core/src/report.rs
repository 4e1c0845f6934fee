//! Serialization helpers shared by every report.
//!
//! Exact rationals travel as `{"num": "...", "den": "..."}` with decimal
//! strings, so no precision is lost and no float ever stands in for them.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Serialize, Deserialize)]
struct Repr {
    num: String,
    den: String,
}

impl From<&BigRational> for Repr {
    fn from(r: &BigRational) -> Self {
        Repr {
            num: r.numer().to_string(),
            den: r.denom().to_string(),
        }
    }
}

impl TryFrom<Repr> for BigRational {
    type Error = String;

    fn try_from(r: Repr) -> Result<Self, String> {
        let num: BigInt = r.num.parse().map_err(|e| format!("numerator: {e}"))?;
        let den: BigInt = r.den.parse().map_err(|e| format!("denominator: {e}"))?;
        if den.is_zero() {
            return Err("zero denominator".into());
        }
        Ok(BigRational::new(num, den))
    }
}

/// `#[serde(with = "rational")]` for `BigRational` fields.
pub mod rational {
    use super::*;

    pub fn serialize<S: Serializer>(r: &BigRational, s: S) -> Result<S::Ok, S::Error> {
        Repr::from(r).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigRational, D::Error> {
        BigRational::try_from(Repr::deserialize(d)?).map_err(D::Error::custom)
    }
}

/// An exact rational as a standalone serializable value.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exact(#[serde(with = "rational")] pub BigRational);

impl From<BigRational> for Exact {
    fn from(r: BigRational) -> Self {
        Exact(r)
    }
}

/// Where a report came from. Wall time is optional because it is the only
/// field that differs between otherwise identical runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub tool_version: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub wall_time_seconds: Option<f64>,
}

/// Envelope for every command's output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityReport {
    pub command: String,
    pub parameters: serde_json::Map<String, serde_json::Value>,
    pub results: serde_json::Value,
    pub provenance: Provenance,
}

impl DensityReport {
    pub fn new<T: Serialize>(
        command: &str,
        parameters: serde_json::Value,
        results: &T,
        seed: u64,
    ) -> serde_json::Result<Self> {
        let parameters = match parameters {
            serde_json::Value::Object(m) => m,
            serde_json::Value::Null => Default::default(),
            other => {
                let mut m = serde_json::Map::new();
                m.insert("value".into(), other);
                m
            }
        };
        Ok(DensityReport {
            command: command.into(),
            parameters,
            results: serde_json::to_value(results)?,
            provenance: Provenance {
                seed,
                tool_version: env!("CARGO_PKG_VERSION").into(),
                wall_time_seconds: None,
            },
        })
    }
}
