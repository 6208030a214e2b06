use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Highest interaction order a fit may produce.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaxInteraction {
    Bounded(usize),
    Unbounded,
}

impl MaxInteraction {
    /// Whether a tree over `order` coordinates is allowed.
    pub fn allows(self, order: usize) -> bool {
        match self {
            MaxInteraction::Bounded(m) => order <= m,
            MaxInteraction::Unbounded => true,
        }
    }
}

impl fmt::Display for MaxInteraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MaxInteraction::Bounded(m) => write!(f, "{m}"),
            MaxInteraction::Unbounded => f.write_str("inf"),
        }
    }
}

impl FromStr for MaxInteraction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "unbounded" | "infinity" => Ok(MaxInteraction::Unbounded),
            other => match other.parse::<usize>() {
                Ok(m) if m >= 1 => Ok(MaxInteraction::Bounded(m)),
                _ => Err(Error::InvalidParams(format!(
                    "max interaction must be a positive integer or `inf`, got `{s}`"
                ))),
            },
        }
    }
}

impl Serialize for MaxInteraction {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            MaxInteraction::Bounded(m) => s.serialize_u64(*m as u64),
            MaxInteraction::Unbounded => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for MaxInteraction {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match NumberOrString::deserialize(d)? {
            NumberOrString::Number(m) => MaxInteraction::from_str(&m.to_string()),
            NumberOrString::String(s) => MaxInteraction::from_str(&s),
        }
        .map_err(serde::de::Error::custom)
    }
}

/// How many split points are tried per coordinate and leaf.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitTry {
    /// Draw this many points uniformly, with replacement, from the leaf's pool.
    Sampled(usize),
    /// Try every distinct pool value (exhaustive CART search).
    All,
}

impl fmt::Display for SplitTry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SplitTry::Sampled(n) => write!(f, "{n}"),
            SplitTry::All => f.write_str("all"),
        }
    }
}

impl FromStr for SplitTry {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "all" => Ok(SplitTry::All),
            other => match other.parse::<usize>() {
                Ok(n) if n >= 1 => Ok(SplitTry::Sampled(n)),
                _ => Err(Error::InvalidParams(format!(
                    "split_try must be a positive integer or `all`, got `{s}`"
                ))),
            },
        }
    }
}

impl Serialize for SplitTry {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            SplitTry::Sampled(n) => s.serialize_u64(*n as u64),
            SplitTry::All => s.serialize_str("all"),
        }
    }
}

impl<'de> Deserialize<'de> for SplitTry {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match NumberOrString::deserialize(d)? {
            NumberOrString::Number(n) => SplitTry::from_str(&n.to_string()),
            NumberOrString::String(s) => SplitTry::from_str(&s),
        }
        .map_err(serde::de::Error::custom)
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum NumberOrString {
    Number(u64),
    String(String),
}

/// Tuning parameters of a planted forest fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitParams {
    /// Number of tree families (bootstrap replicates).
    pub ntrees: usize,
    /// Iteration budget of each family.
    pub nsplits: usize,
    /// Fraction of viable (tree, coordinate) combinations tried per iteration.
    pub t_try: f64,
    pub split_try: SplitTry,
    pub max_interaction: MaxInteraction,
    pub seed: u64,
    pub bootstrap: bool,
}

impl Default for FitParams {
    fn default() -> Self {
        Self {
            ntrees: 50,
            nsplits: 30,
            t_try: 0.75,
            split_try: SplitTry::Sampled(10),
            max_interaction: MaxInteraction::Bounded(1),
            seed: 0,
            bootstrap: true,
        }
    }
}

impl FitParams {
    pub fn validate(&self) -> Result<()> {
        if self.ntrees == 0 {
            return Err(Error::InvalidParams("ntrees must be at least 1".into()));
        }
        if self.nsplits == 0 {
            return Err(Error::InvalidParams("nsplits must be at least 1".into()));
        }
        if !(self.t_try > 0.0 && self.t_try <= 1.0) {
            return Err(Error::InvalidParams(format!(
                "t_try must lie in (0, 1], got {}",
                self.t_try
            )));
        }
        if self.split_try == SplitTry::Sampled(0) {
            return Err(Error::InvalidParams("split_try must be at least 1".into()));
        }
        if self.max_interaction == MaxInteraction::Bounded(0) {
            return Err(Error::InvalidParams("max_interaction must be at least 1".into()));
        }
        Ok(())
    }

    /// Compact `key=value` rendering used in reports.
    pub fn label(&self) -> String {
        format!(
            "ntrees={} nsplits={} t_try={} split_try={} max_interaction={}",
            self.ntrees, self.nsplits, self.t_try, self.split_try, self.max_interaction
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_serialize() {
        assert_eq!("inf".parse::<MaxInteraction>().unwrap(), MaxInteraction::Unbounded);
        assert_eq!("2".parse::<MaxInteraction>().unwrap(), MaxInteraction::Bounded(2));
        assert!("0".parse::<MaxInteraction>().is_err());
        assert_eq!("all".parse::<SplitTry>().unwrap(), SplitTry::All);
        assert!("-1".parse::<SplitTry>().is_err());

        let p = FitParams {
            max_interaction: MaxInteraction::Unbounded,
            ..FitParams::default()
        };
        let json = serde_json::to_string(&p).unwrap();
        assert!(json.contains("\"max_interaction\":\"inf\""));
        assert_eq!(serde_json::from_str::<FitParams>(&json).unwrap(), p);
    }

    #[test]
    fn validation() {
        assert!(FitParams::default().validate().is_ok());
        for bad in [
            FitParams { t_try: 0.0, ..FitParams::default() },
            FitParams { t_try: 1.5, ..FitParams::default() },
            FitParams { nsplits: 0, ..FitParams::default() },
            FitParams { ntrees: 0, ..FitParams::default() },
            FitParams { split_try: SplitTry::Sampled(0), ..FitParams::default() },
        ] {
            assert!(bad.validate().is_err());
        }
        assert!(MaxInteraction::Bounded(2).allows(2));
        assert!(!MaxInteraction::Bounded(2).allows(3));
        assert!(MaxInteraction::Unbounded.allows(30));
    }
}
