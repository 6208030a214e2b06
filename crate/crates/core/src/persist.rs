//! JSON model files.
//!
//! ```text
//! { "version": 1, "params": {...}, "d": 4, "feature_ranges": [...],
//!   "families": [ { "rng_seed": 123,
//!                   "trees": [ { "coords": [0],
//!                                "leaves": [ { "lower": ["-inf"], "upper": [0.2], "value": 1.0 } ] } ] } ] }
//! ```
//!
//! Infinite bounds are written as the strings `"-inf"` / `"inf"`. Finite
//! numbers use the shortest representation that parses back to the same `f64`.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::dataset::FeatureRange;
use crate::error::{Error, Result};
use crate::model::{ForestModel, Leaf, Tree, TreeFamily};
use crate::params::FitParams;
use crate::region::{CoordSet, Region};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelDoc {
    version: u32,
    params: FitParams,
    d: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    feature_names: Option<Vec<String>>,
    feature_ranges: Vec<FeatureRange>,
    families: Vec<FamilyDoc>,
}

#[derive(Serialize, Deserialize)]
struct FamilyDoc {
    rng_seed: u64,
    trees: Vec<TreeDoc>,
}

#[derive(Serialize, Deserialize)]
struct TreeDoc {
    coords: CoordSet,
    leaves: Vec<LeafDoc>,
}

#[derive(Serialize, Deserialize)]
struct LeafDoc {
    lower: Vec<Bound>,
    upper: Vec<Bound>,
    value: f64,
}

#[derive(Clone, Copy)]
struct Bound(f64);

impl Serialize for Bound {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0 == f64::INFINITY {
            s.serialize_str("inf")
        } else if self.0 == f64::NEG_INFINITY {
            s.serialize_str("-inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for Bound {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Bound(v)),
            Raw::Str(s) if s == "inf" => Ok(Bound(f64::INFINITY)),
            Raw::Str(s) if s == "-inf" => Ok(Bound(f64::NEG_INFINITY)),
            Raw::Str(s) => Err(D::Error::custom(format!("invalid bound `{s}`"))),
        }
    }
}

impl ForestModel {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.to_doc())?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_doc(serde_json::from_str(text)?)
    }

    pub fn write_json<W: Write>(&self, mut writer: W) -> Result<()> {
        writer.write_all(self.to_json()?.as_bytes())?;
        Ok(())
    }

    pub fn read_json<R: Read>(mut reader: R) -> Result<Self> {
        let mut text = String::new();
        reader.read_to_string(&mut text)?;
        Self::from_json(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    fn to_doc(&self) -> ModelDoc {
        ModelDoc {
            version: FORMAT_VERSION,
            params: self.params.clone(),
            d: self.d,
            feature_names: self.feature_names.clone(),
            feature_ranges: self.feature_ranges.clone(),
            families: self
                .families
                .iter()
                .map(|f| FamilyDoc {
                    rng_seed: f.rng_seed,
                    trees: f
                        .trees
                        .values()
                        .map(|t| TreeDoc {
                            coords: t.coords().clone(),
                            leaves: t
                                .leaves()
                                .iter()
                                .map(|l| LeafDoc {
                                    lower: l.region.lower().iter().map(|&v| Bound(v)).collect(),
                                    upper: l.region.upper().iter().map(|&v| Bound(v)).collect(),
                                    value: l.value,
                                })
                                .collect(),
                        })
                        .collect(),
                })
                .collect(),
        }
    }

    fn from_doc(doc: ModelDoc) -> Result<Self> {
        if doc.version != FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported model version {}", doc.version)));
        }
        doc.params.validate()?;
        if doc.feature_ranges.len() != doc.d {
            return Err(Error::Format("feature_ranges length differs from d".into()));
        }
        let mut families = Vec::with_capacity(doc.families.len());
        for fam in doc.families {
            let mut trees = BTreeMap::new();
            for tree in fam.trees {
                if tree.coords.is_empty() || tree.coords.iter().any(|k| k >= doc.d) {
                    return Err(Error::Format(format!("tree over invalid coordinates {:?}", tree.coords)));
                }
                let leaves = tree
                    .leaves
                    .into_iter()
                    .map(|l| {
                        let region = Region::new(
                            tree.coords.clone(),
                            l.lower.into_iter().map(|b| b.0).collect(),
                            l.upper.into_iter().map(|b| b.0).collect(),
                        )?;
                        if !l.value.is_finite() {
                            return Err(Error::Format("non-finite leaf value".into()));
                        }
                        Ok(Leaf { region, value: l.value })
                    })
                    .collect::<Result<Vec<_>>>()?;
                let coords = tree.coords.clone();
                if trees.insert(coords, Tree::from_leaves(tree.coords, leaves)).is_some() {
                    return Err(Error::Format("duplicate tree in family".into()));
                }
            }
            for k in 0..doc.d {
                if !trees.contains_key(&CoordSet::singleton(k)) {
                    return Err(Error::Format(format!("family lacks the tree of coordinate {k}")));
                }
            }
            families.push(TreeFamily::from_parts(trees, fam.rng_seed));
        }
        Ok(ForestModel {
            families,
            params: doc.params,
            d: doc.d,
            feature_ranges: doc.feature_ranges,
            feature_names: doc.feature_names,
        })
    }
}
