//! Plain-text model files.
//!
//! A file is TOML with a fixed header followed by the fitted preprocessor
//! and, optionally, a trained classifier:
//!
//! ```toml
//! format = "seizembed-model"
//! version = 1
//!
//! [preprocessor]
//! kind = "periodic"            # or "identity"
//! # quantile landmarks, embedding coefficients ...
//!
//! [model]
//! input_dim = 720
//! # training metadata and learned parameters ...
//! ```
//!
//! Floats are written in shortest round-trip form, so loading a saved file
//! reproduces every parameter bit for bit. 64-bit seeds are stored as
//! decimal strings because TOML integers are signed.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::classifiers::TrainedModel;
use crate::transform::Preprocessor;
use crate::{Error, Result};

pub const FORMAT: &str = "seizembed-model";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub version: u32,
    pub preprocessor: Preprocessor,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<TrainedModel>,
}

impl ModelFile {
    pub fn new(preprocessor: Preprocessor, model: Option<TrainedModel>) -> Self {
        Self {
            format: FORMAT.into(),
            version: VERSION,
            preprocessor,
            model,
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::ModelFile(e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Header {
            format: String,
            version: u32,
        }
        let header: Header = toml::from_str(text).map_err(|e| Error::ModelFile(e.to_string()))?;
        if header.format != FORMAT {
            return Err(Error::ModelFile(format!(
                "unexpected format `{}` (expected `{FORMAT}`)",
                header.format
            )));
        }
        if header.version != VERSION {
            return Err(Error::ModelFile(format!(
                "unsupported version {} (this build reads version {VERSION})",
                header.version
            )));
        }
        toml::from_str(text).map_err(|e| Error::ModelFile(e.to_string()))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_toml()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }
}

/// Serializes a `u64` as a decimal string; accepts strings or integers.
pub(crate) mod u64_text {
    use serde::de::{self, Visitor};
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &u64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u64, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = u64;

            fn expecting(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
                f.write_str("an unsigned 64-bit integer or its decimal string")
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<u64, E> {
                Ok(v)
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<u64, E> {
                u64::try_from(v).map_err(|_| E::custom(format!("negative seed {v}")))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<u64, E> {
                v.trim().parse().map_err(|_| E::custom(format!("invalid seed `{v}`")))
            }
        }
        d.deserialize_any(V)
    }
}
