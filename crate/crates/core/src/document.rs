//! JSON documents for fitted models and proxies.
//!
//! Layout: `{"kind": ..., "params": {...}, "fit_meta": {...}}`. Densities
//! and proxies share the layout and are distinguished by the kind tag.
//! Reloading a document reproduces `log_density` bit-identically.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::density::DensityModel;
use crate::io::write_json_atomic;
use crate::proxy::ProxyModel;
use crate::{Error, Result, Seed};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FitMeta {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<Seed>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iters: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
}

impl FitMeta {
    pub fn seeded(seed: Seed) -> Self {
        FitMeta {
            seed: Some(seed),
            ..FitMeta::default()
        }
    }
}

/// A model or proxy together with how it was fitted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document<M> {
    #[serde(flatten)]
    pub model: M,
    #[serde(default = "FitMeta::default")]
    pub fit_meta: FitMeta,
}

pub type ModelDocument = Document<DensityModel>;
pub type ProxyDocument = Document<ProxyModel>;

impl<M: Serialize> Document<M> {
    pub fn new(model: M, fit_meta: FitMeta) -> Self {
        Document { model, fit_meta }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_json_atomic(path, self)
    }
}

pub fn load_document<M: DeserializeOwned>(path: &Path) -> Result<Document<M>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}
