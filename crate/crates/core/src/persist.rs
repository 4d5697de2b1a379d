//! Versioned JSON model files. Floats are written with round-trip precision,
//! so a reloaded model reproduces decision values bit for bit.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{MvtpmError, Result};
use crate::model::MvTpmModel;

pub const MODEL_SCHEMA: &str = "mvtpmsvm-model/1";

#[derive(Serialize, Deserialize)]
struct ModelFile {
    schema: String,
    #[serde(flatten)]
    model: MvTpmModel,
}

#[derive(Serialize)]
struct ModelFileRef<'a> {
    schema: &'static str,
    #[serde(flatten)]
    model: &'a MvTpmModel,
}

pub fn model_to_json(model: &MvTpmModel) -> Result<String> {
    Ok(serde_json::to_string_pretty(&ModelFileRef {
        schema: MODEL_SCHEMA,
        model,
    })?)
}

pub fn model_from_json(text: &str) -> Result<MvTpmModel> {
    let file: ModelFile = serde_json::from_str(text)?;
    if file.schema != MODEL_SCHEMA {
        return Err(MvtpmError::Parse(format!(
            "unsupported model schema '{}', expected '{MODEL_SCHEMA}'",
            file.schema
        )));
    }
    file.model.split.validate()?;
    file.model.hyperparams.validate()?;
    Ok(file.model)
}

pub fn save_model(path: impl AsRef<Path>, model: &MvTpmModel) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, model_to_json(model)? + "\n").map_err(|e| MvtpmError::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<MvTpmModel> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| MvtpmError::io(path, e))?;
    model_from_json(&text)
}
