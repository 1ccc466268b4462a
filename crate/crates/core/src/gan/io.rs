//! Model files (JSON) and loss-history CSVs.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{GanModel, LossRecord, TrainConfig};
use crate::circuit::{injection_from_angles, Bank, ParameterBank};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::pca::{MinMaxScaler, PcaModel};

pub const MODEL_FORMAT_VERSION: u32 = 1;
pub const HISTORY_HEADER: &str = "iteration,loss_real,loss_fake,loss_disc,loss_gen,val_frechet";

#[derive(Debug, Serialize, Deserialize)]
struct ModelFile {
    format_version: u32,
    config: TrainConfig,
    gen_params: Vec<f64>,
    disc_params: Vec<f64>,
    /// Empty when the model has no injection block.
    injection_angles: Vec<f64>,
    pca_mean: Vec<f64>,
    pca_components: Vec<Vec<f64>>,
    scaler_lo: Vec<f64>,
    scaler_hi: Vec<f64>,
    train_seed: u64,
    feature_scale: f64,
}

impl ModelFile {
    fn from_model(model: &GanModel) -> Self {
        let components = model.pca.components();
        Self {
            format_version: MODEL_FORMAT_VERSION,
            config: model.config.clone(),
            gen_params: model.gen_params.values.clone(),
            disc_params: model.disc_params.values.clone(),
            injection_angles: model.injection.as_ref().map(|s| s.const_angles()).unwrap_or_default(),
            pca_mean: model.pca.mean().to_vec(),
            pca_components: components.row_iter().map(<[f64]>::to_vec).collect(),
            scaler_lo: model.scaler.lo().to_vec(),
            scaler_hi: model.scaler.hi().to_vec(),
            train_seed: model.config.seed,
            feature_scale: model.feature_scale,
        }
    }

    fn into_model(self) -> Result<GanModel> {
        if self.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Model(format!(
                "format version {} is not supported (expected {MODEL_FORMAT_VERSION})",
                self.format_version
            )));
        }
        if self.train_seed != self.config.seed {
            return Err(Error::Model(format!(
                "train_seed {} disagrees with config seed {}",
                self.train_seed, self.config.seed
            )));
        }
        let injection = if self.injection_angles.is_empty() {
            None
        } else {
            Some(injection_from_angles(self.config.n_qubits, &self.injection_angles)?)
        };
        let components = Matrix::from_rows(&self.pca_components, self.pca_mean.len())?;
        let model = GanModel {
            gen_params: ParameterBank::new(Bank::Generator, self.gen_params)?,
            disc_params: ParameterBank::new(Bank::Discriminator, self.disc_params)?,
            injection,
            pca: PcaModel::new(self.pca_mean, components)?,
            scaler: MinMaxScaler::new(self.scaler_lo, self.scaler_hi)?,
            feature_scale: self.feature_scale,
            config: self.config,
        };
        model.validate()?;
        Ok(model)
    }
}

pub fn save_model(model: &GanModel, path: impl AsRef<Path>) -> Result<()> {
    let mut text = serde_json::to_string_pretty(&ModelFile::from_model(model))?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<GanModel> {
    let text = fs::read_to_string(path)?;
    let file: ModelFile = serde_json::from_str(&text)?;
    file.into_model()
}

pub fn format_history(history: &[LossRecord]) -> String {
    let mut out = String::from(HISTORY_HEADER);
    out.push('\n');
    for r in history {
        let frechet = r.val_frechet.map(|f| f.to_string()).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.iteration, r.loss_real, r.loss_fake, r.loss_disc, r.loss_gen, frechet
        ));
    }
    out
}

pub fn write_history(history: &[LossRecord], path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, format_history(history))?;
    Ok(())
}

pub fn parse_history(text: &str) -> Result<Vec<LossRecord>> {
    let mut lines = text.lines();
    if lines.next() != Some(HISTORY_HEADER) {
        return Err(Error::Model("history CSV has an unexpected header".into()));
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, line)| parse_record(line).map_err(|m| Error::Model(format!("history line {}: {m}", i + 2))))
        .collect()
}

fn parse_record(line: &str) -> std::result::Result<LossRecord, String> {
    let fields: Vec<&str> = line.split(',').collect();
    if fields.len() != 6 {
        return Err(format!("expected 6 fields, found {}", fields.len()));
    }
    let num = |s: &str| s.parse::<f64>().map_err(|e| format!("{s:?}: {e}"));
    Ok(LossRecord {
        iteration: fields[0].parse().map_err(|e| format!("{:?}: {e}", fields[0]))?,
        loss_real: num(fields[1])?,
        loss_fake: num(fields[2])?,
        loss_disc: num(fields[3])?,
        loss_gen: num(fields[4])?,
        val_frechet: if fields[5].is_empty() {
            None
        } else {
            Some(num(fields[5])?)
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn history_round_trip() {
        let history = vec![
            LossRecord {
                iteration: 0,
                loss_real: 0.7,
                loss_fake: 0.6,
                loss_disc: 1.2999999999999998,
                loss_gen: 0.8,
                val_frechet: None,
            },
            LossRecord {
                iteration: 1,
                loss_real: 1e-3,
                loss_fake: 0.25,
                loss_disc: 0.251,
                loss_gen: 2.5,
                val_frechet: Some(12.345678901234567),
            },
        ];
        let text = format_history(&history);
        assert!(text.starts_with("iteration,loss_real,loss_fake,loss_disc,loss_gen,val_frechet\n0,0.7,"));
        assert!(text.lines().nth(1).unwrap().ends_with(','));
        assert_eq!(parse_history(&text).unwrap(), history);
    }

    #[test]
    fn history_rejects_garbage() {
        assert!(parse_history("a,b\n").is_err());
        assert!(parse_history(&format!("{HISTORY_HEADER}\n1,2,3\n")).is_err());
        assert!(parse_history(&format!("{HISTORY_HEADER}\nx,1,1,2,1,\n")).is_err());
        assert!(parse_history(HISTORY_HEADER).unwrap().is_empty());
    }
}
