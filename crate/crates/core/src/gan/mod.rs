//! Adversarial training of a quantum generator against a quantum
//! discriminator, in the combined single-circuit design and in the
//! measured two-circuit baseline.
//!
//! Each iteration runs three passes:
//!
//! 1. real samples → embedding → (injection) → discriminator, labelled 1;
//! 2. noise → generator → discriminator, labelled 0, discriminator weights
//!    updated from the summed gradients of 1 and 2;
//! 3. noise → generator → discriminator, labelled 1, generator weights updated.
//!
//! Inference runs the generator, undoes the injection, measures the leading
//! qubits and maps the decoded features back through the scaler and PCA.

mod io;
mod passes;
mod train;

use serde::{Deserialize, Serialize};

use crate::circuit::{entangler_block, Bank, CircuitSegment, ParameterBank};
use crate::error::{Error, Result};
use crate::grad::GradientVector;
use crate::pca::{MinMaxScaler, PcaModel};

pub use io::{
    format_history, load_model, parse_history, save_model, write_history, HISTORY_HEADER, MODEL_FORMAT_VERSION,
};
pub use passes::{
    decode_features, discriminator_score, embed_features, generator_loss, infer, infer_with_noise, pass_fake,
    pass_generator, pass_real, preprocess, DiscInput, PassResult,
};
pub use train::{train, train_baseline, train_observed, StepSnapshot, TrainOutcome};

/// Layers in the static injection block.
pub const INJECTION_LAYERS: usize = 2;
/// Upper bound on training images used as the validation reference set.
pub const REFERENCE_IMAGES: usize = 500;
/// Step for finite-difference generator gradients across a measurement.
pub const COMPOSED_FD_STEP: f64 = 1e-3;
/// Readout qubit of the discriminator.
pub const DISCRIMINATOR_QUBIT: usize = 0;

const BCE_EPS: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Generator and discriminator on one circuit, with regularized embedding
    /// and unitary injection.
    #[serde(rename = "organiq")]
    OrganiQ,
    /// Separate circuits joined by a classical measurement and plain normalization.
    Baseline,
}

/// Switches that each remove one technique from the combined design.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ablations {
    pub no_combined: bool,
    pub no_regularization: bool,
    pub no_injection: bool,
}

impl Ablations {
    pub fn any(&self) -> bool {
        self.no_combined || self.no_regularization || self.no_injection
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub n_qubits: usize,
    pub n_layers: usize,
    /// Measured/embedding qubits; `2^n_embed − 1` PCA features.
    pub n_embed: usize,
    pub iterations: usize,
    pub batch_size: usize,
    pub lr_g: f64,
    pub lr_d: f64,
    pub seed: u64,
    pub mode: Mode,
    pub ablations: Ablations,
    pub eval_every: usize,
    pub eval_count: usize,
    pub dataset_class: u8,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            n_qubits: 5,
            n_layers: 3,
            n_embed: 3,
            iterations: 500,
            batch_size: 20,
            lr_g: 0.05,
            lr_d: 0.05,
            seed: 0,
            mode: Mode::OrganiQ,
            ablations: Ablations::default(),
            eval_every: 25,
            eval_count: 50,
            dataset_class: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.n_qubits == 0 || self.n_qubits > crate::statevector::MAX_QUBITS {
            return fail(format!("n_qubits = {} out of range", self.n_qubits));
        }
        if self.n_embed == 0 || self.n_embed > self.n_qubits {
            return fail(format!("n_embed = {} must be in 1..={}", self.n_embed, self.n_qubits));
        }
        if self.n_layers == 0 || self.batch_size == 0 || self.eval_every == 0 || self.eval_count < 2 {
            return fail("layers, batch size and eval period must be positive; eval_count ≥ 2".into());
        }
        if !(self.lr_g > 0.0 && self.lr_d > 0.0 && self.lr_g.is_finite() && self.lr_d.is_finite()) {
            return fail(format!(
                "learning rates must be positive (got {}, {})",
                self.lr_g, self.lr_d
            ));
        }
        if self.dataset_class > 9 {
            return fail(format!("class {} outside 0-9", self.dataset_class));
        }
        Ok(())
    }

    /// Number of PCA features carried by the embedding register.
    pub fn n_features(&self) -> usize {
        (1 << self.n_embed) - 1
    }

    pub fn bank_len(&self) -> usize {
        self.n_layers * self.n_qubits
    }

    pub(crate) fn variant(&self) -> Variant {
        match self.mode {
            Mode::Baseline => Variant {
                combined: false,
                regularize: false,
                inject: false,
                baseline: true,
            },
            Mode::OrganiQ => Variant {
                combined: !self.ablations.no_combined,
                regularize: !self.ablations.no_regularization,
                inject: !self.ablations.no_injection,
                baseline: false,
            },
        }
    }
}

/// Resolved technique switches for one configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Variant {
    pub combined: bool,
    pub regularize: bool,
    pub inject: bool,
    pub baseline: bool,
}

/// Everything needed to generate images after training.
#[derive(Debug, Clone, PartialEq)]
pub struct GanModel {
    pub config: TrainConfig,
    pub gen_params: ParameterBank,
    pub disc_params: ParameterBank,
    /// Static injection block; `None` when injection is disabled.
    pub injection: Option<CircuitSegment>,
    pub pca: PcaModel,
    pub scaler: MinMaxScaler,
    /// Mean norm of the scaled training features, used to undo plain
    /// normalization when decoding without regularization.
    pub feature_scale: f64,
}

impl GanModel {
    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        let n = self.config.bank_len();
        if self.gen_params.len() != n || self.disc_params.len() != n {
            return Err(Error::Model(format!(
                "weight banks have {} and {} entries, expected {n}",
                self.gen_params.len(),
                self.disc_params.len()
            )));
        }
        if self.gen_params.bank != Bank::Generator || self.disc_params.bank != Bank::Discriminator {
            return Err(Error::Model("weight banks are mislabelled".into()));
        }
        if let Some(inj) = &self.injection {
            if inj.parameter_count() != 0 || inj.n_qubits() != self.config.n_qubits {
                return Err(Error::Model(
                    "injection block must be static and span the register".into(),
                ));
            }
        }
        if self.pca.k() != self.config.n_features() || self.scaler.len() != self.pca.k() {
            return Err(Error::Model(format!(
                "PCA keeps {} features and the scaler {}, expected {}",
                self.pca.k(),
                self.scaler.len(),
                self.config.n_features()
            )));
        }
        if !(self.feature_scale > 0.0 && self.feature_scale.is_finite()) {
            return Err(Error::Model(format!(
                "feature scale {} must be positive",
                self.feature_scale
            )));
        }
        Ok(())
    }

    pub fn generator_block(&self) -> CircuitSegment {
        entangler_block(self.config.n_qubits, self.config.n_layers, Bank::Generator).expect("validated configuration")
    }

    pub fn discriminator_block(&self) -> CircuitSegment {
        entangler_block(self.config.n_qubits, self.config.n_layers, Bank::Discriminator)
            .expect("validated configuration")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossRecord {
    pub iteration: usize,
    pub loss_real: f64,
    pub loss_fake: f64,
    pub loss_disc: f64,
    pub loss_gen: f64,
    pub val_frechet: Option<f64>,
}

/// Binary cross-entropy with the prediction clamped to `[1e-7, 1 − 1e-7]`.
pub fn bce(prediction: f64, label: f64) -> f64 {
    let d = prediction.clamp(BCE_EPS, 1.0 - BCE_EPS);
    -(label * d.ln() + (1.0 - label) * (1.0 - d).ln())
}

/// `∂bce/∂prediction`; zero where the clamp is active.
pub fn bce_derivative(prediction: f64, label: f64) -> f64 {
    if !(BCE_EPS..=1.0 - BCE_EPS).contains(&prediction) {
        return 0.0;
    }
    -label / prediction + (1.0 - label) / (1.0 - prediction)
}

/// Plain gradient descent, `θ' = θ − lr·g`.
pub fn sgd_update(bank: &ParameterBank, grad: &GradientVector, lr: f64) -> Result<ParameterBank> {
    if grad.bank != bank.bank {
        return Err(Error::Config(format!(
            "{} gradient applied to {} bank",
            grad.bank, bank.bank
        )));
    }
    if grad.values.len() != bank.len() {
        return Err(Error::DimensionMismatch {
            expected: bank.len(),
            actual: grad.values.len(),
        });
    }
    let values = bank.values.iter().zip(&grad.values).map(|(t, g)| t - lr * g).collect();
    ParameterBank::new(bank.bank, values)
}
