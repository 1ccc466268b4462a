use rand::Rng;
use rayon::prelude::*;

use super::{bce, bce_derivative, GanModel, COMPOSED_FD_STEP, DISCRIMINATOR_QUBIT};
use crate::circuit::{angle_embedding, run, state_prep, Bank, BankSet, CircuitSegment, ParameterBank};
use crate::encode::{deregularize, plain_normalize, regularize, sample_noise, z_to_unit, NoiseBatch};
use crate::error::{Error, Result};
use crate::grad::{param_shift_gradient, GradientVector, Readout};
use crate::linalg::Matrix;
use crate::statevector::QuantumState;

const REAL: f64 = 1.0;
const FAKE: f64 = 0.0;

/// Mean loss over a batch and its gradient with respect to one bank.
#[derive(Debug, Clone, PartialEq)]
pub struct PassResult {
    pub loss: f64,
    pub grad: GradientVector,
    /// Discriminator outputs in `[0, 1]`, one per sample.
    pub scores: Vec<f64>,
}

/// One discriminator input.
#[derive(Debug, Clone, Copy)]
pub enum DiscInput<'a> {
    /// Scaled PCA features in `[0, 1]`.
    Real(&'a [f64]),
    /// One noise row for the generator.
    Noise(&'a [f64]),
}

struct Blocks {
    gen: CircuitSegment,
    disc: CircuitSegment,
}

impl Blocks {
    fn of(model: &GanModel) -> Self {
        Self {
            gen: model.generator_block(),
            disc: model.discriminator_block(),
        }
    }
}

fn bank_set(model: &GanModel) -> BankSet {
    BankSet::new([model.gen_params.clone(), model.disc_params.clone()])
}

/// Images (rows) → PCA scores → min-max scaled features in `[0, 1]`.
pub fn preprocess(model: &GanModel, images: &Matrix) -> Result<Vec<Vec<f64>>> {
    images
        .row_iter()
        .map(|img| model.scaler.apply(&model.pca.transform(img)?))
        .collect()
}

/// Amplitudes loaded for a feature vector: regularized, or plainly normalized.
pub fn embed_features(model: &GanModel, features: &[f64]) -> Result<Vec<f64>> {
    let dim = 1 << model.config.n_embed;
    if model.config.variant().regularize {
        Ok(regularize(features, model.config.n_embed)?.amplitudes)
    } else {
        plain_normalize(features, dim)
    }
}

/// Measured probabilities on the embedding qubits → features in `[0, 1]`.
pub fn decode_features(model: &GanModel, probs: &[f64]) -> Result<Vec<f64>> {
    let variant = model.config.variant();
    let k = model.config.n_features();
    if variant.regularize {
        return deregularize(probs, model.config.n_embed);
    }
    crate::encode::check_probabilities(probs, k + 1)?;
    let scale = if variant.baseline { 1.0 } else { model.feature_scale };
    Ok(probs[..k]
        .iter()
        .map(|p| (scale * p.max(0.0).sqrt()).clamp(0.0, 1.0))
        .collect())
}

/// Marginals of the generator output on the embedding qubits.
fn generator_probabilities(
    model: &GanModel,
    blocks: &Blocks,
    banks: &BankSet,
    noise_row: &[f64],
    unmix: Option<&CircuitSegment>,
) -> Result<Vec<f64>> {
    let n = model.config.n_qubits;
    let embed = angle_embedding(noise_row, n)?;
    let mut pipeline = vec![&embed, &blocks.gen];
    pipeline.extend(unmix);
    let state = run(&pipeline, banks, QuantumState::zero(n)?)?;
    state.marginal_probabilities(model.config.n_embed)
}

/// Discriminator `⟨Z⟩` for one input, with its gradient when `active` is given.
fn evaluate_sample(
    model: &GanModel,
    blocks: &Blocks,
    banks: &BankSet,
    input: DiscInput<'_>,
    active: Option<Bank>,
) -> Result<(f64, Option<Vec<f64>>)> {
    let n = model.config.n_qubits;
    let variant = model.config.variant();
    let amplitudes = match input {
        DiscInput::Real(features) => Some(embed_features(model, features)?),
        DiscInput::Noise(_) if variant.combined => None,
        DiscInput::Noise(row) => {
            if active == Some(Bank::Generator) {
                return Err(Error::UnsupportedCircuit(
                    "generator gradients cannot be shifted across a measurement".into(),
                ));
            }
            let probs = generator_probabilities(model, blocks, banks, row, None)?;
            Some(if variant.baseline {
                let roots: Vec<f64> = probs.iter().map(|p| p.max(0.0).sqrt()).collect();
                plain_normalize(&roots, probs.len())?
            } else {
                embed_features(model, &decode_features(model, &probs)?)?
            })
        }
    };

    let prep;
    let embed;
    let mut pipeline: Vec<&CircuitSegment> = Vec::with_capacity(3);
    match (&amplitudes, input) {
        (Some(amps), _) => {
            prep = state_prep(amps, n)?;
            pipeline.push(&prep);
            if variant.inject {
                pipeline.extend(model.injection.as_ref());
            }
        }
        (None, DiscInput::Noise(row)) => {
            embed = angle_embedding(row, n)?;
            pipeline.push(&embed);
            pipeline.push(&blocks.gen);
        }
        (None, DiscInput::Real(_)) => unreachable!("real inputs are always embedded"),
    }
    pipeline.push(&blocks.disc);

    let state = run(&pipeline, banks, QuantumState::zero(n)?)?;
    let z = state.expectation_z(DISCRIMINATOR_QUBIT)?;
    let grad = match active {
        Some(bank) => {
            Some(param_shift_gradient(&pipeline, banks, bank, Readout::ExpectationZ(DISCRIMINATOR_QUBIT))?.values)
        }
        None => None,
    };
    Ok((z, grad))
}

/// Discriminator output in `[0, 1]` for one input.
pub fn discriminator_score(model: &GanModel, input: DiscInput<'_>) -> Result<f64> {
    let blocks = Blocks::of(model);
    let (z, _) = evaluate_sample(model, &blocks, &bank_set(model), input, None)?;
    Ok(z_to_unit(z))
}

/// Mean BCE and chain-ruled shift gradient over a batch.
fn shifted_pass(model: &GanModel, inputs: &[DiscInput<'_>], label: f64, active: Bank) -> Result<PassResult> {
    if inputs.is_empty() {
        return Err(Error::InsufficientData("empty batch".into()));
    }
    let blocks = Blocks::of(model);
    let banks = bank_set(model);
    let per_sample = inputs
        .par_iter()
        .map(|&input| {
            let (z, dz) = evaluate_sample(model, &blocks, &banks, input, Some(active))?;
            let d = z_to_unit(z);
            // d = (z + 1)/2 ⇒ ∂d/∂z = 1/2
            let outer = bce_derivative(d, label) * 0.5;
            let grad: Vec<f64> = dz.expect("gradient requested").iter().map(|g| outer * g).collect();
            Ok((bce(d, label), d, grad))
        })
        .collect::<Result<Vec<_>>>()?;

    let n = inputs.len() as f64;
    let len = banks.get(active).map_or(0, ParameterBank::len);
    let mut grad = vec![0.0; len];
    let mut loss = 0.0;
    let mut scores = Vec::with_capacity(inputs.len());
    for (l, d, g) in &per_sample {
        loss += l;
        scores.push(*d);
        grad.iter_mut().zip(g).for_each(|(acc, v)| *acc += v);
    }
    grad.iter_mut().for_each(|v| *v /= n);
    Ok(PassResult {
        loss: loss / n,
        grad: GradientVector {
            bank: active,
            values: grad,
        },
        scores,
    })
}

fn noise_inputs(noise: &NoiseBatch) -> Vec<DiscInput<'_>> {
    noise.rows().map(DiscInput::Noise).collect()
}

/// Discriminator on real samples, labelled real; gradient over the discriminator bank.
pub fn pass_real(model: &GanModel, features: &[Vec<f64>]) -> Result<PassResult> {
    let inputs: Vec<DiscInput<'_>> = features.iter().map(|f| DiscInput::Real(f)).collect();
    shifted_pass(model, &inputs, REAL, Bank::Discriminator)
}

/// Discriminator on generated samples, labelled fake; the generator bank is frozen.
pub fn pass_fake(model: &GanModel, noise: &NoiseBatch) -> Result<PassResult> {
    shifted_pass(model, &noise_inputs(noise), FAKE, Bank::Discriminator)
}

/// Mean `bce(d, 1)` over generated samples.
pub fn generator_loss(model: &GanModel, noise: &NoiseBatch) -> Result<f64> {
    let blocks = Blocks::of(model);
    let banks = bank_set(model);
    batch_loss(model, &blocks, &banks, &noise_inputs(noise), REAL)
}

fn batch_loss(model: &GanModel, blocks: &Blocks, banks: &BankSet, inputs: &[DiscInput<'_>], label: f64) -> Result<f64> {
    let losses = inputs
        .par_iter()
        .map(|&input| {
            let (z, _) = evaluate_sample(model, blocks, banks, input, None)?;
            Ok(bce(z_to_unit(z), label))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(losses.iter().sum::<f64>() / inputs.len() as f64)
}

/// Generator step: generated samples labelled real, discriminator bank frozen.
///
/// On the combined circuit the gradient is exact (parameter shift). When a
/// measurement separates generator and discriminator, it is a central
/// difference of the whole batch loss.
pub fn pass_generator(model: &GanModel, noise: &NoiseBatch) -> Result<PassResult> {
    if model.config.variant().combined {
        return shifted_pass(model, &noise_inputs(noise), REAL, Bank::Generator);
    }
    let blocks = Blocks::of(model);
    let inputs = noise_inputs(noise);
    let mut banks = bank_set(model);
    let scores = inputs
        .iter()
        .map(|&input| evaluate_sample(model, &blocks, &banks, input, None).map(|(z, _)| z_to_unit(z)))
        .collect::<Result<Vec<f64>>>()?;
    let loss = scores.iter().map(|&d| bce(d, REAL)).sum::<f64>() / scores.len() as f64;

    let theta = model.gen_params.values.clone();
    let h = COMPOSED_FD_STEP;
    let mut grad = Vec::with_capacity(theta.len());
    for j in 0..theta.len() {
        let mut shifted = theta.clone();
        shifted[j] = theta[j] + h;
        banks.insert(ParameterBank::new(Bank::Generator, shifted.clone())?);
        let plus = batch_loss(model, &blocks, &banks, &inputs, REAL)?;
        shifted[j] = theta[j] - h;
        banks.insert(ParameterBank::new(Bank::Generator, shifted)?);
        let minus = batch_loss(model, &blocks, &banks, &inputs, REAL)?;
        grad.push((plus - minus) / (2.0 * h));
    }
    Ok(PassResult {
        loss,
        grad: GradientVector {
            bank: Bank::Generator,
            values: grad,
        },
        scores,
    })
}

/// Decoded features in `[0, 1]` for one noise row.
fn generate_features(
    model: &GanModel,
    blocks: &Blocks,
    banks: &BankSet,
    unmix: Option<&CircuitSegment>,
    row: &[f64],
) -> Result<Vec<f64>> {
    let probs = generator_probabilities(model, blocks, banks, row, unmix)?;
    decode_features(model, &probs)
}

/// Generates one image per noise row.
pub fn infer_with_noise(model: &GanModel, noise: &NoiseBatch) -> Result<Matrix> {
    let blocks = Blocks::of(model);
    let banks = bank_set(model);
    let variant = model.config.variant();
    let unmix = match (&model.injection, variant.combined && variant.inject) {
        (Some(inj), true) => Some(inj.inverse()?),
        _ => None,
    };
    let rows = noise
        .rows()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|row| {
            let features = generate_features(model, &blocks, &banks, unmix.as_ref(), row)?;
            model.pca.inverse(&model.scaler.invert(&features)?)
        })
        .collect::<Result<Vec<_>>>()?;
    Matrix::from_rows(&rows, model.pca.dim())
}

/// Generates `count` images from fresh noise.
pub fn infer<R: Rng + ?Sized>(model: &GanModel, count: usize, rng: &mut R) -> Result<Matrix> {
    let noise = sample_noise(count, model.config.n_qubits, rng)?;
    infer_with_noise(model, &noise)
}
