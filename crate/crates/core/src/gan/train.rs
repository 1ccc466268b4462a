use std::f64::consts::PI;

use log::{debug, info};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    infer_with_noise, pass_fake, pass_generator, pass_real, preprocess, sgd_update, GanModel, LossRecord, Mode,
    TrainConfig, INJECTION_LAYERS, REFERENCE_IMAGES,
};
use crate::circuit::{injection_block, Bank, ParameterBank};
use crate::encode::{sample_noise, NoiseBatch};
use crate::error::{Error, Result};
use crate::grad::GradientVector;
use crate::linalg::Matrix;
use crate::metrics::frechet_distance_samples;
use crate::pca::{pca_fit, MinMaxScaler};

/// Stream id mixed into the seed for the fixed validation noise.
const EVAL_STREAM: u64 = 0x5eed_e7a1;

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Weights of the best validated snapshot.
    pub model: GanModel,
    pub history: Vec<LossRecord>,
    pub best_frechet: Option<f64>,
    pub best_iteration: Option<usize>,
    pub final_frechet: Option<f64>,
}

/// Weight banks around the two updates of one iteration.
#[derive(Debug)]
pub struct StepSnapshot<'a> {
    pub iteration: usize,
    pub gen_before: &'a ParameterBank,
    pub disc_before: &'a ParameterBank,
    pub gen_after_disc_step: &'a ParameterBank,
    pub disc_after_disc_step: &'a ParameterBank,
    pub gen_after_gen_step: &'a ParameterBank,
    pub disc_after_gen_step: &'a ParameterBank,
}

pub fn train(config: &TrainConfig, class_images: &Matrix) -> Result<TrainOutcome> {
    train_observed(config, class_images, |_| {})
}

/// [`train`] with the configuration forced to the two-circuit baseline.
pub fn train_baseline(config: &TrainConfig, class_images: &Matrix) -> Result<TrainOutcome> {
    let config = TrainConfig {
        mode: Mode::Baseline,
        ..config.clone()
    };
    train(&config, class_images)
}

/// Walks the dataset in shuffled epochs, one batch of indices at a time.
struct Batches {
    order: Vec<usize>,
    cursor: usize,
    batch_size: usize,
}

impl Batches {
    fn new(n: usize, batch_size: usize) -> Self {
        Self {
            order: (0..n).collect(),
            cursor: n,
            batch_size,
        }
    }

    fn next<R: Rng>(&mut self, rng: &mut R) -> &[usize] {
        if self.cursor + self.batch_size > self.order.len() {
            self.order.shuffle(rng);
            self.cursor = 0;
        }
        let batch = &self.order[self.cursor..self.cursor + self.batch_size];
        self.cursor += self.batch_size;
        batch
    }
}

fn uniform_bank<R: Rng>(bank: Bank, len: usize, rng: &mut R) -> ParameterBank {
    ParameterBank {
        bank,
        values: (0..len).map(|_| rng.gen_range(0.0..PI)).collect(),
    }
}

fn check_finite(iteration: usize, record: &LossRecord) -> Result<()> {
    let values = [record.loss_real, record.loss_fake, record.loss_gen];
    if values.iter().all(|v| v.is_finite()) {
        return Ok(());
    }
    Err(Error::Numeric(format!(
        "non-finite loss at iteration {iteration}: real {}, fake {}, generator {}",
        record.loss_real, record.loss_fake, record.loss_gen
    )))
}

fn sum_grads(a: &GradientVector, b: &GradientVector) -> GradientVector {
    GradientVector {
        bank: a.bank,
        values: a.values.iter().zip(&b.values).map(|(x, y)| x + y).collect(),
    }
}

/// Full training loop; `observe` sees the weight banks around every update.
pub fn train_observed<F>(config: &TrainConfig, class_images: &Matrix, mut observe: F) -> Result<TrainOutcome>
where
    F: FnMut(&StepSnapshot<'_>),
{
    config.validate()?;
    let n_images = class_images.rows();
    let k = config.n_features();
    if n_images < config.batch_size || n_images <= k {
        return Err(Error::InsufficientData(format!(
            "{n_images} images for batch size {} and {k} PCA features",
            config.batch_size
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let pca = pca_fit(class_images, k)?;
    let scaler = MinMaxScaler::fit(&pca.transform_rows(class_images)?)?;

    let bank_len = config.bank_len();
    let gen_params = uniform_bank(Bank::Generator, bank_len, &mut rng);
    let disc_params = uniform_bank(Bank::Discriminator, bank_len, &mut rng);
    // drawn in every mode so the weight streams line up across variants
    let injection = injection_block(config.n_qubits, INJECTION_LAYERS, &mut rng)?;
    let variant = config.variant();

    let mut model = GanModel {
        config: config.clone(),
        gen_params,
        disc_params,
        injection: variant.inject.then_some(injection),
        pca,
        scaler,
        feature_scale: 1.0,
    };
    let features = preprocess(&model, class_images)?;
    let mean_norm = features
        .iter()
        .map(|f| f.iter().map(|v| v * v).sum::<f64>().sqrt())
        .sum::<f64>()
        / features.len() as f64;
    if mean_norm > 0.0 {
        model.feature_scale = mean_norm;
    }
    model.validate()?;

    let reference_rows: Vec<&[f64]> = class_images.row_iter().take(REFERENCE_IMAGES).collect();
    let reference = Matrix::from_rows(&reference_rows, class_images.cols())?;
    let mut eval_rng = ChaCha8Rng::seed_from_u64(config.seed ^ EVAL_STREAM);
    let eval_noise = sample_noise(config.eval_count, config.n_qubits, &mut eval_rng)?;

    info!(
        "training {:?} (ablations {:?}) on {n_images} images for {} iterations",
        config.mode, config.ablations, config.iterations
    );

    let mut history = Vec::with_capacity(config.iterations);
    let mut best: Option<(f64, usize, ParameterBank, ParameterBank)> = None;
    let mut final_frechet = None;
    let mut batches = Batches::new(n_images, config.batch_size);

    for iteration in 0..config.iterations {
        let batch: Vec<Vec<f64>> = batches.next(&mut rng).iter().map(|&i| features[i].clone()).collect();
        let noise = sample_noise(config.batch_size, config.n_qubits, &mut rng)?;

        let gen_before = model.gen_params.clone();
        let disc_before = model.disc_params.clone();

        let real = pass_real(&model, &batch)?;
        let fake = pass_fake(&model, &noise)?;
        model.disc_params = sgd_update(&model.disc_params, &sum_grads(&real.grad, &fake.grad), config.lr_d)?;
        let disc_after_disc_step = model.disc_params.clone();

        let noise = sample_noise(config.batch_size, config.n_qubits, &mut rng)?;
        let gen = pass_generator(&model, &noise)?;
        let gen_after_disc_step = model.gen_params.clone();
        model.gen_params = sgd_update(&model.gen_params, &gen.grad, config.lr_g)?;

        observe(&StepSnapshot {
            iteration,
            gen_before: &gen_before,
            disc_before: &disc_before,
            gen_after_disc_step: &gen_after_disc_step,
            disc_after_disc_step: &disc_after_disc_step,
            gen_after_gen_step: &model.gen_params,
            disc_after_gen_step: &model.disc_params,
        });

        let mut record = LossRecord {
            iteration,
            loss_real: real.loss,
            loss_fake: fake.loss,
            loss_disc: real.loss + fake.loss,
            loss_gen: gen.loss,
            val_frechet: None,
        };
        check_finite(iteration, &record)?;

        let done = iteration + 1;
        if done % config.eval_every == 0 || done == config.iterations {
            let frechet = validate(&model, &eval_noise, &reference)?;
            record.val_frechet = Some(frechet);
            final_frechet = Some(frechet);
            debug!("iteration {done}: validation Fréchet {frechet:.4}");
            if best.as_ref().is_none_or(|(b, ..)| frechet < *b) {
                best = Some((frechet, iteration, model.gen_params.clone(), model.disc_params.clone()));
            }
        }
        history.push(record);
    }

    let (best_frechet, best_iteration) = match best {
        Some((f, it, gen, disc)) => {
            model.gen_params = gen;
            model.disc_params = disc;
            (Some(f), Some(it))
        }
        None => (None, None),
    };
    Ok(TrainOutcome {
        model,
        history,
        best_frechet,
        best_iteration,
        final_frechet,
    })
}

fn validate(model: &GanModel, noise: &NoiseBatch, reference: &Matrix) -> Result<f64> {
    let generated = infer_with_noise(model, noise)?;
    frechet_distance_samples(&generated, reference)
}
