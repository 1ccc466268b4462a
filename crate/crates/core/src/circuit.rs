//! Parameterized circuit representation and execution.
//!
//! A circuit is assembled as a pipeline of [`CircuitSegment`]s. Tunable
//! rotations refer into named [`ParameterBank`]s through [`ParamRef`]s, so the
//! same segment can be executed against different weights (or shifted
//! weights during differentiation) without being rebuilt.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::statevector::QuantumState;

/// Which weight set a tunable gate reads from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Bank {
    Generator,
    Discriminator,
    Injection,
}

impl fmt::Display for Bank {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Bank::Generator => "generator",
            Bank::Discriminator => "discriminator",
            Bank::Injection => "injection",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ParamRef {
    pub bank: Bank,
    pub index: usize,
}

impl ParamRef {
    pub fn new(bank: Bank, index: usize) -> Self {
        Self { bank, index }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Gate {
    /// Tunable RX. `adjoint` negates the resolved angle (set by [`CircuitSegment::inverse`]).
    RxParam {
        qubit: usize,
        param: ParamRef,
        adjoint: bool,
    },
    RxConst {
        qubit: usize,
        angle: f64,
    },
    Cx {
        control: usize,
        target: usize,
    },
    /// Replaces the running state with these amplitudes (padded onto the leading qubits).
    StatePrep(Vec<Complex64>),
}

/// Ordered gate list acting on a fixed register width.
#[derive(Debug, Clone, PartialEq)]
pub struct CircuitSegment {
    n_qubits: usize,
    gates: Vec<Gate>,
}

impl CircuitSegment {
    pub fn new(n_qubits: usize, gates: Vec<Gate>) -> Result<Self> {
        if n_qubits == 0 {
            return Err(Error::Config("segment needs at least one qubit".into()));
        }
        for gate in &gates {
            match *gate {
                Gate::RxParam { qubit, .. } | Gate::RxConst { qubit, .. } if qubit >= n_qubits => {
                    return Err(Error::Config(format!(
                        "gate on qubit {qubit} in a {n_qubits}-qubit segment"
                    )));
                }
                Gate::Cx { control, target } if control >= n_qubits || target >= n_qubits => {
                    return Err(Error::Config(format!(
                        "CX({control},{target}) in a {n_qubits}-qubit segment"
                    )));
                }
                Gate::Cx { control, target } if control == target => {
                    return Err(Error::Config(format!("CX with control = target = {control}")));
                }
                _ => {}
            }
        }
        Ok(Self { n_qubits, gates })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    /// Number of distinct tunable parameters referenced by the segment.
    pub fn parameter_count(&self) -> usize {
        self.param_refs().count()
    }

    pub fn param_refs(&self) -> impl Iterator<Item = ParamRef> + '_ {
        self.gates.iter().filter_map(|g| match g {
            Gate::RxParam { param, .. } => Some(*param),
            _ => None,
        })
    }

    /// Fixed rotation angles of `RxConst` gates, in gate order.
    pub fn const_angles(&self) -> Vec<f64> {
        self.gates
            .iter()
            .filter_map(|g| match g {
                Gate::RxConst { angle, .. } => Some(*angle),
                _ => None,
            })
            .collect()
    }

    /// The adjoint segment: gates reversed, rotations negated, CX unchanged.
    pub fn inverse(&self) -> Result<Self> {
        let gates = self
            .gates
            .iter()
            .rev()
            .map(|g| match g {
                Gate::RxParam { qubit, param, adjoint } => Ok(Gate::RxParam {
                    qubit: *qubit,
                    param: *param,
                    adjoint: !adjoint,
                }),
                Gate::RxConst { qubit, angle } => Ok(Gate::RxConst {
                    qubit: *qubit,
                    angle: -angle,
                }),
                Gate::Cx { control, target } => Ok(Gate::Cx {
                    control: *control,
                    target: *target,
                }),
                Gate::StatePrep(_) => Err(Error::Inversion("state preparation is not a unitary gate".into())),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            n_qubits: self.n_qubits,
            gates,
        })
    }
}

/// Per layer: a rotation on every qubit followed by a CX ring `0→1→…→n-1→0`.
fn layered_gates(n_qubits: usize, n_layers: usize, mut rotation: impl FnMut(usize, usize) -> Gate) -> Vec<Gate> {
    let mut gates = Vec::with_capacity(n_layers * n_qubits * 2);
    for layer in 0..n_layers {
        for q in 0..n_qubits {
            gates.push(rotation(layer, q));
        }
        if n_qubits > 1 {
            // For two qubits the ring is CX(0,1), CX(1,0).
            for q in 0..n_qubits {
                gates.push(Gate::Cx {
                    control: q,
                    target: (q + 1) % n_qubits,
                });
            }
        }
    }
    gates
}

/// Tunable basic-entangler block; parameter `layer·n_qubits + q` drives qubit `q`.
pub fn entangler_block(n_qubits: usize, n_layers: usize, bank: Bank) -> Result<CircuitSegment> {
    if n_layers == 0 {
        return Err(Error::Config("entangler block needs at least one layer".into()));
    }
    let gates = layered_gates(n_qubits, n_layers, |layer, q| Gate::RxParam {
        qubit: q,
        param: ParamRef::new(bank, layer * n_qubits + q),
        adjoint: false,
    });
    CircuitSegment::new(n_qubits, gates)
}

/// Static entangling block with rotations drawn uniformly from `[0, π]`.
pub fn injection_block<R: Rng + ?Sized>(n_qubits: usize, n_layers: usize, rng: &mut R) -> Result<CircuitSegment> {
    if n_layers == 0 {
        return Err(Error::Config("injection block needs at least one layer".into()));
    }
    let angles: Vec<f64> = (0..n_layers * n_qubits).map(|_| rng.gen_range(0.0..=PI)).collect();
    injection_from_angles(n_qubits, &angles)
}

/// Rebuilds an injection block from explicitly recorded angles.
pub fn injection_from_angles(n_qubits: usize, angles: &[f64]) -> Result<CircuitSegment> {
    if n_qubits == 0 || angles.is_empty() || !angles.len().is_multiple_of(n_qubits) {
        return Err(Error::Config(format!(
            "{} injection angles do not fill layers of {n_qubits} qubits",
            angles.len()
        )));
    }
    if let Some(bad) = angles.iter().find(|a| !a.is_finite()) {
        return Err(Error::Config(format!("non-finite injection angle {bad}")));
    }
    let gates = layered_gates(n_qubits, angles.len() / n_qubits, |layer, q| Gate::RxConst {
        qubit: q,
        angle: angles[layer * n_qubits + q],
    });
    CircuitSegment::new(n_qubits, gates)
}

/// One fixed RX per qubit carrying a noise value; no entanglement.
pub fn angle_embedding(noise_row: &[f64], n_qubits: usize) -> Result<CircuitSegment> {
    if noise_row.len() != n_qubits {
        return Err(Error::Config(format!(
            "noise row of length {} for {n_qubits} qubits",
            noise_row.len()
        )));
    }
    if noise_row.iter().any(|v| !v.is_finite()) {
        return Err(Error::Config("non-finite noise value".into()));
    }
    let gates = noise_row
        .iter()
        .enumerate()
        .map(|(q, &angle)| Gate::RxConst { qubit: q, angle })
        .collect();
    CircuitSegment::new(n_qubits, gates)
}

/// Segment that only loads `amps` (padded onto the leading qubits).
pub fn state_prep(amps: &[f64], n_qubits: usize) -> Result<CircuitSegment> {
    let amps = amps.iter().map(|&a| Complex64::new(a, 0.0)).collect();
    CircuitSegment::new(n_qubits, vec![Gate::StatePrep(amps)])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterBank {
    pub bank: Bank,
    pub values: Vec<f64>,
}

impl ParameterBank {
    pub fn new(bank: Bank, values: Vec<f64>) -> Result<Self> {
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Config(format!("non-finite {bank} parameter {bad}")));
        }
        Ok(Self { bank, values })
    }

    pub fn zeros(bank: Bank, len: usize) -> Self {
        Self {
            bank,
            values: vec![0.0; len],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// The weight banks visible to one circuit execution.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BankSet {
    banks: Vec<ParameterBank>,
}

impl BankSet {
    pub fn new(banks: impl IntoIterator<Item = ParameterBank>) -> Self {
        let mut set = Self::default();
        for b in banks {
            set.insert(b);
        }
        set
    }

    /// Adds or replaces the bank of the same kind.
    pub fn insert(&mut self, bank: ParameterBank) {
        match self.banks.iter_mut().find(|b| b.bank == bank.bank) {
            Some(slot) => *slot = bank,
            None => self.banks.push(bank),
        }
    }

    pub fn get(&self, bank: Bank) -> Option<&ParameterBank> {
        self.banks.iter().find(|b| b.bank == bank)
    }

    pub fn value(&self, param: ParamRef) -> Option<f64> {
        self.get(param.bank)?.values.get(param.index).copied()
    }
}

/// Executes `pipeline` on `initial` with parameters read from `banks`.
pub fn run(pipeline: &[&CircuitSegment], banks: &BankSet, initial: QuantumState) -> Result<QuantumState> {
    run_with(pipeline, |p| banks.value(p), initial)
}

/// Like [`run`], but parameters come from an arbitrary resolver.
pub fn run_with<F>(pipeline: &[&CircuitSegment], resolve: F, initial: QuantumState) -> Result<QuantumState>
where
    F: Fn(ParamRef) -> Option<f64>,
{
    check_pipeline(pipeline, initial.n_qubits())?;
    let n_qubits = initial.n_qubits();
    let mut state = initial;
    for segment in pipeline {
        for gate in &segment.gates {
            match gate {
                Gate::RxParam { qubit, param, adjoint } => {
                    let value = resolve(*param).ok_or_else(|| {
                        Error::Config(format!("unresolved parameter {}[{}]", param.bank, param.index))
                    })?;
                    state.apply_rx(*qubit, if *adjoint { -value } else { value })?;
                }
                Gate::RxConst { qubit, angle } => state.apply_rx(*qubit, *angle)?,
                Gate::Cx { control, target } => state.apply_cx(*control, *target)?,
                Gate::StatePrep(amps) => {
                    state = QuantumState::from_amplitudes_padded(amps, n_qubits)?;
                }
            }
        }
    }
    Ok(state)
}

fn check_pipeline(pipeline: &[&CircuitSegment], n_qubits: usize) -> Result<()> {
    for (s, segment) in pipeline.iter().enumerate() {
        if segment.n_qubits != n_qubits {
            return Err(Error::Config(format!(
                "segment {s} acts on {} qubits, register has {n_qubits}",
                segment.n_qubits
            )));
        }
        for (g, gate) in segment.gates.iter().enumerate() {
            if matches!(gate, Gate::StatePrep(_)) && (s, g) != (0, 0) {
                return Err(Error::UnsupportedCircuit(format!(
                    "state preparation at segment {s}, gate {g}; only allowed first"
                )));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn random_state(n: usize, rng: &mut ChaCha8Rng) -> QuantumState {
        let raw: Vec<Complex64> = (0..1 << n)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let norm = raw.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        QuantumState::from_amplitudes(raw.into_iter().map(|a| a / norm).collect()).unwrap()
    }

    fn rx_param(qubit: usize, bank: Bank, index: usize) -> Gate {
        Gate::RxParam {
            qubit,
            param: ParamRef::new(bank, index),
            adjoint: false,
        }
    }

    #[test]
    fn entangler_layout() {
        let seg = entangler_block(5, 3, Bank::Generator).unwrap();
        assert_eq!(seg.parameter_count(), 15);
        let indices: Vec<usize> = seg.param_refs().map(|p| p.index).collect();
        assert_eq!(indices, (0..15).collect::<Vec<_>>());

        let seg = entangler_block(2, 1, Bank::Discriminator).unwrap();
        assert_eq!(
            seg.gates(),
            &[
                rx_param(0, Bank::Discriminator, 0),
                rx_param(1, Bank::Discriminator, 1),
                Gate::Cx { control: 0, target: 1 },
                Gate::Cx { control: 1, target: 0 },
            ]
        );

        let seg = entangler_block(1, 2, Bank::Generator).unwrap();
        assert_eq!(seg.gates().len(), 2);
        assert!(seg.gates().iter().all(|g| matches!(g, Gate::RxParam { .. })));

        assert!(entangler_block(3, 0, Bank::Generator).is_err());
    }

    #[test]
    fn injection_block_is_static_and_seeded() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let seg = injection_block(5, 2, &mut rng).unwrap();
        let angles = seg.const_angles();
        assert_eq!(angles.len(), 10);
        assert!(angles.iter().all(|a| (0.0..=PI).contains(a)));
        assert_eq!(seg.parameter_count(), 0);

        let again = injection_block(5, 2, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        assert_eq!(seg, again);
        assert_eq!(injection_from_angles(5, &angles).unwrap(), seg);
        assert!(injection_from_angles(5, &angles[..7]).is_err());
    }

    #[test]
    fn angle_embedding_shapes() {
        let seg = angle_embedding(&[0.0; 5], 5).unwrap();
        assert_eq!(seg.gates().len(), 5);
        let out = run(&[&seg], &BankSet::default(), QuantumState::zero(5).unwrap()).unwrap();
        assert_eq!(out, QuantumState::zero(5).unwrap());
        assert!(matches!(angle_embedding(&[0.1; 4], 5), Err(Error::Config(_))));
    }

    #[test]
    fn inversion_examples() {
        let theta = 0.42;
        let seg = CircuitSegment::new(1, vec![Gate::RxConst { qubit: 0, angle: theta }]).unwrap();
        assert_eq!(
            seg.inverse().unwrap().gates(),
            &[Gate::RxConst {
                qubit: 0,
                angle: -theta
            }]
        );

        let seg = CircuitSegment::new(
            2,
            vec![
                Gate::Cx { control: 0, target: 1 },
                Gate::RxConst { qubit: 1, angle: theta },
            ],
        )
        .unwrap();
        assert_eq!(
            seg.inverse().unwrap().gates(),
            &[
                Gate::RxConst {
                    qubit: 1,
                    angle: -theta
                },
                Gate::Cx { control: 0, target: 1 },
            ]
        );

        let prep = state_prep(&[0.6, 0.8], 1).unwrap();
        assert!(matches!(prep.inverse(), Err(Error::Inversion(_))));
    }

    #[test]
    fn injection_then_inverse_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let seg = injection_block(5, 2, &mut rng).unwrap();
            let inv = seg.inverse().unwrap();
            let psi = random_state(5, &mut rng);
            let out = run(&[&seg, &inv], &BankSet::default(), psi.clone()).unwrap();
            for (a, b) in out.amplitudes().iter().zip(psi.amplitudes()) {
                assert!((a - b).norm() <= 1e-10);
            }
        }
    }

    #[test]
    fn parameterized_inverse_negates_resolved_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let seg = entangler_block(4, 3, Bank::Discriminator).unwrap();
        let inv = seg.inverse().unwrap();
        let values = (0..12).map(|_| rng.gen_range(-PI..PI)).collect();
        let banks = BankSet::new([ParameterBank::new(Bank::Discriminator, values).unwrap()]);
        let psi = random_state(4, &mut rng);
        let out = run(&[&seg, &inv], &banks, psi.clone()).unwrap();
        for (a, b) in out.amplitudes().iter().zip(psi.amplitudes()) {
            assert!((a - b).norm() <= 1e-10);
        }
    }

    #[test]
    fn run_examples() {
        let psi = QuantumState::zero(3).unwrap();
        assert_eq!(run(&[], &BankSet::default(), psi.clone()).unwrap(), psi);

        let prep = state_prep(&[0.6, 0.8], 1).unwrap();
        let out = run(&[&prep], &BankSet::default(), QuantumState::zero(1).unwrap()).unwrap();
        assert_eq!(out.amplitudes()[1], Complex64::new(0.8, 0.0));

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let noise: Vec<f64> = (0..5).map(|_| rng.gen_range(0.0..2.0 * PI)).collect();
        let embed = angle_embedding(&noise, 5).unwrap();
        let gen = entangler_block(5, 3, Bank::Generator).unwrap();
        let banks = BankSet::new([ParameterBank::new(Bank::Generator, vec![0.3; 15]).unwrap()]);
        let out = run(&[&embed, &gen], &banks, QuantumState::zero(5).unwrap()).unwrap();
        assert_eq!(out.amplitudes().len(), 32);
        assert_abs_diff_eq!(out.norm(), 1.0, epsilon = 1e-12);
        let again = run(&[&embed, &gen], &banks, QuantumState::zero(5).unwrap()).unwrap();
        assert_eq!(out, again);
    }

    #[test]
    fn run_rejects_bad_pipelines() {
        let gen = entangler_block(2, 1, Bank::Generator).unwrap();
        let err = run(&[&gen], &BankSet::default(), QuantumState::zero(2).unwrap());
        assert!(matches!(err, Err(Error::Config(_))));

        let short = BankSet::new([ParameterBank::zeros(Bank::Generator, 1)]);
        assert!(run(&[&gen], &short, QuantumState::zero(2).unwrap()).is_err());

        let prep = state_prep(&[0.6, 0.8], 2).unwrap();
        let banks = BankSet::new([ParameterBank::zeros(Bank::Generator, 2)]);
        let err = run(&[&gen, &prep], &banks, QuantumState::zero(2).unwrap());
        assert!(matches!(err, Err(Error::UnsupportedCircuit(_))));

        let wide = entangler_block(3, 1, Bank::Generator).unwrap();
        assert!(run(&[&wide], &banks, QuantumState::zero(2).unwrap()).is_err());
    }
}
