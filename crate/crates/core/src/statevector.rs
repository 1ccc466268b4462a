//! Dense statevector simulation.
//!
//! Basis index convention: for an `n`-qubit register, basis index
//! `b = Σ_q bit_q · 2^(n-1-q)`, i.e. qubit 0 is the most significant bit.
//! "The first k qubits" therefore always means the k most significant bits,
//! which keeps marginals and embeddings contiguous slices of the vector.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest register the simulator accepts.
pub const MAX_QUBITS: usize = 12;

const NORM_TOLERANCE: f64 = 1e-9;

/// Pure state of `n_qubits` qubits as a dense vector of `2^n_qubits` amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl QuantumState {
    /// The all-zero computational basis state `|0…0⟩`.
    pub fn zero(n_qubits: usize) -> Result<Self> {
        check_width(n_qubits)?;
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        Ok(Self { n_qubits, amplitudes })
    }

    /// Prepares the state whose amplitudes are exactly `amps`.
    ///
    /// The length must be a power of two and the vector must have unit norm
    /// (within 1e-9).
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let k = register_width(amps.len())?;
        check_width(k)?;
        check_unit_norm(&amps)?;
        Ok(Self {
            n_qubits: k,
            amplitudes: amps,
        })
    }

    /// Prepares `amps` (length `2^k`) on the first `k` qubits of an
    /// `n_qubits` register, leaving the trailing qubits in `|0⟩`.
    ///
    /// Amplitude `a` lands on basis index `a · 2^(n_qubits - k)`.
    pub fn from_amplitudes_padded(amps: &[Complex64], n_qubits: usize) -> Result<Self> {
        let k = register_width(amps.len())?;
        check_width(n_qubits)?;
        if k > n_qubits {
            return Err(Error::Encoding(format!(
                "{} amplitudes do not fit on {n_qubits} qubits",
                amps.len()
            )));
        }
        check_unit_norm(amps)?;
        let stride = 1usize << (n_qubits - k);
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        for (a, &amp) in amps.iter().enumerate() {
            amplitudes[a * stride] = amp;
        }
        Ok(Self { n_qubits, amplitudes })
    }

    /// Real-amplitude convenience wrapper around [`Self::from_amplitudes_padded`].
    pub fn from_real_padded(amps: &[f64], n_qubits: usize) -> Result<Self> {
        let amps: Vec<Complex64> = amps.iter().map(|&a| Complex64::new(a, 0.0)).collect();
        Self::from_amplitudes_padded(&amps, n_qubits)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// Euclidean norm of the amplitude vector.
    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Applies `RX(angle) = [[cos θ/2, -i sin θ/2], [-i sin θ/2, cos θ/2]]` to `qubit`.
    pub fn apply_rx(&mut self, qubit: usize, angle: f64) -> Result<()> {
        self.check_qubit(qubit)?;
        let (s, c) = (angle / 2.0).sin_cos();
        let mask = self.mask(qubit);
        let minus_i_s = Complex64::new(0.0, -s);
        for i in 0..self.amplitudes.len() {
            if i & mask == 0 {
                let j = i | mask;
                let a = self.amplitudes[i];
                let b = self.amplitudes[j];
                self.amplitudes[i] = a * c + b * minus_i_s;
                self.amplitudes[j] = a * minus_i_s + b * c;
            }
        }
        Ok(())
    }

    /// Flips `target` on every basis state where `control` is 1.
    pub fn apply_cx(&mut self, control: usize, target: usize) -> Result<()> {
        self.check_qubit(control)?;
        self.check_qubit(target)?;
        if control == target {
            return Err(Error::Config(format!("CX control and target are both qubit {control}")));
        }
        let cmask = self.mask(control);
        let tmask = self.mask(target);
        for i in 0..self.amplitudes.len() {
            if i & cmask != 0 && i & tmask == 0 {
                self.amplitudes.swap(i, i | tmask);
            }
        }
        Ok(())
    }

    /// Outcome probabilities of the first `first_k` qubits, summed over the rest.
    ///
    /// Entry `j` corresponds to the first-k bits reading `j` (MSB first).
    pub fn marginal_probabilities(&self, first_k: usize) -> Result<Vec<f64>> {
        if first_k == 0 || first_k > self.n_qubits {
            return Err(Error::Config(format!(
                "marginal over {first_k} qubits of a {}-qubit state",
                self.n_qubits
            )));
        }
        let shift = self.n_qubits - first_k;
        let mut probs = vec![0.0; 1 << first_k];
        for (b, amp) in self.amplitudes.iter().enumerate() {
            probs[b >> shift] += amp.norm_sqr();
        }
        Ok(probs)
    }

    /// `⟨Z⟩ = P(bit = 0) - P(bit = 1)` on `qubit`.
    pub fn expectation_z(&self, qubit: usize) -> Result<f64> {
        self.check_qubit(qubit)?;
        let mask = self.mask(qubit);
        Ok(self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(b, amp)| if b & mask == 0 { amp.norm_sqr() } else { -amp.norm_sqr() })
            .sum())
    }

    fn mask(&self, qubit: usize) -> usize {
        1 << (self.n_qubits - 1 - qubit)
    }

    fn check_qubit(&self, qubit: usize) -> Result<()> {
        if qubit >= self.n_qubits {
            return Err(Error::Config(format!(
                "qubit {qubit} out of range for {} qubits",
                self.n_qubits
            )));
        }
        Ok(())
    }
}

fn check_width(n_qubits: usize) -> Result<()> {
    if !(1..=MAX_QUBITS).contains(&n_qubits) {
        return Err(Error::Config(format!(
            "register width {n_qubits} outside 1..={MAX_QUBITS}"
        )));
    }
    Ok(())
}

fn register_width(len: usize) -> Result<usize> {
    if len < 2 || !len.is_power_of_two() {
        return Err(Error::Encoding(format!(
            "amplitude vector length {len} is not a power of two ≥ 2"
        )));
    }
    Ok(len.trailing_zeros() as usize)
}

fn check_unit_norm(amps: &[Complex64]) -> Result<()> {
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > NORM_TOLERANCE {
        return Err(Error::Encoding(format!("amplitude vector has norm {norm}")));
    }
    Ok(())
}
