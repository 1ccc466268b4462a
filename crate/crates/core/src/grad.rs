//! Gradients of raw circuit readouts with respect to one weight bank.
//!
//! Every tunable gate is an RX rotation, so the two-point parameter-shift
//! rule with shift π/2 is exact. [`finite_diff_jacobian`] is the independent
//! central-difference oracle used to check it.
//!
//! Only raw readouts are differentiated here. Chain rules through output
//! normalization and losses live in [`crate::gan`].

use std::collections::HashSet;
use std::f64::consts::FRAC_PI_2;

use crate::circuit::{run_with, Bank, BankSet, CircuitSegment, ParamRef};
use crate::error::{Error, Result};
use crate::statevector::QuantumState;

/// What is read off the final state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Readout {
    ExpectationZ(usize),
    MarginalProbs(usize),
}

impl Readout {
    pub fn evaluate(&self, state: &QuantumState) -> Result<Vec<f64>> {
        match *self {
            Readout::ExpectationZ(q) => Ok(vec![state.expectation_z(q)?]),
            Readout::MarginalProbs(k) => state.marginal_probabilities(k),
        }
    }
}

/// `∂readout/∂θ_j` for every parameter `j` of one bank, scalar readouts only.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientVector {
    pub bank: Bank,
    pub values: Vec<f64>,
}

/// `rows[j][o] = ∂readout_o/∂θ_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct Jacobian {
    pub bank: Bank,
    pub rows: Vec<Vec<f64>>,
}

impl Jacobian {
    /// Gradient of readout entry `output`.
    pub fn column(&self, output: usize) -> GradientVector {
        GradientVector {
            bank: self.bank,
            values: self.rows.iter().map(|r| r[output]).collect(),
        }
    }
}

/// Evaluates `readout` after running `pipeline` from `|0…0⟩`, with one
/// parameter optionally replaced.
fn evaluate(
    pipeline: &[&CircuitSegment],
    banks: &BankSet,
    readout: Readout,
    n_qubits: usize,
    shifted: Option<(ParamRef, f64)>,
) -> Result<Vec<f64>> {
    let resolve = |p: ParamRef| match shifted {
        Some((target, value)) if target == p => Some(value),
        _ => banks.value(p),
    };
    let state = run_with(pipeline, resolve, QuantumState::zero(n_qubits)?)?;
    readout.evaluate(&state)
}

fn pipeline_width(pipeline: &[&CircuitSegment]) -> Result<usize> {
    pipeline
        .first()
        .map(|s| s.n_qubits())
        .ok_or_else(|| Error::Config("cannot differentiate an empty pipeline".into()))
}

fn active_values(banks: &BankSet, active: Bank) -> Result<&[f64]> {
    if active == Bank::Injection {
        return Err(Error::Config("the injection bank is static and has no gradient".into()));
    }
    banks
        .get(active)
        .map(|b| b.values.as_slice())
        .ok_or_else(|| Error::Config(format!("no {active} bank supplied")))
}

fn check_unique_refs(pipeline: &[&CircuitSegment], active: Bank) -> Result<()> {
    let mut seen = HashSet::new();
    for p in pipeline.iter().flat_map(|s| s.param_refs()) {
        if p.bank == active && !seen.insert(p) {
            return Err(Error::UnsupportedCircuit(format!(
                "parameter {}[{}] drives more than one gate",
                p.bank, p.index
            )));
        }
    }
    Ok(())
}

/// Exact parameter-shift Jacobian of `readout` with respect to `active`.
///
/// `g_j = (f(θ_j + π/2) − f(θ_j − π/2)) / 2`; the supplied banks are never
/// modified.
pub fn param_shift_jacobian(
    pipeline: &[&CircuitSegment],
    banks: &BankSet,
    active: Bank,
    readout: Readout,
) -> Result<Jacobian> {
    let n_qubits = pipeline_width(pipeline)?;
    let values = active_values(banks, active)?;
    check_unique_refs(pipeline, active)?;
    let rows = values
        .iter()
        .enumerate()
        .map(|(j, &theta)| {
            let p = ParamRef::new(active, j);
            let plus = evaluate(pipeline, banks, readout, n_qubits, Some((p, theta + FRAC_PI_2)))?;
            let minus = evaluate(pipeline, banks, readout, n_qubits, Some((p, theta - FRAC_PI_2)))?;
            Ok(plus.iter().zip(&minus).map(|(a, b)| (a - b) / 2.0).collect())
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    Ok(Jacobian { bank: active, rows })
}

/// Parameter-shift gradient of a scalar readout.
pub fn param_shift_gradient(
    pipeline: &[&CircuitSegment],
    banks: &BankSet,
    active: Bank,
    readout: Readout,
) -> Result<GradientVector> {
    scalar_only(readout)?;
    Ok(param_shift_jacobian(pipeline, banks, active, readout)?.column(0))
}

/// Central differences `(f(θ+h) − f(θ−h)) / 2h` per active parameter.
pub fn finite_diff_jacobian(
    pipeline: &[&CircuitSegment],
    banks: &BankSet,
    active: Bank,
    readout: Readout,
    h: f64,
) -> Result<Jacobian> {
    if !(h > 0.0) {
        return Err(Error::Config(format!("finite-difference step {h} must be positive")));
    }
    let n_qubits = pipeline_width(pipeline)?;
    let values = active_values(banks, active)?;
    let rows = values
        .iter()
        .enumerate()
        .map(|(j, &theta)| {
            let p = ParamRef::new(active, j);
            let plus = evaluate(pipeline, banks, readout, n_qubits, Some((p, theta + h)))?;
            let minus = evaluate(pipeline, banks, readout, n_qubits, Some((p, theta - h)))?;
            Ok(plus.iter().zip(&minus).map(|(a, b)| (a - b) / (2.0 * h)).collect())
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    Ok(Jacobian { bank: active, rows })
}

pub fn finite_diff_gradient(
    pipeline: &[&CircuitSegment],
    banks: &BankSet,
    active: Bank,
    readout: Readout,
    h: f64,
) -> Result<GradientVector> {
    scalar_only(readout)?;
    Ok(finite_diff_jacobian(pipeline, banks, active, readout, h)?.column(0))
}

fn scalar_only(readout: Readout) -> Result<()> {
    match readout {
        Readout::ExpectationZ(_) => Ok(()),
        Readout::MarginalProbs(_) => Err(Error::Config(
            "marginal readouts are vector-valued; use the Jacobian form".into(),
        )),
    }
}
