//! Dense statevector simulation of the gate set used by the annealing
//! circuit, plus energy expectation and Born-rule sampling.
//!
//! Rotation conventions: RX(t) = exp(-i t X/2), RY(t) = exp(-i t Y/2),
//! RZ(t) = exp(-i t Z/2); CX is the standard controlled-NOT. Basis index
//! `b` stores qubit `i` in bit `i` (qubit 0 = least significant bit).

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::ising::{IsingInstance, MAX_QUBITS};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gate {
    H { target: usize },
    RX { target: usize, angle: f64 },
    RY { target: usize, angle: f64 },
    RZ { target: usize, angle: f64 },
    CX { control: usize, target: usize },
}

impl Gate {
    pub fn target(&self) -> usize {
        match *self {
            Gate::H { target }
            | Gate::RX { target, .. }
            | Gate::RY { target, .. }
            | Gate::RZ { target, .. }
            | Gate::CX { target, .. } => target,
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        let check = |q: usize| {
            if q < n {
                Ok(())
            } else {
                Err(Error::invalid(format!("qubit {q} out of range for n={n}")))
            }
        };
        match *self {
            Gate::H { target } => check(target),
            Gate::RX { target, angle } | Gate::RY { target, angle } | Gate::RZ { target, angle } => {
                if !angle.is_finite() {
                    return Err(Error::invalid("rotation angle must be finite"));
                }
                check(target)
            }
            Gate::CX { control, target } => {
                check(control)?;
                check(target)?;
                if control == target {
                    return Err(Error::invalid("CX control and target must differ"));
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn probability(&self, basis_index: usize) -> f64 {
        self.amplitudes[basis_index].norm_sqr()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let dim = amplitudes.len();
        if dim < 2 || !dim.is_power_of_two() {
            return Err(Error::invalid("amplitude count must be a power of two >= 2"));
        }
        Ok(StateVector {
            num_qubits: dim.trailing_zeros() as usize,
            amplitudes,
        })
    }

    /// Basis state |b> on `n` qubits.
    pub fn basis_state(n: usize, basis_index: usize) -> Result<Self> {
        check_capacity(n)?;
        let dim = 1usize << n;
        if basis_index >= dim {
            return Err(Error::invalid(format!("basis index {basis_index} out of range")));
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); dim];
        amplitudes[basis_index] = Complex64::new(1.0, 0.0);
        Ok(StateVector {
            num_qubits: n,
            amplitudes,
        })
    }

    pub(crate) fn renormalize(&mut self) {
        let norm = self.norm_sqr().sqrt();
        if norm > 0.0 {
            let inv = 1.0 / norm;
            for a in &mut self.amplitudes {
                *a *= inv;
            }
        }
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amplitudes
    }

    /// Index of the most probable basis state (smallest index on exact ties).
    pub fn modal_basis_index(&self) -> usize {
        let mut best = 0;
        let mut best_p = self.amplitudes[0].norm_sqr();
        for (b, a) in self.amplitudes.iter().enumerate().skip(1) {
            let p = a.norm_sqr();
            if p > best_p {
                best = b;
                best_p = p;
            }
        }
        best
    }
}

fn check_capacity(n: usize) -> Result<()> {
    if n < 1 {
        return Err(Error::invalid("state needs at least one qubit"));
    }
    if n > MAX_QUBITS {
        return Err(Error::capacity(format!(
            "{n} qubits exceeds the {MAX_QUBITS}-qubit cap"
        )));
    }
    Ok(())
}

/// Uniform superposition |+...+>, the result of Hadamards on |0...0>.
pub fn init_plus_state(n: usize) -> Result<StateVector> {
    check_capacity(n)?;
    let dim = 1usize << n;
    let amp = Complex64::new((dim as f64).sqrt().recip(), 0.0);
    Ok(StateVector {
        num_qubits: n,
        amplitudes: vec![amp; dim],
    })
}

/// Applies `gate` to `state` in place.
pub fn apply_gate(state: &mut StateVector, gate: &Gate) -> Result<()> {
    gate.validate(state.num_qubits)?;
    let amps = &mut state.amplitudes;
    match *gate {
        Gate::H { target } => {
            let f = std::f64::consts::FRAC_1_SQRT_2;
            for_each_pair(amps, target, |a0, a1| {
                let (p0, p1) = (*a0, *a1);
                *a0 = f * (p0 + p1);
                *a1 = f * (p0 - p1);
            });
        }
        Gate::RX { target, angle } => {
            let (c, s) = ((angle / 2.0).cos(), (angle / 2.0).sin());
            let is = Complex64::new(0.0, -s);
            for_each_pair(amps, target, |a0, a1| {
                let (p0, p1) = (*a0, *a1);
                *a0 = c * p0 + is * p1;
                *a1 = is * p0 + c * p1;
            });
        }
        Gate::RY { target, angle } => {
            let (c, s) = ((angle / 2.0).cos(), (angle / 2.0).sin());
            for_each_pair(amps, target, |a0, a1| {
                let (p0, p1) = (*a0, *a1);
                *a0 = c * p0 - s * p1;
                *a1 = s * p0 + c * p1;
            });
        }
        Gate::RZ { target, angle } => {
            let phase0 = Complex64::from_polar(1.0, -angle / 2.0);
            let phase1 = Complex64::from_polar(1.0, angle / 2.0);
            for_each_pair(amps, target, |a0, a1| {
                *a0 *= phase0;
                *a1 *= phase1;
            });
        }
        Gate::CX { control, target } => {
            let cmask = 1usize << control;
            let tmask = 1usize << target;
            for b in 0..amps.len() {
                if b & cmask != 0 && b & tmask == 0 {
                    amps.swap(b, b | tmask);
                }
            }
        }
    }
    Ok(())
}

/// Visits each (bit=0, bit=1) amplitude pair for `target`, in index order.
fn for_each_pair<F>(amps: &mut [Complex64], target: usize, mut f: F)
where
    F: FnMut(&mut Complex64, &mut Complex64),
{
    let mask = 1usize << target;
    for b in 0..amps.len() {
        if b & mask == 0 {
            let (lo, hi) = amps.split_at_mut(b | mask);
            f(&mut lo[b], &mut hi[0]);
        }
    }
}

/// <psi| H^z |psi>: diagonal expectation of the problem Hamiltonian.
pub fn expectation_problem_energy(state: &StateVector, instance: &IsingInstance) -> Result<f64> {
    if instance.num_qubits() != state.num_qubits {
        return Err(Error::invalid(format!(
            "instance has {} qubits, state has {}",
            instance.num_qubits(),
            state.num_qubits
        )));
    }
    Ok(state
        .amplitudes
        .iter()
        .enumerate()
        .map(|(b, a)| a.norm_sqr() * instance.basis_energy(b))
        .sum())
}

/// Same expectation against a precomputed `energy_table`.
pub fn expectation_with_table(state: &StateVector, energy_table: &[f64]) -> Result<f64> {
    if energy_table.len() != state.amplitudes.len() {
        return Err(Error::invalid("energy table length mismatch"));
    }
    Ok(state
        .amplitudes
        .iter()
        .zip(energy_table)
        .map(|(a, e)| a.norm_sqr() * e)
        .sum())
}

/// `shots` i.i.d. Born-rule draws; deterministic given the RNG stream.
pub fn sample_bitstrings<R: Rng>(
    state: &StateVector,
    shots: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    if shots == 0 {
        return Err(Error::invalid("shots must be at least 1"));
    }
    let mut cdf = Vec::with_capacity(state.amplitudes.len());
    let mut acc = 0.0;
    for a in &state.amplitudes {
        acc += a.norm_sqr();
        cdf.push(acc);
    }
    let total = acc;
    let mut samples = Vec::with_capacity(shots);
    for _ in 0..shots {
        let u: f64 = rng.gen::<f64>() * total;
        let idx = cdf.partition_point(|&c| c <= u);
        samples.push(idx.min(cdf.len() - 1));
    }
    Ok(samples)
}

/// |<a|b>|^2.
pub fn fidelity(a: &StateVector, b: &StateVector) -> Result<f64> {
    if a.num_qubits != b.num_qubits {
        return Err(Error::invalid("qubit count mismatch"));
    }
    let overlap: Complex64 = a
        .amplitudes
        .iter()
        .zip(&b.amplitudes)
        .map(|(x, y)| x.conj() * y)
        .sum();
    Ok(overlap.norm_sqr())
}
