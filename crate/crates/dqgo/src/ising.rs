//! Problem Hamiltonians: classical Ising energies, SK instance sampling,
//! and the exhaustive ground-state oracle.
//!
//! Spin convention: basis index `b` encodes qubit `i` in bit `i` (qubit 0 is
//! the least significant bit), and `s_i = 1 - 2*bit_i`, so |0> on a qubit is
//! spin +1.

use std::io::Write;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest system the dense solvers accept (2^24 amplitudes / configs).
pub const MAX_QUBITS: usize = 24;

/// Tolerance for counting degenerate ground states.
pub const DEGENERACY_TOL: f64 = 1e-9;

/// An Ising problem: couplings J_ij (i < j) and local fields h_i.
///
/// The classical energy of a spin configuration s is
/// `-sum_{i<j} J_ij s_i s_j - sum_i h_i s_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct IsingInstance {
    n: usize,
    /// Sorted by (i, j); every key satisfies i < j < n.
    couplings: Vec<(usize, usize, f64)>,
    fields: Vec<f64>,
    /// Seed the instance was generated from, if any.
    pub seed: Option<u64>,
}

impl IsingInstance {
    pub fn new(n: usize, mut couplings: Vec<(usize, usize, f64)>, fields: Vec<f64>) -> Result<Self> {
        if n < 1 {
            return Err(Error::invalid("instance needs at least one qubit"));
        }
        if fields.len() != n {
            return Err(Error::invalid(format!(
                "expected {n} fields, got {}",
                fields.len()
            )));
        }
        for &(i, j, v) in &couplings {
            if i >= j || j >= n {
                return Err(Error::invalid(format!(
                    "coupling ({i},{j}) violates 0 <= i < j < {n}"
                )));
            }
            if !v.is_finite() {
                return Err(Error::invalid(format!("coupling ({i},{j}) is not finite")));
            }
        }
        if fields.iter().any(|h| !h.is_finite()) {
            return Err(Error::invalid("non-finite field value"));
        }
        couplings.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        for w in couplings.windows(2) {
            if (w[0].0, w[0].1) == (w[1].0, w[1].1) {
                return Err(Error::invalid(format!(
                    "duplicate coupling ({}, {})",
                    w[0].0, w[0].1
                )));
            }
        }
        Ok(IsingInstance {
            n,
            couplings,
            fields,
            seed: None,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn couplings(&self) -> &[(usize, usize, f64)] {
        &self.couplings
    }

    pub fn fields(&self) -> &[f64] {
        &self.fields
    }

    /// Instance with every J and h multiplied by `lambda`.
    pub fn scaled(&self, lambda: f64) -> IsingInstance {
        IsingInstance {
            n: self.n,
            couplings: self
                .couplings
                .iter()
                .map(|&(i, j, v)| (i, j, v * lambda))
                .collect(),
            fields: self.fields.iter().map(|h| h * lambda).collect(),
            seed: self.seed,
        }
    }

    /// Classical energies of all 2^n basis states, indexed by basis index.
    pub fn energy_table(&self) -> Vec<f64> {
        let dim = 1usize << self.n;
        let mut table = vec![0.0; dim];
        for b in 0..dim {
            table[b] = self.basis_energy(b);
        }
        table
    }

    /// Classical energy of the configuration encoded by basis index `b`.
    pub fn basis_energy(&self, b: usize) -> f64 {
        let spin = |i: usize| 1.0 - 2.0 * ((b >> i) & 1) as f64;
        let mut e = 0.0;
        for &(i, j, v) in &self.couplings {
            e -= v * spin(i) * spin(j);
        }
        for (i, h) in self.fields.iter().enumerate() {
            e -= h * spin(i);
        }
        e
    }
}

/// A classical spin configuration, entries in {+1, -1}.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpinConfig(pub Vec<i8>);

impl SpinConfig {
    pub fn from_basis_index(b: usize, n: usize) -> Self {
        SpinConfig((0..n).map(|i| if (b >> i) & 1 == 0 { 1 } else { -1 }).collect())
    }

    pub fn to_basis_index(&self) -> usize {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &s)| s < 0)
            .map(|(i, _)| 1usize << i)
            .sum()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Global spin flip.
    pub fn flipped(&self) -> SpinConfig {
        SpinConfig(self.0.iter().map(|s| -s).collect())
    }
}

/// `-sum_{i<j} J_ij s_i s_j - sum_i h_i s_i`.
pub fn classical_energy(instance: &IsingInstance, config: &SpinConfig) -> Result<f64> {
    if config.len() != instance.n {
        return Err(Error::invalid(format!(
            "config has {} spins, instance has {}",
            config.len(),
            instance.n
        )));
    }
    if config.0.iter().any(|&s| s != 1 && s != -1) {
        return Err(Error::invalid("spin entries must be +1 or -1"));
    }
    Ok(instance.basis_energy(config.to_basis_index()))
}

/// Result of exhaustive ground-state search.
#[derive(Debug, Clone)]
pub struct GroundState {
    pub config: SpinConfig,
    pub energy: f64,
    pub degeneracy: usize,
    /// Basis indices of every configuration within `DEGENERACY_TOL` of the minimum.
    pub ground_set: Vec<usize>,
}

impl GroundState {
    pub fn contains(&self, basis_index: usize) -> bool {
        self.ground_set.contains(&basis_index)
    }
}

/// Exhaustive minimum over all 2^n configurations.
pub fn brute_force_ground_state(instance: &IsingInstance) -> Result<GroundState> {
    let n = instance.n;
    if n > MAX_QUBITS {
        return Err(Error::capacity(format!(
            "brute force over {n} qubits exceeds the {MAX_QUBITS}-qubit cap"
        )));
    }
    let dim = 1usize << n;
    let mut best = f64::INFINITY;
    let mut energies = vec![0.0; dim];
    for b in 0..dim {
        let e = instance.basis_energy(b);
        energies[b] = e;
        if e < best {
            best = e;
        }
    }
    let ground_set: Vec<usize> = (0..dim)
        .filter(|&b| energies[b] <= best + DEGENERACY_TOL)
        .collect();
    Ok(GroundState {
        config: SpinConfig::from_basis_index(ground_set[0], n),
        energy: best,
        degeneracy: ground_set.len(),
        ground_set,
    })
}

/// SK instance with local fields: J_ij and h_i i.i.d. N(0, 1/n).
///
/// The paper leaves the field variance implicit; we read "determined based on
/// the probability density function" as the same 1/n variance used for J.
pub fn sample_sk_instance<R: Rng>(n: usize, rng: &mut R) -> Result<IsingInstance> {
    if n < 1 {
        return Err(Error::invalid("instance needs at least one qubit"));
    }
    let normal = Normal::new(0.0, (1.0 / n as f64).sqrt()).expect("valid stddev");
    let mut couplings = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            couplings.push((i, j, normal.sample(rng)));
        }
    }
    let fields = (0..n).map(|_| normal.sample(rng)).collect();
    IsingInstance::new(n, couplings, fields)
}

/// Fully connected ferromagnet: J_ij = 1 for all i < j, zero field.
pub fn ferromagnetic_instance(n: usize) -> Result<IsingInstance> {
    if n < 2 {
        return Err(Error::invalid("ferromagnet needs at least two qubits"));
    }
    let mut couplings = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            couplings.push((i, j, 1.0));
        }
    }
    IsingInstance::new(n, couplings, vec![0.0; n])
}

/// On-disk instance shape; readers reject unknown keys.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceFile {
    n: usize,
    couplings: Vec<(usize, usize, f64)>,
    fields: Vec<f64>,
    seed: Option<u64>,
}

pub fn write_instance(instance: &IsingInstance, path: &Path) -> Result<()> {
    let file = InstanceFile {
        n: instance.n,
        couplings: instance.couplings.clone(),
        fields: instance.fields.clone(),
        seed: instance.seed,
    };
    let text = serde_json::to_string_pretty(&file).expect("instance serializes");
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    f.write_all(text.as_bytes())
        .map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(())
}

pub fn read_instance(path: &Path) -> Result<IsingInstance> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let file: InstanceFile = serde_json::from_str(&text).map_err(|e| Error::Format {
        path: path.display().to_string(),
        source: e,
    })?;
    let mut instance = IsingInstance::new(file.n, file.couplings, file.fields)?;
    instance.seed = file.seed;
    Ok(instance)
}
