//! Annealing schedules and construction of the Trotterized circuit.
//!
//! The schedule is A(t) = a*t/T, B(t) = b*(1 - t/T), C_i(t) = c_i*sin^2(pi*t/T).
//! Each Trotter step evaluates the schedule at the left endpoint t_k = k*dt
//! and applies the problem block (ZZ and Z rotations), then the transverse
//! block (X rotations), then the counterdiabatic block (Y rotations).

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ising::IsingInstance;
use crate::statevector::Gate;

/// Rotations with |angle| below this are dropped from the circuit.
pub const PRUNE_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct AnnealSchedule {
    /// Transverse-to-problem crossover prefactor; 1 unless overridden.
    pub a: f64,
    /// Transverse-field prefactor (b_opt).
    pub b: f64,
    /// Per-qubit counterdiabatic coefficients.
    pub c: Vec<f64>,
    /// Total annealing time.
    pub t_total: f64,
    /// Trotter step.
    pub dt: f64,
    /// Trotter number, T/dt.
    pub m: usize,
}

impl AnnealSchedule {
    /// Schedule with a = 1. `t_total` must be an exact multiple of `dt`
    /// (within 1e-9) so every step has a well-defined time argument.
    pub fn new(b: f64, c: Vec<f64>, t_total: f64, dt: f64) -> Result<Self> {
        Self::with_a(1.0, b, c, t_total, dt)
    }

    pub fn with_a(a: f64, b: f64, c: Vec<f64>, t_total: f64, dt: f64) -> Result<Self> {
        if !(t_total > 0.0) {
            return Err(Error::invalid("annealing time must be positive"));
        }
        if !(dt > 0.0) {
            return Err(Error::invalid("Trotter step must be positive"));
        }
        let m = (t_total / dt).round();
        if m < 1.0 || (m * dt - t_total).abs() > 1e-9 {
            return Err(Error::invalid(format!(
                "T={t_total} is not an exact multiple of dt={dt}"
            )));
        }
        if c.iter().any(|v| !v.is_finite()) || !a.is_finite() || !b.is_finite() {
            return Err(Error::invalid("schedule parameters must be finite"));
        }
        Ok(AnnealSchedule {
            a,
            b,
            c,
            t_total,
            dt,
            m: m as usize,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.c.len()
    }

    /// Same schedule with the counterdiabatic coefficients replaced.
    pub fn with_c(&self, c: Vec<f64>) -> AnnealSchedule {
        AnnealSchedule { c, ..self.clone() }
    }
}

/// (A(t), B(t), C(t)) at time `t` in [0, T].
pub fn schedule_values(sched: &AnnealSchedule, t: f64) -> Result<(f64, f64, Vec<f64>)> {
    if !(0.0..=sched.t_total).contains(&t) {
        return Err(Error::invalid(format!(
            "t={t} outside [0, {}]",
            sched.t_total
        )));
    }
    let frac = t / sched.t_total;
    let envelope = (std::f64::consts::PI * frac).sin().powi(2);
    Ok((
        sched.a * frac,
        sched.b * (1.0 - frac),
        sched.c.iter().map(|ci| ci * envelope).collect(),
    ))
}

/// An ordered gate list with per-step boundaries for inspection.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    pub n: usize,
    pub gates: Vec<Gate>,
    /// `step_boundaries[k]` is the gate index where Trotter step k begins
    /// (after the Hadamard prefix).
    pub step_boundaries: Vec<usize>,
}

impl Circuit {
    pub fn gate_count(&self) -> usize {
        self.gates.len()
    }
}

/// Builds the annealing circuit: Hadamards, then M Trotter steps of
/// problem, transverse, and counterdiabatic rotations. Near-zero rotations
/// are pruned; a pruned ZZ rotation drops its surrounding CX pair as well.
pub fn build_trotter_circuit(instance: &IsingInstance, sched: &AnnealSchedule) -> Result<Circuit> {
    let n = instance.num_qubits();
    if sched.c.len() != n {
        return Err(Error::invalid(format!(
            "schedule has {} coefficients, instance has {n} qubits",
            sched.c.len()
        )));
    }
    let mut gates: Vec<Gate> = (0..n).map(|q| Gate::H { target: q }).collect();
    let mut step_boundaries = Vec::with_capacity(sched.m);
    for k in 0..sched.m {
        step_boundaries.push(gates.len());
        let t = k as f64 * sched.dt;
        let (a_t, b_t, c_t) = schedule_values(sched, t)?;
        // Problem block.
        for &(i, j, jij) in instance.couplings() {
            let angle = -2.0 * a_t * jij * sched.dt;
            if angle.abs() >= PRUNE_THRESHOLD {
                gates.push(Gate::CX { control: i, target: j });
                gates.push(Gate::RZ { target: j, angle });
                gates.push(Gate::CX { control: i, target: j });
            }
        }
        for (i, &hi) in instance.fields().iter().enumerate() {
            let angle = -2.0 * a_t * hi * sched.dt;
            if angle.abs() >= PRUNE_THRESHOLD {
                gates.push(Gate::RZ { target: i, angle });
            }
        }
        // Transverse block.
        let x_angle = -2.0 * b_t * sched.dt;
        if x_angle.abs() >= PRUNE_THRESHOLD {
            for q in 0..n {
                gates.push(Gate::RX { target: q, angle: x_angle });
            }
        }
        // Counterdiabatic block.
        for (i, &ci) in c_t.iter().enumerate() {
            let angle = -2.0 * ci * sched.dt;
            if angle.abs() >= PRUNE_THRESHOLD {
                gates.push(Gate::RY { target: i, angle });
            }
        }
    }
    Ok(Circuit {
        n,
        gates,
        step_boundaries,
    })
}

/// Deterministic OpenQASM 3-style text for `circuit`.
pub fn export_openqasm(circuit: &Circuit) -> String {
    let mut out = String::from("OPENQASM 3.0;\n");
    out.push_str(&format!("qubit[{}] q;\n", circuit.n));
    for gate in &circuit.gates {
        match *gate {
            Gate::H { target } => out.push_str(&format!("h q[{target}];\n")),
            Gate::RX { target, angle } => out.push_str(&format!("rx({angle}) q[{target}];\n")),
            Gate::RY { target, angle } => out.push_str(&format!("ry({angle}) q[{target}];\n")),
            Gate::RZ { target, angle } => out.push_str(&format!("rz({angle}) q[{target}];\n")),
            Gate::CX { control, target } => {
                out.push_str(&format!("cx q[{control}], q[{target}];\n"))
            }
        }
    }
    out
}

/// On-disk schedule shape used by the CLI.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScheduleFile {
    #[serde(default = "default_a")]
    a: f64,
    b: f64,
    c: Vec<f64>,
    #[serde(rename = "T")]
    t_total: f64,
    dt: f64,
}

fn default_a() -> f64 {
    1.0
}

pub fn read_schedule(path: &Path) -> Result<AnnealSchedule> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let file: ScheduleFile = serde_json::from_str(&text).map_err(|e| Error::Format {
        path: path.display().to_string(),
        source: e,
    })?;
    AnnealSchedule::with_a(file.a, file.b, file.c, file.t_total, file.dt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn sched2(b: f64, c: [f64; 2]) -> AnnealSchedule {
        AnnealSchedule::new(b, c.to_vec(), 1.0, 0.1).unwrap()
    }

    #[test]
    fn trotter_number_from_t_and_dt() {
        assert_eq!(sched2(1.0, [0.0, 0.0]).m, 10);
        assert!(AnnealSchedule::new(1.0, vec![0.0], 1.0, 0.3).is_err());
    }

    #[test]
    fn schedule_boundary_values() {
        let s = sched2(0.7, [1.5, -1.5]);
        let (a0, b0, c0) = schedule_values(&s, 0.0).unwrap();
        assert_eq!((a0, b0), (0.0, 0.7));
        assert!(c0.iter().all(|&v| v == 0.0));
        let (at, bt, ct) = schedule_values(&s, 1.0).unwrap();
        assert_abs_diff_eq!(at, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(bt, 0.0, epsilon = 1e-15);
        for v in ct {
            assert_abs_diff_eq!(v, 0.0, epsilon = 1e-12);
        }
        let (ah, bh, ch) = schedule_values(&s, 0.5).unwrap();
        assert_abs_diff_eq!(ah, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(bh, 0.35, epsilon = 1e-15);
        assert_abs_diff_eq!(ch[0], 1.5, epsilon = 1e-12); // sin^2(pi/2) = 1
        assert!(schedule_values(&s, -0.1).is_err());
        assert!(schedule_values(&s, 1.1).is_err());
    }

    #[test]
    fn two_qubit_step_gate_counts() {
        // 1 coupling + 2 fields: per active step 2 CX + 3 RZ + 2 RX + 2 RY = 9.
        let inst = IsingInstance::new(2, vec![(0, 1, 0.4)], vec![0.2, -0.3]).unwrap();
        let circuit = build_trotter_circuit(&inst, &sched2(0.7, [1.5, -1.5])).unwrap();
        assert_eq!(circuit.step_boundaries.len(), 10);
        // Step k=0 has A(0) = 0 and C(0) = 0, so only the two RX gates remain.
        let step0 = &circuit.gates[circuit.step_boundaries[0]..circuit.step_boundaries[1]];
        assert_eq!(step0.len(), 2);
        assert!(step0.iter().all(|g| matches!(g, Gate::RX { .. })));
        // Later steps carry the full 9 gates.
        let step5 = &circuit.gates[circuit.step_boundaries[5]..circuit.step_boundaries[6]];
        assert_eq!(step5.len(), 9);
    }

    #[test]
    fn zero_cd_circuit_has_no_ry() {
        let inst = IsingInstance::new(2, vec![(0, 1, 0.4)], vec![0.2, -0.3]).unwrap();
        let circuit = build_trotter_circuit(&inst, &sched2(0.7, [0.0, 0.0])).unwrap();
        assert!(!circuit.gates.iter().any(|g| matches!(g, Gate::RY { .. })));
    }

    #[test]
    fn rebuild_yields_identical_gate_list() {
        let inst = IsingInstance::new(3, vec![(0, 1, 0.4), (1, 2, -0.2)], vec![0.1, 0.0, -0.5])
            .unwrap();
        let s = AnnealSchedule::new(0.6, vec![1.0, -1.0, 0.5], 2.0, 0.1).unwrap();
        let a = build_trotter_circuit(&inst, &s).unwrap();
        let b = build_trotter_circuit(&inst, &s).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn qasm_empty_circuit() {
        let circuit = Circuit {
            n: 1,
            gates: vec![],
            step_boundaries: vec![],
        };
        assert_eq!(export_openqasm(&circuit), "OPENQASM 3.0;\nqubit[1] q;\n");
    }

    #[test]
    fn qasm_single_rotation() {
        let circuit = Circuit {
            n: 1,
            gates: vec![Gate::RX { target: 0, angle: 0.5 }],
            step_boundaries: vec![],
        };
        let text = export_openqasm(&circuit);
        assert_eq!(text.lines().filter(|l| *l == "rx(0.5) q[0];").count(), 1);
    }

    #[test]
    fn schedule_file_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sched.json");
        std::fs::write(&path, r#"{"b": 0.7, "c": [1.5, -1.5], "T": 1.0, "dt": 0.1}"#).unwrap();
        let s = read_schedule(&path).unwrap();
        assert_eq!(s.a, 1.0);
        assert_eq!(s.m, 10);
        assert_eq!(s.c, vec![1.5, -1.5]);
    }
}
