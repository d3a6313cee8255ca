//! Time evolution to psi(T): Trotterized gate evolution for the discretized
//! algorithms and fixed-step RK4 integration of the Schrodinger equation for
//! the continuous baseline.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::ising::IsingInstance;
use crate::schedule::{build_trotter_circuit, schedule_values, AnnealSchedule, PRUNE_THRESHOLD};
use crate::statevector::{apply_gate, StateVector};

/// Evolves |0...0> through the full annealing circuit gate by gate.
pub fn trotter_evolve(instance: &IsingInstance, sched: &AnnealSchedule) -> Result<StateVector> {
    let circuit = build_trotter_circuit(instance, sched)?;
    let mut state = StateVector::basis_state(instance.num_qubits(), 0)?;
    for gate in &circuit.gates {
        apply_gate(&mut state, gate)?;
    }
    Ok(state)
}

/// Same unitary as [`trotter_evolve`] with the problem block applied as one
/// fused diagonal phase per step. Used on hot paths; agrees with the gate
/// path to floating-point rounding (see the cross-check test).
pub fn trotter_evolve_fused(instance: &IsingInstance, sched: &AnnealSchedule) -> Result<StateVector> {
    let n = instance.num_qubits();
    if sched.c.len() != n {
        return Err(Error::invalid(format!(
            "schedule has {} coefficients, instance has {n} qubits",
            sched.c.len()
        )));
    }
    let energy_table = instance.energy_table();
    trotter_evolve_fused_with_table(instance, sched, &energy_table)
}

pub(crate) fn trotter_evolve_fused_with_table(
    instance: &IsingInstance,
    sched: &AnnealSchedule,
    energy_table: &[f64],
) -> Result<StateVector> {
    let n = instance.num_qubits();
    let mut state = crate::statevector::init_plus_state(n)?;
    for k in 0..sched.m {
        let t = k as f64 * sched.dt;
        let (a_t, b_t, c_t) = schedule_values(sched, t)?;
        let amps = state.amplitudes_mut();
        // Problem block: exp(-i * A * dt * E_b) per basis state.
        if a_t.abs() * sched.dt >= PRUNE_THRESHOLD {
            let phase = -a_t * sched.dt;
            for (amp, e) in amps.iter_mut().zip(energy_table) {
                *amp *= Complex64::from_polar(1.0, phase * e);
            }
        }
        // Transverse block: exp(+i * B * dt * X) on every qubit.
        let phi_x = b_t * sched.dt;
        if 2.0 * phi_x.abs() >= PRUNE_THRESHOLD {
            let (c, s) = (phi_x.cos(), phi_x.sin());
            let is = Complex64::new(0.0, s);
            for q in 0..n {
                rotate_pairs(amps, q, |p0, p1| (c * p0 + is * p1, is * p0 + c * p1));
            }
        }
        // Counterdiabatic block: exp(+i * C_i * dt * Y) on qubit i.
        for (q, &ci) in c_t.iter().enumerate() {
            let phi_y = ci * sched.dt;
            if 2.0 * phi_y.abs() >= PRUNE_THRESHOLD {
                let (c, s) = (phi_y.cos(), phi_y.sin());
                rotate_pairs(amps, q, |p0, p1| (c * p0 + s * p1, c * p1 - s * p0));
            }
        }
    }
    Ok(state)
}

#[inline]
fn rotate_pairs<F>(amps: &mut [Complex64], qubit: usize, f: F)
where
    F: Fn(Complex64, Complex64) -> (Complex64, Complex64),
{
    let mask = 1usize << qubit;
    let dim = amps.len();
    let mut base = 0usize;
    while base < dim {
        for b in base..base + mask {
            let (v0, v1) = f(amps[b], amps[b | mask]);
            amps[b] = v0;
            amps[b | mask] = v1;
        }
        base += mask << 1;
    }
}

/// H(t) |psi>, built from the schedule and the problem instance.
fn apply_hamiltonian(
    psi: &[Complex64],
    out: &mut [Complex64],
    energy_table: &[f64],
    n: usize,
    a_t: f64,
    b_t: f64,
    c_t: &[f64],
) {
    for ((o, p), e) in out.iter_mut().zip(psi).zip(energy_table) {
        *o = Complex64::new(a_t * e, 0.0) * p;
    }
    for q in 0..n {
        // Transverse and counterdiabatic terms both couple the same pair:
        // out0 += (-B + iC) psi1, out1 += (-B - iC) psi0.
        let w01 = Complex64::new(-b_t, c_t[q]);
        let w10 = Complex64::new(-b_t, -c_t[q]);
        let mask = 1usize << q;
        let dim = psi.len();
        let mut base = 0usize;
        while base < dim {
            for b in base..base + mask {
                out[b] += w01 * psi[b | mask];
                out[b | mask] += w10 * psi[b];
            }
            base += mask << 1;
        }
    }
}

/// Classic fixed-step RK4 integration of i d|psi>/dt = H(t) |psi> from
/// |+...+> over [0, T], without the final renormalization. The step count
/// is round(T / dt_int), with the step stretched so it covers [0, T] exactly.
pub fn ode_evolve_raw(
    instance: &IsingInstance,
    sched: &AnnealSchedule,
    dt_int: f64,
) -> Result<StateVector> {
    if !(dt_int > 0.0) {
        return Err(Error::invalid("integrator step must be positive"));
    }
    if dt_int > sched.dt + 1e-12 {
        return Err(Error::invalid("integrator step must not exceed the Trotter step"));
    }
    let n = instance.num_qubits();
    if sched.c.len() != n {
        return Err(Error::invalid(format!(
            "schedule has {} coefficients, instance has {n} qubits",
            sched.c.len()
        )));
    }
    let energy_table = instance.energy_table();
    let steps = ((sched.t_total / dt_int).round() as usize).max(1);
    let h = sched.t_total / steps as f64;

    let mut state = crate::statevector::init_plus_state(n)?;
    let dim = 1usize << n;
    let mut k1 = vec![Complex64::new(0.0, 0.0); dim];
    let mut k2 = k1.clone();
    let mut k3 = k1.clone();
    let mut k4 = k1.clone();
    let mut scratch = k1.clone();

    let minus_i = Complex64::new(0.0, -1.0);
    for step in 0..steps {
        let t0 = step as f64 * h;
        let tm = (t0 + h / 2.0).min(sched.t_total);
        let t1 = (t0 + h).min(sched.t_total);
        let (a0, b0, c0) = schedule_values(sched, t0)?;
        let (am, bm, cm) = schedule_values(sched, tm)?;
        let (a1, b1, c1) = schedule_values(sched, t1)?;
        let psi = state.amplitudes_mut();

        apply_hamiltonian(psi, &mut k1, &energy_table, n, a0, b0, &c0);
        for b in 0..dim {
            k1[b] *= minus_i;
            scratch[b] = psi[b] + 0.5 * h * k1[b];
        }
        apply_hamiltonian(&scratch, &mut k2, &energy_table, n, am, bm, &cm);
        for b in 0..dim {
            k2[b] *= minus_i;
            scratch[b] = psi[b] + 0.5 * h * k2[b];
        }
        apply_hamiltonian(&scratch, &mut k3, &energy_table, n, am, bm, &cm);
        for b in 0..dim {
            k3[b] *= minus_i;
            scratch[b] = psi[b] + h * k3[b];
        }
        apply_hamiltonian(&scratch, &mut k4, &energy_table, n, a1, b1, &c1);
        for b in 0..dim {
            k4[b] *= minus_i;
            psi[b] += h / 6.0 * (k1[b] + 2.0 * k2[b] + 2.0 * k3[b] + k4[b]);
        }
    }
    Ok(state)
}

/// [`ode_evolve_raw`] followed by a single renormalization at the final time.
pub fn ode_evolve(
    instance: &IsingInstance,
    sched: &AnnealSchedule,
    dt_int: f64,
) -> Result<StateVector> {
    let mut state = ode_evolve_raw(instance, sched, dt_int)?;
    state.renormalize();
    Ok(state)
}
