use std::f64::consts::{FRAC_1_SQRT_2, PI, TAU};

use num_complex::Complex64;
use proptest::prelude::*;

use scq_core::coupling::{JCParams, TwoQubitParams};
use scq_core::gates::*;
use scq_core::ghz_to_angular;
use scq_core::qcore::{
    cnot, cz, eigh, pauli_x, pauli_y, pauli_z, propagator, rotation_operator, tensor, Axis, Operator,
};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// The iSWAP matrix written out entry by entry.
fn iswap_literal() -> Operator {
    let mi = c(0.0, -1.0);
    let o = c(1.0, 0.0);
    let z = c(0.0, 0.0);
    Operator::from_complex(4, &[o, z, z, z, z, z, mi, z, z, mi, z, z, z, z, z, o])
}

#[test]
fn iswap_at_quarter_period_matches_matrix() {
    // J tau = pi / 2 with J in rad/ns.
    let j = 0.02;
    let tau = PI / 2.0 / ghz_to_angular(j);
    assert!(iswap(j, tau).max_diff(&iswap_literal()) < 1e-12);
    assert!(iswap_numeric(j, tau).unwrap().max_diff(&iswap_literal()) < 1e-12);
    assert!(iswap_target().max_diff(&iswap_literal()) < 1e-15);
}

#[test]
fn iswap_closed_form_matches_exponential_everywhere() {
    for k in 0..20 {
        let tau = 3.7 * k as f64;
        let diff = iswap(0.013, tau).max_diff(&iswap_numeric(0.013, tau).unwrap());
        assert!(diff < 1e-12, "tau {tau}: {diff}");
    }
}

#[test]
fn iswap_squared_is_minus_one_on_exchange_block() {
    let sq = &iswap_target() * &iswap_target();
    let expected = Operator::diagonal(&[c(1.0, 0.0), c(-1.0, 0.0), c(-1.0, 0.0), c(1.0, 0.0)]);
    assert!(sq.max_diff(&expected) < 1e-14);
}

#[test]
fn parametric_iswap_needs_jm_tau_pi() {
    let j_m = 0.03;
    let tau = PI / ghz_to_angular(j_m);
    assert!(parametric_iswap(j_m, tau).max_diff(&iswap_literal()) < 1e-12);
}

#[test]
fn bswap_swaps_00_and_11() {
    let j_m = 0.03;
    let tau = PI / ghz_to_angular(j_m);
    let u = bswap(j_m, tau);
    assert!((u.get(0, 3) - c(0.0, -1.0)).norm() < 1e-12);
    assert!((u.get(1, 1) - c(1.0, 0.0)).norm() < 1e-12);
    for t in [0.0, 5.0, 17.3] {
        assert!(u_eq(&bswap(j_m, t), &bswap_numeric(j_m, t).unwrap(), 1e-12));
    }
}

fn u_eq(a: &Operator, b: &Operator, tol: f64) -> bool {
    a.max_diff(b) < tol
}

#[test]
fn coherent_exchange_cz_flips_sign_of_11() {
    let j = 0.01;
    let tau = PI / (2.0_f64.sqrt() * ghz_to_angular(j));
    let u = cz_coherent_exchange(j, tau);
    assert!((u.get(3, 3) - c(-1.0, 0.0)).norm() < 1e-10);
    assert!(computational_block(&u).max_diff(&cz()) < 1e-10);
    // Parametric version at twice the modulation amplitude.
    assert!(parametric_cz(2.0 * j, tau).max_diff(&u) < 1e-12);
}

#[test]
fn coherent_exchange_cz_against_transmon_hamiltonian() {
    // Resonant |11>-|02> exchange in the interaction frame of two transmons.
    let (w1, alpha) = (5.0, -0.3);
    let w2 = w1 - alpha;
    let j = 0.01;
    let p = TwoQubitParams::transmons(w1, w2, j, alpha, alpha);
    let h = scq_core::coupling::two_qubit_hamiltonian(&p, true).unwrap();
    // Keep only the |11>, |02> pair: the resonant exchange.
    let (i11, i02) = (transmon_index(1, 1), transmon_index(0, 2));
    let sub = Operator::from_fn(2, |r, col| {
        let idx = [i11, i02];
        h.get(idx[r], idx[col])
    });
    let shifted = &sub - &Operator::identity(2).scale_real(sub.get(0, 0).re);
    let tau = PI / (2.0_f64.sqrt() * ghz_to_angular(j));
    let u = propagator(&shifted, tau).unwrap();
    let u6 = cz_coherent_exchange(j, tau);
    assert!((u.get(0, 0) - u6.get(3, 3)).norm() < 1e-10);
    assert!((u.get(1, 0) - u6.get(4, 3)).norm() < 1e-10);
}

#[test]
fn exchange_matrix_elements_follow_ladder() {
    let g = exchange_coupling(4).unwrap();
    let idx = |a: usize, b: usize| 4 * a + b;
    assert!((g.get(idx(0, 2), idx(1, 1)).re - 2.0_f64.sqrt()).abs() < 1e-14);
    assert!((g.get(idx(0, 3), idx(1, 2)).re - 3.0_f64.sqrt()).abs() < 1e-14);
    assert!((g.get(idx(1, 3), idx(2, 2)).re - 6.0_f64.sqrt()).abs() < 1e-14);
    assert!((g.get(idx(0, 1), idx(1, 0)).re - 1.0).abs() < 1e-14);
}

#[test]
fn cnot_identities_up_to_global_phase() {
    assert!(cnot_from_cz().max_diff(&cnot()) < 1e-10);
    assert!(cnot_from_cr().phase_distance(&cnot()) < 1e-10);
}

#[test]
fn cr_half_pi_matches_printed_matrix() {
    let s = FRAC_1_SQRT_2;
    let (a, b) = (c(s, 0.0), c(0.0, -s));
    let (bb, z) = (c(0.0, s), c(0.0, 0.0));
    let printed = Operator::from_complex(4, &[a, b, z, z, b, a, z, z, z, z, a, bb, z, z, bb, a]);
    assert!(cr_matrix(PI / 2.0).max_diff(&printed) < 1e-14);
    let zx = tensor(&[&pauli_z(), &pauli_x()]).unwrap();
    let theta = 0.83;
    let gen = propagator(&zx.scale_real(0.5), theta).unwrap();
    assert!(cr_matrix(theta).max_diff(&gen) < 1e-12);
}

fn cr_params(alpha1: Option<f64>) -> CRParams {
    let mut q = TwoQubitParams::qubits(5.0, 5.2, 0.005);
    q.alpha1 = alpha1;
    CRParams { qubits: q, epsilon_q: 0.05 }
}

#[test]
fn cr_three_level_limits() {
    let ideal = cr_params(None);
    let omega = ideal.omega_cr();
    assert!((omega - 0.05 * 0.005 / -0.2).abs() < 1e-15);

    let big = cr_effective_3level(&cr_params(Some(1e12))).unwrap();
    assert!(big.ix.abs() < 1e-9 * omega.abs());
    assert!((big.zx - omega).abs() < 1e-9 * omega.abs());

    let small = cr_effective_3level(&cr_params(Some(1e-13))).unwrap();
    assert!(small.zx.abs() < 1e-9 * omega.abs());
    assert!((small.ix - omega).abs() < 1e-9 * omega.abs());

    // Gate level: infinite anharmonicity reproduces the ideal CR(theta).
    let tau = PI / 2.0 / ghz_to_angular(omega).abs();
    let report = cr_gate(&cr_params(Some(1e12)), tau).unwrap();
    assert!(report.infidelity < 1e-9);
    assert!(report.propagator.max_diff(&cr_gate(&ideal, tau).unwrap().propagator) < 1e-9);
    // Vanishing anharmonicity leaves only a target rotation I (x) R_x.
    let pure_ix = cr_gate(&cr_params(Some(1e-13)), tau).unwrap();
    let rx = tensor(&[&Operator::identity(2), &rotation_operator(Axis::X, ghz_to_angular(omega) * tau)]).unwrap();
    assert!(pure_ix.propagator.max_diff(&rx) < 1e-9);
}

#[test]
fn cr_rejects_pole_and_weak_detuning() {
    assert!(matches!(cr_effective_3level(&cr_params(Some(0.2))), Err(GateError::Pole(_))));
    let mut p = cr_params(None);
    p.qubits.omega_q2 = 5.01;
    assert!(matches!(cr_gate(&p, 1.0), Err(GateError::NotDispersive { .. })));
}

#[test]
fn realistic_cr_has_coherent_error() {
    let p = cr_params(Some(-0.3));
    let tau = PI / 2.0 / ghz_to_angular(p.omega_cr()).abs();
    let r = cr_gate(&p, tau).unwrap();
    assert!(r.infidelity > 1e-3);
    assert!(r.propagator.is_unitary(1e-10));
}

#[test]
fn virtual_z_turns_x_into_y() {
    let seq = [PulseRotation { theta: PI / 2.0, phase: 0.0 }];
    let shifted = sequence_propagator(&virtual_z(&seq, PI / 2.0));
    assert!(shifted.max_diff(&rotation_operator(Axis::Y, PI / 2.0)) < 1e-14);
    // R_z(phi) R_x(theta) R_z(-phi) is the rotation at azimuth phi.
    let (theta, phi) = (1.1, 0.4);
    let conj =
        &(&rotation_operator(Axis::Z, phi) * &rotation_operator(Axis::X, theta)) * &rotation_operator(Axis::Z, -phi);
    assert!(conj.max_diff(&drive_rotation(theta, phi)) < 1e-14);
}

#[test]
fn rabi_gate_is_pi_pulse_at_half_period() {
    let omega = 0.02;
    let u = rabi_gate(omega, 0.5 / omega, Axis::X);
    assert!(u.phase_distance(&pauli_x()) < 1e-12);
    let y = rabi_gate(omega, 0.5 / omega, Axis::Y);
    assert!(y.phase_distance(&pauli_y()) < 1e-12);
}

#[test]
fn driven_frame_rabi_frequency() {
    let p = JCParams { n_max: 6, ..JCParams::new(5.0, 6.0, 0.1) };
    let omega_r = rabi_frequency(0.05, 0.1, 1.0);
    assert!((omega_r + 0.02).abs() < 1e-15);
    let drive = DriveParams { amplitude: 0.05, frequency: 5.0 - 0.01, phase: 0.0, duration: 25.0 };
    let frame = driven_qubit_frame(&p, &drive).unwrap();
    assert!((frame.omega_rabi - omega_r).abs() < 1e-15);
    assert!((frame.resonant_frequency - 4.99).abs() < 1e-12);
    assert!(frame.generator.is_hermitian(1e-12));
    // Excited-state population over time; first maximum sets the pi time.
    let levels = p.n_max + 1;
    let mut psi = vec![c(0.0, 0.0); 2 * levels];
    psi[0] = c(1.0, 0.0);
    let psi = scq_core::qcore::CVector::from_vec(psi);
    let dt = 0.05;
    let step = propagator(&frame.generator, dt).unwrap();
    let mut state = psi;
    let mut best = (0.0, 0.0);
    for k in 1..=1000 {
        state = step.apply(&state);
        let pe: f64 = (levels..2 * levels).map(|i| state[i].norm_sqr()).sum();
        if pe > best.1 {
            best = (k as f64 * dt, pe);
        }
    }
    let t_pi = 0.5 / omega_r.abs();
    assert!((best.0 - t_pi).abs() / t_pi < 0.01, "pi time {} vs {t_pi}", best.0);
    assert!(best.1 > 0.99);
}

#[test]
fn driven_frame_requires_dispersive() {
    let p = JCParams::new(5.0, 5.5, 0.1);
    let d = DriveParams { amplitude: 0.05, frequency: 5.0, phase: 0.0, duration: 10.0 };
    assert!(matches!(driven_qubit_frame(&p, &d), Err(GateError::NotDispersive { .. })));
}

#[test]
fn adiabatic_phase_from_schedule() {
    let tau = 100.0;
    let zeta = move |t: f64| 0.5 / tau * (1.0 - (TAU * t / tau).cos());
    let r = cz_adiabatic(zeta, tau, 200).unwrap();
    assert!(r.infidelity < 1e-12);
    assert!(matches!(cz_adiabatic(|_| 0.001, tau, 200), Err(GateError::Calibration { .. })));
}

fn model() -> TwoTransmonModel {
    TwoTransmonModel { omega1: 5.0, alpha1: -0.3, alpha2: -0.3, j: 0.01, omega2_idle: 6.0 }
}

#[test]
fn zz_rate_grows_toward_anticrossing() {
    let m = model();
    assert!((m.anticrossing_11_02() - 5.3).abs() < 1e-15);
    let labels = m.branch_indices().unwrap();
    assert_eq!(labels[transmon_index(0, 0)], 0);
    assert_eq!(labels[transmon_index(1, 1)], 4);
    assert_eq!(labels[transmon_index(0, 2)], 5);
    let mut last = 0.0;
    for w in [6.0, 5.8, 5.6, 5.45, 5.35, 5.31] {
        let z = m.zz_rate(w).unwrap();
        assert!(z > last, "zeta({w}) = {z}");
        last = z;
    }
    // Far from the anticrossing the shift is second order in J.
    let far = m.zz_rate(6.0).unwrap();
    assert!(far < 2.0 * 0.01 * 0.01 / 0.7 * 2.0);
    // At the anticrossing it approaches sqrt(2) J.
    assert!((m.zz_rate(5.3).unwrap() - 0.01 * 2.0_f64.sqrt()).abs() < 0.3 * 0.01 * 2.0_f64.sqrt());
}

#[test]
fn slepian_ramp_is_adiabatic_and_square_is_not() {
    let m = model();
    let slepian = CzSchedule::calibrate(m, RampShape::Slepian, 200.0).unwrap();
    assert!((slepian.conditional_phase(400).unwrap() - PI).abs() < 1e-6);
    let smooth = simulate_cz(&slepian, 0.02).unwrap();
    let square = CzSchedule::calibrate(m, RampShape::Square, 200.0).unwrap();
    let sudden = simulate_cz(&square, 0.02).unwrap();
    assert!(smooth.adiabatic, "leakage {}", smooth.max_leakage);
    assert!(sudden.max_leakage > 10.0 * smooth.max_leakage);
    assert!((smooth.conditional_phase.abs() - PI).abs() < 0.05, "phase {}", smooth.conditional_phase);
    assert!(smooth.report.infidelity < 1e-2, "infidelity {}", smooth.report.infidelity);
}

#[test]
fn strip_local_phases_leaves_conditional_part() {
    let u = Operator::diagonal(&[
        c(1.0, 0.0),
        Complex64::from_polar(1.0, 0.3),
        Complex64::from_polar(1.0, -0.8),
        Complex64::from_polar(1.0, 0.3 - 0.8 + PI),
    ]);
    assert!(strip_local_phases(&u).max_diff(&cz()) < 1e-14);
    assert!((conditional_phase(&u).abs() - PI).abs() < 1e-14);
}

#[test]
fn projector_counts_computational_states() {
    let p = computational_projector_9();
    assert!((p.trace().re - 4.0).abs() < 1e-15);
    let (vals, _) = eigh(&p);
    assert!(vals.iter().all(|v| v.abs() < 1e-12 || (v - 1.0).abs() < 1e-12));
}

proptest! {
    #[test]
    fn constructors_are_unitary(j in 0.001f64..0.05, tau in 0.0f64..200.0, theta in -7.0f64..7.0, phi in -4.0f64..4.0) {
        for u in [iswap(j, tau), bswap(j, tau), cz_coherent_exchange(j, tau), cr_matrix(theta), drive_rotation(theta, phi)] {
            prop_assert!(u.is_unitary(1e-12));
        }
    }

    #[test]
    fn infidelity_is_phase_invariant(theta in -7.0f64..7.0, g in -3.0f64..3.0) {
        let u = cr_matrix(theta);
        let v = u.scale(Complex64::from_polar(1.0, g));
        prop_assert!(gate_infidelity(&v, &u).unwrap().abs() < 1e-12);
        let inf = gate_infidelity(&u, &cnot()).unwrap();
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&inf));
    }
}
