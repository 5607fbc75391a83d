use std::f64::consts::{PI, TAU};

use proptest::prelude::*;
use scq_core::circuits::*;

fn transmon(n_ext: f64) -> CircuitParams {
    CircuitParams::island(20.0, 0.4, n_ext)
}

#[test]
fn transmon_frequency_near_plasma_minus_ec() {
    let d = diagonalize(&transmon(0.0), CircuitBasis::Charge { ncut: 30 }, 4).unwrap();
    let target = (8.0_f64 * 20.0 * 0.4).sqrt() - 0.4;
    assert!((target - 7.6).abs() < 1e-12);
    assert!((d.spectrum.omega_q - target).abs() / target < 0.02);
    assert!((d.spectrum.alpha + 0.4).abs() / 0.4 < 0.15);
}

#[test]
fn charge_qubit_matches_large_cutoff() {
    let p = CircuitParams::island(0.5, 1.0, 0.5);
    let s = spectrum(&island_hamiltonian(&p, 30).unwrap(), 6).unwrap();
    let oracle = spectrum(&island_hamiltonian(&p, 60).unwrap(), 6).unwrap();
    for (a, b) in s.levels.iter().zip(&oracle.levels) {
        assert!((a - b).abs() < 1e-10);
    }
}

#[test]
fn charge_dispersion_falls_with_ej_over_ec() {
    let ec = 0.4;
    let values: Vec<f64> = [1.0, 5.0, 10.0, 20.0, 50.0]
        .iter()
        .map(|r| charge_dispersion(&CircuitParams::island(r * ec, ec, 0.0), 30).unwrap().abs())
        .collect();
    for w in values.windows(2) {
        assert!(w[1] < w[0], "{values:?}");
    }
    let wq = qubit_frequency(&transmon(0.0), CircuitBasis::Charge { ncut: 30 }).unwrap();
    assert!(values[4] / wq < 1e-4);
}

#[test]
fn charge_dispersion_converged_in_cutoff() {
    let p = CircuitParams::island(20.0 * 0.4, 0.4, 0.0);
    let a = charge_dispersion(&p, 30).unwrap();
    let b = charge_dispersion(&p, 60).unwrap();
    assert!((a - b).abs() < 1e-8);
}

#[test]
fn island_cutoff_stability() {
    for ratio in [1.0, 10.0, 50.0] {
        let p = CircuitParams::island(ratio * 0.3, 0.3, 0.17);
        let a = spectrum(&island_hamiltonian(&p, 30).unwrap(), 5).unwrap();
        let b = spectrum(&island_hamiltonian(&p, 40).unwrap(), 5).unwrap();
        for (x, y) in a.levels.iter().zip(&b.levels) {
            assert!((x - y).abs() < 1e-8);
        }
    }
}

#[test]
fn transmon_limit_window() {
    for ratio in [50.0, 100.0] {
        let ec = 0.25;
        let ej = ratio * ec;
        let s =
            diagonalize(&CircuitParams::island(ej, ec, 0.0), CircuitBasis::Charge { ncut: 30 }, 3).unwrap().spectrum;
        let plasma = (8.0_f64 * ej * ec).sqrt();
        assert!(s.omega_q >= plasma - 1.5 * ec && s.omega_q <= plasma - 0.5 * ec);
        assert!(s.alpha < 0.0);
    }
}

#[test]
fn inductive_loop_without_junction_is_harmonic() {
    let p = CircuitParams::looped(0.0, 1.0, 1.0, 0.0);
    let h = loop_hamiltonian(&p, &PhaseGrid::default()).unwrap();
    let s = h.spectrum(4).unwrap();
    let plasma = (8.0_f64 * 1.0 * 1.0).sqrt();
    for k in 1..4 {
        let spacing = s.levels[k] - s.levels[k - 1];
        assert!((spacing - plasma).abs() / plasma < 0.01);
    }
}

#[test]
fn fluxonium_doublet_at_half_flux() {
    let p = CircuitParams::looped(5.0, 1.0, 1.0, PI);
    let s = loop_hamiltonian(&p, &PhaseGrid::default()).unwrap().spectrum(3).unwrap();
    let splitting = s.levels[1];
    let plasma = s.levels[2] - s.levels[1];
    assert!(splitting > 0.0);
    assert!(splitting / plasma < 0.1, "splitting {splitting} plasma {plasma}");
}

#[test]
fn loop_grid_doubling_converges() {
    let p = CircuitParams::looped(5.0, 1.0, 1.0, PI);
    let coarse = loop_hamiltonian(&p, &PhaseGrid { turns: 4.0, npoints: 65536 }).unwrap();
    let fine = loop_hamiltonian(&p, &PhaseGrid { turns: 4.0, npoints: 131072 }).unwrap();
    let a = coarse.matrix.lowest_eigenvalues(5);
    let b = fine.matrix.lowest_eigenvalues(5);
    for k in 1..5 {
        let da = a[k] - a[0];
        let db = b[k] - b[0];
        assert!((da - db).abs() < 1e-6, "level {k}: {da} vs {db}");
    }
}

#[test]
fn loop_spectrum_ignores_flux_without_junction() {
    let grid = PhaseGrid { turns: 4.0, npoints: 1024 };
    let base = loop_hamiltonian(&CircuitParams::looped(0.0, 0.8, 0.6, 0.0), &grid).unwrap();
    let shifted = loop_hamiltonian(&CircuitParams::looped(0.0, 0.8, 0.6, 1.3), &grid).unwrap();
    let a = base.matrix.lowest_eigenvalues(5);
    let b = shifted.matrix.lowest_eigenvalues(5);
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() < 1e-12);
    }
}

#[test]
fn small_grid_rejected() {
    let p = CircuitParams::looped(1.0, 1.0, 1.0, 0.0);
    assert!(matches!(
        loop_hamiltonian(&p, &PhaseGrid { turns: 4.0, npoints: 64 }),
        Err(CircuitError::GridTooCoarse(64))
    ));
    assert!(matches!(island_hamiltonian(&transmon(0.0), 3), Err(CircuitError::CutoffTooSmall(3))));
}

#[test]
fn transmon_charge_parity_and_zero_point() {
    let d = diagonalize(&transmon(0.0), CircuitBasis::Charge { ncut: 30 }, 3).unwrap();
    let dip = dipole_elements(&d);
    assert!(dip.charge[(0, 0)].norm() < 1e-10);
    let n0 = (20.0_f64 / (32.0 * 0.4)).powf(0.25);
    let n10 = dip.number[(1, 0)].norm();
    assert!((n10 - n0).abs() / n0 < 0.05, "{n10} vs {n0}");
    assert!((dip.charge[(1, 0)].norm() - 8.0 * 0.4 * n10).abs() < 1e-12);
}

#[test]
fn loop_flux_sweet_spot_matrix_elements() {
    let p = CircuitParams::looped(5.0, 1.0, 1.0, PI);
    let d = diagonalize(&p, CircuitBasis::Phase(PhaseGrid::default()), 3).unwrap();
    let dip = dipole_elements(&d);
    let diff = dip.flux[(1, 1)].re - dip.flux[(0, 0)].re;
    assert!(diff.abs() < 1e-6, "{diff}");
    // The same elements away from the sweet spot are clearly nonzero.
    let q = CircuitParams::looped(5.0, 1.0, 1.0, PI - 0.3);
    let dq = dipole_elements(&diagonalize(&q, CircuitBasis::Phase(PhaseGrid::default()), 3).unwrap());
    assert!((dq.flux[(1, 1)].re - dq.flux[(0, 0)].re).abs() > 1e-2);
}

#[test]
fn loop_charge_operator_matches_grid_projection() {
    // On a small grid compare the direct projection with the dense path.
    let grid = PhaseGrid { turns: 2.0, npoints: 200 };
    let p = CircuitParams::looped(3.0, 1.2, 0.7, 0.4);
    let d = diagonalize(&p, CircuitBasis::Phase(grid), 3).unwrap();
    let dip = dipole_elements(&d);
    let h = grid.spacing();
    let n = grid.npoints;
    let op = nalgebra::DMatrix::from_fn(n, n, |r, c| {
        if c == r + 1 {
            num_complex::Complex64::new(0.0, -1.0 / (2.0 * h))
        } else if r == c + 1 {
            num_complex::Complex64::new(0.0, 1.0 / (2.0 * h))
        } else {
            num_complex::Complex64::new(0.0, 0.0)
        }
    });
    let v = &d.spectrum.eigenvectors;
    let dense = v.adjoint() * op * v;
    for (a, b) in dense.iter().zip(dip.number.iter()) {
        assert!((a - b).norm() < 1e-12);
    }
}

fn two_level_dipoles(x10: f64) -> Dipoles {
    let m = nalgebra::DMatrix::from_fn(2, 2, |r, c| num_complex::Complex64::new(if r != c { x10 } else { 0.0 }, 0.0));
    Dipoles { charge: m.clone(), flux: m.clone(), critical_current: m.clone(), number: m }
}

#[test]
fn thermalization_limits_and_hand_value() {
    let dip = two_level_dipoles(0.5);
    let silent = NoiseSpec { channel: NoiseChannel::Charge, amplitude: 0.0, exponent: 1.0 };
    assert_eq!(thermalization_rate(&dip, &[silent], 5.0), 0.0);

    // (2 pi 0.5)^2 * 2 * A^2 * (1 / 5e9) with A = 1e-6.
    let one_over_f = NoiseSpec { channel: NoiseChannel::Charge, amplitude: 1e-6, exponent: 1.0 };
    let hand = PI * PI * 2.0 * 1e-12 / 5e9;
    let got = thermalization_rate(&dip, &[one_over_f], 5.0);
    assert!((got - hand).abs() / hand < 1e-12);

    let ohmic = NoiseSpec { channel: NoiseChannel::Flux, amplitude: 1e-3, exponent: -1.0 };
    let g1 = thermalization_rate(&dip, &[ohmic], 4.0);
    let g2 = thermalization_rate(&dip, &[ohmic], 8.0);
    assert!((g2 / g1 - 2.0).abs() < 1e-12);
}

#[test]
fn transmon_is_charge_insensitive() {
    let noise = NoiseSpec { channel: NoiseChannel::Charge, amplitude: 1e-4, exponent: 1.0 };
    for n_ext in [0.0, 0.1, 0.25, 0.4] {
        let est = dephasing_rate(&transmon(n_ext), CircuitBasis::Charge { ncut: 30 }, &noise, 1e-4).unwrap();
        assert!(est.is_estimate);
        // Flat to a part in 1e5 of the 7.6 GHz qubit frequency.
        assert!(est.slope.abs() / 7.6 < 1e-5, "slope {}", est.slope);
    }
    // A charge qubit away from its sweet spot is strongly sensitive.
    let cq = CircuitParams::island(1.0, 1.0, 0.3);
    let est = dephasing_rate(&cq, CircuitBasis::Charge { ncut: 30 }, &noise, 1e-4).unwrap();
    assert!(est.slope.abs() > 0.5);
}

#[test]
fn loop_sweet_spot_at_half_flux() {
    let p = CircuitParams::looped(5.0, 1.0, 1.0, 0.0);
    let grid = PhaseGrid::default();
    let spot = sweet_spot(&p, CircuitBasis::Phase(grid), NoiseChannel::Flux, (PI - 0.5, PI + 0.7)).unwrap();
    assert!((spot - PI).abs() < 1e-6, "{spot}");
}

#[test]
fn relaxation_rates_from_lindblad_rates() {
    let r = RelaxationRates::new(1.0 / 40.0, 1.0 / 90.0).unwrap();
    assert!((1.0 / r.t1 - r.gamma_par).abs() < 1e-15);
    assert!((1.0 / r.t2 - (r.gamma_par / 2.0 + r.gamma_phi)).abs() < 1e-15);
    assert!(r.t2 <= 2.0 * r.t1 + 1e-12);
    assert!(RelaxationRates::new(-1.0, 0.0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn island_spectrum_periodic_and_mirrored(n_ext in 0.0f64..1.0, ratio in 0.2f64..30.0) {
        let ec = 0.3;
        let levels = |x: f64| {
            spectrum(&island_hamiltonian(&CircuitParams::island(ratio * ec, ec, x), 30).unwrap(), 4)
                .unwrap()
                .levels
        };
        let a = levels(n_ext);
        let mirror = levels(1.0 - n_ext);
        let shifted = levels(n_ext - 1.0);
        for k in 0..4 {
            prop_assert!((a[k] - mirror[k]).abs() < 1e-10);
            prop_assert!((a[k] - shifted[k]).abs() < 1e-10);
        }
    }

    #[test]
    fn assembled_rates_respect_t2_bound(gp in 0.0f64..1.0, gphi in 0.0f64..1.0) {
        prop_assume!(gp > 0.0);
        let r = RelaxationRates::new(gp, gphi).unwrap();
        prop_assert!(r.t2 <= 2.0 * r.t1 + 1e-12);
    }

    #[test]
    fn squid_energy_bounded(ej1 in 0.0f64..30.0, ej2 in 0.0f64..30.0, phi in 0.0f64..TAU) {
        let e = squid_effective_ej(&SquidParams { ej1, ej2, phi_ext: phi });
        prop_assert!(e <= ej1 + ej2 + 1e-12);
        prop_assert!(e >= (ej1 - ej2).abs() - 1e-9);
    }
}
