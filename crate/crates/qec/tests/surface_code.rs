use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use scq_core::qcore::CVector;
use scq_core::StateVector;
use scq_qec::decoder::{mwpm_decode_with_limit, MAX_DEFECTS};
use scq_qec::memory::is_logical_error;
use scq_qec::statevec::{apply_pauli, d2_stabilizers, expectation};
use scq_qec::syndrome::{apply_frame, extract_syndrome, lattice_tableau};
use scq_qec::*;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn p(s: &str) -> PauliString {
    s.parse().unwrap()
}

#[test]
fn lattice_counts_follow_the_distance() {
    for d in 2..=7 {
        let l = SurfaceLattice::new(d).unwrap();
        assert_eq!(l.n_qubits(), 4 * d * d - 4 * d + 1);
        assert_eq!(l.n_data(), 2 * d * d - 2 * d + 1);
        assert_eq!(l.x_checks().len(), d * d - d);
        assert_eq!(l.z_checks().len(), d * d - d);
        assert_eq!(l.n_data() + l.x_checks().len() + l.z_checks().len(), l.n_qubits());
    }
    assert!(SurfaceLattice::new(1).is_err());
}

#[test]
fn d2_lattice_reproduces_the_worked_example() {
    let l = SurfaceLattice::new(2).unwrap();
    let got: Vec<String> = l.stabilizers().iter().map(|s| s.to_string()).collect();
    let want: Vec<String> = d2_stabilizers().iter().map(|s| s.to_string()).collect();
    assert_eq!(got, want);
    assert_eq!(l.logical_z(), p("ZZIII"));
    assert_eq!(l.logical_x(), p("XIIXI"));
}

#[test]
fn stabilizers_commute_and_logicals_anticommute() {
    for d in 2..=6 {
        let l = SurfaceLattice::new(d).unwrap();
        let s = l.stabilizers();
        for a in &s {
            for b in &s {
                assert!(a.commutes_with(b));
            }
            assert!(a.commutes_with(&l.logical_x()));
            assert!(a.commutes_with(&l.logical_z()));
        }
        assert!(!l.logical_x().commutes_with(&l.logical_z()));
        assert_eq!(l.logical_x().weight(), d);
        assert_eq!(l.logical_z().weight(), d);
    }
}

#[test]
fn logical_paulis_anticommute_as_strings() {
    let l = SurfaceLattice::new(2).unwrap();
    let (x, z) = (l.logical_x(), l.logical_z());
    assert_eq!(&x * &z, (&z * &x).negated());
    assert_eq!(&x * &x, PauliString::identity(5));
}

#[test]
fn pauli_products_track_phase() {
    assert_eq!(&p("X") * &p("Z"), p("-iY"));
    assert_eq!(&p("Z") * &p("X"), p("+iY"));
    assert_eq!(&p("Y") * &p("Y"), p("I"));
    assert_eq!(p("-iXYZ_").to_string(), "-iXYZI");
    assert!("XQ".parse::<PauliString>().is_err());
}

#[test]
fn codewords_are_orthogonal_and_stabilized() {
    let (zero, one) = d2_codewords();
    assert!(zero.inner(&one).norm() < 1e-15);
    for s in d2_stabilizers() {
        assert!(apply_pauli(&s, &zero).unwrap().max_diff(&zero) < 1e-15);
        assert!(apply_pauli(&s, &one).unwrap().max_diff(&one) < 1e-15);
    }
    let l = SurfaceLattice::new(2).unwrap();
    assert!((expectation(&l.logical_z(), &zero).unwrap() - 1.0).abs() < 1e-15);
    let zl_one = apply_pauli(&l.logical_z(), &one).unwrap();
    let minus_one = StateVector::new(one.amplitudes() * Complex64::new(-1.0, 0.0)).unwrap();
    assert!(zl_one.max_diff(&minus_one) < 1e-15);
    assert!(apply_pauli(&l.logical_x(), &zero).unwrap().max_diff(&one) < 1e-15);
}

#[test]
fn logical_hadamard_maps_codewords_to_superpositions() {
    let (zero, one) = d2_codewords();
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let plus = StateVector::new((zero.amplitudes() + one.amplitudes()) * Complex64::new(r, 0.0)).unwrap();
    let minus = StateVector::new((zero.amplitudes() - one.amplitudes()) * Complex64::new(r, 0.0)).unwrap();
    assert!(logical_h_d2(&zero).unwrap().max_diff(&plus) < 1e-12);
    assert!(logical_h_d2(&one).unwrap().max_diff(&minus) < 1e-12);
}

#[test]
fn stabilizer_measurements_on_the_codeword_are_deterministic() {
    let (zero, _) = d2_codewords();
    let mut g = rng(1);
    for s in d2_stabilizers() {
        for _ in 0..20 {
            let (minus, post) = measure_stabilizer(&zero, &s, &mut g).unwrap();
            assert!(!minus);
            assert!(post.max_diff(&zero) < 1e-14);
        }
    }
}

#[test]
fn x_stabilizer_on_all_zeros_is_a_fair_coin() {
    let mut v = CVector::zeros(32);
    v[0] = Complex64::new(1.0, 0.0);
    let ground = StateVector::new(v).unwrap();
    let s0 = &d2_stabilizers()[0];
    let mut g = rng(2);
    let shots = 10_000;
    let mut minus = 0;
    for _ in 0..shots {
        let (m, post) = measure_stabilizer(&ground, s0, &mut g).unwrap();
        // Repeating the measurement gives the same eigenvalue.
        let (again, _) = measure_stabilizer(&post, s0, &mut g).unwrap();
        assert_eq!(m, again);
        minus += m as usize;
    }
    let sigma = (shots as f64 * 0.25).sqrt();
    assert!((minus as f64 - 0.5 * shots as f64).abs() < 4.0 * sigma);
}

#[test]
fn bit_flip_on_the_centre_trips_both_z_checks() {
    let (zero, _) = d2_codewords();
    let flipped = apply_pauli(&p("IIXII"), &zero).unwrap();
    let mut g = rng(3);
    let outcomes: Vec<bool> =
        d2_stabilizers().iter().map(|s| measure_stabilizer(&flipped, s, &mut g).unwrap().0).collect();
    assert_eq!(outcomes, vec![false, false, true, true]);
}

#[test]
fn tableau_basic_measurements() {
    let mut g = rng(4);
    let mut ones = 0;
    for _ in 0..200 {
        let mut t = StabilizerTableau::new(1);
        t.h(0).unwrap();
        let a = t.measure_z(0, &mut g).unwrap();
        assert!(!a.deterministic);
        let b = t.measure_z(0, &mut g).unwrap();
        assert!(b.deterministic);
        assert_eq!(a.outcome, b.outcome);
        ones += a.outcome as usize;
    }
    assert!(ones > 60 && ones < 140);
    for seed in 0..50 {
        let mut g = rng(seed);
        let mut t = StabilizerTableau::new(2);
        t.h(0).unwrap();
        t.cnot(0, 1).unwrap();
        assert_eq!(t.peek(&p("ZZ")).unwrap(), Some(false));
        assert_eq!(t.peek(&p("XX")).unwrap(), Some(false));
        assert_eq!(t.peek(&p("YY")).unwrap(), Some(true));
        let a = t.measure_z(0, &mut g).unwrap().outcome;
        let b = t.measure_z(1, &mut g).unwrap().outcome;
        assert_eq!(a, b);
    }
}

#[test]
fn tableau_rejects_non_clifford_and_bad_input() {
    let mut t = StabilizerTableau::new(2);
    assert!(matches!(t.apply(Gate::T { q: 0 }), Err(QecError::UnsupportedGate(_))));
    assert!(t.apply(Gate::H { q: 5 }).is_err());
    assert!(t.peek(&p("+iXX")).is_err());
    assert!(t.peek(&p("XXX")).is_err());
}

#[test]
fn tableau_gate_signs_match_conjugation() {
    let mut t = StabilizerTableau::new(1);
    // |0> -> S H: stabilizer Z -> X -> Y.
    t.h(0).unwrap();
    t.s(0).unwrap();
    assert_eq!(t.peek(&p("Y")).unwrap(), Some(false));
    t.apply(Gate::Sdg { q: 0 }).unwrap();
    assert_eq!(t.peek(&p("X")).unwrap(), Some(false));
    t.z_gate(0).unwrap();
    assert_eq!(t.peek(&p("X")).unwrap(), Some(true));
    t.apply(Gate::Y { q: 0 }).unwrap();
    assert_eq!(t.peek(&p("X")).unwrap(), Some(false));
}

/// H on D0 and D3, then CNOTs copying them onto their X-check partners.
const ENCODER: [Gate; 6] = [
    Gate::H { q: 0 },
    Gate::Cnot { control: 0, target: 1 },
    Gate::Cnot { control: 0, target: 2 },
    Gate::H { q: 3 },
    Gate::Cnot { control: 3, target: 2 },
    Gate::Cnot { control: 3, target: 4 },
];

/// Independent dense state-vector simulation of a Clifford circuit.
fn sv_apply(gate: &Gate, psi: &StateVector) -> StateVector {
    let n = 5;
    let bit = |q: usize| 1usize << (n - 1 - q);
    let a = psi.amplitudes();
    let mut out = CVector::zeros(a.len());
    let r = std::f64::consts::FRAC_1_SQRT_2;
    match *gate {
        Gate::H { q } => {
            for k in 0..a.len() {
                let b = k & bit(q) != 0;
                out[k & !bit(q)] += a[k] * r;
                out[k | bit(q)] += a[k] * if b { -r } else { r };
            }
        }
        Gate::Cnot { control, target } => {
            for k in 0..a.len() {
                let t = if k & bit(control) != 0 { k ^ bit(target) } else { k };
                out[t] = a[k];
            }
        }
        _ => unreachable!("encoder uses H and CNOT only"),
    }
    StateVector::new(out).unwrap()
}

#[test]
fn encoding_circuit_agrees_between_tableau_and_state_vector() {
    let mut t = StabilizerTableau::new(5);
    let mut v = CVector::zeros(32);
    v[0] = Complex64::new(1.0, 0.0);
    let mut psi = StateVector::new(v).unwrap();
    for g in &ENCODER {
        t.apply(*g).unwrap();
        psi = sv_apply(g, &psi);
    }
    let (zero, _) = d2_codewords();
    assert!(psi.max_diff(&zero) < 1e-12);
    for s in d2_stabilizers() {
        assert_eq!(t.peek(&s).unwrap(), Some(false), "{s}");
    }
    assert_eq!(t.peek(&p("ZZIII")).unwrap(), Some(false));
    // Every tableau generator is, up to sign, a product of the stabilizers
    // and Z_L, so it stabilizes the codeword up to sign.
    for g in t.stabilizers() {
        assert!((expectation(&g, &zero).unwrap().abs() - 1.0).abs() < 1e-12);
    }
}

/// Chi-square critical values at 1% significance for 1..=7 degrees of
/// freedom.
const CHI2_01: [f64; 7] = [6.635, 9.210, 11.345, 13.277, 15.086, 16.812, 18.475];

fn chi2_two_sample(a: &[usize], b: &[usize]) -> (f64, usize) {
    let (na, nb) = (a.iter().sum::<usize>() as f64, b.iter().sum::<usize>() as f64);
    let mut stat = 0.0;
    let mut cells = 0;
    for (x, y) in a.iter().zip(b) {
        let tot = (*x + *y) as f64;
        if tot == 0.0 {
            continue;
        }
        cells += 1;
        let ea = tot * na / (na + nb);
        let eb = tot * nb / (na + nb);
        stat += (*x as f64 - ea).powi(2) / ea + (*y as f64 - eb).powi(2) / eb;
    }
    (stat, cells - 1)
}

#[test]
fn tableau_and_state_vector_outcome_distributions_agree() {
    let measurements = [p("XXXII"), p("ZIZZI"), p("XXIII"), p("IIXXX")];
    let prep = [Gate::H { q: 0 }, Gate::Cnot { control: 0, target: 3 }];
    let shots = 10_000;
    let mut sv_counts = vec![0usize; 16];
    let mut tab_counts = vec![0usize; 16];
    let mut g = rng(5);
    for _ in 0..shots {
        let mut v = CVector::zeros(32);
        v[0] = Complex64::new(1.0, 0.0);
        let mut psi = StateVector::new(v).unwrap();
        let mut t = StabilizerTableau::new(5);
        for gate in &prep {
            psi = sv_apply(gate, &psi);
            t.apply(*gate).unwrap();
        }
        let mut ka = 0;
        let mut kb = 0;
        for (i, m) in measurements.iter().enumerate() {
            let (out, post) = measure_stabilizer(&psi, m, &mut g).unwrap();
            psi = post;
            ka |= (out as usize) << i;
            kb |= (t.measure_pauli(m, &mut g).unwrap().outcome as usize) << i;
        }
        sv_counts[ka] += 1;
        tab_counts[kb] += 1;
    }
    let (stat, dof) = chi2_two_sample(&sv_counts, &tab_counts);
    assert!(dof >= 1 && dof <= 7);
    assert!(stat < CHI2_01[dof - 1], "chi2 = {stat} with {dof} dof: {sv_counts:?} vs {tab_counts:?}");
}

#[test]
fn noiseless_cycles_repeat_the_reference() {
    let l = SurfaceLattice::new(3).unwrap();
    let mut t = lattice_tableau(&l);
    let mut g = rng(6);
    let reference = extract_syndrome(&l, &mut t, 0, &mut g).unwrap();
    for c in 1..=5 {
        let (s, e) = syndrome_cycle(&l, &mut t, &NoiseModel::default(), c, &mut g).unwrap();
        assert!(e.is_identity());
        assert!(s.flips(&reference).is_trivial());
    }
    // The reference projects |0...0> into |0>_L.
    let mut zl = PauliString::identity(l.n_qubits());
    for q in 0..l.n_data() {
        if l.logical_z().letter(q) == Letter::Z {
            zl.set(q, Letter::Z);
        }
    }
    assert_eq!(t.peek(&zl).unwrap(), Some(false));
}

fn flips_after(l: &SurfaceLattice, frame: &PauliFrame, seed: u64) -> (SyndromeHistory, Syndrome) {
    let mut t = lattice_tableau(l);
    let mut g = rng(seed);
    let reference = extract_syndrome(l, &mut t, 0, &mut g).unwrap();
    apply_frame(&mut t, frame).unwrap();
    let s = extract_syndrome(l, &mut t, 1, &mut g).unwrap();
    let mut h = SyndromeHistory::new(reference);
    h.cycles.push(s);
    let net = h.net_flips();
    (h, net)
}

#[test]
fn single_errors_flip_exactly_their_adjacent_checks() {
    for d in [2, 3, 4] {
        let l = SurfaceLattice::new(d).unwrap();
        for q in 0..l.n_data() {
            let mut f = PauliFrame::new(l.n_data());
            f.flip_x(q);
            let (_, net) = flips_after(&l, &f, q as u64);
            let expected: Vec<bool> = l.z_checks().iter().map(|c| c.data.contains(&q)).collect();
            assert_eq!(net.z_checks, expected);
            assert!(net.x_checks.iter().all(|b| !b));
            let on_edge = {
                let (r, _) = l.data_site(q);
                r == 0 || r == l.size() - 1
            };
            assert_eq!(expected.iter().filter(|b| **b).count(), if on_edge { 1 } else { 2 });
        }
    }
}

#[test]
fn d2_centre_bit_flip_trips_both_z_checks_in_the_tableau() {
    let l = SurfaceLattice::new(2).unwrap();
    let mut f = PauliFrame::new(5);
    f.flip_x(2);
    let (_, net) = flips_after(&l, &f, 7);
    assert_eq!(net.z_checks, vec![true, true]);
    assert_eq!(net.x_checks, vec![false, false]);
}

#[test]
fn adjacent_defects_are_joined_by_one_correction() {
    let l = SurfaceLattice::new(3).unwrap();
    let centre = l.data_index((2, 2)).unwrap();
    let mut f = PauliFrame::new(l.n_data());
    f.flip_z(centre);
    let (h, net) = flips_after(&l, &f, 8);
    assert_eq!(net.defect_count(), 2);
    let c = mwpm_decode(&h, &l).unwrap();
    assert_eq!(c, f);
}

#[test]
fn degenerate_pairs_differ_by_a_stabilizer() {
    let l = SurfaceLattice::new(3).unwrap();
    let mut f = PauliFrame::new(l.n_data());
    f.flip_z(l.data_index((0, 2)).unwrap());
    f.flip_z(l.data_index((2, 2)).unwrap());
    let (h, net) = flips_after(&l, &f, 9);
    assert_eq!(net.defect_count(), 4);
    let c = mwpm_decode(&h, &l).unwrap();
    assert_eq!(c.weight(), 2);
    let residual = f.combine(&c);
    assert!(!is_logical_error(&l, &residual));
    // The residual is the identity or a Z stabilizer.
    let zs: Vec<PauliString> = l.z_checks().iter().map(|k| l.stabilizer(k)).collect();
    let r = residual.to_pauli();
    assert!(residual.is_identity() || zs.iter().any(|s| s.same_letters(&r)));
}

#[test]
fn every_single_error_on_d3_and_d5_is_corrected() {
    for d in [3, 5] {
        let l = SurfaceLattice::new(d).unwrap();
        for q in 0..l.n_data() {
            for kind in 0..3 {
                let mut f = PauliFrame::new(l.n_data());
                if kind != 1 {
                    f.flip_x(q);
                }
                if kind != 0 {
                    f.flip_z(q);
                }
                let (h, _) = flips_after(&l, &f, 100 + q as u64);
                let c = mwpm_decode(&h, &l).unwrap();
                assert!(!is_logical_error(&l, &f.combine(&c)), "d={d} q={q} kind={kind}");
                assert_eq!(c, f, "single errors are matched exactly");
            }
        }
    }
}

#[test]
fn decoder_refuses_too_many_defects() {
    let l = SurfaceLattice::new(5).unwrap();
    let mut f = PauliFrame::new(l.n_data());
    // Isolated Z errors in the bulk each light up two X checks.
    for site in [(1, 1), (1, 5), (3, 3), (5, 1), (5, 5), (7, 3), (7, 7), (3, 7)] {
        f.flip_z(l.data_index(site).unwrap());
    }
    let (h, net) = flips_after(&l, &f, 10);
    assert!(net.defect_count() > MAX_DEFECTS);
    assert!(matches!(mwpm_decode(&h, &l), Err(QecError::DecoderCapacity { .. })));
    assert!(mwpm_decode_with_limit(&h, &l, 20).is_ok());
}

/// Exhaustive enumeration over all ways of pairing or sending to boundary.
fn brute_force(pair: &[Vec<usize>], boundary: &[usize], left: &[usize]) -> usize {
    let Some((&i, rest)) = left.split_first() else {
        return 0;
    };
    let mut best = boundary[i] + brute_force(pair, boundary, rest);
    for k in 0..rest.len() {
        let mut others = rest.to_vec();
        let j = others.remove(k);
        best = best.min(pair[i][j] + brute_force(pair, boundary, &others));
    }
    best
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn matching_weight_equals_brute_force(n in 0usize..9, seed in 0u64..10_000) {
        use rand::Rng;
        let mut g = rng(seed);
        let mut pair = vec![vec![0usize; n]; n];
        for i in 0..n {
            for j in i + 1..n {
                let w = g.random_range(1..10);
                pair[i][j] = w;
                pair[j][i] = w;
            }
        }
        let boundary: Vec<usize> = (0..n).map(|_| g.random_range(1..10)).collect();
        let m = minimum_weight_matching(&pair, &boundary, MAX_DEFECTS).unwrap();
        let all: Vec<usize> = (0..n).collect();
        prop_assert_eq!(m.weight, brute_force(&pair, &boundary, &all));
        let recomputed: usize = m.pairs.iter().map(|&(i, j)| pair[i][j]).sum::<usize>()
            + m.boundary.iter().map(|&i| boundary[i]).sum::<usize>();
        prop_assert_eq!(recomputed, m.weight);
        let mut covered: Vec<usize> = m.pairs.iter().flat_map(|&(i, j)| [i, j]).chain(m.boundary.iter().copied()).collect();
        covered.sort_unstable();
        prop_assert_eq!(covered, all);
    }

    #[test]
    fn correction_clears_the_syndrome(d in prop::sample::select(vec![3usize, 5]), seed in 0u64..10_000, count in 1usize..5) {
        use rand::Rng;
        let l = SurfaceLattice::new(d).unwrap();
        let mut g = rng(seed);
        let mut f = PauliFrame::new(l.n_data());
        for _ in 0..count {
            let q = g.random_range(0..l.n_data());
            if g.random::<bool>() { f.flip_x(q) } else { f.flip_z(q) }
        }
        let mut t = lattice_tableau(&l);
        let reference = extract_syndrome(&l, &mut t, 0, &mut g).unwrap();
        apply_frame(&mut t, &f).unwrap();
        let s = extract_syndrome(&l, &mut t, 1, &mut g).unwrap();
        let mut h = SyndromeHistory::new(reference.clone());
        h.cycles.push(s);
        let c = mwpm_decode(&h, &l).unwrap();
        apply_frame(&mut t, &c).unwrap();
        let after = extract_syndrome(&l, &mut t, 2, &mut g).unwrap();
        prop_assert!(after.flips(&reference).is_trivial());
    }

    #[test]
    fn pauli_commutation_matches_products(a in "[IXYZ]{6}", b in "[IXYZ]{6}") {
        let (pa, pb) = (p(&a), p(&b));
        let ab = &pa * &pb;
        let ba = &pb * &pa;
        prop_assert_eq!(pa.commutes_with(&pb), ab == ba);
        prop_assert!(ab.same_letters(&ba));
    }
}

#[test]
fn zero_noise_has_zero_logical_rate() {
    let est = logical_error_rate(3, 0.0, 3, 200, 1).unwrap();
    assert_eq!(est.failures, 0);
    assert_eq!(est.rate, 0.0);
}

#[test]
fn monte_carlo_is_reproducible() {
    let a = logical_error_rate(3, 0.03, 2, 2000, 42).unwrap();
    let b = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(|| logical_error_rate(3, 0.03, 2, 2000, 42).unwrap());
    assert_eq!(a, b);
    assert!(a.ci_low <= a.rate && a.rate <= a.ci_high);
}

#[test]
fn lower_noise_and_larger_distance_suppress_logical_errors() {
    let shots = 100_000;
    let low = logical_error_rate(3, 1e-3, 3, shots, 11).unwrap();
    let high = logical_error_rate(3, 3e-2, 3, shots, 12).unwrap();
    assert!(high.rate >= 10.0 * low.rate, "{} vs {}", low.rate, high.rate);
    let d2 = logical_error_rate(2, 1e-3, 3, shots, 13).unwrap();
    assert!(low.rate < d2.rate, "d=3 {} vs d=2 {}", low.rate, d2.rate);
}

#[test]
fn syndrome_csv_lists_x_then_z_bits_per_cycle() {
    let l = SurfaceLattice::new(2).unwrap();
    let mut f = PauliFrame::new(5);
    f.flip_x(2);
    let (h, _) = flips_after(&l, &f, 14);
    let mut buf = Vec::new();
    h.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "cycle,x0,x1,z0,z1");
    assert_eq!(lines.len(), 3);
    assert!(lines[2].starts_with("1,") && lines[2].ends_with(",1,1"));
}
