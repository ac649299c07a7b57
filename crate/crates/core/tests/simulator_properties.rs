mod common;

use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use qchem_vqe::ansatz::{bind_and_compile, build_kupccgsd, build_uccsd, Gate, GateProgram};
use qchem_vqe::encoding::EncodingKind;
use qchem_vqe::pauli::{Pauli, PauliString, PauliSum};
use qchem_vqe::simulator::{
    expectation_exact, expectation_sampled, run_noisy, run_statevector, Channel, ChannelKind, DensityMatrix,
    NoiseSpec, StateVector,
};
use qchem_vqe::vqe::{minimize, Backend, VqeProblem};

const KINDS: [ChannelKind; 5] = [
    ChannelKind::BitFlip,
    ChannelKind::Dephasing,
    ChannelKind::Depolarizing1q,
    ChannelKind::Depolarizing2q,
    ChannelKind::AmplitudeDamping,
];

fn max_abs(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Column-stacking superoperator `sum_k K (x) conj(K)`.
fn superoperator(channel: &Channel) -> DMatrix<Complex64> {
    let ks = channel.kraus();
    let d = ks[0].nrows();
    ks.iter()
        .fold(DMatrix::zeros(d * d, d * d), |acc, k| acc + k.kronecker(&k.map(|z| z.conj())))
}

fn composed_rate(kind: ChannelKind, p1: f64, p2: f64) -> f64 {
    match kind {
        ChannelKind::BitFlip | ChannelKind::Dephasing => p1 + p2 - 2.0 * p1 * p2,
        ChannelKind::Depolarizing1q | ChannelKind::Depolarizing2q | ChannelKind::AmplitudeDamping => {
            p1 + p2 - p1 * p2
        }
    }
}

#[test]
fn kraus_sets_are_complete() {
    for kind in KINDS {
        for i in 0..=20 {
            let c = Channel::new(kind, i as f64 / 20.0).unwrap();
            assert!(c.completeness_error() < 1e-12, "{} at {}", c.name(), c.rate);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn channels_compose_into_the_same_family(p1 in 0.0..1.0f64, p2 in 0.0..1.0f64) {
        for kind in KINDS {
            let first = superoperator(&Channel::new(kind, p1).unwrap());
            let second = superoperator(&Channel::new(kind, p2).unwrap());
            let composite = superoperator(&Channel::new(kind, composed_rate(kind, p1, p2)).unwrap());
            prop_assert!(max_abs(&(second * first - composite)) < 1e-12, "{kind:?}");
        }
    }
}

fn pauli_strategy(n: usize) -> impl Strategy<Value = PauliString> {
    prop::collection::vec(0..4u8, n).prop_map(|v| {
        PauliString::from_factors(v.into_iter().enumerate().filter_map(|(q, p)| match p {
            1 => Some((q, Pauli::X)),
            2 => Some((q, Pauli::Y)),
            3 => Some((q, Pauli::Z)),
            _ => None,
        }))
        .unwrap()
    })
}

fn program_strategy(n: usize) -> impl Strategy<Value = GateProgram> {
    let gate = prop_oneof![
        (0..n).prop_map(Gate::X),
        (-6.3..6.3f64, pauli_strategy(n)).prop_map(|(angle, generator)| Gate::Rotation { angle, generator }),
    ];
    prop::collection::vec(gate, 0..12).prop_map(move |gates| GateProgram { n_qubits: n, gates })
}

fn noise_strategy() -> impl Strategy<Value = NoiseSpec> {
    let one_qubit = prop_oneof![
        Just(ChannelKind::BitFlip),
        Just(ChannelKind::Dephasing),
        Just(ChannelKind::Depolarizing1q),
        Just(ChannelKind::AmplitudeDamping),
    ];
    let any_kind = prop_oneof![
        Just(ChannelKind::BitFlip),
        Just(ChannelKind::Dephasing),
        Just(ChannelKind::Depolarizing1q),
        Just(ChannelKind::Depolarizing2q),
        Just(ChannelKind::AmplitudeDamping),
    ];
    let ch1 = (one_qubit, 0.0..0.3f64).prop_map(|(channel, rate)| Channel { channel, rate });
    let ch_any = (any_kind, 0.0..0.3f64).prop_map(|(channel, rate)| Channel { channel, rate });
    (
        prop::collection::vec(ch1.clone(), 0..3),
        prop::collection::vec(ch1, 0..3),
        prop::collection::vec(ch_any, 0..4),
    )
        .prop_map(|(state_prep, single_qubit_rotation, multi_qubit_rotation)| NoiseSpec {
            seed: 0,
            state_prep,
            single_qubit_rotation,
            multi_qubit_rotation,
        })
}

/// `exp(-i angle P / 2)` from the dense matrix exponential.
fn dense_rotation(n: usize, angle: f64, generator: &PauliString) -> DMatrix<Complex64> {
    let p = PauliSum::from_terms(n, [(Complex64::new(1.0, 0.0), generator.clone())])
        .unwrap()
        .to_dense_matrix()
        .unwrap();
    (p * Complex64::new(0.0, -angle / 2.0)).exp()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn noisy_outputs_are_density_matrices(program in program_strategy(3), noise in noise_strategy()) {
        let rho = run_noisy(&program, &noise).unwrap();
        prop_assert!((rho.trace() - Complex64::new(1.0, 0.0)).norm() < 1e-9);
        prop_assert!(rho.hermiticity_error() < 1e-9);
        prop_assert!(rho.min_eigenvalue() > -1e-9);
    }

    #[test]
    fn rotations_match_the_dense_exponential(program in program_strategy(3)) {
        let mut expected = DMatrix::<Complex64>::zeros(8, 1);
        expected[(0, 0)] = Complex64::new(1.0, 0.0);
        for gate in &program.gates {
            let u = match gate {
                Gate::X(q) => dense_rotation(3, std::f64::consts::PI, &PauliString::single(*q, Pauli::X))
                    * Complex64::new(0.0, 1.0),
                Gate::Rotation { angle, generator } => dense_rotation(3, *angle, generator),
            };
            expected = u * expected;
        }
        let state = run_statevector(&program).unwrap();
        for (a, b) in state.amplitudes().iter().zip(expected.iter()) {
            prop_assert!((a - b).norm() < 1e-12);
        }
        let rho = run_noisy(&program, &NoiseSpec::noiseless()).unwrap();
        let pure = &expected * expected.adjoint();
        prop_assert!(max_abs(&(rho.matrix() - pure)) < 1e-12);
    }
}

fn uccsd_optimum(stem: &str) -> (PauliSum, GateProgram) {
    let p = common::point(stem, EncodingKind::BravyiKitaev);
    let c = build_uccsd(4, 2, &p.scheme, false).unwrap();
    let problem = VqeProblem::new(p.hamiltonian.clone(), c.clone(), Backend::Exact).unwrap();
    let r = minimize(&problem, &vec![0.0; c.n_parameters]).unwrap();
    (p.hamiltonian, bind_and_compile(&c, &r.params).unwrap())
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[test]
fn sampled_error_shrinks_as_inverse_square_root_of_shots() {
    let (h, program) = uccsd_optimum("h2_sto3g_r0.74");
    let state = run_statevector(&program).unwrap();
    let exact = expectation_exact(&state, &h).unwrap();
    let seeds = 200u64;
    let mut scaled_reported = Vec::new();
    let mut scaled_empirical = Vec::new();
    for log_shots in 7..=13 {
        let shots = 1u64 << log_shots;
        let estimates: Vec<_> = (0..seeds)
            .map(|s| expectation_sampled(&state, &h, shots, 1000 * log_shots + s).unwrap())
            .collect();
        let means: Vec<f64> = estimates.iter().map(|e| e.mean).collect();
        let (_, empirical) = mean_std(&means);
        let reported = estimates.iter().map(|e| e.stderr).sum::<f64>() / seeds as f64;
        scaled_reported.push(reported * (shots as f64).sqrt());
        scaled_empirical.push(empirical * (shots as f64).sqrt());

        let inside = estimates.iter().filter(|e| (e.mean - exact).abs() < 4.0 * e.stderr).count();
        assert!(inside as f64 >= 0.99 * seeds as f64, "shots={shots}: {inside}/{seeds} within 4 sigma");
    }
    for scaled in [&scaled_reported, &scaled_empirical] {
        let reference = scaled[scaled.len() - 1];
        for s in scaled {
            assert!(s / reference < 1.5 && reference / s < 1.5, "{scaled:?}");
        }
    }
}

#[test]
fn plus_state_z_average_is_centred() {
    let amp = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let plus = StateVector::from_amplitudes(vec![amp, amp]).unwrap();
    let z = PauliSum::from_terms(1, [(Complex64::new(1.0, 0.0), PauliString::single(0, Pauli::Z))]).unwrap();
    let shots = 8192;
    let seeds = 400;
    let inside = (0..seeds)
        .filter(|&s| expectation_sampled(&plus, &z, shots, s).unwrap().mean.abs() < 5.0 / (shots as f64).sqrt())
        .count();
    assert!(inside as f64 >= 0.99 * seeds as f64, "{inside}/{seeds}");
}

#[test]
fn noise_raises_the_energy_of_optimized_circuits() {
    let noise = NoiseSpec::default_rates();
    for stem in common::H2_POINTS {
        let (h, program) = uccsd_optimum(stem);
        let clean = expectation_exact(&run_statevector(&program).unwrap(), &h).unwrap();
        for spec in [noise.clone(), noise.scaled(0.01)] {
            let noisy = expectation_exact(&run_noisy(&program, &spec).unwrap(), &h).unwrap();
            assert!(noisy >= clean - 1e-9, "{stem}: {noisy} < {clean}");
            assert!(noisy - clean > 1e-5, "{stem}: gap {}", noisy - clean);
        }
    }
}

#[test]
fn zero_rate_noise_reproduces_the_pure_state() {
    let p = common::point("h2_sto3g_r1.00", EncodingKind::JordanWigner);
    let c = build_kupccgsd(4, 2, 2, &p.scheme).unwrap();
    let program = bind_and_compile(&c, &[0.1, -0.2, 0.3, 0.05]).unwrap();
    let pure = run_statevector(&program).unwrap().to_density_matrix().unwrap();
    let rho = run_noisy(&program, &NoiseSpec::default_rates().scaled(0.0)).unwrap();
    assert!(max_abs(&(rho.matrix() - pure.matrix())) < 1e-12);
}

#[test]
fn maximally_mixed_state_gives_the_trace_average() {
    let p = common::point("h2_sto3g_r0.74", EncodingKind::Parity);
    let rho = DensityMatrix::maximally_mixed(4).unwrap();
    let e = expectation_exact(&rho, &p.hamiltonian).unwrap();
    assert!((e - p.hamiltonian.identity_coefficient().re).abs() < 1e-12);
}
