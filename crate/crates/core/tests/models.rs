use approx::assert_relative_eq;
use spinphonon::dynamics::{evolve_lindblad, evolve_unitary, EvolutionSpec};
use spinphonon::frames::SystemParams;
use spinphonon::linalg;
use spinphonon::models::{
    build_anti_jc, build_blue, build_cooling_exact, build_cooling_hp, build_effective_tripartite, build_full, build_jc,
    build_ms_gate, build_red, single_excitation_block, LindbladModel, ModelRecipe,
};
use spinphonon::qops::{OpSum, Operator, Pauli, StateVector};
use spinphonon::Error;

fn rates(gamma_m: f64, gamma: f64, kappa: f64) -> SystemParams {
    SystemParams {
        g: 1.0,
        g0: 1e-3,
        j: 10.0,
        gamma_m_s: gamma_m,
        gamma,
        kappa,
        delta_m: 1.0,
        ..Default::default()
    }
}

fn max_charge_commutator(m: &LindbladModel) -> f64 {
    let h = m.hamiltonian.operator_at(0.0);
    (0..m.charges.len())
        .map(|i| h.commutator(&m.charge_operator(i).unwrap().to_operator()).unwrap().max_abs())
        .fold(0.0, f64::max)
}

#[test]
fn static_models_conserve_their_charges() {
    let p = rates(1e-3, 0.02, 0.1);
    let two = ModelRecipe::new(p.clone(), vec![6]);
    let three = ModelRecipe::new(p.clone(), vec![4, 4]);
    let models = [
        build_jc(&two, 0.3).unwrap(),
        build_anti_jc(&two, 0.3).unwrap(),
        build_blue(&three, 0.2).unwrap(),
        build_red(&three, 0.2).unwrap(),
        build_cooling_exact(&two, 0.1, 3).unwrap(),
        build_cooling_hp(&ModelRecipe::new(p, vec![5, 5]), 0.1, 9).unwrap(),
    ];
    for m in &models {
        assert!(!m.charges.is_empty(), "{}", m.label);
        assert!(max_charge_commutator(m) < 1e-12, "{}", m.label);
        assert!(m.hermiticity_error(&[0.0]) < 1e-10, "{}", m.label);
    }
}

#[test]
fn blue_and_red_sideband_symmetries() {
    let r = ModelRecipe::new(rates(0.0, 0.0, 0.0), vec![4, 4]);
    let blue = build_blue(&r, 0.5).unwrap();
    let red = build_red(&r, 0.5).unwrap();
    let s = blue.space.clone();
    let na = OpSum::number(&s, 0).unwrap();
    let nb = OpSum::number(&s, 1).unwrap();
    let up = OpSum::pauli(&s, 2, Pauli::Z).unwrap() + 0.5 * OpSum::identity(&s);
    let comm = |m: &LindbladModel, q: OpSum| {
        m.hamiltonian.operator_at(0.0).commutator(&q.to_operator()).unwrap().max_abs()
    };
    assert!(comm(&blue, &na + &nb) < 1e-12);
    assert!(comm(&blue, &na + &up) < 1e-12);
    assert!(comm(&blue, &nb - &up) < 1e-12);
    assert!(comm(&blue, &na - &nb) > 0.1);
    assert!(comm(&red, &na - &nb) < 1e-12);
    assert!(comm(&red, &na + &up) < 1e-12);
    assert!(comm(&red, &nb + &up) < 1e-12);
    assert!(comm(&red, &na - &up) > 0.1);
}

#[test]
fn time_dependent_models_are_hermitian() {
    let p = SystemParams {
        omega_p: 2.0,
        pump_amplitude: 0.3,
        delta: 3.0,
        j_m: 0.2,
        omega_c: 5.0,
        omega_a: 4.0,
        kappa: 0.1,
        gamma: 0.02,
        ..rates(1e-3, 0.02, 0.1)
    };
    let ts = [0.0, 0.3 / 2.0, 1.7 / 2.0];
    let full = build_full(&ModelRecipe::new(p.clone(), vec![2; 6])).unwrap();
    assert!(full.hermiticity_error(&ts) < 1e-10);
    let tri = build_effective_tripartite(&ModelRecipe::new(p.clone(), vec![3, 3]), false).unwrap();
    assert!(tri.hermiticity_error(&ts) < 1e-10);
    let rabi = build_effective_tripartite(&ModelRecipe::new(p.clone(), vec![4]), true).unwrap();
    assert!(rabi.hermiticity_error(&ts) < 1e-10);
    let ms = build_ms_gate(&ModelRecipe::new(p, vec![4]), 0.1, 3, 2.0, None).unwrap();
    assert!(ms.hermiticity_error(&ts) < 1e-10);
}

#[test]
fn full_model_decoupled_limit_is_diagonal() {
    let p = SystemParams {
        g: 0.0,
        g0: 0.0,
        j: 1.0,
        j_m: 0.0,
        pump_amplitude: 0.0,
        omega_p: 1.0,
        delta_m: 0.7,
        omega_c: 2.0,
        omega_a: 1.5,
        ..Default::default()
    };
    let m = build_full(&ModelRecipe::new(p.clone(), vec![2; 6])).unwrap();
    let h = m.hamiltonian.operator_at(0.4);
    // only the cavity hopping survives off the diagonal
    let s = &m.space;
    let mut expected = OpSum::zero(s);
    for f in 0..3 {
        expected = expected + p.omega_c * OpSum::number(s, f).unwrap();
    }
    for f in 3..6 {
        expected = expected + p.delta_m * OpSum::number(s, f).unwrap();
    }
    expected = expected + p.omega_a * OpSum::pauli(s, 6, Pauli::Z).unwrap();
    let hop = (p.j * (&OpSum::annihilation(s, 1).unwrap().adjoint()
        * &(&OpSum::annihilation(s, 0).unwrap() + &OpSum::annihilation(s, 2).unwrap())))
        .plus_hc();
    let diff = h.sub(&(expected + hop).to_operator()).unwrap();
    assert!(diff.max_abs() < 1e-14);
}

#[test]
fn full_model_mechanical_single_excitation_spectrum() {
    let p = SystemParams {
        g: 0.0,
        g0: 0.0,
        j: 1e-9,
        j_m: 0.4,
        pump_amplitude: 0.0,
        delta_m: 1.3,
        omega_c: 50.0,
        omega_a: 0.0,
        ..Default::default()
    };
    let m = build_full(&ModelRecipe::new(p, vec![2; 6])).unwrap();
    let block = single_excitation_block(&m);
    let ev = linalg::eigvalsh(&block);
    let s2 = 2f64.sqrt();
    for want in [1.3 - 0.4 * s2, 1.3, 1.3 + 0.4 * s2] {
        assert!(ev.iter().any(|&e| (e - want).abs() < 1e-8), "missing {want} in {ev}");
    }
}

#[test]
fn tripartite_matrix_element() {
    let p = SystemParams {
        g: 1.0,
        g0: 0.05,
        j: 2.0,
        omega_p: 1.0,
        delta: 3.0,
        delta_m: 1.0,
        ..Default::default()
    };
    let m = build_effective_tripartite(&ModelRecipe::new(p, vec![3, 3]), false).unwrap();
    let s = &m.space;
    let h = m.hamiltonian.operator_at(0.0);
    let i = s.index_of(&[0, 0, 1]).unwrap();
    let j = s.index_of(&[1, 1, 0]).unwrap();
    assert_relative_eq!(h.get(i, j).re, 1.0 * 0.05 / 4.0, epsilon = 1e-15);
    assert_relative_eq!(h.get(i, j).im, 0.0);
}

#[test]
fn cooling_single_spin_is_jaynes_cummings() {
    let r = ModelRecipe::new(rates(1e-3, 0.02, 0.0), vec![5]);
    let a = build_jc(&r, 0.37).unwrap();
    let b = build_cooling_exact(&r, 0.37, 1).unwrap();
    assert_eq!(a.space, b.space);
    assert!(a.hamiltonian.operator_at(0.0).max_abs_diff(&b.hamiltonian.operator_at(0.0)).unwrap() == 0.0);
    assert_eq!(a.collapse.len(), b.collapse.len());
    for (x, y) in a.collapse.iter().zip(&b.collapse) {
        assert_eq!(x.rate, y.rate);
        assert!(x.is_static() && y.is_static());
        assert!(x.terms[0].1.to_operator().max_abs_diff(&y.terms[0].1.to_operator()).unwrap() == 0.0);
    }
}

#[test]
fn collective_exchange_frequency() {
    let lam = 0.25;
    let n = 4;
    let m = build_cooling_exact(&ModelRecipe::new(rates(0.0, 0.0, 0.0), vec![3]), lam, n).unwrap();
    let ev = linalg::eigvalsh(&single_excitation_block(&m));
    let top = ev.iter().cloned().fold(f64::MIN, f64::max);
    assert!((top - lam * (n as f64).sqrt()).abs() < 0.02 * lam * (n as f64).sqrt());
}

#[test]
fn builder_guards() {
    let r = ModelRecipe::new(rates(0.0, 0.0, 0.0), vec![3]);
    assert!(matches!(build_ms_gate(&r, 0.1, 1, 1.0, None), Err(Error::InvalidArgument(_))));
    assert!(build_ms_gate(&r, 0.1, 2, 1.0, Some(&[1.0])).is_err());
    assert!(build_cooling_exact(&r, 0.1, 13).is_err());
    let hp = ModelRecipe::new(rates(0.0, 0.0, 0.0), vec![60, 10]).with_occupation(vec![50.0]);
    assert!(matches!(build_cooling_hp(&hp, 0.1, 10), Err(Error::TruncationGuard(_))));
    let ok = ModelRecipe::new(rates(0.0, 0.0, 0.0), vec![93, 10]).with_occupation(vec![50.0]);
    assert!(build_cooling_hp(&ok, 0.1, 10).is_ok());
    let low = ModelRecipe::new(rates(0.0, 0.0, 0.0), vec![3]).with_occupation(vec![1.0]);
    assert!(matches!(build_jc(&low, 0.1), Err(Error::TruncationGuard(_))));
    assert!(build_jc(&ModelRecipe::new(rates(0.0, -1.0, 0.0), vec![4]), 0.1).is_err());
    assert!(build_blue(&r, 0.1).is_err());
}

fn sigma_up(m: &LindbladModel, f: usize) -> OpSum {
    OpSum::pauli(&m.space, f, Pauli::Z).unwrap() + 0.5 * OpSum::identity(&m.space)
}

#[test]
fn jaynes_cummings_full_transfer() {
    let lam = 0.3;
    let m = build_jc(&ModelRecipe::new(rates(0.0, 0.0, 0.0), vec![4]), lam).unwrap();
    let psi = StateVector::basis(&m.space, &[1, 0]).unwrap();
    let t = std::f64::consts::PI / (2.0 * lam);
    let spec = EvolutionSpec::new(0.0, t, 3, psi).observe("up", sigma_up(&m, 1));
    let ts = evolve_unitary(&m, &spec).unwrap();
    assert_relative_eq!(ts.column("up").unwrap()[2], 1.0, epsilon = 1e-12);
}

#[test]
fn red_sideband_two_level_block() {
    let l0 = 0.2;
    let m = build_red(&ModelRecipe::new(rates(0.0, 0.0, 0.0), vec![4, 4]), l0).unwrap();
    let psi = StateVector::basis(&m.space, &[1, 1, 0]).unwrap();
    let pi = std::f64::consts::PI;
    let target = StateVector::basis(&m.space, &[0, 0, 1]).unwrap();
    let projector = |v: &StateVector| {
        OpSum::from_operator(&Operator::new(m.space.clone(), v.to_density().matrix().clone()).unwrap())
    };
    let (p_target, p_init) = (projector(&target), projector(&psi));
    let spec = EvolutionSpec::new(0.0, pi / l0, 101, psi)
        .observe("target", p_target)
        .observe("initial", p_init);
    let ts = evolve_unitary(&m, &spec).unwrap();
    let (a, b) = (ts.column("target").unwrap(), ts.column("initial").unwrap());
    for k in 0..ts.len() {
        assert!((a[k] + b[k] - 1.0).abs() < 1e-12);
        let want = (l0 * ts.times[k]).sin().powi(2);
        assert!((a[k] - want).abs() < 1e-10);
    }
    assert_relative_eq!(a[50], 1.0, epsilon = 1e-12);
}

#[test]
fn beam_splitter_swap() {
    let (lam, n) = (0.1, 16);
    let m = build_cooling_hp(&ModelRecipe::new(rates(0.0, 0.0, 0.0), vec![3, 3]), lam, n).unwrap();
    let psi = StateVector::basis(&m.space, &[1, 0]).unwrap();
    let t = std::f64::consts::PI / (2.0 * lam * (n as f64).sqrt());
    let spec = EvolutionSpec::new(0.0, t, 2, psi)
        .observe("nb", OpSum::number(&m.space, 0).unwrap())
        .observe("nd", OpSum::number(&m.space, 1).unwrap());
    let ts = evolve_unitary(&m, &spec).unwrap();
    assert!(ts.column("nb").unwrap()[1].abs() < 1e-12);
    assert_relative_eq!(ts.column("nd").unwrap()[1], 1.0, epsilon = 1e-12);
}

#[test]
fn purcell_cooling_rate() {
    // 2Λ√N = 0.04 ≪ γ = 1
    let (lam, n, gamma) = (0.01, 4usize, 1.0);
    let m = build_cooling_hp(&ModelRecipe::new(rates(0.0, gamma, 0.0), vec![3, 3]), lam, n).unwrap();
    let psi = StateVector::basis(&m.space, &[1, 0]).unwrap();
    let predicted = 4.0 * lam * lam * n as f64 / gamma;
    let t_end = 2.0 / predicted;
    let spec = EvolutionSpec::new(0.0, t_end, 41, psi).observe("nb", OpSum::number(&m.space, 0).unwrap());
    let ts = evolve_lindblad(&m, &spec).unwrap();
    let nb = ts.column("nb").unwrap();
    // fit ln n over the second half, after the fast transient
    let pts: Vec<(f64, f64)> = (20..41).map(|k| (ts.times[k], nb[k].ln())).collect();
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / pts.len() as f64;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / pts.len() as f64;
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
        / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    let rate = -slope;
    assert!((rate / predicted - 1.0).abs() < 0.1, "rate {rate} vs {predicted}");
}

#[test]
fn ms_gate_large_detuning_is_identity() {
    let m = build_ms_gate(&ModelRecipe::new(rates(0.0, 0.0, 0.0), vec![4]), 0.01, 2, 200.0, None).unwrap();
    let u = spinphonon::dynamics::propagator(&m, 2.0 * std::f64::consts::PI / 200.0).unwrap();
    let d = m.space.dim();
    let id = linalg::CMatrix::identity(d, d);
    // gate phase Λ²τ/δ ≈ 1.6e-8
    assert!(linalg::max_abs_diff(u.matrix(), &id) < 1e-6);
}
