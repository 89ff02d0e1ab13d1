use approx::assert_relative_eq;
use proptest::prelude::*;
use spinphonon::dynamics::{
    convergence_gates, evolve_lindblad, evolve_unitary, max_drift, propagator, propagator_between, EvolutionSpec,
    InitialState,
};
use spinphonon::frames::SystemParams;
use spinphonon::linalg::{self, c, CMatrix};
use spinphonon::models::{
    build_blue, build_cooling_exact, build_cooling_hp, build_cooling_hp_rotating, build_effective_tripartite, build_jc,
    build_ms_gate, cooling_current, cooling_lab_populations, Hamiltonian, LindbladModel, ModelRecipe,
};
use spinphonon::qops::{coherent, DensityMatrix, Factor, HilbertSpace, OpSum, Pauli, StateVector};
use spinphonon::Error;

fn params(gamma_m: f64, gamma: f64) -> SystemParams {
    SystemParams {
        gamma_m_s: gamma_m,
        gamma,
        delta_m: 1.0,
        ..Default::default()
    }
}

#[test]
fn amplitude_damping() {
    let s = HilbertSpace::qubits(1).unwrap();
    let gamma = 0.7;
    let m = LindbladModel::new(&s, Hamiltonian::new(&s), "decay")
        .with_collapse(gamma, OpSum::pauli(&s, 0, Pauli::Minus).unwrap(), "gamma")
        .unwrap();
    let spec = EvolutionSpec::new(0.0, 5.0, 26, StateVector::basis(&s, &[1]).unwrap())
        .observe("sz", OpSum::pauli(&s, 0, Pauli::Z).unwrap());
    let ts = evolve_lindblad(&m, &spec).unwrap();
    for (t, v) in ts.times.iter().zip(ts.column("sz").unwrap()) {
        assert!((v - ((-gamma * t).exp() - 0.5)).abs() < 1e-8, "t = {t}");
    }
}

#[test]
fn damped_oscillator() {
    let s = HilbertSpace::new(vec![Factor::Boson(8)]).unwrap();
    let g = 0.3;
    let m = LindbladModel::new(&s, Hamiltonian::constant(1.1 * OpSum::number(&s, 0).unwrap()), "osc")
        .with_collapse(g, OpSum::annihilation(&s, 0).unwrap(), "gamma")
        .unwrap();
    let spec = EvolutionSpec::new(0.0, 10.0, 21, StateVector::basis(&s, &[5]).unwrap())
        .observe("n", OpSum::number(&s, 0).unwrap());
    let ts = evolve_lindblad(&m, &spec).unwrap();
    for (t, v) in ts.times.iter().zip(ts.column("n").unwrap()) {
        assert!((v - 5.0 * (-g * t).exp()).abs() < 1e-7, "t = {t}");
    }
}

#[test]
fn closed_lindblad_matches_unitary() {
    let m = build_jc(&ModelRecipe::new(params(0.0, 0.0), vec![5]), 0.4).unwrap();
    let psi = StateVector::basis(&m.space, &[2, 0]).unwrap();
    let spec = EvolutionSpec::new(0.0, 12.0, 31, psi)
        .observe("n", OpSum::number(&m.space, 0).unwrap())
        .observe("sz", OpSum::pauli(&m.space, 1, Pauli::Z).unwrap());
    let a = evolve_lindblad(&m, &spec).unwrap();
    let b = evolve_unitary(&m, &spec).unwrap();
    assert!(max_drift(&a, &b).unwrap() < 1e-6);
    // sector and dense runs differ only by integrator error
    let tight = spec.with_tolerances(1e-11, 1e-13);
    let sectors = evolve_lindblad(&m, &tight).unwrap();
    let dense = evolve_lindblad(&m, &tight.dense()).unwrap();
    assert!(max_drift(&sectors, &dense).unwrap() < 1e-8);
}

#[test]
fn time_dependent_closed_runs_agree() {
    let p = SystemParams {
        g: 1.0,
        g0: 0.04,
        j: 1.0,
        delta: 3.0,
        delta_m: 1.0,
        omega_p: 2.0,
        ..Default::default()
    };
    let m = build_effective_tripartite(&ModelRecipe::new(p, vec![3, 3]), false).unwrap();
    let psi = StateVector::basis(&m.space, &[1, 1, 0]).unwrap();
    let spec = EvolutionSpec::new(0.0, 20.0, 11, psi).observe("n", OpSum::number(&m.space, 1).unwrap());
    let a = evolve_lindblad(&m, &spec).unwrap();
    let b = evolve_unitary(&m, &spec).unwrap();
    assert!(max_drift(&a, &b).unwrap() < 1e-6);
}

#[test]
fn sectors_match_dense_with_dissipation() {
    let p = SystemParams {
        kappa: 0.1,
        ..params(0.05, 0.2)
    };
    let m = build_blue(&ModelRecipe::new(p, vec![4, 4]), 0.3).unwrap();
    let psi = StateVector::basis(&m.space, &[1, 1, 0]).unwrap();
    let spec = EvolutionSpec::new(0.0, 15.0, 16, psi)
        .with_tolerances(1e-11, 1e-13)
        .observe("na", OpSum::number(&m.space, 0).unwrap())
        .observe("nb", OpSum::number(&m.space, 1).unwrap())
        .observe("sz", OpSum::pauli(&m.space, 2, Pauli::Z).unwrap());
    let a = evolve_lindblad(&m, &spec).unwrap();
    let b = evolve_lindblad(&m, &spec.clone().dense()).unwrap();
    assert!(a.metadata["sectors"].parse::<usize>().unwrap() > 1);
    assert_eq!(b.metadata["sectors"], "1");
    assert!(max_drift(&a, &b).unwrap() < 1e-8);
}

#[test]
fn coherent_initial_state_in_sectors() {
    let lam = 0.2;
    let m = build_cooling_exact(&ModelRecipe::new(params(0.01, 0.3), vec![12]), lam, 2).unwrap();
    let b = coherent(12, c(1.2, 0.4));
    let g = spinphonon::qops::fock(2, 0);
    let psi = StateVector::product(&m.space, &[b, g.clone(), g]).unwrap();
    let spec = EvolutionSpec::new(0.0, 10.0, 11, psi).observe("n", OpSum::number(&m.space, 0).unwrap());
    let a = evolve_lindblad(&m, &spec).unwrap();
    let d = evolve_lindblad(&m, &spec.clone().dense()).unwrap();
    assert!(max_drift(&a, &d).unwrap() < 1e-8);
}

#[test]
fn sector_mixing_observable_rejected() {
    let m = build_jc(&ModelRecipe::new(params(0.0, 0.0), vec![4]), 0.4).unwrap();
    let psi = StateVector::basis(&m.space, &[1, 0]).unwrap();
    let spec = EvolutionSpec::new(0.0, 1.0, 3, psi).observe("x", OpSum::pauli(&m.space, 1, Pauli::X).unwrap());
    assert!(evolve_lindblad(&m, &spec).is_err());
    assert!(evolve_lindblad(&m, &spec.dense()).is_ok());
}

#[test]
fn spec_validation() {
    let s = HilbertSpace::qubits(1).unwrap();
    let m = LindbladModel::new(&s, Hamiltonian::new(&s), "free");
    let psi = StateVector::basis(&s, &[0]).unwrap();
    assert!(matches!(
        evolve_lindblad(&m, &EvolutionSpec::new(1.0, 1.0, 3, psi.clone())),
        Err(Error::InvalidArgument(_))
    ));
    assert!(evolve_lindblad(&m, &EvolutionSpec::new(0.0, 1.0, 1, psi.clone())).is_err());
    let loose = EvolutionSpec::new(0.0, 1.0, 3, psi.clone()).with_tolerances(1e-2, 1e-10);
    assert!(evolve_lindblad(&m, &loose).is_err());
    let mixed = InitialState::Mixed(DensityMatrix::maximally_mixed(&s));
    assert!(evolve_unitary(&m, &EvolutionSpec::new(0.0, 1.0, 3, mixed)).is_err());
    let other = HilbertSpace::qubits(2).unwrap();
    let wrong = EvolutionSpec::new(0.0, 1.0, 3, psi).observe("z", OpSum::pauli(&other, 0, Pauli::Z).unwrap());
    assert!(matches!(evolve_lindblad(&m, &wrong), Err(Error::SpaceMismatch(_))));
}

#[test]
fn free_evolution_is_constant() {
    let s = HilbertSpace::new(vec![Factor::Boson(4), Factor::Qubit]).unwrap();
    let m = LindbladModel::new(&s, Hamiltonian::new(&s), "zero");
    let psi = StateVector::normalized(s.clone(), linalg::CVector::from_fn(8, |i, _| c(i as f64, 1.0))).unwrap();
    let spec = EvolutionSpec::new(0.0, 3.0, 4, psi).observe("n", OpSum::number(&s, 0).unwrap());
    let ts = evolve_unitary(&m, &spec).unwrap();
    let n = ts.column("n").unwrap();
    assert!(n.iter().all(|v| (v - n[0]).abs() < 1e-14));
}

#[test]
fn unitary_conserves_excitations() {
    let m = build_cooling_exact(&ModelRecipe::new(params(0.0, 0.0), vec![5]), 0.3, 3).unwrap();
    let psi = StateVector::basis(&m.space, &[2, 0, 1, 0]).unwrap();
    let spec = EvolutionSpec::new(0.0, 30.0, 61, psi)
        .observe("q", m.charge_operator(0).unwrap())
        .observe("n", OpSum::number(&m.space, 0).unwrap());
    let ts = evolve_unitary(&m, &spec).unwrap();
    assert!(ts.column("q").unwrap().iter().all(|v| (v - 3.0).abs() < 1e-6));
    let n = ts.column("n").unwrap();
    assert!(n.iter().cloned().fold(f64::MAX, f64::min) < 1.5);
}

#[test]
fn propagator_properties() {
    let m = build_ms_gate(&ModelRecipe::new(params(0.0, 0.0), vec![5]), 0.1, 2, 1.0, None).unwrap();
    let d = m.space.dim();
    let id = CMatrix::identity(d, d);
    assert!(linalg::max_abs_diff(propagator(&m, 0.0).unwrap().matrix(), &id) < 1e-15);
    let (t1, t2) = (0.7, 1.9);
    let u1 = propagator(&m, t1).unwrap();
    let u12 = propagator_between(&m, t1, t1 + t2).unwrap();
    let u = propagator(&m, t1 + t2).unwrap();
    let composed = u12.matmul(&u1).unwrap();
    assert!(composed.max_abs_diff(&u).unwrap() < 1e-7);

    let jc = build_jc(&ModelRecipe::new(params(0.0, 0.0), vec![4]), 0.3).unwrap();
    let h = jc.hamiltonian.operator_at(0.0);
    let (vals, vecs) = linalg::eigh(h.matrix());
    let t = 2.3;
    let diag = CMatrix::from_diagonal(&vals.map(|e| c(0.0, -e * t).exp()));
    let want = &vecs * diag * vecs.adjoint();
    assert!(linalg::max_abs_diff(propagator(&jc, t).unwrap().matrix(), &want) < 1e-9);
}

#[test]
fn gates_report_drift() {
    let run = |extra: usize, scale: f64| {
        let m = build_jc(&ModelRecipe::new(params(1e-3, 0.02), vec![6 + extra]), 0.3).unwrap();
        let psi = StateVector::basis(&m.space, &[1, 0]).unwrap();
        let spec = EvolutionSpec::new(0.0, 20.0, 21, psi)
            .with_tolerances(1e-8 * scale, 1e-10 * scale)
            .observe("n", OpSum::number(&m.space, 0).unwrap());
        evolve_lindblad(&m, &spec)
    };
    let (ts, gate) = convergence_gates(run, true).unwrap();
    assert!(gate.converged(), "{gate:?}");
    assert_eq!(ts.metadata["converged"], "true");
    assert!(ts.metadata.contains_key("gate.truncation_drift"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn global_phase_is_invisible(shift in -5.0f64..5.0, lam in 0.05f64..0.5) {
        let r = ModelRecipe::new(params(0.02, 0.1), vec![4]);
        let m = build_jc(&r, lam).unwrap();
        let mut shifted = m.clone();
        shifted.hamiltonian.push(
            spinphonon::models::Coefficient::Const(c(shift, 0.0)),
            OpSum::identity(&m.space),
        );
        let psi = StateVector::basis(&m.space, &[1, 0]).unwrap();
        let spec = EvolutionSpec::new(0.0, 10.0, 11, psi).observe("n", OpSum::number(&m.space, 0).unwrap());
        let a = evolve_lindblad(&m, &spec).unwrap();
        let b = evolve_lindblad(&shifted, &spec).unwrap();
        prop_assert!(max_drift(&a, &b).unwrap() < 1e-8);
    }

    #[test]
    fn runs_stay_physical(lam in 0.05f64..1.0, gm in 0.0f64..0.3, g in 0.0f64..0.3, k in 0usize..3) {
        let m = build_jc(&ModelRecipe::new(params(gm, g), vec![5]), lam).unwrap();
        let psi = StateVector::basis(&m.space, &[k, 1]).unwrap();
        let spec = EvolutionSpec::new(0.0, 8.0, 9, psi).observe("n", OpSum::number(&m.space, 0).unwrap());
        let ts = evolve_lindblad(&m, &spec).unwrap();
        let tr: f64 = ts.metadata["max_trace_error"].parse().unwrap();
        let herm: f64 = ts.metadata["max_hermiticity_error"].parse().unwrap();
        let eig: f64 = ts.metadata["min_eigenvalue"].parse().unwrap();
        prop_assert!(tr < 1e-6 && herm < 1e-8 && eig > -1e-6);
    }

    #[test]
    fn lindblad_is_deterministic(lam in 0.05f64..1.0) {
        let m = build_jc(&ModelRecipe::new(params(0.01, 0.05), vec![4]), lam).unwrap();
        let psi = StateVector::basis(&m.space, &[1, 0]).unwrap();
        let spec = EvolutionSpec::new(0.0, 5.0, 6, psi).observe("n", OpSum::number(&m.space, 0).unwrap());
        let a = evolve_lindblad(&m, &spec).unwrap();
        let b = evolve_lindblad(&m, &spec).unwrap();
        prop_assert_eq!(a.columns, b.columns);
    }
}

#[test]
fn excitation_bound_under_decay() {
    let m = build_jc(&ModelRecipe::new(params(1e-3, 0.02), vec![6]), 0.3).unwrap();
    let psi = StateVector::basis(&m.space, &[1, 0]).unwrap();
    let spec = EvolutionSpec::new(0.0, 40.0, 201, psi).observe("q", m.charge_operator(0).unwrap());
    let ts = evolve_lindblad(&m, &spec).unwrap();
    let q = ts.column("q").unwrap();
    assert!(q.iter().all(|v| *v <= 1.0 + 1e-9));
    assert_relative_eq!(q[0], 1.0, epsilon = 1e-14);
}

#[test]
fn rotating_cooling_frame_matches_lab_frame() {
    let (lam, n_spins, tr) = (0.3, 16, 10);
    let recipe = ModelRecipe::new(params(0.05, 1.0), vec![tr, tr]);
    let lab = build_cooling_hp(&recipe, lam, n_spins).unwrap();
    let rot = build_cooling_hp_rotating(&recipe, lam, n_spins).unwrap();
    let psi = StateVector::product(&lab.space, &[coherent(tr, c(1.1, -0.5)), spinphonon::qops::fock(tr, 0)]).unwrap();
    let spec = |m: &LindbladModel| {
        EvolutionSpec::new(0.0, 4.0, 41, psi.clone())
            .with_tolerances(1e-11, 1e-13)
            .observe("nb", OpSum::number(&m.space, 0).unwrap())
            .observe("nd", OpSum::number(&m.space, 1).unwrap())
            .observe("p", cooling_current(&m.space).unwrap())
    };
    let a = evolve_lindblad(&lab, &spec(&lab)).unwrap();
    let b = evolve_lindblad(&rot, &spec(&rot)).unwrap();
    let omega = lam * (n_spins as f64).sqrt();
    let mut worst = 0.0f64;
    for (i, &t) in a.times.iter().enumerate() {
        let col = |ts: &spinphonon::dynamics::TimeSeries, n: &str| ts.column(n).unwrap()[i];
        let (nb, nd) = cooling_lab_populations(omega, t, col(&b, "nb"), col(&b, "nd"), col(&b, "p"));
        worst = worst.max((nb - col(&a, "nb")).abs()).max((nd - col(&a, "nd")).abs());
    }
    assert!(worst < 1e-8, "{worst}");
    // the lab run rotates population into d; the frame change must not be trivial
    assert!(a.column("nd").unwrap().iter().cloned().fold(0.0, f64::max) > 0.3);
}

#[test]
fn modulated_collapses_agree_in_sectors_and_dense() {
    let recipe = ModelRecipe::new(params(0.2, 0.7), vec![5, 5]);
    let m = build_cooling_hp_rotating(&recipe, 0.4, 4).unwrap();
    let psi = StateVector::basis(&m.space, &[3, 1]).unwrap();
    let spec = EvolutionSpec::new(0.0, 5.0, 11, psi)
        .with_tolerances(1e-11, 1e-13)
        .observe("nb", OpSum::number(&m.space, 0).unwrap())
        .observe("p", cooling_current(&m.space).unwrap());
    let a = evolve_lindblad(&m, &spec).unwrap();
    let d = evolve_lindblad(&m, &spec.clone().dense()).unwrap();
    assert!(max_drift(&a, &d).unwrap() < 1e-8);
    // total excitation decays
    assert!(a.column("nb").unwrap().last().unwrap() < &3.0);
}

#[test]
fn positivity_certificate_matches_spectrum() {
    let m = build_jc(&ModelRecipe::new(params(0.1, 0.1), vec![3]), 0.2).unwrap();
    let init: InitialState = StateVector::basis(&m.space, &[1, 0]).unwrap().into();
    let blocks = spinphonon::dynamics::Blocks::new(&m, &init, false).unwrap();
    let mut y = blocks.initial(&m.space, &init).unwrap();
    let d = m.space.dim();
    assert!(blocks.validity_with(&y, Some(1e-6)).min_eigenvalue.is_infinite());
    // move weight so that one diagonal entry becomes −1e-3
    y[0] -= c(1e-3, 0.0);
    y[d + 1] += c(1e-3, 0.0);
    let certified = blocks.validity_with(&y, Some(1e-6));
    let exact = blocks.validity(&y);
    assert_relative_eq!(certified.min_eigenvalue, -1e-3, max_relative = 1e-9);
    assert_eq!(certified.min_eigenvalue, exact.min_eigenvalue);
}
