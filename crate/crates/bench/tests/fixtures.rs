use spinphonon::dynamics::evolve_lindblad;
use spinphonon_bench::{anti_jc, cooling, jc};

#[test]
fn fixtures_build_and_evaluate() {
    let mut scratch = Vec::new();
    for f in [jc(6).unwrap(), anti_jc(30).unwrap(), cooling(20, 1).unwrap()] {
        let dy = f.rhs(&mut scratch);
        assert_eq!(dy.len(), f.y0.len());
        assert!(dy.iter().all(|z| z.re.is_finite() && z.im.is_finite()));
        assert!(dy.iter().any(|z| z.norm() > 0.0));
    }
}

#[test]
fn short_evolution_keeps_trace() {
    let f = jc(6).unwrap();
    let ts = evolve_lindblad(&f.model, &f.spec(1.0, 5)).unwrap();
    assert_eq!(ts.len(), 5);
}
