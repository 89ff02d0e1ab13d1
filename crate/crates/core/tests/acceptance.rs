//! Primary acceptance criteria at the reference parameters. Prints one PASS/FAIL
//! line per criterion; fails unless every failure is listed in
//! `KNOWN_FAILURES`.

use std::io::Write;
use std::time::{Duration, Instant};

use spinphonon::experiments::{
    compute_fig2, fig2_params, fig3_output, fig4_output, fig5_output, fig6_output, fig2_point, fig3_curves, fig4_curves, fig5_run, fig6_run, first_maximum,
    red_transfer_period, Context, FigureId, FigureOutput, NBarReading, FigureSpec, ModelKind, TARGET_GATE_TIME, PERIOD_SAMPLES,
};
use spinphonon::oracles::{oracle_names, run_suite};

/// The reference parameters put the MS loop time at 18 ps (amplitude reading)
/// or 1.8 ns (photon-number reading); neither lies within a factor of 3 of 0.35 ns.
const KNOWN_FAILURES: &[&str] = &["fig5.si_gate_time"];

struct Ledger {
    lines: Vec<(String, bool, String)>,
}

impl Ledger {
    fn record(&mut self, name: &str, passed: bool, detail: String) {
        let line = format!("{} {name}: {detail}", if passed { "PASS" } else { "FAIL" });
        // written past the test harness capture so every line reaches the log
        let _ = writeln!(std::io::stderr(), "{line}");
        self.lines.push((name.to_string(), passed, detail));
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn metadata_values(outs: &[&FigureOutput], suffix: &str) -> Vec<f64> {
    outs.iter()
        .flat_map(|o| o.tables.iter())
        .flat_map(|(_, t)| t.metadata.iter())
        .filter(|(k, _)| k.ends_with(suffix))
        .filter_map(|(_, v)| v.parse::<f64>().ok())
        .collect()
}

fn secs(d: Duration) -> String {
    format!("{:.1} s", d.as_secs_f64())
}

#[test]
fn primary_criteria() {
    let mut led = Ledger { lines: Vec::new() };

    // oracle suite
    let t0 = Instant::now();
    let suite = run_suite(&[]);
    let ctx = Context::from_suite(&suite);
    let names: Vec<String> = suite.reports.reports.iter().map(|r| r.name.clone()).collect();
    assert_eq!(names, oracle_names());
    for r in &suite.reports.reports {
        led.record(
            &format!("oracles.{}", r.name),
            r.passed,
            format!("deviation {:.3e} <= {:.1e}", r.deviation, r.tolerance),
        );
    }
    let cal = suite.calibration.clone().expect("ghz calibration ran");
    led.record(
        "oracles.suite",
        suite.reports.passed(),
        format!("{} oracles, GHZ fidelity {:.8} at theta {:.6}, {}", names.len(), cal.fidelity, cal.theta, secs(t0.elapsed())),
    );

    // fig2
    let p = fig2_params();
    let t0 = Instant::now();
    let fig2 = compute_fig2(&FigureSpec::new(FigureId::Fig2a), &ctx).unwrap();
    let elapsed = t0.elapsed();
    let (ratio0, _) = fig2_point(&p, 0.0, 1.0).unwrap();
    let (ratio4, coop4) = fig2_point(&p, 4.0, 1e4).unwrap();
    // independent arithmetic: Λ/λ = √n_cav g g0 e^r / (4 J λ)
    let want4 = 1e4f64.sqrt() * 1.0 * 1e-3 * 4f64.exp() / (4.0 * 10.0) / 1e-4;
    let want_c = (want4 * 1e-4).powi(2) / (1e-3 * 15e-3);
    let monotone = fig2.tables.iter().all(|(_, t)| t.metadata["monotone"] == "true");
    led.record(
        "fig2.reference_points",
        rel(ratio0, 0.25) < 1e-9 && rel(ratio4, want4) < 1e-9 && rel(coop4, want_c) < 1e-9 && rel(ratio4, 1365.0) < 1e-3 && rel(coop4, 1.24e3) < 5e-3,
        format!("ratio(0,1) = {ratio0}, ratio(4,1e4) = {ratio4:.4}, C = {coop4:.4}"),
    );
    led.record("fig2.monotone", monotone, "both 61x61 grids strictly increasing on both axes".into());
    led.record("fig2.runtime", elapsed < Duration::from_secs(1), secs(elapsed));

    // fig3
    let spec3 = FigureSpec::new(FigureId::Fig3);
    let t0 = Instant::now();
    let curves3 = fig3_curves(&spec3).unwrap();
    let per_curve = t0.elapsed() / curves3.len() as u32;
    let fig3 = fig3_output(&spec3, &ctx, &curves3).unwrap();
    let strongest = curves3
        .iter()
        .filter(|c| c.kind == ModelKind::Jc)
        .max_by(|a, b| a.coupling.total_cmp(&b.coupling))
        .unwrap();
    let expected = std::f64::consts::PI / (2.0 * strongest.coupling);
    let peak = first_maximum(strongest.times(), strongest.column("sigma_z").unwrap()).unwrap_or(f64::NAN);
    led.record(
        "fig3.first_maximum",
        rel(peak, expected) < 0.02,
        format!(
            "n_cav {:e}, r {}: peak at g t = {peak:.5}, pi/(2 Lambda) = {expected:.5}, error {:.2e}",
            strongest.n_cav,
            strongest.r,
            rel(peak, expected)
        ),
    );
    for c in curves3.iter().filter(|c| c.kind == ModelKind::Jc && !std::ptr::eq(*c, strongest)) {
        let e = std::f64::consts::PI / (2.0 * c.coupling);
        let note = match first_maximum(c.times(), c.column("sigma_z").unwrap()) {
            Some(pk) => format!("error {:.2e}", rel(pk, e)),
            None => "no maximum (overdamped)".into(),
        };
        let _ = writeln!(
            std::io::stderr(),
            "     fig3 jc n_cav {:e} r {}: Lambda/gamma = {:.3}, {note}",
            c.n_cav,
            c.r,
            c.coupling / 0.02
        );
    }
    let bound = curves3
        .iter()
        .filter(|c| c.kind == ModelKind::Jc)
        .flat_map(|c| {
            let nb = c.column("n_b").unwrap();
            let sz = c.column("sigma_z").unwrap();
            nb.iter().zip(sz).map(|(n, s)| n + s + 0.5).collect::<Vec<_>>()
        })
        .fold(f64::MIN, f64::max);
    led.record("fig3.excitation_bound", bound <= 1.0 + 1e-3, format!("max <n> + <sz> + 1/2 = {bound:.8}"));
    let growth = curves3
        .iter()
        .filter(|c| c.kind == ModelKind::AntiJc)
        .map(|c| c.run.max_top_population)
        .fold(0.0, f64::max);
    led.record("fig3.anti_jc_guard", growth <= 1e-4, format!("max top-level population {growth:.2e}"));
    led.record("fig3.runtime", per_curve < Duration::from_secs(60), format!("{} per curve", secs(per_curve)));

    // fig4
    let spec4 = FigureSpec::new(FigureId::Fig4);
    let t0 = Instant::now();
    let curves4 = fig4_curves(&spec4).unwrap();
    let mut periods = Vec::new();
    for c in curves4.iter().filter(|c| c.kind == ModelKind::Red) {
        let (m, e) = red_transfer_period(&c.run.recipe.params, PERIOD_SAMPLES).unwrap();
        periods.push((c.r, m, e));
    }
    let panel_time = t0.elapsed() / 6;
    let worst = periods.iter().map(|(_, m, e)| rel(*m, *e)).fold(0.0, f64::max);
    led.record(
        "fig4.red_period",
        worst < 0.02,
        format!(
            "dissipation-free transfer period vs pi/Lambda0, worst error {worst:.2e} over r = {:?}",
            periods.iter().map(|p| p.0).collect::<Vec<_>>()
        ),
    );
    let p0 = periods.iter().find(|p| p.0 == 0.0).unwrap().1;
    let p4 = periods.iter().find(|p| p.0 == 4.0).unwrap().1;
    let speedup = p0 / p4;
    led.record(
        "fig4.speedup",
        rel(speedup, 4f64.exp()) < 0.01,
        format!("T(r=0)/T(r=4) = {speedup:.4}, e^4 = {:.4}", 4f64.exp()),
    );
    let mut worst_resid: f64 = 0.0;
    let mut raw: f64 = 0.0;
    for c in curves4.iter().filter(|c| c.kind == ModelKind::Blue) {
        let p = &c.run.recipe.params;
        let t = c.times();
        let na = c.column("n_a").unwrap();
        let nb = c.column("n_b").unwrap();
        let q: Vec<f64> = na.iter().zip(nb).map(|(a, b)| a + b).collect();
        let loss: Vec<f64> = na.iter().zip(nb).map(|(a, b)| p.kappa * a + p.gamma_m_s * b).collect();
        let flow = spinphonon::experiments::cumulative_trapezoid(t, &loss);
        for i in 0..t.len() {
            worst_resid = worst_resid.max((q[i] - q[0] + flow[i]).abs());
            raw = raw.max((q[i] - q[0]).abs());
        }
    }
    led.record(
        "fig4.blue_conserved",
        worst_resid < 5e-3,
        format!("n_a + n_b with integrated losses restored: drift {worst_resid:.2e} (raw {raw:.3})"),
    );
    let fig4 = fig4_output(&spec4, &ctx, &curves4).unwrap();
    led.record("fig4.runtime", panel_time < Duration::from_secs(120), format!("{} per curve", secs(panel_time)));

    // fig5
    let spec5 = FigureSpec::new(FigureId::Fig5);
    let t0 = Instant::now();
    let gate = fig5_run(&spec5, &ctx).unwrap();
    let fig5_time = t0.elapsed();
    let fig5 = fig5_output(&spec5, &ctx, &gate).unwrap();
    led.record(
        "fig5.fidelity",
        gate.fidelity_at_tau >= 0.98,
        format!(
            "F(tau) = {:.5} (peak {:.5}, closed {:.8}, closed form {:.8})",
            gate.fidelity_at_tau, gate.peak_fidelity, gate.fidelity_unitary, gate.fidelity_magnus
        ),
    );
    let f0 = gate.run.series.column("fidelity").unwrap()[0];
    led.record("fig5.initial_overlap", (f0 - 0.5).abs() < 1e-12, format!("F(0) = {f0}"));
    let magnus = suite
        .reports
        .get("magnus_ms_n4")
        .and_then(|r| r.check("deficit_at_ratio_0.02"))
        .expect("magnus check");
    led.record(
        "fig5.magnus_deficit",
        magnus.deviation < 1e-3,
        format!("deficit {:.2e} at Lambda/Delta = 0.02", magnus.deviation),
    );
    let tau_si = gate.tau_si.unwrap();
    let factor = (tau_si / TARGET_GATE_TIME).max(TARGET_GATE_TIME / tau_si);
    let alt = fig5_run(&spec5.clone().with_reading(NBarReading::Intensity), &ctx).unwrap();
    let alt_si = alt.tau_si.unwrap();
    led.record(
        "fig5.si_gate_time",
        factor <= 3.0,
        format!(
            "tau = {:.3e} s (amplitude reading), {:.3e} s (photon-number reading) vs 3.5e-10 s; off by {factor:.1}x",
            tau_si, alt_si
        ),
    );
    led.record("fig5.runtime", fig5_time < Duration::from_secs(600), secs(fig5_time));

    // fig6
    let spec6 = FigureSpec::new(FigureId::Fig6);
    let t0 = Instant::now();
    let cool = fig6_run(&spec6).unwrap();
    let fig6_time = t0.elapsed();
    let t = cool.times();
    let i10 = t.iter().position(|&x| x == 10.0).expect("sample at gamma t = 10");
    let thermal = cool.thermal()[i10];
    let coherent = cool.coherent_n()[i10];
    led.record(
        "fig6.ground_state",
        thermal < 0.5 && coherent < 0.5,
        format!(
            "<n>(gamma t = 10) = {thermal:.4} thermal, {coherent:.4} coherent; N = {}, Lambda sqrt N = {:.3} gamma",
            cool.n_spins,
            cool.coupling * (cool.n_spins as f64).sqrt()
        ),
    );
    led.record(
        "fig6.control",
        cool.control_error() < 1e-3,
        format!("Lambda = 0 vs 50 exp(-Gamma t): relative error {:.2e}", cool.control_error()),
    );
    let _ = writeln!(
        std::io::stderr(),
        "     fig6 linearity |F2 - 2F1| = {:.2e}, |coherent - 50 F1| = {:.2e}, coarse-grained monotone: {}",
        cool.linearity_error(),
        cool.coherent_vs_thermal(),
        cool.monotone_after_first_swap(&cool.thermal())
    );
    led.record("fig6.runtime", fig6_time < Duration::from_secs(1800), secs(fig6_time));
    let fig6 = fig6_output(&spec6, &ctx, &cool).unwrap();

    // state validity and convergence gates over every master-equation run
    let outs = [&fig3, &fig4, &fig5, &fig6];
    let trace = metadata_values(&outs, "max_trace_error").into_iter().fold(0.0, f64::max);
    let herm = metadata_values(&outs, "max_hermiticity_error").into_iter().fold(0.0, f64::max);
    let eig = metadata_values(&outs, "min_eigenvalue").into_iter().fold(f64::INFINITY, f64::min);
    let tol = metadata_values(&outs, "gate.tolerance_drift").into_iter().fold(0.0, f64::max);
    let trunc = metadata_values(&outs, "gate.truncation_drift").into_iter().fold(0.0, f64::max);
    let converged = outs.iter().all(|o| o.converged());
    led.record(
        "validity.states",
        trace < 1e-6 && herm < 1e-8 && eig >= -1e-6,
        format!("|tr - 1| <= {trace:.1e}, hermiticity <= {herm:.1e}, min eigenvalue {eig:.1e}"),
    );
    led.record(
        "validity.gates",
        tol < 1e-5 && trunc < 1e-4 && converged,
        format!("tolerance-halving drift {tol:.1e}, truncation+5 drift {trunc:.1e}"),
    );
    let _ = fig2;

    let failed: Vec<&str> = led.lines.iter().filter(|l| !l.1).map(|l| l.0.as_str()).collect();
    let unexpected: Vec<&&str> = failed.iter().filter(|f| !KNOWN_FAILURES.contains(f)).collect();
    let _ = writeln!(
        std::io::stderr(),
        "{} criteria, {} passed, {} failed (known: {:?})",
        led.lines.len(),
        led.lines.len() - failed.len(),
        failed.len(),
        KNOWN_FAILURES
    );
    assert!(unexpected.is_empty(), "unexpected failures: {unexpected:?}");
}
