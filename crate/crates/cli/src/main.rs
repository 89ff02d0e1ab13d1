use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use spinphonon::experiments::{
    compute_figure, figure_params, gate, run_custom, Context, FigureId, FigureSpec, NBarReading,
};
use spinphonon::frames::SystemParams;
use spinphonon::oracles::run_suite;
use spinphonon::{Error, Result};

/// Simulation driver for the hybrid NV-spin / optomechanical model.
#[derive(Parser, Debug)]
#[command(name = "spinphonon", version, about)]
struct Cli {
    /// Output directory for CSV tables and the oracle report.
    #[arg(long, short, global = true, env = "SPINPHONON_OUT", default_value = "out")]
    out: PathBuf,

    /// Worker threads; 1 runs everything serially.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run every oracle and write oracle_report.json.
    Verify,
    /// Coupling-enhancement and cooperativity maps.
    Fig2(FigArgs),
    /// JC and anti-JC dynamics.
    Fig3(FigArgs),
    /// Blue and red sideband dynamics.
    Fig4(FigArgs),
    /// Mølmer–Sørensen gate fidelity.
    Fig5(FigArgs),
    /// Collective cooling.
    Fig6(FigArgs),
    /// Run verify and then every figure.
    AllFigs(FigArgs),
    /// Evolve a model described by a TOML config.
    Custom {
        /// Path to the config file.
        config: PathBuf,
    },
    /// Print the resolved parameters of a figure with their SI values.
    Params {
        figure: FigureId,
        #[command(flatten)]
        args: FigArgs,
    },
}

#[derive(Args, Debug, Clone, Default)]
struct FigArgs {
    /// Override a parameter or knob, e.g. --set r=2.
    #[arg(long = "set", value_name = "KEY=VALUE", value_parser = parse_override)]
    overrides: Vec<(String, f64)>,

    /// Allow overrides of pinned values.
    #[arg(long)]
    exploratory: bool,

    /// How to read the Fig. 5 cavity occupation.
    #[arg(long)]
    reading: Option<NBarReading>,

    /// Grid points per axis (Fig. 2) or time samples.
    #[arg(long)]
    grid: Option<usize>,

    /// Relative tolerance of the integrator.
    #[arg(long)]
    rel_tol: Option<f64>,

    /// Absolute tolerance of the integrator.
    #[arg(long)]
    abs_tol: Option<f64>,
}

fn parse_override(s: &str) -> std::result::Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected KEY=VALUE, got '{s}'"))?;
    let v: f64 = v.trim().parse().map_err(|e| format!("value of '{k}': {e}"))?;
    Ok((k.trim().to_string(), v))
}

impl FigArgs {
    fn spec(&self, figure: FigureId, out: &Path) -> FigureSpec {
        let mut spec = FigureSpec::new(figure).with_output_dir(out).exploratory(self.exploratory);
        for (k, v) in &self.overrides {
            spec = spec.with_override(k, *v);
        }
        if let Some(r) = self.reading {
            spec = spec.with_reading(r);
        }
        if let Some(n) = self.grid {
            spec = spec.with_grid(n);
        }
        if let Some(t) = self.rel_tol {
            spec.rel_tol = t;
        }
        if let Some(t) = self.abs_tol {
            spec.abs_tol = t;
        }
        spec
    }
}

fn report_path(out: &Path) -> PathBuf {
    out.join("oracle_report.json")
}

fn verify(out: &Path) -> Result<Context> {
    let suite = run_suite(&[]);
    std::fs::create_dir_all(out)?;
    let path = report_path(out);
    suite.reports.write_json(&path)?;
    eprint!("{}", suite.reports.summary());
    println!("{}", path.display());
    if !suite.reports.passed() {
        return Err(Error::OracleFailure(suite.reports.failures().join(", ")));
    }
    Ok(Context::from_suite(&suite))
}

fn figure(spec: &FigureSpec, ctx: Option<&Context>) -> Result<()> {
    let gated;
    let ctx = match ctx {
        Some(c) => c,
        None => {
            gated = gate(spec.figure)?;
            &gated
        }
    };
    let out = compute_figure(spec, ctx)?;
    for p in out.write(&spec.output_dir)? {
        println!("{}", p.display());
    }
    Ok(())
}

/// Frequencies in MHz below 1 GHz, in GHz above.
fn format_hz(hz: f64) -> String {
    if hz.abs() >= 1e9 {
        format!("{} GHz", round(hz / 1e9))
    } else {
        format!("{} MHz", round(hz / 1e6))
    }
}

fn round(x: f64) -> f64 {
    (x * 1e9).round() / 1e9
}

fn print_params(figure: FigureId, p: &SystemParams) {
    println!("figure: {figure}");
    println!("units: {:?} = 2pi x {:?} Hz", p.units.base, p.units.base_over_2pi_hz);
    let rates = [
        ("g", p.g),
        ("g0", p.g0),
        ("J", p.j),
        ("J_m", p.j_m),
        ("lambda", p.lambda_ref),
        ("omega_m", p.omega_m),
        ("omega_p", p.omega_p),
        ("Omega_p", p.pump_amplitude),
        ("Delta", p.delta),
        ("Delta_m", p.delta_m),
        ("omega_c", p.omega_c),
        ("omega_A", p.omega_a),
        ("gamma", p.gamma),
        ("Gamma_m", p.gamma_m_s),
        ("kappa", p.kappa),
    ];
    for (name, x) in rates {
        if x == 0.0 {
            continue;
        }
        match p.units.to_hz(x) {
            Some(hz) => println!("{name}/2pi = {} ({x})", format_hz(hz)),
            None => println!("{name} = {x}"),
        }
    }
    println!("n_cav = {}", p.n_cav);
    println!("n_spins = {}", p.n_spins);
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidArgument(format!("threads: {e}")))?;
    }
    let out = cli.out.as_path();
    match cli.command {
        Command::Verify => verify(out).map(|_| ()),
        Command::Fig2(a) => figure(&a.spec(FigureId::Fig2a, out), None),
        Command::Fig3(a) => figure(&a.spec(FigureId::Fig3, out), None),
        Command::Fig4(a) => figure(&a.spec(FigureId::Fig4, out), None),
        Command::Fig5(a) => figure(&a.spec(FigureId::Fig5, out), None),
        Command::Fig6(a) => figure(&a.spec(FigureId::Fig6, out), None),
        Command::AllFigs(a) => {
            let ctx = verify(out)?;
            // Fig. 2a computes both Fig. 2 panels
            for id in [FigureId::Fig2a, FigureId::Fig3, FigureId::Fig4, FigureId::Fig5, FigureId::Fig6] {
                figure(&a.spec(id, out), Some(&ctx))?;
            }
            Ok(())
        }
        Command::Custom { config } => {
            let (_, path) = run_custom(&config, out)?;
            println!("{}", path.display());
            Ok(())
        }
        Command::Params { figure, args } => {
            let spec = args.spec(figure, out);
            let p = spec.apply(&figure_params(figure, spec.reading))?;
            print_params(figure, &p);
            Ok(())
        }
    }
}

fn exit_code(e: &Error) -> (u8, &'static str) {
    match e {
        Error::OracleFailure(_) => (1, "oracle"),
        Error::Config(_) | Error::InvalidArgument(_) | Error::UnstableDrive { .. } => (2, "config"),
        Error::IntegrationFailure { .. } | Error::Stiffness { .. } | Error::TruncationGuard(_) => (3, "integration"),
        Error::Io(_) => (3, "io"),
        _ => (3, "internal"),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprintln!("error[usage]: {}", e.to_string().trim_start_matches("error: ").trim_end());
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (code, kind) = exit_code(&e);
            eprintln!("error[{kind}]: {e}");
            ExitCode::from(code)
        }
    }
}
