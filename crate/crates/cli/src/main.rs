use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use steklov_cli::{run_scan, run_verify, ExperimentConfig, Family, HarnessError, ResultRecord};
use steklov_core::random::random_weight_detailed;
use steklov_core::zeta::psi_curve_with;
use steklov_core::{
    asymptotic_residuals, classical_inequality_report, estimate_residuals, normalize, steklov_spectrum,
    zeta_a, Gallery, WeightFunction, ZetaEngine,
};

#[derive(Parser)]
#[command(name = "steklov", version, about = "Steklov spectra, zeta functions and zeta-invariants of weights on the circle")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct Common {
    /// Weight JSON file, gallery entry, or `random` (uses --seed).
    #[arg(long, default_value = "disk")]
    weight: String,
    #[arg(long = "M-big", default_value_t = 128)]
    m_big: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file (or directory for verify/scan); stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Steklov eigenvalues with the disk reference.
    Spectrum {
        #[command(flatten)]
        common: Common,
    },
    /// ψ(s) = ζ_a(−s) − 2ζ_R(−s) of the normalized weight, or ζ_a at given points.
    Zeta {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_value = "0,1,2,3,4")]
        s: Vec<f64>,
        /// Evaluate ζ_a(x) instead of ψ.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        x: Vec<f64>,
    },
    /// Zeta-invariants Z_k and the ratios against the candidate lower bounds.
    Invariants {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_value = "1,2")]
        k: Vec<usize>,
        #[arg(long, default_value_t = steklov_core::invariants::DEFAULT_BUDGET)]
        budget: u64,
    },
    /// Verification battery over a family of weights.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Experiment config JSON; without it the battery runs on --weight.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Conjecture scan over seeded random weights.
    Scan {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 100)]
        count: u64,
        #[arg(long = "M", default_value_t = 6)]
        m: usize,
        #[arg(long, default_value_t = 0.2)]
        sigma: f64,
        #[arg(long, default_value_t = 0.5)]
        rho: f64,
        #[arg(long, value_delimiter = ',', default_value = "1,2")]
        k: Vec<usize>,
    },
    /// Lists gallery entries, or prints one as weight JSON.
    Gallery { name: Option<String> },
}

enum Failure {
    Config(String),
    Run(String),
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Config(m) => Failure::Config(m),
            other => Failure::Run(other.to_string()),
        }
    }
}

impl From<steklov_core::Error> for Failure {
    fn from(e: steklov_core::Error) -> Self {
        Failure::Run(e.to_string())
    }
}

fn load_weight(source: &str, seed: u64) -> Result<WeightFunction, Failure> {
    let path = Path::new(source);
    if path.is_file() {
        let text = std::fs::read_to_string(path).map_err(|e| Failure::Config(format!("{source}: {e}")))?;
        return WeightFunction::from_json(&text).map_err(|e| Failure::Config(format!("{source}: {e}")));
    }
    if source == "random" {
        return random_weight_detailed(seed, 8, 0.2, 0.5)
            .map(|r| r.weight)
            .map_err(|e| Failure::Config(e.to_string()));
    }
    source.parse::<Gallery>()
        .map_err(|e| Failure::Config(format!("{e}; expected a file, `random`, or {}", Gallery::HELP)))?
        .weight()
        .map_err(|e| Failure::Config(e.to_string()))
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::Run(format!("{}: {e}", p.display()))),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::Run(e.to_string())),
    }
}

fn csv_text(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory csv");
    for r in rows {
        w.write_record(&r).expect("in-memory csv");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf-8 csv")
}

fn spectrum(c: &Common) -> Result<i32, Failure> {
    let a = load_weight(&c.weight, c.seed)?;
    let sp = steklov_spectrum(&a, c.m_big)?;
    let text = match c.format {
        Format::Csv => {
            let mut buf = Vec::new();
            sp.write_csv(&mut buf)?;
            String::from_utf8(buf).expect("utf-8 csv")
        }
        Format::Json => {
            let classical = classical_inequality_report(&sp).ok();
            serde_json::to_string_pretty(&serde_json::json!({
                "weight": a.meta(),
                "M_big": sp.m_big(),
                "k_trust": sp.k_trust(),
                "length": sp.length(),
                "values": sp.values(),
                "reference": sp.reference(),
                "classical": classical,
                "asymptotics": asymptotic_residuals(&sp),
            }))
            .expect("json")
        }
    };
    emit(&c.out, &text)?;
    Ok(0)
}

fn zeta(c: &Common, s: &[f64], x: &[f64]) -> Result<i32, Failure> {
    let a = load_weight(&c.weight, c.seed)?;
    if !x.is_empty() {
        let values = x
            .iter()
            .map(|&x| Ok((x, zeta_a(&a, x, c.m_big)?)))
            .collect::<Result<Vec<_>, steklov_core::Error>>()?;
        let text = match c.format {
            Format::Csv => csv_text(&["x", "zeta_a"], values.iter().map(|(x, z)| vec![x.to_string(), z.to_string()])),
            Format::Json => serde_json::to_string_pretty(&values).expect("json"),
        };
        emit(&c.out, &text)?;
        return Ok(0);
    }
    let engine = ZetaEngine::new(&normalize(&a)?, c.m_big)?;
    let curve = psi_curve_with(&engine, s)?;
    let text = match c.format {
        Format::Csv => {
            let mut buf = Vec::new();
            curve.write_csv(&mut buf)?;
            String::from_utf8(buf).expect("utf-8 csv")
        }
        Format::Json => curve.to_json(),
    };
    emit(&c.out, &text)?;
    Ok(0)
}

fn invariants(c: &Common, ks: &[usize], budget: u64) -> Result<i32, Failure> {
    let a = load_weight(&c.weight, c.seed)?;
    let reports = ks
        .iter()
        .map(|&k| estimate_residuals(&a, k, budget))
        .collect::<Result<Vec<_>, _>>()?;
    let text = match c.format {
        Format::Csv => {
            let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
            csv_text(
                &["k", "Z_k", "Z_k_imag", "edward", "ratio_cubic", "ratio_power", "ratio_power_of_weight", "lattice_size"],
                reports.iter().map(|r| {
                    vec![
                        r.k.to_string(),
                        r.z_k.to_string(),
                        r.z_k_imag.to_string(),
                        opt(r.edward),
                        opt(r.ratios.cubic),
                        opt(r.ratios.power),
                        opt(r.ratios.power_of_weight),
                        r.lattice_size.to_string(),
                    ]
                }),
            )
        }
        Format::Json => serde_json::to_string_pretty(&reports).expect("json"),
    };
    emit(&c.out, &text)?;
    Ok(0)
}

fn finish(record: &ResultRecord, c: &Common) -> Result<i32, Failure> {
    eprintln!("{}", record.summary());
    if c.format == Format::Json {
        println!("{}", record.to_json());
    } else {
        for check in &record.checks {
            let status = serde_json::to_value(check.status).expect("status");
            println!(
                "{},{},{},{}",
                status.as_str().unwrap_or(""),
                check.name,
                check.weight,
                check.margin.map(|m| m.to_string()).unwrap_or_default()
            );
        }
    }
    Ok(record.exit_code())
}

fn apply_overrides(cfg: &mut ExperimentConfig, c: &Common, explicit_seed: bool, explicit_m_big: bool) {
    if explicit_seed {
        cfg.seed = c.seed;
    }
    if explicit_m_big {
        cfg.m_big = c.m_big;
    }
    if let Some(out) = &c.out {
        cfg.out_dir = out.clone();
    }
}

fn run(cli: Cli, explicit_seed: bool, explicit_m_big: bool) -> Result<i32, Failure> {
    match cli.command {
        Command::Spectrum { common } => spectrum(&common),
        Command::Zeta { common, s, x } => zeta(&common, &s, &x),
        Command::Invariants { common, k, budget } => invariants(&common, &k, budget),
        Command::Verify { common, config } => {
            let mut cfg = match &config {
                Some(p) => ExperimentConfig::load(p)?,
                None => {
                    common.weight.parse::<Gallery>().map_err(|e| Failure::Config(e.to_string()))?;
                    let mut cfg = ExperimentConfig::random_suite(common.seed, 1, "steklov-verify");
                    cfg.family = Family::Gallery {
                        names: vec![common.weight.clone()],
                    };
                    cfg.cross_check_s = vec![1.0, 2.0, 3.0];
                    cfg
                }
            };
            apply_overrides(&mut cfg, &common, explicit_seed, explicit_m_big || config.is_none());
            let record = run_verify(&cfg)?;
            finish(&record, &common)
        }
        Command::Scan {
            common,
            config,
            count,
            m,
            sigma,
            rho,
            k,
        } => {
            let mut cfg = match &config {
                Some(p) => ExperimentConfig::load(p)?,
                None => {
                    let mut cfg = ExperimentConfig::random_suite(common.seed, count, "steklov-scan");
                    cfg.m = m;
                    cfg.m_big = common.m_big;
                    cfg.k_list = k;
                    cfg.family = Family::Random { sigma, rho, count };
                    cfg
                }
            };
            apply_overrides(&mut cfg, &common, explicit_seed, explicit_m_big);
            let (record, _) = run_scan(&cfg)?;
            finish(&record, &common)
        }
        Command::Gallery { name } => match name {
            None => {
                for g in Gallery::standard() {
                    println!("{g}");
                }
                println!("syntax: {}", Gallery::HELP);
                Ok(0)
            }
            Some(n) => {
                let w = load_weight(&n, 0)?;
                println!("{}", w.to_json());
                Ok(0)
            }
        },
    }
}

fn main() -> ExitCode {
    let matches = <Cli as clap::CommandFactory>::command().get_matches();
    let explicit = |id: &str| {
        matches
            .subcommand()
            .and_then(|(_, m)| m.try_contains_id(id).ok().filter(|&b| b).map(|_| m.value_source(id)))
            .flatten()
            == Some(clap::parser::ValueSource::CommandLine)
    };
    let (seed, m_big) = (explicit("seed"), explicit("m_big"));
    let cli = match <Cli as clap::FromArgMatches>::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    let code = match run(cli, seed, m_big) {
        Ok(code) => code,
        Err(Failure::Config(m)) => {
            eprintln!("error: {m}");
            2
        }
        Err(Failure::Run(m)) => {
            eprintln!("error: {m}");
            1
        }
    };
    ExitCode::from(code as u8)
}
