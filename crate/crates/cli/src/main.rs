use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use lbc_core::experiments::acceptance::{run_criterion, CRITERIA};
use lbc_core::experiments::{
    convergence_csv, fractions_csv, lbc_comparison_csv, price, run_convergence, run_fractions,
    run_lbc_comparison, run_stability, stability_csv, ExperimentPreset,
};
use lbc_core::table::CsvTable;
use lbc_core::{BoundaryTreatment, SchemeKind};

#[derive(Parser)]
#[command(
    name = "lbc",
    version,
    about = "Black-Scholes discretizations with a linear boundary condition"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// max_t ||e^{tM}||_inf for t = 0..100 per scheme, treatment and m.
    Stability(Common),
    /// Final-time errors against the exact call and fitted orders.
    Convergence(Common),
    /// Share of grid points where the mixed schemes use the forward stencil.
    Fractions(Common),
    /// Paired LBC1/LBC2 errors.
    LbcCompare(Common),
    /// Prices the call at T and tabulates the error at every node.
    Price(Common),
    /// Runs the acceptance checks; exits nonzero if any fails.
    Verify(VerifyArgs),
}

#[derive(Args, Default)]
struct Common {
    /// Risk-free rate.
    #[arg(long = "r")]
    r: Option<f64>,
    /// Volatility.
    #[arg(long)]
    sigma: Option<f64>,
    /// Strike.
    #[arg(long = "E")]
    strike: Option<f64>,
    /// Sinh-grid clustering width.
    #[arg(long = "c")]
    clustering: Option<f64>,
    /// Far boundary of the truncated domain.
    #[arg(long = "S")]
    cap: Option<f64>,
    /// Comma-separated grid sizes.
    #[arg(long = "m-list", value_delimiter = ',')]
    m_list: Option<Vec<usize>>,
    /// Comma-separated schemes, or `all`.
    #[arg(long, value_delimiter = ',')]
    scheme: Option<Vec<String>>,
    /// `lbc1`, `lbc2` or `both`.
    #[arg(long)]
    treatment: Option<String>,
    /// Theta-method parameter in [0.5, 1].
    #[arg(long)]
    theta: Option<f64>,
    /// Number of time steps.
    #[arg(long)]
    steps: Option<usize>,
    /// Maturity.
    #[arg(long = "T")]
    maturity: Option<f64>,
    /// Write the CSV here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Use the full parameter ranges instead of the desk-scale defaults.
    #[arg(long)]
    paper_scale: bool,
}

#[derive(Args)]
struct VerifyArgs {
    /// Comma-separated criterion numbers; all by default.
    #[arg(long, value_delimiter = ',')]
    criteria: Option<Vec<u8>>,
    /// Also write the outcomes as CSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_schemes(list: &[String]) -> Result<Vec<SchemeKind>> {
    if list.len() == 1 && list[0].eq_ignore_ascii_case("all") {
        return Ok(SchemeKind::ALL.to_vec());
    }
    list.iter()
        .map(|s| s.parse::<SchemeKind>().map_err(Into::into))
        .collect()
}

fn parse_treatments(s: &str) -> Result<Vec<BoundaryTreatment>> {
    if s.eq_ignore_ascii_case("both") {
        return Ok(vec![BoundaryTreatment::Lbc1, BoundaryTreatment::Lbc2]);
    }
    Ok(vec![s.parse()?])
}

impl Common {
    fn treatment_or(&self, default: BoundaryTreatment) -> Result<BoundaryTreatment> {
        match &self.treatment {
            Some(t) => Ok(parse_treatments(t)?[0]),
            None => Ok(default),
        }
    }

    fn apply(&self, p: &mut ExperimentPreset) -> Result<()> {
        if let Some(v) = self.r {
            p.r = v;
        }
        if let Some(v) = self.sigma {
            p.sigma = v;
        }
        if let Some(v) = self.strike {
            p.strike = v;
        }
        if let Some(v) = self.clustering {
            p.clustering = v;
        }
        if let Some(v) = self.cap {
            p.cap = v;
        }
        if let Some(v) = &self.m_list {
            p.m_list = v.clone();
            p.fit_m_max = p.fit_m_max.max(v.iter().copied().max().unwrap_or(0));
        }
        if let Some(v) = &self.scheme {
            p.schemes = parse_schemes(v)?;
        }
        if let Some(v) = &self.treatment {
            p.treatments = parse_treatments(v)?;
        }
        if let Some(v) = self.theta {
            p.theta = v;
            if v != 0.5 {
                p.rannacher_substeps = 0;
            }
        }
        if let Some(v) = self.steps {
            p.steps = v;
        }
        if let Some(v) = self.maturity {
            p.maturity = v;
        }
        p.validate()?;
        Ok(())
    }

    fn emit(&self, csv: &str) -> Result<()> {
        write_output(self.out.as_ref(), csv)
    }
}

fn write_output(out: Option<&PathBuf>, csv: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, csv).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}

fn verify(args: &VerifyArgs) -> Result<bool> {
    let ids: Vec<u8> = match &args.criteria {
        Some(v) => v.clone(),
        None => CRITERIA.iter().map(|(id, _)| *id).collect(),
    };
    let mut table = CsvTable::new(&["criterion", "name", "passed", "seconds", "detail"]);
    let mut all = true;
    for id in ids {
        let outcome = run_criterion(id)?;
        println!("{outcome}");
        all &= outcome.passed;
        table.push([
            id.to_string(),
            outcome.name.to_string(),
            outcome.passed.to_string(),
            format!("{:.3}", outcome.elapsed.as_secs_f64()),
            outcome.detail,
        ]);
    }
    if let Some(path) = &args.out {
        write_output(Some(path), &table.finish())?;
    }
    Ok(all)
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Stability(c) => {
            let t = c.treatment_or(BoundaryTreatment::Lbc1)?;
            let mut p = ExperimentPreset::stability(0.1, 0.3, t, c.paper_scale);
            c.apply(&mut p)?;
            c.emit(&stability_csv(&run_stability(&p)?))?;
        }
        Command::Convergence(c) => {
            let t = c.treatment_or(BoundaryTreatment::Lbc1)?;
            let mut p = ExperimentPreset::convergence(0.1, 0.3, t, c.paper_scale);
            c.apply(&mut p)?;
            c.emit(&convergence_csv(&run_convergence(&p)?))?;
        }
        Command::Fractions(c) => {
            let mut p = ExperimentPreset::fractions();
            c.apply(&mut p)?;
            c.emit(&fractions_csv(&run_fractions(&p)?))?;
        }
        Command::LbcCompare(c) => {
            let mut p = ExperimentPreset::lbc_comparison(0.1, 0.3, c.paper_scale);
            c.apply(&mut p)?;
            c.emit(&lbc_comparison_csv(&run_lbc_comparison(&p)?))?;
        }
        Command::Price(c) => {
            let t = c.treatment_or(BoundaryTreatment::Lbc1)?;
            let mut p = ExperimentPreset::convergence(0.1, 0.3, t, c.paper_scale);
            p.m_list = vec![400];
            p.schemes = vec![SchemeKind::CentralA];
            p.steps = 1000;
            c.apply(&mut p)?;
            if p.m_list.len() != 1 || p.schemes.len() != 1 || p.treatments.len() != 1 {
                bail!("price takes a single m, scheme and treatment");
            }
            c.emit(&price(&p)?)?;
        }
        Command::Verify(v) => return verify(&v),
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
