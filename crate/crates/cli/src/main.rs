//! `qmc`: solve, round, certify and analyse Quantum Max Cut and strictly
//! quadratic 2-local instances from the command line.
//!
//! Reports go to stdout as JSON unless `--out` is given. Exit status is 0 on
//! success, 2 when an audit fails and 1 on any error.

use std::collections::BTreeMap;
use std::error::Error;
use std::fs::File;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

use qmc_core::analysis::polytope::{generic_grid_search, GridSpec};
use qmc_core::analysis::special::{alpha_curve, check_gamma, gp_f, h_curve, helper_properties_audit, ratio_curve, RatioKind};
use qmc_core::analysis::triangle::{dual_certificate_check, fact2_chain};
use qmc_core::analysis::{audits, truncated_expectation};
use qmc_core::instance::Instance;
use qmc_core::io::{
    load_instance, to_report_json, write_curve_csv, write_edges_csv, AnalysisSummary, AuditSummary, BracketRow,
    InstanceFormat, InstanceSummary, NumericsSummary, OracleSummary, RelaxationSummary, RunReport,
};
use qmc_core::lasserre::solve_level;
use qmc_core::oracle::{lambda_max, product_ascent};
use qmc_core::rounding::{
    generic_threshold_round, max_cut_round, min_degree_round, product_round, threshold_round, RoundOptions,
    RoundingMode,
};
use qmc_core::sdp::SolverConfig;

#[derive(Parser, Debug)]
#[command(name = "qmc", version, about = "Lasserre relaxations and product-state rounding for 2-local Hamiltonians")]
struct Cli {
    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Also write a CSV table (curve or per-edge values).
    #[arg(long, global = true)]
    csv: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct InstanceArgs {
    /// Edge list (`u v w` per line) or instance JSON.
    instance: PathBuf,
    /// Input format; inferred from the extension when omitted.
    #[arg(long, value_enum)]
    format: Option<Format>,
}

impl InstanceArgs {
    fn load(&self) -> Result<Instance, Box<dyn Error>> {
        let format = match self.format {
            Some(Format::EdgeList) => InstanceFormat::EdgeList,
            Some(Format::InstanceJson) => InstanceFormat::InstanceJson,
            None => InstanceFormat::from_path(&self.instance),
        };
        Ok(load_instance(&self.instance, format)?)
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    EdgeList,
    InstanceJson,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Algo {
    Gw,
    Product,
    Mindeg,
    Threshold,
    Generic,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Mode {
    WVector,
    PerQubit,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Curve {
    Ratio1,
    Ratio3,
    Alpha,
    H,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build and solve the level-k relaxation.
    Relax {
        #[command(flatten)]
        input: InstanceArgs,
        #[arg(long, default_value_t = 2)]
        level: usize,
    },
    /// Solve the relaxation and round it.
    Round {
        #[command(flatten)]
        input: InstanceArgs,
        #[arg(long, value_enum, default_value = "threshold")]
        algo: Algo,
        #[arg(long, default_value_t = 0.911)]
        gamma: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        samples: u64,
        /// Sample |01⟩ or |10⟩ on planted pairs instead of their mixture.
        #[arg(long)]
        pure: bool,
        #[arg(long, value_enum, default_value = "w-vector")]
        mode: Mode,
        #[arg(long, default_value_t = 2)]
        level: usize,
    },
    /// Exact top eigenvalue and product-state local search.
    Oracle {
        #[command(flatten)]
        input: InstanceArgs,
        #[arg(long)]
        lmax: bool,
        #[arg(long)]
        ascent: bool,
        #[arg(long, default_value_t = 20)]
        restarts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Monogamy audits on the level-2 solution and the dual certificate.
    Certify {
        /// Required by every audit except `--dual`.
        instance: Option<PathBuf>,
        #[arg(long, value_enum)]
        format: Option<Format>,
        #[arg(long)]
        triangle: bool,
        #[arg(long)]
        star: bool,
        #[arg(long)]
        fact2: bool,
        #[arg(long)]
        dual: bool,
        #[arg(long, default_value_t = 0.911)]
        gamma: f64,
        #[arg(long, default_value_t = audits::AUDIT_TOL)]
        tol: f64,
    },
    /// Tabulate ratio curves, α(d) or the threshold function.
    Analyze {
        #[arg(long, value_enum)]
        curve: Option<Curve>,
        #[arg(long, default_value_t = 0.911)]
        gamma: f64,
        #[arg(long, default_value_t = 2001)]
        points: usize,
        #[arg(long, default_value_t = 50)]
        d_max: usize,
        /// Run the threshold check at `--gamma`.
        #[arg(long)]
        check_gamma: bool,
        /// Audit the helper-function properties.
        #[arg(long)]
        helpers: bool,
    },
    /// Hermite brackets and the mesh search for the generic bound.
    Numerics {
        #[arg(long, default_value_t = 70)]
        order: usize,
        #[arg(long, default_value_t = 5e-3)]
        fine_mesh: f64,
        #[arg(long, default_value_t = 5e-2)]
        coarse_mesh: f64,
        #[arg(long, default_value_t = 0.911)]
        gamma: f64,
        /// Skip the mesh search.
        #[arg(long)]
        no_grid: bool,
    },
}

enum Table {
    Curve(qmc_core::analysis::AnalysisCurve),
    Edges(Vec<qmc_core::io::EdgeSummary>),
}

fn run(command: Command) -> Result<(RunReport, Option<Table>), Box<dyn Error>> {
    let cfg = SolverConfig::default();
    let mut table = None;
    let report = match command {
        Command::Relax { input, level } => {
            let inst = input.load()?;
            let sol = solve_level(&inst, level, &cfg)?;
            let summary = RelaxationSummary::of(&sol);
            table = Some(Table::Edges(summary.edges.clone()));
            RunReport {
                command: "relax".into(),
                instance: Some(InstanceSummary::of(&inst)),
                relaxation: Some(summary),
                ..Default::default()
            }
        }
        Command::Round {
            input,
            algo,
            gamma,
            seed,
            samples,
            pure,
            mode,
            level,
        } => {
            let inst = input.load()?;
            let mut report = RunReport {
                command: "round".into(),
                instance: Some(InstanceSummary::of(&inst)),
                ..Default::default()
            };
            if algo == Algo::Gw {
                let outcome = max_cut_round(inst.graph(), &cfg, seed, samples)?;
                report.rounding = Some(outcome.report);
                return Ok((report, None));
            }
            let sol = solve_level(&inst, level, &cfg)?;
            let opts = RoundOptions {
                seed,
                samples,
                mode: match mode {
                    Mode::WVector => RoundingMode::WVector,
                    Mode::PerQubit => RoundingMode::PerQubit,
                },
                gamma,
                pure,
            };
            let (_, rounding) = match algo {
                Algo::Product => product_round(&inst, &sol, &opts)?,
                Algo::Mindeg => min_degree_round(&inst, &sol, &opts)?,
                Algo::Threshold => threshold_round(&inst, &sol, &opts)?,
                Algo::Generic => generic_threshold_round(&inst, &sol, &opts)?,
                Algo::Gw => unreachable!("handled above"),
            };
            let summary = RelaxationSummary::of(&sol);
            table = Some(Table::Edges(summary.edges.clone()));
            report.relaxation = Some(summary);
            report.rounding = Some(rounding);
            report
        }
        Command::Oracle {
            input,
            lmax,
            ascent,
            restarts,
            seed,
        } => {
            let inst = input.load()?;
            let (lmax, ascent) = if lmax || ascent { (lmax, ascent) } else { (true, true) };
            let mut summary = OracleSummary::default();
            if lmax {
                summary.lambda_max = Some(lambda_max(&inst)?);
            }
            if ascent {
                let best = product_ascent(&inst, restarts, seed)?;
                summary.ascent_energy = Some(best.energy);
                summary.ascent_restart = Some(best.restart);
                summary.restarts = Some(restarts);
            }
            RunReport {
                command: "oracle".into(),
                instance: Some(InstanceSummary::of(&inst)),
                oracle: Some(summary),
                ..Default::default()
            }
        }
        Command::Certify {
            instance,
            format,
            triangle,
            star,
            fact2,
            dual,
            gamma,
            tol,
        } => {
            let all = !(triangle || star || fact2 || dual);
            let mut report = RunReport {
                command: "certify".into(),
                ..Default::default()
            };
            let mut summary = AuditSummary::default();
            if all || triangle || star || fact2 {
                let input = InstanceArgs {
                    instance: instance.ok_or("an instance is required for the triangle, star and fact2 audits")?,
                    format,
                };
                let inst = input.load()?;
                let sol = solve_level(&inst, 2, &cfg)?;
                if all || triangle {
                    summary.triangle = Some(audits::triangle_audit(&sol, tol));
                }
                if all || star {
                    summary.star = Some(audits::star_bound_audit_all(&sol, &inst, tol));
                }
                if all || fact2 {
                    summary.fact2 = Some(audits::fact2_audit(&sol, gamma, tol));
                    summary.fact2_chain = Some(fact2_chain(gamma));
                }
                report.instance = Some(InstanceSummary::of(&inst));
                report.relaxation = Some(RelaxationSummary::of(&sol));
            }
            if all || dual {
                summary.dual = Some(dual_certificate_check());
            }
            summary.finalize();
            report.audits = Some(summary);
            report
        }
        Command::Analyze {
            curve,
            gamma,
            points,
            d_max,
            check_gamma: run_check,
            helpers,
        } => {
            let mut summary = AnalysisSummary::default();
            if let Some(c) = curve {
                let built = match c {
                    Curve::Ratio1 => ratio_curve(RatioKind::Cut, None, points),
                    Curve::Ratio3 => ratio_curve(RatioKind::Product, None, points),
                    Curve::Alpha => alpha_curve(d_max),
                    Curve::H => h_curve(gamma, points),
                };
                table = Some(Table::Curve(built.clone()));
                summary.curve = Some(built);
            }
            if run_check {
                summary.gamma_check = Some(check_gamma(gamma)?);
            }
            if helpers {
                summary.helpers = Some(helper_properties_audit());
            }
            let mut report = RunReport {
                command: "analyze".into(),
                analysis: Some(summary),
                ..Default::default()
            };
            let failed = report.analysis.as_ref().is_some_and(|a| {
                a.gamma_check.as_ref().is_some_and(|g| !g.passed) || a.helpers.as_ref().is_some_and(|h| !h.passed)
            });
            if failed {
                report.audits = Some(AuditSummary {
                    passed: false,
                    ..Default::default()
                });
            }
            report
        }
        Command::Numerics {
            order,
            fine_mesh,
            coarse_mesh,
            gamma,
            no_grid,
        } => {
            let mut summary = NumericsSummary::default();
            for a in [-0.999, -0.911, 0.0, 0.5] {
                let bracket = truncated_expectation(a, a, a, order)?;
                let exact = gp_f(3, a);
                let passed = bracket.contains([exact / 3.0; 3]);
                summary.brackets.push(BracketRow { a, bracket, exact, passed });
            }
            if !no_grid {
                summary.grid.push(generic_grid_search(GridSpec {
                    order,
                    gamma,
                    fine_mesh,
                    coarse_mesh,
                })?);
            }
            let passed = summary.brackets.iter().all(|b| b.passed);
            RunReport {
                command: "numerics".into(),
                numerics: Some(summary),
                audits: (!passed).then(AuditSummary::default),
                ..Default::default()
            }
        }
    };
    Ok((report, table))
}

fn emit(cli_out: Option<PathBuf>, csv: Option<PathBuf>, report: &RunReport, table: Option<Table>) -> Result<(), Box<dyn Error>> {
    let json = to_report_json(report)?;
    match cli_out {
        Some(path) => std::fs::write(path, json + "\n")?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(json.as_bytes())?;
            stdout.write_all(b"\n")?;
        }
    }
    if let Some(path) = csv {
        let file = File::create(&path)?;
        match table {
            Some(Table::Curve(c)) => write_curve_csv(&c, file)?,
            Some(Table::Edges(e)) => write_edges_csv(&e, file)?,
            None => return Err(format!("command `{}` has no table to write", report.command).into()),
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let start = Instant::now();
    let result = run(cli.command).and_then(|(mut report, table)| {
        report.timings = BTreeMap::from([("total_seconds".to_string(), start.elapsed().as_secs_f64())]);
        info!("{} finished in {:.3} s", report.command, start.elapsed().as_secs_f64());
        emit(cli.out, cli.csv, &report, table)?;
        Ok(report)
    });
    match result {
        Ok(report) if report.audits.as_ref().is_some_and(|a| !a.passed) => ExitCode::from(2),
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
