use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};

use cfgloc::harness::bench::{injection_suite, to_csv};
use cfgloc::harness::inject::{inject, ErrorType};
use cfgloc::harness::pipeline::{localize, LocalizeOptions};
use cfgloc::harness::{load_case, Case};
use cfgloc::mcs::MssStrategy;
use cfgloc::netmodel::Network;
use cfgloc::report::{emit_json, emit_text, RankMode};
use cfgloc::requirements::parse_requirements;

#[derive(Parser)]
#[command(name = "cfgloc", version, about = "Localize router configuration errors")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Output {
    Json,
    Text,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check requirements and report minimal correction sets for violations.
    Localize {
        #[arg(long)]
        configs: PathBuf,
        #[arg(long)]
        topology: PathBuf,
        #[arg(long)]
        requirements: PathBuf,
        /// Override every requirement's failure budget.
        #[arg(long)]
        max_failures: Option<usize>,
        /// Seconds before the search stops and reports partial results.
        #[arg(long, default_value_t = 600)]
        time_budget: u64,
        #[arg(long, default_value = "smallest")]
        rank_mode: RankMode,
        #[arg(long)]
        no_dedup_scenarios: bool,
        #[arg(long, default_value = "bisect")]
        mss_strategy: MssStrategy,
        #[arg(long, value_enum, default_value_t = Output::Json)]
        output: Output,
        /// Print each requirement's labelled constraints to stderr.
        #[arg(long)]
        dump_constraints: bool,
        /// Write one JSON line per counterexample found.
        #[arg(long)]
        scenario_log: Option<PathBuf>,
    },
    /// Write a copy of a case with one seeded configuration error.
    Inject {
        /// Directory with configs/, topology.json and requirements.json.
        #[arg(long)]
        case: PathBuf,
        #[arg(long = "type")]
        kind: ErrorType,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run an injection suite and print CSV.
    Bench {
        #[arg(long, default_value = "table2")]
        suite: String,
        /// Ring sizes.
        #[arg(long, value_delimiter = ',', default_value = "8")]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 3)]
        seeds: u64,
        #[arg(long, value_delimiter = ',', default_value = "smallest,three,all")]
        rank_modes: Vec<RankMode>,
        #[arg(long, default_value_t = 600)]
        time_budget: u64,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse().cmd) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

type Res<T> = Result<T, Box<dyn std::error::Error>>;

fn read(p: &Path) -> Res<String> {
    std::fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()).into())
}

fn run(cmd: Cmd) -> Res<u8> {
    match cmd {
        Cmd::Localize {
            configs,
            topology,
            requirements,
            max_failures,
            time_budget,
            rank_mode,
            no_dedup_scenarios,
            mss_strategy,
            output,
            dump_constraints,
            scenario_log,
        } => {
            let (net, warnings) = Network::load(&configs, &topology)?;
            for w in &warnings {
                eprintln!("{w}");
            }
            let reqs = parse_requirements(&read(&requirements)?, &net.topology)?;
            let opts = LocalizeOptions {
                max_failures,
                time_budget: Duration::from_secs(time_budget),
                rank_mode,
                dedup_scenarios: !no_dedup_scenarios,
                strategy: mss_strategy,
                dump_constraints,
                ..Default::default()
            };
            let res = localize(&net, &reqs, &opts)?;
            for r in &res.runs {
                if let Some(d) = &r.dump {
                    eprintln!("# {}\n{d}", r.requirement.id);
                }
            }
            if let Some(p) = scenario_log {
                let lines: Vec<&str> = res.runs.iter().flat_map(|r| r.scenario_log.iter().map(String::as_str)).collect();
                std::fs::write(&p, lines.join("\n") + "\n")?;
            }
            match output {
                Output::Json => println!("{}", emit_json(&res.report)),
                Output::Text => {
                    let sources: BTreeMap<String, String> = net
                        .routers
                        .values()
                        .filter_map(|c| Some((c.file.clone(), std::fs::read_to_string(configs.join(&c.file)).ok()?)))
                        .collect();
                    print!("{}", emit_text(&res.report, &sources));
                }
            }
            Ok(if res.report.compliant() { 0 } else { 1 })
        }
        Cmd::Inject { case, kind, seed, out } => {
            let Case { net, requirements, .. } = load_case(&case)?;
            let inj = inject(&net, &requirements, kind, seed)?;
            let cfg = out.join("configs");
            std::fs::create_dir_all(&cfg)?;
            for (file, text) in inj.net.to_texts() {
                std::fs::write(cfg.join(file), text)?;
            }
            for f in ["topology.json", "requirements.json"] {
                std::fs::copy(case.join(f), out.join(f))?;
            }
            std::fs::write(out.join("ground_truth.json"), serde_json::to_string_pretty(&inj)?)?;
            println!("{}", inj.description);
            Ok(0)
        }
        Cmd::Bench {
            suite,
            sizes,
            seeds,
            rank_modes,
            time_budget,
        } => {
            if suite != "table2" {
                return Err(format!("unknown suite `{suite}`").into());
            }
            let opts = LocalizeOptions {
                time_budget: Duration::from_secs(time_budget),
                ..Default::default()
            };
            let trials = injection_suite(&sizes, seeds, &rank_modes, &opts)?;
            print!("{}", to_csv(&trials));
            Ok(0)
        }
    }
}
