use std::collections::BTreeMap;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use leafspace_core::chernweil::SIGN_FLAG;
use leafspace_core::scenario::{
    fixture_names, load_scenario, read_scenario, run, Command, Overrides, Report, Scenario, Status, Task, TaskReport,
};

#[derive(Parser)]
#[command(name = "leafspace", version, about = "Čech and Čech–De Rham invariants of leaf spaces")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Table,
}

#[derive(Args)]
struct Common {
    /// Scenario file, or the name of a bundled fixture
    #[arg(long)]
    scenario: String,
    #[arg(long)]
    max_degree: Option<usize>,
    #[arg(long)]
    max_k: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, value_enum, default_value = "json")]
    report: Format,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check the presentation: composition table, embeddings, orientation
    Validate(Common),
    /// Betti numbers of the nerve
    Betti {
        #[command(flatten)]
        common: Common,
        /// trivial or orientation
        #[arg(long)]
        coefficient: Option<String>,
    },
    /// Compare H^n with orientation coefficients against H_c^{q-n}
    Duality(Common),
    /// Invariant polynomial forms and their cohomology
    Basic {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        form_degree: Option<usize>,
        #[arg(long)]
        poly_degree: Option<u32>,
    },
    /// Evaluate a transversal cocycle, optionally checking D(c) = 0
    Cocycle {
        #[command(flatten)]
        common: Common,
        /// c1, c1^k, c2*c1, u1, gv, gv:a1,a2,..., ch:N
        #[arg(long)]
        class: Option<String>,
        #[arg(long)]
        check_closed: bool,
        /// trivial or scenario
        #[arg(long)]
        connection: Option<String>,
    },
    /// Thurston's integral against the collapsed cocycle
    Thurston {
        #[command(flatten)]
        common: Common,
        /// Three map ids, f,g,h
        #[arg(long)]
        triple: Option<String>,
    },
    /// Collapse against Thurston on sampled triples, plus the Čech cocycle identity
    CollapseCheck(Common),
    /// Run every task listed in the scenario
    Run(Common),
}

fn error_report(name: &str, command: &str, msg: String) -> Report {
    Report {
        scenario: name.into(),
        engine_version: env!("CARGO_PKG_VERSION").into(),
        seed: 0,
        sign_flag: SIGN_FLAG,
        status: Status::Error,
        tasks: vec![TaskReport {
            command: command.into(),
            parameters: BTreeMap::new(),
            tolerance: None,
            threshold: None,
            status: Status::Error,
            result: serde_json::Value::Null,
            message: Some(msg),
        }],
    }
}

fn emit(r: &Report, f: Format) -> ExitCode {
    match f {
        Format::Json => println!("{}", r.to_json()),
        Format::Table => print!("{}", r.to_table()),
    }
    ExitCode::from(r.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, common, params): (Option<Command>, Common, Vec<(&str, Option<String>)>) = match cli.command {
        Cmd::Validate(c) => (Some(Command::Validate), c, vec![]),
        Cmd::Betti { common, coefficient } => (Some(Command::Betti), common, vec![("coefficient", coefficient)]),
        Cmd::Duality(c) => (Some(Command::Duality), c, vec![]),
        Cmd::Basic { common, form_degree, poly_degree } => (
            Some(Command::Basic),
            common,
            vec![
                ("form-degree", form_degree.map(|x| x.to_string())),
                ("poly-degree", poly_degree.map(|x| x.to_string())),
            ],
        ),
        Cmd::Cocycle { common, class, check_closed, connection } => (
            Some(Command::Cocycle),
            common,
            vec![
                ("class", class),
                ("check-closed", check_closed.then(|| "true".to_string())),
                ("connection", connection),
            ],
        ),
        Cmd::Thurston { common, triple } => (Some(Command::Thurston), common, vec![("triple", triple)]),
        Cmd::CollapseCheck(c) => (Some(Command::CollapseCheck), c, vec![]),
        Cmd::Run(c) => (None, c, vec![]),
    };
    let label = command.map_or("run", Command::name);
    let loaded: Result<Scenario, _> = if command == Some(Command::Validate) {
        read_scenario(&common.scenario)
    } else {
        load_scenario(&common.scenario)
    };
    let scenario = match loaded {
        Ok(s) => s,
        Err(e) => {
            let mut msg = e.to_string();
            if !std::path::Path::new(&common.scenario).exists() {
                msg.push_str(&format!("\nbundled fixtures: {}", fixture_names().join(", ")));
            }
            eprintln!("error: {msg}");
            return emit(&error_report(&common.scenario, label, msg), common.report);
        }
    };
    let overrides = Overrides {
        max_degree: common.max_degree,
        max_k: common.max_k,
        tol: common.tol,
        seed: common.seed,
    };
    let report = match command {
        None => run(&scenario, None, &overrides),
        Some(cmd) => {
            let given: BTreeMap<String, String> =
                params.into_iter().filter_map(|(k, v)| v.map(|v| (k.to_string(), v))).collect();
            let listed: Vec<Task> = scenario.tasks.iter().filter(|t| t.command == cmd).cloned().collect();
            let tasks = if given.is_empty() && !listed.is_empty() {
                listed
            } else {
                vec![Task {
                    command: cmd,
                    params: given,
                    line: 0,
                }]
            };
            run(&scenario, Some(&tasks), &overrides)
        }
    };
    emit(&report, common.report)
}
