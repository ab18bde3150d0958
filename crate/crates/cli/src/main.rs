//! `crnkit` command-line driver.
//!
//! Exit codes: 0 success, 1 analysis refusal, 2 usage or input error.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use crnkit::boundary::{build_invasion_graph, find_boundary_equilibria, find_dfe};
use crnkit::dynamics::{
    persistence_diagnostic_with, scan, simulate, uniform_grid, Classifier, PersistenceThresholds, ScanAxis,
    SimOptions,
};
use crnkit::fixtures;
use crnkit::igms::EdgeRule;
use crnkit::netio::{build_rhs, rational_from_str, stoich, validate_mass_action, validate_rates_seeded};
use crnkit::ngm::{NgmError, NgmModel};
use crnkit::poly::rational_to_f64;
use crnkit::report::{igms_summary, report};
use crnkit::siphons::{autocatalytic_cores, siphon_reports};
use crnkit::{parse_network, Execution, ParameterAssignment, ReactionNetwork};

const SCHEMA_VERSION: u32 = 1;

#[derive(Parser, Debug)]
#[command(name = "crnkit", version, about = "Siphon, next-generation matrix and boundary analysis of reaction networks")]
struct Cli {
    /// Print JSON where a command would otherwise print CSV.
    #[arg(long, global = true)]
    json: bool,
    /// Offset for sampled diagnostics.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Tail slope threshold (log10 units per time) of the persistence verdict.
    #[arg(long, global = true)]
    tol_slope: Option<f64>,
    /// Level below which a trajectory counts as extinct.
    #[arg(long, global = true)]
    tol_extinct: Option<f64>,
    /// Level above which a trajectory counts as persistent.
    #[arg(long, global = true)]
    tol_persistent: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse a model and print species, reactions and right-hand side.
    Parse {
        file: String,
        /// Include labeled reactant, product and stoichiometric matrices.
        #[arg(long)]
        matrices: bool,
        /// Also check rates for negativity on the nonnegative orthant.
        #[arg(long)]
        params: Option<PathBuf>,
    },
    /// Minimal siphons with criticality, drainability and replicability.
    Siphons {
        file: String,
        /// Keep the LP certificates in the output.
        #[arg(long)]
        certificates: bool,
        /// Search autocatalytic cores up to this size.
        #[arg(long)]
        cores: Option<usize>,
    },
    /// Interaction graph on minimal siphons.
    Igms {
        file: String,
        #[arg(long, value_enum, default_value_t = Rule::Net)]
        rule: Rule,
        /// Write the graph in DOT format.
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Next-generation matrix at the disease-free equilibrium or a given point.
    Ngm {
        file: String,
        #[command(flatten)]
        params: ParamsArg,
        /// Evaluation point (JSON object species -> value, or array).
        #[arg(long)]
        at: Option<PathBuf>,
        /// Also compute the matrix -F Jx^-1.
        #[arg(long)]
        kd: bool,
    },
    /// Boundary equilibria on a face, or on every siphon face.
    Boundary {
        file: String,
        #[command(flatten)]
        params: ParamsArg,
        /// Comma-separated species of a siphon.
        #[arg(long)]
        face: Option<String>,
    },
    /// Invasion graph between siphon faces.
    Invade {
        file: String,
        #[command(flatten)]
        params: ParamsArg,
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Integrate the ODE.
    Simulate {
        file: String,
        #[command(flatten)]
        params: ParamsArg,
        /// Initial state: JSON file or inline JSON (object species -> value, or array).
        #[arg(long)]
        x0: PathBuf,
        /// Final time.
        #[arg(long)]
        t: f64,
        /// Number of output points.
        #[arg(long, default_value_t = 1001)]
        points: usize,
        #[arg(long)]
        rtol: Option<f64>,
        #[arg(long)]
        atol: Option<f64>,
        /// Fixed step size instead of adaptive stepping.
        #[arg(long)]
        step: Option<f64>,
        /// Fraction of the horizon used by the persistence diagnostic.
        #[arg(long, default_value_t = 0.2)]
        window: f64,
        /// Write the trajectory CSV here and print a JSON summary.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Classify a two-parameter grid.
    Scan {
        file: String,
        #[command(flatten)]
        params: ParamsArg,
        /// name:lo:hi:n
        #[arg(long)]
        axis1: String,
        #[arg(long)]
        axis2: String,
        #[arg(long, value_enum, default_value_t = ScanKind::Lcp)]
        classifier: ScanKind,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Full analysis bundle.
    Report {
        file: String,
        #[arg(long)]
        params: Option<PathBuf>,
    },
    /// Bundled models.
    Fixtures {
        #[command(subcommand)]
        action: FixtureAction,
    },
}

#[derive(Args, Debug)]
struct ParamsArg {
    /// Parameter values: JSON file or inline object of numbers or "p/q" strings. Optional
    /// for `fixture:NAME` models, which carry defaults.
    #[arg(long)]
    params: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum FixtureAction {
    List,
    Show { name: String },
    /// Write NAME.crn and NAME.params.json for every fixture.
    Export { dir: PathBuf },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Rule {
    Net,
    Touch,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ScanKind {
    Lcp,
    Generic,
}

/// Bad input: exit code 2.
#[derive(Debug)]
struct InputError(String);

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

fn input_err(msg: impl Into<String>) -> anyhow::Error {
    InputError(msg.into()).into()
}

struct Model {
    net: ReactionNetwork,
    defaults: Option<ParameterAssignment>,
}

fn load_model(arg: &str) -> Result<Model> {
    if let Some(name) = arg.strip_prefix("fixture:") {
        let f = fixtures::get(name).ok_or_else(|| input_err(format!("unknown fixture `{name}`")))?;
        return Ok(Model { net: f.network(), defaults: Some(f.params()) });
    }
    let text = fs::read_to_string(arg).map_err(|e| input_err(format!("{arg}: {e}")))?;
    let net = parse_network(&text).map_err(|e| input_err(format!("{arg}: {e}")))?;
    Ok(Model { net, defaults: None })
}

/// Reads a JSON file. An argument that already looks like a JSON object or
/// array is parsed inline.
fn read_json(path: &Path) -> Result<Value> {
    let raw = path.to_string_lossy();
    let inline = raw.trim_start().starts_with(['{', '[']);
    let text = if inline { Ok(raw.to_string()) } else { fs::read_to_string(path) };
    let text = text.map_err(|e| input_err(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| input_err(format!("{}: {e}", path.display())))
}

fn number(v: &Value, what: &str) -> Result<f64> {
    match v {
        Value::Number(n) => n.as_f64().ok_or_else(|| input_err(format!("{what}: not a finite number"))),
        Value::String(s) => rational_from_str(s)
            .map(|r| rational_to_f64(&r))
            .ok_or_else(|| input_err(format!("{what}: cannot read `{s}` as a number"))),
        _ => Err(input_err(format!("{what}: expected a number or a \"p/q\" string"))),
    }
}

fn load_params(model: &Model, path: Option<&Path>) -> Result<ParameterAssignment> {
    let mut params = model.defaults.clone().unwrap_or_default();
    if let Some(p) = path {
        let Value::Object(obj) = read_json(p)? else {
            return Err(input_err(format!("{}: expected a JSON object", p.display())));
        };
        for (k, v) in &obj {
            if !model.net.parameters.contains(k) {
                return Err(input_err(format!("{}: unknown parameter `{k}`", p.display())));
            }
            params.set(k, number(v, k)?);
        }
    }
    Ok(params)
}

fn required_params(model: &Model, arg: &ParamsArg) -> Result<ParameterAssignment> {
    if arg.params.is_none() && model.defaults.is_none() && !model.net.parameters.is_empty() {
        return Err(input_err("--params is required for this model"));
    }
    let p = load_params(model, arg.params.as_deref())?;
    p.validate(&model.net).map_err(|e| input_err(e.to_string()))?;
    Ok(p)
}

fn load_point(net: &ReactionNetwork, path: &Path) -> Result<Vec<f64>> {
    match read_json(path)? {
        Value::Array(a) => {
            if a.len() != net.n_species() {
                return Err(input_err(format!("{}: expected {} values", path.display(), net.n_species())));
            }
            a.iter().enumerate().map(|(i, v)| number(v, &net.species[i])).collect()
        }
        Value::Object(o) => {
            for k in o.keys() {
                if net.species_index(k).is_none() {
                    return Err(input_err(format!("{}: unknown species `{k}`", path.display())));
                }
            }
            net.species
                .iter()
                .map(|s| o.get(s).map_or(Ok(0.0), |v| number(v, s)))
                .collect()
        }
        _ => Err(input_err(format!("{}: expected an object or an array", path.display()))),
    }
}

fn species_list(net: &ReactionNetwork, s: &str) -> Result<Vec<usize>> {
    let names: Vec<&str> = s.split(',').map(str::trim).filter(|t| !t.is_empty()).collect();
    let mut idx = net.indices_of(&names).ok_or_else(|| input_err(format!("unknown species in `{s}`")))?;
    idx.sort_unstable();
    idx.dedup();
    Ok(idx)
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable")
}

fn emit(command: &str, result: Value) {
    let doc = json!({ "schema_version": SCHEMA_VERSION, "command": command, "result": result });
    write_stdout(&format!("{}\n", serde_json::to_string_pretty(&doc).expect("serializable")));
}

/// Writes to stdout; a closed pipe (e.g. `| head`) is not an error.
fn write_stdout(text: &str) {
    let mut stdout = std::io::stdout().lock();
    if let Err(e) = stdout.write_all(text.as_bytes()).and_then(|_| stdout.flush()) {
        if e.kind() != std::io::ErrorKind::BrokenPipe {
            eprintln!("error: {e}");
        }
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn thresholds(cli: &Cli) -> PersistenceThresholds {
    let d = PersistenceThresholds::default();
    PersistenceThresholds {
        slope: cli.tol_slope.unwrap_or(d.slope),
        extinct_level: cli.tol_extinct.unwrap_or(d.extinct_level),
        persistent_level: cli.tol_persistent.unwrap_or(d.persistent_level),
    }
}

fn network_json(net: &ReactionNetwork) -> Value {
    let complex = |c: &std::collections::BTreeMap<usize, u32>| -> Value {
        Value::Object(c.iter().map(|(&s, &k)| (net.species[s].clone(), json!(k))).collect())
    };
    let reactions: Vec<Value> = net
        .reactions
        .iter()
        .enumerate()
        .map(|(r, rx)| {
            json!({
                "index": r,
                "label": net.reaction_label(r),
                "reactants": complex(&rx.reactants),
                "products": complex(&rx.products),
                "rate": rx.rate.to_string(),
            })
        })
        .collect();
    let rhs: Map<String, Value> =
        net.species.iter().cloned().zip(build_rhs(net).iter().map(|p| json!(p.to_string()))).collect();
    json!({
        "species": net.species,
        "parameters": net.parameters,
        "reactions": reactions,
        "rhs": rhs,
    })
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Parse { file, matrices, params } => {
            let model = load_model(file)?;
            let net = &model.net;
            let mut out = network_json(net);
            out["mass_action"] = to_value(&validate_mass_action(net));
            if *matrices {
                out["stoichiometry"] = to_value(&stoich(net));
            }
            if params.is_some() || model.defaults.is_some() {
                let p = load_params(&model, params.as_deref())?;
                p.validate_nonnegative(net).map_err(|e| input_err(e.to_string()))?;
                let rates = validate_rates_seeded(net, &p, cli.seed).map_err(|e| anyhow!(e))?;
                out["rate_check"] = to_value(&rates);
            }
            emit("parse", out);
        }
        Command::Siphons { file, certificates, cores } => {
            let model = load_model(file)?;
            let net = &model.net;
            let mut reports = to_value(&siphon_reports(net, Execution::default()));
            if !certificates {
                for r in reports.as_array_mut().into_iter().flatten() {
                    r.as_object_mut().map(|o| o.remove("certificates"));
                }
            }
            let mut out = json!({ "siphons": reports, "total_siphon": net.names_of(&crnkit::siphons::total_siphon(net)) });
            if let Some(n) = cores {
                let search = autocatalytic_cores(net, *n);
                let named: Vec<Value> = search
                    .cores
                    .iter()
                    .map(|c| json!({ "core": to_value(c), "species": net.names_of(&c.species) }))
                    .collect();
                out["cores"] = json!({
                    "cores": named,
                    "searched_up_to": search.searched_up_to,
                    "truncated": search.truncated,
                });
            }
            emit("siphons", out);
        }
        Command::Igms { file, rule, dot } => {
            let model = load_model(file)?;
            let net = &model.net;
            let rule = match rule {
                Rule::Net => EdgeRule::NetProducing,
                Rule::Touch => EdgeRule::Touching,
            };
            let summary = igms_summary(net, rule);
            if let Some(path) = dot {
                let graph = crnkit::igms::build_igms(net, &summary.amsd.siphons, rule);
                write_file(path, &graph.to_dot(net))?;
            }
            let mut out = to_value(&summary);
            if let Some(order) = &summary.amsd.species_order {
                out["species_order_names"] = json!(net.names_of(order));
            }
            emit("igms", out);
        }
        Command::Ngm { file, params, at, kd } => {
            let model = load_model(file)?;
            let net = &model.net;
            let p = required_params(&model, params)?;
            let point = match at {
                Some(path) => load_point(net, path)?,
                None => find_dfe(net, &p).map_err(|e| anyhow!("no disease-free equilibrium: {e}"))?.values,
            };
            let m = NgmModel::new(net)?;
            let res = match m.at(net, &point, &p, *kd) {
                Err(NgmError::NotRegular(v)) => bail!("splitting is not regular at this point: {}", v.join("; ")),
                r => r?,
            };
            emit("ngm", to_value(&res));
        }
        Command::Boundary { file, params, face } => {
            let model = load_model(file)?;
            let net = &model.net;
            let p = required_params(&model, params)?;
            let out = match face {
                Some(f) => {
                    let face = species_list(net, f)?;
                    let s = find_boundary_equilibria(net, &p, &face)?;
                    json!({ "face": net.names_of(&face), "search": to_value(&s) })
                }
                None => {
                    let all = crnkit::report::boundary_equilibria(net, &p).map_err(|e| anyhow!(e))?;
                    let dfe = find_dfe(net, &p);
                    json!({
                        "dfe": dfe.as_ref().ok().map(to_value),
                        "dfe_error": dfe.err().map(|e| e.to_string()),
                        "equilibria": to_value(&all),
                    })
                }
            };
            emit("boundary", out);
        }
        Command::Invade { file, params, dot } => {
            let model = load_model(file)?;
            let net = &model.net;
            let p = required_params(&model, params)?;
            let g = build_invasion_graph(net, &p)?;
            if let Some(path) = dot {
                write_file(path, &g.to_dot())?;
            }
            emit("invade", to_value(&g));
        }
        Command::Simulate { file, params, x0, t, points, rtol, atol, step, window, out } => {
            let model = load_model(file)?;
            let net = &model.net;
            let p = required_params(&model, params)?;
            let x0 = load_point(net, x0)?;
            let d = SimOptions::default();
            let opts = SimOptions {
                rtol: rtol.unwrap_or(d.rtol),
                atol: atol.unwrap_or(d.atol),
                grid: Some(uniform_grid(*t, *points)),
                fixed_step: *step,
                ..d
            };
            let traj = simulate(net, &p, &x0, *t, &opts)?;
            let persistence = persistence_diagnostic_with(&traj, *window, thresholds(cli));
            let summary = json!({
                "species": traj.species,
                "final_time": traj.times.last(),
                "final_state": traj.last(),
                "steps": traj.steps,
                "rejected": traj.rejected,
                "persistence": persistence.as_ref().ok().map(|r| json!({
                    "verdict": to_value(&r.verdict),
                    "tail_slope": r.tail_slope,
                    "final_min": r.final_min,
                    "window_min": r.window_min,
                })),
                "persistence_error": persistence.as_ref().err().map(|e| e.to_string()),
            });
            match (out, cli.json) {
                (Some(path), _) => {
                    write_file(path, &traj.to_csv())?;
                    emit("simulate", summary);
                }
                (None, true) => {
                    let mut s = summary;
                    s["trajectory"] = json!({ "times": traj.times, "states": traj.states });
                    emit("simulate", s);
                }
                (None, false) => write_stdout(&traj.to_csv()),
            }
        }
        Command::Scan { file, params, axis1, axis2, classifier, out } => {
            let model = load_model(file)?;
            let net = &model.net;
            let p = required_params(&model, params)?;
            let a1: ScanAxis = axis1.parse().map_err(|e: crnkit::dynamics::SimError| input_err(e.to_string()))?;
            let a2: ScanAxis = axis2.parse().map_err(|e: crnkit::dynamics::SimError| input_err(e.to_string()))?;
            let kind = match classifier {
                ScanKind::Lcp => Classifier::Lcp,
                ScanKind::Generic => Classifier::Generic,
            };
            let res = scan(net, &p, &a1, &a2, kind, Execution::default()).map_err(|e| input_err(e.to_string()))?;
            match (out, cli.json) {
                (Some(path), _) => {
                    write_file(path, &res.to_csv())?;
                    emit("scan", json!({ "legend": res.legend, "classifier": to_value(&res.classifier) }));
                }
                (None, true) => emit("scan", to_value(&res)),
                (None, false) => write_stdout(&res.to_csv()),
            }
        }
        Command::Report { file, params } => {
            let model = load_model(file)?;
            let p = load_params(&model, params.as_deref())?;
            emit("report", to_value(&report(&model.net, &p)));
        }
        Command::Fixtures { action } => match action {
            FixtureAction::List => {
                let list: Vec<Value> = fixtures::FIXTURES
                    .iter()
                    .map(|f| {
                        let net = f.network();
                        json!({
                            "name": f.name,
                            "description": f.description,
                            "species": net.n_species(),
                            "reactions": net.n_reactions(),
                        })
                    })
                    .collect();
                emit("fixtures", json!(list));
            }
            FixtureAction::Show { name } => {
                let f = fixtures::get(name).ok_or_else(|| input_err(format!("unknown fixture `{name}`")))?;
                emit(
                    "fixtures",
                    json!({
                        "name": f.name,
                        "description": f.description,
                        "source": f.source,
                        "params": to_value(&f.params()),
                        "network": network_json(&f.network()),
                    }),
                );
            }
            FixtureAction::Export { dir } => {
                fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
                let mut written = Vec::new();
                for f in fixtures::FIXTURES {
                    let crn = dir.join(format!("{}.crn", f.name));
                    let pj = dir.join(format!("{}.params.json", f.name));
                    write_file(&crn, f.source)?;
                    write_file(&pj, &serde_json::to_string_pretty(&to_value(&f.params()))?)?;
                    written.push(crn.display().to_string());
                    written.push(pj.display().to_string());
                }
                emit("fixtures", json!({ "written": written }));
            }
        },
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.is::<InputError>() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
