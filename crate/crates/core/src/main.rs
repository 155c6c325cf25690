//! `vcount` command line interface.
//!
//! Every subcommand emits a single JSON report on stdout wrapping the
//! result payload with the tool version, the fully resolved configuration
//! (including generated seeds and AUTO values, so any run can be replayed
//! from its own report) and wall time. Errors go to stderr as structured
//! JSON. Exit codes: verify 0 UNSAT / 1 SAT / 2 timeout; counting commands
//! 0 success / 3 budget refusal or timeout / 4 input error.

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::Rng;
use serde_json::{json, Value};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};
use vcount::approx::{
    confidence_interval, counting_prove, ApproxConfig, PrelimSplits, SplitStrategy,
};
use vcount::decision::{decide, Budget, VerdictKind, DEFAULT_LEAF_THRESHOLD};
use vcount::exact::{count_exact, ExactOutcome};
use vcount::network::{load_json, save_json, Network};
use vcount::nnet::{apply_normalization, load_nnet};
use vcount::oracle::{count_brute, DEFAULT_BRUTE_CAP};
use vcount::property::{load_property, VerificationInstance};
use vcount::reduction::{brute_sat_count, cnf_to_instance, parse_dimacs_file, LayerStyle};
use vcount::Error;

#[derive(Parser)]
#[command(name = "vcount", version, about = "Exact and probabilistic counting of safety violations of feed-forward ReLU networks over discretized input domains")]
struct Cli {
    /// Worker thread cap (default: available cores)
    #[arg(long, global = true, env = "VC_THREADS")]
    threads: Option<usize>,

    /// Pretty-print the JSON report
    #[arg(long, global = true)]
    pretty: bool,

    /// Write the report to this file instead of stdout
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every model-plus-property subcommand.
#[derive(Args)]
struct InstanceArgs {
    /// Model file: .nnet text or network JSON
    #[arg(long)]
    model: PathBuf,

    /// Fold NNet normalization constants into the network weights
    #[arg(long)]
    normalize: bool,

    /// Property JSON file (input bounds + output constraint DNF)
    #[arg(long)]
    property: PathBuf,

    /// Grid pitch applied to every input axis
    #[arg(long)]
    epsilon: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Via {
    Reduction,
    Brute,
}

#[derive(Subcommand)]
enum Command {
    /// Decide whether any grid point violates the property
    Verify {
        #[command(flatten)]
        inst: InstanceArgs,
        /// Wall-clock limit in seconds
        #[arg(long)]
        time_limit: Option<f64>,
        /// Search node limit
        #[arg(long)]
        node_limit: Option<u64>,
        #[arg(long, default_value_t = DEFAULT_LEAF_THRESHOLD)]
        leaf_threshold: u64,
    },
    /// Count violating grid points exactly by recursive bisection
    CountExact {
        #[command(flatten)]
        inst: InstanceArgs,
        /// Wall-clock limit in seconds
        #[arg(long)]
        time_limit: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_LEAF_THRESHOLD)]
        leaf_threshold: u64,
    },
    /// Count violating grid points by full enumeration
    CountBrute {
        #[command(flatten)]
        inst: InstanceArgs,
        /// Refuse domains with more grid points than this
        #[arg(long, default_value_t = DEFAULT_BRUTE_CAP)]
        cap: u64,
    },
    /// Probabilistic lower (and optionally upper) bound on the violation rate
    CountApprox {
        #[command(flatten)]
        inst: InstanceArgs,
        /// Error tolerance factor (> 0)
        #[arg(long, default_value_t = 0.02)]
        beta: f64,
        /// Number of iterations
        #[arg(long = "t", default_value_t = 350)]
        iterations: u64,
        /// Violation samples per median split
        #[arg(long = "m", default_value_t = 1000)]
        samples: u64,
        /// Uniform draws allowed per split while sampling (default 10*m)
        #[arg(long)]
        sample_budget: Option<u64>,
        /// Preliminary splits before the first exact attempt: "auto" or a count
        #[arg(long, default_value = "auto")]
        prelim_splits: String,
        /// Per-leaf exact-count time budget in seconds
        #[arg(long, default_value_t = 1.0)]
        exact_time_limit: f64,
        #[arg(long, default_value_t = DEFAULT_LEAF_THRESHOLD)]
        leaf_threshold: u64,
        /// RNG seed (generated and echoed when absent)
        #[arg(long)]
        seed: Option<u64>,
        /// Also compute the upper bound via the negated property
        #[arg(long)]
        upper: bool,
        /// Replace median splits with a fixed-fraction splitter (test mode)
        #[arg(long)]
        split_fraction: Option<f64>,
        /// Write per-iteration trace rows as CSV to this file
        #[arg(long)]
        trace_csv: Option<PathBuf>,
    },
    /// Compile a 3-CNF formula into an equivalent counting instance
    ReduceCnf {
        /// DIMACS CNF input
        #[arg(long)]
        dimacs: PathBuf,
        #[arg(long)]
        out_model: PathBuf,
        #[arg(long)]
        out_property: PathBuf,
        /// Emit one layer per gadget stage instead of the fused 3-layer form
        #[arg(long)]
        faithful_layers: bool,
    },
    /// Count satisfying assignments of a 3-CNF formula
    CountCnf {
        #[arg(long)]
        dimacs: PathBuf,
        /// Count through the network reduction or by truth table
        #[arg(long, value_enum, default_value_t = Via::Reduction)]
        via: Via,
        #[arg(long)]
        faithful_layers: bool,
    },
    /// Describe a model (and optionally an instance) without solving
    Info {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        normalize: bool,
        #[arg(long)]
        property: Option<PathBuf>,
        #[arg(long)]
        epsilon: Option<f64>,
    },
}

fn main() {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        // ignore failure: the global pool can already exist in tests
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let started = Instant::now();
    match run(&cli.command) {
        Ok(run) => {
            let report = json!({
                "tool": "vcount",
                "version": vcount::VERSION,
                "command": run.command,
                "config": run.config,
                "elapsed_ms": started.elapsed().as_millis() as u64,
                "result": run.result,
            });
            let text = if cli.pretty {
                serde_json::to_string_pretty(&report).unwrap()
            } else {
                serde_json::to_string(&report).unwrap()
            };
            match &cli.output {
                Some(path) => {
                    if let Err(e) = std::fs::write(path, text + "\n") {
                        fail(&Error::Io { path: path.display().to_string(), source: e });
                    }
                }
                None => println!("{text}"),
            }
            std::process::exit(run.exit_code);
        }
        Err(e) => fail(&e),
    }
}

struct RunOutput {
    command: &'static str,
    config: Value,
    result: Value,
    exit_code: i32,
}

fn fail(e: &Error) -> ! {
    let (code, context) = match e {
        Error::BudgetRefused(_) => ("budget_refused", Value::Null),
        Error::Io { path, .. } => ("io", json!({ "path": path })),
        Error::Parse { line, .. } => ("parse", json!({ "line": line })),
        Error::Schema { path, .. } => ("schema", json!({ "path": path })),
        Error::ShapeMismatch { expected, got } => {
            ("shape_mismatch", json!({ "expected": expected, "got": got }))
        }
        Error::InvalidNetwork(_) => ("invalid_network", Value::Null),
        Error::UnsupportedActivation(_) => ("unsupported_activation", Value::Null),
        Error::NotSplittable(axis) => ("not_splittable", json!({ "axis": axis })),
        Error::InvalidDomain(_) => ("invalid_domain", Value::Null),
        Error::NegationTooLarge { limit } => ("negation_too_large", json!({ "limit": limit })),
        Error::InvalidConfig(_) => ("invalid_config", Value::Null),
    };
    let payload = json!({ "code": code, "message": e.to_string(), "context": context });
    eprintln!("{}", serde_json::to_string(&payload).unwrap());
    let exit = if matches!(e, Error::BudgetRefused(_)) { 3 } else { 4 };
    std::process::exit(exit);
}

fn load_model(path: &Path, normalize: bool) -> Result<Network, Error> {
    let is_nnet = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("nnet"));
    if is_nnet {
        let (net, norm) = load_nnet(path)?;
        if normalize {
            apply_normalization(&net, &norm)
        } else {
            Ok(net)
        }
    } else {
        load_json(path)
    }
}

fn load_instance(args: &InstanceArgs) -> Result<(VerificationInstance, Value), Error> {
    if args.epsilon.is_nan() || args.epsilon <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "epsilon must be > 0, got {}",
            args.epsilon
        )));
    }
    let network = load_model(&args.model, args.normalize)?;
    let spec = load_property(&args.property, network.output_dim())?;
    let domain = spec.domain(args.epsilon)?;
    let inst = VerificationInstance::new(network, domain, spec.post)?;
    let config = json!({
        "model": args.model.display().to_string(),
        "normalize": args.normalize,
        "property": args.property.display().to_string(),
        "epsilon": args.epsilon,
        "grid_points": inst.domain.total_points().to_string(),
    });
    Ok((inst, config))
}

fn budget_from(time_limit: Option<f64>, node_limit: Option<u64>) -> Budget {
    Budget {
        deadline: time_limit.map(|s| Instant::now() + Duration::from_secs_f64(s)),
        node_limit,
    }
}

fn merge(mut base: Value, extra: Value) -> Value {
    base.as_object_mut()
        .unwrap()
        .extend(extra.as_object().unwrap().clone());
    base
}

fn run(command: &Command) -> Result<RunOutput, Error> {
    match command {
        Command::Verify { inst, time_limit, node_limit, leaf_threshold } => {
            let (instance, config) = load_instance(inst)?;
            let verdict = decide(&instance, budget_from(*time_limit, *node_limit), *leaf_threshold)?;
            let exit_code = match verdict.kind {
                VerdictKind::Unsat => 0,
                VerdictKind::Sat { .. } => 1,
                VerdictKind::Timeout => 2,
            };
            Ok(RunOutput {
                command: "verify",
                config: merge(config, json!({
                    "time_limit": time_limit,
                    "node_limit": node_limit,
                    "leaf_threshold": leaf_threshold,
                })),
                result: serde_json::to_value(&verdict).unwrap(),
                exit_code,
            })
        }
        Command::CountExact { inst, time_limit, leaf_threshold } => {
            let (instance, config) = load_instance(inst)?;
            let outcome = count_exact(&instance, budget_from(*time_limit, None), *leaf_threshold)?;
            let (result, exit_code) = match outcome {
                ExactOutcome::Counted(r) => (serde_json::to_value(&r).unwrap(), 0),
                ExactOutcome::Timeout { boxes_explored, elapsed } => (
                    json!({
                        "kind": "TIMEOUT",
                        "boxes_explored": boxes_explored,
                        "elapsed_ms": elapsed.as_millis() as u64,
                    }),
                    3,
                ),
            };
            Ok(RunOutput {
                command: "count-exact",
                config: merge(config, json!({
                    "time_limit": time_limit,
                    "leaf_threshold": leaf_threshold,
                })),
                result,
                exit_code,
            })
        }
        Command::CountBrute { inst, cap } => {
            let (instance, config) = load_instance(inst)?;
            let report = count_brute(&instance, *cap)?;
            Ok(RunOutput {
                command: "count-brute",
                config: merge(config, json!({ "cap": cap })),
                result: serde_json::to_value(&report).unwrap(),
                exit_code: 0,
            })
        }
        Command::CountApprox {
            inst,
            beta,
            iterations,
            samples,
            sample_budget,
            prelim_splits,
            exact_time_limit,
            leaf_threshold,
            seed,
            upper,
            split_fraction,
            trace_csv,
        } => {
            let (instance, config) = load_instance(inst)?;
            let seed = seed.unwrap_or_else(|| rand::rng().random());
            let mut cfg = ApproxConfig::new(*beta, *iterations, *samples, seed);
            if let Some(b) = sample_budget {
                cfg.sample_budget = *b;
            }
            cfg.prelim_splits = parse_prelim(prelim_splits)?;
            // resolve AUTO now so the echoed config replays identically
            cfg.prelim_splits =
                PrelimSplits::Fixed(cfg.prelim_splits.resolve(&instance.domain));
            cfg.exact_time_limit = Duration::from_secs_f64(*exact_time_limit);
            cfg.leaf_threshold = *leaf_threshold;
            if let Some(f) = split_fraction {
                cfg.strategy = SplitStrategy::FixedFraction(*f);
            }
            let report = if *upper {
                confidence_interval(&instance, &cfg)?
            } else {
                counting_prove(&instance, &cfg)?
            };
            if let Some(path) = trace_csv {
                write_trace_csv(path, &report.traces)?;
            }
            Ok(RunOutput {
                command: "count-approx",
                config: merge(config, serde_json::to_value(&cfg).unwrap()),
                result: serde_json::to_value(&report).unwrap(),
                exit_code: 0,
            })
        }
        Command::ReduceCnf { dimacs, out_model, out_property, faithful_layers } => {
            let formula = parse_dimacs_file(dimacs)?;
            let style = if *faithful_layers { LayerStyle::PerGadget } else { LayerStyle::Fused };
            let instance = cnf_to_instance(&formula, style)?;
            save_json(&instance.network, out_model)?;
            let property = json!({
                "input": instance.domain.bounds().iter()
                    .map(|(lo, hi)| json!({ "lo": lo, "hi": hi }))
                    .collect::<Vec<_>>(),
                "output_constraints": instance.post.disjuncts,
            });
            let text = serde_json::to_string_pretty(&property).unwrap() + "\n";
            std::fs::write(out_property, text)
                .map_err(|e| Error::Io { path: out_property.display().to_string(), source: e })?;
            Ok(RunOutput {
                command: "reduce-cnf",
                config: json!({
                    "dimacs": dimacs.display().to_string(),
                    "faithful_layers": faithful_layers,
                }),
                result: json!({
                    "model": out_model.display().to_string(),
                    "property": out_property.display().to_string(),
                    "num_vars": formula.num_vars,
                    "num_clauses": formula.clauses.len(),
                    "layers": instance.network.layers().len(),
                    "epsilon": 1.0,
                }),
                exit_code: 0,
            })
        }
        Command::CountCnf { dimacs, via, faithful_layers } => {
            let formula = parse_dimacs_file(dimacs)?;
            let (models, via_name) = match via {
                Via::Brute => (brute_sat_count(&formula, 20)?.to_string(), "brute"),
                Via::Reduction => {
                    let style =
                        if *faithful_layers { LayerStyle::PerGadget } else { LayerStyle::Fused };
                    let instance = cnf_to_instance(&formula, style)?;
                    let report = count_exact(&instance, Budget::UNLIMITED, DEFAULT_LEAF_THRESHOLD)?
                        .report()
                        .expect("unlimited budget cannot time out");
                    (report.violations.to_string(), "reduction")
                }
            };
            Ok(RunOutput {
                command: "count-cnf",
                config: json!({
                    "dimacs": dimacs.display().to_string(),
                    "via": via_name,
                    "faithful_layers": faithful_layers,
                }),
                result: json!({
                    "num_vars": formula.num_vars,
                    "num_clauses": formula.clauses.len(),
                    "models": models,
                }),
                exit_code: 0,
            })
        }
        Command::Info { model, normalize, property, epsilon } => {
            let network = load_model(model, *normalize)?;
            let mut result = json!({
                "input_dim": network.input_dim(),
                "output_dim": network.output_dim(),
                "layers": network.layers().iter().map(|l| json!({
                    "in": l.in_dim(),
                    "out": l.out_dim(),
                    "activation": l.activation,
                })).collect::<Vec<_>>(),
            });
            if let Some(prop) = property {
                let spec = load_property(prop, network.output_dim())?;
                let mut info = json!({
                    "input_axes": spec.input.len(),
                    "disjuncts": spec.post.disjuncts.len(),
                });
                if let Some(eps) = epsilon {
                    let domain = spec.domain(*eps)?;
                    info.as_object_mut().unwrap().insert(
                        "grid_points".into(),
                        Value::String(domain.total_points().to_string()),
                    );
                }
                result.as_object_mut().unwrap().insert("property".into(), info);
            }
            Ok(RunOutput {
                command: "info",
                config: json!({
                    "model": model.display().to_string(),
                    "normalize": normalize,
                    "property": property.as_ref().map(|p| p.display().to_string()),
                    "epsilon": epsilon,
                }),
                result,
                exit_code: 0,
            })
        }
    }
}

fn parse_prelim(text: &str) -> Result<PrelimSplits, Error> {
    if text.eq_ignore_ascii_case("auto") {
        Ok(PrelimSplits::Auto)
    } else {
        text.parse()
            .map(PrelimSplits::Fixed)
            .map_err(|_| Error::InvalidConfig(format!("--prelim-splits must be \"auto\" or a count, got {text:?}")))
    }
}

fn write_trace_csv(path: &Path, traces: &[vcount::approx::IterationTrace]) -> Result<(), Error> {
    use std::fmt::Write;
    let mut out =
        String::from("iteration,s,sides,alphas,leaf_points,leaf_violations,leaf_vr,vr_raw,vr,clamped\n");
    for t in traces {
        // alphas joined with ';' to stay one CSV field
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            t.iteration,
            t.s,
            t.sides,
            t.alphas.join(";"),
            t.leaf_points,
            t.leaf_violations,
            t.leaf_vr,
            t.vr_raw,
            t.vr,
            t.clamped
        )
        .unwrap();
    }
    std::fs::write(path, out).map_err(|e| Error::Io { path: path.display().to_string(), source: e })
}
