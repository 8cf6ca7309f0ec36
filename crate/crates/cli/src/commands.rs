use std::io::Write;

use hamel_core::assembly::{recover_controls_from_state, ForcedMechanics};
use hamel_core::models::{self, BuiltinModel, ModelParams};
use hamel_core::solvers::{evaluate_cost, integrate, shoot_with_restarts, OptimalControl};
use hamel_core::verify::{self, VerificationReport, VerifyOptions};
use hamel_core::{Error, Layout, PhaseState, Trajectory};
use nalgebra::DVector;

use crate::args::{Command, CostArgs, ModelArgs, SimulateArgs, SolveArgs, VerifyArgs};
use crate::config::{Format, ProblemKind, Resolved, ScenarioConfig};
use crate::table::Table;
use crate::CliError;

pub fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Solve(args) => solve(args),
        Command::Verify(args) => verify(args),
        Command::Simulate(args) => simulate(args),
        Command::Cost(args) => cost(args),
        Command::List => list(),
    }
}

/// Input errors exit 1, everything the numerics raise on a well-posed
/// request exits 2.
fn classify(e: Error) -> CliError {
    match e.root() {
        Error::Dimension { .. }
        | Error::InvalidProblem(_)
        | Error::UnknownModel { .. }
        | Error::UnknownScenario { .. }
        | Error::UnsupportedLayout { .. } => CliError::Config(e.to_string()),
        _ => CliError::Numerical(e.to_string()),
    }
}

fn join(v: impl IntoIterator<Item = f64>) -> String {
    v.into_iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn model_meta(model: &BuiltinModel) -> Vec<(String, String)> {
    vec![
        ("model".into(), model.name.into()),
        ("radius".into(), model.params.radius.to_string()),
        ("inertia".into(), join(model.params.inertia)),
    ]
}

/// Writes the table to `--out` (summary to stdout) or to stdout (summary to
/// stderr).
fn emit(table: &Table, out: Option<&std::path::Path>, format: Format, summary: &[(String, String)]) -> Result<(), CliError> {
    let lines: String = summary.iter().map(|(k, v)| format!("{k}: {v}\n")).collect();
    match out {
        Some(path) => {
            table.save(path, format)?;
            print!("{lines}");
            println!("output: {}", path.display());
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            table.write(format, &mut lock)?;
            lock.flush().map_err(|e| CliError::io("stdout", e))?;
            eprint!("{lines}");
        }
    }
    Ok(())
}

fn solve(args: SolveArgs) -> Result<(), CliError> {
    let config = match &args.config {
        Some(path) => ScenarioConfig::load(path)?,
        None => ScenarioConfig::default(),
    };
    let resolved = config.overlay(&args).resolve()?;
    match resolved.kind {
        ProblemKind::Kinematic => run_solve(&resolved, resolved.model.kinematic.as_ref().expect("resolved")),
        ProblemKind::Dynamic => run_solve(&resolved, resolved.model.dynamic.as_ref().expect("resolved")),
    }
}

fn run_solve<P: OptimalControl>(r: &Resolved, problem: &P) -> Result<(), CliError> {
    let bc = &r.bc;
    let guess = match &r.guess {
        Some(g) => g.clone(),
        None => problem.default_guess(bc).map_err(classify)?,
    };
    log::info!("solving {} ({:?}) from guess {:?}", r.model.name, r.kind, guess.as_slice());

    struct Outcome {
        trajectory: Trajectory,
        unknowns: DVector<f64>,
        residual: DVector<f64>,
        iterations: usize,
        singular_values: Vec<f64>,
        degenerate: Option<usize>,
    }
    let (outcome, failure) = match shoot_with_restarts(problem, bc, &guess, &r.solver, r.restarts, r.seed) {
        Ok(sol) => (
            Outcome {
                trajectory: sol.trajectory,
                unknowns: sol.unknowns,
                residual: sol.residual,
                iterations: sol.iterations,
                singular_values: sol.singular_values,
                degenerate: Some(sol.degenerate_directions),
            },
            None,
        ),
        Err(e) => {
            let Error::NoConvergence {
                iterations,
                best_unknowns,
                ..
            } = e.root()
            else {
                return Err(classify(e));
            };
            // Best effort: the trajectory through the best unknowns found.
            let unknowns = DVector::from_column_slice(best_unknowns);
            let initial = problem.initial_state(bc, &unknowns).map_err(classify)?;
            let trajectory = integrate(problem, &initial, bc.t0, bc.t1, r.solver.steps).map_err(classify)?;
            let residual = problem.terminal_residual(bc, &trajectory.final_state());
            (
                Outcome {
                    trajectory,
                    unknowns,
                    residual,
                    iterations: *iterations,
                    singular_values: Vec::new(),
                    degenerate: None,
                },
                Some(e),
            )
        }
    };

    let converged = failure.is_none();
    let residual_norm = outcome.residual.amax();
    let cost = evaluate_cost(problem, &outcome.trajectory).map_err(classify)?;
    let controls = match (&r.model.mechanical, r.kind) {
        (Some(system), ProblemKind::Dynamic) => Some(
            (0..outcome.trajectory.len())
                .map(|k| recover_controls_from_state(system, &outcome.trajectory.state(k)))
                .collect::<Result<Vec<_>, _>>()
                .map_err(classify)?,
        ),
        _ => None,
    };

    let mut meta = model_meta(&r.model);
    meta.push(("layout".into(), r.kind.layout().to_string()));
    if let Some(s) = &r.scenario {
        meta.push(("scenario".into(), s.clone()));
    }
    meta.extend([
        ("converged".into(), converged.to_string()),
        ("iterations".into(), outcome.iterations.to_string()),
        ("residual".into(), format!("{residual_norm:e}")),
        ("cost".into(), cost.to_string()),
        ("steps".into(), r.solver.steps.to_string()),
    ]);
    let mut table = Table::from_trajectory(meta, &r.model.frame, &outcome.trajectory, controls.as_deref());
    table.diagnostics = Some(serde_json::json!({
        "converged": converged,
        "unknowns": outcome.unknowns.as_slice(),
        "residual": outcome.residual.as_slice(),
        "residual_norm": residual_norm,
        "iterations": outcome.iterations,
        "singular_values": outcome.singular_values,
        "degenerate_directions": outcome.degenerate,
        "cost": cost,
        "t0": r.bc.t0,
        "t1": r.bc.t1,
        "solver": r.solver,
        "restarts": r.restarts,
        "seed": r.seed,
    }));

    let mut summary = vec![
        ("model".to_string(), r.model.name.to_string()),
        ("layout".into(), r.kind.layout().to_string()),
        ("converged".into(), converged.to_string()),
        ("iterations".into(), outcome.iterations.to_string()),
        ("residual".into(), format!("{residual_norm:e}")),
        ("cost".into(), cost.to_string()),
        ("unknowns".into(), join(outcome.unknowns.iter().copied())),
    ];
    if let Some(d) = outcome.degenerate {
        summary.push(("degenerate directions".into(), d.to_string()));
    }
    emit(&table, r.out.as_deref(), r.format, &summary)?;
    match failure {
        None => Ok(()),
        Some(e) => Err(CliError::Numerical(e.to_string())),
    }
}

fn verify(args: VerifyArgs) -> Result<(), CliError> {
    let selected: Vec<BuiltinModel> = match &args.model {
        Some(name) => vec![models::builtin(name).map_err(classify)?],
        None => models::all(),
    };
    let options = VerifyOptions {
        seed: args.seed.unwrap_or(verify::DEFAULT_SEED),
        scenarios: !args.quick,
        ..VerifyOptions::default()
    };
    let reports: Vec<VerificationReport> = selected
        .iter()
        .map(|model| {
            log::info!("verifying {}", model.name);
            let report = verify::verify_model(model, &options);
            let failed = report.failures().count();
            eprintln!(
                "{}: {} ({} checks, {failed} failed)",
                model.name,
                if failed == 0 { "PASS" } else { "FAIL" },
                report.checks.len()
            );
            report
        })
        .collect();
    let json = serde_json::to_string_pretty(&reports).map_err(|e| CliError::io("report", e))?;
    match &args.out {
        Some(path) => std::fs::write(path, json + "\n").map_err(|e| CliError::io(path.display(), e))?,
        None => println!("{json}"),
    }
    let failures: Vec<String> = reports
        .iter()
        .flat_map(|r| r.failures().map(move |c| format!("{}/{}", r.subject, c.name)))
        .collect();
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Numerical(format!("failed checks: {}", failures.join(", "))))
    }
}

fn model_from(args: &ModelArgs) -> Result<BuiltinModel, CliError> {
    let name = args.model.as_deref().ok_or_else(|| CliError::config("--model is required"))?;
    let mut params: ModelParams = models::default_params(name).map_err(classify)?;
    if let Some(r) = args.radius {
        params.radius = r;
    }
    if let Some(inertia) = &args.inertia {
        params.inertia = inertia
            .as_slice()
            .try_into()
            .map_err(|_| CliError::config(format!("--inertia: length {}, expected 3", inertia.len())))?;
    }
    models::builtin_with(name, params).map_err(classify)
}

fn sized(field: &str, v: &Option<Vec<f64>>, len: usize) -> Result<Vec<f64>, CliError> {
    match v {
        None => Ok(vec![0.0; len]),
        Some(v) if v.len() == len => Ok(v.clone()),
        Some(v) => Err(CliError::config(format!("{field}: length {}, expected {len}", v.len()))),
    }
}

fn simulate(args: SimulateArgs) -> Result<(), CliError> {
    let model = model_from(&args.model)?;
    let system = model.mechanical.as_ref().ok_or_else(|| {
        classify(Error::UnsupportedLayout {
            model: model.name.into(),
            layout: Layout::Mechanics,
        })
    })?;
    let (n, m, f) = (model.frame.n(), model.frame.m(), model.frame.free_count());
    let q0 = sized("--q0", &args.q0, n)?;
    let u0 = sized("--u0", &args.u0, f)?;
    let forces = DVector::from_vec(sized("--forces", &args.forces, f)?);
    if !(args.t1 > args.t0) || args.steps == 0 {
        return Err(CliError::config("need t1 > t0 and at least one step"));
    }

    let constant = |_t: f64| forces.clone();
    let field = ForcedMechanics {
        system,
        forces: &constant,
    };
    let initial = PhaseState::from_blocks(n, m, &q0, &u0, None, None).map_err(classify)?;
    let trajectory = integrate(&field, &initial, args.t0, args.t1, args.steps).map_err(classify)?;
    let controls = vec![forces.clone(); trajectory.len()];

    let mut meta = model_meta(&model);
    meta.extend([
        ("layout".into(), Layout::Mechanics.to_string()),
        ("forces".into(), join(forces.iter().copied())),
        ("steps".into(), args.steps.to_string()),
    ]);
    let table = Table::from_trajectory(meta, &model.frame, &trajectory, Some(&controls));
    let last = trajectory.final_state();
    let summary = vec![
        ("model".to_string(), model.name.to_string()),
        ("steps".into(), args.steps.to_string()),
        ("final q".into(), join(last.q().iter().copied())),
        ("final u".into(), join(last.u_free().iter().copied())),
    ];
    let format = args.output.format.unwrap_or_else(|| Format::infer(args.output.out.as_deref()));
    emit(&table, args.output.out.as_deref(), format, &summary)
}

fn cost(args: CostArgs) -> Result<(), CliError> {
    let table = Table::load(&args.input)?;
    let field = |key: &str| {
        table
            .meta(key)
            .ok_or_else(|| CliError::config(format!("{}: no `{key}` in the metadata", args.input.display())))
    };
    let name = field("model")?;
    let mut params = models::default_params(name).map_err(classify)?;
    if let Ok(r) = field("radius") {
        params.radius = r.parse().map_err(|_| CliError::config(format!("radius `{r}` is not a number")))?;
    }
    if let Ok(i) = field("inertia") {
        let v = crate::args::parse_vector(i).map_err(|e| CliError::config(format!("inertia: {e}")))?;
        params.inertia = v
            .as_slice()
            .try_into()
            .map_err(|_| CliError::config(format!("inertia: length {}, expected 3", v.len())))?;
    }
    let model = models::builtin_with(name, params).map_err(classify)?;
    let layout = match field("layout")? {
        "kinematic" => Layout::KinematicOc,
        "dynamic" => Layout::DynamicOc,
        other => return Err(CliError::config(format!("layout `{other}` carries no cost"))),
    };
    let trajectory = table.to_trajectory(layout, &model.frame)?;
    let value = match layout {
        Layout::KinematicOc => evaluate_cost(model.kinematic.as_ref().ok_or_else(|| unsupported(&model, layout))?, &trajectory),
        _ => evaluate_cost(model.dynamic.as_ref().ok_or_else(|| unsupported(&model, layout))?, &trajectory),
    }
    .map_err(classify)?;
    println!("cost: {value}");
    if let Ok(recorded) = field("cost") {
        println!("recorded: {recorded}");
    }
    Ok(())
}

fn unsupported(model: &BuiltinModel, layout: Layout) -> CliError {
    classify(Error::UnsupportedLayout {
        model: model.name.into(),
        layout,
    })
}

fn list() -> Result<(), CliError> {
    for model in models::all() {
        let layouts: Vec<String> = model.layouts().iter().map(|l| l.to_string()).collect();
        println!(
            "{}  n={} m={}  layouts: {}",
            model.name,
            model.frame.n(),
            model.frame.m(),
            layouts.join(", ")
        );
        for sc in &model.scenarios {
            println!("    {:<10} [{}] {}", sc.name, sc.layout, sc.summary);
        }
    }
    Ok(())
}
