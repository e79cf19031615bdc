//! Verb dispatch. Every verb prints one deterministic document: JSON with
//! sorted keys, or DOT for `graph --format dot`.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use mau_core::decompose::{decompose_over_cliques, DecompositionReport};
use mau_core::expectation::{
    choose_action, containment_report, eu_brute, eu_factored, BayesNet, Distribution,
};
use mau_core::graph::{
    build_perfect_map, check_graphoid_axioms, maximal_cliques, GraphoidCondition, GraphoidReport,
    UndirectedGraph,
};
use mau_core::independence::{
    test_additive_partition, test_cai_at, test_cai_extended, test_gai,
    test_utility_independence_at, CaiQuery,
};
use mau_core::{
    AdditiveDecomposition, Assignment, Scope, ToleranceConfig, UtilityTable, VariableSpace,
};
use serde_json::{json, Value};

use crate::error::CliError;
use crate::format::{
    factored_file, names, parse_actions, parse_bayes_net, parse_probability_model, parse_utility,
    ProbabilityModel, Utility,
};
use crate::scope_expr::{parse_assignment, parse_groups, parse_scope};

#[derive(Debug, Parser)]
#[command(
    name = "mau",
    version,
    about = "Independence structure of multi-attribute utility functions"
)]
struct Cli {
    /// Relative tolerance; values closer than epsilon * (1 + max|u|) are equal.
    #[arg(long, global = true, default_value_t = ToleranceConfig::DEFAULT_EPSILON)]
    epsilon: f64,
    /// Reference state as `var=val,...`; unlisted variables take their first value.
    #[arg(long, global = true)]
    reference: Option<String>,
    /// Lift the dense state-count guard.
    #[arg(long, global = true)]
    force: bool,
    /// Output format of `graph`.
    #[arg(long, global = true, value_enum, default_value_t = GraphFormat::Dot)]
    format: GraphFormat,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum GraphFormat {
    Dot,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Method {
    Brute,
    Factored,
    Both,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Perfect CA-independence map.
    Graph { utility: PathBuf },
    /// Maximal cliques of the perfect map.
    Cliques { utility: PathBuf },
    /// Additive decomposition over the maximal cliques.
    Decompose {
        utility: PathBuf,
        /// Also write the factored utility file here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Independence tests.
    Check {
        #[command(subcommand)]
        test: Check,
    },
    /// Expected utility under a Bayesian network or explicit distribution.
    Eu {
        utility: PathBuf,
        probability: PathBuf,
        #[arg(long)]
        evidence: Option<String>,
        /// Defaults to `factored` for networks and `brute` for explicit distributions.
        #[arg(long, value_enum)]
        method: Option<Method>,
    },
    /// Maximum expected utility action.
    Choose {
        utility: PathBuf,
        network: PathBuf,
        actions: PathBuf,
    },
    /// Graphoid conditions of the CAI relation.
    Axioms { utility: PathBuf },
}

#[derive(Debug, Subcommand)]
enum Check {
    /// Utility independence of X from the rest.
    Ui {
        utility: PathBuf,
        #[arg(long)]
        x: String,
    },
    /// Conditional additive independence of X and Y given Z.
    Cai {
        utility: PathBuf,
        #[arg(long)]
        x: String,
        #[arg(long, default_value = "")]
        z: String,
        #[arg(long)]
        y: String,
    },
    /// Additive independence of a partition.
    Ai {
        utility: PathBuf,
        #[arg(long)]
        partition: String,
    },
    /// Generalized additive independence of overlapping scopes.
    Gai {
        utility: PathBuf,
        #[arg(long)]
        scopes: String,
    },
}

/// Exit status and captured output of one invocation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Parses `args` (program name first) and executes the verb.
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                Outcome {
                    code: 2,
                    stdout: String::new(),
                    stderr: text,
                }
            } else {
                Outcome {
                    code: 0,
                    stdout: text,
                    stderr: String::new(),
                }
            };
        }
    };
    match execute(&cli) {
        Ok((mut stdout, code)) => {
            if !stdout.ends_with('\n') {
                stdout.push('\n');
            }
            Outcome {
                code,
                stdout,
                stderr: String::new(),
            }
        }
        Err(e) => Outcome {
            code: e.exit_code(),
            stdout: String::new(),
            stderr: format!("mau: {e}\n"),
        },
    }
}

struct Context {
    tol: ToleranceConfig,
    reference: Option<String>,
    force: bool,
}

impl Context {
    fn reference(&self, space: &VariableSpace) -> Result<Assignment, CliError> {
        match &self.reference {
            Some(text) => parse_assignment(text, space),
            None => Ok(Assignment::new()),
        }
    }

    fn tolerance(&self, scale: f64) -> Value {
        json!({ "epsilon": self.tol.epsilon(), "threshold": self.tol.threshold(scale) })
    }

    fn load(&self, path: &Path) -> Result<Utility, CliError> {
        parse_utility(&read(path)?, self.force)
    }

    fn load_dense(&self, path: &Path) -> Result<UtilityTable, CliError> {
        self.load(path)?.to_dense(self.force)
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn render(value: &Value) -> String {
    serde_json::to_string_pretty(value).expect("JSON values always serialize")
}

fn execute(cli: &Cli) -> Result<(String, i32), CliError> {
    let ctx = Context {
        tol: ToleranceConfig::new(cli.epsilon)?,
        reference: cli.reference.clone(),
        force: cli.force,
    };
    match &cli.command {
        Command::Graph { utility } => graph(&ctx, utility, cli.format),
        Command::Cliques { utility } => cliques(&ctx, utility),
        Command::Decompose { utility, out } => decompose(&ctx, utility, out.as_deref()),
        Command::Check { test } => check(&ctx, test),
        Command::Eu {
            utility,
            probability,
            evidence,
            method,
        } => eu(&ctx, utility, probability, evidence.as_deref(), *method),
        Command::Choose {
            utility,
            network,
            actions,
        } => choose(&ctx, utility, network, actions),
        Command::Axioms { utility } => axioms(&ctx, utility),
    }
}

fn quote(name: &str) -> String {
    format!("\"{}\"", name.replace('\\', "\\\\").replace('"', "\\\""))
}

/// `graph U { "x"; ... "x" -- "y"; }`, vertices and edges in variable order.
pub fn to_dot(g: &UndirectedGraph) -> String {
    let space = g.space();
    let mut out = String::from("graph U {\n");
    for v in space.variables() {
        out.push_str(&format!("  {};\n", quote(v.name())));
    }
    for (a, b) in g.edges() {
        out.push_str(&format!(
            "  {} -- {};\n",
            quote(space.variable(a).name()),
            quote(space.variable(b).name())
        ));
    }
    out.push_str("}\n");
    out
}

fn graph(ctx: &Context, path: &Path, format: GraphFormat) -> Result<(String, i32), CliError> {
    let u = ctx.load_dense(path)?;
    let g = build_perfect_map(&u, &ctx.tol);
    let text = match format {
        GraphFormat::Dot => to_dot(&g),
        GraphFormat::Json => {
            let space = g.space();
            let edges: Vec<Value> = g
                .edges()
                .into_iter()
                .map(|(a, b)| json!([space.variable(a).name(), space.variable(b).name()]))
                .collect();
            render(&json!({
                "vertices": names(space, &space.full_scope()),
                "edges": edges,
                "tolerance": ctx.tolerance(u.max_abs()),
            }))
        }
    };
    Ok((text, 0))
}

fn scope_list(space: &VariableSpace, scopes: &[Scope]) -> Value {
    Value::from(
        scopes
            .iter()
            .map(|s| Value::from(names(space, s)))
            .collect::<Vec<_>>(),
    )
}

fn cliques(ctx: &Context, path: &Path) -> Result<(String, i32), CliError> {
    let u = ctx.load_dense(path)?;
    let g = build_perfect_map(&u, &ctx.tol);
    let cliques = maximal_cliques(&g);
    Ok((
        render(&json!({
            "cliques": scope_list(u.space(), &cliques),
            "tolerance": ctx.tolerance(u.max_abs()),
        })),
        0,
    ))
}

fn clique_decomposition(ctx: &Context, u: &UtilityTable) -> Result<DecompositionReport, CliError> {
    let g = build_perfect_map(u, &ctx.tol);
    Ok(decompose_over_cliques(
        u,
        &g,
        &ctx.reference(u.space())?,
        &ctx.tol,
    )?)
}

fn decompose(ctx: &Context, path: &Path, out: Option<&Path>) -> Result<(String, i32), CliError> {
    let u = ctx.load_dense(path)?;
    let report = clique_decomposition(ctx, &u)?;
    let space = u.space();
    let file = factored_file(&report.decomposition);
    if let Some(out) = out {
        let text = serde_json::to_string_pretty(&file).expect("utility files always serialize");
        fs::write(out, text + "\n").map_err(|source| CliError::Io {
            path: out.display().to_string(),
            source,
        })?;
    }
    let assignment: Vec<Value> = report
        .clique_assignment
        .iter()
        .map(|(term, clique)| json!({ "interaction": names(space, term), "factor": names(space, clique) }))
        .collect();
    Ok((
        render(&json!({
            "utility": serde_json::to_value(&file).expect("utility files always serialize"),
            "max_residual": report.max_residual,
            "interactions": assignment,
            "tolerance": ctx.tolerance(u.max_abs()),
        })),
        0,
    ))
}

fn check(ctx: &Context, test: &Check) -> Result<(String, i32), CliError> {
    let (name, u, holds, detail) = match test {
        Check::Ui { utility, x } => {
            let u = ctx.load_dense(utility)?;
            let x = parse_scope(x, u.space())?;
            let reference = ctx.reference(u.space())?;
            let verdict = test_utility_independence_at(&u, &x, &reference, &ctx.tol)?;
            let detail = json!({ "x": names(u.space(), &x) });
            ("ui", u, verdict.holds, detail)
        }
        Check::Cai { utility, x, z, y } => {
            let u = ctx.load_dense(utility)?;
            let space = u.space();
            let (x, z, y) = (
                parse_scope(x, space)?,
                parse_scope(z, space)?,
                parse_scope(y, space)?,
            );
            let q = CaiQuery::new(x, z, y)?;
            let covering = q.x.len() + q.z.len() + q.y.len() == space.len();
            let holds = if covering {
                test_cai_at(&u, &q, &ctx.reference(space)?, &ctx.tol)?
            } else {
                test_cai_extended(&u, &q.x, &q.z, &q.y, &ctx.tol)?
            };
            let detail = json!({
                "x": names(space, &q.x),
                "z": names(space, &q.z),
                "y": names(space, &q.y),
                "remainder_split": !covering,
            });
            ("cai", u, holds, detail)
        }
        Check::Ai { utility, partition } => {
            let u = ctx.load_dense(utility)?;
            let parts = parse_groups(partition, u.space(), true)?;
            let holds = test_additive_partition(&u, &parts, &ctx.tol)?;
            let detail = json!({ "partition": scope_list(u.space(), &parts) });
            ("ai", u, holds, detail)
        }
        Check::Gai { utility, scopes } => {
            let u = ctx.load_dense(utility)?;
            let scopes = parse_groups(scopes, u.space(), false)?;
            let holds = test_gai(&u, &scopes, &ctx.tol)?;
            let detail = json!({ "scopes": scope_list(u.space(), &scopes) });
            ("gai", u, holds, detail)
        }
    };
    let mut report = json!({
        "test": name,
        "holds": holds,
        "tolerance": ctx.tolerance(u.max_abs()),
    });
    if let (Value::Object(map), Value::Object(extra)) = (&mut report, detail) {
        map.extend(extra);
    }
    Ok((render(&report), 0))
}

/// Factored form of a utility: as given, or decomposed over the cliques of its perfect map.
fn factored(ctx: &Context, u: &Utility) -> Result<AdditiveDecomposition, CliError> {
    match u {
        Utility::Factored(d) => Ok(d.clone()),
        Utility::Dense(t) => Ok(clique_decomposition(ctx, t)?.decomposition),
    }
}

fn scale(u: &Utility) -> f64 {
    match u {
        Utility::Dense(t) => t.max_abs(),
        Utility::Factored(d) => d.magnitude_bound(),
    }
}

fn brute<P: Distribution>(
    ctx: &Context,
    u: &Utility,
    p: &P,
    evidence: &Assignment,
) -> Result<f64, CliError> {
    let value = match u {
        Utility::Dense(t) => eu_brute(t, p, evidence, ctx.force)?,
        Utility::Factored(d) => eu_brute(d, p, evidence, ctx.force)?,
    };
    Ok(value)
}

fn eu(
    ctx: &Context,
    utility: &Path,
    probability: &Path,
    evidence: Option<&str>,
    method: Option<Method>,
) -> Result<(String, i32), CliError> {
    let u = ctx.load(utility)?;
    let space = u.space().clone();
    let model = parse_probability_model(&read(probability)?, &space)?;
    let evidence = match evidence {
        Some(text) => parse_assignment(text, &space)?,
        None => Assignment::new(),
    };
    let evidence_json: serde_json::Map<String, Value> = evidence
        .iter()
        .map(|(v, x)| {
            let var = space.variable(v);
            (
                var.name().to_string(),
                Value::from(var.domain()[x].as_str()),
            )
        })
        .collect();
    let tolerance = ctx.tolerance(scale(&u));
    let mut report = json!({ "evidence": evidence_json, "tolerance": tolerance });
    let map = report.as_object_mut().expect("object literal");
    let mut code = 0;
    match model {
        ProbabilityModel::Explicit(p) => {
            if matches!(method, Some(Method::Factored | Method::Both)) {
                return Err(CliError::Input(
                    "the factored method needs a Bayesian network, not an explicit distribution"
                        .into(),
                ));
            }
            map.insert("method".into(), json!("brute"));
            map.insert(
                "expected_utility".into(),
                json!(brute(ctx, &u, &p, &evidence)?),
            );
        }
        ProbabilityModel::Network(bn) => match method.unwrap_or(Method::Factored) {
            Method::Brute => {
                map.insert("method".into(), json!("brute"));
                map.insert(
                    "expected_utility".into(),
                    json!(brute(ctx, &u, &bn, &evidence)?),
                );
            }
            Method::Factored => {
                map.insert("method".into(), json!("factored"));
                let (value, containment) = factored_eu(ctx, &u, &bn, &evidence)?;
                map.insert("expected_utility".into(), json!(value));
                map.insert("containment".into(), containment);
            }
            Method::Both => {
                let b = brute(ctx, &u, &bn, &evidence)?;
                let (f, containment) = factored_eu(ctx, &u, &bn, &evidence)?;
                let threshold = ctx.tol.threshold(scale(&u));
                let difference = (b - f).abs();
                let agree = difference <= threshold;
                if !agree {
                    code = 1;
                }
                map.insert("method".into(), json!("both"));
                map.insert("brute".into(), json!(b));
                map.insert("factored".into(), json!(f));
                map.insert("difference".into(), json!(difference));
                map.insert("agree".into(), json!(agree));
                map.insert("containment".into(), containment);
            }
        },
    }
    Ok((render(&report), code))
}

fn factored_eu(
    ctx: &Context,
    u: &Utility,
    bn: &BayesNet,
    evidence: &Assignment,
) -> Result<(f64, Value), CliError> {
    let d = factored(ctx, u)?;
    let value = eu_factored(&d, bn, evidence)?;
    let containment = containment_report(&d, bn)?;
    let space = d.space();
    let entries: Vec<Value> = containment
        .entries
        .iter()
        .map(|e| {
            json!({
                "scope": names(space, &e.scope),
                "family_of": e.family_of.map(|c| space.variable(c).name().to_string()),
            })
        })
        .collect();
    Ok((
        value,
        json!({ "factors": entries, "uncovered": containment.uncovered }),
    ))
}

fn choose(
    ctx: &Context,
    utility: &Path,
    network: &Path,
    actions: &Path,
) -> Result<(String, i32), CliError> {
    let u = ctx.load(utility)?;
    let bn = parse_bayes_net(&read(network)?)?;
    let actions = parse_actions(&read(actions)?, u.space())?;
    let d = factored(ctx, &u)?;
    let choice = choose_action(&d, &bn, &actions)?;
    let listed: Vec<Value> = actions
        .actions()
        .iter()
        .zip(&choice.expected_utilities)
        .map(|(a, eu)| json!({ "label": a.label, "expected_utility": eu }))
        .collect();
    Ok((
        render(&json!({
            "best": actions.actions()[choice.best].label,
            "actions": listed,
            "tolerance": ctx.tolerance(scale(&u)),
        })),
        0,
    ))
}

fn graphoid_json(space: &VariableSpace, report: &GraphoidReport) -> Value {
    let mut conditions = serde_json::Map::new();
    for c in GraphoidCondition::ALL {
        let t = report.tally(c);
        conditions.insert(
            c.name().into(),
            json!({ "checked": t.checked, "violated": t.violated }),
        );
    }
    let violations: Vec<Value> = report
        .violations
        .iter()
        .map(|v| {
            json!({
                "condition": v.condition.name(),
                "x": names(space, &v.x),
                "z": names(space, &v.z),
                "y": names(space, &v.y),
                "w": names(space, &v.w),
            })
        })
        .collect();
    json!({
        "conditions": conditions,
        "total_violations": report.total_violations(),
        "violations": violations,
    })
}

fn axioms(ctx: &Context, path: &Path) -> Result<(String, i32), CliError> {
    let u = ctx.load_dense(path)?;
    let report = check_graphoid_axioms(&u, &ctx.tol)?;
    let mut value = graphoid_json(u.space(), &report);
    value
        .as_object_mut()
        .expect("object literal")
        .insert("tolerance".into(), ctx.tolerance(u.max_abs()));
    Ok((render(&value), 0))
}
