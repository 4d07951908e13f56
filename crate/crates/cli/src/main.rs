use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use stablegraph::config_model::{pair_half_edges, sample_conditioned, sample_degrees, DegreeLaw};
use stablegraph::continuum::{GlueBuilder, LengthedGraph, LineBreaker};
use stablegraph::depth_first::{check_fibers, check_plans, check_roundtrip};
use stablegraph::distributions::{
    beta_moment, dirichlet_moment, ml_moment, ml_moment_unshifted, pd_mixed_moment, sample_beta, sample_dirichlet, sample_ml,
    sample_pd, MLParams, MlMethod,
};
use stablegraph::marchal::{grow, MarchalState};
use stablegraph::stats::FreqTable;
use stablegraph::urns::{crp_run, polya_shares, shape_gammas, three_type_run, triangular_red};
use stablegraph::verify::{run_jobs, run_suite, thread_count, Suite, VerifyConfig};
use stablegraph::weights_enum::{brownian_distribution, exact_distribution, ExactDistribution, WeightSeq};
use stablegraph::{Alpha, Multigraph, RandomStream};

/// Samples handled by one job; jobs map to stream ids 0, 1, 2, …
const CHUNK: usize = 256;

#[derive(Parser)]
#[command(name = "stablegraph", version, about = "Exact and sampled marginals of the stable graph")]
struct Cli {
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact law of the marginal shape on M_{s,n}.
    Enumerate {
        #[arg(long)]
        surplus: usize,
        #[arg(long, allow_hyphen_values = true)]
        leaves: isize,
        #[arg(long, value_parser = parse_alpha)]
        alpha: Option<Alpha>,
        /// Use the 3-regular law instead of a stable one.
        #[arg(long)]
        brownian: bool,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Grow shapes by Marchal's algorithm from a kernel drawn from its exact law.
    Marchal {
        #[arg(long)]
        surplus: usize,
        #[arg(long, value_parser = parse_alpha)]
        alpha: Alpha,
        #[arg(long)]
        steps: usize,
        #[arg(long, default_value_t = 1)]
        samples: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = MarchalEmit::Final)]
        emit: MarchalEmit,
    },
    /// Draws or moment formulas for Beta, Dirichlet, Poisson-Dirichlet and Mittag-Leffler laws.
    Dist {
        #[arg(long, value_enum)]
        law: Law,
        /// Comma-separated parameters: beta a,b; dirichlet a1,…,ak; pd β,θ; ml β,θ.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        params: Vec<f64>,
        #[arg(long, default_value_t = 1)]
        samples: usize,
        #[arg(long)]
        seed: Option<u64>,
        /// Print closed-form moments of these orders instead of drawing.
        #[arg(long, value_delimiter = ',')]
        moments: Option<Vec<f64>>,
        #[arg(long, value_enum, default_value_t = MlSampler::Tilted)]
        method: MlSampler,
        /// Customers for the CRP sampler.
        #[arg(long, default_value_t = 1_000_000)]
        steps: u64,
        /// Sticks drawn for Poisson-Dirichlet weights.
        #[arg(long, default_value_t = 20)]
        truncation: usize,
    },
    /// Terminal rescaled statistics of urn schemes.
    Urn {
        #[arg(long, value_enum)]
        scheme: Scheme,
        /// polya: a1,…,ak,β (integers); crp: β,θ; triangular: a,b,γ,β; threetype: edges,deg1,deg2,…
        #[arg(long, value_delimiter = ',', required = true)]
        params: Vec<f64>,
        /// Required for threetype.
        #[arg(long, value_parser = parse_alpha)]
        alpha: Option<Alpha>,
        #[arg(long)]
        steps: u64,
        #[arg(long, default_value_t = 1)]
        reps: usize,
        #[arg(long)]
        seed: u64,
    },
    /// Configuration model with i.i.d. D^(α) degrees.
    Cm {
        #[arg(long, value_parser = parse_alpha)]
        alpha: Alpha,
        #[arg(long)]
        vertices: usize,
        /// Condition on surplus and leaves, "s,n".
        #[arg(long, value_parser = parse_condition, allow_hyphen_values = true)]
        condition: Option<(usize, isize)>,
        #[arg(long, default_value_t = 1)]
        samples: usize,
        #[arg(long)]
        seed: u64,
        /// Rejection attempts allowed per conditioned sample.
        #[arg(long, default_value_t = 100_000_000)]
        budget: u64,
    },
    /// Exhaustive checks of the depth-first bijection.
    Bijection {
        #[arg(long, value_enum)]
        check: BijectionCheck,
        #[arg(long)]
        surplus: usize,
        #[arg(long)]
        leaves: usize,
    },
    /// Finite metric marginals by line-breaking or by gluing trees on a kernel.
    Continuum {
        #[arg(long, value_enum, default_value_t = Method::Linebreak)]
        method: Method,
        #[arg(long)]
        surplus: usize,
        #[arg(long, value_parser = parse_alpha)]
        alpha: Alpha,
        /// Leaves of the line-breaking marginal.
        #[arg(long, default_value_t = 1)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        samples: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Emit::Lengths)]
        emit: Emit,
        /// Leaves of each glued tree marginal.
        #[arg(long, default_value_t = 4)]
        leaves_per_tree: usize,
        /// Pendant trees per kernel vertex.
        #[arg(long, default_value_t = 16)]
        truncation: usize,
    },
    /// Run verification suites; exits nonzero if any check fails.
    Verify {
        #[arg(long, value_parser = parse_suite, num_args = 1.., value_delimiter = ',', required = true)]
        suite: Vec<Suite>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum MarchalEmit {
    Final,
    Trajectory,
}

#[derive(Clone, Copy, ValueEnum)]
enum Law {
    Beta,
    Dirichlet,
    Pd,
    Ml,
}

#[derive(Clone, Copy, ValueEnum)]
enum MlSampler {
    Tilted,
    Crp,
    Stable,
}

#[derive(Clone, Copy, ValueEnum)]
enum Scheme {
    Polya,
    Crp,
    Triangular,
    Threetype,
}

#[derive(Clone, Copy, ValueEnum)]
enum BijectionCheck {
    Roundtrip,
    Fibers,
    Plans,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Linebreak,
    Glue,
}

#[derive(Clone, Copy, ValueEnum)]
enum Emit {
    Lengths,
    Metric,
    Graphjson,
}

fn parse_alpha(s: &str) -> std::result::Result<Alpha, String> {
    let a = Alpha::parse(s).map_err(|e| e.to_string())?;
    if !a.is_exact() {
        eprintln!("warning: alpha {s} is not a rational P/Q; exact arithmetic is disabled");
    }
    Ok(a)
}

fn parse_suite(s: &str) -> std::result::Result<Suite, String> {
    s.parse().map_err(|e: stablegraph::Error| e.to_string())
}

fn parse_condition(s: &str) -> std::result::Result<(usize, isize), String> {
    let (a, b) = s.split_once(',').ok_or("expected s,n")?;
    Ok((a.trim().parse().map_err(|e| format!("{e}"))?, b.trim().parse().map_err(|e| format!("{e}"))?))
}

/// First output line of every stochastic command.
fn header(command: &str, seed: u64, samples: usize, params: Value) -> Value {
    let jobs = samples.div_ceil(CHUNK).max(1);
    json!({"header": {"command": command, "seed": seed, "streams": {"first": 0, "count": jobs}, "params": params}})
}

/// Draws `samples` values in fixed chunks of CHUNK, chunk j on stream j, and
/// concatenates them in order so the result does not depend on thread count.
fn sample_chunked<T: Send>(seed: u64, samples: usize, f: impl Fn(&mut RandomStream) -> stablegraph::Result<T> + Sync) -> Result<Vec<T>> {
    let jobs = samples.div_ceil(CHUNK).max(1);
    let chunks = run_jobs(seed, 0, jobs, thread_count(), |j, rng| {
        let len = CHUNK.min(samples - (j * CHUNK).min(samples));
        (0..len).map(|_| f(rng)).collect::<stablegraph::Result<Vec<T>>>()
    })?;
    Ok(chunks.into_iter().flatten().collect())
}

fn json_lines(head: Value, rows: impl IntoIterator<Item = Value>) -> String {
    let mut s = format!("{head}\n");
    for r in rows {
        writeln!(s, "{r}").expect("writing to a string");
    }
    s
}

fn csv(head: Value, columns: &[String], rows: &[Vec<f64>]) -> String {
    let mut s = format!("# {head}\n{}\n", columns.join(","));
    for r in rows {
        let cells: Vec<String> = r.iter().map(|x| format!("{x}")).collect();
        writeln!(s, "{}", cells.join(",")).expect("writing to a string");
    }
    s
}

fn numbered(prefix: &str, k: usize) -> Vec<String> {
    (0..k).map(|i| format!("{prefix}{i}")).collect()
}

fn enumerate(surplus: usize, leaves: isize, alpha: Option<Alpha>, brownian: bool, format: Format) -> Result<String> {
    let law: ExactDistribution = match (alpha, brownian) {
        (_, true) => brownian_distribution(surplus, leaves)?,
        (Some(a), false) => exact_distribution(surplus, leaves, &WeightSeq::new(a))?,
        (None, false) => bail!("enumerate needs --alpha or --brownian"),
    };
    Ok(match format {
        Format::Json => {
            let rows: Vec<Value> = law
                .entries
                .iter()
                .map(|e| {
                    let (num, den) = e.prob.num_den();
                    json!({
                        "graph": e.graph,
                        "code": e.code,
                        "sym": e.sym,
                        "sl": e.sl,
                        "mult_product": e.mult_product,
                        "weight_product": e.weight_product,
                        "prob_num": num,
                        "prob_den": den,
                    })
                })
                .collect();
            format!("{}\n", serde_json::to_string_pretty(&rows)?)
        }
        Format::Csv => {
            let mut s = String::from("code,sl,weight_product,mult_product,sym,prob_num,prob_den\n");
            for e in &law.entries {
                let (num, den) = e.prob.num_den();
                writeln!(s, "{},{},{},{},{},{num},{den}", e.code.to_hex(), e.sl, e.weight_product, e.mult_product, e.sym)?;
            }
            s
        }
    })
}

fn draw_from(law: &ExactDistribution, rng: &mut RandomStream) -> Multigraph {
    let u = rng.uniform();
    let mut acc = 0.0;
    for e in &law.entries {
        acc += e.prob.to_f64();
        if u < acc {
            return e.graph.clone();
        }
    }
    law.entries.last().expect("non-empty law").graph.clone()
}

fn marchal(surplus: usize, alpha: Alpha, steps: usize, samples: usize, seed: u64, emit: MarchalEmit) -> Result<String> {
    let start = exact_distribution(surplus, if surplus == 0 { 1 } else { 0 }, &WeightSeq::new(alpha))?;
    let trajectories = sample_chunked(seed, samples, |rng| {
        let st = MarchalState::new(draw_from(&start, rng), alpha)?;
        grow(&st, steps, rng)
    })?;
    let head = header("marchal", seed, samples, json!({"surplus": surplus, "alpha": alpha, "steps": steps, "samples": samples}));
    let mut rows = Vec::new();
    for (i, t) in trajectories.iter().enumerate() {
        match emit {
            MarchalEmit::Final => {
                let last = t.last().expect("trajectory includes its start");
                rows.push(json!({"sample": i, "n": last.n(), "code": last.graph.canonical_code()?}));
            }
            MarchalEmit::Trajectory => {
                for (k, st) in t.iter().enumerate() {
                    rows.push(json!({"sample": i, "step": k, "graph": st.graph}));
                }
            }
        }
    }
    Ok(json_lines(head, rows))
}

fn ml_params(law: &str, params: &[f64]) -> Result<MLParams> {
    match params {
        [b, t] => Ok(MLParams::new(*b, *t)?),
        _ => bail!("{law} needs two parameters β,θ"),
    }
}

#[allow(clippy::too_many_arguments)]
fn dist(
    law: Law,
    params: &[f64],
    samples: usize,
    seed: Option<u64>,
    moments: Option<Vec<f64>>,
    method: MlSampler,
    steps: u64,
    truncation: usize,
) -> Result<String> {
    if let Some(powers) = moments {
        let mut s = String::from("power,moment,alternate_form\n");
        for p in powers {
            let (m, alt) = match law {
                Law::Beta => match params {
                    [a, b] => (beta_moment(*a, *b, p, 0.0)?, None),
                    _ => bail!("beta needs a,b"),
                },
                Law::Dirichlet => {
                    let mut pw = vec![0.0; params.len()];
                    *pw.first_mut().context("dirichlet needs parameters")? = p;
                    (dirichlet_moment(params, &pw)?, None)
                }
                Law::Ml => {
                    let mp = ml_params("ml", params)?;
                    (ml_moment(mp, p)?, ml_moment_unshifted(mp, p).ok())
                }
                Law::Pd => {
                    let mp = ml_params("pd", params)?;
                    if p.fract() != 0.0 || p < 1.0 {
                        bail!("PD moments E[ΣP^k] need integer k >= 1");
                    }
                    (pd_mixed_moment(mp.beta, mp.theta, &[p as u32])?, None)
                }
            };
            let alt = alt.map_or(String::new(), |x| format!("{x}"));
            writeln!(s, "{p},{m},{alt}")?;
        }
        return Ok(s);
    }
    let seed = seed.context("drawing samples needs --seed")?;
    let ml_method = match method {
        MlSampler::Tilted => MlMethod::Tilted,
        MlSampler::Crp => MlMethod::Crp { steps },
        MlSampler::Stable => MlMethod::StableExact,
    };
    let (columns, rows): (Vec<String>, Vec<Vec<f64>>) = match law {
        Law::Beta => {
            let [a, b] = params else { bail!("beta needs a,b") };
            (vec!["x".into()], sample_chunked(seed, samples, |rng| Ok(vec![sample_beta(*a, *b, rng)?]))?)
        }
        Law::Dirichlet => (numbered("x", params.len()), sample_chunked(seed, samples, |rng| sample_dirichlet(params, rng))?),
        Law::Pd => {
            let mp = ml_params("pd", params)?;
            let mut cols = numbered("p", truncation);
            cols.push("remainder".into());
            let rows = sample_chunked(seed, samples, |rng| {
                let d = sample_pd(mp.beta, mp.theta, truncation, rng)?;
                let mut r = d.weights;
                r.push(d.remainder);
                Ok(r)
            })?;
            (cols, rows)
        }
        Law::Ml => {
            let mp = ml_params("ml", params)?;
            (vec!["x".into()], sample_chunked(seed, samples, |rng| Ok(vec![sample_ml(mp, rng, ml_method)?]))?)
        }
    };
    let head = header("dist", seed, samples, json!({"law": law_name(law), "params": params, "samples": samples}));
    Ok(csv(head, &columns, &rows))
}

fn law_name(law: Law) -> &'static str {
    match law {
        Law::Beta => "beta",
        Law::Dirichlet => "dirichlet",
        Law::Pd => "pd",
        Law::Ml => "ml",
    }
}

fn urn(scheme: Scheme, params: &[f64], alpha: Option<Alpha>, steps: u64, reps: usize, seed: u64) -> Result<String> {
    let cp = [steps];
    let (name, columns, rows): (&str, Vec<String>, Vec<Vec<f64>>) = match scheme {
        Scheme::Polya => {
            let (beta, init) = params.split_last().context("polya needs a1,…,ak,β")?;
            let to_int = |x: f64| if x.fract() == 0.0 && x > 0.0 { Ok(x as u64) } else { Err(anyhow::anyhow!("polya parameters must be positive integers")) };
            let init: Vec<u64> = init.iter().map(|&x| to_int(x)).collect::<Result<_>>()?;
            let beta = to_int(*beta)?;
            let rows = sample_chunked(seed, reps, |rng| Ok(polya_shares(&init, beta, &cp, rng)?.remove(0)))?;
            ("polya", numbered("share", init.len()), rows)
        }
        Scheme::Crp => {
            let [b, t] = params else { bail!("crp needs β,θ") };
            let rows = sample_chunked(seed, reps, |rng| {
                let st = crp_run(*b, *t, steps, rng)?;
                let k = st.tables.len() as f64;
                Ok(vec![k, k / (steps as f64).powf(*b), st.sorted_shares()[0]])
            })?;
            ("crp", vec!["tables".into(), "tables_rescaled".into(), "largest_share".into()], rows)
        }
        Scheme::Triangular => {
            let [a, b, g, be] = params else { bail!("triangular needs a,b,γ,β") };
            let rows = sample_chunked(seed, reps, |rng| {
                let r = triangular_red(*a, *b, *g, *be, &cp, rng)?[0];
                Ok(vec![r, r / (steps as f64).powf(g / be)])
            })?;
            ("triangular", vec!["red".into(), "red_rescaled".into()], rows)
        }
        Scheme::Threetype => {
            let alpha = alpha.context("threetype needs --alpha")?;
            let (edges, degrees) = params.split_first().context("threetype needs edges,deg1,…")?;
            let degrees: Vec<usize> = degrees.iter().map(|&d| d as usize).collect();
            let gammas = shape_gammas(alpha, *edges as usize, &degrees)?;
            let k = gammas.len();
            let rows = sample_chunked(seed, reps, |rng| {
                let s = three_type_run(alpha, &gammas, &cp, rng)?.remove(0);
                Ok([s.rescaled_a(), s.rescaled_b(), s.rescaled_c()].concat())
            })?;
            let cols = [numbered("a", k), numbered("b", k), numbered("c", k)].concat();
            ("threetype", cols, rows)
        }
    };
    let head = header("urn", seed, reps, json!({"scheme": name, "params": params, "alpha": alpha, "steps": steps, "reps": reps}));
    Ok(csv(head, &columns, &rows))
}

fn cm(alpha: Alpha, vertices: usize, condition: Option<(usize, isize)>, samples: usize, seed: u64, budget: u64) -> Result<String> {
    let law = DegreeLaw::new(alpha)?;
    let params = json!({"alpha": alpha, "vertices": vertices, "condition": condition, "samples": samples, "budget": budget});
    let head = header("cm", seed, samples, params);
    match condition {
        None => {
            let graphs = sample_chunked(seed, samples, |rng| {
                let d = sample_degrees(&law, vertices, rng);
                let total: usize = d.iter().sum();
                if total % 2 == 1 {
                    return Ok(None);
                }
                let g = pair_half_edges(&d, rng)?;
                let comps = g.components();
                Ok(Some(json!({"graph": g, "components": comps})))
            })?;
            let rows = graphs.into_iter().enumerate().map(|(i, g)| match g {
                Some(v) => json!({"sample": i, "result": v}),
                None => json!({"sample": i, "result": null, "reason": "odd degree sum"}),
            });
            Ok(json_lines(head, rows))
        }
        Some((s, n)) => {
            let graphs = sample_chunked(seed, samples, |rng| sample_conditioned(s, n, vertices, &law, budget, rng))?;
            let mut table = FreqTable::new();
            for g in &graphs {
                table.add(g.canonical_code()?);
            }
            let exact = exact_distribution(s, n, &WeightSeq::new(alpha))?.condition(|e| e.graph.vertex_count() == vertices)?;
            let rows = exact.entries.iter().map(|e| {
                json!({
                    "code": e.code,
                    "graph": e.graph,
                    "count": table.counts.get(&e.code).copied().unwrap_or(0),
                    "frequency": table.frequency(&e.code),
                    "exact": e.prob.to_f64(),
                })
            });
            let extra = table.counts.iter().filter(|(c, _)| exact.get(c).is_none()).map(|(c, k)| json!({"code": c, "count": k, "exact": 0.0}));
            Ok(json_lines(head, rows.chain(extra).collect::<Vec<_>>()))
        }
    }
}

fn bijection(check: BijectionCheck, surplus: usize, leaves: usize) -> Result<(String, bool)> {
    let outcome = match check {
        BijectionCheck::Roundtrip => check_roundtrip(surplus, leaves)?,
        BijectionCheck::Fibers => check_fibers(surplus, leaves)?,
        BijectionCheck::Plans => check_plans(surplus, leaves)?,
    };
    let pass = outcome.passed();
    let mut s = format!(
        "{} {} (s,n)=({surplus},{leaves}): {} checked\n",
        if pass { "PASS" } else { "FAIL" },
        outcome.check,
        outcome.checked
    );
    if let Some(c) = &outcome.counterexample {
        writeln!(s, "{}", serde_json::to_string_pretty(c)?)?;
    }
    Ok((s, pass))
}

#[allow(clippy::too_many_arguments)]
fn continuum(
    method: Method,
    surplus: usize,
    alpha: Alpha,
    n: usize,
    samples: usize,
    seed: u64,
    emit: Emit,
    leaves_per_tree: usize,
    truncation: usize,
) -> Result<String> {
    let spaces: Vec<(LengthedGraph, Option<f64>)> = match method {
        Method::Linebreak => {
            let lb = LineBreaker::new(surplus, alpha)?;
            sample_chunked(seed, samples, |rng| Ok((lb.sample(n, rng)?, None)))?
        }
        Method::Glue => {
            let gb = GlueBuilder::new(surplus, alpha, leaves_per_tree, truncation)?;
            sample_chunked(seed, samples, |rng| {
                let g = gb.sample(rng)?;
                Ok((g.space, Some(g.remainder)))
            })?
        }
    };
    let method_name = match method {
        Method::Linebreak => "linebreak",
        Method::Glue => "glue",
    };
    let params = json!({
        "method": method_name,
        "surplus": surplus,
        "alpha": alpha,
        "n": n,
        "samples": samples,
        "leaves_per_tree": leaves_per_tree,
        "truncation": truncation,
    });
    let head = header("continuum", seed, samples, params);
    let rows = spaces.iter().enumerate().map(|(i, (g, rem))| {
        let mut row = match emit {
            Emit::Lengths => json!({"sample": i, "lengths": g.lengths()}),
            Emit::Metric => json!({"sample": i, "metric": g.metric()}),
            Emit::Graphjson => json!({"sample": i, "graph": g}),
        };
        if let Some(r) = rem {
            row["remainder"] = json!(r);
        }
        row
    });
    Ok(json_lines(head, rows.collect::<Vec<_>>()))
}

fn verify(suites: &[Suite], seed: u64) -> Result<(String, bool)> {
    let cfg = VerifyConfig::new(seed);
    let mut reports = Vec::new();
    for &s in suites {
        let r = run_suite(s, cfg)?;
        for c in &r.checks {
            eprintln!("{}", c.line());
        }
        reports.push(r);
    }
    let pass = reports.iter().all(|r| r.pass);
    Ok((format!("{}\n", serde_json::to_string_pretty(&json!({"pass": pass, "suites": reports}))?), pass))
}

fn run(cli: Cli) -> Result<(String, bool)> {
    Ok(match cli.command {
        Command::Enumerate { surplus, leaves, alpha, brownian, format } => (enumerate(surplus, leaves, alpha, brownian, format)?, true),
        Command::Marchal { surplus, alpha, steps, samples, seed, emit } => (marchal(surplus, alpha, steps, samples, seed, emit)?, true),
        Command::Dist { law, params, samples, seed, moments, method, steps, truncation } => {
            (dist(law, &params, samples, seed, moments, method, steps, truncation)?, true)
        }
        Command::Urn { scheme, params, alpha, steps, reps, seed } => (urn(scheme, &params, alpha, steps, reps, seed)?, true),
        Command::Cm { alpha, vertices, condition, samples, seed, budget } => (cm(alpha, vertices, condition, samples, seed, budget)?, true),
        Command::Bijection { check, surplus, leaves } => bijection(check, surplus, leaves)?,
        Command::Continuum { method, surplus, alpha, n, samples, seed, emit, leaves_per_tree, truncation } => {
            (continuum(method, surplus, alpha, n, samples, seed, emit, leaves_per_tree, truncation)?, true)
        }
        Command::Verify { suite, seed } => verify(&suite, seed)?,
    })
}

fn main() -> Result<ExitCode> {
    let cli = Cli::parse();
    let out = cli.out.clone();
    let (text, pass) = run(cli)?;
    match out {
        Some(path) => std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(if pass { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}
