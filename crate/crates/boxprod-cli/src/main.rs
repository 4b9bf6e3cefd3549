//! Command-line front end: parse group specs, run box-product analyses and
//! verification batteries, emit JSON reports and DOT graphs.

use anyhow::{anyhow, bail, Context, Result};
use boxprod::{
    analyze, dot, group_spec_string, imprimitivity_witness, parse_group_spec,
    primitivity_certificate, wreath_product_action, AnalyzeConfig, BoxProduct,
    ImprimitivityWitness, Part, Vertex,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use std::io::Write;
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "boxprod",
    about = "Box products of permutation groups on truncated biregular trees",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Job {
    /// First factor, e.g. "3; (1 2); (1 2 3)"
    #[arg(long = "m-spec")]
    m_spec: String,
    /// Second factor, e.g. "2; (1 2)"
    #[arg(long = "n-spec")]
    n_spec: String,
    /// Ambient truncation depth
    #[arg(long, default_value_t = 6)]
    depth: usize,
    /// Inner margin below the ambient depth
    #[arg(long, default_value_t = 2)]
    margin: usize,
    /// Seed for every randomised battery
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Size of the randomised property batteries
    #[arg(long, default_value_t = 100)]
    battery: usize,
    /// Output file (stdout when absent)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Subcommand)]
enum Command {
    /// Full verdict report with the verification battery; exits nonzero if
    /// any verification fails.
    Analyze(Job),
    /// Vertex orbit labelling compared against the brute-force closure.
    Orbits(Job),
    /// Suborbit sizes of the stabiliser of the part-Y root.
    Suborbits {
        #[command(flatten)]
        job: Job,
        /// Largest half-distance to report (suborbits at distance 2k)
        #[arg(long, default_value_t = 2)]
        max_k: usize,
    },
    /// Constructive imprimitivity witness, when the prediction is negative.
    Witness(Job),
    /// Primitivity certificates for random inner vertex pairs.
    Certificate {
        #[command(flatten)]
        job: Job,
        /// Number of random seed pairs to certify
        #[arg(long, default_value_t = 20)]
        pairs: usize,
    },
    /// The complete bipartite quotient graph.
    Quotient(Job),
    /// DOT export of a chosen structure.
    ExportDot {
        #[command(flatten)]
        job: Job,
        #[arg(long, value_enum)]
        target: DotTarget,
    },
    /// Order and primitivity of the wreath product in product action, next
    /// to the box product verdicts.
    CompareWreath(Job),
}

#[derive(Clone, Copy, ValueEnum)]
enum DotTarget {
    Tree,
    Orbital,
    Quotient,
    WreathOrbital,
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(exit) => std::process::exit(exit),
        Err(err) => {
            eprintln!("error: {err:#}");
            std::process::exit(2);
        }
    }
}

fn build(job: &Job) -> Result<BoxProduct> {
    let m = parse_group_spec(&job.m_spec).context("parsing --m-spec")?;
    let n = parse_group_spec(&job.n_spec).context("parsing --n-spec")?;
    if job.depth < 2 * job.margin {
        bail!(
            "depth {} must be at least twice the margin {}",
            job.depth,
            job.margin
        );
    }
    BoxProduct::new(m, n, job.depth, job.margin).map_err(|e| anyhow!("building the model: {e}"))
}

fn emit(job: &Job, text: String) -> Result<()> {
    match &job.out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {path:?}"))?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Analyze(job) => {
            let bp = build(&job)?;
            let config = AnalyzeConfig {
                battery: job.battery,
                seed: job.seed,
                ..AnalyzeConfig::default()
            };
            let outcome = analyze(&bp, &config).map_err(|e| anyhow!("analysis failed: {e}"))?;
            let passed = outcome.all_passed();
            let text = match job.format {
                Format::Json => serde_json::to_string_pretty(&outcome)? + "\n",
                Format::Text => render_outcome_text(&outcome),
            };
            emit(&job, text)?;
            Ok(if passed { 0 } else { 1 })
        }
        Command::Orbits(job) => {
            let bp = build(&job)?;
            let approx = bp.finite_approx().map_err(|e| anyhow!("{e}"))?;
            let orbits = bp.vertex_orbits();
            let mut rows = Vec::new();
            let mut coherent = true;
            for v in bp.tree().vertices() {
                if !bp.is_inner(v) {
                    continue;
                }
                let label = orbits.label(v).expect("labelled");
                let closure = bp.orbit_bruteforce(&approx, v).map_err(|e| anyhow!("{e}"))?;
                for w in &closure {
                    if bp.is_inner(w) && orbits.label(w) != Some(label) {
                        coherent = false;
                    }
                }
                rows.push(json!({
                    "vertex": v.to_string(),
                    "part": match v.part() { Part::X => "X", Part::Y => "Y" },
                    "orbit": label.1,
                    "bruteforce_orbit_size": closure.iter().filter(|w| bp.is_inner(w)).count(),
                }));
            }
            let doc = json!({
                "m": group_spec_string(bp.m()),
                "n": group_spec_string(bp.n()),
                "x_orbits": orbits.x_orbit_count,
                "y_orbits": orbits.y_orbit_count,
                "oracle_coherent": coherent,
                "vertices": rows,
            });
            let text = match job.format {
                Format::Json => serde_json::to_string_pretty(&doc)? + "\n",
                Format::Text => {
                    let mut s = format!(
                        "orbits on part X: {}, part Y: {} (oracle coherent: {})\n",
                        orbits.x_orbit_count, orbits.y_orbit_count, coherent
                    );
                    for row in doc["vertices"].as_array().unwrap() {
                        s.push_str(&format!(
                            "  {} [{}] orbit {}\n",
                            row["vertex"].as_str().unwrap(),
                            row["part"].as_str().unwrap(),
                            row["orbit"]
                        ));
                    }
                    s
                }
            };
            emit(&job, text)?;
            Ok(if coherent { 0 } else { 1 })
        }
        Command::Suborbits { job, max_k } => {
            let bp = build(&job)?;
            let q = Vertex::q();
            let mut table = Vec::new();
            for k in 1..=max_k {
                if 2 * k > bp.tree().depth_limit() {
                    break;
                }
                let subs = bp.suborbits(&q, k).map_err(|e| anyhow!("{e}"))?;
                table.push(json!({
                    "distance": 2 * k,
                    "sizes": subs.iter().map(|s| s.size).collect::<Vec<_>>(),
                    "representatives": subs
                        .iter()
                        .map(|s| s.representative.to_string())
                        .collect::<Vec<_>>(),
                }));
            }
            let doc = json!({ "base": q.to_string(), "suborbits": table });
            let text = match job.format {
                Format::Json => serde_json::to_string_pretty(&doc)? + "\n",
                Format::Text => {
                    let mut s = String::new();
                    for row in doc["suborbits"].as_array().unwrap() {
                        s.push_str(&format!(
                            "distance {}: sizes {}\n",
                            row["distance"], row["sizes"]
                        ));
                    }
                    s
                }
            };
            emit(&job, text)?;
            Ok(0)
        }
        Command::Witness(job) => {
            let bp = build(&job)?;
            let approx = bp.finite_approx().map_err(|e| anyhow!("{e}"))?;
            let witness = imprimitivity_witness(&bp, &approx);
            let (doc, passed) = match witness {
                Ok(ImprimitivityWitness::Partition(w)) => {
                    let passed = w.check.passed();
                    (serde_json::to_value(&w)?, passed)
                }
                Ok(ImprimitivityWitness::Delegated { reason }) => {
                    (json!({ "delegated": reason }), true)
                }
                Err(e) => (json!({ "no_witness": e.to_string() }), true),
            };
            let text = match job.format {
                Format::Json => serde_json::to_string_pretty(&doc)? + "\n",
                Format::Text => format!("{doc:#}\n"),
            };
            emit(&job, text)?;
            Ok(if passed { 0 } else { 1 })
        }
        Command::Certificate { job, pairs } => {
            let bp = build(&job)?;
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(job.seed);
            let inner_y: Vec<Vertex> = bp
                .tree()
                .vertices()
                .filter(|v| v.part() == Part::Y && bp.is_inner(v))
                .cloned()
                .collect();
            let mut results = Vec::new();
            let mut all_ok = true;
            let mut attempted = 0usize;
            while attempted < pairs {
                let a = inner_y[rng.random_range(0..inner_y.len())].clone();
                let b = inner_y[rng.random_range(0..inner_y.len())].clone();
                if a == b {
                    continue;
                }
                attempted += 1;
                match primitivity_certificate(&bp, &a, &b) {
                    Ok(cert) => results.push(json!({
                        "pair": [a.to_string(), b.to_string()],
                        "verified": true,
                        "reduced": cert.reduce.is_some(),
                        "collapse_centre": cert.collapse.centre.to_string(),
                        "transports": cert.transports.len(),
                    })),
                    Err(e) => {
                        all_ok = false;
                        results.push(json!({
                            "pair": [a.to_string(), b.to_string()],
                            "verified": false,
                            "error": e.to_string(),
                        }));
                    }
                }
            }
            let doc = json!({ "certificates": results });
            let text = match job.format {
                Format::Json => serde_json::to_string_pretty(&doc)? + "\n",
                Format::Text => format!("{doc:#}\n"),
            };
            emit(&job, text)?;
            Ok(if all_ok { 0 } else { 1 })
        }
        Command::Quotient(job) => {
            let bp = build(&job)?;
            let q = bp.quotient_graph();
            let edge_orbits = bp.edge_orbit_count();
            let coherent = edge_orbits == q.edge_count();
            let doc = json!({
                "x_orbits": q.x_orbits,
                "y_orbits": q.y_orbits,
                "edges": q.edge_count(),
                "edge_orbits_on_tree": edge_orbits,
                "coherent": coherent,
            });
            let text = match job.format {
                Format::Json => serde_json::to_string_pretty(&doc)? + "\n",
                Format::Text => format!(
                    "quotient is the complete bipartite graph K_{{{},{}}} ({} edges; tree edge orbits {})\n",
                    q.x_orbits,
                    q.y_orbits,
                    q.edge_count(),
                    edge_orbits
                ),
            };
            emit(&job, text)?;
            Ok(if coherent { 0 } else { 1 })
        }
        Command::ExportDot { job, target } => {
            let bp = build(&job)?;
            let text = match target {
                DotTarget::Tree => dot::tree_to_dot(bp.tree(), Some(bp.colouring())),
                DotTarget::Quotient => dot::quotient_to_dot(&bp.quotient_graph()),
                DotTarget::Orbital => {
                    let q = Vertex::q();
                    let w2 = bp
                        .tree()
                        .sphere(&q, 2)
                        .map_err(|e| anyhow!("{e}"))?
                        .vertices
                        .first()
                        .cloned()
                        .ok_or_else(|| anyhow!("tree too shallow for an orbital graph"))?;
                    let orbital = bp.orbital_graph(&q, &w2).map_err(|e| anyhow!("{e}"))?;
                    dot::graph_to_dot(&orbital.graph, "orbital")
                }
                DotTarget::WreathOrbital => {
                    let w = wreath_product_action(bp.m(), bp.n(), 10_000)
                        .map_err(|e| anyhow!("{e}"))?;
                    let graph = w.orbital_graph(0, 1).map_err(|e| anyhow!("{e}"))?;
                    dot::graph_to_dot(&graph, "wreath_orbital")
                }
            };
            emit(&job, text)?;
            Ok(0)
        }
        Command::CompareWreath(job) => {
            let bp = build(&job)?;
            let report = boxprod::predict(&bp).map_err(|e| anyhow!("{e}"))?;
            let wreath = wreath_product_action(bp.m(), bp.n(), 10_000);
            let wreath_doc = match wreath {
                Ok(w) => {
                    let c = w.classify().map_err(|e| anyhow!("{e}"))?;
                    json!({
                        "degree": w.degree(),
                        "order": w.order().to_string(),
                        "transitive": c.transitive,
                        "primitive": c.primitive,
                    })
                }
                Err(e) => json!({ "unavailable": e.to_string() }),
            };
            let doc = json!({
                "wreath_product_action": wreath_doc,
                "box_product": {
                    "transitive": report.transitive,
                    "primitive": report.primitive,
                    "cardinality": report.cardinality,
                },
            });
            let text = match job.format {
                Format::Json => serde_json::to_string_pretty(&doc)? + "\n",
                Format::Text => format!("{doc:#}\n"),
            };
            emit(&job, text)?;
            Ok(0)
        }
    }
}

fn render_outcome_text(outcome: &boxprod::AnalysisOutcome) -> String {
    let r = &outcome.report;
    let verdict = |name: &str, v: &boxprod::Verdict<bool>| -> String {
        match v {
            boxprod::Verdict::Decided {
                value, criterion, ..
            } => format!("  {name}: {value}   [{criterion}]\n"),
            boxprod::Verdict::OutOfHypothesis { reason } => {
                format!("  {name}: out of hypothesis ({reason})\n")
            }
        }
    };
    let mut s = String::new();
    s.push_str(&format!(
        "box product of degree-{} and degree-{} factors\n",
        r.m_degree, r.n_degree
    ));
    s.push_str(&verdict("transitive", &r.transitive));
    s.push_str(&verdict("primitive", &r.primitive));
    s.push_str(&verdict("simple", &r.simple));
    s.push_str(&verdict("discrete", &r.discrete));
    s.push_str(&verdict("subdegree-finite", &r.subdegree_finite));
    s.push_str(&verdict("compact stabilisers", &r.compact_stabilisers));
    s.push_str(&verdict("compactly generated", &r.compactly_generated));
    match &r.cardinality {
        boxprod::Verdict::Decided { value, .. } => {
            s.push_str(&format!("  cardinality: {value}\n"));
        }
        boxprod::Verdict::OutOfHypothesis { reason } => {
            s.push_str(&format!("  cardinality: out of hypothesis ({reason})\n"));
        }
    }
    s.push_str(&format!(
        "  quotient graph: K_{{{},{}}}\n",
        r.quotient.x_orbits, r.quotient.y_orbits
    ));
    for (k, sizes) in &r.suborbit_sizes {
        s.push_str(&format!("  suborbits at distance {}: {:?}\n", 2 * k, sizes));
    }
    s.push_str("verifications:\n");
    for v in &outcome.verifications {
        s.push_str(&format!(
            "  [{}] {}: {}\n",
            if v.passed { "pass" } else { "FAIL" },
            v.name,
            v.detail
        ));
    }
    s
}
