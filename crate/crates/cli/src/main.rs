//! Command-line front end: query generation, share planning, simulated
//! rounds with exact cost accounting, brute-force verification, and scheme
//! comparison tables.

use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use sgmr_core::cq::{automorphisms, CQSet};
use sgmr_core::cyclecq::{canonical_run_sequences, cycle_cqs};
use sgmr_core::enumerate::{brute_force_oracle, canonical_instance_set, decompose_sample};
use sgmr_core::graph::{generators, load_edge_list, DataGraph, SampleGraph};
use sgmr_core::plan::{
    bidirectional_edges, bucket_oriented_replication, convertibility_check, cost_expression,
    generalized_partition_replication, optimize_shares, regular_mixed_shares, useful_reducer_count,
    CostMode, ShareAssignment,
};
use sgmr_core::samplecq::generate_cqs;
use sgmr_core::sim::{run_round, RunOutput, Scheme};

#[derive(Parser)]
#[command(
    name = "sgmr",
    about = "Enumerate every instance of a small pattern graph in a large graph \
             with one simulated map-reduce round",
    version
)]
struct Cli {
    /// Cap the reducer worker pool.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the query set for a pattern.
    GenCq(GenCqArgs),
    /// Optimize shares and report the communication plan.
    Plan(PlanArgs),
    /// Route, evaluate, and account one simulated round.
    Run(RunArgs),
    /// Compare the triangle schemes at a fixed reducer budget.
    Compare(CompareArgs),
    /// Brute-force instances on a small graph.
    Oracle(OracleArgs),
    /// Route random graphs across schemes and report costs and timings.
    Bench(BenchArgs),
}

#[derive(Args)]
struct GenCqArgs {
    /// Builtin name (triangle, square, lollipop, edge, cycle:p, star:p,
    /// clique:p, path:p) or an edge-list file.
    #[arg(long)]
    sample: String,
    #[arg(long)]
    json: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PlanArgs {
    #[arg(long)]
    sample: String,
    /// Plan a single query (1-based index) instead of the whole set.
    #[arg(long)]
    cq: Option<usize>,
    /// Reducer budget.
    #[arg(long, default_value_t = 1)]
    k: u64,
    /// Data-graph edge count for total-communication figures.
    #[arg(long)]
    m: Option<u64>,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    sample: String,
    /// partition | multiway | bucket-ordered | variable-oriented
    #[arg(long)]
    scheme: String,
    /// Buckets for the bucket schemes.
    #[arg(long)]
    b: Option<u64>,
    /// Reducer budget for variable-oriented share planning.
    #[arg(long)]
    k: Option<u64>,
    /// Use the run-sequence query set for cycle patterns.
    #[arg(long)]
    runs: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Cross-check the instance set against the brute-force oracle.
    #[arg(long)]
    verify: bool,
    /// Write instances here, one line each.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct CompareArgs {
    /// Reducer budget the three schemes are calibrated to.
    #[arg(long, default_value_t = 220)]
    k: u64,
    /// Edge-list file; otherwise a random graph is generated.
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Random-graph nodes (with --m).
    #[arg(long, default_value_t = 2000)]
    n: u64,
    /// Random-graph edges.
    #[arg(long, default_value_t = 100_000)]
    m: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    sample: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value = "triangle")]
    sample: String,
    /// Comma-separated edge counts.
    #[arg(long, default_value = "10000,50000")]
    m: String,
    /// Comma-separated bucket counts.
    #[arg(long, default_value = "4,8")]
    b: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn main() -> Result<()> {
    // die quietly when a pipe downstream closes early
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .context("thread pool")?;
    }
    match cli.command {
        Command::GenCq(a) => gen_cq(a),
        Command::Plan(a) => plan(a),
        Command::Run(a) => run(a),
        Command::Compare(a) => compare(a),
        Command::Oracle(a) => oracle(a),
        Command::Bench(a) => bench(a),
    }
}

fn load_sample(spec: &str) -> Result<SampleGraph> {
    if let Ok(s) = SampleGraph::builtin(spec) {
        return Ok(s);
    }
    let text = fs::read_to_string(spec)
        .with_context(|| format!("pattern {spec:?} is neither builtin nor a readable file"))?;
    Ok(SampleGraph::load(&text)?)
}

fn load_graph(path: &PathBuf) -> Result<DataGraph> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {path:?}"))?;
    let g = load_edge_list(&text)?;
    if g.duplicates_collapsed() > 0 {
        eprintln!(
            "note: collapsed {} duplicate edges",
            g.duplicates_collapsed()
        );
    }
    Ok(g)
}

fn cycle_len(s: &SampleGraph) -> Option<usize> {
    let p = s.node_count();
    (p >= 3 && s.edge_count() == p && s.is_regular() == Some(2) && s.is_connected()).then_some(p)
}

fn gen_cq(a: GenCqArgs) -> Result<()> {
    let sample = load_sample(&a.sample)?;
    let set = generate_cqs(&sample)?;
    let mut text = String::new();
    let mut payload = json!({ "general": set.to_json() });
    text.push_str(&format!("pattern: {sample}\n"));
    text.push_str(&format!("general method: {} queries\n", set.len()));
    for (i, q) in set.queries.iter().enumerate() {
        text.push_str(&format!("  cq{}: {}\n", i, q.render(&sample)));
    }
    if let Some(p) = cycle_len(&sample) {
        let cset = cycle_cqs(p)?;
        let runs = canonical_run_sequences(p)?;
        text.push_str(&format!(
            "run-sequence method: {} queries (vs {} general)\n",
            cset.len(),
            set.len()
        ));
        for (i, q) in cset.queries.iter().enumerate() {
            text.push_str(&format!(
                "  cq{} [{}]: {}\n",
                i,
                runs[i].digits(),
                q.render(&cset.sample)
            ));
        }
        payload["run_sequence"] = cset.to_json();
    }
    let rendered = if a.json {
        serde_json::to_string_pretty(&payload)?
    } else {
        text
    };
    match a.out {
        Some(path) => fs::write(path, rendered)?,
        None => print!("{rendered}"),
    }
    Ok(())
}

fn share_table(assignment: &ShareAssignment) -> String {
    assignment
        .var_names
        .iter()
        .zip(&assignment.shares)
        .map(|(n, s)| format!("{n}={s:.6}"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn plan(a: PlanArgs) -> Result<()> {
    let sample = load_sample(&a.sample)?;
    let set = generate_cqs(&sample)?;
    let (set, mode) = match a.cq {
        Some(i) => {
            if i == 0 || i > set.len() {
                bail!("--cq must be in 1..={}", set.len());
            }
            let one = CQSet {
                sample: set.sample.clone(),
                queries: vec![set.queries[i - 1].clone()],
                provenance: vec![set.provenance[i - 1].clone()],
                labels: vec![set.labels[i - 1].clone()],
            };
            (one, CostMode::SingleCq)
        }
        None => (set, CostMode::VariableOriented),
    };
    let expr = cost_expression(&set, mode)?;
    let opt = optimize_shares(&expr, a.k)?;
    let decomp = decompose_sample(&sample)?;
    let conv = convertibility_check(decomp.alpha as f64, decomp.beta, sample.node_count());

    // the closed-form split plan, when the pattern admits it
    let mixed = if mode == CostMode::VariableOriented {
        regular_mixed_shares(&sample, &bidirectional_edges(&set), a.k).ok()
    } else {
        None
    };

    let mut payload = json!({
        "pattern": format!("{sample}"),
        "mode": match mode {
            CostMode::SingleCq => "single",
            CostMode::VariableOriented => "variable-oriented",
        },
        "k": a.k,
        "expression": expr.render(),
        "shares": opt.var_names.iter().zip(&opt.shares)
            .map(|(n, s)| json!({"var": n, "share": s}))
            .collect::<Vec<_>>(),
        "per_subgoal_replication": expr.terms.iter()
            .zip(expr.replication_per_term(&opt.shares))
            .map(|(t, r)| json!({"subgoal": t.label, "replication": r}))
            .collect::<Vec<_>>(),
        "per_edge_replication": opt.cost_per_edge,
        "kkt_residual": opt.kkt_residual,
        "enumerator_exponents": {"alpha": decomp.alpha, "beta": decomp.beta},
        "convertible": conv.convertible,
        "work_inflation_exponent": conv.work_inflation_exponent,
    });
    println!("pattern: {sample}");
    println!("cost expression: e -> {}", expr.render());
    println!("shares (k={}): {}", a.k, share_table(&opt));
    println!("per-edge replication: {:.6}", opt.cost_per_edge);
    let p = sample.node_count() as u64;
    if let Some(b) = (1..)
        .take_while(|&b| {
            useful_reducer_count(b, p)
                .map(|c| c <= a.k as u128)
                .unwrap_or(false)
        })
        .last()
    {
        let useful = useful_reducer_count(b, p).unwrap();
        let per_edge = bucket_oriented_replication(b, p).unwrap();
        println!(
            "bucket-ordered calibration: b={b} uses {useful} of k={} reducers, \
             {per_edge} copies/edge",
            a.k
        );
        payload["bucket_ordered"] =
            json!({"b": b, "reducers": useful as u64, "per_edge": per_edge as u64});
    }
    if let Some(m) = a.m {
        let total = opt.cost_per_edge * m as f64;
        println!("total communication at m={m}: {total:.6e}");
        payload["total_communication"] = json!(total);
    }
    if let Some(plan) = &mixed {
        if plan.double_side.is_empty() {
            println!(
                "closed form: uniform share {:.6}",
                plan.assignment.shares.first().copied().unwrap_or(f64::NAN)
            );
        } else {
            println!(
                "two-level closed form: doubled side {:?}, base share {:.6}",
                plan.double_side
                    .iter()
                    .map(|&v| sample.name(v).to_string())
                    .collect::<Vec<_>>(),
                plan.single_side
                    .first()
                    .map(|&v| plan.assignment.shares[v])
                    .unwrap_or(f64::NAN),
            );
        }
        if let Some(ints) = &plan.exact_shares {
            println!("exact shares: {ints:?}");
            payload["exact_shares"] = json!(ints);
            payload["exact_per_edge_replication"] = json!(plan.exact_per_edge.map(|x| x as u64));
            if let Some(m) = a.m {
                if let Some(total) = plan.exact_total_communication(m) {
                    println!("exact total communication: {total}");
                    payload["exact_total_communication"] = json!(total as u64);
                }
                if let Some(load) = plan.exact_per_reducer_load(m) {
                    println!("exact per-reducer load: {load}");
                    payload["exact_per_reducer_load"] = json!(load as u64);
                }
            }
        }
    }
    println!(
        "serial enumerator: O(n^{} m^{}), reducer-work inflation exponent {:.3} -> {}",
        decomp.alpha,
        decomp.beta,
        conv.work_inflation_exponent,
        if conv.convertible {
            "convertible"
        } else {
            "not convertible"
        }
    );
    if a.json {
        println!("{}", serde_json::to_string_pretty(&payload)?);
    }
    Ok(())
}

fn build_scheme(a: &RunArgs, cqs: &CQSet) -> Result<Scheme> {
    Ok(match a.scheme.as_str() {
        "partition" => Scheme::Partition {
            b: a.b.context("--b required for partition")?,
        },
        "multiway" => Scheme::MultiwayTriangle {
            b: a.b.context("--b required for multiway")?,
        },
        "bucket-ordered" => Scheme::BucketOrdered {
            b: a.b.context("--b required for bucket-ordered")?,
        },
        "variable-oriented" => {
            let k = a.k.context("--k required for variable-oriented")?;
            let expr = cost_expression(cqs, CostMode::VariableOriented)?;
            let opt = optimize_shares(&expr, k)?;
            let shares = opt.rounded();
            eprintln!("planned shares {:?} rounded to {:?}", opt.shares, shares);
            Scheme::VariableOriented { shares }
        }
        other => bail!("unknown scheme {other:?}"),
    })
}

fn run(a: RunArgs) -> Result<()> {
    let g = load_graph(&a.graph)?;
    let sample = load_sample(&a.sample)?;
    let cqs = if a.runs {
        let p = cycle_len(&sample).context("--runs needs a cycle pattern")?;
        cycle_cqs(p)?
    } else {
        generate_cqs(&sample)?
    };
    let scheme = build_scheme(&a, &cqs)?;
    let started = Instant::now();
    let RunOutput { instances, report } = run_round(&g, &scheme, &cqs, a.seed)?;
    let elapsed = started.elapsed();

    let mut lines = String::new();
    for i in &instances {
        lines.push_str(&i.render(&sample));
        lines.push('\n');
    }
    match &a.out {
        Some(path) => fs::write(path, &lines)?,
        None => {
            if instances.len() <= 50 {
                print!("{lines}");
            }
        }
    }
    println!(
        "{}: {} instances, {} kv pairs ({:.4}/edge), {}/{} reducers, {:.1?}",
        report.scheme,
        report.instances_found,
        report.key_value_pairs,
        report.per_edge_replication,
        report.reducers_used,
        report.key_space,
        elapsed
    );
    if a.json {
        println!("{}", serde_json::to_string_pretty(&report)?);
    }
    if a.verify {
        let auts = automorphisms(&sample)?;
        let (found, dups) =
            canonical_instance_set(instances.iter().map(|i| i.tuple.clone()), &auts);
        let expect = brute_force_oracle(&g, &sample)?;
        if dups > 0 || found != expect {
            bail!(
                "verification failed: {} duplicates, {} found vs {} expected",
                dups,
                found.len(),
                expect.len()
            );
        }
        println!(
            "verified: {} instances match the brute-force oracle",
            found.len()
        );
    }
    Ok(())
}

fn compare(a: CompareArgs) -> Result<()> {
    let g = match &a.graph {
        Some(path) => load_graph(path)?,
        None => generators::gnm(a.n, a.m, a.seed),
    };
    let m = g.edge_count() as f64;
    let cqs = generate_cqs(&SampleGraph::builtin("triangle")?)?;

    let b_partition = (3..).take_while(|&b| choose3(b) <= a.k).last().unwrap_or(3);
    let b_multiway = (1..).take_while(|&b| b * b * b <= a.k).last().unwrap_or(1);
    let b_bucket = (1..)
        .take_while(|&b| choose3(b + 2) <= a.k)
        .last()
        .unwrap_or(1);

    println!(
        "reducer budget k={} on m={} edges (seed {})",
        a.k,
        g.edge_count(),
        a.seed
    );
    println!(
        "{:<16} {:>7} {:>9} {:>12} {:>12} {:>14}",
        "scheme", "buckets", "reducers", "comm/edge", "formula", "asymptotic"
    );
    let rows: Vec<(Scheme, f64, f64)> = vec![
        (
            Scheme::Partition { b: b_partition },
            generalized_partition_replication(b_partition, 3)?,
            1.5 * (6.0 * a.k as f64).cbrt(),
        ),
        (
            Scheme::MultiwayTriangle { b: b_multiway },
            (3 * b_multiway - 2) as f64,
            3.0 * (a.k as f64).cbrt(),
        ),
        (
            Scheme::BucketOrdered { b: b_bucket },
            bucket_oriented_replication(b_bucket, 3)? as f64,
            (6.0 * a.k as f64).cbrt(),
        ),
    ];
    for (scheme, formula, asymptotic) in rows {
        let out = run_round(&g, &scheme, &cqs, a.seed)?;
        println!(
            "{:<16} {:>7} {:>9} {:>12.4} {:>12.4} {:>14.4}",
            out.report.scheme,
            out.report.buckets.unwrap(),
            out.report.key_space,
            out.report.key_value_pairs as f64 / m,
            formula,
            asymptotic
        );
    }
    Ok(())
}

fn choose3(b: u64) -> u64 {
    if b < 3 {
        0
    } else {
        b * (b - 1) * (b - 2) / 6
    }
}

fn oracle(a: OracleArgs) -> Result<()> {
    let g = load_graph(&a.graph)?;
    let sample = load_sample(&a.sample)?;
    let found = brute_force_oracle(&g, &sample)?;
    let mut lines = String::new();
    for t in &found {
        let vals: Vec<String> = t
            .iter()
            .enumerate()
            .map(|(v, node)| format!("v({})={}", sample.name(v), node))
            .collect();
        lines.push_str(&vals.join(" "));
        lines.push('\n');
    }
    match a.out {
        Some(path) => fs::write(path, &lines)?,
        None => print!("{lines}"),
    }
    println!("{} instances", found.len());
    Ok(())
}

fn bench(a: BenchArgs) -> Result<()> {
    let sample = load_sample(&a.sample)?;
    let cqs = generate_cqs(&sample)?;
    let ms: Vec<u64> = a.m.split(',').map(|x| x.trim().parse().unwrap()).collect();
    let bs: Vec<u64> = a.b.split(',').map(|x| x.trim().parse().unwrap()).collect();
    println!(
        "{:>9} {:>4} {:>12} {:>11} {:>14} {:>10}",
        "edges", "b", "kv pairs", "reducers", "work proxy", "time"
    );
    for &m in &ms {
        let n = (m as f64).sqrt() as u64 * 4;
        let g = generators::gnm(n.max(8), m, a.seed);
        for &b in &bs {
            let started = Instant::now();
            let out = run_round(&g, &Scheme::BucketOrdered { b }, &cqs, a.seed)?;
            println!(
                "{:>9} {:>4} {:>12} {:>11} {:>14.1} {:>9.1?}",
                m,
                b,
                out.report.key_value_pairs,
                out.report.reducers_used,
                out.report.reducer_work_proxy,
                started.elapsed()
            );
        }
    }
    Ok(())
}
