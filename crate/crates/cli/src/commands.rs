//! Subcommand implementations.

use crate::emit::write_atomic;
use crate::{max_lines_cap, Format, OutputArgs, DEFAULT_SEED};
use clap::Args;
use serde::Serialize;
use sirsn_core::arrangement;
use sirsn_core::experiments::{self, ExperimentReport};
use sirsn_core::fixtures::ForcingFixture;
use sirsn_core::geodesics::{self, ConvergeConfig, Level};
use sirsn_core::json::to_string_17;
use sirsn_core::line_process::{sample_capped, ProcessParams};
use sirsn_core::svg;
use sirsn_core::{Disk, Error, Point, Result};

fn parse_point(text: &str) -> Result<Point> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 2 {
        return Err(Error::invalid_parameter(format!(
            "expected 'x,y', got '{text}'"
        )));
    }
    let x = parts[0]
        .trim()
        .parse()
        .map_err(|e| Error::invalid_parameter(format!("bad x in '{text}': {e}")))?;
    let y = parts[1]
        .trim()
        .parse()
        .map_err(|e| Error::invalid_parameter(format!("bad y in '{text}': {e}")))?;
    Ok(Point::new(x, y))
}

#[derive(Args)]
pub struct SampleArgs {
    /// Tail exponent of the speed marks; must exceed 2.
    #[arg(long, default_value_t = 3.0)]
    pub gamma: f64,
    /// Slowest speed drawn; smaller floors mean denser samples.
    #[arg(long = "v-floor", default_value_t = 1.0)]
    pub v_floor: f64,
    /// Window disk radius.
    #[arg(long, default_value_t = 1.0)]
    pub radius: f64,
    /// Window center as 'x,y'.
    #[arg(long, default_value = "0,0", allow_hyphen_values = true)]
    pub center: String,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

pub fn run_sample(args: &SampleArgs) -> Result<()> {
    let params = ProcessParams::new(args.gamma, args.seed)?;
    let window = Disk::new(parse_point(&args.center)?, args.radius)?;
    let smp = sample_capped(params, window, args.v_floor, max_lines_cap()?)?;
    if args.output.wants(Format::Json) {
        write_atomic(&args.output.out.join("sample.json"), &smp.to_json()?)?;
    }
    if args.output.wants(Format::Svg) {
        let figure = svg::render(&smp, &window, &[], &svg::SvgOptions::default());
        write_atomic(&args.output.out.join("sample.svg"), &figure)?;
    }
    println!(
        "sampled {} lines at floor {} (gamma {}, seed {})",
        smp.lines.len(),
        args.v_floor,
        args.gamma,
        args.seed
    );
    Ok(())
}

#[derive(Args)]
pub struct RouteArgs {
    #[arg(long, default_value_t = 3.0)]
    pub gamma: f64,
    #[arg(long = "v-floor", default_value_t = 0.5)]
    pub v_floor: f64,
    /// WALK (off-network) speed for terminal access.
    #[arg(long, default_value_t = 0.05)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 2.0)]
    pub radius: f64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Start point 'x,y'.
    #[arg(long, allow_hyphen_values = true)]
    pub from: String,
    /// End point 'x,y'.
    #[arg(long, allow_hyphen_values = true)]
    pub to: String,
    /// Refinement levels; above 1 the speed floor refines geometrically
    /// to a sixteenth at fixed epsilon and a convergence CSV is written.
    #[arg(long, default_value_t = 1)]
    pub levels: u32,
    #[arg(long = "k-nearest", default_value_t = arrangement::DEFAULT_K_NEAREST)]
    pub k_nearest: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Serialize)]
struct RouteDoc<'a> {
    total_time: f64,
    total_length: f64,
    walk_time: f64,
    tie: bool,
    route: &'a sirsn_core::Route,
}

pub fn run_route(args: &RouteArgs) -> Result<()> {
    let x1 = parse_point(&args.from)?;
    let x2 = parse_point(&args.to)?;
    let params = ProcessParams::new(args.gamma, args.seed)?;
    let window = Disk::new((x1 + x2) * 0.5, args.radius)?;
    let cap = max_lines_cap()?;
    let smp = sample_capped(params, window, args.v_floor, cap)?;

    let graph = arrangement::build(&smp, window)?;
    let (graph, src) = graph.inject_terminal(x1, args.epsilon, args.k_nearest)?;
    let (graph, dst) = graph.inject_terminal(x2, args.epsilon, args.k_nearest)?;
    let outcome = geodesics::shortest_time_route(&graph, &src, &dst)?;
    println!(
        "route time {:.6}, length {:.6}, walk time {:.6}, tie {}",
        outcome.route.total_time,
        outcome.route.total_length,
        outcome.route.walk_time(),
        outcome.tie
    );
    if args.output.wants(Format::Json) {
        let doc = RouteDoc {
            total_time: outcome.route.total_time,
            total_length: outcome.route.total_length,
            walk_time: outcome.route.walk_time(),
            tie: outcome.tie,
            route: &outcome.route,
        };
        write_atomic(&args.output.out.join("route.json"), &to_string_17(&doc)?)?;
    }
    if args.output.wants(Format::Svg) {
        let figure = svg::render(
            &smp,
            &window,
            &[&outcome.route],
            &svg::SvgOptions::default(),
        );
        write_atomic(&args.output.out.join("route.svg"), &figure)?;
    }

    if args.levels > 1 {
        // Coupled floor refinement at fixed epsilon: route times are
        // nonincreasing level over level.
        let ratio = (1.0f64 / 16.0).powf(1.0 / (args.levels as f64 - 1.0));
        let schedule: Vec<Level> = (0..args.levels)
            .map(|l| Level {
                v_floor: args.v_floor * ratio.powi(l as i32),
                epsilon: args.epsilon,
                k_nearest: args.k_nearest + 32 * l as usize,
            })
            .collect();
        let mut config = ConvergeConfig::new(schedule);
        config.max_expected_lines = cap;
        let report = geodesics::converge(x1, x2, &smp, &config)?;
        if args.output.wants(Format::Csv) {
            write_atomic(&args.output.out.join("converge.csv"), &report.to_csv())?;
        }
        println!(
            "converge: {} levels, stabilized {}, final time {:.6}{}",
            report.rows.len(),
            report.stabilized,
            report.final_time,
            if report.truncated { " (truncated)" } else { "" }
        );
    }
    Ok(())
}

#[derive(Args)]
pub struct NetworkArgs {
    #[arg(long, default_value_t = 4.0)]
    pub gamma: f64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Points per cluster; the figure joins all cross-cluster pairs.
    #[arg(long = "points-per-cluster", default_value_t = 4)]
    pub points_per_cluster: usize,
    /// Distance between the two cluster centers.
    #[arg(long, default_value_t = 2.0)]
    pub separation: f64,
    #[arg(long, default_value_t = 0.02)]
    pub epsilon: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Serialize)]
struct NetworkDoc {
    gamma: f64,
    seed: u64,
    sharing_fraction: f64,
    union_length: f64,
    routes: Vec<sirsn_core::Route>,
}

pub fn run_network(args: &NetworkArgs) -> Result<()> {
    let res = experiments::two_cluster_network(
        args.gamma,
        args.seed,
        args.points_per_cluster,
        args.separation,
        args.epsilon,
    )?;
    println!(
        "network: {} routes, union length {:.6}, sharing fraction {:.4}",
        res.routes.len(),
        res.union_length,
        res.sharing_fraction
    );
    if args.output.wants(Format::Svg) {
        let refs: Vec<&sirsn_core::Route> = res.routes.iter().collect();
        let figure = svg::render(&res.sample, &res.clip, &refs, &svg::SvgOptions::default());
        write_atomic(&args.output.out.join("network.svg"), &figure)?;
    }
    if args.output.wants(Format::Json) {
        let doc = NetworkDoc {
            gamma: args.gamma,
            seed: args.seed,
            sharing_fraction: res.sharing_fraction,
            union_length: res.union_length,
            routes: res.routes,
        };
        write_atomic(&args.output.out.join("network.json"), &to_string_17(&doc)?)?;
    }
    Ok(())
}

#[derive(Args)]
pub struct ExperimentArgs {
    /// One of: scale-invariance, mean-length, fibre-length, cost-density,
    /// forcing-fixture, coalescence.
    pub name: String,
    #[arg(long, default_value_t = 3.0)]
    pub gamma: f64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Scale factor (scale-invariance).
    #[arg(long, default_value_t = 2.0)]
    pub s: f64,
    /// Endpoint separation (mean-length).
    #[arg(long, default_value_t = 1.0)]
    pub distance: f64,
    /// Point-pattern intensity (fibre-length).
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    /// Reference speed (cost-density).
    #[arg(long, default_value_t = 1.0)]
    pub w: f64,
    #[arg(long = "v-floor", default_value_t = 0.5)]
    pub v_floor: f64,
    #[arg(long, default_value_t = 0.02)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 2.0)]
    pub radius: f64,
    #[arg(long, default_value_t = 3)]
    pub levels: u32,
    /// Replicates; a per-experiment default applies when omitted.
    #[arg(long)]
    pub replicates: Option<u64>,
    /// Forcing-fixture speed constants.
    #[arg(long, default_value_t = 7.0)]
    pub a: f64,
    #[arg(long, default_value_t = 14.0)]
    pub b: f64,
    #[arg(long, default_value_t = 141.0)]
    pub c: f64,
    /// Endpoint pairs (forcing-fixture).
    #[arg(long, default_value_t = 100)]
    pub pairs: u64,
    /// Lines to draw (cost-density).
    #[arg(long = "n-lines", default_value_t = 100_000)]
    pub n_lines: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

pub const EXPERIMENTS: &[&str] = &[
    "scale-invariance",
    "mean-length",
    "fibre-length",
    "cost-density",
    "forcing-fixture",
    "coalescence",
    "perpetuity-trace",
];

pub fn run_experiment(args: &ExperimentArgs) -> Result<()> {
    if args.name == "perpetuity-trace" {
        // Raw chain trace; linear P and S print as inf once the chain
        // outruns f64 range, so this stays CSV-only.
        let params = sirsn_core::comparison::ComparisonParams::new(2, args.gamma, 1.0)?;
        let mut rng = sirsn_core::rng::labeled_rng(args.seed, 0x7ACE);
        let steps = args.replicates.unwrap_or(500) as usize;
        let csv = sirsn_core::comparison::trace_csv(&params, steps, &mut rng);
        if args.output.wants(Format::Csv) {
            write_atomic(&args.output.out.join("perpetuity-trace.csv"), &csv)?;
        }
        println!("perpetuity trace: {steps} steps (gamma {})", args.gamma);
        return Ok(());
    }
    let report = dispatch_experiment(args)?;
    println!(
        "experiment {}: {}{}",
        report.name,
        if report.passed { "pass" } else { "FAIL" },
        if report.applicable { "" } else { " (not applicable)" }
    );
    for (k, v) in &report.statistics {
        println!("  {k} = {v:.6}");
    }
    if args.output.wants(Format::Json) {
        let path = args.output.out.join(format!("{}.json", report.name));
        write_atomic(&path, &report.to_json()?)?;
    }
    if args.output.wants(Format::Csv) {
        if let Some(table) = &report.table {
            let path = args.output.out.join(format!("{}.csv", report.name));
            write_atomic(&path, &table.to_csv())?;
        }
    }
    Ok(())
}

fn dispatch_experiment(args: &ExperimentArgs) -> Result<ExperimentReport> {
    let n = |default: u64| args.replicates.unwrap_or(default);
    match args.name.as_str() {
        "scale-invariance" => {
            experiments::scale_invariance_test(args.gamma, args.s, n(500), args.seed)
        }
        "mean-length" => {
            let levels = args.levels.max(2);
            let ratio = 0.5f64.powf(1.0 / (levels as f64 - 1.0));
            let floors: Vec<f64> = (0..levels)
                .map(|l| args.v_floor * ratio.powi(l as i32))
                .collect();
            experiments::mean_length_estimate(args.gamma, args.distance, &floors, n(100), args.seed)
        }
        "fibre-length" => experiments::fibre_length(
            args.lambda,
            args.radius,
            args.gamma,
            args.v_floor,
            args.epsilon,
            n(5),
            args.seed,
        ),
        "cost-density" => {
            experiments::cost_density_validation(args.gamma, args.w, args.n_lines, args.seed)
        }
        "forcing-fixture" => {
            let fixture = ForcingFixture {
                a: args.a,
                b: args.b,
                c: args.c,
                gamma: args.gamma,
                seed: args.seed,
                ..ForcingFixture::default()
            };
            experiments::forcing_fixture_test(&fixture, args.pairs, args.seed)
        }
        "coalescence" => {
            let levels = args.levels.max(2);
            let schedule: Vec<Level> = (0..levels)
                .map(|l| Level {
                    v_floor: args.v_floor * 0.7f64.powi(l as i32),
                    epsilon: args.epsilon,
                    k_nearest: 64,
                })
                .collect();
            experiments::coalescence_probe(
                Point::new(-0.5, 0.0),
                Point::new(0.5, 0.2),
                Point::new(0.4, -0.4),
                args.gamma,
                &schedule,
                n(20),
                args.seed,
            )
        }
        other => Err(Error::UnknownExperiment {
            name: other.to_string(),
            available: EXPERIMENTS.join(", "),
        }),
    }
}
