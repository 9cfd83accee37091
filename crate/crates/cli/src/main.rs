use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use multitrack::evaluation::{
    best_lambda, read_results, resume_sweep, similarity, summarize, write_results, SweepMethod, SweepSpec,
};
use multitrack::multi_track::{match_multi, BaseMethod, BoostConfig, Method, MultiConfig, TrackSet};
use multitrack::parallel::Execution;
use multitrack::road_network::{generate_grid_network, read_network, GridSpec, NetworkFile};
use multitrack::rng::substream;
use multitrack::simulation::{generate_route, generate_track, Distribution, GroundTruth, SamplingConfig};
use multitrack::single_track::{
    estimate_sigma_folds, match_track, optimal_lambda, MatchConfig, MatchResult, Track,
};
use multitrack::{RoadNetwork, RoutePath};

#[derive(Parser)]
#[command(name = "multitrack", version, about = "Map matching of sparse GPS tracks on road networks")]
struct Cli {
    /// Seed for every random choice (default 7 for gen-network, 1 otherwise).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; 1 runs sequentially, 0 uses every core.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Repeat for more log output.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a jittered street grid.
    GenNetwork(GenNetworkArgs),
    /// Drive random routes and write noisy tracks plus ground truth.
    Simulate(SimulateArgs),
    /// Match one track.
    Match(MatchArgs),
    /// Merge several tracks of one route and match the result.
    Multimatch(MultimatchArgs),
    /// Cross-validated noise estimate for one track.
    EstimateSigma(EstimateSigmaArgs),
    /// Overlap of two paths (match results, truth files or bare paths).
    Similarity(SimilarityArgs),
    /// Run a parameter sweep on the synthetic grid; resumes an existing results file.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct GenNetworkArgs {
    #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(u32).range(2..))]
    rows: u32,
    #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(u32).range(2..))]
    cols: u32,
    /// Meters between intersections.
    #[arg(long, default_value_t = 500.0)]
    spacing: f64,
    /// Maximum jitter per axis, meters.
    #[arg(long, default_value_t = 60.0)]
    perturbation: f64,
    #[arg(long, default_value_t = 0.1)]
    removal_prob: f64,
    #[arg(long, short, default_value = "network.json")]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum DistArg {
    Uniform,
    Exponential,
}

impl From<DistArg> for Distribution {
    fn from(d: DistArg) -> Self {
        match d {
            DistArg::Uniform => Distribution::Uniform,
            DistArg::Exponential => Distribution::Exponential,
        }
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    network: PathBuf,
    #[arg(long, default_value_t = 1)]
    routes: usize,
    #[arg(long, default_value_t = 1)]
    tracks_per_route: usize,
    /// Noise standard deviation per axis, meters.
    #[arg(long, default_value_t = 20.0)]
    sigma: f64,
    /// Mean sampling interval, seconds.
    #[arg(long, default_value_t = 60.0)]
    tau: f64,
    #[arg(long, value_enum, default_value = "uniform")]
    dist: DistArg,
    #[arg(long, default_value_t = 3000.0)]
    min_length: f64,
    #[arg(long, default_value_t = 15_000.0)]
    max_length: f64,
    #[arg(long, default_value = "tracks")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct MatcherArgs {
    #[arg(long)]
    network: PathBuf,
    /// Extra evenly spaced candidates per road segment.
    #[arg(long, default_value_t = 3)]
    n_extra: usize,
    /// Candidate search radius, meters.
    #[arg(long, default_value_t = 200.0)]
    radius: f64,
    #[arg(long, default_value_t = 40)]
    max_candidates: usize,
}

impl MatcherArgs {
    fn config(&self, lambda: f64) -> MatchConfig {
        MatchConfig {
            lambda,
            radius: self.radius,
            extra_candidates: self.n_extra,
            max_candidates_per_sample: self.max_candidates,
            ..MatchConfig::default()
        }
    }
}

#[derive(Args)]
struct MatchArgs {
    #[command(flatten)]
    matcher: MatcherArgs,
    #[arg(long)]
    track: PathBuf,
    /// A nonnegative number, or `auto` to derive it from the estimated noise.
    #[arg(long, default_value = "0.01")]
    lambda: String,
    /// Calibration constant for `--lambda auto`.
    #[arg(long, default_value_t = 1.0)]
    calibration: f64,
    /// Ground truth to score the match against.
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Where to write the match result; stdout when absent.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Iterative,
    Laplacian,
}

#[derive(Args)]
struct MultimatchArgs {
    #[command(flatten)]
    matcher: MatcherArgs,
    /// Track files, a directory of them, or one file with `# track` sections.
    #[arg(long, num_args = 1.., required = true)]
    tracks: Vec<PathBuf>,
    #[arg(long, value_enum, default_value = "iterative")]
    method: MethodArg,
    #[arg(long)]
    boost: bool,
    #[arg(long, default_value_t = 10)]
    subsamples: usize,
    #[arg(long, default_value_t = 0.5)]
    inclusion_prob: f64,
    #[arg(long, default_value_t = 100)]
    restarts: usize,
    #[arg(long, default_value_t = 20)]
    max_rounds: usize,
    #[arg(long, default_value_t = 1e-2)]
    lambda: f64,
    #[arg(long)]
    truth: Option<PathBuf>,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EstimateSigmaArgs {
    #[command(flatten)]
    matcher: MatcherArgs,
    #[arg(long)]
    track: PathBuf,
}

#[derive(Args)]
struct SimilarityArgs {
    #[arg(long)]
    network: PathBuf,
    a: PathBuf,
    b: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    /// JSON sweep specification; flags below override its fields.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    sigmas: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    taus: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    lambdas: Option<Vec<f64>>,
    /// single, iterative, laplacian, iterative_boosted, laplacian_boosted
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<SweepMethod>>,
    #[arg(long, value_delimiter = ',')]
    track_counts: Option<Vec<usize>>,
    #[arg(long)]
    routes: Option<usize>,
    #[arg(long)]
    instances: Option<usize>,
    #[arg(long, value_enum)]
    dist: Option<DistArg>,
    #[arg(long)]
    trim: Option<f64>,
    #[arg(long)]
    record_runtime: bool,
    #[arg(long, short, default_value = "results.csv")]
    out: PathBuf,
}

/// Status lines go to stdout unless stdout carries the command's data.
struct Report {
    to_stderr: bool,
}

impl Report {
    fn line(&self, msg: impl AsRef<str>) {
        if self.to_stderr {
            eprintln!("{}", msg.as_ref());
        } else {
            println!("{}", msg.as_ref());
        }
    }
}

fn load_network(path: &Path) -> Result<RoadNetwork> {
    read_network(path).with_context(|| format!("cannot load network {}", path.display()))
}

fn load_track(path: &Path) -> Result<Track> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    Track::parse_csv(&text).with_context(|| format!("bad track file {}", path.display()))
}

fn load_truth(path: &Path) -> Result<GroundTruth> {
    GroundTruth::read(path).with_context(|| format!("cannot load ground truth {}", path.display()))
}

/// Reads a path from a match result (`path`), a ground truth (`route`) or a bare path.
fn load_path(net: &RoadNetwork, path: &Path) -> Result<RoutePath> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).with_context(|| format!("{} is not JSON", path.display()))?;
    let inner = value.get("path").or_else(|| value.get("route")).unwrap_or(&value).clone();
    let parsed: RoutePath =
        serde_json::from_value(inner).with_context(|| format!("{} does not contain a path", path.display()))?;
    RoutePath::from_entries(net, parsed.entries().to_vec())
        .with_context(|| format!("{} does not fit the network", path.display()))
}

fn write_or_print(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, format!("{text}\n")).with_context(|| format!("cannot write {}", p.display())),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn describe(result: &MatchResult) -> String {
    format!(
        "matched {} samples: path {:.1} m, cost {:.3} (data {:.3}, model {:.3})",
        result.chosen.len(),
        result.path.total_length(),
        result.total_cost,
        result.data_cost,
        result.model_cost
    )
}

fn gen_network(args: &GenNetworkArgs, seed: u64) -> Result<()> {
    let spec = GridSpec {
        rows: args.rows as usize,
        cols: args.cols as usize,
        spacing: args.spacing,
        perturbation: args.perturbation,
        removal_prob: args.removal_prob,
        seed,
        ..GridSpec::default()
    };
    let net = generate_grid_network(&spec)?;
    let file: NetworkFile = net.to_file();
    file.write(&args.out).with_context(|| format!("cannot write {}", args.out.display()))?;
    println!("{} nodes, {} edges -> {}", net.node_count(), net.edge_count(), args.out.display());
    Ok(())
}

fn simulate(args: &SimulateArgs, seed: u64) -> Result<()> {
    if args.routes == 0 || args.tracks_per_route == 0 {
        bail!("--routes and --tracks-per-route must be positive");
    }
    let net = load_network(&args.network)?;
    let cfg = SamplingConfig { sigma: args.sigma, tau: args.tau, distribution: args.dist.into() };
    cfg.validate()?;
    fs::create_dir_all(&args.out_dir).with_context(|| format!("cannot create {}", args.out_dir.display()))?;
    let mut written = 0;
    let mut skipped = 0;
    for r in 0..args.routes {
        let route = generate_route(&net, &mut substream(seed, &[0, r as u64]), args.min_length, args.max_length)?;
        for k in 0..args.tracks_per_route {
            let mut rng = substream(seed, &[1, r as u64, k as u64]);
            let (track, truth) = match generate_track(&net, &route, &cfg, &mut rng) {
                Ok(v) => v,
                Err(e @ multitrack::Error::NoTimestamps { .. }) => {
                    log::warn!("route {r}, track {k} skipped: {e}");
                    skipped += 1;
                    continue;
                }
                Err(e) => return Err(e).with_context(|| format!("route {r}, track {k}")),
            };
            let stem = format!("route{r:03}_track{k:03}");
            fs::write(args.out_dir.join(format!("{stem}.csv")), track.to_csv())?;
            truth.write(&args.out_dir.join(format!("{stem}.truth.json")))?;
            written += 1;
        }
        log::info!("route {r}: {:.0} m", route.total_length());
    }
    println!("wrote {written} tracks to {}", args.out_dir.display());
    if skipped > 0 {
        println!("{skipped} tracks had no sample inside their route's driving time");
    }
    Ok(())
}

fn match_cmd(args: &MatchArgs) -> Result<()> {
    let report = Report { to_stderr: args.out.is_none() };
    let net = load_network(&args.matcher.network)?;
    let track = load_track(&args.track)?;
    let lambda = if args.lambda.eq_ignore_ascii_case("auto") {
        let folds = estimate_sigma_folds(&net, &track, &args.matcher.config(1.0))?;
        let vals: Vec<f64> = folds.iter().filter_map(|f| f.sigma).collect();
        if vals.is_empty() {
            bail!("every cross-validation fold failed; pass an explicit --lambda");
        }
        let sigma = vals.iter().sum::<f64>() / vals.len() as f64;
        let lambda = optimal_lambda(track.len(), sigma, track.polyline_length(), args.calibration);
        report.line(format!("sigma_hat {sigma:.3} m"));
        report.line(format!("lambda {lambda:e}"));
        lambda
    } else {
        args.lambda
            .parse::<f64>()
            .ok()
            .filter(|l| l.is_finite() && *l >= 0.0)
            .with_context(|| format!("--lambda must be a nonnegative number or `auto`, got {:?}", args.lambda))?
    };
    let cfg = args.matcher.config(lambda);
    cfg.validate()?;
    let result = match_track(&net, &track, &cfg)?;
    write_or_print(args.out.as_deref(), &result.to_json())?;
    report.line(describe(&result));
    if let Some(truth) = &args.truth {
        let truth = load_truth(truth)?;
        report.line(format!("similarity {:.4}", similarity(&result.path, &truth.route)?));
    }
    Ok(())
}

fn load_track_set(paths: &[PathBuf]) -> Result<TrackSet> {
    if let [one] = paths {
        return TrackSet::read(one).with_context(|| format!("cannot read tracks from {}", one.display()));
    }
    let tracks = paths.iter().map(|p| load_track(p)).collect::<Result<Vec<_>>>()?;
    Ok(TrackSet::new(tracks)?)
}

fn multimatch(args: &MultimatchArgs, seed: u64) -> Result<()> {
    let report = Report { to_stderr: args.out.is_none() };
    let net = load_network(&args.matcher.network)?;
    let ts = load_track_set(&args.tracks)?;
    let base = match args.method {
        MethodArg::Iterative => BaseMethod::Iterative,
        MethodArg::Laplacian => BaseMethod::Laplacian,
    };
    let method = Method::with_boost(base, args.boost);
    let cfg = MultiConfig {
        matching: args.matcher.config(args.lambda),
        boost: BoostConfig {
            subsamples: args.subsamples,
            inclusion_prob: args.inclusion_prob,
            restarts: args.restarts,
            seed,
        },
        max_rounds: args.max_rounds,
        ..MultiConfig::default()
    };
    cfg.matching.validate()?;
    cfg.boost.validate()?;
    let result = match_multi(&net, &ts, method, &cfg)?;
    write_or_print(args.out.as_deref(), &result.to_json())?;
    report.line(format!("{} tracks, {} samples, method {}", ts.tracks().len(), ts.len(), method.name()));
    report.line(describe(&result));
    if let Some(truth) = &args.truth {
        let truth = load_truth(truth)?;
        report.line(format!("similarity {:.4}", similarity(&result.path, &truth.route)?));
        let mut sims = Vec::new();
        for (k, t) in ts.tracks().iter().enumerate() {
            match match_track(&net, t, &cfg.matching).and_then(|r| similarity(&r.path, &truth.route)) {
                Ok(s) => sims.push(s),
                Err(e) => log::warn!("track {k} could not be matched alone: {e}"),
            }
        }
        if !sims.is_empty() {
            let mean = sims.iter().sum::<f64>() / sims.len() as f64;
            report.line(format!("single-track baseline {mean:.4} (mean over {} tracks)", sims.len()));
        }
    }
    Ok(())
}

fn estimate_sigma_cmd(args: &EstimateSigmaArgs) -> Result<()> {
    let net = load_network(&args.matcher.network)?;
    let track = load_track(&args.track)?;
    let folds = estimate_sigma_folds(&net, &track, &args.matcher.config(1.0))?;
    for (i, f) in folds.iter().enumerate() {
        log::info!("fold {}: {} held out, {} scored, sigma {:?}", i + 1, f.held_out.len(), f.scored, f.sigma);
    }
    let vals: Vec<f64> = folds.iter().filter_map(|f| f.sigma).collect();
    if vals.is_empty() {
        bail!("every cross-validation fold failed");
    }
    println!("sigma_hat {:.3} m ({} of {} folds)", vals.iter().sum::<f64>() / vals.len() as f64, vals.len(), folds.len());
    Ok(())
}

fn similarity_cmd(args: &SimilarityArgs) -> Result<()> {
    let net = load_network(&args.network)?;
    let a = load_path(&net, &args.a)?;
    let b = load_path(&net, &args.b)?;
    println!("{:.6}", similarity(&a, &b)?);
    Ok(())
}

fn sweep(args: &SweepArgs, seed: Option<u64>, exec: Execution) -> Result<()> {
    let mut spec = match &args.spec {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("cannot read {}", p.display()))?;
            serde_json::from_str::<SweepSpec>(&text).with_context(|| format!("bad sweep spec {}", p.display()))?
        }
        None => SweepSpec::default(),
    };
    if let Some(v) = &args.sigmas {
        spec.sigmas = v.clone();
    }
    if let Some(v) = &args.taus {
        spec.taus = v.clone();
    }
    if let Some(v) = &args.lambdas {
        spec.lambdas = v.clone();
    }
    if let Some(v) = &args.methods {
        spec.methods = v.clone();
    }
    if let Some(v) = &args.track_counts {
        spec.track_counts = v.clone();
    }
    if let Some(v) = args.routes {
        spec.routes = v;
    }
    if let Some(v) = args.instances {
        spec.instances = v;
    }
    if let Some(d) = args.dist {
        spec.distribution = d.into();
    }
    if let Some(t) = args.trim {
        spec.trim = t;
    }
    if let Some(s) = seed {
        spec.base_seed = s;
    }
    spec.record_runtime |= args.record_runtime;
    spec.validate()?;

    let existing = if args.out.exists() {
        let f = fs::File::open(&args.out).with_context(|| format!("cannot open {}", args.out.display()))?;
        read_results(f).with_context(|| format!("cannot resume from {}", args.out.display()))?
    } else {
        Vec::new()
    };
    let row_key = |r: &multitrack::evaluation::ResultRow| {
        (r.sigma.to_bits(), r.tau.to_bits(), r.lambda.to_bits(), r.method.clone(), r.s, r.route, r.instance)
    };
    let before: std::collections::HashSet<_> = existing.iter().map(row_key).collect();
    let net = spec.network()?;
    let rows = resume_sweep(&net, &spec, exec, existing)?;

    // Write to a sibling file first so an interrupted write never truncates old results.
    let tmp = args.out.with_extension("csv.partial");
    write_results(&rows, fs::File::create(&tmp).with_context(|| format!("cannot write {}", tmp.display()))?)?;
    fs::rename(&tmp, &args.out).with_context(|| format!("cannot write {}", args.out.display()))?;

    let computed = rows.iter().filter(|r| !before.contains(&row_key(r))).count();
    println!("{} rows ({computed} computed) -> {}", rows.len(), args.out.display());
    let cells = summarize(&rows, spec.trim);
    for c in &cells {
        let sim = c.similarity.map_or("n/a".to_string(), |v| format!("{v:.4}"));
        let errors = if c.errors > 0 { format!(" ({} errors)", c.errors) } else { String::new() };
        println!("sigma {} tau {} lambda {:e} {} s={}: {sim}{errors}", c.sigma, c.tau, c.lambda, c.method, c.s);
    }
    for &sigma in &spec.sigmas {
        for &tau in &spec.taus {
            for m in &spec.methods {
                for &s in &spec.track_counts {
                    if let Some(l) = best_lambda(&cells, sigma, tau, m.name(), s) {
                        println!("best lambda sigma {sigma} tau {tau} {} s={s}: {l:e}", m.name());
                    }
                }
            }
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let exec = Execution::from_workers(cli.workers);
    match &cli.command {
        Command::GenNetwork(a) => gen_network(a, cli.seed.unwrap_or(7)),
        Command::Simulate(a) => simulate(a, cli.seed.unwrap_or(1)),
        Command::Match(a) => match_cmd(a),
        Command::Multimatch(a) => {
            let seed = cli.seed.unwrap_or(1);
            multitrack::parallel::run(exec, || multimatch(a, seed))
        }
        Command::EstimateSigma(a) => estimate_sigma_cmd(a),
        Command::Similarity(a) => similarity_cmd(a),
        Command::Sweep(a) => sweep(a, cli.seed, exec),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).format_timestamp(None).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
