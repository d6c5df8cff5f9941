//! `ffvc`: command-line front end for the dot-product VC toolkit.
//!
//! Exit codes: 0 success, 1 usage or validation error, 2 budget exhausted,
//! 3 internal invariant violated (including a failing `verify`).

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ffvc_core::geometry::{Point, Space};
use ffvc_core::incidence::DotGraph;
use ffvc_core::lab::{self, Constants, SweepConfig, VerifyLevel};
use ffvc_core::pointset::{generate, read_pointset, write_pointset, GenKind, GenSpec, PointSet};
use ffvc_core::shatter::{self, ShatterOutcome, VcMode, VcOptions};
use ffvc_core::stars;
use ffvc_core::Error;
use serde_json::json;

#[derive(Parser)]
#[command(name = "ffvc", version, about = "VC-dimension of dot-product classes over prime fields")]
struct Cli {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Write output here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
    Text,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum GenArg {
    Full,
    RandomExact,
    RandomDensity,
    UnionHyperplanes,
    Explicit,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Exhaustive,
    StarGuided,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum LevelArg {
    Fast,
    Full,
}

/// Where the point set comes from: a file (`--in`) or a generator (`--gen`).
#[derive(Args)]
struct SetArgs {
    #[arg(long)]
    q: Option<u64>,
    #[arg(long)]
    d: Option<usize>,
    /// Point-set file.
    #[arg(long = "in")]
    input: Option<PathBuf>,
    #[arg(long, value_enum)]
    gen: Option<GenArg>,
    /// Required by the random generators.
    #[arg(long)]
    seed: Option<u64>,
    /// Exact size for `random-exact`.
    #[arg(long)]
    size: Option<u64>,
    /// Inclusion probability for `random-density`.
    #[arg(long)]
    density: Option<f64>,
    /// Hyperplanes for `union-hyperplanes`, as `(y1,..,yd)=t;...`.
    #[arg(long)]
    planes: Option<String>,
    /// Points for `explicit`, as `(a,b);(c,d)`.
    #[arg(long)]
    points: Option<String>,
}

#[derive(Args)]
struct GraphArgs {
    #[command(flatten)]
    set: SetArgs,
    /// Dot-product value defining adjacency; must be nonzero.
    #[arg(long)]
    t: u64,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a point set and write it in the point-set file format.
    Gen(SetArgs),
    /// Incidence count and residual against |E|^2/q.
    Edges(GraphArgs),
    /// Ordered k-star counts and their lower bounds.
    Stars {
        #[command(flatten)]
        g: GraphArgs,
        /// Number of leaves (default d).
        #[arg(long)]
        k: Option<usize>,
        #[arg(long = "c-k", default_value = "1")]
        c_k: String,
        #[arg(long = "c-d", default_value = "1")]
        c_d: String,
    },
    /// Check whether a candidate set is shattered.
    Shatter {
        #[command(flatten)]
        g: GraphArgs,
        /// Candidate points, as `(a,b);(c,d)`.
        #[arg(long = "set")]
        candidate: String,
    },
    /// VC-dimension of the class on E.
    Vcdim {
        #[command(flatten)]
        g: GraphArgs,
        #[arg(long, value_enum, default_value = "exhaustive")]
        mode: ModeArg,
        /// Star budget (star-guided) or work budget (exhaustive).
        #[arg(long)]
        budget: Option<u128>,
    },
    /// Census of independent d-stars with bad subsets.
    Badstars {
        #[command(flatten)]
        g: GraphArgs,
        /// Work budget for the census.
        #[arg(long, default_value_t = 2_000_000_000)]
        budget: u128,
    },
    /// Run an experiment grid from a config file.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Record elapsed_ms as 0 so output is byte-stable.
        #[arg(long)]
        no_timing: bool,
    },
    /// Run the built-in self-check suite.
    Verify {
        #[arg(long, value_enum, default_value = "fast")]
        level: LevelArg,
        /// Corrupt one membership bit per test set, chosen from this seed.
        #[arg(long)]
        fault: Option<u64>,
    },
}

struct Failure {
    code: u8,
    msg: String,
}

type CliResult<T> = Result<T, Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure { code: 1, msg: msg.into() }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Budget { .. } => 2,
        Error::Invariant(_) => 3,
        _ => 1,
    }
}

/// Attributes a library error to the flag that caused it.
fn at(flag: &'static str) -> impl Fn(Error) -> Failure {
    move |e| Failure {
        code: exit_code(&e),
        msg: format!("{flag}: {e}"),
    }
}

fn core(e: Error) -> Failure {
    Failure {
        code: exit_code(&e),
        msg: e.to_string(),
    }
}

fn parse_coords(text: &str, flag: &str) -> CliResult<Vec<u64>> {
    let inner = text
        .trim()
        .strip_prefix('(')
        .and_then(|s| s.strip_suffix(')'))
        .ok_or_else(|| usage(format!("{flag}: expected `(a,b,..)`, got `{}`", text.trim())))?;
    inner
        .split(',')
        .map(|c| {
            c.trim()
                .parse::<u64>()
                .map_err(|_| usage(format!("{flag}: bad coordinate `{}`", c.trim())))
        })
        .collect()
}

fn parse_points(space: Space, text: &str, flag: &'static str) -> CliResult<Vec<Point>> {
    text.split(';')
        .filter(|s| !s.trim().is_empty())
        .map(|p| space.point(&parse_coords(p, flag)?).map_err(at(flag)))
        .collect()
}

fn parse_planes(space: Space, text: &str) -> CliResult<Vec<(Point, u32)>> {
    text.split(';')
        .filter(|s| !s.trim().is_empty())
        .map(|item| {
            let (y, t) = item
                .split_once('=')
                .ok_or_else(|| usage(format!("--planes: expected `(y)=t`, got `{}`", item.trim())))?;
            let y = space.point(&parse_coords(y, "--planes")?).map_err(at("--planes"))?;
            let t: u64 = t
                .trim()
                .parse()
                .map_err(|_| usage(format!("--planes: bad value `{}`", t.trim())))?;
            Ok((y, space.field().canonical(t).map_err(at("--planes"))?.value()))
        })
        .collect()
}

fn space_from(q: Option<u64>, d: Option<usize>) -> CliResult<Space> {
    let q = q.ok_or_else(|| usage("--q is required"))?;
    let d = d.ok_or_else(|| usage("--d is required"))?;
    let field = ffvc_core::ffield::FieldSpec::new(q).map_err(at("--q"))?;
    if d == 0 {
        return Err(usage("--d: dimension must be at least 1"));
    }
    Space::new(field, d).map_err(at("--d"))
}

fn load_set(a: &SetArgs) -> CliResult<PointSet> {
    if let Some(path) = &a.input {
        if a.gen.is_some() {
            return Err(usage("--in and --gen are mutually exclusive"));
        }
        let text = std::fs::read_to_string(path).map_err(|e| usage(format!("--in: {}: {e}", path.display())))?;
        let set = read_pointset(&text).map_err(at("--in"))?;
        let s = set.space();
        if a.q.is_some_and(|q| q != s.q() as u64) {
            return Err(usage(format!("--q: file has q={}", s.q())));
        }
        if a.d.is_some_and(|d| d != s.dim()) {
            return Err(usage(format!("--d: file has d={}", s.dim())));
        }
        return Ok(set);
    }
    let gen = a.gen.ok_or_else(|| usage("one of --in or --gen is required"))?;
    let space = space_from(a.q, a.d)?;
    let need_seed = || a.seed.ok_or_else(|| usage("--seed is required for random generators"));
    let spec = match gen {
        GenArg::Full => GenSpec::new(GenKind::Full, a.seed.unwrap_or(0)),
        GenArg::RandomExact => {
            let size = a.size.ok_or_else(|| usage("--size is required for random-exact"))?;
            GenSpec::new(GenKind::RandomExact { size }, need_seed()?)
        }
        GenArg::RandomDensity => {
            let density = a.density.ok_or_else(|| usage("--density is required for random-density"))?;
            GenSpec::new(GenKind::RandomDensity { density }, need_seed()?)
        }
        GenArg::UnionHyperplanes => {
            let text = a.planes.as_deref().ok_or_else(|| usage("--planes is required for union-hyperplanes"))?;
            GenSpec::new(
                GenKind::UnionHyperplanes {
                    planes: parse_planes(space, text)?,
                },
                0,
            )
        }
        GenArg::Explicit => {
            let text = a.points.as_deref().ok_or_else(|| usage("--points is required for explicit"))?;
            GenSpec::new(
                GenKind::Explicit {
                    points: parse_points(space, text, "--points")?,
                },
                0,
            )
        }
    };
    let flag = match gen {
        GenArg::RandomExact => "--size",
        GenArg::RandomDensity => "--density",
        GenArg::UnionHyperplanes => "--planes",
        GenArg::Explicit => "--points",
        GenArg::Full => "--gen",
    };
    generate(&spec, space).map_err(at(flag))
}

fn graph<'a>(set: &'a PointSet, t: u64) -> CliResult<DotGraph<'a>> {
    DotGraph::new(set, t).map_err(at("--t"))
}

fn braces(points: &[Point]) -> String {
    let inner: Vec<String> = points.iter().map(Point::to_string).collect();
    format!("{{{}}}", inner.join(","))
}

fn to_json(value: &impl serde::Serialize) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serialisable");
    s.push('\n');
    s
}

fn no_csv(format: Format, cmd: &str) -> CliResult<()> {
    if format == Format::Csv {
        return Err(usage(format!("--format: csv is not available for `{cmd}`")));
    }
    Ok(())
}

fn run_gen(a: &SetArgs, format: Format) -> CliResult<String> {
    no_csv(format, "gen")?;
    let set = load_set(a)?;
    Ok(match format {
        Format::Json => {
            let pts: Vec<&[u32]> = (0..set.len()).map(|k| set.member_coords(k)).collect();
            let s = set.space();
            to_json(&json!({ "q": s.q(), "d": s.dim(), "n": set.len(), "points": pts }))
        }
        _ => write_pointset(&set),
    })
}

fn run_edges(a: &GraphArgs, format: Format) -> CliResult<String> {
    let set = load_set(&a.set)?;
    let g = graph(&set, a.t)?;
    let s = g.residual_check();
    let residual = if s.residual_den == 1 {
        s.residual_num.to_string()
    } else {
        format!("{}/{}", s.residual_num, s.residual_den)
    };
    Ok(match format {
        Format::Json => to_json(&s),
        Format::Csv => format!(
            "q,d,t,size,edges,residual_num,residual_den,bound_holds\n{},{},{},{},{},{},{},{}\n",
            s.q, s.d, s.t, s.size, s.edge_count, s.residual_num, s.residual_den, s.bound_holds
        ),
        Format::Text => format!(
            "edges: {}\nresidual: {residual}\nresidual_bound: {}\n",
            s.edge_count,
            if s.bound_holds { "holds" } else { "VIOLATED" }
        ),
    })
}

fn run_stars(a: &GraphArgs, k: Option<usize>, c_k: &str, c_d: &str, format: Format) -> CliResult<String> {
    let set = load_set(&a.set)?;
    let g = graph(&set, a.t)?;
    let k = k.unwrap_or(set.space().dim());
    let constants = Constants {
        c_k: lab::parse_rational(c_k).map_err(at("--c-k"))?,
        c_d: lab::parse_rational(c_d).map_err(at("--c-d"))?,
        ..Constants::default()
    };
    constants.validate().map_err(at("--c-k/--c-d"))?;
    let c = stars::star_census(&g, k, &constants).map_err(at("--k"))?;
    let opt = |v: Option<u128>| v.map(|n| n.to_string()).unwrap_or_default();
    let indep_bound = c.indep_bound.as_ref().map(lab::format_rational);
    Ok(match format {
        Format::Json => to_json(&c),
        Format::Csv => format!(
            "k,n_k,n_indep,n_dep,kstar_bound,kstar_bound_met,kstar_hypothesis_met,indep_bound,indep_bound_met,indep_hypothesis_met\n{},{},{},{},{},{},{},{},{},{}\n",
            c.k,
            c.n_k,
            opt(c.n_indep),
            opt(c.n_dep),
            lab::format_rational(&c.kstar_bound),
            c.kstar_bound_met,
            c.kstar_hypothesis_met,
            indep_bound.clone().unwrap_or_default(),
            c.indep_bound_met.map(|b| b.to_string()).unwrap_or_default(),
            c.indep_hypothesis_met
        ),
        Format::Text => {
            let mut out = String::new();
            let met = |b: bool| if b { "met" } else { "not met" };
            let _ = writeln!(out, "k: {}", c.k);
            let _ = writeln!(out, "n_k: {}", c.n_k);
            let _ = writeln!(
                out,
                "kstar_bound: {} ({}; size hypothesis {})",
                lab::format_rational(&c.kstar_bound),
                met(c.kstar_bound_met),
                met(c.kstar_hypothesis_met)
            );
            if let (Some(n), Some(dep), Some(b), Some(m)) = (c.n_indep, c.n_dep, &indep_bound, c.indep_bound_met) {
                let _ = writeln!(out, "n_indep: {n}");
                let _ = writeln!(out, "n_dep: {dep}");
                let _ = writeln!(
                    out,
                    "indep_bound: {b} ({}; size hypothesis {})",
                    met(m),
                    met(c.indep_hypothesis_met)
                );
            }
            out
        }
    })
}

fn run_shatter(a: &GraphArgs, candidate: &str, format: Format) -> CliResult<String> {
    no_csv(format, "shatter")?;
    let set = load_set(&a.set)?;
    let g = graph(&set, a.t)?;
    let pts = parse_points(set.space(), candidate, "--set")?;
    let cert = shatter::is_shattered_direct(&g, &pts).map_err(at("--set"))?;
    // the star route applies to d-sets; a disagreement is a bug
    if pts.len() == set.space().dim() {
        let via_stars = shatter::is_shattered_stars(&g, &pts).map_err(at("--set"))?;
        if via_stars != cert.is_shattered() {
            return Err(core(Error::Invariant(format!(
                "direct check says {}, star characterisation says {}",
                cert.is_shattered(),
                via_stars
            ))));
        }
    }
    Ok(match format {
        Format::Json => to_json(&cert),
        _ => match &cert.outcome {
            ShatterOutcome::NotShattered { failing, .. } => {
                format!("not shattered; failing subset {}\n", braces(failing))
            }
            ShatterOutcome::Shattered { witnesses } => {
                let mut out = format!("shattered; {} labellings realised\n", witnesses.len());
                for (mask, y) in witnesses.iter().enumerate() {
                    let subset: Vec<Point> = cert
                        .candidate
                        .iter()
                        .enumerate()
                        .filter(|(i, _)| mask >> i & 1 == 1)
                        .map(|(_, p)| p.clone())
                        .collect();
                    let _ = writeln!(out, "  {} <- {y}", braces(&subset));
                }
                out
            }
        },
    })
}

fn run_vcdim(a: &GraphArgs, mode: ModeArg, budget: Option<u128>, format: Format) -> CliResult<String> {
    no_csv(format, "vcdim")?;
    let set = load_set(&a.set)?;
    let g = graph(&set, a.t)?;
    let mut opts = VcOptions::default();
    let mode = match mode {
        ModeArg::Exhaustive => {
            if let Some(b) = budget {
                opts.work_budget = b;
            }
            VcMode::Exhaustive
        }
        ModeArg::StarGuided => {
            opts.seed = a
                .set
                .seed
                .ok_or_else(|| usage("--seed is required for --mode star-guided"))?;
            if let Some(b) = budget {
                opts.star_budget = u64::try_from(b).map_err(|_| usage("--budget: too large for a star budget"))?;
            }
            VcMode::StarGuided
        }
    };
    let r = shatter::vc_dimension(&g, mode, &opts).map_err(at("--budget"))?;
    Ok(match format {
        Format::Json => to_json(&r),
        _ => format!("{}\n", r.value),
    })
}

fn run_badstars(a: &GraphArgs, budget: u128, format: Format) -> CliResult<String> {
    let set = load_set(&a.set)?;
    let g = graph(&set, a.t)?;
    let c = shatter::bad_star_census(&g, budget).map_err(at("--budget"))?;
    let margin = c.independent as i128 - c.any as i128;
    Ok(match format {
        Format::Json => to_json(&json!({
            "by_size": c.by_size.iter().map(|n| n.to_string()).collect::<Vec<_>>(),
            "any_nonempty": c.any_nonempty.to_string(),
            "any": c.any.to_string(),
            "independent": c.independent.to_string(),
            "margin": margin.to_string(),
        })),
        Format::Csv => {
            let mut out = String::from("k,bad_stars\n");
            for (k, n) in c.by_size.iter().enumerate() {
                let _ = writeln!(out, "{k},{n}");
            }
            out
        }
        Format::Text => {
            let mut out = String::new();
            for (k, n) in c.by_size.iter().enumerate() {
                let _ = writeln!(out, "bad subset of size {k}: {n}");
            }
            let _ = writeln!(out, "with a nonempty bad subset: {}", c.any_nonempty);
            let _ = writeln!(out, "with any bad subset: {}", c.any);
            let _ = writeln!(out, "independent d-stars: {}", c.independent);
            let _ = writeln!(out, "good d-stars: {margin}");
            out
        }
    })
}

fn run_sweep(config: &PathBuf, no_timing: bool, format: Format) -> CliResult<String> {
    let text = std::fs::read_to_string(config).map_err(|e| usage(format!("--config: {}: {e}", config.display())))?;
    let mut cfg = SweepConfig::parse(&text).map_err(at("--config"))?;
    if no_timing {
        cfg.timing = false;
    }
    let records = lab::run_sweep(&cfg).map_err(at("--config"))?;
    Ok(match format {
        Format::Json => lab::records_to_json(&records),
        _ => lab::records_to_csv(&records),
    })
}

fn run_verify(level: LevelArg, fault: Option<u64>, format: Format) -> CliResult<(String, bool)> {
    no_csv(format, "verify")?;
    let level = match level {
        LevelArg::Fast => VerifyLevel::Fast,
        LevelArg::Full => VerifyLevel::Full,
    };
    let rep = lab::verify_suite(level, fault);
    let out = match format {
        Format::Json => to_json(&rep),
        _ => rep.to_text(),
    };
    Ok((out, rep.passed))
}

fn dispatch(cli: &Cli) -> CliResult<String> {
    let fmt = |default: Format| cli.format.unwrap_or(default);
    match &cli.cmd {
        Cmd::Gen(a) => run_gen(a, fmt(Format::Text)),
        Cmd::Edges(a) => run_edges(a, fmt(Format::Text)),
        Cmd::Stars { g, k, c_k, c_d } => run_stars(g, *k, c_k, c_d, fmt(Format::Text)),
        Cmd::Shatter { g, candidate } => run_shatter(g, candidate, fmt(Format::Text)),
        Cmd::Vcdim { g, mode, budget } => run_vcdim(g, *mode, *budget, fmt(Format::Text)),
        Cmd::Badstars { g, budget } => run_badstars(g, *budget, fmt(Format::Text)),
        Cmd::Sweep { config, no_timing } => run_sweep(config, *no_timing, fmt(Format::Csv)),
        Cmd::Verify { level, fault } => {
            let (out, passed) = run_verify(*level, *fault, fmt(Format::Text))?;
            if passed {
                Ok(out)
            } else {
                emit(cli, &out)?;
                Err(Failure {
                    code: 3,
                    msg: "verify: one or more checks failed".into(),
                })
            }
        }
    }
}

fn emit(cli: &Cli, data: &str) -> CliResult<()> {
    match &cli.out {
        Some(path) => std::fs::write(path, data).map_err(|e| usage(format!("--out: {}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(data.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| usage(format!("stdout: {e}")))
        }
    }
}

fn run(cli: &Cli) -> CliResult<()> {
    let out = dispatch(cli)?;
    emit(cli, &out)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            // first paragraph only, folded onto one line
            let rendered = e.render().to_string();
            let line: Vec<&str> = rendered
                .lines()
                .take_while(|l| !l.trim().is_empty())
                .map(str::trim)
                .collect();
            eprintln!("{}", line.join(" "));
            return ExitCode::from(1);
        }
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads: must be at least 1");
            return ExitCode::from(1);
        }
        pool = pool.num_threads(n);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: --threads: {e}");
            return ExitCode::from(1);
        }
    };
    match pool.install(|| run(&cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
