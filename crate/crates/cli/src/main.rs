use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::info;

use meshmend::meshio::{self, MeshFormat, MeshIoError};
use meshmend::pipeline::{self, BenchCase, BenchRow, PipelineConfig, PipelineError};
use meshmend::{Matrix, Mesh};

#[derive(Parser, Debug)]
#[command(name = "meshmend", version, about = "Repair self-intersecting and non-manifold triangle meshes")]
struct Cli {
    #[command(flatten)]
    opts: GlobalOpts,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Args, Debug, Clone)]
struct GlobalOpts {
    /// Load settings from a config file written by an earlier run; flags
    /// given on the command line take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Where to write the resolved config (defaults next to the outputs).
    #[arg(long, global = true)]
    config_out: Option<PathBuf>,
    /// Absolute point tolerance.
    #[arg(long, global = true)]
    eps_point: Option<f64>,
    /// Absolute vertex shift used when splitting non-manifold parts.
    #[arg(long, global = true)]
    eps_split: Option<f64>,
    /// Symmetry group file: one orthogonal matrix per line, nine numbers row-major.
    #[arg(long, global = true)]
    group: Option<PathBuf>,
    /// Output mesh format.
    #[arg(long, global = true, value_parser = ["stl-ascii", "stl-binary", "off"])]
    format: Option<String>,
    /// Exploded-view magnitude.
    #[arg(long, global = true)]
    magnitude: Option<f64>,
    /// Maximum number of worker threads.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Re-run the intersection test after retriangulation.
    #[arg(long, global = true)]
    strict_recheck: bool,
    /// Seed of the random rotation used to break start-face ties.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// More log output (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print counts, Euler characteristic, non-manifold parts and intersections.
    Inspect { input: PathBuf },
    /// List all intersection segments.
    Intersect {
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Full repair to a closed, intersection-free surface.
    Repair {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Also write the stage report to this file.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Outer hull of the retriangulated mesh.
    OuterHull {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Write every bounded chamber and a manifest.
    Chambers {
        input: PathBuf,
        #[arg(short, long)]
        out_dir: PathBuf,
    },
    /// Like `chambers`, with each chamber moved away from the centre.
    Explode {
        input: PathBuf,
        #[arg(short, long)]
        out_dir: PathBuf,
    },
    /// Split non-manifold edges and vertices of an intersection-free mesh.
    FixNonmanifold {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Time the hull computation with and without symmetry.
    Bench {
        /// Repetitions per case.
        #[arg(long, default_value_t = 10)]
        reps: usize,
        /// Extra cases as MESH=GROUPFILE; without any, built-in fixtures are used.
        #[arg(long = "case")]
        cases: Vec<String>,
        /// Write the table to this file as well.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

fn resolve_config(opts: &GlobalOpts) -> Result<PipelineConfig> {
    let mut cfg = match &opts.config {
        Some(p) => serde_json::from_str(&fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?)
            .with_context(|| format!("parsing config {}", p.display()))?,
        None => PipelineConfig::default(),
    };
    if opts.eps_point.is_some() {
        cfg.eps_point = opts.eps_point;
    }
    if opts.eps_split.is_some() {
        cfg.eps_split = opts.eps_split;
    }
    if let Some(g) = &opts.group {
        cfg.group = Some(g.to_string_lossy().into_owned());
    }
    if let Some(f) = &opts.format {
        cfg.format = f.parse::<MeshFormat>()?;
    }
    if let Some(m) = opts.magnitude {
        cfg.magnitude = m;
    }
    if opts.jobs.is_some() {
        cfg.jobs = opts.jobs;
    }
    if opts.strict_recheck {
        cfg.strict_recheck = true;
    }
    if let Some(s) = opts.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

/// Fills in the mesh-dependent defaults so the written config pins them.
fn pin_defaults(cfg: &mut PipelineConfig, x: &Mesh) {
    let tol = cfg.tolerance(x);
    cfg.eps_point = Some(tol.eps_point);
    cfg.eps_param = Some(tol.eps_param);
    cfg.eps_angle = Some(tol.eps_angle);
    cfg.eps_split.get_or_insert_with(|| meshmend::ramify::default_eps(x));
}

fn write_config(cfg: &PipelineConfig, path: &Path) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(cfg)? + "\n").with_context(|| format!("writing {}", path.display()))?;
    info!("config written to {}", path.display());
    Ok(())
}

fn sidecar(output: &Path) -> PathBuf {
    let mut s = output.as_os_str().to_owned();
    s.push(".config.json");
    PathBuf::from(s)
}

/// Loads a mesh. Binary STL input widens an unset point tolerance to cover
/// its single-precision rounding.
fn load_input(path: &Path, cfg: &mut PipelineConfig) -> Result<Mesh> {
    let bytes = fs::read(path).map_err(|source| MeshIoError::Io { path: path.to_path_buf(), source })?;
    let name = path.to_string_lossy();
    let x = meshio::parse_mesh::<f64>(&name, &bytes, cfg.eps_point)?;
    if cfg.eps_point.is_none() && meshio::detect_format(&name, &bytes) == MeshFormat::StlBinary {
        let eps = meshio::single_precision_eps(&x);
        info!("binary STL input, point tolerance {eps:e}");
        cfg.eps_point = Some(eps);
    }
    Ok(x)
}

fn load_group(cfg: &PipelineConfig) -> Result<Option<Vec<Matrix>>> {
    cfg.group.as_ref().map(|g| meshio::load_group(Path::new(g)).map_err(Into::into)).transpose()
}

fn print_lines(lines: &[String]) {
    for l in lines {
        println!("{l}");
    }
}

fn run(cli: Cli) -> Result<()> {
    let opts = &cli.opts;
    let mut cfg = resolve_config(opts)?;
    if let Some(n) = cfg.jobs {
        rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global()?;
    }
    let group = load_group(&cfg)?;
    let group = group.as_deref();
    match &cli.cmd {
        Command::Inspect { input } => {
            let x = load_input(input, &mut cfg)?;
            pin_defaults(&mut cfg, &x);
            print_lines(&pipeline::cmd_inspect(&x, &cfg)?.lines());
            if let Some(p) = &opts.config_out {
                write_config(&cfg, p)?;
            }
        }
        Command::Intersect { input, output } => {
            let x = load_input(input, &mut cfg)?;
            pin_defaults(&mut cfg, &x);
            let map = pipeline::cmd_intersect(&x, &cfg, group)?;
            println!("{} segment(s) on {} face pair(s), {} pair(s) tested", map.len(), map.num_pairs(), map.stats.pairs_considered);
            let dump = meshio::format_intersections(&map);
            match output {
                Some(p) => {
                    fs::write(p, dump).with_context(|| format!("writing {}", p.display()))?;
                    write_config(&cfg, opts.config_out.as_deref().unwrap_or(&sidecar(p)))?;
                }
                None => {
                    print!("{dump}");
                    if let Some(p) = &opts.config_out {
                        write_config(&cfg, p)?;
                    }
                }
            }
        }
        Command::Repair { input, output, report } => {
            let x = load_input(input, &mut cfg)?;
            pin_defaults(&mut cfg, &x);
            let (y, rep) = pipeline::cmd_repair(&x, &cfg, group)?;
            print_lines(&rep.lines());
            if opts.verbose > 0 {
                print_lines(rep.detail_lines());
            }
            let lines = [rep.lines(), rep.detail_lines().to_vec()].concat();
            meshio::save_mesh(&y, pipeline::format_for(output, cfg.format), output)?;
            if let Some(r) = report {
                fs::write(r, lines.join("\n") + "\n").with_context(|| format!("writing {}", r.display()))?;
            }
            write_config(&cfg, opts.config_out.as_deref().unwrap_or(&sidecar(output)))?;
        }
        Command::OuterHull { input, output } => {
            let x = load_input(input, &mut cfg)?;
            pin_defaults(&mut cfg, &x);
            let (hull, orders) = pipeline::cmd_outer_hull(&x, &cfg, group)?;
            println!("outer hull {}", pipeline::Counts::of(&hull));
            println!("non-manifold edges {}", meshmend::complex::nonmanifold_edges(&hull.complex).len());
            meshio::save_mesh_oriented(&hull, &orders, pipeline::format_for(output, cfg.format), output)?;
            write_config(&cfg, opts.config_out.as_deref().unwrap_or(&sidecar(output)))?;
        }
        Command::Chambers { input, out_dir } | Command::Explode { input, out_dir } => {
            let x = load_input(input, &mut cfg)?;
            pin_defaults(&mut cfg, &x);
            if matches!(cli.cmd, Command::Chambers { .. }) {
                cfg.magnitude = 0.0;
            }
            let chambers = pipeline::cmd_explode(&x, &cfg, group)?;
            let records = meshio::write_chambers(&chambers, out_dir, cfg.format)?;
            println!("{} bounded chamber(s)", records.len());
            write_config(&cfg, opts.config_out.as_deref().unwrap_or(&out_dir.join("config.json")))?;
        }
        Command::FixNonmanifold { input, output } => {
            let x = load_input(input, &mut cfg)?;
            pin_defaults(&mut cfg, &x);
            let out = pipeline::cmd_fix_nonmanifold(&x, &cfg)?;
            let lines = out.report_lines();
            print_lines(if opts.verbose > 0 { &lines } else { &lines[..1] });
            println!("output {}", pipeline::Counts::of(&out.mesh));
            meshio::save_mesh(&out.mesh, pipeline::format_for(output, cfg.format), output)?;
            write_config(&cfg, opts.config_out.as_deref().unwrap_or(&sidecar(output)))?;
        }
        Command::Bench { reps, cases, output } => {
            let set = if cases.is_empty() {
                pipeline::default_bench_cases()
            } else {
                cases
                    .iter()
                    .map(|c| {
                        let Some((m, g)) = c.split_once('=') else { bail!("case {c:?} is not MESH=GROUPFILE") };
                        Ok(BenchCase {
                            name: m.to_string(),
                            mesh: load_input(Path::new(m), &mut cfg.clone())?,
                            group: meshio::load_group(Path::new(g))?,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?
            };
            let rows = pipeline::cmd_bench(&set, *reps, cfg.seed)?;
            let mut table = format!("{}\n", BenchRow::HEADER);
            for r in &rows {
                table.push_str(&r.tsv());
                table.push('\n');
            }
            print!("{table}");
            if let Some(p) = output {
                fs::write(p, &table).with_context(|| format!("writing {}", p.display()))?;
            }
            if let Some(p) = &opts.config_out {
                write_config(&cfg, p)?;
            }
        }
    }
    Ok(())
}

fn exit_code(e: &anyhow::Error) -> u8 {
    if let Some(p) = e.downcast_ref::<PipelineError>() {
        return p.exit_code() as u8;
    }
    if e.downcast_ref::<MeshIoError>().is_some() || e.downcast_ref::<serde_json::Error>().is_some() {
        return 2;
    }
    1
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.opts.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
