use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use cellular_ia::bounds::{proper_test, usap_downlink_necessary, usap_uplink_necessary, BoundReport};
use cellular_ia::dump::{read_json, write_json, BeamformerDump, ChannelDump};
use cellular_ia::structured::build_two_cell_design;
use cellular_ia::sweep::{
    check_records, emit_bound_curves, extract_boundary, gamma_grid, read_csv, run_sweep, write_boundary_csv,
    write_csv, write_curves_csv, Region, Scheme, SweepSpec, DESK_SCALE, FULL_SCALE,
};
use cellular_ia::usap::usap;
use cellular_ia::verify::{verify_alignment, Direction};
use cellular_ia::{ChannelSet, DofDemand, NetworkConfig, Rational, TolerancePolicy};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

/// DoF bounds, interference-alignment design and feasibility sweeps for
/// MIMO cellular networks.
#[derive(Parser)]
#[command(name = "cellular-ia", version)]
struct Cli {
    /// Relative singular-value cutoff for numerical rank.
    #[arg(long, global = true, default_value_t = 1e-8)]
    rank_tol: f64,
    /// Largest accepted alignment residual.
    #[arg(long, global = true, default_value_t = 1e-8)]
    residual_tol: f64,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone, Copy)]
struct Net {
    #[arg(long = "G")]
    g: usize,
    #[arg(long = "K")]
    k: usize,
    #[arg(long = "M")]
    m: usize,
    #[arg(long = "N")]
    n: usize,
}

impl Net {
    fn config(&self) -> Result<NetworkConfig> {
        Ok(NetworkConfig::new(self.g, self.k, self.m, self.n)?)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Dir {
    Uplink,
    Downlink,
}

impl From<Dir> for Direction {
    fn from(d: Dir) -> Self {
        match d {
            Dir::Uplink => Direction::Uplink,
            Dir::Downlink => Direction::Downlink,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    UsapUplink,
    UsapDownlink,
    Structured,
    BoundsOnly,
}

impl From<SchemeArg> for Scheme {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::UsapUplink => Scheme::UsapUplink,
            SchemeArg::UsapDownlink => Scheme::UsapDownlink,
            SchemeArg::Structured => Scheme::Structured,
            SchemeArg::BoundsOnly => Scheme::BoundsOnly,
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Bounds for one network as JSON, or a CSV grid with --grid.
    Bounds {
        #[arg(long = "G")]
        g: usize,
        #[arg(long = "K")]
        k: usize,
        #[arg(long = "M", required_unless_present = "grid")]
        m: Option<usize>,
        #[arg(long = "N", required_unless_present = "grid")]
        n: Option<usize>,
        /// Per-user demand to test against the proper and design conditions.
        #[arg(long)]
        d: Option<usize>,
        /// Emit every (M, N) up to --Mmax, --Nmax as CSV.
        #[arg(long)]
        grid: bool,
        #[arg(long = "Mmax", default_value_t = 24)]
        m_max: usize,
        #[arg(long = "Nmax", default_value_t = 24)]
        n_max: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Checks a beamformer dump against a channel dump.
    Verify {
        #[arg(long)]
        channels: PathBuf,
        #[arg(long)]
        beamformers: PathBuf,
    },
    /// Packing-ratio design for a two-cell network.
    Structured {
        #[arg(long = "K")]
        k: usize,
        #[arg(long = "M")]
        m: usize,
        #[arg(long = "N")]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        dump_beamformers: Option<PathBuf>,
        /// Channels of the extended network the design was built for.
        #[arg(long)]
        dump_channels: Option<PathBuf>,
    },
    /// Random-coefficient linear-system design.
    Usap {
        #[command(flatten)]
        net: Net,
        #[arg(long)]
        d: usize,
        #[arg(long, value_enum, default_value = "uplink")]
        direction: Dir,
        /// Seed for coefficients and nullspace draws.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Seed for the channel draw; defaults to --seed.
        #[arg(long)]
        channel_seed: Option<u64>,
        /// Load channels from a dump instead of drawing them.
        #[arg(long, conflicts_with = "channel_seed")]
        channels: Option<PathBuf>,
        #[arg(long)]
        dump_beamformers: Option<PathBuf>,
        #[arg(long)]
        dump_channels: Option<PathBuf>,
    },
    /// Feasibility sweep over (M, N, d), written as CSV.
    Sweep {
        #[arg(long = "G")]
        g: usize,
        #[arg(long = "K")]
        k: usize,
        #[arg(long = "Mmax")]
        m_max: Option<usize>,
        #[arg(long = "Nmax")]
        n_max: Option<usize>,
        /// Use the full-scale grid size for unset --Mmax/--Nmax.
        #[arg(long)]
        full_scale: bool,
        #[arg(long, value_enum, default_value = "usap-uplink")]
        scheme: SchemeArg,
        #[arg(long, default_value_t = 3)]
        seeds: usize,
        #[arg(long, default_value_t = 0)]
        base_seed: u64,
        /// Also try points failing the design's necessary condition.
        #[arg(long)]
        relax_gate: bool,
        /// Keep only points below the decomposition inner bound.
        #[arg(long)]
        below_decomposition: bool,
        /// Record per-point wall time (makes the CSV run-dependent).
        #[arg(long)]
        timing: bool,
        #[arg(long)]
        out: PathBuf,
        /// JSON-lines checkpoint; completed points are skipped on rerun.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Bound curves per antenna ratio as CSV.
    BoundsCurves {
        #[arg(long = "G")]
        g: usize,
        #[arg(long = "K")]
        k: usize,
        #[arg(long, default_value_t = 60)]
        max_den: i64,
        /// Largest ratio, as p/q or an integer.
        #[arg(long, default_value = "2")]
        gamma_max: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Largest successful d/N per ratio from a sweep CSV.
    Boundary {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Draws a channel set and writes it as JSON.
    Channels {
        #[command(flatten)]
        net: Net,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn sink(out: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn print_json(v: &serde_json::Value) -> Result<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, v)?;
    writeln!(out)?;
    Ok(())
}

fn bounds_grid(g: usize, k: usize, m_max: usize, n_max: usize, out: &Option<PathBuf>) -> Result<()> {
    let mut w = sink(out)?;
    writeln!(w, "G,K,M,N,gamma,inner,xnet_outer,prior_outer,proper_limit,mac_bc,closed_form")?;
    for m in 1..=m_max {
        for n in 1..=n_max {
            let r = BoundReport::compute(&NetworkConfig::new(g, k, m, n)?)?;
            let closed = r.closed_form_optimal.map(|v| v.to_string()).unwrap_or_default();
            writeln!(
                w,
                "{g},{k},{m},{n},{},{},{},{},{},{},{closed}",
                Rational::new(m as i64, n as i64),
                r.decomposition_inner,
                r.xnet_outer,
                r.prior_outer,
                r.proper_limit,
                r.mac_bc
            )?;
        }
    }
    w.flush()?;
    Ok(())
}

fn dump_channels(ch: &ChannelSet, path: &Option<PathBuf>) -> Result<()> {
    if let Some(p) = path {
        write_json(&ChannelDump::from_set(ch), p)?;
    }
    Ok(())
}

fn parse_ratio(s: &str) -> Result<Rational> {
    let r = match s.split_once('/') {
        Some((p, q)) => Rational::new(p.trim().parse()?, q.trim().parse()?),
        None => Rational::from_integer(s.trim().parse()?),
    };
    Ok(r)
}

fn run(cli: Cli) -> Result<ExitCode> {
    let pol = TolerancePolicy::new(cli.rank_tol, cli.residual_tol)?;
    match cli.cmd {
        Cmd::Bounds { g, k, m, n, d, grid, m_max, n_max, out } => {
            if grid {
                bounds_grid(g, k, m_max, n_max, &out)?;
                return Ok(ExitCode::SUCCESS);
            }
            let (Some(m), Some(n)) = (m, n) else { bail!("--M and --N are required") };
            let cfg = NetworkConfig::new(g, k, m, n)?;
            let mut v = serde_json::to_value(BoundReport::compute(&cfg)?)?;
            if let Some(d) = d {
                let dd = DofDemand::new(d)?;
                v["demand"] = json!({
                    "d": d,
                    "proper": proper_test(&cfg, dd),
                    "usap_uplink_necessary": usap_uplink_necessary(&cfg, dd),
                    "usap_downlink_necessary": usap_downlink_necessary(&cfg, dd),
                });
            }
            print_json(&v)?;
        }
        Cmd::Verify { channels, beamformers } => {
            let ch = read_json::<ChannelDump>(&channels)?.to_set()?;
            let bf = read_json::<BeamformerDump>(&beamformers)?.to_set(&pol)?;
            let report = verify_alignment(&ch, &bf, &pol)?;
            print_json(&serde_json::to_value(&report)?)?;
            if !report.pass {
                return Ok(ExitCode::from(1));
            }
        }
        Cmd::Structured { k, m, n, seed, dump_beamformers, dump_channels: dc } => {
            let cfg = NetworkConfig::new(2, k, m, n)?;
            let design = build_two_cell_design(&cfg, seed, &pol)?;
            print_json(&json!({
                "config": cfg,
                "seed": seed,
                "extension_factor": design.extension_factor,
                "row": design.row,
                "ledger": design.ledger,
                "achieved_dof": design.achieved_dof,
                "dof_per_cell": design.dof_per_cell(),
                "report": design.report,
            }))?;
            if let Some(p) = dump_beamformers {
                write_json(&BeamformerDump::from_set(&design.beamformers, seed), &p)?;
            }
            dump_channels(&design.channels, &dc)?;
        }
        Cmd::Usap { net, d, direction, seed, channel_seed, channels, dump_beamformers, dump_channels: dc } => {
            let cfg = net.config()?;
            let ch = match channels {
                Some(p) => {
                    let ch = read_json::<ChannelDump>(&p)?.to_set()?;
                    if *ch.config() != cfg {
                        bail!("channel dump is for {}, not {cfg}", ch.config());
                    }
                    ch
                }
                None => ChannelSet::generate(cfg, channel_seed.unwrap_or(seed)),
            };
            let out = usap(&ch, DofDemand::new(d)?, direction.into(), seed, &pol);
            let mut v = serde_json::to_value(&out)?;
            v["channel_seed"] = json!(ch.seed());
            print_json(&v)?;
            if let (Some(p), Some(bf)) = (dump_beamformers, &out.beamformers) {
                write_json(&BeamformerDump::from_set(bf, seed), &p)?;
            }
            dump_channels(&ch, &dc)?;
        }
        Cmd::Sweep {
            g,
            k,
            m_max,
            n_max,
            full_scale,
            scheme,
            seeds,
            base_seed,
            relax_gate,
            below_decomposition,
            timing,
            out,
            resume,
        } => {
            let default = if full_scale { FULL_SCALE } else { DESK_SCALE };
            let mut spec =
                SweepSpec::new(g, k, m_max.unwrap_or(default), n_max.unwrap_or(default), scheme.into());
            spec.seeds = seeds;
            spec.base_seed = base_seed;
            spec.relax_usap_gate = relax_gate;
            spec.region = below_decomposition.then_some(Region::BelowDecomposition);
            spec.record_timing = timing;
            spec.checkpoint = resume;
            let records = run_sweep(&spec)?;
            write_csv(&records, BufWriter::new(File::create(&out)?))?;
            let ok = records.iter().filter(|r| r.is_success()).count();
            eprintln!("{} points, {ok} successes, written to {}", records.len(), out.display());
            let violations = check_records(&spec, &records);
            if !violations.is_empty() {
                for v in &violations {
                    eprintln!("invariant violation: {}", serde_json::to_string(v)?);
                }
                return Ok(ExitCode::from(2));
            }
        }
        Cmd::BoundsCurves { g, k, max_den, gamma_max, out } => {
            let grid = gamma_grid(max_den, parse_ratio(&gamma_max)?);
            let rows = emit_bound_curves(g, k, &grid);
            write_curves_csv(g, k, &rows, sink(&out)?)?;
        }
        Cmd::Boundary { input, out } => {
            let records = read_csv(File::open(&input).with_context(|| format!("opening {}", input.display()))?)?;
            write_boundary_csv(&extract_boundary(&records), sink(&out)?)?;
        }
        Cmd::Channels { net, seed, out } => {
            let ch = ChannelSet::generate(net.config()?, seed);
            write_json(&ChannelDump::from_set(&ch), Path::new(&out))?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
