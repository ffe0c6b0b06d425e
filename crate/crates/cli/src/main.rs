//! Command-line pipeline for the spherical-mean transform toolkit.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numeric failure
//! (NaN/coverage), 4 threshold failure in `run --check`.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use smrt_core::backprojection::{reconstruct_full, GridSpec};
use smrt_core::error::Error;
use smrt_core::experiment::{calibration_ratio, run_experiment, ExperimentConfig};
use smrt_core::filter::filter_sinogram;
use smrt_core::forward::{forward_sinogram, RadiusGrid};
use smrt_core::geometry::Surface;
use smrt_core::io;
use smrt_core::microlocal::{apply_cutoffs, partial_symbol_probe, visible_zone_mask, CutoffSpec};
use smrt_core::phantom::Phantom;

#[derive(Parser)]
#[command(name = "smrt", about = "Spherical-mean Radon transform toolkit", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Rasterize a phantom onto an image grid.
    Phantom(PhantomArgs),
    /// Simulate the forward transform onto a sinogram file.
    Forward(ForwardArgs),
    /// Apply the radial filter stage to a sinogram file.
    Filter(FilterArgs),
    /// Full-data inversion: filter + weighted back-projection.
    Reconstruct(ReconstructArgs),
    /// Inversion of cutoff-windowed (partial) data.
    ReconstructPartial(ReconstructPartialArgs),
    /// Principal-symbol field and visibility mask over a grid.
    VisibleZone(VisibleZoneArgs),
    /// Correction-symbol ladder at a probe covector.
    SymbolCheck(SymbolCheckArgs),
    /// Quadrature vs Monte-Carlo check of the forward sphere integrals.
    Oracle(OracleArgs),
    /// Config-driven experiment: forward, cutoffs, reconstruct, report.
    Run(RunArgs),
}

#[derive(Args)]
struct PhantomArgs {
    #[arg(long)]
    phantom: PathBuf,
    #[arg(long, default_value_t = 128)]
    grid: usize,
    /// "cx,cy[,cz],half_width"
    #[arg(long = "box")]
    box_spec: String,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    pgm: Option<PathBuf>,
}

#[derive(Args)]
struct ForwardArgs {
    #[arg(long)]
    phantom: PathBuf,
    #[arg(long)]
    surface: PathBuf,
    /// Center counts per chart axis, comma-separated.
    #[arg(long)]
    centers: String,
    #[arg(long)]
    radii: usize,
    #[arg(long)]
    rmax: f64,
    #[arg(long)]
    out: PathBuf,
    /// Relative sigma of additive Gaussian noise.
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct FilterArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Ambient dimension (filter parity dispatch).
    #[arg(long)]
    n: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ReconstructArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, default_value_t = 128)]
    grid: usize,
    /// "auto" or "cx,cy[,cz],half_width"
    #[arg(long = "box", default_value = "auto")]
    box_spec: String,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    pgm: Option<PathBuf>,
    /// Also reconstruct a reference bump and report the amplitude ratio.
    #[arg(long)]
    calibration: bool,
}

#[derive(Args)]
struct ReconstructPartialArgs {
    #[command(flatten)]
    base: ReconstructArgs,
    #[arg(long)]
    cut: PathBuf,
}

#[derive(Args)]
struct VisibleZoneArgs {
    #[arg(long)]
    surface: PathBuf,
    #[arg(long)]
    cut: PathBuf,
    #[arg(long, default_value_t = 128)]
    grid: usize,
    /// Defaults to the 70%-inradius box on closed surfaces.
    #[arg(long = "box")]
    box_spec: Option<String>,
    #[arg(long, default_value_t = 16)]
    dirs: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SymbolCheckArgs {
    #[arg(long)]
    surface: PathBuf,
    /// Base point, comma-separated.
    #[arg(long)]
    x: String,
    /// Probe direction, comma-separated (defaults to a generic one).
    #[arg(long)]
    xi: Option<String>,
    #[arg(long, default_value_t = 4)]
    kmax: u32,
    #[arg(long)]
    cut: Option<PathBuf>,
    #[arg(long)]
    report: PathBuf,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long)]
    phantom: PathBuf,
    #[arg(long, default_value_t = 20)]
    pairs: usize,
    #[arg(long, default_value_t = 200_000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Exit 4 when the config's check thresholds are violated.
    #[arg(long)]
    check: bool,
}

fn parse_csv_f64(text: &str) -> Result<Vec<f64>, Error> {
    text.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| Error::argument(e.to_string())))
        .collect()
}

fn parse_csv_usize(text: &str) -> Result<Vec<usize>, Error> {
    text.split(',')
        .map(|t| t.trim().parse::<usize>().map_err(|e| Error::argument(e.to_string())))
        .collect()
}

/// "cx,cy[,cz],half" -> centered grid spec.
fn parse_box(text: &str, per_axis: usize) -> Result<GridSpec, Error> {
    let vals = parse_csv_f64(text)?;
    if vals.len() < 3 {
        return Err(Error::argument("box needs center coordinates and a half-width"));
    }
    let (center, half) = vals.split_at(vals.len() - 1);
    if !(half[0] > 0.0) {
        return Err(Error::argument("box half-width must be positive"));
    }
    Ok(GridSpec::centered_box(center, half[0], per_axis))
}

fn load_json<T: serde::de::DeserializeOwned>(path: &PathBuf) -> Result<T, Error> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Argument(_)
        | Error::Format(_)
        | Error::Json(_)
        | Error::Domain(_)
        | Error::Unsupported(_) => 2,
        _ => 3,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::Phantom(args) => {
            let phantom: Phantom = load_json(&args.phantom)?;
            let grid = parse_box(&args.box_spec, args.grid)?;
            let img = phantom.rasterize(&grid);
            io::save_image(&args.out, &img)?;
            if let Some(pgm) = args.pgm {
                std::fs::write(pgm, io::export_pgm(&img, None)?)?;
            }
            println!("rasterized {} cells to {}", img.values.len(), args.out.display());
        }
        Command::Forward(args) => {
            let phantom: Phantom = load_json(&args.phantom)?;
            let surface: Surface = load_json(&args.surface)?;
            surface.validate()?;
            let counts = parse_csv_usize(&args.centers)?;
            let radii = RadiusGrid::uniform(args.rmax, args.radii)?;
            let mut sino = forward_sinogram(&phantom, &surface, &counts, &radii)?;
            if let Some(sigma) = args.noise {
                smrt_core::forward::add_gaussian_noise(&mut sino, sigma, args.seed);
            }
            io::save_sinogram(&args.out, &sino)?;
            println!(
                "forward: {} centers x {} radii -> {}",
                sino.n_centers(),
                sino.radii.count,
                args.out.display()
            );
        }
        Command::Filter(args) => {
            let sino = io::load_sinogram(&args.input)?;
            let filtered = filter_sinogram(&sino, args.n)?;
            io::save_filtered(&args.out, &filtered)?;
            println!(
                "filtered (n = {}, {} query radii) -> {}",
                args.n,
                filtered.query_radii.count,
                args.out.display()
            );
        }
        Command::Reconstruct(args) => {
            let sino = io::load_sinogram(&args.input)?;
            reconstruct_common(&sino, &args)?;
        }
        Command::ReconstructPartial(args) => {
            let sino = io::load_sinogram(&args.base.input)?;
            let cut: CutoffSpec = load_json(&args.cut)?;
            let windowed = apply_cutoffs(&sino, &cut)?;
            reconstruct_common(&windowed, &args.base)?;
        }
        Command::VisibleZone(args) => {
            let surface: Surface = load_json(&args.surface)?;
            surface.validate()?;
            let cut: CutoffSpec = load_json(&args.cut)?;
            let grid = match &args.box_spec {
                Some(text) => parse_box(text, args.grid)?,
                None => {
                    if surface.kind != smrt_core::geometry::SurfaceKind::Ellipsoid {
                        return Err(Error::argument(
                            "--box is required for unbounded surfaces",
                        ));
                    }
                    let inradius = 1.0
                        / surface.omega.iter().cloned().fold(f64::MIN_POSITIVE, f64::max);
                    let half = if surface.n == 2 {
                        0.7 * inradius
                    } else {
                        0.9 * inradius / (surface.n as f64).sqrt()
                    };
                    GridSpec::centered_box(&vec![0.0; surface.n], half, args.grid)
                }
            };
            let directions: Vec<Vec<f64>> = (0..args.dirs)
                .map(|k| {
                    let a = std::f64::consts::PI * (k as f64 + 0.5) / args.dirs as f64;
                    let mut d = vec![0.0; surface.n];
                    d[0] = a.cos();
                    d[surface.n - 1] = a.sin();
                    d
                })
                .collect();
            let mask = visible_zone_mask(&surface, &cut, &grid, &directions)?;
            let visible = mask.visible.iter().filter(|v| **v).count();
            io::save_mask(&args.out, &mask)?;
            println!(
                "visible zone: {} of {} (cell, direction) pairs visible -> {}",
                visible,
                mask.visible.len(),
                args.out.display()
            );
        }
        Command::SymbolCheck(args) => {
            let surface: Surface = load_json(&args.surface)?;
            surface.validate()?;
            let x = parse_csv_f64(&args.x)?;
            let xi = match args.xi {
                Some(text) => parse_csv_f64(&text)?,
                None => {
                    let mut v: Vec<f64> = (0..surface.n).map(|i| 0.7 - 0.1 * i as f64).collect();
                    v[surface.n - 1] = 0.9;
                    v
                }
            };
            let cut = match args.cut {
                Some(path) => load_json(&path)?,
                None => CutoffSpec::full(),
            };
            let report = partial_symbol_probe(&surface, &cut, &x, &xi, args.kmax)?;
            std::fs::write(&args.report, serde_json::to_string_pretty(&report)?)?;
            println!(
                "sigma0 = {:.6}, symbol estimate = {:.6} + {:.2e} i -> {}",
                report.sigma0,
                report.symbol_estimate_re,
                report.symbol_estimate_im,
                args.report.display()
            );
            for term in &report.terms {
                println!(
                    "  k = {}: degree {:?}, cancelled {:?}, fd residual {:.3e}",
                    term.k, term.poly_degree, term.poly_cancelled, term.fd_laplacian
                );
            }
        }
        Command::Oracle(args) => {
            let phantom: Phantom = load_json(&args.phantom)?;
            let n = phantom
                .dim()
                .ok_or_else(|| Error::argument("oracle needs a non-empty phantom"))?;
            let (support_c, support_r) = phantom.support_ball().unwrap();
            let mut worst = 0.0f64;
            let mut failures = 0usize;
            for k in 0..args.pairs {
                // Deterministic LCG over pair index; spheres near the support.
                let mut state = args.seed.wrapping_add(k as u64).wrapping_mul(0x9e3779b97f4a7c15);
                let mut next = move || {
                    state = state
                        .wrapping_mul(6364136223846793005)
                        .wrapping_add(1442695040888963407);
                    (state >> 11) as f64 / (1u64 << 53) as f64
                };
                let z: Vec<f64> = support_c
                    .iter()
                    .map(|c| c + (2.0 * next() - 1.0) * 2.0 * support_r)
                    .collect();
                let dist: f64 = z
                    .iter()
                    .zip(&support_c)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                let r = (dist - support_r).max(0.05) + next() * 2.0 * support_r;
                let nodes = if n == 2 { 4096 } else { 200_000 };
                let quad = smrt_core::forward::sphere_integral(&phantom, &z, r, nodes)?;
                let (mc, se) = smrt_core::forward::mc_sphere_integral(
                    &phantom,
                    &z,
                    r,
                    args.samples,
                    args.seed + k as u64,
                )?;
                let scale = smrt_core::forward::sphere_area(n, r) * phantom.max_amplitude();
                let tol = (3.0 * se).max(1e-3 * scale);
                let diff = (quad - mc).abs();
                worst = worst.max(diff / tol);
                if diff > tol {
                    failures += 1;
                    println!("pair {k}: FAIL |{quad:.6} - {mc:.6}| = {diff:.2e} > {tol:.2e}");
                }
            }
            println!(
                "oracle: {} pairs, {} failures, worst diff/tol = {:.3}",
                args.pairs, failures, worst
            );
            if failures > 0 {
                return Ok(ExitCode::from(3));
            }
        }
        Command::Run(args) => {
            let config: ExperimentConfig = load_json(&args.config)?;
            let report = run_experiment(&config)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            if args.check {
                if let Some(check) = &config.check {
                    let mut ok = report.rel_l2 <= check.rel_l2_max;
                    if let Some((lo, hi)) = check.amplitude_ratio_range {
                        ok &= report.amplitude_ratio >= lo && report.amplitude_ratio <= hi;
                    }
                    if !ok {
                        eprintln!("check failed: rel_l2 = {}", report.rel_l2);
                        return Ok(ExitCode::from(4));
                    }
                    println!("check passed: rel_l2 = {} <= {}", report.rel_l2, check.rel_l2_max);
                } else {
                    return Err(Error::argument("--check needs a `check` block in the config"));
                }
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn reconstruct_common(
    sino: &smrt_core::forward::Sinogram,
    args: &ReconstructArgs,
) -> Result<(), Error> {
    let grid = if args.box_spec == "auto" {
        let config = ExperimentConfig {
            surface: sino.surface.clone(),
            phantom: sino.phantom.clone().unwrap_or_else(Phantom::zero),
            acquisition: smrt_core::experiment::AcquisitionSpec {
                centers: sino.centers.counts.clone(),
                radii: sino.radii.count,
                r_max: sino.radii.last(),
            },
            cutoff: None,
            grid: smrt_core::experiment::GridConfig {
                per_axis: args.grid,
                box_spec: smrt_core::experiment::BoxSpec::default(),
            },
            seed: 0,
            noise: None,
            output_dir: None,
            sweep: None,
            check: None,
        };
        smrt_core::experiment::resolve_grid(&config)?
    } else {
        parse_box(&args.box_spec, args.grid)?
    };
    let img = reconstruct_full(sino, &grid)?;
    io::save_image(&args.out, &img)?;
    if let Some(pgm) = &args.pgm {
        std::fs::write(pgm, io::export_pgm(&img, None)?)?;
    }
    println!(
        "reconstructed {} cells (max {:.6}) -> {}",
        img.values.len(),
        img.max(),
        args.out.display()
    );
    if args.calibration {
        let ratio = calibration_ratio(&sino.surface)?;
        println!("calibration: reference bump amplitude ratio = {ratio:.4}");
    }
    Ok(())
}
