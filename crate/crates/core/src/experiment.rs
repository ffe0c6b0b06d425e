//! Config-driven experiment runner: phantom -> forward -> cutoffs ->
//! reconstruct -> error report, with artifacts on disk and a
//! deterministic, worker-count-independent report.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::backprojection::{reconstruct_full, GridSpec, ImageGrid};
use crate::error::{Error, Result};
use crate::forward::{forward_sinogram, RadiusGrid, Sinogram};
use crate::geometry::{Surface, SurfaceKind};
use crate::microlocal::{apply_cutoffs, classify_covector, CutoffSpec};
use crate::phantom::{Phantom, Primitive};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AcquisitionSpec {
    /// Center counts per chart axis.
    pub centers: Vec<usize>,
    /// Number of radius samples.
    pub radii: usize,
    pub r_max: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BoxSpec {
    /// `"auto"`: 70% of the inradius for closed surfaces, twice the
    /// phantom support for unbounded ones.
    Named(String),
    Explicit { center: Vec<f64>, half_width: f64 },
}

impl Default for BoxSpec {
    fn default() -> Self {
        BoxSpec::Named("auto".into())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridConfig {
    pub per_axis: usize,
    #[serde(default, rename = "box")]
    pub box_spec: BoxSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub surface: Surface,
    pub phantom: Phantom,
    pub acquisition: AcquisitionSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cutoff: Option<CutoffSpec>,
    pub grid: GridConfig,
    #[serde(default)]
    pub seed: u64,
    /// Relative sigma of optional additive Gaussian noise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<f64>,
    /// Directory for artifacts (sinogram, images, report); nothing is
    /// written when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    /// Additional acquisitions for a resolution sweep.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Vec<AcquisitionSpec>>,
    /// Pass/fail thresholds for `run --check`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub check: Option<CheckSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckSpec {
    pub rel_l2_max: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude_ratio_range: Option<(f64, f64)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct JumpMeasurement {
    pub angle: f64,
    pub sigma0: f64,
    pub reference_jump: f64,
    pub measured_jump: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct VisibilitySummary {
    /// Mean measured/reference jump ratio where sigma0 = 1.
    pub visible_ratio: f64,
    /// Mean measured jump at sigma0 = 1/2 locations, relative to the
    /// visible mean.
    pub half_visible_vs_visible: f64,
    /// Mean measured jump at invisible locations, relative to the
    /// visible mean.
    pub invisible_vs_visible: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepEntry {
    pub centers: Vec<usize>,
    pub radii: usize,
    pub rel_l2: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ErrorReport {
    pub rel_l2: f64,
    pub max_error: f64,
    pub amplitude_ratio: f64,
    pub jump_table: Vec<JumpMeasurement>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub visibility: Option<VisibilitySummary>,
    pub timings_ms: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub sweep: Vec<SweepEntry>,
}

fn tag_stage(stage: &str, e: Error) -> Error {
    match e {
        Error::Io(e) => Error::Io(e),
        other => Error::Numeric(format!("stage {stage}: {other}")),
    }
}

/// Relative L2 distance `||a - b|| / ||b||` over grid values
/// (fixed-order reduction, so worker counts cannot change it).
pub fn rel_l2(a: &ImageGrid, b: &ImageGrid) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in a.values.iter().zip(&b.values) {
        num += (x - y) * (x - y);
        den += y * y;
    }
    (num / den.max(f64::MIN_POSITIVE)).sqrt()
}

pub fn max_error(a: &ImageGrid, b: &ImageGrid) -> f64 {
    a.values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0f64, f64::max)
}

/// Jump strength across a ball edge along the radial direction at `angle`:
/// difference of plateau means on each side of the edge (a midpoint fit
/// that is robust to ringing right at the edge).
pub fn radial_edge_jump(
    img: &ImageGrid,
    center: &[f64],
    radius: f64,
    angle: f64,
) -> Result<f64> {
    let h = img.spec.spacing;
    let dir = [angle.cos(), angle.sin()];
    let band = |lo: f64, hi: f64| -> Result<f64> {
        let m = 16;
        let mut acc = 0.0;
        for k in 0..m {
            let r = lo + (hi - lo) * (k as f64 + 0.5) / m as f64;
            let x: Vec<f64> = center.iter().zip(&dir).map(|(c, d)| c + r * d).collect();
            acc += img.sample(&x)?;
        }
        Ok(acc / m as f64)
    };
    let inner = band(radius - 5.0 * h, radius - 2.0 * h)?;
    let outer = band(radius + 2.0 * h, radius + 5.0 * h)?;
    Ok(inner - outer)
}

/// Measures reconstructed vs reference edge jumps of a ball phantom over a
/// fan of edge angles, with the principal symbol at each edge covector.
pub fn jump_table(
    recon: &ImageGrid,
    reference: &ImageGrid,
    surface: &Surface,
    cut: &CutoffSpec,
    ball_center: &[f64],
    ball_radius: f64,
    n_angles: usize,
) -> Result<Vec<JumpMeasurement>> {
    let mut rows = Vec::with_capacity(n_angles);
    for k in 0..n_angles {
        let angle = std::f64::consts::TAU * (k as f64 + 0.5) / n_angles as f64;
        let dir = [angle.cos(), angle.sin()];
        let edge: Vec<f64> =
            ball_center.iter().zip(&dir).map(|(c, d)| c + ball_radius * d).collect();
        let sigma0 = match classify_covector(surface, cut, &edge, &dir) {
            Ok(p) => p.sigma0,
            Err(Error::Tangential(_)) => continue,
            Err(e) => return Err(e),
        };
        rows.push(JumpMeasurement {
            angle,
            sigma0,
            reference_jump: radial_edge_jump(reference, ball_center, ball_radius, angle)?,
            measured_jump: radial_edge_jump(recon, ball_center, ball_radius, angle)?,
        });
    }
    Ok(rows)
}

/// Buckets a jump table into visible / half-visible / invisible strengths.
pub fn summarize_visibility(rows: &[JumpMeasurement]) -> Option<VisibilitySummary> {
    let mut visible = Vec::new();
    let mut half = Vec::new();
    let mut invisible = Vec::new();
    for r in rows {
        if r.sigma0 >= 0.9 {
            visible.push(r);
        } else if (r.sigma0 - 0.5).abs() <= 0.25 {
            half.push(r);
        } else if r.sigma0 <= 0.1 {
            invisible.push(r);
        }
    }
    if visible.is_empty() {
        return None;
    }
    let mean = |v: &[&JumpMeasurement], f: &dyn Fn(&JumpMeasurement) -> f64| {
        v.iter().map(|r| f(r)).sum::<f64>() / v.len().max(1) as f64
    };
    let visible_strength = mean(&visible, &|r| r.measured_jump.abs());
    let visible_ratio = mean(&visible, &|r| r.measured_jump / r.reference_jump);
    let half_strength =
        if half.is_empty() { 0.0 } else { mean(&half, &|r| r.measured_jump.abs()) };
    let invisible_strength =
        if invisible.is_empty() { 0.0 } else { mean(&invisible, &|r| r.measured_jump.abs()) };
    Some(VisibilitySummary {
        visible_ratio,
        half_visible_vs_visible: half_strength / visible_strength,
        invisible_vs_visible: invisible_strength / visible_strength,
    })
}

/// Resolves the image box for a configuration.
pub fn resolve_grid(config: &ExperimentConfig) -> Result<GridSpec> {
    let surface = &config.surface;
    let n = surface.n;
    match &config.grid.box_spec {
        BoxSpec::Explicit { center, half_width } => {
            if center.len() != n || !(half_width > &0.0) {
                return Err(Error::argument("bad explicit box"));
            }
            Ok(GridSpec::centered_box(center, *half_width, config.grid.per_axis))
        }
        BoxSpec::Named(name) if name == "auto" => {
            match surface.kind {
                SurfaceKind::Ellipsoid => {
                    let inradius =
                        1.0 / surface.omega.iter().cloned().fold(f64::MIN_POSITIVE, f64::max);
                    // Concentric box at 70% of the inradius; shrink if the
                    // corners would escape the domain (n >= 3).
                    let mut half = 0.7 * inradius;
                    if half * (n as f64).sqrt() >= 0.99 * inradius {
                        half = 0.9 * inradius / (n as f64).sqrt();
                    }
                    Ok(GridSpec::centered_box(&vec![0.0; n], half, config.grid.per_axis))
                }
                _ => {
                    let (center, rho) = config.phantom.support_ball().ok_or_else(|| {
                        Error::argument("auto box needs a phantom on unbounded surfaces")
                    })?;
                    let mut half = 2.0 * rho;
                    // Shrink until the corners are interior.
                    for _ in 0..32 {
                        let spec = GridSpec::centered_box(&center, half, config.grid.per_axis);
                        if spec.corners().iter().all(|c| surface.contains(c)) {
                            return Ok(spec);
                        }
                        half *= 0.8;
                    }
                    Err(Error::domain("could not fit an auto box inside the domain"))
                }
            }
        }
        BoxSpec::Named(other) => Err(Error::argument(format!("unknown box spec '{other}'"))),
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.surface.validate()?;
        if !(self.acquisition.r_max > 0.0) || self.acquisition.radii < 8 {
            return Err(Error::argument("acquisition needs r_max > 0, radii >= 8"));
        }
        if self.acquisition.centers.len() != self.surface.chart_dim()
            || self.acquisition.centers.iter().any(|c| *c == 0)
        {
            return Err(Error::argument("center counts must match the chart dimension"));
        }
        if self.grid.per_axis < 2 {
            return Err(Error::argument("grid needs at least 2 cells per axis"));
        }
        if let Some(cut) = &self.cutoff {
            cut.validate(&self.surface)?;
            if cut.r.is_finite() && cut.r + cut.eps > self.acquisition.r_max {
                return Err(Error::argument(
                    "temporal cutoff must fit the acquisition: r + eps <= r_max",
                ));
            }
        }
        Ok(())
    }
}

fn run_once(
    config: &ExperimentConfig,
    acq: &AcquisitionSpec,
    grid: &GridSpec,
    timings: &mut BTreeMap<String, f64>,
) -> Result<(Sinogram, ImageGrid, ImageGrid)> {
    let radii = RadiusGrid::uniform(acq.r_max, acq.radii)?;
    let t = Instant::now();
    #[allow(unused_mut)]
    let mut sino = forward_sinogram(&config.phantom, &config.surface, &acq.centers, &radii)
        .map_err(|e| tag_stage("forward", e))?;
    timings.insert("forward".into(), t.elapsed().as_secs_f64() * 1e3);

    #[cfg(feature = "mc")]
    if let Some(sigma) = config.noise {
        crate::forward::add_gaussian_noise(&mut sino, sigma, config.seed);
    }
    #[cfg(not(feature = "mc"))]
    if config.noise.is_some() {
        return Err(Error::Unsupported("noise requires the `mc` feature".into()));
    }

    let t = Instant::now();
    let cut_sino = match &config.cutoff {
        Some(cut) => apply_cutoffs(&sino, cut).map_err(|e| tag_stage("cutoff", e))?,
        None => sino.clone(),
    };
    timings.insert("cutoff".into(), t.elapsed().as_secs_f64() * 1e3);

    let t = Instant::now();
    let recon = reconstruct_full(&cut_sino, grid).map_err(|e| tag_stage("reconstruct", e))?;
    timings.insert("reconstruct".into(), t.elapsed().as_secs_f64() * 1e3);

    let t = Instant::now();
    let reference = config.phantom.rasterize(grid);
    timings.insert("rasterize".into(), t.elapsed().as_secs_f64() * 1e3);
    Ok((sino, recon, reference))
}

/// Runs the full pipeline described by the configuration, writes the
/// artifacts when an output directory is set, and returns the report.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ErrorReport> {
    config.validate()?;
    let grid = resolve_grid(config)?;
    let mut timings = BTreeMap::new();
    let (sino, recon, reference) = run_once(config, &config.acquisition, &grid, &mut timings)?;

    let rel = rel_l2(&recon, &reference);
    let max_err = max_error(&recon, &reference);
    let amplitude_ratio = if reference.max_abs() > 0.0 {
        recon.max() / reference.max()
    } else {
        // Zero phantom: define the ratio as 1 when the output is zero too.
        if recon.max_abs() == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    };
    if !rel.is_finite() && reference.max_abs() > 0.0 {
        return Err(Error::Numeric("non-finite error metric".into()));
    }

    // Jump table over ball edges, for indicator phantoms.
    let cut = config.cutoff.clone().unwrap_or_default();
    let mut jumps = Vec::new();
    if config.surface.n == 2 {
        for term in &config.phantom.terms {
            if let Primitive::IndicatorBall { center, radius, .. } = term {
                jumps.extend(jump_table(
                    &recon,
                    &reference,
                    &config.surface,
                    &cut,
                    center,
                    *radius,
                    64,
                )?);
            }
        }
    }
    let visibility = summarize_visibility(&jumps);

    let mut sweep_entries = Vec::new();
    if let Some(sweep) = &config.sweep {
        for acq in sweep {
            let mut t = BTreeMap::new();
            let (_, r, f) = run_once(config, acq, &grid, &mut t)?;
            sweep_entries.push(SweepEntry {
                centers: acq.centers.clone(),
                radii: acq.radii,
                rel_l2: rel_l2(&r, &f),
            });
        }
    }

    if let Some(dir) = &config.output_dir {
        std::fs::create_dir_all(dir)?;
        crate::io::save_sinogram(&dir.join("sinogram.smr"), &sino)?;
        crate::io::save_image(&dir.join("reconstruction.smi"), &recon)?;
        crate::io::save_image(&dir.join("reference.smi"), &reference)?;
        if config.surface.n == 2 {
            std::fs::write(
                dir.join("reconstruction.pgm"),
                crate::io::export_pgm(&recon, None)?,
            )?;
        }
    }

    let report = ErrorReport {
        rel_l2: rel,
        max_error: max_err,
        amplitude_ratio,
        jump_table: jumps,
        visibility,
        timings_ms: timings,
        sweep: sweep_entries,
    };
    if let Some(dir) = &config.output_dir {
        std::fs::write(dir.join("report.json"), serde_json::to_string_pretty(&report)?)?;
    }
    Ok(report)
}

/// Reconstructs a reference bump and reports the peak-amplitude ratio;
/// a direct check that the pipeline constants are right for this surface.
///
/// The radius range is derived from the actual acquisition geometry
/// (farthest center from the image box). For unbounded surfaces a finite
/// acquisition window necessarily leaves a small amplitude deficit that
/// shrinks as the window widens; the reference anchor sits shallow to
/// keep it small.
pub fn calibration_ratio(surface: &Surface) -> Result<f64> {
    let n = surface.n;
    let (center, rho, patch_half) = match surface.kind {
        SurfaceKind::Ellipsoid => {
            let inradius = 1.0 / surface.omega.iter().cloned().fold(f64::MIN_POSITIVE, f64::max);
            (vec![0.0; n], 0.25 * inradius, 0.0)
        }
        SurfaceKind::EllipticParaboloid => {
            let mut c = vec![0.0; n];
            c[n - 1] = 1.0;
            (c, 0.3, 4.0)
        }
        SurfaceKind::Hyperplane => {
            let mut c = vec![0.0; n];
            c[n - 1] = 0.4;
            (c, 0.25, 8.0)
        }
        SurfaceKind::GeneralQuadric => {
            return Err(Error::Unsupported("calibration needs a charted surface".into()))
        }
    };
    let mut surface = surface.clone();
    if surface.patch.is_none() && surface.default_patch().is_none() {
        let d = surface.chart_dim();
        surface = surface
            .with_patch(crate::geometry::Patch::new(vec![-patch_half; d], vec![patch_half; d])?)?;
    }
    let phantom = Phantom::new(vec![Primitive::SmoothBump {
        center: center.clone(),
        radius: rho,
        amplitude: 1.0,
        p: 3,
    }])?;
    let grid_half = 1.5 * rho;
    let (centers, grid_n) = if n == 2 { (vec![256], 64) } else { (vec![24, 24], 24) };

    // Radii must reach from every center to every grid corner.
    let patch = surface.effective_patch()?;
    let quad = surface.surface_quadrature(&patch, &centers)?;
    let mut r_max = 0.0f64;
    for j in 0..quad.len() {
        let z = &quad.nodes[j * n..(j + 1) * n];
        let dist_to_center = crate::vecmath::dist(z, &center);
        r_max = r_max.max(dist_to_center + grid_half * (n as f64).sqrt());
    }
    r_max += 0.1;
    let radii = ((r_max / (rho / 8.0)).ceil() as usize).clamp(192, 1024);

    let config = ExperimentConfig {
        surface,
        phantom,
        acquisition: AcquisitionSpec { centers, radii, r_max },
        cutoff: None,
        grid: GridConfig {
            per_axis: grid_n,
            box_spec: BoxSpec::Explicit { center, half_width: grid_half },
        },
        seed: 0,
        noise: None,
        output_dir: None,
        sweep: None,
        check: None,
    };
    Ok(run_experiment(&config)?.amplitude_ratio)
}
