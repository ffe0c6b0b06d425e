//! Browser demo: interactive forward simulation + inversion, visible-zone
//! exploration, and the correction-symbol ladder, compiled to WebAssembly.
//!
//! The exports stay deliberately narrow — plain JSON strings in, RGBA
//! pixel buffers and JSON out — so the page needs no framework and the
//! crate compiles unchanged on native targets for testing.

mod colormap;

use serde::Deserialize;
use wasm_bindgen::prelude::*;

use smrt_core::backprojection::{reconstruct_full, GridSpec};
use smrt_core::experiment::rel_l2;
use smrt_core::forward::{forward_sinogram, RadiusGrid};
use smrt_core::geometry::{Patch, Surface};
use smrt_core::microlocal::{apply_cutoffs, partial_symbol_probe, visible_zone_mask, CutoffSpec};
use smrt_core::phantom::{Phantom, Primitive};

// JsValue construction aborts off-wasm, so fallible work happens in
// `*_impl` functions with string errors; only the exported wrappers
// (which only JS calls) convert to JsValue.
fn err_to_js(e: String) -> JsValue {
    JsValue::from_str(&e)
}

fn stringify(e: impl std::fmt::Display) -> String {
    e.to_string()
}

#[derive(Deserialize)]
struct SceneParams {
    /// "circle" | "parabola" | "plane"
    surface: String,
    bump_x: f64,
    bump_y: f64,
    bump_radius: f64,
    /// Spatial window half-extent: degrees of arc for the circle,
    /// chart length for parabola/plane. <= 0 means full data.
    window: f64,
    /// Temporal cutoff plateau; <= 0 means no time cutoff.
    time_radius: f64,
    #[serde(default = "default_centers")]
    centers: usize,
    #[serde(default = "default_radii")]
    radii: usize,
    #[serde(default = "default_grid")]
    grid: usize,
}

fn default_centers() -> usize {
    128
}

fn default_radii() -> usize {
    256
}

fn default_grid() -> usize {
    96
}

struct Scene {
    surface: Surface,
    phantom: Phantom,
    cutoff: CutoffSpec,
    r_max: f64,
    grid: GridSpec,
}

fn build_scene(params: &SceneParams) -> Result<Scene, smrt_core::Error> {
    let (surface, r_max) = match params.surface.as_str() {
        "circle" => (Surface::sphere(2, 1.5)?, 3.2),
        "parabola" => {
            let patch = Patch::new(vec![-4.0], vec![4.0])?;
            (Surface::elliptic_paraboloid(2, vec![1.0])?.with_patch(patch)?, 17.0)
        }
        "plane" => {
            let patch = Patch::new(vec![-6.0], vec![6.0])?;
            (Surface::hyperplane(2)?.with_patch(patch)?, 7.2)
        }
        other => return Err(smrt_core::Error::argument(format!("unknown surface '{other}'"))),
    };
    let phantom = Phantom::new(vec![Primitive::SmoothBump {
        center: vec![params.bump_x, params.bump_y],
        radius: params.bump_radius,
        amplitude: 1.0,
        p: 3,
    }])?;
    phantom.validate_inside(&surface)?;

    let gamma0 = if params.window > 0.0 {
        Some(match params.surface.as_str() {
            "circle" => {
                let half = params.window.to_radians();
                Patch::new(vec![-half], vec![half])?
            }
            _ => Patch::new(vec![-params.window], vec![params.window])?,
        })
    } else {
        None
    };
    let gamma = match (&gamma0, params.surface.as_str()) {
        (Some(g0), "circle") => Some(Patch::new(vec![g0.lo[0] - 0.35], vec![g0.hi[0] + 0.35])?),
        (Some(g0), _) => Some(Patch::new(vec![g0.lo[0] - 0.8], vec![g0.hi[0] + 0.8])?),
        (None, _) => None,
    };
    let cutoff = CutoffSpec {
        gamma0,
        gamma,
        taper_degree: 5,
        r: if params.time_radius > 0.0 { params.time_radius } else { f64::INFINITY },
        eps: if params.time_radius > 0.0 { 0.15 * params.time_radius } else { 0.0 },
    };

    // Shrink the view box until it sits strictly inside the domain.
    let mut half = (1.6 * params.bump_radius).max(0.15);
    let grid = loop {
        let grid = GridSpec::centered_box(&[params.bump_x, params.bump_y], half, params.grid);
        if grid.corners().iter().all(|c| surface.contains(c)) {
            break grid;
        }
        half *= 0.85;
        if half < 0.05 {
            return Err(smrt_core::Error::domain("bump sits too close to the surface"));
        }
    };
    Ok(Scene { surface, phantom, cutoff, r_max, grid })
}

/// Forward + windowed inversion of one smooth bump; exposes the phantom,
/// the reconstruction and the signed error as RGBA tiles.
#[wasm_bindgen]
pub struct ReconstructionDemo {
    width: u32,
    height: u32,
    phantom_rgba: Vec<u8>,
    reconstruction_rgba: Vec<u8>,
    error_rgba: Vec<u8>,
    metrics: String,
}

#[wasm_bindgen]
impl ReconstructionDemo {
    /// Runs the full pipeline for a JSON scene description.
    pub fn run(params_json: &str) -> Result<ReconstructionDemo, JsValue> {
        Self::run_impl(params_json).map_err(err_to_js)
    }
}

impl ReconstructionDemo {
    fn run_impl(params_json: &str) -> Result<ReconstructionDemo, String> {
        let params: SceneParams = serde_json::from_str(params_json).map_err(stringify)?;
        let scene = build_scene(&params).map_err(stringify)?;
        let radii = RadiusGrid::uniform(scene.r_max, params.radii).map_err(stringify)?;
        let sino = forward_sinogram(&scene.phantom, &scene.surface, &[params.centers], &radii)
            .map_err(stringify)?;
        let windowed = apply_cutoffs(&sino, &scene.cutoff).map_err(stringify)?;
        let recon = reconstruct_full(&windowed, &scene.grid).map_err(stringify)?;
        let reference = scene.phantom.rasterize(&scene.grid);

        let err = rel_l2(&recon, &reference);
        let peak = if reference.max() > 0.0 { recon.max() / reference.max() } else { 0.0 };
        let scale = reference.max().max(recon.max()).max(1e-12);
        let error_values: Vec<f64> =
            recon.values.iter().zip(&reference.values).map(|(a, b)| a - b).collect();
        let error_amp = error_values.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-12);

        let (nx, ny) = (scene.grid.dims[0], scene.grid.dims[1]);
        Ok(ReconstructionDemo {
            width: nx as u32,
            height: ny as u32,
            phantom_rgba: colormap::field_rgba(&reference.values, nx, ny, 0.0, scale),
            reconstruction_rgba: colormap::field_rgba(&recon.values, nx, ny, 0.0, scale),
            error_rgba: colormap::diverging_rgba(&error_values, nx, ny, error_amp),
            metrics: serde_json::json!({
                "rel_l2": err,
                "peak_ratio": peak,
                "centers": params.centers,
                "radii": params.radii,
                "error_amplitude": error_amp,
            })
            .to_string(),
        })
    }
}

#[wasm_bindgen]
impl ReconstructionDemo {
    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn phantom_rgba(&self) -> Vec<u8> {
        self.phantom_rgba.clone()
    }

    pub fn reconstruction_rgba(&self) -> Vec<u8> {
        self.reconstruction_rgba.clone()
    }

    pub fn error_rgba(&self) -> Vec<u8> {
        self.error_rgba.clone()
    }

    pub fn metrics(&self) -> String {
        self.metrics.clone()
    }
}

#[derive(Deserialize)]
struct ZoneParams {
    surface: String,
    window: f64,
    time_radius: f64,
    /// Probe direction in degrees; negative means average over a fan.
    direction: f64,
    #[serde(default = "default_grid")]
    grid: usize,
    #[serde(default = "default_fan")]
    fan: usize,
}

fn default_fan() -> usize {
    32
}

/// Principal-symbol field over the image box for one direction or
/// averaged over a direction fan.
#[wasm_bindgen]
pub struct VisibleZoneDemo {
    width: u32,
    height: u32,
    sigma_rgba: Vec<u8>,
    metrics: String,
}

#[wasm_bindgen]
impl VisibleZoneDemo {
    pub fn run(params_json: &str) -> Result<VisibleZoneDemo, JsValue> {
        Self::run_impl(params_json).map_err(err_to_js)
    }
}

impl VisibleZoneDemo {
    fn run_impl(params_json: &str) -> Result<VisibleZoneDemo, String> {
        let params: ZoneParams = serde_json::from_str(params_json).map_err(stringify)?;
        let (center, half) = match params.surface.as_str() {
            "circle" => (vec![0.0, 0.0], 1.0),
            "parabola" => (vec![0.0, 1.2], 0.7),
            _ => (vec![0.0, 0.8], 0.7),
        };
        let scene_params = SceneParams {
            surface: params.surface.clone(),
            bump_x: center[0],
            bump_y: center[1],
            bump_radius: 0.2,
            window: params.window,
            time_radius: params.time_radius,
            centers: 8,
            radii: 16,
            grid: params.grid,
        };
        let scene = build_scene(&scene_params).map_err(stringify)?;
        let grid = GridSpec::centered_box(&center, half, params.grid);
        let directions: Vec<Vec<f64>> = if params.direction >= 0.0 {
            let a = params.direction.to_radians();
            vec![vec![a.cos(), a.sin()]]
        } else {
            (0..params.fan)
                .map(|k| {
                    let a = std::f64::consts::PI * (k as f64 + 0.5) / params.fan as f64;
                    vec![a.cos(), a.sin()]
                })
                .collect()
        };
        let mask = visible_zone_mask(&scene.surface, &scene.cutoff, &grid, &directions)
            .map_err(stringify)?;
        let cells = grid.len();
        let mut field = vec![0.0f64; cells];
        for d in 0..directions.len() {
            for idx in 0..cells {
                field[idx] += mask.sigma0[d * cells + idx] / directions.len() as f64;
            }
        }
        let visible = mask.visible.iter().filter(|v| **v).count();
        Ok(VisibleZoneDemo {
            width: grid.dims[0] as u32,
            height: grid.dims[1] as u32,
            sigma_rgba: colormap::field_rgba(&field, grid.dims[0], grid.dims[1], 0.0, 1.0),
            metrics: serde_json::json!({
                "directions": directions.len(),
                "visible_fraction": visible as f64 / mask.visible.len() as f64,
            })
            .to_string(),
        })
    }
}

#[wasm_bindgen]
impl VisibleZoneDemo {
    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn sigma_rgba(&self) -> Vec<u8> {
        self.sigma_rgba.clone()
    }

    pub fn metrics(&self) -> String {
        self.metrics.clone()
    }
}

#[derive(Deserialize)]
struct SymbolParams {
    surface: String,
    x1: f64,
    x2: f64,
    #[serde(default = "default_kmax")]
    kmax: u32,
}

fn default_kmax() -> u32 {
    4
}

/// Correction-symbol ladder at a probe point: sigma0, per-order values,
/// exact polynomial degrees, finite-difference residuals, and polar
/// samples of the first orders for plotting.
#[wasm_bindgen]
pub fn symbol_report(params_json: &str) -> Result<String, JsValue> {
    symbol_report_impl(params_json).map_err(err_to_js)
}

fn symbol_report_impl(params_json: &str) -> Result<String, String> {
    let params: SymbolParams = serde_json::from_str(params_json).map_err(stringify)?;
    let surface = match params.surface.as_str() {
        "circle" => Surface::sphere(2, 1.5).map_err(stringify)?,
        "ellipse" => Surface::ellipsoid(vec![1.0, 2.0]).map_err(stringify)?,
        "parabola" => Surface::elliptic_paraboloid(2, vec![1.0]).map_err(stringify)?,
        "quadric" => Surface::general_quadric(2, vec![1.0, 0.7, 0.3], 1).map_err(stringify)?,
        other => return Err(format!("unknown surface '{other}'")),
    };
    let x = vec![params.x1, params.x2];
    if !surface.contains(&x) {
        return Err("probe point lies outside the domain".into());
    }
    let xi = vec![0.6, 0.8];
    let report = partial_symbol_probe(&surface, &CutoffSpec::full(), &x, &xi, params.kmax)
        .map_err(stringify)?;

    // Polar samples of the numeric correction symbols for the plot.
    let samples = 180;
    let mut polar = Vec::with_capacity(samples);
    for j in 0..samples {
        let a = std::f64::consts::TAU * j as f64 / samples as f64;
        let dir = vec![a.cos(), a.sin()];
        let values: Vec<Option<f64>> = (1..=params.kmax)
            .map(|k| smrt_core::microlocal::correction_symbol(&surface, &x, &dir, k).ok())
            .collect();
        polar.push(serde_json::json!({"angle": a, "values": values}));
    }
    serde_json::to_string(&serde_json::json!({
        "report": report,
        "polar": polar,
    }))
    .map_err(stringify)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reconstruction_demo_runs() {
        let params = r#"{
            "surface": "circle", "bump_x": 0.3, "bump_y": 0.1,
            "bump_radius": 0.35, "window": 0, "time_radius": 0,
            "centers": 96, "radii": 192, "grid": 64
        }"#;
        let demo = ReconstructionDemo::run_impl(params).unwrap();
        assert_eq!(demo.width(), 64);
        assert_eq!(demo.phantom_rgba().len(), 64 * 64 * 4);
        assert_eq!(demo.reconstruction_rgba().len(), 64 * 64 * 4);
        let metrics: serde_json::Value = serde_json::from_str(&demo.metrics()).unwrap();
        let rel = metrics["rel_l2"].as_f64().unwrap();
        assert!(rel < 0.1, "demo rel_l2 {rel}");
        let peak = metrics["peak_ratio"].as_f64().unwrap();
        assert!((peak - 1.0).abs() < 0.1, "demo peak {peak}");
    }

    #[test]
    fn reconstruction_demo_partial_window() {
        let params = r#"{
            "surface": "circle", "bump_x": 0.3, "bump_y": 0.0,
            "bump_radius": 0.3, "window": 90, "time_radius": 2.9,
            "centers": 96, "radii": 192, "grid": 64
        }"#;
        let demo = ReconstructionDemo::run_impl(params).unwrap();
        let metrics: serde_json::Value = serde_json::from_str(&demo.metrics()).unwrap();
        // Half the directions carry half weight: visibly degraded but sane.
        let rel = metrics["rel_l2"].as_f64().unwrap();
        assert!(rel > 0.05 && rel < 1.0, "partial rel_l2 {rel}");
    }

    #[test]
    fn reconstruction_demo_rejects_bad_scene() {
        assert!(ReconstructionDemo::run_impl("{").is_err());
        let leaking = r#"{
            "surface": "circle", "bump_x": 1.4, "bump_y": 0.0,
            "bump_radius": 0.3, "window": 0, "time_radius": 0
        }"#;
        assert!(ReconstructionDemo::run_impl(leaking).is_err());
    }

    #[test]
    fn visible_zone_demo_full_vs_half() {
        let full = VisibleZoneDemo::run_impl(
            r#"{"surface":"circle","window":0,"time_radius":0,"direction":-1,"grid":32}"#,
        )
        .unwrap();
        let m: serde_json::Value = serde_json::from_str(&full.metrics()).unwrap();
        assert_eq!(m["visible_fraction"], 1.0);
        assert_eq!(full.sigma_rgba().len(), 32 * 32 * 4);

        let half = VisibleZoneDemo::run_impl(
            r#"{"surface":"circle","window":90,"time_radius":0,"direction":-1,"grid":32}"#,
        )
        .unwrap();
        let m: serde_json::Value = serde_json::from_str(&half.metrics()).unwrap();
        let frac = m["visible_fraction"].as_f64().unwrap();
        assert!(frac > 0.5 && frac < 1.0, "visible fraction {frac}");
    }

    #[test]
    fn symbol_report_shape() {
        let text = symbol_report_impl(r#"{"surface":"ellipse","x1":0.2,"x2":0.1,"kmax":3}"#).unwrap();
        let value: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(value["report"]["sigma0"], 1.0);
        assert_eq!(value["report"]["terms"][2]["poly_cancelled"], true);
        assert_eq!(value["polar"].as_array().unwrap().len(), 180);
    }
}
