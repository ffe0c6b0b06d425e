//! Forward simulation: samples of the restricted spherical Radon transform
//! on a centers x radii grid, plus a seeded Monte-Carlo oracle for the
//! sphere integrals.
//!
//! Convention: the transform is the *surface integral* over the sphere
//! `S_r(z)` (the `r^{n-1}` factor rides along in the measure), not the
//! spherical mean. The filter stage divides by `r` itself, so nothing is
//! re-normalized here.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Surface, SurfaceQuadrature};
use crate::phantom::Phantom;
use crate::vecmath::dist;

/// Uniform radius grid `r_i = start + i * step`, `i = 0..count`.
/// Raw acquisition starts at `start = step` so the filter stage never
/// divides by zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadiusGrid {
    pub start: f64,
    pub step: f64,
    pub count: usize,
}

impl RadiusGrid {
    /// Grid `h, 2h, ..., r_max` with `h = r_max / count`.
    pub fn uniform(r_max: f64, count: usize) -> Result<Self> {
        if !(r_max > 0.0) || count < 2 {
            return Err(Error::argument("radius grid needs r_max > 0 and count >= 2"));
        }
        let step = r_max / count as f64;
        Ok(RadiusGrid { start: step, step, count })
    }

    pub fn value(&self, i: usize) -> f64 {
        self.start + i as f64 * self.step
    }

    pub fn last(&self) -> f64 {
        self.value(self.count - 1)
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.count).map(|i| self.value(i))
    }

    /// Grid shifted by half a step: `start - step/2 + i * step`. Used as
    /// the query grid of the even-dimension principal-value filter.
    pub fn staggered(&self) -> RadiusGrid {
        RadiusGrid { start: self.start - 0.5 * self.step, step: self.step, count: self.count }
    }
}

/// Sampled data `R(f)(z_j, r_i)`, center-major.
#[derive(Debug, Clone)]
pub struct Sinogram {
    pub surface: Surface,
    pub centers: SurfaceQuadrature,
    pub radii: RadiusGrid,
    /// `data[j * radii.count + i]` = value at center `j`, radius `i`.
    pub data: Vec<f64>,
    /// Phantom that generated the data, when known (carried as metadata).
    pub phantom: Option<Phantom>,
}

impl Sinogram {
    pub fn n_centers(&self) -> usize {
        self.centers.len()
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.data[j * self.radii.count..(j + 1) * self.radii.count]
    }
}

/// Surface integral of `f` over the sphere of radius `r` about `z`, by
/// uniform angular quadrature (trapezoid on the circle; product
/// Gauss-Legendre in the polar variable x uniform azimuth on the 2-sphere).
pub fn sphere_integral(phantom: &Phantom, z: &[f64], r: f64, nodes: usize) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::argument("sphere radius must be positive"));
    }
    if nodes < 16 {
        return Err(Error::argument("need at least 16 quadrature nodes"));
    }
    if let Some((c, rho)) = phantom.support_ball() {
        if (dist(z, &c) - r).abs() > rho {
            return Ok(0.0);
        }
    }
    match z.len() {
        2 => {
            let m = nodes;
            let dphi = std::f64::consts::TAU / m as f64;
            let mut acc = 0.0;
            let mut pt = [0.0f64; 2];
            for j in 0..m {
                let (s, c) = ((j as f64 + 0.5) * dphi).sin_cos();
                pt[0] = z[0] + r * c;
                pt[1] = z[1] + r * s;
                acc += phantom.eval(&pt);
            }
            Ok(acc * dphi * r)
        }
        3 => {
            let polar = ((nodes as f64 / 2.0).sqrt().ceil() as usize).max(4);
            let azim = 2 * polar;
            let (gl_nodes, gl_weights) = gauss_legendre(polar);
            let dphi = std::f64::consts::TAU / azim as f64;
            let mut acc = 0.0;
            let mut pt = [0.0f64; 3];
            for (t, w) in gl_nodes.iter().zip(&gl_weights) {
                let s = (1.0 - t * t).max(0.0).sqrt();
                let mut ring = 0.0;
                for j in 0..azim {
                    let (sp, cp) = ((j as f64 + 0.5) * dphi).sin_cos();
                    pt[0] = z[0] + r * s * cp;
                    pt[1] = z[1] + r * s * sp;
                    pt[2] = z[2] + r * t;
                    ring += phantom.eval(&pt);
                }
                acc += w * ring;
            }
            Ok(acc * dphi * r * r)
        }
        d => Err(Error::Unsupported(format!("sphere quadrature for n = {d}"))),
    }
}

/// Area of the sphere `S_r` in dimension `n`.
pub fn sphere_area(n: usize, r: f64) -> f64 {
    match n {
        2 => std::f64::consts::TAU * r,
        3 => 4.0 * std::f64::consts::PI * r * r,
        _ => f64::NAN,
    }
}

#[cfg(feature = "mc")]
mod mc {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Monte-Carlo estimate of the sphere integral: `|S_r|` times the mean
    /// of `f` over uniform random sphere points, with its standard error.
    /// Reproducible for a fixed seed.
    pub fn mc_sphere_integral(
        phantom: &Phantom,
        z: &[f64],
        r: f64,
        samples: usize,
        seed: u64,
    ) -> Result<(f64, f64)> {
        if samples < 10_000 {
            return Err(Error::argument("need at least 1e4 Monte-Carlo samples"));
        }
        if !(r > 0.0) {
            return Err(Error::argument("sphere radius must be positive"));
        }
        let n = z.len();
        let area = sphere_area(n, r);
        if area.is_nan() {
            return Err(Error::Unsupported(format!("Monte-Carlo sampling for n = {n}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        let mut pt = vec![0.0f64; n];
        for _ in 0..samples {
            match n {
                2 => {
                    let (s, c) = rng.random_range(0.0..std::f64::consts::TAU).sin_cos();
                    pt[0] = z[0] + r * c;
                    pt[1] = z[1] + r * s;
                }
                _ => {
                    let t: f64 = rng.random_range(-1.0..1.0);
                    let s = (1.0 - t * t).sqrt();
                    let (sp, cp) = rng.random_range(0.0..std::f64::consts::TAU).sin_cos();
                    pt[0] = z[0] + r * s * cp;
                    pt[1] = z[1] + r * s * sp;
                    pt[2] = z[2] + r * t;
                }
            }
            let v = phantom.eval(&pt);
            sum += v;
            sumsq += v * v;
        }
        let nn = samples as f64;
        let mean = sum / nn;
        let var = ((sumsq - nn * mean * mean) / (nn - 1.0)).max(0.0);
        Ok((area * mean, area * (var / nn).sqrt()))
    }

    /// Adds zero-mean Gaussian noise with standard deviation
    /// `rel_sigma * max|data|` to every sinogram cell (Box-Muller).
    pub fn add_gaussian_noise(sino: &mut Sinogram, rel_sigma: f64, seed: u64) {
        let scale = sino.data.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let sigma = rel_sigma * scale;
        if sigma == 0.0 {
            return;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut i = 0;
        while i < sino.data.len() {
            let u1: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
            let u2: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            let mag = (-2.0 * u1.ln()).sqrt();
            sino.data[i] += sigma * mag * u2.cos();
            i += 1;
            if i < sino.data.len() {
                sino.data[i] += sigma * mag * u2.sin();
                i += 1;
            }
        }
    }
}

#[cfg(feature = "mc")]
pub use mc::{add_gaussian_noise, mc_sphere_integral};

/// Angular node budget for one sphere. Indicator phantoms make the
/// integrand only piecewise-smooth, so the count grows with `r / h_r` to
/// keep quadrature error below the filter-stage truncation error.
pub fn node_budget(n: usize, r: f64, h_r: f64) -> usize {
    let scaled = (40.0 * r / h_r).ceil() as usize;
    match n {
        2 => scaled.max(64),
        _ => scaled.max(4096),
    }
}

/// Samples `R(f)` on centers from the surface's acquisition patch and the
/// given radius grid. Columns are computed independently (in parallel with
/// the `parallel` feature); the result is deterministic either way.
pub fn forward_sinogram(
    phantom: &Phantom,
    surface: &Surface,
    center_counts: &[usize],
    radii: &RadiusGrid,
) -> Result<Sinogram> {
    phantom.validate_inside(surface)?;
    let patch = surface.effective_patch()?;
    let centers = surface.surface_quadrature(&patch, center_counts)?;
    let n = surface.n;
    let nr = radii.count;
    let mut data = vec![0.0; centers.len() * nr];

    let columns: Vec<Result<Vec<f64>>> = crate::map_indexed(centers.len(), |j| {
        let z = &centers.nodes[j * n..(j + 1) * n];
        let mut col = vec![0.0; nr];
        for (i, slot) in col.iter_mut().enumerate() {
            let r = radii.value(i);
            *slot = sphere_integral(phantom, z, r, node_budget(n, r, radii.step))?;
        }
        Ok(col)
    });
    for (j, col) in columns.into_iter().enumerate() {
        data[j * nr..(j + 1) * nr].copy_from_slice(&col?);
    }

    Ok(Sinogram {
        surface: surface.clone(),
        centers,
        radii: radii.clone(),
        data,
        phantom: Some(phantom.clone()),
    })
}

/// Nodes and weights of `p`-point Gauss-Legendre quadrature on [-1, 1],
/// by Newton iteration on the Legendre recurrence.
pub fn gauss_legendre(p: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; p];
    let mut weights = vec![0.0; p];
    for i in 0..(p + 1) / 2 {
        // Chebyshev-like initial guess for the i-th root.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (p as f64 + 0.5)).cos();
        for _ in 0..100 {
            // Legendre P_p(x) and its derivative via the three-term recurrence.
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=p {
                let pk = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = pk;
            }
            let dp = p as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (mut p0, mut p1) = (1.0, x);
        for k in 2..=p {
            let pk = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
            p0 = p1;
            p1 = pk;
        }
        let dp = p as f64 * (x * p1 - p0) / (x * x - 1.0);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[p - 1 - i] = x;
        weights[i] = w;
        weights[p - 1 - i] = w;
    }
    if p % 2 == 1 {
        nodes[p / 2] = 0.0;
    }
    (nodes, weights)
}
