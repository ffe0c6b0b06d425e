//! Observation surfaces: quadric hypersurfaces with normals, chart
//! parametrizations, surface quadrature, containment tests, and the
//! ray-surface intersection data consumed by the inversion and symbol
//! machinery.
//!
//! Supported kinds:
//! * ellipsoid     `sum_i omega_i^2 z_i^2 = 1`, interior domain;
//! * paraboloid    `sum_{i<n} omega_i^2 z_i^2 = z_n`, epigraph domain;
//! * hyperplane    `z_n = 0`, upper half-space domain;
//! * general quadric `sum_{j<=m} omega_j^2 z_j^2 = sum_{j>m} omega_j z_j + omega_{n+1}`.
//!
//! All values are immutable after construction and every operation is a
//! pure function, so surfaces can be shared freely across workers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vecmath::{add_scaled, dot, norm};

/// Relative tolerance for "is this point on the surface".
pub const ON_SURFACE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurfaceKind {
    Ellipsoid,
    EllipticParaboloid,
    Hyperplane,
    GeneralQuadric,
}

/// Axis-aligned box in chart parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Patch {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Patch {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(Error::argument("patch lo/hi must be non-empty, same length"));
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a < b)) {
            return Err(Error::argument("patch must satisfy lo < hi on every axis"));
        }
        Ok(Patch { lo, hi })
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, u: &[f64]) -> bool {
        u.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(v, (a, b))| *v >= *a && *v <= *b)
    }
}

/// Quadratic `a t^2 + b t + c` obtained by restricting the surface
/// equation to the ray `x + t xi`, kept in coefficient form:
/// `a = sum_i quad[i] xi_i^2`, `b = sum_i lin[i] xi_i`, `c = constant`.
#[derive(Debug, Clone)]
pub struct RayQuadratic {
    pub quad: Vec<f64>,
    pub lin: Vec<f64>,
    pub constant: f64,
}

impl RayQuadratic {
    pub fn coefficients(&self, xi: &[f64]) -> (f64, f64, f64) {
        let a = self.quad.iter().zip(xi).map(|(q, v)| q * v * v).sum();
        let b = self.lin.iter().zip(xi).map(|(l, v)| l * v).sum();
        (a, b, self.constant)
    }
}

/// Intersections of the line `x + t xi` with the surface. For convex
/// quadrics both roots exist with `t_plus > 0 > t_minus`; the hyperplane
/// meets the line once, in the `t_plus` slot (with either sign).
#[derive(Debug, Clone)]
pub struct ChordHit {
    pub t_plus: f64,
    pub t_minus: Option<f64>,
    pub z_plus: Vec<f64>,
    pub z_minus: Option<Vec<f64>>,
    /// Quadratic discriminant: the ellipse's reduced form
    /// `(1-||x||^2)||xi||^2 + <x,xi>^2` for the ellipsoid, `b^2 - 4ac`
    /// otherwise (`xi_n^2` for the hyperplane, where no quadratic exists).
    pub discriminant: f64,
}

/// Surface quadrature: nodes on S with weights approximating the surface
/// measure, produced by a composite midpoint rule in chart parameters.
#[derive(Debug, Clone)]
pub struct SurfaceQuadrature {
    /// Chart parameters, flattened with stride `chart_dim`.
    pub params: Vec<f64>,
    /// Points on S, flattened with stride `n`.
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub patch: Patch,
    pub counts: Vec<usize>,
}

impl SurfaceQuadrature {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Surface {
    pub kind: SurfaceKind,
    pub n: usize,
    pub omega: Vec<f64>,
    /// Split index of the general quadric: coordinates `1..=m` are
    /// quadratic, the rest linear.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    /// Acquisition patch in chart parameters (defaults to the full chart
    /// for the ellipsoid; required for unbounded surfaces).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub patch: Option<Patch>,
}

impl Surface {
    pub fn ellipsoid(omega: Vec<f64>) -> Result<Self> {
        let n = omega.len();
        if n < 2 {
            return Err(Error::argument("ellipsoid needs n >= 2 weights"));
        }
        if omega.iter().any(|w| !(*w > 0.0)) {
            return Err(Error::argument("ellipsoid weights must be positive"));
        }
        Ok(Surface { kind: SurfaceKind::Ellipsoid, n, omega, m: None, patch: None })
    }

    /// Circle/sphere of the given radius centered at the origin.
    pub fn sphere(n: usize, radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::argument("radius must be positive"));
        }
        Surface::ellipsoid(vec![1.0 / radius; n])
    }

    pub fn elliptic_paraboloid(n: usize, omega: Vec<f64>) -> Result<Self> {
        if n < 2 || omega.len() != n - 1 {
            return Err(Error::argument("paraboloid needs n-1 weights, n >= 2"));
        }
        if omega.iter().any(|w| !(*w > 0.0)) {
            return Err(Error::argument("paraboloid weights must be positive"));
        }
        Ok(Surface { kind: SurfaceKind::EllipticParaboloid, n, omega, m: None, patch: None })
    }

    pub fn hyperplane(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::argument("hyperplane needs n >= 2"));
        }
        Ok(Surface { kind: SurfaceKind::Hyperplane, n, omega: Vec::new(), m: None, patch: None })
    }

    pub fn general_quadric(n: usize, omega: Vec<f64>, m: usize) -> Result<Self> {
        if n < 2 || omega.len() != n + 1 {
            return Err(Error::argument("general quadric needs n+1 weights"));
        }
        if m < 1 || m >= n {
            return Err(Error::argument("split index must satisfy 1 <= m < n"));
        }
        if omega.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::argument("general quadric weights must be >= 0"));
        }
        if omega[..m].iter().all(|w| *w == 0.0) {
            return Err(Error::argument("quadratic weight block must be nonzero"));
        }
        if omega[m..n].iter().all(|w| *w == 0.0) {
            return Err(Error::argument("linear weight block must be nonzero"));
        }
        Ok(Surface { kind: SurfaceKind::GeneralQuadric, n, omega, m: Some(m), patch: None })
    }

    pub fn with_patch(mut self, patch: Patch) -> Result<Self> {
        if patch.dim() != self.chart_dim() {
            return Err(Error::argument("patch dimension must equal chart dimension"));
        }
        self.patch = Some(patch);
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            SurfaceKind::Ellipsoid => Surface::ellipsoid(self.omega.clone()).map(|_| ()),
            SurfaceKind::EllipticParaboloid => {
                Surface::elliptic_paraboloid(self.n, self.omega.clone()).map(|_| ())
            }
            SurfaceKind::Hyperplane => Surface::hyperplane(self.n).map(|_| ()),
            SurfaceKind::GeneralQuadric => {
                let m = self.m.ok_or_else(|| Error::argument("general quadric needs m"))?;
                Surface::general_quadric(self.n, self.omega.clone(), m).map(|_| ())
            }
        }?;
        if let Some(p) = &self.patch {
            if p.dim() != self.chart_dim() {
                return Err(Error::argument("patch dimension must equal chart dimension"));
            }
        }
        Ok(())
    }

    pub fn chart_dim(&self) -> usize {
        self.n - 1
    }

    /// Signed quadric value `Q(z)`; the domain is `Q < 0`.
    pub fn quadric_value(&self, z: &[f64]) -> f64 {
        match self.kind {
            SurfaceKind::Ellipsoid => {
                self.omega.iter().zip(z).map(|(w, v)| w * w * v * v).sum::<f64>() - 1.0
            }
            SurfaceKind::EllipticParaboloid => {
                let lateral: f64 =
                    self.omega.iter().zip(z).map(|(w, v)| w * w * v * v).sum();
                lateral - z[self.n - 1]
            }
            SurfaceKind::Hyperplane => -z[self.n - 1],
            SurfaceKind::GeneralQuadric => {
                let m = self.m.unwrap();
                let quad: f64 = (0..m).map(|j| self.omega[j].powi(2) * z[j] * z[j]).sum();
                let lin: f64 = (m..self.n).map(|j| self.omega[j] * z[j]).sum();
                quad - lin - self.omega[self.n]
            }
        }
    }

    /// Magnitude scale of the quadric equation at `z`, for relative
    /// residual checks.
    fn quadric_scale(&self, z: &[f64]) -> f64 {
        match self.kind {
            SurfaceKind::Ellipsoid => {
                1.0 + self.omega.iter().zip(z).map(|(w, v)| (w * w * v * v).abs()).sum::<f64>()
            }
            SurfaceKind::EllipticParaboloid => {
                1.0 + self
                    .omega
                    .iter()
                    .zip(z)
                    .map(|(w, v)| (w * w * v * v).abs())
                    .sum::<f64>()
                    + z[self.n - 1].abs()
            }
            SurfaceKind::Hyperplane => 1.0 + norm(z),
            SurfaceKind::GeneralQuadric => {
                let m = self.m.unwrap();
                1.0 + (0..m).map(|j| (self.omega[j].powi(2) * z[j] * z[j]).abs()).sum::<f64>()
                    + (m..self.n).map(|j| (self.omega[j] * z[j]).abs()).sum::<f64>()
                    + self.omega[self.n].abs()
            }
        }
    }

    pub fn on_surface(&self, z: &[f64]) -> bool {
        self.quadric_value(z).abs() <= ON_SURFACE_TOL * self.quadric_scale(z)
    }

    /// Strict interior membership; boundary points classify as outside.
    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.n && self.quadric_value(x) < 0.0
    }

    /// Outward unit normal at a surface point (pointing away from the
    /// domain). For the hyperplane this is the constant `-e_n`.
    pub fn outward_normal(&self, z: &[f64]) -> Result<Vec<f64>> {
        if z.len() != self.n {
            return Err(Error::argument("point dimension mismatch"));
        }
        if !self.on_surface(z) {
            return Err(Error::domain(format!(
                "point not on surface: residual {:.3e}",
                self.quadric_value(z)
            )));
        }
        let mut g = vec![0.0; self.n];
        match self.kind {
            SurfaceKind::Ellipsoid => {
                for i in 0..self.n {
                    g[i] = 2.0 * self.omega[i].powi(2) * z[i];
                }
            }
            SurfaceKind::EllipticParaboloid => {
                for i in 0..self.n - 1 {
                    g[i] = 2.0 * self.omega[i].powi(2) * z[i];
                }
                g[self.n - 1] = -1.0;
            }
            SurfaceKind::Hyperplane => {
                g[self.n - 1] = -1.0;
            }
            SurfaceKind::GeneralQuadric => {
                let m = self.m.unwrap();
                for j in 0..m {
                    g[j] = 2.0 * self.omega[j].powi(2) * z[j];
                }
                for j in m..self.n {
                    g[j] = -self.omega[j];
                }
            }
        }
        crate::vecmath::normalize(&mut g);
        Ok(g)
    }

    /// Coefficients of the quadratic in `t` from restricting the surface
    /// equation to the ray `x + t xi`, for a fixed base point `x`.
    pub fn ray_quadratic(&self, x: &[f64]) -> Result<RayQuadratic> {
        if x.len() != self.n {
            return Err(Error::argument("point dimension mismatch"));
        }
        let mut quad = vec![0.0; self.n];
        let mut lin = vec![0.0; self.n];
        match self.kind {
            SurfaceKind::Ellipsoid => {
                for i in 0..self.n {
                    let w2 = self.omega[i] * self.omega[i];
                    quad[i] = w2;
                    lin[i] = 2.0 * w2 * x[i];
                }
            }
            SurfaceKind::EllipticParaboloid => {
                for i in 0..self.n - 1 {
                    let w2 = self.omega[i] * self.omega[i];
                    quad[i] = w2;
                    lin[i] = 2.0 * w2 * x[i];
                }
                lin[self.n - 1] = -1.0;
            }
            SurfaceKind::GeneralQuadric => {
                let m = self.m.unwrap();
                for j in 0..m {
                    let w2 = self.omega[j] * self.omega[j];
                    quad[j] = w2;
                    lin[j] = 2.0 * w2 * x[j];
                }
                for j in m..self.n {
                    lin[j] = -self.omega[j];
                }
            }
            SurfaceKind::Hyperplane => {
                return Err(Error::Unsupported(
                    "hyperplane has no ray quadratic; the intersection is linear".into(),
                ))
            }
        }
        Ok(RayQuadratic { quad, lin, constant: self.quadric_value(x) })
    }

    /// Both intersections of the line through `x` in direction `xi` with
    /// the surface (one for the hyperplane). Requires `x` strictly inside
    /// the domain and `xi` non-tangential.
    pub fn ray_intersections(&self, x: &[f64], xi: &[f64]) -> Result<ChordHit> {
        if x.len() != self.n || xi.len() != self.n {
            return Err(Error::argument("dimension mismatch"));
        }
        let xi_norm2 = dot(xi, xi);
        if !(xi_norm2 > 0.0) {
            return Err(Error::argument("direction must be nonzero"));
        }
        if !self.contains(x) {
            return Err(Error::domain("base point must lie strictly inside the domain"));
        }

        if self.kind == SurfaceKind::Hyperplane {
            let xi_n = xi[self.n - 1];
            if xi_n.abs() < 1e-14 * xi_norm2.sqrt() {
                return Err(Error::tangential("direction parallel to the hyperplane"));
            }
            let t = -x[self.n - 1] / xi_n;
            let mut z = add_scaled(x, t, xi);
            z[self.n - 1] = 0.0;
            return Ok(ChordHit {
                t_plus: t,
                t_minus: None,
                z_plus: z,
                z_minus: None,
                discriminant: xi_n * xi_n,
            });
        }

        let rq = self.ray_quadratic(x)?;
        let (a, b, c) = rq.coefficients(xi);
        if a < 1e-14 * xi_norm2 {
            return Err(Error::tangential(
                "direction lies in the kernel of the quadratic block",
            ));
        }
        let disc = b * b - 4.0 * a * c;
        if !(disc > 0.0) {
            return Err(Error::Numeric(format!(
                "non-positive discriminant {disc:.3e} for interior base point"
            )));
        }
        let sq = disc.sqrt();
        // Stable root pair: compute the larger-magnitude root first.
        let (r1, r2) = if b >= 0.0 {
            let q = -0.5 * (b + sq);
            (q / a, c / q)
        } else {
            let q = -0.5 * (b - sq);
            (c / q, q / a)
        };
        let (t_minus, t_plus) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
        debug_assert!(t_plus > 0.0 && t_minus < 0.0);

        let discriminant =
            if self.kind == SurfaceKind::Ellipsoid { disc / 4.0 } else { disc };
        Ok(ChordHit {
            t_plus,
            t_minus: Some(t_minus),
            z_plus: add_scaled(x, t_plus, xi),
            z_minus: Some(add_scaled(x, t_minus, xi)),
            discriminant,
        })
    }

    /// Point on S for the given chart parameters.
    ///
    /// Charts: angular for the ellipsoid (`theta` in 2-d; azimuth x polar
    /// in 3-d), graph coordinates over the lateral variables for the
    /// paraboloid and hyperplane.
    pub fn chart_point(&self, u: &[f64]) -> Result<Vec<f64>> {
        if u.len() != self.chart_dim() {
            return Err(Error::argument("chart parameter dimension mismatch"));
        }
        match self.kind {
            SurfaceKind::Ellipsoid => match self.n {
                2 => Ok(vec![u[0].cos() / self.omega[0], u[0].sin() / self.omega[1]]),
                3 => {
                    let (phi, psi) = (u[0], u[1]);
                    Ok(vec![
                        psi.sin() * phi.cos() / self.omega[0],
                        psi.sin() * phi.sin() / self.omega[1],
                        psi.cos() / self.omega[2],
                    ])
                }
                _ => Err(Error::Unsupported("ellipsoid charts implemented for n <= 3".into())),
            },
            SurfaceKind::EllipticParaboloid => {
                let mut z = u.to_vec();
                let h: f64 = self.omega.iter().zip(u).map(|(w, v)| w * w * v * v).sum();
                z.push(h);
                Ok(z)
            }
            SurfaceKind::Hyperplane => {
                let mut z = u.to_vec();
                z.push(0.0);
                Ok(z)
            }
            SurfaceKind::GeneralQuadric => {
                Err(Error::Unsupported("general quadric has no chart".into()))
            }
        }
    }

    /// Chart parameters of a surface point (inverse of `chart_point`).
    pub fn chart_params(&self, z: &[f64]) -> Result<Vec<f64>> {
        match self.kind {
            SurfaceKind::Ellipsoid => match self.n {
                2 => Ok(vec![(z[1] * self.omega[1]).atan2(z[0] * self.omega[0])]),
                3 => {
                    let phi = (z[1] * self.omega[1]).atan2(z[0] * self.omega[0]);
                    let psi = (z[2] * self.omega[2]).clamp(-1.0, 1.0).acos();
                    Ok(vec![phi, psi])
                }
                _ => Err(Error::Unsupported("ellipsoid charts implemented for n <= 3".into())),
            },
            SurfaceKind::EllipticParaboloid | SurfaceKind::Hyperplane => {
                Ok(z[..self.n - 1].to_vec())
            }
            SurfaceKind::GeneralQuadric => {
                Err(Error::Unsupported("general quadric has no chart".into()))
            }
        }
    }

    /// Period of a chart axis, if the chart wraps around it.
    pub fn chart_period(&self, axis: usize) -> Option<f64> {
        match (self.kind, self.n, axis) {
            (SurfaceKind::Ellipsoid, 2, 0) => Some(std::f64::consts::TAU),
            (SurfaceKind::Ellipsoid, 3, 0) => Some(std::f64::consts::TAU),
            _ => None,
        }
    }

    /// Metric area factor of the chart at parameters `u` (the Jacobian
    /// folding `du` into the surface measure).
    pub fn chart_area_factor(&self, u: &[f64]) -> Result<f64> {
        match self.kind {
            SurfaceKind::Ellipsoid => match self.n {
                2 => {
                    let (s, c) = u[0].sin_cos();
                    Ok(((s / self.omega[0]).powi(2) + (c / self.omega[1]).powi(2)).sqrt())
                }
                3 => {
                    let (phi, psi) = (u[0], u[1]);
                    let (sp, cp) = phi.sin_cos();
                    let (ss, cs) = psi.sin_cos();
                    let du = [-ss * sp / self.omega[0], ss * cp / self.omega[1], 0.0];
                    let dv = [cs * cp / self.omega[0], cs * sp / self.omega[1], -ss / self.omega[2]];
                    let cx = du[1] * dv[2] - du[2] * dv[1];
                    let cy = du[2] * dv[0] - du[0] * dv[2];
                    let cz = du[0] * dv[1] - du[1] * dv[0];
                    Ok((cx * cx + cy * cy + cz * cz).sqrt())
                }
                _ => Err(Error::Unsupported("ellipsoid charts implemented for n <= 3".into())),
            },
            SurfaceKind::EllipticParaboloid => {
                let grad2: f64 =
                    self.omega.iter().zip(u).map(|(w, v)| (2.0 * w * w * v).powi(2)).sum();
                Ok((1.0 + grad2).sqrt())
            }
            SurfaceKind::Hyperplane => Ok(1.0),
            SurfaceKind::GeneralQuadric => {
                Err(Error::Unsupported("general quadric has no chart".into()))
            }
        }
    }

    /// Full chart domain, where one exists (the closed ellipsoid charts).
    pub fn default_patch(&self) -> Option<Patch> {
        match (self.kind, self.n) {
            (SurfaceKind::Ellipsoid, 2) => {
                Some(Patch { lo: vec![0.0], hi: vec![std::f64::consts::TAU] })
            }
            (SurfaceKind::Ellipsoid, 3) => Some(Patch {
                lo: vec![0.0, 0.0],
                hi: vec![std::f64::consts::TAU, std::f64::consts::PI],
            }),
            _ => None,
        }
    }

    /// Patch used for acquisition: the stored one, or the full chart for
    /// closed surfaces.
    pub fn effective_patch(&self) -> Result<Patch> {
        if let Some(p) = &self.patch {
            return Ok(p.clone());
        }
        self.default_patch().ok_or_else(|| {
            Error::argument("unbounded surface needs an explicit acquisition patch")
        })
    }

    /// Composite midpoint quadrature for the surface measure over a chart
    /// patch. Deterministic for fixed inputs.
    pub fn surface_quadrature(
        &self,
        patch: &Patch,
        resolution: &[usize],
    ) -> Result<SurfaceQuadrature> {
        let d = self.chart_dim();
        if patch.dim() != d || resolution.len() != d {
            return Err(Error::argument("patch/resolution dimension mismatch"));
        }
        if resolution.iter().any(|&r| r == 0) {
            return Err(Error::argument("resolution must be positive on every axis"));
        }
        let steps: Vec<f64> = (0..d)
            .map(|i| (patch.hi[i] - patch.lo[i]) / resolution[i] as f64)
            .collect();
        let cell = steps.iter().product::<f64>();
        let total: usize = resolution.iter().product();

        let mut params = Vec::with_capacity(total * d);
        let mut nodes = Vec::with_capacity(total * self.n);
        let mut weights = Vec::with_capacity(total);
        let mut idx = vec![0usize; d];
        let mut u = vec![0.0; d];
        for _ in 0..total {
            for i in 0..d {
                u[i] = patch.lo[i] + (idx[i] as f64 + 0.5) * steps[i];
            }
            let z = self.chart_point(&u)?;
            let w = self.chart_area_factor(&u)? * cell;
            params.extend_from_slice(&u);
            nodes.extend_from_slice(&z);
            weights.push(w);
            // odometer increment, last axis fastest
            for i in (0..d).rev() {
                idx[i] += 1;
                if idx[i] < resolution[i] {
                    break;
                }
                idx[i] = 0;
            }
        }
        Ok(SurfaceQuadrature {
            params,
            nodes,
            weights,
            patch: patch.clone(),
            counts: resolution.to_vec(),
        })
    }
}
