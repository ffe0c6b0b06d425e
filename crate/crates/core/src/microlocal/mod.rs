//! Partial-data machinery and the symbol laboratory.
//!
//! Smooth spatial/temporal cutoffs model limited acquisition; covector
//! classification decides membership in the visible cones (seen along
//! `+xi`, along `-xi`, or either) and evaluates the principal symbol of
//! the partial-data inversion. The symbol laboratory evaluates the
//! correction symbols `J_k` two independent ways — power sums of the
//! ray-intersection roots, and an exact binomial expansion into a
//! polynomial in `xi` — and verifies by iterated Laplacian (symbolic and
//! finite-difference) that the corrections vanish on quadric surfaces.

pub mod poly;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::Sinogram;
use crate::geometry::{Patch, Surface, SurfaceKind};
use crate::vecmath::{dist, norm};
use poly::Poly;

/// Smooth data window: spatial cutoff over chart parameters (plateau
/// `gamma0`, support `gamma`) and temporal cutoff over radii (plateau up
/// to `r`, taper width `eps`). `None`/infinite fields mean "no cutoff".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutoffSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma0: Option<Patch>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<Patch>,
    /// Smoothstep degree of both tapers: 1 (linear), 3 (cubic) or 5 (quintic).
    #[serde(default = "default_taper_degree")]
    pub taper_degree: u32,
    /// Largest radius with full weight; `eta = 1` on `r <= r`.
    #[serde(default = "default_radius")]
    pub r: f64,
    /// Temporal taper width; `eta = 0` on `r >= r + eps`.
    #[serde(default)]
    pub eps: f64,
}

fn default_taper_degree() -> u32 {
    5
}

fn default_radius() -> f64 {
    f64::INFINITY
}

fn smoothstep(t: f64, degree: u32) -> f64 {
    let t = t.clamp(0.0, 1.0);
    match degree {
        1 => t,
        3 => t * t * (3.0 - 2.0 * t),
        _ => t * t * t * (10.0 + t * (-15.0 + 6.0 * t)),
    }
}

impl Default for CutoffSpec {
    fn default() -> Self {
        CutoffSpec::full()
    }
}

impl CutoffSpec {
    /// No cutoff at all: chi = eta = 1 everywhere.
    pub fn full() -> Self {
        CutoffSpec { gamma0: None, gamma: None, taper_degree: 5, r: f64::INFINITY, eps: 0.0 }
    }

    pub fn validate(&self, surface: &Surface) -> Result<()> {
        match (&self.gamma0, &self.gamma) {
            (None, None) => {}
            (Some(g0), Some(g)) => {
                if g0.dim() != surface.chart_dim() || g.dim() != surface.chart_dim() {
                    return Err(Error::argument("cutoff boxes must match the chart dimension"));
                }
                for i in 0..g0.dim() {
                    if g.lo[i] > g0.lo[i] || g0.hi[i] > g.hi[i] {
                        return Err(Error::argument("gamma0 must sit inside gamma"));
                    }
                }
            }
            (Some(g0), None) => {
                if g0.dim() != surface.chart_dim() {
                    return Err(Error::argument("cutoff boxes must match the chart dimension"));
                }
            }
            (None, Some(_)) => {
                return Err(Error::argument("gamma without gamma0 is meaningless"));
            }
        }
        if !(self.r > 0.0) || self.eps < 0.0 {
            return Err(Error::argument("temporal cutoff needs r > 0, eps >= 0"));
        }
        Ok(())
    }

    fn support_box(&self) -> Option<&Patch> {
        self.gamma.as_ref().or(self.gamma0.as_ref())
    }

    /// One-axis profile: 1 on the plateau, 0 outside the support, a
    /// smoothstep between. Zero-width margins degenerate to a sharp step.
    fn axis_profile(&self, v: f64, p_lo: f64, p_hi: f64, s_lo: f64, s_hi: f64) -> f64 {
        if v >= p_lo && v <= p_hi {
            return 1.0;
        }
        if v < s_lo || v > s_hi {
            return 0.0;
        }
        if v < p_lo {
            smoothstep((v - s_lo) / (p_lo - s_lo), self.taper_degree)
        } else {
            smoothstep((s_hi - v) / (s_hi - p_hi), self.taper_degree)
        }
    }

    /// Spatial weight `chi` at chart parameters `u`, wrapping periodic axes.
    pub fn spatial_weight(&self, surface: &Surface, u: &[f64]) -> f64 {
        let Some(g0) = &self.gamma0 else { return 1.0 };
        let g = self.support_box().unwrap();
        let mut w = 1.0;
        for i in 0..u.len() {
            let axis = |v: f64| self.axis_profile(v, g0.lo[i], g0.hi[i], g.lo[i], g.hi[i]);
            let wi = match surface.chart_period(i) {
                Some(p) => axis(u[i]).max(axis(u[i] - p)).max(axis(u[i] + p)),
                None => axis(u[i]),
            };
            w *= wi;
            if w == 0.0 {
                break;
            }
        }
        w
    }

    /// Closed membership of chart parameters in the plateau `gamma0`.
    pub fn plateau_contains(&self, surface: &Surface, u: &[f64]) -> bool {
        let Some(g0) = &self.gamma0 else { return true };
        (0..u.len()).all(|i| {
            let inside =
                |v: f64| v >= g0.lo[i] && v <= g0.hi[i];
            match surface.chart_period(i) {
                Some(p) => inside(u[i]) || inside(u[i] - p) || inside(u[i] + p),
                None => inside(u[i]),
            }
        })
    }

    /// Temporal weight `eta` at radius `r`: 1 up to the plateau radius,
    /// smoothstep down to 0 across the taper band, monotone in between.
    pub fn temporal_weight(&self, radius: f64) -> f64 {
        if radius <= self.r {
            1.0
        } else if self.eps == 0.0 || radius >= self.r + self.eps {
            0.0
        } else {
            smoothstep((self.r + self.eps - radius) / self.eps, self.taper_degree)
        }
    }

    /// Visibility radius test (points at exactly `r` classify as visible).
    fn within_radius(&self, d: f64) -> bool {
        d <= self.r
    }
}

/// Multiplies sinogram data by `chi(z_j) eta(r_i)` elementwise.
pub fn apply_cutoffs(sino: &Sinogram, cut: &CutoffSpec) -> Result<Sinogram> {
    cut.validate(&sino.surface)?;
    if cut.gamma0.is_some() && sino.surface.kind == SurfaceKind::GeneralQuadric {
        return Err(Error::Unsupported("spatial cutoff needs a chart".into()));
    }
    let d = sino.surface.chart_dim();
    let nr = sino.radii.count;
    let eta: Vec<f64> = sino.radii.values().map(|r| cut.temporal_weight(r)).collect();
    let mut out = sino.clone();
    for j in 0..sino.n_centers() {
        let u = &sino.centers.params[j * d..(j + 1) * d];
        let chi = cut.spatial_weight(&sino.surface, u);
        for i in 0..nr {
            out.data[j * nr + i] = sino.data[j * nr + i] * chi * eta[i];
        }
    }
    Ok(out)
}

/// Classification of one covector `(x, xi)` against the data window.
#[derive(Debug, Clone, Serialize)]
pub struct CovectorProbe {
    pub x: Vec<f64>,
    pub xi: Vec<f64>,
    /// Seen along `+xi` (intersection `z_+` in the plateau, within radius).
    pub in_a_plus: bool,
    /// Seen along `-xi`; always `false` for the single-hit hyperplane.
    pub in_a_minus: bool,
    /// Visible at all: the union of the two.
    pub in_a: bool,
    pub a_plus: f64,
    pub a_minus: Option<f64>,
    pub eta_plus: f64,
    pub eta_minus: Option<f64>,
    pub dist_plus: f64,
    pub dist_minus: Option<f64>,
    /// Principal symbol of the partial-data inversion at `(x, xi)`.
    pub sigma0: f64,
}

/// Classifies a covector: which of the two ray intersections carry data,
/// the cutoff values there, and the principal symbol.
pub fn classify_covector(
    surface: &Surface,
    cut: &CutoffSpec,
    x: &[f64],
    xi: &[f64],
) -> Result<CovectorProbe> {
    cut.validate(surface)?;
    let hit = surface.ray_intersections(x, xi)?;
    let needs_chart = cut.gamma0.is_some();

    let membership = |z: &[f64]| -> Result<(bool, f64)> {
        if !needs_chart {
            return Ok((true, 1.0));
        }
        let u = surface.chart_params(z)?;
        Ok((cut.plateau_contains(surface, &u), cut.spatial_weight(surface, &u)))
    };

    if surface.kind == SurfaceKind::Hyperplane {
        let d = dist(x, &hit.z_plus);
        let (in_plateau, a) = membership(&hit.z_plus)?;
        let eta = cut.temporal_weight(d);
        let in_a = in_plateau && cut.within_radius(d);
        return Ok(CovectorProbe {
            x: x.to_vec(),
            xi: xi.to_vec(),
            in_a_plus: in_a,
            in_a_minus: false,
            in_a,
            a_plus: a,
            a_minus: None,
            eta_plus: eta,
            eta_minus: None,
            dist_plus: d,
            dist_minus: None,
            sigma0: a * eta,
        });
    }

    let z_minus = hit.z_minus.as_ref().expect("convex quadric has two intersections");
    let d_plus = dist(x, &hit.z_plus);
    let d_minus = dist(x, z_minus);
    let (plus_in_plateau, a_plus) = membership(&hit.z_plus)?;
    let (minus_in_plateau, a_minus) = membership(z_minus)?;
    let eta_plus = cut.temporal_weight(d_plus);
    let eta_minus = cut.temporal_weight(d_minus);
    let in_a_plus = plus_in_plateau && cut.within_radius(d_plus);
    let in_a_minus = minus_in_plateau && cut.within_radius(d_minus);
    Ok(CovectorProbe {
        x: x.to_vec(),
        xi: xi.to_vec(),
        in_a_plus,
        in_a_minus,
        in_a: in_a_plus || in_a_minus,
        a_plus,
        a_minus: Some(a_minus),
        eta_plus,
        eta_minus: Some(eta_minus),
        dist_plus: d_plus,
        dist_minus: Some(d_minus),
        sigma0: 0.5 * (eta_plus * a_plus + eta_minus * a_minus),
    })
}

/// Principal symbol of the partial-data inversion at `(x, xi)`.
pub fn principal_symbol(
    surface: &Surface,
    cut: &CutoffSpec,
    x: &[f64],
    xi: &[f64],
) -> Result<f64> {
    Ok(classify_covector(surface, cut, x, xi)?.sigma0)
}

/// Visible-zone diagnostic over a grid: per (cell, direction) visibility
/// and the principal-symbol field. Directions that are excluded for the
/// surface are flagged, not fatal.
#[derive(Debug, Clone)]
pub struct VisibleZoneMask {
    pub grid: crate::backprojection::GridSpec,
    pub directions: Vec<Vec<f64>>,
    /// Direction-major: `sigma0[d * cells + idx]`.
    pub sigma0: Vec<f64>,
    pub visible: Vec<bool>,
    pub flagged: Vec<bool>,
}

pub fn visible_zone_mask(
    surface: &Surface,
    cut: &CutoffSpec,
    grid: &crate::backprojection::GridSpec,
    directions: &[Vec<f64>],
) -> Result<VisibleZoneMask> {
    cut.validate(surface)?;
    let cells = grid.len();
    let n = surface.n;
    let per_dir: Vec<Vec<(f64, bool, bool)>> = crate::map_indexed(directions.len(), |d| {
        let xi = &directions[d];
        let mut row = Vec::with_capacity(cells);
        let mut x = vec![0.0; n];
        for idx in 0..cells {
            grid.point_of_index(idx, &mut x);
            match classify_covector(surface, cut, &x, xi) {
                Ok(p) => row.push((p.sigma0, p.in_a, false)),
                Err(_) => row.push((0.0, false, true)),
            }
        }
        row
    });
    let mut sigma0 = Vec::with_capacity(cells * directions.len());
    let mut visible = Vec::with_capacity(cells * directions.len());
    let mut flagged = Vec::with_capacity(cells * directions.len());
    for row in per_dir {
        for (s, v, t) in row {
            sigma0.push(s);
            visible.push(v);
            flagged.push(t);
        }
    }
    Ok(VisibleZoneMask {
        grid: grid.clone(),
        directions: directions.to_vec(),
        sigma0,
        visible,
        flagged,
    })
}

/// Correction symbol of order `k` evaluated from the ray intersections:
/// `t_+^{-k} + (-1)^k |t_-|^{-k}`. Needs both intersections.
pub fn correction_symbol(surface: &Surface, x: &[f64], xi: &[f64], k: u32) -> Result<f64> {
    let hit = surface.ray_intersections(x, xi)?;
    let t_minus = hit.t_minus.ok_or_else(|| {
        Error::Unsupported("correction symbol needs both ray intersections".into())
    })?;
    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
    Ok(hit.t_plus.powi(-(k as i32)) + sign * t_minus.abs().powi(-(k as i32)))
}

/// Cutoff-weighted correction symbol (the diagonal `y = x` value): each
/// branch multiplied by its cutoff weights.
pub fn weighted_correction_symbol(
    surface: &Surface,
    cut: &CutoffSpec,
    x: &[f64],
    xi: &[f64],
    k: u32,
) -> Result<f64> {
    if surface.kind == SurfaceKind::Hyperplane {
        // Plane branch: correction symbols carry xi_n^k, not a root power sum.
        let p = classify_covector(surface, cut, x, xi)?;
        return Ok(p.a_plus * p.eta_plus * xi[surface.n - 1].powi(k as i32));
    }
    let p = classify_covector(surface, cut, x, xi)?;
    let hit = surface.ray_intersections(x, xi)?;
    let t_minus = hit.t_minus.expect("convex quadric has two intersections");
    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
    Ok(p.a_plus * p.eta_plus * hit.t_plus.powi(-(k as i32))
        + sign * p.a_minus.unwrap() * p.eta_minus.unwrap() * t_minus.abs().powi(-(k as i32)))
}

/// Exact polynomial form of the correction symbol on a quadric surface.
///
/// With `a t^2 + b t + c` the ray-restricted quadratic (`c < 0` inside),
/// the two reciprocal root magnitudes are `(sqrt(D) +- b) / (-2c)` with
/// `D = b^2 - 4ac`, and the symmetric power sum expands binomially to
/// `2 sum_{j = k mod 2} C(k,j) D^{(k-j)/2} b^j / (-2c)^k`:
/// odd powers of `sqrt(D)` cancel, leaving a homogeneous polynomial in
/// `xi` of degree exactly `k`.
pub fn correction_polynomial(surface: &Surface, x: &[f64], k: u32) -> Result<Poly> {
    if surface.kind == SurfaceKind::Hyperplane {
        return Err(Error::Unsupported(
            "hyperplane correction uses the plane branch polynomial".into(),
        ));
    }
    if !surface.contains(x) {
        return Err(Error::domain("base point must lie inside the domain"));
    }
    let rq = surface.ray_quadratic(x)?;
    let n = surface.n;
    let a = Poly::diagonal_quadratic(&rq.quad);
    let b = Poly::linear(&rq.lin);
    let c = rq.constant;
    let disc = b.mul(&b).add(&a.scale(-4.0 * c));
    let denom = (-2.0 * c).powi(k as i32);

    let mut sum = Poly::zero(n);
    let mut j = k % 2;
    while j <= k {
        let coeff = 2.0 * binomial(k, j) / denom;
        let term = disc.pow((k - j) / 2).mul(&b.pow(j)).scale(coeff);
        sum = sum.add(&term);
        j += 2;
    }
    Ok(sum)
}

/// Plane-branch correction symbol as a polynomial: `(xi_n / x_n)^k`
/// (degree `k`; its `k`-fold Laplacian vanishes for `k >= 1`).
pub fn plane_correction_polynomial(n: usize, x_n: f64, k: u32) -> Result<Poly> {
    if !(x_n > 0.0) {
        return Err(Error::domain("plane branch needs x_n > 0"));
    }
    Ok(Poly::var(n, n - 1).pow(k).scale(x_n.powi(-(k as i32))))
}

fn binomial(n: u32, k: u32) -> f64 {
    let mut out = 1.0;
    for i in 0..k.min(n - k) {
        out = out * (n - i) as f64 / (i + 1) as f64;
    }
    out
}

/// Iterated finite-difference Laplacian in `xi`: `k`-fold composition of
/// the (2n+1)-point second-order stencil at a common step, Richardson-
/// extrapolated against the doubled step.
///
/// A common step across composition levels keeps the roundoff
/// amplification at `(1/step^2)^k` instead of the catastrophic
/// `prod (1/step_i^2)` of a shrinking cascade, and the composition is
/// exact (up to roundoff) on polynomials of degree `<= 2k` either way;
/// the extrapolation only matters for non-polynomial targets, where it
/// removes the leading `step^2` error term.
pub fn laplacian_power_fd<F>(f: &F, xi0: &[f64], k: u32, step: f64) -> Result<f64>
where
    F: Fn(&[f64]) -> f64,
{
    if !(step > 1e-8 * (1.0 + norm(xi0))) {
        return Err(Error::argument("finite-difference step underflow"));
    }
    let fine = fd_laplacian_k(f, xi0, step, k);
    let coarse = fd_laplacian_k(f, xi0, 2.0 * step, k);
    Ok((4.0 * fine - coarse) / 3.0)
}

fn fd_laplacian_k<F>(f: &F, xi: &[f64], step: f64, k: u32) -> f64
where
    F: Fn(&[f64]) -> f64,
{
    if k == 1 {
        return fd_laplacian_once(f, xi, step);
    }
    let inner = |y: &[f64]| fd_laplacian_k(f, y, step, k - 1);
    fd_laplacian_once(&inner, xi, step)
}

fn fd_laplacian_once<F>(f: &F, xi: &[f64], step: f64) -> f64
where
    F: Fn(&[f64]) -> f64,
{
    let center = f(xi);
    let mut acc = 0.0;
    let mut y = xi.to_vec();
    for i in 0..xi.len() {
        y[i] = xi[i] + step;
        let fp = f(&y);
        y[i] = xi[i] - step;
        let fm = f(&y);
        y[i] = xi[i];
        acc += fp - 2.0 * center + fm;
    }
    acc / (step * step)
}

/// One order of the symbol expansion in a probe report.
#[derive(Debug, Clone, Serialize)]
pub struct SymbolTerm {
    pub k: u32,
    /// Cutoff-weighted correction symbol value at the probe.
    pub weighted_value: f64,
    /// Finite-difference iterated Laplacian of the weighted symbol.
    pub fd_laplacian: f64,
    /// `|fd| / (2^k k!)`, the magnitude this order contributes to the symbol.
    pub correction_magnitude: f64,
    /// Exact total degree of the closed-form polynomial (quadrics).
    pub poly_degree: Option<u32>,
    /// Whether the symbolic `k`-fold Laplacian of that polynomial is zero.
    pub poly_cancelled: Option<bool>,
    /// Closed-form coefficients as (exponents, coefficient) pairs.
    pub poly_coefficients: Vec<(Vec<u32>, f64)>,
}

/// Probe report: principal symbol, visibility flags, and the correction
/// ladder up to `k_max`.
#[derive(Debug, Clone, Serialize)]
pub struct SymbolReport {
    pub surface: Surface,
    pub x: Vec<f64>,
    pub xi: Vec<f64>,
    pub k_max: u32,
    pub sigma0: f64,
    pub in_a_plus: bool,
    pub in_a_minus: bool,
    pub in_a: bool,
    pub terms: Vec<SymbolTerm>,
    /// Truncated full-symbol estimate `sigma0 + sum_k (-i)^k/(2^k k!) fd_k`.
    pub symbol_estimate_re: f64,
    pub symbol_estimate_im: f64,
}

/// Evaluates the cutoff-weighted correction symbols at `(x, x, xi)`, their
/// finite-difference iterated Laplacians, and (for quadrics) the exact
/// polynomial expansion, for every order up to `k_max`.
pub fn partial_symbol_probe(
    surface: &Surface,
    cut: &CutoffSpec,
    x: &[f64],
    xi: &[f64],
    k_max: u32,
) -> Result<SymbolReport> {
    let probe = classify_covector(surface, cut, x, xi)?;
    let step = 0.25 * norm(xi);
    let mut terms = Vec::new();
    let mut est_re = probe.sigma0;
    let mut est_im = 0.0;
    for k in 1..=k_max {
        let surface_k = surface.clone();
        let cut_k = cut.clone();
        let x_k = x.to_vec();
        let weighted = |xi_probe: &[f64]| {
            weighted_correction_symbol(&surface_k, &cut_k, &x_k, xi_probe, k)
                .unwrap_or(f64::NAN)
        };
        let value = weighted(xi);
        let fd = laplacian_power_fd(&weighted, xi, k, step)?;
        let fact: f64 = (1..=k).map(|i| i as f64).product();
        let magnitude = fd.abs() / (2.0f64.powi(k as i32) * fact);
        // (-i)^k cycles through -i, -1, +i, +1.
        let scale = fd / (2.0f64.powi(k as i32) * fact);
        match k % 4 {
            1 => est_im -= scale,
            2 => est_re -= scale,
            3 => est_im += scale,
            _ => est_re += scale,
        }

        let poly = if surface.kind == SurfaceKind::Hyperplane {
            Some(plane_correction_polynomial(surface.n, x[surface.n - 1], k)?)
        } else {
            Some(correction_polynomial(surface, x, k)?)
        };
        let (degree, cancelled, coeffs) = match &poly {
            Some(p) => (
                p.total_degree(),
                Some(p.laplacian_power(k).is_zero()),
                p.terms().map(|(e, c)| (e.to_vec(), c)).collect(),
            ),
            None => (None, None, Vec::new()),
        };
        terms.push(SymbolTerm {
            k,
            weighted_value: value,
            fd_laplacian: fd,
            correction_magnitude: magnitude,
            poly_degree: degree,
            poly_cancelled: cancelled,
            poly_coefficients: coeffs,
        });
    }
    Ok(SymbolReport {
        surface: surface.clone(),
        x: x.to_vec(),
        xi: xi.to_vec(),
        k_max,
        sigma0: probe.sigma0,
        in_a_plus: probe.in_a_plus,
        in_a_minus: probe.in_a_minus,
        in_a: probe.in_a,
        terms,
        symbol_estimate_re: est_re,
        symbol_estimate_im: est_im,
    })
}
