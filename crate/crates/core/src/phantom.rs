//! Ground-truth source functions with exact pointwise evaluation.

use serde::{Deserialize, Serialize};

use crate::backprojection::{GridSpec, ImageGrid};
use crate::error::{Error, Result};
use crate::geometry::Surface;
use crate::vecmath::dist;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Primitive {
    /// Characteristic function of a ball, scaled by `amplitude`.
    IndicatorBall { center: Vec<f64>, radius: f64, amplitude: f64 },
    /// `a (1 - |x-c|^2 / rho^2)^p` inside the ball, zero outside;
    /// C^{p-1} smooth across the edge.
    SmoothBump {
        center: Vec<f64>,
        radius: f64,
        amplitude: f64,
        #[serde(default = "default_taper")]
        p: u32,
    },
}

fn default_taper() -> u32 {
    3
}

impl Primitive {
    pub fn center(&self) -> &[f64] {
        match self {
            Primitive::IndicatorBall { center, .. } => center,
            Primitive::SmoothBump { center, .. } => center,
        }
    }

    pub fn radius(&self) -> f64 {
        match self {
            Primitive::IndicatorBall { radius, .. } => *radius,
            Primitive::SmoothBump { radius, .. } => *radius,
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Primitive::IndicatorBall { center, radius, amplitude } => {
                if dist(x, center) < *radius {
                    *amplitude
                } else {
                    0.0
                }
            }
            Primitive::SmoothBump { center, radius, amplitude, p } => {
                let d2 = x.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
                let s = 1.0 - d2 / (radius * radius);
                if s <= 0.0 {
                    0.0
                } else {
                    amplitude * s.powi(*p as i32)
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Phantom {
    pub terms: Vec<Primitive>,
}

impl Phantom {
    pub fn new(terms: Vec<Primitive>) -> Result<Self> {
        for t in &terms {
            if !(t.radius() > 0.0) {
                return Err(Error::argument("primitive radius must be positive"));
            }
            if !t.center().iter().all(|v| v.is_finite()) {
                return Err(Error::argument("primitive center must be finite"));
            }
        }
        Ok(Phantom { terms })
    }

    pub fn zero() -> Self {
        Phantom { terms: Vec::new() }
    }

    pub fn dim(&self) -> Option<usize> {
        self.terms.first().map(|t| t.center().len())
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|t| t.eval(x)).sum()
    }

    pub fn max_amplitude(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| match t {
                Primitive::IndicatorBall { amplitude, .. } => amplitude.abs(),
                Primitive::SmoothBump { amplitude, .. } => amplitude.abs(),
            })
            .sum()
    }

    /// A ball containing the support of every term: centered at the
    /// midpoint of the per-term bounding box, radius to the farthest
    /// term-ball surface.
    pub fn support_ball(&self) -> Option<(Vec<f64>, f64)> {
        let first = self.terms.first()?;
        let n = first.center().len();
        let mut lo = vec![f64::INFINITY; n];
        let mut hi = vec![f64::NEG_INFINITY; n];
        for t in &self.terms {
            for i in 0..n {
                lo[i] = lo[i].min(t.center()[i] - t.radius());
                hi[i] = hi[i].max(t.center()[i] + t.radius());
            }
        }
        let center: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect();
        let radius = self
            .terms
            .iter()
            .map(|t| dist(t.center(), &center) + t.radius())
            .fold(0.0f64, f64::max);
        Some((center, radius))
    }

    /// Checks that every term's support ball lies strictly inside the
    /// surface's domain. Sampled check: the center plus a dense fan of
    /// boundary points of each ball must be interior.
    pub fn validate_inside(&self, surface: &Surface) -> Result<()> {
        let n = surface.n;
        for t in &self.terms {
            if t.center().len() != n {
                return Err(Error::argument("phantom dimension mismatch with surface"));
            }
            if !surface.contains(t.center()) {
                return Err(Error::domain("phantom term center outside the domain"));
            }
            let samples = if n == 2 { 256 } else { 1024 };
            for k in 0..samples {
                let dir = unit_direction(n, k, samples);
                let p: Vec<f64> =
                    t.center().iter().zip(&dir).map(|(c, d)| c + t.radius() * d).collect();
                if !surface.contains(&p) {
                    return Err(Error::domain(
                        "phantom support ball reaches the observation surface",
                    ));
                }
            }
        }
        Ok(())
    }

    /// Cell-centered point samples of `eval` on the grid.
    pub fn rasterize(&self, spec: &GridSpec) -> ImageGrid {
        let mut img = ImageGrid::zeros(spec.clone());
        let mut x = vec![0.0; spec.dims.len()];
        for idx in 0..img.values.len() {
            img.spec.point_of_index(idx, &mut x);
            img.values[idx] = self.eval(&x);
        }
        img
    }
}

/// Deterministic direction fan: uniform angles in 2-d, Fibonacci sphere in 3-d.
fn unit_direction(n: usize, k: usize, total: usize) -> Vec<f64> {
    match n {
        2 => {
            let a = std::f64::consts::TAU * k as f64 / total as f64;
            vec![a.cos(), a.sin()]
        }
        3 => {
            let golden = (1.0 + 5.0f64.sqrt()) / 2.0;
            let t = (k as f64 + 0.5) / total as f64;
            let z = 1.0 - 2.0 * t;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let a = std::f64::consts::TAU * k as f64 / golden;
            vec![r * a.cos(), r * a.sin(), z]
        }
        _ => {
            let mut v = vec![0.0; n];
            v[k % n] = if (k / n) % 2 == 0 { 1.0 } else { -1.0 };
            v
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backprojection::GridSpec;

    fn ball(center: Vec<f64>, radius: f64, amplitude: f64) -> Primitive {
        Primitive::IndicatorBall { center, radius, amplitude }
    }

    #[test]
    fn indicator_values() {
        let p = Phantom::new(vec![ball(vec![0.0, 0.0], 0.3, 1.0)]).unwrap();
        assert_eq!(p.eval(&[0.1, 0.0]), 1.0);
        assert_eq!(p.eval(&[0.5, 0.0]), 0.0);
    }

    #[test]
    fn smooth_bump_value() {
        let p = Phantom::new(vec![Primitive::SmoothBump {
            center: vec![0.0, 0.0],
            radius: 0.5,
            amplitude: 2.0,
            p: 2,
        }])
        .unwrap();
        // |x| = 0.25 -> 1 - 0.0625/0.25 = 0.75; 2 * 0.75^2 = 1.125
        assert!((p.eval(&[0.25, 0.0]) - 1.125).abs() < 1e-15);
        assert_eq!(p.eval(&[0.6, 0.0]), 0.0);
    }

    #[test]
    fn linear_in_amplitudes_and_supported() {
        // Dyadic coordinates so the edge distance is exact in f64.
        let a = Phantom::new(vec![ball(vec![0.375, 0.0], 0.125, 2.0)]).unwrap();
        for x in [[0.375, 0.0625], [0.0, 0.0], [0.4375, 0.0]] {
            let half = Phantom::new(vec![ball(vec![0.375, 0.0], 0.125, 1.0)]).unwrap();
            assert_eq!(a.eval(&x), 2.0 * half.eval(&x));
        }
        // support check: zero whenever |x - c| >= rho
        assert_eq!(a.eval(&[0.5, 0.0]), 0.0);
    }

    #[test]
    fn rasterize_zero_and_sum() {
        let spec = GridSpec::centered_box(&[0.0, 0.0], 1.0, 32);
        assert!(Phantom::zero().rasterize(&spec).values.iter().all(|v| *v == 0.0));

        let p1 = Phantom::new(vec![ball(vec![-0.4, 0.0], 0.2, 1.0)]).unwrap();
        let p2 = Phantom::new(vec![ball(vec![0.4, 0.0], 0.2, 0.5)]).unwrap();
        let sum = Phantom::new(p1.terms.iter().chain(&p2.terms).cloned().collect()).unwrap();
        let (r1, r2, rs) = (p1.rasterize(&spec), p2.rasterize(&spec), sum.rasterize(&spec));
        for i in 0..rs.values.len() {
            assert_eq!(rs.values[i], r1.values[i] + r2.values[i]);
        }
    }

    #[test]
    fn rasterized_disk_area() {
        let rho = 0.3;
        let p = Phantom::new(vec![ball(vec![0.0, 0.0], rho, 1.0)]).unwrap();
        let spec = GridSpec::centered_box(&[0.0, 0.0], 0.5, 256);
        let img = p.rasterize(&spec);
        let cell = spec.spacing * spec.spacing;
        let area: f64 = img.values.iter().sum::<f64>() * cell;
        let exact = std::f64::consts::PI * rho * rho;
        assert!((area - exact).abs() / exact < 0.02, "area {area} vs {exact}");
    }

    #[test]
    fn validate_inside_catches_leaks() {
        let s = Surface::sphere(2, 1.0).unwrap();
        let ok = Phantom::new(vec![ball(vec![0.3, 0.0], 0.2, 1.0)]).unwrap();
        assert!(ok.validate_inside(&s).is_ok());
        let leaking = Phantom::new(vec![ball(vec![0.9, 0.0], 0.2, 1.0)]).unwrap();
        assert!(leaking.validate_inside(&s).is_err());
    }

    #[test]
    fn phantom_json_roundtrip() {
        let p = Phantom::new(vec![
            ball(vec![0.0, 0.1], 0.25, 1.0),
            Primitive::SmoothBump { center: vec![0.3, 0.1], radius: 0.4, amplitude: 1.0, p: 3 },
        ])
        .unwrap();
        let text = serde_json::to_string(&p).unwrap();
        let back: Phantom = serde_json::from_str(&text).unwrap();
        assert_eq!(p, back);
        assert!(text.contains("indicator_ball") && text.contains("smooth_bump"));
    }
}
