//! Property tests for the ray-surface intersection machinery.

use proptest::prelude::*;

use smrt_core::geometry::{Surface, SurfaceKind};

fn surfaces() -> impl Strategy<Value = Surface> {
    prop_oneof![
        (0.4f64..2.5, 0.4f64..2.5)
            .prop_map(|(a, b)| Surface::ellipsoid(vec![a, b]).unwrap()),
        (0.4f64..2.0).prop_map(|a| Surface::elliptic_paraboloid(2, vec![a]).unwrap()),
        (0.5f64..1.5, 0.2f64..1.0, 0.1f64..0.8)
            .prop_map(|(a, b, c)| Surface::general_quadric(2, vec![a, b, c], 1).unwrap()),
        (0.4f64..1.6, 0.4f64..1.6, 0.4f64..1.6)
            .prop_map(|(a, b, c)| Surface::ellipsoid(vec![a, b, c]).unwrap()),
    ]
}

/// Interior point + admissible direction for a sampled surface.
fn scene() -> impl Strategy<Value = (Surface, Vec<f64>, Vec<f64>)> {
    (surfaces(), proptest::collection::vec(-1.0f64..1.0, 3), proptest::collection::vec(-1.0f64..1.0, 3))
        .prop_filter_map("interior point with admissible direction", |(s, raw_x, raw_xi)| {
            let n = s.n;
            let x: Vec<f64> = match s.kind {
                SurfaceKind::Ellipsoid => {
                    // Scale a box sample into the inscribed box.
                    (0..n).map(|i| 0.5 * raw_x[i] / s.omega[i] / (n as f64).sqrt()).collect()
                }
                SurfaceKind::EllipticParaboloid | SurfaceKind::GeneralQuadric => {
                    let mut v = vec![0.6 * raw_x[0], 0.0];
                    // Lift above the graph with margin.
                    let probe = vec![v[0], 0.0];
                    let base = s.quadric_value(&probe);
                    v[1] = base + 0.2 + 0.8 * (raw_x[1] + 1.0);
                    if s.kind == SurfaceKind::GeneralQuadric {
                        // Domain is u^2 < b y + c with positive linear weight.
                        let lin = s.omega[1];
                        v[1] = (v[0] * v[0] * s.omega[0] * s.omega[0] - s.omega[2]) / lin
                            + 0.2
                            + 0.8 * (raw_x[1] + 1.0);
                    }
                    v
                }
                SurfaceKind::Hyperplane => unreachable!(),
            };
            if !s.contains(&x) {
                return None;
            }
            let xi: Vec<f64> = raw_xi[..n].to_vec();
            let norm: f64 = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm < 0.1 {
                return None;
            }
            // Keep clear of excluded (vertical) directions for open surfaces.
            if s.kind != SurfaceKind::Ellipsoid && xi[0].abs() < 0.1 * norm {
                return None;
            }
            Some((s, x, xi))
        })
}

proptest! {
    #[test]
    fn intersections_lie_on_surface((surface, x, xi) in scene()) {
        let hit = surface.ray_intersections(&x, &xi).unwrap();
        let scale = 1.0
            + x.iter().map(|v| v.abs()).sum::<f64>()
            + hit.t_plus.abs() * xi.iter().map(|v| v.abs()).sum::<f64>();
        prop_assert!(surface.quadric_value(&hit.z_plus).abs() < 1e-10 * scale);
        let z_minus = hit.z_minus.unwrap();
        let scale_m = 1.0
            + x.iter().map(|v| v.abs()).sum::<f64>()
            + hit.t_minus.unwrap().abs() * xi.iter().map(|v| v.abs()).sum::<f64>();
        prop_assert!(surface.quadric_value(&z_minus).abs() < 1e-10 * scale_m);
        prop_assert!(hit.t_plus > 0.0);
        prop_assert!(hit.t_minus.unwrap() < 0.0);
    }

    #[test]
    fn reversal_swaps_the_roots((surface, x, xi) in scene()) {
        let fwd = surface.ray_intersections(&x, &xi).unwrap();
        let neg: Vec<f64> = xi.iter().map(|v| -v).collect();
        let rev = surface.ray_intersections(&x, &neg).unwrap();
        // t_+(x, -xi) = -t_-(x, xi), and the hit points swap.
        prop_assert!((rev.t_plus + fwd.t_minus.unwrap()).abs() <= 1e-9 * (1.0 + rev.t_plus.abs()));
        let fwd_minus = fwd.z_minus.unwrap();
        for i in 0..surface.n {
            prop_assert!((rev.z_plus[i] - fwd_minus[i]).abs() <= 1e-9 * (1.0 + fwd_minus[i].abs()));
        }
    }
}

/// Convexity consequence of the outward normal: the back-projection weight
/// is positive at both intersections (dense deterministic sweep).
#[test]
fn backprojection_weight_positive_everywhere() {
    let surfaces = [
        Surface::ellipsoid(vec![1.0, 2.0]).unwrap(),
        Surface::ellipsoid(vec![0.5, 0.8]).unwrap(),
        Surface::elliptic_paraboloid(2, vec![1.0]).unwrap(),
        Surface::general_quadric(2, vec![1.0, 0.7, 0.3], 1).unwrap(),
    ];
    let mut state = 0x243f6a8885a308d3u64;
    let mut next = move || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (state >> 11) as f64 / (1u64 << 53) as f64
    };
    let mut checked = 0usize;
    while checked < 10_000 {
        let s = &surfaces[checked % surfaces.len()];
        let x = match s.kind {
            SurfaceKind::Ellipsoid => {
                vec![
                    (2.0 * next() - 1.0) * 0.6 / s.omega[0],
                    (2.0 * next() - 1.0) * 0.6 / s.omega[1],
                ]
            }
            _ => {
                let u = (2.0 * next() - 1.0) * 0.8;
                let probe = vec![u, 0.0];
                let lift = match s.kind {
                    SurfaceKind::GeneralQuadric => {
                        (u * u * s.omega[0] * s.omega[0] - s.omega[2]) / s.omega[1]
                    }
                    _ => s.quadric_value(&probe),
                };
                vec![u, lift + 0.1 + 2.0 * next()]
            }
        };
        if !s.contains(&x) {
            continue;
        }
        let angle = next() * std::f64::consts::TAU;
        let xi = [angle.cos(), angle.sin()];
        if s.kind != SurfaceKind::Ellipsoid && xi[0].abs() < 0.05 {
            continue;
        }
        let hit = match s.ray_intersections(&x, &xi) {
            Ok(h) => h,
            Err(_) => continue,
        };
        for z in [Some(&hit.z_plus), hit.z_minus.as_ref()].into_iter().flatten() {
            let nu = s.outward_normal(z).unwrap();
            let w: f64 = z.iter().zip(&x).zip(&nu).map(|((zi, xi_), ni)| (zi - xi_) * ni).sum();
            assert!(w > 0.0, "weight {w} at x={x:?}, z={z:?}");
        }
        checked += 1;
    }
}
