//! Cross-module integration: pipeline calibration on every surface kind,
//! file round-trips through the pipeline stages, and determinism.

use smrt_core::backprojection::{reconstruct_full, GridSpec};
use smrt_core::experiment::{calibration_ratio, rel_l2};
use smrt_core::filter::filter_sinogram;
use smrt_core::forward::{forward_sinogram, RadiusGrid};
use smrt_core::geometry::{Patch, Surface};
use smrt_core::io;
use smrt_core::microlocal::{apply_cutoffs, CutoffSpec};
use smrt_core::phantom::{Phantom, Primitive};

fn bump(center: Vec<f64>, radius: f64) -> Phantom {
    Phantom::new(vec![Primitive::SmoothBump { center, radius, amplitude: 1.0, p: 3 }]).unwrap()
}

#[test]
fn calibration_circle() {
    let ratio = calibration_ratio(&Surface::sphere(2, 1.5).unwrap()).unwrap();
    assert!((ratio - 1.0).abs() < 0.05, "amplitude ratio {ratio}");
}

#[test]
fn calibration_ellipse() {
    let ratio = calibration_ratio(&Surface::ellipsoid(vec![0.5, 0.8]).unwrap()).unwrap();
    assert!((ratio - 1.0).abs() < 0.05, "amplitude ratio {ratio}");
}

#[test]
fn calibration_parabola() {
    // The default +-4 window leaves a one-sided cone near the vertical,
    // so the honest diagnostic reads slightly below 1.
    let ratio = calibration_ratio(&Surface::elliptic_paraboloid(2, vec![1.0]).unwrap()).unwrap();
    assert!((0.85..=1.03).contains(&ratio), "amplitude ratio {ratio}");
}

#[test]
fn calibration_plane() {
    // Shallow anchor against a +-8 window: the aperture tail costs a few
    // percent; a constants bug would show as a factor 2 or pi.
    let ratio = calibration_ratio(&Surface::hyperplane(2).unwrap()).unwrap();
    assert!((0.9..=1.03).contains(&ratio), "amplitude ratio {ratio}");
}

#[test]
fn staged_files_reproduce_in_memory_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let surface = Surface::sphere(2, 1.2).unwrap();
    let phantom = bump(vec![0.2, -0.1], 0.35);
    let radii = RadiusGrid::uniform(2.6, 160).unwrap();
    let sino = forward_sinogram(&phantom, &surface, &[96], &radii).unwrap();

    // sinogram file stage
    let sino_path = dir.path().join("s.smr");
    io::save_sinogram(&sino_path, &sino).unwrap();
    let sino2 = io::load_sinogram(&sino_path).unwrap();
    assert_eq!(sino.data, sino2.data);

    // filtered file stage
    let filt = filter_sinogram(&sino2, 2).unwrap();
    let filt_path = dir.path().join("f.smr");
    io::save_filtered(&filt_path, &filt).unwrap();
    let filt2 = io::load_filtered(&filt_path).unwrap();
    assert_eq!(filt.data, filt2.data);
    assert_eq!(filt.query_radii, filt2.query_radii);

    // image stage: reconstruct from the round-tripped sinogram equals
    // the in-memory result bit for bit.
    let grid = GridSpec::centered_box(&[0.2, -0.1], 0.5, 40);
    let img_mem = reconstruct_full(&sino, &grid).unwrap();
    let img_file = reconstruct_full(&sino2, &grid).unwrap();
    assert_eq!(img_mem.values, img_file.values);

    let img_path = dir.path().join("i.smi");
    io::save_image(&img_path, &img_mem).unwrap();
    let img2 = io::load_image(&img_path).unwrap();
    assert_eq!(img_mem.values, img2.values);

    // The reconstruction is also close to the truth.
    let reference = phantom.rasterize(&grid);
    let err = rel_l2(&img_mem, &reference);
    assert!(err < 0.08, "rel L2 {err}");
}

#[test]
fn full_cutoffs_do_not_change_reconstruction() {
    let surface = Surface::sphere(2, 1.0).unwrap();
    let phantom = bump(vec![0.0, 0.15], 0.3);
    let radii = RadiusGrid::uniform(2.2, 128).unwrap();
    let sino = forward_sinogram(&phantom, &surface, &[64], &radii).unwrap();
    let cut = apply_cutoffs(&sino, &CutoffSpec::full()).unwrap();
    let grid = GridSpec::centered_box(&[0.0, 0.15], 0.45, 32);
    let a = reconstruct_full(&sino, &grid).unwrap();
    let b = reconstruct_full(&cut, &grid).unwrap();
    assert_eq!(a.values, b.values);
}

#[test]
fn full_data_jump_preservation() {
    // An indicator edge reconstructs with the same jump at the same
    // location; the midpoint fit reads the ratio to a few permille.
    use smrt_core::experiment::jump_table;
    use smrt_core::microlocal::CutoffSpec;

    let surface = Surface::sphere(2, 1.5).unwrap();
    let center = vec![0.3, 0.0];
    let radius = 0.5;
    let phantom = Phantom::new(vec![Primitive::IndicatorBall {
        center: center.clone(),
        radius,
        amplitude: 1.0,
    }])
    .unwrap();
    let radii = RadiusGrid::uniform(3.2, 512).unwrap();
    let sino = forward_sinogram(&phantom, &surface, &[256], &radii).unwrap();
    let grid = GridSpec::centered_box(&[0.3, 0.0], 0.8, 192);
    let recon = reconstruct_full(&sino, &grid).unwrap();
    let reference = phantom.rasterize(&grid);
    let rows = jump_table(
        &recon,
        &reference,
        &surface,
        &CutoffSpec::full(),
        &center,
        radius,
        32,
    )
    .unwrap();
    for row in rows {
        let ratio = row.measured_jump / row.reference_jump;
        assert!(
            (0.9..=1.1).contains(&ratio),
            "angle {:.1} deg: jump ratio {ratio}",
            row.angle.to_degrees()
        );
    }
}

#[test]
fn truncated_plane_tail_is_negligible() {
    // The far-center contribution decays like depth / half-width, so for
    // a shallow source doubling the truncation half-width moves the
    // well-covered region by a fraction of a percent.
    let phantom = bump(vec![0.0, 0.08], 0.055);
    let grid = GridSpec::centered_box(&[0.0, 0.08], 0.066, 24);
    let run = |half: f64, centers: usize, nr: usize| {
        let patch = Patch::new(vec![-half], vec![half]).unwrap();
        let s = Surface::hyperplane(2).unwrap().with_patch(patch).unwrap();
        let r_max = (half * half + 0.1f64).sqrt() + 0.3;
        let radii = RadiusGrid::uniform(r_max, nr).unwrap();
        let sino = forward_sinogram(&phantom, &s, &[centers], &radii).unwrap();
        reconstruct_full(&sino, &grid).unwrap()
    };
    let narrow = run(12.0, 896, 1574);
    let wide = run(24.0, 1792, 3096);
    let peak = wide.max_abs();
    let mut worst = 0.0f64;
    for (a, b) in narrow.values.iter().zip(&wide.values) {
        worst = worst.max((a - b).abs());
    }
    assert!(worst / peak < 0.005, "tail contribution {}", worst / peak);
}
