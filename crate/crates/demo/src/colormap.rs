//! Tiny colormaps for rendering scalar fields into RGBA tiles.

/// Piecewise-linear dark-blue -> teal -> yellow ramp.
fn sequential(t: f64) -> [u8; 3] {
    let t = t.clamp(0.0, 1.0);
    let stops: [(f64, [f64; 3]); 5] = [
        (0.0, [13.0, 8.0, 135.0]),
        (0.3, [36.0, 90.0, 160.0]),
        (0.55, [34.0, 168.0, 132.0]),
        (0.8, [170.0, 220.0, 50.0]),
        (1.0, [253.0, 231.0, 37.0]),
    ];
    for w in stops.windows(2) {
        let (t0, c0) = w[0];
        let (t1, c1) = w[1];
        if t <= t1 {
            let s = (t - t0) / (t1 - t0);
            return [
                (c0[0] + s * (c1[0] - c0[0])) as u8,
                (c0[1] + s * (c1[1] - c0[1])) as u8,
                (c0[2] + s * (c1[2] - c0[2])) as u8,
            ];
        }
    }
    [253, 231, 37]
}

/// Blue-white-red diverging ramp for signed fields.
fn diverging(t: f64) -> [u8; 3] {
    let t = t.clamp(-1.0, 1.0);
    if t < 0.0 {
        let s = 1.0 + t; // 0 at -1, 1 at 0
        [(59.0 + s * 196.0) as u8, (76.0 + s * 179.0) as u8, (192.0 + s * 63.0) as u8]
    } else {
        let s = 1.0 - t;
        [(180.0 + s * 75.0) as u8, (4.0 + s * 251.0) as u8, (38.0 + s * 217.0) as u8]
    }
}

/// Renders values in [lo, hi] with the sequential map; y flipped so the
/// first image row is the top of the physical box.
pub fn field_rgba(values: &[f64], nx: usize, ny: usize, lo: f64, hi: f64) -> Vec<u8> {
    let span = (hi - lo).max(1e-300);
    let mut out = Vec::with_capacity(nx * ny * 4);
    for row in 0..ny {
        let iy = ny - 1 - row;
        for ix in 0..nx {
            let v = values[iy * nx + ix];
            let [r, g, b] = sequential((v - lo) / span);
            out.extend_from_slice(&[r, g, b, 255]);
        }
    }
    out
}

/// Renders a signed field scaled by `amplitude` with the diverging map.
pub fn diverging_rgba(values: &[f64], nx: usize, ny: usize, amplitude: f64) -> Vec<u8> {
    let amp = amplitude.max(1e-300);
    let mut out = Vec::with_capacity(nx * ny * 4);
    for row in 0..ny {
        let iy = ny - 1 - row;
        for ix in 0..nx {
            let [r, g, b] = diverging(values[iy * nx + ix] / amp);
            out.extend_from_slice(&[r, g, b, 255]);
        }
    }
    out
}
