//! File I/O: one binary container shared by sinograms, images and masks
//! (a single-line JSON header, a newline, then raw little-endian f64s),
//! plus PGM and CSV exporters.
//!
//! The container is deliberately trivial to parse from any language:
//! read to the first newline, `json.loads` it, memory-map the rest.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::backprojection::{GridSpec, ImageGrid};
use crate::error::{Error, Result};
use crate::filter::FilteredSinogram;
use crate::forward::{RadiusGrid, Sinogram};
use crate::geometry::{Patch, Surface};
use crate::microlocal::VisibleZoneMask;
use crate::phantom::Phantom;

pub const FORMAT_VERSION: u32 = 1;

/// Writes `header` (compact JSON, one line) then the payload as raw
/// little-endian f64.
pub fn write_container(path: &Path, header: &serde_json::Value, payload: &[f64]) -> Result<()> {
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    let text = serde_json::to_string(header)?;
    debug_assert!(!text.contains('\n'));
    file.write_all(text.as_bytes())?;
    file.write_all(b"\n")?;
    for v in payload {
        file.write_all(&v.to_le_bytes())?;
    }
    file.flush()?;
    Ok(())
}

/// Reads a container back: header value and payload.
pub fn read_container(path: &Path) -> Result<(serde_json::Value, Vec<f64>)> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    let split = bytes
        .iter()
        .position(|b| *b == b'\n')
        .ok_or_else(|| Error::Format("missing header newline".into()))?;
    let header: serde_json::Value = serde_json::from_slice(&bytes[..split])?;
    let body = &bytes[split + 1..];
    if body.len() % 8 != 0 {
        return Err(Error::Format("payload length not a multiple of 8".into()));
    }
    let payload = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((header, payload))
}

#[derive(Serialize, Deserialize)]
struct CentersHeader {
    patch: Patch,
    counts: Vec<usize>,
    params: Vec<f64>,
}

pub fn save_sinogram(path: &Path, sino: &Sinogram) -> Result<()> {
    let header = json!({
        "format": "smr",
        "version": FORMAT_VERSION,
        "stage": "raw",
        "surface": sino.surface,
        "centers": CentersHeader {
            patch: sino.centers.patch.clone(),
            counts: sino.centers.counts.clone(),
            params: sino.centers.params.clone(),
        },
        "radii": sino.radii,
        "phantom": sino.phantom,
    });
    write_container(path, &header, &sino.data)
}

fn centers_from_header(surface: &Surface, value: &serde_json::Value) -> Result<crate::geometry::SurfaceQuadrature> {
    let ch: CentersHeader = serde_json::from_value(value.clone())?;
    let quad = surface.surface_quadrature(&ch.patch, &ch.counts)?;
    if quad.params != ch.params {
        return Err(Error::Format(
            "stored center parameters disagree with the regenerated quadrature".into(),
        ));
    }
    Ok(quad)
}

pub fn load_sinogram(path: &Path) -> Result<Sinogram> {
    let (header, data) = read_container(path)?;
    if header["format"] != "smr" || header["stage"] != "raw" {
        return Err(Error::Format("not a raw sinogram container".into()));
    }
    let surface: Surface = serde_json::from_value(header["surface"].clone())?;
    surface.validate()?;
    let centers = centers_from_header(&surface, &header["centers"])?;
    let radii: RadiusGrid = serde_json::from_value(header["radii"].clone())?;
    let phantom: Option<Phantom> = serde_json::from_value(header["phantom"].clone())?;
    if data.len() != centers.len() * radii.count {
        return Err(Error::Format("payload size disagrees with the header".into()));
    }
    Ok(Sinogram { surface, centers, radii, data, phantom })
}

pub fn save_filtered(path: &Path, f: &FilteredSinogram) -> Result<()> {
    let header = json!({
        "format": "smr",
        "version": FORMAT_VERSION,
        "stage": "filtered",
        "surface": f.surface,
        "centers": CentersHeader {
            patch: f.centers.patch.clone(),
            counts: f.centers.counts.clone(),
            params: f.centers.params.clone(),
        },
        "query_radii": f.query_radii,
        "dimension": f.dimension,
    });
    write_container(path, &header, &f.data)
}

pub fn load_filtered(path: &Path) -> Result<FilteredSinogram> {
    let (header, data) = read_container(path)?;
    if header["format"] != "smr" || header["stage"] != "filtered" {
        return Err(Error::Format("not a filtered sinogram container".into()));
    }
    let surface: Surface = serde_json::from_value(header["surface"].clone())?;
    surface.validate()?;
    let centers = centers_from_header(&surface, &header["centers"])?;
    let query_radii: RadiusGrid = serde_json::from_value(header["query_radii"].clone())?;
    let dimension: usize = serde_json::from_value(header["dimension"].clone())?;
    if data.len() != centers.len() * query_radii.count {
        return Err(Error::Format("payload size disagrees with the header".into()));
    }
    Ok(FilteredSinogram { surface, centers, query_radii, data, dimension })
}

pub fn save_image(path: &Path, img: &ImageGrid) -> Result<()> {
    let header = json!({
        "format": "smi",
        "version": FORMAT_VERSION,
        "grid": img.spec,
        "provenance": img.provenance,
    });
    write_container(path, &header, &img.values)
}

pub fn load_image(path: &Path) -> Result<ImageGrid> {
    let (header, values) = read_container(path)?;
    if header["format"] != "smi" {
        return Err(Error::Format("not an image container".into()));
    }
    let spec: GridSpec = serde_json::from_value(header["grid"].clone())?;
    if values.len() != spec.len() {
        return Err(Error::Format("payload size disagrees with the header".into()));
    }
    Ok(ImageGrid { spec, values, provenance: header["provenance"].clone() })
}

/// Saves the principal-symbol field of a visible-zone mask as an image
/// container with per-direction slabs.
pub fn save_mask(path: &Path, mask: &VisibleZoneMask) -> Result<()> {
    let header = json!({
        "format": "smi",
        "version": FORMAT_VERSION,
        "grid": mask.grid,
        "directions": mask.directions,
        "provenance": {"stage": "visible_zone", "field": "sigma0"},
    });
    write_container(path, &header, &mask.sigma0)
}

/// Binary 16-bit PGM (P5, maxval 65535, big-endian samples) with linear
/// windowing; rows run top-to-bottom in decreasing y. Auto-windowing a
/// constant image produces all-zero pixels; an explicitly degenerate
/// window is an error.
pub fn export_pgm(img: &ImageGrid, window: Option<(f64, f64)>) -> Result<Vec<u8>> {
    if img.spec.dim() != 2 {
        return Err(Error::argument("PGM export needs a 2-d image"));
    }
    if img.values.is_empty() {
        return Err(Error::argument("empty image"));
    }
    let (lo, hi, degenerate) = match window {
        Some((lo, hi)) => {
            if !(hi > lo) {
                return Err(Error::argument("degenerate window"));
            }
            (lo, hi, false)
        }
        None => {
            let lo = img.values.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = img.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            (lo, hi, !(hi > lo))
        }
    };
    let (nx, ny) = (img.spec.dims[0], img.spec.dims[1]);
    let mut out = format!("P5\n{nx} {ny}\n65535\n").into_bytes();
    for iy in (0..ny).rev() {
        for ix in 0..nx {
            let v = img.values[img.spec.index_of(&[ix, iy])];
            let level = if degenerate {
                0u16
            } else {
                (((v - lo) / (hi - lo)).clamp(0.0, 1.0) * 65535.0).round() as u16
            };
            out.extend_from_slice(&level.to_be_bytes());
        }
    }
    Ok(out)
}

/// Samples the image along the segment `p0 -> p1` at uniform arclength;
/// returns `(s, value)` rows.
pub fn line_profile(
    img: &ImageGrid,
    p0: &[f64],
    p1: &[f64],
    samples: usize,
) -> Result<Vec<(f64, f64)>> {
    if samples < 2 {
        return Err(Error::argument("need at least 2 profile samples"));
    }
    let length = crate::vecmath::dist(p0, p1);
    let mut rows = Vec::with_capacity(samples);
    for k in 0..samples {
        let t = k as f64 / (samples - 1) as f64;
        let x: Vec<f64> = p0.iter().zip(p1).map(|(a, b)| a + t * (b - a)).collect();
        rows.push((t * length, img.sample(&x)?));
    }
    Ok(rows)
}

pub fn profile_to_csv(rows: &[(f64, f64)]) -> String {
    let mut out = String::from("s,value\n");
    for (s, v) in rows {
        out.push_str(&format!("{s},{v}\n"));
    }
    out
}
