//! Radial filter stage: the explicit odd/even realizations of the filter
//! applied to sinogram columns.
//!
//! Odd dimension: `D^{n-1} [r^{-1} g(r)]` with `D = (1/2r) d/dr`, evaluated
//! on the acquisition grid with 4th-order stencils.
//!
//! Even dimension: the principal-value integral
//! `PV int_0^{r_max} D^{n-1}[tau^{-1} g(tau)] tau / (rho^2 - tau^2) dtau`,
//! realized by the midpoint rule on the data grid with query radii `rho`
//! staggered half a step off the `tau` nodes, so the symmetric cancellation
//! around `tau = rho` happens by construction.
//!
//! Constant prefactors live in the back-projection stage, in one place.

use crate::error::{Error, Result};
use crate::forward::{RadiusGrid, Sinogram};
use crate::geometry::{Surface, SurfaceQuadrature};

/// One filtered column aligned with its query radii.
#[derive(Debug, Clone)]
pub struct FilteredColumn {
    pub values: Vec<f64>,
    pub parity_even: bool,
    pub derivative_order: usize,
}

/// Filter output for a whole sinogram: same centers, possibly staggered
/// query radii (even dimension).
#[derive(Debug, Clone)]
pub struct FilteredSinogram {
    pub surface: Surface,
    pub centers: SurfaceQuadrature,
    pub query_radii: RadiusGrid,
    /// `data[j * query_radii.count + i]`, center-major.
    pub data: Vec<f64>,
    /// Ambient dimension the filter was built for.
    pub dimension: usize,
}

impl FilteredSinogram {
    pub fn column(&self, j: usize) -> &[f64] {
        &self.data[j * self.query_radii.count..(j + 1) * self.query_radii.count]
    }
}

/// 4th-order first derivative on a uniform grid; one-sided 4th-order
/// stencils at the two cells nearest each boundary.
fn derivative_4th(values: &[f64], h: f64) -> Vec<f64> {
    let n = values.len();
    debug_assert!(n >= 5);
    let mut out = vec![0.0; n];
    let c = 1.0 / (12.0 * h);
    out[0] = c * (-25.0 * values[0] + 48.0 * values[1] - 36.0 * values[2] + 16.0 * values[3]
        - 3.0 * values[4]);
    out[1] = c * (-3.0 * values[0] - 10.0 * values[1] + 18.0 * values[2] - 6.0 * values[3]
        + values[4]);
    for i in 2..n - 2 {
        out[i] = c * (values[i - 2] - 8.0 * values[i - 1] + 8.0 * values[i + 1] - values[i + 2]);
    }
    out[n - 2] = -c * (-3.0 * values[n - 1] - 10.0 * values[n - 2] + 18.0 * values[n - 3]
        - 6.0 * values[n - 4]
        + values[n - 5]);
    out[n - 1] = -c * (-25.0 * values[n - 1] + 48.0 * values[n - 2] - 36.0 * values[n - 3]
        + 16.0 * values[n - 4]
        - 3.0 * values[n - 5]);
    out
}

/// `k`-fold application of `D = (1/2r) d/dr` to samples on the radius grid.
pub fn apply_d_operator(values: &[f64], radii: &RadiusGrid, order: usize) -> Result<Vec<f64>> {
    if values.len() != radii.count {
        return Err(Error::argument("value count must match the radius grid"));
    }
    if values.len() < (2 * order + 3).max(5) {
        return Err(Error::argument(format!(
            "grid too short for D^{order}: need at least {} samples",
            (2 * order + 3).max(5)
        )));
    }
    let mut v = values.to_vec();
    for _ in 0..order {
        v = derivative_4th(&v, radii.step);
        for (i, slot) in v.iter_mut().enumerate() {
            *slot /= 2.0 * radii.value(i);
        }
    }
    Ok(v)
}

/// Odd-dimension filter for one column: `D^{n-1} [r^{-1} g]` on the same grid.
pub fn filter_column_odd(column: &[f64], radii: &RadiusGrid, n: usize) -> Result<FilteredColumn> {
    if n < 3 || n % 2 == 0 {
        return Err(Error::argument("odd filter needs odd n >= 3"));
    }
    let scaled: Vec<f64> =
        column.iter().enumerate().map(|(i, g)| g / radii.value(i)).collect();
    let values = apply_d_operator(&scaled, radii, n - 1)?;
    Ok(FilteredColumn { values, parity_even: false, derivative_order: n - 1 })
}

/// Even-dimension filter for one column: the staggered-grid principal-value
/// integral evaluated at each query radius.
pub fn filter_column_even_pv(
    column: &[f64],
    radii: &RadiusGrid,
    n: usize,
    query_radii: &[f64],
) -> Result<FilteredColumn> {
    if n < 2 || n % 2 == 1 {
        return Err(Error::argument("even filter needs even n >= 2"));
    }
    let scaled: Vec<f64> =
        column.iter().enumerate().map(|(i, g)| g / radii.value(i)).collect();
    let w = apply_d_operator(&scaled, radii, n - 1)?;

    let h = radii.step;
    let r_max = radii.last();
    let mut values = Vec::with_capacity(query_radii.len());
    for &rho in query_radii {
        if rho > r_max + h {
            return Err(Error::Coverage(format!(
                "query radius {rho} beyond data range {r_max} + step"
            )));
        }
        // Nearest tau node; collision breaks the symmetric cancellation.
        let j_near = ((rho - radii.start) / h).round();
        let tau_near = radii.start + j_near * h;
        if (rho - tau_near).abs() < 1e-9 * h {
            return Err(Error::SingularNode(format!(
                "query radius {rho} coincides with a tau node"
            )));
        }
        // Midpoint cells around the data nodes tile [h/2, r_max + h/2];
        // the first node also absorbs the [0, h/2] sliver (the integrand
        // need not vanish at tau = 0) and the last weight is halved so the
        // integral ends at r_max. Interior weights stay equal, which is
        // what realizes the symmetric cancellation around tau = rho.
        let mut acc = 0.0;
        for (i, wi) in w.iter().enumerate() {
            let tau = radii.value(i);
            let cell = if i == 0 {
                1.5 * h
            } else if i + 1 == w.len() {
                0.5 * h
            } else {
                h
            };
            acc += wi * tau / (rho * rho - tau * tau) * cell;
        }
        values.push(acc);
    }
    Ok(FilteredColumn { values, parity_even: true, derivative_order: n - 1 })
}

/// Filters every column of a sinogram, dispatching on the parity of `n`.
/// Even dimension returns data on the staggered query grid.
pub fn filter_sinogram(sino: &Sinogram, n: usize) -> Result<FilteredSinogram> {
    if n < 2 {
        return Err(Error::argument("dimension must be at least 2"));
    }
    let even = n % 2 == 0;
    let query = if even { sino.radii.staggered() } else { sino.radii.clone() };
    let query_values: Vec<f64> = query.values().collect();
    let nr = query.count;

    let columns: Vec<Result<Vec<f64>>> = crate::map_indexed(sino.n_centers(), |j| {
        let col = sino.column(j);
        let filtered = if even {
            filter_column_even_pv(col, &sino.radii, n, &query_values)?
        } else {
            filter_column_odd(col, &sino.radii, n)?
        };
        Ok(filtered.values)
    });
    let mut data = vec![0.0; sino.n_centers() * nr];
    for (j, col) in columns.into_iter().enumerate() {
        data[j * nr..(j + 1) * nr].copy_from_slice(&col?);
    }
    Ok(FilteredSinogram {
        surface: sino.surface.clone(),
        centers: sino.centers.clone(),
        query_radii: query,
        data,
        dimension: n,
    })
}
