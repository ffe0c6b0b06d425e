//! Shared test oracles: a deterministic generator and an independent
//! polynomial-interpolation oracle (used to cross-check the closed-form
//! symbol expansions against pointwise numeric evaluations).

/// Minimal SplitMix-style generator; deterministic and seed-stable.
pub struct TestRng(u64);

impl TestRng {
    pub fn new(seed: u64) -> Self {
        TestRng(seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(0x2545f4914f6cdd1d))
    }

    pub fn next_f64(&mut self) -> f64 {
        self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (self.0 >> 11) as f64 / (1u64 << 53) as f64
    }

    /// Uniform in [lo, hi).
    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }
}

/// Exponent vectors of all monomials in `nvars` variables with total
/// degree at most `max_deg`, in a fixed order.
pub fn monomials(nvars: usize, max_deg: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut current = vec![0u32; nvars];
    fill(&mut out, &mut current, 0, max_deg);
    return out;

    fn fill(out: &mut Vec<Vec<u32>>, current: &mut Vec<u32>, axis: usize, left: u32) {
        if axis == current.len() {
            out.push(current.clone());
            return;
        }
        for e in 0..=left {
            current[axis] = e;
            fill(out, current, axis + 1, left - e);
        }
        current[axis] = 0;
    }
}

fn eval_monomial(exponents: &[u32], xi: &[f64]) -> f64 {
    exponents.iter().zip(xi).map(|(e, v)| v.powi(*e as i32)).product()
}

/// Solves the square interpolation system through the sampled values and
/// returns (exponents, coefficient) pairs. Gaussian elimination with
/// partial pivoting; the basis is every monomial of degree <= max_deg.
pub fn fit_polynomial(
    probes: &[(Vec<f64>, f64)],
    nvars: usize,
    max_deg: u32,
) -> Vec<(Vec<u32>, f64)> {
    let basis = monomials(nvars, max_deg);
    let m = basis.len();
    assert!(probes.len() >= m, "need at least {m} probes");
    // Normal equations over all probes (least squares when over-determined).
    let mut ata = vec![0.0f64; m * m];
    let mut atb = vec![0.0f64; m];
    for (xi, value) in probes {
        let row: Vec<f64> = basis.iter().map(|e| eval_monomial(e, xi)).collect();
        for i in 0..m {
            atb[i] += row[i] * value;
            for j in 0..m {
                ata[i * m + j] += row[i] * row[j];
            }
        }
    }
    // In-place Gaussian elimination with partial pivoting.
    for col in 0..m {
        let mut pivot = col;
        for row in col + 1..m {
            if ata[row * m + col].abs() > ata[pivot * m + col].abs() {
                pivot = row;
            }
        }
        if pivot != col {
            for j in 0..m {
                ata.swap(col * m + j, pivot * m + j);
            }
            atb.swap(col, pivot);
        }
        let diag = ata[col * m + col];
        assert!(diag.abs() > 1e-300, "singular interpolation system");
        for row in col + 1..m {
            let factor = ata[row * m + col] / diag;
            if factor == 0.0 {
                continue;
            }
            for j in col..m {
                ata[row * m + j] -= factor * ata[col * m + j];
            }
            atb[row] -= factor * atb[col];
        }
    }
    let mut coeffs = vec![0.0f64; m];
    for col in (0..m).rev() {
        let mut acc = atb[col];
        for j in col + 1..m {
            acc -= ata[col * m + j] * coeffs[j];
        }
        coeffs[col] = acc / ata[col * m + col];
    }
    basis.into_iter().zip(coeffs).collect()
}
