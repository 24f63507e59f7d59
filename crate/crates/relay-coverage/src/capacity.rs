//! Closed-form ergodic rates for the uncorrelated Rayleigh MIMO link with
//! receiver-only channel knowledge: the exact finite-SNR expression, its
//! high-SNR approximation, the Wishart log-determinant expectation behind
//! it, and the multi-antenna rescaling of the optimal relay distance.

use crate::channel::MAX_ANTENNAS;
use crate::error::{Error, Result};
use crate::special::{gamma_int, harmonic, ln_gamma_int, upper_gamma_nonpos_scaled, PSI_ONE};

/// Cancellation-growth threshold above which a determinant is not trusted.
pub const DET_CONDITION_LIMIT: f64 = 1e12;

/// Antenna pair of a single MIMO link. The rate formulas depend on the
/// ordered pair only through `min`, `max`, and the per-transmit-antenna
/// power scaling, so the shape keeps all three accessible.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LinkShape {
    src_tx: usize,
    rx: usize,
}

impl LinkShape {
    pub fn new(src_tx: usize, rx: usize) -> Result<Self> {
        for (name, v) in [("src_tx", src_tx), ("rx", rx)] {
            if !(1..=MAX_ANTENNAS).contains(&v) {
                return Err(Error::OutOfRange(format!(
                    "{name} = {v}, link antennas must be in 1..={MAX_ANTENNAS}"
                )));
            }
        }
        Ok(Self { src_tx, rx })
    }

    pub fn src_tx(&self) -> usize {
        self.src_tx
    }

    pub fn rx(&self) -> usize {
        self.rx
    }

    /// Smaller of the two antenna counts.
    pub fn min_dim(&self) -> usize {
        self.src_tx.min(self.rx)
    }

    /// Larger of the two antenna counts.
    pub fn max_dim(&self) -> usize {
        self.src_tx.max(self.rx)
    }
}

/// Auxiliary kernel of the exact rate formula:
///
/// `h^-g * exp(1/(h e)) * sum_{p=1}^{g} (h e)^p Gamma(p - g, 1/(h e))`.
///
/// Evaluated through the scaled incomplete gamma, so the exponential
/// prefactor never overflows for small `h e`. For `e = 1` this equals
/// `integral_0^inf ln(1 + h y) y^{g-1} exp(-y) dy / Gamma(g)`, the expected
/// log term of a unit-scale gamma variate.
pub fn aux_log_moment(e: f64, h: f64, g: u32) -> Result<f64> {
    if !(e > 0.0) || !(h > 0.0) {
        return Err(Error::OutOfRange(format!(
            "aux_log_moment needs positive e and h, got e={e}, h={h}"
        )));
    }
    if g < 1 {
        return Err(Error::OutOfRange("aux_log_moment needs g >= 1".into()));
    }
    let he = h * e;
    let x = 1.0 / he;
    let mut sum = 0.0;
    let mut he_pow = 1.0;
    for p in 1..=g {
        he_pow *= he;
        sum += he_pow * upper_gamma_nonpos_scaled(p as i32 - g as i32, x)?;
    }
    let value = h.powi(-(g as i32)) * sum;
    if !value.is_finite() {
        return Err(Error::NumericalInstability(format!(
            "aux_log_moment overflowed at e={e}, h={h}, g={g}"
        )));
    }
    Ok(value)
}

/// The `m x m` gamma-weighted matrix whose determinants sum to the exact
/// ergodic rate. Entry `(i, j)` (1-based) is `Gamma(s)` with
/// `s = n - m + i + j - 1`, multiplied by the log-moment kernel
/// `aux_log_moment(1, h, s)` on row `l`.
pub fn log_moment_matrix(l: usize, shape: &LinkShape, h: f64) -> Result<Vec<Vec<f64>>> {
    let m = shape.min_dim();
    let n = shape.max_dim();
    if l < 1 || l > m {
        return Err(Error::OutOfRange(format!("row index {l} outside 1..={m}")));
    }
    if !(h > 0.0) {
        return Err(Error::OutOfRange(format!("h must be positive, got {h}")));
    }
    let mut rows = Vec::with_capacity(m);
    for i in 1..=m {
        let mut row = Vec::with_capacity(m);
        for j in 1..=m {
            let s = (n - m + i + j - 1) as u32;
            let mut entry = gamma_int(s)?;
            if i == l {
                entry *= aux_log_moment(1.0, h, s)?;
            }
            row.push(entry);
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Determinant sign and log-magnitude by partially pivoted Gaussian
/// elimination.
///
/// The condition estimate is growth-based: for each pivot, the largest
/// magnitude the pivot row ever held is compared against the pivot itself.
/// A huge ratio means the pivot emerged from catastrophic cancellation and
/// the determinant cannot be trusted; a ratio near one means every digit of
/// the factorization is genuine even when pivots differ wildly in scale.
/// Errors when the estimate exceeds [`DET_CONDITION_LIMIT`] or an entry is
/// not finite.
pub fn det_log_pivoted(matrix: &[Vec<f64>]) -> Result<(f64, f64)> {
    let m = matrix.len();
    let mut a: Vec<f64> = Vec::with_capacity(m * m);
    for row in matrix {
        if row.len() != m {
            return Err(Error::DimensionMismatch {
                expected: format!("{m}x{m}"),
                got: format!("row of length {}", row.len()),
            });
        }
        a.extend_from_slice(row);
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::NumericalInstability(
            "non-finite entry in determinant input".into(),
        ));
    }
    // largest magnitude each row has held at any point of the elimination
    let mut row_peak: Vec<f64> = (0..m)
        .map(|r| {
            a[r * m..(r + 1) * m]
                .iter()
                .fold(0.0_f64, |acc, v| acc.max(v.abs()))
        })
        .collect();
    let mut sign = 1.0;
    let mut log_abs = 0.0;
    let mut cond = 1.0_f64;
    for col in 0..m {
        let mut best = col;
        let mut best_mag = a[col * m + col].abs();
        for r in (col + 1)..m {
            let mag = a[r * m + col].abs();
            if mag > best_mag {
                best = r;
                best_mag = mag;
            }
        }
        if best_mag == 0.0 {
            // exactly singular
            return Ok((0.0, f64::NEG_INFINITY));
        }
        if best != col {
            for k in 0..m {
                a.swap(col * m + k, best * m + k);
            }
            row_peak.swap(col, best);
            sign = -sign;
        }
        let pivot = a[col * m + col];
        cond = cond.max(row_peak[col] / pivot.abs());
        sign *= pivot.signum();
        log_abs += pivot.abs().ln();
        for r in (col + 1)..m {
            let factor = a[r * m + col] / pivot;
            for k in (col + 1)..m {
                a[r * m + k] -= factor * a[col * m + k];
                row_peak[r] = row_peak[r].max(a[r * m + k].abs());
            }
            a[r * m + col] = 0.0;
        }
    }
    if !cond.is_finite() || cond > DET_CONDITION_LIMIT {
        return Err(Error::NumericalInstability(format!(
            "cancellation growth estimate {cond:.3e} exceeds {DET_CONDITION_LIMIT:.0e}"
        )));
    }
    Ok((sign, log_abs))
}

/// Plain determinant via [`det_log_pivoted`].
pub fn det_pivoted(matrix: &[Vec<f64>]) -> Result<f64> {
    let (sign, log_abs) = det_log_pivoted(matrix)?;
    Ok(sign * log_abs.exp())
}

/// Exact rate for a given per-transmit-antenna SNR `h`. The value depends
/// on the shape only through `(min, max)` once `h` is fixed.
pub(crate) fn exact_rate_given_h(m: usize, n: usize, h: f64) -> Result<f64> {
    // Kernel values for every s that appears in the matrix.
    let s_lo = n - m + 1;
    let s_hi = n + m - 1;
    let mut kernel = Vec::with_capacity(s_hi - s_lo + 1);
    for s in s_lo..=s_hi {
        kernel.push(aux_log_moment(1.0, h, s as u32)?);
    }

    // Rows are pre-divided by Gamma(n - m + i) to tame the dynamic range:
    // the scaled entry (i, j) is the rising factorial
    // (n-m+i)(n-m+i+1)...(s-1), kernel-weighted on row l. The row scales
    // cancel against Gamma_m(n) in the prefactor, leaving Gamma_m(m).
    let mut log_dets = Vec::with_capacity(m);
    let mut signs = Vec::with_capacity(m);
    for l in 1..=m {
        let mut rows = Vec::with_capacity(m);
        for i in 1..=m {
            let base = n - m + i;
            let mut row = Vec::with_capacity(m);
            let mut rising = 1.0;
            for j in 1..=m {
                let s = base + j - 1;
                if j > 1 {
                    rising *= (s - 1) as f64;
                }
                let mut entry = rising;
                if i == l {
                    entry *= kernel[s - s_lo];
                }
                row.push(entry);
            }
            rows.push(row);
        }
        let (sign, log_abs) = det_log_pivoted(&rows)?;
        signs.push(sign);
        log_dets.push(log_abs);
    }

    let ln_mvg_mm: f64 = (1..=m).map(|p| ln_gamma_int(p as u32)).sum();
    let peak = log_dets
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max)
        .max(ln_mvg_mm);
    let mut acc = 0.0;
    for (sign, log_abs) in signs.iter().zip(&log_dets) {
        acc += sign * (log_abs - peak).exp();
    }
    let rate = acc * (peak - ln_mvg_mm).exp() / std::f64::consts::LN_2;
    if !rate.is_finite() {
        return Err(Error::NumericalInstability(format!(
            "exact rate overflowed at m={m}, n={n}, h={h}"
        )));
    }
    if rate < 0.0 {
        if rate > -1e-9 {
            return Ok(0.0);
        }
        return Err(Error::NumericalInstability(format!(
            "exact rate came out negative ({rate:e}) at m={m}, n={n}, h={h}"
        )));
    }
    Ok(rate)
}

/// Exact ergodic rate of the uncorrelated Rayleigh link at effective SNR
/// `rho`, in bps/Hz: the expectation of `log2 det(I + (rho/M1) H H^H)` over
/// i.i.d. complex Gaussian `H`, evaluated in closed form.
pub fn exact_ergodic_rate(shape: &LinkShape, rho: f64) -> Result<f64> {
    if !(rho > 0.0) {
        return Err(Error::OutOfRange(format!(
            "rho must be positive, got {rho}"
        )));
    }
    exact_rate_given_h(
        shape.min_dim(),
        shape.max_dim(),
        rho / shape.src_tx() as f64,
    )
}

/// `sum_{p=1}^{m} H_{n-p}`, the harmonic double sum of the high-SNR offset.
fn harmonic_double_sum(m: usize, n: usize) -> f64 {
    (1..=m).map(|p| harmonic((n - p) as u32)).sum()
}

/// High-SNR approximation of the ergodic rate:
/// `m log2(rho e^{psi(1)} / M1) + (1/ln2) sum_{p=1}^m sum_{q=1}^{n-p} 1/q`.
///
/// Not clamped: at low `rho` the approximation goes negative. Callers that
/// need a physical rate must use [`exact_ergodic_rate`].
pub fn high_snr_rate(shape: &LinkShape, rho: f64) -> Result<f64> {
    if !(rho > 0.0) {
        return Err(Error::OutOfRange(format!(
            "rho must be positive, got {rho}"
        )));
    }
    let m = shape.min_dim() as f64;
    let n = shape.max_dim();
    let h = rho / shape.src_tx() as f64;
    Ok(m * (h * PSI_ONE.exp()).log2()
        + harmonic_double_sum(shape.min_dim(), n) / std::f64::consts::LN_2)
}

/// `E[ln det(H H^H)]` for an `m x n` (`m <= n`) i.i.d. complex Gaussian
/// matrix: `m psi(1) + sum_{p=1}^m sum_{q=1}^{n-p} 1/q`, in natural-log
/// units. Equivalently `sum_{p=0}^{m-1} psi(n - p)`.
pub fn wishart_logdet_expectation(m: usize, n: usize) -> Result<f64> {
    if m < 1 || m > n {
        return Err(Error::OutOfRange(format!(
            "wishart expectation needs 1 <= m <= n, got m={m}, n={n}"
        )));
    }
    Ok(m as f64 * PSI_ONE + harmonic_double_sum(m, n))
}

/// High-SNR single-antenna rate `log2(P1 d^-eta e^{psi(1)})` in bps/Hz.
/// May be negative when the effective SNR is low; the exact counterpart is
/// `exact_ergodic_rate` with a (1,1) shape.
pub fn siso_rate(power: f64, distance: f64, path_loss_exp: f64) -> Result<f64> {
    if !(power > 0.0) {
        return Err(Error::OutOfRange(format!(
            "power must be positive, got {power}"
        )));
    }
    if !(distance > 0.0) {
        return Err(Error::DegenerateGeometry(format!(
            "distance must be positive, got {distance}"
        )));
    }
    Ok((power * distance.powf(-path_loss_exp) * PSI_ONE.exp()).log2())
}

/// Rescale the single-antenna optimal relay distance `d1_star` to the
/// multi-antenna link, in the high-SNR regime:
///
/// `d* = ((P1 e^{psi(1)})^{m-1} d1*^eta 2^A / M1^m)^{1/(m eta)}`
///
/// with `A = (1/ln2) sum_{p=1}^m sum_{q=1}^{n-p} 1/q`. Collapses to
/// `d1_star` for a (1,1) shape.
pub fn mimo_distance_from_siso(
    d1_star: f64,
    power: f64,
    shape: &LinkShape,
    path_loss_exp: f64,
) -> Result<f64> {
    if !(d1_star > 0.0) || !(power > 0.0) || !(path_loss_exp > 0.0) {
        return Err(Error::OutOfRange(format!(
            "all arguments must be positive, got d1*={d1_star}, power={power}, eta={path_loss_exp}"
        )));
    }
    let m = shape.min_dim();
    let n = shape.max_dim();
    let m1 = shape.src_tx() as f64;
    let a_offset = harmonic_double_sum(m, n) / std::f64::consts::LN_2;
    let numerator = (power * PSI_ONE.exp()).powi(m as i32 - 1)
        * d1_star.powf(path_loss_exp)
        * 2.0_f64.powf(a_offset);
    let value = (numerator / m1.powi(m as i32)).powf(1.0 / (m as f64 * path_loss_exp));
    if !value.is_finite() {
        return Err(Error::NumericalInstability(format!(
            "distance rescaling overflowed for shape ({}, {})",
            shape.src_tx(),
            shape.rx()
        )));
    }
    Ok(value)
}
