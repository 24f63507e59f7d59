//! Coverage-region computation, optimal relay placement by inverting the
//! rate-distance relation, and the sweep tables behind the standard plots.
//!
//! A coverage region is a boolean mask over a destination grid: a cell is
//! covered when the selected strategy supports the target rate there. Only
//! the upper half-plane is evaluated; the geometry is symmetric in the
//! destination's y-coordinate, so the lower half is mirrored.
//!
//! Channel draws are shared across all grid cells (one draw set per seed),
//! which keeps region boundaries free of cell-to-cell sampling speckle and
//! makes decode-and-forward regions nest inside cut-set regions exactly.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::capacity::{exact_ergodic_rate, high_snr_rate, mimo_distance_from_siso, LinkShape};
use crate::channel::{effective_snr, sample_channel_realization, AntennaConfig};
use crate::error::{Error, Result};
use crate::linalg::{log2_det_hermitian_inplace, set_identity_plus_scaled};
use crate::rng::{chunk_count, chunk_range, SubstreamRng};
use crate::scenario::ScenarioConfig;

/// Bisection iteration cap for the placement solver.
const BISECTION_MAX_ITER: u32 = 200;
/// Initial bisection bracket.
const BRACKET_LO: f64 = 1e-3;
const BRACKET_HI: f64 = 10.0;
/// Smallest distance probed while growing the bracket downward.
const MIN_DISTANCE: f64 = 1e-6;
/// Hard ceiling while growing the bracket upward.
const MAX_DISTANCE: f64 = 1e12;

/// Result of the relay-placement solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlacementSolution {
    /// Largest source-relay distance at which the link still carries the
    /// target rate.
    pub distance: f64,
    /// Exact rate evaluated at `distance`.
    pub rate_at_distance: f64,
    /// Bisection iterations performed.
    pub iterations: u32,
}

/// Solve `exact_ergodic_rate(shape, power * d^-eta) = target_rate` for `d`.
///
/// The rate is strictly decreasing in distance, so bisection applies once a
/// bracket straddles the target. The bracket starts at `[1e-3, 10]` and
/// grows geometrically; if the target exceeds the rate at distance `1e-6`
/// the solve is declared unachievable.
pub fn optimal_relay_location(
    target_rate: f64,
    power: f64,
    shape: &LinkShape,
    path_loss_exp: f64,
    distance_tol: f64,
) -> Result<PlacementSolution> {
    if !(target_rate > 0.0) || !target_rate.is_finite() {
        return Err(Error::OutOfRange(format!(
            "target rate must be positive and finite, got {target_rate}"
        )));
    }
    if !(power > 0.0) {
        return Err(Error::OutOfRange(format!(
            "power must be positive, got {power}"
        )));
    }
    if !(distance_tol > 0.0) {
        return Err(Error::OutOfRange(format!(
            "distance tolerance must be positive, got {distance_tol}"
        )));
    }
    let rate_at = |d: f64| -> Result<f64> {
        exact_ergodic_rate(shape, effective_snr(power, d, path_loss_exp)?)
    };

    let mut lo = BRACKET_LO;
    let mut rate_lo = rate_at(lo)?;
    while rate_lo < target_rate && lo > MIN_DISTANCE {
        lo = (lo / 2.0).max(MIN_DISTANCE);
        rate_lo = rate_at(lo)?;
    }
    if rate_lo < target_rate {
        return Err(Error::Unachievable(format!(
            "target rate {target_rate} bps/Hz exceeds the rate {rate_lo:.6} at distance {MIN_DISTANCE}"
        )));
    }
    let mut hi = BRACKET_HI;
    let mut rate_hi = rate_at(hi)?;
    while rate_hi >= target_rate {
        hi *= 2.0;
        if hi > MAX_DISTANCE {
            return Err(Error::NoConvergence(format!(
                "bracket grew past {MAX_DISTANCE} without dropping below the target rate"
            )));
        }
        rate_hi = rate_at(hi)?;
    }

    let mut iterations = 0;
    while hi - lo > distance_tol {
        iterations += 1;
        if iterations > BISECTION_MAX_ITER {
            return Err(Error::NoConvergence(format!(
                "bisection exceeded {BISECTION_MAX_ITER} iterations (bracket [{lo}, {hi}])"
            )));
        }
        let mid = 0.5 * (lo + hi);
        if rate_at(mid)? >= target_rate {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let distance = 0.5 * (lo + hi);
    Ok(PlacementSolution {
        distance,
        rate_at_distance: rate_at(distance)?,
        iterations,
    })
}

/// Rectangular destination grid. Cell centers sit at
/// `x_min + i * resolution` and `j * resolution`; rows at negative y are
/// mirrored from the computed upper half-plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    /// The grid spans `[-y_max, y_max]` vertically.
    pub y_max: f64,
    /// Cell edge length.
    pub resolution: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            x_min: -2.0,
            x_max: 4.0,
            y_max: 3.0,
            resolution: 0.05,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.x_min < self.x_max) {
            return Err(Error::OutOfRange(format!(
                "grid needs x_min < x_max, got [{}, {}]",
                self.x_min, self.x_max
            )));
        }
        if !(self.y_max > 0.0) {
            return Err(Error::OutOfRange(format!(
                "grid needs y_max > 0, got {}",
                self.y_max
            )));
        }
        if !(self.resolution > 0.0) {
            return Err(Error::OutOfRange(format!(
                "grid resolution must be positive, got {}",
                self.resolution
            )));
        }
        let cells = self.nx().checked_mul(self.ny_full());
        match cells {
            Some(c) if c <= 50_000_000 => Ok(()),
            _ => Err(Error::OutOfRange(
                "grid exceeds 50 million cells; refine the extent or resolution".into(),
            )),
        }
    }

    /// Columns.
    pub fn nx(&self) -> usize {
        ((self.x_max - self.x_min) / self.resolution + 1e-9).floor() as usize + 1
    }

    /// Rows in the computed half (y >= 0).
    pub fn ny_half(&self) -> usize {
        (self.y_max / self.resolution + 1e-9).floor() as usize + 1
    }

    /// Rows in the full mirrored grid.
    pub fn ny_full(&self) -> usize {
        2 * self.ny_half() - 1
    }

    pub fn x_at(&self, ix: usize) -> f64 {
        self.x_min + ix as f64 * self.resolution
    }

    /// y-coordinate of full-grid row `iy` (row `ny_half - 1` is the axis).
    pub fn y_at(&self, iy: usize) -> f64 {
        (iy as f64 - (self.ny_half() - 1) as f64) * self.resolution
    }
}

/// Which rate decides coverage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoverageMode {
    /// Decode-and-forward achievable rate: min(relay link, MAC cut).
    Df,
    /// Cut-set upper bound: min(broadcast cut, MAC cut).
    Cs,
    /// Direct link only.
    NoRelay,
}

impl CoverageMode {
    pub fn name(&self) -> &'static str {
        match self {
            CoverageMode::Df => "df",
            CoverageMode::Cs => "cs",
            CoverageMode::NoRelay => "norelay",
        }
    }
}

impl std::str::FromStr for CoverageMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "df" => Ok(CoverageMode::Df),
            "cs" => Ok(CoverageMode::Cs),
            "norelay" => Ok(CoverageMode::NoRelay),
            other => Err(Error::OutOfRange(format!(
                "unknown coverage mode '{other}' (expected df, cs, or norelay)"
            ))),
        }
    }
}

/// Boolean coverage mask over the full mirrored grid, with its area.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageRegion {
    pub grid: GridSpec,
    pub mode: CoverageMode,
    pub rate_threshold: f64,
    nx: usize,
    ny_full: usize,
    mask: Vec<bool>,
}

impl CoverageRegion {
    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny_full
    }

    pub fn covered(&self, ix: usize, iy: usize) -> bool {
        self.mask[iy * self.nx + ix]
    }

    pub fn covered_count(&self) -> usize {
        self.mask.iter().filter(|&&c| c).count()
    }

    /// Covered-cell count times the cell area.
    pub fn area(&self) -> f64 {
        self.covered_count() as f64 * self.grid.resolution * self.grid.resolution
    }

    /// Cell-by-cell containment check.
    pub fn is_subset_of(&self, other: &CoverageRegion) -> bool {
        self.nx == other.nx
            && self.ny_full == other.ny_full
            && self.mask.iter().zip(&other.mask).all(|(a, b)| !*a || *b)
    }
}

/// Scalar area summary of a region.
pub fn region_area(region: &CoverageRegion) -> f64 {
    region.area()
}

/// Per-sample Hermitian Gram matrices of the shared channel draws, flattened
/// sample-major. The multiple-access cut needs the destination-side Grams;
/// the broadcast cut collapses through the determinant identity
/// `det(I + c H H^H) = det(I + c H^H H)` to source-side Grams.
struct GramCache {
    n_samples: usize,
    n3: usize,
    m1: usize,
    /// `W31 W31^H`, `n3 x n3` per sample.
    dest_direct: Vec<Complex64>,
    /// `W32 W32^H`, `n3 x n3` per sample.
    dest_relay: Vec<Complex64>,
    /// `W31^H W31`, `m1 x m1` per sample (broadcast cut only).
    src_direct: Vec<Complex64>,
    /// `W21^H W21`, `m1 x m1` per sample (broadcast cut only).
    src_relay: Vec<Complex64>,
}

impl GramCache {
    fn generate(cfg: &AntennaConfig, n_samples: usize, seed: u64, broadcast: bool) -> Self {
        let n3 = cfg.dest_rx;
        let m1 = cfg.src_tx;
        struct ChunkGrams {
            dest_direct: Vec<Complex64>,
            dest_relay: Vec<Complex64>,
            src_direct: Vec<Complex64>,
            src_relay: Vec<Complex64>,
        }
        let chunks: Vec<ChunkGrams> = (0..chunk_count(n_samples))
            .into_par_iter()
            .map(|chunk| {
                let mut rng = SubstreamRng::new(seed, chunk as u64);
                let len = chunk_range(chunk, n_samples).len();
                let mut out = ChunkGrams {
                    dest_direct: Vec::with_capacity(len * n3 * n3),
                    dest_relay: Vec::with_capacity(len * n3 * n3),
                    src_direct: Vec::new(),
                    src_relay: Vec::new(),
                };
                for _ in 0..len {
                    // draw order matches every other estimator in the crate
                    let ch = sample_channel_realization(cfg, &mut rng);
                    out.dest_direct
                        .extend_from_slice(ch.source_dest.gram().as_slice());
                    out.dest_relay
                        .extend_from_slice(ch.relay_dest.gram().as_slice());
                    if broadcast {
                        out.src_direct
                            .extend_from_slice(ch.source_dest.gram_transposed().as_slice());
                        out.src_relay
                            .extend_from_slice(ch.source_relay.gram_transposed().as_slice());
                    }
                }
                out
            })
            .collect();
        let mut cache = GramCache {
            n_samples,
            n3,
            m1,
            dest_direct: Vec::with_capacity(n_samples * n3 * n3),
            dest_relay: Vec::with_capacity(n_samples * n3 * n3),
            src_direct: Vec::new(),
            src_relay: Vec::new(),
        };
        for c in chunks {
            cache.dest_direct.extend_from_slice(&c.dest_direct);
            cache.dest_relay.extend_from_slice(&c.dest_relay);
            cache.src_direct.extend_from_slice(&c.src_direct);
            cache.src_relay.extend_from_slice(&c.src_relay);
        }
        cache
    }

    /// Mean MAC-cut rate: `E[log2 det(I + ca G31 + cc G32)]` over the
    /// cached draws, reduced in sample order.
    fn mac_cut_mean(&self, ca: f64, cc: f64, scratch: &mut Vec<Complex64>) -> Result<f64> {
        let n = self.n3;
        scratch.resize(n * n, Complex64::new(0.0, 0.0));
        let mut sum = 0.0;
        for k in 0..self.n_samples {
            let g31 = &self.dest_direct[k * n * n..(k + 1) * n * n];
            let g32 = &self.dest_relay[k * n * n..(k + 1) * n * n];
            set_identity_plus_scaled(scratch, n, &[(ca, g31), (cc, g32)]);
            sum += log2_det_hermitian_inplace(scratch, n)?;
        }
        Ok(sum / self.n_samples as f64)
    }

    /// Mean broadcast-cut rate through the source-side Grams:
    /// `E[log2 det(I + c (a^2 S31 + b^2 S21))]`.
    fn broadcast_cut_mean(&self, ca: f64, cb: f64, scratch: &mut Vec<Complex64>) -> Result<f64> {
        let n = self.m1;
        scratch.resize(n * n, Complex64::new(0.0, 0.0));
        let mut sum = 0.0;
        for k in 0..self.n_samples {
            let s31 = &self.src_direct[k * n * n..(k + 1) * n * n];
            let s21 = &self.src_relay[k * n * n..(k + 1) * n * n];
            set_identity_plus_scaled(scratch, n, &[(ca, s31), (cb, s21)]);
            sum += log2_det_hermitian_inplace(scratch, n)?;
        }
        Ok(sum / self.n_samples as f64)
    }
}

/// Compute the coverage region for a scenario, grid, and mode.
pub fn coverage_region(
    scenario: &ScenarioConfig,
    grid: &GridSpec,
    mode: CoverageMode,
) -> Result<CoverageRegion> {
    coverage_region_with_options(scenario, grid, mode, true)
}

/// As [`coverage_region`], optionally evaluating the lower half-plane
/// directly instead of mirroring (the masks must agree; mirroring is the
/// production path).
pub fn coverage_region_with_options(
    scenario: &ScenarioConfig,
    grid: &GridSpec,
    mode: CoverageMode,
    mirror: bool,
) -> Result<CoverageRegion> {
    scenario.validate()?;
    grid.validate()?;
    let nx = grid.nx();
    let ny_half = grid.ny_half();
    let ny_full = grid.ny_full();
    let target = scenario.target_rate;
    let cfg = &scenario.antennas;
    let pw = &scenario.powers;
    let eta = scenario.path_loss_exp;
    let relay_x = scenario.relay_x;
    let b = relay_x.powf(-eta / 2.0);

    // Relay-link rate (decode-and-forward feasibility) is destination
    // independent: evaluate the closed form once.
    let relay_link = match mode {
        CoverageMode::Df => {
            let shape = LinkShape::new(cfg.src_tx, cfg.relay_rx)?;
            let rho = effective_snr(pw.source, relay_x, eta)?;
            Some(exact_ergodic_rate(&shape, rho)?)
        }
        _ => None,
    };

    if mode == CoverageMode::Df && relay_link.unwrap() < target {
        // the relay cannot decode the target rate anywhere
        return Ok(CoverageRegion {
            grid: *grid,
            mode,
            rate_threshold: target,
            nx,
            ny_full,
            mask: vec![false; nx * ny_full],
        });
    }

    let cache = match mode {
        CoverageMode::NoRelay => None,
        CoverageMode::Df => Some(GramCache::generate(
            cfg,
            scenario.mc.n_samples,
            scenario.mc.seed,
            false,
        )),
        CoverageMode::Cs => Some(GramCache::generate(
            cfg,
            scenario.mc.n_samples,
            scenario.mc.seed,
            true,
        )),
    };
    let no_relay_shape = LinkShape::new(cfg.src_tx, cfg.dest_rx)?;
    let half_res = grid.resolution / 2.0;

    // Evaluate rows: only the upper half when mirroring.
    let row_indices: Vec<usize> = if mirror {
        ((ny_half - 1)..ny_full).collect()
    } else {
        (0..ny_full).collect()
    };

    let cells: Vec<(usize, usize)> = row_indices
        .iter()
        .flat_map(|&iy| (0..nx).map(move |ix| (ix, iy)))
        .collect();

    // None marks cells sitting on a node where the path loss diverges;
    // they take their nearest valid neighbor's value afterwards.
    let values: Vec<Option<bool>> = cells
        .par_iter()
        .map(|&(ix, iy)| -> Result<Option<bool>> {
            let x = grid.x_at(ix);
            let y = grid.y_at(iy);
            let d_src = (x * x + y * y).sqrt();
            let d_rel = ((x - relay_x) * (x - relay_x) + y * y).sqrt();
            if d_src <= half_res || d_rel <= half_res {
                return Ok(None);
            }
            let a2 = (x * x + y * y).powf(-eta / 2.0);
            let covered = match mode {
                CoverageMode::NoRelay => {
                    let rho = effective_snr(pw.source, d_src, eta)?;
                    exact_ergodic_rate(&no_relay_shape, rho)? >= target
                }
                CoverageMode::Df => {
                    let cache = cache.as_ref().unwrap();
                    let ca = pw.source / cfg.src_tx as f64 * a2;
                    let c2 = ((x - relay_x) * (x - relay_x) + y * y).powf(-eta / 2.0);
                    let cc = pw.relay / cfg.relay_tx as f64 * c2;
                    let mut scratch = Vec::new();
                    cache.mac_cut_mean(ca, cc, &mut scratch)? >= target
                }
                CoverageMode::Cs => {
                    let cache = cache.as_ref().unwrap();
                    let ca = pw.source / cfg.src_tx as f64 * a2;
                    let c2 = ((x - relay_x) * (x - relay_x) + y * y).powf(-eta / 2.0);
                    let cc = pw.relay / cfg.relay_tx as f64 * c2;
                    let mut scratch = Vec::new();
                    let mac = cache.mac_cut_mean(ca, cc, &mut scratch)?;
                    if mac < target {
                        false
                    } else {
                        let cb = pw.source / cfg.src_tx as f64 * b * b;
                        cache.broadcast_cut_mean(ca, cb, &mut scratch)? >= target
                    }
                }
            };
            Ok(Some(covered))
        })
        .collect::<Result<Vec<_>>>()?;

    // Scatter into the computed-half mask, fill degenerate cells from the
    // nearest valid neighbor, then mirror.
    let rows = row_indices.len();
    let mut half_mask: Vec<Option<bool>> = vec![None; rows * nx];
    for (slot, value) in half_mask.iter_mut().zip(values) {
        *slot = value;
    }
    fill_degenerate_cells(&mut half_mask, nx, rows);

    let mut mask = vec![false; nx * ny_full];
    for (r, &iy) in row_indices.iter().enumerate() {
        for ix in 0..nx {
            mask[iy * nx + ix] = half_mask[r * nx + ix].unwrap_or(false);
        }
    }
    if mirror {
        let axis = ny_half - 1;
        for iy in 0..axis {
            let src = 2 * axis - iy;
            for ix in 0..nx {
                mask[iy * nx + ix] = mask[src * nx + ix];
            }
        }
    }

    Ok(CoverageRegion {
        grid: *grid,
        mode,
        rate_threshold: target,
        nx,
        ny_full,
        mask,
    })
}

/// Replace `None` cells with the value of the nearest computed cell.
/// Candidates are ordered by squared distance, then |dy|, |dx|, then sign,
/// so the choice is deterministic and mirror-symmetric in value.
fn fill_degenerate_cells(mask: &mut [Option<bool>], nx: usize, ny: usize) {
    let holes: Vec<usize> = (0..mask.len()).filter(|&i| mask[i].is_none()).collect();
    for idx in holes {
        let ix = (idx % nx) as i64;
        let iy = (idx / nx) as i64;
        let mut best: Option<(i64, i64, i64, i64, i64, bool)> = None;
        // search rings of growing radius until a computed cell appears
        'search: for radius in 1..=(nx.max(ny) as i64) {
            for dy in -radius..=radius {
                for dx in -radius..=radius {
                    if dx.abs().max(dy.abs()) != radius {
                        continue;
                    }
                    let (cx, cy) = (ix + dx, iy + dy);
                    if cx < 0 || cy < 0 || cx >= nx as i64 || cy >= ny as i64 {
                        continue;
                    }
                    if let Some(v) = mask[(cy * nx as i64 + cx) as usize] {
                        let key = (dx * dx + dy * dy, dy.abs(), dx.abs(), dy, dx, v);
                        if best.is_none_or(|b| {
                            (key.0, key.1, key.2, key.3, key.4) < (b.0, b.1, b.2, b.3, b.4)
                        }) {
                            best = Some(key);
                        }
                    }
                }
            }
            if let Some(b) = best {
                // a farther ring cannot beat a hit in this ring
                if b.0 <= radius * radius {
                    break 'search;
                }
            }
        }
        mask[idx] = Some(best.map(|b| b.5).unwrap_or(false));
    }
}

/// One row of the rate-distance table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateDistancePoint {
    pub distance: f64,
    pub rate_exact: f64,
    pub rate_high_snr: f64,
}

/// Exact and high-SNR rates along a distance grid (must be positive and
/// ascending). Both columns decrease strictly in distance.
pub fn rate_vs_distance_sweep(
    shape: &LinkShape,
    power: f64,
    path_loss_exp: f64,
    distances: &[f64],
) -> Result<Vec<RateDistancePoint>> {
    check_grid(distances)?;
    distances
        .iter()
        .map(|&d| {
            let rho = effective_snr(power, d, path_loss_exp)?;
            Ok(RateDistancePoint {
                distance: d,
                rate_exact: exact_ergodic_rate(shape, rho)?,
                rate_high_snr: high_snr_rate(shape, rho)?,
            })
        })
        .collect()
}

/// One row of the antenna-scaling table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AntennaRatioPoint {
    pub d1_star: f64,
    /// Multi-antenna optimal distance over the single-antenna one.
    pub ratio: f64,
}

/// Ratio of the rescaled multi-antenna distance to the single-antenna one,
/// along a grid of single-antenna distances.
pub fn antenna_ratio_sweep(
    d1_grid: &[f64],
    power: f64,
    shape: &LinkShape,
    path_loss_exp: f64,
) -> Result<Vec<AntennaRatioPoint>> {
    check_grid(d1_grid)?;
    d1_grid
        .iter()
        .map(|&d1| {
            let d = mimo_distance_from_siso(d1, power, shape, path_loss_exp)?;
            Ok(AntennaRatioPoint {
                d1_star: d1,
                ratio: d / d1,
            })
        })
        .collect()
}

/// One row of the rate-versus-antennas table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateAntennasPoint {
    pub antennas: usize,
    pub rate: f64,
}

/// Exact rate for symmetric antenna counts at a fixed link distance.
pub fn rate_vs_antennas_sweep(
    antenna_counts: &[usize],
    distance: f64,
    power: f64,
    path_loss_exp: f64,
) -> Result<Vec<RateAntennasPoint>> {
    if antenna_counts.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::OutOfRange("antenna counts must be ascending".into()));
    }
    let rho = effective_snr(power, distance, path_loss_exp)?;
    antenna_counts
        .iter()
        .map(|&n| {
            let shape = LinkShape::new(n, n)?;
            Ok(RateAntennasPoint {
                antennas: n,
                rate: exact_ergodic_rate(&shape, rho)?,
            })
        })
        .collect()
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::OutOfRange("distance grid is empty".into()));
    }
    if grid.iter().any(|&d| !(d > 0.0)) {
        return Err(Error::OutOfRange("distance grid must be positive".into()));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::OutOfRange("distance grid must be ascending".into()));
    }
    Ok(())
}

/// Boundary of a coverage region as polylines over cell-edge midpoints
/// (marching squares on the mask). Presentation output only.
pub fn boundary_polylines(region: &CoverageRegion) -> Vec<Vec<(f64, f64)>> {
    let nx = region.nx;
    let ny = region.ny_full;
    // segment endpoints on the half-step lattice: (2*ix + 1, 2*iy) etc.
    let mut segments: Vec<((i64, i64), (i64, i64))> = Vec::new();
    for iy in 0..ny.saturating_sub(1) {
        for ix in 0..nx.saturating_sub(1) {
            let case = (region.covered(ix, iy) as u8)
                | (region.covered(ix + 1, iy) as u8) << 1
                | (region.covered(ix + 1, iy + 1) as u8) << 2
                | (region.covered(ix, iy + 1) as u8) << 3;
            let (x2, y2) = (2 * ix as i64, 2 * iy as i64);
            let south = (x2 + 1, y2);
            let east = (x2 + 2, y2 + 1);
            let north = (x2 + 1, y2 + 2);
            let west = (x2, y2 + 1);
            let mut push = |a: (i64, i64), b: (i64, i64)| {
                segments.push(if a <= b { (a, b) } else { (b, a) });
            };
            match case {
                0 | 15 => {}
                1 | 14 => push(south, west),
                2 | 13 => push(south, east),
                3 | 12 => push(west, east),
                4 | 11 => push(east, north),
                6 | 9 => push(south, north),
                7 | 8 => push(west, north),
                5 => {
                    push(south, west);
                    push(east, north);
                }
                10 => {
                    push(south, east);
                    push(west, north);
                }
                _ => unreachable!(),
            }
        }
    }
    stitch_segments(segments)
        .into_iter()
        .map(|chain| {
            chain
                .into_iter()
                .map(|(u, v)| {
                    (
                        region.grid.x_min + u as f64 * region.grid.resolution / 2.0,
                        (v as f64 / 2.0 - (region.grid.ny_half() - 1) as f64)
                            * region.grid.resolution,
                    )
                })
                .collect()
        })
        .collect()
}

/// Chain segments into polylines, starting at the smallest open endpoint.
fn stitch_segments(mut segments: Vec<((i64, i64), (i64, i64))>) -> Vec<Vec<(i64, i64)>> {
    use std::collections::BTreeMap;
    segments.sort();
    segments.dedup();
    let mut adjacency: BTreeMap<(i64, i64), Vec<usize>> = BTreeMap::new();
    for (i, &(a, b)) in segments.iter().enumerate() {
        adjacency.entry(a).or_default().push(i);
        adjacency.entry(b).or_default().push(i);
    }
    let mut used = vec![false; segments.len()];
    let mut polylines = Vec::new();
    // open chains first (odd-degree endpoints), then remaining loops
    for open_pass in [true, false] {
        let starts: Vec<(i64, i64)> = adjacency
            .iter()
            .filter(|(_, segs)| !open_pass || segs.len() % 2 == 1)
            .map(|(&p, _)| p)
            .collect();
        for start in starts {
            while let Some(&first) = adjacency[&start].iter().find(|&&i| !used[i]) {
                let mut chain = vec![start];
                let mut cursor = start;
                let mut seg = first;
                loop {
                    used[seg] = true;
                    let (a, b) = segments[seg];
                    cursor = if a == cursor { b } else { a };
                    chain.push(cursor);
                    match adjacency[&cursor].iter().find(|&&i| !used[i]) {
                        Some(&next) => seg = next,
                        None => break,
                    }
                }
                polylines.push(chain);
            }
        }
    }
    polylines
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::McParams;

    fn shape(src_tx: usize, rx: usize) -> LinkShape {
        LinkShape::new(src_tx, rx).unwrap()
    }

    fn small_grid() -> GridSpec {
        GridSpec {
            x_min: -1.0,
            x_max: 2.0,
            y_max: 1.0,
            resolution: 0.25,
        }
    }

    fn fast_scenario() -> ScenarioConfig {
        ScenarioConfig {
            mc: McParams {
                n_samples: 800,
                seed: 21,
            },
            ..Default::default()
        }
    }

    #[test]
    fn placement_siso_unit_distance() {
        // rate at rho = 10 for the single-antenna link; solving for that
        // rate must return distance 1
        let target = 2.906_514_808_414_805;
        let sol = optimal_relay_location(target, 10.0, &shape(1, 1), 3.52, 1e-5).unwrap();
        assert!((sol.distance - 1.0).abs() < 1e-4, "{}", sol.distance);
        assert!((sol.rate_at_distance - target).abs() < 1e-3);
    }

    #[test]
    fn placement_monotone_in_target() {
        let s = shape(2, 2);
        let d_low = optimal_relay_location(3.0, 10.0, &s, 3.52, 1e-5).unwrap();
        let d_high = optimal_relay_location(6.0, 10.0, &s, 3.52, 1e-5).unwrap();
        assert!(d_low.distance > d_high.distance);
    }

    #[test]
    fn placement_unachievable() {
        let err = optimal_relay_location(1e9, 10.0, &shape(2, 2), 3.52, 1e-4);
        assert!(matches!(err, Err(Error::Unachievable(_))), "{err:?}");
    }

    #[test]
    fn placement_roundtrips_rate_grid() {
        let s = shape(2, 2);
        for &rate in &[2.0, 4.0, 5.5, 8.0] {
            let sol = optimal_relay_location(rate, 10.0, &s, 3.52, 1e-6).unwrap();
            let back = exact_ergodic_rate(&s, 10.0 * sol.distance.powf(-3.52)).unwrap();
            assert!((back - rate).abs() < 1e-4, "rate {rate}: got {back}");
        }
    }

    #[test]
    fn grid_indexing() {
        let g = GridSpec::default();
        assert_eq!(g.nx(), 121);
        assert_eq!(g.ny_half(), 61);
        assert_eq!(g.ny_full(), 121);
        assert!((g.x_at(0) - (-2.0)).abs() < 1e-12);
        assert!((g.y_at(60)).abs() < 1e-12);
        assert!((g.y_at(0) - (-3.0)).abs() < 1e-12);
    }

    #[test]
    fn grid_validation() {
        let g = GridSpec {
            resolution: -0.1,
            ..GridSpec::default()
        };
        assert!(g.validate().is_err());
        let g = GridSpec {
            x_min: 5.0,
            ..GridSpec::default()
        };
        assert!(g.validate().is_err());
    }

    #[test]
    fn unattainable_rate_empty_region() {
        let mut scenario = fast_scenario();
        scenario.target_rate = 1e6;
        let region = coverage_region(&scenario, &small_grid(), CoverageMode::Df).unwrap();
        assert_eq!(region.covered_count(), 0);
        assert_eq!(region.area(), 0.0);
    }

    #[test]
    fn cached_cell_rates_match_direct_estimator() {
        // the cached-Gram cell evaluation (MAC cut directly, broadcast cut
        // through the determinant identity) must reproduce the plain
        // per-realization estimator on the same draws
        let scenario = fast_scenario();
        let cfg = &scenario.antennas;
        let cache = GramCache::generate(cfg, scenario.mc.n_samples, scenario.mc.seed, true);
        for &(x, y) in &[(1.3, 0.4), (0.2, -0.9)] {
            let report = crate::estimate_bounds(&scenario, x, y).unwrap();
            let a2 = (x * x + y * y).powf(-scenario.path_loss_exp / 2.0);
            let c2 = ((x - scenario.relay_x) * (x - scenario.relay_x) + y * y)
                .powf(-scenario.path_loss_exp / 2.0);
            let b2 = scenario.relay_x.powf(-scenario.path_loss_exp);
            let ca = scenario.powers.source / cfg.src_tx as f64 * a2;
            let cc = scenario.powers.relay / cfg.relay_tx as f64 * c2;
            let cb = scenario.powers.source / cfg.src_tx as f64 * b2;
            let mut scratch = Vec::new();
            let mac = cache.mac_cut_mean(ca, cc, &mut scratch).unwrap();
            let broadcast = cache.broadcast_cut_mean(ca, cb, &mut scratch).unwrap();
            assert!(
                (mac - report.mac_cut.mean).abs() < 1e-12,
                "mac {mac} vs {}",
                report.mac_cut.mean
            );
            assert!(
                (broadcast - report.broadcast_cut.mean).abs() < 1e-10,
                "broadcast {broadcast} vs {}",
                report.broadcast_cut.mean
            );
        }
    }

    #[test]
    fn mask_is_mirror_symmetric() {
        let scenario = fast_scenario();
        let grid = small_grid();
        for mode in [CoverageMode::Df, CoverageMode::Cs, CoverageMode::NoRelay] {
            let mirrored = coverage_region(&scenario, &grid, mode).unwrap();
            let full = coverage_region_with_options(&scenario, &grid, mode, false).unwrap();
            assert_eq!(mirrored, full, "mode {mode:?}");
            for iy in 0..mirrored.ny() {
                for ix in 0..mirrored.nx() {
                    let flipped = mirrored.ny() - 1 - iy;
                    assert_eq!(mirrored.covered(ix, iy), mirrored.covered(ix, flipped));
                }
            }
        }
    }

    #[test]
    fn df_region_within_cs_region() {
        let scenario = fast_scenario();
        let grid = small_grid();
        let df = coverage_region(&scenario, &grid, CoverageMode::Df).unwrap();
        let cs = coverage_region(&scenario, &grid, CoverageMode::Cs).unwrap();
        assert!(df.is_subset_of(&cs));
    }

    #[test]
    fn no_relay_region_is_a_disk() {
        let mut scenario = fast_scenario();
        scenario.target_rate = 4.0;
        let grid = GridSpec {
            x_min: -2.0,
            x_max: 2.0,
            y_max: 2.0,
            resolution: 0.1,
        };
        let region = coverage_region(&scenario, &grid, CoverageMode::NoRelay).unwrap();
        assert!(region.covered_count() > 0);
        let mut covered_max: f64 = 0.0;
        let mut uncovered_min = f64::INFINITY;
        for iy in 0..region.ny() {
            for ix in 0..region.nx() {
                let r = (grid.x_at(ix).powi(2) + grid.y_at(iy).powi(2)).sqrt();
                if region.covered(ix, iy) {
                    covered_max = covered_max.max(r);
                } else {
                    uncovered_min = uncovered_min.min(r);
                }
            }
        }
        assert!(
            covered_max - uncovered_min <= 2.0 * grid.resolution,
            "covered_max {covered_max}, uncovered_min {uncovered_min}"
        );
    }

    #[test]
    fn coverage_grows_with_power() {
        let base = fast_scenario();
        let mut boosted = base;
        boosted.powers = crate::channel::PowerBudget::from_db(13.0, 13.0);
        let grid = small_grid();
        for mode in [CoverageMode::Df, CoverageMode::Cs, CoverageMode::NoRelay] {
            let small = coverage_region(&base, &grid, mode).unwrap();
            let large = coverage_region(&boosted, &grid, mode).unwrap();
            assert!(small.is_subset_of(&large), "mode {mode:?}");
        }
    }

    #[test]
    fn region_area_arithmetic() {
        // full 10x10 mask at resolution 0.1 has area 1.0
        let grid = GridSpec {
            x_min: 0.0,
            x_max: 0.9,
            y_max: 0.45,
            resolution: 0.1,
        };
        let region = CoverageRegion {
            grid,
            mode: CoverageMode::NoRelay,
            rate_threshold: 1.0,
            nx: 10,
            ny_full: 10,
            mask: vec![true; 100],
        };
        assert!((region_area(&region) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sweep_tables() {
        let d_grid: Vec<f64> = (1..=20).map(|k| 0.2 + 0.1 * k as f64).collect();
        let table = rate_vs_distance_sweep(&shape(2, 2), 10.0, 3.52, &d_grid).unwrap();
        for w in table.windows(2) {
            assert!(w[1].rate_exact < w[0].rate_exact);
            assert!(w[1].rate_high_snr < w[0].rate_high_snr);
        }
        // the two columns converge at short distance (high SNR)
        let first_gap = table[0].rate_exact - table[0].rate_high_snr;
        let last_gap = table.last().unwrap().rate_exact - table.last().unwrap().rate_high_snr;
        assert!(first_gap < last_gap);

        let ratios = antenna_ratio_sweep(&d_grid, 10.0, &shape(1, 1), 3.52).unwrap();
        assert!(ratios.iter().all(|p| (p.ratio - 1.0).abs() < 1e-12));
        let ratios = antenna_ratio_sweep(&d_grid, 100.0, &shape(4, 4), 3.52).unwrap();
        assert!(ratios.iter().all(|p| p.ratio > 0.0));
        for w in ratios.windows(2) {
            assert!(w[1].ratio < w[0].ratio, "ratio must fall as d1* grows");
        }
        // at fixed d1*, more power widens the multi-antenna advantage
        let lo_p = antenna_ratio_sweep(&[1.0], 10.0, &shape(4, 4), 3.52).unwrap();
        let hi_p = antenna_ratio_sweep(&[1.0], 1000.0, &shape(4, 4), 3.52).unwrap();
        assert!(hi_p[0].ratio > lo_p[0].ratio);

        let rates = rate_vs_antennas_sweep(&[1, 2, 3, 4], 1.0, 10.0, 3.52).unwrap();
        assert!((rates[0].rate - 2.906_514_808_414_805).abs() < 1e-9);
        for w in rates.windows(2) {
            assert!(w[1].rate > w[0].rate);
        }

        assert!(rate_vs_distance_sweep(&shape(1, 1), 10.0, 3.52, &[0.5, 0.4]).is_err());
        assert!(rate_vs_antennas_sweep(&[2, 2], 1.0, 10.0, 3.52).is_err());
    }

    #[test]
    fn area_stable_under_grid_refinement() {
        // same shared draws, finer grid: the area moves by discretization
        // only, under 5% for a smooth region
        let mut scenario = ScenarioConfig::default();
        scenario.mc.n_samples = 2000;
        let coarse_grid = GridSpec {
            resolution: 0.1,
            ..GridSpec::default()
        };
        let fine_grid = GridSpec {
            resolution: 0.05,
            ..GridSpec::default()
        };
        let coarse = coverage_region(&scenario, &coarse_grid, CoverageMode::Df).unwrap();
        let fine = coverage_region(&scenario, &fine_grid, CoverageMode::Df).unwrap();
        let rel = (coarse.area() - fine.area()).abs() / fine.area();
        assert!(
            rel < 0.05,
            "area {} vs {} ({rel:.3} relative)",
            coarse.area(),
            fine.area()
        );
    }

    #[test]
    fn boundary_of_empty_region_is_empty() {
        let mut scenario = fast_scenario();
        scenario.target_rate = 1e6;
        let region = coverage_region(&scenario, &small_grid(), CoverageMode::Df).unwrap();
        assert!(boundary_polylines(&region).is_empty());
    }

    #[test]
    fn boundary_encloses_disk() {
        let mut scenario = fast_scenario();
        scenario.target_rate = 4.0;
        let grid = GridSpec {
            x_min: -2.0,
            x_max: 2.0,
            y_max: 2.0,
            resolution: 0.1,
        };
        let region = coverage_region(&scenario, &grid, CoverageMode::NoRelay).unwrap();
        let lines = boundary_polylines(&region);
        assert!(!lines.is_empty());
        let vertices: usize = lines.iter().map(|l| l.len()).sum();
        assert!(vertices > 8);
    }
}
