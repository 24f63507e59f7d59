//! Monte Carlo estimation of the receiver-CSI capacity bounds: the cut-set
//! upper bound, the decode-and-forward achievable rate, and the no-relay
//! direct-link rate.
//!
//! All estimators share channel draws within a run: one realization of the
//! three whitened matrices feeds every per-realization integrand. That makes
//! `relay_link <= broadcast_cut` hold sample by sample (adding the direct
//! rows to the stacked channel can only grow the determinant), so the
//! decode-and-forward mean never exceeds the cut-set mean, exactly rather
//! than just statistically.
//!
//! Sampling is chunked into fixed substreams ([`crate::rng::SUBSTREAM_CHUNK`]
//! samples each, one stream per chunk) and partial sums are reduced in chunk
//! order, so estimates are bit-reproducible and invariant to worker count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::capacity::{exact_ergodic_rate, LinkShape};
use crate::channel::{
    effective_snr, path_loss_coefficients, sample_channel_realization, sample_cn01_matrix,
    AntennaConfig, Geometry, PathLossCoefficients, PowerBudget,
};
use crate::error::{Error, Result};
use crate::linalg::{log2_det_identity_plus, CMatrix};
use crate::rng::{chunk_count, chunk_range, SubstreamRng};
use crate::scenario::ScenarioConfig;

/// A Monte Carlo estimate of a rate quantity in bps/Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapacityEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_samples: usize,
}

/// Estimated capacity bounds for one scenario and destination.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    /// Cut-set upper bound: min of the broadcast and multiple-access cuts.
    pub cs_bound: CapacityEstimate,
    /// Decode-and-forward achievable rate: min of the relay link and the
    /// multiple-access cut.
    pub df_rate: CapacityEstimate,
    /// Broadcast cut (source into relay + destination).
    pub broadcast_cut: CapacityEstimate,
    /// Multiple-access cut (source + relay into destination).
    pub mac_cut: CapacityEstimate,
    /// Source-relay link rate.
    pub relay_link: CapacityEstimate,
}

fn check_dims(m: &CMatrix, rows: usize, cols: usize, what: &str) -> Result<()> {
    if m.rows() != rows || m.cols() != cols {
        return Err(Error::DimensionMismatch {
            expected: format!("{rows}x{cols} for {what}"),
            got: format!("{}x{}", m.rows(), m.cols()),
        });
    }
    Ok(())
}

/// Per-realization broadcast-cut rate: `log2 det(I_N + (P1/M1) H1 H1^H)`
/// where `H1` stacks the source-destination rows over the source-relay rows,
/// each scaled by its path-loss amplitude.
pub fn broadcast_cut_rate(
    w31: &CMatrix,
    w21: &CMatrix,
    coeffs: &PathLossCoefficients,
    cfg: &AntennaConfig,
    pw: &PowerBudget,
) -> Result<f64> {
    check_dims(w31, cfg.dest_rx, cfg.src_tx, "source-destination fading")?;
    check_dims(w21, cfg.relay_rx, cfg.src_tx, "source-relay fading")?;
    let stacked = CMatrix::vstack(
        &w31.scaled(coeffs.source_dest),
        &w21.scaled(coeffs.source_relay),
    )?;
    let x = stacked.gram().scaled(pw.source / cfg.src_tx as f64);
    log2_det_identity_plus(&x)
}

/// Per-realization multiple-access-cut rate:
/// `log2 det(I_{N3} + (P1/M1) a^2 W31 W31^H + (P2/M2) c^2 W32 W32^H)`.
pub fn mac_cut_rate(
    w31: &CMatrix,
    w32: &CMatrix,
    coeffs: &PathLossCoefficients,
    cfg: &AntennaConfig,
    pw: &PowerBudget,
) -> Result<f64> {
    check_dims(w31, cfg.dest_rx, cfg.src_tx, "source-destination fading")?;
    check_dims(w32, cfg.dest_rx, cfg.relay_tx, "relay-destination fading")?;
    let a2 = coeffs.source_dest * coeffs.source_dest;
    let c2 = coeffs.relay_dest * coeffs.relay_dest;
    let mut x = w31.gram().scaled(pw.source / cfg.src_tx as f64 * a2);
    let relay_part = w32.gram().scaled(pw.relay / cfg.relay_tx as f64 * c2);
    for i in 0..x.rows() {
        for j in 0..x.cols() {
            x.set(i, j, x.get(i, j) + relay_part.get(i, j));
        }
    }
    log2_det_identity_plus(&x)
}

/// Per-realization source-relay link rate:
/// `log2 det(I_{N2} + (P1/M1) b^2 W21 W21^H)`.
pub fn relay_link_rate(
    w21: &CMatrix,
    coeffs: &PathLossCoefficients,
    cfg: &AntennaConfig,
    pw: &PowerBudget,
) -> Result<f64> {
    check_dims(w21, cfg.relay_rx, cfg.src_tx, "source-relay fading")?;
    let b2 = coeffs.source_relay * coeffs.source_relay;
    let x = w21.gram().scaled(pw.source / cfg.src_tx as f64 * b2);
    log2_det_identity_plus(&x)
}

#[derive(Clone, Copy, Default)]
struct Accumulator {
    sum: f64,
    sum_sq: f64,
}

impl Accumulator {
    fn push(&mut self, v: f64) {
        self.sum += v;
        self.sum_sq += v * v;
    }

    fn merge(&mut self, other: &Accumulator) {
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
    }

    fn estimate(&self, n: usize) -> CapacityEstimate {
        let n_f = n as f64;
        let mean = self.sum / n_f;
        let var = ((self.sum_sq - n_f * mean * mean) / (n_f - 1.0)).max(0.0);
        CapacityEstimate {
            mean,
            std_error: (var / n_f).sqrt(),
            n_samples: n,
        }
    }
}

/// Estimate the cut-set bound, decode-and-forward rate, and the three cut
/// rates for a scenario with the destination at `(dest_x, dest_y)`.
///
/// The min in the cut-set and decode-and-forward bounds applies to the
/// estimated expectations, never per sample: each cut rate is itself an
/// expectation.
pub fn estimate_bounds(
    scenario: &ScenarioConfig,
    dest_x: f64,
    dest_y: f64,
) -> Result<BoundsReport> {
    scenario.validate()?;
    if scenario.mc.n_samples < 100 {
        return Err(Error::OutOfRange(format!(
            "bounds estimation needs at least 100 samples, got {}",
            scenario.mc.n_samples
        )));
    }
    let geom = Geometry::new(scenario.relay_x, dest_x, dest_y, scenario.path_loss_exp)?;
    let coeffs = path_loss_coefficients(&geom)?;
    let cfg = &scenario.antennas;
    let pw = &scenario.powers;
    let n = scenario.mc.n_samples;
    let seed = scenario.mc.seed;

    let partials: Vec<Result<[Accumulator; 3]>> = (0..chunk_count(n))
        .into_par_iter()
        .map(|chunk| {
            let mut rng = SubstreamRng::new(seed, chunk as u64);
            let mut acc = [Accumulator::default(); 3];
            for _ in chunk_range(chunk, n) {
                let ch = sample_channel_realization(cfg, &mut rng);
                acc[0].push(broadcast_cut_rate(
                    &ch.source_dest,
                    &ch.source_relay,
                    &coeffs,
                    cfg,
                    pw,
                )?);
                acc[1].push(mac_cut_rate(
                    &ch.source_dest,
                    &ch.relay_dest,
                    &coeffs,
                    cfg,
                    pw,
                )?);
                acc[2].push(relay_link_rate(&ch.source_relay, &coeffs, cfg, pw)?);
            }
            Ok(acc)
        })
        .collect();

    let mut totals = [Accumulator::default(); 3];
    for partial in partials {
        let partial = partial?;
        for (t, p) in totals.iter_mut().zip(partial.iter()) {
            t.merge(p);
        }
    }
    let broadcast_cut = totals[0].estimate(n);
    let mac_cut = totals[1].estimate(n);
    let relay_link = totals[2].estimate(n);

    let pick_min = |a: CapacityEstimate, b: CapacityEstimate| if a.mean <= b.mean { a } else { b };
    Ok(BoundsReport {
        cs_bound: pick_min(broadcast_cut, mac_cut),
        df_rate: pick_min(relay_link, mac_cut),
        broadcast_cut,
        mac_cut,
        relay_link,
    })
}

/// Monte Carlo estimate of the ergodic rate
/// `E[log2 det(I + (rho/M1) H H^H)]` over i.i.d. complex Gaussian `H`.
/// This is the sampling cross-check for the closed-form rate.
pub fn mc_ergodic_rate(
    shape: &LinkShape,
    rho: f64,
    n_samples: usize,
    seed: u64,
) -> Result<CapacityEstimate> {
    if !(rho > 0.0) {
        return Err(Error::OutOfRange(format!(
            "rho must be positive, got {rho}"
        )));
    }
    if n_samples < 2 {
        return Err(Error::OutOfRange("need at least 2 samples".into()));
    }
    let scale = rho / shape.src_tx() as f64;
    let rows = shape.rx();
    let cols = shape.src_tx();
    let partials: Vec<Result<Accumulator>> = (0..chunk_count(n_samples))
        .into_par_iter()
        .map(|chunk| {
            let mut rng = SubstreamRng::new(seed, chunk as u64);
            let mut acc = Accumulator::default();
            for _ in chunk_range(chunk, n_samples) {
                let h = sample_cn01_matrix(rows, cols, &mut rng);
                // determinant identity: use the smaller Gram
                let gram = if rows <= cols {
                    h.gram()
                } else {
                    h.gram_transposed()
                };
                acc.push(log2_det_identity_plus(&gram.scaled(scale))?);
            }
            Ok(acc)
        })
        .collect();
    let mut total = Accumulator::default();
    for p in partials {
        total.merge(&p?);
    }
    Ok(total.estimate(n_samples))
}

/// How [`no_relay_rate`] evaluates the direct link.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoRelayMethod {
    /// Exact closed form through the effective SNR of the direct link.
    ClosedForm,
    /// Monte Carlo over the direct-link integrand.
    MonteCarlo { n_samples: usize, seed: u64 },
}

/// Direct-link ergodic rate without the relay:
/// `E[log2 det(I_{N3} + (P1/M1) a^2 W31 W31^H)]`.
pub fn no_relay_rate(
    geom: &Geometry,
    cfg: &AntennaConfig,
    pw: &PowerBudget,
    method: NoRelayMethod,
) -> Result<CapacityEstimate> {
    let dist = geom.source_dest_distance();
    if dist == 0.0 {
        return Err(Error::DegenerateGeometry(
            "destination coincides with the source".into(),
        ));
    }
    let shape = LinkShape::new(cfg.src_tx, cfg.dest_rx)?;
    match method {
        NoRelayMethod::ClosedForm => {
            let rho = effective_snr(pw.source, dist, geom.path_loss_exp)?;
            let mean = if rho == 0.0 {
                0.0
            } else {
                exact_ergodic_rate(&shape, rho)?
            };
            Ok(CapacityEstimate {
                mean,
                std_error: 0.0,
                n_samples: 1,
            })
        }
        NoRelayMethod::MonteCarlo { n_samples, seed } => {
            let a = path_loss_coefficients(geom)?.source_dest;
            let rho = pw.source * a * a;
            if rho == 0.0 {
                return Ok(CapacityEstimate {
                    mean: 0.0,
                    std_error: 0.0,
                    n_samples,
                });
            }
            mc_ergodic_rate(&shape, rho, n_samples, seed)
        }
    }
}
