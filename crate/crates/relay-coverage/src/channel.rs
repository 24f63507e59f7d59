//! Physical scenario: antennas, powers, node geometry, path loss, and
//! sampling of the whitened fading matrices.
//!
//! The source sits at the origin and the relay on the positive x-axis; the
//! destination is free. Channel gains factor into a deterministic path-loss
//! amplitude times an i.i.d. complex Gaussian matrix, redrawn independently
//! per block use.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::rng::SubstreamRng;

/// Antenna counts above this are rejected. The exact-rate formula evaluates
/// integer gamma up to `2*max_antennas - 1`; 16 keeps every factorial well
/// inside f64 range with ample margin.
pub const MAX_ANTENNAS: usize = 16;

/// Transmit/receive antenna counts for source, relay, and destination.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AntennaConfig {
    /// Source transmit antennas.
    pub src_tx: usize,
    /// Relay transmit antennas.
    pub relay_tx: usize,
    /// Relay receive antennas.
    pub relay_rx: usize,
    /// Destination receive antennas.
    pub dest_rx: usize,
}

impl AntennaConfig {
    pub fn new(src_tx: usize, relay_tx: usize, relay_rx: usize, dest_rx: usize) -> Result<Self> {
        for (name, v) in [
            ("src_tx", src_tx),
            ("relay_tx", relay_tx),
            ("relay_rx", relay_rx),
            ("dest_rx", dest_rx),
        ] {
            if !(1..=MAX_ANTENNAS).contains(&v) {
                return Err(Error::OutOfRange(format!(
                    "{name} = {v}, antenna counts must be in 1..={MAX_ANTENNAS}"
                )));
            }
        }
        Ok(Self {
            src_tx,
            relay_tx,
            relay_rx,
            dest_rx,
        })
    }

    /// All four counts equal.
    pub fn symmetric(n: usize) -> Result<Self> {
        Self::new(n, n, n, n)
    }

    /// Total receive antennas across relay and destination.
    pub fn total_rx(&self) -> usize {
        self.relay_rx + self.dest_rx
    }
}

/// Transmit power budgets in linear units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerBudget {
    pub source: f64,
    pub relay: f64,
}

impl PowerBudget {
    pub fn new(source: f64, relay: f64) -> Result<Self> {
        if !(source >= 0.0) || !(relay >= 0.0) {
            return Err(Error::OutOfRange(format!(
                "powers must be nonnegative, got source={source}, relay={relay}"
            )));
        }
        Ok(Self { source, relay })
    }

    /// Convert from dB. This is the only place dB enters the library;
    /// everything downstream is linear.
    pub fn from_db(source_db: f64, relay_db: f64) -> Self {
        Self {
            source: db_to_linear(source_db),
            relay: db_to_linear(relay_db),
        }
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10.0_f64.powf(db / 10.0)
}

/// Node placement and the path-loss exponent. Source fixed at the origin,
/// relay at `(relay_x, 0)`, destination at `(dest_x, dest_y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub relay_x: f64,
    pub dest_x: f64,
    pub dest_y: f64,
    /// Distance-based power attenuation exponent.
    pub path_loss_exp: f64,
}

impl Geometry {
    pub fn new(relay_x: f64, dest_x: f64, dest_y: f64, path_loss_exp: f64) -> Result<Self> {
        if !(relay_x > 0.0) {
            return Err(Error::DegenerateGeometry(format!(
                "relay must sit at positive x, got {relay_x}"
            )));
        }
        if !(path_loss_exp > 0.0) {
            return Err(Error::OutOfRange(format!(
                "path-loss exponent must be positive, got {path_loss_exp}"
            )));
        }
        Ok(Self {
            relay_x,
            dest_x,
            dest_y,
            path_loss_exp,
        })
    }

    pub fn source_dest_distance(&self) -> f64 {
        (self.dest_x * self.dest_x + self.dest_y * self.dest_y).sqrt()
    }

    pub fn relay_dest_distance(&self) -> f64 {
        let dx = self.dest_x - self.relay_x;
        (dx * dx + self.dest_y * self.dest_y).sqrt()
    }
}

/// Amplitude gains of the three links. Received power scales as
/// `distance^-eta`, so amplitudes scale as `distance^(-eta/2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathLossCoefficients {
    /// Source -> destination amplitude gain.
    pub source_dest: f64,
    /// Source -> relay amplitude gain.
    pub source_relay: f64,
    /// Relay -> destination amplitude gain.
    pub relay_dest: f64,
}

/// Path-loss amplitudes for the given geometry.
///
/// Errors with `DegenerateGeometry` when the destination coincides with the
/// source or the relay (the power law diverges at zero distance).
pub fn path_loss_coefficients(geom: &Geometry) -> Result<PathLossCoefficients> {
    let d_sd = geom.source_dest_distance();
    let d_rd = geom.relay_dest_distance();
    if d_sd == 0.0 {
        return Err(Error::DegenerateGeometry(
            "destination coincides with the source".into(),
        ));
    }
    if d_rd == 0.0 {
        return Err(Error::DegenerateGeometry(
            "destination coincides with the relay".into(),
        ));
    }
    let half_exp = -geom.path_loss_exp / 2.0;
    Ok(PathLossCoefficients {
        source_dest: d_sd.powf(half_exp),
        source_relay: geom.relay_x.powf(half_exp),
        relay_dest: d_rd.powf(half_exp),
    })
}

/// Effective SNR `power * distance^-eta` seen through a path-loss link.
pub fn effective_snr(power: f64, distance: f64, path_loss_exp: f64) -> Result<f64> {
    if !(power >= 0.0) {
        return Err(Error::OutOfRange(format!(
            "power must be >= 0, got {power}"
        )));
    }
    if !(distance > 0.0) {
        return Err(Error::DegenerateGeometry(format!(
            "distance must be positive, got {distance}"
        )));
    }
    Ok(power * distance.powf(-path_loss_exp))
}

/// Draw a `rows x cols` matrix of i.i.d. circularly symmetric complex
/// Gaussians: real and imaginary parts independent `N(0, 1/2)`, so each
/// entry has unit second moment. Entries are filled row-major, real part
/// before imaginary part, which pins the stream layout.
pub fn sample_cn01_matrix(rows: usize, cols: usize, rng: &mut SubstreamRng) -> CMatrix {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    CMatrix::from_fn(rows, cols, |_, _| {
        let re = rng.standard_normal() * scale;
        let im = rng.standard_normal() * scale;
        Complex64::new(re, im)
    })
}

/// One channel realization: the three whitened fading matrices.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    /// Source to destination, `dest_rx x src_tx`.
    pub source_dest: CMatrix,
    /// Source to relay, `relay_rx x src_tx`.
    pub source_relay: CMatrix,
    /// Relay to destination, `dest_rx x relay_tx`.
    pub relay_dest: CMatrix,
}

/// Draw one realization in the fixed order source-destination,
/// source-relay, relay-destination. Every estimator in the crate uses this
/// order, so runs with the same seed see the same channels.
pub fn sample_channel_realization(
    cfg: &AntennaConfig,
    rng: &mut SubstreamRng,
) -> ChannelRealization {
    let source_dest = sample_cn01_matrix(cfg.dest_rx, cfg.src_tx, rng);
    let source_relay = sample_cn01_matrix(cfg.relay_rx, cfg.src_tx, rng);
    let relay_dest = sample_cn01_matrix(cfg.dest_rx, cfg.relay_tx, rng);
    ChannelRealization {
        source_dest,
        source_relay,
        relay_dest,
    }
}
