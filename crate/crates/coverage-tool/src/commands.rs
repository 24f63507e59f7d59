//! The tool's subcommands. Each writes its data files plus a manifest into
//! the output directory and reports results on stdout.

use std::path::Path;

use serde::Serialize;

use relay_coverage::validate::{all_passed, run_suite, Suite};
use relay_coverage::{
    antenna_ratio_sweep, boundary_polylines, coverage_region, mc_ergodic_rate,
    optimal_relay_location, rate_vs_antennas_sweep, rate_vs_distance_sweep, CoverageMode,
    LinkShape, SolverParams,
};

use crate::output::{fmt_f64, OutputDir};
use crate::scenario_file::ToolScenario;
use crate::CliError;

fn ascending_grid(min: f64, max: f64, step: f64) -> Result<Vec<f64>, CliError> {
    if !(step > 0.0) || !(min > 0.0) || !(max >= min) {
        return Err(CliError::config(format!(
            "invalid grid: min {min}, max {max}, step {step}"
        )));
    }
    let n = ((max - min) / step + 1e-9).floor() as usize + 1;
    if n > 1_000_000 {
        return Err(CliError::config(format!("grid of {n} points is too large")));
    }
    Ok((0..n).map(|k| min + k as f64 * step).collect())
}

#[derive(Serialize)]
struct RateSummary {
    command: &'static str,
    src_tx: usize,
    relay_rx: usize,
    p1_db: f64,
    eta: f64,
    samples: usize,
    seed: u64,
    rows: usize,
    d_min: f64,
    d_max: f64,
    d_step: f64,
}

/// Rate-versus-distance table: exact, high-SNR, and Monte Carlo columns.
/// Every row reuses the same seed, so the Monte Carlo column sees shared
/// draws and inherits the exact column's monotonicity.
pub fn cmd_rate(
    scenario: &ToolScenario,
    out: &Path,
    workers: usize,
    d_min: f64,
    d_max: f64,
    d_step: f64,
) -> Result<(), CliError> {
    let config = scenario.to_config()?;
    let shape = LinkShape::new(scenario.m1, scenario.n2)?;
    let grid = ascending_grid(d_min, d_max, d_step)?;
    let table = rate_vs_distance_sweep(&shape, config.powers.source, scenario.eta, &grid)?;

    let mut rows = Vec::with_capacity(table.len());
    for point in &table {
        let rho = config.powers.source * point.distance.powf(-scenario.eta);
        let mc = mc_ergodic_rate(&shape, rho, scenario.samples, scenario.seed)?;
        rows.push(format!(
            "{},{},{},{},{}",
            fmt_f64(point.distance),
            fmt_f64(point.rate_exact),
            fmt_f64(point.rate_high_snr),
            fmt_f64(mc.mean),
            fmt_f64(mc.std_error)
        ));
    }

    let dir = OutputDir::create(out, "rate", workers)?;
    dir.write_csv(
        "rate.csv",
        "d,rate_exact,rate_highsnr,rate_mc_mean,rate_mc_se",
        rows,
    )?;
    dir.write_json(
        "summary.json",
        &RateSummary {
            command: "rate",
            src_tx: scenario.m1,
            relay_rx: scenario.n2,
            p1_db: scenario.p1_db,
            eta: scenario.eta,
            samples: scenario.samples,
            seed: scenario.seed,
            rows: table.len(),
            d_min,
            d_max,
            d_step,
        },
    )?;
    dir.finish(scenario)?;
    println!(
        "rate: {} distances from {} to {}, outputs in {}",
        table.len(),
        d_min,
        d_max,
        out.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct PlacementSummary {
    command: &'static str,
    d_star: f64,
    rate_check: f64,
    iterations: u32,
    target_rate: f64,
    p1_db: f64,
    eta: f64,
}

/// Solve the optimal relay distance for the scenario's target rate.
pub fn cmd_optimal_distance(
    scenario: &ToolScenario,
    out: &Path,
    workers: usize,
) -> Result<(), CliError> {
    let config = scenario.to_config()?;
    let shape = LinkShape::new(scenario.m1, scenario.n2)?;
    let solution = optimal_relay_location(
        scenario.rate,
        config.powers.source,
        &shape,
        scenario.eta,
        SolverParams::default().distance_tol,
    )?;
    let dir = OutputDir::create(out, "optimal-distance", workers)?;
    dir.write_json(
        "optimal_distance.json",
        &PlacementSummary {
            command: "optimal-distance",
            d_star: solution.distance,
            rate_check: solution.rate_at_distance,
            iterations: solution.iterations,
            target_rate: scenario.rate,
            p1_db: scenario.p1_db,
            eta: scenario.eta,
        },
    )?;
    dir.finish(scenario)?;
    println!(
        "optimal-distance: d* = {:.6} (rate check {:.6}, {} iterations)",
        solution.distance, solution.rate_at_distance, solution.iterations
    );
    Ok(())
}

#[derive(Serialize)]
struct CoverageSummary {
    command: &'static str,
    mode: String,
    area: f64,
    rate: f64,
    u2: f64,
    covered_cells: usize,
    nx: usize,
    ny: usize,
    resolution: f64,
}

/// Coverage mask, boundary polylines, and area for one mode.
pub fn cmd_coverage(
    scenario: &ToolScenario,
    out: &Path,
    workers: usize,
    mode: CoverageMode,
) -> Result<(), CliError> {
    let config = scenario.to_config()?;
    let region = coverage_region(&config, &scenario.grid, mode)?;

    let mut mask_rows = Vec::with_capacity(region.nx() * region.ny());
    for iy in 0..region.ny() {
        for ix in 0..region.nx() {
            mask_rows.push(format!(
                "{},{},{}",
                fmt_f64(region.grid.x_at(ix)),
                fmt_f64(region.grid.y_at(iy)),
                region.covered(ix, iy) as u8
            ));
        }
    }
    let mut boundary_rows = Vec::new();
    for (id, line) in boundary_polylines(&region).iter().enumerate() {
        for (vertex, (x, y)) in line.iter().enumerate() {
            boundary_rows.push(format!("{id},{vertex},{},{}", fmt_f64(*x), fmt_f64(*y)));
        }
    }

    let dir = OutputDir::create(out, "coverage", workers)?;
    dir.write_csv("mask.csv", "u3,v3,covered", mask_rows)?;
    dir.write_csv("boundary.csv", "polyline,vertex,x,y", boundary_rows)?;
    dir.write_json(
        "coverage.json",
        &CoverageSummary {
            command: "coverage",
            mode: mode.name().to_string(),
            area: region.area(),
            rate: scenario.rate,
            u2: scenario.u2,
            covered_cells: region.covered_count(),
            nx: region.nx(),
            ny: region.ny(),
            resolution: scenario.grid.resolution,
        },
    )?;
    dir.finish(scenario)?;
    println!(
        "coverage: mode {}, area {:.4} ({} cells), outputs in {}",
        mode.name(),
        region.area(),
        region.covered_count(),
        out.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct AntennaRatioSummary {
    command: &'static str,
    src_tx: usize,
    relay_rx: usize,
    p1_db: f64,
    eta: f64,
    rows: usize,
}

/// Placement-ratio sweep over single-antenna distances.
pub fn cmd_antenna_ratio(
    scenario: &ToolScenario,
    out: &Path,
    workers: usize,
    d1_min: f64,
    d1_max: f64,
    d1_step: f64,
) -> Result<(), CliError> {
    let config = scenario.to_config()?;
    let shape = LinkShape::new(scenario.m1, scenario.n2)?;
    let grid = ascending_grid(d1_min, d1_max, d1_step)?;
    let table = antenna_ratio_sweep(&grid, config.powers.source, &shape, scenario.eta)?;
    let rows = table
        .iter()
        .map(|p| format!("{},{}", fmt_f64(p.d1_star), fmt_f64(p.ratio)));
    let dir = OutputDir::create(out, "antenna-ratio", workers)?;
    dir.write_csv("antenna_ratio.csv", "d1_star,ratio", rows)?;
    dir.write_json(
        "summary.json",
        &AntennaRatioSummary {
            command: "antenna-ratio",
            src_tx: scenario.m1,
            relay_rx: scenario.n2,
            p1_db: scenario.p1_db,
            eta: scenario.eta,
            rows: table.len(),
        },
    )?;
    dir.finish(scenario)?;
    println!(
        "antenna-ratio: {} points, ratio at d1*={} is {:.4}",
        table.len(),
        fmt_f64(table[0].d1_star),
        table[0].ratio
    );
    Ok(())
}

#[derive(Serialize)]
struct RateVsAntennasSummary {
    command: &'static str,
    distance: f64,
    p1_db: f64,
    eta: f64,
    slope: f64,
    intercept: f64,
    r_squared: f64,
}

/// Exact rate against the symmetric antenna count, with a linear fit.
pub fn cmd_rate_vs_antennas(
    scenario: &ToolScenario,
    out: &Path,
    workers: usize,
    n_max: usize,
    distance: f64,
) -> Result<(), CliError> {
    if n_max < 2 {
        return Err(CliError::config(format!(
            "rate-vs-antennas needs n_max >= 2, got {n_max}"
        )));
    }
    let config = scenario.to_config()?;
    let counts: Vec<usize> = (1..=n_max).collect();
    let table = rate_vs_antennas_sweep(&counts, distance, config.powers.source, scenario.eta)?;

    let n_f = table.len() as f64;
    let mean_x = table.iter().map(|p| p.antennas as f64).sum::<f64>() / n_f;
    let mean_y = table.iter().map(|p| p.rate).sum::<f64>() / n_f;
    let sxy: f64 = table
        .iter()
        .map(|p| (p.antennas as f64 - mean_x) * (p.rate - mean_y))
        .sum();
    let sxx: f64 = table
        .iter()
        .map(|p| (p.antennas as f64 - mean_x).powi(2))
        .sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss_res: f64 = table
        .iter()
        .map(|p| (p.rate - (slope * p.antennas as f64 + intercept)).powi(2))
        .sum();
    let ss_tot: f64 = table.iter().map(|p| (p.rate - mean_y).powi(2)).sum();
    let r_squared = 1.0 - ss_res / ss_tot;

    let rows = table
        .iter()
        .map(|p| format!("{},{}", p.antennas, fmt_f64(p.rate)));
    let dir = OutputDir::create(out, "rate-vs-antennas", workers)?;
    dir.write_csv("rate_vs_antennas.csv", "antennas,rate", rows)?;
    dir.write_json(
        "summary.json",
        &RateVsAntennasSummary {
            command: "rate-vs-antennas",
            distance,
            p1_db: scenario.p1_db,
            eta: scenario.eta,
            slope,
            intercept,
            r_squared,
        },
    )?;
    dir.finish(scenario)?;
    println!("rate-vs-antennas: slope {slope:.4} bps/Hz per antenna, R^2 = {r_squared:.6}");
    Ok(())
}

/// Run the validation suite; one line per criterion, exit nonzero on any
/// failure.
pub fn cmd_validate(
    scenario: &ToolScenario,
    out: &Path,
    workers: usize,
    suite: Suite,
) -> Result<bool, CliError> {
    let results = run_suite(suite)?;
    for r in &results {
        println!("{}", r.line());
    }
    let passed = all_passed(&results);
    let dir = OutputDir::create(out, "validate", workers)?;
    dir.write_json("validate_report.json", &results)?;
    dir.finish(scenario)?;
    println!(
        "validate: {}/{} criteria passed",
        results.iter().filter(|r| r.passed).count(),
        results.len()
    );
    Ok(passed)
}

/// Named reproduction recipes for the standard plots.
pub fn cmd_repro(
    scenario: &ToolScenario,
    out: &Path,
    workers: usize,
    figure: &str,
) -> Result<(), CliError> {
    let mut scenario = scenario.clone();
    match figure {
        "fig3" => {
            // rate-distance relation for the 2x2 link
            cmd_rate(&scenario, &out.join("fig3"), workers, 0.4, 2.0, 0.05)
        }
        "fig4" => {
            // placement ratio for a 4x4 link at several transmit powers
            scenario.m1 = 4;
            scenario.m2 = 4;
            scenario.n2 = 4;
            scenario.n3 = 4;
            for p_db in [10.0, 20.0, 30.0] {
                scenario.p1_db = p_db;
                let sub = out.join("fig4").join(format!("p{:02}db", p_db as i64));
                cmd_antenna_ratio(&scenario, &sub, workers, 0.2, 3.0, 0.1)?;
            }
            Ok(())
        }
        "fig5" | "fig6" => {
            scenario.u2 = if figure == "fig5" { 0.95 } else { 1.05 };
            for mode in [CoverageMode::Df, CoverageMode::Cs, CoverageMode::NoRelay] {
                let sub = out.join(figure).join(mode.name());
                cmd_coverage(&scenario, &sub, workers, mode)?;
            }
            Ok(())
        }
        "fig7" => {
            // coverage growth with antennas at a fixed rate
            scenario.rate = 4.0;
            scenario.u2 = 0.775;
            for n in [2usize, 4] {
                scenario.m1 = n;
                scenario.m2 = n;
                scenario.n2 = n;
                scenario.n3 = n;
                let sub = out.join("fig7").join(format!("n{n}"));
                cmd_coverage(&scenario, &sub, workers, CoverageMode::Df)?;
            }
            Ok(())
        }
        "fig8" => {
            // rate growth with antennas at a fixed coverage distance
            cmd_rate_vs_antennas(&scenario, &out.join("fig8"), workers, 4, 1.0)
        }
        other => Err(CliError::config(format!(
            "unknown recipe '{other}' (expected fig3..fig8)"
        ))),
    }
}
