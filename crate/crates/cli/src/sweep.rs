//! Grid evaluation and deterministic CSV emission.
//!
//! Grid points are independent jobs fanned out to a bounded worker pool;
//! results are gathered back into canonical grid order, so the emitted CSV
//! is byte-identical for any worker count. Wall times are tracked per
//! point but reported only on stderr to keep the file deterministic.

use std::io::Write;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use opagbs_core::{
    apply_channel, log_negativity, lossy_network_channel, network_negativity,
    operator_moment_covariance, vacuum_state, LogBase, NetworkSpec,
};

use crate::config::{PartitionSpec, PointParams, SweepConfig};
use crate::CliError;

pub const GRID_LIMIT: usize = 100_000;

/// One emitted row: a grid point, a partition, and the negativity one
/// engine assigned to it.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub point: PointParams,
    pub partition: String,
    pub e_n: f64,
    pub engine: &'static str,
    pub wall: Duration,
}

/// Linear-fit summary over one swept axis within one group of rows.
#[derive(Debug, Clone)]
pub struct FitRow {
    pub point: PointParams,
    pub axis: &'static str,
    pub partition: String,
    pub engine: &'static str,
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Evaluates one grid point for every partition. The channel engine is the
/// production path; with `both_engines` the operator-moment engine emits a
/// second row per partition.
pub fn evaluate_point(
    point: PointParams,
    partitions: &[PartitionSpec],
    base: LogBase,
    both_engines: bool,
) -> Result<Vec<SweepRow>, CliError> {
    let spec = NetworkSpec::uniform(point.n, point.d, point.r, point.theta, point.t)
        .map_err(|e| CliError::config(e.to_string()))?;
    let mut rows = Vec::with_capacity(partitions.len() * if both_engines { 2 } else { 1 });
    for pspec in partitions {
        let partition = pspec.resolve(point.n)?;
        let start = Instant::now();
        let res = network_negativity(&spec, &partition, base)
            .map_err(|e| CliError::other(e.to_string()))?;
        rows.push(SweepRow {
            point,
            partition: partition.label(),
            e_n: res.value,
            engine: "channel",
            wall: start.elapsed(),
        });
        if both_engines {
            let start = Instant::now();
            let state = operator_moment_covariance(&spec)
                .map_err(|e| CliError::other(e.to_string()))?;
            let res = log_negativity(&state, &partition, base)
                .map_err(|e| CliError::other(e.to_string()))?;
            rows.push(SweepRow {
                point,
                partition: partition.label(),
                e_n: res.value,
                engine: "moment",
                wall: start.elapsed(),
            });
        }
    }
    Ok(rows)
}

/// Frobenius distance between the two engines' covariances at one point.
pub fn engine_discrepancy(point: PointParams) -> Result<f64, CliError> {
    let spec = NetworkSpec::uniform(point.n, point.d, point.r, point.theta, point.t)
        .map_err(|e| CliError::config(e.to_string()))?;
    let channel = apply_channel(
        &lossy_network_channel(&spec),
        &vacuum_state(point.n).map_err(|e| CliError::other(e.to_string()))?,
    )
    .map_err(|e| CliError::other(e.to_string()))?;
    let moments =
        operator_moment_covariance(&spec).map_err(|e| CliError::other(e.to_string()))?;
    Ok((channel.sigma() - moments.sigma()).norm())
}

/// Runs the whole grid on `jobs` workers, preserving grid order.
pub fn run_sweep(
    cfg: &SweepConfig,
    base: LogBase,
    both_engines: bool,
    jobs: Option<usize>,
) -> Result<Vec<SweepRow>, CliError> {
    let grid = cfg.grid();
    if grid.len() > GRID_LIMIT {
        return Err(CliError::guard(format!(
            "grid holds {} points, limit is {GRID_LIMIT}",
            grid.len()
        )));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| CliError::other(format!("worker pool: {e}")))?;
    let nested: Vec<Vec<SweepRow>> = pool.install(|| {
        grid.par_iter()
            .map(|&p| evaluate_point(p, &cfg.partitions, base, both_engines))
            .collect::<Result<_, _>>()
    })?;
    Ok(nested.into_iter().flatten().collect())
}

/// Ordinary least squares over `(x, y)`; returns `(slope, intercept, r2)`.
pub fn linear_fit(points: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = mean_y - slope * mean_x;
    let ss_res: f64 = points
        .iter()
        .map(|p| (p.1 - (slope * p.0 + intercept)).powi(2))
        .sum();
    let ss_tot: f64 = points.iter().map(|p| (p.1 - mean_y).powi(2)).sum();
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    (slope, intercept, r2)
}

struct AxisView {
    name: &'static str,
    value: fn(&PointParams) -> f64,
    swept: bool,
}

fn axes(cfg: &SweepConfig) -> Vec<AxisView> {
    vec![
        AxisView { name: "n", value: |p| p.n as f64, swept: cfg.n_values.len() > 1 },
        AxisView { name: "d", value: |p| p.d as f64, swept: cfg.d_values.len() > 1 },
        AxisView { name: "r", value: |p| p.r, swept: cfg.r_values.len() > 1 },
        AxisView { name: "theta", value: |p| p.theta, swept: cfg.theta_values.len() > 1 },
        AxisView { name: "t", value: |p| p.t, swept: cfg.t_values.len() > 1 },
    ]
}

/// Least-squares rows per swept axis: rows are grouped by every other
/// coordinate plus partition and engine, in first-appearance order.
pub fn compute_fits(cfg: &SweepConfig, rows: &[SweepRow]) -> Vec<FitRow> {
    let axes = axes(cfg);
    let mut fits = Vec::new();
    for (ai, axis) in axes.iter().enumerate() {
        if !axis.swept {
            continue;
        }
        // group key: all other axis values + partition + engine
        let mut order: Vec<String> = Vec::new();
        let mut groups: Vec<(String, Vec<(f64, f64)>, PointParams, String, &'static str)> =
            Vec::new();
        for row in rows {
            let mut key = String::new();
            for (bi, other) in axes.iter().enumerate() {
                if bi != ai {
                    key.push_str(&format!("{}={};", other.name, (other.value)(&row.point)));
                }
            }
            key.push_str(&format!("p={};e={}", row.partition, row.engine));
            match order.iter().position(|k| k == &key) {
                Some(idx) => groups[idx].1.push(((axis.value)(&row.point), row.e_n)),
                None => {
                    order.push(key.clone());
                    groups.push((
                        key,
                        vec![((axis.value)(&row.point), row.e_n)],
                        row.point,
                        row.partition.clone(),
                        row.engine,
                    ));
                }
            }
        }
        for (_, pts, point, partition, engine) in groups {
            if pts.len() < 2 {
                continue;
            }
            let (slope, intercept, r2) = linear_fit(&pts);
            fits.push(FitRow { point, axis: axis.name, partition, engine, slope, intercept, r2 });
        }
    }
    fits
}

pub const CSV_HEADER: &str = "n,d,r,theta,t,partition,e_n,engine,fit_axis,slope,intercept,r2";

/// Minimal RFC-4180 quoting: partition labels like `(4,4)` carry commas.
fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Writes data rows then fit rows. Fit rows blank out the fitted axis's
/// column and carry a `fit=` prefix in the partition column so the two row
/// kinds stay machine-separable. Unix newlines, shortest round-trip floats.
pub fn write_csv<W: Write>(
    out: &mut W,
    cfg: &SweepConfig,
    rows: &[SweepRow],
    fits: &[FitRow],
) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::io(e.to_string());
    out.write_all(CSV_HEADER.as_bytes()).map_err(io)?;
    out.write_all(b"\n").map_err(io)?;
    for row in rows {
        let p = &row.point;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},,,,",
            p.n,
            p.d,
            p.r,
            p.theta,
            p.t,
            csv_field(&row.partition),
            row.e_n,
            row.engine
        )
        .map_err(io)?;
    }
    let _ = cfg;
    for fit in fits {
        let p = &fit.point;
        let cell = |name: &str, val: String| -> String {
            if name == fit.axis {
                String::new()
            } else {
                val
            }
        };
        writeln!(
            out,
            "{},{},{},{},{},{},,{},{},{},{},{}",
            cell("n", p.n.to_string()),
            cell("d", p.d.to_string()),
            cell("r", p.r.to_string()),
            cell("theta", p.theta.to_string()),
            cell("t", p.t.to_string()),
            csv_field(&format!("fit={}", fit.partition)),
            fit.engine,
            fit.axis,
            fit.slope,
            fit.intercept,
            fit.r2
        )
        .map_err(io)?;
    }
    Ok(())
}
