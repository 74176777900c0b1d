//! Subcommand implementations.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::DMatrix;

use opagbs_core::{
    apply_channel, bloch_messiah_two_mode, build_w, commutation_report, compose, csv_io,
    enumerate_distribution, hafnian_bruteforce, hafnian_fast, loss_channel,
    lossy_network_channel, sample_patterns, vacuum_state, GaussianChannel, LogBase, NetworkSpec,
};

use crate::config::{parse_partitions, PartitionSpec, PointParams, RawConfig};
use crate::sweep::{self, engine_discrepancy, evaluate_point};
use crate::{CliError, NetworkArgs};

fn core_err(e: opagbs_core::Error) -> CliError {
    use opagbs_core::Error as E;
    match e {
        E::ResourceLimit(m) => CliError::guard(m),
        E::Io(m) => CliError::io(m.to_string()),
        E::Parse(m) => CliError::config(m),
        E::InvalidArgument(m) | E::InvalidState(m) => CliError::config(m),
        E::DimensionMismatch { .. } | E::NumericalFailure(_) => CliError::other(e.to_string()),
    }
}

/// Network parameters resolved from config file plus flag overrides.
pub fn resolve_point(
    raw: Option<&RawConfig>,
    args: &NetworkArgs,
) -> Result<PointParams, CliError> {
    let pick_usize = |flag: Option<usize>, key: &str| -> Result<usize, CliError> {
        if let Some(v) = flag {
            return Ok(v);
        }
        if let Some(raw) = raw {
            if let Some(v) = raw.usize("network", key)? {
                return Ok(v);
            }
        }
        Err(CliError::config(format!(
            "parameter {key} missing: pass --{key} or set it in [network]"
        )))
    };
    let pick_f64 = |flag: Option<f64>, key: &str, default: Option<f64>| -> Result<f64, CliError> {
        if let Some(v) = flag {
            return Ok(v);
        }
        if let Some(raw) = raw {
            if let Some(v) = raw.f64("network", key)? {
                return Ok(v);
            }
        }
        default.ok_or_else(|| {
            CliError::config(format!(
                "parameter {key} missing: pass --{key} or set it in [network]"
            ))
        })
    };
    Ok(PointParams {
        n: pick_usize(args.n, "n")?,
        d: pick_usize(args.d, "d")?,
        r: pick_f64(args.r, "r", None)?,
        theta: pick_f64(args.theta, "theta", Some(0.0))?,
        t: pick_f64(args.t, "t", Some(1.0))?,
    })
}

fn build_spec(p: PointParams) -> Result<NetworkSpec, CliError> {
    NetworkSpec::uniform(p.n, p.d, p.r, p.theta, p.t).map_err(|e| CliError::config(e.to_string()))
}

pub fn cmd_simulate(
    raw: Option<&RawConfig>,
    args: &NetworkArgs,
    partitions_flag: Option<&str>,
    output: Option<&Path>,
    base: LogBase,
    both_engines: bool,
) -> Result<(), CliError> {
    let point = resolve_point(raw, args)?;
    let partitions = match partitions_flag {
        Some(text) => parse_partitions(text)?,
        None => match raw.and_then(|r| r.get("sweep", "partitions")) {
            Some(text) => parse_partitions(text)?,
            None => vec![PartitionSpec::Equal],
        },
    };

    let spec = build_spec(point)?;
    let state =
        apply_channel(&lossy_network_channel(&spec), &vacuum_state(point.n).map_err(core_err)?)
            .map_err(core_err)?;

    let out_path = output
        .map(PathBuf::from)
        .or_else(|| raw.and_then(|r| r.get("output", "path").map(PathBuf::from)))
        .unwrap_or_else(|| PathBuf::from("covariance.csv"));
    csv_io::write_matrix_csv(&out_path, state.sigma())
        .map_err(|e| CliError::io(format!("writing {}: {e}", out_path.display())))?;

    println!(
        "network: n={} d={} r={} theta={} t={}",
        point.n, point.d, point.r, point.theta, point.t
    );
    println!("covariance written to {}", out_path.display());
    for row in evaluate_point(point, &partitions, base, both_engines)? {
        println!(
            "partition {:>12}  E_N = {}  [{} engine]",
            row.partition, row.e_n, row.engine
        );
    }
    if both_engines {
        let disc = engine_discrepancy(point)?;
        println!("cross-engine covariance discrepancy (Frobenius): {disc:.3e}");
    }
    Ok(())
}

pub fn cmd_sweep(
    raw: &RawConfig,
    output: Option<&Path>,
    base: LogBase,
    both_engines: bool,
    jobs: Option<usize>,
) -> Result<(), CliError> {
    let cfg = crate::config::SweepConfig::from_raw(raw)?;
    let started = Instant::now();
    let rows = sweep::run_sweep(&cfg, base, both_engines, jobs)?;
    let fits = sweep::compute_fits(&cfg, &rows);

    let out_path = output
        .map(PathBuf::from)
        .or_else(|| cfg.output_path.clone())
        .unwrap_or_else(|| PathBuf::from("sweep.csv"));
    let file = std::fs::File::create(&out_path)
        .map_err(|e| CliError::io(format!("cannot create {}: {e}", out_path.display())))?;
    let mut w = std::io::BufWriter::new(file);
    sweep::write_csv(&mut w, &cfg, &rows, &fits)?;
    w.flush().map_err(|e| CliError::io(e.to_string()))?;

    let slowest = rows
        .iter()
        .map(|r| r.wall)
        .max()
        .unwrap_or_default();
    eprintln!(
        "sweep: {} rows + {} fit rows -> {} in {:.2?} (slowest point {:.2?})",
        rows.len(),
        fits.len(),
        out_path.display(),
        started.elapsed(),
        slowest
    );
    Ok(())
}

pub fn cmd_hafnian(matrix: &Path, algorithm: &str) -> Result<(), CliError> {
    let m = csv_io::read_matrix_csv(matrix).map_err(core_err)?;
    let value = match algorithm {
        "brute" => hafnian_bruteforce(&m).map_err(core_err)?,
        "fast" => hafnian_fast(&m).map_err(core_err)?,
        other => return Err(CliError::config(format!("unknown algorithm {other:?}"))),
    };
    println!("{value}");
    Ok(())
}

pub fn cmd_sample(
    raw: Option<&RawConfig>,
    args: &NetworkArgs,
    count: usize,
    max_total: u32,
    seed: u64,
    output: Option<&Path>,
) -> Result<(), CliError> {
    let point = resolve_point(raw, args)?;
    let spec = build_spec(point)?;
    let state =
        apply_channel(&lossy_network_channel(&spec), &vacuum_state(point.n).map_err(core_err)?)
            .map_err(core_err)?;
    let w = build_w(&state).map_err(core_err)?;
    let (dist, residual) = enumerate_distribution(&w, max_total).map_err(core_err)?;
    let samples = sample_patterns(&dist, residual, count, seed).map_err(core_err)?;

    let out_path = output
        .map(PathBuf::from)
        .or_else(|| raw.and_then(|r| r.get("output", "path").map(PathBuf::from)))
        .unwrap_or_else(|| PathBuf::from("samples.csv"));
    let file = std::fs::File::create(&out_path)
        .map_err(|e| CliError::io(format!("cannot create {}: {e}", out_path.display())))?;
    let mut out = std::io::BufWriter::new(file);
    out.write_all(b"pattern\n").map_err(|e| CliError::io(e.to_string()))?;
    for s in &samples {
        out.write_all(s.label().as_bytes()).map_err(|e| CliError::io(e.to_string()))?;
        out.write_all(b"\n").map_err(|e| CliError::io(e.to_string()))?;
    }
    out.flush().map_err(|e| CliError::io(e.to_string()))?;

    println!(
        "{} samples (seed {seed}) over {} patterns with <= {max_total} photons -> {}",
        samples.len(),
        dist.len(),
        out_path.display()
    );
    println!("residual mass beyond enumeration: {residual:.6e}");
    Ok(())
}

fn print_channel(tag: &str, c: &GaussianChannel) {
    println!("{tag}:");
    println!("  X = {}", fmt_matrix(c.x()));
    println!("  Y = {}", fmt_matrix(c.y()));
}

fn fmt_matrix(m: &DMatrix<f64>) -> String {
    let rows: Vec<String> = (0..m.nrows())
        .map(|i| {
            (0..m.ncols())
                .map(|j| format!("{:+.6}", m[(i, j)]))
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect();
    format!("[{}]", rows.join(" ; "))
}

pub fn cmd_channels(
    demo: &str,
    r: f64,
    eta: f64,
    eta2: f64,
    theta: f64,
) -> Result<(), CliError> {
    match demo {
        "loss-loss" => {
            let c1 = loss_channel(1, &[eta]).map_err(core_err)?;
            let c2 = loss_channel(1, &[eta2]).map_err(core_err)?;
            let ab = compose(&c2, &c1).map_err(core_err)?;
            let ba = compose(&c1, &c2).map_err(core_err)?;
            print_channel(&format!("loss({eta2}) after loss({eta})"), &ab);
            print_channel(&format!("loss({eta}) after loss({eta2})"), &ba);
            let diff = (ab.x() - ba.x()).amax().max((ab.y() - ba.y()).amax());
            println!("verdict: equal (max abs difference {diff:.3e})");
            println!("combined transmissivity: {}", eta * eta2);
        }
        "bs-loss" => {
            let rep = commutation_report(0.0, theta, eta).map_err(core_err)?;
            print_channel("loss after beam splitter", &rep.bs_loss_after);
            print_channel("loss before beam splitter", &rep.bs_loss_before);
            let equal = rep.bs_orderings_equal(1e-12);
            println!(
                "verdict: {} (max abs difference {:.3e})",
                if equal { "equal" } else { "inequal" },
                rep.bs_max_abs_diff
            );
        }
        "sq-loss" => {
            let rep = commutation_report(r, 0.0, eta).map_err(core_err)?;
            print_channel("loss after squeezer", &rep.sq_loss_after);
            print_channel("loss before squeezer", &rep.sq_loss_before);
            let equal = rep.sq_orderings_equal(1e-12);
            println!(
                "verdict: {} (max abs difference {:.3e})",
                if equal { "equal" } else { "inequal" },
                rep.sq_max_abs_diff
            );
            println!("Y delta (before - after) = {}", fmt_matrix(&rep.sq_y_delta));
        }
        "bloch-messiah" => {
            let (b50, d) = bloch_messiah_two_mode(r).map_err(core_err)?;
            println!("B50 = {}", fmt_matrix(b50.matrix()));
            println!("D   = {}", fmt_matrix(d.matrix()));
            let rec = b50.matrix() * d.matrix() * b50.matrix().transpose();
            let target = opagbs_core::gaussian::two_mode_squeezer_xpxp(r);
            println!("B50 D B50^T = {}", fmt_matrix(&rec));
            println!("reconstruction error: {:.3e}", (&rec - &target).norm());
        }
        other => {
            return Err(CliError::config(format!(
                "unknown demo {other:?} (loss-loss, bs-loss, sq-loss, bloch-messiah)"
            )))
        }
    }
    Ok(())
}
