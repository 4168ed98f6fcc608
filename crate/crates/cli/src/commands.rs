//! The four subcommands. Each validates its config slice fully before any
//! computation and writes only to the paths named on the command line.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rdoa_core::ces::DensityGenerator;
use rdoa_core::estimators::{r_shape, scm_shape, tyler_shape, TYLER_MAX_ITER, TYLER_TOL};
use rdoa_core::mc::{self, EstimatorKind, ExperimentResult, SweepPointResult};
use rdoa_core::music::estimate_doa;
use rdoa_core::rng::StreamKey;
use rdoa_core::snapshots::{self, SnapshotSet};
use rdoa_core::sscrb::{sscrb, CONDITION_WARN};

use crate::{config, svg, Cli, CliError, Command};

pub fn run(cli: Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Sample => sample(&cli),
        Command::Estimate {
            file,
            k,
            estimator,
            grid,
        } => estimate(file, *k, estimator, *grid),
        Command::Bound => bound(&cli),
        Command::Simulate => simulate(&cli),
    }
}

fn config_of(cli: &Cli) -> Result<config::Config, CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("this subcommand needs --config".into()))?;
    config::load(path)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

fn sample(cli: &Cli) -> Result<(), CliError> {
    let mut cfg = config_of(cli)?;
    cfg.reject_unknown_sections(&["scene", "data"])?;
    let scene = config::scene(&mut cfg)?;
    let spec = config::data(&mut cfg)?;
    let seed = cli.seed.unwrap_or(spec.seed);
    let set = snapshots::synthesize(
        &scene.covariance(),
        spec.snapshots,
        spec.generator,
        StreamKey::new(seed, 0, 0),
    )?;
    let out = cli
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("snapshots.csv"));
    let mut csv = Vec::new();
    snapshots::write_csv(&set, &mut csv)?;
    let mut meta = Vec::new();
    snapshots::write_metadata(&set, &mut meta)?;
    write_file(&out, &csv)?;
    write_file(&out.with_extension("meta"), &meta)
}

fn seed_failed(e: &rdoa_core::Error) -> rdoa_core::Error {
    rdoa_core::Error::NonConvergence(format!("tyler seed failed: {e}"))
}

fn estimate(file: &Path, k: usize, estimator: &str, grid: usize) -> Result<(), CliError> {
    let kinds: Vec<EstimatorKind> = if estimator.eq_ignore_ascii_case("all") {
        EstimatorKind::ALL.to_vec()
    } else {
        vec![EstimatorKind::parse(estimator)?]
    };
    let reader = fs::File::open(file)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", file.display())))?;
    let (n, data) = snapshots::read_csv(std::io::BufReader::new(reader))?;
    if k == 0 || k >= n {
        return Err(CliError::Config(format!(
            "k = {k} must be between 1 and n - 1 = {}",
            n - 1
        )));
    }
    if data.len() < n {
        return Err(CliError::Config(format!(
            "need at least n = {n} snapshots, {} has {}",
            file.display(),
            data.len()
        )));
    }
    // The generator tag is metadata only; estimation never reads it.
    let set = SnapshotSet::from_data(data, DensityGenerator::Gaussian, StreamKey::new(0, 0, 0))?;

    let mut out = String::from("estimator,status");
    for i in 1..=k {
        out.push_str(&format!(",nu_{i}"));
    }
    out.push_str(",peaks_found,fallback,iterations,residual,alpha,pd_repaired\n");

    let needs_tyler = kinds
        .iter()
        .any(|e| matches!(e, EstimatorKind::Tyler | EstimatorKind::R));
    let tyler = needs_tyler.then(|| tyler_shape(&set, TYLER_TOL, TYLER_MAX_ITER));
    for kind in kinds {
        // (shape, iterations, residual, alpha, pd_repaired)
        let shape = match kind {
            EstimatorKind::Scm => scm_shape(&set).map(|s| (s, 0, 0.0, 0.0, false)),
            EstimatorKind::Tyler => match &tyler {
                Some(Ok(t)) => Ok((t.shape.clone(), t.iterations, t.residual, 0.0, false)),
                Some(Err(e)) => Err(seed_failed(e)),
                None => unreachable!("tyler requested but not computed"),
            },
            EstimatorKind::R => match &tyler {
                Some(Ok(t)) => r_shape(&set, &t.shape)
                    .map(|r| (r.shape, t.iterations, t.residual, r.alpha, r.pd_repaired)),
                Some(Err(e)) => Err(seed_failed(e)),
                None => unreachable!("r requested but not computed"),
            },
        };
        let row = shape.and_then(|(shape, iterations, residual, alpha, pd)| {
            let est = estimate_doa(shape.matrix(), k, grid, true)?;
            let nu: Vec<String> = est.nu.iter().map(|v| v.to_string()).collect();
            Ok(format!(
                "{},ok,{},{},{},{iterations},{residual},{alpha},{pd}",
                kind.label(),
                nu.join(","),
                est.peaks_found,
                est.fallback
            ))
        });
        match row {
            Ok(row) => out.push_str(&row),
            Err(e) => {
                // Partial results stay valid: mark the row, keep going.
                eprintln!("rdoa: {} failed: {e}", kind.label());
                out.push_str(&format!("{},failed{}", kind.label(), ",".repeat(k + 6)));
            }
        }
        out.push('\n');
    }
    std::io::stdout()
        .write_all(out.as_bytes())
        .map_err(|e| CliError::Io(format!("cannot write to standard output: {e}")))
}

fn bound(cli: &Cli) -> Result<(), CliError> {
    let mut cfg = config_of(cli)?;
    cfg.reject_unknown_sections(&["scene", "experiment"])?;
    let scene = config::scene(&mut cfg)?;
    let exp = config::experiment(&mut cfg, scene)?;
    let mut out = String::from("sweep_param,scalar_factor,index,condition,status\n");
    for &generator in &exp.sweep {
        let param = mc::sweep_value(generator);
        match sscrb(&exp.scene, generator, exp.snapshots) {
            Ok(b) => {
                if b.condition > CONDITION_WARN {
                    eprintln!(
                        "rdoa: warning: source correlation matrix condition {:.3e} at sweep {param} \
                         exceeds {CONDITION_WARN:.0e}; the bound may be inaccurate",
                        b.condition
                    );
                }
                out.push_str(&format!(
                    "{param},{},{},{},ok\n",
                    b.scalar_factor, b.index, b.condition
                ));
            }
            Err(e) => {
                eprintln!("rdoa: bound at sweep {param} failed: {e}");
                out.push_str(&format!("{param},,,,error\n"));
            }
        }
    }
    match &cli.out {
        Some(path) => write_file(path, out.as_bytes()),
        None => std::io::stdout()
            .write_all(out.as_bytes())
            .map_err(|e| CliError::Io(format!("cannot write to standard output: {e}"))),
    }
}

/// One `bound` pseudo-estimator row per sweep point, in the result CSV's
/// column scheme, so a plotting script gets all curves from one file.
fn bound_row(point: &SweepPointResult, verbose: bool) -> String {
    let param = mc::sweep_value(point.generator);
    let mut row = format!(
        "{param},bound,{},0,0,{}",
        point.sscrb_index, point.sscrb_index
    );
    if verbose {
        row.push_str(",0,0,0,0,0,0");
    }
    row.push('\n');
    row
}

fn simulate(cli: &Cli) -> Result<(), CliError> {
    let mut cfg = config_of(cli)?;
    cfg.reject_unknown_sections(&["scene", "experiment"])?;
    let scene = config::scene(&mut cfg)?;
    let mut exp = config::experiment(&mut cfg, scene)?;
    if let Some(seed) = cli.seed {
        exp.master_seed = seed;
    }
    if let Some(workers) = cli.workers {
        exp.workers = workers;
    }
    let out = cli
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("results.csv"));
    // The sidecar lands before the sweep starts, so even an interrupted run
    // is reproducible from its echoed config.
    write_file(
        &out.with_extension("meta"),
        config::echo_experiment(&exp).as_bytes(),
    )?;
    let file = fs::File::create(&out)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", out.display())))?;
    let mut w = std::io::BufWriter::new(file);
    let verbose = cli.verbose;
    w.write_all(mc::csv_header(verbose).as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", out.display())))?;
    let result = mc::run_experiment_with(&exp, |point| {
        w.write_all(mc::csv_point_rows(point, verbose).as_bytes())?;
        w.write_all(bound_row(point, verbose).as_bytes())?;
        // Flush per sweep point: partial results survive an abnormal exit.
        w.flush()?;
        Ok(())
    })?;
    drop(w);
    if cli.plot {
        write_file(&out.with_extension("svg"), figure(&result).as_bytes())?;
    }
    Ok(())
}

fn figure(result: &ExperimentResult) -> String {
    let finite = |pairs: Vec<(f64, f64)>| -> Vec<(f64, f64)> {
        pairs
            .into_iter()
            .filter(|&(_, y)| y.is_finite() && y > 0.0)
            .collect()
    };
    let mut series = Vec::new();
    let colors = ["#d62728", "#1f77b4", "#2ca02c", "#9467bd"];
    if let Some(first) = result.points.first() {
        for (i, summary) in first.summaries.iter().enumerate() {
            let name = summary.estimator_label;
            let points = finite(
                result
                    .points
                    .iter()
                    .map(|p| {
                        let s = p
                            .summaries
                            .iter()
                            .find(|s| s.estimator_label == name)
                            .expect("every point summarizes every estimator");
                        (mc::sweep_value(p.generator), s.mse_index)
                    })
                    .collect(),
            );
            series.push(svg::Series {
                name,
                color: colors[i % colors.len()],
                points,
            });
        }
    }
    series.push(svg::Series {
        name: "bound",
        color: "#555555",
        points: finite(
            result
                .points
                .iter()
                .map(|p| (mc::sweep_value(p.generator), p.sscrb_index))
                .collect(),
        ),
    });
    let x_label = result
        .points
        .first()
        .and_then(|p| p.generator.parameter())
        .map_or("family parameter", |(name, _)| name);
    svg::render(
        &format!("MSE index and bound vs {x_label}"),
        x_label,
        &series,
    )
}
