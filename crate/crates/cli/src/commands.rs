use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context, Result};
use homoclinic_core::bifurcation::{direct_verify, scan_roots, BvpOptions, FrameWorkspace, LsBifurcation, LsOptions};
use homoclinic_core::conditions::{evaluate_all, ConditionOptions, Thresholds};
use homoclinic_core::homoclinic::HomoclinicOrbit;
use homoclinic_core::planar::PlanarSystem;
use homoclinic_core::variational::{build_frame, check_asymptotics, check_dichotomy, FrameOptions, VariationalFrame};
use serde::Serialize;
use serde_json::json;

use crate::config::RunConfig;

/// Pretty JSON with keys sorted (via `serde_json::Value`'s ordered map).
fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let v = serde_json::to_value(value)?;
    let mut text = serde_json::to_string_pretty(&v)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn write_csv<R: Serialize>(path: &Path, header: &[&str], rows: impl IntoIterator<Item = R>) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .with_context(|| format!("writing {}", path.display()))?;
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

struct Setup {
    sys: PlanarSystem,
    orbit: HomoclinicOrbit,
}

impl Setup {
    fn new(cfg: &RunConfig) -> Result<Self> {
        let sys = cfg.field.system(&cfg.forcing)?;
        sys.validate(2.0, 64, cfg.seed).context("field self-check")?;
        let orbit = HomoclinicOrbit::for_preset(&cfg.field)?;
        Ok(Setup { sys, orbit })
    }

    fn frame(&self, cfg: &RunConfig) -> Result<VariationalFrame> {
        let opts = FrameOptions {
            normalization: cfg.normalization,
            ..Default::default()
        };
        Ok(build_frame(&self.sys, &self.orbit, cfg.window, &opts)?)
    }
}

fn condition_options(cfg: &RunConfig) -> ConditionOptions {
    ConditionOptions {
        line_tol: cfg.tolerances.line_quadrature,
        plane_tol: cfg.tolerances.plane_quadrature,
        thresholds: Thresholds {
            zero: cfg.tolerances.zero,
            ..Default::default()
        },
        ..Default::default()
    }
}

pub fn analyze(cfg: &RunConfig) -> Result<()> {
    let setup = Setup::new(cfg)?;
    let frame = setup.frame(cfg)?;
    let opts = condition_options(cfg);
    let mut reports = Vec::new();
    let mut table = String::new();
    writeln!(table, "{:>10}  {:<4} {:>24} {:>10}  verdict", "beta", "cond", "value", "error")?;
    for &beta in &cfg.beta {
        let r = evaluate_all(&frame, beta, &opts)?;
        let values = [
            Some((r.f1.normalized, r.f1.normalized_error)),
            Some((r.f1_prime.normalized, r.f1_prime.normalized_error)),
            None,
            Some((r.f3.normalized, r.f3.normalized_error)),
            None,
            None,
            r.f5.map(|v| (v.normalized, v.normalized_error)),
            None,
        ];
        for ((name, verdict), v) in r.verdicts().iter().zip(values) {
            let (val, err) = v.map_or(("-".to_string(), "-".to_string()), |(a, b)| (format!("{a:.15e}"), format!("{b:.1e}")));
            writeln!(table, "{beta:>10.4}  {name:<4} {val:>24} {err:>10}  {verdict:?}")?;
        }
        let verdicts: std::collections::BTreeMap<&str, _> = r.verdicts().into_iter().collect();
        reports.push(json!({ "beta": beta, "verdicts": verdicts, "report": r }));
    }
    let doc = json!({
        "config": cfg,
        "frame": { "omega": frame.omega, "window": frame.window, "diagnostics": frame.diagnostics },
        "reports": reports,
    });
    write_json(&cfg.out.join("analyze.json"), &doc)?;
    std::fs::write(cfg.out.join("analyze.txt"), &table)?;
    print!("{table}");
    Ok(())
}

#[derive(Serialize)]
struct VerifyRow {
    epsilon: f64,
    distance: f64,
    converged: bool,
    residual: f64,
    newton_iterations: usize,
    continuation_steps: usize,
}

/// Least-squares slope of `ln distance` against `ln ε` over converged rows with ε, distance > 0.
fn loglog_slope(rows: &[VerifyRow]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.converged && r.epsilon > 0.0 && r.distance > 0.0)
        .map(|r| (r.epsilon.ln(), r.distance.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / sxx)
}

pub fn verify(cfg: &RunConfig) -> Result<()> {
    let setup = Setup::new(cfg)?;
    let opts = BvpOptions {
        window: cfg.window,
        tol: cfg.tolerances.shooting,
        ..Default::default()
    };
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for &eps in &cfg.epsilons {
        match direct_verify(&setup.sys, &setup.orbit, eps, &opts) {
            Ok(s) => rows.push(VerifyRow {
                epsilon: eps,
                distance: s.distance,
                converged: true,
                residual: s.residual,
                newton_iterations: s.iterations,
                continuation_steps: s.continuation_steps,
            }),
            Err(e) => {
                eprintln!("epsilon {eps:e}: {e}");
                failures.push(json!({ "epsilon": eps, "error": e.to_string() }));
                rows.push(VerifyRow {
                    epsilon: eps,
                    distance: f64::NAN,
                    converged: false,
                    residual: f64::NAN,
                    newton_iterations: 0,
                    continuation_steps: 0,
                });
            }
        }
    }
    let slope = loglog_slope(&rows);
    let header = ["epsilon", "distance", "converged", "residual", "newton_iterations", "continuation_steps"];
    let csv_path = cfg.out.join("verify.csv");
    if rows.is_empty() {
        std::fs::write(&csv_path, "")?;
    } else {
        write_csv(&csv_path, &header, &rows)?;
    }
    write_json(
        &cfg.out.join("verify.json"),
        &json!({ "config": cfg, "rows": rows, "slope": slope, "failures": failures }),
    )?;
    for r in &rows {
        println!("epsilon {:>10.3e}  distance {:>12.6e}  converged {}", r.epsilon, r.distance, r.converged);
    }
    match slope {
        Some(s) => println!("log-log slope {s:.4}"),
        None => println!("log-log slope unavailable (fewer than two converged points)"),
    }
    Ok(())
}

pub fn scan(cfg: &RunConfig) -> Result<()> {
    let Some(slice) = cfg.slice else {
        bail!("scan needs a slice (--slice variable:lo:hi:samples or \"slice\" in the config)");
    };
    let setup = Setup::new(cfg)?;
    let frame = setup.frame(cfg)?;
    let ws = FrameWorkspace::new(&frame);
    let func = LsBifurcation {
        ws: &ws,
        opts: LsOptions {
            tol: cfg.tolerances.reduction,
            ..Default::default()
        },
    };
    let result = scan_roots(&func, &slice, &cfg.epsilons)?;
    let samples = result.scans.iter().flat_map(|e| {
        e.samples
            .iter()
            .map(move |s| (e.epsilon, s.s, s.value.unwrap_or(f64::NAN), s.value.is_none()))
    });
    write_csv(&cfg.out.join("scan.csv"), &["epsilon", "s", "b", "failed"], samples)?;
    let roots = result
        .scans
        .iter()
        .flat_map(|e| e.roots.iter().map(move |r| (e.epsilon, r.lo, r.hi, r.value)));
    write_csv(&cfg.out.join("roots.csv"), &["epsilon", "lo", "hi", "value"], roots)?;
    write_json(&cfg.out.join("scan.json"), &json!({ "config": cfg, "scan": result }))?;
    for e in &result.scans {
        let roots: Vec<String> = e.roots.iter().map(|r| format!("{:.10}", r.value)).collect();
        println!(
            "epsilon {:>10.3e}  roots [{}]  failed samples {}",
            e.epsilon,
            roots.join(", "),
            e.failed_samples
        );
    }
    println!("classification {:?}", result.classification);
    Ok(())
}

pub fn frame(cfg: &RunConfig) -> Result<()> {
    let setup = Setup::new(cfg)?;
    let frame = setup.frame(cfg)?;
    let rows = frame.grid().iter().map(|&t| {
        let (g, dg, z) = (frame.gamma(t), frame.gamma_prime(t), frame.zeta(t));
        (t, g.x, g.y, dg.x, dg.y, z.x, z.y, frame.delta(t))
    });
    write_csv(
        &cfg.out.join("frame.csv"),
        &["t", "gamma_x", "gamma_y", "dgamma_x", "dgamma_y", "zeta_x", "zeta_y", "delta"],
        rows,
    )?;
    let dichotomy = check_dichotomy(&frame).map_err(|e| e.to_string());
    let doc = json!({
        "config": cfg,
        "omega": frame.omega,
        "window": frame.window,
        "diagnostics": frame.diagnostics,
        "asymptotics": check_asymptotics(&frame),
        "dichotomy_constant": dichotomy.as_ref().ok(),
        "dichotomy_error": dichotomy.as_ref().err(),
    });
    write_json(&cfg.out.join("frame.json"), &doc)?;
    println!(
        "omega {}  nodes {}  Delta(0) {:.6}  Delta gap {:.3e}",
        frame.omega,
        frame.grid().len(),
        frame.delta(0.0),
        frame.diagnostics.end_gap_rel
    );
    Ok(())
}
