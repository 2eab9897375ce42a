use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use cclab_core::capacity::{bounds_for, CapacityOptions, CapacityProblem};
use cclab_core::content::content_bracket;
use cclab_core::measure::{frostman_rescale, growth_constant, uniform_on_generation, CubeUnionMeasure, GrowthProbe, Measure};
use cclab_core::potential::{evaluator_registry, PotentialEvaluator};
use cclab_core::regularity::{bmo_estimate_with, lip_alpha_estimate_with, SeminormOptions, SeminormReport};
use cclab_core::segment::{growth_per_decade, segment_endpoints, segment_sweep};

use crate::config::RunConfig;
use crate::svg::{Plot, Series};
use crate::CliError;

/// Fixed 17-significant-digit formatting, so re-runs are byte-identical.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

struct Csv(String);

impl Csv {
    fn new(header: &[&str]) -> Self {
        Csv(header.join(",") + "\n")
    }

    fn row(&mut self, cells: &[String]) {
        let _ = writeln!(self.0, "{}", cells.join(","));
    }
}

fn write(dir: &Path, name: &str, body: &str) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Engine(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    fs::write(&path, body).map_err(|e| CliError::Engine(format!("cannot write {}: {e}", path.display())))
}

fn write_json<T: Serialize>(dir: &Path, name: &str, doc: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(doc).map_err(|e| CliError::Engine(e.to_string()))?;
    write(dir, name, &(text + "\n"))
}

fn evaluator(cfg: &RunConfig) -> Result<Arc<dyn PotentialEvaluator>, CliError> {
    evaluator_registry().get(&cfg.evaluator).map_err(|e| CliError::Config(e.to_string()))
}

fn measure_at(cfg: &RunConfig, k: usize) -> Result<CubeUnionMeasure, CliError> {
    Ok(uniform_on_generation(Arc::new(cfg.spec.build_generation(k)?))?)
}

pub fn capacity(cfg: &RunConfig) -> Result<(), CliError> {
    let opts = CapacityOptions { evaluator: evaluator(cfg)?, ..Default::default() };
    let mut csv = Csv::new(&[
        "k",
        "lower",
        "upper",
        "theta_sum_inv",
        "ratio_lower",
        "ratio_upper",
        "upper_sym",
        "upper_onesided",
        "tol",
    ]);
    let mut rows = Vec::new();
    println!("{:>3} {:>12} {:>12} {:>12} {:>8} {:>8}", "k", "lower", "upper", "1/sum", "r_lo", "r_up");
    for k in cfg.kmin..=cfg.kmax {
        let problem = CapacityProblem::from_spec(&cfg.spec, k)?;
        let b = bounds_for(&problem, cfg.tol_for(k), &opts)?;
        println!(
            "{k:>3} {:>12.6} {:>12.6} {:>12.6} {:>8.3} {:>8.3}",
            b.lower, b.upper, b.theta_sum_inv, b.ratio_lower, b.ratio_upper
        );
        csv.row(&[
            k.to_string(),
            num(b.lower),
            num(b.upper),
            num(b.theta_sum_inv),
            num(b.ratio_lower),
            num(b.ratio_upper),
            num(b.upper_sym),
            b.upper_onesided.map(num).unwrap_or_default(),
            num(b.tol),
        ]);
        rows.push(b);
    }
    let ks = |f: &dyn Fn(&cclab_core::capacity::CapacityBounds) -> f64| {
        rows.iter().map(|b| (b.k as f64, f(b))).collect::<Vec<_>>()
    };
    let plot = Plot {
        title: format!("capacity bounds, n = {}", cfg.spec.n()),
        x_label: "k".into(),
        y_label: "capacity".into(),
        log_x: false,
        log_y: true,
        series: vec![
            Series { name: "lower".into(), points: ks(&|b| b.lower) },
            Series { name: "upper".into(), points: ks(&|b| b.upper) },
            Series { name: "1/Σθ_j".into(), points: ks(&|b| b.theta_sum_inv) },
        ],
    };
    write(&cfg.out, "capacity.csv", &csv.0)?;
    write_json(&cfg.out, "capacity.json", &json!({"command": "capacity", "config": cfg, "rows": rows}))?;
    write(&cfg.out, "capacity.svg", &plot.render())
}

pub fn content(cfg: &RunConfig) -> Result<(), CliError> {
    let mut csv = Csv::new(&["k", "d", "lower", "upper"]);
    let mut rows = Vec::new();
    for k in cfg.kmin..=cfg.kmax {
        let b = content_bracket(&cfg.spec, k, cfg.content_d)?;
        println!("k={k} d={} content in [{:.6}, {:.6}]", b.d, b.lower, b.upper);
        csv.row(&[k.to_string(), num(b.d), num(b.lower), num(b.upper)]);
        rows.push(json!({"k": k, "bracket": b}));
    }
    write(&cfg.out, "content.csv", &csv.0)?;
    write_json(&cfg.out, "content.json", &json!({"command": "content", "config": cfg, "rows": rows}))
}

fn seminorm_options(cfg: &RunConfig) -> SeminormOptions {
    let mut opts = SeminormOptions { kernel: cfg.kernel, ..Default::default() };
    if let Some(t) = cfg.tol {
        opts.tol = t;
    }
    opts
}

fn seminorm_outputs(cfg: &RunConfig, stem: &str, d: f64, raw_growth: f64, reports: &[SeminormReport]) -> Result<(), CliError> {
    let mut csv = Csv::new(&["kind", "alpha", "value", "samples", "seed"]);
    for r in reports {
        csv.row(&[
            r.kind.name().to_string(),
            r.alpha.map(num).unwrap_or_default(),
            num(r.value),
            r.samples.to_string(),
            r.seed.to_string(),
        ]);
    }
    write(&cfg.out, &format!("{stem}.csv"), &csv.0)?;
    write_json(
        &cfg.out,
        &format!("{stem}.json"),
        &json!({
            "command": stem,
            "config": cfg,
            "k": cfg.kmax,
            "growth_dimension": d,
            "growth_constant_before_rescale": raw_growth,
            "note": "sampled lower estimates of the seminorm; thresholds are empirical budgets",
            "reports": reports,
        }),
    )
}

fn rescaled(cfg: &RunConfig, d: f64) -> Result<(CubeUnionMeasure, f64), CliError> {
    let mu = measure_at(cfg, cfg.kmax)?;
    let probe = GrowthProbe::default();
    let c = growth_constant(&mu, d, probe.trials, probe.seed)?;
    Ok((frostman_rescale(&mu, d)?, c))
}

pub fn bmo(cfg: &RunConfig) -> Result<(), CliError> {
    let d = cfg.spec.n() as f64;
    let (mu, c) = rescaled(cfg, d)?;
    let opts = seminorm_options(cfg);
    let mut reports = Vec::new();
    for &seed in &cfg.seeds {
        let r = bmo_estimate_with(&mu, cfg.bmo_cubes, cfg.bmo_nodes, seed, &opts)?;
        println!("BMO seed {seed}: {:.6} ± {:.6}", r.value, r.half_width.unwrap_or(0.0));
        reports.push(r);
    }
    seminorm_outputs(cfg, "bmo", d, c, &reports)
}

pub fn lip(cfg: &RunConfig) -> Result<(), CliError> {
    let d = cfg.spec.n() as f64 + cfg.lip_alpha;
    let (mu, c) = rescaled(cfg, d)?;
    let opts = seminorm_options(cfg);
    let mut reports = Vec::new();
    for &seed in &cfg.seeds {
        let r = lip_alpha_estimate_with(&mu, cfg.lip_alpha, cfg.lip_pairs, seed, &opts)?;
        println!("Lip_{} seed {seed}: {:.6}", cfg.lip_alpha, r.value);
        reports.push(r);
    }
    seminorm_outputs(cfg, "lip", d, c, &reports)
}

pub fn segment_demo(cfg: &RunConfig) -> Result<(), CliError> {
    let (a, b) = segment_endpoints(cfg.spec.n(), cfg.segment_angle, cfg.segment_length)?;
    let tol = cfg.tol.unwrap_or(1e-3);
    let rows = segment_sweep(&a, &b, &cfg.segment_ms, cfg.kernel, tol)?;
    let dim = a.dim();
    let mut header = vec!["m".to_string(), "sup".into(), "err".into(), "harmonic".into()];
    header.extend((1..dim).map(|i| format!("x{i}")));
    header.push("t".into());
    let mut csv = Csv::new(&header.iter().map(String::as_str).collect::<Vec<_>>());
    for r in &rows {
        let h: f64 = (1..=r.m).map(|j| 1.0 / j as f64).sum();
        println!("m={:>6} sup={:.6} (H_m = {h:.6})", r.m, r.sup);
        let mut cells = vec![r.m.to_string(), num(r.sup), num(r.report.err), num(h)];
        cells.extend(r.report.argpoint.as_slice().iter().map(|v| num(*v)));
        csv.row(&cells);
    }
    let growth = growth_per_decade(&rows);
    if let Some(g) = growth {
        println!("growth per decade of m: {g:.4}");
    }
    let plot = Plot {
        title: format!("segment sup-potential, angle {:.4}", cfg.segment_angle),
        x_label: "m".into(),
        y_label: "sup P∗μ_m".into(),
        log_x: true,
        log_y: false,
        series: vec![Series { name: "sup".into(), points: rows.iter().map(|r| (r.m as f64, r.sup)).collect() }],
    };
    write(&cfg.out, "segment.csv", &csv.0)?;
    write_json(
        &cfg.out,
        "segment.json",
        &json!({"command": "segment-demo", "config": cfg, "a": a, "b": b, "growth_per_decade": growth, "rows": rows}),
    )?;
    write(&cfg.out, "segment.svg", &plot.render())
}

pub fn potential_field(cfg: &RunConfig) -> Result<(), CliError> {
    let k = cfg.kmax;
    let m = measure_at(cfg, k)?;
    let root = m.support().bounding_cube();
    let mu: Measure = m.into();
    let eval = evaluator(cfg)?;
    let kernel = cfg.kernel.kernel();
    let tol = cfg.tol_for(k);
    let dim = root.dim();
    let lo = -cfg.field_margin * root.side;
    let span = (1.0 + 2.0 * cfg.field_margin) * root.side;
    let coord = |i: usize, steps: usize| {
        if steps == 1 { lo + 0.5 * span } else { lo + span * i as f64 / (steps - 1) as f64 }
    };
    let mut points = Vec::with_capacity(cfg.field_nx * cfg.field_nt);
    for it in 0..cfg.field_nt {
        for ix in 0..cfg.field_nx {
            // x_1 and t vary; the other spatial coordinates sit at the centre.
            let mut p = root.center();
            p[0] = root.corner[0] + coord(ix, cfg.field_nx);
            p[dim - 1] = root.corner[dim - 1] + coord(it, cfg.field_nt);
            points.push(p);
        }
    }
    let values: Vec<_> = points
        .par_iter()
        .map(|p| eval.evaluate(&mu, kernel.as_ref(), p, tol))
        .collect::<Result<_, _>>()?;
    let mut header: Vec<String> = (1..dim).map(|i| format!("x{i}")).collect();
    header.extend(["t".to_string(), "value".into(), "err".into()]);
    let mut csv = Csv::new(&header.iter().map(String::as_str).collect::<Vec<_>>());
    for (p, v) in points.iter().zip(&values) {
        let mut cells: Vec<String> = p.as_slice().iter().map(|c| num(*c)).collect();
        cells.push(num(v.value));
        cells.push(num(v.err + v.singular_excluded));
        csv.row(&cells);
    }
    println!("{} grid points written", points.len());
    write(&cfg.out, "potential_field.csv", &csv.0)
}
