use forest_renewal::{
    BetaFunction, EquilibriumScan, Error, GrowthFunction, Grid, InitialData, Model, Rectangle,
    SpectrumReport,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::cli::{Args, Command, Which};
use crate::config::{
    self, build_params, parse_init_flag, parse_range, RawConfig, RawCurve, RawInit, RawNumerics,
    RawSimulate, RawSpectrum, RawSweep, Resolved,
};
use crate::error::{config_error, CliResult};
use crate::output::{emit, json, num, write_file, Csv};
use crate::presets::PRESETS;

pub fn run(args: &Args) -> CliResult<()> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = args.workers {
        if n == 0 {
            return Err(config_error("--workers must be ≥ 1"));
        }
        pool = pool.num_threads(n);
    }
    let pool = pool
        .build()
        .map_err(|e| config_error(format!("cannot start worker pool: {e}")))?;
    pool.install(|| dispatch(args))
}

fn dispatch(args: &Args) -> CliResult<()> {
    if let Command::Presets = args.command {
        return emit(args.out.as_deref(), &list_presets());
    }
    let raw = config::assemble(args.config.as_deref(), args.preset.as_deref())?;
    let cfg = Resolved::new(raw.overlay(flag_layer(&args.command)?))?;
    let out = args.out.as_deref();
    match &args.command {
        Command::Equilibria => emit(out, &equilibria(&cfg)?),
        Command::Curve { .. } => emit(out, &curve(&cfg)?),
        Command::Spectrum { .. } => spectrum(&cfg, out),
        Command::Simulate {
            summary,
            write_init,
            ..
        } => simulate(&cfg, out, summary.as_deref(), write_init.as_deref()),
        Command::Sweep { .. } => emit(out, &sweep(&cfg)?),
        Command::Presets => unreachable!(),
    }
}

/// Command-line values as the topmost configuration layer.
fn flag_layer(command: &Command) -> CliResult<RawConfig> {
    let mut layer = RawConfig::default();
    match command {
        Command::Curve { which, b_min, b_max, n } => {
            layer.curve = Some(RawCurve {
                which: which.map(|w| match w {
                    Which::F => "F".to_string(),
                    Which::R => "R".to_string(),
                }),
                b_min: *b_min,
                b_max: *b_max,
                n: *n,
            });
        }
        Command::Spectrum {
            b,
            index,
            re_min,
            re_max,
            im_max,
        } => {
            layer.spectrum = Some(RawSpectrum {
                b: *b,
                index: *index,
                re_min: *re_min,
                re_max: *re_max,
                im_max: *im_max,
            });
        }
        Command::Simulate {
            init, h, a_max, t_end, ..
        } => {
            layer.numerics = Some(RawNumerics {
                h: *h,
                a_max: *a_max,
                t_end: *t_end,
                ..Default::default()
            });
            if let Some(text) = init {
                layer.simulate = Some(RawSimulate {
                    init: Some(parse_init_flag(text)?),
                });
            }
        }
        Command::Sweep { alpha, p } => {
            layer.sweep = Some(RawSweep {
                alpha: alpha.as_deref().map(|s| parse_range("alpha", s)).transpose()?,
                p: p.as_deref().map(|s| parse_range("p", s)).transpose()?,
            });
        }
        Command::Equilibria | Command::Presets => {}
    }
    Ok(layer)
}

fn list_presets() -> String {
    let mut csv = Csv::default();
    csv.comment("built-in parameter sets; use with --preset NAME");
    csv.row(&["name", "description"]);
    for p in PRESETS {
        csv.row(&[p.name, p.summary]);
    }
    csv.finish()
}

fn describe(cfg: &Resolved) -> String {
    let p = &cfg.model.params;
    let beta = match p.beta() {
        BetaFunction::Nicholson { alpha } => format!("beta(x) = {alpha} x exp(-x)"),
        BetaFunction::Saturating { alpha, k, origin } => {
            format!("beta(x) = {alpha} (1 - exp(-{k} (x - {origin})))")
        }
        BetaFunction::Table(_) => "beta tabulated".to_string(),
    };
    let g = match p.g() {
        GrowthFunction::ExpDecay { p } => format!("g(x) = {p} exp(-x)"),
        GrowthFunction::Table(_) => "g tabulated".to_string(),
    };
    let preset = cfg
        .preset
        .as_deref()
        .map(|n| format!("preset {n}; "))
        .unwrap_or_default();
    format!("{preset}mu = {}, x_m = {}, {beta}, {g}", p.mu(), p.x_m())
}

#[derive(Serialize)]
struct ModelSummary<'a> {
    preset: Option<&'a str>,
    mu: f64,
    x_m: f64,
    beta: &'a BetaFunction,
    g: &'a GrowthFunction,
}

fn model_summary(cfg: &Resolved) -> ModelSummary<'_> {
    let p = &cfg.model.params;
    ModelSummary {
        preset: cfg.preset.as_deref(),
        mu: p.mu(),
        x_m: p.x_m(),
        beta: p.beta(),
        g: p.g(),
    }
}

fn scan(cfg: &Resolved) -> CliResult<EquilibriumScan> {
    Ok(cfg.model.find_equilibria(cfg.scan_bound(&cfg.model), cfg.n_scan)?)
}

fn equilibria(cfg: &Resolved) -> CliResult<String> {
    let scan = scan(cfg)?;
    let lambdas = scan
        .records
        .par_iter()
        .map(|r| cfg.model.characteristic(r.b)?.real_root())
        .collect::<Result<Vec<_>, Error>>()?;
    let mut csv = Csv::default();
    csv.comment(describe(cfg))
        .comment(format!(
            "scan of [0, {}] on {} cells",
            cfg.scan_bound(&cfg.model),
            cfg.n_scan
        ))
        .comment("b: equilibrium birth rate [births per unit time]")
        .comment("R: expected lifetime reproduction R(b) [dimensionless]")
        .comment("F_prime: slope of F(b) = b R(b) at b [dimensionless]")
        .comment("lambda0: dominant real characteristic root [1/time]; empty if none lies right of -mu")
        .comment("verdict: stable if F_prime < 1, unstable if > 1, critical within tol_crit");
    for w in &scan.warnings {
        csv.comment(format!("warning: {w}"));
    }
    csv.row(&["b", "R", "F_prime", "lambda0", "verdict"]);
    for (r, l) in scan.records.iter().zip(&lambdas) {
        csv.row(&[
            num(r.b),
            num(r.r_value),
            num(r.f_prime),
            l.map(num).unwrap_or_default(),
            r.verdict.as_str().to_string(),
        ]);
    }
    Ok(csv.finish())
}

fn curve(cfg: &Resolved) -> CliResult<String> {
    let which = match cfg.curve.which.as_deref().unwrap_or("F") {
        "F" | "f" => Which::F,
        "R" | "r" => Which::R,
        other => return Err(config_error(format!("[curve] which must be F or R, got {other:?}"))),
    };
    let b_min = cfg.curve.b_min.unwrap_or(0.0);
    let b_max = cfg.curve.b_max.unwrap_or(10.0);
    let n = cfg.curve.n.unwrap_or(200);
    if !(b_min >= 0.0) || !(b_max > b_min) || !b_max.is_finite() {
        return Err(config_error(format!("[curve] need 0 ≤ b_min < b_max, got {b_min}..{b_max}")));
    }
    if n == 0 {
        return Err(config_error("[curve] n must be ≥ 1"));
    }
    let bs: Vec<f64> = (0..=n)
        .map(|i| if i == n { b_max } else { b_min + (b_max - b_min) * i as f64 / n as f64 })
        .collect();
    let model = &cfg.model;
    let values = bs
        .par_iter()
        .map(|&b| match which {
            Which::F => model.map_f(b),
            Which::R => model.reproduction_r(b),
        })
        .collect::<Result<Vec<_>, Error>>()?;
    let mut csv = Csv::default();
    csv.comment(describe(cfg))
        .comment("b: constant birth rate [births per unit time]");
    match which {
        Which::F => {
            csv.comment("F: b R(b), births produced by constant birth rate b [births per unit time]")
                .comment("y: the diagonal y = b; equilibria are crossings of F and y")
                .row(&["b", "F", "y"]);
            for (b, v) in bs.iter().zip(&values) {
                csv.row(&[num(*b), num(*v), num(*b)]);
            }
        }
        Which::R => {
            csv.comment("R: expected lifetime reproduction at birth rate b [dimensionless]")
                .row(&["b", "R"]);
            for (b, v) in bs.iter().zip(&values) {
                csv.row(&[num(*b), num(*v)]);
            }
        }
    }
    Ok(csv.finish())
}

#[derive(Serialize)]
struct SpectrumOutput<'a> {
    model: ModelSummary<'a>,
    #[serde(flatten)]
    report: &'a SpectrumReport,
    warnings: Vec<String>,
}

fn spectrum(cfg: &Resolved, out: Option<&std::path::Path>) -> CliResult<()> {
    let mut warnings = Vec::new();
    let b = match (cfg.spectrum.b, cfg.spectrum.index) {
        (Some(b), _) => b,
        (None, Some(i)) => {
            let scan = scan(cfg)?;
            warnings.extend(scan.warnings.iter().cloned());
            scan.records
                .get(i)
                .map(|r| r.b)
                .ok_or_else(|| config_error(format!("equilibrium index {i} out of range: found {}", scan.records.len())))?
        }
        (None, None) => return Err(config_error("spectrum needs --b B or --index I")),
    };
    let s = &cfg.spectrum;
    let rect = match (s.re_min, s.re_max, s.im_max) {
        (None, None, None) => None,
        _ => {
            let mu = cfg.model.params.mu();
            Some(Rectangle::new(
                s.re_min.unwrap_or(-1e-6),
                s.re_max.unwrap_or(5.0 * mu),
                s.im_max.unwrap_or(50.0 * mu),
            ))
        }
    };
    let report = cfg.model.stability_report_in(b, rect)?;
    if b > 0.0 && report.r_residual > cfg.model.numerics.tol_eq {
        let w = format!(
            "b = {b} is not an equilibrium within tol_eq: |R(b) - 1| = {:e}",
            report.r_residual
        );
        eprintln!("warning: {w}");
        warnings.push(w);
    }
    let text = json(&SpectrumOutput {
        model: model_summary(cfg),
        report: &report,
        warnings,
    });
    emit(out, &text)?;
    match report.inconclusive {
        Some(msg) => Err(Error::Inconclusive(msg).into()),
        None => Ok(()),
    }
}

#[derive(Serialize)]
struct GridSummary {
    h: f64,
    a_max: f64,
    t_end: f64,
    steps: usize,
}

#[derive(Serialize)]
struct SimulationSummary<'a> {
    model: ModelSummary<'a>,
    init: &'a InitialData,
    grid: GridSummary,
    b0_plus: f64,
    b_final: f64,
    converged: bool,
    asymptote: forest_renewal::simulate::Asymptote,
    equilibria: Vec<f64>,
    warnings: Vec<String>,
}

fn simulate(
    cfg: &Resolved,
    out: Option<&std::path::Path>,
    summary_path: Option<&std::path::Path>,
    write_init: Option<&std::path::Path>,
) -> CliResult<()> {
    let raw_init: &RawInit = cfg
        .init
        .as_ref()
        .ok_or_else(|| config_error("simulate needs --init or a [simulate.init] section"))?;
    let init = raw_init.build()?;
    let s = &cfg.sim;
    let grid = Grid::new(s.h, s.a_max, s.t_end)?;
    let scan = scan(cfg)?;
    let eqs: Vec<f64> = scan.records.iter().map(|r| r.b).collect();
    let mut traj = cfg.model.simulate_with(&grid, &init, s.conv_window, s.conv_tol)?;
    traj.detect_asymptote(s.conv_window, s.conv_tol, &eqs);

    if let Some(path) = write_init {
        write_file(path, &config::write_history(&init.sample(&grid), grid.h()))?;
    }

    let mut csv = Csv::default();
    csv.comment(describe(cfg))
        .comment(format!("initial data: {}", raw_init.describe()))
        .comment(format!("h = {}, a_max = {}, t_end = {}", grid.h(), grid.a_max(), grid.t_end()))
        .comment("t: time [time]")
        .comment("b: birth rate b(t) [births per unit time]; the t = 0 row is phi(0)");
    for w in &traj.warnings {
        csv.comment(format!("warning: {w}"));
    }
    csv.row(&["t", "b"]);
    for (t, b) in traj.times.iter().zip(&traj.values) {
        csv.row(&[num(*t), num(*b)]);
    }
    emit(out, &csv.finish())?;

    let mut warnings = scan.warnings.clone();
    warnings.extend(traj.warnings.iter().cloned());
    let summary = json(&SimulationSummary {
        model: model_summary(cfg),
        init: &init,
        grid: GridSummary {
            h: grid.h(),
            a_max: grid.a_max(),
            t_end: grid.t_end(),
            steps: grid.steps(),
        },
        b0_plus: traj.b0_plus,
        b_final: traj.last(),
        converged: traj.converged(),
        asymptote: traj.asymptote,
        equilibria: eqs,
        warnings,
    });
    match summary_path {
        Some(path) => write_file(path, &summary),
        None => {
            eprint!("{summary}");
            Ok(())
        }
    }
}

fn sweep(cfg: &Resolved) -> CliResult<String> {
    let alphas = cfg
        .sweep
        .alpha
        .ok_or_else(|| config_error("sweep needs an alpha range (--alpha MIN:MAX:STEPS)"))?
        .points("alpha")?;
    let ps = cfg
        .sweep
        .p
        .ok_or_else(|| config_error("sweep needs a p range (--p MIN:MAX:STEPS)"))?
        .points("p")?;
    let beta = cfg.raw_model.beta.as_ref().map(|b| b.kind.as_str());
    let g = cfg.raw_model.g.as_ref().map(|g| g.kind.as_str());
    if !matches!(beta, Some("nicholson" | "saturating")) || g != Some("exp_decay") {
        return Err(config_error(
            "sweep varies alpha and p: needs beta of kind nicholson or saturating and g of kind exp_decay",
        ));
    }
    let cells: Vec<(f64, f64)> = alphas
        .iter()
        .flat_map(|&a| ps.iter().map(move |&p| (a, p)))
        .collect();
    let results: Vec<CliResult<EquilibriumScan>> = cells
        .par_iter()
        .map(|&(alpha, p)| {
            let mut raw = cfg.raw_model.clone();
            raw.beta.as_mut().unwrap().alpha = Some(alpha);
            raw.g.as_mut().unwrap().p = Some(p);
            let model = Model::with_numerics(build_params(&raw)?, cfg.model.numerics)?;
            Ok(model.find_equilibria(cfg.scan_bound(&model), cfg.n_scan)?)
        })
        .collect();
    let mut csv = Csv::default();
    csv.comment(describe(cfg))
        .comment("alpha: fertility scale [1/time]; p: maximal growth rate [height/time]")
        .comment("n_equilibria: equilibria found including b = 0 [count]")
        .comment("signature: verdicts in ascending b (S stable, U unstable, C critical)")
        .comment("error: why a cell failed; other columns are then empty")
        .row(&["alpha", "p", "n_equilibria", "signature", "error"]);
    for ((alpha, p), res) in cells.iter().zip(&results) {
        match res {
            Ok(scan) => csv.row(&[
                num(*alpha),
                num(*p),
                scan.records.len().to_string(),
                scan.signature(),
                String::new(),
            ]),
            Err(e) => csv.row(&[num(*alpha), num(*p), String::new(), String::new(), e.to_string()]),
        };
    }
    Ok(csv.finish())
}
