//! Command-line front end: solve static stars, build perturbed initial data,
//! verify the sign-pattern clauses, sweep (delta, h), and render SVG plots.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use efstar::config::{parse_config_file, parse_f64_list, parse_radius_list, RunConfig};
use efstar::ef::{static_constraint_residual, EfStaticFields, KernelForm};
use efstar::error::{Error, Result};
use efstar::fluid::FluidModel;
use efstar::grid::GridSpec;
use efstar::io as fio;
use efstar::perturb::{build_initial_data, Perturbation};
use efstar::svg::Chart;
use efstar::sweep::{bisect_critical_h, run_sweep, SweepSpec};
use efstar::theorem::verify_theorem;
use efstar::tov::{solve_static, StaticProfile};

#[derive(Parser)]
#[command(
    name = "efstar",
    version,
    about = "Static perfect-fluid stars in Eddington-Finkelstein form and trapped-surface initial data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a static star, export the profile and its tail asymptotics
    #[command(name = "static")]
    Static(StaticArgs),
    /// Build (r*, delta, h)-perturbed initial data and the theorem report
    Perturb(PerturbArgs),
    /// Like perturb, and print one pass/fail line per theorem clause
    Verify(PerturbArgs),
    /// Sweep (delta, h), fit scaling exponents, or bisect the critical ratio
    Sweep(SweepArgs),
    /// Render an SVG chart from a previously written CSV
    Plot(PlotArgs),
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Sound speed k in (0, 1)
    #[arg(long)]
    k: Option<f64>,
    /// Central density (geometric units), default 1
    #[arg(long)]
    rho0: Option<f64>,
    /// Inner radius; accepts an L suffix (units of (4 pi rho0)^-1/2)
    #[arg(long)]
    r_min: Option<String>,
    /// Outer radius, default 1000L
    #[arg(long)]
    r_max: Option<String>,
    /// Integrator relative tolerance, default 1e-10
    #[arg(long)]
    tol: Option<f64>,
    /// key = value config file; flags override file values
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (also env EFSTAR_OUT), default "."
    #[arg(long, env = "EFSTAR_OUT")]
    out_dir: Option<PathBuf>,
    /// Emit SVG plots alongside the data files
    #[arg(long)]
    plot: bool,
}

#[derive(Args, Clone)]
struct StaticArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Lower edge of the asymptotics fit window, default 100L
    #[arg(long)]
    fit_lo: Option<String>,
    /// Upper edge of the asymptotics fit window, default r_max
    #[arg(long)]
    fit_hi: Option<String>,
}

#[derive(Args, Clone)]
struct PerturbArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Band center, default 2L
    #[arg(long)]
    r_star: Option<String>,
    /// Band half-width
    #[arg(long)]
    delta: Option<String>,
    /// Perturbation strength parameter (V is scaled by 1 + 1/h in the band)
    #[arg(long)]
    h: Option<f64>,
    /// Annulus width Delta, default r*/2
    #[arg(long)]
    big_delta: Option<String>,
}

#[derive(Args, Clone)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Band center, default 2L
    #[arg(long)]
    r_star: Option<String>,
    /// Comma-separated band half-widths (L suffix allowed)
    #[arg(long)]
    deltas: Option<String>,
    /// Comma-separated strength parameters
    #[arg(long)]
    hs: Option<String>,
    /// Annulus width Delta, default r*/2
    #[arg(long)]
    big_delta: Option<String>,
    /// Worker threads, default 1; output is identical for any count
    #[arg(long)]
    workers: Option<usize>,
    /// Bisect the critical h at fixed delta instead of sweeping
    #[arg(long)]
    bisect: bool,
    /// Sound speeds for bisection mode, default just --k
    #[arg(long)]
    ks: Option<String>,
    /// Fixed delta for bisection mode (L suffix allowed)
    #[arg(long)]
    delta: Option<String>,
}

#[derive(Args, Clone)]
struct PlotArgs {
    /// Input CSV written by static/perturb/sweep
    #[arg(long)]
    input: PathBuf,
    /// Output SVG path
    #[arg(long)]
    out: PathBuf,
    /// Column for the x axis
    #[arg(long, default_value = "r")]
    x_col: String,
    /// Comma-separated columns for the y axis
    #[arg(long, default_value = "a")]
    y_cols: String,
    #[arg(long)]
    log_x: bool,
    #[arg(long)]
    log_y: bool,
    /// Horizontal reference line, VALUE:LABEL
    #[arg(long)]
    hline: Option<String>,
    #[arg(long)]
    title: Option<String>,
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Static(args) => cmd_static(args),
        Command::Perturb(args) => cmd_perturb(args, false),
        Command::Verify(args) => cmd_perturb(args, true),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Plot(args) => cmd_plot(args),
    };
    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}

fn build_config(common: &CommonArgs) -> Result<RunConfig> {
    let mut cfg = RunConfig {
        k: common.k,
        rho0: common.rho0,
        r_min: common.r_min.as_deref().map(str::parse).transpose()?,
        r_max: common.r_max.as_deref().map(str::parse).transpose()?,
        tol: common.tol,
        out_dir: common.out_dir.clone(),
        plot: common.plot,
        ..Default::default()
    };
    if let Some(path) = &common.config {
        cfg.apply_file(&parse_config_file(path)?)?;
    }
    Ok(cfg)
}

fn grid_spec(cfg: &RunConfig, model: &FluidModel) -> GridSpec {
    let mut spec = GridSpec::for_model(model);
    if let Some(r) = &cfg.r_min {
        spec.r_min = r.resolve(model);
    }
    if let Some(r) = &cfg.r_max {
        spec.r_max = r.resolve(model);
    }
    if let Some(t) = cfg.tol {
        spec.rel_tol = t;
    }
    spec
}

fn prepare_out_dir(cfg: &RunConfig) -> Result<PathBuf> {
    let dir = cfg.out_dir();
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

/// Timestamps live here and only here; the data files stay byte-stable.
fn write_manifest(dir: &Path, command: &str, details: serde_json::Value) -> Result<()> {
    let ts = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let manifest = serde_json::json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "timestamp_unix": ts,
        "parameters": details,
    });
    let mut f = fs::File::create(dir.join("run_manifest.json"))?;
    serde_json::to_writer_pretty(&mut f, &manifest)
        .map_err(|e| Error::Parse(format!("manifest: {e}")))?;
    writeln!(f)?;
    Ok(())
}

fn write_file(path: &Path, body: impl FnOnce(&mut fs::File) -> Result<()>) -> Result<()> {
    let mut f = fs::File::create(path)?;
    body(&mut f)?;
    Ok(())
}

fn solve_star(cfg: &RunConfig) -> Result<(FluidModel, StaticProfile, EfStaticFields)> {
    let model = cfg.model()?;
    let spec = grid_spec(cfg, &model);
    let profile = solve_static(&model, &spec)?;
    let fields = EfStaticFields::from_profile(&profile);
    Ok((model, profile, fields))
}

fn cmd_static(args: StaticArgs) -> Result<()> {
    let cfg = build_config(&args.common)?;
    let (model, profile, fields) = solve_star(&cfg)?;
    let dir = prepare_out_dir(&cfg)?;
    let l = model.radial_scale();

    let fit_lo = args
        .fit_lo
        .as_deref()
        .map(str::parse)
        .transpose()?
        .map(|r: efstar::config::RadiusSpec| r.resolve(&model))
        .unwrap_or(100.0 * l);
    let fit_hi = args
        .fit_hi
        .as_deref()
        .map(str::parse)
        .transpose()?
        .map(|r: efstar::config::RadiusSpec| r.resolve(&model))
        .unwrap_or_else(|| profile.grid().r_max());
    let report = efstar::asymptotics::fit_asymptotics(&profile, fit_lo, fit_hi)?;

    write_file(&dir.join("profile.csv"), |f| fio::write_profile_csv(f, &profile))?;
    write_file(&dir.join("ef.csv"), |f| fio::write_ef_csv(f, &fields))?;
    write_file(&dir.join("asymptotics.json"), |f| fio::write_asymptotics_json(f, &report))?;
    write_manifest(
        &dir,
        "static",
        serde_json::json!({
            "k": model.k(), "rho0": model.rho0(),
            "r_max": profile.grid().r_max(), "fit_window": [fit_lo, fit_hi],
        }),
    )?;

    let alpha = model.alpha();
    println!("static star solved: k = {}, rho0 = {}", model.k(), model.rho0());
    println!("  L = {l:.6e}  (radii below also in units of L)");
    println!(
        "  grid: {} nodes, r in [{:.6e}, {:.6e}] = [{:.3} L, {:.3} L]",
        profile.grid().len(),
        profile.grid().r_min(),
        profile.grid().r_max(),
        profile.grid().r_min() / l,
        profile.grid().r_max() / l
    );
    println!("  alpha = {alpha:.9}  (1 - alpha = {:.9})", 1.0 - alpha);
    println!(
        "  a-limit estimate  = {:.9}   [window {:.3e}..{:.3e}, rms {:.2e}]",
        report.a_limit_est, report.window[0], report.window[1], report.residuals.a_limit
    );
    println!(
        "  b exponent        = {:.9}   (2k^2/(1+k^2) = {:.9})",
        report.b_exponent_est,
        2.0 * model.k() * model.k() / (1.0 + model.k() * model.k())
    );
    println!(
        "  b constant        = {:.9}   (recorded, convention-dependent)",
        report.b_const_est
    );
    println!(
        "  r^2 rho tail      = {:.9e} (singular coefficient c = {:.9e})",
        report.rho_coeff_est,
        model.singular_coefficient()
    );
    let res = static_constraint_residual(&fields, KernelForm::Contrast);
    println!("  integral-constraint residual (contrast kernel): {:.3e}", res.max_abs);

    if cfg.plot {
        let mut chart = Chart::new(
            &format!("a(r), k = {}", model.k()),
            "r / L",
            "a",
        )
        .with_log_x();
        let pts: Vec<(f64, f64)> = profile
            .grid()
            .nodes()
            .iter()
            .zip(profile.a_values())
            .map(|(&r, a)| (r / l, a))
            .collect();
        chart.add_series("a(r)", pts);
        chart.add_hline(1.0 - alpha, "1 - alpha");
        write_file(&dir.join("static_a.svg"), |f| {
            f.write_all(chart.render().as_bytes()).map_err(Error::from)
        })?;
        println!("  wrote static_a.svg");
    }
    println!("wrote profile.csv, ef.csv, asymptotics.json in {}", dir.display());
    Ok(())
}

fn perturbation_from(cfg: &RunConfig, model: &FluidModel, args: &PerturbArgs) -> Result<Perturbation> {
    let l_default = efstar::config::RadiusSpec::ScaleUnits(2.0);
    let r_star = args
        .r_star
        .as_deref()
        .map(str::parse)
        .transpose()?
        .or(cfg.r_star)
        .unwrap_or(l_default)
        .resolve(model);
    let delta = args
        .delta
        .as_deref()
        .map(str::parse)
        .transpose()?
        .or(cfg.delta)
        .ok_or_else(|| Error::Config("missing required parameter delta".into()))?
        .resolve(model);
    let h = args
        .h
        .or(cfg.h)
        .ok_or_else(|| Error::Config("missing required parameter h".into()))?;
    let big_delta = args
        .big_delta
        .as_deref()
        .map(str::parse)
        .transpose()?
        .or(cfg.big_delta)
        .map(|r| r.resolve(model));
    Perturbation::new(r_star, delta, h, big_delta)
}

fn cmd_perturb(args: PerturbArgs, print_clauses: bool) -> Result<()> {
    let mut cfg = build_config(&args.common)?;
    // CLI values for the perturbation are merged inside perturbation_from;
    // fill cfg so the config file can supply them too
    if let Some(path) = &args.common.config {
        cfg.apply_file(&parse_config_file(path)?)?;
    }
    let (model, _profile, fields) = solve_star(&cfg)?;
    let pert = perturbation_from(&cfg, &model, &args)?;
    let data = build_initial_data(&fields, &pert)?;
    let report = verify_theorem(&data, &fields, &pert)?;
    let dir = prepare_out_dir(&cfg)?;

    write_file(&dir.join("idata.csv"), |f| fio::write_idata_csv(f, &data))?;
    write_file(&dir.join("theorem.json"), |f| fio::write_theorem_json(f, &report))?;
    write_manifest(
        &dir,
        if print_clauses { "verify" } else { "perturb" },
        serde_json::json!({
            "k": model.k(), "rho0": model.rho0(),
            "r_star": pert.r_star, "delta": pert.delta, "h": pert.h,
            "big_delta": pert.big_delta,
        }),
    )?;

    let l = model.radial_scale();
    println!(
        "perturbed initial data: k = {}, r* = {:.6e} ({:.3} L), delta = {:.6e}, h = {}",
        model.k(),
        pert.r_star,
        pert.r_star / l,
        pert.delta,
        pert.h
    );
    println!(
        "  C1 = {:.6}  delta/h = {:.6e}  1/C1 = {:.6e}  hypothesis_met = {}",
        report.c1,
        report.delta_over_h,
        1.0 / report.c1,
        report.hypothesis_met
    );
    println!(
        "  min a0 = {:.9} at r = {:.6e} ({:.3} L)",
        report.min_a0,
        report.min_a0_radius,
        report.min_a0_radius / l
    );
    println!(
        "  band: min dv-a = {:.6e}, bound = -{:.6e};  annulus sup dv-a = {:.6e}",
        report.band_min_av, report.band_bound, report.annulus_sup_av
    );
    if print_clauses {
        for c in &report.clauses {
            let witness = c
                .witness_radius
                .map(|r| format!("  (witness r = {r:.6e})"))
                .unwrap_or_default();
            println!("  {} {}{witness}", if c.ok { "PASS" } else { "FAIL" }, c.name);
        }
    }

    if cfg.plot {
        let window = |r: f64| r >= pert.r_star - 2.0 * pert.big_delta && r <= pert.r_star + 2.0 * pert.big_delta;
        let mut a_chart = Chart::new("a0 and static a", "r / L", "a");
        let a0_pts: Vec<(f64, f64)> = data
            .grid()
            .nodes()
            .iter()
            .zip(data.a0())
            .filter(|(&r, _)| window(r))
            .map(|(&r, &v)| (r / l, v))
            .collect();
        let as_pts: Vec<(f64, f64)> = data
            .grid()
            .nodes()
            .iter()
            .zip(data.a0_static())
            .filter(|(&r, _)| window(r))
            .map(|(&r, &v)| (r / l, v))
            .collect();
        a_chart.add_series("a0", a0_pts);
        a_chart.add_series("a static", as_pts);
        a_chart.add_vline((pert.r_star - pert.delta) / l, "r*-delta");
        a_chart.add_vline((pert.r_star + pert.delta) / l, "r*+delta");
        write_file(&dir.join("idata_a0.svg"), |f| {
            f.write_all(a_chart.render().as_bytes()).map_err(Error::from)
        })?;

        let mut av_chart = Chart::new("dv-a at the initial slice", "r / L", "dv a");
        let av_pts: Vec<(f64, f64)> = data
            .grid()
            .nodes()
            .iter()
            .zip(data.av())
            .filter(|(&r, _)| window(r))
            .map(|(&r, &v)| (r / l, v))
            .collect();
        av_chart.add_series("dv a", av_pts);
        av_chart.add_hline(-report.band_bound, "-C4 (2h+1)/h^2");
        write_file(&dir.join("idata_av.svg"), |f| {
            f.write_all(av_chart.render().as_bytes()).map_err(Error::from)
        })?;
        println!("  wrote idata_a0.svg, idata_av.svg");
    }
    println!("wrote idata.csv, theorem.json in {}", dir.display());
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<()> {
    let mut cfg = build_config(&args.common)?;
    if let Some(path) = &args.common.config {
        cfg.apply_file(&parse_config_file(path)?)?;
    }
    let model = cfg.model()?;
    let r_star = args
        .r_star
        .as_deref()
        .map(str::parse)
        .transpose()?
        .or(cfg.r_star)
        .unwrap_or(efstar::config::RadiusSpec::ScaleUnits(2.0))
        .resolve(&model);
    let big_delta = args
        .big_delta
        .as_deref()
        .map(str::parse)
        .transpose()?
        .or(cfg.big_delta)
        .map(|r| r.resolve(&model));
    let workers = args.workers.or(cfg.workers).unwrap_or(1);
    let dir = prepare_out_dir(&cfg)?;

    if args.bisect {
        let delta = args
            .delta
            .as_deref()
            .map(str::parse)
            .transpose()?
            .or(cfg.delta)
            .ok_or_else(|| Error::Config("bisection needs --delta".into()))?;
        let ks = match &args.ks {
            Some(s) => parse_f64_list(s)?,
            None => vec![model.k()],
        };
        let mut results = Vec::new();
        for &k in &ks {
            let m = FluidModel::new(k, model.rho0())?;
            let spec = grid_spec(&cfg, &m);
            let prof = solve_static(&m, &spec)?;
            let fields = EfStaticFields::from_profile(&prof);
            let crit = bisect_critical_h(&fields, r_star, delta.resolve(&m), big_delta, 1e-8)?;
            println!(
                "k = {k}: h_crit = {:.8e}, critical delta/h = {:.6e}, 1/C1 = {:.6e}, conservative = {}",
                crit.h_crit,
                crit.delta_over_h_crit,
                1.0 / crit.c1,
                crit.conservative
            );
            results.push(crit);
        }
        write_file(&dir.join("bisect.json"), |f| {
            serde_json::to_writer_pretty(&mut *f, &results)
                .map_err(|e| Error::Parse(format!("serialize bisect: {e}")))?;
            writeln!(f).map_err(Error::from)
        })?;
        write_manifest(&dir, "sweep --bisect", serde_json::json!({"ks": ks}))?;
        println!("wrote bisect.json in {}", dir.display());
        return Ok(());
    }

    let deltas = args
        .deltas
        .as_deref()
        .map(parse_radius_list)
        .transpose()?
        .or(cfg.deltas.clone())
        .ok_or_else(|| Error::Config("sweep needs --deltas".into()))?
        .iter()
        .map(|r| r.resolve(&model))
        .collect();
    let hs = args
        .hs
        .as_deref()
        .map(parse_f64_list)
        .transpose()?
        .or(cfg.hs.clone())
        .ok_or_else(|| Error::Config("sweep needs --hs".into()))?;

    let spec = grid_spec(&cfg, &model);
    let profile = solve_static(&model, &spec)?;
    let fields = EfStaticFields::from_profile(&profile);
    let sweep_spec = SweepSpec { deltas, hs };
    let result = run_sweep(&fields, r_star, big_delta, &sweep_spec, workers)?;

    write_file(&dir.join("sweep.csv"), |f| fio::write_sweep_csv(f, &result))?;
    write_file(&dir.join("fits.json"), |f| fio::write_sweep_json(f, &result))?;
    write_manifest(
        &dir,
        "sweep",
        serde_json::json!({
            "k": model.k(), "r_star": r_star,
            "deltas": sweep_spec.deltas, "hs": sweep_spec.hs, "workers": workers,
        }),
    )?;

    println!("sweep: {} points ({} workers)", result.points.len(), workers);
    match (&result.fits, &result.fit_note) {
        (Some(fits), _) => {
            println!(
                "  band     |min dv-a| ~ delta^{:.3} h^{:.3}  (ci95 {:.3}, {:.3})",
                fits.band.delta_exponent,
                fits.band.h_exponent,
                fits.band.delta_ci95,
                fits.band.h_ci95
            );
            println!(
                "  annulus  |sup dv-a| ~ delta^{:.3} h^{:.3}  (ci95 {:.3}, {:.3})",
                fits.annulus.delta_exponent,
                fits.annulus.h_exponent,
                fits.annulus.delta_ci95,
                fits.annulus.h_ci95
            );
        }
        (None, Some(note)) => println!("  fits unavailable: {note}"),
        (None, None) => {}
    }
    println!("wrote sweep.csv, fits.json in {}", dir.display());
    Ok(())
}

fn cmd_plot(args: PlotArgs) -> Result<()> {
    let text = fs::read_to_string(&args.input)?;
    let table = fio::read_csv(&text)?;
    let xs = table.column(&args.x_col)?;
    let title = args
        .title
        .clone()
        .unwrap_or_else(|| args.input.file_name().unwrap_or_default().to_string_lossy().to_string());
    let mut chart = Chart::new(&title, &args.x_col, &args.y_cols);
    if args.log_x {
        chart = chart.with_log_x();
    }
    if args.log_y {
        chart = chart.with_log_y();
    }
    for name in args.y_cols.split(',') {
        let ys = table.column(name.trim())?;
        chart.add_series(name.trim(), xs.iter().copied().zip(ys).collect());
    }
    if let Some(spec) = &args.hline {
        let (value, label) = spec.split_once(':').unwrap_or((spec.as_str(), ""));
        let v: f64 = value
            .parse()
            .map_err(|e| Error::Config(format!("bad --hline value {value:?}: {e}")))?;
        chart.add_hline(v, label);
    }
    if let Some(parent) = args.out.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    fs::write(&args.out, chart.render())?;
    println!("wrote {}", args.out.display());
    Ok(())
}
