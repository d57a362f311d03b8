use std::io::Write;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Map, Value};
use vortexlab::asymptotics::{error_table, fit_rates};
use vortexlab::evolution::{evolve_operator, fit_growth, initial_vector, InitialCondition};
use vortexlab::grid::{RadialGrid, DEFAULT_SPACING};
use vortexlab::io::{fmt_f64, profile_to_value, read_profile, to_json_string, write_atomic, write_csv, ProfileCache};
use vortexlab::operators::build_sector_operator;
use vortexlab::profile::{solve, Profile, SolveOptions};
use vortexlab::soliton::balance_constants;
use vortexlab::VortexError;
use vortexlab::spectral::{
    predicted_growth, reduced_eigenvalues, reduced_matrix, spectrum_of, unstable_scan, Method, SpectrumOptions,
};

use crate::config::{parse_list, parse_range, Config};
use crate::{Cli, CliError, Command, Format, GridArgs, InitArg, MethodArg, Physics, ProfileSource};

type CliResult<T> = std::result::Result<T, CliError>;

pub fn run(cli: Cli, out: &mut dyn Write) -> CliResult<()> {
    let mut cfg = Config::load(cli.config.as_deref())?;
    match cli.command {
        Command::Constants(physics) => constants(&mut cfg, physics, out),
        Command::Profile { physics, m, grid, out: path } => profile(&mut cfg, physics, m, grid, path, out),
        Command::Asymptotics {
            physics,
            m_list,
            spacing,
            format,
        } => asymptotics(&mut cfg, physics, m_list, spacing, format, out),
        Command::Spectrum { source, j, k, method } => spectrum(&mut cfg, source, j, k, method, out),
        Command::Scan {
            source,
            j_range,
            method,
            format,
        } => scan(&mut cfg, source, j_range, method, format, out),
        Command::Reduced { physics, delta } => reduced(&mut cfg, physics, delta, out),
        Command::Evolve {
            source,
            j,
            t,
            dt,
            init,
            init_file,
            seed,
            burn_in,
            format,
        } => evolve(
            &mut cfg,
            EvolveArgs {
                source,
                j,
                t,
                dt,
                init,
                init_file,
                seed,
                burn_in,
                format,
            },
            out,
        ),
    }
}

/// Flag, else config file, else default for a `ValueEnum` setting.
fn choice<E: ValueEnum + Clone>(cfg: &mut Config, key: &str, flag: Option<E>, default: E) -> CliResult<E> {
    let name = |e: &E| e.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default();
    let raw = cfg.get::<String>(key, flag.as_ref().map(name), Some(name(&default)))?;
    E::from_str(&raw, true).map_err(|e| CliError::Usage(format!("`{key}`: {e}")))
}

fn physics(cfg: &mut Config, ph: Physics) -> CliResult<(f64, f64)> {
    Ok((cfg.get("p", ph.p, None)?, cfg.get("omega", ph.omega, None)?))
}

fn emit_json<T: Serialize>(cfg: &Config, body: &T, out: &mut dyn Write) -> CliResult<()> {
    let mut map = Map::new();
    map.insert("config".into(), cfg.echo());
    match serde_json::to_value(body).map_err(|e| CliError::Usage(e.to_string()))? {
        Value::Object(fields) => map.extend(fields),
        other => {
            map.insert("result".into(), other);
        }
    }
    out.write_all(to_json_string(&Value::Object(map))?.as_bytes())?;
    Ok(())
}

fn constants(cfg: &mut Config, ph: Physics, out: &mut dyn Write) -> CliResult<()> {
    let (p, omega) = physics(cfg, ph)?;
    emit_json(cfg, &balance_constants(p, omega)?, out)
}

fn radial_grid(cfg: &mut Config, p: f64, omega: f64, m: u32, g: &GridArgs) -> CliResult<RadialGrid> {
    let spacing = cfg.get("spacing", g.spacing, Some(DEFAULT_SPACING))?;
    let r_max = cfg.get_opt("r-max", g.r_max)?;
    Ok(RadialGrid::for_ring(&balance_constants(p, omega)?, m, Some(spacing), r_max)?)
}

fn obtain_profile(cfg: &mut Config, p: f64, omega: f64, m: u32, g: &GridArgs) -> CliResult<Profile> {
    let grid = radial_grid(cfg, p, omega, m, g)?;
    if cfg.switch("no-cache", g.no_cache)? {
        return Ok(solve(p, omega, m, &grid, SolveOptions::default())?);
    }
    let cache = ProfileCache::from_env();
    let (prof, hit) = cache.get_or_solve(p, omega, m, &grid)?;
    eprintln!(
        "profile cache {}: {}",
        if hit { "hit" } else { "miss" },
        cache.path(p, omega, m, &grid).display()
    );
    Ok(prof)
}

/// A profile from `--profile`, or from the cache, solving it first if absent.
fn source_profile(cfg: &mut Config, src: ProfileSource) -> CliResult<Profile> {
    let file = cfg.get_opt::<String>("profile", src.profile.map(|p| p.display().to_string()))?;
    match file {
        Some(path) => {
            let prof = read_profile(Path::new(&path))?;
            let p = cfg.get("p", src.physics.p, Some(prof.p))?;
            let omega = cfg.get("omega", src.physics.omega, Some(prof.omega))?;
            let m = cfg.get("m", src.m, Some(prof.m))?;
            if p != prof.p || omega != prof.omega || m != prof.m {
                return Err(CliError::Usage(format!(
                    "profile file {path} holds (p, omega, m) = ({}, {}, {}), requested ({p}, {omega}, {m})",
                    prof.p, prof.omega, prof.m
                )));
            }
            Ok(prof)
        }
        None => {
            let (p, omega) = physics(cfg, src.physics)?;
            let m = cfg.get("m", src.m, None)?;
            obtain_profile(cfg, p, omega, m, &src.grid)
        }
    }
}

fn profile(
    cfg: &mut Config,
    ph: Physics,
    m: Option<u32>,
    grid: GridArgs,
    path: Option<PathBuf>,
    out: &mut dyn Write,
) -> CliResult<()> {
    let (p, omega) = physics(cfg, ph)?;
    let m = cfg.get("m", m, None)?;
    let path = cfg.get_opt::<String>("out", path.map(|p| p.display().to_string()))?;
    let prof = obtain_profile(cfg, p, omega, m, &grid)?;
    if let Some(path) = path {
        let mut doc = Map::new();
        doc.insert("config".into(), cfg.echo());
        if let Value::Object(fields) = profile_to_value(&prof) {
            doc.extend(fields);
        }
        write_atomic(Path::new(&path), to_json_string(&Value::Object(doc))?.as_bytes())?;
    }
    let (peak_r, peak_value) = prof.peak();
    let summary = json!({
        "converged": prof.converged,
        "residual_norm": prof.residual_norm,
        "peak_r": peak_r,
        "peak_value": peak_value,
        "ring_radius": prof.params()?.ring_radius(m),
        "r_max": prof.grid.r_max,
        "n": prof.grid.n,
    });
    emit_json(cfg, &summary, out)
}

fn asymptotics(
    cfg: &mut Config,
    ph: Physics,
    m_list: Option<String>,
    spacing: Option<f64>,
    format: Option<Format>,
    out: &mut dyn Write,
) -> CliResult<()> {
    let (p, omega) = physics(cfg, ph)?;
    let ms = parse_list(&cfg.get::<String>("m-list", m_list, None)?)?;
    cfg.record("m-list", json!(ms));
    if ms.is_empty() {
        return Err(CliError::Usage("empty m-list".into()));
    }
    let spacing = cfg.get("spacing", spacing, Some(DEFAULT_SPACING))?;
    let format = choice(cfg, "format", format, Format::Csv)?;
    let rows = error_table(p, omega, &ms, Some(spacing))?;
    let fit = if rows.len() >= 3 { Some(fit_rates(&rows)?) } else { None };
    match format {
        Format::Json => emit_json(
            cfg,
            &json!({
                "rows": rows,
                "fit": fit.as_ref().map(|f| json!({
                    "rate_h2": f.rate_h2, "rate_linf": f.rate_linf, "r2_h2": f.r2_h2, "r2_linf": f.r2_linf,
                })),
            }),
            out,
        ),
        Format::Csv => {
            let body: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    vec![
                        r.m.to_string(),
                        fmt_f64(r.norms.h2_err),
                        fmt_f64(r.norms.linf_err),
                        fmt_f64(r.norms.peak_offset),
                    ]
                })
                .collect();
            write_csv(&mut *out, &["m", "h2_err", "linf_err", "peak_offset"], &body)?;
            match fit {
                Some(f) => eprintln!(
                    "rate_h2 = {} (R^2 {}), rate_linf = {} (R^2 {})",
                    fmt_f64(f.rate_h2),
                    fmt_f64(f.r2_h2),
                    fmt_f64(f.rate_linf),
                    fmt_f64(f.r2_linf)
                ),
                None => eprintln!("fewer than 3 spins: no rate fit"),
            }
            Ok(())
        }
    }
}

fn spectrum_options(cfg: &mut Config, method: Option<MethodArg>, k: Option<u32>) -> CliResult<SpectrumOptions> {
    let method = match choice(cfg, "method", method, MethodArg::Auto)? {
        MethodArg::Auto => Method::Auto,
        MethodArg::Dense => Method::Dense,
        MethodArg::ShiftInvert => Method::ShiftInvert,
    };
    let k_wanted = cfg.get("k", k, Some(6))? as usize;
    if k_wanted == 0 {
        return Err(CliError::Usage("k must be positive".into()));
    }
    Ok(SpectrumOptions {
        k_wanted,
        method,
        ..Default::default()
    })
}

fn check_j(j: i32, m: u32) -> CliResult<()> {
    if j.unsigned_abs() >= m {
        return Err(CliError::Usage(format!("sector index |j| = {} must be below m = {m}", j.unsigned_abs())));
    }
    Ok(())
}

fn spectrum(
    cfg: &mut Config,
    src: ProfileSource,
    j: Option<i32>,
    k: Option<u32>,
    method: Option<MethodArg>,
    out: &mut dyn Write,
) -> CliResult<()> {
    let j = cfg.get("j", j, None)?;
    if let Some(m) = cfg.get_opt::<u32>("m", src.m)? {
        check_j(j, m)?;
    }
    let opts = spectrum_options(cfg, method, k)?;
    let prof = source_profile(cfg, src)?;
    check_j(j, prof.m)?;
    let op = build_sector_operator(&prof, prof.m, j)?;
    let report = spectrum_of(&op, prof.p, prof.omega, opts)?;
    emit_json(cfg, &report, out)
}

fn scan(
    cfg: &mut Config,
    src: ProfileSource,
    j_range: Option<String>,
    method: Option<MethodArg>,
    format: Option<Format>,
    out: &mut dyn Write,
) -> CliResult<()> {
    let js = parse_range(&cfg.get::<String>("j-range", j_range, None)?)?;
    cfg.record("j-range", json!(js));
    if js.is_empty() {
        return Err(CliError::Usage("empty j-range".into()));
    }
    if let Some(m) = cfg.get_opt::<u32>("m", src.m)? {
        for &j in &js {
            check_j(j, m)?;
        }
    }
    let opts = spectrum_options(cfg, method, None)?;
    let format = choice(cfg, "format", format, Format::Csv)?;
    let prof = source_profile(cfg, src)?;
    let table = unstable_scan(&prof, &js, opts)?;
    match format {
        Format::Json => emit_json(cfg, &table, out),
        Format::Csv => {
            let body: Vec<Vec<String>> = table
                .rows
                .iter()
                .map(|r| {
                    vec![
                        r.m.to_string(),
                        r.j.to_string(),
                        fmt_f64(r.delta),
                        fmt_f64(r.max_re),
                        fmt_f64(r.predicted),
                        fmt_f64(r.bracket_lo),
                        fmt_f64(r.bracket_hi),
                        r.in_bracket.to_string(),
                    ]
                })
                .collect();
            write_csv(
                &mut *out,
                &["m", "j", "delta", "max_re", "predicted", "bracket_lo", "bracket_hi", "in_bracket"],
                &body,
            )?;
            eprintln!("canonical index j* = {}", table.j_star);
            Ok(())
        }
    }
}

fn reduced(cfg: &mut Config, ph: Physics, delta: Option<f64>, out: &mut dyn Write) -> CliResult<()> {
    let (p, omega) = physics(cfg, ph)?;
    let delta = cfg.get("delta", delta, None)?;
    let params = balance_constants(p, omega)?;
    let model = reduced_matrix(&params, delta)?;
    let growth = predicted_growth(&params, delta)?;
    let eig: Vec<Complex64> = reduced_eigenvalues(&model).to_vec();
    emit_json(
        cfg,
        &json!({
            "model": model,
            "eigenvalues": eig,
            "predicted": growth.value,
            "bracket": [growth.lo, growth.hi],
        }),
        out,
    )
}

struct EvolveArgs {
    source: ProfileSource,
    j: Option<i32>,
    t: Option<f64>,
    dt: Option<f64>,
    init: Option<InitArg>,
    init_file: Option<PathBuf>,
    seed: Option<u64>,
    burn_in: Option<f64>,
    format: Option<Format>,
}

fn read_initial(path: &str) -> CliResult<Vec<Complex64>> {
    let text = std::fs::read_to_string(path)?;
    let pairs: Vec<[f64; 2]> =
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("initial data {path}: {e}")))?;
    Ok(pairs.into_iter().map(|[re, im]| Complex64::new(re, im)).collect())
}

fn evolve(cfg: &mut Config, a: EvolveArgs, out: &mut dyn Write) -> CliResult<()> {
    let j = cfg.get("j", a.j, None)?;
    let t_end = cfg.get("t", a.t, Some(40.0))?;
    let dt = cfg.get("dt", a.dt, Some(0.1))?;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(CliError::Usage(format!("dt must be positive, got {dt}")));
    }
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(CliError::Usage(format!("t must be positive, got {t_end}")));
    }
    let burn_in = cfg.get("burn-in", a.burn_in, Some(0.3))?;
    let seed = cfg.get("seed", a.seed, Some(0))?;
    let init = match choice(cfg, "init", a.init, InitArg::Random)? {
        InitArg::Random => InitialCondition::Random { seed },
        InitArg::Eigenvector => InitialCondition::Eigenvector,
        InitArg::File => {
            let path = cfg
                .get_opt::<String>("init-file", a.init_file.map(|p| p.display().to_string()))?
                .ok_or_else(|| CliError::Usage("init = file needs --init-file".into()))?;
            InitialCondition::Given(read_initial(&path)?)
        }
    };
    let format = choice(cfg, "format", a.format, Format::Csv)?;
    if let Some(m) = cfg.get_opt::<u32>("m", a.source.m)? {
        check_j(j, m)?;
    }
    let prof = source_profile(cfg, a.source)?;
    check_j(j, prof.m)?;
    let op = build_sector_operator(&prof, prof.m, j)?;
    let w0 = initial_vector(&op, &init)?;
    let traj = evolve_operator(&op, &w0, t_end, dt)?;
    let fit = match fit_growth(&traj, burn_in) {
        Ok(f) => Some(f),
        Err(VortexError::InsufficientData(why)) => {
            eprintln!("no rate fit: {why}");
            None
        }
        Err(e) => return Err(e.into()),
    };
    match format {
        Format::Json => emit_json(cfg, &json!({ "fit": fit, "t": traj.t, "norm": traj.norm }), out),
        Format::Csv => {
            let body: Vec<Vec<String>> = traj
                .t
                .iter()
                .zip(&traj.norm)
                .map(|(t, n)| vec![fmt_f64(*t), fmt_f64(*n)])
                .collect();
            write_csv(&mut *out, &["t", "norm"], &body)?;
            if let Some(fit) = fit {
                eprintln!("rate = {} (R^2 {}, {} samples)", fmt_f64(fit.rate), fmt_f64(fit.r2), fit.samples);
            }
            Ok(())
        }
    }
}
