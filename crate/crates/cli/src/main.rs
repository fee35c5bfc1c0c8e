//! Command line driver for the layer potential experiments. Each
//! subcommand runs one study over a ladder of grid spacings, prints the
//! error table, and writes CSV artifacts to the output directory.

use std::error::Error;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use layerpot::config::{Order, RegConfig};
use layerpot::experiments::{
    self, CombinedSurface, HarmonicGridLevel, Ladder, SphereLayer, StokesGridReport,
    TwoSpheroidReport,
};
use layerpot::io::{self, ConvergenceRow};

/// Parse a spacing given either as a decimal or as a fraction a/b.
fn parse_h(s: &str) -> Result<f64, String> {
    let v = match s.split_once('/') {
        Some((a, b)) => {
            let a: f64 = a.trim().parse().map_err(|e| format!("{e}"))?;
            let b: f64 = b.trim().parse().map_err(|e| format!("{e}"))?;
            a / b
        }
        None => s
            .trim()
            .parse()
            .map_err(|e: std::num::ParseFloatError| format!("{e}"))?,
    };
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(format!("spacing {s} must be positive"))
    }
}

#[derive(Parser)]
#[command(
    name = "layerpot",
    about = "Convergence experiments for regularized layer potentials",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Key=value file supplying any of the long options; explicit flags
    /// win over file entries.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Comma separated spacings, coarsest first; fractions like 1/32
    /// are accepted.
    #[arg(long, global = true, value_delimiter = ',', value_parser = parse_h)]
    h_list: Option<Vec<f64>>,

    /// Regularization order p.
    #[arg(long, global = true, value_parser = ["3", "5", "7"])]
    order: Option<String>,

    /// Exponent in the smoothing length delta = kappa0 h0^(1-q) h^q.
    #[arg(long, global = true)]
    q: Option<f64>,

    /// Prefactor in the smoothing length.
    #[arg(long, global = true)]
    kappa0: Option<f64>,

    /// Reference spacing in the smoothing length.
    #[arg(long, global = true)]
    h0: Option<f64>,

    /// Shape factor cutoff in smoothing lengths.
    #[arg(long, global = true)]
    cutoff: Option<f64>,

    /// Seed for target selection.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Directory for CSV artifacts.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Extend the ladder by one more halving where feasible and write
    /// full grid dumps.
    #[arg(long, global = true)]
    extended: bool,

    /// Record measured wall times in the summary table. Off by default
    /// so identical runs produce identical CSV bytes.
    #[arg(long, global = true)]
    timings: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Single layer of the cubic harmonic density on the unit sphere.
    SphereSl,
    /// Double layer of the cubic harmonic density on the unit sphere.
    SphereDl,
    /// Combined layers of a harmonic field on the four-atom molecular
    /// surface.
    Molecular,
    /// Combined layers of a harmonic field on two ellipsoids.
    Ellipsoids,
    /// Stresslet of a rigid rotation on a prolate spheroid.
    StressletIdentity,
    /// Single layer of the normal field on a prolate spheroid, which
    /// vanishes identically.
    StokesletNormal,
    /// Harmonic grid chain around the molecular surface.
    GridHarmonic,
    /// Flow grid chain for the spheroid translating along its axis.
    GridStokes,
    /// Two nearly touching spheroids driven by a height-dependent
    /// surface tension.
    TwoSpheroids {
        /// Gap between the spheroids at closest approach.
        #[arg(long, value_parser = parse_h)]
        epsilon: Option<f64>,
    },
}

/// Options merged from defaults, the config file, and the flags.
struct Settings {
    h_list: Vec<f64>,
    cfg: RegConfig,
    seed: u64,
    out: PathBuf,
    extended: bool,
    timings: bool,
    epsilon: f64,
}

#[derive(Default)]
struct FileOptions {
    h_list: Option<Vec<f64>>,
    order: Option<String>,
    q: Option<f64>,
    kappa0: Option<f64>,
    h0: Option<f64>,
    cutoff: Option<f64>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    extended: Option<bool>,
    timings: Option<bool>,
    epsilon: Option<f64>,
}

fn read_config(path: &Path) -> Result<FileOptions, Box<dyn Error>> {
    let mut opts = FileOptions::default();
    for (ln, line) in fs::read_to_string(path)?.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |msg: &str| format!("{}:{}: {msg}", path.display(), ln + 1);
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err("expected key=value"))?;
        let (key, value) = (key.trim(), value.trim());
        match key {
            "h_list" => {
                opts.h_list = Some(
                    value
                        .split(',')
                        .map(parse_h)
                        .collect::<Result<Vec<_>, _>>()
                        .map_err(|e| err(&e))?,
                )
            }
            "order" => opts.order = Some(value.to_string()),
            "q" => opts.q = Some(value.parse().map_err(|_| err("bad q"))?),
            "kappa0" => opts.kappa0 = Some(value.parse().map_err(|_| err("bad kappa0"))?),
            "h0" => opts.h0 = Some(parse_h(value).map_err(|e| err(&e))?),
            "cutoff" => opts.cutoff = Some(value.parse().map_err(|_| err("bad cutoff"))?),
            "seed" => opts.seed = Some(value.parse().map_err(|_| err("bad seed"))?),
            "out" => opts.out = Some(PathBuf::from(value)),
            "extended" => opts.extended = Some(value.parse().map_err(|_| err("bad extended"))?),
            "timings" => opts.timings = Some(value.parse().map_err(|_| err("bad timings"))?),
            "epsilon" => opts.epsilon = Some(parse_h(value).map_err(|e| err(&e))?),
            _ => return Err(err(&format!("unknown key {key}")).into()),
        }
    }
    Ok(opts)
}

fn resolve(
    cli: &Cli,
    cli_epsilon: Option<f64>,
    extend_ladder: bool,
) -> Result<Settings, Box<dyn Error>> {
    let file = match &cli.config {
        Some(p) => read_config(p)?,
        None => FileOptions::default(),
    };
    let order = match cli.order.as_deref().or(file.order.as_deref()) {
        None | Some("7") => Order::P7,
        Some("5") => Order::P5,
        Some("3") => Order::P3,
        Some(o) => return Err(format!("order {o} must be 3, 5, or 7").into()),
    };
    let mut cfg = RegConfig::new(order);
    if let Some(q) = cli.q.or(file.q) {
        cfg.q = q;
    }
    if let Some(k) = cli.kappa0.or(file.kappa0) {
        cfg.kappa0 = k;
    }
    if let Some(h0) = cli.h0.or(file.h0) {
        cfg.h0 = h0;
    }
    if let Some(c) = cli.cutoff.or(file.cutoff) {
        cfg.cutoff = c;
    }
    let extended = cli.extended || file.extended.unwrap_or(false);
    let mut h_list = cli
        .h_list
        .clone()
        .or(file.h_list)
        .unwrap_or_else(|| vec![1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0]);
    if extended && extend_ladder {
        let finest = *h_list.last().expect("nonempty ladder");
        h_list.push(finest / 2.0);
    }
    Ok(Settings {
        h_list,
        cfg,
        seed: cli.seed.or(file.seed).unwrap_or(1),
        out: cli
            .out
            .clone()
            .or(file.out)
            .unwrap_or_else(|| PathBuf::from("out")),
        extended,
        timings: cli.timings || file.timings.unwrap_or(false),
        epsilon: cli_epsilon.or(file.epsilon).unwrap_or(1.0 / 4096.0),
    })
}

fn print_rows(rows: &[ConvergenceRow]) {
    let mut s = String::new();
    writeln!(
        s,
        "{:<18} {:>10} {:>10} {:>8} {:>12} {:>12} {:>7} {:>7}",
        "experiment", "h", "delta", "targets", "err_max", "err_l2", "ord_max", "ord_l2"
    )
    .unwrap();
    for r in rows {
        let fmt_ord = |o: Option<f64>| o.map(|v| format!("{v:.2}")).unwrap_or_default();
        writeln!(
            s,
            "{:<18} {:>10.6} {:>10.6} {:>8} {:>12.4e} {:>12.4e} {:>7} {:>7}",
            r.experiment,
            r.h,
            r.delta,
            r.n_targets,
            r.err_max,
            r.err_l2,
            fmt_ord(r.order_max),
            fmt_ord(r.order_l2)
        )
        .unwrap();
    }
    print!("{s}");
}

fn strip_times(rows: &mut [ConvergenceRow], timings: bool) {
    if !timings {
        for r in rows {
            r.wall_time_s = 0.0;
        }
    }
}

fn write_ladder(
    settings: &Settings,
    ladder: &Ladder,
) -> Result<Vec<ConvergenceRow>, Box<dyn Error>> {
    let mut rows = ladder.rows(&settings.cfg, settings.seed);
    strip_times(&mut rows, settings.timings);
    for (i, lv) in ladder.levels.iter().enumerate() {
        let name = format!("{}-targets-{i}.csv", ladder.experiment);
        io::write_targets_csv(&settings.out.join(name), &lv.targets)?;
    }
    Ok(rows)
}

fn run_ladders(settings: &Settings, name: &str, ladders: &[Ladder]) -> Result<(), Box<dyn Error>> {
    let mut rows = Vec::new();
    for ladder in ladders {
        rows.extend(write_ladder(settings, ladder)?);
    }
    io::write_convergence_csv(&settings.out.join(format!("{name}.csv")), &rows)?;
    print_rows(&rows);
    Ok(())
}

fn grid_rows(
    experiment: &str,
    levels: impl Iterator<Item = (f64, usize, (f64, f64), f64)>,
    cfg: &RegConfig,
    seed: u64,
) -> Vec<ConvergenceRow> {
    let mut rows: Vec<ConvergenceRow> = Vec::new();
    for (h, n_targets, (err_max, err_l2), wall) in levels {
        let prev = rows.last();
        let order = |a: f64, b: f64, ph: f64| (a / b).ln() / (ph / h).ln();
        let order_max = prev.map(|p| order(p.err_max, err_max, p.h));
        let order_l2 = prev.map(|p| order(p.err_l2, err_l2, p.h));
        rows.push(ConvergenceRow {
            experiment: experiment.to_string(),
            h,
            delta: cfg.delta(h),
            p: cfg.order.p(),
            q: cfg.q,
            kappa0: cfg.kappa0,
            n_targets,
            err_max,
            err_l2,
            order_max,
            order_l2,
            seed,
            wall_time_s: wall,
        });
    }
    rows
}

fn run_grid_harmonic(settings: &Settings) -> Result<(), Box<dyn Error>> {
    let n_list: Vec<usize> = settings
        .h_list
        .iter()
        .map(|h| (3.0 / h).round() as usize)
        .collect();
    let levels = experiments::harmonic_grid(&settings.cfg, &n_list)?;
    let mut rows = Vec::new();
    rows.extend(grid_rows(
        "grid-harmonic-u",
        levels
            .iter()
            .map(|lv| (lv.h, lv.n_u, lv.err_u, lv.wall_time_s)),
        &settings.cfg,
        settings.seed,
    ));
    rows.extend(grid_rows(
        "grid-harmonic-du",
        levels
            .iter()
            .map(|lv| (lv.h, lv.n_du, lv.err_du, lv.wall_time_s)),
        &settings.cfg,
        settings.seed,
    ));
    strip_times(&mut rows, settings.timings);
    io::write_convergence_csv(&settings.out.join("grid-harmonic.csv"), &rows)?;
    let finest: &HarmonicGridLevel = levels.last().expect("nonempty ladder");
    io::write_grid_slice_csv(
        &settings.out.join("grid-harmonic-slice.csv"),
        &finest.grid,
        &finest.u,
        finest.n / 2,
    )?;
    if settings.extended {
        io::write_grid_binary(
            &settings.out.join("grid-harmonic-u.bin"),
            &finest.grid,
            layerpot::Vec3::zeros(),
            &finest.u,
        )?;
    }
    print_rows(&rows);
    Ok(())
}

fn run_grid_stokes(settings: &Settings) -> Result<(), Box<dyn Error>> {
    let n_list: Vec<usize> = settings
        .h_list
        .iter()
        .map(|h| (3.0 / h).round() as usize)
        .collect();
    let report: StokesGridReport = experiments::stokes_grid(&settings.cfg, &n_list)?;
    let mut rows = grid_rows(
        "grid-stokes-bc",
        report
            .levels
            .iter()
            .map(|lv| (lv.h, 0, (lv.bc_err, lv.bc_err), lv.wall_time_s)),
        &settings.cfg,
        settings.seed,
    );
    for (name, pick) in [
        ("grid-stokes-p", 0_usize),
        ("grid-stokes-u", 1),
        ("grid-stokes-gu", 2),
    ] {
        rows.extend(grid_rows(
            name,
            report.diffs.iter().enumerate().map(|(i, d)| {
                let lv = &report.levels[i + 1];
                let (norms, count) = match pick {
                    0 => (d.d_p, d.n_pu),
                    1 => (d.d_u, d.n_pu),
                    _ => (d.d_gu, d.n_gu),
                };
                (lv.h, count, norms, lv.wall_time_s)
            }),
            &settings.cfg,
            settings.seed,
        ));
    }
    strip_times(&mut rows, settings.timings);
    io::write_convergence_csv(&settings.out.join("grid-stokes.csv"), &rows)?;
    let finest = &report.finest;
    let k = finest.n / 2;
    io::write_grid_slice_csv(
        &settings.out.join("grid-stokes-p-slice.csv"),
        &finest.grid,
        &finest.sol.p,
        k,
    )?;
    io::write_grid_slice_csv(
        &settings.out.join("grid-stokes-u1-slice.csv"),
        &finest.grid,
        &finest.sol.u[0],
        k,
    )?;
    if settings.extended {
        io::write_grid_binary(
            &settings.out.join("grid-stokes-p.bin"),
            &finest.grid,
            layerpot::Vec3::zeros(),
            &finest.sol.p,
        )?;
        for (c, name) in ["u1", "u2", "u3"].iter().enumerate() {
            io::write_grid_binary(
                &settings.out.join(format!("grid-stokes-{name}.bin")),
                &finest.grid,
                layerpot::Vec3::zeros(),
                &finest.sol.u[c],
            )?;
        }
    }
    print_rows(&rows);
    Ok(())
}

fn run_two_spheroids(settings: &Settings) -> Result<(), Box<dyn Error>> {
    let report: TwoSpheroidReport =
        experiments::two_spheroid(&settings.cfg, &settings.h_list, settings.epsilon)?;
    let mut rows = grid_rows(
        "two-spheroids",
        report.diffs.iter().enumerate().map(|(i, d)| {
            let lv = &report.levels[i + 1];
            (lv.h, d.n_matched, d.all, lv.wall_time_s)
        }),
        &settings.cfg,
        settings.seed,
    );
    strip_times(&mut rows, settings.timings);
    io::write_convergence_csv(&settings.out.join("two-spheroids.csv"), &rows)?;
    for (i, lv) in report.levels.iter().enumerate() {
        io::write_residuals_csv(
            &settings
                .out
                .join(format!("two-spheroids-residuals-{i}.csv")),
            &lv.residuals,
        )?;
        println!(
            "h={:<10.6} gmres iterations {:>3} residual {:.3e} converged {}",
            lv.h,
            lv.iterations,
            lv.residuals.last().copied().unwrap_or(f64::NAN),
            lv.converged
        );
    }
    let finest = report.levels.last().expect("nonempty ladder");
    io::write_interface_csv(
        &settings.out.join("two-spheroids-interface.csv"),
        [&finest.quads[0].nodes, &finest.quads[1].nodes],
        &finest.node_velocity,
    )?;
    if !report.diffs.is_empty() {
        print_rows(&rows);
        for (i, d) in report.diffs.iter().enumerate() {
            println!(
                "pair {}: near-contact max diff {:.4e} vs overall {:.4e}",
                i, d.near_max, d.all.0
            );
        }
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<(), Box<dyn Error>> {
    let eps = match &cli.command {
        Command::TwoSpheroids { epsilon } => *epsilon,
        _ => None,
    };
    // The flow grid holds too many fields per node for another halving,
    // so extended mode only adds the full dumps there.
    let extend_ladder = !matches!(cli.command, Command::GridStokes);
    let settings = resolve(cli, eps, extend_ladder)?;
    fs::create_dir_all(&settings.out)?;
    let cfg = &settings.cfg;
    match &cli.command {
        Command::SphereSl => run_ladders(
            &settings,
            "sphere-sl",
            &[experiments::sphere_layer(
                SphereLayer::Single,
                cfg,
                &settings.h_list,
                85.0,
                settings.seed,
            )?],
        ),
        Command::SphereDl => run_ladders(
            &settings,
            "sphere-dl",
            &[experiments::sphere_layer(
                SphereLayer::Double,
                cfg,
                &settings.h_list,
                85.0,
                settings.seed,
            )?],
        ),
        Command::Molecular => run_ladders(
            &settings,
            "molecular",
            &[experiments::combined_layer(
                CombinedSurface::Molecular,
                cfg,
                &settings.h_list,
                settings.seed,
            )?],
        ),
        Command::Ellipsoids => run_ladders(
            &settings,
            "ellipsoids",
            &[
                experiments::combined_layer(
                    CombinedSurface::EllipsoidA,
                    cfg,
                    &settings.h_list,
                    settings.seed,
                )?,
                experiments::combined_layer(
                    CombinedSurface::EllipsoidB,
                    cfg,
                    &settings.h_list,
                    settings.seed,
                )?,
            ],
        ),
        Command::StressletIdentity => run_ladders(
            &settings,
            "stresslet-identity",
            &[experiments::stresslet_identity(
                cfg,
                &settings.h_list,
                settings.seed,
            )?],
        ),
        Command::StokesletNormal => run_ladders(
            &settings,
            "stokeslet-normal",
            &[experiments::stokeslet_normal(
                cfg,
                &settings.h_list,
                settings.seed,
            )?],
        ),
        Command::GridHarmonic => run_grid_harmonic(&settings),
        Command::GridStokes => run_grid_stokes(&settings),
        Command::TwoSpheroids { .. } => run_two_spheroids(&settings),
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(&cli) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
