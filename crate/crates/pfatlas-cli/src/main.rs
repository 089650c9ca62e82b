//! `pfatlas` command-line pipeline: parse cases, enumerate power-flow
//! solution sets, classify short-circuit solutions, sweep loading levels,
//! compute distribution statistics, and exchange solution sets with other
//! tools.
//!
//! Exit codes: 0 success, 1 usage/IO/validation error, 2 success with
//! warnings (heuristic enumeration with path failures, or imports with
//! quarantined rows).

mod config;
mod manifest;

use anyhow::{anyhow, bail, Context, Result};
use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use config::{resolve, resolve_seed, FileConfig};
use manifest::{emit, RunManifest};
use pfatlas::analytics::{
    apply_limits, export_vq_surface, magnitude_histogram, min_voltage_table, pattern_cluster,
    voltage_scatter, HistogramScope, LimitSpec, PatternConfig,
};
use pfatlas::enumeration::{
    compare_sets, enumerate, import_csv_rows, validate_imported, EnumConfig, MethodSelect,
    SolutionSet, TrackerConfig,
};
use pfatlas::model::{BusId, NetworkCase};
use pfatlas::power_flow::{PfModel, SolverConfig};
use pfatlas::short_circuit::{classify_set, count_short_circuit, ClassifyConfig};
use pfatlas::sweep::{nose_point_bracket, parse_grid, run_load_sweep};
use pfatlas::{cases, parse_case};
use serde_json::json;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser)]
#[command(
    name = "pfatlas",
    version,
    about = "Multi-solution AC power flow: enumeration, short-circuit classification, sweeps, statistics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Key/value config file mirroring the flags; flags win on conflict.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Cap worker parallelism (does not affect output bytes).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Auto,
    TotalDegree,
    Multistart,
}

impl From<MethodArg> for MethodSelect {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Auto => MethodSelect::Auto,
            MethodArg::TotalDegree => MethodSelect::TotalDegree,
            MethodArg::Multistart => MethodSelect::MultiStart,
        }
    }
}

#[derive(Args)]
struct EnumFlags {
    /// Enumeration method.
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
    /// RNG seed (falls back to config, then $PFATLAS_SEED, then 0).
    #[arg(long)]
    seed: Option<u64>,
    /// Random multi-start samples.
    #[arg(long)]
    samples: Option<usize>,
    /// Stop multi-start after this many samples without a new root.
    #[arg(long)]
    saturation: Option<usize>,
    /// Mismatch tolerance, p.u.
    #[arg(long)]
    tol: Option<f64>,
    /// Solution deduplication tolerance.
    #[arg(long)]
    dedup_tol: Option<f64>,
    /// Newton iteration cap.
    #[arg(long)]
    max_iter: Option<usize>,
    /// Bus-count ceiling for the total-degree method.
    #[arg(long)]
    ceiling: Option<usize>,
}

impl EnumFlags {
    fn build(&self, cfg: &FileConfig) -> Result<EnumConfig> {
        let method = match self.method {
            Some(m) => m.into(),
            None => match cfg.get_str("method") {
                None => MethodSelect::Auto,
                Some("auto") => MethodSelect::Auto,
                Some("total-degree") => MethodSelect::TotalDegree,
                Some("multistart") => MethodSelect::MultiStart,
                Some(other) => bail!("config key `method`: unknown method `{other}`"),
            },
        };
        let defaults = EnumConfig::default();
        let solver = SolverConfig {
            tolerance: resolve(self.tol, cfg, "tol", defaults.solver.tolerance)?,
            max_iterations: resolve(self.max_iter, cfg, "max-iter", defaults.solver.max_iterations)?,
            dedup_tolerance: resolve(
                self.dedup_tol,
                cfg,
                "dedup-tol",
                defaults.solver.dedup_tolerance,
            )?,
        };
        Ok(EnumConfig {
            method,
            seed: resolve_seed(self.seed, cfg)?,
            solver,
            total_degree_bus_ceiling: resolve(
                self.ceiling,
                cfg,
                "ceiling",
                defaults.total_degree_bus_ceiling,
            )?,
            path_budget: defaults.path_budget,
            path_failure_budget: defaults.path_failure_budget,
            multistart_samples: resolve(self.samples, cfg, "samples", defaults.multistart_samples)?,
            saturation_window: resolve(
                self.saturation,
                cfg,
                "saturation",
                defaults.saturation_window,
            )?,
            sample_box: defaults.sample_box,
            include_flat_seed: true,
            include_grounded_seeds: true,
            tracker: TrackerConfig::default(),
        })
    }
}

#[derive(Args)]
struct ScaleFlags {
    /// Load scaling factor.
    #[arg(long)]
    lambda: Option<f64>,
    /// Add a small power injection at each transit bus before enumerating.
    #[arg(long)]
    regularize: bool,
    /// Injection size for --regularize, p.u.
    #[arg(long)]
    epsilon: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Enumerate the solution set of a case at one loading level.
    Enumerate {
        /// Case file (.m or .json) or a built-in name (case14, case30, ...).
        case: String,
        #[command(flatten)]
        scale: ScaleFlags,
        #[command(flatten)]
        flags: EnumFlags,
    },
    /// Enumerate across a lambda grid and aggregate counts.
    Sweep {
        case: String,
        /// Grid as start:stop:step, endpoints inclusive.
        #[arg(long)]
        grid: Option<String>,
        #[arg(long)]
        regularize: bool,
        #[arg(long)]
        epsilon: Option<f64>,
        #[command(flatten)]
        flags: EnumFlags,
    },
    /// Bracket the voltage-collapse point by bisection on the count.
    Nose {
        case: String,
        #[arg(long)]
        lo: f64,
        #[arg(long)]
        hi: f64,
        /// Bracket width target.
        #[arg(long, default_value_t = 1e-3)]
        width: f64,
        #[command(flatten)]
        flags: EnumFlags,
    },
    /// Label every solution of a set as Regular or ShortCircuit.
    Classify {
        set: PathBuf,
        case: String,
        /// Grounded-voltage threshold, p.u.
        #[arg(long)]
        v_tol: Option<f64>,
        /// KCL-violation current threshold, p.u.
        #[arg(long)]
        i_tol: Option<f64>,
    },
    /// Distribution statistics over a solution set.
    #[command(group(
        ArgGroup::new("stat")
            .required(true)
            .args(["histogram", "scatter", "limits", "minv", "cluster", "vq"]),
    ))]
    Stats {
        set: PathBuf,
        case: String,
        /// Voltage magnitude histogram (100 bins over [0, 1.1]).
        #[arg(long)]
        histogram: bool,
        /// Complex-voltage scatter points for --bus.
        #[arg(long)]
        scatter: bool,
        /// Engineering-limit filter using the case-file bands.
        #[arg(long)]
        limits: bool,
        /// Per-solution minimum voltage magnitude table.
        #[arg(long)]
        minv: bool,
        /// Bus grouping by voltage-pattern shape.
        #[arg(long)]
        cluster: bool,
        /// 3-D (Re V, Im V, Q) surface for --bus and --gen.
        #[arg(long)]
        vq: bool,
        /// Bus id for --scatter/--vq, optional scope for --histogram.
        #[arg(long)]
        bus: Option<u32>,
        /// Generator index (case-file order) for --vq.
        #[arg(long)]
        gen: Option<usize>,
        /// Minimum set size for --cluster.
        #[arg(long)]
        min_solutions: Option<usize>,
    },
    /// Diff two solution sets for the same problem.
    Compare {
        a: PathBuf,
        b: PathBuf,
        /// Match tolerance on max-component voltage distance.
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
    /// Validate an external solution file (CSV or JSON) against a case and
    /// write the canonical set; violators go to a .rejected.csv sidecar.
    Import {
        file: PathBuf,
        case: String,
        #[command(flatten)]
        scale: ScaleFlags,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Convert a solution-set JSON to CSV.
    Export { set: PathBuf },
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // Help and version are successes; everything else is usage error.
            return if err.use_stderr() {
                let _ = err.print();
                ExitCode::from(1)
            } else {
                let _ = err.print();
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

fn load_case(spec: &str) -> Result<NetworkCase> {
    if let Some(case) = cases::builtin(spec) {
        return Ok(case);
    }
    let path = Path::new(spec);
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading case `{spec}` (not a built-in name either)"))?;
    if path.extension().and_then(|e| e.to_str()) == Some("json") {
        Ok(NetworkCase::from_json(&text)?)
    } else {
        Ok(parse_case(&text)?)
    }
}

fn load_set(path: &Path) -> Result<SolutionSet> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    SolutionSet::from_json(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Reconstruct the exact problem a set was produced for: scale the base case
/// by the set's lambda and re-apply its regularization.
fn work_case_for_set(base: &NetworkCase, set: &SolutionSet, tol: f64) -> Result<NetworkCase> {
    let scaled = base.scale_loads(set.lambda);
    let work = match set.regularized_epsilon {
        Some(eps) => scaled.regularize_transit_buses_with(
            eps,
            pfatlas::model::RegularizeOptions {
                reactive: false,
                mismatch_tolerance: tol,
            },
        )?,
        None => scaled,
    };
    if work.fingerprint() != set.fingerprint {
        bail!(
            "set was produced for a different problem (fingerprint mismatch at lambda {})",
            set.lambda
        );
    }
    Ok(work)
}

fn ensure_out(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn run(cli: Cli) -> Result<u8> {
    let file_config = FileConfig::load(cli.config.as_deref())?;
    let jobs = match cli.jobs {
        Some(j) => Some(j),
        None => file_config.get("jobs")?,
    };
    #[cfg(feature = "parallel")]
    if let Some(jobs) = jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .ok();
    }
    #[cfg(not(feature = "parallel"))]
    let _ = jobs;

    ensure_out(&cli.out)?;
    let started = Instant::now();
    match cli.command {
        Command::Enumerate { case, scale, flags } => {
            let cfg = flags.build(&file_config)?;
            let lambda = resolve(scale.lambda, &file_config, "lambda", 1.0)?;
            let base = load_case(&case)?;
            let scaled = base.scale_loads(lambda);
            let epsilon = resolve(scale.epsilon, &file_config, "epsilon", 1e-5)?;
            let work = if scale.regularize {
                scaled.regularize_transit_buses_with(
                    epsilon,
                    pfatlas::model::RegularizeOptions {
                        reactive: false,
                        mismatch_tolerance: cfg.solver.tolerance,
                    },
                )?
            } else {
                scaled
            };
            let mut set = enumerate(&work, lambda, &cfg)?;
            set.regularized_epsilon = scale.regularize.then_some(epsilon);

            let stem = format!("{}_{}_solutions", base.name, lambda);
            let mut manifest = RunManifest::new(json!({
                "enum": cfg,
                "lambda": lambda,
                "regularize": scale.regularize.then_some(epsilon),
            }));
            manifest.case_fingerprint = Some(work.fingerprint());
            manifest.seed = Some(cfg.seed);
            emit(&cli.out, &format!("{stem}.json"), &set.to_json(), &mut manifest)?;
            emit(&cli.out, &format!("{stem}.csv"), &set.to_csv(), &mut manifest)?;
            manifest.wall_time_seconds = started.elapsed().as_secs_f64();
            manifest.write(&cli.out, &stem)?;

            println!(
                "{}: {} solutions ({:?}, {:?}, {} path failures)",
                stem,
                set.len(),
                set.method,
                set.complete,
                set.diagnostics.path_failures
            );
            let warn = set.diagnostics.path_failures > cfg.path_failure_budget;
            Ok(if warn { 2 } else { 0 })
        }
        Command::Sweep {
            case,
            grid,
            regularize,
            epsilon,
            flags,
        } => {
            let cfg = flags.build(&file_config)?;
            let grid_spec = match grid.as_deref().or(file_config.get_str("grid")) {
                Some(g) => g.to_string(),
                None => bail!("--grid start:stop:step is required"),
            };
            let grid = parse_grid(&grid_spec)?;
            let epsilon = resolve(epsilon, &file_config, "epsilon", 1e-5)?;
            let base = load_case(&case)?;
            let sweep = run_load_sweep(&base, &grid, &cfg, regularize.then_some(epsilon))?;

            let stem = format!("{}_sweep", base.name);
            let mut manifest = RunManifest::new(json!({
                "enum": cfg,
                "grid": grid_spec,
                "regularize": regularize.then_some(epsilon),
            }));
            manifest.case_fingerprint = Some(base.fingerprint());
            manifest.seed = Some(cfg.seed);
            emit(&cli.out, &format!("{stem}.csv"), &sweep.to_csv(), &mut manifest)?;
            emit(&cli.out, &format!("{stem}.json"), &sweep.to_json(), &mut manifest)?;
            manifest.wall_time_seconds = started.elapsed().as_secs_f64();
            manifest.write(&cli.out, &stem)?;

            let errors = sweep.records.iter().filter(|r| r.error.is_some()).count();
            println!("{stem}: {} grid points, {errors} flagged", sweep.records.len());
            Ok(if errors > 0 { 2 } else { 0 })
        }
        Command::Nose {
            case,
            lo,
            hi,
            width,
            flags,
        } => {
            let cfg = flags.build(&file_config)?;
            let base = load_case(&case)?;
            let (blo, bhi) = nose_point_bracket(&base, lo, hi, &cfg, width)?;
            let stem = format!("{}_nose", base.name);
            let mut manifest = RunManifest::new(json!({
                "enum": cfg, "lo": lo, "hi": hi, "width": width,
            }));
            manifest.case_fingerprint = Some(base.fingerprint());
            manifest.seed = Some(cfg.seed);
            let body = serde_json::to_string_pretty(&json!({
                "bracket_lo": blo,
                "bracket_hi": bhi,
                "width": bhi - blo,
            }))
            .expect("serializes");
            emit(&cli.out, &format!("{stem}.json"), &body, &mut manifest)?;
            manifest.wall_time_seconds = started.elapsed().as_secs_f64();
            manifest.write(&cli.out, &stem)?;
            println!("collapse bracketed in [{blo}, {bhi}]");
            Ok(0)
        }
        Command::Classify {
            set,
            case,
            v_tol,
            i_tol,
        } => {
            let set = load_set(&set)?;
            let base = load_case(&case)?;
            let work = work_case_for_set(&base, &set, set.solver.tolerance)?;
            let defaults = ClassifyConfig::default();
            let ccfg = ClassifyConfig {
                v_zero_tolerance: v_tol.unwrap_or(defaults.v_zero_tolerance),
                i_nonzero_tolerance: i_tol.unwrap_or(defaults.i_nonzero_tolerance),
            };
            let labelled = classify_set(&set, &work, &ccfg)?;
            let (total, sc) = count_short_circuit(&labelled, &work)?;

            let stem = format!("{}_{}_classified", base.name, set.lambda);
            let mut manifest = RunManifest::new(json!({ "classify": ccfg }));
            manifest.case_fingerprint = Some(work.fingerprint());
            emit(&cli.out, &format!("{stem}.json"), &labelled.to_json(), &mut manifest)?;
            manifest.wall_time_seconds = started.elapsed().as_secs_f64();
            manifest.write(&cli.out, &stem)?;
            println!("{total} solutions, {sc} short-circuit");
            Ok(0)
        }
        Command::Stats {
            set,
            case,
            histogram,
            scatter,
            limits,
            minv,
            cluster,
            vq,
            bus,
            gen,
            min_solutions,
        } => {
            let set = load_set(&set)?;
            let base = load_case(&case)?;
            let work = work_case_for_set(&base, &set, set.solver.tolerance)?;
            let prefix = format!("{}_{}", base.name, set.lambda);
            let mut manifest = RunManifest::new(json!({
                "stat": {
                    "histogram": histogram, "scatter": scatter, "limits": limits,
                    "minv": minv, "cluster": cluster, "vq": vq,
                    "bus": bus, "gen": gen,
                },
            }));
            manifest.case_fingerprint = Some(work.fingerprint());

            if histogram {
                let scope = match bus {
                    Some(b) => HistogramScope::Bus(BusId(b)),
                    None => HistogramScope::All,
                };
                let hist = magnitude_histogram(&set, &work, scope)?;
                let stem = format!("{prefix}_histogram");
                emit(&cli.out, &format!("{stem}.csv"), &hist.to_csv(), &mut manifest)?;
                emit(
                    &cli.out,
                    &format!("{stem}.json"),
                    &serde_json::to_string_pretty(&hist).expect("serializes"),
                    &mut manifest,
                )?;
                println!(
                    "{stem}: {} in range, {} above 1.1",
                    hist.in_range_total(),
                    hist.out_of_range
                );
            } else if scatter {
                let bus = BusId(bus.ok_or_else(|| anyhow!("--scatter requires --bus"))?);
                let pts = voltage_scatter(&set, &work, bus)?;
                let mut csv = String::from("re_v,im_v\n");
                for (re, im) in &pts {
                    csv.push_str(&format!("{re},{im}\n"));
                }
                let stem = format!("{prefix}_scatter_bus{bus}");
                emit(&cli.out, &format!("{stem}.csv"), &csv, &mut manifest)?;
                println!("{stem}: {} points", pts.len());
            } else if limits {
                let spec = LimitSpec::from_case(&work);
                let (within, report) = apply_limits(&set, &work, &spec)?;
                let stem = format!("{prefix}_limits");
                emit(
                    &cli.out,
                    &format!("{stem}_within.json"),
                    &within.to_json(),
                    &mut manifest,
                )?;
                emit(
                    &cli.out,
                    &format!("{stem}_violations.json"),
                    &serde_json::to_string_pretty(&report).expect("serializes"),
                    &mut manifest,
                )?;
                println!("{}: {} of {} within limits", stem, within.len(), set.len());
            } else if minv {
                let table = min_voltage_table(&set)?;
                let mut csv = String::from("rank,min_v\n");
                for (i, v) in table.iter().enumerate() {
                    csv.push_str(&format!("{i},{v}\n"));
                }
                let stem = format!("{prefix}_minv");
                emit(&cli.out, &format!("{stem}.csv"), &csv, &mut manifest)?;
                println!("{stem}: {} solutions", table.len());
            } else if cluster {
                let pcfg = PatternConfig {
                    min_solutions: min_solutions.unwrap_or(PatternConfig::default().min_solutions),
                    ..PatternConfig::default()
                };
                let groups = pattern_cluster(&set, &work, &pcfg)?;
                let stem = format!("{prefix}_cluster");
                emit(
                    &cli.out,
                    &format!("{stem}.json"),
                    &serde_json::to_string_pretty(&groups).expect("serializes"),
                    &mut manifest,
                )?;
                println!("{stem}: {} groups", groups.len());
            } else if vq {
                let bus = BusId(bus.ok_or_else(|| anyhow!("--vq requires --bus"))?);
                let gen = gen.ok_or_else(|| anyhow!("--vq requires --gen"))?;
                let surface = export_vq_surface(&set, &work, bus, gen)?;
                let stem = format!("{prefix}_vq_bus{bus}_gen{gen}");
                emit(&cli.out, &format!("{stem}.csv"), &surface.to_csv(), &mut manifest)?;
                emit(
                    &cli.out,
                    &format!("{stem}.json"),
                    &serde_json::to_string_pretty(&surface).expect("serializes"),
                    &mut manifest,
                )?;
                println!("{stem}: {} triples", surface.points.len());
            }
            manifest.wall_time_seconds = started.elapsed().as_secs_f64();
            manifest.write(&cli.out, &format!("{prefix}_stats"))?;
            Ok(0)
        }
        Command::Compare { a, b, tol } => {
            let set_a = load_set(&a)?;
            let set_b = load_set(&b)?;
            let report = compare_sets(&set_a, &set_b, tol)?;
            let mut manifest = RunManifest::new(json!({ "tol": tol }));
            emit(
                &cli.out,
                "diff.json",
                &serde_json::to_string_pretty(&report).expect("serializes"),
                &mut manifest,
            )?;
            manifest.wall_time_seconds = started.elapsed().as_secs_f64();
            manifest.write(&cli.out, "diff")?;
            // Diffs are data, not errors.
            println!("{}", report.summary());
            Ok(0)
        }
        Command::Import {
            file,
            case,
            scale,
            tol,
        } => {
            let base = load_case(&case)?;
            let lambda = resolve(scale.lambda, &file_config, "lambda", 1.0)?;
            let scaled = base.scale_loads(lambda);
            let epsilon = resolve(scale.epsilon, &file_config, "epsilon", 1e-5)?;
            let solver = SolverConfig {
                tolerance: resolve(tol, &file_config, "tol", 1e-9)?,
                ..SolverConfig::default()
            };
            let work = if scale.regularize {
                scaled.regularize_transit_buses_with(
                    epsilon,
                    pfatlas::model::RegularizeOptions {
                        reactive: false,
                        mismatch_tolerance: solver.tolerance,
                    },
                )?
            } else {
                scaled
            };
            let model = PfModel::new(&work)?;
            let text = std::fs::read_to_string(&file)
                .with_context(|| format!("reading {}", file.display()))?;
            let rows = if file.extension().and_then(|e| e.to_str()) == Some("json") {
                let external = SolutionSet::from_json(&text)
                    .with_context(|| format!("parsing {}", file.display()))?;
                external
                    .solutions
                    .into_iter()
                    .enumerate()
                    .map(|(i, s)| (i + 1, s.voltages))
                    .collect()
            } else {
                import_csv_rows(&text).map_err(|e| anyhow!(e))?
            };
            let total = rows.len();
            let mut outcome = validate_imported(&model, lambda, rows, solver);
            outcome.set.regularized_epsilon = scale.regularize.then_some(epsilon);

            let stem = format!("{}_{}_imported", base.name, lambda);
            let mut manifest = RunManifest::new(json!({
                "lambda": lambda,
                "tol": solver.tolerance,
                "source": file.display().to_string(),
            }));
            manifest.case_fingerprint = Some(work.fingerprint());
            emit(
                &cli.out,
                &format!("{stem}.json"),
                &outcome.set.to_json(),
                &mut manifest,
            )?;
            if !outcome.rejected.is_empty() {
                let mut sidecar = String::from("row,reason\n");
                for r in &outcome.rejected {
                    sidecar.push_str(&format!("{},\"{}\"\n", r.row, r.reason));
                }
                emit(&cli.out, &format!("{stem}.rejected.csv"), &sidecar, &mut manifest)?;
            }
            manifest.wall_time_seconds = started.elapsed().as_secs_f64();
            manifest.write(&cli.out, &stem)?;

            println!(
                "{stem}: {} of {total} rows accepted, {} quarantined",
                outcome.set.len(),
                outcome.rejected.len()
            );
            Ok(if outcome.rejected.is_empty() { 0 } else { 2 })
        }
        Command::Export { set } => {
            let loaded = load_set(&set)?;
            let stem = set
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or("set")
                .to_string();
            let mut manifest = RunManifest::new(json!({ "source": set.display().to_string() }));
            emit(&cli.out, &format!("{stem}.csv"), &loaded.to_csv(), &mut manifest)?;
            manifest.wall_time_seconds = started.elapsed().as_secs_f64();
            manifest.write(&cli.out, &stem)?;
            println!("{stem}.csv: {} rows", loaded.len());
            Ok(0)
        }
    }
}
