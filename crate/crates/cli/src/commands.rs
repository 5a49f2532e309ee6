use std::fs::File;
use std::io::{BufReader, Write};
use std::path::Path;

use pim_spmv::formats::{parse_matrix_market, BcsrMatrix, Scalar};
use pim_spmv::partition::{mean_cv, plan_stats};
use pim_spmv::runtime::{plan_for, FailureKind, SweepOutcome};
use pim_spmv::{
    kernel_registry, with_element_type, BlockShape, ElementType, KernelSpec, RunOptions, SimConfig, SparseFormat,
    SyncMode, SyntheticKind, ThreadBalancing, TripletMatrix,
};

use crate::args::{
    ExecArgs, InfoArgs, KernelArgs, ListArgs, MachineArgs, MatrixArgs, OutputFormat, RunArgs, SweepArgs, VerifyArgs,
};
use crate::output::{self, InfoReport};
use crate::CliError;

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

fn parse_pair(text: &str, what: &str) -> Result<(usize, usize), CliError> {
    let bad = || usage(format!("invalid {what} `{text}`"));
    match text.split_once(['x', 'X']) {
        Some((a, b)) => Ok((a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?)),
        None => {
            let n = text.parse().map_err(|_| bad())?;
            Ok((n, n))
        }
    }
}

fn block_shape(values: &Option<Vec<usize>>) -> Result<Option<BlockShape>, CliError> {
    values
        .as_ref()
        .map(|v| BlockShape::new(v[0], v[1]).map_err(usage))
        .transpose()
}

/// The matrix in element type `T`. File values are parsed directly in `T`.
fn load_matrix<T: Scalar>(args: &MatrixArgs) -> Result<TripletMatrix<T>, CliError> {
    if let Some(path) = &args.source.matrix {
        let file = File::open(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
        return parse_matrix_market(BufReader::new(file)).map_err(|e| usage(format!("{}: {e}", path.display())));
    }
    let text = args.source.generator.as_deref().expect("clap requires a source");
    let kind = SyntheticKind::parse(text, args.seed).map_err(usage)?;
    let (rows, cols) = parse_pair(&args.size, "size")?;
    pim_spmv::generate_synthetic(kind, rows, cols).map_err(usage)
}

fn sim_config(args: &MachineArgs) -> Result<SimConfig, CliError> {
    let mut sim = SimConfig::resolve(&args.machine).map_err(usage)?;
    if let Some(cores) = args.cores {
        sim.machine = sim.machine.with_cores(cores);
    }
    if let Some(threads) = args.threads {
        sim.machine = sim.machine.with_threads(threads);
    }
    sim.validate().map_err(usage)?;
    Ok(sim)
}

/// Parses a kernel label and applies command-line switches on top. The
/// grid applies to 2D kernels only when `grid_2d_only` is set.
fn resolve_spec(label: &str, opts: &KernelArgs, grid_2d_only: bool) -> Result<KernelSpec, CliError> {
    let mut spec = KernelSpec::parse(label).map_err(usage)?;
    if let Some(tb) = opts.thread_balancing {
        spec = spec.with_thread_balancing(tb).map_err(usage)?;
    }
    if let Some(sync) = opts.sync {
        spec = spec.with_sync(sync);
    }
    if let Some(dtype) = opts.dtype {
        spec = spec.with_dtype(dtype);
    }
    if let Some(block) = block_shape(&opts.block)? {
        spec = spec.with_block(block);
    }
    if let Some(grid) = &opts.grid {
        if spec.layout.is_2d() || !grid_2d_only {
            let (pr, pc) = parse_pair(grid, "grid")?;
            spec = spec.with_grid(pr, pc).map_err(usage)?;
        }
    }
    Ok(spec)
}

fn load_x<T: Scalar>(path: Option<&Path>, n: usize) -> Result<Vec<T>, CliError> {
    let Some(path) = path else {
        return Ok(vec![T::one(); n]);
    };
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let x = text
        .split_whitespace()
        .map(|tok| T::parse_token(tok).ok_or_else(|| usage(format!("{}: invalid value `{tok}`", path.display()))))
        .collect::<Result<Vec<T>, _>>()?;
    if x.len() != n {
        return Err(usage(format!(
            "{}: {} values for a matrix with {n} columns",
            path.display(),
            x.len()
        )));
    }
    Ok(x)
}

fn run_options(exec: &ExecArgs) -> RunOptions {
    RunOptions {
        verify: !exec.no_verify,
        amortize_matrix: exec.amortize_matrix,
    }
}

pub fn info(args: &InfoArgs) -> Result<(), CliError> {
    let m: TripletMatrix<f64> = load_matrix(&args.matrix)?;
    let shape = block_shape(&args.block)?.unwrap_or_default();
    let counts = m.row_counts();
    let (mean, cv) = mean_cv(counts.iter().map(|&c| c as f64));
    let mut report = InfoReport {
        n_rows: m.n_rows(),
        n_cols: m.n_cols(),
        nnz: m.nnz(),
        row_nnz_min: counts.iter().copied().min().unwrap_or(0),
        row_nnz_max: counts.iter().copied().max().unwrap_or(0),
        row_nnz_mean: mean,
        row_nnz_cv: cv,
        empty_rows: counts.iter().filter(|&&c| c == 0).count(),
        bandwidth: m.bandwidth(),
        block: shape,
        block_fill_ratio: BcsrMatrix::from_triplets(&m, shape).fill_ratio(),
        kernel: None,
        plan: None,
        balance: None,
    };
    if let Some(label) = &args.plan {
        let sim = sim_config(&args.machine)?;
        let opts = KernelArgs {
            dtype: None,
            sync: None,
            thread_balancing: None,
            grid: None,
            block: args.block.clone(),
        };
        let spec = resolve_spec(label, &opts, false)?;
        let plan = plan_for(&m, &spec, sim.machine.n_cores)?;
        report.balance = Some(plan_stats(&plan, spec.dtype.width_bytes()));
        report.kernel = Some(spec.label());
        report.plan = Some(plan);
    }
    let mut out = std::io::stdout().lock();
    match args.output {
        OutputFormat::Json => writeln!(out, "{}", serde_json::to_string_pretty(&report).expect("serializable"))?,
        OutputFormat::Csv => output::info_csv(&mut out, &report)?,
        OutputFormat::Table => output::info_table(&mut out, &report)?,
    }
    Ok(())
}

pub fn run(args: &RunArgs) -> Result<(), CliError> {
    let spec = resolve_spec(&args.kernel, &args.kernel_opts, false)?;
    let sim = sim_config(&args.machine)?;
    if args.plan && args.output == OutputFormat::Csv {
        return Err(usage("--plan needs json or table output"));
    }
    with_element_type!(spec.dtype, T => run_typed::<T>(args, &spec, &sim))
}

fn run_typed<T: Scalar>(args: &RunArgs, spec: &KernelSpec, sim: &SimConfig) -> Result<(), CliError> {
    let m: TripletMatrix<T> = load_matrix(&args.matrix)?;
    let x: Vec<T> = load_x(args.exec.x_file.as_deref(), m.n_cols())?;
    let report = pim_spmv::run_end_to_end(&m, spec, sim, &x, run_options(&args.exec))?;
    let plan = if args.plan {
        Some(plan_for(&m, spec, sim.machine.n_cores)?)
    } else {
        None
    };
    let mut out = std::io::stdout().lock();
    match args.output {
        OutputFormat::Json => match plan {
            Some(plan) => {
                let both = serde_json::json!({ "plan": plan, "report": report });
                writeln!(out, "{}", serde_json::to_string_pretty(&both).expect("serializable"))?;
            }
            None => writeln!(out, "{}", report.to_json())?,
        },
        OutputFormat::Csv => output::reports_csv(&mut out, std::slice::from_ref(&report))?,
        OutputFormat::Table => {
            output::run_table(&mut out, &report)?;
            if let Some(plan) = plan {
                writeln!(out, "{}", plan.to_json())?;
            }
        }
    }
    Ok(())
}

/// Kernels named on the command line (or the registry), with switches
/// applied and optionally expanded over their legal sync modes.
fn sweep_specs(
    names: &[String],
    opts: &KernelArgs,
    all_sync: bool,
    dtype: ElementType,
) -> Result<Vec<KernelSpec>, CliError> {
    if all_sync && opts.sync.is_some() {
        return Err(usage("--all-sync and --sync are mutually exclusive"));
    }
    let names = if names.is_empty() {
        kernel_registry()
    } else {
        names.to_vec()
    };
    let mut specs = Vec::new();
    for name in &names {
        let spec = resolve_spec(name, opts, true)?.with_dtype(dtype);
        if all_sync {
            specs.extend(spec.legal_sync_modes().into_iter().map(|s| spec.with_sync(s)));
        } else {
            specs.push(spec);
        }
    }
    specs.sort_by_key(KernelSpec::label);
    specs.dedup();
    Ok(specs)
}

/// Exit status of a batch: verification failures first, then
/// configuration problems; capacity overflows are tolerated.
fn batch_status(outcome: &SweepOutcome) -> Result<(), CliError> {
    let failed = |kind| {
        outcome
            .entries
            .iter()
            .filter(|e| e.failure == Some(kind))
            .map(|e| e.kernel.as_str())
            .collect::<Vec<_>>()
    };
    let mismatched = failed(FailureKind::Mismatch);
    if !mismatched.is_empty() {
        return Err(CliError::Verify(format!(
            "wrong results from {}",
            mismatched.join(", ")
        )));
    }
    let config = failed(FailureKind::Config);
    if !config.is_empty() {
        return Err(usage(format!("could not run {}", config.join(", "))));
    }
    Ok(())
}

pub fn sweep(args: &SweepArgs) -> Result<(), CliError> {
    let dtype = args.kernel_opts.dtype.unwrap_or(ElementType::Int32);
    let specs = sweep_specs(&args.kernels, &args.kernel_opts, args.all_sync, dtype)?;
    let sim = sim_config(&args.machine)?;
    with_element_type!(dtype, T => sweep_typed::<T>(args, &specs, &sim))
}

fn sweep_typed<T: Scalar>(args: &SweepArgs, specs: &[KernelSpec], sim: &SimConfig) -> Result<(), CliError> {
    let m: TripletMatrix<T> = load_matrix(&args.matrix)?;
    let x: Vec<T> = load_x(args.exec.x_file.as_deref(), m.n_cols())?;
    let outcome = pim_spmv::sweep(&m, specs, sim, &x, run_options(&args.exec));
    let table = output::SweepTable::new(&m, T::DTYPE, sim, &outcome);
    let mut out = std::io::stdout().lock();
    match args.output {
        OutputFormat::Json => writeln!(out, "{}", serde_json::to_string_pretty(&table).expect("serializable"))?,
        OutputFormat::Csv => output::sweep_csv(&mut out, &outcome)?,
        OutputFormat::Table => output::sweep_table(&mut out, &table)?,
    }
    out.flush()?;
    batch_status(&outcome)
}

pub fn verify(args: &VerifyArgs) -> Result<(), CliError> {
    let sim = sim_config(&args.machine)?;
    let dtypes = if args.all_dtypes {
        ElementType::ALL.to_vec()
    } else {
        vec![args.kernel_opts.dtype.unwrap_or(ElementType::Int32)]
    };
    let mut out = std::io::stdout().lock();
    let (mut passed, mut total) = (0, 0);
    let mut first_error: Option<CliError> = None;
    for dtype in dtypes {
        let specs = sweep_specs(&args.kernels, &args.kernel_opts, args.all_sync, dtype)?;
        let outcome = with_element_type!(dtype, T => {
            let m: TripletMatrix<T> = load_matrix(&args.matrix)?;
            let x: Vec<T> = load_x(args.x_file.as_deref(), m.n_cols())?;
            pim_spmv::sweep(&m, &specs, &sim, &x, RunOptions::default())
        });
        let mut entries: Vec<_> = outcome.entries.iter().collect();
        entries.sort_by(|a, b| a.kernel.cmp(&b.kernel));
        for e in entries {
            total += 1;
            match &e.error {
                None => {
                    passed += 1;
                    writeln!(out, "ok    {}", e.kernel)?;
                }
                Some(err) => writeln!(out, "FAIL  {}: {err}", e.kernel)?,
            }
        }
        if let Err(e) = batch_status(&outcome) {
            let worse = matches!(
                (&first_error, &e),
                (None, _) | (Some(CliError::Usage(_)), CliError::Verify(_))
            );
            if worse {
                first_error = Some(e);
            }
        }
        if first_error.is_none() {
            if let Some(e) = outcome
                .entries
                .iter()
                .find(|e| e.failure == Some(FailureKind::Capacity))
            {
                first_error = Some(CliError::Capacity(format!(
                    "{}: {}",
                    e.kernel,
                    e.error.as_deref().unwrap_or_default()
                )));
            }
        }
    }
    writeln!(out, "{passed}/{total} verified")?;
    match first_error {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

pub fn list_kernels(args: &ListArgs) -> Result<(), CliError> {
    let lines: Vec<String> = if args.formats {
        SparseFormat::ALL.iter().map(|f| f.to_string()).collect()
    } else if args.dtypes {
        ElementType::ALL.iter().map(|d| d.to_string()).collect()
    } else if args.sync_modes {
        SyncMode::ALL.iter().map(|s| s.to_string()).collect()
    } else if args.thread_balancings {
        ThreadBalancing::ALL.iter().map(|t| t.to_string()).collect()
    } else {
        kernel_registry()
    };
    let mut out = std::io::stdout().lock();
    for line in lines {
        writeln!(out, "{line}")?;
    }
    Ok(())
}
