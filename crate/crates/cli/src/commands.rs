//! Subcommands other than `check`.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use deconv_core::estimator::{select_tuning, Estimator, EstimatorSpec, RiskType};
use deconv_core::kernel::build_kernel;
use deconv_core::reconstruction::{base_function, build_l, Side};
use deconv_core::simulation::output::{provenance_line, sha256_hex, write_csv, write_experiment};
use deconv_core::simulation::rate_experiment;
use deconv_core::zero_set::build_sequence;

use crate::config::{load_config, ErrorDecl, ExperimentConfig, RiskDecl, DEFAULT_OUTPUT_DIR};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ErrorKind {
    Uniform,
    UniformConvolution,
    Discrete,
    Binomial,
    UniformGamma,
}

/// Error law given on the command line.
#[derive(Debug, Clone, Args)]
pub struct ErrorArgs {
    #[arg(long = "error", value_enum)]
    pub kind: Option<ErrorKind>,
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub thetas: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    pub mults: Vec<u32>,
    #[arg(long)]
    pub step: Option<f64>,
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    pub offset: i64,
    #[arg(long, value_delimiter = ',')]
    pub probs: Vec<f64>,
    #[arg(long)]
    pub m: Option<u32>,
    #[arg(long)]
    pub shape: Option<f64>,
    #[arg(long)]
    pub rate: Option<f64>,
}

fn need<T: Copy>(v: Option<T>, flag: &str, kind: &str) -> Result<T> {
    v.with_context(|| format!("--error {kind} needs --{flag}"))
}

impl ErrorArgs {
    pub fn to_decl(&self) -> Result<ErrorDecl> {
        let kind = self.kind.context("an error law is required (--error ...)")?;
        Ok(match kind {
            ErrorKind::Uniform => ErrorDecl::Uniform {
                theta: need(self.theta, "theta", "uniform")?,
            },
            ErrorKind::UniformConvolution => {
                if self.thetas.is_empty() {
                    bail!("--error uniform-convolution needs --thetas");
                }
                let mults = if self.mults.is_empty() {
                    vec![1; self.thetas.len()]
                } else {
                    self.mults.clone()
                };
                ErrorDecl::UniformConvolution {
                    thetas: self.thetas.clone(),
                    mults,
                }
            }
            ErrorKind::Discrete => {
                if self.probs.is_empty() {
                    bail!("--error discrete needs --probs");
                }
                ErrorDecl::Discrete {
                    step: self.step.unwrap_or(1.0),
                    offset: self.offset,
                    probs: self.probs.clone(),
                }
            }
            ErrorKind::Binomial => ErrorDecl::Binomial {
                m: need(self.m, "m", "binomial")?,
            },
            ErrorKind::UniformGamma => ErrorDecl::UniformGamma {
                theta: need(self.theta, "theta", "uniform-gamma")?,
                shape: need(self.shape, "shape", "uniform-gamma")?,
                rate: need(self.rate, "rate", "uniform-gamma")?,
            },
        })
    }

    /// Hash of the resolved declaration, for CSV provenance.
    fn fingerprint(&self, extra: &str) -> Result<String> {
        Ok(sha256_hex(format!("{:?}|{extra}", self.to_decl()?).as_bytes()))
    }
}

/// Output target: a file, or stdout when absent.
fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(io::BufWriter::new(
            fs::File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(io::BufWriter::new(io::stdout().lock())),
    })
}

fn fmt_rows(rows: Vec<Vec<f64>>) -> Vec<Vec<String>> {
    rows.into_iter()
        .map(|r| r.into_iter().map(|v| v.to_string()).collect())
        .collect()
}

fn uniform_grid(from: f64, to: f64, points: usize) -> Result<Vec<f64>> {
    if !(to > from) || points < 2 {
        bail!("grid needs --to > --from and at least 2 points");
    }
    Ok((0..points)
        .map(|i| from + (to - from) * i as f64 / (points - 1) as f64)
        .collect())
}

#[derive(Debug, Clone, Args)]
pub struct KernelArgs {
    /// Vanishing moments of the kernel.
    #[arg(long, default_value_t = 3)]
    pub k0: u32,
    /// Highest derivative to tabulate.
    #[arg(long, default_value_t = 2)]
    pub orders: usize,
    #[arg(long, default_value_t = 201)]
    pub points: usize,
    /// Tabulate the deconvolution kernels `L_±` instead; needs an error law.
    #[arg(long)]
    pub deconv: bool,
    #[arg(long, default_value_t = 0.2)]
    pub h: f64,
    /// Truncation `N` for `--deconv`.
    #[arg(long, default_value_t = 5)]
    pub n: u32,
    #[arg(long, allow_hyphen_values = true)]
    pub from: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub to: Option<f64>,
    #[command(flatten)]
    pub error: ErrorArgs,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

pub fn kernel(args: &KernelArgs) -> Result<()> {
    let k = build_kernel(args.k0)?;
    let out = open_output(args.out.as_deref())?;
    if !args.deconv {
        let grid = uniform_grid(args.from.unwrap_or(-1.0), args.to.unwrap_or(1.0), args.points)?;
        let mut header = vec!["t".to_string(), "K".to_string()];
        header.extend((1..=args.orders).map(|i| format!("K{i}")));
        let rows = grid
            .iter()
            .map(|&t| {
                let mut r = vec![t];
                for o in 0..=args.orders {
                    r.push(k.eval(o, t)?);
                }
                Ok(r)
            })
            .collect::<Result<Vec<_>>>()?;
        let hash = sha256_hex(format!("kernel|{}|{}|{:?}", args.k0, args.orders, grid).as_bytes());
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        write_csv(out, &hash, &header, &fmt_rows(rows))?;
        return Ok(());
    }
    let error = &args.error;
    let model = error.to_decl()?.to_spec().build()?;
    let seq = Arc::new(build_sequence(&model, args.n)?);
    let base = Arc::new(base_function(&model, &k, args.h)?);
    let plus = build_l(seq.clone(), base.clone(), Side::Plus);
    let minus = build_l(seq, base, Side::Minus);
    let (lo, hi) = (
        minus.support().0.min(plus.support().0),
        plus.support().1.max(minus.support().1),
    );
    let grid = uniform_grid(args.from.unwrap_or(lo), args.to.unwrap_or(hi), args.points)?;
    let rows = grid.iter().map(|&t| vec![t, plus.eval(t), minus.eval(t)]).collect();
    let hash = error.fingerprint(&format!("deconv|{}|{}|{}|{:?}", args.k0, args.h, args.n, grid))?;
    write_csv(out, &hash, &["t", "L_plus", "L_minus"], &fmt_rows(rows))?;
    Ok(())
}

#[derive(Debug, Clone, Args)]
pub struct CoeffsArgs {
    #[command(flatten)]
    pub error: ErrorArgs,
    /// Truncation `N`.
    #[arg(long)]
    pub n: u32,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

pub fn coeffs(args: &CoeffsArgs) -> Result<()> {
    let model = args.error.to_decl()?.to_spec().build()?;
    let seq = build_sequence(&model, args.n)?;
    if seq.near_coincidences > 0 {
        eprintln!(
            "warning: {} distinct index tuples merged only by floating-point tolerance",
            seq.near_coincidences
        );
    }
    let rows = seq
        .entries
        .iter()
        .map(|e| vec![e.ell, e.c_plus.re, e.c_plus.im, e.c_minus.re, e.c_minus.im])
        .collect();
    let hash = args.error.fingerprint(&format!("coeffs|{}", args.n))?;
    write_csv(
        open_output(args.out.as_deref())?,
        &hash,
        &["ell", "c_plus_re", "c_plus_im", "c_minus_re", "c_minus_im"],
        &fmt_rows(rows),
    )?;
    Ok(())
}

#[derive(Debug, Clone, Args)]
pub struct EstimateArgs {
    /// Experiment configuration supplying the error law and tuning constants.
    #[arg(long)]
    pub config: PathBuf,
    /// Single-column CSV of observations.
    #[arg(long)]
    pub sample: PathBuf,
    #[arg(long, default_value_t = -5.0, allow_hyphen_values = true)]
    pub from: f64,
    #[arg(long, default_value_t = 5.0, allow_hyphen_values = true)]
    pub to: f64,
    #[arg(long, default_value_t = 201)]
    pub points: usize,
    /// Override the bandwidth.
    #[arg(long)]
    pub h: Option<f64>,
    /// Override the truncation `N`.
    #[arg(long)]
    pub n: Option<u32>,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

/// Reads one numeric column; `#` lines and a non-numeric first row are skipped.
pub fn read_sample(path: &Path) -> Result<Vec<f64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("cannot read {}", path.display()))?;
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.with_context(|| format!("{}: malformed row {}", path.display(), i + 1))?;
        let Some(field) = rec.get(0) else { continue };
        if field.is_empty() {
            continue;
        }
        match field.parse::<f64>() {
            Ok(v) if v.is_finite() => out.push(v),
            Ok(_) => bail!("{}: row {} is not finite", path.display(), i + 1),
            Err(_) if i == 0 => {}
            Err(_) => bail!("{}: row {} is not a number: {field:?}", path.display(), i + 1),
        }
    }
    if out.len() < 2 {
        bail!("{}: need at least 2 observations, found {}", path.display(), out.len());
    }
    Ok(out)
}

pub fn estimate(args: &EstimateArgs) -> Result<()> {
    let cfg = load_config(&args.config)?;
    let sample = read_sample(&args.sample)?;
    let model = Arc::new(cfg.error.to_spec().build()?);
    let settings = cfg.settings();
    let risk = match cfg.risk {
        RiskDecl::Pointwise { .. } => RiskType::Pointwise,
        RiskDecl::L2 => RiskType::L2,
    };
    let p = settings.moment_order(&model, risk);
    let tuning = select_tuning(&model, cfg.alpha, p, cfg.a_const, cfg.b_const, sample.len(), risk)?;
    for w in &tuning.warnings {
        eprintln!("warning: {w}");
    }
    let est = Estimator::new(EstimatorSpec {
        model,
        kernel: Arc::new(build_kernel(settings.kernel_order())?),
        h: args.h.unwrap_or(tuning.h),
        n_cap: args.n.unwrap_or(tuning.n_cap),
        alpha: cfg.alpha,
        p,
        a_const: cfg.a_const,
        b_const: cfg.b_const,
    })?;
    for w in est.warnings() {
        eprintln!("warning: {w}");
    }
    let grid = uniform_grid(args.from, args.to, args.points)?;
    let values = est.estimate_grid(&sample, &grid);
    let hash = sha256_hex(
        format!(
            "estimate|{}|{:?}|{}|{}|{:?}",
            cfg.to_toml()?,
            sample,
            est.spec().h,
            est.spec().n_cap,
            grid
        )
        .as_bytes(),
    );
    let rows = grid.iter().zip(values).map(|(&x, v)| vec![x, v]).collect();
    write_csv(
        open_output(args.out.as_deref())?,
        &hash,
        &["x", "f_hat"],
        &fmt_rows(rows),
    )?;
    Ok(())
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    /// Experiment configuration (TOML).
    pub config: PathBuf,
    /// Overrides `output_dir` from the configuration.
    #[arg(long, env = "DECONV_OUTPUT_DIR")]
    pub output_dir: Option<PathBuf>,
    /// Also write `plot.svg`.
    #[arg(long)]
    pub plot: bool,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
}

pub fn output_dir(cfg: &ExperimentConfig, flag: Option<&Path>) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR))
}

pub fn simulate(args: &SimulateArgs) -> Result<()> {
    let mut cfg = load_config(&args.config)?;
    if args.threads.is_some() {
        cfg.threads = args.threads;
    }
    let dir = output_dir(&cfg, args.output_dir.as_deref());
    let report = rate_experiment(&cfg.to_spec()).context("experiment failed")?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    let files = write_experiment(&dir, &report, args.plot)
        .with_context(|| format!("cannot write results to {}", dir.display()))?;
    println!("{}", provenance_line(&report.fingerprint));
    println!(
        "slope {:.4} (95% CI {:.4}, {:.4}), theoretical {:.4}",
        report.slope, report.slope_ci.0, report.slope_ci.1, report.theoretical_slope
    );
    for f in files {
        println!("wrote {}", f.display());
    }
    Ok(())
}
