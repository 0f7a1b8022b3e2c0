//! `corrdiag`: command-line front end. Every output file starts with `#` lines
//! echoing the run configuration, so equal configurations give identical files.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use corrdiag::curie_weiss::{exact_cn, limiting_c, spontaneous_magnetization, CurieWeissParams};
use corrdiag::oracle::{check_height_lemma, classify_tuples, extrapolate_ratio};
use corrdiag::partitions::enumerate_pair_partitions;
use corrdiag::spectra::{run_ensemble, EnsembleConfig};
use corrdiag::verify::{self, Tolerances, VerifyConfig};
use corrdiag::{
    nu_c_moment, toeplitz_volume, GeneratorKind, GeneratorSpec, MomentForm, VolumeCache,
};

const VERSION: &str = env!("CARGO_PKG_VERSION");
const ORACLE_VOLUME_SAMPLES: u64 = 1_000_000;
const ORACLE_VOLUME_SEED: u64 = 42;

#[derive(Parser, Debug)]
#[command(
    name = "corrdiag",
    version,
    about = "Spectra of random matrices with correlated diagonals"
)]
struct Cli {
    /// Worker threads (0 = one per core).
    #[arg(long, global = true, env = "CORRDIAG_THREADS", default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// List the pair partitions of {1..k} with crossing flag and height.
    Partitions {
        #[arg(long)]
        k: usize,
        #[command(flatten)]
        out: OutArg,
    },
    /// Estimate Toeplitz volumes for every pair partition of size k; writes a volume cache.
    Volume {
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[command(flatten)]
        out: OutArg,
    },
    /// Moments of the limit law for k = 1..K at each correlation c.
    Moments {
        /// Largest moment order K.
        #[arg(long)]
        k: usize,
        /// Correlation values (repeat or comma-separate).
        #[arg(
            long,
            value_delimiter = ',',
            required = true,
            allow_negative_numbers = true
        )]
        c: Vec<f64>,
        /// Volume cache written by `volume`; missing volumes are estimated.
        #[arg(long)]
        cache: Option<PathBuf>,
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = FormArg::CatalanPlusCrossing)]
        form: FormArg,
        #[command(flatten)]
        out: OutArg,
    },
    /// Curie-Weiss correlation: finite-n covariance and its limit.
    CurieWeiss {
        #[arg(long, value_delimiter = ',', required = true)]
        beta: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_values_t = [100usize, 200, 400, 800, 1600])]
        n: Vec<usize>,
        #[command(flatten)]
        out: OutArg,
    },
    /// Simulate an ensemble; writes histogram.csv and moments.csv into --out.
    Simulate(SimulateArgs),
    /// Enumerate consistent tuples and write a JSON report.
    Oracle {
        #[arg(long)]
        k: usize,
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<usize>,
        #[command(flatten)]
        out: OutArg,
    },
    /// Run the acceptance criteria; exits non-zero if any check fails.
    Verify(VerifyArgs),
}

#[derive(Args, Debug)]
struct OutArg {
    /// Output file (stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum FormArg {
    CatalanPlusCrossing,
    AllPartitions,
}

impl From<FormArg> for MomentForm {
    fn from(f: FormArg) -> Self {
        match f {
            FormArg::CatalanPlusCrossing => MomentForm::CatalanPlusCrossing,
            FormArg::AllPartitions => MomentForm::AllPartitions,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
enum GeneratorArg {
    Independent,
    Equicorrelated,
    CurieWeiss,
    Toeplitz,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long, value_enum, default_value_t = GeneratorArg::Equicorrelated)]
    generator: GeneratorArg,
    /// Correlation for the equicorrelated generator.
    #[arg(long)]
    c: Option<f64>,
    /// Inverse temperature for the Curie-Weiss generator.
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 100)]
    realizations: usize,
    /// Largest empirical moment order.
    #[arg(long, default_value_t = 12)]
    k: usize,
    /// Largest order compared with the limit law.
    #[arg(long, default_value_t = 6)]
    theory_k: usize,
    #[arg(long, default_value_t = 200_000)]
    samples: u64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    bins: usize,
    /// Histogram range as lo,hi.
    #[arg(long, value_delimiter = ',', default_values_t = [-5.0, 5.0], allow_negative_numbers = true)]
    range: Vec<f64>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Criteria to run (1-9, comma-separated); all by default.
    #[arg(long, value_delimiter = ',')]
    criteria: Vec<u8>,
    /// JSON file overriding tolerance fields.
    #[arg(long)]
    tolerances: Option<PathBuf>,
    #[arg(long, default_value_t = VerifyConfig::default().seed)]
    seed: u64,
    #[arg(long, default_value_t = VerifyConfig::default().volume_samples)]
    samples: u64,
    /// Matrix size for the Gaussian ensembles.
    #[arg(long, default_value_t = VerifyConfig::default().ensemble_n)]
    n: usize,
    #[arg(long, default_value_t = VerifyConfig::default().realizations)]
    realizations: usize,
    /// Directory for report.json and histograms.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Config echo written at the top of every output.
#[derive(Clone)]
struct Header(Vec<(String, String)>);

impl Header {
    fn new(command: &str) -> Self {
        Self(vec![
            ("artifact".into(), format!("corrdiag {VERSION}")),
            ("command".into(), command.into()),
        ])
    }

    fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.0.push((key.into(), value.to_string()));
        self
    }

    fn comment(&self) -> String {
        self.0
            .iter()
            .map(|(k, v)| format!("# {k} = {v}\n"))
            .collect()
    }

    fn json(&self) -> serde_json::Value {
        self.0
            .iter()
            .map(|(k, v)| (k.clone(), serde_json::Value::String(v.clone())))
            .collect::<serde_json::Map<_, _>>()
            .into()
    }
}

fn emit(out: &Option<PathBuf>, body: &[u8]) -> Result<()> {
    match out {
        Some(path) => fs::write(path, body).with_context(|| format!("writing {}", path.display())),
        None => io::stdout().write_all(body).context("writing stdout"),
    }
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

fn cmd_partitions(k: usize, out: &OutArg) -> Result<()> {
    let parts = enumerate_pair_partitions(k)?;
    let mut s = Header::new("partitions").with("k", k).comment();
    s.push_str("partition,crossing,height\n");
    for p in &parts {
        writeln!(s, "\"{p}\",{},{}", p.is_crossing(), p.height())?;
    }
    emit(&out.out, s.as_bytes())
}

fn cmd_volume(k: usize, samples: u64, seed: u64, out: &OutArg) -> Result<()> {
    let parts = enumerate_pair_partitions(k)?;
    let mut cache = VolumeCache::new();
    cache.fill(&parts, samples, seed)?;
    let mut buf = Header::new("volume")
        .with("k", k)
        .with("samples", samples)
        .with("seed", seed)
        .comment()
        .into_bytes();
    cache.write_to(&mut buf)?;
    emit(&out.out, &buf)
}

fn load_cache(path: &Path) -> Result<VolumeCache> {
    let f = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(VolumeCache::read_from(BufReader::new(f))?)
}

fn cmd_moments(
    k: usize,
    cs: &[f64],
    cache: &Option<PathBuf>,
    samples: u64,
    seed: u64,
    form: MomentForm,
    out: &OutArg,
) -> Result<()> {
    if k == 0 {
        bail!("--k must be at least 1");
    }
    let mut volumes = match cache {
        Some(path) => load_cache(path)?,
        None => VolumeCache::new(),
    };
    let mut rows = Vec::new();
    for &c in cs {
        for order in 1..=k {
            let m = nu_c_moment(order, c, &mut volumes, samples, seed, form)?;
            if m.outside_generator_range && order == 1 {
                eprintln!("warning: c = {c} is outside [0, 1]; no generator realizes it");
            }
            rows.push(m);
        }
    }
    let mut buf = Header::new("moments")
        .with("k", k)
        .with("c", join(cs))
        .with(
            "cache",
            cache
                .as_ref()
                .map_or("none".into(), |p| p.display().to_string()),
        )
        .with("samples", samples)
        .with("seed", seed)
        .with("form", form)
        .comment()
        .into_bytes();
    corrdiag::limit_moments::write_moment_csv(&rows, &mut buf)?;
    emit(&out.out, &buf)
}

fn cmd_curie_weiss(betas: &[f64], ns: &[usize], out: &OutArg) -> Result<()> {
    let mut s = Header::new("curie-weiss")
        .with("beta", join(betas))
        .with("n", join(ns))
        .comment();
    s.push_str("beta,n,c_n,limit_c,magnetization\n");
    for &beta in betas {
        let (m, c) = (spontaneous_magnetization(beta), limiting_c(beta));
        for &n in ns {
            let cn = exact_cn(CurieWeissParams::new(beta, n)?)?;
            writeln!(s, "{beta},{n},{cn},{c},{m}")?;
        }
        writeln!(s, "{beta},inf,{c},{c},{m}")?;
    }
    emit(&out.out, s.as_bytes())
}

fn cmd_simulate(a: &SimulateArgs) -> Result<()> {
    let (kind, c) = match a.generator {
        GeneratorArg::Independent => (GeneratorKind::Independent, 0.0),
        GeneratorArg::Toeplitz => (GeneratorKind::Toeplitz, 1.0),
        GeneratorArg::Equicorrelated => {
            let c =
                a.c.context("--c is required for the equicorrelated generator")?;
            (GeneratorKind::Equicorrelated(c), c)
        }
        GeneratorArg::CurieWeiss => {
            let beta = a
                .beta
                .context("--beta is required for the Curie-Weiss generator")?;
            (GeneratorKind::CurieWeiss(beta), limiting_c(beta))
        }
    };
    if a.range.len() != 2 {
        bail!("--range takes exactly two values, lo,hi");
    }
    let g = GeneratorSpec::new(kind, a.seed)?;
    let cfg = EnsembleConfig {
        max_k: a.k,
        bins: a.bins,
        range: (a.range[0], a.range[1]),
        ..EnsembleConfig::new(a.n, g, a.realizations)
    };
    let stats = run_ensemble(&cfg)?;

    let header = Header::new("simulate")
        .with("generator", kind)
        .with("limit_c", c)
        .with("n", a.n)
        .with("realizations", a.realizations)
        .with("k", a.k)
        .with("theory_k", a.theory_k)
        .with("samples", a.samples)
        .with("seed", a.seed)
        .with("bins", a.bins)
        .with("range", join(&a.range))
        .comment();

    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let mut hist = header.clone().into_bytes();
    stats.histogram.write_csv(&mut hist)?;
    fs::write(a.out.join("histogram.csv"), hist)?;

    let mut volumes = VolumeCache::new();
    let mut s = header;
    s.push_str("k,empirical,SE,theoretical,theory_SE,z_score\n");
    for m in &stats.moments {
        if m.k <= a.theory_k {
            let t = nu_c_moment(
                m.k,
                c,
                &mut volumes,
                a.samples,
                a.seed,
                MomentForm::CatalanPlusCrossing,
            )?;
            let z = verify::z_score(m.mean, m.se, t.value, t.std_error);
            writeln!(
                s,
                "{},{},{},{},{},{}",
                m.k, m.mean, m.se, t.value, t.std_error, z
            )?;
        } else {
            writeln!(s, "{},{},{},,,", m.k, m.mean, m.se)?;
        }
    }
    fs::write(a.out.join("moments.csv"), s)?;
    Ok(())
}

fn cmd_oracle(k: usize, ns: &[usize], out: &OutArg) -> Result<()> {
    let mut runs = Vec::new();
    let mut star = Vec::new();
    for &n in ns {
        let counts = classify_tuples(n, k)?;
        let lemma = check_height_lemma(n, k)?;
        let ratios: serde_json::Map<_, _> = counts
            .partitions
            .iter()
            .map(|p| {
                let r = serde_json::json!({
                    "sn_star_ratio": counts.sn_star_ratio(&p.partition),
                    "excess_ratio": counts.excess_ratio(&p.partition),
                });
                (p.partition.to_string(), r)
            })
            .collect();
        star.push((n, counts.partitions.clone()));
        runs.push(serde_json::json!({ "n": n, "counts": counts, "ratios": ratios, "height_lemma": lemma }));
    }
    // Richardson-style limit estimate from the two largest n.
    let mut extrapolated = serde_json::Map::new();
    if star.len() >= 2 {
        let (n1, a) = &star[star.len() - 2];
        let (n2, b) = &star[star.len() - 1];
        let scale = |n: usize| (n as f64).powi(k as i32 / 2 + 1);
        for (pa, pb) in a.iter().zip(b) {
            let r = extrapolate_ratio(
                (*n1, pa.sn_star as f64 / scale(*n1)),
                (*n2, pb.sn_star as f64 / scale(*n2)),
            );
            let v = toeplitz_volume(&pa.partition, ORACLE_VOLUME_SAMPLES, ORACLE_VOLUME_SEED)?;
            extrapolated.insert(
                pa.partition.to_string(),
                serde_json::json!({ "extrapolated_ratio": r, "toeplitz_volume": v.value }),
            );
        }
    }
    let report = serde_json::json!({
        "config": Header::new("oracle")
            .with("k", k)
            .with("n", join(ns))
            .with("volume_samples", ORACLE_VOLUME_SAMPLES)
            .with("volume_seed", ORACLE_VOLUME_SEED)
            .json(),
        "runs": runs,
        "extrapolation": extrapolated,
    });
    let mut buf = serde_json::to_vec_pretty(&report)?;
    buf.push(b'\n');
    emit(&out.out, &buf)
}

fn cmd_verify(a: &VerifyArgs) -> Result<bool> {
    let tolerances = match &a.tolerances {
        Some(path) => {
            let text =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str::<Tolerances>(&text)
                .with_context(|| format!("parsing {}", path.display()))?
        }
        None => Tolerances::default(),
    };
    let cfg = VerifyConfig {
        seed: a.seed,
        volume_samples: a.samples,
        ensemble_n: a.n,
        realizations: a.realizations,
        criteria: if a.criteria.is_empty() {
            (1..=9).collect()
        } else {
            a.criteria.clone()
        },
        tolerances,
        ..VerifyConfig::default()
    };
    let outcome = verify::run(&cfg)?;
    let header = Header::new("verify")
        .with("criteria", join(&cfg.criteria))
        .with("seed", cfg.seed)
        .with("samples", cfg.volume_samples)
        .with("n", cfg.ensemble_n)
        .with("realizations", cfg.realizations)
        .with("tolerances", serde_json::to_string(&cfg.tolerances)?);

    let mut text = String::new();
    for c in &outcome.criteria {
        writeln!(text, "{}", c.summary_line())?;
        for ch in c.checks.iter().filter(|ch| !ch.passed) {
            writeln!(text, "  failed: {}: {}", ch.label, ch.detail)?;
        }
    }
    print!("{text}");

    if let Some(dir) = &a.out {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let report = serde_json::json!({
            "config": header.json(),
            "full_config": cfg,
            "passed": outcome.passed(),
            "criteria": outcome.criteria,
        });
        let mut buf = serde_json::to_vec_pretty(&report)?;
        buf.push(b'\n');
        fs::write(dir.join("report.json"), buf)?;
        for (label, h) in &outcome.histograms {
            let mut buf = header
                .clone()
                .with("histogram", label)
                .comment()
                .into_bytes();
            h.write_csv(&mut buf)?;
            fs::write(dir.join(format!("histogram_{label}.csv")), buf)?;
        }
    }
    Ok(outcome.passed())
}

fn run(cli: Cli) -> Result<bool> {
    match &cli.command {
        Command::Partitions { k, out } => cmd_partitions(*k, out)?,
        Command::Volume {
            k,
            samples,
            seed,
            out,
        } => cmd_volume(*k, *samples, *seed, out)?,
        Command::Moments {
            k,
            c,
            cache,
            samples,
            seed,
            form,
            out,
        } => cmd_moments(*k, c, cache, *samples, *seed, (*form).into(), out)?,
        Command::CurieWeiss { beta, n, out } => cmd_curie_weiss(beta, n, out)?,
        Command::Simulate(a) => cmd_simulate(a)?,
        Command::Oracle { k, n, out } => cmd_oracle(*k, n, out)?,
        Command::Verify(a) => return cmd_verify(a),
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
