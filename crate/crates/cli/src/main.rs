use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use imgent_core::analysis::{self, POOLING_NOTE};
use imgent_core::entanglement::{self, Caps, DEFAULT_DENSE_PIXELS, DEFAULT_GRAM_DIM};
use imgent_core::lattice::parse_hex_word;
use imgent_core::tasks;
use imgent_core::{
    read_task, write_task, Bipartition, CutFamily, CutSpec, EntropyBase, EntropyOptions, ImageState,
    LatticeGeometry, SpectrumPath, TaskSpec,
};

const EXIT_PROPERTY_FAILURE: u8 = 1;
const EXIT_INVALID: u8 = 2;

/// Entanglement entropy of binary-image classification tasks.
#[derive(Parser)]
#[command(name = "imgent", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a task file.
    Gen(GenArgs),
    /// Entanglement entropy across one cut, as JSON on stdout.
    Entropy(EntropyArgs),
    /// Entropy over a family of cuts: CSV table plus a `.fit.json` sidecar.
    Scan(ScanArgs),
    /// Locality assumptions and entanglement range for one cut.
    Range(RangeArgs),
    /// Run the property suite over a sample of cuts; exit 1 on any failure.
    Verify(VerifyArgs),
    /// CNN channels per layer needed for a given area-law coefficient.
    Capacity(CapacityArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum GenTask {
    Loops,
    Parity,
    Random,
    Single,
    Product,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    task: GenTask,
    /// Loop lattice size.
    #[arg(long)]
    k: Option<usize>,
    /// Periodic boundary (torus for loops, wrapped lattice otherwise).
    #[arg(long)]
    periodic: bool,
    #[arg(long)]
    lx: Option<usize>,
    #[arg(long)]
    ly: Option<usize>,
    /// Number of label-1 images for `random`.
    #[arg(long)]
    count: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Image word (hex) for `single`.
    #[arg(long)]
    image: Option<String>,
    /// Odd instead of even popcount for `parity`.
    #[arg(long)]
    odd: bool,
    /// Largest number of free pixels for `product`.
    #[arg(long, default_value_t = 10)]
    max_free: usize,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CapArgs {
    /// Largest side (pixels) the dense path will materialize.
    #[arg(long, default_value_t = DEFAULT_DENSE_PIXELS)]
    dense_cap: usize,
    /// Largest Gram block the sparse path will diagonalize.
    #[arg(long, default_value_t = DEFAULT_GRAM_DIM)]
    gram_cap: usize,
}

impl CapArgs {
    fn options(&self, force: Option<SpectrumPath>) -> EntropyOptions {
        EntropyOptions {
            caps: Caps {
                dense_pixels: self.dense_cap,
                gram_dim: self.gram_cap,
            },
            force,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum PathChoice {
    Dense,
    Sparse,
}

#[derive(Args)]
struct EntropyArgs {
    #[arg(long)]
    task: PathBuf,
    /// `cols<K`, `rows<K` or `mask:<hex>`.
    #[arg(long)]
    cut: String,
    /// Report nats instead of bits.
    #[arg(long)]
    nats: bool,
    /// Force a spectrum path.
    #[arg(long, value_enum)]
    path: Option<PathChoice>,
    #[command(flatten)]
    caps: CapArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyChoice {
    Vertical,
    Horizontal,
    Random,
}

#[derive(Args)]
struct ScanArgs {
    #[arg(long)]
    task: PathBuf,
    #[arg(long, value_enum)]
    cuts: FamilyChoice,
    /// Number of cuts for the random family.
    #[arg(long, default_value_t = 20)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// CSV output path; the sidecar goes next to it as `<stem>.fit.json`.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    caps: CapArgs,
}

#[derive(Args)]
struct RangeArgs {
    #[arg(long)]
    task: PathBuf,
    #[arg(long)]
    cut: String,
    #[arg(long, default_value_t = 3)]
    max_r: usize,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    task: PathBuf,
    /// Random cuts added to the column and row cuts.
    #[arg(long, default_value_t = 20)]
    random_cuts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    caps: CapArgs,
}

#[derive(Args)]
struct CapacityArgs {
    /// Area-law coefficient in bits per boundary pixel.
    #[arg(long)]
    r: f64,
    /// Comma-separated convolution-layer counts.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    nc: Vec<u32>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_INVALID)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Entropy(a) => cmd_entropy(a),
        Command::Scan(a) => cmd_scan(a),
        Command::Range(a) => cmd_range(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Capacity(a) => cmd_capacity(a),
    }
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn load(path: &Path) -> Result<TaskSpec> {
    read_task(path).with_context(|| format!("loading task {}", path.display()))
}

fn parse_cut(task: &TaskSpec, cut: &str) -> Result<Bipartition> {
    let spec: CutSpec = cut.parse()?;
    Ok(spec.bipartition(&task.geom)?)
}

fn lattice(a: &GenArgs) -> Result<LatticeGeometry> {
    match (a.lx, a.ly) {
        (Some(lx), Some(ly)) => Ok(LatticeGeometry::new(lx, ly, a.periodic)?),
        _ => bail!("--lx and --ly are required for this task"),
    }
}

fn cmd_gen(a: GenArgs) -> Result<ExitCode> {
    let task = match a.task {
        GenTask::Loops => {
            let k = a.k.context("--k is required for loops")?;
            tasks::gen_closed_loops(k, a.periodic)?
        }
        GenTask::Parity => tasks::gen_parity(&lattice(&a)?, !a.odd)?,
        GenTask::Random => {
            let count = a.count.context("--count is required for random")?;
            tasks::gen_random_set(&lattice(&a)?, count, a.seed)?
        }
        GenTask::Single => {
            let word = a.image.as_deref().context("--image is required for single")?;
            let bits = parse_hex_word(word).with_context(|| format!("bad image word {word:?}"))?;
            tasks::gen_single(&lattice(&a)?, ImageState(bits))?
        }
        GenTask::Product => tasks::gen_product_set(&lattice(&a)?, a.max_free, a.seed)?,
    };
    match &a.out {
        Some(path) => write_task(&task, path)?,
        None => print!("{}", imgent_core::task_to_json(&task)),
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_entropy(a: EntropyArgs) -> Result<ExitCode> {
    let task = load(&a.task)?;
    let part = parse_cut(&task, &a.cut)?;
    let f = task.target_function()?;
    let force = a.path.map(|p| match p {
        PathChoice::Dense => SpectrumPath::Dense,
        PathChoice::Sparse => SpectrumPath::Sparse,
    });
    let mut report = imgent_core::entanglement_entropy_with(&f, &part, &a.caps.options(force))?;
    report.cut.label = a.cut.clone();
    let base = if a.nats { EntropyBase::Nats } else { EntropyBase::Bits };
    print_json(&report.to_json(base))?;
    Ok(ExitCode::SUCCESS)
}

fn sidecar_path(csv: &Path) -> PathBuf {
    let stem = csv.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    csv.with_file_name(format!("{stem}.fit.json"))
}

#[derive(Serialize)]
struct ScanSidecar<'a> {
    task: &'a str,
    family: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(flatten)]
    summary: analysis::ScanSummary<'a>,
}

fn cmd_scan(a: ScanArgs) -> Result<ExitCode> {
    let task = load(&a.task)?;
    let (family, name, seed) = match a.cuts {
        FamilyChoice::Vertical => (CutFamily::Vertical, "vertical", None),
        FamilyChoice::Horizontal => (CutFamily::Horizontal, "horizontal", None),
        FamilyChoice::Random => (
            CutFamily::SeededRandom {
                count: a.count,
                seed: a.seed,
            },
            "random",
            Some(a.seed),
        ),
    };
    let result = analysis::scan_cuts_with(&task, family, &a.caps.options(None))?;
    std::fs::write(&a.out, result.to_csv()).with_context(|| format!("writing {}", a.out.display()))?;
    let sidecar = ScanSidecar {
        task: &task.name,
        family: name,
        seed,
        summary: result.summary(),
    };
    let mut text = serde_json::to_string_pretty(&sidecar)?;
    text.push('\n');
    let side = sidecar_path(&a.out);
    std::fs::write(&side, &text).with_context(|| format!("writing {}", side.display()))?;
    print!("{text}");
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct RangeOutput<'a> {
    cut: &'a str,
    #[serde(flatten)]
    estimate: analysis::RangeEstimate,
}

fn cmd_range(a: RangeArgs) -> Result<ExitCode> {
    let task = load(&a.task)?;
    let part = parse_cut(&task, &a.cut)?;
    let estimate = analysis::estimate_range(&task, &part, a.max_r)?;
    print_json(&RangeOutput { cut: &a.cut, estimate })?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct CapacityOutput {
    r_bits: f64,
    convention: &'static str,
    rows: Vec<analysis::ChannelRequirement>,
    note: &'static str,
}

fn cmd_capacity(a: CapacityArgs) -> Result<ExitCode> {
    let rows = a
        .nc
        .iter()
        .map(|&nc| analysis::cnn_channel_requirement(a.r, nc))
        .collect::<imgent_core::Result<Vec<_>>>()?;
    print_json(&CapacityOutput {
        r_bits: a.r,
        convention: "S/L_AB = n_c * log2(D), unit constant, bits",
        rows,
        note: POOLING_NOTE,
    })?;
    Ok(ExitCode::SUCCESS)
}

// ---------------------------------------------------------------------------
// verify

const TOL: f64 = 1e-9;

#[derive(Serialize)]
struct CheckOutcome {
    name: &'static str,
    checked: usize,
    skipped: usize,
    failures: Vec<String>,
    pass: bool,
}

impl CheckOutcome {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            checked: 0,
            skipped: 0,
            failures: Vec::new(),
            pass: true,
        }
    }

    fn record(&mut self, ok: bool, cut: &str, detail: impl FnOnce() -> String) {
        self.checked += 1;
        if !ok {
            self.pass = false;
            self.failures.push(format!("{cut}: {}", detail()));
        }
    }
}

#[derive(Serialize)]
struct VerifyReport {
    task: String,
    n_pixels: usize,
    n_label1: usize,
    cuts: usize,
    max_entropy_bits: f64,
    checks: Vec<CheckOutcome>,
    /// Informational: cuts on which images agreeing on B also agree on the boundary.
    assumption1_holds: usize,
    assumption1_fails: usize,
    pass: bool,
}

fn verify_cuts(task: &TaskSpec, random: usize, seed: u64) -> Vec<(String, Bipartition)> {
    let g = &task.geom;
    let mut masks: Vec<(String, imgent_core::PixelSet)> = Vec::new();
    for k in 1..g.lx() {
        masks.push((format!("cols<{k}"), g.columns_below(k)));
    }
    for k in 1..g.ly() {
        masks.push((format!("rows<{k}"), g.rows_below(k)));
    }
    for m in analysis::random_masks(g.n_pixels(), random, seed) {
        masks.push((format!("mask:{:x}", m.0), m));
    }
    let mut seen = std::collections::HashSet::new();
    masks
        .into_iter()
        .filter(|(_, m)| seen.insert(*m))
        .filter_map(|(label, m)| Bipartition::new(g, m).ok().map(|p| (label, p)))
        .collect()
}

fn cmd_verify(a: VerifyArgs) -> Result<ExitCode> {
    let task = load(&a.task)?;
    let f = task.target_function()?;
    let caps = a.caps.options(None).caps;
    let cuts = verify_cuts(&task, a.random_cuts, a.seed);

    let mut symmetry = CheckOutcome::new("symmetry");
    let mut trace = CheckOutcome::new("trace");
    let mut psd = CheckOutcome::new("positive-semidefinite");
    let mut rank = CheckOutcome::new("rank-bound");
    let mut volume = CheckOutcome::new("volume-bound");
    let mut agree = CheckOutcome::new("dense-sparse-agreement");
    let (mut a1_ok, mut a1_bad) = (0, 0);
    let mut max_entropy = 0.0f64;

    for (label, part) in &cuts {
        let sym = entanglement::check_property1_capped(&f, part, caps.gram_dim)?;
        symmetry.record(sym.pass, label, || format!("|S_A - S_B| = {:.3e}", sym.diff_bits));

        let sparse = imgent_core::entanglement_entropy_with(
            &f,
            part,
            &EntropyOptions {
                caps,
                force: Some(SpectrumPath::Sparse),
            },
        )?;
        let s = sparse.entropy_bits;
        max_entropy = max_entropy.max(s);
        let rank_bound = (sparse.rank() as f64).log2();
        rank.record(s <= rank_bound + TOL, label, || format!("S = {s} > log2 rank = {rank_bound}"));
        let vol = part.n_a().min(part.n_b()) as f64;
        volume.record(s <= vol + TOL, label, || format!("S = {s} > {vol}"));

        // dense checks on the smaller side
        let side = if part.n_a() <= part.n_b() { part.clone() } else { part.swapped() };
        if side.n_a() > caps.dense_pixels {
            for c in [&mut trace, &mut psd, &mut agree] {
                c.skipped += 1;
            }
        } else {
            let rho = entanglement::reduced_density_matrix_capped(&f, &side, caps.dense_pixels)?;
            let tr = rho.trace();
            trace.record((tr - 1.0).abs() <= TOL, label, || format!("trace = {tr}"));
            let min_ev = rho.eigenvalues().last().copied().unwrap_or(0.0);
            psd.record(min_ev >= -TOL, label, || format!("smallest eigenvalue {min_ev:.3e}"));
            let dense = imgent_core::entanglement_entropy_with(
                &f,
                part,
                &EntropyOptions {
                    caps,
                    force: Some(SpectrumPath::Dense),
                },
            )?;
            let diff = (dense.entropy_bits - s).abs();
            agree.record(diff <= TOL && dense.rank() == sparse.rank(), label, || {
                format!("dense {} / sparse {s}, ranks {} / {}", dense.entropy_bits, dense.rank(), sparse.rank())
            });
        }

        if analysis::check_assumption1(&task, part).pass {
            a1_ok += 1;
        } else {
            a1_bad += 1;
        }
    }

    let checks = vec![symmetry, trace, psd, rank, volume, agree];
    let pass = checks.iter().all(|c| c.pass);
    print_json(&VerifyReport {
        task: task.name.clone(),
        n_pixels: task.geom.n_pixels(),
        n_label1: task.label1().len(),
        cuts: cuts.len(),
        max_entropy_bits: max_entropy,
        checks,
        assumption1_holds: a1_ok,
        assumption1_fails: a1_bad,
        pass,
    })?;
    Ok(if pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_PROPERTY_FAILURE)
    })
}
