use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use magicdecay::bounds::{self, Family, SweepOptions};
use magicdecay::certificates::{verify_certificates, WitnessTable};
use magicdecay::hypergraph::{four_qubit_scan_classes, EdgeList};
use magicdecay::lp::LpOptions;
use magicdecay::rom::{self, DiagonalGate, RomSolver};
use magicdecay::stabilizer::{self, StabilizerBasis};
use magicdecay::wigner::{self, QuditHypergraph};
use magicdecay::{Error, Hypergraph, NoiseModel, PauliVector, Result};

/// Phase-point count above which `wigner` needs `--heavy` (d=3, n=8).
const WIGNER_HEAVY_POINTS: usize = 4_782_969;

#[derive(Parser, Debug)]
#[command(name = "magicdecay", version, about = "Robustness of magic for noisy hypergraph states")]
struct Cli {
    /// Worker threads (defaults to the number of logical cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Directory holding cached stabilizer bases; overrides MAGICDECAY_CACHE.
    #[arg(long, global = true, value_name = "DIR")]
    basis_cache: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,

    /// Write the result here instead of standard output.
    #[arg(long, short, global = true, value_name = "PATH")]
    output: Option<PathBuf>,

    /// Allow the slow modes: five-qubit bases, four-qubit capacities and
    /// Wigner tables beyond d=3, n=7.
    #[arg(long, global = true)]
    heavy: bool,

    #[arg(long, short, global = true)]
    verbose: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(clap::Args, Debug, Clone)]
struct StateArgs {
    /// Built-in state: plus, ccz, cnz:N, 3complete:N, 4complete:N, unionjack.
    #[arg(long, conflicts_with = "file")]
    state: Option<String>,

    /// Hypergraph text file (`n=<int> d=2` header, one edge per line).
    #[arg(long)]
    file: Option<PathBuf>,

    /// Qubit count for states that need one (`plus`).
    #[arg(short = 'n')]
    n: Option<usize>,

    /// Keep only these 1-based qubits (e.g. `1,2,3,4`).
    #[arg(long, value_delimiter = ',')]
    keep: Option<Vec<usize>>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Exact robustness of magic by linear programming.
    Rom {
        #[command(flatten)]
        state: StateArgs,
        /// Noise applied to every qubit: dep:λ, deph:λ or repl:λ:x,y,z.
        #[arg(long)]
        noise: Option<String>,
    },
    /// Smallest noise rate at which the robustness drops to 1+ε.
    Threshold {
        #[command(flatten)]
        state: StateArgs,
        #[arg(long, default_value_t = 0.0)]
        eps: f64,
        #[arg(long, default_value_t = 1e-4)]
        tol: f64,
        /// Noise family: dep, deph or repl:x,y,z.
        #[arg(long, default_value = "dep")]
        noise: String,
        /// Run over every 4-qubit hypergraph class with edges of degree ≥ 3.
        #[arg(long)]
        scan4: bool,
    },
    /// Lower and upper bounds (and exact values for n ≤ 4) over a noise grid.
    Sweep {
        /// ccz, cnz:N, 3complete:N or 4complete:N.
        #[arg(long, conflicts_with = "file")]
        family: Option<String>,
        #[arg(long)]
        file: Option<PathBuf>,
        /// start:stop:points or a comma list.
        #[arg(long, default_value = "0:1:11")]
        lambdas: String,
        /// Skip the exact LP column.
        #[arg(long)]
        no_exact: bool,
        /// Largest marginal solved by LP inside the convexity bound.
        #[arg(long, default_value_t = 4)]
        max_lp_qubits: usize,
    },
    /// Wigner negativity of qudit hypergraph states.
    Wigner {
        #[arg(long, default_value_t = 3)]
        d: u32,
        /// Use the C^{n-1}Z state.
        #[arg(long, conflicts_with = "file")]
        cnz: bool,
        /// Multiplicity of the C^{n-1}Z edge.
        #[arg(long, default_value_t = 1)]
        alpha: u32,
        /// Qudit count or range `a..b` (inclusive).
        #[arg(short = 'n', long = "n", default_value = "3")]
        n: String,
        /// Qudit hypergraph text file (`n=<int> d=<odd prime>` header).
        #[arg(long)]
        file: Option<PathBuf>,
        /// start:stop:points or a comma list.
        #[arg(long, default_value = "0")]
        lambdas: String,
        /// Largest single-qudit robustness, used for the analytic upper bound.
        #[arg(long)]
        m_d: Option<f64>,
    },
    /// Enumerate the pure stabilizer states and write a basis file.
    Enumerate {
        #[arg(short = 'n')]
        n: usize,
        /// Basis file to write (defaults to the cache directory).
        #[arg(long)]
        basis_file: Option<PathBuf>,
        /// Only count the states.
        #[arg(long)]
        count_only: bool,
    },
    /// Magic capacity of a diagonal gate, optionally followed by noise.
    Capacity {
        /// ccz, cnz:N or a hypergraph file describing the phases.
        #[arg(long, default_value = "ccz")]
        gate: String,
        /// Noise applied after the gate, e.g. deph:0.6.
        #[arg(long)]
        noise: Option<String>,
        /// Find where the dephased capacity reaches 1+ε.
        #[arg(long)]
        dephasing_scan: bool,
        /// Find where the capacity under this noise family reaches 1+ε.
        #[arg(long, conflicts_with = "dephasing_scan")]
        scan: Option<String>,
        #[arg(long, default_value_t = 0.0)]
        eps: f64,
        #[arg(long, default_value_t = 1e-3)]
        tol: f64,
    },
    /// Check the shipped CCZ dual witnesses against the LP.
    VerifyCertificates {
        /// Witness table CSV (defaults to the built-in table).
        #[arg(long)]
        table: Option<PathBuf>,
        #[arg(long, default_value_t = 21)]
        points: usize,
        #[arg(long, default_value_t = 5e-4)]
        tol: f64,
    },
}

#[derive(Serialize)]
struct Provenance {
    tool: String,
    command: String,
    formulas: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    basis_sha256: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lp_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lp_max_iter: Option<usize>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    settings: Vec<(String, String)>,
}

impl Provenance {
    fn new(command: &str) -> Self {
        Provenance {
            tool: format!("magicdecay {}", env!("CARGO_PKG_VERSION")),
            command: command.into(),
            formulas: Vec::new(),
            basis_sha256: None,
            lp_tol: None,
            lp_max_iter: None,
            settings: Vec::new(),
        }
    }

    fn formula(mut self, f: &str) -> Self {
        self.formulas.push(f.into());
        self
    }

    fn setting(mut self, k: &str, v: impl ToString) -> Self {
        self.settings.push((k.into(), v.to_string()));
        self
    }

    fn lp(mut self, basis: &StabilizerBasis) -> Self {
        let o = LpOptions::default();
        self.basis_sha256 = Some(basis.checksum());
        self.lp_tol = Some(o.tol);
        self.lp_max_iter = Some(o.max_iter);
        self
    }

    fn comment_lines(&self) -> Vec<String> {
        let mut out = vec![format!("# tool: {}", self.tool), format!("# command: {}", self.command)];
        out.extend(self.formulas.iter().map(|f| format!("# formula: {f}")));
        if let Some(c) = &self.basis_sha256 {
            out.push(format!("# basis_sha256: {c}"));
        }
        if let (Some(t), Some(m)) = (self.lp_tol, self.lp_max_iter) {
            out.push(format!("# lp_tol: {t:e}"));
            out.push(format!("# lp_max_iter: {m}"));
        }
        out.extend(self.settings.iter().map(|(k, v)| format!("# {k}: {v}")));
        out
    }
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    provenance: &'a Provenance,
    result: T,
}

struct Sink {
    format: Format,
    path: Option<PathBuf>,
}

impl Sink {
    fn writer(&self) -> Result<Box<dyn Write>> {
        Ok(match &self.path {
            Some(p) => Box::new(std::io::BufWriter::new(std::fs::File::create(p)?)),
            None => Box::new(std::io::stdout().lock()),
        })
    }

    /// Emits a table: JSON as an array of row objects, CSV with provenance
    /// comment lines ahead of the header.
    fn table<T: Serialize>(&self, prov: &Provenance, rows: &[T]) -> Result<()> {
        let mut w = self.writer()?;
        match self.format {
            Format::Json => write_json(&mut w, prov, rows)?,
            Format::Csv => {
                for line in prov.comment_lines() {
                    writeln!(w, "{line}")?;
                }
                let mut out = csv::Writer::from_writer(&mut w);
                for r in rows {
                    out.serialize(r).map_err(csv_error)?;
                }
                out.flush()?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

fn write_json<T: Serialize>(w: &mut dyn Write, prov: &Provenance, result: T) -> Result<()> {
    serde_json::to_writer_pretty(&mut *w, &Envelope { provenance: prov, result }).map_err(|e| {
        match e.io_error_kind() {
            Some(kind) => Error::Io(kind.into()),
            None => Error::Format(e.to_string()),
        }
    })?;
    writeln!(w)?;
    Ok(())
}

fn csv_error(e: csv::Error) -> Error {
    match e.kind() {
        csv::ErrorKind::Io(io) => Error::Io(io.kind().into()),
        _ => Error::Format(e.to_string()),
    }
}

fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let bad = || Error::Input(format!("bad λ grid `{text}`; use start:stop:points or a comma list"));
    let grid: Vec<f64> = if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        if parts.len() != 3 {
            return Err(bad());
        }
        let a: f64 = parts[0].trim().parse().map_err(|_| bad())?;
        let b: f64 = parts[1].trim().parse().map_err(|_| bad())?;
        let k: usize = parts[2].trim().parse().map_err(|_| bad())?;
        if k < 2 {
            return Err(Error::Input("a λ grid needs at least 2 points".into()));
        }
        (0..k)
            .map(|i| {
                let v = a + (b - a) * i as f64 / (k - 1) as f64;
                (v * 1e12).round() / 1e12
            })
            .collect()
    } else {
        text.split(',')
            .map(|t| t.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<Result<_>>()?
    };
    if let Some(l) = grid.iter().find(|l| !(0.0..=1.0).contains(*l)) {
        return Err(Error::Input(format!("λ = {l} outside [0, 1]")));
    }
    Ok(grid)
}

fn parse_range(text: &str) -> Result<Vec<usize>> {
    let bad = || Error::Input(format!("bad qudit count `{text}`"));
    match text.split_once("..") {
        Some((a, b)) => {
            let a: usize = a.parse().map_err(|_| bad())?;
            let b: usize = b.trim_start_matches('=').parse().map_err(|_| bad())?;
            if a > b {
                return Err(bad());
            }
            Ok((a..=b).collect())
        }
        None => Ok(vec![text.parse().map_err(|_| bad())?]),
    }
}

/// Noise family from `dep`, `deph` or `repl:x,y,z` (rate filled in later).
fn noise_family(text: &str) -> Result<NoiseModel> {
    match text.split_once(':') {
        Some((kind, rest)) => NoiseModel::parse(&format!("{kind}:0:{rest}")),
        None => NoiseModel::parse(&format!("{text}:0")),
    }
}

fn load_state(args: &StateArgs) -> Result<(String, PauliVector, Option<Hypergraph>)> {
    let (label, h) = match (&args.state, &args.file) {
        (Some(name), None) => (name.clone(), Hypergraph::named(name, args.n)?),
        (None, Some(path)) => (
            path.display().to_string(),
            Hypergraph::from_text(&std::fs::read_to_string(path)?)?,
        ),
        _ => return Err(Error::Input("give exactly one of --state or --file".into())),
    };
    match &args.keep {
        Some(keep) => {
            let rho = h.reduced_density(keep)?;
            let label = format!(
                "{label}[{}]",
                keep.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
            );
            Ok((label, rho, None))
        }
        None => {
            if h.n() > 5 {
                return Err(Error::Capacity(format!(
                    "{label} has {} qubits; use --keep to select at most 5",
                    h.n()
                )));
            }
            Ok((label, h.pauli_vector()?, Some(h)))
        }
    }
}

fn basis_for(n: usize, heavy: bool) -> Result<StabilizerBasis> {
    if n <= 4 {
        return Ok(stabilizer::shared_basis(n)?.clone());
    }
    if !heavy {
        return Err(Error::Capacity(format!(
            "the {n}-qubit basis holds {} states; pass --heavy to use it",
            stabilizer::stabilizer_count(n)
        )));
    }
    let dir = stabilizer::env_cache_dir().ok_or_else(|| {
        Error::Input("the 5-qubit basis is read from the cache; set --basis-cache and run `enumerate -n 5 --heavy`".into())
    })?;
    StabilizerBasis::load(&stabilizer::cache_file(&dir, n))
}

#[derive(Serialize)]
struct RomRow {
    state: String,
    n: usize,
    noise: String,
    rom: f64,
    lower_bound: f64,
    gap: f64,
    support: usize,
    negative_mass: f64,
    residual: f64,
    iterations: usize,
}

#[derive(Serialize)]
struct RomJson {
    #[serde(flatten)]
    row: RomRow,
    decomposition: Vec<(usize, f64)>,
}

fn cmd_rom(cli: &Cli, sink: &Sink, state: &StateArgs, noise: Option<&str>) -> Result<()> {
    let (label, mut rho, _) = load_state(state)?;
    let noise = noise.map(NoiseModel::parse).transpose()?;
    if let Some(nm) = &noise {
        rho = rho.apply_noise(nm)?;
    }
    let basis = basis_for(rho.n(), cli.heavy)?;
    let r = RomSolver::new(&basis).rom(&rho)?;
    let row = RomRow {
        state: label,
        n: rho.n(),
        noise: noise.as_ref().map_or("none".into(), |m| format!("{}:{}", m.kind(), m.lambda())),
        rom: r.value,
        lower_bound: r.lower_bound,
        gap: r.gap(),
        support: r.decomposition.len(),
        negative_mass: r.negative_mass(),
        residual: r.residual,
        iterations: r.iterations,
    };
    let prov = Provenance::new("rom")
        .formula("min ||x||_1 s.t. Σ x_i σ_i = ρ over pure stabilizer states")
        .lp(&basis);
    if sink.format == Format::Json {
        let mut w = sink.writer()?;
        write_json(
            &mut w,
            &prov,
            RomJson {
                row,
                decomposition: r.decomposition,
            },
        )?;
        return Ok(());
    }
    sink.table(&prov, &[row])
}

#[derive(Serialize)]
struct ThresholdRow {
    state: String,
    n: usize,
    noise: String,
    epsilon: f64,
    lambda_star: f64,
    bracket_lo: f64,
    bracket_hi: f64,
    evaluations: usize,
    fallback: bool,
}

fn threshold_row(
    label: String,
    rho: &PauliVector,
    noise: &NoiseModel,
    eps: f64,
    tol: f64,
    heavy: bool,
) -> Result<(ThresholdRow, StabilizerBasis)> {
    let basis = basis_for(rho.n(), heavy)?;
    let t = rom::threshold(&RomSolver::new(&basis), rho, noise, eps, tol)?;
    Ok((
        ThresholdRow {
            state: label,
            n: rho.n(),
            noise: noise.kind().into(),
            epsilon: eps,
            lambda_star: t.lambda_star,
            bracket_lo: t.bracket.0,
            bracket_hi: t.bracket.1,
            evaluations: t.evaluations,
            fallback: t.fallback,
        },
        basis,
    ))
}

fn cmd_threshold(
    cli: &Cli,
    sink: &Sink,
    state: &StateArgs,
    eps: f64,
    tol: f64,
    noise: &str,
    scan4: bool,
) -> Result<()> {
    let family = noise_family(noise)?;
    let prov = Provenance::new("threshold")
        .formula("bisection on λ for R(E_λ(ρ)) <= 1+ε")
        .setting("epsilon", eps)
        .setting("tolerance", tol);
    let mut rows = Vec::new();
    let basis = if scan4 {
        for h in four_qubit_scan_classes() {
            let (row, _) = threshold_row(h.to_string(), &h.pauli_vector()?, &family, eps, tol, cli.heavy)?;
            rows.push(row);
        }
        stabilizer::shared_basis(4)?.clone()
    } else {
        let (label, rho, _) = load_state(state)?;
        let (row, basis) = threshold_row(label, &rho, &family, eps, tol, cli.heavy)?;
        rows.push(row);
        basis
    };
    sink.table(&prov.lp(&basis), &rows)
}

fn cmd_sweep(
    sink: &Sink,
    family: Option<&str>,
    file: Option<&Path>,
    lambdas: &str,
    no_exact: bool,
    max_lp_qubits: usize,
) -> Result<()> {
    let family = match (family, file) {
        (Some(f), None) => Family::parse(f)?,
        (None, Some(p)) => Family::Custom(Hypergraph::from_text(&std::fs::read_to_string(p)?)?),
        _ => return Err(Error::Input("give exactly one of --family or --file".into())),
    };
    let grid = parse_grid(lambdas)?;
    let profile = bounds::sweep(
        &family,
        &grid,
        &SweepOptions {
            exact: !no_exact,
            max_lp_qubits,
        },
    )?;
    let mut w = sink.writer()?;
    match sink.format {
        Format::Csv => profile.write_csv(&mut w)?,
        Format::Json => {
            let mut prov = Provenance::new("sweep");
            for c in &profile.columns {
                prov = prov.formula(&format!("{}: {}", c.name, c.provenance));
            }
            if profile.n <= 4 && !no_exact {
                prov = prov.lp(stabilizer::shared_basis(profile.n)?);
            }
            write_json(&mut w, &prov, &profile)?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct WignerRow {
    state: String,
    n: usize,
    d: u32,
    lambda: f64,
    sn: f64,
    #[serde(rename = "1+2sn")]
    rom_lb: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    ub_qudit_cnz: Option<f64>,
}

#[allow(clippy::too_many_arguments)]
fn cmd_wigner(
    cli: &Cli,
    sink: &Sink,
    d: u32,
    cnz: bool,
    alpha: u32,
    n: &str,
    file: Option<&Path>,
    lambdas: &str,
    m_d: Option<f64>,
) -> Result<()> {
    let grid = parse_grid(lambdas)?;
    let states: Vec<(String, QuditHypergraph)> = match file {
        Some(p) => {
            let h = QuditHypergraph::from_text(&std::fs::read_to_string(p)?)?;
            vec![(p.display().to_string(), h)]
        }
        None => {
            if !cnz {
                return Err(Error::Input("give --cnz or --file".into()));
            }
            parse_range(n)?
                .into_iter()
                .map(|k| Ok((format!("cnz:{k}"), QuditHypergraph::cnz(k, d, alpha)?)))
                .collect::<Result<_>>()?
        }
    };
    let mut prov = Provenance::new("wigner")
        .formula("W(u) = d^-n Tr(A_u ρ); sn = Σ_{W<0} |W|; R >= 1+2sn")
        .formula("noise applied per qudit on the table: W -> (1-λ)W + λ/d² Σ_(z_i,x_i) W");
    if let Some(m) = m_d {
        prov = prov
            .formula("ub_qudit_cnz = 1 + 4 M_d (d-1)^n (1-(d-1)λ/d)^n")
            .setting("M_d", m);
    }
    let mut rows = Vec::new();
    for (label, h) in states {
        let sys = h.system()?;
        if sys.phase_points() > WIGNER_HEAVY_POINTS && !cli.heavy {
            return Err(Error::Capacity(format!(
                "{label} has {} phase points; pass --heavy",
                sys.phase_points()
            )));
        }
        let w = h.wigner()?;
        for &l in &grid {
            let sn = w.depolarize(l)?.sn();
            let is_cnz = h.edge_lists().len() == 1 && h.edge_lists()[0].0.len() == h.n();
            rows.push(WignerRow {
                state: label.clone(),
                n: h.n(),
                d: h.d(),
                lambda: l,
                sn,
                rom_lb: wigner::rom_lb_from_sn(sn)?,
                ub_qudit_cnz: m_d.filter(|_| is_cnz).map(|m| wigner::ub_qudit_cnz(h.n(), h.d(), l, m)),
            });
        }
    }
    sink.table(&prov, &rows)
}

#[derive(Serialize)]
struct EnumerateRow {
    n: usize,
    states: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    path: Option<String>,
}

fn cmd_enumerate(cli: &Cli, sink: &Sink, n: usize, out: Option<&Path>, count_only: bool) -> Result<()> {
    if n >= 5 && !cli.heavy {
        return Err(Error::Capacity(format!(
            "n={n} enumerates {} states; pass --heavy",
            stabilizer::stabilizer_count(n)
        )));
    }
    let prov = Provenance::new("enumerate")
        .formula("|K,q,b>: echelon subspace K, quadratic form q, offset b on the pivots");
    let row = if count_only {
        let states = if n <= 4 {
            StabilizerBasis::enumerate(n)?.len() as u64
        } else {
            stabilizer::count_distinct(n)?
        };
        EnumerateRow { n, states, path: None }
    } else {
        let path = match out {
            Some(p) => p.to_path_buf(),
            None => {
                let dir = stabilizer::env_cache_dir().unwrap_or_else(|| PathBuf::from("."));
                std::fs::create_dir_all(&dir)?;
                stabilizer::cache_file(&dir, n)
            }
        };
        let states = if n <= 4 {
            let b = StabilizerBasis::enumerate(n)?;
            b.save(&path)?;
            b.len() as u64
        } else {
            stabilizer::enumerate_to_file(n, &path)?
        };
        EnumerateRow {
            n,
            states,
            path: Some(path.display().to_string()),
        }
    };
    if sink.format == Format::Csv && sink.path.is_none() {
        eprintln!("{} states", row.states);
    }
    sink.table(&prov, &[row])
}

#[derive(Serialize)]
struct CapacityRow {
    gate: String,
    noise: String,
    capacity: f64,
    argmax: usize,
    distinct_outputs: usize,
}

#[derive(Serialize)]
struct CapacityScanRow {
    gate: String,
    noise: String,
    epsilon: f64,
    vanishing_point: f64,
    bracket_lo: f64,
    bracket_hi: f64,
    evaluations: usize,
}

#[allow(clippy::too_many_arguments)]
fn cmd_capacity(
    cli: &Cli,
    sink: &Sink,
    gate: &str,
    noise: Option<&str>,
    dephasing_scan: bool,
    scan: Option<&str>,
    eps: f64,
    tol: f64,
) -> Result<()> {
    let h = match gate {
        "ccz" => Hypergraph::ccz(),
        g if g.starts_with("cnz:") => Hypergraph::named(g, None)?,
        path => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Input(format!("gate `{path}` is neither built in nor readable: {e}")))?;
            let parsed = EdgeList::parse(&text)?;
            if parsed.d != 2 {
                return Err(Error::Input("capacity works on qubit gates".into()));
            }
            Hypergraph::from_text(&text)?
        }
    };
    if h.n() >= 4 && !cli.heavy {
        return Err(Error::Capacity(format!(
            "a {}-qubit capacity solves one LP per stabilizer input; pass --heavy",
            h.n()
        )));
    }
    let basis = basis_for(h.n(), cli.heavy)?;
    let solver = RomSolver::new(&basis);
    let g = DiagonalGate::from_hypergraph(h);
    let prov = Provenance::new("capacity")
        .formula("max over pure stabilizer σ of R(N(U σ U†))")
        .lp(&basis);
    let scan_family = if dephasing_scan {
        Some(NoiseModel::Dephasing(0.0))
    } else {
        scan.map(noise_family).transpose()?
    };
    if let Some(family) = scan_family {
        let t = rom::capacity_threshold(&solver, &g, &family, eps, tol)?;
        let row = CapacityScanRow {
            gate: gate.into(),
            noise: family.kind().into(),
            epsilon: eps,
            vanishing_point: t.lambda_star,
            bracket_lo: t.bracket.0,
            bracket_hi: t.bracket.1,
            evaluations: t.evaluations,
        };
        return sink.table(&prov.setting("tolerance", tol), &[row]);
    }
    let nm = noise.map(NoiseModel::parse).transpose()?;
    let c = rom::magic_capacity_diagonal(&solver, &g, nm.as_ref())?;
    let row = CapacityRow {
        gate: gate.into(),
        noise: nm.as_ref().map_or("none".into(), |m| format!("{}:{}", m.kind(), m.lambda())),
        capacity: c.value,
        argmax: c.argmax,
        distinct_outputs: c.distinct_outputs,
    };
    sink.table(&prov, &[row])
}

fn cmd_verify(sink: &Sink, table: Option<&Path>, points: usize, tol: f64) -> Result<()> {
    if points < 2 {
        return Err(Error::Input("need at least 2 grid points".into()));
    }
    let t = match table {
        Some(p) => WitnessTable::load(p)?,
        None => WitnessTable::builtin(),
    };
    let basis = stabilizer::shared_basis(3)?;
    let grid: Vec<f64> = (0..points).map(|i| i as f64 / (points - 1) as f64).collect();
    let report = verify_certificates(&t, &grid, &RomSolver::new(basis), tol)?;
    let prov = Provenance::new("verify-certificates")
        .formula("max_j Tr(E_λ(CCZ) A_j) against the LP value")
        .setting("tolerance", tol)
        .lp(basis);
    match sink.format {
        Format::Json => {
            let mut w = sink.writer()?;
            write_json(&mut w, &prov, &report)?;
        }
        Format::Csv => sink.table(&prov, &report.rows)?,
    }
    if !report.passed() {
        let bad_rows = report.rows.iter().filter(|r| !r.ok).count();
        let bad_feas = report.feasibility.iter().filter(|f| !f.ok).count();
        return Err(Error::Verification(format!(
            "{bad_rows} grid points outside tolerance, {bad_feas} infeasible witnesses"
        )));
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    if let Some(dir) = &cli.basis_cache {
        std::env::set_var("MAGICDECAY_CACHE", dir);
    }
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Error::Input(format!("thread pool: {e}")))?;
    }
    let sink = Sink {
        format: cli.format,
        path: cli.output.clone(),
    };
    match &cli.command {
        Command::Rom { state, noise } => cmd_rom(cli, &sink, state, noise.as_deref()),
        Command::Threshold {
            state,
            eps,
            tol,
            noise,
            scan4,
        } => cmd_threshold(cli, &sink, state, *eps, *tol, noise, *scan4),
        Command::Sweep {
            family,
            file,
            lambdas,
            no_exact,
            max_lp_qubits,
        } => cmd_sweep(&sink, family.as_deref(), file.as_deref(), lambdas, *no_exact, *max_lp_qubits),
        Command::Wigner {
            d,
            cnz,
            alpha,
            n,
            file,
            lambdas,
            m_d,
        } => cmd_wigner(cli, &sink, *d, *cnz, *alpha, n, file.as_deref(), lambdas, *m_d),
        Command::Enumerate {
            n,
            basis_file,
            count_only,
        } => {
            cmd_enumerate(cli, &sink, *n, basis_file.as_deref(), *count_only)
        }
        Command::Capacity {
            gate,
            noise,
            dephasing_scan,
            scan,
            eps,
            tol,
        } => cmd_capacity(
            cli,
            &sink,
            gate,
            noise.as_deref(),
            *dephasing_scan,
            scan.as_deref(),
            *eps,
            *tol,
        ),
        Command::VerifyCertificates { table, points, tol } => {
            cmd_verify(&sink, table.as_deref(), *points, *tol)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            eprint!("E_USAGE: {e}");
            return ExitCode::from(2);
        }
    };
    let level = if cli.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Error::Io(e)) if e.kind() == std::io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}: {e}", e.code());
            ExitCode::FAILURE
        }
    }
}
