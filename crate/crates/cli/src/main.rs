use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use mdent_core::rank::{conjecture_scan, marginal_ranks, ScanDims};
use mdent_core::statefile::{basis_to_string, load_state, state_to_string, StateData};
use mdent_core::sweep::{format_sig12, region_summary, sweep, write_csv, SweepGrid};
use mdent_core::witness::psi432_pair_sets;
use mdent_core::zoo::{bell, canonical_rank_state, ghz, psi_332, psi_422, psi_432, test_state};
use mdent_core::{
    apply_local_basis, apply_local_basis_pure, certify, dim_bound_from_entropy, entropy_vector,
    feasible_tripartite, optimize_witness, random_local_basis, schmidt_rank_vector, validate,
    Budget, Error, NoiseParams, PairSet, PartyStructure, WitnessConvention, DEFAULT_RANK_TOL,
};

#[derive(Parser)]
#[command(
    name = "mdent",
    version,
    about = "Entanglement dimensionality of multipartite qudit states"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a state file, report rank and entropy vectors, certify dimensionalities.
    Analyze(AnalyzeArgs),
    /// Certify the ψ432 white-noise/dephasing family over the (p, q) simplex.
    Sweep(SweepArgs),
    /// Decide whether local ranks (r1, r2, r3) belong to a tripartite pure state.
    Feasible(FeasibleArgs),
    /// Check r_AB·r_AC·r_BC ≥ r_A·r_B·r_C on random four-party pure states.
    ConjectureScan(ScanArgs),
    /// Maximize one witness over local bases.
    Optimize(OptimizeArgs),
    /// Write a named state as a state file.
    GenState(GenArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ConventionArg {
    Tight,
    Safe,
}

impl From<ConventionArg> for WitnessConvention {
    fn from(c: ConventionArg) -> Self {
        match c {
            ConventionArg::Tight => WitnessConvention::Tight,
            ConventionArg::Safe => WitnessConvention::Safe,
        }
    }
}

#[derive(Args)]
struct WitnessOpts {
    /// Pair sets: a pair-set file, `paper-432`, `paper-432-full` or `full-support`.
    /// Give it once for every slot or once per slot. Default: `paper-432-full`
    /// on dims 4,4,4, else `full-support`.
    #[arg(long = "pairs", value_name = "SOURCE")]
    pairs: Vec<String>,
    #[arg(long, value_enum, default_value_t = ConventionArg::Tight)]
    convention: ConventionArg,
}

#[derive(Args)]
struct AnalyzeArgs {
    state: PathBuf,
    #[command(flatten)]
    witness: WitnessOpts,
    /// Relative eigenvalue threshold for numerical ranks.
    #[arg(long, default_value_t = DEFAULT_RANK_TOL)]
    tol: f64,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, default_value_t = 201)]
    p_steps: usize,
    #[arg(long, default_value_t = 201)]
    q_steps: usize,
    #[command(flatten)]
    witness: WitnessOpts,
    /// CSV output path.
    #[arg(long)]
    out: PathBuf,
    /// Also write whitespace-separated blocks (one per p) for gnuplot's splot.
    #[arg(long, value_name = "PATH")]
    gnuplot: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct FeasibleArgs {
    #[arg(num_args = 3, required = true, value_name = "R")]
    ranks: Vec<usize>,
    /// Write a state realizing the ranks to --out.
    #[arg(long, requires = "out")]
    emit: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct ScanArgs {
    #[arg(long, default_value_t = 10_000)]
    count: usize,
    /// Fixed four-party dims, comma separated [default: 2,2,2,2].
    #[arg(long, value_delimiter = ',', conflicts_with = "max_dim")]
    dims: Vec<usize>,
    /// Draw each party's dimension uniformly from 2..=MAX_DIM instead.
    #[arg(long)]
    max_dim: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_RANK_TOL)]
    tol: f64,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct OptimizeArgs {
    state: PathBuf,
    /// Witness slot.
    #[arg(long)]
    k: usize,
    #[command(flatten)]
    witness: WitnessOpts,
    #[arg(long, default_value_t = Budget::default().restarts)]
    restarts: usize,
    #[arg(long, default_value_t = Budget::default().steps)]
    steps: usize,
    #[arg(long, default_value_t = Budget::default().step_scale)]
    step_scale: f64,
    #[arg(long, default_value_t = Budget::default().rejection_streak)]
    rejection_streak: usize,
    /// Start every restart from a random basis.
    #[arg(long)]
    no_identity_start: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Where to write the best local basis.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum StateName {
    Psi332,
    Psi422,
    Psi432,
    TestState,
    Bell,
    Ghz,
}

#[derive(Args)]
struct GenArgs {
    #[arg(value_enum)]
    name: StateName,
    /// Weight of the pure target (test-state).
    #[arg(long)]
    p: Option<f64>,
    /// Weight of the dephased target (test-state).
    #[arg(long)]
    q: Option<f64>,
    /// Party dims for ghz [default: 2,2,2].
    #[arg(long, value_delimiter = ',')]
    dims: Vec<usize>,
    /// Hide the state behind a seeded random local basis.
    #[arg(long)]
    rotate_seed: Option<u64>,
    /// Output path; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: if e.is_argument_error() { 2 } else { 1 },
            message: e.to_string(),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure {
            code: 1,
            message: format!("I/O error: {e}"),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: message.into(),
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Analyze(a) => cmd_analyze(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Feasible(a) => cmd_feasible(a),
        Command::ConjectureScan(a) => cmd_conjecture_scan(a),
        Command::Optimize(a) => cmd_optimize(a),
        Command::GenState(a) => cmd_gen_state(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

// ---------------------------------------------------------------------------
// pair sets

const SUPPORT_TOL: f64 = 1e-12;

fn support_pairs(state: &StateData) -> Result<PairSet, Failure> {
    let s = state.structure();
    let support = match state {
        StateData::Pure(psi) => psi.support(SUPPORT_TOL),
        StateData::Density(rho) => s
            .indices()
            .filter(|m| rho.entry(m, m).map(|z| z.re > SUPPORT_TOL).unwrap_or(false))
            .collect(),
    };
    if support.len() < 2 {
        return Err(usage(
            "full-support pairs need at least two basis states in the support",
        ));
    }
    Ok(PairSet::all_pairs(s, &support)?)
}

fn resolve_pairs(state: &StateData, sources: &[String]) -> Result<Vec<PairSet>, Failure> {
    let s = state.structure();
    let n = s.parties();
    let is_432 = s.dims() == [4, 4, 4];
    let default = [String::from(if is_432 {
        "paper-432-full"
    } else {
        "full-support"
    })];
    let sources = if sources.is_empty() {
        &default[..]
    } else {
        sources
    };
    if sources.len() != 1 && sources.len() != n {
        return Err(usage(format!(
            "--pairs given {} times; expected once or once per slot ({n})",
            sources.len()
        )));
    }
    (0..n)
        .map(|slot| {
            let src = &sources[if sources.len() == 1 { 0 } else { slot }];
            match src.as_str() {
                "paper-432" | "paper-432-full" => {
                    if !is_432 {
                        return Err(usage(format!("{src} pair sets need dims 4,4,4")));
                    }
                    let sets = psi432_pair_sets();
                    let slot_set = if src == "paper-432-full" && slot == 0 {
                        2
                    } else {
                        slot
                    };
                    Ok(sets[slot_set].clone())
                }
                "full-support" => support_pairs(state),
                path => {
                    let text = fs::read_to_string(path).map_err(|e| Failure {
                        code: 1,
                        message: format!("{path}: {e}"),
                    })?;
                    PairSet::parse(s, &text).map_err(|e| Failure::from(e).context(path))
                }
            }
        })
        .collect()
}

impl Failure {
    fn context(mut self, what: &str) -> Self {
        self.message = format!("{what}: {}", self.message);
        self
    }
}

fn pairs_text(sets: &[PairSet]) -> Vec<String> {
    sets.iter()
        .map(|c| {
            c.iter()
                .map(|(a, b)| format!("{a} | {b}"))
                .collect::<Vec<_>>()
                .join("; ")
        })
        .collect()
}

fn tuple<T: std::fmt::Display>(xs: &[T]) -> String {
    let parts: Vec<String> = xs.iter().map(|x| x.to_string()).collect();
    format!("({})", parts.join(","))
}

fn tuple6(xs: &[f64]) -> String {
    let parts: Vec<String> = xs.iter().map(|x| format!("{x:.6}")).collect();
    format!("({})", parts.join(", "))
}

fn print_json(v: &Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("serializable"));
}

fn load(path: &Path) -> Result<StateData, Failure> {
    load_state(path).map_err(|e| Failure::from(e).context(&path.display().to_string()))
}

// ---------------------------------------------------------------------------
// analyze

fn cmd_analyze(a: AnalyzeArgs) -> CmdResult {
    let state = load(&a.state)?;
    let rho = state.to_density();
    let report = validate(&rho);
    let sets = resolve_pairs(&state, &a.witness.pairs)?;
    let convention: WitnessConvention = a.witness.convention.into();
    let cert = certify(&rho, &sets, convention)?;
    let pure = match &state {
        StateData::Pure(psi) => Some((schmidt_rank_vector(psi, a.tol)?, entropy_vector(psi))),
        StateData::Density(_) => None,
    };
    let kind = if pure.is_some() { "pure" } else { "density" };

    if a.json {
        let mut out = json!({
            "kind": kind,
            "dims": state.structure().dims(),
            "validation": {
                "valid": report.is_valid(),
                "hermiticity_deviation": report.hermiticity_deviation,
                "trace_deviation": report.trace_deviation,
                "min_eigenvalue": report.min_eigenvalue,
            },
            "convention": convention,
            "witness": cert.witness_values,
            "certified": cert.certified,
            "pairs": pairs_text(&sets),
        });
        if let Some((ranks, entropies)) = &pure {
            out["rank_vector"] = json!(ranks.ranks());
            out["entropy_vector"] = json!(entropies.values);
        }
        print_json(&out);
        return Ok(());
    }

    println!("state: {kind}, dims {}", tuple(state.structure().dims()));
    println!(
        "validation: {} (hermiticity {:.1e}, trace {:.1e}, min eigenvalue {:.3e})",
        if report.is_valid() { "ok" } else { "FAILED" },
        report.hermiticity_deviation,
        report.trace_deviation,
        report.min_eigenvalue
    );
    if let Some((ranks, entropies)) = &pure {
        println!("rank vector: {ranks}");
        println!("entropy vector: {}", tuple6(&entropies.values));
    }
    let conv = match convention {
        WitnessConvention::Tight => "tight",
        WitnessConvention::Safe => "safe",
    };
    println!("witness ({conv}): {}", tuple6(&cert.witness_values));
    println!("certified: {}", tuple(&cert.certified));
    for (k, c) in sets.iter().enumerate() {
        println!("pairs k={}: {} pair(s)", k + 1, c.len());
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// sweep

fn write_gnuplot(grid: &SweepGrid, path: &Path) -> io::Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "# p q W1 W2 W3 r1 r2 r3")?;
    let mut last_p = None;
    for row in &grid.rows {
        if last_p.is_some_and(|p| p != row.p) {
            writeln!(out)?;
        }
        last_p = Some(row.p);
        let w = row.witness.map(format_sig12);
        let [r1, r2, r3] = row.certified;
        writeln!(
            out,
            "{} {} {} {} {} {r1} {r2} {r3}",
            format_sig12(row.p),
            format_sig12(row.q),
            w[0],
            w[1],
            w[2]
        )?;
    }
    out.flush()
}

fn io_ctx(path: &Path) -> impl Fn(io::Error) -> Failure + '_ {
    move |e| Failure::from(e).context(&path.display().to_string())
}

fn cmd_sweep(a: SweepArgs) -> CmdResult {
    let target = StateData::Pure(psi_432());
    let sets = resolve_pairs(&target, &a.witness.pairs)?;
    let grid = sweep(a.p_steps, a.q_steps, &sets, a.witness.convention.into())?;
    let mut out = BufWriter::new(File::create(&a.out).map_err(io_ctx(&a.out))?);
    write_csv(&grid, &mut out).map_err(io_ctx(&a.out))?;
    out.flush().map_err(io_ctx(&a.out))?;
    if let Some(path) = &a.gnuplot {
        write_gnuplot(&grid, path).map_err(io_ctx(path))?;
    }
    let regions = region_summary(&grid);
    if a.json {
        print_json(&json!({
            "p_steps": grid.p_steps,
            "q_steps": grid.q_steps,
            "points": grid.rows.len(),
            "regions": regions,
        }));
        return Ok(());
    }
    println!(
        "grid {}x{}: {} points with p+q <= 1 written to {}",
        grid.p_steps,
        grid.q_steps,
        grid.rows.len(),
        a.out.display()
    );
    println!("{:<12}{:>8}  fraction", "certified", "points");
    for r in regions {
        println!(
            "{:<12}{:>8}  {:.6}",
            tuple(&r.certified),
            r.cells,
            r.fraction
        );
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// feasible

fn cmd_feasible(a: FeasibleArgs) -> CmdResult {
    let r = [a.ranks[0], a.ranks[1], a.ranks[2]];
    let feasible = feasible_tripartite(r)?;
    let mut order = [0, 1, 2];
    order.sort_by(|&i, &j| r[j].cmp(&r[i]));
    let sorted = order.map(|i| r[i]);
    let relation = format!(
        "{} {} {}*{}",
        sorted[0],
        if feasible { "<=" } else { ">" },
        sorted[1],
        sorted[2]
    );

    let mut realized = None;
    if a.emit {
        if !feasible {
            if !a.json {
                println!("infeasible: {relation}");
            }
            return Err(usage(format!(
                "refusing to emit: no tripartite pure state has local ranks {}, since {relation}",
                tuple(&r)
            )));
        }
        let canonical = canonical_rank_state(sorted[1], sorted[2], sorted[0])?;
        // Party order[j] of the request holds sorted rank j.
        let mut inverse = [0; 3];
        for (j, &i) in order.iter().enumerate() {
            inverse[i] = j;
        }
        let psi = canonical.permute_parties(&inverse)?;
        let ranks = marginal_ranks(&psi, DEFAULT_RANK_TOL)?;
        if ranks != r {
            return Err(Failure {
                code: 1,
                message: format!(
                    "emitted state has ranks {} instead of {}",
                    tuple(&ranks),
                    tuple(&r)
                ),
            });
        }
        let path = a.out.as_ref().expect("clap enforces --out with --emit");
        fs::write(path, state_to_string(&psi.into()) + "\n")?;
        realized = Some(ranks);
    }

    if a.json {
        print_json(&json!({
            "ranks": r,
            "feasible": feasible,
            "emitted": a.out.as_ref().filter(|_| realized.is_some()).map(|p| p.display().to_string()),
            "emitted_ranks": realized,
        }));
    } else {
        println!(
            "{}: {relation}",
            if feasible { "feasible" } else { "infeasible" }
        );
        if let (Some(ranks), Some(path)) = (realized, &a.out) {
            println!("wrote {} (local ranks {})", path.display(), tuple(&ranks));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// conjecture-scan

fn cmd_conjecture_scan(a: ScanArgs) -> CmdResult {
    let dims = match a.max_dim {
        Some(m) => ScanDims::RandomUpTo(m),
        None => {
            let d = if a.dims.is_empty() {
                vec![2, 2, 2, 2]
            } else {
                a.dims.clone()
            };
            ScanDims::Fixed(PartyStructure::new(d)?)
        }
    };
    let summary = conjecture_scan(a.count, &dims, a.seed, a.tol)?;
    let g = &summary.ghz_probe;
    if a.json {
        let violations: Vec<Value> = summary
            .violations
            .iter()
            .map(|v| {
                json!({
                    "sample": v.sample,
                    "report": v.report,
                    "state": serde_json::from_str::<Value>(&state_to_string(&v.state.clone().into()))
                        .expect("state documents are JSON"),
                })
            })
            .collect();
        print_json(&json!({
            "count": summary.count,
            "holds": summary.holds,
            "equality_cases": summary.equality_cases,
            "violations": violations,
            "ghz_probe": g,
        }));
        return Ok(());
    }
    println!("samples: {}", summary.count);
    println!(
        "holds: {} (equality in {})",
        summary.holds, summary.equality_cases
    );
    println!("violations: {}", summary.violations.len());
    println!(
        "GHZ probe: r_AB*r_AC*r_BC = {} >= r_A*r_B*r_C = {} ({})",
        g.lhs,
        g.rhs,
        if g.lhs == g.rhs {
            "equality"
        } else if g.holds {
            "strict"
        } else {
            "VIOLATED"
        }
    );
    for v in &summary.violations {
        println!(
            "violation at sample {}: pair ranks {} singles {} ({} < {})",
            v.sample,
            tuple(&v.report.pair_ranks),
            tuple(&v.report.single_ranks),
            v.report.lhs,
            v.report.rhs
        );
        println!("{}", state_to_string(&v.state.clone().into()));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// optimize

fn bound(w: f64) -> Result<usize, Failure> {
    Ok(dim_bound_from_entropy(w.max(0.0))?)
}

fn cmd_optimize(a: OptimizeArgs) -> CmdResult {
    let state = load(&a.state)?;
    let n = state.structure().parties();
    if a.k == 0 || a.k > n {
        return Err(usage(format!("--k {} outside [1, {n}]", a.k)));
    }
    let sets = resolve_pairs(&state, &a.witness.pairs)?;
    let pairs = &sets[a.k - 1];
    let budget = Budget {
        restarts: a.restarts,
        steps: a.steps,
        step_scale: a.step_scale,
        rejection_streak: a.rejection_streak,
        identity_start: !a.no_identity_start,
    };
    let rho = state.to_density();
    let opt = optimize_witness(
        &rho,
        pairs,
        a.k,
        a.witness.convention.into(),
        &budget,
        a.seed,
    )?;
    let (before, after) = (bound(opt.initial_value)?, bound(opt.best_value)?);
    if let Some(path) = &a.out {
        fs::write(path, basis_to_string(&opt.best_basis) + "\n")?;
    }
    if a.json {
        print_json(&json!({
            "k": a.k,
            "before": opt.initial_value,
            "after": opt.best_value,
            "certified_before": before,
            "certified_after": after,
            "best_restart": opt.best_restart,
            "budget": budget,
            "seed": a.seed,
            "basis": a.out.as_ref().map(|p| p.display().to_string()),
        }));
        return Ok(());
    }
    println!(
        "W_{} before: {:.9} (certified {before})",
        a.k, opt.initial_value
    );
    println!(
        "W_{} after:  {:.9} (certified {after})",
        a.k, opt.best_value
    );
    println!("best restart: {} of {}", opt.best_restart, budget.restarts);
    if let Some(path) = &a.out {
        println!("basis written to {}", path.display());
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// gen-state

fn cmd_gen_state(a: GenArgs) -> CmdResult {
    let is_test = matches!(a.name, StateName::TestState);
    if !is_test && (a.p.is_some() || a.q.is_some()) {
        return Err(usage("--p and --q apply to test-state only"));
    }
    if !matches!(a.name, StateName::Ghz) && !a.dims.is_empty() {
        return Err(usage("--dims applies to ghz only"));
    }
    let state: StateData = match a.name {
        StateName::Psi332 => psi_332().into(),
        StateName::Psi422 => psi_422().into(),
        StateName::Psi432 => psi_432().into(),
        StateName::Bell => bell().into(),
        StateName::Ghz => {
            let dims = if a.dims.is_empty() {
                vec![2, 2, 2]
            } else {
                a.dims.clone()
            };
            ghz(&PartyStructure::new(dims)?).into()
        }
        StateName::TestState => {
            let p = a.p.ok_or_else(|| usage("test-state needs --p"))?;
            test_state(NoiseParams::new(p, a.q.unwrap_or(0.0))?).into()
        }
    };
    let state = match (a.rotate_seed, state) {
        (None, s) => s,
        (Some(seed), StateData::Pure(psi)) => {
            let basis = random_local_basis(psi.structure(), seed);
            apply_local_basis_pure(&psi, &basis)?.into()
        }
        (Some(seed), StateData::Density(rho)) => {
            let basis = random_local_basis(rho.structure(), seed);
            apply_local_basis(&rho, &basis)?.into()
        }
    };
    let text = state_to_string(&state) + "\n";
    match &a.out {
        Some(path) => fs::write(path, text)?,
        None => io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}
