//! Batch driver: cohomology tables, staged lifting with obstruction
//! reports, identity-verification suites and truncated hulls.  Every
//! command is deterministic given its inputs and seed; output files are
//! byte-identical across runs.  Exit code 0 means all asserted identities
//! passed.

use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use ncdef::artin::{artin_quotient, small_extension, AlgebraMap, ArtinLocalAlgebra};
use ncdef::deform::serial::BaseJson;
use ncdef::deform::{
    deformation_from_json, deformation_to_json, extend, hull, lift_candidate, obstructions,
    DeformationJson, ExtensionChoice, NCDeformation, ObstructionReport,
};
use ncdef::geometry::{
    builtin_variety, sheaf_cohomology, Cover, CoverKind, Section, SectionCochain, Window,
};
use ncdef::poly::{MultiPoly, PolyRing};
use ncdef::verify::{run_suite, SUITES};
use ncdef::{NcdefError, Scalar};

type Result<T> = std::result::Result<T, NcdefError>;

#[derive(Parser)]
#[command(name = "ncdef", version, about = "exact deformation theory on chart posets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Untwisted,
    Twisted,
}

#[derive(Args)]
struct OutArg {
    /// Write the machine-readable JSON result here.
    #[arg(long = "out", value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Cohomology table h^q(∧^p T) of a builtin variety, with the derived
    /// tangent and obstruction dimensions.
    Cohomology {
        /// Variety name: affine:d, affine_chain:d, proj:n, p1xp1.
        #[arg(long)]
        variety: String,
        #[arg(long, value_enum, default_value = "untwisted")]
        mode: Mode,
        /// Character box half-width (toric covers) or coefficient degree
        /// cap (affine covers); omitted means the safe default.
        #[arg(long)]
        window: Option<i64>,
        /// Largest exterior power of the tangent sheaf in the table.
        #[arg(long, default_value_t = 3)]
        p_max: usize,
        #[command(flatten)]
        out: OutArg,
    },
    /// Lift a serialized deformation to a larger Artin base, one small
    /// extension per degree, reporting the obstruction stages.
    Lift {
        /// Deformation file (JSON).
        #[arg(long = "in", value_name = "FILE")]
        input: PathBuf,
        /// Target base file (JSON: params, ideal, order); defaults to the
        /// deformation's own base truncated at --order.
        #[arg(long, value_name = "FILE")]
        base: Option<PathBuf>,
        /// Target truncation order when --base is omitted.
        #[arg(long)]
        order: Option<usize>,
        /// Torsor choices, one JSON block per extension step.
        #[arg(long, value_name = "FILE")]
        choices: Option<PathBuf>,
        #[command(flatten)]
        out: OutArg,
    },
    /// Run a named randomized identity-verification suite.
    Verify {
        /// Suite name; see --suite help for the list.
        #[arg(long, value_parser = SUITES.to_vec())]
        suite: String,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[command(flatten)]
        out: OutArg,
    },
    /// Truncated semi-universal base of a builtin variety.
    Hull {
        #[arg(long)]
        variety: String,
        #[arg(long, value_enum, default_value = "untwisted")]
        mode: Mode,
        /// Truncation order of the hull presentation.
        #[arg(long, default_value_t = 2)]
        order: usize,
        #[arg(long)]
        window: Option<i64>,
        #[command(flatten)]
        out: OutArg,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    check_thread_cap()?;
    match cli.command {
        Command::Cohomology { variety, mode, window, p_max, out } => {
            cmd_cohomology(&variety, mode, window, p_max, &out)
        }
        Command::Lift { input, base, order, choices, out } => {
            cmd_lift(&input, base.as_deref(), order, choices.as_deref(), &out)
        }
        Command::Verify { suite, seed, out } => cmd_verify(&suite, seed, &out),
        Command::Hull { variety, mode, order, window, out } => {
            cmd_hull(&variety, mode, order, window, &out)
        }
    }
}

/// `NCDEF_THREADS` caps worker threads.  All current computations are
/// single-threaded, so any positive cap is satisfied as-is; the variable
/// is still validated so misconfigured jobs fail loudly.
fn check_thread_cap() -> Result<()> {
    match std::env::var("NCDEF_THREADS") {
        Err(_) => Ok(()),
        Ok(v) => match v.parse::<usize>() {
            Ok(n) if n >= 1 => Ok(()),
            _ => Err(NcdefError::Unsupported(format!(
                "NCDEF_THREADS must be a positive integer, got {v:?}"
            ))),
        },
    }
}

/// Truncation orders at or past the field characteristic make divided
/// powers (tⁿ/n!) unavailable; exact arithmetic still proceeds, but
/// classical expansions like the Moyal family do not exist there.
fn warn_characteristic(order: usize) {
    let ch = Scalar::one().characteristic();
    if ch > 0 && order as u64 >= ch {
        eprintln!("warning: truncation order {order} >= char(k) = {ch}");
    }
}

fn write_out(out: &OutArg, value: &impl Serialize) -> Result<()> {
    if let Some(path) = &out.out {
        let mut text = serde_json::to_string_pretty(value)
            .map_err(|e| NcdefError::Invalid(format!("serialization failed: {e}")))?;
        text.push('\n');
        std::fs::write(path, text)
            .map_err(|e| NcdefError::Invalid(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(())
}

fn read_json<T: for<'a> Deserialize<'a>>(path: &std::path::Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| NcdefError::Invalid(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| NcdefError::Invalid(format!("bad JSON in {}: {e}", path.display())))
}

fn pick_window(cover: &Cover, w: Option<i64>) -> Option<Window> {
    w.map(|x| match cover.kind {
        CoverKind::Affine => Window::DegreeCap(x),
        _ => Window::Box(x),
    })
}

// ---- cohomology -----------------------------------------------------------

#[derive(Serialize)]
struct CohomologyOut {
    variety: String,
    mode: &'static str,
    window: Option<i64>,
    /// `h[p][q]`.
    h: Vec<Vec<usize>>,
    t1: usize,
    t2: usize,
}

fn mode_name(mode: Mode) -> &'static str {
    match mode {
        Mode::Untwisted => "untwisted",
        Mode::Twisted => "twisted",
    }
}

fn cmd_cohomology(
    variety: &str,
    mode: Mode,
    window: Option<i64>,
    p_max: usize,
    out: &OutArg,
) -> Result<()> {
    let cover = builtin_variety(variety)?;
    let win = pick_window(&cover, window);
    let q_max = cover.max_cech_degree().max(3);
    let mut h: Vec<Vec<usize>> = Vec::new();
    for p in 0..=p_max.max(3) {
        let r = sheaf_cohomology(&cover, p, win)?;
        h.push((0..=q_max).map(|q| r.h.get(q).copied().unwrap_or(0)).collect());
    }
    let twisted = mode == Mode::Twisted;
    let t1 = h[2][0] + h[1][1] + if twisted { h[0][2] } else { 0 };
    let t2 = h[3][0] + h[2][1] + h[1][2] + if twisted { h[0][3] } else { 0 };

    println!("variety {}  (mode {})", cover.name, mode_name(mode));
    print!("{:>5}", "p\\q");
    for q in 0..=q_max {
        print!("{q:>6}");
    }
    println!();
    for (p, row) in h.iter().enumerate().take(p_max + 1) {
        print!("{p:>5}");
        for v in row {
            print!("{v:>6}");
        }
        println!();
    }
    println!("T1 = {t1}");
    println!("T2 = {t2}");
    write_out(
        out,
        &CohomologyOut {
            variety: cover.name.clone(),
            mode: mode_name(mode),
            window,
            h,
            t1,
            t2,
        },
    )
}

// ---- lift -----------------------------------------------------------------

#[derive(Deserialize, Default)]
struct ChoiceJson {
    #[serde(default)]
    bivector: Vec<SectionCochainJson>,
    #[serde(default)]
    gluing: Vec<SectionCochainJson>,
    #[serde(default)]
    twist: Vec<SectionCochainJson>,
}

#[derive(Serialize, Deserialize)]
struct SectionCochainJson {
    p: usize,
    q: usize,
    values: Vec<SectionValueJson>,
}

#[derive(Serialize, Deserialize)]
struct SectionValueJson {
    chain: Vec<usize>,
    terms: Vec<SectionTermJson>,
}

#[derive(Serialize, Deserialize)]
struct SectionTermJson {
    /// Strictly increasing derivation indices of the p-vector component.
    vars: Vec<usize>,
    coeff: String,
}

fn section_cochain_from(cover: &Arc<Cover>, j: &SectionCochainJson) -> Result<SectionCochain> {
    let mut out = SectionCochain::zero(j.p, j.q);
    for v in &j.values {
        let top = *v.chain.last().ok_or_else(|| {
            NcdefError::Invalid("empty chain in a section cochain".into())
        })?;
        if top >= cover.n_charts() {
            return Err(NcdefError::Invalid(format!("chart {top} out of range")));
        }
        let ring = &cover.charts[top].ring;
        let mut s = Section::zero(ring, j.p);
        for t in &v.terms {
            s.terms.insert(t.vars.clone(), MultiPoly::parse(ring, &t.coeff)?);
        }
        out.set(v.chain.clone(), s);
    }
    Ok(out)
}

fn section_cochain_json(c: &SectionCochain) -> SectionCochainJson {
    SectionCochainJson {
        p: c.p,
        q: c.q,
        values: c
            .values
            .iter()
            .map(|(chain, s)| SectionValueJson {
                chain: chain.clone(),
                terms: s
                    .terms
                    .iter()
                    .filter(|(_, c)| !c.is_zero())
                    .map(|(vars, coeff)| SectionTermJson {
                        vars: vars.clone(),
                        coeff: coeff.to_string(),
                    })
                    .collect(),
            })
            .collect(),
    }
}

#[derive(Serialize)]
struct StageOut {
    stage: String,
    p: usize,
    q: usize,
    vanishes: bool,
    witness: Vec<SectionCochainJson>,
}

#[derive(Serialize)]
struct StepOut {
    order: usize,
    stages: Vec<StageOut>,
    obstructed: Option<String>,
}

#[derive(Serialize)]
struct LiftOut {
    steps: Vec<StepOut>,
    result: Option<DeformationJson>,
}

fn report_out(order: usize, report: &ObstructionReport) -> StepOut {
    StepOut {
        order,
        stages: report
            .stages
            .iter()
            .map(|s| StageOut {
                stage: format!("{:?}", s.stage),
                p: s.class.p,
                q: s.class.q,
                vanishes: s.vanishes,
                witness: if s.vanishes {
                    vec![]
                } else {
                    s.class.per_j.iter().map(section_cochain_json).collect()
                },
            })
            .collect(),
        obstructed: report.obstructed.map(|s| format!("{s:?}")),
    }
}

fn print_step(step: &StepOut) {
    println!("extension to order {}:", step.order);
    for s in &step.stages {
        println!(
            "  stage {:<18} class in J x H^{}({}): {}",
            s.stage,
            s.q,
            match s.p {
                0 => "O".to_string(),
                1 => "T".to_string(),
                p => format!("w{p}T"),
            },
            if s.vanishes { "vanishes" } else { "NONZERO" }
        );
    }
    match &step.obstructed {
        Some(st) => println!("  obstructed at stage {st}"),
        None => println!("  extension exists"),
    }
}

fn cmd_lift(
    input: &std::path::Path,
    base: Option<&std::path::Path>,
    order: Option<usize>,
    choices: Option<&std::path::Path>,
    out: &OutArg,
) -> Result<()> {
    let dj: DeformationJson = read_json(input)?;
    let mut d = deformation_from_json(&dj)?;
    let (params, gens_text, target_order) = match (base, order) {
        (Some(path), _) => {
            let bj: BaseJson = read_json(path)?;
            (bj.params, bj.ideal, bj.order)
        }
        (None, Some(n)) => (dj.base.params.clone(), dj.base.ideal.clone(), n),
        (None, None) => {
            return Err(NcdefError::Unsupported(
                "lift needs --base FILE or --order N".into(),
            ))
        }
    };
    warn_characteristic(target_order);
    let param_refs: Vec<&str> = params.iter().map(|s| s.as_str()).collect();
    let pring = PolyRing::polynomial(&param_refs);
    let gens: Result<Vec<MultiPoly>> = gens_text
        .iter()
        .map(|s| MultiPoly::parse(&pring, s))
        .collect();
    let gens = gens?;
    let start_order = d.base().order;
    if target_order <= start_order {
        return Err(NcdefError::Unsupported(format!(
            "target order {target_order} is not beyond the current order {start_order}"
        )));
    }
    // the deformation's base must be the truncation of the target base
    let start = artin_quotient(&param_refs, gens.clone(), start_order)?;
    if !same_basis(&start, d.base()) {
        return Err(NcdefError::IncompatibleData(
            "deformation base is not a truncation of the target base".into(),
        ));
    }
    d = rebase(&d, &start)?;
    let step_choices: Vec<ChoiceJson> = match choices {
        Some(path) => read_json(path)?,
        None => vec![],
    };

    let mut steps = Vec::new();
    let mut current = start;
    let mut failure = None;
    for (step_idx, k) in (start_order + 1..=target_order).enumerate() {
        let bigger = artin_quotient(&param_refs, gens.clone(), k)?;
        let map = AlgebraMap::identity_params(bigger.clone(), current.clone())?;
        let ext = Arc::new(small_extension(bigger.clone(), current, map)?);
        let report = obstructions(&lift_candidate(&d, &ext))?;
        let step = report_out(k, &report);
        print_step(&step);
        let ok = step.obstructed.is_none();
        steps.push(step);
        if !ok {
            failure = Some(format!(
                "obstructed at order {k}, stage {}",
                steps.last().unwrap().obstructed.clone().unwrap()
            ));
            break;
        }
        let choice = match step_choices.get(step_idx) {
            None => ExtensionChoice::zero(),
            Some(cj) => {
                let conv = |list: &[SectionCochainJson]| -> Result<Vec<SectionCochain>> {
                    list.iter().map(|c| section_cochain_from(d.cover(), c)).collect()
                };
                ExtensionChoice {
                    bivector: conv(&cj.bivector)?,
                    gluing: conv(&cj.gluing)?,
                    twist: conv(&cj.twist)?,
                }
            }
        };
        d = extend(&d, &ext, &choice)?;
        current = bigger;
    }
    let result = failure.is_none().then(|| deformation_to_json(d.data()));
    write_out(out, &LiftOut { steps, result })?;
    match failure {
        None => {
            println!("lifted to order {target_order}");
            Ok(())
        }
        Some(msg) => Err(NcdefError::Obstructed(msg)),
    }
}

fn same_basis(a: &ArtinLocalAlgebra, b: &ArtinLocalAlgebra) -> bool {
    a.ring.vars == b.ring.vars
        && a.dim() == b.dim()
        && (0..a.dim()).all(|s| a.basis_exp(s) == b.basis_exp(s))
}

/// Re-expresses the deformation over an equal-by-basis copy of its base,
/// so the extension chain is built over one algebra family.
fn rebase(d: &NCDeformation, base: &Arc<ArtinLocalAlgebra>) -> Result<NCDeformation> {
    let map = AlgebraMap::identity_params(d.base().clone(), base.clone())?;
    NCDeformation::new(d.data().map_base(&map)?)
}

// ---- verify ---------------------------------------------------------------

#[derive(Serialize)]
struct VerifyOut {
    suite: String,
    seed: u64,
    cases: usize,
    identities: usize,
    failure: Option<String>,
}

fn cmd_verify(suite: &str, seed: u64, out: &OutArg) -> Result<()> {
    let r = run_suite(suite, seed)?;
    println!(
        "suite {} (seed {}): {} cases, {} identity instances",
        r.suite, r.seed, r.cases, r.identities
    );
    let v = VerifyOut {
        suite: r.suite.clone(),
        seed: r.seed,
        cases: r.cases,
        identities: r.identities,
        failure: r.failure.clone(),
    };
    write_out(out, &v)?;
    match r.failure {
        None => {
            println!("pass");
            Ok(())
        }
        Some(msg) => Err(NcdefError::IdentityViolation(msg)),
    }
}

// ---- hull -----------------------------------------------------------------

#[derive(Serialize)]
struct HullOut {
    variety: String,
    mode: &'static str,
    order: usize,
    params: Vec<String>,
    relations: Vec<String>,
    t1_dims: (usize, usize, usize),
    t2_dims: (usize, usize, usize, usize),
    family: DeformationJson,
}

fn cmd_hull(
    variety: &str,
    mode: Mode,
    order: usize,
    window: Option<i64>,
    out: &OutArg,
) -> Result<()> {
    let cover = builtin_variety(variety)?;
    warn_characteristic(order);
    let win = pick_window(&cover, window);
    let h = hull(&cover, mode == Mode::Twisted, order, win)?;
    let relations: Vec<String> = h
        .relations
        .iter()
        .filter(|r| !r.is_zero())
        .map(|r| r.to_string())
        .collect();
    if h.params.is_empty() {
        println!("hull of {} (mode {}): rigid, base k", cover.name, mode_name(mode));
    } else if relations.is_empty() {
        println!(
            "hull of {} (mode {}): k[[{}]], no relations up to order {}",
            cover.name,
            mode_name(mode),
            h.params.join(", "),
            order
        );
    } else {
        println!(
            "hull of {} (mode {}): k[[{}]] / ({})  up to order {}",
            cover.name,
            mode_name(mode),
            h.params.join(", "),
            relations.join(", "),
            order
        );
    }
    println!(
        "tangent dims (h0(w2T), h1(T), h2(O)) = {:?}; obstruction dims = {:?}",
        h.t1_dims, h.t2_dims
    );
    write_out(
        out,
        &HullOut {
            variety: cover.name.clone(),
            mode: mode_name(mode),
            order,
            params: h.params.clone(),
            relations,
            t1_dims: h.t1_dims,
            t2_dims: h.t2_dims,
            family: deformation_to_json(h.family.data()),
        },
    )
}
