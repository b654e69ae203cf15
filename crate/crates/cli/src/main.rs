use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Map, Value};

use coarse_core::cohomology::{self, CochainFile, TrivialityVerdict};
use coarse_core::coproduct::{binary_coproduct, countable_coproduct, CoproductMode};
use coarse_core::excisive::{excisive_profile, CoverDecomposition, SubsetSpec};
use coarse_core::filtration::{load_custom_space, CustomSpaceFile};
use coarse_core::groups::{self, GroupSpec};
use coarse_core::{coarse_algebra, config, connect};
use coarse_core::{builtin_space, CoarseError, FiltrationSpace, Scalar, SpaceName};

#[derive(Parser)]
#[command(name = "coarse", version, about = "Coarse geometry on finite truncations")]
struct Cli {
    /// Emit the report as JSON instead of aligned text.
    #[arg(long, global = true)]
    json: bool,
    /// Seed recorded in the report; all current analyses are deterministic.
    #[arg(long, global = true, default_value_t = config::DEFAULT_SEED)]
    seed: u64,
    /// Persistence margin: points with norm >= depth - margin count as far.
    #[arg(long, global = true, default_value_t = config::DEFAULT_MARGIN as f64)]
    margin: f64,
    /// Add wall-clock time to the report (makes output non-reproducible).
    #[arg(long, global = true)]
    timing: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List builtin spaces and groups.
    Spaces,
    /// Asymptotic analyses of a space.
    #[command(subcommand)]
    Analyze(Analyze),
    /// Coarse coproduct of two spaces, written as a custom-space file.
    Coproduct(CoproductArgs),
    /// Overlap profile of a two-set cover.
    Excisive(ExcisiveArgs),
    /// Degree-1 coarse cohomology.
    #[command(subcommand)]
    Cohomology(Cohomology),
    /// End counts of a finitely generated group.
    Ends(EndsArgs),
    /// Corona connectedness of a finitely generated group.
    Corona(CoronaArgs),
    /// Finite abstract coarse structures.
    #[command(subcommand, name = "coarse-algebra")]
    CoarseAlgebra(Algebra),
}

#[derive(Subcommand)]
enum Analyze {
    /// Search for a separated decomposition.
    Connectivity(ConnectivityArgs),
}

#[derive(Args)]
struct ConnectivityArgs {
    #[arg(long)]
    space: String,
    #[arg(long, default_value = "1..10")]
    scales: List,
    #[arg(long, default_value_t = config::DEFAULT_DEPTH)]
    depth: usize,
    /// Re-check the witness over all pairs.
    #[arg(long)]
    verify: bool,
}

#[derive(Args)]
struct CoproductArgs {
    #[arg(long)]
    left: String,
    #[arg(long)]
    right: String,
    /// Countable-coproduct metric variant; omit for the binary coproduct.
    #[arg(long)]
    mode: Option<String>,
    /// Level to which each summand is built.
    #[arg(long, default_value_t = 20)]
    depth: usize,
    /// Write the space here and print a summary instead of the file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExcisiveArgs {
    #[arg(long)]
    space: String,
    #[arg(long = "A")]
    a: String,
    #[arg(long = "B")]
    b: String,
    #[arg(long, default_value = "1..10")]
    radii: List,
    #[arg(long, default_value = "50,100,150,200")]
    depths: List,
}

#[derive(Subcommand)]
enum Cohomology {
    /// Cocycle of a separated decomposition, if one is found.
    Cocycle(CocycleArgs),
    /// Decide whether a 1-cocycle is a bounded coboundary.
    Triviality(TrivialityArgs),
}

#[derive(Args)]
struct CocycleArgs {
    #[arg(long)]
    space: String,
    #[arg(long, default_value_t = config::DEFAULT_COHOMOLOGY_DEPTH)]
    depth: usize,
    #[arg(long, default_value = "1..10")]
    scales: List,
    /// Write the cochain file here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TrivialityArgs {
    #[arg(long)]
    cochain: PathBuf,
    #[arg(long, default_value = "1..10")]
    scales: List,
}

#[derive(Args)]
struct EndsArgs {
    #[arg(long)]
    group: String,
    #[arg(long, default_value = "1..6")]
    inner: List,
    #[arg(long, default_value_t = config::DEFAULT_ENDS_OUTER as u32)]
    outer: u32,
}

#[derive(Args)]
struct CoronaArgs {
    #[arg(long)]
    group: String,
    #[arg(long, default_value_t = config::DEFAULT_CORONA_BUDGET as u32)]
    budget: u32,
}

#[derive(Subcommand)]
enum Algebra {
    /// Exhaustive lemma checks on small grounds.
    Verify {
        #[arg(long, default_value_t = config::DEFAULT_MAX_GROUND)]
        max_ground: usize,
        #[arg(long, default_value_t = config::DEFAULT_MAX_GENERATORS)]
        max_generators: usize,
    },
}

/// `a..b` (inclusive), `a,b,c`, or a single integer.
#[derive(Debug, Clone)]
struct List(Vec<i64>);

impl std::str::FromStr for List {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        parse_list(s).map(List)
    }
}

fn parse_list(s: &str) -> Result<Vec<i64>, String> {
    let bad = || format!("`{s}` is not a range `a..b` or a list `a,b,c`");
    let v: Vec<i64> = if let Some((a, b)) = s.split_once("..") {
        let (a, b): (i64, i64) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
        if a > b {
            return Err(bad());
        }
        (a..=b).collect()
    } else {
        s.split(',').map(|x| x.trim().parse().map_err(|_| bad())).collect::<Result<_, _>>()?
    };
    if v.is_empty() {
        return Err(bad());
    }
    Ok(v)
}

/// Outcome of a subcommand: a report and whether it reached a verdict.
struct Outcome {
    report: Value,
    conclusive: bool,
}

impl Outcome {
    fn done(report: Value) -> Self {
        Self { report, conclusive: true }
    }
}

fn to_json<S: Serialize>(s: &S) -> Value {
    serde_json::to_value(s).expect("reports serialize")
}

/// Real distances only for custom spaces that need them.
fn needs_reals(space: &SpaceName) -> Result<bool, CoarseError> {
    match space {
        SpaceName::Custom(p) => Ok(!load_custom_space::<f64>(p.as_ref())?.is_integer_valued()),
        _ => Ok(false),
    }
}

fn margin<T: Scalar>(m: f64) -> Result<T, CoarseError> {
    if m < 0.0 || (T::EXACT && m.fract() != 0.0) {
        return Err(CoarseError::InvalidParameter(format!("margin {m}")));
    }
    T::from_f64(m).ok_or_else(|| CoarseError::InvalidParameter(format!("margin {m}")))
}

fn scalars<T: Scalar>(v: &[i64]) -> Vec<T> {
    v.iter().map(|&x| T::from_int(x)).collect()
}

fn usizes(v: &[i64], what: &str) -> Result<Vec<usize>, CoarseError> {
    v.iter()
        .map(|&x| usize::try_from(x).map_err(|_| CoarseError::InvalidParameter(format!("negative {what} {x}"))))
        .collect()
}

macro_rules! dispatch {
    ($space:expr, $f:ident ( $($arg:expr),* )) => {
        if needs_reals($space)? {
            $f::<f64>($($arg),*)
        } else {
            $f::<i64>($($arg),*)
        }
    };
}

fn spaces() -> Outcome {
    let list = |c: Vec<(&str, &str)>| -> Value {
        c.into_iter().map(|(n, d)| json!({"name": n, "description": d})).collect()
    };
    Outcome::done(json!({
        "spaces": list(SpaceName::catalog()),
        "groups": list(GroupSpec::catalog()),
    }))
}

fn connectivity<T: Scalar + Serialize>(a: &ConnectivityArgs, name: &SpaceName, m: f64) -> Result<Outcome, CoarseError> {
    let x: FiltrationSpace<T> = builtin_space(name, a.depth)?;
    let margin = margin::<T>(m)?;
    let v = connect::detect_decomposition(&x, &scalars::<T>(&a.scales.0), a.depth, margin)?;
    let mut report = json!({
        "outcome": v.outcome,
        "depth": v.depth,
        "scales": to_json(&v.scales),
        "far_threshold": to_json(&x.far_threshold(a.depth, margin)),
        "witness": Value::Null,
    });
    if let Some(w) = &v.witness {
        let mut summary = to_json(&w.summary());
        if a.verify {
            summary["exhaustive_check"] = json!(w.verify_exhaustive().is_ok());
        }
        report["witness"] = summary;
    }
    Ok(Outcome::done(report))
}

fn coproduct<T: Scalar + Serialize>(a: &CoproductArgs, left: &SpaceName, right: &SpaceName) -> Result<Outcome, CoarseError> {
    let x: FiltrationSpace<T> = builtin_space(left, a.depth)?;
    let y: FiltrationSpace<T> = builtin_space(right, a.depth)?;
    let (space, level) = match &a.mode {
        None => {
            let (_, f) = binary_coproduct(&x, &y, 0, 0)?;
            let level = f.max_level();
            (f.deepest().clone(), level)
        }
        Some(mode) => {
            let mode: CoproductMode = mode.parse()?;
            let (_, f, _) = countable_coproduct(&[x, y], None, mode)?;
            let level = f.max_level();
            (f.deepest().clone(), level)
        }
    };
    let file = CustomSpaceFile::from_space(&space);
    match &a.out {
        None => Ok(Outcome::done(to_json(&file))),
        Some(path) => {
            std::fs::write(path, serde_json::to_string_pretty(&file)?)?;
            Ok(Outcome::done(json!({
                "mode": a.mode.clone().unwrap_or_else(|| "binary".into()),
                "level": level,
                "points": space.len(),
                "written": path.display().to_string(),
            })))
        }
    }
}

fn excisive<T: Scalar + Serialize>(a: &ExcisiveArgs, name: &SpaceName) -> Result<Outcome, CoarseError> {
    let depths = usizes(&a.depths.0, "depth")?;
    let deepest = *depths.iter().max().unwrap();
    let x: FiltrationSpace<T> = builtin_space(name, deepest)?;
    let sa: SubsetSpec = a.a.parse()?;
    let sb: SubsetSpec = a.b.parse()?;
    let cover = CoverDecomposition::from_specs(x, &sa, &sb)?;
    let p = excisive_profile(&cover, &scalars::<T>(&a.radii.0), &depths)?;
    Ok(Outcome::done(json!({
        "verdict": if p.is_divergent() { "divergent" } else { "excisive" },
        "profile": to_json(&p),
    })))
}

fn cocycle<T: Scalar + Serialize>(a: &CocycleArgs, name: &SpaceName, m: f64) -> Result<Outcome, CoarseError> {
    let x: FiltrationSpace<T> = builtin_space(name, a.depth)?;
    let margin = margin::<T>(m)?;
    let scales = scalars::<T>(&a.scales.0);
    let v = connect::detect_decomposition(&x, &scales, a.depth, margin)?;
    let Some(w) = v.witness else {
        return Ok(Outcome::done(json!({"outcome": v.outcome, "depth": a.depth, "cocycle": Value::Null})));
    };
    let f = cohomology::cocycle_from_decomposition(&w)?;
    let profile = cohomology::cocontrolled_profile(&f, &scales, &cohomology::profile_depths(a.depth))?;
    let mut report = json!({
        "outcome": v.outcome,
        "depth": a.depth,
        "cocycle": {
            "support": f.support_len(),
            "is_cocycle": f.is_cocycle(),
            "profile": to_json(&profile),
        },
    });
    if let Some(path) = &a.out {
        let file = f.to_file(&name.to_string(), a.depth);
        std::fs::write(path, serde_json::to_string_pretty(&file)?)?;
        report["written"] = json!(path.display().to_string());
    }
    Ok(Outcome::done(report))
}

fn triviality<T: Scalar + Serialize>(a: &TrivialityArgs, file: CochainFile, name: &SpaceName, m: f64) -> Result<Outcome, CoarseError> {
    let level = file.level;
    let x: FiltrationSpace<T> = builtin_space(name, level)?;
    x.check_depth(level)?;
    let space = Arc::new(x.level(level)?);
    let f = file.into_cochain(space)?;
    let far = x.far_threshold(level, margin::<T>(m)?);
    let verdict = cohomology::triviality_test(&f, far, &scalars::<T>(&a.scales.0), level)?;
    let report = match &verdict {
        TrivialityVerdict::Trivial { potential, anchor } => json!({
            "verdict": "trivial",
            "depth": level,
            "anchor": f.space().label(*anchor),
            "potential": potential
                .support()
                .into_iter()
                .map(|(t, v)| json!({"point": f.space().label(t[0]), "value": v}))
                .collect::<Vec<_>>(),
        }),
        TrivialityVerdict::Nontrivial { witness, classes } => json!({
            "verdict": "nontrivial",
            "depth": level,
            "classes": classes,
            "witness": to_json(&witness.summary()),
        }),
    };
    Ok(Outcome::done(report))
}

fn ends(a: &EndsArgs) -> Result<Outcome, CoarseError> {
    let g = a.group.parse::<GroupSpec>()?.build()?;
    let inner: Vec<u32> = usizes(&a.inner.0, "radius")?.into_iter().map(|x| x as u32).collect();
    let e = groups::ends_estimate(g.as_ref(), &inner, a.outer)?;
    Ok(Outcome {
        conclusive: e.verdict != groups::EndsVerdict::Inconclusive,
        report: to_json(&e),
    })
}

fn corona(a: &CoronaArgs) -> Result<Outcome, CoarseError> {
    let g = a.group.parse::<GroupSpec>()?.build()?;
    let v = groups::corona_verdict(g.as_ref(), a.budget)?;
    Ok(Outcome {
        conclusive: v.agrees,
        report: to_json(&v),
    })
}

fn algebra(max_ground: usize, max_generators: usize) -> Result<Outcome, CoarseError> {
    let r = coarse_algebra::verify_lemmas(max_ground, max_generators)?;
    let mut report = to_json(&r);
    report["passed"] = json!(r.passed());
    Ok(Outcome::done(report))
}

fn run(cli: &Cli) -> Result<(&'static str, Value, Outcome), CoarseError> {
    let m = cli.margin;
    Ok(match &cli.command {
        Command::Spaces => ("spaces", json!({}), spaces()),
        Command::Analyze(Analyze::Connectivity(a)) => {
            let name: SpaceName = a.space.parse()?;
            let input = json!({"space": name.to_string(), "scales": a.scales.0, "depth": a.depth});
            ("analyze connectivity", input, dispatch!(&name, connectivity(a, &name, m))?)
        }
        Command::Coproduct(a) => {
            let (l, r): (SpaceName, SpaceName) = (a.left.parse()?, a.right.parse()?);
            let input = json!({"left": l.to_string(), "right": r.to_string(), "mode": a.mode, "depth": a.depth});
            let reals = needs_reals(&l)? || needs_reals(&r)?;
            let out = if reals { coproduct::<f64>(a, &l, &r)? } else { coproduct::<i64>(a, &l, &r)? };
            ("coproduct", input, out)
        }
        Command::Excisive(a) => {
            let name: SpaceName = a.space.parse()?;
            let input = json!({"space": name.to_string(), "A": a.a, "B": a.b, "radii": a.radii.0, "depths": a.depths.0});
            ("excisive", input, dispatch!(&name, excisive(a, &name))?)
        }
        Command::Cohomology(Cohomology::Cocycle(a)) => {
            let name: SpaceName = a.space.parse()?;
            let input = json!({"space": name.to_string(), "depth": a.depth, "scales": a.scales.0});
            ("cohomology cocycle", input, dispatch!(&name, cocycle(a, &name, m))?)
        }
        Command::Cohomology(Cohomology::Triviality(a)) => {
            let file: CochainFile = serde_json::from_str(&std::fs::read_to_string(&a.cochain)?)?;
            let name: SpaceName = file.space.parse()?;
            let input = json!({"cochain": a.cochain.display().to_string(), "space": name.to_string(), "scales": a.scales.0});
            let out = if needs_reals(&name)? {
                triviality::<f64>(a, file, &name, m)?
            } else {
                triviality::<i64>(a, file, &name, m)?
            };
            ("cohomology triviality", input, out)
        }
        Command::Ends(a) => {
            let input = json!({"group": a.group, "inner": a.inner.0, "outer": a.outer});
            ("ends", input, ends(a)?)
        }
        Command::Corona(a) => {
            let input = json!({"group": a.group, "budget": a.budget});
            ("corona", input, corona(a)?)
        }
        Command::CoarseAlgebra(Algebra::Verify { max_ground, max_generators }) => {
            let input = json!({"max_ground": max_ground, "max_generators": max_generators});
            ("coarse-algebra verify", input, algebra(*max_ground, *max_generators)?)
        }
    })
}

/// Flattens nested objects into `a.b.c  value` lines.
fn render_text(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    let key = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                render_text(&key(k), x, out);
            }
        }
        Value::Array(xs) if xs.is_empty() => out.push((prefix.to_string(), "[]".into())),
        Value::Array(xs) if xs.iter().all(|x| !x.is_object() && !x.is_array()) => {
            let parts: Vec<String> = xs.iter().map(scalar_text).collect();
            out.push((prefix.to_string(), parts.join(", ")));
        }
        Value::Array(xs) => {
            for (i, x) in xs.iter().enumerate() {
                render_text(&key(&i.to_string()), x, out);
            }
        }
        _ => out.push((prefix.to_string(), scalar_text(v))),
    }
}

fn scalar_text(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => "-".into(),
        other => other.to_string(),
    }
}

/// Writes the whole report at once; a closed pipe is not an error.
fn emit(text: String) {
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    match run(&cli) {
        Ok((command, input, outcome)) => {
            let is_file = matches!(&cli.command, Command::Coproduct(a) if a.out.is_none());
            if is_file {
                emit(serde_json::to_string_pretty(&outcome.report).unwrap() + "\n");
                return ExitCode::SUCCESS;
            }
            let mut report = Map::new();
            report.insert("command".into(), json!(command));
            let mut input = input;
            if let Value::Object(m) = &mut input {
                m.insert("seed".into(), json!(cli.seed));
                m.insert("margin".into(), json!(cli.margin));
            }
            report.insert("input".into(), input);
            report.insert("result".into(), outcome.report);
            if cli.timing {
                report.insert("elapsed_ms".into(), json!(start.elapsed().as_millis() as u64));
            }
            let report = Value::Object(report);
            if cli.json {
                emit(serde_json::to_string_pretty(&report).unwrap() + "\n");
            } else {
                let mut lines = Vec::new();
                render_text("", &report, &mut lines);
                let width = lines.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
                emit(lines.iter().map(|(k, v)| format!("{k:width$}  {v}\n")).collect());
            }
            if outcome.conclusive {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(CoarseError::Inconclusive(msg)) => {
            eprintln!("inconclusive: {msg}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
