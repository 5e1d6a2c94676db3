//! Command-line surface for the residue/blocking-set pipeline.
//!
//! Exit codes: 0 = member/trivially member (or success for non-decision
//! commands), 1 = non-member / not equivalent, 2 = usage or input error,
//! 3 = disagreement between the geometric decision and the numeric oracle
//! (which would falsify the underlying equivalence, i.e. a bug).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::{BigInt, BigUint};
use num_traits::ToPrimitive;
use serde_json::{json, Value};

use qblock::bridge::{realize, QFreeInteger, ResidueSet};
use qblock::equivalence::{common_embedding, geometric_q_equivalent};
use qblock::field_linalg::{gaussian_binomial, Subspace};
use qblock::geometry::{k_space_points, projective_triangle, second_smallest_blocking, PointSet};
use qblock::oracle::{decide, find_witness, verify_membership, Certificate, Decision, Verdict};

#[derive(Parser)]
#[command(
    name = "qblock",
    version,
    about = "Decide whether an integer set contains a q-th power residue modulo almost every N with at most k prime factors",
    long_about = None
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decide membership exactly via the k-blocking-set criterion
    Decide(DecideArgs),
    /// Run the numeric oracle over all admissible moduli up to a bound and
    /// cross-check it against the geometric decision
    Verify(VerifyArgs),
    /// Search for the smallest modulus admitting no residue from the set
    Witness(WitnessArgs),
    /// Construct extremal member sets (minimum size, second-smallest, or the
    /// planar projective triangle)
    Construct(ConstructArgs),
    /// Test two sets for geometric q-equivalence
    Equiv(EquivArgs),
    /// Print the projective point set associated with a set
    Map(MapArgs),
}

#[derive(Args)]
struct SetInput {
    /// Odd prime modulus q (required with --elements; must match --file if both given)
    #[arg(long)]
    q: Option<u64>,
    /// Comma-separated nonzero integers
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    elements: Option<Vec<i64>>,
    /// JSON file of the form {"q": 3, "elements": [2, 3, 6]}
    #[arg(long)]
    file: Option<PathBuf>,
}

impl SetInput {
    fn resolve(&self) -> Result<ResidueSet, String> {
        match (&self.elements, &self.file) {
            (Some(elements), None) => {
                let q = self.q.ok_or("--q is required with --elements")?;
                ResidueSet::from_integers(elements, q).map_err(|e| e.to_string())
            }
            (None, Some(path)) => {
                let rs = load_set_file(path)?;
                if let Some(q) = self.q {
                    if q != rs.q() {
                        return Err(format!("--q {} does not match file q {}", q, rs.q()));
                    }
                }
                Ok(rs)
            }
            (Some(_), Some(_)) => Err("give either --elements or --file, not both".into()),
            (None, None) => Err("no input set: use --elements or --file".into()),
        }
    }
}

fn load_set_file(path: &PathBuf) -> Result<ResidueSet, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}

#[derive(Args)]
struct DecideArgs {
    #[command(flatten)]
    input: SetInput,
    /// Maximum number of prime factors of the moduli
    #[arg(long, default_value_t = 1)]
    k: usize,
    /// Machine-readable output
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    input: SetInput,
    #[arg(long, default_value_t = 1)]
    k: usize,
    /// Largest modulus to test
    #[arg(long, default_value_t = 100_000)]
    bound: u64,
    /// Worker threads for the modulus scan
    #[arg(long, default_value_t = 1)]
    threads: usize,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct WitnessArgs {
    #[command(flatten)]
    input: SetInput,
    #[arg(long, default_value_t = 1)]
    k: usize,
    /// Largest modulus to try
    #[arg(long, default_value_t = 1_000_000)]
    bound: u64,
    /// Worker threads for the candidate scan
    #[arg(long, default_value_t = 1)]
    threads: usize,
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum ConstructKind {
    /// The classified minimum-size member: a k-space image over k+1 primes
    Minimum,
    /// The second-smallest minimal member: a cone over the projective
    /// triangle, over k+2 primes
    #[value(name = "second_smallest")]
    SecondSmallest,
    /// The planar projective triangle over 3 primes (k = 1)
    Triangle,
}

#[derive(Args)]
struct ConstructArgs {
    /// What to construct (may also be given as --kind)
    #[arg(value_enum)]
    kind: Option<ConstructKind>,
    #[arg(long = "kind", value_enum, conflicts_with = "kind")]
    kind_flag: Option<ConstructKind>,
    /// Odd prime modulus
    #[arg(long)]
    q: u64,
    #[arg(long)]
    k: Option<usize>,
    /// Distinct primes realizing the point set as integers
    #[arg(long, value_delimiter = ',')]
    primes: Vec<u64>,
    /// Skip the blocking/minimality self-checks
    #[arg(long)]
    no_verify: bool,
    #[arg(long)]
    json: bool,
}

impl ConstructArgs {
    fn kind(&self) -> Result<ConstructKind, String> {
        self.kind
            .or(self.kind_flag)
            .ok_or_else(|| "construct needs a kind: minimum | second_smallest | triangle".into())
    }
}

#[derive(Args)]
struct EquivArgs {
    /// Modulus q shared by both sets (required with --elements)
    #[arg(long)]
    q: Option<u64>,
    /// Inline comma-separated set; may be given twice (first occurrence =
    /// set A, second = set B)
    #[arg(long, allow_hyphen_values = true)]
    elements: Vec<String>,
    /// Set from a JSON file; may be given twice. With one --elements and one
    /// --file, the inline set is A and the file is B.
    #[arg(long)]
    file: Vec<PathBuf>,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct MapArgs {
    #[command(flatten)]
    input: SetInput,
    #[arg(long)]
    json: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Decide(args) => cmd_decide(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Witness(args) => cmd_witness(args),
        Command::Construct(args) => cmd_construct(args),
        Command::Equiv(args) => cmd_equiv(args),
        Command::Map(args) => cmd_map(args),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}

fn fmt_vec(v: &[u64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
    format!("({})", parts.join(","))
}

fn fmt_points(ps: &PointSet, per_line: usize) -> String {
    let mut lines = Vec::new();
    let coords: Vec<String> = ps.iter().map(|p| fmt_vec(p.coords())).collect();
    for chunk in coords.chunks(per_line.max(1)) {
        lines.push(format!("  {}", chunk.join(" ")));
    }
    lines.join("\n")
}

fn fmt_biguints(values: &[BigUint]) -> String {
    let parts: Vec<String> = values.iter().map(|v| v.to_string()).collect();
    parts.join(", ")
}

fn bigint_json(v: &BigInt) -> Value {
    match v.to_i64() {
        Some(small) => json!(small),
        None => json!(v.to_string()),
    }
}

fn biguint_json(v: &BigUint) -> Value {
    match v.to_u64() {
        Some(small) => json!(small),
        None => json!(v.to_string()),
    }
}

fn subspace_json(s: &Subspace) -> Value {
    json!({
        "dim": s.dim(),
        "basis": s.basis().row_vectors(),
    })
}

fn certificate_json(c: &Certificate) -> Value {
    match c {
        Certificate::PerfectPower(w) => json!({
            "type": "perfect_power",
            "element": bigint_json(w),
        }),
        Certificate::BlockingPointSet(_) => json!({ "type": "blocking_point_set" }),
        Certificate::SupportTooSmall { support, required } => json!({
            "type": "support_too_small",
            "support": support,
            "required": required,
        }),
        Certificate::UnblockedSubspace(s) => json!({
            "type": "unblocked_subspace",
            "subspace": subspace_json(s),
        }),
    }
}

fn set_summary_json(rs: &ResidueSet) -> Value {
    json!({
        "q": rs.q(),
        "elements": rs.raw_elements().iter().map(bigint_json).collect::<Vec<_>>(),
        "support": rs.support(),
        "reduced": rs.reduced().iter().map(|r| biguint_json(r.value())).collect::<Vec<_>>(),
        "delta": rs.delta().to_string(),
        "contains_perfect_power": rs.contains_perfect_power(),
    })
}

fn print_set_summary(rs: &ResidueSet) {
    let elements: Vec<String> = rs.raw_elements().iter().map(|e| e.to_string()).collect();
    println!("elements ({}): {}", elements.len(), elements.join(", "));
    let support: Vec<String> = rs.support().iter().map(|p| p.to_string()).collect();
    println!("support primes ({}): {}", support.len(), support.join(", "));
    let reduced: Vec<String> = rs.reduced().iter().map(|r| r.value().to_string()).collect();
    println!("reduced q-free set ({}): {}", reduced.len(), reduced.join(", "));
    println!("delta = {}", rs.delta());
}

fn print_decision(rs: &ResidueSet, k: usize, decision: &Decision) {
    println!("verdict: {}", decision.verdict);
    println!("q = {}, k = {}", rs.q(), k);
    print_set_summary(rs);
    let bound = gaussian_binomial(k + 1, 1, rs.q());
    if let Some(ps) = &decision.point_set {
        println!(
            "point set: {} points in PG(F_{}^{}) (minimum size of a {}-blocking set: {})",
            ps.len(),
            rs.q(),
            ps.ambient_dim(),
            k,
            bound
        );
        println!("{}", fmt_points(ps, 8));
    }
    match &decision.certificate {
        Certificate::PerfectPower(w) => {
            println!("certificate: {w} is a perfect {}-th power", rs.q());
        }
        Certificate::BlockingPointSet(_) => {
            println!("certificate: the point set blocks every codimension-{k} subspace");
        }
        Certificate::SupportTooSmall { support, required } => {
            println!(
                "certificate: support has {support} primes but membership needs at least {required}"
            );
        }
        Certificate::UnblockedSubspace(s) => {
            println!(
                "certificate: unblocked codimension-{k} subspace (dimension {}) with basis",
                s.dim()
            );
            for row in s.basis().row_vectors() {
                println!("  {}", fmt_vec(&row));
            }
        }
    }
}

fn verdict_exit(verdict: Verdict) -> u8 {
    match verdict {
        Verdict::TriviallyMember | Verdict::Member => 0,
        Verdict::NonMember => 1,
    }
}

fn cmd_decide(args: DecideArgs) -> Result<u8, String> {
    let rs = args.input.resolve()?;
    if args.k == 0 {
        return Err("--k must be at least 1".into());
    }
    let decision = decide(&rs, args.k).map_err(|e| e.to_string())?;
    if args.json {
        let out = json!({
            "command": "decide",
            "k": args.k,
            "set": set_summary_json(&rs),
            "verdict": decision.verdict.to_string(),
            "point_set": decision.point_set,
            "bose_burton_bound": gaussian_binomial(args.k + 1, 1, rs.q()) as u64,
            "certificate": certificate_json(&decision.certificate),
        });
        println!("{}", serde_json::to_string_pretty(&out).unwrap());
    } else {
        print_decision(&rs, args.k, &decision);
    }
    Ok(verdict_exit(decision.verdict))
}

fn cmd_verify(args: VerifyArgs) -> Result<u8, String> {
    let rs = args.input.resolve()?;
    if args.k == 0 {
        return Err("--k must be at least 1".into());
    }
    let decision = decide(&rs, args.k).map_err(|e| e.to_string())?;
    let report = verify_membership(&rs, args.k, args.bound, args.threads.max(1));
    // a counterexample against a decided member would falsify the equivalence
    let contradiction = matches!(
        decision.verdict,
        Verdict::Member | Verdict::TriviallyMember
    ) && !report.is_verified();
    let inconclusive = decision.verdict == Verdict::NonMember && report.is_verified();
    if args.json {
        let out = json!({
            "command": "verify",
            "k": args.k,
            "set": set_summary_json(&rs),
            "decide_verdict": decision.verdict.to_string(),
            "report": report,
            "consistent": !contradiction,
            "inconclusive": inconclusive,
        });
        println!("{}", serde_json::to_string_pretty(&out).unwrap());
    } else {
        println!("decide verdict: {}", decision.verdict);
        match report.counterexample() {
            Some(m) => println!("oracle: counterexample N = {m}"),
            None => println!(
                "oracle: verified up to {} ({} moduli checked, {:.2?})",
                report.bound, report.checked, report.elapsed
            ),
        }
        if contradiction {
            println!("INCONSISTENT: decision and oracle disagree; this is a bug");
        } else if inconclusive {
            println!("consistent: non-member, no witness below the bound (the witness exceeds it)");
        } else {
            println!("consistent");
        }
    }
    Ok(if contradiction { 3 } else { 0 })
}

fn cmd_witness(args: WitnessArgs) -> Result<u8, String> {
    let rs = args.input.resolve()?;
    if args.k == 0 {
        return Err("--k must be at least 1".into());
    }
    let decision = decide(&rs, args.k).map_err(|e| e.to_string())?;
    let witness = find_witness(&rs, args.k, args.bound, args.threads.max(1));
    let contradiction = matches!(
        decision.verdict,
        Verdict::Member | Verdict::TriviallyMember
    ) && witness.is_some();
    if args.json {
        let out = json!({
            "command": "witness",
            "k": args.k,
            "bound": args.bound,
            "set": set_summary_json(&rs),
            "decide_verdict": decision.verdict.to_string(),
            "witness": witness.as_ref().map(|m| m.value()),
            "witness_factors": witness.as_ref().map(|m| m.factors().to_vec()),
            "consistent": !contradiction,
        });
        println!("{}", serde_json::to_string_pretty(&out).unwrap());
    } else {
        println!("decide verdict: {}", decision.verdict);
        match &witness {
            Some(m) => println!(
                "witness: N = {m}; no element of the set is a q-th power residue mod N (q = {})",
                rs.q()
            ),
            None => println!(
                "no witness below {} (inconclusive: not a proof of membership)",
                args.bound
            ),
        }
        if contradiction {
            println!("INCONSISTENT: witness found for a decided member; this is a bug");
        }
    }
    Ok(if contradiction { 3 } else { 0 })
}

struct Construction {
    point_set: PointSet,
    expected_size: u128,
    k: usize,
    check_k_space_free: bool,
}

fn build_construction(args: &ConstructArgs) -> Result<Construction, String> {
    let q = args.q;
    match args.kind()? {
        ConstructKind::Minimum => {
            let k = args.k.ok_or("--k is required for minimum")?;
            if k == 0 {
                return Err("--k must be at least 1".into());
            }
            if args.primes.len() != k + 1 {
                return Err(format!(
                    "minimum needs exactly k+1 = {} primes, got {}",
                    k + 1,
                    args.primes.len()
                ));
            }
            let full = Subspace::full(q, k + 1).map_err(|e| e.to_string())?;
            Ok(Construction {
                point_set: k_space_points(&full),
                expected_size: gaussian_binomial(k + 1, 1, q),
                k,
                check_k_space_free: false,
            })
        }
        ConstructKind::SecondSmallest => {
            let k = args.k.ok_or("--k is required for second_smallest")?;
            if args.primes.len() != k + 2 {
                return Err(format!(
                    "second_smallest needs exactly k+2 = {} primes, got {}",
                    k + 2,
                    args.primes.len()
                ));
            }
            let ps = second_smallest_blocking(k + 2, k, q).map_err(|e| e.to_string())?;
            let expected =
                gaussian_binomial(k + 1, 1, q) + (q as u128).pow(k as u32 - 1) * (q as u128 + 1) / 2;
            Ok(Construction {
                point_set: ps,
                expected_size: expected,
                k,
                check_k_space_free: true,
            })
        }
        ConstructKind::Triangle => {
            if let Some(k) = args.k {
                if k != 1 {
                    return Err("the projective triangle is a 1-blocking set; use --k 1".into());
                }
            }
            if args.primes.len() != 3 {
                return Err(format!(
                    "triangle needs exactly 3 primes, got {}",
                    args.primes.len()
                ));
            }
            Ok(Construction {
                point_set: projective_triangle(q).map_err(|e| e.to_string())?,
                expected_size: 3 * (q as u128 + 1) / 2,
                k: 1,
                check_k_space_free: true,
            })
        }
    }
}

fn cmd_construct(args: ConstructArgs) -> Result<u8, String> {
    let construction = build_construction(&args)?;
    let ps = &construction.point_set;
    let k = construction.k;
    let integers = realize(ps, &args.primes).map_err(|e| e.to_string())?;

    // rebuild the set from known factorizations so self-checks never refactor
    // large integers
    let reduced: Vec<QFreeInteger> = ps
        .iter()
        .map(|p| {
            let powers: Vec<(u64, u32)> = args
                .primes
                .iter()
                .copied()
                .zip(p.coords().iter().map(|&e| e as u32))
                .collect();
            QFreeInteger::from_prime_powers(args.q, &powers).map_err(|e| e.to_string())
        })
        .collect::<Result<_, String>>()?;
    let rs = ResidueSet::from_reduced(args.q, reduced).map_err(|e| e.to_string())?;

    let size_ok = integers.len() as u128 == construction.expected_size;
    let mut checks = None;
    if !args.no_verify {
        let decision = decide(&rs, k).map_err(|e| e.to_string())?;
        let blocking = decision.verdict == Verdict::Member;
        let minimal = ps.is_minimal_blocking(k).map_err(|e| e.to_string())?;
        let k_space_free = if construction.check_k_space_free {
            Some(!ps.contains_k_space(k).map_err(|e| e.to_string())?)
        } else {
            None
        };
        checks = Some((blocking, minimal, k_space_free));
    }

    let all_ok = size_ok
        && checks.is_none_or(|(blocking, minimal, free)| {
            blocking && minimal && free.unwrap_or(true)
        });

    if args.json {
        let out = json!({
            "command": "construct",
            "kind": match args.kind()? {
                ConstructKind::Minimum => "minimum",
                ConstructKind::SecondSmallest => "second_smallest",
                ConstructKind::Triangle => "triangle",
            },
            "q": args.q,
            "k": k,
            "primes": args.primes,
            "elements": integers.iter().map(biguint_json).collect::<Vec<_>>(),
            "size": integers.len(),
            "expected_size": construction.expected_size as u64,
            "point_set": ps,
            "checks": checks.map(|(blocking, minimal, free)| json!({
                "blocking": blocking,
                "minimal": minimal,
                "k_space_free": free,
            })),
        });
        println!("{}", serde_json::to_string_pretty(&out).unwrap());
    } else {
        println!(
            "constructed {} elements (expected {}) for q = {}, k = {k}",
            integers.len(),
            construction.expected_size,
            args.q
        );
        println!("elements: {}", fmt_biguints(&integers));
        println!("point set ({} points):", ps.len());
        println!("{}", fmt_points(ps, 8));
        match checks {
            Some((blocking, minimal, free)) => {
                println!("self-check: blocking = {blocking}, minimal = {minimal}");
                if let Some(free) = free {
                    println!("self-check: contains no {k}-space = {free}");
                }
            }
            None => println!("self-check skipped (--no-verify)"),
        }
    }
    if !all_ok {
        eprintln!("error: construction self-check failed; this is a bug");
        return Ok(3);
    }
    Ok(0)
}

fn parse_elements(text: &str) -> Result<Vec<i64>, String> {
    text.split(',')
        .map(|part| {
            part.trim()
                .parse::<i64>()
                .map_err(|e| format!("bad element {part:?}: {e}"))
        })
        .collect()
}

fn cmd_equiv(args: EquivArgs) -> Result<u8, String> {
    let mut sets: Vec<ResidueSet> = Vec::new();
    for text in &args.elements {
        let q = args.q.ok_or("--q is required with --elements")?;
        let elements = parse_elements(text)?;
        sets.push(ResidueSet::from_integers(&elements, q).map_err(|e| e.to_string())?);
    }
    for path in &args.file {
        sets.push(load_set_file(path)?);
    }
    if sets.len() != 2 {
        return Err(format!(
            "equiv needs exactly two sets (via --elements/--file), got {}",
            sets.len()
        ));
    }
    let (a, b) = (&sets[0], &sets[1]);
    let witness = geometric_q_equivalent(a, b).map_err(|e| e.to_string())?;
    if args.json {
        let (pa, _) = common_embedding(a, b).map_err(|e| e.to_string())?;
        let out = json!({
            "command": "equiv",
            "q": a.q(),
            "ambient_dim": pa.ambient_dim(),
            "set_a": set_summary_json(a),
            "set_b": set_summary_json(b),
            "equivalent": witness.is_some(),
            "witness": witness.as_ref().map(|w| w.matrix().row_vectors()),
        });
        println!("{}", serde_json::to_string_pretty(&out).unwrap());
    } else {
        match &witness {
            Some(w) => {
                println!("equivalent: yes");
                println!("witness matrix (acts on exponent vectors over the union support):");
                for row in w.matrix().row_vectors() {
                    println!("  {}", fmt_vec(&row));
                }
            }
            None => println!("equivalent: no"),
        }
    }
    Ok(if witness.is_some() { 0 } else { 1 })
}

fn cmd_map(args: MapArgs) -> Result<u8, String> {
    let rs = args.input.resolve()?;
    let ps = rs.pi_q().map_err(|e| e.to_string())?;
    if args.json {
        let out = json!({
            "command": "map",
            "set": set_summary_json(&rs),
            "point_set": ps,
        });
        println!("{}", serde_json::to_string_pretty(&out).unwrap());
    } else {
        print_set_summary(&rs);
        println!(
            "point set: {} points in PG(F_{}^{})",
            ps.len(),
            rs.q(),
            ps.ambient_dim()
        );
        println!("{}", fmt_points(&ps, 8));
    }
    Ok(0)
}
