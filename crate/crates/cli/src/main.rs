//! Command-line surface for the exact Buck-density laboratory.
//!
//! Subcommands: `construct`, `expand`, `sumset`, `density`, `verify`,
//! `counterexample`. Exit code 0 means every check passed, 1 means some
//! check failed, 2 means the invocation was malformed. Output is
//! deterministic for identical invocations; `--format records` emits
//! line-delimited JSON with every numeric as an exact `p/q` string.

mod alpha;
mod report;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_bigint::BigInt;
use num_traits::One;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use buckdens::arith::{rational_from_str, rational_to_fraction_string, Rational};
use buckdens::construct::{
    construct_basis, construct_rational, construct_translate, counterexample_sparsity,
    counterexample_witness, sparsity_excludes_progressions, verify_sumset_bound, Alpha,
    BasisDensity, IrrationalSandwich, SumsetBoundInstance, TranslateResult,
};
use buckdens::density::{
    additivity_disjoint, buck_upper, check_axioms, staged_density_interval, two_squares_residues,
};
use buckdens::estimate::{
    factorial_interval_table, log_ratio, prefix_ratio, window_extrema,
};
use buckdens::expansion::expand;
use buckdens::interval::IntervalReal;
use buckdens::periodic::EventuallyPeriodicSet;
use report::{Format, Report};

#[derive(Parser)]
#[command(
    name = "buckdens",
    version,
    about = "Exact densities of eventually periodic sets, sumset constructions, and verification sweeps"
)]
struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value = "text")]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a prescribed-density construction and report exact densities.
    Construct(ConstructArgs),
    /// Positional expansion table of an irrational alpha.
    Expand(ExpandArgs),
    /// Exact sumsets of eventually periodic sets.
    Sumset(SumsetArgs),
    /// Densities and finite-truncation estimators.
    Density(DensityArgs),
    /// Verification sweeps with seeded randomness.
    Verify(VerifyArgs),
    /// Certificates for the set that escapes the density's domain.
    Counterexample(CounterexampleArgs),
}

#[derive(Args)]
struct ConstructArgs {
    /// Construction family: k-fold sumset density, translate sumset, or
    /// additive basis.
    #[arg(long, value_parser = ["kfold", "translate", "basis"])]
    target: String,
    /// Density target: p/q, sqrt(p/q)[+-p/q], golden-conjugate, or `digits:<file>`.
    #[arg(long)]
    alpha: String,
    /// Family size: kA has density k*alpha/n for k <= n.
    #[arg(long, default_value_t = 1)]
    n: u64,
    /// Report this k only (default: every k <= n).
    #[arg(long)]
    k: Option<u32>,
    /// Stage for staged (irrational) constructions.
    #[arg(long, default_value_t = 4)]
    stage: u32,
    /// Finite set B for the translate construction, in set grammar.
    #[arg(long)]
    b: Option<String>,
    /// Doubling-check limit for the basis construction.
    #[arg(long, default_value_t = 10_000)]
    limit: u64,
}

#[derive(Args)]
struct ExpandArgs {
    #[arg(long)]
    alpha: String,
    #[arg(long, default_value_t = 1)]
    n: u64,
    #[arg(long, default_value_t = 5)]
    depth: u32,
}

#[derive(Args)]
struct SumsetArgs {
    /// Left operand, in set grammar.
    #[arg(long)]
    lhs: String,
    /// Right operand for a binary sumset.
    #[arg(long)]
    rhs: Option<String>,
    /// Fold count for a k-fold sumset of the left operand.
    #[arg(long)]
    k: Option<u32>,
}

#[derive(Args)]
struct DensityArgs {
    /// The set to measure, in set grammar.
    #[arg(long)]
    set: Option<String>,
    /// buck | prefix | window-min | window-max | log | two-squares-cover.
    #[arg(long, default_value = "buck", value_parser = [
        "buck", "prefix", "window-min", "window-max", "log", "two-squares-cover",
    ])]
    estimator: String,
    /// Truncation for finite estimators.
    #[arg(long = "N", default_value_t = 10_000)]
    n_limit: u64,
    /// Window length for the window estimators.
    #[arg(long, default_value_t = 100)]
    window_len: u64,
    /// Modulus for the two-squares cover bound.
    #[arg(long)]
    modulus: Option<u64>,
    /// Expected exact value; a mismatch fails the command.
    #[arg(long)]
    expect: Option<String>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Which sweep to run.
    #[arg(long, default_value = "all", value_parser = [
        "case1", "axioms", "additivity", "sumset-bound", "expansion",
        "sandwich", "translate", "basis", "all",
    ])]
    suite: String,
    /// Seed for the randomized sweeps.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of randomized instances per sweep.
    #[arg(long, default_value_t = 50)]
    samples: u32,
    /// Deepest sandwich stage exercised.
    #[arg(long, default_value_t = 4)]
    stage: u32,
}

#[derive(Args)]
struct CounterexampleArgs {
    /// Check every residue class mod k for k up to this bound.
    #[arg(long, default_value_t = 20)]
    kmax: u64,
    /// Scale for the sparsity bound.
    #[arg(long, default_value_t = 1_000_000_000_000)]
    sparsity_m: u64,
    /// Depth of the factorial-interval table (at most 4).
    #[arg(long, default_value_t = 3)]
    dstar_nmax: u32,
}

fn main() -> ExitCode {
    // Die quietly when the consumer closes the pipe (e.g. `... | head`).
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Construct(args) => run_construct(cli.format, args),
        Command::Expand(args) => run_expand(cli.format, args),
        Command::Sumset(args) => run_sumset(cli.format, args),
        Command::Density(args) => run_density(cli.format, args),
        Command::Verify(args) => run_verify(cli.format, args),
        Command::Counterexample(args) => run_counterexample(cli.format, args),
    };
    match result {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}

fn parse_set(text: &str) -> Result<EventuallyPeriodicSet, String> {
    EventuallyPeriodicSet::parse(text).map_err(|e| e.to_string())
}

fn parse_finite_set(text: &str) -> Result<Vec<u64>, String> {
    let set = parse_set(text)?;
    if !set.is_finite() {
        return Err(format!("expected a finite set, got {}", set.render()));
    }
    Ok(set.exceptions().to_vec())
}

fn run_construct(format: Format, args: &ConstructArgs) -> Result<ExitCode, String> {
    let alpha = alpha::parse_alpha(&args.alpha)?;
    if args.n == 0 {
        return Err("n must be positive".into());
    }
    if args.b.is_some() && args.target != "translate" {
        return Err("--b only applies to the translate construction".into());
    }
    let mut report = Report::new(format, "construct");
    match args.target.as_str() {
        "kfold" => construct_kfold(&mut report, args, &alpha)?,
        "translate" => {
            let b_text = args
                .b
                .as_deref()
                .ok_or_else(|| "--b is required for the translate construction".to_string())?;
            let b = parse_finite_set(b_text)?;
            construct_translate_cmd(&mut report, args, &alpha, &b)?;
        }
        "basis" => {
            let basis = construct_basis(&alpha, args.stage, args.limit).map_err(|e| e.to_string())?;
            report.heading("additive basis A = {sums of two squares} ∪ Y");
            report.check("zero-in-A", basis.zero_in_a, "0 ∈ A");
            report.check(
                "gcd",
                basis.gcd_of_prefix == 1,
                &format!("gcd(A ∩ [0,100]) = {}", basis.gcd_of_prefix),
            );
            report.check(
                "doubling",
                basis.doubling_holds,
                &format!("2A covers [0, {}]", basis.doubling_limit),
            );
            match &basis.y_density {
                BasisDensity::Exact(d) => report.value("density(Y)", d),
                BasisDensity::Interval { stage, lo, hi } => {
                    report.row("y-density-stage", vec![("stage", stage.to_string())]);
                    report.interval("density(Y)", lo, hi);
                }
            }
            for (m, bound) in &basis.q_cover_bounds {
                report.value(&format!("cover-bound(mod {m})"), bound);
            }
        }
        other => return Err(format!("unknown target {other:?}")),
    }
    Ok(report.finish())
}

fn construct_kfold(report: &mut Report, args: &ConstructArgs, alpha: &Alpha) -> Result<(), String> {
    let ks: Vec<u32> = match args.k {
        Some(k) => {
            if k == 0 || k as u64 > args.n {
                return Err(format!("k must satisfy 1 <= k <= n = {}", args.n));
            }
            vec![k]
        }
        None => (1..=args.n as u32).collect(),
    };
    match alpha {
        Alpha::Rational(r) => {
            let (a, b) = fraction_parts(r)?;
            let set = construct_rational(a, b, args.n).map_err(|e| e.to_string())?;
            report.set("A", &set);
            for k in ks {
                let ka = set.k_fold_sumset(k).map_err(|e| e.to_string())?;
                report.set(&format!("{k}A"), &ka);
                let density = buck_upper(&ka);
                report.value(&format!("buck({k}A)"), &density);
                let expected = r * Rational::new(BigInt::from(k), BigInt::from(args.n));
                report.check(
                    &format!("density({k}A)"),
                    density == expected,
                    &format!("buck = {}, target k*alpha/n = {}",
                        rational_to_fraction_string(&density),
                        rational_to_fraction_string(&expected)),
                );
            }
        }
        Alpha::Irrational(x) => {
            let sandwich = IrrationalSandwich::new(x.clone(), args.n);
            let staged = sandwich.staged();
            let detail = sandwich.detail(args.stage).map_err(|e| e.to_string())?;
            report.set("inner-stage", &detail.inner);
            report.set("outer-stage", &detail.outer);
            for k in ks {
                let (lo, hi) =
                    staged_density_interval(&staged, args.stage, k).map_err(|e| e.to_string())?;
                report.interval(&format!("buck({k}A) stage {}", args.stage), &lo, &hi);
                report.check(
                    &format!("interval({k}A)"),
                    lo <= hi,
                    "staged interval is ordered",
                );
            }
        }
    }
    Ok(())
}

fn construct_translate_cmd(
    report: &mut Report,
    args: &ConstructArgs,
    alpha: &Alpha,
    b: &[u64],
) -> Result<(), String> {
    let t = construct_translate(alpha, b).map_err(|e| e.to_string())?;
    if let Some((k, h)) = t.params {
        report.row(
            "parameters",
            vec![("k", k.to_string()), ("h", h.to_string()), ("y", t.y.to_string())],
        );
    }
    match &t.result {
        TranslateResult::Exact { a, a_plus_b, density } => {
            report.set("A", a);
            report.set("A+B", a_plus_b);
            report.value("buck(A+B)", density);
            if let Alpha::Rational(r) = alpha {
                report.check(
                    "density(A+B)",
                    density == r,
                    &format!("buck(A+B) = {}", rational_to_fraction_string(density)),
                );
            }
        }
        TranslateResult::Staged(staged) => {
            let stage = staged.stage(args.stage).map_err(|e| e.to_string())?;
            report.set("inner-stage(A+B)", &stage.inner);
            report.set("outer-stage(A+B)", &stage.outer);
            let (lo, hi) =
                staged_density_interval(staged, args.stage, 1).map_err(|e| e.to_string())?;
            report.interval(&format!("buck(A+B) stage {}", args.stage), &lo, &hi);
            report.check("interval(A+B)", lo <= hi, "staged interval is ordered");
        }
    }
    Ok(())
}

fn fraction_parts(r: &Rational) -> Result<(u64, u64), String> {
    if r < &Rational::from(BigInt::from(0)) || r > &Rational::one() {
        return Err(format!("alpha = {r} outside [0,1]"));
    }
    let a = r.numer().to_string().parse::<u64>().map_err(|_| "alpha numerator too large")?;
    let b = r.denom().to_string().parse::<u64>().map_err(|_| "alpha denominator too large")?;
    Ok((a, b))
}

fn run_expand(format: Format, args: &ExpandArgs) -> Result<ExitCode, String> {
    let alpha = alpha::parse_alpha(&args.alpha)?;
    let x = match alpha {
        Alpha::Irrational(x) => x,
        Alpha::Rational(_) => {
            return Err("expansion requires an irrational alpha (named constant or digits file)".into())
        }
    };
    if args.n == 0 {
        return Err("n must be positive".into());
    }
    let mut report = Report::new(format, "expand");
    let expansion = expand(&x, args.n, args.depth).map_err(|e| e.to_string())?;
    report.heading(&format!(
        "expansion of {x} with n = {}: alpha = sum of n!*beta_i / (q_1...q_i)",
        args.n
    ));
    for (idx, step) in expansion.steps.iter().enumerate() {
        let i = idx + 1;
        let ps = expansion.partial_sum(i);
        report.row(
            "step",
            vec![
                ("i", i.to_string()),
                ("q", step.q.to_string()),
                ("beta", step.beta.to_string()),
                ("partial_sum", rational_to_fraction_string(&ps)),
                (
                    "remainder_lo",
                    rational_to_fraction_string(&step.alpha_enclosure.lo),
                ),
                (
                    "remainder_hi",
                    rational_to_fraction_string(&step.alpha_enclosure.hi),
                ),
            ],
        );
    }
    if expansion.capped {
        report.row(
            "note",
            vec![(
                "message",
                format!(
                    "stage budget reached after {} steps (modulus-product cap)",
                    expansion.steps.len()
                ),
            )],
        );
    }
    report.check(
        "steps-produced",
        !expansion.steps.is_empty(),
        &format!("{} steps", expansion.steps.len()),
    );
    Ok(report.finish())
}

fn run_sumset(format: Format, args: &SumsetArgs) -> Result<ExitCode, String> {
    let lhs = parse_set(&args.lhs)?;
    let mut report = Report::new(format, "sumset");
    let result = match (&args.rhs, args.k) {
        (Some(rhs), None) => {
            let rhs = parse_set(rhs)?;
            lhs.sumset(&rhs).map_err(|e| e.to_string())?
        }
        (None, Some(k)) => {
            if k == 0 {
                return Err("k must be positive".into());
            }
            lhs.k_fold_sumset(k).map_err(|e| e.to_string())?
        }
        (None, None) => return Err("provide --rhs for a binary sumset or --k for a k-fold one".into()),
        (Some(_), Some(_)) => return Err("--rhs and --k are mutually exclusive".into()),
    };
    report.set("sumset", &result);
    report.value("buck", &buck_upper(&result));
    Ok(report.finish())
}

fn run_density(format: Format, args: &DensityArgs) -> Result<ExitCode, String> {
    if args.n_limit == 0 {
        return Err("--N must be positive".into());
    }
    let mut report = Report::new(format, "density");
    let value = match args.estimator.as_str() {
        "two-squares-cover" => {
            let m = args
                .modulus
                .ok_or_else(|| "--modulus is required for two-squares-cover".to_string())?;
            if m == 0 {
                return Err("--modulus must be positive".into());
            }
            let residues = two_squares_residues(m);
            Rational::new(BigInt::from(residues.len()), BigInt::from(m))
        }
        estimator => {
            let set_text = args
                .set
                .as_deref()
                .ok_or_else(|| format!("--set is required for estimator {estimator}"))?;
            let set = parse_set(set_text)?;
            match estimator {
                "buck" => buck_upper(&set),
                "prefix" => prefix_ratio(&set, args.n_limit),
                "window-min" => {
                    check_window(args)?;
                    window_extrema(&set, args.n_limit, args.window_len).0
                }
                "window-max" => {
                    check_window(args)?;
                    window_extrema(&set, args.n_limit, args.window_len).1
                }
                "log" => log_ratio(&set, args.n_limit),
                other => return Err(format!("unknown estimator {other:?}")),
            }
        }
    };
    report.value(&args.estimator, &value);
    if let Some(expect) = &args.expect {
        let expected = rational_from_str(expect).map_err(|e| e.to_string())?;
        report.check(
            "expected-value",
            value == expected,
            &format!(
                "got {}, expected {}",
                rational_to_fraction_string(&value),
                rational_to_fraction_string(&expected)
            ),
        );
    }
    Ok(report.finish())
}

fn check_window(args: &DensityArgs) -> Result<(), String> {
    if args.window_len == 0 || args.window_len > args.n_limit {
        return Err("need 1 <= --window-len <= --N".into());
    }
    Ok(())
}

// ----------------------------------------------------------------------
// verify sweeps
// ----------------------------------------------------------------------

fn run_verify(format: Format, args: &VerifyArgs) -> Result<ExitCode, String> {
    if args.samples == 0 {
        return Err("--samples must be positive".into());
    }
    let mut report = Report::new(format, "verify");
    let all = args.suite == "all";
    if all || args.suite == "case1" {
        verify_case1(&mut report);
    }
    if all || args.suite == "axioms" {
        verify_axioms(&mut report, args.seed, args.samples);
    }
    if all || args.suite == "additivity" {
        verify_additivity(&mut report, args.seed, args.samples);
    }
    if all || args.suite == "sumset-bound" {
        verify_sumset_bound_sweep(&mut report, args.seed, args.samples);
    }
    if all || args.suite == "expansion" {
        verify_expansion(&mut report);
    }
    if all || args.suite == "sandwich" {
        verify_sandwich(&mut report, args.stage);
    }
    if all || args.suite == "translate" {
        verify_translate(&mut report);
    }
    if all || args.suite == "basis" {
        verify_basis(&mut report);
    }
    Ok(report.finish())
}

fn named_alphas() -> Vec<(&'static str, IntervalReal)> {
    vec![
        (
            "sqrt(1/2)",
            IntervalReal::sqrt_rational(Rational::new(BigInt::one(), BigInt::from(2))).unwrap(),
        ),
        ("golden-conjugate", IntervalReal::golden_conjugate()),
        (
            "sqrt(3)-1",
            IntervalReal::sqrt_rational(Rational::from(BigInt::from(3)))
                .unwrap()
                .affine(Rational::one(), Rational::from(BigInt::from(-1)))
                .unwrap(),
        ),
    ]
}

fn random_set(rng: &mut ChaCha8Rng, max_modulus: u64) -> EventuallyPeriodicSet {
    let q = rng.gen_range(1..=max_modulus);
    let blocks = rng.gen_range(0..3u64);
    let t = q * blocks;
    let residues: Vec<u64> = (0..q).filter(|_| rng.gen_bool(0.4)).collect();
    let exceptions: Vec<u64> = (0..t).filter(|_| rng.gen_bool(0.3)).collect();
    EventuallyPeriodicSet::make(q, &residues, t, &exceptions).expect("valid random set")
}

fn verify_case1(report: &mut Report) {
    let mut bad = 0u32;
    let mut total = 0u32;
    for b in 1..=8u64 {
        for a in 0..=b {
            for n in 1..=5u64 {
                let set = construct_rational(a, b, n).expect("valid parameters");
                for k in 1..=n {
                    total += 1;
                    let ka = set.k_fold_sumset(k as u32).expect("desk-scale sumset");
                    if buck_upper(&ka) != Rational::new(BigInt::from(k * a), BigInt::from(n * b)) {
                        bad += 1;
                    }
                }
            }
        }
    }
    report.check(
        "kfold-exact",
        bad == 0,
        &format!("buck(kA) = ka/(nb) for {total} grid points"),
    );
}

fn verify_axioms(report: &mut Report, seed: u64, samples: u32) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xa1);
    let mut bad = 0u32;
    for _ in 0..samples {
        let s1 = random_set(&mut rng, 15);
        let s2 = random_set(&mut rng, 15);
        let k = rng.gen_range(1..=4u64);
        let h = rng.gen_range(0..10u64);
        if !check_axioms(&s1, &s2, k, h).all_pass() {
            bad += 1;
        }
    }
    report.check(
        "axioms",
        bad == 0,
        &format!("normalization, monotonicity, subadditivity, scaling on {samples} instances"),
    );
}

fn verify_additivity(report: &mut Report, seed: u64, samples: u32) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xa2);
    let mut bad = 0u32;
    for _ in 0..samples {
        let q = rng.gen_range(2..=20u64);
        let mut ra = Vec::new();
        let mut rb = Vec::new();
        for r in 0..q {
            if rng.gen_bool(0.5) {
                ra.push(r);
            } else {
                rb.push(r);
            }
        }
        let a = EventuallyPeriodicSet::make(q, &ra, 0, &[]).expect("cover");
        let b = EventuallyPeriodicSet::make(q, &rb, 0, &[]).expect("cover");
        let x = a.intersect(&random_set(&mut rng, 12));
        let y = b.intersect(&random_set(&mut rng, 12));
        match additivity_disjoint(&x, &y, &a, &b) {
            Ok((upper, lower)) => {
                if upper != buck_upper(&x) + buck_upper(&y)
                    || lower != buck_upper(&x) + buck_upper(&y)
                {
                    bad += 1;
                }
            }
            Err(_) => bad += 1,
        }
    }
    report.check(
        "additivity",
        bad == 0,
        &format!("disjoint-cover additivity on {samples} instances"),
    );
}

fn verify_sumset_bound_sweep(report: &mut Report, seed: u64, samples: u32) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xa3);
    let mut done = 0u32;
    let mut bad = 0u32;
    while done < samples {
        let q = rng.gen_range(2..=50u64);
        let t = rng.gen_range(1..q);
        let n_max = (q - 1) / t;
        if n_max == 0 {
            continue;
        }
        let n = rng.gen_range(1..=n_max.min(3));
        let mut w = random_set(&mut rng, 4);
        if w.is_empty() {
            w = EventuallyPeriodicSet::naturals();
        }
        let v = w.affine(q, t);
        let inst = SumsetBoundInstance::new(n, t, q, v).expect("valid instance");
        for k in 1..=n {
            if verify_sumset_bound(&inst, k).is_err() {
                bad += 1;
            }
        }
        done += 1;
    }
    report.check(
        "sumset-bound",
        bad == 0,
        &format!("kt/q <= b(kS) = kt/q + b(kV) <= (kt+1)/q on {samples} instances"),
    );
}

fn verify_expansion(report: &mut Report) {
    for (name, x) in named_alphas() {
        for n in 1..=3u64 {
            match expand(&x, n, 6) {
                Ok(expansion) => {
                    // The expand call itself asserts the per-step invariants;
                    // re-check the partial-sum convergence certificate here.
                    let mut product = BigInt::one();
                    let mut ok = true;
                    for (idx, step) in expansion.steps.iter().enumerate() {
                        product *= BigInt::from(step.q);
                        let gap_hi = &step.alpha_enclosure.hi / Rational::from(product.clone());
                        let bound = Rational::new(BigInt::one(), BigInt::one() << (idx + 1));
                        if gap_hi >= bound {
                            ok = false;
                        }
                    }
                    report.check(
                        &format!("expansion({name}, n={n})"),
                        ok && !expansion.steps.is_empty(),
                        &format!("{} steps, gaps below 2^-i", expansion.steps.len()),
                    );
                }
                Err(e) => {
                    report.check(&format!("expansion({name}, n={n})"), false, &e.to_string());
                }
            }
        }
    }
}

fn verify_sandwich(report: &mut Report, max_stage: u32) {
    for (name, x) in named_alphas() {
        let n = 2u64;
        let sandwich = IrrationalSandwich::new(x.clone(), n);
        let staged = sandwich.staged();
        let enc = x
            .refine_until_width_below(
                &Rational::new(BigInt::one(), BigInt::from(1_000_000_000u64)),
                4096,
            )
            .expect("refinable");
        for k in 1..=2u32 {
            let mut ok = true;
            let mut detail = String::new();
            let mut previous: Option<(Rational, Rational)> = None;
            for i in 1..=max_stage {
                match staged_density_interval(&staged, i, k) {
                    Ok((lo, hi)) => {
                        let scale = Rational::new(BigInt::from(k), BigInt::from(n));
                        if !(lo <= &enc.lo * &scale && &enc.hi * &scale <= hi) {
                            ok = false;
                            detail = format!("stage {i}: interval misses k*alpha/n");
                        }
                        if let Some((plo, phi)) = &previous {
                            if !(plo <= &lo && &hi <= phi) {
                                ok = false;
                                detail = format!("stage {i}: interval not nested");
                            }
                        }
                        previous = Some((lo, hi));
                    }
                    Err(e) => {
                        ok = false;
                        detail = e.to_string();
                        break;
                    }
                }
            }
            if detail.is_empty() {
                detail = format!("stages 1..={max_stage} nested around k*alpha/n");
            }
            report.check(&format!("sandwich({name}, k={k})"), ok, &detail);
        }
    }
}

fn verify_translate(report: &mut Report) {
    let third = Rational::new(BigInt::one(), BigInt::from(3));
    match construct_translate(&Alpha::Rational(third.clone()), &[0, 1]) {
        Ok(t) => match &t.result {
            TranslateResult::Exact { density, .. } => {
                report.check(
                    "translate-exact",
                    density == &third,
                    &format!("b(A+B) = {}", rational_to_fraction_string(density)),
                );
            }
            TranslateResult::Staged(_) => {
                report.check("translate-exact", false, "unexpected staged result");
            }
        },
        Err(e) => report.check("translate-exact", false, &e.to_string()),
    }

    let golden = IntervalReal::golden_conjugate();
    match construct_translate(&Alpha::Irrational(golden.clone()), &[0, 1]) {
        Ok(t) => match &t.result {
            TranslateResult::Staged(staged) => match staged_density_interval(staged, 4, 1) {
                Ok((lo, hi)) => {
                    let enc = golden
                        .refine_until_width_below(
                            &Rational::new(BigInt::one(), BigInt::from(100_000_000u64)),
                            4096,
                        )
                        .expect("refinable");
                    let contains = lo <= enc.lo && enc.hi <= hi;
                    let narrow = &hi - &lo < Rational::new(BigInt::from(5), BigInt::from(100));
                    report.check(
                        "translate-staged",
                        contains && narrow,
                        "stage-4 interval contains alpha with width below 1/20",
                    );
                }
                Err(e) => report.check("translate-staged", false, &e.to_string()),
            },
            TranslateResult::Exact { .. } => {
                report.check("translate-staged", false, "unexpected exact result");
            }
        },
        Err(e) => report.check("translate-staged", false, &e.to_string()),
    }
}

fn verify_basis(report: &mut Report) {
    match construct_basis(
        &Alpha::Rational(Rational::new(BigInt::one(), BigInt::from(2))),
        1,
        10_000,
    ) {
        Ok(basis) => {
            let chain_ok = basis.q_cover_bounds.windows(2).all(|w| w[1].1 <= w[0].1);
            report.check(
                "basis",
                basis.pass() && chain_ok,
                "0 ∈ A, gcd 1, 2A ⊇ [0,10^4], cover bounds non-increasing",
            );
            report.check(
                "cover-bound-8",
                basis.q_cover_bounds[1].1 == Rational::new(BigInt::from(5), BigInt::from(8)),
                "bound(mod 8) = 5/8",
            );
        }
        Err(e) => report.check("basis", false, &e.to_string()),
    }
}

fn run_counterexample(format: Format, args: &CounterexampleArgs) -> Result<ExitCode, String> {
    if args.kmax == 0 {
        return Err("--kmax must be positive".into());
    }
    if args.sparsity_m == 0 {
        return Err("--sparsity-m must be positive".into());
    }
    let mut report = Report::new(format, "counterexample");
    report.heading("V = {n! + n}, A = {x^2 + y^2 : x, y in V}: 2A escapes the density's domain");

    // Upper certificate: every residue class meets 2A.
    let mut bad = 0u32;
    for k in 1..=args.kmax {
        for h in 0..k {
            let w = counterexample_witness(k, h).map_err(|e| e.to_string())?;
            if !w.pass {
                bad += 1;
                report.row(
                    "witness-failure",
                    vec![
                        ("k", k.to_string()),
                        ("h", h.to_string()),
                        ("residue", w.residue.to_string()),
                    ],
                );
            }
        }
    }
    report.check(
        "witnesses",
        bad == 0,
        &format!(
            "every class mod k <= {} meets 2A (witness congruences, modular arithmetic only)",
            args.kmax
        ),
    );

    // Lower certificate: the counting bound excludes progressions.
    let sparsity = counterexample_sparsity(args.sparsity_m).map_err(|e| e.to_string())?;
    report.row(
        "sparsity",
        vec![
            ("m", sparsity.m.to_string()),
            ("sqrt_m", sparsity.sqrt_m.to_string()),
            ("v_count", sparsity.v_count.to_string()),
            ("count_bound", sparsity.count_bound.to_string()),
            (
                "ratio_bound",
                rational_to_fraction_string(&sparsity.ratio_bound),
            ),
        ],
    );
    report.check(
        "sparsity-excludes-progressions",
        sparsity_excludes_progressions(&sparsity, args.kmax),
        &format!(
            "any progression with step <= {} inside [1, {}] needs more than {} members",
            args.kmax, sparsity.m, sparsity.count_bound
        ),
    );

    // Factorial-interval table: the asymptotic upper density is not additive
    // on X and Y, while the Buck densities are (their covers are disjoint).
    let rows = factorial_interval_table(args.dstar_nmax).map_err(|e| e.to_string())?;
    for row in &rows {
        report.row(
            "dstar",
            vec![
                ("n", row.n.to_string()),
                ("checkpoint", row.checkpoint.to_string()),
                ("x_ratio", rational_to_fraction_string(&row.x_ratio)),
                ("y_ratio", rational_to_fraction_string(&row.y_ratio)),
                ("union_ratio", rational_to_fraction_string(&row.union_ratio)),
            ],
        );
    }
    let increasing = rows
        .iter()
        .step_by(2)
        .map(|r| &r.x_ratio)
        .collect::<Vec<_>>()
        .windows(2)
        .all(|w| w[0] < w[1]);
    report.check(
        "dstar-ratios",
        increasing,
        "prefix ratios at the factorial checkpoints increase toward 1/2",
    );

    Ok(report.finish())
}
