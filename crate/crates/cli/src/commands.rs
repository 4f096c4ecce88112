use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_traits::ToPrimitive;
use serde_json::{json, Value};

use w2lab::counterexample::{
    asymptotic_sweep, clt_limit, family, fold, monotonicity_violation, pfold_normalized_cost, pfold_separations,
    radiation_plan_unchecked, sandwich, SweepOptions, SweepTable,
};
use w2lab::exact::{frac, Rational};
use w2lab::fuzz::{describe_min_gap, halving_fuzz, tanaka_fuzz, FuzzReport};
use w2lab::gaussian::{gaussian_monotone_trace, logconcave_variant_trace, MonotoneTrace};
use w2lab::io::{
    fmt_sig12, measure_from_json, plan_from_json, plan_to_json, rational_json, rational_string, sweep_csv,
    sweep_json, trace_csv, trace_json,
};
use w2lab::transport::{cyclic_monotonicity_check, CostMatrix, CycleVerdict};
use w2lab::{
    lp_oracle, monotone_coupling, support_distance_lower_bound, transport_cost, w_distance, CostSpec, CostValue,
    Error, LatticeMeasure, Move, TransportPlan, EXACT_SUPPORT_LIMIT,
};

use crate::output::{emit, json_body, Format};

/// How a command failed: a mathematical check (exit 1) or anything else (exit 2).
#[derive(Debug)]
pub enum Failure {
    Check(String),
    Error(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e.to_string())
    }
}

#[derive(Parser, Debug)]
#[command(name = "w2lab", version, about = "Exact quadratic transport along convolution powers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Write to this file instead of stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Fault {
    /// Perturb one move of the n = 2 radiation plan.
    RadiationPlan,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Recompute the headline values and exit nonzero if any check fails.
    Reproduce {
        #[command(flatten)]
        out: OutputArgs,
        #[arg(long, value_enum, hide = true)]
        inject_fault: Option<Fault>,
    },
    /// sqrt(n) T_r(sigma_n, tau_n) over n = 1, 2, 4, ... up to --n-max.
    Sweep {
        #[arg(long, default_value_t = 4096)]
        n_max: u64,
        #[arg(long, default_value_t = 2.0)]
        cost_r: f64,
        /// Largest support solved with exact weights.
        #[arg(long, default_value_t = EXACT_SUPPORT_LIMIT)]
        exact_limit: usize,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Random instances of Tanaka's inequality and the halving inequality.
    TanakaFuzz {
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// T(mu^(n), gamma) for n = 1..n_max against the matched Gaussian (report only).
    Gaussian {
        #[arg(long, default_value_t = 50)]
        n_max: u64,
        /// Measure JSON; defaults to a fair sign.
        #[arg(long)]
        measure: Option<PathBuf>,
        /// Log-concave measure JSON; switches to the trace of T(mu^(n), nu^(n)).
        #[arg(long)]
        logconcave: Option<PathBuf>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Residue-class family: separation for p not dividing k, and T(mu^(p), nu^(p)).
    Pfold {
        #[arg(long, default_value_t = 3)]
        p: u64,
        #[arg(long, default_value_t = 16)]
        n_max: u64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Validate a plan file: exact marginals, cycle certificate and optimality.
    CheckPlan {
        plan: PathBuf,
        #[arg(long, default_value_t = 2.0)]
        cost_r: f64,
        #[arg(long, default_value_t = 3)]
        max_cycle_len: usize,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Write the radiation plan from sigma_n to tau_n as plan JSON.
    RadiationPlan {
        #[arg(long)]
        n: u64,
        #[command(flatten)]
        out: OutputArgs,
    },
}

pub fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Reproduce { out, inject_fault } => reproduce(&out, inject_fault),
        Command::Sweep {
            n_max,
            cost_r,
            exact_limit,
            out,
        } => sweep(n_max, cost_r, exact_limit, &out),
        Command::TanakaFuzz { seed, trials, out } => fuzz(seed, trials, &out),
        Command::Gaussian {
            n_max,
            measure,
            logconcave,
            out,
        } => gaussian(n_max, measure.as_deref(), logconcave.as_deref(), &out),
        Command::Pfold { p, n_max, out } => pfold(p, n_max, &out),
        Command::CheckPlan {
            plan,
            cost_r,
            max_cycle_len,
            out,
        } => check_plan(&plan, cost_r, max_cycle_len, &out),
        Command::RadiationPlan { n, out } => {
            let plan = radiation_plan_unchecked(n)?;
            plan.verify()?;
            emit(&plan_to_json(&plan), out.output.as_deref())
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Error(format!("{}: {e}", path.display())))
}

fn with_path<T>(path: &Path, r: w2lab::Result<T>) -> Result<T, Failure> {
    r.map_err(|e| Failure::Error(format!("{}: {e}", path.display())))
}

fn exact(c: &CostValue) -> Result<Rational, Failure> {
    c.exact()
        .cloned()
        .ok_or_else(|| Failure::Error(format!("expected an exact cost, got {c}")))
}

fn f64_of(q: &Rational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

/// Powers of two up to `n_max`, plus `n_max` itself.
fn doubling_grid(start: u64, n_max: u64) -> Vec<u64> {
    let mut grid = Vec::new();
    let mut n = start;
    while n <= n_max {
        grid.push(n);
        n *= 2;
    }
    if grid.last() != Some(&n_max) && n_max >= start {
        grid.push(n_max);
    }
    grid
}

struct Check {
    name: &'static str,
    passed: bool,
    detail: String,
}

fn reproduce(out: &OutputArgs, fault: Option<Fault>) -> Result<(), Failure> {
    let q = CostSpec::quadratic();
    let mut checks = Vec::new();

    let f2 = family(2)?;
    let mono = exact(&transport_cost(&monotone_coupling(&f2.sigma, &f2.tau), q))?;
    let lp = exact(&lp_oracle(&f2.sigma, &f2.tau, &CostMatrix::for_measures(&f2.sigma, &f2.tau, q))?.cost)?;
    checks.push(Check {
        name: "sigma2-tau2-cost",
        passed: mono == frac(5, 8) && lp == frac(5, 8),
        detail: format!("T(sigma_2, tau_2) = {} (monotone), {} (LP)", rational_string(&mono), rational_string(&lp)),
    });

    let (a3, b3) = fold(2, 3)?;
    let bound3 = exact(&support_distance_lower_bound(&a3, &b3, q))?;
    let t3 = exact(&w_distance(&a3, &b3, q)?.cost)?;
    checks.push(Check {
        name: "three-fold-separation",
        passed: bound3 >= frac(1, 1) && t3 >= frac(1, 1),
        detail: format!(
            "T(mu_2^*3, nu_2^*3) = {} >= support bound {}",
            rational_string(&t3),
            rational_string(&bound3)
        ),
    });

    let v = monotonicity_violation(2)?;
    checks.push(Check {
        name: "normalized-violation",
        passed: v.t2_normalized == frac(5, 16) && v.t3_normalized_lower >= frac(1, 3) && v.violated,
        detail: format!(
            "T(mu^(2), nu^(2)) = {} < 1/3 <= {} = T(mu^(3), nu^(3))",
            rational_string(&v.t2_normalized),
            rational_string(&v.t3_normalized_exact)
        ),
    });

    let mut plans = Vec::new();
    let mut marginal_failure = None;
    for n in 1..=50u64 {
        let mut plan = radiation_plan_unchecked(n)?;
        if n == 2 && fault == Some(Fault::RadiationPlan) {
            let (src, tgt) = (plan.source().clone(), plan.target().clone());
            let mut moves = plan.into_moves();
            moves[0] = Move {
                mass: &moves[0].mass + frac(1, 64),
                ..moves[0].clone()
            };
            plan = TransportPlan::new_unchecked(src, tgt, moves);
        }
        if let Err(e) = plan.verify() {
            marginal_failure.get_or_insert(format!("n = {n}: {e}"));
        }
        plans.push(plan);
    }
    checks.push(Check {
        name: "radiation-plan-marginals",
        passed: marginal_failure.is_none(),
        detail: marginal_failure.unwrap_or_else(|| "exact marginals sigma_n -> tau_n for n <= 50".into()),
    });

    let mut optimality_failure = None;
    for (i, plan) in plans.iter().enumerate() {
        let cost = transport_cost(plan, q);
        let best = w_distance(plan.source(), plan.target(), q)?.cost;
        if cost != best {
            optimality_failure.get_or_insert(format!("n = {}: plan {cost} vs optimum {best}", i + 1));
        }
    }
    checks.push(Check {
        name: "radiation-plan-optimality",
        passed: optimality_failure.is_none(),
        detail: optimality_failure.unwrap_or_else(|| "plan cost equals the optimum for n <= 50".into()),
    });

    let mut table = Vec::new();
    let mut scaling_ok = true;
    let mut last_scaled = f64::NAN;
    for n in [64u64, 256, 1024, 4096] {
        let s = sandwich(n)?;
        let root = (n as f64).sqrt();
        last_scaled = root * f64_of(&s.exact_cost);
        scaling_ok &= s.lower <= s.exact_cost && s.exact_cost <= s.upper;
        table.push((n, s, last_scaled));
    }
    let rel = (last_scaled - clt_limit()).abs() / clt_limit();
    scaling_ok &= rel <= 0.05;
    checks.push(Check {
        name: "sqrt-n-scaling",
        passed: scaling_ok,
        detail: format!(
            "sqrt(4096) T = {} vs limit {} (relative error {})",
            fmt_sig12(last_scaled),
            fmt_sig12(clt_limit()),
            fmt_sig12(rel)
        ),
    });

    let first_failure = checks.iter().find(|c| !c.passed).map(|c| c.name);
    let body = match out.format {
        Format::Json => {
            let rows: Vec<Value> = table
                .iter()
                .map(|(n, s, scaled)| {
                    json!({
                        "n": n,
                        "cost": rational_json(&s.exact_cost),
                        "sqrt_n_scaled": fmt_sig12(*scaled),
                        "lower": rational_json(&s.lower),
                        "upper": rational_json(&s.upper),
                    })
                })
                .collect();
            json_body(&json!({
                "passed": first_failure.is_none(),
                "first_failure": first_failure,
                "checks": checks.iter().map(|c| json!({"name": c.name, "passed": c.passed, "detail": c.detail})).collect::<Vec<_>>(),
                "values": {
                    "sigma2_tau2_cost": rational_string(&mono),
                    "three_fold_cost": rational_string(&t3),
                    "three_fold_support_bound": rational_string(&bound3),
                    "t2_normalized": rational_string(&v.t2_normalized),
                    "t3_normalized_lower": rational_string(&v.t3_normalized_lower),
                    "t3_normalized": rational_string(&v.t3_normalized_exact),
                    "limit_reference": fmt_sig12(clt_limit()),
                    "sqrt_n_table": rows,
                },
            }))
        }
        Format::Csv => {
            let mut s = String::from("check,passed\n");
            for c in &checks {
                writeln!(s, "{},{}", c.name, c.passed).unwrap();
            }
            s
        }
        Format::Text => {
            let mut s = String::new();
            for c in &checks {
                writeln!(s, "{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail).unwrap();
            }
            writeln!(s, "\n{:>6} {:>16} {:>16} {:>16}", "n", "sqrt(n) lower", "sqrt(n) T", "sqrt(n) upper").unwrap();
            for (n, sb, scaled) in &table {
                let root = (*n as f64).sqrt();
                writeln!(
                    s,
                    "{n:>6} {:>16} {:>16} {:>16}",
                    fmt_sig12(root * f64_of(&sb.lower)),
                    fmt_sig12(*scaled),
                    fmt_sig12(root * f64_of(&sb.upper))
                )
                .unwrap();
            }
            writeln!(s, "limit {}", fmt_sig12(clt_limit())).unwrap();
            s
        }
    };
    emit(&body, out.output.as_deref())?;
    match first_failure {
        Some(name) => Err(Failure::Check(name.into())),
        None => Ok(()),
    }
}

fn sweep_text(t: &SweepTable) -> String {
    let mut s = format!("r = {}\n", fmt_sig12(t.exponent));
    writeln!(s, "{:>6} {:>16} {:>16} {:>16} {:>16} {:>6}", "n", "cost", "sqrt(n) cost", "lower", "upper", "exact").unwrap();
    for r in &t.rows {
        let opt = |x: Option<f64>| x.map(fmt_sig12).unwrap_or_else(|| "-".into());
        match &r.cost {
            Ok(_) => writeln!(
                s,
                "{:>6} {:>16} {:>16} {:>16} {:>16} {:>6}",
                r.n,
                opt(r.cost_f64()),
                opt(r.sqrt_n_scaled),
                opt(r.lower_f64()),
                opt(r.upper_f64()),
                r.is_exact()
            )
            .unwrap(),
            Err(e) => writeln!(s, "{:>6} error: {e}", r.n).unwrap(),
        }
    }
    if let Some(est) = t.limit_estimate() {
        writeln!(s, "limit estimate {} (quadratic reference {})", fmt_sig12(est), fmt_sig12(clt_limit())).unwrap();
    }
    s
}

fn sweep(n_max: u64, cost_r: f64, exact_limit: usize, out: &OutputArgs) -> Result<(), Failure> {
    if n_max == 0 {
        return Err(Failure::Error("--n-max must be at least 1".into()));
    }
    let cost = CostSpec::new(cost_r)?;
    let table = asymptotic_sweep(&doubling_grid(1, n_max), cost, SweepOptions { exact_limit })?;
    let body = match out.format {
        Format::Csv => sweep_csv(&table),
        Format::Json => json_body(&sweep_json(&table)),
        Format::Text => sweep_text(&table),
    };
    emit(&body, out.output.as_deref())?;
    // an exact cost outside its exact sandwich is a real failure
    let broken = table.rows.iter().find(|r| match (&r.cost, &r.lower, &r.upper) {
        (Ok(CostValue::Exact(c)), Some(lo), Some(up)) => c < lo || c > up,
        _ => false,
    });
    match broken {
        Some(r) => Err(Failure::Check(format!("sandwich at n = {}", r.n))),
        None => Ok(()),
    }
}

fn fuzz_json(r: &FuzzReport) -> Value {
    json!({
        "name": r.name,
        "trials": r.trials,
        "exact_trials": r.exact_trials,
        "min_gap": describe_min_gap(r),
        "violations": r.violations.iter().map(|v| json!({
            "trial": v.trial,
            "gap": v.gap.to_string(),
            "instance": v.description,
        })).collect::<Vec<_>>(),
    })
}

fn fuzz(seed: u64, trials: u64, out: &OutputArgs) -> Result<(), Failure> {
    let reports = [tanaka_fuzz(seed, trials)?, halving_fuzz(seed, trials)?];
    let body = match out.format {
        Format::Json => json_body(&json!({ "seed": seed, "reports": reports.iter().map(fuzz_json).collect::<Vec<_>>() })),
        Format::Csv => {
            let mut s = String::from("name,trials,exact_trials,min_gap,violations\n");
            for r in &reports {
                writeln!(s, "{},{},{},{},{}", r.name, r.trials, r.exact_trials, fmt_sig12(r.min_gap), r.violations.len()).unwrap();
            }
            s
        }
        Format::Text => {
            let mut s = format!("seed {seed}\n");
            for r in &reports {
                writeln!(
                    s,
                    "{}: {} trials ({} exact), min gap {}, {} violations",
                    r.name,
                    r.trials,
                    r.exact_trials,
                    describe_min_gap(r),
                    r.violations.len()
                )
                .unwrap();
                for v in &r.violations {
                    writeln!(s, "  trial {}: gap {} for {}", v.trial, v.gap, v.description).unwrap();
                }
            }
            s
        }
    };
    emit(&body, out.output.as_deref())?;
    match reports.iter().find(|r| !r.passed()) {
        Some(r) => Err(Failure::Check(format!("{}-gap", r.name))),
        None => Ok(()),
    }
}

fn trace_text(t: &MonotoneTrace, title: &str) -> String {
    let mut s = format!("{title}\n{:>4} {:>16} {:>16}\n", "n", "distance", "delta");
    for (n, d, delta) in t.deltas() {
        writeln!(s, "{n:>4} {:>16} {:>16}", fmt_sig12(d), fmt_sig12(delta)).unwrap();
    }
    writeln!(
        s,
        "nonincreasing {}, strictly decreasing {}, first increase at {}",
        t.nonincreasing,
        t.strictly_decreasing,
        t.first_increase_at.map_or("none".to_string(), |n| n.to_string())
    )
    .unwrap();
    s
}

fn gaussian(n_max: u64, measure: Option<&Path>, logconcave: Option<&Path>, out: &OutputArgs) -> Result<(), Failure> {
    let mu = match measure {
        Some(p) => with_path(p, measure_from_json(&read(p)?))?,
        None => LatticeMeasure::rademacher_sum(1),
    };
    let (trace, title) = match logconcave {
        Some(p) => {
            let nu = with_path(p, measure_from_json(&read(p)?))?;
            (logconcave_variant_trace(&mu, &nu, n_max)?, "T(mu^(n), nu^(n)), nu log-concave")
        }
        None => (gaussian_monotone_trace(&mu, n_max)?, "T(mu^(n), gamma), gamma matched to mu"),
    };
    let body = match out.format {
        Format::Csv => trace_csv(&trace),
        Format::Json => json_body(&trace_json(&trace)),
        Format::Text => trace_text(&trace, title),
    };
    emit(&body, out.output.as_deref())
}

fn pfold(p: u64, n_max: u64, out: &OutputArgs) -> Result<(), Failure> {
    if p < 2 || n_max < 1 {
        return Err(Failure::Error("--p must be at least 2 and --n-max at least 1".into()));
    }
    let grid = doubling_grid(if n_max >= 2 { 2 } else { 1 }, n_max);
    let mut rows = Vec::new();
    for &n in &grid {
        let seps = pfold_separations(p, n, 2 * p - 1)?;
        let min_sep = seps
            .iter()
            .map(|s| s.support_bound.clone())
            .min_by(|a, b| a.to_f64().total_cmp(&b.to_f64()))
            .expect("k = 1 is always present");
        rows.push((n, pfold_normalized_cost(p, n)?, min_sep));
    }
    let separated = rows.iter().all(|(_, _, s)| s.is_exact() && s.to_f64() >= 1.0);
    let decreasing = rows.windows(2).all(|w| w[1].1.to_f64() < w[0].1.to_f64());
    let body = match out.format {
        Format::Csv => {
            let mut s = String::from("n,cost_normalized,min_separation\n");
            for (n, c, sep) in &rows {
                writeln!(s, "{n},{},{}", fmt_sig12(c.to_f64()), fmt_sig12(sep.to_f64())).unwrap();
            }
            s
        }
        Format::Json => json_body(&json!({
            "p": p,
            "rows": rows.iter().map(|(n, c, sep)| json!({
                "n": n,
                "cost_normalized": fmt_sig12(c.to_f64()),
                "min_separation": sep.to_string(),
            })).collect::<Vec<_>>(),
            "separated": separated,
            "decreasing": decreasing,
        })),
        Format::Text => {
            let mut s = format!("p = {p}; separation over k <= {} with p not dividing k\n", 2 * p - 1);
            writeln!(s, "{:>4} {:>18} {:>14}", "n", "T(mu^(p), nu^(p))", "min bound").unwrap();
            for (n, c, sep) in &rows {
                writeln!(s, "{n:>4} {:>18} {:>14}", fmt_sig12(c.to_f64()), sep.to_string()).unwrap();
            }
            writeln!(s, "separated {separated}, decreasing {decreasing}").unwrap();
            s
        }
    };
    emit(&body, out.output.as_deref())?;
    if separated {
        Ok(())
    } else {
        Err(Failure::Check("pfold-separation".into()))
    }
}

fn check_plan(path: &Path, cost_r: f64, max_cycle_len: usize, out: &OutputArgs) -> Result<(), Failure> {
    let cost = CostSpec::new(cost_r)?;
    let plan = match plan_from_json(&read(path)?) {
        Ok(p) => p,
        Err(Error::InvalidPlan(msg)) => {
            let body = format!("plan-marginals: {msg}\n");
            emit(&body, out.output.as_deref())?;
            return Err(Failure::Check("plan-marginals".into()));
        }
        Err(e) => return Err(Failure::Error(format!("{}: {e}", path.display()))),
    };
    let verdict = cyclic_monotonicity_check(&plan, cost, max_cycle_len)?;
    let plan_cost = transport_cost(&plan, cost);
    let optimum = w_distance(plan.source(), plan.target(), cost)?.cost;
    let optimal = match (&plan_cost, &optimum) {
        (CostValue::Exact(a), CostValue::Exact(b)) => a == b,
        _ => (plan_cost.to_f64() - optimum.to_f64()).abs() <= 1e-12 * optimum.to_f64().abs().max(1.0),
    };
    let (status, failure) = match (&verdict, optimal) {
        (CycleVerdict::Ok { .. }, true) => ("ok", None),
        (CycleVerdict::Violation(_), _) => ("cycle-violation", Some("plan-cycles")),
        (CycleVerdict::Partial { .. }, true) => ("ok", None),
        (_, false) => ("suboptimal", Some("plan-optimality")),
    };
    let verdict_text = match &verdict {
        CycleVerdict::Ok { cycles_checked } => format!("{cycles_checked} cycles of length <= {max_cycle_len} checked"),
        CycleVerdict::Violation(w) => format!(
            "moves {:?} cost {} but {} after cycling targets",
            w.moves,
            fmt_sig12(w.plan_cost),
            fmt_sig12(w.permuted_cost)
        ),
        CycleVerdict::Partial {
            cycles_checked,
            completed_len,
            ..
        } => format!("budget exhausted after {cycles_checked} cycles; lengths <= {completed_len} complete"),
    };
    let body = match out.format {
        Format::Json => json_body(&json!({
            "status": status,
            "moves": plan.moves().len(),
            "cycles": verdict_text,
            "plan_cost": plan_cost.to_string(),
            "optimal_cost": optimum.to_string(),
            "optimal": optimal,
        })),
        Format::Csv => format!("status,moves,plan_cost,optimal_cost\n{status},{},{plan_cost},{optimum}\n", plan.moves().len()),
        Format::Text => format!(
            "{status}\nmarginals exact, {} moves\ncycles: {verdict_text}\nplan cost {plan_cost}, optimum {optimum}\n",
            plan.moves().len()
        ),
    };
    emit(&body, out.output.as_deref())?;
    match failure {
        Some(name) => Err(Failure::Check(name.into())),
        None => Ok(()),
    }
}
