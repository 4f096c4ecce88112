//! JSON and CSV formats for measures, plans, sweeps and traces.
//!
//! Rationals are written as `{"num": "...", "den": "..."}` with decimal
//! strings, so arbitrarily large values round-trip exactly. Lattice
//! coordinates additionally carry `sqrt_div`, the squarefree divisor under
//! the square root.

use std::fmt::Write as _;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize, Serializer};
use serde_json::{json, Value};

use crate::counterexample::{clt_limit, SweepTable};
use crate::error::{Error, Result};
use crate::exact::Rational;
use crate::gaussian::MonotoneTrace;
use crate::measure::LatticeMeasure;
use crate::surd::Surd;
use crate::transport::{CostValue, Move, TransportPlan};

/// Renders `x` with 12 significant digits, trailing zeros trimmed.
pub fn fmt_sig12(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-6..12).contains(&exp) {
        let m = mantissa.trim_end_matches('0').trim_end_matches('.');
        return format!("{m}e{exp}");
    }
    let (sign, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => ("-", rest),
        None => ("", mantissa),
    };
    let digits: String = digits.chars().filter(|c| *c != '.').collect();
    let mut out = String::from(sign);
    if exp < 0 {
        out.push_str("0.");
        out.extend(std::iter::repeat('0').take((-exp - 1) as usize));
        out.push_str(&digits);
    } else {
        let int_len = exp as usize + 1;
        out.push_str(&digits[..int_len]);
        out.push('.');
        out.push_str(&digits[int_len..]);
    }
    if out.contains('.') {
        out = out.trim_end_matches('0').trim_end_matches('.').to_string();
    }
    out
}

/// `"num/den"`, or just `"num"` for integers.
pub fn rational_string(q: &Rational) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

pub fn ser_rational<S: Serializer>(q: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&rational_string(q))
}

/// Parses `"p"`, `"p/q"` or a decimal-free integer.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let parse = |t: &str| BigInt::from_str(t.trim()).map_err(|e| Error::Parse(format!("{t:?}: {e}")));
    match s.split_once('/') {
        Some((n, d)) => {
            let d = parse(d)?;
            if d.is_zero() {
                return Err(Error::Parse(format!("zero denominator in {s:?}")));
            }
            Ok(Rational::new(parse(n)?, d))
        }
        None => Ok(Rational::from_integer(parse(s)?)),
    }
}

/// Integer given either as a JSON number or as a decimal string.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum BigNum {
    Int(i64),
    Str(String),
}

impl BigNum {
    fn value(&self) -> Result<BigInt> {
        match self {
            BigNum::Int(v) => Ok(BigInt::from(*v)),
            BigNum::Str(s) => BigInt::from_str(s.trim()).map_err(|e| Error::Parse(format!("{s:?}: {e}"))),
        }
    }
}

fn one() -> BigNum {
    BigNum::Int(1)
}

fn unit_radicand() -> u64 {
    1
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RationalDoc {
    num: BigNum,
    #[serde(default = "one")]
    den: BigNum,
}

impl RationalDoc {
    fn from_rational(q: &Rational) -> Self {
        Self {
            num: BigNum::Str(q.numer().to_string()),
            den: BigNum::Str(q.denom().to_string()),
        }
    }

    fn to_rational(&self) -> Result<Rational> {
        let den = self.den.value()?;
        if den.is_zero() {
            return Err(Error::Parse("zero denominator".into()));
        }
        Ok(Rational::new(self.num.value()?, den))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SurdDoc {
    num: BigNum,
    #[serde(default = "one")]
    den: BigNum,
    #[serde(default = "unit_radicand")]
    sqrt_div: u64,
}

impl SurdDoc {
    fn from_surd(s: &Surd) -> Self {
        Self {
            num: BigNum::Str(s.coeff().numer().to_string()),
            den: BigNum::Str(s.coeff().denom().to_string()),
            sqrt_div: s.radicand(),
        }
    }

    fn to_surd(&self) -> Result<Surd> {
        let q = RationalDoc {
            num: self.num.clone(),
            den: self.den.clone(),
        }
        .to_rational()?;
        Surd::new(q, self.sqrt_div)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MeasureDoc {
    step: SurdDoc,
    #[serde(default)]
    offset: Option<SurdDoc>,
    points: Vec<i64>,
    weights: Vec<RationalDoc>,
}

impl MeasureDoc {
    fn from_measure(mu: &LatticeMeasure) -> Self {
        Self {
            step: SurdDoc::from_surd(&mu.step()),
            offset: Some(SurdDoc::from_surd(&mu.offset())),
            points: mu.points().to_vec(),
            weights: mu.weights().iter().map(RationalDoc::from_rational).collect(),
        }
    }

    fn to_measure(&self) -> Result<LatticeMeasure> {
        let offset = match &self.offset {
            Some(o) => o.to_surd()?,
            None => Surd::zero(),
        };
        let weights = self.weights.iter().map(RationalDoc::to_rational).collect::<Result<Vec<_>>>()?;
        LatticeMeasure::new(self.step.to_surd()?, offset, self.points.clone(), weights)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MoveDoc {
    from: usize,
    to: usize,
    mass: RationalDoc,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlanDoc {
    source: MeasureDoc,
    target: MeasureDoc,
    moves: Vec<MoveDoc>,
}

fn parse_json<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    serde_json::from_str(text)
        .map_err(|e| Error::Parse(format!("line {}, column {}: {e}", e.line(), e.column())))
}

pub fn measure_to_json(mu: &LatticeMeasure) -> String {
    serde_json::to_string_pretty(&MeasureDoc::from_measure(mu)).expect("measure serializes")
}

pub fn measure_from_json(text: &str) -> Result<LatticeMeasure> {
    parse_json::<MeasureDoc>(text)?.to_measure()
}

pub fn plan_to_json(plan: &TransportPlan) -> String {
    let doc = PlanDoc {
        source: MeasureDoc::from_measure(plan.source()),
        target: MeasureDoc::from_measure(plan.target()),
        moves: plan
            .moves()
            .iter()
            .map(|m| MoveDoc {
                from: m.from,
                to: m.to,
                mass: RationalDoc::from_rational(&m.mass),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("plan serializes")
}

/// Parses a plan and checks its marginals exactly.
pub fn plan_from_json(text: &str) -> Result<TransportPlan> {
    let doc: PlanDoc = parse_json(text)?;
    let moves = doc
        .moves
        .iter()
        .map(|m| {
            Ok(Move {
                from: m.from,
                to: m.to,
                mass: m.mass.to_rational()?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    TransportPlan::new(doc.source.to_measure()?, doc.target.to_measure()?, moves)
}

/// Exact value as `num/den` plus a 12-digit decimal.
pub fn rational_json(q: &Rational) -> Value {
    json!({
        "num": q.numer().to_string(),
        "den": q.denom().to_string(),
        "decimal": fmt_sig12(q.to_f64().unwrap_or(f64::NAN)),
    })
}

pub fn cost_json(c: &CostValue) -> Value {
    match c {
        CostValue::Exact(q) => rational_json(q),
        CostValue::Approx(x) => json!({ "decimal": fmt_sig12(*x) }),
    }
}

fn opt_f64(x: Option<f64>) -> String {
    x.map(fmt_sig12).unwrap_or_default()
}

pub fn sweep_csv(table: &SweepTable) -> String {
    let mut out = String::from("n,cost,sqrt_n_scaled,lower,upper,exact_flag\n");
    for r in &table.rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.n,
            opt_f64(r.cost_f64()),
            opt_f64(r.sqrt_n_scaled),
            opt_f64(r.lower_f64()),
            opt_f64(r.upper_f64()),
            r.is_exact()
        )
        .expect("write to string");
    }
    out
}

pub fn sweep_json(table: &SweepTable) -> Value {
    let rows: Vec<Value> = table
        .rows
        .iter()
        .map(|r| {
            let (cost, error) = match &r.cost {
                Ok(c) => (cost_json(c), Value::Null),
                Err(e) => (Value::Null, Value::String(e.clone())),
            };
            json!({
                "n": r.n,
                "cost": cost,
                "error": error,
                "sqrt_n_scaled": r.sqrt_n_scaled.map(fmt_sig12),
                "lower": r.lower.as_ref().map(rational_json),
                "upper": r.upper.as_ref().map(rational_json),
                "exact": r.is_exact(),
            })
        })
        .collect();
    json!({
        "exponent": fmt_sig12(table.exponent),
        "limit_reference": fmt_sig12(clt_limit()),
        "limit_estimate": table.limit_estimate().map(fmt_sig12),
        "rows": rows,
    })
}

pub fn trace_csv(trace: &MonotoneTrace) -> String {
    let mut out = String::from("n,distance,delta\n");
    for (n, d, delta) in trace.deltas() {
        writeln!(out, "{n},{},{}", fmt_sig12(d), fmt_sig12(delta)).expect("write to string");
    }
    out
}

pub fn trace_json(trace: &MonotoneTrace) -> Value {
    let entries: Vec<Value> = trace
        .deltas()
        .into_iter()
        .map(|(n, d, delta)| json!({ "n": n, "distance": fmt_sig12(d), "delta": fmt_sig12(delta) }))
        .collect();
    json!({
        "entries": entries,
        "nonincreasing": trace.nonincreasing,
        "strictly_decreasing": trace.strictly_decreasing,
        "first_increase_at": trace.first_increase_at,
    })
}
