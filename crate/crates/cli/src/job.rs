use ancestrec::recursion::default_order;
use ancestrec::C64;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::{Common, Validation};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "name")]
pub enum Command {
    Correlators,
    Verify,
    Sweep,
    #[serde(rename = "theorem2")]
    Extended { deg: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub direction: Vec<C64>,
    pub eps: Vec<f64>,
}

/// Everything that determines a report; hashed for the cache.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JobSpec {
    pub n: usize,
    pub t: Vec<C64>,
    pub g_max: usize,
    pub n_max: usize,
    pub order: usize,
    pub tol: Option<f64>,
    pub caustic: bool,
    pub sweep: Option<SweepSpec>,
    pub perturb_r: Option<f64>,
    pub command: Command,
}

fn invalid(msg: impl Into<String>) -> anyhow::Error {
    Validation(msg.into()).into()
}

fn parse_model(s: &str) -> anyhow::Result<usize> {
    let digits = s
        .strip_prefix('A')
        .or_else(|| s.strip_prefix('a'))
        .ok_or_else(|| invalid(format!("model must look like A<n>, got {s:?}")))?;
    let n: usize = digits.parse().map_err(|_| invalid(format!("bad model rank in {s:?}")))?;
    if n == 0 {
        return Err(invalid("model rank must be at least 1"));
    }
    Ok(n)
}

fn complex(v: &Value) -> anyhow::Result<C64> {
    match v {
        Value::Number(x) => Ok(C64::new(x.as_f64().unwrap_or(f64::NAN), 0.0)),
        Value::Array(p) if p.len() == 2 => match (p[0].as_f64(), p[1].as_f64()) {
            (Some(re), Some(im)) => Ok(C64::new(re, im)),
            _ => Err(invalid(format!("bad complex number {v}"))),
        },
        _ => Err(invalid(format!("bad complex number {v}"))),
    }
}

/// Parses a JSON array of numbers or `[re, im]` pairs.
pub fn parse_vector(s: &str) -> anyhow::Result<Vec<C64>> {
    let v: Value = serde_json::from_str(s).map_err(|e| invalid(format!("bad JSON vector: {e}")))?;
    let items = v.as_array().ok_or_else(|| invalid("expected a JSON array"))?;
    let out = items.iter().map(complex).collect::<anyhow::Result<Vec<_>>>()?;
    if out.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(invalid("non-finite coordinate"));
    }
    Ok(out)
}

fn parse_sweep(s: Option<&str>, n: usize) -> anyhow::Result<SweepSpec> {
    let v: Value = match s {
        Some(s) => serde_json::from_str(s).map_err(|e| invalid(format!("bad sweep JSON: {e}")))?,
        None => Value::Object(Default::default()),
    };
    let direction = match v.get("direction") {
        Some(d) => parse_vector(&d.to_string())?,
        None => {
            let mut d = vec![C64::new(0.0, 0.0); n];
            d[0] = C64::new(-1.0, 0.0);
            d
        }
    };
    let eps = match v.get("eps") {
        Some(e) => serde_json::from_value::<Vec<f64>>(e.clone()).map_err(|e| invalid(format!("bad eps list: {e}")))?,
        None => (3..=10).map(|j| 2f64.powi(-j)).collect(),
    };
    if direction.len() != n {
        return Err(invalid(format!("sweep direction has {} entries, model needs {n}", direction.len())));
    }
    if eps.len() < 2 {
        return Err(invalid("sweep needs at least two eps values to extrapolate"));
    }
    if eps.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
        return Err(invalid("eps values must be positive"));
    }
    Ok(SweepSpec { direction, eps })
}

impl JobSpec {
    pub fn from_args(args: &Common, command: Command) -> anyhow::Result<Self> {
        let n = parse_model(&args.model)?;
        let t = match &args.t {
            Some(s) => parse_vector(s)?,
            None => vec![C64::new(0.0, 0.0); n],
        };
        if t.len() != n {
            return Err(invalid(format!("A{n} needs {n} coordinates, got {}", t.len())));
        }
        if let Some(tol) = args.tol {
            if !(tol.is_finite() && tol > 0.0) {
                return Err(invalid("tolerance must be positive"));
            }
        }
        if args.nmax == 0 {
            return Err(invalid("nmax must be at least 1"));
        }
        let min_order = default_order(args.gmax, args.nmax);
        let order = args.order.unwrap_or(min_order);
        if order < min_order {
            return Err(invalid(format!("order {order} is below the minimum {min_order} for these bounds")));
        }
        let sweep = match command {
            Command::Sweep => Some(parse_sweep(args.sweep.as_deref(), n)?),
            _ => None,
        };
        Ok(Self {
            n,
            t,
            g_max: args.gmax,
            n_max: args.nmax,
            order,
            tol: args.tol,
            caustic: args.caustic,
            sweep,
            perturb_r: args.perturb_r,
            command,
        })
    }
}
