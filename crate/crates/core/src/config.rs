//! Run configuration in flat dotted-key form:
//!
//! ```text
//! vessel1.delta = 1.0
//! vessel1.r0 = 10.0
//! vessel1.u.a = 1.1
//! vessel1.u.b = 0.4
//! vessel1.v.a = 1.1
//! vessel1.v.b = 0.4
//! vessel2.delta = 1.0
//! ...
//! s = 0.5
//! lambda = 1.0
//! seed = 7            # optional: decimal, or a "0x…" string
//! horizon = 1e4       # optional run settings
//! ```
//!
//! The syntax is TOML, so `[vessel1]` tables work too. Every missing or
//! invalid field is reported by its full dotted name.

use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::error::{Error, Result};
use crate::model::{DuoConfig, MonodParams, VesselParams};
use crate::rng::parse_seed;
use crate::trajectory::fmt_num;

/// A value given either once for both vessels or per vessel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerVessel {
    Same(f64),
    Each([f64; 2]),
}

impl PerVessel {
    pub fn pair(self) -> [f64; 2] {
        match self {
            PerVessel::Same(x) => [x, x],
            PerVessel::Each(p) => p,
        }
    }

    /// The scalar, or the vessel-1 entry of a pair.
    pub fn first(self) -> f64 {
        self.pair()[0]
    }
}

/// Initial state for simulations: scalars for the switched chemostat, scalars
/// or pairs for the gradostat.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitState {
    pub r: Option<PerVessel>,
    pub u: PerVessel,
    pub v: PerVessel,
    /// Starting environment of the switched model (1 or 2).
    pub regime: Option<u8>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub model: DuoConfig,
    pub seed: Option<u64>,
    pub horizon: Option<f64>,
    pub burn_in: Option<f64>,
    pub tol: Option<f64>,
    pub record_every: Option<usize>,
    pub zero_band: Option<f64>,
    pub init: Option<InitState>,
}

const TOP_KEYS: [&str; 10] = [
    "vessel1",
    "vessel2",
    "s",
    "lambda",
    "seed",
    "horizon",
    "burn_in",
    "tol",
    "record_every",
    "zero_band",
];

fn cfg(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn lookup<'a>(t: &'a Table, path: &str) -> Option<&'a Value> {
    let mut parts = path.split('.');
    let mut v = t.get(parts.next()?)?;
    for p in parts {
        v = v.as_table()?.get(p)?;
    }
    Some(v)
}

fn as_number(path: &str, v: &Value) -> Result<f64> {
    match v {
        Value::Float(x) => Ok(*x),
        Value::Integer(i) => Ok(*i as f64),
        _ => Err(cfg(format!("`{path}` must be a number"))),
    }
}

fn number(t: &Table, path: &str) -> Result<f64> {
    let v = lookup(t, path).ok_or_else(|| cfg(format!("missing required field `{path}`")))?;
    as_number(path, v)
}

fn opt_number(t: &Table, path: &str) -> Result<Option<f64>> {
    lookup(t, path).map(|v| as_number(path, v)).transpose()
}

fn opt_count(t: &Table, path: &str) -> Result<Option<usize>> {
    match lookup(t, path) {
        None => Ok(None),
        Some(Value::Integer(i)) if *i >= 0 => Ok(Some(*i as usize)),
        Some(_) => Err(cfg(format!("`{path}` must be a non-negative integer"))),
    }
}

fn per_vessel(path: &str, v: &Value) -> Result<PerVessel> {
    match v {
        Value::Array(a) if a.len() == 2 => Ok(PerVessel::Each([as_number(path, &a[0])?, as_number(path, &a[1])?])),
        Value::Array(_) => Err(cfg(format!("`{path}` must be a number or a pair of numbers"))),
        other => Ok(PerVessel::Same(as_number(path, other)?)),
    }
}

fn check_keys(t: &Table, prefix: &str, allowed: &[&str]) -> Result<()> {
    for k in t.keys() {
        if !allowed.contains(&k.as_str()) {
            let name = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
            return Err(cfg(format!("unknown field `{name}`")));
        }
    }
    Ok(())
}

fn sub_table<'a>(t: &'a Table, path: &str) -> Result<Option<&'a Table>> {
    match lookup(t, path) {
        None => Ok(None),
        Some(Value::Table(x)) => Ok(Some(x)),
        Some(_) => Err(cfg(format!("`{path}` must be a table of dotted keys"))),
    }
}

fn vessel(t: &Table, name: &str) -> Result<VesselParams> {
    let vt = sub_table(t, name)?.ok_or_else(|| cfg(format!("missing required field `{name}.delta`")))?;
    check_keys(vt, name, &["delta", "r0", "u", "v"])?;
    for sp in ["u", "v"] {
        if let Some(st) = sub_table(t, &format!("{name}.{sp}"))? {
            check_keys(st, &format!("{name}.{sp}"), &["a", "b"])?;
        }
    }
    let monod = |sp: &str| -> Result<MonodParams> {
        Ok(MonodParams {
            a: number(t, &format!("{name}.{sp}.a"))?,
            b: number(t, &format!("{name}.{sp}.b"))?,
        })
    };
    let v = VesselParams {
        delta: number(t, &format!("{name}.delta"))?,
        r0: number(t, &format!("{name}.r0"))?,
        monod_u: monod("u")?,
        monod_v: monod("v")?,
    };
    v.validate(name)?;
    Ok(v)
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let t: Table = text.parse().map_err(|e: toml::de::Error| cfg(e.message().to_string()))?;
        let mut top: Vec<&str> = TOP_KEYS.to_vec();
        top.push("init");
        check_keys(&t, "", &top)?;
        let model = DuoConfig {
            vessel1: vessel(&t, "vessel1")?,
            vessel2: vessel(&t, "vessel2")?,
            s: number(&t, "s")?,
            lambda: number(&t, "lambda")?,
        };
        model.validate()?;
        let seed = match lookup(&t, "seed") {
            None => None,
            Some(Value::Integer(i)) if *i >= 0 => Some(*i as u64),
            Some(Value::String(s)) => Some(parse_seed(s)?),
            Some(_) => return Err(cfg("`seed` must be a non-negative integer or a hex string")),
        };
        let init = match sub_table(&t, "init")? {
            None => None,
            Some(it) => {
                check_keys(it, "init", &["r", "u", "v", "regime"])?;
                let need = |k: &str| {
                    let path = format!("init.{k}");
                    lookup(&t, &path)
                        .ok_or_else(|| cfg(format!("missing required field `{path}`")))
                        .and_then(|v| per_vessel(&path, v))
                };
                let regime = match lookup(&t, "init.regime") {
                    None => None,
                    Some(Value::Integer(1)) => Some(1),
                    Some(Value::Integer(2)) => Some(2),
                    Some(_) => return Err(cfg("`init.regime` must be 1 or 2")),
                };
                Some(InitState {
                    r: lookup(&t, "init.r").map(|v| per_vessel("init.r", v)).transpose()?,
                    u: need("u")?,
                    v: need("v")?,
                    regime,
                })
            }
        };
        let rc = RunConfig {
            model,
            seed,
            horizon: opt_number(&t, "horizon")?,
            burn_in: opt_number(&t, "burn_in")?,
            tol: opt_number(&t, "tol")?,
            record_every: opt_count(&t, "record_every")?,
            zero_band: opt_number(&t, "zero_band")?,
            init,
        };
        rc.validate()?;
        Ok(rc)
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        let positive = |name: &str, x: Option<f64>| match x {
            Some(v) if !(v > 0.0 && v.is_finite()) => Err(cfg(format!("`{name}` must be finite and > 0"))),
            _ => Ok(()),
        };
        positive("horizon", self.horizon)?;
        positive("tol", self.tol)?;
        positive("zero_band", self.zero_band)?;
        if let Some(b) = self.burn_in {
            if !(b >= 0.0) || self.horizon.is_some_and(|h| b >= h) {
                return Err(cfg("`burn_in` must satisfy 0 <= burn_in < horizon"));
            }
        }
        if let Some(init) = &self.init {
            let vals = [init.r.map(PerVessel::pair), Some(init.u.pair()), Some(init.v.pair())];
            if vals.iter().flatten().flatten().any(|x| !(*x >= 0.0 && x.is_finite())) {
                return Err(cfg("`init` values must be finite and >= 0"));
            }
        }
        Ok(())
    }

    /// Canonical dotted-key text: fixed key order, every number with 17
    /// significant digits. Parsing it back gives the same config.
    pub fn to_canonical(&self) -> String {
        let mut out = String::new();
        let mut put = |k: &str, v: String| {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        };
        for (name, v) in [("vessel1", &self.model.vessel1), ("vessel2", &self.model.vessel2)] {
            put(&format!("{name}.delta"), fmt_num(v.delta));
            put(&format!("{name}.r0"), fmt_num(v.r0));
            put(&format!("{name}.u.a"), fmt_num(v.monod_u.a));
            put(&format!("{name}.u.b"), fmt_num(v.monod_u.b));
            put(&format!("{name}.v.a"), fmt_num(v.monod_v.a));
            put(&format!("{name}.v.b"), fmt_num(v.monod_v.b));
        }
        put("s", fmt_num(self.model.s));
        put("lambda", fmt_num(self.model.lambda));
        if let Some(x) = self.seed {
            // TOML integers are signed 64-bit; larger seeds go through a string.
            put("seed", if i64::try_from(x).is_ok() { x.to_string() } else { format!("\"{x}\"") });
        }
        for (k, x) in [
            ("horizon", self.horizon),
            ("burn_in", self.burn_in),
            ("tol", self.tol),
            ("zero_band", self.zero_band),
        ] {
            if let Some(x) = x {
                put(k, fmt_num(x));
            }
        }
        if let Some(n) = self.record_every {
            put("record_every", n.to_string());
        }
        if let Some(init) = &self.init {
            let pv = |p: PerVessel| match p {
                PerVessel::Same(x) => fmt_num(x),
                PerVessel::Each([a, b]) => format!("[{}, {}]", fmt_num(a), fmt_num(b)),
            };
            if let Some(r) = init.r {
                put("init.r", pv(r));
            }
            put("init.u", pv(init.u));
            put("init.v", pv(init.v));
            if let Some(g) = init.regime {
                put("init.regime", g.to_string());
            }
        }
        out
    }

    pub fn from_model(model: DuoConfig) -> Self {
        Self {
            model,
            seed: None,
            horizon: None,
            burn_in: None,
            tol: None,
            record_every: None,
            zero_band: None,
            init: None,
        }
    }
}
