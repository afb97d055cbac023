//! Run configuration: a single JSON document, validated up front.
//!
//! Numeric fields accept plain decimals; `tail_tol` additionally accepts
//! exact power-of-two strings like `"2^-19"`, which are the natural unit
//! for the truncation level.  Unknown fields are rejected.

use std::fmt;
use std::path::PathBuf;

use serde::de::{self, Deserializer};
use serde::Deserialize;

use mixforge_core::envelope::{GridSpec, RateFunction};
use mixforge_core::LogEnvelope;

/// A number that may be written as a decimal or as `"2^<exp>"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaybePow2(pub f64);

impl<'de> Deserialize<'de> for MaybePow2 {
    fn deserialize<D: Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        struct V;
        impl de::Visitor<'_> for V {
            type Value = MaybePow2;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number or a string like \"2^-19\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<MaybePow2, E> {
                Ok(MaybePow2(v))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<MaybePow2, E> {
                Ok(MaybePow2(v as f64))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<MaybePow2, E> {
                Ok(MaybePow2(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<MaybePow2, E> {
                let rest = v.trim().strip_prefix("2^").ok_or_else(|| {
                    E::custom(format!("expected \"2^<exponent>\" or a number, got {v:?}"))
                })?;
                let exp: i32 = rest
                    .parse()
                    .map_err(|_| E::custom(format!("bad exponent in {v:?}")))?;
                Ok(MaybePow2((exp as f64).exp2()))
            }
        }
        de.deserialize_any(V)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case", tag = "family")]
pub enum RateFnSpec {
    Polynomial {
        p: f64,
    },
    StretchedExponential {
        q: f64,
        a: f64,
    },
    Remark14 {
        q: f64,
        a: f64,
        b: f64,
        c: f64,
        #[serde(default)]
        shift: Option<f64>,
    },
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TolerancesSpec {
    #[serde(default = "default_tol_root")]
    pub tol_root: f64,
    #[serde(default = "default_tol_sup")]
    pub tol_sup: f64,
    #[serde(default = "default_x_cap")]
    pub x_cap: f64,
    #[serde(default = "default_max_legs")]
    pub max_legs: usize,
}

fn default_tol_root() -> f64 {
    1e-9
}
fn default_tol_sup() -> f64 {
    1e-8
}
fn default_x_cap() -> f64 {
    1e300
}
fn default_max_legs() -> usize {
    10_000
}

impl Default for TolerancesSpec {
    fn default() -> Self {
        TolerancesSpec {
            tol_root: default_tol_root(),
            tol_sup: default_tol_sup(),
            x_cap: default_x_cap(),
            max_legs: default_max_legs(),
        }
    }
}

fn default_tail_tol() -> MaybePow2 {
    MaybePow2((-19f64).exp2())
}

fn default_exact_alpha_j() -> usize {
    mixforge_core::chain::DEFAULT_EXACT_ALPHA_J
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub r: f64,
    pub f: RateFnSpec,
    pub n_max: u32,
    #[serde(default = "default_tail_tol")]
    pub tail_tol: MaybePow2,
    #[serde(rename = "exact_alpha_J", default = "default_exact_alpha_j")]
    pub exact_alpha_j: usize,
    #[serde(default)]
    pub tolerances: TolerancesSpec,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

impl RunConfig {
    /// Parses and range-validates a config document; error messages name
    /// the offending field.
    pub fn from_json(text: &str) -> Result<Self, String> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| e.to_string())?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), String> {
        if !(self.r > 0.0 && self.r <= 1.0) {
            return Err(format!("field `r` = {} must lie in (0, 1]", self.r));
        }
        if self.n_max < 1 {
            return Err("field `n_max` must be at least 1".into());
        }
        let tail = self.tail_tol.0;
        if !(tail > 0.0 && tail < 1.0) {
            return Err(format!("field `tail_tol` = {tail} must lie in (0, 1)"));
        }
        if !(self.tolerances.tol_root > 0.0) {
            return Err("field `tolerances.tol_root` must be positive".into());
        }
        if !(self.tolerances.tol_sup > 0.0) {
            return Err("field `tolerances.tol_sup` must be positive".into());
        }
        if !(self.tolerances.x_cap > 0.0) {
            return Err("field `tolerances.x_cap` must be positive".into());
        }
        match &self.f {
            RateFnSpec::Polynomial { p } => {
                if !(*p > 0.0) {
                    return Err(format!("field `f.p` = {p} must be positive"));
                }
            }
            RateFnSpec::StretchedExponential { q, a } => {
                if !(*q > 0.0) {
                    return Err(format!("field `f.q` = {q} must be positive"));
                }
                if !(*a > 0.0 && *a < 1.0) {
                    return Err(format!("field `f.a` = {a} must lie in (0, 1)"));
                }
            }
            RateFnSpec::Remark14 { q, a, shift, .. } => {
                if !(*q > 0.0) {
                    return Err(format!("field `f.q` = {q} must be positive"));
                }
                if !(*a > 0.0 && *a < 1.0) {
                    return Err(format!("field `f.a` = {a} must lie in (0, 1)"));
                }
                if let Some(t) = shift {
                    if !(*t > std::f64::consts::E) {
                        return Err(format!("field `f.shift` = {t} must exceed e"));
                    }
                }
            }
        }
        Ok(())
    }

    /// Resolves the rate-function descriptor, running the doubling shift
    /// search for `remark14` when no explicit shift is given.
    pub fn rate_function(&self) -> Result<RateFunction, String> {
        let made = match &self.f {
            RateFnSpec::Polynomial { p } => RateFunction::polynomial(*p),
            RateFnSpec::StretchedExponential { q, a } => {
                RateFunction::stretched_exponential(*q, *a)
            }
            RateFnSpec::Remark14 {
                q,
                a,
                b,
                c,
                shift: Some(t),
            } => RateFunction::remark14(*q, *a, *b, *c, *t),
            RateFnSpec::Remark14 {
                q,
                a,
                b,
                c,
                shift: None,
            } => RateFunction::remark14_auto_shift(*q, *a, *b, *c, &GridSpec::default()),
        };
        made.map_err(|e| format!("field `f`: {e}"))
    }

    pub fn envelope(&self) -> Result<LogEnvelope, String> {
        LogEnvelope::new(self.r, self.rate_function()?).map_err(|e| format!("field `r`: {e}"))
    }

    /// Truncation level implied by the tail tolerance.
    pub fn truncation_level(&self) -> usize {
        (1.0 - self.tail_tol.0.log2()).ceil() as usize
    }
}
