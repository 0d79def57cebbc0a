//! Flat `key = value` configuration files.
//!
//! One assignment per line, `#` starts a comment, dotted keys group related
//! settings (`domain.cells = 128`). Every key must be consumed by the parser;
//! leftovers are reported as unknown.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::diagnostics::Tolerance;
use crate::domain::{DomainSpec, ProblemParams, WeightSpec};
use crate::error::{Error, Result};
use crate::evolution::{NewtonConfig, PerturbationSpec, ScalarFn, SchemeConfig, SchemeKind, TimeStep};
use crate::initial::InitialData;

/// Ordered raw key/value pairs.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConfigMap {
    entries: BTreeMap<String, String>,
}

impl ConfigMap {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", lineno + 1)))?;
            let key = key.trim();
            if key.is_empty() || key.contains(char::is_whitespace) {
                return Err(Error::Config(format!("line {}: malformed key `{key}`", lineno + 1)));
            }
            if entries.insert(key.to_string(), value.trim().to_string()).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key `{key}`", lineno + 1)));
            }
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn set(&mut self, key: &str, value: &str) {
        self.entries.insert(key.to_string(), value.to_string());
    }

    pub fn remove(&mut self, key: &str) -> Option<String> {
        self.entries.remove(key)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    /// Canonical text form; parses back to an equal map.
    pub fn render(&self) -> String {
        self.entries.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

/// Verdict families selectable from a config.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Check {
    IdentityIPrime,
    Monotonicity,
    Convexity,
    LowerBound,
    ExtinctionBound,
    VanishingOrder,
    AlmostMonotonicity,
}

impl Check {
    pub const ALL: [Check; 7] = [
        Check::IdentityIPrime,
        Check::Monotonicity,
        Check::Convexity,
        Check::LowerBound,
        Check::ExtinctionBound,
        Check::VanishingOrder,
        Check::AlmostMonotonicity,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Check::IdentityIPrime => "identity_I_prime",
            Check::Monotonicity => "monotonicity",
            Check::Convexity => "convexity",
            Check::LowerBound => "lower_bound_I",
            Check::ExtinctionBound => "extinction_bound",
            Check::VanishingOrder => "vanishing_order",
            Check::AlmostMonotonicity => "almost_monotonicity",
        }
    }
}

impl FromStr for Check {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Check::ALL.iter().copied().find(|c| c.name() == s).ok_or_else(|| Error::Config(format!("unknown check `{s}`")))
    }
}

/// Parses a comma-separated list of check names.
pub fn parse_checks(list: &str) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for name in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let c: Check = name.parse()?;
        if !out.contains(&c) {
            out.push(c);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct OutputPaths {
    pub series: Option<PathBuf>,
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub params: ProblemParams,
    pub scheme: SchemeConfig,
    pub initial: InitialData,
    pub perturbation: Option<PerturbationSpec>,
    pub t_span: (f64, f64),
    pub record_every: usize,
    pub output: OutputPaths,
    pub checks: Vec<Check>,
    pub seed: u64,
    pub tolerance: Tolerance,
    /// The map this config was parsed from, echoed into reports.
    pub source: ConfigMap,
}

/// Typed access that remembers which keys were read.
struct Reader<'a> {
    map: &'a ConfigMap,
    used: RefCell<BTreeSet<String>>,
}

impl<'a> Reader<'a> {
    fn raw(&self, key: &str) -> Option<&'a str> {
        self.used.borrow_mut().insert(key.to_string());
        self.map.get(key)
    }

    fn opt<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|_| Error::Config(format!("`{key}`: cannot parse `{v}`"))),
        }
    }

    fn or<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        Ok(self.opt(key)?.unwrap_or(default))
    }

    fn req<T: FromStr>(&self, key: &str) -> Result<T> {
        self.opt(key)?.ok_or_else(|| Error::Config(format!("missing key `{key}`")))
    }

    fn finish(&self) -> Result<()> {
        let used = self.used.borrow();
        let unknown: Vec<&str> = self.map.iter().map(|(k, _)| k).filter(|k| !used.contains(*k)).collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(format!("unknown keys: {}", unknown.join(", "))))
        }
    }
}

/// `0.1`, `affine(a, b)` or `sine(amplitude, frequency, phase)`.
pub fn parse_scalar_fn(text: &str) -> Result<ScalarFn> {
    let text = text.trim();
    let bad = || Error::Config(format!("cannot parse scalar function `{text}`"));
    if let Ok(c) = text.parse::<f64>() {
        return Ok(ScalarFn::Constant(c));
    }
    let (name, rest) = text.split_once('(').ok_or_else(bad)?;
    let args = rest.strip_suffix(')').ok_or_else(bad)?;
    let vals = args
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|_| bad())?;
    match (name.trim(), vals.as_slice()) {
        ("const", [c]) => Ok(ScalarFn::Constant(*c)),
        ("affine", [offset, slope]) => Ok(ScalarFn::Affine { offset: *offset, slope: *slope }),
        ("sine", [amplitude, frequency, phase]) => {
            Ok(ScalarFn::Sine { amplitude: *amplitude, frequency: *frequency, phase: *phase })
        }
        _ => Err(bad()),
    }
}

fn parse_list(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|s| s.trim())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|_| Error::Config(format!("cannot parse number `{s}`"))))
        .collect()
}

impl ExperimentConfig {
    pub fn from_map(map: &ConfigMap) -> Result<Self> {
        let r = Reader { map, used: RefCell::new(BTreeSet::new()) };
        let p: f64 = r.req("p")?;
        let q: f64 = r.req("q")?;
        let cells: usize = r.req("domain.cells")?;
        let domain = match r.or("domain.kind", "interval".to_string())?.as_str() {
            "interval" => DomainSpec::interval(r.req("domain.left")?, r.req("domain.right")?, cells),
            "ball" => DomainSpec::ball(r.req("domain.dim")?, r.req("domain.radius")?, cells),
            "whole_space" => DomainSpec::whole_space(r.req("domain.dim")?, r.req("domain.r_max")?, cells),
            other => return Err(Error::Config(format!("unknown domain.kind `{other}`"))),
        };
        let weight = match r.or("weight.kind", "zero".to_string())?.as_str() {
            "zero" => WeightSpec::Zero,
            "linear" => WeightSpec::Linear { a: r.req("weight.a")? },
            "quadratic" => WeightSpec::Quadratic { a: r.req("weight.a")? },
            "tabulated" => {
                let xs = parse_list(r.raw("weight.x").ok_or_else(|| Error::Config("missing key `weight.x`".into()))?)?;
                let ys =
                    parse_list(r.raw("weight.phi").ok_or_else(|| Error::Config("missing key `weight.phi`".into()))?)?;
                if xs.len() != ys.len() {
                    return Err(Error::Config("weight.x and weight.phi differ in length".into()));
                }
                WeightSpec::Tabulated { points: xs.into_iter().zip(ys).collect() }
            }
            other => return Err(Error::Config(format!("unknown weight.kind `{other}`"))),
        };
        let params = ProblemParams::new(p, q, domain, weight)?;

        let t_span = (r.or("time.start", 0.0)?, r.req::<f64>("time.end")?);
        let kind = match r.or("scheme.kind", "rk4".to_string())?.as_str() {
            "rk4" => SchemeKind::Rk4,
            "explicit_euler" => SchemeKind::ExplicitEuler,
            "implicit_euler" => SchemeKind::ImplicitEuler,
            other => return Err(Error::Config(format!("unknown scheme.kind `{other}`"))),
        };
        let step = match r.or("scheme.dt", "adaptive".to_string())?.as_str() {
            "adaptive" => TimeStep::Adaptive { dt_max: r.or("scheme.dt_max", (t_span.1 - t_span.0) / 100.0)? },
            v => TimeStep::Fixed(v.parse().map_err(|_| Error::Config(format!("`scheme.dt`: cannot parse `{v}`")))?),
        };
        let base = match kind {
            SchemeKind::Rk4 => SchemeConfig::rk4(step),
            SchemeKind::ExplicitEuler => SchemeConfig::explicit_euler(step),
            SchemeKind::ImplicitEuler => SchemeConfig::implicit_euler(step),
        };
        let nd = NewtonConfig::default();
        let scheme = SchemeConfig {
            cfl_safety: r.or("scheme.cfl", base.cfl_safety)?,
            u_floor: r.or("scheme.u_floor", base.u_floor)?,
            g_floor: r.or("scheme.g_floor", base.g_floor)?,
            eps_reg: r.or("scheme.eps_reg", base.eps_reg)?,
            extinction_ratio: r.or("scheme.extinction_ratio", base.extinction_ratio)?,
            max_steps: r.or("scheme.max_steps", base.max_steps)?,
            newton: NewtonConfig {
                max_iter: r.or("newton.max_iter", nd.max_iter)?,
                abs_tol: r.or("newton.abs_tol", nd.abs_tol)?,
                rel_tol: r.or("newton.rel_tol", nd.rel_tol)?,
                damping_min: r.or("newton.damping_min", nd.damping_min)?,
                jacobian_eps: r.or("newton.jacobian_eps", nd.jacobian_eps)?,
                max_halvings: r.or("newton.max_halvings", nd.max_halvings)?,
            },
            ..base
        };
        scheme.validate()?;

        let seed: u64 = r.or("seed", 0)?;
        let initial = match r.req::<String>("initial.kind")?.as_str() {
            "barenblatt" => InitialData::Barenblatt { t0: r.or("initial.t0", 1.0)?, c: r.or("initial.c", 1.0)? },
            "eigenmode" => InitialData::Eigenmode { k: r.or("initial.k", 1)? },
            "random" => InitialData::RandomSignChanging {
                seed,
                smoothness: r.or("initial.smoothness", 2.0)?,
                modes: r.or("initial.modes", 12)?,
            },
            "bump" => InitialData::Bump {
                center: r.or("initial.center", 0.0)?,
                width: r.req("initial.width")?,
                amplitude: r.or("initial.amplitude", 1.0)?,
            },
            "zero" => InitialData::Zero,
            "table" => InitialData::Table(parse_list(
                r.raw("initial.values").ok_or_else(|| Error::Config("missing key `initial.values`".into()))?,
            )?),
            other => return Err(Error::Config(format!("unknown initial.kind `{other}`"))),
        };

        let perturbation = match r.raw("perturbation.c") {
            None => None,
            Some(c) => {
                let bound = r
                    .raw("perturbation.bound")
                    .ok_or_else(|| Error::Config("missing key `perturbation.bound`".into()))?;
                Some(PerturbationSpec { c: parse_scalar_fn(c)?, bound: parse_scalar_fn(bound)? })
            }
        };
        if perturbation.is_none() && r.raw("perturbation.bound").is_some() {
            return Err(Error::Config("perturbation.bound given without perturbation.c".into()));
        }

        let checks = parse_checks(r.or("checks", String::new())?.as_str())?;
        let d = Tolerance::RK4_DEFAULT;
        let tolerance = Tolerance {
            atol: r.or("tolerance.atol", d.atol)?,
            ctol: r.or("tolerance.ctol", d.ctol)?,
            order: r.or("tolerance.order", d.order)?,
        };
        let output = OutputPaths { series: r.opt("output.series")?, report: r.opt("output.report")? };
        let record_every = r.or("record_every", 1usize)?;
        if record_every == 0 {
            return Err(Error::Config("record_every must be at least 1".into()));
        }
        if !(t_span.1 > t_span.0) {
            return Err(Error::Config(format!("time.end must exceed time.start: {t_span:?}")));
        }
        r.finish()?;
        Ok(Self {
            params,
            scheme,
            initial,
            perturbation,
            t_span,
            record_every,
            output,
            checks,
            seed,
            tolerance,
            source: map.clone(),
        })
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::from_map(&ConfigMap::parse(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_map(&ConfigMap::load(path)?)
    }
}
