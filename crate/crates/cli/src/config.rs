//! Run configuration: a small `key = value` format with one level of
//! `[sections]`.
//!
//! ```text
//! # comment
//! seed = 7
//! [model]
//! phi = "stable(1)"
//! pi = "riesz(1/3)"
//! d = 1
//! r = 4/3
//! ```
//!
//! Values are double-quoted strings or numbers. Numbers are exact rationals (`4/3`, `0.125`, `1e-3`). Unknown keys, duplicate keys and
//! type mismatches are errors that carry a line and column.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_traits::{One, ToPrimitive, Zero};
use sha2::{Digest, Sha256};
use srdae_core::bernstein::BernsteinFunction;
use srdae_core::correlation::CorrelationMeasure;
use srdae_core::feasibility::ParamSet;
use srdae_core::grid::{GridSpec, SymbolKind};
use srdae_core::notation::FamilyCall;
use srdae_core::rational::{parse_rational, show, to_f64, Q};
use srdae_core::solver::{InitialCondition, ModelSpec, NoiseCoupling, Nonlinearity, RunOptions};
use srdae_core::stochastics::RngSpec;

use crate::error::{CliError, Pos};

#[derive(Debug, Clone, PartialEq)]
enum Value {
    Str(String),
    Num(Q),
}

impl Value {
    fn type_name(&self) -> &'static str {
        match self {
            Value::Str(_) => "string",
            Value::Num(_) => "number",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Str,
    Num,
    Int,
}

const SCHEMA: &[(&str, &str, Kind)] = &[
    ("", "command", Kind::Str),
    ("", "seed", Kind::Int),
    ("", "output", Kind::Str),
    ("model", "phi", Kind::Str),
    ("model", "pi", Kind::Str),
    ("model", "d", Kind::Int),
    ("model", "p", Kind::Num),
    ("model", "q", Kind::Num),
    ("model", "gamma", Kind::Num),
    ("model", "delta0", Kind::Num),
    ("model", "r", Kind::Num),
    ("model", "lambda_sd", Kind::Num),
    ("model", "lambda_b", Kind::Num),
    ("model", "lambda_sm", Kind::Num),
    ("model", "drift", Kind::Num),
    ("model", "zeta", Kind::Num),
    ("model", "xi", Kind::Num),
    ("model", "c_sd", Kind::Num),
    ("model", "c_b", Kind::Num),
    ("model", "c_sm", Kind::Num),
    ("model", "m", Kind::Num),
    ("model", "coupling", Kind::Str),
    ("model", "initial", Kind::Str),
    ("model", "symbol", Kind::Str),
    ("grid", "n", Kind::Int),
    ("grid", "l", Kind::Num),
    ("run", "t", Kind::Num),
    ("run", "dt", Kind::Num),
    ("run", "paths", Kind::Int),
    ("run", "guard", Kind::Num),
    ("run", "negativity_tol", Kind::Num),
    ("run", "snapshot_every", Kind::Int),
    ("run", "probes", Kind::Int),
    ("run", "calibration_samples", Kind::Int),
    ("run", "calibration", Kind::Num),
];

#[derive(Debug, Clone)]
struct Entry {
    value: Value,
    value_pos: Pos,
}

/// Raw `section.key → value` table with source positions.
#[derive(Debug, Default)]
struct Table {
    entries: BTreeMap<(String, String), Entry>,
    sections: BTreeMap<String, Pos>,
}

fn parse_value(raw: &str, pos: Pos) -> Result<Value, CliError> {
    if let Some(rest) = raw.strip_prefix('"') {
        let body = rest
            .strip_suffix('"')
            .ok_or_else(|| CliError::parse(pos, "unterminated string"))?;
        if body.contains('"') {
            return Err(CliError::parse(pos, "stray quote inside string"));
        }
        return Ok(Value::Str(body.to_string()));
    }
    parse_rational(raw)
        .map(Value::Num)
        .map_err(|_| CliError::parse(pos, format!("`{raw}` is neither a quoted string nor a number")))
}

/// Drops a `#` comment that is not inside a string.
fn strip_comment(line: &str) -> &str {
    let mut quoted = false;
    for (i, c) in line.char_indices() {
        match c {
            '"' => quoted = !quoted,
            '#' if !quoted => return &line[..i],
            _ => {}
        }
    }
    line
}

fn column(line: &str, part: &str) -> usize {
    // `part` is a subslice of `line`
    let offset = part.as_ptr() as usize - line.as_ptr() as usize;
    line[..offset].chars().count() + 1
}

fn tokenize(text: &str) -> Result<Table, CliError> {
    let mut table = Table::default();
    let mut section = String::new();
    for (idx, full) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = strip_comment(full);
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let start = Pos::new(line_no, column(full, trimmed));
        if let Some(inner) = trimmed.strip_prefix('[') {
            let name = inner
                .strip_suffix(']')
                .ok_or_else(|| CliError::parse(start, "section header must end with `]`"))?
                .trim();
            if !SCHEMA.iter().any(|(s, _, _)| !s.is_empty() && *s == name) {
                return Err(CliError::parse(start, format!("unknown section `[{name}]`")));
            }
            if table.sections.insert(name.to_string(), start).is_some() {
                return Err(CliError::parse(start, format!("section `[{name}]` repeated")));
            }
            section = name.to_string();
            continue;
        }
        let (key, value) = trimmed
            .split_once('=')
            .ok_or_else(|| CliError::parse(start, "expected `key = value`"))?;
        let key = key.trim();
        let value = value.trim();
        let key_pos = start;
        if key.is_empty() {
            return Err(CliError::parse(key_pos, "missing key"));
        }
        if value.is_empty() {
            return Err(CliError::parse(key_pos, format!("missing value for `{key}`")));
        }
        let value_pos = Pos::new(line_no, column(full, value));
        let kind = SCHEMA
            .iter()
            .find(|(s, k, _)| *s == section && *k == key)
            .map(|(_, _, kind)| *kind)
            .ok_or_else(|| {
                let place = if section.is_empty() { "top level".to_string() } else { format!("[{section}]") };
                CliError::parse(key_pos, format!("unknown key `{key}` in {place}"))
            })?;
        let parsed = parse_value(value, value_pos)?;
        let ok = match (kind, &parsed) {
            (Kind::Str, Value::Str(_)) | (Kind::Num, Value::Num(_)) => true,
            (Kind::Int, Value::Num(x)) => x.is_integer() && *x >= Q::zero(),
            _ => false,
        };
        if !ok {
            let want = match kind {
                Kind::Str => "a quoted string",
                Kind::Num => "a number",
                Kind::Int => "a nonnegative integer",
            };
            return Err(CliError::parse(
                value_pos,
                format!("`{key}` expects {want}, found {} `{value}`", parsed.type_name()),
            ));
        }
        let slot = (section.clone(), key.to_string());
        if table.entries.contains_key(&slot) {
            return Err(CliError::parse(key_pos, format!("duplicate key `{key}`")));
        }
        table.entries.insert(
            slot,
            Entry {
                value: parsed,
                value_pos,
            },
        );
    }
    Ok(table)
}

impl Table {
    fn get(&self, section: &str, key: &str) -> Option<&Entry> {
        self.entries.get(&(section.to_string(), key.to_string()))
    }

    fn section_pos(&self, section: &str) -> Pos {
        self.sections.get(section).copied().unwrap_or(Pos::new(1, 1))
    }

    fn num(&self, section: &str, key: &str) -> Option<(Q, Pos)> {
        self.get(section, key).map(|e| match &e.value {
            Value::Num(x) => (x.clone(), e.value_pos),
            _ => unreachable!("types are checked while tokenizing"),
        })
    }

    fn num_or(&self, section: &str, key: &str, default: Q) -> (Q, Pos) {
        self.num(section, key).unwrap_or((default, self.section_pos(section)))
    }

    fn required_num(&self, section: &str, key: &str) -> Result<(Q, Pos), CliError> {
        self.num(section, key)
            .ok_or_else(|| CliError::parse(self.section_pos(section), format!("missing required key `{key}` in [{section}]")))
    }

    fn int_or(&self, section: &str, key: &str, default: u64) -> Result<(u64, Pos), CliError> {
        match self.num(section, key) {
            Some((x, pos)) => x
                .to_integer()
                .to_u64()
                .map(|v| (v, pos))
                .ok_or_else(|| CliError::parse(pos, format!("`{key}` is too large"))),
            None => Ok((default, self.section_pos(section))),
        }
    }

    fn string(&self, section: &str, key: &str) -> Option<(String, Pos)> {
        self.get(section, key).map(|e| match &e.value {
            Value::Str(s) => (s.clone(), e.value_pos),
            _ => unreachable!("types are checked while tokenizing"),
        })
    }

    fn required_string(&self, section: &str, key: &str) -> Result<(String, Pos), CliError> {
        self.string(section, key)
            .ok_or_else(|| CliError::parse(self.section_pos(section), format!("missing required key `{key}` in [{section}]")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Coupling {
    Multiplicative,
    Additive(Q),
}

impl Coupling {
    fn parse(text: &str) -> Result<Self, String> {
        let call = FamilyCall::parse(text).map_err(|e| e.to_string())?;
        match call.name.as_str() {
            "multiplicative" if call.positional.is_empty() && call.named.is_empty() => Ok(Coupling::Multiplicative),
            "additive" => {
                call.check_arity(&["c"]).map_err(|e| e.to_string())?;
                Ok(Coupling::Additive(call.require("c", 0).map_err(|e| e.to_string())?.clone()))
            }
            _ => Err(format!("unknown coupling `{text}`; use `multiplicative` or `additive(c)`")),
        }
    }

    fn label(&self) -> String {
        match self {
            Coupling::Multiplicative => "multiplicative".into(),
            Coupling::Additive(c) => format!("additive({})", show(c)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Initial {
    Bump { amplitude: Q, width: Q },
    Gaussian { amplitude: Q, width: Q },
    Constant(Q),
}

impl Initial {
    fn parse(text: &str) -> Result<Self, String> {
        let call = FamilyCall::parse(text).map_err(|e| e.to_string())?;
        let req = |k: &str, i: usize| call.require(k, i).cloned().map_err(|e| e.to_string());
        let init = match call.name.as_str() {
            "bump" | "gaussian" => {
                call.check_arity(&["amplitude", "width"]).map_err(|e| e.to_string())?;
                let (amplitude, width) = (req("amplitude", 0)?, req("width", 1)?);
                if width <= Q::zero() {
                    return Err("initial width must be positive".into());
                }
                if call.name == "bump" {
                    Initial::Bump { amplitude, width }
                } else {
                    Initial::Gaussian { amplitude, width }
                }
            }
            "constant" => {
                call.check_arity(&["c"]).map_err(|e| e.to_string())?;
                Initial::Constant(req("c", 0)?)
            }
            _ => return Err(format!("unknown initial condition `{text}`")),
        };
        Ok(init)
    }

    fn label(&self) -> String {
        match self {
            Initial::Bump { amplitude, width } => format!("bump({}, {})", show(amplitude), show(width)),
            Initial::Gaussian { amplitude, width } => format!("gaussian({}, {})", show(amplitude), show(width)),
            Initial::Constant(c) => format!("constant({})", show(c)),
        }
    }

    fn build(&self) -> InitialCondition {
        match self {
            Initial::Bump { amplitude, width } => InitialCondition::Bump {
                amplitude: to_f64(amplitude),
                width: to_f64(width),
            },
            Initial::Gaussian { amplitude, width } => InitialCondition::Gaussian {
                amplitude: to_f64(amplitude),
                width: to_f64(width),
            },
            Initial::Constant(c) => InitialCondition::Constant(to_f64(c)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub phi: BernsteinFunction,
    pub pi: CorrelationMeasure,
    pub params: ParamSet,
    /// Drift coefficient applied on every axis.
    pub drift: Q,
    pub zeta: Q,
    pub xi: Q,
    pub c_sd: Q,
    pub c_b: Q,
    pub c_sm: Q,
    pub m: Q,
    pub coupling: Coupling,
    pub initial: Initial,
    pub symbol: SymbolKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSettings {
    pub t: Q,
    pub dt: Q,
    pub paths: u64,
    pub guard: Q,
    pub negativity_tol: Q,
    /// `0` disables snapshots.
    pub snapshot_every: u64,
    pub probes: u64,
    pub calibration_samples: u64,
    pub calibration: Option<Q>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Option<String>,
    pub seed: u64,
    pub output: String,
    pub model: ModelConfig,
    pub n: u64,
    pub l: Q,
    pub run: RunSettings,
}

pub const SUBCOMMANDS: &[&str] = &["analyze", "kernel", "verify-sbm", "simulate", "regularity", "reproduce"];

fn positive(x: &Q, pos: Pos, key: &str) -> Result<(), CliError> {
    if *x > Q::zero() {
        Ok(())
    } else {
        Err(CliError::parse(pos, format!("`{key}` must be positive")))
    }
}

pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    let t = tokenize(text)?;
    let command = match t.string("", "command") {
        Some((c, pos)) => {
            if !SUBCOMMANDS.contains(&c.as_str()) {
                return Err(CliError::parse(pos, format!("unknown command `{c}`")));
            }
            Some(c)
        }
        None => None,
    };
    let (seed, _) = t.int_or("", "seed", 0)?;
    let output = t.string("", "output").map_or_else(|| "out".to_string(), |(s, _)| s);

    let (phi_text, phi_pos) = t.required_string("model", "phi")?;
    let phi = BernsteinFunction::parse(&phi_text).map_err(|e| CliError::parse(phi_pos, format!("phi: {e}")))?;
    let (pi_text, pi_pos) = t.required_string("model", "pi")?;
    let pi = CorrelationMeasure::parse(&pi_text).map_err(|e| CliError::parse(pi_pos, format!("pi: {e}")))?;
    let (d, d_pos) = t.required_num("model", "d")?;
    let d = d.to_integer().to_usize().filter(|v| (1..=3).contains(v)).ok_or_else(|| {
        CliError::parse(d_pos, "`d` must be 1, 2 or 3")
    })?;
    pi.validate_for(d).map_err(|e| CliError::parse(pi_pos, format!("pi: {e}")))?;
    let (p, _) = t.required_num("model", "p")?;
    let (q, _) = t.required_num("model", "q")?;
    let (gamma, _) = t.required_num("model", "gamma")?;
    let (r, _) = t.required_num("model", "r")?;
    let (delta0, delta0_pos) = t.num_or("model", "delta0", phi.declared_delta0_exact().clone());
    if delta0 > *phi.declared_delta0_exact() {
        return Err(CliError::parse(
            delta0_pos,
            format!(
                "δ₀ = {} exceeds the index {} certified for {}",
                show(&delta0),
                show(phi.declared_delta0_exact()),
                phi.label()
            ),
        ));
    }
    let zero = Q::zero();
    let one = Q::one();
    let (drift, _) = t.num_or("model", "drift", zero.clone());
    let params = ParamSet {
        d,
        p,
        q,
        gamma,
        delta0,
        r,
        lambda_sd: t.num_or("model", "lambda_sd", zero.clone()).0,
        lambda_b: t.num_or("model", "lambda_b", zero.clone()).0,
        lambda_sm: t.num_or("model", "lambda_sm", zero.clone()).0,
        drift_active: !drift.is_zero(),
    };
    params
        .validate()
        .map_err(|e| CliError::parse(t.section_pos("model"), e.to_string()))?;
    let (m, m_pos) = t.num_or("model", "m", Q::from_integer(10.into()));
    if m < one {
        return Err(CliError::parse(m_pos, "cutoff level `m` must be at least 1"));
    }
    let (zeta, zeta_pos) = t.num_or("model", "zeta", one.clone());
    positive(&zeta, zeta_pos, "zeta")?;
    let coupling = match t.string("model", "coupling") {
        Some((s, pos)) => Coupling::parse(&s).map_err(|e| CliError::parse(pos, e))?,
        None => Coupling::Multiplicative,
    };
    let initial = match t.string("model", "initial") {
        Some((s, pos)) => Initial::parse(&s).map_err(|e| CliError::parse(pos, e))?,
        None => Initial::Bump {
            amplitude: one.clone(),
            width: one.clone(),
        },
    };
    let symbol = match t.string("model", "symbol") {
        Some((s, pos)) => SymbolKind::parse(&s).map_err(|e| CliError::parse(pos, e.to_string()))?,
        None => SymbolKind::Lattice,
    };
    let model = ModelConfig {
        phi,
        pi,
        params,
        drift,
        zeta,
        xi: t.num_or("model", "xi", one.clone()).0,
        c_sd: t.num_or("model", "c_sd", one.clone()).0,
        c_b: t.num_or("model", "c_b", one.clone()).0,
        c_sm: t.num_or("model", "c_sm", one.clone()).0,
        m,
        coupling,
        initial,
        symbol,
    };

    let (n, n_pos) = t.int_or("grid", "n", 256)?;
    let (l, l_pos) = t.num_or("grid", "l", Q::from_integer(32.into()));
    positive(&l, l_pos, "l")?;
    GridSpec::new(d, n as usize, to_f64(&l)).map_err(|e| CliError::parse(n_pos, e.to_string()))?;

    let (t_final, t_pos) = t.num_or("run", "t", one.clone());
    positive(&t_final, t_pos, "t")?;
    let (dt, dt_pos) = t.num_or("run", "dt", Q::new(1.into(), 1024.into()));
    positive(&dt, dt_pos, "dt")?;
    if dt > t_final {
        return Err(CliError::parse(dt_pos, "`dt` exceeds the horizon `t`"));
    }
    let (paths, paths_pos) = t.int_or("run", "paths", 1)?;
    if paths == 0 {
        return Err(CliError::parse(paths_pos, "`paths` must be at least 1"));
    }
    let (guard, guard_pos) = t.num_or("run", "guard", Q::from_integer(1_000_000.into()));
    positive(&guard, guard_pos, "guard")?;
    let (negativity_tol, tol_pos) = t.num_or("run", "negativity_tol", Q::new(1.into(), 100_000_000.into()));
    if negativity_tol < zero {
        return Err(CliError::parse(tol_pos, "`negativity_tol` must be nonnegative"));
    }
    let (probes, probes_pos) = t.int_or("run", "probes", 8)?;
    if probes > n / 2 {
        return Err(CliError::parse(probes_pos, "more probes than points in the central half"));
    }
    let (calibration_samples, cs_pos) = t.int_or("run", "calibration_samples", 256)?;
    if calibration_samples < 2 {
        return Err(CliError::parse(cs_pos, "`calibration_samples` must be at least 2"));
    }
    let calibration = match t.num("run", "calibration") {
        Some((c, pos)) => {
            positive(&c, pos, "calibration")?;
            Some(c)
        }
        None => None,
    };
    let run = RunSettings {
        t: t_final,
        dt,
        paths,
        guard,
        negativity_tol,
        snapshot_every: t.int_or("run", "snapshot_every", 0)?.0,
        probes,
        calibration_samples,
        calibration,
    };
    let config = RunConfig {
        command,
        seed,
        output,
        model,
        n,
        l,
        run,
    };
    config
        .model_spec()
        .validate(&config.grid())
        .map_err(|e| CliError::parse(t.section_pos("model"), e.to_string()))?;
    Ok(config)
}

impl RunConfig {
    pub fn grid(&self) -> GridSpec {
        GridSpec::new(self.model.params.d, self.n as usize, to_f64(&self.l)).expect("validated while parsing")
    }

    pub fn model_spec(&self) -> ModelSpec {
        let m = &self.model;
        ModelSpec {
            phi: m.phi.clone(),
            pi: m.pi.clone(),
            gamma: to_f64(&m.params.gamma),
            zeta: to_f64(&m.zeta),
            xi: to_f64(&m.xi),
            drift: vec![to_f64(&m.drift); m.params.d],
            nonlinearity: Nonlinearity {
                lambda_sd: to_f64(&m.params.lambda_sd),
                lambda_b: to_f64(&m.params.lambda_b),
                lambda_sm: to_f64(&m.params.lambda_sm),
                c_sd: to_f64(&m.c_sd),
                c_b: to_f64(&m.c_b),
                c_sm: to_f64(&m.c_sm),
            },
            m: to_f64(&m.m),
            u0: m.initial.build(),
            coupling: match &m.coupling {
                Coupling::Multiplicative => NoiseCoupling::Multiplicative,
                Coupling::Additive(c) => NoiseCoupling::Additive(to_f64(c)),
            },
            symbol: m.symbol,
        }
    }

    /// Evenly spaced points across the central half of the first axis, on
    /// the middle row when `d = 2`.
    pub fn probe_points(&self) -> Vec<usize> {
        let n = self.n as usize;
        let count = self.run.probes as usize;
        let row = if self.model.params.d == 2 { (n / 2) * n } else { 0 };
        (0..count).map(|k| row + n / 4 + k * (n / 2) / count.max(1)).collect()
    }

    pub fn run_options(&self) -> RunOptions {
        let r = &self.run;
        let mut options = RunOptions::new(to_f64(&r.t), to_f64(&r.dt), r.paths as usize);
        options.guard_ceiling = to_f64(&r.guard);
        options.negativity_rel_tol = to_f64(&r.negativity_tol);
        options.probe_points = self.probe_points();
        options.snapshot_every = (r.snapshot_every > 0).then_some(r.snapshot_every as usize);
        options.calibration = r.calibration.as_ref().map(to_f64);
        options.calibration_samples = r.calibration_samples as usize;
        options
    }

    pub fn rng_spec(&self) -> RngSpec {
        RngSpec::new(self.seed)
    }

    /// Canonical text form: every key, defaults filled, fixed order.
    pub fn echo(&self) -> String {
        let m = &self.model;
        let p = &m.params;
        let r = &self.run;
        let quoted = |s: &str| format!("\"{s}\"");
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            if k.starts_with('[') {
                let _ = write!(out, "\n{k}\n");
            } else {
                let _ = writeln!(out, "{k} = {v}");
            }
        };
        if let Some(c) = &self.command {
            kv("command", quoted(c));
        }
        kv("seed", self.seed.to_string());
        kv("output", quoted(&self.output));
        kv("[model]", String::new());
        kv("phi", quoted(m.phi.label()));
        kv("pi", quoted(&m.pi.label()));
        kv("d", p.d.to_string());
        kv("p", show(&p.p));
        kv("q", show(&p.q));
        kv("gamma", show(&p.gamma));
        kv("delta0", show(&p.delta0));
        kv("r", show(&p.r));
        kv("lambda_sd", show(&p.lambda_sd));
        kv("lambda_b", show(&p.lambda_b));
        kv("lambda_sm", show(&p.lambda_sm));
        kv("drift", show(&m.drift));
        kv("zeta", show(&m.zeta));
        kv("xi", show(&m.xi));
        kv("c_sd", show(&m.c_sd));
        kv("c_b", show(&m.c_b));
        kv("c_sm", show(&m.c_sm));
        kv("m", show(&m.m));
        kv("coupling", quoted(&m.coupling.label()));
        kv("initial", quoted(&m.initial.label()));
        kv("symbol", quoted(m.symbol.name()));
        kv("[grid]", String::new());
        kv("n", self.n.to_string());
        kv("l", show(&self.l));
        kv("[run]", String::new());
        kv("t", show(&r.t));
        kv("dt", show(&r.dt));
        kv("paths", r.paths.to_string());
        kv("guard", show(&r.guard));
        kv("negativity_tol", show(&r.negativity_tol));
        kv("snapshot_every", r.snapshot_every.to_string());
        kv("probes", r.probes.to_string());
        kv("calibration_samples", r.calibration_samples.to_string());
        if let Some(c) = &r.calibration {
            kv("calibration", show(c));
        }
        out
    }

    /// First 16 hex digits of the SHA-256 of [`RunConfig::echo`].
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.echo().as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}
