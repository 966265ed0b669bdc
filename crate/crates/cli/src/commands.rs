use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;
use srdae_core::comparisons::{self, Check, Kind};
use srdae_core::correlation::{dalang_check, kernel_order, DalangVerdict};
use srdae_core::feasibility::{check_admissible, holder_exponents, max_lambda_sm, FeasibilityReport};
use srdae_core::fit::mean_se;
use srdae_core::kernel::{asymptotic_class, convolution_table, AsymptoticClass, BesselKernel, BesselKernelSpec, ConvRow, Verdict};
use srdae_core::rational::{show, to_f64, Q};
use srdae_core::regularity::{estimate_holder_space, estimate_holder_time, HolderFit, SpaceFit, SpaceModel};
use srdae_core::solver::{self, nonnegativity_probe, RunRecord};
use srdae_core::stochastics::{sample_sbm, sample_subordinator, Purpose};

use crate::config::{parse_config, RunConfig};
use crate::error::CliError;

pub type Result<T> = std::result::Result<T, CliError>;

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_config(&text)
}

/// Output directory whose files all carry the config hash and seed.
pub struct Artifacts {
    dir: PathBuf,
    hash: String,
    seed: u64,
}

impl Artifacts {
    pub fn new(dir: impl Into<PathBuf>, config: &RunConfig) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
        let out = Self {
            dir,
            hash: config.hash(),
            seed: config.seed,
        };
        out.write("config.txt", &config.echo())?;
        Ok(out)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn write(&self, name: &str, body: &str) -> Result<PathBuf> {
        let path = self.dir.join(name);
        fs::write(&path, body).map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }

    /// CSV with `# config_hash=…` and `# seed=…` comment lines on top.
    pub fn csv(&self, name: &str, header: &str, rows: &[String]) -> Result<PathBuf> {
        let mut body = format!("# config_hash={}\n# seed={}\n{header}\n", self.hash, self.seed);
        for row in rows {
            body.push_str(row);
            body.push('\n');
        }
        self.write(name, &body)
    }

    /// Line-delimited JSON; every line carries `config_hash` and `seed`.
    pub fn jsonl(&self, name: &str, lines: &[serde_json::Value]) -> Result<PathBuf> {
        let mut body = String::new();
        for line in lines {
            let mut line = line.clone();
            if let Some(obj) = line.as_object_mut() {
                obj.insert("config_hash".into(), json!(self.hash));
                obj.insert("seed".into(), json!(self.seed));
            }
            body.push_str(&serde_json::to_string(&line)?);
            body.push('\n');
        }
        self.write(name, &body)
    }
}

fn opt_q(x: &Option<Q>) -> serde_json::Value {
    x.as_ref().map_or(serde_json::Value::Null, |v| json!(show(v)))
}

#[derive(Debug, Clone)]
pub struct Analysis {
    pub feasibility: FeasibilityReport,
    pub dalang: DalangVerdict,
    pub max_lambda_sm: Q,
    pub exponents: Option<(Q, Q)>,
}

pub fn analyze(config: &RunConfig) -> Result<Analysis> {
    let m = &config.model;
    let p = &m.params;
    Ok(Analysis {
        feasibility: check_admissible(p, &m.pi)?,
        dalang: dalang_check(&m.pi, p.d, &p.delta0, &p.gamma, &p.r)?,
        max_lambda_sm: max_lambda_sm(p)?,
        exponents: holder_exponents(p),
    })
}

impl Analysis {
    pub fn json_lines(&self) -> Vec<serde_json::Value> {
        let mut lines: Vec<serde_json::Value> = self
            .feasibility
            .entries
            .iter()
            .map(|e| {
                json!({
                    "record": "condition",
                    "id": e.name,
                    "description": e.description,
                    "lhs": opt_q(&e.lhs),
                    "lower": opt_q(&e.lower),
                    "upper": opt_q(&e.upper),
                    "status": e.status.to_string(),
                    "note": e.note,
                })
            })
            .collect();
        lines.push(json!({
            "record": "noise",
            "alpha_index": show(&self.dalang.alpha_index),
            "branch": self.dalang.branch.to_string(),
            "holds": self.dalang.holds,
            "reason": self.dalang.reason,
        }));
        lines.push(json!({
            "record": "summary",
            "overall": self.feasibility.overall,
            "holder_window": self.feasibility.holder_window.as_ref().map(|(a, b)| vec![show(a), show(b)]),
            "default_alpha": self.exponents.as_ref().map(|(a, _)| show(a)),
            "default_beta": self.exponents.as_ref().map(|(_, b)| show(b)),
            "max_lambda_sm": show(&self.max_lambda_sm),
        }));
        lines
    }

    pub fn text(&self) -> String {
        let mut out = String::new();
        for e in &self.feasibility.entries {
            let lhs = e.lhs.as_ref().map_or("-".to_string(), show);
            out.push_str(&format!("({}) {:<14} {:<48} lhs={lhs}\n", e.name, e.status.to_string(), e.description));
        }
        let d = &self.dalang;
        out.push_str(&format!(
            "noise: alpha={} branch={} holds={} ({})\n",
            show(&d.alpha_index),
            d.branch,
            d.holds,
            d.reason
        ));
        match &self.feasibility.holder_window {
            Some((a, b)) => out.push_str(&format!("holder window: ({}, {})\n", show(a), show(b))),
            None => out.push_str("holder window: empty\n"),
        }
        if let Some((a, b)) = &self.exponents {
            out.push_str(&format!("default exponents: alpha={} beta={}\n", show(a), show(b)));
        }
        out.push_str(&format!("max lambda_sm: {}\n", show(&self.max_lambda_sm)));
        out.push_str(&format!("overall: {}\n", if self.feasibility.overall { "admissible" } else { "not admissible" }));
        out
    }
}

#[derive(Debug, Clone)]
pub struct KernelSummary {
    pub beta: f64,
    pub d: usize,
    pub r: f64,
    pub unit_mass: f64,
    pub lr_norm: Verdict,
    pub class: AsymptoticClass,
    pub rows: Vec<ConvRow>,
    pub fitted_slope: Option<f64>,
}

/// Radii `2^{-3} … 2^{-8}` used for convolution tables.
pub fn default_radii() -> Vec<f64> {
    (3..=8).map(|k| 2f64.powi(-k)).collect()
}

/// The kernel `R_β` with `β = δ₀(1−γ)` behind the noise condition.
pub fn kernel(config: &RunConfig) -> Result<KernelSummary> {
    let p = &config.model.params;
    let beta = to_f64(&kernel_order(&p.delta0, &p.gamma));
    let r = to_f64(&p.r);
    let kernel = BesselKernel::new(BesselKernelSpec::new(beta, p.d)?)?;
    let unit_mass = kernel.power_integral(1.0)?.ok_or_else(|| CliError::Usage("kernel mass diverged".into()))?;
    let alpha = config.model.params.d as f64 - r * (p.d as f64 - beta);
    let class = asymptotic_class(alpha, p.d)?;
    let radii = default_radii();
    let rows = match class {
        AsymptoticClass::Bounded => Vec::new(),
        _ => convolution_table(&kernel, r, &radii)?,
    };
    let fitted_slope = (!rows.is_empty())
        .then(|| {
            let values: Vec<f64> = rows.iter().map(|row| row.value).collect();
            srdae_core::fit::loglog_fit(&radii, &values).map(|f| f.slope)
        })
        .flatten();
    Ok(KernelSummary {
        beta,
        d: p.d,
        r,
        unit_mass,
        lr_norm: kernel.lr_norm(r)?,
        class,
        rows,
        fitted_slope,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct MomentRow {
    /// `λ` for the Laplace rows, `ξ` (first axis) for the characteristic rows.
    pub argument: f64,
    pub empirical: f64,
    pub standard_error: f64,
    pub theory: f64,
    pub pass: bool,
}

#[derive(Debug, Clone)]
pub struct SbmReport {
    pub paths: usize,
    pub t: f64,
    pub laplace: Vec<MomentRow>,
    pub characteristic: Vec<MomentRow>,
}

impl SbmReport {
    pub fn all_pass(&self) -> bool {
        self.laplace.iter().chain(&self.characteristic).all(|r| r.pass)
    }
}

fn moment_row(argument: f64, samples: &[f64], theory: f64) -> MomentRow {
    let (m, se) = mean_se(samples);
    MomentRow {
        argument,
        empirical: m,
        standard_error: se,
        theory,
        pass: (m - theory).abs() <= 3.0 * se.max(1e-12),
    }
}

/// Laplace transform of `S_t` and characteristic function of `X_t = B_{S_t}`
/// against `e^{−tφ(λ)}` and `e^{−tφ(|ξ|²)}`, at `t` = the run horizon.
pub fn verify_sbm(config: &RunConfig, paths: usize, lambdas: &[f64], xis: &[f64]) -> Result<SbmReport> {
    let phi = &config.model.phi;
    let d = config.model.params.d;
    let t = to_f64(&config.run.t);
    let rng = config.rng_spec();
    let grid = [0.0, t];
    let mut sub_rng = rng.stream(0, Purpose::Subordinator);
    let terminal: Vec<f64> = (0..paths)
        .map(|_| sample_subordinator(phi, &grid, &mut sub_rng).map(|p| p.terminal()))
        .collect::<std::result::Result<_, _>>()?;
    let mut laplace = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let samples: Vec<f64> = terminal.iter().map(|s| (-lambda * s).exp()).collect();
        laplace.push(moment_row(lambda, &samples, (-t * phi.eval(lambda)?).exp()));
    }
    let mut sub_rng = rng.stream(1, Purpose::Subordinator);
    let mut bm_rng = rng.stream(1, Purpose::Brownian);
    let first_axis: Vec<f64> = (0..paths)
        .map(|_| sample_sbm(phi, d, &grid, &mut sub_rng, &mut bm_rng).map(|p| p.positions[1][0]))
        .collect::<std::result::Result<_, _>>()?;
    let characteristic = xis
        .iter()
        .map(|&xi| {
            let samples: Vec<f64> = first_axis.iter().map(|x| (xi * x).cos()).collect();
            moment_row(xi, &samples, (-t * phi.symbol(xi * xi)).exp())
        })
        .collect();
    Ok(SbmReport {
        paths,
        t,
        laplace,
        characteristic,
    })
}

pub fn simulate(config: &RunConfig) -> Result<Vec<RunRecord>> {
    Ok(solver::run(&config.model_spec(), config.grid(), &config.rng_spec(), &config.run_options())?)
}

/// `records.jsonl`: a header line with the config echo, then one record per path.
pub fn write_records(artifacts: &Artifacts, config: &RunConfig, records: &[RunRecord]) -> Result<PathBuf> {
    let mut lines = vec![json!({ "record": "header", "config": config.echo() })];
    for rec in records {
        let mut value = serde_json::to_value(rec)?;
        value
            .as_object_mut()
            .expect("records serialize as objects")
            .insert("record".into(), json!("path"));
        lines.push(value);
    }
    artifacts.jsonl("records.jsonl", &lines)
}

pub fn summary_rows(records: &[RunRecord]) -> Vec<String> {
    records
        .iter()
        .map(|r| {
            let last = r.diagnostics.last();
            let min = r.diagnostics.iter().map(|d| d.min).fold(r.initial_min, f64::min);
            let negatives: usize = r.diagnostics.iter().map(|d| d.negative_count).sum();
            format!(
                "{},{},{},{:e},{},{:e},{:e}",
                r.path,
                r.diagnostics.len(),
                r.blowup.as_ref().map_or("none".to_string(), |b| format!("step {}", b.step)),
                min,
                negatives,
                last.map_or(r.initial_sup, |d| d.sup),
                last.map_or(0.0, |d| d.mass),
            )
        })
        .collect()
}

pub const SUMMARY_HEADER: &str = "path,steps,blowup,min,negative_points,final_sup,final_mass";

/// Reads a `records.jsonl` file back, returning its config and records.
pub fn read_records(path: &Path) -> Result<(RunConfig, Vec<RunRecord>)> {
    let file = fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut lines = BufReader::new(file).lines();
    let header = lines
        .next()
        .ok_or_else(|| CliError::Usage(format!("{}: empty record file", path.display())))?
        .map_err(|e| CliError::io(path, e))?;
    let header: serde_json::Value = serde_json::from_str(&header)?;
    let text = header["config"]
        .as_str()
        .ok_or_else(|| CliError::Usage(format!("{}: first line is not a header", path.display())))?;
    let config = parse_config(text)?;
    if header["config_hash"].as_str() != Some(config.hash().as_str()) {
        return Err(CliError::Usage(format!("{}: config hash does not match its header", path.display())));
    }
    let mut records = Vec::new();
    for line in lines {
        let line = line.map_err(|e| CliError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        records.push(serde_json::from_str(&line)?);
    }
    Ok((config, records))
}

#[derive(Debug, Clone)]
pub struct RegularityReport {
    pub alpha: f64,
    pub beta: f64,
    pub q: f64,
    pub time: HolderFit,
    /// Lower bound `α − 1/q − 0.1` the temporal fit is held to.
    pub time_threshold: f64,
    pub space: Option<SpaceFit>,
}

impl RegularityReport {
    pub fn time_pass(&self) -> bool {
        self.time.fitted_exponent >= self.time_threshold
    }
}

/// Temporal fit on the probe points and, when snapshots exist, the spatial
/// modulus ratio, at the default `(α, β)`.
pub fn regularity(config: &RunConfig, records: &[RunRecord]) -> Result<RegularityReport> {
    let p = &config.model.params;
    let (alpha, beta) = holder_exponents(p).ok_or_else(|| {
        CliError::Usage("the Hölder window 1/q < γ/2 − d/(2δ₀p) is empty for this config".into())
    })?;
    let (alpha, beta) = (to_f64(&alpha), to_f64(&beta));
    let q = to_f64(&p.q);
    let points = records.first().map(|r| r.probe_points.clone()).unwrap_or_default();
    let time = estimate_holder_time(records, &points)?;
    let space = if records.iter().any(|r| !r.snapshots.is_empty()) {
        Some(estimate_holder_space(
            records,
            &config.grid(),
            SpaceModel {
                phi: &config.model.phi,
                gamma: to_f64(&p.gamma),
                beta,
                p: to_f64(&p.p),
            },
            None,
        )?)
    } else {
        None
    };
    Ok(RegularityReport {
        alpha,
        beta,
        q,
        time,
        time_threshold: alpha - 1.0 / q - 0.1,
        space,
    })
}

pub struct Reproduction {
    pub checks: Vec<Check>,
}

impl Reproduction {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn text(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let kind = match c.kind {
                Kind::Exact => "exact",
                Kind::Flag => "flag",
            };
            out.push_str(&format!(
                "{} {:<20} {:<18} {:<5} expected={} computed={}  {}\n",
                if c.pass { "PASS" } else { "FAIL" },
                c.case,
                c.id,
                kind,
                c.expected,
                c.computed,
                c.description
            ));
        }
        let passed = self.checks.iter().filter(|c| c.pass).count();
        out.push_str(&format!("{passed}/{} checks passed\n", self.checks.len()));
        out
    }

    pub fn jsonl(&self) -> String {
        self.checks
            .iter()
            .map(|c| {
                json!({
                    "case": c.case,
                    "id": c.id,
                    "kind": match c.kind { Kind::Exact => "exact", Kind::Flag => "flag" },
                    "expected": c.expected,
                    "computed": c.computed,
                    "pass": c.pass,
                    "description": c.description,
                })
                .to_string()
                    + "\n"
            })
            .collect()
    }
}

/// All comparison cases, or the listed ones in the given order.
pub fn reproduce(cases: &[String]) -> Result<Reproduction> {
    let checks = if cases.is_empty() {
        comparisons::reproduce(None)?
    } else {
        let mut all = Vec::new();
        for c in cases {
            all.extend(comparisons::reproduce(Some(c))?);
        }
        all
    };
    Ok(Reproduction { checks })
}

pub fn nonnegativity_line(records: &[RunRecord]) -> Result<String> {
    let s = nonnegativity_probe(records)?;
    Ok(format!(
        "nonnegativity: {} grid-time points below -{:e}; global min {:e}",
        s.count_below, s.tol, s.global_min
    ))
}

pub fn print(out: &mut impl Write, text: &str) -> Result<()> {
    out.write_all(text.as_bytes()).map_err(|e| CliError::io("<stdout>", e))
}
