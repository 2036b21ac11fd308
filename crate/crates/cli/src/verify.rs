//! Re-checks an analysis artifact against the root oracle, the simulator and
//! the characteristic function.

use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use fdde_stab::case_tau1_zero::{b_of_tau, tau_star_pp};
use fdde_stab::char_eq::{char_value, char_value_single, root_stability};
use fdde_stab::fdde_sim::{simulate_auto, Nonlinearity};
use fdde_stab::single_delay::crossing_frequency;
use fdde_stab::{SystemParams, Verdict};

use crate::config::{SimArgs, VerifyArgs};
use crate::error::{CliError, CliResult};
use crate::output::{num, to_object, Artifact, Table};

#[derive(Debug, Clone, Copy, PartialEq)]
struct Model {
    alpha: f64,
    k: f64,
    gamma: f64,
}

/// A verdict over `[lo, hi)`; `hi = None` means unbounded.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Interval {
    lo: f64,
    hi: Option<f64>,
    verdict: Verdict,
}

impl Interval {
    fn sample(&self) -> f64 {
        match self.hi {
            Some(hi) => 0.5 * (self.lo + hi),
            None if self.lo > 0.0 => 1.5 * self.lo,
            None => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Loaded {
    Classification {
        model: Model,
        segments: Vec<Interval>,
    },
    Boundary {
        model: Model,
        points: Vec<(f64, f64, f64)>,
    },
    Slice {
        model: Model,
        tau2: f64,
        intervals: Vec<Interval>,
    },
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub check: String,
    pub at: String,
    pub expected: String,
    pub observed: String,
    pub pass: bool,
}

fn bad(path: &Path, msg: impl std::fmt::Display) -> CliError {
    CliError::Artifact(format!("{}: {msg}", path.display()))
}

fn field(v: &Value, key: &str, path: &Path) -> CliResult<f64> {
    v.get(key)
        .and_then(Value::as_f64)
        .ok_or_else(|| bad(path, format!("missing numeric field `{key}`")))
}

fn model_from_config(config: &Value, path: &Path) -> CliResult<Model> {
    Ok(Model {
        alpha: field(config, "alpha", path)?,
        k: field(config, "k", path)?,
        gamma: field(config, "gamma", path)?,
    })
}

fn parse_verdict(s: &str, path: &Path) -> CliResult<Verdict> {
    match s.to_ascii_lowercase().as_str() {
        "stable" => Ok(Verdict::Stable),
        "unstable" => Ok(Verdict::Unstable),
        "inconclusive" => Ok(Verdict::Inconclusive),
        other => Err(bad(path, format!("unknown verdict `{other}`"))),
    }
}

fn parse_num(s: &str, path: &Path) -> CliResult<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| bad(path, format!("`{s}` is not a number")))
}

fn load_json(text: &str, path: &Path) -> CliResult<Loaded> {
    let v: Value = serde_json::from_str(text).map_err(|e| bad(path, e))?;
    let kind = v
        .get("kind")
        .and_then(Value::as_str)
        .ok_or_else(|| bad(path, "missing `kind`"))?;
    let config = v
        .get("config")
        .ok_or_else(|| bad(path, "missing `config`"))?;
    let model = model_from_config(config, path)?;
    let array = |key: &str| -> CliResult<&Vec<Value>> {
        v.get(key)
            .and_then(Value::as_array)
            .ok_or_else(|| bad(path, format!("missing array `{key}`")))
    };
    match kind {
        "classification" => {
            let delays = array("critical_delays")?
                .iter()
                .map(|d| {
                    d.as_f64()
                        .ok_or_else(|| bad(path, "non-numeric critical delay"))
                })
                .collect::<CliResult<Vec<f64>>>()?;
            let verdicts = array("verdicts")?
                .iter()
                .map(|s| parse_verdict(s.as_str().unwrap_or_default(), path))
                .collect::<CliResult<Vec<Verdict>>>()?;
            if verdicts.len() != delays.len() + 1 {
                return Err(bad(path, "need one more verdict than critical delays"));
            }
            let segments = verdicts
                .iter()
                .enumerate()
                .map(|(i, &verdict)| Interval {
                    lo: if i == 0 { 0.0 } else { delays[i - 1] },
                    hi: delays.get(i).copied(),
                    verdict,
                })
                .collect();
            Ok(Loaded::Classification { model, segments })
        }
        "boundary" => {
            let points = array("points")?
                .iter()
                .map(|p| {
                    Ok((
                        field(p, "v", path)?,
                        field(p, "tau1", path)?,
                        field(p, "tau2", path)?,
                    ))
                })
                .collect::<CliResult<Vec<_>>>()?;
            Ok(Loaded::Boundary { model, points })
        }
        "slice" => {
            let intervals = array("intervals")?
                .iter()
                .map(|iv| {
                    Ok(Interval {
                        lo: field(iv, "tau1_lo", path)?,
                        hi: Some(field(iv, "tau1_hi", path)?),
                        verdict: parse_verdict(
                            iv.get("verdict")
                                .and_then(Value::as_str)
                                .unwrap_or_default(),
                            path,
                        )?,
                    })
                })
                .collect::<CliResult<Vec<_>>>()?;
            Ok(Loaded::Slice {
                model,
                tau2: field(&v, "tau2", path)?,
                intervals,
            })
        }
        other => Err(bad(
            path,
            format!("cannot verify artifacts of kind `{other}`"),
        )),
    }
}

fn load_csv(text: &str, path: &Path) -> CliResult<Loaded> {
    let mut kind = None;
    let mut config = None;
    for line in text.lines().take_while(|l| l.starts_with('#')) {
        if let Some(k) = line.strip_prefix("# kind:") {
            kind = Some(k.trim().to_string());
        } else if let Some(c) = line.strip_prefix("# config:") {
            config = Some(serde_json::from_str::<Value>(c.trim()).map_err(|e| bad(path, e))?);
        }
    }
    let kind = kind.ok_or_else(|| bad(path, "missing `# kind:` header"))?;
    let config = config.ok_or_else(|| bad(path, "missing `# config:` header"))?;
    let model = model_from_config(&config, path)?;
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let rows = reader
        .records()
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| bad(path, e))?;
    let col = |r: &csv::StringRecord, i: usize| -> CliResult<String> {
        r.get(i)
            .map(str::to_string)
            .ok_or_else(|| bad(path, format!("short row {r:?}")))
    };
    let intervals = |rows: &[csv::StringRecord]| -> CliResult<Vec<Interval>> {
        rows.iter()
            .map(|r| {
                let hi = parse_num(&col(r, 1)?, path)?;
                Ok(Interval {
                    lo: parse_num(&col(r, 0)?, path)?,
                    hi: hi.is_finite().then_some(hi),
                    verdict: parse_verdict(&col(r, 2)?, path)?,
                })
            })
            .collect()
    };
    match kind.as_str() {
        "classification" => Ok(Loaded::Classification {
            model,
            segments: intervals(&rows)?,
        }),
        "boundary" => {
            let points = rows
                .iter()
                .map(|r| {
                    Ok((
                        parse_num(&col(r, 0)?, path)?,
                        parse_num(&col(r, 1)?, path)?,
                        parse_num(&col(r, 2)?, path)?,
                    ))
                })
                .collect::<CliResult<Vec<_>>>()?;
            Ok(Loaded::Boundary { model, points })
        }
        "slice" => Ok(Loaded::Slice {
            model,
            tau2: field(&config, "tau2", path)?,
            intervals: intervals(&rows)?,
        }),
        other => Err(bad(
            path,
            format!("cannot verify artifacts of kind `{other}`"),
        )),
    }
}

fn load(path: &Path) -> CliResult<(Loaded, &'static str)> {
    let text = std::fs::read_to_string(path).map_err(|e| bad(path, e))?;
    let loaded = if text.trim_start().starts_with('{') {
        load_json(&text, path)?
    } else {
        load_csv(&text, path)?
    };
    let kind = match loaded {
        Loaded::Classification { .. } => "classification",
        Loaded::Boundary { .. } => "boundary",
        Loaded::Slice { .. } => "slice",
    };
    Ok((loaded, kind))
}

fn verdict_checks(
    m: Model,
    tau1_of: impl Fn(f64) -> (f64, f64) + Sync,
    intervals: &[Interval],
    sim: &SimArgs,
) -> Vec<Check> {
    intervals
        .par_iter()
        .flat_map_iter(|iv| {
            let s = iv.sample();
            let (tau1, tau2) = tau1_of(s);
            let at = format!("tau1={},tau2={}", num(tau1), num(tau2));
            let expected = iv.verdict.to_string();
            let outcome = |label: &str, got: Result<Verdict, String>| {
                let observed = match &got {
                    Ok(v) => v.to_string(),
                    Err(e) => format!("error: {e}"),
                };
                Check {
                    check: label.into(),
                    at: at.clone(),
                    expected: expected.clone(),
                    observed,
                    pass: got.as_ref().ok() == Some(&iv.verdict),
                }
            };
            let p = SystemParams::new(m.alpha, m.k, m.gamma, tau1, tau2);
            let roots = p.as_ref().map_err(|e| e.to_string()).and_then(|p| {
                root_stability(p)
                    .map(|r| r.verdict)
                    .map_err(|e| e.to_string())
            });
            let g = Nonlinearity {
                kind: sim.g.into(),
                k: m.k,
            };
            let simulated = p.as_ref().map_err(|e| e.to_string()).and_then(|p| {
                simulate_auto(p, g, sim.phi)
                    .map(|t| t.verdict)
                    .map_err(|e| e.to_string())
            });
            [outcome("roots", roots), outcome("simulation", simulated)]
        })
        .collect()
}

fn crossing_checks(m: Model, segments: &[Interval], tol: f64) -> Vec<Check> {
    let tpp = tau_star_pp(m.k, m.gamma).ok();
    segments
        .iter()
        .skip(1)
        .map(|s| {
            let d = s.lo;
            let at = format!("tau={}", num(d));
            if let Some(t) = tpp.filter(|t| (d - t).abs() <= 1e-9 * t.max(1.0)) {
                return Check {
                    check: "region-edge".into(),
                    at,
                    expected: "tau_star_pp".into(),
                    observed: num(t),
                    pass: true,
                };
            }
            let (a, b) = (m.k - m.gamma, b_of_tau(m.k, m.gamma, d));
            let residual = crossing_frequency(a, b, m.alpha)
                .map(|w| char_value_single(Complex64::new(0.0, w), a, b, d, m.alpha).norm());
            Check {
                check: "axis-root".into(),
                at,
                expected: format!("|Δ(iω)| <= {}", num(tol)),
                observed: match &residual {
                    Ok(r) => format!("{r:e}"),
                    Err(e) => format!("error: {e}"),
                },
                pass: residual.is_ok_and(|r| r <= tol),
            }
        })
        .collect()
}

fn boundary_checks(m: Model, points: &[(f64, f64, f64)], tol: f64) -> Vec<Check> {
    points
        .par_iter()
        .map(|&(v, tau1, tau2)| {
            let residual = SystemParams::new(m.alpha, m.k, m.gamma, tau1, tau2)
                .map(|p| char_value(Complex64::new(0.0, v), &p).norm());
            Check {
                check: "axis-root".into(),
                at: format!("v={},tau1={},tau2={}", num(v), num(tau1), num(tau2)),
                expected: format!("|Δ(iv)| <= {}", num(tol)),
                observed: match &residual {
                    Ok(r) => format!("{r:e}"),
                    Err(e) => format!("error: {e}"),
                },
                pass: residual.as_ref().is_ok_and(|&r| r <= tol),
            }
        })
        .collect()
}

/// Report artifact plus whether every check passed. An artifact with nothing
/// to check (an empty boundary) passes.
pub fn verify(args: &VerifyArgs, config: Value) -> CliResult<(Artifact, bool)> {
    if !(args.tol > 0.0) {
        return Err(CliError::Domain(format!(
            "tol = {} must be positive",
            args.tol
        )));
    }
    let path = args.input.as_path();
    if !path.exists() {
        return Err(CliError::Artifact(format!(
            "{}: no such artifact",
            path.display()
        )));
    }
    let (loaded, artifact_kind) = load(path)?;
    let checks = match loaded {
        Loaded::Classification { model, segments } => {
            let mut c = crossing_checks(model, &segments, args.tol);
            c.extend(verdict_checks(model, |s| (0.0, s), &segments, &args.sim));
            c
        }
        Loaded::Boundary { model, points } => boundary_checks(model, &points, args.tol),
        Loaded::Slice {
            model,
            tau2,
            intervals,
        } => verdict_checks(model, |s| (s, tau2), &intervals, &args.sim),
    };
    let passed = checks.iter().all(|c| c.pass);
    let failed = checks.iter().filter(|c| !c.pass).count();
    let mut table = Table::new(&["check", "at", "expected", "observed", "pass"]);
    for c in &checks {
        table.push(vec![
            c.check.clone(),
            c.at.clone(),
            c.expected.clone(),
            c.observed.clone(),
            c.pass.to_string(),
        ]);
    }
    let body = json!({
        "artifact_kind": artifact_kind,
        "passed": passed,
        "failed": failed,
        "checks": checks,
    });
    Ok((
        Artifact {
            kind: "verification",
            config,
            body: to_object(&body)?,
            summary: Some(
                json!({"artifact_kind": artifact_kind, "passed": passed, "checks": checks.len(), "failed": failed}),
            ),
            table,
        },
        passed,
    ))
}
