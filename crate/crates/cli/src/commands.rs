//! Analysis commands: each builds one artifact.

use serde::Serialize;
use serde_json::{json, Value};

use fdde_stab::case_tau1_zero::{
    classify_pattern, find_intersections, tau_star_pp, trace_h1, trace_h2, CurveTrace,
    SwitchPattern,
};
use fdde_stab::fdde_sim::{
    default_policy, simulate_with_policy, Nonlinearity, SimPolicy, VerdictMetrics,
};
use fdde_stab::single_delay::{classify_with_delay, crossing_frequency, SingleDelayTag};
use fdde_stab::two_delay::{
    boundary_tau2_min, classify_tau2_slice, default_v_grid, instability_threshold, slice_crossings,
    trace_boundary, zero_root_branch, BoundaryPoint, BoundaryTrace, SliceInterval,
};
use fdde_stab::{SystemParams, Verdict};

use crate::config::{
    ClassifyArgs, CurveChoice, CurvesArgs, HopfArgs, ModelArgs, SimulateArgs, SliceArgs,
    TauPlaneArgs, TraceArgs,
};
use crate::error::{CliError, CliResult};
use crate::output::{num, to_object, Artifact, Table};

fn model_params(m: &ModelArgs, tau1: f64, tau2: f64) -> CliResult<SystemParams> {
    Ok(SystemParams::new(m.alpha, m.k, m.gamma, tau1, tau2)?)
}

/// Constant-verdict pieces of a pattern; the last one is unbounded.
#[derive(Debug, Clone, Serialize)]
pub struct Segment {
    pub tau_lo: f64,
    pub tau_hi: Option<f64>,
    pub verdict: Verdict,
}

pub fn segments(p: &SwitchPattern) -> Vec<Segment> {
    let d = &p.critical_delays;
    p.verdicts
        .iter()
        .enumerate()
        .map(|(i, &verdict)| Segment {
            tau_lo: if i == 0 { 0.0 } else { d[i - 1] },
            tau_hi: d.get(i).copied(),
            verdict,
        })
        .collect()
}

pub fn classify(args: &ClassifyArgs, config: Value) -> CliResult<Artifact> {
    let m = &args.model;
    model_params(m, 0.0, 0.0)?;
    let pattern = classify_pattern(m.k, m.gamma, m.alpha)?;
    let intersections = find_intersections(m.k, m.gamma, m.alpha)?;
    let segs = segments(&pattern);
    let mut table = Table::new(&["tau_lo", "tau_hi", "verdict"]);
    for s in &segs {
        table.push(vec![
            num(s.tau_lo),
            num(s.tau_hi.unwrap_or(f64::INFINITY)),
            s.verdict.to_string(),
        ]);
    }
    let body = json!({
        "tag": pattern.tag,
        "critical_delays": pattern.critical_delays,
        "verdicts": pattern.verdicts,
        "tau_star_pp": tau_star_pp(m.k, m.gamma).ok(),
        "intersections": intersections,
        "segments": segs,
    });
    Ok(Artifact {
        kind: "classification",
        config,
        body: to_object(&body)?,
        summary: Some(json!({"tag": pattern.tag, "critical_delays": pattern.critical_delays})),
        table,
    })
}

pub fn hopf(args: &HopfArgs, config: Value) -> CliResult<Artifact> {
    if !(args.alpha > 0.0 && args.alpha <= 1.0) {
        return Err(CliError::Domain(format!(
            "alpha = {} must lie in (0, 1]",
            args.alpha
        )));
    }
    let (a, b) = match (args.a, args.b, args.k, args.gamma, args.tau2) {
        (Some(a), Some(b), _, _, _) => (a, b),
        (None, None, Some(k), Some(gamma), Some(tau2)) => {
            SystemParams::new(args.alpha, k, gamma, 0.0, tau2)?;
            (k - gamma, -k * (-gamma * tau2).exp())
        }
        _ => {
            return Err(CliError::Usage(
                "hopf needs --a and --b, or --k, --gamma and --tau2".into(),
            ))
        }
    };
    if !(a.is_finite() && b.is_finite()) {
        return Err(CliError::Domain(format!(
            "non-finite coefficients a = {a}, b = {b}"
        )));
    }
    let class = classify_with_delay(a, b, args.alpha)?;
    let omega = match class.tag {
        SingleDelayTag::Ssr => Some(crossing_frequency(a, b, args.alpha)?),
        _ => None,
    };
    let tag = serde_json::to_value(class.tag).map_err(|e| CliError::Output(e.to_string()))?;
    let tag_text = tag.as_str().unwrap_or_default().to_string();
    let mut table = Table::new(&["a", "b", "tag", "hopf_delay", "crossing_frequency"]);
    let opt = |x: Option<f64>| x.map(num).unwrap_or_default();
    table.push(vec![
        num(a),
        num(b),
        tag_text,
        opt(class.hopf_delay),
        opt(omega),
    ]);
    let body = json!({
        "a": a,
        "b": b,
        "tag": tag,
        "hopf_delay": class.hopf_delay,
        "crossing_frequency": omega,
    });
    Ok(Artifact {
        kind: "hopf",
        config,
        body: to_object(&body)?,
        summary: None,
        table,
    })
}

pub fn curves(args: &CurvesArgs, config: Value) -> CliResult<Artifact> {
    if !(args.alpha > 0.0 && args.alpha <= 1.0) {
        return Err(CliError::Domain(format!(
            "alpha = {} must lie in (0, 1]",
            args.alpha
        )));
    }
    let range = (args.k_min, args.k_max);
    let mut trace = CurveTrace::default();
    if matches!(args.curve, CurveChoice::H1 | CurveChoice::Both) {
        let t = trace_h1(args.alpha, range, args.samples)?;
        trace.points.extend(t.points);
        trace.failures.extend(t.failures);
    }
    if matches!(args.curve, CurveChoice::H2 | CurveChoice::Both) {
        let t = trace_h2(args.alpha, range, args.samples)?;
        trace.points.extend(t.points);
        trace.failures.extend(t.failures);
    }
    let mut table = Table::new(&["k", "gamma", "tau", "curve_id"]);
    for p in &trace.points {
        table.push(vec![
            num(p.k),
            num(p.gamma),
            num(p.tau_tangency),
            p.curve_id.name().into(),
        ]);
    }
    Ok(Artifact {
        kind: "curves",
        config,
        summary: Some(json!({"points": trace.points.len(), "failures": trace.failures.len()})),
        body: to_object(&trace)?,
        table,
    })
}

fn trace(m: &ModelArgs, t: &TraceArgs) -> CliResult<BoundaryTrace> {
    model_params(m, 0.0, 0.0)?;
    if !(t.v_max > 0.0 && t.v_max.is_finite()) || t.v_samples == 0 {
        return Err(CliError::Domain(format!(
            "frequency grid needs v-max > 0 and v-samples ≥ 1 (got {}, {})",
            t.v_max, t.v_samples
        )));
    }
    let grid = default_v_grid(t.v_max, t.v_samples);
    Ok(trace_boundary(
        m.alpha,
        m.k,
        m.gamma,
        &grid,
        t.max_branch,
        t.tau2_max,
    )?)
}

#[derive(Serialize)]
struct TauPlaneBody<'a> {
    tau2a_star: Option<f64>,
    instability_threshold: Option<f64>,
    tau2_min: Option<BoundaryPoint>,
    points: &'a [BoundaryPoint],
    diagnostics: &'a [fdde_stab::two_delay::TraceGap],
}

pub fn tau_plane(args: &TauPlaneArgs, config: Value) -> CliResult<Artifact> {
    let m = &args.model;
    let t = trace(m, &args.trace)?;
    let body = TauPlaneBody {
        tau2a_star: zero_root_branch(m.k, m.gamma).ok().flatten(),
        instability_threshold: instability_threshold(m.k, m.gamma).ok(),
        tau2_min: boundary_tau2_min(m.alpha, m.k, m.gamma, &t),
        points: &t.points,
        diagnostics: &t.diagnostics,
    };
    let mut table = Table::new(&["v", "tau1", "tau2", "branch"]);
    for p in &t.points {
        table.push(vec![
            num(p.v),
            num(p.tau1),
            num(p.tau2),
            p.branch.to_string(),
        ]);
    }
    Ok(Artifact {
        kind: "boundary",
        config,
        summary: Some(json!({
            "tau2a_star": body.tau2a_star,
            "tau2_min": body.tau2_min.map(|p| p.tau2),
            "points": t.points.len(),
        })),
        body: to_object(&body)?,
        table,
    })
}

pub fn slice(args: &SliceArgs, config: Value) -> CliResult<Artifact> {
    let m = &args.model;
    model_params(m, 0.0, args.tau2)?;
    if args.trace.tau2_max <= args.tau2 {
        return Err(CliError::Domain(format!(
            "tau2-max = {} must exceed the slice height tau2 = {}",
            args.trace.tau2_max, args.tau2
        )));
    }
    let t = trace(m, &args.trace)?;
    let report = classify_tau2_slice(m.alpha, m.k, m.gamma, args.tau2, args.tau1_max, &t.points)?;
    let crossings: Vec<f64> = slice_crossings(m.alpha, m.k, m.gamma, args.tau2, &t.points)
        .into_iter()
        .filter(|&c| c <= args.tau1_max)
        .collect();
    let mut table = Table::new(&["tau1_lo", "tau1_hi", "verdict"]);
    for iv in &report.intervals {
        table.push(vec![
            num(iv.tau1_lo),
            num(iv.tau1_hi),
            iv.verdict.to_string(),
        ]);
    }
    let letters: String = report
        .intervals
        .iter()
        .map(|i: &SliceInterval| i.verdict.letter())
        .collect();
    let body = json!({
        "tau2": report.tau2,
        "intervals": report.intervals,
        "crossings": crossings,
    });
    Ok(Artifact {
        kind: "slice",
        config,
        body: to_object(&body)?,
        summary: Some(json!({"pattern": letters, "crossings": crossings})),
        table,
    })
}

#[derive(Serialize)]
struct TrajectoryBody<'a> {
    verdict: Verdict,
    blowup: bool,
    step: f64,
    horizon: f64,
    metrics: Option<VerdictMetrics>,
    times: &'a [f64],
    values: &'a [f64],
}

pub fn simulate(args: &SimulateArgs, config: Value) -> CliResult<Artifact> {
    let p = model_params(&args.model, args.tau1, args.tau2)?;
    let g = Nonlinearity {
        kind: args.sim.g.into(),
        k: p.k,
    };
    let auto = default_policy(&p);
    let policy = SimPolicy {
        step: args.step.unwrap_or(auto.step),
        horizon: args.horizon.unwrap_or(auto.horizon),
        max_doublings: if args.horizon.is_some() {
            0
        } else {
            auto.max_doublings
        },
    };
    let traj = simulate_with_policy(&p, g, args.sim.phi, &policy)?;
    let horizon = traj.times.last().copied().unwrap_or(0.0);
    let mut table = Table::new(&["t", "x"]);
    for (t, x) in traj.times.iter().zip(&traj.values) {
        table.push(vec![num(*t), num(*x)]);
    }
    let body = TrajectoryBody {
        verdict: traj.verdict,
        blowup: traj.blowup,
        step: policy.step,
        horizon,
        metrics: traj.metrics,
        times: &traj.times,
        values: &traj.values,
    };
    Ok(Artifact {
        kind: "trajectory",
        config,
        summary: Some(
            json!({"verdict": traj.verdict, "blowup": traj.blowup, "step": policy.step, "horizon": horizon}),
        ),
        body: to_object(&body)?,
        table,
    })
}
