//! One-shot operations: each reads a request JSON and writes the resulting operator.

use anyhow::{anyhow, bail, Context, Result};
use qrf_core::framechange::{reconstruction_product_form, triangular_reconstruction};
use qrf_core::json::{FrameJson, FrameReport, GroupSource, RepJson, ScenarioJson, SystemJson};
use qrf_core::operator::OperatorJson;
use qrf_core::opequiv::{g_twirl, g_twirl_predual, invariant_subspace};
use qrf_core::relativize::{relative_context, yen, yen_predual};
use qrf_core::{ContextReport, FiniteGroup, Operator, UnitaryRep};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

type Op = Operator<f64>;

fn resolve_group(own: &Option<GroupSource>, flag: Option<&str>) -> Result<FiniteGroup> {
    match (own, flag) {
        (Some(src), _) => Ok(src.build()?),
        (None, Some(name)) => Ok(qrf_core::json::load_group(name)?),
        (None, None) => bail!("no group: set 'group' in the request or pass --group"),
    }
}

fn op_json(a: &Op) -> Value {
    serde_json::to_value(OperatorJson::from(a)).expect("operator JSON serializes")
}

#[derive(Debug, Deserialize)]
pub struct YenRequest {
    #[serde(default)]
    pub group: Option<GroupSource>,
    pub frame: FrameJson,
    pub system: SystemJson,
    pub operator: OperatorJson,
    /// Apply the predual to a state on frame ⊗ system instead.
    #[serde(default)]
    pub predual: bool,
}

pub fn yen_op(req: YenRequest, group_flag: Option<&str>) -> Result<Value> {
    let group = resolve_group(&req.group, group_flag)?;
    let frame = req.frame.build_in::<f64>(&group)?;
    let sys: UnitaryRep<f64> = req.system.rep.build(&group, req.system.dim)?;
    let a = req.operator.to_operator::<f64>()?;
    let out = if req.predual { yen_predual(&frame, &sys, &a)? } else { yen(&frame, &sys, &a)? };
    let ctx = relative_context(&frame, &sys)?;
    Ok(json!({
        "operation": if req.predual { "yen-predual" } else { "yen" },
        "frame": FrameReport::from(&frame),
        "result": op_json(&out),
        "context": ctx.report(),
    }))
}

#[derive(Debug, Deserialize)]
pub struct TwirlRequest {
    #[serde(default)]
    pub group: Option<GroupSource>,
    pub rep: RepJson,
    #[serde(default)]
    pub dim: Option<usize>,
    pub operator: OperatorJson,
    #[serde(default)]
    pub predual: bool,
}

pub fn twirl_op(req: TwirlRequest, group_flag: Option<&str>) -> Result<Value> {
    let group = resolve_group(&req.group, group_flag)?;
    let rep: UnitaryRep<f64> = req.rep.build(&group, req.dim)?;
    let a = req.operator.to_operator::<f64>()?;
    let out = if req.predual { g_twirl_predual(&rep, &a)? } else { g_twirl(&rep, &a)? };
    Ok(json!({
        "operation": "twirl",
        "result": op_json(&out),
        "input_invariance_deviation": rep.invariance_deviation(&a)?,
        "context": invariant_subspace(&rep).report(),
    }))
}

/// Frames are numbered from 1; the state lives on the complement of `from` in scenario order.
#[derive(Debug, Deserialize)]
pub struct FrameChangeRequest {
    pub scenario: ScenarioJson,
    pub from: usize,
    pub to: usize,
    #[serde(default)]
    pub state: Option<OperatorJson>,
    /// Basis indices of a product ket on the complement of `from`, used instead of `state`.
    #[serde(default)]
    pub ket: Option<Vec<usize>>,
}

#[derive(Debug, Serialize)]
struct FrameChangeOutput {
    operation: &'static str,
    from: usize,
    to: usize,
    result: OperatorJson,
    raw: OperatorJson,
    /// Basis indices when the raw output is a product basis ket.
    #[serde(skip_serializing_if = "Option::is_none")]
    ket: Option<Vec<usize>>,
    source_context: ContextReport,
    target_context: ContextReport,
}

pub fn frame_change_op(req: FrameChangeRequest, from: Option<usize>, to: Option<usize>) -> Result<Value> {
    let sc = req.scenario.build::<f64>()?;
    let n = sc.frames().len();
    let (from, to) = (from.unwrap_or(req.from), to.unwrap_or(req.to));
    for (label, k) in [("from", from), ("to", to)] {
        if k == 0 || k > n {
            bail!("--{label} {k} out of range: frames are numbered 1..={n}");
        }
    }
    let (j, k) = (from - 1, to - 1);
    let comp = sc.complement_shape(j);
    let state = match (&req.state, &req.ket) {
        (Some(s), None) => s.to_operator::<f64>()?,
        (None, Some(idx)) => ket_state(comp.dims(), idx)?,
        _ => bail!("give exactly one of 'state' or 'ket'"),
    };
    let raw = sc.frame_change_raw(j, k, &state).context("frame-change")?;
    let input = sc.framed_relative_state(j, &[k], state).context("frame-change")?;
    let out = sc.frame_change(j, k, &input).context("frame-change")?;
    let out_shape = sc.complement_shape(k);
    let output = FrameChangeOutput {
        operation: "frame-change",
        from,
        to,
        result: OperatorJson::from(out.representative()),
        raw: OperatorJson::from(&raw),
        ket: basis_ket(out_shape.dims(), &raw),
        source_context: input.context().report(),
        target_context: out.context().report(),
    };
    Ok(serde_json::to_value(output)?)
}

fn ket_state(dims: &[usize], idx: &[usize]) -> Result<Op> {
    if idx.len() != dims.len() {
        bail!("ket has {} indices but the complement has {} factors", idx.len(), dims.len());
    }
    let mut acc = Op::identity(1);
    for (&i, &d) in idx.iter().zip(dims) {
        if i >= d {
            bail!("ket index {i} out of range for a factor of dimension {d}");
        }
        acc = acc.kron(&Op::unit(d, i, i));
    }
    Ok(acc)
}

fn basis_ket(dims: &[usize], a: &Op) -> Option<Vec<usize>> {
    let n = a.dim();
    let hit = (0..n).find(|&i| (a.get(i, i).re - 1.0).abs() < 1e-12)?;
    let rest: f64 = a.matrix().iter().map(|z| z.norm()).sum::<f64>() - 1.0;
    if rest.abs() > 1e-12 {
        return None;
    }
    let mut idx = vec![0; dims.len()];
    let mut r = hit;
    for (slot, &d) in idx.iter_mut().zip(dims).rev() {
        *slot = r % d;
        r /= d;
    }
    Some(idx)
}

#[derive(Debug, Deserialize)]
pub struct ReconstructRequest {
    #[serde(default)]
    pub group: Option<GroupSource>,
    pub frame1: FrameJson,
    pub frame2: FrameJson,
    pub system: SystemJson,
    /// System state relative to frame 1.
    pub rho: OperatorJson,
    /// State of the two frames.
    pub omega: OperatorJson,
}

pub fn reconstruct_op(req: ReconstructRequest, group_flag: Option<&str>) -> Result<Value> {
    let group = resolve_group(&req.group, group_flag)?;
    let f1 = req.frame1.build_in::<f64>(&group)?;
    let f2 = req.frame2.build_in::<f64>(&group)?;
    let sys: UnitaryRep<f64> = req.system.rep.build(&group, req.system.dim)?;
    let rho = req.rho.to_operator::<f64>()?;
    let omega = req.omega.to_operator::<f64>()?;
    let out = triangular_reconstruction(&f1, &f2, &sys, &rho, &omega).context("reconstruct")?;
    let product = reconstruction_product_form(&f1, &f2, &sys, &rho, &omega).context("reconstruct")?;
    Ok(json!({
        "operation": "reconstruct",
        "result": op_json(&out),
        "product_form_deviation": out.max_abs_diff(&product),
    }))
}

pub fn parse<T: for<'de> Deserialize<'de>>(text: &str, what: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| anyhow!("invalid {what} request: {e}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ket_roundtrip() {
        let dims = [3, 2, 4];
        let a = ket_state(&dims, &[2, 1, 3]).unwrap();
        assert_eq!(basis_ket(&dims, &a), Some(vec![2, 1, 3]));
        let mixed = Op::identity(24).scale(1.0 / 24.0);
        assert_eq!(basis_ket(&dims, &mixed), None);
    }

    #[test]
    fn ket_rejects_bad_indices() {
        assert!(ket_state(&[2, 2], &[0]).is_err());
        assert!(ket_state(&[2, 2], &[0, 2]).is_err());
    }
}
