//! Browser bindings for the demo page in `www/`.
//!
//! Every export returns a JSON string. The plain functions in [`api`] hold the
//! logic so they can be tested natively; the `#[wasm_bindgen]` wrappers only
//! convert errors into JS exceptions.

use wasm_bindgen::prelude::*;

pub mod api {
    use cqa_core::diagnosis::{bits_to_string, diagnosis_at};
    use cqa_core::format::round_json;
    use cqa_core::instances::OutputFlip;
    use cqa_core::schedule::{envelopes, ScheduleKind};
    use cqa_core::{
        driver_generators, gap_trace, generate_named, mfd_bruteforce, min_gap, DriverSign,
        ScheduleSpec,
    };
    use serde_json::{json, Value};

    /// Traces in the browser run single-threaded; keep them short.
    pub const MAX_GRID: usize = 60;

    fn text(mut v: Value) -> String {
        round_json(&mut v);
        v.to_string()
    }

    fn err(e: impl std::fmt::Display) -> String {
        e.to_string()
    }

    /// Draws an instance and reports its minimum fault diagnoses.
    pub fn instance_summary(base: &str, seed: u64, stream: u64) -> Result<String, String> {
        let inst = generate_named(base, seed, stream, OutputFlip::All).map_err(err)?;
        let m = mfd_bruteforce(&inst).map_err(err)?;
        let c = &inst.circuit;
        let diagnoses: Vec<Value> = m
            .mfd_set
            .iter()
            .map(|&i| {
                let d = diagnosis_at(&inst, i);
                let sites: Vec<&str> = d.fault_sites().iter().map(|&w| c.wire_name(w)).collect();
                json!({ "index": i, "diagnosis": d.to_string(), "faulty_wires": sites })
            })
            .collect();
        let gates: Vec<Value> = c
            .gates()
            .iter()
            .map(|g| json!({ "name": g.name, "kind": g.kind.name() }))
            .collect();
        Ok(text(json!({
            "id": inst.meta.id,
            "wires": c.wire_count(),
            "dimension": 1usize << inst.free_bits(),
            "generators": driver_generators(c).len(),
            "inputs": bits_to_string(&inst.inputs),
            "outputs": bits_to_string(&inst.outputs),
            "healthy_outputs": bits_to_string(&inst.healthy_outputs()),
            "gates": gates,
            "min_faults": m.min_faults,
            "degeneracy": m.degeneracy,
            "mfd": diagnoses,
        })))
    }

    /// Ground and first excited energies of `H(s)` on `grid` points.
    pub fn gap_trace_json(
        base: &str,
        seed: u64,
        stream: u64,
        grid: usize,
        driver: &str,
    ) -> Result<String, String> {
        if !(3..=MAX_GRID).contains(&grid) {
            return Err(format!("grid must lie in 3..={MAX_GRID}"));
        }
        let sign: DriverSign = driver.parse().map_err(err)?;
        let inst = generate_named(base, seed, stream, OutputFlip::All).map_err(err)?;
        let trace = gap_trace(&inst, grid, sign).map_err(err)?;
        let mg = min_gap(&trace).map_err(err)?;
        Ok(text(json!({
            "id": inst.meta.id,
            "driver": sign.name(),
            "degenerate": trace.degenerate,
            "min_gap": mg,
            "samples": trace.samples,
        })))
    }

    /// `s(t)` and the envelopes `A, B, C` at `points` times.
    pub fn schedule_curve(
        kind: &str,
        tf: f64,
        t0: f64,
        s0: f64,
        points: usize,
    ) -> Result<String, String> {
        let kind: ScheduleKind = kind.parse().map_err(err)?;
        let spec = match kind {
            ScheduleKind::Linear => ScheduleSpec::linear(tf),
            ScheduleKind::Param => ScheduleSpec::param(tf, t0, s0),
            ScheduleKind::OptAdia => {
                return Err("opt_adia needs a gap trace; use the command-line tool".into())
            }
        };
        let schedule = spec.build(None, None).map_err(err)?;
        let rows = schedule
            .sample(points.clamp(2, 2000))
            .into_iter()
            .map(|(t, s)| {
                let e = envelopes(s).map_err(err)?;
                Ok(json!([t, s, e.a, e.b, e.c]))
            })
            .collect::<Result<Vec<_>, String>>()?;
        Ok(text(
            json!({ "kind": spec.name(), "columns": ["t", "s", "a", "b", "c"], "rows": rows }),
        ))
    }
}

#[wasm_bindgen(js_name = instanceSummary)]
pub fn instance_summary(base: &str, seed: u64, stream: u64) -> Result<String, JsError> {
    api::instance_summary(base, seed, stream).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = gapTrace)]
pub fn gap_trace(
    base: &str,
    seed: u64,
    stream: u64,
    grid: usize,
    driver: &str,
) -> Result<String, JsError> {
    api::gap_trace_json(base, seed, stream, grid, driver).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = scheduleCurve)]
pub fn schedule_curve(
    kind: &str,
    tf: f64,
    t0: f64,
    s0: f64,
    points: usize,
) -> Result<String, JsError> {
    api::schedule_curve(kind, tf, t0, s0, points).map_err(|e| JsError::new(&e))
}
