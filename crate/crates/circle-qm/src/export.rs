//! CSV and JSON writers for fields, zero sets and propagator tables.
//!
//! Every float is written with 17 significant digits so that it parses back
//! to the same double.

use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Serialize, Serializer};
use serde_json::value::RawValue;

use crate::husimi::{HusimiField, StripZeros};
use crate::semiclassics::{PropagatorResult, SolverStats};

/// A float serialized with 17 significant digits; non-finite values become `null`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Num(pub f64);

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        if !self.0.is_finite() {
            return ser.serialize_none();
        }
        let raw = RawValue::from_string(float(self.0)).map_err(serde::ser::Error::custom)?;
        raw.serialize(ser)
    }
}

/// `[re, im]` pair for JSON output.
pub fn pair(z: Complex64) -> [Num; 2] {
    [Num(z.re), Num(z.im)]
}

/// 17 significant digits in exponent notation.
pub fn float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

/// Pretty-printed JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

/// `phi,p,value` rows, φ outermost.
pub fn husimi_csv(field: &HusimiField) -> String {
    let g = &field.grid;
    let mut out = String::from("phi,p,value\n");
    for j in 0..g.phi_count {
        for i in 0..g.p_count {
            let _ = writeln!(out, "{},{},{}", float(g.phi(j)), float(g.p(i)), float(field.at(j, i)));
        }
    }
    out
}

#[derive(Serialize)]
struct ZerosDoc {
    m: usize,
    l: Option<i64>,
    #[serde(rename = "C")]
    c: Option<[Num; 2]>,
    zeros: Vec<[Num; 2]>,
}

/// `{"m", "l", "C", "zeros"}` with `null` for unset `l` and `C`.
pub fn zeros_json(zeros: &StripZeros) -> String {
    to_json(&ZerosDoc {
        m: zeros.m,
        l: zeros.l,
        c: zeros.c.map(pair),
        zeros: zeros.a_list.iter().map(|a| pair(*a)).collect(),
    })
}

/// One row per branch: `n,nu,re_contrib,im_contrib,re_S,im_S,prefactor_abs,prefactor_arg`.
///
/// The prefactor is `√(π/s²)(δv(0)/δv(τ))^{1/2}`; its argument is the
/// continuous half-phase, so it may leave `(−π, π]`.
pub fn propagator_csv(result: &PropagatorResult, s: f64) -> String {
    let mut out = String::from("n,nu,re_contrib,im_contrib,re_S,im_S,prefactor_abs,prefactor_arg\n");
    let scale = (PI / (s * s)).sqrt();
    for b in &result.branches {
        let t = &b.trajectory;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            b.winding_n,
            b.nu,
            float(b.contribution.re),
            float(b.contribution.im),
            float(t.action.re),
            float(t.action.im),
            float(scale * t.prefactor_ratio.norm()),
            float(-0.5 * t.dv_phase),
        );
    }
    out
}

#[derive(Serialize)]
struct TruncationDoc<'a> {
    included: &'a [i64],
    smallest_dropped: Num,
    failed: &'a [i64],
}

#[derive(Serialize)]
struct SummaryDoc<'a> {
    value: [Num; 2],
    abs: Num,
    truncation_report: TruncationDoc<'a>,
    stats: &'a SolverStats,
}

/// Value, truncation report and solver statistics.
pub fn propagator_summary_json(result: &PropagatorResult) -> String {
    let r = &result.truncation_report;
    to_json(&SummaryDoc {
        value: pair(result.value),
        abs: Num(result.value.norm()),
        truncation_report: TruncationDoc {
            included: &r.included,
            smallest_dropped: Num(r.smallest_dropped),
            failed: &r.failed,
        },
        stats: &result.stats,
    })
}
