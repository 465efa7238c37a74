use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::bargmann::{BargmannFunction, ScaledValue};
use crate::error::{Error, Result};

/// Left edge of the search rectangle, kept off `Re z = 0` where zeros at the
/// origin would sit on the contour.
const STRIP_START: f64 = -0.1234;
/// Distance below which the contour is considered to hit a zero.
const CONTOUR_GUARD: f64 = 1e-9;
/// Zeros this close to `0 (mod 2π)` are counted in `m`.
const ORIGIN_TOL: f64 = 1e-7;
const CLUSTER_SIZE: f64 = 1e-7;
const MAX_DEPTH: usize = 48;

/// Zeros of a Bargmann function in the fundamental strip.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StripZeros {
    /// Zeros with `Re a ∈ [0, 2π)`, `a ≠ 0`, repeated by multiplicity.
    pub a_list: Vec<Complex64>,
    /// Multiplicity of the zero at the origin.
    pub m: usize,
    pub l: Option<i64>,
    #[serde(rename = "C")]
    pub c: Option<Complex64>,
    pub nu_list: Vec<i8>,
    /// Half-height of the band that was searched.
    pub im_cutoff: f64,
}

/// `sgn Im a` with `sgn 0 = +1`.
pub fn nu_of(a: Complex64) -> i8 {
    if a.im < 0.0 {
        -1
    } else {
        1
    }
}

impl StripZeros {
    pub fn new(mut a_list: Vec<Complex64>, m: usize, im_cutoff: f64) -> Self {
        a_list.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
        let nu_list = a_list.iter().map(|a| nu_of(*a)).collect();
        StripZeros { a_list, m, l: None, c: None, nu_list, im_cutoff }
    }

    /// Total zero count in the strip including the origin.
    pub fn count(&self) -> usize {
        self.a_list.len() + self.m
    }

    /// Number of zeros with `ν = −1`.
    pub fn negative_count(&self) -> usize {
        self.nu_list.iter().filter(|n| **n < 0).count()
    }

    pub fn validate(&self) -> Result<()> {
        if self.nu_list.len() != self.a_list.len() {
            return Err(Error::ProductConvergence("nu_list and a_list differ in length".into()));
        }
        for (a, nu) in self.a_list.iter().zip(&self.nu_list) {
            if !(a.re >= 0.0 && a.re < TAU) || *a == Complex64::new(0.0, 0.0) {
                return Err(Error::InvalidParameter(format!("zero {a} is outside the strip")));
            }
            if *nu != nu_of(*a) {
                return Err(Error::ProductConvergence(format!("sign {nu} does not match zero {a}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
struct Rect {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Rect {
    fn centre(&self) -> Complex64 {
        Complex64::new(0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1))
    }

    fn diameter(&self) -> f64 {
        (self.x1 - self.x0).hypot(self.y1 - self.y0)
    }

    fn contains(&self, z: Complex64, pad: f64) -> bool {
        z.re >= self.x0 - pad && z.re <= self.x1 + pad && z.im >= self.y0 - pad && z.im <= self.y1 + pad
    }

    fn split(&self, t: f64) -> (Rect, Rect) {
        if self.x1 - self.x0 >= self.y1 - self.y0 {
            let xm = self.x0 + t * (self.x1 - self.x0);
            (Rect { x1: xm, ..*self }, Rect { x0: xm, ..*self })
        } else {
            let ym = self.y0 + t * (self.y1 - self.y0);
            (Rect { y1: ym, ..*self }, Rect { y0: ym, ..*self })
        }
    }
}

struct Finder<'a> {
    f: &'a BargmannFunction,
    tol: f64,
}

impl Finder<'_> {
    fn sample(&self, z: Complex64) -> Result<ScaledValue> {
        let sv = self.f.eval_scaled_unchecked(z);
        if sv.value.norm() <= CONTOUR_GUARD * sv.deriv.norm() || sv.value.norm() == 0.0 {
            return Err(Error::BoundaryZero { near: z });
        }
        Ok(sv)
    }

    fn track(&self, za: Complex64, va: Complex64, zb: Complex64, vb: Complex64, depth: usize) -> Result<f64> {
        let zm = 0.5 * (za + zb);
        let vm = self.sample(zm)?.value;
        let d1 = (vm / va).arg();
        let d2 = (vb / vm).arg();
        let d = (vb / va).arg();
        if d1.abs() < 0.5 && d2.abs() < 0.5 && (d1 + d2 - d).abs() < 1e-9 {
            return Ok(d1 + d2);
        }
        if depth >= MAX_DEPTH {
            return Err(Error::BoundaryZero { near: zm });
        }
        Ok(self.track(za, va, zm, vm, depth + 1)? + self.track(zm, vm, zb, vb, depth + 1)?)
    }

    /// Continuous change of `arg ψ` along the segment.
    fn arg_change(&self, za: Complex64, zb: Complex64) -> Result<f64> {
        let pieces = ((zb - za).norm() / 0.2).ceil().max(1.0) as usize;
        let mut total = 0.0;
        let mut prev = self.sample(za)?.value;
        for j in 1..=pieces {
            let t = j as f64 / pieces as f64;
            let z0 = za + (zb - za) * ((j - 1) as f64 / pieces as f64);
            let z1 = za + (zb - za) * t;
            let v1 = self.sample(z1)?.value;
            total += self.track(z0, prev, z1, v1, 0)?;
            prev = v1;
        }
        Ok(total)
    }

    fn winding(&self, r: &Rect) -> Result<usize> {
        let c = |x, y| Complex64::new(x, y);
        let total = self.arg_change(c(r.x0, r.y0), c(r.x1, r.y0))?
            + self.arg_change(c(r.x1, r.y0), c(r.x1, r.y1))?
            + self.arg_change(c(r.x1, r.y1), c(r.x0, r.y1))?
            + self.arg_change(c(r.x0, r.y1), c(r.x0, r.y0))?;
        let w = total / TAU;
        let k = w.round();
        if (w - k).abs() > 0.05 || k < 0.0 {
            return Err(Error::BoundaryZero { near: r.centre() });
        }
        Ok(k as usize)
    }

    fn polish(&self, z0: Complex64, mult: usize) -> Option<Complex64> {
        let mut z = z0;
        for _ in 0..100 {
            let sv = self.f.eval_scaled_unchecked(z);
            if sv.value.norm() == 0.0 {
                return Some(z);
            }
            if sv.deriv.norm() == 0.0 {
                return None;
            }
            let step = sv.value / sv.deriv * mult as f64;
            if !(step.re.is_finite() && step.im.is_finite()) || step.norm() > 2.0 {
                return None;
            }
            z -= step;
            if step.norm() <= 1e-15 * (1.0 + z.norm()) {
                break;
            }
        }
        let sv = self.f.eval_scaled_unchecked(z);
        (sv.value.norm() <= self.tol * sv.abs_sum).then_some(z)
    }

    fn isolate(&self, r: Rect, count: usize, out: &mut Vec<Complex64>, depth: usize) -> Result<()> {
        if count == 0 {
            return Ok(());
        }
        if r.diameter() < CLUSTER_SIZE || depth > 80 {
            let z = self.polish(r.centre(), count).unwrap_or(r.centre());
            out.extend(std::iter::repeat_n(z, count));
            return Ok(());
        }
        if count == 1 {
            if let Some(z) = self.polish(r.centre(), 1) {
                if r.contains(z, 1e-12) {
                    out.push(z);
                    return Ok(());
                }
            }
        }
        let mut last = None;
        for t in [0.5, 0.4687, 0.5371, 0.4219] {
            let (a, b) = r.split(t);
            let counts = self.winding(&a).and_then(|ca| Ok((ca, self.winding(&b)?)));
            match counts {
                Ok((ca, cb)) if ca + cb == count => {
                    self.isolate(a, ca, out, depth + 1)?;
                    return self.isolate(b, cb, out, depth + 1);
                }
                Ok((ca, cb)) => last = Some(Error::CountMismatch { expected: count as i64, found: (ca + cb) as i64 }),
                Err(e @ Error::BoundaryZero { .. }) => last = Some(e),
                Err(e) => return Err(e),
            }
        }
        Err(last.expect("at least one split was attempted"))
    }
}

fn map_to_strip(z: Complex64) -> Complex64 {
    let mut re = z.re.rem_euclid(TAU);
    if re >= TAU {
        re = 0.0;
    }
    Complex64::new(re, z.im)
}

/// Zero count inside the rectangle `[x0, x0+2π) × (−cutoff, cutoff)` by the
/// argument principle alone.
pub fn strip_zero_count(f: &BargmannFunction, im_cutoff: f64) -> Result<usize> {
    check_cutoff(f, im_cutoff)?;
    let finder = Finder { f, tol: 0.0 };
    let rect = Rect { x0: STRIP_START, x1: STRIP_START + TAU, y0: -im_cutoff, y1: im_cutoff };
    finder.winding(&rect)
}

fn check_cutoff(f: &BargmannFunction, im_cutoff: f64) -> Result<()> {
    if !(im_cutoff > 0.0 && im_cutoff.is_finite()) {
        return Err(Error::InvalidParameter("im_cutoff must be positive and finite".into()));
    }
    if f.psi.norm_squared() == 0.0 {
        return Err(Error::ZeroNorm);
    }
    f.check_band(-im_cutoff)?;
    f.check_band(im_cutoff)
}

/// All zeros with `|Im a| < im_cutoff` in the fundamental strip.
///
/// `tol` bounds the residual `|ψ(a)|` relative to the absolute term sum at
/// each reported zero. The contour is perturbed twice before a zero lying on
/// it is reported as an error.
pub fn find_strip_zeros(f: &BargmannFunction, im_cutoff: f64, tol: f64) -> Result<StripZeros> {
    check_cutoff(f, im_cutoff)?;
    let finder = Finder { f, tol };
    let mut last = None;
    for attempt in 0..3 {
        let x0 = STRIP_START - 0.0731 * attempt as f64;
        let y = im_cutoff * (1.0 - 0.0123 * attempt as f64);
        let rect = Rect { x0, x1: x0 + TAU, y0: -y, y1: y };
        let found = finder.winding(&rect).and_then(|total| {
            let mut out = Vec::with_capacity(total);
            finder.isolate(rect, total, &mut out, 0)?;
            if out.len() != total {
                return Err(Error::CountMismatch { expected: total as i64, found: out.len() as i64 });
            }
            Ok(out)
        });
        match found {
            Ok(zs) => {
                let mut a_list = Vec::new();
                let mut m = 0;
                for z in zs {
                    let a = map_to_strip(z);
                    if a.norm() < ORIGIN_TOL || (a - TAU).norm() < ORIGIN_TOL {
                        m += 1;
                    } else {
                        a_list.push(a);
                    }
                }
                return Ok(StripZeros::new(a_list, m, y));
            }
            Err(e @ Error::BoundaryZero { .. }) => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last.expect("three attempts were made"))
}

/// The integer `l` of the periodic Hadamard factorization.
///
/// Along `Im z = −Y` the factorization gains a phase of
/// `2π(l − δ + N)` per period, where `N` counts zeros with `ν = −1` above the
/// line. `Y` is the band searched for `zeros`, so every such zero is known.
/// Exact finite-support states are cross-checked against `−n₀ − N₋`.
pub fn determine_l(f: &BargmannFunction, zeros: &StripZeros) -> Result<i64> {
    let y = zeros.im_cutoff;
    f.check_band(-y)?;
    let finder = Finder { f, tol: 0.0 };
    let start = Complex64::new(STRIP_START, -y);
    let delta_arg = finder
        .arg_change(start, start + TAU)
        .map_err(|_| Error::Undetermined("the line Im z = −Y passes through a zero".into()))?;
    let l_real = delta_arg / TAU + f.rep.delta - zeros.negative_count() as f64;
    let l = l_real.round();
    if (l_real - l).abs() > 1e-6 {
        return Err(Error::Undetermined(format!("phase growth gives non-integer l = {l_real}")));
    }
    let l = l as i64;
    if f.truncation.is_none() {
        let shortcut = -f.psi.n_min - zeros.negative_count() as i64;
        if shortcut != l {
            return Err(Error::Undetermined(format!(
                "phase growth gives l = {l}, support gives {shortcut}; zeros lie outside the band"
            )));
        }
    }
    Ok(l)
}

/// Distance between two points with real parts compared modulo `2π`.
pub fn strip_distance(a: Complex64, b: Complex64) -> f64 {
    let mut dx = (a.re - b.re).rem_euclid(TAU);
    if dx > PI {
        dx = TAU - dx;
    }
    dx.hypot(a.im - b.im)
}
