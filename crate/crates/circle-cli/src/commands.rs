//! Subcommand bodies. Each returns everything it will print or write, so
//! nothing reaches the disk until the computation has succeeded.

use std::f64::consts::TAU;
use std::path::{Path, PathBuf};

use circle_qm::export::{husimi_csv, pair, propagator_csv, propagator_summary_json, to_json, zeros_json, Num};
use circle_qm::husimi::{
    bargmann_eval, determine_l, find_strip_zeros, fit_constant, hadamard_reconstruct, husimi_field, reconstruct,
    BargmannFunction,
};
use circle_qm::quadrature::QuadratureSpec;
use circle_qm::semiclassics::{exact_propagator_spectral, semiclassical_propagator, HolomorphicHamiltonian};
use circle_qm::states::{
    coherent_state, expect_exp_iphi, expect_p, identity_resolution_residual, ladder_apply, normalized_overlap, overlap,
    uncertainty_of, uncertainty_product, Representation, StateVector,
};
use circle_qm::theta::{lattice_sums, Route};
use circle_qm::{Complex64, Error};
use serde::Serialize;

use crate::config::{RunConfig, StateSpec};
use crate::CliError;

/// Text for stdout plus files to write, in order.
#[derive(Debug, Default)]
pub struct Output {
    pub stdout: String,
    pub files: Vec<(PathBuf, String)>,
    /// Set when `validate` finds a failing check.
    pub failed_checks: bool,
}

impl Output {
    /// Send `text` to `out` if given, otherwise to stdout.
    fn single(text: String, out: Option<&Path>) -> Self {
        match out {
            Some(p) => Output { files: vec![(p.to_path_buf(), text)], ..Output::default() },
            None => Output { stdout: text, ..Output::default() },
        }
    }
}

fn state_vector(spec: &StateSpec, rep: &Representation) -> Result<StateVector, CliError> {
    Ok(match spec {
        StateSpec::Coherent { z, tol } => coherent_state(rep, *z, *tol)?,
        StateSpec::Basis { n } => StateVector::basis(*n),
        StateSpec::Vector { n_min, coeffs } => StateVector::new(*n_min, coeffs.clone()),
    })
}

/// Widest symmetric band the zero search may use for `f`.
fn default_cutoff(f: &BargmannFunction) -> f64 {
    if f.truncation.is_none() {
        return f.finite_support_cutoff().unwrap_or(1.0);
    }
    let (lo, hi) = f.safe_band();
    0.9 * (-lo).min(hi)
}

#[derive(Serialize)]
struct OverlapDoc {
    overlap: [Num; 2],
    normalized: [Num; 2],
    normalized_abs: Num,
}

pub fn overlap_cmd(cfg: &RunConfig, out: Option<&Path>) -> Result<Output, CliError> {
    let rep = cfg.representation()?;
    let e = cfg.endpoints()?;
    let ov = overlap(&rep, e.z_f, e.z_i)?;
    let norm = normalized_overlap(&rep, e.z_f, e.z_i)?;
    let doc = OverlapDoc { overlap: pair(ov), normalized: pair(norm), normalized_abs: Num(norm.norm()) };
    Ok(Output::single(to_json(&doc), out))
}

#[derive(Serialize)]
struct ExpectDoc {
    norm_squared: Num,
    exp_iphi: [Num; 2],
    p: Num,
    uncertainty_product: Num,
    uncertainty_bound: Num,
}

pub fn expect_cmd(cfg: &RunConfig, out: Option<&Path>) -> Result<Output, CliError> {
    let rep = cfg.representation()?;
    let psi = state_vector(cfg.state()?, &rep)?;
    let (product, bound) = uncertainty_of(&rep, &psi)?;
    let doc = ExpectDoc {
        norm_squared: Num(psi.norm_squared()),
        exp_iphi: pair(expect_exp_iphi(&rep, &psi)?),
        p: Num(expect_p(&rep, &psi)?),
        uncertainty_product: Num(product),
        uncertainty_bound: Num(bound),
    };
    Ok(Output::single(to_json(&doc), out))
}

pub fn husimi_cmd(cfg: &RunConfig, out: Option<&Path>) -> Result<Output, CliError> {
    let rep = cfg.representation()?;
    let f = cfg.state()?.bargmann(rep)?;
    let grid = cfg.grid.ok_or_else(|| CliError::Config("a grid is required for husimi".into()))?;
    let field = husimi_field(&f, grid)?;
    Ok(Output::single(husimi_csv(&field), out))
}

pub fn zeros_cmd(cfg: &RunConfig, out: Option<&Path>) -> Result<Output, CliError> {
    let rep = cfg.representation()?;
    let f = cfg.state()?.bargmann(rep)?;
    let cutoff = cfg.zeros.im_cutoff.unwrap_or_else(|| default_cutoff(&f));
    let mut zeros = find_strip_zeros(&f, cutoff, cfg.zeros.tol)?;
    match determine_l(&f, &zeros) {
        Ok(l) => {
            zeros.l = Some(l);
            let ev = hadamard_reconstruct(&zeros, rep)?;
            zeros.c = Some(fit_constant(&f, &ev)?);
        }
        Err(Error::Undetermined(_)) => {}
        Err(e) => return Err(e.into()),
    }
    Ok(Output::single(zeros_json(&zeros), out))
}

#[derive(Serialize)]
struct ReconstructDoc {
    zero_count: usize,
    m: usize,
    l: i64,
    #[serde(rename = "C")]
    c: [Num; 2],
    im_cutoff: Num,
    points: usize,
    im_max: Num,
    max_rel_error: Num,
}

pub fn reconstruct_cmd(cfg: &RunConfig, out: Option<&Path>) -> Result<Output, CliError> {
    let rep = cfg.representation()?;
    let f = cfg.state()?.bargmann(rep)?;
    let spec = cfg.reconstruct;
    if spec.phi_points == 0 || spec.im_points == 0 || spec.im_max.is_nan() || spec.im_max < 0.0 {
        return Err(CliError::Config("reconstruct grid must be nonempty with im_max >= 0".into()));
    }
    let cutoff = cfg.zeros.im_cutoff.unwrap_or_else(|| default_cutoff(&f));
    let ev = reconstruct(&f, cutoff, cfg.zeros.tol)?;
    let mut worst = 0.0f64;
    for j in 0..spec.phi_points {
        for k in 0..spec.im_points {
            let im = if spec.im_points == 1 {
                0.0
            } else {
                -spec.im_max + 2.0 * spec.im_max * k as f64 / (spec.im_points - 1) as f64
            };
            let z = Complex64::new(TAU * (j as f64 + 0.5) / spec.phi_points as f64, im);
            let want = bargmann_eval(&f, z)?;
            worst = worst.max((ev.eval(z) - want).norm() / want.norm());
        }
    }
    let doc = ReconstructDoc {
        zero_count: ev.zeros.count(),
        m: ev.zeros.m,
        l: ev.l(),
        c: pair(ev.constant()),
        im_cutoff: Num(ev.zeros.im_cutoff),
        points: spec.phi_points * spec.im_points,
        im_max: Num(spec.im_max),
        max_rel_error: Num(worst),
    };
    Ok(Output::single(to_json(&doc), out))
}

/// Summary JSON next to `table.csv` is `table.summary.json`.
pub fn summary_path(table: &Path) -> PathBuf {
    let stem = table.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    table.with_file_name(format!("{stem}.summary.json"))
}

pub fn propagate_cmd(cfg: &RunConfig, out: Option<&Path>) -> Result<Output, CliError> {
    let rep = cfg.representation()?;
    let h = cfg.hamiltonian()?;
    let e = cfg.endpoints()?;
    let tau = cfg.tau.ok_or_else(|| CliError::Config("tau is required for propagate".into()))?;
    let k = semiclassical_propagator(&h, &rep, e.z_i, e.z_f, tau, &cfg.propagator)?;
    let summary = propagator_summary_json(&k);
    let mut output = Output { stdout: summary.clone(), ..Output::default() };
    if let Some(p) = out {
        output.files.push((p.to_path_buf(), propagator_csv(&k, rep.s)));
        output.files.push((summary_path(p), summary));
    }
    Ok(output)
}

#[derive(Serialize)]
struct Check {
    name: &'static str,
    measured: Num,
    tolerance: Num,
    pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

#[derive(Serialize)]
struct ValidateDoc {
    representation: Representation,
    checks: Vec<Check>,
    pass: bool,
}

/// Runs one check; an error fails it without stopping the suite.
fn check(name: &'static str, tolerance: f64, measure: impl FnOnce() -> circle_qm::Result<f64>) -> Check {
    match measure() {
        Ok(m) => Check { name, measured: Num(m), tolerance: Num(tolerance), pass: m <= tolerance, error: None },
        Err(e) => {
            Check { name, measured: Num(f64::NAN), tolerance: Num(tolerance), pass: false, error: Some(e.to_string()) }
        }
    }
}

/// `Σ_n |e^{−s²x² + βx}|` relative to `exp(shift)`, the scale that the two
/// lattice-sum routes can agree on when the sum itself cancels.
fn term_scale(rep: &Representation, beta_re: f64, shift: f64) -> f64 {
    let s2 = rep.s2();
    let centre = (beta_re / (2.0 * s2) - rep.delta).round() as i64;
    let width = (80.0 / s2).sqrt() as i64 + 20;
    (centre - width..=centre + width)
        .map(|n| {
            let x = n as f64 + rep.delta;
            (-s2 * x * x + beta_re * x - shift).exp()
        })
        .sum()
}

/// Deterministic test points `φ + ip` spread over the strip.
fn sample_points() -> Vec<Complex64> {
    (0..12).map(|j| Complex64::new(-3.0 + 0.53 * j as f64, -1.5 + 0.27 * j as f64)).collect()
}

pub fn validate_cmd(cfg: &RunConfig, out: Option<&Path>) -> Result<Output, CliError> {
    let rep = cfg.representation.unwrap_or(Representation { delta: 0.0, s: 0.5, hbar: 1.0 });
    rep.validate()?;
    let h = cfg.hamiltonian()?;
    let mut checks = Vec::new();

    checks.push(check("poisson_equivalence", 1e-12, || {
        let alpha = Complex64::new(rep.s2(), 0.0);
        let mut worst = 0.0f64;
        for z in sample_points() {
            let beta = Complex64::i() * (z.conj() - 0.3);
            let d = lattice_sums(alpha, beta, rep.delta, 0, Some(Route::Direct), 100_000)?;
            let p = lattice_sums(alpha, beta, rep.delta, 0, Some(Route::Dual), 100_000)?;
            let pv = p.values[0] * (p.log_scale - d.log_scale).exp();
            worst = worst.max((d.values[0] - pv).norm() / term_scale(&rep, beta.re, d.log_scale));
        }
        Ok(worst)
    }));
    checks.push(check("ladder_eigenrelation", 1e-11, || {
        let mut worst = 0.0f64;
        for z in sample_points() {
            let psi = coherent_state(&rep, z, 1e-20)?;
            let g = ladder_apply(&rep, &psi, false);
            let diff = g.combine(Complex64::new(1.0, 0.0), &psi, -(Complex64::i() * z).exp());
            worst = worst.max((diff.norm_squared() / psi.norm_squared()).sqrt());
        }
        Ok(worst)
    }));
    checks.push(check("minimal_uncertainty", 1e-10, || {
        let mut worst = 0.0f64;
        for z in sample_points() {
            let (a, b) = uncertainty_product(&rep, z)?;
            worst = worst.max((a - b).abs() / b);
        }
        Ok(worst)
    }));
    checks.push(check("identity_resolution", 1e-8, || {
        identity_resolution_residual(&rep, -8, 8, QuadratureSpec::default())
    }));

    let coeffs = [(1.0, 0.2), (-0.4, 0.7), (0.3, -0.5), (0.8, 0.1)];
    let psi = StateVector::new(-1, coeffs.iter().map(|(a, b)| Complex64::new(*a, *b)).collect());
    let f = BargmannFunction::new(rep, psi.clone());
    let cutoff = f.finite_support_cutoff().unwrap_or(1.0);
    let ev = reconstruct(&f, cutoff, 1e-11);
    checks.push(check("zero_count_matches_support", 0.0, || {
        let ev = ev.clone()?;
        Ok((ev.zeros.count() as f64 - (psi.len() - 1) as f64).abs())
    }));
    checks.push(check("hadamard_round_trip", 1e-6, || {
        let ev = ev?;
        let mut worst = 0.0f64;
        for z in sample_points() {
            let z = Complex64::new(z.re.rem_euclid(TAU), z.im);
            let want = bargmann_eval(&f, z)?;
            worst = worst.max((ev.eval(z) - want).norm() / want.norm());
        }
        Ok(worst)
    }));

    let (z_i, z_f) = (Complex64::new(0.2, 0.1), Complex64::new(0.5, -0.2));
    checks.push(check("short_time_propagator", 1e-3, || {
        let k = semiclassical_propagator(&h, &rep, z_i, z_f, 1e-4, &cfg.propagator)?;
        let ov = overlap(&rep, z_f, z_i)?;
        Ok(((k.value - ov) / ov).norm())
    }));
    if let HolomorphicHamiltonian::FreeRotor = h {
        checks.push(check("free_rotor_vs_spectral", 0.02, || {
            let tau = 0.25;
            let k = semiclassical_propagator(&h, &rep, z_i, z_f, tau, &cfg.propagator)?;
            let exact = exact_propagator_spectral(&h, &rep, z_i, z_f, tau, None)?;
            Ok(((k.value - exact) / exact).norm())
        }));
    }

    let pass = checks.iter().all(|c| c.pass);
    let doc = ValidateDoc { representation: rep, checks, pass };
    let mut output = Output::single(to_json(&doc), out);
    output.failed_checks = !pass;
    Ok(output)
}
