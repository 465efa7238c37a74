use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::hamiltonian::{h_matrix_element, h_partials, HolomorphicHamiltonian};
use crate::error::{Error, Result};
use crate::states::Representation;

/// `|X|` beyond which the Riccati solution is treated as a caustic.
pub const CAUSTIC_BOUND: f64 = 1e12;

/// Controls for the shooting solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BvpOptions {
    /// Accepted `|v(τ) − (z̄_F − 2πn)|`.
    pub residual_tol: f64,
    pub newton_max: usize,
    pub initial_steps: usize,
    /// Largest change of `v(τ)` tolerated when the step is halved.
    pub step_tol: f64,
    pub max_halvings: usize,
    /// Branches closer than this in `(v(0), u(τ))` are merged.
    pub dedupe_tol: f64,
}

impl Default for BvpOptions {
    fn default() -> Self {
        BvpOptions {
            residual_tol: 1e-10,
            newton_max: 60,
            initial_steps: 400,
            step_tol: 1e-9,
            max_halvings: 6,
            dedupe_tol: 1e-8,
        }
    }
}

/// A solution `(u, v)` of the complexified Hamilton equations.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexTrajectory {
    pub winding_n: i64,
    /// Branch index within the winding, in seed order.
    pub nu: usize,
    pub tau: f64,
    pub times: Vec<f64>,
    pub u: Vec<Complex64>,
    pub v: Vec<Complex64>,
    /// Linearized flow with `δu(0) = 0`, `δv(0) = 1`.
    pub du: Vec<Complex64>,
    pub dv: Vec<Complex64>,
    /// Riccati stability variable, filled by [`stability_x`].
    pub x: Vec<Complex64>,
    /// Complex action including the boundary terms.
    pub action: Complex64,
    /// `(δv(0)/δv(τ))^{1/2}` on the branch continued from `t = 0`.
    pub prefactor_ratio: Complex64,
    /// Continuous phase of `δv` at `t = τ`.
    pub dv_phase: f64,
    /// `s²(i/ħ) ∫ ∂₁∂₂ℋ(v,u) dt`.
    pub cross_term: Complex64,
    /// `ℋ(v(0), u(0))`.
    pub energy: Complex64,
    /// `max_t |ℋ(v,u) − ℋ(v(0),u(0))|`.
    pub energy_drift: f64,
    pub steps: usize,
    pub newton_iterations: usize,
}

impl ComplexTrajectory {
    pub fn u_end(&self) -> Complex64 {
        *self.u.last().expect("trajectory is nonempty")
    }

    pub fn v_start(&self) -> Complex64 {
        self.v[0]
    }

    /// The linearized route to `X`: `δu/(4s² δv)`.
    pub fn x_from_linearized(&self, rep: &Representation) -> Vec<Complex64> {
        self.du.iter().zip(&self.dv).map(|(a, b)| a / (4.0 * rep.s2() * b)).collect()
    }
}

type State = [Complex64; 6];

struct Flow {
    end: State,
    dv_phase: f64,
    path: Option<Vec<State>>,
}

fn add(y: &State, k: &State, h: f64) -> State {
    let mut out = *y;
    for (o, d) in out.iter_mut().zip(k) {
        *o += d * h;
    }
    out
}

/// Right-hand side for `(u, v, δu, δv, S_int, ∫∂₁∂₂ℋ)`.
fn rhs(h: &HolomorphicHamiltonian, rep: &Representation, y: &State) -> Result<State> {
    let [u, v, du, dv, _, _] = *y;
    let p = h_partials(h, v, u, rep)?;
    let a = Complex64::new(0.0, 2.0 * rep.s2() / rep.hbar);
    let ud = -a * p.d1;
    let vd = a * p.d2;
    let dud = -a * (p.d11 * dv + p.d12 * du);
    let dvd = a * (p.d12 * dv + p.d22 * du);
    let kin = Complex64::new(0.0, rep.hbar / (4.0 * rep.s2()));
    let sd = kin * (ud * v - vd * u) - p.value;
    Ok([ud, vd, dud, dvd, sd, p.d12])
}

fn integrate(
    h: &HolomorphicHamiltonian,
    rep: &Representation,
    z_i: Complex64,
    v0: Complex64,
    tau: f64,
    steps: usize,
    record: bool,
) -> Result<Flow> {
    let zero = Complex64::new(0.0, 0.0);
    let mut y: State = [z_i, v0, zero, Complex64::new(1.0, 0.0), zero, zero];
    let dt = tau / steps as f64;
    let mut phase = 0.0;
    let mut path = record.then(|| {
        let mut p = Vec::with_capacity(steps + 1);
        p.push(y);
        p
    });
    for _ in 0..steps {
        let k1 = rhs(h, rep, &y)?;
        let k2 = rhs(h, rep, &add(&y, &k1, dt / 2.0))?;
        let k3 = rhs(h, rep, &add(&y, &k2, dt / 2.0))?;
        let k4 = rhs(h, rep, &add(&y, &k3, dt))?;
        let prev = y[3];
        for j in 0..6 {
            y[j] += (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]) * (dt / 6.0);
        }
        if !y.iter().all(|c| c.re.is_finite() && c.im.is_finite()) {
            return Err(Error::RangeOverflow);
        }
        phase += (y[3] / prev).arg();
        if let Some(p) = path.as_mut() {
            p.push(y);
        }
    }
    Ok(Flow { end: y, dv_phase: phase, path })
}

/// Newton shooting in `v(0)` from one seed, with step halving until `v(τ)`
/// is resolved. Returns `(v(0), steps, iterations)`.
fn shoot(
    h: &HolomorphicHamiltonian,
    rep: &Representation,
    z_i: Complex64,
    target: Complex64,
    tau: f64,
    seed: Complex64,
    opts: &BvpOptions,
) -> Result<(Complex64, usize, usize)> {
    let mut v0 = seed;
    let mut steps = opts.initial_steps.max(1);
    let mut total_iter = 0;
    let mut change = f64::NAN;
    for _ in 0..=opts.max_halvings {
        let mut converged = false;
        for _ in 0..opts.newton_max {
            total_iter += 1;
            let flow = integrate(h, rep, z_i, v0, tau, steps, false)?;
            let r = flow.end[1] - target;
            if r.norm() <= 1e-13 * (1.0 + target.norm()) {
                converged = true;
                break;
            }
            let step = r / flow.end[3];
            if !(step.re.is_finite() && step.im.is_finite()) {
                break;
            }
            v0 -= step;
            if step.norm() <= 1e-15 * (1.0 + v0.norm()) {
                converged = true;
                break;
            }
        }
        let coarse = integrate(h, rep, z_i, v0, tau, steps, false)?;
        if !converged && (coarse.end[1] - target).norm() > opts.residual_tol {
            return Err(Error::BvpNoConvergence { winding: 0 });
        }
        let fine = integrate(h, rep, z_i, v0, tau, 2 * steps, false)?;
        change = (fine.end[1] - coarse.end[1]).norm();
        if change <= opts.step_tol {
            if (coarse.end[1] - target).norm() > opts.residual_tol {
                return Err(Error::BvpNoConvergence { winding: 0 });
            }
            return Ok((v0, steps, total_iter));
        }
        steps *= 2;
    }
    Err(Error::StepResolution { change })
}

fn build(
    h: &HolomorphicHamiltonian,
    rep: &Representation,
    z_i: Complex64,
    v0: Complex64,
    tau: f64,
    steps: usize,
    winding_n: i64,
) -> Result<ComplexTrajectory> {
    let flow = integrate(h, rep, z_i, v0, tau, steps, true)?;
    let path = flow.path.expect("recorded");
    let [u_end, v_end, _, dv_end, s_int, cross] = flow.end;
    let boundary = Complex64::new(0.0, rep.hbar / (4.0 * rep.s2())) * (z_i * v0 + u_end * v_end);
    let energy = h_matrix_element(h, v0, z_i, rep)?;
    let mut drift = 0.0f64;
    for y in &path {
        drift = drift.max((h_matrix_element(h, y[1], y[0], rep)? - energy).norm());
    }
    let prefactor_ratio = Complex64::from_polar(dv_end.norm().powf(-0.5), -0.5 * flow.dv_phase);
    let dt = tau / steps as f64;
    Ok(ComplexTrajectory {
        winding_n,
        nu: 0,
        tau,
        times: (0..=steps).map(|j| j as f64 * dt).collect(),
        u: path.iter().map(|y| y[0]).collect(),
        v: path.iter().map(|y| y[1]).collect(),
        du: path.iter().map(|y| y[2]).collect(),
        dv: path.iter().map(|y| y[3]).collect(),
        x: Vec::new(),
        action: s_int - boundary,
        prefactor_ratio,
        dv_phase: flow.dv_phase,
        cross_term: Complex64::new(0.0, rep.s2() / rep.hbar) * cross,
        energy,
        energy_drift: drift,
        steps,
        newton_iterations: 0,
    })
}

/// Default seeds for `v(0)`: the conjugate guess `z̄_I`, a ring of radius
/// `ring_radius · s` around it, and the free-particle solution.
pub fn default_seeds(
    rep: &Representation,
    z_i: Complex64,
    target: Complex64,
    tau: f64,
    ring: usize,
    ring_radius: f64,
) -> Vec<Complex64> {
    let centre = z_i.conj();
    let mut seeds = vec![centre];
    for k in 0..ring {
        let angle = std::f64::consts::TAU * k as f64 / ring as f64;
        seeds.push(centre + Complex64::from_polar(ring_radius * rep.s, angle));
    }
    let gamma = rep.hbar * tau / (2.0 * rep.s2());
    seeds.push(z_i + (target - z_i) / Complex64::new(1.0, gamma));
    seeds
}

/// All distinct trajectories with `u(0) = z_I`, `v(τ) = z̄_F − 2πn` reached from `seeds`.
#[allow(clippy::too_many_arguments)]
pub fn solve_complex_bvp(
    h: &HolomorphicHamiltonian,
    rep: &Representation,
    z_i: Complex64,
    z_f: Complex64,
    winding_n: i64,
    tau: f64,
    seeds: &[Complex64],
    opts: &BvpOptions,
) -> Result<Vec<ComplexTrajectory>> {
    rep.validate()?;
    h.validate()?;
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::InvalidParameter(format!("tau must be positive, got {tau}")));
    }
    if seeds.is_empty() {
        return Err(Error::InvalidParameter("at least one seed is required".into()));
    }
    let target = z_f.conj() - std::f64::consts::TAU * winding_n as f64;
    let outcomes: Vec<Result<(Complex64, usize, usize)>> =
        seeds.par_iter().map(|s| shoot(h, rep, z_i, target, tau, *s, opts)).collect();
    let mut accepted: Vec<ComplexTrajectory> = Vec::new();
    let mut last_err = None;
    for outcome in outcomes {
        let (v0, steps, iters) = match outcome {
            Ok(x) => x,
            Err(e) => {
                last_err = Some(e);
                continue;
            }
        };
        let mut traj = match build(h, rep, z_i, v0, tau, steps, winding_n) {
            Ok(t) => t,
            Err(e) => {
                last_err = Some(e);
                continue;
            }
        };
        let duplicate =
            accepted.iter().any(|t| (t.v_start() - v0).norm() + (t.u_end() - traj.u_end()).norm() < opts.dedupe_tol);
        if !duplicate {
            traj.nu = accepted.len();
            traj.newton_iterations = iters;
            accepted.push(traj);
        }
    }
    if accepted.is_empty() {
        return Err(match last_err {
            Some(Error::StepResolution { change }) => Error::StepResolution { change },
            _ => Error::BvpNoConvergence { winding: winding_n },
        });
    }
    Ok(accepted)
}

/// Riccati stability variable `X(t)` with `X(0) = 0`, on the trajectory's grid.
///
/// `Ẋ = −(i/2ħ)∂₁²ℋ − 4s²X(i/ħ)∂₁∂₂ℋ − 8s⁴X²(i/ħ)∂₂²ℋ` is integrated together
/// with `(u, v)` using the trajectory's step.
pub fn stability_x(
    traj: &ComplexTrajectory,
    h: &HolomorphicHamiltonian,
    rep: &Representation,
) -> Result<Vec<Complex64>> {
    let s2 = rep.s2();
    let ih = Complex64::new(0.0, 1.0 / rep.hbar);
    let a = Complex64::new(0.0, 2.0 * s2 / rep.hbar);
    let f = |y: &[Complex64; 3]| -> Result<[Complex64; 3]> {
        let [u, v, x] = *y;
        let p = h_partials(h, v, u, rep)?;
        let xd = -0.5 * ih * p.d11 - 4.0 * s2 * x * ih * p.d12 - 8.0 * s2 * s2 * x * x * ih * p.d22;
        Ok([-a * p.d1, a * p.d2, xd])
    };
    let step = |y: &[Complex64; 3], k: &[Complex64; 3], c: f64| [y[0] + k[0] * c, y[1] + k[1] * c, y[2] + k[2] * c];
    let dt = traj.tau / traj.steps as f64;
    let mut y = [traj.u[0], traj.v[0], Complex64::new(0.0, 0.0)];
    let mut out = Vec::with_capacity(traj.steps + 1);
    out.push(y[2]);
    for j in 0..traj.steps {
        let k1 = f(&y)?;
        let k2 = f(&step(&y, &k1, dt / 2.0))?;
        let k3 = f(&step(&y, &k2, dt / 2.0))?;
        let k4 = f(&step(&y, &k3, dt))?;
        for i in 0..3 {
            y[i] += (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) * (dt / 6.0);
        }
        if !(y[2].norm() <= CAUSTIC_BOUND) {
            return Err(Error::Caustic { time: (j + 1) as f64 * dt });
        }
        out.push(y[2]);
    }
    Ok(out)
}

/// `S = ∫[iħ(u̇v − v̇u)/(4s²) − ℋ(v,u)]dt − iħ(u′v′ + u″v″)/(4s²)`, re-integrated
/// from the trajectory's initial data with its own step.
pub fn complex_action(traj: &ComplexTrajectory, h: &HolomorphicHamiltonian, rep: &Representation) -> Result<Complex64> {
    let flow = integrate(h, rep, traj.u[0], traj.v[0], traj.tau, traj.steps, false)?;
    let [u_end, v_end, _, _, s_int, _] = flow.end;
    let boundary = Complex64::new(0.0, rep.hbar / (4.0 * rep.s2())) * (traj.u[0] * traj.v[0] + u_end * v_end);
    Ok(s_int - boundary)
}
