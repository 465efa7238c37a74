//! End-to-end acceptance checks. Prints one line per criterion and exits
//! nonzero if any criterion fails.

use std::f64::consts::{PI, TAU};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use circle_qm::husimi::{
    bargmann_eval, branch_corrected_log_product, direct_product, find_strip_zeros, reconstruct, sin_hadamard_truncated,
    strip_distance, BargmannFunction,
};
use circle_qm::quadrature::QuadratureSpec;
use circle_qm::semiclassics::{
    default_seeds, exact_propagator_spectral, free_particle_line, h_matrix_element, semiclassical_propagator,
    solve_complex_bvp, BvpOptions, HolomorphicHamiltonian, PropagatorOptions,
};
use circle_qm::states::{
    coherent_state, identity_resolution_residual, ladder_apply, norm_squared, overlap, uncertainty_product,
    Representation, StateVector,
};
use circle_qm::theta::{lattice_sums, Route};
use circle_qm::Complex64;
use nalgebra::DMatrix;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

type Outcome = Result<(bool, String), String>;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn rep(delta: f64, s: f64) -> Representation {
    Representation::new(delta, s, 1.0).expect("valid representation")
}

fn fmt<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

/// Sum of `|terms|` of the lattice sum relative to `exp(shift)`, by brute force.
fn term_scale(alpha: f64, beta: Complex64, delta: f64, k: usize, shift: f64) -> f64 {
    let centre = (beta.re / (2.0 * alpha) - delta).round() as i64;
    let width = (80.0 / alpha).sqrt() as i64 + 20;
    (centre - width..=centre + width)
        .map(|n| {
            let x = n as f64 + delta;
            (-alpha * x * x + beta.re * x - shift).exp() * x.abs().powi(k as i32)
        })
        .sum()
}

fn poisson_equivalence() -> Outcome {
    let mut rng = StdRng::seed_from_u64(101);
    let mut worst = 0.0f64;
    let samples = 2000;
    for j in 0..samples {
        let alpha = rng.gen_range(0.05..5.0);
        let beta = Complex64::from_polar(rng.gen_range(0.0..10.0), rng.gen_range(0.0..TAU));
        let delta = [0.0, 0.3, 0.5][j % 3];
        let a = c(alpha, 0.0);
        let d = lattice_sums(a, beta, delta, 4, Some(Route::Direct), 100_000).map_err(fmt)?;
        let p = lattice_sums(a, beta, delta, 4, Some(Route::Dual), 100_000).map_err(fmt)?;
        for k in 0..=4 {
            let pv = p.values[k] * (p.log_scale - d.log_scale).exp();
            let scale = term_scale(alpha, beta, delta, k, d.log_scale);
            worst = worst.max((d.values[k] - pv).norm() / scale);
        }
    }
    Ok((worst <= 1e-12, format!("max |direct - dual|/S = {worst:.2e} over {samples} samples x 5 orders")))
}

fn norm_asymptotics() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for s in [0.2, 0.3, 0.5] {
        let q = (-PI * PI / (s * s)).exp();
        let bound = 3.0 * q / (1.0 - q);
        for delta in [0.0, 0.5] {
            let r = rep(delta, s);
            let want = (PI / r.s2()).sqrt();
            let dev = (norm_squared(&r, c(0.0, 0.0)).map_err(fmt)? - want).abs() / want;
            pass &= dev <= bound;
            parts.push(format!("s={s},δ={delta}: {dev:.2e} (bound {bound:.2e})"));
        }
    }
    Ok((pass, parts.join("; ")))
}

fn ladder_relation() -> Outcome {
    let mut rng = StdRng::seed_from_u64(103);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let r = rep(rng.gen_range(0.0..1.0), rng.gen_range(0.2..1.5));
        let z = c(rng.gen_range(-PI..PI), rng.gen_range(-2.0..2.0));
        let psi = coherent_state(&r, z, 1e-20).map_err(fmt)?;
        let g = ladder_apply(&r, &psi, false);
        let diff = g.combine(c(1.0, 0.0), &psi, -(Complex64::i() * z).exp());
        worst = worst.max((diff.norm_squared() / psi.norm_squared()).sqrt());
    }
    Ok((worst <= 1e-11, format!("max relative residual {worst:.2e} over 100 cases")))
}

fn identity_resolution() -> Outcome {
    let mut worst = 0.0f64;
    for delta in [0.0, 0.5] {
        for s in [0.5, 1.0] {
            let res = identity_resolution_residual(&rep(delta, s), -8, 8, QuadratureSpec::default()).map_err(fmt)?;
            worst = worst.max(res);
        }
    }
    Ok((worst <= 1e-8, format!("max residual {worst:.2e} on [-8,8] with 128x128 nodes")))
}

fn uncertainty_saturation() -> Outcome {
    let mut rng = StdRng::seed_from_u64(105);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let r = rep(rng.gen_range(0.0..1.0), rng.gen_range(0.2..1.5));
        let z = c(rng.gen_range(-PI..PI), rng.gen_range(-2.0..2.0));
        let (a, b) = uncertainty_product(&r, z).map_err(fmt)?;
        worst = worst.max((a - b).abs() / b);
    }
    Ok((worst <= 1e-10, format!("max relative gap {worst:.2e} over 50 points")))
}

fn theta_zero_lattice() -> Outcome {
    let r = rep(0.0, 1.0);
    let psi = coherent_state(&r, c(0.0, 0.0), 1e-30).map_err(fmt)?;
    let f = BargmannFunction::truncated(r, psi, 1e-30);
    let found = find_strip_zeros(&f, 6.0, 1e-12).map_err(fmt)?;
    // ψ(z) ∝ ϑ₃(−z/2π, is²/π), so z₀ = (k+½) + (m+½)τ maps to z = −2πz₀.
    let tau = c(0.0, r.s2() / PI);
    let mut expected = Vec::new();
    for m in -3i64..3 {
        let z0 = c(0.5, 0.0) + (m as f64 + 0.5) * tau;
        let z = -TAU * z0;
        expected.push(c(z.re.rem_euclid(TAU), z.im));
    }
    expected.sort_by(|a, b| a.im.abs().total_cmp(&b.im.abs()));
    let mut worst = 0.0f64;
    for e in expected.iter().take(6) {
        let d = found.a_list.iter().map(|a| strip_distance(*a, *e)).fold(f64::INFINITY, f64::min);
        worst = worst.max(d);
    }
    Ok((worst <= 1e-9, format!("{} zeros found, worst distance {worst:.2e} over the 6 nearest", found.count())))
}

/// Roots of `Σ p_k w^k` from the companion matrix, polished by Newton.
fn companion_roots(p: &[Complex64]) -> Vec<Complex64> {
    let m = p.len() - 1;
    let comp = DMatrix::from_fn(m, m, |i, j| {
        if i == 0 {
            -p[m - 1 - j] / p[m]
        } else if i == j + 1 {
            c(1.0, 0.0)
        } else {
            c(0.0, 0.0)
        }
    });
    let eig = comp.schur().eigenvalues().expect("complex Schur form");
    eig.iter()
        .map(|w0| {
            let mut w = *w0;
            for _ in 0..20 {
                let (mut v, mut d) = (c(0.0, 0.0), c(0.0, 0.0));
                for coef in p.iter().rev() {
                    d = d * w + v;
                    v = v * w + coef;
                }
                if d.norm() == 0.0 {
                    break;
                }
                w -= v / d;
            }
            w
        })
        .collect()
}

fn random_state(rng: &mut StdRng, max_len: usize, s_range: std::ops::Range<f64>) -> BargmannFunction {
    let len = rng.gen_range(2..=max_len);
    let r = rep(rng.gen_range(0.0..1.0), rng.gen_range(s_range));
    let mut coeffs: Vec<Complex64> = (0..len).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    coeffs[0] += 0.05;
    coeffs[len - 1] += 0.05;
    BargmannFunction::new(r, StateVector::new(rng.gen_range(-3..3), coeffs))
}

fn zero_count_oracle() -> Outcome {
    let mut rng = StdRng::seed_from_u64(107);
    let (mut count_mismatch, mut worst) = (0usize, 0.0f64);
    for _ in 0..200 {
        let f = random_state(&mut rng, 8, 0.4..1.2);
        let cutoff = f.finite_support_cutoff().ok_or("finite support expected")?;
        let z = find_strip_zeros(&f, cutoff, 1e-11).map_err(fmt)?;
        // e^{−iz} = w gives z = −arg w + i ln|w|
        let oracle: Vec<Complex64> = companion_roots(&f.polynomial())
            .into_iter()
            .map(|w| c((-w.arg()).rem_euclid(TAU), w.norm().ln()))
            .collect();
        if z.count() != oracle.len() {
            count_mismatch += 1;
        }
        for a in &z.a_list {
            let d = oracle.iter().map(|o| strip_distance(*a, *o)).fold(f64::INFINITY, f64::min);
            worst = worst.max(d);
        }
    }
    Ok((
        count_mismatch == 0 && worst <= 1e-9,
        format!("{count_mismatch} count mismatches in 200 states, worst zero distance {worst:.2e}"),
    ))
}

fn hadamard_round_trip() -> Outcome {
    let mut rng = StdRng::seed_from_u64(108);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let f = random_state(&mut rng, 8, 0.5..1.2);
        let ev = reconstruct(&f, f.finite_support_cutoff().ok_or("finite support expected")?, 1e-11).map_err(fmt)?;
        for _ in 0..100 {
            let z = c(rng.gen_range(0.0..TAU), rng.gen_range(-2.0..2.0));
            let want = bargmann_eval(&f, z).map_err(fmt)?;
            worst = worst.max((ev.eval(z) - want).norm() / want.norm());
        }
    }
    Ok((worst <= 1e-6, format!("max relative error {worst:.2e} over 50 states x 100 points")))
}

fn appendix_identities() -> Outcome {
    let (z, a) = (c(1.0, 1.0), c(2.0, 0.5));
    let exact = ((z - a) / 2.0).sin();
    let ns = [100usize, 1000, 10000];
    let mut errs = Vec::new();
    for n in ns {
        errs.push((sin_hadamard_truncated(z, a, n).map_err(fmt)? - exact).norm());
    }
    let orders: Vec<f64> = errs.windows(2).map(|w| (w[0] / w[1]).log10()).collect();
    let order_ok = orders.iter().all(|o| (o - 1.0).abs() <= 0.05);

    let mut rng = StdRng::seed_from_u64(109);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let len = rng.gen_range(1..=12);
        let list: Vec<Complex64> = (0..len)
            .map(|_| {
                let im = rng.gen_range(0.3..4.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                c(rng.gen_range(0.0..TAU), im)
            })
            .collect();
        let lhs = direct_product(&list).map_err(fmt)?;
        let rhs = branch_corrected_log_product(&list).map_err(fmt)?.exp();
        worst = worst.max((lhs - rhs).norm() / lhs.norm());
    }
    Ok((
        order_ok && worst <= 1e-12,
        format!("sine orders {:.3}, {:.3}; log-product max relative error {worst:.2e}", orders[0], orders[1]),
    ))
}

fn short_time_limit() -> Outcome {
    let (z_i, z_f) = (c(0.2, 0.1), c(0.5, -0.2));
    let r = rep(0.3, 0.3);
    let ov = overlap(&r, z_f, z_i).map_err(fmt)?;
    let mut pass = true;
    let mut parts = Vec::new();
    for h in [HolomorphicHamiltonian::FreeRotor, HolomorphicHamiltonian::Pendulum { k_pend: 0.1 }] {
        let mut errs = Vec::new();
        for tau in [1e-2, 1e-3, 1e-4] {
            let k = semiclassical_propagator(&h, &r, z_i, z_f, tau, &PropagatorOptions::default()).map_err(fmt)?;
            errs.push(((k.value - ov) / ov).norm());
        }
        let orders: Vec<f64> = errs.windows(2).map(|w| (w[0] / w[1]).log10()).collect();
        pass &= errs[1] <= 1e-3 && orders.iter().all(|o| *o >= 1.0);
        parts.push(format!("k={}: err(1e-3)={:.3e}, orders {:.3}, {:.3}", h.coupling(), errs[1], orders[0], orders[1]));
    }
    Ok((pass, parts.join("; ")))
}

fn compare(
    h: &HolomorphicHamiltonian,
    r: &Representation,
    z_i: Complex64,
    z_f: Complex64,
    tau: f64,
) -> Result<Complex64, String> {
    let sc = semiclassical_propagator(h, r, z_i, z_f, tau, &PropagatorOptions::default()).map_err(fmt)?;
    let ex = exact_propagator_spectral(h, r, z_i, z_f, tau, None).map_err(fmt)?;
    Ok(sc.value / ex)
}

fn free_rotor_vs_exact() -> Outcome {
    let starts = [c(0.0, 0.0), c(0.4, 0.15), c(-0.7, -0.1)];
    let ends = [c(0.2, -0.05), c(0.9, 0.1), c(-0.5, 0.2)];
    let h = HolomorphicHamiltonian::FreeRotor;
    let (mut mag, mut phase) = (0.0f64, 0.0f64);
    for delta in [0.0, 0.5] {
        let r = rep(delta, 0.2);
        for tau in [0.25, 0.5, 1.0] {
            for z_i in starts {
                for z_f in ends {
                    let ratio = compare(&h, &r, z_i, z_f, tau)?;
                    mag = mag.max((ratio.norm() - 1.0).abs());
                    phase = phase.max(ratio.arg().abs());
                }
            }
        }
    }
    Ok((
        mag <= 0.02 && phase <= 0.02,
        format!("max magnitude error {mag:.2e}, max phase error {phase:.2e} rad over 54 cases"),
    ))
}

fn pendulum_vs_exact() -> Outcome {
    let pairs = [
        (c(0.0, 0.0), c(0.3, 0.0)),
        (c(0.2, 0.1), c(0.6, -0.1)),
        (c(-0.4, 0.0), c(0.1, 0.2)),
        (c(1.0, 0.1), c(1.3, 0.0)),
        (c(0.5, -0.2), c(0.2, 0.0)),
        (c(-1.0, 0.0), c(-0.6, 0.1)),
    ];
    let h = HolomorphicHamiltonian::Pendulum { k_pend: 0.1 };
    let r = rep(0.0, 0.2);
    let mut worst = 0.0f64;
    for tau in [0.25, 0.5] {
        for (z_i, z_f) in pairs {
            let ratio = compare(&h, &r, z_i, z_f, tau)?;
            worst = worst.max((ratio - 1.0).norm());
        }
    }
    Ok((worst <= 0.05, format!("max relative error {worst:.2e} over 6 pairs x 2 times")))
}

fn winding_decomposition() -> Outcome {
    let r = rep(0.3, 0.3);
    let tau = 1.0;
    let h = HolomorphicHamiltonian::FreeRotor;
    let opts = PropagatorOptions { winding_cutoff: 1e-300, ..PropagatorOptions::default() };
    let ends = [
        (c(0.0, 0.0), c(0.0, 0.0)),
        (c(0.3, 0.1), c(0.5, -0.1)),
        (c(-0.4, 0.2), c(0.2, 0.1)),
        (c(1.0, -0.1), c(0.7, 0.0)),
        (c(0.1, 0.3), c(-0.6, -0.2)),
    ];
    let mut ratios = Vec::new();
    for (z_i, z_f) in ends {
        let k = semiclassical_propagator(&h, &r, z_i, z_f, tau, &opts).map_err(fmt)?;
        for n in -2i64..=2 {
            let contrib: Complex64 = k.branches.iter().filter(|b| b.winding_n == n).map(|b| b.contribution).sum();
            if contrib == c(0.0, 0.0) {
                return Err(format!("winding {n} missing"));
            }
            let line = Complex64::from_polar(1.0, TAU * n as f64 * r.delta)
                * free_particle_line(&r, z_i, z_f - TAU * n as f64, tau);
            ratios.push(contrib / line);
        }
    }
    let reference = ratios[0];
    let worst = ratios.iter().map(|x| (x / reference - 1.0).norm()).fold(0.0, f64::max);
    Ok((worst <= 0.01, format!("ratio {reference:.6} constant to {worst:.2e} over 25 (n, endpoint) cases")))
}

fn action_derivatives() -> Outcome {
    let mut rng = StdRng::seed_from_u64(114);
    let bvp = BvpOptions { initial_steps: 2000, residual_tol: 1e-13, ..BvpOptions::default() };
    let step = 1e-4;
    let mut worst = [0.0f64; 3];
    for _ in 0..10 {
        let r = rep(rng.gen_range(0.0..1.0), rng.gen_range(0.25..0.5));
        let h = HolomorphicHamiltonian::Pendulum { k_pend: rng.gen_range(0.05..0.5) };
        let z_i = c(rng.gen_range(-1.0..1.0), rng.gen_range(-0.3..0.3));
        let z_f = c(rng.gen_range(-1.0..1.0), rng.gen_range(-0.3..0.3));
        let tau = rng.gen_range(0.2..0.6);
        let seeds = default_seeds(&r, z_i, z_f.conj(), tau, 8, 0.5);
        let base = solve_complex_bvp(&h, &r, z_i, z_f, 0, tau, &seeds, &bvp).map_err(fmt)?;
        let t = base.iter().find(|t| (t.v_start() - z_i).re.abs() < PI).ok_or("no principal trajectory")?;
        let near = [t.v_start()];
        let action = |z_i: Complex64, z_f: Complex64, tau: f64| -> Result<Complex64, String> {
            let sol = solve_complex_bvp(&h, &r, z_i, z_f, 0, tau, &near, &bvp).map_err(fmt)?;
            Ok(sol[0].action)
        };
        let k = Complex64::i() * r.hbar / (2.0 * r.s2());
        let v_end = *t.v.last().unwrap();
        let d_u = (action(z_i + step, z_f, tau)? - action(z_i - step, z_f, tau)?) / (2.0 * step);
        // v(τ) = z̄_F, so a real shift of z_F moves it by the same amount
        let d_v = (action(z_i, z_f + step, tau)? - action(z_i, z_f - step, tau)?) / (2.0 * step);
        let d_t = (action(z_i, z_f, tau + step)? - action(z_i, z_f, tau - step)?) / (2.0 * step);
        let want = [-k * t.v_start(), -k * t.u_end(), -h_matrix_element(&h, v_end, t.u_end(), &r).map_err(fmt)?];
        for (j, (got, want)) in [d_u, d_v, d_t].iter().zip(want).enumerate() {
            worst[j] = worst[j].max((got - want).norm() / want.norm());
        }
    }
    Ok((
        worst.iter().all(|w| *w <= 1e-6),
        format!("max relative errors dS/du' {:.2e}, dS/dv'' {:.2e}, dS/dtau {:.2e}", worst[0], worst[1], worst[2]),
    ))
}

struct Criterion {
    id: u32,
    name: &'static str,
    limit: Duration,
    run: fn() -> Outcome,
}

fn main() -> ExitCode {
    let secs = Duration::from_secs;
    let criteria = [
        Criterion { id: 1, name: "poisson resummation equivalence", limit: secs(5), run: poisson_equivalence },
        Criterion { id: 2, name: "norm asymptotics", limit: secs(1), run: norm_asymptotics },
        Criterion { id: 3, name: "ladder eigenrelation", limit: secs(5), run: ladder_relation },
        Criterion { id: 4, name: "resolution of identity", limit: secs(10), run: identity_resolution },
        Criterion { id: 5, name: "minimal uncertainty", limit: secs(5), run: uncertainty_saturation },
        Criterion { id: 6, name: "theta zero lattice", limit: secs(30), run: theta_zero_lattice },
        Criterion { id: 7, name: "zero count oracle", limit: secs(60), run: zero_count_oracle },
        Criterion { id: 8, name: "hadamard round trip", limit: secs(60), run: hadamard_round_trip },
        Criterion { id: 9, name: "product identities", limit: secs(10), run: appendix_identities },
        Criterion { id: 10, name: "short-time propagator", limit: secs(60), run: short_time_limit },
        Criterion { id: 11, name: "free rotor vs exact", limit: secs(300), run: free_rotor_vs_exact },
        Criterion { id: 12, name: "pendulum vs exact", limit: secs(300), run: pendulum_vs_exact },
        Criterion { id: 13, name: "winding decomposition", limit: secs(120), run: winding_decomposition },
        Criterion { id: 14, name: "action derivatives", limit: secs(120), run: action_derivatives },
    ];
    let mut failed = 0;
    for c in &criteria {
        let start = Instant::now();
        let outcome = (c.run)();
        let elapsed = start.elapsed();
        let in_time = elapsed <= c.limit;
        let (pass, detail) = match outcome {
            Ok((pass, detail)) => (pass && in_time, detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failed += 1;
        }
        let timing = format!("{:.2}s / {}s", elapsed.as_secs_f64(), c.limit.as_secs());
        println!(
            "{} criterion {:>2} {:<32} {detail} [{timing}{}]",
            if pass { "PASS" } else { "FAIL" },
            c.id,
            c.name,
            if in_time { "" } else { ", over time" }
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
