//! Closed forms and quadratures: heat kernels, the absorbed heat equation
//! and the one-phase similarity solution.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::engine::Profile;

const TAIL: f64 = 12.0;
const PANELS: usize = 4000;

fn simpson(a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let h = (b - a) / PANELS as f64;
    let mut s = f(a) + f(b);
    for k in 1..PANELS {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + k as f64 * h);
    }
    s * h / 3.0
}

fn gaussian(x: f64, sd: f64) -> f64 {
    (-0.5 * (x / sd).powi(2)).exp() / (sd * (2.0 * PI).sqrt())
}

/// Solution of `d_t rho = a d_uu rho` on the whole line by Gaussian
/// convolution quadrature (the kernel has variance `2 a t`).
pub fn heat_solution(rho0: &Profile, a: f64, t: f64, u: f64) -> f64 {
    if t <= 0.0 || a == 0.0 {
        return rho0.eval(u);
    }
    let sd = (2.0 * a * t).sqrt();
    let (lo, hi) = (u - TAIL * sd, u + TAIL * sd);
    let f = |v: f64| gaussian(u - v, sd) * rho0.eval(v);
    // split at the origin, where presets jump
    if lo < 0.0 && hi > 0.0 {
        simpson(lo, 0.0, f) + simpson(0.0, hi, f)
    } else {
        simpson(lo, hi, f)
    }
}

/// `E_u[rho_0(sqrt(b) W_t)]` for Brownian motion killed at 0, by the
/// method of images: `int_0^inf [p(u - v) - p(u + v)] rho_0(v) dv` with
/// `p` of variance `2 b t`.
pub fn absorbed_heat_solution(rho0: &dyn Fn(f64) -> f64, b_rate: f64, t: f64, u: f64) -> f64 {
    if u <= 0.0 {
        return 0.0;
    }
    if t <= 0.0 {
        return rho0(u);
    }
    let sd = (2.0 * b_rate * t).sqrt();
    let direct = simpson((u - TAIL * sd).max(0.0), u + TAIL * sd, |v| gaussian(u - v, sd) * rho0(v));
    let image = simpson(0.0, (TAIL * sd - u).max(0.0), |v| gaussian(u + v, sd) * rho0(v));
    direct - image
}

/// `erf(u / sqrt(4 b t))`, the absorbed solution from all-ones data.
pub fn absorbed_heat_closed_form(b_rate: f64, t: f64, u: f64) -> f64 {
    if u <= 0.0 {
        return 0.0;
    }
    if t <= 0.0 {
        return 1.0;
    }
    libm::erf(u / (4.0 * b_rate * t).sqrt())
}

/// Mass removed from all-ones data by time `t`: `2 sqrt(b t / pi)`.
pub fn dissipated_mass(b_rate: f64, t: f64) -> f64 {
    2.0 * (b_rate * t / PI).sqrt()
}

/// Root of `alpha sqrt(pi) exp(alpha^2) (1 + erf alpha) = theta`, the
/// similarity exponent of the one-phase problem with latent heat 1.
pub fn one_phase_alpha(theta: f64) -> f64 {
    assert!(theta > 0.0, "theta must be positive");
    let f = |a: f64| a * PI.sqrt() * (a * a).exp() * (1.0 + libm::erf(a)) - theta;
    let (mut lo, mut hi) = (0.0, 1.0);
    while f(hi) < 0.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `B(t) = -2 alpha sqrt(a_plus t)` for an empty solid side and liquid
/// density `theta`.
pub fn one_phase_front(theta: f64, a_plus: f64, t: f64) -> f64 {
    -2.0 * one_phase_alpha(theta) * (a_plus * t).sqrt()
}

/// Temperature of the problem with scaling factor `k` from the `k = 1`
/// solution started at `k` times its data.
pub fn rescale_temperature(rho: &[f64], k: f64) -> Vec<f64> {
    rho.iter().map(|v| v / k).collect()
}

/// Data `k rho_0` for which the `k = 1` solution rescales to the
/// `k`-problem started at `rho_0`.
pub fn scaled_initial_profile(rho0: &Profile, k: f64) -> Profile {
    match rho0 {
        Profile::Step { left, right } => Profile::step(k * left, k * right),
        Profile::Constant(v) => Profile::Constant(k * v),
        p => {
            let p = p.clone();
            Profile::Custom(Arc::new(move |u| k * p.eval(u)))
        }
    }
}
