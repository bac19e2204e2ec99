use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::engine::rng;
use crate::error::{Error, Result};
use crate::lattice::{Configuration, FrameConfig, ModelParams, ProcessKind, TwoPhaseConfig};

/// Signed macroscopic density `rho_0` on the real line.
#[derive(Clone)]
pub enum Profile {
    /// `left` for `u <= 0`, `right` for `u > 0`.
    Step { left: f64, right: f64 },
    Constant(f64),
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Profile::Step { left, right } => write!(f, "Step({left}, {right})"),
            Profile::Constant(v) => write!(f, "Constant({v})"),
            Profile::Custom(_) => write!(f, "Custom"),
        }
    }
}

impl Profile {
    pub fn step(left: f64, right: f64) -> Self {
        Profile::Step { left, right }
    }

    pub fn eval(&self, u: f64) -> f64 {
        match self {
            Profile::Step { left, right } => {
                if u <= 0.0 {
                    *left
                } else {
                    *right
                }
            }
            Profile::Constant(v) => *v,
            Profile::Custom(f) => f(u),
        }
    }

    /// Mean of `g(rho_0)` over `[a, b]`, exact for piecewise constant
    /// profiles and Simpson-integrated otherwise.
    pub fn cell_average(&self, a: f64, b: f64, g: impl Fn(f64) -> f64) -> f64 {
        match self {
            Profile::Step { left, right } => {
                if b <= 0.0 {
                    g(*left)
                } else if a >= 0.0 {
                    g(*right)
                } else {
                    (g(*left) * (-a) + g(*right) * b) / (b - a)
                }
            }
            Profile::Constant(v) => g(*v),
            Profile::Custom(f) => {
                let m = 16;
                let h = (b - a) / m as f64;
                let mut s = g(f(a)) + g(f(b));
                for k in 1..m {
                    let w = if k % 2 == 1 { 4.0 } else { 2.0 };
                    s += w * g(f(a + k as f64 * h));
                }
                s * h / 3.0 / (b - a)
            }
        }
    }
}

fn check_two_phase(profile: &Profile, params: &ModelParams) -> Result<()> {
    let m = params.half_width();
    let n = params.n as f64;
    for x in -m..=m {
        let v = profile.eval(x as f64 / n);
        if !v.is_finite() || v.abs() > 1.0 {
            return Err(Error::Profile(format!("|rho_0({})| = {} exceeds 1", x as f64 / n, v.abs())));
        }
        if x <= 0 && v > 0.0 {
            return Err(Error::Profile(format!("rho_0 must be <= 0 on the solid side, got {v} at {}", x as f64 / n)));
        }
        if x > 0 && v < 0.0 {
            return Err(Error::Profile(format!("rho_0 must be >= 0 on the liquid side, got {v} at {}", x as f64 / n)));
        }
        if x <= 0 && params.a_minus == 0.0 && v != 0.0 {
            return Err(Error::Profile("with a_minus = 0 the solid side must start empty".into()));
        }
    }
    Ok(())
}

/// Product Bernoulli initial state: site `x` is occupied with probability
/// `|rho_0(x / N)|`, and the phase boundary sits at the origin.
///
/// The window is `[-M, M]` with `M = ceil(L N)` (`[0, M]` for the absorbed
/// process). Sampling uses the initial stream of `params.seed`.
pub fn sample_initial(profile: &Profile, params: &ModelParams, kind: ProcessKind) -> Result<Configuration> {
    params.validate()?;
    kind.validate()?;
    let m = params.half_width();
    let n = params.n as f64;
    let mut rng = rng::stream(params.seed, rng::INITIAL_STREAM);
    let draw = |p: f64, rng: &mut rand_chacha::ChaCha8Rng| -> u8 {
        // always consume one draw per site so that layouts do not depend on values
        let u: f64 = rng.random();
        u8::from(u < p)
    };
    match kind {
        ProcessKind::Absorbed { .. } => {
            let mut xi = Vec::with_capacity(m as usize + 1);
            for x in 0..=m {
                let v = profile.eval(x as f64 / n);
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::Profile(format!("absorbed profile must lie in [0, 1], got {v}")));
                }
                xi.push(draw(v, &mut rng));
            }
            Ok(Configuration::Frame(FrameConfig::new(0, xi)?))
        }
        _ => {
            check_two_phase(profile, params)?;
            let eta: Vec<u8> = (-m..=m).map(|x| draw(profile.eval(x as f64 / n).abs(), &mut rng)).collect();
            if kind == ProcessKind::SigmaEta {
                Ok(Configuration::TwoPhase(TwoPhaseConfig::with_boundary(-m, eta, 0)?))
            } else {
                Ok(Configuration::Frame(FrameConfig::new(-m, eta)?))
            }
        }
    }
}

/// Named initial profiles used by the studies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)]
pub enum Preset {
    /// `-theta` on the solid side, `+theta` on the liquid side.
    SymmetricStep { theta: f64 },
    AsymmetricStep { left: f64, right: f64 },
    /// Empty solid side, `theta` on the liquid side.
    OnePhase { theta: f64 },
    AllOnes,
    Empty,
}

impl Preset {
    pub const SYMMETRIC: Preset = Preset::SymmetricStep { theta: 1.0 };
    pub const ASYMMETRIC: Preset = Preset::AsymmetricStep { left: -0.6, right: 1.0 };
    pub const ONE_PHASE: Preset = Preset::OnePhase { theta: 0.8 };

    pub fn profile(&self) -> Profile {
        match *self {
            Preset::SymmetricStep { theta } => Profile::step(-theta, theta),
            Preset::AsymmetricStep { left, right } => Profile::step(left, right),
            Preset::OnePhase { theta } => Profile::step(0.0, theta),
            Preset::AllOnes => Profile::Constant(1.0),
            Preset::Empty => Profile::Constant(0.0),
        }
    }

    /// Profile of a two-sided frame run; `AllOnes` fills both sides.
    pub fn signed_profile(&self) -> Profile {
        match self {
            Preset::AllOnes => Profile::step(-1.0, 1.0),
            p => p.profile(),
        }
    }

    pub fn name(&self) -> String {
        match self {
            Preset::SymmetricStep { theta } => format!("symmetric_step({theta})"),
            Preset::AsymmetricStep { left, right } => format!("asymmetric_step({left},{right})"),
            Preset::OnePhase { theta } => format!("one_phase({theta})"),
            Preset::AllOnes => "all_ones".into(),
            Preset::Empty => "empty".into(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(a_minus: f64) -> ModelParams {
        ModelParams::new(a_minus, 1.0, 20, 1.0, 0.1, 7).unwrap()
    }

    #[test]
    fn one_sided_full_profile() {
        let c = sample_initial(&Profile::step(0.0, 1.0), &params(1.0), ProcessKind::BoundaryFrame).unwrap();
        let Configuration::Frame(f) = c else { panic!() };
        assert!((f.lo()..=0).all(|x| f.at(x) == 0));
        assert!((1..=f.hi()).all(|x| f.at(x) == 1));
        assert_eq!((f.lo(), f.hi()), (-20, 20));
    }

    #[test]
    fn zero_profile_is_empty() {
        let c = sample_initial(&Profile::Constant(0.0), &params(1.0), ProcessKind::SigmaEta).unwrap();
        assert_eq!(c.particle_count(), 0);
        let Configuration::TwoPhase(tp) = c else { panic!() };
        assert_eq!(tp.b(), 0);
    }

    #[test]
    fn sign_and_bound_violations_are_rejected() {
        let p = params(1.0);
        for bad in [Profile::step(0.5, 0.5), Profile::step(-0.5, -0.5), Profile::step(-1.5, 0.5)] {
            assert!(matches!(sample_initial(&bad, &p, ProcessKind::BoundaryFrame), Err(Error::Profile(_))));
        }
        // a_minus = 0 requires an empty solid side
        let r = sample_initial(&Profile::step(-0.5, 0.5), &params(0.0), ProcessKind::BoundaryFrame);
        assert!(matches!(r, Err(Error::Profile(_))));
        let r = sample_initial(&Profile::Constant(1.2), &p, ProcessKind::Absorbed { b_rate: 1.0 });
        assert!(matches!(r, Err(Error::Profile(_))));
    }

    #[test]
    fn sampling_is_deterministic_in_the_seed() {
        let p = params(1.0);
        let pr = Profile::step(-0.5, 0.5);
        let a = sample_initial(&pr, &p, ProcessKind::BoundaryFrame).unwrap();
        let b = sample_initial(&pr, &p, ProcessKind::BoundaryFrame).unwrap();
        assert_eq!(a, b);
        let c = sample_initial(&pr, &ModelParams { seed: 8, ..p }, ProcessKind::BoundaryFrame).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn step_cell_average_is_exact() {
        let p = Profile::step(-0.6, 1.0);
        assert_eq!(p.cell_average(-1.0, -0.5, |v| v), -0.6);
        assert!((p.cell_average(-0.25, 0.75, |v| v) - (0.75 - 0.15)).abs() < 1e-15);
    }
}
