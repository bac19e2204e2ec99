//! Test functions, signed empirical pairings and block densities.

use std::fmt;
use std::sync::Arc;

use crate::lattice::Configuration;

/// A compactly supported `C^{1,2}` function `G(t, u)` with closed-form
/// derivatives.
pub trait TestFunction: Send + Sync {
    fn id(&self) -> &str;
    fn value(&self, t: f64, u: f64) -> f64;
    fn du(&self, t: f64, u: f64) -> f64;
    fn dt(&self, t: f64, u: f64) -> f64;
    fn laplacian(&self, t: f64, u: f64) -> f64;
    /// Spatial support `[lo, hi]`.
    fn support(&self) -> (f64, f64);
    /// Temporal support; `None` for time-independent functions.
    fn time_support(&self) -> Option<(f64, f64)>;
}

impl fmt::Debug for dyn TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TestFunction({})", self.id())
    }
}

/// `A psi((u - c) / r) phi(t)` with `psi(s) = (1 - s^2)^4` and, when a time
/// window is given, `phi(t) = (1 - q^2)^3` with `q = (t - t_c) / tau`.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothBump {
    pub id: String,
    pub center: f64,
    pub radius: f64,
    pub amplitude: f64,
    /// `(t_c, tau)`.
    pub window: Option<(f64, f64)>,
}

impl SmoothBump {
    pub fn spatial(id: &str, center: f64, radius: f64, amplitude: f64) -> Self {
        SmoothBump { id: id.to_string(), center, radius, amplitude, window: None }
    }

    pub fn space_time(id: &str, center: f64, radius: f64, amplitude: f64, t_center: f64, t_radius: f64) -> Self {
        SmoothBump { id: id.to_string(), center, radius, amplitude, window: Some((t_center, t_radius)) }
    }

    fn space(&self, u: f64) -> (f64, f64, f64) {
        let s = (u - self.center) / self.radius;
        if s.abs() >= 1.0 {
            return (0.0, 0.0, 0.0);
        }
        let w = 1.0 - s * s;
        let r = self.radius;
        let v = w.powi(4);
        let d1 = -8.0 * s * w.powi(3) / r;
        let d2 = (-8.0 * w.powi(3) + 48.0 * s * s * w * w) / (r * r);
        (v, d1, d2)
    }

    fn time(&self, t: f64) -> (f64, f64) {
        match self.window {
            None => (1.0, 0.0),
            Some((tc, tau)) => {
                let q = (t - tc) / tau;
                if q.abs() >= 1.0 {
                    return (0.0, 0.0);
                }
                let w = 1.0 - q * q;
                (w.powi(3), -6.0 * q * w * w / tau)
            }
        }
    }
}

impl TestFunction for SmoothBump {
    fn id(&self) -> &str {
        &self.id
    }
    fn value(&self, t: f64, u: f64) -> f64 {
        self.amplitude * self.space(u).0 * self.time(t).0
    }
    fn du(&self, t: f64, u: f64) -> f64 {
        self.amplitude * self.space(u).1 * self.time(t).0
    }
    fn dt(&self, t: f64, u: f64) -> f64 {
        self.amplitude * self.space(u).0 * self.time(t).1
    }
    fn laplacian(&self, t: f64, u: f64) -> f64 {
        self.amplitude * self.space(u).2 * self.time(t).0
    }
    fn support(&self) -> (f64, f64) {
        (self.center - self.radius, self.center + self.radius)
    }
    fn time_support(&self) -> Option<(f64, f64)> {
        self.window.map(|(tc, tau)| (tc - tau, tc + tau))
    }
}

pub type SharedTestFunction = Arc<dyn TestFunction>;

/// `N^{-1} sum_x s(x) occ(x) G(t, x / N)` where `s` is the phase label for
/// fixed-frame configurations and `-1{x <= 0} + 1{x > 0}` in the boundary
/// frame.
pub fn empirical_pairing(config: &Configuration, g: &dyn TestFunction, t: f64, n: u32) -> f64 {
    let nf = n as f64;
    let mut sum = 0.0;
    match config {
        Configuration::TwoPhase(c) => {
            for (i, &e) in c.eta().iter().enumerate() {
                if e == 1 {
                    let x = c.lo() + i as i64;
                    sum += c.sigma_at(x) as f64 * g.value(t, x as f64 / nf);
                }
            }
        }
        Configuration::Frame(c) => {
            for x in c.occupied_sites() {
                let s = if x <= 0 { -1.0 } else { 1.0 };
                sum += s * g.value(t, x as f64 / nf);
            }
        }
    }
    sum / nf
}

/// Fixed layout of blocks `(k w, (k + 1) w]` that fit inside a window.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockLayout {
    pub width: i64,
    /// Block indices `k` in increasing order.
    pub first: i64,
    pub count: usize,
}

impl BlockLayout {
    pub fn new(lo: i64, hi: i64, width: i64) -> Self {
        assert!(width >= 1, "block width must be >= 1");
        // smallest k with k w + 1 >= lo, largest k with (k + 1) w <= hi
        let first = (lo - 1).div_euclid(width) + i64::from((lo - 1).rem_euclid(width) != 0);
        let last = hi.div_euclid(width) - 1;
        let count = if last >= first { (last - first + 1) as usize } else { 0 };
        BlockLayout { width, first, count }
    }

    /// First site of block number `i` of the layout.
    pub fn start(&self, i: usize) -> i64 {
        (self.first + i as i64) * self.width + 1
    }

    pub fn centers(&self, n: u32) -> Vec<f64> {
        (0..self.count)
            .map(|i| (self.start(i) as f64 + (self.width as f64 - 1.0) / 2.0) / n as f64)
            .collect()
    }
}

/// Signed block averages of a configuration in its own coordinates.
///
/// Returns `(centers, densities)` for every complete block `(k w, (k+1) w]`
/// of the window; values lie in `[-1, 1]`.
pub fn block_density(config: &Configuration, n: u32, block_width: i64) -> (Vec<f64>, Vec<f64>) {
    let layout = BlockLayout::new(config.lo(), config.hi(), block_width);
    let site = |x: i64| -> f64 {
        match config {
            Configuration::TwoPhase(c) => c.sigma_at(x) as f64 * c.eta_at(x) as f64,
            Configuration::Frame(c) => {
                let s = if x <= 0 { -1.0 } else { 1.0 };
                s * c.at(x) as f64
            }
        }
    };
    let values = (0..layout.count)
        .map(|i| {
            let s = layout.start(i);
            (s..s + block_width).map(site).sum::<f64>() / block_width as f64 + 0.0
        })
        .collect();
    (layout.centers(n), values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::FrameConfig;
    use proptest::prelude::*;

    #[test]
    fn pairing_trivial_values() {
        let n = 10;
        let g = SmoothBump::spatial("g", 1.0, 0.5, 1.0);
        let empty = Configuration::Frame(FrameConfig::new(-20, vec![0; 41]).unwrap());
        assert_eq!(empirical_pairing(&empty, &g, 0.0, n), 0.0);
        let one = Configuration::Frame(FrameConfig::from_sites(-20, 20, &[10]).unwrap());
        assert!((empirical_pairing(&one, &g, 0.0, n) - 0.1).abs() < 1e-15);
        let h = SmoothBump::spatial("h", 0.0, 0.5, 1.0);
        let origin = Configuration::Frame(FrameConfig::from_sites(-20, 20, &[0]).unwrap());
        assert!((empirical_pairing(&origin, &h, 0.0, n) + h.value(0.0, 0.0) / 10.0).abs() < 1e-15);
    }

    #[test]
    fn block_density_cases() {
        let n = 10;
        let full = Configuration::Frame(FrameConfig::from_sites(-8, 8, &(1..=8).collect::<Vec<_>>()).unwrap());
        let (c, v) = block_density(&full, n, 4);
        assert_eq!(v, vec![0.0, 0.0, 1.0, 1.0]);
        assert_eq!(c, vec![-0.55, -0.15, 0.25, 0.65]);
        let alt = Configuration::Frame(FrameConfig::from_sites(-8, 8, &[1, 3, 5, 7]).unwrap());
        assert_eq!(block_density(&alt, n, 4).1, vec![0.0, 0.0, 0.5, 0.5]);
        let left = Configuration::Frame(FrameConfig::from_sites(-8, 8, &[-3, -2, -1, 0]).unwrap());
        assert_eq!(block_density(&left, n, 4).1, vec![0.0, -1.0, 0.0, 0.0]);
    }

    #[test]
    fn layout_alignment() {
        let l = BlockLayout::new(-10, 10, 3);
        // blocks (-9,-6], (-6,-3], (-3,0], (0,3], (3,6], (6,9]
        assert_eq!((l.first, l.count), (-3, 6));
        assert_eq!(l.start(0), -8);
        let l = BlockLayout::new(0, 7, 4);
        assert_eq!((l.start(0), l.count), (1, 1));
    }

    proptest! {
        #[test]
        fn bump_derivatives_match_finite_differences(
            c in -1.0f64..1.0, r in 0.2f64..1.5, tc in 0.2f64..0.8, tau in 0.05f64..0.2,
            s in -0.95f64..0.95, q in -0.95f64..0.95,
        ) {
            let g = SmoothBump::space_time("g", c, r, 1.3, tc, tau);
            let (t, u) = (tc + q * tau, c + s * r);
            let h = 1e-5;
            let fd_u = (g.value(t, u + h) - g.value(t, u - h)) / (2.0 * h);
            let fd_t = (g.value(t + h * tau, u) - g.value(t - h * tau, u)) / (2.0 * h * tau);
            let hh = 1e-4 * r;
            let fd_uu = (g.value(t, u + hh) - 2.0 * g.value(t, u) + g.value(t, u - hh)) / (hh * hh);
            let close = |a: f64, b: f64, scale: f64| (a - b).abs() <= 1e-6 * scale.max(1.0) + 1e-6 * b.abs().max(a.abs());
            let scale_u = 1.3 * 8.0 / r;
            prop_assert!(close(g.du(t, u), fd_u, scale_u), "du {} vs {}", g.du(t, u), fd_u);
            prop_assert!(close(g.dt(t, u), fd_t, 1.3 * 6.0 / tau), "dt {} vs {}", g.dt(t, u), fd_t);
            prop_assert!((g.laplacian(t, u) - fd_uu).abs() <= 1e-6 * (1.3 * 60.0 / (r * r)) + 1e-4 * fd_uu.abs(),
                "uu {} vs {}", g.laplacian(t, u), fd_uu);
            prop_assert_eq!(g.value(t, c + 1.01 * r), 0.0);
        }
    }
}
