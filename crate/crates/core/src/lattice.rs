//! Configurations of the annihilating two-phase exclusion process and the
//! exact transition rules of its four variants.
//!
//! Sites carry a heat unit (`eta`, occupancy) and, in the fixed frame, a
//! phase label `sigma` that is `-1` up to the boundary `b` and `+1` beyond
//! it. In the boundary frame the interface always sits on the bond `(0, 1)`
//! and the window of observed sites moves when a single annihilation
//! translates the configuration.
//!
//! All operations here are pure value transformations; the simulation
//! engine keeps its own incremental representation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rates and scales shared by the microscopic and macroscopic models.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Conduction rate of the solid phase, `a_{-1} >= 0`.
    pub a_minus: f64,
    /// Conduction rate of the liquid phase, `a_1 > 0`.
    pub a_plus: f64,
    /// Diffusive scaling parameter.
    pub n: u32,
    /// Macroscopic half-width of the simulated window.
    pub l: f64,
    /// Macroscopic time horizon.
    pub t: f64,
    pub seed: u64,
}

impl ModelParams {
    pub fn new(a_minus: f64, a_plus: f64, n: u32, l: f64, t: f64, seed: u64) -> Result<Self> {
        let p = ModelParams { a_minus, a_plus, n, l, t, seed };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field, reason: &str| Err(Error::Parameter { field, reason: reason.to_string() });
        if !(self.a_plus > 0.0 && self.a_plus.is_finite()) {
            return bad("a_plus", "must be finite and > 0");
        }
        if !(self.a_minus >= 0.0 && self.a_minus.is_finite()) {
            return bad("a_minus", "must be finite and >= 0");
        }
        if self.n == 0 {
            return bad("n", "must be >= 1");
        }
        if !(self.l > 0.0 && self.l.is_finite()) {
            return bad("l", "must be finite and > 0");
        }
        if !(self.t > 0.0 && self.t.is_finite()) {
            return bad("t", "must be finite and > 0");
        }
        Ok(())
    }

    /// `ceil(L N)`: the window in lattice units is `[-M, M]`.
    pub fn half_width(&self) -> i64 {
        (self.l * self.n as f64).ceil() as i64
    }

    pub fn a_max(&self) -> f64 {
        self.a_minus.max(self.a_plus)
    }
}

/// Selects the generator driving a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProcessKind {
    /// The `(sigma, eta)` chain in the fixed frame.
    SigmaEta,
    /// The same chain viewed from the boundary (translations on single deaths).
    BoundaryFrame,
    /// Boundary-frame dynamics without translation.
    Comparison,
    /// Exclusion on `Z_+` at rate `b_rate` with removal at the origin at rate 1.
    Absorbed { b_rate: f64 },
}

impl ProcessKind {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ProcessKind::Absorbed { b_rate } if !(b_rate > 0.0 && b_rate.is_finite()) => {
                Err(Error::Parameter { field: "b_rate", reason: "must be finite and > 0".into() })
            }
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ProcessKind::SigmaEta => "sigma_eta",
            ProcessKind::BoundaryFrame => "boundary_frame",
            ProcessKind::Comparison => "comparison",
            ProcessKind::Absorbed { .. } => "absorbed",
        }
    }

    /// Whether a single boundary death translates the configuration.
    pub fn translates(&self) -> bool {
        matches!(self, ProcessKind::SigmaEta | ProcessKind::BoundaryFrame)
    }
}

/// A single transition of one of the generators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Event {
    /// Exchange of occupancies across the bond `(x, x + 1)`.
    Exchange(i64),
    /// Annihilation at the interface bond.
    Boundary,
    /// Removal of the particle at the origin (absorbed process only).
    Removal,
}

impl Event {
    /// Image under the reflection `x -> 1 - x`.
    pub fn mirror(self) -> Event {
        match self {
            Event::Exchange(x) => Event::Exchange(-x),
            e => e,
        }
    }
}

/// Number of particles removed on each side by one boundary event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Deaths {
    pub minus: u64,
    pub plus: u64,
}

/// Finite window of the `(sigma, eta)` chain.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TwoPhaseConfig {
    lo: i64,
    sigma: Vec<i8>,
    eta: Vec<u8>,
    b: i64,
}

impl TwoPhaseConfig {
    /// Builds a configuration from explicit labels, checking monotonicity of
    /// `sigma` and that `eta` is 0/1.
    pub fn from_parts(lo: i64, sigma: Vec<i8>, eta: Vec<u8>) -> Result<Self> {
        if sigma.len() != eta.len() || sigma.is_empty() {
            return Err(Error::Invariant("sigma and eta must be nonempty and of equal length".into()));
        }
        if eta.iter().any(|&e| e > 1) {
            return Err(Error::Invariant("eta values must be 0 or 1".into()));
        }
        if sigma.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::Invariant("sigma values must be -1 or +1".into()));
        }
        let minus = sigma.iter().take_while(|&&s| s == -1).count();
        if sigma[minus..].contains(&-1) {
            return Err(Error::Invariant("sigma is not monotone".into()));
        }
        let b = lo + minus as i64 - 1;
        Ok(TwoPhaseConfig { lo, sigma, eta, b })
    }

    /// Step phase labels at `b` with the given heat units.
    pub fn with_boundary(lo: i64, eta: Vec<u8>, b: i64) -> Result<Self> {
        let sigma = (0..eta.len() as i64).map(|i| if lo + i <= b { -1 } else { 1 }).collect();
        Self::from_parts(lo, sigma, eta)
    }

    pub fn lo(&self) -> i64 {
        self.lo
    }
    pub fn hi(&self) -> i64 {
        self.lo + self.eta.len() as i64 - 1
    }
    pub fn b(&self) -> i64 {
        self.b
    }
    pub fn sigma(&self) -> &[i8] {
        &self.sigma
    }
    pub fn eta(&self) -> &[u8] {
        &self.eta
    }

    pub fn eta_at(&self, x: i64) -> u8 {
        self.index(x).map_or(0, |i| self.eta[i])
    }

    pub fn sigma_at(&self, x: i64) -> i8 {
        if x <= self.b {
            -1
        } else {
            1
        }
    }

    fn index(&self, x: i64) -> Option<usize> {
        (x >= self.lo && x <= self.hi()).then(|| (x - self.lo) as usize)
    }

    pub fn particle_count(&self) -> u64 {
        self.eta.iter().map(|&e| e as u64).sum()
    }

    /// Exchange of heat units across `(x, x + 1)`.
    pub fn exchange(&self, x: i64) -> Result<Self> {
        let mut c = self.clone();
        let (i, j) = bond_indices(x, self.lo, self.hi())?;
        c.eta.swap(i, j);
        Ok(c)
    }

    /// The interface transition `T^{b, b+1}`.
    pub fn annihilate(&self) -> Result<(Self, Deaths)> {
        let (i, j) = bond_indices(self.b, self.lo, self.hi())?;
        let mut c = self.clone();
        let d = match (self.eta[i], self.eta[j]) {
            (0, 0) => return Err(Error::NoBoundaryEvent),
            (1, 1) => Deaths { minus: 1, plus: 1 },
            (0, 1) => {
                // the solid site b turns liquid
                c.sigma[i] = 1;
                c.b -= 1;
                Deaths { minus: 0, plus: 1 }
            }
            _ => {
                c.sigma[j] = -1;
                c.b += 1;
                Deaths { minus: 1, plus: 0 }
            }
        };
        c.eta[i] = 0;
        c.eta[j] = 0;
        Ok((c, d))
    }

    /// The configuration viewed from its boundary: `xi(x) = eta(x + b)`.
    pub fn to_frame(&self) -> Result<FrameConfig> {
        if let Some(pos) = self.sigma.iter().position(|&s| s == 1) {
            if self.sigma[pos..].contains(&-1) {
                return Err(Error::Invariant("sigma is not monotone".into()));
            }
        }
        Ok(FrameConfig {
            lo: self.lo - self.b,
            xi: self.eta.clone(),
            deaths_plus: 0,
            deaths_minus: 0,
        })
    }

    /// Inverse of [`TwoPhaseConfig::to_frame`]: `eta(z) = xi(z - b)`.
    pub fn from_frame(xi: &FrameConfig, b: i64) -> TwoPhaseConfig {
        let lo = xi.lo + b;
        let sigma = (0..xi.xi.len() as i64).map(|i| if lo + i <= b { -1 } else { 1 }).collect();
        TwoPhaseConfig { lo, sigma, eta: xi.xi.clone(), b }
    }
}

/// Occupancies seen from the boundary, with cumulative death counters.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FrameConfig {
    lo: i64,
    xi: Vec<u8>,
    pub deaths_plus: u64,
    pub deaths_minus: u64,
}

impl FrameConfig {
    pub fn new(lo: i64, xi: Vec<u8>) -> Result<Self> {
        if xi.is_empty() {
            return Err(Error::Invariant("empty window".into()));
        }
        if xi.iter().any(|&v| v > 1) {
            return Err(Error::Invariant("occupancies must be 0 or 1".into()));
        }
        Ok(FrameConfig { lo, xi, deaths_plus: 0, deaths_minus: 0 })
    }

    /// Builds a configuration on `[lo, hi]` occupied exactly at `sites`.
    pub fn from_sites(lo: i64, hi: i64, sites: &[i64]) -> Result<Self> {
        if hi < lo {
            return Err(Error::Invariant("empty window".into()));
        }
        let mut xi = vec![0u8; (hi - lo + 1) as usize];
        for &s in sites {
            if s < lo || s > hi {
                return Err(Error::OutOfWindow { x: s, lo, hi });
            }
            xi[(s - lo) as usize] = 1;
        }
        Ok(FrameConfig { lo, xi, deaths_plus: 0, deaths_minus: 0 })
    }

    pub fn lo(&self) -> i64 {
        self.lo
    }
    pub fn hi(&self) -> i64 {
        self.lo + self.xi.len() as i64 - 1
    }
    pub fn xi(&self) -> &[u8] {
        &self.xi
    }

    pub fn at(&self, x: i64) -> u8 {
        if x >= self.lo && x <= self.hi() {
            self.xi[(x - self.lo) as usize]
        } else {
            0
        }
    }

    pub fn occupied_sites(&self) -> Vec<i64> {
        self.xi
            .iter()
            .enumerate()
            .filter(|(_, &v)| v == 1)
            .map(|(i, _)| self.lo + i as i64)
            .collect()
    }

    pub fn particle_count(&self) -> u64 {
        self.xi.iter().map(|&e| e as u64).sum()
    }

    pub fn exchange(&self, x: i64) -> Result<Self> {
        let mut c = self.clone();
        let (i, j) = bond_indices(x, self.lo, self.hi())?;
        c.xi.swap(i, j);
        Ok(c)
    }

    /// The annihilation part of the generator at the bond `(0, 1)`.
    ///
    /// For [`ProcessKind::BoundaryFrame`] a single death translates the
    /// configuration: a death at site 1 applies `tau_{-1}` (content moves one
    /// site to the right, together with the window), a death at site 0
    /// applies `tau_1`. [`ProcessKind::Comparison`] performs the same
    /// removals without translating.
    pub fn boundary_transition(&self, kind: ProcessKind) -> Result<Self> {
        let translate = match kind {
            ProcessKind::BoundaryFrame => true,
            ProcessKind::Comparison => false,
            _ => {
                return Err(Error::Invariant(format!(
                    "boundary_transition is not defined for kind {}",
                    kind.name()
                )))
            }
        };
        let (i0, i1) = bond_indices(0, self.lo, self.hi())?;
        let mut c = self.clone();
        match (self.xi[i0], self.xi[i1]) {
            (0, 0) => return Err(Error::NoBoundaryEvent),
            (1, 1) => {
                c.xi[i0] = 0;
                c.xi[i1] = 0;
                c.deaths_minus += 1;
                c.deaths_plus += 1;
            }
            (0, 1) => {
                c.xi[i1] = 0;
                c.deaths_plus += 1;
                if translate {
                    c.lo += 1;
                }
            }
            _ => {
                c.xi[i0] = 0;
                c.deaths_minus += 1;
                if translate {
                    c.lo -= 1;
                }
            }
        }
        Ok(c)
    }

    /// Removal at the origin for the absorbed process.
    pub fn remove_origin(&self) -> Result<Self> {
        let i = self.index_of(0).ok_or(Error::OutOfWindow { x: 0, lo: self.lo, hi: self.hi() })?;
        if self.xi[i] == 0 {
            return Err(Error::NoBoundaryEvent);
        }
        let mut c = self.clone();
        c.xi[i] = 0;
        c.deaths_plus += 1;
        Ok(c)
    }

    fn index_of(&self, x: i64) -> Option<usize> {
        (x >= self.lo && x <= self.hi()).then(|| (x - self.lo) as usize)
    }

    /// Reflection `x -> 1 - x`; the two death counters swap roles.
    pub fn mirror(&self) -> FrameConfig {
        let mut xi = self.xi.clone();
        xi.reverse();
        FrameConfig {
            lo: 1 - self.hi(),
            xi,
            deaths_plus: self.deaths_minus,
            deaths_minus: self.deaths_plus,
        }
    }
}

/// Either representation of a microscopic state.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Configuration {
    TwoPhase(TwoPhaseConfig),
    Frame(FrameConfig),
}

impl Configuration {
    pub fn particle_count(&self) -> u64 {
        match self {
            Configuration::TwoPhase(c) => c.particle_count(),
            Configuration::Frame(c) => c.particle_count(),
        }
    }

    pub fn lo(&self) -> i64 {
        match self {
            Configuration::TwoPhase(c) => c.lo(),
            Configuration::Frame(c) => c.lo(),
        }
    }

    pub fn hi(&self) -> i64 {
        match self {
            Configuration::TwoPhase(c) => c.hi(),
            Configuration::Frame(c) => c.hi(),
        }
    }

    fn check_kind(&self, kind: ProcessKind) -> Result<()> {
        kind.validate()?;
        let ok = match (self, kind) {
            (Configuration::TwoPhase(_), ProcessKind::SigmaEta) => true,
            (Configuration::Frame(_), ProcessKind::BoundaryFrame | ProcessKind::Comparison) => true,
            (Configuration::Frame(c), ProcessKind::Absorbed { .. }) => c.lo() >= 0,
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Invariant(format!("configuration is not valid for kind {}", kind.name())))
        }
    }

    /// Applies one event of the generator selected by `kind`.
    pub fn apply(&self, kind: ProcessKind, event: Event) -> Result<(Configuration, Deaths)> {
        self.check_kind(kind)?;
        match (self, event) {
            (Configuration::TwoPhase(c), Event::Exchange(x)) => {
                Ok((Configuration::TwoPhase(c.exchange(x)?), Deaths::default()))
            }
            (Configuration::TwoPhase(c), Event::Boundary) => {
                let (c, d) = c.annihilate()?;
                Ok((Configuration::TwoPhase(c), d))
            }
            (Configuration::Frame(c), Event::Exchange(x)) => {
                Ok((Configuration::Frame(c.exchange(x)?), Deaths::default()))
            }
            (Configuration::Frame(c), Event::Boundary) if !matches!(kind, ProcessKind::Absorbed { .. }) => {
                let n = c.boundary_transition(kind)?;
                let d = Deaths {
                    minus: n.deaths_minus - c.deaths_minus,
                    plus: n.deaths_plus - c.deaths_plus,
                };
                Ok((Configuration::Frame(n), d))
            }
            (Configuration::Frame(c), Event::Removal) if matches!(kind, ProcessKind::Absorbed { .. }) => {
                Ok((Configuration::Frame(c.remove_origin()?), Deaths { minus: 0, plus: 1 }))
            }
            _ => Err(Error::Invariant(format!("event {event:?} is not defined for kind {}", kind.name()))),
        }
    }
}

fn bond_indices(x: i64, lo: i64, hi: i64) -> Result<(usize, usize)> {
    if x < lo || x + 1 > hi {
        return Err(Error::OutOfWindow { x, lo, hi });
    }
    let i = (x - lo) as usize;
    Ok((i, i + 1))
}

/// Every transition available from `config` with its unscaled rate.
///
/// Exchanges across bonds with equal occupancies are omitted, as are
/// transitions whose rate is zero. Bonds are listed left to right, followed
/// by the boundary (or removal) event.
pub fn rate_table(config: &Configuration, kind: ProcessKind, params: &ModelParams) -> Result<Vec<(Event, f64)>> {
    config.check_kind(kind)?;
    let mut out = Vec::new();
    let push = |out: &mut Vec<(Event, f64)>, e: Event, r: f64| {
        if r > 0.0 {
            out.push((e, r));
        }
    };
    match (config, kind) {
        (Configuration::TwoPhase(c), _) => {
            let mut boundary = None;
            for x in c.lo()..c.hi() {
                let (l, r) = (c.eta_at(x), c.eta_at(x + 1));
                if x == c.b() {
                    if l + r > 0 {
                        boundary = Some((Event::Boundary, 1.0));
                    }
                } else if l != r {
                    let rate = if c.sigma_at(x) == -1 { params.a_minus } else { params.a_plus };
                    push(&mut out, Event::Exchange(x), rate);
                }
            }
            out.extend(boundary);
        }
        (Configuration::Frame(c), ProcessKind::Absorbed { b_rate }) => {
            for x in c.lo()..c.hi() {
                if c.at(x) != c.at(x + 1) {
                    push(&mut out, Event::Exchange(x), b_rate);
                }
            }
            if c.at(0) == 1 {
                out.push((Event::Removal, 1.0));
            }
        }
        (Configuration::Frame(c), _) => {
            let mut boundary = None;
            for x in c.lo()..c.hi() {
                let (l, r) = (c.at(x), c.at(x + 1));
                if x == 0 {
                    if l + r > 0 {
                        boundary = Some((Event::Boundary, 1.0));
                    }
                } else if l != r {
                    let rate = if x < 0 { params.a_minus } else { params.a_plus };
                    push(&mut out, Event::Exchange(x), rate);
                }
            }
            out.extend(boundary);
        }
    }
    Ok(out)
}
