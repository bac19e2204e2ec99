//! Exact continuous-time simulation of the four process variants under
//! diffusive (`N^2`) acceleration.
//!
//! The chain is stored on a fixed array of sites together with the index of
//! the current boundary site. A translation of the boundary frame is then a
//! one-step move of that index, so the fixed-frame and boundary-frame views
//! of one run are both available at every sample time.
//!
//! Active exchange bonds are kept in one swap-remove set per rate class
//! (solid side, liquid side). Since every bond of a class has the same rate,
//! the total rate is an exact integer combination of class sizes and an
//! event is selected in `O(1)` from a single uniform draw.

pub mod observables;
pub mod profile;
pub mod record;
pub mod rng;

use rand::Rng;

use crate::error::{Error, Result};
use crate::lattice::{Configuration, FrameConfig, ModelParams, ProcessKind, TwoPhaseConfig};
use observables::{BlockLayout, SharedTestFunction};
pub use observables::{block_density, empirical_pairing, SmoothBump, TestFunction};
pub use profile::{sample_initial, Preset, Profile};
pub use record::TrajectoryRecord;

/// What to record at each sample time besides the death counters.
#[derive(Clone, Debug)]
pub struct Observables {
    pub test_functions: Vec<SharedTestFunction>,
    /// Block width in lattice sites.
    pub block_width: i64,
}

impl Observables {
    pub fn new(block_width: i64) -> Self {
        Observables { test_functions: Vec::new(), block_width: block_width.max(1) }
    }

    pub fn with_test_function(mut self, g: SharedTestFunction) -> Self {
        self.test_functions.push(g);
        self
    }
}

const NO_SLOT: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Pick {
    Exchange(usize),
    Boundary,
}
const NO_CLASS: u8 = u8::MAX;

/// Incremental state of one chain.
#[derive(Debug, Clone)]
pub(crate) struct Chain {
    pub(crate) occ: Vec<u8>,
    /// Fixed-frame coordinate of index 0.
    pub(crate) lab_lo: i64,
    /// Index of the boundary site (frame origin).
    pub(crate) bi: i64,
    translates: bool,
    absorbed: bool,
    pub(crate) rates: [f64; 2],
    sets: [Vec<u32>; 2],
    slot: Vec<u32>,
    cls: Vec<u8>,
    pub(crate) boundary_active: bool,
    pub(crate) deaths_plus: u64,
    pub(crate) deaths_minus: u64,
    pub(crate) particles: u64,
    base_deaths: (u64, u64),
    kind: ProcessKind,
}

impl Chain {
    pub(crate) fn new(config: &Configuration, kind: ProcessKind, params: &ModelParams) -> Result<Self> {
        kind.validate()?;
        let (occ, lab_lo, bi, base) = match (config, kind) {
            (Configuration::TwoPhase(c), ProcessKind::SigmaEta) => (c.eta().to_vec(), c.lo(), c.b() - c.lo(), (0, 0)),
            (Configuration::Frame(c), ProcessKind::BoundaryFrame | ProcessKind::Comparison) => {
                (c.xi().to_vec(), c.lo(), -c.lo(), (c.deaths_plus, c.deaths_minus))
            }
            (Configuration::Frame(c), ProcessKind::Absorbed { .. }) if c.lo() >= 0 => {
                (c.xi().to_vec(), c.lo(), -c.lo(), (c.deaths_plus, c.deaths_minus))
            }
            _ => return Err(Error::Invariant(format!("configuration is not valid for kind {}", kind.name()))),
        };
        if occ.len() < 2 {
            return Err(Error::Simulation("window must contain at least two sites".into()));
        }
        let rates = match kind {
            ProcessKind::Absorbed { b_rate } => [b_rate, 0.0],
            _ => [params.a_minus, params.a_plus],
        };
        let nb = occ.len() - 1;
        let particles = occ.iter().map(|&v| v as u64).sum();
        let mut chain = Chain {
            occ,
            lab_lo,
            bi,
            translates: kind.translates(),
            absorbed: matches!(kind, ProcessKind::Absorbed { .. }),
            rates,
            sets: [Vec::new(), Vec::new()],
            slot: vec![NO_SLOT; nb],
            cls: vec![NO_CLASS; nb],
            boundary_active: false,
            deaths_plus: 0,
            deaths_minus: 0,
            particles,
            base_deaths: base,
            kind,
        };
        for j in 0..nb as i64 {
            chain.refresh(j);
        }
        chain.refresh_boundary();
        Ok(chain)
    }

    #[inline]
    fn nb(&self) -> usize {
        self.slot.len()
    }

    #[inline]
    fn class_of(&self, j: usize) -> u8 {
        if self.absorbed || (j as i64) < self.bi {
            0
        } else if j as i64 > self.bi {
            1
        } else {
            NO_CLASS
        }
    }

    #[inline]
    pub(crate) fn refresh(&mut self, j: i64) {
        if j < 0 || j >= self.nb() as i64 {
            return;
        }
        let j = j as usize;
        let want = if self.occ[j] != self.occ[j + 1] { self.class_of(j) } else { NO_CLASS };
        let have = self.cls[j];
        if want == have {
            return;
        }
        if have != NO_CLASS {
            let set = &mut self.sets[have as usize];
            let s = self.slot[j] as usize;
            let last = set.pop().expect("nonempty class set");
            if last as usize != j {
                set[s] = last;
                self.slot[last as usize] = s as u32;
            }
            self.slot[j] = NO_SLOT;
        }
        if want != NO_CLASS {
            let set = &mut self.sets[want as usize];
            self.slot[j] = set.len() as u32;
            set.push(j as u32);
        }
        self.cls[j] = want;
    }

    #[inline]
    pub(crate) fn refresh_boundary(&mut self) {
        let n = self.occ.len() as i64;
        self.boundary_active = if self.absorbed {
            self.bi >= 0 && self.bi < n && self.occ[self.bi as usize] == 1
        } else {
            self.bi >= 0 && self.bi + 1 < n && (self.occ[self.bi as usize] | self.occ[self.bi as usize + 1]) != 0
        };
    }

    /// Unscaled total rate.
    #[inline]
    pub(crate) fn total_rate(&self) -> f64 {
        self.sets[0].len() as f64 * self.rates[0]
            + self.sets[1].len() as f64 * self.rates[1]
            + if self.boundary_active { 1.0 } else { 0.0 }
    }

    #[cfg(test)]
    pub(crate) fn class_len(&self, c: usize) -> usize {
        self.sets[c].len()
    }

    #[cfg(test)]
    pub(crate) fn class_member(&self, c: usize, i: usize) -> usize {
        self.sets[c][i] as usize
    }

    /// Locates the event at `v` in `[0, total_rate)`.
    #[inline]
    pub(crate) fn pick(&self, mut v: f64) -> Pick {
        let w0 = self.sets[0].len() as f64 * self.rates[0];
        if v < w0 {
            let i = ((v / self.rates[0]) as usize).min(self.sets[0].len() - 1);
            return Pick::Exchange(self.sets[0][i] as usize);
        }
        v -= w0;
        let w1 = self.sets[1].len() as f64 * self.rates[1];
        if v < w1 || (!self.boundary_active && w1 > 0.0) {
            let i = ((v / self.rates[1]) as usize).min(self.sets[1].len() - 1);
            return Pick::Exchange(self.sets[1][i] as usize);
        }
        if self.boundary_active {
            Pick::Boundary
        } else {
            Pick::Exchange(*self.sets[0].last().expect("class 0 nonempty") as usize)
        }
    }

    #[inline]
    pub(crate) fn fire(&mut self, v: f64) {
        match self.pick(v) {
            Pick::Exchange(j) => self.exchange(j),
            Pick::Boundary => {
                self.boundary();
            }
        }
    }

    /// Rate of bond `j` if it is an active exchange bond, else 0.
    #[inline]
    pub(crate) fn bond_rate(&self, j: usize) -> f64 {
        match self.cls.get(j) {
            Some(&c) if c != NO_CLASS => self.rates[c as usize],
            _ => 0.0,
        }
    }

    pub(crate) fn is_boundary_bond(&self, j: i64) -> bool {
        !self.absorbed && j == self.bi
    }

    pub(crate) fn window_len(&self) -> usize {
        self.occ.len()
    }

    #[inline]
    pub(crate) fn exchange(&mut self, j: usize) {
        self.occ[j] ^= 1;
        self.occ[j + 1] ^= 1;
        self.refresh(j as i64 - 1);
        self.refresh(j as i64 + 1);
        self.refresh_boundary();
    }

    /// Boundary annihilation (or removal at the origin for the absorbed chain).
    pub(crate) fn boundary(&mut self) -> (u64, u64) {
        let b = self.bi;
        let i = b as usize;
        let (dm, dp) = if self.absorbed {
            self.occ[i] = 0;
            (0, 1)
        } else {
            match (self.occ[i], self.occ[i + 1]) {
                (1, 1) => {
                    self.occ[i] = 0;
                    self.occ[i + 1] = 0;
                    (1, 1)
                }
                (0, 1) => {
                    self.occ[i + 1] = 0;
                    if self.translates {
                        self.bi -= 1;
                    }
                    (0, 1)
                }
                (1, 0) => {
                    self.occ[i] = 0;
                    if self.translates {
                        self.bi += 1;
                    }
                    (1, 0)
                }
                _ => (0, 0),
            }
        };
        self.deaths_minus += dm;
        self.deaths_plus += dp;
        self.particles -= dm + dp;
        for j in b - 2..=b + 2 {
            self.refresh(j);
        }
        self.refresh_boundary();
        (dm, dp)
    }

    /// Fixed-frame position of the boundary site.
    pub(crate) fn lab_b(&self) -> i64 {
        self.lab_lo + self.bi
    }

    pub(crate) fn configuration(&self) -> Configuration {
        match self.kind {
            ProcessKind::SigmaEta => Configuration::TwoPhase(
                TwoPhaseConfig::with_boundary(self.lab_lo, self.occ.clone(), self.lab_b()).expect("valid two-phase state"),
            ),
            _ => {
                let mut f = FrameConfig::new(-self.bi, self.occ.clone()).expect("valid frame state");
                f.deaths_plus = self.base_deaths.0 + self.deaths_plus;
                f.deaths_minus = self.base_deaths.1 + self.deaths_minus;
                Configuration::Frame(f)
            }
        }
    }

    #[inline]
    fn sign(&self, i: usize) -> f64 {
        if !self.absorbed && (i as i64) <= self.bi {
            -1.0
        } else {
            1.0
        }
    }
}

pub(crate) struct Recorder<'a> {
    obs: &'a Observables,
    n: u32,
    lab_layout: BlockLayout,
    frame_layout: BlockLayout,
    initial_edges: Option<(f64, f64)>,
    pub(crate) rec: TrajectoryRecord,
}

impl<'a> Recorder<'a> {
    pub(crate) fn new(chain: &Chain, obs: &'a Observables, params: &ModelParams, times: &[f64]) -> Self {
        let n = chain.occ.len() as i64;
        let lab_layout = BlockLayout::new(chain.lab_lo, chain.lab_lo + n - 1, obs.block_width);
        let frame_layout = BlockLayout::new(-chain.bi, -chain.bi + n - 1, obs.block_width);
        let rec = TrajectoryRecord {
            kind: chain.kind,
            n: params.n,
            seed: params.seed,
            sample_times: times.to_vec(),
            pairings: obs.test_functions.iter().map(|g| (g.id().to_string(), Vec::new())).collect(),
            block_centers: lab_layout.centers(params.n),
            block_density: Vec::new(),
            frame_block_centers: frame_layout.centers(params.n),
            frame_block_density: Vec::new(),
            d_plus: Vec::new(),
            d_minus: Vec::new(),
            b_path: Vec::new(),
            deaths_plus: Vec::new(),
            deaths_minus: Vec::new(),
            particles: Vec::new(),
            initial_particles: chain.particles,
            edge_deviation: 0.0,
            events: 0,
            final_state: None,
        };
        Recorder { obs, n: params.n, lab_layout, frame_layout, initial_edges: None, rec }
    }

    pub(crate) fn record(&mut self, chain: &Chain, k: usize) {
        let nf = self.n as f64;
        let t = self.rec.sample_times[k];
        let native_frame = chain.kind != ProcessKind::SigmaEta;
        for (g, (_, vals)) in self.obs.test_functions.iter().zip(self.rec.pairings.iter_mut()) {
            let mut s = 0.0;
            for (i, &o) in chain.occ.iter().enumerate() {
                if o == 1 {
                    let x = if native_frame { i as i64 - chain.bi } else { chain.lab_lo + i as i64 };
                    s += chain.sign(i) * g.value(t, x as f64 / nf);
                }
            }
            vals.push(s / nf);
        }
        let w = self.obs.block_width;
        let site = |x_index: i64| -> f64 {
            if x_index < 0 || x_index >= chain.occ.len() as i64 {
                0.0
            } else {
                let i = x_index as usize;
                chain.sign(i) * chain.occ[i] as f64
            }
        };
        // `+ 0.0` turns the -0 of an empty solid block into 0
        let lab: Vec<f64> = (0..self.lab_layout.count)
            .map(|b| {
                let s = self.lab_layout.start(b) - chain.lab_lo;
                (s..s + w).map(site).sum::<f64>() / w as f64 + 0.0
            })
            .collect();
        let frame: Vec<f64> = (0..self.frame_layout.count)
            .map(|b| {
                let s = self.frame_layout.start(b) + chain.bi;
                (s..s + w).map(site).sum::<f64>() / w as f64 + 0.0
            })
            .collect();
        if let (Some(first), Some(last)) = (lab.first(), lab.last()) {
            match self.initial_edges {
                None => self.initial_edges = Some((*first, *last)),
                Some((f0, l0)) => {
                    let dev = (first - f0).abs().max((last - l0).abs());
                    self.rec.edge_deviation = self.rec.edge_deviation.max(dev);
                }
            }
        }
        self.rec.block_density.push(lab);
        self.rec.frame_block_density.push(frame);
        self.rec.d_plus.push(chain.deaths_plus as f64 / nf);
        self.rec.d_minus.push(chain.deaths_minus as f64 / nf);
        let b = if chain.translates { chain.lab_b() as f64 / nf } else { 0.0 };
        self.rec.b_path.push(b);
        self.rec.deaths_plus.push(chain.deaths_plus);
        self.rec.deaths_minus.push(chain.deaths_minus);
        self.rec.particles.push(chain.particles);
    }
}

pub(crate) fn check_times(times: &[f64], horizon: f64) -> Result<()> {
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Parameter { field: "sample_times", reason: "must be nondecreasing".into() });
    }
    if times.iter().any(|&t| !(t >= 0.0 && t <= horizon * (1.0 + 1e-12))) {
        return Err(Error::Parameter { field: "sample_times", reason: format!("must lie in [0, {horizon}]") });
    }
    Ok(())
}

/// Runs the chain selected by `kind` from `initial` up to the last sample
/// time, recording observables at the state in force at each sample time.
///
/// The dynamics draws from the dynamics stream of `params.seed`; the same
/// inputs always produce a bit-identical record.
pub fn simulate(
    initial: &Configuration,
    kind: ProcessKind,
    params: &ModelParams,
    sample_times: &[f64],
    obs: &Observables,
) -> Result<TrajectoryRecord> {
    params.validate()?;
    check_times(sample_times, params.t)?;
    let mut chain = Chain::new(initial, kind, params)?;
    let mut rng = rng::stream(params.seed, rng::DYNAMICS_STREAM);
    let n2 = (params.n as f64).powi(2);
    let mut recorder = Recorder::new(&chain, obs, params, sample_times);
    let mut t = 0.0;
    let mut k = 0;
    let mut events = 0u64;
    while k < sample_times.len() {
        let total = chain.total_rate();
        if total <= 0.0 {
            break;
        }
        let rate = n2 * total;
        if !rate.is_finite() {
            return Err(Error::Simulation(format!("total rate overflow: {rate}")));
        }
        let u: f64 = rng.random();
        t += -(1.0 - u).ln() / rate;
        while k < sample_times.len() && sample_times[k] < t {
            recorder.record(&chain, k);
            k += 1;
        }
        if k == sample_times.len() {
            break;
        }
        let v: f64 = rng.random::<f64>() * total;
        chain.fire(v);
        events += 1;
    }
    while k < sample_times.len() {
        recorder.record(&chain, k);
        k += 1;
    }
    let mut rec = recorder.rec;
    rec.events = events;
    rec.final_state = Some(chain.configuration());
    Ok(rec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{rate_table, Event};
    use rand::SeedableRng;
    use std::sync::Arc;

    fn params(n: u32, t: f64, seed: u64) -> ModelParams {
        ModelParams::new(0.7, 1.3, n, 1.0, t, seed).unwrap()
    }

    fn chain_table(chain: &Chain) -> Vec<(Event, f64)> {
        let cfg = chain.configuration();
        let mut out = Vec::new();
        for c in 0..2 {
            for i in 0..chain.class_len(c) {
                let j = chain.class_member(c, i) as i64;
                let x = match &cfg {
                    Configuration::TwoPhase(_) => chain.lab_lo + j,
                    Configuration::Frame(_) => j - chain.bi,
                };
                if chain.rates[c] > 0.0 {
                    out.push((Event::Exchange(x), chain.rates[c]));
                }
            }
        }
        if chain.boundary_active {
            let e = if chain.absorbed { Event::Removal } else { Event::Boundary };
            out.push((e, 1.0));
        }
        out.sort_by(|a, b| a.0.cmp(&b.0));
        out
    }

    #[test]
    fn incremental_sets_match_rate_table() {
        let p = params(6, 1.0, 3);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for kind in [ProcessKind::SigmaEta, ProcessKind::BoundaryFrame, ProcessKind::Comparison, ProcessKind::Absorbed { b_rate: 0.9 }] {
            let profile = match kind {
                ProcessKind::Absorbed { .. } => Profile::Constant(0.6),
                _ => Profile::step(-0.6, 0.6),
            };
            let init = sample_initial(&profile, &ModelParams { seed: 5, ..p }, kind).unwrap();
            let mut chain = Chain::new(&init, kind, &p).unwrap();
            for _ in 0..400 {
                let mut expected = rate_table(&chain.configuration(), kind, &p).unwrap();
                expected.sort_by(|a, b| a.0.cmp(&b.0));
                assert_eq!(chain_table(&chain), expected, "{kind:?}");
                let total = chain.total_rate();
                if total == 0.0 {
                    break;
                }
                chain.fire(rng.random::<f64>() * total);
                assert_eq!(chain.configuration().particle_count(), chain.particles);
            }
        }
    }

    #[test]
    fn empty_configuration_gives_zero_record() {
        let p = params(10, 0.5, 1);
        let init = sample_initial(&Profile::Constant(0.0), &p, ProcessKind::BoundaryFrame).unwrap();
        let g: SharedTestFunction = Arc::new(SmoothBump::spatial("g", 0.2, 0.5, 1.0));
        let rec = simulate(&init, ProcessKind::BoundaryFrame, &p, &[0.0, 0.25, 0.5], &Observables::new(2).with_test_function(g)).unwrap();
        assert_eq!(rec.events, 0);
        assert!(rec.d_plus.iter().chain(&rec.d_minus).chain(&rec.b_path).all(|&v| v == 0.0));
        assert!(rec.pairings[0].1.iter().all(|&v| v == 0.0));
        assert!(rec.block_density.iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn boundary_identity_and_ledger() {
        let p = params(30, 0.2, 9);
        for kind in [ProcessKind::BoundaryFrame, ProcessKind::SigmaEta] {
            let init = sample_initial(&Profile::step(-0.7, 0.9), &p, kind).unwrap();
            let times: Vec<f64> = (0..=20).map(|i| 0.01 * i as f64).collect();
            let rec = simulate(&init, kind, &p, &times, &Observables::new(3)).unwrap();
            assert!(rec.events > 0);
            for k in 0..times.len() {
                let diff = rec.deaths_minus[k] as i64 - rec.deaths_plus[k] as i64;
                assert_eq!((rec.b_path[k] * 30.0).round() as i64, diff);
                assert_eq!(rec.b_path[k], diff as f64 / 30.0);
                assert_eq!(rec.particles[k] + rec.deaths_plus[k] + rec.deaths_minus[k], rec.initial_particles);
                if k > 0 {
                    assert!(rec.d_plus[k] >= rec.d_plus[k - 1] && rec.d_minus[k] >= rec.d_minus[k - 1]);
                }
            }
        }
    }

    #[test]
    fn simulation_is_deterministic() {
        let p = params(20, 0.1, 4);
        let init = sample_initial(&Profile::step(-0.5, 0.5), &p, ProcessKind::BoundaryFrame).unwrap();
        let obs = Observables::new(4).with_test_function(Arc::new(SmoothBump::spatial("g", 0.0, 0.5, 1.0)));
        let a = simulate(&init, ProcessKind::BoundaryFrame, &p, &[0.05, 0.1], &obs).unwrap();
        let b = simulate(&init, ProcessKind::BoundaryFrame, &p, &[0.05, 0.1], &obs).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_csv(), b.to_csv());
        let c = simulate(&init, ProcessKind::BoundaryFrame, &ModelParams { seed: 5, ..p }, &[0.05, 0.1], &obs).unwrap();
        assert_ne!(a.events, c.events);
    }

    #[test]
    fn frame_and_lab_views_agree() {
        // the fixed-frame record of a boundary-frame run matches a sigma-eta run from the same sites
        let p = params(25, 0.05, 12);
        let f = sample_initial(&Profile::step(-0.8, 0.4), &p, ProcessKind::BoundaryFrame).unwrap();
        let Configuration::Frame(fc) = &f else { panic!() };
        let tp = Configuration::TwoPhase(TwoPhaseConfig::from_frame(fc, 0));
        let obs = Observables::new(5);
        let a = simulate(&f, ProcessKind::BoundaryFrame, &p, &[0.02, 0.05], &obs).unwrap();
        let b = simulate(&tp, ProcessKind::SigmaEta, &p, &[0.02, 0.05], &obs).unwrap();
        assert_eq!(a.block_density, b.block_density);
        assert_eq!(a.frame_block_density, b.frame_block_density);
        assert_eq!(a.b_path, b.b_path);
        let (Some(Configuration::Frame(fa)), Some(Configuration::TwoPhase(tb))) = (&a.final_state, &b.final_state) else {
            panic!()
        };
        assert_eq!(TwoPhaseConfig::from_frame(fa, tb.b()), *tb);
    }

    #[test]
    fn rejects_bad_sample_times() {
        let p = params(5, 0.1, 1);
        let init = sample_initial(&Profile::Constant(0.0), &p, ProcessKind::Comparison).unwrap();
        assert!(simulate(&init, ProcessKind::Comparison, &p, &[0.05, 0.01], &Observables::new(1)).is_err());
        assert!(simulate(&init, ProcessKind::Comparison, &p, &[0.2], &Observables::new(1)).is_err());
    }
}
