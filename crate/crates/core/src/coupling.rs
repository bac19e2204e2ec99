//! Labelled coupling of the boundary-frame process with its comparison
//! process, which uses the same dynamics without translation.
//!
//! Both systems live on one array of absolute sites. The comparison frame is
//! fixed while the boundary-frame origin moves by one site on every single
//! death, so a label sitting at the same absolute site in both systems is a
//! coupled pair whose frame positions differ by the common `offset`.
//!
//! Clocks are shared in pairs, one pair per absolute bond. Where both
//! systems see an exchange bond the pair is that bond in both systems. Where
//! the two boundaries coincide the pair is the two boundary clocks. Once the
//! boundaries have separated, each boundary bond is paired crosswise with the
//! exchange the other system performs across the same absolute bond. A pair
//! fires jointly at the smaller of the two active rates and in one system
//! alone at the excess, so each marginal is an exact copy of the
//! corresponding uncoupled process. A label whose partner has died, or has
//! been left behind by an unshared jump, is second class until the two meet
//! again.

use rand::Rng;
use serde::Serialize;

use crate::engine::{check_times, rng, Chain, Observables, Pick, Recorder, TrajectoryRecord};
use crate::error::{Error, Result};
use crate::lattice::{Configuration, FrameConfig, ModelParams, ProcessKind};

const NONE: u32 = u32::MAX;
const XI: usize = 0;
const ZETA: usize = 1;

/// The four death counters of a coupled run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize)]
pub struct DeathCounters {
    pub xi_minus: u64,
    pub xi_plus: u64,
    pub zeta_minus: u64,
    pub zeta_plus: u64,
}

impl DeathCounters {
    pub fn xi_total(&self) -> u64 {
        self.xi_minus + self.xi_plus
    }

    pub fn zeta_total(&self) -> u64 {
        self.zeta_minus + self.zeta_plus
    }

    /// `2 (D_zeta^- + D_zeta^+) - (D_xi^- + D_xi^+)`.
    pub fn slack(&self) -> i64 {
        2 * self.zeta_total() as i64 - self.xi_total() as i64
    }

    /// The domination inequality.
    pub fn dominated(&self) -> bool {
        self.slack() >= 0
    }
}

/// Status of one label in one system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ParticleClass {
    First,
    Second,
    Dead,
}

/// A move of one system. `Exchange` carries the left site of the bond in
/// the comparison frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Move {
    Exchange(i64),
    Boundary,
}

/// One firing of the shared clock structure: the moves applied to each
/// system.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CoupledEvent {
    pub xi: Option<Move>,
    pub zeta: Option<Move>,
}

/// Jointly evolving boundary-frame (`xi`) and comparison (`zeta`) systems
/// with labelled particles.
#[derive(Debug, Clone)]
pub struct CoupledState {
    chains: [Chain; 2],
    labels: Vec<i64>,
    pos: [Vec<Option<i64>>; 2],
    site_label: [Vec<u32>; 2],
    /// xi-alive labels whose zeta partner is dead.
    orphans: u64,
}

/// Couples two copies of `config`. Labels increase from left to right with
/// label 0 on the rightmost particle at a site `<= 0`.
pub fn couple_init(config: &FrameConfig, params: &ModelParams) -> Result<CoupledState> {
    let fresh = FrameConfig::new(config.lo(), config.xi().to_vec())?;
    let cfg = Configuration::Frame(fresh);
    let xi = Chain::new(&cfg, ProcessKind::BoundaryFrame, params)?;
    let zeta = Chain::new(&cfg, ProcessKind::Comparison, params)?;
    let sites = config.occupied_sites();
    let first_pos = sites.iter().position(|&x| x > 0).unwrap_or(sites.len()) as i64;
    let labels: Vec<i64> = (0..sites.len() as i64).map(|k| k - first_pos + 1).collect();
    let n = xi.window_len();
    let mut site_label = vec![NONE; n];
    let mut pos = Vec::with_capacity(sites.len());
    for (k, &x) in sites.iter().enumerate() {
        let i = x - config.lo();
        site_label[i as usize] = k as u32;
        pos.push(Some(i));
    }
    Ok(CoupledState {
        chains: [xi, zeta],
        labels,
        pos: [pos.clone(), pos],
        site_label: [site_label.clone(), site_label],
        orphans: 0,
    })
}

impl CoupledState {
    /// Label ids in increasing order.
    pub fn labels(&self) -> &[i64] {
        &self.labels
    }

    fn frame_pos(&self, s: usize, k: usize) -> Option<i64> {
        self.pos[s][k].map(|i| i - self.chains[s].bi)
    }

    /// Frame position of the `k`-th label in the boundary-frame system.
    pub fn x_pos(&self, k: usize) -> Option<i64> {
        self.frame_pos(XI, k)
    }

    /// Frame position of the `k`-th label in the comparison system.
    pub fn y_pos(&self, k: usize) -> Option<i64> {
        self.frame_pos(ZETA, k)
    }

    fn class(&self, s: usize, k: usize) -> ParticleClass {
        match (self.pos[s][k], self.pos[1 - s][k]) {
            (None, _) => ParticleClass::Dead,
            (Some(a), Some(b)) if a == b => ParticleClass::First,
            _ => ParticleClass::Second,
        }
    }

    pub fn class_xi(&self, k: usize) -> ParticleClass {
        self.class(XI, k)
    }

    pub fn class_zeta(&self, k: usize) -> ParticleClass {
        self.class(ZETA, k)
    }

    /// `X^j - Y^j` for every coupled pair.
    pub fn offset(&self) -> i64 {
        self.chains[ZETA].bi - self.chains[XI].bi
    }

    pub fn counters(&self) -> DeathCounters {
        DeathCounters {
            xi_minus: self.chains[XI].deaths_minus,
            xi_plus: self.chains[XI].deaths_plus,
            zeta_minus: self.chains[ZETA].deaths_minus,
            zeta_plus: self.chains[ZETA].deaths_plus,
        }
    }

    /// Alive boundary-frame particles whose comparison partner has died.
    pub fn orphaned_xi(&self) -> u64 {
        self.orphans
    }

    /// Dead comparison particles not matched by a death of their own
    /// partner, minus the alive orphans they are reserved for.
    pub fn unreserved_zeta_deaths(&self) -> i64 {
        self.counters().slack() - self.orphans as i64
    }

    pub fn xi_config(&self) -> FrameConfig {
        match self.chains[XI].configuration() {
            Configuration::Frame(f) => f,
            Configuration::TwoPhase(_) => unreachable!(),
        }
    }

    pub fn zeta_config(&self) -> FrameConfig {
        match self.chains[ZETA].configuration() {
            Configuration::Frame(f) => f,
            Configuration::TwoPhase(_) => unreachable!(),
        }
    }

    fn move_label(&mut self, s: usize, j: usize) {
        let (a, b) = (j, j + 1);
        let sl = &mut self.site_label[s];
        let (from, to) = if sl[a] != NONE { (a, b) } else { (b, a) };
        let k = sl[from];
        sl[to] = k;
        sl[from] = NONE;
        self.pos[s][k as usize] = Some(to as i64);
    }

    fn exchange(&mut self, s: usize, j: usize) -> Result<()> {
        if self.chains[s].is_boundary_bond(j as i64) {
            return Err(Error::Coupling(format!("exchange at the boundary bond of system {s}")));
        }
        let occ = &self.chains[s].occ;
        if occ[j] != occ[j + 1] {
            self.move_label(s, j);
            self.chains[s].exchange(j);
        }
        Ok(())
    }

    fn boundary(&mut self, s: usize) -> Result<()> {
        let chain = &self.chains[s];
        if !chain.boundary_active {
            return Err(Error::Coupling(format!("boundary clock fired with an empty boundary bond in system {s}")));
        }
        let i = chain.bi as usize;
        for site in [i, i + 1] {
            let k = self.site_label[s][site];
            if k == NONE {
                continue;
            }
            self.site_label[s][site] = NONE;
            self.pos[s][k as usize] = None;
            let partner_alive = self.pos[1 - s][k as usize].is_some();
            match (s, partner_alive) {
                (ZETA, true) => self.orphans += 1,
                (XI, false) => self.orphans -= 1,
                _ => {}
            }
        }
        self.chains[s].boundary();
        Ok(())
    }

    /// Applies one event of the shared clock structure.
    pub fn coupled_step(&mut self, event: CoupledEvent) -> Result<()> {
        for (s, mv) in [(XI, event.xi), (ZETA, event.zeta)] {
            match mv {
                None => {}
                Some(Move::Boundary) => self.boundary(s)?,
                Some(Move::Exchange(bond)) => {
                    let j = bond + self.chains[ZETA].bi;
                    if j < 0 || j + 1 >= self.chains[s].window_len() as i64 {
                        return Err(Error::Coupling(format!("bond {bond} outside the window")));
                    }
                    self.exchange(s, j as usize)?;
                }
            }
        }
        Ok(())
    }

    /// The domination inequality at the current state.
    pub fn check_domination(&self) -> bool {
        self.counters().dominated()
    }

    /// The clock paired with `pick` of system `s`, as a move of the other
    /// system together with its active rate.
    fn partner(&self, s: usize, pick: Pick) -> (Move, f64) {
        let other = &self.chains[1 - s];
        let zb = self.chains[ZETA].bi;
        let (bs, bo) = (self.chains[s].bi, other.bi);
        let boundary = (Move::Boundary, if other.boundary_active { 1.0 } else { 0.0 });
        match pick {
            Pick::Boundary if bs == bo => boundary,
            Pick::Boundary => (Move::Exchange(bs - zb), other.bond_rate(bs as usize)),
            Pick::Exchange(j) if j as i64 == bo => boundary,
            Pick::Exchange(j) => (Move::Exchange(j as i64 - zb), other.bond_rate(j)),
        }
    }

    fn own(&self, s: usize, pick: Pick) -> (Move, f64) {
        match pick {
            Pick::Boundary => (Move::Boundary, 1.0),
            Pick::Exchange(j) => (Move::Exchange(j as i64 - self.chains[ZETA].bi), self.chains[s].bond_rate(j)),
        }
    }

    /// Draws the next firing. Clocks of the boundary-frame system are
    /// proposed at its total rate and joined by their partner with
    /// probability `min(r, r') / r`; clocks of the comparison system are
    /// proposed at its total rate and kept only for the unshared excess.
    /// Returns `None` when neither system can move, otherwise the unscaled
    /// holding time and the firing (`None` for a rejected proposal).
    fn draw<R: Rng>(&self, rng: &mut R) -> Option<(f64, Option<CoupledEvent>)> {
        let rx = self.chains[XI].total_rate();
        let rz = self.chains[ZETA].total_rate();
        let total = rx + rz;
        if total <= 0.0 {
            return None;
        }
        let u: f64 = rng.random();
        let hold = -(1.0 - u).ln() / total;
        let v = rng.random::<f64>() * total;
        let (s, pick) = if v < rx {
            (XI, self.chains[XI].pick(v))
        } else {
            (ZETA, self.chains[ZETA].pick((v - rx).min(rz * (1.0 - f64::EPSILON))))
        };
        let (mv, r) = self.own(s, pick);
        let (pmv, pr) = self.partner(s, pick);
        let joint = pr > 0.0 && rng.random::<f64>() * r < r.min(pr);
        let ev = match (s, joint) {
            (XI, true) => Some(CoupledEvent { xi: Some(mv), zeta: Some(pmv) }),
            (XI, false) => Some(CoupledEvent { xi: Some(mv), zeta: None }),
            (_, true) => None,
            (_, false) => Some(CoupledEvent { xi: None, zeta: Some(mv) }),
        };
        Some((hold, ev))
    }
}

/// One row of the counter trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CounterSample {
    pub time: f64,
    pub counters: DeathCounters,
    pub offset: i64,
}

/// Output of [`run_coupled`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoupledRun {
    pub xi: TrajectoryRecord,
    pub zeta: TrajectoryRecord,
    /// Events after which the domination inequality failed.
    pub violations: u64,
    /// Events inside the first translation epoch at which the comparison
    /// deaths on the side of the first single death fell behind.
    pub epoch_violations: u64,
    pub samples: Vec<CounterSample>,
    pub final_counters: DeathCounters,
    pub min_slack: i64,
    pub min_unreserved: i64,
    pub max_abs_offset: i64,
    pub events: u64,
}

impl CoupledRun {
    /// Header `time,d_xi_minus,d_xi_plus,d_zeta_minus,d_zeta_plus,offset`.
    pub fn counters_csv(&self) -> String {
        let mut s = String::from("time,d_xi_minus,d_xi_plus,d_zeta_minus,d_zeta_plus,offset\n");
        for r in &self.samples {
            let c = r.counters;
            s.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.time, c.xi_minus, c.xi_plus, c.zeta_minus, c.zeta_plus, r.offset
            ));
        }
        s
    }
}

/// Tracks the first translation epoch: from the first single death until
/// the single deaths on both sides balance again.
#[derive(Debug, Default)]
struct Epoch {
    state: u8,
    side_plus: bool,
    base: DeathCounters,
}

impl Epoch {
    fn observe(&mut self, before: DeathCounters, now: DeathCounters) -> bool {
        if self.state == 0 {
            let dm = now.xi_minus - before.xi_minus;
            let dp = now.xi_plus - before.xi_plus;
            if dm != dp {
                self.state = 1;
                self.side_plus = dp > dm;
                self.base = before;
            } else {
                return true;
            }
        }
        if self.state != 1 {
            return true;
        }
        let b = self.base;
        let (xs, xo, zs) = if self.side_plus {
            (now.xi_plus - b.xi_plus, now.xi_minus - b.xi_minus, now.zeta_plus - b.zeta_plus)
        } else {
            (now.xi_minus - b.xi_minus, now.xi_plus - b.xi_plus, now.zeta_minus - b.zeta_minus)
        };
        let ok = xs <= zs;
        if xs == xo {
            self.state = 2;
        }
        ok
    }
}

/// Runs the coupled pair from `initial`, checking the domination inequality
/// after every event.
pub fn run_coupled(
    initial: &FrameConfig,
    params: &ModelParams,
    sample_times: &[f64],
    obs: &Observables,
) -> Result<CoupledRun> {
    params.validate()?;
    check_times(sample_times, params.t)?;
    let mut state = couple_init(initial, params)?;
    let mut rng = rng::stream(params.seed, rng::COUPLING_STREAM);
    let n2 = (params.n as f64).powi(2);
    let mut rec_xi = Recorder::new(&state.chains[XI], obs, params, sample_times);
    let mut rec_zeta = Recorder::new(&state.chains[ZETA], obs, params, sample_times);
    let mut samples = Vec::with_capacity(sample_times.len());
    let mut epoch = Epoch::default();
    let (mut violations, mut epoch_violations, mut events) = (0u64, 0u64, 0u64);
    let (mut min_slack, mut min_unreserved, mut max_abs_offset) = (0i64, 0i64, 0i64);
    let mut t = 0.0;
    let mut k = 0;
    let mut record = |state: &CoupledState, k: usize, samples: &mut Vec<CounterSample>| {
        rec_xi.record(&state.chains[XI], k);
        rec_zeta.record(&state.chains[ZETA], k);
        samples.push(CounterSample { time: sample_times[k], counters: state.counters(), offset: state.offset() });
    };
    while k < sample_times.len() {
        let Some((hold, ev)) = state.draw(&mut rng) else { break };
        t += hold / n2;
        while k < sample_times.len() && sample_times[k] < t {
            record(&state, k, &mut samples);
            k += 1;
        }
        if k == sample_times.len() {
            break;
        }
        let Some(ev) = ev else { continue };
        let before = state.counters();
        state.coupled_step(ev)?;
        events += 1;
        let now = state.counters();
        if now != before {
            if !now.dominated() {
                violations += 1;
            }
            if !epoch.observe(before, now) {
                epoch_violations += 1;
            }
            min_slack = min_slack.min(now.slack());
            min_unreserved = min_unreserved.min(state.unreserved_zeta_deaths());
            max_abs_offset = max_abs_offset.max(state.offset().abs());
        }
    }
    while k < sample_times.len() {
        record(&state, k, &mut samples);
        k += 1;
    }
    let final_counters = state.counters();
    let mut xi = rec_xi.rec;
    let mut zeta = rec_zeta.rec;
    xi.events = events;
    zeta.events = events;
    xi.final_state = Some(state.chains[XI].configuration());
    zeta.final_state = Some(state.chains[ZETA].configuration());
    Ok(CoupledRun {
        xi,
        zeta,
        violations,
        epoch_violations,
        samples,
        final_counters,
        min_slack,
        min_unreserved,
        max_abs_offset,
        events,
    })
}
