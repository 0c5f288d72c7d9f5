//! Message-passing RF-chain/antenna selection.
//!
//! Each virtual controller owns one block of the global on/off decision and
//! keeps belief copies of every other controller's block. Controllers merge
//! incoming messages with a bitwise update rule, locally re-optimize their
//! own block by exhaustive search (the blocks are small), and pass their
//! whole belief to their bipartite neighbors. Third-party blocks ride along
//! inside the payloads, which is how information reaches controllers without
//! a direct link. The sequential schedule activates one controller at a
//! time so downstream controllers always see the freshest decisions; the
//! parallel schedule lets every controller act on the previous iteration's
//! messages and then delivers everything at once.

use rand::Rng;

use crate::error::{Error, Result};
use crate::metrics::{
    energy_efficiency, insertion_loss_ok, stream_bounds_ok, EvalContext, SelectionState,
};
use crate::topology::{is_bipartite_connected, ControllerPartition};

/// Bitwise belief-merge behaviour.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UpdateRule {
    /// Keep bits every message agrees with, raise bits any neighbor raised,
    /// clear bits any neighbor cleared (clears win). Default.
    #[default]
    Retentive,
    /// The printed update formula verbatim: a bit survives only when some
    /// neighbor disagrees upward and none disagrees downward; agreement on a
    /// set bit clears it.
    Literal,
}

/// Message delivery discipline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Schedule {
    #[default]
    Sequential,
    Parallel,
}

impl std::fmt::Display for Schedule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Schedule::Sequential => write!(f, "sequential"),
            Schedule::Parallel => write!(f, "parallel"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarsConfig {
    /// Probability that an RF controller re-optimizes in a given iteration.
    pub eta_r: f64,
    /// Probability that an antenna controller re-optimizes.
    pub eta_a: f64,
    /// Convergence threshold on the absolute power difference between
    /// consecutive iterations (W).
    pub kappa: f64,
    pub max_iters: usize,
    pub update_rule: UpdateRule,
    pub schedule: Schedule,
}

impl Default for MarsConfig {
    fn default() -> Self {
        Self {
            eta_r: 0.7,
            eta_a: 0.7,
            kappa: 1e-3,
            max_iters: 50,
            update_rule: UpdateRule::Retentive,
            schedule: Schedule::Sequential,
        }
    }
}

impl MarsConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("eta_r", self.eta_r), ("eta_a", self.eta_a)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must lie in [0,1], got {v}"
                )));
            }
        }
        if !(self.kappa > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "kappa must be positive, got {}",
                self.kappa
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidParameter("max_iters must be positive".into()));
        }
        Ok(())
    }
}

/// One controller's view of the whole system: its own block is its latest
/// local decision, every other block is its most recent belief copy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ControllerBeliefs {
    pub delta: Vec<bool>,
    pub theta: Vec<bool>,
}

/// Controller address: RF side or antenna side.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CtrlId {
    Rf(usize),
    Ant(usize),
}

/// A passed message: the sender's own optimized block plus its updated
/// copies of every third-party block, i.e. its full belief snapshot.
#[derive(Debug, Clone)]
pub struct Message {
    pub from: CtrlId,
    pub to: CtrlId,
    pub delta: Vec<bool>,
    pub theta: Vec<bool>,
}

/// Merge a stored bit block with the corresponding blocks of the incoming
/// messages. Per bit, with `xi = incoming ^ stored`: a neighbor raising the
/// bit sets it, a neighbor clearing it vetoes it, and the veto dominates.
/// The literal rule additionally clears bits every message agrees with.
///
/// Callers are expected to skip the merge entirely when no message arrived;
/// with an empty `incoming` the literal rule returns all zeros by definition.
pub fn merge_beliefs(stored: &[bool], incoming: &[&[bool]], rule: UpdateRule) -> Result<Vec<bool>> {
    for (i, m) in incoming.iter().enumerate() {
        if m.len() != stored.len() {
            return Err(Error::DimensionMismatch(format!(
                "merge_beliefs: stored has {} bits, message {} has {}",
                stored.len(),
                i,
                m.len()
            )));
        }
    }
    Ok((0..stored.len())
        .map(|i| {
            let s = stored[i];
            let mut flip_up = false;
            let mut veto = false;
            for m in incoming {
                let xi = m[i] ^ s;
                flip_up |= xi & m[i];
                veto |= xi & s;
            }
            match rule {
                UpdateRule::Literal => flip_up && !veto,
                UpdateRule::Retentive => (s || flip_up) && !veto,
            }
        })
        .collect())
}

/// Result of one controller's local exhaustive search.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalDecision {
    pub bits: Vec<bool>,
    /// False when no candidate satisfied the constraint subset and the
    /// previous decision was kept.
    pub feasible: bool,
}

fn bits_of(candidate: u32, len: usize) -> Vec<bool> {
    (0..len).map(|i| candidate & (1 << i) != 0).collect()
}

fn ones(bits: &[bool]) -> usize {
    bits.iter().filter(|&&b| b).count()
}

/// Candidate ordering key: lowest power first, then fewest active elements,
/// then lexicographically smallest pattern, so replays are deterministic.
fn better(
    cand: (f64, usize, &[bool]),
    best: Option<(f64, usize, Vec<bool>)>,
) -> bool {
    match best {
        None => true,
        Some((bp, bo, ref bb)) => {
            (cand.0, cand.1, cand.2) < (bp, bo, bb.as_slice())
        }
    }
}

fn local_optimize(
    ctx: &EvalContext,
    group: &[usize],
    beliefs: &ControllerBeliefs,
    rf_side: bool,
) -> Result<LocalDecision> {
    let len = group.len();
    if len > 20 {
        return Err(Error::InvalidParameter(format!(
            "controller group of {len} elements is too large for exhaustive search"
        )));
    }
    let mut sel = SelectionState {
        delta: beliefs.delta.clone(),
        theta: beliefs.theta.clone(),
    };
    let previous: Vec<bool> = if rf_side {
        group.iter().map(|&n| beliefs.delta[n]).collect()
    } else {
        group.iter().map(|&m| beliefs.theta[m]).collect()
    };
    let mut best: Option<(f64, usize, Vec<bool>)> = None;
    for cand in 0..(1u32 << len) {
        let bits = bits_of(cand, len);
        for (slot, &idx) in group.iter().enumerate() {
            if rf_side {
                sel.delta[idx] = bits[slot];
            } else {
                sel.theta[idx] = bits[slot];
            }
        }
        if !stream_bounds_ok(ctx.params, &sel) {
            continue;
        }
        let power = ctx.power(&sel);
        if power > ctx.params.p_max {
            continue;
        }
        if !rf_side && !insertion_loss_ok(ctx.params, &sel, ctx.conn) {
            continue;
        }
        if ctx.rate(&sel)? < ctx.params.r_req {
            continue;
        }
        let n_on = ones(&bits);
        if better((power, n_on, &bits), best.clone()) {
            best = Some((power, n_on, bits));
        }
    }
    Ok(match best {
        Some((_, _, bits)) => LocalDecision { bits, feasible: true },
        None => LocalDecision { bits: previous, feasible: false },
    })
}

/// Exhaustively optimize one RF controller's block with every other block
/// fixed at the controller's beliefs. Constraint subset: binary domain,
/// stream bounds, QoS rate, and the system power cap.
pub fn local_optimize_rf(
    ctx: &EvalContext,
    group: &[usize],
    beliefs: &ControllerBeliefs,
) -> Result<LocalDecision> {
    local_optimize(ctx, group, beliefs, true)
}

/// Antenna-side counterpart; additionally enforces the per-chain
/// insertion-loss budget.
pub fn local_optimize_ant(
    ctx: &EvalContext,
    group: &[usize],
    beliefs: &ControllerBeliefs,
) -> Result<LocalDecision> {
    local_optimize(ctx, group, beliefs, false)
}

/// One row of the per-iteration trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub iteration: usize,
    pub power_w: f64,
    pub rate_bpshz: f64,
    pub ee: f64,
    pub feasible: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTrace {
    pub schedule: Schedule,
    pub rows: Vec<TraceRow>,
}

impl ConvergenceTrace {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iteration,power_w,rate_bpshz,ee,feasible,schedule\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.iteration, r.power_w, r.rate_bpshz, r.ee, r.feasible, self.schedule
            ));
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct MarsOutcome {
    pub selection: SelectionState,
    pub trace: ConvergenceTrace,
    pub converged: bool,
    pub iterations: usize,
}

/// The stepping state machine behind [`run_mars`], exposed so tests can
/// inspect beliefs between iterations.
pub struct MarsEngine<'a> {
    ctx: &'a EvalContext<'a>,
    partition: &'a ControllerPartition,
    cfg: &'a MarsConfig,
    rf_beliefs: Vec<ControllerBeliefs>,
    ant_beliefs: Vec<ControllerBeliefs>,
    rf_inbox: Vec<Vec<Message>>,
    ant_inbox: Vec<Vec<Message>>,
    iteration: usize,
}

impl<'a> MarsEngine<'a> {
    pub fn new(
        ctx: &'a EvalContext<'a>,
        partition: &'a ControllerPartition,
        cfg: &'a MarsConfig,
        init: SelectionState,
    ) -> Result<Self> {
        cfg.validate()?;
        if init.delta.len() != ctx.params.n_rf || init.theta.len() != ctx.params.n_ant {
            return Err(Error::DimensionMismatch(format!(
                "initial selection ({}, {}) vs params ({}, {})",
                init.delta.len(),
                init.theta.len(),
                ctx.params.n_rf,
                ctx.params.n_ant
            )));
        }
        let biggest = partition
            .rf_groups
            .iter()
            .chain(partition.ant_groups.iter())
            .map(Vec::len)
            .max()
            .unwrap_or(0);
        if biggest > 20 {
            return Err(Error::InvalidParameter(format!(
                "largest controller group ({biggest}) too big for exhaustive search"
            )));
        }
        let beliefs = ControllerBeliefs {
            delta: init.delta,
            theta: init.theta,
        };
        Ok(Self {
            ctx,
            partition,
            cfg,
            rf_beliefs: vec![beliefs.clone(); partition.n_rf_groups()],
            ant_beliefs: vec![beliefs; partition.n_ant_groups()],
            rf_inbox: vec![Vec::new(); partition.n_rf_groups()],
            ant_inbox: vec![Vec::new(); partition.n_ant_groups()],
            iteration: 0,
        })
    }

    pub fn rf_beliefs(&self) -> &[ControllerBeliefs] {
        &self.rf_beliefs
    }

    pub fn ant_beliefs(&self) -> &[ControllerBeliefs] {
        &self.ant_beliefs
    }

    /// Global state assembled from each controller's own decision block.
    pub fn assembled_selection(&self) -> SelectionState {
        let mut sel = SelectionState {
            delta: vec![false; self.ctx.params.n_rf],
            theta: vec![false; self.ctx.params.n_ant],
        };
        for (k, group) in self.partition.rf_groups.iter().enumerate() {
            for &n in group {
                sel.delta[n] = self.rf_beliefs[k].delta[n];
            }
        }
        for (l, group) in self.partition.ant_groups.iter().enumerate() {
            for &m in group {
                sel.theta[m] = self.ant_beliefs[l].theta[m];
            }
        }
        sel
    }

    /// Merge all pending messages into one controller's belief. Every block
    /// except the controller's own decision block is merged; with an empty
    /// inbox the belief is left untouched.
    fn merge_controller(&mut self, id: CtrlId) -> Result<()> {
        let (msgs, beliefs) = match id {
            CtrlId::Rf(k) => (std::mem::take(&mut self.rf_inbox[k]), &mut self.rf_beliefs[k]),
            CtrlId::Ant(l) => (std::mem::take(&mut self.ant_inbox[l]), &mut self.ant_beliefs[l]),
        };
        if msgs.is_empty() {
            return Ok(());
        }
        let rule = self.cfg.update_rule;
        for (kp, group) in self.partition.rf_groups.iter().enumerate() {
            if matches!(id, CtrlId::Rf(k) if k == kp) {
                continue;
            }
            let stored: Vec<bool> = group.iter().map(|&n| beliefs.delta[n]).collect();
            let incoming: Vec<Vec<bool>> = msgs
                .iter()
                .map(|m| group.iter().map(|&n| m.delta[n]).collect())
                .collect();
            let refs: Vec<&[bool]> = incoming.iter().map(Vec::as_slice).collect();
            let merged = merge_beliefs(&stored, &refs, rule)?;
            for (slot, &n) in group.iter().enumerate() {
                beliefs.delta[n] = merged[slot];
            }
        }
        for (lp, group) in self.partition.ant_groups.iter().enumerate() {
            if matches!(id, CtrlId::Ant(l) if l == lp) {
                continue;
            }
            let stored: Vec<bool> = group.iter().map(|&m| beliefs.theta[m]).collect();
            let incoming: Vec<Vec<bool>> = msgs
                .iter()
                .map(|msg| group.iter().map(|&m| msg.theta[m]).collect())
                .collect();
            let refs: Vec<&[bool]> = incoming.iter().map(Vec::as_slice).collect();
            let merged = merge_beliefs(&stored, &refs, rule)?;
            for (slot, &m) in group.iter().enumerate() {
                beliefs.theta[m] = merged[slot];
            }
        }
        Ok(())
    }

    fn send(&mut self, id: CtrlId) {
        match id {
            CtrlId::Rf(k) => {
                let payload = self.rf_beliefs[k].clone();
                for &l in &self.partition.rf_neighbors[k] {
                    self.ant_inbox[l].push(Message {
                        from: id,
                        to: CtrlId::Ant(l),
                        delta: payload.delta.clone(),
                        theta: payload.theta.clone(),
                    });
                }
            }
            CtrlId::Ant(l) => {
                let payload = self.ant_beliefs[l].clone();
                for &k in &self.partition.ant_neighbors[l] {
                    self.rf_inbox[k].push(Message {
                        from: id,
                        to: CtrlId::Rf(k),
                        delta: payload.delta.clone(),
                        theta: payload.theta.clone(),
                    });
                }
            }
        }
    }

    fn optimize_controller(&mut self, id: CtrlId) -> Result<()> {
        match id {
            CtrlId::Rf(k) => {
                let dec = local_optimize_rf(self.ctx, &self.partition.rf_groups[k], &self.rf_beliefs[k])?;
                for (slot, &n) in self.partition.rf_groups[k].iter().enumerate() {
                    self.rf_beliefs[k].delta[n] = dec.bits[slot];
                }
            }
            CtrlId::Ant(l) => {
                let dec = local_optimize_ant(self.ctx, &self.partition.ant_groups[l], &self.ant_beliefs[l])?;
                for (slot, &m) in self.partition.ant_groups[l].iter().enumerate() {
                    self.ant_beliefs[l].theta[m] = dec.bits[slot];
                }
            }
        }
        Ok(())
    }

    /// Run one full iteration under the configured schedule and return the
    /// trace row for the assembled state.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<TraceRow> {
        self.iteration += 1;
        match self.cfg.schedule {
            Schedule::Sequential => {
                for k in 0..self.partition.n_rf_groups() {
                    self.merge_controller(CtrlId::Rf(k))?;
                    let x: f64 = rng.random();
                    if x <= self.cfg.eta_r {
                        self.optimize_controller(CtrlId::Rf(k))?;
                    }
                    self.send(CtrlId::Rf(k));
                }
                for l in 0..self.partition.n_ant_groups() {
                    self.merge_controller(CtrlId::Ant(l))?;
                    let x: f64 = rng.random();
                    if x <= self.cfg.eta_a {
                        self.optimize_controller(CtrlId::Ant(l))?;
                    }
                    self.send(CtrlId::Ant(l));
                }
            }
            Schedule::Parallel => {
                for k in 0..self.partition.n_rf_groups() {
                    self.merge_controller(CtrlId::Rf(k))?;
                    let x: f64 = rng.random();
                    if x <= self.cfg.eta_r {
                        self.optimize_controller(CtrlId::Rf(k))?;
                    }
                }
                for l in 0..self.partition.n_ant_groups() {
                    self.merge_controller(CtrlId::Ant(l))?;
                    let x: f64 = rng.random();
                    if x <= self.cfg.eta_a {
                        self.optimize_controller(CtrlId::Ant(l))?;
                    }
                }
                for k in 0..self.partition.n_rf_groups() {
                    self.send(CtrlId::Rf(k));
                }
                for l in 0..self.partition.n_ant_groups() {
                    self.send(CtrlId::Ant(l));
                }
            }
        }
        let sel = self.assembled_selection();
        let report = self.ctx.constraints(&sel)?;
        Ok(TraceRow {
            iteration: self.iteration,
            power_w: report.power,
            rate_bpshz: report.rate,
            ee: energy_efficiency(report.rate, report.power)?,
            feasible: report.feasible(),
        })
    }
}

/// Draw a random selection and redraw until the stream-count bounds hold;
/// falls back to all-on after too many attempts.
pub fn random_feasible_init<R: Rng + ?Sized>(
    n_rf: usize,
    n_ant: usize,
    n_s: usize,
    rng: &mut R,
) -> SelectionState {
    for _ in 0..1000 {
        let sel = SelectionState {
            delta: (0..n_rf).map(|_| rng.random::<bool>()).collect(),
            theta: (0..n_ant).map(|_| rng.random::<bool>()).collect(),
        };
        let d = sel.active_rf();
        if n_s <= d && d <= sel.active_ant() {
            return sel;
        }
    }
    SelectionState::all_on(n_rf, n_ant)
}

/// Run the full selection loop: random stream-bound-feasible initialization,
/// iterate until the assembled power changes by at most `kappa` between two
/// consecutive iterations (tested from the second iteration on), or until
/// `max_iters`.
pub fn run_mars<R: Rng + ?Sized>(
    cfg: &MarsConfig,
    ctx: &EvalContext,
    partition: &ControllerPartition,
    rng: &mut R,
) -> Result<MarsOutcome> {
    cfg.validate()?;
    if !is_bipartite_connected(ctx.conn) {
        return Err(Error::UnconnectedTopology(
            "selection requires a connected RF/antenna graph".into(),
        ));
    }
    let init = random_feasible_init(ctx.params.n_rf, ctx.params.n_ant, ctx.params.n_s, rng);
    let mut engine = MarsEngine::new(ctx, partition, cfg, init)?;
    let mut rows: Vec<TraceRow> = Vec::new();
    let mut converged = false;
    for t in 1..=cfg.max_iters {
        let row = engine.step(rng)?;
        rows.push(row);
        if t >= 2 {
            let prev = rows[t - 2].power_w;
            if (prev - row.power_w).abs() <= cfg.kappa {
                converged = true;
                break;
            }
        }
    }
    let iterations = rows.len();
    Ok(MarsOutcome {
        selection: engine.assembled_selection(),
        trace: ConvergenceTrace {
            schedule: cfg.schedule,
            rows,
        },
        converged,
        iterations,
    })
}
