//! Continuous genetic search for the beamformer pair given a fixed
//! selection, plus the outer loop that chains connection construction,
//! selection, and beamformer search.
//!
//! A gene flattens both beamformers into one real vector
//! `[Re W_RF | Im W_RF | Re W_BB | Im W_BB]` (column-major). Decoding
//! projects every analog entry back onto the unit circle, which is how the
//! blend-style crossover and range-based mutation stay inside the modulus
//! constraint. The generation driver (`evolve`) is genome-agnostic so the
//! discrete selection baseline can reuse it with a bit-vector genome.

use rand::Rng;

use crate::channel::ChannelRealization;
use crate::error::{Error, Result};
use crate::metrics::{
    achievable_rate, check_constraints, energy_efficiency, power_consumption, Beamformers,
    EvalContext, SelectionState, SystemParams,
};
use crate::numerics::ComplexMatrix;
use crate::topology::{build_ldpc_connection, partition_controllers, ConnectionMatrix};
use num_complex::Complex64;

/// Entries with modulus below this decode to 1+0i instead of being blown up
/// by the projection.
const PROJECTION_EPS: f64 = 1e-12;

/// Segment layout of a gene for given system dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GeneDims {
    pub n_rf: usize,
    pub n_ant: usize,
    pub n_s: usize,
}

impl GeneDims {
    pub fn of(params: &SystemParams) -> Self {
        Self {
            n_rf: params.n_rf,
            n_ant: params.n_ant,
            n_s: params.n_s,
        }
    }

    /// Length of the analog segment (real and imaginary halves together).
    pub fn rf_segment_len(&self) -> usize {
        2 * self.n_rf * self.n_ant
    }

    pub fn total_len(&self) -> usize {
        2 * (self.n_rf * self.n_ant + self.n_s * self.n_rf)
    }
}

/// Flattened real encoding of a beamformer pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Gene {
    pub values: Vec<f64>,
}

/// Column-major flatten of a complex matrix into (re, im) halves appended to
/// `out`.
fn flatten_into(m: &ComplexMatrix, out: &mut Vec<f64>) {
    for j in 0..m.cols() {
        for i in 0..m.rows() {
            out.push(m.get(i, j).re);
        }
    }
    for j in 0..m.cols() {
        for i in 0..m.rows() {
            out.push(m.get(i, j).im);
        }
    }
}

fn unflatten(values: &[f64], rows: usize, cols: usize) -> ComplexMatrix {
    let n = rows * cols;
    ComplexMatrix::from_fn(rows, cols, |i, j| {
        let idx = j * rows + i;
        Complex64::new(values[idx], values[n + idx])
    })
}

pub fn encode(bf: &Beamformers) -> Gene {
    let mut values =
        Vec::with_capacity(2 * (bf.n_rf() * bf.n_ant() + bf.n_s() * bf.n_rf()));
    flatten_into(bf.w_rf(), &mut values);
    flatten_into(bf.w_bb(), &mut values);
    Gene { values }
}

/// Rebuild the beamformers, projecting every analog entry to unit modulus
/// (`z -> z/|z|`, degenerate entries to 1+0i).
pub fn decode(gene: &Gene, dims: &GeneDims) -> Result<Beamformers> {
    if gene.values.len() != dims.total_len() {
        return Err(Error::DimensionMismatch(format!(
            "gene has {} values, dims need {}",
            gene.values.len(),
            dims.total_len()
        )));
    }
    let rf_len = dims.rf_segment_len();
    let raw_rf = unflatten(&gene.values[..rf_len], dims.n_rf, dims.n_ant);
    let w_rf = ComplexMatrix::from_fn(dims.n_rf, dims.n_ant, |i, j| {
        let z = raw_rf.get(i, j);
        let r = z.norm();
        if r < PROJECTION_EPS {
            Complex64::new(1.0, 0.0)
        } else {
            z / r
        }
    });
    let w_bb = unflatten(&gene.values[rf_len..], dims.n_s, dims.n_rf);
    Beamformers::new(w_rf, w_bb)
}

/// Everything a fitness evaluation needs besides the gene itself.
pub struct FitnessEnv<'a> {
    pub params: &'a SystemParams,
    pub conn: &'a ConnectionMatrix,
    pub chan: &'a ChannelRealization,
    pub sel: &'a SelectionState,
    pub xi: f64,
}

/// Rate margin above the QoS floor when the gene meets it, a flat penalty
/// `-xi` when it does not. Returns the fitness and the feasibility flag.
pub fn fitness(gene: &Gene, env: &FitnessEnv) -> Result<(f64, bool)> {
    let dims = GeneDims::of(env.params);
    let bf = decode(gene, &dims)?;
    let rate = achievable_rate(env.params, env.sel, &bf, env.conn, env.chan)?;
    if rate >= env.params.r_req {
        Ok((rate - env.params.r_req, true))
    } else {
        Ok((-env.xi, false))
    }
}

/// Blend crossover with a fresh uniform mixing sequence: each offspring pair
/// conserves the parents' elementwise sum.
pub fn crossover<R: Rng + ?Sized>(a: &Gene, b: &Gene, rng: &mut R) -> Result<(Gene, Gene)> {
    let seq: Vec<f64> = (0..a.values.len()).map(|_| rng.random::<f64>()).collect();
    crossover_with_sequence(a, b, &seq)
}

/// Deterministic core of [`crossover`], exposed for tests that need a fixed
/// mixing sequence.
pub fn crossover_with_sequence(a: &Gene, b: &Gene, seq: &[f64]) -> Result<(Gene, Gene)> {
    if a.values.len() != b.values.len() || seq.len() != a.values.len() {
        return Err(Error::DimensionMismatch(format!(
            "crossover: genes of {} and {} values, sequence of {}",
            a.values.len(),
            b.values.len(),
            seq.len()
        )));
    }
    let mut c1 = Vec::with_capacity(a.values.len());
    let mut c2 = Vec::with_capacity(a.values.len());
    for i in 0..a.values.len() {
        let s = seq[i];
        c1.push(a.values[i] * s + b.values[i] * (1.0 - s));
        c2.push(a.values[i] * (1.0 - s) + b.values[i] * s);
    }
    Ok((Gene { values: c1 }, Gene { values: c2 }))
}

/// Redraw `n_mu` distinct positions uniformly inside their segment's current
/// [min, max] range: analog positions use the analog segment's range,
/// baseband positions the baseband segment's.
pub fn mutate<R: Rng + ?Sized>(
    gene: &Gene,
    dims: &GeneDims,
    n_mu: usize,
    rng: &mut R,
) -> Result<Gene> {
    Ok(mutate_with_positions(gene, dims, n_mu, rng)?.0)
}

/// [`mutate`] plus the chosen position set, for audits.
pub fn mutate_with_positions<R: Rng + ?Sized>(
    gene: &Gene,
    dims: &GeneDims,
    n_mu: usize,
    rng: &mut R,
) -> Result<(Gene, Vec<usize>)> {
    let len = gene.values.len();
    if n_mu > len {
        return Err(Error::InvalidParameter(format!(
            "mutate: {n_mu} elements requested, gene has {len}"
        )));
    }
    let rf_len = dims.rf_segment_len();
    let seg_range = |slice: &[f64]| {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &v in slice {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (lo, hi)
    };
    let rf_range = seg_range(&gene.values[..rf_len]);
    let bb_range = seg_range(&gene.values[rf_len..]);

    // Partial Fisher-Yates: the first n_mu entries form a uniform
    // without-replacement draw.
    let mut indices: Vec<usize> = (0..len).collect();
    for i in 0..n_mu {
        let j = rng.random_range(i..len);
        indices.swap(i, j);
    }
    let mut positions: Vec<usize> = indices[..n_mu].to_vec();
    positions.sort_unstable();

    let mut out = gene.clone();
    for &pos in &positions {
        let (lo, hi) = if pos < rf_len { rf_range } else { bb_range };
        out.values[pos] = if hi > lo {
            lo + (hi - lo) * rng.random::<f64>()
        } else {
            lo
        };
    }
    Ok((out, positions))
}

/// How the generation loop decides it is done.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TerminationMode {
    /// Stop once the best individual is feasible and its fitness has
    /// stalled (default). A strongly feasible population is a success here.
    #[default]
    Feasibility,
    /// The printed dual criterion: best fitness at most `iota1` and change
    /// between generations at most `iota2`.
    Paper,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaConfig {
    /// Population size.
    pub n_g: usize,
    /// Elite count carried over unchanged.
    pub n_e: usize,
    /// Offspring generated per generation.
    pub n_crx: usize,
    /// Total mutated elements, spread uniformly across the offspring pool.
    pub n_mu: usize,
    /// Infeasibility penalty.
    pub xi: f64,
    /// Termination thresholds.
    pub iota1: f64,
    pub iota2: f64,
    pub max_generations: usize,
    pub termination: TerminationMode,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            n_g: 100,
            n_e: 10,
            n_crx: 100,
            n_mu: 1000,
            xi: 1e3,
            iota1: 0.1,
            iota2: 0.1,
            max_generations: 50,
            termination: TerminationMode::Feasibility,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_g == 0 || self.n_e == 0 || self.n_crx == 0 {
            return Err(Error::InvalidParameter(
                "population, elite and offspring counts must be positive".into(),
            ));
        }
        if self.n_e > self.n_g {
            return Err(Error::InvalidParameter(format!(
                "elite count {} exceeds population {}",
                self.n_e, self.n_g
            )));
        }
        if !(self.iota1 > 0.0) || !(self.iota2 > 0.0) || !(self.xi > 0.0) {
            return Err(Error::InvalidParameter(
                "xi and termination thresholds must be positive".into(),
            ));
        }
        if self.max_generations == 0 {
            return Err(Error::InvalidParameter(
                "max_generations must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitnessRow {
    pub generation: usize,
    pub best_fitness: f64,
    pub mean_fitness: f64,
    pub feasible_count: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FitnessTrace {
    pub rows: Vec<FitnessRow>,
}

impl FitnessTrace {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("generation,best_fitness,mean_fitness,feasible_count\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{}\n",
                r.generation, r.best_fitness, r.mean_fitness, r.feasible_count
            ));
        }
        out
    }
}

/// Outcome of a genome-agnostic evolution run.
#[derive(Debug, Clone)]
pub struct EvolveRun<G> {
    pub best: G,
    pub best_fitness: f64,
    pub best_feasible: bool,
    pub trace: FitnessTrace,
    pub generations: usize,
    pub converged: bool,
}

/// Generation loop shared by every genome in this crate: sort by fitness,
/// carry the elites unchanged, breed offspring from uniformly drawn elite
/// pairs, spread the mutation budget evenly over the offspring pool, and
/// truncate elites-plus-offspring back to the population size.
pub fn evolve<G, R, FIT, CRX, MUT>(
    cfg: &GaConfig,
    init: Vec<G>,
    mut eval: FIT,
    mut breed: CRX,
    mut perturb: MUT,
    rng: &mut R,
) -> Result<EvolveRun<G>>
where
    G: Clone,
    R: Rng + ?Sized,
    FIT: FnMut(&G) -> Result<(f64, bool)>,
    CRX: FnMut(&G, &G, &mut R) -> Result<(G, G)>,
    MUT: FnMut(&mut G, usize, &mut R) -> Result<()>,
{
    cfg.validate()?;
    if init.is_empty() {
        return Err(Error::InvalidParameter("evolve: empty initial population".into()));
    }
    let mut pop = init;
    let mut fits: Vec<(f64, bool)> = pop.iter().map(&mut eval).collect::<Result<_>>()?;

    let mut trace = FitnessTrace::default();
    let record = |generation: usize, fits: &[(f64, bool)], trace: &mut FitnessTrace| {
        let best = fits.iter().map(|f| f.0).fold(f64::NEG_INFINITY, f64::max);
        let mean = fits.iter().map(|f| f.0).sum::<f64>() / fits.len() as f64;
        let feasible_count = fits.iter().filter(|f| f.1).count();
        trace.rows.push(FitnessRow {
            generation,
            best_fitness: best,
            mean_fitness: mean,
            feasible_count,
        });
        best
    };

    let mut best_val = record(0, &fits, &mut trace);
    let best_of = |fits: &[(f64, bool)]| {
        fits.iter()
            .enumerate()
            .max_by(|a, b| a.1 .0.partial_cmp(&b.1 .0).unwrap().then(b.0.cmp(&a.0)))
            .map(|(i, _)| i)
            .unwrap()
    };
    let mut idx = best_of(&fits);
    let mut best = pop[idx].clone();
    let mut best_feasible = fits[idx].1;

    let mut converged = false;
    let mut generations = 0usize;
    for generation in 1..=cfg.max_generations {
        generations = generation;
        // Rank current population, best first; ties keep the earlier index.
        let mut order: Vec<usize> = (0..pop.len()).collect();
        order.sort_by(|&a, &b| fits[b].0.partial_cmp(&fits[a].0).unwrap().then(a.cmp(&b)));
        let n_e = cfg.n_e.min(pop.len());
        let elites: Vec<G> = order[..n_e].iter().map(|&i| pop[i].clone()).collect();

        let mut offspring: Vec<G> = Vec::with_capacity(cfg.n_crx);
        while offspring.len() < cfg.n_crx {
            let i = rng.random_range(0..n_e);
            let j = if n_e > 1 {
                let mut j = rng.random_range(0..n_e - 1);
                if j >= i {
                    j += 1;
                }
                j
            } else {
                i
            };
            let (c1, c2) = breed(&elites[i], &elites[j], rng)?;
            offspring.push(c1);
            if offspring.len() < cfg.n_crx {
                offspring.push(c2);
            }
        }

        let n_off = offspring.len();
        let base = cfg.n_mu / n_off;
        let rem = cfg.n_mu % n_off;
        for (i, child) in offspring.iter_mut().enumerate() {
            let budget = base + usize::from(i < rem);
            if budget > 0 {
                perturb(child, budget, rng)?;
            }
        }

        let mut next: Vec<G> = elites;
        next.extend(offspring);
        next.truncate(cfg.n_g);
        pop = next;
        fits = pop.iter().map(&mut eval).collect::<Result<_>>()?;

        let prev_best = best_val;
        let gen_best = record(generation, &fits, &mut trace);
        idx = best_of(&fits);
        if gen_best > best_val {
            best_val = gen_best;
            best = pop[idx].clone();
            best_feasible = fits[idx].1;
        }

        let stalled = (gen_best - prev_best).abs() <= cfg.iota2;
        let done = match cfg.termination {
            TerminationMode::Feasibility => fits[idx].1 && stalled,
            TerminationMode::Paper => gen_best <= cfg.iota1 && stalled,
        };
        if done {
            converged = true;
            break;
        }
    }

    Ok(EvolveRun {
        best,
        best_fitness: best_val,
        best_feasible,
        trace,
        generations,
        converged,
    })
}

/// Result of the beamformer search.
#[derive(Debug, Clone)]
pub struct GaOutcome {
    pub bf: Beamformers,
    pub best_fitness: f64,
    /// True when the returned beamformers meet the QoS floor.
    pub feasible: bool,
    pub trace: FitnessTrace,
    pub generations: usize,
    pub converged: bool,
}

/// Random initial gene: analog phases uniform on [0, 2pi), baseband entries
/// standard complex normal.
fn random_gene<R: Rng + ?Sized>(dims: &GeneDims, rng: &mut R) -> Gene {
    let bf = Beamformers::random(dims.n_s, dims.n_rf, dims.n_ant, rng);
    encode(&bf)
}

/// Evolve beamformers for a fixed selection.
pub fn run_genetic<R: Rng + ?Sized>(
    cfg: &GaConfig,
    sel: &SelectionState,
    params: &SystemParams,
    conn: &ConnectionMatrix,
    chan: &ChannelRealization,
    rng: &mut R,
) -> Result<GaOutcome> {
    let dims = GeneDims::of(params);
    let env = FitnessEnv {
        params,
        conn,
        chan,
        sel,
        xi: cfg.xi,
    };
    let init: Vec<Gene> = (0..cfg.n_g).map(|_| random_gene(&dims, rng)).collect();
    let run = evolve(
        cfg,
        init,
        |g| fitness(g, &env),
        |a, b, rng| crossover(a, b, rng),
        |g, n, rng| {
            let n = n.min(g.values.len());
            *g = mutate(g, &dims, n, rng)?;
            Ok(())
        },
        rng,
    )?;
    Ok(GaOutcome {
        bf: decode(&run.best, &dims)?,
        best_fitness: run.best_fitness,
        feasible: run.best_feasible,
        trace: run.trace,
        generations: run.generations,
        converged: run.converged,
    })
}

/// Configuration of the joint outer loop.
#[derive(Debug, Clone, PartialEq)]
pub struct JointConfig {
    pub max_rounds: usize,
    /// Stop when the best-so-far energy efficiency improves by less than
    /// this between consecutive rounds.
    pub ee_tol: f64,
    pub n_conn: usize,
    pub rf_group: usize,
    pub ant_group: usize,
    pub mars: crate::mars::MarsConfig,
    pub ga: GaConfig,
}

#[derive(Debug, Clone)]
pub struct JointOutcome {
    pub conn: ConnectionMatrix,
    pub selection: SelectionState,
    pub bf: Beamformers,
    pub rate: f64,
    pub power: f64,
    pub ee: f64,
    pub feasible: bool,
    pub rounds: usize,
    /// Best-so-far energy efficiency after each completed round.
    pub best_ee_by_round: Vec<f64>,
}

/// One full pass per round: build a fresh connection, run the
/// message-passing selection on it with randomized beamformers, then evolve
/// the beamformers for the selected state. The best round by energy
/// efficiency is retained; the loop stops when the best stops improving by
/// at least `ee_tol` or the round cap is reached. The connection is rebuilt
/// once per outer round only.
pub fn run_joint<R: Rng + ?Sized>(
    cfg: &JointConfig,
    params: &SystemParams,
    chan: &ChannelRealization,
    rng: &mut R,
) -> Result<JointOutcome> {
    if cfg.max_rounds == 0 {
        return Err(Error::InvalidParameter("max_rounds must be positive".into()));
    }
    let mut best: Option<JointOutcome> = None;
    let mut best_ee_by_round = Vec::new();
    let mut rounds = 0usize;
    for round in 1..=cfg.max_rounds {
        rounds = round;
        let conn = build_ldpc_connection(params.n_rf, params.n_ant, cfg.n_conn, rng)?;
        let partition = partition_controllers(&conn, cfg.rf_group, cfg.ant_group)?;
        let bf0 = Beamformers::random(params.n_s, params.n_rf, params.n_ant, rng);
        let ctx = EvalContext::new(params, &bf0, &conn, chan)?;
        let mars_out = crate::mars::run_mars(&cfg.mars, &ctx, &partition, rng)?;
        let ga_out = run_genetic(&cfg.ga, &mars_out.selection, params, &conn, chan, rng)?;

        let report = check_constraints(params, &mars_out.selection, &ga_out.bf, &conn, chan)?;
        let power = power_consumption(params, &mars_out.selection, &conn, params.lna_mode);
        let ee = energy_efficiency(report.rate, power)?;
        let candidate = JointOutcome {
            conn,
            selection: mars_out.selection,
            bf: ga_out.bf,
            rate: report.rate,
            power,
            ee,
            feasible: report.feasible(),
            rounds: round,
            best_ee_by_round: Vec::new(),
        };
        let prev_best_ee = best.as_ref().map(|b| b.ee);
        let improved = prev_best_ee.map_or(true, |p| candidate.ee > p);
        if improved {
            best = Some(candidate);
        }
        let best_ee = best.as_ref().map(|b| b.ee).unwrap();
        best_ee_by_round.push(best_ee);
        if let Some(prev) = prev_best_ee {
            if best_ee - prev < cfg.ee_tol {
                break;
            }
        }
    }
    let mut out = best.expect("at least one round ran");
    out.rounds = rounds;
    out.best_ee_by_round = best_ee_by_round;
    Ok(out)
}
