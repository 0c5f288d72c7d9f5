//! Sparse RF-chain/antenna connection patterns with parity-check-style
//! structural properties, plus the grouping of RF chains and antennas into
//! virtual controllers.
//!
//! A connection matrix is feasible when three properties hold:
//!   (a) every row sums to exactly `n_conn`,
//!   (b) every antenna column has at least one link,
//!   (c) at least `n_rf - 1` RF-chain pairs share a common antenna,
//! and the construction additionally guarantees that the bipartite graph of
//! RF chains and antennas forms a single connected component, so a message
//! can reach any node from any other.

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::numerics::ComplexMatrix;

/// Binary RF-to-antenna link pattern, `n_rf x n_ant`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConnectionMatrix {
    n_rf: usize,
    n_ant: usize,
    /// Declared per-row link count (property (a) target).
    n_conn: usize,
    bits: Vec<bool>,
}

impl ConnectionMatrix {
    pub fn new(n_rf: usize, n_ant: usize, n_conn: usize) -> Self {
        assert!(n_rf > 0 && n_ant > 0 && n_conn > 0);
        Self {
            n_rf,
            n_ant,
            n_conn,
            bits: vec![false; n_rf * n_ant],
        }
    }

    /// All-ones pattern (the fully connected architecture).
    pub fn full(n_rf: usize, n_ant: usize) -> Self {
        let mut c = Self::new(n_rf, n_ant, n_ant);
        c.bits.fill(true);
        c
    }

    /// Build from explicit per-row antenna index sets. `n_conn` is the
    /// declared target row sum; rows are not forced to match it here.
    pub fn from_row_sets(n_rf: usize, n_ant: usize, n_conn: usize, rows: &[Vec<usize>]) -> Result<Self> {
        if rows.len() != n_rf {
            return Err(Error::DimensionMismatch(format!(
                "from_row_sets: expected {} rows, got {}",
                n_rf,
                rows.len()
            )));
        }
        let mut c = Self::new(n_rf, n_ant, n_conn);
        for (n, set) in rows.iter().enumerate() {
            for &m in set {
                if m >= n_ant {
                    return Err(Error::InvalidParameter(format!(
                        "from_row_sets: antenna index {m} out of range (n_ant={n_ant})"
                    )));
                }
                c.set(n, m, true);
            }
        }
        Ok(c)
    }

    pub fn n_rf(&self) -> usize {
        self.n_rf
    }

    pub fn n_ant(&self) -> usize {
        self.n_ant
    }

    pub fn n_conn(&self) -> usize {
        self.n_conn
    }

    #[inline]
    pub fn get(&self, n: usize, m: usize) -> bool {
        self.bits[n * self.n_ant + m]
    }

    #[inline]
    pub fn set(&mut self, n: usize, m: usize, v: bool) {
        self.bits[n * self.n_ant + m] = v;
    }

    pub fn row_sum(&self, n: usize) -> usize {
        (0..self.n_ant).filter(|&m| self.get(n, m)).count()
    }

    pub fn col_sum(&self, m: usize) -> usize {
        (0..self.n_rf).filter(|&n| self.get(n, m)).count()
    }

    pub fn row_antennas(&self, n: usize) -> Vec<usize> {
        (0..self.n_ant).filter(|&m| self.get(n, m)).collect()
    }

    /// Number of antennas linked to both RF chains `n` and `n_prime`.
    pub fn common_antennas(&self, n: usize, n_prime: usize) -> usize {
        (0..self.n_ant)
            .filter(|&m| self.get(n, m) && self.get(n_prime, m))
            .count()
    }

    pub fn link_count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// 0/1 mask as a complex matrix, for elementwise products with the
    /// analog beamformer.
    pub fn to_mask(&self) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.n_rf, self.n_ant, |n, m| {
            if self.get(n, m) {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    /// Plain-text 0/1 grid, one row per RF chain.
    pub fn to_grid(&self) -> String {
        let mut s = String::with_capacity(self.n_rf * (self.n_ant + 1));
        for n in 0..self.n_rf {
            for m in 0..self.n_ant {
                s.push(if self.get(n, m) { '1' } else { '0' });
            }
            s.push('\n');
        }
        s
    }

    /// Parse the grid format produced by [`to_grid`]. The declared `n_conn`
    /// is taken as the first row's sum.
    pub fn from_grid(text: &str) -> Result<Self> {
        let rows: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
        if rows.is_empty() {
            return Err(Error::InvalidParameter("from_grid: empty grid".into()));
        }
        let n_ant = rows[0].trim().len();
        let n_rf = rows.len();
        let mut c = Self::new(n_rf, n_ant, 1);
        for (n, line) in rows.iter().enumerate() {
            let line = line.trim();
            if line.len() != n_ant {
                return Err(Error::DimensionMismatch(format!(
                    "from_grid: row 0 has {} columns, row {} has {}",
                    n_ant,
                    n,
                    line.len()
                )));
            }
            for (m, ch) in line.chars().enumerate() {
                match ch {
                    '1' => c.set(n, m, true),
                    '0' => {}
                    other => {
                        return Err(Error::InvalidParameter(format!(
                            "from_grid: unexpected character {other:?} at row {n}"
                        )))
                    }
                }
            }
        }
        c.n_conn = c.row_sum(0).max(1);
        Ok(c)
    }
}

/// Outcome of [`validate_ldpc`]: per-property violation lists.
#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    /// Rows whose sum differs from `n_conn`, with the observed sum.
    pub row_violations: Vec<(usize, usize)>,
    /// Antenna columns with no link.
    pub col_violations: Vec<usize>,
    /// Observed count of RF-chain pairs sharing at least one antenna.
    pub pairing_count: usize,
    /// Required count, `n_rf - 1`.
    pub pairing_required: usize,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.row_violations.is_empty()
            && self.col_violations.is_empty()
            && self.pairing_count >= self.pairing_required
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_valid() {
            return write!(f, "connection pattern valid");
        }
        for (row, sum) in &self.row_violations {
            writeln!(f, "row {row}: sum {sum} != n_conn")?;
        }
        for col in &self.col_violations {
            writeln!(f, "column {col}: no link")?;
        }
        if self.pairing_count < self.pairing_required {
            writeln!(
                f,
                "pairing: {} shared pairs, need {}",
                self.pairing_count, self.pairing_required
            )?;
        }
        Ok(())
    }
}

/// Check the three structural properties; the report lists every violated
/// row, column, and the pairing shortfall.
pub fn validate_ldpc(c: &ConnectionMatrix) -> ValidationReport {
    let mut report = ValidationReport {
        pairing_required: c.n_rf().saturating_sub(1),
        ..Default::default()
    };
    for n in 0..c.n_rf() {
        let s = c.row_sum(n);
        if s != c.n_conn() {
            report.row_violations.push((n, s));
        }
    }
    for m in 0..c.n_ant() {
        if c.col_sum(m) == 0 {
            report.col_violations.push(m);
        }
    }
    let mut pairs = 0;
    for n in 0..c.n_rf() {
        for np in (n + 1)..c.n_rf() {
            if c.common_antennas(n, np) >= 1 {
                pairs += 1;
            }
        }
    }
    report.pairing_count = pairs;
    report
}

/// True iff the bipartite graph (RF nodes plus antenna nodes, one edge per
/// link) has exactly one connected component, checked by breadth-first
/// traversal.
pub fn is_bipartite_connected(c: &ConnectionMatrix) -> bool {
    let total = c.n_rf() + c.n_ant();
    let mut seen = vec![false; total];
    let mut queue = std::collections::VecDeque::new();
    seen[0] = true; // start from RF node 0
    queue.push_back(0usize);
    let mut visited = 1usize;
    while let Some(node) = queue.pop_front() {
        if node < c.n_rf() {
            for m in 0..c.n_ant() {
                let idx = c.n_rf() + m;
                if c.get(node, m) && !seen[idx] {
                    seen[idx] = true;
                    visited += 1;
                    queue.push_back(idx);
                }
            }
        } else {
            let m = node - c.n_rf();
            for n in 0..c.n_rf() {
                if c.get(n, m) && !seen[n] {
                    seen[n] = true;
                    visited += 1;
                    queue.push_back(n);
                }
            }
        }
    }
    visited == total
}

/// Feasibility screen applied before any construction work. Besides the
/// row-sum bounds, a connected bipartite graph on `n_rf + n_ant` nodes needs
/// at least `n_rf + n_ant - 1` edges, i.e. `n_rf * n_conn >= n_rf + n_ant - 1`.
fn check_feasible(n_rf: usize, n_ant: usize, n_conn: usize) -> Result<()> {
    if n_rf == 0 || n_ant == 0 || n_conn == 0 {
        return Err(Error::InvalidParameter(
            "connection sizes must be positive".into(),
        ));
    }
    let min_per_row = n_ant.div_ceil(n_rf);
    if n_conn < min_per_row {
        return Err(Error::InfeasibleConnection(format!(
            "n_conn={n_conn} below ceil(n_ant/n_rf)={min_per_row}"
        )));
    }
    if n_conn > n_ant {
        return Err(Error::InfeasibleConnection(format!(
            "n_conn={n_conn} exceeds n_ant={n_ant}"
        )));
    }
    if n_rf * n_conn < n_rf + n_ant - 1 {
        return Err(Error::InfeasibleConnection(format!(
            "{n_rf}x{n_conn} links cannot connect {n_rf}+{n_ant} nodes"
        )));
    }
    Ok(())
}

/// Construct a random connection pattern satisfying all three structural
/// properties plus bipartite connectivity.
///
/// Phase 1 partitions the antennas over the RF chains (earlier rows take
/// `ceil(n_ant/n_rf)` antennas, later rows one fewer when the division is
/// uneven), so every antenna starts with exactly one link. Phase 2 welds the
/// rows together: following a random RF order, each newly joined chain shares
/// one antenna with an already-joined chain, the sharing link placed on
/// whichever side still has row budget. Phase 3 fills every row with random
/// absent links until its sum reaches `n_conn` exactly.
pub fn build_ldpc_connection<R: Rng + ?Sized>(
    n_rf: usize,
    n_ant: usize,
    n_conn: usize,
    rng: &mut R,
) -> Result<ConnectionMatrix> {
    check_feasible(n_rf, n_ant, n_conn)?;
    let mut c = ConnectionMatrix::new(n_rf, n_ant, n_conn);

    // Phase 1: independent coverage. Row sizes are ceil for the first
    // `n_ant mod n_rf` rows and floor for the rest, so the pool is consumed
    // exactly once.
    let base = n_ant / n_rf;
    let rem = n_ant % n_rf;
    let mut pool: Vec<usize> = (0..n_ant).collect();
    pool.shuffle(rng);
    let mut cursor = 0usize;
    for n in 0..n_rf {
        let take = if n < rem { base + 1 } else { base };
        for &m in &pool[cursor..cursor + take] {
            c.set(n, m, true);
        }
        cursor += take;
    }

    // Phase 2: node dependency. Join rows one at a time into a connected set,
    // each join adding (at most) one shared-antenna link. The sharing link
    // lands on whichever side still has row budget; the donor must own at
    // least one antenna the receiver lacks.
    let mut order: Vec<usize> = (0..n_rf).collect();
    order.shuffle(rng);
    let mut joined: Vec<usize> = vec![order[0]];
    let mut pending: Vec<usize> = order[1..].to_vec();
    while !pending.is_empty() {
        // Already sharing an antenna with the joined set: no link spent.
        if let Some(pi) = pending
            .iter()
            .position(|&p| joined.iter().any(|&j| c.common_antennas(p, j) >= 1))
        {
            let moved = pending.remove(pi);
            joined.push(moved);
            continue;
        }
        let cur = *joined.last().unwrap();
        let next = pending[0];
        if c.row_sum(cur) < n_conn && c.row_sum(next) > 0 {
            // Chain pattern: the last joined row takes an antenna of the next.
            add_shared_link(&mut c, cur, next, rng)?;
            joined.push(pending.remove(0));
        } else if c.row_sum(next) < n_conn && c.row_sum(cur) > 0 {
            add_shared_link(&mut c, next, cur, rng)?;
            joined.push(pending.remove(0));
        } else if let Some((pi, j)) = pending.iter().enumerate().find_map(|(pi, &p)| {
            if c.row_sum(p) >= n_conn {
                return None;
            }
            joined
                .iter()
                .copied()
                .find(|&j| c.row_sum(j) > 0)
                .map(|j| (pi, j))
        }) {
            let p = pending[pi];
            add_shared_link(&mut c, p, j, rng)?;
            joined.push(pending.remove(pi));
        } else if let Some((j, pi)) = joined.iter().copied().find_map(|j| {
            if c.row_sum(j) >= n_conn {
                return None;
            }
            pending
                .iter()
                .position(|&p| c.row_sum(p) > 0)
                .map(|pi| (j, pi))
        }) {
            let p = pending[pi];
            add_shared_link(&mut c, j, p, rng)?;
            joined.push(pending.remove(pi));
        } else {
            return Err(Error::InfeasibleConnection(
                "row budgets exhausted before all chains were joined".into(),
            ));
        }
    }

    // Phase 3: fill every row up to n_conn with random absent links.
    for n in 0..n_rf {
        let mut absent: Vec<usize> = (0..n_ant).filter(|&m| !c.get(n, m)).collect();
        absent.shuffle(rng);
        let mut need = n_conn.saturating_sub(c.row_sum(n));
        for m in absent {
            if need == 0 {
                break;
            }
            c.set(n, m, true);
            need -= 1;
        }
        if c.row_sum(n) != n_conn {
            return Err(Error::InfeasibleConnection(format!(
                "row {n} cannot reach n_conn={n_conn}"
            )));
        }
    }
    Ok(c)
}

/// Give `receiver` one antenna already linked to `donor`, chosen uniformly at
/// random among those the receiver lacks. When rows already overlap, they
/// share an antenna and no link is spent.
fn add_shared_link<R: Rng + ?Sized>(
    c: &mut ConnectionMatrix,
    receiver: usize,
    donor: usize,
    rng: &mut R,
) -> Result<()> {
    if c.common_antennas(receiver, donor) >= 1 {
        return Ok(());
    }
    let candidates: Vec<usize> = c
        .row_antennas(donor)
        .into_iter()
        .filter(|&m| !c.get(receiver, m))
        .collect();
    match candidates.as_slice() {
        [] => Err(Error::InfeasibleConnection(format!(
            "rows {receiver} and {donor} cannot share an antenna"
        ))),
        list => {
            let m = list[rng.random_range(0..list.len())];
            c.set(receiver, m, true);
            Ok(())
        }
    }
}

/// Grouping of RF chains and antennas into virtual controllers with their
/// bipartite neighbor sets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ControllerPartition {
    /// Disjoint, exhaustive RF index groups, contiguous blocks.
    pub rf_groups: Vec<Vec<usize>>,
    /// Disjoint, exhaustive antenna index groups, contiguous blocks.
    pub ant_groups: Vec<Vec<usize>>,
    /// For each RF group, the antenna groups it links to.
    pub rf_neighbors: Vec<Vec<usize>>,
    /// For each antenna group, the RF groups linking to it.
    pub ant_neighbors: Vec<Vec<usize>>,
}

impl ControllerPartition {
    pub fn n_rf_groups(&self) -> usize {
        self.rf_groups.len()
    }

    pub fn n_ant_groups(&self) -> usize {
        self.ant_groups.len()
    }
}

fn contiguous_blocks(total: usize, group_size: usize) -> Result<Vec<Vec<usize>>> {
    if group_size == 0 || group_size > total {
        return Err(Error::InvalidParameter(format!(
            "group size {group_size} invalid for {total} elements"
        )));
    }
    let n_groups = total / group_size;
    let mut groups = Vec::with_capacity(n_groups);
    for g in 0..n_groups {
        let start = g * group_size;
        let end = if g + 1 == n_groups { total } else { start + group_size };
        groups.push((start..end).collect());
    }
    Ok(groups)
}

/// Split RF chains and antennas into contiguous blocks of the requested
/// sizes (the last block absorbs any remainder) and derive the neighbor sets
/// from the connection pattern.
pub fn partition_controllers(
    c: &ConnectionMatrix,
    n_rf_per_group: usize,
    n_ant_per_group: usize,
) -> Result<ControllerPartition> {
    let rf_groups = contiguous_blocks(c.n_rf(), n_rf_per_group)?;
    let ant_groups = contiguous_blocks(c.n_ant(), n_ant_per_group)?;

    let mut rf_neighbors = vec![Vec::new(); rf_groups.len()];
    let mut ant_neighbors = vec![Vec::new(); ant_groups.len()];
    for (k, rg) in rf_groups.iter().enumerate() {
        for (l, ag) in ant_groups.iter().enumerate() {
            let linked = rg
                .iter()
                .any(|&n| ag.iter().any(|&m| c.get(n, m)));
            if linked {
                rf_neighbors[k].push(l);
                ant_neighbors[l].push(k);
            }
        }
    }
    Ok(ControllerPartition {
        rf_groups,
        ant_groups,
        rf_neighbors,
        ant_neighbors,
    })
}
