//! Chunk grid, per-chunk rates and subcarrier-assignment (SA) schemes.
//!
//! All schemes see uniform power only. Indices are 0-based throughout:
//! users `0..K`, chunks `0..M`, subcarriers `0..N`. Ties in every arg-max or
//! arg-min scan go to the lowest index.

use std::fmt::Write as _;
use std::ops::Range;

use crate::error::{Error, Result};
use crate::metrics;

/// Partition of a band of subcarriers into `M = floor(len / L)` chunks of `L`
/// contiguous subcarriers; the remainder is appended to the last chunk.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChunkGrid {
    total_subcarriers: usize,
    chunk_size: usize,
    chunks: Vec<Range<usize>>,
}

impl ChunkGrid {
    /// Grid over the whole band `0..n`.
    pub fn new(n: usize, chunk_size: usize) -> Result<Self> {
        if chunk_size == 0 || chunk_size > n {
            return Err(Error::InvalidConfig(format!(
                "chunk size {chunk_size} must lie in 1..={n}"
            )));
        }
        Self::over_band(0..n, chunk_size, n)
    }

    /// Grid over a sub-band. A band shorter than one chunk yields no chunks.
    /// `total_subcarriers` is the system-wide `N` used to normalize rates.
    pub fn over_band(band: Range<usize>, chunk_size: usize, total_subcarriers: usize) -> Result<Self> {
        if chunk_size == 0 {
            return Err(Error::InvalidConfig("chunk size must be positive".into()));
        }
        if band.end > total_subcarriers || band.start > band.end {
            return Err(Error::InvalidConfig(format!(
                "band {band:?} does not fit in {total_subcarriers} subcarriers"
            )));
        }
        let count = band.len() / chunk_size;
        let chunks = (0..count)
            .map(|m| {
                let start = band.start + m * chunk_size;
                let end = if m + 1 == count { band.end } else { start + chunk_size };
                start..end
            })
            .collect();
        Ok(Self {
            total_subcarriers,
            chunk_size,
            chunks,
        })
    }

    pub fn chunk_count(&self) -> usize {
        self.chunks.len()
    }

    pub fn chunk_size(&self) -> usize {
        self.chunk_size
    }

    pub fn total_subcarriers(&self) -> usize {
        self.total_subcarriers
    }

    pub fn chunk(&self, m: usize) -> Range<usize> {
        self.chunks[m].clone()
    }

    pub fn chunks(&self) -> &[Range<usize>] {
        &self.chunks
    }

    /// Subcarriers covered by the chunks.
    pub fn covered(&self) -> usize {
        self.chunks.iter().map(|c| c.len()).sum()
    }
}

pub fn build_grid(n: usize, chunk_size: usize) -> Result<ChunkGrid> {
    ChunkGrid::new(n, chunk_size)
}

/// Per-user, per-chunk rates `R[k][m]` and normalized rates `Rbar[k][m]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateTable {
    pub rates: Vec<Vec<f64>>,
    pub normalized: Vec<Vec<f64>>,
}

impl RateTable {
    pub fn new(rates: Vec<Vec<f64>>) -> Self {
        let normalized = normalized_rates(&rates);
        Self { rates, normalized }
    }

    /// Sums per-subcarrier spectral efficiencies `se[k][n]` (bits/s/Hz) over
    /// each chunk and divides by the system subcarrier count.
    pub fn from_spectral_efficiency(se: &[Vec<f64>], grid: &ChunkGrid) -> Self {
        let scale = 1.0 / grid.total_subcarriers() as f64;
        let rates = se
            .iter()
            .map(|row| {
                grid.chunks()
                    .iter()
                    .map(|c| row[c.clone()].iter().sum::<f64>() * scale)
                    .collect()
            })
            .collect();
        Self::new(rates)
    }

    pub fn users(&self) -> usize {
        self.rates.len()
    }

    pub fn chunks(&self) -> usize {
        self.rates.first().map_or(0, Vec::len)
    }
}

/// Rates under a common per-subcarrier power `power`: `gains[k][n]` are
/// per-unit-power SNRs.
pub fn chunk_rates(gains: &[Vec<f64>], grid: &ChunkGrid, power: f64) -> Result<RateTable> {
    if !(power >= 0.0) {
        return Err(Error::InvalidInput(format!("power must be nonnegative, got {power}")));
    }
    let se: Vec<Vec<f64>> = gains
        .iter()
        .map(|row| row.iter().map(|g| (1.0 + power * g).log2()).collect())
        .collect();
    Ok(RateTable::from_spectral_efficiency(&se, grid))
}

/// `Rbar[k][m] = R[k][m] / mean_k' R[k'][m]`. A chunk where every user has
/// zero rate gets `Rbar = 1` for all users.
pub fn normalized_rates(rates: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let users = rates.len();
    let chunks = rates.first().map_or(0, Vec::len);
    let mut out = vec![vec![1.0; chunks]; users];
    for m in 0..chunks {
        let mean = rates.iter().map(|row| row[m]).sum::<f64>() / users as f64;
        if mean > 0.0 {
            for k in 0..users {
                out[k][m] = rates[k][m] / mean;
            }
        }
    }
    out
}

/// Chunk sets per user.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    owner: Vec<usize>,
    chunks: Vec<Vec<usize>>,
}

impl Assignment {
    pub fn from_owner(owner: Vec<usize>, users: usize) -> Result<Self> {
        let mut chunks = vec![Vec::new(); users];
        for (m, &k) in owner.iter().enumerate() {
            if k >= users {
                return Err(Error::InvalidInput(format!(
                    "chunk {m} owned by user {k}, only {users} users"
                )));
            }
            chunks[k].push(m);
        }
        Ok(Self { owner, chunks })
    }

    pub fn users(&self) -> usize {
        self.chunks.len()
    }

    pub fn chunk_count(&self) -> usize {
        self.owner.len()
    }

    pub fn owner(&self, m: usize) -> usize {
        self.owner[m]
    }

    pub fn owners(&self) -> &[usize] {
        &self.owner
    }

    /// Sorted chunk indices of user `k`.
    pub fn user_chunks(&self, k: usize) -> &[usize] {
        &self.chunks[k]
    }

    /// Sorted subcarrier indices of user `k`.
    pub fn subcarriers(&self, k: usize, grid: &ChunkGrid) -> Vec<usize> {
        self.chunks[k]
            .iter()
            .flat_map(|&m| grid.chunk(m))
            .collect()
    }

    pub fn subcarrier_counts(&self, grid: &ChunkGrid) -> Vec<usize> {
        self.chunks
            .iter()
            .map(|set| set.iter().map(|&m| grid.chunk(m).len()).sum())
            .collect()
    }

    /// Sum of table rates over each user's chunks.
    pub fn user_rates(&self, table: &RateTable) -> Vec<f64> {
        self.chunks
            .iter()
            .enumerate()
            .map(|(k, set)| set.iter().map(|&m| table.rates[k][m]).sum())
            .collect()
    }

    /// Every chunk has exactly one owner and the owners cover the grid.
    pub fn check_partition(&self, grid: &ChunkGrid) -> Result<()> {
        if self.owner.len() != grid.chunk_count() {
            return Err(Error::InvalidInput(format!(
                "assignment covers {} chunks, grid has {}",
                self.owner.len(),
                grid.chunk_count()
            )));
        }
        let listed: usize = self.chunks.iter().map(Vec::len).sum();
        if listed != self.owner.len() {
            return Err(Error::InvalidInput("chunk sets overlap".into()));
        }
        let total: usize = self.subcarrier_counts(grid).iter().sum();
        if total != grid.covered() {
            return Err(Error::InvalidInput("subcarrier counts do not add up".into()));
        }
        Ok(())
    }

    /// One line per user: `<user>: <chunk> <chunk> ...`.
    pub fn to_record(&self) -> String {
        let mut out = String::new();
        for (k, set) in self.chunks.iter().enumerate() {
            let _ = write!(out, "{k}:");
            for m in set {
                let _ = write!(out, " {m}");
            }
            out.push('\n');
        }
        out
    }

    pub fn from_record(record: &str) -> Result<Self> {
        let mut sets = Vec::new();
        for (line_no, line) in record.lines().enumerate() {
            let (user, rest) = line
                .split_once(':')
                .ok_or_else(|| Error::InvalidInput(format!("line {}: missing ':'", line_no + 1)))?;
            let user: usize = user
                .trim()
                .parse()
                .map_err(|_| Error::InvalidInput(format!("line {}: bad user", line_no + 1)))?;
            if user != sets.len() {
                return Err(Error::InvalidInput(format!(
                    "line {}: users must be listed in order",
                    line_no + 1
                )));
            }
            let set = rest
                .split_whitespace()
                .map(|t| {
                    t.parse::<usize>()
                        .map_err(|_| Error::InvalidInput(format!("line {}: bad chunk", line_no + 1)))
                })
                .collect::<Result<Vec<_>>>()?;
            sets.push(set);
        }
        let chunks = sets.iter().map(Vec::len).sum();
        let mut owner = vec![usize::MAX; chunks];
        for (k, set) in sets.iter().enumerate() {
            for &m in set {
                if m >= chunks || owner[m] != usize::MAX {
                    return Err(Error::InvalidInput(format!("chunk {m} is not a partition member")));
                }
                owner[m] = k;
            }
        }
        Self::from_owner(owner, sets.len())
    }
}

/// Work done by extremum scans: `candidates` is the total number of entries
/// examined, `comparisons` counts one per entry beyond the first of each scan.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ScanCost {
    pub candidates: u64,
    pub comparisons: u64,
}

impl ScanCost {
    fn record(&mut self, scanned: usize) {
        if scanned > 0 {
            self.candidates += scanned as u64;
            self.comparisons += scanned as u64 - 1;
        }
    }

    pub fn total(self, other: ScanCost) -> ScanCost {
        ScanCost {
            candidates: self.candidates + other.candidates,
            comparisons: self.comparisons + other.comparisons,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PhaseCost {
    /// Arg-max scans over remaining chunks.
    pub chunk_scans: ScanCost,
    /// Arg-min scans over users.
    pub user_scans: ScanCost,
}

impl PhaseCost {
    pub fn total(self) -> ScanCost {
        self.chunk_scans.total(self.user_scans)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ComparisonCount {
    /// One chunk per user.
    pub initial: PhaseCost,
    /// Remaining chunks.
    pub remaining: PhaseCost,
}

impl ComparisonCount {
    pub fn total(self) -> ScanCost {
        self.initial.total().total(self.remaining.total())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SaOutcome {
    pub assignment: Assignment,
    /// Accumulated `R_k` over assigned chunks.
    pub rates: Vec<f64>,
    pub comparisons: ComparisonCount,
}

fn check_sa_inputs(users: usize, chunks: usize, weights: &[f64]) -> Result<()> {
    if users == 0 {
        return Err(Error::InvalidInput("no users".into()));
    }
    if chunks < users {
        return Err(Error::Infeasible(format!("{chunks} chunks for {users} users")));
    }
    if weights.len() != users {
        return Err(Error::InvalidInput(format!(
            "{} weights for {users} users",
            weights.len()
        )));
    }
    if let Some(w) = weights.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
        return Err(Error::InvalidInput(format!("rate weight {w} is not positive")));
    }
    Ok(())
}

fn argmax<I, F>(candidates: I, key: F, cost: &mut ScanCost) -> usize
where
    I: Iterator<Item = usize>,
    F: Fn(usize) -> f64,
{
    let mut best = usize::MAX;
    let mut best_key = f64::NEG_INFINITY;
    let mut scanned = 0;
    for c in candidates {
        let v = key(c);
        if scanned == 0 || v > best_key {
            best = c;
            best_key = v;
        }
        scanned += 1;
    }
    cost.record(scanned);
    best
}

fn argmin<I, F>(candidates: I, key: F, cost: &mut ScanCost) -> usize
where
    I: Iterator<Item = usize>,
    F: Fn(usize) -> f64,
{
    argmax(candidates, |c| -key(c), cost)
}

struct Greedy<'a> {
    table: &'a RateTable,
    weights: &'a [f64],
    free: Vec<bool>,
    owner: Vec<usize>,
    accumulated: Vec<f64>,
    cost: ComparisonCount,
}

impl<'a> Greedy<'a> {
    fn new(table: &'a RateTable, weights: &'a [f64]) -> Self {
        let chunks = table.chunks();
        Self {
            table,
            weights,
            free: vec![true; chunks],
            owner: vec![usize::MAX; chunks],
            accumulated: vec![0.0; table.users()],
            cost: ComparisonCount::default(),
        }
    }

    fn free_chunks(&self) -> impl Iterator<Item = usize> + '_ {
        self.free
            .iter()
            .enumerate()
            .filter_map(|(m, &f)| f.then_some(m))
    }

    fn give(&mut self, k: usize, m: usize) {
        debug_assert!(self.free[m]);
        self.free[m] = false;
        self.owner[m] = k;
        self.accumulated[k] += self.table.rates[k][m];
    }

    /// Until no chunk is left, the user with the smallest `R_k / gamma_k`
    /// takes its best remaining chunk under `score`.
    fn fill_remaining(&mut self, score: &[Vec<f64>]) {
        let users = self.table.users();
        while self.free.iter().any(|&f| f) {
            let acc = &self.accumulated;
            let weights = self.weights;
            let k = argmin(0..users, |k| acc[k] / weights[k], &mut self.cost.remaining.user_scans);
            let mut chunk_cost = self.cost.remaining.chunk_scans;
            let m = argmax(self.free_chunks(), |m| score[k][m], &mut chunk_cost);
            self.cost.remaining.chunk_scans = chunk_cost;
            self.give(k, m);
        }
    }

    fn finish(self) -> SaOutcome {
        let users = self.table.users();
        let assignment = Assignment::from_owner(self.owner, users)
            .expect("greedy assigns every chunk to a valid user");
        SaOutcome {
            assignment,
            rates: self.accumulated,
            comparisons: self.cost,
        }
    }
}

/// Proposed SA on normalized rates.
///
/// First phase: while some user has no chunk, every such user registers its
/// best remaining chunk by `Rbar`, and the user whose registered
/// `Rbar / gamma` is smallest takes it. Second phase: the user with the
/// smallest `R_k / gamma_k` takes its best remaining chunk by `Rbar`.
pub fn proposed_sa(table: &RateTable, weights: &[f64]) -> Result<SaOutcome> {
    check_sa_inputs(table.users(), table.chunks(), weights)?;
    let users = table.users();
    let score = &table.normalized;
    let mut g = Greedy::new(table, weights);
    let mut pending: Vec<usize> = (0..users).collect();
    while !pending.is_empty() {
        let mut chunk_cost = g.cost.initial.chunk_scans;
        let registered: Vec<usize> = pending
            .iter()
            .map(|&k| argmax(g.free_chunks(), |m| score[k][m], &mut chunk_cost))
            .collect();
        g.cost.initial.chunk_scans = chunk_cost;
        let pick = argmin(
            0..pending.len(),
            |i| score[pending[i]][registered[i]] / weights[pending[i]],
            &mut g.cost.initial.user_scans,
        );
        let k = pending.remove(pick);
        g.give(k, registered[pick]);
    }
    g.fill_remaining(score);
    Ok(g.finish())
}

/// Chunk version of the serial greedy SA: users in index order each take
/// their best remaining chunk by raw rate, then the user with the smallest
/// `R_k / gamma_k` repeatedly takes its best remaining chunk by raw rate.
/// With one-subcarrier chunks this is the per-subcarrier original.
pub fn shen_sa(table: &RateTable, weights: &[f64]) -> Result<SaOutcome> {
    check_sa_inputs(table.users(), table.chunks(), weights)?;
    let score = &table.rates;
    let mut g = Greedy::new(table, weights);
    for k in 0..table.users() {
        let mut chunk_cost = g.cost.initial.chunk_scans;
        let m = argmax(g.free_chunks(), |m| score[k][m], &mut chunk_cost);
        g.cost.initial.chunk_scans = chunk_cost;
        g.give(k, m);
    }
    g.fill_remaining(score);
    Ok(g.finish())
}

/// Channel-independent round-robin: chunk `m` goes to user `m mod K`.
pub fn static_sa(users: usize, grid: &ChunkGrid) -> Result<Assignment> {
    if users == 0 {
        return Err(Error::InvalidInput("no users".into()));
    }
    if grid.chunk_count() < users {
        return Err(Error::Infeasible(format!(
            "{} chunks for {users} users",
            grid.chunk_count()
        )));
    }
    Assignment::from_owner((0..grid.chunk_count()).map(|m| m % users).collect(), users)
}

pub const DEFAULT_ORACLE_CAP: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleOutcome {
    pub assignment: Assignment,
    pub rates: Vec<f64>,
    pub sum_rate: f64,
    pub deviation: Option<f64>,
    /// Assignments evaluated.
    pub evaluated: u64,
}

/// Exhaustive SA search.
///
/// Enumerates every owner vector in lexicographic order, keeps those giving
/// each user at least one chunk, and runs `evaluate` (a power allocation
/// followed by a rate evaluation) on each. The winner maximizes the sum rate;
/// near-equal sums (relative 1e-12) go to the smaller rate-constraint
/// deviation, then to the lexicographically first owner vector. Candidates
/// for which `evaluate` fails are skipped.
pub fn exhaustive_sa_oracle<F>(
    users: usize,
    chunks: usize,
    weights: &[f64],
    cap: u64,
    mut evaluate: F,
) -> Result<OracleOutcome>
where
    F: FnMut(&Assignment) -> Result<Vec<f64>>,
{
    check_sa_inputs(users, chunks, weights)?;
    let candidates = (users as u128).checked_pow(chunks as u32).unwrap_or(u128::MAX);
    if candidates > u128::from(cap) {
        return Err(Error::OracleTooLarge { candidates, cap });
    }

    let mut owner = vec![0usize; chunks];
    let mut best: Option<OracleOutcome> = None;
    let mut evaluated = 0u64;
    loop {
        let mut used = vec![false; users];
        owner.iter().for_each(|&k| used[k] = true);
        if used.iter().all(|&u| u) {
            let assignment = Assignment::from_owner(owner.clone(), users)?;
            if let Ok(rates) = evaluate(&assignment) {
                evaluated += 1;
                let sum_rate: f64 = rates.iter().sum();
                let deviation = metrics::deviation(&rates, weights).ok();
                let better = match &best {
                    None => true,
                    Some(b) => {
                        let tol = 1e-12 * b.sum_rate.abs().max(f64::MIN_POSITIVE);
                        if sum_rate > b.sum_rate + tol {
                            true
                        } else if sum_rate >= b.sum_rate - tol {
                            match (deviation, b.deviation) {
                                (Some(d), Some(bd)) => d < bd - 1e-12,
                                (Some(_), None) => true,
                                _ => false,
                            }
                        } else {
                            false
                        }
                    }
                };
                if better {
                    best = Some(OracleOutcome {
                        assignment,
                        rates,
                        sum_rate,
                        deviation,
                        evaluated: 0,
                    });
                }
            }
        }
        // Odometer step, last chunk fastest.
        let mut pos = chunks;
        loop {
            if pos == 0 {
                let mut out = best.ok_or_else(|| {
                    Error::OracleFailure("no candidate assignment could be evaluated".into())
                })?;
                out.evaluated = evaluated;
                return Ok(out);
            }
            pos -= 1;
            owner[pos] += 1;
            if owner[pos] < users {
                break;
            }
            owner[pos] = 0;
        }
    }
}
