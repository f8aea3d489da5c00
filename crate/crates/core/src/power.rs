//! Power allocation (PA) for a fixed chunk assignment.
//!
//! Every scheme here water-fills inside each user's subcarrier set, so the
//! optimal per-subcarrier powers of user `k` satisfy
//!
//! ```text
//!   p_(n) = p_(1) + (G_(n) - G_(1)) / (G_(n) G_(1))        (gains ascending)
//!   P_k   = N_k p_(1) + V_k
//! ```
//!
//! The schemes differ in how the total power is split into per-user budgets
//! `P_k`:
//!
//! * [`proposed_pa`] linearizes `log2(1 + x) ~ x log2(e)`, which turns the
//!   proportional-rate conditions into a `K x K` linear system with a closed
//!   form solution. Negative budgets are repaired by pooling the smallest
//!   ones, and subcarriers a budget cannot keep nonnegative are pruned.
//! * [`uniform_pa`] gives `P_T / N` to every subcarrier.
//! * [`exact_pa_oracle`] solves the nonlinear proportional-rate conditions
//!   exactly by bisection on the common rate level.

use std::fmt::Write as _;

use crate::assignment::{Assignment, ChunkGrid};
use crate::error::{Error, Result};

/// One user's usable subcarriers sorted by ascending gain (ties by index).
/// Zero-gain subcarriers are dropped since they can never carry power.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderedGains {
    user: usize,
    subcarriers: Vec<usize>,
    gains: Vec<f64>,
}

impl OrderedGains {
    /// `gains` is the user's full per-subcarrier gain vector; only the
    /// entries listed in `subcarriers` are used.
    pub fn new(user: usize, subcarriers: &[usize], gains: &[f64]) -> Self {
        let mut pairs: Vec<(usize, f64)> = subcarriers
            .iter()
            .map(|&n| (n, gains[n]))
            .filter(|&(_, g)| g > 0.0)
            .collect();
        pairs.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        Self {
            user,
            subcarriers: pairs.iter().map(|p| p.0).collect(),
            gains: pairs.iter().map(|p| p.1).collect(),
        }
    }

    /// Gains for subcarriers `0..values.len()`.
    pub fn from_values(user: usize, values: &[f64]) -> Self {
        let all: Vec<usize> = (0..values.len()).collect();
        Self::new(user, &all, values)
    }

    pub fn user(&self) -> usize {
        self.user
    }

    pub fn len(&self) -> usize {
        self.gains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gains.is_empty()
    }

    pub fn gains(&self) -> &[f64] {
        &self.gains
    }

    pub fn subcarriers(&self) -> &[usize] {
        &self.subcarriers
    }

    pub fn coefficients(&self) -> Result<WaterfillCoefficients> {
        waterfill_coefficients(self.user, &self.gains)
    }
}

/// Water-filling constants of one user's active set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaterfillCoefficients {
    /// `N_k`, active subcarriers.
    pub active: usize,
    /// `G_(1)`, weakest active gain.
    pub weakest: f64,
    /// `V_k = sum_{n>=2} (G_(n) - G_(1)) / (G_(n) G_(1))`.
    pub v: f64,
    /// `E_k = sum_n G_(n) / G_(1)`.
    pub e: f64,
    /// `ln W_k = (1/N_k) sum_{n>=2} ln(G_(n) / G_(1))`.
    pub ln_w: f64,
}

impl WaterfillCoefficients {
    pub fn w(&self) -> f64 {
        self.ln_w.exp()
    }
}

/// Coefficients of an ascending gain list. `user` only labels errors.
pub fn waterfill_coefficients(user: usize, ascending: &[f64]) -> Result<WaterfillCoefficients> {
    let &weakest = ascending.first().ok_or(Error::EmptyUser { user })?;
    if !(weakest > 0.0) {
        return Err(Error::ZeroGainSubcarrier { user });
    }
    debug_assert!(ascending.windows(2).all(|w| w[0] <= w[1]));
    let mut v = 0.0;
    let mut e = 1.0;
    let mut ln_sum = 0.0;
    for &g in &ascending[1..] {
        v += (g - weakest) / (g * weakest);
        e += g / weakest;
        ln_sum += (g / weakest).ln();
    }
    Ok(WaterfillCoefficients {
        active: ascending.len(),
        weakest,
        v,
        e,
        ln_w: ln_sum / ascending.len() as f64,
    })
}

/// Row `k` (for users `k >= 1`) of the linear budget system
/// `P_1 + alpha_k P_k = beta_k`; the first row is `sum_k P_k = P_T`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitRow {
    pub alpha: f64,
    pub beta: f64,
}

/// Rows for users `1..K` from the low-SNR proportional-rate conditions,
/// anchored at user 0.
pub fn linear_coefficients(coeffs: &[WaterfillCoefficients], weights: &[f64]) -> Result<Vec<SplitRow>> {
    if coeffs.len() != weights.len() {
        return Err(Error::InvalidInput(format!(
            "{} users but {} weights",
            coeffs.len(),
            weights.len()
        )));
    }
    let Some(first) = coeffs.first() else {
        return Err(Error::InvalidInput("no users".into()));
    };
    let (g1, e1, n1, v1) = (first.weakest, first.e, first.active as f64, first.v);
    let w1 = weights[0];
    Ok(coeffs
        .iter()
        .zip(weights)
        .skip(1)
        .map(|(c, &wk)| {
            let (gk, ek, nk, vk) = (c.weakest, c.e, c.active as f64, c.v);
            // gamma_1 E_k N_1 / (gamma_k E_1 G_1)
            let lead = w1 * ek * n1 / (wk * e1 * g1);
            let alpha = -lead * gk / nk;
            let beta = lead - w1 * n1 * nk / (wk * e1 * g1) - lead * gk / nk * vk
                + n1 / g1 * (n1 / e1 - 1.0)
                + v1;
            SplitRow { alpha, beta }
        })
        .collect())
}

/// Closed-form solution of the arrowhead system
///
/// ```text
///   P_1 = (P_T - sum beta_k / alpha_k) / (1 - sum 1 / alpha_k)
///   P_k = (beta_k - P_1) / alpha_k
/// ```
pub fn solve_power_split(rows: &[SplitRow], total_power: f64) -> Result<Vec<f64>> {
    let inv_sum: f64 = rows.iter().map(|r| 1.0 / r.alpha).sum();
    let ratio_sum: f64 = rows.iter().map(|r| r.beta / r.alpha).sum();
    let inv_abs: f64 = rows.iter().map(|r| (1.0 / r.alpha).abs()).sum();
    let denom = 1.0 - inv_sum;
    if !denom.is_finite() || denom.abs() <= 1e-12 * (1.0 + inv_abs) {
        return Err(Error::SingularSplit);
    }
    let first = (total_power - ratio_sum) / denom;
    let mut budgets = Vec::with_capacity(rows.len() + 1);
    budgets.push(first);
    budgets.extend(rows.iter().map(|r| (r.beta - first) / r.alpha));
    Ok(budgets)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Repair {
    pub budgets: Vec<f64>,
    /// Users whose budget was replaced by the pooled share.
    pub group: Vec<usize>,
}

/// Pools the smallest budgets when any is negative.
///
/// Budgets are visited in ascending order (ties by user index) and the group
/// grows until its partial sum is nonnegative; each member then gets the
/// group mean. The total is preserved.
pub fn repair_negative_budgets(budgets: &[f64]) -> Repair {
    if budgets.iter().all(|&b| b >= 0.0) {
        return Repair {
            budgets: budgets.to_vec(),
            group: Vec::new(),
        };
    }
    let mut order: Vec<usize> = (0..budgets.len()).collect();
    order.sort_by(|&a, &b| budgets[a].total_cmp(&budgets[b]).then(a.cmp(&b)));
    let mut size = 1;
    let mut pooled = budgets[order[0]];
    while pooled < 0.0 && size < order.len() {
        pooled += budgets[order[size]];
        size += 1;
    }
    let share = (pooled / size as f64).max(0.0);
    let mut out = budgets.to_vec();
    let mut group: Vec<usize> = order[..size].to_vec();
    for &k in &group {
        out[k] = share;
    }
    group.sort_unstable();
    Repair { budgets: out, group }
}

/// Water-filling of one user's budget over its ordered gains.
#[derive(Debug, Clone, PartialEq)]
pub struct Waterfill {
    /// Powers aligned with [`OrderedGains::gains`]; pruned entries are zero.
    pub powers: Vec<f64>,
    /// Weakest subcarriers dropped from the active set.
    pub pruned: usize,
    /// Budget was zero, so nothing is transmitted.
    pub silent: bool,
}

impl Waterfill {
    pub fn active(&self) -> usize {
        self.powers.len() - self.pruned
    }
}

/// Drops the weakest subcarrier while the budget is below `V_k`, then fills.
pub fn prune_and_waterfill(budget: f64, ordered: &OrderedGains) -> Result<Waterfill> {
    if !(budget >= 0.0) {
        return Err(Error::InvalidInput(format!("budget must be nonnegative, got {budget}")));
    }
    let gains = ordered.gains();
    let mut start = 0;
    let coeffs = loop {
        let c = waterfill_coefficients(ordered.user(), &gains[start..])?;
        if budget >= c.v || c.active == 1 {
            break c;
        }
        start += 1;
    };
    let base = (budget - coeffs.v) / coeffs.active as f64;
    let g1 = coeffs.weakest;
    let mut powers = vec![0.0; gains.len()];
    for (p, &g) in powers[start..].iter_mut().zip(&gains[start..]) {
        *p = base + (g - g1) / (g * g1);
    }
    Ok(Waterfill {
        powers,
        pruned: start,
        silent: budget == 0.0,
    })
}

/// Per-user budgets and per-subcarrier powers.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerAllocation {
    pub budgets: Vec<f64>,
    /// Indexed by subcarrier over the whole system band; the owner of each
    /// subcarrier follows from the assignment.
    pub powers: Vec<f64>,
    /// Subcarriers with positive power, per user, ascending.
    pub active: Vec<Vec<usize>>,
    /// Budgets before repair (the linear solution for [`proposed_pa`]).
    pub solved_budgets: Vec<f64>,
    pub repaired: Vec<bool>,
    pub pruned: Vec<usize>,
    /// The linear split was singular and budgets fell back to weight shares.
    pub fallback: bool,
}

impl PowerAllocation {
    pub fn total_power(&self) -> f64 {
        self.powers.iter().sum()
    }

    /// Repair or pruning changed this user's budget or active set.
    pub fn adjusted(&self, k: usize) -> bool {
        self.repaired[k] || self.pruned[k] > 0
    }

    pub fn any_adjusted(&self) -> bool {
        (0..self.budgets.len()).any(|k| self.adjusted(k))
    }

    /// `R_k = (1/N) sum_{n in Omega_k} log2(1 + p_n G[k][n])`.
    pub fn user_rates(&self, assignment: &Assignment, grid: &ChunkGrid, gains: &[Vec<f64>]) -> Vec<f64> {
        let scale = 1.0 / grid.total_subcarriers() as f64;
        (0..assignment.users())
            .map(|k| {
                assignment
                    .subcarriers(k, grid)
                    .into_iter()
                    .map(|n| (1.0 + self.powers[n] * gains[k][n]).log2())
                    .sum::<f64>()
                    * scale
            })
            .collect()
    }

    /// One line per user: `<user> budget=<P_k> active=<n,...> powers=<p,...>`.
    pub fn to_record(&self) -> String {
        let mut out = String::new();
        for (k, active) in self.active.iter().enumerate() {
            let _ = write!(out, "{k} budget={:.12e} active=", self.budgets[k]);
            let idx: Vec<String> = active.iter().map(|n| n.to_string()).collect();
            out.push_str(&idx.join(","));
            out.push_str(" powers=");
            let p: Vec<String> = active.iter().map(|&n| format!("{:.12e}", self.powers[n])).collect();
            out.push_str(&p.join(","));
            out.push('\n');
        }
        out
    }

    fn check_invariants(&self, total_power: f64) {
        debug_assert!(self.powers.iter().all(|&p| p >= 0.0), "negative power");
        debug_assert!(
            (self.total_power() - total_power).abs() <= 1e-9 * total_power,
            "power not conserved: {} vs {total_power}",
            self.total_power()
        );
    }
}

fn ordered_users(assignment: &Assignment, grid: &ChunkGrid, gains: &[Vec<f64>]) -> Result<Vec<OrderedGains>> {
    if gains.len() != assignment.users() {
        return Err(Error::InvalidInput(format!(
            "{} gain rows for {} users",
            gains.len(),
            assignment.users()
        )));
    }
    (0..assignment.users())
        .map(|k| {
            let og = OrderedGains::new(k, &assignment.subcarriers(k, grid), &gains[k]);
            if og.is_empty() {
                Err(Error::EmptyUser { user: k })
            } else {
                Ok(og)
            }
        })
        .collect()
}

fn assemble(
    ordered: &[OrderedGains],
    budgets: Vec<f64>,
    solved_budgets: Vec<f64>,
    repaired: Vec<bool>,
    fallback: bool,
    subcarriers: usize,
) -> Result<PowerAllocation> {
    let mut powers = vec![0.0; subcarriers];
    let mut active = Vec::with_capacity(ordered.len());
    let mut pruned = Vec::with_capacity(ordered.len());
    for (og, &budget) in ordered.iter().zip(&budgets) {
        let fill = prune_and_waterfill(budget, og)?;
        let mut on = Vec::with_capacity(fill.active());
        for (&n, &p) in og.subcarriers().iter().zip(&fill.powers) {
            powers[n] = p;
            if p > 0.0 {
                on.push(n);
            }
        }
        on.sort_unstable();
        active.push(on);
        pruned.push(fill.pruned);
    }
    Ok(PowerAllocation {
        budgets,
        powers,
        active,
        solved_budgets,
        repaired,
        pruned,
        fallback,
    })
}

fn check_pa_inputs(weights: &[f64], users: usize, total_power: f64) -> Result<()> {
    if weights.len() != users {
        return Err(Error::InvalidInput(format!("{} weights for {users} users", weights.len())));
    }
    if weights.iter().any(|w| !(*w > 0.0)) {
        return Err(Error::InvalidInput("rate weights must be positive".into()));
    }
    if !(total_power > 0.0) {
        return Err(Error::InvalidInput(format!("total power must be positive, got {total_power}")));
    }
    Ok(())
}

/// Low-SNR linearized PA.
pub fn proposed_pa(
    assignment: &Assignment,
    grid: &ChunkGrid,
    gains: &[Vec<f64>],
    weights: &[f64],
    total_power: f64,
) -> Result<PowerAllocation> {
    check_pa_inputs(weights, assignment.users(), total_power)?;
    let ordered = ordered_users(assignment, grid, gains)?;
    let coeffs = ordered
        .iter()
        .map(OrderedGains::coefficients)
        .collect::<Result<Vec<_>>>()?;

    let mut fallback = false;
    let solved = if coeffs.len() == 1 {
        vec![total_power]
    } else {
        let rows = linear_coefficients(&coeffs, weights)?;
        match solve_power_split(&rows, total_power) {
            Ok(b) => b,
            Err(Error::SingularSplit) => {
                fallback = true;
                let wsum: f64 = weights.iter().sum();
                weights.iter().map(|w| total_power * w / wsum).collect()
            }
            Err(e) => return Err(e),
        }
    };
    let repair = repair_negative_budgets(&solved);
    let mut repaired = vec![false; solved.len()];
    for &k in &repair.group {
        repaired[k] = true;
    }
    let pa = assemble(&ordered, repair.budgets, solved, repaired, fallback, grid.total_subcarriers())?;
    pa.check_invariants(total_power);
    Ok(pa)
}

/// `P_T / N` on every subcarrier covered by the grid.
pub fn uniform_pa(assignment: &Assignment, grid: &ChunkGrid, total_power: f64) -> PowerAllocation {
    let n = grid.total_subcarriers();
    let per = total_power / n as f64;
    let mut powers = vec![0.0; n];
    let mut active = Vec::with_capacity(assignment.users());
    let mut budgets = Vec::with_capacity(assignment.users());
    for k in 0..assignment.users() {
        let set = assignment.subcarriers(k, grid);
        for &s in &set {
            powers[s] = per;
        }
        budgets.push(per * set.len() as f64);
        active.push(if per > 0.0 { set } else { Vec::new() });
    }
    let users = assignment.users();
    PowerAllocation {
        solved_budgets: budgets.clone(),
        budgets,
        powers,
        active,
        repaired: vec![false; users],
        pruned: vec![0; users],
        fallback: false,
    }
}

const ORACLE_DOUBLINGS: usize = 200;
const ORACLE_BISECTIONS: usize = 200;

/// Budget user `og` needs to reach the common level `level`, i.e. the `P_k`
/// solving `(N_k / gamma_k) (log2(1 + G_(1) (P_k - V_k) / N_k) + log2 W_k) = level`,
/// pruning the weakest subcarrier while the fill would go negative.
fn budget_for_level(og: &OrderedGains, weight: f64, level: f64) -> Result<f64> {
    let gains = og.gains();
    let mut start = 0;
    loop {
        let c = waterfill_coefficients(og.user(), &gains[start..])?;
        let n = c.active as f64;
        let exponent = weight * level / n - c.ln_w / std::f64::consts::LN_2;
        let base = (exponent.exp2() - 1.0) / c.weakest;
        if base >= 0.0 || c.active == 1 {
            return Ok(c.v + n * base.max(0.0));
        }
        start += 1;
    }
}

/// Exact proportional-rate PA by bisection on the common rate level.
///
/// Each user's budget is strictly increasing in the level, so the level
/// where the budgets sum to `total_power` is bracketed by doubling from 1 and
/// then bisected until the sum matches to `1e-12` relative.
pub fn exact_pa_oracle(
    assignment: &Assignment,
    grid: &ChunkGrid,
    gains: &[Vec<f64>],
    weights: &[f64],
    total_power: f64,
) -> Result<PowerAllocation> {
    check_pa_inputs(weights, assignment.users(), total_power)?;
    let ordered = ordered_users(assignment, grid, gains)?;
    let budgets_at = |level: f64| -> Result<Vec<f64>> {
        ordered
            .iter()
            .zip(weights)
            .map(|(og, &w)| budget_for_level(og, w, level))
            .collect()
    };
    let excess = |b: &[f64]| b.iter().sum::<f64>() - total_power;
    let tol = 1e-12 * total_power;

    let mut lo = 0.0;
    let mut hi = 1.0;
    let mut doublings = 0;
    while excess(&budgets_at(hi)?) <= 0.0 {
        lo = hi;
        hi *= 2.0;
        doublings += 1;
        if doublings > ORACLE_DOUBLINGS {
            return Err(Error::OracleFailure("could not bracket the rate level".into()));
        }
    }
    let mut best: Option<(f64, Vec<f64>)> = None;
    for _ in 0..ORACLE_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        let b = budgets_at(mid)?;
        let f = excess(&b);
        if best.as_ref().is_none_or(|(bf, _)| f.abs() < bf.abs()) {
            best = Some((f, b));
        }
        if f.abs() <= tol || mid <= lo || mid >= hi {
            break;
        }
        if f < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (f, budgets) = best.expect("at least one bisection step");
    if f.abs() > tol {
        return Err(Error::OracleFailure(format!(
            "budget sum off by {f:e} after {ORACLE_BISECTIONS} bisections"
        )));
    }
    let users = budgets.len();
    let pa = assemble(&ordered, budgets.clone(), budgets, vec![false; users], false, grid.total_subcarriers())?;
    pa.check_invariants(total_power);
    Ok(pa)
}
