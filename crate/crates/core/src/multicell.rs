//! Two-tier 19-cell network with fractional frequency reuse (FFR).
//!
//! Cell numbers are 1-based as in the usual cell diagrams: cell 1 is the
//! serving cell at the origin, cells 2-7 form the first tier at distance `D`
//! and cells 8-19 the second tier. Even second-tier cells (8, 10, .., 18)
//! sit between two first-tier cells at `sqrt(3) D`; odd ones sit on the
//! corners at `2 D`.
//!
//! The band is split into a centre band F1 reused by every cell and `FRF`
//! disjoint edge bands. With `FRF = 3` the edge bands are coloured so that
//! no two adjacent cells share one, which leaves exactly the six `sqrt(3) D`
//! cells on cell 1's edge band.
//!
//! SINR follows the usual reduced-form approximation: interferers are
//! attenuated by the path loss over the base-station to base-station
//! distance, and every base station transmits `P_T / N` on each subcarrier.

use std::f64::consts::PI;
use std::ops::Range;

use rand::Rng;

use crate::assignment::{
    exhaustive_sa_oracle, proposed_sa, shen_sa, static_sa, Assignment, ChunkGrid, RateTable,
};
use crate::channel::{ChannelRealization, ResponseEngine};
use crate::error::{Error, Result};
use crate::rng::{substream, Purpose, StreamId};

pub const CELLS: usize = 19;

/// Cells sharing cell 1's edge band under `FRF = 3`.
pub const EDGE_INTERFERERS: [usize; 6] = [8, 10, 12, 14, 16, 18];

#[derive(Debug, Clone, PartialEq)]
pub struct HexLayout {
    pub cell_radius_km: f64,
    pub intercell_distance_km: f64,
    centers: [(f64, f64); CELLS],
}

impl HexLayout {
    /// Center of cell `cell` (1-based), in km.
    pub fn center(&self, cell: usize) -> (f64, f64) {
        self.centers[cell - 1]
    }

    /// Distance from base station `cell` to base station 1, in km.
    pub fn distance_to_serving(&self, cell: usize) -> f64 {
        let (x, y) = self.center(cell);
        x.hypot(y)
    }

    pub fn distance(&self, a: usize, b: usize) -> f64 {
        let (ax, ay) = self.center(a);
        let (bx, by) = self.center(b);
        (ax - bx).hypot(ay - by)
    }

    /// Cells whose centers are one intercell distance apart.
    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        a != b && (self.distance(a, b) - self.intercell_distance_km).abs() < 1e-9 * self.intercell_distance_km
    }
}

pub fn build_layout(cell_radius_km: f64, intercell_distance_km: f64) -> Result<HexLayout> {
    if !(cell_radius_km > 0.0 && intercell_distance_km > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "cell radius {cell_radius_km} and intercell distance {intercell_distance_km} must be positive"
        )));
    }
    let d = intercell_distance_km;
    let unit = |j: usize| {
        let a = PI / 3.0 * (j % 6) as f64;
        (a.cos(), a.sin())
    };
    let mut centers = [(0.0, 0.0); CELLS];
    for j in 0..6 {
        let (ux, uy) = unit(j);
        let (vx, vy) = unit(j + 1);
        centers[1 + j] = (d * ux, d * uy);
        centers[7 + 2 * j] = (d * (ux + vx), d * (uy + vy));
        centers[8 + 2 * j] = (2.0 * d * vx, 2.0 * d * vy);
    }
    Ok(HexLayout {
        cell_radius_km,
        intercell_distance_km,
        centers,
    })
}

/// `128.1 + 37.6 log10(d)` dB, `d` in km.
pub fn path_loss_db(distance_km: f64) -> Result<f64> {
    if !(distance_km > 0.0) {
        return Err(Error::InvalidInput(format!("distance must be positive, got {distance_km}")));
    }
    Ok(128.1 + 37.6 * distance_km.log10())
}

/// Linear power attenuation `10^(-PL/10)`.
pub fn path_gain(distance_km: f64) -> Result<f64> {
    Ok(10f64.powf(-0.1 * path_loss_db(distance_km)?))
}

/// SNR gap for a target bit error rate: `-1.5 / ln(5 BER)`.
pub fn snr_gap(ber: f64) -> Result<f64> {
    if !(ber > 0.0 && ber < 0.2) {
        return Err(Error::InvalidConfig(format!("target BER {ber} must lie in (0, 0.2)")));
    }
    Ok(-1.5 / (5.0 * ber).ln())
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Group {
    Centre,
    Edge,
}

impl Group {
    pub fn label(self) -> &'static str {
        match self {
            Group::Centre => "centre",
            Group::Edge => "edge",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserPlacement {
    pub distance_km: f64,
    pub angle: f64,
    pub group: Group,
}

impl UserPlacement {
    pub fn at(distance_km: f64, angle: f64, centre_radius_km: f64) -> Self {
        let group = if distance_km <= centre_radius_km { Group::Centre } else { Group::Edge };
        Self {
            distance_km,
            angle,
            group,
        }
    }
}

/// Uniform positions over the disc of radius `cell_radius_km` around base
/// station 1.
pub fn place_users<R: Rng + ?Sized>(
    count: usize,
    cell_radius_km: f64,
    centre_radius_km: f64,
    rng: &mut R,
) -> Vec<UserPlacement> {
    (0..count)
        .map(|_| {
            // (0, 1], so no user sits on the base station.
            let u: f64 = 1.0 - rng.random::<f64>();
            let angle = 2.0 * PI * rng.random::<f64>();
            UserPlacement::at(cell_radius_km * u.sqrt(), angle, centre_radius_km)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct FfrPlan {
    pub subcarriers: usize,
    pub chunk_size: usize,
    pub frf: usize,
    /// `N_cc = ceil(N (tau/R)^2)`.
    pub centre_subcarriers: usize,
    /// `N_ce = floor((N - N_cc) / FRF)`.
    pub edge_subcarriers: usize,
    pub centre_chunks: usize,
    pub edge_chunks: usize,
    pub centre_band: Range<usize>,
    pub edge_bands: Vec<Range<usize>>,
    /// Edge-band index used by each cell, indexed by `cell - 1`.
    pub cell_edge_band: [usize; CELLS],
}

impl FfrPlan {
    pub fn centre_grid(&self) -> Result<ChunkGrid> {
        ChunkGrid::over_band(self.centre_band.clone(), self.chunk_size, self.subcarriers)
    }

    pub fn edge_band(&self, cell: usize) -> Range<usize> {
        self.edge_bands[self.cell_edge_band[cell - 1]].clone()
    }

    pub fn edge_grid(&self, cell: usize) -> Result<ChunkGrid> {
        ChunkGrid::over_band(self.edge_band(cell), self.chunk_size, self.subcarriers)
    }

    /// Other cells transmitting on `cell`'s edge band.
    pub fn edge_interferers(&self, cell: usize) -> Vec<usize> {
        let band = self.cell_edge_band[cell - 1];
        (1..=CELLS)
            .filter(|&c| c != cell && self.cell_edge_band[c - 1] == band)
            .collect()
    }
}

/// Splits `N` subcarriers into a centre band sized by the centre-area share
/// and `FRF` equal edge bands, then colours the cells' edge bands.
pub fn band_partition(
    subcarriers: usize,
    chunk_size: usize,
    centre_radius_km: f64,
    cell_radius_km: f64,
    frf: usize,
) -> Result<FfrPlan> {
    if !(cell_radius_km > 0.0) || !(0.0..=cell_radius_km).contains(&centre_radius_km) {
        return Err(Error::InvalidConfig(format!(
            "centre radius {centre_radius_km} must lie in [0, {cell_radius_km}]"
        )));
    }
    if chunk_size == 0 {
        return Err(Error::InvalidConfig("chunk size must be positive".into()));
    }
    let cell_edge_band = match frf {
        1 => [0; CELLS],
        3 => frf3_colouring(),
        _ => {
            return Err(Error::InvalidConfig(format!(
                "edge-band colouring supports FRF 1 or 3, got {frf}"
            )))
        }
    };
    let ratio = centre_radius_km / cell_radius_km;
    let centre = ((subcarriers as f64 * ratio * ratio).ceil() as usize).min(subcarriers);
    let edge = (subcarriers - centre) / frf;
    let edge_bands = (0..frf)
        .map(|b| centre + b * edge..centre + (b + 1) * edge)
        .collect();
    Ok(FfrPlan {
        subcarriers,
        chunk_size,
        frf,
        centre_subcarriers: centre,
        edge_subcarriers: edge,
        centre_chunks: centre / chunk_size,
        edge_chunks: edge / chunk_size,
        centre_band: 0..centre,
        edge_bands,
        cell_edge_band,
    })
}

fn frf3_colouring() -> [usize; CELLS] {
    let mut colour = [0; CELLS];
    for j in 0..6 {
        // First tier alternates between the two bands cell 1 does not use.
        colour[1 + j] = 1 + j % 2;
        // Mid-edge cells reuse cell 1's band; each corner cell takes the
        // band its first-tier neighbour does not use.
        colour[7 + 2 * j] = 0;
        colour[8 + 2 * j] = 2 - (j + 1) % 2;
    }
    colour
}

/// Whether the desired link is attenuated by the user's own path loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DesiredSignal {
    /// `|H|^2 P_T / N` with no distance attenuation.
    #[default]
    Unattenuated,
    /// Attenuated by the path loss over the user's distance to base station 1.
    PathLoss,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MulticellParams {
    pub subcarriers: usize,
    pub cell_radius_km: f64,
    pub intercell_distance_km: f64,
    pub centre_radius_km: f64,
    pub frf: usize,
    pub target_ber: f64,
    pub tx_power_dbm: f64,
    pub noise_density_dbm_hz: f64,
    pub subcarrier_spacing_hz: f64,
    pub users: usize,
    pub taps: usize,
    pub desired_signal: DesiredSignal,
}

impl Default for MulticellParams {
    fn default() -> Self {
        Self {
            subcarriers: 512,
            cell_radius_km: 1.0,
            intercell_distance_km: 2.0,
            centre_radius_km: 0.5,
            frf: 3,
            target_ber: 1e-6,
            tx_power_dbm: 43.0,
            noise_density_dbm_hz: -174.0,
            subcarrier_spacing_hz: 15e3,
            users: 8,
            taps: 6,
            desired_signal: DesiredSignal::Unattenuated,
        }
    }
}

impl MulticellParams {
    /// Noise power per subcarrier in watts.
    pub fn noise_power(&self) -> f64 {
        dbm_to_watts(self.noise_density_dbm_hz) * self.subcarrier_spacing_hz
    }

    pub fn total_power(&self) -> f64 {
        dbm_to_watts(self.tx_power_dbm)
    }
}

/// One realization of cell 1's users and their links to all 19 base stations.
#[derive(Debug, Clone)]
pub struct CellScenario {
    pub layout: HexLayout,
    pub plan: FfrPlan,
    pub users: Vec<UserPlacement>,
    /// `|H_{k,n,i}|^2`, indexed `[user][cell - 1][subcarrier]`.
    pub link_gains: Vec<Vec<Vec<f64>>>,
    pub noise_power: f64,
    pub total_power: f64,
    pub lambda: f64,
    pub desired_signal: DesiredSignal,
    interferer_gain: [f64; CELLS],
}

impl CellScenario {
    pub fn from_parts(
        layout: HexLayout,
        plan: FfrPlan,
        users: Vec<UserPlacement>,
        link_gains: Vec<Vec<Vec<f64>>>,
        noise_power: f64,
        total_power: f64,
        target_ber: f64,
        desired_signal: DesiredSignal,
    ) -> Result<Self> {
        if link_gains.len() != users.len()
            || link_gains
                .iter()
                .any(|cells| cells.len() != CELLS || cells.iter().any(|g| g.len() != plan.subcarriers))
        {
            return Err(Error::InvalidInput("link gains must be [user][19][N]".into()));
        }
        if !(noise_power > 0.0 && total_power > 0.0) {
            return Err(Error::InvalidConfig("noise and transmit power must be positive".into()));
        }
        let mut interferer_gain = [0.0; CELLS];
        for (cell, g) in interferer_gain.iter_mut().enumerate().skip(1) {
            *g = path_gain(layout.distance_to_serving(cell + 1))?;
        }
        Ok(Self {
            layout,
            plan,
            users,
            link_gains,
            noise_power,
            total_power,
            lambda: snr_gap(target_ber)?,
            desired_signal,
            interferer_gain,
        })
    }

    /// Places users and draws every user-to-base-station channel for one
    /// trial. Links use substream `(trial, cell, user)`.
    pub fn draw(params: &MulticellParams, chunk_size: usize, master_seed: u64, trial: u32) -> Result<Self> {
        let layout = build_layout(params.cell_radius_km, params.intercell_distance_km)?;
        let plan = band_partition(
            params.subcarriers,
            chunk_size,
            params.centre_radius_km,
            params.cell_radius_km,
            params.frf,
        )?;
        let mut placement_rng = substream(master_seed, StreamId::new(trial, 1, 0), Purpose::Placement);
        let users = place_users(params.users, params.cell_radius_km, params.centre_radius_km, &mut placement_rng);
        let engine = ResponseEngine::new(params.subcarriers)?;
        let link_gains = (0..params.users)
            .map(|k| {
                (1..=CELLS)
                    .map(|cell| {
                        let id = StreamId::new(trial, cell as u8, k as u16);
                        let mut rng = substream(master_seed, id, Purpose::Channel);
                        // Unit noise: gains are |H|^2.
                        ChannelRealization::draw(params.taps, &engine, 1.0, &mut rng).map(|c| c.gains)
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_parts(
            layout,
            plan,
            users,
            link_gains,
            params.noise_power(),
            params.total_power(),
            params.target_ber,
            params.desired_signal,
        )
    }

    pub fn group_members(&self, group: Group) -> Vec<usize> {
        (0..self.users.len()).filter(|&k| self.users[k].group == group).collect()
    }

    fn desired(&self, k: usize, n: usize) -> Result<f64> {
        let attenuation = match self.desired_signal {
            DesiredSignal::Unattenuated => 1.0,
            DesiredSignal::PathLoss => path_gain(self.users[k].distance_km)?,
        };
        Ok(attenuation * self.link_gains[k][0][n])
    }

    /// SINR of user `k` on subcarrier `n` against the listed interfering
    /// cells (1-based).
    pub fn sinr_with(&self, k: usize, n: usize, interferers: &[usize]) -> Result<f64> {
        if k >= self.users.len() || n >= self.plan.subcarriers {
            return Err(Error::InvalidQuery(format!("user {k}, subcarrier {n} out of range")));
        }
        let per = self.total_power / self.plan.subcarriers as f64;
        let interference: f64 = interferers
            .iter()
            .map(|&cell| self.interferer_gain[cell - 1] * self.link_gains[k][cell - 1][n])
            .sum::<f64>()
            * per;
        Ok(self.desired(k, n)? * per / (self.noise_power + interference))
    }

    /// Centre user on F1, interfered by all 18 other cells.
    pub fn sinr_centre(&self, k: usize, n: usize) -> Result<f64> {
        if self.users.get(k).map(|u| u.group) != Some(Group::Centre) {
            return Err(Error::InvalidQuery(format!("user {k} is not a centre user")));
        }
        if !self.plan.centre_band.contains(&n) {
            return Err(Error::InvalidQuery(format!("subcarrier {n} is not in the centre band")));
        }
        self.sinr_with(k, n, &ALL_OTHER_CELLS)
    }

    /// Edge user on cell 1's edge band, interfered by the co-band cells.
    pub fn sinr_edge(&self, k: usize, n: usize) -> Result<f64> {
        if self.users.get(k).map(|u| u.group) != Some(Group::Edge) {
            return Err(Error::InvalidQuery(format!("user {k} is not an edge user")));
        }
        if !self.plan.edge_band(1).contains(&n) {
            return Err(Error::InvalidQuery(format!("subcarrier {n} is not in cell 1's edge band")));
        }
        self.sinr_with(k, n, &self.plan.edge_interferers(1))
    }

    /// Without FFR every cell uses every subcarrier.
    pub fn sinr_reuse1(&self, k: usize, n: usize) -> Result<f64> {
        self.sinr_with(k, n, &ALL_OTHER_CELLS)
    }

    /// `(1/N) sum_{n in chunk} log2(1 + lambda SINR)` for a group member.
    pub fn effective_chunk_rate(&self, k: usize, chunk: Range<usize>) -> Result<f64> {
        let group = self
            .users
            .get(k)
            .ok_or_else(|| Error::InvalidQuery(format!("no user {k}")))?
            .group;
        let mut sum = 0.0;
        for n in chunk {
            let sinr = match group {
                Group::Centre => self.sinr_centre(k, n)?,
                Group::Edge => self.sinr_edge(k, n)?,
            };
            sum += effective_rate(self.lambda, sinr);
        }
        Ok(sum / self.plan.subcarriers as f64)
    }

    fn rate_table<F>(&self, members: &[usize], grid: &ChunkGrid, sinr: F) -> Result<RateTable>
    where
        F: Fn(usize, usize) -> Result<f64>,
    {
        let n = self.plan.subcarriers;
        let se = members
            .iter()
            .map(|&k| {
                let mut row = vec![0.0; n];
                for chunk in grid.chunks() {
                    for s in chunk.clone() {
                        row[s] = effective_rate(self.lambda, sinr(k, s)?);
                    }
                }
                Ok(row)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(RateTable::from_spectral_efficiency(&se, grid))
    }
}

const ALL_OTHER_CELLS: [usize; CELLS - 1] = [2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16, 17, 18, 19];

/// `log2(1 + lambda SINR)`.
pub fn effective_rate(lambda: f64, sinr: f64) -> f64 {
    (1.0 + lambda * sinr).log2()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SaScheme {
    Proposed,
    Shen,
    Static,
    /// Exhaustive search maximizing the uniform-power sum rate.
    Exhaustive,
}

/// Runs one uniform-power SA scheme on a rate table.
pub fn run_sa(scheme: SaScheme, table: &RateTable, weights: &[f64], grid: &ChunkGrid, oracle_cap: u64) -> Result<Assignment> {
    match scheme {
        SaScheme::Proposed => Ok(proposed_sa(table, weights)?.assignment),
        SaScheme::Shen => Ok(shen_sa(table, weights)?.assignment),
        SaScheme::Static => static_sa(table.users(), grid),
        SaScheme::Exhaustive => Ok(exhaustive_sa_oracle(table.users(), table.chunks(), weights, oracle_cap, |a| {
            Ok(a.user_rates(table))
        })?
        .assignment),
    }
}

/// Outcome of the SA for one user group of cell 1.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupAllocation {
    pub group: Group,
    /// Scenario user indices, in the order used by the assignment.
    pub members: Vec<usize>,
    pub weights: Vec<f64>,
    pub grid: ChunkGrid,
    pub assignment: Assignment,
    pub rates: Vec<f64>,
}

/// Per-user weights: `centre[k]` applies while user `k` is in the centre
/// group, `edge[k]` while it is in the edge group.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupWeights {
    pub centre: Vec<f64>,
    pub edge: Vec<f64>,
}

impl GroupWeights {
    pub fn equal(users: usize) -> Self {
        Self {
            centre: vec![1.0; users],
            edge: vec![1.0; users],
        }
    }

    fn of(&self, group: Group, k: usize) -> f64 {
        match group {
            Group::Centre => self.centre[k],
            Group::Edge => self.edge[k],
        }
    }
}

fn group_sa(
    scenario: &CellScenario,
    group: Group,
    grid: ChunkGrid,
    weights: &GroupWeights,
    scheme: SaScheme,
    oracle_cap: u64,
) -> Result<Option<GroupAllocation>> {
    let members = scenario.group_members(group);
    if members.is_empty() {
        return Ok(None);
    }
    if grid.chunk_count() < members.len() {
        return Err(Error::Infeasible(format!(
            "{} {} users but only {} chunks",
            members.len(),
            group.label(),
            grid.chunk_count()
        )));
    }
    let w: Vec<f64> = members.iter().map(|&k| weights.of(group, k)).collect();
    let table = match group {
        Group::Centre => scenario.rate_table(&members, &grid, |k, n| scenario.sinr_centre(k, n))?,
        Group::Edge => scenario.rate_table(&members, &grid, |k, n| scenario.sinr_edge(k, n))?,
    };
    let assignment = run_sa(scheme, &table, &w, &grid, oracle_cap)?;
    let rates = assignment.user_rates(&table);
    Ok(Some(GroupAllocation {
        group,
        members,
        weights: w,
        grid,
        assignment,
        rates,
    }))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MulticellAllocation {
    pub centre: Option<GroupAllocation>,
    pub edge: Option<GroupAllocation>,
}

impl MulticellAllocation {
    pub fn group(&self, group: Group) -> Option<&GroupAllocation> {
        match group {
            Group::Centre => self.centre.as_ref(),
            Group::Edge => self.edge.as_ref(),
        }
    }
}

/// Independent SA for the centre group on F1 and the edge group on cell 1's
/// edge band, both under uniform power.
pub fn multicell_sa(
    scenario: &CellScenario,
    weights: &GroupWeights,
    scheme: SaScheme,
    oracle_cap: u64,
) -> Result<MulticellAllocation> {
    let centre = group_sa(scenario, Group::Centre, scenario.plan.centre_grid()?, weights, scheme, oracle_cap)?;
    let edge = group_sa(scenario, Group::Edge, scenario.plan.edge_grid(1)?, weights, scheme, oracle_cap)?;
    Ok(MulticellAllocation { centre, edge })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reuse1Allocation {
    pub grid: ChunkGrid,
    pub weights: Vec<f64>,
    pub assignment: Assignment,
    /// Per scenario user.
    pub rates: Vec<f64>,
}

/// All users share the full band with reuse factor 1; every subcarrier sees
/// all 18 interferers. Each user keeps its group's weight.
pub fn reuse1_baseline(
    scenario: &CellScenario,
    weights: &GroupWeights,
    scheme: SaScheme,
    oracle_cap: u64,
) -> Result<Reuse1Allocation> {
    let grid = ChunkGrid::new(scenario.plan.subcarriers, scenario.plan.chunk_size)?;
    let members: Vec<usize> = (0..scenario.users.len()).collect();
    let w: Vec<f64> = members.iter().map(|&k| weights.of(scenario.users[k].group, k)).collect();
    let table = scenario.rate_table(&members, &grid, |k, n| scenario.sinr_reuse1(k, n))?;
    let assignment = run_sa(scheme, &table, &w, &grid, oracle_cap)?;
    let rates = assignment.user_rates(&table);
    Ok(Reuse1Allocation {
        grid,
        weights: w,
        assignment,
        rates,
    })
}
