#![allow(dead_code)]

use std::io::Write;

use ofdma_alloc::assignment::{Assignment, ChunkGrid};
use ofdma_alloc::channel::{ChannelRealization, ResponseEngine};
use ofdma_alloc::metrics::MeanEstimate;
use ofdma_alloc::power::SplitRow;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Gaussian elimination with partial pivoting. `None` when singular.
pub fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col] == 0.0 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f == 0.0 {
                continue;
            }
            for c in col..n {
                a[row][c] -= f * a[col][c];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|c| a[row][c] * x[c]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

/// Full `K x K` budget system: `sum_k P_k = P_T`, then `P_1 + alpha_k P_k = beta_k`.
pub fn split_system(rows: &[SplitRow], total_power: f64) -> (Vec<Vec<f64>>, Vec<f64>) {
    let k = rows.len() + 1;
    let mut a = vec![vec![0.0; k]; k];
    let mut b = vec![0.0; k];
    a[0].iter_mut().for_each(|x| *x = 1.0);
    b[0] = total_power;
    for (i, r) in rows.iter().enumerate() {
        a[i + 1][0] = 1.0;
        a[i + 1][i + 1] = r.alpha;
        b[i + 1] = r.beta;
    }
    (a, b)
}

/// `sum_n p_n G_n` for an unpruned water-fill of `budget` over `gains`,
/// computed from the raw water-level form `p_n = mu - 1/G_n`.
pub fn linear_rate(gains: &[f64], budget: f64) -> f64 {
    let inv: f64 = gains.iter().map(|g| 1.0 / g).sum();
    let mu = (budget + inv) / gains.len() as f64;
    gains.iter().map(|g| (mu - 1.0 / g) * g).sum()
}

pub fn max_rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max) / scale
}

/// Random surjective owner vector.
pub fn random_assignment<R: Rng>(rng: &mut R, users: usize, chunks: usize) -> Assignment {
    let mut order: Vec<usize> = (0..chunks).collect();
    order.shuffle(rng);
    let mut owner = vec![0; chunks];
    for (i, &m) in order.iter().enumerate() {
        owner[m] = if i < users { i } else { rng.random_range(0..users) };
    }
    Assignment::from_owner(owner, users).unwrap()
}

/// Gains `|H|^2 / noise` for users with the given tap counts.
pub fn draw_gains<R: Rng>(rng: &mut R, taps: &[usize], subcarriers: usize, noise: f64) -> Vec<Vec<f64>> {
    let engine = ResponseEngine::new(subcarriers).unwrap();
    taps.iter()
        .map(|&t| ChannelRealization::draw(t, &engine, noise, rng).unwrap().gains)
        .collect()
}

pub struct Instance {
    pub grid: ChunkGrid,
    pub gains: Vec<Vec<f64>>,
    pub assignment: Assignment,
}

pub fn random_instance<R: Rng>(rng: &mut R, users: usize, subcarriers: usize, chunk: usize, noise: f64) -> Instance {
    let grid = ChunkGrid::new(subcarriers, chunk).unwrap();
    let taps: Vec<usize> = (0..users).map(|_| rng.random_range(1..=subcarriers.min(16))).collect();
    let gains = draw_gains(rng, &taps, subcarriers, noise);
    let assignment = random_assignment(rng, users, grid.chunk_count());
    Instance {
        grid,
        gains,
        assignment,
    }
}

/// Mean and half-width of the paired difference `a - b`.
pub fn paired(a: &[f64], b: &[f64]) -> MeanEstimate {
    assert_eq!(a.len(), b.len());
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    MeanEstimate::from_samples(&d)
}

/// Writes straight to stderr so the line shows even when output is captured.
pub fn report(id: &str, passed: bool, detail: &str) {
    let verdict = if passed { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stderr(), "criterion {id:>3}: {verdict}  {detail}");
}
