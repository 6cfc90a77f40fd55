//! Percolation of zeros in the image field: path counting, the zero
//! marginal, the critical temperature of zero percolation, the birth-death
//! surrogate for the path count with its moment generating function and
//! deviation bound, configuration classification, and Monte Carlo sweeps.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{domain, Result};
use crate::gibbs::{BoundaryCondition, ModelParams, Sampler};
use crate::renorm::{majority_image, ImageField};
use crate::rng::{derive_seed, rng_from_seed};

/// Zero-path counts `N_0..N_R` for one image field.
#[derive(Clone, Debug, PartialEq)]
pub struct PathStats {
    pub counts: Vec<u64>,
    pub survived: bool,
}

/// Count descending all-zero paths from the root to every level by a
/// top-down sweep: a vertex is reachable through zeros iff it is zero and
/// its parent was reachable, and every reachable zero vertex carries exactly
/// one root path.
pub fn count_zero_paths(eta: &ImageField) -> Result<PathStats> {
    if eta.is_partial() {
        return Err(domain!("path counting needs a total image field"));
    }
    let r = eta.depth();
    let mut counts = Vec::with_capacity(r + 1);
    let mut open = vec![eta.get(0, 0) == Some(0)];
    counts.push(open[0] as u64);
    for l in 1..=r {
        let mut next = Vec::with_capacity(1usize << l);
        let mut n = 0u64;
        for i in 0..(1usize << l) {
            let reachable = open[i / 2] && eta.get(l, i) == Some(0);
            n += reachable as u64;
            next.push(reachable);
        }
        counts.push(n);
        open = next;
    }
    let survived = *counts.last().unwrap() > 0;
    Ok(PathStats { counts, survived })
}

/// Probability that a cell is not monochromatic:
/// `(2 + exp(-2 beta)) / (exp(-beta) + exp(beta))^2`.
pub fn p_zero(beta: f64) -> Result<f64> {
    if !(beta >= 0.0) {
        return Err(domain!("beta must be nonnegative, got {beta}"));
    }
    Ok((2.0 + (-2.0 * beta).exp()) / ((-beta).exp() + beta.exp()).powi(2))
}

/// Unique solution of `p_zero(beta) = 1/2` by bisection; analytically
/// `ln(1 + sqrt(2)) / 2`.
pub fn beta_one() -> f64 {
    let f = |b: f64| p_zero(b).unwrap() - 0.5;
    let (mut lo, mut hi) = (0.0f64, 2.0f64);
    debug_assert!(f(lo) > 0.0 && f(hi) < 0.0);
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Expected path count in the +-1-step birth-death surrogate:
/// `p + (R-1)(2p-1)`.
pub fn expected_paths_model(r: usize, p: f64) -> Result<f64> {
    check_prob(p)?;
    if r < 1 {
        return Err(domain!("need R >= 1"));
    }
    Ok(p + (r as f64 - 1.0) * (2.0 * p - 1.0))
}

fn check_prob(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(domain!("probability must lie in [0,1], got {p}"));
    }
    Ok(())
}

fn mgf_one_step(theta: f64, p: f64) -> f64 {
    p * p * theta.exp() + 2.0 * p * (1.0 - p) + (1.0 - p) * (1.0 - p) * (-theta).exp()
}

/// Surrogate moment generating function
/// `(p^2 e^theta + 2 p (1-p) + (1-p)^2 e^-theta)^R`.
pub fn mgf_model(theta: f64, p: f64, r: usize) -> Result<f64> {
    check_prob(p)?;
    if r < 1 {
        return Err(domain!("need R >= 1"));
    }
    Ok(mgf_one_step(theta, p).powi(r as i32))
}

/// `ln` of `mgf_model`; satisfies `-R theta <= K <= R theta` for
/// `theta >= 0`.
pub fn cumulant_model(theta: f64, p: f64, r: usize) -> Result<f64> {
    check_prob(p)?;
    if r < 1 {
        return Err(domain!("need R >= 1"));
    }
    Ok(r as f64 * mgf_one_step(theta, p).ln())
}

/// Tail bound `exp(theta * (R - exp(beta R)))` on the probability that the
/// path count exceeds `exp(beta R)`.
pub fn deviation_bound(r: usize, beta: f64, theta: f64) -> Result<f64> {
    if !(theta >= 0.0) {
        return Err(domain!("theta must be nonnegative, got {theta}"));
    }
    Ok((theta * (r as f64 - (beta * r as f64).exp())).exp())
}

/// Best bound over a fixed logarithmic theta grid (50 points in
/// `[1e-3, 10]`).
pub fn deviation_bound_optimized(r: usize, beta: f64) -> Result<f64> {
    let mut best = 1.0f64; // theta = 0 gives the vacuous bound 1
    for k in 0..50 {
        let theta = 1e-3 * (10.0f64 / 1e-3).powf(k as f64 / 49.0);
        best = best.min(deviation_bound(r, beta, theta)?);
    }
    Ok(best)
}

/// Order-k generalization of the surrogate MGF:
/// `[e^-theta (p (e^theta - 1) + 1)^k]^R`; at k = 2 it coincides with
/// `mgf_model` after expanding the square.
pub fn mgf_general(k: usize, theta: f64, p: f64, r: usize) -> Result<f64> {
    if k < 2 {
        return Err(domain!("tree order must be at least 2, got {k}"));
    }
    check_prob(p)?;
    if r < 1 {
        return Err(domain!("need R >= 1"));
    }
    Ok(((-theta).exp() * (p * (theta.exp() - 1.0) + 1.0).powi(k as i32)).powi(r as i32))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Good,
    Suspect,
}

/// Finite-depth classification of an image field: how the zero-path count
/// compares to `exp(beta R)`, and whether any zero path carries a strictly
/// alternating flanking environment all the way down ("zebra" path).
#[derive(Clone, Debug)]
pub struct Classification {
    pub n_r: u64,
    pub ratio: f64,
    pub zebra: bool,
    pub verdict: Verdict,
}

/// Ratio threshold below which a finite-depth field is called good; a
/// diagnostic, not a proof.
const GOOD_RATIO: f64 = 0.01;

pub fn classify(eta: &ImageField, beta: f64) -> Result<Classification> {
    if !(beta >= 0.0) {
        return Err(domain!("beta must be nonnegative, got {beta}"));
    }
    let stats = count_zero_paths(eta)?;
    let r = eta.depth();
    let n_r = *stats.counts.last().unwrap();
    let ratio = n_r as f64 / (beta * r as f64).exp();
    let zebra = has_zebra_path(eta);
    let verdict = if ratio <= GOOD_RATIO && !zebra {
        Verdict::Good
    } else {
        Verdict::Suspect
    };
    Ok(Classification {
        n_r,
        ratio,
        zebra,
        verdict,
    })
}

/// Depth-first search for a root-to-bottom zero path whose flank values
/// (image at the sibling of each path vertex) are +-1 and strictly
/// alternate. Pruning on the alternation keeps this cheap even on fields
/// full of zeros.
fn has_zebra_path(eta: &ImageField) -> bool {
    let r = eta.depth();
    if eta.get(0, 0) != Some(0) {
        return false;
    }
    if r == 0 {
        return true;
    }
    // stack of (level, index, flank sign at this level)
    let mut stack: Vec<(usize, usize, i8)> = Vec::new();
    for i in 0..2usize {
        let flank = eta.get(1, 1 - i).unwrap_or(0);
        if eta.get(1, i) == Some(0) && flank != 0 {
            stack.push((1, i, flank));
        }
    }
    while let Some((l, i, flank)) = stack.pop() {
        if l == r {
            return true;
        }
        for c in [2 * i, 2 * i + 1] {
            let sib = eta.get(l + 1, c ^ 1).unwrap_or(0);
            if eta.get(l + 1, c) == Some(0) && sib == -flank {
                stack.push((l + 1, c, sib));
            }
        }
    }
    false
}

/// Aggregate results of a Monte Carlo sweep over sampled spin fields pushed
/// through the majority rule.
#[derive(Clone, Debug)]
pub struct PathSummary {
    pub replicas: u64,
    pub survival_freq: f64,
    pub mean_nr: f64,
    /// Surrogate prediction `expected_paths_model(R, p_zero(beta))`,
    /// reported for comparison, not asserted to agree.
    pub model_mean: f64,
    pub p_zero: f64,
    pub thetas: Vec<f64>,
    pub mgf_empirical: Vec<f64>,
    pub mgf_model: Vec<f64>,
}

/// Sample `replicas` spin fields of depth `R + 1`, push each through the
/// majority rule and aggregate the zero-path statistics. Replica `i` uses
/// the derived seed `derive_seed(seed, i)`, so results are independent of
/// thread count and replica order.
pub fn monte_carlo_paths(
    beta: f64,
    r: usize,
    bc: &BoundaryCondition,
    replicas: u64,
    seed: u64,
    thetas: &[f64],
) -> Result<PathSummary> {
    if replicas < 1 {
        return Err(domain!("need at least one replica"));
    }
    let params = ModelParams::new(beta)?;
    let sampler = Sampler::new(r + 1, bc, &params)?;

    let per_replica: Vec<(bool, u64)> = (0..replicas)
        .into_par_iter()
        .map(|i| {
            let sigma = sampler.sample(derive_seed(seed, i));
            let image = majority_image(&sigma).expect("depth >= 1");
            let stats = count_zero_paths(&image).expect("total field");
            (stats.survived, *stats.counts.last().unwrap())
        })
        .collect();

    let survived = per_replica.iter().filter(|(s, _)| *s).count() as f64;
    let mean_nr =
        per_replica.iter().map(|(_, n)| *n as f64).sum::<f64>() / replicas as f64;
    let p = p_zero(beta)?;
    let mut mgf_empirical = Vec::with_capacity(thetas.len());
    let mut mgf_model_vals = Vec::with_capacity(thetas.len());
    for &theta in thetas {
        let emp = per_replica
            .iter()
            .map(|(_, n)| (theta * *n as f64).exp())
            .sum::<f64>()
            / replicas as f64;
        mgf_empirical.push(emp);
        mgf_model_vals.push(mgf_model(theta, p, r.max(1))?);
    }
    Ok(PathSummary {
        replicas,
        survival_freq: survived / replicas as f64,
        mean_nr,
        model_mean: expected_paths_model(r.max(1), p)?,
        p_zero: p,
        thetas: thetas.to_vec(),
        mgf_empirical,
        mgf_model: mgf_model_vals,
    })
}

/// Survival probability of the binary branching surrogate with open-bond
/// probability `p`: the complement of the smallest fixed point of
/// `q = (1 - p + p q)^2`.
pub fn survival_probability_model(p: f64) -> Result<f64> {
    check_prob(p)?;
    let f = |q: f64| (1.0 - p + p * q).powi(2);
    let mut q = 0.0f64;
    for _ in 0..10_000 {
        let next = f(q);
        if (next - q).abs() < 1e-15 {
            q = next;
            break;
        }
        q = next;
    }
    Ok(1.0 - q)
}

/// Monte Carlo estimate of the one-step zebra continuation probability and
/// its reference value 2/9.
#[derive(Clone, Debug)]
pub struct ZebraEstimate {
    pub estimate: f64,
    pub std_error: f64,
    /// `(1/3)^2 + (1/3)^2`, the exact value at infinite temperature.
    pub reference: f64,
}

/// One-step continuation probability of an alternating flank along a zero
/// path, in the two-cell surrogate where consecutive cells draw
/// independently from their conditioned single-cell laws.
///
/// A cell is a triple (parent spin a, path-child spin b, flank spin f) with
/// weight `(1/2) t(a,b) t(a,f)` where `t` is the parent-child edge
/// conditional `t(same) = e^beta / (2 cosh beta)`, conditioned on not being
/// monochromatic (the cell is a zero). The upper cell is additionally
/// conditioned on flank +1 (the alternation seen so far); the continuation
/// event asks the lower cell, drawn independently, to pick the matching
/// shared spin and a flipped flank: `b2 = b` and `f2 = -1`.
/// At infinite temperature this is exactly (1/3)^2 + (1/3)^2 = 2/9.
pub fn zebra_one_step(beta: f64, samples: u64, seed: u64) -> Result<ZebraEstimate> {
    if !(beta >= 0.0) {
        return Err(domain!("beta must be nonnegative, got {beta}"));
    }
    if samples < 1 {
        return Err(domain!("need at least one sample"));
    }
    let t_same = beta.exp() / (2.0 * beta.cosh());
    let t = |a: i8, b: i8| if a == b { t_same } else { 1.0 - t_same };

    // upper cell: conditioned non-monochromatic with flank +1, law of (a, b)
    let mut upper: Vec<((i8, i8), f64)> = Vec::new();
    let mut z1 = 0.0;
    for a in [-1i8, 1] {
        for b in [-1i8, 1] {
            if a == 1 && b == 1 {
                continue; // monochromatic with f = +1
            }
            let w = 0.5 * t(a, b) * t(a, 1);
            upper.push(((a, b), w));
            z1 += w;
        }
    }
    // lower cell: conditioned non-monochromatic, law of (a2 = shared spin,
    // f2 = new flank), marginal over its own path child
    let mut lower: Vec<((i8, i8), f64)> = Vec::new();
    let mut z2 = 0.0;
    for a2 in [-1i8, 1] {
        for b2 in [-1i8, 1] {
            for f2 in [-1i8, 1] {
                if a2 == b2 && b2 == f2 {
                    continue;
                }
                let w = 0.5 * t(a2, b2) * t(a2, f2);
                lower.push(((a2, f2), w));
                z2 += w;
            }
        }
    }

    let mut rng = rng_from_seed(seed);
    let draw = |rng: &mut rand_chacha::ChaCha8Rng, table: &[((i8, i8), f64)], z: f64| {
        let mut u: f64 = rng.gen::<f64>() * z;
        for &(v, w) in table {
            if u < w {
                return v;
            }
            u -= w;
        }
        table.last().unwrap().0
    };
    let mut hits = 0u64;
    for _ in 0..samples {
        let (_, b) = draw(&mut rng, &upper, z1);
        let (a2, f2) = draw(&mut rng, &lower, z2);
        if a2 == b && f2 == -1 {
            hits += 1;
        }
    }
    let estimate = hits as f64 / samples as f64;
    let std_error = (estimate * (1.0 - estimate) / samples as f64).sqrt();
    Ok(ZebraEstimate {
        estimate,
        std_error,
        reference: 2.0 / 9.0,
    })
}
