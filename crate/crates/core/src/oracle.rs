//! Brute-force ground truth at desk scale: exhaustive enumeration of the
//! tree measure, its image under the majority rule, conditional
//! magnetizations, and the constrained chain. Everything here trades speed
//! for being a straight transcription of the definitions, independent of
//! the message-passing and transfer-matrix fast paths.

use std::collections::HashMap;

use crate::error::{domain, Error, Result};
use crate::gibbs::{hamiltonian, BoundaryCondition, ModelParams, SpinField};
use crate::renorm::{majority_image, ImageField};
use crate::tree::ball_size;

/// Default volume cap for tree enumeration: `ball(3)` has 15 sites, 2^15
/// configurations.
pub const TREE_ENUM_CAP: usize = 3;
/// Default length cap for chain enumeration.
pub const CHAIN_ENUM_CAP: usize = 14;

/// An exhaustively enumerated probability distribution: every configuration
/// with its normalized weight, plus the unnormalized total mass.
#[derive(Clone, Debug)]
pub struct ExactDistribution<T> {
    pub support: Vec<T>,
    pub weights: Vec<f64>,
    /// Total unnormalized mass (the partition function for Gibbs weights).
    pub normalizer: f64,
}

impl<T> ExactDistribution<T> {
    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn expectation(&self, f: impl Fn(&T) -> f64) -> f64 {
        self.support
            .iter()
            .zip(&self.weights)
            .map(|(c, &w)| f(c) * w)
            .sum()
    }

    pub fn probability(&self, event: impl Fn(&T) -> bool) -> f64 {
        self.expectation(|c| event(c) as u8 as f64)
    }
}

fn spin_field_from_index(depth: usize, code: u64) -> SpinField {
    let n = ball_size(depth);
    let values: Vec<i8> = (0..n)
        .map(|i| if (code >> i) & 1 == 1 { 1 } else { -1 })
        .collect();
    SpinField::new(depth, values).expect("valid by construction")
}

/// Exact Boltzmann distribution over spin fields on `ball(R)`, with the
/// a priori factor 1/2 per site, by summing over all `2^|ball(R)|` states.
pub fn enumerate_gibbs(
    r: usize,
    bc: &BoundaryCondition,
    params: &ModelParams,
) -> Result<ExactDistribution<SpinField>> {
    enumerate_gibbs_with_cap(r, bc, params, TREE_ENUM_CAP)
}

/// Cap-overridable variant; anything past `ball(4)` takes minutes.
pub fn enumerate_gibbs_with_cap(
    r: usize,
    bc: &BoundaryCondition,
    params: &ModelParams,
    cap: usize,
) -> Result<ExactDistribution<SpinField>> {
    if r > cap {
        return Err(Error::VolumeTooLarge {
            what: "tree enumeration depth".into(),
            got: r,
            cap,
        });
    }
    let n = ball_size(r);
    let apriori = 0.5f64.powi(n as i32);
    let mut support = Vec::with_capacity(1usize << n);
    let mut weights = Vec::with_capacity(1usize << n);
    let mut total = 0.0;
    for code in 0..(1u64 << n) {
        let sigma = spin_field_from_index(r, code);
        let w = apriori * (-params.beta * hamiltonian(&sigma, bc, params)?).exp();
        total += w;
        support.push(sigma);
        weights.push(w);
    }
    for w in &mut weights {
        *w /= total;
    }
    Ok(ExactDistribution {
        support,
        weights,
        normalizer: total,
    })
}

/// Pushforward of the depth-`R+1` exact distribution through the majority
/// rule: the exact law of the image field on `ball(R)`.
pub fn enumerate_image(
    r: usize,
    bc: &BoundaryCondition,
    params: &ModelParams,
) -> Result<ExactDistribution<ImageField>> {
    if r + 1 > TREE_ENUM_CAP {
        return Err(Error::VolumeTooLarge {
            what: "image enumeration depth".into(),
            got: r,
            cap: TREE_ENUM_CAP - 1,
        });
    }
    let base = enumerate_gibbs(r + 1, bc, params)?;
    let mut index: HashMap<Vec<i8>, usize> = HashMap::new();
    let mut support: Vec<ImageField> = Vec::new();
    let mut weights: Vec<f64> = Vec::new();
    for (sigma, &w) in base.support.iter().zip(&base.weights) {
        let image = majority_image(sigma)?;
        match index.entry(image.values().to_vec()) {
            std::collections::hash_map::Entry::Occupied(e) => weights[*e.get()] += w,
            std::collections::hash_map::Entry::Vacant(e) => {
                e.insert(support.len());
                support.push(image);
                weights.push(w);
            }
        }
    }
    Ok(ExactDistribution {
        support,
        weights,
        normalizer: base.normalizer,
    })
}

/// Exact conditional expectation of the root image value given the image on
/// `ball(R)` minus the root, on the spin volume `ball(D)` with boundary
/// `tail`, by filtering the full enumeration.
pub fn oracle_conditional_magnetization(
    eta: &ImageField,
    tail: &BoundaryCondition,
    big_d: usize,
    params: &ModelParams,
) -> Result<f64> {
    let r = eta.depth();
    if big_d < r + 1 {
        return Err(domain!("need D >= R + 1 (R = {r}, D = {big_d})"));
    }
    if big_d > TREE_ENUM_CAP {
        return Err(Error::VolumeTooLarge {
            what: "conditional enumeration depth".into(),
            got: big_d,
            cap: TREE_ENUM_CAP,
        });
    }
    let base = enumerate_gibbs(big_d, tail, params)?;
    let mut mass = 0.0;
    let mut num = 0.0;
    for (sigma, &w) in base.support.iter().zip(&base.weights) {
        let image = majority_image(sigma)?;
        let mut matches = true;
        'levels: for l in 1..=r {
            for i in 0..(1usize << l) {
                if image.get(l, i) != eta.get(l, i) {
                    matches = false;
                    break 'levels;
                }
            }
        }
        if matches {
            mass += w;
            num += image.get(0, 0).unwrap() as f64 * w;
        }
    }
    if mass <= 0.0 {
        return Err(Error::InfeasibleConditioning);
    }
    Ok(num / mass)
}

/// Exhaustive constrained-chain magnetizations: enumerate `X_1..X_R` over
/// `{-1,+1}^R` with weight
/// `exp(beta * sum_{n=1..R} X_{n-1} X_n + beta * sum_{n=1..R-1} h_n X_n
///  + (beta/2) h_R X_R)`
/// (the final field is shared with the unconstrained continuation, hence
/// half weight), excluding every string with `X_{n-1} = X_n = h_n` for some
/// `n`. Returns `P[X_R = +1]` started from `X_0 = +1` and from `X_0 = -1`.
pub fn oracle_chain(
    env: &crate::chain::ChainEnvironment,
    r: usize,
    beta: f64,
) -> Result<(f64, f64)> {
    oracle_chain_with_cap(env, r, beta, CHAIN_ENUM_CAP)
}

pub fn oracle_chain_with_cap(
    env: &crate::chain::ChainEnvironment,
    r: usize,
    beta: f64,
    cap: usize,
) -> Result<(f64, f64)> {
    if r > cap {
        return Err(Error::VolumeTooLarge {
            what: "chain enumeration length".into(),
            got: r,
            cap,
        });
    }
    if r == 0 || r > env.len() {
        return Err(domain!(
            "R must lie in 1..={} for this environment, got {r}",
            env.len()
        ));
    }
    let mut out = [0.0f64; 2];
    for (slot, x0) in [(0usize, 1i8), (1, -1)] {
        let mut z = 0.0;
        let mut plus = 0.0;
        for code in 0..(1u64 << r) {
            let x = |n: usize| -> i8 {
                if n == 0 {
                    x0
                } else if (code >> (n - 1)) & 1 == 1 {
                    1
                } else {
                    -1
                }
            };
            let mut excluded = false;
            let mut energy = 0.0;
            for n in 1..=r {
                let h = env.h(n);
                if x(n - 1) == x(n) && x(n) == h {
                    excluded = true;
                    break;
                }
                energy += (x(n - 1) * x(n)) as f64;
                let field_scale = if n == r { 0.5 } else { 1.0 };
                energy += field_scale * (h * x(n)) as f64;
            }
            if excluded {
                continue;
            }
            let w = (beta * energy).exp();
            z += w;
            if x(r) == 1 {
                plus += w;
            }
        }
        if !(z > 0.0) {
            return Err(Error::InfeasibleConditioning);
        }
        out[slot] = plus / z;
    }
    Ok((out[0], out[1]))
}
