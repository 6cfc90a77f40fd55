//! Exact finite-volume Ising Gibbs measures on the rooted binary tree.
//!
//! The measure on spins of `ball(R)` has density proportional to
//! `exp(-beta * H(sigma | bc))` against the a priori product measure putting
//! weight 1/2 on each of the two spin values per site, so the partition
//! function at `beta = 0` is exactly 1. Inference runs leaf-to-root message
//! passing with per-level normalization (log accumulated), so deep volumes
//! neither overflow nor underflow. Sampling is exact ancestral sampling from
//! the same messages.
//!
//! Spin index convention everywhere: index 0 is spin -1, index 1 is spin +1.

use rand::Rng;

use crate::error::{domain, Result};
use crate::rng::rng_from_seed;
use crate::tree::{ball, ball_size, level_offset, VertexAddress};

pub const SPIN_VALUES: [f64; 2] = [-1.0, 1.0];

/// Model parameters: inverse temperature, per-edge coupling, per-site field.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParams {
    pub beta: f64,
    pub coupling: f64,
    pub field: f64,
}

impl ModelParams {
    /// Ferromagnet with `J = 1`, `h = 0` at inverse temperature `beta`.
    pub fn new(beta: f64) -> Result<Self> {
        Self::with(beta, 1.0, 0.0)
    }

    pub fn with(beta: f64, coupling: f64, field: f64) -> Result<Self> {
        if !(beta >= 0.0) {
            return Err(domain!("beta must be nonnegative, got {beta}"));
        }
        if !(coupling >= 0.0) {
            return Err(domain!("coupling must be nonnegative, got {coupling}"));
        }
        if !field.is_finite() {
            return Err(domain!("field must be finite"));
        }
        Ok(ModelParams {
            beta,
            coupling,
            field,
        })
    }
}

/// Boundary condition on `sphere(R+1)`: all plus, all minus, free (no
/// boundary term), or explicitly fixed spins in lexicographic order.
#[derive(Clone, Debug, PartialEq)]
pub enum BoundaryCondition {
    Plus,
    Minus,
    Free,
    Fixed(Vec<i8>),
}

impl BoundaryCondition {
    fn validate(&self, depth: usize) -> Result<()> {
        if let BoundaryCondition::Fixed(spins) = self {
            let want = 1usize << (depth + 1);
            if spins.len() != want {
                return Err(domain!(
                    "fixed boundary needs {want} spins on sphere({}), got {}",
                    depth + 1,
                    spins.len()
                ));
            }
            if spins.iter().any(|&s| s != 1 && s != -1) {
                return Err(domain!("fixed boundary spins must be +1 or -1"));
            }
        }
        Ok(())
    }
}

/// A total +-1 assignment on `ball(depth)`, stored level by level in
/// lexicographic order.
#[derive(Clone, Debug, PartialEq)]
pub struct SpinField {
    depth: usize,
    values: Vec<i8>,
}

impl SpinField {
    pub fn new(depth: usize, values: Vec<i8>) -> Result<Self> {
        if values.len() != ball_size(depth) {
            return Err(domain!(
                "spin field of depth {depth} needs {} values, got {}",
                ball_size(depth),
                values.len()
            ));
        }
        if values.iter().any(|&s| s != 1 && s != -1) {
            return Err(domain!("spins must be +1 or -1"));
        }
        Ok(SpinField { depth, values })
    }

    pub fn constant(depth: usize, spin: i8) -> Result<Self> {
        Self::new(depth, vec![spin; ball_size(depth)])
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn values(&self) -> &[i8] {
        &self.values
    }

    /// Spin at `(level, lexicographic index)`.
    pub fn get(&self, level: usize, index: usize) -> i8 {
        self.values[level_offset(level) + index]
    }

    pub fn get_addr(&self, v: &VertexAddress) -> i8 {
        self.get(v.level(), v.index() as usize)
    }

    pub fn flipped(&self) -> SpinField {
        SpinField {
            depth: self.depth,
            values: self.values.iter().map(|&s| -s).collect(),
        }
    }

    /// CSV rows `address,spin` in ball order.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("address,spin\n");
        for (v, &s) in ball(self.depth).iter().zip(&self.values) {
            out.push_str(&format!("{v},{s}\n"));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(text.as_bytes());
        let mut entries: Vec<(VertexAddress, i8)> = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| crate::error::Error::Parse(e.to_string()))?;
            if rec.len() != 2 {
                return Err(crate::error::Error::Parse("expected address,spin".into()));
            }
            let v = VertexAddress::parse(&rec[0])?;
            let s: i8 = rec[1]
                .trim()
                .parse()
                .map_err(|_| crate::error::Error::Parse(format!("bad spin {:?}", &rec[1])))?;
            entries.push((v, s));
        }
        let depth = entries
            .iter()
            .map(|(v, _)| v.level())
            .max()
            .ok_or_else(|| crate::error::Error::Parse("empty spin field".into()))?;
        let mut values = vec![0i8; ball_size(depth)];
        for (v, s) in entries {
            values[level_offset(v.level()) + v.index() as usize] = s;
        }
        SpinField::new(depth, values)
    }
}

/// Energy of `sigma` in volume `ball(R)` with boundary condition `bc`:
/// `-J * sum_{edges} s_i s_j - h * sum_i s_i`, including the edges from
/// level-R leaves to the boundary spins on `sphere(R+1)` unless free.
pub fn hamiltonian(sigma: &SpinField, bc: &BoundaryCondition, params: &ModelParams) -> Result<f64> {
    let r = sigma.depth();
    bc.validate(r)?;
    let mut edge_sum = 0.0;
    for l in 0..r {
        for i in 0..(1usize << l) {
            let s = sigma.get(l, i) as f64;
            edge_sum += s * (sigma.get(l + 1, 2 * i) + sigma.get(l + 1, 2 * i + 1)) as f64;
        }
    }
    for i in 0..(1usize << r) {
        let s = sigma.get(r, i) as f64;
        let (b0, b1) = boundary_pair(bc, i);
        edge_sum += s * (b0 + b1);
    }
    let site_sum: f64 = sigma.values().iter().map(|&s| s as f64).sum();
    Ok(-params.coupling * edge_sum - params.field * site_sum)
}

/// Boundary spins attached to leaf `i` at level R (children `2i`, `2i+1` of
/// `sphere(R+1)`); `(0, 0)` for free boundary.
fn boundary_pair(bc: &BoundaryCondition, leaf_index: usize) -> (f64, f64) {
    match bc {
        BoundaryCondition::Plus => (1.0, 1.0),
        BoundaryCondition::Minus => (-1.0, -1.0),
        BoundaryCondition::Free => (0.0, 0.0),
        BoundaryCondition::Fixed(spins) => (
            spins[2 * leaf_index] as f64,
            spins[2 * leaf_index + 1] as f64,
        ),
    }
}

/// Upward messages for every vertex of `ball(depth)`.
///
/// `levels[l][i][s]` is proportional to the constrained sum over the strict
/// subtree of vertex `(l, i)` given its spin `s`, including the boundary
/// factors of its level-`depth` descendants and the a priori 1/2 per summed
/// site. Each level is rescaled by its maximum entry; the log of the exact
/// partition function is recovered through `log_scale`.
pub(crate) struct Messages {
    pub levels: Vec<Vec<[f64; 2]>>,
    pub log_scale: f64,
}

pub(crate) fn upward_messages(
    depth: usize,
    bc: &BoundaryCondition,
    params: &ModelParams,
) -> Result<Messages> {
    bc.validate(depth)?;
    let bj = params.beta * params.coupling;
    let bh = params.beta * params.field;
    let mut levels: Vec<Vec<[f64; 2]>> = vec![Vec::new(); depth + 1];
    let mut log_scale = 0.0;

    // leaves: boundary factor exp(beta*J*s*(b0+b1))
    let n_leaves = 1usize << depth;
    let mut leaf = Vec::with_capacity(n_leaves);
    for i in 0..n_leaves {
        let (b0, b1) = boundary_pair(bc, i);
        leaf.push([(-bj * (b0 + b1)).exp(), (bj * (b0 + b1)).exp()]);
    }
    normalize_level(&mut leaf, depth, &mut log_scale);
    levels[depth] = leaf;

    for l in (0..depth).rev() {
        let child = &levels[l + 1];
        let mut cur = Vec::with_capacity(1usize << l);
        for i in 0..(1usize << l) {
            let mut m = [0.0f64; 2];
            for (si, &s) in SPIN_VALUES.iter().enumerate() {
                let mut prod = 1.0;
                for c in [2 * i, 2 * i + 1] {
                    let mc = &child[c];
                    let mut sum = 0.0;
                    for (ci, &cs) in SPIN_VALUES.iter().enumerate() {
                        sum += 0.5 * (bj * s * cs + bh * cs).exp() * mc[ci];
                    }
                    prod *= sum;
                }
                m[si] = prod;
            }
            cur.push(m);
        }
        normalize_level(&mut cur, l, &mut log_scale);
        levels[l] = cur;
    }
    Ok(Messages { levels, log_scale })
}

/// Rescale a whole level by its max entry; every vertex of level `l`
/// contributes one factor to the partition function, hence the `2^l`
/// multiplier on the log.
fn normalize_level(level: &mut [[f64; 2]], l: usize, log_scale: &mut f64) {
    let max = level
        .iter()
        .flat_map(|m| m.iter())
        .fold(0.0f64, |a, &b| a.max(b));
    if max > 0.0 && max.is_finite() {
        for m in level.iter_mut() {
            m[0] /= max;
            m[1] /= max;
        }
        *log_scale += (1u64 << l) as f64 * max.ln();
    }
}

/// `ln Z` for volume `ball(depth)`.
pub fn log_partition_function(
    depth: usize,
    bc: &BoundaryCondition,
    params: &ModelParams,
) -> Result<f64> {
    let msgs = upward_messages(depth, bc, params)?;
    let bh = params.beta * params.field;
    let root = &msgs.levels[0][0];
    let z = 0.5 * ((-bh).exp() * root[0] + bh.exp() * root[1]);
    Ok(z.ln() + msgs.log_scale)
}

/// `Z` itself; overflows to infinity for volumes where `ln Z` exceeds f64
/// range — use `log_partition_function` for deep trees.
pub fn partition_function(
    depth: usize,
    bc: &BoundaryCondition,
    params: &ModelParams,
) -> Result<f64> {
    Ok(log_partition_function(depth, bc, params)?.exp())
}

/// Exact probability that the root spin is +1.
pub fn root_marginal(depth: usize, bc: &BoundaryCondition, params: &ModelParams) -> Result<f64> {
    let msgs = upward_messages(depth, bc, params)?;
    let bh = params.beta * params.field;
    let root = &msgs.levels[0][0];
    let wm = (-bh).exp() * root[0];
    let wp = bh.exp() * root[1];
    Ok(wp / (wm + wp))
}

/// Reusable exact sampler: messages are computed once, each call draws one
/// exact ancestral sample. `sample` below is the one-shot convenience.
pub struct Sampler {
    depth: usize,
    params: ModelParams,
    messages: Messages,
}

impl Sampler {
    pub fn new(depth: usize, bc: &BoundaryCondition, params: &ModelParams) -> Result<Self> {
        Ok(Sampler {
            depth,
            params: *params,
            messages: upward_messages(depth, bc, params)?,
        })
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn sample(&self, seed: u64) -> SpinField {
        let mut rng = rng_from_seed(seed);
        let bj = self.params.beta * self.params.coupling;
        let bh = self.params.beta * self.params.field;
        let mut values = Vec::with_capacity(ball_size(self.depth));

        let root = &self.messages.levels[0][0];
        let wm = (-bh).exp() * root[0];
        let wp = bh.exp() * root[1];
        values.push(draw(&mut rng, wm, wp));

        for l in 1..=self.depth {
            let offset = level_offset(l - 1);
            for i in 0..(1usize << l) {
                let parent = values[offset + i / 2] as f64;
                let m = &self.messages.levels[l][i];
                let wm = (-bj * parent - bh).exp() * m[0];
                let wp = (bj * parent + bh).exp() * m[1];
                values.push(draw(&mut rng, wm, wp));
            }
        }
        SpinField {
            depth: self.depth,
            values,
        }
    }
}

fn draw<R: Rng>(rng: &mut R, weight_minus: f64, weight_plus: f64) -> i8 {
    let u: f64 = rng.gen();
    if u * (weight_minus + weight_plus) < weight_plus {
        1
    } else {
        -1
    }
}

/// One exact sample from the finite-volume measure; deterministic in `seed`.
pub fn sample(
    depth: usize,
    bc: &BoundaryCondition,
    params: &ModelParams,
    seed: u64,
) -> Result<SpinField> {
    Ok(Sampler::new(depth, bc, params)?.sample(seed))
}

/// Critical inverse temperature `arctanh(1/k)` for the order-k tree.
pub fn beta_c(k: usize) -> Result<f64> {
    if k < 2 {
        return Err(domain!("tree order must be at least 2, got {k}"));
    }
    Ok((1.0 / k as f64).atanh())
}

/// Spin-glass inverse temperature `arctanh(1/sqrt(k))`.
pub fn beta_sg(k: usize) -> Result<f64> {
    if k < 2 {
        return Err(domain!("tree order must be at least 2, got {k}"));
    }
    Ok((1.0 / (k as f64).sqrt()).atanh())
}
