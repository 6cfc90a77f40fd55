//! Majority-rule coarse graining with overlapping cells and exact inference
//! for the image measure.
//!
//! The deterministic map sends a spin field to a {-1,0,+1} field: the image
//! at vertex `j` is +1 when the cell `{j, j0, j1}` is unanimously +1, -1 when
//! unanimously -1, and 0 otherwise. Because cells reach one level down, an
//! image of depth R consumes spins of depth R+1.
//!
//! `conditional_image_magnetization` computes the exact conditional
//! expectation of the root image spin given the image on `ball(R)` minus the
//! root, on a depth-D tree with an explicit spin boundary condition at
//! `sphere(D+1)` and image spins left unconstrained on levels R+1..D-1. The
//! choice of D is exposed deliberately: comparing tails at fixed conditioning
//! is exactly how tail dependence of the image measure is exhibited.

use rand::Rng;

use crate::error::{domain, Error, Result};
use crate::gibbs::{BoundaryCondition, ModelParams, SpinField, SPIN_VALUES};
use crate::rng::rng_from_seed;
use crate::tree::{ball, ball_size, level_offset};

/// Normalizers at or below this threshold are treated as an exactly-zero
/// conditioning event.
const ZERO_NORMALIZER: f64 = 1e-300;

/// A {-1,0,+1} assignment on `ball(depth)`. The partial variant leaves the
/// root unassigned and is the conditioning object: the root's own image spin
/// is never conditioned.
#[derive(Clone, Debug, PartialEq)]
pub struct ImageField {
    depth: usize,
    values: Vec<i8>,
    partial: bool,
}

impl ImageField {
    pub fn new_full(depth: usize, values: Vec<i8>) -> Result<Self> {
        Self::build(depth, values, false)
    }

    /// Field assigning exactly `ball(depth)` minus the root; the slot for the
    /// root in `values` is ignored and stored as 0.
    pub fn new_partial(depth: usize, mut values: Vec<i8>) -> Result<Self> {
        if !values.is_empty() {
            values[0] = 0;
        }
        Self::build(depth, values, true)
    }

    /// Partial field with one constant value off the root.
    pub fn constant_partial(depth: usize, value: i8) -> Result<Self> {
        Self::new_partial(depth, vec![value; ball_size(depth)])
    }

    fn build(depth: usize, values: Vec<i8>, partial: bool) -> Result<Self> {
        if values.len() != ball_size(depth) {
            return Err(domain!(
                "image field of depth {depth} needs {} values, got {}",
                ball_size(depth),
                values.len()
            ));
        }
        if values.iter().any(|&v| !(-1..=1).contains(&v)) {
            return Err(domain!("image values must be -1, 0 or +1"));
        }
        Ok(ImageField {
            depth,
            values,
            partial,
        })
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn is_partial(&self) -> bool {
        self.partial
    }

    /// Value at `(level, index)`; `None` only for the unassigned root of a
    /// partial field.
    pub fn get(&self, level: usize, index: usize) -> Option<i8> {
        if level == 0 && self.partial {
            return None;
        }
        Some(self.values[level_offset(level) + index])
    }

    pub fn values(&self) -> &[i8] {
        &self.values
    }

    pub fn flipped(&self) -> ImageField {
        ImageField {
            depth: self.depth,
            values: self.values.iter().map(|&v| -v).collect(),
            partial: self.partial,
        }
    }

    /// Restriction to `ball(r)`, keeping the partial flag.
    pub fn restricted(&self, r: usize) -> Result<ImageField> {
        if r > self.depth {
            return Err(domain!("cannot restrict depth {} to {r}", self.depth));
        }
        Ok(ImageField {
            depth: r,
            values: self.values[..ball_size(r)].to_vec(),
            partial: self.partial,
        })
    }

    /// CSV rows `address,value`; a partial field marks the root as `r,?`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("address,value\n");
        for (v, &val) in ball(self.depth).iter().zip(&self.values) {
            if v.is_root() && self.partial {
                out.push_str("r,?\n");
            } else {
                out.push_str(&format!("{v},{val}\n"));
            }
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(text.as_bytes());
        let mut entries: Vec<(usize, usize, Option<i8>)> = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
            if rec.len() != 2 {
                return Err(Error::Parse("expected address,value".into()));
            }
            let v = crate::tree::VertexAddress::parse(&rec[0])?;
            let raw = rec[1].trim();
            let val = if raw == "?" {
                if !v.is_root() {
                    return Err(Error::Parse("only the root may be unassigned".into()));
                }
                None
            } else {
                Some(
                    raw.parse::<i8>()
                        .map_err(|_| Error::Parse(format!("bad image value {raw:?}")))?,
                )
            };
            entries.push((v.level(), v.index() as usize, val));
        }
        let depth = entries
            .iter()
            .map(|(l, _, _)| *l)
            .max()
            .ok_or_else(|| Error::Parse("empty image field".into()))?;
        let partial = entries.iter().any(|(l, _, v)| *l == 0 && v.is_none());
        let mut values = vec![0i8; ball_size(depth)];
        for (l, i, v) in entries {
            values[level_offset(l) + i] = v.unwrap_or(0);
        }
        if partial {
            ImageField::new_partial(depth, values)
        } else {
            ImageField::new_full(depth, values)
        }
    }
}

fn cell_majority(a: i8, b: i8, c: i8) -> i8 {
    if a == b && b == c {
        a
    } else {
        0
    }
}

/// Deterministic majority rule: consumes spins of depth R+1, emits the image
/// of depth R.
pub fn majority_image(sigma: &SpinField) -> Result<ImageField> {
    let d = sigma.depth();
    if d < 1 {
        return Err(domain!("majority image needs spin depth >= 1"));
    }
    let r = d - 1;
    let mut values = Vec::with_capacity(ball_size(r));
    for l in 0..=r {
        for i in 0..(1usize << l) {
            values.push(cell_majority(
                sigma.get(l, i),
                sigma.get(l + 1, 2 * i),
                sigma.get(l + 1, 2 * i + 1),
            ));
        }
    }
    ImageField::new_full(r, values)
}

/// Stochastic variant: each cell's +-1 output is erased to 0 with
/// probability `epsilon`, independently per cell; deterministic in `seed`.
pub fn stochastic_image(sigma: &SpinField, epsilon: f64, seed: u64) -> Result<ImageField> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(domain!("epsilon must lie in [0,1], got {epsilon}"));
    }
    let det = majority_image(sigma)?;
    let mut rng = rng_from_seed(seed);
    let values = det
        .values()
        .iter()
        .map(|&v| {
            let erase: f64 = rng.gen();
            if erase < epsilon {
                0
            } else {
                v
            }
        })
        .collect();
    ImageField::new_full(det.depth(), values)
}

/// Per-level upward message of the unconstrained region, one `[f64;2]` per
/// level because all vertices of a level are exchangeable there. Works for
/// the uniform boundary conditions; `Fixed` tails fall back to the caller.
fn uniform_tail_messages(
    from_level: usize,
    depth: usize,
    bc: &BoundaryCondition,
    params: &ModelParams,
) -> Result<Vec<[f64; 2]>> {
    let bj = params.beta * params.coupling;
    let bh = params.beta * params.field;
    let boundary = match bc {
        BoundaryCondition::Plus => 1.0,
        BoundaryCondition::Minus => -1.0,
        BoundaryCondition::Free => 0.0,
        BoundaryCondition::Fixed(_) => {
            return Err(domain!(
                "fixed tails are not supported by the image-conditioning inference; \
                 use plus, minus or free"
            ))
        }
    };
    // index 0 holds level `from_level`, last holds level `depth`
    let mut out = vec![[1.0f64; 2]; depth - from_level + 1];
    let last = out.len() - 1;
    out[last] = [
        (-bj * 2.0 * boundary).exp(),
        (bj * 2.0 * boundary).exp(),
    ];
    for k in (0..last).rev() {
        let child = out[k + 1];
        let mut m = [0.0f64; 2];
        for (si, &s) in SPIN_VALUES.iter().enumerate() {
            let mut sum = 0.0;
            for (ci, &cs) in SPIN_VALUES.iter().enumerate() {
                sum += (bj * s * cs + bh * cs).exp() * child[ci];
            }
            m[si] = sum * sum;
        }
        let max = m[0].max(m[1]);
        m[0] /= max;
        m[1] /= max;
        out[k] = m;
    }
    Ok(out)
}

/// Exact conditional expectation of the root image spin given `eta` on
/// `ball(R)` minus the root, computed on the depth-`big_d` tree with spin
/// boundary `tail` at `sphere(big_d + 1)`; image spins on levels R+1..D-1
/// are unconstrained. Returns `P[image_root = +1] - P[image_root = -1]`
/// from the exact joint law of the root cell.
pub fn conditional_image_magnetization(
    eta: &ImageField,
    tail: &BoundaryCondition,
    big_d: usize,
    params: &ModelParams,
) -> Result<f64> {
    let r = eta.depth();
    if big_d < r + 1 {
        return Err(domain!("need D >= R + 1 (R = {r}, D = {big_d})"));
    }
    let bj = params.beta * params.coupling;
    let bh = params.beta * params.field;
    let w = |s: f64, cs: f64| (bj * s * cs + bh * cs).exp();

    // unconstrained region: levels R+1..=D collapse to one message per level
    let tail_msgs = uniform_tail_messages(r + 1, big_d, tail, params)?;
    let boundary_msg = tail_msgs[0]; // message at level R+1

    // constrained region: levels R down to 1, one message per vertex,
    // combining children under the cell indicator of the conditioned vertex
    let mut child_level: Vec<[f64; 2]> = Vec::new();
    for l in (1..=r).rev() {
        let n = 1usize << l;
        let mut cur = Vec::with_capacity(n);
        for i in 0..n {
            let want = eta.get(l, i).expect("levels >= 1 are assigned");
            let (m0, m1) = if l == r {
                (boundary_msg, boundary_msg)
            } else {
                (child_level[2 * i], child_level[2 * i + 1])
            };
            let mut m = [0.0f64; 2];
            for (si, &s) in SPIN_VALUES.iter().enumerate() {
                let mut sum = 0.0;
                for (c0, &s0) in SPIN_VALUES.iter().enumerate() {
                    for (c1, &s1) in SPIN_VALUES.iter().enumerate() {
                        if cell_majority(sign_of(si), sign_of(c0), sign_of(c1)) != want {
                            continue;
                        }
                        sum += w(s, s0) * w(s, s1) * m0[c0] * m1[c1];
                    }
                }
                m[si] = sum;
            }
            let max = m[0].max(m[1]);
            if !(max > ZERO_NORMALIZER) {
                return Err(Error::InfeasibleConditioning);
            }
            m[0] /= max;
            m[1] /= max;
            cur.push(m);
        }
        child_level = cur;
    }

    // root cell joint over (root spin, both children)
    let (m0, m1) = if r == 0 {
        (boundary_msg, boundary_msg)
    } else {
        (child_level[0], child_level[1])
    };
    let mut num = 0.0;
    let mut z = 0.0;
    for (si, &s) in SPIN_VALUES.iter().enumerate() {
        let prior = (bh * s).exp();
        for (c0, &s0) in SPIN_VALUES.iter().enumerate() {
            for (c1, &s1) in SPIN_VALUES.iter().enumerate() {
                let weight = prior * w(s, s0) * w(s, s1) * m0[c0] * m1[c1];
                z += weight;
                num += cell_majority(sign_of(si), sign_of(c0), sign_of(c1)) as f64 * weight;
            }
        }
    }
    if !(z > ZERO_NORMALIZER) {
        return Err(Error::InfeasibleConditioning);
    }
    Ok(num / z)
}

fn sign_of(index: usize) -> i8 {
    if index == 0 {
        -1
    } else {
        1
    }
}

/// Exact probability that the root image spin is 0 under the free measure at
/// volume `ball(depth)`.
pub fn image_zero_marginal(params: &ModelParams, depth: usize) -> Result<f64> {
    if depth < 2 {
        return Err(domain!("need depth >= 2, got {depth}"));
    }
    image_zero_marginal_under(params, depth, &BoundaryCondition::Free)
}

/// Same marginal under an arbitrary uniform boundary condition, for probing
/// how boundary choice moves the zero density.
pub fn image_zero_marginal_under(
    params: &ModelParams,
    depth: usize,
    bc: &BoundaryCondition,
) -> Result<f64> {
    if depth < 1 {
        return Err(domain!("need depth >= 1, got {depth}"));
    }
    let bj = params.beta * params.coupling;
    let bh = params.beta * params.field;
    let msgs = uniform_tail_messages(1, depth, bc, params)?;
    let child = msgs[0];
    let w = |s: f64, cs: f64| (bj * s * cs + bh * cs).exp();
    let mut mono = 0.0;
    let mut z = 0.0;
    for &s in SPIN_VALUES.iter() {
        let prior = (bh * s).exp();
        for (c0, &s0) in SPIN_VALUES.iter().enumerate() {
            for (c1, &s1) in SPIN_VALUES.iter().enumerate() {
                let weight = prior * w(s, s0) * w(s, s1) * child[c0] * child[c1];
                z += weight;
                if s == s0 && s0 == s1 {
                    mono += weight;
                }
            }
        }
    }
    Ok(1.0 - mono / z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gibbs::sample;
    use crate::perco::p_zero;
    use approx::assert_abs_diff_eq;

    fn p(beta: f64) -> ModelParams {
        ModelParams::new(beta).unwrap()
    }

    #[test]
    fn majority_rule_cases() {
        // depth-1 spin field: root +, children (+,+) then (+,-)
        let f = SpinField::new(1, vec![1, 1, 1]).unwrap();
        assert_eq!(majority_image(&f).unwrap().get(0, 0), Some(1));
        let f = SpinField::new(1, vec![1, 1, -1]).unwrap();
        assert_eq!(majority_image(&f).unwrap().get(0, 0), Some(0));
        let f = SpinField::constant(3, -1).unwrap();
        let img = majority_image(&f).unwrap();
        assert!(img.values().iter().all(|&v| v == -1));
    }

    #[test]
    fn flip_covariance() {
        let f = sample(4, &BoundaryCondition::Free, &p(0.8), 3).unwrap();
        let a = majority_image(&f.flipped()).unwrap();
        let b = majority_image(&f).unwrap().flipped();
        assert_eq!(a, b);
    }

    #[test]
    fn stochastic_image_limits() {
        let f = sample(4, &BoundaryCondition::Free, &p(0.6), 5).unwrap();
        assert_eq!(
            stochastic_image(&f, 0.0, 1).unwrap(),
            majority_image(&f).unwrap()
        );
        assert!(stochastic_image(&f, 1.0, 1)
            .unwrap()
            .values()
            .iter()
            .all(|&v| v == 0));
        assert!(stochastic_image(&f, 1.5, 1).is_err());
    }

    #[test]
    fn stochastic_image_erasure_rate() {
        // all-plus input: every cell is +1 deterministically, so the zero
        // fraction estimates epsilon directly
        let depth = 9; // 1023 cells
        let f = SpinField::constant(depth, 1).unwrap();
        let mut zeros = 0usize;
        let mut cells = 0usize;
        for rep in 0..100 {
            let img = stochastic_image(&f, 0.5, crate::rng::derive_seed(77, rep)).unwrap();
            zeros += img.values().iter().filter(|&&v| v == 0).count();
            cells += img.values().len();
        }
        let frac = zeros as f64 / cells as f64;
        let sigma = (0.25 / cells as f64).sqrt();
        assert!((frac - 0.5).abs() < 3.0 * sigma, "zero fraction {frac}");
    }

    #[test]
    fn zero_marginal_values() {
        assert_abs_diff_eq!(
            image_zero_marginal(&p(0.0), 3).unwrap(),
            0.75,
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(
            image_zero_marginal(&p(1.0), 4).unwrap(),
            p_zero(1.0).unwrap(),
            epsilon = 1e-13
        );
        assert!(image_zero_marginal(&p(20.0), 3).unwrap() <= 1e-15);
        assert!(image_zero_marginal(&p(1.0), 1).is_err());
    }

    #[test]
    fn zero_marginal_depth_independent() {
        for d in 2..8 {
            assert_abs_diff_eq!(
                image_zero_marginal(&p(0.7), d).unwrap(),
                p_zero(0.7).unwrap(),
                epsilon = 1e-13
            );
        }
    }

    #[test]
    fn all_plus_conditioning_is_positive_and_tail_free() {
        let eta = ImageField::constant_partial(2, 1).unwrap();
        let m_plus =
            conditional_image_magnetization(&eta, &BoundaryCondition::Plus, 6, &p(1.0)).unwrap();
        let m_minus =
            conditional_image_magnetization(&eta, &BoundaryCondition::Minus, 6, &p(1.0)).unwrap();
        assert!(m_plus > 0.0 && m_plus <= 1.0);
        // a zero-free conditioning pins every constrained spin, screening the
        // root from the tail completely
        assert_abs_diff_eq!(m_plus, m_minus, epsilon = 1e-12);
    }

    #[test]
    fn contradictory_conditioning_is_infeasible() {
        // +1 at vertex "1" pins sigma at 1,10,11 to +1; -1 at "10" demands
        // sigma_10 = -1
        let mut values = vec![0i8; ball_size(2)];
        values[2] = 1; // vertex "1"
        values[5] = -1; // vertex "10"
        let eta = ImageField::new_partial(2, values).unwrap();
        assert!(matches!(
            conditional_image_magnetization(&eta, &BoundaryCondition::Free, 4, &p(1.0)),
            Err(Error::InfeasibleConditioning)
        ));
    }

    #[test]
    fn empty_conditioning_matches_sampled_pushforward() {
        // R = 0: no constraints; the DP value is the plain expectation of the
        // root image spin, cross-checked against Monte Carlo
        let params = p(0.5);
        let eta = ImageField::new_partial(0, vec![0]).unwrap();
        let exact =
            conditional_image_magnetization(&eta, &BoundaryCondition::Plus, 6, &params).unwrap();
        let sampler = crate::gibbs::Sampler::new(6, &BoundaryCondition::Plus, &params).unwrap();
        let n = 20_000u64;
        let mean: f64 = (0..n)
            .map(|i| {
                let sigma = sampler.sample(crate::rng::derive_seed(123, i));
                majority_image(&sigma).unwrap().values()[0] as f64
            })
            .sum::<f64>()
            / n as f64;
        assert!((exact - mean).abs() < 0.03, "exact {exact} mc {mean}");
    }

    #[test]
    fn image_csv_round_trip() {
        let f = sample(3, &BoundaryCondition::Free, &p(0.8), 9).unwrap();
        let img = majority_image(&f).unwrap();
        assert_eq!(ImageField::from_csv(&img.to_csv()).unwrap(), img);

        let partial = ImageField::constant_partial(2, 0).unwrap();
        let text = partial.to_csv();
        assert!(text.contains("r,?"));
        let back = ImageField::from_csv(&text).unwrap();
        assert!(back.is_partial());
        assert_eq!(back, partial);
    }
}
