//! Transfer-matrix analysis of the constrained Ising chain along a path of
//! zeros.
//!
//! Along a single root-to-boundary path of zeros, the original spins on the
//! path form a one-dimensional chain in an external +-1 environment `h_n`
//! (the flanking image spins), with a hard-core exclusion: a cell on the
//! path is zero, so the path spins can never agree with the flank twice in a
//! row. Each step contributes a 2x2 transfer matrix; products of those
//! matrices give the two conditional magnetizations seen from the two chain
//! boundary values, and the ratios of product entries obey one-dimensional
//! contraction maps.
//!
//! Matrix convention: rows and columns are indexed in spin order (-,+); the
//! row is the earlier chain spin. The hard-core exclusion appears as an
//! exact zero entry, never as a large finite penalty.

use crate::error::{domain, Error, Result};

/// A 2x2 nonnegative matrix on spin states, `(row, col)` in (-,+) order.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransferMatrix(pub [[f64; 2]; 2]);

impl TransferMatrix {
    pub fn identity() -> Self {
        TransferMatrix([[1.0, 0.0], [0.0, 1.0]])
    }

    /// Entry by spin values (+-1).
    pub fn entry(&self, row_spin: i8, col_spin: i8) -> f64 {
        self.0[spin_index(row_spin)][spin_index(col_spin)]
    }

    pub fn mul(&self, rhs: &TransferMatrix) -> TransferMatrix {
        let a = &self.0;
        let b = &rhs.0;
        TransferMatrix([
            [
                a[0][0] * b[0][0] + a[0][1] * b[1][0],
                a[0][0] * b[0][1] + a[0][1] * b[1][1],
            ],
            [
                a[1][0] * b[0][0] + a[1][1] * b[1][0],
                a[1][0] * b[0][1] + a[1][1] * b[1][1],
            ],
        ])
    }

    pub fn max_entry(&self) -> f64 {
        self.0
            .iter()
            .flat_map(|r| r.iter())
            .fold(0.0f64, |m, &x| m.max(x))
    }

    pub fn scaled(&self, c: f64) -> TransferMatrix {
        TransferMatrix(self.0.map(|row| row.map(|x| x * c)))
    }

    pub fn all_positive(&self) -> bool {
        self.0.iter().flat_map(|r| r.iter()).all(|&x| x > 0.0)
    }

    pub fn max_abs_diff(&self, other: &TransferMatrix) -> f64 {
        let mut m = 0.0f64;
        for i in 0..2 {
            for j in 0..2 {
                m = m.max((self.0[i][j] - other.0[i][j]).abs());
            }
        }
        m
    }
}

fn spin_index(s: i8) -> usize {
    debug_assert!(s == 1 || s == -1);
    if s == -1 {
        0
    } else {
        1
    }
}

fn check_spin(s: i8, what: &str) -> Result<()> {
    if s != 1 && s != -1 {
        return Err(domain!("{what} must be +1 or -1, got {s}"));
    }
    Ok(())
}

/// One chain step under flank `h_cur` following flank `h_prev`:
/// `exp(beta*x*y + (beta/2)*(h_prev*x + h_cur*y))` with the hard-core zero
/// at `(h_cur, h_cur)` — the step where the path spin agrees with the flank
/// twice in a row would close the cell and end the path of zeros.
pub fn q_matrix(h_prev: i8, h_cur: i8, beta: f64) -> Result<TransferMatrix> {
    check_spin(h_prev, "h_prev")?;
    check_spin(h_cur, "h_cur")?;
    if !(beta >= 0.0) {
        return Err(domain!("beta must be nonnegative, got {beta}"));
    }
    let mut m = [[0.0f64; 2]; 2];
    let hc = spin_index(h_cur);
    for x in 0..2 {
        for y in 0..2 {
            if x == hc && y == hc {
                continue; // hard-core exclusion
            }
            let xs = if x == 0 { -1.0 } else { 1.0 };
            let ys = if y == 0 { -1.0 } else { 1.0 };
            m[x][y] =
                (beta * xs * ys + 0.5 * beta * (h_prev as f64 * xs + h_cur as f64 * ys)).exp();
        }
    }
    Ok(TransferMatrix(m))
}

/// `a(beta) = exp(-beta) / (cosh(beta) + sqrt(exp(-beta) + sinh(beta)^2))`,
/// always in (0,1).
pub fn a_coeff(beta: f64) -> f64 {
    let e = (-beta).exp();
    e / (beta.cosh() + (e + beta.sinh().powi(2)).sqrt())
}

/// Constrained transition matrix of the homogeneous all-plus environment:
/// `[[a, 1-a], [1, 0]]` in (-,+) order.
pub fn p_plus(beta: f64) -> TransferMatrix {
    let a = a_coeff(beta);
    TransferMatrix([[a, 1.0 - a], [1.0, 0.0]])
}

/// Closed form for the n-th power of `p_plus`, `n >= 1`: the spectral
/// decomposition with eigenvalues 1 and `a - 1`,
///
/// ```text
/// [ 1/(2-a) - (a-1)^(n+1)/(2-a)   (1-a)/(2-a) + (a-1)^(n+1)/(2-a) ]
/// [ 1/(2-a) - (a-1)^n/(2-a)       (1-a)/(2-a) + (a-1)^n/(2-a)     ]
/// ```
///
/// (checked against the iterated product in the tests).
pub fn p_plus_power(n: u32, beta: f64) -> Result<TransferMatrix> {
    if n < 1 {
        return Err(domain!("power must be >= 1"));
    }
    let a = a_coeff(beta);
    let d = 2.0 - a;
    let t_hi = (a - 1.0).powi(n as i32 + 1); // transient term, row -
    let t_lo = (a - 1.0).powi(n as i32); // transient term, row +
    Ok(TransferMatrix([
        [(1.0 - t_hi) / d, (1.0 - a + t_hi) / d],
        [(1.0 - t_lo) / d, (1.0 - a + t_lo) / d],
    ]))
}

/// Limit of `p_plus_power` as n grows: both rows equal
/// `(1/(2-a), (1-a)/(2-a))`.
pub fn limit_matrix(beta: f64) -> TransferMatrix {
    let a = a_coeff(beta);
    let d = 2.0 - a;
    TransferMatrix([[1.0 / d, (1.0 - a) / d], [1.0 / d, (1.0 - a) / d]])
}

/// Closed-form limit magnetization `exp(2*beta) * a * (1-a) / (2-a)` for the
/// homogeneous single-zero-path environment; the all-minus environment gives
/// the negative.
pub fn homogeneous_limit_magnetization(beta: f64) -> f64 {
    let a = a_coeff(beta);
    (2.0 * beta).exp() * a * (1.0 - a) / (2.0 - a)
}

/// Flanking environment of a zero path: the sign at the path top plus the
/// flank sequence `h_1..h_R`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainEnvironment {
    eta0_sign: i8,
    fields: Vec<i8>,
}

impl ChainEnvironment {
    pub fn new(eta0_sign: i8, fields: Vec<i8>) -> Result<Self> {
        check_spin(eta0_sign, "eta0_sign")?;
        if fields.is_empty() {
            return Err(domain!("environment needs at least one field value"));
        }
        for &f in &fields {
            check_spin(f, "field entry")?;
        }
        Ok(ChainEnvironment { eta0_sign, fields })
    }

    /// Parse a sign string like `"++-+"`: the first character is the sign at
    /// the path top (`h_0`), the rest are `h_1..`.
    pub fn parse(s: &str) -> Result<Self> {
        let signs: Vec<i8> = s
            .chars()
            .map(|c| match c {
                '+' => Ok(1),
                '-' => Ok(-1),
                _ => Err(Error::Parse(format!("invalid environment character {c:?}"))),
            })
            .collect::<Result<_>>()?;
        if signs.len() < 2 {
            return Err(Error::Parse(
                "environment string needs at least two signs".into(),
            ));
        }
        Self::new(signs[0], signs[1..].to_vec())
    }

    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn eta0_sign(&self) -> i8 {
        self.eta0_sign
    }

    pub fn fields(&self) -> &[i8] {
        &self.fields
    }

    /// `h_n` with `h_0` the top sign.
    pub fn h(&self, n: usize) -> i8 {
        if n == 0 {
            self.eta0_sign
        } else {
            self.fields[n - 1]
        }
    }
}

/// True when the flank sequence `h_1..` strictly alternates (either parity).
/// Those environments keep a zero entry in every product and the ratio
/// analysis never starts.
pub fn is_alternating(env: &ChainEnvironment) -> bool {
    env.fields
        .windows(2)
        .all(|w| w[0] == -w[1])
}

/// Ratio trajectories of the running product `P_n = Q_1 Q_2 ... Q_n` (the
/// row index is the chain boundary value `x_0`): `n0` is the first n at
/// which every entry of `P_n` is positive, `x_n` and `y_n` are the row
/// ratios `a_n/b_n` and `c_n/d_n` for `n = n0..=R`.
#[derive(Clone, Debug)]
pub struct RatioTrajectory {
    pub n0: Option<usize>,
    /// `x[k]` is `x_{n0+k}`; empty when `n0` is `None`.
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl RatioTrajectory {
    pub fn diff(&self, k: usize) -> f64 {
        (self.x[k] - self.y[k]).abs()
    }
}

fn product_step(p: &TransferMatrix, env: &ChainEnvironment, n: usize, beta: f64) -> TransferMatrix {
    let q = q_matrix(env.h(n - 1), env.h(n), beta).expect("validated env");
    let next = p.mul(&q);
    next.scaled(1.0 / next.max_entry())
}

pub fn ratio_trajectories(env: &ChainEnvironment, beta: f64, r: usize) -> Result<RatioTrajectory> {
    if r > env.len() {
        return Err(domain!("R = {r} exceeds environment length {}", env.len()));
    }
    let mut p = TransferMatrix::identity();
    let mut n0 = None;
    let mut x = Vec::new();
    let mut y = Vec::new();
    for n in 1..=r {
        p = product_step(&p, env, n, beta);
        if n0.is_none() && p.all_positive() {
            n0 = Some(n);
        }
        if n0.is_some() {
            x.push(p.0[0][0] / p.0[0][1]);
            y.push(p.0[1][0] / p.0[1][1]);
        }
    }
    Ok(RatioTrajectory { n0, x, y })
}

/// Conditional probability that the chain ends in + seen from boundary value
/// `x0`: `[P_R]_{x0,+} / ([P_R]_{x0,-} + [P_R]_{x0,+})` with per-step
/// normalization of the product.
pub fn chain_conditional_magnetization(
    env: &ChainEnvironment,
    x0: i8,
    r: usize,
    beta: f64,
) -> Result<f64> {
    check_spin(x0, "x0")?;
    if r > env.len() {
        return Err(domain!("R = {r} exceeds environment length {}", env.len()));
    }
    let mut p = TransferMatrix::identity();
    for n in 1..=r {
        p = product_step(&p, env, n, beta);
    }
    let row = p.0[spin_index(x0)];
    let denom = row[0] + row[1];
    if !(denom > 0.0) {
        return Err(Error::DegenerateProduct);
    }
    Ok(row[1] / denom)
}

/// Tags for the four one-dimensional ratio evolution maps.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MapTag {
    F1,
    F2,
    F3,
    F4,
}

/// Value and Lipschitz constant (on `x >= 1`) of the tagged map:
/// `f1 = 1 + exp(-beta)/x`, `f2 = exp(beta) + exp(-2 beta)/x`,
/// `f3 = 1/(x + exp(beta))`, `f4 = 1/(exp(beta) + exp(-2 beta) x)`, with
/// constants `exp(-beta)` for f1 and `exp(-2 beta)` for the others.
pub fn contraction_map(tag: MapTag, x: f64, beta: f64) -> Result<(f64, f64)> {
    if !(x > 0.0) {
        return Err(domain!("map argument must be positive, got {x}"));
    }
    let e = (-beta).exp();
    let e2 = (-2.0 * beta).exp();
    let eb = beta.exp();
    Ok(match tag {
        MapTag::F1 => (1.0 + e / x, e),
        MapTag::F2 => (eb + e2 / x, e2),
        MapTag::F3 => (1.0 / (x + eb), e2),
        MapTag::F4 => (1.0 / (eb + e2 * x), e2),
    })
}

/// Actual two-boundary gap at level `R` together with the decay bound
/// `exp(n0*beta) * exp(-beta*R) * |x_{n0} - y_{n0}|`. Not applicable to
/// alternating environments (no positive product ever appears) or when the
/// product has not turned positive by `R`.
pub fn gap_bound(env: &ChainEnvironment, r: usize, beta: f64) -> Result<(f64, f64)> {
    if is_alternating(env) {
        return Err(Error::NotApplicable(
            "gap bound is undefined for alternating environments".into(),
        ));
    }
    let traj = ratio_trajectories(env, beta, r)?;
    let n0 = traj.n0.ok_or_else(|| {
        Error::NotApplicable(format!("product has a zero entry up to R = {r}"))
    })?;
    let m_plus = chain_conditional_magnetization(env, 1, r, beta)?;
    let m_minus = chain_conditional_magnetization(env, -1, r, beta)?;
    let actual = (m_plus - m_minus).abs();
    let bound = (n0 as f64 * beta).exp() * (-beta * r as f64).exp() * traj.diff(0);
    Ok((actual, bound))
}
