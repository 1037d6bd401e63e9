//! Small-argument behaviour of ordered eigenvalues of real central Wishart
//! matrices `XXᵀ`, `X ∈ ℝ^{n×m}` with i.i.d. standard normal entries.
//!
//! `Pr(λ_k < ε) = β_k ε^{d_k} + o(ε^{d_k})` with `d_k = k(m−n+k)/2`. The
//! coefficient is available in closed form for `k = 1` through a Pfaffian;
//! for `k > 1` it is only estimated from samples.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::montecarlo::{linear_fit, run_chunks, Estimate, DEFAULT_CHUNK};
use crate::random_matrix::{ordered_eigenvalues_sym, sample_real_wishart};

/// Largest matrix handled by [`pfaffian`]; the memo table has `2^size` slots.
pub const MAX_PFAFFIAN_SIZE: usize = 20;

/// Largest `m` accepted by [`knm_constant`].
pub const MAX_KNM_M: usize = 64;

const LN_2: f64 = std::f64::consts::LN_2;

/// Real matrix with `a_ij = −a_ji` exactly and a zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct SkewSymmetricMatrix(DMatrix<f64>);

impl SkewSymmetricMatrix {
    pub fn new(a: DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::Dimension(format!(
                "{}x{} is not square",
                n,
                a.ncols()
            )));
        }
        for i in 0..n {
            if a[(i, i)] != 0.0 {
                return Err(Error::Contract(format!("non-zero diagonal at {i}")));
            }
            for j in (i + 1)..n {
                if a[(i, j)] != -a[(j, i)] {
                    return Err(Error::Contract(format!("a[{i},{j}] != -a[{j},{i}]")));
                }
            }
        }
        Ok(Self(a))
    }

    /// Build from the strict upper triangle, `f(i, j)` for `i < j`.
    pub fn from_upper<F: FnMut(usize, usize) -> f64>(n: usize, mut f: F) -> Self {
        let mut a = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in (i + 1)..n {
                let v = f(i, j);
                a[(i, j)] = v;
                a[(j, i)] = -v;
            }
        }
        Self(a)
    }

    pub fn size(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }
}

/// Pfaffian by skew-symmetric Gaussian elimination with partial pivoting
/// (Parlett-Reid). The empty matrix has Pfaffian 1.
pub fn pfaffian(a: &SkewSymmetricMatrix) -> Result<f64> {
    let n = a.size();
    if n % 2 == 1 {
        return Err(Error::Domain(format!("Pfaffian of odd size {n}")));
    }
    if n > MAX_PFAFFIAN_SIZE {
        return Err(Error::Domain(format!(
            "size {n} exceeds the supported maximum {MAX_PFAFFIAN_SIZE}"
        )));
    }
    let mut w = a.as_matrix().clone();
    let mut pf = 1.0;
    for k in (0..n).step_by(2) {
        let kp = (k + 1..n)
            .max_by(|&p, &q| w[(p, k)].abs().total_cmp(&w[(q, k)].abs()))
            .unwrap_or(k + 1);
        if kp != k + 1 {
            w.swap_rows(k + 1, kp);
            w.swap_columns(k + 1, kp);
            pf = -pf;
        }
        let pivot = w[(k, k + 1)];
        if pivot == 0.0 {
            return Ok(0.0);
        }
        pf *= pivot;
        for i in k + 2..n {
            let ti = w[(k, i)] / pivot;
            let ui = w[(i, k + 1)];
            for j in k + 2..n {
                let tj = w[(k, j)] / pivot;
                let uj = w[(j, k + 1)];
                w[(i, j)] += ti * uj - ui * tj;
            }
        }
    }
    Ok(pf)
}

fn check_knm(k: usize, n: usize, m: usize) -> Result<()> {
    if k == 0 || k > n || n > m {
        return Err(Error::Domain(format!(
            "need 1 <= k <= n <= m, got k={k}, n={n}, m={m}"
        )));
    }
    Ok(())
}

/// `d_k = k(m−n+k)/2`.
pub fn diversity_exponent(k: usize, n: usize, m: usize) -> Result<f64> {
    check_knm(k, n, m)?;
    Ok(0.5 * (k * (m - n + k)) as f64)
}

/// `ln K_nm`, `K_nm = (2^m/π)^{n/2} ∏_{i=1}^n Γ((m−i+1)/2) Γ((n−i+1)/2)`.
pub fn ln_knm(n: usize, m: usize) -> Result<f64> {
    check_knm(1, n, m)?;
    if m > MAX_KNM_M {
        return Err(Error::Range(format!("m = {m} exceeds {MAX_KNM_M}")));
    }
    let mut acc = 0.5 * n as f64 * (m as f64 * LN_2 - std::f64::consts::PI.ln());
    for i in 1..=n {
        acc += ln_gamma(0.5 * (m - i + 1) as f64) + ln_gamma(0.5 * (n - i + 1) as f64);
    }
    Ok(acc)
}

/// Normalising constant of the unordered joint eigenvalue density.
pub fn knm_constant(n: usize, m: usize) -> Result<f64> {
    let v = ln_knm(n, m)?.exp();
    if !v.is_finite() {
        return Err(Error::Range(format!("K_nm overflows for n={n}, m={m}")));
    }
    Ok(v)
}

/// `b_i = (m−n+1)/2 + i`, 1-based.
fn b(i: usize, n: usize, m: usize) -> f64 {
    0.5 * (m - n + 1) as f64 + i as f64
}

/// `S_ij = Σ_{k=1}^{j−i} 2^{−(b_i+b_j−k)} Γ(b_i+b_j−k) / (Γ(b_i) Γ(b_{j−k+1}))`,
/// so that `J_ij = 2^{b_i+b_j+1} Γ(b_i) Γ(b_j) S_ij`.
fn s_sum(i: usize, j: usize, n: usize, m: usize) -> f64 {
    let (bi, bj) = (b(i, n, m), b(j, n, m));
    (1..=(j - i))
        .map(|k| {
            let s = bi + bj - k as f64;
            (ln_gamma(s) - s * LN_2 - ln_gamma(bi) - ln_gamma(b(j - k + 1, n, m))).exp()
        })
        .sum()
}

fn j_size(n: usize) -> usize {
    if n % 2 == 0 {
        n
    } else {
        n - 1
    }
}

/// The skew-symmetric matrix whose Pfaffian enters `β₁`. Size `n−1` for odd
/// `n` and `n` for even `n` (bordered by `2^{b_i}Γ(b_i)`).
pub fn j_matrix(n: usize, m: usize) -> Result<SkewSymmetricMatrix> {
    check_knm(1, n, m)?;
    Ok(SkewSymmetricMatrix::from_upper(j_size(n), |i0, j0| {
        let (i, j) = (i0 + 1, j0 + 1);
        let bi = b(i, n, m);
        if j == n {
            (bi * LN_2 + ln_gamma(bi)).exp()
        } else {
            let bj = b(j, n, m);
            ((bi + bj + 1.0) * LN_2 + ln_gamma(bi) + ln_gamma(bj)).exp() * s_sum(i, j, n, m)
        }
    }))
}

/// `J` with row and column `i` divided by `c_i = 2^{b_i}Γ(b_i)` (`c_n = 1`
/// for the even border), together with `Σ ln c_i`. Keeps entries O(1).
fn scaled_j(n: usize, m: usize) -> (SkewSymmetricMatrix, f64) {
    let size = j_size(n);
    let scaled = SkewSymmetricMatrix::from_upper(size, |i0, j0| {
        let (i, j) = (i0 + 1, j0 + 1);
        if j == n {
            1.0
        } else {
            2.0 * s_sum(i, j, n, m)
        }
    });
    let ln_c = (1..=size.min(n - 1))
        .map(|i| {
            let bi = b(i, n, m);
            bi * LN_2 + ln_gamma(bi)
        })
        .sum();
    (scaled, ln_c)
}

/// `I(b_j, b_i; ∞)`, the probability that a `Gamma(b_i)` variate does not
/// exceed an independent `Gamma(b_j)` variate (unit scale). `b_i − b_j` must
/// be an integer.
pub fn incomplete_gamma_ratio(b_j: f64, b_i: f64) -> Result<f64> {
    if !(b_j > 0.0 && b_i > 0.0) {
        return Err(Error::Domain(format!(
            "shapes must be positive: {b_j}, {b_i}"
        )));
    }
    let gap = b_i - b_j;
    let steps = gap.round();
    if (gap - steps).abs() > 1e-9 {
        return Err(Error::Domain(format!("{b_i} - {b_j} is not an integer")));
    }
    if steps < 0.0 {
        return Ok(1.0 - incomplete_gamma_ratio(b_i, b_j)?);
    }
    let tail: f64 = (1..=steps as usize)
        .map(|k| {
            let s = b_j + b_i - k as f64;
            (ln_gamma(s) - s * LN_2 - ln_gamma(b_j) - ln_gamma(b_i - k as f64 + 1.0)).exp()
        })
        .sum();
    Ok(0.5 - tail)
}

/// `β₁ = K_nm⁻¹ d₁⁻¹ |Pf J|`, the leading coefficient of `Pr(λ₁ < ε)`.
pub fn beta1(n: usize, m: usize) -> Result<f64> {
    Ok(ln_beta1(n, m)?.exp())
}

/// `ln β₁`. The Pfaffian of the scaled `J` is evaluated in exact rational
/// arithmetic: it is tiny next to its O(1) entries and loses most of its
/// digits in floating point once `n` grows.
pub fn ln_beta1(n: usize, m: usize) -> Result<f64> {
    check_knm(1, n, m)?;
    if j_size(n) > MAX_PFAFFIAN_SIZE {
        return Err(Error::Domain(format!(
            "n = {n} needs a Pfaffian beyond size {MAX_PFAFFIAN_SIZE}"
        )));
    }
    let d1 = 0.5 * (m - n + 1) as f64;
    let (_, ln_c) = scaled_j(n, m);
    let ln_pf = exact::ln_abs_scaled_pfaffian(n, m)?;
    Ok(-ln_knm(n, m)? - d1.ln() + ln_c + ln_pf)
}

/// Float evaluation of `ln β₁` through the pivoted Pfaffian of the scaled
/// `J`. Accurate to about 1e-10 for `n <= 6`.
pub fn ln_beta1_float(n: usize, m: usize) -> Result<f64> {
    check_knm(1, n, m)?;
    let d1 = 0.5 * (m - n + 1) as f64;
    let (scaled, ln_c) = scaled_j(n, m);
    let pf = pfaffian(&scaled)?;
    if pf == 0.0 || !pf.is_finite() {
        return Err(Error::Range(format!(
            "degenerate Pfaffian for n={n}, m={m}"
        )));
    }
    Ok(-ln_knm(n, m)? - d1.ln() + ln_c + pf.abs().ln())
}

mod exact {
    use num_bigint::BigInt;
    use num_rational::BigRational;
    use num_traits::{One, Signed, ToPrimitive, Zero};

    use super::j_size;
    use crate::error::{Error, Result};

    fn factorial(k: u64) -> BigInt {
        (1..=k).fold(BigInt::one(), |acc, i| acc * i)
    }

    /// `Γ(b2/2)` as a rational times `√π` when `b2` is odd.
    fn gamma_rational(b2: u64) -> BigRational {
        if b2 % 2 == 0 {
            BigRational::from_integer(factorial(b2 / 2 - 1))
        } else {
            let k = (b2 - 1) / 2;
            BigRational::new(factorial(2 * k), factorial(k) * (BigInt::one() << (2 * k)))
        }
    }

    /// `2 S_ij` up to a factor `1/π` when the shapes are half-integers.
    fn scaled_entry(i: u64, j: u64, n: u64, m: u64) -> BigRational {
        // 2 b_l = m − n + 1 + 2l
        let b2 = |l: u64| m - n + 1 + 2 * l;
        let gi = gamma_rational(b2(i));
        let mut sum = BigRational::zero();
        for k in 1..=(j - i) {
            let s = (b2(i) + b2(j)) / 2 - k;
            let num = BigRational::from_integer(factorial(s - 1));
            let den =
                &gi * gamma_rational(b2(j - k + 1)) * BigRational::from_integer(BigInt::one() << s);
            sum += num / den;
        }
        sum * BigRational::from_integer(BigInt::from(2))
    }

    fn pfaffian(mut w: Vec<Vec<BigRational>>) -> BigRational {
        let n = w.len();
        let mut pf = BigRational::one();
        for k in (0..n).step_by(2) {
            let Some(kp) = (k + 1..n).find(|&p| !w[p][k].is_zero()) else {
                return BigRational::zero();
            };
            if kp != k + 1 {
                w.swap(k + 1, kp);
                for row in w.iter_mut() {
                    row.swap(k + 1, kp);
                }
                pf = -pf;
            }
            let pivot = w[k][k + 1].clone();
            pf *= &pivot;
            let t: Vec<BigRational> = (0..n).map(|i| &w[k][i] / &pivot).collect();
            let u: Vec<BigRational> = (0..n).map(|i| w[i][k + 1].clone()).collect();
            for i in k + 2..n {
                for j in k + 2..n {
                    let delta = &t[i] * &u[j] - &u[i] * &t[j];
                    w[i][j] += delta;
                }
            }
        }
        pf
    }

    /// `ln |Pf J̃|` for the scaled `J̃`.
    pub(super) fn ln_abs_scaled_pfaffian(n: usize, m: usize) -> Result<f64> {
        let size = j_size(n);
        let (nn, mm) = (n as u64, m as u64);
        let w: Vec<Vec<BigRational>> = (0..size)
            .map(|r| {
                (0..size)
                    .map(|c| {
                        let (i, j) = (r.min(c) as u64 + 1, r.max(c) as u64 + 1);
                        let v = if r == c {
                            BigRational::zero()
                        } else if j == nn {
                            BigRational::one()
                        } else {
                            scaled_entry(i, j, nn, mm)
                        };
                        if r > c {
                            -v
                        } else {
                            v
                        }
                    })
                    .collect()
            })
            .collect();
        let pf = pfaffian(w).abs();
        if pf.is_zero() {
            return Err(Error::Range(format!(
                "degenerate Pfaffian for n={n}, m={m}"
            )));
        }
        // Every term pairs the border with one index, the rest through S.
        let s_pairs = size / 2 - usize::from(n % 2 == 0);
        let half = (m - n + 1) % 2 == 1;
        let ln_pi = if half {
            s_pairs as f64 * std::f64::consts::PI.ln()
        } else {
            0.0
        };
        let ln = |x: &BigInt| -> f64 {
            let bits = x.bits().saturating_sub(960);
            (x >> bits).to_f64().unwrap_or(f64::INFINITY).ln()
                + bits as f64 * std::f64::consts::LN_2
        };
        Ok(ln(pf.numer()) - ln(pf.denom()) - ln_pi)
    }
}

/// Small-`ε` law `Pr(λ_k < ε) ≈ β ε^{d_k}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenAsymptote {
    pub k: usize,
    pub n: usize,
    pub m: usize,
    pub exponent: f64,
    pub coefficient: Option<f64>,
}

impl EigenAsymptote {
    pub fn new(k: usize, n: usize, m: usize) -> Result<Self> {
        let exponent = diversity_exponent(k, n, m)?;
        let coefficient = if k == 1 { Some(beta1(n, m)?) } else { None };
        Ok(Self {
            k,
            n,
            m,
            exponent,
            coefficient,
        })
    }

    /// `β ε^{d}` when the coefficient is known.
    pub fn cdf(&self, epsilon: f64) -> Option<f64> {
        self.coefficient.map(|c| c * epsilon.powf(self.exponent))
    }
}

/// Draw `trials` samples of `λ_k(XXᵀ)`, returned sorted ascending.
pub fn sample_order_statistic(
    k: usize,
    n: usize,
    m: usize,
    trials: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    check_knm(k, n, m)?;
    let mut out: Vec<f64> = run_chunks(seed, trials, DEFAULT_CHUNK, |rng, count| {
        (0..count)
            .map(|_| ordered_eigenvalues_sym(sample_real_wishart(n, m, rng))[k - 1])
            .collect::<Vec<_>>()
    })
    .into_iter()
    .flatten()
    .collect();
    out.sort_by(f64::total_cmp);
    Ok(out)
}

/// Empirical CDF value at one threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CdfPoint {
    pub epsilon: f64,
    pub cdf: Estimate,
}

/// Fraction of sorted samples strictly below `epsilon`, with a Wilson interval.
pub fn empirical_cdf_at(sorted: &[f64], epsilon: f64) -> CdfPoint {
    let hits = sorted.partition_point(|&x| x < epsilon) as u64;
    CdfPoint {
        epsilon,
        cdf: Estimate::from_proportion(hits, sorted.len() as u64),
    }
}

/// `Pr(λ_k < ε)` on a grid, estimated from `trials` Wishart draws.
pub fn empirical_eig_cdf(
    k: usize,
    n: usize,
    m: usize,
    epsilons: &[f64],
    trials: usize,
    seed: u64,
) -> Result<Vec<CdfPoint>> {
    if trials < 10_000 {
        return Err(Error::Domain(format!(
            "need at least 1e4 trials, got {trials}"
        )));
    }
    let samples = sample_order_statistic(k, n, m, trials, seed)?;
    Ok(epsilons
        .iter()
        .map(|&e| empirical_cdf_at(&samples, e))
        .collect())
}

/// Log-log fit of an empirical eigenvalue CDF.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenFit {
    /// Free least-squares slope of `log F` against `log ε`.
    pub slope: f64,
    /// `10^intercept` of the free fit.
    pub free_coefficient: f64,
    /// Geometric mean of `F(ε)/ε^{exponent}` over the window, i.e. the
    /// intercept with the slope pinned to the theoretical exponent.
    pub coefficient: f64,
    pub r2: f64,
    pub points: usize,
}

/// Fit `F(ε) ≈ β ε^{exponent}` on `points` thresholds chosen as empirical
/// quantiles log-spaced between probabilities `p_lo` and `p_hi`.
pub fn fit_eig_cdf(
    sorted: &[f64],
    exponent: f64,
    p_lo: f64,
    p_hi: f64,
    points: usize,
) -> Result<EigenFit> {
    let n = sorted.len();
    if points < 3 || !(0.0 < p_lo && p_lo < p_hi && p_hi < 1.0) {
        return Err(Error::Fit(format!(
            "bad window [{p_lo}, {p_hi}] with {points} points"
        )));
    }
    if (p_lo * n as f64) < 10.0 {
        return Err(Error::Fit(format!(
            "{n} samples are too few for p = {p_lo}"
        )));
    }
    let (lo, hi) = (p_lo.log10(), p_hi.log10());
    let mut xs = Vec::with_capacity(points);
    let mut ys = Vec::with_capacity(points);
    for i in 0..points {
        let p = 10f64.powf(lo + (hi - lo) * i as f64 / (points - 1) as f64);
        let idx = ((p * n as f64).round() as usize).min(n - 1);
        let eps = sorted[idx];
        let f = empirical_cdf_at(sorted, eps).cdf.mean;
        if eps > 0.0 && f > 0.0 {
            xs.push(eps.log10());
            ys.push(f.log10());
        }
    }
    let (slope, intercept, r2) = linear_fit(&xs, &ys)?;
    let pinned = ys
        .iter()
        .zip(&xs)
        .map(|(y, x)| y - exponent * x)
        .sum::<f64>()
        / xs.len() as f64;
    Ok(EigenFit {
        slope,
        free_coefficient: 10f64.powf(intercept),
        coefficient: 10f64.powf(pinned),
        r2,
        points: xs.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use rand::Rng;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    #[test]
    fn exponents() {
        assert_eq!(diversity_exponent(1, 3, 6).unwrap(), 2.0);
        assert_eq!(diversity_exponent(2, 2, 2).unwrap(), 2.0);
        assert_eq!(diversity_exponent(1, 5, 5).unwrap(), 0.5);
        assert!(matches!(diversity_exponent(3, 2, 4), Err(Error::Domain(_))));
        assert!(matches!(diversity_exponent(1, 5, 4), Err(Error::Domain(_))));
    }

    #[test]
    fn small_pfaffians() {
        let a = SkewSymmetricMatrix::from_upper(2, |_, _| 3.5);
        assert_eq!(pfaffian(&a).unwrap(), 3.5);
        let v = [
            [0.0, 1.0, 2.0, 3.0],
            [0.0, 0.0, 5.0, 7.0],
            [0.0, 0.0, 0.0, 11.0],
        ];
        let a = SkewSymmetricMatrix::from_upper(4, |i, j| v[i][j]);
        // a12 a34 − a13 a24 + a14 a23
        let expect = 1.0 * 11.0 - 2.0 * 7.0 + 3.0 * 5.0;
        assert_eq!(pfaffian(&a).unwrap(), expect);
        assert_eq!(
            pfaffian(&SkewSymmetricMatrix::from_upper(0, |_, _| 0.0)).unwrap(),
            1.0
        );
    }

    #[test]
    fn pfaffian_rejects_bad_input() {
        let odd = SkewSymmetricMatrix::from_upper(3, |_, _| 1.0);
        assert!(matches!(pfaffian(&odd), Err(Error::Domain(_))));
        let mut m = DMatrix::zeros(2, 2);
        m[(0, 1)] = 1.0;
        m[(1, 0)] = -1.0 + 1e-15;
        assert!(matches!(
            SkewSymmetricMatrix::new(m),
            Err(Error::Contract(_))
        ));
        let mut d = DMatrix::zeros(2, 2);
        d[(0, 0)] = 1.0;
        assert!(matches!(
            SkewSymmetricMatrix::new(d),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn random_six_by_six_squares_to_determinant() {
        let mut rng = stream_rng(3, 0);
        let a = SkewSymmetricMatrix::from_upper(6, |_, _| rng.random::<f64>() * 2.0 - 1.0);
        let pf = pfaffian(&a).unwrap();
        let det = a.as_matrix().clone().determinant();
        assert!((pf * pf - det).abs() <= 1e-9 * det.abs());
    }

    #[test]
    fn knm_values() {
        let two_pi: f64 = 2.0 * std::f64::consts::PI;
        assert!((knm_constant(1, 1).unwrap() - two_pi.sqrt()).abs() < 1e-12);
        assert!((knm_constant(2, 2).unwrap() - 4.0).abs() < 1e-12);
        // Direct product at n = m = 3.
        let direct = (8.0 / std::f64::consts::PI).powf(1.5)
            * [3.0, 2.0, 1.0]
                .iter()
                .map(|&x: &f64| statrs::function::gamma::gamma(x / 2.0).powi(2))
                .product::<f64>();
        assert!((knm_constant(3, 3).unwrap() / direct - 1.0).abs() < 1e-12);
        assert!(matches!(knm_constant(2, 65), Err(Error::Range(_))));
        assert!(knm_constant(64, 64).is_err());
        assert!(ln_knm(64, 64).unwrap().is_finite());
    }

    /// Composite Simpson on `[a, b]` with `n` (even) panels.
    fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(a + i as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn joint_density_integrates_to_one() {
        // n = m = 1: λ = t², density K⁻¹ λ^{-1/2} e^{-λ/2}.
        let k11 = knm_constant(1, 1).unwrap();
        let mass = simpson(|t| 2.0 * (-t * t / 2.0).exp(), 0.0, 14.0, 4000) / k11;
        assert!((mass - 1.0).abs() < 1e-6);
        // n = m = 2: ordered λ₁ < λ₂, substitute λ_i = t_i².
        let k22 = knm_constant(2, 2).unwrap();
        let inner = |t2: f64| {
            simpson(
                |t1| 4.0 * (-(t1 * t1 + t2 * t2) / 2.0).exp() * (t2 * t2 - t1 * t1),
                0.0,
                t2,
                200,
            )
        };
        let mass = simpson(inner, 0.0, 14.0, 1000) / k22;
        assert!((mass - 1.0).abs() < 1e-6, "{mass}");
    }

    #[test]
    fn j_matrix_shapes_and_entries() {
        let j = j_matrix(2, 2).unwrap();
        assert_eq!(j.size(), 2);
        let expect = 2f64.powf(1.5) * statrs::function::gamma::gamma(1.5);
        assert!((j.get(0, 1) - expect).abs() < 1e-12);
        assert!((expect - 2.50663).abs() < 1e-5);
        assert_eq!(j_matrix(3, 5).unwrap().size(), 2);
        assert_eq!(j_matrix(1, 3).unwrap().size(), 0);
        for (n, m) in [(4, 7), (5, 8), (6, 6)] {
            let j = j_matrix(n, m).unwrap();
            for p in 0..j.size() {
                for q in 0..j.size() {
                    assert_eq!(j.get(p, q), -j.get(q, p));
                }
            }
        }
    }

    #[test]
    fn j_entries_match_incomplete_gamma_form() {
        // J_ij = 2^{b_i+b_j} Γ(b_i) Γ(b_j) [1 − 2 I(b_i, b_j; ∞)].
        for (n, m) in [(3, 4), (5, 9), (6, 8)] {
            let j = j_matrix(n, m).unwrap();
            for i in 1..n {
                for jj in (i + 1)..n {
                    let (bi, bj) = (b(i, n, m), b(jj, n, m));
                    let c = ((bi + bj) * LN_2 + ln_gamma(bi) + ln_gamma(bj)).exp();
                    let alt = c * (1.0 - 2.0 * incomplete_gamma_ratio(bi, bj).unwrap());
                    let got = j.get(i - 1, jj - 1);
                    assert!((got / alt - 1.0).abs() < 1e-12, "{n} {m} {i} {jj}");
                }
            }
        }
    }

    /// `∫ f_{b_j}(x) P(b_i, x) dx` by Simpson quadrature.
    fn quad_ratio(b_j: f64, b_i: f64) -> f64 {
        use statrs::function::gamma::gamma_lr;
        let f = |t: f64| {
            // x = t², dx = 2t dt keeps the integrand smooth at 0 for b_j ≥ 1/2.
            let x = t * t;
            if x == 0.0 {
                return 0.0;
            }
            let dens = ((b_j - 1.0) * x.ln() - x - ln_gamma(b_j)).exp();
            2.0 * t * dens * gamma_lr(b_i, x)
        };
        simpson(f, 0.0, 12.0, 20_000)
    }

    #[test]
    fn incomplete_gamma_ratio_against_quadrature() {
        assert_eq!(incomplete_gamma_ratio(2.5, 2.5).unwrap(), 0.5);
        let got = incomplete_gamma_ratio(1.5, 2.5).unwrap();
        assert!((got - quad_ratio(1.5, 2.5)).abs() < 1e-9, "{got}");
        for (a, bb) in [(1.0, 3.0), (2.5, 0.5), (4.0, 1.0), (3.5, 6.5)] {
            let x = incomplete_gamma_ratio(a, bb).unwrap();
            let y = incomplete_gamma_ratio(bb, a).unwrap();
            assert!((x + y - 1.0).abs() < 1e-12);
            assert!((x - quad_ratio(a, bb)).abs() < 1e-7, "{a} {bb}");
        }
        assert!(incomplete_gamma_ratio(1.0, 1.5).is_err());
        assert!(incomplete_gamma_ratio(0.0, 1.0).is_err());
    }

    /// `β₁` from the moment identity for real Haar vectors.
    fn beta1_oracle(n: usize, m: usize) -> f64 {
        let d = 0.5 * (m - n + 1) as f64;
        let lg = |x: f64| ln_gamma(x);
        (-d * LN_2 - d.ln() - lg(d) + lg(0.5) + lg(n as f64 / 2.0 + d)
            - lg(0.5 + d)
            - lg(n as f64 / 2.0))
        .exp()
    }

    #[test]
    fn beta1_known_values() {
        let two_over_pi: f64 = 2.0 / std::f64::consts::PI;
        assert!((beta1(1, 1).unwrap() - two_over_pi.sqrt()).abs() < 1e-12);
        let chi = ChiSquared::new(1.0).unwrap();
        let eps = 1e-6;
        assert!((chi.cdf(eps) / eps.sqrt() / beta1(1, 1).unwrap() - 1.0).abs() < 1e-5);
        assert!((beta1(2, 2).unwrap() - 1.2533).abs() < 1e-4);
    }

    #[test]
    fn beta1_matches_moment_identity() {
        for n in 1..=20 {
            for m in n..=24 {
                let got = beta1(n, m).unwrap();
                let want = beta1_oracle(n, m);
                assert!(got > 0.0);
                assert!(
                    (got / want - 1.0).abs() < 1e-12,
                    "n={n} m={m}: {got} vs {want}"
                );
            }
        }
    }

    #[test]
    fn float_beta1_is_tight_for_small_n() {
        for n in 1..=6 {
            for m in n..=12 {
                let got = ln_beta1_float(n, m).unwrap().exp();
                assert!(
                    (got / beta1_oracle(n, m) - 1.0).abs() < 1e-10,
                    "n={n} m={m}"
                );
            }
        }
    }

    #[test]
    fn beta1_direct_j_agrees_with_scaled_path() {
        for (n, m) in [(2, 3), (3, 3), (4, 6), (5, 5), (6, 9)] {
            let pf = pfaffian(&j_matrix(n, m).unwrap()).unwrap();
            let d1 = 0.5 * (m - n + 1) as f64;
            let direct = pf.abs() / knm_constant(n, m).unwrap() / d1;
            assert!((direct / beta1(n, m).unwrap() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn empirical_cdf_tends_to_one() {
        let pts = empirical_eig_cdf(1, 2, 3, &[1e6], 10_000, 1).unwrap();
        assert_eq!(pts[0].cdf.mean, 1.0);
        assert!(empirical_eig_cdf(1, 2, 3, &[1.0], 100, 1).is_err());
    }

    #[test]
    fn chi_square_smallest_eigenvalue_for_n_one() {
        let mut s = sample_order_statistic(1, 1, 3, 20_000, 5).unwrap();
        let chi = ChiSquared::new(3.0).unwrap();
        let p = crate::montecarlo::ks::test(&mut s, |x| chi.cdf(x));
        assert!(p > 0.01, "{p}");
    }

    #[test]
    fn pinned_fit_recovers_beta_for_square_two() {
        let s = sample_order_statistic(1, 2, 2, 200_000, 9).unwrap();
        let fit = fit_eig_cdf(&s, 0.5, 1e-3, 1e-2, 7).unwrap();
        let b = beta1(2, 2).unwrap();
        assert!((fit.coefficient / b - 1.0).abs() < 0.05, "{fit:?}");
        assert!((fit.slope - 0.5).abs() < 0.15);
    }
}
