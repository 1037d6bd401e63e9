//! Linear multi-user detectors and their output SINRs.
//!
//! WL receivers work on the stacked real channel `H ∈ ℝ^{2M×N}` with real
//! symbols and noise variance ½ per dimension; CL receivers work on the
//! complex channel with unit noise. Both share one generic implementation,
//! parameterised by the SNR scale `s` (2 for WL, 1 for CL):
//!
//! * ZF:   `γ_n = s·snr·ξ_n / [(HᴴH)⁻¹]_nn`
//! * MMSE: `γ_n = s·snr·ξ_n / [(HᴴH + Ψ⁻¹/(s·snr))⁻¹]_nn − 1`

use std::fmt;
use std::str::FromStr;

use nalgebra::{ComplexField, DMatrix};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::link::PowerProfile;
use crate::random_matrix::{Complex64, ComplexMatrix, RealMatrix};

/// Real (WL) or complex (CL) processing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    #[serde(rename = "WL")]
    Wl,
    #[serde(rename = "CL")]
    Cl,
}

impl Family {
    /// SNR scale `s` in the SINR formulas.
    pub fn scale(self) -> f64 {
        match self {
            Family::Wl => 2.0,
            Family::Cl => 1.0,
        }
    }

    /// Streams resolvable per receive antenna.
    pub fn users_per_antenna(self) -> usize {
        match self {
            Family::Wl => 2,
            Family::Cl => 1,
        }
    }

    /// SINR threshold for rate `R`: `2^{2R}−1` (WL) or `2^R−1` (CL).
    pub fn threshold(self, rate: f64) -> f64 {
        match self {
            Family::Wl => (2.0 * rate).exp2() - 1.0,
            Family::Cl => rate.exp2() - 1.0,
        }
    }

    /// Achievable rate at SINR `g`.
    pub fn rate(self, g: f64) -> f64 {
        match self {
            Family::Wl => 0.5 * (1.0 + g).log2(),
            Family::Cl => (1.0 + g).log2(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Criterion {
    #[serde(rename = "ZF")]
    Zf,
    #[serde(rename = "MMSE")]
    Mmse,
}

/// Receiver variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ReceiverSpec {
    pub family: Family,
    pub criterion: Criterion,
    pub sic: bool,
}

impl ReceiverSpec {
    pub const fn new(family: Family, criterion: Criterion, sic: bool) -> Self {
        Self {
            family,
            criterion,
            sic,
        }
    }

    /// Reject user counts without positive diversity.
    pub fn check_users(&self, m: usize, n: usize) -> Result<()> {
        if m == 0 || n == 0 || n > self.family.users_per_antenna() * m {
            return Err(Error::Domain(format!(
                "{self} cannot serve N = {n} with M = {m}"
            )));
        }
        Ok(())
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Wl => "WL",
            Family::Cl => "CL",
        })
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Criterion::Zf => "ZF",
            Criterion::Mmse => "MMSE",
        })
    }
}

impl fmt::Display for ReceiverSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sic = if self.sic { "-SIC" } else { "" };
        write!(f, "{}-{}{sic}", self.family, self.criterion)
    }
}

impl FromStr for ReceiverSpec {
    type Err = Error;

    /// Parses labels such as `WL-ZF`, `cl-mmse-sic`.
    fn from_str(s: &str) -> Result<Self> {
        let up = s.trim().to_ascii_uppercase().replace('_', "-");
        let parts: Vec<&str> = up.split('-').collect();
        let bad = || Error::Domain(format!("unknown receiver '{s}'"));
        let family = match parts.first() {
            Some(&"WL") => Family::Wl,
            Some(&"CL") => Family::Cl,
            _ => return Err(bad()),
        };
        let criterion = match parts.get(1) {
            Some(&"ZF") => Criterion::Zf,
            Some(&"MMSE") => Criterion::Mmse,
            _ => return Err(bad()),
        };
        let sic = match parts.get(2) {
            None => false,
            Some(&"SIC") if parts.len() == 3 => true,
            _ => return Err(bad()),
        };
        Ok(Self::new(family, criterion, sic))
    }
}

/// One SIC decoding stage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SicStage {
    /// 1-based stage index.
    pub stage: usize,
    /// 0-based user index into the original channel.
    pub user: usize,
    pub sinr: f64,
}

/// Per-user SINRs; for SIC, the SINR at the stage where the user is decoded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SinrReport {
    pub per_user_sinr: Vec<f64>,
    pub stage_trace: Vec<SicStage>,
}

fn check_profile(cols: usize, xi: &[f64]) -> Result<()> {
    if cols != xi.len() {
        return Err(Error::Dimension(format!(
            "{cols} columns for {} power factors",
            xi.len()
        )));
    }
    Ok(())
}

/// Inverse of a Hermitian positive definite matrix, or a rank error.
fn hpd_inverse<T: ComplexField<RealField = f64>>(a: DMatrix<T>) -> Result<DMatrix<T>> {
    let scale = (0..a.nrows())
        .map(|i| a[(i, i)].clone().real())
        .fold(0.0, f64::max);
    let chol = a
        .cholesky()
        .ok_or_else(|| Error::Rank("Gram matrix is not positive definite".into()))?;
    // Pivots at rounding level mean the matrix is singular in exact arithmetic.
    let l = chol.l_dirty();
    if (0..l.nrows()).any(|i| l[(i, i)].clone().modulus_squared() <= 64.0 * f64::EPSILON * scale) {
        return Err(Error::Rank("Gram matrix is numerically singular".into()));
    }
    let inv = chol.inverse();
    if (0..inv.nrows()).any(|i| {
        let d = inv[(i, i)].clone().real();
        !(d.is_finite() && d > 0.0)
    }) {
        return Err(Error::Rank("Gram matrix is numerically singular".into()));
    }
    Ok(inv)
}

fn regularised_gram<T: ComplexField<RealField = f64>>(
    h: &DMatrix<T>,
    reg: Option<&[f64]>,
) -> DMatrix<T> {
    let mut g = h.adjoint() * h;
    if let Some(r) = reg {
        for (i, &v) in r.iter().enumerate() {
            g[(i, i)] += T::from_real(v);
        }
    }
    g
}

/// `Ψ⁻¹/(s·snr)` as a diagonal.
fn mmse_reg(xi: &[f64], s_snr: f64) -> Vec<f64> {
    xi.iter().map(|&x| 1.0 / (x * s_snr)).collect()
}

/// ZF SINRs of all users, matrix-inverse form.
pub fn zf_sinrs<T: ComplexField<RealField = f64>>(
    h: &DMatrix<T>,
    xi: &[f64],
    snr: f64,
    family: Family,
) -> Result<Vec<f64>> {
    check_profile(h.ncols(), xi)?;
    let inv = hpd_inverse(regularised_gram(h, None))?;
    let s_snr = family.scale() * snr;
    Ok(xi
        .iter()
        .enumerate()
        .map(|(n, &x)| s_snr * x / inv[(n, n)].clone().real())
        .collect())
}

/// MMSE SINRs of all users, matrix-inverse form, clamped at 0.
pub fn mmse_sinrs<T: ComplexField<RealField = f64>>(
    h: &DMatrix<T>,
    xi: &[f64],
    snr: f64,
    family: Family,
) -> Result<Vec<f64>> {
    check_profile(h.ncols(), xi)?;
    let s_snr = family.scale() * snr;
    let inv = hpd_inverse(regularised_gram(h, Some(&mmse_reg(xi, s_snr))))?;
    Ok(xi
        .iter()
        .enumerate()
        .map(|(n, &x)| (s_snr * x / inv[(n, n)].clone().real() - 1.0).max(0.0))
        .collect())
}

fn column_minor<T: ComplexField<RealField = f64>>(h: &DMatrix<T>, n: usize) -> DMatrix<T> {
    h.clone().remove_column(n)
}

/// `h_nᴴ (I − H_n (H_nᴴH_n + D)⁻¹ H_nᴴ) h_n`.
fn projected_energy<T: ComplexField<RealField = f64>>(
    h: &DMatrix<T>,
    n: usize,
    reg: Option<&[f64]>,
) -> Result<f64> {
    let hn = h.column(n).into_owned();
    let energy = hn.norm_squared();
    if h.ncols() == 1 {
        return Ok(energy);
    }
    let others = column_minor(h, n);
    let inv = hpd_inverse(regularised_gram(&others, reg))?;
    let c = others.adjoint() * &hn;
    let quad = c.dotc(&(&inv * &c)).real();
    Ok(energy - quad)
}

/// ZF SINR of user `n` through the orthogonal projector onto the complement
/// of the other users' columns.
pub fn zf_sinr_projector<T: ComplexField<RealField = f64>>(
    h: &DMatrix<T>,
    xi: &[f64],
    snr: f64,
    family: Family,
    n: usize,
) -> Result<f64> {
    check_profile(h.ncols(), xi)?;
    Ok(family.scale() * snr * xi[n] * projected_energy(h, n, None)?)
}

/// MMSE SINR of user `n` through the regularised projector.
pub fn mmse_sinr_projector<T: ComplexField<RealField = f64>>(
    h: &DMatrix<T>,
    xi: &[f64],
    snr: f64,
    family: Family,
    n: usize,
) -> Result<f64> {
    check_profile(h.ncols(), xi)?;
    let s_snr = family.scale() * snr;
    let mut rest = xi.to_vec();
    rest.remove(n);
    let reg = mmse_reg(&rest, s_snr);
    Ok(s_snr * xi[n] * projected_energy(h, n, Some(&reg))?)
}

/// Detection matrix `W = HΨ^{1/2}(Ψ^{1/2}HᴴHΨ^{1/2} + δI)⁻¹`, with `δ = 0`
/// (ZF) or `1/(s·snr)` (MMSE).
pub fn detection_matrix<T: ComplexField<RealField = f64>>(
    h: &DMatrix<T>,
    xi: &[f64],
    snr: f64,
    family: Family,
    criterion: Criterion,
) -> Result<DMatrix<T>> {
    check_profile(h.ncols(), xi)?;
    let eff = effective_channel(h, xi);
    let reg = match criterion {
        Criterion::Zf => None,
        Criterion::Mmse => Some(vec![1.0 / (family.scale() * snr); xi.len()]),
    };
    let inv = hpd_inverse(regularised_gram(&eff, reg.as_deref()))?;
    Ok(eff * inv)
}

/// `HΨ^{1/2}`.
pub fn effective_channel<T: ComplexField<RealField = f64>>(
    h: &DMatrix<T>,
    xi: &[f64],
) -> DMatrix<T> {
    let mut eff = h.clone();
    for (j, &x) in xi.iter().enumerate() {
        eff.column_mut(j).scale_mut(x.sqrt());
    }
    eff
}

/// Output SINRs of an arbitrary linear detector `W` applied to the model.
pub fn sinr_from_detector<T: ComplexField<RealField = f64>>(
    w: &DMatrix<T>,
    h: &DMatrix<T>,
    xi: &[f64],
    snr: f64,
    family: Family,
) -> Result<Vec<f64>> {
    check_profile(h.ncols(), xi)?;
    if w.shape() != h.shape() {
        return Err(Error::Dimension(format!(
            "W {:?} vs H {:?}",
            w.shape(),
            h.shape()
        )));
    }
    let eff = effective_channel(h, xi);
    let cross = w.adjoint() * &eff;
    let noise = 1.0 / (family.scale() * snr);
    Ok((0..h.ncols())
        .map(|n| {
            let sig = cross[(n, n)].clone().modulus_squared();
            let interf: f64 = (0..h.ncols())
                .filter(|&j| j != n)
                .map(|j| cross[(n, j)].clone().modulus_squared())
                .sum();
            sig / (interf + noise * w.column(n).norm_squared())
        })
        .collect())
}

/// High-SNR limit of the MMSE-over-ZF gain `(γ_MMSE − γ_ZF)/ξ_n`:
/// `h_nᴴ H_n G⁻¹ Ψ_n⁻¹ G⁻¹ H_nᴴ h_n` with `G = H_nᴴH_n`. Zero for one user.
pub fn residual_surrogate<T: ComplexField<RealField = f64>>(
    h: &DMatrix<T>,
    xi: &[f64],
    n: usize,
) -> Result<f64> {
    check_profile(h.ncols(), xi)?;
    if h.ncols() == 1 {
        return Ok(0.0);
    }
    let others = column_minor(h, n);
    let inv = hpd_inverse(regularised_gram(&others, None))?;
    let z = inv * (others.adjoint() * h.column(n));
    let rest = xi
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != n)
        .map(|(_, &x)| x);
    Ok(z.iter()
        .zip(rest)
        .map(|(zk, x)| zk.clone().modulus_squared() / x)
        .sum())
}

/// Non-SIC SINRs for every user.
pub fn linear_sinrs<T: ComplexField<RealField = f64>>(
    h: &DMatrix<T>,
    xi: &[f64],
    snr: f64,
    family: Family,
    criterion: Criterion,
) -> Result<Vec<f64>> {
    match criterion {
        Criterion::Zf => zf_sinrs(h, xi, snr, family),
        Criterion::Mmse => mmse_sinrs(h, xi, snr, family),
    }
}

/// SIC with SINR-maximising order and perfect cancellation. At every stage
/// the base detector is rebuilt on the remaining columns; ties go to the
/// lowest user index.
pub fn sic_sinr_stages<T: ComplexField<RealField = f64>>(
    h: &DMatrix<T>,
    xi: &[f64],
    snr: f64,
    family: Family,
    criterion: Criterion,
) -> Result<SinrReport> {
    check_profile(h.ncols(), xi)?;
    let n_users = h.ncols();
    let mut remaining: Vec<usize> = (0..n_users).collect();
    let mut per_user = vec![0.0; n_users];
    let mut trace = Vec::with_capacity(n_users);
    let mut sub = h.clone();
    let mut sub_xi = xi.to_vec();
    for stage in 1..=n_users {
        let sinrs = linear_sinrs(&sub, &sub_xi, snr, family, criterion)?;
        let mut best = 0;
        for (k, &g) in sinrs.iter().enumerate() {
            if g > sinrs[best] {
                best = k;
            }
        }
        let user = remaining[best];
        per_user[user] = sinrs[best];
        trace.push(SicStage {
            stage,
            user,
            sinr: sinrs[best],
        });
        remaining.remove(best);
        sub_xi.remove(best);
        if !remaining.is_empty() {
            sub = sub.remove_column(best);
        }
    }
    Ok(SinrReport {
        per_user_sinr: per_user,
        stage_trace: trace,
    })
}

/// Worst stage SINR met on the way to decoding user `tag` under
/// SINR-maximising SIC. A failed stage cannot be cancelled, so the tagged
/// user is lost whenever this value is below threshold.
pub fn sic_tagged_sinr<T: ComplexField<RealField = f64>>(
    h: &DMatrix<T>,
    xi: &[f64],
    snr: f64,
    family: Family,
    criterion: Criterion,
    tag: usize,
) -> Result<f64> {
    check_profile(h.ncols(), xi)?;
    check_user(tag, h.ncols())?;
    let mut remaining: Vec<usize> = (0..h.ncols()).collect();
    let mut sub = h.clone();
    let mut sub_xi = xi.to_vec();
    let mut worst = f64::INFINITY;
    loop {
        let sinrs = linear_sinrs(&sub, &sub_xi, snr, family, criterion)?;
        let mut best = 0;
        for (k, &g) in sinrs.iter().enumerate() {
            if g > sinrs[best] {
                best = k;
            }
        }
        worst = worst.min(sinrs[best]);
        if remaining[best] == tag {
            return Ok(worst);
        }
        remaining.remove(best);
        sub_xi.remove(best);
        sub = sub.remove_column(best);
    }
}

/// Full SINR report for `spec`.
pub fn sinr_report<T: ComplexField<RealField = f64>>(
    h: &DMatrix<T>,
    xi: &[f64],
    snr: f64,
    spec: ReceiverSpec,
) -> Result<SinrReport> {
    if spec.sic {
        sic_sinr_stages(h, xi, snr, spec.family, spec.criterion)
    } else {
        Ok(SinrReport {
            per_user_sinr: linear_sinrs(h, xi, snr, spec.family, spec.criterion)?,
            stage_trace: Vec::new(),
        })
    }
}

fn check_user(n: usize, cols: usize) -> Result<()> {
    if n >= cols {
        return Err(Error::Dimension(format!("user {n} of {cols}")));
    }
    Ok(())
}

/// WL-ZF SINR of user `n` on the stacked real channel.
pub fn zf_sinr(h: &RealMatrix, profile: &PowerProfile, snr: f64, n: usize) -> Result<f64> {
    check_user(n, h.cols())?;
    Ok(zf_sinrs(h.as_matrix(), profile.xi(), snr, Family::Wl)?[n])
}

/// WL-MMSE SINR of user `n` on the stacked real channel.
pub fn mmse_sinr(h: &RealMatrix, profile: &PowerProfile, snr: f64, n: usize) -> Result<f64> {
    check_user(n, h.cols())?;
    Ok(mmse_sinrs(h.as_matrix(), profile.xi(), snr, Family::Wl)?[n])
}

/// CL SINR of user `n` on the complex channel.
pub fn cl_sinr(
    hbar: &ComplexMatrix,
    profile: &PowerProfile,
    snr: f64,
    n: usize,
    criterion: Criterion,
) -> Result<f64> {
    check_user(n, hbar.cols())?;
    if hbar.cols() > hbar.rows() {
        return Err(Error::Domain(format!(
            "CL detection of {} users with {} antennas",
            hbar.cols(),
            hbar.rows()
        )));
    }
    let h: &DMatrix<Complex64> = hbar.as_matrix();
    Ok(linear_sinrs(h, profile.xi(), snr, Family::Cl, criterion)?[n])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::link::PowerMode;
    use crate::montecarlo::ks;
    use crate::random_matrix::{sample_channel, wl_transform};
    use crate::rng::stream_rng;
    use rand::Rng;
    use statrs::distribution::{ChiSquared, ContinuousCDF, FisherSnedecor, Gamma};

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    fn random_xi(n: usize, rng: &mut impl Rng) -> Vec<f64> {
        (0..n)
            .map(|_| 10f64.powf(rng.random::<f64>() * 2.0 - 1.0))
            .collect()
    }

    #[test]
    fn spec_labels_round_trip() {
        for s in [
            "WL-ZF",
            "WL-MMSE",
            "WL-ZF-SIC",
            "WL-MMSE-SIC",
            "CL-ZF",
            "CL-MMSE-SIC",
        ] {
            let spec: ReceiverSpec = s.parse().unwrap();
            assert_eq!(spec.to_string(), s);
        }
        assert_eq!(
            "wl_mmse_sic".parse::<ReceiverSpec>().unwrap().to_string(),
            "WL-MMSE-SIC"
        );
        assert!("WL-ML".parse::<ReceiverSpec>().is_err());
        assert!("WL-ZF-SIC-X".parse::<ReceiverSpec>().is_err());
    }

    #[test]
    fn thresholds() {
        assert_eq!(Family::Wl.threshold(2.0), 15.0);
        assert_eq!(Family::Cl.threshold(2.0), 3.0);
        assert_eq!(Family::Wl.threshold(0.0), 0.0);
        assert!((Family::Wl.rate(15.0) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn orthonormal_columns_give_two_snr() {
        let h = DMatrix::<f64>::identity(4, 2);
        let g = zf_sinrs(&h, &[1.0, 1.0], 7.0, Family::Wl).unwrap();
        assert_eq!(g, vec![14.0, 14.0]);
        let hc = DMatrix::<Complex64>::identity(3, 1);
        assert!(
            (cl_sinr(
                &ComplexMatrix::new(hc).unwrap(),
                &PowerProfile::ppc(1, 1.0).unwrap(),
                5.0,
                0,
                Criterion::Zf
            )
            .unwrap()
                - 5.0)
                .abs()
                < 1e-12
        );
    }

    #[test]
    fn zf_detector_inverts_effective_channel() {
        let mut rng = stream_rng(1, 0);
        let h = wl_transform(&sample_channel(3, 5, &mut rng).unwrap()).into_inner();
        let xi = random_xi(5, &mut rng);
        let w = detection_matrix(&h, &xi, 10.0, Family::Wl, Criterion::Zf).unwrap();
        assert_eq!(w.shape(), (6, 5));
        let prod = w.transpose() * effective_channel(&h, &xi);
        assert!((prod - DMatrix::identity(5, 5)).amax() < 1e-10);
        let wm = detection_matrix(&h, &xi, 1e12, Family::Wl, Criterion::Mmse).unwrap();
        assert!((wm - &w).norm() < 1e-6);
    }

    #[test]
    fn rank_deficiency_is_reported() {
        let h = DMatrix::<f64>::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(matches!(
            zf_sinrs(&h, &[1.0, 1.0], 1.0, Family::Wl),
            Err(Error::Rank(_))
        ));
        assert!(mmse_sinrs(&h, &[1.0, 1.0], 1.0, Family::Wl).is_ok());
        let wide = DMatrix::<f64>::from_element(2, 3, 1.0);
        assert!(matches!(
            detection_matrix(&wide, &[1.0; 3], 1.0, Family::Wl, Criterion::Zf),
            Err(Error::Rank(_))
        ));
    }

    #[test]
    fn inverse_projector_and_detector_forms_agree() {
        let mut rng = stream_rng(2, 0);
        for trial in 0..1000 {
            let (m, n) = [(2, 2), (2, 4), (3, 5), (4, 6), (1, 1)][trial % 5];
            let hbar = sample_channel(m, n, &mut rng).unwrap();
            let h = wl_transform(&hbar).into_inner();
            let xi = random_xi(n, &mut rng);
            let snr = 10f64.powf(rng.random::<f64>() * 4.0);
            let zf = zf_sinrs(&h, &xi, snr, Family::Wl).unwrap();
            let mm = mmse_sinrs(&h, &xi, snr, Family::Wl).unwrap();
            let wz = detection_matrix(&h, &xi, snr, Family::Wl, Criterion::Zf).unwrap();
            let wm = detection_matrix(&h, &xi, snr, Family::Wl, Criterion::Mmse).unwrap();
            let dz = sinr_from_detector(&wz, &h, &xi, snr, Family::Wl).unwrap();
            let dm = sinr_from_detector(&wm, &h, &xi, snr, Family::Wl).unwrap();
            for k in 0..n {
                let pz = zf_sinr_projector(&h, &xi, snr, Family::Wl, k).unwrap();
                let pm = mmse_sinr_projector(&h, &xi, snr, Family::Wl, k).unwrap();
                assert!(rel(zf[k], pz) < 1e-7, "zf {trial} {k}: {} {}", zf[k], pz);
                assert!(rel(mm[k], pm) < 1e-7, "mmse {trial} {k}: {} {}", mm[k], pm);
                assert!(rel(zf[k], dz[k]) < 1e-8);
                assert!(rel(mm[k], dm[k]) < 1e-8);
                assert!(mm[k] >= zf[k] * (1.0 - 1e-12));
            }
            if n <= m {
                let hc = hbar.as_matrix();
                let zc = zf_sinrs(hc, &xi, snr, Family::Cl).unwrap();
                let mc = mmse_sinrs(hc, &xi, snr, Family::Cl).unwrap();
                for k in 0..n {
                    let pz = zf_sinr_projector(hc, &xi, snr, Family::Cl, k).unwrap();
                    let pm = mmse_sinr_projector(hc, &xi, snr, Family::Cl, k).unwrap();
                    assert!(rel(zc[k], pz) < 1e-7 && rel(mc[k], pm) < 1e-7);
                    assert!(mc[k] >= zc[k] * (1.0 - 1e-12));
                }
            }
        }
    }

    #[test]
    fn single_user_mmse_gap_vanishes() {
        let mut rng = stream_rng(3, 0);
        let h = wl_transform(&sample_channel(2, 1, &mut rng).unwrap()).into_inner();
        let xi = [0.7];
        let energy = h.norm_squared();
        for snr in [1.0, 1e3, 1e6] {
            let z = zf_sinrs(&h, &xi, snr, Family::Wl).unwrap()[0];
            let m = mmse_sinrs(&h, &xi, snr, Family::Wl).unwrap()[0];
            assert!(rel(z, 2.0 * snr * 0.7 * energy) < 1e-12);
            assert!(m >= z * (1.0 - 1e-12));
            assert!((m - z).abs() < 1e-6 * z.max(1.0));
        }
    }

    #[test]
    fn residual_matches_high_snr_surrogate() {
        let mut rng = stream_rng(4, 0);
        for _ in 0..50 {
            let h = wl_transform(&sample_channel(2, 4, &mut rng).unwrap()).into_inner();
            let xi = random_xi(4, &mut rng);
            let snr = 1e6;
            let z = zf_sinrs(&h, &xi, snr, Family::Wl).unwrap();
            let m = mmse_sinrs(&h, &xi, snr, Family::Wl).unwrap();
            for n in 0..4 {
                let eta = (m[n] - z[n]) / xi[n];
                let sur = residual_surrogate(&h, &xi, n).unwrap();
                assert!(rel(eta, sur) < 0.01, "{eta} {sur}");
            }
        }
    }

    #[test]
    fn wl_zf_is_chi_square() {
        for (m, n, seed) in [(2, 2, 10), (2, 4, 11), (4, 6, 12)] {
            let mut rng = stream_rng(seed, 0);
            let xi = vec![1.0; n];
            let mut s: Vec<f64> = (0..20_000)
                .map(|_| {
                    let h = wl_transform(&sample_channel(m, n, &mut rng).unwrap()).into_inner();
                    zf_sinrs(&h, &xi, 1.0, Family::Wl).unwrap()[0]
                })
                .collect();
            let chi = ChiSquared::new((2 * m - n + 1) as f64).unwrap();
            let p = ks::test(&mut s, |x| chi.cdf(x));
            assert!(p > 0.01, "M={m} N={n}: p={p}");
        }
    }

    #[test]
    fn ppc_residuals_follow_f_laws() {
        let (m, n) = (2, 4);
        let mut rng = stream_rng(13, 0);
        let xi = vec![1.0; n];
        let mut wl = Vec::new();
        let mut cl = Vec::new();
        for _ in 0..20_000 {
            let hbar = sample_channel(m, n, &mut rng).unwrap();
            let h = wl_transform(&hbar).into_inner();
            wl.push(residual_surrogate(&h, &xi, 0).unwrap());
            let hc = sample_channel(3, 2, &mut rng).unwrap();
            cl.push(residual_surrogate(hc.as_matrix(), &[1.0, 1.0], 0).unwrap());
        }
        let k = (2 * m - n + 2) as f64 / (n - 1) as f64;
        let mut wl: Vec<f64> = wl.iter().map(|e| k * e).collect();
        let f = FisherSnedecor::new((n - 1) as f64, (2 * m - n + 2) as f64).unwrap();
        assert!(ks::test(&mut wl, |x| f.cdf(x)) > 0.01);
        // CL, M=3, N=2: (M−N+2)/(N−1)·η ~ F(2(N−1), 2(M−N+2)).
        let mut cl: Vec<f64> = cl.iter().map(|e| 3.0 * e).collect();
        let f = FisherSnedecor::new(2.0, 6.0).unwrap();
        assert!(ks::test(&mut cl, |x| f.cdf(x)) > 0.01);
    }

    #[test]
    fn cl_zf_is_gamma() {
        let mut rng = stream_rng(14, 0);
        let (m, n) = (3, 2);
        let mut s: Vec<f64> = (0..20_000)
            .map(|_| {
                let h = sample_channel(m, n, &mut rng).unwrap();
                cl_sinr(
                    &h,
                    &PowerProfile::ppc(n, 1.0).unwrap(),
                    1.0,
                    0,
                    Criterion::Zf,
                )
                .unwrap()
            })
            .collect();
        let g = Gamma::new((m - n + 1) as f64, 1.0).unwrap();
        assert!(ks::test(&mut s, |x| g.cdf(x)) > 0.01);
    }

    #[test]
    fn sic_properties() {
        let mut rng = stream_rng(15, 0);
        for trial in 0..300 {
            let (m, n) = [(2, 4), (3, 5), (2, 1)][trial % 3];
            let h = wl_transform(&sample_channel(m, n, &mut rng).unwrap()).into_inner();
            let xi = random_xi(n, &mut rng);
            for crit in [Criterion::Zf, Criterion::Mmse] {
                let base = linear_sinrs(&h, &xi, 100.0, Family::Wl, crit).unwrap();
                let rep = sic_sinr_stages(&h, &xi, 100.0, Family::Wl, crit).unwrap();
                let max = base.iter().copied().fold(f64::MIN, f64::max);
                assert_eq!(rep.stage_trace[0].sinr, max);
                let mut seen: Vec<usize> = rep.stage_trace.iter().map(|s| s.user).collect();
                seen.sort();
                assert_eq!(seen, (0..n).collect::<Vec<_>>());
                if n == 1 {
                    assert_eq!(rep.per_user_sinr, base);
                }
            }
            // ZF: survivors never lose SINR when a column is cancelled.
            let mut cols: Vec<usize> = (0..n).collect();
            let mut sub = h.clone();
            let mut sub_xi = xi.clone();
            let mut prev = zf_sinrs(&sub, &sub_xi, 1.0, Family::Wl).unwrap();
            while cols.len() > 1 {
                let k = (trial + cols.len()) % cols.len();
                cols.remove(k);
                sub = sub.remove_column(k);
                sub_xi.remove(k);
                prev.remove(k);
                let next = zf_sinrs(&sub, &sub_xi, 1.0, Family::Wl).unwrap();
                for (a, b) in next.iter().zip(&prev) {
                    assert!(*a >= b * (1.0 - 1e-10));
                }
                prev = next;
            }
        }
    }

    #[test]
    fn tagged_sic_sinr_is_worst_stage_up_to_tag() {
        let mut rng = stream_rng(18, 0);
        for _ in 0..200 {
            let h = wl_transform(&sample_channel(2, 4, &mut rng).unwrap()).into_inner();
            let xi = random_xi(4, &mut rng);
            for crit in [Criterion::Zf, Criterion::Mmse] {
                let rep = sic_sinr_stages(&h, &xi, 30.0, Family::Wl, crit).unwrap();
                for tag in 0..4 {
                    let pos = rep.stage_trace.iter().position(|s| s.user == tag).unwrap();
                    let want = rep.stage_trace[..=pos]
                        .iter()
                        .map(|s| s.sinr)
                        .fold(f64::INFINITY, f64::min);
                    let got = sic_tagged_sinr(&h, &xi, 30.0, Family::Wl, crit, tag).unwrap();
                    assert_eq!(got, want);
                }
            }
        }
    }

    #[test]
    fn omega_bound_holds() {
        use crate::random_matrix::{ordered_eig_sym, scaled_gram};
        let mut rng = stream_rng(16, 0);
        for _ in 0..500 {
            let h = wl_transform(&sample_channel(2, 4, &mut rng).unwrap());
            let g = scaled_gram(&h);
            let inv = g.clone().try_inverse().unwrap();
            let eig = ordered_eig_sym(&g).unwrap();
            let lam1 = eig.eigenvalues[0];
            for n in 0..4 {
                let v = eig.eigenvectors[(n, 0)];
                assert!(inv[(n, n)] >= v * v / lam1 * (1.0 - 1e-6));
            }
        }
    }

    #[test]
    fn wrappers_validate_inputs() {
        let mut rng = stream_rng(17, 0);
        let hbar = sample_channel(2, 3, &mut rng).unwrap();
        let h = wl_transform(&hbar);
        let p = PowerProfile::new(vec![1.0, 2.0, 0.5], PowerMode::NoControl).unwrap();
        assert!(zf_sinr(&h, &p, 1.0, 2).is_ok());
        assert!(zf_sinr(&h, &p, 1.0, 3).is_err());
        assert!(mmse_sinr(&h, &p, 1.0, 0).unwrap() >= zf_sinr(&h, &p, 1.0, 0).unwrap());
        assert!(matches!(
            cl_sinr(&hbar, &p, 1.0, 0, Criterion::Zf),
            Err(Error::Domain(_))
        ));
        assert!(ReceiverSpec::new(Family::Cl, Criterion::Zf, false)
            .check_users(2, 3)
            .is_err());
        assert!(ReceiverSpec::new(Family::Wl, Criterion::Zf, false)
            .check_users(2, 4)
            .is_ok());
    }
}
