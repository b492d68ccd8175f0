//! Uniform planar array model, waveform-level Fisher information of the
//! arrival angles, SNR bookkeeping, and the calibration pipeline that turns
//! a per-link SNR into von Mises concentrations.
//!
//! The receiver array is an `nx × ny` grid in the local XY plane with
//! uniform spacing in carrier wavelengths. For an arrival at elevation `el`
//! and azimuth `az` the direction cosines are `u = sin el cos az`,
//! `v = sin el sin az` and element `(ix, iy)` responds with
//! `exp(j 2π s (cx·u + cy·v))` where `(cx, cy)` are the (centered) element
//! indices.
//!
//! The transmit side is beamformed onto the known departure angles, which
//! collapses the link into a single composite SNR after coherent combining
//! across snapshots. With the complex path gain unknown, the 2x2 Fisher
//! information of `(el, az)` is the projected Gram form
//!
//! ```text
//! I_Y(θ) = 2 · SNR · Re{ Dᴴ (I − a aᴴ / ‖a‖²) D },
//! ```
//!
//! `a` the array response and `D = [∂a/∂el, ∂a/∂az]`: the rank-one
//! projector removes the component indistinguishable from a gain change,
//! which also makes the FIM invariant to the element index origin.
//!
//! Calibration per link: invert the 2x2 waveform FIM, keep the diagonal of
//! the inverse (the per-angle variances with the cross-coupling priced in),
//! re-invert each entry into an information target, and solve each target
//! for a von Mises concentration.

use nalgebra::{Complex, DMatrix, DVector, Matrix2};

use crate::geometry::{aoa_from_geometry, AoaPair, Rotation, Vec3};
use crate::vonmises::{solve_concentration, ConcentrationVector};
use crate::Error;

/// Condition-number limit above which a 2x2 waveform FIM counts as
/// singular.
const WAVEFORM_COND_LIMIT: f64 = 1e12;

/// Where element index (0, 0) sits in the array.
///
/// The Fisher information is origin-invariant; centered indexing merely
/// keeps the derivative columns better conditioned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IndexOrigin {
    #[default]
    Centered,
    Corner,
}

/// A uniform planar array in the local XY plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Upa {
    pub nx: usize,
    pub ny: usize,
    /// Element spacing in carrier wavelengths.
    pub spacing: f64,
    pub origin: IndexOrigin,
}

impl Upa {
    /// Centered-index array; `spacing` in wavelengths (0.5 = half-wave).
    pub fn new(nx: usize, ny: usize, spacing: f64) -> Result<Self, Error> {
        if nx < 1 || ny < 1 {
            return Err(Error::InvalidScenario(format!(
                "array needs at least one element per axis, got {nx}x{ny}"
            )));
        }
        if !(spacing > 0.0) || !spacing.is_finite() {
            return Err(Error::InvalidScenario(format!("array spacing {spacing}")));
        }
        Ok(Self { nx, ny, spacing, origin: IndexOrigin::Centered })
    }

    pub fn with_origin(mut self, origin: IndexOrigin) -> Self {
        self.origin = origin;
        self
    }

    pub fn num_elements(&self) -> usize {
        self.nx * self.ny
    }

    /// Per-element index offsets `(cx, cy)` in row-major element order.
    fn offsets(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let (ox, oy) = match self.origin {
            IndexOrigin::Centered => ((self.nx as f64 - 1.0) / 2.0, (self.ny as f64 - 1.0) / 2.0),
            IndexOrigin::Corner => (0.0, 0.0),
        };
        (0..self.ny).flat_map(move |iy| {
            (0..self.nx).map(move |ix| (ix as f64 - ox, iy as f64 - oy))
        })
    }
}

/// Composite per-link SNR `|α|² T N_tx P / N₀` (linear, after transmit
/// beamforming and coherent combining across snapshots).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    pub snr_linear: f64,
}

impl LinkBudget {
    pub fn new(snr_linear: f64) -> Result<Self, Error> {
        if !snr_linear.is_finite() || snr_linear < 0.0 {
            return Err(Error::InvalidScenario(format!("snr {snr_linear}")));
        }
        Ok(Self { snr_linear })
    }

    pub fn from_db(snr_db: f64) -> Result<Self, Error> {
        Self::new(10f64.powf(snr_db / 10.0))
    }
}

/// Array response vector; every entry has unit modulus, so `‖a‖² = nx·ny`.
pub fn steering_vector(upa: &Upa, aoa: &AoaPair) -> DVector<Complex<f64>> {
    let (sin_el, cos_az, sin_az) = (aoa.el.sin(), aoa.az.cos(), aoa.az.sin());
    let u = sin_el * cos_az;
    let v = sin_el * sin_az;
    let k = 2.0 * std::f64::consts::PI * upa.spacing;
    DVector::from_iterator(
        upa.num_elements(),
        upa.offsets().map(|(cx, cy)| {
            let phase = k * (cx * u + cy * v);
            Complex::new(phase.cos(), phase.sin())
        }),
    )
}

/// Analytic `(nx·ny) × 2` matrix of steering-vector derivatives, columns
/// `∂a/∂el` and `∂a/∂az`.
pub fn steering_derivatives(upa: &Upa, aoa: &AoaPair) -> DMatrix<Complex<f64>> {
    let (sin_el, cos_el) = aoa.el.sin_cos();
    let (sin_az, cos_az) = aoa.az.sin_cos();
    let du_del = cos_el * cos_az;
    let dv_del = cos_el * sin_az;
    let du_daz = -sin_el * sin_az;
    let dv_daz = sin_el * cos_az;
    let k = 2.0 * std::f64::consts::PI * upa.spacing;
    let a = steering_vector(upa, aoa);
    let mut d = DMatrix::zeros(upa.num_elements(), 2);
    for (row, (cx, cy)) in upa.offsets().enumerate() {
        let j_phase = Complex::new(0.0, 1.0) * a[row];
        d[(row, 0)] = j_phase * (k * (cx * du_del + cy * dv_del));
        d[(row, 1)] = j_phase * (k * (cx * du_daz + cy * dv_daz));
    }
    d
}

/// Waveform-level 2x2 Fisher information of `(el, az)` with the complex
/// path gain treated as a nuisance parameter.
pub fn aoa_fim_waveform(upa: &Upa, aoa: &AoaPair, link: &LinkBudget) -> Matrix2<f64> {
    let a = steering_vector(upa, aoa);
    let d = steering_derivatives(upa, aoa);
    let norm_sq = upa.num_elements() as f64;
    let dhd = d.ad_mul(&d); // DᴴD, 2x2
    let dha = d.ad_mul(&a); // Dᴴa, 2x1
    let gram = dhd - (&dha * dha.adjoint()) / Complex::new(norm_sq, 0.0);
    let mut fim = Matrix2::zeros();
    for i in 0..2 {
        for j in 0..2 {
            fim[(i, j)] = 2.0 * link.snr_linear * gram[(i, j)].re;
        }
    }
    fim
}

/// Calibrate von Mises concentrations for every link of a scenario:
/// for station `m`, equate the inverse measurement information per angle to
/// the corresponding diagonal entry of the inverse waveform FIM, then solve
/// `κ I₁(κ)/I₀(κ) = target` per angle. Output ordered `(el₁, az₁, …)`.
pub fn calibrate_concentrations(
    upa: &Upa,
    rotation: &Rotation,
    p_ue: &Vec3,
    bs_positions: &[Vec3],
    links: &[LinkBudget],
) -> Result<ConcentrationVector, Error> {
    if bs_positions.len() != links.len() {
        return Err(Error::LengthMismatch {
            left: bs_positions.len(),
            right: links.len(),
        });
    }
    let mut pairs = Vec::with_capacity(bs_positions.len());
    for (m, (p_bs, link)) in bs_positions.iter().zip(links).enumerate() {
        let aoa = aoa_from_geometry(rotation, p_ue, p_bs)?;
        let fim = aoa_fim_waveform(upa, &aoa, link);
        let trace = fim[(0, 0)] + fim[(1, 1)];
        let det = fim[(0, 0)] * fim[(1, 1)] - fim[(0, 1)] * fim[(1, 0)];
        let disc = (trace * trace - 4.0 * det).max(0.0).sqrt();
        let lambda_max = 0.5 * (trace + disc);
        let lambda_min = 0.5 * (trace - disc);
        if !(lambda_min > 0.0) || lambda_max > lambda_min * WAVEFORM_COND_LIMIT {
            return Err(Error::SingularWaveformFim {
                bs_index: m,
                el: aoa.el,
                az: aoa.az,
            });
        }
        // diag of the inverse, re-inverted: targets det/J₁₁ and det/J₀₀
        let target_el = det / fim[(1, 1)];
        let target_az = det / fim[(0, 0)];
        let kappa_el = solve_concentration(target_el)?;
        let kappa_az = solve_concentration(target_az)?;
        pairs.push((kappa_el, kappa_az));
    }
    ConcentrationVector::from_pairs(pairs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::EulerAngles;
    use crate::vonmises::fisher_info;
    use approx::assert_relative_eq;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};
    use std::f64::consts::{FRAC_PI_2, PI};

    fn paper_scenario() -> (Upa, Rotation, Vec3, Vec<Vec3>) {
        let upa = Upa::new(16, 16, 0.5).unwrap();
        let rot = crate::geometry::euler_to_rotation(&EulerAngles::new(
            0.6 * PI,
            0.0,
            -0.8 * PI,
        ));
        let p_ue = Vec3::new(50.0, 0.0, -5.0);
        let bs = vec![Vec3::zeros(), Vec3::new(0.0, 50.0, 0.0)];
        (upa, rot, p_ue, bs)
    }

    #[test]
    fn steering_broadside_all_ones() {
        let upa = Upa::new(4, 3, 0.5).unwrap();
        let a = steering_vector(&upa, &AoaPair::new(0.0, 1.3));
        for entry in a.iter() {
            assert_relative_eq!(entry.re, 1.0, epsilon = 1e-15);
            assert_relative_eq!(entry.im, 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn steering_single_element() {
        let upa = Upa::new(1, 1, 0.5).unwrap();
        let a = steering_vector(&upa, &AoaPair::new(0.7, -2.1));
        assert_eq!(a.len(), 1);
        assert_relative_eq!(a[0].re, 1.0, epsilon = 1e-15);
        let d = steering_derivatives(&upa, &AoaPair::new(0.7, -2.1));
        assert_relative_eq!(d.norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn steering_norm_is_element_count() {
        let upa = Upa::new(16, 16, 0.5).unwrap();
        let a = steering_vector(&upa, &AoaPair::new(1.1, 0.4));
        assert_relative_eq!(a.norm_squared(), 256.0, epsilon = 1e-10);
    }

    #[test]
    fn steering_derivatives_match_finite_differences() {
        let upa = Upa::new(8, 8, 0.5).unwrap();
        let mut rng = StdRng::seed_from_u64(3);
        let h = 1e-6;
        for _ in 0..50 {
            let aoa = AoaPair::new(rng.gen_range(0.2..2.9), rng.gen_range(-3.0..3.0));
            let d = steering_derivatives(&upa, &aoa);
            let fd_el = (steering_vector(&upa, &AoaPair::new(aoa.el + h, aoa.az))
                - steering_vector(&upa, &AoaPair::new(aoa.el - h, aoa.az)))
                / Complex::new(2.0 * h, 0.0);
            let fd_az = (steering_vector(&upa, &AoaPair::new(aoa.el, aoa.az + h))
                - steering_vector(&upa, &AoaPair::new(aoa.el, aoa.az - h)))
                / Complex::new(2.0 * h, 0.0);
            let rel_el = (d.column(0) - &fd_el).norm() / fd_el.norm().max(1e-12);
            let rel_az = (d.column(1) - &fd_az).norm() / fd_az.norm().max(1.0);
            assert!(rel_el < 1e-6, "el col mismatch {rel_el}");
            assert!(rel_az < 1e-6, "az col mismatch {rel_az}");
        }
    }

    #[test]
    fn steering_derivative_grazing_structure() {
        // At el = π/2, az = 0 both direction-cosine derivatives along el
        // vanish, so the el column is zero and only the v-derivative feeds
        // the az column.
        let upa = Upa::new(4, 4, 0.5).unwrap();
        let d = steering_derivatives(&upa, &AoaPair::new(FRAC_PI_2, 0.0));
        assert_relative_eq!(d.column(0).norm(), 0.0, epsilon = 1e-12);
        assert!(d.column(1).norm() > 1.0);
    }

    #[test]
    fn fim_zero_snr_and_psd() {
        let upa = Upa::new(6, 5, 0.5).unwrap();
        let aoa = AoaPair::new(0.9, 1.7);
        let zero = aoa_fim_waveform(&upa, &aoa, &LinkBudget::new(0.0).unwrap());
        assert_relative_eq!(zero.norm(), 0.0, epsilon = 1e-15);
        let mut rng = StdRng::seed_from_u64(4);
        for _ in 0..100 {
            let aoa = AoaPair::new(rng.gen_range(0.05..3.1), rng.gen_range(-3.1..3.1));
            let fim = aoa_fim_waveform(&upa, &aoa, &LinkBudget::new(2.5).unwrap());
            assert_relative_eq!(fim[(0, 1)], fim[(1, 0)], epsilon = 1e-9);
            let trace = fim[(0, 0)] + fim[(1, 1)];
            let det = fim[(0, 0)] * fim[(1, 1)] - fim[(0, 1)] * fim[(1, 0)];
            assert!(trace >= -1e-9 && det >= -1e-6, "not PSD: tr={trace} det={det}");
        }
    }

    #[test]
    fn fim_linear_in_snr() {
        let upa = Upa::new(16, 16, 0.5).unwrap();
        let aoa = AoaPair::new(1.2, -0.6);
        let f1 = aoa_fim_waveform(&upa, &aoa, &LinkBudget::new(1.0).unwrap());
        let f3 = aoa_fim_waveform(&upa, &aoa, &LinkBudget::new(3.0).unwrap());
        assert_relative_eq!(f3, f1 * 3.0, epsilon = 1e-9);
    }

    #[test]
    fn fim_reference_point_invariance() {
        let centered = Upa::new(16, 16, 0.5).unwrap();
        let corner = centered.with_origin(IndexOrigin::Corner);
        let mut rng = StdRng::seed_from_u64(8);
        for _ in 0..20 {
            let aoa = AoaPair::new(rng.gen_range(0.1..3.0), rng.gen_range(-3.1..3.1));
            let link = LinkBudget::new(1.0).unwrap();
            let fc = aoa_fim_waveform(&centered, &aoa, &link);
            let fk = aoa_fim_waveform(&corner, &aoa, &link);
            assert!(
                (fc - fk).norm() <= 1e-9 * fc.norm().max(1.0),
                "origin shift changed the FIM by {}",
                (fc - fk).norm() / fc.norm()
            );
        }
    }

    #[test]
    fn fim_nuisance_never_helps() {
        // diag(I⁻¹) ≥ diag(I)⁻¹ entrywise.
        let upa = Upa::new(8, 8, 0.5).unwrap();
        let mut rng = StdRng::seed_from_u64(12);
        for _ in 0..50 {
            let aoa = AoaPair::new(rng.gen_range(0.3..2.8), rng.gen_range(-3.0..3.0));
            let fim = aoa_fim_waveform(&upa, &aoa, &LinkBudget::new(1.0).unwrap());
            let det = fim[(0, 0)] * fim[(1, 1)] - fim[(0, 1)] * fim[(1, 0)];
            if det < 1e-9 {
                continue;
            }
            assert!(fim[(1, 1)] / det >= 1.0 / fim[(0, 0)] - 1e-12);
            assert!(fim[(0, 0)] / det >= 1.0 / fim[(1, 1)] - 1e-12);
        }
    }

    #[test]
    fn fim_monte_carlo_observed_information() {
        // Score outer-product estimate of the full FIM over
        // (el, az, Re α, Im α) for y = α a(θ) + w, Schur-complemented onto
        // the angles, against the closed form. Scores use FD steering
        // vectors, independent of steering_derivatives.
        let upa = Upa::new(16, 16, 0.5).unwrap();
        let aoa = AoaPair::new(1.0, 0.7);
        let snr = 1.0; // 0 dB
        let link = LinkBudget::new(snr).unwrap();
        let closed = aoa_fim_waveform(&upa, &aoa, &link);

        let n = upa.num_elements();
        let a_true = steering_vector(&upa, &aoa);
        // unit gain, noise variance σ² = 1/SNR per element
        let sigma_sq = 1.0 / snr;
        let h = 1e-5;
        let d_el = (steering_vector(&upa, &AoaPair::new(aoa.el + h, aoa.az))
            - steering_vector(&upa, &AoaPair::new(aoa.el - h, aoa.az)))
            / Complex::new(2.0 * h, 0.0);
        let d_az = (steering_vector(&upa, &AoaPair::new(aoa.el, aoa.az + h))
            - steering_vector(&upa, &AoaPair::new(aoa.el, aoa.az - h)))
            / Complex::new(2.0 * h, 0.0);
        let d_re = a_true.clone();
        let d_im = a_true.map(|c| c * Complex::new(0.0, 1.0));
        let derivs = [d_el, d_az, d_re, d_im];

        let mut rng = StdRng::seed_from_u64(42);
        let mut gauss = move || -> f64 {
            let u1: f64 = rng.gen::<f64>().max(1e-12);
            let u2: f64 = rng.gen();
            (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
        };
        let trials = 10_000;
        let mut acc = nalgebra::Matrix4::<f64>::zeros();
        for _ in 0..trials {
            // w ~ CN(0, σ² I): each real/imag part has variance σ²/2
            let noise = DVector::from_iterator(
                n,
                (0..n).map(|_| {
                    Complex::new(
                        (sigma_sq / 2.0).sqrt() * gauss(),
                        (sigma_sq / 2.0).sqrt() * gauss(),
                    )
                }),
            );
            // score_i = (2/σ²) Re{ (∂μ/∂η_i)ᴴ (y − μ) }
            let mut score = [0.0; 4];
            for (i, d) in derivs.iter().enumerate() {
                score[i] = 2.0 / sigma_sq * d.dotc(&noise).re;
            }
            for i in 0..4 {
                for j in 0..4 {
                    acc[(i, j)] += score[i] * score[j];
                }
            }
        }
        let full = acc / trials as f64;
        let i_tt = full.fixed_view::<2, 2>(0, 0).into_owned();
        let i_ta = full.fixed_view::<2, 2>(0, 2).into_owned();
        let i_aa = full.fixed_view::<2, 2>(2, 2).into_owned();
        let schur = i_tt - i_ta * i_aa.try_inverse().unwrap() * i_ta.transpose();
        assert!(
            (schur - closed).norm() / closed.norm() < 0.03,
            "MC observed information off by {}",
            (schur - closed).norm() / closed.norm()
        );
    }

    #[test]
    fn calibration_snr_scaling_law() {
        let (upa, rot, p_ue, bs) = paper_scenario();
        let l1 = vec![LinkBudget::from_db(-10.0).unwrap(); 2];
        let l2 = vec![LinkBudget::new(2.0 * l1[0].snr_linear).unwrap(); 2];
        let k1 = calibrate_concentrations(&upa, &rot, &p_ue, &bs, &l1).unwrap();
        let k2 = calibrate_concentrations(&upa, &rot, &p_ue, &bs, &l2).unwrap();
        for (a, b) in k1.iter().zip(k2.iter()) {
            assert_relative_eq!(fisher_info(b), 2.0 * fisher_info(a), max_relative = 1e-8);
        }
    }

    #[test]
    fn calibration_high_snr_asymptote() {
        // κ → target + 1/2 as the target grows.
        let (upa, rot, p_ue, bs) = paper_scenario();
        let links = vec![LinkBudget::from_db(60.0).unwrap(); 2];
        let kappas = calibrate_concentrations(&upa, &rot, &p_ue, &bs, &links).unwrap();
        for (m, p_bs) in bs.iter().enumerate() {
            let aoa = aoa_from_geometry(&rot, &p_ue, p_bs).unwrap();
            let fim = aoa_fim_waveform(&upa, &aoa, &links[m]);
            let det = fim[(0, 0)] * fim[(1, 1)] - fim[(0, 1)] * fim[(1, 0)];
            let (k_el, k_az) = kappas.pair(m);
            assert_relative_eq!(k_el, det / fim[(1, 1)] + 0.5, max_relative = 1e-4);
            assert_relative_eq!(k_az, det / fim[(0, 0)] + 0.5, max_relative = 1e-4);
        }
    }

    #[test]
    fn calibration_reference_snapshot() {
        // Pipeline smoke values for the 2-station scenario at −10 dB,
        // frozen from a verified run as a regression guard.
        let (upa, rot, p_ue, bs) = paper_scenario();
        let links = vec![LinkBudget::from_db(-10.0).unwrap(); 2];
        let kappas = calibrate_concentrations(&upa, &rot, &p_ue, &bs, &links).unwrap();
        assert_eq!(kappas.len(), 4);
        assert!(kappas.iter().all(|k| k.is_finite() && k > 0.0));
        let frozen = [
            2.43087086461722629e3,
            8.30825879025813992e3,
            4.70094115628683312e2,
            1.02690357514019743e4,
        ];
        for (k, f) in kappas.iter().zip(frozen) {
            assert_relative_eq!(k, f, max_relative = 1e-10);
        }
    }

    #[test]
    fn calibration_singular_at_grazing() {
        // Ray in the array plane (el = π/2): the elevation column of D
        // vanishes and the 2x2 FIM is singular.
        let upa = Upa::new(16, 16, 0.5).unwrap();
        let rot = Rotation::identity();
        let p_ue = Vec3::zeros();
        let bs = vec![Vec3::new(10.0, 0.0, 0.0)];
        let links = vec![LinkBudget::from_db(0.0).unwrap()];
        let err = calibrate_concentrations(&upa, &rot, &p_ue, &bs, &links).unwrap_err();
        match err {
            Error::SingularWaveformFim { bs_index, el, .. } => {
                assert_eq!(bs_index, 0);
                assert_relative_eq!(el, FRAC_PI_2, epsilon = 1e-12);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }
}
