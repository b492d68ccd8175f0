//! Constrained Fisher information of the rotation matrix and the scalar
//! orientation error bound (OEB).
//!
//! The stacked measurement vector θ has diagonal Fisher information
//! `I(θ) = diag(κ ⊙ I₁(κ) ⊘ I₀(κ))`. The chain rule maps it onto the nine
//! entries of `r = vec(R)`:
//!
//! ```text
//! I(r) = Υ I(θ) Υᵀ,       Υ = ∂θ/∂r ∈ ℝ^{9×2M}.
//! ```
//!
//! The orthogonality constraints `h(r) = 0` (six quadratic equations from
//! `RᵀR = I`) confine the error to the 3-dimensional tangent space. With
//! `M` an orthonormal basis of the null space of `∂h/∂rᵀ`, the constrained
//! Cramer-Rao bound and the OEB are
//!
//! ```text
//! CRB = M (Mᵀ I(r) M)⁻¹ Mᵀ,      OEB = sqrt(trace(CRB)),
//! ```
//!
//! which lower-bounds `sqrt(E‖R − R̂‖²_F)` for unbiased estimators. Near a
//! degenerate geometry `Mᵀ I(r) M` loses rank; the bound is then reported
//! as flagged-infinite instead of a meaningless large number.

use nalgebra::{DMatrix, DVector, SMatrix};

use crate::geometry::{aoa_jacobian, Rotation, Vec3};
use crate::vonmises::{fisher_info, ConcentrationVector};
use crate::Error;

/// Condition-number limit on `Mᵀ I(r) M` beyond which the constrained
/// bound is flagged infinite.
const CRB_COND_LIMIT: f64 = 1e12;

/// Measurement Fisher information `diag(κ ⊙ I₁(κ) ⊘ I₀(κ))`, 2M × 2M.
pub fn measurement_fim(kappas: &ConcentrationVector) -> DMatrix<f64> {
    DMatrix::from_diagonal(&DVector::from_iterator(
        kappas.len(),
        kappas.iter().map(fisher_info),
    ))
}

/// Orthonormal basis of the null space of the constraint Jacobian
/// `∂h/∂rᵀ` at `R = [r₁ r₂ r₃]`:
///
/// ```text
/// M = (1/√2) · [ −r₃    0    r₂ ]
///              [   0   −r₃  −r₁ ]
///              [  r₁    r₂    0 ]
/// ```
///
/// The 1/√2 column scaling makes `MᵀM = I₃` hold exactly; the constrained
/// bound itself is invariant to any uniform column rescaling.
pub fn constraint_basis(r: &Rotation) -> SMatrix<f64, 9, 3> {
    let m = r.matrix();
    let r1 = m.column(0);
    let r2 = m.column(1);
    let r3 = m.column(2);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = SMatrix::<f64, 9, 3>::zeros();
    for i in 0..3 {
        out[(i, 0)] = -s * r3[i];
        out[(6 + i, 0)] = s * r1[i];
        out[(3 + i, 1)] = -s * r3[i];
        out[(6 + i, 1)] = s * r2[i];
        out[(i, 2)] = s * r2[i];
        out[(3 + i, 2)] = -s * r1[i];
    }
    out
}

/// Constrained Cramer-Rao bound of `vec(R)`, or the diagnostic for a
/// near-singular tangent-space information matrix.
#[derive(Debug, Clone)]
pub enum ConstrainedCrb {
    Finite(SMatrix<f64, 9, 9>),
    /// `Mᵀ I(r) M` failed the conditioning test; carries its smallest
    /// eigenvalue.
    Singular { min_eigenvalue: f64 },
}

/// Scalar orientation error bound `sqrt(trace(CRB))`, flagged infinite at
/// degenerate geometries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Oeb {
    Finite(f64),
    Infinite { min_eigenvalue: f64 },
}

impl Oeb {
    /// The bound as a plain float (`+inf` when flagged).
    pub fn value(&self) -> f64 {
        match self {
            Oeb::Finite(v) => *v,
            Oeb::Infinite { .. } => f64::INFINITY,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Oeb::Finite(_))
    }

    /// `10·log₁₀(OEB)`, the dB convention used for reporting.
    pub fn db(&self) -> f64 {
        10.0 * self.value().log10()
    }
}

/// `M (Mᵀ I(r) M)⁻¹ Mᵀ` with a conditioning guard on the 3x3 core.
pub fn constrained_crb(
    i_r: &SMatrix<f64, 9, 9>,
    m_basis: &SMatrix<f64, 9, 3>,
) -> ConstrainedCrb {
    let core = m_basis.transpose() * i_r * m_basis;
    let eig = core.symmetric_eigen();
    let min = eig.eigenvalues.min();
    let max = eig.eigenvalues.max();
    if !(min > 0.0) || max > min * CRB_COND_LIMIT {
        return ConstrainedCrb::Singular { min_eigenvalue: min };
    }
    let mut inv = SMatrix::<f64, 3, 3>::zeros();
    for k in 0..3 {
        let v = eig.eigenvectors.column(k);
        inv += v * v.transpose() / eig.eigenvalues[k];
    }
    ConstrainedCrb::Finite(m_basis * inv * m_basis.transpose())
}

/// Everything the bound pipeline produces for one configuration.
#[derive(Debug, Clone)]
pub struct FimBundle {
    /// 2M × 2M diagonal measurement information.
    pub i_theta: DMatrix<f64>,
    /// 9 × 2M Jacobian `∂θ/∂r`.
    pub upsilon: DMatrix<f64>,
    /// 9 × 9 information of `vec(R)`.
    pub i_r: SMatrix<f64, 9, 9>,
    /// 9 × 3 constraint null-space basis.
    pub m_basis: SMatrix<f64, 9, 3>,
    pub crb: ConstrainedCrb,
    pub oeb: Oeb,
}

impl FimBundle {
    /// Assemble the full pipeline: AoA Jacobian → measurement FIM →
    /// `I(r) = Υ I(θ) Υᵀ` → constraint basis → constrained CRB → OEB.
    pub fn compute(
        rotation: &Rotation,
        p_ue: &Vec3,
        bs_positions: &[Vec3],
        kappas: &ConcentrationVector,
    ) -> Result<FimBundle, Error> {
        if kappas.num_pairs() != bs_positions.len() {
            return Err(Error::LengthMismatch {
                left: kappas.num_pairs(),
                right: bs_positions.len(),
            });
        }
        let upsilon = aoa_jacobian(rotation, p_ue, bs_positions)?;
        let i_theta = measurement_fim(kappas);
        let i_r_dyn = &upsilon * &i_theta * upsilon.transpose();
        let i_r = SMatrix::<f64, 9, 9>::from_column_slice(i_r_dyn.as_slice());
        let m_basis = constraint_basis(rotation);
        let crb = constrained_crb(&i_r, &m_basis);
        let oeb = match &crb {
            ConstrainedCrb::Finite(c) => Oeb::Finite(c.trace().sqrt()),
            ConstrainedCrb::Singular { min_eigenvalue } => Oeb::Infinite {
                min_eigenvalue: *min_eigenvalue,
            },
        };
        Ok(FimBundle { i_theta, upsilon, i_r, m_basis, crb, oeb })
    }
}

/// Orientation error bound for one configuration (see [`FimBundle`]).
pub fn oeb(
    rotation: &Rotation,
    p_ue: &Vec3,
    bs_positions: &[Vec3],
    kappas: &ConcentrationVector,
) -> Result<Oeb, Error> {
    Ok(FimBundle::compute(rotation, p_ue, bs_positions, kappas)?.oeb)
}
