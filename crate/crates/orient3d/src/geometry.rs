//! Rotation representations, the angle-of-arrival (AoA) forward model, and
//! analytic gradients of the arrival angles with respect to the rotation
//! matrix.
//!
//! Orientation is a proper rotation `R ∈ SO(3)` taking local (receiver)
//! coordinates to global coordinates. Euler angles follow the intrinsic
//! Z-Y'-X'' convention, `R = Rz(α) · Ry(β) · Rx(γ)`; at `R = I` the
//! receiver array is parallel to the global XY plane with its axes aligned
//! to X and Y.
//!
//! A base station at `p_bs` seen from a receiver at `p_ue` with orientation
//! `R` produces the local direction vector
//!
//! ```text
//! q = Rᵀ (p_bs − p_ue),
//! el = arccos(q_z / ‖q‖) ∈ [0, π],     az = atan2(q_y, q_x) ∈ (−π, π].
//! ```
//!
//! The gradients of `el` and `az` with respect to the nine entries of `R`
//! are rank-one expressions in the unit vector `u = (p_ue − p_bs)/‖·‖`:
//! writing `c_i = uᵢᵀ Rᵀ u` for the rows `u₁, u₂, u₃` of the identity,
//!
//! ```text
//! ∂el/∂R = u u₃ᵀ / sqrt(1 − c₃²),
//! ∂az/∂R = (c₁ u u₂ᵀ − c₂ u u₁ᵀ) / (c₁² + c₂²),
//! ```
//!
//! both of which become singular when the ray is aligned with the local ±Z
//! axis (`el ∈ {0, π}`), where the azimuth is undefined.

use nalgebra::{DMatrix, Matrix3, SVector, Vector3};

use crate::Error;

/// 3D position (meters) or direction vector.
pub type Vec3 = Vector3<f64>;

/// Frobenius tolerance accepted when validating a rotation matrix.
pub const ROTATION_TOL: f64 = 1e-9;

/// Slack allowed past ±1 before a cosine argument is an error rather than
/// roundoff to be clamped.
const ACOS_CLAMP_TOL: f64 = 1e-12;

/// Minimum value of sin²(el) below which the azimuth gradient is treated
/// as singular.
const GRADIENT_SINGULAR_TOL: f64 = 1e-12;

/// Separation (meters) below which two positions count as coincident.
const COINCIDENT_TOL: f64 = 1e-9;

/// Wrap an angle to the half-open interval (−π, π].
pub fn wrap_angle(x: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut w = x.rem_euclid(two_pi);
    if w > std::f64::consts::PI {
        w -= two_pi;
    }
    w
}

/// arccos with a guard band: arguments within `ACOS_CLAMP_TOL` of [−1, 1]
/// are clamped, anything further out is an error.
fn clamped_acos(x: f64) -> Result<f64, Error> {
    if x.abs() > 1.0 + ACOS_CLAMP_TOL || x.is_nan() {
        return Err(Error::AcosOutOfRange(x));
    }
    Ok(x.clamp(-1.0, 1.0).acos())
}

/// Intrinsic Z-Y'-X'' Euler angles (radians).
///
/// Canonical ranges are `alpha, gamma ∈ (−π, π]` and `beta ∈ [−π/2, π/2]`;
/// [`rotation_to_euler`] always produces canonical output.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EulerAngles {
    /// Rotation about the Z axis.
    pub alpha: f64,
    /// Rotation about the once-rotated Y axis.
    pub beta: f64,
    /// Rotation about the twice-rotated X axis.
    pub gamma: f64,
}

impl EulerAngles {
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Self {
        Self { alpha, beta, gamma }
    }

    /// Equivalent angles in canonical ranges (same rotation matrix).
    pub fn canonicalized(&self) -> Self {
        rotation_to_euler(&euler_to_rotation(self))
    }
}

/// An elevation/azimuth pair in the receiver's local frame (radians).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AoaPair {
    /// Elevation, measured from the local +Z axis, in [0, π].
    pub el: f64,
    /// Azimuth in the local XY plane, in (−π, π].
    pub az: f64,
}

impl AoaPair {
    pub fn new(el: f64, az: f64) -> Self {
        Self { el, az }
    }
}

/// A 3x3 proper rotation matrix (RᵀR = I, det R = +1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation {
    m: Matrix3<f64>,
}

/// Frobenius norm of `mᵀm − I`.
pub fn orthonormality_residual(m: &Matrix3<f64>) -> f64 {
    (m.transpose() * m - Matrix3::identity()).norm()
}

impl Rotation {
    pub fn identity() -> Self {
        Self { m: Matrix3::identity() }
    }

    /// Validate and wrap a matrix; the orthonormality residual and
    /// |det − 1| must both be below [`ROTATION_TOL`].
    pub fn from_matrix(m: Matrix3<f64>) -> Result<Self, Error> {
        let residual = orthonormality_residual(&m);
        if !residual.is_finite() || residual > ROTATION_TOL {
            return Err(Error::InvalidRotation(format!(
                "orthonormality residual {residual:.3e}"
            )));
        }
        let det = m.determinant();
        if (det - 1.0).abs() > ROTATION_TOL {
            return Err(Error::InvalidRotation(format!("determinant {det}")));
        }
        Ok(Self { m })
    }

    /// Wrap a matrix the caller guarantees to be a rotation.
    pub fn from_matrix_unchecked(m: Matrix3<f64>) -> Self {
        Self { m }
    }

    /// Rotation of `angle` radians about the Z axis.
    pub fn rot_z(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self {
            m: Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0),
        }
    }

    /// Rotation of `angle` radians about the Y axis.
    pub fn rot_y(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self {
            m: Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c),
        }
    }

    /// Rotation of `angle` radians about the X axis.
    pub fn rot_x(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self {
            m: Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c),
        }
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.m
    }

    pub fn into_matrix(self) -> Matrix3<f64> {
        self.m
    }

    /// Inverse rotation (the transpose).
    pub fn inverse(&self) -> Self {
        Self { m: self.m.transpose() }
    }

    /// Apply to a vector: local → global.
    pub fn rotate(&self, v: &Vec3) -> Vec3 {
        self.m * v
    }

    /// Apply the inverse: global → local (`Rᵀ v`).
    pub fn inverse_rotate(&self, v: &Vec3) -> Vec3 {
        self.m.tr_mul(v)
    }

    /// Compose rotations: `self * other` applies `other` first.
    pub fn compose(&self, other: &Rotation) -> Rotation {
        Rotation { m: self.m * other.m }
    }

    /// Column-major stacking `vec(R) = [r₁ᵀ, r₂ᵀ, r₃ᵀ]ᵀ` of the columns.
    pub fn vectorize(&self) -> SVector<f64, 9> {
        SVector::<f64, 9>::from_column_slice(self.m.as_slice())
    }

    /// Frobenius norm of the difference `‖R − S‖_F`.
    pub fn frobenius_distance(&self, other: &Rotation) -> f64 {
        (self.m - other.m).norm()
    }

    /// `‖RᵀR − I‖_F` for this rotation's own matrix.
    pub fn orthonormality_residual(&self) -> f64 {
        orthonormality_residual(&self.m)
    }

    /// Nearest rotation in Frobenius norm (polar projection via SVD).
    pub fn renormalized(&self) -> Rotation {
        let svd = self.m.svd(true, true);
        let u = svd.u.expect("svd of 3x3 always yields u");
        let v_t = svd.v_t.expect("svd of 3x3 always yields v_t");
        let d = (u * v_t).determinant();
        let fix = Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, d.signum()));
        Rotation { m: u * fix * v_t }
    }
}

impl std::ops::Mul for Rotation {
    type Output = Rotation;

    fn mul(self, rhs: Rotation) -> Rotation {
        self.compose(&rhs)
    }
}

/// Build the rotation matrix `Rz(α) · Ry(β) · Rx(γ)`.
pub fn euler_to_rotation(o: &EulerAngles) -> Rotation {
    Rotation::rot_z(o.alpha) * Rotation::rot_y(o.beta) * Rotation::rot_x(o.gamma)
}

/// Recover canonical Euler angles from a rotation.
///
/// At gimbal lock (`|β| = π/2`, where only `α ∓ γ` is determined) the
/// convention is `γ := 0` with the whole Z/X rotation folded into `α`, so
/// the inverse is deterministic and the matrix round trip stays exact.
pub fn rotation_to_euler(r: &Rotation) -> EulerAngles {
    let m = r.matrix();
    // With R = Rz(α)Ry(β)Rx(γ): m[(2,0)] = −sin β, m[(0,0)] = cos α cos β,
    // m[(1,0)] = sin α cos β, m[(2,1)] = cos β sin γ, m[(2,2)] = cos β cos γ.
    let cos_beta = m[(0, 0)].hypot(m[(1, 0)]);
    if cos_beta < 1e-12 {
        // Gimbal lock: first column is ±e3. m[(0,1)] = −sin α, m[(1,1)] = cos α
        // once γ := 0.
        let beta = if m[(2, 0)] <= 0.0 {
            std::f64::consts::FRAC_PI_2
        } else {
            -std::f64::consts::FRAC_PI_2
        };
        let alpha = (-m[(0, 1)]).atan2(m[(1, 1)]);
        return EulerAngles::new(alpha, beta, 0.0);
    }
    let beta = (-m[(2, 0)]).asin();
    let alpha = m[(1, 0)].atan2(m[(0, 0)]);
    let gamma = m[(2, 1)].atan2(m[(2, 2)]);
    EulerAngles::new(alpha, beta, gamma)
}

/// Elevation/azimuth of the ray from `p_ue` to `p_bs` in the local frame of
/// a receiver with orientation `r`.
///
/// When the ray is exactly along the local Z axis the azimuth is defined as
/// 0 (the `atan2(0, 0)` convention); gradient code treats that
/// configuration as singular instead.
pub fn aoa_from_geometry(r: &Rotation, p_ue: &Vec3, p_bs: &Vec3) -> Result<AoaPair, Error> {
    let d = p_bs - p_ue;
    let dist = d.norm();
    if dist < COINCIDENT_TOL {
        return Err(Error::DegenerateGeometry);
    }
    let q = r.inverse_rotate(&d);
    let el = clamped_acos(q.z / q.norm())?;
    let mut az = q.y.atan2(q.x);
    if az <= -std::f64::consts::PI {
        az += 2.0 * std::f64::consts::PI;
    }
    Ok(AoaPair::new(el, az))
}

/// Analytic gradients `(∂el/∂R, ∂az/∂R)` as 3x3 matrices.
///
/// Errors with [`Error::AzimuthGradientSingular`] when the ray lies along
/// the local ±Z axis (`el ∈ {0, π}`), so callers can exclude or flag the
/// uninformative configuration.
pub fn aoa_gradients(
    r: &Rotation,
    p_ue: &Vec3,
    p_bs: &Vec3,
) -> Result<(Matrix3<f64>, Matrix3<f64>), Error> {
    let d = p_ue - p_bs;
    let dist = d.norm();
    if dist < COINCIDENT_TOL {
        return Err(Error::DegenerateGeometry);
    }
    let u = d / dist;
    let w = r.inverse_rotate(&u); // Rᵀ u, unit
    let (c1, c2, c3) = (w.x, w.y, w.z);
    let planar = c1 * c1 + c2 * c2; // = 1 − c3² = sin²(el)
    if planar < GRADIENT_SINGULAR_TOL {
        return Err(Error::AzimuthGradientSingular { bs_index: None });
    }
    let d_el = u * nalgebra::RowVector3::new(0.0, 0.0, 1.0) / (1.0 - c3 * c3).sqrt();
    let d_az = (u * nalgebra::RowVector3::new(0.0, 1.0, 0.0) * c1
        - u * nalgebra::RowVector3::new(1.0, 0.0, 0.0) * c2)
        / planar;
    Ok((d_el, d_az))
}

/// The 9 × 2M Jacobian `Υ = ∂θ/∂r` of the stacked AoA vector with respect
/// to `vec(R)`: column `2m` is `vec(∂el_m/∂R)` and column `2m+1` is
/// `vec(∂az_m/∂R)`.
pub fn aoa_jacobian(r: &Rotation, p_ue: &Vec3, bs_positions: &[Vec3]) -> Result<DMatrix<f64>, Error> {
    let mut upsilon = DMatrix::<f64>::zeros(9, 2 * bs_positions.len());
    for (m, p_bs) in bs_positions.iter().enumerate() {
        let (d_el, d_az) = aoa_gradients(r, p_ue, p_bs).map_err(|e| match e {
            Error::AzimuthGradientSingular { .. } => {
                Error::AzimuthGradientSingular { bs_index: Some(m) }
            }
            other => other,
        })?;
        upsilon
            .column_mut(2 * m)
            .copy_from_slice(d_el.as_slice());
        upsilon
            .column_mut(2 * m + 1)
            .copy_from_slice(d_az.as_slice());
    }
    Ok(upsilon)
}

/// Reconstruct the local direction vector from an AoA pair and the known
/// range: `q = d·[sin el cos az, sin el sin az, cos el]ᵀ`.
pub fn q_from_aoa(aoa: &AoaPair, distance: f64) -> Vec3 {
    let (sin_el, cos_el) = aoa.el.sin_cos();
    let (sin_az, cos_az) = aoa.az.sin_cos();
    Vec3::new(
        distance * sin_el * cos_az,
        distance * sin_el * sin_az,
        distance * cos_el,
    )
}
