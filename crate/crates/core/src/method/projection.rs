use crate::error::{Error, Result};
use crate::tensor::{Tape, Tensor, Var};

/// Norm below which a vector is treated as zero by every normalization.
pub const NORM_EPS: f64 = 1e-8;

/// Decomposition `v = v_par + v_perp` with `v_par` along `z`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectionResult {
    pub v_par: Tensor,
    pub v_perp: Tensor,
}

/// Row-wise projection of `v` onto `z` and its orthogonal complement.
///
/// `v_par = z·⟨v,z⟩/‖z‖²`, `v_perp = v − v_par`; rows with `‖z‖ < ε`
/// get `v_par = 0`. Only the direction of `z` matters, so any rescaling
/// `z → c·z` with `c ≠ 0` leaves the result unchanged.
pub fn project_rows<'t>(v: Var<'t>, z: Var<'t>) -> Result<(Var<'t>, Var<'t>)> {
    let coef = v.rows_dot(z)?.mul(z.rows_dot(z)?.recip_guarded(NORM_EPS * NORM_EPS)?)?;
    let v_par = z.scale_rows(coef)?;
    let v_perp = v.sub(v_par)?;
    Ok((v_par, v_perp))
}

/// [`project_rows`] on plain tensors (vectors or `[m×d]` matrices).
pub fn orthogonal_project(v: &Tensor, z: &Tensor) -> Result<ProjectionResult> {
    if v.shape() != z.shape() {
        return Err(Error::dim("orthogonal_project", format!("{:?} vs {:?}", v.shape(), z.shape())));
    }
    let shape = v.shape().to_vec();
    let (m, d) = v.dims2();
    let tape = Tape::new();
    let vv = tape.constant(v.clone().reshape(vec![m, d])?);
    let zz = tape.constant(z.clone().reshape(vec![m, d])?);
    let (par, perp) = project_rows(vv, zz)?;
    Ok(ProjectionResult {
        v_par: (*par.value()).clone().reshape(shape.clone())?,
        v_perp: (*perp.value()).clone().reshape(shape)?,
    })
}
