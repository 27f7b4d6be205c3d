use super::{Rep, SpaceTimeField, SpatialField, SpatialRep};
use crate::error::{Error, Result};

fn check_exponent(p: f64) -> Result<()> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::Domain(format!("Lebesgue exponent {p} is below 1")));
    }
    Ok(())
}

/// `(sum_i w |v_i|^p)^{1/p}`, or `max |v_i|` for `p = inf`.
pub fn lp_combine(values: impl IntoIterator<Item = f64>, weight: f64, p: f64) -> f64 {
    if p.is_infinite() {
        return values.into_iter().fold(0.0, |m, v| m.max(v.abs()));
    }
    if p == 1.0 {
        return weight * values.into_iter().map(f64::abs).sum::<f64>();
    }
    if p == 2.0 {
        return (weight * values.into_iter().map(|v| v * v).sum::<f64>()).sqrt();
    }
    (weight * values.into_iter().map(|v| v.abs().powf(p)).sum::<f64>()).powf(1.0 / p)
}

/// Spatial `L^2` norm of every time slice of a spatial-Fourier field.
pub fn slice_l2_norms(u: &SpaceTimeField) -> Result<Vec<f64>> {
    u.require(Rep::SpatialFourier)?;
    let g = u.grid();
    let vol = g.cell_volume();
    Ok((0..g.nt)
        .map(|j| (u.slice(j).iter().map(|c| c.norm_sqr()).sum::<f64>() * vol).sqrt())
        .collect())
}

/// Spatial `L^r` norm of every time slice of a physical field.
pub fn slice_lr_norms(u: &SpaceTimeField, r: f64) -> Result<Vec<f64>> {
    check_exponent(r)?;
    u.require(Rep::Physical)?;
    let g = u.grid();
    let vol = g.cell_volume();
    Ok((0..g.nt).map(|j| lp_combine(u.slice(j).iter().map(|c| c.norm()), vol, r)).collect())
}

/// `||u||_{L^q_t L^2_x}` computed by Plancherel from a spatial-Fourier field.
pub fn lq_l2_from_spatial_fourier(u: &SpaceTimeField, q: f64) -> Result<f64> {
    check_exponent(q)?;
    Ok(lp_combine(slice_l2_norms(u)?, u.grid().dt(), q))
}

/// Mixed Lebesgue norm `||u||_{L^q_t L^r_x}` over the grid window.
pub fn mixed_norm(u: &SpaceTimeField, q: f64, r: f64) -> Result<f64> {
    check_exponent(q)?;
    check_exponent(r)?;
    let dt = u.grid().dt();
    let inner = if r == 2.0 {
        match u.rep() {
            Rep::SpatialFourier => slice_l2_norms(u)?,
            Rep::Physical => slice_lr_norms(u, 2.0)?,
            Rep::SpacetimeFourier => slice_l2_norms(&u.to_rep(Rep::SpatialFourier))?,
        }
    } else {
        match u.rep() {
            Rep::Physical => slice_lr_norms(u, r)?,
            _ => slice_lr_norms(&u.to_rep(Rep::Physical), r)?,
        }
    };
    Ok(lp_combine(inner, dt, q))
}

/// `||f||_{L^r}` on the spatial torus.
pub fn spatial_lr_norm(f: &SpatialField, r: f64) -> Result<f64> {
    check_exponent(r)?;
    if r == 2.0 {
        return Ok(f.l2_norm());
    }
    let phys = f.to_rep(SpatialRep::Physical);
    Ok(lp_combine(phys.data().iter().map(|c| c.norm()), phys.cell_volume(), r))
}
