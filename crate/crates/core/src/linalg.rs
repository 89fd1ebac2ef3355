//! Banded direct solvers for the implicit substeps.

use crate::error::{PbdmError, Result};
use crate::model::DriftEval;

/// Pivots smaller than this are treated as zero.
const PIVOT_TOL: f64 = 1e-300;

/// `sub[r-1] x[r-1] + diag[r] x[r] + sup[r] x[r+1] = rhs[r]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TriDiagSystem {
    pub sub: Vec<f64>,
    pub diag: Vec<f64>,
    pub sup: Vec<f64>,
    pub rhs: Vec<f64>,
}

impl TriDiagSystem {
    fn check(&self) -> Result<()> {
        let n = self.diag.len();
        if n == 0 || self.rhs.len() != n || self.sub.len() + 1 != n || self.sup.len() + 1 != n {
            return Err(PbdmError::Shape(format!(
                "tridiagonal system with diag {} sub {} sup {} rhs {}",
                n,
                self.sub.len(),
                self.sup.len(),
                self.rhs.len()
            )));
        }
        Ok(())
    }
}

pub fn solve_tridiag(system: &TriDiagSystem) -> Result<Vec<f64>> {
    system.check()?;
    let mut x = system.rhs.clone();
    let mut scratch = Vec::new();
    thomas_in_place(&system.sub, &system.diag, &system.sup, &mut x, &mut scratch)?;
    Ok(x)
}

/// Thomas elimination without pivoting; `rhs` is overwritten by the solution.
pub fn thomas_in_place(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &mut [f64], scratch: &mut Vec<f64>) -> Result<()> {
    let n = diag.len();
    debug_assert!(rhs.len() == n && sub.len() + 1 == n && sup.len() + 1 == n);
    scratch.clear();
    scratch.resize(n, 0.0);
    let cp = scratch.as_mut_slice();

    let mut pivot = diag[0];
    if !(pivot.abs() >= PIVOT_TOL) {
        return Err(PbdmError::Singular { pivot: 0 });
    }
    if n > 1 {
        cp[0] = sup[0] / pivot;
    }
    rhs[0] /= pivot;
    for i in 1..n {
        pivot = diag[i] - sub[i - 1] * cp[i - 1];
        if !(pivot.abs() >= PIVOT_TOL) {
            return Err(PbdmError::Singular { pivot: i });
        }
        if i + 1 < n {
            cp[i] = sup[i] / pivot;
        }
        rhs[i] = (rhs[i] - sub[i - 1] * rhs[i - 1]) / pivot;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= cp[i] * rhs[i + 1];
    }
    Ok(())
}

/// Periodic tridiagonal solve: row 0 additionally couples to `x[n-1]` with
/// coefficient `corner_low` and row `n-1` couples to `x[0]` with
/// `corner_high`. Uses the Sherman-Morrison correction of a plain Thomas
/// solve; needs `n >= 3`.
pub fn cyclic_thomas_in_place(
    sub: &[f64],
    diag: &[f64],
    sup: &[f64],
    corner_low: f64,
    corner_high: f64,
    rhs: &mut [f64],
    scratch: &mut CyclicScratch,
) -> Result<()> {
    let n = diag.len();
    if n < 3 {
        return Err(PbdmError::Shape(format!("cyclic system needs n >= 3, got {n}")));
    }
    let gamma = -diag[0];
    let CyclicScratch { diag: bb, u, cp } = scratch;
    bb.clear();
    bb.extend_from_slice(diag);
    bb[0] = diag[0] - gamma;
    bb[n - 1] = diag[n - 1] - corner_high * corner_low / gamma;

    thomas_in_place(sub, bb, sup, rhs, cp)?;
    u.clear();
    u.resize(n, 0.0);
    u[0] = gamma;
    u[n - 1] = corner_high;
    thomas_in_place(sub, bb, sup, u, cp)?;

    let fact = (rhs[0] + corner_low * rhs[n - 1] / gamma) / (1.0 + u[0] + corner_low * u[n - 1] / gamma);
    for (x, z) in rhs.iter_mut().zip(u.iter()) {
        *x -= fact * z;
    }
    Ok(())
}

#[derive(Debug, Default, Clone)]
pub struct CyclicScratch {
    diag: Vec<f64>,
    u: Vec<f64>,
    cp: Vec<f64>,
}

/// Work arrays for the z-advection line solve.
#[derive(Debug, Default, Clone)]
pub struct ZLineScratch {
    sub: Vec<f64>,
    diag: Vec<f64>,
    sup: Vec<f64>,
    cp: Vec<f64>,
}

/// Implicit upwind step of `d_t rho + d_z (g rho) = 0` on one z column with
/// zero flux through both ends; `lambda = kappa dt / dz`.
///
/// The unknowns satisfy
/// `rho*_k + lambda (J_{k+1/2} - J_{k-1/2}) = rho_k` with
/// `J_{k+1/2} = g+_k rho*_k - g-_{k+1} rho*_{k+1}`, which telescopes so the
/// column sum is conserved.
pub fn solve_z_advection_line(rho_in: &[f64], drift: &[DriftEval], lambda: f64) -> Result<Vec<f64>> {
    let mut out = vec![0.0; rho_in.len()];
    let mut scratch = ZLineScratch::default();
    solve_z_advection_into(rho_in, drift, lambda, &mut out, &mut scratch)?;
    Ok(out)
}

pub fn solve_z_advection_into(
    rho_in: &[f64],
    drift: &[DriftEval],
    lambda: f64,
    out: &mut [f64],
    scratch: &mut ZLineScratch,
) -> Result<()> {
    let n = rho_in.len();
    if drift.len() != n || out.len() != n || n == 0 {
        return Err(PbdmError::Shape(format!(
            "z line of length {n} with {} drift values and {} outputs",
            drift.len(),
            out.len()
        )));
    }
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(PbdmError::Domain(format!("lambda = {lambda} must be finite and >= 0")));
    }
    if rho_in.iter().any(|v| !v.is_finite()) {
        return Err(PbdmError::NonFinite("z-advection input"));
    }
    if n == 1 {
        out[0] = rho_in[0];
        return Ok(());
    }
    let ZLineScratch { sub, diag, sup, cp } = scratch;
    sub.clear();
    sup.clear();
    diag.clear();
    for k in 0..n {
        let mut d = 1.0;
        if k + 1 < n {
            d += lambda * drift[k].plus;
            sup.push(-lambda * drift[k + 1].minus);
        }
        if k > 0 {
            d += lambda * drift[k].minus;
            sub.push(-lambda * drift[k - 1].plus);
        }
        diag.push(d);
    }
    out.copy_from_slice(rho_in);
    thomas_in_place(sub, diag, sup, out, cp)
}
