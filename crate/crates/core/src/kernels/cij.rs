//! The constants `c_ij` and lifted shell integrals of `X_i X_j Gamma~`.

use crate::error::{Error, Result};
use crate::geometry::SmoothStep;
use crate::jet::{jet_space, Jet};
use crate::lift::{DiffOperator, DilationPolar, FundamentalSolution, HomNorm};
use crate::quad::{gl_interval, SphereRule};

/// Radial profiles rising from 0 at `||v|| = 1/2` to 1 at `||v|| = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ShellProfile {
    /// The C-infinity step of the cutoff family.
    Smooth,
    /// `6 s^5 - 15 s^4 + 10 s^3` in `s = 2 r - 1`.
    Quintic,
}

impl ShellProfile {
    /// Value and derivative at radius `r`.
    pub fn value_and_slope(&self, r: f64) -> (f64, f64) {
        match self {
            ShellProfile::Smooth => {
                let step = SmoothStep { inner: 1.0, outer: 0.5 };
                let j = step.eval_jet(&Jet::variable(jet_space(1, 1), 0, r));
                (j.value(), j.partial(&[1]))
            }
            ShellProfile::Quintic => {
                let s = (2.0 * r - 1.0).clamp(0.0, 1.0);
                let v = s * s * s * (10.0 - 15.0 * s + 6.0 * s * s);
                let d = if (0.0..1.0).contains(&(2.0 * r - 1.0)) { 60.0 * s * s * (1.0 - s) * (1.0 - s) } else { 0.0 };
                (v, d)
            }
        }
    }
}

/// `c_ij` from the unit-sphere flux and from two shell integrals.
#[derive(Clone, Debug, PartialEq)]
pub struct CijReport {
    pub i: usize,
    pub j: usize,
    pub surface: f64,
    pub shell_smooth: f64,
    pub shell_quintic: f64,
    /// Integral of the absolute flux density; the scale used for near-zero constants.
    pub surface_scale: f64,
    /// `|surface - shell_smooth| / reference`.
    pub surface_shell_gap: f64,
    /// `|shell_smooth - shell_quintic| / reference`.
    pub profile_gap: f64,
}

/// Tolerance on the surface/shell agreement.
pub const CIJ_AGREEMENT: f64 = 0.01;

/// `c_ij = int_{||u|| = 1} (X_j Gamma~)(X_i . nu) dsigma`.
///
/// The flux through the unit sphere of the norm is `d/dr int_{||u|| < r} (X_j Gamma~)(X_i ||.||) du`
/// at `r = 1`, which in dilation-polar coordinates is an integral over the Euclidean sphere.
/// The shell form `int_{1/2 < ||v|| < 1} X_i(omega X_j Gamma~) dv` is evaluated for two profiles.
/// Gaps are relative to `|c_ij|`, or to the absolute flux scale when `|c_ij|` is below a
/// thousandth of it. A surface/shell gap above 1% is reported as an error.
pub fn cij_constant(fs: &FundamentalSolution, i: usize, j: usize) -> Result<CijReport> {
    let lift = fs.lift();
    if i >= lift.m() || j >= lift.m() {
        return Err(Error::InvalidParameter(format!("indices ({i}, {j}) out of range")));
    }
    if lift.big_n() != 3 {
        return Err(Error::InvalidParameter("sphere quadrature is built for N = 3".into()));
    }
    let norm = HomNorm::new(lift.weights())?;
    let polar = DilationPolar::new(lift.weights());
    let q = lift.big_q() as i32;
    let xi = DiffOperator::word(lift.fields(), &[i]);
    let xi_n = |u: &[f64]| xi.apply_at(u, |jt| norm.eval_jet(jt));
    let sphere = SphereRule::new(48, 96);
    let (surface, scale) = cij_surface(fs, i, j)?;
    let (mut shell_s, mut shell_q) = (0.0, 0.0);
    let (xs, ws) = gl_interval(32, 0.0, 1.0);
    for (th, w) in sphere.nodes.iter().zip(&sphere.weights) {
        let jac = polar.jacobian(th);
        let nt = norm.eval(th);
        // shell 1/2 < s ||theta|| < 1
        let (s0, s1) = (0.5 / nt, 1.0 / nt);
        for (x, wx) in xs.iter().zip(&ws) {
            let s = s0 + (s1 - s0) * x;
            let u = polar.dilate(s, th);
            let r = s * nt;
            let f = fs.derivative(&[j], &u);
            let xif = fs.derivative(&[i, j], &u);
            let grad = xi_n(&u);
            let meas = w * jac * s.powi(q - 1) * (s1 - s0) * wx;
            for (prof, acc) in [(ShellProfile::Smooth, &mut shell_s), (ShellProfile::Quintic, &mut shell_q)] {
                let (v, dv) = prof.value_and_slope(r);
                *acc += meas * (dv * grad * f + v * xif);
            }
        }
    }
    let reference = if surface.abs() > 1e-3 * scale { surface.abs() } else { scale };
    let report = CijReport {
        i,
        j,
        surface,
        shell_smooth: shell_s,
        shell_quintic: shell_q,
        surface_scale: scale,
        surface_shell_gap: (surface - shell_s).abs() / reference,
        profile_gap: (shell_s - shell_q).abs() / reference,
    };
    if report.surface_shell_gap > CIJ_AGREEMENT {
        return Err(Error::Quadrature(format!(
            "c_{}{}: surface {surface:.6e} and shell {shell_s:.6e} disagree by {:.2}%",
            i + 1,
            j + 1,
            100.0 * report.surface_shell_gap
        )));
    }
    Ok(report)
}

/// Surface value of `c_ij` and the integral of the absolute flux density.
pub fn cij_surface(fs: &FundamentalSolution, i: usize, j: usize) -> Result<(f64, f64)> {
    let lift = fs.lift();
    if i >= lift.m() || j >= lift.m() || lift.big_n() != 3 {
        return Err(Error::InvalidParameter(format!("indices ({i}, {j}) or lifted dimension out of range")));
    }
    let norm = HomNorm::new(lift.weights())?;
    let polar = DilationPolar::new(lift.weights());
    let q = lift.big_q() as i32;
    let xi = DiffOperator::word(lift.fields(), &[i]);
    let sphere = SphereRule::new(48, 96);
    let (mut value, mut scale) = (0.0, 0.0);
    for (th, w) in sphere.nodes.iter().zip(&sphere.weights) {
        let nt = norm.eval(th);
        let omega = polar.dilate(1.0 / nt, th);
        let density = polar.jacobian(th) * nt.powi(-q) * fs.derivative(&[j], &omega) * xi.apply_at(&omega, |jt| norm.eval_jet(jt));
        value += w * density;
        scale += w * density.abs();
    }
    Ok((value, scale))
}

/// Signed and absolute integrals of `X_i X_j Gamma~ . psi(||u||)` over `r1 < ||u|| < r2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShellIntegral {
    pub value: f64,
    pub abs: f64,
}

impl ShellIntegral {
    pub fn relative(&self) -> f64 {
        if self.abs == 0.0 {
            0.0
        } else {
            self.value.abs() / self.abs
        }
    }
}

/// Lifted shell integral by direct evaluation on a dilation-polar product grid
/// (`n_polar x 2 n_polar` directions, `n_radial` Gauss nodes in `log s`).
pub fn lifted_shell_integral<P: Fn(f64) -> f64>(fs: &FundamentalSolution, i: usize, j: usize, r1: f64, r2: f64, psi: P, n_polar: usize, n_radial: usize) -> Result<ShellIntegral> {
    if !(r2 >= r1 && r1 > 0.0) {
        return Err(Error::InvalidParameter(format!("shell needs r2 >= r1 > 0, got {r1}, {r2}")));
    }
    let lift = fs.lift();
    if lift.big_n() != 3 {
        return Err(Error::InvalidParameter("sphere quadrature is built for N = 3".into()));
    }
    if r1 == r2 {
        return Ok(ShellIntegral { value: 0.0, abs: 0.0 });
    }
    let norm = HomNorm::new(lift.weights())?;
    let polar = DilationPolar::new(lift.weights());
    let q = lift.big_q() as i32;
    let sphere = SphereRule::new(n_polar, 2 * n_polar);
    let (ls, wl) = gl_interval(n_radial, r1.ln(), r2.ln());
    let (mut value, mut abs) = (0.0, 0.0);
    for (th, w) in sphere.nodes.iter().zip(&sphere.weights) {
        let jac = polar.jacobian(th);
        let nt = norm.eval(th);
        for (l, wlog) in ls.iter().zip(&wl) {
            let r = l.exp();
            let s = r / nt;
            let u = polar.dilate(s, th);
            // du = s^{Q-1} J ds dtheta and ds = s dlog r
            let v = w * jac * s.powi(q) * wlog * fs.derivative(&[i, j], &u) * psi(r);
            value += v;
            abs += v.abs();
        }
    }
    Ok(ShellIntegral { value, abs })
}
