//! Radial and edge shape operators, the special Möbius maps `μ_t`, `ν_t`, and their
//! evolution under the radial and linking flows. Dimension-generic; the planar pipeline
//! only ever feeds 1×1 operators through here.

use nalgebra::{Complex, DMatrix};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Matrix = DMatrix<f64>;

const POLE_RTOL: f64 = 1e-12;
const EDGE_SCAN_STEPS: usize = 4096;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OperatorError {
    #[error("pole at t = {t}: eigenvalue {eigenvalue} satisfies t·κ = 1")]
    Pole { t: f64, eigenvalue: f64 },
    #[error("evolution crosses a pole at flow time {time} (eigenvalue {eigenvalue})")]
    PoleCrossing { time: f64, eigenvalue: f64 },
    #[error("operator must be square, got {0}x{1}")]
    NotSquare(usize, usize),
    #[error("operator has non-finite entries")]
    NonFinite,
    #[error("invalid parameter: {0}")]
    Parameter(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OperatorKind {
    Radial,
    Edge,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorState {
    pub matrix: Matrix,
    pub kind: OperatorKind,
    pub basis_note: String,
}

impl OperatorState {
    pub fn radial(matrix: Matrix) -> Self {
        OperatorState { matrix, kind: OperatorKind::Radial, basis_note: String::new() }
    }

    pub fn edge(matrix: Matrix) -> Self {
        OperatorState { matrix, kind: OperatorKind::Edge, basis_note: String::new() }
    }

    pub fn scalar(kappa: f64) -> Self {
        Self::radial(Matrix::from_element(1, 1, kappa))
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

/// Piecewise-linear linking schedule: reaches the boundary at t = ½ and the linking axis at t = 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowSchedule {
    pub r: f64,
    pub ell: f64,
}

impl FlowSchedule {
    pub fn new(r: f64, ell: f64) -> Result<Self, OperatorError> {
        if !(r > 0.0 && ell >= r && ell.is_finite()) {
            return Err(OperatorError::Parameter(format!("schedule needs 0 < r <= ell, got r={r}, ell={ell}")));
        }
        Ok(FlowSchedule { r, ell })
    }

    pub fn chi(&self, t: f64) -> Result<f64, OperatorError> {
        if !(0.0..=1.0).contains(&t) {
            return Err(OperatorError::Parameter(format!("flow time {t} outside [0, 1]")));
        }
        Ok(chi(self.r, self.ell, t))
    }

    /// Smallest flow time with `χ(t) = c`, if `c` is reached.
    pub fn chi_inverse(&self, c: f64) -> Option<f64> {
        if c < 0.0 || c > self.ell {
            None
        } else if c <= self.r {
            Some(c / (2.0 * self.r))
        } else if self.ell > self.r {
            Some(0.5 + 0.5 * (c - self.r) / (self.ell - self.r))
        } else {
            Some(0.5)
        }
    }
}

/// Radial distance travelled by the linking flow at time `t`.
pub fn chi(r: f64, ell: f64, t: f64) -> f64 {
    if t <= 0.5 {
        2.0 * t * r
    } else {
        2.0 * (1.0 - t) * r + (2.0 * t - 1.0) * ell
    }
}

/// `I_{n−1,1}`: identity with the last diagonal entry zeroed.
pub fn edge_metric(n: usize) -> Matrix {
    let mut m = Matrix::identity(n, n);
    m[(n - 1, n - 1)] = 0.0;
    m
}

fn check_square(a: &Matrix) -> Result<usize, OperatorError> {
    if a.nrows() != a.ncols() {
        return Err(OperatorError::NotSquare(a.nrows(), a.ncols()));
    }
    if a.iter().any(|x| !x.is_finite()) {
        return Err(OperatorError::NonFinite);
    }
    Ok(a.nrows())
}

fn inf_norm(a: &Matrix) -> f64 {
    a.row_iter().map(|r| r.iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max)
}

fn max_abs(a: &Matrix) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn complex_eigenvalues(a: &Matrix) -> Vec<Complex<f64>> {
    a.clone().complex_eigenvalues().iter().copied().collect()
}

/// Real eigenvalue of `a` closest to `target`; falls back to `target` itself.
fn nearest_real_eigenvalue(a: &Matrix, target: f64) -> f64 {
    let scale = max_abs(a).max(1e-300);
    complex_eigenvalues(a)
        .into_iter()
        .filter(|z| z.im.abs() <= 1e-9 * scale)
        .map(|z| z.re)
        .min_by(|x, y| (x - target).abs().total_cmp(&(y - target).abs()))
        .unwrap_or(target)
}

fn is_pole(b: &Matrix) -> bool {
    let n = b.nrows() as i32;
    let det = b.determinant();
    !(det.abs() > POLE_RTOL * inf_norm(b).powi(n)) || !det.is_finite()
}

/// `(M − tA)⁻¹A` for a metric `M`.
fn mobius_with(a: &Matrix, t: f64, metric: &Matrix, edge: bool) -> Result<Matrix, OperatorError> {
    check_square(a)?;
    let b = metric - a * t;
    if is_pole(&b) {
        let eigenvalue = if edge {
            if t == 0.0 { f64::INFINITY } else { 1.0 / t }
        } else if t == 0.0 {
            f64::INFINITY
        } else {
            nearest_real_eigenvalue(a, 1.0 / t)
        };
        return Err(OperatorError::Pole { t, eigenvalue });
    }
    b.lu().solve(a).ok_or(OperatorError::Pole { t, eigenvalue: if t == 0.0 { f64::INFINITY } else { 1.0 / t } })
}

/// `μ_t(A) = (I − tA)⁻¹A`.
pub fn mobius_mu(a: &Matrix, t: f64) -> Result<Matrix, OperatorError> {
    let n = check_square(a)?;
    mobius_with(a, t, &Matrix::identity(n, n), false)
}

/// `ν_t(A) = (I_{n−1,1} − tA)⁻¹A`.
pub fn mobius_nu(a: &Matrix, t: f64) -> Result<Matrix, OperatorError> {
    let n = check_square(a)?;
    mobius_with(a, t, &edge_metric(n), true)
}

/// `‖μ_s(μ_t(A)) − μ_{s+t}(A)‖∞` (entrywise max).
pub fn mu_semigroup_check(a: &Matrix, s: f64, t: f64) -> Result<f64, OperatorError> {
    let lhs = mobius_mu(&mobius_mu(a, t)?, s)?;
    let rhs = mobius_mu(a, s + t)?;
    Ok(max_abs(&(lhs - rhs)))
}

/// `‖μ_s(ν_t(A)) − ν_{s+t}(A)‖∞`.
pub fn nu_semigroup_check(a: &Matrix, s: f64, t: f64) -> Result<f64, OperatorError> {
    let lhs = mobius_mu(&mobius_nu(a, t)?, s)?;
    let rhs = mobius_nu(a, s + t)?;
    Ok(max_abs(&(lhs - rhs)))
}

/// Centred-difference residual of `dΞ/dt = Ξ²` along `Ξ(t) = μ_t(A)`.
pub fn riccati_residual(a: &Matrix, t: f64, h: f64) -> Result<f64, OperatorError> {
    if !(h > 0.0) {
        return Err(OperatorError::Parameter(format!("step h must be positive, got {h}")));
    }
    let plus = mobius_mu(a, t + h)?;
    let minus = mobius_mu(a, t - h)?;
    let mid = mobius_mu(a, t)?;
    let deriv = (plus - minus) / (2.0 * h);
    Ok(max_abs(&(deriv - &mid * &mid)))
}

/// `‖[μ_t(A), A]‖∞`.
pub fn commutator_norm(a: &Matrix, t: f64) -> Result<f64, OperatorError> {
    let m = mobius_mu(a, t)?;
    Ok(max_abs(&(&m * a - a * &m)))
}

/// Largest mismatch between the spectrum of `μ_t(A)` and `κ/(1 − tκ)` over the spectrum of `A`.
pub fn eigenvalue_law_residual(a: &Matrix, t: f64) -> Result<f64, OperatorError> {
    let evolved = complex_eigenvalues(&mobius_mu(a, t)?);
    let mut predicted: Vec<Complex<f64>> = complex_eigenvalues(a)
        .into_iter()
        .map(|k| k / (Complex::new(1.0, 0.0) - k * t))
        .collect();
    let mut worst: f64 = 0.0;
    for z in evolved {
        let (i, d) = predicted
            .iter()
            .enumerate()
            .map(|(i, p)| (i, (p - z).norm()))
            .min_by(|x, y| x.1.total_cmp(&y.1))
            .expect("spectra have equal size");
        worst = worst.max(d);
        predicted.swap_remove(i);
    }
    Ok(worst)
}

fn require_kind(s: &OperatorState, kind: OperatorKind) -> Result<(), OperatorError> {
    if s.kind != kind {
        return Err(OperatorError::Parameter(format!("expected a {kind:?} operator, got {:?}", s.kind)));
    }
    Ok(())
}

/// Radial operator at level `t` of the radial flow: `μ_{tr}(S)`.
pub fn evolve_radial(s: &OperatorState, r: f64, t: f64) -> Result<OperatorState, OperatorError> {
    require_kind(s, OperatorKind::Radial)?;
    Ok(OperatorState { matrix: mobius_mu(&s.matrix, t * r)?, kind: s.kind, basis_note: s.basis_note.clone() })
}

/// Edge operator at level `t`: `ν_{tr}(S_E)`.
pub fn evolve_edge(s: &OperatorState, r: f64, t: f64) -> Result<OperatorState, OperatorError> {
    require_kind(s, OperatorKind::Edge)?;
    Ok(OperatorState { matrix: mobius_nu(&s.matrix, t * r)?, kind: s.kind, basis_note: s.basis_note.clone() })
}

/// First flow time in `(0, t]` at which the evolution meets a pole.
fn first_pole_time(s: &OperatorState, schedule: &FlowSchedule, t: f64) -> Option<(f64, f64)> {
    let reach = chi(schedule.r, schedule.ell, t);
    match s.kind {
        OperatorKind::Radial => {
            let scale = max_abs(&s.matrix).max(1e-300);
            complex_eigenvalues(&s.matrix)
                .into_iter()
                .filter(|z| z.im.abs() <= 1e-9 * scale && z.re > 0.0 && 1.0 / z.re <= reach)
                .filter_map(|z| schedule.chi_inverse(1.0 / z.re).map(|time| (time, z.re)))
                .min_by(|x, y| x.0.total_cmp(&y.0))
        }
        OperatorKind::Edge => {
            let n = s.dim();
            let metric = edge_metric(n);
            // det(I_{n−1,1} − cA) vanishes linearly at c = 0, so scan det/c instead.
            let g = |c: f64| (&metric - &s.matrix * c).determinant() / c;
            let mut prev_c = reach / EDGE_SCAN_STEPS as f64 * 1e-3;
            let mut prev = g(prev_c);
            for i in 1..=EDGE_SCAN_STEPS {
                let c = reach * i as f64 / EDGE_SCAN_STEPS as f64;
                let cur = g(c);
                if cur == 0.0 || cur.signum() != prev.signum() {
                    let (mut lo, mut hi) = (prev_c, c);
                    for _ in 0..80 {
                        let mid = 0.5 * (lo + hi);
                        if g(mid).signum() == prev.signum() {
                            lo = mid;
                        } else {
                            hi = mid;
                        }
                    }
                    let root = 0.5 * (lo + hi);
                    return schedule.chi_inverse(root).map(|time| (time, 1.0 / root));
                }
                prev = cur;
                prev_c = c;
            }
            None
        }
    }
}

/// Operator carried by the linking flow to time `t`: `μ_{χ(t)}(S)` (or `ν` for edges).
pub fn evolve_under_linking(s: &OperatorState, schedule: &FlowSchedule, t: f64) -> Result<OperatorState, OperatorError> {
    check_square(&s.matrix)?;
    let c = schedule.chi(t)?;
    if let Some((time, eigenvalue)) = first_pole_time(s, schedule, t) {
        return Err(OperatorError::PoleCrossing { time, eigenvalue });
    }
    let matrix = match s.kind {
        OperatorKind::Radial => mobius_mu(&s.matrix, c)?,
        OperatorKind::Edge => mobius_nu(&s.matrix, c)?,
    };
    Ok(OperatorState { matrix, kind: s.kind, basis_note: s.basis_note.clone() })
}

/// Radial operator induced on the linking axis: `−μ_ℓ(S)`.
pub fn linking_axis_operator(s: &OperatorState, ell: f64) -> Result<OperatorState, OperatorError> {
    require_kind(s, OperatorKind::Radial)?;
    Ok(OperatorState { matrix: -mobius_mu(&s.matrix, ell)?, kind: s.kind, basis_note: s.basis_note.clone() })
}

/// Spectral radius, via the complex spectrum.
pub fn spectral_radius(a: &Matrix) -> f64 {
    complex_eigenvalues(a).into_iter().map(|z| z.norm()).fold(0.0, f64::max)
}
