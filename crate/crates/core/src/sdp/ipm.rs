//! Infeasible-start primal-dual interior point method for real block SDPs.
//!
//! Primal `min ⟨C, X⟩ s.t. 𝒜(X) = b, X ∈ 𝒦` and dual
//! `max bᵀy s.t. 𝒜ᵀ(y) + S = C, S ∈ 𝒦`, where 𝒦 is a product of PSD blocks
//! and one nonnegative orthant. Search directions use the HKM scaling with a
//! Mehrotra predictor-corrector.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::SdpStatus;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IpmOptions {
    /// Relative duality gap and residual target.
    pub tol: f64,
    pub max_iter: usize,
    /// Fraction of the step to the cone boundary.
    pub step_fraction: f64,
    /// Threshold on the normalized Farkas residual.
    pub infeasibility_tol: f64,
}

impl Default for IpmOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 200,
            step_fraction: 0.98,
            infeasibility_tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RealConstraint {
    pub psd_terms: Vec<(usize, DMatrix<f64>)>,
    pub lp_terms: Vec<(usize, f64)>,
    pub rhs: f64,
}

/// Real standard-form SDP over PSD blocks and a nonnegative orthant.
#[derive(Debug, Clone, PartialEq)]
pub struct RealSdp {
    psd_dims: Vec<usize>,
    lp_dim: usize,
    c_psd: Vec<DMatrix<f64>>,
    c_lp: DVector<f64>,
    rows: Vec<RealConstraint>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RealSolution {
    pub psd: Vec<DMatrix<f64>>,
    pub lp: DVector<f64>,
    pub y: DVector<f64>,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub relative_gap: f64,
    pub primal_infeasibility: f64,
    pub dual_infeasibility: f64,
    pub status: SdpStatus,
    pub iterations: usize,
    pub certificate: Option<Vec<f64>>,
}

#[derive(Debug, Clone)]
struct Point {
    psd: Vec<DMatrix<f64>>,
    lp: DVector<f64>,
}

impl Point {
    fn dot(&self, other: &Point) -> f64 {
        self.psd
            .iter()
            .zip(&other.psd)
            .map(|(a, b)| a.dot(b))
            .sum::<f64>()
            + self.lp.dot(&other.lp)
    }

    fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    fn axpy(&mut self, alpha: f64, other: &Point) {
        for (a, b) in self.psd.iter_mut().zip(&other.psd) {
            *a += b * alpha;
        }
        self.lp.axpy(alpha, &other.lp, 1.0);
    }

    fn sub(&self, other: &Point) -> Point {
        Point {
            psd: self.psd.iter().zip(&other.psd).map(|(a, b)| a - b).collect(),
            lp: &self.lp - &other.lp,
        }
    }
}

fn sym(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

fn spd_inverse(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let inv = m.clone().cholesky()?.inverse();
    Some(sym(&inv))
}

/// Largest `α` with `x + α·dx ⪰ 0`, or infinity.
fn psd_max_step(x: &DMatrix<f64>, dx: &DMatrix<f64>) -> f64 {
    let lambda_min = match x.clone().cholesky() {
        Some(ch) => {
            let l = ch.l();
            let linv = l
                .clone()
                .solve_lower_triangular(&DMatrix::identity(l.nrows(), l.nrows()))
                .unwrap_or_else(|| DMatrix::identity(l.nrows(), l.nrows()));
            let w = &linv * dx * linv.transpose();
            SymmetricEigen::new(sym(&w)).eigenvalues.min()
        }
        None => {
            // x lost definiteness to rounding; use a regularized inverse square root
            let eig = SymmetricEigen::new(sym(x));
            let floor = eig.eigenvalues.max().abs().max(1e-300) * 1e-14;
            let d = eig.eigenvalues.map(|v| 1.0 / v.max(floor).sqrt());
            let isqrt = &eig.eigenvectors * DMatrix::from_diagonal(&d) * eig.eigenvectors.transpose();
            let w = &isqrt * dx * &isqrt;
            SymmetricEigen::new(sym(&w)).eigenvalues.min()
        }
    };
    if lambda_min >= 0.0 {
        f64::INFINITY
    } else {
        -1.0 / lambda_min
    }
}

fn lp_max_step(x: &DVector<f64>, dx: &DVector<f64>) -> f64 {
    x.iter()
        .zip(dx.iter())
        .filter(|(_, &d)| d < 0.0)
        .map(|(&v, &d)| -v / d)
        .fold(f64::INFINITY, f64::min)
}

fn max_step(x: &Point, dx: &Point) -> f64 {
    x.psd
        .iter()
        .zip(&dx.psd)
        .map(|(a, b)| psd_max_step(a, b))
        .fold(lp_max_step(&x.lp, &dx.lp), f64::min)
}

impl RealSdp {
    pub fn new(
        psd_dims: Vec<usize>,
        lp_dim: usize,
        c_psd: Vec<DMatrix<f64>>,
        rows: Vec<RealConstraint>,
    ) -> Self {
        Self {
            psd_dims,
            lp_dim,
            c_psd,
            c_lp: DVector::zeros(lp_dim),
            rows,
        }
    }

    pub fn num_constraints(&self) -> usize {
        self.rows.len()
    }

    fn barrier_dim(&self) -> f64 {
        (self.psd_dims.iter().sum::<usize>() + self.lp_dim) as f64
    }

    fn c_point(&self) -> Point {
        Point {
            psd: self.c_psd.clone(),
            lp: self.c_lp.clone(),
        }
    }

    fn b(&self) -> DVector<f64> {
        DVector::from_iterator(self.rows.len(), self.rows.iter().map(|r| r.rhs))
    }

    fn row_norm(&self, i: usize) -> f64 {
        let r = &self.rows[i];
        let psd: f64 = r.psd_terms.iter().map(|(_, a)| a.norm_squared()).sum();
        let lp: f64 = r.lp_terms.iter().map(|(_, a)| a * a).sum();
        (psd + lp).sqrt()
    }

    /// Returns a copy with unit-norm rows and objective, and the scale factors.
    fn normalized(&self) -> (RealSdp, Vec<f64>, f64) {
        let row_scale: Vec<f64> = (0..self.rows.len())
            .map(|i| {
                let n = self.row_norm(i);
                if n > 0.0 {
                    n
                } else {
                    1.0
                }
            })
            .collect();
        let c_norm = self.c_point().norm();
        let c_scale = if c_norm > 0.0 { c_norm } else { 1.0 };
        let rows = self
            .rows
            .iter()
            .zip(&row_scale)
            .map(|(r, &s)| RealConstraint {
                psd_terms: r.psd_terms.iter().map(|(j, a)| (*j, a / s)).collect(),
                lp_terms: r.lp_terms.iter().map(|(j, a)| (*j, a / s)).collect(),
                rhs: r.rhs / s,
            })
            .collect();
        let scaled = RealSdp {
            psd_dims: self.psd_dims.clone(),
            lp_dim: self.lp_dim,
            c_psd: self.c_psd.iter().map(|c| c / c_scale).collect(),
            c_lp: &self.c_lp / c_scale,
            rows,
        };
        (scaled, row_scale, c_scale)
    }

    /// `𝒜(Z)` for any (not necessarily symmetric) block point.
    fn apply(&self, z: &Point) -> DVector<f64> {
        DVector::from_iterator(
            self.rows.len(),
            self.rows.iter().map(|r| {
                r.psd_terms.iter().map(|(j, a)| a.dot(&z.psd[*j])).sum::<f64>()
                    + r.lp_terms.iter().map(|(l, a)| a * z.lp[*l]).sum::<f64>()
            }),
        )
    }

    /// `𝒜ᵀ(y)`
    fn adjoint(&self, y: &DVector<f64>) -> Point {
        let mut out = self.zero_point();
        for (r, &yi) in self.rows.iter().zip(y.iter()) {
            for (j, a) in &r.psd_terms {
                out.psd[*j] += a * yi;
            }
            for (l, a) in &r.lp_terms {
                out.lp[*l] += a * yi;
            }
        }
        out
    }

    fn zero_point(&self) -> Point {
        Point {
            psd: self.psd_dims.iter().map(|&n| DMatrix::zeros(n, n)).collect(),
            lp: DVector::zeros(self.lp_dim),
        }
    }

    fn initial_point(&self) -> (Point, Point) {
        let mut x = self.zero_point();
        let mut s = self.zero_point();
        for (j, &n) in self.psd_dims.iter().enumerate() {
            let nf = n as f64;
            let mut xi = 10f64.max(nf.sqrt());
            let mut eta = 10f64.max(nf.sqrt()).max(self.c_psd[j].norm());
            for r in &self.rows {
                for (bj, a) in &r.psd_terms {
                    if *bj == j {
                        let an = a.norm();
                        xi = xi.max(nf * (1.0 + r.rhs.abs()) / (1.0 + an));
                        eta = eta.max(an);
                    }
                }
            }
            x.psd[j] = DMatrix::identity(n, n) * xi;
            s.psd[j] = DMatrix::identity(n, n) * eta;
        }
        if self.lp_dim > 0 {
            let nf = self.lp_dim as f64;
            let mut xi = 10f64.max(nf.sqrt());
            let eta = 10f64.max(nf.sqrt()).max(self.c_lp.norm());
            for r in &self.rows {
                if !r.lp_terms.is_empty() {
                    xi = xi.max(nf * (1.0 + r.rhs.abs()) / 2.0);
                }
            }
            x.lp.fill(xi);
            s.lp.fill(eta);
        }
        (x, s)
    }

    /// Schur complement `M_il = ⟨A_l, X A_i S⁻¹⟩`.
    fn schur(&self, x: &Point, s_inv: &Point) -> DMatrix<f64> {
        let m = self.rows.len();
        let mut out = DMatrix::zeros(m, m);
        for j in 0..self.psd_dims.len() {
            let touching: Vec<(usize, &DMatrix<f64>)> = self
                .rows
                .iter()
                .enumerate()
                .flat_map(|(i, r)| {
                    r.psd_terms
                        .iter()
                        .filter(move |(bj, _)| *bj == j)
                        .map(move |(_, a)| (i, a))
                })
                .collect();
            for &(i, ai) in &touching {
                let p = &x.psd[j] * ai * &s_inv.psd[j];
                for &(l, al) in &touching {
                    out[(l, i)] += al.dot(&p);
                }
            }
        }
        for (i, ri) in self.rows.iter().enumerate() {
            for (li, ai) in &ri.lp_terms {
                for (l, rl) in self.rows.iter().enumerate() {
                    for (ll, al) in &rl.lp_terms {
                        if ll == li {
                            out[(l, i)] += al * ai * x.lp[*li] * s_inv.lp[*li];
                        }
                    }
                }
            }
        }
        sym(&out)
    }

    fn solve_normalized(&self, opts: &IpmOptions) -> Result<RealSolution> {
        let m = self.rows.len();
        let nu = self.barrier_dim();
        let b = self.b();
        let c = self.c_point();
        let b_norm = b.norm();
        let c_norm = c.norm();
        let (mut x, mut s) = self.initial_point();
        let mut y = DVector::zeros(m);

        let finish = |status: SdpStatus,
                          iterations: usize,
                          x: &Point,
                          y: &DVector<f64>,
                          gap: f64,
                          pinf: f64,
                          dinf: f64,
                          certificate: Option<Vec<f64>>| RealSolution {
            psd: x.psd.clone(),
            lp: x.lp.clone(),
            y: y.clone(),
            primal_objective: c.dot(x),
            dual_objective: b.dot(y),
            relative_gap: gap,
            primal_infeasibility: pinf,
            dual_infeasibility: dinf,
            status,
            iterations,
            certificate,
        };

        let mut last = (f64::INFINITY, f64::INFINITY, f64::INFINITY);
        for iter in 0..opts.max_iter {
            let ax = self.apply(&x);
            let rp = &b - &ax;
            let aty = self.adjoint(&y);
            let rd = c.sub(&aty).sub(&s);
            let pobj = c.dot(&x);
            let dobj = b.dot(&y);
            let xs = x.dot(&s);
            let mu = xs / nu;
            let gap = xs.max((pobj - dobj).abs()) / (1.0 + pobj.abs() + dobj.abs());
            let pinf = rp.norm() / (1.0 + b_norm);
            let dinf = rd.norm() / (1.0 + c_norm);
            last = (gap, pinf, dinf);
            if gap <= opts.tol && pinf <= opts.tol && dinf <= opts.tol {
                return Ok(finish(SdpStatus::Optimal, iter, &x, &y, gap, pinf, dinf, None));
            }
            if dobj > 0.0 {
                let mut farkas = aty.clone();
                farkas.axpy(1.0, &s);
                if farkas.norm() / dobj < opts.infeasibility_tol {
                    let cert = (&y / dobj).iter().copied().collect();
                    return Ok(finish(SdpStatus::Infeasible, iter, &x, &y, gap, pinf, dinf, Some(cert)));
                }
            }
            if pobj < 0.0 && ax.norm() / -pobj < opts.infeasibility_tol {
                return Ok(finish(SdpStatus::Unbounded, iter, &x, &y, gap, pinf, dinf, None));
            }

            let s_inv = Point {
                psd: s
                    .psd
                    .iter()
                    .map(spd_inverse)
                    .collect::<Option<Vec<_>>>()
                    .ok_or_else(|| Error::Numerical("dual iterate left the cone".into()))?,
                lp: s.lp.map(|v| 1.0 / v),
            };
            let schur = self.schur(&x, &s_inv);
            let chol = schur.clone().cholesky();
            let lu = if chol.is_none() { Some(schur.clone().lu()) } else { None };
            let solve = |rhs: &DVector<f64>| -> Option<DVector<f64>> {
                match (&chol, &lu) {
                    (Some(ch), _) => Some(ch.solve(rhs)),
                    (None, Some(lu)) => lu.solve(rhs),
                    _ => None,
                }
            };

            // X·Rd·S⁻¹ and friends, block by block.
            let x_rd_sinv = Point {
                psd: (0..x.psd.len())
                    .map(|j| &x.psd[j] * &rd.psd[j] * &s_inv.psd[j])
                    .collect(),
                lp: x.lp.component_mul(&rd.lp).component_mul(&s_inv.lp),
            };
            let base_rhs = &b + self.apply(&x_rd_sinv);

            let direction = |rhs: &DVector<f64>, sigma_mu: f64, corr: Option<&Point>| -> Option<(Point, DVector<f64>, Point)> {
                let dy = solve(rhs)?;
                if dy.iter().any(|v| !v.is_finite()) {
                    return None;
                }
                let ds = rd.sub(&self.adjoint(&dy));
                let mut dx = self.zero_point();
                for j in 0..x.psd.len() {
                    let mut d = &s_inv.psd[j] * sigma_mu - &x.psd[j]
                        - sym(&(&x.psd[j] * &ds.psd[j] * &s_inv.psd[j]));
                    if let Some(cr) = corr {
                        d -= sym(&cr.psd[j]);
                    }
                    dx.psd[j] = d;
                }
                let mut dl = &s_inv.lp * sigma_mu - &x.lp - x.lp.component_mul(&ds.lp).component_mul(&s_inv.lp);
                if let Some(cr) = corr {
                    dl -= &cr.lp;
                }
                dx.lp = dl;
                Some((dx, dy, ds))
            };

            let Some((dx_a, _, ds_a)) = direction(&base_rhs, 0.0, None) else {
                break;
            };
            let ap = opts.step_fraction.min(1.0).min(opts.step_fraction * max_step(&x, &dx_a));
            let ad = opts.step_fraction.min(1.0).min(opts.step_fraction * max_step(&s, &ds_a));
            let mut x_aff = x.clone();
            x_aff.axpy(ap, &dx_a);
            let mut s_aff = s.clone();
            s_aff.axpy(ad, &ds_a);
            let mu_aff = x_aff.dot(&s_aff) / nu;
            let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

            let corr = Point {
                psd: (0..x.psd.len())
                    .map(|j| &dx_a.psd[j] * &ds_a.psd[j] * &s_inv.psd[j])
                    .collect(),
                lp: dx_a.lp.component_mul(&ds_a.lp).component_mul(&s_inv.lp),
            };
            let rhs = &base_rhs + self.apply(&corr) - self.apply(&s_inv) * (sigma * mu);
            let Some((dx, dy, ds)) = direction(&rhs, sigma * mu, Some(&corr)) else {
                break;
            };
            let ap = 1f64.min(opts.step_fraction * max_step(&x, &dx));
            let ad = 1f64.min(opts.step_fraction * max_step(&s, &ds));
            if !(ap.is_finite() && ad.is_finite()) || (ap < 1e-12 && ad < 1e-12) {
                break;
            }
            x.axpy(ap, &dx);
            y.axpy(ad, &dy, 1.0);
            s.axpy(ad, &ds);
        }
        let (gap, pinf, dinf) = last;
        Ok(finish(SdpStatus::MaxIter, opts.max_iter, &x, &y, gap, pinf, dinf, None))
    }

    pub fn solve(&self, opts: &IpmOptions) -> Result<RealSolution> {
        let (scaled, row_scale, c_scale) = self.normalized();
        let mut sol = scaled.solve_normalized(opts)?;
        for (yi, s) in sol.y.iter_mut().zip(&row_scale) {
            *yi *= c_scale / s;
        }
        if let Some(cert) = sol.certificate.as_mut() {
            // Renormalize so that bᵀy = 1 in the original scaling.
            for (ci, s) in cert.iter_mut().zip(&row_scale) {
                *ci /= s;
            }
        }
        sol.primal_objective *= c_scale;
        sol.dual_objective *= c_scale;
        Ok(sol)
    }
}
