//! Small dense Hermitian semidefinite programs.
//!
//! ```text
//! minimize    Σ_j Tr(C_j X_j)
//! subject to  Σ_j Tr(A_ij X_j)  (≥ | ≤ | =)  b_i
//!             X_j ⪰ 0
//! ```
//!
//! Each Hermitian block is mapped to a real symmetric block of twice the size,
//! inequalities get nonnegative slacks, and the resulting real problem is
//! solved by an infeasible-start primal-dual path-following method.

mod embed;
mod ipm;
mod rank1;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{hermitian_defect, hermitian_eigen, trace_product, CMatrix};

pub use embed::{complex_from_embedding, real_embedding};
pub use ipm::{IpmOptions, RealSdp, RealSolution};
pub use rank1::{
    extract_rank1, power_control, principal_component, Rank1Beam, RANK_ONE_RATIO,
};

/// Relational sense of a linear matrix constraint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Ge,
    Le,
    Eq,
}

/// `Σ_j Tr(A_j X_j) (sense) rhs` over a subset of the blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub terms: Vec<(usize, CMatrix)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl Constraint {
    pub fn new(terms: Vec<(usize, CMatrix)>, sense: Sense, rhs: f64) -> Self {
        Self { terms, sense, rhs }
    }

    /// Left-hand side evaluated at `blocks`.
    pub fn lhs(&self, blocks: &[CMatrix]) -> f64 {
        self.terms
            .iter()
            .map(|(j, a)| trace_product(a, &blocks[*j]))
            .sum()
    }

    /// Signed slack; nonnegative when satisfied.
    pub fn slack(&self, blocks: &[CMatrix]) -> f64 {
        let lhs = self.lhs(blocks);
        match self.sense {
            Sense::Ge => lhs - self.rhs,
            Sense::Le => self.rhs - lhs,
            Sense::Eq => -(lhs - self.rhs).abs(),
        }
    }
}

/// A block-diagonal Hermitian SDP in the form above.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianSdp {
    block_dims: Vec<usize>,
    objective: Vec<Option<CMatrix>>,
    constraints: Vec<Constraint>,
}

impl HermitianSdp {
    pub fn new(block_dims: Vec<usize>) -> Self {
        let objective = vec![None; block_dims.len()];
        Self {
            block_dims,
            objective,
            constraints: Vec::new(),
        }
    }

    pub fn block_dims(&self) -> &[usize] {
        &self.block_dims
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn objective(&self, block: usize) -> Option<&CMatrix> {
        self.objective[block].as_ref()
    }

    pub fn set_objective(&mut self, block: usize, c: CMatrix) -> &mut Self {
        self.objective[block] = Some(c);
        self
    }

    pub fn add_constraint(&mut self, constraint: Constraint) -> &mut Self {
        self.constraints.push(constraint);
        self
    }

    /// Objective value at `blocks`.
    pub fn objective_value(&self, blocks: &[CMatrix]) -> f64 {
        self.objective
            .iter()
            .zip(blocks)
            .filter_map(|(c, x)| c.as_ref().map(|c| trace_product(c, x)))
            .sum()
    }

    fn check_matrix(&self, block: usize, m: &CMatrix) -> Result<()> {
        let n = *self
            .block_dims
            .get(block)
            .ok_or_else(|| Error::Dimension(format!("block {block} does not exist")))?;
        if m.nrows() != n || m.ncols() != n {
            return Err(Error::Dimension(format!(
                "block {block} expects {n}×{n}, got {}×{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let scale = m.iter().map(|z| z.norm()).fold(1.0, f64::max);
        let defect = hermitian_defect(m);
        if defect > 1e-10 * scale {
            return Err(Error::NotHermitian(defect));
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(invalid("matrix", "entries must be finite"));
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.block_dims.is_empty() || self.block_dims.contains(&0) {
            return Err(invalid("block_dims", "blocks must be nonempty"));
        }
        for (j, c) in self.objective.iter().enumerate() {
            if let Some(c) = c {
                self.check_matrix(j, c)?;
            }
        }
        for con in &self.constraints {
            if !con.rhs.is_finite() {
                return Err(invalid("rhs", "constraint bounds must be finite"));
            }
            for (j, a) in &con.terms {
                self.check_matrix(*j, a)?;
            }
        }
        Ok(())
    }

    /// Real symmetric form over the embedded blocks plus one nonnegative
    /// slack per inequality.
    pub fn to_real(&self) -> RealSdp {
        let psd_dims: Vec<usize> = self.block_dims.iter().map(|n| 2 * n).collect();
        let half = |m: &CMatrix| real_embedding(m) * 0.5;
        let c_psd = self
            .objective
            .iter()
            .zip(&psd_dims)
            .map(|(c, &n)| match c {
                Some(c) => half(c),
                None => nalgebra::DMatrix::zeros(n, n),
            })
            .collect();
        let mut lp_dim = 0;
        let mut rows = Vec::with_capacity(self.constraints.len());
        for con in &self.constraints {
            let psd_terms = con.terms.iter().map(|(j, a)| (*j, half(a))).collect();
            let lp_terms = match con.sense {
                Sense::Eq => vec![],
                Sense::Ge => {
                    lp_dim += 1;
                    vec![(lp_dim - 1, -1.0)]
                }
                Sense::Le => {
                    lp_dim += 1;
                    vec![(lp_dim - 1, 1.0)]
                }
            };
            rows.push(ipm::RealConstraint {
                psd_terms,
                lp_terms,
                rhs: con.rhs,
            });
        }
        RealSdp::new(psd_dims, lp_dim, c_psd, rows)
    }

    pub fn solve(&self, opts: &IpmOptions) -> Result<SdpSolution> {
        self.validate()?;
        let real = self.to_real();
        let sol = real.solve(opts)?;
        let blocks: Vec<CMatrix> = sol.psd.iter().map(complex_from_embedding).collect();
        let objective = self.objective_value(&blocks);
        Ok(SdpSolution {
            objective,
            dual_objective: sol.dual_objective,
            gap: sol.relative_gap,
            status: sol.status,
            iterations: sol.iterations,
            primal_infeasibility: sol.primal_infeasibility,
            dual_infeasibility: sol.dual_infeasibility,
            certificate: sol.certificate,
            blocks,
        })
    }
}

/// Termination state of a solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SdpStatus {
    Optimal,
    /// No `X ⪰ 0` satisfies the constraints; a Farkas certificate is attached.
    Infeasible,
    /// The objective is unbounded below.
    Unbounded,
    MaxIter,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdpSolution {
    pub blocks: Vec<CMatrix>,
    pub objective: f64,
    pub dual_objective: f64,
    pub gap: f64,
    pub status: SdpStatus,
    pub iterations: usize,
    pub primal_infeasibility: f64,
    pub dual_infeasibility: f64,
    /// Normalized multipliers `y` with `bᵀy = 1` and `Σ_i y_i A_i ⪯ 0` when
    /// infeasible.
    pub certificate: Option<Vec<f64>>,
}

impl SdpSolution {
    /// Smallest eigenvalue across the blocks, relative to the largest.
    pub fn min_relative_eigenvalue(&self) -> f64 {
        self.blocks
            .iter()
            .map(|x| {
                let (vals, _) = hermitian_eigen(x);
                let top = vals.first().copied().unwrap_or(0.0).abs().max(1e-300);
                vals.last().copied().unwrap_or(0.0) / top
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Returns the solution when optimal; maps other outcomes to errors.
    pub fn into_optimal(self) -> Result<Self> {
        match self.status {
            SdpStatus::Optimal => Ok(self),
            SdpStatus::Infeasible => Err(Error::Infeasible(format!(
                "Farkas multipliers {:?}",
                self.certificate.unwrap_or_default()
            ))),
            SdpStatus::Unbounded => Err(Error::Numerical("objective unbounded below".into())),
            SdpStatus::MaxIter => Err(Error::MaxIterations {
                iterations: self.iterations,
                gap: self.gap,
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{norm_sqr, outer, CVector, C64};
    use crate::wireless::sample_channels;
    use approx::assert_relative_eq;

    fn scalar(v: f64) -> CMatrix {
        CMatrix::from_element(1, 1, C64::new(v, 0.0))
    }

    #[test]
    fn scalar_problem() {
        let mut p = HermitianSdp::new(vec![1]);
        p.set_objective(0, scalar(1.0));
        p.add_constraint(Constraint::new(vec![(0, scalar(2.0))], Sense::Ge, 3.0));
        let s = p.solve(&IpmOptions::default()).unwrap();
        assert_eq!(s.status, SdpStatus::Optimal);
        assert_relative_eq!(s.objective, 1.5, max_relative = 1e-7);
        assert_relative_eq!(s.blocks[0][(0, 0)].re, 1.5, max_relative = 1e-7);
    }

    #[test]
    fn infeasible_pair() {
        let mut p = HermitianSdp::new(vec![1]);
        p.set_objective(0, scalar(1.0));
        p.add_constraint(Constraint::new(vec![(0, scalar(1.0))], Sense::Ge, 1.0));
        p.add_constraint(Constraint::new(vec![(0, scalar(-1.0))], Sense::Ge, 0.0));
        let s = p.solve(&IpmOptions::default()).unwrap();
        assert_eq!(s.status, SdpStatus::Infeasible);
        let y = s.certificate.unwrap();
        // bᵀy = 1 with y ≥ 0 on ≥-rows and Σ y_i a_i ≤ 0
        assert_relative_eq!(y[0] * 1.0, 1.0, max_relative = 1e-6);
        assert!(y[0] - y[1] <= 1e-6);
    }

    #[test]
    fn single_user_multicast_closed_form() {
        let h = sample_channels(1, 4, &[1.0], 21).unwrap().user(0);
        let c = 2.7;
        let mut p = HermitianSdp::new(vec![4]);
        p.set_objective(0, CMatrix::identity(4, 4));
        p.add_constraint(Constraint::new(vec![(0, outer(&h))], Sense::Ge, c));
        let s = p.solve(&IpmOptions::default()).unwrap();
        assert_eq!(s.status, SdpStatus::Optimal);
        assert_relative_eq!(s.objective, c / norm_sqr(&h), max_relative = 1e-7);
        let (vals, vecs) = hermitian_eigen(&s.blocks[0]);
        assert!(vals[1] / vals[0] < 1e-6);
        let u: CVector = vecs.column(0).into_owned();
        let align = crate::linalg::gain(&u, &h) / norm_sqr(&h);
        assert_relative_eq!(align, 1.0, max_relative = 1e-6);
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut m = CMatrix::identity(2, 2);
        m[(0, 1)] = C64::new(0.0, 1.0);
        let mut p = HermitianSdp::new(vec![2]);
        p.set_objective(0, m);
        assert!(matches!(
            p.solve(&IpmOptions::default()),
            Err(Error::NotHermitian(_))
        ));
    }

    #[test]
    fn rejects_wrong_dimension() {
        let mut p = HermitianSdp::new(vec![2]);
        p.add_constraint(Constraint::new(vec![(0, CMatrix::identity(3, 3))], Sense::Ge, 1.0));
        assert!(matches!(p.validate(), Err(Error::Dimension(_))));
    }

    #[test]
    fn less_equal_and_equality_constraints() {
        // max Tr(X) over 2×2 with X11 ≤ 1, X22 = 2, X ⪰ 0: written as min -Tr(X).
        let mut p = HermitianSdp::new(vec![2]);
        p.set_objective(0, CMatrix::identity(2, 2) * C64::new(-1.0, 0.0));
        let e = |i: usize| {
            let mut m = CMatrix::zeros(2, 2);
            m[(i, i)] = C64::new(1.0, 0.0);
            m
        };
        p.add_constraint(Constraint::new(vec![(0, e(0))], Sense::Le, 1.0));
        p.add_constraint(Constraint::new(vec![(0, e(1))], Sense::Eq, 2.0));
        let s = p.solve(&IpmOptions::default()).unwrap();
        assert_eq!(s.status, SdpStatus::Optimal);
        assert_relative_eq!(s.objective, -3.0, max_relative = 1e-7);
    }

    #[test]
    fn unbounded_problem_detected() {
        // min -x s.t. x ≥ 1
        let mut p = HermitianSdp::new(vec![1]);
        p.set_objective(0, scalar(-1.0));
        p.add_constraint(Constraint::new(vec![(0, scalar(1.0))], Sense::Ge, 1.0));
        let s = p.solve(&IpmOptions::default()).unwrap();
        assert_eq!(s.status, SdpStatus::Unbounded);
    }

    #[test]
    fn complex_off_diagonal_coupling() {
        // Tr(aX) = Im(X12), so min Tr(X) s.t. Im(X12) ≥ 1 is 2.
        let mut a = CMatrix::zeros(2, 2);
        a[(0, 1)] = C64::new(0.0, 0.5);
        a[(1, 0)] = C64::new(0.0, -0.5);
        let mut p = HermitianSdp::new(vec![2]);
        p.set_objective(0, CMatrix::identity(2, 2));
        p.add_constraint(Constraint::new(vec![(0, a)], Sense::Ge, 1.0));
        let s = p.solve(&IpmOptions::default()).unwrap();
        assert_eq!(s.status, SdpStatus::Optimal);
        assert_relative_eq!(s.objective, 2.0, max_relative = 1e-7);
        assert!(p.constraints()[0].slack(&s.blocks) > -1e-7);
    }
}
