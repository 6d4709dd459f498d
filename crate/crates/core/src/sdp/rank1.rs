//! Rank-one beam extraction from relaxed covariance blocks.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, CMatrix, CVector, C64};
use crate::rng::rng_from;

/// Blocks with `λ₂/λ₁` below this are treated as exactly rank one.
pub const RANK_ONE_RATIO: f64 = 1e-6;

/// `√λ₁·u₁` and the ratio `λ₂/λ₁`.
pub fn principal_component(x: &CMatrix) -> (CVector, f64) {
    let (vals, vecs) = hermitian_eigen(x);
    let top = vals[0].max(0.0);
    let ratio = if top > 0.0 {
        vals.get(1).copied().unwrap_or(0.0).max(0.0) / top
    } else {
        1.0
    };
    let v = vecs.column(0).into_owned() * C64::new(top.sqrt(), 0.0);
    (v, ratio)
}

/// The chosen set of beams, one per block.
#[derive(Debug, Clone, PartialEq)]
pub struct Rank1Beam {
    pub beams: Vec<CVector>,
    /// Score of the chosen candidate, lower is better.
    pub cost: f64,
    /// Largest `λ₂/λ₁` over the blocks.
    pub eigen_ratio: f64,
    /// Number of candidates that were scored.
    pub candidates: usize,
}

impl Rank1Beam {
    pub fn rank_one(&self) -> bool {
        self.eigen_ratio < RANK_ONE_RATIO
    }
}

fn factor(x: &CMatrix) -> CMatrix {
    let (vals, vecs) = hermitian_eigen(x);
    let mut f = vecs;
    for (c, v) in vals.iter().enumerate() {
        let s = v.max(0.0).sqrt();
        f.column_mut(c).scale_mut(s);
    }
    f
}

/// Picks one beam per block by scoring candidates `v_j = U_j Λ_j^{1/2} r_j`
/// with `r_j ~ CN(0, I)`.
///
/// The principal components are always scored first. If every block is rank
/// one they are the only candidate. `score` may rescale the candidate and
/// returns `None` when it cannot be made feasible.
pub fn extract_rank1<F>(blocks: &[CMatrix], count: usize, seed: u64, mut score: F) -> Result<Rank1Beam>
where
    F: FnMut(&[CVector]) -> Option<(Vec<CVector>, f64)>,
{
    let principal: Vec<(CVector, f64)> = blocks.iter().map(principal_component).collect();
    let eigen_ratio = principal.iter().map(|p| p.1).fold(0.0, f64::max);
    let mut best: Option<(Vec<CVector>, f64)> = None;
    let mut consider = |cand: Vec<CVector>, best: &mut Option<(Vec<CVector>, f64)>| {
        if let Some((beams, cost)) = score(&cand) {
            if cost.is_finite() && best.as_ref().is_none_or(|b| cost < b.1) {
                *best = Some((beams, cost));
            }
        }
    };
    consider(principal.iter().map(|p| p.0.clone()).collect(), &mut best);
    let mut scored = 1;
    if eigen_ratio >= RANK_ONE_RATIO {
        let factors: Vec<CMatrix> = blocks.iter().map(factor).collect();
        let mut rng = rng_from(seed);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        for _ in 0..count {
            let cand = factors
                .iter()
                .map(|f| {
                    let r = CVector::from_fn(f.ncols(), |_, _| {
                        let re: f64 = rng.sample(StandardNormal);
                        let im: f64 = rng.sample(StandardNormal);
                        C64::new(re * h, im * h)
                    });
                    f * r
                })
                .collect();
            consider(cand, &mut best);
            scored += 1;
        }
    }
    let (beams, cost) = best.ok_or(Error::NoFeasibleCandidate(scored))?;
    Ok(Rank1Beam {
        beams,
        cost,
        eigen_ratio,
        candidates: scored,
    })
}

/// Powers `p` solving `G_kk p_k − ζ_k Σ_{j≠k} G_kj p_j = ζ_k σ²`.
///
/// `gains[(k, j)]` is the gain at user `k` of direction `j`. Returns `None`
/// when the targets are not jointly reachable at any power.
pub fn power_control(gains: &DMatrix<f64>, zeta: &[f64], noise: f64) -> Option<Vec<f64>> {
    let k = zeta.len();
    let a = DMatrix::from_fn(k, k, |r, c| {
        if r == c {
            gains[(r, c)]
        } else {
            -zeta[r] * gains[(r, c)]
        }
    });
    let rhs = DVector::from_iterator(k, zeta.iter().map(|z| z * noise));
    let p = a.lu().solve(&rhs)?;
    let tol = 1e-12 * p.amax().max(1.0);
    if p.iter().all(|v| v.is_finite() && *v >= -tol) {
        Some(p.iter().map(|v| v.max(0.0)).collect())
    } else {
        None
    }
}
