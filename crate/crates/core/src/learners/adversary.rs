//! Oblivious gradient sequences: `G_t` depends only on `(seed, t)`.

use crate::linalg::{operator_norm, polar_pseudo, DenseMatrix};
use crate::rng::{derive_seed, domain, gaussian_matrix, stream_rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdversaryKind {
    /// `G · Z / ‖Z‖_op` with fresh Gaussian `Z` each round.
    Gaussian,
    /// `½ G U`, then alternately `−G U` and `+G U` for a fixed `U` with unit
    /// singular values. Forces follow-the-leader to the wrong vertex each round.
    SignFlip,
    /// Rank-one gradients `G u vᵀ`, with a full-rank Gaussian burst every
    /// `BURST_PERIOD` rounds.
    LowRankBurst,
}

pub const BURST_PERIOD: usize = 10;

impl AdversaryKind {
    pub fn name(self) -> &'static str {
        match self {
            AdversaryKind::Gaussian => "gaussian",
            AdversaryKind::SignFlip => "signflip",
            AdversaryKind::LowRankBurst => "lowrank_burst",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [AdversaryKind::Gaussian, AdversaryKind::SignFlip, AdversaryKind::LowRankBurst]
            .into_iter()
            .find(|k| k.name() == s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Adversary {
    pub kind: AdversaryKind,
    pub m: usize,
    pub n: usize,
    pub g: f64,
    pub seed: u64,
    sign_pattern: DenseMatrix,
}

impl Adversary {
    pub fn new(kind: AdversaryKind, m: usize, n: usize, g: f64, seed: u64) -> Self {
        let sign_pattern = if m == 1 && n == 1 {
            DenseMatrix::identity(1)
        } else {
            let z = gaussian_matrix(&mut stream_rng(derive_seed(seed, domain::ADVERSARY, u64::MAX), 0), m, n);
            polar_pseudo(&z)
        };
        Self { kind, m, n, g, seed, sign_pattern }
    }

    /// Gradient for round `t ≥ 1`; `‖G_t‖_op ≤ g`.
    pub fn gradient(&self, t: usize) -> DenseMatrix {
        let mut rng = stream_rng(derive_seed(self.seed, domain::ADVERSARY, t as u64), 0);
        match self.kind {
            AdversaryKind::Gaussian => unit_gaussian(&mut rng, self.m, self.n).scale(self.g),
            AdversaryKind::SignFlip => {
                let c = match t {
                    1 => 0.5,
                    t if t % 2 == 0 => -1.0,
                    _ => 1.0,
                };
                self.sign_pattern.scale(c * self.g)
            }
            AdversaryKind::LowRankBurst => {
                if t.is_multiple_of(BURST_PERIOD) {
                    return unit_gaussian(&mut rng, self.m, self.n).scale(self.g);
                }
                let u = gaussian_matrix(&mut rng, self.m, 1);
                let v = gaussian_matrix(&mut rng, self.n, 1);
                let uv = u.matmul_transpose(&v);
                uv.scale(self.g / uv.frobenius_norm())
            }
        }
    }

    /// Rounds `1..=T`.
    pub fn sequence(&self, horizon: usize) -> alloc::vec::Vec<DenseMatrix> {
        (1..=horizon).map(|t| self.gradient(t)).collect()
    }
}

fn unit_gaussian(rng: &mut impl rand::Rng, m: usize, n: usize) -> DenseMatrix {
    let z = gaussian_matrix(rng, m, n);
    z.scale(1.0 / operator_norm(&z))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gradients_respect_bound_and_are_reproducible() {
        for kind in [AdversaryKind::Gaussian, AdversaryKind::SignFlip, AdversaryKind::LowRankBurst] {
            let a = Adversary::new(kind, 3, 5, 2.0, 7);
            for t in 1..=25 {
                let g = a.gradient(t);
                assert!(operator_norm(&g) <= 2.0 * (1.0 + 1e-12), "{kind:?}");
                assert_eq!(g, a.gradient(t));
            }
            assert_eq!(AdversaryKind::parse(kind.name()), Some(kind));
        }
    }

    #[test]
    fn sign_flip_scalar_pattern() {
        let a = Adversary::new(AdversaryKind::SignFlip, 1, 1, 1.0, 0);
        let xs: alloc::vec::Vec<f64> = (1..=4).map(|t| a.gradient(t)[(0, 0)]).collect();
        assert_eq!(xs, [0.5, -1.0, 1.0, -1.0]);
    }
}
