//! Genomes and the stochastic gene-to-token cast.
//!
//! A genome is a fixed-length vector of reals. Gene values live in the
//! half-open interval `]-OPERATOR_COUNT, literal_max]`: the negative side
//! addresses the operator table, the non-negative side encodes literal
//! magnitudes. The cast perturbs the gene with `u ~ U(-0.5, 0.5)` before
//! flooring, so a gene near a bin boundary decodes to either neighbor with
//! probability proportional to its distance — a smooth target for the GA.

use serde::{Deserialize, Serialize};

use super::ops::{Op, OPERATOR_COUNT};
use crate::scalar::{cast, Scalar};

/// What a gene decodes to for one execution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Token<T> {
    Operator(Op),
    /// Literal magnitude (always >= 0); the sign is sampled at push time.
    Literal(T),
}

/// Lower, open bound of the gene space: `-OPERATOR_COUNT`.
pub fn gene_floor<T: Scalar>() -> T {
    -cast::<T>(OPERATOR_COUNT as f64)
}

/// Cast a gene with an explicit perturbation `offset` (deterministic core of
/// the stochastic cast): `o = floor(gene + offset)`; negative `o` selects
/// operator `-o - 1`, otherwise the gene is a literal of magnitude `|gene|`.
///
/// Genes just above the open lower bound can floor one past the table end
/// (e.g. `-18.9 - 0.45`); the index clamps to the last operator so the cast
/// is total over the gene space.
#[inline]
pub fn cast_gene<T: Scalar>(gene: T, offset: T) -> Token<T> {
    let o = (gene + offset).floor().to_f64_lossless() as i64;
    if o < 0 {
        let index = ((-o - 1) as usize).min(OPERATOR_COUNT - 1);
        Token::Operator(Op::from_index(index).expect("clamped index in table"))
    } else {
        Token::Literal(gene.abs())
    }
}

/// Stochastic cast: `o = floor(gene + u)`, `u ~ U(-0.5, 0.5)`.
#[inline]
pub fn sample_token<T: Scalar, R: rand::Rng + ?Sized>(gene: T, rng: &mut R) -> Token<T> {
    let u = T::sample_uniform(rng, cast(-0.5), cast(0.5));
    cast_gene(gene, u)
}

/// Deterministic cast used for rendering: `o = floor(gene + 0.5)`, i.e. the
/// most likely bin.
#[inline]
pub fn modal_token<T: Scalar>(gene: T) -> Token<T> {
    cast_gene(gene, cast(0.5))
}

/// Fixed-length vector of genes; the evolved representation of one program.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Genome<T> {
    genes: Vec<T>,
}

impl<T: Scalar> Genome<T> {
    pub fn new(genes: Vec<T>) -> Self {
        Genome { genes }
    }

    /// Uniform random genome over `]-OPERATOR_COUNT, literal_max]`.
    pub fn random<R: rand::Rng + ?Sized>(num_genes: usize, literal_max: T, rng: &mut R) -> Self {
        let lo = gene_floor::<T>();
        let genes = (0..num_genes)
            // Reflect a draw from [lo, hi) to (lo, hi] so the open/closed
            // ends match the gene space exactly.
            .map(|_| lo + literal_max - T::sample_uniform(rng, lo, literal_max))
            .collect();
        Genome { genes }
    }

    pub fn genes(&self) -> &[T] {
        &self.genes
    }

    pub fn genes_mut(&mut self) -> &mut [T] {
        &mut self.genes
    }

    pub fn len(&self) -> usize {
        self.genes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.genes.is_empty()
    }

    /// True when every gene lies in `]-OPERATOR_COUNT, literal_max]`.
    pub fn in_gene_space(&self, literal_max: T) -> bool {
        let lo = gene_floor::<T>();
        self.genes.iter().all(|&g| g > lo && g <= literal_max)
    }

    /// Clamp a gene into the half-open gene space (used after mutation).
    pub fn clamp_gene(g: T, literal_max: T) -> T {
        let lo = gene_floor::<T>();
        if g <= lo {
            lo.next_up_val()
        } else if g > literal_max {
            literal_max
        } else {
            g
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, StreamId};

    #[test]
    fn cast_examples() {
        assert_eq!(cast_gene(-3.2_f64, 0.0), Token::Operator(Op::NegSin));
        assert_eq!(cast_gene(2.7_f64, 0.2), Token::Literal(2.7));
        // Half-integer genes sit at a bin center: every admissible offset
        // lands in the same open unit interval.
        for off in [-0.49, -0.25, 0.0, 0.25, 0.49] {
            assert_eq!(cast_gene(-2.5_f64, off), Token::Operator(Op::Sin));
            assert_eq!(cast_gene(-11.5_f64, off), Token::Operator(Op::Add));
        }
        // Integer genes straddle a boundary: the sign of the offset decides.
        assert_eq!(cast_gene(-12.0_f64, -0.25), Token::Operator(Op::Mul));
        assert_eq!(cast_gene(-12.0_f64, 0.25), Token::Operator(Op::Add));
    }

    #[test]
    fn cast_is_total_at_the_open_lower_bound() {
        // floor(-18.9 - 0.45) = -20 would address index 19; clamps to last.
        assert_eq!(cast_gene(-18.9_f64, -0.45), Token::Operator(Op::Trunc));
        assert_eq!(cast_gene(-18.9_f64, 0.45), Token::Operator(Op::Trunc));
    }

    #[test]
    fn negative_gene_can_cast_to_literal_with_nonnegative_magnitude() {
        let tok = cast_gene(-0.3_f64, 0.4);
        assert_eq!(tok, Token::Literal(0.3));
    }

    #[test]
    fn modal_cast_picks_most_likely_bin() {
        assert_eq!(modal_token(-0.3_f64), Token::Literal(0.3));
        assert_eq!(modal_token(-0.7_f64), Token::Operator(Op::Abs));
        assert_eq!(modal_token(3.0_f64), Token::Literal(3.0));
        assert_eq!(modal_token(-12.0_f64), Token::Operator(Op::Add));
    }

    #[test]
    fn sampled_cast_frequencies_follow_bin_overlap() {
        // Gene -0.3: u < 0.3 gives floor = -1 (operator 0), else literal.
        let mut rng = stream(11, StreamId::Evolution);
        let n = 100_000;
        let mut ops = 0_u32;
        for _ in 0..n {
            match sample_token(-0.3_f64, &mut rng) {
                Token::Operator(op) => {
                    assert_eq!(op, Op::Abs);
                    ops += 1;
                }
                Token::Literal(m) => assert_eq!(m, 0.3),
            }
        }
        let p = f64::from(ops) / f64::from(n);
        assert!((p - 0.8).abs() < 0.01, "operator frequency {p}, want ~0.8");
    }

    #[test]
    fn random_genomes_stay_in_gene_space() {
        let mut rng = stream(3, StreamId::Evolution);
        for _ in 0..500 {
            let g = Genome::<f64>::random(5, 10.0, &mut rng);
            assert_eq!(g.len(), 5);
            assert!(g.in_gene_space(10.0));
        }
    }

    #[test]
    fn clamp_respects_open_lower_bound() {
        assert_eq!(Genome::<f64>::clamp_gene(11.0, 10.0), 10.0);
        assert_eq!(Genome::<f64>::clamp_gene(3.0, 10.0), 3.0);
        let clamped = Genome::<f64>::clamp_gene(-25.0, 10.0);
        assert!(clamped > -19.0 && clamped < -18.999_999);
        assert_eq!(Genome::<f64>::clamp_gene(-19.0, 10.0), clamped);
    }

    #[test]
    fn genome_serializes_as_plain_array() {
        let g = Genome::new(vec![1.5_f64, -3.0]);
        let json = serde_json::to_string(&g).unwrap();
        assert_eq!(json, "[1.5,-3.0]");
        let back: Genome<f64> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, g);
    }
}
