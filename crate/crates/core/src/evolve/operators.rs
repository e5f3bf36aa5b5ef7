use rand::Rng;

use crate::grammar::Genotype;

/// Redraws each codon independently with probability `gene_prob`.
pub fn uniform_mutation<R: Rng + ?Sized>(g: &Genotype, gene_prob: f64, rng: &mut R) -> Genotype {
    let max = g.codon_max();
    let codons = g
        .codons()
        .iter()
        .map(|&c| {
            if rng.random::<f64>() < gene_prob {
                rng.random_range(0..max)
            } else {
                c
            }
        })
        .collect();
    g.with_codons(codons)
}

/// Swaps the suffixes of `a` and `b` starting at `cut`.
///
/// Panics on a length mismatch or a cut outside `[1, len - 1]`.
pub fn crossover_at(a: &Genotype, b: &Genotype, cut: usize) -> (Genotype, Genotype) {
    assert_eq!(a.len(), b.len(), "crossover needs equal lengths");
    assert!(cut >= 1 && cut < a.len(), "cut point {cut} out of range");
    let (ca, cb) = (a.codons(), b.codons());
    let first = ca[..cut].iter().chain(&cb[cut..]).copied().collect();
    let second = cb[..cut].iter().chain(&ca[cut..]).copied().collect();
    (a.with_codons(first), b.with_codons(second))
}

/// One-point crossover with the cut drawn uniformly from `[1, len - 1]`.
pub fn one_point_crossover<R: Rng + ?Sized>(
    a: &Genotype,
    b: &Genotype,
    rng: &mut R,
) -> (Genotype, Genotype) {
    assert_eq!(a.len(), b.len(), "crossover needs equal lengths");
    assert!(a.len() >= 2, "crossover needs at least two codons");
    let cut = rng.random_range(1..a.len());
    crossover_at(a, b, cut)
}

/// Draws `size` indices with replacement and returns the fittest; ties go
/// to the earliest draw.
pub fn tournament_select<R: Rng + ?Sized>(fitnesses: &[f64], size: usize, rng: &mut R) -> usize {
    assert!(!fitnesses.is_empty(), "empty population");
    assert!(size >= 1, "tournament size must be positive");
    let mut best = rng.random_range(0..fitnesses.len());
    for _ in 1..size {
        let i = rng.random_range(0..fitnesses.len());
        if fitnesses[i] > fitnesses[best] {
            best = i;
        }
    }
    best
}
