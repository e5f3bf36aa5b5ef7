use rand::Rng;
use serde::{Deserialize, Serialize};

/// Fixed-length list of integer codons, each in `[0, codon_max)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Genotype {
    codons: Vec<u32>,
    codon_max: u32,
}

impl Genotype {
    /// Returns `None` when `codon_max` is zero or a codon is out of range.
    pub fn new(codons: Vec<u32>, codon_max: u32) -> Option<Self> {
        (codon_max > 0 && codons.iter().all(|&c| c < codon_max))
            .then_some(Genotype { codons, codon_max })
    }

    /// Codons drawn uniformly from `[0, codon_max)`.
    pub fn random<R: Rng + ?Sized>(len: usize, codon_max: u32, rng: &mut R) -> Self {
        assert!(codon_max > 0, "codon_max must be positive");
        let codons = (0..len).map(|_| rng.random_range(0..codon_max)).collect();
        Genotype { codons, codon_max }
    }

    pub fn codons(&self) -> &[u32] {
        &self.codons
    }

    pub fn codon_max(&self) -> u32 {
        self.codon_max
    }

    pub fn len(&self) -> usize {
        self.codons.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codons.is_empty()
    }

    /// Rebuilds with new codons of the same length; used by the variation
    /// operators, which never change the length.
    pub(crate) fn with_codons(&self, codons: Vec<u32>) -> Self {
        debug_assert_eq!(codons.len(), self.codons.len());
        debug_assert!(codons.iter().all(|&c| c < self.codon_max));
        Genotype {
            codons,
            codon_max: self.codon_max,
        }
    }
}
