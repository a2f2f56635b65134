//! Weight distribution summaries and per-node sums.

use serde::{Deserialize, Serialize};

use crate::dynamics::GeneCircuit;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    /// Bin index; the bin is centered on `index * bin_width`.
    pub index: i64,
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightHistogram {
    pub bin_width: f64,
    /// Contiguous bins over a range symmetric about zero.
    pub bins: Vec<HistogramBin>,
    /// Negative entries over nonzero entries (0 when every entry is zero).
    pub negative_fraction: f64,
    pub mean: f64,
    pub total: usize,
}

impl WeightHistogram {
    pub fn count_at(&self, index: i64) -> usize {
        self.bins.iter().find(|b| b.index == index).map_or(0, |b| b.count)
    }
}

/// Bin index of a weight: nearest multiple of `bin_width`, halves rounded
/// away from zero so that `w` and `-w` land in mirrored bins.
pub fn bin_index(w: f64, bin_width: f64) -> i64 {
    (w / bin_width).round() as i64
}

pub fn bins_from_counts(counts: &std::collections::BTreeMap<i64, usize>, bin_width: f64) -> Vec<HistogramBin> {
    let reach = counts.keys().map(|k| k.abs()).max().unwrap_or(0);
    (-reach..=reach)
        .map(|index| HistogramBin {
            index,
            lo: (index as f64 - 0.5) * bin_width,
            hi: (index as f64 + 0.5) * bin_width,
            count: counts.get(&index).copied().unwrap_or(0),
        })
        .collect()
}

pub fn weight_sign_histogram(circuit: &GeneCircuit, bin_width: f64) -> WeightHistogram {
    assert!(bin_width > 0.0, "bin width must be positive");
    let mut counts = std::collections::BTreeMap::new();
    for &w in circuit.weights() {
        *counts.entry(bin_index(w, bin_width)).or_insert(0usize) += 1;
    }
    let negative = circuit.weights().iter().filter(|&&w| w < 0.0).count();
    let nonzero = circuit.weights().iter().filter(|&&w| w != 0.0).count();
    let total = circuit.weights().len();
    WeightHistogram {
        bin_width,
        bins: bins_from_counts(&counts, bin_width),
        negative_fraction: if nonzero == 0 {
            0.0
        } else {
            negative as f64 / nonzero as f64
        },
        mean: circuit.signed_sum() / total as f64,
        total,
    }
}

/// Incoming absolute weight per node: `sum_j |W_ij|`.
pub fn node_strength(circuit: &GeneCircuit) -> Vec<f64> {
    (0..circuit.n())
        .map(|i| circuit.row(i).iter().map(|w| w.abs()).sum())
        .collect()
}

/// Incoming signed weight per node: `sum_j W_ij`.
pub fn feedback_sum(circuit: &GeneCircuit) -> Vec<f64> {
    (0..circuit.n()).map(|i| circuit.row(i).iter().sum()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_circuit_histogram() {
        let h = weight_sign_histogram(&GeneCircuit::zeros(3), 0.25);
        assert_eq!(h.bins.len(), 1);
        assert_eq!(h.bins[0].count, 9);
        assert!(h.bins[0].lo < 0.0 && h.bins[0].hi > 0.0);
        assert_eq!(h.negative_fraction, 0.0);
        assert_eq!(h.mean, 0.0);
    }

    #[test]
    fn node_sums() {
        let z = GeneCircuit::zeros(3);
        assert_eq!(node_strength(&z), vec![0.0; 3]);
        assert_eq!(feedback_sum(&z), vec![0.0; 3]);
        let c = GeneCircuit::from_rows(vec![vec![0.0, -2.0], vec![0.0, 0.0]]).unwrap();
        assert_eq!(node_strength(&c)[0], 2.0);
        assert_eq!(feedback_sum(&c)[0], -2.0);
    }

    fn circuit() -> impl Strategy<Value = GeneCircuit> {
        (1usize..7).prop_flat_map(|n| {
            prop::collection::vec(-5.0f64..5.0, n * n).prop_map(move |w| GeneCircuit::from_flat(n, w).unwrap())
        })
    }

    proptest! {
        #[test]
        fn histogram_conserves_and_mirrors(c in circuit(), width in 0.05f64..2.0) {
            let h = weight_sign_histogram(&c, width);
            let m = weight_sign_histogram(&c.scaled(-1.0), width);
            let n2 = c.n() * c.n();
            prop_assert_eq!(h.bins.iter().map(|b| b.count).sum::<usize>(), n2);
            prop_assert_eq!(h.bins.len(), m.bins.len());
            for b in &h.bins {
                prop_assert_eq!(b.count, m.count_at(-b.index));
            }
            if c.weights().iter().all(|&w| w != 0.0) {
                prop_assert!((h.negative_fraction + m.negative_fraction - 1.0).abs() < 1e-12);
            }
        }

        #[test]
        fn strength_bounds_feedback(c in circuit()) {
            for (s, f) in node_strength(&c).iter().zip(feedback_sum(&c)) {
                prop_assert!(*s >= f.abs() - 1e-12);
            }
        }
    }
}
