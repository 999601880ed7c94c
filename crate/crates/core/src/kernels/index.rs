//! Element bookkeeping: which `ρ_{n,n'}` a kernel set reconstructs and how
//! level pairs group by transition frequency.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::oscillators::OscillatorModel;

/// Ordered list of reconstructed elements `(n, n')`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ElementIndexMap {
    pairs: Vec<(usize, usize)>,
    n_max: usize,
    lookup: HashMap<(usize, usize), usize>,
}

impl ElementIndexMap {
    pub fn new(pairs: Vec<(usize, usize)>, n_max: usize) -> Result<Self> {
        let mut lookup = HashMap::with_capacity(pairs.len());
        for (i, &(n, m)) in pairs.iter().enumerate() {
            if n > n_max || m > n_max {
                return Err(Error::LevelOutOfRange { n: n.max(m), max: n_max });
            }
            if lookup.insert((n, m), i).is_some() {
                return Err(Error::InvalidParameter(format!("duplicate element ({n}, {m})")));
            }
        }
        Ok(Self { pairs, n_max, lookup })
    }

    /// All `(n_max + 1)²` ordered pairs, row-major.
    pub fn full(n_max: usize) -> Self {
        let d = n_max + 1;
        let pairs = (0..d).flat_map(|n| (0..d).map(move |m| (n, m))).collect();
        Self::new(pairs, n_max).expect("full index map is valid")
    }

    /// Pairs with `n ≤ n'`; the remaining elements follow by conjugation.
    pub fn hermitian(n_max: usize) -> Self {
        let d = n_max + 1;
        let pairs = (0..d).flat_map(|n| (n..d).map(move |m| (n, m))).collect();
        Self::new(pairs, n_max).expect("triangular index map is valid")
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn position(&self, n: usize, m: usize) -> Option<usize> {
        self.lookup.get(&(n, m)).copied()
    }

    /// Row-major offset of each pair in the vectorized `(n_max+1)²` matrix.
    pub fn flat_offsets(&self) -> Vec<usize> {
        let d = self.n_max + 1;
        self.pairs.iter().map(|&(n, m)| n * d + m).collect()
    }
}

/// Level pairs sharing one transition frequency `ω_n - ω_{n'}`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyClass {
    pub omega: f64,
    /// Sorted by the second index.
    pub members: Vec<(usize, usize)>,
}

impl FrequencyClass {
    /// The harmonic class `{(n + k, n)}` for `n + k ≤ n_max`.
    pub fn harmonic(model: &OscillatorModel, n_max: usize, k: usize) -> Result<Self> {
        if k > n_max {
            return Err(Error::InvalidParameter(format!("class offset k = {k} exceeds n_max = {n_max}")));
        }
        let members: Vec<_> = (0..=n_max - k).map(|n| (n + k, n)).collect();
        let omega = model.transition_frequency(k, 0)?;
        Ok(Self { omega, members })
    }

    pub fn is_diagonal(&self) -> bool {
        self.members.iter().all(|&(n, m)| n == m)
    }
}

/// Partitions all ordered pairs `(n, n')`, `n, n' ≤ n_max`, into classes of
/// equal transition frequency. `tol` is relative to the largest level energy.
/// Classes come back sorted by frequency.
pub fn frequency_classes(model: &OscillatorModel, n_max: usize, tol: f64) -> Result<Vec<FrequencyClass>> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("degeneracy tolerance must be positive, got {tol}")));
    }
    let energies = model.spectrum(n_max)?;
    let scale = energies.iter().fold(0.0f64, |m, e| m.max(e.abs()));
    let abs_tol = tol * scale.max(f64::MIN_POSITIVE);
    let d = n_max + 1;
    let mut pairs: Vec<(f64, (usize, usize))> = (0..d)
        .flat_map(|n| (0..d).map(move |m| (n, m)))
        .map(|(n, m)| (energies[n] - energies[m], (n, m)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut classes: Vec<FrequencyClass> = Vec::new();
    let mut anchor = f64::NAN;
    for (w, pair) in pairs {
        match classes.last_mut() {
            Some(c) if (w - anchor).abs() <= abs_tol => c.members.push(pair),
            _ => {
                anchor = w;
                classes.push(FrequencyClass { omega: w, members: vec![pair] });
            }
        }
    }
    for c in &mut classes {
        c.members.sort_by_key(|&(n, m)| (m, n));
        if c.is_diagonal() {
            c.omega = 0.0;
        }
    }
    Ok(classes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn harmonic_classes_are_diagonals() {
        let m = OscillatorModel::harmonic(1.0).unwrap();
        let classes = frequency_classes(&m, 3, 1e-9).unwrap();
        assert_eq!(classes.len(), 7);
        let two = classes.iter().find(|c| (c.omega - 2.0).abs() < 1e-12).unwrap();
        assert_eq!(two.members, vec![(2, 0), (3, 1)]);
        assert_eq!(FrequencyClass::harmonic(&m, 3, 2).unwrap().members, two.members);
    }

    #[test]
    fn morse_diagonal_class_and_singletons() {
        let m = OscillatorModel::morse(0.279).unwrap();
        let classes = frequency_classes(&m, 12, 1e-9).unwrap();
        let zero = classes.iter().find(|c| c.omega == 0.0).unwrap();
        assert_eq!(zero.members.len(), 13);
        let first = classes.iter().find(|c| c.members.contains(&(1, 0))).unwrap();
        assert_eq!(first.members, vec![(1, 0)]);
    }

    #[test]
    fn index_map_rejects_duplicates_and_range() {
        assert!(ElementIndexMap::new(vec![(0, 1), (0, 1)], 2).is_err());
        assert!(ElementIndexMap::new(vec![(0, 3)], 2).is_err());
        let h = ElementIndexMap::hermitian(3);
        assert_eq!(h.len(), 10);
        assert!(h.pairs().iter().all(|&(n, m)| n <= m));
        assert_eq!(ElementIndexMap::full(2).flat_offsets(), (0..9).collect::<Vec<_>>());
    }

    proptest! {
        #[test]
        fn classes_partition_all_pairs(a in 0.05f64..0.4, n_max in 0usize..8) {
            let m = OscillatorModel::morse(a).unwrap();
            let n_max = n_max.min(m.max_bound_level().unwrap() - 1);
            let classes = frequency_classes(&m, n_max, 1e-9).unwrap();
            let mut seen: Vec<_> = classes.iter().flat_map(|c| c.members.clone()).collect();
            seen.sort();
            let d = n_max + 1;
            prop_assert_eq!(seen.len(), d * d);
            seen.dedup();
            prop_assert_eq!(seen.len(), d * d);
            let scale = m.eigenfrequency(n_max).unwrap();
            for c in &classes {
                for &(n, k) in &c.members {
                    let w = m.transition_frequency(n, k).unwrap();
                    prop_assert!((w - c.omega).abs() <= 1e-9 * scale);
                }
            }
        }
    }
}
