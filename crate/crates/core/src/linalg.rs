//! Gaussian elimination over F₂ on bit-packed rows.

/// A row of bits packed into 64-bit words.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitRow {
    words: Vec<u64>,
}

impl BitRow {
    pub fn zeros(len: usize) -> Self {
        BitRow {
            words: vec![0; len.div_ceil(64)],
        }
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize) {
        self.words[i / 64] |= 1 << (i % 64);
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        self.words[i / 64] ^= 1 << (i % 64);
    }

    #[inline]
    fn xor_assign(&mut self, other: &BitRow) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let tz = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(wi * 64 + tz)
            })
        })
    }
}

/// Subsets of `rows` (indices) whose XOR over the first `columns` bits is
/// zero. Each returned subset comes from a distinct non-pivot row, so the
/// subsets are linearly independent.
pub fn null_space(rows: &[BitRow], columns: usize) -> Vec<Vec<usize>> {
    let n = rows.len();
    // data bits in [0, columns), history bits in [columns, columns + n)
    let mut work: Vec<BitRow> = rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut w = BitRow::zeros(columns + n);
            for c in r.ones().take_while(|&c| c < columns) {
                w.set(c);
            }
            w.set(columns + i);
            w
        })
        .collect();
    let mut used = vec![false; n];
    for col in 0..columns {
        let Some(pivot) = (0..n).find(|&r| !used[r] && work[r].get(col)) else {
            continue;
        };
        used[pivot] = true;
        let pivot_row = work[pivot].clone();
        for (r, row) in work.iter_mut().enumerate() {
            if !used[r] && row.get(col) {
                row.xor_assign(&pivot_row);
            }
        }
    }
    work.iter()
        .zip(&used)
        .filter(|(_, &u)| !u)
        .map(|(row, _)| row.ones().filter(|&b| b >= columns).map(|b| b - columns).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn row(bits: &[u8]) -> BitRow {
        let mut r = BitRow::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b == 1 {
                r.set(i);
            }
        }
        r
    }

    fn xor_is_zero(rows: &[Vec<u8>], subset: &[usize], cols: usize) -> bool {
        (0..cols).all(|c| subset.iter().map(|&i| rows[i][c]).sum::<u8>() % 2 == 0)
    }

    /// Every nonempty subset whose XOR is zero.
    fn brute_force(rows: &[Vec<u8>], cols: usize) -> Vec<Vec<usize>> {
        let n = rows.len();
        (1u32..1 << n)
            .map(|mask| (0..n).filter(|&i| mask >> i & 1 == 1).collect::<Vec<_>>())
            .filter(|s| xor_is_zero(rows, s, cols))
            .collect()
    }

    #[test]
    fn three_vectors_sum_to_zero() {
        let rows = vec![vec![1, 0, 1], vec![0, 1, 1], vec![1, 1, 0]];
        let oracle = brute_force(&rows, 3);
        assert_eq!(oracle, vec![vec![0, 1, 2]]);
        let bits: Vec<BitRow> = rows.iter().map(|r| row(r)).collect();
        assert_eq!(null_space(&bits, 3), vec![vec![0, 1, 2]]);
    }

    #[test]
    fn zero_row_and_duplicate() {
        let bits = vec![row(&[1, 1, 0]), row(&[0, 0, 0]), row(&[1, 1, 0])];
        let deps = null_space(&bits, 3);
        assert!(deps.contains(&vec![1]));
        assert!(deps.contains(&vec![0, 2]));
    }

    #[test]
    fn bitrow_ones() {
        let mut r = BitRow::zeros(200);
        for i in [0, 63, 64, 130, 199] {
            r.set(i);
        }
        assert_eq!(r.ones().collect::<Vec<_>>(), vec![0, 63, 64, 130, 199]);
        r.flip(63);
        assert!(!r.get(63));
        assert!(!r.is_zero());
    }

    proptest! {
        #[test]
        fn matches_subset_oracle(
            n in 1usize..=12,
            cols in 1usize..=10,
            seed in proptest::collection::vec(0u8..2, 120),
        ) {
            let rows: Vec<Vec<u8>> = (0..n).map(|i| seed[i * 10..i * 10 + cols].to_vec()).collect();
            let bits: Vec<BitRow> = rows.iter().map(|r| row(r)).collect();
            let deps = null_space(&bits, cols);
            for d in &deps {
                prop_assert!(!d.is_empty());
                prop_assert!(xor_is_zero(&rows, d, cols));
            }
            let oracle = brute_force(&rows, cols);
            // The oracle's subsets form a space of dimension n - rank; the
            // eliminator returns a basis of it.
            prop_assert_eq!(deps.is_empty(), oracle.is_empty());
            prop_assert_eq!(1usize << deps.len(), oracle.len() + 1);
        }
    }
}
