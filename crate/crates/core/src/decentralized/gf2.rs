//! Incremental Gaussian elimination over GF(2).
//!
//! Rows are packed `u64` words of a fixed width. Each basis row is stored
//! under its pivot, the lowest set bit, and every other set bit of a stored
//! row lies above its pivot. Reduction therefore only ever moves the leading
//! bit upward, and a full-rank basis is solved by back-substitution in
//! descending pivot order.

#[derive(Debug, Clone)]
pub struct Gf2Basis {
    width: usize,
    words: usize,
    rows: Vec<u64>,
    rhs: Vec<bool>,
    present: Vec<bool>,
    rank: usize,
}

impl Gf2Basis {
    pub fn new(width: usize) -> Self {
        let words = width.div_ceil(64);
        Self {
            width,
            words,
            rows: vec![0; width * words],
            rhs: vec![false; width],
            present: vec![false; width],
            rank: 0,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Reduce `row` against the basis and keep it if it is independent.
    /// Returns whether the rank grew. `row` is clobbered.
    pub fn insert(&mut self, row: &mut [u64], rhs: bool) -> bool {
        assert_eq!(row.len(), self.words);
        // fixed widths let the XOR unroll; 8 words is the default block
        match self.words {
            1 => self.insert_fixed::<1>(row, rhs),
            2 => self.insert_fixed::<2>(row, rhs),
            4 => self.insert_fixed::<4>(row, rhs),
            8 => self.insert_fixed::<8>(row, rhs),
            16 => self.insert_fixed::<16>(row, rhs),
            _ => self.insert_any(row, rhs),
        }
    }

    fn insert_fixed<const W: usize>(&mut self, row: &mut [u64], mut rhs: bool) -> bool {
        let row: &mut [u64; W] = row.try_into().expect("row width");
        let mut w = 0;
        loop {
            while w < W && row[w] == 0 {
                w += 1;
            }
            if w == W {
                return false;
            }
            let p = w * 64 + row[w].trailing_zeros() as usize;
            let stored: &mut [u64; W] = (&mut self.rows[p * W..(p + 1) * W])
                .try_into()
                .expect("row width");
            if !self.present[p] {
                *stored = *row;
                self.rhs[p] = rhs;
                self.present[p] = true;
                self.rank += 1;
                return true;
            }
            // bits below p are zero in both rows
            for i in 0..W {
                row[i] ^= stored[i];
            }
            rhs ^= self.rhs[p];
        }
    }

    fn insert_any(&mut self, row: &mut [u64], mut rhs: bool) -> bool {
        let words = self.words;
        let mut w = 0;
        loop {
            while w < words && row[w] == 0 {
                w += 1;
            }
            if w == words {
                return false;
            }
            let p = w * 64 + row[w].trailing_zeros() as usize;
            let stored = &mut self.rows[p * words..(p + 1) * words];
            if !self.present[p] {
                stored.copy_from_slice(row);
                self.rhs[p] = rhs;
                self.present[p] = true;
                self.rank += 1;
                return true;
            }
            for (a, b) in row.iter_mut().zip(stored.iter()) {
                *a ^= *b;
            }
            rhs ^= self.rhs[p];
        }
    }

    /// Values of the variables in `positions`; `None` if any is not a pivot.
    /// Variables outside the basis are taken as zero, so the answer is only
    /// meaningful when every bit that occurs in a stored row is a pivot.
    pub fn solve(&self, positions: &[usize]) -> Option<Vec<bool>> {
        let mut x = vec![false; self.width];
        for p in (0..self.width).rev() {
            if !self.present[p] {
                continue;
            }
            let row = &self.rows[p * self.words..(p + 1) * self.words];
            let mut v = self.rhs[p];
            for (wi, &word) in row.iter().enumerate().skip(p / 64) {
                let mut bits = word;
                if wi == p / 64 {
                    bits &= u64::MAX.checked_shl(p as u32 % 64 + 1).unwrap_or(0);
                }
                while bits != 0 {
                    let j = wi * 64 + bits.trailing_zeros() as usize;
                    v ^= x[j];
                    bits &= bits - 1;
                }
            }
            x[p] = v;
        }
        positions
            .iter()
            .map(|&p| self.present[p].then_some(x[p]))
            .collect()
    }
}
