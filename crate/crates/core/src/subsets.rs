//! Subsets of the user set as 64-bit masks, enumerated in colexicographic
//! order.
//!
//! Users are 0-based internally: user `k` is bit `k`. Displayed subsets use
//! the 1-based user numbers.

use std::fmt;

use serde::Serialize;

pub const MAX_USERS: usize = 64;

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize)]
pub struct SubsetMask(pub u64);

impl SubsetMask {
    pub const EMPTY: SubsetMask = SubsetMask(0);

    pub fn from_members<I: IntoIterator<Item = usize>>(members: I) -> Self {
        SubsetMask(members.into_iter().fold(0, |m, u| m | (1u64 << u)))
    }

    /// `{0, .., users - 1}`.
    pub fn full(users: usize) -> Self {
        assert!(users <= MAX_USERS);
        if users == MAX_USERS {
            SubsetMask(u64::MAX)
        } else {
            SubsetMask((1u64 << users) - 1)
        }
    }

    pub fn contains(self, user: usize) -> bool {
        (self.0 >> user) & 1 == 1
    }

    pub fn with(self, user: usize) -> Self {
        SubsetMask(self.0 | (1u64 << user))
    }

    pub fn without(self, user: usize) -> Self {
        SubsetMask(self.0 & !(1u64 << user))
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn members(self) -> impl Iterator<Item = usize> {
        let mut rest = self.0;
        std::iter::from_fn(move || {
            if rest == 0 {
                None
            } else {
                let b = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(b)
            }
        })
    }

    /// Position of this subset among all subsets of the same size in
    /// colexicographic order (combinatorial number system).
    pub fn colex_rank(self) -> usize {
        self.members()
            .enumerate()
            .map(|(i, c)| binomial(c, i + 1) as usize)
            .sum()
    }
}

impl fmt::Debug for SubsetMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for SubsetMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, u) in self.members().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", u + 1)?;
        }
        write!(f, "}}")
    }
}

/// `C(n, k)`, exact for every value used by the schemes (saturates on overflow).
pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

/// All `size`-subsets of `{0..users}` in colexicographic order, which for
/// masks is plain increasing numeric order.
pub fn k_subsets(users: usize, size: usize) -> impl Iterator<Item = SubsetMask> {
    assert!(users <= MAX_USERS);
    let limit: u128 = 1u128 << users;
    let mut next: Option<u128> = if size > users {
        None
    } else {
        Some((1u128 << size) - 1)
    };
    std::iter::from_fn(move || {
        let cur = next?;
        next = if cur == 0 {
            None
        } else {
            // Gosper's hack
            let c = cur & cur.wrapping_neg();
            let r = cur + c;
            let n = (((r ^ cur) >> 2) / c) | r;
            (n < limit).then_some(n)
        };
        Some(SubsetMask(cur as u64))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), 10);
        assert_eq!(binomial(5, 0), 1);
        assert_eq!(binomial(5, 5), 1);
        assert_eq!(binomial(3, 4), 0);
        assert_eq!(binomial(60, 30), 118264581564861424);
    }

    #[test]
    fn colex_order_of_pairs() {
        let got: Vec<String> = k_subsets(4, 2).map(|s| s.to_string()).collect();
        assert_eq!(got, ["{1,2}", "{1,3}", "{2,3}", "{1,4}", "{2,4}", "{3,4}"]);
    }

    #[test]
    fn edge_sizes() {
        assert_eq!(k_subsets(3, 0).collect::<Vec<_>>(), vec![SubsetMask::EMPTY]);
        assert_eq!(k_subsets(3, 3).collect::<Vec<_>>(), vec![SubsetMask(0b111)]);
        assert_eq!(k_subsets(3, 4).count(), 0);
        assert_eq!(k_subsets(64, 64).count(), 1);
    }

    #[test]
    fn counts_and_ranks_agree() {
        for n in 0..=10 {
            for k in 0..=n {
                let subsets: Vec<_> = k_subsets(n, k).collect();
                assert_eq!(subsets.len() as u64, binomial(n, k));
                for (i, s) in subsets.iter().enumerate() {
                    assert_eq!(s.len(), k);
                    assert_eq!(s.colex_rank(), i);
                }
            }
        }
    }

    proptest! {
        #[test]
        fn members_round_trip(mask in any::<u64>()) {
            let s = SubsetMask(mask);
            prop_assert_eq!(SubsetMask::from_members(s.members()), s);
            prop_assert_eq!(s.members().count(), s.len());
        }
    }
}
