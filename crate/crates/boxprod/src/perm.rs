//! Permutations of a finite integer domain `{0, …, degree−1}`.

use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

/// Error raised when constructing a permutation from untrusted data.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum PermError {
    #[error("point {point} out of range for degree {degree}")]
    PointOutOfRange { point: usize, degree: usize },
    #[error("point {0} appears more than once")]
    RepeatedPoint(usize),
    #[error("image table is not a bijection")]
    NotBijective,
}

/// A permutation stored by its image table: position `i` holds the image of `i`.
///
/// Permutations act from the left: `compose(p, q)` maps `x` to `p(q(x))`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Perm {
    images: Vec<usize>,
}

impl Perm {
    /// The identity permutation on `degree` points.
    pub fn identity(degree: usize) -> Self {
        Perm {
            images: (0..degree).collect(),
        }
    }

    /// Builds a permutation from an image table, checking bijectivity.
    pub fn from_images(images: Vec<usize>) -> Result<Self, PermError> {
        let degree = images.len();
        let mut seen = vec![false; degree];
        for &y in &images {
            if y >= degree {
                return Err(PermError::PointOutOfRange { point: y, degree });
            }
            if seen[y] {
                return Err(PermError::NotBijective);
            }
            seen[y] = true;
        }
        Ok(Perm { images })
    }

    /// Builds a permutation of `degree` points from 0-based disjoint cycles.
    pub fn from_cycles(degree: usize, cycles: &[Vec<usize>]) -> Result<Self, PermError> {
        let mut images: Vec<usize> = (0..degree).collect();
        let mut touched = vec![false; degree];
        for cycle in cycles {
            for &x in cycle {
                if x >= degree {
                    return Err(PermError::PointOutOfRange { point: x, degree });
                }
                if touched[x] {
                    return Err(PermError::RepeatedPoint(x));
                }
                touched[x] = true;
            }
            if cycle.len() < 2 {
                continue;
            }
            for i in 0..cycle.len() {
                images[cycle[i]] = cycle[(i + 1) % cycle.len()];
            }
        }
        Ok(Perm { images })
    }

    pub fn degree(&self) -> usize {
        self.images.len()
    }

    /// The image of a point. Panics if `x` is out of range.
    #[inline]
    pub fn apply(&self, x: usize) -> usize {
        self.images[x]
    }

    pub fn images(&self) -> &[usize] {
        &self.images
    }

    /// `self ∘ other`: maps `x` to `self(other(x))`. Degrees must match.
    pub fn compose(&self, other: &Perm) -> Perm {
        assert_eq!(
            self.degree(),
            other.degree(),
            "compose: degree mismatch ({} vs {})",
            self.degree(),
            other.degree()
        );
        Perm {
            images: other.images.iter().map(|&y| self.images[y]).collect(),
        }
    }

    pub fn inverse(&self) -> Perm {
        let mut images = vec![0; self.degree()];
        for (x, &y) in self.images.iter().enumerate() {
            images[y] = x;
        }
        Perm { images }
    }

    pub fn is_identity(&self) -> bool {
        self.images.iter().enumerate().all(|(x, &y)| x == y)
    }

    /// The smallest moved point, if any.
    pub fn first_moved(&self) -> Option<usize> {
        self.images.iter().enumerate().find(|(x, &y)| *x != y).map(|(x, _)| x)
    }

    /// Nontrivial cycles in canonical form: each cycle starts at its smallest
    /// point, cycles sorted by their smallest point.
    pub fn cycles(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.degree()];
        let mut out = Vec::new();
        for start in 0..self.degree() {
            if seen[start] || self.images[start] == start {
                seen[start] = true;
                continue;
            }
            let mut cycle = vec![start];
            seen[start] = true;
            let mut x = self.images[start];
            while x != start {
                seen[x] = true;
                cycle.push(x);
                x = self.images[x];
            }
            out.push(cycle);
        }
        out
    }
}

/// All permutations of `0..degree` in lexicographic order of image tables.
/// Intended for small degrees only.
pub(crate) fn all_perms(degree: usize) -> Vec<Perm> {
    assert!(degree <= 8, "all_perms: degree too large");
    let mut out = Vec::new();
    let mut images: Vec<usize> = (0..degree).collect();
    loop {
        out.push(Perm { images: images.clone() });
        // next lexicographic permutation
        let Some(i) = (0..images.len().saturating_sub(1)).rev().find(|&i| images[i] < images[i + 1])
        else {
            break;
        };
        let j = (i + 1..images.len()).rev().find(|&j| images[j] > images[i]).unwrap();
        images.swap(i, j);
        images[i + 1..].reverse();
    }
    out
}

impl fmt::Display for Perm {
    /// Disjoint-cycle notation with 1-based points, `()` for the identity.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cycles = self.cycles();
        if cycles.is_empty() {
            return write!(f, "()");
        }
        for cycle in cycles {
            write!(f, "(")?;
            for (i, x) in cycle.iter().enumerate() {
                if i > 0 {
                    write!(f, " ")?;
                }
                write!(f, "{}", x + 1)?;
            }
            write!(f, ")")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Perm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Perm{:?}", self.images)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transposition_applies() {
        let p = Perm::from_cycles(2, &[vec![0, 1]]).unwrap();
        assert_eq!(p.apply(0), 1);
        assert_eq!(p.apply(1), 0);
    }

    #[test]
    fn inverse_cancels() {
        let p = Perm::from_cycles(5, &[vec![0, 2, 4], vec![1, 3]]).unwrap();
        assert!(p.compose(&p.inverse()).is_identity());
        assert!(p.inverse().compose(&p).is_identity());
    }

    #[test]
    fn compose_matches_sym3_multiplication_table() {
        // Oracle: exhaustive check of p∘q against pointwise evaluation on Sym(3).
        let elems = all_perms(3);
        assert_eq!(elems.len(), 6);
        for p in &elems {
            for q in &elems {
                let r = p.compose(q);
                for x in 0..3 {
                    assert_eq!(r.apply(x), p.apply(q.apply(x)));
                }
            }
        }
        let three_cycle = Perm::from_cycles(3, &[vec![0, 1, 2]]).unwrap();
        let swap = Perm::from_cycles(3, &[vec![0, 1]]).unwrap();
        let product = three_cycle.compose(&swap);
        // (0 1 2)∘(0 1): 0→1→2, 1→0→1, 2→2→0
        assert_eq!(product.images(), &[2, 1, 0]);
    }

    #[test]
    fn rejects_non_bijections() {
        assert_eq!(Perm::from_images(vec![0, 0]), Err(PermError::NotBijective));
        assert_eq!(
            Perm::from_images(vec![0, 2]),
            Err(PermError::PointOutOfRange { point: 2, degree: 2 })
        );
        assert_eq!(
            Perm::from_cycles(3, &[vec![0, 1], vec![1, 2]]),
            Err(PermError::RepeatedPoint(1))
        );
    }

    #[test]
    fn cycle_notation_round_trip() {
        let p = Perm::from_cycles(6, &[vec![0, 3], vec![1, 4, 5]]).unwrap();
        assert_eq!(p.cycles(), vec![vec![0, 3], vec![1, 4, 5]]);
        assert_eq!(p.to_string(), "(1 4)(2 5 6)");
        assert_eq!(Perm::identity(4).to_string(), "()");
    }

    #[test]
    fn all_perms_is_complete_and_ordered() {
        let ps = all_perms(4);
        assert_eq!(ps.len(), 24);
        let mut sorted = ps.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted, ps);
    }
}
