//! Hermite normal form of full-rank sublattices of `ℤ^k`.
//!
//! A lattice is stored by its HNF basis in column form: basis vector `j` has
//! zero coordinates above position `j`, a positive pivot at `j`, and every
//! coordinate `i > j` reduced into `[0, pivot_i)`. The basis is unique per
//! lattice, so equality of bases is equality of lattices, and reducing a
//! vector against it gives a canonical coset representative.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Hnf {
    columns: Vec<Vec<BigInt>>,
}

impl fmt::Debug for Hnf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Hnf{}", self)
    }
}

impl fmt::Display for Hnf {
    /// Row-major rendering of the basis matrix (basis vectors are columns).
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<String> = self
            .rows()
            .iter()
            .map(|r| format!("[{}]", r.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")))
            .collect();
        write!(f, "[{}]", rows.join(","))
    }
}

impl Hnf {
    /// The whole lattice `ℤ^k`.
    pub fn identity(rank: usize) -> Self {
        let columns = (0..rank)
            .map(|j| (0..rank).map(|i| if i == j { BigInt::one() } else { BigInt::zero() }).collect())
            .collect();
        Hnf { columns }
    }

    /// `m·ℤ^k` for a positive scalar `m`.
    pub fn scalar(rank: usize, m: &BigInt) -> Result<Self> {
        if !m.is_positive() {
            return Err(Error::InvalidSubgroup(format!("scalar lattice needs a positive factor, got {m}")));
        }
        let columns = (0..rank)
            .map(|j| (0..rank).map(|i| if i == j { m.clone() } else { BigInt::zero() }).collect())
            .collect();
        Ok(Hnf { columns })
    }

    /// HNF of the lattice spanned by `generators`; fails unless they span a
    /// full-rank (finite-index) sublattice.
    pub fn from_generators(rank: usize, generators: &[Vec<BigInt>]) -> Result<Self> {
        if generators.iter().any(|g| g.len() != rank) {
            return Err(Error::InvalidSubgroup(format!("generator of wrong length for rank {rank}")));
        }
        let mut pool: Vec<Vec<BigInt>> =
            generators.iter().filter(|g| g.iter().any(|x| !x.is_zero())).cloned().collect();
        let mut columns = Vec::with_capacity(rank);
        for i in 0..rank {
            // Euclid on coordinate i across the pool until one vector carries it.
            loop {
                let mut active: Vec<usize> = (0..pool.len()).filter(|&t| !pool[t][i].is_zero()).collect();
                if active.len() <= 1 {
                    break;
                }
                active.sort_by(|&s, &t| pool[s][i].abs().cmp(&pool[t][i].abs()));
                let pivot = pool[active[0]].clone();
                for &t in &active[1..] {
                    let q = pool[t][i].div_floor(&pivot[i]);
                    for (x, p) in pool[t].iter_mut().zip(&pivot) {
                        *x -= &q * p;
                    }
                }
            }
            let Some(pos) = pool.iter().position(|v| !v[i].is_zero()) else {
                return Err(Error::InvalidSubgroup(
                    "generators do not span a full-rank sublattice (infinite index)".into(),
                ));
            };
            let mut pivot = pool.swap_remove(pos);
            if pivot[i].is_negative() {
                pivot.iter_mut().for_each(|x| *x = -&*x);
            }
            columns.push(pivot);
            pool.retain(|v| v.iter().any(|x| !x.is_zero()));
        }
        debug_assert!(pool.is_empty());
        for i in 0..rank {
            let (before, rest) = columns.split_at_mut(i);
            let pivot_col = &rest[0];
            for col in before.iter_mut() {
                let q = col[i].div_floor(&pivot_col[i]);
                if !q.is_zero() {
                    for (x, p) in col.iter_mut().zip(pivot_col) {
                        *x -= &q * p;
                    }
                }
            }
        }
        Ok(Hnf { columns })
    }

    /// Builds from a row-major matrix whose columns generate the lattice.
    pub fn from_matrix_columns(rows: &[Vec<BigInt>]) -> Result<Self> {
        let k = rows.len();
        if rows.iter().any(|r| r.len() != k) {
            return Err(Error::InvalidSubgroup("lattice matrix must be square".into()));
        }
        let gens: Vec<Vec<BigInt>> = (0..k).map(|j| rows.iter().map(|r| r[j].clone()).collect()).collect();
        Self::from_generators(k, &gens)
    }

    pub fn rank(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[Vec<BigInt>] {
        &self.columns
    }

    /// Row-major matrix with the basis vectors as columns.
    pub fn rows(&self) -> Vec<Vec<BigInt>> {
        let k = self.rank();
        (0..k).map(|i| (0..k).map(|j| self.columns[j][i].clone()).collect()).collect()
    }

    pub fn diagonal(&self) -> Vec<BigInt> {
        (0..self.rank()).map(|j| self.columns[j][j].clone()).collect()
    }

    /// Index `[ℤ^k : L]`, the product of the pivots.
    pub fn index(&self) -> BigInt {
        self.diagonal().iter().product()
    }

    /// Canonical representative of `v + L`, with coordinate `j` in `[0, pivot_j)`.
    pub fn reduce(&self, v: &[BigInt]) -> Vec<BigInt> {
        let mut v = v.to_vec();
        for (j, col) in self.columns.iter().enumerate() {
            let q = v[j].div_floor(&col[j]);
            if !q.is_zero() {
                for (x, c) in v.iter_mut().zip(col).skip(j) {
                    *x -= &q * c;
                }
            }
        }
        v
    }

    pub fn contains(&self, v: &[BigInt]) -> bool {
        self.reduce(v).iter().all(Zero::is_zero)
    }

    /// Image lattice under an integer matrix (row-major); the matrix must be nonsingular.
    pub fn transform(&self, matrix: &[Vec<BigInt>]) -> Result<Self> {
        let gens: Vec<Vec<BigInt>> = self.columns.iter().map(|c| mat_vec(matrix, c)).collect();
        Self::from_generators(self.rank(), &gens)
    }

    pub fn is_sublattice_of(&self, other: &Hnf) -> bool {
        self.columns.iter().all(|c| other.contains(c))
    }
}

pub(crate) fn mat_vec(matrix: &[Vec<BigInt>], v: &[BigInt]) -> Vec<BigInt> {
    matrix.iter().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}

/// Exact determinant by fraction-free (Bareiss) elimination.
pub fn determinant(m: &[Vec<BigInt>]) -> BigInt {
    let n = m.len();
    if n == 0 {
        return BigInt::one();
    }
    let mut a: Vec<Vec<BigInt>> = m.to_vec();
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n - 1 {
        if a[k][k].is_zero() {
            let Some(swap) = (k + 1..n).find(|&r| !a[r][k].is_zero()) else {
                return BigInt::zero();
            };
            a.swap(k, swap);
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let num = &a[i][j] * &a[k][k] - &a[i][k] * &a[k][j];
                a[i][j] = num / &prev;
            }
        }
        prev = a[k][k].clone();
    }
    sign * &a[n - 1][n - 1]
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn big(rows: &[&[i64]]) -> Vec<Vec<BigInt>> {
        rows.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect()
    }

    #[test]
    fn hnf_of_simple_lattices() {
        let h = Hnf::from_matrix_columns(&big(&[&[2, 0], &[0, 3]])).unwrap();
        assert_eq!(h.index(), BigInt::from(6));
        let h2 = Hnf::from_matrix_columns(&big(&[&[4, 6], &[0, 3]])).unwrap();
        // columns (4,0) and (6,3) span {x even, ... }: index |det| = 12
        assert_eq!(h2.index(), BigInt::from(12));
        assert!(h2.contains(&[BigInt::from(10), BigInt::from(3)]));
        assert!(!h2.contains(&[BigInt::from(2), BigInt::from(0)]));
        assert!(Hnf::from_matrix_columns(&big(&[&[1, 2], &[2, 4]])).is_err());
    }

    #[test]
    fn determinant_values() {
        assert_eq!(determinant(&big(&[&[2, 1], &[1, 3]])), BigInt::from(5));
        assert_eq!(determinant(&big(&[&[0, 1], &[1, 0]])), BigInt::from(-1));
        assert_eq!(determinant(&big(&[&[1, 2, 3], &[4, 5, 6], &[7, 8, 10]])), BigInt::from(-3));
    }

    proptest! {
        #[test]
        fn hnf_is_canonical_and_index_is_det(
            a in -6i64..7, b in -6i64..7, c in -6i64..7, d in -6i64..7,
            x in -20i64..20, y in -20i64..20,
        ) {
            let m = big(&[&[a, b], &[c, d]]);
            let det = determinant(&m);
            prop_assume!(!det.is_zero());
            let h = Hnf::from_matrix_columns(&m).unwrap();
            prop_assert_eq!(h.index(), det.abs());
            // Same lattice from a different generating set gives the same basis.
            let shuffled = vec![
                vec![BigInt::from(a + b), BigInt::from(c + d)],
                vec![BigInt::from(b), BigInt::from(d)],
                vec![BigInt::from(3 * a), BigInt::from(3 * c)],
            ];
            prop_assert_eq!(&Hnf::from_generators(2, &shuffled).unwrap(), &h);
            // Membership agrees with solving the linear system over ℚ.
            let v = [BigInt::from(x), BigInt::from(y)];
            let s = &v[0] * d - &v[1] * b;
            let t = &v[1] * a - &v[0] * c;
            let expected = (&s % &det).is_zero() && (&t % &det).is_zero();
            prop_assert_eq!(h.contains(&v), expected);
            let r = h.reduce(&v);
            let diff: Vec<BigInt> = v.iter().zip(&r).map(|(p, q)| p - q).collect();
            prop_assert!(h.contains(&diff));
        }
    }
}
