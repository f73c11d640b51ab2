//! Exact rational linear algebra: sparse vectors, dense matrices and
//! fraction-free elimination.

use std::collections::BTreeMap;

use num::bigint::BigInt;
use num::integer::Integer;
use num::traits::{One, Signed, ToPrimitive, Zero};
use num::BigRational;

pub type Rational = BigRational;

/// Sparse vector keyed by coordinate index. Zero entries are never stored.
pub type SparseVec = BTreeMap<usize, Rational>;

pub fn rat(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn to_f64(x: &Rational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Exact rational value of a finite float.
pub fn from_f64(x: f64) -> Rational {
    Rational::from_float(x).unwrap_or_else(Rational::zero)
}

/// `target[idx] += value`, dropping the entry if it cancels.
pub fn add_entry<K: Ord + Copy>(target: &mut BTreeMap<K, Rational>, idx: K, value: Rational) {
    if value.is_zero() {
        return;
    }
    use std::collections::btree_map::Entry;
    match target.entry(idx) {
        Entry::Vacant(v) => {
            v.insert(value);
        }
        Entry::Occupied(mut o) => {
            *o.get_mut() += value;
            if o.get().is_zero() {
                o.remove();
            }
        }
    }
}

/// `target += scale * src`.
pub fn axpy<K: Ord + Copy>(target: &mut BTreeMap<K, Rational>, scale: &Rational, src: &BTreeMap<K, Rational>) {
    if scale.is_zero() {
        return;
    }
    for (&k, v) in src {
        add_entry(target, k, scale * v);
    }
}

pub fn scaled<K: Ord + Copy>(src: &BTreeMap<K, Rational>, scale: &Rational) -> BTreeMap<K, Rational> {
    let mut out = BTreeMap::new();
    axpy(&mut out, scale, src);
    out
}

pub fn sparse_from_dense(v: &[Rational]) -> SparseVec {
    v.iter()
        .enumerate()
        .filter(|(_, x)| !x.is_zero())
        .map(|(i, x)| (i, x.clone()))
        .collect()
}

pub fn dense_from_sparse(v: &SparseVec, len: usize) -> Vec<Rational> {
    let mut out = vec![Rational::zero(); len];
    for (&i, x) in v {
        out[i] = x.clone();
    }
    out
}

/// Dense row-major rational matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct RationalMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Rational>,
}

impl RationalMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![Rational::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Rational::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Rational>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Self { rows: r, cols: c, data: rows.into_iter().flatten().collect() }
    }

    /// Builds a matrix whose columns are the given sparse vectors.
    pub fn from_sparse_columns(rows: usize, columns: &[SparseVec]) -> Self {
        let mut m = Self::zeros(rows, columns.len());
        for (j, col) in columns.iter().enumerate() {
            for (&i, x) in col {
                m[(i, j)] = x.clone();
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[Rational] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<Rational> {
        (0..self.rows).map(|i| self[(i, j)].clone()).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)].clone();
            }
        }
        t
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "dimension mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = &other[(k, j)];
                    if !b.is_zero() {
                        out[(i, j)] += a * b;
                    }
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[Rational]) -> Vec<Rational> {
        assert_eq!(self.cols, v.len(), "dimension mismatch");
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .filter(|(a, b)| !a.is_zero() && !b.is_zero())
                    .fold(Rational::zero(), |acc, (a, b)| acc + a * b)
            })
            .collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Zero::is_zero)
    }

    pub fn select_columns(&self, cols: &[usize]) -> Self {
        let mut out = Self::zeros(self.rows, cols.len());
        for i in 0..self.rows {
            for (jj, &j) in cols.iter().enumerate() {
                out[(i, jj)] = self[(i, j)].clone();
            }
        }
        out
    }

    pub fn rank(&self) -> usize {
        Echelon::new(self).pivots.len()
    }

    /// Basis of the right nullspace `{x : self * x = 0}`.
    pub fn nullspace(&self) -> Vec<Vec<Rational>> {
        Echelon::new(self).nullspace()
    }

    /// Exact inverse; `None` if singular.
    pub fn inverse(&self) -> Option<Self> {
        if self.rows != self.cols {
            return None;
        }
        let n = self.rows;
        let mut aug = Self::zeros(n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                aug[(i, j)] = self[(i, j)].clone();
            }
            aug[(i, n + i)] = Rational::one();
        }
        for col in 0..n {
            let pivot = (col..n).find(|&r| !aug[(r, col)].is_zero())?;
            if pivot != col {
                for j in 0..2 * n {
                    aug.data.swap(pivot * 2 * n + j, col * 2 * n + j);
                }
            }
            let p = aug[(col, col)].clone();
            for j in 0..2 * n {
                let v = &aug[(col, j)] / &p;
                aug[(col, j)] = v;
            }
            for r in 0..n {
                if r == col || aug[(r, col)].is_zero() {
                    continue;
                }
                let f = aug[(r, col)].clone();
                for j in 0..2 * n {
                    if !aug[(col, j)].is_zero() {
                        let d = &f * &aug[(col, j)];
                        aug[(r, j)] -= d;
                    }
                }
            }
        }
        let mut inv = Self::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                inv[(i, j)] = aug[(i, n + j)].clone();
            }
        }
        Some(inv)
    }

    /// Solves `self * x = b`; returns one solution if the system is consistent.
    pub fn solve(&self, b: &[Rational]) -> Option<Vec<Rational>> {
        assert_eq!(b.len(), self.rows);
        let mut aug = Self::zeros(self.rows, self.cols + 1);
        for i in 0..self.rows {
            for j in 0..self.cols {
                aug[(i, j)] = self[(i, j)].clone();
            }
            aug[(i, self.cols)] = b[i].clone();
        }
        let ech = Echelon::new(&aug);
        if ech.pivots.last() == Some(&self.cols) {
            return None;
        }
        let mut x = vec![Rational::zero(); self.cols];
        for (r, &pc) in ech.pivots.iter().enumerate() {
            let row = &ech.rows[r];
            x[pc] = Rational::new(row[self.cols].clone(), row[pc].clone());
        }
        Some(x)
    }
}

impl std::ops::Index<(usize, usize)> for RationalMatrix {
    type Output = Rational;
    fn index(&self, (i, j): (usize, usize)) -> &Rational {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for RationalMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Rational {
        &mut self.data[i * self.cols + j]
    }
}

/// Reduced row echelon form over the integers.
///
/// Each row is scaled to a primitive integer vector before elimination and
/// row operations are `r <- p*r - a*pivot_row` followed by content removal,
/// so no fractions ever appear. After elimination every pivot column is zero
/// outside its pivot row.
struct Echelon {
    cols: usize,
    rows: Vec<Vec<BigInt>>,
    pivots: Vec<usize>,
}

fn primitive(row: &mut [BigInt]) {
    let mut g = BigInt::zero();
    for x in row.iter() {
        if !x.is_zero() {
            g = g.gcd(x);
            if g.is_one() {
                return;
            }
        }
    }
    if g.is_zero() || g.is_one() {
        return;
    }
    for x in row.iter_mut() {
        if !x.is_zero() {
            *x = &*x / &g;
        }
    }
}

impl Echelon {
    fn new(m: &RationalMatrix) -> Self {
        let cols = m.cols;
        let mut rows: Vec<Vec<BigInt>> = (0..m.rows)
            .filter_map(|i| {
                let row = m.row(i);
                if row.iter().all(Zero::is_zero) {
                    return None;
                }
                let l = row
                    .iter()
                    .filter(|x| !x.is_zero())
                    .fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
                let mut ints: Vec<BigInt> =
                    row.iter().map(|x| (x * Rational::from_integer(l.clone())).to_integer()).collect();
                primitive(&mut ints);
                Some(ints)
            })
            .collect();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..cols {
            if r >= rows.len() {
                break;
            }
            // Smallest nonzero magnitude keeps intermediate growth down.
            let Some(p) = (r..rows.len())
                .filter(|&i| !rows[i][c].is_zero())
                .min_by(|&a, &b| rows[a][c].abs().cmp(&rows[b][c].abs()))
            else {
                continue;
            };
            rows.swap(r, p);
            let (above, rest) = rows.split_at_mut(r);
            let (piv, below) = rest.split_at_mut(1);
            let pivot_row = &piv[0];
            let pv = pivot_row[c].clone();
            let reduce = |row: &mut Vec<BigInt>| {
                if row[c].is_zero() {
                    return;
                }
                let g = pv.gcd(&row[c]);
                let mul_self = &pv / &g;
                let mul_piv = &row[c] / &g;
                for (x, y) in row.iter_mut().zip(pivot_row.iter()) {
                    let nv = &*x * &mul_self - y * &mul_piv;
                    *x = nv;
                }
                primitive(row);
            };
            below.iter_mut().for_each(reduce);
            above.iter_mut().for_each(reduce);
            pivots.push(c);
            r += 1;
        }
        rows.truncate(pivots.len());
        Self { cols, rows, pivots }
    }

    fn nullspace(&self) -> Vec<Vec<Rational>> {
        let mut is_pivot = vec![None; self.cols];
        for (r, &c) in self.pivots.iter().enumerate() {
            is_pivot[c] = Some(r);
        }
        (0..self.cols)
            .filter(|&c| is_pivot[c].is_none())
            .map(|free| {
                let mut v = vec![Rational::zero(); self.cols];
                v[free] = Rational::one();
                for (r, &pc) in self.pivots.iter().enumerate() {
                    let a = &self.rows[r][free];
                    if !a.is_zero() {
                        v[pc] = -Rational::new(a.clone(), self.rows[r][pc].clone());
                    }
                }
                v
            })
            .collect()
    }
}

/// Rank of a family of sparse vectors.
pub fn sparse_rank(vectors: &[SparseVec], len: usize) -> usize {
    if vectors.is_empty() {
        return 0;
    }
    let rows: Vec<Vec<Rational>> = vectors.iter().map(|v| dense_from_sparse(v, len)).collect();
    RationalMatrix::from_rows(rows).rank()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[i64]]) -> RationalMatrix {
        RationalMatrix::from_rows(rows.iter().map(|r| r.iter().map(|&x| rat(x)).collect()).collect())
    }

    #[test]
    fn nullspace_of_rank_deficient_matrix() {
        let a = m(&[&[1, 2, 3], &[2, 4, 6], &[1, 0, 1]]);
        let ns = a.nullspace();
        assert_eq!(ns.len(), 1);
        assert!(a.mul_vec(&ns[0]).iter().all(Zero::is_zero));
        assert_eq!(a.rank(), 2);
    }

    #[test]
    fn nullspace_with_fractions() {
        let a = RationalMatrix::from_rows(vec![vec![ratio(1, 2), ratio(1, 3), rat(0)], vec![rat(0), ratio(2, 7), ratio(-1, 5)]]);
        let ns = a.nullspace();
        assert_eq!(ns.len(), 1);
        assert!(a.mul_vec(&ns[0]).iter().all(Zero::is_zero));
    }

    #[test]
    fn inverse_round_trip() {
        let a = m(&[&[2, 1, 0], &[0, 1, 4], &[1, 0, 1]]);
        let inv = a.inverse().unwrap();
        assert_eq!(a.mul(&inv), RationalMatrix::identity(3));
        assert!(m(&[&[1, 2], &[2, 4]]).inverse().is_none());
    }

    #[test]
    fn solve_consistent_and_inconsistent() {
        let a = m(&[&[1, 1], &[1, -1], &[2, 0]]);
        let x = a.solve(&[rat(3), rat(1), rat(4)]).unwrap();
        assert_eq!(x, vec![rat(2), rat(1)]);
        assert!(a.solve(&[rat(3), rat(1), rat(5)]).is_none());
    }

    #[test]
    fn sparse_accumulation_drops_zeros() {
        let mut v = SparseVec::new();
        add_entry(&mut v, 3, rat(2));
        add_entry(&mut v, 3, rat(-2));
        assert!(v.is_empty());
    }
}
