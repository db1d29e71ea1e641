//! Exact rational linear algebra for rank and nullspace decisions.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, Signed, ToPrimitive, Zero};

pub type Q = BigRational;

/// Exact rational value of a finite double.
pub fn q_from_f64(x: f64) -> Q {
    BigRational::from_float(x).expect("finite value")
}

pub fn q_int(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn q_to_f64(x: &Q) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Reduced row echelon form; returns pivot columns.
pub fn rref(rows: &mut Vec<Vec<Q>>, ncols: usize) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut r = 0;
    for col in 0..ncols {
        if r == rows.len() {
            break;
        }
        let Some(p) = (r..rows.len()).find(|&i| !rows[i][col].is_zero()) else {
            continue;
        };
        rows.swap(r, p);
        let inv = Q::one() / rows[r][col].clone();
        for x in rows[r].iter_mut() {
            *x *= inv.clone();
        }
        let pivot_row = rows[r].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i == r || row[col].is_zero() {
                continue;
            }
            let f = row[col].clone();
            for (x, y) in row.iter_mut().zip(&pivot_row) {
                if !y.is_zero() {
                    *x -= f.clone() * y;
                }
            }
        }
        pivots.push(col);
        r += 1;
    }
    rows.truncate(r);
    pivots
}

pub fn rank(rows: &[Vec<Q>], ncols: usize) -> usize {
    let mut m = rows.to_vec();
    rref(&mut m, ncols).len()
}

/// Nullspace basis in the standard RREF parametrization (one vector per free column).
pub fn nullspace(rows: &[Vec<Q>], ncols: usize) -> Vec<Vec<Q>> {
    let mut m = rows.to_vec();
    let pivots = rref(&mut m, ncols);
    let free: Vec<usize> = (0..ncols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![Q::zero(); ncols];
            v[f] = Q::one();
            for (row, &p) in m.iter().zip(&pivots) {
                v[p] = -row[f].clone();
            }
            v
        })
        .collect()
}

/// Rank of the given columns of a set of row vectors (projection rank).
pub fn projected_rank(vectors: &[Vec<Q>], coords: &[usize]) -> usize {
    let rows: Vec<Vec<Q>> = vectors.iter().map(|v| coords.iter().map(|&i| v[i].clone()).collect()).collect();
    rank(&rows, coords.len())
}

pub fn is_zero_vec(v: &[Q]) -> bool {
    v.iter().all(|x| x.is_zero())
}

pub fn max_abs(v: &[Q]) -> Q {
    v.iter().map(|x| x.abs()).fold(Q::zero(), |a, b| if b > a { b } else { a })
}

pub fn from_ratio(n: i64, d: i64) -> Q {
    Q::new(BigInt::from_i64(n).unwrap(), BigInt::from_i64(d).unwrap())
}
