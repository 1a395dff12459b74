//! Within transformation by alternating projections, and the rank of the
//! fixed-effect dummy matrix.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Group codes of every row along one fixed-effect dimension, plus the
/// number of groups.
pub type Groups = (Vec<usize>, usize);

fn group_means(col: &[f64], g: &Groups, sums: &mut Vec<f64>, counts: &mut Vec<f64>) {
    sums.clear();
    sums.resize(g.1, 0.0);
    counts.clear();
    counts.resize(g.1, 0.0);
    for (v, &c) in col.iter().zip(&g.0) {
        sums[c] += v;
        counts[c] += 1.0;
    }
    for (s, n) in sums.iter_mut().zip(counts.iter()) {
        if *n > 0.0 {
            *s /= n;
        }
    }
}

/// Sweeps group-mean removal over every dimension until the largest group
/// mean seen in a full sweep is below `tol`. Returns the number of sweeps.
pub fn demean(columns: &mut [Vec<f64>], groups: &[Groups], tol: f64, max_iter: usize) -> Result<usize> {
    if groups.is_empty() {
        return Err(Error::invalid("at least one fixed-effect dimension is required"));
    }
    let mut sums = Vec::new();
    let mut counts = Vec::new();
    let mut residual = f64::INFINITY;
    for iter in 1..=max_iter {
        residual = 0.0;
        for g in groups {
            for col in columns.iter_mut() {
                group_means(col, g, &mut sums, &mut counts);
                residual = sums.iter().fold(residual, |m, v| m.max(v.abs()));
                for (v, &c) in col.iter_mut().zip(&g.0) {
                    *v -= sums[c];
                }
            }
        }
        if residual < tol {
            return Ok(iter);
        }
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        residual,
    })
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Column rank of the stacked dummy matrix of all dimensions.
pub fn dummy_rank(groups: &[Groups]) -> usize {
    let total: usize = groups.iter().map(|g| g.1).sum();
    match groups {
        [] => 0,
        [g] => g.1,
        [a, b] => {
            // two-way dummies lose one column per connected component
            let mut parent: Vec<usize> = (0..total).collect();
            for (&i, &j) in a.0.iter().zip(&b.0) {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, a.1 + j));
                if ri != rj {
                    parent[ri] = rj;
                }
            }
            let comps = (0..total).filter(|&x| find(&mut parent, x) == x).count();
            total - comps
        }
        _ => {
            let mut offsets = Vec::with_capacity(groups.len());
            let mut off = 0;
            for g in groups {
                offsets.push(off);
                off += g.1;
            }
            let mut dtd = DMatrix::<f64>::zeros(total, total);
            let n = groups[0].0.len();
            let mut idx = vec![0usize; groups.len()];
            for row in 0..n {
                for (k, g) in groups.iter().enumerate() {
                    idx[k] = offsets[k] + g.0[row];
                }
                for &p in &idx {
                    for &q in &idx {
                        dtd[(p, q)] += 1.0;
                    }
                }
            }
            let eig = SymmetricEigen::new(dtd).eigenvalues;
            let max = eig.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            eig.iter().filter(|v| **v > max * 1e-10).count()
        }
    }
}
