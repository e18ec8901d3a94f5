//! Test-only oracles, independent of the library's own solvers.

#![allow(dead_code, clippy::needless_range_loop)]

use std::collections::hash_map::Entry;
use std::collections::HashMap;

use hypercover::HypercubeSubgraph;
use nalgebra::{DMatrix, SymmetricEigen};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Expected cover time in exact arithmetic: one linear system over every
/// `(visited set, position)` state, solved by Gauss-Jordan elimination.
/// `laziness = stay_num / stay_den`.
pub fn rational_cover_time(g: &HypercubeSubgraph, stay_num: i64, stay_den: i64, start: u32) -> BigRational {
    let n = g.n();
    let full = (1usize << n) - 1;
    // Only states reachable from the start, found breadth first.
    let s0 = (1usize << start, start as usize);
    let mut index = HashMap::from([(s0, 0usize)]);
    let mut states = vec![s0];
    let mut head = 0;
    while head < states.len() {
        let (set, x) = states[head];
        head += 1;
        if set == full {
            continue;
        }
        for y in g.neighbors(x as u32) {
            let next = (set | 1 << y, y as usize);
            if let Entry::Vacant(e) = index.entry(next) {
                e.insert(states.len());
                states.push(next);
            }
        }
    }
    let k = states.len();
    let stay = rat(stay_num, stay_den);
    let mut a = vec![vec![BigRational::zero(); k + 1]; k];
    for (row, &(set, x)) in states.iter().enumerate() {
        a[row][row] += BigRational::one();
        if set == full {
            continue;
        }
        a[row][k] = BigRational::one();
        a[row][row] -= stay.clone();
        let d = g.degree_of(x as u32) as i64;
        let mv = (BigRational::one() - stay.clone()) * rat(1, d);
        for y in g.neighbors(x as u32) {
            let next = (set | 1 << y, y as usize);
            a[row][index[&next]] -= mv.clone();
        }
    }
    // After full reduction row `i` holds the value of state `i`.
    for col in 0..k {
        let pivot = (col..k).find(|&r| !a[r][col].is_zero()).expect("non-singular");
        a.swap(col, pivot);
        let inv = BigRational::one() / a[col][col].clone();
        for j in col..=k {
            a[col][j] = a[col][j].clone() * inv.clone();
        }
        for r in 0..k {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                for j in col..=k {
                    let v = a[col][j].clone() * f.clone();
                    a[r][j] -= v;
                }
            }
        }
    }
    a[0][k].clone()
}

/// Eigenvalues of `Π^{1/2} P Π^{−1/2}` for the walk with the given laziness,
/// sorted in decreasing order.
pub fn dense_spectrum(g: &HypercubeSubgraph, laziness: f64) -> Vec<f64> {
    let n = g.n();
    let mut m = DMatrix::<f64>::zeros(n, n);
    for u in 0..n as u32 {
        m[(u as usize, u as usize)] = laziness;
        for x in g.neighbors(u) {
            let du = g.degree_of(u) as f64;
            let dx = g.degree_of(x) as f64;
            m[(u as usize, x as usize)] = (1.0 - laziness) / (du * dx).sqrt();
        }
    }
    let mut eig: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().cloned().collect();
    eig.sort_by(|a, b| b.total_cmp(a));
    eig
}
