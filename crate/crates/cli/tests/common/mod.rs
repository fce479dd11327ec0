//! Test-only oracles, written independently of the library's factorization
//! and fitting code.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use srobust::Matrix;

/// Numerical rank by Gaussian elimination with complete pivoting.
pub fn rank(rows: &[Vec<f64>], rel_tol: f64) -> usize {
    let mut a: Vec<Vec<f64>> = rows.to_vec();
    let m = a.len();
    let n = a.first().map_or(0, |r| r.len());
    let scale = a
        .iter()
        .flatten()
        .fold(0.0_f64, |acc, v| acc.max(v.abs()));
    if scale == 0.0 {
        return 0;
    }
    let tol = rel_tol * scale;
    let mut r = 0;
    let mut cols: Vec<usize> = (0..n).collect();
    while r < m.min(n) {
        let (mut bi, mut bj, mut best) = (r, r, 0.0_f64);
        for i in r..m {
            for j in r..n {
                let v = a[i][cols[j]].abs();
                if v > best {
                    best = v;
                    bi = i;
                    bj = j;
                }
            }
        }
        if best <= tol {
            break;
        }
        a.swap(r, bi);
        cols.swap(r, bj);
        let pc = cols[r];
        for i in r + 1..m {
            let f = a[i][pc] / a[r][pc];
            for j in r..n {
                let c = cols[j];
                a[i][c] -= f * a[r][c];
            }
        }
        r += 1;
    }
    r
}

pub fn matrix_rank(x: &Matrix, rows: &[usize]) -> usize {
    let sel: Vec<Vec<f64>> = rows.iter().map(|&i| x.row(i).to_vec()).collect();
    rank(&sel, 1e-9)
}

/// Ordinary least squares by Gauss-Jordan elimination on the normal
/// equations.
pub fn least_squares(x: &Matrix, y: &[f64]) -> Vec<f64> {
    let p = x.ncols();
    let mut aug = vec![vec![0.0; p + 1]; p];
    for i in 0..x.nrows() {
        let row = x.row(i);
        for a in 0..p {
            for b in 0..p {
                aug[a][b] += row[a] * row[b];
            }
            aug[a][p] += row[a] * y[i];
        }
    }
    for c in 0..p {
        let piv = (c..p)
            .max_by(|&i, &j| aug[i][c].abs().partial_cmp(&aug[j][c].abs()).unwrap())
            .unwrap();
        aug.swap(c, piv);
        let d = aug[c][c];
        for v in aug[c].iter_mut() {
            *v /= d;
        }
        for i in 0..p {
            if i != c {
                let f = aug[i][c];
                for j in 0..=p {
                    aug[i][j] -= f * aug[c][j];
                }
            }
        }
    }
    aug.iter().map(|r| r[p]).collect()
}

/// Random additive main-effects design over 2–4 factors with 2–6 levels,
/// some levels of frequency 1, `n ≤ 60` and `p ≤ 15`.
pub fn random_categorical_design(seed: u64) -> Matrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let k = rng.gen_range(2..=4);
        let levels: Vec<usize> = (0..k).map(|_| rng.gen_range(2..=6)).collect();
        let p = 1 + levels.iter().map(|l| l - 1).sum::<usize>();
        if p > 15 {
            continue;
        }
        let n = rng.gen_range((p + 1).max(12)..=60);
        let mut columns: Vec<Vec<f64>> = vec![vec![1.0; n]];
        for &l in &levels {
            // some levels are singletons, the rest share the remainder
            let mut freq = vec![0usize; l];
            let mut left = n;
            for f in freq.iter_mut().skip(1) {
                if rng.gen_bool(0.35) {
                    *f = 1;
                    left -= 1;
                }
            }
            let open: Vec<usize> = (0..l).filter(|&i| freq[i] == 0).collect();
            for &i in &open {
                freq[i] = 1;
                left -= 1;
            }
            for _ in 0..left {
                freq[open[rng.gen_range(0..open.len())]] += 1;
            }
            let mut codes: Vec<usize> = freq
                .iter()
                .enumerate()
                .flat_map(|(lv, &c)| std::iter::repeat_n(lv, c))
                .collect();
            for i in (1..n).rev() {
                codes.swap(i, rng.gen_range(0..=i));
            }
            for lv in 1..l {
                columns.push(codes.iter().map(|&c| (c == lv) as u8 as f64).collect());
            }
        }
        return Matrix::from_columns(&columns).unwrap();
    }
}

pub fn anova_design() -> Matrix {
    let mut rows = Vec::new();
    for g in 0..3 {
        for _ in 0..3 {
            rows.push(vec![1.0, (g == 1) as u8 as f64, (g == 2) as u8 as f64]);
        }
    }
    Matrix::from_rows(&rows).unwrap()
}

pub fn continuous_design(seed: u64, n: usize, p: usize) -> Matrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            let mut r = vec![1.0];
            r.extend((1..p).map(|_| rng.gen_range(-2.0..2.0)));
            r
        })
        .collect();
    Matrix::from_rows(&rows).unwrap()
}
