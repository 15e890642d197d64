//! Naive reference implementations used by the test suites.
//!
//! Everything here trades speed for obviousness and stays independent
//! of the production code paths it is used to check: the k-gram
//! counter scans substrings pairwise, the PageRank oracle solves the
//! stationarity system directly, and the rank transform counts
//! comparisons instead of sorting.

use std::collections::BTreeMap;

/// Count k-grams by double loop: collect each window position's
/// substring, then count every distinct gram with a full rescan.
pub fn naive_kgram_counts(symbols: &str, k: usize) -> BTreeMap<String, u32> {
    let chars: Vec<char> = symbols.chars().collect();
    let mut counts = BTreeMap::new();
    if k == 0 || chars.len() < k {
        return counts;
    }
    let grams: Vec<String> = (0..=chars.len() - k)
        .map(|i| chars[i..i + k].iter().collect())
        .collect();
    for gram in &grams {
        if counts.contains_key(gram) {
            continue;
        }
        let occurrences = grams.iter().filter(|g| *g == gram).count();
        counts.insert(gram.clone(), occurrences as u32);
    }
    counts
}

/// PageRank by direct linear solve of the stationarity system
/// `(I - d M) x = (1 - d)/n`, where `M[i][j] = 1/deg(j)` for each edge
/// `j -> i`. Nodes are `0..n`; `edges` lists undirected pairs.
pub fn dense_pagerank(n: usize, edges: &[(usize, usize)], damping: f64) -> Vec<f64> {
    assert!(n > 0);
    let mut degree = vec![0usize; n];
    for &(u, v) in edges {
        degree[u] += 1;
        degree[v] += 1;
    }
    // System matrix A = I - d M, right-hand side (1-d)/n.
    let mut a = vec![vec![0.0f64; n]; n];
    for (i, row) in a.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for &(u, v) in edges {
        a[v][u] -= damping / degree[u] as f64;
        a[u][v] -= damping / degree[v] as f64;
    }
    let mut b = vec![(1.0 - damping) / n as f64; n];

    // Gaussian elimination with partial pivoting.
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&r1, &r2| a[r1][col].abs().total_cmp(&a[r2][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        let diag = a[col][col];
        assert!(diag.abs() > 1e-12, "singular stationarity system");
        let pivot_row: Vec<f64> = a[col][col..n].to_vec();
        for row in col + 1..n {
            let factor = a[row][col] / diag;
            if factor == 0.0 {
                continue;
            }
            for (slot, &upper) in a[row][col..n].iter_mut().zip(&pivot_row) {
                *slot -= factor * upper;
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0f64; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for col in row + 1..n {
            acc -= a[row][col] * x[col];
        }
        x[row] = acc / a[row][row];
    }
    x
}

/// Average ranks by pairwise counting: rank of an element is the
/// number of strictly smaller values plus half the tie group, 1-based.
pub fn counting_average_ranks(values: &[f64]) -> Vec<f64> {
    values
        .iter()
        .map(|&v| {
            let less = values.iter().filter(|&&w| w < v).count();
            let equal = values.iter().filter(|&&w| w == v).count();
            less as f64 + (equal as f64 + 1.0) / 2.0
        })
        .collect()
}

/// Spearman correlation via counting ranks and the textbook Pearson
/// formula. Returns `None` when either rank vector is constant.
pub fn naive_spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let rx = counting_average_ranks(x);
    let ry = counting_average_ranks(y);
    let mean_x = rx.iter().sum::<f64>() / n;
    let mean_y = ry.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var_x = 0.0;
    let mut var_y = 0.0;
    for i in 0..x.len() {
        let dx = rx[i] - mean_x;
        let dy = ry[i] - mean_y;
        cov += dx * dy;
        var_x += dx * dx;
        var_y += dy * dy;
    }
    if var_x == 0.0 || var_y == 0.0 {
        return None;
    }
    Some(cov / (var_x * var_y).sqrt())
}

/// Central finite-difference gradient of `f` at `point`.
pub fn finite_difference_gradient<F>(mut f: F, point: &[f64], eps: f64) -> Vec<f64>
where
    F: FnMut(&[f64]) -> f64,
{
    let mut grad = Vec::with_capacity(point.len());
    let mut probe = point.to_vec();
    for i in 0..point.len() {
        probe[i] = point[i] + eps;
        let up = f(&probe);
        probe[i] = point[i] - eps;
        let down = f(&probe);
        probe[i] = point[i];
        grad.push((up - down) / (2.0 * eps));
    }
    grad
}
