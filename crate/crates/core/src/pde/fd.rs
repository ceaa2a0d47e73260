//! Finite-difference weights on arbitrary stencils.

/// Fornberg's recursion: `w[d][j]` weights node `x[j]` in the `d`-th derivative at `z`.
pub fn fornberg_weights(z: f64, x: &[f64], max_order: usize) -> Vec<Vec<f64>> {
    let n = x.len();
    let mut c = vec![vec![0.0; n]; max_order + 1];
    let mut c1 = 1.0;
    let mut c4 = x[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(max_order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i] - z;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// First derivative of nodal values with spacing `h` on a 7-point stencil,
/// shifted inward near the ends (sixth order throughout).
pub fn derivative(values: &[f64], h: f64) -> Vec<f64> {
    let n = values.len();
    let width = 7.min(n);
    let half = width / 2;
    let mut cache: Vec<Option<Vec<f64>>> = vec![None; width];
    (0..n)
        .map(|k| {
            let start = k.saturating_sub(half).min(n - width);
            let off = k - start;
            let w = cache[off].get_or_insert_with(|| {
                let xs: Vec<f64> = (0..width).map(|j| j as f64).collect();
                fornberg_weights(off as f64, &xs, 1).swap_remove(1)
            });
            w.iter().zip(&values[start..start + width]).map(|(a, b)| a * b).sum::<f64>() / h
        })
        .collect()
}
