use nalgebra::SMatrix;

/// Matrix exponential by Taylor series with scaling and squaring.
pub fn expm_taylor<const N: usize>(m: &SMatrix<f64, N, N>) -> SMatrix<f64, N, N> {
    let norm = m.abs().row_sum().max();
    let mut squarings = 0;
    let mut scale = 1.0;
    while norm * scale > 0.25 {
        scale *= 0.5;
        squarings += 1;
    }
    let a = m * scale;
    let mut term = SMatrix::<f64, N, N>::identity();
    let mut sum = term;
    for k in 1..=30 {
        term = term * a / k as f64;
        sum += term;
        if term.abs().max() <= f64::EPSILON * 1e-3 * sum.abs().max() {
            break;
        }
    }
    for _ in 0..squarings {
        sum = sum * sum;
    }
    sum
}
