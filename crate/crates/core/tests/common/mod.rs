//! Reference implementations used only by the integration tests. They are
//! deliberately different algorithms from the library's.
#![allow(dead_code)]

use nalgebra::{Matrix2, Matrix3, Vector2};

/// Matrix exponential by degree-13 Pade approximation with scaling and squaring.
pub fn expm_pade13(a: &Matrix3<f64>) -> Matrix3<f64> {
    const B: [f64; 14] = [
        64764752532480000.0,
        32382376266240000.0,
        7771770303897600.0,
        1187353796428800.0,
        129060195264000.0,
        10559470521600.0,
        670442572800.0,
        33522128640.0,
        1323241920.0,
        40840800.0,
        960960.0,
        16380.0,
        182.0,
        1.0,
    ];
    const THETA13: f64 = 5.371920351148152;
    let norm = a.abs().row_sum().max().max(a.abs().column_sum().max());
    let s = if norm > THETA13 {
        (norm / THETA13).log2().ceil() as i32
    } else {
        0
    };
    let a = a / 2f64.powi(s);
    let id = Matrix3::identity();
    let a2 = a * a;
    let a4 = a2 * a2;
    let a6 = a4 * a2;
    let u = a
        * (a6 * (a6 * B[13] + a4 * B[11] + a2 * B[9])
            + a6 * B[7]
            + a4 * B[5]
            + a2 * B[3]
            + id * B[1]);
    let v =
        a6 * (a6 * B[12] + a4 * B[10] + a2 * B[8]) + a6 * B[6] + a4 * B[4] + a2 * B[2] + id * B[0];
    let mut r = (v - u)
        .lu()
        .solve(&(v + u))
        .expect("Pade denominator is nonsingular");
    for _ in 0..s {
        r = r * r;
    }
    r
}

/// `(A_d, B_d)` of `x' = A x + B u` under a zero-order hold, via the augmented exponential.
pub fn zoh_oracle(a: &Matrix2<f64>, b: &Vector2<f64>, t: f64) -> (Matrix2<f64>, Vector2<f64>) {
    let mut aug = Matrix3::zeros();
    for i in 0..2 {
        for j in 0..2 {
            aug[(i, j)] = a[(i, j)] * t;
        }
        aug[(i, 2)] = b[i] * t;
    }
    let e = expm_pade13(&aug);
    (
        Matrix2::new(e[(0, 0)], e[(0, 1)], e[(1, 0)], e[(1, 1)]),
        Vector2::new(e[(0, 2)], e[(1, 2)]),
    )
}

/// Adaptive Dormand-Prince 5(4) integration of `y' = f(y)` from 0 to `t_end`.
pub fn dopri5<F>(f: F, y0: [f64; 2], t_end: f64, rtol: f64, atol: f64) -> [f64; 2]
where
    F: Fn(&[f64; 2]) -> [f64; 2],
{
    const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
    const A: [[f64; 6]; 7] = [
        [0.0; 6],
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [
            19372.0 / 6561.0,
            -25360.0 / 2187.0,
            64448.0 / 6561.0,
            -212.0 / 729.0,
            0.0,
            0.0,
        ],
        [
            9017.0 / 3168.0,
            -355.0 / 33.0,
            46732.0 / 5247.0,
            49.0 / 176.0,
            -5103.0 / 18656.0,
            0.0,
        ],
        [
            35.0 / 384.0,
            0.0,
            500.0 / 1113.0,
            125.0 / 192.0,
            -2187.0 / 6784.0,
            11.0 / 84.0,
        ],
    ];
    const B5: [f64; 7] = [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
        0.0,
    ];
    const B4: [f64; 7] = [
        5179.0 / 57600.0,
        0.0,
        7571.0 / 16695.0,
        393.0 / 640.0,
        -92097.0 / 339200.0,
        187.0 / 2100.0,
        1.0 / 40.0,
    ];
    let _ = C;
    let mut y = y0;
    let mut t = 0.0;
    let mut h = (t_end / 10.0).min(1e-2);
    while t < t_end {
        if t + h > t_end {
            h = t_end - t;
        }
        let mut k = [[0.0; 2]; 7];
        for s in 0..7 {
            let mut ys = y;
            for (j, kj) in k.iter().enumerate().take(s) {
                for d in 0..2 {
                    ys[d] += h * A[s][j] * kj[d];
                }
            }
            k[s] = f(&ys);
        }
        let mut y5 = y;
        let mut err = 0.0f64;
        for d in 0..2 {
            let mut s5 = 0.0;
            let mut s4 = 0.0;
            for s in 0..7 {
                s5 += B5[s] * k[s][d];
                s4 += B4[s] * k[s][d];
            }
            y5[d] += h * s5;
            let sc = atol + rtol * y[d].abs().max(y5[d].abs());
            err = err.max((h * (s5 - s4)).abs() / sc);
        }
        if err <= 1.0 {
            t += h;
            y = y5;
        }
        let factor = if err == 0.0 {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        };
        h *= factor;
    }
    y
}

/// Planar two-link IK on the `gamma <= 0` branch by bisection on the
/// elbow angle, then the shoulder angle from the resulting triangle.
pub fn bisection_ik(l1: f64, l2: f64, x: f64, y: f64) -> (f64, f64) {
    let r = x.hypot(y);
    let dist = |g: f64| (l1 * l1 + l2 * l2 + 2.0 * l1 * l2 * g.cos()).sqrt();
    // dist is decreasing in |gamma| on [0, pi].
    let (mut lo, mut hi) = (0.0f64, std::f64::consts::PI);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if dist(mid) > r {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let gamma = -0.5 * (lo + hi);
    let fx = l1 + l2 * gamma.cos();
    let fy = l2 * gamma.sin();
    let beta = y.atan2(x) - fy.atan2(fx);
    (beta, gamma)
}
