//! Slow, direct reference computations. Nothing here shares code with
//! `fockml`; tests compare the two.

use std::collections::HashMap;
use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type Matrix = Vec<Vec<Complex64>>;

/// Permanent as an explicit sum over all permutations.
pub fn naive_permanent(a: &Matrix) -> Complex64 {
    let n = a.len();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut total = Complex64::new(0.0, 0.0);
    permute(&mut perm, 0, &mut |p| {
        total += p.iter().enumerate().map(|(i, &j)| a[i][j]).product::<Complex64>();
    });
    total
}

fn permute(p: &mut Vec<usize>, k: usize, visit: &mut impl FnMut(&[usize])) {
    if k == p.len() {
        visit(p);
        return;
    }
    for i in k..p.len() {
        p.swap(k, i);
        permute(p, k + 1, visit);
        p.swap(k, i);
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|v| v as f64).product()
}

/// `⟨output| 𝒰 |input⟩` by expanding `Π_j (Σ_i U_ij a_i†)^{n_j} |0⟩` as a
/// polynomial in creation operators.
pub fn mode_operator_amplitude(u: &Matrix, input: &[usize], output: &[usize]) -> Complex64 {
    let m = input.len();
    let mut poly: HashMap<Vec<usize>, Complex64> = HashMap::new();
    poly.insert(vec![0; m], Complex64::new(1.0, 0.0));
    for (j, &nj) in input.iter().enumerate() {
        for _ in 0..nj {
            let mut next: HashMap<Vec<usize>, Complex64> = HashMap::new();
            for (mono, coef) in &poly {
                for i in 0..m {
                    let mut e = mono.clone();
                    e[i] += 1;
                    *next.entry(e).or_insert(Complex64::new(0.0, 0.0)) += coef * u[i][j];
                }
            }
            poly = next;
        }
    }
    let coef = poly.get(output).copied().unwrap_or(Complex64::new(0.0, 0.0));
    let out_norm: f64 = output.iter().map(|&o| factorial(o)).product::<f64>().sqrt();
    let in_norm: f64 = input.iter().map(|&n| factorial(n)).product::<f64>().sqrt();
    coef * out_norm / in_norm
}

/// All occupation vectors of `n` photons in `m` modes, any order.
pub fn all_states(m: usize, n: usize) -> Vec<Vec<usize>> {
    if m == 1 {
        return vec![vec![n]];
    }
    (0..=n)
        .flat_map(|k| {
            all_states(m - 1, n - k).into_iter().map(move |mut rest| {
                rest.insert(0, k);
                rest
            })
        })
        .collect()
}

/// The Fourier-series target `c₀ + Σ_k 2 Re(c_k e^{−ikx})`.
pub fn fourier_target(c0: f64, coeffs: &[(f64, f64)], x: f64) -> f64 {
    c0 + coeffs.iter().enumerate().map(|(k, &(re, im))| {
        let kx = (k + 1) as f64 * x;
        2.0 * (re * kx.cos() + im * kx.sin())
    }).sum::<f64>()
}

/// Training MSE of the best trigonometric polynomial of degree `≤ degree`
/// fitted to `(xs, ys)` by least squares.
pub fn trig_ls_floor(xs: &[f64], ys: &[f64], degree: usize) -> f64 {
    let cols = 2 * degree + 1;
    let a = DMatrix::from_fn(xs.len(), cols, |i, c| {
        if c == 0 {
            1.0
        } else {
            let k = c.div_ceil(2) as f64;
            if c % 2 == 1 {
                (k * xs[i]).cos()
            } else {
                (k * xs[i]).sin()
            }
        }
    });
    let b = DVector::from_column_slice(ys);
    let qr = a.clone().qr();
    let rhs = qr.q().transpose() * &b;
    let coef = qr.r().solve_upper_triangular(&rhs).expect("full column rank");
    let r = a * coef - b;
    r.norm_squared() / xs.len() as f64
}

/// `c_ω` of a real `2π`-periodic function by a dense Riemann sum.
pub fn riemann_coefficient(f: impl Fn(f64) -> f64, omega: i64, samples: usize) -> Complex64 {
    (0..samples)
        .map(|s| {
            let x = TAU * s as f64 / samples as f64;
            f(x) * Complex64::from_polar(1.0, -(omega as f64) * x)
        })
        .sum::<Complex64>()
        / samples as f64
}

/// Outcome probabilities of `|n,0⟩` through `H·S(δ)·H`:
/// `C(n,j) cos^{2(n−j)}(δ/2) sin^{2j}(δ/2)`.
pub fn interferometer_probabilities(n: usize, delta: f64) -> Vec<f64> {
    let c2 = (delta / 2.0).cos().powi(2);
    let s2 = (delta / 2.0).sin().powi(2);
    (0..=n).map(|j| factorial(n) / (factorial(j) * factorial(n - j)) * c2.powi((n - j) as i32) * s2.powi(j as i32)).collect()
}

/// Number of real parameters of the three-mode PNR model.
pub fn three_mode_pnr_dof(n: u64) -> u64 {
    12 + (n + 2) * (n + 1) / 2
}

/// Classical random Fourier features `√2 cos(kγ(w·x + b)) / √R`.
pub fn rff_features(xs: &[Vec<f64>], w: &[Vec<f64>], b: &[f64], gamma: f64, k: usize) -> DMatrix<f64> {
    let r = b.len();
    DMatrix::from_fn(xs.len(), r, |i, j| {
        let proj: f64 = w[j].iter().zip(&xs[i]).map(|(a, c)| a * c).sum();
        std::f64::consts::SQRT_2 * (k as f64 * gamma * (proj + b[j])).cos() / (r as f64).sqrt()
    })
}

/// Primal ridge regression weights `(ZᵀZ + αI)⁻¹ Zᵀy` via an explicit inverse.
pub fn primal_ridge(z: &DMatrix<f64>, y: &[f64], alpha: f64) -> DVector<f64> {
    let gram = z.transpose() * z + DMatrix::identity(z.ncols(), z.ncols()) * alpha;
    let inv = gram.try_inverse().expect("regularised Gram matrix is invertible");
    inv * z.transpose() * DVector::from_column_slice(y)
}

/// Dual Gaussian-kernel ridge regression; returns test predictions.
pub fn gaussian_kernel_ridge(train: &[Vec<f64>], y: &[f64], test: &[Vec<f64>], sigma: f64, scale: f64, alpha: f64) -> Vec<f64> {
    let k = |a: &[f64], b: &[f64]| {
        let d2: f64 = a.iter().zip(b).map(|(p, q)| (p - q).powi(2)).sum();
        (-scale * scale * d2 / (2.0 * sigma * sigma)).exp()
    };
    let n = train.len();
    let gram = DMatrix::from_fn(n, n, |i, j| k(&train[i], &train[j])) + DMatrix::identity(n, n) * alpha;
    let beta = gram.try_inverse().expect("regularised kernel matrix is invertible") * DVector::from_column_slice(y);
    test.iter().map(|x| (0..n).map(|i| beta[i] * k(&train[i], x)).sum()).collect()
}

/// Fraction of predictions whose sign (zero counted as `+1`) matches the label.
pub fn sign_accuracy(pred: &[f64], labels: &[i8]) -> f64 {
    let ok = pred.iter().zip(labels).filter(|(p, &l)| (if **p >= 0.0 { 1 } else { -1 }) == l).count();
    ok as f64 / labels.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn permanent_of_ones_is_factorial() {
        let a = vec![vec![c(1.0); 4]; 4];
        assert!((naive_permanent(&a) - c(24.0)).norm() < 1e-12);
    }

    #[test]
    fn beamsplitter_bunching() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let u = vec![vec![c(h), c(h)], vec![c(h), c(-h)]];
        assert!(mode_operator_amplitude(&u, &[1, 1], &[1, 1]).norm() < 1e-15);
        assert!((mode_operator_amplitude(&u, &[1, 1], &[2, 0]).norm() - h).abs() < 1e-15);
    }

    #[test]
    fn state_count() {
        assert_eq!(all_states(3, 3).len(), 10);
    }

    #[test]
    fn floor_is_zero_for_representable_targets() {
        let xs: Vec<f64> = (0..40).map(|i| i as f64 * 0.3).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 1.0 + (2.0 * x).sin()).collect();
        assert!(trig_ls_floor(&xs, &ys, 2) < 1e-20);
        assert!(trig_ls_floor(&xs, &ys, 1) > 0.1);
    }

    #[test]
    fn probabilities_sum_to_one() {
        let p = interferometer_probabilities(6, 1.1);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-14);
    }
}
