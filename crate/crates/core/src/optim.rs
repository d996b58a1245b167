//! Derivative-free, bound-constrained minimisation of sums of squares.
//!
//! The objective is `½‖r(x)‖²` for a residual map `r: ℝᵖ → ℝᴺ`. Each
//! iteration fits a linear model of `r` by interpolation on `p+1` points,
//! minimises the resulting Gauss–Newton quadratic over the intersection of
//! the bounds and a box trust region, and replaces an interpolation point
//! chosen from the linear Lagrange polynomials. The trust-region floor `ρ`
//! shrinks from `rho_begin` to `rho_end`, as in Powell's methods. Variables
//! are scaled to the unit box internally, so radii are relative to the
//! bound widths.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DfoOptions {
    pub max_evals: usize,
    pub rho_begin: f64,
    pub rho_end: f64,
    /// Stop as soon as the cost drops to this value.
    pub target_cost: f64,
}

impl Default for DfoOptions {
    fn default() -> Self {
        Self { max_evals: 5000, rho_begin: 0.1, rho_end: 1e-8, target_cost: 0.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimOutcome {
    pub x: Vec<f64>,
    pub cost: f64,
    pub evals: usize,
    /// True when the trust-region floor reached `rho_end` or the target
    /// cost was met; false when the budget ran out first.
    pub converged: bool,
    /// `(evaluation count, best cost so far)` at every improvement.
    pub history: Vec<(usize, f64)>,
}

struct Counter<'a, F> {
    residuals: &'a mut F,
    lower: Vec<f64>,
    width: Vec<f64>,
    evals: usize,
    max_evals: usize,
    best: f64,
    best_x: Vec<f64>,
    history: Vec<(usize, f64)>,
}

impl<F: FnMut(&[f64]) -> Vec<f64>> Counter<'_, F> {
    fn to_user(&self, z: &DVector<f64>) -> Vec<f64> {
        z.iter().zip(self.lower.iter().zip(&self.width)).map(|(z, (l, w))| l + z.clamp(0.0, 1.0) * w).collect()
    }

    fn exhausted(&self) -> bool {
        self.evals >= self.max_evals
    }

    fn eval(&mut self, z: &DVector<f64>) -> (DVector<f64>, f64) {
        let x = self.to_user(z);
        let r = DVector::from_vec((self.residuals)(&x));
        self.evals += 1;
        let mut cost = 0.5 * r.norm_squared();
        if !cost.is_finite() {
            cost = f64::INFINITY;
        }
        if cost < self.best {
            self.best = cost;
            self.best_x = x;
            self.history.push((self.evals, cost));
        }
        (r, cost)
    }
}

struct Point {
    z: DVector<f64>,
    r: DVector<f64>,
    cost: f64,
}

/// Minimises `½‖residuals(x)‖²` over `bounds[i].0 ≤ x_i ≤ bounds[i].1`.
///
/// The starting point is clamped into the bounds. Running out of budget is
/// not an error; the best point seen is returned with `converged = false`.
pub fn minimize_least_squares<F>(mut residuals: F, x0: &[f64], bounds: &[(f64, f64)], opts: &DfoOptions) -> Result<OptimOutcome>
where
    F: FnMut(&[f64]) -> Vec<f64>,
{
    let p = x0.len();
    if bounds.len() != p {
        return Err(Error::DimensionMismatch { expected: p, got: bounds.len() });
    }
    if opts.max_evals == 0 {
        return Err(Error::Config("max_evals must be at least 1".into()));
    }
    for (i, &(lo, hi)) in bounds.iter().enumerate() {
        if !(lo.is_finite() && hi.is_finite() && hi >= lo) {
            return Err(Error::Config(format!("bound {i} is not a finite interval")));
        }
    }
    if !(opts.rho_begin > 0.0 && opts.rho_end > 0.0 && opts.rho_end <= opts.rho_begin) {
        return Err(Error::Config("need 0 < rho_end ≤ rho_begin".into()));
    }

    let lower: Vec<f64> = bounds.iter().map(|b| b.0).collect();
    // Fixed variables get unit width and a pinned [0, 0] box below.
    let fixed: Vec<bool> = bounds.iter().map(|b| b.1 == b.0).collect();
    let width: Vec<f64> = bounds.iter().map(|b| if b.1 > b.0 { b.1 - b.0 } else { 1.0 }).collect();
    let z0 = DVector::from_iterator(
        p,
        x0.iter().enumerate().map(|(i, &x)| if fixed[i] { 0.0 } else { ((x - lower[i]) / width[i]).clamp(0.0, 1.0) }),
    );
    let zmax = DVector::from_iterator(p, fixed.iter().map(|&f| if f { 0.0 } else { 1.0 }));

    let mut ctr = Counter {
        residuals: &mut residuals,
        lower,
        width,
        evals: 0,
        max_evals: opts.max_evals,
        best: f64::INFINITY,
        best_x: x0.to_vec(),
        history: Vec::new(),
    };

    let (r0, c0) = ctr.eval(&z0);
    let done = |ctr: &Counter<'_, F>, converged: bool| OptimOutcome {
        x: ctr.best_x.clone(),
        cost: ctr.best,
        evals: ctr.evals,
        converged,
        history: ctr.history.clone(),
    };
    if c0 <= opts.target_cost {
        return Ok(done(&ctr, true));
    }
    if p == 0 {
        return Ok(done(&ctr, true));
    }

    let mut rho = opts.rho_begin;
    let mut delta = rho;
    let mut pts = vec![Point { z: z0.clone(), r: r0, cost: c0 }];
    for i in 0..p {
        if ctr.exhausted() {
            return Ok(done(&ctr, false));
        }
        let z = coordinate_probe(&z0, i, delta, &zmax);
        let (r, cost) = ctr.eval(&z);
        pts.push(Point { z, r, cost });
    }

    loop {
        if ctr.best <= opts.target_cost {
            return Ok(done(&ctr, true));
        }
        if ctr.exhausted() {
            return Ok(done(&ctr, false));
        }
        let k = best_index(&pts);
        let model = match LinearModel::fit(&pts, k) {
            Some(m) => m,
            None => {
                // Degenerate geometry: rebuild the set around the best point.
                let base = pts[k].z.clone();
                let keep = pts.swap_remove(k);
                pts.clear();
                pts.push(keep);
                for i in 0..p {
                    if ctr.exhausted() {
                        return Ok(done(&ctr, false));
                    }
                    let z = coordinate_probe(&base, i, delta.max(rho), &zmax);
                    let (r, cost) = ctr.eval(&z);
                    pts.push(Point { z, r, cost });
                }
                continue;
            }
        };

        let xk = pts[k].z.clone();
        let lo = DVector::from_iterator(p, (0..p).map(|i| (-delta).max(-xk[i])));
        let hi = DVector::from_iterator(p, (0..p).map(|i| delta.min(zmax[i] - xk[i])));
        let g = model.jac.transpose() * &pts[k].r;
        let h = model.jac.transpose() * &model.jac;
        let step = box_qp(&h, &g, &lo, &hi);
        let snorm = step.amax();
        let predicted = -(g.dot(&step) + 0.5 * step.dot(&(&h * &step)));

        if snorm < 0.5 * rho || predicted <= 0.0 {
            // Model step too short to be informative.
            if improve_geometry(&mut pts, k, delta, rho, &zmax, &mut ctr) {
                continue;
            }
            if rho <= opts.rho_end {
                return Ok(done(&ctr, true));
            }
            rho = next_rho(rho, opts.rho_end);
            delta = delta.min(rho.max(0.5 * delta)).max(rho);
            continue;
        }

        let znew = &xk + &step;
        let (rnew, cnew) = ctr.eval(&znew);
        let ratio = (pts[k].cost - cnew) / predicted;

        delta = if ratio < 0.1 {
            (0.5 * delta).max(rho).min(0.5 * snorm.max(rho))
        } else if ratio < 0.7 {
            (0.5 * delta).max(snorm).max(rho)
        } else {
            (2.0 * snorm).max(delta).min(1.0)
        };
        if delta <= 1.5 * rho {
            delta = rho;
        }

        let t = replacement_index(&pts, k, &model, &znew, delta, cnew < pts[k].cost);
        pts[t] = Point { z: znew, r: rnew, cost: cnew };

        if ratio < 0.1 && delta <= rho {
            let kb = best_index(&pts);
            if improve_geometry(&mut pts, kb, delta, rho, &zmax, &mut ctr) {
                continue;
            }
            if rho <= opts.rho_end {
                return Ok(done(&ctr, true));
            }
            rho = next_rho(rho, opts.rho_end);
            delta = delta.max(rho);
        }
    }
}

fn next_rho(rho: f64, rho_end: f64) -> f64 {
    let ratio = rho / rho_end;
    let next = if ratio <= 16.0 {
        rho_end
    } else if ratio <= 250.0 {
        (rho * rho_end).sqrt()
    } else {
        0.1 * rho
    };
    next.max(rho_end)
}

fn coordinate_probe(base: &DVector<f64>, i: usize, delta: f64, zmax: &DVector<f64>) -> DVector<f64> {
    let mut z = base.clone();
    if zmax[i] == 0.0 {
        return z;
    }
    z[i] = if base[i] + delta <= zmax[i] { base[i] + delta } else { (base[i] - delta).max(0.0) };
    z
}

fn best_index(pts: &[Point]) -> usize {
    pts.iter().enumerate().min_by(|a, b| a.1.cost.total_cmp(&b.1.cost)).map(|(i, _)| i).unwrap_or(0)
}

/// Interpolating linear model of the residuals around point `k`.
struct LinearModel {
    jac: DMatrix<f64>,
    /// Rows: `(y_i − y_k)` for `i ≠ k`, in `others` order; its inverse maps
    /// displacements to Lagrange values.
    inv_disp: DMatrix<f64>,
    others: Vec<usize>,
}

impl LinearModel {
    fn fit(pts: &[Point], k: usize) -> Option<Self> {
        let p = pts[k].z.len();
        let others: Vec<usize> = (0..pts.len()).filter(|&i| i != k).collect();
        let mut disp = DMatrix::zeros(p, p);
        let mut dres = DMatrix::zeros(p, pts[k].r.len());
        for (row, &i) in others.iter().enumerate() {
            disp.set_row(row, &(&pts[i].z - &pts[k].z).transpose());
            dres.set_row(row, &(&pts[i].r - &pts[k].r).transpose());
        }
        let svd = disp.clone().svd(true, true);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        if smin.is_nan() || smin <= 1e-10 * smax.max(1e-300) {
            return None;
        }
        let inv_disp = disp.try_inverse()?;
        // disp · Jᵀ = dres
        let jac_t = &inv_disp * dres;
        if jac_t.iter().any(|v| !v.is_finite()) {
            return None;
        }
        Some(Self { jac: jac_t.transpose(), inv_disp, others })
    }

    /// Lagrange values of the non-centre points at `y` (centre value is `1 − Σ`).
    fn lagrange(&self, y_minus_k: &DVector<f64>) -> DVector<f64> {
        self.inv_disp.transpose() * y_minus_k
    }
}

fn replacement_index(pts: &[Point], k: usize, model: &LinearModel, znew: &DVector<f64>, delta: f64, improved: bool) -> usize {
    let centre = if improved { znew } else { &pts[k].z };
    let lag = model.lagrange(&(znew - &pts[k].z));
    let lk = 1.0 - lag.sum();
    let mut best = (f64::NEG_INFINITY, k);
    let mut consider = |i: usize, l: f64| {
        let dist = (&pts[i].z - centre).amax();
        let w = (dist / delta).max(1.0).powi(4) * l.abs();
        if w > best.0 {
            best = (w, i);
        }
    };
    for (j, &i) in model.others.iter().enumerate() {
        consider(i, lag[j]);
    }
    if improved {
        consider(k, lk);
    }
    best.1
}

/// Replaces the point farthest from the centre when it lies outside `2Δ`.
/// Returns `false` when the set is already local.
fn improve_geometry<F: FnMut(&[f64]) -> Vec<f64>>(
    pts: &mut [Point],
    k: usize,
    delta: f64,
    rho: f64,
    zmax: &DVector<f64>,
    ctr: &mut Counter<'_, F>,
) -> bool {
    if ctr.exhausted() {
        return false;
    }
    let Some(model) = LinearModel::fit(pts, k) else { return false };
    let radius = delta.max(rho);
    let (far, dist) = pts
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != k)
        .map(|(i, pt)| (i, (&pt.z - &pts[k].z).amax()))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap_or((k, 0.0));
    if far == k || dist <= 2.0 * radius {
        return false;
    }
    let xk = pts[k].z.clone();
    // Lagrange polynomial of the far point: ℓ(y) = aᵀ(y − y_k), with `a` a
    // column of the inverse displacement matrix.
    let j = model.others.iter().position(|&i| i == far).unwrap_or(0);
    let a = model.inv_disp.column(j).into_owned();
    let mut best: Option<(f64, DVector<f64>)> = None;
    for sign in [1.0, -1.0] {
        let z = DVector::from_iterator(
            xk.len(),
            (0..xk.len()).map(|i| {
                let s = if a[i] >= 0.0 { sign } else { -sign };
                (xk[i] + s * radius).clamp(0.0, zmax[i])
            }),
        );
        let val = a.dot(&(&z - &xk)).abs();
        if best.as_ref().is_none_or(|(v, _)| val > *v) {
            best = Some((val, z));
        }
    }
    let Some((val, z)) = best else { return false };
    if val <= 1e-12 {
        return false;
    }
    let (r, cost) = ctr.eval(&z);
    pts[far] = Point { z, r, cost };
    true
}

/// Minimises `gᵀs + ½ sᵀHs` over `lo ≤ s ≤ hi` (with `lo ≤ 0 ≤ hi`) by a
/// projected Newton active-set iteration.
fn box_qp(h: &DMatrix<f64>, g: &DVector<f64>, lo: &DVector<f64>, hi: &DVector<f64>) -> DVector<f64> {
    let p = g.len();
    let q = |s: &DVector<f64>| g.dot(s) + 0.5 * s.dot(&(h * s));
    let ridge = 1e-12 * (h.trace() / p as f64).max(1e-300);
    let mut s = DVector::zeros(p);
    for _ in 0..(4 * p + 20) {
        let grad = g + h * &s;
        let tol = 1e-14;
        let free: Vec<usize> = (0..p)
            .filter(|&i| !((s[i] <= lo[i] + tol && grad[i] > 0.0) || (s[i] >= hi[i] - tol && grad[i] < 0.0)))
            .collect();
        if free.is_empty() {
            break;
        }
        let nf = free.len();
        let mut hff = DMatrix::zeros(nf, nf);
        let mut gf = DVector::zeros(nf);
        for (a, &i) in free.iter().enumerate() {
            gf[a] = grad[i];
            for (b, &j) in free.iter().enumerate() {
                hff[(a, b)] = h[(i, j)];
            }
            hff[(a, a)] += ridge;
        }
        let dir_f = match hff.clone().cholesky() {
            Some(ch) => -ch.solve(&gf),
            None => -gf.clone(),
        };
        let mut dir = DVector::zeros(p);
        for (a, &i) in free.iter().enumerate() {
            dir[i] = dir_f[a];
        }
        if dir.amax() <= 1e-15 * (1.0 + s.amax()) {
            break;
        }
        let q0 = q(&s);
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let trial = DVector::from_iterator(p, (0..p).map(|i| (s[i] + t * dir[i]).clamp(lo[i], hi[i])));
            let qt = q(&trial);
            if qt <= q0 + 1e-4 * grad.dot(&(&trial - &s)) {
                accepted = Some((trial, qt));
                break;
            }
            t *= 0.5;
        }
        match accepted {
            Some((trial, qt)) => {
                let moved = (&trial - &s).amax();
                s = trial;
                if moved <= 1e-15 || q0 - qt <= 1e-16 * q0.abs().max(1e-300) {
                    break;
                }
            }
            None => break,
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_linear_least_squares() {
        // r(x) = A x − b with a known minimiser inside the box
        let outcome = minimize_least_squares(
            |x| vec![x[0] + 2.0 * x[1] - 1.0, 3.0 * x[0] - x[1] - 2.0, x[0] + x[1] - 1.0],
            &[0.0, 0.0],
            &[(-5.0, 5.0), (-5.0, 5.0)],
            &DfoOptions::default(),
        )
        .unwrap();
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 3.0, -1.0, 1.0, 1.0]);
        let b = DVector::from_vec(vec![1.0, 2.0, 1.0]);
        let exact = (a.transpose() * &a).try_inverse().unwrap() * a.transpose() * b;
        assert!((outcome.x[0] - exact[0]).abs() < 1e-6);
        assert!((outcome.x[1] - exact[1]).abs() < 1e-6);
        assert!(outcome.converged);
    }

    #[test]
    fn rosenbrock_residuals() {
        let outcome = minimize_least_squares(
            |x| vec![10.0 * (x[1] - x[0] * x[0]), 1.0 - x[0]],
            &[-1.2, 1.0],
            &[(-2.0, 2.0), (-2.0, 2.0)],
            &DfoOptions { max_evals: 4000, ..Default::default() },
        )
        .unwrap();
        assert!(outcome.cost < 1e-12, "cost {}", outcome.cost);
        assert!((outcome.x[0] - 1.0).abs() < 1e-5);
    }

    #[test]
    fn respects_active_bounds() {
        // unconstrained minimum at (3, −3); box clips it
        let outcome = minimize_least_squares(
            |x| vec![x[0] - 3.0, x[1] + 3.0],
            &[0.0, 0.0],
            &[(-1.0, 1.0), (-2.0, 2.0)],
            &DfoOptions::default(),
        )
        .unwrap();
        assert!((outcome.x[0] - 1.0).abs() < 1e-9);
        assert!((outcome.x[1] + 2.0).abs() < 1e-9);
    }

    #[test]
    fn history_is_monotone_and_budget_respected() {
        let mut calls = 0;
        let outcome = minimize_least_squares(
            |x| {
                calls += 1;
                vec![(x[0] * 3.0).sin() + x[1], x[0] * x[1] - 0.3, x[2] - x[0]]
            },
            &[0.5, 0.5, 0.5],
            &[(-1.0, 1.0); 3],
            &DfoOptions { max_evals: 37, ..Default::default() },
        )
        .unwrap();
        assert!(outcome.evals <= 37);
        assert_eq!(outcome.evals, calls);
        for w in outcome.history.windows(2) {
            assert!(w[1].1 < w[0].1);
            assert!(w[1].0 > w[0].0);
        }
    }

    #[test]
    fn zero_cost_start_returns_immediately() {
        let outcome = minimize_least_squares(|x| vec![x[0]], &[0.0], &[(-1.0, 1.0)], &DfoOptions::default()).unwrap();
        assert_eq!(outcome.evals, 1);
        assert_eq!(outcome.cost, 0.0);
        assert!(outcome.converged);
    }

    #[test]
    fn rejects_bad_bounds() {
        let err = minimize_least_squares(|x| vec![x[0]], &[0.0], &[(1.0, -1.0)], &DfoOptions::default());
        assert!(err.is_err());
    }

    #[test]
    fn box_qp_matches_clipped_solution_for_diagonal() {
        let h = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 1.0]));
        let g = DVector::from_vec(vec![-4.0, 1.0]);
        let s = box_qp(&h, &g, &DVector::from_vec(vec![-1.0, -0.5]), &DVector::from_vec(vec![1.0, 0.5]));
        assert!((s[0] - 1.0).abs() < 1e-12);
        assert!((s[1] + 0.5).abs() < 1e-12);
    }
}
