//! Fock states, the canonical n-photon basis, matrix permanents and the
//! lifting of mode unitaries to Fock space.
//!
//! Basis order is reverse-lexicographic on occupation vectors: for three
//! modes and three photons the basis starts at `(3,0,0)` and ends at
//! `(0,0,3)`. Observables index into this order, so it must not change.

use std::collections::HashMap;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;

/// Largest photon number supported by the factorial table.
pub const MAX_PHOTONS: usize = 20;

/// Frobenius tolerance used when accepting a mode unitary.
/// Largest Fock space the simulator will enumerate.
pub const MAX_BASIS_STATES: u64 = 2_000_000;

pub const UNITARITY_TOL: f64 = 1e-10;

const FACTORIALS: [f64; MAX_PHOTONS + 1] = {
    let mut table = [1.0; MAX_PHOTONS + 1];
    let mut i = 1;
    while i <= MAX_PHOTONS {
        table[i] = table[i - 1] * i as f64;
        i += 1;
    }
    table
};

pub fn factorial(n: usize) -> Result<f64> {
    FACTORIALS.get(n).copied().ok_or(Error::TooManyPhotons { photons: n, max: MAX_PHOTONS })
}

/// `C(n, k)`, saturating at `u64::MAX`.
pub fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

/// Occupation numbers of a multimode Fock state.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FockState(Vec<usize>);

impl FockState {
    pub fn new(occupations: Vec<usize>) -> Self {
        Self(occupations)
    }

    /// All photons in the first mode.
    pub fn first_mode(modes: usize, photons: usize) -> Self {
        let mut occ = vec![0; modes];
        if let Some(first) = occ.first_mut() {
            *first = photons;
        }
        Self(occ)
    }

    pub fn modes(&self) -> usize {
        self.0.len()
    }

    pub fn photons(&self) -> usize {
        self.0.iter().sum()
    }

    pub fn occupations(&self) -> &[usize] {
        &self.0
    }

    /// `Π_i n_i!`
    pub fn factorial_product(&self) -> Result<f64> {
        self.0.iter().try_fold(1.0, |acc, &n| Ok(acc * factorial(n)?))
    }

    /// Bitmask of modes holding at least one photon.
    pub fn click_mask(&self) -> u64 {
        self.0.iter().enumerate().filter(|(_, &n)| n > 0).fold(0, |acc, (i, _)| acc | (1 << i))
    }
}

impl fmt::Debug for FockState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|")?;
        for (i, n) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{n}")?;
        }
        write!(f, "⟩")
    }
}

impl fmt::Display for FockState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for n in &self.0 {
            write!(f, "{n}")?;
        }
        Ok(())
    }
}

impl From<Vec<usize>> for FockState {
    fn from(v: Vec<usize>) -> Self {
        Self(v)
    }
}

/// The ordered basis of all `photons`-photon states over `modes` modes.
#[derive(Clone, Debug)]
pub struct FockBasis {
    modes: usize,
    photons: usize,
    states: Vec<FockState>,
    index: HashMap<FockState, usize>,
}

impl FockBasis {
    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn photons(&self) -> usize {
        self.photons
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[FockState] {
        &self.states
    }

    pub fn get(&self, i: usize) -> Option<&FockState> {
        self.states.get(i)
    }

    pub fn index_of(&self, state: &FockState) -> Option<usize> {
        self.index.get(state).copied()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, FockState> {
        self.states.iter()
    }
}

/// Enumerates all compositions of `photons` into `modes` parts in
/// reverse-lexicographic order.
pub fn enumerate_fock_basis(modes: usize, photons: usize) -> Result<FockBasis> {
    if modes == 0 {
        return Err(Error::ZeroModes);
    }
    let size = binomial((photons as u64).saturating_add(modes as u64 - 1), photons as u64);
    if size > MAX_BASIS_STATES {
        return Err(Error::BasisTooLarge { states: size, max: MAX_BASIS_STATES });
    }
    let mut states = Vec::with_capacity(size as usize);
    let mut current = vec![0; modes];
    fill_compositions(&mut current, 0, photons, &mut states);
    let index = states.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect();
    Ok(FockBasis { modes, photons, states, index })
}

fn fill_compositions(current: &mut Vec<usize>, mode: usize, remaining: usize, out: &mut Vec<FockState>) {
    if mode + 1 == current.len() {
        current[mode] = remaining;
        out.push(FockState(current.clone()));
        return;
    }
    for k in (0..=remaining).rev() {
        current[mode] = k;
        fill_compositions(current, mode + 1, remaining - k, out);
    }
    current[mode] = 0;
}

/// Permanent of a square matrix by Ryser's formula with Gray-code subset
/// iteration, `O(2^k · k)`.
pub fn permanent(a: &ComplexMatrix) -> Result<Complex64> {
    if !a.is_square() {
        return Err(Error::NotSquare { rows: a.rows(), cols: a.cols() });
    }
    Ok(ryser(a))
}

fn ryser(a: &ComplexMatrix) -> Complex64 {
    let k = a.rows();
    match k {
        0 => return Complex64::new(1.0, 0.0),
        1 => return a[(0, 0)],
        2 => return a[(0, 0)] * a[(1, 1)] + a[(0, 1)] * a[(1, 0)],
        _ => {}
    }
    assert!(k < 64, "permanent of a {k}x{k} matrix is out of reach");
    let mut row_sums = vec![Complex64::new(0.0, 0.0); k];
    let mut total = Complex64::new(0.0, 0.0);
    let mut subset: u64 = 0;
    for g in 1u64..(1u64 << k) {
        // Gray code step: flip the lowest set bit of g.
        let j = g.trailing_zeros() as usize;
        let bit = 1u64 << j;
        let adding = subset & bit == 0;
        subset ^= bit;
        for (i, s) in row_sums.iter_mut().enumerate() {
            if adding {
                *s += a[(i, j)];
            } else {
                *s -= a[(i, j)];
            }
        }
        let prod = row_sums.iter().fold(Complex64::new(1.0, 0.0), |acc, &s| acc * s);
        if subset.count_ones() % 2 == 1 {
            total -= prod;
        } else {
            total += prod;
        }
    }
    if k % 2 == 1 {
        -total
    } else {
        total
    }
}

fn check_mode_unitary_shape(u: &ComplexMatrix, modes: usize) -> Result<()> {
    if !u.is_square() {
        return Err(Error::NotSquare { rows: u.rows(), cols: u.cols() });
    }
    if u.rows() != modes {
        return Err(Error::DimensionMismatch { expected: modes, got: u.rows() });
    }
    Ok(())
}

/// `⟨output| 𝒰 |input⟩` for the Fock-space representation 𝒰 of the mode
/// transformation `U`, with creation operators mapping as `a_j† → Σ_i U_ij a_i†`.
pub fn transition_amplitude(u: &ComplexMatrix, input: &FockState, output: &FockState) -> Result<Complex64> {
    if input.modes() != output.modes() {
        return Err(Error::DimensionMismatch { expected: input.modes(), got: output.modes() });
    }
    check_mode_unitary_shape(u, input.modes())?;
    let n = input.photons();
    if n != output.photons() {
        return Err(Error::PhotonMismatch { input: n, output: output.photons() });
    }
    if n > MAX_PHOTONS {
        return Err(Error::TooManyPhotons { photons: n, max: MAX_PHOTONS });
    }
    let norm = (input.factorial_product()? * output.factorial_product()?).sqrt();
    Ok(repeated_permanent(u, output.occupations(), input.occupations()) / norm)
}

/// Permanent of the matrix that repeats row `i` of `u` `rows[i]` times and
/// column `j` `cols[j]` times.
///
/// Ryser's sum grouped by how many copies of each column are chosen:
/// `(−1)^n Σ_k Π_j (−1)^{k_j} C(s_j, k_j) · Π_i (Σ_j k_j u_ij)^{r_i}`.
/// The cost is `Π (s_j + 1)` terms over the cheaper side instead of `2^n`.
pub fn repeated_permanent(u: &ComplexMatrix, rows: &[usize], cols: &[usize]) -> Complex64 {
    let row_terms: usize = rows.iter().map(|r| r + 1).product();
    let col_terms: usize = cols.iter().map(|s| s + 1).product();
    if row_terms < col_terms {
        return grouped_ryser(rows, cols, |col, row| u[(row, col)]);
    }
    grouped_ryser(cols, rows, |i, j| u[(i, j)])
}

/// `cols[j]` copies of column `j`, `rows[i]` copies of row `i`; `entry(i, j)`.
fn grouped_ryser(cols: &[usize], rows: &[usize], entry: impl Fn(usize, usize) -> Complex64) -> Complex64 {
    let active_cols: Vec<usize> = (0..cols.len()).filter(|&j| cols[j] > 0).collect();
    let active_rows: Vec<usize> = (0..rows.len()).filter(|&i| rows[i] > 0).collect();
    let n: usize = cols.iter().sum();
    let mut counts = vec![0usize; active_cols.len()];
    let mut total = Complex64::new(0.0, 0.0);
    loop {
        let chosen: usize = counts.iter().sum();
        let weight: f64 = active_cols.iter().zip(&counts).map(|(&j, &k)| binomial(cols[j] as u64, k as u64) as f64).product();
        let mut term = Complex64::new(weight, 0.0);
        for &i in &active_rows {
            let s: Complex64 = active_cols.iter().zip(&counts).map(|(&j, &k)| entry(i, j) * k as f64).sum();
            term *= s.powu(rows[i] as u32);
        }
        if (n - chosen) % 2 == 1 {
            total -= term;
        } else {
            total += term;
        }
        let mut pos = 0;
        loop {
            if pos == counts.len() {
                return total;
            }
            if counts[pos] < cols[active_cols[pos]] {
                counts[pos] += 1;
                break;
            }
            counts[pos] = 0;
            pos += 1;
        }
    }
}

/// Amplitudes `⟨b| 𝒰 |input⟩` for every state `b` of `basis`, in basis order.
///
/// This is a single column of the lifted unitary and costs `d` permanents
/// instead of `d²`. No unitarity check is made.
pub fn output_amplitudes(u: &ComplexMatrix, basis: &FockBasis, input: &FockState) -> Result<Vec<Complex64>> {
    if input.modes() != basis.modes() {
        return Err(Error::DimensionMismatch { expected: basis.modes(), got: input.modes() });
    }
    if input.photons() != basis.photons() {
        return Err(Error::PhotonMismatch { input: input.photons(), output: basis.photons() });
    }
    check_mode_unitary_shape(u, basis.modes())?;
    if basis.photons() > MAX_PHOTONS {
        return Err(Error::TooManyPhotons { photons: basis.photons(), max: MAX_PHOTONS });
    }
    let in_fact = input.factorial_product()?;
    basis
        .iter()
        .map(|out| {
            let norm = (in_fact * out.factorial_product()?).sqrt();
            Ok(repeated_permanent(u, out.occupations(), input.occupations()) / norm)
        })
        .collect()
}

/// Lifts a unitary `m×m` mode transformation to the `d×d` matrix acting on
/// the `n`-photon Fock space. Entry `[a, b]` is `⟨basis[a]| 𝒰 |basis[b]⟩`.
pub fn lift_unitary(u: &ComplexMatrix, basis: &FockBasis) -> Result<ComplexMatrix> {
    check_mode_unitary_shape(u, basis.modes())?;
    let deviation = u.unitarity_deviation();
    if deviation.is_nan() || deviation > UNITARITY_TOL {
        return Err(Error::NotUnitary { deviation });
    }
    let d = basis.len();
    let mut lifted = ComplexMatrix::zeros(d, d);
    for (b, input) in basis.iter().enumerate() {
        for (a, amp) in output_amplitudes(u, basis, input)?.into_iter().enumerate() {
            lifted[(a, b)] = amp;
        }
    }
    Ok(lifted)
}
