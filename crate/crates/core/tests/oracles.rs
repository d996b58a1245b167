use fockml::circuit::{reck_unitary, MeshParams};
use fockml::fock::{output_amplitudes, enumerate_fock_basis, FockState};
use fockml::model::{dof_pnr, dof_threshold, m_min};
use num_complex::Complex64;

#[test]
fn column_amplitudes_match_operator_expansion() {
    for (m, seed) in [(2usize, 1.0f64), (3, 2.0), (4, 3.0)] {
        let params = MeshParams((0..m * (m - 1)).map(|i| (seed + i as f64 * 1.7).sin() * 3.0).collect());
        let u = reck_unitary(&params, m).unwrap();
        let rows: Vec<Vec<Complex64>> = (0..m).map(|i| (0..m).map(|j| u[(i, j)]).collect()).collect();
        for n in 1..=3 {
            let basis = enumerate_fock_basis(m, n).unwrap();
            for input in basis.iter() {
                let amps = output_amplitudes(&u, &basis, input).unwrap();
                for (out, a) in basis.iter().zip(&amps) {
                    let expected = fockml_oracles::mode_operator_amplitude(&rows, input.occupations(), out.occupations());
                    assert!((a - expected).norm() < 1e-12, "{input:?} -> {out:?}");
                }
                let total: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
                assert!((total - 1.0).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn basis_sizes_match_brute_force_enumeration() {
    for m in 1..=4 {
        for n in 0..=5 {
            assert_eq!(enumerate_fock_basis(m, n).unwrap().len(), fockml_oracles::all_states(m, n).len());
        }
    }
    assert_eq!(enumerate_fock_basis(3, 2).unwrap().states()[0], FockState::new(vec![2, 0, 0]));
}

#[test]
fn degrees_of_freedom() {
    for n in 0..=15 {
        assert_eq!(dof_pnr(3, n), fockml_oracles::three_mode_pnr_dof(n));
    }
    assert_eq!(m_min(0), 1);
    assert_eq!(m_min(9), 19);
    assert_eq!(dof_threshold(3, 9), 19);
    assert!(dof_threshold(3, 10) < m_min(10));
}
