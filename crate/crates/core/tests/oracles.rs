//! Cross-checks against independent constructions: brute-force quadrature,
//! explicit operator algebra on occupation vectors, closed forms.

use std::f64::consts::PI;

use num_complex::Complex64;

use fewboson::{
    ground_state, solve_one_body, DensityProbe, Exec, FockBasis, GridSpec, InteractionTensor,
    ManyBodyState, ManyBodySystem, MomentumGrid, MomentumProbe, OneBodyDensity,
};

fn triple(n_orb: usize) -> fewboson::SinglePartBasis {
    solve_one_body(&GridSpec::new(3, 90, 10.0).unwrap(), n_orb).unwrap()
}

#[test]
fn interaction_tensor_matches_quadrature() {
    let basis = triple(6);
    let u = InteractionTensor::new(&basis);
    let h = basis.grid().spacing();
    let n = basis.grid().n_points();
    for (a, b, c, d) in [(0, 0, 0, 0), (0, 1, 1, 0), (2, 2, 1, 1), (3, 4, 5, 0), (5, 5, 5, 5), (1, 3, 2, 4)] {
        let want: f64 = h * (0..n)
            .map(|i| basis.orbital(a)[i] * basis.orbital(b)[i] * basis.orbital(c)[i] * basis.orbital(d)[i])
            .sum::<f64>();
        assert!((u.get(a, b, c, d) - want).abs() < 1e-12, "U_{a}{b}{c}{d}");
    }
}

#[test]
fn box_orbitals_match_closed_forms() {
    // L = pi box: eps_j = kin j^2, U_0000 = 3 / (2 pi), U_0011 = 1 / pi
    let g = GridSpec::new(1, 200, 0.0).unwrap();
    let basis = solve_one_body(&g, 3).unwrap();
    for (j, e) in basis.energies().iter().enumerate() {
        let want = g.kinetic() * ((j + 1) as f64).powi(2);
        assert!((e - want).abs() < 1e-10 * want, "level {j}: {e} vs {want}");
    }
    let u = InteractionTensor::new(&basis);
    assert!((u.get(0, 0, 0, 0) - 1.5 / PI).abs() < 1e-6);
    assert!((u.get(0, 0, 1, 1) - 1.0 / PI).abs() < 1e-6);
}

/// `<t| a_a^+ a_b^+ a_c a_d |s>` applied to occupation vectors.
fn two_body(occ: &[u8], a: usize, b: usize, c: usize, d: usize) -> Option<(Vec<u8>, f64)> {
    let mut o: Vec<i32> = occ.iter().map(|&x| x as i32).collect();
    let mut amp = 1.0;
    for (k, create) in [(d, false), (c, false), (b, true), (a, true)] {
        if create {
            o[k] += 1;
            amp *= (o[k] as f64).sqrt();
        } else {
            if o[k] == 0 {
                return None;
            }
            amp *= (o[k] as f64).sqrt();
            o[k] -= 1;
        }
    }
    Some((o.into_iter().map(|x| x as u8).collect(), amp))
}

#[test]
fn dense_hamiltonian_matches_operator_algebra() {
    let basis = triple(6);
    let sys = ManyBodySystem::new(&basis, 3).unwrap();
    let fock = FockBasis::new(3, 6).unwrap();
    let u = InteractionTensor::new(&basis);
    let g = 1.7;
    let dim = fock.len();
    let mut want = vec![0.0; dim * dim];
    for (s, occ) in fock.states().enumerate() {
        want[s * dim + s] += occ
            .iter()
            .zip(basis.energies())
            .map(|(&n, e)| n as f64 * e)
            .sum::<f64>();
        for a in 0..6 {
            for b in 0..6 {
                for c in 0..6 {
                    for d in 0..6 {
                        if let Some((t, amp)) = two_body(occ, a, b, c, d) {
                            let t = fock.index_of(&t).unwrap();
                            want[t * dim + s] += 0.5 * g * u.get(a, b, c, d) * amp;
                        }
                    }
                }
            }
        }
    }
    let got = sys.operator(g).to_dense(Exec::Sequential);
    for t in 0..dim {
        for s in 0..dim {
            assert!((got.read(t, s) - want[t * dim + s]).abs() < 1e-11, "H[{t},{s}]");
        }
    }
}

#[test]
fn single_orbital_momentum_matches_direct_transform() {
    let basis = triple(9);
    let grid = MomentumGrid::symmetric(4.0, 81).unwrap();
    let probe = MomentumProbe::new(&basis, grid.clone());
    let x = basis.grid().points();
    let h = basis.grid().spacing();
    for a in [0, 4, 8] {
        let mut c = vec![Complex64::new(0.0, 0.0); 9];
        c[a] = Complex64::new(1.0, 0.0);
        let nk = probe.distribution(&OneBodyDensity::pure(&c));
        for (k, got) in grid.k.iter().zip(&nk) {
            let amp: Complex64 = x
                .iter()
                .zip(basis.orbital(a))
                .map(|(xi, f)| Complex64::from_polar(h * f, -k * xi))
                .sum();
            let want = amp.norm_sqr() / (2.0 * PI);
            assert!((got - want).abs() < 1e-4, "orbital {a}, k = {k}: {got} vs {want}");
        }
    }
}

#[test]
fn single_boson_density_is_a_projector() {
    // one boson: the one-body density of an orbital superposition is the
    // outer product of its coefficients
    let basis = triple(3);
    let sys = ManyBodySystem::new(&basis, 1).unwrap();
    let c = [0.6, -0.48, 0.64];
    let psi = ManyBodyState::from_real(&c, 0.0);
    let d = DensityProbe::new(sys.fock()).density(&psi);
    // single-boson Fock states are ordered by the occupied orbital
    for a in 0..3 {
        for b in 0..3 {
            let ia = sys.fock().index_of(&unit(a)).unwrap();
            let ib = sys.fock().index_of(&unit(b)).unwrap();
            assert!((d.get(a, b).re - c[ia] * c[ib]).abs() < 1e-14);
        }
    }
    let occ = d.natural_occupations();
    assert!((occ[2] - 1.0).abs() < 1e-12 && occ[0].abs() < 1e-12);
    // without interaction the ground energy is N eps_0
    let (e, _) = ground_state(&ManyBodySystem::new(&basis, 2).unwrap(), 0.0, Exec::Sequential).unwrap();
    assert!((e - 2.0 * basis.energies()[0]).abs() < 1e-10);
}

fn unit(a: usize) -> Vec<u8> {
    let mut v = vec![0u8; 3];
    v[a] = 1;
    v
}
