use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;
use wetsim::channel::*;
use wetsim::mc::ks_distance;
use wetsim::specfun::NoncentralChi2;

fn brute_delta(c: &CorrelationMatrix) -> f64 {
    let r = c.entries();
    let mut s = 0.0;
    for i in 0..r.nrows() {
        for j in 0..r.ncols() {
            s += r[(i, j)];
        }
    }
    s
}

proptest! {
    #[test]
    fn exponential_delta_is_entry_sum(m in 1usize..24, tau in 0.0f64..=1.0) {
        let c = CorrelationMatrix::exponential(m, tau).unwrap();
        let b = brute_delta(&c);
        prop_assert!((c.delta() - b).abs() <= 1e-12 * b.max(1.0));
    }

    #[test]
    fn uniform_delta_is_entry_sum(m in 2usize..24, t in 0.0f64..=1.0) {
        let lo = -1.0 / (m as f64 - 1.0);
        let rho = lo + t * (1.0 - lo);
        let c = CorrelationMatrix::uniform(m, rho).unwrap();
        let b = brute_delta(&c);
        prop_assert!((c.delta() - b).abs() <= 1e-12 * (m * m) as f64);
    }

    #[test]
    fn uniform_eigenvalues_match_solver(m in 2usize..24, t in 0.0f64..=1.0) {
        let lo = -1.0 / (m as f64 - 1.0);
        let rho = lo + t * (1.0 - lo);
        let c = CorrelationMatrix::uniform(m, rho).unwrap();
        let mut num: Vec<f64> = SymmetricEigen::new(c.entries().clone()).eigenvalues.iter().copied().collect();
        let mut closed = uniform_corr_eigen(m, rho).unwrap();
        num.sort_by(f64::total_cmp);
        closed.sort_by(f64::total_cmp);
        for (a, b) in num.iter().zip(&closed) {
            prop_assert!((a - b).abs() <= 1e-10, "{a} vs {b}");
        }
    }

    #[test]
    fn factor_reproduces_matrix(m in 1usize..12, tau in 0.0f64..=1.0) {
        let c = CorrelationMatrix::exponential(m, tau).unwrap();
        let l = corr_factor(&c).unwrap();
        let r = &l * l.transpose();
        prop_assert!((r - c.entries()).abs().max() <= 1e-10);
    }

    #[test]
    fn equivalent_rho_preserves_delta(m in 2usize..20, tau in 0.0f64..=1.0) {
        let c = CorrelationMatrix::exponential(m, tau).unwrap();
        let e = equivalent_uniform_rho(&c).unwrap();
        prop_assert!(e.in_range);
        let u = CorrelationMatrix::uniform(m, e.rho.clamp(-1.0 / (m as f64 - 1.0), 1.0)).unwrap();
        prop_assert!((u.delta() - c.delta()).abs() <= 1e-9 * c.delta());
    }
}

#[test]
fn rejects_invalid_matrices() {
    assert!(CorrelationMatrix::uniform(4, -0.5).is_err());
    assert!(CorrelationMatrix::uniform(4, 1.01).is_err());
    assert!(CorrelationMatrix::exponential(4, 1.5).is_err());
    assert!(CorrelationMatrix::identity(0).is_err());
    let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.2, 1.0]);
    assert!(CorrelationMatrix::custom(asym).is_err());
    let not_psd = DMatrix::from_row_slice(3, 3, &[1.0, 0.9, -0.9, 0.9, 1.0, 0.9, -0.9, 0.9, 1.0]);
    assert!(CorrelationMatrix::custom(not_psd).is_err());
    assert!(rician_params(-0.1).is_err());
}

#[test]
fn envelope_follows_rician_law() {
    for (idx, kappa) in [0.0, 1.0, 3.0].into_iter().enumerate() {
        let c = CorrelationMatrix::identity(4).unwrap();
        let mut s = ChannelSampler::new(&c, &rician_params(kappa).unwrap()).unwrap();
        let mut rng = RngStream::new(42, idx as u64);
        let env: Vec<f64> = (0..1_000_000).map(|_| s.sample(&mut rng).power(0).sqrt()).collect();
        // |h|² = χ²(2, 2κ) / (2(1+κ))
        let law = NoncentralChi2::new(2.0, 2.0 * kappa).unwrap();
        let d = ks_distance(&env, |r| law.cdf(2.0 * (1.0 + kappa) * r * r).unwrap());
        assert!(d <= 0.003, "kappa={kappa}: KS {d}");
    }
}

#[test]
fn sample_second_moments() {
    let (m, kappa) = (3, 2.0);
    let c = CorrelationMatrix::exponential(m, 0.6).unwrap();
    let mut s = ChannelSampler::new(&c, &rician_params(kappa).unwrap()).unwrap();
    let mut rng = RngStream::new(5, 0);
    let n = 400_000;
    let mut cov = DMatrix::<f64>::zeros(m, m);
    let mut mean_re = vec![0.0; m];
    let mut mean_im = vec![0.0; m];
    for _ in 0..n {
        let h = s.sample(&mut rng);
        for i in 0..m {
            mean_re[i] += h.real_part[i] / n as f64;
            mean_im[i] += h.imag_part[i] / n as f64;
            for j in 0..m {
                let z = h.coefficient(i) * h.coefficient(j).conj();
                cov[(i, j)] += z.re / n as f64;
            }
        }
    }
    // LOS split evenly over real and imaginary parts; E[h hᴴ] = (κ 11ᵀ + R)/(1+κ)
    let half = (kappa / (2.0 * (1.0 + kappa))).sqrt();
    for i in 0..m {
        assert!((mean_re[i] - half).abs() < 5e-3 && (mean_im[i] - half).abs() < 5e-3);
        for j in 0..m {
            let want = (kappa + c.entries()[(i, j)]) / (1.0 + kappa);
            assert!((cov[(i, j)] - want).abs() < 1e-2, "({i},{j}) {} vs {want}", cov[(i, j)]);
        }
    }
}

#[test]
fn streams_are_reproducible_and_distinct() {
    let c = CorrelationMatrix::identity(4).unwrap();
    let p = rician_params(1.0).unwrap();
    let a = sample_channel(&c, &p, &mut RngStream::new(1, 3)).unwrap();
    let b = sample_channel(&c, &p, &mut RngStream::new(1, 3)).unwrap();
    let d = sample_channel(&c, &p, &mut RngStream::new(1, 4)).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, d);
}
